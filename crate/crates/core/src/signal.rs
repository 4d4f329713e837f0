//! Composable scalar time signals used as inputs and as output references.
//!
//! Every piecewise signal is right-continuous: at a jump time the value of the
//! segment that starts there is returned. Integrators that need the left
//! limit evaluate at the previous representable time.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::models::{f_inv_solve, ModelParams};
use crate::nonlinearity::StaticNonlinearity;

/// Half-width of an impulse support in units of the width `a`.
pub const IMPULSE_SUPPORT: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImpulseShape {
    /// `sqrt(exp(-(x/a)^2) / (a sqrt(pi)))`, the square root of a nascent delta.
    SqrtDelta,
    /// `exp(-(x/a)^2) / (a sqrt(pi))`.
    Delta,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
#[derive(Default)]
pub enum InputSignal {
    #[default]
    Zero,
    Constant {
        value: f64,
    },
    /// `amplitude sin(omega t + phase)`.
    Sinusoid {
        amplitude: f64,
        omega: f64,
        #[serde(default)]
        phase: f64,
    },
    /// `sum_n eps_n k(t - start - n period)`; the last magnitude repeats once the list runs out.
    ImpulseTrain {
        start: f64,
        period: f64,
        magnitudes: Vec<f64>,
        width: f64,
        shape: ImpulseShape,
    },
    /// `magnitude` on `[start + n period, start + n period + duration)`, zero elsewhere.
    SquarePulseTrain {
        magnitude: f64,
        duration: f64,
        period: f64,
        #[serde(default)]
        start: f64,
    },
    /// Linear interpolation through `(t, value)` knots. Repeating a knot time
    /// encodes a jump. Periodic signals repeat with period `t_last - t_first`;
    /// others hold their end values.
    PiecewiseLinear {
        knots: Vec<[f64; 2]>,
        #[serde(default)]
        periodic: bool,
    },
    /// Cubic Hermite interpolation through `(t, value, slope)` knots.
    Hermite {
        knots: Vec<[f64; 3]>,
        #[serde(default)]
        periodic: bool,
    },
    /// `gain map(amplitude sin(omega t + phase))`.
    ShapedSine {
        map: StaticNonlinearity,
        amplitude: f64,
        omega: f64,
        #[serde(default)]
        phase: f64,
        gain: f64,
    },
    Sum {
        terms: Vec<InputSignal>,
    },
    /// `u = f_inv(t, x, z, y^(r))` with `x` the first `r` derivatives of
    /// `reference` and `z` interpolated from `(t, z_i, z_i')` Hermite samples,
    /// one table per internal state.
    Feedforward {
        model: ModelParams,
        reference: Box<InputSignal>,
        internal: Vec<Vec<[f64; 3]>>,
    },
}


/// Maps `t` into `[t_first, t_last)` for periodic knot tables.
fn wrap(t: f64, first: f64, last: f64) -> f64 {
    let period = last - first;
    if period <= 0.0 {
        return first;
    }
    let w = first + (t - first).rem_euclid(period);
    if w >= last {
        first
    } else {
        w
    }
}

/// Index `k` of the segment `[t_k, t_{k+1})` containing `t`, choosing the
/// last knot at or before `t` so that repeated knot times act as jumps.
fn segment<const N: usize>(knots: &[[f64; N]], t: f64) -> usize {
    let k = knots.partition_point(|kn| kn[0] <= t);
    k.saturating_sub(1).min(knots.len().saturating_sub(2))
}

fn sqrt_delta(x: f64, a: f64) -> f64 {
    (a * PI.sqrt()).powf(-0.5) * (-0.5 * (x / a).powi(2)).exp()
}

fn delta(x: f64, a: f64) -> f64 {
    (-(x / a).powi(2)).exp() / (a * PI.sqrt())
}

impl InputSignal {
    pub fn sum(terms: Vec<InputSignal>) -> Self {
        Self::Sum { terms }
    }

    pub fn value(&self, t: f64) -> f64 {
        match self {
            Self::Zero => 0.0,
            Self::Constant { value } => *value,
            Self::Sinusoid { amplitude, omega, phase } => amplitude * (omega * t + phase).sin(),
            Self::ImpulseTrain { start, period, magnitudes, width, shape } => {
                match impulse_offset(t, *start, *period, *width) {
                    Some((n, x)) => {
                        let eps = magnitude_at(magnitudes, n);
                        match shape {
                            ImpulseShape::SqrtDelta => eps * sqrt_delta(x, *width),
                            ImpulseShape::Delta => eps * delta(x, *width),
                        }
                    }
                    None => 0.0,
                }
            }
            Self::SquarePulseTrain { magnitude, duration, period, start } => {
                if t < *start {
                    return 0.0;
                }
                let phase = (t - start).rem_euclid(*period);
                if phase < *duration {
                    *magnitude
                } else {
                    0.0
                }
            }
            Self::PiecewiseLinear { knots, periodic } => pwl_eval(knots, *periodic, t, 0),
            Self::Hermite { knots, periodic } => hermite_eval(knots, *periodic, t, 0),
            Self::ShapedSine { map, amplitude, omega, phase, gain } => {
                gain * map.eval(amplitude * (omega * t + phase).sin())
            }
            Self::Sum { terms } => terms.iter().map(|s| s.value(t)).sum(),
            Self::Feedforward { model, reference, internal } => {
                feedforward_value(model, reference, internal, t).unwrap_or(f64::NAN)
            }
        }
    }

    /// Right derivative of the given order (order 0 is the value).
    pub fn derivative(&self, t: f64, order: usize) -> Result<f64> {
        if order == 0 {
            return Ok(self.value(t));
        }
        let unsupported = Err(Error::UnsupportedDerivative { order });
        match self {
            Self::Zero | Self::Constant { .. } => Ok(0.0),
            Self::Sinusoid { amplitude, omega, phase } => {
                let arg = omega * t + phase + order as f64 * PI / 2.0;
                Ok(amplitude * omega.powi(order as i32) * arg.sin())
            }
            Self::ImpulseTrain { start, period, magnitudes, width, shape } => {
                if order > 1 {
                    return unsupported;
                }
                Ok(match impulse_offset(t, *start, *period, *width) {
                    Some((n, x)) => {
                        let eps = magnitude_at(magnitudes, n);
                        let a2 = width * width;
                        match shape {
                            ImpulseShape::SqrtDelta => -eps * sqrt_delta(x, *width) * x / a2,
                            ImpulseShape::Delta => -2.0 * eps * delta(x, *width) * x / a2,
                        }
                    }
                    None => 0.0,
                })
            }
            Self::SquarePulseTrain { .. } => Ok(0.0),
            Self::PiecewiseLinear { knots, periodic } => {
                if order > 1 {
                    return Ok(0.0);
                }
                Ok(pwl_eval(knots, *periodic, t, 1))
            }
            Self::Hermite { knots, periodic } => {
                if order > 3 {
                    return Ok(0.0);
                }
                Ok(hermite_eval(knots, *periodic, t, order))
            }
            Self::ShapedSine { map, amplitude, omega, phase, gain } => {
                if order > 1 {
                    return unsupported;
                }
                let arg = omega * t + phase;
                Ok(gain * map.slope(amplitude * arg.sin()) * amplitude * omega * arg.cos())
            }
            Self::Sum { terms } => {
                let mut acc = 0.0;
                for s in terms {
                    acc += s.derivative(t, order)?;
                }
                Ok(acc)
            }
            Self::Feedforward { .. } => unsupported,
        }
    }

    /// Left limit of the value.
    pub fn left_value(&self, t: f64) -> f64 {
        self.value(t.next_down())
    }

    /// Left derivative of the given order.
    pub fn left_derivative(&self, t: f64, order: usize) -> Result<f64> {
        self.derivative(t.next_down(), order)
    }

    /// Sorted, deduplicated times in `(t0, t1)` where the signal or one of
    /// its first derivatives is discontinuous, plus the edges of impulse supports.
    pub fn breakpoints(&self, t0: f64, t1: f64) -> Vec<f64> {
        let mut out = Vec::new();
        self.collect_breakpoints(t0, t1, &mut out);
        out.retain(|t| *t > t0 && *t < t1);
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }

    fn collect_breakpoints(&self, t0: f64, t1: f64, out: &mut Vec<f64>) {
        match self {
            Self::ImpulseTrain { start, period, width, .. } => {
                let half = IMPULSE_SUPPORT * width;
                for c in periodic_instants(*start, *period, t0 - half, t1 + half) {
                    out.push(c - half);
                    out.push(c);
                    out.push(c + half);
                }
            }
            Self::SquarePulseTrain { duration, period, start, .. } => {
                for s in periodic_instants(*start, *period, t0 - duration, t1) {
                    out.push(s);
                    out.push(s + duration);
                }
            }
            Self::PiecewiseLinear { knots, periodic } => knot_times(knots.iter().map(|k| k[0]), *periodic, t0, t1, out),
            Self::Hermite { knots, periodic } => knot_times(knots.iter().map(|k| k[0]), *periodic, t0, t1, out),
            Self::ShapedSine { map, amplitude, omega, phase, .. } => {
                if *omega <= 0.0 || *amplitude == 0.0 {
                    return;
                }
                for k in map.kinks() {
                    let ratio = k / amplitude;
                    if ratio.abs() >= 1.0 {
                        continue;
                    }
                    let base = ratio.asin();
                    for root in [base, PI - base] {
                        // omega t + phase = root + 2 pi n
                        let t_first = (root - phase) / omega;
                        let p = 2.0 * PI / omega;
                        out.extend(periodic_instants(t_first, p, t0, t1));
                    }
                }
            }
            Self::Sum { terms } => {
                for s in terms {
                    s.collect_breakpoints(t0, t1, out);
                }
            }
            Self::Feedforward { reference, .. } => reference.collect_breakpoints(t0, t1, out),
            _ => {}
        }
    }

    /// Windows `(start, end, h_max)` inside `[t0, t1]` that need a reduced step.
    pub fn fine_regions(&self, t0: f64, t1: f64) -> Vec<(f64, f64, f64)> {
        let mut out = Vec::new();
        self.collect_fine(t0, t1, &mut out);
        out.sort_by(|a, b| a.0.total_cmp(&b.0));
        out
    }

    fn collect_fine(&self, t0: f64, t1: f64, out: &mut Vec<(f64, f64, f64)>) {
        match self {
            Self::ImpulseTrain { start, period, width, .. } => {
                let half = IMPULSE_SUPPORT * width;
                for c in periodic_instants(*start, *period, t0 - half, t1 + half) {
                    out.push(((c - half).max(t0), (c + half).min(t1), width / 10.0));
                }
            }
            Self::Sum { terms } => {
                for s in terms {
                    s.collect_fine(t0, t1, out);
                }
            }
            Self::Feedforward { reference, .. } => reference.collect_fine(t0, t1, out),
            _ => {}
        }
    }

    /// Fastest angular frequency among the oscillatory components.
    pub fn max_frequency(&self) -> f64 {
        match self {
            Self::Sinusoid { omega, .. } | Self::ShapedSine { omega, .. } => omega.abs(),
            Self::Sum { terms } => terms.iter().map(|s| s.max_frequency()).fold(0.0, f64::max),
            Self::Feedforward { reference, .. } => reference.max_frequency(),
            _ => 0.0,
        }
    }

    /// Smallest impulse width present, if any.
    pub fn min_impulse_width(&self) -> Option<f64> {
        match self {
            Self::ImpulseTrain { width, .. } => Some(*width),
            Self::Sum { terms } => terms.iter().filter_map(|s| s.min_impulse_width()).reduce(f64::min),
            Self::Feedforward { reference, .. } => reference.min_impulse_width(),
            _ => None,
        }
    }

    /// Checks structural validity (positive widths and periods, sorted knots).
    pub fn validate(&self) -> std::result::Result<(), String> {
        match self {
            Self::ImpulseTrain { period, magnitudes, width, .. } => {
                if !(*width > 0.0) {
                    return Err(format!("impulse width must be positive, got {width}"));
                }
                if !(*period > 0.0) {
                    return Err(format!("impulse period must be positive, got {period}"));
                }
                if magnitudes.is_empty() {
                    return Err("impulse train needs at least one magnitude".into());
                }
            }
            Self::SquarePulseTrain { duration, period, .. } => {
                if !(*period > 0.0) || !(*duration >= 0.0) || duration > period {
                    return Err(format!("pulse train needs 0 <= duration <= period, got {duration} / {period}"));
                }
            }
            Self::PiecewiseLinear { knots, periodic } => check_knots(knots.iter().map(|k| k[0]), *periodic)?,
            Self::Hermite { knots, periodic } => check_knots(knots.iter().map(|k| k[0]), *periodic)?,
            Self::Sum { terms } => {
                for s in terms {
                    s.validate()?;
                }
            }
            Self::Feedforward { model, reference, internal } => {
                reference.validate()?;
                let errs = model.errors();
                if !errs.is_empty() {
                    return Err(errs.join("; "));
                }
                let (n, r) = model.with_model(|m| (m.dim(), m.relative_degree())).map_err(|e| e.to_string())?;
                if internal.len() != n - r {
                    return Err(format!("feedforward needs {} internal tables, got {}", n - r, internal.len()));
                }
                for table in internal {
                    check_knots(table.iter().map(|k| k[0]), false)?;
                }
            }
            _ => {}
        }
        Ok(())
    }
}

fn feedforward_value(model: &ModelParams, reference: &InputSignal, internal: &[Vec<[f64; 3]>], t: f64) -> Result<f64> {
    model.with_model(|m| {
        let r = m.relative_degree();
        let mut x = Vec::with_capacity(r);
        for k in 0..r {
            x.push(reference.derivative(t, k)?);
        }
        let v = reference.derivative(t, r)?;
        let z: Vec<f64> = internal.iter().map(|table| hermite_eval(table, false, t, 0)).collect();
        f_inv_solve(m, t, &x, &z, v)
    })?
}

fn check_knots(times: impl Iterator<Item = f64>, periodic: bool) -> std::result::Result<(), String> {
    let ts: Vec<f64> = times.collect();
    if ts.len() < 2 {
        return Err("need at least two knots".into());
    }
    if ts.windows(2).any(|w| !(w[1] >= w[0])) {
        return Err("knot times must be nondecreasing".into());
    }
    if periodic && !(ts[ts.len() - 1] > ts[0]) {
        return Err("periodic knot table must span a positive period".into());
    }
    Ok(())
}

fn magnitude_at(magnitudes: &[f64], n: usize) -> f64 {
    magnitudes.get(n).or(magnitudes.last()).copied().unwrap_or(0.0)
}

/// Nearest impulse index and offset from its center, when inside the support.
fn impulse_offset(t: f64, start: f64, period: f64, width: f64) -> Option<(usize, f64)> {
    let n = ((t - start) / period).round();
    if n < 0.0 {
        return None;
    }
    let x = t - (start + n * period);
    if x.abs() <= IMPULSE_SUPPORT * width {
        Some((n as usize, x))
    } else {
        None
    }
}

/// `start + n period` for integers `n >= 0` lying in `[lo, hi]`.
fn periodic_instants(start: f64, period: f64, lo: f64, hi: f64) -> Vec<f64> {
    if !(period > 0.0) {
        return Vec::new();
    }
    let n0 = ((lo - start) / period).ceil().max(0.0) as u64;
    let mut out = Vec::new();
    let mut n = n0;
    loop {
        let t = start + n as f64 * period;
        if t > hi {
            break;
        }
        if t >= lo {
            out.push(t);
        }
        n += 1;
    }
    out
}

fn knot_times(times: impl Iterator<Item = f64>, periodic: bool, t0: f64, t1: f64, out: &mut Vec<f64>) {
    let ts: Vec<f64> = times.collect();
    if ts.is_empty() {
        return;
    }
    if !periodic {
        out.extend(ts);
        return;
    }
    let first = ts[0];
    let period = ts[ts.len() - 1] - first;
    if period <= 0.0 {
        return;
    }
    let n0 = ((t0 - first) / period).floor() as i64;
    let n1 = ((t1 - first) / period).ceil() as i64;
    for n in n0..=n1 {
        let shift = n as f64 * period;
        out.extend(ts[..ts.len() - 1].iter().map(|t| t + shift));
    }
}

fn pwl_eval(knots: &[[f64; 2]], periodic: bool, t: f64, order: usize) -> f64 {
    if knots.is_empty() {
        return 0.0;
    }
    if knots.len() == 1 {
        return if order == 0 { knots[0][1] } else { 0.0 };
    }
    let first = knots[0][0];
    let last = knots[knots.len() - 1][0];
    let t = if periodic {
        wrap(t, first, last)
    } else if t < first {
        return if order == 0 { knots[0][1] } else { 0.0 };
    } else if t >= last {
        return if order == 0 { knots[knots.len() - 1][1] } else { 0.0 };
    } else {
        t
    };
    let k = segment(knots, t);
    let [ta, va] = knots[k];
    let [tb, vb] = knots[k + 1];
    let dt = tb - ta;
    if dt <= 0.0 {
        return if order == 0 { vb } else { 0.0 };
    }
    let slope = (vb - va) / dt;
    if order == 0 {
        va + slope * (t - ta)
    } else {
        slope
    }
}

fn hermite_eval(knots: &[[f64; 3]], periodic: bool, t: f64, order: usize) -> f64 {
    if knots.is_empty() {
        return 0.0;
    }
    let first = knots[0][0];
    let last = knots[knots.len() - 1][0];
    let t = if periodic {
        wrap(t, first, last)
    } else if t < first || knots.len() == 1 {
        return match order {
            0 => knots[0][1],
            1 => knots[0][2],
            _ => 0.0,
        };
    } else if t >= last {
        let k = &knots[knots.len() - 1];
        return match order {
            0 => k[1],
            1 => k[2],
            _ => 0.0,
        };
    } else {
        t
    };
    let k = segment(knots, t);
    let [ta, va, sa] = knots[k];
    let [tb, vb, sb] = knots[k + 1];
    let h = tb - ta;
    if h <= 0.0 {
        return match order {
            0 => vb,
            1 => sb,
            _ => 0.0,
        };
    }
    hermite_segment(ta, va, sa, tb, vb, sb, t, order)
}

/// Cubic Hermite interpolant on `[ta, tb]` and its derivatives.
#[allow(clippy::too_many_arguments)]
pub(crate) fn hermite_segment(ta: f64, va: f64, sa: f64, tb: f64, vb: f64, sb: f64, t: f64, order: usize) -> f64 {
    let h = tb - ta;
    let s = (t - ta) / h;
    let (ma, mb) = (sa * h, sb * h);
    match order {
        0 => {
            let s2 = s * s;
            let s3 = s2 * s;
            (2.0 * s3 - 3.0 * s2 + 1.0) * va + (s3 - 2.0 * s2 + s) * ma + (-2.0 * s3 + 3.0 * s2) * vb + (s3 - s2) * mb
        }
        1 => {
            let s2 = s * s;
            ((6.0 * s2 - 6.0 * s) * va + (3.0 * s2 - 4.0 * s + 1.0) * ma + (-6.0 * s2 + 6.0 * s) * vb + (3.0 * s2 - 2.0 * s) * mb) / h
        }
        2 => ((12.0 * s - 6.0) * va + (6.0 * s - 4.0) * ma + (-12.0 * s + 6.0) * vb + (6.0 * s - 2.0) * mb) / (h * h),
        3 => (12.0 * va + 6.0 * ma - 12.0 * vb + 6.0 * mb) / (h * h * h),
        _ => 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_pulse_is_half_open() {
        let s = InputSignal::SquarePulseTrain { magnitude: -3.0, duration: 0.002, period: 2.8, start: 0.0 };
        assert_eq!(s.value(0.0), -3.0);
        assert_eq!(s.value(0.001), -3.0);
        assert_eq!(s.value(0.002), 0.0);
        assert_eq!(s.left_value(0.002), -3.0);
        assert_eq!(s.value(2.8), -3.0);
        assert_eq!(s.left_value(0.0), 0.0);
        let bp = s.breakpoints(-1.0, 6.0);
        assert_eq!(bp.len(), 6);
    }

    #[test]
    fn pwl_jumps_and_periodicity() {
        let s = InputSignal::PiecewiseLinear { knots: vec![[0.0, 0.0], [1.0, 1.0], [1.0, 5.0], [2.0, 5.0]], periodic: true };
        assert_eq!(s.value(0.5), 0.5);
        assert_eq!(s.value(1.0), 5.0);
        assert!((s.left_value(1.0) - 1.0).abs() < 1e-12);
        assert_eq!(s.value(2.5), 0.5);
        assert_eq!(s.derivative(0.25, 1).unwrap(), 1.0);
        assert_eq!(s.derivative(1.5, 1).unwrap(), 0.0);
    }

    #[test]
    fn hermite_reproduces_cubic() {
        let f = |t: f64| t * t * t - 2.0 * t;
        let df = |t: f64| 3.0 * t * t - 2.0;
        let knots: Vec<[f64; 3]> = (0..5).map(|i| {
            let t = i as f64 * 0.5;
            [t, f(t), df(t)]
        }).collect();
        let s = InputSignal::Hermite { knots, periodic: false };
        for &t in &[0.1, 0.7, 1.3, 1.9] {
            assert!((s.value(t) - f(t)).abs() < 1e-12);
            assert!((s.derivative(t, 1).unwrap() - df(t)).abs() < 1e-12);
            assert!((s.derivative(t, 2).unwrap() - 6.0 * t).abs() < 1e-10);
        }
    }

    #[test]
    fn sqrt_delta_squares_to_unit_mass() {
        let a = 1e-3;
        let s = InputSignal::ImpulseTrain { start: 1.0, period: 10.0, magnitudes: vec![2.0], width: a, shape: ImpulseShape::SqrtDelta };
        let n = 20_000;
        let lo = 1.0 - IMPULSE_SUPPORT * a;
        let h = 2.0 * IMPULSE_SUPPORT * a / n as f64;
        let mass: f64 = (0..n).map(|i| s.value(lo + (i as f64 + 0.5) * h).powi(2) * h).sum();
        assert!((mass - 4.0).abs() < 1e-9);
        let d = s.derivative(1.0 + 0.3 * a, 1).unwrap();
        let fd = (s.value(1.0 + 0.3 * a + 1e-9) - s.value(1.0 + 0.3 * a - 1e-9)) / 2e-9;
        assert!((d - fd).abs() < 1e-4 * d.abs());
    }

    #[test]
    fn sinusoid_derivatives() {
        let s = InputSignal::Sinusoid { amplitude: 2.0, omega: 3.0, phase: 0.1 };
        let t = 0.4;
        assert!((s.derivative(t, 1).unwrap() - 6.0 * (3.0 * t + 0.1).cos()).abs() < 1e-12);
        assert!((s.derivative(t, 2).unwrap() + 18.0 * (3.0 * t + 0.1).sin()).abs() < 1e-12);
    }

    #[test]
    fn shaped_sine_breakpoints_hit_kinks() {
        let s = InputSignal::ShapedSine { map: StaticNonlinearity::chua(), amplitude: 200.0, omega: 1.0, phase: 0.0, gain: 1.0 };
        let bp = s.breakpoints(0.0, 2.0 * PI);
        assert_eq!(bp.len(), 4);
        for t in bp {
            assert!(((200.0 * t.sin()).abs() - 1.0).abs() < 1e-9);
        }
    }
}
