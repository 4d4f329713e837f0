//! Deterministic explicit integration of input-driven systems.
//!
//! Input breakpoints (pulse edges, knot times, impulse supports) are forced
//! onto the grid, so every step sees an input that is smooth on the closed
//! step interval. The stage that lands on a breakpoint uses the left limit of
//! the input.

mod cycle;
mod trajectory;

pub use cycle::{find_limit_cycle, section_crossings, CycleOptions, Direction, LimitCycle, Section};
pub use trajectory::{Trajectory, TrajectoryMeta};

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::models::NormalFormModel;
use crate::signal::InputSignal;

/// `x' = F(t, x, u)` with a scalar input.
pub trait DrivenSystem: Send + Sync {
    fn dim(&self) -> usize;
    fn rhs(&self, t: f64, x: &[f64], u: f64, out: &mut [f64]);
    /// Relaxation parameter used for default step selection.
    fn relaxation(&self) -> Option<f64> {
        None
    }
    fn state_names(&self) -> Vec<String> {
        (0..self.dim()).map(|i| format!("x{}", i + 1)).collect()
    }
}

impl<M: NormalFormModel + ?Sized> DrivenSystem for M {
    fn dim(&self) -> usize {
        NormalFormModel::dim(self)
    }

    fn rhs(&self, t: f64, x: &[f64], u: f64, out: &mut [f64]) {
        self.vector_field(t, x, u, out)
    }

    fn relaxation(&self) -> Option<f64> {
        NormalFormModel::relaxation(self)
    }

    fn state_names(&self) -> Vec<String> {
        NormalFormModel::state_names(self)
    }
}

/// A system given by a closure, mostly for tests and ad-hoc experiments.
pub struct FnSystem<F> {
    dim: usize,
    names: Vec<String>,
    f: F,
}

impl<F> FnSystem<F>
where
    F: Fn(f64, &[f64], f64, &mut [f64]) + Send + Sync,
{
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, names: (0..dim).map(|i| format!("x{}", i + 1)).collect(), f }
    }

    pub fn with_names(mut self, names: &[&str]) -> Self {
        self.names = names.iter().map(|s| s.to_string()).collect();
        self
    }
}

impl<F> DrivenSystem for FnSystem<F>
where
    F: Fn(f64, &[f64], f64, &mut [f64]) + Send + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn rhs(&self, t: f64, x: &[f64], u: f64, out: &mut [f64]) {
        (self.f)(t, x, u, out)
    }

    fn state_names(&self) -> Vec<String> {
        self.names.clone()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum StepPolicy {
    /// Classical fourth-order Runge-Kutta with step `h` (reduced inside fine regions).
    Rk4 { h: f64 },
    /// Dormand-Prince 5(4) with PI step-size control.
    Dopri5 { abs_tol: f64, rel_tol: f64, h_init: f64, h_min: f64, h_max: f64 },
}

pub const DEFAULT_TOLERANCE: f64 = 1e-9;

impl StepPolicy {
    /// `h = min(2 pi / (100 w_max), eps / 20)` together with a cap of one
    /// hundredth of the horizon. Impulse widths are resolved separately in
    /// fine regions.
    pub fn default_rk4<S: DrivenSystem + ?Sized>(system: &S, input: &InputSignal, horizon: f64) -> Self {
        let mut h = horizon.abs() / 100.0;
        let w = input.max_frequency();
        if w > 0.0 {
            h = h.min(2.0 * PI / (100.0 * w));
        }
        if let Some(eps) = system.relaxation() {
            h = h.min(eps / 20.0);
        }
        if !(h > 0.0 && h.is_finite()) {
            h = 1e-3;
        }
        Self::Rk4 { h }
    }

    pub fn default_adaptive() -> Self {
        Self::Dopri5 { abs_tol: DEFAULT_TOLERANCE, rel_tol: DEFAULT_TOLERANCE, h_init: 1e-3, h_min: 1e-12, h_max: f64::MAX }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Rk4 { .. } => "rk4",
            Self::Dopri5 { .. } => "dopri5",
        }
    }

    pub fn validate(&self) -> std::result::Result<(), String> {
        match *self {
            Self::Rk4 { h } if !(h > 0.0 && h.is_finite()) => Err(format!("rk4 step must be positive, got {h}")),
            Self::Dopri5 { abs_tol, rel_tol, h_init, h_min, h_max } => {
                if !(abs_tol > 0.0 && rel_tol >= 0.0) {
                    Err("dopri5 tolerances must be positive".into())
                } else if !(h_init > 0.0 && h_min > 0.0 && h_max >= h_min) {
                    Err("dopri5 step bounds must satisfy 0 < h_min <= h_max and h_init > 0".into())
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }
}

/// One piece of the forced grid: the input is smooth on `[a, b]`.
struct Segment {
    a: f64,
    b: f64,
    h_max: f64,
}

fn segments(input: &InputSignal, t0: f64, tf: f64) -> Vec<Segment> {
    let mut edges = vec![t0];
    edges.extend(input.breakpoints(t0, tf));
    edges.push(tf);
    let fine = input.fine_regions(t0, tf);
    edges
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| {
            let mid = 0.5 * (w[0] + w[1]);
            let h_max = fine
                .iter()
                .filter(|(lo, hi, _)| *lo <= mid && mid <= *hi)
                .map(|r| r.2)
                .fold(f64::INFINITY, f64::min);
            Segment { a: w[0], b: w[1], h_max }
        })
        .collect()
}

/// Input sample inside the smooth segment `[a, b]`.
///
/// Stage times on the segment ends are pulled inside by a few ulps, so that
/// rounding in the breakpoint arithmetic cannot select the neighbouring piece.
#[inline]
fn input_in(input: &InputSignal, s: f64, a: f64, b: f64) -> f64 {
    let guard = (16.0 * f64::EPSILON * a.abs().max(b.abs())).max(1e-9 * (b - a)).min(0.25 * (b - a));
    input.value(s.clamp(a + guard, b - guard))
}

fn check_finite(t: f64, x: &[f64]) -> Result<()> {
    match x.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(Error::NumericalBlowup { t, index }),
        None => Ok(()),
    }
}

/// Integrates `system` from `(t0, x0)` to `tf` under `input`.
pub fn integrate<S: DrivenSystem + ?Sized>(
    system: &S,
    input: &InputSignal,
    t0: f64,
    tf: f64,
    x0: &[f64],
    policy: &StepPolicy,
) -> Result<Trajectory> {
    let n = system.dim();
    if x0.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: x0.len() });
    }
    if !(tf > t0) {
        return Err(Error::InvalidParameter(format!("integration needs tf > t0, got [{t0}, {tf}]")));
    }
    policy.validate().map_err(Error::InvalidParameter)?;
    input.validate().map_err(Error::InvalidParameter)?;
    check_finite(t0, x0)?;
    let mut traj = Trajectory::new(n, system.state_names(), TrajectoryMeta { policy: *policy });
    traj.push(t0, x0, input.value(t0));
    match *policy {
        StepPolicy::Rk4 { h } => rk4_run(system, input, t0, tf, x0, h, &mut traj)?,
        StepPolicy::Dopri5 { abs_tol, rel_tol, h_init, h_min, h_max } => {
            dopri_run(system, input, t0, tf, x0, [abs_tol, rel_tol, h_init, h_min, h_max], &mut traj)?
        }
    }
    Ok(traj)
}

struct Rk4Work {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Rk4Work {
    fn new(n: usize) -> Self {
        Self { k1: vec![0.0; n], k2: vec![0.0; n], k3: vec![0.0; n], k4: vec![0.0; n], tmp: vec![0.0; n] }
    }
}

#[allow(clippy::too_many_arguments)]
fn rk4_step<S: DrivenSystem + ?Sized>(
    system: &S,
    input: &InputSignal,
    seg: &Segment,
    t: f64,
    h: f64,
    x: &mut [f64],
    w: &mut Rk4Work,
) {
    let n = x.len();
    let tm = t + 0.5 * h;
    let te = t + h;
    system.rhs(t, x, input_in(input, t, seg.a, seg.b), &mut w.k1);
    for i in 0..n {
        w.tmp[i] = x[i] + 0.5 * h * w.k1[i];
    }
    let um = input_in(input, tm, seg.a, seg.b);
    system.rhs(tm, &w.tmp, um, &mut w.k2);
    for i in 0..n {
        w.tmp[i] = x[i] + 0.5 * h * w.k2[i];
    }
    system.rhs(tm, &w.tmp, um, &mut w.k3);
    for i in 0..n {
        w.tmp[i] = x[i] + h * w.k3[i];
    }
    system.rhs(te, &w.tmp, input_in(input, te, seg.a, seg.b), &mut w.k4);
    for i in 0..n {
        x[i] += h / 6.0 * (w.k1[i] + 2.0 * w.k2[i] + 2.0 * w.k3[i] + w.k4[i]);
    }
}

fn rk4_run<S: DrivenSystem + ?Sized>(
    system: &S,
    input: &InputSignal,
    t0: f64,
    tf: f64,
    x0: &[f64],
    h: f64,
    traj: &mut Trajectory,
) -> Result<()> {
    let mut x = x0.to_vec();
    let mut w = Rk4Work::new(x.len());
    for seg in segments(input, t0, tf) {
        let h_seg = h.min(seg.h_max);
        let len = seg.b - seg.a;
        let steps = ((len / h_seg) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
        let dt = len / steps as f64;
        for k in 0..steps {
            let t = seg.a + k as f64 * dt;
            let t_next = if k + 1 == steps { seg.b } else { seg.a + (k + 1) as f64 * dt };
            rk4_step(system, input, &seg, t, t_next - t, &mut x, &mut w);
            check_finite(t_next, &x)?;
            traj.push(t_next, &x, input.value(t_next));
        }
    }
    Ok(())
}

// Dormand-Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn dopri_run<S: DrivenSystem + ?Sized>(
    system: &S,
    input: &InputSignal,
    t0: f64,
    tf: f64,
    x0: &[f64],
    [atol, rtol, h_init, h_min, h_max]: [f64; 5],
    traj: &mut Trajectory,
) -> Result<()> {
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut k: Vec<Vec<f64>> = (0..7).map(|_| vec![0.0; n]).collect();
    let mut tmp = vec![0.0; n];
    let mut x_new = vec![0.0; n];
    let mut h = h_init.min(h_max);
    let mut err_prev: f64 = 1e-4;
    for seg in segments(input, t0, tf) {
        let cap = h_max.min(seg.h_max);
        let mut t = seg.a;
        let b = seg.b;
        let a = seg.a;
        let u_at = |s: f64| input_in(input, s, a, b);
        system.rhs(t, &x, u_at(t), &mut k[0]);
        while t < b {
            h = h.min(cap);
            let mut last = false;
            if t + h >= b || (b - (t + h)) < 1e-12 * b.abs().max(1.0) {
                h = b - t;
                last = true;
            }
            if h < h_min {
                if last && h > 0.0 {
                    // A sliver left before a forced grid point; take it exactly.
                } else {
                    return Err(Error::StepUnderflow { t, h_min });
                }
            }
            let stage = |k: &mut Vec<Vec<f64>>, tmp: &mut Vec<f64>, idx: usize, c: f64, coef: &[f64]| {
                for i in 0..n {
                    let mut acc = 0.0;
                    for (j, a) in coef.iter().enumerate() {
                        acc += a * k[j][i];
                    }
                    tmp[i] = x[i] + h * acc;
                }
                let s = t + c * h;
                system.rhs(s, tmp, u_at(s), &mut k[idx]);
            };
            stage(&mut k, &mut tmp, 1, C2, &[A21]);
            stage(&mut k, &mut tmp, 2, C3, &[A31, A32]);
            stage(&mut k, &mut tmp, 3, C4, &[A41, A42, A43]);
            stage(&mut k, &mut tmp, 4, C5, &[A51, A52, A53, A54]);
            stage(&mut k, &mut tmp, 5, 1.0, &[A61, A62, A63, A64, A65]);
            for i in 0..n {
                x_new[i] = x[i] + h * (B1 * k[0][i] + B3 * k[2][i] + B4 * k[3][i] + B5 * k[4][i] + B6 * k[5][i]);
            }
            let t_new = if last { b } else { t + h };
            system.rhs(t_new, &x_new, u_at(t_new), &mut k[6]);
            let mut err = 0.0;
            for i in 0..n {
                let e = h * (E1 * k[0][i] + E3 * k[2][i] + E4 * k[3][i] + E5 * k[4][i] + E6 * k[5][i] + E7 * k[6][i]);
                let sc = atol + rtol * x[i].abs().max(x_new[i].abs());
                err += (e / sc).powi(2);
            }
            let err = (err / n as f64).sqrt();
            if !err.is_finite() {
                h *= 0.2;
                if h < h_min {
                    return Err(Error::NumericalBlowup { t, index: x_new.iter().position(|v| !v.is_finite()).unwrap_or(0) });
                }
                continue;
            }
            if err <= 1.0 {
                let fac = if err == 0.0 { 10.0 } else { 0.9 * err.powf(-0.7 / 5.0) * err_prev.powf(0.4 / 5.0) };
                err_prev = err.max(1e-4);
                t = t_new;
                x.copy_from_slice(&x_new);
                check_finite(t, &x)?;
                traj.push(t, &x, input.value(t));
                let (first, rest) = k.split_at_mut(1);
                first[0].copy_from_slice(&rest[5]);
                if !last {
                    h *= fac.clamp(0.2, 10.0);
                }
            } else {
                let fac = 0.9 * err.powf(-1.0 / 5.0);
                h *= fac.clamp(0.2, 1.0);
                if h < h_min {
                    return Err(Error::StepUnderflow { t, h_min });
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[allow(clippy::type_complexity)]
    fn decay() -> FnSystem<impl Fn(f64, &[f64], f64, &mut [f64]) + Send + Sync> {
        FnSystem::new(1, |_t, x: &[f64], u, out: &mut [f64]| out[0] = -x[0] + u)
    }

    #[test]
    fn adaptive_decay_matches_exponential() {
        let traj = integrate(&decay(), &InputSignal::Zero, 0.0, 1.0, &[1.0], &StepPolicy::default_adaptive()).unwrap();
        assert!((traj.last_state()[0] - (-1.0f64).exp()).abs() < 1e-8);
    }

    #[test]
    fn pulses_are_on_the_grid() {
        let input = InputSignal::SquarePulseTrain { magnitude: 1.0, duration: 0.25, period: 1.0, start: 0.1 };
        let traj = integrate(&decay(), &input, 0.0, 3.0, &[0.0], &StepPolicy::Rk4 { h: 0.01 }).unwrap();
        for edge in [0.1, 0.35, 1.1, 1.35, 2.1, 2.35] {
            assert!(traj.times.contains(&edge), "missing {edge}");
        }
        // Exact solution of z' = -z + pulse: the pulse is a piecewise constant forcing.
        let mut z: f64 = 0.0;
        let mut t_prev = 0.0;
        for (a, b, u) in [(0.1, 0.35, 1.0), (1.1, 1.35, 1.0), (2.1, 2.35, 1.0), (3.0, 3.0, 0.0)] {
            z *= f64::exp(-(a - t_prev));
            z = u + (z - u) * f64::exp(-(b - a));
            t_prev = b;
        }
        assert!((traj.last_state()[0] - z).abs() < 1e-6, "{} vs {z}", traj.last_state()[0]);
    }

    #[test]
    fn fine_regions_reduce_the_step() {
        let input = InputSignal::ImpulseTrain {
            start: 0.5,
            period: 10.0,
            magnitudes: vec![0.1],
            width: 1e-3,
            shape: crate::signal::ImpulseShape::SqrtDelta,
        };
        let traj = integrate(&decay(), &input, 0.0, 1.0, &[0.0], &StepPolicy::Rk4 { h: 0.01 }).unwrap();
        let inside: Vec<f64> = traj.times.windows(2).filter(|w| w[0] >= 0.492 && w[1] <= 0.508).map(|w| w[1] - w[0]).collect();
        assert!(!inside.is_empty());
        assert!(inside.iter().all(|h| *h <= 1e-4 * (1.0 + 1e-9)));
    }

    #[test]
    fn blowup_is_reported() {
        let sys = FnSystem::new(1, |_t, x: &[f64], _u, out: &mut [f64]| out[0] = x[0] * x[0]);
        let err = integrate(&sys, &InputSignal::Zero, 0.0, 2.0, &[1.0], &StepPolicy::Rk4 { h: 0.01 }).unwrap_err();
        assert!(matches!(err, Error::NumericalBlowup { .. }));
    }
}
