use serde::{Deserialize, Serialize};

use super::{integrate, DrivenSystem, StepPolicy, Trajectory};
use crate::error::{Error, Result};
use crate::signal::{hermite_segment, InputSignal};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Up,
    Down,
}

/// Coordinate hyperplane `x[index] = level`, crossed in `direction`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Section {
    pub index: usize,
    pub level: f64,
    pub direction: Direction,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CycleOptions {
    /// Crossings before this time are discarded...
    pub transient_time: f64,
    /// ...unless this many crossings happened first.
    pub transient_crossings: usize,
    /// Relative agreement required between consecutive period estimates.
    pub rel_tol: f64,
    /// Number of consecutive agreeing estimates.
    pub confirmations: usize,
    pub max_crossings: usize,
    pub max_time: f64,
    /// Length of each integration chunk.
    pub chunk: f64,
}

impl Default for CycleOptions {
    fn default() -> Self {
        Self {
            transient_time: 50.0,
            transient_crossings: 20,
            rel_tol: 1e-6,
            confirmations: 3,
            max_crossings: 200,
            max_time: 2000.0,
            chunk: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitCycle {
    pub period: f64,
    /// State at the last detected crossing.
    pub anchor: Vec<f64>,
    pub anchor_time: f64,
    /// Successive period estimates after the transient.
    pub estimates: Vec<f64>,
}

/// Locates an attracting periodic orbit by timing section crossings.
///
/// Crossing instants are refined on the cubic Hermite interpolant built from
/// the states and vector field at the two bracketing grid points.
pub fn find_limit_cycle<S: DrivenSystem + ?Sized>(
    system: &S,
    input: &InputSignal,
    x_guess: &[f64],
    section: Section,
    policy: &StepPolicy,
    opts: &CycleOptions,
) -> Result<LimitCycle> {
    let n = system.dim();
    if section.index >= n {
        return Err(Error::DimensionMismatch { expected: n, got: section.index + 1 });
    }
    let mut t = 0.0;
    let mut x = x_guess.to_vec();
    let mut seen = 0usize;
    let mut crossings: Vec<(f64, Vec<f64>)> = Vec::new();
    let mut estimates: Vec<f64> = Vec::new();
    let mut in_transient = true;
    while t < opts.max_time {
        let t_next = (t + opts.chunk).min(opts.max_time);
        let traj = integrate(system, input, t, t_next, &x, policy)?;
        for (tc, xc) in section_crossings(system, input, &traj, section) {
            seen += 1;
            if in_transient {
                if tc < opts.transient_time && seen <= opts.transient_crossings {
                    continue;
                }
                in_transient = false;
            }
            if let Some((tp, _)) = crossings.last() {
                estimates.push(tc - tp);
            }
            crossings.push((tc, xc));
            if estimates.len() >= opts.confirmations {
                let tail = &estimates[estimates.len() - opts.confirmations..];
                let hi = tail.iter().cloned().fold(f64::MIN, f64::max);
                let lo = tail.iter().cloned().fold(f64::MAX, f64::min);
                if (hi - lo) <= opts.rel_tol * hi.abs() {
                    let (anchor_time, anchor) = crossings.last().cloned().expect("nonempty");
                    return Ok(LimitCycle { period: *tail.last().expect("nonempty"), anchor, anchor_time, estimates });
                }
            }
            if crossings.len() >= opts.max_crossings {
                return Err(Error::PeriodUnstable { spread: spread(&estimates, opts.confirmations) });
            }
        }
        x = traj.last_state().to_vec();
        t = t_next;
    }
    if crossings.len() < 2 {
        Err(Error::NoCrossings)
    } else {
        Err(Error::PeriodUnstable { spread: spread(&estimates, opts.confirmations) })
    }
}

fn spread(estimates: &[f64], k: usize) -> f64 {
    if estimates.is_empty() {
        return f64::INFINITY;
    }
    let tail = &estimates[estimates.len().saturating_sub(k)..];
    let hi = tail.iter().cloned().fold(f64::MIN, f64::max);
    let lo = tail.iter().cloned().fold(f64::MAX, f64::min);
    (hi - lo) / hi.abs().max(f64::MIN_POSITIVE)
}

/// All crossings of `section` along `traj`, as refined `(time, state)` pairs.
pub fn section_crossings<S: DrivenSystem + ?Sized>(
    system: &S,
    input: &InputSignal,
    traj: &Trajectory,
    section: Section,
) -> Vec<(f64, Vec<f64>)> {
    let n = traj.dim();
    let j = section.index;
    let mut out = Vec::new();
    let mut da = vec![0.0; n];
    let mut db = vec![0.0; n];
    for i in 0..traj.len().saturating_sub(1) {
        let (a, b) = (traj.state(i), traj.state(i + 1));
        let (fa, fb) = (a[j] - section.level, b[j] - section.level);
        let hit = match section.direction {
            Direction::Up => fa < 0.0 && fb >= 0.0,
            Direction::Down => fa > 0.0 && fb <= 0.0,
        };
        if !hit {
            continue;
        }
        let (ta, tb) = (traj.times[i], traj.times[i + 1]);
        system.rhs(ta, a, input.value(ta), &mut da);
        system.rhs(tb, b, input.value(tb.next_down()), &mut db);
        let g = |t: f64| hermite_segment(ta, a[j], da[j], tb, b[j], db[j], t, 0) - section.level;
        let (mut lo, mut hi) = (ta, tb);
        let mut glo = g(lo);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let gm = g(mid);
            if (gm < 0.0) == (glo < 0.0) && gm != 0.0 {
                lo = mid;
                glo = gm;
            } else {
                hi = mid;
            }
        }
        let tc = 0.5 * (lo + hi);
        let xc: Vec<f64> = (0..n).map(|k| hermite_segment(ta, a[k], da[k], tb, b[k], db[k], tc, 0)).collect();
        out.push((tc, xc));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrate::FnSystem;

    #[test]
    fn planar_cycle_has_period_two_pi() {
        let sys = FnSystem::new(2, |_t, x: &[f64], _u, out: &mut [f64]| {
            let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
            out[0] = x[0] * (1.0 - r) - x[1];
            out[1] = x[1] * (1.0 - r) + x[0];
        });
        let lc = find_limit_cycle(
            &sys,
            &InputSignal::Zero,
            &[0.5, 0.0],
            Section { index: 1, level: 0.0, direction: Direction::Up },
            &StepPolicy::Rk4 { h: 0.01 },
            &CycleOptions::default(),
        )
        .unwrap();
        assert!((lc.period - 2.0 * std::f64::consts::PI).abs() < 1e-6);
        let r = (lc.anchor[0].powi(2) + lc.anchor[1].powi(2)).sqrt();
        assert!((r - 1.0).abs() < 1e-6);
    }

    #[test]
    fn equilibrium_never_crosses() {
        let sys = FnSystem::new(1, |_t, x: &[f64], _u, out: &mut [f64]| out[0] = -x[0]);
        let opts = CycleOptions { max_time: 100.0, ..CycleOptions::default() };
        let err = find_limit_cycle(
            &sys,
            &InputSignal::Zero,
            &[1.0],
            Section { index: 0, level: 0.5, direction: Direction::Up },
            &StepPolicy::Rk4 { h: 0.1 },
            &opts,
        )
        .unwrap_err();
        assert_eq!(err, Error::NoCrossings);
    }
}
