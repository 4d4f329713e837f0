use serde::{Deserialize, Serialize};

use super::hurwitz::{StabilityVerdict, VerdictMethod};
use crate::error::{Error, Result};
use crate::integrate::{integrate, DrivenSystem, StepPolicy};
use crate::signal::InputSignal;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeResult {
    /// Least-squares slope of `log |x_a - x_b|` over the fitted window.
    pub rate: f64,
    pub initial_separation: f64,
    pub final_separation: f64,
    /// The separation reached round-off level; the fit used the earlier part only.
    pub underflow: bool,
    pub verdict: StabilityVerdict,
}

/// Separation below which differences are dominated by round-off.
const NOISE_FLOOR: f64 = 1e-12;

/// Integrates two copies from `x_a` and `x_b` under the same input and fits
/// the exponential rate of their separation over the second half of the horizon.
///
/// `components` selects the coordinates entering the separation norm (all when empty).
#[allow(clippy::too_many_arguments)]
pub fn contraction_probe<S: DrivenSystem + ?Sized>(
    system: &S,
    input: &InputSignal,
    x_a: &[f64],
    x_b: &[f64],
    t0: f64,
    horizon: f64,
    policy: &StepPolicy,
    components: &[usize],
) -> Result<ProbeResult> {
    let ta = integrate(system, input, t0, t0 + horizon, x_a, policy)?;
    let tb = integrate(system, input, t0, t0 + horizon, x_b, policy)?;
    let n = system.dim();
    let idx: Vec<usize> = if components.is_empty() { (0..n).collect() } else { components.to_vec() };
    if let Some(&bad) = idx.iter().find(|&&j| j >= n) {
        return Err(Error::DimensionMismatch { expected: n, got: bad + 1 });
    }
    // Both runs share the forced grid when policies are fixed-step; otherwise compare on `ta`'s grid.
    let seps: Vec<(f64, f64)> = if ta.times == tb.times {
        (0..ta.len())
            .map(|i| (ta.times[i], dist(ta.state(i), tb.state(i), &idx)))
            .collect()
    } else {
        let mut buf = vec![0.0; n];
        (0..ta.len())
            .map(|i| {
                let t = ta.times[i];
                tb.interpolate_into(t, &mut buf).map(|_| (t, dist(ta.state(i), &buf, &idx)))
            })
            .collect::<Result<_>>()?
    };
    let initial = seps[0].1;
    let scale = ta.states().flat_map(|s| idx.iter().map(move |&j| s[j].abs())).fold(1.0f64, f64::max);
    let floor = NOISE_FLOOR * scale;
    let cut = seps.iter().position(|(_, d)| *d <= floor).unwrap_or(seps.len());
    let underflow = cut < seps.len();
    let usable = &seps[..cut.max(2).min(seps.len())];
    let t_lo = usable[0].0 + 0.5 * (usable[usable.len() - 1].0 - usable[0].0);
    let tail: Vec<(f64, f64)> = usable.iter().filter(|(t, d)| *t >= t_lo && *d > 0.0).map(|(t, d)| (*t, d.ln())).collect();
    let rate = slope(&tail);
    let final_sep = usable[usable.len() - 1].1;
    let stable = rate < 0.0 && (underflow || final_sep < 1e-3 * initial);
    let margin = if stable { -rate } else { -rate.abs().max(f64::MIN_POSITIVE) };
    Ok(ProbeResult {
        rate,
        initial_separation: initial,
        final_separation: final_sep,
        underflow,
        verdict: StabilityVerdict { stable, margin, method: VerdictMethod::LyapunovProbe },
    })
}

fn dist(a: &[f64], b: &[f64], idx: &[usize]) -> f64 {
    idx.iter().map(|&j| (a[j] - b[j]).powi(2)).sum::<f64>().sqrt()
}

/// Ordinary least-squares slope of `y` against `t`.
pub fn slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    if points.len() < 2 {
        return 0.0;
    }
    let mt = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (t, y) in points {
        sxy += (t - mt) * (y - my);
        sxx += (t - mt) * (t - mt);
    }
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrate::FnSystem;

    #[test]
    fn linear_inverse_system_rate_is_minus_one() {
        let sys = FnSystem::new(1, |_t, z: &[f64], u, out: &mut [f64]| out[0] = -z[0] + u);
        let input = InputSignal::Sinusoid { amplitude: 1.0, omega: 2.0, phase: 0.0 };
        let r = contraction_probe(&sys, &input, &[1.0], &[-1.0], 0.0, 20.0, &StepPolicy::Rk4 { h: 0.01 }, &[]).unwrap();
        assert!((r.rate + 1.0).abs() < 0.01, "rate {}", r.rate);
        assert!(r.verdict.stable);
    }

    #[test]
    fn neutral_rotation_is_not_stable() {
        let sys = FnSystem::new(2, |_t, x: &[f64], _u, out: &mut [f64]| {
            out[0] = x[1];
            out[1] = -x[0];
        });
        let r = contraction_probe(&sys, &InputSignal::Zero, &[1.0, 0.0], &[0.0, 1.0], 0.0, 30.0, &StepPolicy::Rk4 { h: 0.01 }, &[]).unwrap();
        assert!(!r.verdict.stable);
        assert!(r.verdict.margin <= 0.0);
    }
}
