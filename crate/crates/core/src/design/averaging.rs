use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::models::Kapitza;
use crate::nonlinearity::StaticNonlinearity;
use crate::par;
use crate::signal::InputSignal;
use crate::variational::{hurwitz, StabilityVerdict};

/// Period average of `cos(M sin tau)`, which is independent of the forcing frequency.
///
/// The integrand is smooth and periodic, so the trapezoid rule converges
/// geometrically; the node count doubles until successive values agree to
/// round-off.
pub fn averaged_gain(amplitude: f64) -> f64 {
    let f = |n: usize| -> f64 {
        (0..n).map(|k| (amplitude * (2.0 * PI * k as f64 / n as f64).sin()).cos()).sum::<f64>() / n as f64
    };
    let mut n = 32;
    let mut prev = f(n);
    while n < 1 << 20 {
        n *= 2;
        let cur = f(n);
        if (cur - prev).abs() <= 1e-15 {
            return cur;
        }
        prev = cur;
    }
    prev
}

/// Characteristic polynomial `s^2 + gamma s - beta c` of the averaged matrix `[[0, 1], [beta c, -gamma]]`.
pub fn averaged_polynomial(params: &Kapitza, c_bar: f64) -> [f64; 3] {
    [1.0, params.gamma, -params.beta * c_bar]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeCandidate {
    pub amplitude: f64,
    pub averaged_gain: f64,
    pub verdict: StabilityVerdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KapitzaDesign {
    pub amplitude: f64,
    pub omega: f64,
    pub averaged_gain: f64,
    pub verdict: StabilityVerdict,
    /// `y** = pi + M sin(omega t)`.
    pub reference: InputSignal,
    /// `Delta y = M sin(omega t)`.
    pub perturbation: InputSignal,
    /// `u** = (y**'' + beta sin y** + gamma y**') / alpha`, differentiated exactly.
    pub input: InputSignal,
    pub sweep: Vec<AmplitudeCandidate>,
    pub warnings: Vec<String>,
}

/// Picks the smallest grid amplitude whose averaged linearization about the
/// inverted position is Hurwitz.
pub fn kapitza_design(params: &Kapitza, amplitudes: &[f64], omega: f64) -> Result<KapitzaDesign> {
    let mut warnings = Vec::new();
    if omega < 100.0 {
        warnings.push(format!("omega = {omega} is not large; averaging may be inaccurate"));
    }
    let sweep: Vec<AmplitudeCandidate> = par::map(amplitudes, |&m| {
        let c = averaged_gain(m);
        let verdict = hurwitz(&averaged_polynomial(params, c)).expect("monic polynomial");
        AmplitudeCandidate { amplitude: m, averaged_gain: c, verdict }
    });
    let best = sweep
        .iter()
        .filter(|c| c.averaged_gain < 0.0 && c.verdict.stable)
        .min_by(|a, b| a.amplitude.total_cmp(&b.amplitude))
        .cloned()
        .ok_or(Error::NoStabilizingAmplitude)?;
    let m = best.amplitude;
    let (alpha, beta, gamma) = (params.alpha, params.beta, params.gamma);
    let perturbation = InputSignal::Sinusoid { amplitude: m, omega, phase: 0.0 };
    let reference = InputSignal::sum(vec![InputSignal::Constant { value: PI }, perturbation.clone()]);
    // sin(pi + s) = -sin(s).
    let input = InputSignal::sum(vec![
        InputSignal::Sinusoid { amplitude: -m * omega * omega / alpha, omega, phase: 0.0 },
        InputSignal::ShapedSine { map: StaticNonlinearity::Sine { frequency: 1.0 }, amplitude: m, omega, phase: 0.0, gain: -beta / alpha },
        InputSignal::Sinusoid { amplitude: gamma * m * omega / alpha, omega, phase: PI / 2.0 },
    ]);
    Ok(KapitzaDesign {
        amplitude: m,
        omega,
        averaged_gain: best.averaged_gain,
        verdict: best.verdict,
        reference,
        perturbation,
        input,
        sweep,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_amplitude_averages_to_one() {
        assert_eq!(averaged_gain(0.0), 1.0);
    }

    #[test]
    fn feedforward_matches_pointwise_formula() {
        let p = Kapitza::new(1.3, 0.7, 0.4);
        let d = kapitza_design(&p, &[0.8 * PI], 1000.0).unwrap();
        for t in [0.0f64, 0.0123, 1.7, 3.3] {
            let y = PI + d.amplitude * (1000.0 * t).sin();
            let yd = d.amplitude * 1000.0 * (1000.0 * t).cos();
            let ydd = -d.amplitude * 1e6 * (1000.0 * t).sin();
            let want = (ydd + p.beta * y.sin() + p.gamma * yd) / p.alpha;
            let got = d.input.value(t);
            assert!((got - want).abs() < 1e-8 * want.abs().max(1.0), "{got} vs {want}");
        }
    }

    #[test]
    fn marginal_when_gravity_vanishes() {
        let p = Kapitza::new(1.0, 0.0, 1.0);
        let v = hurwitz(&averaged_polynomial(&p, averaged_gain(0.8 * PI))).unwrap();
        assert!(!v.stable);
    }
}
