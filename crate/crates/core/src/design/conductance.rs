use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrate::Trajectory;
use crate::models::HhConductance;
use crate::signal::InputSignal;

/// Default levels of the square-wave-like reference.
pub const SQUARE_LEVELS: [f64; 4] = [1.35, 0.3, -1.45, -0.5];

/// Periodic piecewise-linear reference visiting the four levels in turn: slow
/// ramps of duration `t_hat / 2` (first and third) alternate with fast ramps
/// of duration `tau / 2`. The period is `t_hat + tau`.
pub fn hh_square_reference(t_hat: f64, tau: f64, levels: [f64; 4]) -> Result<InputSignal> {
    if !(t_hat > 0.0 && tau > 0.0) {
        return Err(Error::InvalidParameter(format!("square reference needs T_hat, tau > 0, got {t_hat}, {tau}")));
    }
    let period = t_hat + tau;
    let knots = vec![
        [0.0, levels[0]],
        [0.5 * t_hat, levels[1]],
        [0.5 * period, levels[2]],
        [0.5 * (period + t_hat), levels[3]],
        [period, levels[0]],
    ];
    Ok(InputSignal::PiecewiseLinear { knots, periodic: true })
}

/// Closed-form bounds entering the contraction certificate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertificateBounds {
    pub theta: f64,
    pub theta_prime: f64,
    pub m_y: f64,
    /// `M_y / (2 theta) + eps k_s (E_f - E_s)`.
    pub m_s: f64,
    /// `g + 2 gf + 2 gs + gf k_f (E_f - E_s)`.
    pub g_tot: f64,
    /// `M_s + G_tot`.
    pub a_bar: f64,
}

impl CertificateBounds {
    pub fn new(p: &HhConductance, theta: f64, theta_prime: f64, m_y: f64) -> Self {
        let span = p.e_fast - p.e_slow;
        let m_s = m_y / (2.0 * theta) + p.eps * p.k_slow * span;
        let g_tot = p.g + 2.0 * p.g_fast + 2.0 * p.g_slow + p.g_fast * p.k_fast * span;
        Self { theta, theta_prime, m_y, m_s, g_tot, a_bar: m_s + g_tot }
    }

    /// `(eps t_hat, a_bar tau, eps t_hat > a_bar tau)`.
    pub fn inequality(&self, eps: f64, t_hat: f64, tau: f64) -> (f64, f64, bool) {
        let lhs = eps * t_hat;
        let rhs = self.a_bar * tau;
        (lhs, rhs, lhs > rhs)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub bounds: CertificateBounds,
    pub period: f64,
    /// Measure of the samples where the growth condition holds, plus those where `|eps y'| > M_y`.
    pub tau: f64,
    /// Measure of the samples where the decay condition holds.
    pub t_hat: f64,
    /// Measure of the samples where `|eps y'| > M_y`, included in `tau`.
    pub slope_violation: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub verdict: bool,
    pub times: Vec<f64>,
    pub g_tot: Vec<f64>,
    pub g_s: Vec<f64>,
    /// `-g_tot - eps g_s' / (2 g_s)` per sample.
    pub indicator: Vec<f64>,
}

/// Sample classification for the dwell-time measure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Class {
    Growth,
    Decay,
    Neutral,
}

/// Slack allowed on the range precondition.
const RANGE_SLACK: f64 = 1e-9;

/// Dwell-time certificate on one period `[t0, t0 + period]` of a reference
/// `(y, z)` trajectory.
///
/// Each grid interval is split evenly between its two end samples, which are
/// classified with the slope of that interval, so kinks of piecewise-linear
/// references are handled one-sidedly.
pub fn hh_certificate(
    p: &HhConductance,
    reference: &Trajectory,
    t0: f64,
    period: f64,
    theta: f64,
    theta_prime: f64,
    m_y: f64,
) -> Result<CertificateReport> {
    if reference.dim() < 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: reference.dim() });
    }
    let bounds = CertificateBounds::new(p, theta, theta_prime, m_y);
    let window = reference.window(t0, t0 + period);
    let (lo, hi) = (p.e_slow + theta - RANGE_SLACK, p.e_fast - theta_prime + RANGE_SLACK);
    for (i, s) in window.states().enumerate() {
        for (name, v) in [("y", s[0]), ("z", s[1])] {
            if !(v >= lo && v <= hi) {
                return Err(Error::RangeViolation {
                    t: window.times[i],
                    detail: format!("{name} = {v} outside [{}, {}]", lo + RANGE_SLACK, hi - RANGE_SLACK),
                });
            }
        }
    }
    let n = window.len();
    let (mut times, mut g_tot, mut g_s, mut indicator) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
    let classify = |y: f64, z: f64, yd: f64| -> (Class, bool, f64) {
        let zd = -z + y;
        let gt = p.total_conductance(y, z);
        let ratio = yd / (y - p.e_slow) - 2.0 * p.k_slow * zd * (p.k_slow * (z - p.v_slow)).tanh();
        let q = -gt - 0.5 * p.eps * ratio;
        let steep = (p.eps * yd).abs() > m_y;
        let class = if steep || q > 0.0 {
            Class::Growth
        } else if q <= -p.eps {
            Class::Decay
        } else {
            Class::Neutral
        };
        (class, steep, q)
    };
    let (mut tau, mut t_hat, mut steep_measure) = (0.0, 0.0, 0.0);
    for i in 0..n.saturating_sub(1) {
        let (a, b) = (window.state(i), window.state(i + 1));
        let dt = window.times[i + 1] - window.times[i];
        if dt <= 0.0 {
            continue;
        }
        let yd = (b[0] - a[0]) / dt;
        for s in [a, b] {
            let (class, steep, _) = classify(s[0], s[1], yd);
            match class {
                Class::Growth => tau += 0.5 * dt,
                Class::Decay => t_hat += 0.5 * dt,
                Class::Neutral => {}
            }
            if steep {
                steep_measure += 0.5 * dt;
            }
        }
    }
    for i in 0..n {
        let s = window.state(i);
        let j = if i + 1 < n { i } else { i.saturating_sub(1) };
        let dt = window.times[j + 1] - window.times[j];
        let yd = if dt > 0.0 { (window.state(j + 1)[0] - window.state(j)[0]) / dt } else { 0.0 };
        let (_, _, q) = classify(s[0], s[1], yd);
        times.push(window.times[i]);
        g_tot.push(p.total_conductance(s[0], s[1]));
        g_s.push(p.slow_conductance(s[0], s[1]));
        indicator.push(q);
    }
    let (lhs, rhs, verdict) = bounds.inequality(p.eps, t_hat, tau);
    Ok(CertificateReport {
        bounds,
        period,
        tau,
        t_hat,
        slope_violation: steep_measure,
        lhs,
        rhs,
        verdict,
        times,
        g_tot,
        g_s,
        indicator,
    })
}

/// Pointwise scaling of every state by `1 + delta`.
pub fn orbit_scale(cycle: &Trajectory, delta: f64) -> Trajectory {
    cycle.scaled(1.0 + delta)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_parameter_bounds() {
        let b = CertificateBounds::new(&HhConductance::default(), 0.55, 0.65, 0.33);
        assert!((b.m_s - 0.5).abs() < 1e-15);
        assert_eq!(b.g_tot, 49.0);
        assert!((b.a_bar - 49.5).abs() < 1e-14);
        let (lhs, rhs, ok) = b.inequality(0.01, 5.0, 0.001);
        assert!((lhs - 0.05).abs() < 1e-15 && (rhs - 0.0495).abs() < 1e-15 && ok);
    }

    #[test]
    fn square_reference_levels() {
        let s = hh_square_reference(5.0, 0.001, SQUARE_LEVELS).unwrap();
        assert_eq!(s.value(0.0), 1.35);
        assert!((s.value(2.5) - 0.3).abs() < 1e-12);
        assert!((s.value(5.001) - 1.35).abs() < 1e-12);
    }
}
