use serde::{Deserialize, Serialize};

use super::NormalFormModel;
use crate::poly;

/// `sat(a, b, s) = max(a, min(b, s))`.
pub fn sat(lo: f64, hi: f64, s: f64) -> f64 {
    lo.max(hi.min(s))
}

/// Left derivative of `sat(lo, hi, s(y))` given `s(y)` and `s'(y)`.
fn sat_slope(lo: f64, hi: f64, s: f64, ds: f64) -> f64 {
    let interior = (s > lo && s < hi) || (s == lo && ds < 0.0) || (s == hi && ds > 0.0);
    if interior {
        ds
    } else {
        0.0
    }
}

const CAPACITANCE: f64 = 0.02;
// m_inf numerator -2y^3 + 0.9y^2 + 0.6y + 0.068 over 0.343, descending.
const M_NUM: [f64; 4] = [-2.0, 0.9, 0.6, 0.068];
const M_DEN: f64 = 0.343;

fn m_poly(y: f64) -> f64 {
    M_NUM.iter().fold(0.0, |acc, c| acc * y + c) / M_DEN
}

fn m_poly_slope(y: f64) -> f64 {
    (-6.0 * y * y + 1.8 * y + 0.6) / M_DEN
}

/// Antiderivative of `m_poly(y) (y - 1)`.
fn m_poly_moment(y: f64) -> f64 {
    // (-2y^3 + 0.9y^2 + 0.6y + 0.068)(y - 1)
    //   = -2y^4 + 2.9y^3 - 0.3y^2 - 0.532y - 0.068
    let y2 = y * y;
    (-0.4 * y2 * y2 * y + 2.9 / 4.0 * y2 * y2 - 0.1 * y2 * y - 0.266 * y2 - 0.068 * y) / M_DEN
}

/// Slow-fast conductance neuron used in the adaptive observer experiment:
///
/// ```text
/// 0.02 y' = -2 z (y + 0.7) + 0.15 + u - h(y)^T theta
///  tau(y) z' = -z + z_inf(y)
/// h(y) = col(y + 0.4, m_inf(y) (y - 1))
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeuronPlant {
    pub theta: [f64; 2],
    /// Sorted arguments where `m_inf` switches between clamped and polynomial branches.
    #[serde(skip, default = "m_inf_kinks")]
    kinks: Vec<f64>,
}

fn m_inf_kinks() -> Vec<f64> {
    let mut ks = poly::real_roots(&M_NUM);
    let mut upper = M_NUM;
    upper[3] -= M_DEN;
    ks.extend(poly::real_roots(&upper));
    ks.sort_by(f64::total_cmp);
    ks
}

impl NeuronPlant {
    pub fn new(theta: [f64; 2]) -> Self {
        Self { theta, kinks: m_inf_kinks() }
    }

    /// The admissible parameter box `[0.3, 0.7] x [1.1, 1.9]`.
    pub const THETA_BOX: [[f64; 2]; 2] = [[0.3, 0.7], [1.1, 1.9]];

    pub fn theta_in_box(theta: &[f64]) -> bool {
        theta.len() == 2
            && (0..2).all(|i| theta[i] >= Self::THETA_BOX[i][0] && theta[i] <= Self::THETA_BOX[i][1])
    }

    /// Arguments where `m_inf` switches branch.
    pub fn kinks(&self) -> &[f64] {
        &self.kinks
    }

    pub fn capacitance() -> f64 {
        CAPACITANCE
    }

    pub fn m_inf(y: f64) -> f64 {
        sat(0.0, 1.0, m_poly(y))
    }

    pub fn m_inf_slope(y: f64) -> f64 {
        sat_slope(0.0, 1.0, m_poly(y), m_poly_slope(y))
    }

    pub fn tau(y: f64) -> f64 {
        sat(0.2, 1.0, 0.2 + 40.0 * (0.25 - y))
    }

    pub fn tau_slope(y: f64) -> f64 {
        sat_slope(0.2, 1.0, 0.2 + 40.0 * (0.25 - y), -40.0)
    }

    pub fn z_inf(y: f64) -> f64 {
        sat(0.0, 1.0, (y + 0.17) / 0.42)
    }

    pub fn z_inf_slope(y: f64) -> f64 {
        sat_slope(0.0, 1.0, (y + 0.17) / 0.42, 1.0 / 0.42)
    }

    /// Raw regressor `col(y + 0.4, m_inf(y) (y - 1))` as it appears in the
    /// capacitive current balance.
    pub fn current_regressor(y: f64) -> [f64; 2] {
        [y + 0.4, Self::m_inf(y) * (y - 1.0)]
    }

    /// Antiderivative `col(y^2/2 + 0.4 y, M_inf(y))` of [`Self::current_regressor`],
    /// with `M_inf(0) = 0`.
    pub fn current_regressor_antiderivative(&self, y: f64) -> [f64; 2] {
        [0.5 * y * y + 0.4 * y, self.m_inf_moment(y)]
    }

    /// `M_inf(y) = int_0^y m_inf(s) (s - 1) ds`, exact on each branch of the saturation.
    pub fn m_inf_moment(&self, y: f64) -> f64 {
        let (lo, hi, sign) = if y >= 0.0 { (0.0, y, 1.0) } else { (y, 0.0, -1.0) };
        let mut edges = vec![lo];
        edges.extend(self.kinks.iter().copied().filter(|k| *k > lo && *k < hi));
        edges.push(hi);
        let mut total = 0.0;
        for w in edges.windows(2) {
            let (a, b) = (w[0], w[1]);
            if b <= a {
                continue;
            }
            let p = m_poly(0.5 * (a + b));
            total += if p >= 1.0 {
                (0.5 * b * b - b) - (0.5 * a * a - a)
            } else if p <= 0.0 {
                0.0
            } else {
                m_poly_moment(b) - m_poly_moment(a)
            };
        }
        sign * total
    }

    fn theta_current(&self, y: f64) -> f64 {
        let h = Self::current_regressor(y);
        h[0] * self.theta[0] + h[1] * self.theta[1]
    }
}

impl NormalFormModel for NeuronPlant {
    fn name(&self) -> &str {
        "neuron"
    }

    fn dim(&self) -> usize {
        2
    }

    fn relative_degree(&self) -> usize {
        1
    }

    fn output_dynamics(&self, _t: f64, x: &[f64], z: &[f64], u: f64) -> f64 {
        let y = x[0];
        (-2.0 * z[0] * (y + 0.7) + 0.15 + u - self.theta_current(y)) / CAPACITANCE
    }

    fn internal_dynamics(&self, _t: f64, z: &[f64], x: &[f64], dz: &mut [f64]) {
        let y = x[0];
        dz[0] = (-z[0] + Self::z_inf(y)) / Self::tau(y);
    }

    fn input_gain(&self, _t: f64, _x: &[f64], _z: &[f64], _u: f64) -> f64 {
        1.0 / CAPACITANCE
    }

    fn output_partials(&self, _t: f64, x: &[f64], z: &[f64], _u: f64, df_dx: &mut [f64], df_dz: &mut [f64]) {
        let y = x[0];
        let dh1 = Self::m_inf_slope(y) * (y - 1.0) + Self::m_inf(y);
        df_dx[0] = (-2.0 * z[0] - self.theta[0] - self.theta[1] * dh1) / CAPACITANCE;
        df_dz[0] = -2.0 * (y + 0.7) / CAPACITANCE;
    }

    fn internal_partials(&self, _t: f64, z: &[f64], x: &[f64], dg_dx: &mut [f64], dg_dz: &mut [f64]) {
        let y = x[0];
        let tau = Self::tau(y);
        let drive = -z[0] + Self::z_inf(y);
        dg_dx[0] = Self::z_inf_slope(y) / tau - drive * Self::tau_slope(y) / (tau * tau);
        dg_dz[0] = -1.0 / tau;
    }

    fn relaxation(&self) -> Option<f64> {
        Some(CAPACITANCE)
    }

    fn state_names(&self) -> Vec<String> {
        vec!["y".into(), "z".into()]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sat_clamps() {
        assert_eq!(sat(0.0, 1.0, -3.0), 0.0);
        assert_eq!(sat(0.0, 1.0, 3.0), 1.0);
        assert_eq!(sat(0.0, 1.0, 0.25), 0.25);
    }

    #[test]
    fn kinks_switch_branches() {
        let plant = NeuronPlant::new([0.5, 1.5]);
        assert!(!plant.kinks.is_empty());
        for &k in &plant.kinks {
            let p = m_poly(k);
            assert!(p.abs() < 1e-12 || (p - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn moment_derivative_matches_integrand() {
        let plant = NeuronPlant::new([0.5, 1.5]);
        for i in 0..200 {
            let y = -1.5 + 3.0 * (i as f64 + 0.37) / 200.0;
            if plant.kinks.iter().any(|k| (k - y).abs() < 1e-4) {
                continue;
            }
            let h = 1e-6;
            let fd = (plant.m_inf_moment(y + h) - plant.m_inf_moment(y - h)) / (2.0 * h);
            let want = NeuronPlant::m_inf(y) * (y - 1.0);
            assert!((fd - want).abs() < 1e-7, "y = {y}: {fd} vs {want}");
        }
    }

    #[test]
    fn left_derivative_at_kink() {
        // z_inf kink at y = -0.17, increasing: from the left it is clamped.
        assert_eq!(NeuronPlant::z_inf_slope(-0.17), 0.0);
        assert!((NeuronPlant::z_inf_slope(0.1) - 1.0 / 0.42).abs() < 1e-12);
        // tau kink at y = 0.25 where 0.2 + 40(0.25 - y) = 0.2, decreasing in y:
        // from the left the argument is above 0.2, so the slope is active.
        assert_eq!(NeuronPlant::tau_slope(0.25), -40.0);
    }
}
