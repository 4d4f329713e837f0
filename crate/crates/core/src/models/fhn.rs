use serde::{Deserialize, Serialize};

use super::NormalFormModel;

/// FitzHugh-Nagumo oscillator
/// `eps y' = alpha y - beta y^3 - gamma z + u`, `z' = -z + y`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitzHughNagumo {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub eps: f64,
}

impl FitzHughNagumo {
    pub fn new(alpha: f64, beta: f64, gamma: f64, eps: f64) -> Self {
        Self { alpha, beta, gamma, eps }
    }

    /// Whether `2 alpha < 3 gamma`, needed for a stable limit cycle at small `eps`.
    pub fn has_relaxation_cycle_condition(&self) -> bool {
        2.0 * self.alpha < 3.0 * self.gamma
    }
}

impl NormalFormModel for FitzHughNagumo {
    fn name(&self) -> &str {
        "fhn"
    }

    fn dim(&self) -> usize {
        2
    }

    fn relative_degree(&self) -> usize {
        1
    }

    fn output_dynamics(&self, _t: f64, x: &[f64], z: &[f64], u: f64) -> f64 {
        let y = x[0];
        (self.alpha * y - self.beta * y * y * y - self.gamma * z[0] + u) / self.eps
    }

    fn internal_dynamics(&self, _t: f64, z: &[f64], x: &[f64], dz: &mut [f64]) {
        dz[0] = -z[0] + x[0];
    }

    fn input_gain(&self, _t: f64, _x: &[f64], _z: &[f64], _u: f64) -> f64 {
        1.0 / self.eps
    }

    fn output_partials(&self, _t: f64, x: &[f64], _z: &[f64], _u: f64, df_dx: &mut [f64], df_dz: &mut [f64]) {
        let y = x[0];
        df_dx[0] = (self.alpha - 3.0 * self.beta * y * y) / self.eps;
        df_dz[0] = -self.gamma / self.eps;
    }

    fn internal_partials(&self, _t: f64, _z: &[f64], _x: &[f64], dg_dx: &mut [f64], dg_dz: &mut [f64]) {
        dg_dx[0] = 1.0;
        dg_dz[0] = -1.0;
    }

    fn relaxation(&self) -> Option<f64> {
        Some(self.eps)
    }

    fn state_names(&self) -> Vec<String> {
        vec!["y".into(), "z".into()]
    }
}
