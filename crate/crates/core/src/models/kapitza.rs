use serde::{Deserialize, Serialize};

use super::NormalFormModel;

/// Damped pendulum `y'' = -beta sin(y) - gamma y' + alpha u`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Kapitza {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl Kapitza {
    pub fn new(alpha: f64, beta: f64, gamma: f64) -> Self {
        Self { alpha, beta, gamma }
    }
}

impl NormalFormModel for Kapitza {
    fn name(&self) -> &str {
        "kapitza"
    }

    fn dim(&self) -> usize {
        2
    }

    fn relative_degree(&self) -> usize {
        2
    }

    fn output_dynamics(&self, _t: f64, x: &[f64], _z: &[f64], u: f64) -> f64 {
        -self.beta * x[0].sin() - self.gamma * x[1] + self.alpha * u
    }

    fn internal_dynamics(&self, _t: f64, _z: &[f64], _x: &[f64], _dz: &mut [f64]) {}

    fn input_gain(&self, _t: f64, _x: &[f64], _z: &[f64], _u: f64) -> f64 {
        self.alpha
    }

    fn input_gain_sign(&self) -> f64 {
        self.alpha.signum()
    }

    fn output_partials(&self, _t: f64, x: &[f64], _z: &[f64], _u: f64, df_dx: &mut [f64], _df_dz: &mut [f64]) {
        df_dx[0] = -self.beta * x[0].cos();
        df_dx[1] = -self.gamma;
    }

    fn internal_partials(&self, _t: f64, _z: &[f64], _x: &[f64], _dg_dx: &mut [f64], _dg_dz: &mut [f64]) {}

    fn state_names(&self) -> Vec<String> {
        vec!["y".into(), "ydot".into()]
    }
}
