use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::NormalFormModel;

/// Lorenz system with the input entering the second equation:
///
/// ```text
/// x1' = sigma (x2 - x1)
/// x2' = x1 (rho - z) - x2 + u
///  z' = x1 x2 - beta z
/// ```
///
/// The output `y = x1` has relative degree two, so the model state is kept in
/// normal-form coordinates `(y, y', z)` with `y' = sigma (x2 - x1)`. Use
/// [`Lorenz::from_original`] and [`Lorenz::to_original`] to convert.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lorenz {
    pub sigma: f64,
    pub rho: f64,
    pub beta: f64,
}

impl Lorenz {
    pub fn classic() -> Self {
        Self { sigma: 10.0, rho: 28.0, beta: 8.0 / 3.0 }
    }

    pub fn from_original(&self, p: [f64; 3]) -> [f64; 3] {
        [p[0], self.sigma * (p[1] - p[0]), p[2]]
    }

    pub fn to_original(&self, s: &[f64]) -> [f64; 3] {
        [s[0], s[0] + s[1] / self.sigma, s[2]]
    }

    /// Jacobian in the original `(x1, x2, z)` coordinates.
    pub fn original_jacobian(&self, p: [f64; 3]) -> DMatrix<f64> {
        let [x1, x2, z] = p;
        DMatrix::from_row_slice(
            3,
            3,
            &[
                -self.sigma, self.sigma, 0.0,
                self.rho - z, -1.0, -x1,
                x2, x1, -self.beta,
            ],
        )
    }
}

impl NormalFormModel for Lorenz {
    fn name(&self) -> &str {
        "lorenz"
    }

    fn dim(&self) -> usize {
        3
    }

    fn relative_degree(&self) -> usize {
        2
    }

    fn output_dynamics(&self, _t: f64, x: &[f64], z: &[f64], u: f64) -> f64 {
        let (y, yd, z) = (x[0], x[1], z[0]);
        self.sigma * y * (self.rho - z - 1.0) - (1.0 + self.sigma) * yd + self.sigma * u
    }

    fn internal_dynamics(&self, _t: f64, z: &[f64], x: &[f64], dz: &mut [f64]) {
        let (y, yd) = (x[0], x[1]);
        dz[0] = y * (y + yd / self.sigma) - self.beta * z[0];
    }

    fn input_gain(&self, _t: f64, _x: &[f64], _z: &[f64], _u: f64) -> f64 {
        self.sigma
    }

    fn input_gain_sign(&self) -> f64 {
        self.sigma.signum()
    }

    fn output_partials(&self, _t: f64, x: &[f64], z: &[f64], _u: f64, df_dx: &mut [f64], df_dz: &mut [f64]) {
        df_dx[0] = self.sigma * (self.rho - z[0] - 1.0);
        df_dx[1] = -(1.0 + self.sigma);
        df_dz[0] = -self.sigma * x[0];
    }

    fn internal_partials(&self, _t: f64, _z: &[f64], x: &[f64], dg_dx: &mut [f64], dg_dz: &mut [f64]) {
        let (y, yd) = (x[0], x[1]);
        dg_dx[0] = 2.0 * y + yd / self.sigma;
        dg_dx[1] = y / self.sigma;
        dg_dz[0] = -self.beta;
    }

    fn state_names(&self) -> Vec<String> {
        vec!["y".into(), "ydot".into(), "z".into()]
    }
}
