use serde::{Deserialize, Serialize};

use super::NormalFormModel;

/// Two-conductance model
///
/// ```text
/// eps y' = -g (y - E) - gf [1 + tanh(kf (y - Vf))] (y - Ef)
///                     - gs [1 + tanh(ks (z - Vs))] (y - Es) + u
///     z' = -z + y
/// ```
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HhConductance {
    pub g: f64,
    pub g_fast: f64,
    pub g_slow: f64,
    pub e_leak: f64,
    pub e_fast: f64,
    pub e_slow: f64,
    pub v_fast: f64,
    pub v_slow: f64,
    pub k_fast: f64,
    pub k_slow: f64,
    pub eps: f64,
}

impl Default for HhConductance {
    fn default() -> Self {
        Self {
            g: 1.0,
            g_fast: 2.0,
            g_slow: 2.0,
            e_leak: 0.0,
            e_fast: 2.0,
            e_slow: -2.0,
            v_fast: 0.0,
            v_slow: 0.0,
            k_fast: 5.0,
            k_slow: 5.0,
            eps: 0.01,
        }
    }
}

impl HhConductance {
    /// Total conductance `g_tot(y, z)`, the negated `eps`-scaled `df/dy`.
    pub fn total_conductance(&self, y: f64, z: f64) -> f64 {
        let tf = (self.k_fast * (y - self.v_fast)).tanh();
        let ts = (self.k_slow * (z - self.v_slow)).tanh();
        self.g
            + self.g_fast * (1.0 + tf)
            + self.g_slow * (1.0 + ts)
            + self.g_fast * self.k_fast * (1.0 - tf * tf) * (y - self.e_fast)
    }

    /// Slow coupling conductance `g_s(y, z)`, the negated `eps`-scaled `df/dz`.
    pub fn slow_conductance(&self, y: f64, z: f64) -> f64 {
        let ts = (self.k_slow * (z - self.v_slow)).tanh();
        self.g_slow * self.k_slow * (1.0 - ts * ts) * (y - self.e_slow)
    }

    /// Checks `g, gf, gs > 0` and `Es < E, Vf, Vs < Ef`.
    pub fn ordering_holds(&self) -> bool {
        let inside = |v: f64| self.e_slow < v && v < self.e_fast;
        self.g > 0.0
            && self.g_fast > 0.0
            && self.g_slow > 0.0
            && inside(self.e_leak)
            && inside(self.v_fast)
            && inside(self.v_slow)
    }
}

impl NormalFormModel for HhConductance {
    fn name(&self) -> &str {
        "hh"
    }

    fn dim(&self) -> usize {
        2
    }

    fn relative_degree(&self) -> usize {
        1
    }

    fn output_dynamics(&self, _t: f64, x: &[f64], z: &[f64], u: f64) -> f64 {
        let (y, z) = (x[0], z[0]);
        let tf = (self.k_fast * (y - self.v_fast)).tanh();
        let ts = (self.k_slow * (z - self.v_slow)).tanh();
        let current = -self.g * (y - self.e_leak)
            - self.g_fast * (1.0 + tf) * (y - self.e_fast)
            - self.g_slow * (1.0 + ts) * (y - self.e_slow);
        (current + u) / self.eps
    }

    fn internal_dynamics(&self, _t: f64, z: &[f64], x: &[f64], dz: &mut [f64]) {
        dz[0] = -z[0] + x[0];
    }

    fn input_gain(&self, _t: f64, _x: &[f64], _z: &[f64], _u: f64) -> f64 {
        1.0 / self.eps
    }

    fn output_partials(&self, _t: f64, x: &[f64], z: &[f64], _u: f64, df_dx: &mut [f64], df_dz: &mut [f64]) {
        df_dx[0] = -self.total_conductance(x[0], z[0]) / self.eps;
        df_dz[0] = -self.slow_conductance(x[0], z[0]) / self.eps;
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
