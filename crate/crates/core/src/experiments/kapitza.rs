use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::{csv_table, settle_time, Checks};
use crate::design::{kapitza_design, KapitzaDesign};
use crate::error::Result;
use crate::integrate::{integrate, StepPolicy};
use crate::models::{Kapitza, ModelParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KapitzaConfig {
    pub model: Kapitza,
    /// Candidate amplitudes; the smallest stabilizing one is used.
    pub amplitudes: Vec<f64>,
    pub omega: f64,
    pub initial_angle: f64,
    /// Slow part of the initial velocity; the fast part `M omega` is added.
    pub initial_slow_velocity: f64,
    pub horizon: f64,
    pub settle_time: f64,
    pub band: f64,
    pub policy: StepPolicy,
    pub csv_stride: usize,
}

impl Default for KapitzaConfig {
    fn default() -> Self {
        let omega = 1000.0;
        Self {
            model: Kapitza::new(1.0, 1.0, 1.0),
            amplitudes: vec![0.8 * PI],
            omega,
            initial_angle: PI + 0.3,
            initial_slow_velocity: 0.0,
            horizon: 60.0,
            settle_time: 20.0,
            band: 0.05,
            policy: StepPolicy::Rk4 { h: 2.0 * PI / (100.0 * omega) },
            csv_stride: 50,
        }
    }
}

impl KapitzaConfig {
    pub fn validate(&self) -> Vec<String> {
        let mut c = Checks::default();
        c.model("model", &ModelParams::Kapitza(self.model));
        c.that(!self.amplitudes.is_empty(), "amplitudes", "must not be empty");
        for (i, m) in self.amplitudes.iter().enumerate() {
            c.nonneg(&format!("amplitudes[{i}]"), *m);
        }
        c.positive("omega", self.omega);
        c.finite("initial_angle", self.initial_angle);
        c.finite("initial_slow_velocity", self.initial_slow_velocity);
        c.positive("horizon", self.horizon);
        c.nonneg("settle_time", self.settle_time);
        c.that(self.settle_time <= self.horizon, "settle_time", "must not exceed horizon");
        c.positive("band", self.band);
        c.policy("policy", &self.policy);
        c.that(self.csv_stride > 0, "csv_stride", "must be at least 1");
        c.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KapitzaReport {
    pub design: KapitzaDesign,
    /// Last time at which `|y - dy - pi|` was outside the band.
    pub entry_time: f64,
    /// `max |y - dy - pi|` over `[settle_time, horizon]`.
    pub max_error_after_settle: f64,
    pub final_error: f64,
    pub within_band: bool,
    pub steps: usize,
}

pub fn run_kapitza(cfg: &KapitzaConfig) -> Result<(KapitzaReport, Vec<(String, String)>)> {
    let design = kapitza_design(&cfg.model, &cfg.amplitudes, cfg.omega)?;
    let (m, w) = (design.amplitude, cfg.omega);
    let x0 = [cfg.initial_angle, cfg.initial_slow_velocity + m * w];
    let traj = integrate(&cfg.model, &design.input, 0.0, cfg.horizon, &x0, &cfg.policy)?;
    let dy = |t: f64| m * (w * t).sin();
    let err: Vec<f64> = (0..traj.len()).map(|i| traj.state(i)[0] - dy(traj.times[i]) - PI).collect();
    let entry_time = settle_time(&traj.times, &err, cfg.band);
    let max_error_after_settle = traj
        .times
        .iter()
        .zip(&err)
        .filter(|(t, _)| **t >= cfg.settle_time)
        .map(|(_, e)| e.abs())
        .fold(0.0, f64::max);
    let report = KapitzaReport {
        within_band: max_error_after_settle < cfg.band,
        final_error: err.last().copied().unwrap_or(f64::NAN).abs(),
        entry_time,
        max_error_after_settle,
        steps: traj.len() - 1,
        design,
    };
    let csv = csv_table(&["t", "reference", "y", "y_minus_dy", "u"], traj.len(), cfg.csv_stride, |i, j| {
        let t = traj.times[i];
        match j {
            0 => t,
            1 => PI + dy(t),
            2 => traj.state(i)[0],
            3 => traj.state(i)[0] - dy(t),
            _ => traj.inputs[i],
        }
    });
    Ok((report, vec![("kapitza_trajectory.csv".into(), csv)]))
}
