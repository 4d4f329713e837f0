use serde::{Deserialize, Serialize};

use super::{csv_table, Checks};
use crate::error::Result;
use crate::integrate::{integrate, StepPolicy};
use crate::models::NeuronPlant;
use crate::observer::{build_observer, observer_contraction_check, run_observer, NeuronFamily, ObserverContraction, ObserverSetup};
use crate::par;
use crate::signal::InputSignal;
use crate::variational::FloquetOptions;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObserverConfig {
    pub theta: [f64; 2],
    pub theta_hat0: [f64; 2],
    pub plant_x0: [f64; 2],
    pub observer_x0: [f64; 2],
    /// Gain of the parameter update; the capacitance gives the unscaled antiderivative update.
    pub gain: f64,
    pub input: InputSignal,
    /// Period of the input, for the persistence test and the monodromy.
    pub period: f64,
    pub horizon: f64,
    /// Tolerance as a fraction of `|theta|`.
    pub relative_tolerance: f64,
    pub persistence: usize,
    pub policy: StepPolicy,
    pub embedding_periods: usize,
    pub embedding_tol: f64,
    /// Periods discarded before the reference used for the contraction check.
    pub transient_periods: usize,
    pub eps_coupling: f64,
    pub period_tol: f64,
    /// Also run every corner and the centre of the parameter box as initial estimates.
    pub corner_sweep: bool,
    /// Also run with zero input.
    pub control_run: bool,
    pub csv_stride: usize,
}

impl Default for ObserverConfig {
    fn default() -> Self {
        Self {
            theta: [0.5, 1.5],
            theta_hat0: [0.3, 1.8],
            plant_x0: [-0.5, 0.3],
            observer_x0: [-0.5, 0.3],
            gain: NeuronPlant::capacitance(),
            input: InputSignal::SquarePulseTrain { magnitude: -3.0, duration: 0.002, period: 2.8, start: 0.0 },
            period: 2.8,
            horizon: 200.0,
            relative_tolerance: 0.02,
            persistence: 3,
            policy: StepPolicy::Rk4 { h: 1e-3 },
            embedding_periods: 10,
            embedding_tol: 1e-6,
            transient_periods: 30,
            eps_coupling: 0.01,
            period_tol: 1e-3,
            corner_sweep: true,
            control_run: true,
            csv_stride: 20,
        }
    }
}

impl ObserverConfig {
    pub fn validate(&self) -> Vec<String> {
        let mut c = Checks::default();
        c.that(NeuronPlant::theta_in_box(&self.theta), "theta", "must lie in [0.3, 0.7] x [1.1, 1.9]");
        for (name, v) in [("theta_hat0", self.theta_hat0), ("plant_x0", self.plant_x0), ("observer_x0", self.observer_x0)] {
            c.finite(&format!("{name}[0]"), v[0]);
            c.finite(&format!("{name}[1]"), v[1]);
        }
        c.positive("gain", self.gain);
        c.signal("input", &self.input);
        c.positive("period", self.period);
        c.positive("horizon", self.horizon);
        c.positive("relative_tolerance", self.relative_tolerance);
        c.policy("policy", &self.policy);
        c.that(self.embedding_periods > 0, "embedding_periods", "must be at least 1");
        c.positive("embedding_tol", self.embedding_tol);
        c.nonneg("eps_coupling", self.eps_coupling);
        c.positive("period_tol", self.period_tol);
        c.that(self.csv_stride > 0, "csv_stride", "must be at least 1");
        c.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub theta_hat0: [f64; 2],
    pub theta_hat_final: Vec<f64>,
    pub final_theta_error: f64,
    pub converged_at: Option<f64>,
    pub within_tolerance_at_end: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObserverReport {
    pub tolerance: f64,
    pub main: RunSummary,
    /// Largest state or parameter mismatch of an exact observer copy.
    pub embedding_error: f64,
    pub contraction: ObserverContraction,
    pub corners: Vec<RunSummary>,
    pub control: Option<RunSummary>,
}

pub fn run_observer_experiment(cfg: &ObserverConfig) -> Result<(ObserverReport, Vec<(String, String)>)> {
    let family = NeuronFamily::default();
    let spec = build_observer(&family, cfg.gain)?;
    let tolerance = cfg.relative_tolerance * cfg.theta.iter().map(|t| t * t).sum::<f64>().sqrt();
    let setup = |theta_hat0: [f64; 2], observer_x0: [f64; 2], horizon: f64| ObserverSetup {
        theta: cfg.theta.to_vec(),
        theta_hat0: theta_hat0.to_vec(),
        plant_x0: cfg.plant_x0.to_vec(),
        observer_x0: observer_x0.to_vec(),
        horizon,
        tolerance,
        period: cfg.period,
        persistence: cfg.persistence,
    };
    let summarize = |theta_hat0: [f64; 2], input: &InputSignal| -> Result<RunSummary> {
        let run = run_observer(&spec, &setup(theta_hat0, cfg.observer_x0, cfg.horizon), input, &cfg.policy)?;
        let last = run.traces.last_state()[4..].to_vec();
        let err = run.theta_error.last().copied().unwrap_or(f64::NAN);
        Ok(RunSummary { theta_hat0, theta_hat_final: last, final_theta_error: err, converged_at: run.converged_at, within_tolerance_at_end: err < tolerance })
    };

    let main = run_observer(&spec, &setup(cfg.theta_hat0, cfg.observer_x0, cfg.horizon), &cfg.input, &cfg.policy)?;
    let main_err = main.theta_error.last().copied().unwrap_or(f64::NAN);
    let main_summary = RunSummary {
        theta_hat0: cfg.theta_hat0,
        theta_hat_final: main.traces.last_state()[4..].to_vec(),
        final_theta_error: main_err,
        converged_at: main.converged_at,
        within_tolerance_at_end: main_err < tolerance,
    };

    let copy = run_observer(&spec, &setup(cfg.theta, cfg.plant_x0, cfg.embedding_periods as f64 * cfg.period), &cfg.input, &cfg.policy)?;
    let embedding_error = copy
        .traces
        .states()
        .map(|s| {
            let dx = (s[0] - s[2]).abs().max((s[1] - s[3]).abs());
            let dt = (s[4] - cfg.theta[0]).abs().max((s[5] - cfg.theta[1]).abs());
            dx.max(dt)
        })
        .fold(0.0, f64::max);

    let plant = NeuronPlant::new(cfg.theta);
    let t_ref = cfg.transient_periods as f64 * cfg.period;
    let long = integrate(&plant, &cfg.input, 0.0, t_ref + 1.5 * cfg.period, &cfg.plant_x0, &cfg.policy)?;
    let reference = long.window(t_ref - 0.25 * cfg.period, t_ref + 1.5 * cfg.period);
    let opts = FloquetOptions { max_step: None, period_tol: cfg.period_tol };
    let contraction = observer_contraction_check(&spec, &cfg.theta, &reference, t_ref, cfg.period, cfg.eps_coupling, &opts)?;

    let corners = if cfg.corner_sweep {
        let b = NeuronPlant::THETA_BOX;
        let starts = [
            [b[0][0], b[1][0]],
            [b[0][0], b[1][1]],
            [b[0][1], b[1][0]],
            [b[0][1], b[1][1]],
            [0.5 * (b[0][0] + b[0][1]), 0.5 * (b[1][0] + b[1][1])],
        ];
        par::map(&starts, |s| summarize(*s, &cfg.input)).into_iter().collect::<Result<Vec<_>>>()?
    } else {
        Vec::new()
    };
    let control = if cfg.control_run { Some(summarize(cfg.theta_hat0, &InputSignal::Zero)?) } else { None };

    let tr = &main.traces;
    let csv = csv_table(
        &["t", "y", "y_hat", "z", "z_hat", "theta_hat_1", "theta_hat_2", "theta_error", "u"],
        tr.len(),
        cfg.csv_stride,
        |i, j| {
            let s = tr.state(i);
            match j {
                0 => tr.times[i],
                1 => s[0],
                2 => s[2],
                3 => s[1],
                4 => s[3],
                5 => s[4],
                6 => s[5],
                7 => main.theta_error[i],
                _ => tr.inputs[i],
            }
        },
    );
    let report = ObserverReport { tolerance, main: main_summary, embedding_error, contraction, corners, control };
    Ok((report, vec![("observer_trajectory.csv".into(), csv)]))
}
