use serde::{Deserialize, Serialize};

use super::{csv_table, settle_time, Checks};
use crate::design::{feedforward_from_reference, hh_certificate, hh_square_reference, orbit_scale, CertificateBounds, CertificateReport, FeedforwardOptions};
use crate::error::{Error, Result};
use crate::integrate::{find_limit_cycle, integrate, CycleOptions, Direction, Section, StepPolicy, Trajectory};
use crate::models::{HhConductance, ModelParams};
use crate::par;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HhConfig {
    pub model: HhConductance,
    pub t_hat: f64,
    pub tau: f64,
    pub levels: [f64; 4],
    pub theta: f64,
    pub theta_prime: f64,
    pub m_y: f64,
    pub warmup: f64,
    /// Step of the inverse-system integration that samples the reference.
    pub reference_policy: StepPolicy,
    /// Step of the entrained plant runs.
    pub policy: StepPolicy,
    pub initial_states: Vec<[f64; 2]>,
    pub sync_periods: usize,
    pub simulated_periods: usize,
    pub sync_tol: f64,
    /// Scalings of the free orbit tried with the certificate.
    pub scalings: Vec<f64>,
    /// Constant input under which the free orbit is searched.
    pub free_input: f64,
    pub free_guess: [f64; 2],
    pub csv_stride: usize,
}

impl Default for HhConfig {
    fn default() -> Self {
        Self {
            model: HhConductance::default(),
            t_hat: 5.0,
            tau: 0.001,
            levels: crate::design::SQUARE_LEVELS,
            theta: 0.55,
            theta_prime: 0.65,
            m_y: 0.33,
            warmup: 20.0,
            reference_policy: StepPolicy::Rk4 { h: 1e-4 },
            policy: StepPolicy::Rk4 { h: 1e-4 },
            initial_states: vec![[1.0, 0.5], [-1.0, -0.5]],
            sync_periods: 5,
            simulated_periods: 6,
            sync_tol: 1e-2,
            scalings: vec![0.0, 0.02, 0.05, 0.1],
            free_input: 0.0,
            free_guess: [1.0, 0.0],
            csv_stride: 20,
        }
    }
}

impl HhConfig {
    pub fn validate(&self) -> Vec<String> {
        let mut c = Checks::default();
        c.model("model", &ModelParams::Hh(self.model));
        c.positive("t_hat", self.t_hat);
        c.positive("tau", self.tau);
        for (i, l) in self.levels.iter().enumerate() {
            c.finite(&format!("levels[{i}]"), *l);
        }
        c.positive("theta", self.theta);
        c.positive("theta_prime", self.theta_prime);
        c.positive("m_y", self.m_y);
        c.nonneg("warmup", self.warmup);
        c.policy("reference_policy", &self.reference_policy);
        c.policy("policy", &self.policy);
        c.that(self.initial_states.len() >= 2, "initial_states", "needs at least two states");
        c.that(self.simulated_periods >= self.sync_periods.max(1), "simulated_periods", "must be at least sync_periods");
        c.positive("sync_tol", self.sync_tol);
        for (i, d) in self.scalings.iter().enumerate() {
            c.nonneg(&format!("scalings[{i}]"), *d);
        }
        c.finite("free_input", self.free_input);
        c.that(self.csv_stride > 0, "csv_stride", "must be at least 1");
        c.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaledCertificate {
    pub delta: f64,
    /// `None` when the scaled orbit leaves the certified range.
    pub verdict: Option<bool>,
    pub tau: Option<f64>,
    pub t_hat: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitScaling {
    pub period: Option<f64>,
    pub error: Option<String>,
    pub sweep: Vec<ScaledCertificate>,
}

/// Certificate report without the per-sample arrays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateSummary {
    pub bounds: CertificateBounds,
    pub period: f64,
    pub tau: f64,
    pub t_hat: f64,
    pub slope_violation: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub verdict: bool,
}

impl From<&CertificateReport> for CertificateSummary {
    fn from(r: &CertificateReport) -> Self {
        Self {
            bounds: r.bounds,
            period: r.period,
            tau: r.tau,
            t_hat: r.t_hat,
            slope_violation: r.slope_violation,
            lhs: r.lhs,
            rhs: r.rhs,
            verdict: r.verdict,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HhReport {
    pub bounds: CertificateBounds,
    /// `(eps t_hat, a_bar tau, verdict)` with the configured `t_hat` and `tau`.
    pub closed_form: (f64, f64, bool),
    /// Certificate measured on one period of the sampled reference.
    pub sampled: CertificateSummary,
    pub feedforward_residual: f64,
    /// Last time at which the output difference was at least `sync_tol`.
    pub sync_time: f64,
    pub sync_periods_needed: f64,
    pub final_difference: f64,
    pub orbit_scaling: OrbitScaling,
}

fn scaled_sweep(cfg: &HhConfig, period: f64, cycle: &Trajectory) -> Vec<ScaledCertificate> {
    par::map(&cfg.scalings, |&delta| {
        let scaled = orbit_scale(cycle, delta);
        match hh_certificate(&cfg.model, &scaled, 0.0, period, cfg.theta, cfg.theta_prime, cfg.m_y) {
            Ok(r) => ScaledCertificate { delta, verdict: Some(r.verdict), tau: Some(r.tau), t_hat: Some(r.t_hat), error: None },
            Err(e) => ScaledCertificate { delta, verdict: None, tau: None, t_hat: None, error: Some(e.to_string()) },
        }
    })
}

fn orbit_scaling(cfg: &HhConfig) -> OrbitScaling {
    let input = crate::signal::InputSignal::Constant { value: cfg.free_input };
    let section = Section { index: 0, level: 0.0, direction: Direction::Up };
    let h = cfg.model.eps / 50.0;
    let found = find_limit_cycle(&cfg.model, &input, &cfg.free_guess, section, &StepPolicy::Rk4 { h }, &CycleOptions::default())
        .and_then(|lc| {
            let n = (lc.period / h).ceil();
            integrate(&cfg.model, &input, 0.0, lc.period, &lc.anchor, &StepPolicy::Rk4 { h: lc.period / n }).map(|t| (lc.period, t))
        });
    match found {
        Ok((period, cycle)) => OrbitScaling { period: Some(period), error: None, sweep: scaled_sweep(cfg, period, &cycle) },
        Err(e) => OrbitScaling { period: None, error: Some(e.to_string()), sweep: Vec::new() },
    }
}

pub fn run_hh(cfg: &HhConfig) -> Result<(HhReport, Vec<(String, String)>)> {
    let bounds = CertificateBounds::new(&cfg.model, cfg.theta, cfg.theta_prime, cfg.m_y);
    let closed_form = bounds.inequality(cfg.model.eps, cfg.t_hat, cfg.tau);
    let reference = hh_square_reference(cfg.t_hat, cfg.tau, cfg.levels)?;
    let period = cfg.t_hat + cfg.tau;
    let horizon = cfg.simulated_periods as f64 * period;
    let opts = FeedforwardOptions { warmup: Some(cfg.warmup), policy: Some(cfg.reference_policy), ..Default::default() };
    let params = ModelParams::Hh(cfg.model);
    let ff = feedforward_from_reference(&params, &reference, &[0.0], 0.0, horizon, &opts)?;
    let cert = hh_certificate(&cfg.model, &ff.reference, 0.0, period, cfg.theta, cfg.theta_prime, cfg.m_y)?;

    let runs = par::map(&cfg.initial_states, |x0| integrate(&cfg.model, &ff.input, 0.0, horizon, x0, &cfg.policy));
    let runs: Vec<Trajectory> = runs.into_iter().collect::<Result<_>>()?;
    let (ta, tb) = (&runs[0], &runs[1]);
    if ta.times != tb.times {
        return Err(Error::InvalidParameter("synchronization runs need a fixed-step policy".into()));
    }
    let diff: Vec<f64> = (0..ta.len()).map(|i| ta.state(i)[0] - tb.state(i)[0]).collect();
    let sync_time = settle_time(&ta.times, &diff, cfg.sync_tol);

    let csv = csv_table(&["t", "reference", "y_a", "y_b", "z_a", "z_b", "u"], ta.len(), cfg.csv_stride, |i, j| {
        let t = ta.times[i];
        match j {
            0 => t,
            1 => reference.value(t),
            2 => ta.state(i)[0],
            3 => tb.state(i)[0],
            4 => ta.state(i)[1],
            5 => tb.state(i)[1],
            _ => ta.inputs[i],
        }
    });
    let cert_csv = csv_table(&["t", "g_tot", "g_s", "indicator"], cert.times.len(), 1, |i, j| match j {
        0 => cert.times[i],
        1 => cert.g_tot[i],
        2 => cert.g_s[i],
        _ => cert.indicator[i],
    });
    let report = HhReport {
        bounds,
        closed_form,
        sampled: CertificateSummary::from(&cert),
        feedforward_residual: ff.max_residual,
        sync_time,
        sync_periods_needed: sync_time / period,
        final_difference: diff.last().copied().unwrap_or(f64::NAN).abs(),
        orbit_scaling: orbit_scaling(cfg),
    };
    Ok((report, vec![("hh_trajectory.csv".into(), csv), ("hh_certificate.csv".into(), cert_csv)]))
}
