use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::{csv_table, Checks};
use crate::design::{
    chua_closed_form, constant_gain_threshold, describing_function, lure_input_reconstruct, lure_stability, DescribingConvention,
    DescribingFunctionResult, LureInput, LureStability,
};
use crate::error::Result;
use crate::integrate::{integrate, StepPolicy};
use crate::models::{LureSystem, ModelParams, TransferFunction};
use crate::nonlinearity::StaticNonlinearity;
use crate::par;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DescribingSource {
    ClosedForm,
    Quadrature,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChuaConfig {
    pub plant: TransferFunction,
    pub nonlinearity: StaticNonlinearity,
    pub amplitude: f64,
    pub omega: f64,
    /// Which describing function feeds the stability test and the input reconstruction.
    pub source: DescribingSource,
    pub convention: DescribingConvention,
    /// Constant gains expected to be stable and unstable.
    pub bracket: [f64; 2],
    /// Interval searched for the constant-gain threshold.
    pub threshold_search: [f64; 2],
    pub policy: StepPolicy,
    pub periods: usize,
    /// Trailing periods used for the Fourier amplitude.
    pub fit_periods: usize,
    pub amplitude_tol: f64,
    /// Extra `(M, omega)` points reported with the closed form and its verdict.
    pub extra_points: Vec<[f64; 2]>,
    pub csv_stride: usize,
}

impl Default for ChuaConfig {
    fn default() -> Self {
        Self {
            plant: TransferFunction::chua(),
            nonlinearity: StaticNonlinearity::chua(),
            amplitude: 200.0,
            omega: 1.0,
            source: DescribingSource::ClosedForm,
            convention: DescribingConvention::Literal,
            bracket: [-0.049, -0.051],
            threshold_search: [-1.0, 0.0],
            policy: StepPolicy::Rk4 { h: 1e-3 },
            periods: 50,
            fit_periods: 10,
            amplitude_tol: 0.03,
            extra_points: vec![[10.0, 10.0]],
            csv_stride: 10,
        }
    }
}

impl ChuaConfig {
    pub fn validate(&self) -> Vec<String> {
        let mut c = Checks::default();
        c.model("plant", &ModelParams::LureChua { plant: self.plant.clone(), nonlinearity: self.nonlinearity.clone() });
        c.positive("amplitude", self.amplitude);
        c.positive("omega", self.omega);
        c.that(self.threshold_search[0] < self.threshold_search[1], "threshold_search", "needs lo < hi");
        c.policy("policy", &self.policy);
        c.that(self.fit_periods >= 1 && self.fit_periods < self.periods, "fit_periods", "must lie in [1, periods)");
        c.positive("amplitude_tol", self.amplitude_tol);
        for (i, p) in self.extra_points.iter().enumerate() {
            c.that(p[0] > 0.0 && p[1] > 0.0, &format!("extra_points[{i}]"), "needs M, omega > 0");
        }
        c.that(self.csv_stride > 0, "csv_stride", "must be at least 1");
        c.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtraPoint {
    pub describing: DescribingFunctionResult,
    pub stability: LureStability,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChuaReport {
    pub closed_form: DescribingFunctionResult,
    pub quadrature: DescribingFunctionResult,
    pub stability: LureStability,
    pub bracket_stable: LureStability,
    pub bracket_unstable: LureStability,
    pub threshold: Option<f64>,
    pub input: LureInput,
    /// First-harmonic amplitude of `y` over the trailing periods.
    pub fundamental_amplitude: f64,
    pub amplitude_error: f64,
    /// `max |y(t) - y(t - T)| / M` over the last period.
    pub periodicity_gap: f64,
    pub extra_points: Vec<ExtraPoint>,
}

fn describing(cfg: &ChuaConfig, m: f64, w: f64) -> Result<DescribingFunctionResult> {
    match cfg.source {
        DescribingSource::ClosedForm => {
            let r = chua_closed_form(m, w);
            Ok(match cfg.convention {
                DescribingConvention::Literal => r,
                DescribingConvention::Classical => DescribingFunctionResult { p: r.p * w, convention: cfg.convention, ..r },
            })
        }
        DescribingSource::Quadrature => describing_function(&cfg.nonlinearity, m, w, cfg.convention),
    }
}

pub fn run_chua(cfg: &ChuaConfig) -> Result<(ChuaReport, Vec<(String, String)>)> {
    let (m, w) = (cfg.amplitude, cfg.omega);
    let closed_form = chua_closed_form(m, w);
    let quadrature = describing_function(&cfg.nonlinearity, m, w, cfg.convention)?;
    let df = describing(cfg, m, w)?;
    let stability = lure_stability(&cfg.plant, &df)?;
    let bracket_stable = lure_stability(&cfg.plant, &DescribingFunctionResult::constant_gain(cfg.bracket[0]))?;
    let bracket_unstable = lure_stability(&cfg.plant, &DescribingFunctionResult::constant_gain(cfg.bracket[1]))?;
    let threshold = constant_gain_threshold(&cfg.plant, cfg.threshold_search[0], cfg.threshold_search[1])?;
    let input = lure_input_reconstruct(&cfg.plant, &df, m, w, &cfg.nonlinearity)?;

    let system = LureSystem::new(cfg.plant.clone(), cfg.nonlinearity.clone())?;
    let period = 2.0 * PI / w;
    let horizon = cfg.periods as f64 * period;
    let x0 = vec![0.0; crate::models::NormalFormModel::dim(&system)];
    let traj = integrate(&system, &input.input, 0.0, horizon, &x0, &cfg.policy)?;

    let fit_start = horizon - cfg.fit_periods as f64 * period;
    let (mut a, mut b) = (0.0, 0.0);
    for k in 1..traj.len() {
        let (t0, t1) = (traj.times[k - 1], traj.times[k]);
        if t0 < fit_start - 1e-12 {
            continue;
        }
        let f = |i: usize| {
            let t = traj.times[i];
            let y = traj.state(i)[0];
            (y * (w * t).sin(), y * (w * t).cos())
        };
        let (s0, c0) = f(k - 1);
        let (s1, c1) = f(k);
        a += 0.5 * (t1 - t0) * (s0 + s1);
        b += 0.5 * (t1 - t0) * (c0 + c1);
    }
    let span = horizon - fit_start;
    let fundamental_amplitude = 2.0 / span * (a * a + b * b).sqrt();
    let mut buf = vec![0.0; x0.len()];
    let mut periodicity_gap: f64 = 0.0;
    for k in 0..traj.len() {
        let t = traj.times[k];
        if t >= horizon - period {
            traj.interpolate_into(t - period, &mut buf)?;
            periodicity_gap = periodicity_gap.max((traj.state(k)[0] - buf[0]).abs() / m);
        }
    }

    let extra_points = par::map(&cfg.extra_points, |&[pm, pw]| -> Result<ExtraPoint> {
        let d = describing(cfg, pm, pw)?;
        Ok(ExtraPoint { stability: lure_stability(&cfg.plant, &d)?, describing: d })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let csv = csv_table(&["t", "reference", "y", "u"], traj.len(), cfg.csv_stride, |i, j| {
        let t = traj.times[i];
        match j {
            0 => t,
            1 => m * (w * t).sin(),
            2 => traj.state(i)[0],
            _ => traj.inputs[i],
        }
    });
    let report = ChuaReport {
        closed_form,
        quadrature,
        stability,
        bracket_stable,
        bracket_unstable,
        threshold,
        input,
        amplitude_error: (fundamental_amplitude - m).abs() / m,
        fundamental_amplitude,
        periodicity_gap,
        extra_points,
    };
    Ok((report, vec![("chua_trajectory.csv".into(), csv)]))
}
