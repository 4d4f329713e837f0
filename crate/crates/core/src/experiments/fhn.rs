use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{csv_table, Checks};
use crate::design::{feedforward_from_reference, fhn_impulse_design, shifted_prediction, FeedforwardOptions, FhnImpulseDesign};
use crate::error::{Error, Result};
use crate::integrate::{find_limit_cycle, integrate, CycleOptions, Direction, Section, StepPolicy, Trajectory};
use crate::models::{FitzHughNagumo, ModelParams, NormalFormModel};
use crate::par;
use crate::signal::{ImpulseShape, InputSignal, IMPULSE_SUPPORT};
use crate::variational::{state_transition, MonodromyResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FhnConfig {
    pub model: FitzHughNagumo,
    /// `3 beta eps_n^2 / eps`.
    pub eps_fraction: f64,
    pub width: f64,
    pub shape: ImpulseShape,
    /// Step of the free-orbit integration, rounded so that a period is a whole number of steps.
    pub cycle_step: f64,
    /// Step of the entrained runs (impulse supports are refined automatically).
    pub policy: StepPolicy,
    pub initial_guess: [f64; 2],
    pub warmup: f64,
    /// Period index at which the realized monodromy is measured.
    pub monodromy_period: usize,
    pub matrix_tol: f64,
    /// Phase of the second trajectory, as a fraction of the period.
    pub phase_offset: f64,
    pub sync_periods: usize,
    pub simulated_periods: usize,
    pub sync_tol: f64,
    /// Extra relaxation parameters for the free-multiplier trend.
    pub trend_eps: Vec<f64>,
    pub csv_stride: usize,
}

impl Default for FhnConfig {
    fn default() -> Self {
        Self {
            model: FitzHughNagumo::new(1.0, 1.0, 1.0, 0.1),
            eps_fraction: 0.5,
            width: 1e-4,
            shape: ImpulseShape::SqrtDelta,
            cycle_step: 1e-3,
            policy: StepPolicy::Rk4 { h: 1e-3 },
            initial_guess: [1.0, 0.0],
            warmup: 20.0,
            monodromy_period: 5,
            matrix_tol: 0.02,
            phase_offset: 0.5,
            sync_periods: 30,
            simulated_periods: 32,
            sync_tol: 1e-3,
            trend_eps: vec![0.05, 0.02],
            csv_stride: 10,
        }
    }
}

impl FhnConfig {
    pub fn validate(&self) -> Vec<String> {
        let mut c = Checks::default();
        c.model("model", &ModelParams::Fhn(self.model));
        c.that(self.eps_fraction > 0.0 && self.eps_fraction < 1.0, "eps_fraction", "must lie in (0, 1)");
        c.positive("width", self.width);
        c.positive("cycle_step", self.cycle_step);
        c.policy("policy", &self.policy);
        c.finite("initial_guess[0]", self.initial_guess[0]);
        c.finite("initial_guess[1]", self.initial_guess[1]);
        c.nonneg("warmup", self.warmup);
        c.positive("matrix_tol", self.matrix_tol);
        c.that((0.0..1.0).contains(&self.phase_offset), "phase_offset", "must lie in [0, 1)");
        c.that(self.simulated_periods > self.monodromy_period, "simulated_periods", "must exceed monodromy_period");
        c.that(self.simulated_periods >= self.sync_periods, "simulated_periods", "must be at least sync_periods");
        c.positive("sync_tol", self.sync_tol);
        for (i, e) in self.trend_eps.iter().enumerate() {
            c.positive(&format!("trend_eps[{i}]"), *e);
        }
        c.that(self.csv_stride > 0, "csv_stride", "must be at least 1");
        c.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiplierTrend {
    pub eps: f64,
    pub period: f64,
    pub lambda_star: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FhnReport {
    pub period: f64,
    pub design: FhnImpulseDesign,
    /// Distance of the closest free multiplier to one.
    pub unit_multiplier_gap: f64,
    /// Modulus of the other free multiplier.
    pub lambda_star: f64,
    pub realized_monodromy: MonodromyResult,
    /// `Phi*(.., t0 + T - lead) diag(exp(-eps_fraction), 1) Phi*(t0 + T - lead, ..)` in row-major order.
    pub predicted: Vec<f64>,
    /// Per-entry `|realized - predicted| / |predicted|`, row-major.
    pub entry_errors: Vec<f64>,
    pub max_entry_error: f64,
    pub feedforward_residual: f64,
    /// Max output difference of the two trajectories over each period.
    pub period_differences: Vec<f64>,
    /// First period index after which the output difference stays below `sync_tol`.
    pub synchronized_after: Option<usize>,
    pub trend: Vec<MultiplierTrend>,
}

/// One period of the free orbit on a grid that lands on `T`, extended to `periods` periods.
fn free_orbit(model: &FitzHughNagumo, guess: [f64; 2], step: f64, periods: f64) -> Result<(f64, Trajectory)> {
    let section = Section { index: 0, level: 0.0, direction: Direction::Up };
    let lc = find_limit_cycle(model, &InputSignal::Zero, &guess, section, &StepPolicy::Rk4 { h: step }, &CycleOptions::default())?;
    let n = (lc.period / step).ceil();
    let h = lc.period / n;
    let traj = integrate(model, &InputSignal::Zero, 0.0, periods * lc.period, &lc.anchor, &StepPolicy::Rk4 { h })?;
    Ok((lc.period, traj))
}

fn lambda_star(m: &MonodromyResult) -> (f64, f64) {
    let mut gaps: Vec<(f64, f64)> = m.eigenvalues.iter().map(|l| ((l - 1.0).norm(), l.norm())).collect();
    gaps.sort_by(|a, b| a.0.total_cmp(&b.0));
    (gaps[0].0, gaps.get(1).map(|g| g.1).unwrap_or(f64::NAN))
}

/// Periodic Hermite interpolant of `y*` over `[0, T]`.
fn periodic_output(model: &FitzHughNagumo, cycle: &Trajectory, period: f64) -> InputSignal {
    let mut knots = Vec::new();
    let mut d = [0.0; 2];
    for i in 0..cycle.len() {
        let t = cycle.times[i];
        if t > period * (1.0 + 1e-12) {
            break;
        }
        model.vector_field(t, cycle.state(i), 0.0, &mut d);
        knots.push([t, cycle.state(i)[0], d[0]]);
    }
    let first = knots[0];
    let last = knots.last_mut().expect("nonempty orbit");
    *last = [period, first[1], first[2]];
    InputSignal::Hermite { knots, periodic: true }
}

pub fn run_fhn(cfg: &FhnConfig) -> Result<(FhnReport, Vec<(String, String)>)> {
    let model = cfg.model;
    let (period, cycle) = free_orbit(&model, cfg.initial_guess, cfg.cycle_step, 2.25)?;
    let design = fhn_impulse_design(&model, &cycle, period, cfg.eps_fraction, cfg.width, cfg.shape, None)?;
    let (unit_multiplier_gap, lambda_star_free) = lambda_star(&design.free_monodromy);

    let reference = InputSignal::sum(vec![periodic_output(&model, &cycle, period), design.train.clone()]);
    let horizon = cfg.simulated_periods as f64 * period;
    let z_start = cycle.interpolate((-cfg.warmup).rem_euclid(period))?[1];
    let opts = FeedforwardOptions { warmup: Some(cfg.warmup), policy: Some(cfg.policy), ..Default::default() };
    let ff = feedforward_from_reference(&ModelParams::Fhn(model), &reference, &[z_start], 0.0, horizon, &opts)?;

    let xa = ff.reference.state(0).to_vec();
    let xb = cycle.interpolate(cfg.phase_offset * period)?;
    let runs = par::map(&[xa, xb], |x0| integrate(&model, &ff.input, 0.0, horizon, x0, &cfg.policy));
    let mut runs = runs.into_iter();
    let ta = runs.next().expect("two runs")?;
    let tb = runs.next().expect("two runs")?;

    let lead = IMPULSE_SUPPORT * cfg.width;
    let s0 = design.t0 + cfg.monodromy_period as f64 * period - lead;
    let tr = state_transition(&model, &ta, s0, s0 + period, None)?;
    let realized_monodromy = MonodromyResult::from_matrix(&tr.phi, s0, period, tr.trace_integral)?;
    let predicted: DMatrix<f64> = shifted_prediction(&model, &cycle, &design, lead, (-cfg.eps_fraction).exp(), None)?;
    let entry_errors: Vec<f64> = (0..2)
        .flat_map(|i| (0..2).map(move |j| (i, j)))
        .map(|(i, j)| (tr.phi[(i, j)] - predicted[(i, j)]).abs() / predicted[(i, j)].abs())
        .collect();

    if ta.times != tb.times {
        return Err(Error::InvalidParameter("synchronization runs need a fixed-step policy".into()));
    }
    let mut period_differences = vec![0.0f64; cfg.simulated_periods];
    for i in 0..ta.len() {
        let k = ((ta.times[i] / period) as usize).min(cfg.simulated_periods - 1);
        period_differences[k] = period_differences[k].max((ta.state(i)[0] - tb.state(i)[0]).abs());
    }
    let synchronized_after = (0..cfg.simulated_periods).find(|&k| period_differences[k..].iter().all(|d| *d < cfg.sync_tol));

    let trend = par::map(&cfg.trend_eps, |&eps| -> Result<MultiplierTrend> {
        let m = FitzHughNagumo { eps, ..model };
        let (p, orbit) = free_orbit(&m, cfg.initial_guess, cfg.cycle_step.min(eps / 50.0), 1.25)?;
        let mono = crate::variational::floquet(&m, &orbit, 0.0, p, &Default::default())?;
        Ok(MultiplierTrend { eps, period: p, lambda_star: lambda_star(&mono).1 })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let y_ref: Vec<f64> = ta.times.iter().map(|t| reference.value(*t)).collect();
    let csv = csv_table(&["t", "reference", "y_a", "y_b", "u"], ta.len(), cfg.csv_stride, |i, j| match j {
        0 => ta.times[i],
        1 => y_ref[i],
        2 => ta.state(i)[0],
        3 => tb.state(i)[0],
        _ => ta.inputs[i],
    });
    let cycle_csv = csv_table(&["t", "y", "z"], cycle.len(), 1, |i, j| if j == 0 { cycle.times[i] } else { cycle.state(i)[j - 1] });

    let report = FhnReport {
        period,
        unit_multiplier_gap,
        lambda_star: lambda_star_free,
        predicted: predicted.transpose().iter().copied().collect(),
        max_entry_error: entry_errors.iter().copied().fold(0.0, f64::max),
        entry_errors,
        realized_monodromy,
        feedforward_residual: ff.max_residual,
        period_differences,
        synchronized_after,
        trend,
        design,
    };
    Ok((report, vec![("fhn_trajectory.csv".into(), csv), ("fhn_free_cycle.csv".into(), cycle_csv)]))
}
