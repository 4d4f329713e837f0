use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrate::{integrate, DrivenSystem, StepPolicy, Trajectory, TrajectoryMeta};
use crate::models::{f_inv_solve, ModelParams, NormalFormModel};
use crate::signal::InputSignal;
use crate::variational::{contraction_probe, ProbeResult};

/// Inverse system `z' = g(t, z, x**(t))` driven by the reference derivatives.
pub struct InverseSystem<'a> {
    pub model: &'a dyn NormalFormModel,
    pub reference: &'a InputSignal,
}

impl InverseSystem<'_> {
    fn chain(&self, t: f64) -> Vec<f64> {
        (0..self.model.relative_degree()).map(|k| self.reference.derivative(t, k).unwrap_or(f64::NAN)).collect()
    }
}

impl DrivenSystem for InverseSystem<'_> {
    fn dim(&self) -> usize {
        self.model.dim() - self.model.relative_degree()
    }

    fn rhs(&self, t: f64, z: &[f64], _u: f64, out: &mut [f64]) {
        let x = self.chain(t);
        self.model.internal_dynamics(t, z, &x, out);
    }

    fn state_names(&self) -> Vec<String> {
        let names = self.model.state_names();
        names[self.model.relative_degree()..].iter().map(|n| format!("{n}_bar")).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedforwardOptions {
    /// Time discarded before `t0`; `None` uses twenty time constants of the probed rate.
    pub warmup: Option<f64>,
    pub policy: Option<StepPolicy>,
    /// Initial horizon of the inverse-system probe, doubled until the verdict settles.
    pub probe_horizon: f64,
}

impl Default for FeedforwardOptions {
    fn default() -> Self {
        Self { warmup: None, policy: None, probe_horizon: 20.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeedforwardResult {
    /// `u**` evaluated on the fly from the reference and the sampled internal states.
    pub input: InputSignal,
    /// Full reference state `(x**, z_bar)` with `u**` in the input column, on `[t0, t1]`.
    pub reference: Trajectory,
    /// Largest `|f(t, x**, z_bar, u**) - x_r**'| / max(1, |x_r**'|)` over the samples.
    pub max_residual: f64,
    pub warmup: f64,
    pub probe: Option<ProbeResult>,
}

/// Builds `u**` from an output reference by simulating the inverse system from
/// `zbar_ic` at `t0 - warmup` and inverting the output dynamics pointwise.
pub fn feedforward_from_reference(
    params: &ModelParams,
    reference: &InputSignal,
    zbar_ic: &[f64],
    t0: f64,
    t1: f64,
    opts: &FeedforwardOptions,
) -> Result<FeedforwardResult> {
    let model = params.build()?;
    let model = model.as_ref();
    let (n, r) = (model.dim(), model.relative_degree());
    let m = n - r;
    if zbar_ic.len() != m {
        return Err(Error::DimensionMismatch { expected: m, got: zbar_ic.len() });
    }
    reference.validate().map_err(Error::InvalidParameter)?;
    reference.derivative(t0, r)?;
    let inverse = InverseSystem { model, reference };

    let (probe, warmup) = if m == 0 {
        (None, opts.warmup.unwrap_or(0.0))
    } else {
        let shifted: Vec<f64> = zbar_ic.iter().map(|z| z + 1.0).collect();
        let mut horizon = opts.probe_horizon;
        let probe = loop {
            let policy = opts.policy.unwrap_or_else(|| StepPolicy::default_rk4(&inverse, reference, horizon));
            let p = contraction_probe(&inverse, reference, zbar_ic, &shifted, t0 - horizon, horizon, &policy, &[])?;
            if p.verdict.stable || p.rate >= 0.0 || horizon >= 16.0 * opts.probe_horizon {
                break p;
            }
            horizon *= 2.0;
        };
        if !probe.verdict.stable {
            return Err(Error::InverseNotContracting { rate: probe.rate });
        }
        (Some(probe.clone()), opts.warmup.unwrap_or(20.0 / probe.rate.abs()))
    };

    let mut names = model.state_names();
    let meta;
    let samples: Vec<(f64, Vec<f64>)> = if m == 0 {
        let policy = opts.policy.unwrap_or_else(|| StepPolicy::default_rk4(model, reference, t1 - t0));
        meta = TrajectoryMeta { policy };
        grid(reference, t0, t1, &policy).into_iter().map(|t| (t, Vec::new())).collect()
    } else {
        let start = t0 - warmup;
        let policy = opts.policy.unwrap_or_else(|| StepPolicy::default_rk4(&inverse, reference, t1 - start));
        meta = TrajectoryMeta { policy };
        let traj = integrate(&inverse, reference, start, t1, zbar_ic, &policy)?;
        (0..traj.len()).map(|i| (traj.times[i], traj.state(i).to_vec())).collect()
    };

    let mut internal = vec![Vec::with_capacity(samples.len()); m];
    let mut dz = vec![0.0; m];
    for (t, z) in &samples {
        let x = inverse.chain(*t);
        model.internal_dynamics(*t, z, &x, &mut dz);
        for i in 0..m {
            internal[i].push([*t, z[i], dz[i]]);
        }
    }
    for table in &mut internal {
        table.dedup_by(|b, a| a[0] == b[0]);
    }

    let mut out = Trajectory::new(n, std::mem::take(&mut names), meta);
    let mut max_residual: f64 = 0.0;
    let mut state = vec![0.0; n];
    for (t, z) in samples.iter().filter(|(t, _)| *t >= t0 - 1e-12 * (1.0 + t0.abs())) {
        let x = inverse.chain(*t);
        let v = reference.derivative(*t, r)?;
        let u = f_inv_solve(model, *t, &x, z, v)?;
        let resid = (model.output_dynamics(*t, &x, z, u) - v).abs() / v.abs().max(1.0);
        max_residual = max_residual.max(resid);
        state[..r].copy_from_slice(&x);
        state[r..].copy_from_slice(z);
        if !out.is_empty() && out.t_end() == *t {
            continue;
        }
        out.push(*t, &state, u);
    }
    let input = InputSignal::Feedforward { model: params.clone(), reference: Box::new(reference.clone()), internal };
    Ok(FeedforwardResult { input, reference: out, max_residual, warmup, probe })
}

/// Sample times a fixed-step run would use, for references without internal dynamics.
fn grid(reference: &InputSignal, t0: f64, t1: f64, policy: &StepPolicy) -> Vec<f64> {
    let h = match policy {
        StepPolicy::Rk4 { h } => *h,
        StepPolicy::Dopri5 { h_init, .. } => *h_init,
    };
    let mut cuts = vec![t0];
    cuts.extend(reference.breakpoints(t0, t1));
    cuts.push(t1);
    let mut out = Vec::new();
    for w in cuts.windows(2) {
        let k = ((w[1] - w[0]) / h).ceil().max(1.0) as usize;
        for j in 0..k {
            out.push(w[0] + (w[1] - w[0]) * j as f64 / k as f64);
        }
    }
    out.push(t1);
    out
}
