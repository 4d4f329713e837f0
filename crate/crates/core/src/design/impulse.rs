use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrate::Trajectory;
use crate::models::{FitzHughNagumo, NormalFormModel};
use crate::signal::{ImpulseShape, InputSignal};
use crate::variational::{floquet, state_transition, FloquetOptions, MonodromyResult};

/// Points per period scanned when choosing the impulse instant.
pub const PHASE_GRID: usize = 256;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FhnImpulseDesign {
    pub t0: f64,
    pub period: f64,
    /// Cycle tangent `v(t0)`, the vector field at the cycle point.
    pub tangent: [f64; 2],
    pub eps_n: f64,
    /// `1 - 3 beta eps_n^2 / eps`.
    pub first_order_multiplier: f64,
    /// `exp(-3 beta eps_n^2 / eps)`.
    pub exact_multiplier: f64,
    /// Output perturbation `Delta y`.
    pub train: InputSignal,
    pub free_monodromy: MonodromyResult,
    /// `Phi*(t0 + T, t0) diag(exp(-3 beta eps_n^2 / eps), 1)`.
    pub predicted_monodromy: MonodromyResult,
    /// Same with the first-order multiplier.
    pub predicted_first_order: MonodromyResult,
}

/// Chooses `t0` on the free cycle maximizing `|[1 0] v(t0)|` and sizes the
/// impulse train so that `3 beta eps_n^2 = eps_fraction eps`.
///
/// `cycle` must start at a cycle point and span at least two periods.
pub fn fhn_impulse_design(
    model: &FitzHughNagumo,
    cycle: &Trajectory,
    period: f64,
    eps_fraction: f64,
    width: f64,
    shape: ImpulseShape,
    max_step: Option<f64>,
) -> Result<FhnImpulseDesign> {
    if !(eps_fraction > 0.0 && eps_fraction < 1.0) {
        return Err(Error::InvalidParameter(format!("eps_fraction must lie in (0, 1), got {eps_fraction}")));
    }
    let start = cycle.t_start();
    let mut best = (start, [0.0; 2], -1.0);
    let mut buf = vec![0.0; 2];
    for k in 0..PHASE_GRID {
        let t = start + period * k as f64 / PHASE_GRID as f64;
        cycle.interpolate_into(t, &mut buf)?;
        let mut v = [0.0; 2];
        model.vector_field(t, &buf, 0.0, &mut v);
        if v[0].abs() > best.2 {
            best = (t, v, v[0].abs());
        }
    }
    let (t0, tangent, size) = best;
    if size < 1e-8 {
        return Err(Error::TangentDegenerate { max: size });
    }
    let jump = eps_fraction;
    let eps_n = (eps_fraction * model.eps / (3.0 * model.beta)).sqrt();
    let train = InputSignal::ImpulseTrain { start: t0, period, magnitudes: vec![eps_n], width, shape };
    let opts = FloquetOptions { max_step, ..FloquetOptions::default() };
    let free = floquet(model, cycle, t0, period, &opts)?;
    let phi = free.matrix();
    let predicted = |m: f64| -> Result<MonodromyResult> {
        let d = DMatrix::from_row_slice(2, 2, &[m, 0.0, 0.0, 1.0]);
        let p = &phi * d;
        let tr = free.liouville_determinant.ln() + m.ln();
        MonodromyResult::from_matrix(&p, t0, period, tr)
    };
    Ok(FhnImpulseDesign {
        t0,
        period,
        tangent,
        eps_n,
        first_order_multiplier: 1.0 - jump,
        exact_multiplier: (-jump).exp(),
        train,
        predicted_monodromy: predicted((-jump).exp())?,
        predicted_first_order: predicted(1.0 - jump)?,
        free_monodromy: free,
    })
}

/// The predicted monodromy conjugated to a window starting `lead` before the
/// impulse: `Phi*(t0 - lead + T, t0) J Phi*(t0, t0 - lead)`.
pub fn shifted_prediction(
    model: &FitzHughNagumo,
    cycle: &Trajectory,
    design: &FhnImpulseDesign,
    lead: f64,
    multiplier: f64,
    max_step: Option<f64>,
) -> Result<DMatrix<f64>> {
    let (t0, period) = (design.t0, design.period);
    let before = state_transition(model, cycle, t0 - lead + period, t0 + period, max_step)?;
    let after = state_transition(model, cycle, t0, t0 + period - lead, max_step)?;
    let jump = DMatrix::from_row_slice(2, 2, &[multiplier, 0.0, 0.0, 1.0]);
    // Phi*(t0 - lead + T, t0) = Phi*(t0 + T - lead, t0); Phi*(t0, t0 - lead) = Phi*(t0 + T, t0 + T - lead) by periodicity.
    Ok(after.phi * jump * before.phi)
}
