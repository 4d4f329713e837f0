//! Systems in normal form
//!
//! ```text
//! y = x_1,  x_i' = x_{i+1} (i < r),  x_r' = f(t, x, z, u),  z' = g(t, z, x)
//! ```
//!
//! A state vector is laid out as `[x_1, .., x_r, z_1, .., z_{n-r}]`. Every
//! built-in model provides hand-coded partial derivatives, which the trait
//! assembles into the block Jacobian with the integrator-chain rows fixed.

mod fhn;
mod hh;
mod kapitza;
mod lorenz;
mod lure;
mod neuron;
mod params;

pub use fhn::FitzHughNagumo;
pub use hh::HhConductance;
pub use kapitza::Kapitza;
pub use lorenz::Lorenz;
pub use lure::{LureSystem, TransferFunction};
pub use neuron::{sat, NeuronPlant};
pub use params::ModelParams;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Default lower bound on `|df/du|`.
pub const DEFAULT_GAIN_FLOOR: f64 = 1e-8;

pub trait NormalFormModel: Send + Sync {
    fn name(&self) -> &str;

    /// State dimension `n`.
    fn dim(&self) -> usize;

    /// Relative degree `r`, with `1 <= r <= n`.
    fn relative_degree(&self) -> usize;

    /// `f(t, x, z, u)`, the derivative of the last chain state.
    fn output_dynamics(&self, t: f64, x: &[f64], z: &[f64], u: f64) -> f64;

    /// `g(t, z, x)`, written into `dz` (length `n - r`).
    fn internal_dynamics(&self, t: f64, z: &[f64], x: &[f64], dz: &mut [f64]);

    /// `df/du` at the given point.
    fn input_gain(&self, t: f64, x: &[f64], z: &[f64], u: f64) -> f64;

    /// Uniform sign of `df/du`, either `1.0` or `-1.0`.
    fn input_gain_sign(&self) -> f64 {
        1.0
    }

    fn gain_floor(&self) -> f64 {
        DEFAULT_GAIN_FLOOR
    }

    /// Writes `df/dx` (length `r`) and `df/dz` (length `n - r`).
    fn output_partials(
        &self,
        t: f64,
        x: &[f64],
        z: &[f64],
        u: f64,
        df_dx: &mut [f64],
        df_dz: &mut [f64],
    );

    /// Writes `dg/dx` (`(n - r) x r`, row-major) and `dg/dz` (`(n - r) x (n - r)`, row-major).
    fn internal_partials(&self, t: f64, z: &[f64], x: &[f64], dg_dx: &mut [f64], dg_dz: &mut [f64]);

    /// Relaxation parameter for singularly perturbed models.
    fn relaxation(&self) -> Option<f64> {
        None
    }

    fn state_names(&self) -> Vec<String> {
        let r = self.relative_degree();
        (0..self.dim())
            .map(|i| if i < r { format!("x{}", i + 1) } else { format!("z{}", i - r + 1) })
            .collect()
    }

    /// Full vector field `col(x_2, .., x_r, f, g)`.
    fn vector_field(&self, t: f64, state: &[f64], u: f64, out: &mut [f64]) {
        let r = self.relative_degree();
        let (x, z) = state.split_at(r);
        out[..r - 1].copy_from_slice(&x[1..]);
        out[r - 1] = self.output_dynamics(t, x, z, u);
        self.internal_dynamics(t, z, x, &mut out[r..]);
    }

    /// Block Jacobian of the vector field with respect to the state.
    fn jacobian(&self, t: f64, state: &[f64], u: f64) -> DMatrix<f64> {
        let n = self.dim();
        let r = self.relative_degree();
        let m = n - r;
        let (x, z) = state.split_at(r);
        let mut jac = DMatrix::zeros(n, n);
        for i in 0..r - 1 {
            jac[(i, i + 1)] = 1.0;
        }
        let mut df_dx = vec![0.0; r];
        let mut df_dz = vec![0.0; m];
        self.output_partials(t, x, z, u, &mut df_dx, &mut df_dz);
        for j in 0..r {
            jac[(r - 1, j)] = df_dx[j];
        }
        for j in 0..m {
            jac[(r - 1, r + j)] = df_dz[j];
        }
        if m > 0 {
            let mut dg_dx = vec![0.0; m * r];
            let mut dg_dz = vec![0.0; m * m];
            self.internal_partials(t, z, x, &mut dg_dx, &mut dg_dz);
            for i in 0..m {
                for j in 0..r {
                    jac[(r + i, j)] = dg_dx[i * r + j];
                }
                for j in 0..m {
                    jac[(r + i, r + j)] = dg_dz[i * m + j];
                }
            }
        }
        jac
    }
}

/// Evaluates the vector field, rejecting non-finite components.
pub fn eval_dynamics<M: NormalFormModel + ?Sized>(
    model: &M,
    t: f64,
    state: &[f64],
    u: f64,
) -> Result<Vec<f64>> {
    if state.len() != model.dim() {
        return Err(Error::DimensionMismatch { expected: model.dim(), got: state.len() });
    }
    let mut out = vec![0.0; model.dim()];
    model.vector_field(t, state, u, &mut out);
    if let Some(index) = out.iter().position(|v| !v.is_finite()) {
        return Err(Error::NumericalBlowup { t, index });
    }
    Ok(out)
}

const FINV_MAX_EXPANSIONS: usize = 80;
const FINV_MAX_ITER: usize = 200;

/// Solves `f(t, x, z, u) = v` for `u`.
///
/// The root is bracketed by stepping away from `u = 0` in the direction
/// given by the monotonicity of `f` in `u`, then refined with Newton steps
/// that fall back to bisection whenever they leave the bracket.
pub fn f_inv_solve<M: NormalFormModel + ?Sized>(
    model: &M,
    t: f64,
    x: &[f64],
    z: &[f64],
    v: f64,
) -> Result<f64> {
    let sign = model.input_gain_sign();
    let tol = 1e-10 * v.abs().max(1.0);
    let resid = |u: f64| sign * (model.output_dynamics(t, x, z, u) - v);

    // Newton from the origin settles input-affine models in one step.
    let mut u = 0.0;
    let mut r = resid(u);
    if !r.is_finite() {
        return Err(Error::NumericalBlowup { t, index: model.relative_degree() - 1 });
    }
    if r.abs() <= tol {
        return Ok(u);
    }
    let gain = sign * model.input_gain(t, x, z, u);
    if gain >= model.gain_floor() {
        let trial = u - r / gain;
        let rt = resid(trial);
        if rt.abs() <= tol {
            return Ok(trial);
        }
    }

    // `resid` is increasing in u: find lo < hi with resid(lo) <= 0 <= resid(hi).
    let mut step = v.abs().max(1.0);
    let (mut lo, mut hi, mut r_lo, mut r_hi);
    if r < 0.0 {
        lo = u;
        r_lo = r;
        hi = u + step;
        r_hi = resid(hi);
        let mut k = 0;
        while r_hi < 0.0 {
            k += 1;
            if k > FINV_MAX_EXPANSIONS || !r_hi.is_finite() {
                return Err(Error::GainFloorViolated { t, bound: hi.abs() });
            }
            lo = hi;
            r_lo = r_hi;
            step *= 2.0;
            hi += step;
            r_hi = resid(hi);
        }
    } else {
        hi = u;
        r_hi = r;
        lo = u - step;
        r_lo = resid(lo);
        let mut k = 0;
        while r_lo > 0.0 {
            k += 1;
            if k > FINV_MAX_EXPANSIONS || !r_lo.is_finite() {
                return Err(Error::GainFloorViolated { t, bound: lo.abs() });
            }
            hi = lo;
            r_hi = r_lo;
            step *= 2.0;
            lo -= step;
            r_lo = resid(lo);
        }
    }
    if r_lo.abs() <= tol {
        return Ok(lo);
    }
    if r_hi.abs() <= tol {
        return Ok(hi);
    }

    u = 0.5 * (lo + hi);
    for _ in 0..FINV_MAX_ITER {
        r = resid(u);
        if r.abs() <= tol {
            return Ok(u);
        }
        if r < 0.0 {
            lo = u;
        } else {
            hi = u;
        }
        let gain = sign * model.input_gain(t, x, z, u);
        let newton = u - r / gain;
        u = if gain > 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if hi - lo <= f64::EPSILON * hi.abs().max(lo.abs()).max(1.0) {
            return Ok(u);
        }
    }
    Ok(u)
}
