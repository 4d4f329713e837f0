//! Linearization along sampled trajectories.

mod eigen;
mod hurwitz;
mod probe;

pub use eigen::{characteristic_polynomial, eigen_small, EigenDecomposition};
pub use hurwitz::{hurwitz, routh_first_column, StabilityVerdict, VerdictMethod};
pub use probe::{contraction_probe, slope, ProbeResult};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrate::Trajectory;
use crate::models::NormalFormModel;

/// Time-varying matrix `A(t)` evaluated from a sampled state and input.
///
/// The sampled state may have a different dimension than `A`, for instance
/// when `A` couples a plant reference to extra estimator states.
pub trait Linearization: Send + Sync {
    fn dim(&self) -> usize;
    fn matrix(&self, t: f64, state: &[f64], u: f64) -> DMatrix<f64>;
}

impl<M: NormalFormModel + ?Sized> Linearization for M {
    fn dim(&self) -> usize {
        NormalFormModel::dim(self)
    }

    fn matrix(&self, t: f64, state: &[f64], u: f64) -> DMatrix<f64> {
        self.jacobian(t, state, u)
    }
}

/// A constant matrix, useful as a test fixture.
pub struct ConstantLinearization(pub DMatrix<f64>);

impl Linearization for ConstantLinearization {
    fn dim(&self) -> usize {
        self.0.nrows()
    }

    fn matrix(&self, _t: f64, _state: &[f64], _u: f64) -> DMatrix<f64> {
        self.0.clone()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub phi: DMatrix<f64>,
    /// `int trace A` over the same nodes (Simpson per step), for the Liouville check.
    pub trace_integral: f64,
}

impl Transition {
    /// Relative gap between `det Phi` and `exp(int trace A)`.
    pub fn liouville_gap(&self) -> f64 {
        let want = self.trace_integral.exp();
        (self.phi.determinant() - want).abs() / want.abs().max(f64::MIN_POSITIVE)
    }
}

/// `Phi(t1, t0)` of `Phi' = A(t) Phi`, with `A` evaluated on the linear
/// interpolant of `traj`. Steps follow the trajectory grid, subdivided to at
/// most `max_step` when given.
pub fn state_transition<L: Linearization + ?Sized>(
    lin: &L,
    traj: &Trajectory,
    t0: f64,
    t1: f64,
    max_step: Option<f64>,
) -> Result<Transition> {
    let (lo, hi) = (traj.t_start(), traj.t_end());
    let slack = 1e-12 * (hi - lo).abs().max(1.0);
    if t0 < lo - slack || t1 > hi + slack || t1 < t0 {
        return Err(Error::OutsideSpan { t0, t1, lo, hi });
    }
    let n = lin.dim();
    let mut nodes = vec![t0];
    nodes.extend(traj.times.iter().copied().filter(|t| *t > t0 && *t < t1));
    if t1 > t0 {
        nodes.push(t1);
    }
    let mut phi = DMatrix::<f64>::identity(n, n);
    let mut trace_integral = 0.0;
    let mut buf = vec![0.0; traj.dim()];
    let mut a_at = |t: f64| -> Result<DMatrix<f64>> {
        let u = traj.interpolate_into(t, &mut buf)?;
        Ok(lin.matrix(t, &buf, u))
    };
    let mut a_left = if nodes.len() > 1 { Some(a_at(t0)?) } else { None };
    for w in nodes.windows(2) {
        let (a, b) = (w[0], w[1]);
        let pieces = match max_step {
            Some(hm) if hm > 0.0 => (((b - a) / hm) * (1.0 - 1e-12)).ceil().max(1.0) as usize,
            _ => 1,
        };
        let dt = (b - a) / pieces as f64;
        for p in 0..pieces {
            let s = a + p as f64 * dt;
            let e = if p + 1 == pieces { b } else { a + (p + 1) as f64 * dt };
            let h = e - s;
            let a0 = a_left.take().expect("left matrix carried forward");
            let am = a_at(s + 0.5 * h)?;
            let a1 = a_at(e)?;
            let k1 = &a0 * &phi;
            let k2 = &am * (&phi + &k1 * (0.5 * h));
            let k3 = &am * (&phi + &k2 * (0.5 * h));
            let k4 = &a1 * (&phi + &k3 * h);
            phi += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
            trace_integral += h / 6.0 * (a0.trace() + 4.0 * am.trace() + a1.trace());
            if let Some(idx) = phi.iter().position(|v| !v.is_finite()) {
                return Err(Error::NumericalBlowup { t: e, index: idx });
            }
            a_left = Some(a1);
        }
    }
    Ok(Transition { phi, trace_integral })
}

/// Monodromy matrix with its spectrum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonodromyResult {
    pub t0: f64,
    #[serde(rename = "T")]
    pub period: f64,
    /// Row-major entries of `Phi(t0 + T, t0)`.
    #[serde(rename = "Phi")]
    pub phi: Vec<f64>,
    pub dim: usize,
    #[serde(with = "complex_pairs")]
    pub eigenvalues: Vec<Complex64>,
    pub spectral_radius: f64,
    pub right_eigenvectors: Vec<Option<Vec<f64>>>,
    pub determinant: f64,
    pub liouville_determinant: f64,
}

mod complex_pairs {
    use num_complex::Complex64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[Complex64], s: S) -> Result<S::Ok, S::Error> {
        let pairs: Vec<[f64; 2]> = v.iter().map(|c| [c.re, c.im]).collect();
        pairs.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Complex64>, D::Error> {
        let pairs = Vec::<[f64; 2]>::deserialize(d)?;
        Ok(pairs.into_iter().map(|[re, im]| Complex64::new(re, im)).collect())
    }
}

impl MonodromyResult {
    pub fn from_matrix(phi: &DMatrix<f64>, t0: f64, period: f64, trace_integral: f64) -> Result<Self> {
        let e = eigen_small(phi)?;
        let n = phi.nrows();
        Ok(Self {
            t0,
            period,
            phi: (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| phi[(i, j)]).collect(),
            dim: n,
            spectral_radius: e.spectral_radius(),
            eigenvalues: e.values,
            right_eigenvectors: e.vectors,
            determinant: phi.determinant(),
            liouville_determinant: trace_integral.exp(),
        })
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.dim, self.dim, &self.phi)
    }

    pub fn liouville_gap(&self) -> f64 {
        (self.determinant - self.liouville_determinant).abs() / self.liouville_determinant.abs().max(f64::MIN_POSITIVE)
    }

    pub fn verdict(&self) -> StabilityVerdict {
        StabilityVerdict::from_margin(1.0 - self.spectral_radius, VerdictMethod::Monodromy)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("monodromy record is serializable")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FloquetOptions {
    pub max_step: Option<f64>,
    /// Allowed `|x(t0 + T) - x(t0)| / (1 + |x(t0)|)`.
    pub period_tol: f64,
}

impl Default for FloquetOptions {
    fn default() -> Self {
        Self { max_step: None, period_tol: 1e-4 }
    }
}

/// Monodromy `Phi(t0 + T, t0)` along a periodic trajectory.
pub fn floquet<L: Linearization + ?Sized>(
    lin: &L,
    traj: &Trajectory,
    t0: f64,
    period: f64,
    opts: &FloquetOptions,
) -> Result<MonodromyResult> {
    let xa = traj.interpolate(t0)?;
    let xb = traj.interpolate(t0 + period)?;
    let gap = xa.iter().zip(&xb).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    let norm = xa.iter().map(|a| a * a).sum::<f64>().sqrt();
    let rel = gap / (1.0 + norm);
    if rel > opts.period_tol {
        return Err(Error::PeriodMismatch { gap: rel, tol: opts.period_tol });
    }
    let tr = state_transition(lin, traj, t0, t0 + period, opts.max_step)?;
    MonodromyResult::from_matrix(&tr.phi, t0, period, tr.trace_integral)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrate::{integrate, FnSystem, StepPolicy};
    use crate::signal::InputSignal;

    fn dummy_traj(t1: f64) -> Trajectory {
        let sys = FnSystem::new(1, |_t, _x: &[f64], _u, out: &mut [f64]| out[0] = 0.0);
        integrate(&sys, &InputSignal::Zero, 0.0, t1, &[0.0], &StepPolicy::Rk4 { h: 0.1 }).unwrap()
    }

    #[test]
    fn zero_matrix_gives_identity() {
        let lin = ConstantLinearization(DMatrix::zeros(3, 3));
        let tr = state_transition(&lin, &dummy_traj(2.0), 0.0, 2.0, None).unwrap();
        assert_eq!(tr.phi, DMatrix::identity(3, 3));
    }

    #[test]
    fn nilpotent_exponential() {
        let lin = ConstantLinearization(DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]));
        let tr = state_transition(&lin, &dummy_traj(3.0), 0.0, 2.5, None).unwrap();
        let want = DMatrix::from_row_slice(2, 2, &[1.0, 2.5, 0.0, 1.0]);
        assert!((tr.phi - want).amax() < 1e-13);
    }

    #[test]
    fn json_record_layout() {
        let phi = DMatrix::from_row_slice(2, 2, &[0.5, 1.0, 0.0, 0.25]);
        let m = MonodromyResult::from_matrix(&phi, 1.0, 2.0, (0.125f64).ln()).unwrap();
        let v = m.to_json();
        assert_eq!(v["T"], 2.0);
        assert_eq!(v["Phi"][1], 1.0);
        assert_eq!(v["eigenvalues"][0][0], 0.5);
        assert!((m.spectral_radius - 0.5).abs() < 1e-15);
        assert!(m.liouville_gap() < 1e-12);
        let back: MonodromyResult = serde_json::from_value(v).unwrap();
        assert_eq!(back, m);
    }
}
