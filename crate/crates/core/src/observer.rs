//! Adaptive observer built as a plant copy with a parameter update driven by
//! the output antiderivative mismatch.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrate::{integrate, DrivenSystem, StepPolicy, Trajectory};
use crate::models::{NeuronPlant, NormalFormModel};
use crate::signal::InputSignal;
use crate::variational::{floquet, FloquetOptions, Linearization, MonodromyResult, StabilityVerdict, VerdictMethod};

/// Plant `y' = f(t, y, z, u) + h(y)^T theta`, `z' = g(t, z, y)`.
pub trait ParameterizedPlant: Send + Sync {
    fn dim(&self) -> usize;
    fn param_count(&self) -> usize;
    fn vector_field(&self, t: f64, x: &[f64], theta: &[f64], u: f64, out: &mut [f64]);
    fn jacobian(&self, t: f64, x: &[f64], theta: &[f64], u: f64) -> DMatrix<f64>;
    /// `h(y)`.
    fn regressor(&self, y: f64) -> Vec<f64>;
    /// `H(y)` with `H' = h`.
    fn antiderivative(&self, y: f64) -> Vec<f64>;
    /// Points where `h` is not differentiable.
    fn kinks(&self) -> Vec<f64> {
        Vec::new()
    }
    fn state_names(&self) -> Vec<String>;
    fn relaxation(&self) -> Option<f64> {
        None
    }
}

/// The neuron with `h(y) = -col(y + 0.4, m_inf(y) (y - 1)) / C`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeuronFamily {
    #[serde(skip, default = "reference_neuron")]
    base: NeuronPlant,
}

fn reference_neuron() -> NeuronPlant {
    NeuronPlant::new([0.0, 0.0])
}

impl Default for NeuronFamily {
    fn default() -> Self {
        Self { base: reference_neuron() }
    }
}

impl NeuronFamily {
    fn at(&self, theta: &[f64]) -> NeuronPlant {
        NeuronPlant::new([theta[0], theta[1]])
    }
}

impl ParameterizedPlant for NeuronFamily {
    fn dim(&self) -> usize {
        2
    }

    fn param_count(&self) -> usize {
        2
    }

    fn vector_field(&self, t: f64, x: &[f64], theta: &[f64], u: f64, out: &mut [f64]) {
        let c = NeuronPlant::capacitance();
        let h = NeuronPlant::current_regressor(x[0]);
        let mut base = [0.0; 2];
        self.base.vector_field(t, x, u, &mut base);
        out[0] = base[0] - (h[0] * theta[0] + h[1] * theta[1]) / c;
        out[1] = base[1];
    }

    fn jacobian(&self, t: f64, x: &[f64], theta: &[f64], u: f64) -> DMatrix<f64> {
        self.at(theta).jacobian(t, x, u)
    }

    fn regressor(&self, y: f64) -> Vec<f64> {
        let c = NeuronPlant::capacitance();
        NeuronPlant::current_regressor(y).iter().map(|v| -v / c).collect()
    }

    fn antiderivative(&self, y: f64) -> Vec<f64> {
        let c = NeuronPlant::capacitance();
        self.base.current_regressor_antiderivative(y).iter().map(|v| -v / c).collect()
    }

    fn kinks(&self) -> Vec<f64> {
        self.base.kinks().to_vec()
    }

    fn state_names(&self) -> Vec<String> {
        vec!["y".into(), "z".into()]
    }

    fn relaxation(&self) -> Option<f64> {
        Some(NeuronPlant::capacitance())
    }
}

/// Observer `x_hat' = F(x_hat, theta_hat)`, `theta_hat' = gain (H(y) - H(y_hat))`.
pub struct AdaptiveObserverSpec<'a> {
    pub plant: &'a dyn ParameterizedPlant,
    pub gain: f64,
    /// Constant added to `H`; it cancels in the update.
    pub h_offset: f64,
}

/// Sample grid for the antiderivative check.
const CHECK_RANGE: (f64, f64) = (-2.0, 2.0);
const CHECK_POINTS: usize = 401;
const CHECK_STEP: f64 = 1e-5;

/// Verifies `H' = h` by central differences away from kinks, then wraps the plant.
pub fn build_observer(plant: &dyn ParameterizedPlant, gain: f64) -> Result<AdaptiveObserverSpec<'_>> {
    if !(gain.is_finite() && gain > 0.0) {
        return Err(Error::InvalidParameter(format!("observer gain must be positive, got {gain}")));
    }
    let kinks = plant.kinks();
    let (lo, hi) = CHECK_RANGE;
    for k in 0..CHECK_POINTS {
        let y = lo + (hi - lo) * k as f64 / (CHECK_POINTS - 1) as f64;
        if kinks.iter().any(|c| (c - y).abs() < 4.0 * CHECK_STEP) {
            continue;
        }
        let up = plant.antiderivative(y + CHECK_STEP);
        let down = plant.antiderivative(y - CHECK_STEP);
        let h = plant.regressor(y);
        for i in 0..h.len() {
            let fd = (up[i] - down[i]) / (2.0 * CHECK_STEP);
            if (fd - h[i]).abs() > 1e-6 * h[i].abs().max(1.0) {
                return Err(Error::AntiderivativeMismatch { y, fd, h: h[i] });
            }
        }
    }
    Ok(AdaptiveObserverSpec { plant, gain, h_offset: 0.0 })
}

/// Coupled plant and observer with state `(x, x_hat, theta_hat)`.
pub struct CoupledObserver<'a> {
    pub spec: &'a AdaptiveObserverSpec<'a>,
    pub theta: Vec<f64>,
}

impl DrivenSystem for CoupledObserver<'_> {
    fn dim(&self) -> usize {
        2 * self.spec.plant.dim() + self.spec.plant.param_count()
    }

    fn rhs(&self, t: f64, s: &[f64], u: f64, out: &mut [f64]) {
        let p = self.spec.plant;
        let n = p.dim();
        let (x, rest) = s.split_at(n);
        let (xh, th) = rest.split_at(n);
        p.vector_field(t, x, &self.theta, u, &mut out[..n]);
        p.vector_field(t, xh, th, u, &mut out[n..2 * n]);
        let hy = p.antiderivative(x[0]);
        let hh = p.antiderivative(xh[0]);
        for i in 0..th.len() {
            out[2 * n + i] = self.spec.gain * ((hy[i] + self.spec.h_offset) - (hh[i] + self.spec.h_offset));
        }
    }

    fn relaxation(&self) -> Option<f64> {
        self.spec.plant.relaxation()
    }

    fn state_names(&self) -> Vec<String> {
        let names = self.spec.plant.state_names();
        let mut out = names.clone();
        out.extend(names.iter().map(|n| format!("{n}_hat")));
        out.extend((1..=self.spec.plant.param_count()).map(|i| format!("theta_hat_{i}")));
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObserverRun {
    pub traces: Trajectory,
    pub theta_error: Vec<f64>,
    pub output_error: Vec<f64>,
    pub converged_at: Option<f64>,
}

impl ObserverRun {
    /// `t,y,y_hat,z,z_hat,theta_hat_1..,theta_error` for a plant with one internal state per name.
    pub fn to_csv_string(&self, n: usize, m: usize) -> String {
        let names = &self.traces.names;
        let mut header = vec!["t".to_string()];
        for i in 0..n {
            header.push(names[i].clone());
            header.push(names[n + i].clone());
        }
        header.extend(names[2 * n..2 * n + m].iter().cloned());
        header.push("theta_error".into());
        let mut out = header.join(",");
        out.push('\n');
        for k in 0..self.traces.len() {
            let s = self.traces.state(k);
            let mut row = vec![self.traces.times[k].to_string()];
            for i in 0..n {
                row.push(s[i].to_string());
                row.push(s[n + i].to_string());
            }
            row.extend(s[2 * n..2 * n + m].iter().map(|v| v.to_string()));
            row.push(self.theta_error[k].to_string());
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObserverSetup {
    pub theta: Vec<f64>,
    pub theta_hat0: Vec<f64>,
    pub plant_x0: Vec<f64>,
    pub observer_x0: Vec<f64>,
    pub horizon: f64,
    /// Absolute threshold on `|theta_hat - theta|`.
    pub tolerance: f64,
    /// Length of one input period, for the persistence test.
    pub period: f64,
    /// Required number of consecutive periods under the tolerance.
    pub persistence: usize,
}

/// Integrates the coupled system and reports convergence of the estimate.
pub fn run_observer(spec: &AdaptiveObserverSpec<'_>, setup: &ObserverSetup, input: &InputSignal, policy: &StepPolicy) -> Result<ObserverRun> {
    let p = spec.plant;
    let (n, m) = (p.dim(), p.param_count());
    for (what, v, want) in [
        ("theta", &setup.theta, m),
        ("theta_hat0", &setup.theta_hat0, m),
        ("plant_x0", &setup.plant_x0, n),
        ("observer_x0", &setup.observer_x0, n),
    ] {
        if v.len() != want {
            return Err(Error::InvalidParameter(format!("{what} needs {want} entries, got {}", v.len())));
        }
    }
    let sys = CoupledObserver { spec, theta: setup.theta.clone() };
    let mut x0 = setup.plant_x0.clone();
    x0.extend_from_slice(&setup.observer_x0);
    x0.extend_from_slice(&setup.theta_hat0);
    let traces = integrate(&sys, input, 0.0, setup.horizon, &x0, policy)?;
    let theta_error: Vec<f64> = traces
        .states()
        .map(|s| s[2 * n..].iter().zip(&setup.theta).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt())
        .collect();
    let output_error: Vec<f64> = traces.states().map(|s| (s[n] - s[0]).abs()).collect();
    let converged_at = persistent_below(&traces.times, &theta_error, setup.tolerance, setup.persistence as f64 * setup.period);
    Ok(ObserverRun { traces, theta_error, output_error, converged_at })
}

/// Earliest time after which `values < tol` holds for at least `span`.
pub fn persistent_below(times: &[f64], values: &[f64], tol: f64, span: f64) -> Option<f64> {
    let mut run_start: Option<f64> = None;
    for (t, v) in times.iter().zip(values) {
        if *v < tol {
            let s = *run_start.get_or_insert(*t);
            if t - s >= span {
                return Some(s);
            }
        } else {
            run_start = None;
        }
    }
    None
}

/// Linearization of the observer along a plant reference at `theta`, with the
/// measured output replaced by the reference.
pub struct ObserverLinearization<'a> {
    pub spec: &'a AdaptiveObserverSpec<'a>,
    pub theta: Vec<f64>,
}

impl Linearization for ObserverLinearization<'_> {
    fn dim(&self) -> usize {
        self.spec.plant.dim() + self.spec.plant.param_count()
    }

    fn matrix(&self, t: f64, state: &[f64], u: f64) -> DMatrix<f64> {
        let p = self.spec.plant;
        let (n, m) = (p.dim(), p.param_count());
        let a = p.jacobian(t, &state[..n], &self.theta, u);
        let h = p.regressor(state[0]);
        let mut out = DMatrix::zeros(n + m, n + m);
        out.view_mut((0, 0), (n, n)).copy_from(&a);
        for i in 0..m {
            out[(0, n + i)] = h[i];
            out[(n + i, 0)] = -self.spec.gain * h[i];
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObserverContraction {
    pub monodromy: MonodromyResult,
    pub verdict: StabilityVerdict,
    pub eps_coupling: f64,
    /// Smallest eigenvalue of the quadratic form of `dW_eps` at `t0`; positive when it is a metric.
    pub metric_min_eigenvalue: f64,
    /// Largest eigenvalue of `sym(Phi^T Q Phi - Q)`; negative when `dW_eps` decreases over the period.
    pub decrease_max_eigenvalue: f64,
    pub lyapunov_decreases: bool,
}

/// `Q(t)` of `dW_eps = x^T Q x / 2` with `P = I`.
fn lyapunov_form(h: &[f64], n: usize, eps: f64) -> DMatrix<f64> {
    let m = h.len();
    let mut q = DMatrix::identity(n + m, n + m);
    for i in 0..m {
        q[(0, n + i)] = -eps * h[i];
        q[(n + i, 0)] = -eps * h[i];
    }
    q
}

/// Monodromy test of the extended linearization over `[t0, t0 + period]`,
/// plus the one-period change of `dW_eps` as a diagnostic.
pub fn observer_contraction_check(
    spec: &AdaptiveObserverSpec<'_>,
    theta: &[f64],
    reference: &Trajectory,
    t0: f64,
    period: f64,
    eps_coupling: f64,
    opts: &FloquetOptions,
) -> Result<ObserverContraction> {
    let p = spec.plant;
    let n = p.dim();
    let lin = ObserverLinearization { spec, theta: theta.to_vec() };
    let monodromy = floquet(&lin, reference, t0, period, opts)?;
    let verdict = StabilityVerdict::from_margin(1.0 - monodromy.spectral_radius, VerdictMethod::Monodromy);
    let y0 = reference.interpolate(t0)?[0];
    let q = lyapunov_form(&p.regressor(y0), n, eps_coupling);
    let phi = monodromy.matrix();
    let change = phi.transpose() * &q * &phi - &q;
    let sym = (&change + change.transpose()) * 0.5;
    let eig = |a: &DMatrix<f64>| -> Vec<f64> { a.clone().symmetric_eigen().eigenvalues.iter().copied().collect() };
    let metric_min_eigenvalue = eig(&q).into_iter().fold(f64::INFINITY, f64::min);
    let decrease_max_eigenvalue = eig(&sym).into_iter().fold(f64::NEG_INFINITY, f64::max);
    Ok(ObserverContraction {
        monodromy,
        verdict,
        eps_coupling,
        metric_min_eigenvalue,
        decrease_max_eigenvalue,
        lyapunov_decreases: decrease_max_eigenvalue < 0.0 && metric_min_eigenvalue > 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unscaled_update_uses_capacitance_gain() {
        let fam = NeuronFamily::default();
        let spec = build_observer(&fam, NeuronPlant::capacitance()).unwrap();
        let sys = CoupledObserver { spec: &spec, theta: vec![0.5, 1.5] };
        let s = [0.1, 0.3, -0.2, 0.4, 0.3, 1.8];
        let mut out = [0.0; 6];
        sys.rhs(0.0, &s, 0.0, &mut out);
        let base = NeuronPlant::new([0.0, 0.0]);
        let (y, yh) = (0.1, -0.2);
        let want0 = yh * yh / 2.0 + 0.4 * yh - y * y / 2.0 - 0.4 * y;
        let want1 = base.m_inf_moment(yh) - base.m_inf_moment(y);
        assert!((out[4] - want0).abs() < 1e-14);
        assert!((out[5] - want1).abs() < 1e-14);
    }

    #[test]
    fn persistence_needs_full_span() {
        let t = [0.0, 1.0, 2.0, 3.0, 4.0];
        let v = [1.0, 0.1, 0.1, 1.0, 0.1];
        assert_eq!(persistent_below(&t, &v, 0.5, 1.0), Some(1.0));
        assert_eq!(persistent_below(&t, &v, 0.5, 2.0), None);
    }
}
