use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::models::TransferFunction;
use crate::nonlinearity::StaticNonlinearity;
use crate::signal::InputSignal;
use crate::variational::{hurwitz, StabilityVerdict};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DescribingMethod {
    Quadrature,
    ChuaClosedForm,
}

/// Normalization of the first-harmonic integrals.
///
/// `Literal` divides the time integrals over one period by `pi M` (and `pi M omega`
/// for `q`), which leaves a residual `1/omega`. `Classical` removes it, so that a
/// linear `h(y) = k y` gives `p = k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DescribingConvention {
    #[default]
    Literal,
    Classical,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DescribingFunctionResult {
    /// In-phase coefficient.
    pub p: f64,
    /// Quadrature coefficient, in units of time.
    pub q: f64,
    #[serde(rename = "M")]
    pub amplitude: f64,
    pub omega: f64,
    pub method: DescribingMethod,
    pub convention: DescribingConvention,
    /// Estimated absolute quadrature error on `p`.
    pub error_estimate: f64,
}

impl DescribingFunctionResult {
    /// `H(s) = p + q s`.
    pub fn at(&self, s: Complex64) -> Complex64 {
        self.p + self.q * s
    }

    pub fn constant_gain(rho: f64) -> Self {
        Self {
            p: rho,
            q: 0.0,
            amplitude: 0.0,
            omega: 0.0,
            method: DescribingMethod::ChuaClosedForm,
            convention: DescribingConvention::Classical,
            error_estimate: 0.0,
        }
    }
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_5,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_48,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224,
    0.063_092_092_629_978_56,
    0.104_790_010_322_250_19,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_42,
    0.204_432_940_075_298_89,
    0.209_482_141_084_727_82,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_64,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Kronrod 15-point and Gauss 7-point estimates on `[a, b]` for two integrands at once.
fn gk15(f: &impl Fn(f64) -> [f64; 2], a: f64, b: f64) -> ([f64; 2], [f64; 2]) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut k = [0.0; 2];
    let mut g = [0.0; 2];
    for i in 0..8 {
        let pts: &[f64] = if XGK[i] == 0.0 { &[0.0] } else { &[XGK[i], -XGK[i]] };
        for &x in pts {
            let v = f(c + h * x);
            for j in 0..2 {
                k[j] += WGK[i] * v[j];
                if i % 2 == 1 {
                    g[j] += WG[i / 2] * v[j];
                }
            }
        }
    }
    ([k[0] * h, k[1] * h], [g[0] * h, g[1] * h])
}

fn adaptive(f: &impl Fn(f64) -> [f64; 2], a: f64, b: f64, tol: f64, depth: usize, err: &mut f64) -> Result<[f64; 2]> {
    let (val, gauss) = gk15(f, a, b);
    let e = (val[0] - gauss[0]).abs().max((val[1] - gauss[1]).abs());
    if e <= tol || (b - a) <= 1e-14 * (1.0 + a.abs()) {
        *err += e;
        return Ok(val);
    }
    if depth == 0 {
        return Err(Error::QuadratureNonConvergence { estimate: e });
    }
    let m = 0.5 * (a + b);
    let l = adaptive(f, a, m, 0.5 * tol, depth - 1, err)?;
    let r = adaptive(f, m, b, 0.5 * tol, depth - 1, err)?;
    Ok([l[0] + r[0], l[1] + r[1]])
}

/// First-harmonic coefficients of `h(M sin tau)` over one period, with the
/// period split at the phases where `M sin tau` hits a kink of `h`.
pub fn describing_function(
    h: &StaticNonlinearity,
    amplitude: f64,
    omega: f64,
    convention: DescribingConvention,
) -> Result<DescribingFunctionResult> {
    describing_function_with(|y| h.eval(y), &h.kinks(), amplitude, omega, convention, 1e-9)
}

/// As [`describing_function`] for an arbitrary scalar map with known kinks.
pub fn describing_function_with(
    h: impl Fn(f64) -> f64,
    kinks: &[f64],
    amplitude: f64,
    omega: f64,
    convention: DescribingConvention,
    abs_tol: f64,
) -> Result<DescribingFunctionResult> {
    if !(amplitude > 0.0 && omega > 0.0) {
        return Err(Error::InvalidParameter(format!("describing function needs M, omega > 0, got {amplitude}, {omega}")));
    }
    let mut panels = vec![0.0, 0.5 * PI, PI, 1.5 * PI, 2.0 * PI];
    for &k in kinks {
        let ratio = k / amplitude;
        if ratio.abs() < 1.0 {
            let base = ratio.asin();
            panels.push(base.rem_euclid(2.0 * PI));
            panels.push((PI - base).rem_euclid(2.0 * PI));
        }
    }
    panels.sort_by(f64::total_cmp);
    panels.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
    let f = |tau: f64| {
        let v = h(amplitude * tau.sin());
        [v * tau.sin(), v * tau.cos()]
    };
    // Integrals in the phase variable; a period in time is the same over omega.
    let panel_tol = abs_tol * PI * amplitude * omega.min(omega * omega).min(1.0) / panels.len() as f64;
    let mut sums = [0.0; 2];
    let mut err = 0.0;
    for w in panels.windows(2) {
        if w[1] > w[0] {
            let v = adaptive(&f, w[0], w[1], panel_tol, 40, &mut err)?;
            sums[0] += v[0];
            sums[1] += v[1];
        }
    }
    let (mut p, mut q) = (sums[0] / (PI * amplitude * omega), sums[1] / (PI * amplitude * omega * omega));
    let mut error_estimate = err / (PI * amplitude * omega);
    if convention == DescribingConvention::Classical {
        p *= omega;
        q *= omega;
        error_estimate *= omega;
    }
    Ok(DescribingFunctionResult { p, q, amplitude, omega, method: DescribingMethod::Quadrature, convention, error_estimate })
}

/// The two-branch closed form for the Chua nonlinearity, evaluated branch by branch.
pub fn chua_closed_form(amplitude: f64, omega: f64) -> DescribingFunctionResult {
    let p = if amplitude > 1.0 {
        let im = 1.0 / amplitude;
        -(7.8 / (PI * omega)) * (im.asin() + (im * im - im.powi(4)).sqrt())
    } else {
        -4.0 / omega
    };
    DescribingFunctionResult {
        p,
        q: 0.0,
        amplitude,
        omega,
        method: DescribingMethod::ChuaClosedForm,
        convention: DescribingConvention::Literal,
        error_estimate: 0.0,
    }
}

/// Gap between the closed form just above `M = 1` and its `M <= 1` branch.
pub fn chua_closed_form_gap(omega: f64) -> f64 {
    chua_closed_form(1.0 + 1e-12, omega).p - chua_closed_form(1.0, omega).p
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LureStability {
    /// Closed-loop denominator `den + (p + q s) num`, descending.
    pub polynomial: Vec<f64>,
    pub verdict: StabilityVerdict,
}

fn poly_add(a: &[f64], b: &[f64]) -> Vec<f64> {
    let n = a.len().max(b.len());
    let mut out = vec![0.0; n];
    for (i, c) in a.iter().enumerate() {
        out[n - a.len() + i] += c;
    }
    for (i, c) in b.iter().enumerate() {
        out[n - b.len() + i] += c;
    }
    out
}

/// Hurwitz test of `P / (1 + P H)` with `H(s) = p + q s`.
pub fn lure_stability(plant: &TransferFunction, h: &DescribingFunctionResult) -> Result<LureStability> {
    if plant.den.len() < plant.num.len() {
        return Err(Error::InvalidParameter("transfer function must be proper".into()));
    }
    let pn: Vec<f64> = plant.num.iter().map(|c| h.p * c).collect();
    let mut qn: Vec<f64> = plant.num.iter().map(|c| h.q * c).collect();
    qn.push(0.0);
    let mut polynomial = poly_add(&poly_add(&plant.den, &pn), &qn);
    while polynomial.len() > 1 && polynomial[0] == 0.0 {
        polynomial.remove(0);
    }
    let verdict = hurwitz(&polynomial)?;
    Ok(LureStability { polynomial, verdict })
}

/// Smallest constant gain `rho` in `[lo, hi]` above which `P / (1 + rho P)` stays
/// stable, by bisection on the Routh verdict. `None` when `hi` is itself unstable
/// or `lo` already stable.
pub fn constant_gain_threshold(plant: &TransferFunction, lo: f64, hi: f64) -> Result<Option<f64>> {
    let stable = |rho: f64| -> Result<bool> {
        Ok(lure_stability(plant, &DescribingFunctionResult::constant_gain(rho))?.verdict.stable)
    };
    if !stable(hi)? || stable(lo)? {
        return Ok(None);
    }
    let (mut a, mut b) = (lo, hi);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        if stable(m)? {
            b = m;
        } else {
            a = m;
        }
    }
    Ok(Some(b))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LureInput {
    #[serde(rename = "D")]
    pub gain: f64,
    pub theta: f64,
    /// `G(j omega)` as `[re, im]`.
    pub closed_loop_response: [f64; 2],
    pub input: InputSignal,
}

/// `u** = D sin(omega t + theta) + h(M sin omega t) - p M sin(omega t)` with
/// `D = M / |G(j omega)|`, `theta = -arg G(j omega)`.
pub fn lure_input_reconstruct(
    plant: &TransferFunction,
    h_df: &DescribingFunctionResult,
    amplitude: f64,
    omega: f64,
    h: &StaticNonlinearity,
) -> Result<LureInput> {
    let s = Complex64::new(0.0, omega);
    let p = plant.eval(s);
    let g = p / (1.0 + p * h_df.at(s));
    if !(g.norm() >= 1e-12) {
        return Err(Error::ZeroResponse { magnitude: g.norm() });
    }
    let gain = amplitude / g.norm();
    let theta = -g.arg();
    let input = InputSignal::sum(vec![
        InputSignal::Sinusoid { amplitude: gain, omega, phase: theta },
        InputSignal::ShapedSine { map: h.clone(), amplitude, omega, phase: 0.0, gain: 1.0 },
        InputSignal::Sinusoid { amplitude: -h_df.p * amplitude, omega, phase: 0.0 },
    ]);
    Ok(LureInput { gain, theta, closed_loop_response: [g.re, g.im], input })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_gain_gives_inverse_frequency() {
        let h = StaticNonlinearity::Linear { slope: 1.0 };
        let r = describing_function(&h, 2.0, 3.0, DescribingConvention::Literal).unwrap();
        assert!((r.p - 1.0 / 3.0).abs() < 1e-12);
        assert!(r.q.abs() < 1e-12);
        let c = describing_function(&h, 2.0, 3.0, DescribingConvention::Classical).unwrap();
        assert!((c.p - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cubic_matches_fourier_integral() {
        let h = StaticNonlinearity::Polynomial { coefficients: vec![0.0, 0.0, 0.0, 1.0] };
        let r = describing_function(&h, 1.7, 2.0, DescribingConvention::Literal).unwrap();
        assert!((r.p - 0.75 * 1.7 * 1.7 / 2.0).abs() < 1e-9);
    }

    #[test]
    fn closed_form_boundary_branch() {
        assert_eq!(chua_closed_form(1.0, 1.0).p, -4.0);
        let p = chua_closed_form(200.0, 1.0).p;
        assert!(p > -0.05 && p < 0.0);
    }

    #[test]
    fn open_loop_polynomial_when_h_vanishes() {
        let tf = TransferFunction::chua();
        let r = lure_stability(&tf, &DescribingFunctionResult::constant_gain(0.0)).unwrap();
        assert_eq!(r.polynomial, tf.den);
    }

    #[test]
    fn first_order_phase_inversion() {
        let tf = TransferFunction::new(vec![1.0], vec![1.0, 1.0]);
        let zero = DescribingFunctionResult::constant_gain(0.0);
        let r = lure_input_reconstruct(&tf, &zero, 1.0, 1.0, &StaticNonlinearity::Linear { slope: 0.0 }).unwrap();
        assert!((r.gain - 2f64.sqrt()).abs() < 1e-14);
        assert!((r.theta - PI / 4.0).abs() < 1e-14);
    }
}
