use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::NormalFormModel;
use crate::error::{Error, Result};
use crate::nonlinearity::StaticNonlinearity;

/// Rational transfer function with coefficients in descending powers of `s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferFunction {
    pub num: Vec<f64>,
    pub den: Vec<f64>,
}

impl TransferFunction {
    pub fn new(num: Vec<f64>, den: Vec<f64>) -> Self {
        Self { num, den }
    }

    /// The linear part of the Chua circuit example.
    pub fn chua() -> Self {
        Self::new(vec![2.0, 0.7, 7.0], vec![0.2, 1.47, 0.7, 4.9])
    }

    pub fn eval(&self, s: Complex64) -> Complex64 {
        poly_eval(&self.num, s) / poly_eval(&self.den, s)
    }

    pub fn relative_degree(&self) -> usize {
        self.den.len().saturating_sub(self.num.len())
    }
}

pub(crate) fn poly_eval(coeffs: &[f64], s: Complex64) -> Complex64 {
    coeffs.iter().fold(Complex64::new(0.0, 0.0), |acc, c| acc * s + c)
}

/// Lure loop `x' = A x + B (u - h(y))`, `y = C x`, realized in normal-form
/// coordinates `col(y, z)` for a linear part of relative degree one.
///
/// In these coordinates `C = e_1` and `B = b e_1`, and the zero dynamics
/// `z' = A_zz z` carry the zeros of the transfer function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LureSystem {
    pub plant: TransferFunction,
    pub nonlinearity: StaticNonlinearity,
    a_yy: f64,
    a_yz: Vec<f64>,
    a_zy: Vec<f64>,
    a_zz: Vec<f64>,
    b: f64,
}

impl LureSystem {
    pub fn new(plant: TransferFunction, nonlinearity: StaticNonlinearity) -> Result<Self> {
        let lead = *plant.den.first().ok_or(Error::ZeroLeadingCoefficient)?;
        if lead == 0.0 {
            return Err(Error::ZeroLeadingCoefficient);
        }
        if plant.relative_degree() != 1 {
            return Err(Error::InvalidParameter(format!(
                "Lure plant must have relative degree one, got {}",
                plant.relative_degree()
            )));
        }
        let k = plant.den.len() - 1;
        if k < 2 {
            return Err(Error::InvalidParameter("Lure plant must have order at least two".into()));
        }
        // Monic den s^k + a_{k-1} s^{k-1} + .. + a_0, num b_{k-1} s^{k-1} + .. + b_0.
        let a: Vec<f64> = (0..k).map(|i| plant.den[k - i] / lead).collect();
        let bcoef: Vec<f64> = (0..k).map(|i| plant.num[k - 1 - i] / lead).collect();
        let b_top = bcoef[k - 1];
        if b_top == 0.0 {
            return Err(Error::InvalidParameter("leading numerator coefficient is zero".into()));
        }
        // Controllable canonical states xi_1..xi_k; y' expressed as a row over xi.
        let c_xi: Vec<f64> = (1..=k)
            .map(|j| {
                let chain = if j >= 2 { bcoef[j - 2] } else { 0.0 };
                chain - b_top * a[j - 1]
            })
            .collect();
        // Substitute xi_k = (y - sum_{j<k} b_{j-1} z_j) / b_top.
        let a_yy = c_xi[k - 1] / b_top;
        let a_yz: Vec<f64> = (1..k).map(|j| c_xi[j - 1] - c_xi[k - 1] * bcoef[j - 1] / b_top).collect();
        let m = k - 1;
        let mut a_zy = vec![0.0; m];
        let mut a_zz = vec![0.0; m * m];
        for j in 0..m {
            if j + 1 < m {
                a_zz[j * m + j + 1] = 1.0;
            } else {
                a_zy[j] = 1.0 / b_top;
                for i in 0..m {
                    a_zz[j * m + i] = -bcoef[i] / b_top;
                }
            }
        }
        Ok(Self { plant, nonlinearity, a_yy, a_yz, a_zy, a_zz, b: b_top })
    }

    pub fn chua() -> Self {
        Self::new(TransferFunction::chua(), StaticNonlinearity::chua()).expect("Chua plant is well formed")
    }

    /// `(A, B, C)` in normal-form coordinates.
    pub fn matrices(&self) -> (DMatrix<f64>, DVector<f64>, DVector<f64>) {
        let n = self.a_yz.len() + 1;
        let mut a = DMatrix::zeros(n, n);
        a[(0, 0)] = self.a_yy;
        for j in 1..n {
            a[(0, j)] = self.a_yz[j - 1];
            a[(j, 0)] = self.a_zy[j - 1];
            for i in 1..n {
                a[(j, i)] = self.a_zz[(j - 1) * (n - 1) + (i - 1)];
            }
        }
        let mut b = DVector::zeros(n);
        b[0] = self.b;
        let mut c = DVector::zeros(n);
        c[0] = 1.0;
        (a, b, c)
    }
}

impl NormalFormModel for LureSystem {
    fn name(&self) -> &str {
        "lure"
    }

    fn dim(&self) -> usize {
        self.a_yz.len() + 1
    }

    fn relative_degree(&self) -> usize {
        1
    }

    fn output_dynamics(&self, _t: f64, x: &[f64], z: &[f64], u: f64) -> f64 {
        let y = x[0];
        let lin: f64 = self.a_yz.iter().zip(z).map(|(a, z)| a * z).sum();
        self.a_yy * y + lin + self.b * (u - self.nonlinearity.eval(y))
    }

    fn internal_dynamics(&self, _t: f64, z: &[f64], x: &[f64], dz: &mut [f64]) {
        let m = z.len();
        for j in 0..m {
            let row = &self.a_zz[j * m..(j + 1) * m];
            dz[j] = self.a_zy[j] * x[0] + row.iter().zip(z).map(|(a, z)| a * z).sum::<f64>();
        }
    }

    fn input_gain(&self, _t: f64, _x: &[f64], _z: &[f64], _u: f64) -> f64 {
        self.b
    }

    fn input_gain_sign(&self) -> f64 {
        self.b.signum()
    }

    fn output_partials(&self, _t: f64, x: &[f64], _z: &[f64], _u: f64, df_dx: &mut [f64], df_dz: &mut [f64]) {
        df_dx[0] = self.a_yy - self.b * self.nonlinearity.slope(x[0]);
        df_dz.copy_from_slice(&self.a_yz);
    }

    fn internal_partials(&self, _t: f64, _z: &[f64], _x: &[f64], dg_dx: &mut [f64], dg_dz: &mut [f64]) {
        dg_dx.copy_from_slice(&self.a_zy);
        dg_dz.copy_from_slice(&self.a_zz);
    }

    fn state_names(&self) -> Vec<String> {
        let mut names = vec!["y".to_string()];
        names.extend((1..self.dim()).map(|i| format!("z{i}")));
        names
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn realization_reproduces_transfer_function() {
        let lure = LureSystem::chua();
        let (a, b, c) = lure.matrices();
        let n = a.nrows();
        for &(re, im) in &[(0.0, 1.0), (0.3, -2.0), (-1.5, 0.25)] {
            let s = Complex64::new(re, im);
            let mut m = DMatrix::<Complex64>::zeros(n, n);
            for i in 0..n {
                for j in 0..n {
                    m[(i, j)] = Complex64::new(-a[(i, j)], 0.0);
                }
                m[(i, i)] += s;
            }
            let bc = b.map(|v| Complex64::new(v, 0.0));
            let x = m.lu().solve(&bc).unwrap();
            let got: Complex64 = (0..n).map(|i| x[i] * c[i]).sum();
            let want = lure.plant.eval(s);
            assert!((got - want).norm() < 1e-12 * want.norm().max(1.0), "{got} vs {want}");
        }
    }

    #[test]
    fn rejects_wrong_relative_degree() {
        let tf = TransferFunction::new(vec![1.0], vec![1.0, 2.0, 3.0]);
        assert!(LureSystem::new(tf, StaticNonlinearity::chua()).is_err());
    }
}
