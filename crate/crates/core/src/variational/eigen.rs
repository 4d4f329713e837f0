use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenDecomposition {
    /// Sorted by decreasing modulus, ties by real then imaginary part.
    pub values: Vec<Complex64>,
    /// Unit right eigenvector (first nonzero entry positive) for each simple
    /// real eigenvalue, `None` otherwise.
    pub vectors: Vec<Option<Vec<f64>>>,
    /// Set when a repeated real eigenvalue was found.
    pub defective: bool,
}

impl EigenDecomposition {
    pub fn spectral_radius(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

/// Characteristic polynomial `det(sI - A)`, descending, by Faddeev-LeVerrier.
pub fn characteristic_polynomial(a: &DMatrix<f64>) -> Vec<f64> {
    let k = a.nrows();
    let mut coeffs = vec![1.0];
    let mut m = DMatrix::<f64>::zeros(k, k);
    let id = DMatrix::<f64>::identity(k, k);
    let mut c = 1.0;
    for j in 1..=k {
        m = a * &m + &id * c;
        let am = a * &m;
        c = -am.trace() / j as f64;
        coeffs.push(c);
    }
    coeffs
}

/// Eigenvalues (and eigenvectors of simple real eigenvalues) of a matrix of size at most four.
pub fn eigen_small(a: &DMatrix<f64>) -> Result<EigenDecomposition> {
    let k = a.nrows();
    if a.ncols() != k {
        return Err(Error::DimensionMismatch { expected: k, got: a.ncols() });
    }
    if k == 0 || k > 4 {
        return Err(Error::InvalidParameter(format!("eigen_small handles sizes 1 to 4, got {k}")));
    }
    let mut values = match k {
        1 => vec![Complex64::new(a[(0, 0)], 0.0)],
        2 => quadratic(a),
        _ => poly::roots(&characteristic_polynomial(a)),
    };
    values.sort_by(|x, y| {
        y.norm()
            .total_cmp(&x.norm())
            .then(y.re.total_cmp(&x.re))
            .then(y.im.total_cmp(&x.im))
    });
    let scale = a.norm().max(1.0);
    let mut defective = false;
    let vectors = values
        .iter()
        .enumerate()
        .map(|(i, v)| {
            if v.im != 0.0 {
                return None;
            }
            let repeated = values.iter().enumerate().any(|(j, w)| j != i && (w - v).norm() <= 1e-9 * scale);
            if repeated {
                defective = true;
                return None;
            }
            Some(null_vector(a, v.re))
        })
        .collect();
    Ok(EigenDecomposition { values, vectors, defective })
}

fn quadratic(a: &DMatrix<f64>) -> Vec<Complex64> {
    let tr = a[(0, 0)] + a[(1, 1)];
    let det = a[(0, 0)] * a[(1, 1)] - a[(0, 1)] * a[(1, 0)];
    let half = 0.5 * tr;
    // Discriminant from the entries avoids cancellation in tr^2 - 4 det.
    let d = 0.25 * (a[(0, 0)] - a[(1, 1)]).powi(2) + a[(0, 1)] * a[(1, 0)];
    if d >= 0.0 {
        let s = d.sqrt();
        let big = if half >= 0.0 { half + s } else { half - s };
        let small = if big != 0.0 { det / big } else { half - s };
        vec![Complex64::new(big, 0.0), Complex64::new(small, 0.0)]
    } else {
        let s = (-d).sqrt();
        vec![Complex64::new(half, s), Complex64::new(half, -s)]
    }
}

/// Unit vector spanning the numerical null space of `A - lambda I`.
fn null_vector(a: &DMatrix<f64>, lambda: f64) -> Vec<f64> {
    let k = a.nrows();
    let shifted = a - DMatrix::<f64>::identity(k, k) * lambda;
    let svd = shifted.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let (imin, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, s)| if *s < acc.1 { (i, *s) } else { acc });
    let mut v: DVector<f64> = v_t.row(imin).transpose();
    normalize(&mut v);
    v.iter().copied().collect()
}

fn normalize(v: &mut DVector<f64>) {
    let n = v.norm();
    if n > 0.0 {
        *v /= n;
    }
    let tol = 1e-12 * v.amax();
    if let Some(first) = v.iter().find(|x| x.abs() > tol) {
        if *first < 0.0 {
            *v *= -1.0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rotation_has_imaginary_pair() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        let e = eigen_small(&a).unwrap();
        assert!((e.values[0] - Complex64::new(0.0, 1.0)).norm() < 1e-15);
        assert!((e.values[1] - Complex64::new(0.0, -1.0)).norm() < 1e-15);
        assert!(e.vectors.iter().all(|v| v.is_none()));
    }

    #[test]
    fn diagonal_three_by_three() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0, 3.0]));
        let e = eigen_small(&a).unwrap();
        let re: Vec<f64> = e.values.iter().map(|v| v.re).collect();
        for (g, w) in re.iter().zip([3.0, 2.0, 1.0]) {
            assert!((g - w).abs() < 1e-12);
        }
        let v0 = e.vectors[0].as_ref().unwrap();
        assert!((v0[2] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn four_by_four_residuals() {
        let a = DMatrix::from_row_slice(4, 4, &[
            2.0, 1.0, 0.0, 0.5, //
            0.3, -1.0, 0.2, 0.0, //
            0.0, 0.4, 0.5, 1.0, //
            0.1, 0.0, -0.7, -2.0,
        ]);
        let e = eigen_small(&a).unwrap();
        let sum: Complex64 = e.values.iter().sum();
        assert!((sum.re - a.trace()).abs() < 1e-10);
        for (l, v) in e.values.iter().zip(&e.vectors) {
            if let Some(v) = v {
                let v = DVector::from_vec(v.clone());
                let r = &a * &v - &v * l.re;
                assert!(r.norm() <= 1e-8 * a.norm());
            }
        }
    }

    #[test]
    fn repeated_eigenvalue_is_flagged() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]);
        let e = eigen_small(&a).unwrap();
        assert!(e.defective);
    }
}
