//! Polynomial roots by Laguerre iteration with deflation, polished by Newton
//! steps on the undeflated polynomial.

use num_complex::Complex64;

/// Evaluates a polynomial with descending coefficients and its derivative.
fn eval_with_derivative(coeffs: &[Complex64], s: Complex64) -> (Complex64, Complex64, Complex64) {
    let mut p = coeffs[0];
    let mut dp = Complex64::new(0.0, 0.0);
    let mut ddp = Complex64::new(0.0, 0.0);
    for c in &coeffs[1..] {
        ddp = ddp * s + dp;
        dp = dp * s + p;
        p = p * s + c;
    }
    (p, dp, 2.0 * ddp)
}

fn laguerre(coeffs: &[Complex64], mut x: Complex64) -> Complex64 {
    let n = (coeffs.len() - 1) as f64;
    // Fractional steps break limit cycles.
    const FRAC: [f64; 8] = [0.5, 0.25, 0.75, 0.13, 0.38, 0.62, 0.88, 1.0];
    for iter in 1..=400 {
        let (p, dp, ddp) = eval_with_derivative(coeffs, x);
        let scale: f64 = coeffs.iter().map(|c| c.norm()).sum::<f64>() * x.norm().max(1.0).powf(n);
        if p.norm() <= 1e-15 * scale {
            return x;
        }
        let g = dp / p;
        let h = g * g - ddp / p;
        let sq = ((n - 1.0) * (n * h - g * g)).sqrt();
        let gp = g + sq;
        let gm = g - sq;
        let denom = if gp.norm() >= gm.norm() { gp } else { gm };
        let dx = if denom.norm() > 0.0 {
            Complex64::new(n, 0.0) / denom
        } else {
            Complex64::from_polar(1.0 + x.norm(), iter as f64)
        };
        let x1 = x - dx;
        if x1 == x {
            return x;
        }
        x = if iter % 10 == 0 { x - dx * FRAC[(iter / 10) % 8] } else { x1 };
    }
    x
}

fn polish(coeffs: &[Complex64], mut x: Complex64) -> Complex64 {
    for _ in 0..4 {
        let (p, dp, _) = eval_with_derivative(coeffs, x);
        if dp.norm() == 0.0 {
            break;
        }
        let step = p / dp;
        let next = x - step;
        let (pn, _, _) = eval_with_derivative(coeffs, next);
        if pn.norm() >= p.norm() {
            break;
        }
        x = next;
    }
    x
}

/// All complex roots of a real polynomial with descending coefficients.
///
/// Leading zeros are stripped. Imaginary parts below `1e-12 * (1 + |re|)` are
/// snapped to zero so real roots come back exactly real.
pub fn roots(coeffs: &[f64]) -> Vec<Complex64> {
    let start = coeffs.iter().position(|c| *c != 0.0).unwrap_or(coeffs.len());
    let trimmed: Vec<Complex64> = coeffs[start..].iter().map(|c| Complex64::new(*c, 0.0)).collect();
    if trimmed.len() <= 1 {
        return Vec::new();
    }
    let degree = trimmed.len() - 1;
    let mut work = trimmed.clone();
    let mut out = Vec::with_capacity(degree);
    for _ in 0..degree {
        let root = if work.len() == 2 {
            -work[1] / work[0]
        } else {
            laguerre(&work, Complex64::new(0.0, 0.0))
        };
        let root = polish(&trimmed, root);
        // Synthetic division by (s - root).
        let mut next = Vec::with_capacity(work.len() - 1);
        let mut acc = Complex64::new(0.0, 0.0);
        for c in &work[..work.len() - 1] {
            acc = acc * root + c;
            next.push(acc);
        }
        work = next;
        out.push(root);
    }
    for r in &mut out {
        if r.im.abs() <= 1e-12 * (1.0 + r.re.abs()) {
            r.im = 0.0;
        }
    }
    // Real coefficients: make conjugate partners exact mirror images.
    let mut used = vec![false; out.len()];
    for i in 0..out.len() {
        if used[i] || out[i].im == 0.0 {
            continue;
        }
        let target = out[i].conj();
        let partner = (0..out.len())
            .filter(|&j| j != i && !used[j] && out[j].im != 0.0 && out[j].im.signum() != out[i].im.signum())
            .min_by(|&a, &b| (out[a] - target).norm().total_cmp(&(out[b] - target).norm()));
        if let Some(j) = partner {
            let re = 0.5 * (out[i].re + out[j].re);
            let im = 0.5 * (out[i].im.abs() + out[j].im.abs());
            out[i] = Complex64::new(re, im * out[i].im.signum());
            out[j] = Complex64::new(re, im * out[j].im.signum());
            used[i] = true;
            used[j] = true;
        }
    }
    out.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    out
}

/// Real roots, ascending.
pub fn real_roots(coeffs: &[f64]) -> Vec<f64> {
    roots(coeffs).into_iter().filter(|r| r.im == 0.0).map(|r| r.re).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic_with_known_roots() {
        // (s - 1)(s - 2)(s + 3) = s^3 - 7 s + 6
        let r = real_roots(&[1.0, 0.0, -7.0, 6.0]);
        assert_eq!(r.len(), 3);
        for (got, want) in r.iter().zip([-3.0, 1.0, 2.0]) {
            assert!((got - want).abs() < 1e-13);
        }
    }

    #[test]
    fn complex_pair() {
        let r = roots(&[1.0, 0.0, 1.0]);
        assert_eq!(r.len(), 2);
        assert!((r[0] - Complex64::new(0.0, -1.0)).norm() < 1e-14);
        assert!((r[1] - Complex64::new(0.0, 1.0)).norm() < 1e-14);
    }

    #[test]
    fn quartic_mixed() {
        // (s^2 + 2s + 5)(s - 0.5)(s + 4)
        let c = [1.0, 5.5, 10.0, 13.5, -10.0];
        let r = roots(&c);
        let want = [
            Complex64::new(-4.0, 0.0),
            Complex64::new(-1.0, -2.0),
            Complex64::new(-1.0, 2.0),
            Complex64::new(0.5, 0.0),
        ];
        for (g, w) in r.iter().zip(want) {
            assert!((g - w).norm() < 1e-12, "{g} vs {w}");
        }
    }
}
