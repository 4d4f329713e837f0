use nalgebra::DMatrix;

use crate::models::Lorenz;

/// Membership in `|sigma + rho - z| < 2 sqrt(sigma / 2)`, `|x2| < 2 sqrt(sigma beta / 2)`,
/// with `state = (x1, x2, z)` in the original coordinates.
///
/// On this set the symmetric part of the Jacobian is negative definite, so the
/// identity metric contracts.
pub fn lorenz_region_check(state: [f64; 3], sigma: f64, rho: f64, beta: f64) -> bool {
    let [_, x2, z] = state;
    (sigma + rho - z).abs() < 2.0 * (sigma / 2.0).sqrt() && x2.abs() < 2.0 * (sigma * beta / 2.0).sqrt()
}

/// The same test centred on `z = sigma + beta`, which coincides with
/// [`lorenz_region_check`] only when `rho = beta`.
pub fn lorenz_region_check_beta_centred(state: [f64; 3], sigma: f64, beta: f64) -> bool {
    lorenz_region_check(state, sigma, beta, beta)
}

/// Symmetric part of the original-coordinate Jacobian.
pub fn lorenz_symmetric_part(model: &Lorenz, state: [f64; 3]) -> DMatrix<f64> {
    let a = model.original_jacobian(state);
    (&a + a.transpose()) * 0.5
}

/// Largest eigenvalue of a symmetric matrix.
pub fn max_symmetric_eigenvalue(s: &DMatrix<f64>) -> f64 {
    s.clone().symmetric_eigen().eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn centre_is_inside() {
        let l = Lorenz::classic();
        let c = [0.0, 0.0, l.sigma + l.rho];
        assert!(lorenz_region_check(c, l.sigma, l.rho, l.beta));
        assert!(max_symmetric_eigenvalue(&lorenz_symmetric_part(&l, c)) < 0.0);
    }

    #[test]
    fn beta_centre_is_not_contracting_for_classic_rho() {
        let l = Lorenz::classic();
        let c = [0.0, 0.0, l.sigma + l.beta];
        assert!(lorenz_region_check_beta_centred(c, l.sigma, l.beta));
        assert!(max_symmetric_eigenvalue(&lorenz_symmetric_part(&l, c)) > 0.0);
    }
}
