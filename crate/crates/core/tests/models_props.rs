use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use induced_contraction::design::{lorenz_region_check, lorenz_symmetric_part, max_symmetric_eigenvalue};
use induced_contraction::models::{f_inv_solve, sat, Lorenz, NeuronPlant};
use induced_contraction::verify::{builtin_models, f_inv_residual, jacobian_fd_error};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn jacobian_matches_finite_differences(seed in 0u64..10_000) {
        for p in builtin_models() {
            let e = jacobian_fd_error(&p, 20, seed).unwrap();
            prop_assert!(e <= 1e-5, "{p:?}: {e}");
        }
    }

    #[test]
    fn f_inv_inverts_output_dynamics(seed in 0u64..10_000) {
        for p in builtin_models() {
            let e = f_inv_residual(&p, 20, seed).unwrap();
            prop_assert!(e <= 1e-10, "{p:?}: {e}");
        }
    }

    #[test]
    fn f_inv_recovers_the_input(seed in 0u64..10_000, u in -5.0f64..5.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for p in builtin_models() {
            let m = p.build().unwrap();
            let (n, r) = (m.dim(), m.relative_degree());
            let x: Vec<f64> = (0..r).map(|_| rng.gen_range(-1.2..1.2)).collect();
            let z: Vec<f64> = (0..n - r).map(|_| rng.gen_range(-1.2..1.2)).collect();
            let t = rng.gen_range(0.0..3.0);
            let v = m.output_dynamics(t, &x, &z, u);
            let got = f_inv_solve(m.as_ref(), t, &x, &z, v).unwrap();
            let resid = (m.output_dynamics(t, &x, &z, got) - v).abs();
            prop_assert!(resid <= 1e-10 * v.abs().max(1.0), "{}: residual {resid}", m.name());
            prop_assert!(m.input_gain(t, &x, &z, got) * m.input_gain_sign() > 0.0);
        }
    }

    #[test]
    fn lorenz_region_is_contracting(x1 in -20.0f64..20.0, a in -0.999f64..0.999, b in -0.999f64..0.999) {
        let l = Lorenz::classic();
        let x2 = a * 2.0 * (l.sigma * l.beta / 2.0).sqrt();
        let z = l.sigma + l.rho - b * 2.0 * (l.sigma / 2.0).sqrt();
        let p = [x1, x2, z];
        prop_assert!(lorenz_region_check(p, l.sigma, l.rho, l.beta));
        prop_assert!(max_symmetric_eigenvalue(&lorenz_symmetric_part(&l, p)) < 0.0);
    }

    #[test]
    fn lorenz_coordinates_round_trip(x in -20.0f64..20.0, y in -20.0f64..20.0, z in 0.0f64..50.0) {
        let l = Lorenz::classic();
        let back = l.to_original(&l.from_original([x, y, z]));
        for (g, w) in back.iter().zip([x, y, z]) {
            prop_assert!((g - w).abs() <= 1e-12 * w.abs().max(1.0));
        }
    }

    #[test]
    fn sat_stays_in_range_and_is_monotone(lo in -2.0f64..0.0, width in 0.0f64..3.0, s in -5.0f64..5.0, d in 0.0f64..1.0) {
        let hi = lo + width;
        let v = sat(lo, hi, s);
        prop_assert!(v >= lo && v <= hi);
        prop_assert!(sat(lo, hi, s + d) >= v);
    }

    #[test]
    fn neuron_gates_are_bounded(y in -3.0f64..3.0) {
        let m = NeuronPlant::m_inf(y);
        let z = NeuronPlant::z_inf(y);
        let tau = NeuronPlant::tau(y);
        prop_assert!((0.0..=1.0).contains(&m));
        prop_assert!((0.0..=1.0).contains(&z));
        prop_assert!((0.2..=1.0).contains(&tau));
    }
}

#[test]
fn neuron_theta_box_membership() {
    assert!(NeuronPlant::theta_in_box(&[0.5, 1.5]));
    assert!(NeuronPlant::theta_in_box(&[0.3, 1.9]));
    assert!(!NeuronPlant::theta_in_box(&[0.2, 1.5]));
    assert!(!NeuronPlant::theta_in_box(&[0.5, 2.0]));
}
