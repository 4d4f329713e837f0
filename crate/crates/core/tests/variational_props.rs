use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

use induced_contraction::integrate::{find_limit_cycle, integrate, CycleOptions, Direction, FnSystem, Section, StepPolicy};
use induced_contraction::models::FitzHughNagumo;
use induced_contraction::poly;
use induced_contraction::signal::InputSignal;
use induced_contraction::variational::{
    characteristic_polynomial, eigen_small, floquet, hurwitz, state_transition, ConstantLinearization, FloquetOptions,
};
use induced_contraction::verify::rk4_observed_order;

fn flat_traj(t1: f64) -> induced_contraction::integrate::Trajectory {
    let sys = FnSystem::new(1, |_t, _x: &[f64], _u, out: &mut [f64]| out[0] = 0.0);
    integrate(&sys, &InputSignal::Zero, 0.0, t1, &[0.0], &StepPolicy::Rk4 { h: 0.01 }).unwrap()
}

fn fhn_orbit() -> (FitzHughNagumo, induced_contraction::integrate::Trajectory, f64) {
    let fhn = FitzHughNagumo::new(1.0, 1.0, 1.0, 0.1);
    let section = Section { index: 0, level: 0.0, direction: Direction::Up };
    let policy = StepPolicy::Rk4 { h: 1e-3 };
    let lc = find_limit_cycle(&fhn, &InputSignal::Zero, &[1.0, 0.0], section, &policy, &CycleOptions::default()).unwrap();
    let orbit = integrate(&fhn, &InputSignal::Zero, 0.0, 1.1 * lc.period, &lc.anchor, &policy).unwrap();
    (fhn, orbit, lc.period)
}

fn matrix(entries: &[f64], n: usize) -> DMatrix<f64> {
    DMatrix::from_row_slice(n, n, &entries[..n * n])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn constant_transition_satisfies_liouville(entries in prop::collection::vec(-1.0f64..1.0, 9), t in 0.1f64..2.0) {
        let a = matrix(&entries, 3);
        let tr = state_transition(&ConstantLinearization(a.clone()), &flat_traj(2.0), 0.0, t, Some(1e-3)).unwrap();
        prop_assert!(tr.liouville_gap() <= 1e-9, "gap {}", tr.liouville_gap());
        prop_assert!((tr.trace_integral - a.trace() * t).abs() <= 1e-12);
    }

    #[test]
    fn constant_transition_composes(entries in prop::collection::vec(-1.0f64..1.0, 4), t1 in 0.1f64..1.0, t2 in 1.0f64..2.0) {
        let lin = ConstantLinearization(matrix(&entries, 2));
        let tr = flat_traj(2.0);
        let whole = state_transition(&lin, &tr, 0.0, t2, Some(1e-3)).unwrap();
        let first = state_transition(&lin, &tr, 0.0, t1, Some(1e-3)).unwrap();
        let second = state_transition(&lin, &tr, t1, t2, Some(1e-3)).unwrap();
        prop_assert!((whole.phi - second.phi * first.phi).amax() <= 1e-10);
    }

    #[test]
    fn hurwitz_agrees_with_roots(c in prop::collection::vec(-3.0f64..3.0, 3)) {
        let coeffs = [1.0, c[0], c[1], c[2]];
        let roots = poly::roots(&coeffs);
        let max_re = roots.iter().map(|r| r.re).fold(f64::NEG_INFINITY, f64::max);
        prop_assume!(max_re.abs() > 1e-6);
        prop_assert_eq!(hurwitz(&coeffs).unwrap().stable, max_re < 0.0);
    }

    #[test]
    fn polynomial_roots_reproduce_coefficients(r in prop::collection::vec(-3.0f64..3.0, 4)) {
        // (s - r0)(s - r1)(s^2 - 2 r2 s + r2^2 + r3^2)
        let pair = [1.0, -2.0 * r[2], r[2] * r[2] + r[3] * r[3]];
        let lin = [1.0, -(r[0] + r[1]), r[0] * r[1]];
        let mut coeffs = [0.0; 5];
        for (i, a) in lin.iter().enumerate() {
            for (j, b) in pair.iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        for root in poly::roots(&coeffs) {
            let v = coeffs.iter().fold(Complex64::new(0.0, 0.0), |acc, c| acc * root + c);
            prop_assert!(v.norm() <= 1e-8 * coeffs.iter().map(|c| c.abs()).sum::<f64>().max(1.0) * (1.0 + root.norm()).powi(4));
        }
    }

    #[test]
    fn eigenvalues_match_trace_and_determinant(entries in prop::collection::vec(-2.0f64..2.0, 16), n in 1usize..=4) {
        let a = matrix(&entries, n);
        let e = eigen_small(&a).unwrap();
        let sum: Complex64 = e.values.iter().sum();
        let prod: Complex64 = e.values.iter().product();
        prop_assert!((sum.re - a.trace()).abs() <= 1e-8 * (1.0 + a.norm()));
        prop_assert!((prod.re - a.determinant()).abs() <= 1e-7 * (1.0 + a.norm()).powi(n as i32));
        let cp = characteristic_polynomial(&a);
        prop_assert_eq!(cp.len(), n + 1);
    }
}

#[test]
fn fhn_transition_composes_and_keeps_liouville() {
    let (fhn, orbit, period) = fhn_orbit();
    for frac in [0.2, 0.37, 0.6] {
        let t1 = frac * period;
        let whole = state_transition(&fhn, &orbit, 0.0, period, Some(1e-4)).unwrap();
        let first = state_transition(&fhn, &orbit, 0.0, t1, Some(1e-4)).unwrap();
        let second = state_transition(&fhn, &orbit, t1, period, Some(1e-4)).unwrap();
        let comp = (&whole.phi - &second.phi * &first.phi).amax() / whole.phi.amax().max(1.0);
        assert!(comp <= 1e-7, "composition {comp}");
        assert!(first.liouville_gap() <= 1e-6 && second.liouville_gap() <= 1e-6);
    }
}

#[test]
fn fhn_free_cycle_has_a_unit_multiplier() {
    let (fhn, orbit, period) = fhn_orbit();
    let opts = FloquetOptions { max_step: Some(1e-4), period_tol: 1e-4 };
    let m = floquet(&fhn, &orbit, 0.0, period, &opts).unwrap();
    assert!((m.spectral_radius - 1.0).abs() <= 1e-3, "radius {}", m.spectral_radius);
    assert!(m.eigenvalues[1].norm() < 1.0);
}

#[test]
fn rk4_has_fourth_order() {
    let order = rk4_observed_order().unwrap();
    assert!((order - 4.0).abs() <= 0.2, "order {order}");
}
