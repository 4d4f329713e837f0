use proptest::prelude::*;
use std::f64::consts::PI;

use induced_contraction::design::{
    averaged_gain, chua_closed_form, constant_gain_threshold, describing_function, feedforward_from_reference, hh_square_reference,
    orbit_scale, CertificateBounds, DescribingConvention, FeedforwardOptions, SQUARE_LEVELS,
};
use induced_contraction::integrate::{integrate, StepPolicy};
use induced_contraction::models::{FitzHughNagumo, HhConductance, ModelParams, TransferFunction};
use induced_contraction::nonlinearity::StaticNonlinearity;
use induced_contraction::signal::InputSignal;
use induced_contraction::verify::{bessel_j0_series, odd_q_max};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn averaged_gain_is_bessel_j0(m in 0.0f64..4.0) {
        prop_assert!((averaged_gain(m) - bessel_j0_series(m)).abs() <= 1e-9);
    }

    #[test]
    fn odd_polynomial_has_no_quadrature_part(c1 in -2.0f64..2.0, c3 in -1.0f64..1.0, m in 0.1f64..5.0, w in 0.2f64..5.0) {
        let h = StaticNonlinearity::Polynomial { coefficients: vec![0.0, c1, 0.0, c3] };
        let d = describing_function(&h, m, w, DescribingConvention::Literal).unwrap();
        let scale = (c1.abs() + c3.abs() * m * m).max(1.0);
        prop_assert!(d.q.abs() <= 1e-10 * scale / w.min(1.0).powi(2));
        let want = (c1 + 0.75 * c3 * m * m) / w;
        prop_assert!((d.p - want).abs() <= 1e-9 * scale / w.min(1.0));
    }

    #[test]
    fn classical_convention_removes_the_frequency(k in -3.0f64..3.0, m in 0.1f64..10.0, w in 0.2f64..5.0) {
        let h = StaticNonlinearity::Linear { slope: k };
        let lit = describing_function(&h, m, w, DescribingConvention::Literal).unwrap();
        let cls = describing_function(&h, m, w, DescribingConvention::Classical).unwrap();
        prop_assert!((lit.p - k / w).abs() <= 1e-10 * k.abs().max(1.0) / w.min(1.0));
        prop_assert!((cls.p - k).abs() <= 1e-10 * k.abs().max(1.0));
    }

    #[test]
    fn certificate_inequality_is_monotone(t_hat in 0.0f64..10.0, tau in 0.0f64..0.01, dt in 0.0f64..1.0, dtau in 0.0f64..0.001) {
        let p = HhConductance::default();
        let b = CertificateBounds::new(&p, 0.55, 0.65, 0.33);
        let (_, _, ok) = b.inequality(p.eps, t_hat, tau);
        if ok {
            prop_assert!(b.inequality(p.eps, t_hat + dt, tau).2);
            prop_assert!(b.inequality(p.eps, t_hat, (tau - dtau).max(0.0)).2);
        } else {
            prop_assert!(!b.inequality(p.eps, (t_hat - dt).max(0.0), tau).2);
            prop_assert!(!b.inequality(p.eps, t_hat, tau + dtau).2);
        }
    }

    #[test]
    fn square_reference_is_continuous_and_periodic(t in 0.0f64..20.0) {
        let (t_hat, tau) = (5.0, 0.001);
        let s = hh_square_reference(t_hat, tau, SQUARE_LEVELS).unwrap();
        // The steepest ramp spans tau / 2 between levels that differ by at most 1.85.
        let h = 1e-9;
        prop_assert!((s.value(t + h) - s.value(t)).abs() <= 1.85 / (0.5 * tau) * h * 1.01 + 1e-12);
        prop_assert!((s.value(t + t_hat + tau) - s.value(t)).abs() <= 1e-9);
        let lo = SQUARE_LEVELS.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = SQUARE_LEVELS.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(s.value(t) >= lo - 1e-12 && s.value(t) <= hi + 1e-12);
    }

    #[test]
    fn orbit_scaling_deviation_is_delta_times_sup(delta in -0.5f64..0.5) {
        let fhn = FitzHughNagumo::new(1.0, 1.0, 1.0, 0.1);
        let traj = integrate(&fhn, &InputSignal::Zero, 0.0, 2.0, &[1.0, 0.2], &StepPolicy::Rk4 { h: 1e-2 }).unwrap();
        let scaled = orbit_scale(&traj, delta);
        let mut dev: f64 = 0.0;
        let mut sup: f64 = 0.0;
        for i in 0..traj.len() {
            for (a, b) in traj.state(i).iter().zip(scaled.state(i)) {
                dev = dev.max((a - b).abs());
                sup = sup.max(a.abs());
            }
        }
        prop_assert!((dev - delta.abs() * sup).abs() <= 1e-12 * sup.max(1.0));
    }
}

#[test]
fn odd_maps_have_zero_q() {
    assert!(odd_q_max().unwrap() <= 1e-8);
}

#[test]
fn chua_closed_form_sits_inside_the_stable_band() {
    let d = chua_closed_form(200.0, 1.0);
    assert!(d.p > -0.05 && d.p < 0.0, "p = {}", d.p);
    assert_eq!(d.q, 0.0);
}

#[test]
fn constant_gain_threshold_matches_the_routh_quadratic() {
    // The Routh middle condition reduces to 1.4 rho^2 + 1.029 rho + 0.049 > 0.
    let want = (-1.029 + (1.029f64 * 1.029 - 4.0 * 1.4 * 0.049).sqrt()) / 2.8;
    let got = constant_gain_threshold(&TransferFunction::chua(), -1.0, 0.0).unwrap().unwrap();
    assert!((got - want).abs() <= 1e-9, "{got} vs {want}");
}

#[test]
fn feedforward_residual_is_small_on_all_input_affine_models() {
    let sine = InputSignal::Sinusoid { amplitude: 0.5, omega: 2.0, phase: 0.0 };
    let models = [
        ModelParams::Fhn(FitzHughNagumo::new(1.0, 1.0, 1.0, 0.1)),
        ModelParams::Hh(HhConductance::default()),
        ModelParams::Neuron { theta: [0.5, 1.5] },
        ModelParams::Kapitza(induced_contraction::models::Kapitza::new(1.0, 1.0, 1.0)),
        ModelParams::LureChua { plant: TransferFunction::chua(), nonlinearity: StaticNonlinearity::chua() },
    ];
    let opts = FeedforwardOptions { policy: Some(StepPolicy::Rk4 { h: 1e-3 }), ..Default::default() };
    for p in &models {
        let m = p.build().unwrap();
        let k = m.dim() - m.relative_degree();
        let ff = feedforward_from_reference(p, &sine, &vec![0.0; k], 0.0, 2.0 * PI, &opts).unwrap();
        assert!(ff.max_residual <= 1e-8, "{}: residual {}", m.name(), ff.max_residual);
    }
}
