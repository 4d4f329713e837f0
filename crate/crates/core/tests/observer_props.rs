use nalgebra::DMatrix;
use proptest::prelude::*;

use induced_contraction::integrate::StepPolicy;
use induced_contraction::observer::{build_observer, run_observer, NeuronFamily, ObserverSetup, ParameterizedPlant};
use induced_contraction::signal::InputSignal;
use induced_contraction::Error;

/// `y' = -y + u + h(y)^T theta`, `z' = y - z` with a configurable regressor.
struct ScalarPlant {
    regressor: fn(f64) -> f64,
    antiderivative: fn(f64) -> f64,
}

impl ParameterizedPlant for ScalarPlant {
    fn dim(&self) -> usize {
        2
    }

    fn param_count(&self) -> usize {
        1
    }

    fn vector_field(&self, _t: f64, x: &[f64], theta: &[f64], u: f64, out: &mut [f64]) {
        out[0] = -x[0] + u + (self.regressor)(x[0]) * theta[0];
        out[1] = x[0] - x[1];
    }

    fn jacobian(&self, _t: f64, _x: &[f64], _theta: &[f64], _u: f64) -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 1.0, -1.0])
    }

    fn regressor(&self, y: f64) -> Vec<f64> {
        vec![(self.regressor)(y)]
    }

    fn antiderivative(&self, y: f64) -> Vec<f64> {
        vec![(self.antiderivative)(y)]
    }

    fn state_names(&self) -> Vec<String> {
        vec!["y".into(), "z".into()]
    }
}

fn neuron_setup(theta_hat0: [f64; 2], horizon: f64) -> ObserverSetup {
    ObserverSetup {
        theta: vec![0.5, 1.5],
        theta_hat0: theta_hat0.to_vec(),
        plant_x0: vec![-0.5, 0.3],
        observer_x0: vec![-0.5, 0.3],
        horizon,
        tolerance: 0.02 * (0.5f64.powi(2) + 1.5f64.powi(2)).sqrt(),
        period: 2.8,
        persistence: 3,
    }
}

fn pulse() -> InputSignal {
    InputSignal::SquarePulseTrain { magnitude: -3.0, duration: 0.002, period: 2.8, start: 0.0 }
}

#[test]
fn zero_regressor_freezes_the_estimate() {
    let plant = ScalarPlant { regressor: |_| 0.0, antiderivative: |_| 0.0 };
    let spec = build_observer(&plant, 1.0).unwrap();
    let setup = ObserverSetup {
        theta: vec![2.0],
        theta_hat0: vec![-1.0],
        plant_x0: vec![1.0, 0.0],
        observer_x0: vec![-1.0, 0.5],
        horizon: 10.0,
        tolerance: 1e-3,
        period: 1.0,
        persistence: 1,
    };
    let input = InputSignal::Sinusoid { amplitude: 1.0, omega: 1.0, phase: 0.0 };
    let run = run_observer(&spec, &setup, &input, &StepPolicy::Rk4 { h: 1e-2 }).unwrap();
    for s in run.traces.states() {
        assert_eq!(s[4], -1.0);
    }
    assert!(run.converged_at.is_none());
}

#[test]
fn wrong_antiderivative_is_rejected() {
    let plant = ScalarPlant { regressor: |y| y, antiderivative: |y| y * y };
    match build_observer(&plant, 1.0) {
        Err(Error::AntiderivativeMismatch { .. }) => {}
        other => panic!("expected an antiderivative mismatch, got {:?}", other.err()),
    }
    let good = ScalarPlant { regressor: |y| y, antiderivative: |y| 0.5 * y * y };
    assert!(build_observer(&good, 1.0).is_ok());
    assert!(build_observer(&good, 0.0).is_err());
}

#[test]
fn exact_copy_tracks_the_plant() {
    let family = NeuronFamily::default();
    let spec = build_observer(&family, 0.02).unwrap();
    let run = run_observer(&spec, &neuron_setup([0.5, 1.5], 28.0), &pulse(), &StepPolicy::Rk4 { h: 1e-3 }).unwrap();
    let worst = run.theta_error.iter().chain(&run.output_error).fold(0.0f64, |m, v| m.max(*v));
    assert!(worst <= 1e-6, "embedding error {worst}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn antiderivative_offset_cancels(offset in -100.0f64..100.0) {
        let family = NeuronFamily::default();
        let mut shifted = build_observer(&family, 0.02).unwrap();
        let plain = build_observer(&family, 0.02).unwrap();
        shifted.h_offset = offset;
        let setup = neuron_setup([0.3, 1.8], 5.0);
        let policy = StepPolicy::Rk4 { h: 1e-3 };
        let a = run_observer(&plain, &setup, &pulse(), &policy).unwrap();
        let b = run_observer(&shifted, &setup, &pulse(), &policy).unwrap();
        let gap = a.traces.states().zip(b.traces.states())
            .flat_map(|(x, y)| x.iter().zip(y).map(|(p, q)| (p - q).abs()))
            .fold(0.0f64, f64::max);
        prop_assert!(gap <= 1e-12, "gap {gap}");
    }

    #[test]
    fn estimate_moves_toward_the_truth_on_a_linear_plant(theta in 0.5f64..2.0, theta_hat0 in -1.0f64..3.0) {
        let plant = ScalarPlant { regressor: |y| y, antiderivative: |y| 0.5 * y * y };
        let spec = build_observer(&plant, 1.0).unwrap();
        let setup = ObserverSetup {
            theta: vec![-theta],
            theta_hat0: vec![-theta_hat0],
            plant_x0: vec![0.0, 0.0],
            observer_x0: vec![0.0, 0.0],
            horizon: 40.0,
            tolerance: 1e-3,
            period: 1.0,
            persistence: 1,
        };
        let input = InputSignal::Sum { terms: vec![
            InputSignal::Constant { value: 1.0 },
            InputSignal::Sinusoid { amplitude: 0.5, omega: 1.0, phase: 0.0 },
        ]};
        let run = run_observer(&spec, &setup, &input, &StepPolicy::Rk4 { h: 1e-2 }).unwrap();
        let first = run.theta_error[0];
        let last = *run.theta_error.last().unwrap();
        prop_assert!(last <= first + 1e-12, "error grew from {first} to {last}");
    }
}
