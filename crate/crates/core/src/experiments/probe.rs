use serde::{Deserialize, Serialize};

use super::Checks;
use crate::design::InverseSystem;
use crate::error::Result;
use crate::integrate::{FnSystem, StepPolicy};
use crate::models::ModelParams;
use crate::signal::InputSignal;
use crate::variational::{contraction_probe, ProbeResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "target", rename_all = "snake_case")]
pub enum ProbeTarget {
    /// `z' = -z + u`.
    Linear { input: InputSignal, expected_rate: f64 },
    /// Inverse system of a built-in model driven by an output reference.
    Inverse { name: String, model: ModelParams, reference: InputSignal, expected_rate: Option<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeConfig {
    pub targets: Vec<ProbeTarget>,
    pub horizon: f64,
    pub policy: StepPolicy,
    pub rate_tol: f64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        let sine = InputSignal::Sinusoid { amplitude: 1.0, omega: 2.0, phase: 0.0 };
        Self {
            targets: vec![
                ProbeTarget::Linear { input: sine.clone(), expected_rate: -1.0 },
                ProbeTarget::Inverse {
                    name: "fhn".into(),
                    model: ModelParams::Fhn(crate::models::FitzHughNagumo::new(1.0, 1.0, 1.0, 0.1)),
                    reference: sine.clone(),
                    expected_rate: Some(-1.0),
                },
                ProbeTarget::Inverse {
                    name: "hh".into(),
                    model: ModelParams::Hh(Default::default()),
                    reference: sine.clone(),
                    expected_rate: Some(-1.0),
                },
                ProbeTarget::Inverse {
                    name: "chua".into(),
                    model: ModelParams::LureChua {
                        plant: crate::models::TransferFunction::chua(),
                        nonlinearity: crate::nonlinearity::StaticNonlinearity::chua(),
                    },
                    reference: sine.clone(),
                    expected_rate: None,
                },
                ProbeTarget::Inverse {
                    name: "neuron".into(),
                    model: ModelParams::Neuron { theta: [0.5, 1.5] },
                    reference: InputSignal::Sinusoid { amplitude: 0.5, omega: 2.0, phase: 0.0 },
                    expected_rate: None,
                },
            ],
            horizon: 20.0,
            policy: StepPolicy::Rk4 { h: 1e-3 },
            rate_tol: 0.01,
        }
    }
}

impl ProbeConfig {
    pub fn validate(&self) -> Vec<String> {
        let mut c = Checks::default();
        c.that(!self.targets.is_empty(), "targets", "must not be empty");
        for (i, t) in self.targets.iter().enumerate() {
            match t {
                ProbeTarget::Linear { input, expected_rate } => {
                    c.signal(&format!("targets[{i}].input"), input);
                    c.finite(&format!("targets[{i}].expected_rate"), *expected_rate);
                }
                ProbeTarget::Inverse { model, reference, .. } => {
                    c.model(&format!("targets[{i}].model"), model);
                    c.signal(&format!("targets[{i}].reference"), reference);
                }
            }
        }
        c.positive("horizon", self.horizon);
        c.policy("policy", &self.policy);
        c.positive("rate_tol", self.rate_tol);
        c.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeOutcome {
    pub name: String,
    pub probe: ProbeResult,
    pub expected_rate: Option<f64>,
    pub rate_matches: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub outcomes: Vec<ProbeOutcome>,
}

pub fn run_probe(cfg: &ProbeConfig) -> Result<(ProbeReport, Vec<(String, String)>)> {
    let mut outcomes = Vec::new();
    for t in &cfg.targets {
        let (name, probe, expected) = match t {
            ProbeTarget::Linear { input, expected_rate } => {
                let sys = FnSystem::new(1, |_t, z: &[f64], u, out: &mut [f64]| out[0] = -z[0] + u);
                let p = contraction_probe(&sys, input, &[1.0], &[-1.0], 0.0, cfg.horizon, &cfg.policy, &[])?;
                ("linear".to_string(), p, Some(*expected_rate))
            }
            ProbeTarget::Inverse { name, model, reference, expected_rate } => {
                let p = model.with_model(|m| -> Result<ProbeResult> {
                    let inv = InverseSystem { model: m, reference };
                    let k = m.dim() - m.relative_degree();
                    let za = vec![0.0; k];
                    let zb = vec![1.0; k];
                    contraction_probe(&inv, reference, &za, &zb, 0.0, cfg.horizon, &cfg.policy, &[])
                })??;
                (name.clone(), p, *expected_rate)
            }
        };
        outcomes.push(ProbeOutcome {
            rate_matches: expected.map(|e| (probe.rate - e).abs() <= cfg.rate_tol),
            name,
            probe,
            expected_rate: expected,
        });
    }
    Ok((ProbeReport { outcomes }, Vec::new()))
}
