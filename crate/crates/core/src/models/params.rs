use serde::{Deserialize, Serialize};

use super::{FitzHughNagumo, HhConductance, Kapitza, Lorenz, LureSystem, NeuronPlant, NormalFormModel, TransferFunction};
use crate::error::{Error, Result};
use crate::nonlinearity::StaticNonlinearity;

/// Serializable description of a built-in model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum ModelParams {
    Kapitza(Kapitza),
    Fhn(FitzHughNagumo),
    Hh(HhConductance),
    Lorenz(Lorenz),
    LureChua { plant: TransferFunction, nonlinearity: StaticNonlinearity },
    Neuron { theta: [f64; 2] },
}

impl ModelParams {
    /// Hard constraints; a violation makes the model unusable.
    pub fn errors(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut positive = |name: &str, v: f64| {
            if !(v > 0.0 && v.is_finite()) {
                out.push(format!("{name} must be positive and finite, got {v}"));
            }
        };
        match self {
            Self::Kapitza(k) => {
                positive("alpha", k.alpha);
                positive("beta", k.beta);
                positive("gamma", k.gamma);
            }
            Self::Fhn(f) => {
                positive("alpha", f.alpha);
                positive("beta", f.beta);
                positive("gamma", f.gamma);
                positive("eps", f.eps);
            }
            Self::Hh(h) => {
                positive("g", h.g);
                positive("g_fast", h.g_fast);
                positive("g_slow", h.g_slow);
                positive("eps", h.eps);
                if !h.ordering_holds() {
                    out.push("reversal ordering e_slow < e_leak, v_fast, v_slow < e_fast is violated".into());
                }
            }
            Self::Lorenz(l) => {
                positive("sigma", l.sigma);
                positive("beta", l.beta);
            }
            Self::LureChua { plant, nonlinearity } => {
                if let Err(e) = LureSystem::new(plant.clone(), nonlinearity.clone()) {
                    out.push(e.to_string());
                }
            }
            Self::Neuron { theta } => {
                if theta.iter().any(|t| !t.is_finite()) {
                    out.push("theta must be finite".into());
                }
            }
        }
        out
    }

    /// Soft conditions that are reported but not enforced.
    pub fn warnings(&self) -> Vec<String> {
        match self {
            Self::Fhn(f) if !f.has_relaxation_cycle_condition() => {
                vec![format!("2 alpha < 3 gamma fails (alpha = {}, gamma = {}); no relaxation cycle expected", f.alpha, f.gamma)]
            }
            Self::Neuron { theta } if !NeuronPlant::theta_in_box(theta) => {
                vec![format!("theta = {theta:?} lies outside [0.3, 0.7] x [1.1, 1.9]")]
            }
            _ => Vec::new(),
        }
    }

    /// Runs `f` on the model without boxing it. Parameters are not validated.
    pub fn with_model<R>(&self, f: impl FnOnce(&dyn NormalFormModel) -> R) -> Result<R> {
        Ok(match self {
            Self::Kapitza(k) => f(k),
            Self::Fhn(m) => f(m),
            Self::Hh(h) => f(h),
            Self::Lorenz(l) => f(l),
            Self::LureChua { plant, nonlinearity } => f(&LureSystem::new(plant.clone(), nonlinearity.clone())?),
            Self::Neuron { theta } => f(&NeuronPlant::new(*theta)),
        })
    }

    pub fn build(&self) -> Result<Box<dyn NormalFormModel>> {
        let errs = self.errors();
        if !errs.is_empty() {
            return Err(Error::InvalidParameter(errs.join("; ")));
        }
        Ok(match self {
            Self::Kapitza(k) => Box::new(*k),
            Self::Fhn(f) => Box::new(*f),
            Self::Hh(h) => Box::new(*h),
            Self::Lorenz(l) => Box::new(*l),
            Self::LureChua { plant, nonlinearity } => Box::new(LureSystem::new(plant.clone(), nonlinearity.clone())?),
            Self::Neuron { theta } => Box::new(NeuronPlant::new(*theta)),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_through_json() {
        let all = vec![
            ModelParams::Kapitza(Kapitza::new(1.0, 1.0, 1.0)),
            ModelParams::Fhn(FitzHughNagumo::new(1.0, 1.0, 1.0, 0.1)),
            ModelParams::Hh(HhConductance::default()),
            ModelParams::Lorenz(Lorenz::classic()),
            ModelParams::LureChua { plant: TransferFunction::chua(), nonlinearity: StaticNonlinearity::chua() },
            ModelParams::Neuron { theta: [0.5, 1.5] },
        ];
        for p in all {
            let s = serde_json::to_string(&p).unwrap();
            let back: ModelParams = serde_json::from_str(&s).unwrap();
            assert_eq!(back, p);
            assert!(p.build().is_ok());
        }
    }

    #[test]
    fn flags_bad_values() {
        let p = ModelParams::Fhn(FitzHughNagumo::new(2.0, 1.0, 1.0, -0.1));
        assert_eq!(p.errors().len(), 1);
        assert_eq!(p.warnings().len(), 1);
        assert!(p.build().is_err());
    }
}
