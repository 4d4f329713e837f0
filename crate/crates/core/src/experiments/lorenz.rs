use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Checks;
use crate::design::{lorenz_region_check, lorenz_symmetric_part, max_symmetric_eigenvalue};
use crate::error::Result;
use crate::models::{Lorenz, ModelParams};
use crate::par;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LorenzConfig {
    pub model: Lorenz,
    pub samples: usize,
    pub seed: u64,
    /// Range of the unconstrained first coordinate.
    pub x1_range: [f64; 2],
}

impl Default for LorenzConfig {
    fn default() -> Self {
        Self { model: Lorenz::classic(), samples: 1000, seed: 7, x1_range: [-20.0, 20.0] }
    }
}

impl LorenzConfig {
    pub fn validate(&self) -> Vec<String> {
        let mut c = Checks::default();
        c.model("model", &ModelParams::Lorenz(self.model));
        c.that(self.samples > 0, "samples", "must be at least 1");
        c.that(self.x1_range[0] < self.x1_range[1], "x1_range", "needs lo < hi");
        c.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionSample {
    pub centre: f64,
    pub samples: usize,
    pub negative_definite: usize,
    pub worst_eigenvalue: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LorenzReport {
    /// Region centred at `z = sigma + rho`.
    pub rho_centred: RegionSample,
    /// The same region centred at `z = sigma + beta`.
    pub beta_centred: RegionSample,
}

/// Uniform samples strictly inside the region centred at `z = sigma + c`.
fn sample_region(cfg: &LorenzConfig, centre: f64, seed: u64) -> RegionSample {
    let l = cfg.model;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let hz = 2.0 * (l.sigma / 2.0).sqrt();
    let hy = 2.0 * (l.sigma * l.beta / 2.0).sqrt();
    let mut points = Vec::with_capacity(cfg.samples);
    while points.len() < cfg.samples {
        let p = [
            rng.gen_range(cfg.x1_range[0]..cfg.x1_range[1]),
            rng.gen_range(-hy..hy),
            l.sigma + centre + rng.gen_range(-hz..hz),
        ];
        if lorenz_region_check(p, l.sigma, centre, l.beta) {
            points.push(p);
        }
    }
    let eig = par::map(&points, |p| max_symmetric_eigenvalue(&lorenz_symmetric_part(&l, *p)));
    RegionSample {
        centre,
        samples: points.len(),
        negative_definite: eig.iter().filter(|e| **e < 0.0).count(),
        worst_eigenvalue: eig.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    }
}

pub fn run_lorenz(cfg: &LorenzConfig) -> Result<(LorenzReport, Vec<(String, String)>)> {
    let report = LorenzReport {
        rho_centred: sample_region(cfg, cfg.model.rho, cfg.seed),
        beta_centred: sample_region(cfg, cfg.model.beta, cfg.seed),
    };
    Ok((report, Vec::new()))
}
