use serde::{Deserialize, Serialize};

/// Memoryless scalar nonlinearities used in Lure loops and describing-function analysis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StaticNonlinearity {
    Linear { slope: f64 },
    /// `sum_k c_k y^k`, ascending powers.
    Polynomial { coefficients: Vec<f64> },
    /// Odd three-segment piecewise-linear map: slope `inner_slope` on
    /// `|y| < breakpoint`, `outer_slope` outside.
    Chua { inner_slope: f64, outer_slope: f64, breakpoint: f64 },
    Saturation { limit: f64 },
    Tanh { gain: f64 },
    /// `sin(frequency y)`.
    Sine { frequency: f64 },
}

impl StaticNonlinearity {
    /// The Chua diode characteristic used in the entrainment example.
    pub fn chua() -> Self {
        Self::Chua { inner_slope: -4.0, outer_slope: -0.1, breakpoint: 1.0 }
    }

    pub fn eval(&self, y: f64) -> f64 {
        match self {
            Self::Linear { slope } => slope * y,
            Self::Polynomial { coefficients } => coefficients.iter().rev().fold(0.0, |acc, c| acc * y + c),
            Self::Chua { inner_slope, outer_slope, breakpoint } => {
                if y >= *breakpoint {
                    outer_slope * (y - breakpoint) + inner_slope * breakpoint
                } else if y <= -breakpoint {
                    outer_slope * (y + breakpoint) - inner_slope * breakpoint
                } else {
                    inner_slope * y
                }
            }
            Self::Saturation { limit } => y.clamp(-limit, *limit),
            Self::Tanh { gain } => (gain * y).tanh(),
            Self::Sine { frequency } => (frequency * y).sin(),
        }
    }

    /// Derivative; at kinks the left derivative is returned.
    pub fn slope(&self, y: f64) -> f64 {
        match self {
            Self::Linear { slope } => *slope,
            Self::Polynomial { coefficients } => coefficients
                .iter()
                .enumerate()
                .skip(1)
                .rev()
                .fold(0.0, |acc, (k, c)| acc * y + k as f64 * c),
            Self::Chua { inner_slope, outer_slope, breakpoint } => {
                if y > *breakpoint || y <= -breakpoint {
                    *outer_slope
                } else {
                    *inner_slope
                }
            }
            Self::Saturation { limit } => {
                if y > -limit && y <= *limit {
                    1.0
                } else {
                    0.0
                }
            }
            Self::Tanh { gain } => {
                let th = (gain * y).tanh();
                gain * (1.0 - th * th)
            }
            Self::Sine { frequency } => frequency * (frequency * y).cos(),
        }
    }

    /// Arguments where the map is not continuously differentiable.
    pub fn kinks(&self) -> Vec<f64> {
        match self {
            Self::Chua { breakpoint, .. } => vec![-breakpoint, *breakpoint],
            Self::Saturation { limit } => vec![-limit, *limit],
            _ => Vec::new(),
        }
    }

    pub fn is_odd(&self) -> bool {
        match self {
            Self::Polynomial { coefficients } => {
                coefficients.iter().step_by(2).all(|c| *c == 0.0)
            }
            _ => true,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chua_segments_meet_at_breakpoints() {
        let h = StaticNonlinearity::chua();
        assert_eq!(h.eval(1.0), -4.0);
        assert_eq!(h.eval(-1.0), 4.0);
        assert!((h.eval(2.0) - (-4.1)).abs() < 1e-15);
        assert!((h.eval(-3.0) - 4.2).abs() < 1e-15);
        assert_eq!(h.slope(1.0), -4.0);
        assert_eq!(h.slope(1.0 + 1e-12), -0.1);
    }

    #[test]
    fn polynomial_slope_matches_power_rule() {
        let h = StaticNonlinearity::Polynomial { coefficients: vec![0.0, 1.0, 0.0, 2.0] };
        assert_eq!(h.eval(2.0), 2.0 + 16.0);
        assert_eq!(h.slope(2.0), 1.0 + 24.0);
        assert!(h.is_odd());
    }
}
