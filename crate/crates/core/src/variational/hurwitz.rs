use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictMethod {
    Eigen,
    Routh,
    Monodromy,
    LyapunovProbe,
}

/// Outcome of a stability test.
///
/// `margin` is positive exactly when `stable` holds. Its meaning depends on
/// the method:
/// - `Routh`: smallest first-column entry, sign-corrected and divided by the largest |coefficient|;
/// - `Eigen`: minus the largest real part;
/// - `Monodromy`: one minus the spectral radius;
/// - `LyapunovProbe`: minus the fitted log-separation slope.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityVerdict {
    pub stable: bool,
    pub margin: f64,
    pub method: VerdictMethod,
}

impl StabilityVerdict {
    pub fn from_margin(margin: f64, method: VerdictMethod) -> Self {
        Self { stable: margin > 0.0, margin, method }
    }
}

/// Routh-Hurwitz test for a real polynomial with descending coefficients.
///
/// An exactly vanishing pivot reports a marginal (not stable) verdict with zero margin.
pub fn hurwitz(coeffs: &[f64]) -> Result<StabilityVerdict> {
    let lead = *coeffs.first().ok_or(Error::ZeroLeadingCoefficient)?;
    if lead == 0.0 {
        return Err(Error::ZeroLeadingCoefficient);
    }
    let first = routh_first_column(coeffs);
    let scale = coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let sign = lead.signum();
    let margin = match first {
        None => 0.0,
        Some(col) => col.iter().map(|c| sign * c / scale).fold(f64::INFINITY, f64::min),
    };
    Ok(StabilityVerdict::from_margin(margin, VerdictMethod::Routh))
}

/// First column of the Routh array, or `None` when a pivot vanishes exactly.
pub fn routh_first_column(coeffs: &[f64]) -> Option<Vec<f64>> {
    let deg = coeffs.len() - 1;
    let width = deg / 2 + 1;
    let mut prev: Vec<f64> = (0..width).map(|j| coeffs.get(2 * j).copied().unwrap_or(0.0)).collect();
    let mut cur: Vec<f64> = (0..width).map(|j| coeffs.get(2 * j + 1).copied().unwrap_or(0.0)).collect();
    let mut col = vec![prev[0]];
    if deg == 0 {
        return Some(col);
    }
    for row in 1..=deg {
        col.push(cur[0]);
        if cur[0] == 0.0 {
            return None;
        }
        if row == deg {
            break;
        }
        let next: Vec<f64> = (0..width)
            .map(|j| {
                let a = prev.get(j + 1).copied().unwrap_or(0.0);
                let b = cur.get(j + 1).copied().unwrap_or(0.0);
                (cur[0] * a - prev[0] * b) / cur[0]
            })
            .collect();
        prev = cur;
        cur = next;
    }
    Some(col)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn second_order_positivity() {
        assert!(hurwitz(&[1.0, 1.0, 0.056]).unwrap().stable);
        assert!(!hurwitz(&[1.0, 1.0, -0.056]).unwrap().stable);
        assert!(!hurwitz(&[1.0, -1.0, 0.5]).unwrap().stable);
    }

    #[test]
    fn chua_denominator_by_hand() {
        // Rows: [0.2, 0.7], [1.47, 4.9], [(1.47*0.7 - 0.2*4.9)/1.47, 0], [4.9].
        let col = routh_first_column(&[0.2, 1.47, 0.7, 4.9]).unwrap();
        let want = [0.2, 1.47, (1.47 * 0.7 - 0.2 * 4.9) / 1.47, 4.9];
        for (g, w) in col.iter().zip(want) {
            assert!((g - w).abs() < 1e-14);
        }
        assert!(hurwitz(&[0.2, 1.47, 0.7, 4.9]).unwrap().stable);
    }

    #[test]
    fn zero_pivot_is_marginal() {
        let v = hurwitz(&[1.0, 0.0, 1.0]).unwrap();
        assert!(!v.stable);
        assert_eq!(v.margin, 0.0);
        let v = hurwitz(&[1.0, 1.0, 0.0]).unwrap();
        assert!(!v.stable);
    }

    #[test]
    fn negative_lead_is_normalized() {
        assert!(hurwitz(&[-1.0, -3.0, -2.0]).unwrap().stable);
        assert_eq!(hurwitz(&[0.0, 1.0]), Err(Error::ZeroLeadingCoefficient));
    }
}
