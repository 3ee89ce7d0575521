use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DiscountKind {
    /// Paid at the start of the stage.
    Investment,
    /// Operation, maintenance and emission, at the end of the stage.
    Operation,
}

/// Capital recovery factor `i(1+i)^T / ((1+i)^T - 1)`.
pub fn annuity_factor(i: f64, years: u32) -> Result<f64> {
    if !(i > 0.0) || !i.is_finite() {
        return Err(Error::Domain(format!("interest rate must be positive, got {i}")));
    }
    if years < 1 {
        return Err(Error::Domain("lifetime must be at least one year".into()));
    }
    let g = (1.0 + i).powi(years as i32);
    Ok(i * g / (g - 1.0))
}

/// Two-year stage present-value factor for stage `s` of `stage_count`.
pub fn stage_discount(s: u32, stage_count: u32, i: f64, kind: DiscountKind) -> Result<f64> {
    if s < 1 || s > stage_count {
        return Err(Error::Domain(format!("stage {s} outside 1..={stage_count}")));
    }
    let exp = match kind {
        DiscountKind::Investment => 2 * s as i32 - 1,
        DiscountKind::Operation => 2 * s as i32,
    };
    Ok(2.0 / (1.0 + i).powi(exp))
}

/// `(1 + LG)^s`.
pub fn stage_load_factor(s: u32, lg: f64) -> f64 {
    (1.0 + lg).powi(s as i32)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn annuity_examples() {
        assert_abs_diff_eq!(annuity_factor(0.05, 1).unwrap(), 1.05, epsilon = 1e-12);
        assert_abs_diff_eq!(annuity_factor(0.05, 20).unwrap(), 0.0802426, epsilon = 5e-8);
        assert_abs_diff_eq!(annuity_factor(0.05, 30).unwrap(), 0.0650514, epsilon = 5e-8);
        assert!(annuity_factor(0.0, 10).is_err());
        assert!(annuity_factor(-0.1, 10).is_err());
        assert!(annuity_factor(0.05, 0).is_err());
    }

    #[test]
    fn discount_examples() {
        let inv = stage_discount(1, 7, 0.05, DiscountKind::Investment).unwrap();
        assert_abs_diff_eq!(inv, 1.9047619, epsilon = 5e-8);
        let op = stage_discount(1, 7, 0.05, DiscountKind::Operation).unwrap();
        assert_abs_diff_eq!(op, 1.8140590, epsilon = 5e-8);
        let op7 = stage_discount(7, 7, 0.05, DiscountKind::Operation).unwrap();
        assert_abs_diff_eq!(op7, 2.0 / 1.05f64.powi(14), epsilon = 1e-15);
        assert_abs_diff_eq!(op7, 1.010135906, epsilon = 1e-9);
        assert!(stage_discount(0, 7, 0.05, DiscountKind::Operation).is_err());
        assert!(stage_discount(8, 7, 0.05, DiscountKind::Investment).is_err());
    }

    #[test]
    fn load_factor_examples() {
        assert_abs_diff_eq!(stage_load_factor(1, 0.10), 1.10, epsilon = 1e-12);
        assert_abs_diff_eq!(stage_load_factor(7, 0.10), 1.9487171, epsilon = 1e-12);
        assert_eq!(stage_load_factor(3, 0.0), 1.0);
    }
}
