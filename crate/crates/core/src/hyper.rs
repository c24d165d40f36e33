//! Tuning constants of the prior and the fractional likelihood.

use crate::data::Dataset;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// All tuning constants of the procedure.
///
/// * `alpha` — fractional-likelihood power, in (0,1);
/// * `gamma` — prior precision scale of the coefficient slab, > 0;
/// * `a0`, `b0` — inverse-gamma shape/scale for the error variance;
/// * `c`, `a` — complexity-prior constants, `f(s) ∝ (c p^a)^{-s}`;
/// * `r` — maximum support size (JSON field `R`).
///
/// `alpha + gamma <= 1` is not required for the core machinery but is
/// needed for calibrated credible sets; [`HyperParams::warnings`] flags a
/// violation so reports can carry it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HyperParams {
    pub alpha: f64,
    pub gamma: f64,
    pub a0: f64,
    pub b0: f64,
    pub c: f64,
    pub a: f64,
    #[serde(rename = "R")]
    pub r: usize,
}

impl HyperParams {
    /// Defaults for an `n x p` problem: `alpha = 0.99`, `gamma = 0.005`
    /// (nearly the full likelihood, diffuse slab, `alpha + gamma <= 1`),
    /// weak inverse-gamma `a0 = b0 = 0.01`, `c = a = 1`, and
    /// `R = min(n-1, p)`. Engineering choices, all overridable.
    pub fn default_for(n: usize, p: usize) -> Self {
        HyperParams {
            alpha: 0.99,
            gamma: 0.005,
            a0: 0.01,
            b0: 0.01,
            c: 1.0,
            a: 1.0,
            r: n.saturating_sub(1).min(p).max(1),
        }
    }

    /// Checks every range constraint; the first violation is reported by
    /// field name.
    pub fn validate(&self) -> Result<()> {
        fn fail(field: &'static str, message: String) -> Error {
            Error::OutOfRange { field, message }
        }
        if self.alpha.is_nan() || self.alpha <= 0.0 || self.alpha >= 1.0 {
            return Err(fail("alpha", format!("must lie in (0,1), got {}", self.alpha)));
        }
        if self.gamma.is_nan() || self.gamma <= 0.0 || !self.gamma.is_finite() {
            return Err(fail("gamma", format!("must be > 0, got {}", self.gamma)));
        }
        if self.a0.is_nan() || self.a0 <= 0.0 || !self.a0.is_finite() {
            return Err(fail("a0", format!("must be > 0, got {}", self.a0)));
        }
        if self.b0.is_nan() || self.b0 <= 0.0 || !self.b0.is_finite() {
            return Err(fail("b0", format!("must be > 0, got {}", self.b0)));
        }
        if self.c.is_nan() || self.c <= 0.0 || !self.c.is_finite() {
            return Err(fail("c", format!("must be > 0, got {}", self.c)));
        }
        if self.a.is_nan() || self.a <= 0.0 || !self.a.is_finite() {
            return Err(fail("a", format!("must be > 0, got {}", self.a)));
        }
        if self.r == 0 {
            return Err(fail("R", "must be a positive integer".into()));
        }
        Ok(())
    }

    /// Additionally checks `R <= min(n, p)` against a concrete dataset.
    pub fn validate_for(&self, data: &Dataset) -> Result<()> {
        self.validate()?;
        let cap = data.n().min(data.p());
        if self.r > cap {
            return Err(Error::OutOfRange {
                field: "R",
                message: format!("R={} exceeds min(n,p)={cap}", self.r),
            });
        }
        Ok(())
    }

    /// Non-fatal conditions worth surfacing in reports.
    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        if self.alpha + self.gamma > 1.0 {
            w.push(format!(
                "alpha+gamma>1 ({}): credible sets lose their coverage guarantee",
                self.alpha + self.gamma
            ));
        }
        w
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let h: HyperParams = serde_json::from_str(s)?;
        h.validate()?;
        Ok(h)
    }

    pub fn from_json_file<P: AsRef<Path>>(path: P) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }
}

/// Validates and returns the parameters unchanged; range violations name
/// the offending field. A coverage warning (`alpha + gamma > 1`) is not an
/// error — consult [`HyperParams::warnings`].
pub fn validate_hyperparams(h: HyperParams) -> Result<HyperParams> {
    h.validate()?;
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> HyperParams {
        HyperParams {
            alpha: 0.99,
            gamma: 0.005,
            a0: 1.0,
            b0: 1.0,
            c: 1.0,
            a: 1.0,
            r: 5,
        }
    }

    #[test]
    fn valid_params_pass_without_warning() {
        let h = validate_hyperparams(base()).unwrap();
        assert!(h.warnings().is_empty());
    }

    #[test]
    fn alpha_out_of_range_names_field() {
        let mut h = base();
        h.alpha = 1.2;
        match validate_hyperparams(h) {
            Err(Error::OutOfRange { field, .. }) => assert_eq!(field, "alpha"),
            other => panic!("expected OutOfRange(alpha), got {other:?}"),
        }
    }

    #[test]
    fn coverage_condition_violation_warns_but_passes() {
        let mut h = base();
        h.alpha = 0.9;
        h.gamma = 0.3;
        let h = validate_hyperparams(h).unwrap();
        assert!(h.warnings().iter().any(|w| w.contains("alpha+gamma>1")));
    }

    #[test]
    fn json_uses_exact_field_names() {
        let s = r#"{"alpha":0.9,"gamma":0.1,"a0":1.0,"b0":1.0,"c":1.0,"a":1.0,"R":3}"#;
        let h = HyperParams::from_json_str(s).unwrap();
        assert_eq!(h.r, 3);
        // unknown fields rejected
        assert!(HyperParams::from_json_str(r#"{"alpha":0.9,"gamma":0.1,"a0":1,"b0":1,"c":1,"a":1,"R":3,"x":0}"#).is_err());
        // lowercase r is unknown
        assert!(HyperParams::from_json_str(r#"{"alpha":0.9,"gamma":0.1,"a0":1,"b0":1,"c":1,"a":1,"r":3}"#).is_err());
    }

    #[test]
    fn default_r_respects_dimensions() {
        let h = HyperParams::default_for(10, 50);
        assert_eq!(h.r, 9);
        let h = HyperParams::default_for(100, 5);
        assert_eq!(h.r, 5);
        assert!(h.validate().is_ok());
    }
}
