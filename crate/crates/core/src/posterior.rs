//! The marginal support posterior: complexity prior over supports and the
//! closed-form log posterior with coefficients and error variance
//! integrated out.
//!
//! Only ratios across supports matter for search and enumeration, so the
//! support-size prior is kept unnormalized: the constant `Σ_{t≤R}(c p^a)^{-t}`
//! is dropped everywhere.

use crate::data::Dataset;
use crate::error::Result;
use crate::fit::{fit_support, ModelFit};
use crate::hyper::HyperParams;
use crate::model::ModelIndex;
use crate::numeric::ln_binomial;

/// Log prior of a support, up to the additive constant shared by all
/// supports: `-log C(p,s) - s (log c + a log p)`.
pub fn log_model_prior(model: &ModelIndex, h: &HyperParams, p: usize) -> f64 {
    let s = model.size();
    -ln_binomial(p as u64, s as u64) - s as f64 * (h.c.ln() + h.a * (p as f64).ln())
}

/// Log of the unnormalized marginal support posterior, computed from a
/// cached fit:
/// `log π(S) + (s/2) log(γ/(α+γ)) - (a0 + α n/2) log(b0 + (α/2) rss)`.
///
/// Pure log-domain; `b0 > 0` keeps the last argument away from zero, so the
/// value is finite for any nonsingular support.
pub fn log_model_posterior_from_fit(fit: &ModelFit, h: &HyperParams, p: usize) -> f64 {
    let s = fit.size() as f64;
    let n = fit.n() as f64;
    log_model_prior(fit.model(), h, p)
        + 0.5 * s * (h.gamma / (h.alpha + h.gamma)).ln()
        - (h.a0 + 0.5 * h.alpha * n) * (h.b0 + 0.5 * h.alpha * fit.rss()).ln()
}

/// Log of the unnormalized marginal support posterior; fits the support
/// first and propagates singular-Gram failures.
pub fn log_model_posterior_unnorm(
    data: &Dataset,
    model: &ModelIndex,
    h: &HyperParams,
) -> Result<f64> {
    let fit = fit_support(data, model)?;
    Ok(log_model_posterior_from_fit(&fit, h, data.p()))
}
