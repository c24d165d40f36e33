//! Per-support least-squares fits and the closed-form conditional laws of
//! the coefficients and the error variance.

use crate::chol::CholFactor;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::hyper::HyperParams;
use crate::model::ModelIndex;
use crate::numeric::ln_gamma;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

/// Cached least-squares quantities for one support: the coefficient
/// estimate, the residual sum of squares and the Gram factorization.
#[derive(Debug, Clone)]
pub struct ModelFit {
    model: ModelIndex,
    n: usize,
    beta_hat: DVector<f64>,
    rss: f64,
    gram_factor: CholFactor,
}

impl ModelFit {
    pub fn model(&self) -> &ModelIndex {
        &self.model
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn size(&self) -> usize {
        self.model.size()
    }

    pub fn beta_hat(&self) -> &DVector<f64> {
        &self.beta_hat
    }

    /// Residual sum of squares `‖y - X_S β̂_S‖²`; `‖y‖²` for the empty
    /// support.
    pub fn rss(&self) -> f64 {
        self.rss
    }

    pub fn gram_factor(&self) -> &CholFactor {
        &self.gram_factor
    }

    /// `log |X_Sᵀ X_S|`; zero for the empty support.
    pub fn log_det_gram(&self) -> f64 {
        self.gram_factor.log_det_gram()
    }

}

/// Least-squares fit of `y` on the columns in `S`.
///
/// The Gram matrix is factorized at a strict relative pivot tolerance;
/// singular supports are reported, never repaired.
pub fn fit_support(data: &Dataset, model: &ModelIndex) -> Result<ModelFit> {
    model.validate_for(data.p(), data.p())?;
    let n = data.n();
    let s = model.size();
    if s == 0 {
        return Ok(ModelFit {
            model: model.clone(),
            n,
            beta_hat: DVector::zeros(0),
            rss: data.y().norm_squared(),
            gram_factor: CholFactor::empty(),
        });
    }
    if s > n {
        return Err(Error::InvalidConfig(format!(
            "support size {s} exceeds sample size {n}"
        )));
    }
    let idx = model.indices();
    let mut gram = DMatrix::<f64>::zeros(s, s);
    let mut xty = DVector::<f64>::zeros(s);
    for i in 0..s {
        let ci = data.column(idx[i]);
        xty[i] = ci.dot(data.y());
        for j in 0..=i {
            let v = ci.dot(&data.column(idx[j]));
            gram[(i, j)] = v;
            gram[(j, i)] = v;
        }
    }
    let gram_factor = CholFactor::from_gram(&gram).map_err(|_| Error::SingularGram {
        support: model.clone(),
    })?;
    let beta_hat = gram_factor.solve(&xty);
    let mut resid = data.y().clone();
    for i in 0..s {
        resid.axpy(-beta_hat[i], &data.column(idx[i]), 1.0);
    }
    let rss = resid.norm_squared();
    Ok(ModelFit {
        model: model.clone(),
        n,
        beta_hat,
        rss,
        gram_factor,
    })
}

/// Inverse-gamma parameters of the error-variance posterior given `S`:
/// shape `a0 + α n / 2`, scale `b0 + (α/2) rss`.
pub fn sigma2_posterior_params(rss: f64, n: usize, h: &HyperParams) -> (f64, f64) {
    (
        h.a0 + 0.5 * h.alpha * n as f64,
        h.b0 + 0.5 * h.alpha * rss,
    )
}

pub(crate) fn sample_inverse_gamma<R: Rng + ?Sized>(shape: f64, scale: f64, rng: &mut R) -> f64 {
    // If Y ~ Gamma(shape, rate = scale) then 1/Y ~ IG(shape, scale).
    let g = Gamma::new(shape, 1.0 / scale).expect("valid gamma parameters");
    1.0 / g.sample(rng)
}

/// Draws the error variance from its conditional posterior given `S`.
pub fn sample_sigma2_given_s<R: Rng + ?Sized>(fit: &ModelFit, h: &HyperParams, rng: &mut R) -> f64 {
    let (shape, scale) = sigma2_posterior_params(fit.rss(), fit.n(), h);
    sample_inverse_gamma(shape, scale, rng)
}

pub(crate) fn sample_beta_from_factor<R: Rng + ?Sized>(
    factor: &CholFactor,
    beta_hat: &DVector<f64>,
    sigma2: f64,
    h: &HyperParams,
    rng: &mut R,
) -> DVector<f64> {
    let s = factor.dim();
    let z = DVector::<f64>::from_fn(s, |_, _| rng.sample(StandardNormal));
    // Cov = σ²/(α+γ) G⁻¹ = (σ²/(α+γ)) L⁻ᵀ L⁻¹
    let scale = (sigma2 / (h.alpha + h.gamma)).sqrt();
    beta_hat + factor.back_solve(&z) * scale
}

/// Draws the active coefficients from their Gaussian conditional posterior
/// given `S` and the error variance: mean `β̂_S`, covariance
/// `σ²/(α+γ) (X_Sᵀ X_S)⁻¹`.
pub fn sample_beta_given_s_sigma2<R: Rng + ?Sized>(
    fit: &ModelFit,
    sigma2: f64,
    h: &HyperParams,
    rng: &mut R,
) -> DVector<f64> {
    assert!(sigma2 > 0.0, "sigma2 must be positive");
    sample_beta_from_factor(&fit.gram_factor, &fit.beta_hat, sigma2, h, rng)
}

/// The conditional law of the active coefficients given the support, with
/// the error variance either integrated out (multivariate t) or held fixed
/// (Gaussian).
///
/// In both cases the covariance-like scale matrix is
/// `scale_factor * [(α+γ) X_Sᵀ X_S]⁻¹`: the t case uses
/// `scale_factor = (2 b0 + α rss) / (2 a0 + α n)` with `df = 2 a0 + α n`,
/// the Gaussian case `scale_factor = σ²`.
#[derive(Debug, Clone)]
pub struct ConditionalBetaLaw {
    pub location: DVector<f64>,
    pub scale_factor: f64,
    pub df: f64,
    gaussian: bool,
    scaled_gram_factor: CholFactor,
}

impl ConditionalBetaLaw {
    /// The marginal (σ² integrated out) multivariate-t law of `β_S`.
    pub fn marginal_t(fit: &ModelFit, h: &HyperParams) -> Self {
        let df = 2.0 * h.a0 + h.alpha * fit.n() as f64;
        let scale_factor = (2.0 * h.b0 + h.alpha * fit.rss()) / df;
        ConditionalBetaLaw {
            location: fit.beta_hat().clone(),
            scale_factor,
            df,
            gaussian: false,
            scaled_gram_factor: fit.gram_factor().scaled(h.alpha + h.gamma),
        }
    }

    /// The Gaussian law of `β_S` at fixed error variance.
    pub fn gaussian(fit: &ModelFit, sigma2: f64, h: &HyperParams) -> Self {
        assert!(sigma2 > 0.0);
        let df = 2.0 * h.a0 + h.alpha * fit.n() as f64;
        ConditionalBetaLaw {
            location: fit.beta_hat().clone(),
            scale_factor: sigma2,
            df,
            gaussian: true,
            scaled_gram_factor: fit.gram_factor().scaled(h.alpha + h.gamma),
        }
    }

    pub fn dim(&self) -> usize {
        self.location.len()
    }

    /// Dense scale matrix `scale_factor * [(α+γ) G]⁻¹` (small dimensions).
    pub fn scale_matrix(&self) -> DMatrix<f64> {
        let s = self.dim();
        let mut m = DMatrix::<f64>::zeros(s, s);
        for j in 0..s {
            let mut e = DVector::zeros(s);
            e[j] = 1.0;
            let col = self.scaled_gram_factor.solve(&e);
            m.set_column(j, &(col * self.scale_factor));
        }
        // symmetrize away round-off
        let mt = m.transpose();
        (m + mt) * 0.5
    }

    /// Log density at `beta`. For the t case this is the normalized
    /// multivariate-t density; the Gaussian case is the fixed-variance
    /// conditional.
    pub fn log_density(&self, beta: &DVector<f64>) -> Result<f64> {
        let s = self.dim();
        if beta.len() != s {
            return Err(Error::DimensionMismatch(format!(
                "beta has length {}, support has size {s}",
                beta.len()
            )));
        }
        let diff = beta - &self.location;
        // quadratic form against the scaled Gram: dᵀ (α+γ)G d
        let q_gram = self.scaled_gram_factor.lt_mul(&diff).norm_squared();
        let log_det_scaled = self.scaled_gram_factor.log_det_gram();
        if self.gaussian {
            let q = q_gram / self.scale_factor;
            Ok(
                -0.5 * (s as f64) * (2.0 * std::f64::consts::PI * self.scale_factor).ln()
                    + 0.5 * log_det_scaled
                    - 0.5 * q,
            )
        } else {
            let nu = self.df;
            let q = q_gram / self.scale_factor;
            // log |M| where M = scale_factor * [(α+γ)G]⁻¹
            let log_det_m = (s as f64) * self.scale_factor.ln() - log_det_scaled;
            Ok(ln_gamma(0.5 * (nu + s as f64))
                - ln_gamma(0.5 * nu)
                - 0.5 * (s as f64) * (nu * std::f64::consts::PI).ln()
                - 0.5 * log_det_m
                - 0.5 * (nu + s as f64) * (q / nu).ln_1p())
        }
    }
}

/// Log density of the marginal multivariate-t law of `β_S` given `S`
/// (error variance integrated out).
pub fn log_density_beta_given_s(
    fit: &ModelFit,
    beta: &DVector<f64>,
    h: &HyperParams,
) -> Result<f64> {
    ConditionalBetaLaw::marginal_t(fit, h).log_density(beta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::adaptive_simpson;
    use crate::rng::stream_rng;
    use approx::assert_relative_eq;

    fn hyper() -> HyperParams {
        HyperParams {
            alpha: 0.9,
            gamma: 0.1,
            a0: 1.0,
            b0: 1.0,
            c: 1.0,
            a: 1.0,
            r: 6,
        }
    }

    fn toy_data(n: usize, p: usize, seed: u64) -> Dataset {
        let mut rng = stream_rng(seed, 0);
        let x = DMatrix::<f64>::from_fn(n, p, |_, _| rng.random::<f64>() * 2.0 - 1.0);
        let y = DVector::<f64>::from_fn(n, |_, _| rng.random::<f64>() * 2.0 - 1.0);
        Dataset::new(y, x).unwrap()
    }

    #[test]
    fn empty_support_fit() {
        let d = toy_data(10, 3, 1);
        let fit = fit_support(&d, &ModelIndex::empty()).unwrap();
        assert_eq!(fit.size(), 0);
        assert_eq!(fit.beta_hat().len(), 0);
        assert_relative_eq!(fit.rss(), d.y().norm_squared(), max_relative = 1e-14);
        assert_eq!(fit.log_det_gram(), 0.0);
    }

    #[test]
    fn orthonormal_columns_fit() {
        // X = I columns are orthonormal
        let n = 5;
        let x = DMatrix::<f64>::identity(n, 3);
        let y = DVector::from_vec(vec![1.0, -2.0, 0.5, 4.0, 3.0]);
        let d = Dataset::new(y.clone(), x.clone()).unwrap();
        let s = ModelIndex::new(vec![0, 2]).unwrap();
        let fit = fit_support(&d, &s).unwrap();
        // β̂ = X_Sᵀ y, rss = ‖y‖² − ‖X_Sᵀ y‖²
        let xs_ty = DVector::from_vec(vec![y[0], y[2]]);
        assert_relative_eq!(fit.beta_hat()[0], xs_ty[0], max_relative = 1e-12);
        assert_relative_eq!(fit.beta_hat()[1], xs_ty[1], max_relative = 1e-12);
        assert_relative_eq!(
            fit.rss(),
            y.norm_squared() - xs_ty.norm_squared(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn random_system_matches_normal_equations_oracle() {
        let d = toy_data(6, 3, 7);
        let s = ModelIndex::new(vec![0, 1, 2]).unwrap();
        let fit = fit_support(&d, &s).unwrap();
        // oracle: direct dense solve of X_Sᵀ X_S β = X_Sᵀ y via LU
        let xs = d.x().clone();
        let gram = xs.transpose() * &xs;
        let xty = xs.transpose() * d.y();
        let oracle = gram.clone().lu().solve(&xty).unwrap();
        for i in 0..3 {
            assert_relative_eq!(fit.beta_hat()[i], oracle[i], max_relative = 1e-10);
        }
        // the cached factor reproduces the Gram matrix
        let rel = (fit.gram_factor().gram() - &gram).norm() / gram.norm();
        assert!(rel < 1e-10);
    }

    #[test]
    fn duplicate_columns_are_singular() {
        let mut x = DMatrix::<f64>::zeros(4, 2);
        for i in 0..4 {
            x[(i, 0)] = i as f64 + 1.0;
            x[(i, 1)] = i as f64 + 1.0;
        }
        let d = Dataset::new(DVector::from_vec(vec![1.0; 4]), x).unwrap();
        let s = ModelIndex::new(vec![0, 1]).unwrap();
        match fit_support(&d, &s) {
            Err(Error::SingularGram { support }) => assert_eq!(support, s),
            other => panic!("expected SingularGram, got {other:?}"),
        }
    }

    #[test]
    fn sigma2_draws_match_inverse_gamma_mean() {
        let d = toy_data(30, 4, 11);
        let s = ModelIndex::new(vec![0, 3]).unwrap();
        let h = hyper();
        let fit = fit_support(&d, &s).unwrap();
        let (shape, scale) = sigma2_posterior_params(fit.rss(), fit.n(), &h);
        let mut rng = stream_rng(5, 0);
        let n_mc = 100_000;
        let draws: Vec<f64> = (0..n_mc)
            .map(|_| sample_sigma2_given_s(&fit, &h, &mut rng))
            .collect();
        assert!(draws.iter().all(|&v| v > 0.0));
        let mean = crate::numeric::mean(&draws);
        let exact_mean = scale / (shape - 1.0);
        // var of IG = scale²/((shape-1)²(shape-2)); 3 standard errors
        let var = scale * scale / ((shape - 1.0).powi(2) * (shape - 2.0));
        let se = (var / n_mc as f64).sqrt();
        assert!(
            (mean - exact_mean).abs() < 3.0 * se,
            "mean {mean} vs exact {exact_mean} (se {se})"
        );
    }

    #[test]
    fn beta_draws_collapse_to_beta_hat_at_tiny_sigma2() {
        let d = toy_data(12, 3, 13);
        let s = ModelIndex::new(vec![0, 1, 2]).unwrap();
        let h = hyper();
        let fit = fit_support(&d, &s).unwrap();
        let mut rng = stream_rng(6, 0);
        for _ in 0..100 {
            let b = sample_beta_given_s_sigma2(&fit, 1e-12, &h, &mut rng);
            let dev = (&b - fit.beta_hat()).amax();
            assert!(dev < 1e-5, "deviation {dev}");
        }
    }

    #[test]
    fn beta_draw_covariance_matches_inverse_gram() {
        let d = toy_data(20, 2, 17);
        let s = ModelIndex::new(vec![0, 1]).unwrap();
        let h = hyper();
        let fit = fit_support(&d, &s).unwrap();
        let sigma2 = 0.7;
        let n_mc = 100_000usize;
        let mut rng = stream_rng(8, 0);
        let mut sum = DVector::<f64>::zeros(2);
        let mut sum_sq = DMatrix::<f64>::zeros(2, 2);
        for _ in 0..n_mc {
            let b = sample_beta_given_s_sigma2(&fit, sigma2, &h, &mut rng);
            let c = &b - fit.beta_hat();
            sum += &c;
            sum_sq += &c * c.transpose();
        }
        let mean = sum / n_mc as f64;
        let cov = sum_sq / n_mc as f64 - &mean * mean.transpose();
        // oracle: direct matrix inverse
        let gram = fit.gram_factor().gram();
        let target = gram.try_inverse().unwrap() * (sigma2 / (h.alpha + h.gamma));
        for i in 0..2 {
            for j in 0..2 {
                // se of a covariance entry is ~ sqrt((t_ii t_jj + t_ij²)/n)
                let se = ((target[(i, i)] * target[(j, j)] + target[(i, j)].powi(2))
                    / n_mc as f64)
                    .sqrt();
                assert!(
                    (cov[(i, j)] - target[(i, j)]).abs() < 3.0 * se,
                    "cov[{i},{j}] {} vs {} (se {se})",
                    cov[(i, j)],
                    target[(i, j)]
                );
            }
        }
    }

    #[test]
    fn orthonormal_unit_variance_case() {
        // orthonormal X_S, α+γ=1, σ²=1 → component variances ≈ 1
        let n = 50;
        let x = DMatrix::<f64>::identity(n, 2);
        let y = DVector::<f64>::from_fn(n, |i, _| (i as f64 * 0.37).sin());
        let d = Dataset::new(y, x).unwrap();
        let mut h = hyper();
        h.alpha = 0.6;
        h.gamma = 0.4;
        let fit = fit_support(&d, &ModelIndex::new(vec![0, 1]).unwrap()).unwrap();
        let mut rng = stream_rng(21, 0);
        let n_mc = 50_000;
        let mut m2 = [0.0f64; 2];
        for _ in 0..n_mc {
            let b = sample_beta_given_s_sigma2(&fit, 1.0, &h, &mut rng);
            let c = &b - fit.beta_hat();
            m2[0] += c[0] * c[0];
            m2[1] += c[1] * c[1];
        }
        for v in m2 {
            let var = v / n_mc as f64;
            // var of sample variance ≈ 2/n, 3 se
            assert!((var - 1.0).abs() < 3.0 * (2.0 / n_mc as f64).sqrt(), "var {var}");
        }
    }

    #[test]
    fn t_density_normalizes_in_one_dimension() {
        let d = toy_data(15, 2, 19);
        let s = ModelIndex::new(vec![1]).unwrap();
        let h = hyper();
        let fit = fit_support(&d, &s).unwrap();
        let law = ConditionalBetaLaw::marginal_t(&fit, &h);
        let sd = law.scale_matrix()[(0, 0)].sqrt();
        let mu = law.location[0];
        let f = |b: f64| {
            law.log_density(&DVector::from_vec(vec![b])).unwrap().exp()
        };
        let total = adaptive_simpson(&f, mu - 60.0 * sd, mu + 60.0 * sd, 1e-10);
        assert!((total - 1.0).abs() < 1e-6, "integral {total}");
    }

    #[test]
    fn t_density_mode_matches_analytic_constant() {
        let d = toy_data(15, 2, 23);
        let s = ModelIndex::new(vec![0]).unwrap();
        let h = hyper();
        let fit = fit_support(&d, &s).unwrap();
        let law = ConditionalBetaLaw::marginal_t(&fit, &h);
        let nu = law.df;
        let m = law.scale_matrix()[(0, 0)];
        // analytic mode density of a scalar t with scale m
        let expect = ln_gamma(0.5 * (nu + 1.0))
            - ln_gamma(0.5 * nu)
            - 0.5 * (nu * std::f64::consts::PI * m).ln();
        let got = law.log_density(&law.location.clone()).unwrap();
        assert_relative_eq!(got, expect, max_relative = 1e-12);
    }

    #[test]
    fn conjugacy_consistency_via_sigma2_quadrature() {
        // Marginalizing the Gaussian conditional over the σ² posterior on a
        // grid reproduces the closed-form t density.
        let d = toy_data(25, 3, 29);
        let s = ModelIndex::new(vec![0, 2]).unwrap();
        let h = hyper();
        let fit = fit_support(&d, &s).unwrap();
        let t_law = ConditionalBetaLaw::marginal_t(&fit, &h);
        let (shape, scale) = sigma2_posterior_params(fit.rss(), fit.n(), &h);
        let ig_log_pdf = |v: f64| {
            shape * scale.ln() - ln_gamma(shape) - (shape + 1.0) * v.ln() - scale / v
        };
        let sd = t_law.scale_matrix()[(0, 0)].sqrt();
        let mut rng = stream_rng(31, 0);
        for k in 0..20 {
            let off = (k as f64 - 9.5) / 3.0;
            let probe = DVector::from_vec(vec![
                fit.beta_hat()[0] + off * sd,
                fit.beta_hat()[1] + off * sd * (0.3 + rng.random::<f64>() * 0.1),
            ]);
            // integrate over u = log σ²
            let center = scale / (shape + 1.0);
            let f = |u: f64| {
                let v = u.exp();
                let g = ConditionalBetaLaw::gaussian(&fit, v, &h);
                (g.log_density(&probe).unwrap() + ig_log_pdf(v) + u).exp()
            };
            let total = adaptive_simpson(&f, center.ln() - 14.0, center.ln() + 14.0, 1e-13);
            let got = total.ln();
            let expect = t_law.log_density(&probe).unwrap();
            assert!(
                (got - expect).abs() < 1e-6,
                "probe {k}: {got} vs {expect}"
            );
        }
    }

    #[test]
    fn scale_relation_between_t_and_gaussian_laws() {
        let d = toy_data(18, 3, 37);
        let s = ModelIndex::new(vec![0, 1]).unwrap();
        let h = hyper();
        let fit = fit_support(&d, &s).unwrap();
        let t_law = ConditionalBetaLaw::marginal_t(&fit, &h);
        let g_law = ConditionalBetaLaw::gaussian(&fit, t_law.scale_factor, &h);
        let diff = (t_law.scale_matrix() - g_law.scale_matrix()).norm();
        assert!(diff < 1e-14, "scale matrices differ by {diff}");
    }

    #[test]
    fn log_density_rejects_wrong_dimension() {
        let d = toy_data(10, 2, 41);
        let h = hyper();
        let fit = fit_support(&d, &ModelIndex::new(vec![0]).unwrap()).unwrap();
        let bad = DVector::from_vec(vec![0.0, 1.0]);
        assert!(matches!(
            log_density_beta_given_s(&fit, &bad, &h),
            Err(Error::DimensionMismatch(_))
        ));
    }
}
