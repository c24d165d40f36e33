//! Prediction at new design points: the conditional multivariate-t
//! predictive law per support, its mixture over the support posterior, and
//! empirical credible intervals for linear functionals.

use crate::chol::CholFactor;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::fit::fit_support;
use crate::hyper::HyperParams;
use crate::model::ModelIndex;
use crate::numeric::quantile_type7;
use crate::search::{PosteriorSamples, PosteriorSource};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use std::collections::BTreeMap;

/// Parameters of one conditional predictive law: a `d`-dimensional t
/// distribution with `df` degrees of freedom.
#[derive(Debug, Clone)]
pub struct PredictiveSpec {
    pub df: f64,
    pub location: DVector<f64>,
    pub scale: DMatrix<f64>,
}

impl PredictiveSpec {
    pub fn dim(&self) -> usize {
        self.location.len()
    }

    /// One draw: `location + L z sqrt(df / w)` with `w ~ χ²_df` and the
    /// scale factored as `L Lᵀ`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<f64> {
        let factor = CholFactor::from_gram(&self.scale)
            .expect("predictive scale matrix is positive-definite");
        self.sample_with_factor(&factor, rng)
    }

    fn sample_with_factor<R: Rng + ?Sized>(
        &self,
        factor: &CholFactor,
        rng: &mut R,
    ) -> DVector<f64> {
        let d = self.dim();
        let z = DVector::<f64>::from_fn(d, |_, _| rng.sample(StandardNormal));
        let w: f64 = ChiSquared::new(self.df).expect("df > 0").sample(rng);
        // L z has covariance L Lᵀ = scale
        &self.location + factor.l_mul(&z) * (self.df / w).sqrt()
    }
}

/// The conditional predictive law of `ỹ = X̃ β + noise` given a support:
/// t with `2a0 + αn` degrees of freedom, location `X̃_S β̂_S` and scale
/// `(b0 + (α/2) rss)/(a0 + αn/2) · (I_d + (α+γ)⁻¹ X̃_S (X_Sᵀ X_S)⁻¹ X̃_Sᵀ)`.
///
/// The inner Gram is the training Gram `X_Sᵀ X_S`, which is what the
/// composition of the conditional samplers implies; the goodness-of-fit
/// tests below pin that choice.
pub fn predictive_given_s(
    data: &Dataset,
    model: &ModelIndex,
    h: &HyperParams,
    xtilde: &DMatrix<f64>,
) -> Result<PredictiveSpec> {
    if xtilde.ncols() != data.p() {
        return Err(Error::DimensionMismatch(format!(
            "xtilde has {} columns, design has p={}",
            xtilde.ncols(),
            data.p()
        )));
    }
    let fit = fit_support(data, model)?;
    let d = xtilde.nrows();
    let s = model.size();
    let n = data.n() as f64;
    let df = 2.0 * h.a0 + h.alpha * n;
    let q = (h.b0 + 0.5 * h.alpha * fit.rss()) / (h.a0 + 0.5 * h.alpha * n);

    let mut location = DVector::<f64>::zeros(d);
    let mut scale = DMatrix::<f64>::identity(d, d) * q;
    if s > 0 {
        // rows of X̃ restricted to the support
        let xt_s = DMatrix::<f64>::from_fn(d, s, |i, j| xtilde[(i, model.indices()[j])]);
        location = &xt_s * fit.beta_hat();
        // projector term X̃_S G⁻¹ X̃_Sᵀ via factor solves
        let mut solved = DMatrix::<f64>::zeros(s, d);
        for r in 0..d {
            let row = DVector::from_fn(s, |j, _| xt_s[(r, j)]);
            solved.set_column(r, &fit.gram_factor().solve(&row));
        }
        let proj = &xt_s * solved;
        let sym = (&proj + proj.transpose()) * 0.5;
        scale += sym * (q / (h.alpha + h.gamma));
    }
    Ok(PredictiveSpec {
        df,
        location,
        scale,
    })
}

/// Draws from the posterior predictive mixture. Table sources select the
/// support by its exact probability; sample sources walk the draws in
/// sequence so the chain's empirical measure is preserved.
pub fn predictive_mixture_sample<R: Rng + ?Sized>(
    src: &PosteriorSource,
    data: &Dataset,
    h: &HyperParams,
    xtilde: &DMatrix<f64>,
    n_draws: usize,
    rng: &mut R,
) -> Result<DMatrix<f64>> {
    if src.is_empty() {
        return Err(Error::EmptySource);
    }
    let d = xtilde.nrows();
    let mut out = DMatrix::<f64>::zeros(n_draws, d);
    let mut specs: BTreeMap<ModelIndex, (PredictiveSpec, CholFactor)> = BTreeMap::new();
    let mut spec_for = |model: &ModelIndex| -> Result<(PredictiveSpec, CholFactor)> {
        if let Some(v) = specs.get(model) {
            return Ok(v.clone());
        }
        let spec = predictive_given_s(data, model, h, xtilde)?;
        let factor = CholFactor::from_gram(&spec.scale).map_err(|_| Error::SingularGram {
            support: model.clone(),
        })?;
        specs.insert(model.clone(), (spec.clone(), factor.clone()));
        Ok((spec, factor))
    };
    match src {
        PosteriorSource::Table(table) => {
            let cumulative: Vec<(f64, &ModelIndex)> = {
                let mut acc = 0.0;
                table
                    .entries
                    .iter()
                    .map(|(m, &pr)| {
                        acc += pr;
                        (acc, m)
                    })
                    .collect()
            };
            for i in 0..n_draws {
                let u: f64 = rng.random();
                let model = cumulative
                    .iter()
                    .find(|(c, _)| u <= *c)
                    .map(|(_, m)| (*m).clone())
                    .unwrap_or_else(|| cumulative.last().unwrap().1.clone());
                let (spec, factor) = spec_for(&model)?;
                out.set_row(i, &spec.sample_with_factor(&factor, rng).transpose());
            }
        }
        PosteriorSource::Samples(samples) => {
            for i in 0..n_draws {
                let model = &samples.models[i % samples.len()];
                let (spec, factor) = spec_for(model)?;
                out.set_row(i, &spec.sample_with_factor(&factor, rng).transpose());
            }
        }
    }
    Ok(out)
}

/// Exact mean of the predictive mixture for a table source:
/// `Σ_S π(S) X̃_S β̂_S`.
pub fn mixture_mean_exact(
    table: &crate::search::ModelPosteriorTable,
    data: &Dataset,
    h: &HyperParams,
    xtilde: &DMatrix<f64>,
) -> Result<DVector<f64>> {
    let mut mean = DVector::<f64>::zeros(xtilde.nrows());
    for (model, &pr) in &table.entries {
        let spec = predictive_given_s(data, model, h, xtilde)?;
        mean += spec.location * pr;
    }
    Ok(mean)
}

/// Two-sided empirical credible interval plus the one-sided upper quantile.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CredibleInterval {
    pub level: f64,
    pub lower: f64,
    pub upper: f64,
    /// The `(1-γ)` empirical quantile with `γ = 1 - level`.
    pub one_sided_upper: f64,
}

impl CredibleInterval {
    pub fn contains(&self, v: f64) -> bool {
        self.lower <= v && v <= self.upper
    }
}

/// Type-7 empirical interval from raw functional draws.
pub fn credible_interval_from_draws(draws: &[f64], level: f64) -> Result<CredibleInterval> {
    if draws.is_empty() {
        return Err(Error::EmptySource);
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "interval level must lie in (0,1), got {level}"
        )));
    }
    let mut xs = draws.to_vec();
    xs.sort_by(|a, b| a.partial_cmp(b).expect("no NaN draws"));
    let gamma = 1.0 - level;
    Ok(CredibleInterval {
        level,
        lower: quantile_type7(&xs, 0.5 * gamma),
        upper: quantile_type7(&xs, 1.0 - 0.5 * gamma),
        one_sided_upper: quantile_type7(&xs, level),
    })
}

/// Empirical credible interval for the linear functional `xᵀβ` under the
/// sampled posterior. Quantiles are empirical: the posterior of `xᵀβ` mixes
/// a point mass at zero with continuous components, so no closed form
/// exists.
pub fn linear_functional_interval(
    src: &PosteriorSamples,
    x: &[f64],
    level: f64,
) -> Result<CredibleInterval> {
    if src.is_empty() {
        return Err(Error::EmptySource);
    }
    let vals = src.functional_draws(x)?;
    credible_interval_from_draws(&vals, level)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hyper::HyperParams;
    use crate::rng::stream_rng;
    use crate::search::enumerate_posterior;
    use approx::assert_relative_eq;

    fn hyper(r: usize) -> HyperParams {
        HyperParams {
            alpha: 0.9,
            gamma: 0.1,
            a0: 1.0,
            b0: 1.0,
            c: 1.0,
            a: 1.0,
            r,
        }
    }

    fn toy_data(n: usize, p: usize, seed: u64, signal: &[(usize, f64)]) -> Dataset {
        let mut rng = stream_rng(seed, 2);
        let x = DMatrix::<f64>::from_fn(n, p, |_, _| {
            rng.sample::<f64, _>(rand_distr::StandardNormal)
        });
        let mut y = DVector::<f64>::from_fn(n, |_, _| {
            rng.sample::<f64, _>(rand_distr::StandardNormal)
        });
        for &(j, b) in signal {
            y.axpy(b, &x.column(j).clone_owned(), 1.0);
        }
        Dataset::new(y, x).unwrap()
    }

    #[test]
    fn zero_xtilde_gives_diagonal_scale() {
        let d = toy_data(20, 3, 1, &[(0, 1.0)]);
        let h = hyper(2);
        let s = ModelIndex::new(vec![0]).unwrap();
        let xt = DMatrix::<f64>::zeros(2, 3);
        let spec = predictive_given_s(&d, &s, &h, &xt).unwrap();
        let fit = fit_support(&d, &s).unwrap();
        let q = (h.b0 + 0.5 * h.alpha * fit.rss()) / (h.a0 + 0.5 * h.alpha * 20.0);
        assert_eq!(spec.location, DVector::zeros(2));
        assert_relative_eq!(spec.scale[(0, 0)], q, max_relative = 1e-14);
        assert_relative_eq!(spec.scale[(1, 1)], q, max_relative = 1e-14);
        assert_eq!(spec.scale[(0, 1)], 0.0);
    }

    #[test]
    fn empty_support_predictive_is_pure_noise_scale() {
        let d = toy_data(15, 2, 3, &[]);
        let h = hyper(2);
        let xt = DMatrix::<f64>::from_row_slice(1, 2, &[0.7, -0.4]);
        let spec = predictive_given_s(&d, &ModelIndex::empty(), &h, &xt).unwrap();
        let q = (h.b0 + 0.5 * h.alpha * d.y().norm_squared()) / (h.a0 + 0.5 * h.alpha * 15.0);
        assert_eq!(spec.location[0], 0.0);
        assert_relative_eq!(spec.scale[(0, 0)], q, max_relative = 1e-14);
        assert_relative_eq!(spec.df, 2.0 * h.a0 + h.alpha * 15.0, max_relative = 1e-15);
    }

    #[test]
    fn affine_equivariance_of_the_projector_term() {
        let d = toy_data(25, 4, 5, &[(1, 1.0)]);
        let h = hyper(3);
        let s = ModelIndex::new(vec![1, 2]).unwrap();
        let xt = DMatrix::<f64>::from_row_slice(2, 4, &[0.5, -1.0, 0.25, 2.0, 1.0, 0.0, -0.5, 0.3]);
        let k = 3.0;
        let spec1 = predictive_given_s(&d, &s, &h, &xt).unwrap();
        let spec2 = predictive_given_s(&d, &s, &h, &(&xt * k)).unwrap();
        // location scales by k
        assert_relative_eq!(spec2.location[0], k * spec1.location[0], max_relative = 1e-12);
        assert_relative_eq!(spec2.location[1], k * spec1.location[1], max_relative = 1e-12);
        // projector part of the scale matrix scales by k²
        let fit = fit_support(&d, &s).unwrap();
        let q = (h.b0 + 0.5 * h.alpha * fit.rss()) / (h.a0 + 0.5 * h.alpha * 25.0);
        let eye = DMatrix::<f64>::identity(2, 2) * q;
        let p1 = &spec1.scale - &eye;
        let p2 = &spec2.scale - &eye;
        let diff = (&p2 - &p1 * (k * k)).norm();
        assert!(diff < 1e-10, "projector term not k²-equivariant: {diff}");
    }

    #[test]
    fn mixture_mean_matches_exact_average() {
        let d = toy_data(30, 4, 7, &[(0, 1.5)]);
        let h = hyper(2);
        let table = enumerate_posterior(&d, &h).unwrap();
        let xt = DMatrix::<f64>::from_row_slice(1, 4, &[1.0, -0.5, 0.25, 0.75]);
        let exact = mixture_mean_exact(&table, &d, &h, &xt).unwrap();
        let mut rng = stream_rng(11, 0);
        let n_draws = 100_000;
        let draws =
            predictive_mixture_sample(&PosteriorSource::Table(&table), &d, &h, &xt, n_draws, &mut rng)
                .unwrap();
        let mean = draws.column(0).sum() / n_draws as f64;
        let sd = {
            let mut acc = 0.0;
            for i in 0..n_draws {
                acc += (draws[(i, 0)] - mean).powi(2);
            }
            (acc / (n_draws as f64 - 1.0)).sqrt()
        };
        let se = sd / (n_draws as f64).sqrt();
        assert!(
            (mean - exact[0]).abs() < 3.0 * se,
            "mixture mean {mean} vs exact {} (se {se})",
            exact[0]
        );
    }

    #[test]
    fn duplicate_columns_give_symmetric_predictive_marginals() {
        let mut rng = stream_rng(13, 0);
        let n = 25;
        let base = DVector::<f64>::from_fn(n, |_, _| {
            rng.sample::<f64, _>(rand_distr::StandardNormal)
        });
        let mut x = DMatrix::<f64>::zeros(n, 2);
        x.set_column(0, &base);
        x.set_column(1, &base);
        let y = DVector::<f64>::from_fn(n, |i, _| 1.2 * base[i]);
        let d = Dataset::new(y, x).unwrap();
        let h = hyper(1); // cap at 1 so the singular pair never enters
        let table = enumerate_posterior(&d, &h).unwrap();
        let m0 = ModelIndex::new(vec![0]).unwrap();
        let m1 = ModelIndex::new(vec![1]).unwrap();
        assert_relative_eq!(table.prob(&m0), table.prob(&m1), max_relative = 1e-10);
        // probe each coordinate separately: marginals must agree
        let xt = DMatrix::<f64>::identity(2, 2);
        let s0 = predictive_given_s(&d, &m0, &h, &xt).unwrap();
        let s1 = predictive_given_s(&d, &m1, &h, &xt).unwrap();
        assert_relative_eq!(s0.location[0], s1.location[1], max_relative = 1e-12);
        assert_relative_eq!(s0.scale[(0, 0)], s1.scale[(1, 1)], max_relative = 1e-12);
    }

    #[test]
    fn interval_of_constant_draws_is_a_point() {
        let draws = vec![2.5; 40];
        let ci = credible_interval_from_draws(&draws, 0.95).unwrap();
        assert_eq!(ci.lower, 2.5);
        assert_eq!(ci.upper, 2.5);
        assert_eq!(ci.one_sided_upper, 2.5);
    }

    #[test]
    fn interval_contains_the_median_for_coordinate_functionals() {
        let d = toy_data(30, 3, 17, &[(1, 1.2)]);
        let h = hyper(2);
        let cfg = crate::search::ChainConfig::new(4_000, 1_000, 5);
        let samples = crate::search::run_chain(&d, &h, &cfg).unwrap();
        let x = [0.0, 1.0, 0.0];
        let ci = linear_functional_interval(&samples, &x, 0.9).unwrap();
        let vals = samples.functional_draws(&x).unwrap();
        let mut sorted = vals.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = quantile_type7(&sorted, 0.5);
        assert!(ci.lower <= median && median <= ci.upper);
        assert!(ci.lower <= ci.upper);
    }

    #[test]
    fn one_sided_quantile_is_monotone_in_level() {
        let d = toy_data(30, 3, 19, &[(0, 1.0)]);
        let h = hyper(2);
        let cfg = crate::search::ChainConfig::new(3_000, 500, 7);
        let samples = crate::search::run_chain(&d, &h, &cfg).unwrap();
        let x = [1.0, 0.5, -0.5];
        let mut prev = f64::NEG_INFINITY;
        for level in [0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 0.99] {
            let ci = linear_functional_interval(&samples, &x, level).unwrap();
            assert!(
                ci.one_sided_upper >= prev,
                "one-sided quantile decreased at level {level}"
            );
            prev = ci.one_sided_upper;
        }
    }

    #[test]
    fn empty_source_is_an_error() {
        let empty = PosteriorSamples {
            p: 2,
            models: vec![],
            sigma2_draws: vec![],
            beta_draws: vec![],
            acceptance_rate: 0.0,
        };
        assert!(matches!(
            linear_functional_interval(&empty, &[1.0, 0.0], 0.95),
            Err(Error::EmptySource)
        ));
        let d = toy_data(10, 2, 23, &[]);
        let h = hyper(1);
        let xt = DMatrix::<f64>::zeros(1, 2);
        assert!(matches!(
            predictive_mixture_sample(
                &PosteriorSource::Samples(&empty),
                &d,
                &h,
                &xt,
                10,
                &mut stream_rng(1, 0)
            ),
            Err(Error::EmptySource)
        ));
    }
}
