//! Distributional checks: composed conditional samplers must reproduce
//! the closed-form marginal laws they integrate to.

use esb_core::chol::CholFactor;
use esb_core::fit::{fit_support, sample_beta_given_s_sigma2, sample_sigma2_given_s};
use esb_core::hyper::HyperParams;
use esb_core::model::ModelIndex;
use esb_core::predict::{predictive_given_s, predictive_mixture_sample};
use esb_core::rng::stream_rng;
use esb_core::search::{ModelPosteriorTable, PosteriorSource};
use esb_core::theory::ks_test;
use esb_core::{ConditionalBetaLaw, Dataset};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use statrs::distribution::{ContinuousCDF, StudentsT};
use std::collections::BTreeMap;

fn hyper() -> HyperParams {
    HyperParams {
        alpha: 0.9,
        gamma: 0.1,
        a0: 1.0,
        b0: 1.0,
        c: 1.0,
        a: 1.0,
        r: 4,
    }
}

fn toy_data(n: usize, p: usize, seed: u64, signal: &[(usize, f64)]) -> Dataset {
    let mut rng = stream_rng(seed, 5);
    let x = DMatrix::<f64>::from_fn(n, p, |_, _| rng.sample::<f64, _>(rand_distr::StandardNormal));
    let mut y = DVector::<f64>::from_fn(n, |_, _| rng.sample::<f64, _>(rand_distr::StandardNormal));
    for &(j, b) in signal {
        y.axpy(b, &x.column(j).clone_owned(), 1.0);
    }
    Dataset::new(y, x).unwrap()
}

/// Location-scale t CDF.
fn t_cdf(x: f64, df: f64, loc: f64, scale: f64) -> f64 {
    StudentsT::new(0.0, 1.0, df).unwrap().cdf((x - loc) / scale)
}

#[test]
fn two_stage_composition_matches_marginal_t() {
    let d = toy_data(40, 3, 101, &[(1, 1.2)]);
    let h = hyper();
    let s = ModelIndex::new(vec![1]).unwrap();
    let fit = fit_support(&d, &s).unwrap();
    let law = ConditionalBetaLaw::marginal_t(&fit, &h);
    let sd = law.scale_matrix()[(0, 0)].sqrt();
    let loc = law.location[0];

    let mut rng = stream_rng(7, 0);
    let draws: Vec<f64> = (0..30_000)
        .map(|_| {
            let sigma2 = sample_sigma2_given_s(&fit, &h, &mut rng);
            sample_beta_given_s_sigma2(&fit, sigma2, &h, &mut rng)[0]
        })
        .collect();
    let ks = ks_test(&draws, |x| t_cdf(x, law.df, loc, sd)).unwrap();
    assert!(ks.p_value > 0.001, "KS p = {} (D = {})", ks.p_value, ks.statistic);
}

#[test]
fn three_stage_composition_matches_predictive_t() {
    // σ² from its conditional, β from its Gaussian conditional, then
    // ỹ ~ N(x̃_S β_S, σ²): the resulting law must be the predictive t.
    let d = toy_data(35, 4, 103, &[(0, 1.5), (2, -1.0)]);
    let h = hyper();
    let s = ModelIndex::new(vec![0, 2]).unwrap();
    let fit = fit_support(&d, &s).unwrap();
    let xtilde = DMatrix::<f64>::from_row_slice(1, 4, &[0.8, -0.3, 1.4, 0.2]);
    let spec = predictive_given_s(&d, &s, &h, &xtilde).unwrap();
    let sd = spec.scale[(0, 0)].sqrt();

    let xt_s = DVector::from_vec(vec![xtilde[(0, 0)], xtilde[(0, 2)]]);
    let mut rng = stream_rng(11, 0);
    let draws: Vec<f64> = (0..30_000)
        .map(|_| {
            let sigma2 = sample_sigma2_given_s(&fit, &h, &mut rng);
            let beta = sample_beta_given_s_sigma2(&fit, sigma2, &h, &mut rng);
            let mean = xt_s.dot(&beta);
            let z: f64 = rng.sample(rand_distr::StandardNormal);
            mean + sigma2.sqrt() * z
        })
        .collect();
    let ks = ks_test(&draws, |x| t_cdf(x, spec.df, spec.location[0], sd)).unwrap();
    assert!(ks.p_value > 0.001, "KS p = {} (D = {})", ks.p_value, ks.statistic);
}

#[test]
fn degenerate_mixture_draws_follow_the_single_conditional() {
    let d = toy_data(30, 3, 107, &[(2, 2.0)]);
    let h = hyper();
    let model = ModelIndex::new(vec![2]).unwrap();
    let mut entries = BTreeMap::new();
    entries.insert(model.clone(), 1.0);
    let table = ModelPosteriorTable {
        p: 3,
        entries,
        log_normalizer: 0.0,
        singular: vec![],
    };
    let xtilde = DMatrix::<f64>::from_row_slice(1, 3, &[0.5, 1.0, -0.7]);
    let spec = predictive_given_s(&d, &model, &h, &xtilde).unwrap();

    let mut rng = stream_rng(13, 0);
    let draws = predictive_mixture_sample(
        &PosteriorSource::Table(&table),
        &d,
        &h,
        &xtilde,
        30_000,
        &mut rng,
    )
    .unwrap();
    let col: Vec<f64> = draws.column(0).iter().cloned().collect();
    let sd = spec.scale[(0, 0)].sqrt();
    let ks = ks_test(&col, |x| t_cdf(x, spec.df, spec.location[0], sd)).unwrap();
    assert!(ks.p_value > 0.001, "KS p = {} (D = {})", ks.p_value, ks.statistic);
}

#[test]
fn mixture_density_matches_weighted_t_components_on_a_slice() {
    // enumeration source: the empirical CDF of 1-D predictive draws must
    // match the probability-weighted mixture of conditional t CDFs
    let d = toy_data(30, 3, 109, &[(0, 1.0)]);
    let mut h = hyper();
    h.r = 2;
    let table = esb_core::enumerate_posterior(&d, &h).unwrap();
    let xtilde = DMatrix::<f64>::from_row_slice(1, 3, &[1.0, 0.4, -0.2]);

    let mut components: Vec<(f64, f64, f64, f64)> = Vec::new(); // (prob, df, loc, sd)
    for (model, &prob) in &table.entries {
        let spec = predictive_given_s(&d, model, &h, &xtilde).unwrap();
        components.push((prob, spec.df, spec.location[0], spec.scale[(0, 0)].sqrt()));
    }
    let mixture_cdf = |x: f64| -> f64 {
        components
            .iter()
            .map(|&(w, df, loc, sd)| w * t_cdf(x, df, loc, sd))
            .sum()
    };

    let mut rng = stream_rng(17, 0);
    let draws = predictive_mixture_sample(
        &PosteriorSource::Table(&table),
        &d,
        &h,
        &xtilde,
        30_000,
        &mut rng,
    )
    .unwrap();
    let col: Vec<f64> = draws.column(0).iter().cloned().collect();
    let ks = ks_test(&col, mixture_cdf).unwrap();
    assert!(ks.p_value > 0.001, "KS p = {} (D = {})", ks.p_value, ks.statistic);
}

#[test]
fn beta_sampler_respects_the_cached_factorization() {
    // the factor used for sampling reproduces the Gram matrix exactly
    let d = toy_data(25, 5, 113, &[]);
    let s = ModelIndex::new(vec![0, 3, 4]).unwrap();
    let fit = fit_support(&d, &s).unwrap();
    let idx = s.indices();
    let gram = DMatrix::<f64>::from_fn(3, 3, |i, j| d.column(idx[i]).dot(&d.column(idx[j])));
    let rebuilt = CholFactor::from_gram(&gram).unwrap();
    let rel = (fit.gram_factor().gram() - rebuilt.gram()).norm() / gram.norm();
    assert!(rel < 1e-12);
}
