//! Monte Carlo and brute-force verification of the quantitative
//! ingredients behind the procedure: chi-squared tail bounds, the
//! restricted eigenvalue of sparse designs, distance of the posterior to
//! its Gaussian limit, and posterior contraction metrics.

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::fit::fit_support;
use crate::hyper::HyperParams;
use crate::model::ModelIndex;
use crate::numeric::{adaptive_simpson, count_models, ln_gamma, quantile_type7};
use crate::search::{PosteriorSamples, PosteriorSource};
use itertools::Itertools;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

/// One chi-squared sample with `df` degrees of freedom.
pub fn sample_chi2<R: Rng + ?Sized>(df: usize, rng: &mut R) -> f64 {
    ChiSquared::new(df as f64).expect("df >= 1").sample(rng)
}

/// One noncentral chi-squared sample: `(Z + sqrt(λ))² + χ²_{df-1}`.
pub fn sample_noncentral_chi2<R: Rng + ?Sized>(df: usize, lambda: f64, rng: &mut R) -> f64 {
    assert!(df >= 1 && lambda >= 0.0);
    let z: f64 = rng.sample(StandardNormal);
    let head = (z + lambda.sqrt()).powi(2);
    if df == 1 {
        head
    } else {
        head + sample_chi2(df - 1, rng)
    }
}

/// Outcome of one empirical-versus-bound tail check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TailBoundReport {
    pub check: String,
    pub df: usize,
    pub noncentrality: f64,
    pub threshold: f64,
    pub empirical_prob: f64,
    pub bound_value: f64,
    pub mc_se: f64,
    pub n_mc: usize,
    /// `empirical <= bound + 3 mc_se`.
    pub passed: bool,
    /// A bound at or above 1 holds trivially.
    pub vacuous: bool,
}

fn finish_report(
    check: &str,
    df: usize,
    noncentrality: f64,
    threshold: f64,
    hits: usize,
    n_mc: usize,
    bound_value: f64,
) -> TailBoundReport {
    let q = hits as f64 / n_mc as f64;
    let mc_se = (q * (1.0 - q) / n_mc as f64).sqrt();
    TailBoundReport {
        check: check.to_string(),
        df,
        noncentrality,
        threshold,
        empirical_prob: q,
        bound_value,
        mc_se,
        n_mc,
        passed: q <= bound_value + 3.0 * mc_se,
        vacuous: bound_value >= 1.0,
    }
}

/// Central two-sided concentration: empirical `P(|χ²_p - p| > a)` against
/// the bound `2 exp(-a²/(4p))`.
pub fn check_central_tail<R: Rng + ?Sized>(
    p: usize,
    a: f64,
    n_mc: usize,
    rng: &mut R,
) -> TailBoundReport {
    assert!(p >= 1 && a > 0.0 && n_mc >= 10_000);
    let mut hits = 0usize;
    for _ in 0..n_mc {
        if (sample_chi2(p, rng) - p as f64).abs() > a {
            hits += 1;
        }
    }
    let bound = 2.0 * (-a * a / (4.0 * p as f64)).exp();
    finish_report("central_two_sided", p, 0.0, a, hits, n_mc, bound)
}

/// Rate-shape verification for the noncentral lower tail whose bound
/// carries an unpinned constant: over a noncentrality grid, the statistic
/// `log P̂(χ²_p(λ) <= ωλ) + λ(1-ω)²/8 + log λ` must stay bounded above by
/// a fitted constant. Operationally the statistic must peak strictly
/// inside the estimable grid and trend downward from the peak to the grid
/// edge (within Monte Carlo error); a rate slower than the bound claims
/// would keep the statistic rising. Certification needs the decaying
/// regime to be reachable, i.e. `ω` well below 1.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RateShapeReport {
    pub df: usize,
    pub omega: f64,
    pub lambda_grid: Vec<f64>,
    pub empirical_probs: Vec<f64>,
    /// Statistic values at grid points with enough hits to estimate.
    pub shape_statistics: Vec<f64>,
    pub fitted_constant: f64,
    /// Trend of the statistic over the last three estimable points.
    pub tail_slope: f64,
    pub tail_slope_se: f64,
    pub n_mc: usize,
    /// False when too little of the grid is estimable at this Monte Carlo
    /// budget to certify the shape (small `ω` gaps or large `p`).
    pub certifiable: bool,
    pub passed: bool,
}

/// All three noncentral tail reports at one parameter point. The upper and
/// lower tails carry absolute bounds; the `ω`-tail only admits the
/// fitted-constant shape check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NoncentralTailReports {
    pub upper_tail: TailBoundReport,
    pub lower_rate_shape: RateShapeReport,
    pub lower_tail: TailBoundReport,
}

/// Empirical checks of the noncentral chi-squared tail bounds at
/// `(p, λ, c, ω)`:
/// upper `P(χ²_p(λ) - (p+λ) > c) <= exp(-p/2 (t - log(1+t)))` with
/// `t = c/(p+λ)`; lower `P(χ²_p(λ) - p <= -c) <= exp(-c²/(4p))`; and the
/// `ω`-tail rate-shape check over a grid of noncentralities around `λ`.
pub fn check_noncentral_bounds<R: Rng + ?Sized>(
    p: usize,
    lambda: f64,
    c: f64,
    omega: f64,
    n_mc: usize,
    rng: &mut R,
) -> NoncentralTailReports {
    assert!(p >= 1 && lambda >= 0.0 && c > 0.0 && omega < 1.0 && n_mc >= 10_000);

    let t = c / (p as f64 + lambda);
    let upper_bound = (-0.5 * p as f64 * (t - t.ln_1p())).exp();
    let lower_bound = (-c * c / (4.0 * p as f64)).exp();
    let mut upper_hits = 0usize;
    let mut lower_hits = 0usize;
    for _ in 0..n_mc {
        let v = sample_noncentral_chi2(p, lambda, rng);
        if v - (p as f64 + lambda) > c {
            upper_hits += 1;
        }
        if v - p as f64 <= -c {
            lower_hits += 1;
        }
    }
    let upper_tail = finish_report(
        "noncentral_upper",
        p,
        lambda,
        c,
        upper_hits,
        n_mc,
        upper_bound,
    );
    let lower_tail = finish_report(
        "noncentral_lower",
        p,
        lambda,
        c,
        lower_hits,
        n_mc,
        lower_bound,
    );

    let lower_rate_shape = rate_shape_check(p, lambda, omega, n_mc, rng);
    NoncentralTailReports {
        upper_tail,
        lower_rate_shape,
        lower_tail,
    }
}

fn rate_shape_check<R: Rng + ?Sized>(
    p: usize,
    lambda: f64,
    omega: f64,
    n_mc: usize,
    rng: &mut R,
) -> RateShapeReport {
    if lambda <= 0.0 || omega <= 0.0 {
        // threshold ωλ <= 0: the event has probability zero
        return RateShapeReport {
            df: p,
            omega,
            lambda_grid: vec![lambda.max(0.0)],
            empirical_probs: vec![0.0],
            shape_statistics: vec![],
            fitted_constant: f64::NEG_INFINITY,
            tail_slope: 0.0,
            tail_slope_se: 0.0,
            n_mc,
            certifiable: true,
            passed: true,
        };
    }
    // The ω-tail event {χ²_p(λ) <= ωλ} only has estimable probability once
    // the noncentrality dominates the degrees of freedom, so the grid
    // starts no lower than 3p and stretches far enough to cross the
    // statistic's peak. Tail points need many draws.
    let n_mc = n_mc.max(1_000_000);
    let base = lambda.max(3.0 * p as f64);
    let grid: Vec<f64> = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0].iter().map(|m| m * base).collect();
    let mut probs = Vec::with_capacity(grid.len());
    let mut xs = Vec::new();
    let mut ts = Vec::new();
    let mut ses = Vec::new();
    for &lam in &grid {
        let mut hits = 0usize;
        for _ in 0..n_mc {
            if sample_noncentral_chi2(p, lam, rng) <= omega * lam {
                hits += 1;
            }
        }
        let q = hits as f64 / n_mc as f64;
        probs.push(q);
        if hits >= 10 {
            let stat = q.ln() + lam * (1.0 - omega).powi(2) / 8.0 + lam.ln();
            xs.push(lam);
            ts.push(stat);
            ses.push(((1.0 - q) / (n_mc as f64 * q)).sqrt());
        }
    }
    let fitted_constant = ts.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    // the statistic must not be rising at the estimable edge of the grid:
    // regress its last three points on λ
    let (tail_slope, tail_slope_se, certifiable) = if xs.len() >= 4 {
        let tail = xs.len() - 3..xs.len();
        let txs = &xs[tail.clone()];
        let tts = &ts[tail.clone()];
        let tses = &ses[tail.clone()];
        let xbar = txs.iter().sum::<f64>() / txs.len() as f64;
        let sxx: f64 = txs.iter().map(|x| (x - xbar).powi(2)).sum();
        let slope = txs
            .iter()
            .zip(tts)
            .map(|(x, t)| (x - xbar) * t)
            .sum::<f64>()
            / sxx;
        let se = txs
            .iter()
            .zip(tses)
            .map(|(x, se)| ((x - xbar) / sxx * se).powi(2))
            .sum::<f64>()
            .sqrt();
        (slope, se, true)
    } else {
        (f64::NAN, f64::NAN, false)
    };
    RateShapeReport {
        df: p,
        omega,
        lambda_grid: grid,
        empirical_probs: probs,
        shape_statistics: ts,
        fitted_constant,
        tail_slope,
        tail_slope_se,
        n_mc,
        certifiable,
        passed: certifiable && tail_slope <= 3.0 * tail_slope_se,
    }
}

/// Restricted eigenvalue at one support size.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KappaReport {
    pub s: usize,
    /// `min_{|S| = s} σ_min(X_S)`, the smallest gain of the design over
    /// `s`-sparse directions.
    pub kappa: f64,
    pub argmin_support: ModelIndex,
    pub exhaustive: bool,
}

fn smallest_singular_value(x: &DMatrix<f64>, support: &[usize]) -> f64 {
    let s = support.len();
    let xs = DMatrix::<f64>::from_fn(x.nrows(), s, |i, j| x[(i, support[j])]);
    let svd = xs.svd(false, false);
    svd.singular_values
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min)
}

/// Brute-force restricted eigenvalue: the minimum over all supports of
/// size `s` of the smallest singular value of `X_S` (equivalently the
/// infimum of `‖Xβ‖/‖β‖` over β with at most `s` nonzeros). Guarded by the
/// enumeration limit.
pub fn restricted_kappa(x: &DMatrix<f64>, s: usize) -> Result<KappaReport> {
    let p = x.ncols();
    assert!(s >= 1 && s <= p.min(x.nrows()));
    let count = count_models(p, s);
    if count > crate::search::ENUM_GUARD {
        return Err(Error::TooManySupports {
            count,
            limit: crate::search::ENUM_GUARD,
        });
    }
    let mut best = f64::INFINITY;
    let mut arg: Vec<usize> = Vec::new();
    for combo in (0..p).combinations(s) {
        let v = smallest_singular_value(x, &combo);
        if v < best {
            best = v;
            arg = combo;
        }
    }
    Ok(KappaReport {
        s,
        kappa: best.max(0.0),
        argmin_support: ModelIndex::new(arg).expect("combination is sorted"),
        exhaustive: true,
    })
}

/// Exhaustive restricted-eigenvalue series for `s = 1..=s_max`.
pub fn restricted_kappa_series(x: &DMatrix<f64>, s_max: usize) -> Result<Vec<KappaReport>> {
    (1..=s_max).map(|s| restricted_kappa(x, s)).collect()
}

/// Sampled lower-envelope estimate of the restricted eigenvalue for
/// designs too large to enumerate: random supports plus greedy single-swap
/// refinement. Upward biased (it is a minimum over a subset of supports),
/// and flagged `exhaustive: false`.
pub fn restricted_kappa_sampled<R: Rng + ?Sized>(
    x: &DMatrix<f64>,
    s: usize,
    n_probes: usize,
    rng: &mut R,
) -> KappaReport {
    let p = x.ncols();
    assert!(s >= 1 && s <= p.min(x.nrows()));
    let mut best = f64::INFINITY;
    let mut arg: Vec<usize> = Vec::new();
    for _ in 0..n_probes.max(1) {
        let support = crate::rng::sample_distinct_indices(p, s, rng);
        let v = smallest_singular_value(x, &support);
        if v < best {
            best = v;
            arg = support;
        }
    }
    // greedy refinement: limited random single swaps from the incumbent
    for _ in 0..(8 * s).min(64) {
        let mut cand = arg.clone();
        let pos = rng.random_range(0..s);
        loop {
            let j = rng.random_range(0..p);
            if !cand.contains(&j) {
                cand[pos] = j;
                break;
            }
        }
        let v = smallest_singular_value(x, &cand);
        if v < best {
            best = v;
            cand.sort_unstable();
            arg = cand;
        }
    }
    arg.sort_unstable();
    KappaReport {
        s,
        kappa: best.max(0.0),
        argmin_support: ModelIndex::new(arg).expect("sorted unique support"),
        exhaustive: false,
    }
}

/// One-sample Kolmogorov-Smirnov test statistic and asymptotic p-value.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct KsTest {
    pub statistic: f64,
    pub p_value: f64,
    pub n: usize,
}

/// Kolmogorov-Smirnov test of `samples` against the continuous CDF `cdf`.
pub fn ks_test<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> Result<KsTest> {
    if samples.is_empty() {
        return Err(Error::EmptySource);
    }
    let n = samples.len();
    let mut xs = samples.to_vec();
    xs.sort_by(|a, b| a.partial_cmp(b).expect("no NaN samples"));
    let mut d = 0f64;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max(((i + 1) as f64 / n as f64 - f).abs());
        d = d.max((f - i as f64 / n as f64).abs());
    }
    let sqrt_n = (n as f64).sqrt();
    let arg = (sqrt_n + 0.12 + 0.11 / sqrt_n) * d;
    Ok(KsTest {
        statistic: d,
        p_value: kolmogorov_sf(arg),
        n,
    })
}

/// Survival function of the Kolmogorov distribution,
/// `2 Σ_{k>=1} (-1)^{k-1} exp(-2 k² x²)`.
fn kolmogorov_sf(x: f64) -> f64 {
    if x < 0.04 {
        return 1.0;
    }
    let mut total = 0.0;
    for k in 1..=200u32 {
        let term = (-2.0 * (k as f64).powi(2) * x * x).exp();
        if term < 1e-16 {
            break;
        }
        total += if k % 2 == 1 { term } else { -term };
    }
    (2.0 * total).clamp(0.0, 1.0)
}

/// Distance of the posterior to its Gaussian limit at the true support.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BvmReport {
    pub n: usize,
    pub dim: usize,
    /// Posterior probability of the true support (exact or empirical).
    pub true_model_prob: f64,
    /// `(1 - π̂(S*)) + TV(conditional t, limit normal)`, clipped at 1.
    pub tv_upper: f64,
    /// Squared Hellinger distance (`1 - affinity`) between the conditional
    /// t law and the limit normal.
    pub hellinger_sq: f64,
    /// The radial total-variation term alone.
    pub tv_conditional: f64,
}

/// log surface area of the unit sphere in `s` dimensions.
fn ln_sphere_area(s: usize) -> f64 {
    std::f64::consts::LN_2 + 0.5 * s as f64 * std::f64::consts::PI.ln() - ln_gamma(0.5 * s as f64)
}

/// log radial profile of a spherical t with `nu` df and scalar scale `c`.
fn ln_radial_t(r: f64, s: usize, nu: f64, c: f64) -> f64 {
    ln_gamma(0.5 * (nu + s as f64))
        - ln_gamma(0.5 * nu)
        - 0.5 * s as f64 * (nu * std::f64::consts::PI * c).ln()
        - 0.5 * (nu + s as f64) * (r * r / (nu * c)).ln_1p()
}

/// log radial profile of a spherical normal with scalar variance `c`.
fn ln_radial_normal(r: f64, s: usize, c: f64) -> f64 {
    -0.5 * s as f64 * (2.0 * std::f64::consts::PI * c).ln() - 0.5 * r * r / c
}

/// Total variation and Hellinger affinity between a spherical t
/// (`nu`, scale `c_t`) and a spherical normal (variance `c_g`) sharing one
/// shape matrix: both reduce to 1-D radial integrals.
fn radial_distances(s: usize, nu: f64, c_t: f64, c_g: f64) -> (f64, f64) {
    let ln_area = ln_sphere_area(s);
    let sd = (c_t.max(c_g)).sqrt();
    let r_max = sd * ((s as f64).sqrt() + 14.0);
    let diff_abs = |r: f64| {
        let lt = ln_radial_t(r, s, nu, c_t);
        let ln = ln_radial_normal(r, s, c_g);
        let w = ln_area + (s as f64 - 1.0) * r.max(1e-300).ln();
        ((lt + w).exp() - (ln + w).exp()).abs()
    };
    let affinity = |r: f64| {
        let lt = ln_radial_t(r, s, nu, c_t);
        let ln = ln_radial_normal(r, s, c_g);
        let w = ln_area + (s as f64 - 1.0) * r.max(1e-300).ln();
        (0.5 * (lt + ln) + w).exp()
    };

    // locate density crossings so each segment is smooth for the quadrature
    let mut knots = vec![0.0];
    let scan = 512;
    let h = |r: f64| ln_radial_t(r, s, nu, c_t) - ln_radial_normal(r, s, c_g);
    let mut prev_r = 1e-12 * sd.max(1e-12);
    let mut prev_h = h(prev_r);
    for i in 1..=scan {
        let r = r_max * i as f64 / scan as f64;
        let cur = h(r);
        if prev_h.signum() != cur.signum() {
            let (mut lo, mut hi) = (prev_r, r);
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if h(mid).signum() == prev_h.signum() {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            knots.push(0.5 * (lo + hi));
        }
        prev_r = r;
        prev_h = cur;
    }
    knots.push(r_max);

    let mut tv = 0.0;
    for w in knots.windows(2) {
        tv += adaptive_simpson(&diff_abs, w[0], w[1], 1e-10);
    }
    // extend into the tail until the contribution is negligible
    let mut lo = r_max;
    for _ in 0..8 {
        let hi = lo * 1.7;
        let add = adaptive_simpson(&diff_abs, lo, hi, 1e-11);
        tv += add;
        lo = hi;
        if add.abs() < 1e-11 {
            break;
        }
    }
    let mut aff = adaptive_simpson(&affinity, 0.0, r_max, 1e-10);
    let mut lo = r_max;
    for _ in 0..8 {
        let hi = lo * 1.7;
        let add = adaptive_simpson(&affinity, lo, hi, 1e-11);
        aff += add;
        lo = hi;
        if add.abs() < 1e-11 {
            break;
        }
    }
    (0.5 * tv, aff.clamp(0.0, 1.0))
}

/// Distance of the posterior to the Gaussian limit
/// `N(β̂_{S*}, σ₀²/(α+γ) (X_{S*}ᵀX_{S*})⁻¹)` carried on the true support.
///
/// The mixture term is bounded by `1 - π̂(S*)`; the conditional term
/// compares the multivariate-t conditional with the limit normal. Both
/// laws are elliptical with the same shape matrix, so their distance
/// reduces to a 1-D radial integral evaluated by adaptive quadrature.
/// `sigma0_sq` is the true error variance (simulation truth; substitute an
/// estimate on real data and flag it).
pub fn bvm_distance(
    data: &Dataset,
    src: &PosteriorSource,
    s_star: &ModelIndex,
    sigma0_sq: f64,
    h: &HyperParams,
) -> Result<BvmReport> {
    if sigma0_sq.is_nan() || sigma0_sq <= 0.0 {
        return Err(Error::InvalidConfig(format!(
            "sigma0_sq must be positive, got {sigma0_sq}"
        )));
    }
    let fit = fit_support(data, s_star)?;
    let pi_star = src.model_prob(s_star);
    let s = s_star.size();
    let (tv_cond, hellinger_sq) = if s == 0 {
        // both laws are the point mass at the origin
        (0.0, 0.0)
    } else {
        let nu = 2.0 * h.a0 + h.alpha * data.n() as f64;
        let c_t = (2.0 * h.b0 + h.alpha * fit.rss()) / nu;
        let (tv, aff) = radial_distances(s, nu, c_t, sigma0_sq);
        (tv.clamp(0.0, 1.0), (1.0 - aff).clamp(0.0, 1.0))
    };
    Ok(BvmReport {
        n: data.n(),
        dim: s,
        true_model_prob: pi_star,
        tv_upper: ((1.0 - pi_star) + tv_cond).clamp(0.0, 1.0),
        hellinger_sq,
        tv_conditional: tv_cond,
    })
}

/// Thresholds for the contraction exceedance summaries: dimension factor
/// `C`, norm factor `M`, and the restricted eigenvalue used to convert the
/// prediction-norm radius into a coefficient-norm radius.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ContractionConfig {
    pub c_dim: f64,
    pub m_factor: f64,
    pub kappa: f64,
}

/// Posterior exceedance probabilities and raw metric quantiles.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContractionSummary {
    pub s_star: usize,
    /// `s* log(p/s*)` (0 when `s* = 0`).
    pub epsilon_n: f64,
    /// `epsilon_n / kappa²`.
    pub delta_n: f64,
    /// Posterior probability of `{|S_β| >= C s*}` (of a nonzero support
    /// when `s* = 0`).
    pub exceed_dim: f64,
    /// Posterior probability of `{‖X(β-β*)‖² > M ε_n}`.
    pub exceed_pred: f64,
    /// Posterior probability of `{‖β-β*‖² > M δ_n}`.
    pub exceed_l2: f64,
    /// 0.5/0.9/0.99 quantiles of `|S_β|`.
    pub dim_quantiles: [f64; 3],
    /// 0.5/0.9/0.99 quantiles of `‖X(β-β*)‖²`.
    pub pred_error_quantiles: [f64; 3],
    /// 0.5/0.9/0.99 quantiles of `‖β-β*‖²`.
    pub l2_error_quantiles: [f64; 3],
    pub sigma0_sq: f64,
}

/// Per-draw support size, prediction error and coefficient error against
/// the truth, summarized as exceedance probabilities at caller-supplied
/// thresholds.
pub fn contraction_metrics(
    samples: &PosteriorSamples,
    beta_star: &[(usize, f64)],
    sigma0_sq: f64,
    x: &DMatrix<f64>,
    cfg: &ContractionConfig,
) -> Result<ContractionSummary> {
    if samples.is_empty() {
        return Err(Error::EmptySource);
    }
    if x.ncols() != samples.p {
        return Err(Error::DimensionMismatch(format!(
            "design has {} columns, samples carry p={}",
            x.ncols(),
            samples.p
        )));
    }
    let n = x.nrows();
    let p = samples.p;
    let s_star = beta_star.len();
    let epsilon_n = if s_star > 0 {
        s_star as f64 * (p as f64 / s_star as f64).ln()
    } else {
        0.0
    };
    let delta_n = if cfg.kappa > 0.0 {
        epsilon_n / (cfg.kappa * cfg.kappa)
    } else {
        f64::INFINITY
    };
    let dim_threshold = if s_star > 0 {
        cfg.c_dim * s_star as f64
    } else {
        1.0
    };

    let mut x_beta_star = DVector::<f64>::zeros(n);
    for &(j, b) in beta_star {
        x_beta_star.axpy(b, &x.column(j).clone_owned(), 1.0);
    }

    let total = samples.len() as f64;
    let mut dims = Vec::with_capacity(samples.len());
    let mut preds = Vec::with_capacity(samples.len());
    let mut l2s = Vec::with_capacity(samples.len());
    let (mut hit_dim, mut hit_pred, mut hit_l2) = (0usize, 0usize, 0usize);
    for (model, beta) in samples.models.iter().zip(&samples.beta_draws) {
        let size = model.size() as f64;
        // ‖β - β*‖² over the merged support
        let mut l2 = 0.0;
        {
            let mut bi = model.indices().iter().zip(beta.iter()).peekable();
            let mut si = beta_star.iter().peekable();
            loop {
                match (bi.peek(), si.peek()) {
                    (Some((&j, &v)), Some(&&(k, t))) => {
                        if j == k {
                            l2 += (v - t) * (v - t);
                            bi.next();
                            si.next();
                        } else if j < k {
                            l2 += v * v;
                            bi.next();
                        } else {
                            l2 += t * t;
                            si.next();
                        }
                    }
                    (Some((_, &v)), None) => {
                        l2 += v * v;
                        bi.next();
                    }
                    (None, Some(&&(_, t))) => {
                        l2 += t * t;
                        si.next();
                    }
                    (None, None) => break,
                }
            }
        }
        // ‖X(β - β*)‖²
        let mut xdiff = -&x_beta_star;
        for (&j, &v) in model.indices().iter().zip(beta.iter()) {
            xdiff.axpy(v, &x.column(j).clone_owned(), 1.0);
        }
        let pred = xdiff.norm_squared();

        if size >= dim_threshold {
            hit_dim += 1;
        }
        if pred > cfg.m_factor * epsilon_n {
            hit_pred += 1;
        }
        if l2 > cfg.m_factor * delta_n {
            hit_l2 += 1;
        }
        dims.push(size);
        preds.push(pred);
        l2s.push(l2);
    }
    dims.sort_by(|a, b| a.partial_cmp(b).unwrap());
    preds.sort_by(|a, b| a.partial_cmp(b).unwrap());
    l2s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let quants = |v: &[f64]| {
        [
            quantile_type7(v, 0.5),
            quantile_type7(v, 0.9),
            quantile_type7(v, 0.99),
        ]
    };
    Ok(ContractionSummary {
        s_star,
        epsilon_n,
        delta_n,
        exceed_dim: hit_dim as f64 / total,
        exceed_pred: hit_pred as f64 / total,
        exceed_l2: hit_l2 as f64 / total,
        dim_quantiles: quants(&dims),
        pred_error_quantiles: quants(&preds),
        l2_error_quantiles: quants(&l2s),
        sigma0_sq,
    })
}
