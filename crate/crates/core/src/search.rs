//! Model-space search: Metropolis–Hastings over supports targeting the
//! marginal support posterior, and exact enumeration for small problems.
//!
//! The target is the marginal posterior with coefficients and error
//! variance integrated out in closed form; retained draws regenerate
//! `(σ², β)` by composing the conditional samplers. Add/remove proposals
//! update the support's Cholesky factor incrementally; swaps refactorize.

use crate::chol::CholFactor;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::fit::{
    fit_support, sample_beta_from_factor, sample_inverse_gamma, sigma2_posterior_params, ModelFit,
};
use crate::hyper::HyperParams;
use crate::model::ModelIndex;
use crate::numeric::{count_models, ln_binomial, log_sum_exp};
use crate::posterior::log_model_posterior_from_fit;
use crate::rng::{stream_rng, StreamRng};
use itertools::Itertools;
use nalgebra::DVector;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

/// Exhaustive enumeration guard: `Σ_{s≤R} C(p,s)` must stay below this.
pub const ENUM_GUARD: u128 = 1_000_000;

/// Incremental factor updates between full refactorizations.
const REFRESH_INTERVAL: u32 = 8192;

/// Move-type probabilities of the proposal kernel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MoveProbs {
    pub add: f64,
    pub remove: f64,
    pub swap: f64,
}

impl Default for MoveProbs {
    fn default() -> Self {
        MoveProbs {
            add: 0.4,
            remove: 0.4,
            swap: 0.2,
        }
    }
}

impl MoveProbs {
    pub fn validate(&self) -> Result<()> {
        let vals = [self.add, self.remove, self.swap];
        if vals.iter().any(|v| v.is_nan() || *v < 0.0 || !v.is_finite()) {
            return Err(Error::InvalidConfig(
                "move probabilities must be non-negative".into(),
            ));
        }
        let sum: f64 = vals.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidConfig(format!(
                "move probabilities must sum to 1, got {sum}"
            )));
        }
        // irreducibility: the chain must be able to leave both boundaries
        if self.add <= 0.0 || self.remove <= 0.0 {
            return Err(Error::InvalidConfig(
                "add and remove probabilities must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Sampler run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainConfig {
    pub n_iter: usize,
    pub burn_in: usize,
    pub seed: u64,
    /// Starting support; `None` starts from the empty model.
    #[serde(default)]
    pub init_model: Option<ModelIndex>,
    #[serde(default)]
    pub move_probs: MoveProbs,
}

impl ChainConfig {
    pub fn new(n_iter: usize, burn_in: usize, seed: u64) -> Self {
        ChainConfig {
            n_iter,
            burn_in,
            seed,
            init_model: None,
            move_probs: MoveProbs::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_iter == 0 || self.burn_in >= self.n_iter {
            return Err(Error::InvalidConfig(format!(
                "need burn_in < n_iter, got {} and {}",
                self.burn_in, self.n_iter
            )));
        }
        self.move_probs.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MoveKind {
    Add,
    Remove,
    Swap,
}

/// A proposed neighbor with its Hastings correction
/// `log q(S|S') - log q(S'|S)`.
#[derive(Debug, Clone)]
pub struct ProposedMove {
    pub model: ModelIndex,
    pub kind: MoveKind,
    pub added: Option<usize>,
    pub removed: Option<usize>,
    pub log_hastings: f64,
}

/// Feasible move-type weights at support size `s`, renormalized over the
/// moves that exist (no additions at the size cap, no removals from the
/// empty model, swaps need both an occupied and a free column).
fn move_weights(s: usize, p: usize, r: usize, mp: &MoveProbs) -> [f64; 3] {
    let mut w = [
        if s < r && s < p { mp.add } else { 0.0 },
        if s > 0 { mp.remove } else { 0.0 },
        if s > 0 && s < p { mp.swap } else { 0.0 },
    ];
    let z: f64 = w.iter().sum();
    debug_assert!(z > 0.0, "no feasible move at s={s}, p={p}, r={r}");
    for v in w.iter_mut() {
        *v /= z;
    }
    w
}

/// `k`-th column (0-based) not contained in the support.
fn nth_excluded(model: &ModelIndex, k: usize) -> usize {
    let mut k = k;
    let mut next = 0usize;
    for &j in model.indices() {
        let gap = j - next;
        if k < gap {
            return next + k;
        }
        k -= gap;
        next = j + 1;
    }
    next + k
}

/// Log probability that one proposal step moves `from` to `to`, or `None`
/// when the pair is not one move apart.
pub fn proposal_log_prob(
    from: &ModelIndex,
    to: &ModelIndex,
    p: usize,
    r: usize,
    mp: &MoveProbs,
) -> Option<f64> {
    let s = from.size();
    let t = to.size();
    let w = move_weights(s, p, r, mp);
    let sym_diff = {
        let mut d = 0usize;
        for &j in from.indices() {
            if !to.contains(j) {
                d += 1;
            }
        }
        for &j in to.indices() {
            if !from.contains(j) {
                d += 1;
            }
        }
        d
    };
    match (t as isize - s as isize, sym_diff) {
        (1, 1) if w[0] > 0.0 => Some(w[0].ln() - ((p - s) as f64).ln()),
        (-1, 1) if w[1] > 0.0 => Some(w[1].ln() - (s as f64).ln()),
        (0, 2) if w[2] > 0.0 => Some(w[2].ln() - (s as f64 * (p - s) as f64).ln()),
        _ => None,
    }
}

/// Draws a neighboring support and the Hastings correction for the move.
/// Infeasible move types are excluded and the type weights renormalized,
/// at both endpoints, so boundary models are handled exactly.
pub fn propose_neighbor<R: Rng + ?Sized>(
    model: &ModelIndex,
    p: usize,
    r: usize,
    mp: &MoveProbs,
    rng: &mut R,
) -> ProposedMove {
    let s = model.size();
    let w = move_weights(s, p, r, mp);
    let u: f64 = rng.random();
    let kind = if u < w[0] {
        MoveKind::Add
    } else if u < w[0] + w[1] {
        MoveKind::Remove
    } else {
        MoveKind::Swap
    };
    match kind {
        MoveKind::Add => {
            let j = nth_excluded(model, rng.random_range(0..p - s));
            let (next, _) = model.with_added(j);
            let w_rev = move_weights(s + 1, p, r, mp);
            let log_fwd = w[0].ln() - ((p - s) as f64).ln();
            let log_rev = w_rev[1].ln() - ((s + 1) as f64).ln();
            ProposedMove {
                model: next,
                kind,
                added: Some(j),
                removed: None,
                log_hastings: log_rev - log_fwd,
            }
        }
        MoveKind::Remove => {
            let j = model.indices()[rng.random_range(0..s)];
            let (next, _) = model.with_removed(j);
            let w_rev = move_weights(s - 1, p, r, mp);
            let log_fwd = w[1].ln() - (s as f64).ln();
            let log_rev = w_rev[0].ln() - ((p - s + 1) as f64).ln();
            ProposedMove {
                model: next,
                kind,
                added: None,
                removed: Some(j),
                log_hastings: log_rev - log_fwd,
            }
        }
        MoveKind::Swap => {
            let out = model.indices()[rng.random_range(0..s)];
            let (dropped, _) = model.with_removed(out);
            let inn = nth_excluded(model, rng.random_range(0..p - s));
            let (next, _) = dropped.with_added(inn);
            // same size on both ends: forward and reverse probabilities match
            ProposedMove {
                model: next,
                kind,
                added: Some(inn),
                removed: Some(out),
                log_hastings: 0.0,
            }
        }
    }
}

/// Shared per-dataset quantities for the incremental chain state.
struct ChainCtx<'a> {
    data: &'a Dataset,
    h: &'a HyperParams,
    yty: f64,
    col_norms_sq: Vec<f64>,
}

impl<'a> ChainCtx<'a> {
    fn new(data: &'a Dataset, h: &'a HyperParams) -> Self {
        ChainCtx {
            data,
            h,
            yty: data.y().norm_squared(),
            col_norms_sq: data.column_norms_squared(),
        }
    }
}

/// Current support with cached factorization, `X_Sᵀy`, rss and log target.
#[derive(Clone)]
struct ChainState {
    model: ModelIndex,
    factor: CholFactor,
    xty: DVector<f64>,
    rss: f64,
    log_post: f64,
}

impl ChainState {
    fn finish(model: ModelIndex, factor: CholFactor, xty: DVector<f64>, ctx: &ChainCtx) -> Self {
        let w = factor.forward_solve(&xty);
        let rss = (ctx.yty - w.norm_squared()).max(0.0);
        let s = model.size() as f64;
        let n = ctx.data.n() as f64;
        let h = ctx.h;
        let log_post = -ln_binomial(ctx.data.p() as u64, model.size() as u64)
            - s * (h.c.ln() + h.a * (ctx.data.p() as f64).ln())
            + 0.5 * s * (h.gamma / (h.alpha + h.gamma)).ln()
            - (h.a0 + 0.5 * h.alpha * n) * (h.b0 + 0.5 * h.alpha * rss).ln();
        ChainState {
            model,
            factor,
            xty,
            rss,
            log_post,
        }
    }

    fn from_scratch(model: ModelIndex, ctx: &ChainCtx) -> Result<Self> {
        let s = model.size();
        let idx = model.indices();
        let mut gram = nalgebra::DMatrix::<f64>::zeros(s, s);
        let mut xty = DVector::<f64>::zeros(s);
        for i in 0..s {
            let ci = ctx.data.column(idx[i]);
            xty[i] = ci.dot(ctx.data.y());
            for j in 0..=i {
                let v = ci.dot(&ctx.data.column(idx[j]));
                gram[(i, j)] = v;
                gram[(j, i)] = v;
            }
        }
        let factor = if s == 0 {
            CholFactor::empty()
        } else {
            CholFactor::from_gram(&gram).map_err(|_| Error::SingularGram {
                support: model.clone(),
            })?
        };
        Ok(ChainState::finish(model, factor, xty, ctx))
    }

    /// Applies a proposed move incrementally; swaps (and incremental
    /// failures below the pivot tolerance) fall back to a full
    /// refactorization, and a support that is genuinely singular surfaces
    /// as an error so the caller can reject the proposal.
    fn apply(&self, mv: &ProposedMove, ctx: &ChainCtx) -> Result<Self> {
        match mv.kind {
            MoveKind::Add => {
                let j = mv.added.unwrap();
                let (model, pos) = self.model.with_added(j);
                let s = self.model.size();
                let col_j = ctx.data.column(j);
                let cross =
                    DVector::from_fn(s, |i, _| ctx.data.column(self.model.indices()[i]).dot(&col_j));
                match self.factor.insert(pos, &cross, ctx.col_norms_sq[j]) {
                    Ok(factor) => {
                        let mut xty = self.xty.clone().insert_row(pos, 0.0);
                        xty[pos] = col_j.dot(ctx.data.y());
                        Ok(ChainState::finish(model, factor, xty, ctx))
                    }
                    // pivot failure: retry from scratch, which applies the
                    // same tolerance to the full factorization
                    Err(_) => ChainState::from_scratch(model, ctx),
                }
            }
            MoveKind::Remove => {
                let j = mv.removed.unwrap();
                let (model, pos) = self.model.with_removed(j);
                let factor = self.factor.remove(pos);
                let xty = self.xty.clone().remove_row(pos);
                Ok(ChainState::finish(model, factor, xty, ctx))
            }
            MoveKind::Swap => ChainState::from_scratch(mv.model.clone(), ctx),
        }
    }

    fn beta_hat(&self) -> DVector<f64> {
        self.factor.back_solve(&self.factor.forward_solve(&self.xty))
    }
}

/// One Metropolis–Hastings step from `state`: accept the proposed neighbor
/// with probability `min(1, exp(Δ log target + log Hastings))`; proposals
/// with singular Gram matrices are rejected outright.
pub fn mh_step<R: Rng + ?Sized>(
    state: &ModelIndex,
    data: &Dataset,
    h: &HyperParams,
    cfg: &ChainConfig,
    rng: &mut R,
) -> Result<(ModelIndex, bool)> {
    let ctx = ChainCtx::new(data, h);
    let cur = ChainState::from_scratch(state.clone(), &ctx)?;
    let mv = propose_neighbor(state, data.p(), h.r, &cfg.move_probs, rng);
    let log_accept = match cur.apply(&mv, &ctx) {
        Ok(cand) => cand.log_post - cur.log_post + mv.log_hastings,
        Err(_) => f64::NEG_INFINITY,
    };
    let accept = log_accept >= 0.0 || rng.random::<f64>().ln() < log_accept;
    if accept {
        Ok((mv.model, true))
    } else {
        Ok((state.clone(), false))
    }
}

/// Posterior draws `(S, σ², β)` retained after burn-in.
///
/// `beta_draws[i]` holds the active coefficients aligned with
/// `models[i]`; all excluded coordinates are exactly zero.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorSamples {
    pub p: usize,
    pub models: Vec<ModelIndex>,
    pub sigma2_draws: Vec<f64>,
    pub beta_draws: Vec<Vec<f64>>,
    pub acceptance_rate: f64,
}

impl PosteriorSamples {
    pub fn len(&self) -> usize {
        self.models.len()
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }

    /// Frequency of each visited support.
    pub fn visit_frequencies(&self) -> BTreeMap<ModelIndex, f64> {
        let mut counts: BTreeMap<ModelIndex, usize> = BTreeMap::new();
        for m in &self.models {
            *counts.entry(m.clone()).or_insert(0) += 1;
        }
        let total = self.models.len() as f64;
        counts
            .into_iter()
            .map(|(m, c)| (m, c as f64 / total))
            .collect()
    }

    /// Most-visited support (ties break toward the lexicographically
    /// smallest, deterministically).
    pub fn map_model(&self) -> Result<ModelIndex> {
        if self.is_empty() {
            return Err(Error::EmptySource);
        }
        let mut best: Option<(ModelIndex, usize)> = None;
        let mut counts: BTreeMap<&ModelIndex, usize> = BTreeMap::new();
        for m in &self.models {
            *counts.entry(m).or_insert(0) += 1;
        }
        for (m, c) in counts {
            match &best {
                Some((_, bc)) if *bc >= c => {}
                _ => best = Some((m.clone(), c)),
            }
        }
        Ok(best.unwrap().0)
    }

    /// Per-column posterior inclusion frequency.
    pub fn inclusion_probabilities(&self) -> Result<Vec<f64>> {
        if self.is_empty() {
            return Err(Error::EmptySource);
        }
        let mut acc = vec![0f64; self.p];
        for m in &self.models {
            for &j in m.indices() {
                acc[j] += 1.0;
            }
        }
        let total = self.models.len() as f64;
        for v in acc.iter_mut() {
            *v /= total;
        }
        Ok(acc)
    }

    /// Values of the linear functional `xᵀβ` across draws.
    pub fn functional_draws(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.p {
            return Err(Error::DimensionMismatch(format!(
                "functional has length {}, need p={}",
                x.len(),
                self.p
            )));
        }
        Ok(self
            .models
            .iter()
            .zip(&self.beta_draws)
            .map(|(m, b)| {
                m.indices()
                    .iter()
                    .zip(b.iter())
                    .map(|(&j, &v)| x[j] * v)
                    .sum()
            })
            .collect())
    }

    /// Dense posterior mean of the coefficient vector.
    pub fn beta_posterior_mean(&self) -> Vec<f64> {
        let mut acc = vec![0f64; self.p];
        for (m, b) in self.models.iter().zip(&self.beta_draws) {
            for (&j, &v) in m.indices().iter().zip(b.iter()) {
                acc[j] += v;
            }
        }
        let total = self.len().max(1) as f64;
        for v in acc.iter_mut() {
            *v /= total;
        }
        acc
    }

    /// Writes one draw per line: `{"model":[...],"sigma2":..,"beta":[...]}`.
    pub fn write_jsonl<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let mut w = BufWriter::new(std::fs::File::create(path.as_ref())?);
        for i in 0..self.len() {
            let line = DrawLine {
                model: self.models[i].indices().to_vec(),
                sigma2: self.sigma2_draws[i],
                beta: self.beta_draws[i].clone(),
            };
            serde_json::to_writer(&mut w, &line)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    /// Reads draws back; the acceptance rate is not part of the line format
    /// and is restored as 1.0.
    pub fn read_jsonl<P: AsRef<Path>>(path: P, p: usize) -> Result<Self> {
        let r = BufReader::new(std::fs::File::open(path.as_ref())?);
        let mut models = Vec::new();
        let mut sigma2_draws = Vec::new();
        let mut beta_draws = Vec::new();
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let d: DrawLine = serde_json::from_str(&line)
                .map_err(|e| Error::Parse(format!("draw line {}: {e}", i + 1)))?;
            let model = ModelIndex::new(d.model)?;
            model.validate_for(p, p)?;
            if model.size() != d.beta.len() {
                return Err(Error::InvalidData(format!(
                    "draw line {}: beta length does not match support size",
                    i + 1
                )));
            }
            models.push(model);
            sigma2_draws.push(d.sigma2);
            beta_draws.push(d.beta);
        }
        Ok(PosteriorSamples {
            p,
            models,
            sigma2_draws,
            beta_draws,
            acceptance_rate: 1.0,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct DrawLine {
    model: Vec<usize>,
    sigma2: f64,
    beta: Vec<f64>,
}

/// Runs the sampler and retains every post-burn-in draw, regenerating
/// `(σ², β)` per retained support by composing the conditional samplers.
/// Deterministic given the seed.
pub fn run_chain(data: &Dataset, h: &HyperParams, cfg: &ChainConfig) -> Result<PosteriorSamples> {
    h.validate_for(data)?;
    cfg.validate()?;
    let ctx = ChainCtx::new(data, h);
    let init = cfg.init_model.clone().unwrap_or_else(ModelIndex::empty);
    init.validate_for(data.p(), h.r)?;
    let mut state = ChainState::from_scratch(init, &ctx).map_err(|e| match e {
        Error::SingularGram { .. } => Error::InitSingular,
        other => other,
    })?;

    let mut rng: StreamRng = stream_rng(cfg.seed, 0);
    let retained = cfg.n_iter - cfg.burn_in;
    let mut samples = PosteriorSamples {
        p: data.p(),
        models: Vec::with_capacity(retained),
        sigma2_draws: Vec::with_capacity(retained),
        beta_draws: Vec::with_capacity(retained),
        acceptance_rate: 0.0,
    };
    let mut accepted = 0usize;
    let mut ops_since_refresh = 0u32;
    let shape = h.a0 + 0.5 * h.alpha * data.n() as f64;

    for t in 0..cfg.n_iter {
        let mv = propose_neighbor(&state.model, data.p(), h.r, &cfg.move_probs, &mut rng);
        let cand = state.apply(&mv, &ctx);
        let log_accept = match &cand {
            Ok(c) => c.log_post - state.log_post + mv.log_hastings,
            Err(_) => f64::NEG_INFINITY,
        };
        if log_accept >= 0.0 || rng.random::<f64>().ln() < log_accept {
            state = cand.expect("accepted candidate is valid");
            accepted += 1;
            ops_since_refresh += 1;
            if ops_since_refresh >= REFRESH_INTERVAL {
                state = ChainState::from_scratch(state.model.clone(), &ctx)?;
                ops_since_refresh = 0;
            }
        }
        if t >= cfg.burn_in {
            let scale = h.b0 + 0.5 * h.alpha * state.rss;
            let sigma2 = sample_inverse_gamma(shape, scale, &mut rng);
            let beta_hat = state.beta_hat();
            let beta = sample_beta_from_factor(&state.factor, &beta_hat, sigma2, h, &mut rng);
            samples.models.push(state.model.clone());
            samples.sigma2_draws.push(sigma2);
            samples.beta_draws.push(beta.iter().cloned().collect());
        }
    }
    samples.acceptance_rate = accepted as f64 / cfg.n_iter as f64;
    Ok(samples)
}

/// Exact normalized support posterior from exhaustive enumeration.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelPosteriorTable {
    pub p: usize,
    pub entries: BTreeMap<ModelIndex, f64>,
    /// `log Σ_S exp(log π̃(S))`, up to the constant shared by all supports.
    pub log_normalizer: f64,
    /// Supports skipped because their Gram matrix is singular; they carry
    /// probability zero.
    pub singular: Vec<ModelIndex>,
}

impl ModelPosteriorTable {
    pub fn prob(&self, model: &ModelIndex) -> f64 {
        self.entries.get(model).copied().unwrap_or(0.0)
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Highest-probability support (deterministic tie-break).
    pub fn map_model(&self) -> Result<ModelIndex> {
        if self.entries.is_empty() {
            return Err(Error::EmptySource);
        }
        let mut best: Option<(&ModelIndex, f64)> = None;
        for (m, &pr) in &self.entries {
            match best {
                Some((_, bp)) if bp >= pr => {}
                _ => best = Some((m, pr)),
            }
        }
        Ok(best.unwrap().0.clone())
    }

    /// Exact per-column inclusion probabilities `Σ_S π(S) 1{j ∈ S}`.
    pub fn inclusion_probabilities(&self) -> Result<Vec<f64>> {
        if self.entries.is_empty() {
            return Err(Error::EmptySource);
        }
        let mut acc = vec![0f64; self.p];
        for (m, &pr) in &self.entries {
            for &j in m.indices() {
                acc[j] += pr;
            }
        }
        Ok(acc)
    }

    pub fn write_json<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let file = TableFile {
            schema_version: crate::SCHEMA_VERSION,
            p: self.p,
            log_normalizer: self.log_normalizer,
            entries: self
                .entries
                .iter()
                .map(|(m, &prob)| TableEntry {
                    model: m.indices().to_vec(),
                    prob,
                })
                .collect(),
            singular: self.singular.iter().map(|m| m.indices().to_vec()).collect(),
        };
        let mut w = BufWriter::new(std::fs::File::create(path.as_ref())?);
        serde_json::to_writer_pretty(&mut w, &file)?;
        w.write_all(b"\n")?;
        Ok(())
    }

    pub fn read_json<P: AsRef<Path>>(path: P) -> Result<Self> {
        let file: TableFile = serde_json::from_str(&std::fs::read_to_string(path.as_ref())?)?;
        let mut entries = BTreeMap::new();
        for e in file.entries {
            entries.insert(ModelIndex::new(e.model)?, e.prob);
        }
        let mut singular = Vec::new();
        for s in file.singular {
            singular.push(ModelIndex::new(s)?);
        }
        Ok(ModelPosteriorTable {
            p: file.p,
            entries,
            log_normalizer: file.log_normalizer,
            singular,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct TableFile {
    schema_version: u32,
    p: usize,
    log_normalizer: f64,
    entries: Vec<TableEntry>,
    singular: Vec<Vec<usize>>,
}

#[derive(Serialize, Deserialize)]
struct TableEntry {
    model: Vec<usize>,
    prob: f64,
}

/// Enumerates every support with `|S| ≤ R`, normalizes by log-sum-exp and
/// reports singular supports separately with probability zero.
pub fn enumerate_posterior(data: &Dataset, h: &HyperParams) -> Result<ModelPosteriorTable> {
    h.validate_for(data)?;
    let p = data.p();
    let count = count_models(p, h.r);
    if count > ENUM_GUARD {
        return Err(Error::TooManyModels {
            count,
            limit: ENUM_GUARD,
        });
    }
    let mut supports: Vec<ModelIndex> = Vec::new();
    let mut log_values: Vec<f64> = Vec::new();
    let mut singular: Vec<ModelIndex> = Vec::new();
    for s in 0..=h.r.min(p) {
        for combo in (0..p).combinations(s) {
            let model = ModelIndex::new(combo).expect("combinations are sorted and unique");
            match fit_support(data, &model) {
                Ok(fit) => {
                    supports.push(model);
                    log_values.push(log_model_posterior_from_fit(&fit, h, p));
                }
                Err(Error::SingularGram { .. }) => singular.push(model),
                Err(e) => return Err(e),
            }
        }
    }
    let log_z = log_sum_exp(&log_values);
    let entries: BTreeMap<ModelIndex, f64> = supports
        .into_iter()
        .zip(log_values)
        .map(|(m, lv)| (m, (lv - log_z).exp()))
        .collect();
    Ok(ModelPosteriorTable {
        p,
        entries,
        log_normalizer: log_z,
        singular,
    })
}

/// Synthesizes independent posterior draws from an enumeration table by
/// sampling supports from their exact probabilities and regenerating
/// `(σ², β)` per draw.
pub fn sample_from_table<R: Rng + ?Sized>(
    table: &ModelPosteriorTable,
    data: &Dataset,
    h: &HyperParams,
    n_draws: usize,
    rng: &mut R,
) -> Result<PosteriorSamples> {
    if table.is_empty() {
        return Err(Error::EmptySource);
    }
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
    let mut fits: BTreeMap<ModelIndex, ModelFit> = BTreeMap::new();
    let mut samples = PosteriorSamples {
        p: table.p,
        models: Vec::with_capacity(n_draws),
        sigma2_draws: Vec::with_capacity(n_draws),
        beta_draws: Vec::with_capacity(n_draws),
        acceptance_rate: 1.0,
    };
    for _ in 0..n_draws {
        let u: f64 = rng.random();
        let model = cumulative
            .iter()
            .find(|(c, _)| u <= *c)
            .map(|(_, m)| (*m).clone())
            .unwrap_or_else(|| cumulative.last().unwrap().1.clone());
        let fit = match fits.get(&model) {
            Some(f) => f.clone(),
            None => {
                let f = fit_support(data, &model)?;
                fits.insert(model.clone(), f.clone());
                f
            }
        };
        let (shape, scale) = sigma2_posterior_params(fit.rss(), fit.n(), h);
        let sigma2 = sample_inverse_gamma(shape, scale, rng);
        let beta = sample_beta_from_factor(fit.gram_factor(), fit.beta_hat(), sigma2, h, rng);
        samples.models.push(model);
        samples.sigma2_draws.push(sigma2);
        samples.beta_draws.push(beta.iter().cloned().collect());
    }
    Ok(samples)
}

/// A posterior over supports, either empirical (sampler draws) or exact
/// (enumeration table).
#[derive(Debug, Clone, Copy)]
pub enum PosteriorSource<'a> {
    Samples(&'a PosteriorSamples),
    Table(&'a ModelPosteriorTable),
}

impl<'a> PosteriorSource<'a> {
    pub fn p(&self) -> usize {
        match self {
            PosteriorSource::Samples(s) => s.p,
            PosteriorSource::Table(t) => t.p,
        }
    }

    pub fn is_empty(&self) -> bool {
        match self {
            PosteriorSource::Samples(s) => s.is_empty(),
            PosteriorSource::Table(t) => t.is_empty(),
        }
    }

    /// Posterior probability of one support (exact or visit frequency).
    pub fn model_prob(&self, model: &ModelIndex) -> f64 {
        match self {
            PosteriorSource::Samples(s) => {
                let hits = s.models.iter().filter(|m| *m == model).count();
                hits as f64 / s.len().max(1) as f64
            }
            PosteriorSource::Table(t) => t.prob(model),
        }
    }

    pub fn inclusion_probabilities(&self) -> Result<Vec<f64>> {
        match self {
            PosteriorSource::Samples(s) => s.inclusion_probabilities(),
            PosteriorSource::Table(t) => t.inclusion_probabilities(),
        }
    }
}

/// Per-column inclusion probabilities of either source; errors on an empty
/// source.
pub fn inclusion_probabilities(src: &PosteriorSource) -> Result<Vec<f64>> {
    if src.is_empty() {
        return Err(Error::EmptySource);
    }
    src.inclusion_probabilities()
}

/// Total variation distance `sup_B |P(B) - Q(B)| = ½ Σ |p_S - q_S|` between
/// two distributions over supports.
pub fn total_variation(
    p: &BTreeMap<ModelIndex, f64>,
    q: &BTreeMap<ModelIndex, f64>,
) -> f64 {
    let mut tv = 0.0;
    for (m, &pv) in p {
        tv += (pv - q.get(m).copied().unwrap_or(0.0)).abs();
    }
    for (m, &qv) in q {
        if !p.contains_key(m) {
            tv += qv;
        }
    }
    0.5 * tv
}
