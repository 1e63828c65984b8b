//! Cross-entropy machinery over a diagonal Gaussian.
//!
//! Two refit routes are provided. [`update_basic`] refits mean and variance
//! from complete elite vectors. [`update_lazy`] refits each dimension from the
//! elite entries that are actually present in it and leaves dimensions nobody
//! sampled untouched. Per dimension this is the maximum-likelihood fit of the
//! marginal density on the non-null components, since the joint log-likelihood
//! of partial vectors separates into independent univariate terms.
//!
//! Both updates return the smoothed parameters
//! `mu <- (1 - alpha) mu + alpha mu~`, `sigma2 <- (1 - alpha) sigma2 + alpha sigma2~`.
//! Variances use the population (divide-by-count) estimator.

use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::policy_tree::{NodeIndex, PolicyParameterVector};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CeError {
    #[error("mean and variance lengths differ ({mu} vs {sigma2})")]
    LengthMismatch { mu: usize, sigma2: usize },
    #[error("variance in dimension {dim} is invalid: {value}")]
    InvalidVariance { dim: usize, value: f64 },
    #[error("smoothing parameter must lie in (0, 1], got {0}")]
    InvalidAlpha(f64),
    #[error("sample value must be finite, got {0}")]
    NonFiniteValue(f64),
    #[error("elite count {k} invalid for a batch of {batch}")]
    EliteCount { k: usize, batch: usize },
    #[error("elite vector {index} is incomplete; use the lazy update")]
    PartialElite { index: usize },
    #[error("elite vector {index} has dimension {actual}, distribution has {expected}")]
    DimensionMismatch { index: usize, expected: usize, actual: usize },
}

/// A parameter vector whose components may be absent.
pub trait ParameterVector {
    fn dim(&self) -> usize;
    fn component(&self, i: usize) -> Option<f64>;
    fn is_complete(&self) -> bool;

    /// Calls `f(i, value)` for every present component in index order.
    fn for_each_present(&self, mut f: impl FnMut(usize, f64)) {
        for i in 0..self.dim() {
            if let Some(v) = self.component(i) {
                f(i, v);
            }
        }
    }
}

impl ParameterVector for Vec<f64> {
    fn dim(&self) -> usize {
        self.len()
    }
    fn component(&self, i: usize) -> Option<f64> {
        Some(self[i])
    }
    fn is_complete(&self) -> bool {
        true
    }
}

/// Explicitly partial vector, mainly for tests and non-tree uses.
impl ParameterVector for Vec<Option<f64>> {
    fn dim(&self) -> usize {
        self.len()
    }
    fn component(&self, i: usize) -> Option<f64> {
        self[i]
    }
    fn is_complete(&self) -> bool {
        self.iter().all(Option::is_some)
    }
}

impl ParameterVector for PolicyParameterVector {
    fn dim(&self) -> usize {
        self.shape().parameter_dim()
    }
    fn component(&self, i: usize) -> Option<f64> {
        PolicyParameterVector::component(self, i)
    }
    fn is_complete(&self) -> bool {
        PolicyParameterVector::is_complete(self)
    }
    fn for_each_present(&self, mut f: impl FnMut(usize, f64)) {
        for (i, v) in self.present_components() {
            f(i, v);
        }
    }
}

/// `N(mu, diag(sigma2))`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalGaussian {
    mu: Vec<f64>,
    sigma2: Vec<f64>,
}

impl DiagonalGaussian {
    pub fn new(mu: Vec<f64>, sigma2: Vec<f64>) -> Result<Self, CeError> {
        if mu.len() != sigma2.len() {
            return Err(CeError::LengthMismatch { mu: mu.len(), sigma2: sigma2.len() });
        }
        if let Some((dim, &value)) = sigma2.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v >= 0.0)) {
            return Err(CeError::InvalidVariance { dim, value });
        }
        Ok(Self { mu, sigma2 })
    }

    /// Mean `mu` with the same variance in every dimension.
    pub fn isotropic(mu: Vec<f64>, sigma2: f64) -> Result<Self, CeError> {
        let n = mu.len();
        Self::new(mu, vec![sigma2; n])
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn sigma2(&self) -> &[f64] {
        &self.sigma2
    }

    pub fn into_parts(self) -> (Vec<f64>, Vec<f64>) {
        (self.mu, self.sigma2)
    }

    /// Raises every variance below `floor` to `floor`.
    pub fn floor_variance(&mut self, floor: f64) {
        if floor > 0.0 {
            for s in &mut self.sigma2 {
                if *s < floor {
                    *s = floor;
                }
            }
        }
    }
}

/// Draws a complete vector from `dist`.
pub fn sample_full<R: Rng + ?Sized>(dist: &DiagonalGaussian, rng: &mut R) -> Vec<f64> {
    dist.mu
        .iter()
        .zip(&dist.sigma2)
        .map(|(&m, &s2)| {
            let z: f64 = rng.sample(StandardNormal);
            if s2 == 0.0 {
                m
            } else {
                m + s2.sqrt() * z
            }
        })
        .collect()
}

/// Returns the action at `node`, drawing it from the node's marginal the first
/// time it is requested and keeping it fixed afterwards. A present block is
/// returned without touching `rng`.
pub fn sample_node_lazy<'a, R: Rng + ?Sized>(
    theta: &'a mut PolicyParameterVector,
    node: NodeIndex,
    dist: &DiagonalGaussian,
    rng: &mut R,
) -> &'a [f64] {
    debug_assert_eq!(dist.dim(), theta.shape().parameter_dim());
    if !theta.is_present(node) {
        let range = theta.shape().block_range(node);
        let block = theta.claim_block(node);
        for (slot, i) in block.iter_mut().zip(range) {
            let z: f64 = rng.sample(StandardNormal);
            let s2 = dist.sigma2[i];
            *slot = if s2 == 0.0 { dist.mu[i] } else { dist.mu[i] + s2.sqrt() * z };
        }
    }
    theta.action_block(node).expect("block present after sampling")
}

/// A candidate with its estimated value.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredSample<P> {
    pub theta: P,
    value: f64,
}

impl<P> ScoredSample<P> {
    pub fn new(theta: P, value: f64) -> Result<Self, CeError> {
        if !value.is_finite() {
            return Err(CeError::NonFiniteValue(value));
        }
        Ok(Self { theta, value })
    }

    pub fn value(&self) -> f64 {
        self.value
    }
}

/// The `K` best candidates of one batch, in descending value order.
#[derive(Debug, Clone, PartialEq)]
pub struct EliteSet<P> {
    samples: Vec<ScoredSample<P>>,
}

impl<P> EliteSet<P> {
    pub fn samples(&self) -> &[ScoredSample<P>] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// The elite threshold, i.e. the K-th largest value.
    pub fn threshold(&self) -> Option<f64> {
        self.samples.last().map(ScoredSample::value)
    }
}

/// Selects exactly `k` samples with the highest values. Ties are broken by
/// batch order: the earlier sample wins.
pub fn select_elites<P>(batch: Vec<ScoredSample<P>>, k: usize) -> Result<EliteSet<P>, CeError> {
    if k == 0 || k > batch.len() {
        return Err(CeError::EliteCount { k, batch: batch.len() });
    }
    let mut batch = batch;
    // Stable sort; values are finite so the comparison is total.
    batch.sort_by(|a, b| b.value.partial_cmp(&a.value).expect("finite values"));
    batch.truncate(k);
    Ok(EliteSet { samples: batch })
}

/// Pre-smoothing marginal fit.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalFit {
    pub mu: Vec<f64>,
    pub sigma2: Vec<f64>,
    /// Number of elites present in each dimension.
    pub counts: Vec<usize>,
}

fn check_dims<P: ParameterVector>(dist: &DiagonalGaussian, elites: &EliteSet<P>) -> Result<(), CeError> {
    for (index, s) in elites.samples.iter().enumerate() {
        if s.theta.dim() != dist.dim() {
            return Err(CeError::DimensionMismatch { index, expected: dist.dim(), actual: s.theta.dim() });
        }
    }
    Ok(())
}

fn check_alpha(alpha: f64) -> Result<(), CeError> {
    if alpha > 0.0 && alpha <= 1.0 {
        Ok(())
    } else {
        Err(CeError::InvalidAlpha(alpha))
    }
}

/// Marginal maximum-likelihood estimates from possibly partial elites. A
/// dimension with no present entry keeps the current `(mu_i, sigma2_i)`.
pub fn fit_marginals<P: ParameterVector>(
    dist: &DiagonalGaussian,
    elites: &EliteSet<P>,
) -> Result<MarginalFit, CeError> {
    check_dims(dist, elites)?;
    let n = dist.dim();
    let mut sums = vec![0.0; n];
    let mut counts = vec![0usize; n];
    for s in &elites.samples {
        s.theta.for_each_present(|i, v| {
            sums[i] += v;
            counts[i] += 1;
        });
    }
    let mut mu = dist.mu.clone();
    for i in 0..n {
        if counts[i] > 0 {
            mu[i] = sums[i] / counts[i] as f64;
        }
    }
    let mut sq = vec![0.0; n];
    for s in &elites.samples {
        s.theta.for_each_present(|i, v| {
            let d = v - mu[i];
            sq[i] += d * d;
        });
    }
    let mut sigma2 = dist.sigma2.clone();
    for i in 0..n {
        if counts[i] > 0 {
            sigma2[i] = sq[i] / counts[i] as f64;
        }
    }
    Ok(MarginalFit { mu, sigma2, counts })
}

/// Mean and population variance of complete elite vectors.
pub fn fit_full<P: ParameterVector>(dist: &DiagonalGaussian, elites: &EliteSet<P>) -> Result<(Vec<f64>, Vec<f64>), CeError> {
    check_dims(dist, elites)?;
    if let Some(index) = elites.samples.iter().position(|s| !s.theta.is_complete()) {
        return Err(CeError::PartialElite { index });
    }
    let n = dist.dim();
    let k = elites.len() as f64;
    let rows: Vec<Vec<f64>> = elites
        .samples
        .iter()
        .map(|s| (0..n).map(|i| s.theta.component(i).expect("complete")).collect())
        .collect();
    let mut mean = vec![0.0; n];
    for row in &rows {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= k;
    }
    let mut var = vec![0.0; n];
    for row in &rows {
        for ((s, v), m) in var.iter_mut().zip(row).zip(&mean) {
            let d = v - m;
            *s += d * d;
        }
    }
    for s in &mut var {
        *s /= k;
    }
    Ok((mean, var))
}

fn blend(old: &[f64], fitted: &[f64], alpha: f64) -> Vec<f64> {
    old.iter().zip(fitted).map(|(&o, &f)| (1.0 - alpha) * o + alpha * f).collect()
}

/// Smoothed refit from complete elite vectors.
pub fn update_basic<P: ParameterVector>(
    dist: &DiagonalGaussian,
    elites: &EliteSet<P>,
    alpha: f64,
) -> Result<DiagonalGaussian, CeError> {
    check_alpha(alpha)?;
    let (mean, var) = fit_full(dist, elites)?;
    Ok(DiagonalGaussian { mu: blend(&dist.mu, &mean, alpha), sigma2: blend(&dist.sigma2, &var, alpha) })
}

/// Smoothed per-dimension refit from possibly partial elite vectors.
/// Dimensions without any present entry are returned unchanged.
pub fn update_lazy<P: ParameterVector>(
    dist: &DiagonalGaussian,
    elites: &EliteSet<P>,
    alpha: f64,
) -> Result<DiagonalGaussian, CeError> {
    check_alpha(alpha)?;
    let fit = fit_marginals(dist, elites)?;
    let mut mu = dist.mu.clone();
    let mut sigma2 = dist.sigma2.clone();
    for i in 0..dist.dim() {
        if fit.counts[i] > 0 {
            mu[i] = (1.0 - alpha) * dist.mu[i] + alpha * fit.mu[i];
            sigma2[i] = (1.0 - alpha) * dist.sigma2[i] + alpha * fit.sigma2[i];
        }
    }
    Ok(DiagonalGaussian { mu, sigma2 })
}
