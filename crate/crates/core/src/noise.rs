//! The noisy-instance generative model and its statistical validation.
//!
//! Observed instances are latent stable instances plus independent noise:
//! plain sub-Gaussian (normal) on node costs, lower-truncated on edge
//! weights so perturbed weights stay positive. Truncation at `-w` skews the
//! mean upward, so the sampler recenters by the analytic truncated-normal
//! mean and reports the residual bias per edge; the residual is what is left
//! because the recentered draw must itself be rejected below `-w`.
//!
//! The two validators check, by exhaustive search respectively LP solves,
//! the finite-sample analogues of the model's deviation and near-persistence
//! guarantees. The deviation bound carries `k^2/4` inside the square root
//! and the near-persistence bound carries `k^2`; the discrepancy is
//! preserved exactly as each guarantee states it.

use crate::instance::{Instance, InstanceError, Labeling};
use crate::locallp::{self, LocalLpError};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum NoiseError {
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error(transparent)]
    LocalLp(#[from] LocalLpError),
    #[error("sigma needs {0} entries (n*k), got {1}")]
    SigmaShape(usize, usize),
    #[error("gamma needs {0} entries (m), got {1}")]
    GammaShape(usize, usize),
    #[error("activation fraction {0} outside [0, 1]")]
    BadFraction(f64),
    #[error("negative noise parameter {0}")]
    NegativeParameter(f64),
    #[error("edge {0}: rejection sampling exhausted 10^6 draws (gamma far above the weight)")]
    PathologicalSpec(usize),
    #[error("brute force over 2^(n*k) needs n*k <= {0}, got {1}")]
    TooLarge(usize, usize),
    #[error("psi must be > 0, got {0}")]
    NonPositivePsi(f64),
    #[error("latent instance is not expansion stable at psi {0} (margin {1:?})")]
    LatentNotStable(f64, Option<f64>),
    #[error(transparent)]
    Stability(Box<crate::stability::StabilityError>),
    #[error("eps must lie in (0, 1/k), got {0} with k = {1}")]
    BadEps(f64, usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseFamily {
    #[default]
    TruncatedNormal,
}

/// Noise specification: per-node-label and per-edge deviation parameters,
/// activation fractions, and the seed every draw flows through.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub sigma: Vec<f64>,
    pub gamma: Vec<f64>,
    pub rho: f64,
    pub eta: f64,
    #[serde(default)]
    pub family: NoiseFamily,
    pub seed: u64,
}

impl NoiseSpec {
    /// Uniform parameters across all nodes and edges.
    pub fn uniform(inst: &Instance, sigma: f64, gamma: f64, rho: f64, eta: f64, seed: u64) -> Self {
        NoiseSpec {
            sigma: vec![sigma; inst.node_count() * inst.label_count()],
            gamma: vec![gamma; inst.edge_count()],
            rho,
            eta,
            family: NoiseFamily::TruncatedNormal,
            seed,
        }
    }

    fn validate(&self, inst: &Instance) -> Result<(), NoiseError> {
        let nk = inst.node_count() * inst.label_count();
        if self.sigma.len() != nk {
            return Err(NoiseError::SigmaShape(nk, self.sigma.len()));
        }
        if self.gamma.len() != inst.edge_count() {
            return Err(NoiseError::GammaShape(inst.edge_count(), self.gamma.len()));
        }
        for &f in [self.rho, self.eta].iter() {
            if !(0.0..=1.0).contains(&f) {
                return Err(NoiseError::BadFraction(f));
            }
        }
        if let Some(&bad) = self.sigma.iter().chain(&self.gamma).find(|v| **v < 0.0) {
            return Err(NoiseError::NegativeParameter(bad));
        }
        Ok(())
    }

    /// Spec with the seed offset for an independent trial stream.
    pub fn for_trial(&self, trial: u64) -> NoiseSpec {
        let mut s = self.clone();
        s.seed = self
            .seed
            .wrapping_add(trial.wrapping_mul(0x9E37_79B9_7F4A_7C15));
        s
    }
}

/// One draw from the model, with the sampler's bookkeeping.
#[derive(Debug, Clone)]
pub struct NoisySample {
    pub instance: Instance,
    pub active_nodes: Vec<usize>,
    pub active_edges: Vec<usize>,
    /// Analytic recentering offset applied per edge (0 where inactive or
    /// truncation is immaterial).
    pub recenter_offset: Vec<f64>,
    /// Analytic residual mean bias left after recentering, per edge.
    pub residual_bias: Vec<f64>,
}

fn normal_cdf(z: f64) -> f64 {
    0.5 * (1.0 + erf(z / std::f64::consts::SQRT_2))
}

fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Mean of a standard normal truncated to `(beta, inf)`.
fn truncated_mean(beta: f64) -> f64 {
    if beta < -6.0 {
        return 0.0;
    }
    let tail = 1.0 - normal_cdf(beta);
    if tail <= f64::MIN_POSITIVE {
        // degenerate truncation; dominated by the rejection guard anyway
        return beta;
    }
    normal_pdf(beta) / tail
}

fn choose_without_replacement(count: usize, total: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..total).collect();
    for i in 0..count.min(total) {
        let j = rng.gen_range(i..total);
        idx.swap(i, j);
    }
    let mut chosen: Vec<usize> = idx[..count.min(total)].to_vec();
    chosen.sort_unstable();
    chosen
}

/// Draw an observed instance: active node costs get plain normal noise,
/// active edge weights get recentered lower-truncated normal noise with the
/// support bound `-w(u, v)` enforced by rejection.
pub fn sample_noisy_instance(latent: &Instance, spec: &NoiseSpec) -> Result<NoisySample, NoiseError> {
    spec.validate(latent)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (n, k, m) = (
        latent.node_count(),
        latent.label_count(),
        latent.edge_count(),
    );

    let node_count = (spec.rho * n as f64).round() as usize;
    let edge_count = (spec.eta * m as f64).round() as usize;
    let active_nodes = choose_without_replacement(node_count, n, &mut rng);
    let active_edges = choose_without_replacement(edge_count, m, &mut rng);

    let mut costs = latent.costs().to_vec();
    for &u in &active_nodes {
        for i in 0..k {
            let sigma = spec.sigma[u * k + i];
            if sigma > 0.0 {
                let z: f64 = StandardNormal.sample(&mut rng);
                costs[u * k + i] += sigma * z;
            }
        }
    }

    let mut weights = latent.weights().to_vec();
    let mut recenter_offset = vec![0.0; m];
    let mut residual_bias = vec![0.0; m];
    for &e in &active_edges {
        let gamma = spec.gamma[e];
        if gamma == 0.0 {
            continue;
        }
        let w = latent.weight(e);
        let bound = -w;
        let beta = bound / gamma;
        let offset = gamma * truncated_mean(beta);
        recenter_offset[e] = offset;
        residual_bias[e] = gamma * truncated_mean((bound + offset) / gamma) - offset;
        let mut accepted = None;
        for _ in 0..1_000_000 {
            let z: f64 = StandardNormal.sample(&mut rng);
            let v = gamma * z - offset;
            if v > bound {
                accepted = Some(v);
                break;
            }
        }
        let v = accepted.ok_or(NoiseError::PathologicalSpec(e))?;
        weights[e] += v;
    }

    Ok(NoisySample {
        instance: latent.with_parameters(costs, weights)?,
        active_nodes,
        active_edges,
        recenter_offset,
        residual_bias,
    })
}

/// The close-to-target rounding: blends `x' = eps x + (1 - eps) xbar`,
/// draws one label `i` and one threshold `r in (0, 1/k)`, and sets
/// `h(u) = i` where `x'_u(i) > r`, keeping `xbar(u)` elsewhere. The output
/// is `xbar` or one of its `i`-expansions.
pub fn eps_close_round(
    node_marginals: &[f64],
    xbar: &Labeling,
    k: usize,
    eps: f64,
    rng: &mut ChaCha8Rng,
) -> Result<Labeling, NoiseError> {
    if !(eps > 0.0 && eps < 1.0 / k as f64) {
        return Err(NoiseError::BadEps(eps, k));
    }
    let n = xbar.len();
    assert_eq!(node_marginals.len(), n * k);
    let i = rng.gen_range(0..k);
    let r: f64 = rng.gen_range(0.0..1.0 / k as f64);
    let mut labels = Vec::with_capacity(n);
    for u in 0..n {
        let base = if xbar.label(u) == i { 1.0 } else { 0.0 };
        let blended = eps * node_marginals[u * k + i] + (1.0 - eps) * base;
        labels.push(if blended > r { i } else { xbar.label(u) });
    }
    Ok(Labeling::new(labels))
}

/// Per-label threshold rounding: one threshold `r_i` per label, output
/// `(u, i)` set iff `x_u(i) > r_i`. The output is a 0/1 table, not
/// necessarily a labeling.
pub fn r_round(node_marginals: &[f64], k: usize, rng: &mut ChaCha8Rng) -> Vec<u8> {
    assert_eq!(node_marginals.len() % k, 0);
    let n = node_marginals.len() / k;
    let thresholds: Vec<f64> = (0..k).map(|_| rng.gen_range(0.0..1.0)).collect();
    let mut out = vec![0u8; n * k];
    for u in 0..n {
        for i in 0..k {
            if node_marginals[u * k + i] > thresholds[i] {
                out[u * k + i] = 1;
            }
        }
    }
    out
}

const DSWHP_LIMIT: usize = 20;

/// Exact sup over 0/1 node tables of the metric-form objective difference.
pub fn exact_deviation_sup(
    diff_costs: &[f64],
    diff_weights: &[f64],
    inst: &Instance,
) -> Result<f64, NoiseError> {
    let (n, k) = (inst.node_count(), inst.label_count());
    let nk = n * k;
    if nk > DSWHP_LIMIT {
        return Err(NoiseError::TooLarge(DSWHP_LIMIT, nk));
    }
    let mask_of = |bits: u64, u: usize| (bits >> (u * k)) & ((1u64 << k) - 1);
    let mut sup = 0.0f64;
    for bits in 0u64..(1u64 << nk) {
        let mut v = 0.0;
        for (idx, &c) in diff_costs.iter().enumerate() {
            if bits >> idx & 1 == 1 {
                v += c;
            }
        }
        for (e, &(u, w)) in inst.edges().iter().enumerate() {
            let d = (mask_of(bits, u) ^ mask_of(bits, w)).count_ones() as f64 * 0.5;
            v += diff_weights[e] * d;
        }
        sup = sup.max(v.abs());
    }
    Ok(sup)
}

#[derive(Debug, Clone, Serialize)]
pub struct DeviationStats {
    pub trials: usize,
    pub exceedances: usize,
    pub exceedance_rate: f64,
    pub mean_sup: f64,
    pub mean_bound: f64,
    pub max_residual_bias: f64,
}

/// Monte Carlo check of the deviation guarantee: per trial, the exact sup
/// over 0/1 tables is compared against
/// `c sqrt(nk) sqrt(sum sigma^2 + (k^2/4) sum gamma^2)` over the active
/// entries.
pub fn validate_dswhp(
    latent: &Instance,
    spec: &NoiseSpec,
    trials: usize,
    c_const: f64,
) -> Result<DeviationStats, NoiseError> {
    spec.validate(latent)?;
    let (n, k) = (latent.node_count(), latent.label_count());
    let nk = n * k;
    if nk > DSWHP_LIMIT {
        return Err(NoiseError::TooLarge(DSWHP_LIMIT, nk));
    }
    let mut exceedances = 0;
    let mut sup_total = 0.0;
    let mut bound_total = 0.0;
    let mut max_bias = 0.0f64;
    for t in 0..trials {
        let sample = sample_noisy_instance(latent, &spec.for_trial(t as u64))?;
        let diff_costs: Vec<f64> = sample
            .instance
            .costs()
            .iter()
            .zip(latent.costs())
            .map(|(a, b)| a - b)
            .collect();
        let diff_weights: Vec<f64> = sample
            .instance
            .weights()
            .iter()
            .zip(latent.weights())
            .map(|(a, b)| a - b)
            .collect();
        let sup = exact_deviation_sup(&diff_costs, &diff_weights, latent)?;

        let mut var = 0.0;
        for &u in &sample.active_nodes {
            for i in 0..k {
                var += spec.sigma[u * k + i].powi(2);
            }
        }
        for &e in &sample.active_edges {
            var += (k * k) as f64 / 4.0 * spec.gamma[e].powi(2);
        }
        let bound = c_const * (nk as f64).sqrt() * var.sqrt();
        if sup > bound {
            exceedances += 1;
        }
        sup_total += sup;
        bound_total += bound;
        for &b in &sample.residual_bias {
            max_bias = max_bias.max(b.abs());
        }
    }
    Ok(DeviationStats {
        trials,
        exceedances,
        exceedance_rate: exceedances as f64 / trials.max(1) as f64,
        mean_sup: sup_total / trials.max(1) as f64,
        mean_bound: bound_total / trials.max(1) as f64,
        max_residual_bias: max_bias,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct PersistenceStats {
    pub trials: usize,
    pub exceedances: usize,
    pub exceedance_rate: f64,
    pub mean_error: f64,
    pub mean_bound: f64,
    pub error_quantiles: [f64; 3],
}

/// Monte Carlo check of near-persistence: per trial, solve the noisy local
/// LP and compare the recovery error against
/// `(2/psi) c sqrt(nk) sqrt(sum sigma^2 + k^2 sum gamma^2)` over the active
/// entries.
pub fn validate_apmap(
    latent: &Instance,
    xbar: &Labeling,
    spec: &NoiseSpec,
    psi: f64,
    trials: usize,
    c_const: f64,
) -> Result<PersistenceStats, NoiseError> {
    spec.validate(latent)?;
    if psi <= 0.0 || !psi.is_finite() {
        return Err(NoiseError::NonPositivePsi(psi));
    }
    xbar.validate(latent)?;
    let report = crate::stability::check_expansion_stability(latent, xbar, psi)
        .map_err(|e| NoiseError::Stability(Box::new(e)))?;
    if !report.at_least_boundary() {
        return Err(NoiseError::LatentNotStable(psi, report.margin));
    }
    let (n, k) = (latent.node_count(), latent.label_count());
    let nk = n * k;
    let xbar_marginals = xbar.node_marginals(k);

    let mut exceedances = 0;
    let mut errors = Vec::with_capacity(trials);
    let mut bound_total = 0.0;
    for t in 0..trials {
        let sample = sample_noisy_instance(latent, &spec.for_trial(t as u64))?;
        let sol = locallp::solve_local_lp(&sample.instance)?;
        let err = locallp::recovery_error(sol.node_marginals(), &xbar_marginals)?;

        let mut var = 0.0;
        for &u in &sample.active_nodes {
            for i in 0..k {
                var += spec.sigma[u * k + i].powi(2);
            }
        }
        for &e in &sample.active_edges {
            var += (k * k) as f64 * spec.gamma[e].powi(2);
        }
        let bound = 2.0 / psi * c_const * (nk as f64).sqrt() * var.sqrt();
        if err > bound {
            exceedances += 1;
        }
        errors.push(err);
        bound_total += bound;
    }
    errors.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let quantile = |q: f64| -> f64 {
        if errors.is_empty() {
            return 0.0;
        }
        let idx = ((errors.len() - 1) as f64 * q).round() as usize;
        errors[idx]
    };
    Ok(PersistenceStats {
        trials,
        exceedances,
        exceedance_rate: exceedances as f64 / trials.max(1) as f64,
        mean_error: errors.iter().sum::<f64>() / trials.max(1) as f64,
        mean_bound: bound_total / trials.max(1) as f64,
        error_quantiles: [quantile(0.5), quantile(0.9), quantile(1.0)],
    })
}
