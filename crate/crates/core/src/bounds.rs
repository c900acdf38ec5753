//! Curvature and recovery bounds.
//!
//! On a (2,1,psi)-expansion stable instance, any point of the local polytope
//! with maximal edge diagonals that is close to the MAP in objective is also
//! close in solution space: recovery error <= objective gap / psi. The
//! deviation variants bound the recovery error of a *noisy* instance's LP
//! solution through the distance between the two objectives; suprema over
//! the restricted set are upper-bounded by LPs over the full local polytope.

use crate::instance::{Instance, InstanceError, Labeling, ObjectiveVector};
use crate::locallp::{self, FractionalSolution, LocalLpError, Provenance};
use crate::lp::{self, LpStatus};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BoundError {
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error(transparent)]
    LocalLp(#[from] LocalLpError),
    #[error("psi must be > 0, got {0}")]
    NonPositivePsi(f64),
    #[error("point must have maximal edge diagonals (project it first)")]
    NotMaxDiagonal,
    #[error("deviation LP terminated with status {0:?}")]
    Solve(LpStatus),
    #[error("noise parameter {0} must be finite and >= 0")]
    BadNoiseParameter(f64),
}

/// `(1/psi) * |<theta, x> - <theta, xbar>|` with the metric-form objective
/// for the fractional point. Requires a point with maximal edge diagonals,
/// where the metric form agrees with the full objective.
pub fn curvature_bound(
    theta: &ObjectiveVector,
    xbar: &Labeling,
    x: &FractionalSolution,
    psi: f64,
) -> Result<f64, BoundError> {
    if psi <= 0.0 || !psi.is_finite() {
        return Err(BoundError::NonPositivePsi(psi));
    }
    if x.provenance() == Provenance::RawLp {
        return Err(BoundError::NotMaxDiagonal);
    }
    let gap = theta.metric_objective(x.node_marginals()) - theta.dot_labeling(xbar);
    Ok(gap.abs() / psi)
}

/// `sup over x in L(G) of <theta_bar - theta_hat, x - phi(xbar)>`, one LP.
/// Non-negative since `phi(xbar)` is feasible.
pub fn d_up(
    theta_bar: &ObjectiveVector,
    theta_hat: &ObjectiveVector,
    xbar: &Labeling,
    inst: &Instance,
) -> Result<f64, BoundError> {
    let diff = theta_bar.difference(theta_hat);
    let sup = maximize_over_local_polytope(&diff, inst)?;
    Ok(sup - diff.dot_labeling(xbar))
}

/// `d_up / psi + (1/2) ||phi(xhat_map)_V - phi(xbar)_V||_1`.
pub fn unconditional_bound(
    theta_bar: &ObjectiveVector,
    theta_hat: &ObjectiveVector,
    inst: &Instance,
    xbar: &Labeling,
    xhat_map: &Labeling,
    psi: f64,
) -> Result<f64, BoundError> {
    if psi <= 0.0 || !psi.is_finite() {
        return Err(BoundError::NonPositivePsi(psi));
    }
    let k = inst.label_count();
    let dup = d_up(theta_bar, theta_hat, xbar, inst)?;
    let hamming =
        locallp::recovery_error(&xhat_map.node_marginals(k), &xbar.node_marginals(k))?;
    Ok(dup / psi + hamming)
}

/// Upper bound on `sup |<theta_hat - theta_bar, x>|` over the max-diagonal
/// subset, computed as the max of the two relaxed LPs over all of `L(G)`.
pub fn symmetric_deviation_upper(
    theta_bar: &ObjectiveVector,
    theta_hat: &ObjectiveVector,
    inst: &Instance,
) -> Result<f64, BoundError> {
    let diff = theta_hat.difference(theta_bar);
    let neg = theta_bar.difference(theta_hat);
    let plus = maximize_over_local_polytope(&diff, inst)?;
    let minus = maximize_over_local_polytope(&neg, inst)?;
    Ok(plus.max(minus))
}

fn maximize_over_local_polytope(
    objective: &ObjectiveVector,
    inst: &Instance,
) -> Result<f64, BoundError> {
    let neg_node: Vec<f64> = objective.node_part().iter().map(|c| -c).collect();
    let neg_edge: Vec<f64> = objective.edge_weights().iter().map(|w| -w).collect();
    let program = locallp::build_weighted_lp(inst, &neg_node, &neg_edge);
    let sol = lp::solve(&program).map_err(LocalLpError::from)?;
    if !sol.is_optimal() {
        return Err(BoundError::Solve(sol.status));
    }
    Ok(-sol.objective)
}

/// Normalized recovery bound for d-regular graphs under uniform noise:
/// `2 c k sqrt(rho sigma^2 + (eta d k / 8) gamma^2) / psi`. The node count
/// cancels in the normalized form; it is validated here because the bound
/// only speaks about an instance with at least one node.
#[allow(clippy::too_many_arguments)]
pub fn mapreg_bound(
    n: usize,
    k: usize,
    d: f64,
    rho: f64,
    eta: f64,
    sigma: f64,
    gamma: f64,
    psi: f64,
    c_const: f64,
) -> Result<f64, BoundError> {
    if psi <= 0.0 || !psi.is_finite() {
        return Err(BoundError::NonPositivePsi(psi));
    }
    assert!(n > 0 && k > 0);
    for v in [d, rho, eta, sigma, gamma, c_const] {
        if v < 0.0 || !v.is_finite() {
            return Err(BoundError::BadNoiseParameter(v));
        }
    }
    let inner = rho * sigma * sigma + eta * d * (k as f64) / 8.0 * gamma * gamma;
    Ok(2.0 * c_const * (k as f64) * inner.sqrt() / psi)
}

/// Full bound evaluation for an observed instance against a stable instance
/// sharing the graph, with target labeling `x_t` (normally the observed
/// MAP, which makes it the stable instance's MAP as well).
#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub psi: f64,
    pub objective_gap: f64,
    pub curvature_bound: f64,
    pub normalized_curvature_bound: f64,
    pub recovery_error: f64,
    pub normalized_recovery_error: f64,
    pub d_up: Option<f64>,
    pub unconditional_bound: Option<f64>,
    pub normalized_unconditional_bound: Option<f64>,
    pub symmetric_deviation_upper: Option<f64>,
    pub lp_integral: bool,
}

/// Solve the observed instance's local LP, project its node marginals to
/// maximal diagonals, and evaluate the curvature and deviation bounds in the
/// stable instance's objective.
pub fn evaluate_bounds(
    observed: &Instance,
    stable: &Instance,
    x_t: &Labeling,
    psi: f64,
    with_deviation: bool,
) -> Result<BoundReport, BoundError> {
    if psi <= 0.0 || !psi.is_finite() {
        return Err(BoundError::NonPositivePsi(psi));
    }
    x_t.validate(observed)?;
    let n = observed.node_count() as f64;
    let k = observed.label_count();
    let theta_bar = stable.objective();
    let theta_hat = observed.objective();

    let xhat = locallp::solve_local_lp(observed)?;
    let projected = locallp::project_to_lstar(xhat.node_marginals(), observed)?;

    let gap = theta_bar.metric_objective(projected.node_marginals())
        - theta_bar.dot_labeling(x_t);
    let curvature = curvature_bound(&theta_bar, x_t, &projected, psi)?;
    let err = locallp::recovery_error(
        projected.node_marginals(),
        &x_t.node_marginals(k),
    )?;

    let (dup, uncond, sym) = if with_deviation {
        let dup = d_up(&theta_bar, &theta_hat, x_t, observed)?;
        let uncond = unconditional_bound(&theta_bar, &theta_hat, observed, x_t, x_t, psi)?;
        let sym = symmetric_deviation_upper(&theta_bar, &theta_hat, observed)?;
        (Some(dup), Some(uncond), Some(sym))
    } else {
        (None, None, None)
    };

    Ok(BoundReport {
        psi,
        objective_gap: gap,
        curvature_bound: curvature,
        normalized_curvature_bound: curvature / n,
        recovery_error: err,
        normalized_recovery_error: err / n,
        d_up: dup,
        unconditional_bound: uncond,
        normalized_unconditional_bound: uncond.map(|u| u / n),
        symmetric_deviation_upper: sym,
        lp_integral: xhat.is_integral(),
    })
}
