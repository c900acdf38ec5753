//! The local (pairwise) LP relaxation and its diagnostics.
//!
//! Variables are node marginals `x_u(i)` and edge marginals `x_uv(i, j)`
//! constrained by per-node normalization and per-edge marginalization. The
//! module also projects node marginals into the subset of the local polytope
//! whose edge diagonals are maximal (`x_uv(i,i) = min(x_u(i), x_v(i))`),
//! which is where every LP optimum lives when weights are positive.

use crate::instance::{Instance, Labeling};
use crate::lp::{self, LinearProgram, LpError, LpStatus, Relation, Tolerances};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LocalLpError {
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("LP solve did not reach an optimum: {0:?}")]
    Solve(LpStatus),
    #[error("node marginals violate normalization at node {0} (sum {1})")]
    InfeasibleMarginals(usize, f64),
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    RawLp,
    LstarCertified,
    Integral,
}

/// Node and edge marginals in the local polytope.
#[derive(Debug, Clone)]
pub struct FractionalSolution {
    n: usize,
    k: usize,
    node: Vec<f64>,
    edge: Vec<f64>,
    provenance: Provenance,
}

impl FractionalSolution {
    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn label_count(&self) -> usize {
        self.k
    }

    pub fn node_marginals(&self) -> &[f64] {
        &self.node
    }

    pub fn node_marginal(&self, u: usize, i: usize) -> f64 {
        self.node[u * self.k + i]
    }

    /// `x_uv(i, j)` for edge index `e = (u, v)` with `u < v`.
    pub fn edge_marginal(&self, e: usize, i: usize, j: usize) -> f64 {
        self.edge[e * self.k * self.k + i * self.k + j]
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn is_integral(&self) -> bool {
        self.provenance == Provenance::Integral
    }

    /// The labeling of an integral solution.
    pub fn to_labeling(&self) -> Option<Labeling> {
        if !self.is_integral() {
            return None;
        }
        let mut out = Vec::with_capacity(self.n);
        for u in 0..self.n {
            let i = (0..self.k).find(|&i| self.node[u * self.k + i] > 0.5)?;
            out.push(i);
        }
        Some(Labeling::new(out))
    }

    pub fn from_labeling(x: &Labeling, inst: &Instance) -> Self {
        let (n, k) = (inst.node_count(), inst.label_count());
        let node = x.node_marginals(k);
        let mut edge = vec![0.0; inst.edge_count() * k * k];
        for (e, &(u, v)) in inst.edges().iter().enumerate() {
            edge[e * k * k + x.label(u) * k + x.label(v)] = 1.0;
        }
        FractionalSolution {
            n,
            k,
            node,
            edge,
            provenance: Provenance::Integral,
        }
    }

    /// Check normalization, marginalization, and (when claimed) the
    /// min-diagonal property, all within `tol`.
    pub fn verify(&self, inst: &Instance, tol: f64) -> Result<(), String> {
        let k = self.k;
        for u in 0..self.n {
            let s: f64 = (0..k).map(|i| self.node[u * k + i]).sum();
            if (s - 1.0).abs() > tol {
                return Err(format!("node {u} normalization off by {}", s - 1.0));
            }
        }
        for (e, &(u, v)) in inst.edges().iter().enumerate() {
            for j in 0..k {
                let s: f64 = (0..k).map(|i| self.edge_marginal(e, i, j)).sum();
                if (s - self.node_marginal(v, j)).abs() > tol {
                    return Err(format!("edge {e} marginalization to v label {j} broken"));
                }
            }
            for i in 0..k {
                let s: f64 = (0..k).map(|j| self.edge_marginal(e, i, j)).sum();
                if (s - self.node_marginal(u, i)).abs() > tol {
                    return Err(format!("edge {e} marginalization to u label {i} broken"));
                }
            }
            if self.provenance != Provenance::RawLp {
                for i in 0..k {
                    let want = self.node_marginal(u, i).min(self.node_marginal(v, i));
                    if (self.edge_marginal(e, i, i) - want).abs() > tol {
                        return Err(format!("edge {e} diagonal {i} not at the min"));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Variable layout of the local LP: node marginals first, then edge
/// marginals.
pub fn node_var(k: usize, u: usize, i: usize) -> usize {
    u * k + i
}

pub fn edge_var(n: usize, k: usize, e: usize, i: usize, j: usize) -> usize {
    n * k + e * k * k + i * k + j
}

/// The local LP over `L(G)`: `n*k + m*k^2` variables in `[0, 1]`, one
/// normalization row per node, `2k` marginalization rows per edge, Potts
/// cost row.
pub fn build_local_lp(inst: &Instance) -> LinearProgram {
    build_weighted_lp(inst, inst.costs(), inst.weights())
}

/// Same constraint set, arbitrary Potts-structured objective. Used for the
/// deviation LPs where the "costs" are differences and may be negative.
pub fn build_weighted_lp(inst: &Instance, node_cost: &[f64], edge_weight: &[f64]) -> LinearProgram {
    let (n, k, m) = (inst.node_count(), inst.label_count(), inst.edge_count());
    assert_eq!(node_cost.len(), n * k);
    assert_eq!(edge_weight.len(), m);
    let mut lp = LinearProgram::new();
    for u in 0..n {
        for i in 0..k {
            lp.add_var(0.0, 1.0, node_cost[u * k + i]);
        }
    }
    for e in 0..m {
        for i in 0..k {
            for j in 0..k {
                let cost = if i != j { edge_weight[e] } else { 0.0 };
                lp.add_var(0.0, 1.0, cost);
            }
        }
    }
    for u in 0..n {
        let coeffs: Vec<(usize, f64)> = (0..k).map(|i| (node_var(k, u, i), 1.0)).collect();
        lp.add_row(coeffs, Relation::Eq, 1.0);
    }
    for (e, &(u, v)) in inst.edges().iter().enumerate() {
        for j in 0..k {
            let mut coeffs: Vec<(usize, f64)> =
                (0..k).map(|i| (edge_var(n, k, e, i, j), 1.0)).collect();
            coeffs.push((node_var(k, v, j), -1.0));
            lp.add_row(coeffs, Relation::Eq, 0.0);
        }
        for i in 0..k {
            let mut coeffs: Vec<(usize, f64)> =
                (0..k).map(|j| (edge_var(n, k, e, i, j), 1.0)).collect();
            coeffs.push((node_var(k, u, i), -1.0));
            lp.add_row(coeffs, Relation::Eq, 0.0);
        }
    }
    lp
}

/// Fraction threshold under which an LP vertex entry counts as 0/1.
const INTEGRALITY_TOL: f64 = 1e-6;

pub fn solve_local_lp(inst: &Instance) -> Result<FractionalSolution, LocalLpError> {
    solve_local_lp_with(inst, &Tolerances::default())
}

pub fn solve_local_lp_with(
    inst: &Instance,
    tol: &Tolerances,
) -> Result<FractionalSolution, LocalLpError> {
    let program = build_local_lp(inst);
    let sol = lp::solve_with(&program, tol)?;
    if !sol.is_optimal() {
        return Err(LocalLpError::Solve(sol.status));
    }
    let (n, k, m) = (inst.node_count(), inst.label_count(), inst.edge_count());
    let node = sol.primal[..n * k].to_vec();
    let edge = sol.primal[n * k..n * k + m * k * k].to_vec();

    let integral = sol
        .primal
        .iter()
        .all(|&x| x.abs() <= INTEGRALITY_TOL || (x - 1.0).abs() <= INTEGRALITY_TOL);
    if integral {
        let rounded = FractionalSolution {
            n,
            k,
            node: node.iter().map(|&x| x.round()).collect(),
            edge: edge.iter().map(|&x| x.round()).collect(),
            provenance: Provenance::Integral,
        };
        // re-verify the rounding before claiming integrality
        let obj_rounded = lp_objective(inst, &rounded);
        let ok = rounded.verify(inst, 1e-9).is_ok()
            && (obj_rounded - sol.objective).abs() <= 1e-6 * (1.0 + sol.objective.abs());
        if ok {
            return Ok(rounded);
        }
    }
    Ok(FractionalSolution {
        n,
        k,
        node,
        edge,
        provenance: Provenance::RawLp,
    })
}

/// Potts objective of a fractional point (full edge marginals).
pub fn lp_objective(inst: &Instance, x: &FractionalSolution) -> f64 {
    let k = inst.label_count();
    let mut total = 0.0;
    for u in 0..inst.node_count() {
        for i in 0..k {
            total += inst.cost(u, i) * x.node_marginal(u, i);
        }
    }
    for e in 0..inst.edge_count() {
        let mut cut = 0.0;
        for i in 0..k {
            for j in 0..k {
                if i != j {
                    cut += x.edge_marginal(e, i, j);
                }
            }
        }
        total += inst.weight(e) * cut;
    }
    total
}

/// Complete node marginals to full edge marginals with maximal diagonals:
/// `x_uv(i,i) = min(x_u(i), x_v(i))`, residual supply/demand spread by the
/// northwest-corner rule. Deterministic and degenerate-safe.
pub fn project_to_lstar(
    node_marginals: &[f64],
    inst: &Instance,
) -> Result<FractionalSolution, LocalLpError> {
    let (n, k, m) = (inst.node_count(), inst.label_count(), inst.edge_count());
    if node_marginals.len() != n * k {
        return Err(LocalLpError::DimensionMismatch(node_marginals.len(), n * k));
    }
    for u in 0..n {
        let s: f64 = (0..k).map(|i| node_marginals[u * k + i]).sum();
        if (s - 1.0).abs() > 1e-7 {
            return Err(LocalLpError::InfeasibleMarginals(u, s));
        }
    }
    let mut edge = vec![0.0; m * k * k];
    for (e, &(u, v)) in inst.edges().iter().enumerate() {
        let xu = &node_marginals[u * k..(u + 1) * k];
        let xv = &node_marginals[v * k..(v + 1) * k];
        let base = e * k * k;
        let mut supply = vec![0.0; k];
        let mut demand = vec![0.0; k];
        for i in 0..k {
            let d = xu[i].min(xv[i]);
            edge[base + i * k + i] = d;
            supply[i] = (xu[i] - d).max(0.0);
            demand[i] = (xv[i] - d).max(0.0);
        }
        let (mut i, mut j) = (0, 0);
        while i < k && j < k {
            if supply[i] <= 1e-15 {
                i += 1;
                continue;
            }
            if demand[j] <= 1e-15 {
                j += 1;
                continue;
            }
            let a = supply[i].min(demand[j]);
            edge[base + i * k + j] += a;
            supply[i] -= a;
            demand[j] -= a;
        }
    }
    let integral = node_marginals.iter().all(|&x| x == 0.0 || x == 1.0);
    Ok(FractionalSolution {
        n,
        k,
        node: node_marginals.to_vec(),
        edge,
        provenance: if integral {
            Provenance::Integral
        } else {
            Provenance::LstarCertified
        },
    })
}

/// Half the L1 distance between two node-marginal vectors.
pub fn recovery_error(a: &[f64], b: &[f64]) -> Result<f64, LocalLpError> {
    if a.len() != b.len() {
        return Err(LocalLpError::DimensionMismatch(a.len(), b.len()));
    }
    Ok(0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>())
}

/// Edge separation `d(u, v) = (1/2) sum_i |x_u(i) - x_v(i)|`. Meaningful as
/// the edge's cut mass when the solution has maximal diagonals.
pub fn edge_separation(x: &FractionalSolution, edge: (usize, usize)) -> f64 {
    let k = x.label_count();
    let (u, v) = edge;
    let mut s = 0.0;
    for i in 0..k {
        s += (x.node_marginal(u, i) - x.node_marginal(v, i)).abs();
    }
    0.5 * s
}
