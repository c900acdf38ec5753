//! Problem instances, labelings, and the brute-force oracles shared by the
//! rest of the crate.
//!
//! An instance is an undirected simple graph with per-node label costs
//! `c(u, i)` and per-edge weights `w(u, v)`. A labeling assigns one of `k`
//! labels to every node and pays `c(u, x(u))` per node plus `w(u, v)` on
//! every edge whose endpoints disagree. Labels are 0-indexed everywhere in
//! memory; 1-indexed forms exist only in the text file format.

use thiserror::Error;

/// Exhaustive-search guard: `k^n` (or `2^q` for expansion enumeration) must
/// stay at or below this.
pub const BRUTE_FORCE_LIMIT: f64 = 1e7;

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("node index {0} out of range (n = {1})")]
    NodeOutOfRange(usize, usize),
    #[error("label index {0} out of range (k = {1})")]
    LabelOutOfRange(usize, usize),
    #[error("self-loop on node {0}")]
    SelfLoop(usize),
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(usize, usize),
    #[error("edge ({0}, {1}) has invalid weight {2} (need finite, >= 0)")]
    BadWeight(usize, usize, f64),
    #[error("cost c({0}, {1}) = {2} is not finite")]
    BadCost(usize, usize, f64),
    #[error("cost table has {0} entries, expected n*k = {1}")]
    CostShape(usize, usize),
    #[error("labeling has {0} entries, expected {1}")]
    LabelingShape(usize, usize),
    #[error("instance too large for exhaustive search ({0} candidates)")]
    TooLargeForBruteForce(f64),
}

/// A ferromagnetic Potts / uniform metric labeling instance.
///
/// Immutable after construction; shared freely across threads.
///
/// Edge weights are expected strictly positive for model inputs. Weights of
/// exactly zero are tolerated (they contribute nothing and can appear on the
/// boundary of the repair program's feasible set); negative weights are
/// rejected.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    n: usize,
    k: usize,
    edges: Vec<(usize, usize)>,
    costs: Vec<f64>,
    weights: Vec<f64>,
}

impl Instance {
    /// Build an instance from a cost table (row-major, `n * k`) and an edge
    /// list with weights. Edges are stored with `u < v` in input order.
    pub fn new(
        n: usize,
        k: usize,
        costs: Vec<f64>,
        edges: Vec<(usize, usize, f64)>,
    ) -> Result<Self, InstanceError> {
        if costs.len() != n * k {
            return Err(InstanceError::CostShape(costs.len(), n * k));
        }
        for (idx, &c) in costs.iter().enumerate() {
            if !c.is_finite() {
                return Err(InstanceError::BadCost(idx / k, idx % k, c));
            }
        }
        let mut edge_list = Vec::with_capacity(edges.len());
        let mut weights = Vec::with_capacity(edges.len());
        let mut seen = std::collections::HashSet::new();
        for (u, v, w) in edges {
            if u >= n {
                return Err(InstanceError::NodeOutOfRange(u, n));
            }
            if v >= n {
                return Err(InstanceError::NodeOutOfRange(v, n));
            }
            if u == v {
                return Err(InstanceError::SelfLoop(u));
            }
            if !w.is_finite() || w < 0.0 {
                return Err(InstanceError::BadWeight(u, v, w));
            }
            let key = (u.min(v), u.max(v));
            if !seen.insert(key) {
                return Err(InstanceError::DuplicateEdge(key.0, key.1));
            }
            edge_list.push(key);
            weights.push(w);
        }
        Ok(Instance {
            n,
            k,
            edges: edge_list,
            costs,
            weights,
        })
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn label_count(&self) -> usize {
        self.k
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn cost(&self, u: usize, i: usize) -> f64 {
        self.costs[u * self.k + i]
    }

    pub fn costs(&self) -> &[f64] {
        &self.costs
    }

    pub fn weight(&self, e: usize) -> f64 {
        self.weights[e]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Same graph, different costs and weights.
    pub fn with_parameters(&self, costs: Vec<f64>, weights: Vec<f64>) -> Result<Self, InstanceError> {
        let edges = self
            .edges
            .iter()
            .zip(&weights)
            .map(|(&(u, v), &w)| (u, v, w))
            .collect();
        Instance::new(self.n, self.k, costs, edges)
    }

    /// The objective vector view of this instance.
    pub fn objective(&self) -> ObjectiveVector {
        ObjectiveVector {
            n: self.n,
            k: self.k,
            edges: self.edges.clone(),
            node: self.costs.clone(),
            edge_weights: self.weights.clone(),
        }
    }
}

/// An integral assignment of every node to a label in `0..k`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Labeling(Vec<usize>);

impl Labeling {
    pub fn new(assignment: Vec<usize>) -> Self {
        Labeling(assignment)
    }

    pub fn label(&self, u: usize) -> usize {
        self.0[u]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn validate(&self, inst: &Instance) -> Result<(), InstanceError> {
        if self.0.len() != inst.node_count() {
            return Err(InstanceError::LabelingShape(self.0.len(), inst.node_count()));
        }
        for &l in &self.0 {
            if l >= inst.label_count() {
                return Err(InstanceError::LabelOutOfRange(l, inst.label_count()));
            }
        }
        Ok(())
    }

    /// The 0/1 node-marginal view: `n * k` vector with a one at `(u, x(u))`.
    pub fn node_marginals(&self, k: usize) -> Vec<f64> {
        let mut m = vec![0.0; self.0.len() * k];
        for (u, &l) in self.0.iter().enumerate() {
            m[u * k + l] = 1.0;
        }
        m
    }
}

/// The objective as a vector of dimension `n*k + m*k^2`: node part
/// `theta(u, i) = c(u, i)`, edge part `theta(u, v, i, j) = w(u, v) * 1[i != j]`
/// stored compactly as one scalar per edge (Potts structure).
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveVector {
    n: usize,
    k: usize,
    edges: Vec<(usize, usize)>,
    node: Vec<f64>,
    edge_weights: Vec<f64>,
}

impl ObjectiveVector {
    pub fn new(
        n: usize,
        k: usize,
        edges: Vec<(usize, usize)>,
        node: Vec<f64>,
        edge_weights: Vec<f64>,
    ) -> Self {
        assert_eq!(node.len(), n * k);
        assert_eq!(edge_weights.len(), edges.len());
        ObjectiveVector {
            n,
            k,
            edges,
            node,
            edge_weights,
        }
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn label_count(&self) -> usize {
        self.k
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn node_part(&self) -> &[f64] {
        &self.node
    }

    pub fn node_cost(&self, u: usize, i: usize) -> f64 {
        self.node[u * self.k + i]
    }

    pub fn edge_weight(&self, e: usize) -> f64 {
        self.edge_weights[e]
    }

    pub fn edge_weights(&self) -> &[f64] {
        &self.edge_weights
    }

    /// Full vector dimension `n*k + m*k^2`.
    pub fn dimension(&self) -> usize {
        self.n * self.k + self.edges.len() * self.k * self.k
    }

    /// `<theta, phi(x)>` over the marginal-vector view of `x`. Agrees with
    /// [`energy`] exactly; kept as an independent code path.
    pub fn dot_labeling(&self, x: &Labeling) -> f64 {
        let mut total = 0.0;
        for u in 0..self.n {
            total += self.node[u * self.k + x.label(u)];
        }
        for (e, &(u, v)) in self.edges.iter().enumerate() {
            if x.label(u) != x.label(v) {
                total += self.edge_weights[e];
            }
        }
        total
    }

    /// Objective in metric form over node marginals only:
    /// `sum c(u,i) x_u(i) + sum_e w_e * (1/2) sum_i |x_u(i) - x_v(i)|`.
    ///
    /// For points of the local polytope whose edge marginals put the maximum
    /// possible mass on the diagonal, this equals the full objective.
    pub fn metric_objective(&self, node_marginals: &[f64]) -> f64 {
        assert_eq!(node_marginals.len(), self.n * self.k);
        let mut total = 0.0;
        for (idx, &x) in node_marginals.iter().enumerate() {
            total += self.node[idx] * x;
        }
        for (e, &(u, v)) in self.edges.iter().enumerate() {
            let mut sep = 0.0;
            for i in 0..self.k {
                sep += (node_marginals[u * self.k + i] - node_marginals[v * self.k + i]).abs();
            }
            total += self.edge_weights[e] * 0.5 * sep;
        }
        total
    }

    /// Elementwise difference of the Potts-structured parts. Both vectors
    /// must live on the same graph.
    pub fn difference(&self, other: &ObjectiveVector) -> ObjectiveVector {
        assert_eq!(self.edges, other.edges);
        assert_eq!(self.node.len(), other.node.len());
        ObjectiveVector {
            n: self.n,
            k: self.k,
            edges: self.edges.clone(),
            node: self
                .node
                .iter()
                .zip(&other.node)
                .map(|(a, b)| a - b)
                .collect(),
            edge_weights: self
                .edge_weights
                .iter()
                .zip(&other.edge_weights)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

/// Energy of a labeling: node costs plus weights of disagreeing edges.
pub fn energy(inst: &Instance, x: &Labeling) -> Result<f64, InstanceError> {
    x.validate(inst)?;
    let mut total = 0.0;
    for u in 0..inst.node_count() {
        total += inst.cost(u, x.label(u));
    }
    for (e, &(u, v)) in inst.edges().iter().enumerate() {
        if x.label(u) != x.label(v) {
            total += inst.weight(e);
        }
    }
    Ok(total)
}

/// Exhaustive MAP oracle. Ties are broken by lexicographic order of the
/// assignment vector, so the output is deterministic.
pub fn brute_force_map(inst: &Instance) -> Result<(Labeling, f64), InstanceError> {
    let n = inst.node_count();
    let k = inst.label_count();
    let count = (k as f64).powi(n as i32);
    if count > BRUTE_FORCE_LIMIT {
        return Err(InstanceError::TooLargeForBruteForce(count));
    }
    let mut assignment = vec![0usize; n];
    let mut best: Option<(Vec<usize>, f64)> = None;
    loop {
        let x = Labeling::new(assignment.clone());
        let e = energy(inst, &x)?;
        match &best {
            Some((_, be)) if e >= *be => {}
            _ => best = Some((assignment.clone(), e)),
        }
        // lexicographic successor
        let mut pos = n;
        while pos > 0 {
            pos -= 1;
            assignment[pos] += 1;
            if assignment[pos] < k {
                break;
            }
            assignment[pos] = 0;
            if pos == 0 {
                let (a, e) = best.unwrap();
                return Ok((Labeling::new(a), e));
            }
        }
        if n == 0 {
            let (a, e) = best.unwrap();
            return Ok((Labeling::new(a), e));
        }
    }
}

/// All proper alpha-expansions of `x`: labelings `y != x` where nodes already
/// labeled `alpha` stay, and every other node either keeps its label or
/// switches to `alpha`. Enumeration order is by increasing subset bitmask of
/// the movable nodes.
pub fn enumerate_expansions(x: &Labeling, alpha: usize) -> Result<Vec<Labeling>, InstanceError> {
    let movable: Vec<usize> = (0..x.len()).filter(|&u| x.label(u) != alpha).collect();
    let q = movable.len();
    let count = (2f64).powi(q as i32);
    if count > BRUTE_FORCE_LIMIT {
        return Err(InstanceError::TooLargeForBruteForce(count));
    }
    let mut out = Vec::with_capacity((1usize << q).saturating_sub(1));
    for mask in 1u64..(1u64 << q) {
        let mut y = x.as_slice().to_vec();
        for (bit, &u) in movable.iter().enumerate() {
            if mask >> bit & 1 == 1 {
                y[u] = alpha;
            }
        }
        out.push(Labeling::new(y));
    }
    Ok(out)
}
