//! Exact max-flow / min-cut on two-terminal directed networks.
//!
//! Dinic's algorithm over `f64` capacities. Arithmetic on integer capacities
//! is exact; for real capacities the value is accurate to well below the
//! 1e-9 tolerance the callers compare at. The returned source side is the
//! canonical minimal one (nodes reachable from the source in the final
//! residual graph).

use thiserror::Error;

/// Residual amounts at or below this are treated as saturated.
const RESIDUAL_EPS: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum MaxFlowError {
    #[error("source and sink must differ")]
    SourceIsSink,
    #[error("arc ({0}, {1}) has invalid capacity {2} (need finite, >= 0)")]
    BadCapacity(usize, usize, f64),
    #[error("arc endpoint {0} out of range (node_count = {1})")]
    NodeOutOfRange(usize, usize),
    #[error("network too large for exhaustive cut enumeration ({0} non-terminals)")]
    TooLargeForBruteForce(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arc {
    pub tail: usize,
    pub head: usize,
    pub capacity: f64,
}

/// Two-terminal directed network with non-negative finite capacities.
#[derive(Debug, Clone)]
pub struct FlowNetwork {
    pub node_count: usize,
    pub source: usize,
    pub sink: usize,
    pub arcs: Vec<Arc>,
}

impl FlowNetwork {
    pub fn new(node_count: usize, source: usize, sink: usize) -> Self {
        FlowNetwork {
            node_count,
            source,
            sink,
            arcs: Vec::new(),
        }
    }

    pub fn add_arc(&mut self, tail: usize, head: usize, capacity: f64) {
        self.arcs.push(Arc {
            tail,
            head,
            capacity,
        });
    }

    fn validate(&self) -> Result<(), MaxFlowError> {
        if self.source == self.sink {
            return Err(MaxFlowError::SourceIsSink);
        }
        for t in [self.source, self.sink] {
            if t >= self.node_count {
                return Err(MaxFlowError::NodeOutOfRange(t, self.node_count));
            }
        }
        for a in &self.arcs {
            if a.tail >= self.node_count {
                return Err(MaxFlowError::NodeOutOfRange(a.tail, self.node_count));
            }
            if a.head >= self.node_count {
                return Err(MaxFlowError::NodeOutOfRange(a.head, self.node_count));
            }
            if !a.capacity.is_finite() || a.capacity < 0.0 {
                return Err(MaxFlowError::BadCapacity(a.tail, a.head, a.capacity));
            }
        }
        Ok(())
    }
}

/// Max-flow result: value, canonical minimal source side, per-arc flows
/// (parallel to `FlowNetwork::arcs`).
#[derive(Debug, Clone)]
pub struct CutResult {
    pub value: f64,
    pub source_side: Vec<bool>,
    pub arc_flows: Vec<f64>,
}

struct Dinic {
    // adjacency as index pairs into a doubled edge array (forward, backward)
    first: Vec<Vec<usize>>,
    head: Vec<usize>,
    residual: Vec<f64>,
    level: Vec<i32>,
    iter: Vec<usize>,
    source: usize,
    sink: usize,
}

impl Dinic {
    fn new(net: &FlowNetwork) -> Self {
        let mut first = vec![Vec::new(); net.node_count];
        let mut head = Vec::with_capacity(net.arcs.len() * 2);
        let mut residual = Vec::with_capacity(net.arcs.len() * 2);
        for a in &net.arcs {
            first[a.tail].push(head.len());
            head.push(a.head);
            residual.push(a.capacity);
            first[a.head].push(head.len());
            head.push(a.tail);
            residual.push(0.0);
        }
        Dinic {
            first,
            head,
            residual,
            level: vec![-1; net.node_count],
            iter: vec![0; net.node_count],
            source: net.source,
            sink: net.sink,
        }
    }

    fn bfs(&mut self) -> bool {
        self.level.iter_mut().for_each(|l| *l = -1);
        let mut queue = std::collections::VecDeque::new();
        self.level[self.source] = 0;
        queue.push_back(self.source);
        while let Some(u) = queue.pop_front() {
            for &e in &self.first[u] {
                let v = self.head[e];
                if self.level[v] < 0 && self.residual[e] > RESIDUAL_EPS {
                    self.level[v] = self.level[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        self.level[self.sink] >= 0
    }

    fn dfs(&mut self, u: usize, limit: f64) -> f64 {
        if u == self.sink {
            return limit;
        }
        while self.iter[u] < self.first[u].len() {
            let e = self.first[u][self.iter[u]];
            let v = self.head[e];
            if self.residual[e] > RESIDUAL_EPS && self.level[v] == self.level[u] + 1 {
                let pushed = self.dfs(v, limit.min(self.residual[e]));
                if pushed > 0.0 {
                    self.residual[e] -= pushed;
                    self.residual[e ^ 1] += pushed;
                    return pushed;
                }
            }
            self.iter[u] += 1;
        }
        0.0
    }

    fn run(&mut self) -> f64 {
        let mut value = 0.0;
        while self.bfs() {
            self.iter.iter_mut().for_each(|i| *i = 0);
            loop {
                let pushed = self.dfs(self.source, f64::INFINITY);
                if pushed == 0.0 {
                    break;
                }
                value += pushed;
            }
        }
        value
    }

    fn source_reachable(&self) -> Vec<bool> {
        let mut seen = vec![false; self.first.len()];
        let mut stack = vec![self.source];
        seen[self.source] = true;
        while let Some(u) = stack.pop() {
            for &e in &self.first[u] {
                let v = self.head[e];
                if !seen[v] && self.residual[e] > RESIDUAL_EPS {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        seen
    }

    fn sink_coreachable(&self) -> Vec<bool> {
        let mut seen = vec![false; self.first.len()];
        let mut stack = vec![self.sink];
        seen[self.sink] = true;
        while let Some(v) = stack.pop() {
            for &e in &self.first[v] {
                // arc e^1 runs head[e] -> v; usable if it has residual
                let u = self.head[e];
                if !seen[u] && self.residual[e ^ 1] > RESIDUAL_EPS {
                    seen[u] = true;
                    stack.push(u);
                }
            }
        }
        seen
    }
}

/// Exact max flow. The returned `source_side` is the minimal min-cut side.
pub fn max_flow(net: &FlowNetwork) -> Result<CutResult, MaxFlowError> {
    net.validate()?;
    let mut dinic = Dinic::new(net);
    let value = dinic.run();
    let source_side = dinic.source_reachable();
    let arc_flows = net
        .arcs
        .iter()
        .enumerate()
        .map(|(i, a)| a.capacity - dinic.residual[2 * i])
        .collect();
    Ok(CutResult {
        value,
        source_side,
        arc_flows,
    })
}

/// Both canonical min-cut source sides: (minimal, maximal). The maximal side
/// is the complement of the nodes that can still reach the sink in the
/// residual graph. The two coincide exactly when the min cut is unique.
pub fn max_flow_with_sides(net: &FlowNetwork) -> Result<(CutResult, Vec<bool>), MaxFlowError> {
    net.validate()?;
    let mut dinic = Dinic::new(net);
    let value = dinic.run();
    let source_side = dinic.source_reachable();
    let coreach = dinic.sink_coreachable();
    let maximal: Vec<bool> = coreach.iter().map(|&c| !c).collect();
    let arc_flows = net
        .arcs
        .iter()
        .enumerate()
        .map(|(i, a)| a.capacity - dinic.residual[2 * i])
        .collect();
    Ok((
        CutResult {
            value,
            source_side,
            arc_flows,
        },
        maximal,
    ))
}

/// Capacity of the cut induced by an explicit source-side set.
pub fn cut_capacity(net: &FlowNetwork, source_side: &[bool]) -> f64 {
    net.arcs
        .iter()
        .filter(|a| source_side[a.tail] && !source_side[a.head])
        .map(|a| a.capacity)
        .sum()
}

/// Exhaustive min-cut oracle over all `2^q` placements of the non-terminal
/// nodes. Test oracle only.
pub fn min_cut_value_bruteforce(net: &FlowNetwork) -> Result<f64, MaxFlowError> {
    net.validate()?;
    let others: Vec<usize> = (0..net.node_count)
        .filter(|&v| v != net.source && v != net.sink)
        .collect();
    if others.len() > 22 {
        return Err(MaxFlowError::TooLargeForBruteForce(others.len()));
    }
    let mut best = f64::INFINITY;
    let mut side = vec![false; net.node_count];
    side[net.source] = true;
    for mask in 0u64..(1u64 << others.len()) {
        for (bit, &v) in others.iter().enumerate() {
            side[v] = mask >> bit & 1 == 1;
        }
        best = best.min(cut_capacity(net, &side));
    }
    Ok(best)
}
