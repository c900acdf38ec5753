//! Affine expressions over the repair program's unknowns.
//!
//! The unknowns are the node costs `c(u, i)` and edge weights `w(u, v)` of an
//! instance. Expansion auxiliary-graph capacities are affine in these, which
//! is what lets the repair program stay a linear program. A [`ParamSpace`]
//! fixes the id layout: cost parameters first (`u * k + i`), then one weight
//! parameter per edge.

use crate::instance::Instance;

/// Id layout for the `n*k + m` parameters of an instance's objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParamSpace {
    n: usize,
    k: usize,
    m: usize,
}

impl ParamSpace {
    pub fn for_instance(inst: &Instance) -> Self {
        ParamSpace {
            n: inst.node_count(),
            k: inst.label_count(),
            m: inst.edge_count(),
        }
    }

    pub fn cost_id(&self, u: usize, i: usize) -> usize {
        debug_assert!(u < self.n && i < self.k);
        u * self.k + i
    }

    pub fn weight_id(&self, e: usize) -> usize {
        debug_assert!(e < self.m);
        self.n * self.k + e
    }

    pub fn len(&self) -> usize {
        self.n * self.k + self.m
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Concrete parameter vector `[c..., w...]` of an instance on this space.
    pub fn values(&self, inst: &Instance) -> Vec<f64> {
        assert_eq!(inst.node_count(), self.n);
        assert_eq!(inst.label_count(), self.k);
        assert_eq!(inst.edge_count(), self.m);
        let mut v = Vec::with_capacity(self.len());
        v.extend_from_slice(inst.costs());
        v.extend_from_slice(inst.weights());
        v
    }
}

/// `constant + sum coeff_id * param_id`, sparse over parameter ids.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineExpr {
    constant: f64,
    terms: Vec<(usize, f64)>,
}

impl AffineExpr {
    pub fn constant(c: f64) -> Self {
        AffineExpr {
            constant: c,
            terms: Vec::new(),
        }
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    pub fn term(id: usize, coeff: f64) -> Self {
        AffineExpr {
            constant: 0.0,
            terms: vec![(id, coeff)],
        }
    }

    pub fn constant_part(&self) -> f64 {
        self.constant
    }

    /// Terms sorted by parameter id, zero coefficients dropped.
    pub fn terms(&self) -> &[(usize, f64)] {
        &self.terms
    }

    pub fn add_constant(&mut self, c: f64) {
        self.constant += c;
    }

    pub fn add_term(&mut self, id: usize, coeff: f64) {
        if coeff == 0.0 {
            return;
        }
        match self.terms.binary_search_by_key(&id, |t| t.0) {
            Ok(pos) => {
                self.terms[pos].1 += coeff;
                if self.terms[pos].1 == 0.0 {
                    self.terms.remove(pos);
                }
            }
            Err(pos) => self.terms.insert(pos, (id, coeff)),
        }
    }

    pub fn add(&self, other: &AffineExpr) -> AffineExpr {
        let mut out = self.clone();
        out.constant += other.constant;
        for &(id, coeff) in &other.terms {
            out.add_term(id, coeff);
        }
        out
    }

    pub fn scale(&self, s: f64) -> AffineExpr {
        if s == 0.0 {
            return AffineExpr::zero();
        }
        AffineExpr {
            constant: self.constant * s,
            terms: self.terms.iter().map(|&(id, c)| (id, c * s)).collect(),
        }
    }

    pub fn eval(&self, params: &[f64]) -> f64 {
        let mut v = self.constant;
        for &(id, coeff) in &self.terms {
            v += coeff * params[id];
        }
        v
    }
}
