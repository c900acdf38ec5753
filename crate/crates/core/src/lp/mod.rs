//! General sparse linear programs with primal and dual solutions.
//!
//! The solver is a bounded-variable revised simplex (see [`simplex`]); it
//! either returns a certified optimum, a correct infeasible/unbounded status,
//! or an explicit numerical-failure status. It never mislabels a bad solve
//! as optimal: claimed optima are re-verified against a fresh factorization
//! before being reported.

mod lu;
mod mps;
mod simplex;

pub use mps::write_mps;

use thiserror::Error;

/// Hard cap on constraint-matrix nonzeros. Larger programs are rejected
/// rather than silently ground through.
pub const MAX_NONZEROS: usize = 150_000;

#[derive(Debug, Error)]
pub enum LpError {
    #[error("column index {0} out of range ({1} variables)")]
    ColumnOutOfRange(usize, usize),
    #[error("non-finite coefficient in row {0}")]
    BadCoefficient(usize),
    #[error("non-finite right-hand side in row {0}")]
    BadRhs(usize),
    #[error("non-finite objective coefficient for variable {0}")]
    BadObjective(usize),
    #[error("variable {0} has empty domain [{1}, {2}]")]
    EmptyDomain(usize, f64, f64),
    #[error("program too large: {0} nonzeros exceeds the {MAX_NONZEROS} guard")]
    TooLarge(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone)]
pub struct Row {
    pub coeffs: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

/// Sparse general-form LP: per-variable bounds (infinite allowed), sparse
/// constraint rows, dense cost row, minimization sense.
#[derive(Debug, Clone, Default)]
pub struct LinearProgram {
    pub num_vars: usize,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub objective: Vec<f64>,
    pub rows: Vec<Row>,
}

impl LinearProgram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_var(&mut self, lower: f64, upper: f64, cost: f64) -> usize {
        self.num_vars += 1;
        self.lower.push(lower);
        self.upper.push(upper);
        self.objective.push(cost);
        self.num_vars - 1
    }

    pub fn add_row(&mut self, coeffs: Vec<(usize, f64)>, relation: Relation, rhs: f64) {
        self.rows.push(Row {
            coeffs,
            relation,
            rhs,
        });
    }

    pub fn nonzeros(&self) -> usize {
        self.rows.iter().map(|r| r.coeffs.len()).sum()
    }

    pub fn validate(&self) -> Result<(), LpError> {
        let nnz = self.nonzeros();
        if nnz > MAX_NONZEROS {
            return Err(LpError::TooLarge(nnz));
        }
        for (j, (&l, &u)) in self.lower.iter().zip(&self.upper).enumerate() {
            if l > u || l.is_nan() || u.is_nan() {
                return Err(LpError::EmptyDomain(j, l, u));
            }
        }
        for (j, &c) in self.objective.iter().enumerate() {
            if !c.is_finite() {
                return Err(LpError::BadObjective(j));
            }
        }
        for (i, row) in self.rows.iter().enumerate() {
            if !row.rhs.is_finite() {
                return Err(LpError::BadRhs(i));
            }
            for &(j, a) in &row.coeffs {
                if j >= self.num_vars {
                    return Err(LpError::ColumnOutOfRange(j, self.num_vars));
                }
                if !a.is_finite() {
                    return Err(LpError::BadCoefficient(i));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    NumericalFailure(String),
}

/// Solver output. `dual` holds one multiplier per row: at a minimum,
/// multipliers are >= 0 on `Ge` rows, <= 0 on `Le` rows, and free on `Eq`
/// rows. `objective` is meaningful for `Optimal` (and `-inf` for
/// `Unbounded`).
#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    pub primal: Vec<f64>,
    pub dual: Vec<f64>,
    pub objective: f64,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

/// Central tolerance record. Every downstream margin check cites these.
///
/// The environment variable `POTTS_TOL` (a single float) overrides the
/// feasibility and optimality tolerances of the default record; the
/// zero-pivot threshold stays fixed. The variable is read once per process.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub feasibility: f64,
    pub optimality: f64,
    pub zero_pivot: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        static ENV_TOL: std::sync::OnceLock<Option<f64>> = std::sync::OnceLock::new();
        let over = ENV_TOL.get_or_init(|| {
            std::env::var("POTTS_TOL")
                .ok()
                .and_then(|v| v.parse::<f64>().ok())
                .filter(|v| *v > 0.0 && v.is_finite())
        });
        let base = over.unwrap_or(1e-7);
        Tolerances {
            feasibility: base,
            optimality: base,
            zero_pivot: 1e-10,
        }
    }
}

pub fn solve(lp: &LinearProgram) -> Result<LpSolution, LpError> {
    solve_with(lp, &Tolerances::default())
}

pub fn solve_with(lp: &LinearProgram, tol: &Tolerances) -> Result<LpSolution, LpError> {
    lp.validate()?;
    Ok(simplex::Simplex::new(lp, tol).solve(lp))
}

/// Certificate check for an optimal solution: primal feasibility (per row,
/// normalized by the row's largest coefficient), dual feasibility,
/// complementary slackness, and the duality gap.
#[derive(Debug, Clone)]
pub struct SolutionCertificate {
    pub max_primal_violation: f64,
    pub max_dual_violation: f64,
    pub max_complementarity_violation: f64,
    pub duality_gap: f64,
    pub dual_objective: f64,
}

pub fn certify(lp: &LinearProgram, sol: &LpSolution) -> SolutionCertificate {
    assert!(sol.is_optimal());
    let x = &sol.primal;
    let y = &sol.dual;

    let mut max_primal = 0.0f64;
    for row in &lp.rows {
        let lhs: f64 = row.coeffs.iter().map(|&(j, a)| a * x[j]).sum();
        let scale = row
            .coeffs
            .iter()
            .map(|&(_, a)| a.abs())
            .fold(1.0f64, f64::max);
        let viol = match row.relation {
            Relation::Le => (lhs - row.rhs).max(0.0),
            Relation::Ge => (row.rhs - lhs).max(0.0),
            Relation::Eq => (lhs - row.rhs).abs(),
        };
        max_primal = max_primal.max(viol / scale);
    }
    for j in 0..lp.num_vars {
        max_primal = max_primal.max(lp.lower[j] - x[j]).max(x[j] - lp.upper[j]);
    }

    // reduced costs
    let mut reduced = lp.objective.clone();
    for (i, row) in lp.rows.iter().enumerate() {
        for &(j, a) in &row.coeffs {
            reduced[j] -= y[i] * a;
        }
    }

    let mut max_dual = 0.0f64;
    for (i, row) in lp.rows.iter().enumerate() {
        match row.relation {
            Relation::Le => max_dual = max_dual.max(y[i]),
            Relation::Ge => max_dual = max_dual.max(-y[i]),
            Relation::Eq => {}
        }
    }
    for j in 0..lp.num_vars {
        // d_j must be >= 0 unless the variable can still increase its
        // objective share downward, i.e. sign constrained by which bounds
        // are finite
        if lp.upper[j].is_infinite() {
            max_dual = max_dual.max(-reduced[j]); // needs d >= 0
        }
        if lp.lower[j].is_infinite() {
            max_dual = max_dual.max(reduced[j]); // needs d <= 0
        }
    }

    let mut max_compl = 0.0f64;
    for (row, &yi) in lp.rows.iter().zip(y) {
        let lhs: f64 = row.coeffs.iter().map(|&(j, a)| a * x[j]).sum();
        let slack = row.rhs - lhs;
        if !matches!(row.relation, Relation::Eq) {
            max_compl = max_compl.max((yi * slack).abs());
        }
    }
    for j in 0..lp.num_vars {
        let d = reduced[j];
        if d > 0.0 && lp.lower[j].is_finite() {
            max_compl = max_compl.max((d * (x[j] - lp.lower[j])).abs());
        }
        if d < 0.0 && lp.upper[j].is_finite() {
            max_compl = max_compl.max((d * (lp.upper[j] - x[j])).abs());
        }
    }

    // dual objective: y.b plus bound contributions of the reduced costs
    let mut dual_obj: f64 = lp
        .rows
        .iter()
        .zip(y)
        .map(|(row, &yi)| yi * row.rhs)
        .sum();
    for j in 0..lp.num_vars {
        let d = reduced[j];
        if d > 0.0 && lp.lower[j].is_finite() {
            dual_obj += d * lp.lower[j];
        } else if d < 0.0 && lp.upper[j].is_finite() {
            dual_obj += d * lp.upper[j];
        }
    }

    SolutionCertificate {
        max_primal_violation: max_primal,
        max_dual_violation: max_dual,
        max_complementarity_violation: max_compl,
        duality_gap: (sol.objective - dual_obj).abs(),
        dual_objective: dual_obj,
    }
}
