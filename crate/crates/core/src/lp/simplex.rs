//! Bounded-variable two-phase revised simplex with a product-form basis
//! inverse on top of a sparse LU factorization.
//!
//! Pricing is Dantzig (most negative reduced cost) with a permanent switch to
//! Bland's rule after a budget of degenerate pivots, which guarantees
//! termination. All tie-breaks are by index, so solves are deterministic.

use super::lu::LuFactors;
use super::{LinearProgram, LpSolution, LpStatus, Relation, Tolerances};

const REFACTOR_INTERVAL: usize = 64;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum NbAt {
    Lower,
    Upper,
    Free,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum VarState {
    Basic(usize),
    NonBasic(NbAt),
}

struct Eta {
    pos: usize,
    w: Vec<(usize, f64)>,
    w_pos: f64,
}

pub(super) struct Simplex<'a> {
    tol: &'a Tolerances,
    rows: usize,
    ncols: usize,
    nstruct: usize,
    cols: Vec<Vec<(usize, f64)>>,
    rhs: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    obj: Vec<f64>,
    phase1: bool,
    state: Vec<VarState>,
    value: Vec<f64>,
    basis: Vec<usize>,
    lu: Option<LuFactors>,
    etas: Vec<Eta>,
    degenerate_pivots: usize,
    bland: bool,
    iterations: usize,
    // scratch
    scr_row: Vec<f64>,
    scr_pos: Vec<f64>,
}

pub(super) enum SimplexOutcome {
    Optimal,
    Unbounded,
    NumericalFailure(String),
}

impl<'a> Simplex<'a> {
    pub(super) fn new(lp: &LinearProgram, tol: &'a Tolerances) -> Self {
        let rows = lp.rows.len();
        let nstruct = lp.num_vars;
        let ncols = nstruct + 2 * rows;

        let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); ncols];
        for (i, row) in lp.rows.iter().enumerate() {
            for &(j, a) in &row.coeffs {
                cols[j].push((i, a));
            }
        }
        for col in cols.iter_mut().take(nstruct) {
            col.sort_unstable_by_key(|t| t.0);
        }

        let mut lower = vec![0.0; ncols];
        let mut upper = vec![0.0; ncols];
        lower[..nstruct].copy_from_slice(&lp.lower);
        upper[..nstruct].copy_from_slice(&lp.upper);
        let mut rhs = vec![0.0; rows];
        for (i, row) in lp.rows.iter().enumerate() {
            rhs[i] = row.rhs;
            let s = nstruct + i;
            cols[s].push((i, 1.0));
            let (lo, hi) = match row.relation {
                Relation::Le => (0.0, f64::INFINITY),
                Relation::Ge => (f64::NEG_INFINITY, 0.0),
                Relation::Eq => (0.0, 0.0),
            };
            lower[s] = lo;
            upper[s] = hi;
        }

        // structural and slack start values: a finite bound, or 0 when free
        let mut state = vec![VarState::NonBasic(NbAt::Free); ncols];
        let mut value = vec![0.0; ncols];
        for j in 0..nstruct + rows {
            let (v, at) = if lower[j].is_finite() {
                (lower[j], NbAt::Lower)
            } else if upper[j].is_finite() {
                (upper[j], NbAt::Upper)
            } else {
                (0.0, NbAt::Free)
            };
            value[j] = v;
            state[j] = VarState::NonBasic(at);
        }

        // residuals decide artificial column signs; artificials start basic
        let mut residual = rhs.clone();
        for j in 0..nstruct + rows {
            if value[j] != 0.0 {
                for &(i, a) in &cols[j] {
                    residual[i] -= a * value[j];
                }
            }
        }
        let mut basis = Vec::with_capacity(rows);
        for i in 0..rows {
            let art = nstruct + rows + i;
            let sign = if residual[i] < 0.0 { -1.0 } else { 1.0 };
            cols[art].push((i, sign));
            lower[art] = 0.0;
            upper[art] = f64::INFINITY;
            value[art] = residual[i].abs();
            state[art] = VarState::Basic(i);
            basis.push(art);
        }

        let mut obj = vec![0.0; ncols];
        for i in 0..rows {
            obj[nstruct + rows + i] = 1.0;
        }

        Simplex {
            tol,
            rows,
            ncols,
            nstruct,
            cols,
            rhs,
            lower,
            upper,
            obj,
            phase1: true,
            state,
            value,
            basis,
            lu: None,
            etas: Vec::new(),
            degenerate_pivots: 0,
            bland: false,
            iterations: 0,
            scr_row: vec![0.0; rows],
            scr_pos: vec![0.0; rows],
        }
    }

    fn refactorize(&mut self) -> Result<(), String> {
        let basis_cols: Vec<Vec<(usize, f64)>> =
            self.basis.iter().map(|&j| self.cols[j].clone()).collect();
        let lu = LuFactors::factorize(self.rows, &basis_cols, self.tol.zero_pivot)
            .map_err(|e| format!("singular basis at elimination step {}", e.step))?;
        self.lu = Some(lu);
        self.etas.clear();

        // recompute basic values from scratch to shed accumulated drift
        let mut residual = self.rhs.clone();
        for j in 0..self.ncols {
            if matches!(self.state[j], VarState::NonBasic(_)) && self.value[j] != 0.0 {
                for &(i, a) in &self.cols[j] {
                    residual[i] -= a * self.value[j];
                }
            }
        }
        let mut out = vec![0.0; self.rows];
        self.lu.as_ref().unwrap().ftran(&mut residual, &mut out);
        for (p, &bj) in self.basis.iter().enumerate() {
            self.value[bj] = out[p];
        }
        Ok(())
    }

    /// `B^-1 a_col`, dense over basis positions.
    fn ftran_col(&mut self, col: usize) -> Vec<f64> {
        for r in self.scr_row.iter_mut() {
            *r = 0.0;
        }
        for &(i, a) in &self.cols[col] {
            self.scr_row[i] += a;
        }
        let mut out = vec![0.0; self.rows];
        self.lu.as_ref().unwrap().ftran(&mut self.scr_row, &mut out);
        for eta in &self.etas {
            let t = out[eta.pos] / eta.w_pos;
            if t != 0.0 {
                for &(p, wv) in &eta.w {
                    out[p] -= wv * t;
                }
            }
            out[eta.pos] = t;
        }
        out
    }

    /// Row multipliers `y` with `y^T B = c_B^T`, dense over raw rows.
    fn btran_costs(&mut self) -> Vec<f64> {
        let mut c: Vec<f64> = self.basis.iter().map(|&j| self.obj[j]).collect();
        for eta in self.etas.iter().rev() {
            let mut t = c[eta.pos];
            for &(p, wv) in &eta.w {
                t -= wv * c[p];
            }
            c[eta.pos] = t / eta.w_pos;
        }
        let mut out = vec![0.0; self.rows];
        self.lu
            .as_ref()
            .unwrap()
            .btran(&c, &mut self.scr_pos, &mut out);
        out
    }

    fn reduced_cost(&self, j: usize, y: &[f64]) -> f64 {
        let mut d = self.obj[j];
        for &(i, a) in &self.cols[j] {
            d -= y[i] * a;
        }
        d
    }

    /// Entering variable and direction (+1 increase, -1 decrease).
    fn price(&self, y: &[f64]) -> Option<(usize, f64, f64)> {
        let tol = self.tol.optimality;
        let mut best: Option<(usize, f64, f64)> = None;
        for j in 0..self.ncols {
            let at = match self.state[j] {
                VarState::Basic(_) => continue,
                VarState::NonBasic(at) => at,
            };
            if self.lower[j] == self.upper[j] {
                continue; // fixed
            }
            let d = self.reduced_cost(j, y);
            let dir = match at {
                NbAt::Lower if d < -tol => 1.0,
                NbAt::Upper if d > tol => -1.0,
                NbAt::Free if d < -tol => 1.0,
                NbAt::Free if d > tol => -1.0,
                _ => continue,
            };
            if self.bland {
                return Some((j, dir, d));
            }
            match best {
                Some((_, _, bd)) if d.abs() <= bd.abs() => {}
                _ => best = Some((j, dir, d)),
            }
        }
        best
    }

    /// Min-ratio step for entering var `q` moving in `dir`.
    /// Returns (step, Some(leaving position)) or (step, None) for a bound flip.
    fn ratio_test(&self, q: usize, dir: f64, w: &[f64]) -> (f64, Option<usize>) {
        let blocking = 1e-9;
        let mut t_best = f64::INFINITY;
        let mut leave: Option<usize> = None;
        let mut leave_piv = 0.0f64;
        for (p, &wp) in w.iter().enumerate() {
            if wp.abs() <= blocking {
                continue;
            }
            let bj = self.basis[p];
            let delta = -dir * wp; // basic value change per unit step
            let t = if delta < 0.0 {
                if self.lower[bj].is_finite() {
                    (self.value[bj] - self.lower[bj]).max(0.0) / -delta
                } else {
                    continue;
                }
            } else {
                if self.upper[bj].is_finite() {
                    (self.upper[bj] - self.value[bj]).max(0.0) / delta
                } else {
                    continue;
                }
            };
            let better = if self.bland {
                t < t_best - 1e-12 || (t <= t_best + 1e-12 && leave.is_none_or(|lp| bj < self.basis[lp]))
            } else {
                t < t_best - 1e-12 || (t <= t_best + 1e-12 && wp.abs() > leave_piv)
            };
            if better {
                t_best = t;
                leave = Some(p);
                leave_piv = wp.abs();
            }
        }
        let t_flip = self.upper[q] - self.lower[q];
        if t_flip.is_finite() && t_flip < t_best {
            return (t_flip, None);
        }
        (t_best, leave)
    }

    fn apply_step(&mut self, q: usize, dir: f64, w: &[f64], t: f64) {
        if t != 0.0 {
            for (p, &wp) in w.iter().enumerate() {
                if wp != 0.0 {
                    let bj = self.basis[p];
                    self.value[bj] -= dir * wp * t;
                }
            }
            self.value[q] += dir * t;
        }
    }

    fn run_phase(&mut self) -> Result<SimplexOutcome, String> {
        let max_iters = 60 * (self.rows + self.ncols) + 5_000;
        let bland_budget = 5 * (self.rows + self.ncols);
        loop {
            self.iterations += 1;
            if self.iterations > max_iters {
                return Ok(SimplexOutcome::NumericalFailure(format!(
                    "iteration limit {max_iters} exceeded"
                )));
            }
            if self.etas.len() >= REFACTOR_INTERVAL {
                self.refactorize()?;
            }
            let y = self.btran_costs();
            let Some((q, dir, _d)) = self.price(&y) else {
                return Ok(SimplexOutcome::Optimal);
            };
            let w = self.ftran_col(q);
            let (t, leave) = self.ratio_test(q, dir, &w);
            if !t.is_finite() {
                return Ok(if self.phase1 {
                    SimplexOutcome::NumericalFailure("unbounded phase-1 ray".into())
                } else {
                    SimplexOutcome::Unbounded
                });
            }
            if t <= self.tol.zero_pivot {
                self.degenerate_pivots += 1;
                if self.degenerate_pivots > bland_budget {
                    self.bland = true;
                }
            }
            match leave {
                None => {
                    // bound flip
                    self.apply_step(q, dir, &w, t);
                    self.state[q] = VarState::NonBasic(if dir > 0.0 {
                        NbAt::Upper
                    } else {
                        NbAt::Lower
                    });
                    self.value[q] = if dir > 0.0 { self.upper[q] } else { self.lower[q] };
                }
                Some(r) => {
                    self.apply_step(q, dir, &w, t);
                    let bl = self.basis[r];
                    let delta = -dir * w[r];
                    let at = if delta < 0.0 { NbAt::Lower } else { NbAt::Upper };
                    self.value[bl] = if delta < 0.0 {
                        self.lower[bl]
                    } else {
                        self.upper[bl]
                    };
                    self.state[bl] = VarState::NonBasic(at);
                    self.state[q] = VarState::Basic(r);
                    self.basis[r] = q;
                    let w_sparse: Vec<(usize, f64)> = w
                        .iter()
                        .enumerate()
                        .filter(|&(p, &v)| p != r && v != 0.0)
                        .map(|(p, &v)| (p, v))
                        .collect();
                    self.etas.push(Eta {
                        pos: r,
                        w: w_sparse,
                        w_pos: w[r],
                    });
                }
            }
        }
    }

    fn phase1_infeasibility(&self) -> f64 {
        (self.nstruct + self.rows..self.ncols)
            .map(|j| self.value[j].max(0.0))
            .sum()
    }

    fn enter_phase2(&mut self, objective: &[f64]) {
        self.phase1 = false;
        for j in 0..self.ncols {
            self.obj[j] = if j < self.nstruct { objective[j] } else { 0.0 };
        }
        for j in self.nstruct + self.rows..self.ncols {
            self.lower[j] = 0.0;
            self.upper[j] = 0.0;
            if matches!(self.state[j], VarState::NonBasic(_)) {
                self.state[j] = VarState::NonBasic(NbAt::Lower);
                self.value[j] = 0.0;
            }
        }
        self.degenerate_pivots = 0;
        self.bland = false;
    }

    fn primal_infeasibility(&self) -> f64 {
        let mut worst = 0.0f64;
        for &bj in &self.basis {
            let v = self.value[bj];
            let below = self.lower[bj] - v;
            let above = v - self.upper[bj];
            worst = worst.max(below.max(above));
        }
        worst
    }

    pub(super) fn solve(mut self, lp: &LinearProgram) -> LpSolution {
        let fail = |msg: String| LpSolution {
            status: LpStatus::NumericalFailure(msg),
            primal: Vec::new(),
            dual: Vec::new(),
            objective: f64::NAN,
        };

        if let Err(e) = self.refactorize() {
            return fail(e);
        }
        match self.run_phase() {
            Ok(SimplexOutcome::Optimal) => {}
            Ok(SimplexOutcome::NumericalFailure(m)) | Err(m) => return fail(m),
            Ok(_) => unreachable!("phase 1 is bounded"),
        }
        let scale: f64 = 1.0 + self.rhs.iter().map(|r| r.abs()).fold(0.0, f64::max);
        if self.phase1_infeasibility() > self.tol.feasibility * scale {
            return LpSolution {
                status: LpStatus::Infeasible,
                primal: Vec::new(),
                dual: Vec::new(),
                objective: f64::NAN,
            };
        }

        self.enter_phase2(&lp.objective);
        // a fresh factorization also re-snaps basic values
        if let Err(e) = self.refactorize() {
            return fail(e);
        }
        let mut attempts = 0;
        loop {
            match self.run_phase() {
                Ok(SimplexOutcome::Optimal) => {}
                Ok(SimplexOutcome::Unbounded) => {
                    return LpSolution {
                        status: LpStatus::Unbounded,
                        primal: Vec::new(),
                        dual: Vec::new(),
                        objective: f64::NEG_INFINITY,
                    }
                }
                Ok(SimplexOutcome::NumericalFailure(m)) | Err(m) => return fail(m),
            }
            // refresh and confirm the claimed optimum before reporting it
            if let Err(e) = self.refactorize() {
                return fail(e);
            }
            let drift = self.primal_infeasibility();
            let y = self.btran_costs();
            let stable = drift <= self.tol.feasibility * scale
                && self.price(&y).is_none();
            if stable {
                break;
            }
            attempts += 1;
            if attempts > 3 {
                return fail(format!(
                    "optimum failed verification after {attempts} attempts (drift {drift:.3e})"
                ));
            }
        }

        let dual = self.btran_costs();
        let primal: Vec<f64> = self.value[..self.nstruct].to_vec();
        let objective = primal
            .iter()
            .zip(&lp.objective)
            .map(|(x, c)| x * c)
            .sum::<f64>();
        LpSolution {
            status: LpStatus::Optimal,
            primal,
            dual,
            objective,
        }
    }
}
