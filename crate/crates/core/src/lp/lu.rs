//! Sparse LU factorization of simplex basis matrices.
//!
//! Left-looking (Gilbert-Peierls) factorization with partial pivoting by
//! magnitude. Columns are processed in order of increasing nonzero count,
//! which puts slack/artificial singletons first and keeps fill-in low on the
//! incidence-like bases this crate produces.

/// Basis matrix is numerically singular at the given elimination step.
#[derive(Debug, Clone)]
pub struct SingularBasis {
    pub step: usize,
}

pub struct LuFactors {
    m: usize,
    /// step -> pivot row
    prow: Vec<usize>,
    /// row -> step
    rowperm: Vec<usize>,
    /// step -> pivot value
    upiv: Vec<f64>,
    /// step -> L column entries (raw row, multiplier), rows pivoted later
    lcols: Vec<Vec<(usize, f64)>>,
    /// step -> U column entries (earlier step, value)
    ucols: Vec<Vec<(usize, f64)>>,
    /// step -> basis position processed at that step
    col_of_step: Vec<usize>,
}

const UNSET: usize = usize::MAX;

impl LuFactors {
    /// Factorize the basis given as `m` sparse columns of an `m x m` matrix.
    pub fn factorize(
        m: usize,
        cols: &[Vec<(usize, f64)>],
        zero_pivot: f64,
    ) -> Result<LuFactors, SingularBasis> {
        assert_eq!(cols.len(), m);
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by_key(|&j| (cols[j].len(), j));

        let mut prow = vec![UNSET; m];
        let mut rowperm = vec![UNSET; m];
        let mut upiv = vec![0.0; m];
        let mut lcols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); m];
        let mut ucols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); m];
        let mut col_of_step = vec![UNSET; m];

        let mut x = vec![0.0f64; m];
        let mut in_pattern = vec![false; m];
        let mut pattern: Vec<usize> = Vec::new();
        let mut visited = vec![false; m]; // per-step DFS marks
        let mut topo: Vec<usize> = Vec::new();
        let mut dfs_stack: Vec<(usize, usize)> = Vec::new();

        for (step, &j) in order.iter().enumerate() {
            // scatter column j
            pattern.clear();
            topo.clear();
            for &(r, v) in &cols[j] {
                if !in_pattern[r] {
                    in_pattern[r] = true;
                    pattern.push(r);
                }
                x[r] += v;
            }

            // reach: topological order of earlier steps whose eliminations hit us
            let mut pi = 0;
            while pi < pattern.len() {
                let r0 = pattern[pi];
                pi += 1;
                let p0 = rowperm[r0];
                if p0 == UNSET || visited[p0] {
                    continue;
                }
                // iterative DFS over the L-column graph
                dfs_stack.push((p0, 0));
                visited[p0] = true;
                while let Some(&mut (p, ref mut idx)) = dfs_stack.last_mut() {
                    if *idx < lcols[p].len() {
                        let (r, _) = lcols[p][*idx];
                        *idx += 1;
                        if !in_pattern[r] {
                            in_pattern[r] = true;
                            pattern.push(r);
                        }
                        let pn = rowperm[r];
                        if pn != UNSET && !visited[pn] {
                            visited[pn] = true;
                            dfs_stack.push((pn, 0));
                        }
                    } else {
                        topo.push(p);
                        dfs_stack.pop();
                    }
                }
            }

            // eliminate in reverse post-order
            for &p in topo.iter().rev() {
                visited[p] = false;
                let xp = x[prow[p]];
                if xp != 0.0 {
                    for &(r, lv) in &lcols[p] {
                        x[r] -= xp * lv;
                    }
                }
            }

            // split into U part (pivoted rows) and pivot candidates
            let mut ucol = Vec::new();
            let mut best_row = UNSET;
            let mut best_abs = 0.0f64;
            for &r in &pattern {
                let p = rowperm[r];
                if p != UNSET {
                    if x[r] != 0.0 {
                        ucol.push((p, x[r]));
                    }
                } else {
                    let a = x[r].abs();
                    if a > best_abs || (a == best_abs && best_row != UNSET && r < best_row) {
                        best_abs = a;
                        best_row = r;
                    }
                }
            }
            if best_row == UNSET || best_abs <= zero_pivot {
                for &r in &pattern {
                    x[r] = 0.0;
                    in_pattern[r] = false;
                }
                return Err(SingularBasis { step });
            }
            ucol.sort_unstable_by_key(|t| t.0);
            let piv = x[best_row];
            let mut lcol = Vec::new();
            for &r in &pattern {
                if rowperm[r] == UNSET && r != best_row && x[r] != 0.0 {
                    lcol.push((r, x[r] / piv));
                }
            }
            lcol.sort_unstable_by_key(|t| t.0);

            prow[step] = best_row;
            rowperm[best_row] = step;
            upiv[step] = piv;
            lcols[step] = lcol;
            ucols[step] = ucol;
            col_of_step[step] = j;

            for &r in &pattern {
                x[r] = 0.0;
                in_pattern[r] = false;
            }
        }

        Ok(LuFactors {
            m,
            prow,
            rowperm,
            upiv,
            lcols,
            ucols,
            col_of_step,
        })
    }

    /// Solve `B x = v`. `v` is indexed by raw row; the result is written back
    /// into `out` indexed by basis position.
    pub fn ftran(&self, v: &mut [f64], out: &mut [f64]) {
        for p in 0..self.m {
            let t = v[self.prow[p]];
            if t != 0.0 {
                for &(r, lv) in &self.lcols[p] {
                    v[r] -= t * lv;
                }
            }
        }
        for p in (0..self.m).rev() {
            let yp = v[self.prow[p]] / self.upiv[p];
            out[self.col_of_step[p]] = yp;
            if yp != 0.0 {
                for &(q, uv) in &self.ucols[p] {
                    v[self.prow[q]] -= yp * uv;
                }
            }
        }
        for r in v.iter_mut() {
            *r = 0.0;
        }
    }

    /// Solve `B^T y = c`. `c` is indexed by basis position; the result is
    /// indexed by raw row.
    pub fn btran(&self, c: &[f64], scratch: &mut [f64], out: &mut [f64]) {
        // forward solve U^T z = c (position space)
        for p in 0..self.m {
            let mut t = c[self.col_of_step[p]];
            for &(q, uv) in &self.ucols[p] {
                t -= uv * scratch[q];
            }
            scratch[p] = t / self.upiv[p];
        }
        // backward solve L^T w = z, then scatter by pivot row
        for p in (0..self.m).rev() {
            let mut t = scratch[p];
            for &(r, lv) in &self.lcols[p] {
                t -= lv * scratch[self.rowperm[r]];
            }
            scratch[p] = t;
        }
        for p in 0..self.m {
            out[self.prow[p]] = scratch[p];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn dense_solve(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
        let m = a.len();
        let mut aug: Vec<Vec<f64>> = a
            .iter()
            .zip(b)
            .map(|(row, &bi)| {
                let mut r = row.clone();
                r.push(bi);
                r
            })
            .collect();
        for col in 0..m {
            let piv = (col..m).max_by(|&i, &j| {
                aug[i][col].abs().partial_cmp(&aug[j][col].abs()).unwrap()
            })?;
            if aug[piv][col].abs() < 1e-12 {
                return None;
            }
            aug.swap(col, piv);
            for i in 0..m {
                if i != col {
                    let f = aug[i][col] / aug[col][col];
                    for j in col..=m {
                        let sub = f * aug[col][j];
                        aug[i][j] -= sub;
                    }
                }
            }
        }
        Some((0..m).map(|i| aug[i][m] / aug[i][i]).collect())
    }

    #[test]
    fn random_factorizations_match_dense_oracle() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for trial in 0..300 {
            let m = rng.gen_range(1..=12);
            let mut dense = vec![vec![0.0; m]; m];
            let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); m];
            for j in 0..m {
                for i in 0..m {
                    if rng.gen_bool(0.35) || i == j {
                        let v: f64 = rng.gen_range(-4.0..4.0);
                        if v.abs() > 0.05 {
                            dense[i][j] = v;
                            cols[j].push((i, v));
                        }
                    }
                }
            }
            let b: Vec<f64> = (0..m).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let oracle = dense_solve(&dense, &b);
            let lu = LuFactors::factorize(m, &cols, 1e-10);
            match (oracle, lu) {
                (Some(want), Ok(lu)) => {
                    let mut v = b.clone();
                    let mut out = vec![0.0; m];
                    lu.ftran(&mut v, &mut out);
                    for (g, w) in out.iter().zip(&want) {
                        assert!((g - w).abs() < 1e-7, "trial {trial}: ftran mismatch");
                    }
                    // btran oracle: solve transposed system densely
                    let mut at = vec![vec![0.0; m]; m];
                    for i in 0..m {
                        for j in 0..m {
                            at[j][i] = dense[i][j];
                        }
                    }
                    let want_t = dense_solve(&at, &b).unwrap();
                    let mut scratch = vec![0.0; m];
                    let mut yout = vec![0.0; m];
                    lu.btran(&b, &mut scratch, &mut yout);
                    for (g, w) in yout.iter().zip(&want_t) {
                        assert!((g - w).abs() < 1e-7, "trial {trial}: btran mismatch");
                    }
                }
                (None, Err(_)) => {}
                (None, Ok(lu)) => {
                    // dense oracle bailed on near-singularity; accept if LU
                    // still solves the system accurately
                    let mut v = b.clone();
                    let mut out = vec![0.0; m];
                    lu.ftran(&mut v, &mut out);
                    let mut res = b.clone();
                    for (j, col) in cols.iter().enumerate() {
                        for &(i, a) in col {
                            res[i] -= a * out[j];
                        }
                    }
                    assert!(res.iter().all(|r| r.abs() < 1e-5));
                }
                (Some(_), Err(e)) => panic!("trial {trial}: unexpected singular at {}", e.step),
            }
        }
    }
}
