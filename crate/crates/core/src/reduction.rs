//! Linear constraints handled by an explicit nullspace basis.
//!
//! Fixed degrees of freedom are set to zero. Each dense constraint row
//! `c·u = 0` is eliminated by solving for one pivot unknown in terms of the
//! remaining free ones, giving `u = T u_free` with `T = [I; D]` up to a
//! permutation.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct Reduction {
    n_full: usize,
    free: Vec<usize>,
    pivots: Vec<usize>,
    /// `u[pivots] = dep · u[free]`.
    dep: DMatrix<f64>,
}

impl Reduction {
    /// Identity reduction on `n` unknowns.
    pub fn identity(n: usize) -> Self {
        Self {
            n_full: n,
            free: (0..n).collect(),
            pivots: Vec::new(),
            dep: DMatrix::zeros(0, n),
        }
    }

    /// Builds the reduction for `u[fixed] = 0` and `rows · u = 0`.
    ///
    /// Rows that are linearly dependent on earlier ones (after the fixed
    /// unknowns are removed) are dropped.
    pub fn new(n_full: usize, fixed: &[usize], rows: &[Vec<f64>]) -> Result<Self> {
        let mut is_fixed = vec![false; n_full];
        for &i in fixed {
            if i >= n_full {
                return Err(Error::InvalidInput(format!("fixed dof {i} out of range")));
            }
            is_fixed[i] = true;
        }
        let cand: Vec<usize> = (0..n_full).filter(|&i| !is_fixed[i]).collect();
        let nc = cand.len();
        let m = rows.len();
        for r in rows {
            if r.len() != n_full {
                return Err(Error::InvalidInput("constraint row has wrong length".into()));
            }
        }
        let mut c = DMatrix::from_fn(m, nc, |i, j| rows[i][cand[j]]);
        let scale = c.amax().max(f64::MIN_POSITIVE);

        // full-pivot elimination to pick well-conditioned pivot columns
        let mut row_used = vec![false; m];
        let mut col_used = vec![false; nc];
        let mut piv_cols = Vec::new();
        let mut piv_rows = Vec::new();
        loop {
            let mut best = (0.0, 0, 0);
            for i in (0..m).filter(|&i| !row_used[i]) {
                for j in (0..nc).filter(|&j| !col_used[j]) {
                    let v = c[(i, j)].abs();
                    if v > best.0 {
                        best = (v, i, j);
                    }
                }
            }
            if best.0 <= 1e-11 * scale {
                break;
            }
            let (_, pi, pj) = best;
            row_used[pi] = true;
            col_used[pj] = true;
            piv_rows.push(pi);
            piv_cols.push(pj);
            let prow = c.row(pi).clone_owned();
            for i in (0..m).filter(|&i| !row_used[i]) {
                let f = c[(i, pj)] / prow[pj];
                if f != 0.0 {
                    for j in 0..nc {
                        c[(i, j)] -= f * prow[j];
                    }
                }
            }
        }

        let free_local: Vec<usize> = (0..nc).filter(|&j| !col_used[j]).collect();
        let k = piv_cols.len();
        let orig = DMatrix::from_fn(m, nc, |i, j| rows[i][cand[j]]);
        let cpp = DMatrix::from_fn(k, k, |a, b| orig[(piv_rows[a], piv_cols[b])]);
        let cpf = DMatrix::from_fn(k, free_local.len(), |a, b| orig[(piv_rows[a], free_local[b])]);
        let lu = cpp.lu();
        let dep = if k == 0 {
            DMatrix::zeros(0, free_local.len())
        } else {
            -lu.solve(&cpf)
                .ok_or_else(|| Error::SingularSystem("constraint pivot block".into()))?
        };
        Ok(Self {
            n_full,
            free: free_local.iter().map(|&j| cand[j]).collect(),
            pivots: piv_cols.iter().map(|&j| cand[j]).collect(),
            dep,
        })
    }

    pub fn n_full(&self) -> usize {
        self.n_full
    }

    pub fn n_free(&self) -> usize {
        self.free.len()
    }

    pub fn expand(&self, uf: &DVector<f64>) -> DVector<f64> {
        let mut u = DVector::zeros(self.n_full);
        for (k, &i) in self.free.iter().enumerate() {
            u[i] = uf[k];
        }
        if !self.pivots.is_empty() {
            let up = &self.dep * uf;
            for (k, &i) in self.pivots.iter().enumerate() {
                u[i] = up[k];
            }
        }
        u
    }

    /// Free coordinates of a full vector (assumed admissible).
    pub fn coordinates(&self, u: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(self.free.len(), self.free.iter().map(|&i| u[i]))
    }

    /// `Tᵀ g`.
    pub fn restrict(&self, g: &DVector<f64>) -> DVector<f64> {
        let mut r = self.coordinates(g);
        if !self.pivots.is_empty() {
            let gp = DVector::from_iterator(self.pivots.len(), self.pivots.iter().map(|&i| g[i]));
            r += self.dep.transpose() * gp;
        }
        r
    }

    /// `Tᵀ K T`.
    pub fn reduce_matrix(&self, k: &DMatrix<f64>) -> DMatrix<f64> {
        let f = &self.free;
        let p = &self.pivots;
        let mut out = k.select_rows(f).select_columns(f);
        if p.is_empty() {
            return out;
        }
        let kfp = k.select_rows(f).select_columns(p);
        let kpp = k.select_rows(p).select_columns(p);
        let cross = &kfp * &self.dep;
        out += &cross + cross.transpose();
        out += self.dep.transpose() * kpp * &self.dep;
        out
    }
}
