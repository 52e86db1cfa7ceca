//! Sparse symmetric matrices and the linear solvers used by the elastic
//! model: an envelope (profile) LDLᵀ factorization under reverse
//! Cuthill–McKee ordering, and Jacobi-preconditioned conjugate gradients
//! for systems whose envelope is too large to factor.

use std::collections::VecDeque;

use crate::{Error, Result};

/// Compressed sparse row matrix with sorted column indices per row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Zero matrix with the given pattern; `rows[i]` lists the columns of row `i`.
    pub fn from_pattern(ncols: usize, rows: &[Vec<usize>]) -> Self {
        let mut row_ptr = Vec::with_capacity(rows.len() + 1);
        let mut col_idx = Vec::new();
        row_ptr.push(0);
        for r in rows {
            let mut cols = r.clone();
            cols.sort_unstable();
            cols.dedup();
            debug_assert!(cols.iter().all(|&c| c < ncols));
            col_idx.extend(cols);
            row_ptr.push(col_idx.len());
        }
        let nnz = col_idx.len();
        CsrMatrix {
            nrows: rows.len(),
            ncols,
            row_ptr,
            col_idx,
            values: vec![0.0; nnz],
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[r.clone()], &self.values[r])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        cols.binary_search(&j).map(|k| vals[k]).unwrap_or(0.0)
    }

    /// Adds `v` to entry `(i, j)`, which must be in the pattern.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let start = self.row_ptr[i];
        let cols = &self.col_idx[start..self.row_ptr[i + 1]];
        let k = cols
            .binary_search(&j)
            .unwrap_or_else(|_| panic!("entry ({i}, {j}) not in sparsity pattern"));
        self.values[start + k] += v;
    }

    pub fn clear(&mut self) {
        self.values.iter_mut().for_each(|v| *v = 0.0);
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols);
        (0..self.nrows)
            .map(|i| {
                let (cols, vals) = self.row(i);
                cols.iter().zip(vals).map(|(&j, &a)| a * x[j]).sum()
            })
            .collect()
    }

    pub fn transpose(&self) -> CsrMatrix {
        let mut rows = vec![Vec::new(); self.ncols];
        for i in 0..self.nrows {
            for &j in self.row(i).0 {
                rows[j].push(i);
            }
        }
        let mut t = CsrMatrix::from_pattern(self.nrows, &rows);
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                t.add(j, i, v);
            }
        }
        t
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest entry of `|A - Aᵀ|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst
    }

    /// Principal submatrix on `keep` (sorted indices), renumbered 0..keep.len().
    pub fn principal_submatrix(&self, keep: &[usize]) -> CsrMatrix {
        let mut map = vec![usize::MAX; self.ncols];
        for (new, &old) in keep.iter().enumerate() {
            map[old] = new;
        }
        let mut row_ptr = Vec::with_capacity(keep.len() + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for &i in keep {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                if map[j] != usize::MAX {
                    col_idx.push(map[j]);
                    values.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        CsrMatrix {
            nrows: keep.len(),
            ncols: keep.len(),
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows).map(|i| self.get(i, i)).collect()
    }
}

/// Reverse Cuthill–McKee ordering of the symmetric pattern of `a`.
/// Returns `perm` with `perm[new] = old`.
pub fn reverse_cuthill_mckee(a: &CsrMatrix) -> Vec<usize> {
    let n = a.nrows();
    let degree: Vec<usize> = (0..n).map(|i| a.row(i).0.len()).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut by_degree: Vec<usize> = (0..n).collect();
    by_degree.sort_by_key(|&i| (degree[i], i));
    for &seed in &by_degree {
        if visited[seed] {
            continue;
        }
        let start = pseudo_peripheral(a, seed, &degree);
        visited[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut nbrs: Vec<usize> = a.row(v).0.iter().copied().filter(|&w| !visited[w]).collect();
            nbrs.sort_by_key(|&w| (degree[w], w));
            for w in nbrs {
                visited[w] = true;
                queue.push_back(w);
            }
        }
    }
    order.reverse();
    order
}

fn bfs_levels(a: &CsrMatrix, start: usize) -> Vec<Vec<usize>> {
    let mut seen = std::collections::HashSet::from([start]);
    let mut levels = vec![vec![start]];
    loop {
        let mut next = Vec::new();
        for &v in levels.last().unwrap() {
            for &w in a.row(v).0 {
                if seen.insert(w) {
                    next.push(w);
                }
            }
        }
        if next.is_empty() {
            return levels;
        }
        next.sort_unstable();
        levels.push(next);
    }
}

fn pseudo_peripheral(a: &CsrMatrix, seed: usize, degree: &[usize]) -> usize {
    let mut v = seed;
    let mut depth = bfs_levels(a, v).len();
    loop {
        let levels = bfs_levels(a, v);
        let last = levels.last().unwrap();
        let cand = *last.iter().min_by_key(|&&w| (degree[w], w)).unwrap();
        let cand_depth = bfs_levels(a, cand).len();
        if cand_depth > depth {
            v = cand;
            depth = cand_depth;
        } else {
            return v;
        }
    }
}

/// Number of stored entries an envelope factorization of `a` under `perm`
/// would need.
pub fn envelope_size(a: &CsrMatrix, perm: &[usize]) -> usize {
    let mut inv = vec![0; perm.len()];
    for (new, &old) in perm.iter().enumerate() {
        inv[old] = new;
    }
    (0..perm.len())
        .map(|i| {
            let first = a.row(perm[i]).0.iter().map(|&j| inv[j]).min().unwrap_or(i).min(i);
            i - first + 1
        })
        .sum()
}

/// LDLᵀ factorization of a symmetric matrix stored row-wise by envelope.
///
/// No pivoting: works for positive definite matrices and for the mildly
/// indefinite tangents that can appear in nonlinear solves.
#[derive(Debug, Clone)]
pub struct EnvelopeLdl {
    perm: Vec<usize>,
    first: Vec<usize>,
    offset: Vec<usize>,
    lower: Vec<f64>,
    diag: Vec<f64>,
}

impl EnvelopeLdl {
    pub fn factor(a: &CsrMatrix) -> Result<Self> {
        let perm = reverse_cuthill_mckee(a);
        Self::factor_with(a, perm)
    }

    pub fn factor_with(a: &CsrMatrix, perm: Vec<usize>) -> Result<Self> {
        let n = a.nrows();
        assert_eq!(n, a.ncols());
        let mut inv = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let mut first = vec![0; n];
        let mut offset = vec![0; n + 1];
        for i in 0..n {
            let f = a.row(perm[i]).0.iter().map(|&j| inv[j]).min().unwrap_or(i).min(i);
            first[i] = f;
            offset[i + 1] = offset[i] + (i - f);
        }
        let mut lower = vec![0.0; offset[n]];
        let mut diag = vec![0.0; n];
        let scale = a.diagonal().iter().fold(0.0_f64, |m, d| m.max(d.abs()));
        let pivot_floor = 1e-14 * scale.max(f64::MIN_POSITIVE);

        // scatter the strictly lower part and the diagonal
        for i in 0..n {
            let (cols, vals) = a.row(perm[i]);
            for (&j, &v) in cols.iter().zip(vals) {
                let jn = inv[j];
                if jn < i {
                    lower[offset[i] + jn - first[i]] = v;
                } else if jn == i {
                    diag[i] = v;
                }
            }
        }

        let mut g = Vec::new();
        for i in 0..n {
            let fi = first[i];
            g.clear();
            g.extend_from_slice(&lower[offset[i]..offset[i + 1]]);
            // g[j - fi] holds L[i,j] * D[j] once computed
            for j in fi..i {
                let fj = first[j];
                let k0 = fi.max(fj);
                let mut s = g[j - fi];
                let lj = &lower[offset[j]..offset[j + 1]];
                for k in k0..j {
                    s -= lj[k - fj] * g[k - fi];
                }
                g[j - fi] = s;
            }
            let mut d = diag[i];
            for j in fi..i {
                let l = g[j - fi] / diag[j];
                d -= l * g[j - fi];
                lower[offset[i] + j - fi] = l;
            }
            if !(d.abs() > pivot_floor) || !d.is_finite() {
                return Err(Error::Singular {
                    context: "LDLT factorization",
                    residual_norm: d.abs(),
                });
            }
            diag[i] = d;
        }
        Ok(EnvelopeLdl {
            perm,
            first,
            offset,
            lower,
            diag,
        })
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.dim();
        assert_eq!(b.len(), n);
        let mut z: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let fi = self.first[i];
            let li = &self.lower[self.offset[i]..self.offset[i + 1]];
            let s: f64 = li.iter().zip(&z[fi..i]).map(|(l, x)| l * x).sum();
            z[i] -= s;
        }
        for (zi, d) in z.iter_mut().zip(&self.diag) {
            *zi /= d;
        }
        for i in (0..n).rev() {
            let fi = self.first[i];
            let zi = z[i];
            let li = &self.lower[self.offset[i]..self.offset[i + 1]];
            for (k, l) in li.iter().enumerate() {
                z[fi + k] -= l * zi;
            }
        }
        let mut x = vec![0.0; n];
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = z[new];
        }
        x
    }
}

/// Outcome of a conjugate-gradient solve.
#[derive(Debug, Clone)]
pub struct CgOutcome {
    pub solution: Vec<f64>,
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Jacobi-preconditioned conjugate gradients, stopping at
/// `‖b - A x‖ ≤ rtol ‖b‖`.
pub fn conjugate_gradient(a: &CsrMatrix, b: &[f64], rtol: f64, max_iters: usize) -> Result<CgOutcome> {
    let n = b.len();
    let bnorm = norm(b);
    if bnorm == 0.0 {
        return Ok(CgOutcome {
            solution: vec![0.0; n],
            iterations: 0,
            relative_residual: 0.0,
        });
    }
    let inv_diag: Vec<f64> = a
        .diagonal()
        .iter()
        .map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 })
        .collect();
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, m)| r * m).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    for it in 0..max_iters {
        let rel = norm(&r) / bnorm;
        if rel <= rtol {
            return Ok(CgOutcome {
                solution: x,
                iterations: it,
                relative_residual: rel,
            });
        }
        let ap = a.mul_vec(&p);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::Singular {
                context: "conjugate gradient (matrix not positive definite)",
                residual_norm: rel,
            });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        z = r.iter().zip(&inv_diag).map(|(r, m)| r * m).collect();
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    let rel = norm(&r) / bnorm;
    Err(Error::Singular {
        context: "conjugate gradient (iteration limit)",
        residual_norm: rel,
    })
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
