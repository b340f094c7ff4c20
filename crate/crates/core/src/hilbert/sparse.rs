//! Sparse symmetric matrices and the preconditioned conjugate gradient solver.

use crate::error::{LmmError, Result};

/// Compressed sparse row matrix with sorted column indices.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl CsrMatrix {
    /// Builds a matrix from per-row `(column, value)` lists. Duplicate
    /// columns within a row are summed.
    pub fn from_rows(rows: Vec<Vec<(usize, f64)>>) -> Self {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|&(c, _)| c);
            for (c, v) in row {
                assert!(c < n, "column {c} out of range for {n}x{n} matrix");
                if cols.len() > *row_ptr.last().unwrap() && *cols.last().unwrap() == c {
                    *vals.last_mut().unwrap() += v;
                } else {
                    cols.push(c);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        Self {
            n,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[range.clone()]
            .iter()
            .copied()
            .zip(self.vals[range].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.cols[range.clone()].binary_search(&j) {
            Ok(pos) => self.vals[range.start + pos],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        debug_assert_eq!(y.len(), self.n);
        for (i, yi) in y.iter_mut().enumerate() {
            let mut s = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.vals[k] * x[self.cols[k]];
            }
            *yi = s;
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.mul_vec_into(x, &mut y);
        y
    }

    /// Largest `|A_ij - A_ji|` over the stored pattern.
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst
    }

    /// Half-bandwidth: `max |i - j|` over stored entries.
    pub fn bandwidth(&self) -> usize {
        (0..self.n)
            .flat_map(|i| self.row(i).map(move |(j, _)| i.abs_diff(j)))
            .max()
            .unwrap_or(0)
    }
}

pub trait Preconditioner {
    /// Applies `z = M⁻¹ r`.
    fn apply(&self, r: &[f64], z: &mut [f64]);
}

/// Diagonal scaling.
#[derive(Debug, Clone)]
pub struct Jacobi {
    inv_diag: Vec<f64>,
}

impl Jacobi {
    pub fn new(a: &CsrMatrix) -> Result<Self> {
        let inv_diag = a
            .diagonal()
            .into_iter()
            .enumerate()
            .map(|(i, d)| {
                if d > 0.0 {
                    Ok(1.0 / d)
                } else {
                    Err(LmmError::NotPositiveDefinite { pivot: i, value: d })
                }
            })
            .collect::<Result<_>>()?;
        Ok(Self { inv_diag })
    }
}

impl Preconditioner for Jacobi {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        for ((zi, ri), di) in z.iter_mut().zip(r).zip(&self.inv_diag) {
            *zi = ri * di;
        }
    }
}

/// Zero fill-in incomplete Cholesky factor `A ≈ L Lᵀ`.
#[derive(Debug, Clone)]
pub struct IncompleteCholesky {
    // lower triangle of L by rows, diagonal last in each row
    lower: CsrMatrix,
}

impl IncompleteCholesky {
    pub fn new(a: &CsrMatrix) -> Result<Self> {
        let n = a.dim();
        let mut rows: Vec<Vec<(usize, f64)>> = Vec::with_capacity(n);
        for i in 0..n {
            let mut row: Vec<(usize, f64)> = Vec::new();
            for (k, aik) in a.row(i).filter(|&(k, _)| k < i) {
                // sum over j < k present in both row i (so far) and row k
                let mut s = aik;
                let rk = &rows[k];
                let (mut p, mut q) = (0, 0);
                while p < row.len() && q < rk.len() {
                    let (cj, lij) = row[p];
                    let (ck, lkj) = rk[q];
                    if cj >= k || ck >= k {
                        break;
                    }
                    match cj.cmp(&ck) {
                        std::cmp::Ordering::Less => p += 1,
                        std::cmp::Ordering::Greater => q += 1,
                        std::cmp::Ordering::Equal => {
                            s -= lij * lkj;
                            p += 1;
                            q += 1;
                        }
                    }
                }
                let lkk = rk.last().expect("row has a diagonal").1;
                row.push((k, s / lkk));
            }
            let d = a.get(i, i) - row.iter().map(|&(_, l)| l * l).sum::<f64>();
            if !(d > 0.0) {
                return Err(LmmError::NotPositiveDefinite { pivot: i, value: d });
            }
            row.push((i, d.sqrt()));
            rows.push(row);
        }
        Ok(Self {
            lower: CsrMatrix::from_rows(rows),
        })
    }
}

impl Preconditioner for IncompleteCholesky {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        let l = &self.lower;
        let n = l.dim();
        // L y = r
        for i in 0..n {
            let mut s = r[i];
            let mut diag = 1.0;
            for (j, v) in l.row(i) {
                if j == i {
                    diag = v;
                } else {
                    s -= v * z[j];
                }
            }
            z[i] = s / diag;
        }
        // Lᵀ z = y, column sweep
        for i in (0..n).rev() {
            let diag = l.get(i, i);
            z[i] /= diag;
            let zi = z[i];
            for (j, v) in l.row(i) {
                if j != i {
                    z[j] -= v * zi;
                }
            }
        }
    }
}

/// Exact Cholesky factor in band storage.
///
/// Five-point operators on a grid numbered along its shorter axis have
/// half-bandwidth of one grid line, so the factor fits in `n·(bw+1)` values.
#[derive(Debug, Clone)]
pub struct BandCholesky {
    n: usize,
    bw: usize,
    // row i holds L[i, i-bw ..= i] at i*(bw+1) .. (i+1)*(bw+1)
    data: Vec<f64>,
}

impl BandCholesky {
    pub fn new(a: &CsrMatrix) -> Result<Self> {
        let n = a.dim();
        let bw = a.bandwidth();
        let w = bw + 1;
        let mut data = vec![0.0; n * w];
        for i in 0..n {
            for (j, v) in a.row(i).filter(|&(j, _)| j <= i) {
                data[i * w + (j + bw - i)] = v;
            }
        }
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            for j in lo..=i {
                let jlo = j.saturating_sub(bw).max(lo);
                let mut s = data[i * w + (j + bw - i)];
                let ri = i * w + bw - i;
                let rj = j * w + bw - j;
                for k in jlo..j {
                    s -= data[ri + k] * data[rj + k];
                }
                if i == j {
                    if !(s > 0.0) {
                        return Err(LmmError::NotPositiveDefinite { pivot: i, value: s });
                    }
                    data[i * w + bw] = s.sqrt();
                } else {
                    data[i * w + (j + bw - i)] = s / data[j * w + bw];
                }
            }
        }
        Ok(Self { n, bw, data })
    }

    pub fn solve_into(&self, b: &[f64], x: &mut [f64]) {
        let (n, bw, w) = (self.n, self.bw, self.bw + 1);
        x.copy_from_slice(b);
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            let ri = i * w + bw - i;
            let mut s = x[i];
            for k in lo..i {
                s -= self.data[ri + k] * x[k];
            }
            x[i] = s / self.data[i * w + bw];
        }
        for i in (0..n).rev() {
            x[i] /= self.data[i * w + bw];
            let xi = x[i];
            let lo = i.saturating_sub(bw);
            let ri = i * w + bw - i;
            for k in lo..i {
                x[k] -= self.data[ri + k] * xi;
            }
        }
    }
}

impl Preconditioner for BandCholesky {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        self.solve_into(r, z);
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PcgStats {
    pub iterations: usize,
    /// `‖b - Ax‖₂ / ‖b‖₂` at exit.
    pub relative_residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Preconditioned conjugate gradients for SPD `A x = b`, starting from zero.
///
/// Converged when `‖b - Ax‖₂ ≤ rel_tol·‖b‖₂`, with the residual recomputed
/// from scratch before returning.
pub fn pcg(
    a: &CsrMatrix,
    b: &[f64],
    precond: &dyn Preconditioner,
    rel_tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, PcgStats)> {
    let n = a.dim();
    assert_eq!(b.len(), n);
    let b_norm = dot(b, b).sqrt();
    let mut x = vec![0.0; n];
    if b_norm == 0.0 {
        return Ok((
            x,
            PcgStats {
                iterations: 0,
                relative_residual: 0.0,
            },
        ));
    }
    let target = rel_tol * b_norm;
    let mut r = b.to_vec();
    let mut z = vec![0.0; n];
    precond.apply(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let mut iterations = 0;
    let mut true_res = b_norm;
    while iterations < max_iter {
        a.mul_vec_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(LmmError::NotPositiveDefinite {
                pivot: iterations,
                value: pap,
            });
        }
        let step = rz / pap;
        for i in 0..n {
            x[i] += step * p[i];
            r[i] -= step * ap[i];
        }
        iterations += 1;
        if dot(&r, &r).sqrt() <= target {
            // guard against drift in the recursive residual
            a.mul_vec_into(&x, &mut ap);
            for i in 0..n {
                r[i] = b[i] - ap[i];
            }
            true_res = dot(&r, &r).sqrt();
            if true_res <= target {
                return Ok((
                    x,
                    PcgStats {
                        iterations,
                        relative_residual: true_res / b_norm,
                    },
                ));
            }
        }
        precond.apply(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
        true_res = dot(&r, &r).sqrt();
    }
    Err(LmmError::LinearSolve {
        iterations,
        residual: true_res / b_norm,
    })
}
