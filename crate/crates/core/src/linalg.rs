//! Sparse storage for the assembled tangent and a banded Cholesky solver.

use crate::error::{Error, Result};

/// Compressed sparse row matrix with sorted, duplicate-free columns.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub cols: Vec<usize>,
    pub vals: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from `(row, col, value)` triplets; duplicates are summed in
    /// input order, so the result is independent of thread scheduling as
    /// long as the triplets are.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut counts = vec![0usize; n + 1];
        for &(r, _, _) in triplets {
            counts[r + 1] += 1;
        }
        for i in 0..n {
            counts[i + 1] += counts[i];
        }
        let mut fill = counts.clone();
        let mut entries = vec![(0usize, 0.0f64, 0usize); triplets.len()];
        for (k, &(r, c, v)) in triplets.iter().enumerate() {
            entries[fill[r]] = (c, v, k);
            fill[r] += 1;
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for r in 0..n {
            let row = &mut entries[counts[r]..counts[r + 1]];
            row.sort_by_key(|&(c, _, k)| (c, k));
            let mut last = usize::MAX;
            for &(c, v, _) in row.iter() {
                if c == last {
                    *vals.last_mut().unwrap() += v;
                } else {
                    cols.push(c);
                    vals.push(v);
                    last = c;
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

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let row = &self.cols[self.row_ptr[r]..self.row_ptr[r + 1]];
        match row.binary_search(&c) {
            Ok(k) => self.vals[self.row_ptr[r] + k],
            Err(_) => 0.0,
        }
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (self.cols[k], self.vals[k]))
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|r| self.row(r).map(|(c, v)| v * x[c]).sum())
            .collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.vals.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// `max |K_ij − K_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0_f64;
        for r in 0..self.n {
            for (c, v) in self.row(r) {
                worst = worst.max((v - self.get(c, r)).abs());
            }
        }
        worst
    }

    /// Largest `|i − j|` over stored entries.
    pub fn bandwidth(&self) -> usize {
        let mut b = 0;
        for r in 0..self.n {
            for (c, _) in self.row(r) {
                b = b.max(r.abs_diff(c));
            }
        }
        b
    }
}

/// Cholesky factor of a symmetric positive definite band matrix.
#[derive(Debug, Clone)]
pub struct BandCholesky {
    n: usize,
    bw: usize,
    // Row i holds L[i][i-bw..=i] at offsets 0..=bw.
    lower: Vec<f64>,
}

impl BandCholesky {
    /// Factors `K + shift·I` using the lower band of `K`.
    pub fn factor(k: &CsrMatrix, shift: f64) -> Result<Self> {
        let n = k.n;
        let bw = k.bandwidth();
        let w = bw + 1;
        let mut lower = vec![0.0; n * w];
        for r in 0..n {
            for (c, v) in k.row(r) {
                if c <= r {
                    lower[r * w + (c + bw - r)] = v;
                }
            }
            lower[r * w + bw] += shift;
        }
        for i in 0..n {
            let j0 = i.saturating_sub(bw);
            for j in j0..=i {
                let mut s = lower[i * w + (j + bw - i)];
                let k0 = j0.max(j.saturating_sub(bw));
                for kk in k0..j {
                    s -= lower[i * w + (kk + bw - i)] * lower[j * w + (kk + bw - j)];
                }
                if j == i {
                    if !(s > 0.0) || !s.is_finite() {
                        return Err(Error::NoConvergence {
                            iterations: 0,
                            residual: s,
                            context: format!("matrix not positive definite at pivot {i}"),
                        });
                    }
                    lower[i * w + bw] = s.sqrt();
                } else {
                    lower[i * w + (j + bw - i)] = s / lower[j * w + bw];
                }
            }
        }
        Ok(Self { n, bw, lower })
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let (n, bw, w) = (self.n, self.bw, self.bw + 1);
        let mut y = rhs.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for kk in i.saturating_sub(bw)..i {
                s -= self.lower[i * w + (kk + bw - i)] * y[kk];
            }
            y[i] = s / self.lower[i * w + bw];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for kk in i + 1..(i + bw + 1).min(n) {
                s -= self.lower[kk * w + (i + bw - kk)] * y[kk];
            }
            y[i] = s / self.lower[i * w + bw];
        }
        y
    }
}

/// Smallest eigenvalue of an SPD matrix by inverse iteration.
pub fn smallest_eigenvalue(k: &CsrMatrix, iterations: usize) -> Result<f64> {
    let chol = BandCholesky::factor(k, 0.0)?;
    let n = k.n;
    // Deterministic, non-degenerate start vector.
    let mut x: Vec<f64> = (0..n).map(|i| 1.0 + ((i * 7919) % 101) as f64 / 101.0).collect();
    let mut lambda = 0.0;
    for _ in 0..iterations {
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        x.iter_mut().for_each(|v| *v /= norm);
        let y = chol.solve(&x);
        let ray: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
        lambda = 1.0 / ray;
        x = y;
    }
    Ok(lambda)
}

pub fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves a tridiagonal system; `sub[0]` and `sup[n−1]` are ignored.
pub fn solve_tridiagonal(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    for i in 0..n {
        let denom = diag[i] - if i > 0 { sub[i] * c[i - 1] } else { 0.0 };
        if denom == 0.0 || !denom.is_finite() {
            return Err(Error::NoConvergence {
                iterations: 0,
                residual: denom,
                context: format!("zero pivot in tridiagonal solve at row {i}"),
            });
        }
        c[i] = if i + 1 < n { sup[i] / denom } else { 0.0 };
        d[i] = (rhs[i] - if i > 0 { sub[i] * d[i - 1] } else { 0.0 }) / denom;
    }
    for i in (0..n.saturating_sub(1)).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian(n: usize) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i > 0 {
                t.push((i, i - 1, -1.0));
                t.push((i - 1, i, -1.0));
            }
        }
        CsrMatrix::from_triplets(n, &t)
    }

    #[test]
    fn triplets_sum_duplicates() {
        let m = CsrMatrix::from_triplets(2, &[(0, 0, 1.0), (1, 0, 2.0), (0, 0, 3.0), (0, 1, 5.0)]);
        assert_eq!(m.get(0, 0), 4.0);
        assert_eq!(m.get(0, 1), 5.0);
        assert_eq!(m.get(1, 1), 0.0);
        assert_eq!(m.asymmetry(), 3.0);
    }

    #[test]
    fn band_cholesky_solves_laplacian() {
        let n = 50;
        let k = laplacian(n);
        let x: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let b = k.matvec(&x);
        let sol = BandCholesky::factor(&k, 0.0).unwrap().solve(&b);
        for (a, e) in sol.iter().zip(&x) {
            assert!((a - e).abs() < 1e-10);
        }
    }

    #[test]
    fn indefinite_matrix_rejected() {
        let m = CsrMatrix::from_triplets(2, &[(0, 0, 1.0), (0, 1, 2.0), (1, 0, 2.0), (1, 1, 1.0)]);
        assert!(BandCholesky::factor(&m, 0.0).is_err());
        assert!(BandCholesky::factor(&m, 2.0).is_ok());
    }

    #[test]
    fn tridiagonal_matches_band_solver() {
        let n = 30;
        let k = laplacian(n);
        let b: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).cos()).collect();
        let x = solve_tridiagonal(&vec![-1.0; n], &vec![2.0; n], &vec![-1.0; n], &b).unwrap();
        let r = k.matvec(&x);
        for (a, e) in r.iter().zip(&b) {
            assert!((a - e).abs() < 1e-12);
        }
    }

    #[test]
    fn inverse_iteration_finds_laplacian_minimum() {
        let n = 20;
        let exact = 2.0 - 2.0 * (std::f64::consts::PI / (n as f64 + 1.0)).cos();
        let l = smallest_eigenvalue(&laplacian(n), 200).unwrap();
        assert!((l - exact).abs() < 1e-10);
    }
}
