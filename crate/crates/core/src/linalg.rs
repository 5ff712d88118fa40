//! Dense symmetric matrices and Cholesky factorization.

use crate::error::{Error, Result};

/// Square matrix stored row-major in full.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        Self { n, data }
    }

    /// Builds from row vectors; fails if the input is not square.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for row in rows {
            if row.len() != n {
                return Err(Error::domain(format!(
                    "matrix is not square: {} rows, row of length {}",
                    n,
                    row.len()
                )));
            }
            data.extend_from_slice(row);
        }
        Ok(Self { n, data })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }

    /// Applies `P A Pᵀ` for the permutation `perm` (new index k holds old `perm[k]`).
    pub fn permuted(&self, perm: &[usize]) -> Self {
        Self::from_fn(self.n, |i, j| self.get(perm[i], perm[j]))
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            n: self.n,
            data: self.data.iter().map(|v| v * c).collect(),
        }
    }
}

/// Lower-triangular factor in packed row storage: row `i` holds `L[i][0..=i]`.
#[derive(Debug, Clone)]
pub struct LowerFactor {
    n: usize,
    packed: Vec<f64>,
}

#[inline]
fn row_offset(i: usize) -> usize {
    i * (i + 1) / 2
}

/// Dot product with four independent accumulators; the summation order is
/// fixed, so results are bit-reproducible.
#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for k in 0..chunks {
        let p = 4 * k;
        acc[0] += a[p] * b[p];
        acc[1] += a[p + 1] * b[p + 1];
        acc[2] += a[p + 2] * b[p + 2];
        acc[3] += a[p + 3] * b[p + 3];
    }
    let mut tail = 0.0;
    for p in 4 * chunks..a.len() {
        tail += a[p] * b[p];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

impl LowerFactor {
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        let o = row_offset(i);
        &self.packed[o..o + i + 1]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if j > i {
            0.0
        } else {
            self.packed[row_offset(i) + j]
        }
    }

    /// `out = L z`.
    pub fn mul_vec(&self, z: &[f64], out: &mut [f64]) {
        assert_eq!(z.len(), self.n);
        assert_eq!(out.len(), self.n);
        for (i, o) in out.iter_mut().enumerate() {
            *o = dot(self.row(i), &z[..=i]);
        }
    }

    /// Entry `(i, j)` of `L Lᵀ`.
    pub fn product_entry(&self, i: usize, j: usize) -> f64 {
        let k = i.min(j) + 1;
        dot(&self.row(i)[..k], &self.row(j)[..k])
    }
}

/// Cholesky factorization of `a + jitter·I`. On failure returns the
/// (zero-based) index of the first non-positive leading minor.
pub fn cholesky(a: &SymMatrix, jitter: f64) -> std::result::Result<LowerFactor, usize> {
    let n = a.n();
    let mut packed = vec![0.0; row_offset(n)];
    for i in 0..n {
        let oi = row_offset(i);
        for j in 0..=i {
            let oj = row_offset(j);
            let s = dot(&packed[oi..oi + j], &packed[oj..oj + j]);
            if i == j {
                let d = a.get(i, i) + jitter - s;
                if !(d > 0.0) || !d.is_finite() {
                    return Err(i);
                }
                packed[oi + i] = d.sqrt();
            } else {
                packed[oi + j] = (a.get(i, j) - s) / packed[oj + j];
            }
        }
    }
    Ok(LowerFactor { n, packed })
}

/// Diagonal jitter values tried in order when factorization fails.
pub const JITTER_LADDER: [f64; 4] = [0.0, 1e-14, 1e-12, 1e-10];

/// Factorizes with the smallest jitter from [`JITTER_LADDER`] that succeeds.
pub fn cholesky_with_ladder(a: &SymMatrix) -> Result<(LowerFactor, f64)> {
    let mut last = (0, 0.0);
    for &jitter in &JITTER_LADDER {
        match cholesky(a, jitter) {
            Ok(l) => return Ok((l, jitter)),
            Err(minor) => last = (minor, jitter),
        }
    }
    Err(Error::Factorization {
        minor: last.0,
        jitter: last.1,
    })
}
