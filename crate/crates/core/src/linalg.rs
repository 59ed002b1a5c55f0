//! Banded storage with LU factorization, plus a small dense solver.

use crate::error::{check_len, Error, Result};

/// Square band matrix with `kl` sub- and `ku` super-diagonals.
///
/// Each row reserves `kl` extra columns to the right so the factorization
/// can absorb fill-in from row interchanges without reallocating.
#[derive(Debug, Clone, PartialEq)]
pub struct BandedMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
}

impl BandedMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        Self {
            n,
            kl,
            ku,
            width,
            data: vec![0.0; n * width],
        }
    }

    pub fn identity(n: usize, kl: usize, ku: usize) -> Self {
        let mut m = Self::zeros(n, kl, ku);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn lower_bandwidth(&self) -> usize {
        self.kl
    }

    pub fn upper_bandwidth(&self) -> usize {
        self.ku
    }

    fn in_band(&self, i: usize, j: usize) -> bool {
        j + self.kl >= i && j <= i + self.ku
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        i * self.width + (j + self.kl - i)
    }

    /// Entry `(i, j)`; zero outside the band.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i < self.n && j < self.n && self.in_band(i, j) {
            self.data[self.idx(i, j)]
        } else {
            0.0
        }
    }

    /// Panics if `(i, j)` lies outside the declared band.
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        assert!(
            i < self.n && j < self.n && self.in_band(i, j),
            "({i}, {j}) outside band"
        );
        let k = self.idx(i, j);
        self.data[k] = value;
    }

    pub fn add(&mut self, i: usize, j: usize, value: f64) {
        let current = self.get(i, j);
        self.set(i, j, current + value);
    }

    /// Column range `(lo, hi)` (inclusive) of row `i` inside the band.
    pub fn row_span(&self, i: usize) -> (usize, usize) {
        (i.saturating_sub(self.kl), (i + self.ku).min(self.n - 1))
    }

    pub fn matvec_into(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        debug_assert_eq!(out.len(), self.n);
        for (i, o) in out.iter_mut().enumerate() {
            let (lo, hi) = self.row_span(i);
            let base = self.idx(i, lo);
            *o = self.data[base..=base + (hi - lo)]
                .iter()
                .zip(&x[lo..=hi])
                .map(|(a, b)| a * b)
                .sum();
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len("vector", self.n, x.len())?;
        let mut out = vec![0.0; self.n];
        self.matvec_into(x, &mut out);
        Ok(out)
    }

    /// Entrywise `self + scale * other`; both must share the band shape.
    pub fn add_scaled(&self, scale: f64, other: &BandedMatrix) -> BandedMatrix {
        assert_eq!((self.n, self.kl, self.ku), (other.n, other.kl, other.ku));
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + scale * b)
            .collect();
        BandedMatrix {
            data,
            ..self.clone()
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Gaussian elimination with partial pivoting inside the band.
    pub fn factorize(&self) -> Result<BandedLu> {
        let mut a = self.clone();
        let n = a.n;
        let kl = a.kl;
        let reach = a.kl + a.ku;
        let mut pivots = Vec::with_capacity(n);
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = a.data[a.idx(k, k)].abs();
            for i in k + 1..=last_row {
                let v = a.data[a.idx(i, k)].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == 0.0 || !best.is_finite() {
                return Err(Error::Singular { determinant: 0.0 });
            }
            let last_col = (k + reach).min(n - 1);
            if p != k {
                for j in k..=last_col {
                    let (ik, ip) = (a.idx(k, j), a.idx(p, j));
                    a.data.swap(ik, ip);
                }
            }
            pivots.push(p);
            let pivot = a.data[a.idx(k, k)];
            for i in k + 1..=last_row {
                let ik = a.idx(i, k);
                let l = a.data[ik] / pivot;
                a.data[ik] = l;
                if l != 0.0 {
                    for j in k + 1..=last_col {
                        let (ij, kj) = (a.idx(i, j), a.idx(k, j));
                        a.data[ij] -= l * a.data[kj];
                    }
                }
            }
        }
        Ok(BandedLu { lu: a, pivots })
    }
}

/// Factorization produced by [`BandedMatrix::factorize`].
#[derive(Debug, Clone, PartialEq)]
pub struct BandedLu {
    lu: BandedMatrix,
    pivots: Vec<usize>,
}

impl BandedLu {
    pub fn n(&self) -> usize {
        self.lu.n
    }

    /// Overwrites `b` with the solution of `A x = b`.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let a = &self.lu;
        let n = a.n;
        debug_assert_eq!(b.len(), n);
        for k in 0..n {
            let p = self.pivots[k];
            if p != k {
                b.swap(k, p);
            }
            let bk = b[k];
            if bk != 0.0 {
                for i in k + 1..=(k + a.kl).min(n - 1) {
                    b[i] -= a.data[a.idx(i, k)] * bk;
                }
            }
        }
        let reach = a.kl + a.ku;
        for i in (0..n).rev() {
            let mut s = b[i];
            for j in i + 1..=(i + reach).min(n - 1) {
                s -= a.data[a.idx(i, j)] * b[j];
            }
            b[i] = s / a.data[a.idx(i, i)];
        }
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        check_len("right-hand side", self.n(), b.len())?;
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        Ok(x)
    }
}

/// Solves a small dense system by elimination with partial pivoting.
///
/// Returns the determinant alongside the solution; the solution is `None`
/// when a pivot vanishes exactly.
pub fn dense_solve<const N: usize>(
    mut a: [[f64; N]; N],
    mut b: [f64; N],
) -> (f64, Option<[f64; N]>) {
    let mut det = 1.0;
    for k in 0..N {
        let p = (k..N)
            .max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs()))
            .unwrap_or(k);
        if a[p][k] == 0.0 {
            return (0.0, None);
        }
        if p != k {
            a.swap(p, k);
            b.swap(p, k);
            det = -det;
        }
        det *= a[k][k];
        for i in k + 1..N {
            let l = a[i][k] / a[k][k];
            for j in k..N {
                a[i][j] -= l * a[k][j];
            }
            b[i] -= l * b[k];
        }
    }
    let mut x = [0.0; N];
    for i in (0..N).rev() {
        let s: f64 = (i + 1..N).map(|j| a[i][j] * x[j]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    (det, Some(x))
}

/// Determinant by the same pivoted elimination as [`dense_solve`].
pub fn dense_determinant<const N: usize>(a: [[f64; N]; N]) -> f64 {
    dense_solve(a, [0.0; N]).0
}
