//! Banded LU factorization with partial pivoting.
//!
//! Row `i` stores columns `i - kl ..= i + ku + kl`; the extra `kl` columns
//! hold the fill-in produced by row interchanges.

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
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

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> usize {
        debug_assert!(j + self.kl >= i && j <= i + self.ku + self.kl);
        i * self.width + (j + self.kl - i)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[self.slot(i, j)]
    }

    /// Adds `v` to entry `(i, j)`, which must lie inside the declared band.
    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        assert!(j + self.kl >= i && j <= i + self.ku, "entry outside band");
        let s = self.slot(i, j);
        self.data[s] += v;
    }

    /// `y = A x` using the unfactored band.
    pub fn mul(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.n {
            let lo = i.saturating_sub(self.kl);
            let hi = (i + self.ku).min(self.n - 1);
            y[i] = (lo..=hi).map(|j| self.get(i, j) * x[j]).sum();
        }
    }

    pub fn factor(mut self) -> Result<BandedLu> {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        let mut pivots = vec![0usize; n];
        for j in 0..n {
            let last_row = (j + kl).min(n - 1);
            let last_col = (j + kl + ku).min(n - 1);
            let mut p = j;
            let mut best = self.get(j, j).abs();
            for i in j + 1..=last_row {
                let v = self.get(i, j).abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == 0.0 || !best.is_finite() {
                return Err(Error::InvalidConfig(format!(
                    "singular banded matrix at column {j}"
                )));
            }
            pivots[j] = p;
            if p != j {
                for c in j..=last_col {
                    let (a, b) = (self.slot(j, c), self.slot(p, c));
                    self.data.swap(a, b);
                }
            }
            let pivot = self.get(j, j);
            for i in j + 1..=last_row {
                let s = self.slot(i, j);
                let l = self.data[s] / pivot;
                self.data[s] = l;
                if l != 0.0 {
                    for c in j + 1..=last_col {
                        let u = self.data[self.slot(j, c)];
                        let t = self.slot(i, c);
                        self.data[t] -= l * u;
                    }
                }
            }
        }
        Ok(BandedLu { m: self, pivots })
    }
}

#[derive(Debug, Clone)]
pub struct BandedLu {
    m: BandedMatrix,
    pivots: Vec<usize>,
}

impl BandedLu {
    /// Overwrites `b` with `A⁻¹ b`.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let BandedMatrix { n, kl, ku, .. } = self.m;
        for j in 0..n {
            let p = self.pivots[j];
            if p != j {
                b.swap(j, p);
            }
            let bj = b[j];
            if bj != 0.0 {
                for i in j + 1..=(j + kl).min(n - 1) {
                    b[i] -= self.m.get(i, j) * bj;
                }
            }
        }
        for i in (0..n).rev() {
            let mut acc = b[i];
            for c in i + 1..=(i + kl + ku).min(n - 1) {
                acc -= self.m.get(i, c) * b[c];
            }
            b[i] = acc / self.m.get(i, i);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_with_pivoting() {
        // zero on the diagonal forces a row swap
        let mut a = BandedMatrix::zeros(4, 1, 1);
        let entries = [
            (0, 0, 0.0),
            (0, 1, 2.0),
            (1, 0, 1.0),
            (1, 1, 1.0),
            (1, 2, 3.0),
            (2, 1, 4.0),
            (2, 2, -1.0),
            (2, 3, 1.0),
            (3, 2, 2.0),
            (3, 3, 5.0),
        ];
        for (i, j, v) in entries {
            a.add(i, j, v);
        }
        let x = [1.0, -2.0, 0.5, 3.0];
        let mut b = [0.0; 4];
        a.mul(&x, &mut b);
        let lu = a.factor().unwrap();
        lu.solve_in_place(&mut b);
        for i in 0..4 {
            assert!((b[i] - x[i]).abs() < 1e-14, "{b:?}");
        }
    }

    #[test]
    fn singular_is_rejected() {
        let a = BandedMatrix::zeros(3, 1, 1);
        assert!(a.factor().is_err());
    }
}
