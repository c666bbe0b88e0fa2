//! Small dense symmetric matrices for Schur complements and effective
//! theories. These stay at dimension ~100; everything here is a plain
//! textbook Cholesky kept separate from the dense oracle.

use crate::error::{Error, Result};

/// Dense real symmetric matrix, row-major full storage.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseSym {
    n: usize,
    data: Vec<f64>,
}

impl DenseSym {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        let mut m = Self::zeros(n);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), n);
            for j in 0..n {
                m.data[i * n + j] = row[j];
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
        self.data[j * self.n + i] = v;
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] += v;
        if i != j {
            self.data[j * self.n + i] += v;
        }
    }

    /// Submatrix on the given (sorted or not) index list, in list order.
    pub fn submatrix(&self, idx: &[usize]) -> DenseSym {
        let k = idx.len();
        let mut out = DenseSym::zeros(k);
        for a in 0..k {
            for b in 0..k {
                out.data[a * k + b] = self.get(idx[a], idx[b]);
            }
        }
        out
    }

    /// Rectangular block rows x cols as a row-major vector of rows.
    pub fn block(&self, rows: &[usize], cols: &[usize]) -> Vec<Vec<f64>> {
        rows.iter()
            .map(|&i| cols.iter().map(|&j| self.get(i, j)).collect())
            .collect()
    }

    /// In-place lower Cholesky. Returns the factor packed in the lower
    /// triangle of a copy.
    fn cholesky(&self) -> Result<Vec<f64>> {
        let n = self.n;
        let mut a = self.data.clone();
        for j in 0..n {
            let mut d = a[j * n + j];
            for k in 0..j {
                d -= a[j * n + k] * a[j * n + k];
            }
            if d <= 0.0 || !d.is_finite() {
                return Err(Error::NotPositiveDefinite { pivot: j });
            }
            let dj = d.sqrt();
            a[j * n + j] = dj;
            for i in (j + 1)..n {
                let mut s = a[i * n + j];
                for k in 0..j {
                    s -= a[i * n + k] * a[j * n + k];
                }
                a[i * n + j] = s / dj;
            }
        }
        Ok(a)
    }

    pub fn logdet(&self) -> Result<f64> {
        let l = self.cholesky()?;
        Ok(2.0 * (0..self.n).map(|j| l[j * self.n + j].ln()).sum::<f64>())
    }

    /// Schur complement of this matrix onto `keep`, eliminating `drop`:
    /// `S = A_kk - A_kd A_dd^{-1} A_dk`. `keep` and `drop` must partition 0..n.
    pub fn schur_onto(&self, keep: &[usize], drop: &[usize]) -> Result<DenseSym> {
        if keep.len() + drop.len() != self.n {
            return Err(Error::InvalidPartition(
                "dense schur_onto: keep + drop must cover all indices".into(),
            ));
        }
        if drop.is_empty() {
            return Ok(self.submatrix(keep));
        }
        let nd = drop.len();
        let add = self.submatrix(drop);
        let l = add.cholesky()?;
        // Solve L w = A_dk column by column, then S = A_kk - W^T W.
        let mut w = vec![vec![0.0; nd]; keep.len()];
        for (c, &k) in keep.iter().enumerate() {
            let col = &mut w[c];
            for (r, &d) in drop.iter().enumerate() {
                col[r] = self.get(d, k);
            }
            for j in 0..nd {
                col[j] /= l[j * nd + j];
                let wj = col[j];
                for i in (j + 1)..nd {
                    col[i] -= l[i * nd + j] * wj;
                }
            }
        }
        let mut s = self.submatrix(keep);
        for a in 0..keep.len() {
            for b in a..keep.len() {
                let dot: f64 = (0..nd).map(|r| w[a][r] * w[b][r]).sum();
                let v = s.get(a, b) - dot;
                s.set(a, b, v);
            }
        }
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn logdet_identity_and_diag() {
        let mut m = DenseSym::zeros(10);
        for i in 0..10 {
            m.set(i, i, 1.0);
        }
        assert!(m.logdet().unwrap().abs() < 1e-15);
        let mut d = DenseSym::zeros(2);
        d.set(0, 0, 2.0);
        d.set(1, 1, 2.0);
        assert!((d.logdet().unwrap() - 2.0 * 2f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn not_spd_names_pivot() {
        let mut m = DenseSym::zeros(3);
        m.set(0, 0, 1.0);
        m.set(1, 1, -1.0);
        m.set(2, 2, 1.0);
        match m.logdet() {
            Err(Error::NotPositiveDefinite { pivot }) => assert_eq!(pivot, 1),
            other => panic!("expected pivot error, got {other:?}"),
        }
    }

    #[test]
    fn schur_2x2() {
        let m = DenseSym::from_rows(&[vec![2.0, 1.0], vec![1.0, 3.0]]);
        let s = m.schur_onto(&[1], &[0]).unwrap();
        assert!((s.get(0, 0) - 2.5).abs() < 1e-15);
        let total = m.logdet().unwrap();
        assert!((total - (2.0f64.ln() + 2.5f64.ln())).abs() < 1e-14);
    }
}
