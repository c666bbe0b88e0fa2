//! Dense reference implementations used only for validation.
//!
//! Everything here goes through nalgebra's dense factorizations and shares
//! no code with the sparse path. A hard dimension cap keeps the oracle from
//! being used at production scale.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::materials::MaterialMap;
use crate::operators::{self, SparseOperator};
use crate::quadrature::{FrequencyGrid, WaveOperator};

pub const DENSE_DIM_CAP: usize = 4096;

/// Dense symmetric matrix wrapper enforcing the oracle cap.
pub struct DenseMatrix {
    m: DMatrix<f64>,
}

impl DenseMatrix {
    pub fn from_sparse(a: &SparseOperator) -> Result<Self> {
        if a.nrows != a.ncols {
            return Err(Error::InvalidPartition(format!(
                "oracle needs a square matrix, got {}x{}",
                a.nrows, a.ncols
            )));
        }
        if a.nrows > DENSE_DIM_CAP {
            return Err(Error::DimensionCap {
                dim: a.nrows,
                cap: DENSE_DIM_CAP,
            });
        }
        let mut m = DMatrix::zeros(a.nrows, a.ncols);
        for c in 0..a.ncols {
            for p in a.colptr[c]..a.colptr[c + 1] {
                m[(a.rowind[p], c)] = a.values[p];
            }
        }
        let sym_err = (&m - m.transpose()).norm();
        if sym_err > 1e-13 * (1.0 + m.norm()) {
            return Err(Error::InvalidPartition(format!(
                "oracle input is not symmetric (deviation {sym_err:e})"
            )));
        }
        Ok(Self { m })
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    /// Smallest eigenvalue by dense symmetric eigendecomposition.
    pub fn min_eigenvalue(&self) -> f64 {
        self.m
            .clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min)
    }

    /// Largest/smallest eigenvalue ratio.
    pub fn condition_number(&self) -> f64 {
        let ev = self.m.clone().symmetric_eigen().eigenvalues;
        let max = ev.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = ev.iter().cloned().fold(f64::INFINITY, f64::min);
        max / min
    }
}

/// Dense log-determinant via Cholesky; fails on non-SPD input.
pub fn dense_logdet(a: &DenseMatrix) -> Result<f64> {
    let chol = a
        .m
        .clone()
        .cholesky()
        .ok_or(Error::NotPositiveDefinite { pivot: 0 })?;
    Ok(2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>())
}

pub fn dense_logdet_sparse(a: &SparseOperator) -> Result<f64> {
    dense_logdet(&DenseMatrix::from_sparse(a)?)
}

/// Eq.-style free energy difference evaluated entirely through dense
/// factorizations: `sum_k (w_k J_k / 2 pi) [ln det D1 - ln det D2]`.
pub fn dense_free_energy_difference(
    cfg1: &MaterialMap,
    cfg2: &MaterialMap,
    grid: &FrequencyGrid,
    operator: WaveOperator,
    c: f64,
) -> Result<f64> {
    if cfg1.lattice() != cfg2.lattice() {
        return Err(Error::LatticeMismatch(
            "dense_free_energy_difference over different lattices".into(),
        ));
    }
    let lat = *cfg1.lattice();
    let mut total = 0.0;
    for node in grid.nodes() {
        let (d1, d2) = match operator {
            WaveOperator::VectorPotential => (
                operators::assemble_da(&lat, cfg1, node.omega, c)?,
                operators::assemble_da(&lat, cfg2, node.omega, c)?,
            ),
            WaveOperator::MagneticPotential => (
                operators::assemble_dg(&lat, cfg1, node.omega, c)?,
                operators::assemble_dg(&lat, cfg2, node.omega, c)?,
            ),
        };
        let diff = dense_logdet_sparse(&d1)? - dense_logdet_sparse(&d2)?;
        total += node.quadrature_weight() * diff;
    }
    Ok(total)
}
