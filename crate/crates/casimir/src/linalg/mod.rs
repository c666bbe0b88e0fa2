//! Sparse SPD factorization, log-determinants and Schur-complement blocking.

mod cholesky;
mod dense;
mod ordering;
mod schur;

pub use cholesky::{factorize, factorize_with_perm, CholeskyFactor, PIVOT_WARN_RATIO};
pub use dense::DenseSym;
pub use ordering::{min_degree_order, nested_dissection_order};
pub use schur::{perturbed_logdet_family, schur_complement, Perturbation, SchurPlan, SchurResult};

/// `ln det A` from a factor; thin named wrapper matching the factor method.
pub fn logdet(f: &CholeskyFactor) -> f64 {
    f.logdet()
}

/// Convenience: factor and take the log-determinant in one step.
pub fn sparse_logdet(a: &crate::operators::SparseOperator) -> crate::error::Result<f64> {
    Ok(factorize(a)?.logdet())
}
