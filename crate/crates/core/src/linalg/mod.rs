//! Dense symmetric linear algebra: eigen-decomposition, pseudo-inverses,
//! square roots, ranks, definiteness classes and generalized Schur
//! complements.
//!
//! Every spectral quantity is derived from [`sym_eig`]. Rectangular inputs go
//! through their Jordan–Wielandt embedding so that singular values carry the
//! same backward error as the eigenvalues.

mod eig;
mod partitioned;
mod sym;
mod tolerance;

pub use eig::{
    classify, definiteness, definiteness_scaled, kernel_inclusion, pinv, pinv_sym, psd_pinv_sqrt, psd_sqrt,
    range_projector, rank, rank_with_floor, singular_values, spectral_norm, sym_eig, Definiteness, SymEigen,
};
pub use partitioned::{gen_schur, PartitionedSym};
pub use sym::{ensure_finite, max_abs, SymMatrix};
pub use tolerance::Tolerances;

use nalgebra::DMatrix;

use crate::error::{QmiError, Result};
use crate::scalar::Real;

/// Inverse of a square matrix, failing on numerical singularity.
pub fn inverse<T: Real>(a: &DMatrix<T>, tol: &Tolerances<T>) -> Result<DMatrix<T>> {
    if !a.is_square() {
        return Err(QmiError::DimensionMismatch("inverse of a non-square matrix".into()));
    }
    if rank(a, tol)? < a.nrows() {
        return Err(QmiError::Singular("matrix is rank deficient".into()));
    }
    a.clone().try_inverse().ok_or_else(|| QmiError::Singular("LU factorization failed".into()))
}

/// Stacks `top` over `bottom`.
pub fn vstack<T: Real>(top: &DMatrix<T>, bottom: &DMatrix<T>) -> DMatrix<T> {
    assert_eq!(top.ncols(), bottom.ncols(), "vstack column mismatch");
    let mut m = DMatrix::zeros(top.nrows() + bottom.nrows(), top.ncols());
    m.view_mut((0, 0), top.shape()).copy_from(top);
    m.view_mut((top.nrows(), 0), bottom.shape()).copy_from(bottom);
    m
}

/// Places `left` beside `right`.
pub fn hstack<T: Real>(left: &DMatrix<T>, right: &DMatrix<T>) -> DMatrix<T> {
    assert_eq!(left.nrows(), right.nrows(), "hstack row mismatch");
    let mut m = DMatrix::zeros(left.nrows(), left.ncols() + right.ncols());
    m.view_mut((0, 0), left.shape()).copy_from(left);
    m.view_mut((0, left.ncols()), right.shape()).copy_from(right);
    m
}
