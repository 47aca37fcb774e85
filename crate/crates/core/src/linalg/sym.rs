use nalgebra::DMatrix;

use crate::error::{QmiError, Result};
use crate::scalar::{abs, lit, max, to_f64, Real};

use super::Tolerances;

/// Checks that every entry of `m` is finite.
pub fn ensure_finite<T: Real>(m: &DMatrix<T>, what: &str) -> Result<()> {
    if m.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(QmiError::NonFinite(what.to_string()))
    }
}

/// Largest absolute entry.
pub fn max_abs<T: Real>(m: &DMatrix<T>) -> T {
    m.iter().fold(T::zero(), |acc, &x| max(acc, abs(x)))
}

/// A real symmetric matrix, stored exactly symmetric.
#[derive(Clone, Debug, PartialEq)]
pub struct SymMatrix<T: Real>(DMatrix<T>);

impl<T: Real> SymMatrix<T> {
    /// Validates symmetry with the default tolerances and symmetrizes.
    pub fn new(m: DMatrix<T>) -> Result<Self> {
        Self::new_with(m, &Tolerances::default())
    }

    /// Validates symmetry up to `tol.residual * (1 + max|a_ij|)` and averages
    /// the matrix with its transpose.
    pub fn new_with(m: DMatrix<T>, tol: &Tolerances<T>) -> Result<Self> {
        if !m.is_square() {
            return Err(QmiError::DimensionMismatch(format!(
                "symmetric matrix must be square, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        ensure_finite(&m, "symmetric matrix")?;
        let asym = max_abs(&(&m - m.transpose()));
        if asym > tol.residual_bound(max_abs(&m)) {
            return Err(QmiError::NotSymmetric(to_f64(asym)));
        }
        Ok(Self::symmetrize(m))
    }

    /// Averages a square matrix with its transpose without checking the
    /// asymmetry. Meant for products that are symmetric up to rounding.
    pub fn symmetrize(m: DMatrix<T>) -> Self {
        assert!(m.is_square(), "symmetrize needs a square matrix");
        let half: T = lit(0.5);
        let t = m.transpose();
        Self((m + t) * half)
    }

    pub fn zeros(n: usize) -> Self {
        Self(DMatrix::zeros(n, n))
    }

    pub fn identity(n: usize) -> Self {
        Self(DMatrix::identity(n, n))
    }

    pub fn from_diagonal(d: &[T]) -> Self {
        let n = d.len();
        Self(DMatrix::from_fn(n, n, |i, j| if i == j { d[i] } else { T::zero() }))
    }

    /// Block-diagonal matrix `diag(a, b)`.
    pub fn block_diag(a: &SymMatrix<T>, b: &SymMatrix<T>) -> Self {
        let (p, q) = (a.dim(), b.dim());
        let mut m = DMatrix::zeros(p + q, p + q);
        m.view_mut((0, 0), (p, p)).copy_from(a.as_matrix());
        m.view_mut((p, p), (q, q)).copy_from(b.as_matrix());
        Self(m)
    }

    /// `Xᵀ A X`, symmetrized.
    pub fn congruence(&self, x: &DMatrix<T>) -> Self {
        Self::symmetrize(x.transpose() * &self.0 * x)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<T> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<T> {
        self.0
    }

    pub fn scale(&self, s: T) -> Self {
        Self(&self.0 * s)
    }

    pub fn add(&self, other: &SymMatrix<T>) -> Self {
        Self(&self.0 + &other.0)
    }

    pub fn sub(&self, other: &SymMatrix<T>) -> Self {
        Self(&self.0 - &other.0)
    }

    pub fn neg(&self) -> Self {
        Self(-&self.0)
    }

    /// Converts to another scalar type.
    pub fn cast<U: Real>(&self) -> SymMatrix<U> {
        SymMatrix(self.0.map(|x| lit::<U>(to_f64(x))))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accepts_near_symmetric_and_averages() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0 + 1e-12, 3.0]);
        let s = SymMatrix::new(m).unwrap();
        assert_eq!(s.as_matrix()[(0, 1)], s.as_matrix()[(1, 0)]);
    }

    #[test]
    fn rejects_asymmetric() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 3.0]);
        assert!(matches!(SymMatrix::new(m), Err(QmiError::NotSymmetric(_))));
    }

    #[test]
    fn rejects_nonsquare_and_nan() {
        assert!(SymMatrix::new(DMatrix::<f64>::zeros(2, 3)).is_err());
        let m = DMatrix::from_row_slice(1, 1, &[f64::NAN]);
        assert!(matches!(SymMatrix::new(m), Err(QmiError::NonFinite(_))));
    }
}
