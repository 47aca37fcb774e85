use nalgebra::DMatrix;

use crate::error::{QmiError, Result};
use crate::scalar::Real;

use super::{pinv_sym, SymMatrix, Tolerances};

/// Symmetric matrix of order `q + r` split into blocks
/// `[[P11 (q×q), P12 (q×r)], [P21, P22 (r×r)]]`.
#[derive(Clone, Debug, PartialEq)]
pub struct PartitionedSym<T: Real> {
    mat: SymMatrix<T>,
    q: usize,
    r: usize,
}

impl<T: Real> PartitionedSym<T> {
    pub fn new(mat: SymMatrix<T>, q: usize, r: usize) -> Result<Self> {
        if q == 0 || r == 0 {
            return Err(QmiError::DimensionMismatch(format!("block sizes must be positive, got q={q}, r={r}")));
        }
        if mat.dim() != q + r {
            return Err(QmiError::DimensionMismatch(format!(
                "matrix of order {} cannot be split as {q} + {r}",
                mat.dim()
            )));
        }
        Ok(Self { mat, q, r })
    }

    /// Assembles `[[p11, p12], [p12ᵀ, p22]]`.
    pub fn from_blocks(p11: &SymMatrix<T>, p12: &DMatrix<T>, p22: &SymMatrix<T>) -> Result<Self> {
        let (q, r) = (p11.dim(), p22.dim());
        if p12.shape() != (q, r) {
            return Err(QmiError::DimensionMismatch(format!(
                "off-diagonal block is {}x{}, expected {q}x{r}",
                p12.nrows(),
                p12.ncols()
            )));
        }
        let mut m = DMatrix::zeros(q + r, q + r);
        m.view_mut((0, 0), (q, q)).copy_from(p11.as_matrix());
        m.view_mut((0, q), (q, r)).copy_from(p12);
        m.view_mut((q, 0), (r, q)).copy_from(&p12.transpose());
        m.view_mut((q, q), (r, r)).copy_from(p22.as_matrix());
        Self::new(SymMatrix::symmetrize(m), q, r)
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn sym(&self) -> &SymMatrix<T> {
        &self.mat
    }

    pub fn matrix(&self) -> &DMatrix<T> {
        self.mat.as_matrix()
    }

    pub fn p11(&self) -> SymMatrix<T> {
        SymMatrix::symmetrize(self.matrix().view((0, 0), (self.q, self.q)).clone_owned())
    }

    pub fn p12(&self) -> DMatrix<T> {
        self.matrix().view((0, self.q), (self.q, self.r)).clone_owned()
    }

    pub fn p21(&self) -> DMatrix<T> {
        self.matrix().view((self.q, 0), (self.r, self.q)).clone_owned()
    }

    pub fn p22(&self) -> SymMatrix<T> {
        SymMatrix::symmetrize(self.matrix().view((self.q, self.q), (self.r, self.r)).clone_owned())
    }

    /// `[I; Z]ᵀ Π [I; Z]` for `Z` of shape `r × q`.
    pub fn quadratic_form(&self, z: &DMatrix<T>) -> Result<SymMatrix<T>> {
        if z.shape() != (self.r, self.q) {
            return Err(QmiError::DimensionMismatch(format!(
                "expected a {}x{} matrix, got {}x{}",
                self.r,
                self.q,
                z.nrows(),
                z.ncols()
            )));
        }
        let mut stacked = DMatrix::zeros(self.q + self.r, self.q);
        stacked.view_mut((0, 0), (self.q, self.q)).fill_with_identity();
        stacked.view_mut((self.q, 0), (self.r, self.q)).copy_from(z);
        Ok(self.mat.congruence(&stacked))
    }

    pub fn cast<U: Real>(&self) -> PartitionedSym<U> {
        PartitionedSym { mat: self.mat.cast(), q: self.q, r: self.r }
    }
}

/// Generalized Schur complement `Π|Π22 = Π11 - Π12 Π22† Π21`.
pub fn gen_schur<T: Real>(pi: &PartitionedSym<T>, tol: &Tolerances<T>) -> Result<SymMatrix<T>> {
    let p22_pinv = pinv_sym(&pi.p22(), tol)?;
    let correction = pi.p12() * p22_pinv.as_matrix() * pi.p21();
    Ok(SymMatrix::symmetrize(pi.p11().as_matrix() - correction))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn part(n: usize, v: &[f64], q: usize) -> PartitionedSym<f64> {
        PartitionedSym::new(SymMatrix::new(DMatrix::from_row_slice(n, n, v)).unwrap(), q, n - q).unwrap()
    }

    #[test]
    fn schur_examples() {
        let t = Tolerances::default();
        assert!((gen_schur(&part(2, &[2.0, 1.0, 1.0, 1.0], 1), &t).unwrap().as_matrix()[(0, 0)] - 1.0).abs() < 1e-14);
        assert!((gen_schur(&part(2, &[1.0, 0.0, 0.0, 0.0], 1), &t).unwrap().as_matrix()[(0, 0)] - 1.0).abs() < 1e-14);
        assert!(gen_schur(&part(2, &[-1.0, 1.0, 1.0, -1.0], 1), &t).unwrap().as_matrix()[(0, 0)].abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_split() {
        assert!(PartitionedSym::new(SymMatrix::<f64>::identity(3), 1, 1).is_err());
        assert!(PartitionedSym::new(SymMatrix::<f64>::identity(2), 2, 0).is_err());
    }

    #[test]
    fn blocks_roundtrip() {
        let p = part(3, &[1.0, 2.0, 3.0, 2.0, 4.0, 5.0, 3.0, 5.0, 6.0], 1);
        let back = PartitionedSym::from_blocks(&p.p11(), &p.p12(), &p.p22()).unwrap();
        assert_eq!(back, p);
    }
}
