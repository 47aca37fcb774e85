use crate::error::{QmiError, Result};
use crate::scalar::{lit, max, to_f64, Real};

/// Numerical thresholds used by every definiteness, rank and residual test.
///
/// The `psd` and `pd` thresholds are relative: a test on a matrix of size
/// `s` (usually its spectral norm) compares against `psd * (1 + s)`.
/// `rank` is relative to the largest singular value.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances<T: Real> {
    pub psd: T,
    pub pd: T,
    pub rank: T,
    pub residual: T,
}

impl<T: Real> Tolerances<T> {
    pub fn new(psd: T, pd: T, rank: T, residual: T) -> Result<Self> {
        if psd < T::zero() {
            return Err(QmiError::InvalidTolerance(format!("psd tolerance {psd} is negative")));
        }
        if pd <= psd {
            return Err(QmiError::InvalidTolerance(format!(
                "pd tolerance {pd} must exceed psd tolerance {psd}"
            )));
        }
        if rank <= T::zero() || residual <= T::zero() {
            return Err(QmiError::InvalidTolerance("rank and residual tolerances must be positive".into()));
        }
        Ok(Self { psd, pd, rank, residual })
    }

    /// Absolute slack allowed below zero for a semidefinite test at scale `s`.
    pub fn psd_margin(&self, scale: T) -> T {
        self.psd * (T::one() + scale)
    }

    /// Absolute clearance above zero required for a definite test at scale `s`.
    pub fn pd_margin(&self, scale: T) -> T {
        self.pd * (T::one() + scale)
    }

    pub fn residual_bound(&self, scale: T) -> T {
        self.residual * (T::one() + scale)
    }
}

impl<T: Real> Default for Tolerances<T> {
    /// `1e-9 / 1e-7 / 1e-10 / 1e-8` in double precision. For coarser scalar
    /// types each threshold is raised to a fixed multiple of machine epsilon.
    fn default() -> Self {
        let eps = to_f64(T::default_epsilon());
        Self {
            psd: lit(f64::max(1e-9, 64.0 * eps)),
            pd: lit(f64::max(1e-7, 4096.0 * eps)),
            rank: lit(f64::max(1e-10, 64.0 * eps)),
            residual: lit(f64::max(1e-8, 1024.0 * eps)),
        }
    }
}

impl<T: Real> Tolerances<T> {
    /// Same thresholds with `psd` and `pd` multiplied by `factor`.
    pub fn loosened(&self, factor: T) -> Self {
        Self {
            psd: self.psd * factor,
            pd: max(self.pd * factor, self.psd * factor * lit(2.0)),
            rank: self.rank,
            residual: self.residual * factor,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_f64() {
        let t = Tolerances::<f64>::default();
        assert_eq!((t.psd, t.pd, t.rank, t.residual), (1e-9, 1e-7, 1e-10, 1e-8));
    }

    #[test]
    fn defaults_f32_are_valid() {
        let t = Tolerances::<f32>::default();
        assert!(t.pd > t.psd && t.psd > 0.0);
    }

    #[test]
    fn rejects_bad_ordering() {
        assert!(Tolerances::new(1e-7, 1e-9, 1e-10, 1e-8).is_err());
        assert!(Tolerances::new(-1.0, 1e-9, 1e-10, 1e-8).is_err());
    }
}
