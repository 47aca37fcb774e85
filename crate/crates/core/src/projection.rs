//! Projections of solution sets under right multiplication.
//!
//! For `W ∈ ℝ^{q×p}` the image `{Z W : Z ∈ Z_r(Π)}` is the solution set of
//! `Π_W = diag(Wᵀ, I) Π diag(W, I)`, whose Schur complement is `Wᵀ (Π|Π22) W`.
//! [`lift`] inverts the map: it produces a member `Z` of the original set with
//! `Z W = Z'` for a given member `Z'` of the projected set.

use nalgebra::DMatrix;

use crate::error::{QmiError, Result};
use crate::linalg::{pinv, rank, spectral_norm, sym_eig, Definiteness, PartitionedSym, SymMatrix, Tolerances};
use crate::scalar::{to_f64, Real};
use crate::sets::{check_admissible, membership, recover_with, SetFactors, SetKind};

/// `Π`, `W`, the projected matrix `Π_W` and the factors needed to lift.
#[derive(Clone, Debug)]
pub struct Projection<T: Real> {
    pub pi: PartitionedSym<T>,
    pub w: DMatrix<T>,
    pub projected: PartitionedSym<T>,
    pub w_full_column_rank: bool,
    pub p22_nonsingular: bool,
    pub schur_class: Definiteness,
    factors: SetFactors<T>,
}

/// Forms `Π_W` for an admissible `Π` and `W` with `q` rows.
pub fn project<T: Real>(pi: &PartitionedSym<T>, w: &DMatrix<T>, tol: &Tolerances<T>) -> Result<Projection<T>> {
    if w.nrows() != pi.q() || w.ncols() == 0 {
        return Err(QmiError::DimensionMismatch(format!(
            "W must have {} rows and at least one column, got {}x{}",
            pi.q(),
            w.nrows(),
            w.ncols()
        )));
    }
    let factors = SetFactors::new(pi, tol)?;
    let p11 = SymMatrix::symmetrize(w.transpose() * pi.p11().as_matrix() * w);
    let p12 = w.transpose() * pi.p12();
    let projected = PartitionedSym::from_blocks(&p11, &p12, &pi.p22())?;
    let rep = check_admissible(pi, tol)?;
    Ok(Projection {
        pi: pi.clone(),
        w: w.clone(),
        w_full_column_rank: rank(w, tol)? == w.ncols(),
        p22_nonsingular: rep.p22_class.is_nd(),
        schur_class: rep.schur_class,
        projected,
        factors,
    })
}

impl<T: Real> Projection<T> {
    /// Whether [`lift`] applies in the requested mode.
    pub fn lift_applicable(&self, strict: bool) -> bool {
        if strict {
            self.w_full_column_rank && self.schur_class.is_pd()
        } else {
            self.w_full_column_rank || self.p22_nonsingular
        }
    }
}

/// Returns `Z` in `Z_r(Π)` (or the strict set) with `Z W = Z'`.
///
/// Applicable when `W` has full column rank or `Π22` is nonsingular; the
/// strict variant needs full column rank and a positive definite Schur
/// complement.
pub fn lift<T: Real>(z_proj: &DMatrix<T>, ctx: &Projection<T>, strict: bool, tol: &Tolerances<T>) -> Result<DMatrix<T>> {
    if !ctx.lift_applicable(strict) {
        return Err(QmiError::Inapplicable(if strict {
            "strict lifting needs W of full column rank and a positive definite Schur complement".into()
        } else {
            "lifting needs W of full column rank or a nonsingular P22".into()
        }));
    }
    let kind = if strict { SetKind::Strict } else { SetKind::Nonstrict };
    if !membership(z_proj, &ctx.projected, kind, tol)? {
        return Err(QmiError::NotAMember);
    }
    let f = &ctx.factors;
    let fw = SetFactors::new(&ctx.projected, tol)?;
    let params = recover_with(&fw, z_proj);
    let w = &ctx.w;
    // A = (Wᵀ (Π|Π22) W)^{1/2}, B = (Π|Π22)^{1/2} W, AᵀA = BᵀB, so A B† is a
    // contraction with (A B†) B = A.
    let b = &f.schur_sqrt * w;
    let a = sym_eig(&SymMatrix::symmetrize(b.transpose() * &b))?
        .map(|x| if x > T::zero() { x.sqrt() } else { T::zero() })
        .into_matrix();
    let link = &a * pinv(&b, tol)?;
    let mut z = &f.center + &f.neg_p22_pinv_sqrt * &params.contraction * &link * &f.schur_sqrt;
    if !ctx.p22_nonsingular {
        z += &f.kernel_projector * &params.free * pinv(w, tol)?;
    }
    let resid = (&z * w - z_proj).norm();
    let scale = z_proj.norm() + z.norm() * spectral_norm(w)?;
    if resid > tol.residual_bound(scale) {
        return Err(QmiError::Numerical(format!("lift residual {:e} too large", to_f64(resid))));
    }
    if !membership(&z, &ctx.pi, kind, tol)? {
        return Err(QmiError::Numerical("lifted matrix failed membership verification".into()));
    }
    Ok(z)
}
