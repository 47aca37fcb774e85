//! Solution sets of quadratic matrix inequalities.
//!
//! For a partitioned symmetric `Π` of order `q + r` the set
//! `{Z ∈ ℝ^{r×q} : [I; Z]ᵀ Π [I; Z] ⪰ 0}` is described completely by the
//! generalized Schur complement `Π|Π22` and the block `Π22`:
//!
//! ```text
//! [I; Z]ᵀ Π [I; Z] = Π|Π22 + (Z - C)ᵀ Π22 (Z - C),   C = -Π22† Π21
//! ```
//!
//! which yields closed-form verdicts (bounded, interior, strict and equality
//! sets) and an explicit parameterization by contractions.

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{QmiError, Result};
use crate::linalg::{
    classify, definiteness_scaled, gen_schur, inverse, kernel_inclusion, pinv_sym, range_projector, rank_with_floor, spectral_norm, sym_eig, Definiteness, PartitionedSym, SymEigen, SymMatrix,
    Tolerances,
};
use crate::random::{gaussian, rng as seeded_rng};
use crate::scalar::{lit, to_f64, Real};

/// Which of the three sets a membership query refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SetKind {
    /// `[I; Z]ᵀ Π [I; Z] ⪰ 0`
    Nonstrict,
    /// `[I; Z]ᵀ Π [I; Z] ≻ 0`
    Strict,
    /// `[I; Z]ᵀ Π [I; Z] = 0`
    Zero,
}

/// Outcome of the admissibility test: `Π22 ⪯ 0`, `Π|Π22 ⪰ 0` and
/// `ker Π22 ⊆ ker Π12`.
#[derive(Clone, Debug)]
pub struct AdmissibilityReport<T: Real> {
    pub p22_class: Definiteness,
    pub schur_class: Definiteness,
    pub kernel_inclusion: bool,
    pub schur: SymMatrix<T>,
}

impl<T: Real> AdmissibilityReport<T> {
    pub fn p22_nsd(&self) -> bool {
        self.p22_class.is_nsd()
    }

    pub fn schur_psd(&self) -> bool {
        self.schur_class.is_psd()
    }

    pub fn admissible(&self) -> bool {
        self.p22_nsd() && self.schur_psd() && self.kernel_inclusion
    }

    pub fn describe(&self) -> String {
        format!(
            "P22 {} ({}), Schur complement {} ({}), kernel inclusion {}",
            if self.p22_nsd() { "ok" } else { "fails" },
            self.p22_class.label(),
            if self.schur_psd() { "ok" } else { "fails" },
            self.schur_class.label(),
            if self.kernel_inclusion { "ok" } else { "fails" }
        )
    }
}

/// Spectral norm of `Π`, the scale used by all tolerance tests on `Π`.
pub(crate) fn pi_scale<T: Real>(pi: &PartitionedSym<T>) -> Result<T> {
    Ok(sym_eig(pi.sym())?.norm())
}

/// Checks whether `Π` belongs to the admissible class. Definiteness tests use
/// thresholds scaled by `‖Π‖`.
pub fn check_admissible<T: Real>(pi: &PartitionedSym<T>, tol: &Tolerances<T>) -> Result<AdmissibilityReport<T>> {
    let scale = pi_scale(pi)?;
    let schur = gen_schur(pi, tol)?;
    let p22_class = definiteness_scaled(&pi.p22(), tol, scale)?;
    let schur_class = definiteness_scaled(&schur, tol, scale)?;
    let kernel_inclusion = kernel_inclusion(pi.p22().as_matrix(), &pi.p12(), tol)?;
    Ok(AdmissibilityReport { p22_class, schur_class, kernel_inclusion, schur })
}

fn require_admissible<T: Real>(pi: &PartitionedSym<T>, tol: &Tolerances<T>) -> Result<AdmissibilityReport<T>> {
    let rep = check_admissible(pi, tol)?;
    if rep.admissible() {
        Ok(rep)
    } else {
        Err(QmiError::NotAdmissible(rep.describe()))
    }
}

/// Threshold scale for `[I; Z]ᵀ Π [I; Z]`: rounding in the congruence grows
/// with `‖Π‖ (1 + ‖Z‖²)`.
fn form_scale<T: Real>(pi_norm: T, z: &DMatrix<T>) -> T {
    let zn = z.norm();
    (T::one() + pi_norm) * (T::one() + zn * zn) - T::one()
}

/// Smallest eigenvalue of `[I; Z]ᵀ Π [I; Z]` together with the absolute
/// semidefinite and definite thresholds that apply to it.
pub fn membership_margin<T: Real>(z: &DMatrix<T>, pi: &PartitionedSym<T>, tol: &Tolerances<T>) -> Result<(T, T, T)> {
    let form = pi.quadratic_form(z)?;
    let e = sym_eig(&form)?;
    let s = form_scale(pi_scale(pi)?, z);
    Ok((e.min(), tol.psd_margin(s), tol.pd_margin(s)))
}

/// Tests `Z ∈ Z_r(Π)`, `Z ∈ Z_r⁺(Π)` or `Z ∈ Z_r⁰(Π)`.
pub fn membership<T: Real>(z: &DMatrix<T>, pi: &PartitionedSym<T>, kind: SetKind, tol: &Tolerances<T>) -> Result<bool> {
    let form = pi.quadratic_form(z)?;
    let e = sym_eig(&form)?;
    let class = classify(&e, tol, form_scale(pi_scale(pi)?, z));
    Ok(match kind {
        SetKind::Nonstrict => class.is_psd(),
        SetKind::Strict => class.is_pd(),
        SetKind::Zero => class == Definiteness::Zero,
    })
}

/// Closed-form structural verdicts for an admissible `Π`.
#[derive(Clone, Debug)]
pub struct SetAnalysis<T: Real> {
    pub nonempty: bool,
    pub convex: bool,
    pub bounded: bool,
    pub interior_nonempty: bool,
    pub strict_nonempty: bool,
    pub zero_nonempty: bool,
    /// `-Π22† Π21`, the maximizer of the quadratic form.
    pub center: DMatrix<T>,
    pub schur: SymMatrix<T>,
    pub p22_class: Definiteness,
    pub schur_class: Definiteness,
    pub rank_p22: usize,
    pub rank_schur: usize,
}

/// Decides nonemptiness, boundedness, interior, strict and equality sets.
pub fn analyze<T: Real>(pi: &PartitionedSym<T>, tol: &Tolerances<T>) -> Result<SetAnalysis<T>> {
    let rep = require_admissible(pi, tol)?;
    let floor = tol.psd_margin(pi_scale(pi)?);
    let p22 = pi.p22();
    let rank_p22 = rank_with_floor(p22.as_matrix(), tol, floor)?;
    let rank_schur = rank_with_floor(rep.schur.as_matrix(), tol, floor)?;
    let center = -(pinv_sym(&p22, tol)?.as_matrix() * pi.p21());
    Ok(SetAnalysis {
        nonempty: true,
        convex: true,
        bounded: rep.p22_class.is_nd(),
        interior_nonempty: rep.p22_class == Definiteness::Zero || rep.schur_class.is_pd(),
        strict_nonempty: rep.schur_class.is_pd(),
        zero_nonempty: rank_p22 >= rank_schur,
        center,
        schur: rep.schur,
        p22_class: rep.p22_class,
        schur_class: rep.schur_class,
        rank_p22,
        rank_schur,
    })
}

/// Precomputed factors of an admissible `Π` used by the parameterization.
#[derive(Clone, Debug)]
pub struct SetFactors<T: Real> {
    pub q: usize,
    pub r: usize,
    pub center: DMatrix<T>,
    pub schur: SymMatrix<T>,
    pub schur_class: Definiteness,
    /// `(Π|Π22)^{1/2}`
    pub schur_sqrt: DMatrix<T>,
    /// `((Π|Π22)^{1/2})†`
    pub schur_sqrt_pinv: DMatrix<T>,
    /// `(-Π22)^{1/2}`
    pub neg_p22_sqrt: DMatrix<T>,
    /// `((-Π22)†)^{1/2}`
    pub neg_p22_pinv_sqrt: DMatrix<T>,
    /// `I - Π22† Π22`
    pub kernel_projector: DMatrix<T>,
}

impl<T: Real> SetFactors<T> {
    pub fn new(pi: &PartitionedSym<T>, tol: &Tolerances<T>) -> Result<Self> {
        let rep = require_admissible(pi, tol)?;
        let p22 = pi.p22();
        let neg_eig = sym_eig(&p22.neg())?;
        let schur_eig = sym_eig(&rep.schur)?;
        let r = pi.r();
        // The Schur complement comes out of a cancellation, so eigenvalues
        // at rounding level relative to Π are noise, not directions of the set.
        let floor = tol.psd_margin(pi_scale(pi)?);
        Ok(Self {
            q: pi.q(),
            r,
            center: -(pinv_sym(&p22, tol)?.as_matrix() * pi.p21()),
            schur_sqrt: clamped_sqrt(&schur_eig, false, floor, tol),
            schur_sqrt_pinv: clamped_sqrt(&schur_eig, true, floor, tol),
            neg_p22_sqrt: clamped_sqrt(&neg_eig, false, T::zero(), tol),
            neg_p22_pinv_sqrt: clamped_sqrt(&neg_eig, true, T::zero(), tol),
            kernel_projector: DMatrix::identity(r, r) - range_projector(&p22, tol)?.as_matrix(),
            schur_class: rep.schur_class,
            schur: rep.schur,
        })
    }

    /// `C + ((-Π22)†)^{1/2} S (Π|Π22)^{1/2} + (I - Π22†Π22) T`.
    pub fn compose(&self, s: &DMatrix<T>, t: &DMatrix<T>) -> DMatrix<T> {
        &self.center + &self.neg_p22_pinv_sqrt * s * &self.schur_sqrt + &self.kernel_projector * t
    }
}

/// `A^{1/2}` or `(A†)^{1/2}` of an admissible block. Slightly negative
/// eigenvalues (already accepted by the admissibility test) are clamped, as
/// is anything up to `floor`.
fn clamped_sqrt<T: Real>(e: &SymEigen<T>, inverse: bool, floor: T, tol: &Tolerances<T>) -> DMatrix<T> {
    let cut = crate::scalar::max(tol.rank * e.norm(), floor);
    e.map(|x| {
        if x <= cut || x <= T::zero() {
            T::zero()
        } else if inverse {
            T::one() / x.sqrt()
        } else {
            x.sqrt()
        }
    })
    .into_matrix()
}

/// Parameters `(S, T)` of a member: `S ∈ ℝ^{r×q}` with `SᵀS ⪯ I`, and a free
/// `T ∈ ℝ^{r×q}` that only matters along `ker Π22`.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamPoint<T: Real> {
    pub contraction: DMatrix<T>,
    pub free: DMatrix<T>,
}

/// Maps parameters to a member of the set (or of the strict set).
pub fn parameterize<T: Real>(
    pi: &PartitionedSym<T>,
    point: &ParamPoint<T>,
    strict: bool,
    tol: &Tolerances<T>,
) -> Result<DMatrix<T>> {
    let f = SetFactors::new(pi, tol)?;
    parameterize_with(&f, point, strict, tol)
}

/// [`parameterize`] with precomputed factors.
pub fn parameterize_with<T: Real>(
    f: &SetFactors<T>,
    point: &ParamPoint<T>,
    strict: bool,
    tol: &Tolerances<T>,
) -> Result<DMatrix<T>> {
    let shape = (f.r, f.q);
    if point.contraction.shape() != shape || point.free.shape() != shape {
        return Err(QmiError::DimensionMismatch(format!("parameters must be {}x{}", f.r, f.q)));
    }
    let sn = spectral_norm(&point.contraction)?;
    if strict {
        if !f.schur_class.is_pd() {
            return Err(QmiError::Inapplicable("strict set is empty: Schur complement is not positive definite".into()));
        }
        if sn >= T::one() {
            return Err(QmiError::InvalidParameter(format!("strict parameterization needs ‖S‖ < 1, got {sn}")));
        }
    } else if sn > T::one() + tol.residual {
        return Err(QmiError::InvalidParameter(format!("contraction has norm {sn} > 1")));
    }
    Ok(f.compose(&point.contraction, &point.free))
}

/// Recovers parameters of a member: `S = (-Π22)^{1/2} (Z - C) ((Π|Π22)^{1/2})†`
/// and `T = Z - C`. When tolerance slack pushes `‖S‖` above one, `S` is
/// rescaled to norm one.
pub fn recover_params<T: Real>(z: &DMatrix<T>, pi: &PartitionedSym<T>, tol: &Tolerances<T>) -> Result<ParamPoint<T>> {
    if !membership(z, pi, SetKind::Nonstrict, tol)? {
        return Err(QmiError::NotAMember);
    }
    let f = SetFactors::new(pi, tol)?;
    Ok(recover_with(&f, z))
}

pub(crate) fn recover_with<T: Real>(f: &SetFactors<T>, z: &DMatrix<T>) -> ParamPoint<T> {
    let offset = z - &f.center;
    let mut s = &f.neg_p22_sqrt * &offset * &f.schur_sqrt_pinv;
    if let Ok(sn) = spectral_norm(&s) {
        if sn > T::one() {
            s /= sn;
        }
    }
    ParamPoint { contraction: s, free: offset }
}

/// Settings for random sampling of a solution set.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SampleConfig<T: Real> {
    /// Draw from the strict set instead of the nonstrict one.
    pub strict: bool,
    /// Standard deviation of the free parameter along `ker Π22`.
    pub spread: T,
}

impl<T: Real> Default for SampleConfig<T> {
    fn default() -> Self {
        Self { strict: false, spread: T::one() }
    }
}

/// Draws a random contraction: a Gaussian matrix scaled into the unit ball.
/// For the strict set the norm is drawn uniformly from `[0, 0.9]`, which
/// keeps samples clear of the boundary (a plain radial clamp puts almost
/// every draw at the cap once the matrix is larger than 2x2).
pub(crate) fn random_contraction<T: Real>(rng: &mut ChaCha8Rng, rows: usize, cols: usize, strict: bool) -> DMatrix<T> {
    let g = gaussian::<T>(rng, rows, cols);
    let sn = spectral_norm(&g).unwrap_or_else(|_| T::one());
    if strict {
        if sn == T::zero() {
            return g;
        }
        let radius: T = lit(0.9 * rng.gen_range(0.0..1.0f64));
        g * (radius / sn)
    } else if sn > T::one() {
        g / sn
    } else {
        g
    }
}

/// Draws `count` members through the parameterization with a seeded RNG.
pub fn sample<T: Real>(
    pi: &PartitionedSym<T>,
    count: usize,
    seed: u64,
    cfg: &SampleConfig<T>,
    tol: &Tolerances<T>,
) -> Result<Vec<DMatrix<T>>> {
    if cfg.spread < T::zero() {
        return Err(QmiError::InvalidParameter("spread must be non-negative".into()));
    }
    let f = SetFactors::new(pi, tol)?;
    if cfg.strict && !f.schur_class.is_pd() {
        return Err(QmiError::Inapplicable("strict set is empty".into()));
    }
    let mut rng = seeded_rng(seed);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let mut s = random_contraction(&mut rng, f.r, f.q, cfg.strict);
        let mut t = gaussian::<T>(&mut rng, f.r, f.q) * cfg.spread;
        let mut z = f.compose(&s, &t);
        if cfg.strict {
            // A thin strict set can leave a draw positive definite but below
            // the pd margin; pull both parameters towards zero until it clears
            // (the free part does not move the form but inflates its scale).
            let mut tries = 0;
            while !membership(&z, pi, SetKind::Strict, tol)? {
                tries += 1;
                if tries > 40 {
                    return Err(QmiError::Numerical("strict set is too thin for the pd tolerance".into()));
                }
                s *= lit::<T>(0.5);
                t *= lit::<T>(0.5);
                z = f.compose(&s, &t);
            }
        }
        out.push(z);
    }
    Ok(out)
}

/// Explicit member of the equality set `[I; Z]ᵀ Π [I; Z] = 0`.
///
/// Pairs the ordered spectra of `Π|Π22 = U1 Σ1 U1ᵀ` and `-Π22 = U2 Σ2 U2ᵀ`
/// and returns `C + U2 D^{1/2} U1ᵀ` with `D_ii = Σ1_ii / Σ2_ii`.
pub fn zero_witness<T: Real>(pi: &PartitionedSym<T>, tol: &Tolerances<T>) -> Result<DMatrix<T>> {
    let a = analyze(pi, tol)?;
    if !a.zero_nonempty {
        return Err(QmiError::NoWitness(format!(
            "rank of P22 ({}) is below the rank of the Schur complement ({})",
            a.rank_p22, a.rank_schur
        )));
    }
    let floor = tol.psd_margin(pi_scale(pi)?);
    let e1 = sym_eig(&a.schur)?;
    let e2 = sym_eig(&pi.p22().neg())?;
    let (q, r) = (pi.q(), pi.r());
    let cut2 = crate::scalar::max(tol.rank * e2.norm(), floor);
    let mut d = DMatrix::zeros(r, q);
    for i in 0..q.min(r) {
        if e2.values[i] > cut2 {
            let ratio = crate::scalar::max(e1.values[i], T::zero()) / e2.values[i];
            d[(i, i)] = ratio.sqrt();
        }
    }
    let z = &a.center + &e2.vectors * d * e1.vectors.transpose();
    if !membership(&z, pi, SetKind::Zero, tol)? {
        let (m, _, _) = membership_margin(&z, pi, tol)?;
        return Err(QmiError::Numerical(format!(
            "equality witness failed verification (min eigenvalue {:e})",
            to_f64(m)
        )));
    }
    Ok(z)
}

/// Dual matrix `Π♯ = [0 -I_r; I_q 0] Π⁻¹ [0 -I_q; I_r 0]`, partitioned as
/// `(r, q)`. For nonsingular admissible `Π`, `Z ∈ Z_r(Π)` iff
/// `Zᵀ ∈ Z_q(Π♯)`.
pub fn dualize<T: Real>(pi: &PartitionedSym<T>, tol: &Tolerances<T>) -> Result<PartitionedSym<T>> {
    let (q, r) = (pi.q(), pi.r());
    let inv = inverse(pi.matrix(), tol)?;
    let mut j = DMatrix::<T>::zeros(r + q, q + r);
    j.view_mut((0, q), (r, r)).fill_with_identity();
    j.view_mut((0, q), (r, r)).neg_mut();
    j.view_mut((r, 0), (q, q)).fill_with_identity();
    let m = -(&j * inv * j.transpose());
    PartitionedSym::new(SymMatrix::symmetrize(m), r, q)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn part(n: usize, v: &[f64], q: usize) -> PartitionedSym<f64> {
        PartitionedSym::new(SymMatrix::new(DMatrix::from_row_slice(n, n, v)).unwrap(), q, n - q).unwrap()
    }

    fn scalar(x: f64) -> DMatrix<f64> {
        DMatrix::from_element(1, 1, x)
    }

    #[test]
    fn admissibility_examples() {
        let t = Tolerances::default();
        assert!(check_admissible(&part(2, &[1.0, 0.0, 0.0, -1.0], 1), &t).unwrap().admissible());
        let r = check_admissible(&part(2, &[1.0, 0.0, 0.0, 1.0], 1), &t).unwrap();
        assert!(!r.p22_nsd() && !r.admissible());
        let r = check_admissible(&part(2, &[1.0, 1.0, 1.0, 0.0], 1), &t).unwrap();
        assert!(!r.kernel_inclusion && !r.admissible());
        assert!(check_admissible(&part(2, &[0.0, 0.0, 0.0, 0.0], 1), &t).unwrap().admissible());
    }

    #[test]
    fn membership_examples() {
        let t = Tolerances::default();
        let pi = part(2, &[1.0, 0.0, 0.0, -1.0], 1);
        assert!(membership(&scalar(0.5), &pi, SetKind::Nonstrict, &t).unwrap());
        assert!(!membership(&scalar(2.0), &pi, SetKind::Nonstrict, &t).unwrap());
        assert!(membership(&scalar(1.0), &pi, SetKind::Nonstrict, &t).unwrap());
        assert!(!membership(&scalar(1.0), &pi, SetKind::Strict, &t).unwrap());
        let n = part(2, &[-1.0, 1.0, 1.0, -1.0], 1);
        assert!(membership(&scalar(1.0), &n, SetKind::Zero, &t).unwrap());
        assert!(membership(&DMatrix::zeros(1, 1), &pi, SetKind::Nonstrict, &t).unwrap());
        assert!(membership(&scalar(1.0), &pi, SetKind::Nonstrict, &t).unwrap());
    }

    #[test]
    fn analyze_examples() {
        let t = Tolerances::default();
        let a = analyze(&part(2, &[1.0, 0.0, 0.0, -1.0], 1), &t).unwrap();
        assert!(a.nonempty && a.convex && a.bounded && a.interior_nonempty && a.strict_nonempty && a.zero_nonempty);
        let a = analyze(&part(2, &[1.0, 0.0, 0.0, 0.0], 1), &t).unwrap();
        assert!(!a.bounded && a.interior_nonempty && a.strict_nonempty && !a.zero_nonempty);
        let a = analyze(&part(2, &[-1.0, 1.0, 1.0, -1.0], 1), &t).unwrap();
        assert!(a.bounded && !a.interior_nonempty && !a.strict_nonempty && a.zero_nonempty);
        assert!((a.center[(0, 0)] - 1.0).abs() < 1e-14);
        assert!(matches!(analyze(&part(2, &[1.0, 0.0, 0.0, 1.0], 1), &t), Err(QmiError::NotAdmissible(_))));
    }

    #[test]
    fn parameterize_examples() {
        let t = Tolerances::default();
        let pi = part(2, &[1.0, 0.0, 0.0, -1.0], 1);
        let p = ParamPoint { contraction: scalar(0.5), free: scalar(0.0) };
        assert!((parameterize(&pi, &p, false, &t).unwrap()[(0, 0)] - 0.5).abs() < 1e-15);
        let p = ParamPoint { contraction: scalar(1.0), free: scalar(0.0) };
        assert!((parameterize(&pi, &p, false, &t).unwrap()[(0, 0)] - 1.0).abs() < 1e-15);
        assert!(parameterize(&pi, &p, true, &t).is_err());
        let pi0 = part(2, &[1.0, 0.0, 0.0, 0.0], 1);
        let p = ParamPoint { contraction: scalar(0.3), free: scalar(7.0) };
        assert!((parameterize(&pi0, &p, false, &t).unwrap()[(0, 0)] - 7.0).abs() < 1e-15);
        let p = ParamPoint { contraction: scalar(1.5), free: scalar(0.0) };
        assert!(matches!(parameterize(&pi, &p, false, &t), Err(QmiError::InvalidParameter(_))));
    }

    #[test]
    fn recover_examples() {
        let t = Tolerances::default();
        let pi = part(2, &[1.0, 0.0, 0.0, -1.0], 1);
        let p = recover_params(&scalar(0.5), &pi, &t).unwrap();
        assert!((p.contraction[(0, 0)] - 0.5).abs() < 1e-15);
        assert!(matches!(recover_params(&scalar(2.0), &pi, &t), Err(QmiError::NotAMember)));
    }

    #[test]
    fn sampling_is_deterministic_and_valid() {
        let t = Tolerances::default();
        let pi = part(2, &[1.0, 0.0, 0.0, -1.0], 1);
        let a = sample(&pi, 10, 42, &SampleConfig::default(), &t).unwrap();
        let b = sample(&pi, 10, 42, &SampleConfig::default(), &t).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|z| z[(0, 0)].abs() <= 1.0 + 1e-12));
        let n = part(2, &[-1.0, 1.0, 1.0, -1.0], 1);
        let strict = SampleConfig { strict: true, spread: 1.0 };
        assert!(matches!(sample(&n, 1, 0, &strict, &t), Err(QmiError::Inapplicable(_))));
        let s = sample(&pi, 20, 1, &strict, &t).unwrap();
        assert!(s.iter().all(|z| membership(z, &pi, SetKind::Strict, &t).unwrap()));
    }

    #[test]
    fn witness_examples() {
        let t = Tolerances::default();
        let z = zero_witness(&part(2, &[1.0, 0.0, 0.0, -1.0], 1), &t).unwrap();
        assert!((z[(0, 0)].abs() - 1.0).abs() < 1e-12);
        let z = zero_witness(&part(2, &[-1.0, 1.0, 1.0, -1.0], 1), &t).unwrap();
        assert!((z[(0, 0)] - 1.0).abs() < 1e-12);
        assert!(matches!(zero_witness(&part(2, &[1.0, 0.0, 0.0, 0.0], 1), &t), Err(QmiError::NoWitness(_))));
    }

    #[test]
    fn dualize_examples() {
        let t = Tolerances::default();
        let pi = part(3, &[1.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, -1.0], 1);
        let d = dualize(&pi, &t).unwrap();
        assert_eq!((d.q(), d.r()), (2, 1));
        let expect = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, -1.0]);
        assert!((d.matrix() - expect).norm() < 1e-14);
        assert!(matches!(dualize(&part(2, &[1.0, 0.0, 0.0, 0.0], 1), &t), Err(QmiError::Singular(_))));
    }
}
