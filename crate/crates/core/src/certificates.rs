//! Inclusion certificates between solution sets (matrix S-lemma variants,
//! Finsler-type reductions, Petersen's lemma) and counterexample search.
//!
//! A certificate is a scalar `α ≥ 0` (and possibly `β > 0`) such that
//! `M - αN ⪰ 0`, `M - αN ≻ 0` or `M - αN ⪰ diag(βI, 0)`. Any certificate
//! implies the corresponding inclusion of `Z_r(N)` in the solution set of `M`.
//! Under the reported hypotheses the converse holds as well, and a failed
//! search is then backed by an explicit counterexample from
//! [`falsify_inclusion`].

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{QmiError, Result};
use crate::linalg::{
    definiteness_scaled, kernel_inclusion, pinv, psd_sqrt, spectral_norm, sym_eig, Definiteness,
    PartitionedSym, SymMatrix, Tolerances,
};
use crate::random::{gaussian, rng as seeded_rng};
use crate::scalar::{lit, max, to_f64, Real};
use crate::sets::{check_admissible, membership, membership_margin, pi_scale, sample, SampleConfig, SetKind};

/// Which theorem a certificate instantiates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CertificateKind {
    /// `M - αN ⪰ 0`
    Nonstrict,
    /// `M - αN ≻ 0`
    Strict,
    /// `M - αN ⪰ diag(βI, 0)` with `β > 0`
    AlphaBeta,
    /// `M - αN ⪰ 0` under the Finsler-type hypotheses
    FinslerNonstrict,
    /// `M - αN ⪰ diag(βI, 0)` under the Finsler-type hypotheses
    FinslerStrict,
}

impl CertificateKind {
    pub fn label(self) -> &'static str {
        match self {
            Self::Nonstrict => "nonstrict",
            Self::Strict => "strict",
            Self::AlphaBeta => "alpha-beta",
            Self::FinslerNonstrict => "finsler-nonstrict",
            Self::FinslerStrict => "finsler-strict",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Certificate<T: Real> {
    pub kind: CertificateKind,
    pub alpha: T,
    pub beta: Option<T>,
    /// `λ_min(M - αN - diag(βI, 0))`, re-verified.
    pub margin: T,
}

/// Side conditions under which a failed search proves non-inclusion.
#[derive(Clone, Debug, PartialEq)]
pub struct Hypotheses {
    pub n_admissible: bool,
    /// `N` has a positive eigenvalue.
    pub slater: bool,
    pub n22_negative_definite: bool,
    pub m22_nsd: bool,
    /// The search is both sufficient and necessary for the inclusion.
    pub equivalence: bool,
}

#[derive(Clone, Debug)]
pub struct SearchReport<T: Real> {
    pub certificate: Option<Certificate<T>>,
    /// Best multiplier found and the value of the search objective there.
    pub best_alpha: T,
    pub best_value: T,
    pub hypotheses: Hypotheses,
}

fn check_pair<T: Real>(m: &PartitionedSym<T>, n: &PartitionedSym<T>) -> Result<()> {
    if m.q() != n.q() || m.r() != n.r() {
        return Err(QmiError::DimensionMismatch(format!(
            "M is split {}+{} but N is split {}+{}",
            m.q(),
            m.r(),
            n.q(),
            n.r()
        )));
    }
    Ok(())
}

fn hypotheses<T: Real>(m: &PartitionedSym<T>, n: &PartitionedSym<T>, tol: &Tolerances<T>) -> Result<Hypotheses> {
    let rep = check_admissible(n, tol)?;
    let n_scale = pi_scale(n)?;
    let n_eig = sym_eig(n.sym())?;
    let m_scale = pi_scale(m)?;
    Ok(Hypotheses {
        n_admissible: rep.admissible(),
        slater: n_eig.max() > tol.pd_margin(n_scale),
        n22_negative_definite: rep.p22_class.is_nd(),
        m22_nsd: definiteness_scaled(&m.p22(), tol, m_scale)?.is_nsd(),
        equivalence: false,
    })
}

fn pencil<T: Real>(m: &PartitionedSym<T>, n: &PartitionedSym<T>, alpha: T) -> SymMatrix<T> {
    m.sym().sub(&n.sym().scale(alpha))
}

fn lambda_min<T: Real>(a: &SymMatrix<T>) -> T {
    sym_eig(a).map(|e| e.min()).unwrap_or_else(|_| -T::max_value().unwrap())
}

/// Maximizes a unimodal function on `[0, cap]`: geometric bracketing from
/// `start` (factor 4) followed by golden-section search. Returns every
/// evaluated point so callers can prefer small multipliers on plateaus.
fn maximize_unimodal<T: Real, F: FnMut(T) -> T>(mut f: F, start: T, cap: T) -> Vec<(T, T)> {
    let mut evals: Vec<(T, T)> = Vec::new();
    let mut eval = |a: T, evals: &mut Vec<(T, T)>| {
        let v = f(a);
        evals.push((a, v));
        v
    };
    let four: T = lit(4.0);
    let mut pts = vec![T::zero()];
    let mut vals = vec![eval(T::zero(), &mut evals)];
    let mut a = start;
    let (lo, hi) = loop {
        let a_clamped = if a > cap { cap } else { a };
        let v = eval(a_clamped, &mut evals);
        pts.push(a_clamped);
        vals.push(v);
        let k = pts.len() - 1;
        if v < vals[k - 1] {
            break (if k >= 2 { pts[k - 2] } else { T::zero() }, a_clamped);
        }
        if a_clamped >= cap {
            break (pts[k - 1], cap);
        }
        a *= four;
    };
    let ratio: T = lit(0.618_033_988_749_894_9);
    let (mut lo, mut hi) = (lo, hi);
    let width_tol: T = lit(1e-10);
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let mut f1 = eval(x1, &mut evals);
    let mut f2 = eval(x2, &mut evals);
    for _ in 0..300 {
        if hi - lo <= width_tol * (T::one() + hi) {
            break;
        }
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = eval(x2, &mut evals);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = eval(x1, &mut evals);
        }
    }
    evals
}

/// Smallest evaluated multiplier whose value is within `slack` of the best.
fn pick<T: Real>(evals: &[(T, T)], slack: T) -> (T, T) {
    let best = evals.iter().fold(-T::max_value().unwrap(), |acc, &(_, v)| max(acc, v));
    evals
        .iter()
        .filter(|&&(_, v)| v >= best - slack)
        .fold(None, |acc: Option<(T, T)>, &(a, v)| match acc {
            Some((a0, _)) if a0 <= a => acc,
            _ => Some((a, v)),
        })
        .unwrap_or((T::zero(), best))
}

/// Search range for the multiplier: `α ≤ 10⁶ (1 + ‖M‖) / ‖N‖`.
///
/// Bounding the range keeps asymptotic near-certificates (where
/// `λ_min(M - αN)` only approaches zero as `α → ∞`) from being accepted
/// within tolerance.
fn alpha_range<T: Real>(m_norm: T, n_norm: T) -> (T, T) {
    let unit = (T::one() + m_norm) / n_norm;
    (unit * lit(1e-3), unit * lit(1e6))
}

/// Maximizes `g(α) = λ_min(M - αN)` over `α ≥ 0` and reports a nonstrict
/// (`g ≥ -psd`) or strict (`g ≥ pd`) certificate, thresholds scaled by
/// `1 + ‖M‖`.
pub fn find_alpha<T: Real>(
    m: &PartitionedSym<T>,
    n: &PartitionedSym<T>,
    strict: bool,
    tol: &Tolerances<T>,
) -> Result<SearchReport<T>> {
    check_pair(m, n)?;
    let mut hyp = hypotheses(m, n, tol)?;
    hyp.equivalence = if strict {
        hyp.n_admissible && hyp.n22_negative_definite
    } else {
        hyp.n_admissible && hyp.slater
    };
    let m_norm = pi_scale(m)?;
    let n_norm = pi_scale(n)?;
    let threshold = if strict { tol.pd_margin(m_norm) } else { -tol.psd_margin(m_norm) };
    let (alpha, value) = if n_norm == T::zero() {
        (T::zero(), lambda_min(m.sym()))
    } else {
        let (start, cap) = alpha_range(m_norm, n_norm);
        let evals = maximize_unimodal(|a| lambda_min(&pencil(m, n, a)), start, cap);
        pick(&evals, lit::<T>(1e-12) * (T::one() + m_norm))
    };
    let certificate = if value >= threshold {
        let margin = lambda_min(&pencil(m, n, alpha));
        (margin >= threshold).then_some(Certificate {
            kind: if strict { CertificateKind::Strict } else { CertificateKind::Nonstrict },
            alpha,
            beta: None,
            margin,
        })
    } else {
        None
    };
    Ok(SearchReport { certificate, best_alpha: alpha, best_value: value, hypotheses: hyp })
}

/// Largest `β ≥ 0` with `M - αN - diag(βI, 0) ⪰ 0` (to tolerance), or the
/// negative value `λ_min(M - αN)` when even `β = 0` fails. The result is a
/// unimodal function of `α`.
fn beta_profile<T: Real>(m: &PartitionedSym<T>, n: &PartitionedSym<T>, alpha: T, slack: T) -> T {
    let base = pencil(m, n, alpha);
    let at0 = lambda_min(&base);
    if at0 < -slack {
        return at0;
    }
    let q = m.q();
    let shifted = |beta: T| {
        let mut a = base.as_matrix().clone();
        for i in 0..q {
            a[(i, i)] -= beta;
        }
        lambda_min(&SymMatrix::symmetrize(a))
    };
    let top = SymMatrix::symmetrize(base.as_matrix().view((0, 0), (q, q)).clone_owned());
    let hi0 = sym_eig(&top).map(|e| e.max()).unwrap_or_else(|_| T::zero());
    if hi0 <= T::zero() {
        return T::zero();
    }
    if shifted(hi0) >= -slack * lit(0.5) {
        return hi0;
    }
    let (mut lo, mut hi) = (T::zero(), hi0);
    let half: T = lit(0.5);
    // Bisect against half the slack so the returned β keeps headroom for
    // rounding in `M - αN`, which grows with α.
    for _ in 0..60 {
        let mid = (lo + hi) * half;
        if shifted(mid) >= -slack * half {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Searches `α ≥ 0, β > 0` with `M - αN ⪰ diag(βI, 0)`: the inner `β` is
/// found by bisection, the outer `α` by golden-section search.
pub fn find_alpha_beta<T: Real>(
    m: &PartitionedSym<T>,
    n: &PartitionedSym<T>,
    tol: &Tolerances<T>,
) -> Result<SearchReport<T>> {
    check_pair(m, n)?;
    let mut hyp = hypotheses(m, n, tol)?;
    hyp.equivalence = hyp.n_admissible && hyp.m22_nsd;
    let m_norm = pi_scale(m)?;
    let n_norm = pi_scale(n)?;
    let slack = tol.psd_margin(m_norm);
    let beta_min = tol.pd_margin(m_norm);
    let (alpha, beta) = if n_norm == T::zero() {
        (T::zero(), beta_profile(m, n, T::zero(), slack))
    } else {
        let (start, cap) = alpha_range(m_norm, n_norm);
        let evals = maximize_unimodal(|a| beta_profile(m, n, a, slack), start, cap);
        pick(&evals, lit::<T>(1e-12) * (T::one() + m_norm))
    };
    let certificate = if beta >= beta_min {
        let mut a = pencil(m, n, alpha).into_matrix();
        for i in 0..m.q() {
            a[(i, i)] -= beta;
        }
        let margin = lambda_min(&SymMatrix::symmetrize(a));
        (margin >= -slack).then_some(Certificate { kind: CertificateKind::AlphaBeta, alpha, beta: Some(beta), margin })
    } else {
        None
    };
    Ok(SearchReport { certificate, best_alpha: alpha, best_value: beta, hypotheses: hyp })
}

/// Hypothesis checks of the Finsler-type reductions and the delegated
/// search when they hold.
#[derive(Clone, Debug)]
pub struct FinslerReport<T: Real> {
    /// `[I; -N22†N21]ᵀ M [I; -N22†N21]`
    pub theta: SymMatrix<T>,
    pub m_admissible: bool,
    pub n_admissible: bool,
    pub n_schur_zero: bool,
    /// `ker Θ ⊆ ker M|M22`
    pub kernel_condition: bool,
    pub m22_nsd: bool,
    pub hypotheses_hold: bool,
    pub search: Option<SearchReport<T>>,
}

/// Checks the Finsler-type hypotheses (`N|N22 = 0`) and, when they hold,
/// runs the matching certificate search.
pub fn finsler_check<T: Real>(
    m: &PartitionedSym<T>,
    n: &PartitionedSym<T>,
    strict: bool,
    tol: &Tolerances<T>,
) -> Result<FinslerReport<T>> {
    check_pair(m, n)?;
    let (q, r) = (n.q(), n.r());
    let center = -(crate::linalg::pinv_sym(&n.p22(), tol)?.as_matrix() * n.p21());
    let mut stacked = DMatrix::zeros(q + r, q);
    stacked.view_mut((0, 0), (q, q)).fill_with_identity();
    stacked.view_mut((q, 0), (r, q)).copy_from(&center);
    let theta = m.sym().congruence(&stacked);
    let m_rep = check_admissible(m, tol)?;
    let n_rep = check_admissible(n, tol)?;
    let m_scale = pi_scale(m)?;
    let kernel_condition = kernel_inclusion(theta.as_matrix(), m_rep.schur.as_matrix(), tol)?;
    let m22_nsd = definiteness_scaled(&m.p22(), tol, m_scale)?.is_nsd();
    let n_schur_zero = n_rep.schur_class == Definiteness::Zero;
    let hypotheses_hold = if strict {
        n_rep.admissible() && n_schur_zero && m22_nsd
    } else {
        m_rep.admissible() && n_rep.admissible() && n_schur_zero && kernel_condition
    };
    let search = if hypotheses_hold {
        let mut rep = if strict { find_alpha_beta(m, n, tol)? } else { find_alpha(m, n, false, tol)? };
        rep.hypotheses.equivalence = true;
        if let Some(c) = rep.certificate.as_mut() {
            c.kind = if strict { CertificateKind::FinslerStrict } else { CertificateKind::FinslerNonstrict };
        }
        Some(rep)
    } else {
        None
    };
    Ok(FinslerReport {
        theta,
        m_admissible: m_rep.admissible(),
        n_admissible: n_rep.admissible(),
        n_schur_zero,
        kernel_condition,
        m22_nsd,
        hypotheses_hold,
        search,
    })
}

/// `M = [-C, -E; -Eᵀ, 0]` and `N = [GᵀF̄G, 0; 0, -I]` for the uncertainty
/// `C + E F G + Gᵀ Fᵀ Eᵀ` with `Fᵀ F ⪯ F̄`.
pub fn petersen_pair<T: Real>(
    c: &SymMatrix<T>,
    e: &DMatrix<T>,
    fbar: &SymMatrix<T>,
    g: &DMatrix<T>,
) -> Result<(PartitionedSym<T>, PartitionedSym<T>)> {
    let n = c.dim();
    let p = e.ncols();
    if e.nrows() != n || g.ncols() != n || g.nrows() != fbar.dim() || p == 0 {
        return Err(QmiError::DimensionMismatch(format!(
            "C is {n}x{n}, E must be {n}xp (p > 0), G must be {}x{n}",
            fbar.dim()
        )));
    }
    let m = PartitionedSym::from_blocks(&c.neg(), &(-e), &SymMatrix::zeros(p))?;
    let gfg = fbar.congruence(g);
    let nmat = PartitionedSym::from_blocks(&gfg, &DMatrix::zeros(n, p), &SymMatrix::identity(p).neg())?;
    Ok((m, nmat))
}

#[derive(Clone, Debug, PartialEq)]
pub struct PetersenResult<T: Real> {
    pub lambda: T,
    pub alpha: T,
    /// `λ_min(-C - λ E Eᵀ - λ⁻¹ Gᵀ F̄ G)`
    pub margin: T,
}

/// Finds `λ > 0` with `C + λ E Eᵀ + λ⁻¹ Gᵀ F̄ G ≺ 0` (or `⪯ 0`), which is
/// equivalent to `C + E F G + Gᵀ Fᵀ Eᵀ ≺ 0` (`⪯ 0`) for all `Fᵀ F ⪯ F̄`.
pub fn petersen<T: Real>(
    c: &SymMatrix<T>,
    e: &DMatrix<T>,
    fbar: &SymMatrix<T>,
    g: &DMatrix<T>,
    strict: bool,
    tol: &Tolerances<T>,
) -> Result<Option<PetersenResult<T>>> {
    let fclass = crate::linalg::definiteness(fbar, tol)?;
    if !fclass.is_psd() {
        return Err(QmiError::Hypothesis("F̄ must be positive semidefinite".into()));
    }
    if !strict {
        if !fclass.is_pd() {
            return Err(QmiError::Hypothesis("nonstrict variant needs F̄ positive definite".into()));
        }
        if e.iter().all(|&x| x == T::zero()) || g.iter().all(|&x| x == T::zero()) {
            return Err(QmiError::Hypothesis("nonstrict variant needs E ≠ 0 and G ≠ 0".into()));
        }
    }
    let (m, n) = petersen_pair(c, e, fbar, g)?;
    let rep = find_alpha(&m, &n, strict, tol)?;
    let cert = match rep.certificate {
        Some(c) if c.alpha > T::zero() => c,
        _ => return Ok(None),
    };
    let lambda = T::one() / cert.alpha;
    let gfg = fbar.congruence(g);
    let eet = SymMatrix::symmetrize(e * e.transpose());
    let target = c.add(&eet.scale(lambda)).add(&gfg.scale(cert.alpha));
    let te = sym_eig(&target)?;
    let scale = sym_eig(c)?.norm() + lambda * sym_eig(&eet)?.norm() + cert.alpha * sym_eig(&gfg)?.norm();
    let ok = if strict { te.max() <= -tol.pd } else { te.max() <= tol.psd_margin(scale) };
    if !ok {
        return Err(QmiError::Numerical(format!(
            "multiplier λ = {} failed re-verification (max eigenvalue {:e})",
            lambda,
            to_f64(te.max())
        )));
    }
    Ok(Some(PetersenResult { lambda, alpha: cert.alpha, margin: -te.max() }))
}

/// Converts a member `Z` of `{Z : Zᵀ Z ⪯ Gᵀ F̄ G}` into an admissible
/// uncertainty `F` (`Fᵀ F ⪯ F̄`) with `Z = F G`.
pub fn petersen_uncertainty<T: Real>(
    z: &DMatrix<T>,
    fbar: &SymMatrix<T>,
    g: &DMatrix<T>,
    tol: &Tolerances<T>,
) -> Result<DMatrix<T>> {
    let root = psd_sqrt(fbar, tol)?.into_matrix();
    let b = &root * g;
    let mut s = z * pinv(&b, tol)?;
    let sn = spectral_norm(&s)?;
    if sn > T::one() {
        s /= sn;
    }
    Ok(s * root)
}

/// Orthonormal basis of the orthogonal complement of `x` (Householder).
fn complement_basis<T: Real>(x: &DVector<T>) -> DMatrix<T> {
    let q = x.len();
    let norm = x.norm();
    let mut v = x.clone();
    let sign = if x[0] >= T::zero() { T::one() } else { -T::one() };
    v[0] += sign * norm;
    let vv = v.dot(&v);
    let two: T = lit(2.0);
    let h = DMatrix::identity(q, q) - (&v * v.transpose()) * (two / vv);
    h.columns(1, q - 1).clone_owned()
}

/// Lifts a vector pair with `[x; y]ᵀ N [x; y] ≥ 0`, `x ≠ 0`, to a member
/// `Z ∈ Z_r(N)` with `Z x = y`.
///
/// The completion `X̄` spans vectors orthogonal to `x` in the inner product of
/// `N|N22`, and `Z = [y, -N22†N21 X̄] [x, X̄]⁻¹`.
pub fn lift_vector_witness<T: Real>(
    x: &DVector<T>,
    y: &DVector<T>,
    n: &PartitionedSym<T>,
    tol: &Tolerances<T>,
) -> Result<DMatrix<T>> {
    let (q, r) = (n.q(), n.r());
    if x.len() != q || y.len() != r {
        return Err(QmiError::DimensionMismatch(format!("expected x ∈ ℝ^{q}, y ∈ ℝ^{r}")));
    }
    let xn2 = x.dot(x);
    if xn2 == T::zero() {
        return Err(QmiError::InvalidParameter("x must be nonzero".into()));
    }
    let rep = check_admissible(n, tol)?;
    if !rep.admissible() {
        return Err(QmiError::NotAdmissible(rep.describe()));
    }
    let scale = pi_scale(n)?;
    let mut v = DVector::zeros(q + r);
    v.rows_mut(0, q).copy_from(x);
    v.rows_mut(q, r).copy_from(y);
    let form = v.dot(&(n.matrix() * &v));
    if form < -tol.psd_margin(scale) * v.dot(&v) {
        return Err(QmiError::InvalidParameter(format!("[x; y]ᵀ N [x; y] = {form} is negative")));
    }
    let center = -(crate::linalg::pinv_sym(&n.p22(), tol)?.as_matrix() * n.p21());
    let s = rep.schur.as_matrix();
    let z = if q == 1 {
        y * (x.transpose() / xn2)
    } else {
        let basis = complement_basis(x);
        let sx = x.dot(&(s * x));
        let floor = lit::<T>(1e3) * T::default_epsilon() * (T::one() + scale) * xn2;
        let coupling: DMatrix<T> = if sx > floor {
            DMatrix::from_row_slice(1, q - 1, ((x.transpose() * s * &basis) / sx).as_slice())
        } else {
            DMatrix::zeros(1, q - 1)
        };
        let completion = &basis - x * &coupling;
        y * (x.transpose() / xn2) + y * &coupling * basis.transpose() + &center * completion * basis.transpose()
    };
    Ok(z)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Counterexample<T: Real> {
    /// Member of `Z_r(N)` outside the target set of `M`.
    pub z: DMatrix<T>,
    /// `λ_min([I; Z]ᵀ M [I; Z])`
    pub violation: T,
}

/// Candidate vectors where the pencil `M - αN` is tight: low eigenvectors at
/// the best multiplier and `N`-neutral combinations of them.
fn pencil_candidates<T: Real>(m: &PartitionedSym<T>, n: &PartitionedSym<T>, strict: bool, tol: &Tolerances<T>) -> Vec<DVector<T>> {
    let mut out = Vec::new();
    let Ok(rep) = find_alpha(m, n, strict, tol) else { return out };
    let a0 = rep.best_alpha;
    let m_norm = pi_scale(m).unwrap_or_else(|_| T::one());
    let mut alphas = vec![a0, T::zero()];
    for f in [1e-6, 1e-4, 1e-2] {
        let d: T = lit(f);
        alphas.push(a0 * (T::one() + d));
        alphas.push(a0 * (T::one() - d));
    }
    let cluster_tol: T = lit(1e-6);
    for a in alphas {
        let Ok(e) = sym_eig(&pencil(m, n, a)) else { continue };
        let k = e.dim();
        let lo = e.min();
        let cut = lo + cluster_tol * (T::one() + m_norm + a * pi_scale(n).unwrap_or_else(|_| T::one()));
        let vecs: Vec<DVector<T>> =
            (0..k).rev().take_while(|&i| e.values[i] <= cut).map(|i| e.vectors.column(i).clone_owned()).collect();
        let nforms: Vec<T> = vecs.iter().map(|v| v.dot(&(n.matrix() * v))).collect();
        for i in 0..vecs.len() {
            out.push(vecs[i].clone());
            for j in 0..vecs.len() {
                if nforms[i] > T::zero() && nforms[j] < T::zero() {
                    let w = &vecs[i] * (-nforms[j]).sqrt() + &vecs[j] * nforms[i].sqrt();
                    out.push(w);
                }
            }
        }
        // Within the tight subspace, also use the N-restricted eigenvectors.
        if vecs.len() > 1 {
            let basis = DMatrix::from_columns(&vecs);
            if let Ok(ne) = sym_eig(&n.sym().congruence(&basis)) {
                let (hi, lo) = (ne.max(), ne.min());
                let vp = &basis * ne.vectors.column(0);
                let vn = &basis * ne.vectors.column(ne.dim() - 1);
                out.push(vp.clone());
                if hi > T::zero() && lo < T::zero() {
                    out.push(vp * (-lo).sqrt() + vn * hi.sqrt());
                }
            }
        }
    }
    out
}

/// Moves `y` toward `-N22†N21 x` until `[x; y]ᵀ N [x; y] ≥ 0` holds exactly
/// in floating point. Returns `None` when no such point exists on the segment.
fn repair<T: Real>(x: &DVector<T>, y: &DVector<T>, n: &PartitionedSym<T>, center: &DMatrix<T>) -> Option<DVector<T>> {
    let q = x.len();
    let target = center * x;
    let form = |t: T| {
        let yt = y * (T::one() - t) + &target * t;
        let mut v = DVector::zeros(q + yt.len());
        v.rows_mut(0, q).copy_from(x);
        v.rows_mut(q, yt.len()).copy_from(&yt);
        (v.dot(&(n.matrix() * &v)), yt)
    };
    let (f0, y0) = form(T::zero());
    if f0 >= T::zero() {
        return Some(y0);
    }
    let (f1, y1) = form(T::one());
    if f1 < T::zero() {
        return None;
    }
    let (mut lo, mut hi, mut best) = (T::zero(), T::one(), y1);
    let half: T = lit(0.5);
    for _ in 0..60 {
        let mid = (lo + hi) * half;
        let (fm, ym) = form(mid);
        if fm >= T::zero() {
            hi = mid;
            best = ym;
        } else {
            lo = mid;
        }
    }
    Some(best)
}

/// Searches for `Z ∈ Z_r(N)` outside `Z_r(M)` (or outside the strict set of
/// `M` when `strict`). Candidates come from the tight directions of the
/// pencil `M - αN`, from `budget` random vectors and from sampled members of
/// `Z_r(N)`; every vector hit is lifted to a matrix and verified.
///
/// A reported counterexample is a robust member of `Z_r(N)` and violates the
/// target clearly: `λ_min([I;Z]ᵀM[I;Z])` is below `-psd` (nonstrict) or not
/// positive at all (strict).
pub fn falsify_inclusion<T: Real>(
    n: &PartitionedSym<T>,
    m: &PartitionedSym<T>,
    strict: bool,
    budget: usize,
    seed: u64,
    tol: &Tolerances<T>,
) -> Result<Option<Counterexample<T>>> {
    check_pair(m, n)?;
    let rep = check_admissible(n, tol)?;
    if !rep.admissible() {
        return Err(QmiError::NotAdmissible(rep.describe()));
    }
    let (q, r) = (n.q(), n.r());
    let center = -(crate::linalg::pinv_sym(&n.p22(), tol)?.as_matrix() * n.p21());
    let verify = |z: &DMatrix<T>| -> Option<Counterexample<T>> {
        if !membership(z, n, SetKind::Nonstrict, tol).ok()? {
            return None;
        }
        let (lo, psd, _) = membership_margin(z, m, tol).ok()?;
        let violated = if strict { lo <= T::zero() } else { lo < -psd };
        violated.then(|| Counterexample { z: z.clone(), violation: lo })
    };
    let n_pos = sym_eig(n.sym())?;
    let positive_dir = (n_pos.max() > T::zero()).then(|| n_pos.vectors.column(0).clone_owned());
    let try_vector = |v: &DVector<T>| -> Option<Counterexample<T>> {
        let vn = v.norm();
        if vn == T::zero() {
            return None;
        }
        let v = v / vn;
        let mut attempts = vec![v.clone(), -&v];
        if let Some(p) = &positive_dir {
            for eps in [1e-6, 1e-4, 1e-2] {
                attempts.push(&v + p * lit::<T>(eps));
            }
        }
        for cand in attempts {
            let x = cand.rows(0, q).clone_owned();
            if x.norm() <= lit::<T>(1e-8) * cand.norm() {
                continue;
            }
            let y = cand.rows(q, r).clone_owned();
            let Some(y) = repair(&x, &y, n, &center) else { continue };
            let mut full = DVector::zeros(q + r);
            full.rows_mut(0, q).copy_from(&x);
            full.rows_mut(q, r).copy_from(&y);
            let mform = full.dot(&(m.matrix() * &full));
            if strict && mform > lit::<T>(1e-12) * full.dot(&full) * (T::one() + pi_scale(m).ok()?) {
                continue;
            }
            if !strict && mform >= T::zero() {
                continue;
            }
            let Ok(z) = lift_vector_witness(&x, &y, n, tol) else { continue };
            if let Some(c) = verify(&z) {
                return Some(c);
            }
        }
        None
    };
    for v in pencil_candidates(m, n, strict, tol) {
        if let Some(c) = try_vector(&v) {
            return Ok(Some(c));
        }
    }
    let mut rng = seeded_rng(seed);
    for _ in 0..budget {
        let v: DVector<T> = gaussian::<T>(&mut rng, q + r, 1).column(0).clone_owned();
        if let Some(c) = try_vector(&v) {
            return Ok(Some(c));
        }
    }
    let draws = (budget / 10).max(1);
    for strict_draw in [false, true] {
        let cfg = SampleConfig { strict: strict_draw, spread: T::one() };
        let Ok(zs) = sample(n, draws, rng.gen(), &cfg, tol) else { continue };
        for z in zs {
            if let Some(c) = verify(&z) {
                return Ok(Some(c));
            }
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn part(n: usize, v: &[f64], q: usize) -> PartitionedSym<f64> {
        PartitionedSym::new(SymMatrix::new(DMatrix::from_row_slice(n, n, v)).unwrap(), q, n - q).unwrap()
    }

    #[test]
    fn alpha_examples() {
        let t = Tolerances::default();
        let n = part(2, &[1.0, 0.0, 0.0, -1.0], 1);
        let r = find_alpha(&n, &n, false, &t).unwrap();
        let c = r.certificate.unwrap();
        assert!((c.alpha - 1.0).abs() < 1e-6 && c.margin.abs() < 1e-6);
        let m = part(2, &[1.0, 0.0, 0.0, 1.0], 1);
        let c = find_alpha(&m, &n, false, &t).unwrap().certificate.unwrap();
        assert_eq!(c.alpha, 0.0);
        assert!((c.margin - 1.0).abs() < 1e-12);
    }

    #[test]
    fn asymptotic_pair_has_no_certificate() {
        let t = Tolerances::default();
        let n = part(2, &[-1.0, 1.0, 1.0, -1.0], 1);
        let m = part(2, &[1.0, 0.0, 0.0, -1.0], 1);
        let r = find_alpha(&m, &n, false, &t).unwrap();
        assert!(r.certificate.is_none());
        assert!(falsify_inclusion(&n, &m, false, 500, 1, &t).unwrap().is_none());
    }

    #[test]
    fn alpha_beta_examples() {
        let t = Tolerances::default();
        let n = part(2, &[1.0, 0.0, 0.0, -1.0], 1);
        let m = part(2, &[1.0, 0.0, 0.0, 0.0], 1);
        let c = find_alpha_beta(&m, &n, &t).unwrap().certificate.unwrap();
        assert!(c.alpha.abs() < 1e-6 && (c.beta.unwrap() - 1.0).abs() < 1e-6);
        let m = part(2, &[1.0, 0.0, 0.0, -1.0], 1);
        assert!(find_alpha_beta(&m, &n, &t).unwrap().certificate.is_none());
    }

    #[test]
    fn finsler_example() {
        let t = Tolerances::default();
        let n = part(2, &[0.0, 0.0, 0.0, -1.0], 1);
        let m = part(2, &[1.0, 0.0, 0.0, -1.0], 1);
        let r = finsler_check(&m, &n, false, &t).unwrap();
        assert!(r.hypotheses_hold && r.kernel_condition);
        assert!((r.theta.as_matrix()[(0, 0)] - 1.0).abs() < 1e-14);
        let c = r.search.unwrap().certificate.unwrap();
        assert_eq!(c.kind, CertificateKind::FinslerNonstrict);
        assert!(c.alpha >= 1.0 - 1e-9);
    }

    #[test]
    fn petersen_scalar() {
        let t = Tolerances::default();
        let one = DMatrix::from_element(1, 1, 1.0);
        let c = SymMatrix::from_diagonal(&[-3.0]);
        let res = petersen(&c, &one, &SymMatrix::identity(1), &one, true, &t).unwrap().unwrap();
        assert!(-3.0 + res.lambda + 1.0 / res.lambda < 0.0);
        let c = SymMatrix::from_diagonal(&[-1.0]);
        assert!(petersen(&c, &one, &SymMatrix::identity(1), &one, true, &t).unwrap().is_none());
    }

    #[test]
    fn vector_lift_examples() {
        let t = Tolerances::default();
        let n = part(2, &[1.0, 0.0, 0.0, -1.0], 1);
        let z = lift_vector_witness(&DVector::from_element(1, 1.0), &DVector::from_element(1, 0.5), &n, &t).unwrap();
        assert!((z[(0, 0)] - 0.5).abs() < 1e-15);
        assert!(lift_vector_witness(&DVector::from_element(1, 0.0), &DVector::from_element(1, 1.0), &n, &t).is_err());
    }

    #[test]
    fn strict_counterexample_found() {
        let t = Tolerances::default();
        let n = part(2, &[1.0, 0.0, 0.0, -1.0], 1);
        let c = falsify_inclusion(&n, &n, true, 100, 3, &t).unwrap().unwrap();
        assert!((c.z[(0, 0)].abs() - 1.0).abs() < 1e-9);
    }
}
