//! Stabilization of unknown linear systems from noisy state/input data.
//!
//! The system `x(t+1) = A x(t) + B u(t) + w(t)` is observed over `T` steps.
//! With `X₋, X₊, U₋` the shifted data matrices and a noise bound
//! `[I; W₋ᵀ]ᵀ Φ [I; W₋ᵀ] ⪰ 0`, the systems compatible with the data are the
//! solution set `Z_{n+m}(N)` in the variable `Z = [Aᵀ; Bᵀ]` (note the
//! transpose), where `N = Ξ Φ Ξᵀ` and `Ξ = [I X₊; 0 -X₋; 0 -U₋]`.
//!
//! A gain `K` with Lyapunov matrix `P ≻ 0` works for all of them when
//! `P - (A+BK) P (A+BK)ᵀ ≻ 0` on that set, which becomes an LMI in
//! `(P, L = KP, β)`.

use log::warn;
use nalgebra::DMatrix;
use statrs::function::gamma::{gamma_lr, ln_gamma};

use crate::certificates::{find_alpha, find_alpha_beta};
use crate::error::{QmiError, Result};
use crate::linalg::{
    hstack, inverse, pinv, pinv_sym, rank, spectral_norm, sym_eig, vstack, PartitionedSym, SymMatrix, Tolerances,
};
use crate::lmi::{solve, LmiProblem, SolverConfig};
use crate::projection::project;
use crate::scalar::{lit, max, to_f64, Real};
use crate::sets::{check_admissible, sample, SampleConfig};
use crate::textfmt::Document;

/// States `X = [x(0) … x(T)]` and inputs `U₋ = [u(0) … u(T-1)]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentData<T: Real> {
    x: DMatrix<T>,
    u: DMatrix<T>,
}

impl<T: Real> ExperimentData<T> {
    pub fn new(x: DMatrix<T>, u: DMatrix<T>) -> Result<Self> {
        if x.ncols() < 2 || x.nrows() == 0 || u.nrows() == 0 || u.ncols() + 1 != x.ncols() {
            return Err(QmiError::DimensionMismatch(format!(
                "states {}x{} and inputs {}x{} do not describe T >= 1 steps",
                x.nrows(),
                x.ncols(),
                u.nrows(),
                u.ncols()
            )));
        }
        Ok(Self { x, u })
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn m(&self) -> usize {
        self.u.nrows()
    }

    /// Number of transitions `T`.
    pub fn horizon(&self) -> usize {
        self.u.ncols()
    }

    pub fn states(&self) -> &DMatrix<T> {
        &self.x
    }

    pub fn inputs(&self) -> &DMatrix<T> {
        &self.u
    }

    pub fn x_minus(&self) -> DMatrix<T> {
        self.x.columns(0, self.horizon()).clone_owned()
    }

    pub fn x_plus(&self) -> DMatrix<T> {
        self.x.columns(1, self.horizon()).clone_owned()
    }

    /// `[X₋; U₋]`
    pub fn regressor(&self) -> DMatrix<T> {
        vstack(&self.x_minus(), &self.u)
    }

    /// Whether `[X₋; U₋]` has full row rank `n + m`.
    pub fn persistently_exciting(&self, tol: &Tolerances<T>) -> Result<bool> {
        Ok(rank(&self.regressor(), tol)? == self.n() + self.m())
    }

    /// Least-squares estimate `[Â B̂] = X₊ [X₋; U₋]†`.
    pub fn least_squares(&self, tol: &Tolerances<T>) -> Result<(DMatrix<T>, DMatrix<T>)> {
        let ab = self.x_plus() * pinv(&self.regressor(), tol)?;
        let n = self.n();
        Ok((ab.columns(0, n).clone_owned(), ab.columns(n, self.m()).clone_owned()))
    }

    pub fn to_document(&self) -> Document {
        let mut d = Document::new();
        d.set_matrix("X", &self.x).set_matrix("U", &self.u);
        d
    }

    pub fn from_document(d: &Document) -> Result<Self> {
        Self::new(d.matrix("X")?, d.matrix("U")?)
    }
}

/// Runs the recursion with the given noise columns.
pub fn simulate<T: Real>(
    a: &DMatrix<T>,
    b: &DMatrix<T>,
    x0: &DMatrix<T>,
    u: &DMatrix<T>,
    noise: &DMatrix<T>,
) -> Result<ExperimentData<T>> {
    let n = a.nrows();
    let t = u.ncols();
    if a.ncols() != n
        || b.nrows() != n
        || b.ncols() != u.nrows()
        || x0.shape() != (n, 1)
        || noise.shape() != (n, t)
    {
        return Err(QmiError::DimensionMismatch(format!(
            "A {:?}, B {:?}, x0 {:?}, U {:?}, noise {:?}",
            a.shape(),
            b.shape(),
            x0.shape(),
            u.shape(),
            noise.shape()
        )));
    }
    let mut x = DMatrix::zeros(n, t + 1);
    x.set_column(0, &x0.column(0));
    for k in 0..t {
        let next = a * x.column(k) + b * u.column(k) + noise.column(k);
        x.set_column(k + 1, &next);
    }
    ExperimentData::new(x, u.clone())
}

/// Noise descriptions expressible as a bound `[I; W₋ᵀ]ᵀ Φ [I; W₋ᵀ] ⪰ 0`.
#[derive(Clone, Debug, PartialEq)]
pub enum NoiseModel<T: Real> {
    /// `W₋ W₋ᵀ ⪯ bound`
    Energy { bound: SymMatrix<T> },
    /// `‖w(t)‖² ≤ eps` for every sample.
    PerSample { eps: T },
    /// `W₋ (I - 𝟙𝟙ᵀ/T) W₋ᵀ ⪯ bound` (`T` times the sample covariance).
    Covariance { bound: SymMatrix<T> },
    /// `W₋ = E Ŵ₋` with `Ŵ₋ᵀ` in the solution set of `inner`.
    Subspace { e: DMatrix<T>, inner: PartitionedSym<T> },
    /// `W₋ = 0`
    Exact,
    Custom(PartitionedSym<T>),
}

impl<T: Real> NoiseModel<T> {
    pub fn label(&self) -> &'static str {
        match self {
            Self::Energy { .. } => "energy",
            Self::PerSample { .. } => "per-sample",
            Self::Covariance { .. } => "covariance",
            Self::Subspace { .. } => "subspace",
            Self::Exact => "exact",
            Self::Custom(_) => "custom",
        }
    }

    /// Reads `noise: <label>` plus its parameters (`bound`, `eps`, `E` and
    /// `Phi_hat` with `d`, or `Phi`).
    pub fn from_document(d: &Document) -> Result<Self> {
        let part = |key: &str, q: usize| -> Result<PartitionedSym<T>> {
            let m = d.matrix::<T>(key)?;
            let total = m.nrows();
            if q >= total {
                return Err(QmiError::DimensionMismatch(format!("`{key}` is too small for a split at {q}")));
            }
            PartitionedSym::new(SymMatrix::new(m)?, q, total - q)
        };
        match d.text("noise")? {
            "energy" => Ok(Self::Energy { bound: SymMatrix::new(d.matrix("bound")?)? }),
            "per-sample" => Ok(Self::PerSample { eps: lit(d.number("eps")?) }),
            "covariance" => Ok(Self::Covariance { bound: SymMatrix::new(d.matrix("bound")?)? }),
            "subspace" => {
                let e = d.matrix::<T>("E")?;
                let inner = part("Phi_hat", e.ncols())?;
                Ok(Self::Subspace { e, inner })
            }
            "exact" => Ok(Self::Exact),
            "custom" => {
                let x = d.matrix::<T>("X")?;
                Ok(Self::Custom(part("Phi", x.nrows())?))
            }
            other => Err(QmiError::InvalidParameter(format!("unknown noise model `{other}`"))),
        }
    }
}

/// The noise-bound matrix `Φ` with blocks `(n, T)`, checked to be admissible.
pub fn build_phi<T: Real>(model: &NoiseModel<T>, n: usize, horizon: usize, tol: &Tolerances<T>) -> Result<PartitionedSym<T>> {
    if n == 0 || horizon == 0 {
        return Err(QmiError::DimensionMismatch("state dimension and horizon must be positive".into()));
    }
    let minus_i = SymMatrix::<T>::identity(horizon).neg();
    let zero12 = DMatrix::zeros(n, horizon);
    let check_bound = |b: &SymMatrix<T>| -> Result<()> {
        if b.dim() != n {
            return Err(QmiError::DimensionMismatch(format!("bound has order {}, expected {n}", b.dim())));
        }
        let e = sym_eig(b)?;
        if e.min() < -tol.psd_margin(e.norm()) {
            return Err(QmiError::NotPsd(to_f64(e.min())));
        }
        Ok(())
    };
    let phi = match model {
        NoiseModel::Energy { bound } => {
            check_bound(bound)?;
            PartitionedSym::from_blocks(bound, &zero12, &minus_i)?
        }
        NoiseModel::PerSample { eps } => {
            if !(*eps > T::zero()) {
                return Err(QmiError::InvalidParameter("per-sample bound must be positive".into()));
            }
            let p11 = SymMatrix::identity(n).scale(*eps * lit(horizon as f64));
            PartitionedSym::from_blocks(&p11, &zero12, &minus_i)?
        }
        NoiseModel::Covariance { bound } => {
            check_bound(bound)?;
            let tf: T = lit(horizon as f64);
            let centering = DMatrix::identity(horizon, horizon) - DMatrix::from_element(horizon, horizon, T::one() / tf);
            PartitionedSym::from_blocks(bound, &zero12, &SymMatrix::symmetrize(-centering))?
        }
        NoiseModel::Subspace { e, inner } => {
            if e.nrows() != n || inner.q() != e.ncols() || inner.r() != horizon {
                return Err(QmiError::DimensionMismatch(format!(
                    "E is {}x{} and the inner bound has blocks ({}, {}); expected {n} rows and horizon {horizon}",
                    e.nrows(),
                    e.ncols(),
                    inner.q(),
                    inner.r()
                )));
            }
            if rank(e, tol)? != e.ncols() {
                return Err(QmiError::InvalidParameter("E must have full column rank".into()));
            }
            if !sym_eig(&inner.p22())?.values.iter().all(|&v| v < T::zero()) {
                return Err(QmiError::InvalidParameter("inner bound needs a negative definite lower block".into()));
            }
            // Same conjugation as projecting with W = Eᵀ.
            project(inner, &e.transpose(), tol)?.projected
        }
        NoiseModel::Exact => PartitionedSym::from_blocks(&SymMatrix::zeros(n), &zero12, &minus_i)?,
        NoiseModel::Custom(phi) => {
            if phi.q() != n || phi.r() != horizon {
                return Err(QmiError::DimensionMismatch(format!(
                    "custom bound has blocks ({}, {}), expected ({n}, {horizon})",
                    phi.q(),
                    phi.r()
                )));
            }
            phi.clone()
        }
    };
    let rep = check_admissible(&phi, tol)?;
    if !rep.admissible() {
        return Err(QmiError::NotAdmissible(rep.describe()));
    }
    Ok(phi)
}

/// `Ξ = [I X₊; 0 -X₋; 0 -U₋]`, optionally followed by `extra` zero rows.
fn xi<T: Real>(data: &ExperimentData<T>, extra: usize) -> DMatrix<T> {
    let (n, m, t) = (data.n(), data.m(), data.horizon());
    let mut out = DMatrix::zeros(2 * n + m + extra, n + t);
    out.view_mut((0, 0), (n, n)).fill_with_identity();
    out.view_mut((0, n), (n, t)).copy_from(&data.x_plus());
    out.view_mut((n, n), (n, t)).copy_from(&(-data.x_minus()));
    out.view_mut((2 * n, n), (m, t)).copy_from(&(-data.inputs()));
    out
}

fn check_phi<T: Real>(data: &ExperimentData<T>, phi: &PartitionedSym<T>, tol: &Tolerances<T>) -> Result<()> {
    if phi.q() != data.n() || phi.r() != data.horizon() {
        return Err(QmiError::DimensionMismatch(format!(
            "noise bound has blocks ({}, {}), data need ({}, {})",
            phi.q(),
            phi.r(),
            data.n(),
            data.horizon()
        )));
    }
    let rep = check_admissible(phi, tol)?;
    if !rep.admissible() {
        return Err(QmiError::NotAdmissible(rep.describe()));
    }
    Ok(())
}

/// The data matrix `N = Ξ Φ Ξᵀ` with blocks `(n, n+m)`; its solution set
/// in `Z = [Aᵀ; Bᵀ]` is the set of systems explaining the data.
#[derive(Clone, Debug)]
pub struct DataQmi<T: Real> {
    pub n: PartitionedSym<T>,
    /// `N` is admissible; false signals data inconsistent with the bound.
    pub consistent: bool,
}

pub fn build_n<T: Real>(data: &ExperimentData<T>, phi: &PartitionedSym<T>, tol: &Tolerances<T>) -> Result<DataQmi<T>> {
    check_phi(data, phi, tol)?;
    let x = xi(data, 0);
    let nmat = phi.sym().congruence(&x.transpose());
    let n = PartitionedSym::new(nmat, data.n(), data.n() + data.m())?;
    let consistent = check_admissible(&n, tol)?.admissible();
    if !consistent {
        warn!("data are inconsistent with the noise bound: N is not admissible");
    }
    Ok(DataQmi { n, consistent })
}

/// `Z = [Aᵀ; Bᵀ]`
pub fn system_to_z<T: Real>(a: &DMatrix<T>, b: &DMatrix<T>) -> DMatrix<T> {
    vstack(&a.transpose(), &b.transpose())
}

/// Splits `Z = [Aᵀ; Bᵀ]` into `(A, B)` for state dimension `n`.
pub fn z_to_system<T: Real>(z: &DMatrix<T>, n: usize) -> (DMatrix<T>, DMatrix<T>) {
    let m = z.nrows() - n;
    (z.rows(0, n).transpose(), z.rows(n, m).transpose())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Full,
    Reduced,
    Gaussian,
}

impl Method {
    pub fn label(self) -> &'static str {
        match self {
            Self::Full => "full",
            Self::Reduced => "reduced",
            Self::Gaussian => "gaussian",
        }
    }
}

#[derive(Clone, Debug)]
pub struct StabilizationResult<T: Real> {
    pub p: SymMatrix<T>,
    /// `L = K P` (for the reduced method, computed from the explicit `K`).
    pub l: DMatrix<T>,
    pub k: DMatrix<T>,
    /// `None` for the strict variants, which have no `β`.
    pub beta: Option<T>,
    pub method: Method,
    pub strict: bool,
    /// Worst block margin of the normalized LMI at the returned point.
    pub solver_margin: T,
    /// An S-lemma certificate for `(P, K)` against `N` was found.
    pub certified: bool,
}

impl<T: Real> StabilizationResult<T> {
    pub fn to_document(&self) -> Document {
        let mut d = Document::new();
        d.set_text("method", self.method.label())
            .set_bool("strict", self.strict)
            .set_matrix("P", self.p.as_matrix())
            .set_matrix("L", &self.l)
            .set_matrix("K", &self.k);
        if let Some(b) = self.beta {
            d.set_number("beta", b);
        }
        d.set_number("solver_margin", self.solver_margin).set_bool("certified", self.certified);
        d
    }

    /// Reads a controller back. Only `P` and `K` are required; `L` defaults
    /// to `K P` and the bookkeeping fields to neutral values.
    pub fn from_document(d: &Document) -> Result<Self> {
        let p = SymMatrix::new(d.matrix("P")?)?;
        let k = d.matrix::<T>("K")?;
        if k.ncols() != p.dim() {
            return Err(QmiError::DimensionMismatch(format!("K has {} columns, P is {}x{}", k.ncols(), p.dim(), p.dim())));
        }
        let l = if d.contains("L") { d.matrix("L")? } else { &k * p.as_matrix() };
        let method = match d.text("method").unwrap_or("full") {
            "full" => Method::Full,
            "reduced" => Method::Reduced,
            "gaussian" => Method::Gaussian,
            other => return Err(QmiError::InvalidParameter(format!("unknown method `{other}`"))),
        };
        Ok(Self {
            p,
            l,
            k,
            beta: if d.contains("beta") { Some(lit(d.number("beta")?)) } else { None },
            method,
            strict: d.bool("strict").unwrap_or(false),
            solver_margin: if d.contains("solver_margin") { lit(d.number("solver_margin")?) } else { T::zero() },
            certified: d.bool("certified").unwrap_or(false),
        })
    }
}

/// Settings shared by the stabilization routines.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DesignConfig<T: Real> {
    pub tol: Tolerances<T>,
    pub solver: SolverConfig<T>,
    /// Use the strict variant (no `β`) when its hypotheses hold.
    pub prefer_strict: bool,
}

impl<T: Real> Default for DesignConfig<T> {
    fn default() -> Self {
        Self { tol: Tolerances::default(), solver: SolverConfig::default(), prefer_strict: true }
    }
}

/// Symmetric basis of `n×n` matrices in row-major upper-triangular order.
fn vech_basis(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect()
}

fn sym_unit<T: Real>(dim: usize, offset: usize, i: usize, j: usize, sign: T) -> DMatrix<T> {
    let mut e = DMatrix::zeros(dim, dim);
    e[(offset + i, offset + j)] = sign;
    e[(offset + j, offset + i)] = sign;
    e
}

fn unpack_p<T: Real>(y: &[T], n: usize) -> SymMatrix<T> {
    let mut p = DMatrix::zeros(n, n);
    for (k, (i, j)) in vech_basis(n).into_iter().enumerate() {
        p[(i, j)] = y[k];
        p[(j, i)] = y[k];
    }
    SymMatrix::symmetrize(p)
}

/// The strict variants need `[X₋; U₋] Φ22 [X₋; U₋]ᵀ ≺ 0`, which holds when
/// `Φ22 ≺ 0` and the data are persistently exciting.
pub fn strict_applicable<T: Real>(data: &ExperimentData<T>, phi: &PartitionedSym<T>, tol: &Tolerances<T>) -> Result<bool> {
    let d = data.regressor();
    if rank(&d, tol)? != data.n() + data.m() {
        return Ok(false);
    }
    let n22 = phi.p22().congruence(&d.transpose());
    let e = sym_eig(&n22)?;
    Ok(e.max() < -tol.pd_margin(e.norm()))
}

/// Normalization so the data term has unit norm; `N` and `N / s` describe
/// the same set of systems.
fn data_scale<T: Real>(data: &ExperimentData<T>, phi: &PartitionedSym<T>) -> Result<T> {
    let x = xi(data, 0);
    let s = spectral_norm(&(&x * phi.matrix() * x.transpose()))?;
    Ok(if s > T::zero() { s } else { T::one() })
}

/// `M` for a fixed `(P, K)`: `Z` is in its strict set iff
/// `P - (A+BK) P (A+BK)ᵀ ≻ 0`.
pub fn lyapunov_qmi<T: Real>(p: &SymMatrix<T>, k: &DMatrix<T>) -> Result<PartitionedSym<T>> {
    let n = p.dim();
    let ik = vstack(&DMatrix::identity(n, n), k);
    let m22 = p.congruence(&ik.transpose()).neg();
    PartitionedSym::from_blocks(p, &DMatrix::zeros(n, n + k.nrows()), &m22)
}

fn certify_gain<T: Real>(p: &SymMatrix<T>, k: &DMatrix<T>, nq: &PartitionedSym<T>, strict: bool, tol: &Tolerances<T>) -> Result<bool> {
    let m = lyapunov_qmi(p, k)?;
    let rep = if strict { find_alpha(&m, nq, true, tol)? } else { find_alpha_beta(&m, nq, tol)? };
    Ok(rep.certificate.is_some())
}

/// The LMI in `(vech P, L, β)` whose feasibility is equivalent to the
/// existence of a common quadratic Lyapunov function for all explaining
/// systems. Returns the problem and the normalization factor.
pub fn full_lmi<T: Real>(
    data: &ExperimentData<T>,
    phi: &PartitionedSym<T>,
    strict: bool,
    tol: &Tolerances<T>,
) -> Result<(LmiProblem<T>, T)> {
    check_phi(data, phi, tol)?;
    let (n, m) = (data.n(), data.m());
    let s = data_scale(data, phi)?;
    let x4 = xi(data, n);
    let size = 3 * n + m;
    let constant = SymMatrix::symmetrize(-(&x4 * phi.matrix() * x4.transpose()) / s);
    let pb = vech_basis(n);
    let nvar = pb.len() + m * n + usize::from(!strict);
    let mut main = Vec::with_capacity(nvar);
    let mut pos = Vec::with_capacity(nvar);
    let mut beta_pos = Vec::with_capacity(nvar);
    for &(i, j) in &pb {
        let mut c = sym_unit(size, 0, i, j, T::one());
        c += sym_unit(size, n, i, j, -T::one());
        c += sym_unit(size, 2 * n + m, i, j, T::one());
        main.push(SymMatrix::symmetrize(c));
        pos.push(SymMatrix::symmetrize(sym_unit(n, 0, i, j, T::one())));
        beta_pos.push(SymMatrix::zeros(1));
    }
    for i in 0..m {
        for j in 0..n {
            // L_ij sits at (row 2n+i, col n+j) with a minus sign and at
            // (row 2n+i, col 2n+m+j) with a plus sign, mirrored.
            let mut c = DMatrix::zeros(size, size);
            c[(2 * n + i, n + j)] = -T::one();
            c[(n + j, 2 * n + i)] = -T::one();
            c[(2 * n + i, 2 * n + m + j)] = T::one();
            c[(2 * n + m + j, 2 * n + i)] = T::one();
            main.push(SymMatrix::symmetrize(c));
            pos.push(SymMatrix::zeros(n));
            beta_pos.push(SymMatrix::zeros(1));
        }
    }
    if !strict {
        let mut c = DMatrix::zeros(size, size);
        for i in 0..n {
            c[(i, i)] = -T::one();
        }
        main.push(SymMatrix::symmetrize(c));
        pos.push(SymMatrix::zeros(n));
        beta_pos.push(SymMatrix::identity(1));
    }
    let pd = tol.pd_margin(T::one());
    let mut prob = LmiProblem::new(nvar)?;
    prob.add_block(constant, main, if strict { pd } else { T::zero() })?;
    prob.add_block(SymMatrix::zeros(n), pos, pd)?;
    if !strict {
        prob.add_block(SymMatrix::zeros(1), beta_pos, pd)?;
    }
    Ok((prob, s))
}

/// Solves the full LMI and returns `K = L P⁻¹`; `None` when infeasible.
pub fn stabilize_full<T: Real>(
    data: &ExperimentData<T>,
    phi: &PartitionedSym<T>,
    cfg: &DesignConfig<T>,
) -> Result<Option<StabilizationResult<T>>> {
    let tol = &cfg.tol;
    let nq = build_n(data, phi, tol)?;
    let strict = cfg.prefer_strict && strict_applicable(data, phi, tol)?;
    let (prob, s) = full_lmi(data, phi, strict, tol)?;
    let Some(sol) = solve(&prob, &cfg.solver)? else {
        return Ok(None);
    };
    let (n, m) = (data.n(), data.m());
    let y = sol.y.as_slice();
    let np = n * (n + 1) / 2;
    let p = unpack_p(&y[..np], n).scale(s);
    let l = DMatrix::from_row_slice(m, n, &y[np..np + m * n]) * s;
    let beta = (!strict).then(|| y[np + m * n] * s);
    let k = &l * inverse(p.as_matrix(), tol)?;
    let certified = certify_gain(&p, &k, &nq.n, strict, tol)?;
    Ok(Some(StabilizationResult {
        p,
        l,
        k,
        beta,
        method: Method::Full,
        strict,
        solver_margin: sol.value,
        certified,
    }))
}

/// Pieces of the reduced formulation: `G0 = [I X₊] Φ [I X₊]ᵀ`,
/// `Θ = Φ12 + X₊ Φ22` and the tail `Θ Dᵀ (D Φ22 Dᵀ)† D Θᵀ` with
/// `D = [X₋; U₋]`.
struct Reduced<T: Real> {
    g0: DMatrix<T>,
    theta: DMatrix<T>,
    tail: DMatrix<T>,
}

fn reduced_parts<T: Real>(data: &ExperimentData<T>, phi: &PartitionedSym<T>, tol: &Tolerances<T>) -> Result<Reduced<T>> {
    let n = data.n();
    let ix = hstack(&DMatrix::identity(n, n), &data.x_plus());
    let g0 = &ix * phi.matrix() * ix.transpose();
    let theta = phi.p12() + data.x_plus() * phi.p22().as_matrix();
    let d = data.regressor();
    let dpd = phi.p22().congruence(&d.transpose());
    let tail = &theta * d.transpose() * pinv_sym(&dpd, tol)?.as_matrix() * &d * theta.transpose();
    Ok(Reduced { g0, theta, tail })
}

/// The LMIs in `(vech P, β)` only: an `n×n` block and a `2n×2n` block.
pub fn reduced_lmi<T: Real>(
    data: &ExperimentData<T>,
    phi: &PartitionedSym<T>,
    strict: bool,
    tol: &Tolerances<T>,
) -> Result<(LmiProblem<T>, T)> {
    check_phi(data, phi, tol)?;
    let n = data.n();
    let s = data_scale(data, phi)?;
    let parts = reduced_parts(data, phi, tol)?;
    let c_a = SymMatrix::symmetrize((parts.tail - parts.g0) / s);
    let x2 = xi(data, 0).rows(0, 2 * n).clone_owned();
    let c_b = SymMatrix::symmetrize(-(&x2 * phi.matrix() * x2.transpose()) / s);
    let pb = vech_basis(n);
    let nvar = pb.len() + usize::from(!strict);
    let (mut ca, mut cb, mut cp, mut cbeta) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for &(i, j) in &pb {
        ca.push(SymMatrix::symmetrize(sym_unit(n, 0, i, j, T::one())));
        let mut c = sym_unit(2 * n, 0, i, j, T::one());
        c += sym_unit(2 * n, n, i, j, -T::one());
        cb.push(SymMatrix::symmetrize(c));
        cp.push(SymMatrix::symmetrize(sym_unit(n, 0, i, j, T::one())));
        cbeta.push(SymMatrix::zeros(1));
    }
    if !strict {
        ca.push(SymMatrix::identity(n).neg());
        let mut c = DMatrix::zeros(2 * n, 2 * n);
        for i in 0..n {
            c[(i, i)] = -T::one();
        }
        cb.push(SymMatrix::symmetrize(c));
        cp.push(SymMatrix::zeros(n));
        cbeta.push(SymMatrix::identity(1));
    }
    let pd = tol.pd_margin(T::one());
    let lmi_margin = if strict { pd } else { T::zero() };
    let mut prob = LmiProblem::new(nvar)?;
    prob.add_block(c_a, ca, lmi_margin)?;
    prob.add_block(c_b, cb, lmi_margin)?;
    prob.add_block(SymMatrix::zeros(n), cp, pd)?;
    if !strict {
        prob.add_block(SymMatrix::zeros(1), cbeta, pd)?;
    }
    Ok((prob, s))
}

/// Explicit gain `K = (U₋ H X₋ᵀ)(X₋ H X₋ᵀ)†` with `H = Φ22 + Θᵀ Γ† Θ` and
/// `Γ = P - βI - G0`.
pub fn explicit_gain<T: Real>(
    data: &ExperimentData<T>,
    phi: &PartitionedSym<T>,
    p: &SymMatrix<T>,
    beta: T,
    tol: &Tolerances<T>,
) -> Result<DMatrix<T>> {
    let parts = reduced_parts(data, phi, tol)?;
    let n = data.n();
    let mut gamma = p.as_matrix() - parts.g0;
    for i in 0..n {
        gamma[(i, i)] -= beta;
    }
    let gp = pinv_sym(&SymMatrix::symmetrize(gamma), tol)?;
    let h = phi.p22().as_matrix() + parts.theta.transpose() * gp.as_matrix() * &parts.theta;
    let xm = data.x_minus();
    let left = data.inputs() * &h * xm.transpose();
    let right = &xm * &h * xm.transpose();
    Ok(left * pinv(&right, tol)?)
}

/// Solves for `(P, β)` only and builds the gain from the explicit formula.
/// The gain is re-certified; `certified = false` flags a failure of the
/// formula (e.g. an ill-conditioned `Γ`).
pub fn stabilize_reduced<T: Real>(
    data: &ExperimentData<T>,
    phi: &PartitionedSym<T>,
    cfg: &DesignConfig<T>,
) -> Result<Option<StabilizationResult<T>>> {
    let tol = &cfg.tol;
    let nq = build_n(data, phi, tol)?;
    let strict = cfg.prefer_strict && strict_applicable(data, phi, tol)?;
    let (prob, s) = reduced_lmi(data, phi, strict, tol)?;
    let Some(sol) = solve(&prob, &cfg.solver)? else {
        return Ok(None);
    };
    let n = data.n();
    let y = sol.y.as_slice();
    let np = n * (n + 1) / 2;
    let p = unpack_p(&y[..np], n).scale(s);
    let beta = (!strict).then(|| y[np] * s);
    let k = explicit_gain(data, phi, &p, beta.unwrap_or_else(T::zero), tol)?;
    let l = &k * p.as_matrix();
    let certified = certify_gain(&p, &k, &nq.n, strict, tol)?;
    if !certified {
        warn!("explicit gain from the reduced LMI failed re-certification");
    }
    Ok(Some(StabilizationResult {
        p,
        l,
        k,
        beta,
        method: Method::Reduced,
        strict,
        solver_margin: sol.value,
        certified,
    }))
}

/// `χ²_k` quantile: the `x` with `P(k/2, x/2) = p`, by bracketing followed
/// by safeguarded Newton steps.
pub fn chi2_quantile(k: usize, p: f64) -> Result<f64> {
    if k == 0 || !(p > 0.0 && p < 1.0) {
        return Err(QmiError::InvalidParameter(format!("chi-squared quantile needs k >= 1 and 0 < p < 1, got ({k}, {p})")));
    }
    let a = k as f64 / 2.0;
    let cdf = |x: f64| gamma_lr(a, x / 2.0);
    let log_norm = a * std::f64::consts::LN_2 + ln_gamma(a);
    let pdf = |x: f64| ((a - 1.0) * x.ln() - x / 2.0 - log_norm).exp();
    let (mut lo, mut hi) = (0.0, k as f64 + 10.0);
    while cdf(hi) < p {
        lo = hi;
        hi *= 2.0;
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let f = cdf(x) - p;
        if f == 0.0 {
            break;
        }
        if f > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let d = pdf(x);
        let newton = if d > 0.0 { x - f / d } else { f64::NAN };
        let next = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if (next - x).abs() <= 1e-15 * x || hi - lo <= 1e-15 * hi {
            break;
        }
        x = next;
    }
    Ok(x)
}

/// `Φ = diag(σ² c_δ I, -D†D)` with `D = [X₋; U₋]`; its solution set in
/// `[Aᵀ; Bᵀ]` is the `1 - δ` confidence ellipsoid around the least-squares
/// estimate.
pub fn gaussian_phi<T: Real>(data: &ExperimentData<T>, sigma: T, delta: f64, tol: &Tolerances<T>) -> Result<PartitionedSym<T>> {
    if !(sigma > T::zero()) || !(delta > 0.0 && delta < 1.0) {
        return Err(QmiError::InvalidParameter("need sigma > 0 and 0 < delta < 1".into()));
    }
    let (n, m, t) = (data.n(), data.m(), data.horizon());
    if !data.persistently_exciting(tol)? {
        return Err(QmiError::Hypothesis(format!("[X-; U-] must have full row rank {}", n + m)));
    }
    let c = chi2_quantile(n * (n + m), 1.0 - delta)?;
    let d = data.regressor();
    let proj = pinv(&d, tol)? * &d;
    let p11 = SymMatrix::identity(n).scale(sigma * sigma * lit(c));
    PartitionedSym::from_blocks(&p11, &DMatrix::zeros(n, t), &SymMatrix::symmetrize(-proj))
}

/// Stabilization with probability `1 - δ` under Gaussian noise of
/// standard deviation `σ`.
pub fn gaussian_informativity<T: Real>(
    data: &ExperimentData<T>,
    sigma: T,
    delta: f64,
    cfg: &DesignConfig<T>,
) -> Result<Option<StabilizationResult<T>>> {
    let phi = gaussian_phi(data, sigma, delta, &cfg.tol)?;
    Ok(stabilize_full(data, &phi, cfg)?.map(|mut r| {
        r.method = Method::Gaussian;
        r
    }))
}

/// Outcome of checking one closed loop `A + BK`.
#[derive(Clone, Debug, PartialEq)]
pub struct LoopCheck<T: Real> {
    pub a: DMatrix<T>,
    pub b: DMatrix<T>,
    pub spectral_radius: T,
    /// `λ_min(P - (A+BK) P (A+BK)ᵀ)`
    pub lyapunov_margin: T,
    pub passed: bool,
}

/// Largest eigenvalue modulus.
pub fn spectral_radius<T: Real>(a: &DMatrix<T>) -> T {
    a.complex_eigenvalues().iter().fold(T::zero(), |acc, z| max(acc, (z.re * z.re + z.im * z.im).sqrt()))
}

/// Default stability margin: `ρ ≤ 1 - 1e-6`.
pub const STABILITY_MARGIN: f64 = 1e-6;

pub fn check_loop<T: Real>(result: &StabilizationResult<T>, a: &DMatrix<T>, b: &DMatrix<T>, tol: &Tolerances<T>) -> Result<LoopCheck<T>> {
    let n = result.p.dim();
    if a.shape() != (n, n) || b.shape() != (n, result.k.nrows()) {
        return Err(QmiError::DimensionMismatch(format!("A {:?}, B {:?} for n = {n}", a.shape(), b.shape())));
    }
    let ak = a + b * &result.k;
    let rho = spectral_radius(&ak);
    let lyap = result.p.sub(&result.p.congruence(&ak.transpose()));
    let margin = sym_eig(&lyap)?.min();
    let passed = rho <= T::one() - lit(STABILITY_MARGIN) && margin >= tol.pd;
    Ok(LoopCheck { a: a.clone(), b: b.clone(), spectral_radius: rho, lyapunov_margin: margin, passed })
}

#[derive(Clone, Debug)]
pub struct VerificationReport<T: Real> {
    pub checked: usize,
    pub failures: Vec<LoopCheck<T>>,
    pub worst_radius: T,
    pub worst_lyapunov: T,
}

impl<T: Real> VerificationReport<T> {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Samples explaining systems from `Z_{n+m}(N)` and checks every closed
/// loop. Failures are returned as report content.
pub fn verify_controller<T: Real>(
    result: &StabilizationResult<T>,
    data: &ExperimentData<T>,
    phi: &PartitionedSym<T>,
    samples: usize,
    seed: u64,
    tol: &Tolerances<T>,
) -> Result<VerificationReport<T>> {
    let nq = build_n(data, phi, tol)?;
    let zs = sample(&nq.n, samples, seed, &SampleConfig::default(), tol)?;
    let mut rep = VerificationReport {
        checked: 0,
        failures: Vec::new(),
        worst_radius: T::zero(),
        worst_lyapunov: T::max_value().unwrap(),
    };
    for z in zs {
        let (a, b) = z_to_system(&z, data.n());
        let c = check_loop(result, &a, &b, tol)?;
        rep.checked += 1;
        rep.worst_radius = max(rep.worst_radius, c.spectral_radius);
        if c.lyapunov_margin < rep.worst_lyapunov {
            rep.worst_lyapunov = c.lyapunov_margin;
        }
        if !c.passed {
            rep.failures.push(c);
        }
    }
    Ok(rep)
}
