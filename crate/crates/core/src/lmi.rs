//! Small dense LMI feasibility solver.
//!
//! A problem is a list of blocks `G_j(y) = C0_j + Σ_i y_i C_ij` with required
//! margins `m_j`. The solver maximizes the concave function
//! `f(y) = min_j (λ_min(G_j(y)) - m_j)` over the box `‖y‖∞ ≤ R` with a
//! deep-cut ellipsoid method. A supergradient of `f` at `y` is `(vᵀ C_i v)_i`
//! for a unit eigenvector `v` of the smallest eigenvalue of the worst block.
//!
//! Besides the best point, the method maintains an upper bound on `max f`,
//! so an infeasible problem is reported as such only when the bound is
//! negative. When the iteration cap is hit with an undecided bound the
//! outcome is [`QmiError::Indeterminate`].

use nalgebra::{DMatrix, DVector};

use crate::error::{QmiError, Result};
use crate::linalg::{sym_eig, SymMatrix};
use crate::scalar::{abs, lit, min, to_f64, Real};
use crate::textfmt::Document;

#[derive(Clone, Debug, PartialEq)]
pub struct LmiBlock<T: Real> {
    pub constant: SymMatrix<T>,
    pub coeffs: Vec<SymMatrix<T>>,
    pub margin: T,
}

impl<T: Real> LmiBlock<T> {
    pub fn eval(&self, y: &DVector<T>) -> SymMatrix<T> {
        let mut g = self.constant.as_matrix().clone();
        for (c, &yi) in self.coeffs.iter().zip(y.iter()) {
            if yi != T::zero() {
                g += c.as_matrix() * yi;
            }
        }
        SymMatrix::symmetrize(g)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LmiProblem<T: Real> {
    dim: usize,
    blocks: Vec<LmiBlock<T>>,
}

impl<T: Real> LmiProblem<T> {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(QmiError::InvalidParameter("an LMI needs at least one decision variable".into()));
        }
        Ok(Self { dim, blocks: Vec::new() })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn blocks(&self) -> &[LmiBlock<T>] {
        &self.blocks
    }

    /// Adds `C0 + Σ y_i C_i ⪰ margin · I` (strict LMIs use a positive margin).
    pub fn add_block(&mut self, constant: SymMatrix<T>, coeffs: Vec<SymMatrix<T>>, margin: T) -> Result<&mut Self> {
        if coeffs.len() != self.dim {
            return Err(QmiError::DimensionMismatch(format!(
                "block has {} coefficient matrices, problem has {} variables",
                coeffs.len(),
                self.dim
            )));
        }
        if let Some(bad) = coeffs.iter().find(|c| c.dim() != constant.dim()) {
            return Err(QmiError::DimensionMismatch(format!(
                "coefficient of order {} in a block of order {}",
                bad.dim(),
                constant.dim()
            )));
        }
        if constant.dim() == 0 {
            return Err(QmiError::DimensionMismatch("empty block".into()));
        }
        self.blocks.push(LmiBlock { constant, coeffs, margin });
        Ok(self)
    }

    /// `f(y)`, the index of the worst block and its minimal eigenvector.
    fn oracle(&self, y: &DVector<T>) -> Result<(T, usize, DVector<T>)> {
        let mut worst: Option<(T, usize, DVector<T>)> = None;
        for (j, b) in self.blocks.iter().enumerate() {
            let e = sym_eig(&b.eval(y))?;
            let v = e.min() - b.margin;
            if worst.as_ref().is_none_or(|w| v < w.0) {
                worst = Some((v, j, e.min_vector()));
            }
        }
        worst.ok_or_else(|| QmiError::InvalidParameter("problem has no blocks".into()))
    }

    /// Per-block values `λ_min(G_j(y)) - m_j`.
    pub fn margins(&self, y: &DVector<T>) -> Result<Vec<T>> {
        self.blocks.iter().map(|b| Ok(sym_eig(&b.eval(y))?.min() - b.margin)).collect()
    }

    /// Serializes the problem in the matrix text format.
    pub fn to_document(&self) -> Document {
        let mut d = Document::new();
        d.set_int("dim", self.dim as i64).set_int("blocks", self.blocks.len() as i64);
        for (j, b) in self.blocks.iter().enumerate() {
            d.set_number(&format!("block{j}.margin"), b.margin);
            d.set_matrix(&format!("block{j}.C0"), b.constant.as_matrix());
            for (i, c) in b.coeffs.iter().enumerate() {
                d.set_matrix(&format!("block{j}.C{}", i + 1), c.as_matrix());
            }
        }
        d
    }

    pub fn from_document(d: &Document) -> Result<Self> {
        let dim = d.usize("dim")?;
        let nb = d.usize("blocks")?;
        let mut p = Self::new(dim)?;
        for j in 0..nb {
            let c0 = SymMatrix::new(d.matrix(&format!("block{j}.C0"))?)?;
            let coeffs = (1..=dim)
                .map(|i| SymMatrix::new(d.matrix(&format!("block{j}.C{i}"))?))
                .collect::<Result<Vec<_>>>()?;
            let margin = lit(d.number(&format!("block{j}.margin"))?);
            p.add_block(c0, coeffs, margin)?;
        }
        Ok(p)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverConfig<T: Real> {
    /// Box half-width `R` for every decision variable.
    pub radius: T,
    /// Iteration cap; `None` means `50 d² + 1000`.
    pub max_iter: Option<usize>,
    /// Below this value a capped run is declared infeasible.
    pub declare_tol: T,
    /// Relative gap between the bound and the best value that ends the run
    /// once a feasible point is known.
    pub gap_tol: T,
}

impl<T: Real> Default for SolverConfig<T> {
    fn default() -> Self {
        Self { radius: lit(1e4), max_iter: None, declare_tol: lit(1e-6), gap_tol: lit(1e-3) }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Solution<T: Real> {
    pub y: DVector<T>,
    /// `λ_min(G_j(y)) - m_j` for every block (all non-negative).
    pub margins: Vec<T>,
    pub value: T,
    pub iterations: usize,
    /// Upper bound on `max f` at termination.
    pub upper_bound: T,
}

/// Ellipsoid state `{x : (x - c)ᵀ P⁻¹ (x - c) ≤ 1}`.
struct Ellipsoid<T: Real> {
    center: DVector<T>,
    shape: DMatrix<T>,
}

enum Cut {
    Applied,
    Empty,
    Degenerate,
}

impl<T: Real> Ellipsoid<T> {
    /// Keeps `{x : aᵀ (x - c) ≤ -depth · sqrt(aᵀ P a)}` with `depth ∈ [0, 1)`.
    fn cut(&mut self, a: &DVector<T>, depth: T) -> Cut {
        let d = self.center.len();
        let pa = &self.shape * a;
        let apa = a.dot(&pa);
        if !(apa > T::zero()) || !apa.is_finite() {
            return Cut::Degenerate;
        }
        if depth >= T::one() {
            return Cut::Empty;
        }
        let df: T = lit(d as f64);
        let one = T::one();
        let b = pa / apa.sqrt();
        if d == 1 {
            // Interval update: the kept part of [c - w, c + w] is exact.
            let w = self.shape[(0, 0)].sqrt();
            let sgn = if a[0] > T::zero() { one } else { -one };
            let lo_keep = -w;
            let hi_keep = -depth * w;
            let (lo, hi) = (lo_keep, hi_keep);
            let mid = (lo + hi) * lit::<T>(0.5);
            let half = (hi - lo) * lit::<T>(0.5);
            self.center[0] += sgn * mid;
            self.shape[(0, 0)] = half * half;
            return Cut::Applied;
        }
        let step = (one + df * depth) / (df + one);
        self.center -= &b * step;
        let factor = df * df * (one - depth * depth) / (df * df - one);
        let shrink = lit::<T>(2.0) * (one + df * depth) / ((df + one) * (one + depth));
        let mut p = (&self.shape - (&b * b.transpose()) * shrink) * factor;
        let pt = p.transpose();
        p = (p + pt) * lit::<T>(0.5);
        self.shape = p;
        Cut::Applied
    }

    fn width_along(&self, s: &DVector<T>) -> T {
        let v = s.dot(&(&self.shape * s));
        if v > T::zero() {
            v.sqrt()
        } else {
            T::zero()
        }
    }
}

/// Runs the ellipsoid method. `Ok(Some)` is a verified feasible point,
/// `Ok(None)` means infeasible (bound below zero, or a capped run whose best
/// value is below `-declare_tol`), and `Err(Indeterminate)` covers capped
/// runs in between.
pub fn solve<T: Real>(problem: &LmiProblem<T>, cfg: &SolverConfig<T>) -> Result<Option<Solution<T>>> {
    let rep = run(problem, cfg)?;
    match rep.status {
        Status::Feasible => Ok(rep.solution),
        Status::Infeasible => Ok(None),
        Status::Indeterminate => Err(QmiError::Indeterminate { best: to_f64(rep.best_value), upper: to_f64(rep.upper_bound) }),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Feasible,
    Infeasible,
    Indeterminate,
}

/// Full outcome of a run, including the numbers behind a negative verdict.
#[derive(Clone, Debug, PartialEq)]
pub struct SolveReport<T: Real> {
    pub status: Status,
    /// Best `f` seen (`-∞` when no point inside the box was evaluated).
    pub best_value: T,
    pub upper_bound: T,
    pub iterations: usize,
    pub solution: Option<Solution<T>>,
}

/// [`solve`] without collapsing the outcome.
pub fn run<T: Real>(problem: &LmiProblem<T>, cfg: &SolverConfig<T>) -> Result<SolveReport<T>> {
    let d = problem.dim;
    if problem.blocks.is_empty() {
        return Err(QmiError::InvalidParameter("problem has no blocks".into()));
    }
    let radius = cfg.radius;
    let max_iter = cfg.max_iter.unwrap_or(50 * d * d + 1000);
    let df: T = lit(d as f64);
    let mut ell = Ellipsoid {
        center: DVector::zeros(d),
        shape: DMatrix::identity(d, d) * (df * radius * radius),
    };
    let mut best: Option<(T, DVector<T>)> = None;
    let mut upper = T::max_value().unwrap();
    let mut certified_empty = false;
    let mut capped = false;
    let mut iterations = 0;
    for k in 0..max_iter {
        iterations = k + 1;
        let y = ell.center.clone();
        // Box constraint first.
        let (imax, excess) = y
            .iter()
            .enumerate()
            .map(|(i, &v)| (i, abs(v) - radius))
            .fold((0, -T::max_value().unwrap()), |acc, x| if x.1 > acc.1 { x } else { acc });
        if excess > T::zero() {
            let mut a = DVector::zeros(d);
            a[imax] = if y[imax] > T::zero() { T::one() } else { -T::one() };
            let depth = excess / ell.width_along(&a);
            match ell.cut(&a, depth) {
                Cut::Applied => continue,
                Cut::Empty => {
                    certified_empty = true;
                    break;
                }
                Cut::Degenerate => break,
            }
        }
        let (f, j, v) = problem.oracle(&y)?;
        let s = DVector::from_iterator(d, problem.blocks[j].coeffs.iter().map(|c| v.dot(&(c.as_matrix() * &v))));
        if best.as_ref().is_none_or(|b| f > b.0) {
            best = Some((f, y.clone()));
        }
        let best_f = best.as_ref().unwrap().0;
        let width = ell.width_along(&s);
        let bound = f + width;
        if bound < upper {
            upper = bound;
        }
        // Rounding in the eigen-solve and the ellipsoid update.
        let slack = lit::<T>(1e3) * T::default_epsilon() * (T::one() + abs(f) + width);
        if upper < -slack {
            certified_empty = true;
            break;
        }
        if best_f >= T::zero() && upper - best_f <= cfg.gap_tol * (T::one() + abs(best_f)) {
            break;
        }
        if width == T::zero() {
            // Zero supergradient: y maximizes f.
            if f < T::zero() {
                certified_empty = true;
            }
            break;
        }
        let target = if best_f > T::zero() { best_f } else { T::zero() };
        let mut depth = (target - f) / width;
        if depth >= T::one() {
            if best_f < T::zero() && f + width < -slack {
                certified_empty = true;
                break;
            }
            // The kept set touches the ellipsoid only within rounding.
            depth = T::one() - T::default_epsilon().sqrt();
        }
        match ell.cut(&(-&s), depth) {
            Cut::Applied => {}
            Cut::Empty | Cut::Degenerate => break,
        }
        if k + 1 == max_iter {
            capped = true;
        }
    }
    let best_value = best.as_ref().map_or(-T::max_value().unwrap(), |b| b.0);
    let report = |status, solution| SolveReport { status, best_value, upper_bound: upper, iterations, solution };
    match best {
        Some((f, y)) if f >= T::zero() => {
            let margins = problem.margins(&y)?;
            let value = margins.iter().fold(T::max_value().unwrap(), |a, &b| min(a, b));
            if value < T::zero() {
                return Err(QmiError::Numerical("returned point failed re-verification".into()));
            }
            Ok(report(Status::Feasible, Some(Solution { y, margins, value, iterations, upper_bound: upper })))
        }
        _ if certified_empty => Ok(report(Status::Infeasible, None)),
        Some((f, _)) if capped && f < -cfg.declare_tol => Ok(report(Status::Infeasible, None)),
        _ => Ok(report(Status::Indeterminate, None)),
    }
}
