//! Seeded generators of random instances for tests and benchmarks.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::linalg::{PartitionedSym, SymMatrix};
use crate::scalar::{lit, Real};

/// Deterministic RNG used throughout the crate.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Matrix with independent standard normal entries.
pub fn gaussian<T: Real>(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<T> {
    DMatrix::from_fn(rows, cols, |_, _| {
        let x: f64 = StandardNormal.sample(rng);
        lit(x)
    })
}

/// `rows×k` matrix with orthonormal columns scaled by singular values drawn
/// from `[0.5, 2]`, so ranks are exact and well separated from zero.
fn conditioned_factor<T: Real>(rng: &mut ChaCha8Rng, rows: usize, k: usize) -> DMatrix<T> {
    let k = k.min(rows);
    if k == 0 {
        return DMatrix::zeros(rows, 0);
    }
    let q = gaussian::<T>(rng, rows, rows).qr().q();
    let s = DMatrix::from_diagonal(&nalgebra::DVector::from_fn(k, |_, _| lit::<T>(rng.gen_range(0.5..=2.0))));
    q.columns(0, k) * s
}

/// Random admissible `Π` of order `q + r` with `rank Π22 = p22_rank` and
/// `rank Π|Π22 = schur_rank`.
///
/// Built as `Π22 = -H Hᵀ`, `Π21 = Π22 F`, `Π11 = S + Fᵀ Π22 F` with
/// `S = G Gᵀ`, so the kernel condition holds by construction. The nonzero
/// eigenvalues of `-Π22` and `S` lie in `[0.25, 4]`.
pub fn admissible<T: Real>(
    rng: &mut ChaCha8Rng,
    q: usize,
    r: usize,
    p22_rank: usize,
    schur_rank: usize,
) -> PartitionedSym<T> {
    let h = conditioned_factor::<T>(rng, r, p22_rank);
    let p22 = -(&h * h.transpose());
    let f = gaussian::<T>(rng, r, q);
    let g = conditioned_factor::<T>(rng, q, schur_rank);
    let schur = &g * g.transpose();
    let p21 = &p22 * &f;
    let p11 = schur + f.transpose() * &p22 * &f;
    PartitionedSym::from_blocks(
        &SymMatrix::symmetrize(p11),
        &p21.transpose(),
        &SymMatrix::symmetrize(p22),
    )
    .expect("consistent block sizes")
}

/// Random admissible `Π` with block ranks drawn uniformly.
pub fn admissible_any<T: Real>(rng: &mut ChaCha8Rng, q: usize, r: usize) -> PartitionedSym<T> {
    let k = rng.gen_range(0..=r);
    let j = rng.gen_range(0..=q);
    admissible(rng, q, r, k, j)
}

/// Random symmetric matrix with standard normal entries (symmetrized).
pub fn symmetric<T: Real>(rng: &mut ChaCha8Rng, n: usize) -> SymMatrix<T> {
    let g = gaussian::<T>(rng, n, n);
    SymMatrix::symmetrize(&g + g.transpose()).scale(lit(0.5))
}

/// Random matrix with entries uniform in `[-1, 1]`.
pub fn uniform<T: Real>(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<T> {
    DMatrix::from_fn(rows, cols, |_, _| lit(rng.gen_range(-1.0..=1.0)))
}

/// Columns drawn uniformly from the ball `‖w‖ ≤ eps`.
pub fn ball_columns<T: Real>(rng: &mut ChaCha8Rng, rows: usize, cols: usize, eps: T) -> DMatrix<T> {
    let mut w = gaussian::<T>(rng, rows, cols);
    for mut col in w.column_iter_mut() {
        let norm = col.norm();
        let radius = eps * lit::<T>(rng.gen_range(0.0..1.0f64).powf(1.0 / rows.max(1) as f64));
        if norm > T::zero() {
            col *= radius / norm;
        }
    }
    w
}
