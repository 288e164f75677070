//! Dense complex-matrix kernel.
//!
//! Everything above this module works with small dense matrices (total
//! dimension at most 32, superoperators at most 1024x1024), so the kernel
//! keeps a single code path per task: Hermitian eigendecomposition for
//! matrix functions, Taylor scaling-and-squaring for general exponentials.
//!
//! Vectorization is column-major (`vec(X)[i + n*j] = X[(i, j)]`), which is
//! also nalgebra's storage order, so `vec(A X B) = (B^T ⊗ A) vec(X)`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Relative tolerance for Hermiticity checks.
pub const HERMITICITY_TOL: f64 = 1e-10;
/// Relative floor below which an eigenvalue counts as zero for singular functions.
pub const POSITIVITY_FLOOR: f64 = 1e-12;
/// Truncation tolerance of the Taylor series in [`expm`].
pub const TAYLOR_TOL: f64 = 1e-13;

const EIG_MAX_ITER_PER_DIM: usize = 200;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn real(x: f64) -> C64 {
    C64::new(x, 0.0)
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

pub fn zeros(n: usize) -> CMatrix {
    CMatrix::zeros(n, n)
}

pub fn diag(values: &[f64]) -> CMatrix {
    CMatrix::from_diagonal(&CVector::from_iterator(
        values.len(),
        values.iter().map(|&v| real(v)),
    ))
}

/// Build a matrix from row-major complex entries.
pub fn from_rows(rows: usize, cols: usize, entries: &[C64]) -> Result<CMatrix> {
    if entries.len() != rows * cols {
        return Err(Error::DimensionMismatch(format!(
            "{} entries for a {rows}x{cols} matrix",
            entries.len()
        )));
    }
    Ok(CMatrix::from_row_slice(rows, cols, entries))
}

/// Build a matrix from row-major real entries.
pub fn from_real_rows(rows: usize, cols: usize, entries: &[f64]) -> CMatrix {
    CMatrix::from_row_iterator(rows, cols, entries.iter().map(|&v| real(v)))
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Frobenius norm.
pub fn fro(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Induced 1-norm (maximum absolute column sum).
pub fn norm_one(m: &CMatrix) -> f64 {
    m.column_iter()
        .map(|col| col.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn trace(m: &CMatrix) -> C64 {
    m.diagonal().iter().sum()
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

/// Max-abs entry of `m - m†`.
pub fn hermiticity_residual(m: &CMatrix) -> f64 {
    if !m.is_square() {
        return f64::INFINITY;
    }
    max_abs(&(m - m.adjoint()))
}

/// `m` is Hermitian within `tol·‖m‖_F`.
pub fn is_hermitian(m: &CMatrix, tol: f64) -> bool {
    m.is_square() && hermiticity_residual(m) <= tol * fro(m).max(f64::MIN_POSITIVE)
}

pub fn unitarity_residual(u: &CMatrix) -> f64 {
    fro(&(u.adjoint() * u - identity(u.ncols())))
}

/// Eigendecomposition `m = U diag(values) U†` with eigenvalues ascending.
#[derive(Clone, Debug)]
pub struct HermEig {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl HermEig {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// `U diag(f(λ)) U†`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        self.map_complex(|x| real(f(x)))
    }

    pub fn map_complex(&self, f: impl Fn(f64) -> C64) -> CMatrix {
        let mut scaled = self.vectors.clone();
        for (j, mut col) in scaled.column_iter_mut().enumerate() {
            col *= f(self.values[j]);
        }
        scaled * self.vectors.adjoint()
    }

    pub fn reconstruct(&self) -> CMatrix {
        self.map(|x| x)
    }

    pub fn min(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    pub fn max(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }
}

/// Hermitian eigendecomposition.
///
/// The input must be Hermitian within `tol·‖m‖_F` (max-abs entry deviation of
/// `m - m†`). The Hermitian part is diagonalized, eigenvalues are returned in
/// ascending order with matching eigenvector columns.
pub fn herm_eig(m: &CMatrix, tol: f64) -> Result<HermEig> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "eigendecomposition of a {}x{} matrix",
            m.nrows(),
            m.ncols()
        )));
    }
    let residual = hermiticity_residual(m);
    let scale = fro(m);
    if residual > tol * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::NotHermitian {
            residual,
            tol: tol * scale,
        });
    }
    let n = m.nrows();
    if n == 0 {
        return Ok(HermEig {
            values: vec![],
            vectors: CMatrix::zeros(0, 0),
        });
    }
    let sym = (m + m.adjoint()) * real(0.5);
    let eig = SymmetricEigen::try_new(sym, f64::EPSILON, EIG_MAX_ITER_PER_DIM * n)
        .ok_or(Error::NoConvergence { dim: n })?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = CMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    reorthonormalize(&mut vectors);
    Ok(HermEig { values, vectors })
}

/// Two passes of modified Gram–Schmidt over the columns; the eigenvectors
/// come back orthonormal to ~1e-15 and matrix functions with large spread
/// (`e^m e^{-m}`) amplify that defect by `e^{spread}`.
fn reorthonormalize(u: &mut CMatrix) {
    let n = u.ncols();
    for _ in 0..2 {
        for j in 0..n {
            for k in 0..j {
                let proj = u.column(k).dotc(&u.column(j));
                let qk = u.column(k).clone_owned();
                let mut cj = u.column_mut(j);
                cj -= qk * proj;
            }
            let norm = u.column(j).norm();
            u.column_mut(j).unscale_mut(norm);
        }
    }
}

/// `f(m)` for Hermitian `m` and a real scalar function.
pub fn mat_func(m: &CMatrix, f: impl Fn(f64) -> f64) -> Result<CMatrix> {
    Ok(herm_eig(m, HERMITICITY_TOL)?.map(f))
}

fn check_floor(eig: &HermEig, floor_rel: f64) -> Result<()> {
    let floor = floor_rel * eig.max().abs().max(f64::MIN_POSITIVE);
    match eig.values.first() {
        Some(&lo) if lo <= floor => Err(Error::SingularInput {
            eigenvalue: lo,
            floor,
        }),
        _ => Ok(()),
    }
}

/// `e^m` for Hermitian `m`.
pub fn exp_herm(m: &CMatrix) -> Result<CMatrix> {
    mat_func(m, f64::exp)
}

/// Principal square root of a PSD matrix; eigenvalues within the positivity
/// floor of zero are clamped.
pub fn sqrt_psd(m: &CMatrix) -> Result<CMatrix> {
    let eig = herm_eig(m, HERMITICITY_TOL)?;
    let floor = POSITIVITY_FLOOR * eig.max().abs().max(f64::MIN_POSITIVE);
    if eig.min() < -floor {
        return Err(Error::SingularInput {
            eigenvalue: eig.min(),
            floor: -floor,
        });
    }
    Ok(eig.map(|x| if x <= floor { 0.0 } else { x.sqrt() }))
}

/// `m^{-1/2}` for positive definite `m`.
pub fn inv_sqrt_pd(m: &CMatrix) -> Result<CMatrix> {
    let eig = herm_eig(m, HERMITICITY_TOL)?;
    check_floor(&eig, POSITIVITY_FLOOR)?;
    Ok(eig.map(|x| 1.0 / x.sqrt()))
}

/// Natural logarithm of a positive definite matrix.
pub fn ln_pd(m: &CMatrix) -> Result<CMatrix> {
    let eig = herm_eig(m, HERMITICITY_TOL)?;
    check_floor(&eig, POSITIVITY_FLOOR)?;
    Ok(eig.map(f64::ln))
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Trace over the second tensor factor of a `(dq·db)×(dq·db)` matrix.
pub fn partial_trace_b(m: &CMatrix, dq: usize, db: usize) -> Result<CMatrix> {
    let n = dq * db;
    if m.nrows() != n || m.ncols() != n {
        return Err(Error::DimensionMismatch(format!(
            "partial trace of a {}x{} matrix over dQ={dq}, dB={db}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(CMatrix::from_fn(dq, dq, |i, j| {
        (0..db).map(|k| m[(i * db + k, j * db + k)]).sum()
    }))
}

/// Trace over the first tensor factor.
pub fn partial_trace_q(m: &CMatrix, dq: usize, db: usize) -> Result<CMatrix> {
    let n = dq * db;
    if m.nrows() != n || m.ncols() != n {
        return Err(Error::DimensionMismatch(format!(
            "partial trace of a {}x{} matrix over dQ={dq}, dB={db}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(CMatrix::from_fn(db, db, |i, j| {
        (0..dq).map(|k| m[(k * db + i, k * db + j)]).sum()
    }))
}

/// Matrix exponential of a general square matrix by Taylor series with
/// scaling and squaring.
pub fn expm(a: &CMatrix) -> CMatrix {
    let n = a.nrows();
    let norm = norm_one(a);
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as i32
    } else {
        0
    };
    let scaled = a * real(0.5f64.powi(squarings));

    let mut sum = identity(n);
    let mut term = identity(n);
    for k in 1..64 {
        term = &term * &scaled * real(1.0 / k as f64);
        sum += &term;
        if norm_one(&term) <= TAYLOR_TOL * norm_one(&sum) {
            break;
        }
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

/// Column-major vectorization.
pub fn vec(m: &CMatrix) -> CVector {
    CVector::from_column_slice(m.as_slice())
}

pub fn unvec(v: &CVector, n: usize) -> CMatrix {
    assert_eq!(v.len(), n * n, "unvec length");
    CMatrix::from_column_slice(n, n, v.as_slice())
}

/// Superoperator matrix of `X ↦ A X B`.
pub fn sandwich_superop(a: &CMatrix, b: &CMatrix) -> CMatrix {
    kron(&b.transpose(), a)
}

/// Superoperator matrix of left multiplication `X ↦ A X`.
pub fn left_superop(a: &CMatrix) -> CMatrix {
    kron(&identity(a.ncols()), a)
}

/// Superoperator matrix of right multiplication `X ↦ X B`.
pub fn right_superop(b: &CMatrix) -> CMatrix {
    kron(&b.transpose(), &identity(b.nrows()))
}

/// Apply a superoperator matrix to an operator.
pub fn apply_superop(s: &CMatrix, x: &CMatrix) -> CMatrix {
    unvec(&(s * vec(x)), x.nrows())
}

/// Largest singular value.
pub fn spectral_norm(m: &CMatrix) -> Result<f64> {
    let gram = m.adjoint() * m;
    Ok(herm_eig(&gram, 1e-8)?.max().max(0.0).sqrt())
}

/// Rank-one projector `|ψ⟩⟨ψ|`.
pub fn projector(psi: &CVector) -> CMatrix {
    psi * psi.adjoint()
}

/// Dyad `|a⟩⟨b|`.
pub fn dyad(a: &CVector, b: &CVector) -> CMatrix {
    a * b.adjoint()
}

pub fn basis_vector(n: usize, k: usize) -> CVector {
    let mut v = CVector::zeros(n);
    v[k] = ONE;
    v
}

/// Matrix unit `E_ij`.
pub fn matrix_unit(n: usize, i: usize, j: usize) -> CMatrix {
    let mut m = zeros(n);
    m[(i, j)] = ONE;
    m
}

pub fn pauli_x() -> CMatrix {
    from_real_rows(2, 2, &[0.0, 1.0, 1.0, 0.0])
}

pub fn pauli_y() -> CMatrix {
    from_rows(2, 2, &[ZERO, -I, I, ZERO]).expect("2x2")
}

pub fn pauli_z() -> CMatrix {
    from_real_rows(2, 2, &[1.0, 0.0, 0.0, -1.0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use crate::random;

    #[test]
    fn eig_of_diagonal() {
        let eig = herm_eig(&diag(&[2.0, 1.0]), HERMITICITY_TOL).unwrap();
        assert_eq!(eig.values, vec![1.0, 2.0]);
        // columns are a permutation of the standard basis
        for j in 0..2 {
            let col = eig.vectors.column(j);
            let big = col.iter().filter(|z| (z.norm() - 1.0).abs() < 1e-14).count();
            assert_eq!(big, 1);
        }
        assert_abs_diff_eq!(eig.vectors[(1, 0)].norm(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn eig_of_identity() {
        let eig = herm_eig(&identity(3), HERMITICITY_TOL).unwrap();
        for v in eig.values {
            assert_abs_diff_eq!(v, 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn eig_of_pauli_x() {
        let eig = herm_eig(&pauli_x(), HERMITICITY_TOL).unwrap();
        assert_abs_diff_eq!(eig.values[0], -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(eig.values[1], 1.0, epsilon = 1e-14);
    }

    #[test]
    fn eig_rejects_non_hermitian() {
        let m = from_real_rows(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        assert!(matches!(
            herm_eig(&m, HERMITICITY_TOL),
            Err(Error::NotHermitian { .. })
        ));
    }

    #[test]
    fn eig_reconstructs_random_hermitian() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in [1, 2, 5, 16, 32] {
            let m = random::hermitian(n, 1.0, &mut rng);
            let eig = herm_eig(&m, HERMITICITY_TOL).unwrap();
            assert!(fro(&(eig.reconstruct() - &m)) <= 1e-10 * fro(&m));
            assert!(unitarity_residual(&eig.vectors) <= 1e-10);
            assert!(eig.values.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn mat_func_examples() {
        let e = exp_herm(&zeros(2)).unwrap();
        assert_abs_diff_eq!(fro(&(e - identity(2))), 0.0, epsilon = 1e-14);

        let s = sqrt_psd(&diag(&[4.0, 9.0])).unwrap();
        assert_abs_diff_eq!(fro(&(s - diag(&[2.0, 3.0]))), 0.0, epsilon = 1e-14);

        let h = inv_sqrt_pd(&(identity(2) * real(0.5))).unwrap();
        let expected = identity(2) * real(2f64.sqrt());
        assert_abs_diff_eq!(fro(&(h - expected)), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn singular_functions_reject_zero_eigenvalue() {
        assert!(matches!(
            inv_sqrt_pd(&diag(&[1.0, 0.0])),
            Err(Error::SingularInput { .. })
        ));
        assert!(matches!(
            ln_pd(&diag(&[1.0, -1e-3])),
            Err(Error::SingularInput { .. })
        ));
    }

    #[test]
    fn sqrt_of_square_is_abs() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = random::hermitian(6, 1.0, &mut rng);
        let abs = mat_func(&m, f64::abs).unwrap();
        let root = sqrt_psd(&(&m * &m)).unwrap();
        assert!(fro(&(root - abs)) < 1e-10);
    }

    #[test]
    fn exp_of_plus_and_minus_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut m = random::hermitian(8, 1.0, &mut rng);
        // ‖m‖_F = 10
        let scale = 10.0 / fro(&m);
        m *= real(scale);
        let p = exp_herm(&m).unwrap() * exp_herm(&-&m).unwrap();
        assert!(fro(&(p - identity(8))) <= 1e-10);
    }

    #[test]
    fn kron_examples() {
        assert_eq!(kron(&identity(2), &identity(3)), identity(6));
        assert_eq!(
            kron(&diag(&[1.0, 2.0]), &identity(2)),
            diag(&[1.0, 1.0, 2.0, 2.0])
        );
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = random::matrix(2, 2, &mut rng);
        let b = random::matrix(3, 3, &mut rng);
        let k = kron(&a, &b);
        assert_eq!(k.shape(), (6, 6));
        assert_eq!(k[(0, 0)], a[(0, 0)] * b[(0, 0)]);
    }

    #[test]
    fn kron_mixed_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (a, c) = (random::matrix(2, 2, &mut rng), random::matrix(2, 2, &mut rng));
        let (b, d) = (random::matrix(3, 3, &mut rng), random::matrix(3, 3, &mut rng));
        let lhs = kron(&a, &b) * kron(&c, &d);
        let rhs = kron(&(&a * &c), &(&b * &d));
        assert!(fro(&(lhs - rhs)) < 1e-12);
    }

    #[test]
    fn partial_trace_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let q = random::matrix(2, 2, &mut rng);
        let b = random::density_matrix(3, &mut rng);
        let pt = partial_trace_b(&kron(&q, &b), 2, 3).unwrap();
        assert!(fro(&(pt - &q)) < 1e-12);

        let pt = partial_trace_b(&identity(6), 2, 3).unwrap();
        assert!(fro(&(pt - identity(2) * real(3.0))) < 1e-14);

        // (|00⟩ + |11⟩)/√2, summed by hand over the second index
        let s = 0.5f64.sqrt();
        let phi = CVector::from_vec(vec![real(s), ZERO, ZERO, real(s)]);
        let pt = partial_trace_b(&projector(&phi), 2, 2).unwrap();
        assert!(fro(&(pt - identity(2) * real(0.5))) < 1e-15);

        assert!(matches!(
            partial_trace_b(&identity(5), 2, 3),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn partial_trace_is_adjoint_of_embedding() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..10 {
            let m = random::matrix(8, 8, &mut rng);
            let q = random::matrix(2, 2, &mut rng);
            let lhs = trace(&(kron(&q, &identity(4)) * &m));
            let rhs = trace(&(&q * partial_trace_b(&m, 2, 4).unwrap()));
            assert!((lhs - rhs).norm() < 1e-12);
        }
    }

    #[test]
    fn expm_matches_hermitian_route() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let h = random::hermitian(6, 3.0, &mut rng);
        let a = expm(&h);
        let b = exp_herm(&h).unwrap();
        assert!(fro(&(&a - &b)) <= 1e-12 * fro(&b));

        let u = expm(&(&h * I));
        assert!(unitarity_residual(&u) < 1e-12);
    }

    #[test]
    fn superop_vectorization() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = random::matrix(3, 3, &mut rng);
        let b = random::matrix(3, 3, &mut rng);
        let x = random::matrix(3, 3, &mut rng);
        let direct = &a * &x * &b;
        let via = apply_superop(&sandwich_superop(&a, &b), &x);
        assert!(fro(&(direct - via)) < 1e-12);
        assert!(fro(&(apply_superop(&left_superop(&a), &x) - &a * &x)) < 1e-12);
        assert!(fro(&(apply_superop(&right_superop(&b), &x) - &x * &b)) < 1e-12);
    }

    proptest! {
        #[test]
        fn eig_reconstruction_property(seed in 0u64..1000, n in 1usize..10) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = random::hermitian(n, 2.0, &mut rng);
            let eig = herm_eig(&m, HERMITICITY_TOL).unwrap();
            prop_assert!(fro(&(eig.reconstruct() - &m)) <= 1e-10 * fro(&m).max(1e-300));
            prop_assert!(unitarity_residual(&eig.vectors) <= 1e-10);
        }

        #[test]
        fn partial_trace_preserves_trace(seed in 0u64..1000, dq in 1usize..4, db in 1usize..4) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = random::matrix(dq * db, dq * db, &mut rng);
            let pt = partial_trace_b(&m, dq, db).unwrap();
            prop_assert!((trace(&pt) - trace(&m)).norm() < 1e-12);
        }
    }
}
