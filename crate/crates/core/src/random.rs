//! Seeded random operators for checks, sweeps and tests.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::numkernel::{c, herm_eig, real, CMatrix, CVector, HERMITICITY_TOL};

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// Matrix with i.i.d. standard complex Gaussian entries.
pub fn matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| c(gaussian(rng), gaussian(rng)))
}

/// Hermitian matrix `scale·(G + G†)/2`.
pub fn hermitian<R: Rng + ?Sized>(n: usize, scale: f64, rng: &mut R) -> CMatrix {
    let g = matrix(n, n, rng);
    (&g + g.adjoint()) * real(0.5 * scale)
}

pub fn unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    let h = hermitian(n, 2.0, rng);
    exp_herm_i(&h)
}

pub fn unit_vector<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CVector {
    let v = CVector::from_fn(n, |_, _| c(gaussian(rng), gaussian(rng)));
    let norm = v.norm();
    v / real(norm)
}

/// Full-rank density matrix `G G† / tr(G G†)`.
pub fn density_matrix<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    let g = matrix(n, n, rng);
    let m = &g * g.adjoint();
    let tr = m.trace();
    m / tr
}

fn exp_herm_i(h: &CMatrix) -> CMatrix {
    herm_eig(h, HERMITICITY_TOL)
        .expect("hermitian by construction")
        .map_complex(|x| c(x.cos(), x.sin()))
}
