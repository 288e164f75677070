//! The bipartite algebra 𝒬⊗ℬ with a faithful Gibbs reference state.
//!
//! Observables are `n×n` matrices with `n = dQ·dB`, the encoded factor first.
//! The reference state is `ω = e^{-K}/tr e^{-K}` for a modular Hamiltonian
//! `K` that already includes the inverse temperature, so the modular flow is
//! `τ_z(a) = e^{izK} a e^{-izK}` and the KMS boundary sits at `z = i`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkernel::{
    self, c, fro, herm_eig, kron, matrix_unit, partial_trace_b, partial_trace_q, real, trace,
    CMatrix, CVector, HermEig, C64, HERMITICITY_TOL,
};

/// Default faithfulness floor: min/max eigenvalue ratio of `ω`.
pub const FAITHFUL_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlgebraShape {
    #[serde(rename = "dQ")]
    pub dq: usize,
    #[serde(rename = "dB")]
    pub db: usize,
}

impl AlgebraShape {
    pub fn new(dq: usize, db: usize) -> Result<Self> {
        if dq < 2 || db < 1 {
            return Err(Error::Invalid(format!(
                "algebra shape needs dQ >= 2 and dB >= 1, got dQ={dq}, dB={db}"
            )));
        }
        Ok(Self { dq, db })
    }

    pub fn n(&self) -> usize {
        self.dq * self.db
    }

    pub fn check_observable(&self, x: &CMatrix) -> Result<()> {
        let n = self.n();
        if x.nrows() != n || x.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "observable is {}x{}, algebra has n={n}",
                x.nrows(),
                x.ncols()
            )));
        }
        Ok(())
    }

    /// `q ⊗ 1_B`.
    pub fn embed_q(&self, q: &CMatrix) -> Result<CMatrix> {
        if q.nrows() != self.dq || q.ncols() != self.dq {
            return Err(Error::DimensionMismatch(format!(
                "encoded observable is {}x{}, dQ={}",
                q.nrows(),
                q.ncols(),
                self.dq
            )));
        }
        Ok(kron(q, &numkernel::identity(self.db)))
    }

    /// `P_ψ ⊗ 1_B`.
    pub fn embed_projector(&self, psi: &CVector) -> Result<CMatrix> {
        self.embed_q(&numkernel::projector(psi))
    }
}

/// Faithful Gibbs state of a modular Hamiltonian, with cached square roots.
#[derive(Clone, Debug)]
pub struct ReferenceState {
    shape: AlgebraShape,
    modular_hamiltonian: CMatrix,
    k_eig: HermEig,
    omega: CMatrix,
    omega_half: CMatrix,
    omega_inv_half: CMatrix,
    faithful_tol: f64,
}

impl ReferenceState {
    pub fn new(shape: AlgebraShape, modular_hamiltonian: CMatrix) -> Result<Self> {
        Self::with_tolerance(shape, modular_hamiltonian, FAITHFUL_TOL)
    }

    /// Gibbs state of `hamiltonian` at inverse temperature `beta`; the
    /// modular Hamiltonian is stored as `beta·hamiltonian`.
    pub fn gibbs(shape: AlgebraShape, hamiltonian: &CMatrix, beta: f64) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::Invalid(format!("beta must be positive, got {beta}")));
        }
        Self::new(shape, hamiltonian * real(beta))
    }

    /// Product reference state generated by `K_Q ⊗ 1 + 1 ⊗ K_B`.
    pub fn product(k_q: &CMatrix, k_b: &CMatrix) -> Result<Self> {
        let shape = AlgebraShape::new(k_q.nrows(), k_b.nrows())?;
        let k = kron(k_q, &numkernel::identity(shape.db))
            + kron(&numkernel::identity(shape.dq), k_b);
        Self::new(shape, k)
    }

    /// Tracial reference state (`K = 0`).
    pub fn tracial(shape: AlgebraShape) -> Self {
        Self::new(shape, numkernel::zeros(shape.n())).expect("K = 0 is faithful")
    }

    pub fn with_tolerance(
        shape: AlgebraShape,
        modular_hamiltonian: CMatrix,
        faithful_tol: f64,
    ) -> Result<Self> {
        shape.check_observable(&modular_hamiltonian)?;
        let k_eig = herm_eig(&modular_hamiltonian, HERMITICITY_TOL)?;
        let (lo, hi) = (k_eig.min(), k_eig.max());
        let ratio = (-(hi - lo)).exp();
        if ratio < faithful_tol {
            return Err(Error::NotFaithful {
                ratio,
                tol: faithful_tol,
            });
        }
        let z: f64 = k_eig.values.iter().map(|&e| (-(e - lo)).exp()).sum();
        let omega = k_eig.map(|e| (-(e - lo)).exp() / z);
        let omega_half = k_eig.map(|e| ((-(e - lo)).exp() / z).sqrt());
        let omega_inv_half = k_eig.map(|e| (z / (-(e - lo)).exp()).sqrt());
        let modular_hamiltonian = (&modular_hamiltonian + modular_hamiltonian.adjoint()) * real(0.5);
        Ok(Self {
            shape,
            modular_hamiltonian,
            k_eig,
            omega,
            omega_half,
            omega_inv_half,
            faithful_tol,
        })
    }

    pub fn shape(&self) -> AlgebraShape {
        self.shape
    }

    pub fn n(&self) -> usize {
        self.shape.n()
    }

    pub fn modular_hamiltonian(&self) -> &CMatrix {
        &self.modular_hamiltonian
    }

    pub fn modular_spectrum(&self) -> &HermEig {
        &self.k_eig
    }

    /// The density matrix `ω`.
    pub fn density(&self) -> &CMatrix {
        &self.omega
    }

    pub fn density_half(&self) -> &CMatrix {
        &self.omega_half
    }

    pub fn density_inv_half(&self) -> &CMatrix {
        &self.omega_inv_half
    }

    pub fn faithful_tol(&self) -> f64 {
        self.faithful_tol
    }

    /// Complex expectation `ω(x) = tr(ω x)`.
    pub fn expect(&self, x: &CMatrix) -> C64 {
        trace(&(&self.omega * x))
    }

    /// `⟨x, y⟩_ω = ω(x†y)`.
    pub fn gns_inner(&self, x: &CMatrix, y: &CMatrix) -> C64 {
        // tr(ω x† y) = Σ_ij conj(x_ji) (y ω)_ji
        let yw = y * &self.omega;
        x.iter().zip(yw.iter()).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn gns_norm(&self, x: &CMatrix) -> f64 {
        self.gns_inner(x, x).re.max(0.0).sqrt()
    }

    /// `τ_z(a) = e^{izK} a e^{-izK}` for complex `z`.
    pub fn modular_flow(&self, a: &CMatrix, z: C64) -> CMatrix {
        let shift = self.k_eig.values.iter().sum::<f64>() / self.k_eig.dim() as f64;
        let iz = C64::new(0.0, 1.0) * z;
        let forward = self.k_eig.map_complex(|e| (iz * (e - shift)).exp());
        let backward = self.k_eig.map_complex(|e| (-iz * (e - shift)).exp());
        forward * a * backward
    }

    /// Real-time modular flow.
    pub fn modular_flow_real(&self, a: &CMatrix, t: f64) -> CMatrix {
        self.modular_flow(a, real(t))
    }

    /// `|ω(A τ_i(B)) − ω(B A)|`.
    pub fn kms_residual(&self, a: &CMatrix, b: &CMatrix) -> f64 {
        let lhs = self.expect(&(a * self.modular_flow(b, c(0.0, 1.0))));
        let rhs = self.expect(&(b * a));
        (lhs - rhs).norm()
    }

    pub fn embed_q(&self, q: &CMatrix) -> Result<CMatrix> {
        self.shape.embed_q(q)
    }

    /// Density matrix of `ω` restricted to 𝒬.
    pub fn restrict_to_q(&self) -> Result<CMatrix> {
        let omega_q = partial_trace_b(&self.omega, self.shape.dq, self.shape.db)?;
        let eig = herm_eig(&omega_q, HERMITICITY_TOL)?;
        let ratio = eig.min() / eig.max();
        if ratio.is_nan() || ratio < self.faithful_tol {
            return Err(Error::NotFaithful {
                ratio,
                tol: self.faithful_tol,
            });
        }
        Ok(omega_q)
    }

    /// Density matrix of `ω` restricted to ℬ.
    pub fn restrict_to_b(&self) -> Result<CMatrix> {
        partial_trace_q(&self.omega, self.shape.dq, self.shape.db)
    }

    /// Largest `‖[K, E_ij ⊗ 1]‖_F` over matrix units of 𝒬; zero iff the
    /// modular flow acts trivially on the encoded algebra.
    pub fn modular_residual_on_q(&self) -> f64 {
        let dq = self.shape.dq;
        let mut worst: f64 = 0.0;
        for i in 0..dq {
            for j in 0..dq {
                let e = self.embed_q(&matrix_unit(dq, i, j)).expect("dQ x dQ");
                worst = worst.max(fro(&numkernel::commutator(&self.modular_hamiltonian, &e)));
            }
        }
        worst
    }

    /// The GNS Hilbert space of this state.
    pub fn gns(&self) -> GnsSpace<'_> {
        GnsSpace { reference: self }
    }
}

/// `ℋ_ω` realized as ℂ^{n²} through `x ↦ vec(x ω^{1/2})`.
#[derive(Clone, Copy, Debug)]
pub struct GnsSpace<'a> {
    reference: &'a ReferenceState,
}

impl<'a> GnsSpace<'a> {
    pub fn reference(&self) -> &'a ReferenceState {
        self.reference
    }

    pub fn dim(&self) -> usize {
        self.reference.n() * self.reference.n()
    }

    pub fn embed(&self, x: &CMatrix) -> CVector {
        numkernel::vec(&(x * &self.reference.omega_half))
    }

    pub fn unembed(&self, v: &CVector) -> CMatrix {
        numkernel::unvec(v, self.reference.n()) * &self.reference.omega_inv_half
    }

    /// Image of the identity, `vec(ω^{1/2})`; a unit vector.
    pub fn unit(&self) -> CVector {
        numkernel::vec(&self.reference.omega_half)
    }

    /// Superoperator matrix `R` with `R vec(x) = vec(x ω^{1/2})`, and its inverse.
    pub fn similarity(&self) -> (CMatrix, CMatrix) {
        (
            numkernel::right_superop(&self.reference.omega_half),
            numkernel::right_superop(&self.reference.omega_inv_half),
        )
    }

    /// GNS matrix `R T R^{-1}` of a superoperator given in the column-major
    /// vectorization, so that `M·embed(x) = embed(T(x))`.
    pub fn represent(&self, superop: &CMatrix) -> CMatrix {
        let (r, r_inv) = self.similarity();
        r * superop * r_inv
    }

    /// Inverse of [`GnsSpace::represent`].
    pub fn unrepresent(&self, matrix: &CMatrix) -> CMatrix {
        let (r, r_inv) = self.similarity();
        r_inv * matrix * r
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkernel::{basis_vector, diag, identity, pauli_x, pauli_z, ONE, ZERO};
    use crate::random;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_reference(dq: usize, db: usize, seed: u64) -> ReferenceState {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let shape = AlgebraShape::new(dq, db).unwrap();
        ReferenceState::new(shape, random::hermitian(shape.n(), 1.0, &mut rng)).unwrap()
    }

    #[test]
    fn shape_invariants() {
        assert!(AlgebraShape::new(1, 2).is_err());
        assert!(AlgebraShape::new(2, 0).is_err());
        assert_eq!(AlgebraShape::new(3, 4).unwrap().n(), 12);
    }

    #[test]
    fn embed_examples() {
        let shape = AlgebraShape::new(2, 2).unwrap();
        assert_eq!(shape.embed_q(&identity(2)).unwrap(), identity(4));
        let p = shape.embed_projector(&basis_vector(2, 0)).unwrap();
        assert_eq!(p, diag(&[1.0, 1.0, 0.0, 0.0]));
        assert!(matches!(
            shape.embed_q(&identity(3)),
            Err(Error::DimensionMismatch(_))
        ));

        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let q1 = random::matrix(2, 2, &mut rng);
        let q2 = random::matrix(2, 2, &mut rng);
        let lhs = shape.embed_q(&(&q1 * &q2)).unwrap();
        let rhs = shape.embed_q(&q1).unwrap() * shape.embed_q(&q2).unwrap();
        assert!(fro(&(lhs - rhs)) < 1e-13);
    }

    #[test]
    fn gibbs_state_is_normalized_and_faithful() {
        let r = random_reference(3, 2, 9);
        assert_abs_diff_eq!(trace(r.density()).re, 1.0, epsilon = 1e-14);
        let eig = herm_eig(r.density(), HERMITICITY_TOL).unwrap();
        assert!(eig.min() > 0.0);
        assert!(fro(&numkernel::commutator(r.modular_hamiltonian(), r.density())) < 1e-12);
        let half = r.density_half();
        assert!(fro(&(half * half - r.density())) < 1e-14);
        assert!(fro(&(half * r.density_inv_half() - identity(6))) < 1e-12);
    }

    #[test]
    fn rejects_unfaithful_state() {
        let shape = AlgebraShape::new(2, 1).unwrap();
        let k = diag(&[0.0, 40.0]);
        assert!(matches!(
            ReferenceState::new(shape, k),
            Err(Error::NotFaithful { .. })
        ));
    }

    #[test]
    fn restriction_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let kq = random::hermitian(2, 1.0, &mut rng);
        let kb = random::hermitian(3, 1.0, &mut rng);
        let r = ReferenceState::product(&kq, &kb).unwrap();
        let rho = numkernel::exp_herm(&-&kq).unwrap();
        let rho = &rho / trace(&rho);
        assert!(fro(&(r.restrict_to_q().unwrap() - rho)) < 1e-13);

        let tracial = ReferenceState::tracial(AlgebraShape::new(3, 2).unwrap());
        assert!(fro(&(tracial.restrict_to_q().unwrap() - identity(3) * real(1.0 / 3.0))) < 1e-14);

        // K = σz⊗σz: ω = diag(e^-1, e, e, e^-1)/(2e + 2e^-1), both halves carry weight 1/2
        let zz = kron(&pauli_z(), &pauli_z());
        let r = ReferenceState::new(AlgebraShape::new(2, 2).unwrap(), zz).unwrap();
        assert!(fro(&(r.restrict_to_q().unwrap() - identity(2) * real(0.5))) < 1e-14);
    }

    #[test]
    fn gns_inner_examples() {
        let r = random_reference(2, 2, 3);
        assert_abs_diff_eq!(r.gns_inner(&identity(4), &identity(4)).re, 1.0, epsilon = 1e-14);

        let tracial = ReferenceState::tracial(AlgebraShape::new(2, 1).unwrap());
        assert_abs_diff_eq!(tracial.gns_inner(&pauli_x(), &pauli_x()).re, 1.0, epsilon = 1e-14);

        let p = r.shape().embed_projector(&basis_vector(2, 0)).unwrap();
        let y = &p - identity(4) * r.expect(&p);
        assert!(r.gns_inner(&identity(4), &y).norm() < 1e-14);
    }

    #[test]
    fn gns_embedding_is_isometric() {
        let r = random_reference(2, 3, 4);
        let gns = r.gns();
        let mut rng = ChaCha8Rng::seed_from_u64(40);
        for _ in 0..10 {
            let x = random::matrix(6, 6, &mut rng);
            let y = random::matrix(6, 6, &mut rng);
            let lhs = r.gns_inner(&x, &y);
            let rhs = gns.embed(&x).dotc(&gns.embed(&y));
            assert!((lhs - rhs).norm() < 1e-12);
            assert!(fro(&(gns.unembed(&gns.embed(&x)) - &x)) < 1e-11);
        }
        assert_abs_diff_eq!(gns.unit().norm(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn modular_flow_examples() {
        let r = random_reference(2, 2, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(50);
        let a = random::matrix(4, 4, &mut rng);
        assert!(fro(&(r.modular_flow(&a, ZERO) - &a)) < 1e-13);

        let commuting = r.density().clone();
        assert!(fro(&(r.modular_flow(&commuting, c(0.3, -0.7)) - &commuting)) < 1e-13);

        let shape = AlgebraShape::new(2, 1).unwrap();
        let r = ReferenceState::new(shape, diag(&[0.0, 3f64.ln()])).unwrap();
        let a = numkernel::from_real_rows(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        let flowed = r.modular_flow(&a, c(0.0, 1.0));
        let expected = numkernel::from_real_rows(2, 2, &[0.0, 3.0, 0.0, 0.0]);
        assert!(fro(&(flowed - expected)) < 1e-13);
    }

    #[test]
    fn modular_flow_group_law_and_isometry() {
        let r = random_reference(3, 2, 6);
        let mut rng = ChaCha8Rng::seed_from_u64(60);
        let a = random::matrix(6, 6, &mut rng);
        let (z1, z2) = (c(0.4, 0.3), c(-1.1, 0.2));
        let lhs = r.modular_flow(&r.modular_flow(&a, z2), z1);
        let rhs = r.modular_flow(&a, z1 + z2);
        assert!(fro(&(lhs - &rhs)) < 1e-11 * fro(&rhs));
        for t in [0.1, 1.0, 10.0] {
            assert_abs_diff_eq!(
                r.gns_norm(&r.modular_flow_real(&a, t)),
                r.gns_norm(&a),
                epsilon = 1e-10
            );
        }
    }

    #[test]
    fn kms_examples() {
        let r = random_reference(2, 2, 7);
        assert!(r.kms_residual(&identity(4), &identity(4)) < 1e-14);

        let mut rng = ChaCha8Rng::seed_from_u64(70);
        for _ in 0..100 {
            let a = random::matrix(4, 4, &mut rng);
            let b = random::matrix(4, 4, &mut rng);
            assert!(r.kms_residual(&a, &b) <= 1e-10 * fro(&a) * fro(&b));
        }

        let tracial = ReferenceState::tracial(AlgebraShape::new(2, 1).unwrap());
        let a = numkernel::projector(&basis_vector(2, 0)) * real(2f64.sqrt());
        let residual = tracial.kms_residual(&a.adjoint(), &a);
        assert!(residual < 1e-14);
        // ω(τ_{-i}(a) a†) = ω(a†a) = 1
        let lhs = tracial.expect(&(tracial.modular_flow(&a, c(0.0, -1.0)) * a.adjoint()));
        assert_abs_diff_eq!(lhs.re, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn positive_definiteness_of_gns_norm() {
        let r = random_reference(2, 2, 8);
        let mut rng = ChaCha8Rng::seed_from_u64(80);
        for _ in 0..20 {
            let x = random::matrix(4, 4, &mut rng);
            let min_weight = herm_eig(r.density(), HERMITICITY_TOL).unwrap().min();
            // ‖x‖²_ω ≥ λ_min(ω) ‖x‖²_F
            assert!(r.gns_norm(&x).powi(2) >= min_weight * fro(&x).powi(2) * (1.0 - 1e-12));
        }
        assert_eq!(r.gns_norm(&numkernel::zeros(4)), 0.0);
    }

    #[test]
    fn restriction_matches_embedded_expectation() {
        let r = random_reference(3, 2, 9);
        let mut rng = ChaCha8Rng::seed_from_u64(90);
        let omega_q = r.restrict_to_q().unwrap();
        for _ in 0..10 {
            let q = random::matrix(3, 3, &mut rng);
            let lhs = trace(&(&omega_q * &q));
            let rhs = r.expect(&r.embed_q(&q).unwrap());
            assert!((lhs - rhs).norm() < 1e-13);
        }
        let _ = ONE;
    }

    #[test]
    fn modular_residual_detects_encoded_hamiltonian() {
        let product = ReferenceState::product(&numkernel::zeros(2), &pauli_z()).unwrap();
        assert!(product.modular_residual_on_q() < 1e-14);
        let r = ReferenceState::product(&pauli_z(), &pauli_z()).unwrap();
        assert!(r.modular_residual_on_q() > 0.1);
    }
}
