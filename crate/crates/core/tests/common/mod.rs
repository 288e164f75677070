//! Seeded random models shared by the integration tests. Every model has
//! ω-invariant dynamics: the modular flow, a Davies semigroup with random
//! couplings, or a single step of such a semigroup given by Kraus elements.
#![allow(dead_code)]

use fidgap::algebra::{AlgebraShape, ReferenceState};
use fidgap::dynamics::{davies_generator, CpMap, DynamicsSpec, FermiRate, LindbladGenerator};
use fidgap::fidelity::Model;
use fidgap::numkernel::{self, expm, real, spectral_norm, CMatrix};
use fidgap::prep::{filtered_preparation, replacement_operation, single_perturbation, QubitTarget};
use fidgap::random;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DynKind {
    Unitary,
    Semigroup,
    Map,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PrepKind {
    Single,
    Replacement,
    Filtered,
}

pub struct RandomModel {
    pub seed: u64,
    pub dyn_kind: DynKind,
    pub prep_kind: PrepKind,
    pub model: Model,
    /// Davies dissipator behind semigroup and map kinds.
    pub dissipator: Option<LindbladGenerator>,
}

pub fn random_davies(reference: &ReferenceState, rng: &mut ChaCha8Rng) -> LindbladGenerator {
    let n = reference.n();
    let couplings: Vec<(CMatrix, FermiRate)> = (0..2)
        .map(|_| {
            let s = random::hermitian(n, 1.0, rng);
            let s = &s / real(numkernel::fro(&s));
            (s, FermiRate { g: rng.random_range(0.5..2.0) })
        })
        .collect();
    davies_generator(reference, &couplings).expect("random spectra bin cleanly")
}

/// Model `index` of the seeded suite. Shapes, preparation kinds and dynamics
/// kinds cycle so that every combination of kinds appears in 50 models.
pub fn random_model(index: u64) -> RandomModel {
    let seed = 1000 + index;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dq = [2, 3][(index % 2) as usize];
    let db = [1, 2, 4][((index / 2) % 3) as usize];
    let prep_kind = [PrepKind::Single, PrepKind::Replacement, PrepKind::Filtered][(index % 3) as usize];
    let dyn_kind = [DynKind::Unitary, DynKind::Semigroup, DynKind::Map][((index / 3) % 3) as usize];

    let shape = AlgebraShape::new(dq, db).unwrap();
    let n = shape.n();
    let k = random::hermitian(n, 1.0, &mut rng);
    let reference = ReferenceState::new(shape, k).unwrap();

    let (dynamics, dissipator) = match dyn_kind {
        DynKind::Unitary => (DynamicsSpec::Unitary, None),
        DynKind::Semigroup => {
            let l = random_davies(&reference, &mut rng);
            let full = l.with_hamiltonian(reference.modular_hamiltonian().clone()).unwrap();
            (DynamicsSpec::Semigroup(full), Some(l))
        }
        DynKind::Map => {
            let l = random_davies(&reference, &mut rng);
            let full = l.with_hamiltonian(reference.modular_hamiltonian().clone()).unwrap();
            let step = expm(&(full.superop() * real(0.35)));
            (DynamicsSpec::Map(CpMap::from_superop(step, &reference).unwrap()), Some(l))
        }
    };

    let psi = random::unit_vector(dq, &mut rng);
    let preparation = match prep_kind {
        PrepKind::Single => {
            single_perturbation(&QubitTarget::pure(psi.clone()).unwrap(), &reference).unwrap()
        }
        PrepKind::Replacement => {
            let target = if rng.random_bool(0.5) {
                QubitTarget::pure(psi.clone()).unwrap()
            } else {
                QubitTarget::mixed(random::density_matrix(dq, &mut rng)).unwrap()
            };
            replacement_operation(&target, &reference).unwrap()
        }
        PrepKind::Filtered => {
            let a = random::matrix(n, n, &mut rng);
            let a = &a / real(spectral_norm(&a).unwrap());
            filtered_preparation(&a, 0.5, &reference).unwrap()
        }
    };

    RandomModel {
        seed,
        dyn_kind,
        prep_kind,
        model: Model::new(reference, dynamics, preparation, psi).unwrap(),
        dissipator,
    }
}

/// 20 admissible times for the model's dynamics kind.
pub fn sample_times(kind: DynKind) -> Vec<f64> {
    match kind {
        DynKind::Map => (0..20).map(|k| k as f64).collect(),
        _ => (0..20).map(|k| 0.4 * k as f64).collect(),
    }
}

/// Random observable with `ω(η) = 0` and `‖η‖_ω = 1`.
pub fn centred(reference: &ReferenceState, rng: &mut ChaCha8Rng) -> CMatrix {
    let n = reference.n();
    let x = random::matrix(n, n, rng);
    let eta = &x - numkernel::identity(n) * reference.expect(&x);
    let norm = reference.gns_norm(&eta);
    eta / real(norm)
}
