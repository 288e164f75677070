//! Built-in demo models, emitted as ordinary configs.

use crate::algebra::{AlgebraShape, ReferenceState};
use crate::dynamics::{davies_generator, CpMap, FermiRate, LindbladGenerator};
use crate::error::{Error, Result};
use crate::numkernel::{self, basis_vector, identity, kron, pauli_x, pauli_z, real, CMatrix, CVector};

use super::config::{
    DynamicsConfig, JsonMatrix, JsonVector, JumpConfig, ModelConfig, PreparationConfig, RateFamily,
};

pub const NAMES: [&str; 6] = [
    "depolarizing",
    "davies-1q",
    "davies-2q",
    "davies-map",
    "unitary-chain",
    "trivial",
];

fn plus() -> CVector {
    (basis_vector(2, 0) + basis_vector(2, 1)) * real(0.5f64.sqrt())
}

fn single(psi: &CVector) -> PreparationConfig {
    PreparationConfig::Single {
        sigma: JsonMatrix::from_matrix(&numkernel::projector(psi)),
    }
}

fn config(
    shape: AlgebraShape,
    beta: f64,
    hamiltonian: &CMatrix,
    dynamics: DynamicsConfig,
    preparation: PreparationConfig,
    psi: &CVector,
) -> ModelConfig {
    ModelConfig {
        shape,
        beta,
        hamiltonian: JsonMatrix::from_matrix(hamiltonian),
        dynamics,
        preparation,
        psi: JsonVector::from_vector(psi),
        time_grid: None,
    }
}

/// Depolarizing at rate 1 on the encoded qubit plus thermalization of the
/// syndrome qubit at rate 2, over `H = 1 ⊗ σ_z/2`. The encoded marginal of
/// `ω` is tracial, and the gap on `1⊥` is 1.
pub fn depolarizing() -> Result<ModelConfig> {
    let shape = AlgebraShape::new(2, 2)?;
    let h = kron(&identity(2), &(pauli_z() * real(0.5)));
    let reference = ReferenceState::gibbs(shape, &h, 1.0)?;
    let mut jumps = LindbladGenerator::depolarizing_q(2, 2, 1.0)?.jumps().to_vec();
    jumps.extend(LindbladGenerator::thermalize_b(&reference, 2.0)?.jumps().iter().cloned());
    let dynamics = DynamicsConfig::Lindblad {
        hamiltonian_part: JsonMatrix::from_matrix(&numkernel::zeros(4)),
        jumps: jumps
            .iter()
            .map(|j| JumpConfig {
                matrix: JsonMatrix::from_matrix(&j.operator),
                rate: j.rate,
            })
            .collect(),
    };
    let psi = basis_vector(2, 0);
    Ok(config(shape, 1.0, &h, dynamics, single(&psi), &psi))
}

fn davies(couplings: &[CMatrix]) -> DynamicsConfig {
    DynamicsConfig::Davies {
        couplings: couplings.iter().map(JsonMatrix::from_matrix).collect(),
        rate_family: RateFamily::Fermi { g: 1.0 },
    }
}

/// `H = σ_z`, coupling `σ_x`, `β = 1`.
pub fn davies_1q() -> Result<ModelConfig> {
    let psi = plus();
    Ok(config(
        AlgebraShape::new(2, 1)?,
        1.0,
        &pauli_z(),
        davies(&[pauli_x()]),
        single(&psi),
        &psi,
    ))
}

fn two_qubit_hamiltonian() -> CMatrix {
    kron(&pauli_z(), &identity(2)) + kron(&identity(2), &pauli_z()) * real(0.5)
}

/// `H = σ_z ⊗ 1 + ½ 1 ⊗ σ_z`, couplings `σ_x ⊗ 1` and `1 ⊗ σ_x`.
pub fn davies_2q() -> Result<ModelConfig> {
    let psi = plus();
    Ok(config(
        AlgebraShape::new(2, 2)?,
        1.0,
        &two_qubit_hamiltonian(),
        davies(&[kron(&pauli_x(), &identity(2)), kron(&identity(2), &pauli_x())]),
        single(&psi),
        &psi,
    ))
}

/// One step of the single-qubit Davies semigroup at `t = 1/2`, as Kraus elements.
pub fn davies_map() -> Result<ModelConfig> {
    let shape = AlgebraShape::new(2, 1)?;
    let reference = ReferenceState::gibbs(shape, &pauli_z(), 1.0)?;
    let dissipator = davies_generator(&reference, &[(pauli_x(), FermiRate { g: 1.0 })])?;
    let generator = dissipator.with_hamiltonian(reference.modular_hamiltonian().clone())?;
    let step = numkernel::expm(&(generator.superop() * real(0.5)));
    let map = CpMap::from_superop(step, &reference)?;
    let psi = plus();
    Ok(config(
        shape,
        1.0,
        &pauli_z(),
        DynamicsConfig::Map {
            kraus: map.kraus().iter().map(JsonMatrix::from_matrix).collect(),
        },
        single(&psi),
        &psi,
    ))
}

/// Transverse-field Ising chain of 3 spins at `β = 1/2`, encoded qubit on
/// the first spin, evolved by its own modular flow.
pub fn unitary_chain() -> Result<ModelConfig> {
    let shape = AlgebraShape::new(2, 4)?;
    let site = |op: &CMatrix, k: usize| {
        (0..3).fold(CMatrix::identity(1, 1), |acc, j| {
            kron(&acc, &if j == k { op.clone() } else { identity(2) })
        })
    };
    let zz = pauli_z();
    let mut h = &site(&zz, 0) * &site(&zz, 1) + &site(&zz, 1) * &site(&zz, 2);
    for k in 0..3 {
        h += site(&pauli_x(), k) * real(0.7);
    }
    let psi = basis_vector(2, 0);
    Ok(config(
        shape,
        0.5,
        &h,
        DynamicsConfig::Unitary,
        PreparationConfig::Replacement {
            psi: JsonVector::from_vector(&psi),
        },
        &psi,
    ))
}

/// The two-qubit Davies model with the preparation that leaves `ω` untouched.
pub fn trivial() -> Result<ModelConfig> {
    let mut cfg = davies_2q()?;
    let omega_q = cfg.reference()?.restrict_to_q()?;
    cfg.preparation = PreparationConfig::Single {
        sigma: JsonMatrix::from_matrix(&omega_q),
    };
    Ok(cfg)
}

pub fn demo(name: &str) -> Result<ModelConfig> {
    match name {
        "depolarizing" => depolarizing(),
        "davies-1q" => davies_1q(),
        "davies-2q" => davies_2q(),
        "davies-map" => davies_map(),
        "unitary-chain" => unitary_chain(),
        "trivial" => trivial(),
        other => Err(Error::Invalid(format!(
            "unknown demo `{other}`; available: {}",
            NAMES.join(", ")
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_demos_build() {
        for name in NAMES {
            let model = demo(name).unwrap().build();
            assert!(model.is_ok(), "{name}: {:?}", model.err());
        }
        assert!(demo("nope").is_err());
    }

    #[test]
    fn depolarizing_demo_has_unit_gap() {
        let model = depolarizing().unwrap().build().unwrap();
        let report = model.spectral_report().unwrap();
        assert!((report.gap_lambda.unwrap() - 1.0).abs() < 1e-10);
        assert_eq!(report.kernel_dim_on_complement, 0);
        assert!(model.is_tracial_perfect().unwrap());
    }
}
