//! Reduced qubit dynamics through the product assignment `σ ↦ σ ⊗ ω_B`.

use fidgap::algebra::ReferenceState;
use fidgap::dynamics::{reduced_dynamics, DynamicsSpec, LindbladGenerator};
use fidgap::fidelity::{fidelity_direct, Observables};
use fidgap::numkernel::{self, basis_vector, pauli_z, projector, real};
use fidgap::prep::{replacement_operation, QubitTarget};

fn main() -> fidgap::Result<()> {
    let omega = ReferenceState::product(&numkernel::zeros(2), &(pauli_z() * real(0.4)))?;
    let spec = DynamicsSpec::Semigroup(LindbladGenerator::depolarizing_q(2, 2, 0.5)?);
    let evolution = spec.evolution(&omega)?;
    let psi = (basis_vector(2, 0) + basis_vector(2, 1)) * real(0.5f64.sqrt());
    let prep = replacement_operation(&QubitTarget::pure(psi.clone())?, &omega)?;
    let obs = Observables::new(&prep, &omega, &psi)?;

    for t in [0.0, 0.5, 2.0, 8.0] {
        let rho = reduced_dynamics(&evolution, &prep, t, &projector(&psi))?;
        let overlap = (psi.adjoint() * &rho * &psi)[(0, 0)].re;
        let direct = fidelity_direct(&evolution, &obs, t)?;
        println!("t = {t:>4}: ⟨ψ|ρ(t)|ψ⟩ = {overlap:.12}, f_direct = {direct:.12}");
    }
    Ok(())
}
