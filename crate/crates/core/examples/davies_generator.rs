//! Davies generator from Bohr components, detailed balance, and the
//! factorized evolution against direct exponentiation.

use fidgap::algebra::{AlgebraShape, ReferenceState};
use fidgap::dynamics::{
    davies_generator, detailed_balance_check, evolve_direct, evolve_factorized, FermiRate,
};
use fidgap::numkernel::{fro, identity, kron, pauli_x, pauli_z, real};
use fidgap::random;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> fidgap::Result<()> {
    let k = kron(&pauli_z(), &identity(2)) + kron(&identity(2), &pauli_z()) * real(0.5);
    let omega = ReferenceState::new(AlgebraShape::new(2, 2)?, k)?;
    let couplings = [
        (kron(&pauli_x(), &identity(2)), FermiRate { g: 1.0 }),
        (kron(&identity(2), &pauli_x()), FermiRate { g: 0.5 }),
    ];
    let dissipator = davies_generator(&omega, &couplings)?;
    for jump in dissipator.jumps() {
        println!("jump with rate {:.6}, ‖V‖_F = {:.3}", jump.rate, fro(&jump.operator));
    }

    let report = detailed_balance_check(&dissipator, &omega);
    println!(
        "commutation {:.2e}, self-adjointness {:.2e}, passed: {}",
        report.commutation_residual, report.self_adjoint_residual, report.passed
    );

    let full = dissipator.with_hamiltonian(omega.modular_hamiltonian().clone())?;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let x = random::matrix(4, 4, &mut rng);
    for t in [0.1, 1.0, 10.0] {
        let a = evolve_factorized(&full, &omega, t, &x)?;
        let b = evolve_direct(&full, t, &x)?;
        println!("t = {t:>4}: factorized vs direct {:.2e}", fro(&(a - b)));
    }
    println!("invariance residual {:.2e}", full.invariance_residual(&omega));
    Ok(())
}
