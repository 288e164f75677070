//! Gap of a Davies dissipator by eigensolve, checked against the decay of
//! a random centred observable.

use fidgap::algebra::{AlgebraShape, ReferenceState};
use fidgap::dynamics::{davies_generator, DynamicsSpec, FermiRate};
use fidgap::numkernel::{identity, kron, pauli_x, pauli_z, real};
use fidgap::random;
use fidgap::spectral::{decay_fit_rate, spectral_gap, GapMode};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> fidgap::Result<()> {
    let k = kron(&pauli_z(), &identity(2)) + kron(&identity(2), &pauli_z()) * real(0.5);
    let omega = ReferenceState::new(AlgebraShape::new(2, 2)?, k)?;
    let couplings = [
        (kron(&pauli_x(), &identity(2)), FermiRate { g: 1.0 }),
        (kron(&identity(2), &pauli_x()), FermiRate { g: 1.0 }),
    ];
    let dissipator = davies_generator(&omega, &couplings)?;
    let report = spectral_gap(&dissipator, &omega, GapMode::DetailedBalance)?;
    let lambda = report.gap_lambda.expect("detailed balance mode");
    println!("{}", serde_json::to_string_pretty(&report)?);

    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let x = random::matrix(4, 4, &mut rng);
    let eta = &x - identity(4) * omega.expect(&x);
    let fit = decay_fit_rate(&dissipator, &omega, &eta, 1.0 / lambda)?;
    println!("lambda = {lambda:.12}, decay fit = {fit:.12}");

    let spec = DynamicsSpec::Semigroup(dissipator);
    let evolution = spec.evolution(&omega)?;
    for t in [0.1, 1.0, 10.0].map(|s| s / lambda) {
        let ratio = omega.gns_norm(&evolution.evolve(t, &eta)?) / omega.gns_norm(&eta);
        println!("t = {t:>8.3}: ‖e^(tL)η‖/‖η‖ = {ratio:.3e} ≤ e^(-λt) = {:.3e}", (-lambda * t).exp());
    }
    Ok(())
}
