//! Gibbs reference state, its modular flow and the KMS boundary condition.

use fidgap::algebra::{AlgebraShape, ReferenceState};
use fidgap::numkernel::{c, fro, kron, pauli_x, pauli_z, identity, real};
use fidgap::random;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> fidgap::Result<()> {
    let shape = AlgebraShape::new(2, 2)?;
    let h = kron(&pauli_z(), &identity(2)) + kron(&pauli_x(), &pauli_x()) * real(0.3);
    let omega = ReferenceState::gibbs(shape, &h, 0.8)?;

    println!("spectrum of K: {:?}", omega.modular_spectrum().values.as_slice());
    println!("omega(1) = {:.15}", omega.expect(&identity(4)).re);

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let worst = (0..100)
        .map(|_| {
            let a = random::matrix(4, 4, &mut rng);
            let b = random::matrix(4, 4, &mut rng);
            omega.kms_residual(&a, &b)
        })
        .fold(0.0, f64::max);
    println!("max KMS residual over 100 pairs: {worst:.2e}");

    // τ_t is a *-automorphism: it fixes ω and preserves products
    let a = random::matrix(4, 4, &mut rng);
    let b = random::matrix(4, 4, &mut rng);
    let t = 1.7;
    let product = omega.modular_flow_real(&(&a * &b), t)
        - omega.modular_flow_real(&a, t) * omega.modular_flow_real(&b, t);
    println!("‖τ_t(ab) − τ_t(a)τ_t(b)‖ = {:.2e}", fro(&product));
    let shift = (omega.expect(&omega.modular_flow_real(&a, t)) - omega.expect(&a)).norm();
    println!("|ω(τ_t(a)) − ω(a)| = {shift:.2e}");

    // analytic continuation to imaginary time
    let boundary = omega.modular_flow(&a, c(0.0, 1.0));
    println!("‖τ_i(a)‖_F / ‖a‖_F = {:.4}", fro(&boundary) / fro(&a));
    Ok(())
}
