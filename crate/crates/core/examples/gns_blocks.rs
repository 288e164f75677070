//! Weighted vectorization of observables and the `ℂ1 ⊕ 1⊥` split of a map.

use fidgap::algebra::{AlgebraShape, ReferenceState};
use fidgap::dynamics::{davies_generator, CpMap, FermiRate};
use fidgap::numkernel::{expm, fro, kron, pauli_x, pauli_z, identity, real};
use fidgap::spectral::{block_decompose, contraction_check, GnsOperator};

fn main() -> fidgap::Result<()> {
    let shape = AlgebraShape::new(2, 2)?;
    let k = kron(&pauli_z(), &identity(2)) + kron(&identity(2), &pauli_z()) * real(0.5);
    let omega = ReferenceState::new(shape, k)?;
    let gns = omega.gns();

    let x = kron(&pauli_x(), &pauli_z());
    let v = gns.embed(&x);
    println!("‖x‖_ω = {:.12}, |vec| = {:.12}", omega.gns_norm(&x), v.norm());
    println!("‖unit‖ = {:.15}", gns.unit().norm());

    let dissipator = davies_generator(&omega, &[(kron(&pauli_x(), &identity(2)), FermiRate { g: 1.0 })])?;
    let step = expm(&(dissipator.superop() * real(0.8)));
    let map = CpMap::from_superop(step, &omega)?;
    println!("{} Kraus elements, invariant: {}", map.kraus().len(), map.is_omega_invariant());

    let op = GnsOperator::from_map(&map, &omega)?;
    let (mu, mdu) = op.unit_residuals();
    println!("‖Mu − u‖ = {mu:.2e}, ‖M†u − u‖ = {mdu:.2e}");
    let blocks = block_decompose(&op);
    println!("phi residual = {:.2e}", blocks.phi_residual);
    println!("contraction margin = {:.6}", contraction_check(&blocks.tilde)?);
    println!(
        "reassembly error = {:.2e}",
        fro(&(blocks.reassemble(&op.unit) - &op.matrix))
    );

    // a unital map that moves ω: the φ block is no longer zero
    let hadamard = fidgap::numkernel::from_real_rows(2, 2, &[1.0, 1.0, 1.0, -1.0]) * real(0.5f64.sqrt());
    let rotate = CpMap::from_kraus(vec![kron(&hadamard, &identity(2))], &omega)?;
    let leak = block_decompose(&GnsOperator::from_map(&rotate, &omega)?);
    println!("non-invariant map: phi residual = {:.3}", leak.phi_residual);
    Ok(())
}
