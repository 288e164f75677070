//! The built-in preparations, their centred observables and GNS norms.

use fidgap::algebra::{AlgebraShape, ReferenceState};
use fidgap::numkernel::{basis_vector, identity, kron, pauli_x};
use fidgap::prep::{
    build_x, build_y, filtered_preparation, replacement_operation, single_perturbation, QubitTarget,
};

fn main() -> fidgap::Result<()> {
    for d in [2usize, 3, 4] {
        let omega = ReferenceState::tracial(AlgebraShape::new(d, 2)?);
        let psi = basis_vector(d, 0);
        let target = QubitTarget::pure(psi.clone())?;
        let prep = single_perturbation(&target, &omega)?;
        let x = build_x(&prep, &omega);
        let y = build_y(&psi, &omega)?;
        println!(
            "d = {d}: ‖x‖ = {:.12} (√(d−1) = {:.12}), ‖y‖ = {:.12}",
            omega.gns_norm(&x),
            ((d - 1) as f64).sqrt(),
            omega.gns_norm(&y)
        );
    }

    let k = kron(&pauli_x(), &identity(2));
    let omega = ReferenceState::new(AlgebraShape::new(2, 2)?, k)?;
    let psi = basis_vector(2, 1);
    let target = QubitTarget::pure(psi.clone())?;
    let preps = [
        ("single", single_perturbation(&target, &omega)?),
        ("replacement", replacement_operation(&target, &omega)?),
        ("filtered", filtered_preparation(&kron(&pauli_x(), &identity(2)), 0.5, &omega)?),
    ];
    for (name, prep) in &preps {
        let x = build_x(prep, &omega);
        println!(
            "{name:>12}: {} Kraus, normalization {:.1e}, restriction {:.1e}, |ω(x)| = {:.1e}",
            prep.kraus().len(),
            prep.normalization_residual(&omega),
            prep.restriction_residual(&omega)?,
            omega.expect(&x).norm()
        );
    }
    Ok(())
}
