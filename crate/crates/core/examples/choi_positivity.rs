//! Choi matrices: a semigroup propagator passes the positivity test, the
//! transpose map does not.

use fidgap::algebra::{AlgebraShape, ReferenceState};
use fidgap::dynamics::{choi_matrix, CpMap, LindbladGenerator};
use fidgap::numkernel::{expm, herm_eig, real, CMatrix, ONE, ZERO};

fn main() -> fidgap::Result<()> {
    let omega = ReferenceState::tracial(AlgebraShape::new(2, 1)?);
    let depolarizing = LindbladGenerator::depolarizing_q(2, 1, 1.0)?;
    let step = expm(&(depolarizing.superop() * real(0.3)));
    let eig = herm_eig(&choi_matrix(&step, 2), 1e-10)?;
    println!("depolarizing step Choi spectrum: {:?}", eig.values.as_slice());
    let map = CpMap::from_superop(step, &omega)?;
    println!("recovered {} Kraus elements", map.kraus().len());

    let transpose = CMatrix::from_fn(4, 4, |row, col| {
        let (i, j) = (row % 2, row / 2);
        if col == j + 2 * i { ONE } else { ZERO }
    });
    let eig = herm_eig(&choi_matrix(&transpose, 2), 1e-10)?;
    println!("transpose Choi spectrum: {:?}", eig.values.as_slice());
    match CpMap::from_superop(transpose, &omega) {
        Ok(_) => println!("transpose accepted?"),
        Err(e) => println!("transpose rejected: {e}"),
    }
    println!("semigroup CP defect at t = 1: {:.2e}", depolarizing.cp_defect(1.0)?);
    Ok(())
}
