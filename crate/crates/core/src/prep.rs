//! Preparation of encoded-qubit states as local perturbations of `ω`.
//!
//! A preparation is a list of Kraus elements `{a_j}` acting on the reference
//! state as `ω′(b) = Σ_j ω(a_j† b a_j)`, i.e. `ω′ = Σ_j a_j ω a_j†` as a
//! density matrix. From it we derive the centred observable
//! `x = Σ_j a_j τ_i(a_j†) − 1`, which carries the preparation into the
//! correlation-function form of the fidelity.

use serde::{Deserialize, Serialize};

use crate::algebra::ReferenceState;
use crate::error::{Error, Result};
use crate::numkernel::{
    self, basis_vector, c, dyad, fro, herm_eig, identity, inv_sqrt_pd, partial_trace_b, real,
    spectral_norm, sqrt_psd, trace, CMatrix, CVector, HERMITICITY_TOL,
};

/// Tolerance on `Σ_j a_j† a_j = 1` for operations.
pub const KRAUS_TOL: f64 = 1e-10;
/// Tolerance on `ω(a†a) = 1` for single perturbations.
pub const SINGLE_NORM_TOL: f64 = 1e-12;
/// Tolerance on the restriction of `ω′` to 𝒬.
pub const RESTRICTION_TOL: f64 = 1e-10;

const UNIT_TOL: f64 = 1e-12;

/// State to be written into the encoded qubits.
#[derive(Clone, Debug)]
pub enum QubitTarget {
    Pure(CVector),
    Mixed(CMatrix),
}

impl QubitTarget {
    pub fn pure(psi: CVector) -> Result<Self> {
        let norm = psi.norm();
        if (norm - 1.0).abs() > UNIT_TOL {
            return Err(Error::Invalid(format!("target vector has norm {norm}")));
        }
        Ok(Self::Pure(psi))
    }

    pub fn mixed(sigma: CMatrix) -> Result<Self> {
        let eig = herm_eig(&sigma, HERMITICITY_TOL)?;
        let tr = trace(&sigma).re;
        if (tr - 1.0).abs() > UNIT_TOL || eig.min() < -UNIT_TOL {
            return Err(Error::Invalid(format!(
                "target density matrix has trace {tr} and min eigenvalue {}",
                eig.min()
            )));
        }
        Ok(Self::Mixed(sigma))
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Pure(psi) => psi.len(),
            Self::Mixed(sigma) => sigma.nrows(),
        }
    }

    pub fn density(&self) -> CMatrix {
        match self {
            Self::Pure(psi) => numkernel::projector(psi),
            Self::Mixed(sigma) => sigma.clone(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PreparationKind {
    Single,
    Replacement,
    Filtered,
    Custom,
}

/// Kraus description of a preparation.
#[derive(Clone, Debug)]
pub struct Preparation {
    kind: PreparationKind,
    kraus: Vec<CMatrix>,
    target: Option<CMatrix>,
    // Post-selected branch of a filtered preparation, normalized.
    selected: Option<CMatrix>,
}

impl Preparation {
    pub fn kind(&self) -> PreparationKind {
        self.kind
    }

    /// Kraus elements of the full operation.
    pub fn kraus(&self) -> &[CMatrix] {
        &self.kraus
    }

    /// Kraus elements of the state actually handed to the dynamics. For a
    /// filtered preparation this is the post-selected branch alone.
    pub fn effective_kraus(&self) -> &[CMatrix] {
        match &self.selected {
            Some(a) => std::slice::from_ref(a),
            None => &self.kraus,
        }
    }

    /// Target state on 𝒬, when the preparation was built for one.
    pub fn target(&self) -> Option<&CMatrix> {
        self.target.as_ref()
    }

    /// `|Σ_j ω(a_j† a_j) − 1|` for single perturbations, `‖Σ_j a_j† a_j − 1‖_F`
    /// for operations.
    pub fn normalization_residual(&self, reference: &ReferenceState) -> f64 {
        match self.kind {
            PreparationKind::Single => {
                let total: numkernel::C64 = self
                    .kraus
                    .iter()
                    .map(|a| reference.expect(&(a.adjoint() * a)))
                    .sum();
                (total - real(1.0)).norm()
            }
            _ => {
                let n = reference.n();
                let sum = self
                    .kraus
                    .iter()
                    .fold(numkernel::zeros(n), |acc, a| acc + a.adjoint() * a);
                fro(&(sum - identity(n)))
            }
        }
    }

    /// `‖tr_B(ω′) − σ‖_F` against the stored target.
    pub fn restriction_residual(&self, reference: &ReferenceState) -> Result<f64> {
        let shape = reference.shape();
        let target = match &self.target {
            Some(t) => t.clone(),
            None => return Ok(0.0),
        };
        let omega_q = partial_trace_b(&perturbed_state(self, reference), shape.dq, shape.db)?;
        Ok(fro(&(omega_q - target)))
    }

    /// Total-system initial state assigned to the qubit state `sigma` by the
    /// same preparation rule.
    pub fn assign(&self, sigma: &CMatrix, reference: &ReferenceState) -> Result<CMatrix> {
        let target = QubitTarget::mixed(sigma.clone())?;
        let prep = match self.kind {
            PreparationKind::Single | PreparationKind::Filtered => {
                single_perturbation(&target, reference)?
            }
            PreparationKind::Replacement => replacement_operation(&target, reference)?,
            PreparationKind::Custom => return Err(Error::UnsupportedAssignment),
        };
        Ok(perturbed_state(&prep, reference))
    }
}

fn check_target(target: &QubitTarget, reference: &ReferenceState) -> Result<()> {
    let dq = reference.shape().dq;
    if target.dim() != dq {
        return Err(Error::DimensionMismatch(format!(
            "target has dimension {}, dQ={dq}",
            target.dim()
        )));
    }
    Ok(())
}

/// One Kraus element `a = σ^{1/2} ω_Q^{-1/2} ⊗ 1` with `ω(a† q a) = tr(σ q)`.
pub fn single_perturbation(target: &QubitTarget, reference: &ReferenceState) -> Result<Preparation> {
    check_target(target, reference)?;
    let omega_q = reference.restrict_to_q()?;
    let sigma = target.density();
    let a_q = sqrt_psd(&sigma)? * inv_sqrt_pd(&omega_q)?;
    Ok(Preparation {
        kind: PreparationKind::Single,
        kraus: vec![reference.embed_q(&a_q)?],
        target: Some(sigma),
        selected: None,
    })
}

/// Replacement operation `Φ(q) = tr(σ q)·1`, realized with Kraus elements
/// `√p_k |φ_k⟩⟨j| ⊗ 1` from the eigendecomposition `σ = Σ_k p_k |φ_k⟩⟨φ_k|`.
/// For a pure target these are `|ψ⟩⟨j| ⊗ 1`.
pub fn replacement_operation(
    target: &QubitTarget,
    reference: &ReferenceState,
) -> Result<Preparation> {
    check_target(target, reference)?;
    let dq = reference.shape().dq;
    let weighted: Vec<CVector> = match target {
        QubitTarget::Pure(psi) => vec![psi.clone()],
        QubitTarget::Mixed(sigma) => {
            let eig = herm_eig(sigma, HERMITICITY_TOL)?;
            let floor = 1e-14;
            (0..dq)
                .rev()
                .filter(|&k| eig.values[k] > floor)
                .map(|k| eig.vectors.column(k).into_owned() * real(eig.values[k].sqrt()))
                .collect()
        }
    };
    let mut kraus = Vec::with_capacity(weighted.len() * dq);
    for phi in &weighted {
        for j in 0..dq {
            kraus.push(reference.embed_q(&dyad(phi, &basis_vector(dq, j)))?);
        }
    }
    Ok(Preparation {
        kind: PreparationKind::Replacement,
        kraus,
        target: Some(target.density()),
        selected: None,
    })
}

/// Weight-`p` filtering of a single perturbation `a`: the operation
/// `{√p·a, (1 − p a†a)^{1/2}}` whose first branch, once selected, prepares
/// `ω(a†·a)`.
pub fn filtered_preparation(a: &CMatrix, p: f64, reference: &ReferenceState) -> Result<Preparation> {
    reference.shape().check_observable(a)?;
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::Invalid(format!("filter weight p={p} outside (0, 1]")));
    }
    let ada = a.adjoint() * a;
    let weight = p * spectral_norm(&ada)?;
    if weight > 1.0 + 1e-12 {
        return Err(Error::WeightTooLarge(weight));
    }
    let n = reference.n();
    let a1 = a * real(p.sqrt());
    let a2 = sqrt_psd(&(identity(n) - &ada * real(p)))?;
    let norm = reference.expect(&ada).re;
    if norm <= 0.0 {
        return Err(Error::Invalid("filtered element has ω(a†a) = 0".into()));
    }
    let selected = a * real(1.0 / norm.sqrt());
    let shape = reference.shape();
    let target = partial_trace_b(
        &(&selected * reference.density() * selected.adjoint()),
        shape.dq,
        shape.db,
    )?;
    Ok(Preparation {
        kind: PreparationKind::Filtered,
        kraus: vec![a1, a2],
        target: Some(target),
        selected: Some(selected),
    })
}

/// Arbitrary Kraus elements on the total space. The elements must resolve
/// the identity; the restriction of `ω′` to 𝒬 is checked against `target`
/// when one is supplied.
pub fn custom_operation(
    kraus: Vec<CMatrix>,
    target: Option<CMatrix>,
    reference: &ReferenceState,
) -> Result<Preparation> {
    if kraus.is_empty() {
        return Err(Error::Invalid("custom preparation without Kraus elements".into()));
    }
    for a in &kraus {
        reference.shape().check_observable(a)?;
    }
    let prep = Preparation {
        kind: PreparationKind::Custom,
        kraus,
        target,
        selected: None,
    };
    let residual = prep.normalization_residual(reference);
    if residual > KRAUS_TOL {
        return Err(Error::InvariantViolation(vec![format!(
            "kraus normalization residual {residual:.3e}"
        )]));
    }
    Ok(prep)
}

/// `y = P_ψ − ω(P_ψ)`, with `P_ψ` tensorized with the identity on ℬ.
pub fn build_y(psi: &CVector, reference: &ReferenceState) -> Result<CMatrix> {
    let p = reference.shape().embed_projector(psi)?;
    let floor = reference.expect(&p).re;
    Ok(p - identity(reference.n()) * real(floor))
}

/// `x = Σ_j a_j τ_i(a_j†) − 1` over the effective Kraus elements.
pub fn build_x(prep: &Preparation, reference: &ReferenceState) -> CMatrix {
    let n = reference.n();
    let boundary = c(0.0, 1.0);
    prep.effective_kraus()
        .iter()
        .fold(-identity(n), |acc, a| {
            acc + a * reference.modular_flow(&a.adjoint(), boundary)
        })
}

/// Perturbed state `ω′ = Σ_j a_j ω a_j†` over the effective Kraus elements.
pub fn perturbed_state(prep: &Preparation, reference: &ReferenceState) -> CMatrix {
    let omega = reference.density();
    prep.effective_kraus()
        .iter()
        .fold(numkernel::zeros(reference.n()), |acc, a| {
            acc + a * omega * a.adjoint()
        })
}
