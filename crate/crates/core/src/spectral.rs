//! GNS-space matrices, the `ℂ1 ⊕ 1⊥` block split, contraction margins and
//! spectral gaps.

use serde::{Deserialize, Serialize};

use crate::algebra::ReferenceState;
use crate::dynamics::{detailed_balance_check, CpMap, DetailedBalanceReport, Evolution, LindbladGenerator};
use crate::error::{Error, Result};
use crate::numkernel::{self, expm, fro, herm_eig, real, spectral_norm, CMatrix, CVector};

/// Residual allowed on `M u = u`, `M† u = u` and the `φ` block.
pub const BLOCK_TOL: f64 = 1e-10;
/// Eigenvalues of `−L` on `1⊥` at or below this count towards the kernel.
pub const KERNEL_TOL: f64 = 1e-10;
/// A symmetrized rate must exceed this to certify decay.
pub const GAP_VALID_TOL: f64 = 1e-10;

/// Matrix of a superoperator on `ℋ_ω`, with the image `u` of the identity.
#[derive(Clone, Debug)]
pub struct GnsOperator {
    pub matrix: CMatrix,
    pub unit: CVector,
}

impl GnsOperator {
    pub fn from_superop(superop: &CMatrix, reference: &ReferenceState) -> Result<Self> {
        let dim = reference.n() * reference.n();
        if superop.nrows() != dim || superop.ncols() != dim {
            return Err(Error::DimensionMismatch(format!(
                "superoperator is {}x{}, GNS space has dimension {dim}",
                superop.nrows(),
                superop.ncols()
            )));
        }
        let gns = reference.gns();
        Ok(Self {
            matrix: gns.represent(superop),
            unit: gns.unit(),
        })
    }

    pub fn from_map(map: &CpMap, reference: &ReferenceState) -> Result<Self> {
        Self::from_superop(map.superop(), reference)
    }

    /// GNS matrix of a generator (not of the semigroup it generates).
    pub fn from_generator(generator: &LindbladGenerator, reference: &ReferenceState) -> Result<Self> {
        if generator.dim() != reference.n() {
            return Err(Error::DimensionMismatch(
                "generator and reference sizes differ".into(),
            ));
        }
        Self::from_superop(&generator.superop(), reference)
    }

    pub fn dim(&self) -> usize {
        self.unit.len()
    }

    /// `(‖M u − u‖, ‖M† u − u‖)`.
    pub fn unit_residuals(&self) -> (f64, f64) {
        (
            (&self.matrix * &self.unit - &self.unit).norm(),
            (self.matrix.adjoint() * &self.unit - &self.unit).norm(),
        )
    }
}

/// GNS matrix of `Λ_t` for any dynamics kind.
pub fn to_gns_matrix(evolution: &Evolution<'_>, t: f64) -> Result<GnsOperator> {
    let reference = evolution.reference();
    Ok(GnsOperator {
        matrix: evolution.gns_matrix(t)?,
        unit: reference.gns().unit(),
    })
}

/// Orthonormal basis of `u⊥`, as columns. Built by Gram–Schmidt from `u`
/// against the standard basis in order, two passes per vector.
pub fn complement_basis(unit: &CVector) -> CMatrix {
    let dim = unit.len();
    let mut accepted: Vec<CVector> = vec![unit.normalize()];
    for k in 0..dim {
        if accepted.len() == dim {
            break;
        }
        let mut v = numkernel::basis_vector(dim, k);
        for _ in 0..2 {
            for q in &accepted {
                let overlap = q.dotc(&v);
                v -= q * overlap;
            }
        }
        let norm = v.norm();
        // the standard basis spans the space, so exactly one vector is
        // (numerically) absorbed by u
        if norm > 1e-8 {
            accepted.push(v / real(norm));
        }
    }
    let columns: Vec<CVector> = accepted.into_iter().skip(1).collect();
    CMatrix::from_columns(&columns)
}

/// Result of splitting `M` against `ℂu ⊕ u⊥`.
#[derive(Clone, Debug)]
pub struct BlockDecomposition {
    /// `‖u† M B‖`: how far `M` leaks from `u⊥` into `ℂu`.
    pub phi_residual: f64,
    /// `B† M B`, the compression to `u⊥`.
    pub tilde: CMatrix,
    /// Columns spanning `u⊥`.
    pub basis: CMatrix,
    /// `⟨u, M u⟩`.
    pub unit_entry: numkernel::C64,
}

impl BlockDecomposition {
    /// `[[⟨u,Mu⟩, 0], [0, Λ̃]]` mapped back to the original basis.
    pub fn reassemble(&self, unit: &CVector) -> CMatrix {
        let u = unit.normalize();
        numkernel::projector(&u) * self.unit_entry
            + &self.basis * &self.tilde * self.basis.adjoint()
    }
}

pub fn block_decompose(op: &GnsOperator) -> BlockDecomposition {
    let basis = complement_basis(&op.unit);
    let u = op.unit.normalize();
    let mb = &op.matrix * &basis;
    let phi = u.adjoint() * &mb;
    BlockDecomposition {
        phi_residual: phi.norm(),
        tilde: basis.adjoint() * mb,
        unit_entry: u.dotc(&(&op.matrix * &u)),
        basis,
    }
}

/// `1 − σ_max(Λ̃)`.
pub fn contraction_check(tilde: &CMatrix) -> Result<f64> {
    if tilde.is_empty() {
        return Ok(1.0);
    }
    Ok(1.0 - spectral_norm(tilde)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GapMode {
    DetailedBalance,
    Symmetrized,
}

/// Where the decay rate of a report comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateSource {
    /// Lowest eigenvalue of `−L_dis` on `1⊥`.
    DetailedBalance,
    /// Lowest eigenvalue of `−(L̂ + L̂†)/2` on `1⊥`.
    Symmetrized,
    /// `−ln σ_max(Λ̃)` per step of a map.
    MapStep,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralReport {
    pub mode: GapMode,
    /// Contraction rate guaranteeing `‖Λ_t(x)‖_ω ≤ e^{−γt}‖x‖_ω` on `1⊥`.
    pub gap_gamma: f64,
    pub gamma_valid: bool,
    /// Lowest eigenvalue of `−L_dis` on `1⊥` (detailed-balance case only).
    pub gap_lambda: Option<f64>,
    pub kernel_dim_on_complement: usize,
    pub phi_residual: f64,
    pub contraction_margin: f64,
    pub detailed_balance: Option<DetailedBalanceReport>,
    pub warnings: Vec<String>,
}

impl SpectralReport {
    /// Rate to feed into the decay bound, with its origin. `None` when no
    /// valid certificate exists.
    pub fn certified_rate(&self) -> Option<(f64, RateSource)> {
        if let Some(lambda) = self.gap_lambda {
            if lambda > GAP_VALID_TOL && self.phi_residual <= BLOCK_TOL {
                return Some((lambda, RateSource::DetailedBalance));
            }
        }
        if self.gamma_valid {
            return Some((self.gap_gamma, RateSource::Symmetrized));
        }
        None
    }
}

fn compressed_sym_spectrum(tilde: &CMatrix) -> Result<numkernel::HermEig> {
    let minus_sym = (tilde + tilde.adjoint()) * real(-0.5);
    herm_eig(&minus_sym, 1e-9 * fro(tilde).max(1.0))
}

fn kernel_dim(values: &[f64]) -> usize {
    values.iter().filter(|&&v| v <= KERNEL_TOL).count()
}

/// Residuals of the Hamiltonian part against the factorization
/// `Λ_t = e^{tδ_H} ∘ e^{tL_dis}`: GNS skew-adjointness of `δ_H` and its
/// commutation with `L̂_dis`.
fn hamiltonian_part_residuals(generator: &LindbladGenerator, reference: &ReferenceState) -> (f64, f64) {
    let h = generator.hamiltonian();
    let delta = (numkernel::left_superop(h) - numkernel::right_superop(h)) * numkernel::I;
    let gns = reference.gns();
    let d = gns.represent(&delta);
    let l = gns.represent(&generator.dissipative_part().superop());
    (fro(&(&d + d.adjoint())), fro(&(&d * &l - &l * &d)))
}

/// Spectral gap of a generator on `1⊥`.
///
/// In detailed-balance mode the dissipative part must pass
/// [`detailed_balance_check`] and the Hamiltonian part must generate GNS
/// isometries commuting with it; otherwise `NotDetailedBalance` is returned.
pub fn spectral_gap(
    generator: &LindbladGenerator,
    reference: &ReferenceState,
    mode: GapMode,
) -> Result<SpectralReport> {
    let op = GnsOperator::from_generator(generator, reference)?;
    let blocks = block_decompose(&op);
    let scale = fro(&op.matrix).max(f64::MIN_POSITIVE);
    let mut warnings = Vec::new();

    let sym = compressed_sym_spectrum(&blocks.tilde)?;
    let gap_gamma = sym.min();
    let invariant = blocks.phi_residual <= BLOCK_TOL * scale.max(1.0);
    let gamma_valid = gap_gamma > GAP_VALID_TOL && invariant;
    if !invariant {
        warnings.push(format!(
            "ω is not invariant (φ residual {:.3e}); no decay certificate",
            blocks.phi_residual
        ));
    }

    let mut gap_lambda = None;
    let mut balance = None;
    let mut kernel = kernel_dim(&sym.values);
    if mode == GapMode::DetailedBalance {
        let dissipative = generator.dissipative_part();
        let report = detailed_balance_check(&dissipative, reference);
        let (skew, commutation) = hamiltonian_part_residuals(generator, reference);
        let tol = crate::dynamics::DETAILED_BALANCE_TOL * scale;
        if !report.passed || skew > tol || commutation > tol {
            return Err(Error::NotDetailedBalance {
                self_adjoint: report.self_adjoint_residual.max(skew),
                commutation: report.commutation_residual.max(commutation),
            });
        }
        let l = GnsOperator::from_generator(&dissipative, reference)?;
        let dis_blocks = block_decompose(&l);
        let eig = compressed_sym_spectrum(&dis_blocks.tilde)?;
        kernel = kernel_dim(&eig.values);
        gap_lambda = Some(eig.min().max(0.0));
        balance = Some(report);
    }
    if kernel > 0 {
        warnings.push(format!(
            "dissipator is not primitive: {kernel} stationary direction(s) on 1⊥, decay bound is vacuous"
        ));
    }

    let propagator = expm(&blocks.tilde);
    let contraction_margin = contraction_check(&propagator)?;

    Ok(SpectralReport {
        mode,
        gap_gamma,
        gamma_valid,
        gap_lambda,
        kernel_dim_on_complement: kernel,
        phi_residual: blocks.phi_residual,
        contraction_margin,
        detailed_balance: balance,
        warnings,
    })
}

/// Report for a one-step map: `γ = −ln σ_max(Λ̃)` per step.
pub fn map_gap(map: &CpMap, reference: &ReferenceState) -> Result<SpectralReport> {
    let op = GnsOperator::from_map(map, reference)?;
    let blocks = block_decompose(&op);
    let sigma_max = if blocks.tilde.is_empty() {
        0.0
    } else {
        spectral_norm(&blocks.tilde)?
    };
    let margin = 1.0 - sigma_max;
    let gap_gamma = if sigma_max > 0.0 { -sigma_max.ln() } else { f64::INFINITY };
    let invariant = blocks.phi_residual <= BLOCK_TOL;
    let gamma_valid = invariant && gap_gamma > GAP_VALID_TOL && gap_gamma.is_finite();
    let eig = compressed_sym_spectrum(&(&blocks.tilde - numkernel::identity(blocks.tilde.nrows())))?;
    let kernel = kernel_dim(&eig.values);
    let mut warnings = Vec::new();
    if !invariant {
        warnings.push(format!(
            "ω is not invariant (φ residual {:.3e}); no decay certificate",
            blocks.phi_residual
        ));
    }
    if !gamma_valid && invariant {
        warnings.push("map is not a strict contraction on 1⊥".into());
    }
    Ok(SpectralReport {
        mode: GapMode::Symmetrized,
        gap_gamma,
        gamma_valid,
        gap_lambda: None,
        kernel_dim_on_complement: kernel,
        phi_residual: blocks.phi_residual,
        contraction_margin: margin,
        detailed_balance: None,
        warnings,
    })
}

/// Report for the modular flow itself: an isometry, so no decay.
pub fn unitary_gap(reference: &ReferenceState) -> SpectralReport {
    SpectralReport {
        mode: GapMode::Symmetrized,
        gap_gamma: 0.0,
        gamma_valid: false,
        gap_lambda: None,
        kernel_dim_on_complement: reference.n() * reference.n() - 1,
        phi_residual: 0.0,
        contraction_margin: 0.0,
        detailed_balance: None,
        warnings: vec!["isometric dynamics: no decay certificate".into()],
    }
}

/// Asymptotic decay rate of `‖e^{tL̃}η‖` for a start vector `η ⊥ u`,
/// estimated by iterating the compressed propagator over a step `h` until
/// the per-step rate settles. Independent of any eigensolver.
pub fn decay_fit_rate(
    generator: &LindbladGenerator,
    reference: &ReferenceState,
    eta: &CMatrix,
    h: f64,
) -> Result<f64> {
    let op = GnsOperator::from_generator(generator, reference)?;
    let blocks = block_decompose(&op);
    let step = expm(&(&blocks.tilde * real(h)));
    let mut v = blocks.basis.adjoint() * reference.gns().embed(eta);
    let norm = v.norm();
    if norm == 0.0 {
        return Err(Error::Invalid("start vector has no component on 1⊥".into()));
    }
    v /= real(norm);
    let mut previous = f64::NAN;
    for _ in 0..100_000 {
        let w = &step * &v;
        let ratio = w.norm();
        if ratio == 0.0 {
            return Ok(f64::INFINITY);
        }
        let rate = -ratio.ln() / h;
        v = w / real(ratio);
        if (rate - previous).abs() <= 1e-14 * rate.abs().max(1e-300) {
            return Ok(rate);
        }
        previous = rate;
    }
    Ok(previous)
}
