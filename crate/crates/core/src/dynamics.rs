//! Heisenberg-picture dynamics on the total algebra.
//!
//! Three kinds are supported: the modular flow itself (reversible case), a
//! one-shot CP unital map iterated in whole steps, and Lindblad semigroups
//! `Λ_t = e^{tL}` with `L(X) = i[H, X] + Σ γ (V†XV − ½{V†V, X})`.
//! Davies generators are built from the Bohr-frequency components of
//! coupling operators and satisfy detailed balance with respect to `ω`.

use crate::algebra::ReferenceState;
use crate::error::{Error, Result};
use crate::numkernel::{
    self, expm, fro, herm_eig, identity, is_hermitian, left_superop, real, right_superop,
    sandwich_superop, spectral_norm, unvec, CMatrix, CVector, HermEig, C64, HERMITICITY_TOL, I,
};

/// Tolerance on `Σ k† k = 1`.
pub const UNITAL_TOL: f64 = 1e-10;
/// Tolerance on `ω∘Λ = ω`.
pub const INVARIANCE_TOL: f64 = 1e-10;
/// Relative tolerance for the detailed-balance residuals.
pub const DETAILED_BALANCE_TOL: f64 = 1e-9;
/// Relative tolerance on the KMS relation of rate families.
pub const KMS_RATE_TOL: f64 = 1e-12;
/// Relative Bohr-frequency binning tolerance.
pub const BINNING_TOL: f64 = 1e-9;
/// Gaps between `tol` and `AMBIGUITY_FACTOR·tol` cannot be binned reliably.
const AMBIGUITY_FACTOR: f64 = 100.0;

/// Completely positive map in the Heisenberg picture, `Λ(b) = Σ k_j† b k_j`.
#[derive(Clone, Debug)]
pub struct CpMap {
    kraus: Vec<CMatrix>,
    superop: CMatrix,
    unital: bool,
    omega_invariant: bool,
}

impl CpMap {
    /// Build from Kraus elements, which must resolve the identity.
    pub fn from_kraus(kraus: Vec<CMatrix>, reference: &ReferenceState) -> Result<Self> {
        let n = reference.n();
        if kraus.is_empty() {
            return Err(Error::Invalid("map without Kraus elements".into()));
        }
        for k in &kraus {
            reference.shape().check_observable(k)?;
        }
        let sum = kraus
            .iter()
            .fold(numkernel::zeros(n), |acc, k| acc + k.adjoint() * k);
        let unital_residual = fro(&(sum - identity(n)));
        if unital_residual > UNITAL_TOL {
            return Err(Error::InvariantViolation(vec![format!(
                "map is not identity preserving (residual {unital_residual:.3e})"
            )]));
        }
        let superop = kraus
            .iter()
            .fold(numkernel::zeros(n * n), |acc, k| {
                acc + sandwich_superop(&k.adjoint(), k)
            });
        let mut map = Self {
            kraus,
            superop,
            unital: true,
            omega_invariant: false,
        };
        map.omega_invariant = map.invariance_residual(reference) <= INVARIANCE_TOL;
        Ok(map)
    }

    /// Build from a Heisenberg superoperator matrix; Kraus elements are read
    /// off the Choi matrix, which must be positive semidefinite.
    pub fn from_superop(superop: CMatrix, reference: &ReferenceState) -> Result<Self> {
        let n = reference.n();
        if superop.nrows() != n * n || superop.ncols() != n * n {
            return Err(Error::DimensionMismatch(format!(
                "superoperator is {}x{}, expected {}x{}",
                superop.nrows(),
                superop.ncols(),
                n * n,
                n * n
            )));
        }
        let choi = choi_matrix(&superop, n);
        let eig = herm_eig(&choi, 1e-9)?;
        let scale = eig.max().abs().max(1.0);
        if eig.min() < -1e-9 * scale {
            return Err(Error::InvariantViolation(vec![format!(
                "superoperator is not completely positive (Choi eigenvalue {:.3e})",
                eig.min()
            )]));
        }
        let mut kraus = Vec::new();
        for (m, &mu) in eig.values.iter().enumerate().rev() {
            if mu <= 1e-13 * scale {
                continue;
            }
            let w = eig.vectors.column(m);
            // (k†)[a, i] = √μ w[i·n + a]
            let k_dag = CMatrix::from_fn(n, n, |a, i| w[i * n + a] * mu.sqrt());
            kraus.push(k_dag.adjoint());
        }
        Self::from_kraus(kraus, reference)
    }

    pub fn kraus(&self) -> &[CMatrix] {
        &self.kraus
    }

    /// Column-major Heisenberg superoperator matrix.
    pub fn superop(&self) -> &CMatrix {
        &self.superop
    }

    pub fn is_unital(&self) -> bool {
        self.unital
    }

    pub fn is_omega_invariant(&self) -> bool {
        self.omega_invariant
    }

    pub fn apply(&self, x: &CMatrix) -> CMatrix {
        self.kraus
            .iter()
            .fold(numkernel::zeros(x.nrows()), |acc, k| acc + k.adjoint() * x * k)
    }

    /// Schrödinger-picture action `ρ ↦ Σ k ρ k†`.
    pub fn apply_dual(&self, rho: &CMatrix) -> CMatrix {
        self.kraus
            .iter()
            .fold(numkernel::zeros(rho.nrows()), |acc, k| acc + k * rho * k.adjoint())
    }

    /// `‖Σ k ω k† − ω‖_F`.
    pub fn invariance_residual(&self, reference: &ReferenceState) -> f64 {
        fro(&(self.apply_dual(reference.density()) - reference.density()))
    }
}

/// Choi matrix `Σ_ij E_ij ⊗ Λ(E_ij)` of a column-major superoperator.
pub fn choi_matrix(superop: &CMatrix, n: usize) -> CMatrix {
    let mut choi = numkernel::zeros(n * n);
    for i in 0..n {
        for j in 0..n {
            let image = superop.column(i + n * j);
            for a in 0..n {
                for b in 0..n {
                    choi[(i * n + a, j * n + b)] = image[a + n * b];
                }
            }
        }
    }
    choi
}

/// Jump operator with its rate.
#[derive(Clone, Debug)]
pub struct Jump {
    pub operator: CMatrix,
    pub rate: f64,
}

impl Jump {
    pub fn new(operator: CMatrix, rate: f64) -> Self {
        Self { operator, rate }
    }
}

/// Heisenberg Lindblad generator `L(X) = i[H, X] + Σ γ (V†XV − ½{V†V, X})`.
#[derive(Clone, Debug)]
pub struct LindbladGenerator {
    hamiltonian: CMatrix,
    jumps: Vec<Jump>,
}

impl LindbladGenerator {
    pub fn new(hamiltonian: CMatrix, jumps: Vec<Jump>) -> Result<Self> {
        let n = hamiltonian.nrows();
        if !hamiltonian.is_square() {
            return Err(Error::DimensionMismatch("non-square Hamiltonian part".into()));
        }
        if !is_hermitian(&hamiltonian, HERMITICITY_TOL) {
            return Err(Error::NotHermitian {
                residual: numkernel::hermiticity_residual(&hamiltonian),
                tol: HERMITICITY_TOL,
            });
        }
        for jump in &jumps {
            if jump.operator.nrows() != n || jump.operator.ncols() != n {
                return Err(Error::DimensionMismatch(format!(
                    "jump operator is {}x{}, Hamiltonian is {n}x{n}",
                    jump.operator.nrows(),
                    jump.operator.ncols()
                )));
            }
            if !(jump.rate >= 0.0 && jump.rate.is_finite()) {
                return Err(Error::Invalid(format!("jump rate {} is negative", jump.rate)));
            }
        }
        Ok(Self { hamiltonian, jumps })
    }

    /// Purely dissipative generator.
    pub fn dissipator(n: usize, jumps: Vec<Jump>) -> Result<Self> {
        Self::new(numkernel::zeros(n), jumps)
    }

    /// Depolarizing generator on the encoded factor,
    /// `L(X) = γ (1_Q/dQ ⊗ tr_Q(X) − X)`, with jumps `E_ij ⊗ 1` at rate `γ/dQ`.
    pub fn depolarizing_q(dq: usize, db: usize, gamma: f64) -> Result<Self> {
        let mut jumps = Vec::with_capacity(dq * dq);
        for i in 0..dq {
            for j in 0..dq {
                let v = numkernel::kron(&numkernel::matrix_unit(dq, i, j), &identity(db));
                jumps.push(Jump::new(v, gamma / dq as f64));
            }
        }
        Self::dissipator(dq * db, jumps)
    }

    /// Thermalization of the syndrome factor towards `ω_B`,
    /// `L(X) = γ (1_Q ⊗ ω_B-average − X)` on `1 ⊗ ℬ`, with jumps
    /// `1 ⊗ √p_k |e_k⟩⟨j|` from the eigendecomposition of `ω_B`.
    pub fn thermalize_b(reference: &ReferenceState, gamma: f64) -> Result<Self> {
        let shape = reference.shape();
        let omega_b = reference.restrict_to_b()?;
        let eig = herm_eig(&omega_b, HERMITICITY_TOL)?;
        let mut jumps = Vec::new();
        for k in 0..shape.db {
            let e_k = eig.vectors.column(k).into_owned();
            for j in 0..shape.db {
                let dy = numkernel::dyad(&e_k, &numkernel::basis_vector(shape.db, j))
                    * real(eig.values[k].max(0.0).sqrt());
                jumps.push(Jump::new(numkernel::kron(&identity(shape.dq), &dy), gamma));
            }
        }
        Self::dissipator(shape.n(), jumps)
    }

    pub fn dim(&self) -> usize {
        self.hamiltonian.nrows()
    }

    pub fn hamiltonian(&self) -> &CMatrix {
        &self.hamiltonian
    }

    pub fn jumps(&self) -> &[Jump] {
        &self.jumps
    }

    /// Same jumps with the Hamiltonian part removed.
    pub fn dissipative_part(&self) -> Self {
        Self {
            hamiltonian: numkernel::zeros(self.dim()),
            jumps: self.jumps.clone(),
        }
    }

    pub fn with_hamiltonian(&self, hamiltonian: CMatrix) -> Result<Self> {
        Self::new(hamiltonian, self.jumps.clone())
    }

    pub fn apply(&self, x: &CMatrix) -> CMatrix {
        let mut out = numkernel::commutator(&self.hamiltonian, x) * I;
        for jump in &self.jumps {
            let v = &jump.operator;
            let vdv = v.adjoint() * v;
            let term = v.adjoint() * x * v - (&vdv * x + x * &vdv) * real(0.5);
            out += term * real(jump.rate);
        }
        out
    }

    /// Column-major Heisenberg superoperator matrix.
    pub fn superop(&self) -> CMatrix {
        let h = &self.hamiltonian;
        let mut s = (left_superop(h) - right_superop(h)) * I;
        for jump in &self.jumps {
            let v = &jump.operator;
            let vdv = v.adjoint() * v;
            let d = sandwich_superop(&v.adjoint(), v)
                - (left_superop(&vdv) + right_superop(&vdv)) * real(0.5);
            s += d * real(jump.rate);
        }
        s
    }

    /// `‖L(1)‖_F`.
    pub fn unit_residual(&self) -> f64 {
        fro(&self.apply(&identity(self.dim())))
    }

    /// `‖ω∘L‖`, i.e. the Frobenius norm of the Schrödinger dual applied to `ω`.
    pub fn invariance_residual(&self, reference: &ReferenceState) -> f64 {
        let dual = self.superop().adjoint();
        let omega = reference.density();
        fro(&unvec(&(dual * numkernel::vec(omega)), omega.nrows()))
    }

    /// Most negative Choi eigenvalue of `e^{tL}`, relative to the largest.
    pub fn cp_defect(&self, t: f64) -> Result<f64> {
        let n = self.dim();
        let choi = choi_matrix(&expm(&(self.superop() * real(t))), n);
        let eig = herm_eig(&choi, 1e-8)?;
        Ok((-eig.min()).max(0.0) / eig.max().abs().max(1.0))
    }
}

/// Bath rate family satisfying `γ(−ν) = e^{−ν} γ(ν)`.
pub trait KmsRate {
    fn rate(&self, nu: f64) -> f64;
}

/// `γ(ν) = g / (1 + e^{−ν})`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FermiRate {
    pub g: f64,
}

impl KmsRate for FermiRate {
    fn rate(&self, nu: f64) -> f64 {
        // stable for large |ν|
        if nu >= 0.0 {
            self.g / (1.0 + (-nu).exp())
        } else {
            self.g * nu.exp() / (1.0 + nu.exp())
        }
    }
}

impl<F: Fn(f64) -> f64> KmsRate for F {
    fn rate(&self, nu: f64) -> f64 {
        self(nu)
    }
}

/// Cluster sorted values; gaps at most `tol` merge, gaps in
/// `(tol, AMBIGUITY_FACTOR·tol]` are rejected.
fn cluster_sorted(values: &[f64], tol: f64) -> Result<Vec<Vec<usize>>> {
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for (k, w) in values.iter().enumerate() {
        match clusters.last_mut() {
            Some(last) if w - values[*last.last().unwrap()] <= tol => last.push(k),
            Some(last) => {
                let gap = w - values[*last.last().unwrap()];
                if gap <= AMBIGUITY_FACTOR * tol {
                    return Err(Error::DegenerateBinning { gap, tol });
                }
                clusters.push(vec![k]);
            }
            None => clusters.push(vec![k]),
        }
    }
    Ok(clusters)
}

/// A Bohr-frequency component `S(ν) = Σ_{ε′−ε=ν} P_ε S P_ε′`.
#[derive(Clone, Debug)]
pub struct BohrComponent {
    pub frequency: f64,
    pub operator: CMatrix,
}

/// Eigenprojections of `K` grouped into energy levels.
#[derive(Clone, Debug)]
pub struct EnergyLevels {
    pub energies: Vec<f64>,
    pub projectors: Vec<CMatrix>,
}

pub fn energy_levels(reference: &ReferenceState) -> Result<EnergyLevels> {
    let eig: &HermEig = reference.modular_spectrum();
    let norm = eig.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let tol = BINNING_TOL * norm;
    let clusters = cluster_sorted(&eig.values, tol)?;
    let n = reference.n();
    let mut energies = Vec::with_capacity(clusters.len());
    let mut projectors = Vec::with_capacity(clusters.len());
    for members in clusters {
        let mean = members.iter().map(|&k| eig.values[k]).sum::<f64>() / members.len() as f64;
        let p = members.iter().fold(numkernel::zeros(n), |acc, &k| {
            let v: CVector = eig.vectors.column(k).into_owned();
            acc + numkernel::projector(&v)
        });
        energies.push(mean);
        projectors.push(p);
    }
    Ok(EnergyLevels {
        energies,
        projectors,
    })
}

/// Bohr-frequency decomposition of `coupling` over the modular spectrum.
/// Components come in pairs `±ν` with the negative one computed as the
/// exact negation of the positive frequency; zero components are dropped.
pub fn bohr_components(coupling: &CMatrix, levels: &EnergyLevels) -> Result<Vec<BohrComponent>> {
    let m = levels.energies.len();
    let n = coupling.nrows();
    let norm = levels.energies.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let tol = BINNING_TOL * norm;

    // positive differences ε_b − ε_a, b > a
    let mut diffs: Vec<(f64, usize, usize)> = Vec::new();
    for a in 0..m {
        for b in a + 1..m {
            diffs.push((levels.energies[b] - levels.energies[a], a, b));
        }
    }
    diffs.sort_by(|x, y| x.0.total_cmp(&y.0));
    let values: Vec<f64> = diffs.iter().map(|d| d.0).collect();
    let bins = cluster_sorted(&values, tol)?;

    let scale = fro(coupling).max(f64::MIN_POSITIVE);
    let mut out = Vec::new();
    let zero = (0..m).fold(numkernel::zeros(n), |acc, a| {
        acc + &levels.projectors[a] * coupling * &levels.projectors[a]
    });
    if fro(&zero) > 1e-14 * scale {
        out.push(BohrComponent {
            frequency: 0.0,
            operator: zero,
        });
    }
    for bin in bins {
        let nu = bin.iter().map(|&k| values[k]).sum::<f64>() / bin.len() as f64;
        let mut lowering = numkernel::zeros(n);
        let mut raising = numkernel::zeros(n);
        for &k in &bin {
            let (_, a, b) = diffs[k];
            lowering += &levels.projectors[a] * coupling * &levels.projectors[b];
            raising += &levels.projectors[b] * coupling * &levels.projectors[a];
        }
        if fro(&lowering) > 1e-14 * scale {
            out.push(BohrComponent {
                frequency: nu,
                operator: lowering,
            });
        }
        if fro(&raising) > 1e-14 * scale {
            out.push(BohrComponent {
                frequency: -nu,
                operator: raising,
            });
        }
    }
    Ok(out)
}

/// Davies dissipator `L_dis` for Hermitian couplings, each with its own KMS
/// rate family. The result has no Hamiltonian part; the full Davies dynamics
/// is `L_dis` plus the modular Hamiltonian (see [`DynamicsSpec::davies`]).
pub fn davies_generator<R: KmsRate>(
    reference: &ReferenceState,
    couplings: &[(CMatrix, R)],
) -> Result<LindbladGenerator> {
    let levels = energy_levels(reference)?;
    let mut jumps = Vec::new();
    for (coupling, rates) in couplings {
        reference.shape().check_observable(coupling)?;
        if !is_hermitian(coupling, HERMITICITY_TOL) {
            return Err(Error::NotHermitian {
                residual: numkernel::hermiticity_residual(coupling),
                tol: HERMITICITY_TOL,
            });
        }
        for component in bohr_components(coupling, &levels)? {
            let nu = component.frequency;
            let (up, down) = (rates.rate(nu), rates.rate(-nu));
            let residual = (down - (-nu).exp() * up).abs();
            if residual > KMS_RATE_TOL * up.abs().max(down.abs()).max(f64::MIN_POSITIVE) {
                return Err(Error::KmsViolation { nu, residual });
            }
            if up < 0.0 {
                return Err(Error::Invalid(format!("negative rate {up} at ν={nu}")));
            }
            jumps.push(Jump::new(component.operator, up));
        }
    }
    LindbladGenerator::dissipator(reference.n(), jumps)
}

/// Residuals of the detailed-balance condition for a candidate `L_dis`.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DetailedBalanceReport {
    /// `‖[L̂_dis, δ̂_K]‖_F` in the GNS representation.
    pub commutation_residual: f64,
    /// `‖L̂_dis − L̂_dis†‖_F` in the GNS representation.
    pub self_adjoint_residual: f64,
    /// `‖L̂_dis‖_F`.
    pub generator_norm: f64,
    pub commutes: bool,
    pub self_adjoint: bool,
    pub passed: bool,
}

/// GNS matrix of the modular derivation `δ_K(X) = i[K, X]`.
pub fn modular_derivation_gns(reference: &ReferenceState) -> CMatrix {
    let k = reference.modular_hamiltonian();
    let superop = (left_superop(k) - right_superop(k)) * I;
    reference.gns().represent(&superop)
}

pub fn detailed_balance_check(
    generator: &LindbladGenerator,
    reference: &ReferenceState,
) -> DetailedBalanceReport {
    let l = reference.gns().represent(&generator.superop());
    let delta = modular_derivation_gns(reference);
    let commutation_residual = fro(&(&l * &delta - &delta * &l));
    let self_adjoint_residual = fro(&(&l - l.adjoint()));
    let generator_norm = fro(&l);
    let tol = DETAILED_BALANCE_TOL * generator_norm;
    let commutes = commutation_residual <= tol;
    let self_adjoint = self_adjoint_residual <= tol;
    DetailedBalanceReport {
        commutation_residual,
        self_adjoint_residual,
        generator_norm,
        commutes,
        self_adjoint,
        passed: commutes && self_adjoint,
    }
}

/// Dynamics of the total system in the Heisenberg picture.
#[derive(Clone, Debug)]
pub enum DynamicsSpec {
    /// The modular flow `τ_t`.
    Unitary,
    /// A one-shot map, evolved in whole steps.
    Map(CpMap),
    /// A Lindblad semigroup.
    Semigroup(LindbladGenerator),
}

impl DynamicsSpec {
    /// Davies semigroup `δ_K + L_dis`.
    pub fn davies<R: KmsRate>(reference: &ReferenceState, couplings: &[(CMatrix, R)]) -> Result<Self> {
        let dissipator = davies_generator(reference, couplings)?;
        Ok(Self::Semigroup(
            dissipator.with_hamiltonian(reference.modular_hamiltonian().clone())?,
        ))
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Self::Unitary => "unitary",
            Self::Map(_) => "map",
            Self::Semigroup(_) => "semigroup",
        }
    }

    pub fn generator(&self) -> Option<&LindbladGenerator> {
        match self {
            Self::Semigroup(g) => Some(g),
            _ => None,
        }
    }

    /// Prepare cached data for repeated evolution.
    pub fn evolution<'a>(&'a self, reference: &'a ReferenceState) -> Result<Evolution<'a>> {
        Evolution::new(self, reference)
    }
}

/// Convenience wrapper around [`Evolution::evolve`].
pub fn evolve(spec: &DynamicsSpec, reference: &ReferenceState, t: f64, x: &CMatrix) -> Result<CMatrix> {
    spec.evolution(reference)?.evolve(t, x)
}

#[derive(Clone, Debug)]
enum SemigroupRoute {
    /// GNS matrix is normal with commuting Hermitian and skew parts:
    /// `e^{tĜ} = e^{tS} e^{itH_a}` with both parts diagonalized once.
    Spectral { sym: HermEig, skew: Option<HermEig> },
    Taylor,
}

/// Evolution bound to a reference state, with per-spec caches.
#[derive(Clone, Debug)]
pub struct Evolution<'a> {
    spec: &'a DynamicsSpec,
    reference: &'a ReferenceState,
    route: Option<(CMatrix, SemigroupRoute)>,
}

impl<'a> Evolution<'a> {
    pub fn new(spec: &'a DynamicsSpec, reference: &'a ReferenceState) -> Result<Self> {
        let n = reference.n();
        let route = match spec {
            DynamicsSpec::Unitary => None,
            DynamicsSpec::Map(map) => {
                if map.superop().nrows() != n * n {
                    return Err(Error::DimensionMismatch("map and reference sizes differ".into()));
                }
                None
            }
            DynamicsSpec::Semigroup(generator) => {
                if generator.dim() != n {
                    return Err(Error::DimensionMismatch(
                        "generator and reference sizes differ".into(),
                    ));
                }
                let superop = generator.superop();
                let route = semigroup_route(&reference.gns().represent(&superop))?;
                Some((superop, route))
            }
        };
        Ok(Self {
            spec,
            reference,
            route,
        })
    }

    pub fn spec(&self) -> &DynamicsSpec {
        self.spec
    }

    pub fn reference(&self) -> &ReferenceState {
        self.reference
    }

    /// Whether the spectral (Hermitian) route is used for the semigroup.
    pub fn uses_spectral_route(&self) -> bool {
        matches!(self.route, Some((_, SemigroupRoute::Spectral { .. })))
    }

    fn steps(&self, t: f64) -> Result<usize> {
        if t < 0.0 {
            return Err(Error::NegativeTime(t));
        }
        let k = t.round();
        if (t - k).abs() > 1e-9 {
            return Err(Error::NonIntegerStep(t));
        }
        Ok(k as usize)
    }

    fn check_semigroup_time(t: f64) -> Result<()> {
        if t < 0.0 || !t.is_finite() {
            return Err(Error::NegativeTime(t));
        }
        Ok(())
    }

    /// `Λ_t(X)`.
    pub fn evolve(&self, t: f64, x: &CMatrix) -> Result<CMatrix> {
        self.reference.shape().check_observable(x)?;
        match (self.spec, &self.route) {
            (DynamicsSpec::Unitary, _) => Ok(self.reference.modular_flow_real(x, t)),
            (DynamicsSpec::Map(map), _) => {
                let k = self.steps(t)?;
                Ok((0..k).fold(x.clone(), |acc, _| map.apply(&acc)))
            }
            (DynamicsSpec::Semigroup(_), Some((superop, route))) => {
                Self::check_semigroup_time(t)?;
                match route {
                    SemigroupRoute::Spectral { sym, skew } => {
                        let gns = self.reference.gns();
                        let mut v = gns.embed(x);
                        if let Some(skew) = skew {
                            v = apply_eig(skew, &v, |mu| C64::new(0.0, t * mu).exp());
                        }
                        v = apply_eig(sym, &v, |lambda| real((t * lambda).exp()));
                        Ok(gns.unembed(&v))
                    }
                    SemigroupRoute::Taylor => Ok(numkernel::apply_superop(
                        &expm(&(superop * real(t))),
                        x,
                    )),
                }
            }
            (DynamicsSpec::Semigroup(_), None) => unreachable!("semigroup route is cached"),
        }
    }

    /// Column-major Heisenberg superoperator matrix of `Λ_t`.
    pub fn superop(&self, t: f64) -> Result<CMatrix> {
        let n = self.reference.n();
        match (self.spec, &self.route) {
            (DynamicsSpec::Unitary, _) => {
                let k = self.reference.modular_spectrum();
                let forward = k.map_complex(|e| C64::new(0.0, t * e).exp());
                let backward = k.map_complex(|e| C64::new(0.0, -t * e).exp());
                Ok(sandwich_superop(&forward, &backward))
            }
            (DynamicsSpec::Map(map), _) => {
                let k = self.steps(t)?;
                Ok((0..k).fold(identity(n * n), |acc, _| map.superop() * acc))
            }
            (DynamicsSpec::Semigroup(_), Some((superop, route))) => {
                Self::check_semigroup_time(t)?;
                match route {
                    SemigroupRoute::Spectral { sym, skew } => {
                        let mut m = sym.map(|lambda| (t * lambda).exp());
                        if let Some(skew) = skew {
                            m *= skew.map_complex(|mu| C64::new(0.0, t * mu).exp());
                        }
                        Ok(self.reference.gns().unrepresent(&m))
                    }
                    SemigroupRoute::Taylor => Ok(expm(&(superop * real(t)))),
                }
            }
            (DynamicsSpec::Semigroup(_), None) => unreachable!("semigroup route is cached"),
        }
    }

    /// GNS matrix of `Λ_t`.
    pub fn gns_matrix(&self, t: f64) -> Result<CMatrix> {
        Ok(self.reference.gns().represent(&self.superop(t)?))
    }

    /// Schrödinger-picture dual `Λ*_t(ρ)`, defined by `tr(Λ*_t(ρ) X) = tr(ρ Λ_t(X))`.
    pub fn evolve_dual(&self, t: f64, rho: &CMatrix) -> Result<CMatrix> {
        self.reference.shape().check_observable(rho)?;
        match self.spec {
            DynamicsSpec::Unitary => Ok(self.reference.modular_flow_real(rho, -t)),
            DynamicsSpec::Map(map) => {
                let k = self.steps(t)?;
                Ok((0..k).fold(rho.clone(), |acc, _| map.apply_dual(&acc)))
            }
            DynamicsSpec::Semigroup(_) => {
                let s = self.superop(t)?;
                Ok(numkernel::apply_superop(&s.adjoint(), rho))
            }
        }
    }
}

fn apply_eig(eig: &HermEig, v: &CVector, f: impl Fn(f64) -> C64) -> CVector {
    let mut coeffs = eig.vectors.adjoint() * v;
    for (k, c) in coeffs.iter_mut().enumerate() {
        *c *= f(eig.values[k]);
    }
    &eig.vectors * coeffs
}

fn semigroup_route(gns: &CMatrix) -> Result<SemigroupRoute> {
    let norm = fro(gns);
    if norm == 0.0 {
        return Ok(SemigroupRoute::Spectral {
            sym: herm_eig(gns, HERMITICITY_TOL)?,
            skew: None,
        });
    }
    let sym = (gns + gns.adjoint()) * real(0.5);
    let skew = (gns - gns.adjoint()) * real(0.5);
    let skew_norm = fro(&skew);
    if skew_norm <= 1e-14 * norm {
        return Ok(SemigroupRoute::Spectral {
            sym: herm_eig(&sym, HERMITICITY_TOL)?,
            skew: None,
        });
    }
    if fro(&(&sym * &skew - &skew * &sym)) <= 1e-12 * norm * norm {
        // skew = i·H_a
        let h_a = &skew * C64::new(0.0, -1.0);
        return Ok(SemigroupRoute::Spectral {
            sym: herm_eig(&sym, HERMITICITY_TOL)?,
            skew: Some(herm_eig(&h_a, HERMITICITY_TOL)?),
        });
    }
    Ok(SemigroupRoute::Taylor)
}

/// `e^{tL}(X)` by Taylor scaling-and-squaring of the full superoperator.
pub fn evolve_direct(generator: &LindbladGenerator, t: f64, x: &CMatrix) -> Result<CMatrix> {
    if t < 0.0 {
        return Err(Error::NegativeTime(t));
    }
    Ok(numkernel::apply_superop(&expm(&(generator.superop() * real(t))), x))
}

/// `e^{itH} (e^{tD} X) e^{−itH}` with `H` the Hamiltonian part and `D` the
/// dissipative part, evaluated separately. Equals `e^{tL}(X)` whenever the two
/// parts commute, which is the case for Davies generators with `H = K`.
pub fn evolve_factorized(
    generator: &LindbladGenerator,
    reference: &ReferenceState,
    t: f64,
    x: &CMatrix,
) -> Result<CMatrix> {
    let dissipative = DynamicsSpec::Semigroup(generator.dissipative_part());
    let damped = dissipative.evolution(reference)?.evolve(t, x)?;
    let h = herm_eig(generator.hamiltonian(), HERMITICITY_TOL)?;
    let forward = h.map_complex(|e| C64::new(0.0, t * e).exp());
    Ok(&forward * damped * forward.adjoint())
}

/// Reduced Schrödinger dynamics `Γ*_t(σ) = tr_B(Λ*_t(Ψ*(σ)))` with the
/// assignment map `Ψ*` of the preparation rule.
pub fn reduced_dynamics(
    evolution: &Evolution<'_>,
    prep: &crate::prep::Preparation,
    t: f64,
    sigma: &CMatrix,
) -> Result<CMatrix> {
    let reference = evolution.reference();
    let assigned = prep.assign(sigma, reference)?;
    let evolved = evolution.evolve_dual(t, &assigned)?;
    let shape = reference.shape();
    numkernel::partial_trace_b(&evolved, shape.dq, shape.db)
}

/// Largest `‖Λ(X)‖_ω / ‖X‖_ω` excess over sampled observables; used by checks.
pub fn gns_contraction_excess(
    evolution: &Evolution<'_>,
    t: f64,
    samples: &[CMatrix],
) -> Result<f64> {
    let reference = evolution.reference();
    let mut worst = f64::NEG_INFINITY;
    for x in samples {
        let excess = reference.gns_norm(&evolution.evolve(t, x)?) - reference.gns_norm(x);
        worst = worst.max(excess);
    }
    Ok(worst)
}

/// Largest singular value of `Λ_t` on the GNS space.
pub fn gns_operator_norm(evolution: &Evolution<'_>, t: f64) -> Result<f64> {
    spectral_norm(&evolution.gns_matrix(t)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::AlgebraShape;
    use crate::numkernel::{basis_vector, kron, pauli_x, pauli_z, projector, trace};
    use crate::prep::{replacement_operation, single_perturbation, QubitTarget};
    use crate::random;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn qubit_depolarizing(gamma: f64) -> (ReferenceState, DynamicsSpec) {
        let r = ReferenceState::tracial(AlgebraShape::new(2, 1).unwrap());
        let l = LindbladGenerator::depolarizing_q(2, 1, gamma).unwrap();
        (r, DynamicsSpec::Semigroup(l))
    }

    fn davies_two_qubit() -> (ReferenceState, LindbladGenerator) {
        let k = kron(&pauli_z(), &identity(2)) + kron(&identity(2), &pauli_z()) * real(0.5);
        let r = ReferenceState::new(AlgebraShape::new(2, 2).unwrap(), k).unwrap();
        let couplings = vec![
            (kron(&pauli_x(), &identity(2)), FermiRate { g: 1.0 }),
            (kron(&identity(2), &pauli_x()), FermiRate { g: 0.7 }),
        ];
        let l = davies_generator(&r, &couplings).unwrap();
        (r, l)
    }

    #[test]
    fn depolarizing_matches_closed_form() {
        let (r, spec) = qubit_depolarizing(1.0);
        let p = projector(&basis_vector(2, 0));
        let evolved = evolve(&spec, &r, 1.0, &p).unwrap();
        let e = (-1.0f64).exp();
        let expected = &p * real(e) + identity(2) * real((1.0 - e) / 2.0);
        assert!(fro(&(evolved - expected)) < 1e-12);
    }

    #[test]
    fn depolarizing_generator_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let l = LindbladGenerator::depolarizing_q(3, 1, 0.8).unwrap();
        let x = random::matrix(3, 3, &mut rng);
        let expected = identity(3) * (trace(&x) / real(3.0) * 0.8) - &x * real(0.8);
        assert!(fro(&(l.apply(&x) - expected)) < 1e-12);
        assert!(fro(&(numkernel::apply_superop(&l.superop(), &x) - l.apply(&x))) < 1e-12);
    }

    #[test]
    fn evolve_identity_and_unitality() {
        let (r, l) = davies_two_qubit();
        let spec = DynamicsSpec::Semigroup(l);
        let ev = spec.evolution(&r).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = random::matrix(4, 4, &mut rng);
        assert!(fro(&(ev.evolve(0.0, &x).unwrap() - &x)) < 1e-12);
        for t in [0.3, 1.0, 7.0] {
            assert!(fro(&(ev.evolve(t, &identity(4)).unwrap() - identity(4))) < 1e-11);
        }
        assert!(matches!(ev.evolve(-1.0, &x), Err(Error::NegativeTime(_))));
    }

    #[test]
    fn semigroup_law() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let shape = AlgebraShape::new(2, 2).unwrap();
        let r = ReferenceState::new(shape, random::hermitian(4, 1.0, &mut rng)).unwrap();
        // a generic (not ω-invariant) generator takes the Taylor route
        let jumps = (0..3)
            .map(|_| Jump::new(random::matrix(4, 4, &mut rng), 0.3))
            .collect();
        let l = LindbladGenerator::new(random::hermitian(4, 1.0, &mut rng), jumps).unwrap();
        let spec = DynamicsSpec::Semigroup(l);
        let ev = spec.evolution(&r).unwrap();
        assert!(!ev.uses_spectral_route());
        let x = random::matrix(4, 4, &mut rng);
        let (t, s) = (0.7, 1.9);
        let lhs = ev.evolve(t + s, &x).unwrap();
        let rhs = ev.evolve(t, &ev.evolve(s, &x).unwrap()).unwrap();
        assert!(fro(&(lhs - rhs)) < 1e-9);
        assert!(fro(&(ev.evolve(2.0, &identity(4)).unwrap() - identity(4))) < 1e-11);
    }

    #[test]
    fn unitary_and_map_kinds() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let shape = AlgebraShape::new(2, 2).unwrap();
        let r = ReferenceState::new(shape, random::hermitian(4, 1.0, &mut rng)).unwrap();
        let x = random::matrix(4, 4, &mut rng);
        let unitary = DynamicsSpec::Unitary;
        let ev = unitary.evolution(&r).unwrap();
        for t in [0.1, 1.0, 10.0] {
            assert_abs_diff_eq!(
                r.gns_norm(&ev.evolve(t, &x).unwrap()),
                r.gns_norm(&x),
                epsilon = 1e-10
            );
            let via = numkernel::apply_superop(&ev.superop(t).unwrap(), &x);
            assert!(fro(&(via - ev.evolve(t, &x).unwrap())) < 1e-11);
        }

        let (_, l) = davies_two_qubit();
        let k = kron(&pauli_z(), &identity(2)) + kron(&identity(2), &pauli_z()) * real(0.5);
        let r2 = ReferenceState::new(shape, k).unwrap();
        let step = expm(&(l.superop() * real(0.4)));
        let map = CpMap::from_superop(step.clone(), &r2).unwrap();
        assert!(map.is_omega_invariant());
        assert!(fro(&(map.superop() - &step)) < 1e-10);
        let spec = DynamicsSpec::Map(map);
        let ev = spec.evolution(&r2).unwrap();
        let x2 = ev.evolve(2.0, &x).unwrap();
        let y = ev.evolve(1.0, &ev.evolve(1.0, &x).unwrap()).unwrap();
        assert!(fro(&(x2 - y)) < 1e-12);
        assert!(matches!(ev.evolve(0.5, &x), Err(Error::NonIntegerStep(_))));
    }

    #[test]
    fn cp_map_rejects_non_unital_kraus() {
        let r = ReferenceState::tracial(AlgebraShape::new(2, 1).unwrap());
        assert!(CpMap::from_kraus(vec![identity(2) * real(0.9)], &r).is_err());
        let transpose = CMatrix::from_fn(4, 4, |row, col| {
            // superoperator of X ↦ X^T: vec(X^T)[i + 2j] = X[j, i]
            let (i, j) = (row % 2, row / 2);
            if col == j + 2 * i { real(1.0) } else { real(0.0) }
        });
        assert!(CpMap::from_superop(transpose, &r).is_err());
    }

    #[test]
    fn davies_single_qubit_components() {
        let nu = 1.3;
        let r = ReferenceState::new(AlgebraShape::new(2, 1).unwrap(), pauli_z() * real(nu / 2.0))
            .unwrap();
        let rates = FermiRate { g: 1.0 };
        let l = davies_generator(&r, &[(pauli_x(), rates)]).unwrap();
        assert_eq!(l.jumps().len(), 2);
        // |0⟩ carries energy +ν/2; lowering |1⟩⟨0| at rate γ(ν)
        let sigma_minus = numkernel::from_real_rows(2, 2, &[0.0, 0.0, 1.0, 0.0]);
        let lowering = l
            .jumps()
            .iter()
            .find(|j| fro(&(&j.operator - &sigma_minus)) < 1e-12)
            .expect("σ− component");
        let raising = l
            .jumps()
            .iter()
            .find(|j| fro(&(&j.operator - sigma_minus.adjoint())) < 1e-12)
            .expect("σ+ component");
        assert_abs_diff_eq!(lowering.rate, rates.rate(nu), epsilon = 1e-14);
        assert_abs_diff_eq!(raising.rate / lowering.rate, (-nu).exp(), epsilon = 1e-12);
    }

    #[test]
    fn davies_commuting_coupling_is_dephasing() {
        let r = ReferenceState::new(AlgebraShape::new(2, 1).unwrap(), pauli_z()).unwrap();
        let l = davies_generator(&r, &[(pauli_z(), FermiRate { g: 2.0 })]).unwrap();
        assert_eq!(l.jumps().len(), 1);
        assert!(fro(&(&l.jumps()[0].operator - pauli_z())) < 1e-12);
        assert_abs_diff_eq!(l.jumps()[0].rate, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn davies_two_qubit_is_invariant_and_balanced() {
        let k = kron(&pauli_z(), &identity(2)) + kron(&identity(2), &pauli_z()) * real(0.5);
        let r = ReferenceState::new(AlgebraShape::new(2, 2).unwrap(), k).unwrap();
        let l = davies_generator(&r, &[(kron(&identity(2), &pauli_x()), FermiRate { g: 1.0 })])
            .unwrap();
        let step = expm(&(l.superop() * real(1.0)));
        let dual = numkernel::apply_superop(&step.adjoint(), r.density());
        assert!(fro(&(dual - r.density())) < 1e-10);
        let report = detailed_balance_check(&l, &r);
        assert!(report.passed, "{report:?}");
        assert!(l.unit_residual() < 1e-12);
    }

    #[test]
    fn davies_rejects_non_kms_rates() {
        let r = ReferenceState::new(AlgebraShape::new(2, 1).unwrap(), pauli_z()).unwrap();
        let flat = |_: f64| 1.0;
        assert!(matches!(
            davies_generator(&r, &[(pauli_x(), flat)]),
            Err(Error::KmsViolation { .. })
        ));
    }

    #[test]
    fn degenerate_binning_is_reported() {
        let k = numkernel::diag(&[0.0, 1.0, 1.0 + 1e-8]);
        let shape = AlgebraShape::new(3, 1).unwrap();
        let r = ReferenceState::new(shape, k).unwrap();
        assert!(matches!(energy_levels(&r), Err(Error::DegenerateBinning { .. })));
    }

    #[test]
    fn detailed_balance_examples() {
        let (r, spec) = qubit_depolarizing(1.0);
        let l = spec.generator().unwrap();
        let report = detailed_balance_check(l, &r);
        assert!(report.commutation_residual < 1e-12);
        assert!(report.self_adjoint_residual < 1e-12);

        let (r, l) = davies_two_qubit();
        assert!(detailed_balance_check(&l, &r).passed);

        let folded = l.with_hamiltonian(r.modular_hamiltonian().clone()).unwrap();
        let report = detailed_balance_check(&folded, &r);
        assert!(report.self_adjoint_residual > 1e-3);
        assert!(!report.passed);
    }

    #[test]
    fn factorized_matches_direct() {
        let (r, l) = davies_two_qubit();
        let full = l.with_hamiltonian(r.modular_hamiltonian().clone()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = random::matrix(4, 4, &mut rng);
        for t in [0.1, 1.0, 10.0] {
            let a = evolve_factorized(&full, &r, t, &x).unwrap();
            let b = evolve_direct(&full, t, &x).unwrap();
            assert!(fro(&(&a - &b)) < 1e-9 * fro(&x));
            let spec = DynamicsSpec::Semigroup(full.clone());
            let c = evolve(&spec, &r, t, &x).unwrap();
            assert!(fro(&(&c - &b)) < 1e-9 * fro(&x));
        }
    }

    #[test]
    fn contraction_and_trace_duality() {
        let (r, l) = davies_two_qubit();
        let spec = DynamicsSpec::davies(
            &r,
            &[(kron(&pauli_x(), &identity(2)), FermiRate { g: 1.0 })],
        )
        .unwrap();
        let ev = spec.evolution(&r).unwrap();
        assert!(ev.uses_spectral_route());
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let samples: Vec<_> = (0..20).map(|_| random::matrix(4, 4, &mut rng)).collect();
        for t in [0.5, 3.0] {
            assert!(gns_contraction_excess(&ev, t, &samples).unwrap() <= 1e-10);
            let rho = random::density_matrix(4, &mut rng);
            assert_abs_diff_eq!(trace(&ev.evolve_dual(t, &rho).unwrap()).re, 1.0, epsilon = 1e-11);
        }
        assert!(l.cp_defect(1.0).unwrap() < 1e-9);
    }

    #[test]
    fn reduced_dynamics_examples() {
        let (r, spec) = qubit_depolarizing(1.0);
        let ev = spec.evolution(&r).unwrap();
        let psi = basis_vector(2, 0);
        let target = QubitTarget::pure(psi.clone()).unwrap();
        let prep = replacement_operation(&target, &r).unwrap();
        let sigma = projector(&psi);
        assert!(fro(&(reduced_dynamics(&ev, &prep, 0.0, &sigma).unwrap() - &sigma)) < 1e-12);
        let late = reduced_dynamics(&ev, &prep, 60.0, &sigma).unwrap();
        assert!(fro(&(late - r.restrict_to_q().unwrap())) < 1e-12);

        // Heisenberg/Schrödinger duality on a product model
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let kb = random::hermitian(2, 1.0, &mut rng);
        let r = ReferenceState::product(&numkernel::zeros(2), &kb).unwrap();
        let l = LindbladGenerator::depolarizing_q(2, 2, 0.6).unwrap();
        let spec = DynamicsSpec::Semigroup(l);
        let ev = spec.evolution(&r).unwrap();
        let psi = random::unit_vector(2, &mut rng);
        let target = QubitTarget::pure(psi.clone()).unwrap();
        for prep in [
            replacement_operation(&target, &r).unwrap(),
            single_perturbation(&target, &r).unwrap(),
        ] {
            let t = 0.8;
            let gamma = reduced_dynamics(&ev, &prep, t, &projector(&psi)).unwrap();
            let reduced = (psi.adjoint() * &gamma * &psi)[(0, 0)].re;
            let omega_prime = crate::prep::perturbed_state(&prep, &r);
            let p = r.shape().embed_projector(&psi).unwrap();
            let direct = trace(&(omega_prime * ev.evolve(t, &p).unwrap())).re;
            assert_abs_diff_eq!(reduced, direct, epsilon = 1e-10);
        }
    }

    #[test]
    fn thermalize_b_targets_marginal() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let r = ReferenceState::product(&numkernel::zeros(2), &random::hermitian(2, 1.0, &mut rng))
            .unwrap();
        let l = LindbladGenerator::thermalize_b(&r, 1.5).unwrap();
        let b = random::matrix(2, 2, &mut rng);
        let x = kron(&identity(2), &b);
        let omega_b = r.restrict_to_b().unwrap();
        let expected = (identity(4) * trace(&(&omega_b * &b)) - &x) * real(1.5);
        assert!(fro(&(l.apply(&x) - expected)) < 1e-12);
        assert!(detailed_balance_check(&l, &r).passed);
    }
}
