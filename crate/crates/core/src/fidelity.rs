//! Fidelity curves, the correlation-function form of the fidelity, and the
//! Schwarz and spectral-gap upper bounds.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::ReferenceState;
use crate::dynamics::{DynamicsSpec, Evolution};
use crate::error::{Error, Result};
use crate::numkernel::{self, fro, CMatrix, CVector, C64};
use crate::prep::{build_x, build_y, perturbed_state, Preparation};
use crate::spectral::{self, GapMode, RateSource, SpectralReport};

/// Largest imaginary part tolerated on a quantity that must be real.
pub const IMAGINARY_TOL: f64 = 1e-10;
/// `|f_direct − f_correlation|` allowed at every time.
pub const IDENTITY_TOL: f64 = 1e-10;
/// Slack on `f_direct ≤ bound_schwarz`.
pub const SCHWARZ_TOL: f64 = 1e-10;
/// Slack on `bound_schwarz ≤ bound_gap`.
pub const ORDERING_TOL: f64 = 1e-9;
/// Tolerance on the modular flow being trivial on 𝒬.
pub const TRIVIAL_ON_Q_TOL: f64 = 1e-10;
/// Bisection tolerance for half-lives.
pub const HALF_LIFE_TOL: f64 = 1e-6;

fn real_part(value: C64, what: &'static str) -> Result<f64> {
    let scale = value.re.abs().max(1.0);
    if value.im.abs() > IMAGINARY_TOL * scale {
        return Err(Error::ImaginaryResidue {
            what,
            residue: value.im,
        });
    }
    Ok(value.re)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    Linear,
    Log,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t_max: f64,
    pub points: usize,
    pub spacing: Spacing,
}

impl TimeGrid {
    pub const DEFAULT_POINTS: usize = 200;

    /// 200 logarithmic points over `[0, 10/rate]`, or `[0, 10]` without a rate.
    pub fn default_for_rate(rate: Option<f64>) -> Self {
        let t_max = match rate {
            Some(r) if r > 0.0 && r.is_finite() => 10.0 / r,
            _ => 10.0,
        };
        Self {
            t_max,
            points: Self::DEFAULT_POINTS,
            spacing: Spacing::Log,
        }
    }

    /// Ascending times starting at 0. Log grids are geometric from
    /// `t_max·1e-3` to `t_max` with 0 prepended. With `integer_steps` the
    /// times are rounded to whole steps and deduplicated.
    pub fn times(&self, integer_steps: bool) -> Result<Vec<f64>> {
        if !(self.t_max > 0.0 && self.t_max.is_finite()) {
            return Err(Error::Invalid(format!("t_max must be positive, got {}", self.t_max)));
        }
        if self.points < 2 {
            return Err(Error::Invalid("a time grid needs at least 2 points".into()));
        }
        let mut times = match self.spacing {
            Spacing::Linear => (0..self.points)
                .map(|k| self.t_max * k as f64 / (self.points - 1) as f64)
                .collect::<Vec<_>>(),
            Spacing::Log => {
                let (lo, hi) = ((self.t_max * 1e-3).ln(), self.t_max.ln());
                let mut v = vec![0.0];
                v.extend((0..self.points).map(|k| {
                    let s = k as f64 / (self.points - 1) as f64;
                    (lo + s * (hi - lo)).exp()
                }));
                if let Some(last) = v.last_mut() {
                    *last = self.t_max;
                }
                v
            }
        };
        if integer_steps {
            for t in times.iter_mut() {
                *t = t.round();
            }
            times.dedup();
        }
        Ok(times)
    }
}

/// A qubit memory model: reference state, dynamics, preparation and the
/// encoded vector.
#[derive(Clone, Debug)]
pub struct Model {
    pub reference: ReferenceState,
    pub dynamics: DynamicsSpec,
    pub preparation: Preparation,
    pub psi: CVector,
}

impl Model {
    pub fn new(
        reference: ReferenceState,
        dynamics: DynamicsSpec,
        preparation: Preparation,
        psi: CVector,
    ) -> Result<Self> {
        let dq = reference.shape().dq;
        if psi.len() != dq {
            return Err(Error::DimensionMismatch(format!(
                "psi has length {}, dQ={dq}",
                psi.len()
            )));
        }
        let norm_residual = (psi.norm() - 1.0).abs();
        if norm_residual > 1e-10 {
            return Err(Error::InvariantViolation(vec![format!(
                "psi is not a unit vector (residual {norm_residual:.3e})"
            )]));
        }
        Ok(Self {
            reference,
            dynamics,
            preparation,
            psi,
        })
    }

    pub fn evolution(&self) -> Result<Evolution<'_>> {
        self.dynamics.evolution(&self.reference)
    }

    pub fn observables(&self) -> Result<Observables> {
        Observables::new(&self.preparation, &self.reference, &self.psi)
    }

    pub fn integer_steps(&self) -> bool {
        matches!(self.dynamics, DynamicsSpec::Map(_))
    }

    /// Spectral report for the model's dynamics. Semigroups are tried in
    /// detailed-balance mode first and fall back to the symmetrized gap,
    /// with a notice in the warnings.
    pub fn spectral_report(&self) -> Result<SpectralReport> {
        match &self.dynamics {
            DynamicsSpec::Unitary => Ok(spectral::unitary_gap(&self.reference)),
            DynamicsSpec::Map(map) => spectral::map_gap(map, &self.reference),
            DynamicsSpec::Semigroup(generator) => {
                match spectral::spectral_gap(generator, &self.reference, GapMode::DetailedBalance) {
                    Ok(report) => Ok(report),
                    Err(Error::NotDetailedBalance {
                        self_adjoint,
                        commutation,
                    }) => {
                        let mut report =
                            spectral::spectral_gap(generator, &self.reference, GapMode::Symmetrized)?;
                        report.warnings.insert(
                            0,
                            format!(
                                "detailed balance fails (self-adjoint {self_adjoint:.3e}, commutation {commutation:.3e}); using the symmetrized gap"
                            ),
                        );
                        Ok(report)
                    }
                    Err(e) => Err(e),
                }
            }
        }
    }

    /// Certified decay rate and where it came from.
    pub fn decay_rate(&self, report: &SpectralReport) -> Option<(f64, RateSource)> {
        let (rate, source) = report.certified_rate()?;
        match self.dynamics {
            DynamicsSpec::Map(_) => Some((rate, RateSource::MapStep)),
            _ => Some((rate, source)),
        }
    }

    /// Whether `τ_{iβ}(q) = q` on 𝒬 and the preparation restricts to `|ψ⟩⟨ψ|`.
    pub fn is_tracial_perfect(&self) -> Result<bool> {
        if self.reference.modular_residual_on_q() > TRIVIAL_ON_Q_TOL {
            return Ok(false);
        }
        let shape = self.reference.shape();
        let omega_q = numkernel::partial_trace_b(
            &perturbed_state(&self.preparation, &self.reference),
            shape.dq,
            shape.db,
        )?;
        Ok(fro(&(omega_q - numkernel::projector(&self.psi))) <= 1e-10)
    }
}

/// Time-independent ingredients of the fidelity.
#[derive(Clone, Debug)]
pub struct Observables {
    /// `P_ψ ⊗ 1`.
    pub projector: CMatrix,
    pub x: CMatrix,
    pub y: CMatrix,
    /// `ω(P_ψ)`.
    pub floor: f64,
    pub norm_x: f64,
    pub norm_y: f64,
    kraus: Vec<CMatrix>,
}

impl Observables {
    pub fn new(prep: &Preparation, reference: &ReferenceState, psi: &CVector) -> Result<Self> {
        let projector = reference.shape().embed_projector(psi)?;
        let floor = real_part(reference.expect(&projector), "floor")?;
        let x = build_x(prep, reference);
        let y = build_y(psi, reference)?;
        Ok(Self {
            norm_x: reference.gns_norm(&x),
            norm_y: reference.gns_norm(&y),
            projector,
            x,
            y,
            floor,
            kraus: prep.effective_kraus().to_vec(),
        })
    }
}

/// `Σ_j ω(a_j† Λ_t(P_ψ) a_j)`.
pub fn fidelity_direct(evolution: &Evolution<'_>, obs: &Observables, t: f64) -> Result<f64> {
    let reference = evolution.reference();
    let evolved = evolution.evolve(t, &obs.projector)?;
    let value: C64 = obs
        .kraus
        .iter()
        .map(|a| reference.expect(&(a.adjoint() * &evolved * a)))
        .sum();
    real_part(value, "f_direct")
}

/// `ω(x† Λ_t(y)) + ω(P_ψ)`.
pub fn fidelity_correlation(evolution: &Evolution<'_>, obs: &Observables, t: f64) -> Result<f64> {
    let reference = evolution.reference();
    let evolved = evolution.evolve(t, &obs.y)?;
    let value = reference.gns_inner(&obs.x, &evolved);
    Ok(real_part(value, "f_correlation")? + obs.floor)
}

/// `‖x‖_ω ‖Λ_t(y)‖_ω + ω(P_ψ)`.
pub fn schwarz_bound(evolution: &Evolution<'_>, obs: &Observables, t: f64) -> Result<f64> {
    let reference = evolution.reference();
    let evolved = evolution.evolve(t, &obs.y)?;
    Ok(obs.norm_x * reference.gns_norm(&evolved) + obs.floor)
}

/// `e^{−γt}‖x‖_ω‖y‖_ω + floor` on the given times.
pub fn gap_bound_curve(norms: (f64, f64), gamma: Option<f64>, floor: f64, times: &[f64]) -> Result<Vec<f64>> {
    let gamma = match gamma {
        Some(g) if g >= 0.0 && !g.is_nan() => g,
        _ => return Err(Error::InvalidGap),
    };
    let amplitude = norms.0 * norms.1;
    Ok(times
        .iter()
        .map(|&t| {
            let decay = if t == 0.0 { 1.0 } else { (-gamma * t).exp() };
            decay * amplitude + floor
        })
        .collect())
}

/// `1/d + e^{−λt}(1 − 1/d)`, valid when the modular flow is trivial on 𝒬.
pub fn tracial_example_bound(
    reference: &ReferenceState,
    lambda: f64,
    times: &[f64],
) -> Result<Vec<f64>> {
    let residual = reference.modular_residual_on_q();
    if residual > TRIVIAL_ON_Q_TOL {
        return Err(Error::ModularNotTrivialOnQ(residual));
    }
    tracial_closed_form(reference.shape().dq, lambda, times)
}

/// The closed-form curve `1/d + e^{−λt}(1 − 1/d)` itself.
pub fn tracial_closed_form(d: usize, lambda: f64, times: &[f64]) -> Result<Vec<f64>> {
    if d < 2 {
        return Err(Error::Invalid(format!("dimension {d} < 2")));
    }
    if lambda.is_nan() || lambda < 0.0 {
        return Err(Error::InvalidGap);
    }
    let inv = 1.0 / d as f64;
    Ok(times
        .iter()
        .map(|&t| inv + (-lambda * t).exp() * (1.0 - inv))
        .collect())
}

/// Name, residual, tolerance and verdict of one invariant check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub residual: f64,
    pub tol: f64,
    pub pass: bool,
}

impl Check {
    pub fn new(name: impl Into<String>, residual: f64, tol: f64) -> Self {
        Self {
            name: name.into(),
            residual,
            tol,
            pass: residual <= tol,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FidelityCurve {
    pub times: Vec<f64>,
    pub f_direct: Vec<f64>,
    pub f_correlation: Vec<f64>,
    pub bound_schwarz: Vec<f64>,
    pub bound_gap: Option<Vec<f64>>,
    pub bound_tracial: Option<Vec<f64>>,
    pub floor: f64,
    pub norm_x: f64,
    pub norm_y: f64,
    pub rate: Option<f64>,
    pub rate_source: Option<RateSource>,
}

fn max_over(values: impl Iterator<Item = f64>) -> f64 {
    values.fold(0.0f64, |m, v| m.max(v))
}

impl FidelityCurve {
    /// Identity, ordering, range and floor checks.
    pub fn checks(&self) -> Vec<Check> {
        let mut checks = vec![Check::new(
            "correlation identity",
            max_over(self.f_direct.iter().zip(&self.f_correlation).map(|(a, b)| (a - b).abs())),
            IDENTITY_TOL,
        )];
        checks.push(Check::new(
            "fidelity range",
            max_over(self.f_direct.iter().map(|&f| (-f).max(f - 1.0))),
            1e-10,
        ));
        checks.push(Check::new(
            "schwarz ordering",
            max_over(self.f_direct.iter().zip(&self.bound_schwarz).map(|(f, s)| f - s)),
            SCHWARZ_TOL,
        ));
        let mut lowest = self.bound_schwarz.iter().copied().fold(f64::INFINITY, f64::min);
        if let Some(gap) = &self.bound_gap {
            checks.push(Check::new(
                "gap ordering",
                max_over(self.bound_schwarz.iter().zip(gap).map(|(s, g)| s - g)),
                ORDERING_TOL,
            ));
            lowest = lowest.min(gap.iter().copied().fold(f64::INFINITY, f64::min));
        }
        checks.push(Check::new("bound floor", (self.floor - lowest).max(0.0), 1e-12));
        checks
    }

    /// Time at which `f_direct` first reaches `(1 + floor)/2`, interpolated
    /// linearly on the grid. `None` if it never does.
    pub fn half_life_on_grid(&self) -> Option<(usize, f64)> {
        let target = (1.0 + self.floor) / 2.0;
        let k = self.f_direct.iter().position(|&f| f <= target)?;
        Some((k, target))
    }
}

/// Assemble the full curve on `times`. Grid points are evaluated in parallel.
pub fn run_curve(model: &Model, times: &[f64]) -> Result<FidelityCurve> {
    let evolution = model.evolution()?;
    let obs = model.observables()?;
    let report = model.spectral_report()?;
    let rate = model.decay_rate(&report);

    let rows: Vec<(f64, f64, f64)> = times
        .par_iter()
        .map(|&t| {
            Ok((
                fidelity_direct(&evolution, &obs, t)?,
                fidelity_correlation(&evolution, &obs, t)?,
                schwarz_bound(&evolution, &obs, t)?,
            ))
        })
        .collect::<Result<_>>()?;

    let bound_gap = match rate {
        Some((gamma, _)) => Some(gap_bound_curve((obs.norm_x, obs.norm_y), Some(gamma), obs.floor, times)?),
        None => None,
    };
    let bound_tracial = match (rate, model.is_tracial_perfect()?) {
        (Some((lambda, source)), true) if source != RateSource::MapStep => {
            Some(tracial_example_bound(&model.reference, lambda, times)?)
        }
        _ => None,
    };

    Ok(FidelityCurve {
        times: times.to_vec(),
        f_direct: rows.iter().map(|r| r.0).collect(),
        f_correlation: rows.iter().map(|r| r.1).collect(),
        bound_schwarz: rows.iter().map(|r| r.2).collect(),
        bound_gap,
        bound_tracial,
        floor: obs.floor,
        norm_x: obs.norm_x,
        norm_y: obs.norm_y,
        rate: rate.map(|r| r.0),
        rate_source: rate.map(|r| r.1),
    })
}

/// Half-life `t` with `f_direct(t) = (1 + floor)/2`, by bisection on the
/// dynamics between the bracketing grid points. Maps return the first
/// whole step at or below the target.
pub fn half_life(model: &Model, curve: &FidelityCurve) -> Result<Option<f64>> {
    let Some((k, target)) = curve.half_life_on_grid() else {
        return Ok(None);
    };
    if k == 0 || model.integer_steps() {
        return Ok(Some(curve.times[k]));
    }
    let evolution = model.evolution()?;
    let obs = model.observables()?;
    let (mut lo, mut hi) = (curve.times[k - 1], curve.times[k]);
    while hi - lo > HALF_LIFE_TOL {
        let mid = 0.5 * (lo + hi);
        if fidelity_direct(&evolution, &obs, mid)? > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(0.5 * (lo + hi)))
}
