//! The `validate`, `gap`, `fidelity` and `sweep` commands as library calls.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{self, detailed_balance_check, DynamicsSpec};
use crate::error::{Error, Result};
use crate::fidelity::{self, Check, Model};
use crate::numkernel::{self, fro, identity};
use crate::prep::{PreparationKind, KRAUS_TOL, RESTRICTION_TOL, SINGLE_NORM_TOL};
use crate::random;
use crate::spectral;

use super::config::{set_dotted, DynamicsConfig, ModelConfig};
use super::output::{curve_csv, curve_svg, ResultEnvelope};

/// Relative agreement required between the eigensolve gap and the decay fit.
pub const FIT_AGREEMENT_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunOptions {
    pub seed: u64,
    /// Multiplies every check tolerance; never changes computed values.
    pub tol_scale: f64,
    /// Worker threads for grid points and sweep rows; `None` uses all cores.
    pub jobs: Option<usize>,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            tol_scale: 1.0,
            jobs: None,
        }
    }
}

impl RunOptions {
    fn check(&self, name: &str, residual: f64, tol: f64) -> Check {
        Check::new(name, residual, tol * self.tol_scale)
    }

    fn rescale(&self, mut checks: Vec<Check>) -> Vec<Check> {
        for c in &mut checks {
            c.tol *= self.tol_scale;
            c.pass = c.residual <= c.tol;
        }
        checks
    }

    /// Run `f` on a pool limited to `jobs` threads.
    pub fn install<T: Send>(&self, f: impl FnOnce() -> T + Send) -> Result<T> {
        match self.jobs {
            None => Ok(f()),
            Some(jobs) => {
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(jobs.max(1))
                    .build()
                    .map_err(|e| Error::Invalid(format!("thread pool: {e}")))?;
                Ok(pool.install(f))
            }
        }
    }
}

/// Structural invariants of a config.
pub fn validate(config: &ModelConfig, opts: &RunOptions) -> Result<Vec<Check>> {
    let h = config.hamiltonian_matrix()?;
    let mut checks = vec![opts.check(
        "hamiltonian hermiticity",
        numkernel::hermiticity_residual(&h),
        numkernel::HERMITICITY_TOL * fro(&h).max(1.0),
    )];
    if !checks[0].pass {
        return Ok(checks);
    }
    let model = config.build()?;
    let reference = &model.reference;

    let spectrum = reference.modular_spectrum();
    checks.push(opts.check(
        "faithfulness (modular spread)",
        spectrum.max() - spectrum.min(),
        -reference.faithful_tol().ln(),
    ));
    checks.push(opts.check("psi normalization", (model.psi.norm() - 1.0).abs(), 1e-10));

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let n = reference.n();
    let kms = (0..20)
        .map(|_| {
            let a = random::matrix(n, n, &mut rng);
            let b = random::matrix(n, n, &mut rng);
            reference.kms_residual(&(&a / numkernel::real(fro(&a))), &(&b / numkernel::real(fro(&b))))
        })
        .fold(0.0f64, f64::max);
    checks.push(opts.check("kms residual", kms, 1e-10));

    let prep = &model.preparation;
    let norm_tol = match prep.kind() {
        PreparationKind::Single => SINGLE_NORM_TOL,
        _ => KRAUS_TOL,
    };
    checks.push(opts.check("kraus normalization", prep.normalization_residual(reference), norm_tol));
    checks.push(opts.check(
        "preparation restriction",
        prep.restriction_residual(reference)?,
        RESTRICTION_TOL,
    ));
    let obs = model.observables()?;
    checks.push(opts.check("centering x", reference.expect(&obs.x).norm(), 1e-10));
    checks.push(opts.check("centering y", reference.expect(&obs.y).norm(), 1e-10));

    match &model.dynamics {
        DynamicsSpec::Unitary => {}
        DynamicsSpec::Map(map) => {
            let sum = map
                .kraus()
                .iter()
                .fold(numkernel::zeros(n), |acc, k| acc + k.adjoint() * k);
            checks.push(opts.check("identity preservation", fro(&(sum - identity(n))), dynamics::UNITAL_TOL));
            checks.push(opts.check(
                "omega invariance",
                map.invariance_residual(reference),
                dynamics::INVARIANCE_TOL,
            ));
        }
        DynamicsSpec::Semigroup(generator) => {
            checks.push(opts.check("identity preservation", generator.unit_residual(), 1e-12));
            checks.push(opts.check(
                "omega invariance",
                generator.invariance_residual(reference),
                dynamics::INVARIANCE_TOL,
            ));
            checks.push(opts.check("complete positivity", generator.cp_defect(1.0)?, 1e-9));
            if matches!(config.dynamics, DynamicsConfig::Davies { .. }) {
                let report = detailed_balance_check(&generator.dissipative_part(), reference);
                let tol = dynamics::DETAILED_BALANCE_TOL * report.generator_norm;
                checks.push(opts.check("detailed balance commutation", report.commutation_residual, tol));
                checks.push(opts.check("detailed balance self-adjointness", report.self_adjoint_residual, tol));
            }
        }
    }
    Ok(checks)
}

fn decay_fit(model: &Model, lambda: f64, seed: u64) -> Result<Option<f64>> {
    let DynamicsSpec::Semigroup(generator) = &model.dynamics else {
        return Ok(None);
    };
    if lambda <= spectral::GAP_VALID_TOL {
        return Ok(None);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = model.reference.n();
    let x = random::matrix(n, n, &mut rng);
    let eta = &x - identity(n) * model.reference.expect(&x);
    spectral::decay_fit_rate(&generator.dissipative_part(), &model.reference, &eta, 1.0 / lambda).map(Some)
}

/// Spectral report, with the decay-fit cross-check when a detailed-balance
/// gap is available.
pub fn gap(config: &ModelConfig, opts: &RunOptions) -> Result<ResultEnvelope> {
    let model = config.build()?;
    let report = model.spectral_report()?;
    let mut envelope = ResultEnvelope::new(config, opts.seed);
    if let Some(lambda) = report.gap_lambda {
        if let Some(fit) = decay_fit(&model, lambda, opts.seed)? {
            envelope.checks.push(opts.check(
                "decay fit agreement",
                (fit - lambda).abs() / lambda,
                FIT_AGREEMENT_TOL,
            ));
            envelope.decay_fit = Some(fit);
        }
    }
    envelope.detailed_balance = report.detailed_balance.clone();
    envelope.warnings = report.warnings.clone();
    envelope.spectral = Some(report);
    Ok(envelope)
}

/// Output of the `fidelity` command.
#[derive(Clone, Debug)]
pub struct FidelityRun {
    pub envelope: ResultEnvelope,
    pub csv: String,
    pub svg: String,
}

pub fn fidelity(config: &ModelConfig, opts: &RunOptions) -> Result<FidelityRun> {
    let model = config.build()?;
    let report = model.spectral_report()?;
    let rate = model.decay_rate(&report).map(|r| r.0);
    let times = config.times(rate)?;
    let curve = opts.install(|| fidelity::run_curve(&model, &times))??;

    let mut envelope = ResultEnvelope::new(config, opts.seed);
    envelope.checks = opts.rescale(curve.checks());
    envelope.half_life = fidelity::half_life(&model, &curve)?;
    envelope.detailed_balance = report.detailed_balance.clone();
    envelope.warnings = report.warnings.clone();
    envelope.spectral = Some(report);
    let csv = curve_csv(&curve)?;
    let svg = curve_svg(&curve);
    envelope.curve = Some(curve);
    Ok(FidelityRun { envelope, csv, svg })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    pub lambda: Option<f64>,
    pub gamma: f64,
    pub floor: f64,
    pub half_life: Option<f64>,
}

/// One fidelity run per value of the parameter at `param`. Rows keep the
/// order of `values`.
pub fn sweep(
    config: &ModelConfig,
    param: &str,
    values: &[f64],
    opts: &RunOptions,
) -> Result<(Vec<SweepRow>, Vec<ResultEnvelope>)> {
    let base = serde_json::to_value(config)?;
    // reject bad paths even when there is nothing to sweep
    set_dotted(&mut base.clone(), param, 0.0)?;
    let inner = RunOptions { jobs: None, ..*opts };
    let results: Vec<(SweepRow, ResultEnvelope)> = opts.install(|| {
        values
            .par_iter()
            .map(|&value| {
                let mut doc = base.clone();
                set_dotted(&mut doc, param, value)?;
                let cfg = ModelConfig::from_value(doc)?;
                let run = fidelity(&cfg, &inner)?;
                let spectral = run.envelope.spectral.as_ref().expect("fidelity sets the report");
                let curve = run.envelope.curve.as_ref().expect("fidelity sets the curve");
                let row = SweepRow {
                    value,
                    lambda: spectral.gap_lambda,
                    gamma: spectral.gap_gamma,
                    floor: curve.floor,
                    half_life: run.envelope.half_life,
                };
                Ok((row, run.envelope))
            })
            .collect::<Result<Vec<_>>>()
    })??;
    Ok(results.into_iter().unzip())
}

pub fn sweep_csv(rows: &[SweepRow]) -> Result<String> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(["value", "lambda", "gamma", "floor", "half_life"])?;
    let opt = |v: Option<f64>| v.map(|x| format!("{x}")).unwrap_or_default();
    for r in rows {
        writer.write_record([
            format!("{}", r.value),
            opt(r.lambda),
            format!("{}", r.gamma),
            format!("{}", r.floor),
            opt(r.half_life),
        ])?;
    }
    let bytes = writer.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}
