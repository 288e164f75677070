//! JSON model configuration.
//!
//! Complex numbers are `[re, im]` pairs and matrices are row-major nested
//! arrays of them.

use serde::{Deserialize, Serialize};

use crate::algebra::{AlgebraShape, ReferenceState};
use crate::dynamics::{CpMap, DynamicsSpec, FermiRate, Jump, LindbladGenerator};
use crate::error::{Error, Result};
use crate::fidelity::{Model, TimeGrid};
use crate::numkernel::{self, CMatrix, CVector, C64, HERMITICITY_TOL};
use crate::prep::{self, QubitTarget};

/// Complex matrix as rows of `[re, im]` pairs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct JsonMatrix(pub Vec<Vec<[f64; 2]>>);

impl JsonMatrix {
    pub fn from_matrix(m: &CMatrix) -> Self {
        Self(
            (0..m.nrows())
                .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
                .collect(),
        )
    }

    pub fn to_matrix(&self, dim: usize, field: &str) -> Result<CMatrix> {
        if self.0.len() != dim || self.0.iter().any(|row| row.len() != dim) {
            return Err(Error::Parse {
                context: field.to_string(),
                message: format!("expected a {dim}x{dim} matrix"),
            });
        }
        Ok(CMatrix::from_fn(dim, dim, |i, j| {
            let [re, im] = self.0[i][j];
            C64::new(re, im)
        }))
    }
}

/// Complex vector as `[re, im]` pairs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct JsonVector(pub Vec<[f64; 2]>);

impl JsonVector {
    pub fn from_vector(v: &CVector) -> Self {
        Self(v.iter().map(|z| [z.re, z.im]).collect())
    }

    pub fn to_vector(&self, dim: usize, field: &str) -> Result<CVector> {
        if self.0.len() != dim {
            return Err(Error::Parse {
                context: field.to_string(),
                message: format!("expected a vector of length {dim}"),
            });
        }
        Ok(CVector::from_iterator(dim, self.0.iter().map(|&[re, im]| C64::new(re, im))))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JumpConfig {
    pub matrix: JsonMatrix,
    pub rate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum RateFamily {
    Fermi { g: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DynamicsConfig {
    Unitary,
    Lindblad {
        hamiltonian_part: JsonMatrix,
        jumps: Vec<JumpConfig>,
    },
    Davies {
        couplings: Vec<JsonMatrix>,
        rate_family: RateFamily,
    },
    Map {
        kraus: Vec<JsonMatrix>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PreparationConfig {
    Single { sigma: JsonMatrix },
    Replacement { psi: JsonVector },
    Filtered { a: JsonMatrix, p: f64 },
    Custom { kraus: Vec<JsonMatrix> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub shape: AlgebraShape,
    pub beta: f64,
    pub hamiltonian: JsonMatrix,
    pub dynamics: DynamicsConfig,
    pub preparation: PreparationConfig,
    pub psi: JsonVector,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_grid: Option<TimeGrid>,
}

fn parse_error(err: serde_path_to_error::Error<serde_json::Error>) -> Error {
    let path = err.path().to_string();
    let inner = err.into_inner();
    Error::Parse {
        context: format!("line {} column {}, field `{path}`", inner.line(), inner.column()),
        message: inner.to_string(),
    }
}

impl ModelConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(parse_error)
    }

    pub fn from_value(value: serde_json::Value) -> Result<Self> {
        serde_path_to_error::deserialize(value).map_err(|err| {
            let path = err.path().to_string();
            Error::Parse {
                context: format!("field `{path}`"),
                message: err.into_inner().to_string(),
            }
        })
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn n(&self) -> usize {
        self.shape.n()
    }

    /// Hamiltonian before the `β` scaling.
    pub fn hamiltonian_matrix(&self) -> Result<CMatrix> {
        self.hamiltonian.to_matrix(self.n(), "hamiltonian")
    }

    pub fn reference(&self) -> Result<ReferenceState> {
        let shape = AlgebraShape::new(self.shape.dq, self.shape.db)?;
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::Parse {
                context: "beta".into(),
                message: format!("beta must be positive, got {}", self.beta),
            });
        }
        let h = self.hamiltonian_matrix()?;
        let residual = numkernel::hermiticity_residual(&h);
        if residual > HERMITICITY_TOL * numkernel::fro(&h).max(1.0) {
            return Err(Error::InvariantViolation(vec![format!(
                "hamiltonian hermiticity residual {residual:.3e}"
            )]));
        }
        ReferenceState::gibbs(shape, &h, self.beta)
    }

    pub fn dynamics_spec(&self, reference: &ReferenceState) -> Result<DynamicsSpec> {
        let n = self.n();
        Ok(match &self.dynamics {
            DynamicsConfig::Unitary => DynamicsSpec::Unitary,
            DynamicsConfig::Lindblad {
                hamiltonian_part,
                jumps,
            } => {
                let h = hamiltonian_part.to_matrix(n, "dynamics.hamiltonian_part")?;
                let jumps = jumps
                    .iter()
                    .enumerate()
                    .map(|(k, j)| {
                        Ok(Jump::new(
                            j.matrix.to_matrix(n, &format!("dynamics.jumps.{k}.matrix"))?,
                            j.rate,
                        ))
                    })
                    .collect::<Result<Vec<_>>>()?;
                DynamicsSpec::Semigroup(LindbladGenerator::new(h, jumps)?)
            }
            DynamicsConfig::Davies {
                couplings,
                rate_family,
            } => {
                let RateFamily::Fermi { g } = *rate_family;
                let couplings = couplings
                    .iter()
                    .enumerate()
                    .map(|(k, s)| Ok((s.to_matrix(n, &format!("dynamics.couplings.{k}"))?, FermiRate { g })))
                    .collect::<Result<Vec<_>>>()?;
                DynamicsSpec::davies(reference, &couplings)?
            }
            DynamicsConfig::Map { kraus } => {
                let kraus = kraus
                    .iter()
                    .enumerate()
                    .map(|(k, m)| m.to_matrix(n, &format!("dynamics.kraus.{k}")))
                    .collect::<Result<Vec<_>>>()?;
                DynamicsSpec::Map(CpMap::from_kraus(kraus, reference)?)
            }
        })
    }

    pub fn preparation(&self, reference: &ReferenceState) -> Result<prep::Preparation> {
        let (n, dq) = (self.n(), self.shape.dq);
        match &self.preparation {
            PreparationConfig::Single { sigma } => {
                let sigma = sigma.to_matrix(dq, "preparation.sigma")?;
                prep::single_perturbation(&QubitTarget::mixed(sigma)?, reference)
            }
            PreparationConfig::Replacement { psi } => {
                let psi = psi.to_vector(dq, "preparation.psi")?;
                prep::replacement_operation(&QubitTarget::pure(psi)?, reference)
            }
            PreparationConfig::Filtered { a, p } => {
                prep::filtered_preparation(&a.to_matrix(n, "preparation.a")?, *p, reference)
            }
            PreparationConfig::Custom { kraus } => {
                let kraus = kraus
                    .iter()
                    .enumerate()
                    .map(|(k, m)| m.to_matrix(n, &format!("preparation.kraus.{k}")))
                    .collect::<Result<Vec<_>>>()?;
                prep::custom_operation(kraus, None, reference)
            }
        }
    }

    pub fn psi_vector(&self) -> Result<CVector> {
        self.psi.to_vector(self.shape.dq, "psi")
    }

    pub fn build(&self) -> Result<Model> {
        let reference = self.reference()?;
        let dynamics = self.dynamics_spec(&reference)?;
        let preparation = self.preparation(&reference)?;
        let psi = self.psi_vector()?;
        Model::new(reference, dynamics, preparation, psi)
    }

    /// Times for the curve: the configured grid, else the default grid for
    /// the given decay rate.
    pub fn times(&self, rate: Option<f64>) -> Result<Vec<f64>> {
        let grid = self.time_grid.unwrap_or_else(|| TimeGrid::default_for_rate(rate));
        grid.times(matches!(self.dynamics, DynamicsConfig::Map { .. }))
    }
}

/// Replace the scalar at a dotted path (`dynamics.rate_family.g`,
/// `dynamics.jumps.0.rate`) in a JSON document.
pub fn set_dotted(value: &mut serde_json::Value, path: &str, new: f64) -> Result<()> {
    let unknown = || Error::UnknownParameter(path.to_string());
    let mut cursor = value;
    for key in path.split('.') {
        cursor = match cursor {
            serde_json::Value::Object(map) => map.get_mut(key).ok_or_else(unknown)?,
            serde_json::Value::Array(items) => {
                let index: usize = key.parse().map_err(|_| unknown())?;
                items.get_mut(index).ok_or_else(unknown)?
            }
            _ => return Err(unknown()),
        };
    }
    if !cursor.is_number() {
        return Err(unknown());
    }
    *cursor = serde_json::Value::from(new);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cli::demos;

    #[test]
    fn round_trip_is_fixed_point() {
        for name in demos::NAMES {
            let config = demos::demo(name).unwrap();
            let once = config.to_json();
            let twice = ModelConfig::from_json(&once).unwrap().to_json();
            assert_eq!(once, twice, "{name}");
        }
    }

    #[test]
    fn parse_errors_name_the_field() {
        let mut value = serde_json::to_value(demos::demo("depolarizing").unwrap()).unwrap();
        value["beta"] = serde_json::Value::from("hot");
        let text = serde_json::to_string_pretty(&value).unwrap();
        match ModelConfig::from_json(&text) {
            Err(Error::Parse { context, .. }) => {
                assert!(context.contains("beta"), "{context}");
                assert!(context.contains("line"), "{context}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn wrong_dimension_is_reported() {
        let mut config = demos::demo("davies-1q").unwrap();
        config.psi = JsonVector(vec![[1.0, 0.0]; 3]);
        assert!(matches!(config.build(), Err(Error::Parse { .. })));
    }

    #[test]
    fn non_hermitian_hamiltonian() {
        let mut config = demos::demo("davies-1q").unwrap();
        config.hamiltonian.0[0][1] = [0.3, 0.0];
        match config.build() {
            Err(Error::InvariantViolation(items)) => {
                assert!(items[0].contains("hamiltonian hermiticity"))
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn dotted_paths() {
        let mut value = serde_json::to_value(demos::demo("davies-1q").unwrap()).unwrap();
        set_dotted(&mut value, "dynamics.rate_family.g", 2.0).unwrap();
        assert_eq!(value["dynamics"]["rate_family"]["g"], 2.0);
        set_dotted(&mut value, "psi.0.0", 1.0).unwrap();
        assert!(matches!(
            set_dotted(&mut value, "dynamics.nope", 1.0),
            Err(Error::UnknownParameter(_))
        ));
        assert!(matches!(
            set_dotted(&mut value, "dynamics", 1.0),
            Err(Error::UnknownParameter(_))
        ));
    }
}
