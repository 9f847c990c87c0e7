//! JSON file formats for problems, certificates and experiment configs.
//!
//! Matrices are stored as `{"rows": r, "cols": c, "data": [...]}` in row-major
//! order. Floats are written in shortest round-trip decimal form, so reading a
//! file back reproduces every value bit for bit.

use std::fmt;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};

use crate::experiment::{ExperimentData, PlantModel};
use crate::polytope::{DisturbanceSet, InputPolytope, PolyhedralCSet};
use crate::synthesis::{Certificate, LambdaSpec, Source, SynthesisProblem};
use crate::verification::VerificationReport;

use super::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixRecord {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl MatrixRecord {
    pub fn to_matrix(&self, name: &str) -> Result<DMatrix<f64>, CliError> {
        if self.rows * self.cols != self.data.len() {
            return Err(CliError::Validation(format!(
                "{name}: shape {}x{} does not match {} entries",
                self.rows,
                self.cols,
                self.data.len()
            )));
        }
        Ok(DMatrix::from_row_slice(self.rows, self.cols, &self.data))
    }
}

impl From<&DMatrix<f64>> for MatrixRecord {
    fn from(m: &DMatrix<f64>) -> Self {
        let data = (0..m.nrows()).flat_map(|r| (0..m.ncols()).map(move |c| m[(r, c)])).collect();
        Self {
            rows: m.nrows(),
            cols: m.ncols(),
            data,
        }
    }
}

/// Either a fixed contractivity level or the literal `"min"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LambdaField {
    Fixed(f64),
    Min,
}

impl From<LambdaField> for LambdaSpec {
    fn from(l: LambdaField) -> Self {
        match l {
            LambdaField::Fixed(v) => LambdaSpec::Fixed(v),
            LambdaField::Min => LambdaSpec::Minimize,
        }
    }
}

impl std::str::FromStr for LambdaField {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "min" {
            return Ok(LambdaField::Min);
        }
        s.parse::<f64>()
            .map(LambdaField::Fixed)
            .map_err(|_| format!("expected a number or \"min\", got {s:?}"))
    }
}

impl Serialize for LambdaField {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            LambdaField::Fixed(v) => serializer.serialize_f64(*v),
            LambdaField::Min => serializer.serialize_str("min"),
        }
    }
}

impl<'de> Deserialize<'de> for LambdaField {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct LambdaVisitor;

        impl Visitor<'_> for LambdaVisitor {
            type Value = LambdaField;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a number or the string \"min\"")
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> Result<LambdaField, E> {
                Ok(LambdaField::Fixed(v))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<LambdaField, E> {
                Ok(LambdaField::Fixed(v as f64))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<LambdaField, E> {
                Ok(LambdaField::Fixed(v as f64))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<LambdaField, E> {
                if v == "min" {
                    Ok(LambdaField::Min)
                } else {
                    Err(E::invalid_value(de::Unexpected::Str(v), &self))
                }
            }
        }

        deserializer.deserialize_any(LambdaVisitor)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataBlock {
    pub u0t: MatrixRecord,
    pub x0t: MatrixRecord,
    pub x1t: MatrixRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelBlock {
    pub a: MatrixRecord,
    pub b: MatrixRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisturbanceBlock {
    pub vertices: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default)]
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemFile {
    pub state_set: MatrixRecord,
    pub input_set: MatrixRecord,
    pub lambda: LambdaField,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<DataBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub disturbance: Option<DisturbanceBlock>,
    #[serde(default)]
    pub meta: Meta,
}

/// Validated contents of a [`ProblemFile`].
#[derive(Debug, Clone)]
pub struct LoadedProblem {
    pub state_set: PolyhedralCSet,
    pub input_set: InputPolytope,
    pub lambda: LambdaField,
    pub source: Source,
    pub disturbance: Option<DisturbanceSet>,
}

impl LoadedProblem {
    pub fn data(&self) -> Option<&ExperimentData> {
        match &self.source {
            Source::Data(d) => Some(d),
            Source::Model(_) => None,
        }
    }

    pub fn to_synthesis(&self, lambda: LambdaField, robust: bool) -> SynthesisProblem {
        SynthesisProblem {
            state_set: self.state_set.clone(),
            input_set: self.input_set.clone(),
            lambda: lambda.into(),
            source: self.source.clone(),
            disturbance: if robust { self.disturbance.clone() } else { None },
        }
    }
}

fn invalid(e: impl fmt::Display) -> CliError {
    CliError::Validation(e.to_string())
}

impl ProblemFile {
    pub fn load(&self) -> Result<LoadedProblem, CliError> {
        let state_set = PolyhedralCSet::new(self.state_set.to_matrix("state_set")?).map_err(invalid)?;
        let input_set = InputPolytope::new(self.input_set.to_matrix("input_set")?).map_err(invalid)?;
        let source = match (&self.data, &self.model) {
            (Some(d), None) => Source::Data(
                ExperimentData::new(d.u0t.to_matrix("u0t")?, d.x0t.to_matrix("x0t")?, d.x1t.to_matrix("x1t")?)
                    .map_err(invalid)?,
            ),
            (None, Some(m)) => Source::Model(PlantModel::new(m.a.to_matrix("A")?, m.b.to_matrix("B")?).map_err(invalid)?),
            _ => {
                return Err(CliError::Validation(
                    "problem file needs exactly one of \"data\" and \"model\"".into(),
                ))
            }
        };
        let disturbance = self
            .disturbance
            .as_ref()
            .map(|d| DisturbanceSet::new(d.vertices.iter().map(|v| DVector::from_column_slice(v)).collect()))
            .transpose()
            .map_err(invalid)?;
        let problem = LoadedProblem {
            state_set,
            input_set,
            lambda: self.lambda,
            source,
            disturbance,
        };
        problem.to_synthesis(self.lambda, false).validate().map_err(invalid)?;
        if let Some(d) = &problem.disturbance {
            if d.dim() != problem.state_set.dim() {
                return Err(CliError::Validation(format!(
                    "disturbance dimension {} does not match state dimension {}",
                    d.dim(),
                    problem.state_set.dim()
                )));
            }
        }
        Ok(problem)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateFile {
    pub gain: MatrixRecord,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g_matrix: Option<MatrixRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_matrix: Option<MatrixRecord>,
    pub lambda: f64,
    pub report: VerificationReport,
    pub tool_version: String,
    pub input_digest: String,
}

impl CertificateFile {
    pub fn new(cert: &Certificate, report: VerificationReport, input_digest: String) -> Self {
        Self {
            gain: (&cert.gain).into(),
            g_matrix: cert.g_matrix.as_ref().map(Into::into),
            p_matrix: cert.p_matrix.as_ref().map(Into::into),
            lambda: cert.lambda,
            report,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            input_digest,
        }
    }

    pub fn certificate(&self) -> Result<Certificate, CliError> {
        Ok(Certificate {
            gain: self.gain.to_matrix("gain")?,
            g_matrix: self.g_matrix.as_ref().map(|g| g.to_matrix("g_matrix")).transpose()?,
            p_matrix: self.p_matrix.as_ref().map(|p| p.to_matrix("p_matrix")).transpose()?,
            lambda: self.lambda,
        })
    }
}

/// Settings for `generate`: a plant, the sets, and how to excite it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerateConfig {
    pub model: ModelBlock,
    pub state_set: MatrixRecord,
    pub input_set: MatrixRecord,
    pub lambda: LambdaField,
    pub samples: usize,
    pub seed: u64,
    pub input_range: [f64; 2],
    pub x0: Vec<f64>,
    /// Half-width of a box disturbance applied during the experiment.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub disturbance_radius: Option<f64>,
    #[serde(default)]
    pub description: String,
}

pub fn sha256_digest(bytes: &[u8]) -> String {
    format!("sha256:{}", hex::encode(Sha256::digest(bytes)))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<(T, Vec<u8>), CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let value = serde_json::from_slice(&bytes).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    Ok((value, bytes))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Validation(e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}
