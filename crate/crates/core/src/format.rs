//! JSON documents: model files, certificates and analysis reports.
//!
//! Models are objects with `nu`, `dims`, `r`, row-major `A` and optional
//! `B`, `C`, `D`; unknown fields are rejected. Complex matrices are stored as
//! `{"re": [[...]], "im": [[...]]}` so certificates round-trip losslessly.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::lmi::{CertificateForm, Multiplier, StabilityCertificate, VerificationReport};
use crate::model::{CMatrix, ComplexPoint, HybridRoesserModel, RMatrix};

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),

    #[error("matrix `{name}`: {detail}")]
    Matrix { name: String, detail: String },

    #[error("invalid model: {0}")]
    Model(#[from] crate::error::Error),

    #[error("certificate: {0}")]
    Certificate(String),
}

type Rows = Vec<Vec<f64>>;

fn rows_to_matrix(name: &str, rows: &Rows) -> Result<RMatrix, FormatError> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if let Some(bad) = rows.iter().position(|r| r.len() != ncols) {
        return Err(FormatError::Matrix {
            name: name.to_string(),
            detail: format!(
                "row {bad} has {} entries, expected {ncols}",
                rows[bad].len()
            ),
        });
    }
    Ok(RMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

fn matrix_to_rows(m: &RMatrix) -> Rows {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

/// On-disk model. Field order is the canonical serialization order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub nu: f64,
    pub dims: Vec<usize>,
    pub r: usize,
    #[serde(rename = "A")]
    pub a: Rows,
    #[serde(rename = "B", default, skip_serializing_if = "Option::is_none")]
    pub b: Option<Rows>,
    #[serde(rename = "C", default, skip_serializing_if = "Option::is_none")]
    pub c: Option<Rows>,
    #[serde(rename = "D", default, skip_serializing_if = "Option::is_none")]
    pub d: Option<Rows>,
}

impl ModelFile {
    pub fn from_model(m: &HybridRoesserModel) -> Self {
        Self {
            nu: m.nu(),
            dims: m.dims().to_vec(),
            r: m.r(),
            a: matrix_to_rows(m.a()),
            b: m.b().map(matrix_to_rows),
            c: m.c().map(matrix_to_rows),
            d: m.d().map(matrix_to_rows),
        }
    }

    pub fn into_model(self) -> Result<HybridRoesserModel, FormatError> {
        let opt = |name: &str, rows: &Option<Rows>| -> Result<Option<RMatrix>, FormatError> {
            rows.as_ref().map(|r| rows_to_matrix(name, r)).transpose()
        };
        let a = rows_to_matrix("A", &self.a)?;
        let b = opt("B", &self.b)?;
        let c = opt("C", &self.c)?;
        let d = opt("D", &self.d)?;
        Ok(HybridRoesserModel::with_io(
            self.nu, self.dims, self.r, a, b, c, d,
        )?)
    }
}

pub fn parse_model(text: &str) -> Result<HybridRoesserModel, FormatError> {
    serde_json::from_str::<ModelFile>(text)?.into_model()
}

/// Compact, byte-stable serialization of a model.
pub fn canonical_model_json(m: &HybridRoesserModel) -> String {
    serde_json::to_string(&ModelFile::from_model(m)).expect("model serializes")
}

/// SHA-256 of the canonical serialization, hex encoded.
pub fn model_fingerprint(m: &HybridRoesserModel) -> String {
    let digest = Sha256::digest(canonical_model_json(m).as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComplexMatrixJson {
    pub re: Rows,
    #[serde(default)]
    pub im: Rows,
}

impl ComplexMatrixJson {
    pub fn from_matrix(m: &CMatrix) -> Self {
        Self {
            re: matrix_to_rows(&m.map(|v| v.re)),
            im: matrix_to_rows(&m.map(|v| v.im)),
        }
    }

    pub fn to_matrix(&self, name: &str) -> Result<CMatrix, FormatError> {
        let re = rows_to_matrix(name, &self.re)?;
        // an empty `im` means a real matrix
        let im = if self.im.is_empty() {
            RMatrix::zeros(re.nrows(), re.ncols())
        } else {
            rows_to_matrix(name, &self.im)?
        };
        if re.shape() != im.shape() {
            return Err(FormatError::Matrix {
                name: name.to_string(),
                detail: "re and im parts differ in shape".into(),
            });
        }
        Ok(re.zip_map(&im, Complex64::new))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificateJson {
    pub form: CertificateForm,
    #[serde(rename = "U")]
    pub u: Vec<ComplexMatrixJson>,
    #[serde(rename = "V")]
    pub v: Vec<ComplexMatrixJson>,
    #[serde(rename = "J", default, skip_serializing_if = "Option::is_none")]
    pub j: Option<ComplexMatrixJson>,
    #[serde(rename = "R", default, skip_serializing_if = "Option::is_none")]
    pub r: Option<ComplexMatrixJson>,
}

impl CertificateJson {
    pub fn from_certificate(c: &StabilityCertificate) -> Self {
        let (j, r) = match &c.multiplier {
            Multiplier::J(j) => (Some(ComplexMatrixJson::from_matrix(j)), None),
            Multiplier::R(r) => (None, Some(ComplexMatrixJson::from_matrix(r))),
        };
        Self {
            form: c.form,
            u: c.u.iter().map(ComplexMatrixJson::from_matrix).collect(),
            v: c.v.iter().map(ComplexMatrixJson::from_matrix).collect(),
            j,
            r,
        }
    }

    pub fn to_certificate(&self) -> Result<StabilityCertificate, FormatError> {
        let blocks =
            |prefix: &str, list: &[ComplexMatrixJson]| -> Result<Vec<CMatrix>, FormatError> {
                list.iter()
                    .enumerate()
                    .map(|(i, m)| m.to_matrix(&format!("{prefix}{}", i + 1)))
                    .collect()
            };
        let multiplier = match (&self.j, &self.r, self.form) {
            (Some(j), None, CertificateForm::Theorem2 | CertificateForm::Corollary1) => {
                Multiplier::J(j.to_matrix("J")?)
            }
            (None, Some(r), CertificateForm::Corollary2) => Multiplier::R(r.to_matrix("R")?),
            _ => {
                return Err(FormatError::Certificate(format!(
                    "form {} needs exactly one of `J` (theorem2, corollary1) or `R` (corollary2)",
                    self.form
                )))
            }
        };
        Ok(StabilityCertificate {
            form: self.form,
            u: blocks("U", &self.u)?,
            v: blocks("V", &self.v)?,
            multiplier,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    CertifiedStable,
    NotCertified,
    FalsifiedUnstable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointJson {
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl PointJson {
    pub fn from_point(p: &ComplexPoint) -> Self {
        Self {
            re: p.coords().iter().map(|c| c.re).collect(),
            im: p.coords().iter().map(|c| c.im).collect(),
        }
    }

    pub fn to_point(&self) -> ComplexPoint {
        ComplexPoint::new(
            self.re
                .iter()
                .zip(&self.im)
                .map(|(&a, &b)| Complex64::new(a, b))
                .collect(),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanSummary {
    pub samples: usize,
    pub min_abs_delta: f64,
    pub argmin: PointJson,
    pub threshold: f64,
    pub falsified: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecaySummary {
    pub h: f64,
    pub steps_t: usize,
    pub steps_j: usize,
    pub tail_fraction: f64,
    pub ratio: f64,
    pub m_head: f64,
    pub m_tail: f64,
    pub decays: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MembershipResult {
    pub point: PointJson,
    pub in_region: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OracleSummaries {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scan: Option<ScanSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decay: Option<DecaySummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub total_ms: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synthesis_ms: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scan_ms: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulation_ms: Option<f64>,
}

/// Single JSON document written by every subcommand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub fingerprint: String,
    pub command: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verdict: Option<Verdict>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificate: Option<CertificateJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residuals: Option<VerificationReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synthesis_slack: Option<f64>,
    pub oracles: OracleSummaries,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub membership: Vec<MembershipResult>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    pub version: String,
    pub timings: Timings,
}

/// Accepts either a bare certificate or a report that embeds one.
pub fn parse_certificate(text: &str) -> Result<StabilityCertificate, FormatError> {
    let value: serde_json::Value = serde_json::from_str(text)?;
    let cert_value = match value.get("certificate") {
        Some(c) if value.get("fingerprint").is_some() => c.clone(),
        _ => value,
    };
    serde_json::from_value::<CertificateJson>(cert_value)?.to_certificate()
}
