//! File formats: JSON for problems, traces, oracle results, and bound
//! reports; CSV summaries for plotting.
//!
//! All writes go through a temp-file-and-rename so a crash cannot leave a
//! half-written file. Numbers round-trip exactly: serde_json emits the
//! shortest representation that parses back to the same float.

use std::fs;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::algebra::{AlgebraElement, MeasureSpace, ToleranceConfig};
use crate::bounds::BoundReport;
use crate::error::{Error, Result};
use crate::linalg::{FunctionMatrix, FunctionVector};
use crate::oracle::{OracleResult, SampleTrace};
use crate::problem::{Problem, ProblemMetadata};
use crate::solver::{CgIterationRecord, CgOutcome, CgVerdict};

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Writes bytes to a temp file in the same directory, then renames over the
/// destination.
fn atomic_write(path: &Path, contents: &str) -> Result<()> {
    let tmp = path.with_extension(format!("tmp.{}", std::process::id()));
    fs::write(&tmp, contents).map_err(|e| io_err(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| io_err(path, e))
}

fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| io_err(path, e))
}

fn parse_err(path: &Path, err: serde_json::Error) -> Error {
    Error::Parse {
        path: path.display().to_string(),
        detail: err.to_string(),
    }
}

#[derive(Serialize, Deserialize)]
struct SpaceJson {
    weights: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    labels: Option<Vec<String>>,
}

impl SpaceJson {
    fn from_space(space: &MeasureSpace) -> Self {
        Self {
            weights: space.weights().to_vec(),
            labels: space.labels().map(|l| l.to_vec()),
        }
    }

    fn into_space(self) -> Result<Arc<MeasureSpace>> {
        MeasureSpace::new(self.weights, self.labels)
    }
}

fn vector_to_json(v: &FunctionVector) -> Vec<Vec<f64>> {
    v.entries().iter().map(|e| e.values().to_vec()).collect()
}

fn vector_from_json(
    space: &Arc<MeasureSpace>,
    data: Vec<Vec<f64>>,
    field: &str,
) -> Result<FunctionVector> {
    let entries = data
        .into_iter()
        .map(|values| AlgebraElement::from_values(space, values))
        .collect::<Result<Vec<_>>>()
        .map_err(|e| Error::Validation {
            field: field.into(),
            detail: e.to_string(),
        })?;
    FunctionVector::new(entries).map_err(|e| Error::Validation {
        field: field.into(),
        detail: e.to_string(),
    })
}

#[derive(Serialize, Deserialize)]
struct ProblemJson {
    space: SpaceJson,
    n: usize,
    #[serde(rename = "A")]
    a: Vec<Vec<Vec<f64>>>,
    b: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    x0: Option<Vec<Vec<f64>>>,
    metadata: ProblemMetadata,
}

pub fn save_problem(path: impl AsRef<Path>, problem: &Problem) -> Result<()> {
    let n = problem.n();
    let json = ProblemJson {
        space: SpaceJson::from_space(&problem.space),
        n,
        a: (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| problem.a.get(i, j).values().to_vec())
                    .collect()
            })
            .collect(),
        b: vector_to_json(&problem.b),
        x0: problem.x0.as_ref().map(vector_to_json),
        metadata: problem.metadata.clone(),
    };
    let text = serde_json::to_string_pretty(&json).expect("problem serialization cannot fail");
    atomic_write(path.as_ref(), &text)
}

/// Loads a problem and, unless `skip_validate` is set, checks symmetry and
/// positive definiteness of the coefficient matrix.
pub fn load_problem(path: impl AsRef<Path>, skip_validate: bool) -> Result<Problem> {
    let path = path.as_ref();
    let text = read_to_string(path)?;
    let json: ProblemJson = serde_json::from_str(&text).map_err(|e| parse_err(path, e))?;

    let space = json.space.into_space()?;
    if json.a.len() != json.n {
        return Err(Error::Validation {
            field: "A".into(),
            detail: format!("expected {} rows, found {}", json.n, json.a.len()),
        });
    }
    let mut rows = Vec::with_capacity(json.n);
    for (i, row) in json.a.into_iter().enumerate() {
        if row.len() != json.n {
            return Err(Error::Validation {
                field: format!("A[{i}]"),
                detail: format!("expected {} columns, found {}", json.n, row.len()),
            });
        }
        let entries = row
            .into_iter()
            .map(|values| AlgebraElement::from_values(&space, values))
            .collect::<Result<Vec<_>>>()
            .map_err(|e| Error::Validation {
                field: format!("A[{i}]"),
                detail: e.to_string(),
            })?;
        rows.push(entries);
    }
    let a = FunctionMatrix::from_rows(rows).map_err(|e| Error::Validation {
        field: "A".into(),
        detail: e.to_string(),
    })?;

    if json.b.len() != json.n {
        return Err(Error::Validation {
            field: "b".into(),
            detail: format!("expected {} entries, found {}", json.n, json.b.len()),
        });
    }
    let b = vector_from_json(&space, json.b, "b")?;
    let x0 = match json.x0 {
        Some(data) => {
            if data.len() != json.n {
                return Err(Error::Validation {
                    field: "x0".into(),
                    detail: format!("expected {} entries, found {}", json.n, data.len()),
                });
            }
            Some(vector_from_json(&space, data, "x0")?)
        }
        None => None,
    };

    if !skip_validate {
        let tol = ToleranceConfig::default();
        if !a.is_symmetric(&tol) {
            return Err(Error::Validation {
                field: "A.symmetry".into(),
                detail: "matrix is not symmetric almost everywhere".into(),
            });
        }
        if !a.is_positive_definite(&tol) {
            return Err(Error::Validation {
                field: "A.positive_definite".into(),
                detail: "a sample matrix has an eigenvalue at or below tolerance".into(),
            });
        }
    }

    Ok(Problem {
        space,
        a,
        b,
        x0,
        metadata: json.metadata,
    })
}

#[derive(Serialize, Deserialize)]
struct RecordJson {
    k: usize,
    x: Vec<Vec<f64>>,
    r: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    p: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    alpha: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    beta: Option<Vec<f64>>,
    alpha_feasible: bool,
    alpha_negative: bool,
    alpha_witnesses: Vec<usize>,
    residual_sup: f64,
    failure_set: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct TraceJson {
    space: SpaceJson,
    n: usize,
    verdict: CgVerdict,
    records: Vec<RecordJson>,
    final_x: Vec<Vec<f64>>,
}

pub fn save_trace(path: impl AsRef<Path>, outcome: &CgOutcome) -> Result<()> {
    let space = outcome.final_x.space();
    let json = TraceJson {
        space: SpaceJson::from_space(space),
        n: outcome.final_x.len(),
        verdict: outcome.verdict.clone(),
        records: outcome
            .records
            .iter()
            .map(|rec| RecordJson {
                k: rec.k,
                x: vector_to_json(&rec.x),
                r: vector_to_json(&rec.r),
                p: rec.p.as_ref().map(vector_to_json),
                alpha: rec.alpha.as_ref().map(|a| a.values().to_vec()),
                beta: rec.beta.as_ref().map(|b| b.values().to_vec()),
                alpha_feasible: rec.alpha_feasible,
                alpha_negative: rec.alpha_negative,
                alpha_witnesses: rec.alpha_witnesses.clone(),
                residual_sup: rec.residual_sup,
                failure_set: rec.failure_set.clone(),
            })
            .collect(),
        final_x: vector_to_json(&outcome.final_x),
    };
    let text = serde_json::to_string_pretty(&json).expect("trace serialization cannot fail");
    atomic_write(path.as_ref(), &text)
}

pub fn load_trace(path: impl AsRef<Path>) -> Result<CgOutcome> {
    let path = path.as_ref();
    let text = read_to_string(path)?;
    let json: TraceJson = serde_json::from_str(&text).map_err(|e| parse_err(path, e))?;
    let space = json.space.into_space()?;

    let element = |data: Option<Vec<f64>>, field: &str| -> Result<Option<AlgebraElement>> {
        data.map(|values| {
            AlgebraElement::from_values(&space, values).map_err(|e| Error::Validation {
                field: field.into(),
                detail: e.to_string(),
            })
        })
        .transpose()
    };

    let mut records = Vec::with_capacity(json.records.len());
    for rec in json.records {
        records.push(CgIterationRecord {
            k: rec.k,
            x: vector_from_json(&space, rec.x, "records.x")?,
            r: vector_from_json(&space, rec.r, "records.r")?,
            p: rec
                .p
                .map(|p| vector_from_json(&space, p, "records.p"))
                .transpose()?,
            alpha: element(rec.alpha, "records.alpha")?,
            beta: element(rec.beta, "records.beta")?,
            alpha_feasible: rec.alpha_feasible,
            alpha_negative: rec.alpha_negative,
            alpha_witnesses: rec.alpha_witnesses,
            residual_sup: rec.residual_sup,
            failure_set: rec.failure_set,
        });
    }
    if records.is_empty() {
        return Err(Error::Validation {
            field: "records".into(),
            detail: "a trace holds at least the step-zero record".into(),
        });
    }
    Ok(CgOutcome {
        verdict: json.verdict,
        records,
        final_x: vector_from_json(&space, json.final_x, "final_x")?,
    })
}

#[derive(Serialize, Deserialize)]
struct OracleJson {
    space: SpaceJson,
    n: usize,
    solutions: Vec<Vec<f64>>,
    traces: Vec<SampleTrace>,
}

pub fn save_oracle(path: impl AsRef<Path>, oracle: &OracleResult) -> Result<()> {
    let json = OracleJson {
        space: SpaceJson::from_space(oracle.solutions.space()),
        n: oracle.solutions.len(),
        solutions: vector_to_json(&oracle.solutions),
        traces: oracle.traces.clone(),
    };
    let text = serde_json::to_string_pretty(&json).expect("oracle serialization cannot fail");
    atomic_write(path.as_ref(), &text)
}

pub fn load_oracle(path: impl AsRef<Path>) -> Result<OracleResult> {
    let path = path.as_ref();
    let text = read_to_string(path)?;
    let json: OracleJson = serde_json::from_str(&text).map_err(|e| parse_err(path, e))?;
    let space = json.space.into_space()?;
    Ok(OracleResult {
        solutions: vector_from_json(&space, json.solutions, "solutions")?,
        traces: json.traces,
    })
}

pub fn save_bound_report(path: impl AsRef<Path>, report: &BoundReport) -> Result<()> {
    let text = serde_json::to_string_pretty(report).expect("report serialization cannot fail");
    atomic_write(path.as_ref(), &text)
}

pub fn load_bound_report(path: impl AsRef<Path>) -> Result<BoundReport> {
    let path = path.as_ref();
    let text = read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| parse_err(path, e))
}

/// CSV of the rate report: one row per iteration with the measured error
/// sup, the theoretical envelope, and the margin.
pub fn save_bound_csv(path: impl AsRef<Path>, report: &BoundReport) -> Result<()> {
    let mut text = String::from("k,lhs_sup,rhs,margin\n");
    for row in &report.per_k {
        text.push_str(&format!(
            "{},{:e},{:e},{:e}\n",
            row.k, row.lhs_sup, row.rhs, row.margin
        ));
    }
    atomic_write(path.as_ref(), &text)
}

/// CSV summary of a trace: residual per step, plus the A-norm error sup when
/// the true solution is supplied.
pub fn save_trace_csv(
    path: impl AsRef<Path>,
    outcome: &CgOutcome,
    truth: Option<(&FunctionMatrix, &FunctionVector)>,
) -> Result<()> {
    let mut text = String::from("k,residual_sup,error_a_sup\n");
    for rec in &outcome.records {
        let error = match truth {
            Some((a, x_star)) => {
                let diff = x_star.sub(&rec.x)?;
                format!("{:e}", a.a_norm_pointwise(&diff)?.sup_over_space())
            }
            None => String::new(),
        };
        text.push_str(&format!("{},{:e},{}\n", rec.k, rec.residual_sup, error));
    }
    atomic_write(path.as_ref(), &text)
}
