//! CSV ingestion and the versioned JSON model format.

use std::io::Read;
use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{MinPenError, Result};
use crate::fit::{FitResult, StopReason};
use crate::model::{CoefMatrix, Dataset, Family, PenaltySpec, RelationGraph, Standardization};
use crate::scalar::Scalar;

pub const SCHEMA_VERSION: u32 = 1;

/// Which CSV columns play which role.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ColumnSpec {
    /// Response columns, in response order.
    pub responses: Vec<String>,
    /// Trial-count columns paired with `responses` (binomial counts data).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<Vec<String>>,
    /// Predictor columns; defaults to every column not used above.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub predictors: Option<Vec<String>>,
}

/// A dataset together with the column names it was read from.
#[derive(Debug, Clone)]
pub struct LoadedData {
    pub data: Dataset<f64>,
    pub predictors: Vec<String>,
    pub responses: Vec<String>,
}

pub fn read_csv_path(path: &Path, spec: &ColumnSpec, family: Family) -> Result<LoadedData> {
    let file = std::fs::File::open(path)
        .map_err(|e| MinPenError::Data(format!("cannot open {}: {e}", path.display())))?;
    read_csv(file, spec, family)
}

/// Reads a headed, comma-separated table of decimal reals.
pub fn read_csv<R: Read>(reader: R, spec: &ColumnSpec, family: Family) -> Result<LoadedData> {
    if spec.responses.is_empty() {
        return Err(MinPenError::Data("no response columns named".into()));
    }
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| MinPenError::Data(format!("cannot read CSV header: {e}")))?
        .iter()
        .map(str::to_owned)
        .collect();
    let find = |name: &str| -> Result<usize> {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| MinPenError::Data(format!("column '{name}' not found in CSV header")))
    };
    let resp_idx = spec.responses.iter().map(|c| find(c)).collect::<Result<Vec<_>>>()?;
    let trial_idx = match &spec.trials {
        Some(t) => {
            if family != Family::Binomial {
                return Err(MinPenError::Data("trial columns apply to binomial data only".into()));
            }
            if t.len() != spec.responses.len() {
                return Err(MinPenError::Data(format!(
                    "{} trial columns for {} responses",
                    t.len(),
                    spec.responses.len()
                )));
            }
            Some(t.iter().map(|c| find(c)).collect::<Result<Vec<_>>>()?)
        }
        None => None,
    };
    let used: Vec<usize> = resp_idx.iter().chain(trial_idx.iter().flatten()).copied().collect();
    let pred_names: Vec<String> = match &spec.predictors {
        Some(p) => p.clone(),
        None => header
            .iter()
            .enumerate()
            .filter(|(i, _)| !used.contains(i))
            .map(|(_, h)| h.clone())
            .collect(),
    };
    let pred_idx = pred_names.iter().map(|c| find(c)).collect::<Result<Vec<_>>>()?;
    if let Some(&dup) = pred_idx.iter().find(|i| used.contains(i)) {
        return Err(MinPenError::Data(format!("column '{}' is both predictor and response", header[dup])));
    }
    if pred_idx.is_empty() {
        return Err(MinPenError::Data("no predictor columns".into()));
    }

    let (mut xs, mut ys, mut ts) = (Vec::new(), Vec::new(), Vec::new());
    let mut rows = 0usize;
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| MinPenError::Data(format!("CSV record {}: {e}", line + 1)))?;
        let cell = |i: usize| -> Result<f64> {
            let raw = rec.get(i).unwrap_or("");
            raw.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| {
                    MinPenError::Data(format!(
                        "row {}, column '{}': '{raw}' is not a finite number",
                        line + 1,
                        header[i]
                    ))
                })
        };
        for &i in &pred_idx {
            xs.push(cell(i)?);
        }
        for &i in &resp_idx {
            ys.push(cell(i)?);
        }
        if let Some(t) = &trial_idx {
            for &i in t {
                ts.push(cell(i)?);
            }
        }
        rows += 1;
    }
    let shape = |v: Vec<f64>, cols: usize| {
        Array2::from_shape_vec((rows, cols), v).map_err(|e| MinPenError::Data(e.to_string()))
    };
    let x = shape(xs, pred_idx.len())?;
    let y = shape(ys, resp_idx.len())?;
    let data = match trial_idx {
        Some(t) => Dataset::with_trials(x, y, shape(ts, t.len())?),
        None => Dataset::new(x, y, family),
    }
    .map_err(|e| MinPenError::Data(e.to_string()))?;
    Ok(LoadedData {
        data,
        predictors: pred_names,
        responses: spec.responses.clone(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardizationJson {
    pub column_means: Vec<f64>,
    pub column_scales: Vec<f64>,
    pub response_means: Option<Vec<f64>>,
}

/// On-disk form of a [`FitResult`]. Matrices are row-major nested arrays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResultJson {
    pub schema_version: u32,
    pub family: Family,
    pub p: usize,
    pub r: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub predictors: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub responses: Option<Vec<String>>,
    pub penalty: PenaltySpec<f64>,
    /// `"raw"` or `"standardized"`.
    pub coef_scale: String,
    /// `p x r`, row `j` holds predictor `j`.
    pub coefficients: Vec<Vec<f64>>,
    pub intercepts: Option<Vec<f64>>,
    /// Working-scale solution; `(p+1) x r` with intercepts in row 0 for binomial fits.
    pub working: Vec<Vec<f64>>,
    pub standardization: Option<StandardizationJson>,
    pub graph: RelationGraph,
    pub objective: f64,
    pub objective_trace: Vec<f64>,
    pub outer_iters: usize,
    pub converged: bool,
    pub stop_reason: StopReason,
}

fn rows_of<F: Scalar>(a: &Array2<F>) -> Vec<Vec<f64>> {
    a.outer_iter().map(|r| r.iter().map(|v| v.as_f64()).collect()).collect()
}

fn vec_of<F: Scalar>(a: &Array1<F>) -> Vec<f64> {
    a.iter().map(|v| v.as_f64()).collect()
}

fn matrix_from<F: Scalar>(rows: &[Vec<f64>], shape: (usize, usize), what: &str) -> Result<Array2<F>> {
    if rows.len() != shape.0 || rows.iter().any(|r| r.len() != shape.1) {
        return Err(MinPenError::Data(format!("{what} must be {}x{}", shape.0, shape.1)));
    }
    Ok(Array2::from_shape_fn(shape, |(i, j)| F::lit(rows[i][j])))
}

fn array_from<F: Scalar>(v: &[f64], len: usize, what: &str) -> Result<Array1<F>> {
    if v.len() != len {
        return Err(MinPenError::Data(format!("{what} must have length {len}")));
    }
    Ok(v.iter().map(|&x| F::lit(x)).collect())
}

impl FitResultJson {
    pub fn from_fit<F: Scalar>(
        fit: &FitResult<F>,
        report_standardized: bool,
        predictors: Option<Vec<String>>,
        responses: Option<Vec<String>>,
    ) -> Self {
        let st = fit.standardization.as_ref().map(|s| StandardizationJson {
            column_means: vec_of(&s.column_means),
            column_scales: vec_of(&s.column_scales),
            response_means: s.response_means.as_ref().map(vec_of),
        });
        let raw = st.is_some() && !report_standardized;
        Self {
            schema_version: SCHEMA_VERSION,
            family: fit.family,
            p: fit.coef.p(),
            r: fit.coef.r(),
            predictors,
            responses,
            penalty: PenaltySpec {
                delta: fit.pen.delta.as_f64(),
                gamma: fit.pen.gamma.as_f64(),
            },
            coef_scale: if raw || st.is_none() { "raw" } else { "standardized" }.into(),
            coefficients: rows_of(&fit.coef.coefficients),
            intercepts: fit.coef.intercepts.as_ref().map(vec_of),
            working: rows_of(&fit.working),
            standardization: st,
            graph: fit.graph.clone(),
            objective: fit.objective.as_f64(),
            objective_trace: fit.objective_trace.iter().map(|v| v.as_f64()).collect(),
            outer_iters: fit.outer_iters,
            converged: fit.converged,
            stop_reason: fit.stop_reason,
        }
    }

    pub fn report_standardized(&self) -> bool {
        self.coef_scale == "standardized"
    }

    pub fn to_fit<F: Scalar>(&self) -> Result<FitResult<F>> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(MinPenError::Data(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.coef_scale != "raw" && self.coef_scale != "standardized" {
            return Err(MinPenError::Data(format!("unknown coef_scale '{}'", self.coef_scale)));
        }
        let (p, r) = (self.p, self.r);
        if self.graph.r() != r {
            return Err(MinPenError::Data("graph size differs from r".into()));
        }
        let coefficients = matrix_from(&self.coefficients, (p, r), "coefficients")?;
        let coef = match &self.intercepts {
            Some(a) => CoefMatrix::with_intercepts(coefficients, array_from(a, r, "intercepts")?),
            None => CoefMatrix::new(coefficients),
        };
        let wrows = match self.family {
            Family::Gaussian => p,
            Family::Binomial => p + 1,
        };
        let standardization = match &self.standardization {
            Some(s) => Some(Standardization {
                column_means: array_from(&s.column_means, p, "column_means")?,
                column_scales: array_from(&s.column_scales, p, "column_scales")?,
                response_means: match &s.response_means {
                    Some(m) => Some(array_from(m, r, "response_means")?),
                    None => None,
                },
            }),
            None => None,
        };
        Ok(FitResult {
            family: self.family,
            coef,
            working: matrix_from(&self.working, (wrows, r), "working")?,
            standardization,
            graph: self.graph.clone(),
            pen: PenaltySpec::new(F::lit(self.penalty.delta), F::lit(self.penalty.gamma))?,
            objective: F::lit(self.objective),
            objective_trace: self.objective_trace.iter().map(|&v| F::lit(v)).collect(),
            outer_iters: self.outer_iters,
            converged: self.converged,
            stop_reason: self.stop_reason,
        })
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("model JSON serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| MinPenError::Data(format!("model JSON: {e}")))
    }
}

/// Reads a relation graph stored as an `r x r` JSON integer matrix.
pub fn graph_from_json(text: &str) -> Result<RelationGraph> {
    serde_json::from_str(text).map_err(|e| MinPenError::Data(format!("graph JSON: {e}")))
}

/// Reads a square matrix from a headerless CSV (e.g. a known `Σ`).
pub fn read_matrix_csv<R: Read>(reader: R) -> Result<Array2<f64>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| MinPenError::Data(format!("matrix row {}: {e}", line + 1)))?;
        let row = rec
            .iter()
            .map(|c| c.parse::<f64>().ok().filter(|v| v.is_finite()))
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| MinPenError::Data(format!("matrix row {} has a non-numeric entry", line + 1)))?;
        rows.push(row);
    }
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(MinPenError::Data("matrix CSV must be square and nonempty".into()));
    }
    Ok(Array2::from_shape_fn((n, n), |(i, j)| rows[i][j]))
}
