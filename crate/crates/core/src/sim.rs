//! Simulation designs, metrics and replication studies.

use std::fmt;

use ndarray::{s, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::binom::{clamp_prob, logistic, predict_probs};
use crate::error::{MinPenError, Result};
use crate::fit::{FitResult, Problem, SolverConfig};
use crate::model::{Dataset, Family, PenaltySpec, RelationGraph};
use crate::relations::update_sets_view;
use crate::tuning::{log_path, split_select_mode, FitMode, TuneGrid, DEFAULT_GAMMAS, DEFAULT_PATH_LEN, DEFAULT_PATH_RATIO};

/// Coefficients at or below this magnitude count as not selected.
pub const SELECTION_THRESHOLD: f64 = 1e-8;
pub const DEFAULT_RESPONSES: usize = 15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DesignKind {
    /// Three 10-row blocks of signed, nearly equal coefficients.
    Block,
    /// Shifted supports of alternating sign.
    Overlap,
    /// Block coefficients with Bernoulli responses.
    BinomBlock,
}

impl fmt::Display for DesignKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DesignKind::Block => "block",
            DesignKind::Overlap => "overlap",
            DesignKind::BinomBlock => "binom_block",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimDesign {
    pub kind: DesignKind,
    pub p: usize,
    /// Training (and test) sample size.
    pub n: usize,
    pub r: usize,
    pub eta: f64,
    pub lambda: f64,
    pub v: usize,
    pub rho: f64,
    pub n_val: usize,
    /// Generate `Y = X B` with no noise (Gaussian designs).
    pub zero_noise: bool,
}

impl SimDesign {
    pub fn block(p: usize, n: usize, eta: f64, lambda: f64) -> Self {
        Self {
            kind: DesignKind::Block,
            p,
            n,
            r: DEFAULT_RESPONSES,
            eta,
            lambda,
            v: 0,
            rho: 0.7,
            n_val: 1000,
            zero_noise: false,
        }
    }

    pub fn overlap(p: usize, n: usize, v: usize) -> Self {
        Self {
            kind: DesignKind::Overlap,
            v,
            ..Self::block(p, n, 0.0, 0.0)
        }
    }

    pub fn binom_block(p: usize, n: usize, eta: f64, lambda: f64) -> Self {
        Self {
            kind: DesignKind::BinomBlock,
            ..Self::block(p, n, eta, lambda)
        }
    }

    pub fn family(&self) -> Family {
        match self.kind {
            DesignKind::BinomBlock => Family::Binomial,
            _ => Family::Gaussian,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.p == 0 || self.p % 4 != 0 {
            return Err(MinPenError::InvalidInput(format!(
                "p must be a positive multiple of 4, got {}",
                self.p
            )));
        }
        if self.n < 2 || self.n_val < 1 {
            return Err(MinPenError::InvalidInput("need n >= 2 and n_val >= 1".into()));
        }
        if !(self.rho > -1.0 / 3.0 && self.rho < 1.0) {
            return Err(MinPenError::InvalidInput(format!(
                "rho must lie in (-1/3, 1) for a positive definite block, got {}",
                self.rho
            )));
        }
        if !self.eta.is_finite() || !self.lambda.is_finite() {
            return Err(MinPenError::InvalidInput("eta and lambda must be finite".into()));
        }
        match self.kind {
            DesignKind::Block | DesignKind::BinomBlock => {
                if self.r != DEFAULT_RESPONSES {
                    return Err(MinPenError::InvalidInput("block designs have r = 15".into()));
                }
                if self.p < 30 {
                    return Err(MinPenError::InvalidInput(format!("block designs need p >= 30, got {}", self.p)));
                }
            }
            DesignKind::Overlap => {
                if self.r == 0 || self.v * (self.r - 1) + 10 > self.p {
                    return Err(MinPenError::InvalidInput(format!(
                        "overlap supports need v(r-1)+10 <= p (v = {}, r = {}, p = {})",
                        self.v, self.r, self.p
                    )));
                }
            }
        }
        Ok(())
    }

    /// Settings outside the grid the designs were originally studied on.
    pub fn extrapolation_notes(&self) -> Vec<String> {
        let mut notes = Vec::new();
        match self.kind {
            DesignKind::Block | DesignKind::BinomBlock => {
                if ![40, 100, 300].contains(&self.p) {
                    notes.push(format!("p = {} outside {{40, 100, 300}}", self.p));
                }
                if ![0.5, 1.0].contains(&self.eta) {
                    notes.push(format!("eta = {} outside {{0.5, 1.0}}", self.eta));
                }
                if ![0.02, 0.05, 0.10].contains(&self.lambda) {
                    notes.push(format!("lambda = {} outside {{0.02, 0.05, 0.10}}", self.lambda));
                }
            }
            DesignKind::Overlap => {
                if ![100, 300].contains(&self.p) {
                    notes.push(format!("p = {} outside {{100, 300}}", self.p));
                }
                if ![0, 2, 4].contains(&self.v) {
                    notes.push(format!("v = {} outside {{0, 2, 4}}", self.v));
                }
            }
        }
        if self.n != 100 {
            notes.push(format!("n = {} differs from 100", self.n));
        }
        if self.rho != 0.7 {
            notes.push(format!("rho = {} differs from 0.7", self.rho));
        }
        notes
    }

    /// True coefficient matrix of the design.
    pub fn truth(&self) -> Result<Array2<f64>> {
        self.validate()?;
        match self.kind {
            DesignKind::Block | DesignKind::BinomBlock => gen_block_b(self.p, self.eta, self.lambda),
            DesignKind::Overlap => gen_overlap_b(self.p, self.v, self.r),
        }
    }
}

/// Rows drawn i.i.d. from `N(0, Σ_x)`, `Σ_x` block diagonal with 4x4 blocks
/// of unit diagonal and off-diagonal `rho`.
pub fn gen_predictors<R: Rng + ?Sized>(n: usize, p: usize, rho: f64, rng: &mut R) -> Result<Array2<f64>> {
    if p == 0 || p % 4 != 0 {
        return Err(MinPenError::InvalidInput(format!("p must be a positive multiple of 4, got {p}")));
    }
    if !(rho > -1.0 / 3.0 && rho < 1.0) {
        return Err(MinPenError::InvalidInput(format!("rho must lie in (-1/3, 1), got {rho}")));
    }
    let block = Array2::from_shape_fn((4, 4), |(a, b)| if a == b { 1.0 } else { rho });
    let l = lower_cholesky(&block);
    let mut x = Array2::<f64>::zeros((n, p));
    let mut z = [0.0f64; 4];
    for i in 0..n {
        for b in 0..p / 4 {
            for v in z.iter_mut() {
                *v = rng.sample(StandardNormal);
            }
            for a in 0..4 {
                x[[i, 4 * b + a]] = (0..=a).map(|c| l[[a, c]] * z[c]).sum();
            }
        }
    }
    Ok(x)
}

fn lower_cholesky(a: &Array2<f64>) -> Array2<f64> {
    let n = a.nrows();
    let mut l = Array2::<f64>::zeros((n, n));
    for j in 0..n {
        let d = a[[j, j]] - (0..j).map(|k| l[[j, k]] * l[[j, k]]).sum::<f64>();
        l[[j, j]] = d.sqrt();
        for i in j + 1..n {
            l[[i, j]] = (a[[i, j]] - (0..j).map(|k| l[[i, k]] * l[[j, k]]).sum::<f64>()) / l[[j, j]];
        }
    }
    l
}

/// Coefficient pattern of one block: `(−η−λ, η, η+λ, −η−2λ, η+3λ)`.
pub fn block_pattern(eta: f64, lambda: f64) -> [f64; 5] {
    [-eta - lambda, eta, eta + lambda, -eta - 2.0 * lambda, eta + 3.0 * lambda]
}

/// `p x 15` matrix with the block pattern on rows `10b..10b+10`, columns
/// `5b..5b+5` for `b = 0, 1, 2`.
pub fn gen_block_b(p: usize, eta: f64, lambda: f64) -> Result<Array2<f64>> {
    if p < 30 {
        return Err(MinPenError::InvalidInput(format!("block coefficients need p >= 30, got {p}")));
    }
    let pat = block_pattern(eta, lambda);
    let mut b = Array2::<f64>::zeros((p, DEFAULT_RESPONSES));
    for blk in 0..3 {
        for (c, &val) in pat.iter().enumerate() {
            b.slice_mut(s![10 * blk..10 * blk + 10, 5 * blk + c]).fill(val);
        }
    }
    Ok(b)
}

/// `p x r` matrix whose column `k` (1-based) is `(−1)^k 0.5` on rows
/// `v(k−1)+1 ..= v(k−1)+10` (1-based).
pub fn gen_overlap_b(p: usize, v: usize, r: usize) -> Result<Array2<f64>> {
    if r == 0 || v * (r - 1) + 10 > p {
        return Err(MinPenError::InvalidInput(format!(
            "overlap supports need v(r-1)+10 <= p (v = {v}, r = {r}, p = {p})"
        )));
    }
    let mut b = Array2::<f64>::zeros((p, r));
    for k in 0..r {
        let val = if (k + 1) % 2 == 0 { 0.5 } else { -0.5 };
        b.slice_mut(s![v * k..v * k + 10, k]).fill(val);
    }
    Ok(b)
}

/// Gaussian: `Y = X B + E` with standard normal errors (none when
/// `zero_noise`). Binomial: Bernoulli draws with success probability
/// `logistic(x_iᵀ β_k)`.
pub fn gen_responses<R: Rng + ?Sized>(
    x: &Array2<f64>,
    b: &Array2<f64>,
    family: Family,
    zero_noise: bool,
    rng: &mut R,
) -> Result<Array2<f64>> {
    if x.ncols() != b.nrows() {
        return Err(MinPenError::DimensionMismatch(format!(
            "X has {} columns but B has {} rows",
            x.ncols(),
            b.nrows()
        )));
    }
    let mean = x.dot(b);
    Ok(match family {
        Family::Gaussian if zero_noise => mean,
        Family::Gaussian => mean.mapv(|m| m + rng.sample::<f64, _>(StandardNormal)),
        Family::Binomial => mean.mapv(|m| if rng.random::<f64>() < logistic(m) { 1.0 } else { 0.0 }),
    })
}

/// Seed of replication `rep`: `splitmix64(splitmix64(seed) ^ rep)`.
pub fn derive_seed(seed: u64, rep: u64) -> u64 {
    splitmix64(splitmix64(seed) ^ rep)
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub spe: f64,
    pub mse: f64,
    pub tp: f64,
    pub fp: f64,
    /// Binomial designs only.
    pub kl: Option<f64>,
}

impl Metrics {
    pub fn named(&self) -> Vec<(&'static str, f64)> {
        let mut out = vec![("spe", self.spe), ("mse", self.mse), ("tp", self.tp), ("fp", self.fp)];
        if let Some(kl) = self.kl {
            out.push(("kl", kl));
        }
        out
    }
}

/// Validation metrics of a fit against the true coefficients. For binomial
/// data predictions are probabilities and KL compares them with the true ones.
pub fn metrics(fit: &FitResult<f64>, truth: &Array2<f64>, val: &Dataset<f64>) -> Result<Metrics> {
    let coef = &fit.coef;
    if coef.coefficients.dim() != truth.dim() || val.p() != truth.nrows() || val.r() != truth.ncols() {
        return Err(MinPenError::DimensionMismatch("fit, truth and validation data differ in shape".into()));
    }
    let (p, r) = truth.dim();
    let nv = val.n();
    let pred = match val.family() {
        Family::Gaussian => coef.linear_predictor(val.x()),
        Family::Binomial => predict_probs(val.x(), coef),
    };
    let spe = val
        .y()
        .iter()
        .zip(pred.iter())
        .map(|(&y, &f)| (y - f) * (y - f))
        .sum::<f64>()
        / (r * nv) as f64;
    let mse = coef
        .coefficients
        .iter()
        .zip(truth.iter())
        .map(|(&a, &b)| (a - b) * (a - b))
        .sum::<f64>()
        / (r * p) as f64;
    let (mut tp, mut pos, mut fp, mut neg) = (0usize, 0usize, 0usize, 0usize);
    for (&est, &tru) in coef.coefficients.iter().zip(truth.iter()) {
        let selected = est.abs() > SELECTION_THRESHOLD;
        if tru != 0.0 {
            pos += 1;
            tp += selected as usize;
        } else {
            neg += 1;
            fp += selected as usize;
        }
    }
    let tp = if pos == 0 { 1.0 } else { tp as f64 / pos as f64 };
    let fp = if neg == 0 { 0.0 } else { fp as f64 / neg as f64 };
    let kl = match val.family() {
        Family::Gaussian => None,
        Family::Binomial => {
            let truth_eta = val.x().dot(truth);
            Some(kl_divergence(pred.view(), truth_eta.mapv(logistic).view()))
        }
    };
    Ok(Metrics { spe, mse, tp, fp, kl })
}

/// `Σ π̂ log(π̂/π*) + (1−π̂) log((1−π̂)/(1−π*))` over all entries, with both
/// probabilities clamped to `[1e-5, 1 − 1e-5]`.
pub fn kl_divergence(est: ndarray::ArrayView2<f64>, truth: ndarray::ArrayView2<f64>) -> f64 {
    est.iter()
        .zip(truth.iter())
        .map(|(&a, &b)| {
            let (a, b) = (clamp_prob(a), clamp_prob(b));
            a * (a / b).ln() + (1.0 - a) * ((1.0 - a) / (1.0 - b)).ln()
        })
        .sum::<f64>()
        .max(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Relation graph estimated with the minimum penalty.
    Minpen,
    /// Relation graph fixed at the set update of the true coefficients.
    TMinpen,
    /// `γ = 0`: separate per-response lasso fits.
    Sen,
}

impl Method {
    pub fn label(self) -> &'static str {
        match self {
            Method::Minpen => "minpen",
            Method::TMinpen => "t_minpen",
            Method::Sen => "sen",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "minpen" => Ok(Method::Minpen),
            "t_minpen" | "tminpen" => Ok(Method::TMinpen),
            "sen" => Ok(Method::Sen),
            other => Err(MinPenError::InvalidInput(format!("unknown method '{other}'"))),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyOptions {
    pub reps: usize,
    pub seed: u64,
    pub methods: Vec<Method>,
    /// γ grid for the fusion methods; `sen` always uses `{0}`.
    pub gammas: Vec<f64>,
    /// Length of the δ path, which runs from the training `δ_max` down to
    /// `path_ratio · δ_max`.
    pub path_len: usize,
    pub path_ratio: f64,
    pub solver: SolverConfig,
}

impl StudyOptions {
    pub fn new(reps: usize, seed: u64, methods: Vec<Method>) -> Self {
        Self {
            reps,
            seed,
            methods,
            gammas: DEFAULT_GAMMAS.to_vec(),
            path_len: DEFAULT_PATH_LEN,
            path_ratio: DEFAULT_PATH_RATIO,
            solver: SolverConfig::default(),
        }
    }
}

/// One replication of one method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepRecord {
    pub method: Method,
    pub rep: usize,
    pub metrics: Option<Metrics>,
    pub chosen: Option<PenaltySpec<f64>>,
    /// Largest increase along the objective trace of the final fit.
    pub max_trace_increase: Option<f64>,
    pub graph: Option<RelationGraph>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub mean: f64,
    pub std_error: f64,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub method: Method,
    pub spe: MetricSummary,
    pub mse: MetricSummary,
    pub tp: MetricSummary,
    pub fp: MetricSummary,
    pub kl: Option<MetricSummary>,
    pub failures: usize,
}

impl MetricsReport {
    fn from_records(method: Method, records: &[&RepRecord]) -> Self {
        let ok: Vec<&Metrics> = records.iter().filter_map(|r| r.metrics.as_ref()).collect();
        let pick = |f: &dyn Fn(&Metrics) -> f64| summarize(ok.iter().map(|m| f(m)).collect());
        let kl = if ok.iter().all(|m| m.kl.is_some()) && !ok.is_empty() {
            Some(pick(&|m| m.kl.unwrap()))
        } else {
            None
        };
        Self {
            method,
            spe: pick(&|m| m.spe),
            mse: pick(&|m| m.mse),
            tp: pick(&|m| m.tp),
            fp: pick(&|m| m.fp),
            kl,
            failures: records.len() - ok.len(),
        }
    }
}

fn summarize(values: Vec<f64>) -> MetricSummary {
    let n = values.len();
    if n == 0 {
        return MetricSummary {
            mean: f64::NAN,
            std_error: f64::NAN,
            values,
        };
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let std_error = if n > 1 {
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
        (var / n as f64).sqrt()
    } else {
        0.0
    };
    MetricSummary { mean, std_error, values }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyResult {
    pub design: SimDesign,
    /// Ordered by replication, then by method label.
    pub records: Vec<RepRecord>,
    /// One report per method, ordered by method label.
    pub reports: Vec<MetricsReport>,
    /// Graph used by `t_minpen`.
    pub true_graph: RelationGraph,
}

impl StudyResult {
    pub fn report(&self, method: Method) -> Option<&MetricsReport> {
        self.reports.iter().find(|r| r.method == method)
    }

    /// Long-format rows `design,method,rep,metric,value`.
    pub fn to_long_csv(&self) -> String {
        let mut out = String::from("design,method,rep,metric,value\n");
        for rec in &self.records {
            if let Some(m) = &rec.metrics {
                for (name, value) in m.named() {
                    out.push_str(&format!("{},{},{},{},{:e}\n", self.design.kind, rec.method, rec.rep, name, value));
                }
            }
        }
        out
    }
}

/// Train, test and validation sets of one replication.
pub struct Replicate {
    pub train: Dataset<f64>,
    pub test: Dataset<f64>,
    pub val: Dataset<f64>,
}

pub fn gen_replicate(design: &SimDesign, truth: &Array2<f64>, seed: u64) -> Result<Replicate> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let family = design.family();
    let mut draw = |n: usize| -> Result<Dataset<f64>> {
        let x = gen_predictors(n, design.p, design.rho, &mut rng)?;
        let y = gen_responses(&x, truth, family, design.zero_noise, &mut rng)?;
        Dataset::new(x, y, family)
    };
    let train = draw(design.n)?;
    let test = draw(design.n)?;
    let val = draw(design.n_val)?;
    Ok(Replicate { train, test, val })
}

fn run_method(
    method: Method,
    rep: usize,
    data: &Replicate,
    truth: &Array2<f64>,
    true_graph: &RelationGraph,
    opts: &StudyOptions,
) -> RepRecord {
    let attempt = || -> Result<(FitResult<f64>, PenaltySpec<f64>, Metrics)> {
        let dmax = Problem::new(&data.train, &opts.solver)?.delta_max();
        if !(dmax > 0.0) {
            return Err(MinPenError::InvalidInput("training responses carry no signal".into()));
        }
        let gammas = match method {
            Method::Sen => vec![0.0],
            _ => opts.gammas.clone(),
        };
        let grid = TuneGrid::new(log_path(dmax, opts.path_ratio, opts.path_len), gammas, 2, 0)?;
        let mode = match method {
            Method::TMinpen => FitMode::FixedGraph(true_graph.clone()),
            _ => FitMode::MinPen,
        };
        let tuned = split_select_mode(&data.train, &data.test, &grid, &opts.solver, &mode)?;
        let prob = Problem::new(&data.train, &opts.solver)?;
        let fit = match &mode {
            FitMode::MinPen => prob.fit_minpen(&tuned.best, None)?,
            FitMode::FixedGraph(g) => prob.fit_fixed_graph(&tuned.best, g)?,
        };
        let m = metrics(&fit, truth, &data.val)?;
        Ok((fit, tuned.best, m))
    };
    match attempt() {
        Ok((fit, pen, m)) => RepRecord {
            method,
            rep,
            metrics: Some(m),
            chosen: Some(pen),
            max_trace_increase: Some(fit.max_trace_increase()),
            graph: Some(fit.graph),
            error: None,
        },
        Err(e) => RepRecord {
            method,
            rep,
            metrics: None,
            chosen: None,
            max_trace_increase: None,
            graph: None,
            error: Some(e.to_string()),
        },
    }
}

/// Runs `reps` replications of every method. Each replication draws fresh
/// train, test and validation sets from its derived seed, tunes `(δ, γ)` on
/// the test set and scores the refit on the validation set. Failed fits are
/// recorded, not fatal.
pub fn run_study(design: &SimDesign, opts: &StudyOptions) -> Result<StudyResult> {
    if opts.reps == 0 {
        return Err(MinPenError::InvalidInput("reps must be at least 1".into()));
    }
    if opts.methods.is_empty() {
        return Err(MinPenError::InvalidInput("no methods requested".into()));
    }
    opts.solver.validate()?;
    let truth = design.truth()?;
    let true_graph = update_sets_view(truth.view(), None);
    let mut methods = opts.methods.clone();
    methods.sort_by_key(|m| m.label());
    methods.dedup();
    let per_rep: Vec<Vec<RepRecord>> = (0..opts.reps)
        .into_par_iter()
        .map(|rep| match gen_replicate(design, &truth, derive_seed(opts.seed, rep as u64)) {
            Ok(data) => methods
                .iter()
                .map(|&m| run_method(m, rep, &data, &truth, &true_graph, opts))
                .collect(),
            Err(e) => methods
                .iter()
                .map(|&m| RepRecord {
                    method: m,
                    rep,
                    metrics: None,
                    chosen: None,
                    max_trace_increase: None,
                    graph: None,
                    error: Some(e.to_string()),
                })
                .collect(),
        })
        .collect();
    let records: Vec<RepRecord> = per_rep.into_iter().flatten().collect();
    let reports = methods
        .iter()
        .map(|&m| {
            let recs: Vec<&RepRecord> = records.iter().filter(|r| r.method == m).collect();
            MetricsReport::from_records(m, &recs)
        })
        .collect();
    Ok(StudyResult {
        design: design.clone(),
        records,
        reports,
        true_graph,
    })
}

/// Fraction of ordered within-block pairs whose estimated relation sign
/// matches `truth_graph`. `blocks` lists the response indices of each block.
pub fn within_block_recovery(estimated: &RelationGraph, truth_graph: &RelationGraph, blocks: &[Vec<usize>]) -> f64 {
    let (mut hit, mut total) = (0usize, 0usize);
    for blk in blocks {
        for &l in blk {
            for &m in blk {
                if l != m {
                    total += 1;
                    hit += (estimated.get(l, m) == truth_graph.get(l, m)) as usize;
                }
            }
        }
    }
    if total == 0 {
        0.0
    } else {
        hit as f64 / total as f64
    }
}

/// Response blocks of the block designs: `{0..5}, {5..10}, {10..15}`.
pub fn block_responses() -> Vec<Vec<usize>> {
    (0..3).map(|b| (5 * b..5 * b + 5).collect()).collect()
}
