//! Selection of `(δ, γ)` by k-fold cross-validation or a train/test split.

use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::binom::{clamped_nll, predict_probs};
use crate::error::{MinPenError, Result};
use crate::fit::{FitResult, Problem, SolverConfig};
use crate::model::{Dataset, Family, PenaltySpec, RelationGraph};
use crate::scalar::Scalar;

pub const DEFAULT_GAMMAS: [f64; 6] = [0.0, 0.01, 0.1, 0.5, 1.0, 5.0];
pub const DEFAULT_PATH_LEN: usize = 20;
pub const DEFAULT_PATH_RATIO: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneGrid<F> {
    /// Strictly positive, sorted descending.
    pub deltas: Vec<F>,
    /// Nonnegative.
    pub gammas: Vec<F>,
    pub folds: usize,
    pub seed: u64,
    /// Seed each fit along a δ path with the previous solution.
    pub warm_start: bool,
}

impl<F: Scalar> TuneGrid<F> {
    pub fn new(mut deltas: Vec<F>, gammas: Vec<F>, folds: usize, seed: u64) -> Result<Self> {
        if deltas.is_empty() || gammas.is_empty() {
            return Err(MinPenError::InvalidInput("tuning grids must be nonempty".into()));
        }
        if deltas.iter().any(|d| !(d.is_finite() && *d > F::zero())) {
            return Err(MinPenError::InvalidInput("grid deltas must be positive and finite".into()));
        }
        if gammas.iter().any(|g| !(g.is_finite() && *g >= F::zero())) {
            return Err(MinPenError::InvalidInput("grid gammas must be nonnegative and finite".into()));
        }
        deltas.sort_by(|a, b| b.partial_cmp(a).unwrap());
        deltas.dedup();
        Ok(Self {
            deltas,
            gammas,
            folds,
            seed,
            warm_start: true,
        })
    }

    /// Log-spaced δ path from `δ_max` (all slopes zero at `γ = 0`) down to
    /// `0.001 δ_max`, crossed with the default γ values.
    pub fn default_for(data: &Dataset<F>, cfg: &SolverConfig, folds: usize, seed: u64) -> Result<Self> {
        let dmax = Problem::new(data, cfg)?.delta_max();
        if !(dmax > F::zero()) {
            return Err(MinPenError::InvalidInput(
                "responses carry no signal: the all-zero fit is optimal for every delta".into(),
            ));
        }
        Self::new(
            log_path(dmax, DEFAULT_PATH_RATIO, DEFAULT_PATH_LEN),
            DEFAULT_GAMMAS.iter().map(|&g| F::lit(g)).collect(),
            folds,
            seed,
        )
    }
}

/// `len` log-spaced values from `top` down to `ratio * top`.
pub fn log_path<F: Scalar>(top: F, ratio: f64, len: usize) -> Vec<F> {
    if len == 1 {
        return vec![top];
    }
    (0..len)
        .map(|i| {
            let t = i as f64 / (len - 1) as f64;
            top * F::lit(ratio.powf(t))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneCell<F> {
    pub delta: F,
    pub gamma: F,
    /// Mean over folds (or the single test set) of the summed validation loss.
    pub loss: F,
}

#[derive(Debug, Clone)]
pub struct TuneOutcome<F> {
    pub best: PenaltySpec<F>,
    /// Cells ordered by γ (grid order) then δ (descending).
    pub table: Vec<TuneCell<F>>,
}

/// Which estimator the grid is tuned for.
#[derive(Debug, Clone, PartialEq)]
pub enum FitMode {
    /// Alternate between coefficient and relation-set updates.
    MinPen,
    /// Keep the relation graph fixed.
    FixedGraph(RelationGraph),
}

/// Fold label of each observation: a ChaCha8 shuffle of `0..n` seeded by
/// `seed`, with the `i`-th shuffled index placed in fold `i mod k`.
pub fn fold_assignment(n: usize, k: usize, seed: u64) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    perm.shuffle(&mut rng);
    let mut fold = vec![0; n];
    for (i, &idx) in perm.iter().enumerate() {
        fold[idx] = i % k;
    }
    fold
}

/// Summed validation loss over responses: squared error for Gaussian data,
/// clamped negative log-likelihood for binomial data.
pub fn validation_loss<F: Scalar>(fit: &FitResult<F>, val: &Dataset<F>) -> Result<F> {
    if fit.coef.p() != val.p() || fit.coef.r() != val.r() {
        return Err(MinPenError::DimensionMismatch("validation data does not match the fit".into()));
    }
    Ok(match val.family() {
        Family::Gaussian => {
            let pred = fit.coef.linear_predictor(val.x());
            val.y().iter().zip(pred.iter()).map(|(&y, &f)| (y - f) * (y - f)).sum()
        }
        Family::Binomial => clamped_nll(val, predict_probs(val.x(), &fit.coef).view()),
    })
}

fn reporting_cfg(cfg: &SolverConfig) -> SolverConfig {
    SolverConfig {
        report_standardized: false,
        ..cfg.clone()
    }
}

/// Losses along the δ path for one γ, fitting on `train` and scoring on `val`.
fn path_losses<F: Scalar>(
    train: &Dataset<F>,
    val: &Dataset<F>,
    grid: &TuneGrid<F>,
    gamma: F,
    cfg: &SolverConfig,
    mode: &FitMode,
) -> Result<Vec<F>> {
    let prob = Problem::new(train, cfg)?;
    let mut warm: Option<Array2<F>> = None;
    let mut out = Vec::with_capacity(grid.deltas.len());
    for &delta in &grid.deltas {
        let pen = PenaltySpec::new(delta, gamma)?;
        let fit = match mode {
            FitMode::MinPen => prob.fit_minpen(&pen, warm.as_ref().map(|w| w.view()))?,
            FitMode::FixedGraph(graph) => prob.fit_fixed_graph(&pen, graph)?,
        };
        out.push(validation_loss(&fit, val)?);
        if grid.warm_start {
            warm = Some(fit.working);
        }
    }
    Ok(out)
}

fn constant_column<F: Scalar>(data: &Dataset<F>) -> Option<usize> {
    data.x().axis_iter(Axis(1)).position(|col| {
        let first = col[0];
        col.iter().all(|&v| v == first)
    })
}

fn argmin<F: Scalar>(table: &[TuneCell<F>]) -> PenaltySpec<F> {
    let mut best = &table[0];
    for cell in &table[1..] {
        let better = cell.loss < best.loss
            || (cell.loss == best.loss
                && (cell.delta > best.delta || (cell.delta == best.delta && cell.gamma > best.gamma)));
        if better {
            best = cell;
        }
    }
    PenaltySpec {
        delta: best.delta,
        gamma: best.gamma,
    }
}

fn assemble<F: Scalar>(grid: &TuneGrid<F>, per_gamma: Vec<Vec<F>>) -> TuneOutcome<F> {
    let mut table = Vec::with_capacity(grid.deltas.len() * grid.gammas.len());
    for (g, losses) in grid.gammas.iter().zip(per_gamma) {
        for (d, loss) in grid.deltas.iter().zip(losses) {
            table.push(TuneCell {
                delta: *d,
                gamma: *g,
                loss,
            });
        }
    }
    TuneOutcome {
        best: argmin(&table),
        table,
    }
}

/// k-fold cross-validation over the grid.
pub fn cv_select<F: Scalar>(data: &Dataset<F>, grid: &TuneGrid<F>, cfg: &SolverConfig) -> Result<TuneOutcome<F>> {
    cv_select_mode(data, grid, cfg, &FitMode::MinPen)
}

pub fn cv_select_mode<F: Scalar>(
    data: &Dataset<F>,
    grid: &TuneGrid<F>,
    cfg: &SolverConfig,
    mode: &FitMode,
) -> Result<TuneOutcome<F>> {
    let (n, k) = (data.n(), grid.folds);
    if k < 2 || n < 2 * k {
        return Err(MinPenError::InvalidInput(format!(
            "cross-validation needs k >= 2 and n >= 2k (n = {n}, k = {k})"
        )));
    }
    let cfg = reporting_cfg(cfg);
    let labels = fold_assignment(n, k, grid.seed);
    let mut splits = Vec::with_capacity(k);
    for fold in 0..k {
        let train_idx: Vec<usize> = (0..n).filter(|&i| labels[i] != fold).collect();
        let val_idx: Vec<usize> = (0..n).filter(|&i| labels[i] == fold).collect();
        let train = data.subset(&train_idx)?;
        if cfg.standardize {
            if let Some(column) = constant_column(&train) {
                return Err(MinPenError::DegenerateFold { fold, column });
            }
        }
        splits.push((train, data.subset(&val_idx)?));
    }
    let tasks: Vec<(usize, usize)> = (0..grid.gammas.len())
        .flat_map(|g| (0..k).map(move |f| (g, f)))
        .collect();
    let results: Vec<Vec<F>> = tasks
        .par_iter()
        .map(|&(g, f)| path_losses(&splits[f].0, &splits[f].1, grid, grid.gammas[g], &cfg, mode))
        .collect::<Result<_>>()?;
    let kf = F::from_usize_lossy(k);
    let per_gamma = (0..grid.gammas.len())
        .map(|g| {
            (0..grid.deltas.len())
                .map(|d| (0..k).map(|f| results[g * k + f][d]).sum::<F>() / kf)
                .collect()
        })
        .collect();
    Ok(assemble(grid, per_gamma))
}

/// Fits on `train` and scores on `test` for every grid cell.
pub fn split_select<F: Scalar>(
    train: &Dataset<F>,
    test: &Dataset<F>,
    grid: &TuneGrid<F>,
    cfg: &SolverConfig,
) -> Result<TuneOutcome<F>> {
    split_select_mode(train, test, grid, cfg, &FitMode::MinPen)
}

pub fn split_select_mode<F: Scalar>(
    train: &Dataset<F>,
    test: &Dataset<F>,
    grid: &TuneGrid<F>,
    cfg: &SolverConfig,
    mode: &FitMode,
) -> Result<TuneOutcome<F>> {
    if train.p() != test.p() || train.r() != test.r() || train.family() != test.family() {
        return Err(MinPenError::DimensionMismatch(format!(
            "train (p={}, r={}, {}) and test (p={}, r={}, {}) differ",
            train.p(),
            train.r(),
            train.family(),
            test.p(),
            test.r(),
            test.family()
        )));
    }
    let cfg = reporting_cfg(cfg);
    let per_gamma: Vec<Vec<F>> = grid
        .gammas
        .par_iter()
        .map(|&g| path_losses(train, test, grid, g, &cfg, mode))
        .collect::<Result<_>>()?;
    Ok(assemble(grid, per_gamma))
}
