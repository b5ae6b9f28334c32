//! Solver configuration and the result type shared by the Gaussian and
//! binomial solvers.

use std::borrow::Cow;

use ndarray::{s, Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{MinPenError, Result};
use crate::model::{standardize, CoefMatrix, Dataset, Family, PenaltySpec, RelationGraph, Standardization};
use crate::relations::{GraphMask, DEFAULT_ENUMERATION_CAP};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// Largest coefficient change in a full sweep that counts as converged.
    pub cd_tol: f64,
    pub cd_max_sweeps: usize,
    pub outer_max_iters: usize,
    /// Minimum objective decrease between outer iterations.
    pub obj_tol: f64,
    /// Center and scale predictors (and center Gaussian responses) before fitting.
    pub standardize: bool,
    /// Report coefficients on the standardized scale instead of the input scale.
    pub report_standardized: bool,
    pub irls_max_iters: usize,
    /// IRLS stops once the penalized likelihood improves by less than this
    /// relative amount.
    pub irls_tol: f64,
    /// Include binomial intercepts in the fusion penalty.
    pub fuse_intercepts: bool,
    pub enumeration_cap: usize,
    #[serde(skip)]
    pub mask: Option<GraphMask>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            cd_tol: 1e-7,
            cd_max_sweeps: 10_000,
            outer_max_iters: 100,
            obj_tol: 1e-10,
            standardize: true,
            report_standardized: false,
            irls_max_iters: 100,
            irls_tol: 1e-10,
            fuse_intercepts: true,
            enumeration_cap: DEFAULT_ENUMERATION_CAP,
            mask: None,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.cd_tol) || !positive(self.obj_tol) || !positive(self.irls_tol) {
            return Err(MinPenError::InvalidInput("tolerances must be positive".into()));
        }
        if self.cd_max_sweeps == 0 || self.outer_max_iters == 0 || self.irls_max_iters == 0 {
            return Err(MinPenError::InvalidInput("iteration caps must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// The relation graph repeated between outer iterations.
    SetsStable,
    /// The objective improved by less than `obj_tol`.
    ObjStall,
    MaxIters,
    /// The graph was supplied and never updated.
    FixedGraph,
    /// Every admissible graph was solved and the best pair kept.
    Exhaustive,
}

#[derive(Debug, Clone)]
pub struct FitResult<F> {
    pub family: Family,
    /// Coefficients on the input scale (or the standardized scale when
    /// `report_standardized` is set).
    pub coef: CoefMatrix<F>,
    /// Coefficients on the scale the solver worked on. For the binomial family
    /// row 0 holds the intercepts.
    pub working: Array2<F>,
    pub standardization: Option<Standardization<F>>,
    /// Graph the returned coefficients were computed under.
    pub graph: RelationGraph,
    pub pen: PenaltySpec<F>,
    /// Objective at the returned coefficients on the working scale: the
    /// minimum-penalty objective, or the fixed-graph objective for
    /// [`StopReason::FixedGraph`] fits.
    pub objective: F,
    /// Objective after initialization, then after each outer iteration.
    pub objective_trace: Vec<F>,
    pub outer_iters: usize,
    pub converged: bool,
    pub stop_reason: StopReason,
}

impl<F: Scalar> FitResult<F> {
    /// Largest increase between consecutive trace entries (0 if nonincreasing).
    pub fn max_trace_increase(&self) -> F {
        self.objective_trace
            .windows(2)
            .map(|w| (w[1] - w[0]).max(F::zero()))
            .fold(F::zero(), F::max)
    }

    /// Slopes on the working scale.
    pub fn working_slopes(&self) -> Array2<F> {
        match self.family {
            Family::Gaussian => self.working.clone(),
            Family::Binomial => self.working.slice(s![1.., ..]).to_owned(),
        }
    }
}

pub(crate) fn prepare<'a, F: Scalar>(data: &'a Dataset<F>, cfg: &SolverConfig) -> Result<Cow<'a, Dataset<F>>> {
    cfg.validate()?;
    if cfg.standardize {
        Ok(Cow::Owned(standardize(data)?))
    } else {
        Ok(Cow::Borrowed(data))
    }
}

/// Maps working-scale coefficients back to the reporting scale.
pub(crate) fn report<F: Scalar>(work: &Dataset<F>, working: &Array2<F>, cfg: &SolverConfig) -> CoefMatrix<F> {
    let (slopes, base) = match work.family() {
        Family::Gaussian => (working.clone(), None),
        Family::Binomial => (
            working.slice(s![1.., ..]).to_owned(),
            Some(working.row(0).to_owned()),
        ),
    };
    match work.standardization() {
        Some(st) if !cfg.report_standardized => {
            let raw = st.slopes_to_raw(slopes.view());
            let base = base
                .or_else(|| st.response_means.clone())
                .unwrap_or_else(|| Array1::zeros(slopes.ncols()));
            let a = st.raw_intercepts(base.view(), raw.view());
            CoefMatrix::with_intercepts(raw, a)
        }
        _ => match base {
            Some(a) => CoefMatrix::with_intercepts(slopes, a),
            None => CoefMatrix::new(slopes),
        },
    }
}

/// A prepared data set of either family.
pub enum Problem<'a, F: Clone> {
    Gaussian(crate::gauss::GaussianProblem<'a, F>),
    Binomial(crate::binom::BinomialProblem<'a, F>),
}

impl<'a, F: Scalar> Problem<'a, F> {
    pub fn new(data: &'a Dataset<F>, cfg: &SolverConfig) -> Result<Self> {
        Ok(match data.family() {
            Family::Gaussian => Problem::Gaussian(crate::gauss::GaussianProblem::new(data, cfg)?),
            Family::Binomial => Problem::Binomial(crate::binom::BinomialProblem::new(data, cfg)?),
        })
    }

    pub fn working_data(&self) -> &Dataset<F> {
        match self {
            Problem::Gaussian(p) => p.working_data(),
            Problem::Binomial(p) => p.working_data(),
        }
    }

    pub fn delta_max(&self) -> F {
        match self {
            Problem::Gaussian(p) => p.delta_max(),
            Problem::Binomial(p) => p.delta_max(),
        }
    }

    /// `warm` seeds the initialization (working scale, solver layout).
    pub fn fit_minpen(&self, pen: &PenaltySpec<F>, warm: Option<ndarray::ArrayView2<F>>) -> Result<FitResult<F>> {
        match self {
            Problem::Gaussian(p) => p.fit_minpen(pen, warm),
            Problem::Binomial(p) => p.fit_minpen(pen, warm),
        }
    }

    pub fn fit_fixed_graph(&self, pen: &PenaltySpec<F>, graph: &RelationGraph) -> Result<FitResult<F>> {
        match self {
            Problem::Gaussian(p) => p.fit_fixed_graph(pen, graph),
            Problem::Binomial(p) => p.fit_fixed_graph(pen, graph),
        }
    }
}

/// Fits either family with the minimum penalty.
pub fn fit<F: Scalar>(data: &Dataset<F>, pen: &PenaltySpec<F>, cfg: &SolverConfig) -> Result<FitResult<F>> {
    Problem::new(data, cfg)?.fit_minpen(pen, None)
}
