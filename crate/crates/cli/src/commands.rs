use std::fs;
use std::path::{Path, PathBuf};

use minpen::inference::{estimate_sigma, interval_table, EtaKind, IntervalStatus, SigmaMode, SigmaSpec};
use minpen::io::{graph_from_json, read_csv_path, read_matrix_csv, ColumnSpec, FitResultJson, LoadedData};
use minpen::sim::{run_study, DesignKind, Method, SimDesign, StudyOptions};
use minpen::tuning::{cv_select, split_select, TuneGrid, TuneOutcome};
use minpen::{Family, MinPenError, PenaltySpec, Problem, SolverConfig};

use crate::config::{DataArgs, FitArgs, InferArgs, OracleArgs, Resolve, SimulateArgs, TuneArgs};

pub struct CliError {
    pub code: u8,
    pub msg: String,
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        Self { code: 2, msg: msg.into() }
    }

    fn data(msg: impl Into<String>) -> Self {
        Self { code: 3, msg: msg.into() }
    }

    fn solver(msg: impl Into<String>) -> Self {
        Self { code: 4, msg: msg.into() }
    }
}

impl From<MinPenError> for CliError {
    fn from(e: MinPenError) -> Self {
        let code = match e {
            MinPenError::InvalidInput(_) | MinPenError::EnumerationCap { .. } => 2,
            MinPenError::Data(_)
            | MinPenError::DimensionMismatch(_)
            | MinPenError::DegenerateColumn { .. }
            | MinPenError::DegenerateFold { .. } => 3,
            MinPenError::NotConverged { .. }
            | MinPenError::Divergence { .. }
            | MinPenError::NotPositiveDefinite(_)
            | MinPenError::InconsistentEvent(_)
            | MinPenError::DegenerateTruncation { .. }
            | MinPenError::Numerical(_) => 4,
        };
        Self { code, msg: e.to_string() }
    }
}

type CliResult<T> = Result<T, CliError>;

/// Caps the global worker pool at `MINPEN_THREADS` when set.
pub fn configure_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var("MINPEN_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::config(format!("MINPEN_THREADS must be a positive integer, got '{raw}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::config(format!("cannot size the thread pool: {e}")))
}

fn require<T>(v: Option<T>, flag: &str) -> CliResult<T> {
    v.ok_or_else(|| CliError::config(format!("--{flag} is required")))
}

fn parse_family(s: Option<&str>) -> CliResult<Family> {
    match s.unwrap_or("gaussian") {
        "gaussian" => Ok(Family::Gaussian),
        "binomial" => Ok(Family::Binomial),
        other => Err(CliError::config(format!("unknown family '{other}' (gaussian or binomial)"))),
    }
}

/// `dir/name.ext` becomes `dir/name.<suffix>`.
fn sibling(out: &Path, suffix: &str) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    out.with_file_name(format!("{stem}.{suffix}"))
}

fn write(path: &Path, text: &str) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::config(format!("cannot create {}: {e}", dir.display())))?;
    }
    fs::write(path, text).map_err(|e| CliError::config(format!("cannot write {}: {e}", path.display())))
}

fn write_config<T: Resolve>(args: &T, out: &Path) -> CliResult<()> {
    write(&sibling(out, "config.json"), &args.to_json())
}

fn load(data: &DataArgs, family: Family) -> CliResult<LoadedData> {
    let path = require(data.data.as_ref(), "data")?;
    let spec = ColumnSpec {
        responses: require(data.responses.clone(), "responses")?,
        trials: data.trials.clone(),
        predictors: data.predictors.clone(),
    };
    Ok(read_csv_path(path, &spec, family)?)
}

fn validated(cfg: SolverConfig) -> CliResult<SolverConfig> {
    cfg.validate()?;
    Ok(cfg)
}

fn penalty(delta: Option<f64>, gamma: Option<f64>) -> CliResult<PenaltySpec<f64>> {
    Ok(PenaltySpec::new(require(delta, "delta")?, gamma.unwrap_or(0.0))?)
}

fn num(v: f64) -> String {
    format!("{v}")
}

pub fn fit(args: FitArgs) -> CliResult<()> {
    let args = args.resolve()?;
    let family = parse_family(args.data.family.as_deref())?;
    let pen = penalty(args.delta, args.gamma)?;
    let cfg = validated(args.solver.resolve())?;
    let out = require(args.out.clone(), "out")?;
    let graph = match &args.fixed_graph {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| CliError::data(format!("cannot read {}: {e}", p.display())))?;
            Some(graph_from_json(&text)?)
        }
        None => None,
    };
    let loaded = load(&args.data, family)?;
    if let Some(g) = &graph {
        if g.r() != loaded.data.r() {
            return Err(CliError::data(format!(
                "fixed graph is {}x{} but there are {} responses",
                g.r(),
                g.r(),
                loaded.data.r()
            )));
        }
    }
    let prob = Problem::new(&loaded.data, &cfg)?;
    let result = match &graph {
        Some(g) => prob.fit_fixed_graph(&pen, g)?,
        None => prob.fit_minpen(&pen, None)?,
    };
    let json = FitResultJson::from_fit(
        &result,
        cfg.report_standardized,
        Some(loaded.predictors.clone()),
        Some(loaded.responses.clone()),
    );
    write(&out, &json.to_json())?;
    write_config(&args, &out)?;
    if !result.converged {
        return Err(CliError::solver(format!(
            "outer iterations hit the cap of {} (objective {:e}, stop reason {:?}); result written to {}",
            cfg.outer_max_iters,
            result.objective,
            result.stop_reason,
            out.display()
        )));
    }
    Ok(())
}

pub fn tune(args: TuneArgs) -> CliResult<()> {
    let args = args.resolve()?;
    let family = parse_family(args.data.family.as_deref())?;
    let cfg = validated(args.solver.resolve())?;
    let out = require(args.out.clone(), "out")?;
    if args.folds.is_some() && args.test_data.is_some() {
        return Err(CliError::config("--folds and --test-data are mutually exclusive"));
    }
    if args.test_data.is_none() && args.seed.is_none() {
        return Err(CliError::config("cross-validation needs an explicit --seed"));
    }
    let folds = args.folds.unwrap_or(5);
    let seed = args.seed.unwrap_or(0);
    let loaded = load(&args.data, family)?;
    let mut grid = TuneGrid::default_for(&loaded.data, &cfg, folds, seed)?;
    if let Some(d) = &args.grid_delta {
        grid = TuneGrid::new(d.clone(), grid.gammas, folds, seed)?;
    }
    if let Some(g) = &args.grid_gamma {
        grid = TuneGrid::new(grid.deltas, g.clone(), folds, seed)?;
    }
    let outcome: TuneOutcome<f64> = match &args.test_data {
        Some(test) => {
            let test = load(
                &DataArgs {
                    data: Some(test.clone()),
                    ..args.data.clone()
                },
                family,
            )?;
            split_select(&loaded.data, &test.data, &grid, &cfg)?
        }
        None => cv_select(&loaded.data, &grid, &cfg)?,
    };
    let mut table = String::from("delta,gamma,loss\n");
    for c in &outcome.table {
        table.push_str(&format!("{},{},{}\n", num(c.delta), num(c.gamma), num(c.loss)));
    }
    let best_loss = outcome
        .table
        .iter()
        .find(|c| c.delta == outcome.best.delta && c.gamma == outcome.best.gamma)
        .map(|c| c.loss);
    let chosen = serde_json::json!({
        "delta": outcome.best.delta,
        "gamma": outcome.best.gamma,
        "loss": best_loss,
    });
    write(&out, &table)?;
    write(&sibling(&out, "chosen.json"), &format!("{}\n", serde_json::to_string_pretty(&chosen).unwrap()))?;
    write_config(&args, &out)
}

pub fn oracle(args: OracleArgs) -> CliResult<()> {
    let args = args.resolve()?;
    let family = parse_family(args.data.family.as_deref())?;
    if family != Family::Gaussian {
        return Err(CliError::config("the oracle covers the gaussian family only"));
    }
    let pen = penalty(args.delta, args.gamma)?;
    let mut cfg = args.solver.resolve();
    if let Some(m) = args.max_pairs {
        cfg.enumeration_cap = m;
    }
    let cfg = validated(cfg)?;
    let out = require(args.out.clone(), "out")?;
    let loaded = load(&args.data, family)?;
    let r = loaded.data.r();
    let pairs = r * r.saturating_sub(1);
    if pairs > cfg.enumeration_cap {
        return Err(CliError::config(format!(
            "r = {r} needs 3^{pairs} graphs ({pairs} ordered pairs), above --max-pairs {}",
            cfg.enumeration_cap
        )));
    }
    let res = minpen::gauss::oracle_minpen(&loaded.data, &pen, &cfg)?;
    let mut header: Vec<String> = Vec::new();
    for l in 0..r {
        for m in 0..r {
            if l != m {
                header.push(format!("d_{}_{}", l + 1, m + 1));
            }
        }
    }
    header.push("objective".into());
    let mut table = header.join(",");
    table.push('\n');
    for row in &res.table {
        let mut cells: Vec<String> = row.graph.triples().map(|(_, _, d)| d.to_string()).collect();
        cells.push(num(row.objective));
        table.push_str(&cells.join(","));
        table.push('\n');
    }
    let json = FitResultJson::from_fit(
        &res.fit,
        cfg.report_standardized,
        Some(loaded.predictors.clone()),
        Some(loaded.responses.clone()),
    );
    write(&out, &json.to_json())?;
    write(&sibling(&out, "graphs.csv"), &table)?;
    write_config(&args, &out)
}

fn parse_sigma(spec: &str, data: &minpen::Dataset<f64>) -> CliResult<SigmaSpec<f64>> {
    if let Some(path) = spec.strip_prefix("known:") {
        let file = fs::File::open(path).map_err(|e| CliError::data(format!("cannot open {path}: {e}")))?;
        let m = read_matrix_csv(file)?;
        if m.nrows() != data.r() {
            return Err(CliError::data(format!("known sigma is {}x{} but r = {}", m.nrows(), m.ncols(), data.r())));
        }
        return Ok(SigmaSpec::known(m)?);
    }
    let mode = match spec {
        "residual-full" => SigmaMode::ResidualFull,
        "diagonal" => SigmaMode::Diagonal,
        other => {
            return Err(CliError::config(format!(
                "unknown sigma '{other}' (known:<file>, residual-full or diagonal)"
            )))
        }
    };
    Ok(estimate_sigma(data, mode)?)
}

pub fn infer(args: InferArgs) -> CliResult<()> {
    let mut args = args.resolve()?;
    let alpha = require(args.alpha, "alpha")?;
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(CliError::config(format!("--alpha must lie in (0, 1), got {alpha}")));
    }
    let kind = match args.target.as_deref().unwrap_or("selected") {
        "selected" => EtaKind::Selected,
        "full" => EtaKind::FullDesign,
        other => return Err(CliError::config(format!("unknown target '{other}' (selected or full)"))),
    };
    let sigma_spec = require(args.sigma.clone(), "sigma")?;
    let out = require(args.out.clone(), "out")?;
    let model_path = require(args.model.clone(), "model")?;
    let text = fs::read_to_string(&model_path)
        .map_err(|e| CliError::data(format!("cannot read {}: {e}", model_path.display())))?;
    let model = FitResultJson::from_json(&text)?;
    if model.family != Family::Gaussian {
        return Err(CliError::config("selective intervals cover gaussian models only"));
    }
    if args.data.responses.is_none() {
        args.data.responses = model.responses.clone();
    }
    if args.data.predictors.is_none() {
        args.data.predictors = model.predictors.clone();
    }
    let fit = model.to_fit::<f64>()?;
    let loaded = load(&args.data, Family::Gaussian)?;
    if loaded.data.p() != model.p || loaded.data.r() != model.r {
        return Err(CliError::data(format!(
            "data has p = {}, r = {} but the model has p = {}, r = {}",
            loaded.data.p(),
            loaded.data.r(),
            model.p,
            model.r
        )));
    }
    let sigma = parse_sigma(&sigma_spec, &loaded.data)?;
    let rows = interval_table(&loaded.data, &fit, &sigma, alpha, kind, model.report_standardized())?;
    let mut csv = String::from("response,predictor,estimate,lower,upper,alpha,status\n");
    for row in &rows {
        let status = match row.status {
            IntervalStatus::Ok => "ok",
            IntervalStatus::Degenerate => "degenerate",
            IntervalStatus::Failed => "failed",
        };
        csv.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            loaded.responses[row.response],
            loaded.predictors[row.predictor],
            num(row.estimate),
            num(row.lower),
            num(row.upper),
            num(row.alpha),
            status
        ));
    }
    write(&out, &csv)?;
    write_config(&args, &out)?;
    if !rows.is_empty() && rows.iter().all(|r| r.status != IntervalStatus::Ok) {
        return Err(CliError::solver(format!(
            "all {} intervals are degenerate or failed; rows written to {}",
            rows.len(),
            out.display()
        )));
    }
    Ok(())
}

pub fn simulate(args: SimulateArgs) -> CliResult<()> {
    let args = args.resolve()?;
    let seed = require(args.seed, "seed")?;
    let out = require(args.out.clone(), "out")?;
    let kind = match require(args.design.as_deref(), "design")? {
        "block" => DesignKind::Block,
        "overlap" => DesignKind::Overlap,
        "binom_block" => DesignKind::BinomBlock,
        other => return Err(CliError::config(format!("unknown design '{other}'"))),
    };
    let p = args.p.unwrap_or(40);
    let n = args.n.unwrap_or(100);
    let eta = args.eta.unwrap_or(1.0);
    let lambda = args.lambda.unwrap_or(0.1);
    let mut design = match kind {
        DesignKind::Block => SimDesign::block(p, n, eta, lambda),
        DesignKind::BinomBlock => SimDesign::binom_block(p, n, eta, lambda),
        DesignKind::Overlap => SimDesign::overlap(p, n, args.v.unwrap_or(0)),
    };
    if let Some(r) = args.r {
        design.r = r;
    }
    if let Some(rho) = args.rho {
        design.rho = rho;
    }
    if let Some(nv) = args.n_val {
        design.n_val = nv;
    }
    design.validate()?;
    for note in design.extrapolation_notes() {
        eprintln!("note: extrapolating beyond the studied settings: {note}");
    }
    let methods = match &args.methods {
        Some(ms) => ms.iter().map(|m| Method::parse(m)).collect::<Result<Vec<_>, _>>()?,
        None => vec![Method::Minpen, Method::TMinpen, Method::Sen],
    };
    let mut opts = StudyOptions::new(args.reps.unwrap_or(20), seed, methods);
    opts.solver = validated(args.solver.resolve())?;
    if let Some(g) = &args.grid_gamma {
        opts.gammas = g.clone();
    }
    if let Some(l) = args.path_len {
        opts.path_len = l;
    }
    let study = run_study(&design, &opts)?;
    for rec in &study.records {
        if let Some(err) = &rec.error {
            eprintln!("rep {} {}: {err}", rec.rep, rec.method);
        }
    }
    let summary = serde_json::json!({
        "design": study.design,
        "reps": opts.reps,
        "seed": seed,
        "true_graph": study.true_graph,
        "reports": study.reports.iter().map(|r| serde_json::json!({
            "method": r.method,
            "failures": r.failures,
            "spe": {"mean": r.spe.mean, "std_error": r.spe.std_error},
            "mse": {"mean": r.mse.mean, "std_error": r.mse.std_error},
            "tp": {"mean": r.tp.mean, "std_error": r.tp.std_error},
            "fp": {"mean": r.fp.mean, "std_error": r.fp.std_error},
            "kl": r.kl.as_ref().map(|k| serde_json::json!({"mean": k.mean, "std_error": k.std_error})),
        })).collect::<Vec<_>>(),
    });
    write(&out, &study.to_long_csv())?;
    write(&sibling(&out, "summary.json"), &format!("{}\n", serde_json::to_string_pretty(&summary).unwrap()))?;
    write_config(&args, &out)
}
