use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use sieve_lab_core::{
    fit, gen_case2_panel, scr, select_cd, select_m, simulate_series, test_exact_form,
    test_exact_form_joint, test_separability, test_stationarity, ErrorProcessSpec, FitResult,
    Observations, RegressionModelSpec, ScrResult, TestResult, TuneGrid,
};

use crate::config::{BootArgs, ConfigFile, SpecArgs};
use crate::error::{CliError, CliResult};
use crate::io::{emit, load_observations, render_csv, render_json};
use crate::m0::NullFunction;
use crate::manifest::{Envelope, Manifest};
use crate::reproduce::{render_table, run_cell, study_cells, CellReport, McSettings, Study, TestName};

#[derive(Parser, Debug)]
#[command(name = "sieve-lab", version, about = "Mapped-sieve regression with multiplier-bootstrap inference")]
pub struct Cli {
    /// Worker threads [default: SIEVE_LAB_THREADS, else all cores].
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Simulate a built-in model and write it as CSV.
    Simulate(SimulateArgs),
    /// Choose (c, d) by forecast error and m by minimum volatility.
    Tune(TuneArgs),
    /// Least-squares sieve fit.
    Fit(FitArgs),
    /// Simultaneous confidence region for one regression function.
    Scr(ScrArgs),
    /// Exact-form, stationarity or separability test.
    Test(TestArgs),
    /// Monte Carlo coverage, size or power study.
    Reproduce(ReproduceArgs),
}

#[derive(Args, Debug)]
pub struct InputArgs {
    /// CSV with a `y` column and optional covariates `x1, x2, …`.
    #[arg(short, long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub spec: SpecArgs,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// model1, model2 or model3, optionally with `:δ`. Repeat for panel covariates.
    #[arg(long, required = true)]
    pub model: Vec<String>,
    /// Error process: a (tvAR(2)), b (SETAR) or c (bilinear).
    #[arg(long, default_value = "a")]
    pub error: String,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Exogenous covariates instead of an autoregression.
    #[arg(long)]
    pub panel: bool,
    /// Process generating each panel covariate.
    #[arg(long = "covariate-error", default_value = "a")]
    pub covariate_error: String,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct TuneArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Comma-separated candidates for c [default: 2 to ⌈2 ln n⌉].
    #[arg(long = "c-grid", value_delimiter = ',')]
    pub c_grid: Option<Vec<usize>>,
    /// Comma-separated candidates for d [default: 2 to ⌈2 ln n⌉].
    #[arg(long = "d-grid", value_delimiter = ',')]
    pub d_grid: Option<Vec<usize>>,
    /// Validation length [default: ⌊3 log₂ n⌋].
    #[arg(long)]
    pub l: Option<usize>,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct FitArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ScrArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub boot: BootArgs,
    /// Regression function j.
    #[arg(long, default_value_t = 1)]
    pub component: usize,
    /// Region CSV `t,x,mhat,h,lo,hi`.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Summary JSON [default: the CSV path with extension .json].
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestChoice {
    Exact,
    Joint,
    Stationarity,
    Separability,
}

#[derive(Args, Debug)]
pub struct TestArgs {
    pub kind: TestChoice,
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub boot: BootArgs,
    #[arg(long, default_value_t = 1)]
    pub component: usize,
    /// Null function: zero, model1|model2|model3 with optional `:δ`, or
    /// grid:path.csv with columns t,x,value. Repeat once per component for
    /// the joint test.
    #[arg(long)]
    pub m0: Vec<String>,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ReproduceArgs {
    pub study: Study,
    /// Monte Carlo replications per cell (at least 100).
    #[arg(long)]
    pub reps: usize,
    #[arg(long, default_value_t = 500)]
    pub n: usize,
    #[arg(long, default_value = "a")]
    pub error: String,
    /// Basis family for both axes.
    #[arg(long, default_value = "fourier")]
    pub family: String,
    #[arg(long = "B", default_value_t = 300)]
    pub b_reps: usize,
    #[arg(long = "M", default_value_t = 300)]
    pub m_reps: usize,
    /// Grid points per axis.
    #[arg(long, default_value_t = 50)]
    pub grid: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long = "x-lo", default_value_t = -2000.0, allow_negative_numbers = true)]
    pub x_lo: f64,
    #[arg(long = "x-hi", default_value_t = 2000.0, allow_negative_numbers = true)]
    pub x_hi: f64,
    /// Fix c instead of tuning (needs --d).
    #[arg(long = "c", requires = "d")]
    pub c: Option<usize>,
    /// Fix d instead of tuning (needs --c).
    #[arg(long = "d", requires = "c")]
    pub d: Option<usize>,
    /// Tune (c, d) in every replication rather than once per cell.
    #[arg(long = "tune-each-rep")]
    pub tune_each_rep: bool,
    /// Tests for table2 and power.
    #[arg(long, value_delimiter = ',', default_value = "exact,stationarity,separability")]
    pub tests: Vec<TestName>,
    /// Alternatives for the power study.
    #[arg(long, value_delimiter = ',', default_value = "0,0.2,0.4,0.6,0.8")]
    pub deltas: Vec<f64>,
    /// Test level.
    #[arg(long, default_value_t = 0.1)]
    pub alpha: f64,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

/// `fit` output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub beta: Vec<f64>,
    pub p: usize,
    pub n: usize,
    pub r: usize,
    pub c: usize,
    pub d: usize,
    pub condition: f64,
    pub residual_sd: f64,
    pub spec: ConfigFile,
}

impl FitReport {
    pub fn new(f: &FitResult) -> Self {
        let spec = f.spec();
        FitReport {
            beta: f.beta.clone(),
            p: f.p(),
            n: f.n,
            r: spec.r,
            c: spec.c,
            d: spec.d,
            condition: f.condition,
            residual_sd: f.residual_sd(),
            spec: ConfigFile::from_spec(spec),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MseRow {
    pub c: usize,
    pub d: usize,
    pub mse: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeRow {
    pub m: usize,
    pub se: f64,
}

/// `tune` output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TuneReport {
    pub c: usize,
    pub d: usize,
    pub m: usize,
    pub validation_mse: f64,
    pub at_grid_edge: bool,
    pub validation_mse_table: Vec<MseRow>,
    pub se_table: Vec<SeRow>,
}

/// `scr` JSON summary; the full region rides along for reloading.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScrReport {
    pub c_alpha: f64,
    pub alpha: f64,
    pub m: usize,
    #[serde(rename = "B")]
    pub b_reps: usize,
    #[serde(rename = "M")]
    pub m_reps: usize,
    pub seed: u64,
    pub component: usize,
    pub spec: ConfigFile,
    pub region: ScrResult,
}

/// `test` output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub component: Option<usize>,
    pub m: usize,
    pub spec: ConfigFile,
    #[serde(flatten)]
    pub result: TestResult,
}

/// `reproduce` output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReproduceReport {
    pub study: Study,
    pub settings: McSettings,
    pub cells: Vec<CellReport>,
}

fn to_value<T: Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).expect("settings serialize")
}

fn model_spec(text: &str) -> CliResult<RegressionModelSpec> {
    let (name, delta) = match text.split_once(':') {
        Some((n, d)) => (
            n,
            d.parse::<f64>()
                .map_err(|_| CliError::config(format!("model '{text}': bad delta '{d}'")))?,
        ),
        None => (text, 0.0),
    };
    Ok(RegressionModelSpec::by_name(name, delta)?)
}

fn json_path(csv: Option<&Path>, json: Option<&Path>) -> Option<PathBuf> {
    json.map(Path::to_path_buf)
        .or_else(|| csv.filter(|p| *p != Path::new("-")).map(|p| p.with_extension("json")))
}

/// Runs one parsed command; `args` is the raw command line for the manifest.
pub fn execute(command: &Command, args: &[String]) -> CliResult<()> {
    match command {
        Command::Simulate(a) => simulate(a, args),
        Command::Tune(a) => tune(a, args),
        Command::Fit(a) => fit_cmd(a, args),
        Command::Scr(a) => scr_cmd(a, args),
        Command::Test(a) => test_cmd(a, args),
        Command::Reproduce(a) => reproduce(a, args),
    }
}

fn simulate(a: &SimulateArgs, args: &[String]) -> CliResult<()> {
    if a.n == 0 {
        return Err(CliError::config("--n must be at least 1"));
    }
    let models = a.model.iter().map(|m| model_spec(m)).collect::<CliResult<Vec<_>>>()?;
    let error = ErrorProcessSpec::by_label(&a.error)?;
    let n = a.n;
    let (headers, rows): (Vec<String>, Vec<Vec<f64>>) = if a.panel {
        let covariate = ErrorProcessSpec::by_label(&a.covariate_error)?;
        let panel = gen_case2_panel(&models, &covariate, &error, n, a.seed)?;
        let mut headers = vec!["t".to_owned(), "y".to_owned()];
        headers.extend((1..=models.len()).map(|j| format!("x{j}")));
        let rows = (0..n)
            .map(|i| {
                let mut row = vec![(i + 1) as f64 / n as f64];
                row.extend_from_slice(panel.row(i));
                row
            })
            .collect();
        (headers, rows)
    } else {
        if models.len() != 1 {
            return Err(CliError::config(
                "an autoregression takes exactly one --model; use --panel for several",
            ));
        }
        let y = simulate_series(&models[0], &error, n, a.seed)?;
        let rows = y
            .iter()
            .enumerate()
            .map(|(i, &v)| vec![(i + 1) as f64 / n as f64, v])
            .collect();
        (vec!["t".to_owned(), "y".to_owned()], rows)
    };
    let config = serde_json::json!({
        "models": a.model,
        "error": a.error,
        "n": n,
        "panel": a.panel,
        "covariate_error": a.panel.then_some(&a.covariate_error),
    });
    let manifest = Manifest::new("simulate", args, Some(a.seed), config);
    let headers: Vec<&str> = headers.iter().map(String::as_str).collect();
    emit(a.output.as_deref(), &render_csv(&manifest, &headers, &rows)?)
}

fn tune(a: &TuneArgs, args: &[String]) -> CliResult<()> {
    let obs = load_observations(&a.input.input)?;
    let template = a.input.spec.resolve(&obs)?;
    let mut grid = TuneGrid::default_for(obs.len());
    if let Some(c) = &a.c_grid {
        grid.c_candidates = c.clone();
    }
    if let Some(d) = &a.d_grid {
        grid.d_candidates = d.clone();
    }
    if let Some(l) = a.l {
        grid.l = l;
    }
    let sel = select_cd(&obs, &template, &grid)?;
    let spec = template.with_orders(sel.c, sel.d);
    let f = fit(&obs, &spec)?;
    let ms = select_m(&f, &obs, &grid)?;
    let report = TuneReport {
        c: sel.c,
        d: sel.d,
        m: ms.m,
        validation_mse: sel.mse,
        at_grid_edge: sel.at_grid_edge,
        validation_mse_table: sel.table.iter().map(|&(c, d, mse)| MseRow { c, d, mse }).collect(),
        se_table: ms.se_table.iter().map(|&(m, se)| SeRow { m, se }).collect(),
    };
    let config = serde_json::json!({ "spec": ConfigFile::from_spec(&template), "grid": to_value(&grid) });
    let manifest = Manifest::new("tune", args, None, config);
    emit(a.output.as_deref(), &render_json(&Envelope::new(manifest, report)))
}

fn fit_cmd(a: &FitArgs, args: &[String]) -> CliResult<()> {
    let obs = load_observations(&a.input.input)?;
    let spec = a.input.spec.resolve(&obs)?;
    let f = fit(&obs, &spec)?;
    let report = FitReport::new(&f);
    let manifest = Manifest::new("fit", args, None, to_value(&report.spec));
    emit(a.output.as_deref(), &render_json(&Envelope::new(manifest, report)))
}

fn scr_cmd(a: &ScrArgs, args: &[String]) -> CliResult<()> {
    let obs = load_observations(&a.input.input)?;
    let spec = a.input.spec.resolve(&obs)?;
    let f = fit(&obs, &spec)?;
    let cfg = a.boot.resolve(&f, &obs)?;
    let region = scr(&f, &obs, &cfg, a.component)?;
    let rows: Vec<Vec<f64>> = region
        .grid
        .points()
        .enumerate()
        .map(|(i, (t, x))| {
            vec![t, x, region.m_hat[i], region.h_hat[i], region.lower[i], region.upper[i]]
        })
        .collect();
    let config = serde_json::json!({ "spec": ConfigFile::from_spec(&spec), "bootstrap": to_value(&cfg), "component": a.component });
    let manifest = Manifest::new("scr", args, Some(cfg.seed), config);
    let csv = render_csv(&manifest, &["t", "x", "mhat", "h", "lo", "hi"], &rows)?;
    let report = ScrReport {
        c_alpha: region.c_alpha,
        alpha: cfg.alpha,
        m: cfg.m,
        b_reps: cfg.b_reps,
        m_reps: cfg.m_reps,
        seed: cfg.seed,
        component: a.component,
        spec: ConfigFile::from_spec(&spec),
        region,
    };
    let json = render_json(&Envelope::new(manifest, report));
    emit(a.output.as_deref(), &csv)?;
    match json_path(a.output.as_deref(), a.json.as_deref()) {
        Some(p) => emit(Some(&p), &json),
        None => Ok(()),
    }
}

fn test_cmd(a: &TestArgs, args: &[String]) -> CliResult<()> {
    let obs: Observations = load_observations(&a.input.input)?;
    let spec = a.input.spec.resolve(&obs)?;
    let nulls = a.m0.iter().map(|m| NullFunction::parse(m)).collect::<CliResult<Vec<_>>>()?;
    match a.kind {
        TestChoice::Exact if nulls.len() != 1 => {
            return Err(CliError::config("the exact-form test takes exactly one --m0"))
        }
        TestChoice::Joint if nulls.len() != spec.r => {
            return Err(CliError::config(format!(
                "the joint test takes one --m0 per component ({} expected, {} given)",
                spec.r,
                nulls.len()
            )))
        }
        TestChoice::Stationarity | TestChoice::Separability if !nulls.is_empty() => {
            return Err(CliError::config("--m0 applies to the exact-form tests only"))
        }
        _ => {}
    }
    let f = fit(&obs, &spec)?;
    let cfg = a.boot.resolve(&f, &obs)?;
    let j = a.component;
    let result = match a.kind {
        TestChoice::Exact => test_exact_form(&f, &obs, &cfg, j, &|t, x| nulls[0].eval(t, x))?,
        TestChoice::Joint => {
            let fns: Vec<Box<dyn Fn(f64, f64) -> f64 + '_>> = nulls
                .iter()
                .map(|n| Box::new(move |t, x| n.eval(t, x)) as Box<dyn Fn(f64, f64) -> f64>)
                .collect();
            let refs: Vec<&dyn Fn(f64, f64) -> f64> = fns.iter().map(|b| b.as_ref()).collect();
            test_exact_form_joint(&f, &obs, &cfg, &refs)?
        }
        TestChoice::Stationarity => test_stationarity(&f, &obs, &cfg, j)?,
        TestChoice::Separability => test_separability(&f, &obs, &cfg, j)?,
    };
    let report = TestReport {
        component: (a.kind != TestChoice::Joint).then_some(j),
        m: cfg.m,
        spec: ConfigFile::from_spec(&spec),
        result,
    };
    let config = serde_json::json!({
        "test": a.kind,
        "spec": report.spec,
        "bootstrap": to_value(&cfg),
        "m0": a.m0,
    });
    let manifest = Manifest::new("test", args, Some(cfg.seed), config);
    emit(a.output.as_deref(), &render_json(&Envelope::new(manifest, report)))
}

fn reproduce(a: &ReproduceArgs, args: &[String]) -> CliResult<()> {
    if a.reps < 100 {
        return Err(CliError::config(format!("--reps must be at least 100, got {}", a.reps)));
    }
    if a.x_lo.is_nan() || a.x_hi.is_nan() || a.x_lo >= a.x_hi {
        return Err(CliError::config("--x-lo must be below --x-hi"));
    }
    let settings = McSettings {
        n: a.n,
        reps: a.reps,
        error: a.error.clone(),
        family: a.family.clone(),
        b_reps: a.b_reps,
        m_reps: a.m_reps,
        grid: a.grid,
        seed: a.seed,
        x_range: Some((a.x_lo, a.x_hi)),
        orders: a.c.zip(a.d),
        tune_each_rep: a.tune_each_rep,
    };
    settings.validate()?;
    let mut cells = Vec::new();
    for cell in study_cells(a.study, &a.tests, &a.deltas, a.alpha) {
        cells.extend(run_cell(&settings, &cell)?);
    }
    eprint!("{}", render_table(&cells));
    let report = ReproduceReport {
        study: a.study,
        settings: settings.clone(),
        cells,
    };
    let config = serde_json::json!({ "settings": to_value(&settings), "tests": a.tests, "deltas": a.deltas, "alpha": a.alpha });
    let manifest = Manifest::new("reproduce", args, Some(a.seed), config);
    emit(a.output.as_deref(), &render_json(&Envelope::new(manifest, report)))
}
