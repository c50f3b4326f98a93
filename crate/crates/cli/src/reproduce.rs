//! Monte Carlo studies of coverage, size and power on the built-in models.
//!
//! Each replication simulates an autoregression from its own seed, fits the
//! sieve, picks the block size by minimum volatility and runs the bootstrap.
//! The orders `(c, d)` are chosen once per cell on a pilot series, unless
//! fixed by the caller or re-tuned in every replication.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sieve_lab_core::rng::replication_seed;
use sieve_lab_core::{
    fit, scr, select_cd, select_m, simulate_series, test_exact_form, test_separability,
    test_stationarity, BasisFamily, BootstrapConfig, ErrorProcessSpec, Mapping, Observations,
    RegressionModelSpec, SieveSpec, TuneGrid,
};

use crate::config::parse_family;
use crate::error::{CliError, CliResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Study {
    /// Simultaneous coverage of the confidence region.
    Table1,
    /// Rejection rates of the three tests under their nulls.
    Table2,
    /// Rejection rates as the alternatives move away from the nulls.
    Power,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum TestName {
    /// `m ≡ model 1` on model 1 with `δ sin(2πtx)` added.
    Exact,
    /// Time-constancy on model 2.
    Stationarity,
    /// Separability on model 3.
    Separability,
}

impl TestName {
    pub fn model(self, delta: f64) -> RegressionModelSpec {
        match self {
            TestName::Exact => RegressionModelSpec::Model1 { delta },
            TestName::Stationarity => RegressionModelSpec::Model2 { delta },
            TestName::Separability => RegressionModelSpec::Model3 { delta },
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            TestName::Exact => "exact",
            TestName::Stationarity => "stationarity",
            TestName::Separability => "separability",
        }
    }
}

/// What a cell measures.
#[derive(Clone, Debug, PartialEq)]
pub enum Target {
    /// Coverage of the true surface at each nominal level.
    Coverage { levels: Vec<f64> },
    /// Rejection at level `alpha`.
    Test { test: TestName, alpha: f64 },
}

#[derive(Clone, Debug)]
pub struct Cell {
    pub model: RegressionModelSpec,
    pub target: Target,
}

/// Settings shared by every cell of a study.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McSettings {
    pub n: usize,
    pub reps: usize,
    /// Error process label: a, b or c.
    pub error: String,
    /// Basis family used for both time and space.
    pub family: String,
    #[serde(rename = "B")]
    pub b_reps: usize,
    #[serde(rename = "M")]
    pub m_reps: usize,
    /// Grid points per axis.
    pub grid: usize,
    pub seed: u64,
    /// Covariate range of the region.
    pub x_range: Option<(f64, f64)>,
    /// Fixed `(c, d)`; tuned when absent.
    pub orders: Option<(usize, usize)>,
    pub tune_each_rep: bool,
}

impl McSettings {
    /// Desk-scale defaults on the region `[0, 1] × [−2000, 2000]`.
    pub fn new(n: usize, reps: usize) -> Self {
        McSettings {
            n,
            reps,
            error: "a".into(),
            family: "fourier".into(),
            b_reps: 300,
            m_reps: 300,
            grid: 50,
            seed: 0,
            x_range: Some((-2000.0, 2000.0)),
            orders: None,
            tune_each_rep: false,
        }
    }

    pub fn validate(&self) -> CliResult<()> {
        if self.reps == 0 {
            return Err(CliError::config("at least one replication is required"));
        }
        ErrorProcessSpec::by_label(&self.error)?;
        parse_family(&self.family)?;
        Ok(())
    }

    fn template(&self, scale: f64, c: usize, d: usize) -> CliResult<SieveSpec> {
        let family: BasisFamily = parse_family(&self.family)?;
        let spec = SieveSpec {
            time_family: family,
            space_family: family,
            mapping: Mapping::algebraic(scale)?,
            c,
            d,
            r: 1,
        }
        .with_orders(c, d);
        spec.validate()?;
        Ok(spec)
    }
}

/// One row of a study report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub label: String,
    pub model: String,
    pub delta: f64,
    pub family: String,
    pub error: String,
    pub n: usize,
    /// Orders used; with per-replication tuning, those of the last replication.
    pub c: usize,
    pub d: usize,
    /// Nominal coverage, or the test level.
    pub nominal: f64,
    /// Replications that completed.
    pub reps: usize,
    pub failures: usize,
    pub rate: f64,
    /// Binomial Monte Carlo standard error of `rate`.
    pub mc_se: f64,
    pub first_failure: Option<String>,
}

/// Orders tuned on a pilot series drawn from its own seed.
pub fn pilot_orders(settings: &McSettings, model: &RegressionModelSpec) -> CliResult<(usize, usize)> {
    let error = ErrorProcessSpec::by_label(&settings.error)?;
    let seed = replication_seed(settings.seed, u64::MAX);
    let obs = Observations::lagged(simulate_series(model, &error, settings.n, seed)?)?;
    let sel = select_cd(
        &obs,
        &settings.template(obs.covariate_sd(), 1, 1)?,
        &TuneGrid::default_for(settings.n),
    )?;
    Ok((sel.c, sel.d))
}

/// Hits per level (one entry for tests) and the orders used.
type Outcome = (Vec<bool>, (usize, usize));

/// Outcome of one replication.
fn replicate(
    settings: &McSettings,
    cell: &Cell,
    orders: (usize, usize),
    rep: u64,
) -> CliResult<Outcome> {
    let error = ErrorProcessSpec::by_label(&settings.error)?;
    let seed = replication_seed(settings.seed, rep);
    let obs = Observations::lagged(simulate_series(&cell.model, &error, settings.n, seed)?)?;
    let scale = obs.covariate_sd();
    let (c, d) = if settings.tune_each_rep && settings.orders.is_none() {
        let sel = select_cd(&obs, &settings.template(scale, 1, 1)?, &TuneGrid::default_for(settings.n))?;
        (sel.c, sel.d)
    } else {
        orders
    };
    let f = fit(&obs, &settings.template(scale, c, d)?)?;
    let m = select_m(&f, &obs, &TuneGrid::default_for(settings.n))?.m;
    let mut cfg = BootstrapConfig {
        m,
        b_reps: settings.b_reps,
        m_reps: settings.m_reps,
        grid_t: settings.grid,
        grid_y: settings.grid,
        seed,
        alpha: 0.05,
        x_range: settings.x_range,
    };
    let hits = match &cell.target {
        Target::Coverage { levels } => {
            let region = scr(&f, &obs, &cfg, 1)?;
            let truth: Vec<f64> = region.grid.points().map(|(t, x)| cell.model.m(t, x)).collect();
            let dist = region.sup_distance(&truth);
            levels
                .iter()
                .map(|&l| dist <= region.critical_value(1.0 - l))
                .collect()
        }
        Target::Test { test, alpha } => {
            cfg.alpha = *alpha;
            let result = match test {
                TestName::Exact => {
                    let null = TestName::Exact.model(0.0);
                    test_exact_form(&f, &obs, &cfg, 1, &|t, x| null.m(t, x))?
                }
                TestName::Stationarity => test_stationarity(&f, &obs, &cfg, 1)?,
                TestName::Separability => test_separability(&f, &obs, &cfg, 1)?,
            };
            vec![result.reject_at_alpha]
        }
    };
    Ok((hits, (c, d)))
}

/// Runs every replication of `cell`, in parallel, and summarizes them.
pub fn run_cell(settings: &McSettings, cell: &Cell) -> CliResult<Vec<CellReport>> {
    settings.validate()?;
    let orders = match settings.orders {
        Some(o) => o,
        None if settings.tune_each_rep => (0, 0),
        None => pilot_orders(settings, &cell.model)?,
    };
    let outcomes: Vec<CliResult<Outcome>> = (0..settings.reps as u64)
        .into_par_iter()
        .map(|rep| replicate(settings, cell, orders, rep))
        .collect();

    let (label, nominal): (String, Vec<f64>) = match &cell.target {
        Target::Coverage { levels } => ("coverage".into(), levels.clone()),
        Target::Test { test, alpha } => (test.name().into(), vec![*alpha]),
    };
    let mut hits = vec![0usize; nominal.len()];
    let mut done = 0;
    let mut failures = 0;
    let mut first_failure = None;
    let mut used = orders;
    for out in outcomes {
        match out {
            Ok((h, o)) => {
                done += 1;
                used = o;
                for (acc, hit) in hits.iter_mut().zip(h) {
                    *acc += usize::from(hit);
                }
            }
            Err(e) => {
                failures += 1;
                first_failure.get_or_insert_with(|| e.to_string());
            }
        }
    }
    Ok(nominal
        .iter()
        .zip(hits)
        .map(|(&level, h)| {
            let rate = if done > 0 { h as f64 / done as f64 } else { f64::NAN };
            CellReport {
                label: label.clone(),
                model: cell.model.name().into(),
                delta: cell.model.delta(),
                family: settings.family.clone(),
                error: settings.error.clone(),
                n: settings.n,
                c: used.0,
                d: used.1,
                nominal: level,
                reps: done,
                failures,
                rate,
                mc_se: (rate * (1.0 - rate) / done.max(1) as f64).sqrt(),
                first_failure: first_failure.clone(),
            }
        })
        .collect())
}

/// Cells of a study. `deltas` applies to the power study only.
pub fn study_cells(study: Study, tests: &[TestName], deltas: &[f64], alpha: f64) -> Vec<Cell> {
    match study {
        Study::Table1 => [
            RegressionModelSpec::Model1 { delta: 0.0 },
            RegressionModelSpec::Model2 { delta: 1.0 },
            RegressionModelSpec::Model3 { delta: 1.0 },
        ]
        .into_iter()
        .map(|model| Cell {
            model,
            target: Target::Coverage {
                levels: vec![0.90, 0.95],
            },
        })
        .collect(),
        Study::Table2 => tests
            .iter()
            .map(|&test| Cell {
                model: test.model(0.0),
                target: Target::Test { test, alpha },
            })
            .collect(),
        Study::Power => tests
            .iter()
            .flat_map(|&test| {
                deltas.iter().map(move |&delta| Cell {
                    model: test.model(delta),
                    target: Target::Test { test, alpha },
                })
            })
            .collect(),
    }
}

/// Fixed-width rendering for the terminal.
pub fn render_table(cells: &[CellReport]) -> String {
    let mut out = format!(
        "{:<13} {:<7} {:>5} {:<9} {:>3} {:>5} {:>3} {:>3} {:>7} {:>6} {:>7} {:>5}\n",
        "target", "model", "delta", "family", "err", "n", "c", "d", "nominal", "reps", "rate", "se"
    );
    for c in cells {
        out.push_str(&format!(
            "{:<13} {:<7} {:>5.2} {:<9} {:>3} {:>5} {:>3} {:>3} {:>7.3} {:>6} {:>7.3} {:>5.3}\n",
            c.label, c.model, c.delta, c.family, c.error, c.n, c.c, c.d, c.nominal, c.reps, c.rate, c.mc_se
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(reps: usize) -> McSettings {
        McSettings {
            b_reps: 50,
            m_reps: 50,
            grid: 8,
            orders: Some((2, 3)),
            ..McSettings::new(200, reps)
        }
    }

    #[test]
    fn study_layout() {
        let all = [TestName::Exact, TestName::Stationarity, TestName::Separability];
        assert_eq!(study_cells(Study::Table1, &all, &[], 0.1).len(), 3);
        assert_eq!(study_cells(Study::Table2, &all, &[], 0.1).len(), 3);
        let power = study_cells(Study::Power, &all, &[0.0, 0.4], 0.1);
        assert_eq!(power.len(), 6);
        assert_eq!(power[1].model.delta(), 0.4);
    }

    #[test]
    fn power_at_zero_is_the_size_cell() {
        let s = small(6);
        let size = &study_cells(Study::Table2, &[TestName::Stationarity], &[], 0.1)[0];
        let power = &study_cells(Study::Power, &[TestName::Stationarity], &[0.0], 0.1)[0];
        assert_eq!(run_cell(&s, size).unwrap(), run_cell(&s, power).unwrap());
    }

    #[test]
    fn reports_rates_and_standard_errors() {
        let s = small(8);
        let cell = &study_cells(Study::Table1, &[], &[], 0.1)[1];
        let rows = run_cell(&s, cell).unwrap();
        assert_eq!(rows.len(), 2);
        for r in &rows {
            assert_eq!(r.reps + r.failures, 8);
            assert!((0.0..=1.0).contains(&r.rate));
            assert!((r.mc_se - (r.rate * (1.0 - r.rate) / r.reps as f64).sqrt()).abs() < 1e-15);
        }
        // a wider band covers whenever a narrower one does
        assert!(rows[1].rate >= rows[0].rate);
    }

    #[test]
    fn results_do_not_depend_on_the_thread_count() {
        let s = small(5);
        let cell = &study_cells(Study::Table2, &[TestName::Exact], &[], 0.1)[0];
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = one.install(|| run_cell(&s, cell)).unwrap();
        let b = four.install(|| run_cell(&s, cell)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn bad_settings_are_config_errors() {
        let mut s = small(3);
        s.error = "z".into();
        let cell = &study_cells(Study::Table1, &[], &[], 0.1)[0];
        assert_eq!(run_cell(&s, cell).unwrap_err().exit_code(), 1);
        let mut s = small(3);
        s.family = "spline".into();
        assert_eq!(run_cell(&s, cell).unwrap_err().exit_code(), 1);
    }
}
