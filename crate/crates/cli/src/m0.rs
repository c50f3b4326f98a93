//! Null regression functions for the exact-form tests.

use std::path::Path;

use sieve_lab_core::RegressionModelSpec;

use crate::error::{CliError, CliResult};
use crate::io::{read_table, Table};

/// Values on a rectangular `(t, x)` grid, interpolated bilinearly and held
/// constant beyond the outermost knots.
#[derive(Clone, Debug, PartialEq)]
pub struct BilinearGrid {
    t: Vec<f64>,
    x: Vec<f64>,
    // values[i * x.len() + k] at (t[i], x[k])
    values: Vec<f64>,
}

impl BilinearGrid {
    /// Builds the grid from columns `t`, `x`, `value`, in any row order.
    pub fn from_table(table: &Table, origin: &str) -> CliResult<Self> {
        let col = |name: &str| {
            table
                .column(name)
                .ok_or_else(|| CliError::data(format!("{origin}: no '{name}' column")))
        };
        let (ts, xs, vs) = (col("t")?, col("x")?, col("value")?);
        let knots = |v: &[f64]| {
            let mut k = v.to_vec();
            k.sort_by(f64::total_cmp);
            k.dedup();
            k
        };
        let (t, x) = (knots(ts), knots(xs));
        if t.len() < 2 || x.len() < 2 {
            return Err(CliError::data(format!(
                "{origin}: the m0 grid needs at least two distinct t and x values"
            )));
        }
        if ts.len() != t.len() * x.len() {
            return Err(CliError::data(format!(
                "{origin}: {} rows do not form a {} x {} grid",
                ts.len(),
                t.len(),
                x.len()
            )));
        }
        let mut values = vec![f64::NAN; t.len() * x.len()];
        for (row, ((&tv, &xv), &v)) in ts.iter().zip(xs).zip(vs).enumerate() {
            let i = t.partition_point(|&k| k < tv);
            let k = x.partition_point(|&k| k < xv);
            let slot = &mut values[i * x.len() + k];
            if !slot.is_nan() {
                return Err(CliError::data(format!(
                    "{origin}: row {} repeats the point (t = {tv}, x = {xv})",
                    row + 1
                )));
            }
            *slot = v;
        }
        Ok(BilinearGrid { t, x, values })
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        Self::from_table(&read_table(path)?, &path.display().to_string())
    }

    pub fn eval(&self, t: f64, x: f64) -> f64 {
        let (i, u) = bracket(&self.t, t);
        let (k, v) = bracket(&self.x, x);
        let w = self.x.len();
        let at = |a: usize, b: usize| self.values[a * w + b];
        (1.0 - u) * ((1.0 - v) * at(i, k) + v * at(i, k + 1))
            + u * ((1.0 - v) * at(i + 1, k) + v * at(i + 1, k + 1))
    }
}

/// Cell index and fractional position of `z` among ascending `knots`, clamped
/// to the outer cells.
fn bracket(knots: &[f64], z: f64) -> (usize, f64) {
    let last = knots.len() - 1;
    if z <= knots[0] {
        return (0, 0.0);
    }
    if z >= knots[last] {
        return (last - 1, 1.0);
    }
    let i = knots.partition_point(|&k| k <= z) - 1;
    (i, (z - knots[i]) / (knots[i + 1] - knots[i]))
}

/// A null function given by name (`zero`, or `model1`, `model2`, `model3` with
/// an optional `:δ`) or by a CSV grid (`grid:path.csv`).
#[derive(Clone, Debug)]
pub enum NullFunction {
    Zero,
    Builtin(RegressionModelSpec),
    Grid(BilinearGrid),
}

impl NullFunction {
    pub fn parse(text: &str) -> CliResult<Self> {
        if text == "zero" {
            return Ok(NullFunction::Zero);
        }
        if let Some(path) = text.strip_prefix("grid:") {
            return Ok(NullFunction::Grid(BilinearGrid::load(Path::new(path))?));
        }
        let (name, delta) = match text.split_once(':') {
            Some((n, d)) => (
                n,
                d.parse::<f64>()
                    .map_err(|_| CliError::config(format!("m0 '{text}': bad delta '{d}'")))?,
            ),
            None => (text, 0.0),
        };
        Ok(NullFunction::Builtin(RegressionModelSpec::by_name(name, delta)?))
    }

    pub fn eval(&self, t: f64, x: f64) -> f64 {
        match self {
            NullFunction::Zero => 0.0,
            NullFunction::Builtin(m) => m.m(t, x),
            NullFunction::Grid(g) => g.eval(t, x),
        }
    }
}
