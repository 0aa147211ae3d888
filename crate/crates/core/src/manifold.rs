//! Regression manifolds: families of conditional-quantile lines `y_{q|x}`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evmodels::{conditional_cdf, EvModel};
use crate::margins::empirical_quantile;

/// Bisection settings for conditional quantiles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub rel_tol: f64,
    pub max_iter: usize,
    pub bracket_growth: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            max_iter: 200,
            bracket_growth: 4.0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0) || self.max_iter < 20 || !(self.bracket_growth > 1.0) {
            return Err(Error::InvalidParameter(format!(
                "solver needs rel_tol > 0, max_iter >= 20 and bracket_growth > 1, got {self:?}"
            )));
        }
        Ok(())
    }
}

const BRACKET_LO: f64 = 1e-8;
const BRACKET_HI: f64 = 1.0;
const MONOTONE_SLACK: f64 = 1e-10;

/// Smallest `y` with `G_{Y|X}(y | x) ≥ q`, by bracket expansion and bisection.
pub fn conditional_quantile(model: &EvModel, q: f64, x: f64, cfg: &SolverConfig) -> Result<f64> {
    cfg.validate()?;
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::Domain(format!("q must lie in (0, 1), got {q}")));
    }
    if !(x > 0.0 && x.is_finite()) {
        return Err(Error::Domain(format!("x must be positive, got {x}")));
    }
    let rel_tol = if !(0.01..=0.99).contains(&q) {
        cfg.rel_tol.max(1e-8)
    } else {
        cfg.rel_tol
    };
    let f = |y: f64| conditional_cdf(model, y, x);

    let (mut lo, mut hi) = (BRACKET_LO, BRACKET_HI);
    let (mut f_lo, mut f_hi) = (f(lo)?, f(hi)?);
    let mut steps = 0;
    while f_lo >= q {
        steps += 1;
        if steps > cfg.max_iter || lo < 1e-300 {
            return Err(Error::BracketNotFound { q, x, steps });
        }
        hi = lo;
        f_hi = f_lo;
        lo /= cfg.bracket_growth;
        f_lo = f(lo)?;
    }
    while f_hi < q {
        steps += 1;
        if steps > cfg.max_iter || hi > 1e300 {
            return Err(Error::BracketNotFound { q, x, steps });
        }
        lo = hi;
        f_lo = f_hi;
        hi *= cfg.bracket_growth;
        f_hi = f(hi)?;
    }

    for _ in 0..cfg.max_iter {
        if hi - lo <= rel_tol * hi {
            return Ok(hi);
        }
        let mid = if hi > 4.0 * lo {
            (lo * hi).sqrt()
        } else {
            0.5 * (lo + hi)
        };
        let f_mid = f(mid)?;
        if f_mid < f_lo - MONOTONE_SLACK || f_mid > f_hi + MONOTONE_SLACK {
            return Err(Error::NonMonotone {
                x,
                y_lo: lo,
                y_hi: hi,
                f_lo,
                f_hi,
            });
        }
        if f_mid >= q {
            hi = mid;
            f_hi = f_mid;
        } else {
            lo = mid;
            f_lo = f_mid;
        }
    }
    Err(Error::NonConvergence(format!(
        "bisection for q={q} at x={x} did not reach tolerance in {} steps",
        cfg.max_iter
    )))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScaleTag {
    Frechet,
    Original,
}

impl ScaleTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            ScaleTag::Frechet => "frechet",
            ScaleTag::Original => "original",
        }
    }
}

/// Conditional quantiles on a `(q, x)` grid; `y[i][j]` is the line for
/// `q_grid[i]` evaluated at `x_grid[j]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionManifold {
    pub q_grid: Vec<f64>,
    pub x_grid: Vec<f64>,
    pub y: Vec<Vec<f64>>,
    pub scale: ScaleTag,
}

impl RegressionManifold {
    /// Line for `q_grid[i]`.
    pub fn line(&self, i: usize) -> &[f64] {
        &self.y[i]
    }

    /// Long-format CSV (`q,x,y,scale`) preceded by a `# ` line holding `meta`.
    pub fn to_csv(&self, meta: &serde_json::Value) -> String {
        let mut out = format!("# {meta}\nq,x,y,scale\n");
        for (i, q) in self.q_grid.iter().enumerate() {
            for (j, x) in self.x_grid.iter().enumerate() {
                out.push_str(&format!("{q},{x},{},{}\n", self.y[i][j], self.scale.as_str()));
            }
        }
        out
    }
}

/// `q = 0.05, 0.10, …, 0.95`.
pub fn default_q_grid() -> Vec<f64> {
    (1..=19).map(|i| i as f64 / 20.0).collect()
}

/// `count` log-spaced points on `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| {
            if i + 1 == count {
                hi
            } else {
                (a + (b - a) * i as f64 / (count - 1) as f64).exp()
            }
        })
        .collect()
}

/// 40 log-spaced points on `[0.5, 100]`.
pub fn default_x_grid() -> Vec<f64> {
    log_grid(0.5, 100.0, 40)
}

fn check_grids(q_grid: &[f64], x_grid: &[f64]) -> Result<()> {
    if q_grid.is_empty() || x_grid.is_empty() {
        return Err(Error::InvalidParameter("manifold grids must be non-empty".into()));
    }
    if q_grid.windows(2).any(|w| w[1] <= w[0]) || x_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("manifold grids must be strictly increasing".into()));
    }
    if q_grid.iter().any(|&q| !(q > 0.0 && q < 1.0)) {
        return Err(Error::InvalidParameter("q grid must lie in (0, 1)".into()));
    }
    if x_grid.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
        return Err(Error::InvalidParameter("x grid must be positive".into()));
    }
    Ok(())
}

/// Conditional quantile at every grid cell. Cells are solved in parallel and
/// assembled in grid order.
pub fn build_manifold(
    model: &EvModel,
    q_grid: &[f64],
    x_grid: &[f64],
    cfg: &SolverConfig,
) -> Result<RegressionManifold> {
    check_grids(q_grid, x_grid)?;
    model.validate()?;
    cfg.validate()?;
    let cells: Vec<(f64, f64)> = q_grid
        .iter()
        .flat_map(|&q| x_grid.iter().map(move |&x| (q, x)))
        .collect();
    let solved: Vec<Result<f64>> = cells
        .par_iter()
        .map(|&(q, x)| {
            conditional_quantile(model, q, x, cfg).map_err(|e| Error::Cell {
                q,
                x,
                source: Box::new(e),
            })
        })
        .collect();
    let mut flat = Vec::with_capacity(cells.len());
    for s in solved {
        flat.push(s?);
    }
    let y = flat.chunks(x_grid.len()).map(|c| c.to_vec()).collect();
    Ok(RegressionManifold {
        q_grid: q_grid.to_vec(),
        x_grid: x_grid.to_vec(),
        y,
        scale: ScaleTag::Frechet,
    })
}

/// Pointwise average of the manifolds of several models, e.g. posterior draws.
pub fn mean_manifold(
    models: &[EvModel],
    q_grid: &[f64],
    x_grid: &[f64],
    cfg: &SolverConfig,
) -> Result<RegressionManifold> {
    if models.is_empty() {
        return Err(Error::InvalidParameter("no models to average".into()));
    }
    let mut acc = build_manifold(&models[0], q_grid, x_grid, cfg)?;
    for m in &models[1..] {
        let next = build_manifold(m, q_grid, x_grid, cfg)?;
        for (row, add) in acc.y.iter_mut().zip(&next.y) {
            for (a, b) in row.iter_mut().zip(add) {
                *a += b;
            }
        }
    }
    let k = models.len() as f64;
    for row in acc.y.iter_mut() {
        for a in row.iter_mut() {
            *a /= k;
        }
    }
    Ok(acc)
}

/// Slope `{q^{−1/(1−α)} − 1}^{−α}` of the large-`x` logistic approximation.
pub fn logistic_approx_slope(alpha: f64, q: f64) -> Result<f64> {
    check_approx(alpha, q)?;
    Ok((q.powf(-1.0 / (1.0 - alpha)) - 1.0).powf(-alpha))
}

fn check_approx(alpha: f64, q: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "the logistic approximation needs alpha in (0, 1), got {alpha}"
        )));
    }
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::Domain(format!("q must lie in (0, 1), got {q}")));
    }
    Ok(())
}

/// Large-`x` approximation of the logistic regression line:
///
/// `ỹ = α/(1−α) {q^{1/(α−1)} − 1}^{−α−1} {q^{α/(1−α)} − 1} q^{1/(α−1)} + {q^{−1/(1−α)} − 1}^{−α} x`.
///
/// Only meaningful for `x ≫ 1`; the intercept may be negative.
pub fn logistic_approx_line(alpha: f64, q: f64, x: f64) -> Result<f64> {
    check_approx(alpha, q)?;
    if x < 10.0 {
        log::warn!("logistic approximation used at x={x} < 10, outside its regime of validity");
    }
    let p = q.powf(1.0 / (alpha - 1.0));
    let intercept = alpha / (1.0 - alpha)
        * (p - 1.0).powf(-alpha - 1.0)
        * (q.powf(alpha / (1.0 - alpha)) - 1.0)
        * p;
    Ok(intercept + logistic_approx_slope(alpha, q)? * x)
}

/// Map a Fréchet-scale manifold onto the data scale through the step
/// empirical quantile at probability `exp(−1/z)`.
pub fn manifold_to_original_scale(
    m: &RegressionManifold,
    x_data: &[f64],
    y_data: &[f64],
) -> Result<RegressionManifold> {
    if m.scale != ScaleTag::Frechet {
        return Err(Error::InvalidParameter("manifold is already on the original scale".into()));
    }
    if x_data.is_empty() || y_data.is_empty() {
        return Err(Error::InsufficientData("empty data for the original-scale map".into()));
    }
    let xs = sorted(x_data);
    let ys = sorted(y_data);
    Ok(RegressionManifold {
        q_grid: m.q_grid.clone(),
        x_grid: m.x_grid.iter().map(|&z| frechet_to_data(&xs, z)).collect(),
        y: m
            .y
            .iter()
            .map(|row| row.iter().map(|&z| frechet_to_data(&ys, z)).collect())
            .collect(),
        scale: ScaleTag::Original,
    })
}

fn sorted(data: &[f64]) -> Vec<f64> {
    let mut v = data.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Empirical quantile of `sorted` at `exp(−1/z)`.
pub fn frechet_to_data(sorted: &[f64], z: f64) -> f64 {
    empirical_quantile(sorted, (-1.0 / z).exp())
}

/// Fréchet value of a data-scale point under the `n + 1` normalized empirical CDF.
pub fn data_to_frechet(sorted: &[f64], v: f64) -> f64 {
    let n = sorted.len();
    let rank = sorted.partition_point(|&s| s <= v).clamp(1, n);
    -1.0 / (rank as f64 / (n as f64 + 1.0)).ln()
}

/// Conditional quantiles: `values[i][j]` is the `q_levels[i]` quantile of `Y`
/// given the covariate `covariates[j]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileTable {
    pub q_levels: Vec<f64>,
    pub covariates: Vec<f64>,
    pub values: Vec<Vec<f64>>,
    pub scale: ScaleTag,
}

impl QuantileTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("q");
        for c in &self.covariates {
            out.push_str(&format!(",{c}"));
        }
        out.push('\n');
        for (i, q) in self.q_levels.iter().enumerate() {
            out.push_str(&q.to_string());
            for v in &self.values[i] {
                out.push_str(&format!(",{v}"));
            }
            out.push('\n');
        }
        out
    }

    /// Aligned plain-text table, one row per quantile level.
    pub fn to_text(&self) -> String {
        let mut out = format!("{:>10}", "q \\ x");
        for c in &self.covariates {
            out.push_str(&format!(" {:>12}", format!("{c:.4}")));
        }
        out.push('\n');
        for (i, q) in self.q_levels.iter().enumerate() {
            out.push_str(&format!("{:>10}", format!("{:.0}%", q * 100.0)));
            for v in &self.values[i] {
                out.push_str(&format!(" {v:>12.4}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Conditional quantiles of `model` on the Fréchet scale.
pub fn predict_quantile_table(
    model: &EvModel,
    covariates: &[f64],
    q_levels: &[f64],
    cfg: &SolverConfig,
) -> Result<QuantileTable> {
    if covariates.is_empty() || q_levels.is_empty() {
        return Err(Error::InvalidParameter("quantile table needs levels".into()));
    }
    let mut values = Vec::with_capacity(q_levels.len());
    for &q in q_levels {
        let row = covariates
            .iter()
            .map(|&x| conditional_quantile(model, q, x, cfg))
            .collect::<Result<Vec<_>>>()?;
        values.push(row);
    }
    Ok(QuantileTable {
        q_levels: q_levels.to_vec(),
        covariates: covariates.to_vec(),
        values,
        scale: ScaleTag::Frechet,
    })
}

/// Quantile table on the data scale: covariates are data values of `X`,
/// carried to the Fréchet scale through the empirical CDF of `x_data`; the
/// solved quantiles are carried back through that of `y_data`.
pub fn predict_quantile_table_original(
    model: &EvModel,
    covariates: &[f64],
    q_levels: &[f64],
    x_data: &[f64],
    y_data: &[f64],
    cfg: &SolverConfig,
) -> Result<QuantileTable> {
    if x_data.is_empty() || y_data.is_empty() {
        return Err(Error::InsufficientData("empty data for the original-scale map".into()));
    }
    let xs = sorted(x_data);
    let ys = sorted(y_data);
    let z: Vec<f64> = covariates.iter().map(|&c| data_to_frechet(&xs, c)).collect();
    let mut table = predict_quantile_table(model, &z, q_levels, cfg)?;
    for row in table.values.iter_mut() {
        for v in row.iter_mut() {
            *v = frechet_to_data(&ys, *v);
        }
    }
    table.covariates = covariates.to_vec();
    table.scale = ScaleTag::Original;
    Ok(table)
}
