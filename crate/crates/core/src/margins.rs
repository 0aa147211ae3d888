//! Univariate machinery: the GEV law, block maxima, empirical CDFs and the
//! rank transform onto unit Fréchet margins.

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optim::{nelder_mead, NelderMeadConfig};
use crate::special::ln_gamma;

/// Shape values with `|ξ|` below this use the exact Gumbel formulas.
pub const GUMBEL_BAND: f64 = 1e-8;

/// Location, scale and shape of a GEV distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GevParams {
    pub mu: f64,
    pub sigma: f64,
    pub xi: f64,
}

impl GevParams {
    pub fn new(mu: f64, sigma: f64, xi: f64) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "GEV scale must be positive, got {sigma}"
            )));
        }
        if !mu.is_finite() || !xi.is_finite() {
            return Err(Error::InvalidParameter("GEV parameters must be finite".into()));
        }
        Ok(Self { mu, sigma, xi })
    }

    pub fn gumbel(mu: f64, sigma: f64) -> Result<Self> {
        Self::new(mu, sigma, 0.0)
    }

    pub fn unit_frechet() -> Self {
        Self {
            mu: 1.0,
            sigma: 1.0,
            xi: 1.0,
        }
    }

    fn is_gumbel(&self) -> bool {
        self.xi.abs() < GUMBEL_BAND
    }

    /// `1 + ξ(x − μ)/σ`, or `None` when the point is outside the support.
    fn support_term(&self, x: f64) -> Option<f64> {
        let t = 1.0 + self.xi * (x - self.mu) / self.sigma;
        (t > 0.0).then_some(t)
    }

    fn out_of_support(&self, x: f64) -> Error {
        Error::Domain(format!(
            "x={x} outside the support of GEV(mu={}, sigma={}, xi={})",
            self.mu, self.sigma, self.xi
        ))
    }
}

/// GEV distribution function.
pub fn gev_cdf(x: f64, p: &GevParams) -> Result<f64> {
    let z = (x - p.mu) / p.sigma;
    if p.is_gumbel() {
        return Ok((-(-z).exp()).exp());
    }
    let t = p.support_term(x).ok_or_else(|| p.out_of_support(x))?;
    Ok((-(-t.ln() / p.xi).exp()).exp())
}

/// Inverse of [`gev_cdf`].
pub fn gev_quantile(q: f64, p: &GevParams) -> Result<f64> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::Domain(format!("quantile level {q} outside (0, 1)")));
    }
    let y = -q.ln();
    if p.is_gumbel() {
        Ok(p.mu - p.sigma * y.ln())
    } else {
        Ok(p.mu + p.sigma * (-p.xi * y.ln()).exp_m1() / p.xi)
    }
}

/// Log density of the GEV distribution.
pub fn gev_logpdf(x: f64, p: &GevParams) -> Result<f64> {
    let z = (x - p.mu) / p.sigma;
    if p.is_gumbel() {
        return Ok(-p.sigma.ln() - z - (-z).exp());
    }
    let t = p.support_term(x).ok_or_else(|| p.out_of_support(x))?;
    let lt = t.ln();
    Ok(-p.sigma.ln() - (1.0 + 1.0 / p.xi) * lt - (-lt / p.xi).exp())
}

fn gev_nll(data: &[f64], p: &GevParams) -> f64 {
    let mut acc = 0.0;
    for &x in data {
        match gev_logpdf(x, p) {
            Ok(l) => acc -= l,
            Err(_) => return f64::INFINITY,
        }
    }
    acc
}

/// Probability-weighted-moment estimates (Hosking, Wallis & Wood).
fn pwm_start(sorted: &[f64]) -> GevParams {
    let n = sorted.len() as f64;
    let mut b0 = 0.0;
    let mut b1 = 0.0;
    let mut b2 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let i = i as f64;
        b0 += x;
        b1 += x * i / (n - 1.0);
        b2 += x * i * (i - 1.0) / ((n - 1.0) * (n - 2.0));
    }
    b0 /= n;
    b1 /= n;
    b2 /= n;
    let c = (2.0 * b1 - b0) / (3.0 * b2 - b0) - 2f64.ln() / 3f64.ln();
    let k = 7.8590 * c + 2.9554 * c * c;
    if !k.is_finite() || k.abs() < 1e-6 {
        let sigma = (2.0 * b1 - b0) / 2f64.ln();
        return GevParams {
            mu: b0 - 0.577_215_664_901_532_9 * sigma,
            sigma,
            xi: 0.0,
        };
    }
    let g = ln_gamma(1.0 + k).exp();
    let sigma = (2.0 * b1 - b0) * k / (g * (1.0 - 2f64.powf(-k)));
    GevParams {
        mu: b0 + sigma * (g - 1.0) / k,
        sigma,
        xi: -k,
    }
}

/// Maximum-likelihood GEV fit.
///
/// Data are standardized first; the simplex then searches over
/// `(μ, log σ, ξ)` from probability-weighted-moment starting values.
pub fn fit_gev(maxima: &[f64]) -> Result<GevParams> {
    if maxima.len() < 10 {
        return Err(Error::InsufficientData(format!(
            "GEV fit needs at least 10 observations, got {}",
            maxima.len()
        )));
    }
    if maxima.iter().any(|x| !x.is_finite()) {
        return Err(Error::Domain("GEV fit input contains non-finite values".into()));
    }
    let n = maxima.len() as f64;
    let mean = maxima.iter().sum::<f64>() / n;
    let sd = (maxima.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
    if !(sd > 0.0) || sd < 1e-12 * mean.abs().max(1.0) {
        return Err(Error::Degenerate("all observations are equal".into()));
    }
    let mut z: Vec<f64> = maxima.iter().map(|x| (x - mean) / sd).collect();
    z.sort_by(f64::total_cmp);

    let mut start = pwm_start(&z);
    if !(start.sigma > 0.0) || !start.sigma.is_finite() || !gev_nll(&z, &start).is_finite() {
        let sigma = 6f64.sqrt() / std::f64::consts::PI;
        start = GevParams {
            mu: -0.577_215_664_901_532_9 * sigma,
            sigma,
            xi: 0.0,
        };
    }

    let objective = |v: &[f64]| {
        let p = GevParams {
            mu: v[0],
            sigma: v[1].exp(),
            xi: v[2],
        };
        gev_nll(&z, &p)
    };
    let cfg = NelderMeadConfig {
        max_iter: 10_000,
        f_tol: 1e-12,
        x_tol: 1e-10,
        initial_step: 0.1,
    };
    let mut best = nelder_mead(objective, &[start.mu, start.sigma.ln(), start.xi], &cfg)?;
    // one restart from the optimum guards against premature simplex collapse
    let again = nelder_mead(objective, &best.x, &cfg)?;
    if again.value < best.value {
        best = again;
    }

    GevParams::new(
        mean + sd * best.x[0],
        sd * best.x[1].exp(),
        best.x[2],
    )
}

/// A calendar-indexed univariate series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniSeries {
    times: Vec<NaiveDate>,
    values: Vec<f64>,
}

impl UniSeries {
    pub fn new(times: Vec<NaiveDate>, values: Vec<f64>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::Misaligned(format!(
                "{} timestamps vs {} values",
                times.len(),
                values.len()
            )));
        }
        if let Some(w) = times.windows(2).find(|w| w[1] <= w[0]) {
            return Err(Error::Parse(format!(
                "timestamps must be strictly increasing ({} then {})",
                w[0], w[1]
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Parse(format!("non-finite value at row {i}")));
        }
        Ok(Self { times, values })
    }

    pub fn times(&self) -> &[NaiveDate] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Span between the first and last timestamp, in days.
    pub fn span_days(&self) -> f64 {
        match (self.times.first(), self.times.last()) {
            (Some(a), Some(b)) => (*b - *a).num_days() as f64,
            _ => 0.0,
        }
    }

    /// Median spacing between consecutive timestamps, in days.
    pub fn median_spacing_days(&self) -> Option<f64> {
        if self.times.len() < 2 {
            return None;
        }
        let mut gaps: Vec<i64> = self
            .times
            .windows(2)
            .map(|w| (w[1] - w[0]).num_days())
            .collect();
        gaps.sort_unstable();
        Some(gaps[gaps.len() / 2] as f64)
    }

    /// True when observations are a year or more apart (e.g. annual maxima).
    pub fn is_yearly(&self) -> bool {
        self.median_spacing_days().is_some_and(|d| d >= 360.0)
    }

    /// Same timestamps, new values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(self.times.clone(), values)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BlockPeriod {
    Month,
    Year,
}

impl BlockPeriod {
    fn key(self, d: NaiveDate) -> (i32, u32) {
        match self {
            BlockPeriod::Month => (d.year(), d.month()),
            BlockPeriod::Year => (d.year(), 1),
        }
    }

    fn bounds(self, (year, month): (i32, u32)) -> (NaiveDate, NaiveDate) {
        let start = NaiveDate::from_ymd_opt(year, month, 1).expect("valid block start");
        let end = match self {
            BlockPeriod::Year => NaiveDate::from_ymd_opt(year + 1, 1, 1),
            BlockPeriod::Month if month == 12 => NaiveDate::from_ymd_opt(year + 1, 1, 1),
            BlockPeriod::Month => NaiveDate::from_ymd_opt(year, month + 1, 1),
        }
        .expect("valid block end");
        (start, end)
    }
}

/// One maximum per calendar block, stamped at the block's midpoint.
///
/// A leading or trailing block holding fewer than half the observations a full
/// block would hold (judged from the series' median spacing) is dropped.
pub fn block_maxima(series: &UniSeries, block: BlockPeriod) -> Result<UniSeries> {
    if series.is_empty() {
        return Err(Error::InsufficientData("empty series".into()));
    }
    let mut groups: Vec<((i32, u32), f64, usize)> = Vec::new();
    for (t, &v) in series.times().iter().zip(series.values()) {
        let key = block.key(*t);
        match groups.last_mut() {
            Some((k, m, c)) if *k == key => {
                *m = m.max(v);
                *c += 1;
            }
            _ => groups.push((key, v, 1)),
        }
    }
    if groups.len() < 2 {
        return Err(Error::InsufficientData(
            "series must span at least two blocks".into(),
        ));
    }

    let spacing = series.median_spacing_days().unwrap_or(1.0).max(1.0);
    let stub = |key: (i32, u32), count: usize| {
        let (s, e) = block.bounds(key);
        let nominal = ((e - s).num_days() as f64 / spacing).max(1.0);
        (count as f64) < 0.5 * nominal
    };
    let last = groups.len() - 1;
    let mut times = Vec::with_capacity(groups.len());
    let mut values = Vec::with_capacity(groups.len());
    for (i, &(key, max, count)) in groups.iter().enumerate() {
        if (i == 0 || i == last) && stub(key, count) {
            continue;
        }
        let (s, e) = block.bounds(key);
        times.push(s + (e - s) / 2);
        values.push(max);
    }
    if values.is_empty() {
        return Err(Error::InsufficientData("no complete blocks".into()));
    }
    UniSeries::new(times, values)
}

/// Empirical CDF normalized by `n + 1`, ties counted with `≤`.
#[derive(Debug, Clone)]
pub struct EmpiricalCdf {
    sorted: Vec<f64>,
}

impl EmpiricalCdf {
    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn eval(&self, x: f64) -> f64 {
        let count = self.sorted.partition_point(|&v| v <= x);
        count as f64 / (self.sorted.len() as f64 + 1.0)
    }

    pub fn sorted(&self) -> &[f64] {
        &self.sorted
    }
}

pub fn empirical_cdf(data: &[f64]) -> EmpiricalCdf {
    let mut sorted = data.to_vec();
    sorted.sort_by(f64::total_cmp);
    EmpiricalCdf { sorted }
}

/// Type-1 (inverse step) empirical quantile of ascending `sorted` data.
pub fn empirical_quantile(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if p <= 0.0 {
        return sorted[0];
    }
    let idx = (n as f64 * p).ceil() as usize;
    sorted[idx.clamp(1, n) - 1]
}

/// Unit-Fréchet values with the rank each one came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrechetSample {
    values: Vec<f64>,
    source_ranks: Vec<usize>,
}

impl FrechetSample {
    /// Wraps values that are already on the unit-Fréchet scale.
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
            return Err(Error::Domain(format!(
                "Fréchet values must be positive and finite, got {v}"
            )));
        }
        let cdf = empirical_cdf(&values);
        let n1 = values.len() as f64 + 1.0;
        let source_ranks = values.iter().map(|&v| (cdf.eval(v) * n1).round() as usize).collect();
        Ok(Self {
            values,
            source_ranks,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn source_ranks(&self) -> &[usize] {
        &self.source_ranks
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Subsample by index.
    pub fn select(&self, idx: &[usize]) -> Self {
        Self {
            values: idx.iter().map(|&i| self.values[i]).collect(),
            source_ranks: idx.iter().map(|&i| self.source_ranks[i]).collect(),
        }
    }
}

/// `−1/log F̂(x_i)` with `F̂` normalized by `n + 1`.
pub fn to_unit_frechet(data: &[f64]) -> Result<FrechetSample> {
    if data.len() < 2 {
        return Err(Error::InsufficientData(
            "Fréchet transform needs at least two observations".into(),
        ));
    }
    let cdf = empirical_cdf(data);
    let n1 = data.len() as f64 + 1.0;
    let mut values = Vec::with_capacity(data.len());
    let mut source_ranks = Vec::with_capacity(data.len());
    for &x in data {
        let p = cdf.eval(x);
        values.push(-1.0 / p.ln());
        source_ranks.push((p * n1).round() as usize);
    }
    Ok(FrechetSample {
        values,
        source_ranks,
    })
}

/// Unit-Fréchet distribution function `exp(−1/x)`.
pub fn frechet_cdf(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        (-1.0 / x).exp()
    }
}

/// Kolmogorov–Smirnov distance between a sample and a continuous CDF.
pub fn ks_distance<F: Fn(f64) -> f64>(sample: &[f64], cdf: F) -> f64 {
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            ((i as f64 + 1.0) / n - f).max(f - i as f64 / n)
        })
        .fold(0.0, f64::max)
}
