//! Transformed-stationary decomposition of a non-stationary series.
//!
//! A series `y_t` is mapped to `x_t = (y_t − T0_t − s_T[m]) / (S0_t · s_S[m])`
//! where `T0` is a running mean over a multi-year window, `S0` a smoothed
//! running standard deviation, and `s_T`, `s_S` month-of-year seasonal terms.
//! GEV parameters fitted on `x_t` are carried back to time-varying form.

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::margins::{GevParams, UniSeries};

const DAYS_PER_YEAR: f64 = 365.25;
const WINDOW_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Seasonality {
    /// Enabled unless the series has yearly resolution.
    #[default]
    Auto,
    On,
    Off,
}

/// Window lengths for the decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TsConfig {
    /// Long window `w`, in years.
    pub window_years: f64,
    /// Short window for the seasonal standard deviation, in days.
    pub short_window_days: f64,
    /// The running std is smoothed over `w / l`.
    pub smoothing_divisor: u32,
    /// Apply one more running-mean pass over `w / l` to the smoothed std.
    pub extra_smoothing: bool,
    pub seasonality: Seasonality,
}

impl Default for TsConfig {
    fn default() -> Self {
        Self {
            window_years: 5.0,
            short_window_days: 31.0,
            smoothing_divisor: 2,
            extra_smoothing: false,
            seasonality: Seasonality::Auto,
        }
    }
}

impl TsConfig {
    pub fn new(window_years: f64, short_window_days: f64, smoothing_divisor: u32) -> Result<Self> {
        let cfg = Self {
            window_years,
            short_window_days,
            smoothing_divisor,
            ..Self::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.window_years >= 2.0) {
            return Err(Error::InvalidParameter(format!(
                "window w must be at least 2 years, got {}",
                self.window_years
            )));
        }
        if !(self.short_window_days > 0.0 && self.short_window_days <= 92.0) {
            return Err(Error::InvalidParameter(format!(
                "short window must lie in (0, 92] days, got {}",
                self.short_window_days
            )));
        }
        if self.smoothing_divisor < 1 {
            return Err(Error::InvalidParameter("smoothing divisor l must be >= 1".into()));
        }
        if self.window_years / self.smoothing_divisor as f64 * DAYS_PER_YEAR
            < self.short_window_days
        {
            return Err(Error::InvalidParameter(
                "w / l must not be shorter than the short window".into(),
            ));
        }
        Ok(())
    }

    fn half_window(&self) -> f64 {
        self.window_years / 2.0
    }

    fn half_smoothing_window(&self) -> f64 {
        self.window_years / (2.0 * self.smoothing_divisor as f64)
    }

    fn half_short_window(&self) -> f64 {
        self.short_window_days / DAYS_PER_YEAR / 2.0
    }

    pub fn season_enabled_for(&self, series: &UniSeries) -> bool {
        match self.seasonality {
            Seasonality::On => true,
            Seasonality::Off => false,
            Seasonality::Auto => !series.is_yearly(),
        }
    }
}

/// Decimal-year position of a date.
fn decimal_year(d: NaiveDate) -> f64 {
    let len = if d.leap_year() { 366.0 } else { 365.0 };
    d.year() as f64 + (d.ordinal0() as f64) / len
}

fn decimal_years(series: &UniSeries) -> Vec<f64> {
    series.times().iter().map(|&d| decimal_year(d)).collect()
}

fn month_index(series: &UniSeries) -> Vec<u8> {
    series.times().iter().map(|d| d.month0() as u8).collect()
}

/// Index ranges `[lo, hi)` of points within `half` of each point.
fn window_bounds(t: &[f64], half: f64) -> Vec<(usize, usize)> {
    let n = t.len();
    let mut out = Vec::with_capacity(n);
    let (mut lo, mut hi) = (0usize, 0usize);
    for i in 0..n {
        while t[i] - t[lo] > half + WINDOW_EPS {
            lo += 1;
        }
        while hi < n && t[hi] - t[i] <= half + WINDOW_EPS {
            hi += 1;
        }
        out.push((lo, hi));
    }
    out
}

/// Running mean with a truncated window at the edges.
pub fn running_mean(t: &[f64], values: &[f64], half: f64) -> Vec<f64> {
    let mut prefix = Vec::with_capacity(values.len() + 1);
    prefix.push(0.0);
    let mut acc = 0.0;
    for v in values {
        acc += v;
        prefix.push(acc);
    }
    window_bounds(t, half)
        .into_iter()
        .map(|(lo, hi)| (prefix[hi] - prefix[lo]) / (hi - lo) as f64)
        .collect()
}

/// Population standard deviation over each window.
fn running_sd(t: &[f64], values: &[f64], half: f64) -> Vec<f64> {
    window_bounds(t, half)
        .into_iter()
        .map(|(lo, hi)| {
            let w = &values[lo..hi];
            let n = w.len() as f64;
            let mean = w.iter().sum::<f64>() / n;
            (w.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt()
        })
        .collect()
}

fn check_span(series: &UniSeries, cfg: &TsConfig) -> Result<()> {
    let span_years = series.span_days() / DAYS_PER_YEAR;
    if series.len() < 2 || span_years + 1e-6 < cfg.window_years {
        return Err(Error::InsufficientData(format!(
            "window of {} years exceeds the series span of {:.2} years",
            cfg.window_years, span_years
        )));
    }
    Ok(())
}

/// Long-term trend `T0`: running mean over `[t − w/2, t + w/2]`.
pub fn running_trend(series: &UniSeries, cfg: &TsConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    check_span(series, cfg)?;
    Ok(running_mean(&decimal_years(series), series.values(), cfg.half_window()))
}

fn monthly_means(months: &[u8], values: impl Iterator<Item = f64>) -> Result<[f64; 12]> {
    let mut sum = [0.0; 12];
    let mut count = [0usize; 12];
    for (&m, v) in months.iter().zip(values) {
        sum[m as usize] += v;
        count[m as usize] += 1;
    }
    let mut out = [0.0; 12];
    for m in 0..12 {
        if count[m] == 0 {
            return Err(Error::EmptyMonth { month: m as u32 + 1 });
        }
        out[m] = sum[m] / count[m] as f64;
    }
    Ok(out)
}

/// Seasonal trend `s_T`: mean detrended value per month of year.
pub fn trend_seasonality(series: &UniSeries, trend: &[f64]) -> Result<[f64; 12]> {
    if trend.len() != series.len() {
        return Err(Error::Misaligned(format!(
            "trend has {} points, series {}",
            trend.len(),
            series.len()
        )));
    }
    let months = month_index(series);
    monthly_means(
        &months,
        series.values().iter().zip(trend).map(|(y, t)| y - t),
    )
}

fn detrended(series: &UniSeries, center: &[f64]) -> Result<Vec<f64>> {
    if center.len() != series.len() {
        return Err(Error::Misaligned(format!(
            "center has {} points, series {}",
            center.len(),
            series.len()
        )));
    }
    Ok(series.values().iter().zip(center).map(|(y, c)| y - c).collect())
}

/// Running mean of a profile over the `w / l` smoothing window.
pub fn smooth_profile(series: &UniSeries, profile: &[f64], cfg: &TsConfig) -> Vec<f64> {
    running_mean(&decimal_years(series), profile, cfg.half_smoothing_window())
}

/// Long-term standard deviation `S0`.
///
/// The rough running std of `y − center` over the long window is smoothed by a
/// running mean over `w / l`.
pub fn running_std(series: &UniSeries, center: &[f64], cfg: &TsConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    check_span(series, cfg)?;
    let t = decimal_years(series);
    let d = detrended(series, center)?;
    let rough = running_sd(&t, &d, cfg.half_window());
    if let Some(i) = rough.iter().position(|&s| !(s > 0.0)) {
        return Err(Error::ZeroVariance(format!(
            "running window around {} has no spread",
            series.times()[i]
        )));
    }
    let mut smooth = running_mean(&t, &rough, cfg.half_smoothing_window());
    if cfg.extra_smoothing {
        smooth = running_mean(&t, &smooth, cfg.half_smoothing_window());
    }
    Ok(smooth)
}

/// Seasonal std factor `s_S`: per month, the mean ratio of the short-window
/// std to `S0`.
pub fn std_seasonality(
    series: &UniSeries,
    center: &[f64],
    std: &[f64],
    cfg: &TsConfig,
) -> Result<[f64; 12]> {
    if std.len() != series.len() {
        return Err(Error::Misaligned(format!(
            "std has {} points, series {}",
            std.len(),
            series.len()
        )));
    }
    let t = decimal_years(series);
    let d = detrended(series, center)?;
    let short = running_sd(&t, &d, cfg.half_short_window());
    let months = month_index(series);
    let out = monthly_means(&months, short.iter().zip(std).map(|(s, s0)| s / s0))?;
    if let Some(m) = out.iter().position(|&v| !(v > 0.0)) {
        return Err(Error::ZeroVariance(format!(
            "seasonal std factor for month {} is zero; the short window holds a single observation",
            m + 1
        )));
    }
    Ok(out)
}

/// Trend, variability and seasonal components of one series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TsDecomposition {
    pub trend: Vec<f64>,
    pub trend_season: [f64; 12],
    pub std: Vec<f64>,
    pub std_season: [f64; 12],
    pub season_enabled: bool,
    /// Month of year (0-based) of each point.
    pub months: Vec<u8>,
}

impl TsDecomposition {
    pub fn len(&self) -> usize {
        self.trend.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trend.is_empty()
    }

    /// `T0_t + s_T[month t]`.
    pub fn location(&self, i: usize) -> f64 {
        self.trend[i] + self.trend_season[self.months[i] as usize]
    }

    /// `S0_t · s_S[month t]`.
    pub fn scale(&self, i: usize) -> f64 {
        self.std[i] * self.std_season[self.months[i] as usize]
    }
}

/// Decompose and stationarize a series.
pub fn stationarize(series: &UniSeries, cfg: &TsConfig) -> Result<(UniSeries, TsDecomposition)> {
    let season = cfg.season_enabled_for(series);
    let trend = running_trend(series, cfg)?;
    let months = month_index(series);
    let trend_season = if season {
        trend_seasonality(series, &trend)?
    } else {
        [0.0; 12]
    };
    let center: Vec<f64> = trend
        .iter()
        .zip(&months)
        .map(|(t, &m)| t + trend_season[m as usize])
        .collect();
    let std = running_std(series, &center, cfg)?;
    let std_season = if season {
        std_seasonality(series, &center, &std, cfg)?
    } else {
        [1.0; 12]
    };
    let decomposition = TsDecomposition {
        trend,
        trend_season,
        std,
        std_season,
        season_enabled: season,
        months,
    };
    let x = series
        .values()
        .iter()
        .enumerate()
        .map(|(i, y)| (y - decomposition.location(i)) / decomposition.scale(i))
        .collect();
    Ok((series.with_values(x)?, decomposition))
}

/// Inverse of [`stationarize`].
pub fn restore_series(x: &UniSeries, d: &TsDecomposition) -> Result<UniSeries> {
    if x.len() != d.len() || d.months.len() != d.len() || d.std.len() != d.len() {
        return Err(Error::Misaligned(format!(
            "series has {} points, decomposition {}",
            x.len(),
            d.len()
        )));
    }
    let y = x
        .values()
        .iter()
        .enumerate()
        .map(|(i, v)| v * d.scale(i) + d.location(i))
        .collect();
    x.with_values(y)
}

/// Time-varying GEV parameters of the original series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeVaryingGev {
    pub mu_t: Vec<f64>,
    pub sigma_t: Vec<f64>,
    pub xi: f64,
}

impl TimeVaryingGev {
    pub fn at(&self, i: usize) -> GevParams {
        GevParams {
            mu: self.mu_t[i],
            sigma: self.sigma_t[i],
            xi: self.xi,
        }
    }
}

/// Carry a GEV fitted on the stationarized series back to the original scale:
/// `σ_t = S_t σ`, `μ_t = S_t μ + T_t`, shape unchanged.
pub fn destationarize_gev(p: &GevParams, d: &TsDecomposition) -> TimeVaryingGev {
    let mut mu_t = Vec::with_capacity(d.len());
    let mut sigma_t = Vec::with_capacity(d.len());
    for i in 0..d.len() {
        let s = d.scale(i);
        let sigma = s * p.sigma;
        assert!(sigma > 0.0, "time-varying scale must stay positive");
        sigma_t.push(sigma);
        mu_t.push(s * p.mu + d.location(i));
    }
    TimeVaryingGev {
        mu_t,
        sigma_t,
        xi: p.xi,
    }
}

/// Plot-ready CSV of a decomposition.
pub fn decomposition_csv(series: &UniSeries, d: &TsDecomposition, x: &UniSeries) -> String {
    let mut out = String::from("date,value,trend,trend_season,std,std_season,stationarized\n");
    for i in 0..series.len() {
        let m = d.months[i] as usize;
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            series.times()[i].format("%Y-%m-%d"),
            series.values()[i],
            d.trend[i],
            d.trend_season[m],
            d.std[i],
            d.std_season[m],
            x.values()[i]
        ));
    }
    out
}

/// Time-varying GEV parameters as CSV.
pub fn time_varying_gev_csv(series: &UniSeries, p: &TimeVaryingGev) -> String {
    let mut out = String::from("date,mu,sigma,xi\n");
    for (i, t) in series.times().iter().enumerate() {
        out.push_str(&format!(
            "{},{},{},{}\n",
            t.format("%Y-%m-%d"),
            p.mu_t[i],
            p.sigma_t[i],
            p.xi
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::margins::gev_quantile;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn yearly(values: &[f64]) -> UniSeries {
        let times = (0..values.len())
            .map(|i| NaiveDate::from_ymd_opt(1990 + i as i32, 1, 1).unwrap())
            .collect();
        UniSeries::new(times, values.to_vec()).unwrap()
    }

    fn daily(n: usize, f: impl Fn(usize, NaiveDate) -> f64) -> UniSeries {
        let start = NaiveDate::from_ymd_opt(1980, 1, 1).unwrap();
        let times: Vec<_> = (0..n).map(|i| start + chrono::Days::new(i as u64)).collect();
        let values = times.iter().enumerate().map(|(i, &d)| f(i, d)).collect();
        UniSeries::new(times, values).unwrap()
    }

    fn noise(seed: u64, n: usize) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
    }

    #[test]
    fn config_invariants() {
        assert!(TsConfig::new(1.5, 31.0, 2).is_err());
        assert!(TsConfig::new(5.0, 120.0, 2).is_err());
        assert!(TsConfig::new(5.0, 31.0, 0).is_err());
        assert!(TsConfig::new(2.0, 92.0, 10).is_err());
        assert!(TsConfig::new(5.0, 31.0, 2).is_ok());
    }

    #[test]
    fn running_trend_unit_window() {
        let s = yearly(&[1.0, 2.0, 3.0, 4.0, 5.0]);
        let cfg = TsConfig::new(2.0, 31.0, 1).unwrap();
        let t = running_trend(&s, &cfg).unwrap();
        assert_relative_eq!(t[2], 3.0);
        // truncated edges
        assert_relative_eq!(t[0], 1.5);
        assert_relative_eq!(t[4], 4.5);
    }

    #[test]
    fn running_trend_constant_and_linear() {
        let cfg = TsConfig::default();
        let c = daily(4000, |_, _| 2.5);
        assert!(running_trend(&c, &cfg).unwrap().iter().all(|&v| (v - 2.5).abs() < 1e-12));

        let yrs: Vec<f64> = (0..40).map(|i| 0.37 * i as f64).collect();
        let lin = yearly(&yrs);
        let t = running_trend(&lin, &cfg).unwrap();
        for i in 3..37 {
            assert!((t[i] - yrs[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn window_longer_than_series_fails() {
        let s = daily(300, |i, _| i as f64);
        assert!(running_trend(&s, &TsConfig::default()).is_err());
    }

    #[test]
    fn trend_seasonality_examples() {
        let zero = daily(800, |_, _| 0.0);
        assert_eq!(trend_seasonality(&zero, &vec![0.0; 800]).unwrap(), [0.0; 12]);

        let jan = daily(1200, |_, d| if d.month() == 1 { 1.0 } else { 0.0 });
        let st = trend_seasonality(&jan, &vec![0.0; 1200]).unwrap();
        assert_eq!(st[0], 1.0);
        assert!(st[1..].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn trend_seasonality_of_annual_sinusoid() {
        let f = |d: NaiveDate| (2.0 * std::f64::consts::PI * decimal_year(d)).sin();
        let s = daily(3653, |_, d| f(d));
        let cfg = TsConfig::new(2.0, 31.0, 2).unwrap();
        let trend = running_trend(&s, &cfg).unwrap();
        let st = trend_seasonality(&s, &trend).unwrap();
        // oracle: average the sinusoid directly within each calendar month
        let mut sum = [0.0; 12];
        let mut cnt = [0.0; 12];
        for d in s.times() {
            sum[d.month0() as usize] += f(*d);
            cnt[d.month0() as usize] += 1.0;
        }
        for m in 0..12 {
            assert!((st[m] - sum[m] / cnt[m]).abs() < 0.05, "month {m}");
        }
    }

    #[test]
    fn running_std_of_white_noise() {
        let z = noise(3, 5000);
        let s = daily(5000, |i, _| z[i]);
        let cfg = TsConfig::default();
        let trend = running_trend(&s, &cfg).unwrap();
        let sd = running_std(&s, &trend, &cfg).unwrap();
        for v in &sd[1000..4000] {
            assert!((0.9..=1.1).contains(v), "{v}");
        }
    }

    #[test]
    fn running_std_zero_variance() {
        let s = daily(3000, |_, _| 4.0);
        let err = running_std(&s, &vec![4.0; 3000], &TsConfig::default()).unwrap_err();
        assert!(err.to_string().contains("zero variance"));
    }

    #[test]
    fn smoothing_keeps_constant_profile() {
        let s = daily(3000, |i, _| i as f64);
        let profile = vec![1.7; 3000];
        assert!(smooth_profile(&s, &profile, &TsConfig::default())
            .iter()
            .all(|&v| (v - 1.7).abs() < 1e-12));
    }

    #[test]
    fn std_seasonality_homoskedastic() {
        let z = noise(4, 365 * 12);
        let s = daily(z.len(), |i, _| z[i]);
        let (_, d) = stationarize(&s, &TsConfig::default()).unwrap();
        for v in d.std_season {
            assert!((v - 1.0).abs() < 0.15, "{v}");
        }
    }

    #[test]
    fn std_seasonality_july_doubling() {
        let z = noise(5, 365 * 20);
        let s = daily(z.len(), |i, d| if d.month() == 7 { 2.0 * z[i] } else { z[i] });
        let (_, d) = stationarize(&s, &TsConfig::default()).unwrap();
        let baseline: f64 = [0usize, 1, 2, 3, 9, 10, 11].iter().map(|&m| d.std_season[m]).sum::<f64>() / 7.0;
        let ratio = d.std_season[6] / baseline;

        // oracle: expected short-window std for each July day from the share of
        // July days inside its 31-day window (variance 4 vs 1)
        let mut acc = 0.0;
        for day in 1..=31i32 {
            let in_july = (day - 15..=day + 15).filter(|d| (1..=31).contains(d)).count() as f64;
            let f = in_july / 31.0;
            acc += (4.0 * f + (1.0 - f)).sqrt();
        }
        let expected = acc / 31.0;
        assert!((ratio / expected - 1.0).abs() < 0.1, "ratio {ratio} vs {expected}");
    }

    #[test]
    fn std_seasonality_month_without_data() {
        let start = NaiveDate::from_ymd_opt(2000, 1, 1).unwrap();
        let times: Vec<_> = (0..3000)
            .map(|i| start + chrono::Days::new(i))
            .filter(|d| d.month() != 3)
            .collect();
        let z = noise(6, times.len());
        let s = UniSeries::new(times, z).unwrap();
        let cfg = TsConfig { seasonality: Seasonality::On, ..TsConfig::default() };
        assert!(matches!(stationarize(&s, &cfg), Err(Error::EmptyMonth { month: 3 })));
    }

    #[test]
    fn stationarize_round_trip() {
        let z = noise(7, 4000);
        let s = daily(4000, |i, d| 10.0 + 0.002 * i as f64 + (d.month() as f64).sin() + z[i] * (1.0 + 0.3 * (d.month() as f64).cos()));
        let (x, d) = stationarize(&s, &TsConfig::default()).unwrap();
        let back = restore_series(&x, &d).unwrap();
        for (a, b) in back.values().iter().zip(s.values()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn stationarize_white_noise() {
        let z = noise(8, 6000);
        let s = daily(6000, |i, _| z[i]);
        let (x, _) = stationarize(&s, &TsConfig::default()).unwrap();
        let n = x.len() as f64;
        let mean = x.values().iter().sum::<f64>() / n;
        let sd = (x.values().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
        assert!(mean.abs() < 0.05, "mean {mean}");
        assert!((0.9..=1.1).contains(&sd), "sd {sd}");
    }

    fn ols_slope(t: &[f64], y: &[f64]) -> f64 {
        let n = t.len() as f64;
        let tm = t.iter().sum::<f64>() / n;
        let ym = y.iter().sum::<f64>() / n;
        let num: f64 = t.iter().zip(y).map(|(a, b)| (a - tm) * (b - ym)).sum();
        let den: f64 = t.iter().map(|a| (a - tm).powi(2)).sum();
        num / den
    }

    #[test]
    fn stationarize_removes_linear_trend() {
        let n = 365 * 30;
        let z = noise(9, n);
        let s = daily(n, |i, _| i as f64 + z[i]);
        let (x, _) = stationarize(&s, &TsConfig::default()).unwrap();
        let t: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let before = ols_slope(&t, s.values());
        let after = ols_slope(&t, x.values());
        assert!(after.abs() < 0.01 * before.abs(), "{after} vs {before}");
    }

    #[test]
    fn seasonality_off_is_plain_standardization() {
        let z = noise(10, 3000);
        let s = daily(3000, |i, d| z[i] + d.month() as f64);
        let cfg = TsConfig { seasonality: Seasonality::Off, ..TsConfig::default() };
        let (x, d) = stationarize(&s, &cfg).unwrap();
        assert!(!d.season_enabled);
        assert_eq!(d.trend_season, [0.0; 12]);
        assert_eq!(d.std_season, [1.0; 12]);
        for i in 0..s.len() {
            assert_eq!(x.values()[i], (s.values()[i] - d.trend[i]) / d.std[i]);
        }
    }

    #[test]
    fn yearly_input_disables_seasonality_by_default() {
        let z = noise(11, 50);
        let s = yearly(&z);
        let (_, d) = stationarize(&s, &TsConfig::default()).unwrap();
        assert!(!d.season_enabled);
    }

    #[test]
    fn trend_stays_near_mean_on_stationary_input() {
        let z = noise(12, 2000);
        let s = daily(2000, |i, _| 3.0 + z[i]);
        let cfg = TsConfig::new(2.0, 31.0, 2).unwrap();
        let trend = running_trend(&s, &cfg).unwrap();
        let n = z.len() as f64;
        let mean = s.values().iter().sum::<f64>() / n;
        let sd = (s.values().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
        let t = decimal_years(&s);
        for (i, (lo, hi)) in window_bounds(&t, cfg.half_window()).into_iter().enumerate() {
            let bound = 3.0 * sd / ((hi - lo) as f64).sqrt();
            assert!((trend[i] - mean).abs() < bound, "t={i}");
        }
    }

    #[test]
    fn restore_examples_and_misalignment() {
        let d = TsDecomposition {
            trend: vec![1.0, 2.0],
            trend_season: [0.5; 12],
            std: vec![2.0, 3.0],
            std_season: [1.0; 12],
            season_enabled: true,
            months: vec![0, 1],
        };
        let zeros = yearly(&[0.0, 0.0]);
        assert_eq!(restore_series(&zeros, &d).unwrap().values(), &[1.5, 2.5]);
        let ones = yearly(&[1.0, 1.0]);
        assert_eq!(restore_series(&ones, &d).unwrap().values(), &[3.5, 5.5]);
        assert!(restore_series(&yearly(&[1.0]), &d).is_err());
    }

    #[test]
    fn destationarize_examples() {
        let d = TsDecomposition {
            trend: vec![4.0],
            trend_season: [0.25; 12],
            std: vec![2.0],
            std_season: [1.5; 12],
            season_enabled: true,
            months: vec![3],
        };
        let tv = destationarize_gev(&GevParams::new(0.0, 1.0, 0.2).unwrap(), &d);
        assert_eq!(tv.sigma_t, vec![3.0]);
        assert_eq!(tv.mu_t, vec![4.25]);
        assert_eq!(tv.xi, 0.2);
    }

    #[test]
    fn destationarized_quantiles_are_affine() {
        let z = noise(13, 3000);
        let s = daily(3000, |i, d| 5.0 + 0.001 * i as f64 + d.month() as f64 * 0.1 + z[i]);
        let (_, d) = stationarize(&s, &TsConfig::default()).unwrap();
        let p = GevParams::new(0.3, 0.8, -0.15).unwrap();
        let tv = destationarize_gev(&p, &d);
        for &q in &[0.1, 0.5, 0.99] {
            let xq = gev_quantile(q, &p).unwrap();
            for i in (0..3000).step_by(97) {
                let yq = gev_quantile(q, &tv.at(i)).unwrap();
                assert_relative_eq!(yq, d.scale(i) * xq + d.location(i), max_relative = 1e-12);
            }
        }
    }
}
