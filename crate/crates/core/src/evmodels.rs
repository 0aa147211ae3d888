//! Bivariate extreme value models on unit-Fréchet margins: joint and
//! conditional distribution functions, log-densities and samplers.

use chrono::{Datelike, Days, NaiveDate};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifold::{conditional_quantile, SolverConfig};
use crate::margins::{FrechetSample, UniSeries};
use crate::rng;
use crate::special::{beta_cdf, beta_pdf, ln_normal_cdf, ln_normal_pdf, normal_cdf, normal_pdf};
use crate::spectral::{self, LnSpectral};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum EvModel {
    /// `V = (x^{−1/α} + y^{−1/α})^α`, `α ∈ (0, 1]`; `α = 1` is independence.
    Logistic { alpha: f64 },
    /// `V = Φ(a)/x + Φ(b)/y`, `a = λ + log(y/x)/(2λ)`, `b = λ + log(x/y)/(2λ)`.
    #[serde(rename = "hr")]
    HuslerReiss { lambda: f64 },
    /// Beta-mixture (Coles-Tawn) dependence with shape parameters `α, β > 0`.
    #[serde(rename = "ct")]
    ColesTawn { alpha: f64, beta: f64 },
    /// Logistic-Normal spectral density with `μ = 0`.
    #[serde(rename = "semiparam")]
    SemiparamLn { spectral: LnSpectral },
}

impl EvModel {
    pub fn logistic(alpha: f64) -> Result<Self> {
        let m = EvModel::Logistic { alpha };
        m.validate()?;
        Ok(m)
    }

    pub fn husler_reiss(lambda: f64) -> Result<Self> {
        let m = EvModel::HuslerReiss { lambda };
        m.validate()?;
        Ok(m)
    }

    pub fn coles_tawn(alpha: f64, beta: f64) -> Result<Self> {
        let m = EvModel::ColesTawn { alpha, beta };
        m.validate()?;
        Ok(m)
    }

    pub fn semiparam(sigma: f64) -> Result<Self> {
        Ok(EvModel::SemiparamLn {
            spectral: LnSpectral::new(sigma)?,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            EvModel::Logistic { alpha } => alpha > 0.0 && alpha <= 1.0,
            EvModel::HuslerReiss { lambda } => lambda > 0.0 && lambda.is_finite(),
            EvModel::ColesTawn { alpha, beta } => {
                alpha > 0.0 && beta > 0.0 && alpha.is_finite() && beta.is_finite()
            }
            EvModel::SemiparamLn { spectral } => spectral.sigma() > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("{self:?} is outside the parameter space")))
        }
    }

    /// Short family name as used on the command line.
    pub fn family(&self) -> &'static str {
        match self {
            EvModel::Logistic { .. } => "logistic",
            EvModel::HuslerReiss { .. } => "hr",
            EvModel::ColesTawn { .. } => "ct",
            EvModel::SemiparamLn { .. } => "semiparam",
        }
    }

    /// Number of free dependence parameters.
    pub fn free_parameters(&self) -> usize {
        match self {
            EvModel::ColesTawn { .. } => 2,
            _ => 1,
        }
    }

    pub fn describe(&self) -> String {
        match *self {
            EvModel::Logistic { alpha } => format!("logistic(alpha={alpha})"),
            EvModel::HuslerReiss { lambda } => format!("hr(lambda={lambda})"),
            EvModel::ColesTawn { alpha, beta } => format!("ct(alpha={alpha}, beta={beta})"),
            EvModel::SemiparamLn { spectral } => format!("semiparam(sigma={})", spectral.sigma()),
        }
    }
}

fn check_point(x: f64, y: f64) -> Result<()> {
    if x > 0.0 && y > 0.0 && x.is_finite() && y.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("x and y must be positive and finite, got ({x}, {y})")))
    }
}

fn log_sum_exp(a: f64, b: f64) -> f64 {
    let hi = a.max(b);
    if hi == f64::NEG_INFINITY {
        return hi;
    }
    hi + ((a - hi).exp() + (b - hi).exp()).ln()
}

/// `log S` with `S = x^{−1/α} + y^{−1/α}`.
fn logistic_ln_s(alpha: f64, x: f64, y: f64) -> f64 {
    log_sum_exp(-x.ln() / alpha, -y.ln() / alpha)
}

fn hr_args(lambda: f64, x: f64, y: f64) -> (f64, f64) {
    let r = (y / x).ln() / (2.0 * lambda);
    (lambda + r, lambda - r)
}

/// `t = αx/(αx + βy)`, the Beta argument of the Coles-Tawn model.
fn ct_arg(alpha: f64, beta: f64, x: f64, y: f64) -> f64 {
    let (ay, bx) = (alpha / y, beta / x);
    ay / (ay + bx)
}

/// Exponent measure `V(x, y)`, with `G = exp(−V)`.
pub fn exponent(model: &EvModel, x: f64, y: f64) -> Result<f64> {
    model.validate()?;
    check_point(x, y)?;
    Ok(match *model {
        EvModel::Logistic { alpha } => (alpha * logistic_ln_s(alpha, x, y)).exp(),
        EvModel::HuslerReiss { lambda } => {
            let (a, b) = hr_args(lambda, x, y);
            normal_cdf(a) / x + normal_cdf(b) / y
        }
        EvModel::ColesTawn { alpha, beta } => {
            let t = ct_arg(alpha, beta, x, y);
            (1.0 - beta_cdf(t, alpha + 1.0, beta)) / x + beta_cdf(t, alpha, beta + 1.0) / y
        }
        EvModel::SemiparamLn { spectral } => spectral::exponent_integral(x, y, &spectral)?,
    })
}

/// Joint distribution function `G(x, y)`.
pub fn joint_cdf(model: &EvModel, x: f64, y: f64) -> Result<f64> {
    Ok((-exponent(model, x, y)?).exp())
}

/// `G_{Y|X}(y | x) = [∂G/∂x](x, y) / f_X(x)`.
pub fn conditional_cdf(model: &EvModel, y: f64, x: f64) -> Result<f64> {
    model.validate()?;
    check_point(x, y)?;
    let value = match *model {
        EvModel::Logistic { alpha } => {
            let ln_s = logistic_ln_s(alpha, x, y);
            (-(alpha * ln_s).exp() + 1.0 / x + (alpha - 1.0) * ln_s + (1.0 - 1.0 / alpha) * x.ln())
                .exp()
        }
        EvModel::HuslerReiss { lambda } => {
            let (a, b) = hr_args(lambda, x, y);
            let v = normal_cdf(a) / x + normal_cdf(b) / y;
            let bracket = normal_cdf(a) + normal_pdf(a) / (2.0 * lambda)
                - (x / y) * normal_pdf(b) / (2.0 * lambda);
            bracket * (-v + 1.0 / x).exp()
        }
        EvModel::ColesTawn { alpha, beta } => {
            let t = ct_arg(alpha, beta, x, y);
            let gamma = (alpha + beta + 1.0) * (alpha + beta + 2.0);
            let v = (1.0 - beta_cdf(t, alpha + 1.0, beta)) / x + beta_cdf(t, alpha, beta + 1.0) / y;
            let bracket = 1.0 - beta_cdf(t, alpha + 1.0, beta)
                + (alpha + 1.0) * beta / gamma * beta_pdf(t, alpha + 2.0, beta + 1.0)
                - (x / y) * alpha * (beta + 1.0) / gamma * beta_pdf(t, alpha + 1.0, beta + 2.0);
            bracket * (-v + 1.0 / x).exp()
        }
        EvModel::SemiparamLn { spectral } => {
            let t = spectral::branch_terms(x, y, &spectral)?;
            let v = 2.0 * t.upper / x + 2.0 * t.lower / y;
            2.0 * (-v + 1.0 / x).exp() * t.upper
        }
    };
    if !value.is_finite() {
        return Err(Error::NonFinite(format!("conditional CDF at y={y}, x={x}")));
    }
    Ok(value.clamp(0.0, 1.0))
}

/// `log ∂²G/∂x∂y`.
pub fn log_density(model: &EvModel, x: f64, y: f64) -> Result<f64> {
    model.validate()?;
    check_point(x, y)?;
    let (lx, ly) = (x.ln(), y.ln());
    let value = match *model {
        EvModel::Logistic { alpha } => {
            let ln_s = logistic_ln_s(alpha, x, y);
            let s_alpha = (alpha * ln_s).exp();
            -s_alpha + (-1.0 / alpha - 1.0) * (lx + ly)
                + (alpha - 2.0) * ln_s
                + (s_alpha + (1.0 - alpha) / alpha).ln()
        }
        EvModel::HuslerReiss { lambda } => {
            let (a, b) = hr_args(lambda, x, y);
            let v = normal_cdf(a) / x + normal_cdf(b) / y;
            // G [Φ(a)Φ(b)/(x²y²) + φ(a)/(2λx²y)]
            let smooth = ln_normal_cdf(a) + ln_normal_cdf(b) - 2.0 * lx - 2.0 * ly;
            let kink = ln_normal_pdf(a) - (2.0 * lambda).ln() - 2.0 * lx - ly;
            -v + log_sum_exp(smooth, kink)
        }
        EvModel::ColesTawn { alpha, beta } => {
            let t = ct_arg(alpha, beta, x, y);
            let upper = 1.0 - beta_cdf(t, alpha + 1.0, beta);
            let lower = beta_cdf(t, alpha, beta + 1.0);
            let v = upper / x + lower / y;
            // G [(1 − Be(t; α+1, β)) Be(t; α, β+1)/(x²y²) + t(1−t) be(t; α+1, β)/(x²y)]
            let smooth = upper.ln() + lower.ln() - 2.0 * lx - 2.0 * ly;
            let kink = (t * (1.0 - t) * beta_pdf(t, alpha + 1.0, beta)).ln() - 2.0 * lx - ly;
            -v + log_sum_exp(smooth, kink)
        }
        EvModel::SemiparamLn { spectral } => spectral::ln_joint_density(x, y, &spectral)?,
    };
    if value.is_nan() || value == f64::INFINITY {
        return Err(Error::NonFinite(format!("log density at ({x}, {y})")));
    }
    Ok(value)
}

/// Uniform draw strictly inside (0, 1).
pub(crate) fn open_unit<R: Rng>(rng: &mut R) -> f64 {
    ((rng.random::<u64>() >> 11) as f64 + 0.5) / (1u64 << 53) as f64
}

/// `n` pairs from `model`: `X` by inversion of `exp(−1/x)`, then `Y` by
/// inverting the conditional CDF at an independent uniform.
pub fn sample_pairs(model: &EvModel, n: usize, seed: u64) -> Result<(FrechetSample, FrechetSample)> {
    model.validate()?;
    if n == 0 {
        return Err(Error::InvalidParameter("sample size must be at least 1".into()));
    }
    let mut rng = rng::stream(seed, "sample");
    let draws: Vec<(f64, f64)> = (0..n).map(|_| (open_unit(&mut rng), open_unit(&mut rng))).collect();
    let solver = SolverConfig::default();
    let pairs: Vec<Result<(f64, f64)>> = draws
        .par_iter()
        .map(|&(u, v)| {
            let x = -1.0 / u.ln();
            let y = conditional_quantile(model, v, x, &solver)?;
            Ok((x, y))
        })
        .collect();
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    for p in pairs {
        let (x, y) = p?;
        xs.push(x);
        ys.push(y);
    }
    Ok((FrechetSample::from_values(xs)?, FrechetSample::from_values(ys)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Cadence {
    #[default]
    Weekly,
    Yearly,
}

/// A non-stationary bivariate scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimScenario {
    pub model: EvModel,
    pub n: usize,
    /// Linear trend added over the full series, on the data scale.
    pub trend_amp: f64,
    /// Amplitude of the annual sinusoid.
    pub season_amp: f64,
    pub seed: u64,
    #[serde(default)]
    pub cadence: Cadence,
}

pub const MIN_SCENARIO_SIZE: usize = 100;

impl SimScenario {
    pub fn new(model: EvModel, n: usize, seed: u64) -> Self {
        Self {
            model,
            n,
            trend_amp: 1.0,
            season_amp: 0.5,
            seed,
            cadence: Cadence::Weekly,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        if self.n < MIN_SCENARIO_SIZE {
            return Err(Error::InvalidParameter(format!(
                "scenario needs at least {MIN_SCENARIO_SIZE} pairs, got {}",
                self.n
            )));
        }
        if !(self.trend_amp >= 0.0 && self.season_amp >= 0.0) {
            return Err(Error::InvalidParameter("amplitudes must be non-negative".into()));
        }
        Ok(())
    }

    pub fn timestamps(&self) -> Vec<NaiveDate> {
        let start = NaiveDate::from_ymd_opt(1970, 1, 1).expect("valid date");
        (0..self.n)
            .map(|i| match self.cadence {
                Cadence::Weekly => start + Days::new(7 * i as u64),
                Cadence::Yearly => NaiveDate::from_ymd_opt(1970 + i as i32, 1, 1).expect("valid date"),
            })
            .collect()
    }
}

fn year_fraction(d: NaiveDate) -> f64 {
    let len = if d.leap_year() { 366.0 } else { 365.0 };
    d.ordinal0() as f64 / len
}

/// Stationary pairs mapped to the Gumbel scale (`log x`), with a linear trend
/// and an annual sinusoid added to both margins.
pub fn simulate_scenario(s: &SimScenario) -> Result<(UniSeries, UniSeries)> {
    s.validate()?;
    let (x, y) = sample_pairs(&s.model, s.n, s.seed)?;
    let times = s.timestamps();
    let shift: Vec<f64> = times
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            s.trend_amp * i as f64 / s.n as f64
                + s.season_amp * (2.0 * std::f64::consts::PI * year_fraction(t)).sin()
        })
        .collect();
    let xs = x.values().iter().zip(&shift).map(|(v, d)| v.ln() + d).collect();
    let ys = y.values().iter().zip(&shift).map(|(v, d)| v.ln() + d).collect();
    Ok((UniSeries::new(times.clone(), xs)?, UniSeries::new(times, ys)?))
}
