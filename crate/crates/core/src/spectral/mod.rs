//! Logistic-Normal spectral density on `[0, 1]` and its likelihood machinery.
//!
//! Every integral against `h` is taken in the Gaussian variable: with
//! `w = logistic(μ + σz)` the measure `h(w) dw` becomes the standard normal
//! density `φ(z) dz`.

pub mod quad;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::margins::FrechetSample;
use crate::optim::brent_minimize;
use crate::rng;
use crate::special::{digamma, ln_normal_pdf, logistic, logit, normal_pdf, trigamma};

pub use quad::GaussQuadRule;

const BRANCH_TOL: f64 = 1e-13;
const Z_LIMIT: f64 = 40.0;
const Z_TAIL: f64 = 10.0;

/// Logistic-Normal spectral density, `μ = 0` unless built with [`LnSpectral::shifted`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LnSpectral {
    sigma: f64,
    #[serde(default, skip_serializing_if = "is_zero")]
    mu: f64,
}

fn is_zero(v: &f64) -> bool {
    *v == 0.0
}

impl LnSpectral {
    pub fn new(sigma: f64) -> Result<Self> {
        Self::shifted(0.0, sigma)
    }

    /// Location-shifted density. Only `μ = 0` satisfies the mean constraint;
    /// the shift exists to probe that constraint.
    #[doc(hidden)]
    pub fn shifted(mu: f64, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidParameter(format!("sigma must be positive, got {sigma}")));
        }
        if !mu.is_finite() {
            return Err(Error::InvalidParameter(format!("mu must be finite, got {mu}")));
        }
        Ok(Self { sigma, mu })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    fn weight(&self, z: f64) -> f64 {
        logistic(self.mu + self.sigma * z)
    }

    /// Gaussian variable at which `w = wstar`.
    fn z_of(&self, wstar: f64) -> f64 {
        (logit(wstar) - self.mu) / self.sigma
    }
}

/// `h(w) = exp(−(logit w − μ)²/(2σ²)) / (σ √(2π) w (1 − w))`, zero at the endpoints.
pub fn ln_density(w: f64, m: &LnSpectral) -> f64 {
    if w <= 0.0 || w >= 1.0 {
        return 0.0;
    }
    let z = (logit(w) - m.mu) / m.sigma;
    normal_pdf(z) / (m.sigma * w * (1.0 - w))
}

/// `∫₀¹ w h(w) dw`.
pub fn spectral_moment(m: &LnSpectral, rule: &GaussQuadRule) -> Result<f64> {
    rule.expect_checked(|z| m.weight(z))
}

/// `∫₀¹ w/(1−w) h(w) dw`, which equals `exp(μ + σ²/2)`.
pub fn ratio_moment(m: &LnSpectral, rule: &GaussQuadRule) -> Result<f64> {
    rule.expect_checked(|z| (m.mu + m.sigma * z).exp())
}

fn integrate_pieces<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, breaks: &[f64]) -> Result<f64> {
    if lo >= hi {
        return Ok(0.0);
    }
    let mut cuts = vec![lo];
    cuts.extend(breaks.iter().copied().filter(|&b| b > lo && b < hi));
    cuts.push(hi);
    cuts.sort_by(f64::total_cmp);
    let mut total = 0.0;
    for p in cuts.windows(2) {
        total += quad::integrate(&f, p[0], p[1], BRANCH_TOL)?;
    }
    Ok(total)
}

/// `∫_{z*}^{∞} logistic(μ + σz) φ(z) dz`.
fn upper_branch(zstar: f64, m: &LnSpectral) -> Result<f64> {
    if zstar >= Z_LIMIT {
        return Ok(0.0);
    }
    let lo = zstar.max(-Z_LIMIT);
    let hi = zstar.max(0.0) + Z_TAIL;
    let centre = -m.mu / m.sigma;
    integrate_pieces(|z| m.weight(z) * normal_pdf(z), lo, hi, &[0.0, centre])
}

/// `∫_{−∞}^{z*} logistic(−(μ + σz)) φ(z) dz`.
fn lower_branch(zstar: f64, m: &LnSpectral) -> Result<f64> {
    if zstar <= -Z_LIMIT {
        return Ok(0.0);
    }
    let hi = zstar.min(Z_LIMIT);
    let lo = zstar.min(0.0) - Z_TAIL;
    let centre = -m.mu / m.sigma;
    integrate_pieces(
        |z| logistic(-(m.mu + m.sigma * z)) * normal_pdf(z),
        lo,
        hi,
        &[0.0, centre],
    )
}

/// `∫_{w*}¹ w h(w) dw`.
pub fn tail_weight_integral(wstar: f64, m: &LnSpectral) -> Result<f64> {
    if !(0.0..=1.0).contains(&wstar) {
        return Err(Error::Domain(format!("wstar must lie in [0, 1], got {wstar}")));
    }
    if wstar <= 0.0 {
        return upper_branch(-f64::INFINITY, m);
    }
    if wstar >= 1.0 {
        return Ok(0.0);
    }
    upper_branch(m.z_of(wstar), m)
}

/// `∫₀^{w*} (1 − w) h(w) dw`.
pub fn head_weight_integral(wstar: f64, m: &LnSpectral) -> Result<f64> {
    if !(0.0..=1.0).contains(&wstar) {
        return Err(Error::Domain(format!("wstar must lie in [0, 1], got {wstar}")));
    }
    if wstar <= 0.0 {
        return Ok(0.0);
    }
    if wstar >= 1.0 {
        return lower_branch(f64::INFINITY, m);
    }
    lower_branch(m.z_of(wstar), m)
}

/// The two branch integrals at the crossing point `w* = x/(x+y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchTerms {
    /// `∫_{w*}¹ w h(w) dw`
    pub upper: f64,
    /// `∫₀^{w*} (1 − w) h(w) dw`
    pub lower: f64,
    /// Gaussian variable at `w*`.
    pub zstar: f64,
}

pub fn branch_terms(x: f64, y: f64, m: &LnSpectral) -> Result<BranchTerms> {
    if !(x > 0.0 && y > 0.0) {
        return Err(Error::Domain(format!("x and y must be positive, got ({x}, {y})")));
    }
    // logit(x/(x+y)) = ln x − ln y, exact even when y ≫ x
    let zstar = (x.ln() - y.ln() - m.mu) / m.sigma;
    Ok(BranchTerms {
        upper: upper_branch(zstar, m)?,
        lower: lower_branch(zstar, m)?,
        zstar,
    })
}

/// Exponent measure `V(x, y) = 2∫ max(w/x, (1−w)/y) h(w) dw`.
pub fn exponent_integral(x: f64, y: f64, m: &LnSpectral) -> Result<f64> {
    let t = branch_terms(x, y, m)?;
    Ok(2.0 * t.upper / x + 2.0 * t.lower / y)
}

/// Log of the bivariate density `∂²G/∂x∂y`, `G = exp(−V)`:
/// `g = G [4AB/(x²y²) + 2h(w*)/(x+y)³]`.
pub fn ln_joint_density(x: f64, y: f64, m: &LnSpectral) -> Result<f64> {
    let t = branch_terms(x, y, m)?;
    let v = 2.0 * t.upper / x + 2.0 * t.lower / y;
    let (lx, ly) = (x.ln(), y.ln());
    let smooth = (4.0 * t.upper * t.lower).ln() - 2.0 * lx - 2.0 * ly;
    // 2h(w*)/(x+y)³ with w*(1−w*) = xy/(x+y)²
    let kink = std::f64::consts::LN_2 + ln_normal_pdf(t.zstar)
        - m.sigma.ln()
        - lx
        - ly
        - (x + y).ln();
    let hi = smooth.max(kink);
    let value = -v + hi + ((smooth - hi).exp() + (kink - hi).exp()).ln();
    if value.is_nan() {
        return Err(Error::NonFinite(format!("log density at ({x}, {y})")));
    }
    Ok(value)
}

/// Pseudo-angular decomposition of the pairs above a radial threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PseudoAngles {
    pub w: Vec<f64>,
    pub r: Vec<f64>,
    pub u: f64,
    pub k: usize,
    /// Positions of the retained pairs in the input samples.
    pub indices: Vec<usize>,
}

pub const MIN_EXCEEDANCES: usize = 10;
pub const DEFAULT_THRESHOLD: f64 = 0.98;

/// Angles `w = x/(x+y)` of the pairs whose radius `x + y` exceeds `u`.
pub fn pseudo_angles_above(x: &[f64], y: &[f64], u: f64) -> Result<PseudoAngles> {
    if x.len() != y.len() {
        return Err(Error::Misaligned(format!("{} x values vs {} y values", x.len(), y.len())));
    }
    let mut out = PseudoAngles {
        w: Vec::new(),
        r: Vec::new(),
        u,
        k: 0,
        indices: Vec::new(),
    };
    for (i, (&a, &b)) in x.iter().zip(y).enumerate() {
        if !(a > 0.0 && b > 0.0) {
            return Err(Error::Domain(format!("pair {i} is not on the Fréchet scale: ({a}, {b})")));
        }
        let r = a + b;
        if r > u {
            out.w.push(a / r);
            out.r.push(r);
            out.indices.push(i);
        }
    }
    out.k = out.w.len();
    Ok(out)
}

/// Pseudo-angles of the pairs whose radius exceeds the empirical `level`
/// quantile; `k = ⌈(1 − level)·n⌉` when radii are distinct.
pub fn extract_pseudo_angles(
    x: &FrechetSample,
    y: &FrechetSample,
    level: f64,
) -> Result<PseudoAngles> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidParameter(format!("threshold level must lie in (0, 1), got {level}")));
    }
    if x.len() != y.len() {
        return Err(Error::Misaligned(format!("{} x values vs {} y values", x.len(), y.len())));
    }
    if x.is_empty() {
        return Err(Error::InsufficientData("no pairs".into()));
    }
    let mut r: Vec<f64> = x.values().iter().zip(y.values()).map(|(a, b)| a + b).collect();
    r.sort_by(f64::total_cmp);
    // Keep the ⌈(1 − level)·n⌉ largest radii; the slack absorbs the
    // representation error of `level` when level·n is a whole number.
    let n = r.len();
    let below = ((level * n as f64 + 1e-9).floor() as usize).min(n);
    let u = if below == 0 { 0.0 } else { r[below - 1] };
    let pa = pseudo_angles_above(x.values(), y.values(), u)?;
    if pa.k < MIN_EXCEEDANCES {
        return Err(Error::InsufficientExceedances {
            k: pa.k,
            required: MIN_EXCEEDANCES,
        });
    }
    Ok(pa)
}

fn check_pairs(x: &FrechetSample, y: &FrechetSample) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::Misaligned(format!("{} x values vs {} y values", x.len(), y.len())));
    }
    if x.is_empty() {
        return Err(Error::InsufficientData("no pairs to fit".into()));
    }
    Ok(())
}

/// `Σ log g(xᵢ, yᵢ)` under `h_{0,σ}`.
pub fn sigma_loglik(sigma: f64, x: &[f64], y: &[f64]) -> Result<f64> {
    let m = LnSpectral::new(sigma)?;
    let terms: Vec<Result<f64>> = x
        .par_iter()
        .zip(y.par_iter())
        .map(|(&a, &b)| ln_joint_density(a, b, &m))
        .collect();
    // summed in input order so the result does not depend on thread scheduling
    let mut total = 0.0;
    for (i, t) in terms.into_iter().enumerate() {
        let t = t.map_err(|e| match e {
            Error::NonFinite(msg) => Error::NonFinite(format!("observation {i}: {msg}")),
            other => other,
        })?;
        total += t;
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmaFit {
    pub sigma: f64,
    pub loglik: f64,
}

pub const DEFAULT_SIGMA_BOUNDS: (f64, f64) = (0.01, 100.0);
const GRID_POINTS: usize = 25;

/// Maximum-likelihood σ: a log-spaced grid scan over `bounds`, refined by
/// Brent's method on `log σ` around the best grid point.
pub fn fit_sigma_mle(
    x: &FrechetSample,
    y: &FrechetSample,
    bounds: (f64, f64),
) -> Result<SigmaFit> {
    check_pairs(x, y)?;
    let (lo, hi) = bounds;
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(Error::InvalidParameter(format!("bad sigma bounds ({lo}, {hi})")));
    }
    let (xs, ys) = (x.values(), y.values());
    let (tlo, thi) = (lo.ln(), hi.ln());
    let grid: Vec<f64> = (0..GRID_POINTS)
        .map(|i| tlo + (thi - tlo) * i as f64 / (GRID_POINTS - 1) as f64)
        .collect();
    let mut ll = Vec::with_capacity(GRID_POINTS);
    for &t in &grid {
        ll.push(sigma_loglik(t.exp(), xs, ys)?);
    }
    let best = (0..GRID_POINTS)
        .max_by(|&a, &b| ll[a].total_cmp(&ll[b]))
        .unwrap();
    let finite: Vec<f64> = ll.iter().copied().filter(|v| v.is_finite()).collect();
    let spread = finite.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        - finite.iter().copied().fold(f64::INFINITY, f64::min);
    if finite.is_empty() || spread <= 1e-9 * (1.0 + ll[best].abs()) {
        return Err(Error::FlatLikelihood(format!(
            "log-likelihood varies by {spread:e} over sigma in [{lo}, {hi}] ({} pairs)",
            xs.len()
        )));
    }
    let a = grid[best.saturating_sub(1)];
    let b = grid[(best + 1).min(GRID_POINTS - 1)];
    let (t_hat, _) = brent_minimize(
        |t| sigma_loglik(t.exp(), xs, ys).map(|v| -v).unwrap_or(f64::NAN),
        a,
        b,
        1e-9,
        200,
    )?;
    let refined = sigma_loglik(t_hat.exp(), xs, ys)?;
    if refined >= ll[best] {
        Ok(SigmaFit {
            sigma: t_hat.exp(),
            loglik: refined,
        })
    } else {
        Ok(SigmaFit {
            sigma: grid[best].exp(),
            loglik: ll[best],
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PosteriorConfig {
    pub iters: usize,
    pub burnin: usize,
    /// Standard deviation of the random-walk step on `log σ`.
    pub proposal_sd: f64,
    /// Prior `log σ ~ N(0, prior_sd²)`.
    pub prior_sd: f64,
    pub seed: u64,
}

impl Default for PosteriorConfig {
    fn default() -> Self {
        Self {
            iters: 10_000,
            burnin: 4_000,
            proposal_sd: 0.3,
            prior_sd: 1.5,
            seed: 0,
        }
    }
}

/// Posterior draws of σ and the pointwise 95% band of `h` on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorBand {
    pub draws: Vec<f64>,
    pub acceptance_rate: f64,
    pub w: Vec<f64>,
    pub h_mean: Vec<f64>,
    pub h_lo: Vec<f64>,
    pub h_hi: Vec<f64>,
    pub warning: Option<String>,
}

impl PosteriorBand {
    pub fn sigma_mean(&self) -> f64 {
        self.draws.iter().sum::<f64>() / self.draws.len() as f64
    }

    /// CSV with columns `w,h_mean,h_lo,h_hi`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("w,h_mean,h_lo,h_hi\n");
        for i in 0..self.w.len() {
            out.push_str(&format!(
                "{},{},{},{}\n",
                self.w[i], self.h_mean[i], self.h_lo[i], self.h_hi[i]
            ));
        }
        out
    }
}

/// Linear-interpolation quantile of sorted data.
fn interp_quantile(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() - 1) as f64;
    let i = pos.floor() as usize;
    let frac = pos - i as f64;
    if i + 1 >= sorted.len() {
        sorted[sorted.len() - 1]
    } else {
        sorted[i] + frac * (sorted[i + 1] - sorted[i])
    }
}

/// Band grid `w = 0.01, 0.02, …, 0.99`.
pub fn band_grid() -> Vec<f64> {
    (1..100).map(|i| i as f64 / 100.0).collect()
}

/// Random-walk Metropolis on `log σ`, then the pointwise 2.5%/97.5% quantiles
/// of `h_{0,σ}(w)` over the retained draws.
pub fn sigma_posterior_band(
    x: &FrechetSample,
    y: &FrechetSample,
    cfg: &PosteriorConfig,
) -> Result<PosteriorBand> {
    check_pairs(x, y)?;
    if cfg.iters <= cfg.burnin {
        return Err(Error::InvalidParameter(format!(
            "iterations ({}) must exceed burn-in ({})",
            cfg.iters, cfg.burnin
        )));
    }
    if !(cfg.proposal_sd > 0.0 && cfg.prior_sd > 0.0) {
        return Err(Error::InvalidParameter("proposal and prior sd must be positive".into()));
    }
    let (xs, ys) = (x.values(), y.values());
    let log_post = |t: f64| -> Result<f64> {
        Ok(sigma_loglik(t.exp(), xs, ys)? - 0.5 * (t / cfg.prior_sd).powi(2))
    };
    let mut rng = rng::stream(cfg.seed, "posterior");
    let mut t = 0.0;
    let mut lp = log_post(t)?;
    let mut accepted = 0usize;
    let mut draws = Vec::with_capacity(cfg.iters - cfg.burnin);
    for it in 0..cfg.iters {
        let step: f64 = rng.sample(StandardNormal);
        let prop = t + cfg.proposal_sd * step;
        let lp_prop = log_post(prop)?;
        let u: f64 = rng.random();
        if lp_prop.is_finite() && (!lp.is_finite() || u.ln() < lp_prop - lp) {
            t = prop;
            lp = lp_prop;
            accepted += 1;
        }
        if it >= cfg.burnin {
            draws.push(t.exp());
        }
    }
    let acceptance_rate = accepted as f64 / cfg.iters as f64;
    let warning = if !(0.1..=0.6).contains(&acceptance_rate) {
        let msg = format!("Metropolis acceptance rate {acceptance_rate:.3} outside [0.1, 0.6]");
        log::warn!("{msg}");
        Some(msg)
    } else {
        None
    };

    let w = band_grid();
    let mut h_mean = Vec::with_capacity(w.len());
    let mut h_lo = Vec::with_capacity(w.len());
    let mut h_hi = Vec::with_capacity(w.len());
    let models: Vec<LnSpectral> = draws
        .iter()
        .map(|&s| LnSpectral::new(s))
        .collect::<Result<_>>()?;
    for &wi in &w {
        let mut hs: Vec<f64> = models.iter().map(|m| ln_density(wi, m)).collect();
        h_mean.push(hs.iter().sum::<f64>() / hs.len() as f64);
        hs.sort_by(f64::total_cmp);
        h_lo.push(interp_quantile(&hs, 0.025));
        h_hi.push(interp_quantile(&hs, 0.975));
    }
    Ok(PosteriorBand {
        draws,
        acceptance_rate,
        w,
        h_mean,
        h_lo,
        h_hi,
        warning,
    })
}

/// Logistic-Normal parameters matching a Beta(α₁, α₂) (two-part Dirichlet)
/// in log-ratio mean and variance: `μ = ψ(α₁) − ψ(α₂)`, `σ² = ψ′(α₁) + ψ′(α₂)`.
pub fn dirichlet_to_ln(alpha: (f64, f64)) -> Result<(f64, f64)> {
    let (a1, a2) = alpha;
    if !(a1 > 0.0 && a2 > 0.0 && a1.is_finite() && a2.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "Dirichlet parameters must be positive, got ({a1}, {a2})"
        )));
    }
    Ok((digamma(a1) - digamma(a2), trigamma(a1) + trigamma(a2)))
}

/// Rug file of pseudo-angles: `w,r`.
pub fn rug_csv(pa: &PseudoAngles) -> String {
    let mut out = String::from("w,r\n");
    for (w, r) in pa.w.iter().zip(&pa.r) {
        out.push_str(&format!("{w},{r}\n"));
    }
    out
}
