//! Likelihood scores, information criteria and model ranking.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evmodels::{log_density, EvModel};
use crate::margins::FrechetSample;
use crate::optim::{brent_minimize, nelder_mead, NelderMeadConfig};
use crate::spectral::{fit_sigma_mle, DEFAULT_SIGMA_BOUNDS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelScore {
    pub model_name: String,
    pub k: usize,
    pub n: usize,
    pub loglik: f64,
    pub aic: f64,
    pub bic: f64,
}

impl ModelScore {
    pub fn new(model_name: impl Into<String>, k: usize, n: usize, loglik: f64) -> Result<Self> {
        if k < 1 {
            return Err(Error::InvalidParameter("parameter count k must be at least 1".into()));
        }
        if n < 1 {
            return Err(Error::InvalidParameter("observation count must be at least 1".into()));
        }
        let kf = k as f64;
        Ok(Self {
            model_name: model_name.into(),
            k,
            n,
            loglik,
            aic: 2.0 * kf - 2.0 * loglik,
            bic: kf * (n as f64).ln() - 2.0 * loglik,
        })
    }
}

/// Sum of log-densities over the pairs, in input order.
pub fn total_loglik(model: &EvModel, x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Misaligned(format!("{} x values vs {} y values", x.len(), y.len())));
    }
    let terms: Vec<Result<f64>> = x
        .par_iter()
        .zip(y.par_iter())
        .map(|(&a, &b)| log_density(model, a, b))
        .collect();
    let mut total = 0.0;
    for t in terms {
        total += t?;
    }
    Ok(total)
}

/// Score a fitted model on paired Fréchet samples with `k` parameters.
pub fn score(model: &EvModel, x: &FrechetSample, y: &FrechetSample, k: usize) -> Result<ModelScore> {
    if x.len() != y.len() {
        return Err(Error::Misaligned(format!("{} x values vs {} y values", x.len(), y.len())));
    }
    let mut loglik = 0.0;
    for (i, (&a, &b)) in x.values().iter().zip(y.values()).enumerate() {
        let l = log_density(model, a, b)?;
        if !l.is_finite() {
            return Err(Error::NonFinite(format!(
                "log density {l} at observation {i} ({a}, {b})"
            )));
        }
        loglik += l;
    }
    ModelScore::new(model.describe(), k, x.len(), loglik)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedScore {
    pub score: ModelScore,
    pub delta_aic: f64,
    pub delta_bic: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ranking {
    /// Ascending AIC; ties keep input order.
    pub rows: Vec<RankedScore>,
    /// True when sorting by BIC would give a different order.
    pub aic_bic_disagree: bool,
}

impl Ranking {
    pub fn best(&self) -> &ModelScore {
        &self.rows[0].score
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("rank,model,k,n,loglik,aic,bic,delta_aic,delta_bic\n");
        for (i, r) in self.rows.iter().enumerate() {
            let s = &r.score;
            out.push_str(&format!(
                "{},\"{}\",{},{},{},{},{},{},{}\n",
                i + 1,
                s.model_name.replace('"', "\"\""),
                s.k,
                s.n,
                s.loglik,
                s.aic,
                s.bic,
                r.delta_aic,
                r.delta_bic
            ));
        }
        out
    }

    pub fn to_text(&self) -> String {
        let width = self
            .rows
            .iter()
            .map(|r| r.score.model_name.len())
            .max()
            .unwrap_or(5)
            .max(5);
        let mut out = format!(
            "{:>4}  {:<width$}  {:>3}  {:>6}  {:>12}  {:>12}  {:>12}  {:>10}  {:>10}\n",
            "rank", "model", "k", "n", "loglik", "AIC", "BIC", "dAIC", "dBIC"
        );
        for (i, r) in self.rows.iter().enumerate() {
            let s = &r.score;
            out.push_str(&format!(
                "{:>4}  {:<width$}  {:>3}  {:>6}  {:>12.4}  {:>12.4}  {:>12.4}  {:>10.4}  {:>10.4}\n",
                i + 1,
                s.model_name,
                s.k,
                s.n,
                s.loglik,
                s.aic,
                s.bic,
                r.delta_aic,
                r.delta_bic
            ));
        }
        if self.aic_bic_disagree {
            out.push_str("note: AIC and BIC orderings disagree\n");
        }
        out
    }
}

/// Rank scores fitted on the same data by AIC.
pub fn compare(scores: &[ModelScore]) -> Result<Ranking> {
    if scores.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "comparison needs at least two scores, got {}",
            scores.len()
        )));
    }
    let n = scores[0].n;
    if let Some(s) = scores.iter().find(|s| s.n != n) {
        return Err(Error::Misaligned(format!(
            "scores cover different data: n={} for {} vs n={} for {}",
            n, scores[0].model_name, s.n, s.model_name
        )));
    }
    let mut by_aic: Vec<usize> = (0..scores.len()).collect();
    by_aic.sort_by(|&a, &b| scores[a].aic.total_cmp(&scores[b].aic));
    let mut by_bic: Vec<usize> = (0..scores.len()).collect();
    by_bic.sort_by(|&a, &b| scores[a].bic.total_cmp(&scores[b].bic));
    let best_aic = scores[by_aic[0]].aic;
    let best_bic = scores[by_bic[0]].bic;
    let rows = by_aic
        .iter()
        .map(|&i| RankedScore {
            score: scores[i].clone(),
            delta_aic: scores[i].aic - best_aic,
            delta_bic: scores[i].bic - best_bic,
        })
        .collect();
    Ok(Ranking {
        rows,
        aic_bic_disagree: by_aic != by_bic,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Logistic,
    Hr,
    Ct,
    Semiparam,
}

impl Family {
    pub const ALL: [Family; 4] = [Family::Semiparam, Family::Logistic, Family::Hr, Family::Ct];

    pub fn as_str(&self) -> &'static str {
        match self {
            Family::Logistic => "logistic",
            Family::Hr => "hr",
            Family::Ct => "ct",
            Family::Semiparam => "semiparam",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "logistic" => Ok(Family::Logistic),
            "hr" => Ok(Family::Hr),
            "ct" => Ok(Family::Ct),
            "semiparam" => Ok(Family::Semiparam),
            other => Err(Error::InvalidParameter(format!(
                "unknown model family {other:?}; expected logistic, hr, ct or semiparam"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedModel {
    pub model: EvModel,
    pub loglik: f64,
}

fn neg_loglik(model: Result<EvModel>, x: &[f64], y: &[f64]) -> f64 {
    match model.and_then(|m| total_loglik(&m, x, y)) {
        Ok(v) => -v,
        Err(_) => f64::NAN,
    }
}

/// Grid scan over `[lo, hi]` followed by Brent refinement around the best cell.
fn maximize_1d<F: Fn(f64) -> f64>(negll: F, lo: f64, hi: f64, points: usize) -> Result<f64> {
    let grid: Vec<f64> = (0..points)
        .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
        .collect();
    let vals: Vec<f64> = grid
        .iter()
        .map(|&t| {
            let v = negll(t);
            if v.is_finite() {
                v
            } else {
                f64::INFINITY
            }
        })
        .collect();
    let best = (0..points).min_by(|&a, &b| vals[a].total_cmp(&vals[b])).unwrap();
    if !vals[best].is_finite() {
        return Err(Error::NonConvergence("likelihood is not finite anywhere on the search grid".into()));
    }
    let (t, v) = brent_minimize(
        &negll,
        grid[best.saturating_sub(1)],
        grid[(best + 1).min(points - 1)],
        1e-10,
        200,
    )?;
    Ok(if v <= vals[best] { t } else { grid[best] })
}

/// Search box for the Coles-Tawn shape parameters, on the log scale.
const CT_LOG_RANGE: (f64, f64) = (-9.210340371976182, 13.815510557964274);

/// Maximum-likelihood fit of one family's dependence parameters.
pub fn fit_family(family: Family, x: &FrechetSample, y: &FrechetSample) -> Result<FittedModel> {
    if x.len() != y.len() {
        return Err(Error::Misaligned(format!("{} x values vs {} y values", x.len(), y.len())));
    }
    if x.is_empty() {
        return Err(Error::InsufficientData("no pairs to fit".into()));
    }
    let (xs, ys) = (x.values(), y.values());
    let model = match family {
        Family::Semiparam => {
            let fit = fit_sigma_mle(x, y, DEFAULT_SIGMA_BOUNDS)?;
            EvModel::semiparam(fit.sigma)?
        }
        Family::Logistic => {
            let a = maximize_1d(|a| neg_loglik(EvModel::logistic(a), xs, ys), 0.02, 1.0, 50)?;
            EvModel::logistic(a)?
        }
        Family::Hr => {
            let t = maximize_1d(
                |t: f64| neg_loglik(EvModel::husler_reiss(t.exp()), xs, ys),
                0.01f64.ln(),
                20f64.ln(),
                40,
            )?;
            EvModel::husler_reiss(t.exp())?
        }
        Family::Ct => {
            // Past 1e6 the likelihood has already reached its large-parameter
            // limit, and the incomplete-beta terms start losing precision to
            // cancellation, which an unbounded search would exploit.
            let f = |p: &[f64]| {
                if p.iter().any(|v| !(CT_LOG_RANGE.0..=CT_LOG_RANGE.1).contains(v)) {
                    return f64::INFINITY;
                }
                neg_loglik(EvModel::coles_tawn(p[0].exp(), p[1].exp()), xs, ys)
            };
            let cfg = NelderMeadConfig {
                initial_step: 0.5,
                ..NelderMeadConfig::default()
            };
            let starts = [[0.0, 0.0], [-1.0, 2.0], [2.0, -1.0], [1.5, 1.5], [-1.0, 4.5]];
            let mut best: Option<(Vec<f64>, f64)> = None;
            for s in starts {
                if !f(&s).is_finite() {
                    continue;
                }
                let m = nelder_mead(f, &s, &cfg)?;
                if best.as_ref().is_none_or(|b| m.value < b.1) {
                    best = Some((m.x, m.value));
                }
            }
            let (p, _) = best.ok_or_else(|| {
                Error::NonConvergence("Coles-Tawn likelihood is not finite at any start".into())
            })?;
            EvModel::coles_tawn(p[0].exp(), p[1].exp())?
        }
    };
    let loglik = total_loglik(&model, xs, ys)?;
    Ok(FittedModel { model, loglik })
}
