//! The staged fit shared by `fit` and `analyze`.

use std::fs;
use std::path::{Path, PathBuf};

use evmanifold::io::{read_series_from, write_atomic};
use evmanifold::manifold::predict_quantile_table_original;
use evmanifold::margins::empirical_quantile;
use evmanifold::selection::FittedModel;
use evmanifold::spectral::{pseudo_angles_above, rug_csv, spectral_moment, DEFAULT_SIGMA_BOUNDS};
use evmanifold::tstationary::{decomposition_csv, time_varying_gev_csv};
use evmanifold::{
    block_maxima, build_manifold, compare, destationarize_gev, extract_pseudo_angles, fit_family,
    fit_gev, fit_sigma_mle, manifold_to_original_scale, sigma_posterior_band, stationarize,
    to_unit_frechet, BlockPeriod, Error, EvModel, Family, GaussQuadRule, LnSpectral, ModelScore,
    UniSeries,
};
use sha2::{Digest, Sha256};

use crate::args::PipelineArgs;
use crate::config::RunConfig;
use crate::error::CliError;
use crate::summary::{
    Inputs, PosteriorSummary, RunSummary, StageRecord, FAILURE_MARKER, SUMMARY_FILE,
};

/// Covariate levels (as data-scale quantiles of X) for the quantile table.
pub const TABLE_COVARIATE_LEVELS: [f64; 5] = [0.5, 0.75, 0.9, 0.95, 0.99];
pub const TABLE_Q_LEVELS: [f64; 5] = [0.05, 0.25, 0.5, 0.75, 0.95];

struct Run {
    dir: PathBuf,
    summary: RunSummary,
}

impl Run {
    /// Runs one stage. A failure is recorded, the partial summary and a
    /// failure marker are written, and the error is returned tagged.
    fn stage<T>(
        &mut self,
        name: &'static str,
        f: impl FnOnce(&mut Self) -> evmanifold::Result<T>,
    ) -> Result<T, CliError> {
        log::info!("stage {name}");
        match f(self) {
            Ok(v) => {
                self.summary.stages.push(StageRecord {
                    stage: name.into(),
                    ok: true,
                    error: None,
                });
                Ok(v)
            }
            Err(e) => {
                self.summary.stages.push(StageRecord {
                    stage: name.into(),
                    ok: false,
                    error: Some(e.to_string()),
                });
                self.summary.status = "failed".into();
                if let Err(w) = self.write_failure(name, &e) {
                    log::error!("could not record the failure: {w}");
                }
                Err(CliError::Stage { stage: name, source: e })
            }
        }
    }

    fn write_failure(&mut self, stage: &str, e: &Error) -> evmanifold::Result<()> {
        write_atomic(
            &self.dir.join(FAILURE_MARKER),
            format!("stage {stage}: {e}\n").as_bytes(),
        )?;
        self.summary.artifacts.push(SUMMARY_FILE.into());
        write_atomic(&self.dir.join(SUMMARY_FILE), self.summary.to_json().as_bytes())
    }

    fn write(&mut self, name: &str, contents: &str) -> evmanifold::Result<()> {
        write_atomic(&self.dir.join(name), contents.as_bytes())?;
        self.summary.artifacts.push(name.into());
        Ok(())
    }
}

fn fingerprint(x: &[u8], y: &[u8]) -> String {
    let mut h = Sha256::new();
    for part in [x, y] {
        h.update((part.len() as u64).to_le_bytes());
        h.update(part);
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

fn check_aligned(x: &UniSeries, y: &UniSeries) -> evmanifold::Result<()> {
    if x.times() != y.times() {
        return Err(Error::Misaligned(format!(
            "x and y must share timestamps ({} vs {} rows)",
            x.len(),
            y.len()
        )));
    }
    Ok(())
}

/// Stationary GEV fit, then its time-varying form. Sub-yearly series are
/// reduced to annual maxima first.
fn time_varying_gev(raw: &UniSeries, st: &UniSeries, d: &evmanifold::TsDecomposition) -> evmanifold::Result<String> {
    let maxima = if raw.is_yearly() {
        st.values().to_vec()
    } else {
        block_maxima(st, BlockPeriod::Year)?.values().to_vec()
    };
    let p = fit_gev(&maxima)?;
    Ok(time_varying_gev_csv(raw, &destationarize_gev(&p, d)))
}

fn sorted(v: &[f64]) -> Vec<f64> {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    s
}

fn manifold_meta(model: &EvModel, scale: &str) -> serde_json::Value {
    serde_json::json!({ "model": model, "scale": scale })
}

/// Runs the pipeline into `args.out_dir`. With `full` every artifact is
/// written; otherwise only the run summary.
pub fn run_pipeline(
    args: &PipelineArgs,
    cfg: RunConfig,
    command: &str,
    full: bool,
) -> Result<RunSummary, CliError> {
    let dir = args.out_dir.clone();
    if let Err(e) = fs::remove_file(dir.join(FAILURE_MARKER)) {
        if e.kind() != std::io::ErrorKind::NotFound {
            return Err(CliError::Io {
                context: format!("clearing {}", dir.join(FAILURE_MARKER).display()),
                source: e,
            });
        }
    }
    let mut run = Run {
        dir,
        summary: RunSummary {
            command: command.into(),
            status: "running".into(),
            inputs: Inputs {
                x: display(&args.x),
                y: display(&args.y),
            },
            fingerprint: String::new(),
            n: 0,
            k: 0,
            fit_pairs: String::new(),
            radial_threshold: None,
            sigma_hat: None,
            loglik: None,
            spectral_mean: None,
            posterior: None,
            fitted: Vec::new(),
            scores: Vec::new(),
            ranking: None,
            stages: Vec::new(),
            artifacts: Vec::new(),
            config: cfg.clone(),
        },
    };

    let (xs, ys) = run.stage("load", |r| {
        let bx = read_bytes(&args.x)?;
        let by = read_bytes(&args.y)?;
        r.summary.fingerprint = fingerprint(&bx, &by);
        let xs = read_series_from(&bx[..])?;
        let ys = read_series_from(&by[..])?;
        check_aligned(&xs, &ys)?;
        Ok((xs, ys))
    })?;

    let (xst, dx, yst, dy) = run.stage("stationarize", |_| {
        let (xst, dx) = stationarize(&xs, &cfg.ts)?;
        let (yst, dy) = stationarize(&ys, &cfg.ts)?;
        Ok((xst, dx, yst, dy))
    })?;

    if full {
        run.stage("decomposition", |r| {
            r.write("decomposition_x.csv", &decomposition_csv(&xs, &dx, &xst))?;
            r.write("decomposition_y.csv", &decomposition_csv(&ys, &dy, &yst))
        })?;
        run.stage("gev", |r| {
            r.write("time_varying_gev_x.csv", &time_varying_gev(&xs, &xst, &dx)?)?;
            r.write("time_varying_gev_y.csv", &time_varying_gev(&ys, &yst, &dy)?)
        })?;
    }

    let (xd, yd) = match cfg.block {
        Some(b) => run.stage("block", |_| {
            let bx = block_maxima(&xst, b)?;
            let by = block_maxima(&yst, b)?;
            check_aligned(&bx, &by)?;
            Ok((bx.values().to_vec(), by.values().to_vec()))
        })?,
        None => (xst.values().to_vec(), yst.values().to_vec()),
    };
    // Block maxima follow the bivariate extreme-value law directly, so all
    // pairs enter the likelihood; otherwise only the radial exceedances do.
    let all_pairs = cfg.block.is_some() || xs.is_yearly();

    let (fx, fy) = run.stage("frechet", |_| Ok((to_unit_frechet(&xd)?, to_unit_frechet(&yd)?)))?;
    run.summary.n = fx.len();

    let pa = run.stage("pseudo_angles", |r| {
        let pa = if all_pairs {
            r.summary.fit_pairs = "all".into();
            pseudo_angles_above(fx.values(), fy.values(), 0.0)?
        } else {
            r.summary.fit_pairs = "exceedances".into();
            let pa = extract_pseudo_angles(&fx, &fy, cfg.threshold)?;
            r.summary.radial_threshold = Some(pa.u);
            pa
        };
        r.summary.k = pa.k;
        if full {
            r.write("rug.csv", &rug_csv(&pa))?;
        }
        Ok(pa)
    })?;
    let (fit_x, fit_y) = (fx.select(&pa.indices), fy.select(&pa.indices));

    let sigma = run.stage("fit_sigma", |r| {
        let fit = fit_sigma_mle(&fit_x, &fit_y, DEFAULT_SIGMA_BOUNDS)?;
        r.summary.sigma_hat = Some(fit.sigma);
        r.summary.loglik = Some(fit.loglik);
        Ok(fit.sigma)
    })?;
    let fitted_model = EvModel::semiparam(sigma).map_err(|e| CliError::Stage {
        stage: "fit_sigma",
        source: e,
    })?;

    run.stage("spectral_mean", |r| {
        let rule = GaussQuadRule::gauss_hermite(cfg.quad_nodes)?;
        r.summary.spectral_mean = Some(spectral_moment(&LnSpectral::new(sigma)?, &rule)?);
        Ok(())
    })?;

    run.stage("score", |r| {
        let mut fitted = Vec::with_capacity(Family::ALL.len());
        for family in Family::ALL {
            fitted.push(match family {
                Family::Semiparam => FittedModel {
                    model: fitted_model,
                    loglik: r.summary.loglik.expect("set by fit_sigma"),
                },
                other => fit_family(other, &fit_x, &fit_y)?,
            });
        }
        let scores = fitted
            .iter()
            .map(|f| {
                let k = match f.model {
                    EvModel::SemiparamLn { .. } => cfg.semiparam_k,
                    m => m.free_parameters(),
                };
                ModelScore::new(f.model.family(), k, pa.k, f.loglik)
            })
            .collect::<evmanifold::Result<Vec<_>>>()?;
        let ranking = compare(&scores)?;
        if full {
            r.write("scores.csv", &ranking.to_csv())?;
            r.write("scores.txt", &ranking.to_text())?;
        }
        r.summary.fitted = fitted;
        r.summary.scores = scores;
        r.summary.ranking = Some(ranking);
        Ok(())
    })?;

    if full {
        run.stage("posterior", |r| {
            let band = sigma_posterior_band(&fit_x, &fit_y, &cfg.posterior())?;
            r.write("density_band.csv", &band.to_csv())?;
            r.summary.posterior = Some(PosteriorSummary {
                sigma_mean: band.sigma_mean(),
                acceptance_rate: band.acceptance_rate,
                draws: band.draws.len(),
                warning: band.warning.clone(),
            });
            Ok(())
        })?;

        run.stage("manifold", |r| {
            let m = build_manifold(&fitted_model, &cfg.q_grid, &cfg.x_grid, &cfg.solver)?;
            r.write("manifold_frechet.csv", &m.to_csv(&manifold_meta(&fitted_model, "frechet")))?;
            let orig = manifold_to_original_scale(&m, &xd, &yd)?;
            r.write("manifold_original.csv", &orig.to_csv(&manifold_meta(&fitted_model, "original")))
        })?;

        run.stage("quantile_table", |r| {
            let xs_sorted = sorted(&xd);
            let covariates: Vec<f64> = TABLE_COVARIATE_LEVELS
                .iter()
                .map(|&p| empirical_quantile(&xs_sorted, p))
                .collect();
            let table = predict_quantile_table_original(
                &fitted_model,
                &covariates,
                &TABLE_Q_LEVELS,
                &xd,
                &yd,
                &cfg.solver,
            )?;
            r.write("quantile_table.csv", &table.to_csv())?;
            r.write("quantile_table.txt", &table.to_text())
        })?;
    }

    run.summary.status = "complete".into();
    run.summary.artifacts.push(SUMMARY_FILE.into());
    let summary = run.summary.clone();
    run.stage("summary", |r| {
        write_atomic(&r.dir.join(SUMMARY_FILE), summary.to_json().as_bytes())
    })?;
    Ok(summary)
}

fn read_bytes(p: &Path) -> evmanifold::Result<Vec<u8>> {
    fs::read(p).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", p.display()))))
}

fn display(p: &Path) -> String {
    p.display().to_string()
}
