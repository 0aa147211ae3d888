use std::collections::HashMap;
use std::path::Path;

use evmanifold::io::{read_series, series_to_csv, write_atomic};
use evmanifold::manifold::{log_grid, logistic_approx_line};
use evmanifold::tstationary::decomposition_csv;
use evmanifold::{
    block_maxima, build_manifold, compare as rank_scores, simulate_scenario, stationarize, Cadence,
    EvModel, ModelScore, SimScenario,
};
use serde_json::json;

use crate::args::{
    AnalyzeArgs, CadenceArg, CompareArgs, FitArgs, ManifoldArgs, ModelArg, ParamArgs,
    PipelineArgs, SimulateArgs, StationarizeArgs,
};
use crate::config::{block_period, check_q_grid, check_x_grid, parse_list, RunConfig};
use crate::error::{CliError, StageExt};
use crate::pipeline::run_pipeline;
use crate::summary::RunSummary;

impl ModelArg {
    pub fn name(self) -> &'static str {
        match self {
            ModelArg::Logistic => "logistic",
            ModelArg::Hr => "hr",
            ModelArg::Ct => "ct",
            ModelArg::Semiparam => "semiparam",
        }
    }
}

/// Builds a model from its flags. Missing or inapplicable parameters are
/// usage errors, as are out-of-range values.
pub fn model_from_flags(model: ModelArg, p: &ParamArgs) -> Result<EvModel, CliError> {
    let needed: &[&str] = match model {
        ModelArg::Logistic => &["alpha"],
        ModelArg::Hr => &["lambda"],
        ModelArg::Ct => &["alpha", "beta"],
        ModelArg::Semiparam => &["sigma"],
    };
    let given = [
        ("alpha", p.alpha),
        ("beta", p.beta),
        ("lambda", p.lambda),
        ("sigma", p.sigma),
    ];
    for (flag, value) in given {
        match (needed.contains(&flag), value) {
            (true, None) => {
                return Err(CliError::Usage(format!(
                    "--model {} requires --{flag}",
                    model.name()
                )))
            }
            (false, Some(_)) => {
                return Err(CliError::Usage(format!(
                    "--{flag} does not apply to --model {}",
                    model.name()
                )))
            }
            _ => {}
        }
    }
    let built = match model {
        ModelArg::Logistic => EvModel::logistic(p.alpha.unwrap_or_default()),
        ModelArg::Hr => EvModel::husler_reiss(p.lambda.unwrap_or_default()),
        ModelArg::Ct => EvModel::coles_tawn(p.alpha.unwrap_or_default(), p.beta.unwrap_or_default()),
        ModelArg::Semiparam => EvModel::semiparam(p.sigma.unwrap_or_default()),
    };
    built.map_err(CliError::usage)
}

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    write_atomic(path, contents.as_bytes()).stage("write")?;
    println!("wrote {}", path.display());
    Ok(())
}

pub fn simulate(a: &SimulateArgs) -> Result<(), CliError> {
    let model = model_from_flags(a.model, &a.params)?;
    let mut sc = SimScenario::new(model, a.n, a.seed);
    sc.trend_amp = a.trend_amp;
    sc.season_amp = a.season_amp;
    sc.cadence = match a.cadence {
        CadenceArg::Weekly => Cadence::Weekly,
        CadenceArg::Yearly => Cadence::Yearly,
    };
    sc.validate().map_err(CliError::usage)?;

    let (mut xs, mut ys) = simulate_scenario(&sc).stage("simulate")?;
    let block = a.block.map(block_period);
    if let Some(b) = block {
        xs = block_maxima(&xs, b).stage("block")?;
        ys = block_maxima(&ys, b).stage("block")?;
    }
    let manifest = json!({
        "scenario": sc,
        "block": block,
        "rows": xs.len(),
        "files": { "x": "x.csv", "y": "y.csv" },
    });
    write(&a.out_dir.join("x.csv"), &series_to_csv(&xs))?;
    write(&a.out_dir.join("y.csv"), &series_to_csv(&ys))?;
    write(
        &a.out_dir.join("manifest.json"),
        &format!("{}\n", serde_json::to_string_pretty(&manifest).expect("manifest serializes")),
    )
}

pub fn stationarize_cmd(a: &StationarizeArgs) -> Result<(), CliError> {
    let mut cfg = RunConfig::load(a.config.as_deref())?;
    cfg.apply_ts(&a.ts);
    cfg.validate()?;
    let series = read_series(&a.input).stage("load")?;
    let (st, d) = stationarize(&series, &cfg.ts).stage("stationarize")?;
    write(&a.out_dir.join("decomposition.csv"), &decomposition_csv(&series, &d, &st))?;
    write(&a.out_dir.join("stationarized.csv"), &series_to_csv(&st))
}

/// Flags over config file over defaults, for `fit` and `analyze`.
fn pipeline_config(p: &PipelineArgs) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::load(p.config.as_deref())?;
    if let Some(v) = p.seed {
        cfg.seed = v;
    }
    if let Some(v) = p.threshold {
        cfg.threshold = v;
    }
    if let Some(b) = p.block {
        cfg.block = Some(block_period(b));
    }
    if let Some(v) = p.k {
        cfg.semiparam_k = v;
    }
    if let Some(v) = p.quad_nodes {
        cfg.quad_nodes = v;
    }
    if let Some(v) = &p.label {
        cfg.label = v.clone();
    }
    cfg.apply_ts(&p.ts);
    Ok(cfg)
}

fn report(s: &RunSummary) {
    println!(
        "n={} k={} sigma_hat={} best={}",
        s.n,
        s.k,
        s.sigma_hat.map_or("-".into(), |v| format!("{v:.6}")),
        s.ranking.as_ref().map_or("-", |r| r.best().model_name.as_str())
    );
}

pub fn fit(a: &FitArgs) -> Result<(), CliError> {
    let cfg = pipeline_config(&a.pipeline)?;
    cfg.validate()?;
    let s = run_pipeline(&a.pipeline, cfg, "fit", false)?;
    report(&s);
    Ok(())
}

pub fn analyze(a: &AnalyzeArgs) -> Result<(), CliError> {
    let mut cfg = pipeline_config(&a.pipeline)?;
    if let Some(v) = a.mcmc_iters {
        cfg.mcmc_iters = v;
    }
    if let Some(v) = a.burnin {
        cfg.burnin = v;
    }
    if let Some(s) = &a.q_grid {
        cfg.q_grid = parse_list("--q-grid", s)?;
    }
    if let Some(s) = &a.x_grid {
        cfg.x_grid = parse_list("--x-grid", s)?;
    }
    cfg.validate()?;
    let s = run_pipeline(&a.pipeline, cfg, "analyze", true)?;
    report(&s);
    Ok(())
}

pub fn manifold(a: &ManifoldArgs) -> Result<(), CliError> {
    let (mut cfg, model) = match &a.summary {
        Some(path) => {
            let s = RunSummary::read(path)?;
            let sigma = match (s.is_complete(), s.sigma_hat) {
                (true, Some(v)) => v,
                _ => {
                    return Err(CliError::Data(format!(
                        "{} holds no completed fit",
                        path.display()
                    )))
                }
            };
            (s.config, EvModel::semiparam(sigma).stage("load")?)
        }
        None => {
            let model = a.model.expect("clap requires --model without --summary");
            (RunConfig::load(a.config.as_deref())?, model_from_flags(model, &a.params)?)
        }
    };
    if let Some(s) = &a.q_grid {
        cfg.q_grid = parse_list("--q-grid", s)?;
    }
    if let Some(s) = &a.x_grid {
        cfg.x_grid = parse_list("--x-grid", s)?;
    } else if a.x_min.is_some() || a.x_max.is_some() || a.x_count.is_some() {
        let (lo, hi, count) = (
            a.x_min.unwrap_or(0.5),
            a.x_max.unwrap_or(100.0),
            a.x_count.unwrap_or(40),
        );
        if !(lo > 0.0 && hi > lo) || count < 2 {
            return Err(CliError::Usage(format!(
                "x grid needs 0 < x-min < x-max and x-count >= 2, got {lo}, {hi}, {count}"
            )));
        }
        cfg.x_grid = log_grid(lo, hi, count);
    }
    check_q_grid(&cfg.q_grid)?;
    check_x_grid(&cfg.x_grid)?;
    cfg.solver.validate().map_err(CliError::usage)?;

    let alpha = match (a.approx, model) {
        (false, _) => None,
        (true, EvModel::Logistic { alpha }) if alpha < 1.0 => Some(alpha),
        (true, _) => {
            return Err(CliError::Usage(
                "--approx needs the logistic model with alpha < 1".into(),
            ))
        }
    };
    let m = build_manifold(&model, &cfg.q_grid, &cfg.x_grid, &cfg.solver).stage("manifold")?;
    let meta = json!({ "model": model, "scale": m.scale.as_str() });
    let csv = match alpha {
        None => m.to_csv(&meta),
        Some(alpha) => {
            let mut out = format!("# {meta}\nq,x,exact,approx\n");
            for (i, &q) in m.q_grid.iter().enumerate() {
                for (j, &x) in m.x_grid.iter().enumerate() {
                    let approx = logistic_approx_line(alpha, q, x).stage("approx")?;
                    out.push_str(&format!("{q},{x},{},{approx}\n", m.y[i][j]));
                }
            }
            out
        }
    };
    write(&a.out, &csv)
}

pub fn compare(a: &CompareArgs) -> Result<(), CliError> {
    if a.summaries.len() < 2 {
        return Err(CliError::Usage(format!(
            "compare needs at least two run summaries, got {}",
            a.summaries.len()
        )));
    }
    let runs = a
        .summaries
        .iter()
        .map(|p| RunSummary::read(p))
        .collect::<Result<Vec<_>, _>>()?;
    for (path, s) in a.summaries.iter().zip(&runs) {
        if !s.is_complete() || s.scores.is_empty() {
            return Err(CliError::Data(format!("{} holds no completed fit", path.display())));
        }
    }
    let first = &runs[0];
    for (path, s) in a.summaries.iter().zip(&runs).skip(1) {
        if s.fingerprint != first.fingerprint || s.n != first.n {
            return Err(CliError::Data(format!(
                "{} was fitted to different data than {} (n {} vs {})",
                path.display(),
                a.summaries[0].display(),
                s.n,
                first.n
            )));
        }
    }

    let mut seen: HashMap<&str, usize> = HashMap::new();
    for s in &runs {
        *seen.entry(s.config.label.as_str()).or_default() += 1;
    }
    let mut scores: Vec<ModelScore> = Vec::new();
    for (i, s) in runs.iter().enumerate() {
        let label = if seen[s.config.label.as_str()] > 1 {
            format!("{}#{}", s.config.label, i + 1)
        } else {
            s.config.label.clone()
        };
        for sc in &s.scores {
            let mut sc = sc.clone();
            sc.model_name = format!("{label}:{}", sc.model_name);
            scores.push(sc);
        }
    }
    let ranking = rank_scores(&scores).stage("compare")?;
    write(&a.out_dir.join("ranking.csv"), &ranking.to_csv())?;
    write(&a.out_dir.join("ranking.txt"), &ranking.to_text())?;
    print!("{}", ranking.to_text());
    Ok(())
}
