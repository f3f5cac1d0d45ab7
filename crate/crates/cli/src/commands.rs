use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use serde_json::json;

use tpplab::data::{io, validate_dataset};
use tpplab::diagnose::{self, wasserstein_1d, DiagnoseConfig};
use tpplab::evaluate::{self, EvalConfig};
use tpplab::infer::{self, ArchiveConfig, ChainConfig, PosteriorSamples, PriorSpec, SamplerKind};
use tpplab::rng::derive_seed;
use tpplab::simulate::{self, SimConfig};
use tpplab::{Dataset, ModelFamily, ParamSet};

use crate::manifest::{sha256_file, RunManifest, MANIFEST};
use crate::{
    CliError, DiagnoseArgs, EvaluateArgs, FitArgs, ForecastArgs, IngestArgs, SamplerArg, SimulateArgs, EXIT_DIAGNOSTIC,
};

type CliResult<T> = Result<T, CliError>;

const STRICT_RHAT: f64 = 1.05;

fn file_label(p: &Path) -> String {
    p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default()
}

fn load_dataset(path: &Path) -> CliResult<Dataset> {
    let f = File::open(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    Ok(io::read_jsonl(BufReader::new(f))?)
}

fn open(path: &Path) -> CliResult<File> {
    File::open(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

fn parse_family(s: &str) -> CliResult<ModelFamily> {
    Ok(s.parse::<ModelFamily>()?)
}

struct Fit {
    samples: PosteriorSamples,
    config: ArchiveConfig,
}

/// Reads a posterior archive and records it (and its manifest) as inputs.
fn load_posterior(dir: &Path, m: &mut RunManifest) -> CliResult<Fit> {
    let (samples, config) = PosteriorSamples::read_archive(dir)?;
    m.add_input("posterior", dir)?;
    let fit_manifest = dir.join(MANIFEST);
    if fit_manifest.is_file() {
        m.fit_manifest_sha256 = Some(sha256_file(&fit_manifest)?);
    }
    Ok(Fit { samples, config })
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

fn write_json(path: &Path, v: &impl serde::Serialize) -> CliResult<()> {
    let mut s = serde_json::to_string_pretty(v).map_err(|e| CliError::input(e.to_string()))?;
    s.push('\n');
    write_text(path, &s)
}

fn create_out(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::input(format!("{}: {e}", dir.display())))
}

pub fn ingest(a: IngestArgs) -> CliResult<()> {
    let mut m = RunManifest::new(
        "ingest",
        json!({ "tolerate_offgrid": a.tolerate_offgrid, "lenient": a.lenient }),
    );
    let mut notes = BTreeMap::new();
    let raw = if let Some(path) = &a.dataset {
        m.add_input(&file_label(path), path)?;
        io::read_jsonl_unchecked(BufReader::new(open(path)?))?
    } else {
        let (Some(ap), Some(sp)) = (&a.annotations, &a.sessions) else {
            return Err(CliError::input("give --annotations and --sessions, or --dataset"));
        };
        m.add_input("annotations", ap)?;
        m.add_input("sessions", sp)?;
        let (anns, ae) = io::read_annotations(open(ap)?, a.tolerate_offgrid)?;
        let (sess, se) = io::read_sessions(open(sp)?)?;
        notes.insert("annotation_time_encoding".to_string(), format!("{ae:?}"));
        notes.insert("session_time_encoding".to_string(), format!("{se:?}"));
        let ds = io::build_dataset(&anns, &sess)?;
        notes.extend(ds.metadata.clone());
        ds
    };

    create_out(&a.out)?;
    let report = validate_dataset(&raw);
    write_json(&a.out.join("validation.json"), &json!({ "metadata": notes, "report": report }))?;
    let mut dropped = Vec::new();
    let ds = if report.is_clean() {
        Dataset::new(raw.sequences)?
    } else if a.lenient {
        let mut seen = std::collections::HashSet::new();
        let keep: Vec<_> = raw
            .sequences
            .into_iter()
            .filter(|s| {
                let ok = s.violations().is_empty() && seen.insert(s.session_id.clone());
                if !ok {
                    dropped.push(s.session_id.clone());
                }
                ok
            })
            .collect();
        Dataset::new(keep)?
    } else {
        let mut msg = format!("{} validation violation(s):", report.total_violations);
        for s in report.sequences.iter().filter(|s| !s.violations.is_empty()) {
            for v in &s.violations {
                let _ = write!(msg, "\n  session {}: {v}", s.session_id);
            }
        }
        return Err(CliError::input(msg + "\n(use --lenient to drop these sessions)"));
    };
    io::write_jsonl_path(&a.out.join("dataset.jsonl"), &ds, None)?;
    for id in &dropped {
        eprintln!("dropped session {id}");
    }
    println!(
        "{} sessions, {} onsets, {:.2} minutes",
        ds.len(),
        ds.total_events(),
        ds.total_duration()
    );
    if let Some(d) = notes.get("dedup_count") {
        println!("duplicate onsets removed: {d}");
    }
    m.config["dropped_sessions"] = json!(dropped);
    m.write(&a.out)?;
    Ok(())
}

pub fn fit(a: FitArgs) -> CliResult<()> {
    let family = parse_family(&a.family)?;
    let ds = load_dataset(&a.dataset)?;
    let mut m = RunManifest::new("fit", json!(null));
    m.add_input("dataset", &a.dataset)?;
    let prior = match &a.prior_file {
        Some(p) => {
            m.add_input("prior", p)?;
            let text = std::fs::read_to_string(p).map_err(|e| CliError::input(format!("{}: {e}", p.display())))?;
            let spec = PriorSpec::from_json(&text)?;
            if spec.family != family {
                return Err(CliError::input(format!("prior file is for {}, not {family}", spec.family)));
            }
            spec
        }
        None => PriorSpec::default_for(family),
    };
    let seed = m.resolve_seed(a.seed);
    let cfg = ChainConfig {
        n_chains: a.chains,
        warmup: a.warmup,
        draws: a.draws,
        target_accept: a.target_accept,
        max_depth: a.max_depth,
        seed,
        sampler: match a.sampler {
            SamplerArg::Nuts => SamplerKind::Nuts,
            SamplerArg::Rwm => SamplerKind::Rwm,
        },
    };
    cfg.validate()?;
    let samples = infer::run_nuts(&ds, &prior, &cfg)?;
    let archive = infer::archive_config(&ds, &prior, &cfg, &samples);
    create_out(&a.out)?;
    samples.write_archive(&a.out, &archive)?;
    m.config = serde_json::to_value(&archive).map_err(|e| CliError::input(e.to_string()))?;
    m.write(&a.out)?;

    println!("{family}: {} chains x {} draws, {} divergences", cfg.n_chains, cfg.draws, samples.divergences);
    println!("{:<8} {:>12} {:>12} {:>10} {:>10} {:>8}", "param", "mean", "sd", "ess_bulk", "ess_tail", "r_hat");
    let na = |v: Option<f64>, p: usize| v.map(|x| format!("{x:.p$}")).unwrap_or_else(|| "NA".into());
    for d in &samples.diagnostics {
        println!(
            "{:<8} {:>12.6} {:>12.6} {:>10} {:>10} {:>8}",
            d.name,
            d.mean,
            d.sd,
            na(d.ess_bulk, 0),
            na(d.ess_tail, 0),
            na(d.r_hat, 4)
        );
    }
    if a.strict {
        if let Some(r) = samples.max_r_hat().filter(|&r| r > STRICT_RHAT) {
            return Err(CliError {
                code: EXIT_DIAGNOSTIC,
                message: format!("max R-hat {r:.4} exceeds {STRICT_RHAT}"),
            });
        }
    }
    Ok(())
}

fn parse_inline_params(family: ModelFamily, s: &str) -> CliResult<ParamSet> {
    let mut named = BTreeMap::new();
    for pair in s.split(',').filter(|p| !p.trim().is_empty()) {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| CliError::input(format!("expected name=value, got '{pair}'")))?;
        let v: f64 = v
            .trim()
            .parse()
            .map_err(|_| CliError::input(format!("parameter {k}: '{v}' is not a number")))?;
        named.insert(k.trim().to_string(), v);
    }
    Ok(ParamSet::from_named(family, &named)?)
}

fn read_durations(path: &Path) -> CliResult<Vec<f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.trim()
                .parse::<f64>()
                .ok()
                .filter(|d| d.is_finite() && *d > 0.0)
                .ok_or_else(|| CliError::input(format!("{} line {}: invalid duration '{l}'", path.display(), i + 1)))
        })
        .collect()
}

pub fn simulate(a: SimulateArgs) -> CliResult<()> {
    let mut m = RunManifest::new("simulate", json!(null));
    let theta = match (&a.params_file, &a.params) {
        (Some(p), _) => {
            m.add_input("params", p)?;
            let text = std::fs::read_to_string(p).map_err(|e| CliError::input(format!("{}: {e}", p.display())))?;
            let theta: ParamSet = serde_json::from_str(&text).map_err(|e| CliError::input(format!("{}: {e}", p.display())))?;
            if let Some(f) = &a.family {
                if parse_family(f)? != theta.family() {
                    return Err(CliError::input(format!("--family {f} does not match the parameter file")));
                }
            }
            theta
        }
        (None, Some(s)) => parse_inline_params(parse_family(a.family.as_deref().unwrap_or_default())?, s)?,
        (None, None) => return Err(CliError::input("give --params-file or --family with --params")),
    };
    let durations = match (&a.duration_file, a.duration, a.sessions) {
        (Some(p), _, n) => {
            m.add_input("durations", p)?;
            let d = read_durations(p)?;
            if d.is_empty() {
                return Err(CliError::input("duration file is empty"));
            }
            let n = n.unwrap_or(d.len());
            d.iter().copied().cycle().take(n).collect()
        }
        (None, Some(t), Some(n)) if t > 0.0 && t.is_finite() => vec![t; n],
        (None, Some(t), Some(_)) => return Err(CliError::input(format!("invalid duration {t}"))),
        _ => return Err(CliError::input("give --sessions with --T, or --duration-file")),
    };
    let seed = m.resolve_seed(a.seed);
    let cfg = SimConfig {
        max_events: a.max_events,
        ..SimConfig::new(seed)
    };
    m.config = json!({ "params": theta, "sessions": durations.len(), "durations": durations, "max_events": a.max_events });
    let ds = simulate::simulate_dataset(&theta, &durations, &cfg)?;
    create_out(&a.out)?;
    io::write_jsonl_path(&a.out.join("dataset.jsonl"), &ds, None)?;
    write_json(&a.out.join("params.json"), &theta)?;
    println!("{} sessions, {} onsets from {theta}", ds.len(), ds.total_events());
    m.write(&a.out)?;
    Ok(())
}

pub fn diagnose(a: DiagnoseArgs) -> CliResult<()> {
    let ds = load_dataset(&a.dataset)?;
    let mut m = RunManifest::new("diagnose", json!(null));
    m.add_input("dataset", &a.dataset)?;
    let fit = load_posterior(&a.posterior, &mut m)?;
    let seed = m.resolve_seed(a.seed);
    let cfg = DiagnoseConfig {
        trials: a.trials,
        ..DiagnoseConfig::new(seed)
    };
    m.config = json!({ "family": fit.config.family, "diagnose": cfg });
    let source = format!("posterior {}", m.inputs["posterior"]);
    let theta = fit.samples.posterior_mean()?;
    let draws = fit.samples.param_sets()?;
    let report = diagnose::run_diagnostics(&ds, &theta, &draws, &source, &cfg)?;
    create_out(&a.out)?;
    report.write(&a.out)?;
    println!("{}: posterior mean {theta}", fit.config.family);
    if let Some(ks) = &report.ks {
        println!("RTC KS vs Exp(1): D = {:.4}, p = {:.4}, n = {}", ks.statistic, ks.p_value, ks.n);
    }
    println!("count WD over {} trials: {:.3} ± {:.3}", cfg.trials, report.wd.mean, report.wd.sd);
    m.write(&a.out)?;
    Ok(())
}

pub fn evaluate(a: EvaluateArgs) -> CliResult<()> {
    let ds = load_dataset(&a.dataset)?;
    let mut m = RunManifest::new("evaluate", json!(null));
    m.add_input("dataset", &a.dataset)?;
    let fit = load_posterior(&a.posterior, &mut m)?;
    let seed = m.resolve_seed(a.seed);
    let cfg = EvalConfig {
        dts: a.dt_list.clone(),
        mape_starts: a.starts,
        mape_traj: a.traj,
        auc_starts: a.auc_starts,
        draw_averaged: a.draw_averaged,
        ..EvalConfig::new(seed)
    };
    m.config = json!({ "family": fit.config.family, "evaluate": cfg, "wd_trials": a.trials });
    let report = evaluate::run_evaluation(&ds, &fit.samples, &cfg)?;

    let draws = fit.samples.param_sets()?;
    let sim = SimConfig::new(derive_seed(seed, "wd", 0));
    let counts = simulate::count_distribution_sample(&draws, &ds.durations(), a.trials, &sim)?;
    let empirical: Vec<f64> = ds.sequences.iter().map(|s| s.len() as f64).collect();
    let wd: Vec<f64> = counts
        .iter()
        .map(|t| wasserstein_1d(&t.iter().map(|&c| c as f64).collect::<Vec<_>>(), &empirical))
        .collect::<Result<_, _>>()?;
    let wd_mean = tpplab::stats::mean(&wd);
    let wd_sd = if wd.len() > 1 { tpplab::stats::sd(&wd) } else { 0.0 };

    let extra = json!({
        "wd": { "mean": wd_mean, "sd": wd_sd, "trials": a.trials },
        "fit_manifest_sha256": m.fit_manifest_sha256,
        "seed": seed,
    });
    create_out(&a.out)?;
    report.write(&a.out, extra)?;

    println!("{}", fit.config.family);
    println!("WD {wd_mean:.3} ± {wd_sd:.3}");
    println!("ELPD {:.2} ± {:.2} ({} sessions with k̂ > 0.7)", report.loo.elpd, report.loo.se, report.loo.n_bad());
    for (mp, au) in report.mape.iter().zip(&report.auc) {
        let auc = au.auc.map(|v| format!("{v:.3}")).unwrap_or_else(|| "NA".into());
        println!(
            "dt {:>5}: MAPE {:>8.2} ({} sessions, {} skipped)  AUC {auc}",
            mp.dt, mp.mape, mp.sessions_used, mp.sessions_skipped
        );
    }
    m.write(&a.out)?;
    Ok(())
}

pub fn forecast(a: ForecastArgs) -> CliResult<()> {
    if a.grid == 0 || a.traj == 0 {
        return Err(CliError::input("--grid and --traj must be positive"));
    }
    let ds = load_dataset(&a.dataset)?;
    let mut m = RunManifest::new("forecast", json!(null));
    m.add_input("dataset", &a.dataset)?;
    let fit = load_posterior(&a.posterior, &mut m)?;
    let seq = ds
        .get(&a.session)
        .ok_or_else(|| CliError::input(format!("session '{}' not found in the dataset", a.session)))?;
    let seed = m.resolve_seed(a.seed);
    m.config = json!({
        "family": fit.config.family, "session": a.session, "t_start": a.t_start,
        "dt": a.dt, "traj": a.traj, "grid": a.grid,
    });
    let draws = fit.samples.param_sets()?;
    let fc = simulate::forecast_counts(&draws, seq, a.t_start, a.dt, a.traj, &SimConfig::new(seed))?;
    let grid: Vec<f64> = (1..=a.grid).map(|i| a.t_start + a.dt * i as f64 / a.grid as f64).collect();
    let bands = fc.bands(&grid);
    let mut csv = String::from("time,q5,q25,q50,q75,q95,observed\n");
    for (g, b) in grid.iter().zip(&bands) {
        let _ = writeln!(
            csv,
            "{g},{},{},{},{},{},{}",
            b[0],
            b[1],
            b[2],
            b[3],
            b[4],
            seq.count_in(a.t_start, *g)
        );
    }
    create_out(&a.out)?;
    write_text(&a.out.join("forecast.csv"), &csv)?;
    let observed = seq.count_in(a.t_start, a.t_start + a.dt);
    write_json(
        &a.out.join("summary.json"),
        &json!({
            "session_id": fc.session_id, "t_start": fc.t_start, "dt": fc.dt,
            "quantiles": { "q5": fc.quantiles[0], "q25": fc.quantiles[1], "q50": fc.quantiles[2],
                           "q75": fc.quantiles[3], "q95": fc.quantiles[4] },
            "mean": fc.mean(), "observed": observed,
            "mape": evaluate::mape(observed, fc.median()),
        }),
    )?;
    println!(
        "session {} ({}, {}]: median {} [q5 {}, q95 {}], observed {observed}",
        a.session,
        a.t_start,
        a.t_start + a.dt,
        fc.median(),
        fc.quantiles[0],
        fc.quantiles[4]
    );
    m.write(&a.out)?;
    Ok(())
}
