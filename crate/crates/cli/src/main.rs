mod config;
mod experiments;
mod presets;
mod svg;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use hyslab::io::{Cell, Table};
use rayon::prelude::*;
use serde_json::json;

use config::{Config, ExperimentId};
use experiments::{run_experiment, Artifact, Outcome};

/// Environment variable that overrides every configured output directory.
const OUTPUT_ROOT_VAR: &str = "HYSLAB_OUTPUT_ROOT";
const DEFAULT_OUTPUT_ROOT: &str = "hyslab-output";

const USAGE: &str = "\
usage: hyslab run <config.toml>
       hyslab run --preset <name>
       hyslab sweep <config.toml>
       hyslab presets

A config is a TOML file with a top-level `experiment` key and optional
[model], [options] and [sweep] tables; see README.md for the keys.";

#[derive(Parser)]
#[command(name = "hyslab", version, about = "Layer solutions and simulations for a hysteresis-driven pattern model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Runs one experiment and writes its artifacts.
    Run {
        /// Path to a TOML config.
        config: Option<PathBuf>,
        /// Use a built-in config instead of a file.
        #[arg(long, conflicts_with = "config")]
        preset: Option<String>,
    },
    /// Runs the experiment at every point of the config's [sweep] block.
    Sweep { config: PathBuf },
    /// Lists the built-in configs.
    Presets {
        /// Print the config text of one preset.
        #[arg(long)]
        show: Option<String>,
    },
}

enum Status {
    Pass,
    Fail,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, preset } => cmd_run(config, preset),
        Command::Sweep { config } => cmd_sweep(&config),
        Command::Presets { show } => cmd_presets(show),
    };
    match result {
        Ok(Status::Pass) => ExitCode::SUCCESS,
        Ok(Status::Fail) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn load(source: &ConfigSource) -> Result<(String, Config)> {
    let (label, text) = match source {
        ConfigSource::File(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let label = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "run".into());
            (label, text)
        }
        ConfigSource::Preset(p) => (p.name.to_string(), p.config.to_string()),
    };
    if text.trim().is_empty() {
        bail!("empty config\n\n{USAGE}");
    }
    Ok((label, Config::parse(&text)?))
}

enum ConfigSource {
    File(PathBuf),
    Preset(&'static presets::Preset),
}

fn output_root(cfg: &Config) -> PathBuf {
    match std::env::var_os(OUTPUT_ROOT_VAR) {
        Some(v) if !v.is_empty() => PathBuf::from(v),
        _ => cfg.output_dir.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_ROOT)),
    }
}

fn write_artifacts(dir: &Path, o: &Outcome) -> Result<Vec<String>> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut names = Vec::new();
    for a in &o.artifacts {
        let path = dir.join(a.name());
        match a {
            Artifact::Csv(_, t) => t.write_file(&path)?,
            Artifact::Svg(_, s) => std::fs::write(&path, s)?,
        }
        names.push(a.name().to_string());
    }
    Ok(names)
}

fn write_manifest(dir: &Path, label: &str, cfg: &Config, source_text: &str, o: &Outcome, artifacts: &[String]) -> Result<()> {
    let summary: serde_json::Map<String, serde_json::Value> =
        o.summary.iter().map(|(k, v)| (k.clone(), json!(v.to_string()))).collect();
    let manifest = json!({
        "label": label,
        "experiment": cfg.experiment.name(),
        "build": env!("HYSLAB_GIT_DESCRIBE"),
        "version": env!("CARGO_PKG_VERSION"),
        "model": cfg.model.resolve(),
        "config": source_text,
        "passed": o.passed,
        "message": o.message,
        "summary": summary,
        "artifacts": artifacts,
    });
    std::fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)? + "\n")?;
    Ok(())
}

fn source_text(source: &ConfigSource) -> String {
    match source {
        ConfigSource::File(p) => std::fs::read_to_string(p).unwrap_or_default(),
        ConfigSource::Preset(p) => p.config.to_string(),
    }
}

fn summary_line(label: &str, cfg: &Config, o: &Outcome) -> String {
    let verdict = match o.passed {
        Some(true) => "PASS",
        Some(false) => "FAIL",
        None => "DONE",
    };
    format!("{verdict} {label} [{}]: {}", cfg.experiment.name(), o.message)
}

fn cmd_run(config: Option<PathBuf>, preset: Option<String>) -> Result<Status> {
    if preset.as_deref() == Some("all-presets") {
        let root = std::env::var_os(OUTPUT_ROOT_VAR)
            .filter(|v| !v.is_empty())
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_ROOT));
        return all_presets(&root.join("all-presets"));
    }
    let source = match (config, preset) {
        (Some(p), None) => ConfigSource::File(p),
        (None, Some(name)) => ConfigSource::Preset(presets::find(&name).with_context(|| format!("unknown preset `{name}`"))?),
        _ => bail!("{USAGE}"),
    };
    let (label, cfg) = load(&source)?;
    let dir = output_root(&cfg).join(&label);
    if cfg.experiment == ExperimentId::AllPresets {
        return all_presets(&dir);
    }
    let o = run_experiment(&cfg).with_context(|| format!("experiment {}", cfg.experiment.name()))?;
    let names = write_artifacts(&dir, &o)?;
    write_manifest(&dir, &label, &cfg, &source_text(&source), &o, &names)?;
    println!("{}", summary_line(&label, &cfg, &o));
    Ok(if o.passed == Some(false) { Status::Fail } else { Status::Pass })
}

fn all_presets(dir: &Path) -> Result<Status> {
    let mut table = Table::new(&["preset", "experiment", "status", "message"]);
    let mut ok = true;
    for p in presets::PRESETS {
        let cfg = Config::parse(p.config)?;
        let sub = dir.join(p.name);
        let (status, message) = match run_experiment(&cfg) {
            Ok(o) => {
                let names = write_artifacts(&sub, &o)?;
                write_manifest(&sub, p.name, &cfg, p.config, &o, &names)?;
                println!("{}", summary_line(p.name, &cfg, &o));
                let s = match o.passed {
                    Some(false) => "fail",
                    Some(true) => "pass",
                    None => "done",
                };
                (s, o.message)
            }
            Err(e) => {
                println!("ERROR {}: {e:#}", p.name);
                ("error", format!("{e:#}"))
            }
        };
        ok &= status == "pass" || status == "done";
        table.push(vec![p.name.into(), cfg.experiment.name().into(), status.into(), message.into()]);
    }
    std::fs::create_dir_all(dir)?;
    table.write_file(&dir.join("presets.csv"))?;
    Ok(if ok { Status::Pass } else { Status::Fail })
}

fn cmd_sweep(path: &Path) -> Result<Status> {
    let source = ConfigSource::File(path.to_path_buf());
    let (label, cfg) = load(&source)?;
    let sweep = cfg.sweep.clone().context("config has no [sweep] table")?;
    if cfg.experiment == ExperimentId::AllPresets {
        bail!("all-presets cannot be swept");
    }
    let points = sweep.points()?;
    // check every parameter name before spending time on the runs
    for (name, v) in &points[0] {
        cfg.clone().set(name, *v)?;
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(sweep.threads.unwrap_or(0))
        .build()
        .context("building the sweep worker pool")?;
    let results: Vec<(Vec<(String, f64)>, Result<Outcome>)> = pool.install(|| {
        points
            .par_iter()
            .map(|pt| {
                let mut c = cfg.clone();
                let r = pt.iter().try_for_each(|(n, v)| c.set(n, *v)).and_then(|_| {
                    c.validate()?;
                    run_experiment(&c)
                });
                (pt.clone(), r)
            })
            .collect()
    });

    let mut keys: Vec<String> = Vec::new();
    for (_, r) in &results {
        if let Ok(o) = r {
            for (k, _) in &o.summary {
                if !keys.contains(k) {
                    keys.push(k.clone());
                }
            }
        }
    }
    let mut columns: Vec<String> = points[0].iter().map(|(n, _)| n.clone()).collect();
    columns.extend(["status".to_string(), "error".to_string()]);
    columns.extend(keys.iter().cloned());
    let mut table = Table::new(&columns).meta("experiment", cfg.experiment.name());
    let mut failures = 0;
    for (pt, r) in &results {
        let mut row: Vec<Cell> = pt.iter().map(|(_, v)| Cell::Num(*v)).collect();
        match r {
            Ok(o) => {
                let status = match o.passed {
                    Some(false) => {
                        failures += 1;
                        "fail"
                    }
                    Some(true) => "pass",
                    None => "done",
                };
                row.push(status.into());
                row.push("".into());
                for k in &keys {
                    let v = o.summary.iter().find(|(kk, _)| kk == k).map(|(_, v)| v.clone());
                    row.push(v.unwrap_or_else(|| "".into()));
                }
            }
            Err(e) => {
                failures += 1;
                row.push("error".into());
                row.push(format!("{e:#}").into());
                row.extend(keys.iter().map(|_| Cell::from("")));
            }
        }
        table.push(row);
    }
    let dir = output_root(&cfg).join(&label);
    std::fs::create_dir_all(&dir)?;
    table.write_file(&dir.join("sweep.csv"))?;
    let mut artifacts = vec!["sweep.csv".to_string()];
    if cfg.svg && sweep.param2.is_none() {
        for key in ["l", "gamma"] {
            if let (Some(x), Some(y)) = (table.column(&sweep.param), table.column(key)) {
                let pts: Vec<(f64, f64)> = x.into_iter().zip(y).filter(|p| p.1.is_finite()).collect();
                let chart = svg::Chart::new(&format!("{key} against {}", sweep.param), &sweep.param, key).with(svg::Series::line(key, pts));
                let name = format!("sweep_{key}.svg");
                std::fs::write(dir.join(&name), chart.render())?;
                artifacts.push(name);
            }
        }
    }
    let manifest = json!({
        "label": label,
        "experiment": cfg.experiment.name(),
        "build": env!("HYSLAB_GIT_DESCRIBE"),
        "config": source_text(&source),
        "points": results.len(),
        "failures": failures,
        "artifacts": artifacts,
    });
    std::fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)? + "\n")?;
    println!(
        "{} sweep {label} [{}]: {} points, {failures} failed or errored",
        if failures == 0 { "PASS" } else { "FAIL" },
        cfg.experiment.name(),
        results.len()
    );
    Ok(if failures == 0 { Status::Pass } else { Status::Fail })
}

fn cmd_presets(show: Option<String>) -> Result<Status> {
    match show {
        Some(name) => {
            let p = presets::find(&name).with_context(|| format!("unknown preset `{name}`"))?;
            print!("{}", p.config.trim_start());
        }
        None => {
            for p in presets::PRESETS {
                println!("{:<20} {}", p.name, p.about);
            }
            println!("{:<20} every preset above in one run (experiment = \"all-presets\")", "all-presets");
        }
    }
    Ok(Status::Pass)
}
