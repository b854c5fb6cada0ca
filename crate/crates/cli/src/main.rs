use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use rodentsim::experiment::{self, ExecutionOptions, Figure};
use rodentsim::io::{self, ComparisonRow, LogFormat, Metadata};
use rodentsim::metrics::{self, Label};
use rodentsim::{Cohort, SimConfig};

/// Environment variable that overrides `simulate --seed`.
const SEED_ENV: &str = "RODENTSIM_SEED";

const TRIALS_FILE: &str = "trials.csv";
const RUNS_FILE: &str = "runs.jsonl";
const CONFIG_FILE: &str = "config.toml";
const QTABLE_FILE: &str = "qtable.json";

#[derive(Parser)]
#[command(name = "rodentsim", version, about = "Artificial rodent training simulator and behavioral similarity metrics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one agent until the success criterion (or the session cap).
    Simulate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run independent executions for a fixed number of sessions.
    Cohort {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        executions: usize,
        #[arg(long)]
        sessions: u32,
        #[arg(long, default_value_t = 0)]
        seed_base: u64,
        #[arg(long)]
        out: PathBuf,
        /// End each execution once it meets the success criterion.
        #[arg(long)]
        stop_on_success: bool,
        /// Use a fresh agent for every session.
        #[arg(long)]
        fresh_per_session: bool,
    },
    /// Pairwise individual distances between the sessions of two logs.
    Compare {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long, default_value_t = metrics::DEFAULT_WINDOW)]
        delta: usize,
        #[arg(long, default_value = "match")]
        distance: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Group distances between sessions; each matched log is one group.
    GroupCompare {
        #[arg(long)]
        logs: String,
        #[arg(long, default_value_t = metrics::DEFAULT_WINDOW)]
        delta: usize,
        #[arg(long, default_value = "match")]
        distance: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Emit the data behind an accuracy-curve or distance heat-map figure.
    Figure {
        #[arg(long, value_parser = ["fig2", "fig3", "fig4"])]
        which: String,
        /// Cohort directory (containing trials.csv) or a trial log file.
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value_t = metrics::DEFAULT_WINDOW)]
        delta: usize,
        #[arg(long, default_value = "match")]
        distance: String,
        /// Sessions for fig2/fig3, comma separated.
        #[arg(long, value_delimiter = ',')]
        sessions: Option<Vec<u32>>,
        /// Also write a JSON copy of every emitted file.
        #[arg(long)]
        json: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Validate a trial log and print a summary; optionally convert it.
    Import {
        #[arg(long)]
        path: PathBuf,
        #[arg(long, value_parser = ["csv", "json"])]
        format: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load_config(path: Option<&Path>) -> Result<SimConfig> {
    match path {
        Some(p) => SimConfig::load(p).with_context(|| format!("loading {}", p.display())),
        None => Ok(SimConfig::default()),
    }
}

fn resolve_seed(flag: u64) -> Result<u64> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .with_context(|| format!("{SEED_ENV}={v:?} is not an integer")),
        Err(_) => Ok(flag),
    }
}

fn md(key: &str, value: impl ToString) -> (String, String) {
    (key.to_string(), value.to_string())
}

fn write_config(out: &Path, config: &SimConfig) -> Result<()> {
    let path = out.join(CONFIG_FILE);
    std::fs::write(&path, config.to_toml_string()?).with_context(|| format!("writing {}", path.display()))
}

fn run_metadata(config: &SimConfig, seeds: &str) -> Result<Metadata> {
    Ok(vec![
        md("seeds", seeds),
        md("agent_config", serde_json::to_string(&config.agent)?),
        md("protocol_config", serde_json::to_string(&config.protocol)?),
    ])
}

fn simulate(config: Option<PathBuf>, seed: u64, out: PathBuf) -> Result<()> {
    let config = load_config(config.as_deref())?;
    let seed = resolve_seed(seed)?;
    std::fs::create_dir_all(&out)?;
    let (run, record) = experiment::simulate(&config, seed)?;
    let cohort = Cohort::new(vec![run.sequence.clone()])?;
    let mut meta = run_metadata(&config, &seed.to_string())?;
    meta.push(md("plan", "until_success"));
    io::write_trial_log_csv(&out.join(TRIALS_FILE), &cohort, &meta)?;
    io::write_qtable_json(&out.join(QTABLE_FILE), &run.qtable)?;
    io::append_run_records(&out.join(RUNS_FILE), std::slice::from_ref(&record))?;
    write_config(&out, &config)?;
    println!(
        "{}",
        serde_json::json!({
            "individual_id": run.sequence.individual_id,
            "seed": seed,
            "sessions": run.sequence.sessions.len(),
            "trained": run.sequence.trained,
            "sessions_to_criterion": run.sequence.sessions_to_criterion,
            "out": out,
        })
    );
    Ok(())
}

fn cohort(
    config: Option<PathBuf>,
    executions: usize,
    sessions: u32,
    seed_base: u64,
    out: PathBuf,
    options: ExecutionOptions,
) -> Result<()> {
    let config = load_config(config.as_deref())?;
    std::fs::create_dir_all(&out)?;
    let (cohort, records) = experiment::run_experiment_executions(&config, sessions, executions, seed_base, options)?;
    let seeds = records.iter().map(|r| r.seed.to_string()).collect::<Vec<_>>().join(" ");
    let mut meta = run_metadata(&config, &seeds)?;
    meta.push(md("plan", serde_json::to_string(&records[0].plan)?));
    io::write_trial_log_csv(&out.join(TRIALS_FILE), &cohort, &meta)?;
    let runs = out.join(RUNS_FILE);
    if runs.exists() {
        std::fs::remove_file(&runs)?;
    }
    io::append_run_records(&runs, &records)?;
    write_config(&out, &config)?;
    println!(
        "{}",
        serde_json::json!({
            "executions": executions,
            "sessions": sessions,
            "seed_base": seed_base,
            "trained": cohort.members.iter().filter(|m| m.trained).count(),
            "out": out,
        })
    );
    Ok(())
}

fn import_any(path: &Path) -> Result<Cohort> {
    io::import_trial_log(path, LogFormat::from_path(path)).with_context(|| format!("importing {}", path.display()))
}

fn compare(a: PathBuf, b: PathBuf, delta: usize, distance: String, out: PathBuf) -> Result<()> {
    let dist = metrics::distance_by_name(&distance)?;
    let ca = import_any(&a)?;
    let cb = import_any(&b)?;
    let mut rows = Vec::new();
    for ma in &ca.members {
        for sa in &ma.sessions {
            for mb in &cb.members {
                for sb in &mb.sessions {
                    let d: f64 = metrics::individual_distance(sa, sb, delta, &dist).with_context(|| {
                        format!(
                            "{} session {} vs {} session {}",
                            ma.individual_id, sa.index, mb.individual_id, sb.index
                        )
                    })?;
                    rows.push(ComparisonRow {
                        a_id: ma.individual_id.clone(),
                        a_session: sa.index,
                        b_id: mb.individual_id.clone(),
                        b_session: sb.index,
                        distance: d,
                    });
                }
            }
        }
    }
    let meta = vec![
        md("delta", delta),
        md("distance", &distance),
        md("a", a.display()),
        md("b", b.display()),
    ];
    io::write_comparison_csv(&out, &rows, &meta)?;
    println!("{}", serde_json::json!({ "pairs": rows.len(), "out": out }));
    Ok(())
}

fn group_compare(pattern: String, delta: usize, distance: String, out: PathBuf) -> Result<()> {
    let dist = metrics::distance_by_name(&distance)?;
    let mut paths: Vec<PathBuf> = glob::glob(&pattern)
        .with_context(|| format!("bad glob {pattern:?}"))?
        .collect::<std::result::Result<_, _>>()?;
    paths.sort();
    if paths.is_empty() {
        bail!("no files match {pattern:?}");
    }
    let mut items = Vec::new();
    for (g, path) in paths.iter().enumerate() {
        let cohort = import_any(path)?;
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| format!("group-{}", g + 1));
        for j in 1..=cohort.max_session_index() {
            let members = cohort.sessions_at(j);
            let series = metrics::group_series::<f64>(&members, delta)
                .with_context(|| format!("{name} session {j}"))?;
            items.push((Label::new(name.clone(), j, g as u32 + 1), series));
        }
    }
    let matrix = metrics::group_distance_matrix(&items, &dist)?;
    let files = paths.iter().map(|p| p.display().to_string()).collect::<Vec<_>>().join(" ");
    let meta = vec![md("delta", delta), md("distance", &distance), md("groups", files)];
    io::write_matrix_csv(&out, &matrix, &meta)?;
    println!("{}", serde_json::json!({ "labels": matrix.len(), "out": out }));
    Ok(())
}

fn figure(
    which: String,
    input: PathBuf,
    delta: usize,
    distance: String,
    sessions: Option<Vec<u32>>,
    json: bool,
    out: PathBuf,
) -> Result<()> {
    let which: Figure = which.parse()?;
    let dist = metrics::distance_by_name(&distance)?;
    let (log, dir) = if input.is_dir() {
        (input.join(TRIALS_FILE), Some(input.clone()))
    } else {
        (input.clone(), input.parent().map(Path::to_path_buf))
    };
    let cohort = import_any(&log)?;
    // Carry the reproduction metadata of the source log forward.
    let mut meta: Metadata = io::read_metadata(&log)?
        .into_iter()
        .filter(|(k, _)| !matches!(k.as_str(), "figure" | "delta" | "distance"))
        .collect();
    meta.push(md("source", log.display()));
    if let Some(dir) = dir.filter(|d| d.join(RUNS_FILE).exists()) {
        let records = io::read_run_records::<f64>(&dir.join(RUNS_FILE))?;
        if !meta.iter().any(|(k, _)| k == "seeds") {
            let seeds = records.iter().map(|r| r.seed.to_string()).collect::<Vec<_>>().join(" ");
            meta.push(md("seeds", seeds));
        }
    }
    std::fs::create_dir_all(&out)?;
    let files = experiment::emit_figure_data_as::<f64, _>(
        &cohort,
        which,
        delta,
        &dist,
        &out,
        sessions.as_deref(),
        &meta,
        json,
    )?;
    println!("{}", serde_json::json!({ "figure": which.as_str(), "files": files }));
    Ok(())
}

fn import(path: PathBuf, format: String, out: Option<PathBuf>) -> Result<()> {
    let format: LogFormat = format.parse()?;
    let cohort = io::import_trial_log(&path, format).with_context(|| format!("importing {}", path.display()))?;
    let members: Vec<_> = cohort
        .members
        .iter()
        .map(|m| {
            serde_json::json!({
                "individual_id": m.individual_id,
                "sessions": m.sessions.len(),
                "trials": m.sessions.iter().map(|s| s.len()).sum::<usize>(),
                "accuracies": m.accuracies::<f64>().unwrap_or_default(),
                "trained": m.trained,
                "sessions_to_criterion": m.sessions_to_criterion,
            })
        })
        .collect();
    if let Some(out) = &out {
        io::export_trial_log(out, LogFormat::from_path(out), &cohort, &[md("source", path.display())])?;
    }
    println!("{}", serde_json::to_string_pretty(&serde_json::json!({ "members": members }))?);
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Simulate { config, seed, out } => simulate(config, seed, out),
        Command::Cohort {
            config,
            executions,
            sessions,
            seed_base,
            out,
            stop_on_success,
            fresh_per_session,
        } => cohort(
            config,
            executions,
            sessions,
            seed_base,
            out,
            ExecutionOptions {
                stop_on_success,
                fresh_per_session,
            },
        ),
        Command::Compare {
            a,
            b,
            delta,
            distance,
            out,
        } => compare(a, b, delta, distance, out),
        Command::GroupCompare {
            logs,
            delta,
            distance,
            out,
        } => group_compare(logs, delta, distance, out),
        Command::Figure {
            which,
            input,
            delta,
            distance,
            sessions,
            json,
            out,
        } => figure(which, input, delta, distance, sessions, json, out),
        Command::Import { path, format, out } => import(path, format, out),
    }
}
