use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dnls_harness::config::{parse_config, ExperimentConfig};
use dnls_harness::error::{HarnessError, Result};
use dnls_harness::{io, post, presets, run, studies};
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "dnls", version, about = "Damped driven NLS experiments")]
struct Cli {
    /// Config document (flat dotted keys).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Preset applied before the config keys.
    #[arg(long, global = true)]
    preset: Option<String>,
    /// Output directory; overrides `outputs.dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Concurrent sweep points.
    #[arg(long, global = true, default_value_t = 1)]
    workers: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate, analyse and write a run directory.
    Simulate,
    /// Spatial envelope fits on a run.
    FitSpatial {
        /// Run directory written by `simulate`
        #[arg(long)]
        run: PathBuf,
        /// gaussian, linear-abs, quadratic-abs; all when omitted.
        #[arg(long)]
        family: Option<String>,
        /// Snapshot time; defaults to `analysis.fit_time`.
        #[arg(long)]
        time: Option<f64>,
    },
    /// Temporal envelope fit of the center density peaks of a run.
    FitTemporal {
        /// Run directory written by `simulate`
        #[arg(long)]
        run: PathBuf,
    },
    /// Locate and characterize the first rogue-wave event of a run.
    DetectEvent {
        /// Run directory written by `simulate`
        #[arg(long)]
        run: PathBuf,
    },
    /// Mass-balance residuals of a run.
    VerifyBalance {
        /// Run directory written by `simulate`
        #[arg(long)]
        run: PathBuf,
    },
    /// Integrability of the weighted driver for several exponents.
    VerifyAdmissibility {
        #[arg(long, default_value_t = post::ADMISSIBILITY_HORIZON)]
        horizon: f64,
    },
    /// Error of a manufactured-solution run.
    MmsStudy,
    /// Manufactured-solution errors over a list of degrees.
    ConvergenceStudy {
        /// Comma-separated polynomial degrees
        #[arg(long, value_delimiter = ',')]
        degrees: Option<Vec<usize>>,
    },
    /// Cartesian parameter sweep; axes are arrays under `[sweep]`.
    Sweep,
    /// Re-render the plots of a run.
    Plot {
        /// Run directory written by `simulate`
        #[arg(long)]
        run: PathBuf,
    },
}

fn load_config(cli: &Cli, default_preset: Option<&str>) -> Result<ExperimentConfig> {
    let text = match &cli.config {
        Some(p) => io::read_text(p)?,
        None => String::new(),
    };
    let preset = cli.preset.as_deref().or(if cli.config.is_none() { default_preset } else { None });
    let mut cfg = parse_config(&text, preset)?;
    if let Some(out) = &cli.out {
        cfg.outputs.dir = out.clone();
    }
    Ok(cfg)
}

fn write_report(cli: &Cli, name: &str, report: &Value) -> Result<()> {
    let body = serde_json::to_string_pretty(report).map_err(|e| HarnessError::data(name, e.to_string()))?;
    println!("{body}");
    if let Some(dir) = &cli.out {
        std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
        let path = dir.join(name);
        std::fs::write(&path, body).map_err(|e| HarnessError::io(&path, e))?;
    }
    Ok(())
}

fn replot(dir: &Path) -> Result<Value> {
    let loaded = run::load_run(dir)?;
    let diagnostics = run::diagnose(&loaded.config, &loaded.grid, &loaded.params, &loaded.trajectory);
    let outcome = run::RunOutcome {
        config: loaded.config,
        grid: loaded.grid,
        params: loaded.params,
        trajectory: loaded.trajectory,
        diagnostics,
        wall_time: 0.0,
    };
    let out_dir = dir.join("replot");
    let mut cfg = outcome.config.clone();
    cfg.outputs.write_snapshots = false;
    cfg.outputs.plots = true;
    let outcome = run::RunOutcome { config: cfg, ..outcome };
    let rec = run::persist(&outcome, &out_dir)?;
    Ok(json!({"dir": rec.dir, "files": rec.files}))
}

fn dispatch(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Simulate => {
            let cfg = load_config(cli, None)?;
            let rec = run::run_experiment(&cfg)?;
            println!(
                "{}",
                json!({"dir": rec.dir, "status": rec.status, "config_hash": rec.config_hash, "wall_time_s": rec.wall_time, "files": rec.files.len()})
            );
            Ok(())
        }
        Command::FitSpatial { run: dir, family, time } => {
            let loaded = run::load_run(dir)?;
            let families = match family {
                Some(f) => vec![post::parse_family(f)?],
                None => run::SPATIAL_FAMILIES.to_vec(),
            };
            write_report(cli, "fit_spatial.json", &post::fit_spatial(&loaded, &families, *time)?)
        }
        Command::FitTemporal { run: dir } => write_report(cli, "fit_temporal.json", &post::fit_temporal(&run::load_run(dir)?)?),
        Command::DetectEvent { run: dir } => write_report(cli, "event.json", &post::detect_event(&run::load_run(dir)?)?),
        Command::VerifyBalance { run: dir } => write_report(cli, "balance.json", &post::verify_balance(&run::load_run(dir)?)?),
        Command::VerifyAdmissibility { horizon } => {
            let cfg = load_config(cli, None)?;
            write_report(cli, "admissibility.json", &post::verify_admissibility(&cfg, *horizon)?)
        }
        Command::MmsStudy => {
            let cfg = load_config(cli, Some("mms-gaussian"))?;
            let rep = studies::mms_study(&cfg)?;
            write_report(cli, "mms.json", &studies::mms_table_json(&[rep]))
        }
        Command::ConvergenceStudy { degrees } => {
            let cfg = load_config(cli, Some("mms-soliton"))?;
            let ns = degrees.clone().unwrap_or_else(|| studies::CONVERGENCE_DEGREES.to_vec());
            let rows = studies::convergence_study(&cfg, &ns)?;
            write_report(cli, "convergence.json", &studies::mms_table_json(&rows))
        }
        Command::Sweep => {
            let path = cli.config.as_ref().ok_or_else(|| HarnessError::config("--config", "a sweep document is required"))?;
            let spec = studies::parse_sweep(&io::read_text(path)?, cli.preset.as_deref())?;
            let root = cli.out.clone().unwrap_or_else(|| PathBuf::from("runs/sweep"));
            let points = studies::run_sweep(&spec, &root, cli.workers, run::run_experiment)?;
            let failed = points.iter().filter(|p| p.result.is_err()).count();
            println!("{}", json!({"root": root, "points": points.len(), "failed": failed}));
            Ok(())
        }
        Command::Plot { run: dir } => {
            let rep = replot(dir)?;
            println!("{rep}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(p) = &cli.preset {
        if !presets::PRESET_NAMES.contains(&p.as_str()) {
            eprintln!("error: unknown preset `{p}`; known presets: {}", presets::PRESET_NAMES.join(", "));
            return ExitCode::from(2);
        }
    }
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
