use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};

use lmm_cli::{compare_to_dir, export_plotdata, parse_config, preset_config, read_record, run_to_dir, Resolved};

/// Multiple solutions of semilinear elliptic problems by a local minimax method.
#[derive(Parser)]
#[command(name = "lmm", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run every entry of a config (or preset name) and write the results.
    Run {
        config: String,
        #[arg(short, long, default_value = "out")]
        out: PathBuf,
    },
    /// Run every entry with SD-Armijo, SD-StrongWolfe and CG-StrongWolfe.
    Compare {
        config: String,
        #[arg(short, long, default_value = "out")]
        out: PathBuf,
    },
    /// Write surface and convergence-history CSVs for a stored record.
    Export {
        record: PathBuf,
        #[arg(short, long, default_value = "out")]
        out: PathBuf,
    },
    /// Built-in benchmark plans.
    Presets {
        #[command(subcommand)]
        cmd: PresetCmd,
    },
}

#[derive(Subcommand)]
enum PresetCmd {
    List,
    /// Print a preset as a config file.
    Show { name: String },
}

fn load(config: &str) -> Result<Resolved> {
    let path = Path::new(config);
    if !path.exists() && lmm_cli::presets::preset(config).is_some() {
        return preset_config(config);
    }
    parse_config(path)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("LMM_LOG", "info")).init();
    match real_main() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn real_main() -> Result<bool> {
    match Cli::parse().cmd {
        Cmd::Run { config, out } => {
            let resolved = load(&config)?;
            let summary = run_to_dir(&resolved, &out)?;
            println!("{:<6} {:>8} {:>12} {:>12} {:>6} {:>6}", "label", "status", "energy", "expected", "iters", "evals");
            for s in &summary {
                println!(
                    "{:<6} {:>8} {:>12} {:>12} {:>6} {:>6}",
                    s.label,
                    s.status,
                    s.energy.map_or("-".into(), |e| format!("{e:.4}")),
                    s.expected_energy.map_or("-".into(), |e| format!("{e:.4}")),
                    s.iterations.map_or("-".into(), |e| e.to_string()),
                    s.phi_evals.map_or("-".into(), |e| e.to_string()),
                );
            }
            Ok(summary.iter().all(|s| s.status == "ok"))
        }
        Cmd::Compare { config, out } => {
            let resolved = load(&config)?;
            let report = compare_to_dir(&resolved, &out)?;
            println!("{:<6} {:<15} {:>8} {:>6} {:>6} {:>7} {:>9} {:>12}", "label", "method", "status", "iters", "evals", "solves", "time[s]", "energy");
            for r in &report.rows {
                println!(
                    "{:<6} {:<15} {:>8} {:>6} {:>6} {:>7} {:>9.3} {:>12}",
                    r.solution,
                    r.method,
                    r.status,
                    r.iterations.map_or("-".into(), |e| e.to_string()),
                    r.phi_evals.map_or("-".into(), |e| e.to_string()),
                    r.linear_solves.map_or("-".into(), |e| e.to_string()),
                    r.wall_time_s,
                    r.energy.map_or("-".into(), |e| format!("{e:.4}")),
                );
            }
            Ok(report.rows.iter().all(|r| r.status == "ok"))
        }
        Cmd::Export { record, out } => {
            let (rec, mesh) = read_record(&record)?;
            for p in export_plotdata(&rec, &mesh, &out)? {
                println!("{}", p.display());
            }
            Ok(true)
        }
        Cmd::Presets { cmd: PresetCmd::List } => {
            for p in lmm_cli::presets::presets() {
                println!("{:<22} {:>3} entries  {}", p.name, p.rows.len(), p.description);
            }
            Ok(true)
        }
        Cmd::Presets {
            cmd: PresetCmd::Show { name },
        } => {
            let p = lmm_cli::presets::preset(&name).ok_or_else(|| anyhow::anyhow!("unknown preset `{name}`"))?;
            let file = lmm_cli::ConfigFile {
                problem: Some(p.problem),
                solver: lmm_cli::config::SolverSection {
                    domain: Some(p.domain.clone()),
                    resolution: Some(p.resolution),
                    ..Default::default()
                },
                entries: p.plan(),
                ..Default::default()
            };
            print!("{}", file.to_toml()?);
            Ok(true)
        }
    }
}
