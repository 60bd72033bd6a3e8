use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use vortex_entanglement::io::{apply_set, config_from_value, load_config, run_and_write};

#[derive(Parser)]
#[command(name = "vortex-ent", version, about = "Entanglement of Raman-generated vortex fields in a Λ medium")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Fields, correlations and V along the medium
    Propagate(Flags),
    /// V on a grid of up to three parameters
    Sweep(Flags),
    /// Minimize V over a parameter box
    Optimize(Flags),
    /// Radial map across a Laguerre–Gaussian input
    Vortexmap(Flags),
    /// Closed-form approximations
    Analytic(Flags),
}

#[derive(Args)]
struct Flags {
    /// JSON scenario file (a previous JSON result is accepted too)
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a configuration key, e.g. `--set delta=1e-3` or `--set params.alpha=100`
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    /// Worker threads (default: all cores)
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Fmt>,
}

#[derive(ValueEnum, Clone, Copy)]
enum Mode {
    Full,
    Stable,
}

#[derive(ValueEnum, Clone, Copy)]
enum Fmt {
    Csv,
    Json,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, flags) = match cli.command {
        Cmd::Propagate(f) => ("propagate", f),
        Cmd::Sweep(f) => ("sweep", f),
        Cmd::Optimize(f) => ("optimize", f),
        Cmd::Vortexmap(f) => ("vortexmap", f),
        Cmd::Analytic(f) => ("analytic", f),
    };
    match run(name, flags) {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("{}", json!({ "command": name, "error": msg }));
            ExitCode::FAILURE
        }
    }
}

fn run(name: &str, flags: Flags) -> Result<(), String> {
    let mut doc = match &flags.config {
        Some(p) => load_config(p).map_err(|e| e.to_string())?,
        None => json!({}),
    };
    doc["command"] = Value::String(name.to_string());
    for s in &flags.set {
        apply_set(&mut doc, s).map_err(|e| e.to_string())?;
    }
    if let Some(m) = flags.mode {
        doc["mode"] = json!(match m {
            Mode::Full => "full",
            Mode::Stable => "stable",
        });
    }
    if let Some(w) = flags.workers {
        doc["workers"] = json!(w);
    }
    if let Some(f) = flags.format {
        doc["format"] = json!(match f {
            Fmt::Csv => "csv",
            Fmt::Json => "json",
        });
    }
    if let Some(o) = &flags.out {
        doc["output_path"] = json!(o);
    }
    let cfg = config_from_value(doc).map_err(|e| e.to_string())?;
    let mut stdout = std::io::stdout().lock();
    run_and_write(&cfg, &mut stdout).map_err(|e| e.to_string())?;
    Ok(())
}
