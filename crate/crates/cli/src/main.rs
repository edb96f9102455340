use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use stccpm::experiments::{self, ExperimentConfig, ExperimentKind, Outcome};

/// Monte Carlo experiments for space-time coded CPM.
#[derive(Parser, Debug)]
#[command(name = "stccpm", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// BER versus Eb/N0.
    Ber(RunArgs),
    /// BER over the initial-phase difference of a two-antenna code.
    Sweep1d(RunArgs),
    /// BER over (theta1, theta2) of a three-antenna code.
    Sweep2d(RunArgs),
    /// Per-antenna power spectral densities.
    Psd(RunArgs),
    /// Block orthogonality check; exits with 3 when it fails.
    Ortho(RunArgs),
}

#[derive(Args, Debug)]
struct RunArgs {
    /// TOML file with the experiment configuration.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in configuration.
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV; multi-run presets append the run label to the file stem.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (defaults to all cores).
    #[arg(long)]
    threads: Option<usize>,
}

impl Command {
    fn parts(&self) -> (ExperimentKind, &RunArgs) {
        match self {
            Command::Ber(a) => (ExperimentKind::BerSweep, a),
            Command::Sweep1d(a) => (ExperimentKind::PhaseSweep1d, a),
            Command::Sweep2d(a) => (ExperimentKind::PhaseSweep2d, a),
            Command::Psd(a) => (ExperimentKind::PsdReport, a),
            Command::Ortho(a) => (ExperimentKind::OrthoCheck, a),
        }
    }
}

/// Problems in what the user asked for, reported with exit code 2.
#[derive(Debug)]
struct ConfigError(String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn config_err(msg: impl Into<String>) -> anyhow::Error {
    ConfigError(msg.into()).into()
}

fn load_runs(kind: ExperimentKind, args: &RunArgs) -> Result<Vec<ExperimentConfig>> {
    let mut runs = match (&args.config, &args.preset) {
        (Some(path), None) => {
            let text = fs::read_to_string(path)
                .map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
            let cfg: ExperimentConfig = toml::from_str(&text)
                .map_err(|e| config_err(format!("{}: {e}", path.display())))?;
            vec![cfg]
        }
        (None, Some(name)) => experiments::preset(name).map_err(|e| config_err(e.to_string()))?,
        _ => return Err(config_err("exactly one of --config or --preset is required")),
    };
    let multi = runs.len() > 1;
    for cfg in &mut runs {
        if cfg.experiment != kind {
            return Err(config_err(format!(
                "configuration describes {}, but the subcommand runs {kind}",
                cfg.experiment
            )));
        }
        if let Some(seed) = args.seed {
            cfg.seed = seed;
        }
        let base = args
            .out
            .clone()
            .or_else(|| cfg.output_path.as_ref().map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(format!("{}.csv", args.preset.as_deref().unwrap_or(&kind.to_string()))));
        let path = match (&cfg.label, multi) {
            (Some(label), true) => with_label(&base, label),
            _ => base,
        };
        cfg.output_path = Some(path.to_string_lossy().into_owned());
        cfg.validate().map_err(|e| config_err(e.to_string()))?;
    }
    Ok(runs)
}

fn with_label(path: &Path, label: &str) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    let ext = path.extension().and_then(|s| s.to_str()).unwrap_or("csv");
    path.with_file_name(format!("{stem}_{label}.{ext}"))
}

fn headline(outcome: &Outcome) -> String {
    match outcome {
        Outcome::Ber(records) => records
            .iter()
            .map(|r| format!("{} dB: {:.3e}", r.snr_db, r.ber))
            .collect::<Vec<_>>()
            .join(", "),
        Outcome::Sweep1d(points) => match experiments::summarize_1d(points) {
            Some(s) => format!("argmin {:.3} (BER {:.3e}), second minimum {:.3}", s.argmin, s.min_ber, s.second_argmin),
            None => "empty sweep".into(),
        },
        Outcome::Sweep2d(points) => {
            let minima = experiments::local_minima_2d(points);
            let best: Vec<String> =
                minima.iter().take(6).map(|p| format!("({:.2}, {:.2})", p.theta1, p.theta2)).collect();
            format!("{} local minima, best {}", minima.len(), best.join(" "))
        }
        Outcome::Psd(r) => format!(
            "centroid shifts {:?}, -30 dB expansion {:.4}",
            r.measured_shifts, r.expansion_ratio
        ),
        Outcome::Ortho(r) => format!(
            "{} blocks, max off-diagonal {:.3e}, max diagonal deviation {:.3e}: {}",
            r.n_blocks,
            r.max_off_diagonal,
            r.max_diagonal_deviation,
            if r.pass { "PASS" } else { "FAIL" }
        ),
    }
}

/// Returns whether every orthogonality check passed.
fn execute(cli: Cli) -> Result<bool> {
    let (kind, args) = cli.command.parts();
    let runs = load_runs(kind, args)?;
    if let Some(n) = args.threads {
        if n == 0 {
            return Err(config_err("--threads must be positive"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    let mut all_pass = true;
    for cfg in &runs {
        let outcome = experiments::run(cfg)?;
        let path = PathBuf::from(cfg.output_path.as_deref().unwrap_or("out.csv"));
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        }
        fs::write(&path, experiments::render_csv(cfg, &outcome))
            .with_context(|| format!("writing {}", path.display()))?;
        let sidecar = path.with_extension("json");
        fs::write(&sidecar, experiments::render_sidecar(cfg, &outcome))
            .with_context(|| format!("writing {}", sidecar.display()))?;
        println!("{}: {}", path.display(), headline(&outcome));
        if let Outcome::Ortho(r) = &outcome {
            all_pass &= r.pass;
        }
    }
    Ok(all_pass)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(3),
        Err(e) if e.downcast_ref::<ConfigError>().is_some() => {
            eprintln!("configuration error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
