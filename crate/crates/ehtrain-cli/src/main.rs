//! `ehtrain` — batch experiments for energy-harvesting training schedules.
//!
//! Subcommands: `sweep` (mean rate per policy over block lengths),
//! `fixed-nt` (rate loss of pinned training periods), `validate`
//! (closed form vs Monte Carlo), `solve` (one policy on one profile).
//! Exit codes: 0 success, 1 validation failure, 2 configuration/IO error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use ehtrain::sim::{
    run_fixed_nt_sweep, run_policy_sweep, solve_single, validate_closed_form, ExperimentConfig,
    PolicyConfig,
};
use ehtrain::EnergyProfile;

#[derive(Parser)]
#[command(
    name = "ehtrain",
    version,
    about = "Training-schedule experiments for energy-harvesting links"
)]
struct Cli {
    /// Print the built-in experiment configuration as JSON and exit.
    #[arg(long, exclusive = true)]
    dump_defaults: bool,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Args)]
struct CommonOpts {
    /// Experiment configuration file (JSON); built-in defaults when omitted.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Override the configured RNG seed.
    #[arg(long)]
    seed: Option<u64>,

    /// Override the configured number of trials.
    #[arg(long)]
    trials: Option<usize>,

    /// Worker threads (0 = one per core). Output is identical for any value.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
}

impl CommonOpts {
    fn load_config(&self) -> Result<ExperimentConfig, String> {
        let mut config = match &self.config {
            Some(path) => ExperimentConfig::load(path).map_err(|e| e.to_string())?,
            None => ExperimentConfig::default(),
        };
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        if let Some(trials) = self.trials {
            config.trials = trials;
        }
        config.validate().map_err(|e| e.to_string())?;
        Ok(config)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Mean rate of every configured policy across block lengths.
    Sweep {
        #[command(flatten)]
        common: CommonOpts,

        /// CSV destination (falls back to the config's output_path, then stdout).
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,

        /// Also write a per-trial JSON sidecar.
        #[arg(long, value_name = "FILE")]
        sidecar: Option<PathBuf>,
    },

    /// Rate loss from pinning the training period, at one block length.
    FixedNt {
        #[command(flatten)]
        common: CommonOpts,

        /// Block length to study.
        #[arg(long, default_value_t = 1250)]
        n: usize,

        /// Training periods: comma-separated values and a-b ranges
        /// (e.g. "1-400,450,500"). Default: 1-400, sparse checkpoints, N-1.
        #[arg(long, value_name = "LIST")]
        nt_values: Option<String>,

        /// CSV destination (stdout when omitted).
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,

        /// JSON report destination (includes the low-loss intervals).
        #[arg(long, value_name = "FILE")]
        report: Option<PathBuf>,
    },

    /// Compare the closed-form rate against Monte Carlo sampling.
    Validate {
        #[command(flatten)]
        common: CommonOpts,

        #[arg(long, default_value_t = 20)]
        cases: usize,

        /// Monte Carlo samples per case.
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,

        /// JSON report destination (summary always goes to stdout).
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },

    /// Run one policy on one profile file and print the schedule.
    Solve {
        /// Profile file: JSON {"energies": [...]} or CSV with an `energy` column.
        #[arg(long, value_name = "FILE")]
        profile: PathBuf,

        #[arg(long, value_enum, default_value_t = PolicyArg::Optimal)]
        policy: PolicyArg,

        /// Training slots for --policy fixed-slots.
        #[arg(long)]
        slots: Option<usize>,

        /// Block fraction for --policy fixed-ratio.
        #[arg(long)]
        ratio: Option<f64>,

        /// Carry-over grid points for --policy optimal.
        #[arg(long)]
        ete_grid: Option<usize>,

        /// Channel parameters are taken from this config file if given.
        #[arg(long, value_name = "FILE")]
        config: Option<PathBuf>,

        /// JSON report destination (stdout when omitted).
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PolicyArg {
    Optimal,
    SubDwfRate,
    SubConstRate,
    FixedSlots,
    FixedRatio,
    OneSlot,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.dump_defaults {
        emit(&format!("{}\n", ExperimentConfig::dump_defaults()));
        return ExitCode::SUCCESS;
    }
    let Some(command) = cli.command else {
        eprintln!("error: a subcommand is required (try --help)");
        return ExitCode::from(2);
    };
    match run(command) {
        Ok(code) => code,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command) -> Result<ExitCode, String> {
    match command {
        Command::Sweep {
            common,
            out,
            sidecar,
        } => {
            let config = common.load_config()?;
            let result = run_policy_sweep(&config, common.jobs).map_err(|e| e.to_string())?;
            let csv = result.to_csv();
            let destination = out.or_else(|| config.output_path.clone().map(PathBuf::from));
            write_or_print(destination.as_deref(), &csv)?;
            if let Some(path) = sidecar {
                write_file(&path, &result.to_sidecar_json())?;
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::FixedNt {
            common,
            n,
            nt_values,
            out,
            report,
        } => {
            let config = common.load_config()?;
            let grid = match nt_values {
                Some(spec) => Some(parse_nt_list(&spec)?),
                None => None,
            };
            let result = run_fixed_nt_sweep(&config, n, grid.as_deref(), common.jobs)
                .map_err(|e| e.to_string())?;
            write_or_print(out.as_deref(), &result.to_csv())?;
            if let Some(path) = report {
                write_file(&path, &result.to_json())?;
            }
            eprintln!(
                "optimal mean rate {} bits/slot over {} trials",
                result.optimal_mean, result.trials
            );
            for (label, intervals) in [
                ("<=5%", &result.five_pct_intervals),
                ("<=10%", &result.ten_pct_intervals),
            ] {
                let rendered: Vec<String> = intervals
                    .iter()
                    .map(|(a, b)| format!("[{a}, {b}]"))
                    .collect();
                eprintln!("gap {label}: {}", rendered.join(" "));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Validate {
            common,
            cases,
            samples,
            out,
        } => {
            let config = common.load_config()?;
            let report = validate_closed_form(&config, cases, samples, common.jobs)
                .map_err(|e| e.to_string())?;
            emit(&report.human_summary());
            if let Some(path) = out {
                write_file(&path, &report.to_json())?;
            }
            Ok(if report.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
        Command::Solve {
            profile,
            policy,
            slots,
            ratio,
            ete_grid,
            config,
            out,
        } => {
            let experiment = match &config {
                Some(path) => ExperimentConfig::load(path).map_err(|e| e.to_string())?,
                None => ExperimentConfig::default(),
            };
            let params = experiment.channel_params().map_err(|e| e.to_string())?;
            let profile = EnergyProfile::load(&profile).map_err(|e| e.to_string())?;
            let policy = build_policy(policy, slots, ratio, ete_grid)?;
            let report =
                solve_single(&profile, &params, &policy).map_err(|e| e.to_string())?;
            match out {
                Some(path) => {
                    write_file(&path, &report.to_json())?;
                    emit(&report.human_summary());
                }
                None => emit(&format!("{}\n", report.to_json())),
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn build_policy(
    policy: PolicyArg,
    slots: Option<usize>,
    ratio: Option<f64>,
    ete_grid: Option<usize>,
) -> Result<PolicyConfig, String> {
    Ok(match policy {
        PolicyArg::Optimal => PolicyConfig::Optimal {
            ete_grid_points: ete_grid.unwrap_or(ehtrain::policies::DEFAULT_ETE_GRID),
        },
        PolicyArg::SubDwfRate => PolicyConfig::SubDwfRate {
            root_tol: ehtrain::policies::DEFAULT_ROOT_TOL,
        },
        PolicyArg::SubConstRate => PolicyConfig::SubConstRate {
            root_tol: ehtrain::policies::DEFAULT_ROOT_TOL,
        },
        PolicyArg::FixedSlots => PolicyConfig::FixedSlots {
            slots: slots.ok_or("--policy fixed-slots requires --slots")?,
        },
        PolicyArg::FixedRatio => PolicyConfig::FixedRatio {
            ratio: ratio.ok_or("--policy fixed-ratio requires --ratio")?,
        },
        PolicyArg::OneSlot => PolicyConfig::OneSlot,
    })
}

/// Parse "1-400,450,500" into a sorted list of training periods.
fn parse_nt_list(spec: &str) -> Result<Vec<usize>, String> {
    let mut values = Vec::new();
    for part in spec.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        match part.split_once('-') {
            Some((a, b)) => {
                let start: usize = a
                    .trim()
                    .parse()
                    .map_err(|_| format!("bad range start in '{part}'"))?;
                let end: usize = b
                    .trim()
                    .parse()
                    .map_err(|_| format!("bad range end in '{part}'"))?;
                if end < start {
                    return Err(format!("empty range '{part}'"));
                }
                values.extend(start..=end);
            }
            None => values.push(
                part.parse()
                    .map_err(|_| format!("bad training period '{part}'"))?,
            ),
        }
    }
    if values.is_empty() {
        return Err("no training periods given".into());
    }
    Ok(values)
}

fn write_file(path: &Path, contents: &str) -> Result<(), String> {
    std::fs::write(path, contents).map_err(|e| format!("writing {}: {e}", path.display()))
}

fn write_or_print(path: Option<&Path>, contents: &str) -> Result<(), String> {
    match path {
        Some(path) => write_file(path, contents),
        None => {
            emit(contents);
            Ok(())
        }
    }
}

/// Print to stdout, exiting quietly if the reader (e.g. `head`) hung up.
fn emit(text: &str) {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    if let Err(e) = out.write_all(text.as_bytes()).and_then(|()| out.flush()) {
        if e.kind() == std::io::ErrorKind::BrokenPipe {
            std::process::exit(0);
        }
        eprintln!("error: writing to stdout: {e}");
        std::process::exit(2);
    }
}
