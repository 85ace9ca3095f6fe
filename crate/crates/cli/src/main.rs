//! `cbm`: simulate, estimate and verify the condition-based maintenance model.
//!
//! Exit codes: 0 success, 1 verification failure, 2 configuration or input error,
//! 3 estimation infeasible.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use cbm_core::config::{preset, ModelConfig, PRESET_NAMES};
use cbm_core::estimators::{
    am_estimate, invert_f, mle_estimate, Design, EstimateReport, ObservedData, REPORT_CSV_HEADER,
};
use cbm_core::oracle::{verify, write_verification_csv, MIN_SAMPLES};
use cbm_core::simulator::{fmt_time, read_event_log, simulate_seeded, CountSnapshot};
use cbm_core::Error;

#[derive(Parser)]
#[command(name = "cbm", version, about = "Parameter estimation for a three-state system under condition-based maintenance")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate cycles up to the horizon and write the event log and count snapshots.
    Simulate {
        #[command(flatten)]
        config: ConfigArgs,
        /// Event log, one row per cycle.
        #[arg(long)]
        events: PathBuf,
        /// Counts at every cycle end and grid time.
        #[arg(long)]
        snapshots: Option<PathBuf>,
        /// Planned inspection ages per cycle (needed to re-read random schedules).
        #[arg(long)]
        inspections: Option<PathBuf>,
    },
    /// Estimate the rates from counts, from an event log, or from a published preset.
    Estimate {
        #[command(flatten)]
        config: ConfigArgs,
        /// Use published counts and setup (table1 to table4).
        #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(PRESET_NAMES))]
        reproduce: Option<String>,
        #[arg(long = "n-r")]
        n_r: Option<u64>,
        #[arg(long = "n-i")]
        n_i: Option<u64>,
        #[arg(long = "n-f")]
        n_f: Option<u64>,
        /// Observation time of the counts.
        #[arg(long)]
        t: Option<f64>,
        /// Event log written by `simulate`.
        #[arg(long)]
        events: Option<PathBuf>,
        /// Inspection log written by `simulate`.
        #[arg(long)]
        inspections: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = MethodArg::Am)]
        method: MethodArg,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Asymptotic-method estimates along the snapshot grid of one simulated run.
    Convergence {
        #[command(flatten)]
        config: ConfigArgs,
        /// Output file (standard output if absent).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare every closed form with a Monte Carlo estimate.
    Verify {
        #[command(flatten)]
        config: ConfigArgs,
        /// Number of simulated cycles.
        #[arg(long, default_value_t = 1_000_000)]
        samples: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Am,
    Mle,
    Both,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Kv,
}

/// Configuration file plus per-key overrides named after the file's keys.
#[derive(Args)]
struct ConfigArgs {
    /// Configuration file of `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long = "sane.shape")]
    sane_shape: Option<String>,
    #[arg(long = "sane.rate")]
    sane_rate: Option<String>,
    #[arg(long = "damage.rate")]
    damage_rate: Option<String>,
    #[arg(long = "inspection.kind")]
    inspection_kind: Option<String>,
    #[arg(long = "inspection.c")]
    inspection_c: Option<String>,
    #[arg(long = "inspection.h")]
    inspection_h: Option<String>,
    #[arg(long)]
    horizon: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    confidence: Option<String>,
    #[arg(long)]
    grid: Option<String>,
}

impl ConfigArgs {
    fn overrides(&self) -> Vec<(Option<usize>, String, String)> {
        [
            ("sane.shape", &self.sane_shape),
            ("sane.rate", &self.sane_rate),
            ("damage.rate", &self.damage_rate),
            ("inspection.kind", &self.inspection_kind),
            ("inspection.c", &self.inspection_c),
            ("inspection.h", &self.inspection_h),
            ("horizon", &self.horizon),
            ("seed", &self.seed),
            ("confidence", &self.confidence),
            ("grid", &self.grid),
        ]
        .into_iter()
        .filter_map(|(k, v)| v.as_ref().map(|v| (None, k.to_string(), v.clone())))
        .collect()
    }

    fn resolve(&self, base: ModelConfig) -> Result<ModelConfig, Failure> {
        let base = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
                ModelConfig::parse(&text).map_err(Failure::from)?
            }
            None => base,
        };
        base.with_pairs(self.overrides()).map_err(Failure::from)
    }
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(message: String) -> Self {
        Self { code: 2, message }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Degenerate(_)
            | Error::OutOfRange { .. }
            | Error::NonIdentifiable(_)
            | Error::NonConvergence { .. }
            | Error::InconsistentMoments(_) => 3,
            _ => 2,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::input(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(command: Command) -> Result<u8, Failure> {
    match command {
        Command::Simulate {
            config,
            events,
            snapshots,
            inspections,
        } => {
            let cfg = config.resolve(ModelConfig::default())?;
            let seed = require_seed(&cfg)?;
            let traj = simulate_seeded(&cfg.model()?, cfg.horizon, &cfg.grid.times(), seed)?;
            traj.write_event_log(create(&events)?)?;
            if let Some(path) = snapshots {
                traj.write_snapshots(create(&path)?)?;
            }
            if let Some(path) = inspections {
                traj.write_inspection_log(create(&path)?)?;
            }
            Ok(0)
        }
        Command::Estimate {
            config,
            reproduce,
            n_r,
            n_i,
            n_f,
            t,
            events,
            inspections,
            method,
            format,
        } => {
            let (base, preset_counts) = match reproduce.as_deref().map(preset) {
                Some(Some(p)) => (p.config, Some(p.counts)),
                Some(None) => unreachable!("clap restricts the preset names"),
                None => (ModelConfig::default(), None),
            };
            let cfg = config.resolve(base)?;
            let design = Design {
                shape: cfg.shape,
                inspection: cfg.inspection,
            };
            let cycles = match &events {
                Some(path) => {
                    let ev = BufReader::new(open(path)?);
                    let insp = inspections.as_ref().map(|p| open(p).map(BufReader::new)).transpose()?;
                    Some(read_event_log(ev, &cfg.inspection, insp)?)
                }
                None => None,
            };
            let data = cycles.as_deref().map(ObservedData::from_cycles);
            let counts = match (n_r, n_i, n_f, t) {
                (Some(n_r), Some(n_i), Some(n_f), Some(t)) => CountSnapshot { t, n_r, n_i, n_f },
                (None, None, None, None) => match (preset_counts, &data) {
                    (Some(c), _) => c,
                    (None, Some(d)) => d.counts(),
                    (None, None) => {
                        return Err(Failure::input(
                            "give --n-r, --n-i, --n-f and --t, an --events log, or --reproduce".into(),
                        ))
                    }
                },
                _ => return Err(Failure::input("--n-r, --n-i, --n-f and --t go together".into())),
            };
            let mut reports = Vec::new();
            if method != MethodArg::Mle {
                reports.push(am_estimate(&counts, &design, cfg.confidence)?);
            }
            if method != MethodArg::Am {
                let data = data.ok_or_else(|| {
                    Failure::input("maximum likelihood needs an --events log".into())
                })?;
                reports.push(mle_estimate(&data, &design, cfg.confidence)?);
            }
            let mut out = BufWriter::new(io::stdout().lock());
            emit(&mut out, &mut reports, cfg.seed, format)?;
            for r in &reports {
                for w in &r.diagnostics.warnings {
                    eprintln!("warning: {w}");
                }
            }
            Ok(0)
        }
        Command::Convergence { config, out } => {
            let cfg = config.resolve(ModelConfig::default())?;
            let seed = require_seed(&cfg)?;
            let mut grid = cfg.grid.times();
            if grid.is_empty() {
                grid = (1..=100).map(|i| cfg.horizon * i as f64 / 100.0).collect();
            }
            if let Some(&bad) = grid.iter().find(|&&g| g > cfg.horizon) {
                return Err(Failure::input(format!(
                    "grid time {bad} lies beyond the horizon {}",
                    cfg.horizon
                )));
            }
            let traj = simulate_seeded(&cfg.model()?, cfg.horizon, &[], seed)?;
            let design = Design {
                shape: cfg.shape,
                inspection: cfg.inspection,
            };
            let mut w = sink(out.as_deref())?;
            writeln!(w, "t,mu_hat,lambda_hat,mu_lo,mu_hi,lambda_lo,lambda_hi")?;
            for t in grid {
                let counts = traj.counts_at(t)?;
                let row = match am_estimate(&counts, &design, cfg.confidence) {
                    Ok(r) => [
                        r.mu_hat,
                        r.lambda_hat,
                        r.ci_mu.0,
                        r.ci_mu.1,
                        r.ci_lambda.0,
                        r.ci_lambda.1,
                    ]
                    .map(|x| fmt_time(x))
                    .join(","),
                    // μ alone is still identified before the first failure
                    Err(_) if counts.n_r > 0 && counts.n_i > counts.n_r => {
                        match invert_f(counts.n_i as f64 / counts.n_r as f64, cfg.shape, &cfg.inspection) {
                            Ok(root) => format!("{},,,,,", fmt_time(root.x)),
                            Err(_) => ",,,,,".into(),
                        }
                    }
                    Err(_) => ",,,,,".into(),
                };
                writeln!(w, "{},{row}", fmt_time(t))?;
            }
            w.flush()?;
            Ok(0)
        }
        Command::Verify {
            config,
            samples,
            out,
        } => {
            let cfg = config.resolve(ModelConfig::default())?;
            let seed = require_seed(&cfg)?;
            if samples < MIN_SAMPLES {
                return Err(Failure::input(format!("--samples must be at least {MIN_SAMPLES}")));
            }
            let rows = verify(&cfg.model()?, samples, seed)?;
            let mut w = sink(out.as_deref())?;
            write_verification_csv(&mut w, &rows)?;
            w.flush()?;
            let failed: Vec<&str> = rows.iter().filter(|r| !r.pass).map(|r| r.quantity).collect();
            if failed.is_empty() {
                Ok(0)
            } else {
                eprintln!("verification failed for: {}", failed.join(", "));
                Ok(1)
            }
        }
    }
}

fn emit<W: Write>(w: &mut W, reports: &mut [EstimateReport], seed: Option<u64>, format: Format) -> io::Result<()> {
    for r in reports.iter_mut() {
        r.seed = seed;
    }
    match format {
        Format::Csv => {
            writeln!(w, "{REPORT_CSV_HEADER}")?;
            for r in reports.iter() {
                writeln!(w, "{}", r.csv_row())?;
            }
        }
        Format::Kv => {
            for (i, r) in reports.iter().enumerate() {
                if i > 0 {
                    writeln!(w)?;
                }
                write!(w, "{}", r.key_values())?;
            }
        }
    }
    w.flush()
}

fn require_seed(cfg: &ModelConfig) -> Result<u64, Failure> {
    cfg.seed
        .ok_or_else(|| Failure::input("a seed is required (--seed or `seed =` in the config)".into()))
}

fn open(path: &Path) -> Result<File, Failure> {
    File::open(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(create(p)?),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}
