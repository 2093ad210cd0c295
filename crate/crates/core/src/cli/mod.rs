//! Command-line front end.
//!
//! Chain configuration is a JSON document:
//!
//! ```json
//! {
//!   "repeaters": 5,
//!   "honest_left": 2,
//!   "honest_right": 2,
//!   "links": [
//!     {"type": "depolarizing", "q": 0.03},
//!     {"type": "explicit", "probs": [0.97, 0.01, 0.01, 0.01]},
//!     ...
//!   ],
//!   "p_star_override": 0.05
//! }
//! ```
//!
//! `links` needs `repeaters + 1` entries; explicit `probs` are indexed
//! `(bt, ph) = (0,0), (0,1), (1,0), (1,1)` and must sum to 1 within 1e-9.
//! Without `--config` the default chain is 5 repeaters with `q = 0.03` on
//! every link.
//!
//! Exit codes: 0 success, 1 validation error, 2 verification failure.

pub mod config;
pub mod sweep;
pub mod table;
pub mod verify;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::bell::{BellSymbol, BellWord};
use crate::error::{out_of_range, Error, Result};
use crate::keyrate::{
    bb84_nu, LeakModel, DEFAULT_EC_FACTOR, DEFAULT_EPSILON, DEFAULT_SAMPLE_FRACTION,
};
use crate::montecarlo::{simulate_e91, verify_concentration, RateSettings, TrialConfig};
use crate::noise::ChainSpec;
use crate::sampling::{delta_for_epsilon, delta_prime, epsilon_ledger, EpsilonLedger};

use config::ChainConfigFile;
use sweep::{Axis, RateOptions, PRESET_NOISE_HONEST, PRESET_Q, PRESET_REPEATERS};
pub use verify::Fault;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_VERIFY_FAILED: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "chainqkd", version, about = "Finite-key rates for QKD over partially trusted repeater chains")]
pub struct Cli {
    /// Chain configuration (JSON).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, global = true, default_value_t = DEFAULT_EPSILON)]
    pub epsilon: f64,
    /// Test-sample size as a fraction of N.
    #[arg(long, global = true, default_value_t = DEFAULT_SAMPLE_FRACTION)]
    pub m_fraction: f64,
    #[arg(long, global = true, default_value_t = DEFAULT_EC_FACTOR)]
    pub ec_factor: f64,
    /// Charge error-correction leakage on all N signals.
    #[arg(long, global = true)]
    pub strict_leak: bool,
    /// Honest-repeater counts, comma separated (balanced left/right split).
    #[arg(long, global = true, value_delimiter = ',')]
    pub honest: Option<Vec<usize>>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct AxisArgs {
    #[arg(long)]
    pub from: Option<f64>,
    #[arg(long)]
    pub to: Option<f64>,
    #[arg(long)]
    pub steps: Option<usize>,
    /// Explicit sweep values, comma separated (overrides the range).
    #[arg(long, value_delimiter = ',', conflicts_with_all = ["from", "to", "steps"])]
    pub values: Option<Vec<f64>>,
}

impl AxisArgs {
    fn axis(&self, from: f64, to: f64, steps: usize) -> Axis {
        match &self.values {
            Some(v) => Axis::Values(v.clone()),
            None => Axis::Range {
                from: self.from.unwrap_or(from),
                to: self.to.unwrap_or(to),
                steps: self.steps.unwrap_or(steps),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepVar {
    /// Number of signals, log-spaced.
    N,
    /// Observed X-basis noise.
    Qx,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InjectWord {
    /// Fixed word with phase-error weight 1/2.
    WorstCase,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Observed noise and p* against link noise q (CSV).
    Noise {
        #[command(flatten)]
        axis: AxisArgs,
    },
    /// Finite-key rate against N or observed noise (CSV).
    RateFinite {
        #[arg(long, value_enum, default_value = "n")]
        sweep: SweepVar,
        #[command(flatten)]
        axis: AxisArgs,
        /// N for the observed-noise sweep.
        #[arg(long, default_value_t = 10_000_000)]
        rounds: u64,
    },
    /// Asymptotic rate against observed noise (CSV).
    RateAsymptotic {
        #[command(flatten)]
        axis: AxisArgs,
    },
    /// Sampling deviations and the epsilon ledger (JSON).
    Bounds {
        #[arg(long, default_value_t = 10_000_000)]
        rounds: u64,
    },
    /// One simulated protocol run (JSON).
    Simulate {
        #[arg(long, default_value_t = 1_000_000)]
        rounds: u64,
    },
    /// Monte Carlo check of the sampling and Hoeffding bounds (JSON).
    McVerify {
        #[arg(long, default_value_t = 10_000)]
        rounds: u64,
        /// Test-sample size; defaults to `m-fraction` of the rounds.
        #[arg(long)]
        sample: Option<u64>,
        #[arg(long, default_value_t = 1_000)]
        trials: u64,
        #[arg(long, value_enum)]
        inject: Option<InjectWord>,
    },
    /// Built-in self checks.
    Verify {
        /// Corrupt one component to confirm the checks catch it.
        #[arg(long, value_enum)]
        inject_fault: Option<Fault>,
    },
}

/// Text produced by a command and whether a verification failed.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub output: String,
    pub verification_failed: bool,
}

impl Outcome {
    fn ok(output: String) -> Self {
        Outcome {
            output,
            verification_failed: false,
        }
    }

    pub fn exit_code(&self) -> i32 {
        if self.verification_failed {
            EXIT_VERIFY_FAILED
        } else {
            EXIT_OK
        }
    }
}

#[derive(Serialize)]
struct BoundsReport {
    rounds: u64,
    sample: u64,
    delta: f64,
    delta_prime: f64,
    bb84_nu: f64,
    ledger: EpsilonLedger,
}

impl Cli {
    fn load_config(&self) -> Result<(ChainConfigFile, bool)> {
        match &self.config {
            Some(path) => Ok((ChainConfigFile::load(path)?, true)),
            None => Ok((ChainConfigFile::preset(PRESET_REPEATERS, PRESET_Q), false)),
        }
    }

    fn leak(&self) -> LeakModel {
        if self.strict_leak {
            LeakModel::Strict
        } else {
            LeakModel::KeyRounds
        }
    }

    fn rate_options(&self) -> RateOptions {
        RateOptions {
            epsilon: self.epsilon,
            m_fraction: self.m_fraction,
            ec_factor: self.ec_factor,
            leak: self.leak(),
        }
    }

    fn sample_for(&self, rounds: u64) -> Result<u64> {
        if !(self.m_fraction > 0.0 && self.m_fraction <= 0.5) {
            return Err(out_of_range("m-fraction", self.m_fraction, "must lie in (0, 1/2]"));
        }
        Ok((self.m_fraction * rounds as f64).round() as u64)
    }

    /// The single chain used by simulations.
    fn single_chain(&self, cfg: &ChainConfigFile, from_file: bool) -> Result<ChainSpec> {
        match self.honest.as_deref() {
            Some([h]) => ChainSpec::balanced(cfg.repeaters, *h, &cfg.link_noise()?),
            Some(_) => Err(Error::Config("simulation takes a single --honest value".into())),
            None if from_file => cfg.chain(),
            None => ChainSpec::balanced(cfg.repeaters, 4, &cfg.link_noise()?),
        }
    }

    fn trial_config(&self, cfg: &ChainConfigFile, from_file: bool, rounds: u64, sample: u64, trials: u64) -> Result<TrialConfig> {
        let spec = self.single_chain(cfg, from_file)?;
        Ok(TrialConfig::new(spec, rounds, sample, self.seed, trials)?.with_rate(RateSettings {
            epsilon: self.epsilon,
            ec_factor: self.ec_factor,
            leak: self.leak(),
            p_star_override: cfg.p_star_override,
        }))
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::Config(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// Runs one parsed command and returns its output text.
pub fn run(cli: &Cli) -> Result<Outcome> {
    match &cli.command {
        Command::Noise { axis } => {
            let (cfg, _) = cli.load_config()?;
            let honest: Vec<usize> = match &cli.honest {
                Some(h) => h.clone(),
                None => PRESET_NOISE_HONEST.iter().copied().filter(|&h| h <= cfg.repeaters).collect(),
            };
            let qs = axis.axis(0.0, 0.5, 51).points(false)?;
            Ok(Outcome::ok(sweep::cmd_noise(&cfg, &honest, &qs)?.to_csv()))
        }
        Command::RateFinite { sweep: var, axis, rounds } => {
            let (cfg, from_file) = cli.load_config()?;
            let curves = sweep::build_curves(&cfg, from_file, cli.honest.as_deref())?;
            let opts = cli.rate_options();
            let table = match var {
                SweepVar::N => {
                    let ns = axis
                        .axis(1e5, 1e10, 51)
                        .points(true)?
                        .into_iter()
                        .map(|n| {
                            if n.is_finite() && n >= 1.0 {
                                Ok(n.round() as u64)
                            } else {
                                Err(out_of_range("N", n, "must be at least 1"))
                            }
                        })
                        .collect::<Result<Vec<_>>>()?;
                    sweep::cmd_rate_finite_n(&cfg, &curves, &ns, &opts)?
                }
                SweepVar::Qx => {
                    let qxs = axis.axis(0.0, 0.12, 121).points(false)?;
                    sweep::cmd_rate_finite_qx(&curves, &qxs, *rounds, &opts)?
                }
            };
            Ok(Outcome::ok(table.to_csv()))
        }
        Command::RateAsymptotic { axis } => {
            let (cfg, from_file) = cli.load_config()?;
            let curves = sweep::build_curves(&cfg, from_file, cli.honest.as_deref())?;
            let qxs = axis.axis(0.0, 0.15, 151).points(false)?;
            Ok(Outcome::ok(sweep::cmd_rate_asymptotic(&curves, &qxs)?.to_csv()))
        }
        Command::Bounds { rounds } => {
            let sample = cli.sample_for(*rounds)?;
            let report = BoundsReport {
                rounds: *rounds,
                sample,
                delta: delta_for_epsilon(cli.epsilon, sample, *rounds)?,
                delta_prime: delta_prime(cli.epsilon, sample)?,
                bb84_nu: bb84_nu(*rounds, sample, cli.epsilon)?,
                ledger: epsilon_ledger(cli.epsilon)?,
            };
            Ok(Outcome::ok(to_json(&report)?))
        }
        Command::Simulate { rounds } => {
            let (cfg, from_file) = cli.load_config()?;
            let tc = cli.trial_config(&cfg, from_file, *rounds, cli.sample_for(*rounds)?, 1)?;
            Ok(Outcome::ok(to_json(&simulate_e91(&tc)?)?))
        }
        Command::McVerify { rounds, sample, trials, inject } => {
            let (cfg, from_file) = cli.load_config()?;
            let m = match sample {
                Some(m) => *m,
                None => cli.sample_for(*rounds)?,
            };
            let mut tc = cli.trial_config(&cfg, from_file, *rounds, m, *trials)?;
            if let Some(InjectWord::WorstCase) = inject {
                let word = BellWord::new(
                    (0..*rounds).map(|i| BellSymbol::new(false, i % 2 == 0)).collect(),
                )?;
                tc = tc.with_injected_word(word)?;
            }
            let summary = verify_concentration(&tc, cli.epsilon)?;
            Ok(Outcome {
                output: to_json(&summary)?,
                verification_failed: !summary.passed,
            })
        }
        Command::Verify { inject_fault } => {
            let results = verify::run_checks(cli.seed, *inject_fault);
            let mut output = String::new();
            for r in &results {
                output.push_str(&r.to_string());
                output.push('\n');
            }
            Ok(Outcome {
                output,
                verification_failed: results.iter().any(|r| !r.passed),
            })
        }
    }
}

/// Parses `args`, runs the command, writes output, and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let outcome = match run(&cli) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_INVALID;
        }
    };
    let written = match &cli.out {
        Some(path) => std::fs::write(path, &outcome.output)
            .map_err(|e| format!("{}: {e}", path.display())),
        None => {
            use std::io::Write;
            std::io::stdout()
                .write_all(outcome.output.as_bytes())
                .map_err(|e| e.to_string())
        }
    };
    if let Err(e) = written {
        eprintln!("error: {e}");
        return EXIT_INVALID;
    }
    outcome.exit_code()
}
