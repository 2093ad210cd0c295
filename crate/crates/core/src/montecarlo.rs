//! Round-level simulation of entanglement-based QKD over an honest chain.
//!
//! Rounds are i.i.d., so each round is reduced to its end-to-end Bell symbol.
//! A Z-basis key round disagrees iff the symbol's `bt` bit is set and an
//! X-basis test round disagrees iff its `ph` bit is set; the density-matrix
//! oracle pins this rule down via [`crate::dm_oracle::disagreement_probability`].

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::bell::{BellDiagonal, BellSymbol, BellWord};
use crate::error::{out_of_range, Result};
use crate::keyrate::{finite_rate, LeakModel, RateParams, RateReport, DEFAULT_EC_FACTOR, DEFAULT_EPSILON};
use crate::noise::{end_to_end_dist, noise_parameter, ChainSpec};
use crate::sampling::{delta_for_epsilon, delta_prime, sample_subset, trial_rng};

/// Upper limit on rounds materialized per trial.
pub const MAX_ROUNDS: u64 = 10_000_000;

/// Inverse-CDF sampler for one link distribution.
#[derive(Debug, Clone, Copy)]
struct LinkSampler {
    cumulative: [f64; 3],
}

impl LinkSampler {
    fn new(d: &BellDiagonal) -> Self {
        let p = d.probs();
        LinkSampler {
            cumulative: [p[0], p[0] + p[1], p[0] + p[1] + p[2]],
        }
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> BellSymbol {
        let u: f64 = rng.gen();
        let idx = self.cumulative.iter().take_while(|c| u >= **c).count();
        BellSymbol::from_index(idx)
    }
}

/// Draws end-to-end symbols for a chain, one link sample per link.
#[derive(Debug, Clone)]
pub struct RoundSampler {
    links: Vec<LinkSampler>,
}

impl RoundSampler {
    pub fn new(spec: &ChainSpec) -> Self {
        RoundSampler {
            links: spec.links().iter().map(LinkSampler::new).collect(),
        }
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> BellSymbol {
        self.links
            .iter()
            .fold(BellSymbol::IDENTITY, |acc, l| acc + l.draw(rng))
    }

    pub fn word<R: Rng + ?Sized>(&self, rng: &mut R, rounds: usize) -> Result<BellWord> {
        BellWord::new((0..rounds).map(|_| self.draw(rng)).collect())
    }
}

/// One round's end-to-end Bell symbol: XOR of independent per-link draws.
pub fn sample_round<R: Rng + ?Sized>(spec: &ChainSpec, rng: &mut R) -> BellSymbol {
    RoundSampler::new(spec).draw(rng)
}

/// Rate-side settings fed with the simulated observation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateSettings {
    pub epsilon: f64,
    pub ec_factor: f64,
    pub leak: LeakModel,
    /// Replaces the chain's computed `p*` when set.
    pub p_star_override: Option<f64>,
}

impl Default for RateSettings {
    fn default() -> Self {
        RateSettings {
            epsilon: DEFAULT_EPSILON,
            ec_factor: DEFAULT_EC_FACTOR,
            leak: LeakModel::default(),
            p_star_override: None,
        }
    }
}

/// Where per-round Bell symbols come from.
#[derive(Debug, Clone, PartialEq)]
pub enum WordSource {
    /// Fresh i.i.d. draws from the chain every trial.
    Chain,
    /// The same fixed word every trial, e.g. an adversarial pattern.
    Injected(BellWord),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialConfig {
    pub spec: ChainSpec,
    pub rounds: u64,
    pub sample_size: u64,
    pub seed: u64,
    pub trials: u64,
    pub rate: RateSettings,
    pub source: WordSource,
}

impl TrialConfig {
    pub fn new(spec: ChainSpec, rounds: u64, sample_size: u64, seed: u64, trials: u64) -> Result<Self> {
        let cfg = TrialConfig {
            spec,
            rounds,
            sample_size,
            seed,
            trials,
            rate: RateSettings::default(),
            source: WordSource::Chain,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_rate(mut self, rate: RateSettings) -> Self {
        self.rate = rate;
        self
    }

    pub fn with_injected_word(mut self, word: BellWord) -> Result<Self> {
        self.rounds = word.len() as u64;
        self.source = WordSource::Injected(word);
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        if self.rounds < 2 || self.rounds > MAX_ROUNDS {
            return Err(out_of_range("rounds", self.rounds as f64, "must lie in [2, 1e7]"));
        }
        if self.sample_size < 1 || 2 * self.sample_size > self.rounds {
            return Err(out_of_range("sample_size", self.sample_size as f64, "need 1 <= m <= N/2"));
        }
        if self.trials < 1 {
            return Err(out_of_range("trials", 0.0, "need at least one trial"));
        }
        Ok(())
    }

    pub fn p_star(&self) -> f64 {
        self.rate
            .p_star_override
            .unwrap_or_else(|| noise_parameter(&self.spec))
    }
}

/// Outcome of one simulated protocol run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MCReport {
    /// Observed X-basis error rate on the test subset.
    pub qx_hat: f64,
    /// Z-basis disagreement rate on the raw key.
    pub qz_hat: f64,
    /// Phase-error rate on the unsampled rounds (not observable in practice).
    pub qx_rest: f64,
    pub qx_analytic: f64,
    pub qz_analytic: f64,
    pub p_star: f64,
    /// 1 if the test subset misjudged the rest by more than δ, else 0.
    pub sampling_violations: u64,
    pub rate_from_observation: RateReport,
}

struct RunCounts {
    x_errors: usize,
    z_errors: usize,
    ph_rest: usize,
}

fn run_counts<R: Rng + ?Sized>(
    rng: &mut R,
    sampler: &RoundSampler,
    source: &WordSource,
    rounds: usize,
    m: usize,
) -> Result<RunCounts> {
    let generated;
    let symbols: &[BellSymbol] = match source {
        WordSource::Chain => {
            generated = (0..rounds).map(|_| sampler.draw(rng)).collect::<Vec<_>>();
            &generated
        }
        WordSource::Injected(w) => w.symbols(),
    };
    let mut in_test = vec![false; rounds];
    for i in sample_subset(rng, rounds, m) {
        in_test[i] = true;
    }
    let mut counts = RunCounts {
        x_errors: 0,
        z_errors: 0,
        ph_rest: 0,
    };
    for (s, tested) in symbols.iter().zip(in_test) {
        if tested {
            counts.x_errors += s.ph as usize;
        } else {
            counts.z_errors += s.bt as usize;
            counts.ph_rest += s.ph as usize;
        }
    }
    Ok(counts)
}

/// Simulates one run: `N` rounds, a uniform size-`m` test subset measured in
/// X, the rest measured in Z, then the finite-key rate from the observation.
pub fn simulate_e91(cfg: &TrialConfig) -> Result<MCReport> {
    cfg.validate()?;
    let (rounds, m) = (cfg.rounds as usize, cfg.sample_size as usize);
    let sampler = RoundSampler::new(&cfg.spec);
    let mut rng = trial_rng(cfg.seed, 0);
    let counts = run_counts(&mut rng, &sampler, &cfg.source, rounds, m)?;

    let qx_hat = counts.x_errors as f64 / m as f64;
    let qz_hat = counts.z_errors as f64 / (rounds - m) as f64;
    let qx_rest = counts.ph_rest as f64 / (rounds - m) as f64;
    let dist = end_to_end_dist(&cfg.spec);
    let p_star = cfg.p_star();
    let params = RateParams::new(cfg.rounds, cfg.sample_size, cfg.rate.epsilon, cfg.rate.ec_factor, p_star)?
        .with_leak(cfg.rate.leak);
    let rate_from_observation = finite_rate(qx_hat, &params)?;
    let sampling_violations = ((qx_hat - qx_rest).abs() > rate_from_observation.delta) as u64;
    Ok(MCReport {
        qx_hat,
        qz_hat,
        qx_rest,
        qx_analytic: dist.phase_error_prob(),
        qz_analytic: dist.bit_error_prob(),
        p_star,
        sampling_violations,
        rate_from_observation,
    })
}

/// Runs `trials` reports with seeds `seed, seed + 1, …`.
pub fn simulate_many(cfg: &TrialConfig) -> Result<Vec<MCReport>> {
    (0..cfg.trials)
        .into_par_iter()
        .map(|i| {
            let mut one = cfg.clone();
            one.seed = cfg.seed.wrapping_add(i);
            one.trials = 1;
            simulate_e91(&one)
        })
        .collect()
}

/// Empirical check of the sampling bound and of Hoeffding concentration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConcentrationSummary {
    pub trials: u64,
    pub epsilon: f64,
    pub delta: f64,
    pub delta_prime: f64,
    /// Trials where `|w(ph_t) − w(ph_{−t})| > δ`.
    pub violations: u64,
    pub frequency: f64,
    /// `ε²`.
    pub bound: f64,
    /// Binomial standard deviation of the frequency at the bound.
    pub sigma: f64,
    /// Trials where `|w(ph_t) − E[ph]| > δ′`; only counted for chain words.
    pub hoeffding_violations: Option<u64>,
    pub hoeffding_frequency: Option<f64>,
    pub passed: bool,
}

/// Counts sampling-bound and Hoeffding violations over independent trials.
///
/// Trial `i` draws from stream `i` of the ChaCha8 key for `cfg.seed`, so the
/// summary does not depend on the number of worker threads.
pub fn verify_concentration(cfg: &TrialConfig, epsilon: f64) -> Result<ConcentrationSummary> {
    cfg.validate()?;
    let (rounds, m) = (cfg.rounds as usize, cfg.sample_size as usize);
    let delta = delta_for_epsilon(epsilon, cfg.sample_size, cfg.rounds)?;
    let delta_p = delta_prime(epsilon, cfg.sample_size)?;
    let expected = end_to_end_dist(&cfg.spec).phase_error_prob();
    let sampler = RoundSampler::new(&cfg.spec);

    let (violations, hoeffding) = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| -> Result<(u64, u64)> {
            let mut rng = trial_rng(cfg.seed, trial);
            let c = run_counts(&mut rng, &sampler, &cfg.source, rounds, m)?;
            let inside = c.x_errors as f64 / m as f64;
            let outside = c.ph_rest as f64 / (rounds - m) as f64;
            Ok((
                ((inside - outside).abs() > delta) as u64,
                ((inside - expected).abs() > delta_p) as u64,
            ))
        })
        .try_reduce(|| (0, 0), |a, b| Ok((a.0 + b.0, a.1 + b.1)))?;

    let trials = cfg.trials as f64;
    let bound = epsilon * epsilon;
    let sigma = (bound * (1.0 - bound) / trials).sqrt();
    let frequency = violations as f64 / trials;
    let (hoeffding_violations, hoeffding_frequency, hoeffding_ok) = match cfg.source {
        WordSource::Chain => {
            let f = hoeffding as f64 / trials;
            let s = (epsilon * (1.0 - epsilon) / trials).sqrt();
            (Some(hoeffding), Some(f), f <= epsilon + 3.0 * s)
        }
        WordSource::Injected(_) => (None, None, true),
    };
    Ok(ConcentrationSummary {
        trials: cfg.trials,
        epsilon,
        delta,
        delta_prime: delta_p,
        violations,
        frequency,
        bound,
        sigma,
        hoeffding_violations,
        hoeffding_frequency,
        passed: frequency <= bound + 3.0 * sigma && hoeffding_ok,
    })
}
