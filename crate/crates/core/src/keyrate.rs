//! Finite and asymptotic key rates, plus the BB84 baselines they are
//! compared against. All logarithms are base two.

use serde::Serialize;

use crate::error::{out_of_range, Result};
use crate::sampling::{delta_for_epsilon, delta_prime, epsilon_ledger, SamplingParams};

/// Binary Shannon entropy with `0·log 0 = 0`.
pub fn binary_entropy(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(out_of_range("p", p, "must lie in [0, 1]"));
    }
    if p == 0.0 || p == 1.0 {
        return Ok(0.0);
    }
    Ok(-p * p.log2() - (1.0 - p) * (1.0 - p).log2())
}

/// `h(p)` below one half, 1 at and above it.
pub fn h_bar(p: f64) -> Result<f64> {
    let h = binary_entropy(p)?;
    Ok(if p < 0.5 { h } else { 1.0 })
}

/// Records which side of `[0, 1]` an argument was clamped from.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ClampFlags {
    pub arg_clamped_low: bool,
    pub arg_clamped_high: bool,
}

impl ClampFlags {
    pub fn any(&self) -> bool {
        self.arg_clamped_low || self.arg_clamped_high
    }
}

fn clamp_unit(x: f64) -> (f64, ClampFlags) {
    let flags = ClampFlags {
        arg_clamped_low: x < 0.0,
        arg_clamped_high: x > 1.0,
    };
    (x.clamp(0.0, 1.0), flags)
}

fn check_p_star(p_star: f64) -> Result<()> {
    if !(0.0..0.5).contains(&p_star) {
        return Err(out_of_range("p_star", p_star, "must lie in [0, 1/2)"));
    }
    Ok(())
}

fn check_unit(name: &'static str, x: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&x) {
        return Err(out_of_range(name, x, "must lie in [0, 1]"));
    }
    Ok(())
}

/// Upper bound on the adversary's phase-error rate,
/// `(qx − p* + δ′)/(1 − 2p*) + δ`, clamped into `[0, 1]`.
pub fn corrected_phase(
    qx: f64,
    p_star: f64,
    delta: f64,
    delta_prime: f64,
) -> Result<(f64, ClampFlags)> {
    check_unit("qx", qx)?;
    check_p_star(p_star)?;
    if delta < 0.0 || delta_prime < 0.0 {
        return Err(out_of_range("delta", delta.min(delta_prime), "must be >= 0"));
    }
    Ok(clamp_unit(
        (qx - p_star + delta_prime) / (1.0 - 2.0 * p_star) + delta,
    ))
}

/// How error-correction leakage is charged.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LeakModel {
    /// `ec·((N−m)/N)·h̄(qx+δ)`: leakage paid on key rounds only.
    #[default]
    KeyRounds,
    /// `ec·h̄(qx+δ)` per transmitted signal.
    Strict,
}

pub const DEFAULT_EC_FACTOR: f64 = 1.2;
pub const DEFAULT_SAMPLE_FRACTION: f64 = 0.07;
pub const DEFAULT_EPSILON: f64 = 1e-36;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateParams {
    pub sampling: SamplingParams,
    pub ec_factor: f64,
    pub p_star: f64,
    pub leak: LeakModel,
}

impl RateParams {
    pub fn new(rounds: u64, sample: u64, epsilon: f64, ec_factor: f64, p_star: f64) -> Result<Self> {
        let sampling = SamplingParams::new(rounds, sample, epsilon)?;
        check_p_star(p_star)?;
        if !(ec_factor >= 1.0 && ec_factor.is_finite()) {
            return Err(out_of_range("ec_factor", ec_factor, "must be >= 1"));
        }
        Ok(RateParams {
            sampling,
            ec_factor,
            p_star,
            leak: LeakModel::default(),
        })
    }

    /// `m = round(fraction·N)`.
    pub fn with_fraction(rounds: u64, fraction: f64, epsilon: f64, ec_factor: f64, p_star: f64) -> Result<Self> {
        if !(fraction > 0.0 && fraction <= 0.5) {
            return Err(out_of_range("m_fraction", fraction, "must lie in (0, 1/2]"));
        }
        let sample = ((rounds as f64) * fraction).round().max(1.0) as u64;
        RateParams::new(rounds, sample, epsilon, ec_factor, p_star)
    }

    pub fn with_leak(mut self, leak: LeakModel) -> Self {
        self.leak = leak;
        self
    }

    pub fn rounds(&self) -> u64 {
        self.sampling.rounds
    }

    pub fn sample(&self) -> u64 {
        self.sampling.sample
    }

    pub fn epsilon(&self) -> f64 {
        self.sampling.epsilon
    }
}

/// Finite-key rate together with every intermediate term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateReport {
    pub rate: f64,
    pub rate_clamped: f64,
    /// `1 − h̄(corrected_phase)`: min-entropy per key bit.
    pub min_entropy_per_bit: f64,
    pub corrected_phase: f64,
    pub delta: f64,
    pub delta_prime: f64,
    /// Leakage per transmitted signal.
    pub leak_ec: f64,
    /// `(1/N)·log(1/ε)`.
    pub pa_penalty: f64,
    pub epsilon_pa: f64,
    pub epsilon_fail: f64,
    pub clamp_flags: ClampFlags,
}

pub fn finite_rate(qx_observed: f64, params: &RateParams) -> Result<RateReport> {
    check_unit("qx", qx_observed)?;
    let RateParams {
        sampling,
        ec_factor,
        p_star,
        leak,
    } = *params;
    let (n, m, eps) = (sampling.rounds, sampling.sample, sampling.epsilon);
    let delta = delta_for_epsilon(eps, m, n)?;
    let delta_p = delta_prime(eps, m)?;
    let ledger = epsilon_ledger(eps)?;
    let (corrected, clamp_flags) = corrected_phase(qx_observed, p_star, delta, delta_p)?;

    let key_fraction = (n - m) as f64 / n as f64;
    let min_entropy_per_bit = 1.0 - h_bar(corrected)?;
    let leak_ec = ec_factor
        * h_bar((qx_observed + delta).min(1.0))?
        * match leak {
            LeakModel::KeyRounds => key_fraction,
            LeakModel::Strict => 1.0,
        };
    let pa_penalty = -eps.log2() / n as f64;
    let rate = key_fraction * min_entropy_per_bit - leak_ec - pa_penalty;
    Ok(RateReport {
        rate,
        rate_clamped: rate.max(0.0),
        min_entropy_per_bit,
        corrected_phase: corrected,
        delta,
        delta_prime: delta_p,
        leak_ec,
        pa_penalty,
        epsilon_pa: ledger.epsilon_pa,
        epsilon_fail: ledger.epsilon_fail,
        clamp_flags,
    })
}

/// `1 − h̄((qx − p*)/(1 − 2p*)) − h(qx)`.
pub fn asymptotic_rate(qx: f64, p_star: f64) -> Result<f64> {
    check_unit("qx", qx)?;
    check_p_star(p_star)?;
    let (arg, _) = clamp_unit((qx - p_star) / (1.0 - 2.0 * p_star));
    Ok(1.0 - (h_bar(arg)? + binary_entropy(qx)?))
}

/// Finite-key BB84 statistical correction
/// `ν = sqrt(N(m+1)·ln(2/ε) / (m²·n))` with `n = N − m`.
pub fn bb84_nu(rounds: u64, sample: u64, epsilon: f64) -> Result<f64> {
    SamplingParams::new(rounds, sample, epsilon)?;
    let (big_n, m) = (rounds as f64, sample as f64);
    let n = big_n - m;
    let log_term = std::f64::consts::LN_2 - epsilon.ln();
    Ok((big_n * (m + 1.0) * log_term / (m * m * n)).sqrt())
}

/// Finite-key BB84 rate with a fully adversarial network and EC factor 1.2.
pub fn bb84_finite(qx: f64, rounds: u64, sample: u64, epsilon: f64) -> Result<f64> {
    bb84_finite_with_ec(qx, rounds, sample, epsilon, DEFAULT_EC_FACTOR)
}

pub fn bb84_finite_with_ec(
    qx: f64,
    rounds: u64,
    sample: u64,
    epsilon: f64,
    ec_factor: f64,
) -> Result<f64> {
    check_unit("qx", qx)?;
    let nu = bb84_nu(rounds, sample, epsilon)?;
    let hb = h_bar((qx + nu).min(1.0))?;
    let key_fraction = (rounds - sample) as f64 / rounds as f64;
    Ok(key_fraction * (1.0 - hb - ec_factor * hb))
}

/// `1 − 2h̄(qx)`.
pub fn bb84_asymptotic(qx: f64) -> Result<f64> {
    let hb = h_bar(qx)?;
    Ok(1.0 - (hb + hb))
}

/// Largest tolerable observed error for a rate curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", content = "qx", rename_all = "snake_case")]
pub enum Tolerance {
    /// No positive rate even at `qx = 0`.
    None,
    /// Zero crossing located to within [`TOLERANCE_ABS`].
    Threshold(f64),
    /// Still positive at `qx = 1/2`.
    AtLeastHalf,
}

impl Tolerance {
    /// `0`, the threshold, or `0.5`.
    pub fn value(&self) -> f64 {
        match self {
            Tolerance::None => 0.0,
            Tolerance::Threshold(q) => *q,
            Tolerance::AtLeastHalf => 0.5,
        }
    }
}

pub const TOLERANCE_ABS: f64 = 1e-6;

/// Bisection for the zero of a rate that decreases in `qx` on `[0, 1/2]`.
pub fn noise_tolerance<F>(rate: F) -> Result<Tolerance>
where
    F: Fn(f64) -> Result<f64>,
{
    let (mut lo, mut hi) = (0.0, 0.5);
    if rate(lo)? <= 0.0 {
        return Ok(Tolerance::None);
    }
    if rate(hi)? > 0.0 {
        return Ok(Tolerance::AtLeastHalf);
    }
    while hi - lo > TOLERANCE_ABS / 8.0 {
        let mid = 0.5 * (lo + hi);
        if rate(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Tolerance::Threshold(0.5 * (lo + hi)))
}
