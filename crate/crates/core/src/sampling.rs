//! Classical sampling bounds and the ε bookkeeping that drives the rate.
//!
//! Strategy `Ψ_hw` samples a uniform size-`m` subset `t` of a bit string and
//! guesses the weight of the unsampled part from the weight of `t`. Strategy
//! `Ψ_4` does the same on the phase string of a Bell word, so both share one
//! failure bound `2·exp(−δ²·mN/(N+2))`.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::bell::BellWord;
use crate::error::{out_of_range, Error, Result};

/// Size of the sampled subset and of the whole word.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplingParams {
    pub rounds: u64,
    pub sample: u64,
    pub epsilon: f64,
}

impl SamplingParams {
    pub fn new(rounds: u64, sample: u64, epsilon: f64) -> Result<Self> {
        check_sizes(rounds, sample, false)?;
        check_epsilon(epsilon)?;
        Ok(SamplingParams {
            rounds,
            sample,
            epsilon,
        })
    }
}

fn check_sizes(rounds: u64, sample: u64, strict: bool) -> Result<()> {
    if rounds < 2 {
        return Err(out_of_range("N", rounds as f64, "need at least 2 rounds"));
    }
    if sample < 1 {
        return Err(out_of_range("m", sample as f64, "need at least 1 sampled round"));
    }
    let too_big = if strict {
        2 * sample >= rounds
    } else {
        2 * sample > rounds
    };
    if too_big {
        let reason = if strict { "need m < N/2" } else { "need m <= N/2" };
        return Err(out_of_range("m", sample as f64, reason));
    }
    Ok(())
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(out_of_range("epsilon", epsilon, "must lie in (0, 1)"));
    }
    Ok(())
}

/// Failure bound of `Ψ_hw` for `m <= N/2`, capped at 1.
pub fn hw_bound(delta: f64, m: u64, n: u64) -> Result<f64> {
    check_sizes(n, m, false)?;
    bound_unchecked(delta, m, n)
}

fn bound_unchecked(delta: f64, m: u64, n: u64) -> Result<f64> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(out_of_range("delta", delta, "must be positive"));
    }
    let (m, n) = (m as f64, n as f64);
    Ok((2.0 * (-delta * delta * m * n / (n + 2.0)).exp()).min(1.0))
}

/// Failure bound of `Ψ_4`. Only proven for `m < N/2`, which is enforced.
pub fn epsilon_cl(delta: f64, m: u64, n: u64) -> Result<f64> {
    check_sizes(n, m, true)?;
    bound_unchecked(delta, m, n)
}

/// The `δ` at which `epsilon_cl(δ, m, N) = ε²`.
pub fn delta_for_epsilon(epsilon: f64, m: u64, n: u64) -> Result<f64> {
    check_epsilon(epsilon)?;
    check_sizes(n, m, true)?;
    let (m, n) = (m as f64, n as f64);
    // ln(2/ε²) without underflowing ε² for tiny ε
    let log_term = std::f64::consts::LN_2 - 2.0 * epsilon.ln();
    Ok(((n + 2.0) * log_term / (m * n)).sqrt())
}

/// Hoeffding deviation for `m` samples at confidence `ε`: `2·exp(−2δ′²m) = ε`.
pub fn delta_prime(epsilon: f64, m: u64) -> Result<f64> {
    check_epsilon(epsilon)?;
    if m < 1 {
        return Err(out_of_range("m", m as f64, "need at least 1 sampled round"));
    }
    let log_term = std::f64::consts::LN_2 - epsilon.ln();
    Ok((log_term / (2.0 * m as f64)).sqrt())
}

/// Security parameters derived from the single user `ε`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct EpsilonLedger {
    pub epsilon: f64,
    /// Privacy-amplification distance `17ε + 4(2ε)^{1/3}`.
    pub epsilon_pa: f64,
    /// Failure probability of the entropy bound `2(2ε)^{1/3}`.
    pub epsilon_fail: f64,
    /// Smoothing of the min-entropy bound `8ε + 2(2ε)^{1/3}`.
    pub smoothing: f64,
}

pub fn epsilon_ledger(epsilon: f64) -> Result<EpsilonLedger> {
    check_epsilon(epsilon)?;
    let root = (2.0 * epsilon).cbrt();
    let ledger = EpsilonLedger {
        epsilon,
        epsilon_pa: 17.0 * epsilon + 4.0 * root,
        epsilon_fail: 2.0 * root,
        smoothing: 8.0 * epsilon + 2.0 * root,
    };
    if ledger.epsilon_pa >= 1.0 {
        return Err(out_of_range(
            "epsilon",
            epsilon,
            "derived epsilon_pa reaches 1",
        ));
    }
    Ok(ledger)
}

/// Uniform size-`m` subset of `0..n`, drawn without replacement.
pub fn sample_subset<R: Rng + ?Sized>(rng: &mut R, n: usize, m: usize) -> Vec<usize> {
    index::sample(rng, n, m).into_vec()
}

/// `|w(bits_t) − w(bits_{−t})| > δ` given the count of ones in `t`.
fn deviates(ones_in_sample: usize, ones_total: usize, n: usize, m: usize, delta: f64) -> bool {
    let inside = ones_in_sample as f64 / m as f64;
    let outside = (ones_total - ones_in_sample) as f64 / (n - m) as f64;
    (inside - outside).abs() > delta
}

/// Per-trial generator: stream `trial` of the ChaCha8 key derived from `seed`.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Monte Carlo failure frequency of `Ψ_hw` on a fixed bit string.
///
/// Trial `i` uses [`trial_rng`]`(seed, i)`, so the result does not depend on
/// how trials are spread over threads.
pub fn empirical_failure_bits(
    bits: &[bool],
    m: usize,
    delta: f64,
    trials: u64,
    seed: u64,
) -> Result<f64> {
    let n = bits.len();
    check_sizes(n as u64, m as u64, false)?;
    if trials == 0 {
        return Err(out_of_range("trials", 0.0, "need at least one trial"));
    }
    let total = bits.iter().filter(|b| **b).count();
    let failures: u64 = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = trial_rng(seed, trial);
            let t = sample_subset(&mut rng, n, m);
            let ones = t.iter().filter(|&&i| bits[i]).count();
            deviates(ones, total, n, m, delta) as u64
        })
        .sum();
    Ok(failures as f64 / trials as f64)
}

/// Monte Carlo failure frequency of `Ψ_4` on a Bell word.
///
/// Uses the same subsets as [`empirical_failure_bits`] for equal seeds.
pub fn empirical_failure(
    word: &BellWord,
    m: usize,
    delta: f64,
    trials: u64,
    seed: u64,
) -> Result<f64> {
    let n = word.len();
    check_sizes(n as u64, m as u64, false)?;
    if trials == 0 {
        return Err(out_of_range("trials", 0.0, "need at least one trial"));
    }
    let failures = (0..trials)
        .into_par_iter()
        .map(|trial| -> Result<u64> {
            let mut rng = trial_rng(seed, trial);
            let t = sample_subset(&mut rng, n, m);
            let guess = word.subword(&t)?.ph_weight();
            let target = word.complement(&t)?.ph_weight();
            Ok(((guess - target).abs() > delta) as u64)
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))?;
    Ok(failures as f64 / trials as f64)
}

/// Exact failure probability of `Ψ_hw` by enumerating every size-`m` subset.
pub fn exhaustive_failure(bits: &[bool], m: usize, delta: f64) -> Result<f64> {
    let n = bits.len();
    check_sizes(n as u64, m as u64, false)?;
    if n > 30 {
        return Err(Error::InvalidChain(format!(
            "exhaustive enumeration limited to 30 rounds, got {n}"
        )));
    }
    let total = bits.iter().filter(|b| **b).count();
    let mut subsets = 0u64;
    let mut failures = 0u64;
    let mut idx: Vec<usize> = (0..m).collect();
    loop {
        subsets += 1;
        let ones = idx.iter().filter(|&&i| bits[i]).count();
        failures += deviates(ones, total, n, m, delta) as u64;

        // next combination in lexicographic order
        let mut i = m;
        while i > 0 && idx[i - 1] == n - m + i - 1 {
            i -= 1;
        }
        if i == 0 {
            break;
        }
        idx[i - 1] += 1;
        for j in i..m {
            idx[j] = idx[j - 1] + 1;
        }
    }
    Ok(failures as f64 / subsets as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bell::BellSymbol;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn bound_caps_and_ranges() {
        assert_eq!(epsilon_cl(1e-9, 10, 100).unwrap(), 1.0);
        assert!(epsilon_cl(0.1, 50, 100).is_err());
        assert!(hw_bound(0.1, 50, 100).is_ok());
        assert!(epsilon_cl(0.0, 10, 100).is_err());
        assert!(epsilon_cl(1.5, 10, 100).unwrap() < 1e-8);
        assert!(epsilon_cl(f64::NAN, 10, 100).is_err());
        assert!(epsilon_cl(0.1, 0, 100).is_err());
    }

    #[test]
    fn delta_inverse_pair() {
        let eps = 1e-5;
        let d = delta_for_epsilon(eps, 70, 1000).unwrap();
        let back = epsilon_cl(d, 70, 1000).unwrap();
        assert!(back <= eps * eps * (1.0 + 1e-12));
        assert!(rel(back, eps * eps) < 1e-12);
    }

    #[test]
    fn delta_reference_values() {
        // 50-digit evaluation of the closed forms.
        let d = delta_for_epsilon(1e-36, 700_000, 10_000_000).unwrap();
        assert!(rel(d, 0.015421659498065236697) < 1e-12);
        let dp = delta_prime(1e-36, 700_000).unwrap();
        assert!(rel(dp, 0.0077268645705535321865) < 1e-12);
    }

    #[test]
    fn delta_shrinks_with_sample() {
        let mut prev = f64::INFINITY;
        for k in 3..9 {
            let n = 10u64.pow(k);
            let d = delta_for_epsilon(1e-10, n * 7 / 100, n).unwrap();
            assert!(d < prev);
            prev = d;
        }
        let a = delta_prime(1e-6, 100).unwrap();
        let b = delta_prime(1e-6, 400).unwrap();
        assert!((a / b - 2.0).abs() < 1e-12);
        let eps = 3e-7;
        let dp = delta_prime(eps, 123).unwrap();
        assert!(rel(2.0 * (-2.0 * dp * dp * 123.0).exp(), eps) < 1e-12);
    }

    #[test]
    fn ledger_values() {
        let l = epsilon_ledger(1e-36).unwrap();
        assert!(rel(l.epsilon_fail, 2.5198420997897463295e-12) < 1e-12);
        assert!(rel(l.epsilon_pa, 5.0396841995794926591e-12) < 1e-12);
        assert!(rel(l.smoothing, 2.5198420997897463295e-12) < 1e-12);

        let a = epsilon_ledger(1e-20).unwrap();
        let b = epsilon_ledger(1e-10).unwrap();
        assert!(a.epsilon_pa < b.epsilon_pa);
        assert!(a.epsilon_fail < b.epsilon_fail);
        assert!(a.smoothing < b.smoothing);
        assert!(epsilon_ledger(0.1).is_err());
        assert!(epsilon_ledger(0.0).is_err());
    }

    #[test]
    fn all_zero_word_never_fails() {
        let w = BellWord::identity(200).unwrap();
        assert_eq!(empirical_failure(&w, 20, 0.01, 500, 1).unwrap(), 0.0);
        assert_eq!(exhaustive_failure(&[false; 12], 6, 0.01).unwrap(), 0.0);
    }

    #[test]
    fn exhaustive_matches_hypergeometric() {
        // N=20, m=10, ten ones: failure iff |k − 5| ≥ 3 for δ = 0.5.
        let bits: Vec<bool> = (0..20).map(|i| i % 2 == 0).collect();
        let p = exhaustive_failure(&bits, 10, 0.5).unwrap();
        assert!((p - 4252.0 / 184756.0).abs() < 1e-15);
    }

    #[test]
    fn psi4_reduces_to_hw() {
        let symbols: Vec<_> = (0..300)
            .map(|i| BellSymbol::from_bits((i % 3 == 0) as u8, (i % 7 < 3) as u8))
            .collect();
        let word = BellWord::new(symbols).unwrap();
        let bits: Vec<bool> = word.symbols().iter().map(|s| s.ph).collect();
        for delta in [0.02, 0.05, 0.1] {
            let a = empirical_failure(&word, 40, delta, 2000, 9).unwrap();
            let b = empirical_failure_bits(&bits, 40, delta, 2000, 9).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn empirical_is_deterministic() {
        let bits: Vec<bool> = (0..100).map(|i| i < 50).collect();
        let a = empirical_failure_bits(&bits, 50, 0.15, 1000, 42).unwrap();
        let b = empirical_failure_bits(&bits, 50, 0.15, 1000, 42).unwrap();
        assert_eq!(a, b);
        assert!(empirical_failure_bits(&bits, 51, 0.15, 10, 42).is_err());
        assert!(empirical_failure_bits(&bits, 10, 0.15, 0, 42).is_err());
    }
}
