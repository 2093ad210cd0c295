//! Built-in self checks run by the `verify` subcommand.

use rand::Rng;

use crate::bell::{BellDiagonal, BellSymbol};
use crate::dm_oracle::{bell_diagonal_dm, bell_state_vector, bell_swap, simulate_chain_exact, DM_TOL};
use crate::error::Result;
use crate::keyrate::{asymptotic_rate, bb84_asymptotic, noise_tolerance};
use crate::montecarlo::{simulate_e91, verify_concentration, TrialConfig};
use crate::noise::{depolarizing_dist, noise_parameter, noise_parameter_from_marginals, honest_marginals, observed_qx, ChainSpec, LinkNoise};
use crate::sampling::{delta_for_epsilon, delta_prime, epsilon_cl, exhaustive_failure, hw_bound, trial_rng};

/// Deliberate defects for checking that the suite notices them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Fault {
    /// Compose Bell indices with OR instead of XOR.
    Convolve,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl std::fmt::Display for CheckResult {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{tag} {}: {}", self.name, self.detail)
    }
}

/// Library composition, or the corrupted variant when a fault is injected.
fn fold(links: &[BellDiagonal], fault: Option<Fault>) -> [f64; 4] {
    if fault.is_none() {
        return BellDiagonal::compose(links.iter()).probs();
    }
    let mut acc = [1.0, 0.0, 0.0, 0.0];
    for link in links {
        let p = link.probs();
        let mut out = [0.0; 4];
        for i in 0..4 {
            for j in 0..4 {
                out[i | j] += acc[i] * p[j];
            }
        }
        acc = out;
    }
    acc
}

fn max_diff(a: &[f64; 4], b: &[f64; 4]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn random_dist<R: Rng>(rng: &mut R) -> BellDiagonal {
    let raw: [f64; 4] = std::array::from_fn(|_| rng.gen::<f64>() + 1e-3);
    let total: f64 = raw.iter().sum();
    BellDiagonal::new(raw.map(|p| p / total)).expect("normalized")
}

fn check(name: &'static str, f: impl FnOnce() -> Result<(bool, String)>) -> CheckResult {
    match f() {
        Ok((passed, detail)) => CheckResult { name, passed, detail },
        Err(e) => CheckResult {
            name,
            passed: false,
            detail: format!("error: {e}"),
        },
    }
}

fn oracle_equivalence(seed: u64, fault: Option<Fault>) -> Result<(bool, String)> {
    let mut rng = trial_rng(seed, 0);
    let mut pool = vec![BellDiagonal::identity()];
    for q in [0.01, 0.05, 0.3] {
        pool.push(depolarizing_dist(q)?);
    }
    pool.extend((0..3).map(|_| random_dist(&mut rng)));
    let mut worst: f64 = 0.0;
    let mut chains = 0;
    for len in 1..=3u32 {
        for code in 0..pool.len().pow(len) {
            let mut c = code;
            let links: Vec<BellDiagonal> = (0..len)
                .map(|_| {
                    let l = pool[c % pool.len()];
                    c /= pool.len();
                    l
                })
                .collect();
            let exact = simulate_chain_exact(&links)?.probs();
            worst = worst.max(max_diff(&exact, &fold(&links, fault)));
            chains += 1;
        }
    }
    Ok((worst <= DM_TOL, format!("{chains} chains, max deviation {worst:.3e}")))
}

fn swap_identity() -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for a in BellSymbol::ALL {
        for b in BellSymbol::ALL {
            let joint = bell_diagonal_dm(&BellDiagonal::delta(a)).kron(&bell_diagonal_dm(&BellDiagonal::delta(b)))?;
            for out in bell_swap(&joint, (1, 2))? {
                let target = bell_state_vector(a + b + out.outcome);
                worst = worst
                    .max((out.probability - 0.25).abs())
                    .max(1.0 - out.post_state.expectation(&target));
            }
        }
    }
    Ok((worst <= DM_TOL, format!("16 pairs, max deviation {worst:.3e}")))
}

fn parity_enumeration(fault: Option<Fault>) -> Result<(bool, String)> {
    let q = 0.03;
    let link = depolarizing_dist(q)?.probs();
    let mut enumerated = 0.0;
    for code in 0..4usize.pow(6) {
        let (mut c, mut weight, mut parity) = (code, 1.0, 0);
        for _ in 0..6 {
            weight *= link[c % 4];
            parity ^= c % 4 & 1;
            c /= 4;
        }
        if parity == 1 {
            enumerated += weight;
        }
    }
    let closed = (1.0 - (1.0 - q).powi(6)) / 2.0;
    let links = vec![depolarizing_dist(q)?; 6];
    let folded = fold(&links, fault);
    let via_fold = folded[1] + folded[3];
    let spec_qx = observed_qx(&ChainSpec::uniform(5, 0, 0, q)?);
    let dev = (enumerated - closed)
        .abs()
        .max((via_fold - closed).abs())
        .max((spec_qx - closed).abs());
    Ok((dev <= 1e-12, format!("qx = {closed:.12}, max deviation {dev:.3e}")))
}

fn def1_equivalence(seed: u64) -> Result<(bool, String)> {
    let mut rng = trial_rng(seed, 1);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let c = rng.gen_range(0..=5usize);
        let links: Vec<LinkNoise> = (0..=c).map(|_| LinkNoise::Explicit(random_dist(&mut rng))).collect();
        let ka = rng.gen_range(0..=c);
        let kb = rng.gen_range(0..=c - ka);
        let spec = ChainSpec::new(c, ka, kb, &links)?;
        let (l, r) = honest_marginals(&spec);
        let (pl, pr) = (l.phase_error_prob(), r.phase_error_prob());
        worst = worst
            .max((noise_parameter(&spec) - (pl * (1.0 - pr) + pr * (1.0 - pl))).abs())
            .max((noise_parameter_from_marginals(&l, &r) - noise_parameter(&spec)).abs());
        if ka + kb == 0 && noise_parameter(&spec) != 0.0 {
            return Ok((false, "p* nonzero with no honest repeaters".into()));
        }
    }
    Ok((worst <= 1e-12, format!("20 chains, max deviation {worst:.3e}")))
}

fn roundtrips() -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for (m, n) in [(70u64, 1_000u64), (700, 10_000), (700_000, 10_000_000)] {
        for k in 0..=38 {
            let eps = 10f64.powi(-40 + k);
            let delta = delta_for_epsilon(eps, m, n)?;
            worst = worst.max((epsilon_cl(delta, m, n)? / (eps * eps) - 1.0).abs());
            let dp = delta_prime(eps, m)?;
            worst = worst.max((2.0 * (-2.0 * dp * dp * m as f64).exp() / eps - 1.0).abs());
        }
    }
    Ok((worst <= 1e-12, format!("max relative deviation {worst:.3e}")))
}

fn exhaustive_bound() -> Result<(bool, String)> {
    let (n, m) = (20usize, 10usize);
    let bits: Vec<bool> = (0..n).map(|i| i % 2 == 0).collect();
    let mut ok = true;
    let mut worst_ratio: f64 = 0.0;
    for delta in [0.1, 0.2, 0.3, 0.4] {
        let freq = exhaustive_failure(&bits, m, delta)?;
        let bound = hw_bound(delta, m as u64, n as u64)?;
        ok &= freq <= bound;
        if bound > 0.0 {
            worst_ratio = worst_ratio.max(freq / bound);
        }
    }
    Ok((ok, format!("N=20 m=10, max frequency/bound {worst_ratio:.3}")))
}

fn bb84_reduction() -> Result<(bool, String)> {
    let exact = (0..=490).all(|i| {
        let q = i as f64 * 0.001;
        matches!((asymptotic_rate(q, 0.0), bb84_asymptotic(q)), (Ok(a), Ok(b)) if a == b)
    });
    let ours = noise_tolerance(|q| asymptotic_rate(q, 0.0))?.value();
    let bb84 = noise_tolerance(bb84_asymptotic)?.value();
    let ok = exact && (ours - 0.110).abs() <= 1e-4 && (bb84 - 0.110).abs() <= 1e-4;
    Ok((ok, format!("thresholds {ours:.6} / {bb84:.6}, identical on grid: {exact}")))
}

fn concentration(seed: u64) -> Result<(bool, String)> {
    let spec = ChainSpec::uniform(5, 2, 2, 0.03)?;
    let cfg = TrialConfig::new(spec, 10_000, 500, seed, 200)?;
    let s = verify_concentration(&cfg, 1e-3)?;
    Ok((
        s.passed,
        format!("{} trials, {} sampling violations, bound {:.1e}", s.trials, s.violations, s.bound),
    ))
}

fn determinism(seed: u64) -> Result<(bool, String)> {
    let cfg = TrialConfig::new(ChainSpec::uniform(5, 2, 2, 0.03)?, 100_000, 7_000, seed, 1)?;
    let (a, b) = (simulate_e91(&cfg)?, simulate_e91(&cfg)?);
    let same = a == b && a.qx_hat.to_bits() == b.qx_hat.to_bits();
    Ok((same, format!("seed {seed}, qx_hat {:.6}", a.qx_hat)))
}

/// Runs every check. Randomized checks use streams derived from `seed`.
pub fn run_checks(seed: u64, fault: Option<Fault>) -> Vec<CheckResult> {
    vec![
        check("oracle-equivalence", || oracle_equivalence(seed, fault)),
        check("bell-swap", swap_identity),
        check("parity-enumeration", || parity_enumeration(fault)),
        check("noise-parameter", || def1_equivalence(seed)),
        check("sampling-roundtrip", roundtrips),
        check("exhaustive-sampling", exhaustive_bound),
        check("bb84-reduction", bb84_reduction),
        check("concentration", || concentration(seed)),
        check("seed-determinism", || determinism(seed)),
    ]
}
