//! Repeater-chain topology and the honest-network noise parameter.

use crate::bell::{BellDiagonal, BellSymbol};
use crate::error::{out_of_range, Error, Result};

/// `E_q(ρ) = (1−q)ρ + (q/4)I` applied to `|φ_00⟩`.
pub fn depolarizing_dist(q: f64) -> Result<BellDiagonal> {
    if !(0.0..=1.0).contains(&q) {
        return Err(out_of_range("q", q, "must lie in [0, 1]"));
    }
    let off = q / 4.0;
    BellDiagonal::new([1.0 - 3.0 * off, off, off, off])
}

/// Noise on a single link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LinkNoise {
    Depolarizing(f64),
    Explicit(BellDiagonal),
}

impl LinkNoise {
    pub fn distribution(&self) -> Result<BellDiagonal> {
        match self {
            LinkNoise::Depolarizing(q) => depolarizing_dist(*q),
            LinkNoise::Explicit(d) => Ok(*d),
        }
    }
}

/// A chain of `repeaters` repeaters and `repeaters + 1` links. The first
/// `honest_left` repeaters next to Alice and the last `honest_right` next to
/// Bob are trusted; the rest may be adversarial.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainSpec {
    repeaters: usize,
    honest_left: usize,
    honest_right: usize,
    links: Vec<BellDiagonal>,
}

impl ChainSpec {
    pub fn new(
        repeaters: usize,
        honest_left: usize,
        honest_right: usize,
        links: &[LinkNoise],
    ) -> Result<Self> {
        if honest_left + honest_right > repeaters {
            return Err(Error::InvalidChain(format!(
                "{honest_left} + {honest_right} honest repeaters exceed {repeaters}"
            )));
        }
        if links.len() != repeaters + 1 {
            return Err(Error::InvalidChain(format!(
                "{repeaters} repeaters need {} links, got {}",
                repeaters + 1,
                links.len()
            )));
        }
        let links = links
            .iter()
            .map(LinkNoise::distribution)
            .collect::<Result<Vec<_>>>()?;
        Ok(ChainSpec {
            repeaters,
            honest_left,
            honest_right,
            links,
        })
    }

    /// Identical depolarizing links.
    pub fn uniform(repeaters: usize, honest_left: usize, honest_right: usize, q: f64) -> Result<Self> {
        ChainSpec::new(
            repeaters,
            honest_left,
            honest_right,
            &vec![LinkNoise::Depolarizing(q); repeaters + 1],
        )
    }

    /// Splits `honest` trusted repeaters as `ceil(h/2)` left, `floor(h/2)` right.
    pub fn balanced(repeaters: usize, honest: usize, links: &[LinkNoise]) -> Result<Self> {
        ChainSpec::new(repeaters, honest.div_ceil(2), honest / 2, links)
    }

    pub fn repeaters(&self) -> usize {
        self.repeaters
    }

    pub fn honest_left(&self) -> usize {
        self.honest_left
    }

    pub fn honest_right(&self) -> usize {
        self.honest_right
    }

    pub fn honest(&self) -> usize {
        self.honest_left + self.honest_right
    }

    pub fn links(&self) -> &[BellDiagonal] {
        &self.links
    }

    /// Same links, different trust split.
    pub fn with_honest(&self, honest_left: usize, honest_right: usize) -> Result<Self> {
        let links: Vec<_> = self.links.iter().copied().map(LinkNoise::Explicit).collect();
        ChainSpec::new(self.repeaters, honest_left, honest_right, &links)
    }
}

/// End-to-end noise summary of a chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseReport {
    pub end_to_end: BellDiagonal,
    pub qx: f64,
    pub p_star: f64,
    pub p_left: BellDiagonal,
    pub p_right: BellDiagonal,
}

pub fn end_to_end_dist(spec: &ChainSpec) -> BellDiagonal {
    BellDiagonal::compose(spec.links())
}

/// Expected X-basis error rate seen by Alice and Bob.
pub fn observed_qx(spec: &ChainSpec) -> f64 {
    end_to_end_dist(spec).phase_error_prob()
}

/// `(P_L, P_R)`: the composed noise of the honest links on each side,
/// excluding the link that touches the adversarial zone.
pub fn honest_marginals(spec: &ChainSpec) -> (BellDiagonal, BellDiagonal) {
    let links = spec.links();
    let left = BellDiagonal::compose(&links[..spec.honest_left]);
    let right = BellDiagonal::compose(&links[links.len() - spec.honest_right..]);
    (left, right)
}

/// Probability that exactly one honest side contributes a phase flip.
pub fn noise_parameter(spec: &ChainSpec) -> f64 {
    let (left, right) = honest_marginals(spec);
    noise_parameter_from_marginals(&left, &right)
}

pub fn noise_parameter_from_marginals(left: &BellDiagonal, right: &BellDiagonal) -> f64 {
    let mut p = 0.0;
    for x in BellSymbol::ALL {
        for y in BellSymbol::ALL {
            if x.ph ^ y.ph {
                p += left.prob(x) * right.prob(y);
            }
        }
    }
    p
}

pub fn noise_report(spec: &ChainSpec) -> NoiseReport {
    let end_to_end = end_to_end_dist(spec);
    let (p_left, p_right) = honest_marginals(spec);
    NoiseReport {
        end_to_end,
        qx: end_to_end.phase_error_prob(),
        p_star: noise_parameter_from_marginals(&p_left, &p_right),
        p_left,
        p_right,
    }
}

/// `p*` for `honest` identical depolarizing links, independent of the split.
pub fn uniform_noise_parameter(q: f64, honest: usize) -> Result<f64> {
    let d = depolarizing_dist(q)?;
    Ok(BellDiagonal::compose(&vec![d; honest]).phase_error_prob())
}

/// Per-link `q` that makes `links` identical depolarizing links produce
/// observed error `qx`. Inverse of `qx = (1 − (1−q)^L)/2`.
pub fn link_q_for_observed(qx: f64, links: usize) -> Result<f64> {
    if !(0.0..=0.5).contains(&qx) {
        return Err(out_of_range("qx", qx, "must lie in [0, 1/2]"));
    }
    if links == 0 {
        return Err(Error::InvalidChain("need at least one link".into()));
    }
    Ok(1.0 - (1.0 - 2.0 * qx).powf(1.0 / links as f64))
}
