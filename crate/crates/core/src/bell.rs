//! Bell alphabet algebra.
//!
//! A Bell symbol `(bt, ph)` labels the state `|φ_bt^ph⟩`. Symbols form the
//! group `Z2 × Z2` under coordinate-wise XOR, and a Bell-diagonal state is a
//! probability distribution over that group. Honest entanglement swapping with
//! Pauli correction composes link states by group convolution.

use std::fmt;
use std::ops::Add;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on `Σ p = 1` for Bell-diagonal distributions.
pub const NORM_TOL: f64 = 1e-12;

/// One element of the Bell alphabet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct BellSymbol {
    pub bt: bool,
    pub ph: bool,
}

impl BellSymbol {
    pub const IDENTITY: BellSymbol = BellSymbol::new(false, false);

    /// All four symbols in index order `(0,0), (0,1), (1,0), (1,1)`.
    pub const ALL: [BellSymbol; 4] = [
        BellSymbol::new(false, false),
        BellSymbol::new(false, true),
        BellSymbol::new(true, false),
        BellSymbol::new(true, true),
    ];

    pub const fn new(bt: bool, ph: bool) -> Self {
        BellSymbol { bt, ph }
    }

    pub fn from_bits(bt: u8, ph: u8) -> Self {
        BellSymbol::new(bt & 1 == 1, ph & 1 == 1)
    }

    /// Position in [`BellSymbol::ALL`]: `2·bt + ph`.
    pub const fn index(self) -> usize {
        ((self.bt as usize) << 1) | self.ph as usize
    }

    pub const fn from_index(i: usize) -> Self {
        BellSymbol::new(i & 2 != 0, i & 1 != 0)
    }
}

impl Add for BellSymbol {
    type Output = BellSymbol;

    fn add(self, rhs: BellSymbol) -> BellSymbol {
        BellSymbol::new(self.bt ^ rhs.bt, self.ph ^ rhs.ph)
    }
}

impl fmt::Display for BellSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.bt as u8, self.ph as u8)
    }
}

/// Coordinate-wise XOR of two symbols.
pub fn symbol_add(a: BellSymbol, b: BellSymbol) -> BellSymbol {
    a + b
}

/// A word over the Bell alphabet, one symbol per round.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BellWord {
    symbols: Vec<BellSymbol>,
}

impl BellWord {
    pub fn new(symbols: Vec<BellSymbol>) -> Result<Self> {
        if symbols.is_empty() {
            return Err(Error::EmptyWord);
        }
        Ok(BellWord { symbols })
    }

    pub fn identity(len: usize) -> Result<Self> {
        BellWord::new(vec![BellSymbol::IDENTITY; len])
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbols(&self) -> &[BellSymbol] {
        &self.symbols
    }

    /// The sub-word at `indices`, in the order given.
    pub fn subword(&self, indices: &[usize]) -> Result<BellWord> {
        let symbols = indices
            .iter()
            .map(|&i| {
                self.symbols.get(i).copied().ok_or_else(|| {
                    Error::LengthMismatch {
                        left: self.len(),
                        right: i + 1,
                    }
                })
            })
            .collect::<Result<Vec<_>>>()?;
        BellWord::new(symbols)
    }

    /// The sub-word on the complement of `indices`, in increasing index order.
    pub fn complement(&self, indices: &[usize]) -> Result<BellWord> {
        let mut keep = vec![true; self.len()];
        for &i in indices {
            if i >= self.len() {
                return Err(Error::LengthMismatch {
                    left: self.len(),
                    right: i + 1,
                });
            }
            keep[i] = false;
        }
        let symbols = self
            .symbols
            .iter()
            .zip(keep)
            .filter_map(|(s, k)| k.then_some(*s))
            .collect();
        BellWord::new(symbols)
    }

    pub fn ph_count(&self) -> usize {
        self.symbols.iter().filter(|s| s.ph).count()
    }

    pub fn bt_count(&self) -> usize {
        self.symbols.iter().filter(|s| s.bt).count()
    }

    /// Relative Hamming weight of the phase string.
    pub fn ph_weight(&self) -> f64 {
        self.ph_count() as f64 / self.len() as f64
    }

    /// Relative Hamming weight of the bit string.
    pub fn bt_weight(&self) -> f64 {
        self.bt_count() as f64 / self.len() as f64
    }
}

pub fn word_add(a: &BellWord, b: &BellWord) -> Result<BellWord> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    BellWord::new(a.symbols.iter().zip(&b.symbols).map(|(x, y)| *x + *y).collect())
}

pub fn ph_weight(w: &BellWord) -> f64 {
    w.ph_weight()
}

pub fn bt_weight(w: &BellWord) -> f64 {
    w.bt_weight()
}

/// Probability distribution over the four Bell symbols.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BellDiagonal {
    probs: [f64; 4],
}

impl BellDiagonal {
    /// Validates non-negativity and normalization to [`NORM_TOL`].
    pub fn new(probs: [f64; 4]) -> Result<Self> {
        Self::with_tolerance(probs, NORM_TOL)
    }

    pub fn with_tolerance(probs: [f64; 4], tol: f64) -> Result<Self> {
        if let Some(p) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(Error::InvalidDistribution(format!(
                "entry {p} is negative or not finite"
            )));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > tol {
            return Err(Error::InvalidDistribution(format!(
                "entries sum to {total}, expected 1"
            )));
        }
        Ok(BellDiagonal { probs })
    }

    pub fn delta(s: BellSymbol) -> Self {
        let mut probs = [0.0; 4];
        probs[s.index()] = 1.0;
        BellDiagonal { probs }
    }

    pub fn identity() -> Self {
        Self::delta(BellSymbol::IDENTITY)
    }

    pub fn uniform() -> Self {
        BellDiagonal { probs: [0.25; 4] }
    }

    pub fn probs(&self) -> [f64; 4] {
        self.probs
    }

    pub fn prob(&self, s: BellSymbol) -> f64 {
        self.probs[s.index()]
    }

    /// Distribution of `a ⊕ b` for independent `a ~ self`, `b ~ other`.
    pub fn convolve(&self, other: &BellDiagonal) -> BellDiagonal {
        let mut out = [0.0; 4];
        for (i, p) in self.probs.iter().enumerate() {
            for (j, q) in other.probs.iter().enumerate() {
                out[i ^ j] += p * q;
            }
        }
        BellDiagonal { probs: out }
    }

    /// Folds [`convolve`](Self::convolve) over `links`; the empty fold is `δ_(0,0)`.
    pub fn compose<'a, I>(links: I) -> BellDiagonal
    where
        I: IntoIterator<Item = &'a BellDiagonal>,
    {
        links
            .into_iter()
            .fold(BellDiagonal::identity(), |acc, d| acc.convolve(d))
    }

    /// Probability of a phase flip: `P(0,1) + P(1,1)`.
    pub fn phase_error_prob(&self) -> f64 {
        self.probs[1] + self.probs[3]
    }

    /// Probability of a bit flip: `P(1,0) + P(1,1)`.
    pub fn bit_error_prob(&self) -> f64 {
        self.probs[2] + self.probs[3]
    }

    /// Largest absolute entry-wise difference.
    pub fn max_abs_diff(&self, other: &BellDiagonal) -> f64 {
        self.probs
            .iter()
            .zip(other.probs.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl Default for BellDiagonal {
    fn default() -> Self {
        BellDiagonal::identity()
    }
}

pub fn convolve(p: &BellDiagonal, q: &BellDiagonal) -> BellDiagonal {
    p.convolve(q)
}

pub fn phase_error_prob(p: &BellDiagonal) -> f64 {
    p.phase_error_prob()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sym(bt: u8, ph: u8) -> BellSymbol {
        BellSymbol::from_bits(bt, ph)
    }

    fn word(bits: &[(u8, u8)]) -> BellWord {
        BellWord::new(bits.iter().map(|&(b, p)| sym(b, p)).collect()).unwrap()
    }

    fn dep(q: f64) -> BellDiagonal {
        BellDiagonal::new([1.0 - 0.75 * q, q / 4.0, q / 4.0, q / 4.0]).unwrap()
    }

    prop_compose! {
        fn arb_dist()(w in prop::array::uniform4(0.0f64..1.0)) -> BellDiagonal {
            let total: f64 = w.iter().sum::<f64>() + 1e-9;
            let mut p = w.map(|x| x / total);
            p[0] += 1.0 - p.iter().sum::<f64>();
            BellDiagonal::new(p).unwrap()
        }
    }

    #[test]
    fn symbol_addition_table() {
        assert_eq!(sym(0, 0) + sym(1, 1), sym(1, 1));
        assert_eq!(sym(1, 0) + sym(1, 1), sym(0, 1));
        for a in BellSymbol::ALL {
            assert_eq!(symbol_add(a, a), BellSymbol::IDENTITY);
            for b in BellSymbol::ALL {
                assert_eq!(a + b, b + a);
                for c in BellSymbol::ALL {
                    assert_eq!((a + b) + c, a + (b + c));
                }
            }
        }
    }

    #[test]
    fn index_roundtrip() {
        for (i, s) in BellSymbol::ALL.iter().enumerate() {
            assert_eq!(s.index(), i);
            assert_eq!(BellSymbol::from_index(i), *s);
        }
    }

    #[test]
    fn word_addition() {
        let a = word(&[(0, 1), (1, 0)]);
        assert_eq!(word_add(&a, &a).unwrap(), word(&[(0, 0), (0, 0)]));

        let w = word(&[(1, 1), (0, 1), (1, 0)]);
        assert_eq!(word_add(&BellWord::identity(3).unwrap(), &w).unwrap(), w);

        let b = word(&[(1, 1), (0, 0)]);
        let c = word(&[(0, 1), (1, 0)]);
        assert_eq!(word_add(&b, &c).unwrap(), word(&[(1, 0), (1, 0)]));
    }

    #[test]
    fn word_length_mismatch() {
        let a = word(&[(0, 1)]);
        let b = word(&[(0, 1), (1, 1)]);
        assert_eq!(
            word_add(&a, &b),
            Err(Error::LengthMismatch { left: 1, right: 2 })
        );
        assert_eq!(BellWord::new(vec![]), Err(Error::EmptyWord));
    }

    #[test]
    fn weights() {
        let w = word(&[(0, 1), (0, 0), (1, 1)]);
        assert!((ph_weight(&w) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(ph_weight(&BellWord::identity(7).unwrap()), 0.0);
        assert_eq!(bt_weight(&word(&[(1, 0), (1, 1)])), 1.0);
    }

    #[test]
    fn subwords_preserve_order() {
        let w = word(&[(0, 0), (0, 1), (1, 0), (1, 1)]);
        assert_eq!(w.subword(&[3, 1]).unwrap(), word(&[(1, 1), (0, 1)]));
        assert_eq!(w.complement(&[3, 1]).unwrap(), word(&[(0, 0), (1, 0)]));
        assert!(w.subword(&[4]).is_err());
    }

    #[test]
    fn distribution_validation() {
        assert!(BellDiagonal::new([0.5, 0.5, 0.0, 0.0]).is_ok());
        assert!(BellDiagonal::new([0.5, 0.6, 0.0, -0.1]).is_err());
        assert!(BellDiagonal::new([0.5, 0.4, 0.0, 0.0]).is_err());
        assert!(BellDiagonal::new([f64::NAN, 1.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn convolve_examples() {
        let q = dep(0.17);
        assert_eq!(BellDiagonal::identity().convolve(&q), q);
        let out = BellDiagonal::delta(sym(1, 0)).convolve(&BellDiagonal::delta(sym(0, 1)));
        assert_eq!(out, BellDiagonal::delta(sym(1, 1)));
    }

    #[test]
    fn phase_error_examples() {
        assert_eq!(BellDiagonal::identity().phase_error_prob(), 0.0);
        assert_eq!(BellDiagonal::uniform().phase_error_prob(), 0.5);
        assert!((dep(0.3).phase_error_prob() - 0.15).abs() < 1e-15);
    }

    // Exhaustive enumeration of 4^L tuples, independent of `convolve`.
    fn enumerate_phase_error(links: &[BellDiagonal]) -> f64 {
        let l = links.len();
        let mut total = 0.0;
        for code in 0..4usize.pow(l as u32) {
            let mut c = code;
            let mut prob = 1.0;
            let mut parity = false;
            for link in links {
                let s = BellSymbol::from_index(c % 4);
                c /= 4;
                prob *= link.prob(s);
                parity ^= s.ph;
            }
            if parity {
                total += prob;
            }
        }
        total
    }

    #[test]
    fn folded_depolarizing_links_match_enumeration() {
        for q in [0.0, 0.01, 0.03, 0.1, 0.37, 1.0] {
            for l in 1..=6 {
                let links = vec![dep(q); l];
                let folded = BellDiagonal::compose(&links).phase_error_prob();
                let enumerated = enumerate_phase_error(&links);
                let closed = (1.0 - (1.0 - q).powi(l as i32)) / 2.0;
                assert!((folded - enumerated).abs() < 1e-12, "q={q} L={l}");
                assert!((folded - closed).abs() < 1e-12, "q={q} L={l}");
            }
        }
    }

    proptest! {
        #[test]
        fn convolve_is_commutative_monoid(p in arb_dist(), q in arb_dist(), r in arb_dist()) {
            prop_assert!(p.convolve(&q).max_abs_diff(&q.convolve(&p)) < 1e-12);
            let left = p.convolve(&q).convolve(&r);
            let right = p.convolve(&q.convolve(&r));
            prop_assert!(left.max_abs_diff(&right) < 1e-12);
            prop_assert!(p.convolve(&BellDiagonal::identity()).max_abs_diff(&p) < 1e-12);
            let s: f64 = left.probs().iter().sum();
            prop_assert!((s - 1.0).abs() < 1e-12);
        }

        #[test]
        fn phase_parity_marginal_law(p in arb_dist(), q in arb_dist()) {
            let (a, b) = (p.phase_error_prob(), q.phase_error_prob());
            let got = p.convolve(&q).phase_error_prob();
            prop_assert!((got - (a * (1.0 - b) + b * (1.0 - a))).abs() < 1e-12);
        }

        #[test]
        fn word_add_is_self_inverse(bits in prop::collection::vec((0u8..2, 0u8..2), 1..64)) {
            let w = word(&bits);
            let zero = word_add(&w, &w).unwrap();
            prop_assert_eq!(zero.ph_count() + zero.bt_count(), 0);
        }
    }
}
