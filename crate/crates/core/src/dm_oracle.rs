//! Brute-force density-matrix simulation of short repeater chains.
//!
//! Qubit 0 is the most significant bit of the computational-basis index, so
//! `A ⊗ B` puts `A`'s qubits first. A chain of `L` links lives on `2L` qubits:
//! link `i` holds qubits `2i` and `2i + 1`, and repeater `i + 1` holds qubits
//! `2i + 1` and `2i + 2`.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;

use crate::bell::{BellDiagonal, BellSymbol};
use crate::error::{Error, Result};

/// Entry-wise tolerance for comparisons and validity checks.
pub const DM_TOL: f64 = 1e-10;

pub const MAX_QUBITS: usize = 8;
pub const MAX_LINKS: usize = MAX_QUBITS / 2;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Dense density matrix on `k` qubits, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    qubits: usize,
    data: Vec<Complex64>,
}

impl DensityMatrix {
    pub fn zeros(qubits: usize) -> Result<Self> {
        if qubits == 0 || qubits > MAX_QUBITS {
            return Err(Error::Oracle(format!(
                "{qubits} qubits outside 1..={MAX_QUBITS}"
            )));
        }
        let dim = 1 << qubits;
        Ok(DensityMatrix {
            qubits,
            data: vec![ZERO; dim * dim],
        })
    }

    pub fn from_pure(state: &[Complex64]) -> Result<Self> {
        let dim = state.len();
        if !dim.is_power_of_two() {
            return Err(Error::Oracle(format!("state length {dim} not a power of two")));
        }
        let mut rho = DensityMatrix::zeros(dim.trailing_zeros() as usize)?;
        for r in 0..dim {
            for c in 0..dim {
                rho.data[r * dim + c] = state[r] * state[c].conj();
            }
        }
        Ok(rho)
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.qubits
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.data[r * self.dim() + c]
    }

    fn set(&mut self, r: usize, c: usize, v: Complex64) {
        let d = self.dim();
        self.data[r * d + c] = v;
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim()).map(|i| self.get(i, i)).sum()
    }

    pub fn kron(&self, other: &DensityMatrix) -> Result<DensityMatrix> {
        let mut out = DensityMatrix::zeros(self.qubits + other.qubits)?;
        let (da, db) = (self.dim(), other.dim());
        for (r, row) in out.data.chunks_exact_mut(da * db).enumerate() {
            let a_row = &self.data[(r / db) * da..][..da];
            let b_row = &other.data[(r % db) * db..][..db];
            for (chunk, a) in row.chunks_exact_mut(db).zip(a_row) {
                if *a == ZERO {
                    continue;
                }
                for (x, b) in chunk.iter_mut().zip(b_row) {
                    *x = a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn scale(&mut self, k: f64) {
        self.data.iter_mut().for_each(|v| *v *= k);
    }

    pub fn add_assign(&mut self, other: &DensityMatrix, weight: f64) {
        debug_assert_eq!(self.qubits, other.qubits);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b * weight;
        }
    }

    pub fn max_abs_diff(&self, other: &DensityMatrix) -> f64 {
        if self.qubits != other.qubits {
            return f64::INFINITY;
        }
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// `⟨ψ|ρ|ψ⟩` for a pure state on all qubits.
    pub fn expectation(&self, psi: &[Complex64]) -> f64 {
        let d = self.dim();
        let mut acc = ZERO;
        for r in 0..d {
            if psi[r] == ZERO {
                continue;
            }
            for c in 0..d {
                acc += psi[r].conj() * self.get(r, c) * psi[c];
            }
        }
        acc.re
    }

    /// Checks Hermiticity, unit trace, and eigenvalues `≥ -tol`.
    pub fn validate(&self, tol: f64) -> Result<()> {
        self.validate_hermitian_trace(tol)?;
        if !self.shifted_cholesky_ok(tol) {
            return Err(Error::Oracle(format!("eigenvalue below -{tol}")));
        }
        Ok(())
    }

    fn validate_hermitian_trace(&self, tol: f64) -> Result<()> {
        let d = self.dim();
        for r in 0..d {
            for c in r..d {
                if (self.get(r, c) - self.get(c, r).conj()).norm_sqr() > tol * tol {
                    return Err(Error::Oracle(format!("not Hermitian at ({r},{c})")));
                }
            }
        }
        let tr = self.trace();
        if (tr - ONE).norm() > tol {
            return Err(Error::Oracle(format!("trace {tr} != 1")));
        }
        Ok(())
    }

    // ρ + τI is positive definite iff every eigenvalue of ρ exceeds −τ.
    fn shifted_cholesky_ok(&self, shift: f64) -> bool {
        let d = self.dim();
        let mut l = vec![ZERO; d * d];
        for j in 0..d {
            let mut diag = self.get(j, j).re + shift;
            for k in 0..j {
                diag -= l[j * d + k].norm_sqr();
            }
            if diag <= 0.0 {
                return false;
            }
            let ljj = diag.sqrt();
            l[j * d + j] = Complex64::new(ljj, 0.0);
            for i in (j + 1)..d {
                let mut v = self.get(i, j);
                for k in 0..j {
                    v -= l[i * d + k] * l[j * d + k].conj();
                }
                l[i * d + j] = v / ljj;
            }
        }
        true
    }

    /// Applies a single-qubit unitary `u` (row-major 2×2) to qubit `target`.
    pub fn apply_single_qubit(&self, u: [[Complex64; 2]; 2], target: usize) -> DensityMatrix {
        let d = self.dim();
        let bit = 1 << (self.qubits - 1 - target);
        // U ρ
        let mut left = self.clone();
        for r in 0..d {
            if r & bit != 0 {
                continue;
            }
            let r1 = r | bit;
            for c in 0..d {
                let (a, b) = (self.get(r, c), self.get(r1, c));
                left.set(r, c, u[0][0] * a + u[0][1] * b);
                left.set(r1, c, u[1][0] * a + u[1][1] * b);
            }
        }
        // (U ρ) U†
        let mut out = left.clone();
        for c in 0..d {
            if c & bit != 0 {
                continue;
            }
            let c1 = c | bit;
            for r in 0..d {
                let (a, b) = (left.get(r, c), left.get(r, c1));
                out.set(r, c, a * u[0][0].conj() + b * u[0][1].conj());
                out.set(r, c1, a * u[1][0].conj() + b * u[1][1].conj());
            }
        }
        out
    }

    /// Nonzero entries as `(row, col, value)`, row-major.
    fn nonzeros(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        let d = self.dim();
        self.data
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != ZERO)
            .map(move |(k, v)| (k / d, k % d, *v))
    }
}

/// `|φ_bt^ph⟩ = (|0,bt⟩ + (−1)^ph |1,¬bt⟩)/√2`, indexed by the basis state `2·a + b`.
pub fn bell_state_vector(s: BellSymbol) -> [Complex64; 4] {
    let mut v = [ZERO; 4];
    let bt = s.bt as usize;
    v[bt] = Complex64::new(FRAC_1_SQRT_2, 0.0);
    let sign = if s.ph { -1.0 } else { 1.0 };
    v[2 + (1 - bt)] = Complex64::new(sign * FRAC_1_SQRT_2, 0.0);
    v
}

pub fn bell_diagonal_dm(p: &BellDiagonal) -> DensityMatrix {
    let mut rho = DensityMatrix::zeros(2).expect("two qubits");
    for s in BellSymbol::ALL {
        let w = p.prob(s);
        if w == 0.0 {
            continue;
        }
        let proj = DensityMatrix::from_pure(&bell_state_vector(s)).expect("4-dim");
        rho.add_assign(&proj, w);
    }
    rho
}

/// Reads off `⟨φ_s|ρ|φ_s⟩` for a two-qubit state.
pub fn bell_decomposition(rho: &DensityMatrix) -> Result<[f64; 4]> {
    if rho.qubits() != 2 {
        return Err(Error::Oracle(format!(
            "Bell decomposition needs 2 qubits, got {}",
            rho.qubits()
        )));
    }
    let mut out = [0.0; 4];
    for s in BellSymbol::ALL {
        out[s.index()] = rho.expectation(&bell_state_vector(s));
    }
    Ok(out)
}

/// Result of projecting one qubit pair onto one Bell state.
#[derive(Debug, Clone)]
pub struct SwapOutcome {
    pub outcome: BellSymbol,
    pub probability: f64,
    /// Normalized state on the unmeasured qubits. Meaningless when
    /// `degenerate` is set.
    pub post_state: DensityMatrix,
    /// Set when `probability` is below the oracle tolerance and the
    /// post-state could not be normalized.
    pub degenerate: bool,
}

// full index -> (index on the remaining qubits, 2·b_i + b_j)
fn split_table(n: usize, (i, j): (usize, usize)) -> Vec<(usize, usize)> {
    let rest: Vec<usize> = (0..n).filter(|&k| k != i && k != j).collect();
    (0..1usize << n)
        .map(|full| {
            let bit = |q: usize| full >> (n - 1 - q) & 1;
            let reduced = rest.iter().fold(0, |acc, &q| acc << 1 | bit(q));
            (reduced, bit(i) << 1 | bit(j))
        })
        .collect()
}

// per (pr, pc) slot: the projectors with a nonzero weight v[pr]*·v[pc]
fn slot_weights(vs: &[[Complex64; 4]]) -> Vec<Vec<(usize, Complex64)>> {
    (0..16)
        .map(|slot| {
            vs.iter()
                .map(|v| v[slot / 4].conj() * v[slot % 4])
                .enumerate()
                .filter(|&(_, w)| w != ZERO)
                .collect()
        })
        .collect()
}

/// Unnormalized `(⟨v|_{i,j} ⊗ I) ρ (|v⟩_{i,j} ⊗ I)` on the remaining qubits
/// for every `v` in `vs`, kept in their original relative order. `ρ` on `n`
/// qubits is given by its nonzero entries; each `v` is indexed `2·b_i + b_j`.
fn project_pair<I>(n: usize, entries: I, pair: (usize, usize), vs: &[[Complex64; 4]]) -> Result<Vec<DensityMatrix>>
where
    I: IntoIterator<Item = (usize, usize, Complex64)>,
{
    let split = split_table(n, pair);
    let weights = slot_weights(vs);
    let mut outs = vec![DensityMatrix::zeros(n - 2)?; vs.len()];
    let dr = 1usize << (n - 2);
    for (row, col, value) in entries {
        let ((r, pr), (c, pc)) = (split[row], split[col]);
        for &(k, w) in &weights[pr * 4 + pc] {
            outs[k].data[r * dr + c] += w * value;
        }
    }
    Ok(outs)
}

/// Bell measurement of `pair` followed by the Pauli correction of `target`
/// (an index on the remaining qubits), summed over all four outcomes.
///
/// Equals `Σ_x p_x · pauli_correct(post_x, x, target)` over the branches of
/// [`bell_swap`], without materializing the branches.
fn swap_and_correct<I>(n: usize, entries: I, pair: (usize, usize), target: usize) -> Result<DensityMatrix>
where
    I: IntoIterator<Item = (usize, usize, Complex64)>,
{
    let split = split_table(n, pair);
    let weights = slot_weights(&BellSymbol::ALL.map(bell_state_vector));
    let mut next = DensityMatrix::zeros(n - 2)?;
    let dr = next.dim();
    let bit = 1 << (n - 3 - target);
    // per outcome: index flip from X^bt and sign from Z^ph
    let flips = BellSymbol::ALL.map(|x| if x.bt { bit } else { 0 });
    let signs = BellSymbol::ALL.map(|x| {
        (0..dr)
            .map(|k| if x.ph && k & bit != 0 { -1.0 } else { 1.0 })
            .collect::<Vec<f64>>()
    });
    for (row, col, value) in entries {
        let ((r, pr), (c, pc)) = (split[row], split[col]);
        for &(k, w) in &weights[pr * 4 + pc] {
            let (r, c) = (r ^ flips[k], c ^ flips[k]);
            next.data[r * dr + c] += w * value * (signs[k][r] * signs[k][c]);
        }
    }
    Ok(next)
}

/// Nonzero entries of `factors[0] ⊗ factors[1] ⊗ …`.
fn kron_entries(factors: &[DensityMatrix]) -> Vec<(usize, usize, Complex64)> {
    let mut entries = vec![(0usize, 0usize, ONE)];
    for f in factors {
        let d = f.dim();
        let nz: Vec<_> = f.nonzeros().collect();
        entries = entries
            .iter()
            .flat_map(|&(r, c, v)| nz.iter().map(move |&(r2, c2, w)| (r * d + r2, c * d + c2, v * w)))
            .collect();
    }
    entries
}

fn outcomes_from(posts: Vec<DensityMatrix>) -> Vec<SwapOutcome> {
    BellSymbol::ALL
        .into_iter()
        .zip(posts)
        .map(|(x, mut post)| {
            let probability = post.trace().re;
            let degenerate = probability <= DM_TOL;
            if !degenerate {
                post.scale(1.0 / probability);
            }
            SwapOutcome {
                outcome: x,
                probability: probability.max(0.0),
                post_state: post,
                degenerate,
            }
        })
        .collect()
}

fn check_pair(n: usize, (i, j): (usize, usize)) -> Result<()> {
    if n < 4 {
        return Err(Error::Oracle(format!("Bell swap needs >= 4 qubits, got {n}")));
    }
    if i == j || i >= n || j >= n {
        return Err(Error::Oracle(format!("bad measured pair ({i},{j}) on {n} qubits")));
    }
    Ok(())
}

/// Bell measurement of qubits `(first, second)`, one entry per outcome.
pub fn bell_swap(
    joint: &DensityMatrix,
    measured_pair: (usize, usize),
) -> Result<Vec<SwapOutcome>> {
    let n = joint.qubits();
    check_pair(n, measured_pair)?;
    let projectors = BellSymbol::ALL.map(bell_state_vector);
    let posts = project_pair(n, joint.nonzeros(), measured_pair, &projectors)?;
    Ok(outcomes_from(posts))
}

/// Applies `X^bt` then `Z^ph` to `target`, mapping `|φ_{s+x}⟩` to `|φ_s⟩` up to
/// a global phase when `target` is one half of the pair.
pub fn pauli_correct(state: &DensityMatrix, outcome: BellSymbol, target: usize) -> DensityMatrix {
    let mut out = DensityMatrix {
        qubits: state.qubits,
        data: vec![ZERO; state.data.len()],
    };
    add_corrected(&mut out, state, outcome, target, 1.0);
    out
}

// acc += weight · (X^bt Z^ph) ρ (X^bt Z^ph)†, using that the correction is a
// signed permutation: entry (r, c) picks up s(r)·s(c)·ρ[r⊕f][c⊕f].
fn add_corrected(acc: &mut DensityMatrix, state: &DensityMatrix, outcome: BellSymbol, target: usize, weight: f64) {
    let d = state.dim();
    let bit = 1 << (state.qubits - 1 - target);
    let flip = if outcome.bt { bit } else { 0 };
    let sign = |k: usize| if outcome.ph && k & bit != 0 { -1.0 } else { 1.0 };
    for (row, col, v) in state.nonzeros() {
        let (r, c) = (row ^ flip, col ^ flip);
        acc.data[r * d + c] += v * (weight * sign(r) * sign(c));
    }
}

/// Order in which repeaters perform their Bell measurements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SwapOrder {
    #[default]
    LeftToRight,
    RightToLeft,
}

/// Exact end-to-end Bell-diagonal state of a chain of honest links.
pub fn simulate_chain_exact(links: &[BellDiagonal]) -> Result<BellDiagonal> {
    simulate_chain_exact_ordered(links, SwapOrder::LeftToRight)
}

pub fn simulate_chain_exact_ordered(
    links: &[BellDiagonal],
    order: SwapOrder,
) -> Result<BellDiagonal> {
    if links.is_empty() || links.len() > MAX_LINKS {
        return Err(Error::Oracle(format!(
            "{} links outside 1..={MAX_LINKS}",
            links.len()
        )));
    }
    // A product of valid states is valid, so checking the factors suffices.
    let factors: Vec<DensityMatrix> = links.iter().map(bell_diagonal_dm).collect();
    for f in &factors {
        f.validate(DM_TOL)?;
    }
    // Left-to-right: repeater next to Alice; Alice corrects qubit 0.
    // Right-to-left: repeater next to Bob; Bob corrects the last qubit.
    let site = |n: usize| match order {
        SwapOrder::LeftToRight => ((1, 2), 0),
        SwapOrder::RightToLeft => ((n - 3, n - 2), n - 3),
    };
    let mut state = if factors.len() == 1 {
        factors[0].clone()
    } else {
        // The full register is held as its nonzero entries; a dense 8-qubit
        // matrix is mostly zeros for a product of Bell-diagonal links.
        let n = 2 * factors.len();
        let (pair, target) = site(n);
        swap_and_correct(n, kron_entries(&factors), pair, target)?
    };
    // swaps and corrections preserve positivity; the final state gets the
    // full check
    state.validate_hermitian_trace(DM_TOL)?;
    while state.qubits() > 2 {
        let n = state.qubits();
        let (pair, target) = site(n);
        state = swap_and_correct(n, state.nonzeros(), pair, target)?;
        state.validate_hermitian_trace(DM_TOL)?;
    }

    state.validate(DM_TOL)?;
    let probs = bell_decomposition(&state)?;
    let dist = BellDiagonal::with_tolerance(probs.map(|p| p.max(0.0)), DM_TOL)?;
    let rebuilt = bell_diagonal_dm(&dist);
    let off = rebuilt.max_abs_diff(&state);
    if off > DM_TOL {
        return Err(Error::Oracle(format!(
            "final state not Bell-diagonal (max deviation {off:e})"
        )));
    }
    Ok(dist)
}

/// Measurement basis for the two-party disagreement check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Basis {
    Z,
    X,
}

/// Probability that two parties measuring both qubits of `rho` in `basis`
/// obtain different outcomes, computed from the outcome projectors.
pub fn disagreement_probability(rho: &DensityMatrix, basis: Basis) -> Result<f64> {
    if rho.qubits() != 2 {
        return Err(Error::Oracle("disagreement needs a two-qubit state".into()));
    }
    let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
    let single: [[Complex64; 2]; 2] = match basis {
        Basis::Z => [[ONE, ZERO], [ZERO, ONE]],
        Basis::X => [[h, h], [h, -h]],
    };
    let mut p = 0.0;
    for a in 0..2 {
        for b in 0..2 {
            if a == b {
                continue;
            }
            let mut psi = [ZERO; 4];
            for (ia, va) in single[a].iter().enumerate() {
                for (ib, vb) in single[b].iter().enumerate() {
                    psi[2 * ia + ib] = va * vb;
                }
            }
            p += rho.expectation(&psi);
        }
    }
    Ok(p)
}
