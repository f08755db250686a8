//! Exact Markov-chain analysis of the (1+1) EA for small N.
//!
//! Builds the baseline and blanket-augmented transition matrices, checks
//! stochasticity, computes eigenvalue spectra, iterates distributions to
//! convergence, and solves exact expected absorption times. This is the
//! exact oracle that the Monte Carlo results are validated against.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::genome::{BitString, Problem};
use crate::linalg::{eigenvalues, lu_factor, Mat};
use crate::mutation::blanket_rate;

pub const ROW_SUM_TOL: f64 = 1e-12;
pub const BASELINE_MAX_N: usize = 10;
pub const BLANKET_MAX_N: usize = 4;

/// State descriptor for a chain row/column.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StateLabel {
    /// Baseline chain: a genotype.
    Genotype(BitString),
    /// Blanket chain: a non-optimal genotype and the blanket applied to it.
    Masked(BitString, BitString),
    /// The single absorbing state of the blanket chain.
    Absorbed,
}

impl std::fmt::Display for StateLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            StateLabel::Genotype(g) => write!(f, "{g}"),
            StateLabel::Masked(g, b) => write!(f, "{g}|{b}"),
            StateLabel::Absorbed => f.write_str("ABSORBED"),
        }
    }
}

/// Labeled dense row-stochastic matrix over EA states.
#[derive(Clone, Debug)]
pub struct TransitionMatrix {
    mat: Mat,
    labels: Vec<StateLabel>,
}

impl TransitionMatrix {
    pub fn dim(&self) -> usize {
        self.mat.dim()
    }

    pub fn labels(&self) -> &[StateLabel] {
        &self.labels
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.mat[(i, j)]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.mat.row(i)
    }

    /// Row indices whose row is a unit vector on self.
    pub fn absorbing_states(&self) -> Vec<usize> {
        (0..self.dim())
            .filter(|&i| {
                (self.mat[(i, i)] - 1.0).abs() <= ROW_SUM_TOL
                    && (0..self.dim()).all(|j| j == i || self.mat[(i, j)].abs() <= ROW_SUM_TOL)
            })
            .collect()
    }

    fn check_stochastic(&self) {
        for i in 0..self.dim() {
            let sum: f64 = self.row(i).iter().sum();
            debug_assert!(
                (sum - 1.0).abs() <= ROW_SUM_TOL,
                "row {i} sums to {sum}"
            );
            debug_assert!(self.row(i).iter().all(|&p| (-ROW_SUM_TOL..=1.0 + ROW_SUM_TOL).contains(&p)));
        }
    }
}

/// All genotypes of length n sorted by their textual rendering, which is
/// the ordering used for state labels everywhere.
fn genotypes_by_display(n: usize) -> Vec<BitString> {
    let mut gs: Vec<BitString> = (0..1u64 << n).map(|w| BitString::new(w, n)).collect();
    gs.sort_by_key(|g| g.to_string());
    gs
}

/// Probability of flipping exactly the bits of `pattern` out of `total`
/// positions when each flips independently with probability `rate`.
fn pattern_prob(rate: f64, flipped: u32, total: u32) -> f64 {
    let stay = 1.0 - rate;
    let mut p = 1.0;
    for _ in 0..flipped {
        p *= rate;
    }
    for _ in 0..total - flipped {
        p *= stay;
    }
    p
}

/// Transition matrix of the baseline (1+1) EA: states are all genotypes,
/// transitions compose the mutation kernel with elitist selection.
pub fn build_baseline_chain(problem: Problem, n: usize, mu: f64) -> Result<TransitionMatrix> {
    if !(1..=BASELINE_MAX_N).contains(&n) {
        return Err(Error::Capacity(format!(
            "baseline chain needs n in 1..={BASELINE_MAX_N}, got {n} (2^n states)"
        )));
    }
    let genotypes = genotypes_by_display(n);
    let index_of = |g: BitString| genotypes.iter().position(|&h| h == g).unwrap();
    let dim = genotypes.len();
    let mut mat = Mat::zeros(dim);
    for (i, &x) in genotypes.iter().enumerate() {
        let fx = problem.evaluate(x);
        for flips in 0..1u64 << n {
            let p = pattern_prob(mu, flips.count_ones(), n as u32);
            let y = x.flip(flips);
            let j = if problem.evaluate(y) >= fx { index_of(y) } else { i };
            mat[(i, j)] += p;
        }
    }
    let tm = TransitionMatrix {
        mat,
        labels: genotypes.into_iter().map(StateLabel::Genotype).collect(),
    };
    tm.check_stochastic();
    Ok(tm)
}

/// Transition matrix of the blanket (1+1) EA: states are (non-optimal
/// genotype, blanket) pairs plus one absorbing state. Every accepted
/// non-optimal successor splits uniformly over all 2^n - 2 next blankets.
pub fn build_blanket_chain(problem: Problem, n: usize, mu: f64) -> Result<TransitionMatrix> {
    if !(2..=BLANKET_MAX_N).contains(&n) {
        return Err(Error::Capacity(format!(
            "blanket chain needs n in 2..={BLANKET_MAX_N}, got {n}"
        )));
    }
    let genotypes: Vec<BitString> = genotypes_by_display(n)
        .into_iter()
        .filter(|&g| !problem.is_optimal(g))
        .collect();
    let blankets: Vec<BitString> = genotypes_by_display(n)
        .into_iter()
        .filter(|b| {
            let c = b.count_ones() as usize;
            c >= 1 && c < n
        })
        .collect();
    let nb = blankets.len() as f64;
    let mut labels: Vec<StateLabel> = Vec::new();
    for &g in &genotypes {
        for &b in &blankets {
            labels.push(StateLabel::Masked(g, b));
        }
    }
    labels.push(StateLabel::Absorbed);
    let dim = labels.len();
    let absorbed = dim - 1;
    let index_of = |g: BitString, b: BitString| -> usize {
        let gi = genotypes.iter().position(|&h| h == g).unwrap();
        let bi = blankets.iter().position(|&h| h == b).unwrap();
        gi * blankets.len() + bi
    };
    let mut mat = Mat::zeros(dim);
    mat[(absorbed, absorbed)] = 1.0;
    for &x in &genotypes {
        let fx = problem.evaluate(x);
        for &b in &blankets {
            let i = index_of(x, b);
            let preserved = b.count_ones();
            let rate = blanket_rate(mu, n, preserved);
            let free: Vec<usize> = (0..n).filter(|&k| b.word() >> k & 1 == 0).collect();
            for pattern in 0u64..1 << free.len() {
                let mut flips = 0u64;
                for (bit, &pos) in free.iter().enumerate() {
                    if pattern >> bit & 1 == 1 {
                        flips |= 1 << pos;
                    }
                }
                let p = pattern_prob(rate, pattern.count_ones(), free.len() as u32);
                if p == 0.0 {
                    continue;
                }
                let y = x.flip(flips);
                let accepted = problem.evaluate(y) >= fx;
                let successor = if accepted { y } else { x };
                if problem.is_optimal(successor) {
                    mat[(i, absorbed)] += p;
                } else {
                    for &b2 in &blankets {
                        mat[(i, index_of(successor, b2))] += p / nb;
                    }
                }
            }
        }
    }
    let tm = TransitionMatrix { mat, labels };
    tm.check_stochastic();
    Ok(tm)
}

/// Eigenvalues sorted by modulus, descending.
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub eigenvalues: Vec<Complex64>,
}

impl Spectrum {
    /// Modulus of the subdominant eigenvalue.
    pub fn subdominant_modulus(&self) -> f64 {
        self.eigenvalues.get(1).map(|e| e.norm()).unwrap_or(0.0)
    }
}

pub const SPECTRUM_MAX_DIM: usize = 256;

pub fn spectrum(m: &TransitionMatrix) -> Result<Spectrum> {
    if m.dim() > SPECTRUM_MAX_DIM {
        return Err(Error::Capacity(format!(
            "spectrum supports dimension <= {SPECTRUM_MAX_DIM}, got {}",
            m.dim()
        )));
    }
    let eigenvalues = eigenvalues(&m.mat)?;
    Ok(Spectrum { eigenvalues })
}

/// The distribution an absorbing chain converges to from a uniform start
/// over all states, via exact absorption probabilities.
fn limiting_distribution(m: &TransitionMatrix) -> Result<Vec<f64>> {
    let dim = m.dim();
    let absorbing = m.absorbing_states();
    if absorbing.is_empty() {
        return Err(Error::Config("chain has no absorbing state".into()));
    }
    let transient: Vec<usize> = (0..dim).filter(|i| !absorbing.contains(i)).collect();
    let t = transient.len();
    let mut iq = Mat::identity(t);
    for (a, &i) in transient.iter().enumerate() {
        for (b, &j) in transient.iter().enumerate() {
            iq[(a, b)] -= m.entry(i, j);
        }
    }
    let lu = lu_factor(&iq)
        .map_err(|_| Error::Numerical("chain is not absorbing from every state".into()))?;
    let init = 1.0 / dim as f64;
    let mut limit = vec![0.0; dim];
    for &j in &absorbing {
        // h_i = P(absorbed at j | start i) over transient states
        let r: Vec<f64> = transient.iter().map(|&i| m.entry(i, j)).collect();
        let h = lu.solve(&r);
        limit[j] = init + init * h.iter().sum::<f64>();
    }
    Ok(limit)
}

const MAX_CONVERGENCE_STEPS: u64 = 10_000_000;

/// Steps for the uniform initial distribution to come within total-variation
/// distance `epsilon` of the chain's absorbing limit.
pub fn iterate_to_convergence(m: &TransitionMatrix, epsilon: f64) -> Result<u64> {
    let limit = limiting_distribution(m)?;
    let dim = m.dim();
    let mut v = vec![1.0 / dim as f64; dim];
    let tv = |v: &[f64]| -> f64 {
        0.5 * v
            .iter()
            .zip(limit.iter())
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
    };
    let mut steps = 0u64;
    while tv(&v) >= epsilon {
        if steps >= MAX_CONVERGENCE_STEPS {
            return Err(Error::Numerical(format!(
                "no convergence to epsilon={epsilon} within {MAX_CONVERGENCE_STEPS} steps"
            )));
        }
        let mut next = vec![0.0; dim];
        for (i, &vi) in v.iter().enumerate() {
            if vi == 0.0 {
                continue;
            }
            for (j, &p) in m.row(i).iter().enumerate() {
                next[j] += vi * p;
            }
        }
        v = next;
        steps += 1;
    }
    Ok(steps)
}

/// Exact expected steps to absorption.
#[derive(Clone, Debug)]
pub struct AbsorptionTimes {
    /// Transient-state indices into the chain's labels, in label order.
    pub transient_states: Vec<usize>,
    /// Expected steps to absorption per transient state (same order).
    pub times: Vec<f64>,
    /// Mean over transient states only.
    pub transient_mean: f64,
    /// Mean under the uniform distribution over all chain states
    /// (absorbing states contribute zero).
    pub uniform_mean: f64,
}

/// Solve (I - Q) t = 1 over the transient block by direct elimination.
pub fn expected_absorption(m: &TransitionMatrix) -> Result<AbsorptionTimes> {
    let dim = m.dim();
    let absorbing = m.absorbing_states();
    if absorbing.is_empty() {
        return Err(Error::Config("chain has no absorbing state".into()));
    }
    let transient: Vec<usize> = (0..dim).filter(|i| !absorbing.contains(i)).collect();
    let t = transient.len();
    let mut iq = Mat::identity(t);
    for (a, &i) in transient.iter().enumerate() {
        for (b, &j) in transient.iter().enumerate() {
            iq[(a, b)] -= m.entry(i, j);
        }
    }
    let lu = lu_factor(&iq)
        .map_err(|_| Error::Numerical("singular system: chain is not absorbing".into()))?;
    let times = lu.solve(&vec![1.0; t]);
    let transient_mean = times.iter().sum::<f64>() / t.max(1) as f64;
    let uniform_mean = times.iter().sum::<f64>() / dim as f64;
    Ok(AbsorptionTimes {
        transient_states: transient,
        times,
        transient_mean,
        uniform_mean,
    })
}

impl AbsorptionTimes {
    /// Expected time to absorption when the start is drawn the way the EA
    /// draws it: genotype uniform over all 2^n strings, blanket (if any)
    /// uniform. Genotype states in the labels are grouped accordingly;
    /// optimal genotypes contribute zero.
    pub fn ea_init_mean(&self, m: &TransitionMatrix, n: usize) -> f64 {
        let per_genotype = 1.0 / (1u64 << n) as f64;
        let mut grouped: std::collections::HashMap<BitString, (f64, u32)> =
            std::collections::HashMap::new();
        for (k, &i) in self.transient_states.iter().enumerate() {
            let g = match m.labels()[i] {
                StateLabel::Genotype(g) => g,
                StateLabel::Masked(g, _) => g,
                StateLabel::Absorbed => continue,
            };
            let e = grouped.entry(g).or_insert((0.0, 0));
            e.0 += self.times[k];
            e.1 += 1;
        }
        grouped
            .values()
            .map(|(sum, count)| per_genotype * sum / *count as f64)
            .sum()
    }
}
