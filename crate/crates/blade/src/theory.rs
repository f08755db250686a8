//! Fitness-level machinery: improvement-probability lower bounds, the
//! single-client bound, the distributed bound, and the simplified
//! linear-speedup bound.

use crate::error::{Error, Result};
use crate::genome::Problem;

/// Fitness-level partition with improvement-probability lower bounds
/// s_1..s_{m-1} (the top level has no bound: no room for improvement).
#[derive(Clone, Debug)]
pub struct FitnessLevels {
    pub m: usize,
    pub s: Vec<f64>,
}

impl FitnessLevels {
    fn check(self) -> Result<Self> {
        if self.s.len() != self.m - 1 {
            return Err(Error::Config(format!(
                "expected {} level bounds, got {}",
                self.m - 1,
                self.s.len()
            )));
        }
        if self.s.iter().any(|&p| !(p > 0.0 && p <= 1.0)) {
            return Err(Error::Config("level bounds must lie in (0, 1]".into()));
        }
        Ok(self)
    }
}

pub const ALLONES_LEVELS_MAX_N: usize = 16;

/// Standard single-bit-flip lower bounds per fitness level.
///
/// OneMax: from fitness i, flip exactly one of the n-i zero bits and keep
/// the rest. LeadingOnes: flip the first zero bit and keep the i-bit
/// prefix. AllOnes: two levels; s_1 is the worst case over fitness-0
/// genotypes of the exact probability that one mutation reaches the
/// optimum.
pub fn levels(problem: Problem, n: usize, mu: f64) -> Result<FitnessLevels> {
    if !(0.0..1.0).contains(&mu) || mu == 0.0 {
        return Err(Error::Config(format!("mu={mu} must be in (0, 1)")));
    }
    if n < 2 {
        return Err(Error::Config(format!("n={n} must be at least 2")));
    }
    match problem {
        Problem::OneMax => {
            let s = (0..n)
                .map(|i| (n - i) as f64 * mu * (1.0 - mu).powi(n as i32 - 1))
                .collect();
            FitnessLevels { m: n + 1, s }.check()
        }
        Problem::LeadingOnes => {
            let s = (0..n).map(|i| mu * (1.0 - mu).powi(i as i32)).collect();
            FitnessLevels { m: n + 1, s }.check()
        }
        Problem::AllOnes => {
            if n > ALLONES_LEVELS_MAX_N {
                return Err(Error::Capacity(format!(
                    "AllOnes levels supported for n <= {ALLONES_LEVELS_MAX_N}, got {n}"
                )));
            }
            // from a genotype with k zeros, the optimum is hit by flipping
            // exactly those k bits: mu^k (1-mu)^(n-k); take the worst case
            let worst = (1..=n)
                .map(|k| mu.powi(k as i32) * (1.0 - mu).powi((n - k) as i32))
                .fold(f64::INFINITY, f64::min);
            FitnessLevels { m: 2, s: vec![worst] }.check()
        }
    }
}

/// Expected-evaluation upper bound for a single client: sum of 1/s_i.
pub fn bound_single(levels: &FitnessLevels) -> f64 {
    levels.s.iter().map(|s| 1.0 / s).sum()
}

/// Upper bound with c independent clients synchronized at the same level:
/// per-level escape probability d_i = 1 - (1 - s_i)^c.
pub fn bound_distributed(levels: &FitnessLevels, c: u32) -> f64 {
    assert!(c >= 1);
    levels
        .s
        .iter()
        .map(|&s| {
            // 1 - (1-s)^c evaluated without cancellation for tiny s
            let d = -((-s).ln_1p() * c as f64).exp_m1();
            1.0 / d
        })
        .sum()
}

/// Simplified bound (m-1) + (1/c) * sum of 1/s_i; dominates the
/// distributed bound and makes the linear speedup in c explicit.
pub fn bound_simplified(levels: &FitnessLevels, c: u32) -> f64 {
    assert!(c >= 1);
    (levels.m - 1) as f64 + bound_single(levels) / c as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genome::BitString;
    use proptest::prelude::*;

    #[test]
    fn leadingones_level_example() {
        let l = levels(Problem::LeadingOnes, 2, 0.5).unwrap();
        assert_eq!(l.m, 3);
        assert!((l.s[0] - 0.5).abs() < 1e-15);
        assert!((l.s[1] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn onemax_level_example() {
        // n=2, mu=0.5, level i=1: 1 * 0.5 * 0.5 = 0.25
        let l = levels(Problem::OneMax, 2, 0.5).unwrap();
        assert!((l.s[1] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn all_bounds_in_unit_interval() {
        for problem in [Problem::AllOnes, Problem::OneMax, Problem::LeadingOnes] {
            for n in [2, 5, 10, 16] {
                let l = levels(problem, n, 1.0 / n as f64).unwrap();
                assert_eq!(l.s.len(), l.m - 1);
                assert!(l.s.iter().all(|&s| s > 0.0 && s <= 1.0));
            }
        }
    }

    #[test]
    fn bound_single_example() {
        let l = levels(Problem::LeadingOnes, 2, 0.5).unwrap();
        assert!((bound_single(&l) - 6.0).abs() < 1e-12);
        let one = FitnessLevels { m: 2, s: vec![1.0] };
        assert_eq!(bound_single(&one), 1.0);
    }

    #[test]
    fn bound_distributed_examples() {
        let l = levels(Problem::LeadingOnes, 2, 0.5).unwrap();
        let rel = (bound_distributed(&l, 1) - bound_single(&l)).abs() / bound_single(&l);
        assert!(rel < 1e-12);
        // d = (0.75, 0.4375) -> 1/0.75 + 1/0.4375
        let want = 1.0 / 0.75 + 1.0 / 0.4375;
        assert!((bound_distributed(&l, 2) - want).abs() < 1e-12);
        assert!((want - 3.6190476190476).abs() < 1e-10);
    }

    #[test]
    fn bound_simplified_examples() {
        let l = levels(Problem::LeadingOnes, 2, 0.5).unwrap();
        assert!((bound_simplified(&l, 2) - 5.0).abs() < 1e-12);
        assert!(bound_simplified(&l, 2) >= bound_distributed(&l, 2));
        assert!(bound_simplified(&l, 1) >= bound_single(&l));
    }

    /// Exact one-step improvement probability by enumerating every flip
    /// pattern from a given parent (independent oracle for the s_i).
    fn exact_improvement_probability(problem: Problem, x: BitString, mu: f64) -> f64 {
        let n = x.len();
        let fx = problem.evaluate(x);
        let mut p = 0.0;
        for flips in 0..1u64 << n {
            let y = x.flip(flips);
            if problem.evaluate(y) > fx {
                let k = flips.count_ones();
                p += mu.powi(k as i32) * (1.0 - mu).powi((n as u32 - k) as i32);
            }
        }
        p
    }

    /// A worst-case representative of fitness level i.
    fn level_representative(problem: Problem, n: usize, fitness: usize) -> BitString {
        match problem {
            // all ones packed at the front: exactly `fitness` ones, and the
            // leading block maximizes overlap so improvement needs new bits
            Problem::OneMax => BitString::new((1u64 << fitness) - 1, n),
            Problem::LeadingOnes => {
                // prefix of `fitness` ones, then a zero, then ones (worst
                // case: the tail ones can be destroyed)
                let mut w = (1u64 << fitness) - 1;
                for i in fitness + 1..n {
                    w |= 1 << i;
                }
                BitString::new(w, n)
            }
            Problem::AllOnes => BitString::zeros(n),
        }
    }

    #[test]
    fn level_bounds_sound_against_enumeration() {
        for problem in [Problem::AllOnes, Problem::OneMax, Problem::LeadingOnes] {
            for n in [3, 5, 8] {
                let mu = 1.0 / n as f64;
                let l = levels(problem, n, mu).unwrap();
                for (i, &s) in l.s.iter().enumerate() {
                    let x = level_representative(problem, n, i);
                    let exact = exact_improvement_probability(problem, x, mu);
                    assert!(
                        exact >= s - 1e-12,
                        "{problem:?} n={n} level {i}: exact {exact} < bound {s}"
                    );
                }
            }
        }
    }

    #[test]
    fn leadingones_enumeration_example() {
        // P(improve from "10") at n=2, mu=0.5 equals 0.25 exactly
        let x: BitString = "10".parse().unwrap();
        let exact = exact_improvement_probability(Problem::LeadingOnes, x, 0.5);
        assert!((exact - 0.25).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn smoothing_inequality_holds(x in 0.0f64..=1.0, n in 1e-9f64..100.0) {
            // (1-x)^n <= 1/(1+nx)
            prop_assert!((1.0 - x).powf(n) <= 1.0 / (1.0 + n * x) + 1e-12);
        }

        #[test]
        fn distributed_le_simplified(n in 2usize..=12, c in 1u32..=64, seed in any::<u64>()) {
            let mu = 1.0 / n as f64;
            let problem = match seed % 3 {
                0 => Problem::AllOnes,
                1 => Problem::OneMax,
                _ => Problem::LeadingOnes,
            };
            let l = levels(problem, n, mu).unwrap();
            prop_assert!(bound_distributed(&l, c) <= bound_simplified(&l, c) + 1e-9);
        }

        #[test]
        fn distributed_monotone_in_clients(n in 2usize..=12, seed in any::<u64>()) {
            let mu = 1.0 / n as f64;
            let problem = match seed % 3 {
                0 => Problem::AllOnes,
                1 => Problem::OneMax,
                _ => Problem::LeadingOnes,
            };
            let l = levels(problem, n, mu).unwrap();
            let mut prev = f64::INFINITY;
            for c in 1..=16 {
                let b = bound_distributed(&l, c);
                prop_assert!(b <= prev + 1e-9);
                prev = b;
            }
        }
    }
}
