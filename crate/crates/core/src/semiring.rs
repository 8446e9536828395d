//! `(⊕, ⊙)` operator pairs used to aggregate path scores.
//!
//! Aggregation only needs `⊙` to be left-distributive over `⊕` on the
//! values that occur, which are matching scores in `[0, 1]` and their
//! aggregates in `[0, ∞)`.

use std::fmt;
use std::str::FromStr;

/// Operations of a semiring over `f64`.
pub trait SemiringOps: Copy + Send + Sync {
    /// `⊕`-identity and `⊙`-annihilator.
    fn zero(&self) -> f64;
    /// `⊙`-identity.
    fn one(&self) -> f64;
    fn plus(&self, a: f64, b: f64) -> f64;
    fn times(&self, a: f64, b: f64) -> f64;
    /// Whether results are computed without rounding (min/max only).
    fn is_exact(&self) -> bool {
        false
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Semiring {
    /// `(+, ×, 0, 1)`.
    SumProduct,
    /// `(max, ×, 0, 1)`.
    MaxProduct,
    /// `(max, min, 0, 1)`; operands must lie in `[0, 1]`.
    MaxMin,
}

impl Semiring {
    pub const ALL: [Semiring; 3] = [Semiring::SumProduct, Semiring::MaxProduct, Semiring::MaxMin];

    /// Byte used in cost-volume dumps.
    pub fn code(self) -> u8 {
        match self {
            Semiring::SumProduct => 0,
            Semiring::MaxProduct => 1,
            Semiring::MaxMin => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Self::ALL.into_iter().find(|s| s.code() == code)
    }

    pub fn name(self) -> &'static str {
        match self {
            Semiring::SumProduct => "sum-product",
            Semiring::MaxProduct => "max-product",
            Semiring::MaxMin => "max-min",
        }
    }
}

impl SemiringOps for Semiring {
    #[inline]
    fn zero(&self) -> f64 {
        0.0
    }

    #[inline]
    fn one(&self) -> f64 {
        1.0
    }

    #[inline]
    fn plus(&self, a: f64, b: f64) -> f64 {
        match self {
            Semiring::SumProduct => a + b,
            Semiring::MaxProduct | Semiring::MaxMin => a.max(b),
        }
    }

    #[inline]
    fn times(&self, a: f64, b: f64) -> f64 {
        match self {
            Semiring::SumProduct | Semiring::MaxProduct => a * b,
            Semiring::MaxMin => a.min(b),
        }
    }

    fn is_exact(&self) -> bool {
        matches!(self, Semiring::MaxMin)
    }
}

impl fmt::Display for Semiring {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Semiring {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|sr| sr.name() == s || sr.name().replace('-', "_") == s)
            .ok_or_else(|| format!("unknown semiring {s:?} (expected sum-product, max-product or max-min)"))
    }
}

/// Outcome of [`check_laws`], one flag per law over all samples.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LawReport {
    /// `⊕` and `⊙` are both associative.
    pub associativity: bool,
    /// `⊕` is commutative.
    pub commutativity: bool,
    /// `a ⊙ (b ⊕ c) = (a ⊙ b) ⊕ (a ⊙ c)`.
    pub distributivity: bool,
    /// `zero ⊕ a = a` and `one ⊙ a = a`.
    pub identity: bool,
    /// `zero ⊙ a = zero`.
    pub annihilator: bool,
}

impl LawReport {
    pub fn all(&self) -> bool {
        self.associativity && self.commutativity && self.distributivity && self.identity && self.annihilator
    }
}

/// Relative tolerance used for rounding semirings.
pub const LAW_TOLERANCE: f64 = 1e-12;

fn close<S: SemiringOps>(sr: &S, a: f64, b: f64) -> bool {
    if sr.is_exact() {
        a == b
    } else {
        a == b || (a - b).abs() <= LAW_TOLERANCE * a.abs().max(b.abs())
    }
}

/// Checks the semiring laws on every sampled triple.
pub fn check_laws<S: SemiringOps>(sr: &S, samples: &[(f64, f64, f64)]) -> LawReport {
    let mut r = LawReport {
        associativity: true,
        commutativity: true,
        distributivity: true,
        identity: true,
        annihilator: true,
    };
    let (zero, one) = (sr.zero(), sr.one());
    for &(a, b, c) in samples {
        r.associativity &= close(sr, sr.plus(sr.plus(a, b), c), sr.plus(a, sr.plus(b, c)))
            && close(sr, sr.times(sr.times(a, b), c), sr.times(a, sr.times(b, c)));
        r.commutativity &= close(sr, sr.plus(a, b), sr.plus(b, a));
        r.distributivity &= close(sr, sr.times(a, sr.plus(b, c)), sr.plus(sr.times(a, b), sr.times(a, c)));
        for v in [a, b, c] {
            r.identity &= close(sr, sr.plus(zero, v), v) && close(sr, sr.times(one, v), v);
            r.annihilator &= close(sr, sr.times(zero, v), zero);
        }
    }
    r
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    #[derive(Clone, Copy)]
    struct PlusMax;

    impl SemiringOps for PlusMax {
        fn zero(&self) -> f64 {
            0.0
        }
        fn one(&self) -> f64 {
            0.0
        }
        fn plus(&self, a: f64, b: f64) -> f64 {
            a + b
        }
        fn times(&self, a: f64, b: f64) -> f64 {
            a.max(b)
        }
    }

    fn triples(n: usize) -> Vec<(f64, f64, f64)> {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        (0..n).map(|_| (rng.random(), rng.random(), rng.random())).collect()
    }

    #[test]
    fn worked_examples() {
        let sp = Semiring::SumProduct;
        assert_eq!(sp.times(2.0, sp.plus(3.0, 4.0)), 14.0);
        assert_eq!(sp.plus(sp.times(2.0, 3.0), sp.times(2.0, 4.0)), 14.0);
        let mm = Semiring::MaxMin;
        assert_eq!(mm.times(0.5, mm.plus(0.3, 0.8)), 0.5);
        assert_eq!(mm.plus(mm.times(0.5, 0.3), mm.times(0.5, 0.8)), 0.5);
        for sr in Semiring::ALL {
            assert_eq!(sr.times(sr.zero(), 0.7), sr.zero());
        }
    }

    #[test]
    fn laws_hold_on_random_triples() {
        let samples = triples(1000);
        for sr in Semiring::ALL {
            assert!(check_laws(&sr, &samples).all(), "{sr}");
        }
    }

    #[test]
    fn broken_pair_fails_distributivity() {
        // max(1, 0.3 + 0.4) = 1, but max(1, 0.3) + max(1, 0.4) = 2
        assert!(!check_laws(&PlusMax, &[(1.0, 0.3, 0.4)]).distributivity);
        // with a = 0 and non-negative b, c both sides agree
        assert!(check_laws(&PlusMax, &[(0.0, 0.3, 0.4)]).distributivity);
        let report = check_laws(&PlusMax, &triples(1000));
        assert!(!report.distributivity);
        assert!(report.commutativity);
    }

    #[test]
    fn names_round_trip() {
        for sr in Semiring::ALL {
            assert_eq!(sr.name().parse::<Semiring>().unwrap(), sr);
            assert_eq!(Semiring::from_code(sr.code()), Some(sr));
        }
        assert!("tropical".parse::<Semiring>().is_err());
    }
}
