//! Reconstruction anchored on an all-distinct column, and the closed-form
//! odds that such a column exists.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::model::{ProjectionSet, Token, ValueVector};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LookupStatus {
    Reconstructed,
    Infeasible,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LookupOutcome {
    pub status: LookupStatus,
    pub anchor: Option<usize>,
    pub rows: Vec<ValueVector>,
}

impl LookupOutcome {
    fn infeasible() -> Self {
        LookupOutcome {
            status: LookupStatus::Infeasible,
            anchor: None,
            rows: Vec::new(),
        }
    }
}

/// Columns whose marginal has every token exactly once.
pub fn distinct_columns(proj: &ProjectionSet) -> Vec<usize> {
    let n = proj.row_count();
    (0..proj.dimension())
        .filter(|&c| {
            let m = proj.column_marginal(c);
            m.len() as u64 == n && m.values().all(|&k| k == 1)
        })
        .collect()
}

pub fn lookup_reconstruct(proj: &ProjectionSet) -> LookupOutcome {
    let d = proj.dimension();
    if d < 2 || proj.row_count() == 0 {
        return LookupOutcome::infeasible();
    }
    let Some(anchor) = distinct_columns(proj).into_iter().next() else {
        return LookupOutcome::infeasible();
    };
    let anchor_codes: Vec<u32> = proj.column_marginal(anchor).into_keys().collect();
    let mut rows: Vec<Vec<Option<Token>>> = vec![vec![None; d]; anchor_codes.len()];
    for (r, &code) in anchor_codes.iter().enumerate() {
        rows[r][anchor] = Some(proj.domain(anchor).token(code).clone());
    }
    for other in (0..d).filter(|&c| c != anchor) {
        let (i, j) = (anchor.min(other), anchor.max(other));
        let Some(counts) = proj.pair(i, j) else {
            return LookupOutcome::infeasible();
        };
        for &(a, b) in counts.keys() {
            let (mine, theirs) = if anchor == i { (a, b) } else { (b, a) };
            let r = anchor_codes
                .binary_search(&mine)
                .expect("anchor token present in marginal");
            rows[r][other] = Some(proj.domain(other).token(theirs).clone());
        }
    }
    let rows: Option<Vec<ValueVector>> = rows
        .into_iter()
        .map(|r| r.into_iter().collect::<Option<Vec<_>>>().map(ValueVector::new))
        .collect();
    match rows {
        Some(rows) => LookupOutcome {
            status: LookupStatus::Reconstructed,
            anchor: Some(anchor),
            rows,
        },
        None => LookupOutcome::infeasible(),
    }
}

/// Which form of the duplicate-free-column probability to evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbabilityMode {
    /// `C(I, N) · I^-N`.
    AsPublished,
    /// `I! / ((I - N)! · I^N)`: ordered draws without repetition over ordered
    /// draws with repetition.
    Corrected,
}

/// Largest `N` evaluated with exact rationals.
pub const EXACT_PROBABILITY_LIMIT: u64 = 512;

/// Exact probability that a column of `n` iid uniform draws from `interval`
/// values has no duplicates. `None` when `n` is too large for the exact route.
pub fn column_distinct_probability_exact(
    interval: u64,
    n: u64,
    mode: ProbabilityMode,
) -> Option<BigRational> {
    if n > EXACT_PROBABILITY_LIMIT {
        return None;
    }
    if n > interval {
        return Some(BigRational::zero());
    }
    let i = BigInt::from(interval);
    let mut falling = BigInt::one();
    for k in 0..n {
        falling *= BigInt::from(interval - k);
    }
    let numer = match mode {
        ProbabilityMode::Corrected => falling,
        ProbabilityMode::AsPublished => {
            let mut fact = BigInt::one();
            for k in 2..=n {
                fact *= BigInt::from(k);
            }
            falling / fact
        }
    };
    Some(BigRational::new(numer, num_traits::pow(i, n as usize)))
}

pub fn column_distinct_probability(interval: u64, n: u64, mode: ProbabilityMode) -> f64 {
    assert!(interval >= 1 && n >= 1, "interval and n must be positive");
    if n > interval {
        return 0.0;
    }
    if let Some(p) = column_distinct_probability_exact(interval, n, mode) {
        return p.to_f64().unwrap_or(0.0);
    }
    let (i, nn) = (interval as f64, n as f64);
    let mut ln = ln_gamma(i + 1.0) - ln_gamma(i - nn + 1.0) - nn * i.ln();
    if mode == ProbabilityMode::AsPublished {
        ln -= ln_gamma(nn + 1.0);
    }
    ln.exp()
}

/// Probability that no column is duplicate-free, columns independent.
pub fn lookup_failure_probability(intervals: &[u64], n: u64, mode: ProbabilityMode) -> f64 {
    intervals
        .iter()
        .map(|&i| 1.0 - column_distinct_probability(i, n, mode))
        .product()
}

pub fn lookup_failure_probability_exact(
    intervals: &[u64],
    n: u64,
    mode: ProbabilityMode,
) -> Option<BigRational> {
    intervals.iter().try_fold(BigRational::one(), |acc, &i| {
        Some(acc * (BigRational::one() - column_distinct_probability_exact(i, n, mode)?))
    })
}
