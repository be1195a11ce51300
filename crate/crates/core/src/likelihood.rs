//! Inferred likelihood for candidates the deduction rules could not settle.
//!
//! Every edge of the projections whose required count is not yet met by
//! deduced rows yields a statement "at least x of the undeduced candidates
//! containing this edge are original". Candidates are scored by summing, over
//! the statements they appear in, `1/|S|` (or `x/|S|`), and the top `s` are
//! selected. [`exact_cover_frequencies`] is the exhaustive reference: it
//! enumerates every size-`s` subset satisfying all statements.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::deduction::DeductionResult;
use crate::error::{Error, Result};
use crate::graph::{CandidateSet, Edge, Vertex};
use crate::model::ProjectionSet;

pub const DEFAULT_ORACLE_CAP: u128 = 10_000_000;

/// Statement count up to which scores are kept as exact rationals.
pub const EXACT_SCORE_LIMIT: usize = 10_000;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeStatement {
    pub edge: Edge,
    /// At least this many of `members` are original.
    pub required: u64,
    /// Undeduced candidates containing the edge, ascending.
    pub members: Vec<usize>,
    /// The projection count minus deduced coverage exceeded `members.len()`
    /// and was clamped. Only duplicate original rows can cause this.
    #[serde(default)]
    pub saturated: bool,
}

pub fn build_statements(
    proj: &ProjectionSet,
    cands: &CandidateSet,
    ded: &DeductionResult,
) -> Result<Vec<EdgeStatement>> {
    let mut out = Vec::new();
    for ((i, j), counts) in proj.pairs() {
        for (&(a, b), &multiplicity) in counts {
            let edge = Edge::new(
                Vertex { column: i, code: a },
                Vertex { column: j, code: b },
            );
            let covered = ded.coverage_of(&edge);
            let remaining = multiplicity.saturating_sub(covered);
            if remaining == 0 {
                continue;
            }
            let members: Vec<usize> = cands
                .edge_members(&edge)
                .iter()
                .copied()
                .filter(|&k| !ded.contains(k))
                .collect();
            if members.is_empty() {
                if covered == 0 {
                    return Err(Error::InconsistentInstance {
                        edge,
                        required: remaining,
                        available: 0,
                    });
                }
                // the excess is explained by a deduced row occurring more than once
                continue;
            }
            let saturated = remaining > members.len() as u64;
            out.push(EdgeStatement {
                edge,
                required: remaining.min(members.len() as u64),
                members,
                saturated,
            });
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightMode {
    /// Each statement adds `1/|S|` to its members.
    #[default]
    Reciprocal,
    /// Each statement adds `x/|S|` to its members.
    Ratio,
}

impl FromStr for WeightMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "reciprocal" => Ok(WeightMode::Reciprocal),
            "ratio" => Ok(WeightMode::Ratio),
            other => Err(Error::InvalidOptions(format!("unknown weight mode {other:?}"))),
        }
    }
}

impl fmt::Display for WeightMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WeightMode::Reciprocal => "reciprocal",
            WeightMode::Ratio => "ratio",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Score {
    pub value: f64,
    pub exact: Option<BigRational>,
}

impl Score {
    pub fn zero(exact: bool) -> Self {
        Score {
            value: 0.0,
            exact: exact.then(BigRational::zero),
        }
    }

    /// Exact comparison when both sides carry a rational.
    pub fn compare(&self, other: &Score) -> Ordering {
        match (&self.exact, &other.exact) {
            (Some(a), Some(b)) => a.cmp(b),
            _ => self.value.total_cmp(&other.value),
        }
    }

    pub fn exact_string(&self) -> Option<String> {
        self.exact.as_ref().map(ToString::to_string)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScoredCandidate {
    pub candidate: usize,
    pub score: Score,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScoredCandidates {
    pub mode: WeightMode,
    /// One entry per universe candidate, ascending by candidate index.
    pub entries: Vec<ScoredCandidate>,
}

impl ScoredCandidates {
    pub fn score_of(&self, candidate: usize) -> Option<&Score> {
        self.entries
            .binary_search_by_key(&candidate, |e| e.candidate)
            .ok()
            .map(|k| &self.entries[k].score)
    }
}

pub fn score_candidates(
    stmts: &[EdgeStatement],
    universe: &[usize],
    mode: WeightMode,
) -> ScoredCandidates {
    let mut universe = universe.to_vec();
    universe.sort_unstable();
    universe.dedup();
    let exact = stmts.len() <= EXACT_SCORE_LIMIT;
    let slot: BTreeMap<usize, usize> = universe.iter().enumerate().map(|(k, &c)| (c, k)).collect();
    let mut values = vec![0.0f64; universe.len()];
    let mut rationals = vec![BigRational::zero(); if exact { universe.len() } else { 0 }];
    for st in stmts {
        let c = st.members.len() as u64;
        let numer = match mode {
            WeightMode::Reciprocal => 1,
            WeightMode::Ratio => st.required,
        };
        let w = numer as f64 / c as f64;
        let wq = exact.then(|| BigRational::new(BigInt::from(numer), BigInt::from(c)));
        for m in &st.members {
            let Some(&k) = slot.get(m) else {
                debug_assert!(false, "statement member {m} outside the universe");
                continue;
            };
            values[k] += w;
            if let Some(wq) = &wq {
                rationals[k] += wq;
            }
        }
    }
    let mut rationals = rationals.into_iter();
    let entries = universe
        .into_iter()
        .zip(values)
        .map(|(candidate, value)| ScoredCandidate {
            candidate,
            score: Score {
                value,
                exact: if exact { rationals.next() } else { None },
            },
        })
        .collect();
    ScoredCandidates { mode, entries }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TieReport {
    /// Lowest score among the chosen candidates.
    pub boundary: Score,
    /// Candidates in the universe holding exactly the boundary score.
    pub tied: usize,
    /// How many of the tied candidates were chosen.
    pub tied_chosen: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Selection {
    /// Chosen candidate indices, best score first.
    pub chosen: Vec<usize>,
    pub requested: usize,
    pub slots: usize,
    /// `requested` exceeded the universe size.
    pub clamped: bool,
    /// Present when some unchosen candidate shares the boundary score.
    pub tie: Option<TieReport>,
}

impl Selection {
    pub fn contains(&self, candidate: usize) -> bool {
        self.chosen.contains(&candidate)
    }
}

/// Top-`s` candidates by score; ties broken by candidate index, which is
/// lexicographic row order.
pub fn select_rows(scores: &ScoredCandidates, s: usize) -> Selection {
    let mut ranked: Vec<&ScoredCandidate> = scores.entries.iter().collect();
    ranked.sort_by(|a, b| b.score.compare(&a.score).then(a.candidate.cmp(&b.candidate)));
    let slots = s.min(ranked.len());
    let chosen: Vec<usize> = ranked[..slots].iter().map(|e| e.candidate).collect();
    let tie = if slots > 0 && slots < ranked.len() {
        let boundary = &ranked[slots - 1].score;
        let next = &ranked[slots].score;
        (boundary.compare(next) == Ordering::Equal).then(|| TieReport {
            boundary: boundary.clone(),
            tied: ranked
                .iter()
                .filter(|e| e.score.compare(boundary) == Ordering::Equal)
                .count(),
            tied_chosen: ranked[..slots]
                .iter()
                .filter(|e| e.score.compare(boundary) == Ordering::Equal)
                .count(),
        })
    } else {
        None
    };
    Selection {
        chosen,
        requested: s,
        slots,
        clamped: s > ranked.len(),
        tie,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoverFrequencies {
    pub solutions: u64,
    /// (candidate, number of solutions containing it), ascending by candidate.
    pub appearances: Vec<(usize, u64)>,
}

impl CoverFrequencies {
    pub fn proportion(&self, candidate: usize) -> Option<f64> {
        self.appearances
            .iter()
            .find(|(c, _)| *c == candidate)
            .map(|&(_, k)| k as f64 / self.solutions as f64)
    }

    pub fn count(&self, candidate: usize) -> Option<u64> {
        self.appearances
            .iter()
            .find(|(c, _)| *c == candidate)
            .map(|&(_, k)| k)
    }
}

pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for t in 0..k {
        acc = match acc.checked_mul((n - t) as u128) {
            Some(v) => v / (t as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// Counts every size-`s` subset of `universe` meeting all statements, and how
/// often each candidate occurs among them.
pub fn exact_cover_frequencies(
    stmts: &[EdgeStatement],
    universe: &[usize],
    s: usize,
    cap: u128,
) -> Result<CoverFrequencies> {
    let mut universe = universe.to_vec();
    universe.sort_unstable();
    universe.dedup();
    let u = universe.len();
    let subsets = binomial(u, s);
    if subsets > cap {
        return Err(Error::OracleTooLarge {
            universe: u,
            slots: s,
            subsets,
            cap,
        });
    }
    let pos: BTreeMap<usize, usize> = universe.iter().enumerate().map(|(k, &c)| (c, k)).collect();
    let mut member_of: Vec<Vec<usize>> = vec![Vec::new(); u];
    for (si, st) in stmts.iter().enumerate() {
        for m in &st.members {
            if let Some(&k) = pos.get(m) {
                member_of[k].push(si);
            }
        }
    }
    let required: Vec<u64> = stmts.iter().map(|s| s.required).collect();
    let walker = CoverWalk {
        member_of: &member_of,
        required: &required,
        s,
        u,
    };
    let (solutions, appearances) = if s == 0 {
        walker.count_from(&[])
    } else {
        (0..u)
            .into_par_iter()
            .map(|first| walker.count_from(&[first]))
            .reduce(
                || (0, vec![0; u]),
                |(n1, mut a1), (n2, a2)| {
                    a1.iter_mut().zip(a2).for_each(|(x, y)| *x += y);
                    (n1 + n2, a1)
                },
            )
    };
    if solutions == 0 {
        return Err(Error::InfeasibleStatements { slots: s });
    }
    Ok(CoverFrequencies {
        solutions,
        appearances: universe.into_iter().zip(appearances).collect(),
    })
}

struct CoverWalk<'a> {
    member_of: &'a [Vec<usize>],
    required: &'a [u64],
    s: usize,
    u: usize,
}

impl CoverWalk<'_> {
    fn count_from(&self, prefix: &[usize]) -> (u64, Vec<u64>) {
        let mut hits = vec![0u64; self.required.len()];
        let mut picked = Vec::with_capacity(self.s);
        let mut appearances = vec![0u64; self.u];
        let mut solutions = 0;
        for &p in prefix {
            self.pick(p, &mut hits, &mut picked);
        }
        let next = prefix.last().map_or(0, |&p| p + 1);
        self.walk(next, &mut hits, &mut picked, &mut solutions, &mut appearances);
        (solutions, appearances)
    }

    fn pick(&self, k: usize, hits: &mut [u64], picked: &mut Vec<usize>) {
        picked.push(k);
        for &st in &self.member_of[k] {
            hits[st] += 1;
        }
    }

    fn unpick(&self, hits: &mut [u64], picked: &mut Vec<usize>) {
        let k = picked.pop().unwrap();
        for &st in &self.member_of[k] {
            hits[st] -= 1;
        }
    }

    fn walk(
        &self,
        next: usize,
        hits: &mut [u64],
        picked: &mut Vec<usize>,
        solutions: &mut u64,
        appearances: &mut [u64],
    ) {
        if picked.len() == self.s {
            if hits.iter().zip(self.required).all(|(h, r)| h >= r) {
                *solutions += 1;
                for &k in picked.iter() {
                    appearances[k] += 1;
                }
            }
            return;
        }
        let need = self.s - picked.len();
        for k in next..=self.u.saturating_sub(need) {
            if k >= self.u {
                break;
            }
            self.pick(k, hits, picked);
            self.walk(k + 1, hits, picked, solutions, appearances);
            self.unpick(hits, picked);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // candidates A..H are indices 0..7
    const A: usize = 0;
    const D: usize = 3;
    const E: usize = 4;
    const F: usize = 5;
    const G: usize = 6;
    const H: usize = 7;

    fn stmt(id: u32, members: &[usize], required: u64) -> EdgeStatement {
        EdgeStatement {
            edge: Edge::new(
                Vertex { column: 0, code: id },
                Vertex { column: 1, code: id },
            ),
            required,
            members: members.to_vec(),
            saturated: false,
        }
    }

    fn worked() -> Vec<EdgeStatement> {
        vec![stmt(1, &[A, F, H], 1), stmt(2, &[E, F, G], 1), stmt(3, &[D, H], 1)]
    }

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn worked_example_scores() {
        let universe: Vec<usize> = (0..8).collect();
        let sc = score_candidates(&worked(), &universe, WeightMode::Reciprocal);
        let exact = |c| sc.score_of(c).unwrap().exact.clone().unwrap();
        assert_eq!(exact(H), q(5, 6));
        assert_eq!(exact(F), q(2, 3));
        assert_eq!(exact(D), q(1, 2));
        for c in [A, E, G] {
            assert_eq!(exact(c), q(1, 3));
        }
        for c in [1, 2] {
            assert_eq!(exact(c), q(0, 1));
        }
        let sel = select_rows(&sc, 3);
        assert_eq!(sel.chosen, vec![H, F, D]);
        assert!(sel.tie.is_none());
        assert_eq!(sc.score_of(H).unwrap().exact_string().unwrap(), "5/6");
    }

    #[test]
    fn worked_example_oracle() {
        let universe: Vec<usize> = (0..8).collect();
        let f = exact_cover_frequencies(&worked(), &universe, 3, DEFAULT_ORACLE_CAP).unwrap();
        assert_eq!(f.solutions, 22);
        assert_eq!(f.count(H), Some(15));
        assert_eq!(f.count(F), Some(11));
        assert_eq!(f.count(D), Some(10));
    }

    #[test]
    fn unconstrained_oracle_is_binomial() {
        let f = exact_cover_frequencies(&[], &[10, 11, 12, 13], 2, DEFAULT_ORACLE_CAP).unwrap();
        assert_eq!(f.solutions, 6);
        for c in 10..14 {
            assert_eq!(f.proportion(c), Some(0.5));
        }
        let f = exact_cover_frequencies(&[], &[1, 2], 0, DEFAULT_ORACLE_CAP).unwrap();
        assert_eq!(f.solutions, 1);
    }

    #[test]
    fn oracle_errors() {
        let universe: Vec<usize> = (0..40).collect();
        assert!(matches!(
            exact_cover_frequencies(&[], &universe, 20, DEFAULT_ORACLE_CAP),
            Err(Error::OracleTooLarge { .. })
        ));
        let st = vec![stmt(1, &[0, 1], 2), stmt(2, &[2, 3], 2)];
        assert!(matches!(
            exact_cover_frequencies(&st, &[0, 1, 2, 3], 3, DEFAULT_ORACLE_CAP),
            Err(Error::InfeasibleStatements { slots: 3 })
        ));
    }

    #[test]
    fn empty_statements_score_zero() {
        let sc = score_candidates(&[], &[3, 1, 2], WeightMode::Reciprocal);
        assert_eq!(
            sc.entries.iter().map(|e| e.candidate).collect::<Vec<_>>(),
            vec![1, 2, 3]
        );
        assert!(sc.entries.iter().all(|e| e.score.value == 0.0));
        assert!(select_rows(&sc, 0).chosen.is_empty());
    }

    #[test]
    fn ratio_mode_weights_by_requirement() {
        let st = vec![stmt(1, &[0, 1, 2], 2), stmt(2, &[2, 3], 1)];
        let sc = score_candidates(&st, &[0, 1, 2, 3], WeightMode::Ratio);
        assert_eq!(sc.score_of(2).unwrap().exact, Some(q(7, 6)));
        assert_eq!(sc.score_of(0).unwrap().exact, Some(q(2, 3)));
    }

    #[test]
    fn clamped_selection() {
        let universe: Vec<usize> = (0..8).collect();
        let sc = score_candidates(&worked(), &universe, WeightMode::Reciprocal);
        let sel = select_rows(&sc, 9);
        assert!(sel.clamped);
        assert_eq!(sel.slots, 8);
        assert_eq!(sel.chosen, vec![H, F, D, A, E, G, 1, 2]);
    }

    #[test]
    fn binomial_values() {
        assert_eq!(binomial(8, 4), 70);
        assert_eq!(binomial(4, 5), 0);
        assert_eq!(binomial(321, 0), 1);
        assert_eq!(binomial(400, 200), u128::MAX);
    }
}
