//! Datasets, their bivariate projections, and projection consistency checks.
//!
//! Value tokens are opaque strings. Each column carries a [`ColumnDomain`]
//! that fixes the token order used everywhere downstream: numeric order when
//! every token in the column parses as a finite decimal number, bytewise
//! order otherwise. Tokens are addressed by their rank in that order (a
//! "code"), so sorting code vectors sorts rows columnwise-lexicographically.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An opaque discrete value.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Token(String);

impl Token {
    pub fn new(s: impl Into<String>) -> Self {
        Token(s.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// The token's value when it reads as a finite decimal number.
    pub fn numeric(&self) -> Option<f64> {
        parse_decimal(&self.0)
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Token {
    fn from(s: &str) -> Self {
        Token(s.to_owned())
    }
}

impl From<String> for Token {
    fn from(s: String) -> Self {
        Token(s)
    }
}

fn parse_decimal(s: &str) -> Option<f64> {
    if s.is_empty() || s.trim() != s {
        return None;
    }
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// One row: position `d` holds the token of column `d`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ValueVector(Vec<Token>);

impl ValueVector {
    pub fn new(values: Vec<Token>) -> Self {
        ValueVector(values)
    }

    pub fn from_strs<S: AsRef<str>>(values: &[S]) -> Self {
        ValueVector(values.iter().map(|s| Token::new(s.as_ref())).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, column: usize) -> &Token {
        &self.0[column]
    }

    pub fn values(&self) -> &[Token] {
        &self.0
    }
}

impl<T: fmt::Display> From<Vec<T>> for ValueVector {
    fn from(values: Vec<T>) -> Self {
        ValueVector(values.into_iter().map(|v| Token(v.to_string())).collect())
    }
}

impl fmt::Display for ValueVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (k, t) in self.0.iter().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            write!(f, "{t}")?;
        }
        f.write_str(")")
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Column {
    pub index: usize,
    pub name: String,
}

/// Ordered columns plus rows of tokens. Duplicate rows are kept.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dataset {
    columns: Vec<Column>,
    rows: Vec<ValueVector>,
}

impl Dataset {
    pub fn new(names: Vec<String>, rows: Vec<ValueVector>) -> Result<Self> {
        let d = names.len();
        if d < 2 {
            return Err(Error::InvalidDataset(format!(
                "need at least 2 columns, got {d}"
            )));
        }
        if let Some((k, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != d) {
            return Err(Error::InvalidDataset(format!(
                "row {k} has {} values, expected {d}",
                r.len()
            )));
        }
        let columns = names
            .into_iter()
            .enumerate()
            .map(|(index, name)| Column { index, name })
            .collect();
        Ok(Dataset { columns, rows })
    }

    /// Columns named `c0`, `c1`, ... with dimension taken from the first row.
    pub fn unnamed(rows: Vec<ValueVector>) -> Result<Self> {
        let d = rows.first().map_or(0, ValueVector::len);
        Dataset::new(default_names(d), rows)
    }

    pub fn dimension(&self) -> usize {
        self.columns.len()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn column_names(&self) -> Vec<String> {
        self.columns.iter().map(|c| c.name.clone()).collect()
    }

    pub fn rows(&self) -> &[ValueVector] {
        &self.rows
    }

    /// Distinct rows with their multiplicities.
    pub fn distinct_rows(&self) -> BTreeMap<ValueVector, usize> {
        let mut out = BTreeMap::new();
        for r in &self.rows {
            *out.entry(r.clone()).or_insert(0) += 1;
        }
        out
    }

    pub fn distinct_set(&self) -> BTreeSet<ValueVector> {
        self.rows.iter().cloned().collect()
    }

    /// Number of distinct tokens per column.
    pub fn distinct_per_column(&self) -> Vec<usize> {
        (0..self.dimension())
            .map(|c| {
                self.rows
                    .iter()
                    .map(|r| r.get(c))
                    .collect::<BTreeSet<_>>()
                    .len()
            })
            .collect()
    }
}

pub(crate) fn default_names(d: usize) -> Vec<String> {
    (0..d).map(|k| format!("c{k}")).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TokenOrder {
    Numeric,
    Bytewise,
}

/// The tokens seen in one column, in column order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ColumnDomain {
    tokens: Vec<Token>,
    order: TokenOrder,
    codes: HashMap<Token, u32>,
}

impl ColumnDomain {
    pub fn from_tokens<'a>(tokens: impl IntoIterator<Item = &'a Token>) -> Self {
        let unique: BTreeSet<&Token> = tokens.into_iter().collect();
        let numeric = unique.iter().all(|t| t.numeric().is_some());
        let mut tokens: Vec<Token> = unique.into_iter().cloned().collect();
        let order = if numeric {
            // BTreeSet gave bytewise order; the stable sort keeps it as the tie-break ("1" vs "1.0")
            tokens.sort_by(|a, b| {
                a.numeric()
                    .unwrap()
                    .total_cmp(&b.numeric().unwrap())
            });
            TokenOrder::Numeric
        } else {
            TokenOrder::Bytewise
        };
        let codes = tokens
            .iter()
            .enumerate()
            .map(|(k, t)| (t.clone(), k as u32))
            .collect();
        ColumnDomain {
            tokens,
            order,
            codes,
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn order(&self) -> TokenOrder {
        self.order
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    pub fn token(&self, code: u32) -> &Token {
        &self.tokens[code as usize]
    }

    pub fn code(&self, token: &Token) -> Option<u32> {
        self.codes.get(token).copied()
    }

    /// Column-order comparison of two tokens of this domain.
    pub fn compare(&self, a: &Token, b: &Token) -> Ordering {
        match (self.code(a), self.code(b)) {
            (Some(x), Some(y)) => x.cmp(&y),
            _ => a.cmp(b),
        }
    }
}

/// Coordinate-pair counts of one column pair, keyed by token codes.
pub type PairCounts = BTreeMap<(u32, u32), u64>;

/// Token-level points of one pair projection, as supplied from outside.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairPoints {
    pub i: usize,
    pub j: usize,
    pub points: Vec<(Token, Token, u64)>,
}

/// Every bivariate projection of a dataset, with multiplicities.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProjectionSet {
    columns: Vec<String>,
    domains: Vec<ColumnDomain>,
    pairs: BTreeMap<(usize, usize), PairCounts>,
}

pub fn project(dataset: &Dataset) -> ProjectionSet {
    let d = dataset.dimension();
    let domains: Vec<ColumnDomain> = (0..d)
        .map(|c| ColumnDomain::from_tokens(dataset.rows().iter().map(|r| r.get(c))))
        .collect();
    let coded: Vec<Vec<u32>> = dataset
        .rows()
        .iter()
        .map(|r| {
            (0..d)
                .map(|c| domains[c].code(r.get(c)).expect("domain built from rows"))
                .collect()
        })
        .collect();
    let mut pairs = BTreeMap::new();
    for i in 0..d {
        for j in i + 1..d {
            let mut counts = PairCounts::new();
            for r in &coded {
                *counts.entry((r[i], r[j])).or_insert(0) += 1;
            }
            pairs.insert((i, j), counts);
        }
    }
    ProjectionSet {
        columns: dataset.column_names(),
        domains,
        pairs,
    }
}

impl ProjectionSet {
    /// Builds a projection set from token-level points. Column domains are the
    /// union of tokens seen for each column. Structural problems (bad indices,
    /// repeated pairs or points, zero multiplicities) are rejected here; count
    /// consistency is left to [`ProjectionSet::validate`].
    pub fn from_points(columns: Vec<String>, pairs: Vec<PairPoints>) -> Result<Self> {
        let d = columns.len();
        let mut problems = Vec::new();
        let mut seen: BTreeMap<usize, BTreeSet<&Token>> = BTreeMap::new();
        let mut keys = BTreeSet::new();
        for p in &pairs {
            if p.i >= p.j || p.j >= d {
                problems.push(Violation::BadPair { i: p.i, j: p.j });
                continue;
            }
            if !keys.insert((p.i, p.j)) {
                problems.push(Violation::DuplicatePair { i: p.i, j: p.j });
                continue;
            }
            for (a, b, _) in &p.points {
                seen.entry(p.i).or_default().insert(a);
                seen.entry(p.j).or_default().insert(b);
            }
        }
        let domains: Vec<ColumnDomain> = (0..d)
            .map(|c| ColumnDomain::from_tokens(seen.get(&c).into_iter().flatten().copied()))
            .collect();
        let mut out = BTreeMap::new();
        for p in &pairs {
            if p.i >= p.j || p.j >= d || out.contains_key(&(p.i, p.j)) {
                continue;
            }
            let mut counts = PairCounts::new();
            for (a, b, m) in &p.points {
                if *m == 0 {
                    problems.push(Violation::ZeroMultiplicity {
                        i: p.i,
                        j: p.j,
                        point: (a.clone(), b.clone()),
                    });
                    continue;
                }
                let key = (
                    domains[p.i].code(a).unwrap(),
                    domains[p.j].code(b).unwrap(),
                );
                if counts.insert(key, *m).is_some() {
                    problems.push(Violation::DuplicatePoint {
                        i: p.i,
                        j: p.j,
                        point: (a.clone(), b.clone()),
                    });
                }
            }
            out.insert((p.i, p.j), counts);
        }
        if !problems.is_empty() {
            return Err(Error::InvalidProjections(problems));
        }
        Ok(ProjectionSet {
            columns,
            domains,
            pairs: out,
        })
    }

    pub fn dimension(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn domains(&self) -> &[ColumnDomain] {
        &self.domains
    }

    pub fn domain(&self, column: usize) -> &ColumnDomain {
        &self.domains[column]
    }

    pub fn pair(&self, i: usize, j: usize) -> Option<&PairCounts> {
        self.pairs.get(&(i, j))
    }

    pub fn pairs(&self) -> impl Iterator<Item = ((usize, usize), &PairCounts)> {
        self.pairs.iter().map(|(k, v)| (*k, v))
    }

    /// Token-level view of one pair projection, in code order.
    pub fn pair_points(&self, i: usize, j: usize) -> Option<PairPoints> {
        let counts = self.pair(i, j)?;
        Some(PairPoints {
            i,
            j,
            points: counts
                .iter()
                .map(|(&(a, b), &m)| {
                    (
                        self.domains[i].token(a).clone(),
                        self.domains[j].token(b).clone(),
                        m,
                    )
                })
                .collect(),
        })
    }

    /// Row count implied by the first pair projection.
    pub fn row_count(&self) -> u64 {
        self.pairs
            .values()
            .next()
            .map_or(0, |c| c.values().sum())
    }

    /// Per-token counts of `column` as seen through the projection of pair `(i, j)`.
    fn marginal(&self, column: usize, (i, j): (usize, usize)) -> BTreeMap<u32, u64> {
        let mut m = BTreeMap::new();
        if let Some(counts) = self.pairs.get(&(i, j)) {
            for (&(a, b), &c) in counts {
                let v = if column == i { a } else { b };
                *m.entry(v).or_insert(0) += c;
            }
        }
        m
    }

    /// Column marginal read from the first pair that contains `column`.
    pub fn column_marginal(&self, column: usize) -> BTreeMap<u32, u64> {
        let d = self.dimension();
        let pair = if column == 0 { (0, 1.min(d - 1)) } else { (0, column) };
        self.marginal(column, pair)
    }

    pub fn validate(&self) -> Validation {
        let d = self.dimension();
        let mut violations = Vec::new();
        if d < 2 {
            violations.push(Violation::DimensionTooSmall { dimension: d });
            return Validation { violations };
        }
        for i in 0..d {
            for j in i + 1..d {
                if !self.pairs.contains_key(&(i, j)) {
                    violations.push(Violation::MissingPair { i, j });
                }
            }
        }
        let mut totals = self.pairs.iter().map(|(&k, c)| (k, c.values().sum::<u64>()));
        if let Some((_, expected)) = totals.next() {
            if expected == 0 {
                violations.push(Violation::EmptyProjections);
            }
            for ((i, j), total) in totals {
                if total != expected {
                    violations.push(Violation::PairTotalMismatch {
                        i,
                        j,
                        total,
                        expected,
                    });
                }
            }
        }
        for c in 0..d {
            let containing: Vec<(usize, usize)> = self
                .pairs
                .keys()
                .copied()
                .filter(|&(i, j)| i == c || j == c)
                .collect();
            let marginals: Vec<BTreeMap<u32, u64>> =
                containing.iter().map(|&p| self.marginal(c, p)).collect();
            for code in 0..self.domains[c].len() as u32 {
                let counts: Vec<((usize, usize), u64)> = containing
                    .iter()
                    .zip(&marginals)
                    .map(|(&p, m)| (p, m.get(&code).copied().unwrap_or(0)))
                    .collect();
                if counts.windows(2).any(|w| w[0].1 != w[1].1) {
                    violations.push(Violation::MarginalInconsistency {
                        column: c,
                        token: self.domains[c].token(code).clone(),
                        counts,
                    });
                }
            }
        }
        Validation { violations }
    }
}

/// Outcome of [`ProjectionSet::validate`].
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Validation {
    pub violations: Vec<Violation>,
}

impl Validation {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn into_result(self) -> Result<()> {
        if self.is_ok() {
            Ok(())
        } else {
            Err(Error::InvalidProjections(self.violations))
        }
    }
}

pub fn validate_projections(proj: &ProjectionSet) -> Validation {
    proj.validate()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    DimensionTooSmall {
        dimension: usize,
    },
    BadPair {
        i: usize,
        j: usize,
    },
    DuplicatePair {
        i: usize,
        j: usize,
    },
    DuplicatePoint {
        i: usize,
        j: usize,
        point: (Token, Token),
    },
    ZeroMultiplicity {
        i: usize,
        j: usize,
        point: (Token, Token),
    },
    MissingPair {
        i: usize,
        j: usize,
    },
    EmptyProjections,
    PairTotalMismatch {
        i: usize,
        j: usize,
        total: u64,
        expected: u64,
    },
    MarginalInconsistency {
        column: usize,
        token: Token,
        counts: Vec<((usize, usize), u64)>,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DimensionTooSmall { dimension } => {
                write!(f, "dimension {dimension} is below 2")
            }
            Violation::BadPair { i, j } => write!(f, "bad pair ({i},{j})"),
            Violation::DuplicatePair { i, j } => write!(f, "pair ({i},{j}) given twice"),
            Violation::DuplicatePoint { i, j, point } => {
                write!(f, "point ({},{}) repeated in pair ({i},{j})", point.0, point.1)
            }
            Violation::ZeroMultiplicity { i, j, point } => write!(
                f,
                "point ({},{}) in pair ({i},{j}) has zero multiplicity",
                point.0, point.1
            ),
            Violation::MissingPair { i, j } => write!(f, "missing pair ({i},{j})"),
            Violation::EmptyProjections => f.write_str("projections hold no rows"),
            Violation::PairTotalMismatch {
                i,
                j,
                total,
                expected,
            } => write!(
                f,
                "pair-total mismatch at pair ({i},{j}): {total} rows, expected {expected}"
            ),
            Violation::MarginalInconsistency {
                column,
                token,
                counts,
            } => {
                write!(f, "marginal inconsistency at column {column}, token {token}:")?;
                for ((i, j), c) in counts {
                    write!(f, " ({i},{j})={c}")?;
                }
                Ok(())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ds(rows: &[&[i64]]) -> Dataset {
        Dataset::unnamed(rows.iter().map(|r| ValueVector::from(r.to_vec())).collect()).unwrap()
    }

    fn tok_pairs(p: &ProjectionSet, i: usize, j: usize) -> Vec<(String, String, u64)> {
        p.pair_points(i, j)
            .unwrap()
            .points
            .into_iter()
            .map(|(a, b, m)| (a.to_string(), b.to_string(), m))
            .collect()
    }

    fn s(a: &str, b: &str, m: u64) -> (String, String, u64) {
        (a.into(), b.into(), m)
    }

    #[test]
    fn project_three_rows() {
        let p = project(&ds(&[&[1, 5, 5], &[2, 5, 6], &[3, 6, 5]]));
        assert_eq!(
            tok_pairs(&p, 0, 1),
            vec![s("1", "5", 1), s("2", "5", 1), s("3", "6", 1)]
        );
        assert_eq!(
            tok_pairs(&p, 0, 2),
            vec![s("1", "5", 1), s("2", "6", 1), s("3", "5", 1)]
        );
        assert_eq!(
            tok_pairs(&p, 1, 2),
            vec![s("5", "5", 1), s("5", "6", 1), s("6", "5", 1)]
        );
        assert!(p.validate().is_ok());
    }

    #[test]
    fn duplicate_rows_sum() {
        let p = project(&ds(&[&[0, 0], &[0, 0]]));
        assert_eq!(tok_pairs(&p, 0, 1), vec![s("0", "0", 2)]);
        assert_eq!(p.row_count(), 2);
    }

    #[test]
    fn distinct_rows_counts() {
        let d = ds(&[&[0, 0], &[0, 0], &[1, 1]]);
        let m = d.distinct_rows();
        assert_eq!(m.len(), 2);
        assert_eq!(m[&ValueVector::from(vec![0, 0])], 2);
        assert_eq!(m[&ValueVector::from(vec![1, 1])], 1);

        let empty = Dataset::new(vec!["a".into(), "b".into()], vec![]).unwrap();
        assert!(empty.distinct_rows().is_empty());
    }

    #[test]
    fn ragged_rows_rejected() {
        let rows = vec![ValueVector::from(vec![1, 2]), ValueVector::from(vec![1, 2, 3])];
        assert!(matches!(
            Dataset::unnamed(rows),
            Err(Error::InvalidDataset(_))
        ));
        assert!(matches!(
            Dataset::unnamed(vec![ValueVector::from(vec![1])]),
            Err(Error::InvalidDataset(_))
        ));
    }

    #[test]
    fn numeric_columns_order_numerically() {
        let toks: Vec<Token> = ["10", "9", "1.5", "-2"].iter().map(|&t| t.into()).collect();
        let dom = ColumnDomain::from_tokens(&toks);
        assert_eq!(dom.order(), TokenOrder::Numeric);
        let got: Vec<&str> = dom.tokens().iter().map(Token::as_str).collect();
        assert_eq!(got, ["-2", "1.5", "9", "10"]);

        let toks: Vec<Token> = ["10", "9", "x"].iter().map(|&t| t.into()).collect();
        let dom = ColumnDomain::from_tokens(&toks);
        assert_eq!(dom.order(), TokenOrder::Bytewise);
        let got: Vec<&str> = dom.tokens().iter().map(Token::as_str).collect();
        assert_eq!(got, ["10", "9", "x"]);
    }

    fn pts(i: usize, j: usize, p: &[(&str, &str, u64)]) -> PairPoints {
        PairPoints {
            i,
            j,
            points: p.iter().map(|&(a, b, m)| (a.into(), b.into(), m)).collect(),
        }
    }

    #[test]
    fn pair_total_mismatch_reported() {
        let names = default_names(3);
        let p = ProjectionSet::from_points(
            names,
            vec![
                pts(0, 1, &[("1", "1", 1), ("2", "1", 1), ("3", "2", 1)]),
                pts(0, 2, &[("1", "1", 1), ("2", "1", 1)]),
                pts(1, 2, &[("1", "1", 2), ("2", "1", 1)]),
            ],
        )
        .unwrap();
        let v = p.validate();
        assert!(v.violations.iter().any(|x| matches!(
            x,
            Violation::PairTotalMismatch { i: 0, j: 2, total: 2, expected: 3 }
        )));
        assert!(v.violations[0].to_string().starts_with("pair-total mismatch"));
    }

    #[test]
    fn marginal_inconsistency_reported() {
        let p = ProjectionSet::from_points(
            default_names(3),
            vec![
                pts(0, 1, &[("7", "1", 2), ("8", "1", 1)]),
                pts(0, 2, &[("7", "1", 1), ("8", "1", 2)]),
                pts(1, 2, &[("1", "1", 3)]),
            ],
        )
        .unwrap();
        let v = p.validate();
        let msgs: Vec<String> = v.violations.iter().map(ToString::to_string).collect();
        assert!(
            msgs.iter()
                .any(|m| m.starts_with("marginal inconsistency at column 0, token 7")),
            "{msgs:?}"
        );
    }

    #[test]
    fn missing_pair_and_structural_errors() {
        let p = ProjectionSet::from_points(
            default_names(3),
            vec![pts(0, 1, &[("1", "1", 1)]), pts(0, 2, &[("1", "1", 1)])],
        )
        .unwrap();
        assert!(p
            .validate()
            .violations
            .contains(&Violation::MissingPair { i: 1, j: 2 }));

        let err = ProjectionSet::from_points(
            default_names(3),
            vec![pts(1, 0, &[("1", "1", 1)]), pts(0, 2, &[("1", "1", 0)])],
        )
        .unwrap_err();
        match err {
            Error::InvalidProjections(v) => assert_eq!(v.len(), 2),
            e => panic!("{e}"),
        }
    }
}
