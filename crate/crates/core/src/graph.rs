//! D-partite graph of (column, value) vertices and enumeration of its
//! D-cliques, the candidate rows.
//!
//! A D-clique in a D-partite graph takes exactly one vertex from every part,
//! so enumeration is an ordered backtracking over parts: pick a vertex in the
//! first part, intersect the remaining parts' candidate bitsets with its
//! adjacency, recurse. Parts are visited smallest-domain first.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bitset::BitSet;
use crate::error::{Error, Result};
use crate::model::{ColumnDomain, ProjectionSet, Token, ValueVector};

pub const DEFAULT_CANDIDATE_CAP: usize = 10_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Vertex {
    pub column: usize,
    pub code: u32,
}

/// Unordered cross-column vertex pair, stored with `a.column < b.column`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Edge {
    pub a: Vertex,
    pub b: Vertex,
}

impl Edge {
    pub fn new(x: Vertex, y: Vertex) -> Self {
        debug_assert_ne!(x.column, y.column);
        if x.column < y.column {
            Edge { a: x, b: y }
        } else {
            Edge { a: y, b: x }
        }
    }

    pub fn of_row(codes: &[u32], i: usize, j: usize) -> Self {
        Edge::new(
            Vertex {
                column: i,
                code: codes[i],
            },
            Vertex {
                column: j,
                code: codes[j],
            },
        )
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "c{}#{}-c{}#{}",
            self.a.column, self.a.code, self.b.column, self.b.code
        )
    }
}

/// Iterates the C(D,2) edges of a row given by codes, in (i, j) order.
pub fn row_edges(codes: &[u32]) -> impl Iterator<Item = Edge> + '_ {
    let d = codes.len();
    (0..d).flat_map(move |i| (i + 1..d).map(move |j| Edge::of_row(codes, i, j)))
}

#[derive(Clone, Debug)]
pub struct ReconstructionGraph {
    columns: Vec<String>,
    domains: Vec<ColumnDomain>,
    edges: BTreeMap<Edge, u64>,
    // adjacency[p * d + q][code in p] = neighbours in part q
    adjacency: Vec<Vec<BitSet>>,
}

pub fn build_graph(proj: &ProjectionSet) -> Result<ReconstructionGraph> {
    proj.validate().into_result()?;
    let d = proj.dimension();
    let domains = proj.domains().to_vec();
    let mut adjacency: Vec<Vec<BitSet>> = (0..d * d)
        .map(|k| {
            let (p, q) = (k / d, k % d);
            if p == q {
                Vec::new()
            } else {
                vec![BitSet::new(domains[q].len()); domains[p].len()]
            }
        })
        .collect();
    let mut edges = BTreeMap::new();
    for ((i, j), counts) in proj.pairs() {
        for (&(a, b), &m) in counts {
            edges.insert(
                Edge::new(
                    Vertex { column: i, code: a },
                    Vertex { column: j, code: b },
                ),
                m,
            );
            adjacency[i * d + j][a as usize].insert(b as usize);
            adjacency[j * d + i][b as usize].insert(a as usize);
        }
    }
    Ok(ReconstructionGraph {
        columns: proj.columns().to_vec(),
        domains,
        edges,
        adjacency,
    })
}

impl ReconstructionGraph {
    pub fn dimension(&self) -> usize {
        self.domains.len()
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn domains(&self) -> &[ColumnDomain] {
        &self.domains
    }

    pub fn vertex_count(&self) -> usize {
        self.domains.iter().map(ColumnDomain::len).sum()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &BTreeMap<Edge, u64> {
        &self.edges
    }

    pub fn multiplicity(&self, e: &Edge) -> u64 {
        self.edges.get(e).copied().unwrap_or(0)
    }

    fn neighbours(&self, from: usize, code: u32, to: usize) -> &BitSet {
        &self.adjacency[from * self.dimension() + to][code as usize]
    }
}

pub fn enumerate_candidates(graph: &ReconstructionGraph) -> Result<CandidateSet> {
    enumerate_candidates_capped(graph, DEFAULT_CANDIDATE_CAP)
}

pub fn enumerate_candidates_capped(graph: &ReconstructionGraph, cap: usize) -> Result<CandidateSet> {
    let d = graph.dimension();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by_key(|&c| (graph.domains[c].len(), c));

    let found = AtomicUsize::new(0);
    let abort = AtomicBool::new(false);
    let branches: Vec<Vec<Vec<u32>>> = (0..graph.domains[order[0]].len() as u32)
        .into_par_iter()
        .map(|root| {
            let mut search = Search {
                graph,
                order: &order,
                frontier: (0..d)
                    .map(|_| order.iter().map(|&c| BitSet::new(graph.domains[c].len())).collect())
                    .collect(),
                chosen: vec![0; d],
                out: Vec::new(),
                found: &found,
                abort: &abort,
                cap,
            };
            search.start(root);
            search.out
        })
        .collect();
    if abort.load(Ordering::Relaxed) {
        return Err(Error::CandidateExplosion {
            cap,
            partial: found.load(Ordering::Relaxed),
        });
    }
    let mut rows: Vec<Vec<u32>> = branches.into_iter().flatten().collect();
    rows.sort_unstable();
    CandidateSet::from_codes(graph.columns.clone(), graph.domains.clone(), rows)
}

struct Search<'a> {
    graph: &'a ReconstructionGraph,
    order: &'a [usize],
    // frontier[level][m]: vertices of part order[m] still adjacent to everything chosen
    frontier: Vec<Vec<BitSet>>,
    // chosen[c]: code picked in column c
    chosen: Vec<u32>,
    out: Vec<Vec<u32>>,
    found: &'a AtomicUsize,
    abort: &'a AtomicBool,
    cap: usize,
}

impl Search<'_> {
    fn start(&mut self, root: u32) {
        let d = self.order.len();
        for m in 1..d {
            self.frontier[0][m] = BitSet::full(self.graph.domains[self.order[m]].len());
        }
        self.choose(0, root);
    }

    fn choose(&mut self, level: usize, code: u32) {
        if self.abort.load(Ordering::Relaxed) {
            return;
        }
        let d = self.order.len();
        let part = self.order[level];
        self.chosen[part] = code;
        if level + 1 == d {
            let n = self.found.fetch_add(1, Ordering::Relaxed) + 1;
            if n > self.cap {
                self.abort.store(true, Ordering::Relaxed);
                return;
            }
            self.out.push(self.chosen.clone());
            return;
        }
        let (cur, next) = self.frontier.split_at_mut(level + 1);
        let (cur, next) = (&cur[level], &mut next[0]);
        for m in level + 1..d {
            let adj = self.graph.neighbours(part, code, self.order[m]);
            if !next[m].assign_and(&cur[m], adj) {
                return;
            }
        }
        let options: Vec<u32> = self.frontier[level + 1][level + 1]
            .ones()
            .map(|k| k as u32)
            .collect();
        for v in options {
            self.choose(level + 1, v);
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CandidateRow {
    pub index: usize,
    pub codes: Vec<u32>,
}

/// Candidate rows sorted lexicographically, with inverted indexes from
/// vertices and edges to the candidates containing them.
#[derive(Clone, Debug)]
pub struct CandidateSet {
    columns: Vec<String>,
    domains: Vec<ColumnDomain>,
    rows: Vec<CandidateRow>,
    vertex_members: Vec<Vec<Vec<usize>>>,
    edge_members: BTreeMap<Edge, Vec<usize>>,
}

impl CandidateSet {
    /// Builds a candidate set from code vectors. Rows are sorted; duplicates
    /// and out-of-domain codes are rejected.
    pub fn from_codes(
        columns: Vec<String>,
        domains: Vec<ColumnDomain>,
        mut codes: Vec<Vec<u32>>,
    ) -> Result<Self> {
        let d = domains.len();
        if columns.len() != d {
            return Err(Error::InvalidOptions(format!(
                "{} column names for {d} domains",
                columns.len()
            )));
        }
        for r in &codes {
            if r.len() != d || r.iter().zip(&domains).any(|(&c, dom)| c as usize >= dom.len()) {
                return Err(Error::InvalidDataset(format!("candidate {r:?} does not fit the domains")));
            }
        }
        codes.sort_unstable();
        if let Some(w) = codes.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidDataset(format!("duplicate candidate {:?}", w[0])));
        }
        let mut vertex_members: Vec<Vec<Vec<usize>>> =
            domains.iter().map(|dom| vec![Vec::new(); dom.len()]).collect();
        let mut edge_members: BTreeMap<Edge, Vec<usize>> = BTreeMap::new();
        for (k, r) in codes.iter().enumerate() {
            for (c, &v) in r.iter().enumerate() {
                vertex_members[c][v as usize].push(k);
            }
            for e in row_edges(r) {
                edge_members.entry(e).or_default().push(k);
            }
        }
        let rows = codes
            .into_iter()
            .enumerate()
            .map(|(index, codes)| CandidateRow { index, codes })
            .collect();
        Ok(CandidateSet {
            columns,
            domains,
            rows,
            vertex_members,
            edge_members,
        })
    }

    /// Builds a candidate set from token rows; domains are the tokens seen per column.
    pub fn from_values(columns: Vec<String>, rows: &[ValueVector]) -> Result<Self> {
        let d = columns.len();
        if let Some(r) = rows.iter().find(|r| r.len() != d) {
            return Err(Error::InvalidDataset(format!("row {r} has wrong length")));
        }
        let domains: Vec<ColumnDomain> = (0..d)
            .map(|c| ColumnDomain::from_tokens(rows.iter().map(|r| r.get(c))))
            .collect();
        let codes = rows
            .iter()
            .map(|r| (0..d).map(|c| domains[c].code(r.get(c)).unwrap()).collect())
            .collect();
        CandidateSet::from_codes(columns, domains, codes)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn dimension(&self) -> usize {
        self.domains.len()
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn domains(&self) -> &[ColumnDomain] {
        &self.domains
    }

    pub fn rows(&self) -> &[CandidateRow] {
        &self.rows
    }

    pub fn codes(&self, index: usize) -> &[u32] {
        &self.rows[index].codes
    }

    pub fn tokens(&self, index: usize) -> Vec<&Token> {
        self.rows[index]
            .codes
            .iter()
            .zip(&self.domains)
            .map(|(&c, dom)| dom.token(c))
            .collect()
    }

    pub fn values(&self, index: usize) -> ValueVector {
        ValueVector::new(self.tokens(index).into_iter().cloned().collect())
    }

    /// Index of the candidate equal to `row`, if any.
    pub fn find(&self, row: &ValueVector) -> Option<usize> {
        if row.len() != self.dimension() {
            return None;
        }
        let codes: Option<Vec<u32>> = (0..row.len())
            .map(|c| self.domains[c].code(row.get(c)))
            .collect();
        let codes = codes?;
        self.rows.binary_search_by(|r| r.codes.cmp(&codes)).ok()
    }

    pub fn vertex_members(&self, v: Vertex) -> &[usize] {
        self.vertex_members
            .get(v.column)
            .and_then(|p| p.get(v.code as usize))
            .map_or(&[], Vec::as_slice)
    }

    pub fn edge_members(&self, e: &Edge) -> &[usize] {
        self.edge_members.get(e).map_or(&[], Vec::as_slice)
    }

    pub fn edge_index(&self) -> &BTreeMap<Edge, Vec<usize>> {
        &self.edge_members
    }
}
