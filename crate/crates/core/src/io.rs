//! File formats: CSV datasets in, canonical projection JSON, and the
//! reconstruction report.
//!
//! JSON documents are written with keys sorted and two-space indentation,
//! so equal content always serializes to equal bytes.

use std::collections::BTreeSet;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::deduction::Rule;
use crate::error::{Error, Result};
use crate::evaluation::{ConfusionLabel, ReconstructionMetrics};
use crate::likelihood::{EdgeStatement, Score, WeightMode};
use crate::model::{Dataset, PairPoints, ProjectionSet, Token, ValueVector};
use crate::pipeline::{PipelineOptions, Reconstruction};

pub const REPORT_VERSION: u32 = 1;

/// Serializes any value as key-sorted, pretty JSON with a trailing newline.
pub fn to_canonical_json<T: Serialize>(value: &T) -> Result<String> {
    // serde_json's Map is a BTreeMap unless `preserve_order` is on
    let v = serde_json::to_value(value)?;
    let mut s = serde_json::to_string_pretty(&v)?;
    s.push('\n');
    Ok(s)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProjectionFile {
    pub columns: Vec<String>,
    pub dimension: usize,
    pub pairs: Vec<PairEntry>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairEntry {
    pub i: usize,
    pub j: usize,
    /// `[token_i, token_j, multiplicity]`, in column token order.
    pub points: Vec<(String, String, u64)>,
}

impl ProjectionFile {
    pub fn from_projections(proj: &ProjectionSet) -> Self {
        let pairs = proj
            .pairs()
            .map(|((i, j), _)| {
                let p = proj.pair_points(i, j).unwrap();
                PairEntry {
                    i,
                    j,
                    points: p
                        .points
                        .into_iter()
                        .map(|(a, b, m)| (a.as_str().to_owned(), b.as_str().to_owned(), m))
                        .collect(),
                }
            })
            .collect();
        ProjectionFile {
            columns: proj.columns().to_vec(),
            dimension: proj.dimension(),
            pairs,
        }
    }

    pub fn into_projections(self) -> Result<ProjectionSet> {
        if self.dimension != self.columns.len() {
            return Err(Error::InvalidOptions(format!(
                "dimension {} but {} column names",
                self.dimension,
                self.columns.len()
            )));
        }
        let pairs = self
            .pairs
            .into_iter()
            .map(|p| PairPoints {
                i: p.i,
                j: p.j,
                points: p
                    .points
                    .into_iter()
                    .map(|(a, b, m)| (Token::new(a), Token::new(b), m))
                    .collect(),
            })
            .collect();
        ProjectionSet::from_points(self.columns, pairs)
    }
}

pub fn projections_to_json(proj: &ProjectionSet) -> Result<String> {
    to_canonical_json(&ProjectionFile::from_projections(proj))
}

/// Parses a projection file. Structural problems are errors; count
/// consistency is checked separately with [`ProjectionSet::validate`].
pub fn projections_from_json(text: &str) -> Result<ProjectionSet> {
    let file: ProjectionFile = serde_json::from_str(text)?;
    file.into_projections()
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CsvOptions {
    /// Comma-separated selectors: header names, 1-based positions, or
    /// inclusive 1-based ranges such as `3-8`. `None` keeps every column.
    pub columns: Option<String>,
    pub has_header: bool,
}

fn resolve_columns(spec: Option<&str>, header: &[String], width: usize) -> Result<Vec<usize>> {
    let Some(spec) = spec else {
        return Ok((0..width).collect());
    };
    let mut out = Vec::new();
    for item in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        if let Some(k) = header.iter().position(|h| h == item) {
            out.push(k);
            continue;
        }
        let position = |s: &str| -> Result<usize> {
            match s.trim().parse::<usize>() {
                Ok(k) if k >= 1 && k <= width => Ok(k - 1),
                _ => Err(Error::InvalidOptions(format!(
                    "column {item:?} is neither a header name nor a position in 1..={width}"
                ))),
            }
        };
        match item.split_once('-') {
            Some((a, b)) => {
                let (a, b) = (position(a)?, position(b)?);
                if a > b {
                    return Err(Error::InvalidOptions(format!("empty column range {item:?}")));
                }
                out.extend(a..=b);
            }
            None => out.push(position(item)?),
        }
    }
    if out.is_empty() {
        return Err(Error::InvalidOptions("no columns selected".into()));
    }
    Ok(out)
}

pub fn read_dataset_csv<R: Read>(reader: R, options: &CsvOptions) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(reader);
    let mut records = rdr.records();
    let mut header: Vec<String> = Vec::new();
    let mut width = None;
    if options.has_header {
        match records.next() {
            Some(r) => {
                let r = r.map_err(csv_error)?;
                header = r.iter().map(str::to_owned).collect();
                width = Some(header.len());
            }
            None => return Err(Error::Parse { line: 1, message: "missing header".into() }),
        }
    }
    let mut raw: Vec<(u64, csv::StringRecord)> = Vec::new();
    for r in records {
        let r = r.map_err(csv_error)?;
        let line = r.position().map_or(0, |p| p.line());
        match width {
            None => width = Some(r.len()),
            Some(w) if w != r.len() => {
                return Err(Error::Parse {
                    line,
                    message: format!("expected {w} fields, found {}", r.len()),
                })
            }
            _ => {}
        }
        raw.push((line, r));
    }
    let width = width.unwrap_or(0);
    let selected = resolve_columns(options.columns.as_deref(), &header, width)?;
    let names = selected
        .iter()
        .map(|&k| header.get(k).cloned().unwrap_or_else(|| format!("c{k}")))
        .collect();
    let rows = raw
        .into_iter()
        .map(|(_, r)| ValueVector::new(selected.iter().map(|&k| Token::new(&r[k])).collect()))
        .collect();
    Dataset::new(names, rows)
}

pub fn load_dataset_csv(path: impl AsRef<Path>, options: &CsvOptions) -> Result<Dataset> {
    let f = std::fs::File::open(path)?;
    read_dataset_csv(f, options)
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    Error::Parse {
        line,
        message: e.to_string(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportConfig {
    pub distinct_count: usize,
    pub weight_mode: WeightMode,
    pub candidate_cap: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CandidateEntry {
    pub index: usize,
    pub values: Vec<String>,
    pub deduced: bool,
    pub rule: Option<Rule>,
    pub score: Option<f64>,
    /// Exact rational score such as `5/6`, when kept.
    pub score_exact: Option<String>,
    pub selected: bool,
    pub label: Option<ConfusionLabel>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatementEntry {
    pub i: usize,
    pub j: usize,
    pub value_i: String,
    pub value_j: String,
    pub required: u64,
    pub members: Vec<usize>,
    pub saturated: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TieEntry {
    pub boundary: f64,
    pub boundary_exact: Option<String>,
    pub tied: usize,
    pub tied_chosen: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionEntry {
    pub chosen: Vec<usize>,
    pub requested: usize,
    pub slots: usize,
    pub clamped: bool,
    pub tie: Option<TieEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub version: u32,
    pub config: ReportConfig,
    pub columns: Vec<String>,
    pub candidate_count: usize,
    pub deduced_count: usize,
    pub slots: usize,
    pub candidates: Vec<CandidateEntry>,
    pub statements: Vec<StatementEntry>,
    pub selection: SelectionEntry,
    pub metrics: Option<ReconstructionMetrics>,
    pub notes: Vec<String>,
}

fn score_parts(s: &Score) -> (f64, Option<String>) {
    (s.value, s.exact_string())
}

impl ReportFile {
    pub fn build(
        rec: &Reconstruction,
        options: &PipelineOptions,
        truth: Option<&BTreeSet<ValueVector>>,
    ) -> Result<Self> {
        let cands = &rec.candidates;
        let labels = truth.map(|t| rec.labels(t)).transpose()?;
        let chosen: BTreeSet<usize> = rec.selection.chosen.iter().copied().collect();
        let candidates = (0..cands.len())
            .map(|k| {
                let score = rec.scores.score_of(k).map(score_parts);
                CandidateEntry {
                    index: k,
                    values: cands.tokens(k).iter().map(|t| t.as_str().to_owned()).collect(),
                    deduced: rec.deduction.contains(k),
                    rule: rec.deduction.attribution.get(&k).copied(),
                    score: score.as_ref().map(|s| s.0),
                    score_exact: score.and_then(|s| s.1),
                    selected: chosen.contains(&k),
                    label: labels.as_ref().map(|l| l[k]),
                }
            })
            .collect();
        let statements = rec
            .statements
            .iter()
            .map(|s: &EdgeStatement| {
                let (a, b) = (s.edge.a, s.edge.b);
                StatementEntry {
                    i: a.column,
                    j: b.column,
                    value_i: cands.domains()[a.column].token(a.code).as_str().to_owned(),
                    value_j: cands.domains()[b.column].token(b.code).as_str().to_owned(),
                    required: s.required,
                    members: s.members.clone(),
                    saturated: s.saturated,
                }
            })
            .collect();
        let sel = &rec.selection;
        let selection = SelectionEntry {
            chosen: sel.chosen.clone(),
            requested: sel.requested,
            slots: sel.slots,
            clamped: sel.clamped,
            tie: sel.tie.as_ref().map(|t| TieEntry {
                boundary: t.boundary.value,
                boundary_exact: t.boundary.exact_string(),
                tied: t.tied,
                tied_chosen: t.tied_chosen,
            }),
        };
        let mut notes = vec![
            "slots = distinct_count - deduced_count; candidates are distinct-row hypotheses".to_owned(),
        ];
        if let Some(t) = &sel.tie {
            notes.push(format!(
                "{}-way score tie at the selection boundary; {} of the tied candidates chosen by row order",
                t.tied, t.tied_chosen
            ));
        }
        if sel.clamped {
            notes.push(format!(
                "requested {} slots but only {} undeduced candidates exist",
                sel.requested, sel.slots
            ));
        }
        if rec.statements.iter().any(|s| s.saturated) {
            notes.push("some statements were clamped to their member count (duplicate rows)".into());
        }
        Ok(ReportFile {
            version: REPORT_VERSION,
            config: ReportConfig {
                distinct_count: rec.distinct_count,
                weight_mode: options.weight_mode,
                candidate_cap: options.candidate_cap,
            },
            columns: cands.columns().to_vec(),
            candidate_count: cands.len(),
            deduced_count: rec.deduction.len(),
            slots: sel.slots,
            candidates,
            statements,
            selection,
            metrics: truth.map(|t| rec.metrics(t)),
            notes,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        to_canonical_json(self)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let r: ReportFile = serde_json::from_str(text)?;
        if r.version != REPORT_VERSION {
            return Err(Error::InvalidOptions(format!(
                "unsupported report version {}",
                r.version
            )));
        }
        if r.candidates.len() != r.candidate_count
            || r.candidates.iter().filter(|c| c.deduced).count() != r.deduced_count
        {
            return Err(Error::InvalidOptions("report counts are inconsistent".into()));
        }
        Ok(r)
    }

    pub fn rows(&self) -> Vec<ValueVector> {
        self.candidates
            .iter()
            .map(|c| ValueVector::from_strs(&c.values))
            .collect()
    }

    /// Statements with edges re-expressed against candidate indices only;
    /// sufficient for [`crate::likelihood::exact_cover_frequencies`].
    pub fn statements(&self) -> Vec<EdgeStatement> {
        use crate::graph::{Edge, Vertex};
        self.statements
            .iter()
            .enumerate()
            .map(|(k, s)| EdgeStatement {
                // edge identity is irrelevant to the oracle; keep it unique
                edge: Edge::new(
                    Vertex { column: s.i, code: k as u32 },
                    Vertex { column: s.j, code: k as u32 },
                ),
                required: s.required,
                members: s.members.clone(),
                saturated: s.saturated,
            })
            .collect()
    }

    pub fn undeduced(&self) -> Vec<usize> {
        self.candidates
            .iter()
            .filter(|c| !c.deduced)
            .map(|c| c.index)
            .collect()
    }
}
