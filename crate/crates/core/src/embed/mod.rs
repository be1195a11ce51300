//! 2-D embeddings of candidate rows (PCA and classical MDS) and SVG plots
//! coloured by likelihood or by accuracy.
//!
//! Numeric columns embed by value; other columns are coded ordinally by
//! their column token order, and the coding is carried in the result.

mod eigen;
mod svg;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::CandidateSet;
use crate::model::{ColumnDomain, TokenOrder, ValueVector};

pub use eigen::{fix_sign, frobenius, residual, symmetric_eigen, SymmetricEigen};
pub use svg::{accuracy_styles, likelihood_styles, render_plot, ColorMode, PlotSpec, PointStyle};

pub const MDS_CANDIDATE_CAP: usize = 20_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Pca,
    Mds,
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pca" => Ok(Method::Pca),
            "mds" => Ok(Method::Mds),
            other => Err(Error::InvalidOptions(format!("unknown embedding method {other:?}"))),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Pca => "pca",
            Method::Mds => "mds",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnCoding {
    Numeric,
    Ordinal,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingResult {
    pub method: Method,
    pub coords: Vec<[f64; 2]>,
    /// Descending; at least two entries.
    pub eigenvalues: Vec<f64>,
    pub coding: Vec<ColumnCoding>,
    pub warnings: Vec<String>,
}

/// Candidate rows as numbers, one row per candidate.
pub fn numeric_matrix(cands: &CandidateSet) -> (Vec<Vec<f64>>, Vec<ColumnCoding>) {
    let rows: Vec<ValueVector> = (0..cands.len()).map(|k| cands.values(k)).collect();
    numeric_rows(&rows)
}

/// Rows as numbers: numeric columns by value, other columns by rank in
/// bytewise token order. Row order is preserved.
pub fn numeric_rows(rows: &[ValueVector]) -> (Vec<Vec<f64>>, Vec<ColumnCoding>) {
    let d = rows.first().map_or(0, ValueVector::len);
    let domains: Vec<ColumnDomain> = (0..d)
        .map(|c| ColumnDomain::from_tokens(rows.iter().map(|r| r.get(c))))
        .collect();
    let coding: Vec<ColumnCoding> = domains
        .iter()
        .map(|dom| match dom.order() {
            TokenOrder::Numeric => ColumnCoding::Numeric,
            TokenOrder::Bytewise => ColumnCoding::Ordinal,
        })
        .collect();
    let matrix = rows
        .iter()
        .map(|r| {
            (0..d)
                .map(|c| match coding[c] {
                    ColumnCoding::Numeric => r.get(c).numeric().unwrap(),
                    ColumnCoding::Ordinal => domains[c].code(r.get(c)).unwrap() as f64,
                })
                .collect()
        })
        .collect();
    (matrix, coding)
}

pub fn pca_2d(cands: &CandidateSet) -> Result<EmbeddingResult> {
    let (x, coding) = numeric_matrix(cands);
    let mut out = pca_2d_matrix(&x)?;
    out.coding = coding;
    Ok(out)
}

pub fn mds_2d(cands: &CandidateSet) -> Result<EmbeddingResult> {
    let (x, coding) = numeric_matrix(cands);
    let mut out = mds_2d_matrix(&x)?;
    out.coding = coding;
    Ok(out)
}

fn check_shape(x: &[Vec<f64>]) -> Result<usize> {
    let d = x.first().map_or(0, Vec::len);
    if x.is_empty() || d == 0 {
        return Err(Error::InvalidOptions("nothing to embed".into()));
    }
    if x.iter().any(|r| r.len() != d) {
        return Err(Error::InvalidOptions("ragged embedding input".into()));
    }
    Ok(d)
}

fn centered(x: &[Vec<f64>], d: usize) -> Vec<Vec<f64>> {
    let k = x.len() as f64;
    let means: Vec<f64> = (0..d).map(|c| x.iter().map(|r| r[c]).sum::<f64>() / k).collect();
    x.iter()
        .map(|r| r.iter().zip(&means).map(|(v, m)| v - m).collect())
        .collect()
}

fn top_two(e: &SymmetricEigen) -> (Vec<f64>, [Vec<f64>; 2]) {
    let n = e.vectors.first().map_or(0, Vec::len);
    let pick = |k: usize| {
        let mut v = e.vectors.get(k).cloned().unwrap_or_else(|| vec![0.0; n]);
        fix_sign(&mut v);
        v
    };
    let mut values = e.values.clone();
    values.resize(values.len().max(2), 0.0);
    (values, [pick(0), pick(1)])
}

/// Covariance of the centered rows, row-major `d x d`.
pub fn covariance(x: &[Vec<f64>]) -> Result<Vec<f64>> {
    let d = check_shape(x)?;
    let xc = centered(x, d);
    let denom = (x.len().max(2) - 1) as f64;
    let mut cov = vec![0.0; d * d];
    for r in &xc {
        for i in 0..d {
            for j in 0..d {
                cov[i * d + j] += r[i] * r[j];
            }
        }
    }
    cov.iter_mut().for_each(|v| *v /= denom);
    Ok(cov)
}

pub fn pca_2d_matrix(x: &[Vec<f64>]) -> Result<EmbeddingResult> {
    let d = check_shape(x)?;
    let cov = covariance(x)?;
    let xc = centered(x, d);
    let (values, [v1, v2]) = top_two(&symmetric_eigen(&cov, d));
    let dot = |r: &[f64], v: &[f64]| r.iter().zip(v).map(|(a, b)| a * b).sum::<f64>();
    Ok(EmbeddingResult {
        method: Method::Pca,
        coords: xc.iter().map(|r| [dot(r, &v1), dot(r, &v2)]).collect(),
        eigenvalues: values,
        coding: Vec::new(),
        warnings: Vec::new(),
    })
}

/// Double-centred Gram matrix `-1/2 J D² J` of the rows, row-major `k x k`.
pub fn gram_from_distances(x: &[Vec<f64>]) -> Result<Vec<f64>> {
    check_shape(x)?;
    let k = x.len();
    let mut d2 = vec![0.0; k * k];
    for a in 0..k {
        for b in a + 1..k {
            let s: f64 = x[a].iter().zip(&x[b]).map(|(p, q)| (p - q) * (p - q)).sum();
            d2[a * k + b] = s;
            d2[b * k + a] = s;
        }
    }
    let row_mean: Vec<f64> = (0..k)
        .map(|a| d2[a * k..(a + 1) * k].iter().sum::<f64>() / k as f64)
        .collect();
    let grand = row_mean.iter().sum::<f64>() / k as f64;
    let mut b = vec![0.0; k * k];
    for i in 0..k {
        for j in 0..k {
            b[i * k + j] = -0.5 * (d2[i * k + j] - row_mean[i] - row_mean[j] + grand);
        }
    }
    Ok(b)
}

pub fn mds_2d_matrix(x: &[Vec<f64>]) -> Result<EmbeddingResult> {
    let k = x.len();
    if k > MDS_CANDIDATE_CAP {
        return Err(Error::InvalidOptions(format!(
            "MDS is limited to {MDS_CANDIDATE_CAP} candidates, got {k}"
        )));
    }
    let b = gram_from_distances(x)?;
    let e = symmetric_eigen(&b, k);
    let mut warnings = Vec::new();
    let largest = e.values.first().copied().unwrap_or(0.0).max(0.0);
    if let Some(&min) = e.values.last() {
        if min < -1e-6 * largest.max(f64::MIN_POSITIVE) && min < -1e-9 {
            warnings.push(format!("negative Gram eigenvalue {min:e} (largest {largest:e})"));
        }
    }
    let (values, [v1, v2]) = top_two(&e);
    let s1 = values[0].max(0.0).sqrt();
    let s2 = values[1].max(0.0).sqrt();
    Ok(EmbeddingResult {
        method: Method::Mds,
        coords: (0..k).map(|i| [v1[i] * s1, v2[i] * s2]).collect(),
        eigenvalues: values,
        coding: Vec::new(),
        warnings,
    })
}

pub fn embed(cands: &CandidateSet, method: Method) -> Result<EmbeddingResult> {
    match method {
        Method::Pca => pca_2d(cands),
        Method::Mds => mds_2d(cands),
    }
}
