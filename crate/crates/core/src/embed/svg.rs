use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{EmbeddingResult, Method};
use crate::evaluation::ConfusionLabel;

const SIZE: f64 = 600.0;
const MARGIN: f64 = 24.0;
const RADIUS: f64 = 4.0;

// grey levels for the lowest and highest likelihood score
const LIGHTEST: f64 = 235.0;
const DARKEST: f64 = 60.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColorMode {
    Likelihood,
    Accuracy,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PointStyle {
    pub fill: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlotSpec {
    pub mode: ColorMode,
    pub points: Vec<PointStyle>,
    /// Extra `key: value` lines for the metadata comment.
    pub metadata: Vec<(String, String)>,
}

fn grey(level: f64) -> String {
    let v = level.round().clamp(0.0, 255.0) as u8;
    format!("#{v:02x}{v:02x}{v:02x}")
}

/// Deduced candidates black; the rest on a grey ramp, darker for higher
/// score. `scores[k]` is `None` for deduced candidates.
pub fn likelihood_styles(scores: &[Option<f64>]) -> PlotSpec {
    let live: Vec<f64> = scores.iter().flatten().copied().collect();
    let lo = live.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = live.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let points = scores
        .iter()
        .map(|s| PointStyle {
            fill: match s {
                None => "#000000".to_owned(),
                Some(v) => {
                    let t = if hi > lo { (v - lo) / (hi - lo) } else { 0.0 };
                    grey(LIGHTEST - t * (LIGHTEST - DARKEST))
                }
            },
        })
        .collect();
    PlotSpec {
        mode: ColorMode::Likelihood,
        points,
        metadata: vec![(
            "legend".into(),
            "black = deduced; grey ramp = score, darker is higher".into(),
        )],
    }
}

pub fn accuracy_styles(labels: &[ConfusionLabel]) -> PlotSpec {
    let points = labels
        .iter()
        .map(|l| PointStyle {
            fill: match l {
                ConfusionLabel::Deduced | ConfusionLabel::TruePositive => "#000000",
                ConfusionLabel::FalsePositive => "#ff0000",
                ConfusionLabel::FalseNegative => "#ffff00",
                ConfusionLabel::TrueNegative => "#ffffff",
            }
            .to_owned(),
        })
        .collect();
    PlotSpec {
        mode: ColorMode::Accuracy,
        points,
        metadata: vec![(
            "legend".into(),
            "black = deduced or true positive; red = false positive; yellow = false negative; white = true negative".into(),
        )],
    }
}

fn escape_comment(s: &str) -> String {
    s.replace("--", "- -")
}

pub fn render_plot(emb: &EmbeddingResult, spec: &PlotSpec) -> String {
    assert_eq!(
        emb.coords.len(),
        spec.points.len(),
        "one style per embedded point"
    );
    let (mut xmin, mut xmax, mut ymin, mut ymax) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for [x, y] in &emb.coords {
        xmin = xmin.min(*x);
        xmax = xmax.max(*x);
        ymin = ymin.min(*y);
        ymax = ymax.max(*y);
    }
    let span = (xmax - xmin).max(ymax - ymin);
    let scale = if span > 0.0 { (SIZE - 2.0 * MARGIN) / span } else { 0.0 };
    let cx = (xmin + xmax) / 2.0;
    let cy = (ymin + ymax) / 2.0;

    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{SIZE}\" height=\"{SIZE}\" viewBox=\"0 0 {SIZE} {SIZE}\">"
    );
    out.push_str("<!--\n");
    let method = match emb.method {
        Method::Pca => "pca",
        Method::Mds => "mds",
    };
    let _ = writeln!(out, "method: {method}");
    let _ = writeln!(
        out,
        "color: {}",
        match spec.mode {
            ColorMode::Likelihood => "likelihood",
            ColorMode::Accuracy => "accuracy",
        }
    );
    let _ = writeln!(out, "points: {}", emb.coords.len());
    let ev: Vec<String> = emb.eigenvalues.iter().take(2).map(|v| format!("{v:.6e}")).collect();
    let _ = writeln!(out, "eigenvalues: {}", ev.join(", "));
    if !emb.coding.is_empty() {
        let coding: Vec<&str> = emb
            .coding
            .iter()
            .map(|c| match c {
                super::ColumnCoding::Numeric => "numeric",
                super::ColumnCoding::Ordinal => "ordinal",
            })
            .collect();
        let _ = writeln!(out, "column coding: {}", coding.join(", "));
    }
    for w in &emb.warnings {
        let _ = writeln!(out, "warning: {}", escape_comment(w));
    }
    for (k, v) in &spec.metadata {
        let _ = writeln!(out, "{}: {}", escape_comment(k), escape_comment(v));
    }
    out.push_str("-->\n");
    let _ = writeln!(out, "<rect width=\"{SIZE}\" height=\"{SIZE}\" fill=\"#f4f4f4\"/>");
    out.push_str("<g stroke=\"#333333\" stroke-width=\"0.6\">\n");
    for ([x, y], style) in emb.coords.iter().zip(&spec.points) {
        let px = SIZE / 2.0 + (x - cx) * scale;
        // SVG y grows downward
        let py = SIZE / 2.0 - (y - cy) * scale;
        let _ = writeln!(
            out,
            "<circle cx=\"{px:.3}\" cy=\"{py:.3}\" r=\"{RADIUS}\" fill=\"{}\"/>",
            style.fill
        );
    }
    out.push_str("</g>\n</svg>\n");
    out
}
