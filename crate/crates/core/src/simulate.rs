//! Random uniform datasets and the Monte Carlo runner.
//!
//! Trial `k` of a run with master seed `m` draws from ChaCha8 seeded with
//! `splitmix64(m ^ splitmix64(k))`, so any trial can be replayed alone and
//! results do not depend on thread count or scheduling.

use std::collections::BTreeMap;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::deduction::{deduce_doubles, deduce_singles};
use crate::error::{Error, Result};
use crate::graph::{build_graph, enumerate_candidates_capped, DEFAULT_CANDIDATE_CAP};
use crate::likelihood::WeightMode;
use crate::lookup::{lookup_reconstruct, LookupStatus};
use crate::model::{default_names, project, Dataset, ValueVector};
use crate::pipeline::reconstruct_from_candidates;

pub const RNG_DESCRIPTION: &str =
    "ChaCha8Rng::seed_from_u64(splitmix64(master_seed ^ splitmix64(trial_index)))";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    CliquesOnly,
    Tuples,
    TuplesPlusLikelihood,
}

impl FromStr for Stage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cliques" | "cliques_only" => Ok(Stage::CliquesOnly),
            "tuples" => Ok(Stage::Tuples),
            "likelihood" | "tuples_plus_likelihood" => Ok(Stage::TuplesPlusLikelihood),
            other => Err(Error::InvalidOptions(format!("unknown stage {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialConfig {
    pub dimension: usize,
    pub n: usize,
    /// One interval per column.
    pub intervals: Vec<u32>,
    pub trials: usize,
    pub seed: u64,
    pub stage: Stage,
    pub weight_mode: WeightMode,
    pub candidate_cap: usize,
}

impl TrialConfig {
    pub fn uniform(dimension: usize, n: usize, interval: u32, trials: usize, seed: u64, stage: Stage) -> Self {
        TrialConfig {
            dimension,
            n,
            intervals: vec![interval; dimension],
            trials,
            seed,
            stage,
            weight_mode: WeightMode::Reciprocal,
            candidate_cap: DEFAULT_CANDIDATE_CAP,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidOptions(m));
        if self.dimension < 2 {
            return bad(format!("dimension {} < 2", self.dimension));
        }
        if self.n < 1 || self.trials < 1 {
            return bad("n and trials must be at least 1".into());
        }
        if self.intervals.len() != self.dimension {
            return bad(format!(
                "{} intervals for dimension {}",
                self.intervals.len(),
                self.dimension
            ));
        }
        if self.intervals.contains(&0) {
            return bad("intervals must be at least 1".into());
        }
        Ok(())
    }
}

pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn trial_seed(master: u64, index: u64) -> u64 {
    splitmix64(master ^ splitmix64(index))
}

pub fn generate_dataset(config: &TrialConfig, index: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(config.seed, index));
    let rows = (0..config.n)
        .map(|_| {
            ValueVector::from(
                config
                    .intervals
                    .iter()
                    .map(|&i| rng.random_range(0..i))
                    .collect::<Vec<u32>>(),
            )
        })
        .collect();
    Dataset::new(default_names(config.dimension), rows).expect("generated rows fit the config")
}

/// Per-trial measurements. Stage-dependent fields are `None` when the stage
/// did not run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub index: u64,
    pub distinct: usize,
    pub candidates: usize,
    pub phantoms: usize,
    pub lookup_feasible: bool,
    /// Candidate set equals the distinct-row set.
    pub cliques_exact: bool,
    pub singles_deduced: Option<usize>,
    pub doubles_deduced: Option<usize>,
    pub tuples_full: Option<bool>,
    pub tuples_proportion: Option<f64>,
    pub likelihood_proportion: Option<f64>,
    pub expected_random: Option<f64>,
}

pub fn run_trial(config: &TrialConfig, index: u64) -> Result<TrialOutcome> {
    let data = generate_dataset(config, index);
    let truth = data.distinct_set();
    let proj = project(&data);
    let graph = build_graph(&proj)?;
    let cands = enumerate_candidates_capped(&graph, config.candidate_cap)?;
    let true_flags: Vec<bool> = (0..cands.len())
        .map(|k| truth.contains(&cands.values(k)))
        .collect();
    let true_in_cands = true_flags.iter().filter(|&&t| t).count();
    let mut out = TrialOutcome {
        index,
        distinct: truth.len(),
        candidates: cands.len(),
        phantoms: cands.len() - true_in_cands,
        lookup_feasible: lookup_reconstruct(&proj).status == LookupStatus::Reconstructed,
        cliques_exact: cands.len() == truth.len() && true_in_cands == truth.len(),
        singles_deduced: None,
        doubles_deduced: None,
        tuples_full: None,
        tuples_proportion: None,
        likelihood_proportion: None,
        expected_random: None,
    };
    if config.stage == Stage::CliquesOnly {
        return Ok(out);
    }
    let singles = deduce_singles(&cands);
    let doubles = deduce_doubles(&cands);
    let correct = doubles.deduced.iter().filter(|&&k| true_flags[k]).count();
    out.singles_deduced = Some(singles.len());
    out.doubles_deduced = Some(doubles.len());
    out.tuples_full = Some(correct == truth.len());
    out.tuples_proportion = Some(correct as f64 / truth.len() as f64);
    if config.stage == Stage::TuplesPlusLikelihood {
        let rec = reconstruct_from_candidates(&proj, cands, truth.len(), config.weight_mode)?;
        let m = rec.metrics(&truth);
        out.likelihood_proportion = Some(m.proportion_recovered);
        out.expected_random = Some(m.expected_random);
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub mean: f64,
    /// Sample standard deviation over the square root of the trial count.
    pub se: f64,
    pub count: usize,
}

impl MetricSummary {
    pub fn from_values(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return MetricSummary {
                mean: f64::NAN,
                se: f64::NAN,
                count: 0,
            };
        }
        let mean = neumaier_sum(values.iter().copied()) / n as f64;
        let se = if n < 2 {
            0.0
        } else {
            let ss = neumaier_sum(values.iter().map(|v| (v - mean) * (v - mean)));
            (ss / (n - 1) as f64).sqrt() / (n as f64).sqrt()
        };
        MetricSummary { mean, se, count: n }
    }
}

pub fn neumaier_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub config: TrialConfig,
    pub rng: String,
    pub seed: u64,
    pub trials: usize,
    pub completed: usize,
    /// Trials dropped because of an error, by error text.
    pub excluded: BTreeMap<String, usize>,
    pub metrics: BTreeMap<String, MetricSummary>,
}

pub fn run_trials(config: &TrialConfig) -> Result<AggregateReport> {
    run_trials_detailed(config).map(|(report, _)| report)
}

/// Runs every trial in parallel; outcomes are returned in trial order.
pub fn run_trials_detailed(config: &TrialConfig) -> Result<(AggregateReport, Vec<TrialOutcome>)> {
    config.validate()?;
    let results: Vec<Result<TrialOutcome>> = (0..config.trials as u64)
        .into_par_iter()
        .map(|k| run_trial(config, k))
        .collect();
    let mut excluded = BTreeMap::new();
    let mut outcomes = Vec::with_capacity(results.len());
    for r in results {
        match r {
            Ok(o) => outcomes.push(o),
            Err(e) => {
                let kind = match e {
                    Error::CandidateExplosion { cap, .. } => format!("candidate explosion (cap {cap})"),
                    other => other.to_string(),
                };
                *excluded.entry(kind).or_insert(0) += 1;
            }
        }
    }
    let report = AggregateReport {
        config: config.clone(),
        rng: RNG_DESCRIPTION.to_owned(),
        seed: config.seed,
        trials: config.trials,
        completed: outcomes.len(),
        excluded,
        metrics: summarize(&outcomes),
    };
    Ok((report, outcomes))
}

fn summarize(outcomes: &[TrialOutcome]) -> BTreeMap<String, MetricSummary> {
    let flag = |b: bool| if b { 1.0 } else { 0.0 };
    let mut m = BTreeMap::new();
    let mut put = |name: &str, values: Vec<f64>| {
        if !values.is_empty() {
            m.insert(name.to_owned(), MetricSummary::from_values(&values));
        }
    };
    put("distinct_rows", outcomes.iter().map(|o| o.distinct as f64).collect());
    put("candidates", outcomes.iter().map(|o| o.candidates as f64).collect());
    put("phantoms", outcomes.iter().map(|o| o.phantoms as f64).collect());
    put("lookup_success_rate", outcomes.iter().map(|o| flag(o.lookup_feasible)).collect());
    put("cliques_full_recovery_rate", outcomes.iter().map(|o| flag(o.cliques_exact)).collect());
    put("singles_deduced", outcomes.iter().filter_map(|o| o.singles_deduced.map(|v| v as f64)).collect());
    put("doubles_deduced", outcomes.iter().filter_map(|o| o.doubles_deduced.map(|v| v as f64)).collect());
    put("tuples_full_recovery_rate", outcomes.iter().filter_map(|o| o.tuples_full.map(flag)).collect());
    put("tuples_proportion_recovered", outcomes.iter().filter_map(|o| o.tuples_proportion).collect());
    put("likelihood_proportion_recovered", outcomes.iter().filter_map(|o| o.likelihood_proportion).collect());
    put("expected_random", outcomes.iter().filter_map(|o| o.expected_random).collect());
    m
}
