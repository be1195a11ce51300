//! Acceptance suite. Prints one PASS/FAIL line per criterion with the
//! measured values and the pinned tolerance.
//!
//! Criteria listed in `KNOWN_UNATTAINABLE` are still evaluated in full and
//! reported as FAIL; the process exits non-zero if any other criterion
//! fails, or if a listed one starts passing.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use bivrecon::deduction::deduce_doubles;
use bivrecon::embed::{frobenius, mds_2d_matrix, residual, symmetric_eigen};
use bivrecon::graph::{Edge, Vertex};
use bivrecon::io::{load_dataset_csv, projections_to_json, CsvOptions};
use bivrecon::likelihood::{
    exact_cover_frequencies, score_candidates, select_rows, EdgeStatement, WeightMode,
    DEFAULT_ORACLE_CAP,
};
use bivrecon::lookup::{column_distinct_probability_exact, ProbabilityMode};
use bivrecon::simulate::{generate_dataset, run_trials, run_trials_detailed, splitmix64, Stage, TrialConfig};
use bivrecon::{build_graph, enumerate_candidates, project, run_pipeline, Dataset, PipelineOptions, ValueVector};
use num_bigint::BigInt;
use num_rational::BigRational;
use rayon::prelude::*;
use statrs::distribution::{Beta, ContinuousCDF, StudentsT};

/// Criteria whose published targets cannot be met by a faithful
/// implementation. Each has an analysis in the README.
const KNOWN_UNATTAINABLE: &[u32] = &[3, 8];

const SEED: u64 = 1;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn within(x: f64, target: f64, tol: f64) -> bool {
    (x - target).abs() <= tol
}

// criterion 1 -----------------------------------------------------------------

const A: usize = 0;
const D: usize = 3;
const E: usize = 4;
const F: usize = 5;
const G: usize = 6;
const H: usize = 7;

fn statement(id: u32, members: &[usize]) -> EdgeStatement {
    EdgeStatement {
        edge: Edge::new(Vertex { column: 0, code: id }, Vertex { column: 1, code: id }),
        required: 1,
        members: members.to_vec(),
        saturated: false,
    }
}

fn worked_example() -> Outcome {
    let stmts = vec![statement(0, &[A, F, H]), statement(1, &[E, F, G]), statement(2, &[D, H])];
    let universe: Vec<usize> = (0..8).collect();

    // brute force over all 3-subsets of 8 candidates
    let mut brute_solutions = 0u64;
    let mut brute_counts = [0u64; 8];
    for x in 0..8 {
        for y in x + 1..8 {
            for z in y + 1..8 {
                let pick = [x, y, z];
                if stmts.iter().all(|s| s.members.iter().any(|m| pick.contains(m))) {
                    brute_solutions += 1;
                    for p in pick {
                        brute_counts[p] += 1;
                    }
                }
            }
        }
    }

    let freq = exact_cover_frequencies(&stmts, &universe, 3, DEFAULT_ORACLE_CAP).unwrap();
    let scores = score_candidates(&stmts, &universe, WeightMode::Reciprocal);
    let exact = |k: usize| scores.score_of(k).and_then(|s| s.exact_string()).unwrap_or_default();
    let sel = select_rows(&scores, 3);
    let chosen: BTreeSet<usize> = sel.chosen.iter().copied().collect();
    let counts = (freq.count(H), freq.count(F), freq.count(D));

    let pass = freq.solutions == 22
        && brute_solutions == 22
        && counts == (Some(15), Some(11), Some(10))
        && (0..8).all(|k| freq.count(k) == Some(brute_counts[k]))
        && exact(H) == "5/6"
        && exact(F) == "2/3"
        && exact(D) == "1/2"
        && chosen == BTreeSet::from([H, F, D]);
    outcome(
        pass,
        format!(
            "solutions {} (brute force {brute_solutions}), H/F/D appearances {:?}, scores H={} F={} D={}, selection {:?}",
            freq.solutions,
            counts,
            exact(H),
            exact(F),
            exact(D),
            sel.chosen
        ),
    )
}

// criterion 2 -----------------------------------------------------------------

fn cliques_recovery_rate() -> Outcome {
    let cfg = TrialConfig::uniform(6, 12, 10, 2000, SEED, Stage::CliquesOnly);
    let report = run_trials(&cfg).unwrap();
    let m = &report.metrics["cliques_full_recovery_rate"];
    outcome(
        within(m.mean, 0.86, 0.03) && report.completed == 2000,
        format!(
            "full-recovery rate {:.4} (SE {:.4}) over {} trials; target 0.86 +/- 0.03",
            m.mean, m.se, report.completed
        ),
    )
}

// criterion 3 -----------------------------------------------------------------

fn singles_and_doubles() -> Outcome {
    let cfg = TrialConfig::uniform(5, 100, 25, 400, SEED, Stage::Tuples);
    let report = run_trials(&cfg).unwrap();
    let singles = &report.metrics["singles_deduced"];
    let doubles = &report.metrics["doubles_deduced"];
    // probability that a given row holds a value seen once in its column,
    // for iid uniform values: 1 - (1 - (1 - 1/I)^(n-1))^D
    let q = (24.0f64 / 25.0).powi(99);
    let analytic = 100.0 * (1.0 - (1.0 - q).powi(5));
    outcome(
        within(singles.mean, 11.8, 2.0) && within(doubles.mean, 99.5, 0.5),
        format!(
            "singles {:.3} (SE {:.3}; analytic {:.2}) target 11.8 +/- 2.0; doubles {:.3} (SE {:.3}) target 99.5 +/- 0.5; {} trials",
            singles.mean, singles.se, analytic, doubles.mean, doubles.se, report.completed
        ),
    )
}

// criterion 4 -----------------------------------------------------------------

fn soundness_sweep() -> Outcome {
    let trials = 2000u64;
    let violations: Vec<String> = (0..trials)
        .into_par_iter()
        .filter_map(|k| {
            let s = splitmix64(SEED ^ splitmix64(k.wrapping_add(0xa5a5)));
            let d = 3 + (s % 5) as usize;
            let n = 4 + ((s >> 8) % 61) as usize;
            let i = 2 + ((s >> 16) % 31) as u32;
            let cfg = TrialConfig::uniform(d, n, i, 1, s, Stage::Tuples);
            let data = generate_dataset(&cfg, 0);
            let truth = data.distinct_set();
            let cands = enumerate_candidates(&build_graph(&project(&data)).unwrap()).unwrap();
            let found: BTreeSet<ValueVector> = (0..cands.len()).map(|c| cands.values(c)).collect();
            if !truth.is_subset(&found) {
                return Some(format!("trial {k} (D={d}, n={n}, I={i}): true row missing"));
            }
            let ded = deduce_doubles(&cands);
            if let Some(bad) = ded.deduced.iter().find(|&&c| !truth.contains(&cands.values(c))) {
                return Some(format!("trial {k} (D={d}, n={n}, I={i}): phantom {bad} deduced"));
            }
            None
        })
        .collect();
    outcome(
        violations.is_empty(),
        format!(
            "{trials} trials over D 3..7, n 4..64, I 2..32: {} violations{}",
            violations.len(),
            violations.first().map(|v| format!(" (first: {v})")).unwrap_or_default()
        ),
    )
}

// criterion 5 -----------------------------------------------------------------

fn parity(odd: bool) -> Dataset {
    let rows = (0..8u32)
        .map(|k| [k & 1, (k >> 1) & 1, (k >> 2) & 1])
        .filter(|r| (r[0] ^ r[1] ^ r[2] == 1) == odd)
        .map(|r| ValueVector::from(r.to_vec()))
        .collect();
    Dataset::unnamed(rows).unwrap()
}

fn xor_indeterminacy() -> Outcome {
    let even = projections_to_json(&project(&parity(false))).unwrap();
    let odd = projections_to_json(&project(&parity(true))).unwrap();
    let rec = run_pipeline(&project(&parity(false)), 4, PipelineOptions::default()).unwrap();
    let tie = rec.selection.tie.as_ref().map(|t| (t.tied, t.tied_chosen));
    let values: BTreeSet<String> = (0..rec.candidates.len())
        .filter_map(|k| rec.scores.score_of(k).and_then(|s| s.exact_string()))
        .collect();
    outcome(
        even == odd
            && rec.candidates.len() == 8
            && rec.deduction.is_empty()
            && tie == Some((8, 4))
            && values.len() == 1,
        format!(
            "projection files identical: {}; {} candidates, {} deduced, tie (tied, chosen) {:?}, distinct scores {:?}",
            even == odd,
            rec.candidates.len(),
            rec.deduction.len(),
            tie,
            values
        ),
    )
}

// criterion 6 -----------------------------------------------------------------

/// Number of length-`n` sequences over `i` symbols with no repeats, counted
/// by walking every sequence.
fn count_all_distinct(i: u64, n: u32) -> (u64, u64) {
    let total = i.pow(n);
    let mut distinct = 0;
    for code in 0..total {
        let mut seen = 0u64;
        let mut x = code;
        let mut ok = true;
        for _ in 0..n {
            let bit = 1 << (x % i);
            if seen & bit != 0 {
                ok = false;
                break;
            }
            seen |= bit;
            x /= i;
        }
        distinct += ok as u64;
    }
    (distinct, total)
}

fn clopper_pearson(successes: u64, trials: u64, level: f64) -> (f64, f64) {
    let alpha = 1.0 - level;
    let lo = if successes == 0 {
        0.0
    } else {
        Beta::new(successes as f64, (trials - successes + 1) as f64)
            .unwrap()
            .inverse_cdf(alpha / 2.0)
    };
    let hi = if successes == trials {
        1.0
    } else {
        Beta::new((successes + 1) as f64, (trials - successes) as f64)
            .unwrap()
            .inverse_cdf(1.0 - alpha / 2.0)
    };
    (lo, hi)
}

fn lookup_probability() -> Outcome {
    let mut mismatches = Vec::new();
    let mut cells = 0;
    for i in 1..=6u64 {
        for n in 1..=4u32 {
            let (distinct, total) = count_all_distinct(i, n);
            let expected = BigRational::new(BigInt::from(distinct), BigInt::from(total));
            let got = column_distinct_probability_exact(i, n as u64, ProbabilityMode::Corrected);
            cells += 1;
            if got.as_ref() != Some(&expected) {
                mismatches.push(format!("I={i} N={n}: {got:?} vs {expected}"));
            }
        }
    }

    let (d, n, i, trials) = (3usize, 4u64, 6u64, 10_000usize);
    let cfg = TrialConfig::uniform(d, n as usize, i as u32, trials, SEED, Stage::CliquesOnly);
    let report = run_trials(&cfg).unwrap();
    let successes = (report.metrics["lookup_success_rate"].mean * trials as f64).round() as u64;
    let (lo, hi) = clopper_pearson(successes, trials as u64, 0.99);
    let corrected = 1.0 - (1.0 - 360.0 / 1296.0f64).powi(d as i32);
    let published = column_distinct_probability_exact(i, n, ProbabilityMode::AsPublished).unwrap();
    let corrected_exact = column_distinct_probability_exact(i, n, ProbabilityMode::Corrected).unwrap();
    let empirical_ok = (lo..=hi).contains(&corrected);
    outcome(
        mismatches.is_empty() && empirical_ok,
        format!(
            "exhaustive {cells} cells, {} mismatches; D={d} N={n} I={i}: empirical {}/{trials}, 99% CI [{lo:.4}, {hi:.4}], corrected {corrected:.4}; per-column corrected {corrected_exact}, as published {published}",
            mismatches.len(),
            successes
        ),
    )
}

// criterion 7 -----------------------------------------------------------------

fn beats_chance() -> Outcome {
    let cfg = TrialConfig::uniform(5, 32, 8, 100, SEED, Stage::TuplesPlusLikelihood);
    let (report, outcomes) = run_trials_detailed(&cfg).unwrap();
    let diffs: Vec<f64> = outcomes
        .iter()
        .filter_map(|o| Some(o.likelihood_proportion? - o.expected_random?))
        .collect();
    let k = diffs.len() as f64;
    let mean = diffs.iter().sum::<f64>() / k;
    let var = diffs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0);
    let t = mean / (var / k).sqrt();
    let p = 1.0 - StudentsT::new(0.0, 1.0, k - 1.0).unwrap().cdf(t);
    let m = &report.metrics;
    outcome(
        diffs.len() >= 100 && mean > 0.0 && p < 0.01,
        format!(
            "{} paired trials: likelihood {:.4} vs expected {:.4}, mean difference {mean:.4}, t = {t:.2}, one-sided p = {p:.2e}; target p < 0.01",
            diffs.len(),
            m["likelihood_proportion_recovered"].mean,
            m["expected_random"].mean
        ),
    )
}

// criterion 8 -----------------------------------------------------------------

fn iris_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/data/iris.csv")
}

fn iris() -> Outcome {
    let options = CsvOptions {
        columns: None,
        has_header: true,
    };
    let data = load_dataset_csv(iris_path(), &options).unwrap();
    let per_column = data.distinct_per_column();
    let truth = data.distinct_set();
    let rec = run_pipeline(&project(&data), truth.len(), PipelineOptions::default()).unwrap();
    let m = rec.metrics(&truth);
    let actual = 100.0 * m.proportion_recovered;
    let pass = per_column == [35, 23, 43, 22, 3]
        && rec.candidates.len() == 321
        && rec.deduction.len() == 63
        && within(actual, 71.3, 10.0);
    outcome(
        pass,
        format!(
            "distinct per column {per_column:?}, {} distinct rows; candidates {} (target 321), deduced {} (target 63), actual {actual:.1}% (target 71.3 +/- 10), expected {:.1}%",
            truth.len(),
            rec.candidates.len(),
            rec.deduction.len(),
            100.0 * m.expected_random
        ),
    )
}

// criterion 9 -----------------------------------------------------------------

fn cli(args: &[&str], dir: &Path) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_bivrecon"))
        .args(args)
        .current_dir(dir)
        .env_remove("BIVRECON_SEED")
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!("{args:?}: {}", String::from_utf8_lossy(&out.stderr)))
    }
}

fn determinism() -> Outcome {
    let iris = iris_path().canonicalize().unwrap();
    let iris = iris.to_str().unwrap();
    let runs: Vec<Vec<Vec<u8>>> = (0..2)
        .map(|_| {
            let dir = tempfile::tempdir().unwrap();
            let p = dir.path();
            std::fs::write(p.join("xor.csv"), "a,b,c\n0,0,0\n0,1,1\n1,0,1\n1,1,0\n").unwrap();
            let steps: Vec<Vec<&str>> = vec![
                vec!["--threads", "3", "project", iris, "-o", "iris.json"],
                vec!["--threads", "3", "reconstruct", "iris.json", "--distinct-count", "147", "--truth", iris, "-o", "iris-report.json"],
                vec!["--threads", "3", "embed", "iris-report.json", "--method", "pca", "--color", "accuracy", "-o", "pca.svg"],
                vec!["--threads", "3", "embed", "iris-report.json", "--method", "mds", "--color", "likelihood", "-o", "mds.svg"],
                vec!["--threads", "3", "project", "xor.csv", "-o", "xor.json"],
                vec!["--threads", "3", "reconstruct", "xor.json", "--distinct-count", "4", "-o", "xor-report.json"],
                vec!["--threads", "3", "oracle", "xor-report.json", "-o", "oracle.json"],
                vec!["--threads", "3", "simulate", "--dim", "5", "--n", "32", "--interval", "8", "--trials", "40", "--seed", "9", "-o", "sim.json"],
            ];
            for s in &steps {
                cli(s, p).unwrap();
            }
            ["iris.json", "iris-report.json", "pca.svg", "mds.svg", "xor.json", "xor-report.json", "oracle.json", "sim.json"]
                .iter()
                .map(|f| std::fs::read(p.join(f)).unwrap())
                .collect()
        })
        .collect();
    let same = runs[0] == runs[1];
    let bytes: usize = runs[0].iter().map(Vec::len).sum();
    outcome(
        same,
        format!("8 output files ({bytes} bytes) from 8 commands, two runs with --threads 3: byte-identical {same}"),
    )
}

// criterion 10 ----------------------------------------------------------------

struct Stream(u64);

impl Stream {
    fn unit(&mut self) -> f64 {
        self.0 = self.0.wrapping_add(1);
        (splitmix64(self.0) >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
    }
}

fn embedding_numerics() -> Outcome {
    let mut rng = Stream(SEED);
    let mut worst_residual = 0.0f64;
    for n in [2usize, 3, 5, 8, 13, 21, 34] {
        for _ in 0..3 {
            let mut a = vec![0.0; n * n];
            for r in 0..n {
                for c in 0..=r {
                    let x = rng.unit() * 10.0;
                    a[r * n + c] = x;
                    a[c * n + r] = x;
                }
            }
            let e = symmetric_eigen(&a, n);
            let scale = frobenius(&a);
            for (v, vec) in e.values.iter().zip(&e.vectors) {
                worst_residual = worst_residual.max(residual(&a, n, *v, vec) / scale);
            }
        }
    }

    let mut worst_distance = 0.0f64;
    for k in [3usize, 6, 12, 25, 60] {
        let pts: Vec<[f64; 2]> = (0..k).map(|_| [rng.unit() * 10.0, rng.unit() * 10.0]).collect();
        // plant the plane in 5-D along two orthonormal directions plus an offset
        let u = [0.6, 0.0, 0.8, 0.0, 0.0];
        let v = [0.0, 0.6, 0.0, 0.0, -0.8];
        let offset = [1.0, -2.0, 3.0, 0.5, 7.0];
        let x: Vec<Vec<f64>> = pts
            .iter()
            .map(|p| (0..5).map(|c| offset[c] + p[0] * u[c] + p[1] * v[c]).collect())
            .collect();
        let e = mds_2d_matrix(&x).unwrap();
        for a in 0..k {
            for b in 0..k {
                let want = ((pts[a][0] - pts[b][0]).powi(2) + (pts[a][1] - pts[b][1]).powi(2)).sqrt();
                let got = ((e.coords[a][0] - e.coords[b][0]).powi(2) + (e.coords[a][1] - e.coords[b][1]).powi(2)).sqrt();
                worst_distance = worst_distance.max((want - got).abs());
            }
        }
    }
    outcome(
        worst_residual <= 1e-9 && worst_distance <= 1e-6,
        format!(
            "worst relative eigen residual {worst_residual:.2e} (limit 1e-9); worst MDS distance error {worst_distance:.2e} (limit 1e-6)"
        ),
    )
}

type Criterion = (u32, &'static str, fn() -> Outcome);

fn main() {
    let criteria: Vec<Criterion> = vec![
        (1, "worked example exactness", worked_example),
        (2, "cliques-only recovery at D=6 n=12 I=10", cliques_recovery_rate),
        (3, "singles and doubles at D=5 n=100 I=25", singles_and_doubles),
        (4, "completeness and doubles soundness sweep", soundness_sweep),
        (5, "XOR parity indeterminacy", xor_indeterminacy),
        (6, "column-distinct probability", lookup_probability),
        (7, "likelihood beats random guessing", beats_chance),
        (8, "Iris candidates and deductions", iris),
        (9, "CLI determinism", determinism),
        (10, "embedding numerics", embedding_numerics),
    ];
    let mut unexpected = Vec::new();
    for (id, name, run) in criteria {
        let start = Instant::now();
        let o = run();
        let known = KNOWN_UNATTAINABLE.contains(&id);
        let tag = match (o.pass, known) {
            (true, false) => "PASS",
            (false, true) => "FAIL (known unattainable)",
            (false, false) => "FAIL",
            (true, true) => "PASS (listed as unattainable; update the list)",
        };
        if o.pass == known {
            unexpected.push(id);
        }
        println!(
            "[{tag}] criterion {id}: {name}: {} ({:.2}s)",
            o.detail,
            start.elapsed().as_secs_f64()
        );
    }
    if !unexpected.is_empty() {
        eprintln!("unexpected acceptance results for criteria {unexpected:?}");
        std::process::exit(1);
    }
}
