//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use menger_core::curvature::{beta, c2_k, menger, partial_defect, Triple};
use menger_core::datasets::{gen_cantor4, gen_circle, gen_lipschitz_graph, gen_segment, Dataset};
use menger_core::diagnostics::{coverage, DistanceMode};
use menger_core::ordering::{find_order, OrderabilityResult};
use menger_core::pipeline::{build_curve, BuildOptions, BuildOutcome};
use menger_core::{Config, FiniteMetricSpace, Measure, PointId, Subset};

type Verdict = Result<String, String>;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn within(limit: Duration, took: Duration) -> Result<(), String> {
    if took <= limit {
        Ok(())
    } else {
        Err(format!("took {took:.2?}, limit {limit:.0?}"))
    }
}

fn heron_circumradius(a: f64, b: f64, c: f64) -> f64 {
    let s = (a + b + c) / 2.0;
    let area = (s * (s - a) * (s - b) * (s - c)).sqrt();
    a * b * c / (4.0 * area)
}

fn random_triangle(r: &mut ChaCha8Rng) -> FiniteMetricSpace {
    loop {
        let pts: Vec<Vec<f64>> = (0..3)
            .map(|_| vec![r.random_range(-10.0..10.0), r.random_range(-10.0..10.0)])
            .collect();
        let (p, q, s) = (&pts[0], &pts[1], &pts[2]);
        let twice_area = ((q[0] - p[0]) * (s[1] - p[1]) - (s[0] - p[0]) * (q[1] - p[1])).abs();
        let longest = [(p, q), (q, s), (p, s)]
            .iter()
            .map(|(u, v)| (u[0] - v[0]).hypot(u[1] - v[1]))
            .fold(0.0, f64::max);
        // keep the smallest height at least a thousandth of the longest side
        if twice_area / longest >= 1e-3 * longest {
            return FiniteMetricSpace::from_coordinates(pts).unwrap();
        }
    }
}

fn t012() -> Triple {
    Triple::new(PointId(0), PointId(1), PointId(2)).unwrap()
}

fn criterion_1() -> Verdict {
    let start = Instant::now();
    let mut r = rng(1);
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        let s = random_triangle(&mut r);
        let (a, b, c) = (
            s.d(PointId(0), PointId(1)),
            s.d(PointId(1), PointId(2)),
            s.d(PointId(0), PointId(2)),
        );
        let oracle = 1.0 / heron_circumradius(a, b, c);
        let got = menger(&s, t012()).map_err(|e| e.to_string())?;
        worst = worst.max((got - oracle).abs() / oracle);
    }
    within(Duration::from_secs(1), start.elapsed())?;
    if worst <= 1e-9 {
        Ok(format!("10000 triangles, worst relative error {worst:.2e}"))
    } else {
        Err(format!("worst relative error {worst:.2e}"))
    }
}

fn criterion_2() -> Verdict {
    let mut r = rng(2);
    let mut worst: f64 = 0.0;
    for i in 0..10_000 {
        let s = if i % 2 == 0 {
            random_triangle(&mut r)
        } else {
            // perturbed matrix source, still a metric
            let base = random_triangle(&mut r);
            let m: Vec<Vec<f64>> = (0..3)
                .map(|a| {
                    (0..3)
                        .map(|b| {
                            if a == b {
                                0.0
                            } else {
                                base.d(PointId(a), PointId(b)) * 1.01
                            }
                        })
                        .collect()
                })
                .collect();
            FiniteMetricSpace::from_matrix(m).unwrap()
        };
        let t = t012();
        let c0 = menger(&s, t).map_err(|e| e.to_string())?;
        let d0 = partial_defect(&s, t).map_err(|e| e.to_string())?;
        for p in t.permutations() {
            let c = menger(&s, p).map_err(|e| e.to_string())?;
            let d = partial_defect(&s, p).map_err(|e| e.to_string())?;
            if d.to_bits() != d0.to_bits() {
                return Err(format!("defect differs under permutation: {d} vs {d0}"));
            }
            worst = worst.max((c - c0).abs() / c0.abs().max(f64::MIN_POSITIVE));
        }
    }
    if worst <= 1e-12 {
        Ok(format!("10000 triples, defect exact, menger worst {worst:.2e}"))
    } else {
        Err(format!("menger varies by {worst:.2e}"))
    }
}

/// Random weighted space of at most 25 points; odd seeds give a perturbed
/// matrix source that stays a metric.
fn random_space(r: &mut ChaCha8Rng, matrix: bool) -> (FiniteMetricSpace, Measure) {
    let n = r.random_range(3..=25);
    let pts: Vec<Vec<f64>> = (0..n)
        .map(|_| vec![r.random_range(0.0..1.0), r.random_range(0.0..1.0)])
        .collect();
    let weights: Vec<f64> = (0..n).map(|_| r.random_range(0.01..1.0)).collect();
    let measure = Measure::new(weights).unwrap();
    if !matrix {
        return (FiniteMetricSpace::from_coordinates(pts).unwrap(), measure);
    }
    let eu = FiniteMetricSpace::from_coordinates(pts).unwrap();
    // adding c_ij in [a, 2a] off the diagonal keeps the triangle inequality
    let a = 0.05;
    let mut m = vec![vec![0.0; n]; n];
    #[allow(clippy::needless_range_loop)]
    for i in 0..n {
        for j in (i + 1)..n {
            let v = eu.d(PointId(i), PointId(j)) + r.random_range(a..=2.0 * a);
            m[i][j] = v;
            m[j][i] = v;
        }
    }
    (FiniteMetricSpace::from_matrix(m).unwrap(), measure)
}

fn criterion_3() -> Verdict {
    let start = Instant::now();
    let mut r = rng(3);
    let mut violations = 0;
    let mut checks = 0;
    for i in 0..200 {
        let (s, m) = random_space(&mut r, i % 2 == 1);
        if !s.validate_metric(1e-12).is_valid() {
            return Err(format!("space {i} is not a metric"));
        }
        let all = Subset::full(s.len());
        let mid = beta(&s, &m, &all).map_err(|e| e.to_string())?.value;
        let full = c2_k(&s, &m, &all, f64::INFINITY).map_err(|e| e.to_string())?.value;
        for k in [1.5, 2.0, 3.0, 5.0] {
            let lhs = c2_k(&s, &m, &all, k).map_err(|e| e.to_string())?.value / (4.0 * k * k);
            checks += 1;
            if lhs > mid + 1e-12 || mid > full / 2.0 + 1e-12 {
                violations += 1;
            }
        }
    }
    within(Duration::from_secs(30), start.elapsed())?;
    if violations == 0 {
        Ok(format!("{checks} chains, no violations"))
    } else {
        Err(format!("{violations} of {checks} chains violated"))
    }
}

fn criterion_4() -> Verdict {
    let mut r = rng(4);
    let mut worst: f64 = 0.0;
    for i in 0..50 {
        let (s, m) = random_space(&mut r, i % 2 == 1);
        let all = Subset::full(s.len());
        let b = beta(&s, &m, &all).unwrap().value;
        let c = c2_k(&s, &m, &all, 3.0).unwrap().value;
        for lambda in [0.1, 3.0, 10.0] {
            let (s2, m2) = (s.scaled(lambda), m.scaled(lambda));
            let b2 = beta(&s2, &m2, &all).unwrap().value;
            let c2 = c2_k(&s2, &m2, &all, 3.0).unwrap().value;
            for (scaled, base) in [(b2, b), (c2, c)] {
                if base != 0.0 {
                    worst = worst.max((scaled - lambda * base).abs() / (lambda * base).abs());
                } else if scaled != 0.0 {
                    return Err("zero energy became nonzero under scaling".into());
                }
            }
        }
    }
    if worst <= 1e-9 {
        Ok(format!("50 spaces x 3 factors, worst relative error {worst:.2e}"))
    } else {
        Err(format!("worst relative error {worst:.2e}"))
    }
}

/// Every ascending triple of the sequence has its outer pair farthest apart.
fn triple_condition(s: &FiniteMetricSpace, seq: &[PointId]) -> bool {
    let n = seq.len();
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                let outer = s.d(seq[i], seq[k]);
                if outer < s.d(seq[i], seq[j]) || outer < s.d(seq[j], seq[k]) {
                    return false;
                }
            }
        }
    }
    true
}

fn criterion_5() -> Verdict {
    let square = FiniteMetricSpace::from_coordinates(vec![
        vec![0.0, 0.0],
        vec![1.0, 0.0],
        vec![1.0, 1.0],
        vec![0.0, 1.0],
    ])
    .unwrap();
    match find_order(&square, &Subset::full(4)) {
        OrderabilityResult::CyclicQuadruple { .. } => {}
        other => return Err(format!("unit square gave {other:?}")),
    }
    let mut r = rng(5);
    for trial in 0..100 {
        let n = r.random_range(2..=9);
        let dir = r.random_range(0.0..std::f64::consts::PI);
        let mut ts: Vec<f64> = Vec::new();
        while ts.len() < n {
            let t: f64 = r.random_range(-5.0..5.0);
            if ts.iter().all(|&u| (u - t).abs() > 1e-3) {
                ts.push(t);
            }
        }
        // ids are assigned in a random order, not in coordinate order
        let pts: Vec<Vec<f64>> = ts.iter().map(|t| vec![t * dir.cos(), t * dir.sin()]).collect();
        let s = FiniteMetricSpace::from_coordinates(pts).unwrap();
        let mut expect: Vec<PointId> = (0..n).map(PointId).collect();
        expect.sort_by(|a, b| ts[a.0].total_cmp(&ts[b.0]));
        let got = match find_order(&s, &Subset::full(n)) {
            OrderabilityResult::Orderable { sequence } => sequence,
            other => return Err(format!("line sample {trial} gave {other:?}")),
        };
        let rev: Vec<PointId> = expect.iter().rev().copied().collect();
        if got != expect && got != rev {
            return Err(format!("line sample {trial}: {got:?} is not the coordinate order"));
        }
        if !triple_condition(&s, &got) {
            return Err(format!("line sample {trial}: returned order fails the triple condition"));
        }
    }
    Ok("square is a cyclic quadruple; 100 line samples ordered".into())
}

struct Run {
    name: &'static str,
    outcome: BuildOutcome,
}

fn build(name: &'static str, data: &Dataset, config: &Config) -> Result<Run, String> {
    build_curve(&data.space, &data.measure, config, BuildOptions::default())
        .map(|outcome| Run { name, outcome })
        .map_err(|e| format!("{name}: {e}"))
}

fn criterion_6(runs: &mut Vec<Run>) -> Verdict {
    let start = Instant::now();
    let data = gen_segment(200, 1e-3, 6).map_err(|e| e.to_string())?;
    let config = Config::default();
    let run = build("segment", &data, &config)?;
    let out = &run.outcome;
    let report = &out.report;
    let coords = data.space.coordinates().unwrap();
    let path = &report.curve.vertices;
    let mut expect: Vec<PointId> = data.space.ids().collect();
    expect.sort_by(|a, b| coords[a.0][0].total_cmp(&coords[b.0][0]));
    let rev: Vec<PointId> = expect.iter().rev().copied().collect();
    let mut problems = Vec::new();
    if *path != expect && *path != rev {
        problems.push(format!("path of {} vertices is not in coordinate order", path.len()));
    }
    let bound = (1.0 + config.tau0) * data.space.space_diameter();
    if report.curve.length > bound {
        problems.push(format!("length {} exceeds {bound}", report.curve.length));
    }
    let spacing = 1.0 / 199.0;
    let stops = out.cascade.as_ref().map(|c| c.states.last().unwrap().h.clone()).unwrap_or_default();
    let cov = coverage(
        &data.space,
        &data.measure,
        &out.curve,
        2.0 * spacing,
        DistanceMode::Vertex,
        &stops,
        &config,
    )
    .map_err(|e| e.to_string())?;
    if cov.uncovered_fraction != 0.0 {
        problems.push(format!("uncovered fraction {}", cov.uncovered_fraction));
    }
    let failures = report.hypotheses.failures();
    if failures != 0 {
        problems.push(format!("{failures} hypothesis failures"));
    }
    for h in ["H1", "H2", "H3", "H4"] {
        if !report.hypotheses.totals.contains_key(h) {
            problems.push(format!("{h} never checked"));
        }
    }
    let took = start.elapsed();
    let summary = format!(
        "{} vertices in order, length/d(X) = {:.4}, coverage complete, no hypothesis failures ({took:.2?})",
        path.len(),
        report.ledger_summary.ratio
    );
    runs.push(run);
    within(Duration::from_secs(60), took)?;
    if problems.is_empty() {
        Ok(summary)
    } else {
        Err(problems.join("; "))
    }
}

fn criterion_7() -> Verdict {
    let start = Instant::now();
    let mut values = Vec::new();
    for g in 1..=4 {
        let d = gen_cantor4(g).map_err(|e| e.to_string())?;
        let all = Subset::full(d.space.len());
        values.push(c2_k(&d.space, &d.measure, &all, 10.0).map_err(|e| e.to_string())?.value);
    }
    within(Duration::from_secs(120), start.elapsed())?;
    let shown: Vec<String> = values.iter().map(|v| format!("{v:.4}")).collect();
    if values.windows(2).all(|w| w[1] > w[0]) {
        Ok(format!("c2_K for g = 1..4: {}", shown.join(" < ")))
    } else {
        Err(format!("not increasing: {}", shown.join(", ")))
    }
}

fn criterion_8(runs: &mut Vec<Run>) -> Verdict {
    let config = Config::default();
    type Family = (&'static str, fn() -> Dataset);
    let extra: [Family; 4] = [
        ("lipschitz_graph", || gen_lipschitz_graph(150, 0.5, 8).unwrap()),
        ("segment_small", || gen_segment(65, 0.0, 0).unwrap()),
        ("circle", || gen_circle(64, 1.0).unwrap()),
        ("cantor4_g3", || gen_cantor4(3).unwrap()),
    ];
    let mut notes = Vec::new();
    for (name, make) in extra {
        match build(name, &make(), &config) {
            Ok(run) => runs.push(run),
            Err(e) => notes.push(e),
        }
    }
    if !notes.is_empty() {
        return Err(format!("runs aborted: {}", notes.join("; ")));
    }
    let mut steps = 0;
    for run in runs.iter() {
        let r = &run.outcome.report;
        if r.invariant_checks != r.ledger.len() {
            return Err(format!(
                "{}: {} invariant checks for {} steps",
                run.name,
                r.invariant_checks,
                r.ledger.len()
            ));
        }
        let total: f64 = r.ledger.iter().map(|s| s.length_delta).sum();
        if (total - r.curve.length).abs() > 1e-9 * r.curve.length.max(1.0) {
            return Err(format!(
                "{}: ledger {total} vs length {}",
                run.name, r.curve.length
            ));
        }
        if run.outcome.curve.check_path().is_err() {
            return Err(format!("{}: final curve is not a path", run.name));
        }
        steps += r.ledger.len();
    }
    Ok(format!("{} runs, {steps} steps, every step a path, ledgers reconcile", runs.len()))
}

fn criterion_9() -> Verdict {
    let make = || -> Result<String, String> {
        let d = gen_segment(120, 1e-3, 99).map_err(|e| e.to_string())?;
        let out = build_curve(&d.space, &d.measure, &Config::default(), BuildOptions { keep_snapshots: true })
            .map_err(|e| e.to_string())?;
        serde_json::to_string(&out.report).map_err(|e| e.to_string())
    };
    let (a, b) = (make()?, make()?);
    if a == b {
        Ok(format!("two runs gave identical {}-byte reports", a.len()))
    } else {
        Err("reports differ".into())
    }
}

fn main() -> ExitCode {
    let mut runs = Vec::new();
    let results: Vec<(u32, &str, Verdict)> = vec![
        (1, "circumradius oracle", criterion_1()),
        (2, "permutation symmetry", criterion_2()),
        (3, "energy comparison chain", criterion_3()),
        (4, "homogeneity", criterion_4()),
        (5, "orderability", criterion_5()),
        (6, "segment end to end", criterion_6(&mut runs)),
        (7, "Cantor curvature trend", criterion_7()),
        (8, "structural invariants", criterion_8(&mut runs)),
        (9, "determinism", criterion_9()),
    ];
    let mut failed = 0;
    for (i, name, verdict) in &results {
        match verdict {
            Ok(msg) => println!("PASS {i} {name}: {msg}"),
            Err(msg) => {
                failed += 1;
                println!("FAIL {i} {name}: {msg}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
