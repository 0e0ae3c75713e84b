use menger_core::config::{CheckMode, DensityIndex};
use menger_core::datasets::{gen_cantor4, gen_circle, gen_lipschitz_graph, gen_segment, Dataset};
use menger_core::pipeline::{build_curve, BuildOptions, BuildOutcome};
use menger_core::{Config, PointId, Subset};

fn run(data: &Dataset, config: &Config, snapshots: bool) -> BuildOutcome {
    build_curve(
        &data.space,
        &data.measure,
        config,
        BuildOptions {
            keep_snapshots: snapshots,
        },
    )
    .expect("construction completes")
}

/// The final curve is a simple path through exactly the finest net and
/// stopped points, and its length matches the ledger.
fn assert_consistent(data: &Dataset, out: &BuildOutcome) {
    let cascade = out.cascade.as_ref().unwrap();
    let last = cascade.state(cascade.n_max).unwrap();
    assert_eq!(out.curve.vertices(), last.x());
    out.curve.check_path().unwrap();
    let r = &out.report;
    assert!(r.ledger_summary.reconciles);
    assert!((r.curve.length - out.curve.length(&data.space)).abs() < 1e-12);
    assert_eq!(r.invariant_checks, r.ledger.len());
    assert_eq!(r.ledger_summary.bound_holds, r.ledger_summary.ratio <= r.ledger_summary.bound);
}

#[test]
fn snapshots_follow_the_nets() {
    let data = gen_segment(40, 0.0, 0).unwrap();
    let out = run(&data, &Config::default(), true);
    assert_consistent(&data, &out);
    let r = &out.report;
    assert_eq!(r.snapshots.len() as i32, r.n_max - r.n0 + 1);
    let mut prev_len = 0;
    for s in &r.snapshots {
        let x: Subset = s.net.x();
        let v = Subset::new(s.curve.vertices.clone());
        assert_eq!(v, x, "scale {}", s.scale);
        assert_eq!(s.curve.edges.len() + 1, s.curve.vertices.len());
        assert!(s.curve.vertices.len() >= prev_len || s.scale == r.n0);
        prev_len = s.curve.vertices.len();
    }
    assert_eq!(r.snapshots[0].curve.vertices.len(), 1);
}

#[test]
fn circle_reports_its_length_honestly() {
    let data = gen_circle(64, 1.0).unwrap();
    let out = run(&data, &Config::default(), false);
    assert_consistent(&data, &out);
    let s = &out.report.ledger_summary;
    // a path through 64 points of the unit circle is at most its perimeter
    // minus one chord, far above the diameter
    let chord = 2.0 * (std::f64::consts::PI / 64.0).sin();
    assert!(s.final_length <= 64.0 * chord - chord + 1e-9);
    assert!(s.ratio > 1.5);
    assert!(!s.bound_holds);
}

#[test]
fn cantor_dust_completes() {
    let data = gen_cantor4(3).unwrap();
    let out = run(&data, &Config::default(), false);
    assert_consistent(&data, &out);
    assert_eq!(out.report.points, 64);
}

#[test]
fn every_step_checks_agree_with_phase_end() {
    let data = gen_lipschitz_graph(60, 0.5, 4).unwrap();
    let phase = run(&data, &Config::default(), false);
    let every = run(
        &data,
        &Config {
            hypothesis_checks: CheckMode::EveryStep,
            ..Config::default()
        },
        false,
    );
    let off = run(
        &data,
        &Config {
            hypothesis_checks: CheckMode::Off,
            ..Config::default()
        },
        false,
    );
    // checking never changes the construction
    assert_eq!(phase.report.curve, every.report.curve);
    assert_eq!(phase.report.curve, off.report.curve);
    let count = |o: &BuildOutcome| -> usize { o.report.hypotheses.totals.values().map(|t| t.checks).sum() };
    assert!(count(&every) > count(&phase));
    assert_eq!(count(&off), 0);
    assert_consistent(&data, &every);
}

#[test]
fn previous_density_index_runs() {
    let data = gen_segment(50, 0.005, 2).unwrap();
    let config = Config {
        density_index: DensityIndex::Previous,
        ..Config::default()
    };
    let out = run(&data, &config, false);
    assert_consistent(&data, &out);
    assert_eq!(out.report.config.density_index, DensityIndex::Previous);
}

#[test]
fn extended_checks_on_a_graph() {
    let data = gen_lipschitz_graph(80, 0.3, 11).unwrap();
    let config = Config {
        extended_checks: true,
        ..Config::default()
    };
    let out = run(&data, &config, false);
    assert_consistent(&data, &out);
    let ext = out.report.extended.as_ref().unwrap();
    assert!(!ext.ordered_balls.is_empty());
    assert!(!ext.comparability.is_empty());
    for c in &ext.comparability {
        assert!(c.worst_ratio >= 1.0);
    }
}

#[test]
fn path_endpoints_are_extreme_on_a_line() {
    let data = gen_segment(30, 0.0, 0).unwrap();
    let out = run(&data, &Config::default(), false);
    let path = out.curve.path();
    assert_eq!(path.len(), 30);
    // on a straight line the only simple path with minimal length is sorted
    let ends = [path[0], path[29]];
    assert!(ends.contains(&PointId(0)) && ends.contains(&PointId(29)));
    assert!((out.report.curve.length - 1.0).abs() < 1e-12);
}
