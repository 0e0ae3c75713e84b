//! End-to-end construction: nets, then the curve scale by scale.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::config::Config;
use crate::curve::{
    advance_curve, length_ledger, BuildLog, Curve, CurveReport, HypothesisReport, LedgerSummary,
    StepKind, StepRecord,
};
use crate::error::{Error, Result, Warning};
use crate::metric::{FiniteMetricSpace, Measure, PointId, Subset};
use crate::nets::{build_nets, dyadic, NetCascade, NetState, StopRecord};
use crate::ordering::{find_order_with, in_omega};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct BuildOptions {
    /// Keep the net and curve of every scale in the report.
    pub keep_snapshots: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScaleSnapshot {
    pub scale: i32,
    pub net: NetState,
    pub curve: CurveReport,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct HypothesisTotals {
    pub checks: usize,
    pub balls: usize,
    pub inapplicable: usize,
    pub failures: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct HypothesisSummary {
    pub totals: BTreeMap<String, HypothesisTotals>,
    /// Only the checks that found a failure.
    pub failed: Vec<HypothesisReport>,
}

impl HypothesisSummary {
    fn from_reports(reports: &[HypothesisReport]) -> Self {
        let mut out = HypothesisSummary::default();
        for r in reports {
            let t = out.totals.entry(r.hypothesis.to_string()).or_default();
            t.checks += 1;
            t.balls += r.balls;
            t.inapplicable += r.inapplicable;
            t.failures += r.failures.len();
            if !r.passed() {
                out.failed.push(r.clone());
            }
        }
        out
    }

    pub fn failures(&self) -> usize {
        self.totals.values().map(|t| t.failures).sum()
    }
}

/// Near-straightness and orderability of the vertex balls at one stage.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OrderedBallsCheck {
    pub scale: i32,
    pub stage: &'static str,
    pub balls: usize,
    pub distinct_sets: usize,
    pub omega_failures: usize,
    pub not_orderable: usize,
}

/// Distortion of distances between vertices under moves inside their
/// representative neighbourhoods.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComparabilityCheck {
    pub scale: i32,
    pub q1: f64,
    pub pairs: usize,
    pub violations: usize,
    /// Largest `max(d'/d, d/d')` seen.
    pub worst_ratio: f64,
}

/// A long edge with no nearby edge at some later scale.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LongEdgeMiss {
    pub scale: i32,
    pub edge: [PointId; 2],
    pub later_scale: i32,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ExtendedReport {
    pub ordered_balls: Vec<OrderedBallsCheck>,
    pub comparability: Vec<ComparabilityCheck>,
    pub long_edges_tracked: usize,
    pub long_edge_misses: Vec<LongEdgeMiss>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BuildReport {
    pub config: Config,
    pub points: usize,
    pub diameter: f64,
    pub n0: i32,
    pub n_max: i32,
    pub curve: CurveReport,
    /// Stop balls of the finest scale.
    pub stops: Vec<StopRecord>,
    pub ledger_summary: LedgerSummary,
    pub ledger: Vec<StepRecord>,
    pub hypotheses: HypothesisSummary,
    /// Number of times the path invariant was verified.
    pub invariant_checks: usize,
    pub warnings: Vec<Warning>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub extended: Option<ExtendedReport>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub snapshots: Vec<ScaleSnapshot>,
}

#[derive(Clone, Debug)]
pub struct BuildOutcome {
    pub report: BuildReport,
    pub curve: Curve,
    /// Absent for spaces of zero diameter.
    pub cascade: Option<NetCascade>,
}

/// The curve at the coarsest scale: the single net point.
pub fn init_curve(net: &NetState) -> Result<Curve> {
    match net.d.ids() {
        [v] => Ok(Curve::single(*v, net.n)),
        [] => Err(Error::Structural(format!("empty net at the coarsest scale {}", net.n))),
        ids => Err(Error::Structural(format!(
            "the coarsest net has {} points; expected one",
            ids.len()
        ))),
    }
}

pub fn build_curve(
    space: &FiniteMetricSpace,
    measure: &Measure,
    config: &Config,
    options: BuildOptions,
) -> Result<BuildOutcome> {
    config.validate()?;
    if space.is_empty() {
        return Err(Error::Empty("space"));
    }
    measure.check_matches(space)?;
    let diameter = space.space_diameter();
    if !(diameter > 0.0) {
        return Ok(degenerate(space, config));
    }

    let cascade = build_nets(space, measure, config)?;
    let mut log = BuildLog::default();
    log.warnings.extend(cascade.warnings.iter().cloned());
    let mut curve = init_curve(&cascade.states[0])?;
    let mut finals = vec![curve.clone()];
    let mut extended = config.extended_checks.then(ExtendedReport::default);
    let mut balls_cache = BTreeMap::new();

    for pair in cascade.states.windows(2) {
        let (prev, next) = (&pair[0], &pair[1]);
        let ledger_start = log.ledger.len();
        advance_curve(space, &mut curve, prev, next, config, &mut log)?;
        if let Some(ext) = extended.as_mut() {
            let replaced: Subset = log.ledger[ledger_start..]
                .iter()
                .filter(|r| r.kind == StepKind::Replace)
                .filter_map(|r| r.removed)
                .collect();
            let full = prev.x().difference(&replaced).union(&next.d);
            let r = dyadic(prev.n - config.m1 - 1);
            for (stage, set) in [("start", prev.x()), ("full", full.clone())] {
                ext.ordered_balls
                    .push(ordered_balls(space, config, &set, r, prev.n, stage, &mut balls_cache)?);
            }
            ext.comparability
                .push(comparability(space, config, &cascade, prev, next, &full));
        }
        finals.push(curve.clone());
    }
    if let Some(ext) = extended.as_mut() {
        let (tracked, misses) = long_edges(space, &finals);
        ext.long_edges_tracked = tracked;
        ext.long_edge_misses = misses;
    }

    let length = curve.length(space);
    let summary = length_ledger(&log.ledger, length, diameter, config.tau0);
    if !summary.reconciles {
        return Err(Error::Structural(format!(
            "ledger total {} does not match the final length {length}",
            summary.ledger_total
        )));
    }
    let snapshots = if options.keep_snapshots {
        cascade
            .states
            .iter()
            .zip(&finals)
            .map(|(net, c)| ScaleSnapshot {
                scale: net.n,
                net: net.clone(),
                curve: c.report(space),
            })
            .collect()
    } else {
        Vec::new()
    };
    let report = BuildReport {
        config: config.clone(),
        points: space.len(),
        diameter,
        n0: cascade.n0,
        n_max: cascade.n_max,
        curve: curve.report(space),
        stops: cascade.states.last().map(|s| s.h.clone()).unwrap_or_default(),
        ledger_summary: summary,
        ledger: std::mem::take(&mut log.ledger),
        hypotheses: HypothesisSummary::from_reports(&log.hypotheses),
        invariant_checks: log.invariant_checks,
        warnings: log.warnings,
        extended,
        snapshots,
    };
    Ok(BuildOutcome {
        report,
        curve,
        cascade: Some(cascade),
    })
}

/// All points coincide: the curve is one point of length zero.
fn degenerate(space: &FiniteMetricSpace, config: &Config) -> BuildOutcome {
    let curve = Curve::single(PointId(0), 0);
    let report = BuildReport {
        config: config.clone(),
        points: space.len(),
        diameter: 0.0,
        n0: 0,
        n_max: 0,
        curve: curve.report(space),
        stops: Vec::new(),
        ledger_summary: length_ledger(&[], 0.0, 0.0, config.tau0),
        ledger: Vec::new(),
        hypotheses: HypothesisSummary::default(),
        invariant_checks: 0,
        warnings: vec![Warning::new(
            0,
            "degenerate",
            "space has zero diameter; the curve is a single point".to_string(),
        )],
        extended: None,
        snapshots: Vec::new(),
    };
    BuildOutcome {
        report,
        curve,
        cascade: None,
    }
}

#[derive(Clone, Copy)]
struct SetVerdict {
    omega: bool,
    orderable: bool,
}

fn ordered_balls(
    space: &FiniteMetricSpace,
    config: &Config,
    set: &Subset,
    radius: f64,
    scale: i32,
    stage: &'static str,
    cache: &mut BTreeMap<Vec<PointId>, SetVerdict>,
) -> Result<OrderedBallsCheck> {
    let mut out = OrderedBallsCheck {
        scale,
        stage,
        balls: 0,
        distinct_sets: 0,
        omega_failures: 0,
        not_orderable: 0,
    };
    let mut seen = std::collections::BTreeSet::new();
    for x in set.iter() {
        out.balls += 1;
        let ball = space.ball_in(x, radius, set);
        let key = ball.ids().to_vec();
        let verdict = match cache.get(&key) {
            Some(v) => *v,
            None => {
                let v = SetVerdict {
                    omega: in_omega(space, &ball, config.phi1)?.holds,
                    orderable: find_order_with(space, &ball, config.b_exact).order().is_some(),
                };
                cache.insert(key.clone(), v);
                v
            }
        };
        if seen.insert(key) {
            out.distinct_sets += 1;
        }
        out.omega_failures += usize::from(!verdict.omega);
        out.not_orderable += usize::from(!verdict.orderable);
    }
    Ok(out)
}

/// Center and radius of the representative neighbourhood of `z` at the
/// transition `prev -> next`.
fn neighbourhood(
    cascade: &NetCascade,
    config: &Config,
    prev: &NetState,
    next: &NetState,
    z: PointId,
) -> (PointId, f64) {
    let (m, center) = if let Some(rec) = prev.stop_record(z) {
        (rec.m, rec.center)
    } else if next.d.contains(z) {
        (next.n, next.q_inverse.get(&z).copied().unwrap_or(z))
    } else {
        (prev.n, prev.q_inverse.get(&z).copied().unwrap_or(z))
    };
    let center = cascade
        .state(m)
        .and_then(|s| s.q_inverse.get(&z).copied())
        .unwrap_or(center);
    (center, dyadic(m + config.net_depth))
}

fn comparability(
    space: &FiniteMetricSpace,
    config: &Config,
    cascade: &NetCascade,
    prev: &NetState,
    next: &NetState,
    set: &Subset,
) -> ComparabilityCheck {
    let q1 = config.q1();
    let balls: Vec<(PointId, Subset)> = set
        .iter()
        .map(|z| {
            let (c, r) = neighbourhood(cascade, config, prev, next, z);
            (z, space.ball_unchecked(c, r))
        })
        .collect();
    let mut out = ComparabilityCheck {
        scale: prev.n,
        q1,
        pairs: 0,
        violations: 0,
        worst_ratio: 1.0,
    };
    for (i, (z1, b1)) in balls.iter().enumerate() {
        for (z2, b2) in &balls[i + 1..] {
            let d = space.d(*z1, *z2);
            out.pairs += 1;
            let mut bad = false;
            for w1 in b1.iter() {
                for w2 in b2.iter() {
                    let dw = space.d(w1, w2);
                    let ratio = if dw > 0.0 { (dw / d).max(d / dw) } else { f64::INFINITY };
                    out.worst_ratio = out.worst_ratio.max(ratio);
                    if !(dw > d / q1 && dw < q1 * d) {
                        bad = true;
                    }
                }
            }
            out.violations += usize::from(bad);
        }
    }
    out
}

/// Follows every edge of length at least `2^(-n+6)` at scale `n` through the
/// later scales, looking for an edge with both ends within that distance.
fn long_edges(space: &FiniteMetricSpace, finals: &[Curve]) -> (usize, Vec<LongEdgeMiss>) {
    let mut tracked = 0;
    let mut misses = Vec::new();
    for (i, c) in finals.iter().enumerate() {
        let r = dyadic(c.scale() - 6);
        for [x, y] in c.edges() {
            if space.d(x, y) < r {
                continue;
            }
            tracked += 1;
            for later in &finals[i + 1..] {
                let found = later.edges().iter().any(|&[a, b]| {
                    (space.d(x, a) < r && space.d(y, b) < r) || (space.d(x, b) < r && space.d(y, a) < r)
                });
                if !found {
                    misses.push(LongEdgeMiss {
                        scale: c.scale(),
                        edge: [x, y],
                        later_scale: later.scale(),
                    });
                }
            }
        }
    }
    (tracked, misses)
}
