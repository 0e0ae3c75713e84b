//! Incremental polygonal curves through the multiscale nets.
//!
//! A curve is a simple path on a vertex set. Moving from scale `n` to
//! `n + 1` it goes through three phases: new net points close to the old net
//! replace their nearest vertex, the remaining new points are inserted
//! farthest-first with local edge surgery, and old points that left the
//! vertex pool are pruned while keeping the order of the rest.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use crate::config::{CheckMode, Config};
use crate::curvature::NeumaierSum;
use crate::error::{Error, Result, Warning};
use crate::metric::{FiniteMetricSpace, PointId, Subset};
use crate::nets::{dyadic, NetState};
use crate::ordering::{find_order_with, is_between, OrderabilityResult};

/// Relative slack for floating-point length identities.
const LENGTH_SLACK: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StepKind {
    Replace,
    InsertSplit,
    InsertAppend,
    Prune,
}

impl fmt::Display for StepKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StepKind::Replace => "replace",
            StepKind::InsertSplit => "insert_split",
            StepKind::InsertAppend => "insert_append",
            StepKind::Prune => "prune",
        })
    }
}

/// Length-accounting class of a replacement or insertion step.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum Lambda {
    L1,
    L2,
    L3,
    L4,
}

impl fmt::Display for Lambda {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StepRecord {
    /// Scale being built.
    pub scale: i32,
    /// Position within the transition.
    pub step: usize,
    pub kind: StepKind,
    /// The inserted vertex, or the removed one for a prune.
    pub vertex: PointId,
    /// The vertex taken out by a replacement.
    pub removed: Option<PointId>,
    /// Nearest existing vertex for replacements and insertions.
    pub anchor: Option<PointId>,
    pub length_delta: f64,
    pub lambda: Option<Lambda>,
}

/// A simple path (or a single vertex) on a set of points.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Curve {
    adj: BTreeMap<PointId, Vec<PointId>>,
    scale: i32,
}

/// Serialized form of a curve.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CurveReport {
    /// Vertices in path order.
    pub vertices: Vec<PointId>,
    pub edges: Vec<[PointId; 2]>,
    pub length: f64,
    pub scale: i32,
}

impl Curve {
    /// The starting curve: one vertex, no edges.
    pub fn single(v: PointId, scale: i32) -> Self {
        let mut adj = BTreeMap::new();
        adj.insert(v, Vec::new());
        Curve { adj, scale }
    }

    /// Path through `seq` in the given order.
    pub fn from_path(seq: &[PointId], scale: i32) -> Result<Self> {
        if seq.is_empty() {
            return Err(Error::Empty("path"));
        }
        let mut c = Curve {
            adj: BTreeMap::new(),
            scale,
        };
        for &v in seq {
            if c.adj.insert(v, Vec::new()).is_some() {
                return Err(Error::InvalidArgument(format!("vertex {v} repeated in path")));
            }
        }
        for w in seq.windows(2) {
            c.link(w[0], w[1]);
        }
        Ok(c)
    }

    /// Builds a curve from an explicit edge list; the result is not
    /// required to be a path.
    pub fn from_edges(vertices: &Subset, edges: &[[PointId; 2]], scale: i32) -> Result<Self> {
        let mut c = Curve {
            adj: vertices.iter().map(|v| (v, Vec::new())).collect(),
            scale,
        };
        for &[a, b] in edges {
            if !c.contains(a) || !c.contains(b) || a == b || c.has_edge(a, b) {
                return Err(Error::InvalidArgument(format!("bad edge ({a}, {b})")));
            }
            c.link(a, b);
        }
        Ok(c)
    }

    pub fn scale(&self) -> i32 {
        self.scale
    }

    pub fn len(&self) -> usize {
        self.adj.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adj.is_empty()
    }

    pub fn vertices(&self) -> Subset {
        self.adj.keys().copied().collect()
    }

    pub fn contains(&self, v: PointId) -> bool {
        self.adj.contains_key(&v)
    }

    pub fn neighbors(&self, v: PointId) -> &[PointId] {
        self.adj.get(&v).map_or(&[], Vec::as_slice)
    }

    pub fn degree(&self, v: PointId) -> usize {
        self.neighbors(v).len()
    }

    pub fn has_edge(&self, a: PointId, b: PointId) -> bool {
        self.neighbors(a).contains(&b)
    }

    /// Edges as sorted pairs in ascending order.
    pub fn edges(&self) -> Vec<[PointId; 2]> {
        let mut out = Vec::new();
        for (&a, ns) in &self.adj {
            for &b in ns {
                if a < b {
                    out.push([a, b]);
                }
            }
        }
        out.sort();
        out
    }

    /// Vertices along the path, starting from the endpoint with the smaller
    /// id. Only meaningful when [`Curve::check_path`] passes.
    pub fn path(&self) -> Vec<PointId> {
        let Some(start) = self
            .adj
            .iter()
            .find(|(_, ns)| ns.len() <= 1)
            .map(|(&v, _)| v)
        else {
            return Vec::new();
        };
        let mut seq = vec![start];
        let mut prev: Option<PointId> = None;
        let mut cur = start;
        while let Some(&next) = self.neighbors(cur).iter().find(|&&w| Some(w) != prev) {
            if seq.len() > self.adj.len() {
                break;
            }
            seq.push(next);
            prev = Some(cur);
            cur = next;
        }
        seq
    }

    /// Total edge length.
    pub fn length(&self, space: &FiniteMetricSpace) -> f64 {
        let mut acc = NeumaierSum::default();
        for [a, b] in self.edges() {
            acc.add(space.d(a, b));
        }
        acc.value()
    }

    /// Checks that the edges form one simple path through every vertex.
    pub fn check_path(&self) -> std::result::Result<(), String> {
        if self.adj.is_empty() {
            return Err("curve has no vertices".into());
        }
        let mut degree_sum = 0;
        for (&v, ns) in &self.adj {
            if ns.len() > 2 {
                return Err(format!("vertex {v} has degree {}", ns.len()));
            }
            for &w in ns {
                if w == v {
                    return Err(format!("self-loop at {v}"));
                }
                if !self.neighbors(w).contains(&v) {
                    return Err(format!("edge ({v}, {w}) is one-sided"));
                }
            }
            let mut sorted = ns.clone();
            sorted.dedup();
            if sorted.len() != ns.len() {
                return Err(format!("duplicate edge at {v}"));
            }
            degree_sum += ns.len();
        }
        if degree_sum != 2 * (self.adj.len() - 1) {
            return Err(format!(
                "{} edges on {} vertices",
                degree_sum / 2,
                self.adj.len()
            ));
        }
        let walked = self.path();
        if walked.len() != self.adj.len() {
            return Err(format!(
                "path covers {} of {} vertices",
                walked.len(),
                self.adj.len()
            ));
        }
        Ok(())
    }

    pub fn report(&self, space: &FiniteMetricSpace) -> CurveReport {
        CurveReport {
            vertices: self.path(),
            edges: self.edges(),
            length: self.length(space),
            scale: self.scale,
        }
    }

    fn link(&mut self, a: PointId, b: PointId) {
        for (u, v) in [(a, b), (b, a)] {
            let ns = self.adj.get_mut(&u).expect("vertex present");
            ns.push(v);
            ns.sort();
        }
    }

    fn unlink(&mut self, a: PointId, b: PointId) {
        for (u, v) in [(a, b), (b, a)] {
            if let Some(ns) = self.adj.get_mut(&u) {
                ns.retain(|&w| w != v);
            }
        }
    }
}

/// Nearest vertex of the curve to `x`. A second vertex within the relative
/// tie tolerance is a structural error since the construction relies on a
/// unique nearest point.
pub fn nearest_vertex(
    space: &FiniteMetricSpace,
    curve: &Curve,
    x: PointId,
    tie_tolerance: f64,
) -> Result<(PointId, f64)> {
    let mut best: Option<(PointId, f64)> = None;
    let mut second = f64::INFINITY;
    for &v in curve.adj.keys() {
        let d = space.d(x, v);
        match best {
            Some((_, bd)) if d >= bd => second = second.min(d),
            Some((_, bd)) => {
                second = bd;
                best = Some((v, d));
            }
            None => best = Some((v, d)),
        }
    }
    let (v, d) = best.ok_or(Error::Empty("curve"))?;
    if second.is_finite() && second <= d * (1.0 + tie_tolerance) {
        return Err(Error::Structural(format!(
            "nearest vertex to {x} is not unique (distances {d} and {second})"
        )));
    }
    Ok((v, d))
}

/// Radius for the length-accounting classes when building scale `n + 1`.
fn lambda_radius(config: &Config, n: i32) -> f64 {
    dyadic(n - config.m2)
}

fn slack(scale: f64) -> f64 {
    LENGTH_SLACK * scale.max(1.0)
}

/// Replaces vertex `p` by `x`, which inherits all of `p`'s edges.
pub fn replace_with(
    space: &FiniteMetricSpace,
    curve: &mut Curve,
    x: PointId,
    p: PointId,
    config: &Config,
) -> Result<StepRecord> {
    if curve.contains(x) {
        return Err(Error::InvalidArgument(format!("{x} is already a vertex")));
    }
    if !curve.contains(p) {
        return Err(Error::InvalidArgument(format!("{p} is not a vertex")));
    }
    let n = curve.scale;
    let rho = lambda_radius(config, n);
    let ns: Vec<PointId> = curve.neighbors(p).to_vec();
    let lambda = if ns.len() == 2 && ns.iter().all(|&w| space.d(x, w) <= rho) {
        Some(Lambda::L1)
    } else if ns.len() <= 1 {
        Some(Lambda::L3)
    } else if ns.iter().any(|&w| space.d(p, w) > rho) {
        Some(Lambda::L4)
    } else {
        None
    };
    let mut delta = NeumaierSum::default();
    for &w in &ns {
        delta.add(space.d(x, w));
        delta.add(-space.d(p, w));
    }
    let delta = delta.value();
    let dxp = space.d(x, p);
    if ns.len() == 1 && delta > dxp + slack(dxp) {
        return Err(Error::Structural(format!(
            "replacing {p} by {x} grew the length by {delta} > d = {dxp}"
        )));
    }
    if delta.abs() > 2.0 * dxp + slack(dxp) {
        return Err(Error::Structural(format!(
            "replacing {p} by {x} changed the length by {delta}, more than 2d = {}",
            2.0 * dxp
        )));
    }
    curve.adj.remove(&p);
    curve.adj.insert(x, Vec::new());
    for &w in &ns {
        if let Some(v) = curve.adj.get_mut(&w) {
            v.retain(|&u| u != p);
        }
        curve.link(x, w);
    }
    Ok(StepRecord {
        scale: n + 1,
        step: 0,
        kind: StepKind::Replace,
        vertex: x,
        removed: Some(p),
        anchor: Some(p),
        length_delta: delta,
        lambda,
    })
}

/// Replaces the nearest vertex of `x` by `x`.
pub fn replace_vertex(
    space: &FiniteMetricSpace,
    curve: &mut Curve,
    x: PointId,
    config: &Config,
) -> Result<StepRecord> {
    let (p, _) = nearest_vertex(space, curve, x, config.tie_tolerance)?;
    replace_with(space, curve, x, p, config)
}

/// Adds `x` next to its nearest vertex `y`: splits the edge towards the
/// closest neighbour `w` with `y x w`, otherwise splits the longer edge of
/// an interior `y`, otherwise appends `x` at the end `y`.
pub fn insert_vertex(
    space: &FiniteMetricSpace,
    curve: &mut Curve,
    x: PointId,
    config: &Config,
) -> Result<StepRecord> {
    if curve.contains(x) {
        return Err(Error::InvalidArgument(format!("{x} is already a vertex")));
    }
    // any nearest vertex will do here; take the smallest id
    let (y, dxy) = space
        .nearest_among(x, curve.adj.keys().copied())
        .ok_or(Error::Empty("curve"))?;
    let n = curve.scale;
    let rho = lambda_radius(config, n);
    let ns: Vec<PointId> = curve.neighbors(y).to_vec();

    let lambda = if ns
        .iter()
        .any(|&w| space.d(y, w) <= rho && is_between(space, y, x, w))
    {
        Some(Lambda::L2)
    } else if ns.len() <= 1 {
        Some(Lambda::L3)
    } else if ns.iter().any(|&w| space.d(y, w) > rho) {
        Some(Lambda::L4)
    } else {
        None
    };

    let pick = |cands: &mut dyn Iterator<Item = PointId>, farthest: bool| {
        let mut best: Option<(PointId, f64)> = None;
        for w in cands {
            let d = space.d(y, w);
            let better = match best {
                None => true,
                Some((_, bd)) => {
                    if farthest {
                        d > bd
                    } else {
                        d < bd
                    }
                }
            };
            if better {
                best = Some((w, d));
            }
        }
        best.map(|b| b.0)
    };
    let between = pick(&mut ns.iter().copied().filter(|&w| is_between(space, y, x, w)), false);
    let split = between.or_else(|| {
        if ns.len() == 2 {
            pick(&mut ns.iter().copied(), true)
        } else {
            None
        }
    });

    curve.adj.insert(x, Vec::new());
    let (kind, delta) = match split {
        Some(w) => {
            curve.unlink(y, w);
            curve.link(y, x);
            curve.link(x, w);
            let mut acc = NeumaierSum::default();
            acc.add(dxy);
            acc.add(space.d(x, w));
            acc.add(-space.d(y, w));
            (StepKind::InsertSplit, acc.value())
        }
        None => {
            curve.link(y, x);
            (StepKind::InsertAppend, dxy)
        }
    };
    Ok(StepRecord {
        scale: n + 1,
        step: 0,
        kind,
        vertex: x,
        removed: None,
        anchor: Some(y),
        length_delta: delta,
        lambda,
    })
}

/// Removes every vertex outside `keep`, in ascending id order, joining the
/// two neighbours of interior vertices.
pub fn prune(space: &FiniteMetricSpace, curve: &mut Curve, keep: &Subset) -> Result<Vec<StepRecord>> {
    let drop: Vec<PointId> = curve.adj.keys().copied().filter(|v| !keep.contains(*v)).collect();
    let mut out = Vec::with_capacity(drop.len());
    for v in drop {
        out.push(remove_vertex(space, curve, v)?);
    }
    Ok(out)
}

fn remove_vertex(space: &FiniteMetricSpace, curve: &mut Curve, v: PointId) -> Result<StepRecord> {
    let ns = curve.neighbors(v).to_vec();
    let delta = match ns.as_slice() {
        [] => {
            if curve.len() == 1 {
                return Err(Error::Structural(format!("pruning {v} would empty the curve")));
            }
            0.0
        }
        [w] => {
            curve.unlink(v, *w);
            -space.d(v, *w)
        }
        [w1, w2] => {
            let (a, b, c) = (space.d(v, *w1), space.d(v, *w2), space.d(*w1, *w2));
            let mut acc = NeumaierSum::default();
            acc.add(c);
            acc.add(-a);
            acc.add(-b);
            let delta = acc.value();
            if delta > slack(a + b) {
                return Err(Error::Structural(format!(
                    "pruning {v} lengthened the curve by {delta}"
                )));
            }
            curve.unlink(v, *w1);
            curve.unlink(v, *w2);
            curve.link(*w1, *w2);
            delta
        }
        _ => return Err(Error::Structural(format!("vertex {v} has degree {}", ns.len()))),
    };
    curve.adj.remove(&v);
    Ok(StepRecord {
        scale: curve.scale,
        step: 0,
        kind: StepKind::Prune,
        vertex: v,
        removed: Some(v),
        anchor: None,
        length_delta: delta,
        lambda: None,
    })
}

/// New net points split into those close to the previous net (replacement
/// candidates, ascending id) and the rest in farthest-first order against
/// the vertex set left after the replacements.
pub fn split_new_vertices(
    space: &FiniteMetricSpace,
    prev: &NetState,
    next: &NetState,
    config: &Config,
) -> (Vec<PointId>, Vec<PointId>) {
    let limit = config.theta * dyadic(prev.n);
    let (star, rest): (Vec<PointId>, Vec<PointId>) = next
        .d
        .iter()
        .partition(|&x| space.distance_to_set(x, prev.d.iter()) <= limit);
    let mut base: Vec<PointId> = prev.x().into_vec();
    for &x in &star {
        if base.contains(&x) {
            continue;
        }
        let p = base
            .iter()
            .copied()
            .min_by(|&a, &b| space.d(x, a).total_cmp(&space.d(x, b)).then(a.cmp(&b)));
        if let Some(p) = p {
            base.retain(|&v| v != p);
        }
        base.push(x);
    }
    let order = farthest_first(space, &base, &rest);
    (star, order)
}

/// Greedy ordering of `pending`: repeatedly the point farthest from
/// `base` plus the points already taken, ties to the smallest id.
pub fn farthest_first(space: &FiniteMetricSpace, base: &[PointId], pending: &[PointId]) -> Vec<PointId> {
    let mut items: Vec<(PointId, f64)> = pending
        .iter()
        .map(|&x| (x, space.distance_to_set(x, base.iter().copied())))
        .collect();
    items.sort_by_key(|p| p.0);
    let mut out = Vec::with_capacity(items.len());
    while !items.is_empty() {
        let mut best = 0;
        for i in 1..items.len() {
            if items[i].1 > items[best].1 {
                best = i;
            }
        }
        let (x, _) = items.remove(best);
        for it in items.iter_mut() {
            it.1 = it.1.min(space.d(it.0, x));
        }
        out.push(x);
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum Hypothesis {
    H1,
    H2,
    H3,
    H4,
}

impl fmt::Display for Hypothesis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

/// A ball whose local order skips an edge of the curve.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct HypothesisFailure {
    pub center: PointId,
    /// Consecutive pair of the local order that is not an edge.
    pub pair: [PointId; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HypothesisReport {
    pub hypothesis: Hypothesis,
    pub scale: i32,
    /// Step within the transition when checked step by step.
    pub step: Option<usize>,
    pub radius: f64,
    pub balls: usize,
    /// Balls whose vertex set is not orderable.
    pub inapplicable: usize,
    pub failures: Vec<HypothesisFailure>,
}

impl HypothesisReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

const MAX_FAILURES: usize = 100;

/// Checks local orders against the edge set, caching orderability by
/// vertex set.
#[derive(Debug, Default)]
pub struct HypothesisChecker {
    cache: BTreeMap<Vec<PointId>, OrderabilityResult>,
}

impl HypothesisChecker {
    pub fn new() -> Self {
        Self::default()
    }

    /// For every center, orders the vertices within `radius` and verifies
    /// that consecutive vertices are joined by an edge.
    #[allow(clippy::too_many_arguments)]
    pub fn check(
        &mut self,
        space: &FiniteMetricSpace,
        curve: &Curve,
        centers: &Subset,
        radius: f64,
        which: Hypothesis,
        scale: i32,
        step: Option<usize>,
        b_exact: usize,
    ) -> HypothesisReport {
        let vertices = curve.vertices();
        let mut report = HypothesisReport {
            hypothesis: which,
            scale,
            step,
            radius,
            balls: 0,
            inapplicable: 0,
            failures: Vec::new(),
        };
        for z in centers.iter() {
            report.balls += 1;
            let members = space.ball_in(z, radius, &vertices);
            if members.len() <= 1 {
                continue;
            }
            let key = members.ids().to_vec();
            let result = self
                .cache
                .entry(key)
                .or_insert_with(|| find_order_with(space, &members, b_exact));
            match result.order() {
                Some(seq) => {
                    for w in seq.windows(2) {
                        if !curve.has_edge(w[0], w[1]) && report.failures.len() < MAX_FAILURES {
                            report.failures.push(HypothesisFailure {
                                center: z,
                                pair: [w[0], w[1]],
                            });
                        }
                    }
                }
                None => report.inapplicable += 1,
            }
        }
        report
    }
}

/// Checks the hypothesis that every local order on balls of radius
/// `2^(M1-n)` follows the curve, with `n` the curve's scale.
pub fn check_hypotheses(space: &FiniteMetricSpace, curve: &Curve, config: &Config) -> HypothesisReport {
    let radius = dyadic(curve.scale - config.m1);
    HypothesisChecker::new().check(
        space,
        curve,
        &curve.vertices(),
        radius,
        Hypothesis::H1,
        curve.scale,
        None,
        config.b_exact,
    )
}

/// Everything recorded while building a curve.
#[derive(Debug, Default)]
pub struct BuildLog {
    pub ledger: Vec<StepRecord>,
    pub warnings: Vec<Warning>,
    pub hypotheses: Vec<HypothesisReport>,
    pub checker: HypothesisChecker,
    /// Path-invariant checks performed.
    pub invariant_checks: usize,
}

impl BuildLog {
    fn record(
        &mut self,
        space: &FiniteMetricSpace,
        curve: &Curve,
        mut rec: StepRecord,
        before: f64,
        step: &mut usize,
    ) -> Result<f64> {
        rec.step = *step;
        *step += 1;
        curve.check_path().map_err(|e| {
            Error::Structural(format!(
                "path invariant broken at scale {} step {}: {e}",
                rec.scale, rec.step
            ))
        })?;
        self.invariant_checks += 1;
        let after = curve.length(space);
        if (before + rec.length_delta - after).abs() > slack(after) {
            return Err(Error::Structural(format!(
                "ledger delta {} disagrees with length change {} at scale {} step {}",
                rec.length_delta,
                after - before,
                rec.scale,
                rec.step
            )));
        }
        self.ledger.push(rec);
        Ok(after)
    }

    #[allow(clippy::too_many_arguments)]
    fn check_ball_hypothesis(
        &mut self,
        space: &FiniteMetricSpace,
        curve: &Curve,
        centers: &Subset,
        radius: f64,
        which: Hypothesis,
        scale: i32,
        step: Option<usize>,
        b_exact: usize,
    ) {
        let rep = self
            .checker
            .check(space, curve, centers, radius, which, scale, step, b_exact);
        for f in &rep.failures {
            self.warnings.push(Warning::new(
                scale,
                which.to_string(),
                format!(
                    "ball at {} orders {} next to {} without an edge",
                    f.center, f.pair[0], f.pair[1]
                ),
            ));
        }
        self.hypotheses.push(rep);
    }
}

/// Builds the curve at scale `n + 1` from the curve at scale `n`.
pub fn advance_curve(
    space: &FiniteMetricSpace,
    curve: &mut Curve,
    prev: &NetState,
    next: &NetState,
    config: &Config,
    log: &mut BuildLog,
) -> Result<()> {
    let n = prev.n;
    if curve.scale != n || next.n != n + 1 {
        return Err(Error::InvalidArgument(format!(
            "curve at scale {} cannot advance from {} to {}",
            curve.scale, n, next.n
        )));
    }
    if curve.vertices() != prev.x() {
        return Err(Error::Structural(format!(
            "curve vertices differ from the vertex pool at scale {n}"
        )));
    }
    let protected = next.x();
    let mode = config.hypothesis_checks;
    let b_exact = config.b_exact;
    let mut step = 0usize;
    let mut length = curve.length(space);

    let (star, _) = split_new_vertices(space, prev, next, config);
    let mut deferred = Vec::new();
    for x in star {
        if curve.contains(x) {
            continue;
        }
        let (p, _) = nearest_vertex(space, curve, x, config.tie_tolerance)?;
        if protected.contains(p) {
            log.warnings.push(Warning::new(
                n + 1,
                "replace",
                format!("nearest vertex {p} of {x} stays in the pool; inserting instead"),
            ));
            deferred.push(x);
            continue;
        }
        let rec = replace_with(space, curve, x, p, config)?;
        let at = step;
        length = log.record(space, curve, rec, length, &mut step)?;
        if mode == CheckMode::EveryStep {
            let r = (dyadic(n - config.m1) - dyadic(n)).max(0.0);
            log.check_ball_hypothesis(space, curve, &curve.vertices(), r, Hypothesis::H2, n, Some(at), b_exact);
        }
    }
    let after_replace = curve.vertices();
    if mode == CheckMode::PhaseEnd {
        let r = dyadic(n - config.m1) - dyadic(n);
        log.check_ball_hypothesis(space, curve, &after_replace, r, Hypothesis::H2, n, None, b_exact);
    }

    let pending: Vec<PointId> = next.d.iter().filter(|&x| !curve.contains(x)).collect();
    let order = farthest_first(space, &after_replace.clone().into_vec(), &pending);
    let r3 = dyadic(n - config.m1) - 3.0 * dyadic(n);
    let r4 = dyadic(n - config.m1 + 1);
    let append_bound = (1.0 + dyadic(config.net_depth - 1)) * dyadic(n);
    for x in order {
        let rec = insert_vertex(space, curve, x, config)?;
        if rec.kind == StepKind::InsertAppend && rec.length_delta > append_bound {
            log.warnings.push(Warning::new(
                n + 1,
                "est21",
                format!(
                    "appending {x} added {} > {append_bound}",
                    rec.length_delta
                ),
            ));
        }
        let at = step;
        length = log.record(space, curve, rec, length, &mut step)?;
        if mode == CheckMode::EveryStep {
            log.check_ball_hypothesis(space, curve, &after_replace, r3, Hypothesis::H3, n, Some(at), b_exact);
            log.check_ball_hypothesis(space, curve, &curve.vertices(), r4, Hypothesis::H4, n, Some(at), b_exact);
        }
    }
    if mode == CheckMode::PhaseEnd {
        log.check_ball_hypothesis(space, curve, &after_replace, r3, Hypothesis::H3, n, None, b_exact);
        log.check_ball_hypothesis(space, curve, &curve.vertices(), r4, Hypothesis::H4, n, None, b_exact);
    }

    curve.scale = n + 1;
    let drop: Vec<PointId> = curve.adj.keys().copied().filter(|&v| !protected.contains(v)).collect();
    for v in drop {
        let rec = remove_vertex(space, curve, v)?;
        length = log.record(space, curve, rec, length, &mut step)?;
    }

    if curve.vertices() != protected {
        return Err(Error::Structural(format!(
            "curve vertices differ from the vertex pool at scale {}",
            n + 1
        )));
    }
    if mode != CheckMode::Off {
        let r1 = dyadic(n + 1 - config.m1);
        log.check_ball_hypothesis(space, curve, &protected, r1, Hypothesis::H1, n + 1, None, b_exact);
    }
    Ok(())
}

/// Per-scale sums of the ledger.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScaleLedger {
    pub scale: i32,
    pub steps: usize,
    pub total: f64,
    pub by_kind: BTreeMap<String, f64>,
    pub by_lambda: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LedgerSummary {
    pub scales: Vec<ScaleLedger>,
    pub ledger_total: f64,
    pub final_length: f64,
    /// Ledger total agrees with the final length to `1e-9`.
    pub reconciles: bool,
    pub diameter: f64,
    pub ratio: f64,
    pub bound: f64,
    pub bound_holds: bool,
    /// `bound - final_length`.
    pub margin: f64,
}

/// Aggregates a history and compares the final length with
/// `(1 + τ0) d(X)`.
pub fn length_ledger(history: &[StepRecord], final_length: f64, diameter: f64, tau0: f64) -> LedgerSummary {
    let mut scales: Vec<ScaleLedger> = Vec::new();
    let mut all = NeumaierSum::default();
    for rec in history {
        if scales.last().map(|s| s.scale) != Some(rec.scale) {
            scales.push(ScaleLedger {
                scale: rec.scale,
                steps: 0,
                total: 0.0,
                by_kind: BTreeMap::new(),
                by_lambda: BTreeMap::new(),
            });
        }
        let s = scales.last_mut().unwrap();
        s.steps += 1;
        s.total += rec.length_delta;
        *s.by_kind.entry(rec.kind.to_string()).or_insert(0.0) += rec.length_delta;
        let tag = rec.lambda.map_or_else(|| "none".to_string(), |l| l.to_string());
        *s.by_lambda.entry(tag).or_insert(0.0) += rec.length_delta;
        all.add(rec.length_delta);
    }
    let bound = (1.0 + tau0) * diameter;
    let ratio = if diameter > 0.0 { final_length / diameter } else { 0.0 };
    LedgerSummary {
        scales,
        ledger_total: all.value(),
        final_length,
        reconciles: (all.value() - final_length).abs() <= 1e-9 * final_length.max(1.0),
        diameter,
        ratio,
        bound,
        bound_holds: final_length <= bound,
        margin: bound - final_length,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(i: usize) -> PointId {
        PointId(i)
    }

    fn line(xs: &[f64]) -> FiniteMetricSpace {
        FiniteMetricSpace::from_coordinates(xs.iter().map(|&x| vec![x]).collect()).unwrap()
    }

    fn naive_length(space: &FiniteMetricSpace, path: &[PointId]) -> f64 {
        path.windows(2).map(|w| space.d(w[0], w[1])).sum()
    }

    #[test]
    fn single_and_paths() {
        let s = line(&[0.0, 1.0, 2.0]);
        let c = Curve::single(p(1), 0);
        assert_eq!(c.length(&s), 0.0);
        assert!(c.check_path().is_ok());
        assert_eq!(c.path(), vec![p(1)]);

        let c = Curve::from_path(&[p(2), p(1), p(0)], 0).unwrap();
        assert_eq!(c.path(), vec![p(0), p(1), p(2)]);
        assert_eq!(c.length(&s), 2.0);
        assert_eq!(c.edges(), vec![[p(0), p(1)], [p(1), p(2)]]);

        let r = c.report(&s);
        let j = serde_json::to_value(&r).unwrap();
        assert_eq!(j["vertices"], serde_json::json!([0, 1, 2]));
        assert_eq!(j["edges"], serde_json::json!([[0, 1], [1, 2]]));
        assert_eq!(j["length"], 2.0);
    }

    #[test]
    fn path_check_rejects_cycles_and_gaps() {
        let all = Subset::full(4);
        let cyc = Curve::from_edges(&all, &[[p(0), p(1)], [p(1), p(2)], [p(2), p(0)]], 0).unwrap();
        assert!(cyc.check_path().is_err());
        let gap = Curve::from_edges(&all, &[[p(0), p(1)], [p(2), p(3)]], 0).unwrap();
        assert!(gap.check_path().is_err());
        let star = Curve::from_edges(&all, &[[p(0), p(1)], [p(0), p(2)], [p(0), p(3)]], 0).unwrap();
        assert!(star.check_path().is_err());
        let ok = Curve::from_edges(&all, &[[p(0), p(1)], [p(1), p(3)], [p(3), p(2)]], 0).unwrap();
        assert!(ok.check_path().is_ok());
    }

    #[test]
    fn nearest_vertex_tie_aborts() {
        let s = line(&[0.0, 2.0, 1.0]);
        let c = Curve::from_path(&[p(0), p(1)], 0).unwrap();
        let e = nearest_vertex(&s, &c, p(2), 1e-12).unwrap_err();
        assert!(e.is_structural());
        let s = line(&[0.0, 2.0, 0.9]);
        assert_eq!(nearest_vertex(&s, &c, p(2), 1e-12).unwrap(), (p(0), 0.9));
    }

    #[test]
    fn replace_examples() {
        let c0 = Config::default();
        let s = line(&[0.0, 0.1]);
        let mut c = Curve::single(p(0), 0);
        let rec = replace_vertex(&s, &mut c, p(1), &c0).unwrap();
        assert_eq!(c.vertices(), Subset::singleton(p(1)));
        assert_eq!(rec.length_delta, 0.0);
        assert_eq!(rec.lambda, Some(Lambda::L3));

        // interior vertex 2 of 0-1-2-3-4 on a line; new point 5 at 2.2
        let s = line(&[0.0, 1.0, 2.0, 3.0, 4.0, 2.2]);
        let mut c = Curve::from_path(&[p(0), p(1), p(2), p(3), p(4)], 0).unwrap();
        let before = c.length(&s);
        let rec = replace_vertex(&s, &mut c, p(5), &c0).unwrap();
        assert_eq!(c.path(), vec![p(0), p(1), p(5), p(3), p(4)]);
        assert_eq!(c.len(), 5);
        let after = naive_length(&s, &c.path());
        assert!((before + rec.length_delta - after).abs() < 1e-12);
        assert!(rec.length_delta.abs() <= 2.0 * 0.2 + 1e-12);
        assert_eq!(rec.removed, Some(p(2)));
    }

    #[test]
    fn insert_examples() {
        let c0 = Config::default();
        // single vertex: append
        let s = line(&[0.0, 1.0]);
        let mut c = Curve::single(p(0), 0);
        let rec = insert_vertex(&s, &mut c, p(1), &c0).unwrap();
        assert_eq!(rec.kind, StepKind::InsertAppend);
        assert_eq!(c.edges(), vec![[p(0), p(1)]]);

        // path 0-1-2, new point at 3 beyond 2: no neighbour w with 2 x w
        let s = line(&[0.0, 1.0, 2.0, 3.0]);
        let mut c = Curve::from_path(&[p(0), p(1), p(2)], 0).unwrap();
        assert!(!is_between(&s, p(2), p(3), p(1)));
        let rec = insert_vertex(&s, &mut c, p(3), &c0).unwrap();
        assert_eq!(rec.kind, StepKind::InsertAppend);
        assert_eq!(c.path(), vec![p(0), p(1), p(2), p(3)]);
        assert_eq!(rec.length_delta, 1.0);

        // path 0-2 and x = 1 between: split
        let s = line(&[0.0, 2.0, 0.9]);
        let mut c = Curve::from_path(&[p(0), p(1)], 0).unwrap();
        assert!(is_between(&s, p(0), p(2), p(1)));
        let rec = insert_vertex(&s, &mut c, p(2), &c0).unwrap();
        assert_eq!(rec.kind, StepKind::InsertSplit);
        assert_eq!(rec.anchor, Some(p(0)));
        assert_eq!(c.path(), vec![p(0), p(2), p(1)]);
        assert!(rec.length_delta.abs() < 1e-15);
        assert_eq!(rec.lambda, Some(Lambda::L2));
    }

    #[test]
    fn insert_interior_without_between_splits_longer_edge() {
        let c0 = Config::default();
        // y = (0,0) with neighbours (-1,0) and (2,0); x straight above y
        let pts = vec![vec![0.0, 0.0], vec![-1.0, 0.0], vec![2.0, 0.0], vec![0.0, 0.3]];
        let s = FiniteMetricSpace::from_coordinates(pts).unwrap();
        let mut c = Curve::from_path(&[p(1), p(0), p(2)], 0).unwrap();
        let rec = insert_vertex(&s, &mut c, p(3), &c0).unwrap();
        assert_eq!(rec.kind, StepKind::InsertSplit);
        assert!(c.has_edge(p(0), p(3)) && c.has_edge(p(3), p(2)));
        assert!(c.check_path().is_ok());
    }

    #[test]
    fn prune_examples() {
        let s = line(&[0.0, 1.0, 2.0, 3.0]);
        let mut c = Curve::from_path(&[p(0), p(1), p(2), p(3)], 0).unwrap();
        let keep = c.vertices();
        assert!(prune(&s, &mut c, &keep).unwrap().is_empty());

        let recs = prune(&s, &mut c, &Subset::new(vec![p(0), p(2), p(3)])).unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].length_delta, 0.0);
        assert_eq!(c.path(), vec![p(0), p(2), p(3)]);

        let recs = prune(&s, &mut c, &Subset::new(vec![p(0), p(2)])).unwrap();
        assert_eq!(recs[0].length_delta, -1.0);
        assert_eq!(c.length(&s), 2.0);

        // detour removed: length drops
        let pts = vec![vec![0.0, 0.0], vec![1.0, 1.0], vec![2.0, 0.0]];
        let s = FiniteMetricSpace::from_coordinates(pts).unwrap();
        let mut c = Curve::from_path(&[p(0), p(1), p(2)], 0).unwrap();
        let recs = prune(&s, &mut c, &Subset::new(vec![p(0), p(2)])).unwrap();
        assert!(recs[0].length_delta < 0.0);
    }

    #[test]
    fn farthest_first_refinement() {
        // old vertices at 0 and 1; new points at the gap midpoints of a
        // five-point refinement
        let s = line(&[0.0, 1.0, 0.5, 0.25, 0.75]);
        let order = farthest_first(&s, &[p(0), p(1)], &[p(3), p(4), p(2)]);
        assert_eq!(order, vec![p(2), p(3), p(4)]);
        assert!(farthest_first(&s, &[p(0)], &[]).is_empty());
    }

    #[test]
    fn corrupted_edge_fails_h1() {
        let xs: Vec<f64> = (0..6).map(|i| i as f64 * 0.3).collect();
        let s = line(&xs);
        let cfg = Config::default();
        let good = Curve::from_path(&(0..6).map(p).collect::<Vec<_>>(), 0).unwrap();
        assert!(check_hypotheses(&s, &good, &cfg).passed());
        let all = Subset::full(6);
        let bad = Curve::from_edges(
            &all,
            &[[p(0), p(1)], [p(1), p(2)], [p(3), p(4)], [p(4), p(5)]],
            0,
        )
        .unwrap();
        let rep = check_hypotheses(&s, &bad, &cfg);
        assert!(!rep.passed());
        assert!(rep.failures.iter().all(|f| f.pair == [p(2), p(3)]));

        // square: not orderable anywhere, so every ball is inapplicable
        let sq = FiniteMetricSpace::from_coordinates(vec![
            vec![0.0, 0.0],
            vec![1.0, 0.0],
            vec![1.0, 1.0],
            vec![0.0, 1.0],
        ])
        .unwrap();
        let c = Curve::from_path(&[p(0), p(1), p(2), p(3)], 0).unwrap();
        let rep = check_hypotheses(&sq, &c, &cfg);
        assert!(rep.passed());
        assert_eq!(rep.inapplicable, 4);
    }

    #[test]
    fn ledger_summary() {
        let empty = length_ledger(&[], 0.0, 1.0, 0.1);
        assert!(empty.scales.is_empty());
        assert_eq!(empty.ledger_total, 0.0);
        assert!(empty.reconciles && empty.bound_holds);

        let rec = |scale, kind, delta, lambda| StepRecord {
            scale,
            step: 0,
            kind,
            vertex: p(0),
            removed: None,
            anchor: None,
            length_delta: delta,
            lambda,
        };
        let h = vec![
            rec(1, StepKind::InsertAppend, 1.0, Some(Lambda::L3)),
            rec(2, StepKind::InsertSplit, 0.25, Some(Lambda::L2)),
            rec(2, StepKind::Prune, -0.05, None),
        ];
        let s = length_ledger(&h, 1.2, 1.0, 0.1);
        assert_eq!(s.scales.len(), 2);
        assert!((s.scales[1].total - 0.2).abs() < 1e-15);
        assert_eq!(s.scales[1].by_lambda["L2"], 0.25);
        assert!(s.reconciles);
        assert!(!s.bound_holds);
    }
}
