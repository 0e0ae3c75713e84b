//! Multiscale nets: density sets, curvature-minimizing representatives,
//! separated nets and stopped balls.
//!
//! Scale `n` works at resolution `2^-n`. Starting from the coarsest scale
//! `n0` (one net point), each stage picks a maximal `2^-n`-separated set of
//! dense points outside the stopped balls, moves every pick to a nearby
//! point of least local curvature, and freezes the picks whose surroundings
//! carry too little mass.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::config::{Config, DensityIndex};
use crate::curvature::{self, menger_from_sides, NeumaierSum};
use crate::error::{Error, Result, Warning};
use crate::metric::{FiniteMetricSpace, Measure, PointId, Subset};

/// `2^-n`.
#[inline]
pub fn dyadic(n: i32) -> f64 {
    2f64.powi(-n)
}

/// Largest integer `n0` with `d(X) ≤ 2^-n0`.
pub fn coarsest_scale(space: &FiniteMetricSpace) -> Result<i32> {
    let d = space.space_diameter();
    if !(d > 0.0) {
        return Err(Error::InvalidArgument(
            "coarsest scale needs a space of positive diameter".into(),
        ));
    }
    let mut n = (-d.log2()).floor() as i32;
    while dyadic(n) < d {
        n -= 1;
    }
    while dyadic(n + 1) >= d {
        n += 1;
    }
    Ok(n)
}

/// Smallest `n` with `2^-n` below half the smallest positive gap.
pub fn default_n_max(space: &FiniteMetricSpace) -> Option<i32> {
    let half = space.min_positive_gap()? / 2.0;
    let mut n = (-half.log2()).floor() as i32;
    while dyadic(n) >= half {
        n += 1;
    }
    while dyadic(n - 1) < half {
        n -= 1;
    }
    Some(n)
}

/// Per-point distances sorted ascending with running mass, for fast closed
/// ball masses.
#[derive(Clone, Debug)]
pub struct BallIndex {
    rows: Vec<Vec<(f64, PointId)>>,
    prefix: Vec<Vec<f64>>,
}

impl BallIndex {
    pub fn new(space: &FiniteMetricSpace, measure: &Measure) -> Self {
        let n = space.len();
        let mut rows = Vec::with_capacity(n);
        let mut prefix = Vec::with_capacity(n);
        for x in space.ids() {
            let mut row: Vec<(f64, PointId)> = space.ids().map(|y| (space.d(x, y), y)).collect();
            row.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let mut acc = NeumaierSum::default();
            let pre = row
                .iter()
                .map(|&(_, y)| {
                    acc.add(measure.weight(y));
                    acc.value()
                })
                .collect();
            rows.push(row);
            prefix.push(pre);
        }
        BallIndex { rows, prefix }
    }

    fn count_within(&self, x: PointId, r: f64) -> usize {
        self.rows[x.0].partition_point(|&(d, _)| d <= r)
    }

    /// `μ(B(x, r))` for the closed ball.
    pub fn mass(&self, x: PointId, r: f64) -> f64 {
        match self.count_within(x, r) {
            0 => 0.0,
            k => self.prefix[x.0][k - 1],
        }
    }

    /// `μ(B(x, r))` for the open ball.
    pub fn mass_open(&self, x: PointId, r: f64) -> f64 {
        match self.rows[x.0].partition_point(|&(d, _)| d < r) {
            0 => 0.0,
            k => self.prefix[x.0][k - 1],
        }
    }

    /// Points of the closed ball in ascending distance order.
    pub fn members(&self, x: PointId, r: f64) -> impl Iterator<Item = (f64, PointId)> + '_ {
        let k = self.count_within(x, r);
        self.rows[x.0][..k].iter().copied()
    }

    /// Distinct distances from `x`, ascending.
    pub fn radii(&self, x: PointId) -> impl Iterator<Item = f64> + '_ {
        let row = &self.rows[x.0];
        row.iter()
            .enumerate()
            .filter(move |(i, (d, _))| *i + 1 == row.len() || row[i + 1].0 != *d)
            .map(|(_, (d, _))| *d)
    }
}

/// `𝒟_n`: points whose ball of radius `2^-m` has mass at least `δ 2^-m` for
/// every `m` from `n0` to `n + N0`.
pub fn density_set(
    space: &FiniteMetricSpace,
    measure: &Measure,
    config: &Config,
    n0: i32,
    n: i32,
) -> Subset {
    space
        .ids()
        .filter(|&x| {
            (n0..=n + config.net_depth).all(|m| {
                let r = dyadic(m);
                measure.mass(&space.ball_unchecked(x, r)) >= config.delta * r
            })
        })
        .collect()
}

/// For each point, the largest `m` such that the density test passes at
/// every scale from `n0` to `m` (at most `cap`; `n0 - 1` when it fails at
/// once).
fn density_depths(index: &BallIndex, n_points: usize, delta: f64, n0: i32, cap: i32) -> Vec<i32> {
    (0..n_points)
        .map(|i| {
            let mut m = n0;
            while m <= cap && index.mass(PointId(i), dyadic(m)) >= delta * dyadic(m) {
                m += 1;
            }
            m - 1
        })
        .collect()
}

/// Pairs of the annulus around `x` at scale `n` that are themselves more
/// than `r1 2^-n` apart, with their weight products.
fn annulus_pairs(
    space: &FiniteMetricSpace,
    measure: &Measure,
    config: &Config,
    n: i32,
    x: PointId,
) -> Vec<(PointId, PointId, f64)> {
    let inner = config.r1 * dyadic(n);
    let outer = config.big_r1 * dyadic(n);
    let ring: Vec<PointId> = space
        .ids()
        .filter(|&z| {
            let d = space.d(x, z);
            d > inner && d <= outer && measure.weight(z) > 0.0
        })
        .collect();
    let mut pairs = Vec::new();
    for (a, &z1) in ring.iter().enumerate() {
        for &z2 in &ring[a + 1..] {
            if space.d(z1, z2) > inner {
                pairs.push((z1, z2, measure.weight(z1) * measure.weight(z2)));
            }
        }
    }
    pairs
}

/// Annulus curvature objective of a candidate representative.
pub fn representative_objective(
    space: &FiniteMetricSpace,
    pairs: &[(PointId, PointId, f64)],
    q: PointId,
) -> f64 {
    let mut acc = NeumaierSum::default();
    for &(z1, z2, w) in pairs {
        let c = menger_from_sides(space.d(z1, z2), space.d(z2, q), space.d(z1, q));
        acc.add(c * c * w);
    }
    acc.value()
}

/// `q_n(x)`: the point of `B(x, 2^-n-N0)` minimizing the annulus curvature
/// objective, ties to the smallest id.
pub fn select_representative(
    space: &FiniteMetricSpace,
    measure: &Measure,
    config: &Config,
    n: i32,
    x: PointId,
) -> Result<PointId> {
    space.distance(x, x)?;
    let candidates = space.ball_unchecked(x, dyadic(n + config.net_depth));
    if candidates.len() == 1 {
        return Ok(x);
    }
    let pairs = annulus_pairs(space, measure, config, n, x);
    let mut best = (candidates.ids()[0], f64::INFINITY);
    for q in candidates.iter() {
        let v = representative_objective(space, &pairs, q);
        if v < best.1 {
            best = (q, v);
        }
    }
    Ok(best.0)
}

/// Greedy maximal subset with pairwise distances above `2^-n`, scanning in
/// ascending id order.
pub fn separated_subset(space: &FiniteMetricSpace, candidates: &Subset, n: i32) -> Subset {
    let r = dyadic(n);
    let mut kept: Vec<PointId> = Vec::new();
    for c in candidates.iter() {
        if kept.iter().all(|&k| space.d(c, k) > r) {
            kept.push(c);
        }
    }
    Subset::new(kept)
}

/// A stopped net point: frozen at scale `m`, with the density point it
/// represented.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StopRecord {
    pub id: PointId,
    pub m: i32,
    pub center: PointId,
}

impl StopRecord {
    /// Radius of the stop ball `B(y)`.
    pub fn radius(&self) -> f64 {
        dyadic(self.m - 3)
    }

    pub fn covers(&self, space: &FiniteMetricSpace, z: PointId) -> bool {
        space.d(self.center, z) <= self.radius()
    }

    /// Membership in the doubled ball `2B(y)`.
    pub fn covers_doubled(&self, space: &FiniteMetricSpace, z: PointId) -> bool {
        space.d(self.center, z) <= 2.0 * self.radius()
    }
}

/// Nets at one scale.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NetState {
    pub n: i32,
    /// The net `D_n`.
    #[serde(rename = "D")]
    pub d: Subset,
    /// Stopped points `H_n`, sorted by id.
    #[serde(rename = "H")]
    pub h: Vec<StopRecord>,
    /// Density point represented by each member of `D_n`.
    pub q_inverse: BTreeMap<PointId, PointId>,
}

impl NetState {
    pub fn h_ids(&self) -> Subset {
        self.h.iter().map(|r| r.id).collect()
    }

    /// `X_n = D_n ∪ H_n`.
    pub fn x(&self) -> Subset {
        self.d.union(&self.h_ids())
    }

    pub fn stop_record(&self, id: PointId) -> Option<&StopRecord> {
        self.h
            .binary_search_by_key(&id, |r| r.id)
            .ok()
            .map(|i| &self.h[i])
    }

    /// Flags for points inside some stop ball of `H_n`.
    fn covered(&self, space: &FiniteMetricSpace) -> Vec<bool> {
        let mut covered = vec![false; space.len()];
        for rec in &self.h {
            for z in space.ids() {
                if !covered[z.0] && rec.covers(space, z) {
                    covered[z.0] = true;
                }
            }
        }
        covered
    }
}

/// `H_{n+1}`: adds the members of `D_n` whose neighbourhood outside the
/// current stop balls has mass at most `C1 δ 2^-n`.
pub fn stopped_update(
    space: &FiniteMetricSpace,
    measure: &Measure,
    config: &Config,
    state: &NetState,
) -> Vec<StopRecord> {
    let covered = state.covered(space);
    let threshold = config.c1 * config.delta * dyadic(state.n);
    let mut h = state.h.clone();
    for x in state.d.iter() {
        if state.stop_record(x).is_some() {
            continue;
        }
        let center = state.q_inverse.get(&x).copied().unwrap_or(x);
        let ball = space.ball_unchecked(center, dyadic(state.n - 4));
        let free = measure.mass_of(ball.iter().filter(|z| !covered[z.0]));
        if free <= threshold {
            h.push(StopRecord {
                id: x,
                m: state.n,
                center,
            });
        }
    }
    h.sort_by_key(|r| r.id);
    h
}

/// Representative point maximizing `μ(B(x, ηr) ∩ subset)` over the subset;
/// ties to the smallest id.
pub fn find_dense_ball(
    space: &FiniteMetricSpace,
    measure: &Measure,
    subset: &Subset,
    eta: f64,
    r: f64,
) -> Result<(PointId, f64)> {
    if subset.is_empty() {
        return Err(Error::Empty("subset"));
    }
    if !(eta > 0.0 && eta <= 1.0) || !(r > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "need 0 < eta <= 1 and r > 0, got eta = {eta}, r = {r}"
        )));
    }
    let mut best = (subset.ids()[0], f64::NEG_INFINITY);
    for x in subset.iter() {
        let m = measure.mass(&space.ball_in(x, eta * r, subset));
        if m > best.1 {
            best = (x, m);
        }
    }
    Ok(best)
}

/// One `(x, r)` with local curvature above the cutoff.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CurvatureExcess {
    pub point: PointId,
    pub radius: f64,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Epsilon1Report {
    pub eps1: f64,
    pub violations: Vec<CurvatureExcess>,
    /// Mass of the points having at least one violation.
    pub offending_mass: f64,
}

/// Scans dyadic radii `2^-m`, `m` from the coarsest to the finest scale,
/// for every point and reports local curvature above `ε1`. Cost grows with
/// the cube of ball sizes; intended for small inputs.
pub fn epsilon1_screen(
    space: &FiniteMetricSpace,
    measure: &Measure,
    config: &Config,
) -> Result<Epsilon1Report> {
    let mut violations = Vec::new();
    let mut offending = Vec::new();
    if space.len() >= 3 && config.eps1.is_finite() {
        let n0 = coarsest_scale(space)?;
        let n_max = config.n_max.or_else(|| default_n_max(space)).unwrap_or(n0).max(n0);
        for x in space.ids() {
            let mut hit = false;
            for m in n0..=n_max {
                let r = dyadic(m);
                let v = curvature::local_c2(space, measure, x, r, config.k)?;
                if v > config.eps1 {
                    violations.push(CurvatureExcess {
                        point: x,
                        radius: r,
                        value: v,
                    });
                    hit = true;
                }
            }
            if hit {
                offending.push(x);
            }
        }
    }
    Ok(Epsilon1Report {
        eps1: config.eps1,
        violations,
        offending_mass: measure.mass_of(offending),
    })
}

/// The full cascade from the coarsest to the finest scale.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NetCascade {
    pub n0: i32,
    pub n_max: i32,
    pub states: Vec<NetState>,
    pub warnings: Vec<Warning>,
}

impl NetCascade {
    pub fn state(&self, n: i32) -> Option<&NetState> {
        usize::try_from(n - self.n0).ok().and_then(|i| self.states.get(i))
    }
}

/// Precomputed data for advancing nets scale by scale.
pub struct NetBuilder<'a> {
    space: &'a FiniteMetricSpace,
    measure: &'a Measure,
    config: &'a Config,
    n0: i32,
    n_max: i32,
    depths: Vec<i32>,
}

impl<'a> NetBuilder<'a> {
    pub fn new(space: &'a FiniteMetricSpace, measure: &'a Measure, config: &'a Config) -> Result<Self> {
        measure.check_matches(space)?;
        let n0 = coarsest_scale(space)?;
        let n_max = config
            .n_max
            .or_else(|| default_n_max(space))
            .unwrap_or(n0)
            .max(n0);
        let index = BallIndex::new(space, measure);
        let cap = n_max + config.net_depth;
        let depths = density_depths(&index, space.len(), config.delta, n0, cap);
        Ok(NetBuilder {
            space,
            measure,
            config,
            n0,
            n_max,
            depths,
        })
    }

    pub fn n0(&self) -> i32 {
        self.n0
    }

    pub fn n_max(&self) -> i32 {
        self.n_max
    }

    /// `𝒟_n` from the precomputed depths.
    pub fn density_set(&self, n: i32) -> Subset {
        let need = n + self.config.net_depth;
        self.space.ids().filter(|x| self.depths[x.0] >= need).collect()
    }

    fn net_from(&self, n: i32, candidates: &Subset) -> Result<(Subset, BTreeMap<PointId, PointId>)> {
        let prime = separated_subset(self.space, candidates, n);
        let mut q_inverse = BTreeMap::new();
        for x in prime.iter() {
            let q = select_representative(self.space, self.measure, self.config, n, x)?;
            q_inverse.insert(q, x);
        }
        if q_inverse.len() != prime.len() {
            return Err(Error::Structural(format!(
                "representatives collide at scale {n}"
            )));
        }
        let d = q_inverse.keys().copied().collect();
        Ok((d, q_inverse))
    }

    /// The single-point net at the coarsest scale.
    pub fn initial(&self) -> Result<NetState> {
        let dense = self.density_set(self.n0);
        if dense.is_empty() {
            return Err(Error::Structural(format!(
                "density set at the coarsest scale {} is empty; lower delta",
                self.n0
            )));
        }
        let (d, q_inverse) = self.net_from(self.n0, &dense)?;
        Ok(NetState {
            n: self.n0,
            d,
            h: Vec::new(),
            q_inverse,
        })
    }

    /// Nets at scale `n + 1` from those at scale `n`, with the separation
    /// and proximity guarantees asserted and the reachability bound
    /// recorded as warnings.
    pub fn advance(&self, state: &NetState, warnings: &mut Vec<Warning>) -> Result<NetState> {
        let space = self.space;
        let n = state.n + 1;
        let h = stopped_update(space, self.measure, self.config, state);
        let mut next = NetState {
            n,
            d: Subset::empty(),
            h,
            q_inverse: BTreeMap::new(),
        };
        let covered = next.covered(space);
        let density_n = match self.config.density_index {
            DensityIndex::Current => n,
            DensityIndex::Previous => n - 1,
        };
        let candidates: Subset = self
            .density_set(density_n)
            .iter()
            .filter(|z| !covered[z.0])
            .collect();
        let (d, q_inverse) = self.net_from(n, &candidates)?;
        next.d = d;
        next.q_inverse = q_inverse;

        let x = next.x();
        if x.is_empty() {
            return Err(Error::Structural(format!("empty vertex pool at scale {n}")));
        }
        let sep = (1.0 - dyadic(self.config.net_depth - 1)) * dyadic(n);
        let ids = x.ids();
        for (a, &z1) in ids.iter().enumerate() {
            for &z2 in &ids[a + 1..] {
                if space.d(z1, z2) <= sep {
                    return Err(Error::Structural(format!(
                        "separation fails at scale {n}: d({z1}, {z2}) = {} <= {sep}",
                        space.d(z1, z2)
                    )));
                }
            }
        }
        let reach = dyadic(n - 2);
        for z in next.d.iter() {
            let dist = space.distance_to_set(z, state.d.iter());
            if !(dist < reach) {
                return Err(Error::Structural(format!(
                    "net point {z} at scale {n} is {dist} from the previous net (bound {reach})"
                )));
            }
        }
        let bound = dyadic(state.n - 5);
        for z in state.x().iter() {
            let dist = space.distance_to_set(z, x.iter());
            if !(dist < bound) {
                warnings.push(Warning::new(
                    state.n,
                    "le2",
                    format!("{z} is {dist} from the next vertex pool (bound {bound})"),
                ));
            }
        }
        Ok(next)
    }

    pub fn build(&self) -> Result<NetCascade> {
        let mut warnings = Vec::new();
        let mut states = vec![self.initial()?];
        while states.last().map(|s| s.n).unwrap_or(self.n_max) < self.n_max {
            let next = self.advance(states.last().unwrap(), &mut warnings)?;
            states.push(next);
        }
        Ok(NetCascade {
            n0: self.n0,
            n_max: self.n_max,
            states,
            warnings,
        })
    }
}

pub fn build_nets(space: &FiniteMetricSpace, measure: &Measure, config: &Config) -> Result<NetCascade> {
    NetBuilder::new(space, measure, config)?.build()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(xs: &[f64]) -> FiniteMetricSpace {
        FiniteMetricSpace::from_coordinates(xs.iter().map(|&x| vec![x]).collect()).unwrap()
    }

    fn uniform_segment(n: usize) -> (FiniteMetricSpace, Measure) {
        let xs: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
        let s = line(&xs);
        let m = Measure::uniform(n, 1.0 / (n - 1) as f64).unwrap();
        (s, m)
    }

    #[test]
    fn coarsest_scale_examples() {
        assert_eq!(coarsest_scale(&line(&[0.0, 1.0])).unwrap(), 0);
        assert_eq!(coarsest_scale(&line(&[0.0, 0.3])).unwrap(), 1);
        assert_eq!(coarsest_scale(&line(&[0.0, 5.0])).unwrap(), -3);
        assert_eq!(coarsest_scale(&line(&[0.0, 0.25])).unwrap(), 2);
        assert!(coarsest_scale(&line(&[1.0])).is_err());
    }

    #[test]
    fn n_max_resolution() {
        // gap 0.1: half is 0.05, and 2^-5 = 0.03125 is the first dyadic below it
        assert_eq!(default_n_max(&line(&[0.0, 0.1, 0.5])), Some(5));
        assert_eq!(default_n_max(&line(&[2.0])), None);
    }

    #[test]
    fn ball_index_matches_direct_mass() {
        let s = line(&[0.0, 0.5, 1.2, 1.3, 4.0]);
        let m = Measure::new(vec![0.1, 0.2, 0.3, 0.4, 0.5]).unwrap();
        let idx = BallIndex::new(&s, &m);
        for x in s.ids() {
            for r in [0.0, 0.1, 0.5, 0.7, 1.0, 1.3, 5.0] {
                let direct = m.mass(&s.ball(x, r).unwrap());
                assert!((idx.mass(x, r) - direct).abs() < 1e-15);
            }
        }
        let radii: Vec<f64> = idx.radii(PointId(0)).collect();
        assert_eq!(radii, vec![0.0, 0.5, 1.2, 1.3, 4.0]);
    }

    #[test]
    fn density_examples() {
        let (s, m) = uniform_segment(1001);
        let c = Config {
            delta: 0.5,
            ..Config::default()
        };
        let n0 = coarsest_scale(&s).unwrap();
        // spacing 1e-3; scales up to 2^-9 ≈ 2e-3 resolve
        let dense = density_set(&s, &m, &c, n0, 4);
        assert!(dense.contains(PointId(500)));
        assert!(dense.contains(PointId(0)));

        let mut xs: Vec<f64> = (0..50).map(|i| i as f64 / 49.0).collect();
        xs.push(0.75 + 1e-4);
        let mut w = vec![1.0 / 49.0; 50];
        w.push(1e-9);
        let s2 = FiniteMetricSpace::from_coordinates(
            xs.iter()
                .enumerate()
                .map(|(i, &x)| vec![x, if i == 50 { 0.2 } else { 0.0 }])
                .collect(),
        )
        .unwrap();
        let m2 = Measure::new(w).unwrap();
        let n0 = coarsest_scale(&s2).unwrap();
        assert!(!density_set(&s2, &m2, &c, n0, 3).contains(PointId(50)));

        let tiny = Config {
            delta: f64::MIN_POSITIVE,
            ..Config::default()
        };
        assert_eq!(density_set(&s2, &m2, &tiny, n0, 3).len(), 51);
    }

    #[test]
    fn builder_density_matches_direct() {
        let (s, m) = uniform_segment(60);
        let c = Config {
            delta: 0.9,
            ..Config::default()
        };
        let b = NetBuilder::new(&s, &m, &c).unwrap();
        for n in b.n0()..=b.n_max() {
            assert_eq!(b.density_set(n), density_set(&s, &m, &c, b.n0(), n), "scale {n}");
        }
    }

    #[test]
    fn representative_examples() {
        let c = Config::default();
        // no annulus pairs: objective is zero everywhere, smallest id wins
        let s = line(&[0.0, 0.001, 0.002]);
        let m = Measure::uniform(3, 1.0).unwrap();
        assert_eq!(select_representative(&s, &m, &c, 0, PointId(1)).unwrap(), PointId(0));

        // a single candidate
        let s = line(&[0.0, 1.0]);
        let m = Measure::uniform(2, 1.0).unwrap();
        assert_eq!(select_representative(&s, &m, &c, 0, PointId(1)).unwrap(), PointId(1));

        // three candidates; the on-axis one sees a straight pair
        let h = 0.01;
        let pts = vec![
            vec![0.0, h],
            vec![0.0, 0.0],
            vec![0.0, -h],
            vec![-1.0, 0.0],
            vec![1.0, 0.0],
            vec![-2.0, 0.0],
            vec![2.0, 0.0],
        ];
        let s = FiniteMetricSpace::from_coordinates(pts).unwrap();
        let m = Measure::uniform(7, 1.0).unwrap();
        let c = Config {
            net_depth: 5,
            ..Config::default()
        };
        // scale -1: candidates within 2^-4 = 0.0625, annulus (0.125, 16]
        let q = select_representative(&s, &m, &c, -1, PointId(0)).unwrap();
        assert_eq!(q, PointId(1));
        let pairs = annulus_pairs(&s, &m, &c, -1, PointId(0));
        assert_eq!(pairs.len(), 6);
        assert_eq!(representative_objective(&s, &pairs, PointId(1)), 0.0);
        assert!(representative_objective(&s, &pairs, PointId(0)) > 0.0);
    }

    #[test]
    fn separated_examples() {
        let s = line(&[0.0, 0.4, 1.01, 2.5]);
        assert_eq!(separated_subset(&s, &Subset::full(4), 0), Subset::new(vec![PointId(0), PointId(2), PointId(3)]));
        assert_eq!(separated_subset(&s, &Subset::full(4), 3).len(), 4);
        assert!(separated_subset(&s, &Subset::empty(), 0).is_empty());
    }

    #[test]
    fn stopping_examples() {
        let (s, m) = uniform_segment(101);
        let c = Config::default();
        let mut qi = BTreeMap::new();
        qi.insert(PointId(50), PointId(50));
        let st = NetState {
            n: 2,
            d: Subset::singleton(PointId(50)),
            h: Vec::new(),
            q_inverse: qi,
        };
        // mass near 1 vs threshold 32 * 0.01 / 4 = 0.08
        assert!(stopped_update(&s, &m, &c, &st).is_empty());

        let light = Measure::uniform(101, 1e-6).unwrap();
        let h = stopped_update(&s, &light, &c, &st);
        assert_eq!(h, vec![StopRecord { id: PointId(50), m: 2, center: PointId(50) }]);

        let frozen = NetState { h: h.clone(), ..st.clone() };
        assert_eq!(stopped_update(&s, &light, &c, &frozen), h);
    }

    #[test]
    fn dense_ball_examples() {
        let s = line(&[0.0]);
        let m = Measure::uniform(1, 0.3).unwrap();
        assert_eq!(find_dense_ball(&s, &m, &Subset::full(1), 1.0, 1.0).unwrap(), (PointId(0), 0.3));

        let mut xs: Vec<f64> = (0..9).map(|i| i as f64 * 0.01).collect();
        xs.push(5.0);
        let s = line(&xs);
        let m = Measure::uniform(10, 0.1).unwrap();
        let (x, mass) = find_dense_ball(&s, &m, &Subset::full(10), 0.5, 0.5).unwrap();
        assert!(x.0 < 9);
        assert!((mass - 0.9).abs() < 1e-12);
        assert!(find_dense_ball(&s, &m, &Subset::empty(), 0.5, 1.0).is_err());
    }

    #[test]
    fn epsilon1_examples() {
        let (s, m) = uniform_segment(20);
        let r = epsilon1_screen(&s, &m, &Config { eps1: 1e-9, ..Config::default() }).unwrap();
        assert!(r.violations.is_empty());

        let pts: Vec<Vec<f64>> = (0..16)
            .map(|i| {
                let t = i as f64 * std::f64::consts::TAU / 16.0;
                vec![t.cos(), t.sin()]
            })
            .collect();
        let circle = FiniteMetricSpace::from_coordinates(pts).unwrap();
        let arc = Measure::uniform(16, std::f64::consts::TAU / 16.0).unwrap();
        let small = Config { eps1: 0.1, ..Config::default() };
        let r = epsilon1_screen(&circle, &arc, &small).unwrap();
        assert!(!r.violations.is_empty());
        // the full-diameter ball: every triple has curvature 1
        let v = r.violations.iter().find(|v| v.point == PointId(0) && v.radius == 2.0).unwrap();
        let oracle = curvature::c2_k(&circle, &arc, &Subset::full(16), 10.0).unwrap().value / 2.0;
        assert!((v.value - oracle).abs() < 1e-12);

        let inf = Config { eps1: f64::INFINITY, ..Config::default() };
        assert!(epsilon1_screen(&circle, &arc, &inf).unwrap().violations.is_empty());
    }

    #[test]
    fn cascade_on_segment() {
        let (s, m) = uniform_segment(65);
        let c = Config::default();
        let cas = build_nets(&s, &m, &c).unwrap();
        assert_eq!(cas.n0, 0);
        assert_eq!(cas.states[0].d.len(), 1);
        let sizes: Vec<usize> = cas.states.iter().map(|st| st.d.len()).collect();
        for w in sizes.windows(2) {
            assert!(w[1] >= w[0]);
        }
        for w in cas.states.windows(2) {
            assert!(w[0].h_ids().is_subset_of(&w[1].h_ids()));
        }
        for st in &cas.states {
            for (&q, &x) in &st.q_inverse {
                assert!(s.d(q, x) <= dyadic(st.n + c.net_depth));
            }
        }
        assert!(cas.warnings.is_empty(), "{:?}", cas.warnings);
        let again = build_nets(&s, &m, &c).unwrap();
        assert_eq!(cas, again);
    }

    #[test]
    fn snapshot_json_shape() {
        let (s, m) = uniform_segment(9);
        let cas = build_nets(&s, &m, &Config::default()).unwrap();
        let v = serde_json::to_value(&cas.states[0]).unwrap();
        assert!(v["n"].is_i64());
        assert!(v["D"].is_array());
        assert!(v["H"].is_array());
        assert!(v["q_inverse"].is_object());
    }
}
