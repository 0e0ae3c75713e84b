//! How well a finished curve covers the data, and whether the data meets
//! the standing assumptions of the length bound.

use serde::{Deserialize, Serialize};

use crate::config::{Config, RadiusScan};
use crate::curvature::c2_k;
use crate::curve::Curve;
use crate::error::{Error, Result};
use crate::metric::{FiniteMetricSpace, Measure, PointId, Subset};
use crate::nets::{coarsest_scale, default_n_max, dyadic, BallIndex, StopRecord};

/// How distances to the curve are measured.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceMode {
    /// Distance to the nearest vertex; works for any metric.
    #[default]
    Vertex,
    /// Distance to the polyline in the coordinate space.
    Segment,
}

fn segment_distance(p: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let mut ab2 = 0.0;
    let mut t = 0.0;
    for i in 0..p.len() {
        let ab = b[i] - a[i];
        ab2 += ab * ab;
        t += (p[i] - a[i]) * ab;
    }
    let t = if ab2 > 0.0 { (t / ab2).clamp(0.0, 1.0) } else { 0.0 };
    let mut s = 0.0;
    for i in 0..p.len() {
        let q = a[i] + t * (b[i] - a[i]);
        s += (p[i] - q) * (p[i] - q);
    }
    s.sqrt()
}

/// Distance from `z` to the curve.
pub fn point_to_curve(
    space: &FiniteMetricSpace,
    curve: &Curve,
    z: PointId,
    mode: DistanceMode,
) -> Result<f64> {
    if curve.is_empty() {
        return Err(Error::Empty("curve"));
    }
    space.distance(z, z)?;
    let vertex = space.distance_to_set(z, curve.vertices().iter());
    match mode {
        DistanceMode::Vertex => Ok(vertex),
        DistanceMode::Segment => {
            let coords = space.coordinates().ok_or_else(|| {
                Error::InvalidArgument("segment distances need coordinates".into())
            })?;
            let p = &coords[z.0];
            let best = curve
                .edges()
                .into_iter()
                .map(|[a, b]| segment_distance(p, &coords[a.0], &coords[b.0]))
                .fold(vertex, f64::min);
            Ok(best)
        }
    }
}

/// Mean distance from each point to its nearest distinct neighbour; zero
/// when no two points are apart.
pub fn mean_spacing(space: &FiniteMetricSpace) -> f64 {
    let mut sum = 0.0;
    let mut count = 0usize;
    for x in space.ids() {
        let nn = space
            .ids()
            .map(|y| space.d(x, y))
            .filter(|&d| d > 0.0)
            .fold(f64::INFINITY, f64::min);
        if nn.is_finite() {
            sum += nn;
            count += 1;
        }
    }
    if count == 0 {
        0.0
    } else {
        sum / count as f64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum UncoveredClass {
    /// Sparse surroundings at some radius above six times the distance.
    LowDensity,
    /// Inside a doubled stop ball.
    Stopped,
    Other,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct UncoveredPoint {
    pub id: PointId,
    pub distance: f64,
    pub class: UncoveredClass,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoverageReport {
    pub epsilon: f64,
    pub mode: DistanceMode,
    /// Vertex mode ignores segment interiors, so distances are upper
    /// bounds on the distance to the polyline.
    pub segment_interiors_ignored: bool,
    pub total_mass: f64,
    pub uncovered_mass: f64,
    pub uncovered_fraction: f64,
    pub v1_mass: f64,
    pub v2_mass: f64,
    pub other_mass: f64,
    pub uncovered: Vec<UncoveredPoint>,
    pub per_point_distance: Vec<f64>,
}

/// Low-density test: `μ(B(z, r)) ≤ τ0 r / 20` for some `r` in
/// `[6 dist, d(X)]`.
fn low_density(
    index: &BallIndex,
    z: PointId,
    dist: f64,
    diameter: f64,
    grid_depth: i32,
    tau0: f64,
    scan: RadiusScan,
) -> bool {
    let (lo, hi) = (6.0 * dist, diameter);
    if !(lo <= hi) {
        return false;
    }
    let c = tau0 / 20.0;
    if index.mass(z, lo) <= c * lo || index.mass(z, hi) <= c * hi {
        return true;
    }
    match scan {
        RadiusScan::Grid => (0..=grid_depth)
            .map(|m| dyadic(m) * diameter)
            .filter(|&r| r >= lo && r <= hi)
            .any(|r| index.mass(z, r) <= c * r),
        // the mass is constant between breakpoints, so the supremum of the
        // slack on each piece sits just below the next breakpoint
        RadiusScan::Exact => index
            .radii(z)
            .filter(|&b| b > lo && b <= hi)
            .any(|b| index.mass_open(z, b) < c * b),
    }
}

/// Mass farther than `epsilon` from the curve, split into low-density,
/// stopped and other points.
#[allow(clippy::too_many_arguments)]
pub fn coverage(
    space: &FiniteMetricSpace,
    measure: &Measure,
    curve: &Curve,
    epsilon: f64,
    mode: DistanceMode,
    stops: &[StopRecord],
    config: &Config,
) -> Result<CoverageReport> {
    measure.check_matches(space)?;
    if !(epsilon >= 0.0) {
        return Err(Error::InvalidArgument(format!("epsilon = {epsilon} must be nonnegative")));
    }
    let per_point: Vec<f64> = space
        .ids()
        .map(|z| point_to_curve(space, curve, z, mode))
        .collect::<Result<_>>()?;
    let diameter = space.space_diameter();
    let grid_depth = match space.min_positive_gap() {
        Some(g) if diameter > 0.0 => (diameter / g).log2().ceil().max(0.0) as i32,
        _ => 0,
    };
    let far: Vec<PointId> = space.ids().filter(|z| per_point[z.0] > epsilon).collect();
    let index = (!far.is_empty()).then(|| BallIndex::new(space, measure));
    let mut uncovered = Vec::with_capacity(far.len());
    let (mut v1, mut v2, mut other) = (0.0, 0.0, 0.0);
    for z in far {
        let dist = per_point[z.0];
        let w = measure.weight(z);
        let class = if low_density(
            index.as_ref().unwrap(),
            z,
            dist,
            diameter,
            grid_depth,
            config.tau0,
            config.coverage_scan,
        ) {
            v1 += w;
            UncoveredClass::LowDensity
        } else if stops.iter().any(|s| s.covers_doubled(space, z)) {
            v2 += w;
            UncoveredClass::Stopped
        } else {
            other += w;
            UncoveredClass::Other
        };
        uncovered.push(UncoveredPoint { id: z, distance: dist, class });
    }
    let uncovered_mass = v1 + v2 + other;
    let total = measure.total();
    Ok(CoverageReport {
        epsilon,
        mode,
        segment_interiors_ignored: mode == DistanceMode::Vertex,
        total_mass: total,
        uncovered_mass,
        uncovered_fraction: if total > 0.0 { uncovered_mass / total } else { 0.0 },
        v1_mass: v1,
        v2_mass: v2,
        other_mass: other,
        uncovered,
        per_point_distance: per_point,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GateCheck {
    pub value: f64,
    pub bound: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PropositionGate {
    /// `μ(X) ≥ μ0 d(X)`; value is `μ(X)`.
    pub total_mass: GateCheck,
    /// `μ(B(x, r)) ≤ C0 r` over dyadic radii; value is the largest ratio.
    pub upper_density: GateCheck,
    /// Where the largest ratio was attained.
    pub upper_density_at: Option<(PointId, f64)>,
    /// `c²_K(X) ≤ ε0 d(X)`; value is the energy.
    pub curvature: GateCheck,
    pub passed: bool,
}

/// Evaluates the mass, upper density and curvature assumptions.
pub fn proposition_gate(space: &FiniteMetricSpace, measure: &Measure, config: &Config) -> Result<PropositionGate> {
    measure.check_matches(space)?;
    let diameter = space.space_diameter();
    let total = measure.total();
    let total_mass = GateCheck {
        value: total,
        bound: config.mu0 * diameter,
        holds: total >= config.mu0 * diameter,
    };

    let mut worst = 0.0;
    let mut at = None;
    if diameter > 0.0 {
        let index = BallIndex::new(space, measure);
        let n0 = coarsest_scale(space)?;
        let n_max = config.n_max.or_else(|| default_n_max(space)).unwrap_or(n0).max(n0);
        for x in space.ids() {
            for m in n0..=n_max {
                let r = dyadic(m);
                let ratio = index.mass(x, r) / r;
                if ratio > worst {
                    worst = ratio;
                    at = Some((x, r));
                }
            }
        }
    }
    let upper_density = GateCheck {
        value: worst,
        bound: config.c0,
        holds: worst <= config.c0,
    };

    let energy = c2_k(space, measure, &Subset::full(space.len()), config.k)?.value;
    let curvature = GateCheck {
        value: energy,
        bound: config.eps0 * diameter,
        holds: energy <= config.eps0 * diameter,
    };
    Ok(PropositionGate {
        passed: total_mass.holds && upper_density.holds && curvature.holds,
        total_mass,
        upper_density,
        upper_density_at: at,
        curvature,
    })
}
