//! Finite metric measure spaces: points, distances, balls and weights.
//!
//! Distances are held as a dense row-major matrix. When a space is built from
//! coordinates the matrix is filled with Euclidean norms once, and the
//! coordinates are kept only for plotting and segment-distance queries.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Index of a point in its owning [`FiniteMetricSpace`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PointId(pub usize);

impl PointId {
    #[inline]
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for PointId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<usize> for PointId {
    fn from(i: usize) -> Self {
        PointId(i)
    }
}

/// A sorted, duplicate-free set of point ids.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Subset {
    members: Vec<PointId>,
}

impl Subset {
    pub fn new(mut ids: Vec<PointId>) -> Self {
        ids.sort_unstable();
        ids.dedup();
        Subset { members: ids }
    }

    pub fn empty() -> Self {
        Subset::default()
    }

    pub fn full(size: usize) -> Self {
        Subset {
            members: (0..size).map(PointId).collect(),
        }
    }

    pub fn singleton(id: PointId) -> Self {
        Subset { members: vec![id] }
    }

    /// Builds a subset from ids already known to be sorted and unique.
    pub(crate) fn from_sorted(members: Vec<PointId>) -> Self {
        debug_assert!(members.windows(2).all(|w| w[0] < w[1]));
        Subset { members }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn ids(&self) -> &[PointId] {
        &self.members
    }

    pub fn iter(&self) -> impl Iterator<Item = PointId> + '_ {
        self.members.iter().copied()
    }

    pub fn contains(&self, id: PointId) -> bool {
        self.members.binary_search(&id).is_ok()
    }

    pub fn is_subset_of(&self, other: &Subset) -> bool {
        self.iter().all(|id| other.contains(id))
    }

    pub fn union(&self, other: &Subset) -> Subset {
        let mut ids = self.members.clone();
        ids.extend_from_slice(&other.members);
        Subset::new(ids)
    }

    pub fn difference(&self, other: &Subset) -> Subset {
        Subset::from_sorted(self.iter().filter(|id| !other.contains(*id)).collect())
    }

    pub fn intersection(&self, other: &Subset) -> Subset {
        Subset::from_sorted(self.iter().filter(|id| other.contains(*id)).collect())
    }

    pub fn into_vec(self) -> Vec<PointId> {
        self.members
    }
}

impl FromIterator<PointId> for Subset {
    fn from_iter<I: IntoIterator<Item = PointId>>(iter: I) -> Self {
        Subset::new(iter.into_iter().collect())
    }
}

/// One problem found by [`FiniteMetricSpace::validate_metric`].
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MetricViolation {
    Diagonal { i: usize, value: f64 },
    Negative { i: usize, j: usize, value: f64 },
    NonFinite { i: usize, j: usize },
    Asymmetric { i: usize, j: usize, dij: f64, dji: f64 },
    Triangle { i: usize, j: usize, k: usize, excess: f64 },
}

/// Outcome of metric validation. An empty `violations` list means valid.
#[derive(Clone, Debug, Default, Serialize)]
pub struct MetricReport {
    pub tolerance: f64,
    pub checked_triangle: bool,
    /// Total number of violations found, including any beyond `violations`.
    pub count: usize,
    /// The first [`MetricReport::MAX_LISTED`] violations in scan order.
    pub violations: Vec<MetricViolation>,
}

impl MetricReport {
    pub const MAX_LISTED: usize = 1000;

    pub fn is_valid(&self) -> bool {
        self.count == 0
    }

    fn push(&mut self, v: MetricViolation) {
        self.count += 1;
        if self.violations.len() < Self::MAX_LISTED {
            self.violations.push(v);
        }
    }
}

/// Spaces larger than this skip the O(n³) triangle check on load.
pub const TRIANGLE_CHECK_LIMIT: usize = 2000;

/// A finite metric space given by a distance matrix, optionally with
/// Euclidean coordinates.
#[derive(Clone, Debug)]
pub struct FiniteMetricSpace {
    size: usize,
    dist: Vec<f64>,
    coords: Option<Vec<Vec<f64>>>,
    diameter: f64,
}

impl FiniteMetricSpace {
    /// Builds a Euclidean space from coordinate rows of equal dimension.
    pub fn from_coordinates(coords: Vec<Vec<f64>>) -> Result<Self> {
        let dim = coords.first().map_or(0, Vec::len);
        if let Some((row, _)) = coords.iter().enumerate().find(|(_, c)| c.len() != dim) {
            return Err(Error::InvalidArgument(format!(
                "coordinate row {row} has dimension {} (expected {dim})",
                coords[row].len()
            )));
        }
        if coords.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite coordinate".into()));
        }
        let size = coords.len();
        let mut dist = vec![0.0; size * size];
        for i in 0..size {
            for j in (i + 1)..size {
                let d = euclidean(&coords[i], &coords[j]);
                dist[i * size + j] = d;
                dist[j * size + i] = d;
            }
        }
        Ok(Self::assemble(size, dist, Some(coords)))
    }

    /// Builds a space from a square distance matrix. Entries are stored as
    /// given; use [`validate_metric`](Self::validate_metric) to check axioms.
    pub fn from_matrix(matrix: Vec<Vec<f64>>) -> Result<Self> {
        let size = matrix.len();
        let mut dist = Vec::with_capacity(size * size);
        for (i, row) in matrix.into_iter().enumerate() {
            if row.len() != size {
                return Err(Error::InvalidArgument(format!(
                    "matrix row {i} has {} entries (expected {size})",
                    row.len()
                )));
            }
            dist.extend(row);
        }
        Ok(Self::assemble(size, dist, None))
    }

    /// Matrix source with coordinates attached for plotting. The matrix stays
    /// the ground truth for every distance query.
    pub fn from_matrix_with_coordinates(
        matrix: Vec<Vec<f64>>,
        coords: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let mut space = Self::from_matrix(matrix)?;
        if coords.len() != space.size {
            return Err(Error::InvalidArgument(format!(
                "{} coordinate rows for {} matrix rows",
                coords.len(),
                space.size
            )));
        }
        space.coords = Some(coords);
        Ok(space)
    }

    fn assemble(size: usize, dist: Vec<f64>, coords: Option<Vec<Vec<f64>>>) -> Self {
        let diameter = dist
            .iter()
            .copied()
            .filter(|d| d.is_finite())
            .fold(0.0, f64::max);
        FiniteMetricSpace {
            size,
            dist,
            coords,
            diameter,
        }
    }

    pub fn len(&self) -> usize {
        self.size
    }

    pub fn is_empty(&self) -> bool {
        self.size == 0
    }

    pub fn ids(&self) -> impl Iterator<Item = PointId> {
        (0..self.size).map(PointId)
    }

    pub fn coordinates(&self) -> Option<&[Vec<f64>]> {
        self.coords.as_deref()
    }

    pub fn has_coordinates(&self) -> bool {
        self.coords.is_some()
    }

    /// Unchecked distance lookup; panics on out-of-range ids.
    #[inline]
    pub fn d(&self, i: PointId, j: PointId) -> f64 {
        self.dist[i.0 * self.size + j.0]
    }

    fn check(&self, id: PointId) -> Result<()> {
        if id.0 < self.size {
            Ok(())
        } else {
            Err(Error::OutOfRange {
                id: id.0,
                size: self.size,
            })
        }
    }

    pub fn distance(&self, i: PointId, j: PointId) -> Result<f64> {
        self.check(i)?;
        self.check(j)?;
        Ok(self.d(i, j))
    }

    /// Diameter of the whole space (0 for fewer than two points).
    pub fn space_diameter(&self) -> f64 {
        self.diameter
    }

    pub fn diameter(&self, subset: &Subset) -> Result<f64> {
        if subset.is_empty() {
            return Err(Error::Empty("subset"));
        }
        for id in subset.iter() {
            self.check(id)?;
        }
        Ok(self.diameter_unchecked(subset.ids()))
    }

    pub(crate) fn diameter_unchecked(&self, ids: &[PointId]) -> f64 {
        let mut best = 0.0f64;
        for (a, &i) in ids.iter().enumerate() {
            for &j in &ids[a + 1..] {
                best = best.max(self.d(i, j));
            }
        }
        best
    }

    /// Closed ball `{ j : d(center, j) <= r }`.
    pub fn ball(&self, center: PointId, r: f64) -> Result<Subset> {
        self.check(center)?;
        if r.is_nan() || r < 0.0 {
            return Err(Error::InvalidArgument(format!("negative radius {r}")));
        }
        Ok(self.ball_unchecked(center, r))
    }

    pub(crate) fn ball_unchecked(&self, center: PointId, r: f64) -> Subset {
        let row = &self.dist[center.0 * self.size..(center.0 + 1) * self.size];
        Subset::from_sorted(
            row.iter()
                .enumerate()
                .filter(|(_, &d)| d <= r)
                .map(|(j, _)| PointId(j))
                .collect(),
        )
    }

    /// Closed ball restricted to `within`.
    pub fn ball_in(&self, center: PointId, r: f64, within: &Subset) -> Subset {
        Subset::from_sorted(within.iter().filter(|&j| self.d(center, j) <= r).collect())
    }

    /// Nearest candidate to `x`; ties go to the smallest id.
    pub fn nearest_in(&self, x: PointId, candidates: &Subset) -> Result<(PointId, f64)> {
        self.check(x)?;
        self.nearest_among(x, candidates.iter())
            .ok_or(Error::Empty("candidate set"))
    }

    pub(crate) fn nearest_among(
        &self,
        x: PointId,
        candidates: impl Iterator<Item = PointId>,
    ) -> Option<(PointId, f64)> {
        let mut best: Option<(PointId, f64)> = None;
        for c in candidates {
            let d = self.d(x, c);
            match best {
                Some((b, bd)) if d > bd || (d == bd && c > b) => {}
                _ => best = Some((c, d)),
            }
        }
        best
    }

    /// Distance from `x` to a set (infinite for an empty set).
    pub fn distance_to_set(&self, x: PointId, set: impl IntoIterator<Item = PointId>) -> f64 {
        set.into_iter()
            .map(|c| self.d(x, c))
            .fold(f64::INFINITY, f64::min)
    }

    /// Smallest positive nearest-neighbour distance, if any pair is apart.
    pub fn min_positive_gap(&self) -> Option<f64> {
        let mut best = f64::INFINITY;
        for i in 0..self.size {
            for j in 0..self.size {
                let d = self.dist[i * self.size + j];
                if i != j && d > 0.0 && d < best {
                    best = d;
                }
            }
        }
        best.is_finite().then_some(best)
    }

    /// Checks diagonal, sign, symmetry and the triangle inequality.
    pub fn validate_metric(&self, tolerance: f64) -> MetricReport {
        self.validate_with(tolerance, true)
    }

    /// Like [`validate_metric`](Self::validate_metric); the O(n³) triangle
    /// scan runs only when `triangle` is set.
    pub fn validate_with(&self, tolerance: f64, triangle: bool) -> MetricReport {
        let n = self.size;
        let mut report = MetricReport {
            tolerance,
            checked_triangle: triangle,
            ..Default::default()
        };
        let mut finite = true;
        for i in 0..n {
            let dii = self.dist[i * n + i];
            if !dii.is_finite() || dii.abs() > tolerance {
                report.push(MetricViolation::Diagonal { i, value: dii });
            }
            for j in 0..n {
                let dij = self.dist[i * n + j];
                if !dij.is_finite() {
                    finite = false;
                    report.push(MetricViolation::NonFinite { i, j });
                    continue;
                }
                if dij < -tolerance {
                    report.push(MetricViolation::Negative { i, j, value: dij });
                }
                if j > i {
                    let dji = self.dist[j * n + i];
                    if dji.is_finite() && (dij - dji).abs() > tolerance {
                        report.push(MetricViolation::Asymmetric { i, j, dij, dji });
                    }
                }
            }
        }
        if triangle && finite {
            for i in 0..n {
                for j in 0..n {
                    if j == i {
                        continue;
                    }
                    let dij = self.dist[i * n + j];
                    for k in 0..n {
                        if k == i || k == j {
                            continue;
                        }
                        let excess = self.dist[i * n + k] - dij - self.dist[j * n + k];
                        if excess > tolerance {
                            report.push(MetricViolation::Triangle { i, j, k, excess });
                        }
                    }
                }
            }
        }
        report
    }

    /// Copy with every distance (and coordinate) multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let dist = self.dist.iter().map(|d| d * factor).collect();
        let coords = self.coords.as_ref().map(|cs| {
            cs.iter()
                .map(|c| c.iter().map(|v| v * factor).collect())
                .collect()
        });
        Self::assemble(self.size, dist, coords)
    }

    /// Rows of the distance matrix.
    pub fn matrix_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.dist.chunks(self.size.max(1)).take(self.size)
    }
}

pub(crate) fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Nonnegative per-point weights standing in for a Borel measure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Measure {
    weights: Vec<f64>,
    total: f64,
}

impl Measure {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if let Some((i, w)) = weights
            .iter()
            .enumerate()
            .find(|(_, w)| !w.is_finite() || **w < 0.0)
        {
            return Err(Error::InvalidArgument(format!(
                "weight {i} is {w}; weights must be finite and nonnegative"
            )));
        }
        let total = weights.iter().sum();
        Ok(Measure { weights, total })
    }

    pub fn uniform(size: usize, weight: f64) -> Result<Self> {
        Self::new(vec![weight; size])
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    #[inline]
    pub fn weight(&self, id: PointId) -> f64 {
        self.weights[id.0]
    }

    pub fn mass(&self, subset: &Subset) -> f64 {
        self.mass_of(subset.iter())
    }

    pub fn mass_of(&self, ids: impl IntoIterator<Item = PointId>) -> f64 {
        ids.into_iter().map(|id| self.weights[id.0]).sum()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Measure {
            weights: self.weights.iter().map(|w| w * factor).collect(),
            total: self.total * factor,
        }
    }

    pub(crate) fn check_matches(&self, space: &FiniteMetricSpace) -> Result<()> {
        if self.len() == space.len() {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "measure has {} weights for a space of {} points",
                self.len(),
                space.len()
            )))
        }
    }
}
