//! Menger curvature, triangle defect and the triple-integral energies built
//! from them.
//!
//! Energies sum over ordered triples of pairwise-distinct points. Every
//! ordering of a triple contributes the same term, so the loops visit
//! unordered triples once and weight them by six.

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::metric::{FiniteMetricSpace, Measure, PointId, Subset};

/// Slack allowed on the arccos argument before a triple is declared
/// non-embeddable.
pub const COS_SLACK: f64 = 1e-9;

/// Absolute slack used when checking the comparison chain between energies.
pub const CP_SLACK: f64 = 1e-12;

/// An ordered triple of points. The middle point is the vertex of
/// [`angle`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Triple(pub PointId, pub PointId, pub PointId);

impl Triple {
    /// Builds a triple, rejecting repeated ids.
    pub fn new(a: PointId, b: PointId, c: PointId) -> Result<Self> {
        if a == b || b == c || a == c {
            return Err(Error::DegenerateTriple(a, b, c));
        }
        Ok(Triple(a, b, c))
    }

    /// The six orderings of the triple.
    pub fn permutations(self) -> [Triple; 6] {
        let Triple(a, b, c) = self;
        [
            Triple(a, b, c),
            Triple(a, c, b),
            Triple(b, a, c),
            Triple(b, c, a),
            Triple(c, a, b),
            Triple(c, b, a),
        ]
    }

    fn sides(self, space: &FiniteMetricSpace) -> Result<(f64, f64, f64)> {
        let Triple(a, b, c) = self;
        Ok((
            space.distance(a, b)?,
            space.distance(b, c)?,
            space.distance(a, c)?,
        ))
    }
}

/// Angle at the middle point, in radians.
pub fn angle(space: &FiniteMetricSpace, t: Triple) -> Result<f64> {
    let (d12, d23, d13) = t.sides(space)?;
    let cos = checked_cos(t, d12, d23, d13)?;
    Ok(cos.acos())
}

fn checked_cos(t: Triple, d12: f64, d23: f64, d13: f64) -> Result<f64> {
    if d12 <= 0.0 || d23 <= 0.0 {
        return Err(Error::DegenerateTriple(t.0, t.1, t.2));
    }
    let cos = (d12 * d12 + d23 * d23 - d13 * d13) / (2.0 * d12 * d23);
    if !(-1.0 - COS_SLACK..=1.0 + COS_SLACK).contains(&cos) {
        return Err(Error::NonMetricTriple(t.0, t.1, t.2, cos));
    }
    Ok(cos.clamp(-1.0, 1.0))
}

/// Menger curvature `2 sin∠z1z2z3 / d(z1,z3)`, i.e. the reciprocal
/// circumradius of an isometric planar copy of the triple.
pub fn menger(space: &FiniteMetricSpace, t: Triple) -> Result<f64> {
    let (d12, d23, d13) = t.sides(space)?;
    if d13 <= 0.0 {
        return Err(Error::DegenerateTriple(t.0, t.1, t.2));
    }
    checked_cos(t, d12, d23, d13)?;
    Ok(menger_from_sides(d12, d23, d13))
}

/// Excess over the longest side below which a triple counts as collinear;
/// absorbs the rounding of distances computed from coordinates.
const COLLINEAR_SLACK: f64 = 4.0 * f64::EPSILON;

/// Curvature from the three side lengths. The value depends only on the
/// multiset of sides, so it is exactly invariant under reordering.
///
/// Writing `sin∠` through `(1 - cos)(1 + cos)` turns `2 sin∠ / d13` into
/// `sqrt(P) / (abc)` where `P` is the factored Heron product; the factors
/// are evaluated on sorted sides to avoid cancellation.
#[inline]
pub(crate) fn menger_from_sides(x: f64, y: f64, z: f64) -> f64 {
    let (a, b, c) = sort3(x, y, z);
    if c <= 0.0 {
        return 0.0;
    }
    if c - (a - b) <= COLLINEAR_SLACK * a {
        return 0.0;
    }
    let p = (a + (b + c)) * (c - (a - b)) * (c + (a - b)) * (a + (b - c));
    if p <= 0.0 {
        return 0.0;
    }
    p.sqrt() / (a * b * c)
}

/// Sorts descending.
#[inline]
fn sort3(x: f64, y: f64, z: f64) -> (f64, f64, f64) {
    let (mut a, mut b, mut c) = (x, y, z);
    if a < b {
        std::mem::swap(&mut a, &mut b);
    }
    if b < c {
        std::mem::swap(&mut b, &mut c);
    }
    if a < b {
        std::mem::swap(&mut a, &mut b);
    }
    (a, b, c)
}

/// Smallest triangle excess over the orderings of the triple: the sum of
/// the two shorter sides minus the longest.
pub fn partial_defect(space: &FiniteMetricSpace, t: Triple) -> Result<f64> {
    let (d12, d23, d13) = t.sides(space)?;
    Ok(defect_from_sides(d12, d23, d13))
}

#[inline]
pub(crate) fn defect_from_sides(x: f64, y: f64, z: f64) -> f64 {
    let (a, b, c) = sort3(x, y, z);
    let e = (b + c) - a;
    if e <= COLLINEAR_SLACK * a {
        0.0
    } else {
        e
    }
}

/// Membership in the comparable-triple set: the longest side is strictly
/// shorter than `k` times the shortest. `k = ∞` keeps every triple of
/// distinct locations.
pub fn in_t_k(space: &FiniteMetricSpace, t: Triple, k: f64) -> Result<bool> {
    let (d12, d23, d13) = t.sides(space)?;
    Ok(comparable(d12, d23, d13, k))
}

#[inline]
pub(crate) fn comparable(x: f64, y: f64, z: f64, k: f64) -> bool {
    let (a, _, c) = sort3(x, y, z);
    if c <= 0.0 {
        return false;
    }
    k.is_infinite() || a < k * c
}

fn serialize_k<S: Serializer>(k: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if k.is_finite() {
        s.serialize_f64(*k)
    } else {
        s.serialize_none()
    }
}

/// Value of a triple-integral energy.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EnergyReport {
    pub value: f64,
    /// Ordered triples that contributed (passed the comparability filter).
    pub triples_counted: u64,
    /// Comparability constant; serialized as `null` when infinite.
    #[serde(rename = "K", serialize_with = "serialize_k")]
    pub k: f64,
}

/// Compensated (Neumaier) summation.
#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

fn check_k(k: f64) -> Result<()> {
    if k.is_nan() || k < 1.0 {
        return Err(Error::InvalidArgument(format!(
            "comparability constant K = {k} must be >= 1"
        )));
    }
    Ok(())
}

fn gather(measure: &Measure, subset: &Subset) -> (Vec<PointId>, Vec<f64>) {
    let ids = subset.ids().to_vec();
    let ws = ids.iter().map(|&id| measure.weight(id)).collect();
    (ids, ws)
}

/// Visits every unordered triple `i < j < l` of `ids` with its three sides
/// and weight product.
#[inline]
fn for_each_triple(
    space: &FiniteMetricSpace,
    ids: &[PointId],
    ws: &[f64],
    mut f: impl FnMut(f64, f64, f64, f64),
) {
    let m = ids.len();
    for a in 0..m {
        let (ia, wa) = (ids[a], ws[a]);
        if wa == 0.0 {
            continue;
        }
        for b in (a + 1)..m {
            let (ib, wb) = (ids[b], ws[b]);
            if wb == 0.0 {
                continue;
            }
            let dab = space.d(ia, ib);
            let wab = wa * wb;
            for c in (b + 1)..m {
                let ic = ids[c];
                let wc = ws[c];
                if wc == 0.0 {
                    continue;
                }
                f(dab, space.d(ib, ic), space.d(ia, ic), wab * wc);
            }
        }
    }
}

fn check_subset(space: &FiniteMetricSpace, measure: &Measure, subset: &Subset) -> Result<()> {
    measure.check_matches(space)?;
    if let Some(id) = subset.iter().find(|id| id.0 >= space.len()) {
        return Err(Error::OutOfRange {
            id: id.0,
            size: space.len(),
        });
    }
    Ok(())
}

/// Curvature energy restricted to comparable triples:
/// `Σ c(z1,z2,z3)² w(z1)w(z2)w(z3)` over ordered triples of distinct points
/// of `subset` lying in the comparability set for `k`.
pub fn c2_k(
    space: &FiniteMetricSpace,
    measure: &Measure,
    subset: &Subset,
    k: f64,
) -> Result<EnergyReport> {
    check_k(k)?;
    check_subset(space, measure, subset)?;
    let (ids, ws) = gather(measure, subset);
    let mut acc = NeumaierSum::default();
    let mut counted = 0u64;
    for_each_triple(space, &ids, &ws, |x, y, z, w| {
        if comparable(x, y, z, k) {
            let c = menger_from_sides(x, y, z);
            acc.add(c * c * w);
            counted += 6;
        }
    });
    Ok(EnergyReport {
        value: 6.0 * acc.value(),
        triples_counted: counted,
        k,
    })
}

/// Defect energy `Σ ∂(z1,z2,z3) / d({z1,z2,z3})³ · w(z1)w(z2)w(z3)` over
/// ordered triples of distinct points.
pub fn beta(space: &FiniteMetricSpace, measure: &Measure, subset: &Subset) -> Result<EnergyReport> {
    check_subset(space, measure, subset)?;
    let (ids, ws) = gather(measure, subset);
    let mut acc = NeumaierSum::default();
    let mut counted = 0u64;
    for_each_triple(space, &ids, &ws, |x, y, z, w| {
        let diam = x.max(y).max(z);
        if diam > 0.0 {
            acc.add(defect_from_sides(x, y, z) / (diam * diam * diam) * w);
            counted += 6;
        }
    });
    Ok(EnergyReport {
        value: 6.0 * acc.value(),
        triples_counted: counted,
        k: f64::INFINITY,
    })
}

/// Normalized local curvature `c2_k(B(x,r)) / r`.
pub fn local_c2(
    space: &FiniteMetricSpace,
    measure: &Measure,
    x: PointId,
    r: f64,
    k: f64,
) -> Result<f64> {
    if r.is_nan() || r <= 0.0 {
        return Err(Error::InvalidArgument(format!("radius {r} must be positive")));
    }
    let ball = space.ball(x, r)?;
    Ok(c2_k(space, measure, &ball, k)?.value / r)
}

/// The chain `c2_K / 4K² ≤ β ≤ c2_∞ / 2` evaluated on one subset.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CpCheck {
    pub lhs: f64,
    pub mid: f64,
    pub rhs: f64,
    pub holds: bool,
    #[serde(rename = "K")]
    pub k: f64,
}

pub fn check_cp(
    space: &FiniteMetricSpace,
    measure: &Measure,
    subset: &Subset,
    k: f64,
) -> Result<CpCheck> {
    if !k.is_finite() {
        return Err(Error::InvalidArgument("K must be finite".into()));
    }
    let lhs = c2_k(space, measure, subset, k)?.value / (4.0 * k * k);
    let mid = beta(space, measure, subset)?.value;
    let rhs = c2_k(space, measure, subset, f64::INFINITY)?.value / 2.0;
    Ok(CpCheck {
        lhs,
        mid,
        rhs,
        holds: lhs <= mid + CP_SLACK && mid <= rhs + CP_SLACK,
        k,
    })
}
