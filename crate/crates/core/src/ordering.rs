//! Betweenness, the near-straightness classes `Ω(φ)` and linear orders on
//! finite sets.
//!
//! A sequence `x1 … xm` is an *order* when every ascending triple has its
//! outer pair strictly farthest apart. Equivalently, each row of the distance
//! matrix read in sequence order increases strictly to the right of the
//! diagonal and decreases strictly towards it from the left, which gives an
//! O(m²) validity test.
//!
//! An order, when it exists, is forced up to reversal: the endpoints are the
//! unique diameter pair and the remaining points are sorted by distance from
//! one endpoint. [`find_order`] uses exhaustive search on small sets and the
//! forced construction on larger ones.

use serde::Serialize;

use crate::curvature::Triple;
use crate::error::{Error, Result};
use crate::metric::{FiniteMetricSpace, PointId, Subset};

/// Default size up to which [`find_order`] searches exhaustively.
pub const DEFAULT_B_EXACT: usize = 9;

/// `xyz`: the outer distance strictly exceeds both adjacent ones.
#[inline]
pub fn is_between(space: &FiniteMetricSpace, x: PointId, y: PointId, z: PointId) -> bool {
    let dxz = space.d(x, z);
    dxz > space.d(x, y) && dxz > space.d(y, z)
}

/// Result of an `Ω(φ)` membership test.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OmegaCheck {
    pub holds: bool,
    /// First `(x, y, z)` with `xyz` and `d(x,z) < d(x,y) + φ d(y,z)`.
    pub violation: Option<(PointId, PointId, PointId)>,
}

/// Whether every between-triple of `subset` satisfies
/// `d(x,z) ≥ d(x,y) + φ d(y,z)`. Scans `x`, `y`, `z` in ascending id order.
pub fn in_omega(space: &FiniteMetricSpace, subset: &Subset, phi: f64) -> Result<OmegaCheck> {
    if !(0.0..=1.0).contains(&phi) {
        return Err(Error::InvalidArgument(format!("φ = {phi} outside [0, 1]")));
    }
    let ids = subset.ids();
    for &x in ids {
        for &y in ids {
            if y == x {
                continue;
            }
            for &z in ids {
                if z == x || z == y || !is_between(space, x, y, z) {
                    continue;
                }
                if space.d(x, z) < space.d(x, y) + phi * space.d(y, z) {
                    return Ok(OmegaCheck {
                        holds: false,
                        violation: Some((x, y, z)),
                    });
                }
            }
        }
    }
    Ok(OmegaCheck {
        holds: true,
        violation: None,
    })
}

/// Sufficient angle condition for a triple to be in `Ω(φ)`:
/// `cos∠xyz ≤ −φ`.
pub fn angle_omega_witness(space: &FiniteMetricSpace, t: Triple, phi: f64) -> Result<bool> {
    let a = crate::curvature::angle(space, t)?;
    Ok(a.cos() <= -phi)
}

/// A sequence satisfying the order condition.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct Order {
    pub sequence: Vec<PointId>,
}

/// Outcome of [`find_order`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OrderabilityResult {
    Orderable { sequence: Vec<PointId> },
    /// Four points `v1 v2 v3 v4` with `v1v2v3`, `v2v3v4`, `v3v4v1`, `v4v1v2`.
    CyclicQuadruple { quadruple: [PointId; 4] },
    NotOrderable,
}

impl OrderabilityResult {
    pub fn order(&self) -> Option<&[PointId]> {
        match self {
            OrderabilityResult::Orderable { sequence } => Some(sequence),
            _ => None,
        }
    }
}

/// O(m²) order test via row monotonicity.
pub fn is_order(space: &FiniteMetricSpace, seq: &[PointId]) -> bool {
    let m = seq.len();
    for i in 0..m {
        // to the right of i: strictly increasing
        for j in (i + 1)..m.saturating_sub(1) {
            if space.d(seq[i], seq[j]) >= space.d(seq[i], seq[j + 1]) {
                return false;
            }
        }
        // to the left of i: strictly increasing as we move away from i
        for j in 1..i {
            if space.d(seq[i], seq[j]) >= space.d(seq[i], seq[j - 1]) {
                return false;
            }
        }
    }
    true
}

/// Checks every ascending triple directly and returns the first failure.
pub fn order_violation(
    space: &FiniteMetricSpace,
    seq: &[PointId],
) -> Option<(PointId, PointId, PointId)> {
    let m = seq.len();
    for a in 0..m {
        for b in (a + 1)..m {
            for c in (b + 1)..m {
                if !is_between(space, seq[a], seq[b], seq[c]) {
                    return Some((seq[a], seq[b], seq[c]));
                }
            }
        }
    }
    None
}

/// Orientation fixed so that the first id is smaller than the last.
fn canonical(mut seq: Vec<PointId>) -> Vec<PointId> {
    if seq.len() > 1 && seq[0] > seq[seq.len() - 1] {
        seq.reverse();
    }
    seq
}

pub fn find_order(space: &FiniteMetricSpace, subset: &Subset) -> OrderabilityResult {
    find_order_with(space, subset, DEFAULT_B_EXACT)
}

/// [`find_order`] with an explicit exhaustive-search threshold.
pub fn find_order_with(
    space: &FiniteMetricSpace,
    subset: &Subset,
    b_exact: usize,
) -> OrderabilityResult {
    let ids = subset.ids();
    let found = if ids.len() <= b_exact {
        exhaustive_order(space, ids)
    } else {
        forced_order(space, ids)
    };
    if let Some(seq) = found {
        return OrderabilityResult::Orderable {
            sequence: canonical(seq),
        };
    }
    if ids.len() == 4 {
        if let Some(q) = cyclic_quadruple(space, ids) {
            return OrderabilityResult::CyclicQuadruple { quadruple: q };
        }
    }
    OrderabilityResult::NotOrderable
}

/// Depth-first search over permutations, pruning any prefix that already
/// contains a bad ascending triple.
pub fn exhaustive_order(space: &FiniteMetricSpace, ids: &[PointId]) -> Option<Vec<PointId>> {
    fn extend(
        space: &FiniteMetricSpace,
        ids: &[PointId],
        used: &mut [bool],
        seq: &mut Vec<PointId>,
    ) -> bool {
        if seq.len() == ids.len() {
            return true;
        }
        for (slot, &z) in ids.iter().enumerate() {
            if used[slot] {
                continue;
            }
            // a reversed duplicate: first id must stay below last id
            if seq.len() + 1 == ids.len() && seq.len() > 1 && seq[0] > z {
                continue;
            }
            let ok = seq.iter().enumerate().all(|(a, &x)| {
                seq[a + 1..]
                    .iter()
                    .all(|&y| is_between(space, x, y, z))
            });
            if !ok {
                continue;
            }
            used[slot] = true;
            seq.push(z);
            if extend(space, ids, used, seq) {
                return true;
            }
            seq.pop();
            used[slot] = false;
        }
        false
    }
    let mut used = vec![false; ids.len()];
    let mut seq = Vec::with_capacity(ids.len());
    extend(space, ids, &mut used, &mut seq).then_some(seq)
}

/// The unique candidate order: diameter pair at the ends, interior sorted
/// by distance from the lower-id endpoint.
pub fn forced_order(space: &FiniteMetricSpace, ids: &[PointId]) -> Option<Vec<PointId>> {
    let m = ids.len();
    if m <= 2 {
        return Some(ids.to_vec());
    }
    let mut best = (ids[0], ids[1], f64::NEG_INFINITY);
    let mut tied = false;
    for (a, &x) in ids.iter().enumerate() {
        for &y in &ids[a + 1..] {
            let d = space.d(x, y);
            if d > best.2 {
                best = (x, y, d);
                tied = false;
            } else if d == best.2 {
                tied = true;
            }
        }
    }
    if tied {
        return None;
    }
    let start = best.0.min(best.1);
    let mut seq = ids.to_vec();
    seq.sort_by(|&p, &q| {
        space
            .d(start, p)
            .total_cmp(&space.d(start, q))
            .then(p.cmp(&q))
    });
    if seq
        .windows(2)
        .any(|w| space.d(start, w[0]) == space.d(start, w[1]))
    {
        return None;
    }
    is_order(space, &seq).then_some(seq)
}

/// Searches the 24 labelings of a four-point set for the cyclic pattern.
pub fn cyclic_quadruple(space: &FiniteMetricSpace, ids: &[PointId]) -> Option<[PointId; 4]> {
    if ids.len() != 4 {
        return None;
    }
    const PERMS: [[usize; 4]; 24] = [
        [0, 1, 2, 3], [0, 1, 3, 2], [0, 2, 1, 3], [0, 2, 3, 1], [0, 3, 1, 2], [0, 3, 2, 1],
        [1, 0, 2, 3], [1, 0, 3, 2], [1, 2, 0, 3], [1, 2, 3, 0], [1, 3, 0, 2], [1, 3, 2, 0],
        [2, 0, 1, 3], [2, 0, 3, 1], [2, 1, 0, 3], [2, 1, 3, 0], [2, 3, 0, 1], [2, 3, 1, 0],
        [3, 0, 1, 2], [3, 0, 2, 1], [3, 1, 0, 2], [3, 1, 2, 0], [3, 2, 0, 1], [3, 2, 1, 0],
    ];
    PERMS.iter().find_map(|p| {
        let v = [ids[p[0]], ids[p[1]], ids[p[2]], ids[p[3]]];
        let cyclic = (0..4).all(|i| is_between(space, v[i], v[(i + 1) % 4], v[(i + 2) % 4]));
        cyclic.then_some(v)
    })
}

/// Why a moving-lemma query does not apply.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Inapplicable {
    /// One of the two three-point sets is outside `Ω(φ)`.
    NotInOmega,
    /// The starting betweenness relation does not hold.
    NotBetween,
    /// The displacement is not small enough.
    DistanceTooLarge,
}

/// Outcome of a moving-lemma query.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum MoveOutcome {
    Inapplicable { reason: Inapplicable },
    /// Hypotheses hold; `conclusion` is the moved betweenness relation,
    /// which the lemma guarantees to be true.
    Applies { conclusion: bool },
}

fn omega_pair(
    space: &FiniteMetricSpace,
    base: [PointId; 2],
    z: PointId,
    z1: PointId,
    phi: f64,
) -> Result<bool> {
    let a = in_omega(space, &Subset::new(vec![base[0], base[1], z]), phi)?;
    let b = in_omega(space, &Subset::new(vec![base[0], base[1], z1]), phi)?;
    Ok(a.holds && b.holds)
}

/// Moving an outer point: if `xyz` and
/// `d(z,z1) < φ min{d(x,y), d(y,z) + d(y,z1)}` then `xyz1`.
pub fn moving_lemma_i(
    space: &FiniteMetricSpace,
    x: PointId,
    y: PointId,
    z: PointId,
    z1: PointId,
    phi: f64,
) -> Result<MoveOutcome> {
    for id in [x, y, z, z1] {
        space.distance(id, id)?;
    }
    if !omega_pair(space, [x, y], z, z1, phi)? {
        return Ok(MoveOutcome::Inapplicable {
            reason: Inapplicable::NotInOmega,
        });
    }
    if !is_between(space, x, y, z) {
        return Ok(MoveOutcome::Inapplicable {
            reason: Inapplicable::NotBetween,
        });
    }
    let bound = phi * space.d(x, y).min(space.d(y, z) + space.d(y, z1));
    if space.d(z, z1) >= bound {
        return Ok(MoveOutcome::Inapplicable {
            reason: Inapplicable::DistanceTooLarge,
        });
    }
    Ok(MoveOutcome::Applies {
        conclusion: is_between(space, x, y, z1),
    })
}

/// Moving the middle point: if `xzy` and
/// `d(z,z1) < φ min{d(z,x) + d(z1,x), d(z,y) + d(z1,y)}` then `xz1y`.
pub fn moving_lemma_ii(
    space: &FiniteMetricSpace,
    x: PointId,
    z: PointId,
    y: PointId,
    z1: PointId,
    phi: f64,
) -> Result<MoveOutcome> {
    for id in [x, y, z, z1] {
        space.distance(id, id)?;
    }
    if !omega_pair(space, [x, y], z, z1, phi)? {
        return Ok(MoveOutcome::Inapplicable {
            reason: Inapplicable::NotInOmega,
        });
    }
    if !is_between(space, x, z, y) {
        return Ok(MoveOutcome::Inapplicable {
            reason: Inapplicable::NotBetween,
        });
    }
    let bound = phi
        * (space.d(z, x) + space.d(z1, x)).min(space.d(z, y) + space.d(z1, y));
    if space.d(z, z1) >= bound {
        return Ok(MoveOutcome::Inapplicable {
            reason: Inapplicable::DistanceTooLarge,
        });
    }
    Ok(MoveOutcome::Applies {
        conclusion: is_between(space, x, z1, y),
    })
}
