//! Synthetic inputs with known structure: curve samples with small
//! curvature and fractal or snowflaked sets with large curvature.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::{FiniteMetricSpace, Measure};

/// A metric space with its measure.
#[derive(Clone, Debug)]
pub struct Dataset {
    pub space: FiniteMetricSpace,
    pub measure: Measure,
}

/// How sample weights are assigned.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    /// Half the distance to each neighbour along the sample order.
    #[default]
    ArcLength,
    /// Total arc length spread evenly.
    Uniform,
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Weights for points sampled in order along a curve, from the gaps
/// between consecutive samples.
fn path_weights(space: &FiniteMetricSpace, weighting: Weighting) -> Result<Measure> {
    let n = space.len();
    let ids: Vec<_> = space.ids().collect();
    let gaps: Vec<f64> = ids.windows(2).map(|w| space.d(w[0], w[1])).collect();
    let weights = match weighting {
        Weighting::ArcLength => (0..n)
            .map(|i| {
                let left = if i > 0 { gaps[i - 1] } else { 0.0 };
                let right = gaps.get(i).copied().unwrap_or(0.0);
                (left + right) / 2.0
            })
            .collect(),
        Weighting::Uniform => vec![gaps.iter().sum::<f64>() / n as f64; n],
    };
    Measure::new(weights)
}

fn check_count(n: usize, min: usize) -> Result<()> {
    if n < min {
        return Err(Error::InvalidArgument(format!("need at least {min} points, got {n}")));
    }
    Ok(())
}

/// `n` evenly spaced points on `[0, 1] × {0}`, each moved vertically by at
/// most `jitter`.
pub fn gen_segment(n: usize, jitter: f64, seed: u64) -> Result<Dataset> {
    gen_segment_with(n, jitter, seed, Weighting::ArcLength)
}

pub fn gen_segment_with(n: usize, jitter: f64, seed: u64, weighting: Weighting) -> Result<Dataset> {
    check_count(n, 2)?;
    if !(jitter >= 0.0 && jitter.is_finite()) {
        return Err(Error::InvalidArgument(format!("jitter = {jitter} must be nonnegative")));
    }
    let mut r = rng(seed);
    let coords = (0..n)
        .map(|i| {
            let y = if jitter > 0.0 { r.random_range(-jitter..=jitter) } else { 0.0 };
            vec![i as f64 / (n - 1) as f64, y]
        })
        .collect();
    let space = FiniteMetricSpace::from_coordinates(coords)?;
    let measure = path_weights(&space, weighting)?;
    Ok(Dataset { space, measure })
}

/// `n` equally spaced points on the circle of the given radius, each
/// carrying an equal share of the circumference.
pub fn gen_circle(n: usize, radius: f64) -> Result<Dataset> {
    check_count(n, 3)?;
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::InvalidArgument(format!("radius = {radius} must be positive")));
    }
    let coords = (0..n)
        .map(|i| {
            let t = std::f64::consts::TAU * i as f64 / n as f64;
            vec![radius * t.cos(), radius * t.sin()]
        })
        .collect();
    let space = FiniteMetricSpace::from_coordinates(coords)?;
    let measure = Measure::uniform(n, std::f64::consts::TAU * radius / n as f64)?;
    Ok(Dataset { space, measure })
}

/// Centers of the `4^g` squares of generation `g` of the four-corner Cantor
/// construction in the unit square, weight `4^-g` each.
pub fn gen_cantor4(g: u32) -> Result<Dataset> {
    if g > 8 {
        return Err(Error::InvalidArgument(format!("generation {g} is too large")));
    }
    let mut cells = vec![(0.0f64, 0.0f64)];
    let mut side = 1.0f64;
    for _ in 0..g {
        let child = side / 4.0;
        let mut next = Vec::with_capacity(cells.len() * 4);
        for &(x, y) in &cells {
            for (dx, dy) in [(0.0, 0.0), (3.0, 0.0), (0.0, 3.0), (3.0, 3.0)] {
                next.push((x + dx * child, y + dy * child));
            }
        }
        cells = next;
        side = child;
    }
    let coords = cells
        .iter()
        .map(|&(x, y)| vec![x + side / 2.0, y + side / 2.0])
        .collect();
    let space = FiniteMetricSpace::from_coordinates(coords)?;
    let count = cells.len();
    let measure = Measure::uniform(count, 1.0 / count as f64)?;
    Ok(Dataset { space, measure })
}

/// Graph of a random piecewise linear function on `[0, 1]` with slopes in
/// `[-slope, slope]`, sampled at `n` evenly spaced abscissae.
pub fn gen_lipschitz_graph(n: usize, slope: f64, seed: u64) -> Result<Dataset> {
    check_count(n, 2)?;
    if !(slope >= 0.0 && slope.is_finite()) {
        return Err(Error::InvalidArgument(format!("slope = {slope} must be nonnegative")));
    }
    const PIECES: usize = 8;
    let mut r = rng(seed);
    let slopes: Vec<f64> = (0..PIECES)
        .map(|_| if slope > 0.0 { r.random_range(-slope..=slope) } else { 0.0 })
        .collect();
    let f = |x: f64| {
        let mut y = 0.0;
        for (k, s) in slopes.iter().enumerate() {
            let a = k as f64 / PIECES as f64;
            let b = (k + 1) as f64 / PIECES as f64;
            y += s * (x.min(b) - a).max(0.0);
        }
        y
    };
    let coords = (0..n)
        .map(|i| {
            let x = i as f64 / (n - 1) as f64;
            vec![x, f(x)]
        })
        .collect();
    let space = FiniteMetricSpace::from_coordinates(coords)?;
    let measure = path_weights(&space, Weighting::ArcLength)?;
    Ok(Dataset { space, measure })
}

/// `n` evenly spaced points of `[0, 1]` under the metric `|x - y|^s`.
pub fn gen_snowflake(n: usize, s: f64) -> Result<Dataset> {
    check_count(n, 2)?;
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::InvalidArgument(format!("exponent s = {s} must lie in (0, 1)")));
    }
    let xs: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
    let matrix = xs
        .iter()
        .map(|a| xs.iter().map(|b| (a - b).abs().powf(s)).collect())
        .collect();
    let space = FiniteMetricSpace::from_matrix(matrix)?;
    let measure = path_weights(&space, Weighting::ArcLength)?;
    Ok(Dataset { space, measure })
}
