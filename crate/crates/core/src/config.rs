//! Construction constants and engineering knobs.
//!
//! Field names in files match the mathematical symbols (`N0`, `C1`, `M1`,
//! ...). Missing keys take their defaults.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which density set feeds the net at a stage.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DensityIndex {
    /// Stage `n` draws from the density set of index `n`.
    #[default]
    Current,
    /// Stage `n` draws from the density set of index `n - 1`.
    Previous,
}

/// When the edge hypotheses are checked during a transition.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckMode {
    Off,
    /// Once at the end of each phase (replacement, insertion, pruning).
    #[default]
    PhaseEnd,
    /// After every single step.
    EveryStep,
}

/// Radius scan used by the low-density coverage classifier.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RadiusScan {
    /// Dyadic fractions of the diameter plus the interval endpoints.
    #[default]
    Grid,
    /// Every breakpoint of the ball-mass step function.
    Exact,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    /// Depth of the density test and representative radius offset.
    #[serde(rename = "N0")]
    pub net_depth: i32,
    pub delta: f64,
    #[serde(rename = "C1")]
    pub c1: f64,
    pub theta: f64,
    pub phi1: f64,
    #[serde(rename = "M1")]
    pub m1: i32,
    #[serde(rename = "M2")]
    pub m2: i32,
    #[serde(rename = "N1")]
    pub n1: i32,
    #[serde(rename = "K")]
    pub k: f64,
    pub r1: f64,
    #[serde(rename = "R1")]
    pub big_r1: f64,
    pub eps0: f64,
    pub eps1: f64,
    pub tau0: f64,
    pub mu0: f64,
    #[serde(rename = "C0")]
    pub c0: f64,
    /// Finest scale; `None` derives it from the data resolution.
    pub n_max: Option<i32>,

    /// Sets up to this size are ordered by exhaustive search.
    pub b_exact: usize,
    pub density_index: DensityIndex,
    /// Relative tolerance under which two nearest-vertex distances tie.
    pub tie_tolerance: f64,
    pub hypothesis_checks: CheckMode,
    /// Near-straightness, comparability and long-edge cross checks.
    pub extended_checks: bool,
    pub coverage_scan: RadiusScan,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            net_depth: 5,
            delta: 0.01,
            c1: 32.0,
            theta: 0.29,
            phi1: 0.9,
            m1: 16,
            m2: 3,
            n1: 11,
            k: 10.0,
            r1: 1.0 / 16.0,
            big_r1: 8.0,
            eps0: 0.01,
            eps1: 10.0,
            tau0: 0.1,
            mu0: 0.5,
            c0: 4.0,
            n_max: None,
            b_exact: crate::ordering::DEFAULT_B_EXACT,
            density_index: DensityIndex::Current,
            tie_tolerance: 1e-12,
            hypothesis_checks: CheckMode::PhaseEnd,
            extended_checks: false,
            coverage_scan: RadiusScan::Grid,
        }
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} = {v} must be positive and finite")))
    }
}

impl Config {
    /// Checks the standing relations between the constants.
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.net_depth < 2 {
            return fail(format!("N0 = {} must be at least 2", self.net_depth));
        }
        positive("delta", self.delta)?;
        if !(self.c1 >= 32.0) || !self.c1.is_finite() {
            return fail(format!("C1 = {} must be at least 32", self.c1));
        }
        if !(self.theta > 0.25 && self.theta < 1.0 / 3.0) {
            return fail(format!("theta = {} must lie strictly between 1/4 and 1/3", self.theta));
        }
        if !(self.phi1 > 0.0 && self.phi1 < 1.0) {
            return fail(format!("phi1 = {} must lie in (0, 1)", self.phi1));
        }
        if self.n1 <= 10 {
            return fail(format!("N1 = {} must exceed 10", self.n1));
        }
        if self.m1 < 9 {
            return fail(format!("M1 = {} must be at least 9", self.m1));
        }
        if self.m2 < 0 {
            return fail(format!("M2 = {} must be nonnegative", self.m2));
        }
        if self.m1 < self.n1 + self.m2 + 2 {
            return fail(format!(
                "M1 = {} must be at least N1 + M2 + 2 = {}",
                self.m1,
                self.n1 + self.m2 + 2
            ));
        }
        if !(self.k >= 1.0) || !self.k.is_finite() {
            return fail(format!("K = {} must be finite and at least 1", self.k));
        }
        positive("r1", self.r1)?;
        positive("R1", self.big_r1)?;
        if self.r1 >= self.big_r1 {
            return fail(format!("r1 = {} must be below R1 = {}", self.r1, self.big_r1));
        }
        for (name, v) in [
            ("eps0", self.eps0),
            ("tau0", self.tau0),
            ("mu0", self.mu0),
            ("C0", self.c0),
        ] {
            positive(name, v)?;
        }
        if !(self.eps1 > 0.0) {
            return fail(format!("eps1 = {} must be positive", self.eps1));
        }
        if !(self.tie_tolerance >= 0.0) {
            return fail(format!("tie_tolerance = {} must be nonnegative", self.tie_tolerance));
        }
        if self.b_exact > 12 {
            return fail(format!("b_exact = {} is too large for exhaustive search", self.b_exact));
        }
        Ok(())
    }

    /// Comparability constant of the representative neighbourhoods.
    pub fn q1(&self) -> f64 {
        let s = 2f64.powi(-self.net_depth + 2);
        self.theta / (self.theta - s)
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let c: Config = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let c: Config = serde_json::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    /// Reads a `.json` file as JSON and anything else as `key = value` TOML.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
            Self::from_json_str(&text)
        } else {
            Self::from_toml_str(&text)
        }
    }
}
