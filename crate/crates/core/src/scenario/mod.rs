//! Scenario files, coefficient families and the staged experiment runner.

mod families;
mod run;

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use families::{generate_coefficients, FamilySpec, FAMILIES, LAMBDA};
pub use run::{run, CheckResult, DecayOutcome, Environment, ObliqueOutcome, Outcome, Report, RunOptions, SolveOutcome};

use crate::error::{Error, Result};
use crate::geometry::{BoundaryShape, GraphDomain};
use crate::harness::ExcessMode;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema_version: u32,
    pub name: String,
    /// Seed of the pair sampler; solves are deterministic.
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "flat_domain")]
    pub domain: BoundaryShape,
    #[serde(default)]
    pub coefficients: FamilySpec,
    #[serde(default)]
    pub data: DataSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oblique: Option<ObliqueSpec>,
    /// Cells across the solve box, strictly increasing; the last grid feeds the harness.
    #[serde(default)]
    pub grids: Vec<usize>,
    #[serde(default)]
    pub harness: HarnessSpec,
    #[serde(default)]
    pub pipeline: Vec<Stage>,
    #[serde(default)]
    pub checks: Vec<Check>,
}

fn flat_domain() -> BoundaryShape {
    BoundaryShape::Flat
}

/// Divergence-form data beyond the manufactured solution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct DataSpec {
    /// Profile of the normal component of `g⃗` in the normal variable.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<FamilySpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObliqueSpec {
    #[serde(default)]
    pub beta0: f64,
    /// Constant oblique vector.
    pub direction: [f64; 2],
    pub mu0: f64,
    #[serde(default)]
    pub x0: f64,
    #[serde(default = "ObliqueSpec::default_radius")]
    pub radius: f64,
    #[serde(default = "ObliqueSpec::default_lift")]
    pub lift_height: f64,
    #[serde(default = "ObliqueSpec::default_s")]
    pub s: f64,
    #[serde(default = "ObliqueSpec::default_cells")]
    pub cells: usize,
}

impl ObliqueSpec {
    fn default_radius() -> f64 {
        0.5
    }
    fn default_lift() -> f64 {
        0.4
    }
    fn default_s() -> f64 {
        0.4
    }
    fn default_cells() -> usize {
        32
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HarnessSpec {
    pub mode: ExcessMode,
    pub p: f64,
    pub kappa: f64,
    /// Fixed `β`; chosen from the fitted contraction when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    pub centers: Vec<[f64; 2]>,
    /// Largest decay radius.
    pub r0: f64,
    pub levels: usize,
    pub per_step: usize,
    pub pairs: usize,
    pub bins: usize,
    pub c_max: f64,
}

impl Default for HarnessSpec {
    fn default() -> Self {
        Self {
            mode: ExcessMode::Gradient,
            p: 0.5,
            kappa: 0.25,
            beta: None,
            centers: vec![[0.0, 0.0]],
            r0: 0.5,
            levels: 4,
            per_step: 2,
            pairs: 2000,
            bins: 8,
            c_max: 100.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    /// Conormal solve of the manufactured problem on every grid.
    Solve,
    /// Excess tables and iteration fits at the harness centres.
    Decay,
    /// Assembled modulus bound against sampled pairs.
    Bound,
    /// Reduction of the oblique problem to Neumann data.
    Oblique,
    /// Global second-derivative assembly on the reduced problem.
    Global,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Solve => "solve",
            Stage::Decay => "decay",
            Stage::Bound => "bound",
            Stage::Oblique => "oblique",
            Stage::Global => "global",
        }
    }

    fn requires(self) -> Option<Stage> {
        match self {
            Stage::Decay | Stage::Bound => Some(Stage::Solve),
            Stage::Global => Some(Stage::Oblique),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "check", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Check {
    /// Largest nodal error on the finest grid, up to the free constant.
    SolveError { max: f64 },
    /// Every excess table reaches the grid floor.
    DecayFloor,
    /// Every fitted exponent lies in `[min, max]`.
    DecayExponent { min: f64, max: f64 },
    /// One constant covers the pairs and the assembled bound vanishes.
    BoundCovers,
    /// Largest normal derivative on the flat trace after reduction.
    TraceBelow { max: f64 },
    /// The global bound is finite and dominates the measured seminorm.
    GlobalDominates,
}

impl Check {
    pub fn name(&self) -> &'static str {
        match self {
            Check::SolveError { .. } => "solve-error",
            Check::DecayFloor => "decay-floor",
            Check::DecayExponent { .. } => "decay-exponent",
            Check::BoundCovers => "bound-covers",
            Check::TraceBelow { .. } => "trace-below",
            Check::GlobalDominates => "global-dominates",
        }
    }

    fn stage(&self) -> Stage {
        match self {
            Check::SolveError { .. } => Stage::Solve,
            Check::DecayFloor | Check::DecayExponent { .. } => Stage::Decay,
            Check::BoundCovers => Stage::Bound,
            Check::TraceBelow { .. } => Stage::Oblique,
            Check::GlobalDominates => Stage::Global,
        }
    }
}

impl Scenario {
    /// Empty scenario: no stages, no checks.
    pub fn empty(name: &str) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            name: name.into(),
            seed: 0,
            domain: BoundaryShape::Flat,
            coefficients: FamilySpec::Constant,
            data: DataSpec::default(),
            oblique: None,
            grids: Vec::new(),
            harness: HarnessSpec::default(),
            pipeline: Vec::new(),
            checks: Vec::new(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let s: Scenario = serde_json::from_str(text).map_err(|e| Error::param(format!("scenario JSON: {e}")))?;
        s.validate()?;
        Ok(s)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let s: Scenario = toml::from_str(text).map_err(|e| Error::param(format!("scenario TOML: {e}")))?;
        s.validate()?;
        Ok(s)
    }

    /// Reads `.toml` files as TOML and everything else as JSON.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        match path.extension().and_then(|e| e.to_str()) {
            Some("toml") => Self::from_toml(&text),
            _ => Self::from_json(&text),
        }
    }

    /// Pretty JSON with every default spelled out.
    pub fn canonical(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    /// SHA-256 of the canonical form.
    pub fn hash(&self) -> String {
        Sha256::digest(self.canonical().as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::param(format!("schema version {} is not supported (expected {SCHEMA_VERSION})", self.schema_version)));
        }
        let name_ok = !self.name.is_empty() && self.name.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_');
        if !name_ok {
            return Err(Error::param(format!("scenario name {:?} must be a nonempty [A-Za-z0-9_-] word", self.name)));
        }
        GraphDomain::new(self.domain, 2.0)?;
        self.coefficients.validate()?;
        if let Some(g) = &self.data.g {
            g.validate()?;
        }
        if self.grids.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::param("grid sizes must be strictly increasing"));
        }
        if self.grids.iter().any(|&n| n < 8 || n % 2 == 1) {
            return Err(Error::param("grid sizes must be even and at least 8"));
        }
        let h = &self.harness;
        if !(h.p > 0.0 && h.p <= 1.0) || !(h.kappa > 0.0 && h.kappa < 0.5) {
            return Err(Error::param("harness needs p in (0, 1] and kappa in (0, 1/2)"));
        }
        if let Some(b) = h.beta {
            if !(b > 0.0 && b < 1.0) {
                return Err(Error::param(format!("beta = {b} outside (0, 1)")));
            }
        }
        if h.centers.iter().any(|c| c[0].abs() > 1.0 || c[1] < 0.0 || c[1] > 2.0) {
            return Err(Error::param("harness centres must lie in the solve box [-1, 1] x [0, 2]"));
        }
        if !(h.r0 > 0.0 && h.r0 <= 1.0) || h.levels < 2 || h.per_step == 0 || h.pairs == 0 || h.bins == 0 {
            return Err(Error::param("harness radii, pairs and bins must be positive"));
        }
        let mut seen = std::collections::BTreeSet::new();
        for st in &self.pipeline {
            if !seen.insert(*st) {
                return Err(Error::param(format!("stage {} listed twice", st.name())));
            }
            if let Some(dep) = st.requires() {
                if !self.pipeline.contains(&dep) {
                    return Err(Error::param(format!("stage {} needs stage {}", st.name(), dep.name())));
                }
            }
        }
        if self.pipeline.contains(&Stage::Solve) {
            if self.grids.is_empty() {
                return Err(Error::param("stage solve needs at least one grid"));
            }
            if self.domain != BoundaryShape::Flat {
                return Err(Error::param("stage solve runs on the flat box; curved boundaries go through stage oblique"));
            }
        }
        if self.pipeline.contains(&Stage::Oblique) {
            let o = self.oblique.as_ref().ok_or_else(|| Error::param("stage oblique needs an oblique block"))?;
            if !(o.mu0 > 0.0 && o.mu0 <= 1.0) || o.cells < 4 || !(o.radius > 0.0 && o.s > 0.0 && o.lift_height > 0.0) {
                return Err(Error::param("oblique block needs mu0 in (0, 1], positive sizes and at least 4 cells"));
            }
        }
        for c in &self.checks {
            if !self.pipeline.contains(&c.stage()) {
                return Err(Error::param(format!("check {} needs stage {}", c.name(), c.stage().name())));
            }
        }
        Ok(())
    }
}

/// Scenarios shipped with the crate, as `(name, JSON)`.
pub const BUNDLED: [(&str, &str); 4] = [
    ("flat-laplace", include_str!("../../scenarios/flat-laplace.json")),
    ("holder-decay", include_str!("../../scenarios/holder-decay.json")),
    ("dini-log-bound", include_str!("../../scenarios/dini-log-bound.json")),
    ("tilted-parabolic", include_str!("../../scenarios/tilted-parabolic.json")),
];

pub fn bundled(name: &str) -> Option<Scenario> {
    BUNDLED.iter().find(|(n, _)| *n == name).map(|(_, text)| Scenario::from_json(text).expect("bundled scenario is valid"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_scenarios_parse_and_round_trip() {
        for (name, text) in BUNDLED {
            let s = Scenario::from_json(text).unwrap();
            assert_eq!(s.name, name);
            assert_eq!(Scenario::from_json(&s.canonical()).unwrap(), s);
        }
    }

    #[test]
    fn toml_and_json_agree() {
        let toml = r#"
            schema_version = 1
            name = "t"
            grids = [16, 32]
            pipeline = ["solve"]
            [coefficients]
            family = "holder"
            alpha = 0.5
            amplitude = 0.2
            [[checks]]
            check = "solve-error"
            max = 0.01
        "#;
        let json = r#"{"schema_version": 1, "name": "t", "grids": [16, 32], "pipeline": ["solve"],
            "coefficients": {"family": "holder", "alpha": 0.5, "amplitude": 0.2},
            "checks": [{"check": "solve-error", "max": 0.01}]}"#;
        let (a, b) = (Scenario::from_toml(toml).unwrap(), Scenario::from_json(json).unwrap());
        assert_eq!(a, b);
        assert_eq!(a.hash(), b.hash());
    }

    #[test]
    fn invalid_scenarios() {
        let base = Scenario::empty("x");
        let bad = |f: &dyn Fn(&mut Scenario)| {
            let mut s = base.clone();
            f(&mut s);
            s.validate().is_err()
        };
        assert!(bad(&|s| s.schema_version = 2));
        assert!(bad(&|s| s.grids = vec![32, 16]));
        assert!(bad(&|s| s.coefficients = FamilySpec::Holder { alpha: 1.5, amplitude: 0.1 }));
        assert!(bad(&|s| s.pipeline = vec![Stage::Decay]));
        assert!(bad(&|s| s.checks = vec![Check::DecayFloor]));
        assert!(bad(&|s| s.pipeline = vec![Stage::Oblique]));
        assert!(bad(&|s| s.name = "a/b".into()));
        assert!(base.validate().is_ok());
        assert!(Scenario::from_json(r#"{"schema_version": 1, "name": "x", "extra": 1}"#).is_err());
    }
}
