//! Scenario files: TOML schema, validation and the canonical digest.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    pub geometry: GeometrySpec,
    #[serde(default)]
    pub system: SystemSpec,
    pub boundary: BoundaryPair,
    #[serde(default)]
    pub data: DataSpec,
    pub solver: SolverSpec,
    #[serde(default)]
    pub verify: VerifySpec,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeometryKindSpec {
    HalfMinkowski,
    DiagonalMetric,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySpec {
    #[serde(default = "half_minkowski")]
    pub kind: GeometryKindSpec,
    #[serde(default = "one")]
    pub dim: usize,
    #[serde(default)]
    pub boundary_speed: f64,
    pub time_horizon: f64,
    pub length: f64,
    pub lapse_expr: Option<String>,
    pub spatial_factor_expr: Option<String>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    pub lambda: Option<f64>,
    /// Pick the smallest λ with `κ ≥ margin` instead of a fixed value.
    pub margin: Option<f64>,
    #[serde(default)]
    pub mass: f64,
    #[serde(default)]
    pub potential: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundaryPair {
    pub left: BoundarySpec,
    pub right: BoundarySpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryKindSpec {
    Mit,
    Chirality,
    Matrix,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundarySpec {
    pub kind: BoundaryKindSpec,
    /// Rows of complex literals; `M` for `matrix`, the chirality operator for
    /// `chirality` (the volume element when omitted).
    pub matrix: Option<Vec<Vec<String>>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceForm {
    /// `source_expr` is the right-hand side of the gauged system.
    #[default]
    System,
    /// `source_expr` is `f` in `Dψ = f`.
    Dirac,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSpec {
    pub initial_expr: Option<Vec<String>>,
    pub source_expr: Option<Vec<String>>,
    #[serde(default)]
    pub source_form: SourceForm,
    #[serde(default)]
    pub initial_support: Vec<[f64; 2]>,
    #[serde(default)]
    pub source_support: Vec<BoxSpec>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxSpec {
    pub t: [f64; 2],
    pub z: [f64; 2],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    pub nz: usize,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    /// Final time; defaults to the geometry horizon.
    #[serde(rename = "T")]
    pub horizon: Option<f64>,
    #[serde(default = "default_support_eps")]
    pub support_eps: f64,
    #[serde(default = "one")]
    pub snapshot_every: usize,
    #[serde(default)]
    pub plant_speed_violation: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateName {
    Energy,
    Speed,
    Reflection,
    Uniqueness,
    Weak,
    Compatibility,
    Green,
    Convergence,
}

impl CertificateName {
    pub const ALL: [CertificateName; 8] = [
        Self::Energy,
        Self::Speed,
        Self::Reflection,
        Self::Uniqueness,
        Self::Weak,
        Self::Compatibility,
        Self::Green,
        Self::Convergence,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Energy => "energy",
            Self::Speed => "speed",
            Self::Reflection => "reflection",
            Self::Uniqueness => "uniqueness",
            Self::Weak => "weak",
            Self::Compatibility => "compatibility",
            Self::Green => "green",
            Self::Convergence => "convergence",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.as_str() == s)
    }

    /// Whether the certificate consumes the main trajectory.
    pub fn needs_solve(self) -> bool {
        matches!(self, Self::Energy | Self::Speed | Self::Reflection | Self::Weak)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySpec {
    #[serde(default)]
    pub certificates: Vec<CertificateName>,
    #[serde(default = "default_resolutions")]
    pub resolutions: Vec<usize>,
    #[serde(default = "default_test_fields")]
    pub test_fields: usize,
    /// Strip norm of the source perturbation; zero asks for bitwise determinism.
    #[serde(default = "default_delta")]
    pub delta: f64,
    pub perturbation_expr: Option<Vec<String>>,
    #[serde(default = "default_jet_order")]
    pub jet_order: usize,
    #[serde(default = "default_relative_tol")]
    pub energy_tol: f64,
    #[serde(default = "default_relative_tol")]
    pub uniqueness_tol: f64,
    /// Multiplies every tolerance and dilation.
    #[serde(default = "default_tol_scale")]
    pub tol_scale: f64,
}

impl Default for VerifySpec {
    fn default() -> Self {
        Self {
            certificates: Vec::new(),
            resolutions: default_resolutions(),
            test_fields: default_test_fields(),
            delta: default_delta(),
            perturbation_expr: None,
            jet_order: default_jet_order(),
            energy_tol: default_relative_tol(),
            uniqueness_tol: default_relative_tol(),
            tol_scale: default_tol_scale(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: Option<String>,
    /// Write every k-th stored snapshot as CSV (the last is always written); 0 disables.
    #[serde(default = "one")]
    pub csv_every: usize,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self { dir: None, csv_every: 1 }
    }
}

fn half_minkowski() -> GeometryKindSpec {
    GeometryKindSpec::HalfMinkowski
}
fn one() -> usize {
    1
}
fn default_cfl() -> f64 {
    dirac_core::solver::DEFAULT_CFL
}
fn default_support_eps() -> f64 {
    dirac_core::solver::SUPPORT_EPS
}
fn default_resolutions() -> Vec<usize> {
    vec![201, 401, 801]
}
fn default_test_fields() -> usize {
    16
}
fn default_delta() -> f64 {
    1e-3
}
fn default_jet_order() -> usize {
    3
}
fn default_relative_tol() -> f64 {
    0.02
}
fn default_tol_scale() -> f64 {
    1.0
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Schema(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Schema(e.to_string()))
    }

    pub fn horizon(&self) -> f64 {
        self.solver.horizon.unwrap_or(self.geometry.time_horizon)
    }

    /// Hex SHA-256 of the canonical JSON form; the output directory is excluded.
    pub fn digest(&self) -> String {
        let mut canonical = self.clone();
        canonical.output.dir = None;
        let json = serde_json::to_string(&canonical).expect("scenario serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    /// Checks that do not need the core library.
    pub fn check_schema(&self) -> Result<(), CliError> {
        let mut problems = Vec::new();
        let g = &self.geometry;
        if g.dim == 0 {
            problems.push("geometry.dim must be at least 1".to_string());
        }
        match g.kind {
            GeometryKindSpec::HalfMinkowski => {
                if g.lapse_expr.is_some() || g.spatial_factor_expr.is_some() {
                    problems.push("lapse_expr and spatial_factor_expr need kind = \"diagonal_metric\"".into());
                }
            }
            GeometryKindSpec::DiagonalMetric => {
                if g.boundary_speed != 0.0 {
                    problems.push("boundary_speed applies to half_minkowski geometries only".into());
                }
            }
        }
        if self.system.lambda.is_some() && self.system.margin.is_some() {
            problems.push("system: give either lambda or margin, not both".into());
        }
        let t = self.horizon();
        if !(t > 0.0) || t > g.time_horizon {
            problems.push(format!("solver.T = {t} must lie in (0, time_horizon = {}]", g.time_horizon));
        }
        if self.solver.snapshot_every == 0 {
            problems.push("solver.snapshot_every must be at least 1".into());
        }
        if !(self.solver.support_eps > 0.0 && self.solver.support_eps < 1.0) {
            problems.push("solver.support_eps must lie in (0, 1)".into());
        }
        for side in [&self.boundary.left, &self.boundary.right] {
            if side.kind == BoundaryKindSpec::Matrix && side.matrix.is_none() {
                problems.push("boundary kind \"matrix\" needs a matrix".into());
            }
            if side.kind == BoundaryKindSpec::Mit && side.matrix.is_some() {
                problems.push("boundary kind \"mit\" takes no matrix".into());
            }
        }
        for s in &self.data.initial_support {
            if !(s[0] <= s[1]) {
                problems.push(format!("initial_support [{}, {}] is empty", s[0], s[1]));
            }
        }
        for b in &self.data.source_support {
            if !(b.t[0] <= b.t[1] && b.z[0] <= b.z[1]) {
                problems.push("source_support box is empty".into());
            }
        }
        let v = &self.verify;
        if !(v.tol_scale > 0.0 && v.tol_scale.is_finite()) {
            problems.push(format!("tol_scale must be positive, got {}", v.tol_scale));
        }
        if !(v.energy_tol >= 0.0 && v.uniqueness_tol >= 0.0) {
            problems.push("tolerances must be non-negative".into());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(CliError::Schema(problems.join("; ")))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
        name = "m"
        [geometry]
        time_horizon = 1.0
        length = 2.0
        [boundary.left]
        kind = "mit"
        [boundary.right]
        kind = "mit"
        [solver]
        nz = 101
    "#;

    #[test]
    fn defaults_fill_in() {
        let s = Scenario::from_toml(MINIMAL).unwrap();
        assert_eq!(s.geometry.dim, 1);
        assert_eq!(s.horizon(), 1.0);
        assert_eq!(s.verify.resolutions, vec![201, 401, 801]);
        s.check_schema().unwrap();
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = MINIMAL.replace("nz = 101", "nz = 101\nnx = 3");
        assert!(matches!(Scenario::from_toml(&text), Err(CliError::Schema(_))));
    }

    #[test]
    fn digest_ignores_output_dir_only() {
        let a = Scenario::from_toml(MINIMAL).unwrap();
        let mut b = a.clone();
        b.output.dir = Some("elsewhere".into());
        assert_eq!(a.digest(), b.digest());
        b.seed = 7;
        assert_ne!(a.digest(), b.digest());
        assert_eq!(a.digest().len(), 64);
    }
}
