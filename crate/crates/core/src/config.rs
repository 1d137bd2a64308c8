//! JSON experiment configuration and its schema.

use std::fmt;
use std::path::{Path, PathBuf};

use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use crate::calderon::{CaseTag, FactorizationParams};
use crate::exponents::{build_exponent, ExponentField, Recipe, Role};
use crate::grid::Grid;

/// Which experiment `run` executes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Norms,
    FactorizePp,
    FactorizePqInfty,
    Holder,
    Roundtrip,
    LebesgueInterp,
    InterRest,
    Suite,
}

impl ExperimentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::Norms => "norms",
            ExperimentKind::FactorizePp => "factorize-pp",
            ExperimentKind::FactorizePqInfty => "factorize-pq-infty",
            ExperimentKind::Holder => "holder",
            ExperimentKind::Roundtrip => "roundtrip",
            ExperimentKind::LebesgueInterp => "lebesgue-interp",
            ExperimentKind::InterRest => "inter-rest",
            ExperimentKind::Suite => "suite",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct GridSpec {
    /// Dimension, 1 or 2.
    pub n: usize,
    /// Half side `L` of the periodic box `[0, 2L)^n`.
    pub half_extent: f64,
    /// Points per axis, a power of two.
    pub points: usize,
    /// Finest dyadic level used; defaults to `min(V_max, 4)`.
    #[serde(default)]
    pub levels: Option<u32>,
}

impl GridSpec {
    pub fn build(&self) -> crate::error::Result<Grid<f64>> {
        Grid::new(self.n, self.half_extent, self.points)
    }

    pub fn max_level(&self, grid: &Grid<f64>) -> u32 {
        self.levels.unwrap_or_else(|| grid.finest_level().min(4))
    }
}

fn constant(value: f64) -> Recipe {
    Recipe::Constant { value }
}

/// Recipes of the two endpoint couples. `p1: null` stands for `p1 = inf`;
/// a missing `q0` or `q1` means `q = p` on that endpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "kebab-case", deny_unknown_fields, default)]
pub struct ExponentRecipes {
    pub p0: Recipe,
    pub p1: Option<Recipe>,
    pub q0: Option<Recipe>,
    pub q1: Option<Recipe>,
    pub alpha0: Recipe,
    pub alpha1: Recipe,
}

impl Default for ExponentRecipes {
    fn default() -> Self {
        Self {
            p0: constant(2.0),
            p1: Some(constant(3.0)),
            q0: None,
            q1: None,
            alpha0: constant(0.0),
            alpha1: constant(0.0),
        }
    }
}

/// Sampled endpoint fields; `p1 = None` is the infinite endpoint.
#[derive(Debug, Clone)]
pub struct EndpointFields {
    pub p0: ExponentField<f64>,
    pub p1: Option<ExponentField<f64>>,
    pub q0: ExponentField<f64>,
    pub q1: Option<ExponentField<f64>>,
    pub alpha0: ExponentField<f64>,
    pub alpha1: ExponentField<f64>,
}

impl ExponentRecipes {
    pub fn build(&self, grid: &Grid<f64>) -> crate::error::Result<EndpointFields> {
        let int = |r: &Recipe| build_exponent(r, grid, Role::Integrability);
        let p0 = int(&self.p0)?;
        let p1 = self.p1.as_ref().map(int).transpose()?;
        let q0 = match &self.q0 {
            Some(r) => int(r)?,
            None => p0.clone(),
        };
        let q1 = match &self.q1 {
            Some(r) => Some(int(r)?),
            None => p1.clone(),
        };
        Ok(EndpointFields {
            p0,
            p1,
            q0,
            q1,
            alpha0: build_exponent(&self.alpha0, grid, Role::Smoothness)?,
            alpha1: build_exponent(&self.alpha1, grid, Role::Smoothness)?,
        })
    }

    /// The couple at `theta`.
    pub fn params(&self, grid: &Grid<f64>, theta: f64) -> crate::error::Result<FactorizationParams<f64>> {
        let f = self.build(grid)?;
        let q1 = f.q1.ok_or_else(|| crate::error::Error::InvalidConfiguration("q1 is required when p1 is infinite".into()))?;
        FactorizationParams::general(theta, f.p0, f.p1, f.q0, q1, f.alpha0, f.alpha1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct CorpusSpec {
    /// Seed of every random draw in the experiment.
    pub seed: u64,
    /// Number of corpus items.
    #[serde(default = "default_count")]
    pub count: usize,
    /// Nonzero coefficients per coefficient set.
    #[serde(default = "default_coefficients")]
    pub coefficients: usize,
    /// Regions per simple function.
    #[serde(default = "default_regions")]
    pub regions: usize,
    /// Fourier modes per band-limited function.
    #[serde(default = "default_modes")]
    pub modes: usize,
}

fn default_count() -> usize {
    10
}
fn default_coefficients() -> usize {
    64
}
fn default_regions() -> usize {
    3
}
fn default_modes() -> usize {
    6
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "kebab-case", deny_unknown_fields, default)]
pub struct Tolerances {
    /// Relative accuracy of every norm solve.
    pub norm: f64,
    /// Relative slack allowed in exact identities.
    pub contract: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            norm: 1e-12,
            contract: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "kebab-case", deny_unknown_fields, default)]
pub struct OutputSpec {
    /// Report directory, relative paths resolved against the config file.
    pub dir: PathBuf,
    /// File stem of `<stem>.csv` and `<stem>.json`; defaults to the experiment kind.
    pub stem: Option<String>,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("vexint-out"),
            stem: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "kebab-case", deny_unknown_fields, default)]
pub struct HolderSpec {
    /// Multiplies the first factor before the check; values below 1 break
    /// the pointwise domination.
    pub corrupt_factors: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub grid: GridSpec,
    #[serde(default)]
    pub exponents: ExponentRecipes,
    #[serde(default = "default_theta")]
    pub theta: Vec<f64>,
    pub corpus: CorpusSpec,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub output: OutputSpec,
    #[serde(default)]
    pub holder: HolderSpec,
}

fn default_theta() -> Vec<f64> {
    vec![0.5]
}

/// Schema or validation failure, reported with the offending field.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub field: String,
    pub line: Option<usize>,
    pub column: Option<usize>,
    pub message: String,
}

impl ConfigError {
    fn at(field: &str, message: impl Into<String>) -> Self {
        Self {
            field: field.to_string(),
            line: None,
            column: None,
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.line, self.column) {
            (Some(l), Some(c)) => write!(f, "line {l}, column {c}: field `{}`: {}", self.field, self.message),
            _ => write!(f, "field `{}`: {}", self.field, self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            ConfigError {
                field: if path == "." { "<root>".into() } else { path },
                line: Some(inner.line()),
                column: Some(inner.column()),
                message: inner.to_string(),
            }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::at("<file>", format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Checks everything the schema cannot express.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let grid = self.grid.build().map_err(|e| ConfigError::at("grid", e.to_string()))?;
        if let Some(v) = self.grid.levels {
            if v > grid.finest_level() {
                return Err(ConfigError::at(
                    "grid.levels",
                    format!("level {v} exceeds the finest resolvable level {}", grid.finest_level()),
                ));
            }
        }
        let fields = self.exponents.build(&grid).map_err(|e| ConfigError::at("exponents", e.to_string()))?;
        if self.theta.is_empty() {
            return Err(ConfigError::at("theta", "at least one value is required"));
        }
        if let Some(t) = self.theta.iter().find(|t| !(**t > 0.0 && **t < 1.0)) {
            return Err(ConfigError::at("theta", format!("values must lie in (0, 1), got {t}")));
        }
        if self.corpus.count == 0 {
            return Err(ConfigError::at("corpus.count", "must be positive"));
        }
        if self.corpus.coefficients == 0 {
            return Err(ConfigError::at("corpus.coefficients", "must be positive"));
        }
        if self.corpus.regions == 0 || 2 * self.corpus.regions > grid.points_per_axis() {
            return Err(ConfigError::at("corpus.regions", "must be positive and at most half the points per axis"));
        }
        if self.corpus.modes == 0 {
            return Err(ConfigError::at("corpus.modes", "must be positive"));
        }
        for (name, v) in [("tolerances.norm", self.tolerances.norm), ("tolerances.contract", self.tolerances.contract)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(ConfigError::at(name, format!("must lie in (0, 1), got {v}")));
            }
        }
        if let Some(c) = self.holder.corrupt_factors {
            if !(c > 0.0 && c.is_finite()) {
                return Err(ConfigError::at("holder.corrupt-factors", "must be positive and finite"));
            }
        }
        let needs_q_constant = matches!(self.experiment, ExperimentKind::FactorizePqInfty)
            || (self.experiment == ExperimentKind::Holder && fields.p1.is_none());
        if fields.p1.is_none() || needs_q_constant {
            let Some(q1) = &fields.q1 else {
                return Err(ConfigError::at("exponents.q1", "required when p1 is infinite"));
            };
            if !fields.q0.is_constant() || !q1.is_constant() {
                return Err(ConfigError::at("exponents", "the level-set construction needs constant q0 and q1"));
            }
        }
        let wanted = match self.experiment {
            ExperimentKind::FactorizePp => Some(CaseTag::CaseI),
            ExperimentKind::FactorizePqInfty => Some(CaseTag::CaseII),
            _ => None,
        };
        if matches!(self.experiment, ExperimentKind::FactorizePp | ExperimentKind::FactorizePqInfty | ExperimentKind::Holder) {
            for &t in &self.theta {
                let params = self.exponents.params(&grid, t).map_err(|e| ConfigError::at("exponents", e.to_string()))?;
                let case = params.case();
                if wanted.is_some_and(|w| w != case) || case == CaseTag::Unsupported {
                    return Err(ConfigError::at(
                        "exponents",
                        format!("couple at theta = {t} is {}, not supported by {}", case.as_str(), self.experiment.as_str()),
                    ));
                }
            }
        }
        if matches!(self.experiment, ExperimentKind::LebesgueInterp | ExperimentKind::InterRest) && fields.p1.is_none() {
            return Err(ConfigError::at("exponents.p1", "this experiment needs a finite p1"));
        }
        if self.experiment == ExperimentKind::InterRest {
            for (name, f) in [
                ("exponents.q0", Some(&fields.q0)),
                ("exponents.q1", fields.q1.as_ref()),
                ("exponents.alpha0", Some(&fields.alpha0)),
                ("exponents.alpha1", Some(&fields.alpha1)),
            ] {
                if f.is_some_and(|f| !f.is_constant()) {
                    return Err(ConfigError::at(name, "must be constant for inter-rest"));
                }
            }
        }
        Ok(())
    }

    /// Report stem, defaulting to the experiment kind.
    pub fn stem(&self) -> String {
        self.output.stem.clone().unwrap_or_else(|| self.experiment.as_str().to_string())
    }
}

/// JSON schema of [`ExperimentConfig`].
pub fn schema() -> serde_json::Value {
    serde_json::to_value(schemars::schema_for!(ExperimentConfig)).expect("schema serializes")
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "experiment": "factorize-pp",
        "grid": {"n": 1, "half-extent": 2.0, "points": 128},
        "corpus": {"seed": 3}
    }"#;

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = ExperimentConfig::from_json(MINIMAL).unwrap();
        assert_eq!(cfg.theta, vec![0.5]);
        assert_eq!(cfg.corpus.count, 10);
        assert_eq!(cfg.exponents.p1, Some(Recipe::Constant { value: 3.0 }));
        assert_eq!(cfg.stem(), "factorize-pp");
    }

    #[test]
    fn missing_seed_names_the_field() {
        let text = MINIMAL.replace(r#""seed": 3"#, r#""count": 3"#);
        let err = ExperimentConfig::from_json(&text).unwrap_err();
        assert_eq!(err.field, "corpus");
        assert!(err.message.contains("seed"), "{err}");
        assert!(err.line.is_some());
    }

    #[test]
    fn unknown_fields_and_bad_recipes_are_rejected() {
        let text = MINIMAL.replace(r#""seed": 3"#, r#""seed": 3, "sed": 4"#);
        assert_eq!(ExperimentConfig::from_json(&text).unwrap_err().field, "corpus.sed");
        let text = MINIMAL.replace(
            r#""corpus""#,
            r#""exponents": {"p0": {"kind": "plateau-ramp", "left": 2, "right": 3, "width": 9}}, "corpus""#,
        );
        assert_eq!(ExperimentConfig::from_json(&text).unwrap_err().field, "exponents");
        let text = MINIMAL.replace(r#""corpus""#, r#""theta": [1.0], "corpus""#);
        assert_eq!(ExperimentConfig::from_json(&text).unwrap_err().field, "theta");
    }

    #[test]
    fn infinite_endpoint_needs_constant_q() {
        let text = MINIMAL.replace(r#""corpus""#, r#""exponents": {"p1": null}, "corpus""#);
        assert_eq!(ExperimentConfig::from_json(&text).unwrap_err().field, "exponents.q1");
        let text = MINIMAL.replace("factorize-pp", "factorize-pq-infty").replace(
            r#""corpus""#,
            r#""exponents": {"p1": null, "q0": {"kind": "constant", "value": 2}, "q1": {"kind": "constant", "value": 4}}, "corpus""#,
        );
        let cfg = ExperimentConfig::from_json(&text).unwrap();
        let pp = text.replace("factorize-pq-infty", "factorize-pp");
        assert!(ExperimentConfig::from_json(&pp).unwrap_err().message.contains("case-ii"));
        let grid = cfg.grid.build().unwrap();
        assert!(cfg.exponents.params(&grid, 0.5).unwrap().is_infinite_endpoint());
    }

    #[test]
    fn schema_lists_every_kind() {
        let s = schema().to_string();
        for kind in ["norms", "factorize-pq-infty", "lebesgue-interp", "inter-rest", "suite", "sine-perturbation"] {
            assert!(s.contains(kind), "{kind}");
        }
    }
}
