//! Experiment configuration: one JSON document per run.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sublinear::gexp::{DProcess, VolSpec};
use sublinear::Node;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Tower,
    Esssup,
    OptionalSampling,
    AssumptionCheck,
    Gexp,
    RandomGexp,
    #[serde(rename = "example_5_1")]
    Example51,
    #[serde(rename = "example_5_2")]
    Example52,
    VolEstimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeConfig {
    #[serde(rename = "K")]
    pub num_steps: usize,
    pub dt: f64,
}

/// A stopping rule: `{"constant": j}`, `{"hitting": level}` or
/// `{"boundary": [[..], ..]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum RuleConfig {
    Constant(usize),
    Hitting(f64),
    Boundary(Vec<Node>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FamilyConfig {
    /// Built from `vol_spec` or `d_process`.
    Vol,
    /// Seeded random rectangular family on `lattice.K` steps with a random
    /// `b`-letter alphabet and `dt = 1`.
    RandomRectangular {
        #[serde(default = "default_b")]
        b: usize,
        #[serde(default = "default_max_laws")]
        max_laws: usize,
        /// How many families to draw.
        #[serde(default = "one")]
        count: usize,
    },
    InvarianceViolation,
    PastingViolation,
}

fn default_b() -> usize {
    2
}

fn default_max_laws() -> usize {
    3
}

fn one() -> usize {
    1
}

/// Per-step variance rate switching once.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SwitchConfig {
    pub before: f64,
    pub after: f64,
    /// First step (0-based) at the `after` level; defaults to `K / 2`.
    #[serde(default)]
    pub at: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_report")]
    pub report: String,
    #[serde(default = "default_values")]
    pub values: String,
}

fn default_report() -> String {
    "report.json".into()
}

fn default_values() -> String {
    "values.csv".into()
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            report: default_report(),
            values: default_values(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub experiment: Experiment,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lattice: Option<LatticeConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vol_spec: Option<VolSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_process: Option<DProcess>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<FamilyConfig>,
    /// Payoff source; a seeded random payoff when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub payoff: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<RuleConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<RuleConfig>,
    /// Random rule pairs per family when `sigma`/`tau` are not given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub num_pairs: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub num_points: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub switch: Option<SwitchConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_enum: Option<u64>,
    #[serde(default)]
    pub output: OutputConfig,
}

impl Config {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| CliError::Config {
            pointer: pointer_from_path(e.path()),
            reason: e.inner().to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }

    /// Fills in seed and enumeration cap, command-line values first.
    pub fn resolve(mut self, seed: Option<u64>, max_enum: Option<u64>) -> Self {
        self.seed = Some(seed.or(self.seed).unwrap_or(0));
        self.max_enum = Some(
            max_enum
                .or(self.max_enum)
                .unwrap_or(sublinear::ambiguity::DEFAULT_MAX_ENUM),
        );
        self
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn max_enum(&self) -> u64 {
        self.max_enum
            .unwrap_or(sublinear::ambiguity::DEFAULT_MAX_ENUM)
    }
}

/// `serde_path_to_error` paths use dots and brackets; reports use JSON
/// pointers.
fn pointer_from_path(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for seg in path.iter() {
        match seg {
            Segment::Seq { index } => out.push_str(&format!("/{index}")),
            Segment::Map { key } => out.push_str(&format!("/{}", escape(key))),
            Segment::Enum { variant } => out.push_str(&format!("/{}", escape(variant))),
            Segment::Unknown => {}
        }
    }
    out
}

fn escape(key: &str) -> String {
    key.replace('~', "~0").replace('/', "~1")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_a_full_config() {
        let c = Config::from_json(
            r#"{
                "experiment": "tower",
                "lattice": {"K": 3, "dt": 0.5},
                "vol_spec": {"kind": "finite_set", "values": [1, 2]},
                "payoff": "B^2",
                "sigma": {"constant": 1},
                "tau": {"hitting": 1.0},
                "seed": 7
            }"#,
        )
        .unwrap();
        assert_eq!(c.experiment, Experiment::Tower);
        assert_eq!(c.lattice.as_ref().unwrap().num_steps, 3);
        assert_eq!(c.tau, Some(RuleConfig::Hitting(1.0)));
        let r = c.resolve(None, Some(99));
        assert_eq!((r.seed(), r.max_enum()), (7, 99));
    }

    #[test]
    fn schema_errors_carry_pointers() {
        let err = Config::from_json(r#"{"experiment": "tower", "lattice": {"K": "x", "dt": 1}}"#)
            .unwrap_err();
        match err {
            CliError::Config { pointer, .. } => assert_eq!(pointer, "/lattice/K"),
            other => panic!("{other:?}"),
        }
        let err = Config::from_json(r#"{"experiment": "nope"}"#).unwrap_err();
        assert!(matches!(err, CliError::Config { ref pointer, .. } if pointer == "/experiment"));
        let err = Config::from_json(r#"{"experiment": "gexp", "extra": 1}"#).unwrap_err();
        assert!(matches!(err, CliError::Config { .. }));
    }

    #[test]
    fn boundary_rules_parse() {
        let c = Config::from_json(
            r#"{"experiment": "esssup", "tau": {"boundary": [[0], [1, 0], [1, 1]]}}"#,
        )
        .unwrap();
        assert_eq!(
            c.tau,
            Some(RuleConfig::Boundary(vec![
                Node::new(vec![0]),
                Node::new(vec![1, 0]),
                Node::new(vec![1, 1])
            ]))
        );
    }
}
