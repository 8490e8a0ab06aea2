//! Experiment configuration: a versioned JSON schema that round-trips
//! losslessly and rejects unknown keys with the offending path named.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::landscape::{
    build_double_well, build_gaussian_location_erm, build_quadratic,
    build_tilted_double_well_erm, Dataset, Landscape,
};
use crate::metastability::EtaBetaChoice;
use crate::theory::ProblemParams;

pub const SCHEMA_VERSION: u32 = 1;

fn default_schema_version() -> u32 {
    SCHEMA_VERSION
}

/// Which landscape family to instantiate, with its construction parameters.
/// ERM families carry the dataset recipe (size, law, seed) so the instance is
/// reproducible from the config alone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum LandscapeSpec {
    Quadratic {
        dimension: usize,
        curvature: f64,
    },
    DoubleWell {
        dimension: usize,
        barrier_scale: f64,
    },
    GaussianLocation {
        dimension: usize,
        n: usize,
        ridge: f64,
        trunc_radius: f64,
        dataset_seed: u64,
    },
    TiltedDoubleWell {
        n: usize,
        barrier_scale: f64,
        tilt_radius: f64,
        dataset_seed: u64,
    },
}

impl LandscapeSpec {
    pub fn dimension(&self) -> usize {
        match self {
            LandscapeSpec::Quadratic { dimension, .. } => *dimension,
            LandscapeSpec::DoubleWell { dimension, .. } => *dimension,
            LandscapeSpec::GaussianLocation { dimension, .. } => *dimension,
            LandscapeSpec::TiltedDoubleWell { .. } => 1,
        }
    }

    pub fn build(&self) -> Result<Box<dyn Landscape>> {
        match self {
            LandscapeSpec::Quadratic {
                dimension,
                curvature,
            } => Ok(Box::new(build_quadratic(*dimension, *curvature)?)),
            LandscapeSpec::DoubleWell {
                dimension,
                barrier_scale,
            } => Ok(Box::new(build_double_well(*dimension, *barrier_scale)?)),
            LandscapeSpec::GaussianLocation {
                dimension,
                n,
                ridge,
                trunc_radius,
                dataset_seed,
            } => {
                let ds = Dataset::truncated_gaussian(*dimension, *n, *trunc_radius, *dataset_seed)?;
                Ok(Box::new(build_gaussian_location_erm(
                    &ds,
                    *ridge,
                    *trunc_radius,
                )?))
            }
            LandscapeSpec::TiltedDoubleWell {
                n,
                barrier_scale,
                tilt_radius,
                dataset_seed,
            } => {
                let ds = Dataset::truncated_gaussian(1, *n, *tilt_radius, *dataset_seed)?;
                Ok(Box::new(build_tilted_double_well_erm(
                    &ds,
                    *barrier_scale,
                    *tilt_radius,
                )?))
            }
        }
    }
}

fn one() -> f64 {
    1.0
}

/// Target radius, failure probability, initial H-distance, dwell horizon, and
/// the tunable absolute constants (all defaulting to 1). Regularity constants
/// and the dimension come from the landscape, not from this block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsBlock {
    pub epsilon: f64,
    pub delta: f64,
    pub r: f64,
    pub t_dwell: f64,
    #[serde(default = "one")]
    pub c1: f64,
    #[serde(default = "one")]
    pub c2: f64,
    #[serde(default = "one")]
    pub c: f64,
    #[serde(default = "one")]
    pub c0: f64,
    #[serde(default = "one")]
    pub c_prime: f64,
    #[serde(default = "half")]
    pub c_reflect: f64,
}

fn half() -> f64 {
    0.5
}

impl ParamsBlock {
    pub fn to_problem_params(&self, landscape: &dyn Landscape) -> Result<ProblemParams> {
        let mut p = ProblemParams::new(
            landscape.constants().clone(),
            landscape.dim(),
            self.epsilon,
            self.delta,
            self.r,
            self.t_dwell,
        )?;
        p.c1 = self.c1;
        p.c2 = self.c2;
        p.c = self.c;
        p.c0 = self.c0;
        p.c_prime = self.c_prime;
        p.c_reflect = self.c_reflect;
        p.validate()?;
        Ok(p)
    }
}

fn default_substep_factor() -> usize {
    16
}

fn default_eta_beta() -> EtaBetaChoice {
    EtaBetaChoice::Auto
}

/// Execution block: replica count, optional iteration budget, seed, and the
/// step-size/temperature choice. `betas` and `eta` feed the escape-time
/// sweep only.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunBlock {
    pub replicas: usize,
    pub seed: u64,
    #[serde(default)]
    pub budget_k: Option<usize>,
    #[serde(default = "default_substep_factor")]
    pub substep_factor: usize,
    #[serde(default = "default_eta_beta")]
    pub eta_beta: EtaBetaChoice,
    #[serde(default)]
    pub override_admissibility: bool,
    #[serde(default)]
    pub betas: Option<Vec<f64>>,
    #[serde(default)]
    pub eta: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Json,
    Csv,
    Md,
}

impl std::str::FromStr for OutputFormat {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "json" => Ok(OutputFormat::Json),
            "csv" => Ok(OutputFormat::Csv),
            "md" => Ok(OutputFormat::Md),
            other => Err(format!("unknown format '{other}' (expected json, csv or md)")),
        }
    }
}

fn default_formats() -> Vec<OutputFormat> {
    vec![OutputFormat::Json]
}

/// Where and how results are written. `trajectory_dump` is the number of
/// leading replicas whose full trajectories are exported.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    pub directory: String,
    #[serde(default = "default_formats")]
    pub formats: Vec<OutputFormat>,
    #[serde(default)]
    pub trajectory_dump: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_schema_version")]
    pub schema_version: u32,
    pub landscape: LandscapeSpec,
    pub params: ParamsBlock,
    pub run: RunBlock,
    pub output: OutputBlock,
}

impl ExperimentConfig {
    /// Parses a config, naming the offending path on unknown or ill-typed
    /// keys and rejecting schema versions this build does not understand.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            Error::InvalidConfig(format!("at '{}': {}", e.path(), e.inner()))
        })?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(Error::InvalidConfig(format!(
                "unsupported schema_version {} (this build reads {})",
                cfg.schema_version, SCHEMA_VERSION
            )));
        }
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialization cannot fail")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ExperimentConfig {
        ExperimentConfig {
            schema_version: SCHEMA_VERSION,
            landscape: LandscapeSpec::Quadratic {
                dimension: 2,
                curvature: 1.0,
            },
            params: ParamsBlock {
                epsilon: 0.5,
                delta: 0.1,
                r: 0.5 / 8.0 * 1.001,
                t_dwell: 0.25,
                c1: 1.0,
                c2: 1.0,
                c: 1.0,
                c0: 1.0,
                c_prime: 1.0,
                c_reflect: 0.5,
            },
            run: RunBlock {
                replicas: 8,
                seed: 11,
                budget_k: None,
                substep_factor: 16,
                eta_beta: EtaBetaChoice::Auto,
                override_admissibility: false,
                betas: None,
                eta: None,
            },
            output: OutputBlock {
                directory: "out".into(),
                formats: vec![OutputFormat::Json, OutputFormat::Md],
                trajectory_dump: 0,
            },
        }
    }

    #[test]
    fn round_trips_losslessly() {
        let cfg = sample();
        let text = cfg.to_json();
        let back = ExperimentConfig::from_json(&text).unwrap();
        assert_eq!(back.to_json(), text);
    }

    #[test]
    fn unknown_key_rejected_with_path() {
        let mut v: serde_json::Value = serde_json::from_str(&sample().to_json()).unwrap();
        v["landscape"]["curvatur"] = serde_json::json!(2.0);
        let err = ExperimentConfig::from_json(&v.to_string()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("landscape"), "{msg}");
        assert!(msg.contains("curvatur"), "{msg}");
    }

    #[test]
    fn wrong_schema_version_rejected() {
        let mut v: serde_json::Value = serde_json::from_str(&sample().to_json()).unwrap();
        v["schema_version"] = serde_json::json!(99);
        assert!(ExperimentConfig::from_json(&v.to_string()).is_err());
    }

    #[test]
    fn builds_each_family() {
        assert_eq!(sample().landscape.build().unwrap().dim(), 2);
        let dw = LandscapeSpec::DoubleWell {
            dimension: 1,
            barrier_scale: 1.0,
        };
        assert_eq!(dw.build().unwrap().dim(), 1);
        let gl = LandscapeSpec::GaussianLocation {
            dimension: 2,
            n: 10,
            ridge: 0.1,
            trunc_radius: 2.0,
            dataset_seed: 3,
        };
        assert_eq!(gl.build().unwrap().dim(), 2);
        let tdw = LandscapeSpec::TiltedDoubleWell {
            n: 10,
            barrier_scale: 1.0,
            tilt_radius: 0.5,
            dataset_seed: 3,
        };
        assert_eq!(tdw.build().unwrap().dim(), 1);
    }

    #[test]
    fn params_block_feeds_problem_params() {
        let cfg = sample();
        let f = cfg.landscape.build().unwrap();
        let p = cfg.params.to_problem_params(f.as_ref()).unwrap();
        assert_eq!(p.d, 2);
        assert_eq!(p.epsilon, 0.5);
        assert_eq!(p.c1, 1.0);
    }
}
