//! The JSON run configuration: sections `family`, `space`, `theta0`,
//! `experiment`, `output`, plus optional `divergence` and `bounds` settings
//! for the commands of the same names.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use mledr_core::estimation::{Family, FamilySpec, ParamPoint, ParamSpace};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceConfig {
    /// Largest discrete level `N`.
    pub n_max: usize,
    /// Box `B` for the continuous component, one `[lo, hi]` per coordinate.
    #[serde(default)]
    pub bounds: Vec<(f64, f64)>,
}

/// Doubling of the replication count for rare events.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Adaptive {
    #[serde(default = "default_min_hits")]
    pub min_hits: u64,
    #[serde(default = "default_max_replications")]
    pub max_replications: u64,
}

impl Default for Adaptive {
    fn default() -> Self {
        Adaptive {
            min_hits: default_min_hits(),
            max_replications: default_max_replications(),
        }
    }
}

fn default_min_hits() -> u64 {
    50
}
fn default_max_replications() -> u64 {
    2_000_000
}
fn default_confidence() -> f64 {
    0.99
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSettings {
    pub n_grid: Vec<u64>,
    pub replications: u64,
    pub master_seed: u64,
    #[serde(default = "default_confidence")]
    pub confidence_level: f64,
    /// Absent: exactly `replications` per cell.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adaptive: Option<Adaptive>,
    /// Threshold `u` of the nuisance-parameter confidence probability; when
    /// present `simulate` also writes `wn.csv`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wn_u: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSettings {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    #[serde(default)]
    pub svg: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DivergenceSettings {
    /// Orders of the Hellinger integrals tabulated per parameter point.
    #[serde(default = "default_hellinger_orders")]
    pub hellinger_orders: Vec<f64>,
    /// Grid points per coordinate of `B`.
    #[serde(default = "default_beta_points")]
    pub beta_points: usize,
    /// Arguments at which `M(u)` is tabulated.
    #[serde(default = "default_m_arguments")]
    pub m_arguments: Vec<f64>,
}

impl Default for DivergenceSettings {
    fn default() -> Self {
        DivergenceSettings {
            hellinger_orders: default_hellinger_orders(),
            beta_points: default_beta_points(),
            m_arguments: default_m_arguments(),
        }
    }
}

fn default_hellinger_orders() -> Vec<f64> {
    vec![0.25, 0.5, 0.75]
}
fn default_beta_points() -> usize {
    9
}
fn default_m_arguments() -> Vec<f64> {
    (1..=20).map(|k| 0.25 * k as f64).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TailSettings {
    pub q: f64,
    #[serde(default = "one")]
    pub k: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsSettings {
    /// Moment order of the Rosenthal bound (tilted pairs only).
    #[serde(default = "default_rosenthal_p")]
    pub rosenthal_p: f64,
    /// Moment orders on which the natural `ψ` is tabulated.
    #[serde(default = "default_psi_grid")]
    pub psi_grid: Vec<f64>,
    /// Stretched-exponential tail `exp(−(x/K)^q)` for the tail-transform
    /// curve `W(d√n)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail: Option<TailSettings>,
    /// Whether to compute the upper bound from the rate functions (slow for
    /// large `Θ₁` grids).
    #[serde(default = "yes")]
    pub rate_bound: bool,
}

impl Default for BoundsSettings {
    fn default() -> Self {
        BoundsSettings {
            rosenthal_p: default_rosenthal_p(),
            psi_grid: default_psi_grid(),
            tail: None,
            rate_bound: true,
        }
    }
}

fn default_rosenthal_p() -> f64 {
    2.5
}
fn default_psi_grid() -> Vec<f64> {
    (1..=76).map(|k| 2.0 + 0.25 * k as f64).collect()
}
fn yes() -> bool {
    true
}

/// The whole configuration document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub family: FamilySpec,
    pub space: SpaceConfig,
    pub theta0: ParamPoint,
    pub experiment: ExperimentSettings,
    #[serde(default)]
    pub output: OutputSettings,
    #[serde(default)]
    pub divergence: DivergenceSettings,
    #[serde(default)]
    pub bounds: BoundsSettings,
}

/// A validated experiment: the model, the truth and the simulation plan.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub family: FamilySpec,
    pub space: ParamSpace,
    pub theta0: ParamPoint,
    pub settings: ExperimentSettings,
}

impl ExperimentConfig {
    pub fn new(
        family: FamilySpec,
        space: &SpaceConfig,
        theta0: ParamPoint,
        settings: ExperimentSettings,
    ) -> std::result::Result<Self, (String, String)> {
        let built: Arc<dyn Family> = family.build().map_err(|e| ("family".into(), e.to_string()))?;
        let space = ParamSpace::new(space.n_max, space.bounds.clone(), built)
            .map_err(|e| ("space".to_string(), e.to_string()))?;
        if theta0.m != 0 {
            return Err(("theta0.m".into(), "the true parameter must be at level 0".into()));
        }
        space
            .check_point(&theta0)
            .map_err(|e| ("theta0".to_string(), e.to_string()))?;
        validate_settings(&settings)?;
        Ok(ExperimentConfig {
            family,
            space,
            theta0,
            settings,
        })
    }

    pub fn master_seed(&self) -> u64 {
        self.settings.master_seed
    }
}

fn validate_settings(s: &ExperimentSettings) -> std::result::Result<(), (String, String)> {
    let bad = |field: &str, msg: &str| Err((format!("experiment.{field}"), msg.to_string()));
    if s.n_grid.is_empty() {
        return bad("n_grid", "must list at least one sample size");
    }
    if s.n_grid[0] == 0 || s.n_grid.windows(2).any(|w| w[1] <= w[0]) {
        return bad("n_grid", "must be strictly increasing positive integers");
    }
    if s.n_grid.iter().any(|&n| n > u32::MAX as u64) {
        return bad("n_grid", "sample sizes must fit in 32 bits");
    }
    if s.replications < 100 {
        return bad("replications", "must be at least 100");
    }
    if s.replications > u32::MAX as u64 {
        return bad("replications", "must fit in 32 bits");
    }
    if !(s.confidence_level > 0.0 && s.confidence_level < 1.0) {
        return bad("confidence_level", "must lie in (0, 1)");
    }
    if let Some(a) = s.adaptive {
        if a.max_replications < s.replications || a.max_replications > u32::MAX as u64 {
            return bad("adaptive.max_replications", "must be at least `replications` and fit in 32 bits");
        }
    }
    if let Some(u) = s.wn_u {
        if !(u > 0.0) {
            return bad("wn_u", "must be positive");
        }
    }
    Ok(())
}

/// A parsed configuration with its source path.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub path: PathBuf,
    pub file: ConfigFile,
    pub experiment: ExperimentConfig,
}

fn config_error(path: &Path, location: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Config {
        path: path.display().to_string(),
        location: location.into(),
        message: message.into(),
    }
}

/// Parses and validates `text`; errors carry the line and field.
pub fn parse_config(path: &Path, text: &str) -> Result<LoadedConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let file: ConfigFile = serde_path_to_error::deserialize(de).map_err(|e| {
        let field = e.path().to_string();
        let inner = e.inner();
        let location = if field.is_empty() || field == "." {
            format!("line {}", inner.line())
        } else {
            format!("line {}, field `{field}`", inner.line())
        };
        config_error(path, location, inner.to_string())
    })?;
    let experiment = ExperimentConfig::new(
        file.family.clone(),
        &file.space,
        file.theta0.clone(),
        file.experiment.clone(),
    )
    .map_err(|(field, msg)| config_error(path, format!("field `{field}`"), msg))?;
    Ok(LoadedConfig {
        path: path.to_path_buf(),
        file,
        experiment,
    })
}

pub fn load_config(path: &Path) -> Result<LoadedConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| config_error(path, "file", e.to_string()))?;
    parse_config(path, &text)
}

#[cfg(test)]
mod tests {
    use super::*;

    const GAUSS: &str = r#"{
        "family": {"kind": "gaussian_levels"},
        "space": {"n_max": 1},
        "theta0": {"m": 0, "beta": []},
        "experiment": {"n_grid": [1, 4], "replications": 1000, "master_seed": 7}
    }"#;

    #[test]
    fn minimal_config_parses_with_defaults() {
        let c = parse_config(Path::new("c.json"), GAUSS).unwrap();
        assert_eq!(c.experiment.settings.confidence_level, 0.99);
        assert_eq!(c.file.bounds.rosenthal_p, 2.5);
        assert!(c.file.experiment.adaptive.is_none());
    }

    #[test]
    fn empty_grid_names_the_field() {
        let text = GAUSS.replace("[1, 4]", "[]");
        let e = parse_config(Path::new("c.json"), &text).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        assert!(e.to_string().contains("experiment.n_grid"), "{e}");
    }

    #[test]
    fn unknown_field_reports_line() {
        let text = GAUSS.replace("\"master_seed\": 7", "\"master_seed\": 7,\n \"sead\": 1");
        let e = parse_config(Path::new("c.json"), &text).unwrap_err().to_string();
        assert!(e.contains("line 6") && e.contains("sead"), "{e}");
    }

    #[test]
    fn type_errors_name_the_path() {
        let text = GAUSS.replace("1000", "\"many\"");
        let e = parse_config(Path::new("c.json"), &text).unwrap_err().to_string();
        assert!(e.contains("experiment.replications"), "{e}");
    }

    #[test]
    fn theta0_must_be_level_zero() {
        let text = GAUSS.replace("\"m\": 0", "\"m\": 1");
        assert!(parse_config(Path::new("c.json"), &text).is_err());
    }
}
