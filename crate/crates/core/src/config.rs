//! Run configuration: one TOML file whose sections mirror the pipeline stages.
//!
//! The top-level `seed` drives every random choice of a run. Per-image seeds
//! for the segmenter and K-means are derived from it and the image id, so
//! section-level `seed` fields are overwritten.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::camera::{CameraModel, SafetyRadiusConfig};
use crate::candidates::{CandidateConfig, SquareMode};
use crate::error::{Error, Result, Violations};
use crate::hash::{mix, str_key};
use crate::hazard::HazardWeights;
use crate::monitors::{MonitorConfig, MonitorKind};
use crate::perturbation::{Perturbation, PerturbationSpec};
use crate::segmentation::SegmenterSpec;
use crate::selection::SelectionLimits;
use crate::synth::SynthConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    /// Directory holding `labels/` ground-truth maps (and optional `segmentations/`).
    pub dataset_dir: PathBuf,
    pub output_dir: PathBuf,
}

impl Default for Paths {
    fn default() -> Self {
        Paths {
            dataset_dir: PathBuf::from("data"),
            output_dir: PathBuf::from("out"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrueHazardConfig {
    pub kappa: f64,
}

impl Default for TrueHazardConfig {
    fn default() -> Self {
        TrueHazardConfig { kappa: 0.5 }
    }
}

impl TrueHazardConfig {
    pub fn validate(&self) -> Result<()> {
        if self.kappa > 0.0 && self.kappa < 1.0 {
            Ok(())
        } else {
            Err(Error::config(format!(
                "true_hazard.kappa must be in (0, 1) (got {})",
                self.kappa
            )))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelectionConfig {
    /// Side of the default-action proxy region as a fraction of the image.
    pub default_frac: f64,
    /// Give up after this many monitored candidates; unset tries them all.
    pub max_attempts: Option<usize>,
}

impl SelectionConfig {
    pub fn limits(&self) -> SelectionLimits {
        SelectionLimits {
            max_attempts: self.max_attempts,
        }
    }
}

impl Default for SelectionConfig {
    fn default() -> Self {
        SelectionConfig {
            default_frac: 0.1,
            max_attempts: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    /// Pool confusion counts over images, then compute metrics.
    #[default]
    Micro,
    /// Average per-image metrics.
    Macro,
}

/// Where the segmentation of each image comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmenterSource {
    /// The seeded noisy oracle over each ground-truth map.
    #[default]
    Synthetic,
    /// Label and softmax files under `<dataset_dir>/segmentations/`.
    Precomputed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationConfig {
    pub monitors: Vec<MonitorKind>,
    /// Unset means the standard grid scaled to the camera image size.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub perturbations: Option<Vec<PerturbationSpec>>,
    pub aggregation: Aggregation,
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        EvaluationConfig {
            monitors: MonitorKind::ALL.to_vec(),
            perturbations: None,
            aggregation: Aggregation::Micro,
        }
    }
}

/// Parameters of every pipeline stage.
#[derive(Default, Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub paths: Paths,
    pub camera: CameraModel,
    pub safety: SafetyRadiusConfig,
    pub candidates: CandidateConfig,
    pub hazard: HazardWeights,
    pub true_hazard: TrueHazardConfig,
    pub monitor: MonitorConfig,
    pub segmenter: SegmenterSpec,
    pub segmenter_source: SegmenterSource,
    pub selection: SelectionConfig,
    pub evaluation: EvaluationConfig,
    pub synth: SynthConfig,
}

impl RunConfig {
    /// Parses and fully validates a config file.
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg = RunConfig::from_toml_str(&text).map_err(|e| match e {
            Error::Parse { offset, message, .. } => Error::Parse {
                path: path.to_path_buf(),
                offset,
                message,
            },
            other => other,
        })?;
        Ok(cfg)
    }

    pub fn from_toml_str(text: &str) -> Result<RunConfig> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Parse {
            path: PathBuf::from("<config>"),
            offset: e.span().map_or(0, |s| s.start as u64),
            message: e.message().to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config is always serializable")
    }

    /// Checks every section and cross-section constraint, reporting all violations.
    pub fn validate(&self) -> Result<()> {
        let mut v = Violations::default();
        v.extend(self.camera.validate());
        v.extend(self.safety.validate());
        v.extend(self.candidates.validate());
        v.extend(self.hazard.validate(&self.safety));
        v.extend(self.true_hazard.validate());
        v.extend(self.monitor.validate());
        v.extend(self.segmenter.validate());
        v.extend(self.synth.validate());
        v.check(
            (self.synth.width, self.synth.height) == (self.camera.image_width_px, self.camera.image_height_px),
            || {
                format!(
                    "synth size {}x{} must equal the camera image size {}x{}",
                    self.synth.width, self.synth.height, self.camera.image_width_px, self.camera.image_height_px
                )
            },
        );
        v.check(self.synth.hd_scale == self.segmenter.hd_scale, || {
            format!(
                "synth.hd_scale ({}) must equal segmenter.hd_scale ({})",
                self.synth.hd_scale, self.segmenter.hd_scale
            )
        });
        v.check(self.camera.image_height_px >= self.candidates.n_stripes, || {
            "camera image height must be at least the stripe count".into()
        });
        if !(self.selection.default_frac > 0.0 && self.selection.default_frac <= 0.25) {
            v.check(false, || {
                format!(
                    "selection.default_frac must be in (0, 0.25] (got {})",
                    self.selection.default_frac
                )
            });
        }
        v.check(!self.evaluation.monitors.is_empty(), || {
            "evaluation.monitors must not be empty".into()
        });
        let grid = self.perturbation_grid();
        v.check(!grid.is_empty(), || "evaluation.perturbations must not be empty".into());
        for (i, p) in grid.iter().enumerate() {
            let dup = grid[..i].iter().any(|q| q.name() == p.name());
            v.check(!dup, || {
                format!("evaluation.perturbations lists {} more than once", p.name())
            });
            v.extend(
                p.perturbation
                    .validate(self.camera.image_width_px, self.camera.image_height_px),
            );
        }
        v.into_result()
    }

    /// The perturbations to evaluate, in report order.
    pub fn perturbation_grid(&self) -> Vec<PerturbationSpec> {
        match &self.evaluation.perturbations {
            Some(list) => list.clone(),
            None => Perturbation::standard_grid(self.camera.image_width_px, self.camera.image_height_px)
                .into_iter()
                .map(|p| PerturbationSpec::new(p, 0))
                .collect(),
        }
    }

    /// Hazard weights consistent with the clearance-square mode.
    pub fn effective_hazard(&self) -> HazardWeights {
        HazardWeights {
            clamp_inside_radius: self.hazard.clamp_inside_radius || self.candidates.square == SquareMode::Side,
            ..self.hazard
        }
    }

    /// Segmenter spec for one image, seeded from the run seed and the image id.
    pub fn segmenter_for(&self, image_id: &str) -> SegmenterSpec {
        SegmenterSpec {
            seed: mix(&[self.seed, str_key("segmenter"), str_key(image_id)]),
            ..self.segmenter.clone()
        }
    }

    /// Candidate config for one image, seeded from the run seed and the image id.
    pub fn candidates_for(&self, image_id: &str) -> CandidateConfig {
        CandidateConfig {
            seed: mix(&[self.seed, str_key("kmeans"), str_key(image_id)]),
            ..self.candidates.clone()
        }
    }

    /// Perturbation with its seed mixed with the run seed and the image id.
    pub fn perturbation_for(&self, p: &PerturbationSpec, image_id: &str) -> PerturbationSpec {
        PerturbationSpec {
            seed: mix(&[self.seed, p.seed, str_key("perturbation"), str_key(image_id)]),
            ..*p
        }
    }

    /// Fails when the dataset directory is missing.
    pub fn require_dataset(&self) -> Result<()> {
        if self.paths.dataset_dir.is_dir() {
            Ok(())
        } else {
            Err(Error::config(format!(
                "paths.dataset_dir {} does not exist",
                self.paths.dataset_dir.display()
            )))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_valid_and_round_trips() {
        let cfg = RunConfig::default();
        cfg.validate().unwrap();
        let text = cfg.to_toml_string();
        assert_eq!(RunConfig::from_toml_str(&text).unwrap(), cfg);
    }

    #[test]
    fn partial_file_uses_defaults() {
        let cfg = RunConfig::from_toml_str(
            r#"
seed = 9
[monitor]
tau = 0.125
[evaluation]
monitors = ["LHD", "LHD+CH+MCD"]
perturbations = [{ kind = "none" }, { kind = "fog", density = 0.4, seed = 2 }]
"#,
        )
        .unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.monitor.tau, 0.125);
        assert_eq!(cfg.evaluation.monitors.len(), 2);
        assert_eq!(
            cfg.perturbation_grid()[1].perturbation,
            Perturbation::Fog { density: 0.4 }
        );
    }

    #[test]
    fn every_violation_is_listed() {
        let err = RunConfig::from_toml_str(
            r#"
[camera]
height_m = -1.0
[monitor]
tau = 0.9
[true_hazard]
kappa = 1.5
"#,
        )
        .unwrap_err();
        match err {
            Error::Config(v) => assert_eq!(v.len(), 3, "{v:?}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_key_is_a_parse_error_with_offset() {
        let err = RunConfig::from_toml_str("seed = 1\n[camera]\nheight = 3.0\n").unwrap_err();
        match err {
            Error::Parse { offset, .. } => assert!(offset > 0),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn side_mode_clamps_distance_hazard() {
        let mut cfg = RunConfig::default();
        assert!(!cfg.effective_hazard().clamp_inside_radius);
        cfg.candidates.square = SquareMode::Side;
        assert!(cfg.effective_hazard().clamp_inside_radius);
    }
}
