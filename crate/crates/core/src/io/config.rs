use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::err::{Error, Result};
use crate::geom::SegmentationParams;
use crate::inpaint::InpaintBackend;
use crate::lines::{ClusterParams, DetectorParams, MatchThresholds};
use crate::view::SelectionWeights;
use crate::warp::EnergyWeights;
use crate::Scalar;

/// Everything a run needs beyond the mesh and cameras themselves. Every
/// field has a default, so `{}` is a valid config; unknown keys are
/// rejected at any nesting level.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProjectConfig {
    pub segmentation: SegmentationParams<Scalar>,
    pub selection: SelectionWeights,
    pub energy: EnergyWeights,
    pub detector: DetectorParams,
    pub matching: MatchThresholds,
    pub cluster: ClusterParams,
    /// "builtin" or the URL of an inpainting service.
    pub inpaint_backend: String,
    /// Threads for the plane-parallel stage; 0 uses every core.
    pub workers: usize,
    pub seed: u64,
    pub mesh: Option<PathBuf>,
    pub cameras: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
}

impl Default for ProjectConfig {
    fn default() -> Self {
        ProjectConfig {
            segmentation: SegmentationParams::default(),
            selection: SelectionWeights::default(),
            energy: EnergyWeights::default(),
            detector: DetectorParams::default(),
            matching: MatchThresholds::default(),
            cluster: ClusterParams::default(),
            inpaint_backend: "builtin".into(),
            workers: 0,
            seed: 0,
            mesh: None,
            cameras: None,
            out_dir: None,
        }
    }
}

impl ProjectConfig {
    pub fn from_file(path: &Path) -> Result<ProjectConfig> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let config: ProjectConfig = serde_json::from_str(&text)
            .map_err(|e| Error::parse(path, e.line(), e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.selection.validate()?;
        self.energy.validate()?;
        if self.detector.grad_threshold <= 0.0 || self.detector.fit_tol <= 0.0 {
            return Err(Error::Config(
                "detector thresholds must be positive".into(),
            ));
        }
        if self.detector.min_support < 2 {
            return Err(Error::Config("detector min_support must be at least 2".into()));
        }
        if self.inpaint_backend.is_empty() {
            return Err(Error::Config("inpaint_backend must not be empty".into()));
        }
        Ok(())
    }

    pub fn backend(&self) -> InpaintBackend {
        if self.inpaint_backend == "builtin" {
            InpaintBackend::Builtin
        } else {
            InpaintBackend::External {
                url: self.inpaint_backend.clone(),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_identically() {
        let mut config = ProjectConfig::default();
        config.selection.lambda_g = 2.5;
        config.energy.lambda_r = 0.0125;
        config.detector.min_support = 11;
        config.segmentation.dist_tol = Some(0.001);
        config.inpaint_backend = "http://localhost:9000/fill".into();
        config.workers = 3;
        config.seed = 42;
        config.mesh = Some("scene/mesh.obj".into());
        let json = config.to_json();
        let again: ProjectConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(
            serde_json::to_value(&config).unwrap(),
            serde_json::to_value(&again).unwrap()
        );
    }

    #[test]
    fn empty_object_is_the_default_config() {
        let parsed: ProjectConfig = serde_json::from_str("{}").unwrap();
        assert_eq!(
            serde_json::to_value(&parsed).unwrap(),
            serde_json::to_value(ProjectConfig::default()).unwrap()
        );
    }

    #[test]
    fn unknown_keys_rejected_at_both_levels() {
        assert!(serde_json::from_str::<ProjectConfig>("{\"sneaky\": 1}").is_err());
        assert!(
            serde_json::from_str::<ProjectConfig>("{\"selection\": {\"lambda_q\": 1.0}}").is_err()
        );
    }

    #[test]
    fn backend_strings_map_to_backends() {
        let mut config = ProjectConfig::default();
        assert!(matches!(config.backend(), InpaintBackend::Builtin));
        config.inpaint_backend = "http://127.0.0.1:1/x".into();
        match config.backend() {
            InpaintBackend::External { url } => assert_eq!(url, "http://127.0.0.1:1/x"),
            other => panic!("expected external backend, got {other:?}"),
        }
    }

    #[test]
    fn invalid_configs_rejected() {
        let mut config = ProjectConfig::default();
        config.detector.min_support = 0;
        assert!(config.validate().is_err());
        let mut config = ProjectConfig::default();
        config.inpaint_backend = String::new();
        assert!(config.validate().is_err());
    }
}
