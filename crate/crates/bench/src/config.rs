//! Experiment configuration: a flat `key = value` text format plus CLI
//! overrides.

use std::path::{Path, PathBuf};

use icp_core::association::AssociationMethod;
use icp_core::geometry::DepthNoiseModel;
use icp_core::hybrid::StageOrder;
use icp_core::icp::ErrorMetric;
use icp_core::sequential::{FusionMethod, TimingMode};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] icp_core::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, BenchError>;

fn config_err(msg: impl Into<String>) -> BenchError {
    BenchError::Config(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    InitNoise,
    DepthNoise,
    ModelNoise,
    Sequential,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::InitNoise => "init_noise",
            ExperimentKind::DepthNoise => "depth_noise",
            ExperimentKind::ModelNoise => "model_noise",
            ExperimentKind::Sequential => "sequential",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "init_noise" => Some(ExperimentKind::InitNoise),
            "depth_noise" => Some(ExperimentKind::DepthNoise),
            "model_noise" => Some(ExperimentKind::ModelNoise),
            "sequential" => Some(ExperimentKind::Sequential),
            _ => None,
        }
    }
}

/// One benchmarked algorithm: a fixed (association, metric) pair, a
/// cascading pair, or the full hybrid loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    Fixed {
        assoc: AssociationMethod,
        metric: ErrorMetric,
    },
    Cascading {
        assoc: AssociationMethod,
        order: StageOrder,
    },
    Hybrid,
}

impl Variant {
    pub fn name(&self) -> &'static str {
        match self {
            Variant::Fixed {
                assoc: AssociationMethod::NearestNeighbour,
                metric: ErrorMetric::PointToPoint,
            } => "nn_point_to_point",
            Variant::Fixed {
                assoc: AssociationMethod::NearestNeighbour,
                metric: ErrorMetric::PointToPlane,
            } => "nn_point_to_plane",
            Variant::Fixed {
                assoc: AssociationMethod::Projective,
                metric: ErrorMetric::PointToPoint,
            } => "projective_point_to_point",
            Variant::Fixed {
                assoc: AssociationMethod::Projective,
                metric: ErrorMetric::PointToPlane,
            } => "projective_point_to_plane",
            Variant::Cascading {
                assoc: AssociationMethod::NearestNeighbour,
                order: StageOrder::PointPlane,
            } => "nn_cascading_point_plane",
            Variant::Cascading {
                assoc: AssociationMethod::NearestNeighbour,
                order: StageOrder::PlanePoint,
            } => "nn_cascading_plane_point",
            Variant::Cascading {
                assoc: AssociationMethod::Projective,
                order: StageOrder::PointPlane,
            } => "projective_cascading_point_plane",
            Variant::Cascading {
                assoc: AssociationMethod::Projective,
                order: StageOrder::PlanePoint,
            } => "projective_cascading_plane_point",
            Variant::Hybrid => "hybrid",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        let all = [
            Variant::Fixed {
                assoc: AssociationMethod::NearestNeighbour,
                metric: ErrorMetric::PointToPoint,
            },
            Variant::Fixed {
                assoc: AssociationMethod::NearestNeighbour,
                metric: ErrorMetric::PointToPlane,
            },
            Variant::Fixed {
                assoc: AssociationMethod::Projective,
                metric: ErrorMetric::PointToPoint,
            },
            Variant::Fixed {
                assoc: AssociationMethod::Projective,
                metric: ErrorMetric::PointToPlane,
            },
            Variant::Cascading {
                assoc: AssociationMethod::NearestNeighbour,
                order: StageOrder::PointPlane,
            },
            Variant::Cascading {
                assoc: AssociationMethod::NearestNeighbour,
                order: StageOrder::PlanePoint,
            },
            Variant::Cascading {
                assoc: AssociationMethod::Projective,
                order: StageOrder::PointPlane,
            },
            Variant::Cascading {
                assoc: AssociationMethod::Projective,
                order: StageOrder::PlanePoint,
            },
            Variant::Hybrid,
        ];
        all.iter().copied().find(|v| v.name() == name)
    }
}

/// Mesh source: a builtin primitive or a mesh file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MeshSpec {
    Builtin(String),
    File(PathBuf),
}

impl MeshSpec {
    pub fn id(&self) -> String {
        match self {
            MeshSpec::Builtin(name) => name.clone(),
            MeshSpec::File(path) => path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| path.display().to_string()),
        }
    }
}

/// Fully resolved experiment configuration.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub meshes: Vec<MeshSpec>,
    pub variants: Vec<Variant>,
    pub samples_per_object: usize,
    pub bins: usize,
    pub seed: u64,
    pub output_path: PathBuf,

    pub alpha: f64,
    pub timing: TimingMode,
    pub model_points: usize,
    /// Depth noise applied in the sequential experiment (the single-image
    /// depth-noise experiment sweeps its own levels).
    pub depth_noise: DepthNoiseModel,
    /// Fusion methods exercised by the sequential experiment.
    pub fusion_methods: Vec<FusionMethod>,
    /// Model corruption level used for the sequential experiment's model.
    pub model_noise_level: u32,
    pub start_distance: f64,
    pub velocity: f64,
    pub stop_distance: f64,
}

impl ExperimentConfig {
    pub fn defaults(experiment: ExperimentKind) -> Self {
        Self {
            experiment,
            meshes: vec![
                MeshSpec::Builtin("sphere".into()),
                MeshSpec::Builtin("box".into()),
                MeshSpec::Builtin("cylinder".into()),
            ],
            variants: vec![
                Variant::Fixed {
                    assoc: AssociationMethod::NearestNeighbour,
                    metric: ErrorMetric::PointToPoint,
                },
                Variant::Cascading {
                    assoc: AssociationMethod::Projective,
                    order: StageOrder::PointPlane,
                },
                Variant::Hybrid,
            ],
            samples_per_object: 10,
            bins: 10,
            seed: 0,
            output_path: PathBuf::from("report.csv"),
            alpha: 0.4,
            timing: TimingMode::Measured,
            model_points: 512,
            depth_noise: DepthNoiseModel::default_stereo(),
            fusion_methods: FusionMethod::ALL.to_vec(),
            model_noise_level: 1,
            start_distance: 1.0,
            velocity: 0.1,
            stop_distance: 0.3,
        }
    }

    /// Parse the flat key-value config text into a configuration for
    /// `experiment`, starting from defaults.
    pub fn parse(experiment: ExperimentKind, text: &str) -> Result<Self> {
        let mut cfg = Self::defaults(experiment);
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| config_err(format!("line {line_no}: expected key = value")))?;
            cfg.apply(key.trim(), value.trim())
                .map_err(|e| config_err(format!("line {line_no}: {e}")))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(experiment: ExperimentKind, path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_err(format!("{}: {e}", path.display())))?;
        Self::parse(experiment, &text)
    }

    fn apply(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        match key {
            "experiment" => {
                let kind = ExperimentKind::from_name(value)
                    .ok_or_else(|| format!("unknown experiment {value:?}"))?;
                if kind != self.experiment {
                    return Err(format!(
                        "config is for {:?} but {:?} was requested",
                        kind.name(),
                        self.experiment.name()
                    ));
                }
            }
            "meshes" => {
                self.meshes = value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| {
                        if icp_core::geometry::builtin_mesh(s).is_some() {
                            MeshSpec::Builtin(s.to_string())
                        } else {
                            MeshSpec::File(PathBuf::from(s))
                        }
                    })
                    .collect();
            }
            "variants" => {
                self.variants = value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| {
                        Variant::from_name(s).ok_or_else(|| format!("unknown variant {s:?}"))
                    })
                    .collect::<std::result::Result<_, _>>()?;
            }
            "samples_per_object" => {
                self.samples_per_object = value.parse().map_err(|_| "bad count".to_string())?;
            }
            "bins" => self.bins = value.parse().map_err(|_| "bad count".to_string())?,
            "seed" => self.seed = value.parse().map_err(|_| "bad seed".to_string())?,
            "output" => self.output_path = PathBuf::from(value),
            "alpha" => self.alpha = value.parse().map_err(|_| "bad alpha".to_string())?,
            "timing" => self.timing = parse_timing(value)?,
            "model_points" => {
                self.model_points = value.parse().map_err(|_| "bad count".to_string())?;
            }
            "depth_noise" => self.depth_noise = parse_noise(value)?,
            "fusion_methods" => {
                self.fusion_methods = value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| {
                        FusionMethod::from_name(s)
                            .ok_or_else(|| format!("unknown fusion method {s:?}"))
                    })
                    .collect::<std::result::Result<_, _>>()?;
            }
            "model_noise_level" => {
                self.model_noise_level = value.parse().map_err(|_| "bad level".to_string())?;
            }
            "start_distance" => {
                self.start_distance = value.parse().map_err(|_| "bad distance".to_string())?;
            }
            "velocity" => self.velocity = value.parse().map_err(|_| "bad velocity".to_string())?,
            "stop_distance" => {
                self.stop_distance = value.parse().map_err(|_| "bad distance".to_string())?;
            }
            other => return Err(format!("unknown key {other:?}")),
        }
        Ok(())
    }

    fn validate(&self) -> Result<()> {
        if self.meshes.is_empty() {
            return Err(config_err("no meshes configured"));
        }
        if self.variants.is_empty() && self.experiment != ExperimentKind::Sequential {
            return Err(config_err("no variants configured"));
        }
        if self.samples_per_object == 0 {
            return Err(config_err("samples_per_object must be >= 1"));
        }
        if self.bins == 0 {
            return Err(config_err("bins must be >= 1"));
        }
        if !(0.0..1.0).contains(&self.alpha) || self.alpha == 0.0 {
            return Err(config_err("alpha must lie in (0, 1)"));
        }
        if self.model_noise_level > 4 {
            return Err(config_err("model_noise_level must be in 0..=4"));
        }
        if self.stop_distance >= self.start_distance {
            return Err(config_err("stop_distance must be below start_distance"));
        }
        Ok(())
    }
}

pub fn parse_timing(value: &str) -> std::result::Result<TimingMode, String> {
    if value == "measured" {
        return Ok(TimingMode::Measured);
    }
    if let Some(seconds) = value.strip_prefix("fixed:") {
        let s: f64 = seconds.parse().map_err(|_| "bad fixed timing".to_string())?;
        if s <= 0.0 {
            return Err("fixed timing must be positive".to_string());
        }
        return Ok(TimingMode::Fixed(s));
    }
    Err(format!("unknown timing mode {value:?}"))
}

fn parse_noise(value: &str) -> std::result::Result<DepthNoiseModel, String> {
    if value == "none" {
        return Ok(DepthNoiseModel::None);
    }
    if let Some(pct) = value.strip_prefix("gaussian:") {
        let x: f64 = pct.parse().map_err(|_| "bad noise percent".to_string())?;
        return Ok(DepthNoiseModel::GaussianPercent(x));
    }
    if let Some(rest) = value.strip_prefix("stereo:") {
        let parts: Vec<&str> = rest.split(',').collect();
        if parts.len() != 3 {
            return Err("stereo noise needs a0,a1,a2".to_string());
        }
        let a: Vec<f64> = parts
            .iter()
            .map(|p| p.trim().parse().map_err(|_| "bad coefficient".to_string()))
            .collect::<std::result::Result<_, _>>()?;
        return Ok(DepthNoiseModel::ParametricStereo {
            a0: a[0],
            a1: a[1],
            a2: a[2],
        });
    }
    Err(format!("unknown noise model {value:?}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_minimal_config() {
        let text = "\
# comment
meshes = sphere, box
variants = nn_point_to_point, hybrid
samples_per_object = 3
bins = 5
seed = 42
output = /tmp/out.csv
";
        let cfg = ExperimentConfig::parse(ExperimentKind::InitNoise, text).unwrap();
        assert_eq!(cfg.meshes.len(), 2);
        assert_eq!(cfg.variants.len(), 2);
        assert_eq!(cfg.samples_per_object, 3);
        assert_eq!(cfg.bins, 5);
        assert_eq!(cfg.seed, 42);
    }

    #[test]
    fn rejects_unknown_keys_and_variants() {
        assert!(ExperimentConfig::parse(ExperimentKind::InitNoise, "wat = 1\n").is_err());
        assert!(
            ExperimentConfig::parse(ExperimentKind::InitNoise, "variants = warp_drive\n").is_err()
        );
    }

    #[test]
    fn rejects_mismatched_experiment() {
        let r = ExperimentConfig::parse(ExperimentKind::InitNoise, "experiment = sequential\n");
        assert!(r.is_err());
    }

    #[test]
    fn variant_names_round_trip() {
        for name in [
            "nn_point_to_point",
            "nn_point_to_plane",
            "projective_point_to_point",
            "projective_point_to_plane",
            "nn_cascading_point_plane",
            "nn_cascading_plane_point",
            "projective_cascading_point_plane",
            "projective_cascading_plane_point",
            "hybrid",
        ] {
            assert_eq!(Variant::from_name(name).unwrap().name(), name);
        }
    }

    #[test]
    fn timing_and_noise_parse() {
        assert_eq!(parse_timing("measured").unwrap(), TimingMode::Measured);
        assert_eq!(parse_timing("fixed:0.25").unwrap(), TimingMode::Fixed(0.25));
        assert!(parse_timing("warp").is_err());
        assert_eq!(parse_noise("none").unwrap(), DepthNoiseModel::None);
        assert_eq!(
            parse_noise("gaussian:2.5").unwrap(),
            DepthNoiseModel::GaussianPercent(2.5)
        );
        assert!(matches!(
            parse_noise("stereo:0.001,0,0.0019").unwrap(),
            DepthNoiseModel::ParametricStereo { .. }
        ));
    }
}
