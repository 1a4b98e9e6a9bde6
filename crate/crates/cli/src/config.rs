use std::path::{Path, PathBuf};

use finesdf::downstream::SweepConfig;
use finesdf::geom::Family;
use finesdf::net::{DecoderConfig, EncoderConfig, LocalityMode, ModelConfig};
use finesdf::pretrain::TrainingConfig;
use finesdf::sdf::{NearZeroMix, SamplingMode};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub levels: usize,
    /// Per-parameter `[lo, hi]`; the family defaults when absent.
    #[serde(default)]
    pub ranges: Option<[[f64; 2]; 4]>,
    pub test_fraction: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingSpec {
    pub mode: SamplingMode,
    /// Samples per geometry in near-zero mode.
    pub n_points: usize,
    /// Lattice resolution in uniform-grid mode.
    pub grid_resolution: usize,
    pub seed: u64,
    #[serde(default)]
    pub mix: NearZeroMix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSpec {
    pub recon_resolution: usize,
    /// Grid indices to reconstruct; the first test geometry when empty.
    #[serde(default)]
    pub recon_geometries: Vec<usize>,
    pub density_thresholds: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DownstreamSpec {
    pub sweep: SweepConfig,
    /// Response nodes per geometry for field targets.
    pub n_nodes: usize,
    pub node_seed: u64,
}

/// Everything that determines a run. Serialized verbatim into the run directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub family: Family,
    pub grid: GridSpec,
    pub sampling: SamplingSpec,
    pub model: ModelConfig,
    pub training: TrainingConfig,
    pub eval: EvalSpec,
    pub downstream: DownstreamSpec,
    pub out_dir: PathBuf,
}

/// Pipeline stages in execution order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Gen,
    Sdf,
    Pretrain,
    Probe,
    Recon,
    Downstream,
}

impl Stage {
    pub const ALL: [Stage; 6] = [
        Stage::Gen,
        Stage::Sdf,
        Stage::Pretrain,
        Stage::Probe,
        Stage::Recon,
        Stage::Downstream,
    ];

    pub fn dir_name(self) -> &'static str {
        match self {
            Stage::Gen => "geometry",
            Stage::Sdf => "samples",
            Stage::Pretrain => "pretrain",
            Stage::Probe => "probe",
            Stage::Recon => "recon",
            Stage::Downstream => "downstream",
        }
    }
}

impl PipelineConfig {
    /// Crash-box run at desk scale: 81 geometries, near-zero sampling,
    /// coordinate locality, plain MSE on stored samples.
    pub fn crash_box_mini() -> Self {
        let mut training = TrainingConfig {
            n_coords: 1024,
            n_random: 0,
            use_batch_attention: false,
            interpolation_enabled: false,
            ..TrainingConfig::default()
        };
        training.checkpoint_every = 1000;
        Self {
            family: Family::CrashBox,
            grid: GridSpec {
                levels: 3,
                ranges: None,
                test_fraction: 1.0 / 9.0,
                seed: 0,
            },
            sampling: SamplingSpec {
                mode: SamplingMode::NearZero,
                n_points: 50_000,
                grid_resolution: 64,
                seed: 0,
                mix: NearZeroMix::default(),
            },
            model: ModelConfig {
                encoder: EncoderConfig::desk(),
                decoder: DecoderConfig::crash_box_desk(),
                init_seed: 0,
            },
            training,
            eval: EvalSpec {
                recon_resolution: 64,
                recon_geometries: Vec::new(),
                density_thresholds: vec![0.005, 0.01, 0.02, 0.05, 0.1],
            },
            downstream: DownstreamSpec {
                sweep: SweepConfig::default(),
                n_nodes: 2000,
                node_seed: 0,
            },
            out_dir: PathBuf::from("runs/crash_box_mini"),
        }
    }

    /// Bottle run at desk scale with Fourier locality and batch attention.
    pub fn bottle_mini() -> Self {
        let mut cfg = Self::crash_box_mini();
        cfg.family = Family::Bottle;
        cfg.model.decoder = DecoderConfig {
            width: 256,
            depth: 4,
            locality: LocalityMode::Fourier,
            ..DecoderConfig::bottle_desk()
        };
        cfg.training = TrainingConfig {
            n_coords: 512,
            n_random: 51,
            checkpoint_every: 1000,
            ..TrainingConfig::default()
        };
        cfg.out_dir = PathBuf::from("runs/bottle_mini");
        cfg
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("invalid config {}: {e}", path.display())))
    }

    /// Sets every seed the pipeline draws from.
    pub fn apply_seed(&mut self, seed: u64) {
        self.grid.seed = seed;
        self.sampling.seed = seed;
        self.model.init_seed = seed;
        self.training.seed = seed;
        self.downstream.node_seed = seed;
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: &str| Err(CliError::Usage(m.to_string()));
        if self.grid.levels < 2 {
            return bad("grid.levels must be at least 2");
        }
        if !(0.0..1.0).contains(&self.grid.test_fraction) {
            return bad("grid.test_fraction must be in [0, 1)");
        }
        if self.sampling.n_points == 0 || self.sampling.grid_resolution < 2 {
            return bad("sampling needs n_points > 0 and grid_resolution >= 2");
        }
        if self.eval.recon_resolution < 8 {
            return bad("eval.recon_resolution must be at least 8");
        }
        self.training
            .validate()
            .map_err(|e| CliError::Usage(format!("training: {e}")))
    }

    /// Digest of the configuration sections that determine `stage` and its
    /// upstream stages.
    pub fn stage_hash(&self, stage: Stage) -> String {
        let mut parts = vec![
            serde_json::to_value(self.family).expect("serializable"),
            serde_json::to_value(&self.grid).expect("serializable"),
        ];
        let upto = |s: Stage| Stage::ALL.iter().position(|&x| x == s).expect("stage listed");
        if upto(stage) >= upto(Stage::Sdf) {
            parts.push(serde_json::to_value(&self.sampling).expect("serializable"));
        }
        if upto(stage) >= upto(Stage::Pretrain) {
            parts.push(serde_json::to_value(&self.model).expect("serializable"));
            parts.push(serde_json::to_value(&self.training).expect("serializable"));
        }
        match stage {
            Stage::Recon => parts.push(serde_json::to_value(&self.eval).expect("serializable")),
            Stage::Downstream => parts.push(serde_json::to_value(&self.downstream).expect("serializable")),
            _ => {}
        }
        let bytes = serde_json::to_vec(&parts).expect("serializable");
        hex::encode(Sha256::digest(bytes))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate_and_round_trip() {
        for cfg in [PipelineConfig::crash_box_mini(), PipelineConfig::bottle_mini()] {
            cfg.validate().unwrap();
            let text = serde_json::to_string(&cfg).unwrap();
            assert_eq!(serde_json::from_str::<PipelineConfig>(&text).unwrap(), cfg);
        }
    }

    #[test]
    fn stage_hashes_follow_dependencies() {
        let a = PipelineConfig::crash_box_mini();
        let mut b = a.clone();
        b.downstream.n_nodes = 10;
        assert_eq!(a.stage_hash(Stage::Pretrain), b.stage_hash(Stage::Pretrain));
        assert_ne!(a.stage_hash(Stage::Downstream), b.stage_hash(Stage::Downstream));
        b.sampling.seed = 9;
        assert_eq!(a.stage_hash(Stage::Gen), b.stage_hash(Stage::Gen));
        assert_ne!(a.stage_hash(Stage::Sdf), b.stage_hash(Stage::Sdf));
        b.out_dir = PathBuf::from("elsewhere");
        assert_eq!(b.stage_hash(Stage::Gen), a.stage_hash(Stage::Gen));
    }
}
