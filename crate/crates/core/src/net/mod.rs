//! Graph encoder, locality features and implicit SDF decoder.

mod decoder;
mod encoder;
mod fourier;
mod layers;

pub use decoder::{Decoder, DecoderConfig};
pub use encoder::{Encoder, EncoderConfig, GraphFeatures, Pooling};
pub use fourier::{locality_batch, locality_features, FourierFeatureMap, LocalityMode};
pub use layers::{load, Linear};

use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::tensor::{read_checkpoint, write_checkpoint, Adam, Checkpoint, ParamStore};
use crate::{Error, Result};

pub const LATENT_DIM: usize = 64;

/// Encoder output for one geometry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LatentCode(pub Vec<f64>);

impl LatentCode {
    pub fn distance(&self, other: &LatentCode) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub encoder: EncoderConfig,
    pub decoder: DecoderConfig,
    pub init_seed: u64,
}

/// Encoder and decoder sharing one parameter store.
#[derive(Debug, Clone)]
pub struct PretrainModel {
    pub config: ModelConfig,
    pub encoder: Encoder,
    pub decoder: Decoder,
    pub params: ParamStore<f64>,
}

impl PretrainModel {
    pub fn new(config: ModelConfig) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(config.init_seed);
        let mut params = ParamStore::new();
        let encoder = Encoder::new(config.encoder.clone(), &mut params, &mut rng)?;
        let decoder = Decoder::new(config.decoder.clone(), &mut params, &mut rng)?;
        Ok(Self {
            config,
            encoder,
            decoder,
            params,
        })
    }

    pub fn param_count(&self) -> usize {
        self.params.scalar_count()
    }

    /// Trainable scalars belonging to the encoder.
    pub fn encoder_param_count(&self) -> usize {
        self.params
            .ids()
            .filter(|&id| self.params.name(id).starts_with("enc."))
            .map(|id| self.params.get(id).len())
            .sum()
    }

    pub fn encode(&self, graph: &GraphFeatures) -> Result<LatentCode> {
        self.encoder.encode(&self.params, graph)
    }

    pub fn decode(&self, latent: &LatentCode, points: &[[f64; 3]]) -> Result<Vec<f64>> {
        self.decoder.decode_points(&self.params, latent, points)
    }

    /// Writes `path` (tensor records) and `path` with a `.json` extension (configuration).
    pub fn save(&self, path: &Path, adam: Option<&Adam<f64>>) -> Result<()> {
        write_checkpoint(&Checkpoint::from_params(&self.params, adam), path)?;
        std::fs::write(config_path(path), serde_json::to_string_pretty(&self.config)?)?;
        Ok(())
    }

    /// Rebuilds a model from [`PretrainModel::save`] output; also returns the raw records.
    pub fn load(path: &Path) -> Result<(Self, Checkpoint)> {
        let cfg_file = config_path(path);
        let text = std::fs::read_to_string(&cfg_file)
            .map_err(|e| Error::Format(format!("cannot read {}: {e}", cfg_file.display())))?;
        let config: ModelConfig = serde_json::from_str(&text)?;
        let mut model = Self::new(config)?;
        let ckpt = read_checkpoint(path)?;
        ckpt.load_params(&mut model.params)?;
        Ok((model, ckpt))
    }
}

fn config_path(path: &Path) -> PathBuf {
    path.with_extension("json")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{generate, ParamVector};
    use crate::tensor::Tape;

    fn desk(width: usize) -> ModelConfig {
        ModelConfig {
            encoder: EncoderConfig {
                face_channels: vec![4, 8],
                edge_channels: vec![4],
                hidden: 16,
                rounds: 2,
                pooling: Pooling::Mean,
            },
            decoder: DecoderConfig {
                width,
                depth: 2,
                ..DecoderConfig::crash_box_desk()
            },
            init_seed: 3,
        }
    }

    fn crash_graph() -> GraphFeatures {
        let (_, g) = generate::<f64>(&ParamVector::crash_box(0.8, 1.0, 2.0, 0.05)).unwrap();
        GraphFeatures::new(&g).unwrap()
    }

    #[test]
    fn face_permutation_does_not_change_the_latent() {
        let m = PretrainModel::new(desk(16)).unwrap();
        let (_, g) = generate::<f64>(&ParamVector::crash_box(0.8, 1.0, 2.0, 0.05)).unwrap();
        let n = g.faces.len();
        let perm: Vec<usize> = (0..n).map(|i| (i * 5 + 3) % n).collect();
        let a = m.encode(&GraphFeatures::new(&g).unwrap()).unwrap();
        let b = m.encode(&GraphFeatures::new(&g.permute_faces(&perm)).unwrap()).unwrap();
        assert!(a.distance(&b) < 1e-9);
        assert_eq!(a, m.encode(&GraphFeatures::new(&g).unwrap()).unwrap());
        assert!(a.0.iter().all(|v| v.is_finite()));
        assert_eq!(a.0.len(), LATENT_DIM);
    }

    #[test]
    fn batched_decode_equals_single_decodes() {
        let m = PretrainModel::new(desk(16)).unwrap();
        let z = m.encode(&crash_graph()).unwrap();
        let pts = [[0.1, 0.2, -0.3], [0.9, -0.5, 0.0], [0.0, 0.0, 1.05]];
        let batch = m.decode(&z, &pts).unwrap();
        for (p, b) in pts.iter().zip(&batch) {
            let single = m.decode(&z, &[*p]).unwrap()[0];
            assert!((single - b).abs() < 1e-12);
        }
    }

    #[test]
    fn decoder_split_matches_dense_first_layer() {
        let m = PretrainModel::new(desk(8)).unwrap();
        let z = m.encode(&crash_graph()).unwrap();
        let p = [0.3, -0.1, 0.7];
        let got = m.decode(&z, &[p]).unwrap()[0];
        // Dense evaluation on concat(z, xyz).
        let get = |n: &str| m.params.get(m.params.find(n).unwrap()).data().to_vec();
        let (wx, wz, b0) = (get("dec.l0.w"), get("dec.l0.z"), get("dec.l0.b"));
        let elu = |v: f64| if v > 0.0 { v } else { v.exp_m1() };
        let mut h: Vec<f64> = (0..8)
            .map(|j| {
                let mut s = b0[j];
                for (i, zi) in z.0.iter().enumerate() {
                    s += zi * wz[i * 8 + j];
                }
                for (i, xi) in p.iter().enumerate() {
                    s += xi * wx[i * 8 + j];
                }
                elu(s)
            })
            .collect();
        let (w1, b1) = (get("dec.l1.w"), get("dec.l1.b"));
        h = (0..8)
            .map(|j| elu(b1[j] + (0..8).map(|i| h[i] * w1[i * 8 + j]).sum::<f64>()))
            .collect();
        let (wo, bo) = (get("dec.out.w"), get("dec.out.b"));
        let want = bo[0] + (0..8).map(|i| h[i] * wo[i]).sum::<f64>();
        assert!((got - want).abs() < 1e-12);
    }

    #[test]
    fn full_scale_encoder_size() {
        let cfg = ModelConfig {
            encoder: EncoderConfig::full_scale(),
            decoder: DecoderConfig::crash_box_desk(),
            init_seed: 0,
        };
        let m = PretrainModel::new(cfg).unwrap();
        let n = m.encoder_param_count() as f64;
        assert!((n / 6.07e6 - 1.0).abs() < 0.05, "encoder has {n} parameters");
    }

    #[test]
    fn every_layer_receives_gradient() {
        let m = PretrainModel::new(desk(16)).unwrap();
        let g = crash_graph();
        let mut tape = Tape::new();
        let z = m.encoder.forward(&m.params, &mut tape, &[&g], true).unwrap();
        let pts = [[0.1, 0.2, 0.3], [-0.4, 0.1, 0.9]];
        let loc = tape.constant(m.decoder.locality(&pts).unwrap());
        let y = m.decoder.forward(&m.params, &mut tape, z, &[0, 0], loc, true).unwrap();
        let t = tape.constant(crate::tensor::Tensor::matrix(2, 1, vec![1.0, -1.0]).unwrap());
        let l = tape.mse(y, t).unwrap();
        let grads = tape.backward(l).unwrap().for_params(&m.params);
        for id in m.params.ids() {
            let g = grads[id.0]
                .as_ref()
                .unwrap_or_else(|| panic!("{} has no gradient", m.params.name(id)));
            assert!(
                g.data().iter().any(|v| *v != 0.0),
                "{} gradient is zero",
                m.params.name(id)
            );
        }
    }

    #[test]
    fn save_and_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let m = PretrainModel::new(desk(8)).unwrap();
        let path = dir.path().join("model.tkpt");
        m.save(&path, None).unwrap();
        let (back, _) = PretrainModel::load(&path).unwrap();
        assert_eq!(back.params.tensors(), m.params.tensors());
        assert_eq!(back.config, m.config);
    }
}
