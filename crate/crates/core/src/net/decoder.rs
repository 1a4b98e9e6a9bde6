use rand::Rng;
use serde::{Deserialize, Serialize};

use super::fourier::{locality_batch, FourierFeatureMap, LocalityMode};
use super::layers::{load, Linear};
use super::{LatentCode, LATENT_DIM};
use crate::tensor::{ParamId, ParamStore, Tape, Tensor, Var};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecoderConfig {
    pub width: usize,
    /// Number of hidden layers.
    pub depth: usize,
    pub locality: LocalityMode,
    pub fourier_m: usize,
    pub fourier_sigma: f64,
    pub fourier_seed: u64,
    /// Re-inject the latent code into every hidden layer instead of only the first.
    pub latent_skip: bool,
}

impl DecoderConfig {
    pub fn crash_box_desk() -> Self {
        Self {
            width: 256,
            depth: 4,
            locality: LocalityMode::RawXYZ,
            fourier_m: 128,
            fourier_sigma: 6.0,
            fourier_seed: 0,
            latent_skip: false,
        }
    }

    pub fn bottle_desk() -> Self {
        Self {
            width: 512,
            depth: 5,
            locality: LocalityMode::Fourier,
            ..Self::crash_box_desk()
        }
    }

    pub fn locality_dim(&self) -> usize {
        match self.locality {
            LocalityMode::RawXYZ => 3,
            LocalityMode::Fourier => 2 * self.fourier_m,
        }
    }
}

#[derive(Debug, Clone)]
struct Hidden {
    lin: Linear,
    /// Weight applied to the latent code (first layer always, others with skip).
    latent_w: Option<ParamId>,
}

/// Fully connected SDF head over `(latent, locality features)`.
///
/// The first layer's weight is split into a latent block and a locality block so
/// the latent contribution is computed once per geometry and gathered per point;
/// this equals a dense layer on the concatenated input.
#[derive(Debug, Clone)]
pub struct Decoder {
    pub cfg: DecoderConfig,
    pub fmap: Option<FourierFeatureMap>,
    hidden: Vec<Hidden>,
    out: Linear,
}

impl Decoder {
    pub fn new<R: Rng>(cfg: DecoderConfig, store: &mut ParamStore<f64>, rng: &mut R) -> Result<Self> {
        if cfg.width == 0 || cfg.depth == 0 {
            return Err(Error::Config("decoder width and depth must be positive".into()));
        }
        let fmap = match cfg.locality {
            LocalityMode::Fourier => Some(FourierFeatureMap::new(
                cfg.fourier_m,
                cfg.fourier_sigma,
                cfg.fourier_seed,
            )?),
            LocalityMode::RawXYZ => None,
        };
        let w = cfg.width;
        let mut hidden = Vec::with_capacity(cfg.depth);
        for l in 0..cfg.depth {
            let with_latent = l == 0 || cfg.latent_skip;
            let fan_in = if l == 0 { cfg.locality_dim() } else { w } + if with_latent { LATENT_DIM } else { 0 };
            let std = (1.0 / fan_in as f64).sqrt();
            let in_dim = if l == 0 { cfg.locality_dim() } else { w };
            let lin = Linear::with_std(store, rng, &format!("dec.l{l}"), in_dim, w, std);
            let latent_w =
                with_latent.then(|| store.add(format!("dec.l{l}.z"), Tensor::randn(vec![LATENT_DIM, w], std, rng)));
            hidden.push(Hidden { lin, latent_w });
        }
        let out = Linear::new(store, rng, "dec.out", w, 1);
        Ok(Self { cfg, fmap, hidden, out })
    }

    /// Locality features for `points`, `[n, locality_dim]`.
    pub fn locality(&self, points: &[[f64; 3]]) -> Result<Tensor<f64>> {
        locality_batch(points, self.cfg.locality, self.fmap.as_ref())
    }

    /// Predictions `[n, 1]` where point `i` is decoded with latent row `owner[i]`.
    pub fn forward(
        &self,
        store: &ParamStore<f64>,
        tape: &mut Tape<f64>,
        latents: Var,
        owner: &[usize],
        locality: Var,
        trainable: bool,
    ) -> Result<Var> {
        self.forward_indexed(store, tape, latents, owner, locality, None, trainable)
    }

    /// Like [`Decoder::forward`], but query `i` reads locality row `loc_index[i]`.
    ///
    /// When many queries share a coordinate the first layer's locality product
    /// is computed once per distinct coordinate.
    #[allow(clippy::too_many_arguments)]
    pub fn forward_indexed(
        &self,
        store: &ParamStore<f64>,
        tape: &mut Tape<f64>,
        latents: Var,
        owner: &[usize],
        locality: Var,
        loc_index: Option<&[usize]>,
        trainable: bool,
    ) -> Result<Var> {
        let lat_shape = tape.value(latents).shape().to_vec();
        let loc_shape = tape.value(locality).shape().to_vec();
        let rows_ok = match loc_index {
            Some(ix) => ix.len() == owner.len(),
            None => loc_shape.first() == Some(&owner.len()),
        };
        if lat_shape.get(1) != Some(&LATENT_DIM) || loc_shape.get(1) != Some(&self.cfg.locality_dim()) || !rows_ok {
            return Err(Error::ShapeMismatch {
                op: "decode",
                shapes: format!("latents {lat_shape:?}, locality {loc_shape:?}, {} owners", owner.len()),
            });
        }
        let mut h = locality;
        for (l, layer) in self.hidden.iter().enumerate() {
            let mut pre = layer.lin.forward(tape, store, h, trainable)?;
            if let (0, Some(ix)) = (l, loc_index) {
                pre = tape.gather_rows(pre, ix)?;
            }
            if let Some(zw) = layer.latent_w {
                let zw = load(tape, store, zw, trainable);
                let per_geom = tape.matmul(latents, zw)?;
                let per_point = tape.gather_rows(per_geom, owner)?;
                pre = tape.add(pre, per_point)?;
            }
            h = tape.elu(pre);
        }
        self.out.forward(tape, store, h, trainable)
    }

    /// Predicted signed distances of `points` under one latent code.
    pub fn decode_points(&self, store: &ParamStore<f64>, latent: &LatentCode, points: &[[f64; 3]]) -> Result<Vec<f64>> {
        let loc = self.locality(points)?;
        self.decode_features(store, latent, loc)
    }

    /// Predictions for precomputed locality features `[n, locality_dim]`.
    pub fn decode_features(
        &self,
        store: &ParamStore<f64>,
        latent: &LatentCode,
        locality: Tensor<f64>,
    ) -> Result<Vec<f64>> {
        let n = locality.rows();
        let mut tape = Tape::new();
        let z = tape.constant(Tensor::matrix(1, LATENT_DIM, latent.0.clone())?);
        let loc = tape.constant(locality);
        let y = self.forward(store, &mut tape, z, &vec![0; n], loc, false)?;
        Ok(tape.value(y).data().to_vec())
    }
}
