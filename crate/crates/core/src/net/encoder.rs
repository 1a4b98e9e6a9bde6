use rand::Rng;
use serde::{Deserialize, Serialize};

use super::layers::{load, Linear};
use super::{LatentCode, LATENT_DIM};
use crate::geom::{BrepGraph, CHANNELS, CURVE, GRID};
use crate::tensor::{ParamId, ParamStore, Tape, Tensor, Var};
use crate::{Error, Result};

/// Reduction applied over the pixels of a face patch and the points of an edge curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Pooling {
    Mean,
    Max,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderConfig {
    pub face_channels: Vec<usize>,
    pub edge_channels: Vec<usize>,
    pub hidden: usize,
    pub rounds: usize,
    pub pooling: Pooling,
}

impl EncoderConfig {
    /// Small encoder used for all trained runs in this repository.
    pub fn desk() -> Self {
        Self {
            face_channels: vec![16, 32],
            edge_channels: vec![16, 32],
            hidden: 64,
            rounds: 3,
            pooling: Pooling::Mean,
        }
    }

    /// Reference-scale layout (about 6.07M trainable scalars); instantiated, never trained here.
    pub fn full_scale() -> Self {
        Self {
            face_channels: vec![64, 128, 256],
            edge_channels: vec![64, 128, 256],
            hidden: 752,
            rounds: 3,
            pooling: Pooling::Mean,
        }
    }
}

/// A validated graph flattened into the row layouts the encoder consumes.
#[derive(Debug, Clone)]
pub struct GraphFeatures {
    /// `[faces * GRID * GRID, CHANNELS]`, row-major over `(face, u, v)`.
    pub face_rows: Vec<f64>,
    /// `[edges * CURVE, CHANNELS]`.
    pub edge_rows: Vec<f64>,
    pub n_faces: usize,
    pub n_edges: usize,
    /// Directed messages `(source face, target face, edge)`, both directions per adjacency.
    pub messages: Vec<(usize, usize, usize)>,
}

impl GraphFeatures {
    pub fn new(g: &BrepGraph<f64>) -> Result<Self> {
        g.validate()?;
        if g.faces.is_empty() {
            return Err(Error::Graph("graph has no faces".into()));
        }
        let mut face_rows = Vec::with_capacity(g.faces.len() * GRID * GRID * CHANNELS);
        for f in &g.faces {
            for row in &f.grid {
                for s in row {
                    face_rows.extend_from_slice(s);
                }
            }
        }
        let mut edge_rows = Vec::with_capacity(g.edges.len() * CURVE * CHANNELS);
        for e in &g.edges {
            for s in &e.points {
                edge_rows.extend_from_slice(s);
            }
        }
        let messages = g
            .adjacency
            .iter()
            .flat_map(|&[a, b, k]| [(b, a, k), (a, b, k)])
            .collect();
        Ok(Self {
            face_rows,
            edge_rows,
            n_faces: g.faces.len(),
            n_edges: g.edges.len(),
            messages,
        })
    }
}

#[derive(Debug, Clone)]
struct Round {
    gate: Linear,
    self_w: ParamId,
    msg_w: ParamId,
    bias: ParamId,
}

/// Face CNN + edge CNN + gated message passing + mean/max readout.
#[derive(Debug, Clone)]
pub struct Encoder {
    pub cfg: EncoderConfig,
    face_conv: Vec<(ParamId, ParamId)>,
    face_proj: Linear,
    edge_conv: Vec<(ParamId, ParamId)>,
    edge_proj: Linear,
    rounds: Vec<Round>,
    readout: Linear,
}

fn conv_stack<R: Rng>(
    store: &mut ParamStore<f64>,
    rng: &mut R,
    prefix: &str,
    taps: usize,
    channels: &[usize],
) -> Vec<(ParamId, ParamId)> {
    let mut cin = CHANNELS;
    channels
        .iter()
        .enumerate()
        .map(|(i, &cout)| {
            let fan_in = taps * cin;
            let w = store.add(
                format!("{prefix}.{i}.w"),
                Tensor::randn(vec![fan_in, cout], (1.0 / fan_in as f64).sqrt(), rng),
            );
            let b = store.add(format!("{prefix}.{i}.b"), Tensor::zeros(vec![cout]));
            cin = cout;
            (w, b)
        })
        .collect()
}

impl Encoder {
    pub fn new<R: Rng>(cfg: EncoderConfig, store: &mut ParamStore<f64>, rng: &mut R) -> Result<Self> {
        if cfg.face_channels.is_empty() || cfg.edge_channels.is_empty() || cfg.hidden == 0 {
            return Err(Error::Config(
                "encoder needs conv channels and a nonzero hidden width".into(),
            ));
        }
        let h = cfg.hidden;
        let face_conv = conv_stack(store, rng, "enc.face", 9, &cfg.face_channels);
        let face_proj = Linear::new(store, rng, "enc.face.proj", *cfg.face_channels.last().unwrap(), h);
        let edge_conv = conv_stack(store, rng, "enc.edge", 3, &cfg.edge_channels);
        let edge_proj = Linear::new(store, rng, "enc.edge.proj", *cfg.edge_channels.last().unwrap(), h);
        let std = (1.0 / h as f64).sqrt();
        let rounds = (0..cfg.rounds)
            .map(|r| Round {
                gate: Linear::new(store, rng, &format!("enc.mp{r}.gate"), h, h),
                self_w: store.add(format!("enc.mp{r}.self"), Tensor::randn(vec![h, h], std, rng)),
                msg_w: store.add(format!("enc.mp{r}.msg"), Tensor::randn(vec![h, h], std, rng)),
                bias: store.add(format!("enc.mp{r}.b"), Tensor::zeros(vec![h])),
            })
            .collect();
        let readout = Linear::new(store, rng, "enc.readout", 2 * h, LATENT_DIM);
        Ok(Self {
            cfg,
            face_conv,
            face_proj,
            edge_conv,
            edge_proj,
            rounds,
            readout,
        })
    }

    fn pool(&self, tape: &mut Tape<f64>, x: Var, offsets: &[usize]) -> Result<Var> {
        match self.cfg.pooling {
            Pooling::Mean => tape.mean_pool(x, offsets),
            Pooling::Max => tape.max_pool(x, offsets),
        }
    }

    /// Latent codes `[graphs.len(), 64]` for a batch of graphs.
    ///
    /// With `trainable` the encoder weights are recorded as parameters and
    /// receive gradients; otherwise they enter the tape as constants.
    pub fn forward(
        &self,
        store: &ParamStore<f64>,
        tape: &mut Tape<f64>,
        graphs: &[&GraphFeatures],
        trainable: bool,
    ) -> Result<Var> {
        if graphs.is_empty() {
            return Err(Error::Graph("no graphs to encode".into()));
        }
        let n_faces: usize = graphs.iter().map(|g| g.n_faces).sum();
        let n_edges: usize = graphs.iter().map(|g| g.n_edges).sum();
        let pix = GRID * GRID;

        // Surface encoding.
        let face_rows: Vec<f64> = graphs.iter().flat_map(|g| g.face_rows.iter().copied()).collect();
        let mut x = tape.constant(Tensor::matrix(n_faces * pix, CHANNELS, face_rows)?);
        for &(w, b) in &self.face_conv {
            let (w, b) = (load(tape, store, w, trainable), load(tape, store, b, trainable));
            let y = tape.conv2d(x, w, b, n_faces, GRID, GRID)?;
            x = tape.elu(y);
        }
        let offsets: Vec<usize> = (0..=n_faces).map(|i| i * pix).collect();
        let pooled = self.pool(tape, x, &offsets)?;
        let lin = self.face_proj.forward(tape, store, pooled, trainable)?;
        let mut h = tape.elu(lin);

        // Edge encoding.
        let mut edge_feat = None;
        if n_edges > 0 {
            let edge_rows: Vec<f64> = graphs.iter().flat_map(|g| g.edge_rows.iter().copied()).collect();
            let mut e = tape.constant(Tensor::matrix(n_edges * CURVE, CHANNELS, edge_rows)?);
            for &(w, b) in &self.edge_conv {
                let (w, b) = (load(tape, store, w, trainable), load(tape, store, b, trainable));
                let y = tape.conv1d(e, w, b, n_edges, CURVE)?;
                e = tape.elu(y);
            }
            let offsets: Vec<usize> = (0..=n_edges).map(|i| i * CURVE).collect();
            let pooled = self.pool(tape, e, &offsets)?;
            let lin = self.edge_proj.forward(tape, store, pooled, trainable)?;
            edge_feat = Some(tape.elu(lin));
        }

        // Graph encoding: gated message passing over the face adjacency.
        let (mut src, mut dst, mut eid) = (Vec::new(), Vec::new(), Vec::new());
        let (mut face_off, mut edge_off) = (0, 0);
        for g in graphs {
            for &(s, d, k) in &g.messages {
                src.push(face_off + s);
                dst.push(face_off + d);
                eid.push(edge_off + k);
            }
            face_off += g.n_faces;
            edge_off += g.n_edges;
        }
        for round in &self.rounds {
            let self_w = load(tape, store, round.self_w, trainable);
            let mut pre = tape.matmul(h, self_w)?;
            if let (Some(ef), false) = (edge_feat, src.is_empty()) {
                let gate_lin = round.gate.forward(tape, store, ef, trainable)?;
                let gate = tape.sigmoid(gate_lin);
                let hs = tape.gather_rows(h, &src)?;
                let gs = tape.gather_rows(gate, &eid)?;
                let msg = tape.mul(hs, gs)?;
                let agg = tape.scatter_add_rows(msg, &dst, n_faces)?;
                let msg_w = load(tape, store, round.msg_w, trainable);
                let m = tape.matmul(agg, msg_w)?;
                pre = tape.add(pre, m)?;
            }
            let b = load(tape, store, round.bias, trainable);
            let pre = tape.add_bias(pre, b)?;
            h = tape.elu(pre);
        }

        // Readout.
        let mut graph_off = vec![0];
        for g in graphs {
            graph_off.push(graph_off.last().unwrap() + g.n_faces);
        }
        let mean = tape.mean_pool(h, &graph_off)?;
        let max = tape.max_pool(h, &graph_off)?;
        let both = tape.concat(&[mean, max])?;
        self.readout.forward(tape, store, both, trainable)
    }

    pub fn encode(&self, store: &ParamStore<f64>, graph: &GraphFeatures) -> Result<LatentCode> {
        Ok(self.encode_many(store, &[graph])?.remove(0))
    }

    pub fn encode_many(&self, store: &ParamStore<f64>, graphs: &[&GraphFeatures]) -> Result<Vec<LatentCode>> {
        let mut tape = Tape::new();
        let z = self.forward(store, &mut tape, graphs, false)?;
        let t = tape.value(z);
        Ok((0..graphs.len()).map(|i| LatentCode(t.row(i).to_vec())).collect())
    }
}
