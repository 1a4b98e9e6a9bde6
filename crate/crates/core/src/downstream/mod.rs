//! Few-shot regression of structural responses from parameters or latent codes.
//!
//! Four input strategies share one head architecture and differ only in what
//! feeds it: the normalized design parameters, frozen pretrained latents,
//! pretrained latents with the encoder fine-tuned at a reduced rate, or an
//! encoder trained from scratch alongside the head.

mod proxy;
mod report;
mod source;

pub use proxy::{displacement_at, fixed_end_z, frame_grid, proxy_displacement, proxy_reaction_force};
pub use report::{sweep_svg, write_results_csv};
pub use source::{Access, AccessKind, GeometrySource, GridSource, Phase, RecordingSource};

use std::hash::{DefaultHasher, Hasher};
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::net::{Encoder, EncoderConfig, GraphFeatures, Linear, PretrainModel, LATENT_DIM};
use crate::tensor::{Adam, ParamStore, Tape, Tensor, Var};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TaskKind {
    ReactionForce,
    DeformationField,
}

impl TaskKind {
    pub fn name(self) -> &'static str {
        match self {
            TaskKind::ReactionForce => "reaction_force",
            TaskKind::DeformationField => "deformation_field",
        }
    }

    fn out_dim(self) -> usize {
        match self {
            TaskKind::ReactionForce => 1,
            TaskKind::DeformationField => 3,
        }
    }

    /// Per-row features appended to the geometry input: the frame, plus the
    /// node position for field targets.
    fn extra_dim(self) -> usize {
        match self {
            TaskKind::ReactionForce => 1,
            TaskKind::DeformationField => 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Strategy {
    Parametric,
    LatentDirect,
    Finetune,
    Scratch,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [
        Strategy::Parametric,
        Strategy::LatentDirect,
        Strategy::Finetune,
        Strategy::Scratch,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Parametric => "parametric",
            Strategy::LatentDirect => "latent_direct",
            Strategy::Finetune => "finetune",
            Strategy::Scratch => "scratch",
        }
    }

    pub fn input_dim(self) -> usize {
        match self {
            Strategy::Parametric => 4,
            _ => LATENT_DIM,
        }
    }

    pub fn needs_pretrained(self) -> bool {
        matches!(self, Strategy::LatentDirect | Strategy::Finetune)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeadConfig {
    pub width: usize,
    pub depth: usize,
    pub learning_rate: f64,
    pub iterations: usize,
    /// Rows per step; smaller training sets are used whole.
    pub batch_rows: usize,
}

impl Default for HeadConfig {
    fn default() -> Self {
        Self {
            width: 256,
            depth: 4,
            learning_rate: 2e-3,
            iterations: 4000,
            batch_rows: 512,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FewshotConfig {
    pub head: HeadConfig,
    pub frames: usize,
    /// Encoder learning rate relative to the head when fine-tuning.
    pub finetune_lr_scale: f64,
    /// Encoder built for the scratch strategy when no pretrained model is given.
    pub scratch_encoder: EncoderConfig,
}

impl Default for FewshotConfig {
    fn default() -> Self {
        Self {
            head: HeadConfig::default(),
            frames: 50,
            finetune_lr_scale: 0.01,
            scratch_encoder: EncoderConfig::desk(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FewshotRun {
    pub strategy: Strategy,
    pub task: TaskKind,
    pub shots: usize,
    pub seed: u64,
    pub test_mse: f64,
    pub wall_time: f64,
    /// Hash of every training target the run consumed.
    pub target_digest: u64,
}

/// Per-dimension z-score statistics; dimensions without spread pass through.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatentStats {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl LatentStats {
    pub fn fit(latents: &[Vec<f64>]) -> Self {
        let d = latents.first().map_or(0, Vec::len);
        let n = latents.len().max(1) as f64;
        let mut mean = vec![0.0; d];
        let mut scale = vec![1.0; d];
        for j in 0..d {
            let m = latents.iter().map(|z| z[j]).sum::<f64>() / n;
            let var = latents.iter().map(|z| (z[j] - m).powi(2)).sum::<f64>() / n;
            let sd = var.sqrt();
            if sd > 1e-12 * m.abs().max(1.0) {
                mean[j] = m;
                scale[j] = sd;
            }
        }
        Self { mean, scale }
    }

    pub fn apply(&self, z: &[f64]) -> Vec<f64> {
        z.iter()
            .zip(self.mean.iter().zip(&self.scale))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }
}

pub fn normalize_latents(latents: &[Vec<f64>], stats: &LatentStats) -> Vec<Vec<f64>> {
    latents.iter().map(|z| stats.apply(z)).collect()
}

/// The first `shots` entries of a seeded shuffle of `pool`.
///
/// Depends only on `(pool, shots, seed)`, so every strategy trains on the same
/// geometries. Requests beyond the pool size are clamped with a warning.
pub fn select_shots(pool: &[usize], shots: usize, seed: u64) -> Result<Vec<usize>> {
    if shots < 2 {
        return Err(Error::InsufficientShots(shots));
    }
    if pool.len() < 2 {
        return Err(Error::InsufficientShots(pool.len()));
    }
    if shots > pool.len() {
        log::warn!(
            "{shots} shots requested but only {} training geometries exist",
            pool.len()
        );
    }
    let mut order = pool.to_vec();
    order.sort_unstable();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5407_5eed);
    order.shuffle(&mut rng);
    order.truncate(shots.min(pool.len()));
    Ok(order)
}

/// Targets of one geometry: `[frame]` or `[frame][node][axis]`.
fn targets_for(source: &dyn GeometrySource, task: TaskKind, i: usize, frames: &[f64]) -> Vec<f64> {
    let p = source.params(i);
    match task {
        TaskKind::ReactionForce => proxy_reaction_force(&p, frames),
        TaskKind::DeformationField => proxy_displacement(&p, source.nodes(i), frames),
    }
}

/// One row of the flattened (geometry, frame, node) training set.
#[derive(Debug, Clone, Copy)]
struct RowRef {
    geo: usize,
    frame: usize,
    node: usize,
}

struct TrainingSet {
    frames: Vec<f64>,
    nodes: Vec<Vec<[f64; 3]>>,
    targets: Vec<Vec<f64>>,
    mean: f64,
    std: f64,
    digest: u64,
}

impl TrainingSet {
    fn build(source: &dyn GeometrySource, task: TaskKind, shots: &[usize], frames: Vec<f64>) -> Result<Self> {
        let targets: Vec<Vec<f64>> = shots.iter().map(|&i| targets_for(source, task, i, &frames)).collect();
        let nodes = match task {
            TaskKind::ReactionForce => vec![Vec::new(); shots.len()],
            TaskKind::DeformationField => shots.iter().map(|&i| source.nodes(i).to_vec()).collect(),
        };
        let mut hasher = DefaultHasher::new();
        let (mut sum, mut count) = (0.0, 0usize);
        for t in &targets {
            for v in t {
                hasher.write_u64(v.to_bits());
                sum += v;
            }
            count += t.len();
        }
        if count == 0 {
            return Err(Error::DegenerateTargets("no training targets".into()));
        }
        let mean = sum / count as f64;
        let var = targets.iter().flatten().map(|v| (v - mean).powi(2)).sum::<f64>() / count as f64;
        if var.is_nan() || var <= 0.0 {
            return Err(Error::DegenerateTargets("training targets are constant".into()));
        }
        Ok(Self {
            frames,
            nodes,
            targets,
            mean,
            std: var.sqrt(),
            digest: hasher.finish(),
        })
    }

    fn nodes_per_geo(&self, task: TaskKind) -> usize {
        match task {
            TaskKind::ReactionForce => 1,
            TaskKind::DeformationField => self.nodes[0].len(),
        }
    }

    fn row_count(&self, task: TaskKind) -> usize {
        self.targets.len() * self.frames.len() * self.nodes_per_geo(task)
    }

    fn row(&self, task: TaskKind, r: usize) -> RowRef {
        let per_geo = self.frames.len() * self.nodes_per_geo(task);
        let (geo, rest) = (r / per_geo, r % per_geo);
        let n = self.nodes_per_geo(task);
        RowRef {
            geo,
            frame: rest / n,
            node: rest % n,
        }
    }
}

fn row_features(task: TaskKind, frame: f64, node: Option<[f64; 3]>, out: &mut Vec<f64>) {
    out.push(frame);
    if task == TaskKind::DeformationField {
        out.extend(node.expect("field rows carry a node"));
    }
}

/// Shared MLP head: `depth` ELU layers of `width`, then a linear output.
struct Head {
    hidden: Vec<Linear>,
    out: Linear,
}

impl Head {
    fn new<R: Rng>(store: &mut ParamStore<f64>, rng: &mut R, input: usize, output: usize, cfg: &HeadConfig) -> Self {
        let mut fan_in = input;
        let hidden = (0..cfg.depth)
            .map(|l| {
                let layer = Linear::new(store, rng, &format!("head.l{l}"), fan_in, cfg.width);
                fan_in = cfg.width;
                layer
            })
            .collect();
        let out = Linear::new(store, rng, "head.out", fan_in, output);
        Self { hidden, out }
    }

    fn forward(&self, tape: &mut Tape<f64>, store: &ParamStore<f64>, mut x: Var, trainable: bool) -> Result<Var> {
        for layer in &self.hidden {
            let y = layer.forward(tape, store, x, trainable)?;
            x = tape.elu(y);
        }
        self.out.forward(tape, store, x, trainable)
    }
}

/// How geometry inputs are produced for a strategy.
enum InputPath {
    /// Precomputed rows, one per geometry; latents carry their shot statistics.
    Fixed(Option<LatentStats>),
    /// Encoder in `store`, optionally followed by a fixed z-score.
    Encoder {
        encoder: Encoder,
        stats: Option<LatentStats>,
    },
}

fn matrix(rows: &[Vec<f64>]) -> Result<Tensor<f64>> {
    let cols = rows.first().map_or(0, Vec::len);
    Tensor::matrix(rows.len(), cols, rows.iter().flatten().copied().collect())
}

/// `z * diag(1 / scale) - mean / scale` on the tape.
fn affine_normalize(tape: &mut Tape<f64>, z: Var, stats: &LatentStats) -> Result<Var> {
    let d = stats.mean.len();
    let mut diag = vec![0.0; d * d];
    for j in 0..d {
        diag[j * d + j] = 1.0 / stats.scale[j];
    }
    let diag = tape.constant(Tensor::matrix(d, d, diag)?);
    let shift = tape.constant(Tensor::new(
        vec![d],
        stats.mean.iter().zip(&stats.scale).map(|(m, s)| -m / s).collect(),
    )?);
    let scaled = tape.matmul(z, diag)?;
    tape.add_bias(scaled, shift)
}

fn encode_graphs(
    tape: &mut Tape<f64>,
    store: &ParamStore<f64>,
    encoder: &Encoder,
    stats: Option<&LatentStats>,
    graphs: &[&GraphFeatures],
    trainable: bool,
) -> Result<Var> {
    let z = encoder.forward(store, tape, graphs, trainable)?;
    match stats {
        Some(s) => affine_normalize(tape, z, s),
        None => Ok(z),
    }
}

/// Trains one head on `shots` training geometries and scores it on `test`.
#[allow(clippy::too_many_arguments)]
pub fn fewshot_run(
    source: &dyn GeometrySource,
    strategy: Strategy,
    shots: usize,
    task: TaskKind,
    pretrained: Option<&PretrainModel>,
    train_pool: &[usize],
    test: &[usize],
    seed: u64,
    cfg: &FewshotConfig,
) -> Result<FewshotRun> {
    if strategy.needs_pretrained() && pretrained.is_none() {
        return Err(Error::Config(format!("{} needs a pretrained model", strategy.name())));
    }
    if test.is_empty() {
        return Err(Error::Config("empty test split".into()));
    }
    if let Some(&i) = test.iter().find(|i| train_pool.contains(i)) {
        return Err(Error::Config(format!(
            "geometry {i} is in both the training pool and the test split"
        )));
    }
    let start = Instant::now();
    source.begin_phase(Phase::Train);
    let shot_ids = select_shots(train_pool, shots, seed)?;
    let data = TrainingSet::build(source, task, &shot_ids, frame_grid(cfg.frames))?;
    let shot_graphs = || -> Vec<&GraphFeatures> { shot_ids.iter().map(|&i| source.graph(i)).collect() };

    let mut store = ParamStore::new();
    let mut enc_rng = ChaCha8Rng::seed_from_u64(seed);
    enc_rng.set_stream(3);
    let (path, fixed_inputs) = match strategy {
        Strategy::Parametric => {
            let rows: Vec<Vec<f64>> = shot_ids.iter().map(|&i| source.normalized_params(i).to_vec()).collect();
            (InputPath::Fixed(None), Some(rows))
        }
        Strategy::LatentDirect => {
            let model = pretrained.expect("checked above");
            let raw: Vec<Vec<f64>> = model
                .encoder
                .encode_many(&model.params, &shot_graphs())?
                .into_iter()
                .map(|z| z.0)
                .collect();
            let stats = LatentStats::fit(&raw);
            let rows = normalize_latents(&raw, &stats);
            (InputPath::Fixed(Some(stats)), Some(rows))
        }
        Strategy::Finetune => {
            let model = pretrained.expect("checked above");
            let encoder = Encoder::new(model.encoder.cfg.clone(), &mut store, &mut enc_rng)?;
            for id in store.ids().collect::<Vec<_>>() {
                let src = model
                    .params
                    .find(store.name(id))
                    .ok_or_else(|| Error::Config(format!("pretrained model lacks {}", store.name(id))))?;
                *store.get_mut(id) = model.params.get(src).clone();
            }
            let raw: Vec<Vec<f64>> = encoder
                .encode_many(&store, &shot_graphs())?
                .into_iter()
                .map(|z| z.0)
                .collect();
            let stats = LatentStats::fit(&raw);
            (
                InputPath::Encoder {
                    encoder,
                    stats: Some(stats),
                },
                None,
            )
        }
        Strategy::Scratch => {
            let enc_cfg = pretrained.map_or_else(|| cfg.scratch_encoder.clone(), |m| m.encoder.cfg.clone());
            let encoder = Encoder::new(enc_cfg, &mut store, &mut enc_rng)?;
            (InputPath::Encoder { encoder, stats: None }, None)
        }
    };
    let n_encoder = store.len();
    let mut head_rng = ChaCha8Rng::seed_from_u64(seed);
    head_rng.set_stream(1);
    let in_dim = strategy.input_dim() + task.extra_dim();
    let head = Head::new(&mut store, &mut head_rng, in_dim, task.out_dim(), &cfg.head);

    let lr = cfg.head.learning_rate;
    let mut head_adam = Adam::new(&store, lr);
    let enc_lr = if strategy == Strategy::Finetune {
        lr * cfg.finetune_lr_scale
    } else {
        lr
    };
    let mut enc_adam = Adam::new(&store, enc_lr);
    let fixed = fixed_inputs.as_deref().map(matrix).transpose()?;

    let total_rows = data.row_count(task);
    let mut batch_rng = ChaCha8Rng::seed_from_u64(seed);
    batch_rng.set_stream(2);
    let full: Vec<usize> = (0..total_rows).collect();
    for it in 0..cfg.head.iterations {
        let decay = cosine_factor(it, cfg.head.iterations);
        head_adam.lr = lr * decay;
        enc_adam.lr = enc_lr * decay;
        let rows: Vec<usize> = if total_rows <= cfg.head.batch_rows {
            full.clone()
        } else {
            (0..cfg.head.batch_rows)
                .map(|_| batch_rng.random_range(0..total_rows))
                .collect()
        };
        let mut tape = Tape::new();
        let geo_inputs = match &path {
            InputPath::Fixed(_) => tape.constant(fixed.clone().expect("fixed inputs")),
            InputPath::Encoder { encoder, stats } => {
                encode_graphs(&mut tape, &store, encoder, stats.as_ref(), &shot_graphs(), true)?
            }
        };
        let refs: Vec<RowRef> = rows.iter().map(|&r| data.row(task, r)).collect();
        let geo_idx: Vec<usize> = refs.iter().map(|r| r.geo).collect();
        let mut extra = Vec::with_capacity(refs.len() * task.extra_dim());
        let mut target = Vec::with_capacity(refs.len() * task.out_dim());
        for r in &refs {
            let node = (task == TaskKind::DeformationField).then(|| data.nodes[r.geo][r.node]);
            row_features(task, data.frames[r.frame], node, &mut extra);
            let o = task.out_dim();
            let at = (r.frame * data.nodes_per_geo(task) + r.node) * o;
            target.extend(
                data.targets[r.geo][at..at + o]
                    .iter()
                    .map(|v| (v - data.mean) / data.std),
            );
        }
        let g = tape.gather_rows(geo_inputs, &geo_idx)?;
        let e = tape.constant(Tensor::matrix(refs.len(), task.extra_dim(), extra)?);
        let x = tape.concat(&[g, e])?;
        let pred = head.forward(&mut tape, &store, x, true)?;
        let t = tape.constant(Tensor::matrix(refs.len(), task.out_dim(), target)?);
        let loss = tape.mse(pred, t)?;
        let value = tape.value(loss).item();
        if !value.is_finite() {
            let max_abs_prediction = tape.value(pred).data().iter().fold(0.0f64, |m, v| m.max(v.abs()));
            return Err(Error::NonFiniteLoss {
                iteration: it as u64,
                geometry_ids: shot_ids.clone(),
                max_abs_prediction,
            });
        }
        if it % 500 == 0 {
            log::debug!(
                "{} {} shots, step {it}: loss {value:e}",
                strategy.name(),
                shot_ids.len()
            );
        }
        let grads = tape.backward(loss)?.for_params(&store);
        let (enc_grads, head_grads): (Vec<_>, Vec<_>) = grads
            .into_iter()
            .enumerate()
            .map(|(i, g)| if i < n_encoder { (g, None) } else { (None, g) })
            .unzip();
        head_adam.step(&mut store, &head_grads)?;
        if n_encoder > 0 {
            enc_adam.step(&mut store, &enc_grads)?;
        }
    }

    source.begin_phase(Phase::Evaluate);
    let test_inputs: Vec<Vec<f64>> = match (&path, strategy) {
        (InputPath::Fixed(None), _) => test.iter().map(|&i| source.normalized_params(i).to_vec()).collect(),
        (InputPath::Fixed(Some(stats)), _) => {
            let model = pretrained.expect("checked above");
            let graphs: Vec<&GraphFeatures> = test.iter().map(|&i| source.graph(i)).collect();
            let raw = model.encoder.encode_many(&model.params, &graphs)?;
            raw.iter().map(|z| stats.apply(&z.0)).collect()
        }
        (InputPath::Encoder { encoder, stats }, _) => {
            let graphs: Vec<&GraphFeatures> = test.iter().map(|&i| source.graph(i)).collect();
            let mut tape = Tape::new();
            let z = encode_graphs(&mut tape, &store, encoder, stats.as_ref(), &graphs, false)?;
            let t = tape.value(z);
            (0..graphs.len()).map(|i| t.row(i).to_vec()).collect()
        }
    };
    let frames = &data.frames;
    let per_geo: Vec<(f64, usize)> = test
        .iter()
        .zip(&test_inputs)
        .map(|(&i, input)| squared_error(source, task, i, input, frames, &head, &store, &data))
        .collect::<Result<_>>()?;
    let (sse, count) = per_geo.iter().fold((0.0, 0), |(s, c), &(a, b)| (s + a, c + b));
    Ok(FewshotRun {
        strategy,
        task,
        shots: shot_ids.len(),
        seed,
        test_mse: sse / count as f64,
        wall_time: start.elapsed().as_secs_f64(),
        target_digest: data.digest,
    })
}

/// Cosine learning-rate multiplier, from 1 down to 0.01 at the last step.
fn cosine_factor(it: usize, total: usize) -> f64 {
    let progress = it as f64 / total.max(2).saturating_sub(1) as f64;
    0.01 + 0.99 * 0.5 * (1.0 + (std::f64::consts::PI * progress).cos())
}

/// Rows predicted per tape during evaluation.
const EVAL_CHUNK: usize = 4096;

#[allow(clippy::too_many_arguments)]
fn squared_error(
    source: &dyn GeometrySource,
    task: TaskKind,
    i: usize,
    input: &[f64],
    frames: &[f64],
    head: &Head,
    store: &ParamStore<f64>,
    data: &TrainingSet,
) -> Result<(f64, usize)> {
    let truth = targets_for(source, task, i, frames);
    let nodes: Vec<Option<[f64; 3]>> = match task {
        TaskKind::ReactionForce => vec![None],
        TaskKind::DeformationField => source.nodes(i).iter().map(|&n| Some(n)).collect(),
    };
    let rows: Vec<(f64, Option<[f64; 3]>)> = frames
        .iter()
        .flat_map(|&f| nodes.iter().map(move |&n| (f, n)))
        .collect();
    let o = task.out_dim();
    let mut sse = 0.0;
    for (c, chunk) in rows.chunks(EVAL_CHUNK).enumerate() {
        let mut x = Vec::with_capacity(chunk.len() * (input.len() + task.extra_dim()));
        for &(f, n) in chunk {
            x.extend_from_slice(input);
            row_features(task, f, n, &mut x);
        }
        let mut tape = Tape::new();
        let xv = tape.constant(Tensor::matrix(chunk.len(), input.len() + task.extra_dim(), x)?);
        let pred = head.forward(&mut tape, store, xv, false)?;
        let base = c * EVAL_CHUNK * o;
        for (k, p) in tape.value(pred).data().iter().enumerate() {
            let y = p * data.std + data.mean;
            sse += (y - truth[base + k]).powi(2);
        }
    }
    Ok((sse, truth.len()))
}

/// Which runs a sweep performs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub task: TaskKind,
    pub strategies: Vec<Strategy>,
    pub shots: Vec<usize>,
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub fewshot: FewshotConfig,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            task: TaskKind::ReactionForce,
            strategies: Strategy::ALL.to_vec(),
            shots: vec![10, 20, 50, 100],
            seeds: vec![0, 1, 2],
            fewshot: FewshotConfig::default(),
        }
    }
}

/// Every (strategy, shots, seed) combination, run in parallel, reported in
/// strategy-major order. Strategies that need a pretrained model are skipped
/// with a warning when none is supplied.
pub fn run_sweep(
    source: &dyn GeometrySource,
    pretrained: Option<&PretrainModel>,
    train_pool: &[usize],
    test: &[usize],
    sweep: &SweepConfig,
) -> Result<Vec<FewshotRun>> {
    let mut jobs = Vec::new();
    for &s in &sweep.strategies {
        if s.needs_pretrained() && pretrained.is_none() {
            log::warn!("skipping {}: no pretrained model", s.name());
            continue;
        }
        for &shots in &sweep.shots {
            for &seed in &sweep.seeds {
                jobs.push((s, shots, seed));
            }
        }
    }
    jobs.par_iter()
        .map(|&(s, shots, seed)| {
            fewshot_run(
                source,
                s,
                shots,
                sweep.task,
                pretrained,
                train_pool,
                test,
                seed,
                &sweep.fewshot,
            )
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn latent_normalization() {
        let z = vec![vec![1.0, 5.0, -1.0], vec![-1.0, 5.0, 1.0]];
        let s = LatentStats::fit(&z);
        let n = normalize_latents(&z, &s);
        assert_eq!(n, vec![vec![1.0, 5.0, -1.0], vec![-1.0, 5.0, 1.0]]);
        let w = vec![vec![2.0, 0.0], vec![4.0, 1.0], vec![9.0, -3.0]];
        let n = normalize_latents(&w, &LatentStats::fit(&w));
        for j in 0..2 {
            let m: f64 = n.iter().map(|r| r[j]).sum::<f64>() / 3.0;
            assert!(m.abs() < 1e-12);
            assert!(n.iter().all(|r| r[j].is_finite()));
        }
    }

    #[test]
    fn shot_selection() {
        let pool: Vec<usize> = (0..72).collect();
        assert!(matches!(select_shots(&pool, 1, 0), Err(Error::InsufficientShots(1))));
        let a = select_shots(&pool, 10, 4).unwrap();
        assert_eq!(a, select_shots(&pool, 10, 4).unwrap());
        assert_eq!(a.len(), 10);
        assert_eq!(select_shots(&pool, 100, 4).unwrap().len(), 72);
    }
}
