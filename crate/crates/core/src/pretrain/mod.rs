//! Self-supervised SDF pretraining with batch-adaptive loss weighting.

mod plan;
mod weights;

pub use plan::{assemble_batch, own_counts, BatchPlan, Origin, Query};
pub use weights::{batch_weights, WeightField, WEIGHT_EPS};

use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::net::{GraphFeatures, PretrainModel, LATENT_DIM};
use crate::sdf::SdfSampleSet;
use crate::tensor::{write_checkpoint, Adam, Checkpoint, Tape, Tensor};
use crate::{Error, Result};

fn default_ema() -> f64 {
    0.05
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingConfig {
    pub batch_size: usize,
    pub k_neighbors: usize,
    pub n_coords: usize,
    pub n_random: usize,
    pub iterations: u64,
    pub learning_rate: f64,
    pub seed: u64,
    pub use_batch_attention: bool,
    pub interpolation_enabled: bool,
    /// Checkpoint period in steps; 0 writes only the final checkpoint.
    #[serde(default)]
    pub checkpoint_every: u64,
    /// Smoothing factor of the exponential moving average in the loss curve.
    #[serde(default = "default_ema")]
    pub ema_alpha: f64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            batch_size: 4,
            k_neighbors: 8,
            n_coords: 1024,
            n_random: 102,
            iterations: 5000,
            learning_rate: 1e-4,
            seed: 0,
            use_batch_attention: true,
            interpolation_enabled: true,
            checkpoint_every: 0,
            ema_alpha: default_ema(),
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.batch_size == 0 || self.n_coords == 0 || self.k_neighbors == 0 {
            return bad("batch size, coordinate count and K must be positive".into());
        }
        if self.n_random > self.n_coords {
            return bad(format!("n_random {} exceeds n_coords {}", self.n_random, self.n_coords));
        }
        if self.use_batch_attention && self.batch_size < 2 {
            return bad("batch attention needs at least two geometries per batch".into());
        }
        if self.n_coords - self.n_random < self.batch_size {
            return bad("every geometry needs at least one own coordinate per step".into());
        }
        if !self.learning_rate.is_finite() || self.learning_rate <= 0.0 || !(0.0..=1.0).contains(&self.ema_alpha) {
            return bad("learning rate must be positive and ema_alpha in [0, 1]".into());
        }
        Ok(())
    }
}

/// Training geometries: encoder inputs and their precomputed sample sets.
#[derive(Debug, Clone)]
pub struct PretrainDataset {
    pub graphs: Vec<GraphFeatures>,
    pub sets: Vec<SdfSampleSet>,
    /// Identifier of each entry (e.g. its design-grid index) used in diagnostics.
    pub ids: Vec<usize>,
}

impl PretrainDataset {
    pub fn len(&self) -> usize {
        self.graphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graphs.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossRecord {
    pub step: u64,
    pub raw_loss: f64,
    pub ema_loss: f64,
    pub mean_weight: f64,
    pub max_weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepStats {
    pub loss: f64,
    pub mean_weight: f64,
    pub max_weight: f64,
}

/// Loss multipliers for every query of `plan`, in query order.
pub fn plan_weights(plan: &BatchPlan, use_attention: bool) -> Vec<f64> {
    match (use_attention, plan.value_matrix()) {
        (true, Some(values)) => batch_weights(&values, WEIGHT_EPS).w.into_iter().flatten().collect(),
        _ => vec![1.0; plan.queries.len()],
    }
}

/// Forward, weighted loss, backward and one Adam update. Returns the pre-update loss.
pub fn train_step(
    model: &mut PretrainModel,
    adam: &mut Adam<f64>,
    plan: &BatchPlan,
    graphs: &[&GraphFeatures],
    use_attention: bool,
    iteration: u64,
) -> Result<StepStats> {
    let weights = plan_weights(plan, use_attention);
    let mut tape = Tape::new();
    let z = model.encoder.forward(&model.params, &mut tape, graphs, true)?;
    let loc = tape.constant(model.decoder.locality(&plan.coords)?);
    let owner: Vec<usize> = plan.queries.iter().map(|q| q.slot).collect();
    let loc_index: Vec<usize> = plan.queries.iter().map(|q| q.coord).collect();
    let pred = model
        .decoder
        .forward_indexed(&model.params, &mut tape, z, &owner, loc, Some(&loc_index), true)?;
    let targets = plan.queries.iter().map(|q| q.target).collect();
    let target = tape.constant(Tensor::matrix(plan.queries.len(), 1, targets)?);
    let loss_var = tape.weighted_mse(pred, target, &weights)?;
    let loss = tape.value(loss_var).item();
    if !loss.is_finite() {
        let max_abs = tape.value(pred).data().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        return Err(Error::NonFiniteLoss {
            iteration,
            geometry_ids: plan.geometry_ids.clone(),
            max_abs_prediction: max_abs,
        });
    }
    let grads = tape.backward(loss_var)?.for_params(&model.params);
    adam.step(&mut model.params, &grads)?;
    let n = weights.len().max(1) as f64;
    Ok(StepStats {
        loss,
        mean_weight: weights.iter().sum::<f64>() / n,
        max_weight: weights.iter().copied().fold(1.0, f64::max),
    })
}

/// Dataset order for one epoch.
pub fn epoch_order(seed: u64, epoch: u64, n: usize) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_e90c);
    rng.set_stream(epoch);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    order
}

/// Random stream for the batch assembled at `step`.
pub fn step_rng(seed: u64, step: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(step);
    rng
}

/// Stateful training loop; every step depends only on (seed, step, weights),
/// so a run resumed from a checkpoint continues identically.
#[derive(Debug, Clone)]
pub struct Trainer {
    pub model: PretrainModel,
    pub adam: Adam<f64>,
    pub cfg: TrainingConfig,
    pub step: u64,
    pub ema: Option<f64>,
    pub curve: Vec<LossRecord>,
}

impl Trainer {
    pub fn new(model: PretrainModel, cfg: TrainingConfig) -> Result<Self> {
        cfg.validate()?;
        let adam = Adam::new(&model.params, cfg.learning_rate);
        Ok(Self {
            model,
            adam,
            cfg,
            step: 0,
            ema: None,
            curve: Vec::new(),
        })
    }

    /// Continues from a checkpoint written by [`Trainer::save`].
    pub fn resume(model: PretrainModel, ckpt: &Checkpoint, cfg: TrainingConfig) -> Result<Self> {
        let mut t = Self::new(model, cfg)?;
        ckpt.load_params(&mut t.model.params)?;
        ckpt.load_adam(&t.model.params, &mut t.adam)?;
        t.step = t.adam.step;
        t.ema = ckpt.get("train.ema").map(Tensor::item).filter(|v| v.is_finite());
        Ok(t)
    }

    pub fn checkpoint(&self) -> Checkpoint {
        let mut ck = Checkpoint::from_params(&self.model.params, Some(&self.adam));
        let ema = self.ema.unwrap_or(f64::NAN);
        ck.records
            .push(("train.ema".into(), Tensor::new(vec![1], vec![ema]).expect("1 value")));
        ck
    }

    /// Writes the checkpoint to `path` and the model configuration next to it.
    pub fn save(&self, path: &Path) -> Result<()> {
        write_checkpoint(&self.checkpoint(), path)?;
        std::fs::write(
            path.with_extension("json"),
            serde_json::to_string_pretty(&self.model.config)?,
        )?;
        Ok(())
    }

    /// Dataset indices for `step`: consecutive chunks of a per-epoch shuffle.
    pub fn batch_for_step(&self, step: u64, n: usize) -> Vec<usize> {
        let b = self.cfg.batch_size;
        let per_epoch = (n / b) as u64;
        let (epoch, k) = (step / per_epoch, (step % per_epoch) as usize);
        epoch_order(self.cfg.seed, epoch, n)[k * b..(k + 1) * b].to_vec()
    }

    pub fn plan_for_step(&self, data: &PretrainDataset, step: u64) -> Result<BatchPlan> {
        let idx = self.batch_for_step(step, data.len());
        let sets: Vec<&SdfSampleSet> = idx.iter().map(|&i| &data.sets[i]).collect();
        let ids: Vec<usize> = idx.iter().map(|&i| data.ids[i]).collect();
        let mut plan = assemble_batch(&sets, &ids, &self.cfg, &mut step_rng(self.cfg.seed, step))?;
        // Keep dataset positions in the plan so graphs can be looked up.
        plan.geometry_ids = idx;
        Ok(plan)
    }

    pub fn step_once(&mut self, data: &PretrainDataset) -> Result<LossRecord> {
        if data.len() < self.cfg.batch_size {
            return Err(Error::Config(format!(
                "{} training geometries cannot fill a batch of {}",
                data.len(),
                self.cfg.batch_size
            )));
        }
        let plan = self.plan_for_step(data, self.step)?;
        let graphs: Vec<&GraphFeatures> = plan.geometry_ids.iter().map(|&i| &data.graphs[i]).collect();
        let stats = train_step(
            &mut self.model,
            &mut self.adam,
            &plan,
            &graphs,
            self.cfg.use_batch_attention,
            self.step,
        )
        .map_err(|e| match e {
            Error::NonFiniteLoss {
                iteration,
                geometry_ids,
                max_abs_prediction,
            } => Error::NonFiniteLoss {
                iteration,
                geometry_ids: geometry_ids.iter().map(|&i| data.ids[i]).collect(),
                max_abs_prediction,
            },
            other => other,
        })?;
        let a = self.cfg.ema_alpha;
        let ema = match self.ema {
            None => stats.loss,
            Some(prev) => (1.0 - a) * prev + a * stats.loss,
        };
        self.ema = Some(ema);
        let rec = LossRecord {
            step: self.step,
            raw_loss: stats.loss,
            ema_loss: ema,
            mean_weight: stats.mean_weight,
            max_weight: stats.max_weight,
        };
        self.curve.push(rec);
        self.step += 1;
        Ok(rec)
    }

    /// Trains until `self.step == until`, checkpointing into `ckpt_dir` when given.
    pub fn run_until(&mut self, data: &PretrainDataset, until: u64, ckpt_dir: Option<&Path>) -> Result<()> {
        while self.step < until {
            let rec = self.step_once(data)?;
            if rec.step % 500 == 0 {
                log::info!(
                    "step {} loss {:.3e} ema {:.3e} mean w {:.3}",
                    rec.step,
                    rec.raw_loss,
                    rec.ema_loss,
                    rec.mean_weight
                );
            }
            if let Some(dir) = ckpt_dir {
                if self.cfg.checkpoint_every > 0 && self.step.is_multiple_of(self.cfg.checkpoint_every) {
                    self.save(&dir.join(format!("step_{:06}.tkpt", self.step)))?;
                }
            }
        }
        if let Some(dir) = ckpt_dir {
            self.save(&dir.join("final.tkpt"))?;
        }
        Ok(())
    }
}

/// Runs `cfg.iterations` steps from a fresh optimizer.
pub fn pretrain(
    data: &PretrainDataset,
    model: PretrainModel,
    cfg: &TrainingConfig,
    ckpt_dir: Option<&Path>,
) -> Result<Trainer> {
    let mut t = Trainer::new(model, cfg.clone())?;
    t.run_until(data, cfg.iterations, ckpt_dir)?;
    Ok(t)
}

pub fn write_loss_csv<W: Write>(curve: &[LossRecord], mut w: W) -> Result<()> {
    writeln!(w, "step,raw_loss,ema_loss,mean_weight,max_weight")?;
    for r in curve {
        writeln!(
            w,
            "{},{:e},{:e},{},{}",
            r.step, r.raw_loss, r.ema_loss, r.mean_weight, r.max_weight
        )?;
    }
    Ok(())
}

/// Latent codes of many graphs, encoded in batches of `chunk`.
pub fn encode_all(model: &PretrainModel, graphs: &[GraphFeatures], chunk: usize) -> Result<Vec<Vec<f64>>> {
    let mut out = Vec::with_capacity(graphs.len());
    for c in graphs.chunks(chunk.max(1)) {
        let refs: Vec<&GraphFeatures> = c.iter().collect();
        for z in model.encoder.encode_many(&model.params, &refs)? {
            debug_assert_eq!(z.0.len(), LATENT_DIM);
            out.push(z.0);
        }
    }
    Ok(out)
}
