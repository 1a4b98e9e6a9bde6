use rand::Rng;

use super::TrainingConfig;
use crate::sdf::{knn_interpolate, SdfSampleSet, DOMAIN};
use crate::{Error, Result};

/// Where a target value came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Origin {
    /// Stored value of the geometry that owns the coordinate.
    Own,
    /// KNN estimate at a coordinate owned by another geometry of the batch.
    KnnCross,
    /// KNN estimate at a uniformly drawn coordinate.
    KnnRandom,
}

/// One decoder evaluation in a training step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Query {
    /// Batch slot whose latent code is decoded.
    pub slot: usize,
    /// Index into [`BatchPlan::coords`].
    pub coord: usize,
    pub target: f64,
    pub origin: Origin,
}

/// Coordinates and per-geometry targets for one step.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchPlan {
    /// Dataset indices of the geometries in each batch slot.
    pub geometry_ids: Vec<usize>,
    pub coords: Vec<[f64; 3]>,
    /// Owning slot of each coordinate; `None` for uniformly drawn coordinates.
    pub coord_owner: Vec<Option<usize>>,
    /// When set, every coordinate is queried for every slot.
    pub shared: bool,
    /// Slot-major in shared mode: query `b * coords.len() + n`.
    pub queries: Vec<Query>,
}

impl BatchPlan {
    /// Target matrix `[slot][coord]`; only defined for shared plans.
    pub fn value_matrix(&self) -> Option<Vec<Vec<f64>>> {
        if !self.shared {
            return None;
        }
        let n = self.coords.len();
        Some(
            (0..self.geometry_ids.len())
                .map(|b| self.queries[b * n..(b + 1) * n].iter().map(|q| q.target).collect())
                .collect(),
        )
    }
}

/// Number of own coordinates for each of `b` slots sharing `total` evenly.
pub fn own_counts(total: usize, b: usize) -> Vec<usize> {
    (0..b).map(|i| total / b + usize::from(i < total % b)).collect()
}

fn stored(set: &SdfSampleSet, i: usize) -> ([f64; 3], f64) {
    let c = set.coords[i];
    ([c[0] as f64, c[1] as f64, c[2] as f64], set.values[i] as f64)
}

/// Draws the coordinates and targets for one step.
///
/// With interpolation enabled, each slot contributes its share of
/// `n_coords - n_random` stored coordinates, `n_random` coordinates are drawn
/// uniformly in the domain, and every coordinate carries a target for every
/// slot (stored value for the owner, KNN estimates otherwise). With
/// interpolation disabled, each slot gets its share of all `n_coords` as stored
/// coordinates with their stored values only.
pub fn assemble_batch<R: Rng>(
    sets: &[&SdfSampleSet],
    geometry_ids: &[usize],
    cfg: &TrainingConfig,
    rng: &mut R,
) -> Result<BatchPlan> {
    for (s, &g) in sets.iter().zip(geometry_ids) {
        if s.is_empty() {
            return Err(Error::EmptySampleSet(g));
        }
    }
    let b = sets.len();
    let mut coords = Vec::with_capacity(cfg.n_coords);
    let mut coord_owner = Vec::with_capacity(cfg.n_coords);
    let mut own_index = Vec::with_capacity(cfg.n_coords);

    if !cfg.interpolation_enabled {
        let mut queries = Vec::with_capacity(cfg.n_coords);
        for (slot, count) in own_counts(cfg.n_coords, b).into_iter().enumerate() {
            for _ in 0..count {
                let i = rng.random_range(0..sets[slot].len());
                let (c, v) = stored(sets[slot], i);
                queries.push(Query {
                    slot,
                    coord: coords.len(),
                    target: v,
                    origin: Origin::Own,
                });
                coords.push(c);
                coord_owner.push(Some(slot));
            }
        }
        return Ok(BatchPlan {
            geometry_ids: geometry_ids.to_vec(),
            coords,
            coord_owner,
            shared: false,
            queries,
        });
    }

    for (slot, count) in own_counts(cfg.n_coords - cfg.n_random, b).into_iter().enumerate() {
        for _ in 0..count {
            let i = rng.random_range(0..sets[slot].len());
            coords.push(stored(sets[slot], i).0);
            coord_owner.push(Some(slot));
            own_index.push(i);
        }
    }
    for _ in 0..cfg.n_random {
        coords.push([
            rng.random_range(-DOMAIN..=DOMAIN),
            rng.random_range(-DOMAIN..=DOMAIN),
            rng.random_range(-DOMAIN..=DOMAIN),
        ]);
        coord_owner.push(None);
    }
    let n = coords.len();
    let mut queries = Vec::with_capacity(b * n);
    for (slot, set) in sets.iter().enumerate() {
        for (j, (&c, &owner)) in coords.iter().zip(&coord_owner).enumerate() {
            let (target, origin) = match owner {
                Some(o) if o == slot => (set.values[own_index[j]] as f64, Origin::Own),
                Some(_) => (knn_interpolate(set, c, cfg.k_neighbors, 2.0), Origin::KnnCross),
                None => (knn_interpolate(set, c, cfg.k_neighbors, 2.0), Origin::KnnRandom),
            };
            queries.push(Query {
                slot,
                coord: j,
                target,
                origin,
            });
        }
    }
    Ok(BatchPlan {
        geometry_ids: geometry_ids.to_vec(),
        coords,
        coord_owner,
        shared: true,
        queries,
    })
}
