//! Latent-space evaluation: linear probing, reconstruction and sample statistics.

mod mc;
mod mc_tables;
mod probe;

pub use mc::{lattice_points, lattice_spacing, marching_cubes};
pub use probe::{linear_probe, r_squared, ProbeReport, ScatterPoint, PROBE_RIDGE};

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geom::TriMesh;
use crate::net::{LatentCode, PretrainModel};
use crate::sdf::{Bvh, SdfSampleSet, SurfaceSampler};
use crate::{Error, Result};

/// Surface samples per mesh used by [`chamfer_distance`].
pub const CHAMFER_SAMPLES: usize = 30_000;

/// Symmetric Chamfer distance: the mean of the two directed mean
/// point-to-surface distances, each over `n` area-uniform samples.
pub fn chamfer_distance(a: &TriMesh<f64>, b: &TriMesh<f64>, n: usize, seed: u64) -> f64 {
    let directed = |from: &TriMesh<f64>, to: &TriMesh<f64>, seed: u64| {
        let bvh = Bvh::build(to);
        let sampler = SurfaceSampler::new(from);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pts: Vec<_> = (0..n).map(|_| sampler.sample(&mut rng)).collect();
        let d: Vec<f64> = pts.par_iter().map(|&p| bvh.distance(p)).collect();
        d.iter().sum::<f64>() / n as f64
    };
    0.5 * (directed(a, b, seed) + directed(b, a, seed.wrapping_add(1)))
}

/// Decoder predictions on the `res^3` evaluation lattice.
pub fn decode_lattice(model: &PretrainModel, latent: &LatentCode, res: usize) -> Result<Vec<f64>> {
    let pts = lattice_points(res);
    let chunks: Vec<Result<Vec<f64>>> = pts.par_chunks(16_384).map(|c| model.decode(latent, c)).collect();
    let mut out = Vec::with_capacity(pts.len());
    for c in chunks {
        out.extend(c?);
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct ReconReport {
    pub resolution: usize,
    pub mesh: TriMesh<f64>,
    /// Chamfer distance to the reference mesh when one was supplied.
    pub chamfer: Option<f64>,
    pub runtime_secs: f64,
}

/// Marching-cubes reconstruction of the decoder's zero level for one latent code.
pub fn reconstruct(
    model: &PretrainModel,
    latent: &LatentCode,
    res: usize,
    reference: Option<&TriMesh<f64>>,
) -> Result<ReconReport> {
    if res < 8 {
        return Err(Error::Config(format!("reconstruction resolution {res} is below 8")));
    }
    let start = Instant::now();
    let values = decode_lattice(model, latent, res)?;
    let mesh = marching_cubes(&values, res)?;
    let chamfer = reference.map(|r| chamfer_distance(&mesh, r, CHAMFER_SAMPLES, 0));
    Ok(ReconReport {
        resolution: res,
        mesh,
        chamfer,
        runtime_secs: start.elapsed().as_secs_f64(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityRow {
    pub threshold: f64,
    pub fraction: f64,
}

/// Fraction of samples with `|V| < threshold`, for each threshold.
pub fn sampling_density_report(set: &SdfSampleSet, thresholds: &[f64]) -> Result<Vec<DensityRow>> {
    if set.is_empty() {
        return Err(Error::EmptySampleSet(set.geometry_id));
    }
    let n = set.len() as f64;
    Ok(thresholds
        .iter()
        .map(|&t| DensityRow {
            threshold: t,
            fraction: set.values.iter().filter(|v| (v.abs() as f64) < t).count() as f64 / n,
        })
        .collect())
}
