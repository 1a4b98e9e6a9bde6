use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{DistanceIndex, KdTree};
use crate::geom::{TriMesh, Vec3};
use crate::{Error, Result};

/// Half-width of the sampling domain in normalized coordinates.
pub const DOMAIN: f64 = 1.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SamplingMode {
    NearZero,
    UniformGrid,
}

impl SamplingMode {
    pub fn code(self) -> u16 {
        match self {
            SamplingMode::NearZero => 0,
            SamplingMode::UniformGrid => 1,
        }
    }

    pub fn from_code(c: u16) -> Option<Self> {
        match c {
            0 => Some(SamplingMode::NearZero),
            1 => Some(SamplingMode::UniformGrid),
            _ => None,
        }
    }
}

/// Mixture used by the near-surface sampler. Fractions must sum to at most 1; the
/// remainder is drawn uniformly in the domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NearZeroMix {
    pub tight_fraction: f64,
    pub loose_fraction: f64,
    /// Standard deviation as a fraction of the mesh bounding-box diagonal.
    pub tight_sigma: f64,
    pub loose_sigma: f64,
}

impl Default for NearZeroMix {
    fn default() -> Self {
        Self {
            tight_fraction: 0.475,
            loose_fraction: 0.475,
            tight_sigma: 0.005,
            loose_sigma: 0.05,
        }
    }
}

/// Precomputed signed distance samples of one geometry in normalized space.
#[derive(Debug, Clone)]
pub struct SdfSampleSet {
    pub geometry_id: usize,
    pub mode: SamplingMode,
    pub coords: Vec<[f32; 3]>,
    pub values: Vec<f32>,
    tree: KdTree,
}

impl SdfSampleSet {
    pub fn new(geometry_id: usize, mode: SamplingMode, coords: Vec<[f32; 3]>, values: Vec<f32>) -> Self {
        assert_eq!(coords.len(), values.len(), "one value per coordinate");
        let tree = KdTree::build(&coords);
        Self {
            geometry_id,
            mode,
            coords,
            values,
            tree,
        }
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn nearest(&self, q: [f64; 3], k: usize) -> Vec<(f64, usize)> {
        self.tree.nearest(&self.coords, q, k)
    }
}

fn evaluate(index: &DistanceIndex<f64>, coords: &[[f32; 3]]) -> Vec<f32> {
    coords
        .par_iter()
        .map(|c| index.signed_distance(Vec3::new(c[0] as f64, c[1] as f64, c[2] as f64)) as f32)
        .collect()
}

/// Area-weighted random surface points.
pub struct SurfaceSampler<'a> {
    mesh: &'a TriMesh<f64>,
    cumulative: Vec<f64>,
}

impl<'a> SurfaceSampler<'a> {
    pub fn new(mesh: &'a TriMesh<f64>) -> Self {
        let mut acc = 0.0;
        let cumulative = (0..mesh.triangles.len())
            .map(|t| {
                acc += mesh.triangle_area(t);
                acc
            })
            .collect();
        Self { mesh, cumulative }
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> Vec3<f64> {
        let total = *self.cumulative.last().expect("mesh has triangles");
        let u = rng.random::<f64>() * total;
        let t = self
            .cumulative
            .partition_point(|&c| c <= u)
            .min(self.cumulative.len() - 1);
        let [a, b, c] = self.mesh.corners(t);
        let (r1, r2): (f64, f64) = (rng.random(), rng.random());
        let s = r1.sqrt();
        a * (1.0 - s) + b * (s * (1.0 - r2)) + c * (s * r2)
    }
}

fn in_domain(p: Vec3<f64>) -> bool {
    p.x.abs() <= DOMAIN && p.y.abs() <= DOMAIN && p.z.abs() <= DOMAIN
}

fn to_f32(p: Vec3<f64>) -> [f32; 3] {
    [p.x as f32, p.y as f32, p.z as f32]
}

/// Near-surface biased sampling with true signed distances at every sample.
pub fn precompute_near_zero(
    index: &DistanceIndex<f64>,
    mesh: &TriMesh<f64>,
    n_points: usize,
    seed: u64,
    mix: &NearZeroMix,
) -> Result<SdfSampleSet> {
    if n_points == 0 {
        return Err(Error::Config("near-zero sampling needs at least one point".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let diag = mesh.bounds().diagonal();
    let n_tight = ((mix.tight_fraction * n_points as f64).round() as usize).min(n_points);
    let n_loose = ((mix.loose_fraction * n_points as f64).round() as usize).min(n_points - n_tight);
    let n_uniform = n_points - n_tight - n_loose;
    let surface = SurfaceSampler::new(mesh);

    let mut coords = Vec::with_capacity(n_points);
    for (count, sigma) in [(n_tight, mix.tight_sigma * diag), (n_loose, mix.loose_sigma * diag)] {
        let normal = Normal::new(0.0, sigma.max(0.0)).map_err(|e| Error::Config(e.to_string()))?;
        for _ in 0..count {
            let base = surface.sample(&mut rng);
            let p = loop {
                let p = base
                    + Vec3::new(
                        normal.sample(&mut rng),
                        normal.sample(&mut rng),
                        normal.sample(&mut rng),
                    );
                if in_domain(p) {
                    break p;
                }
            };
            coords.push(to_f32(p));
        }
    }
    for _ in 0..n_uniform {
        let p = Vec3::new(
            rng.random_range(-DOMAIN..=DOMAIN),
            rng.random_range(-DOMAIN..=DOMAIN),
            rng.random_range(-DOMAIN..=DOMAIN),
        );
        coords.push(to_f32(p));
    }
    let values = evaluate(index, &coords);
    Ok(SdfSampleSet::new(0, SamplingMode::NearZero, coords, values))
}

/// Regular `resolution^3` lattice over the sampling domain, x fastest.
pub fn precompute_uniform_grid(index: &DistanceIndex<f64>, resolution: usize) -> Result<SdfSampleSet> {
    if resolution < 2 {
        return Err(Error::Config(format!("grid resolution must be >= 2, got {resolution}")));
    }
    let step = 2.0 * DOMAIN / (resolution - 1) as f64;
    let axis = |i: usize| -DOMAIN + step * i as f64;
    let mut coords = Vec::with_capacity(resolution.pow(3));
    for k in 0..resolution {
        for j in 0..resolution {
            for i in 0..resolution {
                coords.push([axis(i) as f32, axis(j) as f32, axis(k) as f32]);
            }
        }
    }
    let values = evaluate(index, &coords);
    Ok(SdfSampleSet::new(0, SamplingMode::UniformGrid, coords, values))
}

/// Inverse-distance-power weighted mean of the `k` nearest stored values.
pub fn knn_interpolate(set: &SdfSampleSet, q: [f64; 3], k: usize, power: f64) -> f64 {
    let nn = set.nearest(q, k.max(1));
    let Some(&(d0, i0)) = nn.first() else {
        return f64::NAN;
    };
    if d0.sqrt() < 1e-12 {
        return set.values[i0] as f64;
    }
    let (mut num, mut den) = (0.0, 0.0);
    for (d2, i) in nn {
        let w = d2.powf(-0.5 * power);
        num += w * set.values[i] as f64;
        den += w;
    }
    num / den
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::brute_force_idw;
    use crate::sdf::build_index;

    fn sphere_index() -> (TriMesh<f64>, DistanceIndex<f64>) {
        let m = TriMesh::icosphere(0.6, 4);
        let idx = build_index(&m).unwrap();
        (m, idx)
    }

    #[test]
    fn near_zero_is_deterministic_and_exact() {
        let (m, idx) = sphere_index();
        let a = precompute_near_zero(&idx, &m, 2000, 9, &NearZeroMix::default()).unwrap();
        let b = precompute_near_zero(&idx, &m, 2000, 9, &NearZeroMix::default()).unwrap();
        assert_eq!(a.coords, b.coords);
        assert_eq!(a.values, b.values);
        for (c, v) in a.coords.iter().zip(&a.values) {
            let p = Vec3::new(c[0] as f64, c[1] as f64, c[2] as f64);
            assert!((idx.signed_distance(p) - *v as f64).abs() < 1e-5);
            assert!(c.iter().all(|x| x.abs() as f64 <= DOMAIN));
        }
    }

    #[test]
    fn uniform_grid_sizes() {
        let (_, idx) = sphere_index();
        let g = precompute_uniform_grid(&idx, 2).unwrap();
        assert_eq!(g.len(), 8);
        assert!(g.coords.iter().all(|c| c.iter().all(|x| (x.abs() - 1.1).abs() < 1e-6)));
        assert!(precompute_uniform_grid(&idx, 1).is_err());
    }

    #[test]
    fn knn_exact_match_and_symmetry() {
        let set = SdfSampleSet::new(
            0,
            SamplingMode::NearZero,
            vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [5.0, 5.0, 5.0]],
            vec![0.1, 0.3, 9.0],
        );
        assert_eq!(knn_interpolate(&set, [1.0, 0.0, 0.0], 2, 2.0), 0.3f32 as f64);
        let mid = knn_interpolate(&set, [0.5, 0.0, 0.0], 2, 2.0);
        assert!((mid - 0.2).abs() < 1e-7);
    }

    #[test]
    fn knn_matches_brute_force_idw() {
        let (m, idx) = sphere_index();
        let set = precompute_near_zero(&idx, &m, 3000, 2, &NearZeroMix::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let q = [
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            ];
            let a = knn_interpolate(&set, q, 8, 2.0);
            let b = brute_force_idw(&set.coords, &set.values, q, 8);
            assert!((a - b).abs() < 1e-12);
        }
    }
}
