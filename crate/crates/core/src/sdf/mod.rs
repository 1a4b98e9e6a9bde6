//! Signed distance queries, near-surface sample precomputation and KNN lookup.

mod bvh;
mod distance;
mod io;
mod kdtree;
mod sampling;

pub use bvh::{closest_point_on_triangle, Bvh, ClosestHit, Feature};
pub use distance::{build_index, DistanceIndex};
pub use io::{decode_sample_set, encode_sample_set, read_sample_set, write_sample_set, SampleSidecar, MAGIC, VERSION};
pub use kdtree::KdTree;
pub use sampling::{
    knn_interpolate, precompute_near_zero, precompute_uniform_grid, NearZeroMix, SamplingMode, SdfSampleSet,
    SurfaceSampler, DOMAIN,
};

use crate::geom::Vec3;

/// Signed distance at `p` (free-function form of [`DistanceIndex::signed_distance`]).
pub fn signed_distance(index: &DistanceIndex<f64>, p: Vec3<f64>) -> f64 {
    index.signed_distance(p)
}
