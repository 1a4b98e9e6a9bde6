//! Fine-scale geometric pretraining for parametric thin-walled CAD shapes.
//!
//! The crate generates parametric geometry families, precomputes near-surface
//! signed distance samples, trains a B-Rep graph encoder against an implicit SDF
//! decoder with batch-adaptive loss weighting, and evaluates the learned latent
//! codes by linear probing, marching-cubes reconstruction and few-shot regression.
//!
//! Geometry, distance queries and the tensor engine are generic over [`Real`];
//! the learning pipeline runs in `f64` through the aliases below.

pub mod downstream;
pub mod eval;
pub mod geom;
pub mod net;
pub mod oracle;
pub mod pretrain;
pub mod scalar;
pub mod sdf;
pub mod tensor;

mod error;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Point = geom::Vec3<f64>;
pub type Mesh = geom::TriMesh<f64>;
pub type Graph = geom::BrepGraph<f64>;
