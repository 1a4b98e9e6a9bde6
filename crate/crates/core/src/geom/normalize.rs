use serde::{Deserialize, Serialize};

use super::{Aabb, BrepGraph, TriMesh, Vec3};
use crate::{Error, Real, Result};

/// Uniform scale followed by translation: `x -> scale * x + offset`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transform<T> {
    pub scale: T,
    pub offset: Vec3<T>,
}

impl<T: Real> Transform<T> {
    pub fn identity() -> Self {
        Self {
            scale: T::one(),
            offset: Vec3::zero(),
        }
    }

    /// Maps `bounds` into `[-1, 1]^3` keeping aspect ratio; the longest side spans `[-1, 1]`.
    pub fn fit_unit_cube(bounds: &Aabb<T>) -> Result<Self> {
        let longest = bounds.extent().max_component();
        if !longest.is_finite() || longest <= T::zero() {
            return Err(Error::DegenerateBounds);
        }
        let scale = T::lit(2.0) / longest;
        Ok(Self {
            scale,
            offset: -bounds.center() * scale,
        })
    }

    #[inline]
    pub fn apply(&self, p: Vec3<T>) -> Vec3<T> {
        p * self.scale + self.offset
    }

    pub fn inverse(&self) -> Self {
        let inv = T::one() / self.scale;
        Self {
            scale: inv,
            offset: -self.offset * inv,
        }
    }
}

/// Registers a geometry into the normalized frame of its family.
///
/// `family_bounds` must be the union of bounding boxes over the whole design grid so
/// that sibling geometries share one frame.
pub fn normalize_geometry<T: Real>(
    mesh: &TriMesh<T>,
    graph: &BrepGraph<T>,
    family_bounds: &Aabb<T>,
) -> Result<(TriMesh<T>, BrepGraph<T>, Transform<T>)> {
    if mesh.vertices.is_empty() {
        return Err(Error::DegenerateBounds);
    }
    let t = Transform::fit_unit_cube(family_bounds)?;
    Ok((
        mesh.transformed(t.scale, t.offset),
        graph.transformed(t.scale, t.offset),
        t,
    ))
}
