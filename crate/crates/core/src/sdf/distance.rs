use std::collections::HashMap;

use super::bvh::{Bvh, Feature};
use crate::geom::{TriMesh, Vec3};
use crate::{Real, Result};

/// Signed distance queries against a watertight mesh.
///
/// The sign comes from angle-weighted pseudo-normals of the closest feature
/// (face, edge or vertex), which is exact for closed, consistently oriented meshes.
#[derive(Debug, Clone)]
pub struct DistanceIndex<T> {
    bvh: Bvh<T>,
    face_normals: Vec<Vec3<T>>,
    vertex_normals: Vec<Vec3<T>>,
    /// Pseudo-normal of edge `k` of triangle `t` at `3 * t + k`.
    edge_normals: Vec<Vec3<T>>,
}

pub fn build_index<T: Real>(mesh: &TriMesh<T>) -> Result<DistanceIndex<T>> {
    mesh.check_watertight()?;
    let nt = mesh.triangles.len();
    let face_normals: Vec<Vec3<T>> = (0..nt)
        .map(|t| {
            let [a, b, c] = mesh.corners(t);
            (b - a).cross(c - a).normalized()
        })
        .collect();

    let mut vertex_normals = vec![Vec3::zero(); mesh.vertices.len()];
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let p = mesh.corners(t);
        for k in 0..3 {
            let e1 = (p[(k + 1) % 3] - p[k]).normalized();
            let e2 = (p[(k + 2) % 3] - p[k]).normalized();
            let angle = e1.dot(e2).max(-T::one()).min(T::one()).acos();
            vertex_normals[tri[k] as usize] += face_normals[t] * angle;
        }
    }

    let mut edge_sum: HashMap<(u32, u32), Vec3<T>> = HashMap::with_capacity(nt * 3 / 2);
    for (t, tri) in mesh.triangles.iter().enumerate() {
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            *edge_sum.entry((a.min(b), a.max(b))).or_insert_with(Vec3::zero) += face_normals[t];
        }
    }
    let edge_normals = mesh
        .triangles
        .iter()
        .flat_map(|tri| {
            let edge_sum = &edge_sum;
            (0..3).map(move |k| {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                edge_sum[&(a.min(b), a.max(b))]
            })
        })
        .collect();

    Ok(DistanceIndex {
        bvh: Bvh::build(mesh),
        face_normals,
        vertex_normals,
        edge_normals,
    })
}

impl<T: Real> DistanceIndex<T> {
    pub fn mesh(&self) -> &TriMesh<T> {
        self.bvh.mesh()
    }

    pub fn bvh(&self) -> &Bvh<T> {
        &self.bvh
    }

    /// Negative inside, positive outside, zero on the surface.
    pub fn signed_distance(&self, p: Vec3<T>) -> T {
        let hit = self.bvh.closest(p).expect("watertight mesh is non-empty");
        let d = hit.distance_squared.sqrt();
        if d == T::zero() {
            return d;
        }
        let tri = self.mesh().triangles[hit.triangle];
        let n = match hit.feature {
            Feature::Face => self.face_normals[hit.triangle],
            Feature::Edge(k) => self.edge_normals[3 * hit.triangle + k as usize],
            Feature::Vertex(k) => self.vertex_normals[tri[k as usize] as usize],
        };
        if (p - hit.point).dot(n) < T::zero() {
            -d
        } else {
            d
        }
    }
}
