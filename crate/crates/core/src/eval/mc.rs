use std::collections::HashMap;

use super::mc_tables::TRI_TABLE;
use crate::geom::{TriMesh, Vec3};
use crate::sdf::DOMAIN;
use crate::{Error, Result};

/// Cell corner offsets `(dx, dy, dz)` in table order.
const CORNERS: [[usize; 3]; 8] = [
    [0, 0, 0],
    [1, 0, 0],
    [1, 1, 0],
    [0, 1, 0],
    [0, 0, 1],
    [1, 0, 1],
    [1, 1, 1],
    [0, 1, 1],
];

/// Corner pairs joined by each cell edge.
const EDGES: [[usize; 2]; 12] = [
    [0, 1],
    [1, 2],
    [2, 3],
    [3, 0],
    [4, 5],
    [5, 6],
    [6, 7],
    [7, 4],
    [0, 4],
    [1, 5],
    [2, 6],
    [3, 7],
];

/// Regular `res^3` lattice over the sampling domain, x fastest.
pub fn lattice_points(res: usize) -> Vec<[f64; 3]> {
    let step = 2.0 * DOMAIN / (res - 1) as f64;
    let a = |i: usize| -DOMAIN + step * i as f64;
    let mut pts = Vec::with_capacity(res * res * res);
    for k in 0..res {
        for j in 0..res {
            for i in 0..res {
                pts.push([a(i), a(j), a(k)]);
            }
        }
    }
    pts
}

pub fn lattice_spacing(res: usize) -> f64 {
    2.0 * DOMAIN / (res - 1) as f64
}

/// Zero level set of lattice `values` (as laid out by [`lattice_points`]).
///
/// Triangles face the positive side of the field. Vertices on shared lattice
/// edges are merged.
pub fn marching_cubes(values: &[f64], res: usize) -> Result<TriMesh<f64>> {
    if res < 2 || values.len() != res * res * res {
        return Err(Error::Config(format!(
            "marching cubes needs res^3 values, got {} for res {res}",
            values.len()
        )));
    }
    let step = lattice_spacing(res);
    let at = |i: usize, j: usize, k: usize| (k * res + j) * res + i;
    let pos = |i: usize, j: usize, k: usize| {
        Vec3::new(
            -DOMAIN + step * i as f64,
            -DOMAIN + step * j as f64,
            -DOMAIN + step * k as f64,
        )
    };
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    let mut edge_vertex: HashMap<(usize, usize), u32> = HashMap::new();

    for k in 0..res - 1 {
        for j in 0..res - 1 {
            for i in 0..res - 1 {
                let corner = |c: usize| {
                    let [dx, dy, dz] = CORNERS[c];
                    (i + dx, j + dy, k + dz)
                };
                let mut case = 0usize;
                for c in 0..8 {
                    let (a, b, d) = corner(c);
                    if values[at(a, b, d)] < 0.0 {
                        case |= 1 << c;
                    }
                }
                let row = &TRI_TABLE[case];
                let mut tri = [0u32; 3];
                for (n, &e) in row.iter().take_while(|&&e| e >= 0).enumerate() {
                    let [ca, cb] = EDGES[e as usize];
                    let (pa, pb) = (corner(ca), corner(cb));
                    let (ia, ib) = (at(pa.0, pa.1, pa.2), at(pb.0, pb.1, pb.2));
                    let key = (ia.min(ib), ia.max(ib));
                    let id = *edge_vertex.entry(key).or_insert_with(|| {
                        let (va, vb) = (values[ia], values[ib]);
                        let (xa, xb) = (pos(pa.0, pa.1, pa.2), pos(pb.0, pb.1, pb.2));
                        let t = if va != vb {
                            (va / (va - vb)).clamp(0.0, 1.0)
                        } else {
                            0.5
                        };
                        vertices.push(xa + (xb - xa) * t);
                        (vertices.len() - 1) as u32
                    });
                    tri[n % 3] = id;
                    if n % 3 == 2 {
                        // The table winds triangles towards the negative side.
                        triangles.push([tri[0], tri[2], tri[1]]);
                    }
                }
            }
        }
    }
    if triangles.is_empty() {
        return Err(Error::EmptySurface);
    }
    Ok(TriMesh { vertices, triangles })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sphere_values(res: usize, r: f64) -> Vec<f64> {
        lattice_points(res)
            .iter()
            .map(|p| (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt() - r)
            .collect()
    }

    #[test]
    fn sphere_is_outward_and_closed() {
        let m = marching_cubes(&sphere_values(24, 0.7), 24).unwrap();
        let vol = m.signed_volume();
        let exact = 4.0 / 3.0 * std::f64::consts::PI * 0.7f64.powi(3);
        assert!(vol > 0.0);
        assert!((vol - exact).abs() / exact < 0.05);
    }

    #[test]
    fn no_crossing_is_an_error() {
        assert!(matches!(
            marching_cubes(&vec![1.0; 8 * 8 * 8], 8),
            Err(Error::EmptySurface)
        ));
    }
}
