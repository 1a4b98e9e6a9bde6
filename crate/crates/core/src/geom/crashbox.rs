//! Rectangular thin-walled tube: outer `width x height` section with a coaxial
//! through-hole `(width - 2t) x (height - 2t)`, length along z, centered at the origin.

use super::{BrepGraph, EdgeCurve, FacePatch, Family, ParamVector, TriMesh, Vec3};
use crate::{Error, Real, Result};

/// Radial strips per end patch so the wall thickness spans several elements.
const END_STRIPS: usize = 4;

pub fn gen_crashbox<T: Real>(p: &ParamVector) -> Result<(TriMesh<T>, BrepGraph<T>)> {
    if p.family != Family::CrashBox {
        return Err(Error::InvalidParams(format!(
            "expected a crash box, got {:?}",
            p.family
        )));
    }
    p.validate()?;
    let [height, width, length, thickness] = p.values;
    let (a, b, hl) = (width / 2.0, height / 2.0, length / 2.0);
    let (ai, bi) = (a - thickness, b - thickness);

    let section = |sx: f64, sy: f64| -> [Vec3<f64>; 4] {
        [
            Vec3::new(-sx, -sy, 0.0),
            Vec3::new(sx, -sy, 0.0),
            Vec3::new(sx, sy, 0.0),
            Vec3::new(-sx, sy, 0.0),
        ]
    };
    let outer = section(a, b);
    let inner = section(ai, bi);
    let at = |c: Vec3<f64>, z: f64| Vec3::new(c.x, c.y, z);

    let mesh = build_mesh(&outer, &inner, hl);

    let ob = |k: usize| at(outer[k % 4], -hl);
    let ot = |k: usize| at(outer[k % 4], hl);
    let ib = |k: usize| at(inner[k % 4], -hl);
    let it = |k: usize| at(inner[k % 4], hl);

    // faces: 0..4 outer walls, 4..8 inner walls, 8..12 bottom end, 12..16 top end
    let mut faces = Vec::with_capacity(16);
    for k in 0..4 {
        faces.push(FacePatch::planar_quad(ob(k), ob(k + 1), ot(k + 1), ot(k)));
    }
    for k in 0..4 {
        faces.push(FacePatch::planar_quad(ib(k + 1), ib(k), it(k), it(k + 1)));
    }
    for k in 0..4 {
        faces.push(FacePatch::planar_quad(ob(k), ib(k), ib(k + 1), ob(k + 1)));
    }
    for k in 0..4 {
        faces.push(FacePatch::planar_quad(ot(k), ot(k + 1), it(k + 1), it(k)));
    }

    let mut edges = Vec::with_capacity(32);
    let mut adjacency = Vec::with_capacity(32);
    let mut link = |fa: usize, fb: usize, e: EdgeCurve<f64>| {
        adjacency.push([fa, fb, edges.len()]);
        edges.push(e);
    };
    for k in 0..4 {
        let prev = (k + 3) % 4;
        link(prev, k, EdgeCurve::segment(ob(k), ot(k)));
        link(4 + prev, 4 + k, EdgeCurve::segment(ib(k), it(k)));
        link(k, 8 + k, EdgeCurve::segment(ob(k), ob(k + 1)));
        link(k, 12 + k, EdgeCurve::segment(ot(k), ot(k + 1)));
        link(4 + k, 8 + k, EdgeCurve::segment(ib(k), ib(k + 1)));
        link(4 + k, 12 + k, EdgeCurve::segment(it(k), it(k + 1)));
        link(8 + prev, 8 + k, EdgeCurve::segment(ob(k), ib(k)));
        link(12 + prev, 12 + k, EdgeCurve::segment(ot(k), it(k)));
    }

    let graph = BrepGraph {
        faces,
        edges,
        adjacency,
    };
    Ok((mesh.cast(), graph.cast()))
}

fn build_mesh(outer: &[Vec3<f64>; 4], inner: &[Vec3<f64>; 4], hl: f64) -> TriMesh<f64> {
    // Each end carries (END_STRIPS + 1) rings of 4 corners, ring 0 outer and the last inner.
    let rings = END_STRIPS + 1;
    let mut vertices = Vec::with_capacity(2 * rings * 4);
    for z in [-hl, hl] {
        for r in 0..rings {
            let s = r as f64 / END_STRIPS as f64;
            for k in 0..4 {
                let c = outer[k] + (inner[k] - outer[k]) * s;
                vertices.push(Vec3::new(c.x, c.y, z));
            }
        }
    }
    let idx = |end: usize, ring: usize, k: usize| (end * rings * 4 + ring * 4 + k % 4) as u32;
    let mut triangles = Vec::new();
    let mut quad = |q: [u32; 4]| {
        triangles.push([q[0], q[1], q[2]]);
        triangles.push([q[0], q[2], q[3]]);
    };
    let last = END_STRIPS;
    for k in 0..4 {
        quad([idx(0, 0, k), idx(0, 0, k + 1), idx(1, 0, k + 1), idx(1, 0, k)]);
        quad([
            idx(0, last, k + 1),
            idx(0, last, k),
            idx(1, last, k),
            idx(1, last, k + 1),
        ]);
        for r in 0..END_STRIPS {
            quad([idx(0, r, k), idx(0, r + 1, k), idx(0, r + 1, k + 1), idx(0, r, k + 1)]);
            quad([idx(1, r, k), idx(1, r, k + 1), idx(1, r + 1, k + 1), idx(1, r + 1, k)]);
        }
    }
    TriMesh::new(vertices, triangles)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn annular_volume(h: f64, w: f64, l: f64, t: f64) -> f64 {
        l * (h * w - (h - 2.0 * t) * (w - 2.0 * t))
    }

    #[test]
    fn volume_matches_closed_form() {
        let (mesh, _) = gen_crashbox::<f64>(&ParamVector::crash_box(1.0, 1.0, 2.0, 0.1)).unwrap();
        assert!((mesh.signed_volume() - 0.72).abs() < 1e-12);
        let (mesh, _) = gen_crashbox::<f64>(&ParamVector::crash_box(0.7, 1.1, 2.3, 0.05)).unwrap();
        assert!((mesh.signed_volume() - annular_volume(0.7, 1.1, 2.3, 0.05)).abs() < 1e-12);
    }

    #[test]
    fn mesh_is_watertight_and_graph_valid() {
        let (mesh, graph) = gen_crashbox::<f64>(&ParamVector::crash_box(0.6, 1.2, 1.5, 0.02)).unwrap();
        mesh.check_watertight().unwrap();
        graph.validate().unwrap();
        assert_eq!(graph.faces.len(), 16);
        assert_eq!(graph.edges.len(), 32);
    }

    #[test]
    fn thick_wall_is_rejected() {
        let r = gen_crashbox::<f64>(&ParamVector::crash_box(1.0, 1.0, 2.0, 0.6));
        assert!(matches!(r, Err(Error::InvalidParams(_))));
    }

    #[test]
    fn inner_wall_normals_face_the_hole() {
        let (_, graph) = gen_crashbox::<f64>(&ParamVector::crash_box(1.0, 1.0, 2.0, 0.1)).unwrap();
        for f in &graph.faces[4..8] {
            let s = f.grid[5][5];
            let p = Vec3::new(s[0], s[1], 0.0);
            let n = Vec3::new(s[3], s[4], s[5]);
            assert!(p.dot(n) < 0.0);
        }
    }
}
