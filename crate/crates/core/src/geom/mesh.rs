use std::collections::HashMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{Aabb, Vec3};
use crate::{Error, Real, Result};

/// Indexed triangle mesh. Triangles are counter-clockwise when seen from outside.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TriMesh<T> {
    pub vertices: Vec<Vec3<T>>,
    pub triangles: Vec<[u32; 3]>,
}

impl<T: Real> TriMesh<T> {
    pub fn new(vertices: Vec<Vec3<T>>, triangles: Vec<[u32; 3]>) -> Self {
        Self { vertices, triangles }
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    #[inline]
    pub fn corners(&self, t: usize) -> [Vec3<T>; 3] {
        let [a, b, c] = self.triangles[t];
        [
            self.vertices[a as usize],
            self.vertices[b as usize],
            self.vertices[c as usize],
        ]
    }

    pub fn bounds(&self) -> Aabb<T> {
        Aabb::from_points(&self.vertices)
    }

    pub fn triangle_area(&self, t: usize) -> T {
        let [a, b, c] = self.corners(t);
        (b - a).cross(c - a).norm() * T::lit(0.5)
    }

    pub fn surface_area(&self) -> T {
        (0..self.triangles.len()).map(|t| self.triangle_area(t)).sum()
    }

    /// Enclosed volume by the divergence theorem; positive for outward-facing triangles.
    pub fn signed_volume(&self) -> T {
        let sixth = T::one() / T::lit(6.0);
        (0..self.triangles.len())
            .map(|t| {
                let [a, b, c] = self.corners(t);
                a.dot(b.cross(c)) * sixth
            })
            .sum()
    }

    /// Verifies that every undirected edge has exactly two incident triangles that
    /// traverse it in opposite directions, and that no triangle is degenerate.
    pub fn check_watertight(&self) -> Result<()> {
        if self.triangles.is_empty() {
            return Err(Error::NonWatertight("mesh has no triangles".into()));
        }
        let mut directed: HashMap<(u32, u32), u32> = HashMap::with_capacity(self.triangles.len() * 3);
        for tri in &self.triangles {
            for k in 0..3 {
                let e = (tri[k], tri[(k + 1) % 3]);
                if e.0 == e.1 {
                    return Err(Error::NonWatertight(format!("collapsed edge at vertex {}", e.0)));
                }
                *directed.entry(e).or_insert(0) += 1;
            }
        }
        for (&(a, b), &n) in &directed {
            if n != 1 {
                return Err(Error::NonWatertight(format!("directed edge ({a}, {b}) used {n} times")));
            }
            if !directed.contains_key(&(b, a)) {
                return Err(Error::NonWatertight(format!("boundary edge ({a}, {b})")));
            }
        }
        let scale = self.bounds().diagonal();
        let min_area = T::lit(1e-12) * scale * scale;
        for t in 0..self.triangles.len() {
            if self.triangle_area(t) <= min_area {
                return Err(Error::NonWatertight(format!("degenerate triangle {t}")));
            }
        }
        Ok(())
    }

    /// Applies `x -> scale * x + offset` to every vertex.
    pub fn transformed(&self, scale: T, offset: Vec3<T>) -> Self {
        Self {
            vertices: self.vertices.iter().map(|&v| v * scale + offset).collect(),
            triangles: self.triangles.clone(),
        }
    }

    pub fn cast<U: Real>(&self) -> TriMesh<U> {
        TriMesh {
            vertices: self.vertices.iter().map(|v| v.cast()).collect(),
            triangles: self.triangles.clone(),
        }
    }

    pub fn write_obj<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for v in &self.vertices {
            writeln!(w, "v {} {} {}", v.x, v.y, v.z)?;
        }
        for t in &self.triangles {
            writeln!(w, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1)?;
        }
        Ok(())
    }

    /// Reads `v`/`f` records; polygons are fan-triangulated, other records ignored.
    pub fn read_obj<R: BufRead>(r: R) -> Result<Self> {
        let mut vertices = Vec::new();
        let mut triangles = Vec::new();
        for (lineno, line) in r.lines().enumerate() {
            let line = line?;
            let mut it = line.split_whitespace();
            match it.next() {
                Some("v") => {
                    let mut c = [T::zero(); 3];
                    for slot in &mut c {
                        let s = it
                            .next()
                            .ok_or_else(|| Error::Format(format!("line {}: short vertex", lineno + 1)))?;
                        let v: f64 = s
                            .parse()
                            .map_err(|_| Error::Format(format!("line {}: bad number {s}", lineno + 1)))?;
                        *slot = T::lit(v);
                    }
                    vertices.push(Vec3::from(c));
                }
                Some("f") => {
                    let idx: Vec<u32> = it
                        .map(|tok| {
                            let head = tok.split('/').next().unwrap_or(tok);
                            head.parse::<u32>()
                                .ok()
                                .filter(|&i| i >= 1)
                                .map(|i| i - 1)
                                .ok_or_else(|| Error::Format(format!("line {}: bad face index {tok}", lineno + 1)))
                        })
                        .collect::<Result<_>>()?;
                    if idx.len() < 3 {
                        return Err(Error::Format(format!("line {}: face with < 3 vertices", lineno + 1)));
                    }
                    for k in 1..idx.len() - 1 {
                        triangles.push([idx[0], idx[k], idx[k + 1]]);
                    }
                }
                _ => {}
            }
        }
        if let Some(bad) = triangles.iter().flatten().find(|&&i| i as usize >= vertices.len()) {
            return Err(Error::Format(format!("face index {} out of range", bad + 1)));
        }
        Ok(Self { vertices, triangles })
    }

    /// Axis-aligned box `[lo, hi]` as 12 outward-facing triangles.
    pub fn cuboid(lo: Vec3<T>, hi: Vec3<T>) -> Self {
        let v = |i: usize| {
            Vec3::new(
                if i & 1 == 0 { lo.x } else { hi.x },
                if i & 2 == 0 { lo.y } else { hi.y },
                if i & 4 == 0 { lo.z } else { hi.z },
            )
        };
        let vertices = (0..8).map(v).collect();
        let quads: [[u32; 4]; 6] = [
            [0, 2, 3, 1], // z = lo
            [4, 5, 7, 6], // z = hi
            [0, 1, 5, 4], // y = lo
            [2, 6, 7, 3], // y = hi
            [0, 4, 6, 2], // x = lo
            [1, 3, 7, 5], // x = hi
        ];
        let mut triangles = Vec::with_capacity(12);
        for q in quads {
            triangles.push([q[0], q[1], q[2]]);
            triangles.push([q[0], q[2], q[3]]);
        }
        Self { vertices, triangles }
    }

    /// Subdivided icosahedron projected onto a sphere; `20 * 4^level` triangles.
    pub fn icosphere(radius: T, level: u32) -> Self {
        let t = (1.0 + 5f64.sqrt()) / 2.0;
        let raw = [
            [-1.0, t, 0.0],
            [1.0, t, 0.0],
            [-1.0, -t, 0.0],
            [1.0, -t, 0.0],
            [0.0, -1.0, t],
            [0.0, 1.0, t],
            [0.0, -1.0, -t],
            [0.0, 1.0, -t],
            [t, 0.0, -1.0],
            [t, 0.0, 1.0],
            [-t, 0.0, -1.0],
            [-t, 0.0, 1.0],
        ];
        let mut verts: Vec<Vec3<f64>> = raw.iter().map(|&p| Vec3::from(p).normalized()).collect();
        let mut tris: Vec<[u32; 3]> = vec![
            [0, 11, 5],
            [0, 5, 1],
            [0, 1, 7],
            [0, 7, 10],
            [0, 10, 11],
            [1, 5, 9],
            [5, 11, 4],
            [11, 10, 2],
            [10, 7, 6],
            [7, 1, 8],
            [3, 9, 4],
            [3, 4, 2],
            [3, 2, 6],
            [3, 6, 8],
            [3, 8, 9],
            [4, 9, 5],
            [2, 4, 11],
            [6, 2, 10],
            [8, 6, 7],
            [9, 8, 1],
        ];
        for _ in 0..level {
            let mut mid: HashMap<(u32, u32), u32> = HashMap::new();
            let mut next = Vec::with_capacity(tris.len() * 4);
            let mut midpoint = |a: u32, b: u32, verts: &mut Vec<Vec3<f64>>| {
                let key = (a.min(b), a.max(b));
                *mid.entry(key).or_insert_with(|| {
                    let m = ((verts[a as usize] + verts[b as usize]) * 0.5).normalized();
                    verts.push(m);
                    (verts.len() - 1) as u32
                })
            };
            for [a, b, c] in tris {
                let ab = midpoint(a, b, &mut verts);
                let bc = midpoint(b, c, &mut verts);
                let ca = midpoint(c, a, &mut verts);
                next.extend_from_slice(&[[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
            }
            tris = next;
        }
        let r = radius.to_f64_lossy();
        Self {
            vertices: verts.into_iter().map(|v| (v * r).cast()).collect(),
            triangles: tris,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cube_is_watertight_with_unit_volume() {
        let m = TriMesh::cuboid(Vec3::splat(0.0), Vec3::splat(1.0));
        m.check_watertight().unwrap();
        assert!((m.signed_volume() - 1.0f64).abs() < 1e-14);
        assert!((m.surface_area() - 6.0).abs() < 1e-14);
    }

    #[test]
    fn missing_triangle_is_detected() {
        let mut m = TriMesh::<f64>::cuboid(Vec3::splat(0.0), Vec3::splat(1.0));
        m.triangles.pop();
        assert!(matches!(m.check_watertight(), Err(Error::NonWatertight(_))));
    }

    #[test]
    fn flipped_triangle_breaks_orientation() {
        let mut m = TriMesh::<f64>::cuboid(Vec3::splat(0.0), Vec3::splat(1.0));
        m.triangles[0].swap(1, 2);
        assert!(m.check_watertight().is_err());
    }

    #[test]
    fn icosphere_counts_and_volume() {
        let m = TriMesh::<f64>::icosphere(1.0, 3);
        assert_eq!(m.triangles.len(), 20 * 64);
        m.check_watertight().unwrap();
        let v = m.signed_volume();
        let exact = 4.0 / 3.0 * std::f64::consts::PI;
        assert!(v < exact && v > 0.98 * exact);
    }

    #[test]
    fn obj_round_trip() {
        let m = TriMesh::<f64>::cuboid(Vec3::new(-0.5, 0.25, 1.0), Vec3::new(0.5, 2.0, 1.5));
        let mut buf = Vec::new();
        m.write_obj(&mut buf).unwrap();
        let back = TriMesh::<f64>::read_obj(buf.as_slice()).unwrap();
        assert_eq!(back, m);
    }
}
