//! Fixed-size parameterized boundary representation.
//!
//! Every face is sampled on a [`GRID`]x[`GRID`] lattice of (position, unit normal)
//! and every edge at [`CURVE`] points of (position, unit tangent). The JSON form is
//! `{"faces": [F][10][10][6], "edges": [E][10][6], "adjacency": [A][3]}`.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::Vec3;
use crate::{Error, Real, Result};

pub const GRID: usize = 10;
pub const CURVE: usize = 10;
/// Channels per sample: position (3) followed by normal or tangent (3).
pub const CHANNELS: usize = 6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FacePatch<T> {
    /// `grid[u][v]` = `[x, y, z, nx, ny, nz]`.
    pub grid: Vec<Vec<[T; CHANNELS]>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EdgeCurve<T> {
    /// `points[i]` = `[x, y, z, tx, ty, tz]`.
    pub points: Vec<[T; CHANNELS]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BrepGraph<T> {
    pub faces: Vec<FacePatch<T>>,
    pub edges: Vec<EdgeCurve<T>>,
    /// `(face_i, face_j, edge_k)` triples.
    pub adjacency: Vec<[usize; 3]>,
}

fn sample<T: Real>(p: Vec3<T>, d: Vec3<T>) -> [T; CHANNELS] {
    [p.x, p.y, p.z, d.x, d.y, d.z]
}

impl<T: Real> FacePatch<T> {
    /// Samples `f(u, v) -> (position, normal)` on the unit square, inclusive of borders.
    pub fn from_fn(mut f: impl FnMut(T, T) -> (Vec3<T>, Vec3<T>)) -> Self {
        let step = T::one() / T::lit((GRID - 1) as f64);
        let grid = (0..GRID)
            .map(|i| {
                (0..GRID)
                    .map(|j| {
                        let (p, n) = f(T::lit(i as f64) * step, T::lit(j as f64) * step);
                        sample(p, n.normalized())
                    })
                    .collect()
            })
            .collect();
        Self { grid }
    }

    /// Bilinear patch over a planar quad `a b c d` (counter-clockwise seen from outside).
    pub fn planar_quad(a: Vec3<T>, b: Vec3<T>, c: Vec3<T>, d: Vec3<T>) -> Self {
        let n = (c - a).cross(d - b).normalized();
        Self::from_fn(|u, v| {
            let ab = a + (b - a) * u;
            let dc = d + (c - d) * u;
            (ab + (dc - ab) * v, n)
        })
    }

    pub fn positions(&self) -> impl Iterator<Item = Vec3<T>> + '_ {
        self.grid.iter().flatten().map(|s| Vec3::new(s[0], s[1], s[2]))
    }
}

impl<T: Real> EdgeCurve<T> {
    /// Samples `f(s) -> (position, tangent)` for `s` in `[0, 1]`.
    pub fn from_fn(mut f: impl FnMut(T) -> (Vec3<T>, Vec3<T>)) -> Self {
        let step = T::one() / T::lit((CURVE - 1) as f64);
        let points = (0..CURVE)
            .map(|i| {
                let (p, t) = f(T::lit(i as f64) * step);
                sample(p, t.normalized())
            })
            .collect();
        Self { points }
    }

    pub fn segment(a: Vec3<T>, b: Vec3<T>) -> Self {
        let t = (b - a).normalized();
        Self::from_fn(|s| (a + (b - a) * s, t))
    }
}

impl<T: Real> BrepGraph<T> {
    /// Checks fixed-size sampling, unit directions and adjacency consistency.
    pub fn validate(&self) -> Result<()> {
        let tol = T::lit(1e-6);
        let unit = |s: &[T; CHANNELS]| {
            let n = Vec3::new(s[3], s[4], s[5]).norm();
            (n - T::one()).abs() <= tol && s.iter().all(|v| v.is_finite())
        };
        for (i, f) in self.faces.iter().enumerate() {
            if f.grid.len() != GRID || f.grid.iter().any(|row| row.len() != GRID) {
                return Err(Error::Graph(format!("face {i} is not a {GRID}x{GRID} grid")));
            }
            if !f.grid.iter().flatten().all(unit) {
                return Err(Error::Graph(format!("face {i} has a non-unit normal")));
            }
        }
        for (i, e) in self.edges.iter().enumerate() {
            if e.points.len() != CURVE {
                return Err(Error::Graph(format!("edge {i} does not have {CURVE} samples")));
            }
            if !e.points.iter().all(unit) {
                return Err(Error::Graph(format!("edge {i} has a non-unit tangent")));
            }
        }
        let mut seen = HashSet::new();
        for &[a, b, k] in &self.adjacency {
            if a >= self.faces.len() || b >= self.faces.len() {
                return Err(Error::Graph(format!("adjacency references missing face ({a}, {b})")));
            }
            if k >= self.edges.len() {
                return Err(Error::Graph(format!("adjacency references missing edge {k}")));
            }
            if a == b {
                return Err(Error::Graph(format!("edge {k} borders face {a} twice")));
            }
            if !seen.insert(k) {
                return Err(Error::Graph(format!("edge {k} appears in more than one adjacency")));
            }
        }
        Ok(())
    }

    /// Applies `x -> scale * x + offset` to sample positions; directions are re-normalized.
    pub fn transformed(&self, scale: T, offset: Vec3<T>) -> Self {
        let map = |s: &[T; CHANNELS]| {
            let p = Vec3::new(s[0], s[1], s[2]) * scale + offset;
            let d = Vec3::new(s[3], s[4], s[5]).normalized();
            sample(p, if scale < T::zero() { -d } else { d })
        };
        Self {
            faces: self
                .faces
                .iter()
                .map(|f| FacePatch {
                    grid: f.grid.iter().map(|row| row.iter().map(map).collect()).collect(),
                })
                .collect(),
            edges: self
                .edges
                .iter()
                .map(|e| EdgeCurve {
                    points: e.points.iter().map(map).collect(),
                })
                .collect(),
            adjacency: self.adjacency.clone(),
        }
    }

    /// Reorders faces by `perm` (new position `i` holds old face `perm[i]`).
    pub fn permute_faces(&self, perm: &[usize]) -> Self {
        let mut inverse = vec![0; perm.len()];
        for (new, &old) in perm.iter().enumerate() {
            inverse[old] = new;
        }
        Self {
            faces: perm.iter().map(|&old| self.faces[old].clone()).collect(),
            edges: self.edges.clone(),
            adjacency: self
                .adjacency
                .iter()
                .map(|&[a, b, k]| [inverse[a], inverse[b], k])
                .collect(),
        }
    }

    pub fn cast<U: Real>(&self) -> BrepGraph<U> {
        let c = |s: &[T; CHANNELS]| s.map(|v| U::lit(v.to_f64_lossy()));
        BrepGraph {
            faces: self
                .faces
                .iter()
                .map(|f| FacePatch {
                    grid: f.grid.iter().map(|row| row.iter().map(c).collect()).collect(),
                })
                .collect(),
            edges: self
                .edges
                .iter()
                .map(|e| EdgeCurve {
                    points: e.points.iter().map(c).collect(),
                })
                .collect(),
            adjacency: self.adjacency.clone(),
        }
    }
}
