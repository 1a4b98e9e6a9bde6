//! Ribbed bottle as a solid of revolution about the z-axis.
//!
//! The profile `r(z)` is a sequence of segments: a fixed lower body with fixed
//! decorative grooves, a cosine shoulder blending to the top radius, and an upper
//! section whose grooves are controlled by the design parameters. A groove of depth
//! `d` and width `w` is the half-ellipse `r = R - d * sin(phi)`, `z = zc - (w/2) cos(phi)`;
//! it coincides with a circular arc when `d = w/2` and stays single-valued in `z` otherwise.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{BrepGraph, EdgeCurve, FacePatch, Family, ParamVector, TriMesh, Vec3};
use crate::{Error, Real, Result};

pub const BASE_RADIUS: f64 = 0.4;
pub const HEIGHT: f64 = 2.0;
pub const SHOULDER_START: f64 = 1.0;
pub const SHOULDER_END: f64 = 1.3;
const TOP_MARGIN: f64 = 0.05;

const LOWER_START: f64 = 0.1;
const LOWER_END: f64 = 0.9;
const LOWER_PERIOD: f64 = 0.12;
const LOWER_GROOVE_WIDTH: f64 = 0.04;
const LOWER_GROOVE_DEPTH: f64 = 0.015;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tessellation {
    /// Vertices per ring.
    pub n_theta: usize,
    /// Maximum axial step on lands and the shoulder.
    pub max_dz: f64,
    /// Axial pieces per groove.
    pub groove_pieces: usize,
    /// Minimum meaningful segment length; grooves narrower than twice this are rejected.
    pub min_segment: f64,
}

impl Default for Tessellation {
    fn default() -> Self {
        Self {
            n_theta: 96,
            max_dz: 0.025,
            groove_pieces: 8,
            min_segment: 0.004,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Segment {
    /// Straight frustum between `(z0, r0)` and `(z1, r1)`.
    Line { z0: f64, r0: f64, z1: f64, r1: f64 },
    /// Cosine blend from `r0` to `r1`.
    Shoulder { z0: f64, r0: f64, z1: f64, r1: f64 },
    /// Half-ellipse groove cut into a land of radius `base`.
    Groove { z0: f64, z1: f64, base: f64, depth: f64 },
}

impl Segment {
    pub fn z_range(&self) -> (f64, f64) {
        match *self {
            Segment::Line { z0, z1, .. } | Segment::Shoulder { z0, z1, .. } | Segment::Groove { z0, z1, .. } => {
                (z0, z1)
            }
        }
    }

    /// Point `(r, z)` and derivative `(dr/ds, dz/ds)` at curve parameter `s` in `[0, 1]`.
    pub fn eval(&self, s: f64) -> ((f64, f64), (f64, f64)) {
        match *self {
            Segment::Line { z0, r0, z1, r1 } => ((r0 + (r1 - r0) * s, z0 + (z1 - z0) * s), (r1 - r0, z1 - z0)),
            Segment::Shoulder { z0, r0, z1, r1 } => {
                let blend = 0.5 * (1.0 - (PI * s).cos());
                let dblend = 0.5 * PI * (PI * s).sin();
                (
                    (r0 + (r1 - r0) * blend, z0 + (z1 - z0) * s),
                    ((r1 - r0) * dblend, z1 - z0),
                )
            }
            Segment::Groove { z0, z1, base, depth } => {
                let (zc, hw) = (0.5 * (z0 + z1), 0.5 * (z1 - z0));
                let phi = PI * s;
                (
                    (base - depth * phi.sin(), zc - hw * phi.cos()),
                    (-depth * PI * phi.cos(), hw * PI * phi.sin()),
                )
            }
        }
    }

    /// Radius as a function of height inside the segment's z-range.
    pub fn radius_at(&self, z: f64) -> f64 {
        match *self {
            Segment::Line { z0, r0, z1, r1 } => r0 + (r1 - r0) * (z - z0) / (z1 - z0),
            Segment::Shoulder { z0, r0, z1, r1 } => {
                let s = (z - z0) / (z1 - z0);
                r0 + (r1 - r0) * 0.5 * (1.0 - (PI * s).cos())
            }
            Segment::Groove { z0, z1, base, depth } => {
                let (zc, hw) = (0.5 * (z0 + z1), 0.5 * (z1 - z0));
                let u = ((z - zc) / hw).clamp(-1.0, 1.0);
                base - depth * (1.0 - u * u).sqrt()
            }
        }
    }

    fn pieces(&self, tess: &Tessellation) -> usize {
        let (z0, z1) = self.z_range();
        match self {
            Segment::Groove { .. } => tess.groove_pieces,
            _ => ((z1 - z0) / tess.max_dz).ceil().max(1.0) as usize,
        }
    }
}

/// Piecewise profile of one bottle.
#[derive(Debug, Clone, PartialEq)]
pub struct BottleProfile {
    pub segments: Vec<Segment>,
}

fn push_ribbed(
    segments: &mut Vec<Segment>,
    z_start: f64,
    z_end: f64,
    radius: f64,
    period: f64,
    groove: f64,
    depth: f64,
) {
    let land = period - groove;
    let mut z = z_start;
    loop {
        let g0 = z + land;
        let g1 = g0 + groove;
        if g1 > z_end + 1e-12 {
            break;
        }
        segments.push(Segment::Line {
            z0: z,
            r0: radius,
            z1: g0,
            r1: radius,
        });
        segments.push(Segment::Groove {
            z0: g0,
            z1: g1,
            base: radius,
            depth,
        });
        z = g1;
    }
    segments.push(Segment::Line {
        z0: z,
        r0: radius,
        z1: z_end.max(z),
        r1: radius,
    });
}

impl BottleProfile {
    /// Builds the profile without positivity checks; `rib_depth = 0` gives flat grooves.
    pub fn from_raw(rib_depth: f64, top_radius: f64, rib_pitch: f64, rib_spacing: f64) -> Self {
        let mut segments = vec![Segment::Line {
            z0: 0.0,
            r0: BASE_RADIUS,
            z1: LOWER_START,
            r1: BASE_RADIUS,
        }];
        push_ribbed(
            &mut segments,
            LOWER_START,
            LOWER_END,
            BASE_RADIUS,
            LOWER_PERIOD,
            LOWER_GROOVE_WIDTH,
            LOWER_GROOVE_DEPTH,
        );
        segments.push(Segment::Line {
            z0: LOWER_END,
            r0: BASE_RADIUS,
            z1: SHOULDER_START,
            r1: BASE_RADIUS,
        });
        segments.push(Segment::Shoulder {
            z0: SHOULDER_START,
            r0: BASE_RADIUS,
            z1: SHOULDER_END,
            r1: top_radius,
        });
        push_ribbed(
            &mut segments,
            SHOULDER_END,
            HEIGHT - TOP_MARGIN,
            top_radius,
            rib_pitch,
            rib_pitch - rib_spacing,
            rib_depth,
        );
        segments.push(Segment::Line {
            z0: HEIGHT - TOP_MARGIN,
            r0: top_radius,
            z1: HEIGHT,
            r1: top_radius,
        });
        // zero-length lands can appear when a groove ends exactly at a boundary
        segments.retain(|s| {
            let (z0, z1) = s.z_range();
            z1 - z0 > 1e-12
        });
        Self { segments }
    }

    pub fn new(p: &ParamVector) -> Result<Self> {
        if p.family != Family::Bottle {
            return Err(Error::InvalidParams(format!("expected a bottle, got {:?}", p.family)));
        }
        p.validate()?;
        let [depth, top, pitch, spacing] = p.values;
        Ok(Self::from_raw(depth, top, pitch, spacing))
    }

    /// Radius at height `z` in `[0, HEIGHT]`.
    pub fn radius_at(&self, z: f64) -> f64 {
        let seg = self
            .segments
            .iter()
            .find(|s| {
                let (z0, z1) = s.z_range();
                z >= z0 && z <= z1
            })
            .unwrap_or_else(|| self.segments.last().expect("profile has segments"));
        seg.radius_at(z)
    }

    /// Segment boundaries in increasing z, including both ends.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut b = vec![self.segments[0].z_range().0];
        b.extend(self.segments.iter().map(|s| s.z_range().1));
        b
    }

    /// Profile samples `(r, z)` bottom to top, shared endpoints emitted once.
    pub fn rings(&self, tess: &Tessellation) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        for (i, seg) in self.segments.iter().enumerate() {
            let n = seg.pieces(tess);
            let start = if i == 0 { 0 } else { 1 };
            for k in start..=n {
                out.push(seg.eval(k as f64 / n as f64).0);
            }
        }
        out
    }
}

pub fn gen_bottle<T: Real>(p: &ParamVector) -> Result<(TriMesh<T>, BrepGraph<T>)> {
    gen_bottle_with(p, &Tessellation::default())
}

pub fn gen_bottle_with<T: Real>(p: &ParamVector, tess: &Tessellation) -> Result<(TriMesh<T>, BrepGraph<T>)> {
    let profile = BottleProfile::new(p)?;
    let rib_width = p.values[2] - p.values[3];
    if rib_width < 2.0 * tess.min_segment {
        return Err(Error::Tessellation(format!(
            "rib width {rib_width} is below twice the minimum segment length {}",
            tess.min_segment
        )));
    }
    if tess.groove_pieces < 4 || tess.n_theta < 8 {
        return Err(Error::Tessellation(
            "need >= 4 pieces per groove and >= 8 ring vertices".into(),
        ));
    }
    let mesh = profile_mesh(&profile, tess);
    let graph = profile_graph(&profile);
    Ok((mesh.cast(), graph.cast()))
}

/// Revolves the profile into a closed mesh with flat end caps.
pub fn profile_mesh(profile: &BottleProfile, tess: &Tessellation) -> TriMesh<f64> {
    let rings = profile.rings(tess);
    let nt = tess.n_theta;
    let (cos, sin): (Vec<f64>, Vec<f64>) = (0..nt)
        .map(|j| {
            let th = 2.0 * PI * j as f64 / nt as f64;
            (th.cos(), th.sin())
        })
        .unzip();

    let mut vertices = Vec::with_capacity(rings.len() * nt + 2);
    vertices.push(Vec3::new(0.0, 0.0, rings[0].1));
    for &(r, z) in &rings {
        for j in 0..nt {
            vertices.push(Vec3::new(r * cos[j], r * sin[j], z));
        }
    }
    let top = vertices.len() as u32;
    vertices.push(Vec3::new(0.0, 0.0, rings[rings.len() - 1].1));

    let v = |ring: usize, j: usize| (1 + ring * nt + j % nt) as u32;
    let mut triangles = Vec::with_capacity(2 * nt * rings.len());
    for j in 0..nt {
        triangles.push([0, v(0, j + 1), v(0, j)]);
    }
    for i in 0..rings.len() - 1 {
        for j in 0..nt {
            triangles.push([v(i, j), v(i, j + 1), v(i + 1, j + 1)]);
            triangles.push([v(i, j), v(i + 1, j + 1), v(i + 1, j)]);
        }
    }
    let last = rings.len() - 1;
    for j in 0..nt {
        triangles.push([top, v(last, j), v(last, j + 1)]);
    }
    TriMesh::new(vertices, triangles)
}

fn theta(u: f64) -> f64 {
    // u in [0, 1] over GRID samples; exclude the duplicate seam sample
    2.0 * PI * u * 0.9
}

fn profile_graph(profile: &BottleProfile) -> BrepGraph<f64> {
    let segs = &profile.segments;
    let (r_bot, z_bot) = segs[0].eval(0.0).0;
    let (r_top, z_top) = segs[segs.len() - 1].eval(1.0).0;

    let mut faces = Vec::with_capacity(segs.len() + 2);
    faces.push(FacePatch::from_fn(|u, v| {
        let (c, s) = (theta(u).cos(), theta(u).sin());
        (
            Vec3::new(r_bot * v * c, r_bot * v * s, z_bot),
            Vec3::new(0.0, 0.0, -1.0),
        )
    }));
    for seg in segs {
        faces.push(FacePatch::from_fn(|u, v| {
            let (c, s) = (theta(u).cos(), theta(u).sin());
            let ((r, z), (dr, dz)) = seg.eval(v);
            let (nr, nz) = (dz, -dr);
            (Vec3::new(r * c, r * s, z), Vec3::new(nr * c, nr * s, nz))
        }));
    }
    faces.push(FacePatch::from_fn(|u, v| {
        let (c, s) = (theta(u).cos(), theta(u).sin());
        (Vec3::new(r_top * v * c, r_top * v * s, z_top), Vec3::new(0.0, 0.0, 1.0))
    }));

    let circle = |r: f64, z: f64| {
        EdgeCurve::from_fn(|s| {
            let th: f64 = 2.0 * PI * s * 0.9;
            (
                Vec3::new(r * th.cos(), r * th.sin(), z),
                Vec3::new(-th.sin(), th.cos(), 0.0),
            )
        })
    };
    let mut edges = Vec::with_capacity(segs.len() + 1);
    let mut adjacency = Vec::with_capacity(segs.len() + 1);
    edges.push(circle(r_bot, z_bot));
    adjacency.push([0, 1, 0]);
    for (i, seg) in segs.iter().enumerate() {
        let (r, z) = seg.eval(1.0).0;
        adjacency.push([i + 1, i + 2, edges.len()]);
        edges.push(circle(r, z));
    }
    BrepGraph {
        faces,
        edges,
        adjacency,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Composite Gauss-Legendre quadrature of pi * r(z)^2 between profile breakpoints.
    fn quadrature_volume(profile: &BottleProfile) -> f64 {
        let nodes = [
            -0.906_179_845_938_664,
            -0.538_469_310_105_683,
            0.0,
            0.538_469_310_105_683,
            0.906_179_845_938_664,
        ];
        let weights = [
            0.236_926_885_056_189,
            0.478_628_670_499_366,
            0.568_888_888_888_889,
            0.478_628_670_499_366,
            0.236_926_885_056_189,
        ];
        let bps = profile.breakpoints();
        let mut total = 0.0;
        for w in bps.windows(2) {
            let sub = 64;
            let h = (w[1] - w[0]) / sub as f64;
            for k in 0..sub {
                let (a, b) = (w[0] + k as f64 * h, w[0] + (k + 1) as f64 * h);
                let (m, half) = (0.5 * (a + b), 0.5 * (b - a));
                for (x, wt) in nodes.iter().zip(weights) {
                    let r = profile.radius_at(m + half * x);
                    total += wt * half * PI * r * r;
                }
            }
        }
        total
    }

    #[test]
    fn volume_matches_quadrature() {
        for p in [
            ParamVector::bottle(0.01, 0.15, 0.08, 0.02),
            ParamVector::bottle(0.05, 0.35, 0.16, 0.06),
            ParamVector::bottle(0.03, 0.25, 0.12, 0.04),
            ParamVector::bottle(0.05, 0.15, 0.08, 0.06),
        ] {
            let (mesh, graph) = gen_bottle::<f64>(&p).unwrap();
            mesh.check_watertight().unwrap();
            graph.validate().unwrap();
            let oracle = quadrature_volume(&BottleProfile::new(&p).unwrap());
            let rel = (mesh.signed_volume() - oracle).abs() / oracle;
            assert!(rel < 0.01, "{p:?}: rel err {rel}");
        }
    }

    #[test]
    fn zero_depth_reduces_to_smooth_profile() {
        let flat = BottleProfile::from_raw(0.0, 0.25, 0.12, 0.04);
        let mesh = profile_mesh(&flat, &Tessellation::default());
        mesh.check_watertight().unwrap();
        let upper: Vec<_> = flat.segments.iter().filter(|s| s.z_range().0 >= SHOULDER_END).collect();
        assert!(upper
            .iter()
            .all(|s| (s.radius_at(0.5 * (s.z_range().0 + s.z_range().1)) - 0.25).abs() < 1e-15));
        let oracle = quadrature_volume(&flat);
        assert!((mesh.signed_volume() - oracle).abs() / oracle < 0.01);
    }

    #[test]
    fn pitch_only_changes_the_upper_half() {
        let (a, _) = gen_bottle::<f64>(&ParamVector::bottle(0.03, 0.25, 0.08, 0.04)).unwrap();
        let (b, _) = gen_bottle::<f64>(&ParamVector::bottle(0.03, 0.25, 0.16, 0.04)).unwrap();
        let below = |m: &TriMesh<f64>| -> Vec<Vec3<f64>> {
            m.vertices.iter().copied().filter(|v| v.z < SHOULDER_START).collect()
        };
        assert!(!below(&a).is_empty());
        assert_eq!(below(&a), below(&b));
        assert_ne!(a.vertices, b.vertices);
    }

    #[test]
    fn narrow_rib_is_a_tessellation_error() {
        let tess = Tessellation {
            min_segment: 0.02,
            ..Tessellation::default()
        };
        let r = gen_bottle_with::<f64>(&ParamVector::bottle(0.01, 0.15, 0.08, 0.06), &tess);
        assert!(matches!(r, Err(Error::Tessellation(_))));
    }

    #[test]
    fn grooves_span_at_least_four_rings() {
        let profile = BottleProfile::from_raw(0.03, 0.25, 0.08, 0.06);
        let rings = profile.rings(&Tessellation::default());
        for s in &profile.segments {
            if let Segment::Groove { z0, z1, .. } = *s {
                let inside = rings.iter().filter(|(_, z)| *z >= z0 && *z <= z1).count();
                assert!(inside >= 5);
            }
        }
    }

    #[test]
    fn graph_is_a_chain_of_revolved_patches() {
        let (_, g) = gen_bottle::<f64>(&ParamVector::bottle(0.03, 0.25, 0.12, 0.04)).unwrap();
        assert_eq!(g.edges.len(), g.faces.len() - 1);
        for (i, a) in g.adjacency.iter().enumerate() {
            assert_eq!(*a, [i, i + 1, i]);
        }
    }
}
