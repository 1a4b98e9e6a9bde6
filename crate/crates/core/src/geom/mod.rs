//! Procedural parametric geometry: crash boxes, ribbed bottles, design grids.

mod bottle;
mod brep;
mod crashbox;
mod grid;
mod mesh;
mod normalize;
mod params;
mod vec3;

pub use bottle::{gen_bottle, gen_bottle_with, profile_mesh, BottleProfile, Segment, Tessellation};
pub use brep::{BrepGraph, EdgeCurve, FacePatch, CHANNELS, CURVE, GRID};
pub use crashbox::gen_crashbox;
pub use grid::{sample_design_grid, DesignGrid};
pub use mesh::TriMesh;
pub use normalize::{normalize_geometry, Transform};
pub use params::{Family, ParamVector};
pub use vec3::{Aabb, Vec3};

use crate::{Real, Result};

/// Generates the mesh and graph for any family.
pub fn generate<T: Real>(p: &ParamVector) -> Result<(TriMesh<T>, BrepGraph<T>)> {
    match p.family {
        Family::CrashBox => gen_crashbox(p),
        Family::Bottle => gen_bottle(p),
    }
}

/// Union of mesh bounding boxes over every grid entry.
pub fn family_bounds<T: Real>(grid: &DesignGrid) -> Result<Aabb<T>> {
    let mut b = Aabb::empty();
    for p in &grid.entries {
        let (m, _) = generate::<T>(p)?;
        b = b.union(&m.bounds());
    }
    Ok(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn crash_box_family_fits_unit_cube() {
        let grid = sample_design_grid(Family::CrashBox, 3, Family::CrashBox.default_ranges(), 0.1, 0).unwrap();
        let bounds = family_bounds::<f64>(&grid).unwrap();
        let mut max_abs: f64 = 0.0;
        for p in &grid.entries {
            let (m, g) = generate::<f64>(p).unwrap();
            let (nm, ng, _) = normalize_geometry(&m, &g, &bounds).unwrap();
            ng.validate().unwrap();
            for v in &nm.vertices {
                for k in 0..3 {
                    assert!(v[k].abs() <= 1.0 + 1e-12);
                    max_abs = max_abs.max(v[k].abs());
                }
            }
        }
        assert!((max_abs - 1.0).abs() < 1e-12);
    }

    #[test]
    fn graphs_are_deterministic() {
        let p = ParamVector::bottle(0.02, 0.3, 0.1, 0.03);
        let (_, a) = generate::<f64>(&p).unwrap();
        let (_, b) = generate::<f64>(&p).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn thickness_increases_volume_over_the_grid() {
        let grid = sample_design_grid(Family::CrashBox, 4, Family::CrashBox.default_ranges(), 0.0, 0).unwrap();
        for e in &grid.entries {
            let [h, w, l, t] = e.values;
            let thicker = ParamVector::crash_box(h, w, l, t + 0.01);
            let (a, _) = gen_crashbox::<f64>(e).unwrap();
            let (b, _) = gen_crashbox::<f64>(&thicker).unwrap();
            assert!(b.signed_volume() > a.signed_volume());
        }
    }
}
