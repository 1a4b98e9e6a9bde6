//! Closed-form stand-ins for simulated structural responses.
//!
//! Both targets are smooth deterministic functions of the design parameters,
//! so a model fed the parameters themselves sets the attainable floor.

use std::f64::consts::PI;

use crate::geom::{Family, ParamVector};

/// `frames` evenly spaced times covering `[0, 1]`.
pub fn frame_grid(frames: usize) -> Vec<f64> {
    match frames {
        0 => Vec::new(),
        1 => vec![0.0],
        n => (0..n).map(|i| i as f64 / (n - 1) as f64).collect(),
    }
}

/// Amplitude and phase of the reaction-force curve.
fn force_shape(p: &ParamVector) -> (f64, f64) {
    let [a, b, c, d] = p.values;
    match p.family {
        // height, width, length, thickness
        Family::CrashBox => (d * 2.0 * (b + a), PI * c),
        // rib thickness, top radius, rib pitch, rib spacing
        Family::Bottle => (a * b * (1.0 + 1.0 / c), 2.0 * PI * d / c),
    }
}

/// `F(tau) = A (1 - e^{-6 tau}) (1 + 0.25 sin(14 tau + phi))`.
pub fn proxy_reaction_force(p: &ParamVector, frames: &[f64]) -> Vec<f64> {
    let (amp, phase) = force_shape(p);
    frames
        .iter()
        .map(|&t| amp * (1.0 - (-6.0 * t).exp()) * (1.0 + 0.25 * (14.0 * t + phase).sin()))
        .collect()
}

/// Height of the clamped end of the part.
pub fn fixed_end_z(p: &ParamVector) -> f64 {
    match p.family {
        Family::CrashBox => -0.5 * p.values[2],
        Family::Bottle => 0.0,
    }
}

/// Displacement `u = tau * c(p) * (z - z_min) * dir(x, p)` with `dir` a unit
/// vector that leans inward and bulges with a parameter-dependent wavelength.
pub fn displacement_at(p: &ParamVector, x: [f64; 3], tau: f64) -> [f64; 3] {
    let rise = x[2] - fixed_end_z(p);
    let [a, b, c, d] = p.values;
    let (amp, lateral) = match p.family {
        Family::CrashBox => {
            let s = (PI * rise / c).sin();
            (0.1 / (1.0 + 20.0 * d), [s * x[0] / b, s * x[1] / a])
        }
        Family::Bottle => {
            let k = (2.0 * PI * x[2] / c).cos() / b;
            (0.1 * d / c, [k * x[0], k * x[1]])
        }
    };
    let raw = [lateral[0], lateral[1], -1.0];
    let norm = raw.iter().map(|v| v * v).sum::<f64>().sqrt();
    let f = tau * amp * rise / norm;
    [f * raw[0], f * raw[1], f * raw[2]]
}

/// Field over `nodes` at each frame, laid out `[frame][node][axis]`.
pub fn proxy_displacement(p: &ParamVector, nodes: &[[f64; 3]], frames: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(frames.len() * nodes.len() * 3);
    for &t in frames {
        for &x in nodes {
            out.extend(displacement_at(p, x, t));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn force_starts_at_zero_and_is_repeatable() {
        let frames = frame_grid(50);
        for p in [
            ParamVector::crash_box(1.0, 0.8, 2.0, 0.05),
            ParamVector::bottle(0.03, 0.25, 0.12, 0.04),
        ] {
            let f = proxy_reaction_force(&p, &frames);
            assert_eq!(f[0], 0.0);
            assert_eq!(f, proxy_reaction_force(&p, &frames));
        }
    }

    #[test]
    fn thicker_walls_carry_more_load_where_oscillation_is_positive() {
        let frames = frame_grid(50);
        let thin = ParamVector::crash_box(1.0, 0.8, 2.0, 0.03);
        let thick = ParamVector::crash_box(1.0, 0.8, 2.0, 0.09);
        let (f1, f2) = (
            proxy_reaction_force(&thin, &frames),
            proxy_reaction_force(&thick, &frames),
        );
        for (i, &t) in frames.iter().enumerate() {
            if 1.0 + 0.25 * (14.0 * t + PI * 2.0).sin() > 0.0 {
                assert!(f2[i] >= f1[i]);
            }
        }
    }

    #[test]
    fn displacement_vanishes_at_rest_and_at_the_clamp() {
        let p = ParamVector::crash_box(1.0, 0.8, 2.0, 0.05);
        let nodes = [[0.5, 0.1, -1.0], [-0.4, 0.4, -1.0], [0.2, 0.3, 0.7]];
        let u = proxy_displacement(&p, &nodes, &[0.0, 0.5, 1.0]);
        assert!(u[..9].iter().all(|&v| v == 0.0));
        for f in 0..3 {
            for n in 0..2 {
                assert!(u[f * 9 + n * 3..f * 9 + n * 3 + 3].iter().all(|&v| v == 0.0));
            }
        }
        assert!(u[9 + 6..9 + 9].iter().any(|&v| v != 0.0));
    }

    /// Component-wise restatement of the displacement field.
    fn reference(p: &ParamVector, x: [f64; 3], tau: f64) -> [f64; 3] {
        match p.family {
            Family::CrashBox => {
                let [h, w, l, t] = p.values;
                let zr = x[2] + l / 2.0;
                let s = (PI * zr / l).sin();
                let (dx, dy) = (s * x[0] / w, s * x[1] / h);
                let len = (dx * dx + dy * dy + 1.0).sqrt();
                let m = tau * 0.1 / (1.0 + 20.0 * t) * zr;
                [m * dx / len, m * dy / len, -m / len]
            }
            Family::Bottle => {
                let [_, r, pitch, spacing] = p.values;
                let k = (2.0 * PI * x[2] / pitch).cos() / r;
                let (dx, dy) = (k * x[0], k * x[1]);
                let len = (dx * dx + dy * dy + 1.0).sqrt();
                let m = tau * 0.1 * spacing / pitch * x[2];
                [m * dx / len, m * dy / len, -m / len]
            }
        }
    }

    #[test]
    fn displacement_matches_componentwise_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for p in [
            ParamVector::crash_box(1.1, 0.7, 2.5, 0.08),
            ParamVector::bottle(0.02, 0.3, 0.1, 0.05),
        ] {
            for _ in 0..100 {
                let x = [
                    rng.random_range(-0.6..0.6),
                    rng.random_range(-0.6..0.6),
                    rng.random_range(-1.2..2.0),
                ];
                let tau = rng.random::<f64>();
                let (a, b) = (displacement_at(&p, x, tau), reference(&p, x, tau));
                for k in 0..3 {
                    assert!((a[k] - b[k]).abs() <= 1e-12 * (1.0 + b[k].abs()));
                }
            }
        }
    }
}
