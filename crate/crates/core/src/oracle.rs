//! Independent brute-force references used by the validation suites.
//!
//! Nothing here shares code paths with the accelerated implementations beyond
//! the triangle closest-point primitive.

use crate::geom::{TriMesh, Vec3};
use crate::sdf::closest_point_on_triangle;
use crate::Real;

/// Unsigned distance by scanning every triangle.
pub fn brute_force_distance<T: Real>(mesh: &TriMesh<T>, p: Vec3<T>) -> T {
    (0..mesh.triangles.len())
        .map(|t| {
            let [a, b, c] = mesh.corners(t);
            (closest_point_on_triangle(p, a, b, c).0 - p).norm_squared()
        })
        .fold(T::infinity(), T::min)
        .sqrt()
}

/// Inside test by counting crossings of a fixed generic ray (Moller-Trumbore).
pub fn ray_parity_inside(mesh: &TriMesh<f64>, p: Vec3<f64>) -> bool {
    let dir = Vec3::new(0.577_215_664_9, 0.618_033_988_7, 0.533_722_104_3).normalized();
    let mut hits = 0usize;
    for t in 0..mesh.triangles.len() {
        let [a, b, c] = mesh.corners(t);
        let e1 = b - a;
        let e2 = c - a;
        let h = dir.cross(e2);
        let det = e1.dot(h);
        if det.abs() < 1e-15 {
            continue;
        }
        let inv = 1.0 / det;
        let s = p - a;
        let u = s.dot(h) * inv;
        if !(0.0..=1.0).contains(&u) {
            continue;
        }
        let q = s.cross(e1);
        let v = dir.dot(q) * inv;
        if v < 0.0 || u + v > 1.0 {
            continue;
        }
        if e2.dot(q) * inv > 0.0 {
            hits += 1;
        }
    }
    hits % 2 == 1
}

/// Inverse-distance-squared mean of the `k` nearest samples by full scan.
pub fn brute_force_idw(coords: &[[f32; 3]], values: &[f32], q: [f64; 3], k: usize) -> f64 {
    let mut d: Vec<(f64, f64)> = coords
        .iter()
        .zip(values)
        .map(|(c, &v)| {
            let dx = c[0] as f64 - q[0];
            let dy = c[1] as f64 - q[1];
            let dz = c[2] as f64 - q[2];
            (dx * dx + dy * dy + dz * dz, v as f64)
        })
        .collect();
    d.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    if d[0].0.sqrt() < 1e-12 {
        return d[0].1;
    }
    let (mut num, mut den) = (0.0, 0.0);
    for &(d2, v) in d.iter().take(k) {
        num += v / d2;
        den += 1.0 / d2;
    }
    num / den
}

/// Central-difference gradient of `f` at `x`.
pub fn central_difference(f: &mut dyn FnMut(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut xs = x.to_vec();
    (0..x.len())
        .map(|i| {
            xs[i] = x[i] + h;
            let up = f(&xs);
            xs[i] = x[i] - h;
            let down = f(&xs);
            xs[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Every differentiable tape primitive, by name.
pub const PRIMITIVES: &[&str] = &[
    "matmul",
    "add",
    "sub",
    "mul",
    "scale",
    "add_bias",
    "concat",
    "relu",
    "elu",
    "tanh",
    "sin",
    "cos",
    "sigmoid",
    "conv2d",
    "conv1d",
    "mean_pool",
    "max_pool",
    "reduce_mean",
    "mse",
    "weighted_mse",
    "gather_rows",
    "scatter_add_rows",
];

/// Largest relative discrepancy between tape gradients and central differences
/// for one primitive on a random shape drawn from `seed`.
///
/// The primitive's output is contracted with a fixed random tensor so every
/// output element contributes to the scalar being differentiated. Relative
/// error is `|a - n| / max(|a|, |n|, 1e-3)`.
pub fn gradcheck_primitive(name: &str, seed: u64) -> f64 {
    use crate::tensor::{Tape, Tensor, Var};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9);
    let mut dim = |lo: usize, hi: usize| rng.random_range(lo..=hi);
    let (m, k, n) = (dim(1, 5), dim(1, 5), dim(1, 5));
    let (imgs, h, w, cin, cout) = (dim(1, 2), dim(2, 4), dim(2, 4), dim(1, 3), dim(1, 3));
    let segs = dim(1, 3);
    let seg_len: Vec<usize> = (0..segs).map(|_| dim(1, 4)).collect();
    let mut offsets = vec![0];
    for l in &seg_len {
        offsets.push(offsets.last().unwrap() + l);
    }
    let idx: Vec<usize> = (0..n + 2).map(|_| dim(0, m - 1)).collect();

    let shapes: Vec<Vec<usize>> = match name {
        "matmul" => vec![vec![m, k], vec![k, n]],
        "add" | "sub" | "mul" | "mse" | "weighted_mse" => vec![vec![m, n], vec![m, n]],
        "add_bias" => vec![vec![m, n], vec![n]],
        "concat" => vec![vec![m, k], vec![m, n], vec![m, 2]],
        "conv2d" => vec![vec![imgs * h * w, cin], vec![9 * cin, cout], vec![cout]],
        "conv1d" => vec![vec![imgs * h, cin], vec![3 * cin, cout], vec![cout]],
        "mean_pool" | "max_pool" => vec![vec![*offsets.last().unwrap(), n]],
        "gather_rows" => vec![vec![m, n]],
        "scatter_add_rows" => vec![vec![idx.len(), n]],
        _ => vec![vec![m, n]],
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let inputs: Vec<Vec<f64>> = shapes
        .iter()
        .map(|s| {
            (0..s.iter().product::<usize>())
                .map(|_| {
                    // Keep clear of the kinks of relu and the max selection.
                    let v: f64 = rng.random_range(0.05..1.5);
                    if rng.random::<bool>() {
                        v
                    } else {
                        -v
                    }
                })
                .collect()
        })
        .collect();
    let weights: Vec<f64> = (0..m * n).map(|_| rng.random_range(0.5..3.0)).collect();

    let forward = |tape: &mut Tape<f64>, vars: &[Var]| -> Var {
        let r = match name {
            "matmul" => tape.matmul(vars[0], vars[1]),
            "add" => tape.add(vars[0], vars[1]),
            "sub" => tape.sub(vars[0], vars[1]),
            "mul" => tape.mul(vars[0], vars[1]),
            "scale" => Ok(tape.scale(vars[0], -1.7)),
            "add_bias" => tape.add_bias(vars[0], vars[1]),
            "concat" => tape.concat(vars),
            "relu" => Ok(tape.relu(vars[0])),
            "elu" => Ok(tape.elu(vars[0])),
            "tanh" => Ok(tape.tanh(vars[0])),
            "sin" => Ok(tape.sin(vars[0])),
            "cos" => Ok(tape.cos(vars[0])),
            "sigmoid" => Ok(tape.sigmoid(vars[0])),
            "conv2d" => tape.conv2d(vars[0], vars[1], vars[2], imgs, h, w),
            "conv1d" => tape.conv1d(vars[0], vars[1], vars[2], imgs, h),
            "mean_pool" => tape.mean_pool(vars[0], &offsets),
            "max_pool" => tape.max_pool(vars[0], &offsets),
            "reduce_mean" => Ok(tape.reduce_mean(vars[0])),
            "mse" => tape.mse(vars[0], vars[1]),
            "weighted_mse" => tape.weighted_mse(vars[0], vars[1], &weights),
            "gather_rows" => tape.gather_rows(vars[0], &idx),
            "scatter_add_rows" => tape.scatter_add_rows(vars[0], &idx, m),
            other => panic!("unknown primitive {other}"),
        };
        r.expect("shapes built to match")
    };
    let mut projection: Option<Vec<f64>> = None;
    let mut run = |vals: &[Vec<f64>], grads: bool| -> (f64, Vec<Vec<f64>>) {
        let mut tape = Tape::new();
        let vars: Vec<Var> = vals
            .iter()
            .zip(&shapes)
            .map(|(v, s)| tape.leaf(Tensor::new(s.clone(), v.clone()).unwrap()))
            .collect();
        let out = forward(&mut tape, &vars);
        let shape = tape.value(out).shape().to_vec();
        let len = tape.value(out).len();
        let proj = projection
            .get_or_insert_with(|| {
                let mut r = ChaCha8Rng::seed_from_u64(seed.wrapping_add(7));
                (0..len).map(|_| r.random_range(-1.0..1.0)).collect()
            })
            .clone();
        let p = tape.constant(Tensor::new(shape, proj).unwrap());
        let prod = tape.mul(out, p).unwrap();
        let mean = tape.reduce_mean(prod);
        let loss = tape.scale(mean, len as f64);
        let value = tape.value(loss).item();
        if !grads {
            return (value, Vec::new());
        }
        let g = tape.backward(loss).unwrap();
        let gs = vars.iter().map(|&v| g.get(v).unwrap().data().to_vec()).collect();
        (value, gs)
    };
    let (_, analytic) = run(&inputs, true);
    let mut worst: f64 = 0.0;
    for (slot, a) in analytic.iter().enumerate() {
        let mut f = |x: &[f64]| {
            let mut vals = inputs.clone();
            vals[slot] = x.to_vec();
            run(&vals, false).0
        };
        let num = central_difference(&mut f, &inputs[slot], 1e-4);
        for (x, y) in a.iter().zip(&num) {
            worst = worst.max((x - y).abs() / x.abs().max(y.abs()).max(1e-3));
        }
    }
    worst
}
