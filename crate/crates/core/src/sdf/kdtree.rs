//! Static 3D k-d tree over `f32` points with exact k-nearest-neighbour search.

const BUCKET: usize = 16;

#[derive(Debug, Clone)]
enum KdNode {
    Leaf { start: u32, end: u32 },
    Split { dim: u8, value: f32, left: u32, right: u32 },
}

#[derive(Debug, Clone, Default)]
pub struct KdTree {
    nodes: Vec<KdNode>,
    /// Point indices, grouped by leaf.
    order: Vec<u32>,
}

/// Nearest neighbour: squared distance and point index.
pub type Neighbor = (f64, usize);

impl KdTree {
    pub fn build(points: &[[f32; 3]]) -> Self {
        let mut order: Vec<u32> = (0..points.len() as u32).collect();
        let mut nodes = Vec::new();
        if !points.is_empty() {
            build(&mut nodes, &mut order, 0, points.len(), points);
        }
        Self { nodes, order }
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// The `k` nearest points sorted by increasing distance (ties by index).
    pub fn nearest(&self, points: &[[f32; 3]], q: [f64; 3], k: usize) -> Vec<Neighbor> {
        let mut best: Vec<Neighbor> = Vec::with_capacity(k + 1);
        if self.nodes.is_empty() || k == 0 {
            return best;
        }
        self.search(0, points, q, k, &mut best);
        best
    }

    fn search(&self, ni: usize, points: &[[f32; 3]], q: [f64; 3], k: usize, best: &mut Vec<Neighbor>) {
        match self.nodes[ni] {
            KdNode::Leaf { start, end } => {
                for &i in &self.order[start as usize..end as usize] {
                    let p = points[i as usize];
                    let d2 = (p[0] as f64 - q[0]).powi(2) + (p[1] as f64 - q[1]).powi(2) + (p[2] as f64 - q[2]).powi(2);
                    let cand = (d2, i as usize);
                    if best.len() < k || cand < best[best.len() - 1] {
                        let pos = best.partition_point(|b| *b < cand);
                        best.insert(pos, cand);
                        best.truncate(k);
                    }
                }
            }
            KdNode::Split {
                dim,
                value,
                left,
                right,
            } => {
                let diff = q[dim as usize] - value as f64;
                let (near, far) = if diff <= 0.0 { (left, right) } else { (right, left) };
                self.search(near as usize, points, q, k, best);
                if best.len() < k || diff * diff <= best[best.len() - 1].0 {
                    self.search(far as usize, points, q, k, best);
                }
            }
        }
    }
}

fn build(nodes: &mut Vec<KdNode>, order: &mut [u32], start: usize, end: usize, points: &[[f32; 3]]) -> usize {
    let id = nodes.len();
    if end - start <= BUCKET {
        nodes.push(KdNode::Leaf {
            start: start as u32,
            end: end as u32,
        });
        return id;
    }
    let mut lo = [f32::INFINITY; 3];
    let mut hi = [f32::NEG_INFINITY; 3];
    for &i in &order[start..end] {
        for d in 0..3 {
            lo[d] = lo[d].min(points[i as usize][d]);
            hi[d] = hi[d].max(points[i as usize][d]);
        }
    }
    let dim = (0..3)
        .max_by(|&a, &b| (hi[a] - lo[a]).total_cmp(&(hi[b] - lo[b])))
        .unwrap_or(0);
    let mid = (start + end) / 2;
    order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
        points[a as usize][dim]
            .total_cmp(&points[b as usize][dim])
            .then(a.cmp(&b))
    });
    let value = points[order[mid] as usize][dim];
    nodes.push(KdNode::Leaf { start: 0, end: 0 });
    let left = build(nodes, order, start, mid, points) as u32;
    let right = build(nodes, order, mid, end, points) as u32;
    nodes[id] = KdNode::Split {
        dim: dim as u8,
        value,
        left,
        right,
    };
    id
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn knn_matches_linear_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let pts: Vec<[f32; 3]> = (0..3000)
            .map(|_| {
                [
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                ]
            })
            .collect();
        let tree = KdTree::build(&pts);
        for _ in 0..100 {
            let q = [
                rng.random_range(-1.2..1.2),
                rng.random_range(-1.2..1.2),
                rng.random_range(-1.2..1.2),
            ];
            let got = tree.nearest(&pts, q, 8);
            let mut all: Vec<Neighbor> = pts
                .iter()
                .enumerate()
                .map(|(i, p)| {
                    let d2 = (p[0] as f64 - q[0]).powi(2) + (p[1] as f64 - q[1]).powi(2) + (p[2] as f64 - q[2]).powi(2);
                    (d2, i)
                })
                .collect();
            all.sort_by(|a, b| a.partial_cmp(b).unwrap());
            assert_eq!(got, all[..8].to_vec());
        }
    }

    #[test]
    fn fewer_points_than_k() {
        let pts = [[0.0f32, 0.0, 0.0], [1.0, 0.0, 0.0]];
        let tree = KdTree::build(&pts);
        assert_eq!(tree.nearest(&pts, [0.9, 0.0, 0.0], 5).len(), 2);
    }
}
