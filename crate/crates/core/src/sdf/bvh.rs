//! Bounding volume hierarchy for closest-point queries on triangle meshes.

use crate::geom::{Aabb, TriMesh, Vec3};
use crate::Real;

const LEAF_SIZE: usize = 4;

/// Which part of a triangle the closest point lies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Feature {
    /// Corner `0..3`.
    Vertex(u8),
    /// Edge from corner `k` to corner `(k + 1) % 3`.
    Edge(u8),
    Face,
}

#[derive(Debug, Clone, Copy)]
pub struct ClosestHit<T> {
    pub triangle: usize,
    pub point: Vec3<T>,
    pub distance_squared: T,
    pub feature: Feature,
}

/// Closest point on triangle `abc` to `p` (Ericson, Real-Time Collision Detection 5.1.5).
pub fn closest_point_on_triangle<T: Real>(p: Vec3<T>, a: Vec3<T>, b: Vec3<T>, c: Vec3<T>) -> (Vec3<T>, Feature) {
    let zero = T::zero();
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(ap);
    let d2 = ac.dot(ap);
    if d1 <= zero && d2 <= zero {
        return (a, Feature::Vertex(0));
    }
    let bp = p - b;
    let d3 = ab.dot(bp);
    let d4 = ac.dot(bp);
    if d3 >= zero && d4 <= d3 {
        return (b, Feature::Vertex(1));
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= zero && d1 >= zero && d3 <= zero {
        let v = d1 / (d1 - d3);
        return (a + ab * v, Feature::Edge(0));
    }
    let cp = p - c;
    let d5 = ab.dot(cp);
    let d6 = ac.dot(cp);
    if d6 >= zero && d5 <= d6 {
        return (c, Feature::Vertex(2));
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= zero && d2 >= zero && d6 <= zero {
        let w = d2 / (d2 - d6);
        return (a + ac * w, Feature::Edge(2));
    }
    let va = d3 * d6 - d5 * d4;
    if va <= zero && (d4 - d3) >= zero && (d5 - d6) >= zero {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return (b + (c - b) * w, Feature::Edge(1));
    }
    let denom = T::one() / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    (a + ab * v + ac * w, Feature::Face)
}

#[derive(Debug, Clone)]
enum Node<T> {
    Leaf { bounds: Aabb<T>, start: usize, end: usize },
    Inner { bounds: Aabb<T>, left: usize, right: usize },
}

impl<T: Real> Node<T> {
    fn bounds(&self) -> &Aabb<T> {
        match self {
            Node::Leaf { bounds, .. } | Node::Inner { bounds, .. } => bounds,
        }
    }
}

/// Closest-point acceleration structure; valid for any triangle soup.
#[derive(Debug, Clone)]
pub struct Bvh<T> {
    mesh: TriMesh<T>,
    nodes: Vec<Node<T>>,
    order: Vec<usize>,
}

impl<T: Real> Bvh<T> {
    pub fn build(mesh: &TriMesh<T>) -> Self {
        let n = mesh.triangles.len();
        let boxes: Vec<Aabb<T>> = (0..n).map(|t| Aabb::from_points(&mesh.corners(t))).collect();
        let centroids: Vec<Vec3<T>> = boxes.iter().map(|b| b.center()).collect();
        let mut order: Vec<usize> = (0..n).collect();
        let mut nodes = Vec::with_capacity(2 * n / LEAF_SIZE + 1);
        if n > 0 {
            build_node(&mut nodes, &mut order, 0, n, &boxes, &centroids);
        }
        Self {
            mesh: mesh.clone(),
            nodes,
            order,
        }
    }

    pub fn mesh(&self) -> &TriMesh<T> {
        &self.mesh
    }

    /// Closest surface point to `p`; `None` only for an empty mesh.
    pub fn closest(&self, p: Vec3<T>) -> Option<ClosestHit<T>> {
        if self.nodes.is_empty() {
            return None;
        }
        let mut best: Option<ClosestHit<T>> = None;
        let mut best_d2 = T::infinity();
        let mut stack: Vec<(usize, T)> = Vec::with_capacity(64);
        stack.push((0, self.nodes[0].bounds().distance_squared(p)));
        while let Some((ni, d2)) = stack.pop() {
            if d2 > best_d2 {
                continue;
            }
            match &self.nodes[ni] {
                Node::Leaf { start, end, .. } => {
                    for &t in &self.order[*start..*end] {
                        let [a, b, c] = self.mesh.corners(t);
                        let (q, feature) = closest_point_on_triangle(p, a, b, c);
                        let dq = (q - p).norm_squared();
                        // ties resolve to the lowest triangle index so the answer is order independent
                        let better = dq < best_d2 || (dq == best_d2 && best.is_some_and(|h| t < h.triangle));
                        if better {
                            best_d2 = dq;
                            best = Some(ClosestHit {
                                triangle: t,
                                point: q,
                                distance_squared: dq,
                                feature,
                            });
                        }
                    }
                }
                Node::Inner { left, right, .. } => {
                    let dl = self.nodes[*left].bounds().distance_squared(p);
                    let dr = self.nodes[*right].bounds().distance_squared(p);
                    // push the farther child first so the nearer one is visited next
                    if dl <= dr {
                        stack.push((*right, dr));
                        stack.push((*left, dl));
                    } else {
                        stack.push((*left, dl));
                        stack.push((*right, dr));
                    }
                }
            }
        }
        best
    }

    /// Unsigned distance to the surface.
    pub fn distance(&self, p: Vec3<T>) -> T {
        self.closest(p).map_or(T::infinity(), |h| h.distance_squared.sqrt())
    }
}

fn build_node<T: Real>(
    nodes: &mut Vec<Node<T>>,
    order: &mut [usize],
    start: usize,
    end: usize,
    boxes: &[Aabb<T>],
    centroids: &[Vec3<T>],
) -> usize {
    let mut bounds = Aabb::empty();
    let mut cbounds = Aabb::empty();
    for &t in &order[start..end] {
        bounds = bounds.union(&boxes[t]);
        cbounds.grow(centroids[t]);
    }
    let id = nodes.len();
    if end - start <= LEAF_SIZE {
        nodes.push(Node::Leaf { bounds, start, end });
        return id;
    }
    let ext = cbounds.extent();
    let axis = if ext.x >= ext.y && ext.x >= ext.z {
        0
    } else if ext.y >= ext.z {
        1
    } else {
        2
    };
    let mid = (start + end) / 2;
    order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
        centroids[a][axis]
            .partial_cmp(&centroids[b][axis])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    nodes.push(Node::Leaf { bounds, start, end });
    let left = build_node(nodes, order, start, mid, boxes, centroids);
    let right = build_node(nodes, order, mid, end, boxes, centroids);
    nodes[id] = Node::Inner { bounds, left, right };
    id
}
