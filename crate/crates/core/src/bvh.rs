//! Bounding-volume hierarchy over a triangle list.

use crate::geom::{segment_triangle, Aabb, Point, SegmentHit, Triangle};

const LEAF_SIZE: usize = 4;

#[derive(Debug, Clone)]
enum Node {
    Leaf { aabb: Aabb, start: usize, end: usize },
    Inner { aabb: Aabb, left: usize, right: usize },
}

impl Node {
    fn aabb(&self) -> &Aabb {
        match self {
            Node::Leaf { aabb, .. } | Node::Inner { aabb, .. } => aabb,
        }
    }
}

/// Median-split AABB tree. Triangle ids are positions in the input slice.
#[derive(Debug, Clone)]
pub struct TriangleIndex {
    triangles: Vec<Triangle>,
    order: Vec<usize>,
    nodes: Vec<Node>,
}

impl TriangleIndex {
    pub fn new(triangles: Vec<Triangle>) -> Self {
        let mut order: Vec<usize> = (0..triangles.len()).collect();
        let boxes: Vec<Aabb> = triangles.iter().map(Triangle::aabb).collect();
        let mut nodes = Vec::new();
        if !triangles.is_empty() {
            build(&boxes, &mut order, 0, triangles.len(), &mut nodes);
        }
        TriangleIndex { triangles, order, nodes }
    }

    pub fn triangles(&self) -> &[Triangle] {
        &self.triangles
    }

    pub fn len(&self) -> usize {
        self.triangles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn bounds(&self) -> Option<Aabb> {
        self.nodes.first().map(|n| *n.aabb())
    }

    /// Calls `f` for every triangle whose bounding box overlaps `query`.
    pub fn for_each_in_box(&self, query: &Aabb, mut f: impl FnMut(usize)) {
        if self.nodes.is_empty() {
            return;
        }
        let mut stack = vec![0usize];
        while let Some(i) = stack.pop() {
            let node = &self.nodes[i];
            if !node.aabb().overlaps(query) {
                continue;
            }
            match *node {
                Node::Leaf { start, end, .. } => {
                    for &t in &self.order[start..end] {
                        if self.triangles[t].aabb().overlaps(query) {
                            f(t);
                        }
                    }
                }
                Node::Inner { left, right, .. } => {
                    stack.push(left);
                    stack.push(right);
                }
            }
        }
    }

    /// Triangle ids whose bounding box overlaps `query`, ascending.
    pub fn query_box(&self, query: &Aabb) -> Vec<usize> {
        let mut out = Vec::new();
        self.for_each_in_box(query, |t| out.push(t));
        out.sort_unstable();
        out
    }

    /// Crosses the open segment `p`-`q` with every triangle and reports the
    /// number of clean hits, or `None` once any contact is degenerate.
    pub fn segment_crossings(&self, p: &Point, q: &Point) -> Option<usize> {
        if self.nodes.is_empty() {
            return Some(0);
        }
        let seg = Aabb::from_points([*p, *q].iter()).expect("two points");
        let d = q - p;
        let inv = d.map(|c| if c == 0.0 { f64::INFINITY } else { 1.0 / c });
        let mut count = 0;
        let mut stack = vec![0usize];
        while let Some(i) = stack.pop() {
            let node = &self.nodes[i];
            let b = node.aabb();
            // Pad so grazing triangles reach the exact test and get flagged.
            let pad = 1e-9 * b.max_edge().max(1e-300);
            if !b.inflated(pad).overlaps(&seg) || !slab_hit(p, &inv, &b.inflated(pad)) {
                continue;
            }
            match *node {
                Node::Leaf { start, end, .. } => {
                    for &t in &self.order[start..end] {
                        match segment_triangle(p, q, &self.triangles[t]) {
                            SegmentHit::Miss => {}
                            SegmentHit::Hit(_) => count += 1,
                            SegmentHit::Degenerate => return None,
                        }
                    }
                }
                Node::Inner { left, right, .. } => {
                    stack.push(left);
                    stack.push(right);
                }
            }
        }
        Some(count)
    }

    /// Distance from `p` to the nearest triangle accepted by `keep`.
    pub fn nearest_distance(&self, p: &Point, keep: impl Fn(usize) -> bool) -> Option<f64> {
        if self.nodes.is_empty() {
            return None;
        }
        let mut best = f64::INFINITY;
        let mut stack = vec![0usize];
        while let Some(i) = stack.pop() {
            let node = &self.nodes[i];
            if box_distance(node.aabb(), p) >= best {
                continue;
            }
            match *node {
                Node::Leaf { start, end, .. } => {
                    for &t in &self.order[start..end] {
                        if keep(t) {
                            best = best.min(self.triangles[t].distance_to_point(p));
                        }
                    }
                }
                Node::Inner { left, right, .. } => {
                    stack.push(left);
                    stack.push(right);
                }
            }
        }
        best.is_finite().then_some(best)
    }
}

fn build(boxes: &[Aabb], order: &mut [usize], start: usize, end: usize, nodes: &mut Vec<Node>) -> usize {
    let aabb = order[start..end]
        .iter()
        .map(|&t| boxes[t])
        .reduce(|a, b| a.merge(&b))
        .expect("non-empty range");
    let id = nodes.len();
    if end - start <= LEAF_SIZE {
        nodes.push(Node::Leaf { aabb, start, end });
        return id;
    }
    nodes.push(Node::Leaf { aabb, start, end });
    let centroid = |t: usize| boxes[t].center();
    let cbox = Aabb::from_points(order[start..end].iter().map(|&t| centroid(t)).collect::<Vec<_>>().iter())
        .expect("non-empty");
    let axis = cbox.extent().imax();
    let mid = (start + end) / 2;
    order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
        centroid(a)[axis]
            .total_cmp(&centroid(b)[axis])
            .then(a.cmp(&b))
    });
    let left = build(boxes, order, start, mid, nodes);
    let right = build(boxes, order, mid, end, nodes);
    nodes[id] = Node::Inner { aabb, left, right };
    id
}

fn slab_hit(p: &Point, inv: &nalgebra::Vector3<f64>, b: &Aabb) -> bool {
    let mut tmin: f64 = 0.0;
    let mut tmax: f64 = 1.0;
    for i in 0..3 {
        if inv[i].is_infinite() {
            if p[i] < b.min[i] || p[i] > b.max[i] {
                return false;
            }
            continue;
        }
        let t1 = (b.min[i] - p[i]) * inv[i];
        let t2 = (b.max[i] - p[i]) * inv[i];
        tmin = tmin.max(t1.min(t2));
        tmax = tmax.min(t1.max(t2));
        if tmin > tmax {
            return false;
        }
    }
    true
}

fn box_distance(b: &Aabb, p: &Point) -> f64 {
    let mut d2 = 0.0;
    for i in 0..3 {
        let v = if p[i] < b.min[i] {
            b.min[i] - p[i]
        } else if p[i] > b.max[i] {
            p[i] - b.max[i]
        } else {
            0.0
        };
        d2 += v * v;
    }
    d2.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn random_triangles(n: usize, seed: u64) -> Vec<Triangle> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let c = Point::new(rng.gen(), rng.gen(), rng.gen());
                let mut corner = || c + nalgebra::Vector3::new(rng.gen(), rng.gen(), rng.gen()) * 0.1;
                Triangle::new(corner(), corner(), corner())
            })
            .collect()
    }

    #[test]
    fn box_query_matches_brute_force() {
        let tris = random_triangles(300, 3);
        let index = TriangleIndex::new(tris.clone());
        let q = Aabb::new(Point::new(0.2, 0.3, 0.1), Point::new(0.5, 0.6, 0.4));
        let brute: Vec<usize> = (0..tris.len()).filter(|&i| tris[i].aabb().overlaps(&q)).collect();
        assert_eq!(index.query_box(&q), brute);
    }

    #[test]
    fn crossings_match_brute_force() {
        let tris = random_triangles(200, 5);
        let index = TriangleIndex::new(tris.clone());
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        for _ in 0..200 {
            let p = Point::new(rng.gen(), rng.gen(), rng.gen());
            let q = Point::new(rng.gen(), rng.gen(), rng.gen());
            let mut brute = Some(0);
            for t in &tris {
                match segment_triangle(&p, &q, t) {
                    SegmentHit::Hit(_) => brute = brute.map(|c| c + 1),
                    SegmentHit::Degenerate => brute = None,
                    SegmentHit::Miss => {}
                }
                if brute.is_none() {
                    break;
                }
            }
            assert_eq!(index.segment_crossings(&p, &q), brute);
        }
    }

    #[test]
    fn nearest_matches_brute_force() {
        let tris = random_triangles(150, 7);
        let index = TriangleIndex::new(tris.clone());
        let p = Point::new(0.5, 0.5, 0.5);
        let brute = tris.iter().map(|t| t.distance_to_point(&p)).fold(f64::INFINITY, f64::min);
        assert_eq!(index.nearest_distance(&p, |_| true), Some(brute));
    }
}
