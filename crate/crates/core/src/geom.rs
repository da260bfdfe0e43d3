//! Geometric primitives and predicates shared by every module: boxes,
//! triangles, the separating-axis box/triangle test, segment casting and
//! triangle/triangle intersection.

use nalgebra::{Point3, Vector3};
use serde::{Deserialize, Serialize};

pub type Point = Point3<f64>;
pub type Vector = Vector3<f64>;

/// Axis-aligned box. `min <= max` componentwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: Point,
    pub max: Point,
}

impl Aabb {
    pub fn new(min: Point, max: Point) -> Self {
        debug_assert!((0..3).all(|i| min[i] <= max[i]), "inverted box {min:?} {max:?}");
        Aabb { min, max }
    }

    /// Smallest box containing all points, or `None` for an empty iterator.
    pub fn from_points<'a>(points: impl IntoIterator<Item = &'a Point>) -> Option<Self> {
        let mut it = points.into_iter();
        let first = *it.next()?;
        let mut b = Aabb::new(first, first);
        for p in it {
            b.include(p);
        }
        Some(b)
    }

    pub fn include(&mut self, p: &Point) {
        for i in 0..3 {
            self.min[i] = self.min[i].min(p[i]);
            self.max[i] = self.max[i].max(p[i]);
        }
    }

    pub fn merge(&self, other: &Aabb) -> Aabb {
        let mut b = *self;
        b.include(&other.min);
        b.include(&other.max);
        b
    }

    pub fn extent(&self) -> Vector {
        self.max - self.min
    }

    pub fn center(&self) -> Point {
        nalgebra::center(&self.min, &self.max)
    }

    pub fn diagonal(&self) -> f64 {
        self.extent().norm()
    }

    pub fn max_edge(&self) -> f64 {
        self.extent().max()
    }

    pub fn volume(&self) -> f64 {
        let e = self.extent();
        e.x * e.y * e.z
    }

    /// Closed containment test.
    pub fn contains(&self, p: &Point) -> bool {
        (0..3).all(|i| p[i] >= self.min[i] && p[i] <= self.max[i])
    }

    /// Strict containment of another box (no shared boundary).
    pub fn strictly_contains(&self, other: &Aabb) -> bool {
        (0..3).all(|i| self.min[i] < other.min[i] && other.max[i] < self.max[i])
    }

    /// Closed overlap test.
    pub fn overlaps(&self, other: &Aabb) -> bool {
        (0..3).all(|i| self.min[i] <= other.max[i] && other.min[i] <= self.max[i])
    }

    /// Box grown by `pad` on every side. A negative pad shrinks the box;
    /// axes thinner than `2|pad|` collapse onto their midpoint.
    pub fn inflated(&self, pad: f64) -> Aabb {
        let mut b = *self;
        for i in 0..3 {
            let (lo, hi) = (self.min[i] - pad, self.max[i] + pad);
            if lo <= hi {
                b.min[i] = lo;
                b.max[i] = hi;
            } else {
                let m = 0.5 * (self.min[i] + self.max[i]);
                b.min[i] = m;
                b.max[i] = m;
            }
        }
        b
    }

    /// Cube with the same center whose edge is the largest edge of `self`.
    pub fn cubified(&self) -> Aabb {
        let h = 0.5 * self.max_edge();
        let c = self.center();
        let d = Vector::repeat(h);
        Aabb::new(c - d, c + d)
    }

    /// Child octant `i` (bit 0 = x, bit 1 = y, bit 2 = z).
    pub fn octant(&self, i: usize) -> Aabb {
        let c = self.center();
        let mut min = self.min;
        let mut max = c;
        for axis in 0..3 {
            if i >> axis & 1 == 1 {
                min[axis] = c[axis];
                max[axis] = self.max[axis];
            }
        }
        Aabb::new(min, max)
    }

    pub fn corners(&self) -> [Point; 8] {
        std::array::from_fn(|i| {
            Point::new(
                if i & 1 == 0 { self.min.x } else { self.max.x },
                if i & 2 == 0 { self.min.y } else { self.max.y },
                if i & 4 == 0 { self.min.z } else { self.max.z },
            )
        })
    }
}

/// A triangle given by its corners.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Triangle(pub [Point; 3]);

impl Triangle {
    pub fn new(a: Point, b: Point, c: Point) -> Self {
        Triangle([a, b, c])
    }

    /// Unnormalized normal by right-hand winding; its norm is twice the area.
    pub fn normal_raw(&self) -> Vector {
        let [a, b, c] = self.0;
        (b - a).cross(&(c - a))
    }

    pub fn unit_normal(&self) -> Option<Vector> {
        self.normal_raw().try_normalize(0.0)
    }

    pub fn area(&self) -> f64 {
        0.5 * self.normal_raw().norm()
    }

    pub fn centroid(&self) -> Point {
        let [a, b, c] = self.0;
        Point::from((a.coords + b.coords + c.coords) / 3.0)
    }

    pub fn perimeter(&self) -> f64 {
        let [a, b, c] = self.0;
        (b - a).norm() + (c - b).norm() + (a - c).norm()
    }

    /// Diameter of the inscribed circle: `4 * area / perimeter`.
    pub fn incircle_diameter(&self) -> f64 {
        let p = self.perimeter();
        if p == 0.0 {
            0.0
        } else {
            4.0 * self.area() / p
        }
    }

    pub fn aabb(&self) -> Aabb {
        Aabb::from_points(self.0.iter()).expect("three corners")
    }

    pub fn max_edge(&self) -> f64 {
        let [a, b, c] = self.0;
        (b - a).norm().max((c - b).norm()).max((a - c).norm())
    }

    /// Closest point of the (closed) triangle to `p`.
    pub fn closest_point(&self, p: &Point) -> Point {
        // Ericson, Real-Time Collision Detection, 5.1.5
        let [a, b, c] = self.0;
        let ab = b - a;
        let ac = c - a;
        let ap = p - a;
        let d1 = ab.dot(&ap);
        let d2 = ac.dot(&ap);
        if d1 <= 0.0 && d2 <= 0.0 {
            return a;
        }
        let bp = p - b;
        let d3 = ab.dot(&bp);
        let d4 = ac.dot(&bp);
        if d3 >= 0.0 && d4 <= d3 {
            return b;
        }
        let vc = d1 * d4 - d3 * d2;
        if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
            let v = d1 / (d1 - d3);
            return a + ab * v;
        }
        let cp = p - c;
        let d5 = ab.dot(&cp);
        let d6 = ac.dot(&cp);
        if d6 >= 0.0 && d5 <= d6 {
            return c;
        }
        let vb = d5 * d2 - d1 * d6;
        if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
            let w = d2 / (d2 - d6);
            return a + ac * w;
        }
        let va = d3 * d6 - d5 * d4;
        if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
            let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
            return b + (c - b) * w;
        }
        let denom = 1.0 / (va + vb + vc);
        let v = vb * denom;
        let w = vc * denom;
        a + ab * v + ac * w
    }

    pub fn distance_to_point(&self, p: &Point) -> f64 {
        (self.closest_point(p) - p).norm()
    }
}

/// Distance from `p` to the closed segment `a`-`b`.
pub fn point_segment_distance(p: &Point, a: &Point, b: &Point) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let t = ((p - a).dot(&ab) / len2).clamp(0.0, 1.0);
    (p - (a + ab * t)).norm()
}

/// Separating-axis overlap test of a triangle against a box.
///
/// `tol` is an absolute distance: positive values make touching contacts
/// count as overlap, negative values demand penetration of the open box by
/// at least `|tol|`.
pub fn tri_box_overlap(tri: &Triangle, aabb: &Aabb, tol: f64) -> bool {
    let c = aabb.center();
    let h = 0.5 * aabb.extent();
    let v = tri.0.map(|p| p - c);
    let separated = |axis: Vector| -> bool {
        let len = axis.norm();
        if len < 1e-300 {
            return false;
        }
        let p0 = axis.dot(&v[0]);
        let p1 = axis.dot(&v[1]);
        let p2 = axis.dot(&v[2]);
        let r = h.x * axis.x.abs() + h.y * axis.y.abs() + h.z * axis.z.abs() + tol * len;
        p0.min(p1).min(p2) > r || p0.max(p1).max(p2) < -r
    };
    for i in 0..3 {
        if separated(Vector::ith(i, 1.0)) {
            return false;
        }
    }
    let edges = [v[1] - v[0], v[2] - v[1], v[0] - v[2]];
    let n = edges[0].cross(&edges[1]);
    if n.norm_squared() > 0.0 && separated(n) {
        return false;
    }
    for e in &edges {
        for i in 0..3 {
            if separated(Vector::ith(i, 1.0).cross(e)) {
                return false;
            }
        }
    }
    true
}

/// Outcome of crossing an open segment with one triangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SegmentHit {
    Miss,
    /// Clean transversal crossing at parameter `t` in (0, 1).
    Hit(f64),
    /// Grazing contact: near an edge or vertex, near-coplanar, or at an
    /// endpoint. The parity of such a cast is not trustworthy.
    Degenerate,
}

/// Barycentric slack that flags a hit as edge/vertex grazing.
pub const BARY_TOL: f64 = 1e-10;
/// `|d . n| / (|d| |n|)` below which a segment counts as coplanar.
pub const PARALLEL_TOL: f64 = 1e-12;

/// Möller-Trumbore on the segment `p`-`q` with degeneracy classification.
pub fn segment_triangle(p: &Point, q: &Point, tri: &Triangle) -> SegmentHit {
    let [a, b, c] = tri.0;
    let d = q - p;
    let e1 = b - a;
    let e2 = c - a;
    let n = e1.cross(&e2);
    let dn = d.dot(&n);
    let scale = d.norm() * n.norm();
    if scale == 0.0 {
        return SegmentHit::Miss;
    }
    if dn.abs() <= PARALLEL_TOL * scale {
        // Parallel: only matters when the segment runs within the plane.
        let dist = (p - a).dot(&n) / n.norm();
        let size = tri.max_edge().max(d.norm());
        if dist.abs() > 1e-10 * size {
            return SegmentHit::Miss;
        }
        let seg_box = Aabb::from_points([*p, *q].iter()).expect("two points");
        return if seg_box.overlaps(&tri.aabb().inflated(1e-10 * size)) {
            SegmentHit::Degenerate
        } else {
            SegmentHit::Miss
        };
    }
    let pvec = d.cross(&e2);
    let det = e1.dot(&pvec);
    let inv = 1.0 / det;
    let s = p - a;
    let u = s.dot(&pvec) * inv;
    let qvec = s.cross(&e1);
    let v = d.dot(&qvec) * inv;
    let w = 1.0 - u - v;
    let t = e2.dot(&qvec) * inv;
    const T_TOL: f64 = 1e-12;
    if u < -BARY_TOL || v < -BARY_TOL || w < -BARY_TOL || t < -T_TOL || t > 1.0 + T_TOL {
        return SegmentHit::Miss;
    }
    if u <= BARY_TOL || v <= BARY_TOL || w <= BARY_TOL || t <= T_TOL || t >= 1.0 - T_TOL {
        return SegmentHit::Degenerate;
    }
    SegmentHit::Hit(t)
}

/// Closed intersection test of two triangles (touching counts).
///
/// `tol` is an absolute distance below which points count as lying on the
/// other triangle's plane.
pub fn triangles_intersect(a: &Triangle, b: &Triangle, tol: f64) -> bool {
    if !a.aabb().inflated(tol).overlaps(&b.aabb()) {
        return false;
    }
    let (Some(na), Some(nb)) = (a.unit_normal(), b.unit_normal()) else {
        return false;
    };
    let da = a.0.map(|p| nb.dot(&(p - b.0[0])));
    if da.iter().all(|&d| d > tol) || da.iter().all(|&d| d < -tol) {
        return false;
    }
    let db = b.0.map(|p| na.dot(&(p - a.0[0])));
    if db.iter().all(|&d| d > tol) || db.iter().all(|&d| d < -tol) {
        return false;
    }
    if da.iter().all(|d| d.abs() <= tol) || db.iter().all(|d| d.abs() <= tol) {
        return coplanar_intersect(a, b, &na, tol);
    }
    let dir = na.cross(&nb);
    let Some(dir) = dir.try_normalize(1e-14) else {
        return coplanar_intersect(a, b, &na, tol);
    };
    let (Some(ia), Some(ib)) = (plane_interval(a, &da, &dir, tol), plane_interval(b, &db, &dir, tol))
    else {
        return false;
    };
    ia.0 <= ib.1 + tol && ib.0 <= ia.1 + tol
}

/// Interval along `dir` of a triangle's intersection with the other plane.
fn plane_interval(t: &Triangle, d: &[f64; 3], dir: &Vector, tol: f64) -> Option<(f64, f64)> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut push = |p: Point| {
        let s = dir.dot(&p.coords);
        lo = lo.min(s);
        hi = hi.max(s);
    };
    for i in 0..3 {
        if d[i].abs() <= tol {
            push(t.0[i]);
        }
        let j = (i + 1) % 3;
        if (d[i] > tol && d[j] < -tol) || (d[i] < -tol && d[j] > tol) {
            let s = d[i] / (d[i] - d[j]);
            push(t.0[i] + (t.0[j] - t.0[i]) * s);
        }
    }
    (lo <= hi).then_some((lo, hi))
}

fn coplanar_intersect(a: &Triangle, b: &Triangle, n: &Vector, tol: f64) -> bool {
    let drop = n.iamax();
    let (i, j) = match drop {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    };
    let pa = a.0.map(|p| [p[i], p[j]]);
    let pb = b.0.map(|p| [p[i], p[j]]);
    for k in 0..3 {
        for l in 0..3 {
            if segments_intersect_2d(pa[k], pa[(k + 1) % 3], pb[l], pb[(l + 1) % 3], tol) {
                return true;
            }
        }
    }
    point_in_triangle_2d(pa[0], &pb, tol) || point_in_triangle_2d(pb[0], &pa, tol)
}

fn orient_2d(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

fn segments_intersect_2d(p1: [f64; 2], p2: [f64; 2], q1: [f64; 2], q2: [f64; 2], tol: f64) -> bool {
    let lp = ((p2[0] - p1[0]).powi(2) + (p2[1] - p1[1]).powi(2)).sqrt();
    let lq = ((q2[0] - q1[0]).powi(2) + (q2[1] - q1[1]).powi(2)).sqrt();
    // Orientation values scaled to distances.
    let d1 = orient_2d(q1, q2, p1) / lq.max(1e-300);
    let d2 = orient_2d(q1, q2, p2) / lq.max(1e-300);
    let d3 = orient_2d(p1, p2, q1) / lp.max(1e-300);
    let d4 = orient_2d(p1, p2, q2) / lp.max(1e-300);
    if ((d1 > tol && d2 < -tol) || (d1 < -tol && d2 > tol))
        && ((d3 > tol && d4 < -tol) || (d3 < -tol && d4 > tol))
    {
        return true;
    }
    let on = |a: [f64; 2], b: [f64; 2], p: [f64; 2], d: f64| {
        d.abs() <= tol
            && p[0] >= a[0].min(b[0]) - tol
            && p[0] <= a[0].max(b[0]) + tol
            && p[1] >= a[1].min(b[1]) - tol
            && p[1] <= a[1].max(b[1]) + tol
    };
    on(q1, q2, p1, d1) || on(q1, q2, p2, d2) || on(p1, p2, q1, d3) || on(p1, p2, q2, d4)
}

fn point_in_triangle_2d(p: [f64; 2], t: &[[f64; 2]; 3], tol: f64) -> bool {
    let area = orient_2d(t[0], t[1], t[2]);
    if area == 0.0 {
        return false;
    }
    let s = area.signum();
    (0..3).all(|k| {
        let a = t[k];
        let b = t[(k + 1) % 3];
        let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt().max(1e-300);
        s * orient_2d(a, b, p) / len >= -tol
    })
}

/// Closed intersection test of the segment `a`-`b` with a triangle.
pub fn segment_intersects_triangle(a: &Point, b: &Point, tri: &Triangle, tol: f64) -> bool {
    let Some(n) = tri.unit_normal() else {
        return false;
    };
    let da = n.dot(&(a - tri.0[0]));
    let db = n.dot(&(b - tri.0[0]));
    if (da > tol && db > tol) || (da < -tol && db < -tol) {
        return false;
    }
    let drop = n.iamax();
    let (i, j) = match drop {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    };
    let t2 = tri.0.map(|p| [p[i], p[j]]);
    if da.abs() <= tol && db.abs() <= tol {
        let (pa, pb) = ([a[i], a[j]], [b[i], b[j]]);
        return (0..3).any(|k| segments_intersect_2d(pa, pb, t2[k], t2[(k + 1) % 3], tol))
            || point_in_triangle_2d(pa, &t2, tol);
    }
    let s = if (da - db).abs() > 0.0 { da / (da - db) } else { 0.0 };
    let x = a + (b - a) * s.clamp(0.0, 1.0);
    point_in_triangle_2d([x[i], x[j]], &t2, tol)
}
