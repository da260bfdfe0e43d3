//! Per-cell cleanup of boundary-condition surfaces and surface integrals.
//!
//! Triangles are clipped to every cell they cross. Inside a cell, pieces
//! with similar normals are merged: their corner points are projected onto
//! a best-fit plane, triangulated with Delaunay, and only triangles whose
//! centroid falls inside one of the original pieces are kept. Overlapping
//! or duplicated input therefore integrates once.

use std::collections::BTreeMap;

use nalgebra::{Matrix3, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::fcm::basis::CellShape;
use crate::fcm::gauss::triangle_rule;
use crate::fcm::grid::FcmGrid;
use crate::geom::{Aabb, Point, Triangle, Vector};

/// Pieces whose normals differ by less than this angle share a patch.
pub const CLUSTER_ANGLE_DEG: f64 = 30.0;

/// Cleaned surface of one normal cluster inside one cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellSurfacePatch {
    pub cell: usize,
    pub triangles: Vec<Triangle>,
    /// Input triangles that contributed, ascending.
    pub facets: Vec<usize>,
}

impl CellSurfacePatch {
    pub fn area(&self) -> f64 {
        self.triangles.iter().map(Triangle::area).sum()
    }
}

/// Sutherland-Hodgman clip of `tri` against the closed box `b`.
pub fn clip_to_box(tri: &Triangle, b: &Aabb) -> Vec<Point> {
    let mut poly: Vec<Point> = tri.0.to_vec();
    for axis in 0..3 {
        for (bound, keep_below) in [(b.min[axis], false), (b.max[axis], true)] {
            if poly.is_empty() {
                return poly;
            }
            let inside = |p: &Point| if keep_below { p[axis] <= bound } else { p[axis] >= bound };
            let mut out = Vec::with_capacity(poly.len() + 2);
            for i in 0..poly.len() {
                let a = poly[i];
                let c = poly[(i + 1) % poly.len()];
                let (ia, ic) = (inside(&a), inside(&c));
                if ia {
                    out.push(a);
                }
                if ia != ic {
                    let t = (bound - a[axis]) / (c[axis] - a[axis]);
                    let mut x = a + (c - a) * t;
                    x[axis] = bound;
                    out.push(x);
                }
            }
            poly = out;
        }
    }
    poly
}

fn polygon_area(poly: &[Point]) -> f64 {
    let mut s = Vector::zeros();
    for i in 1..poly.len().saturating_sub(1) {
        s += (poly[i] - poly[0]).cross(&(poly[i + 1] - poly[0]));
    }
    0.5 * s.norm()
}

struct Piece {
    facet: usize,
    normal: Vector,
    poly: Vec<Point>,
}

/// Cleans `surface` cell by cell. Pieces lying in a cell face are given to
/// the cell on the side opposite their normal, or to the only cell there
/// is on the domain boundary.
pub fn clean_surface_for_integration(surface: &[Triangle], grid: &FcmGrid) -> Vec<CellSurfacePatch> {
    let h = grid.cell_edge();
    let mut per_cell: BTreeMap<usize, Vec<Piece>> = BTreeMap::new();
    let size = grid.cell_size();
    for (facet, tri) in surface.iter().enumerate() {
        let Some(normal) = tri.unit_normal() else { continue };
        let tb = tri.aabb();
        let range = |a: usize| {
            let lo = ((tb.min[a] - grid.domain().min[a]) / size[a] - 1e-9).floor().max(0.0) as usize;
            let hi = ((tb.max[a] - grid.domain().min[a]) / size[a] + 1e-9).floor().max(0.0) as usize;
            lo.min(grid.cells()[a] - 1)..=hi.min(grid.cells()[a] - 1)
        };
        for k in range(2) {
            for j in range(1) {
                for i in range(0) {
                    let cell = grid.cell_index([i, j, k]);
                    let b = grid.cell_box(cell);
                    let poly = clip_to_box(tri, &b);
                    if poly.len() < 3 || polygon_area(&poly) <= 1e-14 * h * h {
                        continue;
                    }
                    let on_face = (0..3).any(|a| {
                        [b.min[a], b.max[a]]
                            .iter()
                            .any(|&v| poly.iter().all(|p| (p[a] - v).abs() <= 1e-10 * h))
                    });
                    if on_face {
                        let c = poly.iter().fold(Vector::zeros(), |s, p| s + p.coords) / poly.len() as f64;
                        let probe = Point::from(c) - normal * (1e-6 * h);
                        if !b.contains(&probe) && grid.domain().contains(&probe) {
                            continue;
                        }
                    }
                    per_cell.entry(cell).or_default().push(Piece { facet, normal, poly });
                }
            }
        }
    }

    let cos_limit = CLUSTER_ANGLE_DEG.to_radians().cos();
    let mut patches = Vec::new();
    for (cell, pieces) in per_cell {
        let mut clusters: Vec<Vec<&Piece>> = Vec::new();
        for piece in &pieces {
            match clusters.iter_mut().find(|c| c[0].normal.dot(&piece.normal).abs() >= cos_limit) {
                Some(c) => c.push(piece),
                None => clusters.push(vec![piece]),
            }
        }
        for cluster in clusters {
            if let Some(p) = triangulate_cluster(cell, &cluster, h) {
                patches.push(p);
            }
        }
    }
    patches
}

fn triangulate_cluster(cell: usize, cluster: &[&Piece], h: f64) -> Option<CellSurfacePatch> {
    let mut facets: Vec<usize> = cluster.iter().map(|p| p.facet).collect();
    facets.sort_unstable();
    facets.dedup();
    if cluster.len() == 1 && cluster[0].poly.len() == 3 {
        // A whole triangle inside the cell needs no rework.
        let p = &cluster[0].poly;
        return Some(CellSurfacePatch {
            cell,
            triangles: vec![Triangle::new(p[0], p[1], p[2])],
            facets,
        });
    }
    let tol = 1e-10 * h;
    let mut cloud: Vec<Point> = Vec::new();
    for piece in cluster {
        for p in &piece.poly {
            if !cloud.iter().any(|q| (q - p).norm() <= tol) {
                cloud.push(*p);
            }
        }
    }
    let n = cloud.len() as f64;
    let center = cloud.iter().fold(Vector::zeros(), |s, p| s + p.coords) / n;
    let mut cov = Matrix3::zeros();
    for p in &cloud {
        let d = p.coords - center;
        cov += d * d.transpose();
    }
    let eig = SymmetricEigen::new(cov);
    let mut order = [0, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    if cloud.len() < 3 || eig.eigenvalues[order[1]] <= 1e-24 * h * h * n {
        log::warn!("cell {cell}: degenerate surface point cloud, patch dropped");
        return None;
    }
    let mut normal: Vector = eig.eigenvectors.column(order[0]).into();
    let reference = cluster[0].normal;
    if normal.dot(&reference) < 0.0 {
        normal = -normal;
    }
    let u: Vector = eig.eigenvectors.column(order[2]).into();
    let v = normal.cross(&u);
    let project = |p: &Point| {
        let d = p.coords - center;
        (d.dot(&u), d.dot(&v))
    };
    let pts2: Vec<delaunator::Point> = cloud
        .iter()
        .map(|p| {
            let (x, y) = project(p);
            delaunator::Point { x, y }
        })
        .collect();
    let polys2: Vec<Vec<(f64, f64)>> = cluster.iter().map(|c| c.poly.iter().map(project).collect()).collect();
    let tri = delaunator::triangulate(&pts2);
    let mut triangles = Vec::new();
    for t in tri.triangles.chunks_exact(3) {
        let (a, b, c) = (cloud[t[0]], cloud[t[1]], cloud[t[2]]);
        let cx = (pts2[t[0]].x + pts2[t[1]].x + pts2[t[2]].x) / 3.0;
        let cy = (pts2[t[0]].y + pts2[t[1]].y + pts2[t[2]].y) / 3.0;
        if !polys2.iter().any(|poly| in_convex_polygon(poly, cx, cy, tol)) {
            continue;
        }
        let mut out = Triangle::new(a, b, c);
        if out.area() <= 1e-14 * h * h {
            continue;
        }
        if out.normal_raw().dot(&reference) < 0.0 {
            out = Triangle::new(a, c, b);
        }
        triangles.push(out);
    }
    if triangles.is_empty() {
        return None;
    }
    Some(CellSurfacePatch { cell, triangles, facets })
}

fn in_convex_polygon(poly: &[(f64, f64)], x: f64, y: f64, tol: f64) -> bool {
    let mut sign = 0.0;
    for i in 0..poly.len() {
        let (ax, ay) = poly[i];
        let (bx, by) = poly[(i + 1) % poly.len()];
        let len = ((bx - ax).powi(2) + (by - ay).powi(2)).sqrt();
        if len <= tol {
            continue;
        }
        let cross = ((bx - ax) * (y - ay) - (by - ay) * (x - ax)) / len;
        if cross.abs() <= tol {
            continue;
        }
        if sign == 0.0 {
            sign = cross.signum();
        } else if cross.signum() != sign {
            return false;
        }
    }
    true
}

/// A distributed load on a surface.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SurfaceLoad {
    /// Force per area.
    Traction([f64; 3]),
    /// Pushes against the patch normal.
    Pressure(f64),
    /// Heat flux into the body per area.
    Flux(f64),
}

/// Quadrature points per direction of the collapsed triangle rule for
/// degree `p`: exact up to total degree `2p + 2`.
fn surface_rule_points(p: usize) -> usize {
    p + 2
}

/// Adds `∫ N_a t dΓ` over the patches to `f`.
pub fn apply_neumann(grid: &FcmGrid, patches: &[CellSurfacePatch], load: SurfaceLoad, f: &mut [f64]) {
    let nc = grid.components();
    let n = surface_rule_points(grid.p());
    for patch in patches {
        let ids = grid.cell_scalar_ids(patch.cell);
        for tri in &patch.triangles {
            let t: Vec<f64> = match load {
                SurfaceLoad::Traction(t) => t.to_vec(),
                SurfaceLoad::Pressure(pr) => {
                    let nrm = tri.unit_normal().unwrap_or_else(Vector::zeros);
                    (-pr * nrm).as_slice().to_vec()
                }
                SurfaceLoad::Flux(q) => vec![q],
            };
            assert_eq!(t.len(), nc, "load does not match the physics");
            for (x, w) in triangle_rule(&tri.0[0], &tri.0[1], &tri.0[2], n) {
                let s = CellShape::eval(grid.p(), grid.to_local(patch.cell, &x));
                for (a, &id) in ids.iter().enumerate() {
                    for c in 0..nc {
                        f[nc * id + c] += w * s.values[a] * t[c];
                    }
                }
            }
        }
    }
}

/// Penalty terms `β∫ N_a N_b dΓ` and `β∫ N_a ū dΓ` for each listed
/// component, as stiffness triplets and load entries.
pub fn penalty_terms(
    grid: &FcmGrid,
    patches: &[CellSurfacePatch],
    components: &[usize],
    value: f64,
    beta: f64,
) -> (Vec<(usize, usize, f64)>, Vec<(usize, f64)>) {
    let nc = grid.components();
    let n = 2 * grid.p() + 1;
    let mut k = Vec::new();
    let mut f = Vec::new();
    for patch in patches {
        let ids = grid.cell_scalar_ids(patch.cell);
        let m = ids.len();
        let mut mass = vec![0.0; m * m];
        let mut load = vec![0.0; m];
        for tri in &patch.triangles {
            for (x, w) in triangle_rule(&tri.0[0], &tri.0[1], &tri.0[2], n) {
                let s = CellShape::eval(grid.p(), grid.to_local(patch.cell, &x));
                for a in 0..m {
                    load[a] += w * s.values[a];
                    for b in 0..m {
                        mass[a * m + b] += w * s.values[a] * s.values[b];
                    }
                }
            }
        }
        for &c in components {
            for a in 0..m {
                f.push((nc * ids[a] + c, beta * value * load[a]));
                for b in 0..m {
                    k.push((nc * ids[a] + c, nc * ids[b] + c, beta * mass[a * m + b]));
                }
            }
        }
    }
    (k, f)
}

/// Two triangles covering the part of grid plane `axis = value` inside
/// the domain, normal along `+axis`.
pub fn plane_rectangle(grid: &FcmGrid, axis: usize, value: f64) -> Vec<Triangle> {
    let d = grid.domain();
    let (u, v) = ((axis + 1) % 3, (axis + 2) % 3);
    let corner = |a: f64, b: f64| {
        let mut p = Point::origin();
        p[axis] = value;
        p[u] = a;
        p[v] = b;
        p
    };
    let (u0, u1, v0, v1) = (d.min[u], d.max[u], d.min[v], d.max[v]);
    vec![
        Triangle::new(corner(u0, v0), corner(u1, v0), corner(u1, v1)),
        Triangle::new(corner(u0, v0), corner(u1, v1), corner(u0, v1)),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fcm::grid::Physics;

    fn grid(cells: [usize; 3], p: usize, physics: Physics) -> FcmGrid {
        let d = Aabb::new(Point::origin(), Point::new(2.0, 1.0, 1.0));
        FcmGrid::new(d, cells, p, physics).unwrap()
    }

    fn square(z: f64, x0: f64, x1: f64) -> Vec<Triangle> {
        let p = |x: f64, y: f64| Point::new(x, y, z);
        vec![
            Triangle::new(p(x0, 0.1), p(x1, 0.1), p(x1, 0.9)),
            Triangle::new(p(x0, 0.1), p(x1, 0.9), p(x0, 0.9)),
        ]
    }

    fn total_area(p: &[CellSurfacePatch]) -> f64 {
        p.iter().map(CellSurfacePatch::area).sum()
    }

    #[test]
    fn boundary_planes_cover_every_cell_once() {
        let g = grid([2, 2, 2], 1, Physics::Diffusion3D);
        for (axis, value) in [(0, 0.0), (0, 2.0), (1, 0.5), (2, 1.0)] {
            let patches = clean_surface_for_integration(&plane_rectangle(&g, axis, value), &g);
            let area = if axis == 0 { 1.0 } else { 2.0 };
            assert_eq!(patches.len(), 4, "axis {axis} at {value}");
            assert!((total_area(&patches) - area).abs() < 1e-12);
        }
    }

    #[test]
    fn clip_keeps_inner_part() {
        let t = Triangle::new(Point::new(-1., 0., 0.5), Point::new(2., 0., 0.5), Point::new(0.5, 3., 0.5));
        let b = Aabb::new(Point::origin(), Point::new(1., 1., 1.));
        let poly = clip_to_box(&t, &b);
        assert!((polygon_area(&poly) - 1.0).abs() < 1e-12);
        let far = Aabb::new(Point::new(5., 5., 5.), Point::new(6., 6., 6.));
        assert!(clip_to_box(&t, &far).is_empty());
    }

    #[test]
    fn square_crossing_two_cells() {
        let g = grid([2, 1, 1], 1, Physics::Diffusion3D);
        let patches = clean_surface_for_integration(&square(0.5, 0.5, 1.5), &g);
        assert_eq!(patches.len(), 2);
        assert!((total_area(&patches) - 0.8).abs() < 1e-9);
        for p in &patches {
            let b = g.cell_box(p.cell).inflated(1e-10);
            assert!(p.triangles.iter().all(|t| t.0.iter().all(|c| b.contains(c))));
        }
    }

    #[test]
    fn duplicated_face_counts_once() {
        let g = grid([2, 1, 1], 2, Physics::Diffusion3D);
        let mut doubled = square(0.5, 0.5, 1.5);
        doubled.extend(square(0.5, 0.5, 1.5));
        let patches = clean_surface_for_integration(&doubled, &g);
        assert!((total_area(&patches) - 0.8).abs() < 1e-6);
        // Half-overlapping copies cover their union once.
        let mut shifted = square(0.5, 0.2, 0.8);
        shifted.extend(square(0.5, 0.4, 0.9));
        let patches = clean_surface_for_integration(&shifted, &g);
        assert!((total_area(&patches) - 0.8 * 0.7).abs() < 1e-9);
    }

    #[test]
    fn face_inside_one_cell_is_kept() {
        let g = grid([2, 1, 1], 1, Physics::Diffusion3D);
        let t = Triangle::new(Point::new(0.1, 0.1, 0.3), Point::new(0.8, 0.2, 0.4), Point::new(0.3, 0.9, 0.6));
        let patches = clean_surface_for_integration(&[t], &g);
        assert_eq!(patches.len(), 1);
        assert!((patches[0].area() - t.area()).abs() < 1e-15);
    }

    #[test]
    fn face_on_cell_boundary_goes_to_one_cell() {
        let g = grid([2, 1, 1], 1, Physics::Diffusion3D);
        let p = |y: f64, z: f64| Point::new(1.0, y, z);
        let face = [Triangle::new(p(0., 0.), p(1., 0.), p(1., 1.)), Triangle::new(p(0., 0.), p(1., 1.), p(0., 1.))];
        let patches = clean_surface_for_integration(&face, &g);
        assert!((total_area(&patches) - 1.0).abs() < 1e-12);
        // Normal +x: owned by the cell on the -x side.
        assert!(patches.iter().all(|p| p.cell == 0));
    }

    #[test]
    fn resultants() {
        let g = grid([2, 1, 1], 3, Physics::Elasticity3D);
        let patches = clean_surface_for_integration(&square(0.5, 0.5, 1.5), &g);
        let mut f = vec![0.0; g.dof_count()];
        apply_neumann(&g, &patches, SurfaceLoad::Traction([0.0, 0.0, 100.0]), &mut f);
        // Only the end modes carry net force, since their sum is 1.
        let total: Vec<f64> = (0..3).map(|c| f.iter().skip(c).step_by(3).sum()).collect();
        let linear_sum: f64 = {
            let mut s = 0.0;
            let m = g.modes_per_axis();
            for iz in (0..m[2]).step_by(3) {
                for iy in (0..m[1]).step_by(3) {
                    for ix in (0..m[0]).step_by(3) {
                        s += f[3 * (ix + m[0] * (iy + m[1] * iz)) + 2];
                    }
                }
            }
            s
        };
        assert!(total[0].abs() < 1e-12 && total[1].abs() < 1e-12);
        assert!((linear_sum - 80.0).abs() < 1e-9);

        let mut zero = vec![0.0; g.dof_count()];
        apply_neumann(&g, &patches, SurfaceLoad::Traction([0.0; 3]), &mut zero);
        assert!(zero.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn pressure_on_curved_patch() {
        // Cylinder segment x^2 + z^2 = 1 tessellated; net z force of
        // pressure equals p times the projected area.
        let g = FcmGrid::new(Aabb::new(Point::new(-1., 0., 0.), Point::new(1., 1., 1.1)), [2, 1, 1], 1, Physics::Elasticity3D)
            .unwrap();
        let n = 12;
        let mut tris = Vec::new();
        for i in 0..n {
            let a0 = std::f64::consts::FRAC_PI_4 + std::f64::consts::FRAC_PI_2 * i as f64 / n as f64;
            let a1 = std::f64::consts::FRAC_PI_4 + std::f64::consts::FRAC_PI_2 * (i + 1) as f64 / n as f64;
            let p = |a: f64, y: f64| Point::new(a.cos(), y, a.sin());
            tris.push(Triangle::new(p(a0, 0.0), p(a1, 0.0), p(a1, 1.0)));
            tris.push(Triangle::new(p(a0, 0.0), p(a1, 1.0), p(a0, 1.0)));
        }
        // Orient outward (+radial).
        for t in &mut tris {
            if t.normal_raw().dot(&t.centroid().coords) < 0.0 {
                *t = Triangle::new(t.0[0], t.0[2], t.0[1]);
            }
        }
        let patches = clean_surface_for_integration(&tris, &g);
        let mut f = vec![0.0; g.dof_count()];
        apply_neumann(&g, &patches, SurfaceLoad::Pressure(10.0), &mut f);
        let fz: f64 = f.iter().skip(2).step_by(3).sum();
        let projected = 2.0 * std::f64::consts::FRAC_PI_4.cos();
        assert!((fz + 10.0 * projected).abs() < 1e-9, "{fz}");
    }

    #[test]
    fn plane_rectangle_spans_domain() {
        let g = grid([2, 1, 1], 1, Physics::Diffusion3D);
        let r = plane_rectangle(&g, 2, 0.0);
        assert!((r.iter().map(Triangle::area).sum::<f64>() - 2.0).abs() < 1e-15);
        assert!(r[0].normal_raw().z > 0.0);
    }
}
