//! Procedural test geometry.

use std::f64::consts::FRAC_PI_2;

use crate::geom::{Point, Triangle, Vector};
use crate::mesh_io::{Facet, TriangleSoup};

/// Index of the top-face triangle `(p00, p10, p11)` in [`cube`].
pub const CUBE_TOP_TRIANGLE: usize = 2;

/// The hole left in the top of the unit cube when corner 1 of the top
/// triangle is pulled back by `eps` along -x.
pub fn cube_gap_hole(eps: f64) -> Triangle {
    Triangle::new(Point::new(1.0 - eps, 0.0, 1.0), Point::new(1.0, 0.0, 1.0), Point::new(1.0, 1.0, 1.0))
}

/// The unit cube with the hole of [`cube_gap_hole`]: exploded, then
/// corner 1 of the top triangle moved by `-eps` along x.
pub fn gap_cube(eps: f64) -> TriangleSoup {
    use crate::flaws::{apply_script, Displacement, FlawScript, FlawStep, MoveTarget};
    let mesh = crate::mesh_io::index_mesh(&cube(Point::origin(), 1.0), 1e-9);
    if eps == 0.0 {
        return crate::flaws::op_explode(&mesh);
    }
    let script = FlawScript::new(
        0,
        vec![
            FlawStep::Explode,
            FlawStep::Move {
                target: MoveTarget::Corner([CUBE_TOP_TRIANGLE, 1]),
                displacement: Displacement::Fixed([-eps, 0.0, 0.0]),
                eps: 2.0 * eps,
            },
        ],
    );
    apply_script(&mesh, &script).expect("gap script applies to the cube").0
}

/// Axis-aligned cube as 12 outward-facing triangles.
///
/// Order: bottom (0, 1), top (2, 3), y-min (4, 5), y-max (6, 7),
/// x-min (8, 9), x-max (10, 11). Top triangle 2 is `(p00, p10, p11)`
/// with `p10 = origin + size * (1, 0, 1)` as its corner 1.
pub fn cube(origin: Point, size: f64) -> TriangleSoup {
    let p = |x: f64, y: f64, z: f64| origin + Vector::new(x, y, z) * size;
    let tris = [
        [p(0., 0., 0.), p(1., 1., 0.), p(1., 0., 0.)],
        [p(0., 0., 0.), p(0., 1., 0.), p(1., 1., 0.)],
        [p(0., 0., 1.), p(1., 0., 1.), p(1., 1., 1.)],
        [p(0., 0., 1.), p(1., 1., 1.), p(0., 1., 1.)],
        [p(0., 0., 0.), p(1., 0., 0.), p(1., 0., 1.)],
        [p(0., 0., 0.), p(1., 0., 1.), p(0., 0., 1.)],
        [p(0., 1., 0.), p(1., 1., 1.), p(1., 1., 0.)],
        [p(0., 1., 0.), p(0., 1., 1.), p(1., 1., 1.)],
        [p(0., 0., 0.), p(0., 1., 1.), p(0., 1., 0.)],
        [p(0., 0., 0.), p(0., 0., 1.), p(0., 1., 1.)],
        [p(1., 0., 0.), p(1., 1., 0.), p(1., 1., 1.)],
        [p(1., 0., 0.), p(1., 1., 1.), p(1., 0., 1.)],
    ];
    TriangleSoup::from_triangles(tris)
}

/// Box `[min, max]` tessellated like [`cube`].
pub fn cuboid(min: Point, max: Point) -> TriangleSoup {
    let e = max - min;
    let mut soup = cube(Point::origin(), 1.0);
    for f in &mut soup.facets {
        for c in &mut f.corners {
            *c = min + c.coords.component_mul(&e);
        }
    }
    soup
}

/// Two disjoint unit cubes along x.
pub fn two_cubes() -> TriangleSoup {
    let mut soup = cube(Point::origin(), 1.0);
    soup.extend(&cube(Point::new(2.0, 0.0, 0.0), 1.0));
    soup
}

/// Subdivided icosahedron with `20 * 4^subdivisions` outward facets.
pub fn icosphere(center: Point, radius: f64, subdivisions: u32) -> TriangleSoup {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let base = [
        [-1., t, 0.],
        [1., t, 0.],
        [-1., -t, 0.],
        [1., -t, 0.],
        [0., -1., t],
        [0., 1., t],
        [0., -1., -t],
        [0., 1., -t],
        [t, 0., -1.],
        [t, 0., 1.],
        [-t, 0., -1.],
        [-t, 0., 1.],
    ]
    .map(|v| Vector::new(v[0], v[1], v[2]).normalize());
    let faces: [[usize; 3]; 20] = [
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    let mut tris: Vec<[Vector; 3]> = faces.iter().map(|f| f.map(|i| base[i])).collect();
    for _ in 0..subdivisions {
        tris = tris
            .into_iter()
            .flat_map(|[a, b, c]| {
                let ab = (a + b).normalize();
                let bc = (b + c).normalize();
                let ca = (c + a).normalize();
                [[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]
            })
            .collect();
    }
    TriangleSoup::from_triangles(tris.into_iter().map(|t| t.map(|v| center + v * radius)))
}

/// Quarter of a square plate with a central circular hole.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlateWithHole {
    pub half_width: f64,
    pub thickness: f64,
    pub radius: f64,
    /// Arc segments on the hole quarter; rounded up to an even count.
    pub arc_segments: usize,
}

impl Default for PlateWithHole {
    fn default() -> Self {
        PlateWithHole {
            half_width: 4.0,
            thickness: 1.0,
            radius: 1.0,
            arc_segments: 16,
        }
    }
}

impl PlateWithHole {
    fn arc_count(&self) -> usize {
        let n = self.arc_segments.max(2);
        n + n % 2
    }

    /// Exact solid volume of the smooth geometry.
    pub fn exact_volume(&self) -> f64 {
        (self.half_width.powi(2) - std::f64::consts::PI * self.radius.powi(2) / 4.0) * self.thickness
    }

    /// Volume enclosed by the faceted hole (polygonal arc).
    pub fn faceted_volume(&self) -> f64 {
        let n = self.arc_count();
        let seg = FRAC_PI_2 / n as f64;
        let polygon = 0.5 * self.radius.powi(2) * n as f64 * seg.sin();
        (self.half_width.powi(2) - polygon) * self.thickness
    }

    /// Surface of the solid `[0,b]^2 x [0,t]` minus the quarter cylinder of
    /// radius `r` around the z axis, outward oriented. Arc point `i` is
    /// connected to the outer boundary point hit by the same ray.
    pub fn soup(&self) -> TriangleSoup {
        let n = self.arc_count();
        let (b, t, r) = (self.half_width, self.thickness, self.radius);
        let arc: Vec<(f64, f64)> = (0..=n)
            .map(|i| {
                let th = FRAC_PI_2 * i as f64 / n as f64;
                if i == n {
                    (0.0, r)
                } else {
                    (r * th.cos(), r * th.sin())
                }
            })
            .collect();
        let outer: Vec<(f64, f64)> = (0..=n)
            .map(|i| {
                if 2 * i == n {
                    (b, b)
                } else if 2 * i < n {
                    let th = FRAC_PI_2 * i as f64 / n as f64;
                    (b, b * th.tan())
                } else if i == n {
                    (0.0, b)
                } else {
                    let th = FRAC_PI_2 * i as f64 / n as f64;
                    (b / th.tan(), b)
                }
            })
            .collect();
        let at = |(x, y): (f64, f64), z: f64| Point::new(x, y, z);
        let mut tris = Vec::new();
        let mut quad = |a: Point, bb: Point, c: Point, d: Point, outward: Vector| {
            for tri in [[a, bb, c], [a, c, d]] {
                let n = Triangle(tri).normal_raw();
                if n.dot(&outward) >= 0.0 {
                    tris.push(tri);
                } else {
                    tris.push([tri[0], tri[2], tri[1]]);
                }
            }
        };
        for i in 0..n {
            let (a0, a1, o0, o1) = (arc[i], arc[i + 1], outer[i], outer[i + 1]);
            quad(at(a0, 0.0), at(o0, 0.0), at(o1, 0.0), at(a1, 0.0), -Vector::z());
            quad(at(a0, t), at(o0, t), at(o1, t), at(a1, t), Vector::z());
            let mid = Vector::new(a0.0 + a1.0, a0.1 + a1.1, 0.0);
            quad(at(a0, 0.0), at(a1, 0.0), at(a1, t), at(a0, t), -mid);
            let out = if 2 * i < n { Vector::x() } else { Vector::y() };
            quad(at(o0, 0.0), at(o1, 0.0), at(o1, t), at(o0, t), out);
        }
        quad(at(arc[0], 0.0), at(outer[0], 0.0), at(outer[0], t), at(arc[0], t), -Vector::y());
        quad(at(arc[n], 0.0), at(outer[n], 0.0), at(outer[n], t), at(arc[n], t), -Vector::x());
        TriangleSoup::new(tris.into_iter().map(Facet::from_corners).collect())
    }
}

/// Volume enclosed by a closed, outward-oriented soup (divergence theorem).
pub fn enclosed_volume(soup: &TriangleSoup) -> f64 {
    soup.facets
        .iter()
        .map(|f| {
            let [a, b, c] = f.corners;
            a.coords.dot(&b.coords.cross(&c.coords)) / 6.0
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh_io::{index_mesh, topology_report};

    fn assert_closed(soup: &TriangleSoup) {
        let r = topology_report(&index_mesh(soup, 1e-9));
        assert!(r.watertight, "{r:?}");
        assert_eq!(r.self_intersection_pair_count, 0);
        for f in &soup.facets {
            assert!(f.triangle().area() > 0.0);
        }
    }

    #[test]
    fn fixtures_are_closed_with_expected_volume() {
        let c = cube(Point::new(-0.3, 0.2, 0.1), 2.0);
        assert_closed(&c);
        assert!((enclosed_volume(&c) - 8.0).abs() < 1e-12);

        let s = icosphere(Point::origin(), 1.0, 2);
        assert_eq!(s.len(), 320);
        assert_closed(&s);
        let v = enclosed_volume(&s);
        assert!(v > 0.0 && v < 4.0 / 3.0 * std::f64::consts::PI);

        assert_closed(&two_cubes());
        assert!((enclosed_volume(&two_cubes()) - 2.0).abs() < 1e-12);

        let plate = PlateWithHole::default();
        let soup = plate.soup();
        assert_closed(&soup);
        assert!((enclosed_volume(&soup) - plate.faceted_volume()).abs() < 1e-10);
    }

    #[test]
    fn cube_top_triangle_layout() {
        let c = cube(Point::origin(), 1.0);
        let top = c.facets[CUBE_TOP_TRIANGLE];
        assert_eq!(top.corners[1], Point::new(1.0, 0.0, 1.0));
        assert_eq!(top.normal, Vector::z());
        for f in &c.facets {
            let n = f.triangle().unit_normal().unwrap();
            let outward = f.triangle().centroid() - Point::new(0.5, 0.5, 0.5);
            assert!(n.dot(&outward) > 0.0);
        }
    }

    #[test]
    fn plate_arc_count_is_even() {
        let odd = PlateWithHole {
            arc_segments: 5,
            ..Default::default()
        };
        let soup = odd.soup();
        // 6 arc segments: 4 quads each, plus two symmetry quads.
        assert_eq!(soup.len(), 2 * (4 * 6 + 2));
        assert!(soup.points().any(|p| *p == Point::new(4.0, 4.0, 1.0)));
    }
}
