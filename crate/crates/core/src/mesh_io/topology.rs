use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bvh::TriangleIndex;
use crate::geom::{segment_intersects_triangle, triangles_intersect, Triangle};

use super::IndexedMesh;

/// Validity diagnostics of a welded mesh.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopologyReport {
    pub free_edge_count: usize,
    pub free_edge_ids: Vec<usize>,
    pub non_manifold_edge_count: usize,
    pub duplicate_face_count: usize,
    /// Manifold edges along which both faces run in the same direction.
    pub inconsistent_orientation_pair_count: usize,
    pub self_intersection_pair_count: usize,
    pub degenerate_face_count: usize,
    pub watertight: bool,
}

/// Counts flaws of `mesh`. Coincident geometry is only recognised through
/// shared vertex ids, so pass a mesh welded with [`super::index_mesh`].
pub fn topology_report(mesh: &IndexedMesh) -> TopologyReport {
    let mut free_edge_ids = Vec::new();
    let mut non_manifold = 0;
    let mut inconsistent = 0;
    for (id, edge) in mesh.edges().iter().enumerate() {
        match edge.faces.len() {
            1 => free_edge_ids.push(id),
            2 => {
                let [a, b] = edge.vertices;
                let f0 = mesh.face(edge.faces[0]).expect("live face");
                let f1 = mesh.face(edge.faces[1]).expect("live face");
                if f0.has_directed_edge(a, b) == f1.has_directed_edge(a, b) {
                    inconsistent += 1;
                }
            }
            _ => non_manifold += 1,
        }
    }

    let mut groups: HashMap<[usize; 3], usize> = HashMap::new();
    for (_, face) in mesh.live_faces() {
        if !face.is_degenerate() {
            let mut key = face.vertices;
            key.sort_unstable();
            *groups.entry(key).or_default() += 1;
        }
    }
    let duplicate_face_count = groups.values().map(|n| n - 1).sum();

    let free_edge_count = free_edge_ids.len();
    TopologyReport {
        free_edge_count,
        free_edge_ids,
        non_manifold_edge_count: non_manifold,
        duplicate_face_count,
        inconsistent_orientation_pair_count: inconsistent,
        self_intersection_pair_count: self_intersection_pairs(mesh).len(),
        degenerate_face_count: mesh.degenerate_faces().len(),
        watertight: free_edge_count == 0 && non_manifold == 0 && inconsistent == 0,
    }
}

/// Face pairs that genuinely cross. Contacts through shared vertices or
/// edges, and mere touching, are not counted.
pub(crate) fn self_intersection_pairs(mesh: &IndexedMesh) -> Vec<(usize, usize)> {
    let ids: Vec<usize> = mesh
        .live_faces()
        .filter(|(_, f)| !f.is_degenerate())
        .map(|(i, _)| i)
        .collect();
    let tris: Vec<Triangle> = ids.iter().map(|&i| mesh.triangle(mesh.face(i).expect("live"))).collect();
    let index = TriangleIndex::new(tris);
    let Some(bounds) = index.bounds() else {
        return Vec::new();
    };
    let tol = 1e-9 * bounds.diagonal();
    let mut pairs: Vec<(usize, usize)> = (0..ids.len())
        .into_par_iter()
        .flat_map_iter(|a| {
            let ta = index.triangles()[a];
            let fa = mesh.face(ids[a]).expect("live").vertices;
            let mut hits = Vec::new();
            index.for_each_in_box(&ta.aabb().inflated(tol), |b| {
                if b <= a {
                    return;
                }
                let tb = index.triangles()[b];
                let fb = mesh.face(ids[b]).expect("live").vertices;
                let shared: Vec<usize> = fa.iter().copied().filter(|v| fb.contains(v)).collect();
                let crossing = match shared.len() {
                    0 => triangles_intersect(&ta, &tb, -tol),
                    1 => {
                        let opposite = |f: &[usize; 3], t: &Triangle| {
                            let k = f.iter().position(|&v| v == shared[0]).expect("shared");
                            (t.0[(k + 1) % 3], t.0[(k + 2) % 3])
                        };
                        let (p, q) = opposite(&fa, &ta);
                        let (r, s) = opposite(&fb, &tb);
                        segment_intersects_triangle(&p, &q, &tb, -tol)
                            || segment_intersects_triangle(&r, &s, &ta, -tol)
                    }
                    _ => false,
                };
                if crossing {
                    hits.push((ids[a], ids[b]));
                }
            });
            hits
        })
        .collect();
    pairs.sort_unstable();
    pairs
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{Point, Vector};
    use crate::mesh_io::{index_mesh, Facet, TriangleSoup};
    use crate::studies::fixtures;

    fn report(soup: &TriangleSoup) -> TopologyReport {
        topology_report(&index_mesh(soup, 1e-9))
    }

    #[test]
    fn welded_cube_is_clean() {
        let r = report(&fixtures::cube(Point::origin(), 1.0));
        assert_eq!(r.free_edge_count, 0);
        assert_eq!(r.non_manifold_edge_count, 0);
        assert_eq!(r.duplicate_face_count, 0);
        assert_eq!(r.inconsistent_orientation_pair_count, 0);
        assert_eq!(r.self_intersection_pair_count, 0);
        assert!(r.watertight);
    }

    #[test]
    fn missing_face_opens_three_edges() {
        let mut cube = fixtures::cube(Point::origin(), 1.0);
        cube.facets.remove(5);
        let r = report(&cube);
        assert_eq!(r.free_edge_count, 3);
        assert!(!r.watertight);
    }

    #[test]
    fn duplicated_face_is_non_manifold() {
        let mut cube = fixtures::cube(Point::origin(), 1.0);
        cube.facets.push(cube.facets[2]);
        let r = report(&cube);
        assert_eq!(r.non_manifold_edge_count, 3);
        assert_eq!(r.duplicate_face_count, 1);
        assert_eq!(r.self_intersection_pair_count, 0);
    }

    #[test]
    fn reversed_face_breaks_orientation() {
        let mut cube = fixtures::cube(Point::origin(), 1.0);
        let f = cube.facets[7];
        cube.facets[7] = Facet {
            corners: [f.corners[0], f.corners[2], f.corners[1]],
            normal: -f.normal,
        };
        let r = report(&cube);
        assert_eq!(r.inconsistent_orientation_pair_count, 3);
        assert_eq!(r.free_edge_count, 0);
        assert!(!r.watertight);
    }

    #[test]
    fn crossing_cubes_intersect_but_touching_ones_do_not() {
        let mut two = fixtures::cube(Point::origin(), 1.0);
        two.extend(&fixtures::cube(Point::new(0.75, 0.25, 0.25), 0.5));
        assert!(report(&two).self_intersection_pair_count > 0);

        for corner in [Point::new(1.0, 1.0, 0.0), Point::new(1.0, 1.0, 1.0)] {
            let mut touching = fixtures::cube(Point::origin(), 1.0);
            touching.extend(&fixtures::cube(corner, 1.0));
            assert_eq!(report(&touching).self_intersection_pair_count, 0);
        }
        let mut lifted = fixtures::cube(Point::origin(), 1.0);
        lifted.extend(&fixtures::cube(Point::origin(), 1.0).translated(Vector::new(0.0, 0.0, 1.5)));
        assert_eq!(report(&lifted).self_intersection_pair_count, 0);
    }

    #[test]
    fn report_serializes_stable_fields() {
        let r = report(&fixtures::cube(Point::origin(), 1.0));
        let json = serde_json::to_value(&r).unwrap();
        for key in [
            "free_edge_count",
            "free_edge_ids",
            "non_manifold_edge_count",
            "duplicate_face_count",
            "inconsistent_orientation_pair_count",
            "self_intersection_pair_count",
            "watertight",
        ] {
            assert!(json.get(key).is_some(), "{key}");
        }
    }
}
