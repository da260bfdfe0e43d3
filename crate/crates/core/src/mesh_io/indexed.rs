use std::collections::{BTreeMap, HashMap};

use crate::geom::{Point, Triangle, Vector};

use super::{Facet, TriangleSoup};

/// A face as three vertex indices plus its stored normal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Face {
    pub vertices: [usize; 3],
    pub normal: Vector,
}

impl Face {
    /// Two corners welded into one vertex.
    pub fn is_degenerate(&self) -> bool {
        let [a, b, c] = self.vertices;
        a == b || b == c || a == c
    }

    /// Whether the face walks from `a` to `b` along one of its sides.
    pub fn has_directed_edge(&self, a: usize, b: usize) -> bool {
        (0..3).any(|k| self.vertices[k] == a && self.vertices[(k + 1) % 3] == b)
    }
}

/// Undirected edge with its incident faces in ascending order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edge {
    pub vertices: [usize; 2],
    pub faces: Vec<usize>,
}

/// Welded vertices, faces and edge-face adjacency. Face ids are stable:
/// deleting a face leaves a hole in the id space.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexedMesh {
    vertices: Vec<Point>,
    faces: Vec<Option<Face>>,
    edges: Vec<Edge>,
    degenerate: Vec<usize>,
    weld_tol: f64,
}

impl IndexedMesh {
    pub fn new(vertices: Vec<Point>, faces: Vec<Option<Face>>, weld_tol: f64) -> Self {
        let mut mesh = IndexedMesh {
            vertices,
            faces,
            edges: Vec::new(),
            degenerate: Vec::new(),
            weld_tol,
        };
        mesh.rebuild_adjacency();
        mesh
    }

    /// Recomputes edges from the faces. Edges are ordered by their sorted
    /// vertex pair, so edge ids are deterministic.
    pub fn rebuild_adjacency(&mut self) {
        let mut map: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
        self.degenerate.clear();
        for (fid, face) in self.faces.iter().enumerate() {
            let Some(face) = face else { continue };
            if face.is_degenerate() {
                self.degenerate.push(fid);
                continue;
            }
            for k in 0..3 {
                let a = face.vertices[k];
                let b = face.vertices[(k + 1) % 3];
                map.entry((a.min(b), a.max(b))).or_default().push(fid);
            }
        }
        self.edges = map
            .into_iter()
            .map(|((a, b), faces)| Edge { vertices: [a, b], faces })
            .collect();
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn faces(&self) -> &[Option<Face>] {
        &self.faces
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn weld_tol(&self) -> f64 {
        self.weld_tol
    }

    /// Ids of faces whose corners welded together.
    pub fn degenerate_faces(&self) -> &[usize] {
        &self.degenerate
    }

    pub fn face(&self, id: usize) -> Option<&Face> {
        self.faces.get(id).and_then(Option::as_ref)
    }

    pub fn live_faces(&self) -> impl Iterator<Item = (usize, &Face)> {
        self.faces.iter().enumerate().filter_map(|(i, f)| f.as_ref().map(|f| (i, f)))
    }

    pub fn face_count(&self) -> usize {
        self.live_faces().count()
    }

    pub fn triangle(&self, face: &Face) -> Triangle {
        Triangle(face.vertices.map(|v| self.vertices[v]))
    }

    pub fn edge_id(&self, a: usize, b: usize) -> Option<usize> {
        let key = [a.min(b), a.max(b)];
        self.edges.binary_search_by(|e| e.vertices.cmp(&key)).ok()
    }

    /// One soup facet per live face, in face-id order.
    pub fn to_soup(&self) -> TriangleSoup {
        TriangleSoup {
            facets: self
                .live_faces()
                .map(|(_, f)| Facet {
                    corners: f.vertices.map(|v| self.vertices[v]),
                    normal: f.normal,
                })
                .collect(),
        }
    }

    pub(crate) fn vertices_mut(&mut self) -> &mut Vec<Point> {
        &mut self.vertices
    }

    /// Direct face access; callers must run [`Self::rebuild_adjacency`]
    /// after changing connectivity.
    pub(crate) fn faces_mut(&mut self) -> &mut Vec<Option<Face>> {
        &mut self.faces
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn find(&mut self, mut i: usize) -> usize {
        while self.parent[i] != i {
            self.parent[i] = self.parent[self.parent[i]];
            i = self.parent[i];
        }
        i
    }

    /// Keeps the smaller index as root so clusters are named by their
    /// first occurrence.
    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = (ra.min(rb), ra.max(rb));
            self.parent[hi] = lo;
        }
    }
}

fn exact_key(p: &Point) -> [u64; 3] {
    // Adding zero folds -0.0 into +0.0.
    [p.x + 0.0, p.y + 0.0, p.z + 0.0].map(f64::to_bits)
}

/// Welds corners closer than `weld_tol` (transitively) and builds adjacency.
/// Each vertex takes the coordinates of its cluster's first corner;
/// vertices are numbered in order of first occurrence.
pub fn index_mesh(soup: &TriangleSoup, weld_tol: f64) -> IndexedMesh {
    let points: Vec<Point> = soup.points().copied().collect();
    let mut uf = UnionFind {
        parent: (0..points.len()).collect(),
    };
    if weld_tol > 0.0 {
        let cell = |p: &Point| p.coords.map(|c| (c / weld_tol).floor().clamp(-1e15, 1e15) as i64);
        let mut grid: HashMap<[i64; 3], Vec<usize>> = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            let c = cell(p);
            for dx in -1..=1 {
                for dy in -1..=1 {
                    for dz in -1..=1 {
                        if let Some(bucket) = grid.get(&[c.x + dx, c.y + dy, c.z + dz]) {
                            for &j in bucket {
                                if (points[j] - p).norm() <= weld_tol {
                                    uf.union(i, j);
                                }
                            }
                        }
                    }
                }
            }
            grid.entry([c.x, c.y, c.z]).or_default().push(i);
        }
    } else {
        let mut seen: HashMap<[u64; 3], usize> = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            let first = *seen.entry(exact_key(p)).or_insert(i);
            uf.union(i, first);
        }
    }

    let mut vertex_of_root: HashMap<usize, usize> = HashMap::new();
    let mut vertices = Vec::new();
    let mut corner_vertex = Vec::with_capacity(points.len());
    for i in 0..points.len() {
        let root = uf.find(i);
        let v = *vertex_of_root.entry(root).or_insert_with(|| {
            vertices.push(points[root]);
            vertices.len() - 1
        });
        corner_vertex.push(v);
    }
    let faces = soup
        .facets
        .iter()
        .enumerate()
        .map(|(f, facet)| {
            Some(Face {
                vertices: [0, 1, 2].map(|k| corner_vertex[3 * f + k]),
                normal: facet.normal,
            })
        })
        .collect();
    IndexedMesh::new(vertices, faces, weld_tol)
}

/// Default weld tolerance: 1e-6 of the bounding-box diagonal.
pub fn default_weld_tol(soup: &TriangleSoup) -> f64 {
    soup.tight_bounds().map_or(0.0, |b| 1e-6 * b.diagonal())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::studies::fixtures;
    use proptest::prelude::*;

    #[test]
    fn cube_welds_to_closed_surface() {
        let cube = fixtures::cube(Point::origin(), 1.0);
        for tol in [1e-6, 0.0] {
            let m = index_mesh(&cube, tol);
            assert_eq!(m.vertices().len(), 8);
            assert_eq!(m.face_count(), 12);
            assert_eq!(m.edges().len(), 18);
            assert!(m.edges().iter().all(|e| e.faces.len() == 2));
            assert_eq!(m.vertices().len() as i64 - m.edges().len() as i64 + 12, 2);
        }
    }

    #[test]
    fn perturbed_corner_opens_edges() {
        let mut cube = fixtures::cube(Point::origin(), 1.0);
        cube.facets[0].corners[0].x += 1e-3;
        let m = index_mesh(&cube, 1e-6);
        assert_eq!(m.vertices().len(), 9);
        assert!(m.edges().iter().any(|e| e.faces.len() == 1));
    }

    #[test]
    fn welded_corners_flag_degenerate_face() {
        let soup = TriangleSoup::from_triangles([[
            Point::new(0., 0., 0.),
            Point::new(1e-9, 0., 0.),
            Point::new(0., 1., 0.),
        ]]);
        let m = index_mesh(&soup, 1e-6);
        assert_eq!(m.degenerate_faces(), &[0]);
        assert_eq!(m.face_count(), 1);
        assert!(m.edges().is_empty());
    }

    #[test]
    fn transitive_chain_welds_to_first_point() {
        let soup = TriangleSoup::from_triangles([
            [Point::new(0., 0., 0.), Point::new(1., 0., 0.), Point::new(0., 1., 0.)],
            [Point::new(0.6e-6, 0., 0.), Point::new(1., 0., 1.), Point::new(0., 1., 1.)],
            [Point::new(1.2e-6, 0., 0.), Point::new(2., 0., 1.), Point::new(0., 2., 1.)],
        ]);
        let m = index_mesh(&soup, 1e-6);
        let f = |i: usize| m.face(i).unwrap().vertices[0];
        assert_eq!(f(0), f(1));
        assert_eq!(f(1), f(2));
        assert_eq!(m.vertices()[f(0)], Point::origin());
    }

    #[test]
    fn signed_zero_welds_exactly() {
        let soup = TriangleSoup::from_triangles([
            [Point::new(0., 0., 0.), Point::new(1., 0., 0.), Point::new(0., 1., 0.)],
            [Point::new(-0., 0., 0.), Point::new(0., 1., 0.), Point::new(0., 0., 1.)],
        ]);
        assert_eq!(index_mesh(&soup, 0.0).vertices().len(), 4);
    }

    proptest! {
        #[test]
        fn indexing_is_idempotent(seed in 0u64..200, jitter in 0.0f64..1e-8) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut soup = fixtures::icosphere(Point::new(0.5, 0.5, 0.5), 0.5, 1);
            for f in &mut soup.facets {
                for c in &mut f.corners {
                    c.x += jitter * rng.gen::<f64>();
                }
            }
            let tol = 1e-6;
            let a = index_mesh(&soup, tol);
            let b = index_mesh(&a.to_soup(), tol);
            prop_assert_eq!(a.vertices().len(), b.vertices().len());
            prop_assert_eq!(a.edges().len(), b.edges().len());
            prop_assert_eq!(a.face_count(), b.face_count());
        }
    }
}
