//! Triangle soups, STL I/O, welded topology and validity diagnostics.

mod indexed;
mod stl;
mod topology;

pub use indexed::{default_weld_tol, index_mesh, Edge, Face, IndexedMesh};
pub use stl::{load_stl, load_stl_file, save_stl, save_stl_file, StlFormat};
pub use topology::{topology_report, TopologyReport};

use crate::error::{Error, Result};
use crate::geom::{Aabb, Point, Triangle, Vector};

/// One STL facet: three corners and the normal exactly as stored.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Facet {
    pub corners: [Point; 3],
    pub normal: Vector,
}

impl Facet {
    /// Facet whose stored normal is the geometric one.
    pub fn from_corners(corners: [Point; 3]) -> Self {
        let normal = Triangle(corners).unit_normal().unwrap_or_else(Vector::zeros);
        Facet { corners, normal }
    }

    pub fn triangle(&self) -> Triangle {
        Triangle(self.corners)
    }
}

/// Independent triangles without adjacency (the minimal B-Rep). Units are
/// model units, millimetres by convention.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TriangleSoup {
    pub facets: Vec<Facet>,
}

impl TriangleSoup {
    pub fn new(facets: Vec<Facet>) -> Self {
        TriangleSoup { facets }
    }

    pub fn from_triangles(tris: impl IntoIterator<Item = [Point; 3]>) -> Self {
        TriangleSoup {
            facets: tris.into_iter().map(Facet::from_corners).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.facets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.facets.is_empty()
    }

    pub fn triangles(&self) -> Vec<Triangle> {
        self.facets.iter().map(Facet::triangle).collect()
    }

    pub fn points(&self) -> impl Iterator<Item = &Point> {
        self.facets.iter().flat_map(|f| f.corners.iter())
    }

    pub fn tight_bounds(&self) -> Option<Aabb> {
        Aabb::from_points(self.points())
    }

    pub fn translated(&self, d: Vector) -> TriangleSoup {
        TriangleSoup {
            facets: self
                .facets
                .iter()
                .map(|f| Facet {
                    corners: f.corners.map(|c| c + d),
                    normal: f.normal,
                })
                .collect(),
        }
    }

    pub fn extend(&mut self, other: &TriangleSoup) {
        self.facets.extend_from_slice(&other.facets);
    }
}

/// Relative floor applied to flat axis extents, as a fraction of the
/// diagonal, so the embedding box is always a volume.
pub const FLAT_EXTENT_FLOOR: f64 = 1e-3;

/// Tight bounding box grown by `padding_fraction` of each axis extent on
/// every side.
pub fn bounding_box(soup: &TriangleSoup, padding_fraction: f64) -> Result<Aabb> {
    let tight = soup
        .tight_bounds()
        .ok_or(Error::EmptyGeometry("bounding box of an empty soup"))?;
    let floor = FLAT_EXTENT_FLOOR * tight.diagonal();
    let c = tight.center();
    let mut min = tight.min;
    let mut max = tight.max;
    for i in 0..3 {
        let extent = (tight.max[i] - tight.min[i]).max(floor);
        let half = 0.5 * extent + padding_fraction * extent;
        if tight.max[i] - tight.min[i] < floor {
            min[i] = c[i] - half;
            max[i] = c[i] + half;
        } else {
            min[i] = tight.min[i] - padding_fraction * extent;
            max[i] = tight.max[i] + padding_fraction * extent;
        }
    }
    Ok(Aabb::new(min, max))
}
