//! Cut-cell quadrature: an octree per cell refined toward the surface,
//! tensor Gauss rules on its leaves and one PMC vote record per point.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bvh::TriangleIndex;
use crate::fcm::gauss::gauss_legendre;
use crate::fcm::grid::FcmGrid;
use crate::geom::{tri_box_overlap, Aabb, Point};
use crate::pmc::{PmcEngine, PmcStats, Policy, VoteRecord};
use crate::spacetree::Label;

/// Relative shrink of a sub-box before the overlap test, so surfaces lying
/// on a box face do not trigger refinement.
pub const OPEN_BOX_TOL: f64 = 1e-9;

/// Leaves of the integration tree of `cell`: boxes overlapping the surface
/// are split down to depth `k`, others stay whole.
pub fn integration_leaves(cell: &Aabb, index: &TriangleIndex, k: u32) -> Vec<Aabb> {
    let mut out = Vec::new();
    let candidates = index.query_box(cell);
    split(cell, index, &candidates, k, &mut out);
    out
}

fn split(b: &Aabb, index: &TriangleIndex, candidates: &[usize], depth: u32, out: &mut Vec<Aabb>) {
    if depth == 0 {
        out.push(*b);
        return;
    }
    let tol = -OPEN_BOX_TOL * b.max_edge();
    let hits: Vec<usize> = candidates
        .iter()
        .copied()
        .filter(|&t| tri_box_overlap(&index.triangles()[t], b, tol))
        .collect();
    if hits.is_empty() {
        out.push(*b);
        return;
    }
    for i in 0..8 {
        split(&b.octant(i), index, &hits, depth - 1, out);
    }
}

/// Indicator value: 1 inside, `10^-q` outside.
pub fn alpha_of(label: Label, q: f64) -> f64 {
    match label {
        Label::Inside => 1.0,
        Label::Outside => 10f64.powf(-q),
    }
}

pub fn alpha(engine: &PmcEngine, x: &Point, q: f64, policy: Policy) -> f64 {
    alpha_of(engine.classify(x, policy), q)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadPoint {
    /// Local cell coordinates.
    pub xi: [f64; 3],
    pub x: Point,
    /// Physical weight, volume Jacobian included.
    pub weight: f64,
}

#[derive(Debug, Clone)]
pub struct CellQuadrature {
    pub points: Vec<QuadPoint>,
    pub votes: Vec<VoteRecord>,
    pub leaves: usize,
}

impl CellQuadrature {
    pub fn is_cut(&self) -> bool {
        self.leaves > 1
    }
}

/// Point and leaf counts plus classification counters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct QuadratureLedger {
    pub cells: usize,
    pub cut_cells: usize,
    pub integration_leaves: usize,
    pub gauss_points: usize,
    pub pmc: PmcStats,
}

/// Quadrature points and vote records of every cell. Built once and shared
/// by all policies, which only re-derive labels from the stored votes.
#[derive(Debug, Clone)]
pub struct Quadrature {
    pub cells: Vec<CellQuadrature>,
    pub k: u32,
    pub order: usize,
}

impl Quadrature {
    /// `order` Gauss points per direction on each leaf; `p + 1` is the usual
    /// choice.
    pub fn build(grid: &FcmGrid, engine: &PmcEngine, k: u32, order: usize) -> Quadrature {
        let (g, w) = gauss_legendre(order);
        let cells = (0..grid.cell_count())
            .into_par_iter()
            .map(|c| {
                let leaves = integration_leaves(&grid.cell_box(c), engine.index(), k);
                let mut points = Vec::with_capacity(leaves.len() * order.pow(3));
                for leaf in &leaves {
                    let e = leaf.extent();
                    let jac = e.x * e.y * e.z / 8.0;
                    for (kz, tz) in g.iter().enumerate() {
                        for (ky, ty) in g.iter().enumerate() {
                            for (kx, tx) in g.iter().enumerate() {
                                let x = Point::new(
                                    leaf.min.x + 0.5 * (tx + 1.0) * e.x,
                                    leaf.min.y + 0.5 * (ty + 1.0) * e.y,
                                    leaf.min.z + 0.5 * (tz + 1.0) * e.z,
                                );
                                points.push(QuadPoint {
                                    xi: grid.to_local(c, &x),
                                    x,
                                    weight: w[kx] * w[ky] * w[kz] * jac,
                                });
                            }
                        }
                    }
                }
                let votes = points.iter().map(|q| engine.vote(&q.x)).collect();
                CellQuadrature {
                    points,
                    votes,
                    leaves: leaves.len(),
                }
            })
            .collect();
        Quadrature { cells, k, order }
    }

    pub fn ledger(&self) -> QuadratureLedger {
        let mut l = QuadratureLedger {
            cells: self.cells.len(),
            ..QuadratureLedger::default()
        };
        for c in &self.cells {
            l.cut_cells += usize::from(c.is_cut());
            l.integration_leaves += c.leaves;
            l.gauss_points += c.points.len();
            for v in &c.votes {
                l.pmc.record(v);
            }
        }
        l
    }

    /// Quadrature volume of the points labeled Inside under `policy`.
    pub fn inside_volume(&self, policy: Policy) -> f64 {
        self.cells
            .iter()
            .flat_map(|c| c.points.iter().zip(&c.votes))
            .filter(|(_, v)| v.label(policy) == Label::Inside)
            .map(|(q, _)| q.weight)
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fcm::grid::Physics;
    use crate::spacetree::{flood_fill_default, SpaceTree};
    use crate::studies::fixtures;

    fn engine_for(soup: &crate::mesh_io::TriangleSoup, depth: u32) -> PmcEngine {
        engine_in(soup, Aabb::new(Point::new(-0.3, -0.3, -0.3), Point::new(1.3, 1.3, 1.3)), depth)
    }

    fn engine_in(soup: &crate::mesh_io::TriangleSoup, dom: Aabb, depth: u32) -> PmcEngine {
        let filled = flood_fill_default(SpaceTree::build(soup, dom, depth).unwrap()).unwrap();
        PmcEngine::new(filled, soup)
    }

    #[test]
    fn uncut_cells_are_single_leaves() {
        let cube = fixtures::cube(Point::origin(), 1.0);
        let index = TriangleIndex::new(cube.triangles());
        let inner = Aabb::new(Point::new(0.2, 0.2, 0.2), Point::new(0.8, 0.8, 0.8));
        let outer = Aabb::new(Point::new(1.2, 1.2, 1.2), Point::new(1.3, 1.3, 1.3));
        assert_eq!(integration_leaves(&inner, &index, 4).len(), 1);
        assert_eq!(integration_leaves(&outer, &index, 4).len(), 1);
        // The cube itself as a cell: faces on its boundary do not cut it.
        let exact = Aabb::new(Point::origin(), Point::new(1.0, 1.0, 1.0));
        assert_eq!(integration_leaves(&exact, &index, 4).len(), 1);
    }

    #[test]
    fn cut_cell_leaf_count_is_bounded_and_tiles() {
        let cube = fixtures::cube(Point::origin(), 1.0);
        let index = TriangleIndex::new(cube.triangles());
        let cell = Aabb::new(Point::new(0.7, 0.7, 0.7), Point::new(1.2, 1.2, 1.2));
        for k in 0..=3 {
            let leaves = integration_leaves(&cell, &index, k);
            assert!(leaves.len() <= 8usize.pow(k));
            let v: f64 = leaves.iter().map(Aabb::volume).sum();
            assert!((v - cell.volume()).abs() < 1e-12);
        }
        // Corner region: 7 untouched octants per level around one corner
        // leaf, the three face planes refine more.
        assert!(integration_leaves(&cell, &index, 3).len() > 8);
    }

    #[test]
    fn alpha_values() {
        let cube = fixtures::cube(Point::origin(), 1.0);
        let e = engine_for(&cube, 4);
        assert_eq!(alpha(&e, &Point::new(0.5, 0.5, 0.5), 8.0, Policy::default()), 1.0);
        assert_eq!(alpha(&e, &Point::new(1.29, 1.29, 1.29), 8.0, Policy::default()), 1e-8);
    }

    #[test]
    fn ambiguous_point_alpha_depends_on_policy() {
        let mut soup = fixtures::cube(Point::origin(), 1.0);
        soup.facets[fixtures::CUBE_TOP_TRIANGLE].corners[1].x -= 0.1;
        // Off-lattice domain so the top face cuts through leaves.
        let dom = Aabb::new(Point::new(-0.27, -0.31, -0.29), Point::new(1.33, 1.29, 1.31));
        let e = engine_in(&soup, dom, 5);
        // First ambiguous point of a lattice around the hole.
        let p = (0..20)
            .flat_map(|i| (0..20).flat_map(move |j| (0..10).map(move |k| (i, j, k))))
            .map(|(i, j, k)| Point::new(0.8 + 0.0101 * i as f64, 0.0101 * j as f64, 0.95 + 0.0101 * k as f64))
            .find(|p| e.vote(p).ambiguous())
            .expect("gap produces ambiguous points");
        assert_eq!(alpha(&e, &p, 8.0, Policy::BracketInside), 1.0);
        assert_eq!(alpha(&e, &p, 8.0, Policy::BracketOutside), 1e-8);
    }

    #[test]
    fn unit_cube_volume_at_k4() {
        let cube = fixtures::cube(Point::origin(), 1.0);
        let e = engine_for(&cube, 6);
        let dom = Aabb::new(Point::new(-0.3, -0.3, -0.3), Point::new(1.3, 1.3, 1.3));
        let grid = FcmGrid::new(dom, [5, 5, 5], 2, Physics::Elasticity3D).unwrap();
        let q = Quadrature::build(&grid, &e, 4, 3);
        let v = q.inside_volume(Policy::default());
        assert!((v - 1.0).abs() < 5e-3, "{v}");
        let l = q.ledger();
        assert_eq!(l.gauss_points, l.integration_leaves * 27);
        assert_eq!(l.pmc.points as usize, l.gauss_points);
        let total: f64 = q.cells.iter().flat_map(|c| &c.points).map(|p| p.weight).sum();
        assert!((total - dom.volume()).abs() < 1e-10);
    }
}
