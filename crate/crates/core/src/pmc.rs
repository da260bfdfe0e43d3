//! Point membership classification by segment-parity voting.
//!
//! Points in labeled leaves take the leaf label. A point in a Cut leaf casts
//! one segment to the center of every labeled leaf in its 26-neighborhood;
//! each segment votes for the target's label, flipped when it crosses the
//! surface an odd number of times. A policy turns the tally into a label.

use std::fmt::Write as _;
use std::ops::AddAssign;
use std::sync::OnceLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bvh::TriangleIndex;
use crate::geom::{Point, Vector};
use crate::mesh_io::TriangleSoup;
use crate::spacetree::{FilledSpaceTree, Label, LeafState};

/// Retries of a degenerate segment before it is dropped.
pub const MAX_RETRIES: u32 = 3;
/// Jitter of the target end per retry, relative to the finest leaf edge.
pub const JITTER: f64 = 1e-4;

fn jitter_dirs() -> [Vector; 3] {
    [
        Vector::new(1.0, 2.0, 3.0).normalize(),
        Vector::new(-3.0, 1.0, 2.0).normalize(),
        Vector::new(2.0, -3.0, 1.0).normalize(),
    ]
}

/// How a vote tally becomes a label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Policy {
    /// Most votes win; equal tallies go to `tie`.
    Majority { tie: Label },
    /// Inside as soon as one vote says inside.
    BracketInside,
    /// Inside only if there are votes and none says outside.
    BracketOutside,
}

impl Default for Policy {
    fn default() -> Self {
        Policy::Majority { tie: Label::Inside }
    }
}

impl Policy {
    pub fn name(&self) -> &'static str {
        match self {
            Policy::Majority { .. } => "majority",
            Policy::BracketInside => "bracket-in",
            Policy::BracketOutside => "bracket-out",
        }
    }
}

/// Outcome of classifying one point. Labeled-leaf points carry no votes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct VoteRecord {
    /// Label of the containing leaf when it is not Cut.
    pub direct: Option<Label>,
    pub votes_in: u32,
    pub votes_out: u32,
    /// Segments dropped after exhausting their retries.
    pub excluded: u32,
    /// Segments cast, retries included.
    pub rays: u32,
    /// Votes came from the domain-corner fallback.
    pub fallback: bool,
}

impl VoteRecord {
    pub fn label(&self, policy: Policy) -> Label {
        if let Some(l) = self.direct {
            return l;
        }
        let (i, o) = (self.votes_in, self.votes_out);
        match policy {
            Policy::Majority { tie } => match i.cmp(&o) {
                std::cmp::Ordering::Greater => Label::Inside,
                std::cmp::Ordering::Less => Label::Outside,
                std::cmp::Ordering::Equal => tie,
            },
            Policy::BracketInside if i > 0 || o == 0 => Label::Inside,
            Policy::BracketOutside if o == 0 && i > 0 => Label::Inside,
            _ => Label::Outside,
        }
    }

    /// Votes disagree.
    pub fn ambiguous(&self) -> bool {
        self.votes_in > 0 && self.votes_out > 0
    }

    pub fn tie(&self) -> bool {
        self.direct.is_none() && self.votes_in == self.votes_out
    }
}

/// Counters over many classifications; merge by addition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PmcStats {
    pub points: u64,
    pub direct: u64,
    pub voted: u64,
    pub ambiguous: u64,
    pub ties: u64,
    pub fallback: u64,
    pub rays: u64,
    pub excluded_rays: u64,
}

impl PmcStats {
    pub fn record(&mut self, r: &VoteRecord) {
        self.points += 1;
        if r.direct.is_some() {
            self.direct += 1;
            return;
        }
        self.voted += 1;
        self.ambiguous += u64::from(r.ambiguous());
        self.ties += u64::from(r.tie());
        self.fallback += u64::from(r.fallback);
        self.rays += u64::from(r.rays);
        self.excluded_rays += u64::from(r.excluded);
    }

    pub fn from_records<'a>(records: impl IntoIterator<Item = &'a VoteRecord>) -> Self {
        let mut s = PmcStats::default();
        for r in records {
            s.record(r);
        }
        s
    }
}

impl AddAssign for PmcStats {
    fn add_assign(&mut self, o: Self) {
        self.points += o.points;
        self.direct += o.direct;
        self.voted += o.voted;
        self.ambiguous += o.ambiguous;
        self.ties += o.ties;
        self.fallback += o.fallback;
        self.rays += o.rays;
        self.excluded_rays += o.excluded_rays;
    }
}

/// Number of surface crossings of segment `p`–`q` is odd; `None` when the
/// segment grazes an edge, a vertex or lies in a facet plane.
pub fn segment_parity(index: &TriangleIndex, p: &Point, q: &Point) -> Option<bool> {
    index.segment_crossings(p, q).map(|n| n % 2 == 1)
}

/// Classifier over a filled tree and the soup it was built from.
pub struct PmcEngine {
    filled: FilledSpaceTree,
    index: TriangleIndex,
    targets: Vec<OnceLock<Vec<(Point, Label)>>>,
    jitter: f64,
}

impl PmcEngine {
    pub fn new(filled: FilledSpaceTree, soup: &TriangleSoup) -> Self {
        let n = filled.tree().leaves().len();
        let jitter = JITTER * filled.tree().finest_edge();
        PmcEngine {
            filled,
            index: TriangleIndex::new(soup.triangles()),
            targets: (0..n).map(|_| OnceLock::new()).collect(),
            jitter,
        }
    }

    pub fn filled(&self) -> &FilledSpaceTree {
        &self.filled
    }

    pub fn index(&self) -> &TriangleIndex {
        &self.index
    }

    /// Cached labeled neighbors of leaf `id`.
    pub fn targets(&self, id: usize) -> &[(Point, Label)] {
        self.targets[id].get_or_init(|| self.filled.noncut_neighbor_targets(id))
    }

    /// Votes for `p`. Points outside the tree domain are Outside, since the
    /// domain strictly contains the geometry.
    pub fn vote(&self, p: &Point) -> VoteRecord {
        let tree = self.filled.tree();
        let Ok(leaf) = tree.leaf_at(p) else {
            return VoteRecord {
                direct: Some(Label::Outside),
                ..VoteRecord::default()
            };
        };
        if tree.leaves()[leaf].state != LeafState::Cut {
            return VoteRecord {
                direct: self.filled.label_of_leaf(leaf),
                ..VoteRecord::default()
            };
        }
        let mut rec = VoteRecord::default();
        for (c, l) in self.targets(leaf) {
            self.cast(p, c, *l, &mut rec);
        }
        if rec.votes_in + rec.votes_out == 0 {
            rec.fallback = true;
            for corner in tree.domain().corners() {
                self.cast(p, &corner, Label::Outside, &mut rec);
                if rec.votes_in + rec.votes_out > 0 {
                    break;
                }
            }
        }
        rec
    }

    fn cast(&self, p: &Point, target: &Point, label: Label, rec: &mut VoteRecord) {
        let dirs = jitter_dirs();
        for attempt in 0..=MAX_RETRIES {
            let q = if attempt == 0 {
                *target
            } else {
                target + dirs[attempt as usize - 1] * (f64::from(attempt) * self.jitter)
            };
            rec.rays += 1;
            if let Some(odd) = segment_parity(&self.index, p, &q) {
                match if odd { label.flipped() } else { label } {
                    Label::Inside => rec.votes_in += 1,
                    Label::Outside => rec.votes_out += 1,
                }
                return;
            }
        }
        rec.excluded += 1;
    }

    pub fn classify(&self, p: &Point, policy: Policy) -> Label {
        self.vote(p).label(policy)
    }

    /// Votes for many points in parallel; output order matches input.
    pub fn vote_batch(&self, points: &[Point]) -> Vec<VoteRecord> {
        points.par_iter().map(|p| self.vote(p)).collect()
    }
}

/// One CSV row per point: `x,y,z,label,votes_in,votes_out,tie`.
pub fn classification_csv(points: &[Point], records: &[VoteRecord], policy: Policy) -> String {
    let mut s = String::from("x,y,z,label,votes_in,votes_out,tie\n");
    for (p, r) in points.iter().zip(records) {
        let label = match r.label(policy) {
            Label::Inside => "inside",
            Label::Outside => "outside",
        };
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            p.x,
            p.y,
            p.z,
            label,
            r.votes_in,
            r.votes_out,
            r.tie()
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Aabb;
    use crate::spacetree::{flood_fill_default, SpaceTree};
    use crate::studies::fixtures;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn engine(soup: &TriangleSoup, domain: Aabb, depth: u32) -> PmcEngine {
        let filled = flood_fill_default(SpaceTree::build(soup, domain, depth).unwrap()).unwrap();
        PmcEngine::new(filled, soup)
    }

    fn domain() -> Aabb {
        Aabb::new(Point::new(-0.27, -0.31, -0.29), Point::new(1.33, 1.29, 1.31))
    }

    fn far_parity(index: &TriangleIndex, p: &Point) -> bool {
        let dirs = [
            Vector::new(0.3127, 0.8571, 0.4093),
            Vector::new(-0.6211, 0.2113, 0.7547),
            Vector::new(0.1717, -0.9041, 0.3913),
        ];
        dirs.iter()
            .find_map(|d| segment_parity(index, p, &(p + d * 100.0)))
            .expect("some ray is clean")
    }

    #[test]
    fn watertight_cube_matches_far_point_parity() {
        let cube = fixtures::cube(Point::origin(), 1.0);
        let e = engine(&cube, domain(), 5);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..2000 {
            let p = Point::new(rng.gen_range(-0.2..1.2), rng.gen_range(-0.2..1.2), rng.gen_range(-0.2..1.2));
            let rec = e.vote(&p);
            let truth = if far_parity(e.index(), &p) { Label::Inside } else { Label::Outside };
            assert_eq!(rec.label(Policy::default()), truth, "{p:?}");
            assert!(!rec.ambiguous());
        }
    }

    #[test]
    fn policy_order_on_every_record() {
        for i in 0..4u32 {
            for o in 0..4u32 {
                let r = VoteRecord {
                    votes_in: i,
                    votes_out: o,
                    ..VoteRecord::default()
                };
                let inside = |p| r.label(p) == Label::Inside;
                let maj = inside(Policy::default());
                assert!(!inside(Policy::BracketOutside) || maj);
                assert!(!maj || inside(Policy::BracketInside));
                if i > 0 && o == 0 {
                    assert!(inside(Policy::BracketOutside));
                }
                if o > 0 && i == 0 {
                    assert!(!inside(Policy::BracketInside));
                }
            }
        }
        let tie = VoteRecord {
            votes_in: 2,
            votes_out: 2,
            ..VoteRecord::default()
        };
        assert_eq!(tie.label(Policy::Majority { tie: Label::Outside }), Label::Outside);
        assert!(tie.tie() && tie.ambiguous());
    }

    fn gap_cube(eps: f64) -> TriangleSoup {
        let mut soup = fixtures::cube(Point::origin(), 1.0);
        soup.facets[fixtures::CUBE_TOP_TRIANGLE].corners[1].x -= eps;
        soup
    }

    #[test]
    fn gap_votes_are_ambiguous_only_near_the_gap() {
        let soup = gap_cube(0.02);
        let e = engine(&soup, domain(), 6);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let points: Vec<Point> = (0..4000)
            .map(|_| Point::new(rng.gen_range(-0.2..1.2), rng.gen_range(-0.2..1.2), rng.gen_range(-0.2..1.2)))
            .collect();
        let records = e.vote_batch(&points);
        let stats = PmcStats::from_records(&records);
        assert_eq!(stats.points, 4000);
        let reach = 3.0 * e.filled().tree().finest_edge() * 3f64.sqrt();
        let mut ambiguous = 0;
        for (p, r) in points.iter().zip(&records) {
            if r.ambiguous() {
                ambiguous += 1;
                // Disagreement needs a segment through the hole.
                let d = fixtures::cube_gap_hole(0.02).distance_to_point(p);
                assert!(d <= reach, "{p:?} at {d}");
            }
        }
        assert_eq!(ambiguous as u64, stats.ambiguous);
    }

    #[test]
    fn outside_domain_is_outside() {
        let cube = fixtures::cube(Point::origin(), 1.0);
        let e = engine(&cube, domain(), 3);
        for policy in [Policy::default(), Policy::BracketInside, Policy::BracketOutside] {
            assert_eq!(e.classify(&Point::new(5.0, 0.5, 0.5), policy), Label::Outside);
        }
    }

    #[test]
    fn point_on_surface_is_excluded_then_resolved_by_policy() {
        let cube = fixtures::cube(Point::origin(), 1.0);
        let e = engine(&cube, domain(), 4);
        let r = e.vote(&Point::new(0.3, 0.4, 1.0));
        assert_eq!(r.votes_in + r.votes_out, 0);
        assert!(r.fallback && r.excluded > 0);
        assert_eq!(r.label(Policy::BracketInside), Label::Inside);
        assert_eq!(r.label(Policy::BracketOutside), Label::Outside);
    }

    #[test]
    fn stats_merge_by_addition() {
        let recs = [
            VoteRecord { votes_in: 1, votes_out: 1, rays: 2, ..VoteRecord::default() },
            VoteRecord { direct: Some(Label::Inside), ..VoteRecord::default() },
            VoteRecord { votes_in: 3, excluded: 1, rays: 7, ..VoteRecord::default() },
        ];
        let mut a = PmcStats::from_records(&recs[..1]);
        a += PmcStats::from_records(&recs[1..]);
        assert_eq!(a, PmcStats::from_records(&recs));
        assert_eq!((a.points, a.direct, a.ambiguous, a.ties, a.rays, a.excluded_rays), (3, 1, 1, 1, 9, 1));
    }

    #[test]
    fn csv_layout() {
        let pts = [Point::new(0.5, 0.25, 1.0)];
        let recs = [VoteRecord { votes_in: 2, votes_out: 1, ..VoteRecord::default() }];
        let csv = classification_csv(&pts, &recs, Policy::default());
        assert_eq!(csv, "x,y,z,label,votes_in,votes_out,tie\n0.5,0.25,1,inside,2,1,false\n");
    }
}
