//! Geometry octree, flood fill and automatic depth selection.

use std::collections::VecDeque;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{tri_box_overlap, Aabb, Point, Triangle, Vector};
use crate::mesh_io::TriangleSoup;
use crate::vtk::{VtkCellType, VtkWriter};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LeafState {
    Cut,
    Unclassified,
    Inside,
    Outside,
}

impl LeafState {
    fn code(self) -> f64 {
        match self {
            LeafState::Cut => 0.0,
            LeafState::Unclassified => 1.0,
            LeafState::Inside => 2.0,
            LeafState::Outside => 3.0,
        }
    }
}

/// Inside/outside label of a point or leaf.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Inside,
    Outside,
}

impl Label {
    pub fn flipped(self) -> Label {
        match self {
            Label::Inside => Label::Outside,
            Label::Outside => Label::Inside,
        }
    }

    fn state(self) -> LeafState {
        match self {
            Label::Inside => LeafState::Inside,
            Label::Outside => LeafState::Outside,
        }
    }
}

/// A leaf cell. `lo` is its minimum corner on the finest lattice, which has
/// `2^n_max` steps per axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Leaf {
    pub lo: [u32; 3],
    pub level: u32,
    pub state: LeafState,
}

#[derive(Debug, Clone, Copy)]
enum NodeKind {
    Leaf(u32),
    Inner(u32),
}

#[derive(Debug, Clone, Copy)]
struct Node {
    lo: [u32; 3],
    level: u32,
    kind: NodeKind,
}

/// Adaptive octree over a box: only cells touching the geometry are split,
/// so every Cut leaf sits at depth `n_max`.
#[derive(Debug, Clone)]
pub struct SpaceTree {
    domain: Aabb,
    n_max: u32,
    nodes: Vec<Node>,
    leaves: Vec<Leaf>,
}

/// Relative slack of the box-triangle test; touching counts as Cut.
pub const OVERLAP_TOL: f64 = 1e-12;

impl SpaceTree {
    /// Builds the tree of `soup` in `domain` down to depth `n_max`.
    pub fn build(soup: &TriangleSoup, domain: Aabb, n_max: u32) -> Result<SpaceTree> {
        if n_max == 0 || n_max > 20 {
            return Err(Error::Config(format!("tree depth must be in 1..=20, got {n_max}")));
        }
        if let Some(b) = soup.tight_bounds() {
            if !domain.strictly_contains(&b) {
                return Err(Error::Config("tree domain must strictly contain the geometry".into()));
            }
        }
        let tris = soup.triangles();
        let mut tree = SpaceTree {
            domain,
            n_max,
            nodes: vec![Node {
                lo: [0; 3],
                level: 0,
                kind: NodeKind::Leaf(0),
            }],
            leaves: Vec::new(),
        };
        let all: Vec<usize> = (0..tris.len()).collect();
        tree.split(0, &tris, all);
        Ok(tree)
    }

    fn split(&mut self, node: usize, tris: &[Triangle], candidates: Vec<usize>) {
        let Node { lo, level, .. } = self.nodes[node];
        let bx = self.lattice_box(lo, level);
        let tol = OVERLAP_TOL * bx.max_edge();
        let hits: Vec<usize> = candidates
            .into_iter()
            .filter(|&t| tri_box_overlap(&tris[t], &bx, tol))
            .collect();
        if hits.is_empty() || level == self.n_max {
            let state = if hits.is_empty() { LeafState::Unclassified } else { LeafState::Cut };
            self.nodes[node].kind = NodeKind::Leaf(self.leaves.len() as u32);
            self.leaves.push(Leaf { lo, level, state });
            return;
        }
        let first = self.nodes.len();
        self.nodes[node].kind = NodeKind::Inner(first as u32);
        let half = self.units(level + 1);
        for i in 0..8 {
            let clo = [0, 1, 2].map(|a| lo[a] + if i >> a & 1 == 1 { half } else { 0 });
            self.nodes.push(Node {
                lo: clo,
                level: level + 1,
                kind: NodeKind::Leaf(u32::MAX),
            });
        }
        for i in 0..8 {
            self.split(first + i, tris, hits.clone());
        }
    }

    /// Leaf edge in lattice units at `level`.
    fn units(&self, level: u32) -> u32 {
        1 << (self.n_max - level)
    }

    fn step(&self) -> Vector {
        self.domain.extent() / f64::from(1u32 << self.n_max)
    }

    fn lattice_box(&self, lo: [u32; 3], level: u32) -> Aabb {
        let s = self.step();
        let n = f64::from(self.units(level));
        let min = self.domain.min + Vector::new(lo[0] as f64 * s.x, lo[1] as f64 * s.y, lo[2] as f64 * s.z);
        let max = if level == 0 {
            self.domain.max
        } else {
            min + s * n
        };
        Aabb::new(min, max)
    }

    pub fn domain(&self) -> &Aabb {
        &self.domain
    }

    pub fn n_max(&self) -> u32 {
        self.n_max
    }

    pub fn leaves(&self) -> &[Leaf] {
        &self.leaves
    }

    pub fn leaf_box(&self, id: usize) -> Aabb {
        let l = &self.leaves[id];
        self.lattice_box(l.lo, l.level)
    }

    pub fn leaf_center(&self, id: usize) -> Point {
        self.leaf_box(id).center()
    }

    /// Largest edge of the finest leaves.
    pub fn finest_edge(&self) -> f64 {
        self.step().max()
    }

    pub fn count(&self, state: LeafState) -> usize {
        self.leaves.iter().filter(|l| l.state == state).count()
    }

    /// The leaf containing `p`. Points on an internal face go to the child
    /// with the lower index (the lower side along that axis).
    pub fn leaf_at(&self, p: &Point) -> Result<usize> {
        if !self.domain.contains(p) {
            return Err(Error::OutsideDomain([p.x, p.y, p.z]));
        }
        let mut node = 0;
        loop {
            match self.nodes[node].kind {
                NodeKind::Leaf(id) => return Ok(id as usize),
                NodeKind::Inner(first) => {
                    let Node { lo, level, .. } = self.nodes[node];
                    let c = self.lattice_box(lo, level).center();
                    let child = (0..3).fold(0, |acc, a| acc | (usize::from(p[a] > c[a]) << a));
                    node = first as usize + child;
                }
            }
        }
    }

    /// Leaves whose lattice box overlaps the half-open lattice region
    /// `[lo, hi)`, in ascending id order.
    fn leaves_in_region(&self, lo: [i64; 3], hi: [i64; 3], out: &mut Vec<usize>) {
        out.clear();
        let mut stack = vec![0usize];
        while let Some(n) = stack.pop() {
            let node = self.nodes[n];
            let size = i64::from(self.units(node.level));
            let overlaps = (0..3).all(|a| {
                let nlo = i64::from(node.lo[a]);
                nlo < hi[a] && lo[a] < nlo + size
            });
            if !overlaps {
                continue;
            }
            match node.kind {
                NodeKind::Leaf(id) => out.push(id as usize),
                NodeKind::Inner(first) => stack.extend((first as usize..first as usize + 8).rev()),
            }
        }
        out.sort_unstable();
    }

    /// Leaves sharing a face (of positive area) with `id`.
    pub fn face_neighbors(&self, id: usize, out: &mut Vec<usize>) {
        let l = self.leaves[id];
        let s = i64::from(self.units(l.level));
        let lo = l.lo.map(i64::from);
        let mut all = Vec::new();
        let mut part = Vec::new();
        for axis in 0..3 {
            for side in [-1i64, s] {
                let mut rlo = lo;
                let mut rhi = [lo[0] + s, lo[1] + s, lo[2] + s];
                rlo[axis] = lo[axis] + side;
                rhi[axis] = rlo[axis] + 1;
                self.leaves_in_region(rlo, rhi, &mut part);
                all.extend_from_slice(&part);
            }
        }
        all.sort_unstable();
        all.dedup();
        *out = all;
    }

    /// Leaves touching `id` through a face, edge or vertex.
    pub fn touching_neighbors(&self, id: usize) -> Vec<usize> {
        let l = self.leaves[id];
        let s = i64::from(self.units(l.level));
        let lo = l.lo.map(|c| i64::from(c) - 1);
        let hi = l.lo.map(|c| i64::from(c) + s + 1);
        let mut out = Vec::new();
        self.leaves_in_region(lo, hi, &mut out);
        out.retain(|&n| n != id);
        out
    }

    fn set_state(&mut self, id: usize, state: LeafState) {
        self.leaves[id].state = state;
    }

    /// Leaf used to seed [`flood_fill`]: the one at the domain's minimum
    /// corner, or if that one is Cut the first non-Cut leaf touching the
    /// domain boundary.
    pub fn default_seed(&self) -> Option<usize> {
        let corner = self.leaf_at(&self.domain.min).expect("corner in domain");
        if self.leaves[corner].state != LeafState::Cut {
            return Some(corner);
        }
        self.boundary_leaves().first().copied()
    }

    /// Non-Cut leaves touching the domain boundary, in leaf order.
    pub fn boundary_leaves(&self) -> Vec<usize> {
        let full = 1i64 << self.n_max;
        (0..self.leaves.len())
            .filter(|&i| {
                let l = &self.leaves[i];
                let s = i64::from(self.units(l.level));
                l.state != LeafState::Cut && l.lo.iter().any(|&c| c == 0 || i64::from(c) + s == full)
            })
            .collect()
    }

    /// Writes leaf boxes as VTK voxels with a `state` cell field
    /// (0 cut, 1 unclassified, 2 inside, 3 outside).
    pub fn write_vtk(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = VtkWriter::new("space tree leaves");
        for id in 0..self.leaves.len() {
            let c = self.leaf_box(id).corners();
            w.add_cell(VtkCellType::Voxel, &c);
        }
        w.cell_scalars("state", self.leaves.iter().map(|l| l.state.code()).collect());
        w.write(path)
    }

    pub fn summary(&self) -> TreeSummary {
        TreeSummary {
            n_max: self.n_max,
            finest_edge: self.finest_edge(),
            leaves: self.leaves.len(),
            cut: self.count(LeafState::Cut),
            inside: self.count(LeafState::Inside),
            outside: self.count(LeafState::Outside),
            unclassified: self.count(LeafState::Unclassified),
        }
    }
}

/// Leaf counts per state, serializable to JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeSummary {
    pub n_max: u32,
    pub finest_edge: f64,
    pub leaves: usize,
    pub cut: usize,
    pub inside: usize,
    pub outside: usize,
    pub unclassified: usize,
}

/// A tree whose non-Cut leaves are all labeled.
#[derive(Debug, Clone)]
pub struct FilledSpaceTree {
    tree: SpaceTree,
    seed: usize,
}

impl FilledSpaceTree {
    pub fn tree(&self) -> &SpaceTree {
        &self.tree
    }

    pub fn seed(&self) -> usize {
        self.seed
    }

    pub fn inside_count(&self) -> usize {
        self.tree.count(LeafState::Inside)
    }

    pub fn outside_count(&self) -> usize {
        self.tree.count(LeafState::Outside)
    }

    pub fn cut_count(&self) -> usize {
        self.tree.count(LeafState::Cut)
    }

    pub fn label_of_leaf(&self, id: usize) -> Option<Label> {
        match self.tree.leaves[id].state {
            LeafState::Inside => Some(Label::Inside),
            LeafState::Outside => Some(Label::Outside),
            _ => None,
        }
    }

    /// Centers and labels of the non-Cut leaves touching Cut leaf `id`
    /// through a face, edge or vertex.
    pub fn noncut_neighbor_targets(&self, id: usize) -> Vec<(Point, Label)> {
        self.tree
            .touching_neighbors(id)
            .into_iter()
            .filter_map(|n| self.label_of_leaf(n).map(|l| (self.tree.leaf_center(n), l)))
            .collect()
    }

    /// Whether some Inside leaf shares a face with an Outside leaf.
    pub fn has_inside_outside_contact(&self) -> bool {
        let mut nb = Vec::new();
        (0..self.tree.leaves.len()).any(|i| {
            if self.tree.leaves[i].state != LeafState::Inside {
                return false;
            }
            self.tree.face_neighbors(i, &mut nb);
            nb.iter().any(|&n| self.tree.leaves[n].state == LeafState::Outside)
        })
    }

    /// Total volume of leaves in `state`.
    pub fn volume(&self, state: LeafState) -> f64 {
        (0..self.tree.leaves.len())
            .filter(|&i| self.tree.leaves[i].state == state)
            .map(|i| self.tree.leaf_box(i).volume())
            .sum()
    }
}

/// Breadth-first propagation of `label` from `seed` over face-adjacent
/// non-Cut leaves; unreached non-Cut leaves get the opposite label.
pub fn flood_fill(tree: SpaceTree, seed: usize, label: Label) -> Result<FilledSpaceTree> {
    fill_from(tree, seed, &[seed], label)
}

fn fill_from(mut tree: SpaceTree, seed: usize, seeds: &[usize], label: Label) -> Result<FilledSpaceTree> {
    for &s in seeds {
        if s >= tree.leaves.len() {
            return Err(Error::UnknownEntity { kind: "leaf", id: s });
        }
        if tree.leaves[s].state == LeafState::Cut {
            return Err(Error::CutSeed(s));
        }
    }
    for l in &mut tree.leaves {
        if l.state != LeafState::Cut {
            l.state = LeafState::Unclassified;
        }
    }
    let mut queue = VecDeque::new();
    for &s in seeds {
        if tree.leaves[s].state == LeafState::Unclassified {
            tree.set_state(s, label.state());
            queue.push_back(s);
        }
    }
    let mut nb = Vec::new();
    while let Some(id) = queue.pop_front() {
        tree.face_neighbors(id, &mut nb);
        for &n in &nb {
            if tree.leaves[n].state == LeafState::Unclassified {
                tree.set_state(n, label.state());
                queue.push_back(n);
            }
        }
    }
    let other = label.flipped().state();
    for l in &mut tree.leaves {
        if l.state == LeafState::Unclassified {
            l.state = other;
        }
    }
    Ok(FilledSpaceTree { tree, seed })
}

/// Fills with Outside from [`SpaceTree::default_seed`] and every other
/// non-Cut leaf on the domain boundary, which the geometry cannot enclose.
pub fn flood_fill_default(tree: SpaceTree) -> Result<FilledSpaceTree> {
    match tree.default_seed() {
        Some(seed) => {
            let seeds = tree.boundary_leaves();
            fill_from(tree, seed, &seeds, Label::Outside)
        }
        None => Err(Error::CutSeed(tree.leaf_at(&tree.domain.min).expect("corner in domain"))),
    }
}

/// Per-depth record of [`auto_depth`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthTrial {
    pub depth: u32,
    pub interior_leaves: usize,
    pub cut_leaves: usize,
    /// The fill reached every non-Cut leaf.
    pub flooded_all: bool,
    /// Space that was Inside at the last accepted depth is Outside here.
    pub leaked: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AutoDepthResult {
    pub chosen: u32,
    pub trials: Vec<DepthTrial>,
    /// First depth at which the fill leaked into the solid.
    pub first_flooded: Option<u32>,
}

impl AutoDepthResult {
    /// The a-priori depth limit `log2(d_domain / eps_gap)`, for reports.
    pub fn depth_bound(domain: &Aabb, eps_gap: f64) -> f64 {
        (domain.max_edge() / eps_gap).log2()
    }
}

/// Whether an Inside leaf of `before` is Outside in `after`. Non-Cut
/// leaves keep their box when the tree is deepened, so comparing centers
/// is exact.
fn leaked(before: &FilledSpaceTree, after: &FilledSpaceTree) -> bool {
    let (a, b) = (after.tree(), before.tree());
    (0..b.leaves().len())
        .filter(|&i| b.leaves()[i].state == LeafState::Inside)
        .any(|i| a.leaf_at(&b.leaf_center(i)).is_ok_and(|j| a.leaves()[j].state == LeafState::Outside))
}

/// Deepens the tree from 1 to `depth_cap` and keeps the deepest depth whose
/// fill finds interior leaves, stopping at the first depth whose fill
/// leaks into space found interior before. Depths without interior leaves
/// that do not leak (a thin solid on a coarse lattice) are skipped.
pub fn auto_depth(soup: &TriangleSoup, domain: Aabb, depth_cap: u32) -> Result<(AutoDepthResult, FilledSpaceTree)> {
    if depth_cap == 0 {
        return Err(Error::Config("depth cap must be at least 1".into()));
    }
    let mut trials = Vec::new();
    let mut best: Option<(u32, FilledSpaceTree)> = None;
    let mut first_flooded = None;
    for depth in 1..=depth_cap {
        let tree = SpaceTree::build(soup, domain, depth)?;
        let cut = tree.count(LeafState::Cut);
        let filled = match flood_fill_default(tree) {
            Ok(f) => Some(f),
            Err(Error::CutSeed(_)) => None,
            Err(e) => return Err(e),
        };
        let interior = filled.as_ref().map_or(0, FilledSpaceTree::inside_count);
        let leak = match (&best, &filled) {
            (Some((_, b)), Some(f)) => leaked(b, f),
            _ => false,
        };
        trials.push(DepthTrial {
            depth,
            interior_leaves: interior,
            cut_leaves: cut,
            flooded_all: filled.is_some() && interior == 0,
            leaked: leak,
        });
        if leak {
            first_flooded = Some(depth);
            break;
        }
        if interior > 0 {
            best = filled.map(|f| (depth, f));
        }
    }
    let (chosen, filled) = best.ok_or(Error::NoInterior { cap: depth_cap })?;
    Ok((
        AutoDepthResult {
            chosen,
            trials,
            first_flooded,
        },
        filled,
    ))
}
