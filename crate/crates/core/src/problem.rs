//! Problem definitions and the assemble/solve pipeline built on them.
//!
//! Unknown `nc·s + c` belongs to component `c` of the scalar mode
//! `s = ix + mx·(iy + my·iz)`. Along an axis with cells `0..n` the mode
//! index of the left end of cell `c` is `c·p`, its right end `(c+1)·p`
//! and bubble `m ≥ 2` sits at `c·p + m − 1`.

use std::path::PathBuf;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fcm::assembly::assemble_volume;
use crate::fcm::basis::CellShape;
use crate::fcm::boundary::{strong_plane_constraints, Constrained, Enforcement};
use crate::fcm::grid::{FcmGrid, Physics};
use crate::fcm::material::Material;
use crate::fcm::quadrature::{Quadrature, QuadratureLedger};
use crate::fcm::surface::{apply_neumann, clean_surface_for_integration, penalty_terms, plane_rectangle, CellSurfacePatch, SurfaceLoad};
use crate::geom::{Aabb, Point, Triangle};
use crate::mesh_io::TriangleSoup;
use crate::pmc::{PmcEngine, Policy};
use crate::solver::{solve, SolverKind};
use crate::spacetree::{auto_depth, flood_fill_default, AutoDepthResult, SpaceTree, TreeSummary};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometrySpec {
    pub stl: PathBuf,
    /// Flaw script applied after loading.
    #[serde(default)]
    pub script: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub min: [f64; 3],
    pub max: [f64; 3],
    pub cells: [usize; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TreeDepth {
    Fixed { depth: u32 },
    /// Deepest depth before the flood fill leaks, tried up to `cap`.
    Auto { cap: u32 },
}

impl Default for TreeDepth {
    fn default() -> Self {
        TreeDepth::Auto { cap: 7 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeSpec {
    #[serde(default)]
    pub depth: TreeDepth,
    /// Geometry tree box; defaults to the grid and geometry bounds grown
    /// by `padding` times their largest edge.
    #[serde(default)]
    pub domain: Option<[[f64; 3]; 2]>,
    #[serde(default = "default_padding")]
    pub padding: f64,
}

fn default_padding() -> f64 {
    0.3
}

impl Default for TreeSpec {
    fn default() -> Self {
        TreeSpec {
            depth: TreeDepth::default(),
            domain: None,
            padding: default_padding(),
        }
    }
}

/// Facets with all corners in the closed box `[min, max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Selector {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl Selector {
    pub fn select(&self, soup: &TriangleSoup) -> Vec<Triangle> {
        let b = Aabb::new(self.min.into(), self.max.into());
        let b = b.inflated(1e-9 * b.diagonal().max(1.0));
        soup.triangles().into_iter().filter(|t| t.0.iter().all(|p| b.contains(p))).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Region {
    /// The grid plane `x[axis] = value`.
    Plane { axis: usize, value: f64 },
    Surface(Selector),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirichletSpec {
    pub region: Region,
    /// Components to prescribe; all of them if empty.
    #[serde(default)]
    pub components: Vec<usize>,
    #[serde(default)]
    pub value: f64,
    #[serde(default = "default_enforcement")]
    pub enforcement: Enforcement,
}

fn default_enforcement() -> Enforcement {
    Enforcement::Strong
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NeumannSpec {
    pub region: Region,
    pub load: SurfaceLoad,
}

/// A concentrated force or heat source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointLoad {
    pub point: [f64; 3],
    pub value: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Problem {
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub geometry: Option<GeometrySpec>,
    pub grid: GridSpec,
    pub p: usize,
    #[serde(default = "default_k")]
    pub k: u32,
    #[serde(default = "default_q")]
    pub q: f64,
    /// Gauss points per direction per integration leaf; `p + 1` if unset.
    #[serde(default)]
    pub gauss_order: Option<usize>,
    pub material: Material,
    #[serde(default)]
    pub tree: TreeSpec,
    #[serde(default)]
    pub dirichlet: Vec<DirichletSpec>,
    #[serde(default)]
    pub neumann: Vec<NeumannSpec>,
    #[serde(default)]
    pub point_loads: Vec<PointLoad>,
    #[serde(default)]
    pub policy: Policy,
    #[serde(default)]
    pub solver: SolverKind,
}

fn default_k() -> u32 {
    3
}

fn default_q() -> f64 {
    8.0
}

impl Problem {
    pub fn from_json(s: &str) -> Result<Problem> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("problem serializes")
    }

    pub fn physics(&self) -> Physics {
        self.material.physics()
    }

    pub fn grid(&self) -> Result<FcmGrid> {
        let g = &self.grid;
        FcmGrid::new(Aabb::new(g.min.into(), g.max.into()), g.cells, self.p, self.physics())
    }

    fn tree_domain(&self, soup: &TriangleSoup) -> Result<Aabb> {
        if let Some([lo, hi]) = self.tree.domain {
            return Ok(Aabb::new(lo.into(), hi.into()));
        }
        let pts: Vec<Point> = soup.facets.iter().flat_map(|f| f.corners).collect();
        let b = Aabb::from_points(&pts).ok_or(Error::EmptyGeometry("geometry tree"))?;
        let b = b.merge(&Aabb::new(self.grid.min.into(), self.grid.max.into()));
        Ok(b.inflated(self.tree.padding.max(1e-6) * b.max_edge()))
    }
}

/// Energies and solver data of one policy run.
#[derive(Debug, Clone, Serialize)]
pub struct RunResult {
    pub policy: String,
    /// `½ uᵀ K u`.
    pub energy: f64,
    /// `½ fᵀ u`; equals `energy` for homogeneous strong Dirichlet data.
    pub half_work: f64,
    pub iterations: usize,
    pub residual: f64,
    pub dofs: usize,
    pub free_dofs: usize,
    pub seconds: f64,
    #[serde(skip)]
    pub u: Vec<f64>,
}

/// The three policy runs over one shared quadrature.
#[derive(Debug, Clone, Serialize)]
pub struct BracketResult {
    pub bracket_outside: RunResult,
    pub majority: RunResult,
    pub bracket_inside: RunResult,
    pub u_low: f64,
    pub u_majority: f64,
    pub u_high: f64,
    /// `(u_high − u_low) / |u_majority|`.
    pub width: f64,
    /// Whether the majority energy lies within the two bracket energies.
    pub ordered: bool,
}

/// How the geometry tree was chosen.
#[derive(Debug, Clone, Serialize)]
pub struct TreeInfo {
    pub summary: TreeSummary,
    pub auto: Option<AutoDepthResult>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ModelReport {
    pub tree: TreeInfo,
    pub quadrature: QuadratureLedger,
    pub dofs: usize,
    pub fixed_dofs: usize,
    pub surface_patches: usize,
}

/// Everything that does not depend on the policy: grid, geometry tree,
/// vote records at every Gauss point, surface terms and constraints.
pub struct Model {
    pub problem: Problem,
    pub grid: FcmGrid,
    pub engine: PmcEngine,
    pub quadrature: Quadrature,
    tree: TreeInfo,
    f_surface: Vec<f64>,
    k_penalty: Vec<(usize, usize, f64)>,
    fixed: Vec<(usize, f64)>,
    patches: usize,
}

impl Model {
    pub fn new(problem: Problem, soup: &TriangleSoup) -> Result<Model> {
        if soup.is_empty() {
            return Err(Error::EmptyGeometry("model"));
        }
        problem.material.validate()?;
        if !(problem.q > 0.0) {
            return Err(Error::Config(format!("q must be positive, got {}", problem.q)));
        }
        let grid = problem.grid()?;
        let nc = grid.components();
        let domain = problem.tree_domain(soup)?;
        let (filled, auto) = match problem.tree.depth {
            TreeDepth::Fixed { depth } => (flood_fill_default(SpaceTree::build(soup, domain, depth)?)?, None),
            TreeDepth::Auto { cap } => {
                let (r, f) = auto_depth(soup, domain, cap)?;
                (f, Some(r))
            }
        };
        let tree = TreeInfo {
            summary: filled.tree().summary(),
            auto,
        };
        let engine = PmcEngine::new(filled, soup);
        let order = problem.gauss_order.unwrap_or(problem.p + 1);
        let quadrature = Quadrature::build(&grid, &engine, problem.k, order);

        let mut patches = 0;
        let mut surface = |region: &Region| -> Result<Vec<CellSurfacePatch>> {
            let tris = match region {
                Region::Plane { axis, value } => {
                    check_axis(*axis)?;
                    plane_rectangle(&grid, *axis, *value)
                }
                Region::Surface(sel) => sel.select(soup),
            };
            let p = clean_surface_for_integration(&tris, &grid);
            patches += p.len();
            Ok(p)
        };

        let mut f_surface = vec![0.0; grid.dof_count()];
        for n in &problem.neumann {
            let need = match n.load {
                SurfaceLoad::Flux(_) => Physics::Diffusion3D,
                _ => Physics::Elasticity3D,
            };
            if need != grid.physics() {
                return Err(Error::Config(format!("{:?} load does not fit {:?}", n.load, grid.physics())));
            }
            apply_neumann(&grid, &surface(&n.region)?, n.load, &mut f_surface);
        }
        for pl in &problem.point_loads {
            if pl.value.len() != nc {
                return Err(Error::Config(format!("point load needs {nc} values, got {}", pl.value.len())));
            }
            let x = Point::from(pl.point);
            let (cell, xi) = grid.locate(&x).ok_or(Error::OutsideDomain(pl.point))?;
            let s = CellShape::eval(grid.p(), xi);
            for (a, &id) in grid.cell_scalar_ids(cell).iter().enumerate() {
                for c in 0..nc {
                    f_surface[nc * id + c] += s.values[a] * pl.value[c];
                }
            }
        }

        let mut k_penalty = Vec::new();
        let mut fixed = Vec::new();
        for d in &problem.dirichlet {
            let comps: Vec<usize> = if d.components.is_empty() { (0..nc).collect() } else { d.components.clone() };
            if let Some(&c) = comps.iter().find(|&&c| c >= nc) {
                return Err(Error::Config(format!("component {c} out of range for {nc} components")));
            }
            match (d.enforcement, d.region) {
                (Enforcement::Strong, Region::Plane { axis, value }) => {
                    check_axis(axis)?;
                    fixed.extend(strong_plane_constraints(&grid, axis, value, &comps, d.value)?);
                }
                (Enforcement::Strong, Region::Surface(_)) => {
                    return Err(Error::Config("strong conditions need a grid plane; use penalty enforcement on surfaces".into()));
                }
                (Enforcement::Penalty { beta }, region) => {
                    let beta = beta.unwrap_or(1e8 * problem.material.modulus() / grid.cell_edge());
                    let (k, f) = penalty_terms(&grid, &surface(&region)?, &comps, d.value, beta);
                    k_penalty.extend(k);
                    for (i, v) in f {
                        f_surface[i] += v;
                    }
                }
            }
        }

        Ok(Model {
            problem,
            grid,
            engine,
            quadrature,
            tree,
            f_surface,
            k_penalty,
            fixed,
            patches,
        })
    }

    pub fn report(&self) -> ModelReport {
        let mut fixed: Vec<usize> = self.fixed.iter().map(|f| f.0).collect();
        fixed.sort_unstable();
        fixed.dedup();
        ModelReport {
            tree: self.tree.clone(),
            quadrature: self.quadrature.ledger(),
            dofs: self.grid.dof_count(),
            fixed_dofs: fixed.len(),
            surface_patches: self.patches,
        }
    }

    pub fn auto_depth(&self) -> Option<&AutoDepthResult> {
        self.tree.auto.as_ref()
    }

    /// Full stiffness matrix and load vector for `policy`, before
    /// strong constraints.
    pub fn system(&self, policy: Policy) -> (crate::sparse::Csr, Vec<f64>) {
        let (k, mut f) = assemble_volume(&self.grid, &self.quadrature, &self.problem.material, self.problem.q, policy);
        for (a, b) in f.iter_mut().zip(&self.f_surface) {
            *a += b;
        }
        if self.k_penalty.is_empty() {
            return (k, f);
        }
        let mut t = Vec::with_capacity(k.nnz() + self.k_penalty.len());
        for i in 0..k.n() {
            let (cols, vals) = k.row(i);
            t.extend(cols.iter().zip(vals).map(|(&j, &v)| (i, j, v)));
        }
        t.extend_from_slice(&self.k_penalty);
        (crate::sparse::Csr::from_triplets(k.n(), t), f)
    }

    pub fn run(&self, policy: Policy) -> Result<RunResult> {
        let start = Instant::now();
        let (k, f) = self.system(policy);
        let c = Constrained::new(&k, &f, &self.fixed);
        let (ur, stats) = if c.free_count() == 0 {
            (Vec::new(), crate::solver::SolveStats { iterations: 0, residual: 0.0 })
        } else {
            solve(&c.k, &c.f, self.problem.solver)?
        };
        let u = c.expand(&ur);
        let energy = 0.5 * k.quad_form(&u);
        let half_work = 0.5 * f.iter().zip(&u).map(|(a, b)| a * b).sum::<f64>();
        Ok(RunResult {
            policy: policy.name().to_string(),
            energy,
            half_work,
            iterations: stats.iterations,
            residual: stats.residual,
            dofs: k.n(),
            free_dofs: c.free_count(),
            seconds: start.elapsed().as_secs_f64(),
            u,
        })
    }

    pub fn bracket(&self) -> Result<BracketResult> {
        let tag = |policy: Policy| {
            self.run(policy).map_err(|e| Error::PolicyRun {
                policy: policy.name().to_string(),
                source: Box::new(e),
            })
        };
        let bracket_outside = tag(Policy::BracketOutside)?;
        let majority = tag(self.majority_policy())?;
        let bracket_inside = tag(Policy::BracketInside)?;
        let (a, b) = (bracket_outside.energy, bracket_inside.energy);
        let (u_low, u_high) = (a.min(b), a.max(b));
        let u_majority = majority.energy;
        let width = if u_majority != 0.0 { (u_high - u_low) / u_majority.abs() } else { 0.0 };
        Ok(BracketResult {
            ordered: u_low <= u_majority && u_majority <= u_high,
            bracket_outside,
            majority,
            bracket_inside,
            u_low,
            u_majority,
            u_high,
            width,
        })
    }

    fn majority_policy(&self) -> Policy {
        match self.problem.policy {
            p @ Policy::Majority { .. } => p,
            _ => Policy::default(),
        }
    }
}

fn check_axis(axis: usize) -> Result<()> {
    if axis > 2 {
        return Err(Error::Config(format!("axis must be 0, 1 or 2, got {axis}")));
    }
    Ok(())
}

/// Builds the model and runs the three policies.
pub fn bracket_run(problem: Problem, soup: &TriangleSoup) -> Result<BracketResult> {
    Model::new(problem, soup)?.bracket()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::studies::fixtures::cube;

    fn plane(axis: usize, value: f64, comps: Vec<usize>) -> DirichletSpec {
        DirichletSpec {
            region: Region::Plane { axis, value },
            components: comps,
            value: 0.0,
            enforcement: Enforcement::Strong,
        }
    }

    fn patch_problem(p: usize) -> Problem {
        Problem {
            name: "patch".into(),
            geometry: None,
            grid: GridSpec {
                min: [0.0; 3],
                max: [1.0; 3],
                cells: [2, 2, 2],
            },
            p,
            k: 2,
            q: 8.0,
            gauss_order: None,
            material: Material::elastic(1e4, 0.0),
            tree: TreeSpec {
                depth: TreeDepth::Fixed { depth: 4 },
                ..Default::default()
            },
            dirichlet: vec![plane(0, 0.0, vec![0]), plane(1, 0.0, vec![1]), plane(2, 0.0, vec![2])],
            neumann: vec![NeumannSpec {
                region: Region::Plane { axis: 0, value: 1.0 },
                load: SurfaceLoad::Traction([100.0, 0.0, 0.0]),
            }],
            point_loads: vec![],
            policy: Policy::default(),
            solver: SolverKind::DirectDense,
        }
    }

    #[test]
    fn uniaxial_patch_test() {
        let soup = cube(Point::origin(), 1.0);
        for p in [1, 2] {
            let m = Model::new(patch_problem(p), &soup).unwrap();
            let r = m.run(Policy::default()).unwrap();
            assert!((r.energy - 0.5).abs() < 1e-9, "p={p} U={}", r.energy);
            assert!((r.half_work - r.energy).abs() < 1e-9);
        }
    }

    #[test]
    fn flawless_bracket_has_zero_width() {
        let soup = cube(Point::origin(), 1.0);
        let b = bracket_run(patch_problem(1), &soup).unwrap();
        assert!(b.width.abs() < 1e-12);
        assert!(b.ordered);
        assert_eq!(b.majority.policy, "majority");
    }

    #[test]
    fn diffusion_linear_solution() {
        // T = x on the unit cube: energy ½∫|∇T|² = ½.
        let soup = cube(Point::origin(), 1.0);
        let mut pr = patch_problem(1);
        pr.material = Material::diffusion(1.0);
        pr.neumann.clear();
        pr.dirichlet = vec![plane(0, 0.0, vec![]), DirichletSpec { value: 1.0, ..plane(0, 1.0, vec![]) }];
        let m = Model::new(pr, &soup).unwrap();
        let r = m.run(Policy::default()).unwrap();
        assert!((r.energy - 0.5).abs() < 1e-9, "{}", r.energy);
        let t = crate::post::sample_field(&m.grid, &r.u, &[Point::new(0.3, 0.6, 0.2)]).unwrap();
        assert!((t[0][0] - 0.3).abs() < 1e-9);
    }

    #[test]
    fn penalty_approaches_strong() {
        let soup = cube(Point::origin(), 1.0);
        let strong = Model::new(patch_problem(1), &soup).unwrap().run(Policy::default()).unwrap().energy;
        let mut last = f64::INFINITY;
        for beta in [1e4, 1e6, 1e8] {
            let mut pr = patch_problem(1);
            pr.dirichlet[0].enforcement = Enforcement::Penalty { beta: Some(beta) };
            let e = Model::new(pr, &soup).unwrap().run(Policy::default()).unwrap().energy;
            let err = (e - strong).abs();
            assert!(err < last, "beta={beta} err={err}");
            last = err;
        }
        assert!(last / strong < 1e-3);
    }

    #[test]
    fn config_errors() {
        let soup = cube(Point::origin(), 1.0);
        let mut pr = patch_problem(1);
        pr.dirichlet = vec![plane(0, 0.3, vec![0])];
        assert!(matches!(Model::new(pr, &soup), Err(Error::UnalignedPlane { .. })));
        let mut pr = patch_problem(1);
        pr.neumann[0].load = SurfaceLoad::Flux(1.0);
        assert!(matches!(Model::new(pr, &soup), Err(Error::Config(_))));
        assert!(matches!(Model::new(patch_problem(1), &TriangleSoup::default()), Err(Error::EmptyGeometry(_))));
    }

    #[test]
    fn json_round_trip_with_defaults() {
        let json = r#"{
            "grid": {"min": [0,0,0], "max": [1,1,1], "cells": [2,2,2]},
            "p": 2,
            "material": {"kind": "elastic", "young": 1e4, "poisson": 0.3},
            "dirichlet": [{"region": {"kind": "plane", "axis": 2, "value": 0.0}}],
            "neumann": [{"region": {"kind": "surface", "min": [0,0,1], "max": [1,1,1]}, "load": {"pressure": 5.0}}],
            "solver": {"kind": "skyline"}
        }"#;
        let p = Problem::from_json(json).unwrap();
        assert_eq!(p.k, 3);
        assert_eq!(p.q, 8.0);
        assert_eq!(p.tree.depth, TreeDepth::Auto { cap: 7 });
        assert_eq!(p.dirichlet[0].enforcement, Enforcement::Strong);
        assert_eq!(Problem::from_json(&p.to_json()).unwrap(), p);
    }
}
