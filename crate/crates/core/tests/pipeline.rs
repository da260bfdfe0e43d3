//! Properties of the full problem pipeline on small fixtures.

use dirtyfcm_core::fcm::boundary::Enforcement;
use dirtyfcm_core::fcm::surface::SurfaceLoad;
use dirtyfcm_core::fcm::Material;
use dirtyfcm_core::pmc::Policy;
use dirtyfcm_core::post::{render_vtk, sample_field, von_mises_at};
use dirtyfcm_core::problem::*;
use dirtyfcm_core::solver::SolverKind;
use dirtyfcm_core::studies::fixtures;
use dirtyfcm_core::{Error, Point};

const LO: [f64; 3] = [-0.27, -0.31, -0.29];
const HI: [f64; 3] = [1.33, 1.29, 1.31];

fn clamp_bottom(value: f64) -> DirichletSpec {
    DirichletSpec {
        region: Region::Plane { axis: 2, value },
        components: vec![],
        value: 0.0,
        enforcement: Enforcement::Strong,
    }
}

/// Cube on a grid that conforms to it only at the clamped base z = 0,
/// pulled on its top facets.
fn pulled_cube(p: usize, k: u32, young: f64) -> Problem {
    Problem {
        name: "pulled cube".into(),
        geometry: None,
        grid: GridSpec {
            min: [LO[0], LO[1], 0.0],
            max: [HI[0], HI[1], 1.6],
            cells: [3, 3, 3],
        },
        p,
        k,
        q: 8.0,
        gauss_order: None,
        material: Material::elastic(young, 0.3),
        tree: TreeSpec {
            depth: TreeDepth::Fixed { depth: 5 },
            domain: Some([LO, HI]),
            padding: 0.0,
        },
        dirichlet: vec![clamp_bottom(0.0)],
        neumann: vec![NeumannSpec {
            region: Region::Surface(Selector {
                min: [0.0, 0.0, 1.0],
                max: [1.0, 1.0, 1.0],
            }),
            load: SurfaceLoad::Traction([0.0, 0.0, 10.0]),
        }],
        point_loads: vec![],
        policy: Policy::default(),
        solver: SolverKind::DirectDense,
    }
}

fn energy(problem: Problem, soup: &dirtyfcm_core::mesh_io::TriangleSoup) -> f64 {
    Model::new(problem, soup).unwrap().run(Policy::default()).unwrap().energy
}

#[test]
fn energy_equals_half_work() {
    let soup = fixtures::cube(Point::origin(), 1.0);
    let r = Model::new(pulled_cube(2, 2, 100.0), &soup).unwrap().run(Policy::default()).unwrap();
    assert!(r.energy > 0.0);
    assert!((r.energy - r.half_work).abs() < 1e-9 * r.energy);
}

#[test]
fn energy_scales_inversely_with_modulus() {
    let soup = fixtures::cube(Point::origin(), 1.0);
    let a = energy(pulled_cube(1, 2, 100.0), &soup);
    let b = energy(pulled_cube(1, 2, 400.0), &soup);
    assert!((a / b - 4.0).abs() < 1e-10 * 4.0, "{a} {b}");
}

#[test]
fn p_enrichment_does_not_lower_energy() {
    let soup = fixtures::cube(Point::origin(), 1.0);
    // One Gauss rule for every p, so all spaces share one bilinear form.
    let u: Vec<f64> = (1..=3)
        .map(|p| {
            let mut pr = pulled_cube(p, 2, 100.0);
            pr.gauss_order = Some(4);
            energy(pr, &soup)
        })
        .collect();
    for w in u.windows(2) {
        assert!(w[1] >= w[0] - 1e-12 * w[0], "{u:?}");
    }
}

#[test]
fn quadrature_refinement_settles() {
    let soup = fixtures::cube(Point::origin(), 1.0);
    let u: Vec<f64> = (1..=4)
        .map(|k| {
            let mut p = pulled_cube(2, k, 100.0);
            p.grid.cells = [4, 4, 4];
            energy(p, &soup)
        })
        .collect();
    let d: Vec<f64> = u.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    for w in d.windows(2) {
        assert!(w[1] < w[0], "energies {u:?}");
    }
}

#[test]
fn flawless_bracket_is_closed_and_flawed_is_open() {
    let clean = fixtures::cube(Point::origin(), 1.0);
    let b = bracket_run(pulled_cube(1, 2, 100.0), &clean).unwrap();
    assert_eq!(b.u_low, b.u_high);
    assert_eq!(b.width, 0.0);

    let flawed = fixtures::gap_cube(0.05);
    let mut p = pulled_cube(1, 2, 100.0);
    p.tree.depth = TreeDepth::Auto { cap: 7 };
    let model = Model::new(p, &flawed).unwrap();
    assert!(model.quadrature.ledger().pmc.ambiguous > 0);
    let b = model.bracket().unwrap();
    assert!(b.width > 0.0 && b.width.is_finite());
    for r in [&b.bracket_outside, &b.majority, &b.bracket_inside] {
        assert!(r.energy.is_finite() && r.energy > 0.0);
    }
}

#[test]
fn solver_failure_names_the_policy() {
    let soup = fixtures::cube(Point::origin(), 1.0);
    let mut p = pulled_cube(1, 1, 100.0);
    p.solver = SolverKind::Cg {
        tol: 1e-14,
        max_iter: Some(2),
    };
    match bracket_run(p, &soup) {
        Err(Error::PolicyRun { policy, source }) => {
            assert_eq!(policy, "bracket-out");
            assert!(matches!(*source, Error::CgNotConverged { .. }));
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn vtk_export_counts_and_alpha() {
    let soup = fixtures::cube(Point::origin(), 1.0);
    let m = Model::new(pulled_cube(2, 1, 100.0), &soup).unwrap();
    let r = m.run(Policy::default()).unwrap();
    let text = render_vtk(&m.grid, &r.u, &m.problem.material, &m.engine, 8.0, Policy::default()).render();
    let n = 27 * 27;
    assert!(text.contains(&format!("POINTS {n} double")));
    assert!(text.contains(&format!("CELLS {} {}", 27 * 8, 27 * 8 * 9)));
    assert!(text.contains("VECTORS displacement double"));
    assert!(text.contains("SCALARS von_mises double 1"));
    let alpha = text.split("SCALARS alpha double 1\nLOOKUP_TABLE default\n").nth(1).unwrap();
    let values: Vec<f64> = alpha.lines().take(n).map(|l| l.parse().unwrap()).collect();
    assert!(values.iter().all(|&a| a == 1.0 || a == 1e-8));
    assert!(values.contains(&1.0) && values.contains(&1e-8));
}

#[test]
fn heat_point_source_on_flawed_cube() {
    let soup = fixtures::gap_cube(0.05);
    let problem = Problem {
        name: "heat".into(),
        geometry: None,
        grid: GridSpec {
            min: LO,
            max: HI,
            cells: [4, 4, 4],
        },
        p: 2,
        k: 2,
        q: 8.0,
        gauss_order: None,
        material: Material::diffusion(1.0),
        tree: TreeSpec {
            depth: TreeDepth::Auto { cap: 7 },
            domain: Some([LO, HI]),
            padding: 0.0,
        },
        dirichlet: vec![DirichletSpec {
            region: Region::Surface(Selector {
                min: [0.0, 0.0, 0.0],
                max: [1.0, 1.0, 0.0],
            }),
            components: vec![],
            value: 0.0,
            enforcement: Enforcement::Penalty { beta: None },
        }],
        neumann: vec![],
        point_loads: vec![PointLoad {
            point: [0.5, 0.5, 0.6],
            value: vec![1.0],
        }],
        policy: Policy::default(),
        // The default penalty is far too stiff for Jacobi-preconditioned CG.
        solver: SolverKind::Skyline,
    };
    let model = Model::new(problem, &soup).unwrap();
    let depth = model.auto_depth().unwrap();
    assert!(depth.first_flooded.is_some_and(|f| depth.chosen < f));
    let b = model.bracket().unwrap();
    assert!(b.u_majority > 0.0 && b.u_majority.is_finite());
    let u = &b.majority.u;
    let t = sample_field(&model.grid, u, &[Point::new(0.5, 0.5, 0.6), Point::new(0.5, 0.5, 0.05)]).unwrap();
    assert!(t[0][0] > t[1][0] && t[1][0] > 0.0, "{t:?}");
    assert!(von_mises_at(&model.grid, u, &model.problem.material, &[Point::new(0.5, 0.5, 0.5)]).is_err());
}

#[test]
fn problem_json_drives_the_same_model() {
    let soup = fixtures::cube(Point::origin(), 1.0);
    let p = pulled_cube(1, 1, 100.0);
    let again = Problem::from_json(&p.to_json()).unwrap();
    assert_eq!(energy(p, &soup), energy(again, &soup));
}
