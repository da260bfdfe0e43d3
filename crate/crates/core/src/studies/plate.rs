//! p-convergence and bracketing on the quarter plate with a hole.
//!
//! The plate `[0,4]² × [0,1]` minus a quarter cylinder of radius 1 is
//! pulled by a traction on `y = 4`, with symmetry conditions on `x = 0`,
//! `y = 0` and `z = 0`. The flawed variant carries a gap, an intersecting
//! face, an offset face and a doubled face on the loaded side.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fcm::boundary::Enforcement;
use crate::fcm::material::Material;
use crate::fcm::surface::SurfaceLoad;
use crate::flaws::{apply_script, Displacement, EdgeTarget, FlawScript, FlawStep, MoveTarget};
use crate::mesh_io::{index_mesh, TriangleSoup};
use crate::pmc::{PmcStats, Policy};
use crate::problem::{DirichletSpec, GridSpec, Model, NeumannSpec, Problem, Region, Selector, TreeDepth, TreeSpec};
use crate::solver::SolverKind;
use crate::studies::fixtures::PlateWithHole;

/// Facets per arc segment in [`PlateWithHole::soup`]: bottom, top, hole
/// and outer quads, two triangles each.
const PER_SEGMENT: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlateStudyConfig {
    pub arc_segments: usize,
    pub degrees: Vec<usize>,
    pub k: u32,
    pub q: f64,
    pub cells: [usize; 3],
    pub young: f64,
    pub poisson: f64,
    pub traction: f64,
    pub depth_cap: u32,
    /// Flaws for the dirty model; [`PlateStudyConfig::default_flaws`] if unset.
    pub flaws: Option<FlawScript>,
    pub solver: SolverKind,
    /// Caps p at 3 and the cell count at 1000.
    pub reduced: bool,
}

impl Default for PlateStudyConfig {
    fn default() -> Self {
        PlateStudyConfig::reduced()
    }
}

impl PlateStudyConfig {
    pub fn reduced() -> Self {
        PlateStudyConfig {
            arc_segments: 16,
            degrees: vec![1, 2, 3],
            k: 3,
            q: 8.0,
            cells: [10, 10, 1],
            young: 1e4,
            poisson: 0.3,
            traction: 100.0,
            depth_cap: 7,
            flaws: None,
            solver: SolverKind::Skyline,
            reduced: true,
        }
    }

    pub fn full() -> Self {
        PlateStudyConfig {
            degrees: vec![1, 2, 3, 4],
            reduced: false,
            ..PlateStudyConfig::reduced()
        }
    }

    pub fn validate(&self) -> Result<()> {
        super::check_nonempty("degrees", self.degrees.len())?;
        if self.reduced {
            if let Some(p) = self.degrees.iter().find(|&&p| p > 3) {
                return Err(Error::Config(format!("reduced scale allows p <= 3, got {p}")));
            }
            if self.cells.iter().product::<usize>() > 1000 {
                return Err(Error::Config("reduced scale allows at most 1000 cells".into()));
            }
        }
        Ok(())
    }

    pub fn geometry(&self) -> PlateWithHole {
        PlateWithHole {
            arc_segments: self.arc_segments,
            ..PlateWithHole::default()
        }
    }

    /// Gap on the hole, a top face pushed into the solid, an outer face
    /// offset from its neighbor and a doubled face on the loaded side.
    pub fn default_flaws(&self) -> FlawScript {
        let n = self.geometry().soup().len() / PER_SEGMENT;
        let face = |segment: usize, kind: usize, half: usize| PER_SEGMENT * segment + 2 * kind + half;
        FlawScript::new(
            11,
            vec![
                FlawStep::Detach {
                    edge: EdgeTarget::Faces([face(n / 4, 3, 0), face(n / 4, 3, 1)]),
                    offset: Displacement::Fixed([0.04, 0.0, 0.0]),
                    eps: 0.1,
                },
                FlawStep::IntersectMove {
                    face: face(n / 8, 1, 0),
                    displacement: Displacement::Fixed([0.0, 0.0, -0.06]),
                    eps: 0.1,
                    duplicate: false,
                },
                FlawStep::CopyJoin {
                    face: face(3 * n / 4, 3, 0),
                    deep: true,
                },
                FlawStep::Explode,
                FlawStep::Move {
                    target: MoveTarget::Corner([face(n / 2, 2, 0), 0]),
                    displacement: Displacement::Fixed([0.03, 0.03, 0.0]),
                    eps: 0.1,
                },
            ],
        )
    }

    pub fn valid_soup(&self) -> TriangleSoup {
        self.geometry().soup()
    }

    pub fn flawed_soup(&self) -> Result<TriangleSoup> {
        let script = self.flaws.clone().unwrap_or_else(|| self.default_flaws());
        Ok(apply_script(&index_mesh(&self.valid_soup(), 1e-9), &script)?.0)
    }

    pub fn problem(&self, p: usize) -> Problem {
        let g = self.geometry();
        let (b, t) = (g.half_width, g.thickness);
        let sym = |axis: usize| DirichletSpec {
            region: Region::Plane { axis, value: 0.0 },
            components: vec![axis],
            value: 0.0,
            enforcement: Enforcement::Strong,
        };
        // Off the tree lattice so that plate faces cut leaves instead of
        // lying between them.
        let lo = [-0.27, -0.31, -1.79];
        let edge = b + 0.6;
        Problem {
            name: format!("plate p={p}"),
            geometry: None,
            grid: GridSpec {
                min: [0.0; 3],
                max: [b, b, t],
                cells: self.cells,
            },
            p,
            k: self.k,
            q: self.q,
            gauss_order: None,
            material: Material::elastic(self.young, self.poisson),
            tree: TreeSpec {
                depth: TreeDepth::Auto { cap: self.depth_cap },
                domain: Some([lo, lo.map(|c| c + edge)]),
                padding: 0.0,
            },
            dirichlet: vec![sym(0), sym(1), sym(2)],
            neumann: vec![NeumannSpec {
                region: Region::Surface(Selector {
                    min: [0.0, b, 0.0],
                    max: [b, b, t],
                }),
                load: SurfaceLoad::Traction([0.0, self.traction, 0.0]),
            }],
            point_loads: vec![],
            policy: Policy::default(),
            solver: self.solver,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EnergyRow {
    pub run_id: String,
    pub policy: String,
    pub p: usize,
    pub k: u32,
    pub q: f64,
    pub energy: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct PlateRow {
    pub model: &'static str,
    pub p: usize,
    pub n_max: u32,
    pub energy: f64,
    pub u_low: f64,
    pub u_high: f64,
    pub width: f64,
    pub ordered: bool,
    pub pmc: PmcStats,
    /// Relative distance of the energy to the valid model at the same p.
    pub rel_dev_to_valid: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PlateStudy {
    pub config: PlateStudyConfig,
    /// Relative volume lost by faceting the hole.
    pub facet_volume_error: f64,
    pub energies: Vec<EnergyRow>,
    pub rows: Vec<PlateRow>,
}

pub const ENERGY_CSV_HEADER: &str = "run_id,policy,p,k,q,U,iterations";
pub const PLATE_CSV_HEADER: &str =
    "model,p,n_max,U,U_low,U_high,width,ordered,gauss_points,voted,ambiguous,ties,ambiguous_fraction,rel_dev_to_valid,facet_volume_error";

impl PlateStudy {
    pub fn energy_csv(&self) -> String {
        let mut s = String::from(ENERGY_CSV_HEADER);
        s.push('\n');
        for r in &self.energies {
            let _ = writeln!(s, "{},{},{},{},{},{:.12e},{}", r.run_id, r.policy, r.p, r.k, r.q, r.energy, r.iterations);
        }
        s
    }

    pub fn csv(&self) -> String {
        let mut s = String::from(PLATE_CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            let frac = r.pmc.ambiguous as f64 / r.pmc.points.max(1) as f64;
            let _ = writeln!(
                s,
                "{},{},{},{:.12e},{:.12e},{:.12e},{:.6e},{},{},{},{},{},{:.6e},{:.6e},{:.6e}",
                r.model,
                r.p,
                r.n_max,
                r.energy,
                r.u_low,
                r.u_high,
                r.width,
                r.ordered,
                r.pmc.points,
                r.pmc.voted,
                r.pmc.ambiguous,
                r.pmc.ties,
                frac,
                r.rel_dev_to_valid,
                self.facet_volume_error
            );
        }
        s
    }

    pub fn rows_of(&self, model: &str) -> impl Iterator<Item = &PlateRow> {
        let model = model.to_string();
        self.rows.iter().filter(move |r| r.model == model)
    }
}

pub fn plate_study(config: &PlateStudyConfig) -> Result<PlateStudy> {
    config.validate()?;
    let g = config.geometry();
    let valid = config.valid_soup();
    let flawed = config.flawed_soup()?;
    let mut energies = Vec::new();
    let mut rows = Vec::new();
    let mut valid_energy = Vec::new();
    for &p in &config.degrees {
        let model = Model::new(config.problem(p), &valid)?;
        let r = model.run(Policy::default())?;
        energies.push(EnergyRow {
            run_id: format!("valid-p{p}"),
            policy: r.policy.clone(),
            p,
            k: config.k,
            q: config.q,
            energy: r.energy,
            iterations: r.iterations,
        });
        rows.push(PlateRow {
            model: "valid",
            p,
            n_max: model.engine.filled().tree().n_max(),
            energy: r.energy,
            u_low: r.energy,
            u_high: r.energy,
            width: 0.0,
            ordered: true,
            pmc: model.quadrature.ledger().pmc,
            rel_dev_to_valid: 0.0,
        });
        valid_energy.push(r.energy);
    }
    for (&p, &reference) in config.degrees.iter().zip(&valid_energy) {
        let model = Model::new(config.problem(p), &flawed)?;
        let b = model.bracket()?;
        for r in [&b.bracket_outside, &b.majority, &b.bracket_inside] {
            energies.push(EnergyRow {
                run_id: format!("flawed-p{p}"),
                policy: r.policy.clone(),
                p,
                k: config.k,
                q: config.q,
                energy: r.energy,
                iterations: r.iterations,
            });
        }
        rows.push(PlateRow {
            model: "flawed",
            p,
            n_max: model.engine.filled().tree().n_max(),
            energy: b.u_majority,
            u_low: b.u_low,
            u_high: b.u_high,
            width: b.width,
            ordered: b.ordered,
            pmc: model.quadrature.ledger().pmc,
            rel_dev_to_valid: (b.u_majority - reference).abs() / reference,
        });
        log::info!("plate study p={p}: flawed U={:.6e}, valid U={reference:.6e}", b.u_majority);
    }
    Ok(PlateStudy {
        config: config.clone(),
        facet_volume_error: (g.exact_volume() - g.faceted_volume()).abs() / g.exact_volume(),
        energies,
        rows,
    })
}
