//! Gap sweep on the self-weighted clamped cube.
//!
//! Row `(ε, β)` opens a gap of width `ε` in the top face of the unit cube,
//! shifts grid and geometry tree by `x0 = −0.3 + 0.05β` in x and y, picks
//! the tree depth automatically and compares the strain energy with the
//! flawless cube on the same grid.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::fcm::boundary::Enforcement;
use crate::fcm::material::Material;
use crate::mesh_io::TriangleSoup;
use crate::pmc::Policy;
use crate::problem::{BracketResult, DirichletSpec, GridSpec, Model, Problem, Region, TreeDepth, TreeSpec};
use crate::solver::SolverKind;
use crate::studies::fixtures::gap_cube;

/// Edge of the cubic tree domain and of the grid box.
pub const BOX_EDGE: f64 = 1.6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CubeStudyConfig {
    pub eps: Vec<f64>,
    pub betas: Vec<u32>,
    pub cells: usize,
    pub p: usize,
    pub k: u32,
    pub q: f64,
    pub young: f64,
    pub poisson: f64,
    /// Weight per volume, along −z.
    pub weight: f64,
    pub depth_cap: u32,
    /// Tree depth of the flawless reference runs.
    pub reference_depth: u32,
    pub solver: SolverKind,
}

impl Default for CubeStudyConfig {
    fn default() -> Self {
        CubeStudyConfig::reduced()
    }
}

impl CubeStudyConfig {
    /// 5×5×5 cells at p = 2.
    pub fn reduced() -> Self {
        CubeStudyConfig {
            eps: vec![0.2, 0.1, 0.05, 0.025],
            betas: vec![0, 1, 2, 3],
            cells: 5,
            p: 2,
            k: 3,
            q: 8.0,
            young: 1e4,
            poisson: 0.3,
            weight: 1.0,
            depth_cap: 8,
            reference_depth: 5,
            solver: SolverKind::Skyline,
        }
    }

    /// 9×9×9 cells at p = 3.
    pub fn full() -> Self {
        CubeStudyConfig {
            cells: 9,
            p: 3,
            ..CubeStudyConfig::reduced()
        }
    }

    pub fn validate(&self) -> Result<()> {
        super::check_nonempty("eps", self.eps.len())?;
        super::check_nonempty("betas", self.betas.len())?;
        if let Some(e) = self.eps.iter().find(|&&e| !(0.0..0.5).contains(&e)) {
            return Err(crate::Error::Config(format!("gap width {e} outside [0, 0.5)")));
        }
        Ok(())
    }

    fn origin(beta: u32) -> f64 {
        -0.3 + 0.05 * f64::from(beta)
    }

    /// The problem for shift `beta` with the given tree depth rule.
    pub fn problem(&self, beta: u32, depth: TreeDepth) -> Problem {
        let x0 = Self::origin(beta);
        let clamp = |axis| DirichletSpec {
            region: Region::Plane { axis, value: 0.0 },
            components: vec![],
            value: 0.0,
            enforcement: Enforcement::Strong,
        };
        Problem {
            name: format!("cube-gap beta={beta}"),
            geometry: None,
            grid: GridSpec {
                min: [x0, x0, 0.0],
                max: [x0 + BOX_EDGE, x0 + BOX_EDGE, BOX_EDGE],
                cells: [self.cells; 3],
            },
            p: self.p,
            k: self.k,
            q: self.q,
            gauss_order: None,
            material: Material::Elastic {
                young: self.young,
                poisson: self.poisson,
                body_force: [0.0, 0.0, -self.weight],
            },
            tree: TreeSpec {
                depth,
                domain: Some([[x0, x0, x0], [x0 + BOX_EDGE; 3]]),
                padding: 0.0,
            },
            dirichlet: vec![clamp(2)],
            neumann: vec![],
            point_loads: vec![],
            policy: Policy::default(),
            solver: self.solver,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CubeRow {
    pub eps_gap: f64,
    pub beta: u32,
    pub n_max: u32,
    pub energy: f64,
    pub reference: f64,
    pub rel_dev: f64,
    pub u_low: f64,
    pub u_high: f64,
    /// `ok` when the majority energy lies in the bracket.
    pub flag: &'static str,
    pub ambiguous_points: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CubeStudy {
    pub config: CubeStudyConfig,
    pub rows: Vec<CubeRow>,
}

pub const CUBE_CSV_HEADER: &str = "eps_gap,beta,n_max,U,rel_dev,U_low,U_high,flag";

impl CubeStudy {
    pub fn csv(&self) -> String {
        let mut s = String::from(CUBE_CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{:.12e},{:.12e},{:.12e},{:.12e},{}",
                r.eps_gap, r.beta, r.n_max, r.energy, r.rel_dev, r.u_low, r.u_high, r.flag
            );
        }
        s
    }

    /// Largest deviation among rows with `eps_gap <= eps`.
    pub fn max_deviation_up_to(&self, eps: f64) -> f64 {
        self.rows.iter().filter(|r| r.eps_gap <= eps).map(|r| r.rel_dev).fold(0.0, f64::max)
    }
}

fn flag(b: &BracketResult) -> &'static str {
    let tol = 1e-9 * b.u_majority.abs();
    if b.u_majority >= b.u_low - tol && b.u_majority <= b.u_high + tol {
        "ok"
    } else {
        "outside_bracket"
    }
}

pub fn cube_gap_study(config: &CubeStudyConfig) -> Result<CubeStudy> {
    config.validate()?;
    let mut rows = Vec::new();
    for &beta in &config.betas {
        let flawless = gap_cube(0.0);
        let reference = Model::new(config.problem(beta, TreeDepth::Fixed { depth: config.reference_depth }), &flawless)?
            .run(Policy::default())?
            .energy;
        for &eps in &config.eps {
            let row = if eps == 0.0 {
                CubeRow {
                    eps_gap: eps,
                    beta,
                    n_max: config.reference_depth,
                    energy: reference,
                    reference,
                    rel_dev: 0.0,
                    u_low: reference,
                    u_high: reference,
                    flag: "ok",
                    ambiguous_points: 0,
                }
            } else {
                gap_row(config, beta, eps, reference, &gap_cube(eps))?
            };
            log::info!("cube study eps={eps} beta={beta}: U={:.6e} dev={:.3e}", row.energy, row.rel_dev);
            rows.push(row);
        }
    }
    Ok(CubeStudy {
        config: config.clone(),
        rows,
    })
}

fn gap_row(config: &CubeStudyConfig, beta: u32, eps: f64, reference: f64, soup: &TriangleSoup) -> Result<CubeRow> {
    let model = Model::new(config.problem(beta, TreeDepth::Auto { cap: config.depth_cap }), soup)?;
    let n_max = model.auto_depth().map(|a| a.chosen).unwrap_or(config.depth_cap);
    let b = model.bracket()?;
    Ok(CubeRow {
        eps_gap: eps,
        beta,
        n_max,
        energy: b.u_majority,
        reference,
        rel_dev: (b.u_majority - reference).abs() / reference,
        u_low: b.u_low,
        u_high: b.u_high,
        flag: flag(&b),
        ambiguous_points: model.quadrature.ledger().pmc.ambiguous,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gap_row_is_the_reference() {
        let config = CubeStudyConfig {
            eps: vec![0.0],
            betas: vec![1],
            cells: 2,
            p: 1,
            ..CubeStudyConfig::reduced()
        };
        let s = cube_gap_study(&config).unwrap();
        assert_eq!(s.rows.len(), 1);
        assert_eq!(s.rows[0].rel_dev, 0.0);
        assert!(s.rows[0].energy > 0.0);
        assert!(s.csv().starts_with(CUBE_CSV_HEADER));
    }

    #[test]
    fn rejects_empty_ranges() {
        let config = CubeStudyConfig {
            betas: vec![],
            ..CubeStudyConfig::reduced()
        };
        assert!(cube_gap_study(&config).is_err());
    }
}
