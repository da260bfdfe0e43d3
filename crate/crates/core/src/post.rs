//! Energies, field sampling and VTK export of solutions.

use std::path::Path;

use nalgebra::Matrix3;

use crate::error::{Error, Result};
use crate::fcm::basis::CellShape;
use crate::fcm::grid::{FcmGrid, Physics};
use crate::fcm::material::{von_mises, Material};
use crate::fcm::quadrature::alpha;
use crate::geom::Point;
use crate::pmc::{PmcEngine, Policy};
use crate::sparse::Csr;
use crate::vtk::{VtkCellType, VtkWriter};

/// `½ uᵀ K u`.
pub fn strain_energy(k: &Csr, u: &[f64]) -> f64 {
    0.5 * k.quad_form(u)
}

fn locate(grid: &FcmGrid, x: &Point) -> Result<(usize, [f64; 3])> {
    grid.locate(x).ok_or(Error::OutsideDomain([x.x, x.y, x.z]))
}

fn value_in_cell(grid: &FcmGrid, u: &[f64], cell: usize, xi: [f64; 3]) -> Vec<f64> {
    let nc = grid.components();
    let s = CellShape::eval(grid.p(), xi);
    let mut out = vec![0.0; nc];
    for (a, &id) in grid.cell_scalar_ids(cell).iter().enumerate() {
        for c in 0..nc {
            out[c] += u[nc * id + c] * s.values[a];
        }
    }
    out
}

/// Gradient `g[(i, j)] = ∂u_i/∂x_j` of an elastic solution inside `cell`.
fn gradient_in_cell(grid: &FcmGrid, u: &[f64], cell: usize, xi: [f64; 3]) -> Matrix3<f64> {
    let s = CellShape::eval(grid.p(), xi);
    let h = grid.cell_size();
    let jac = [2.0 / h.x, 2.0 / h.y, 2.0 / h.z];
    let mut g = Matrix3::zeros();
    for (a, &id) in grid.cell_scalar_ids(cell).iter().enumerate() {
        for i in 0..3 {
            for j in 0..3 {
                g[(i, j)] += u[3 * id + i] * s.grads[a][j] * jac[j];
            }
        }
    }
    g
}

/// Field values (displacement or temperature) at `points`.
pub fn sample_field(grid: &FcmGrid, u: &[f64], points: &[Point]) -> Result<Vec<Vec<f64>>> {
    points
        .iter()
        .map(|x| locate(grid, x).map(|(c, xi)| value_in_cell(grid, u, c, xi)))
        .collect()
}

/// Von Mises stress of an elastic solution at `points`.
pub fn von_mises_at(grid: &FcmGrid, u: &[f64], material: &Material, points: &[Point]) -> Result<Vec<f64>> {
    if grid.physics() != Physics::Elasticity3D {
        return Err(Error::Config("von Mises stress needs an elastic solution".into()));
    }
    points
        .iter()
        .map(|x| locate(grid, x).map(|(c, xi)| von_mises(&material.stress(&gradient_in_cell(grid, u, c, xi)))))
        .collect()
}

/// Writes each cell's `(p+1)^3` sample lattice as voxels carrying the
/// field, von Mises stress (elasticity) and `α`. Cells do not share
/// points, so stresses are shown unsmoothed.
pub fn export_vtk(
    grid: &FcmGrid,
    u: &[f64],
    material: &Material,
    engine: &PmcEngine,
    q: f64,
    policy: Policy,
    path: impl AsRef<Path>,
) -> Result<()> {
    render_vtk(grid, u, material, engine, q, policy).write(path)
}

pub fn render_vtk(grid: &FcmGrid, u: &[f64], material: &Material, engine: &PmcEngine, q: f64, policy: Policy) -> VtkWriter {
    let p = grid.p();
    let m = p + 1;
    let elastic = grid.physics() == Physics::Elasticity3D;
    let mut w = VtkWriter::new("dirtyfcm solution");
    let mut field = Vec::new();
    let mut vm = Vec::new();
    let mut alphas = Vec::new();
    for cell in 0..grid.cell_count() {
        let base = w.point_count();
        for k in 0..m {
            for j in 0..m {
                for i in 0..m {
                    let xi = [i, j, k].map(|t| -1.0 + 2.0 * t as f64 / p as f64);
                    let x = grid.to_global(cell, xi);
                    w.add_point(x);
                    let v = value_in_cell(grid, u, cell, xi);
                    if elastic {
                        field.push([v[0], v[1], v[2]]);
                        vm.push(von_mises(&material.stress(&gradient_in_cell(grid, u, cell, xi))));
                    } else {
                        field.push([v[0], 0.0, 0.0]);
                    }
                    alphas.push(alpha(engine, &x, q, policy));
                }
            }
        }
        let id = |i: usize, j: usize, k: usize| base + i + m * (j + m * k);
        for k in 0..p {
            for j in 0..p {
                for i in 0..p {
                    let corners = [0, 1, 2, 3, 4, 5, 6, 7].map(|c| id(i + (c & 1), j + (c >> 1 & 1), k + (c >> 2 & 1)));
                    w.add_cell_indices(VtkCellType::Voxel, &corners);
                }
            }
        }
    }
    if elastic {
        w.point_vectors("displacement", field);
        w.point_scalars("von_mises", vm);
    } else {
        w.point_scalars("temperature", field.iter().map(|v| v[0]).collect());
    }
    w.point_scalars("alpha", alphas);
    w
}
