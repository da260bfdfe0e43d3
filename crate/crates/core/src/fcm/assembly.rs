//! Volume integrals of the weak form over the cut-cell quadrature.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::fcm::basis::CellShape;
use crate::fcm::grid::{FcmGrid, Physics};
use crate::fcm::material::Material;
use crate::fcm::quadrature::{alpha_of, CellQuadrature, Quadrature};
use crate::pmc::Policy;
use crate::sparse::Csr;

/// Quadrature points processed per matrix product.
const CHUNK: usize = 1024;

/// Element matrix, load vector and global unknowns of one cell.
#[derive(Debug, Clone)]
pub struct CellMatrices {
    pub dofs: Vec<usize>,
    pub k: DMatrix<f64>,
    pub f: Vec<f64>,
}

/// Integrates one cell with `α` from the stored votes under `policy`.
///
/// With gradient moments `M_ij[a][b] = Σ w α ∂_i N_a ∂_j N_b`, diffusion
/// is `κ Σ_i M_ii` and the isotropic elastic block of modes `a, b` is
/// `λ M_ij + μ M_ji + μ δ_ij Σ_k M_kk`.
pub fn cell_matrices(grid: &FcmGrid, cell: usize, quad: &CellQuadrature, material: &Material, q: f64, policy: Policy) -> CellMatrices {
    let nb = grid.local_scalar_count();
    let h = grid.cell_size();
    let jac = [2.0 / h.x, 2.0 / h.y, 2.0 / h.z];
    let load = material.volume_load();
    let nc = grid.components();
    let elastic = grid.physics() == Physics::Elasticity3D;
    // Moments for i <= j, row-major pairs (0,0),(0,1),(0,2),(1,1),(1,2),(2,2).
    const PAIRS: [(usize, usize); 6] = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)];
    let mut moments: Vec<DMatrix<f64>> = (0..if elastic { 6 } else { 3 }).map(|_| DMatrix::zeros(nb, nb)).collect();
    let mut f = vec![0.0; nb * nc];

    for (pts, votes) in quad.points.chunks(CHUNK).zip(quad.votes.chunks(CHUNK)) {
        let rows = pts.len();
        let mut g = [DMatrix::zeros(rows, nb), DMatrix::zeros(rows, nb), DMatrix::zeros(rows, nb)];
        for (r, (qp, vote)) in pts.iter().zip(votes).enumerate() {
            let wa = qp.weight * alpha_of(vote.label(policy), q);
            let s = CellShape::eval(grid.p(), qp.xi);
            let sw = wa.sqrt();
            for a in 0..nb {
                for i in 0..3 {
                    g[i][(r, a)] = sw * s.grads[a][i] * jac[i];
                }
                for c in 0..nc {
                    f[nc * a + c] += wa * s.values[a] * load[c];
                }
            }
        }
        if elastic {
            for (m, &(i, j)) in moments.iter_mut().zip(&PAIRS) {
                m.gemm_tr(1.0, &g[i], &g[j], 1.0);
            }
        } else {
            for (i, m) in moments.iter_mut().enumerate() {
                m.gemm_tr(1.0, &g[i], &g[i], 1.0);
            }
        }
    }
    // Same-axis moments are symmetric in exact arithmetic; make them so.
    for (n, m) in moments.iter_mut().enumerate() {
        if !elastic || PAIRS[n].0 == PAIRS[n].1 {
            let t = m.transpose();
            *m += t;
            *m *= 0.5;
        }
    }
    let k = if elastic {
        let idx = |i: usize, j: usize| PAIRS.iter().position(|&p| p == (i.min(j), i.max(j))).expect("pair");
        let trace = &moments[idx(0, 0)] + &moments[idx(1, 1)] + &moments[idx(2, 2)];
        let (lambda, mu) = material.lame();
        let mut k = DMatrix::zeros(3 * nb, 3 * nb);
        for i in 0..3 {
            for j in 0..3 {
                let m = &moments[idx(i, j)];
                // m_ij[a][b] is m[(a,b)] for i <= j and m[(b,a)] otherwise.
                let at = |a: usize, b: usize| if i <= j { m[(a, b)] } else { m[(b, a)] };
                for a in 0..nb {
                    for b in 0..nb {
                        let mut v = lambda * at(a, b) + mu * at(b, a);
                        if i == j {
                            v += mu * trace[(a, b)];
                        }
                        k[(3 * a + i, 3 * b + j)] = v;
                    }
                }
            }
        }
        k
    } else {
        let Material::Diffusion { conductivity, .. } = *material else {
            panic!("diffusion grid with elastic material");
        };
        (&moments[0] + &moments[1] + &moments[2]) * conductivity
    };
    CellMatrices {
        dofs: grid.cell_dofs(cell),
        k,
        f,
    }
}

/// Global stiffness and volume load. Cells are integrated in parallel and
/// scattered in cell order, so the result does not depend on scheduling.
pub fn assemble_volume(grid: &FcmGrid, quad: &Quadrature, material: &Material, q: f64, policy: Policy) -> (Csr, Vec<f64>) {
    let n = grid.dof_count();
    let cells: Vec<CellMatrices> = quad
        .cells
        .par_iter()
        .enumerate()
        .map(|(c, cq)| cell_matrices(grid, c, cq, material, q, policy))
        .collect();
    let mut f = vec![0.0; n];
    let mut t = Vec::with_capacity(cells.iter().map(|c| c.dofs.len().pow(2)).sum());
    for cm in &cells {
        for (a, &ga) in cm.dofs.iter().enumerate() {
            f[ga] += cm.f[a];
            for (b, &gb) in cm.dofs.iter().enumerate() {
                let v = cm.k[(a, b)];
                if v != 0.0 {
                    t.push((ga, gb, v));
                }
            }
        }
    }
    (Csr::from_triplets(n, t), f)
}
