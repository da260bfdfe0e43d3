//! Dirichlet conditions: strong elimination on grid planes.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::fcm::grid::FcmGrid;
use crate::sparse::Csr;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Enforcement {
    Strong,
    /// `beta` defaults to `1e8 · modulus / cell edge`.
    Penalty {
        #[serde(default)]
        beta: Option<f64>,
    },
}

/// Prescribed values for the unknowns of `components` on the grid plane
/// `axis = value`, for a constant boundary value. The end-mode products
/// carry the value; all other modes on the plane are zero.
pub fn strong_plane_constraints(grid: &FcmGrid, axis: usize, value: f64, components: &[usize], prescribed: f64) -> Result<Vec<(usize, f64)>> {
    let line = grid.plane_index(axis, value)?;
    let nc = grid.components();
    let m = grid.modes_per_axis();
    let p = grid.p();
    let mut out = Vec::new();
    for s in grid.plane_scalars(axis, line) {
        let idx = [s % m[0], (s / m[0]) % m[1], s / (m[0] * m[1])];
        let corner = idx.iter().all(|i| i % p == 0);
        for &c in components {
            out.push((nc * s + c, if corner { prescribed } else { 0.0 }));
        }
    }
    Ok(out)
}

/// The system on the free unknowns after substituting prescribed values.
#[derive(Debug, Clone)]
pub struct Constrained {
    pub k: Csr,
    pub f: Vec<f64>,
    map: Vec<Option<usize>>,
    fixed: Vec<Option<f64>>,
}

impl Constrained {
    /// Removes the `fixed` unknowns symmetrically; the first value given
    /// for an unknown wins.
    pub fn new(k: &Csr, f: &[f64], fixed: &[(usize, f64)]) -> Constrained {
        let n = k.n();
        let mut value = vec![None; n];
        for &(d, v) in fixed {
            value[d].get_or_insert(v);
        }
        let mut map = vec![None; n];
        let mut free = 0;
        for i in 0..n {
            if value[i].is_none() {
                map[i] = Some(free);
                free += 1;
            }
        }
        let mut rf = vec![0.0; free];
        for i in 0..n {
            let Some(ri) = map[i] else { continue };
            let (cols, vals) = k.row(i);
            let lifted: f64 = cols.iter().zip(vals).filter_map(|(&j, a)| value[j].map(|v| a * v)).sum();
            rf[ri] = f[i] - lifted;
        }
        Constrained {
            k: k.restrict(&map, free),
            f: rf,
            map,
            fixed: value,
        }
    }

    pub fn free_count(&self) -> usize {
        self.k.n()
    }

    /// Full vector from free-unknown values.
    pub fn expand(&self, reduced: &[f64]) -> Vec<f64> {
        self.map
            .iter()
            .zip(&self.fixed)
            .map(|(m, v)| match (m, v) {
                (Some(i), _) => reduced[*i],
                (None, Some(v)) => *v,
                (None, None) => unreachable!("unknown neither free nor fixed"),
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fcm::basis::CellShape;
    use crate::fcm::grid::Physics;
    use crate::geom::{Aabb, Point};

    #[test]
    fn plane_constraints_reproduce_constant() {
        let g = FcmGrid::new(Aabb::new(Point::origin(), Point::new(2., 2., 1.)), [2, 2, 1], 3, Physics::Elasticity3D).unwrap();
        let fixed = strong_plane_constraints(&g, 2, 0.0, &[1], 0.25).unwrap();
        assert_eq!(fixed.len(), 7 * 7);
        let mut u = vec![0.0; g.dof_count()];
        for (d, v) in &fixed {
            u[*d] = *v;
        }
        // u_y on z = 0 evaluates to the prescribed constant.
        for cell in 0..4 {
            let s = CellShape::eval(3, [0.3, -0.6, -1.0]);
            let val: f64 = g.cell_scalar_ids(cell).iter().zip(&s.values).map(|(&i, n)| u[3 * i + 1] * n).sum();
            assert!((val - 0.25).abs() < 1e-14);
        }
        assert!(strong_plane_constraints(&g, 0, 0.3, &[0], 0.0).is_err());
    }

    #[test]
    fn elimination_matches_full_solution() {
        let d = nalgebra::DMatrix::from_row_slice(3, 3, &[4., -1., 0., -1., 4., -1., 0., -1., 4.]);
        let k = Csr::from_dense(&d);
        let f = [1.0, 2.0, 3.0];
        let c = Constrained::new(&k, &f, &[(2, 0.5), (2, 9.0)]);
        assert_eq!(c.free_count(), 2);
        let ur = nalgebra::DMatrix::from_row_slice(2, 2, &[4., -1., -1., 4.])
            .lu()
            .solve(&nalgebra::DVector::from_vec(c.f.clone()))
            .unwrap();
        let u = c.expand(ur.as_slice());
        assert_eq!(u[2], 0.5);
        let r = k.mul(&u);
        assert!((r[0] - 1.0).abs() < 1e-14 && (r[1] - 2.0).abs() < 1e-14);
    }
}
