use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fcm::basis::MAX_DEGREE;
use crate::geom::{Aabb, Point, Vector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Physics {
    Elasticity3D,
    Diffusion3D,
}

impl Physics {
    /// Unknowns per scalar mode.
    pub fn components(self) -> usize {
        match self {
            Physics::Elasticity3D => 3,
            Physics::Diffusion3D => 1,
        }
    }
}

/// Uniform hexahedral grid carrying a C0 hierarchic tensor-product space.
///
/// Along each axis the 1D modes get global ids: the end mode at grid line
/// `c` is `c·p`, bubble `m >= 2` of cell `c` is `c·p + m - 1`. A scalar mode
/// is `ix + (nx·p+1)·(iy + (ny·p+1)·iz)` and unknown `comp` of it is
/// `components·scalar + comp`.
#[derive(Debug, Clone, PartialEq)]
pub struct FcmGrid {
    domain: Aabb,
    cells: [usize; 3],
    p: usize,
    physics: Physics,
}

impl FcmGrid {
    pub fn new(domain: Aabb, cells: [usize; 3], p: usize, physics: Physics) -> Result<FcmGrid> {
        if cells.iter().any(|&c| c == 0) {
            return Err(Error::Config(format!("cell counts must be positive, got {cells:?}")));
        }
        if !(1..=MAX_DEGREE).contains(&p) {
            return Err(Error::Config(format!("degree must be in 1..={MAX_DEGREE}, got {p}")));
        }
        if (0..3).any(|a| domain.extent()[a] <= 0.0) {
            return Err(Error::Config("grid domain must have positive extent".into()));
        }
        Ok(FcmGrid {
            domain,
            cells,
            p,
            physics,
        })
    }

    pub fn domain(&self) -> &Aabb {
        &self.domain
    }

    pub fn cells(&self) -> [usize; 3] {
        self.cells
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn physics(&self) -> Physics {
        self.physics
    }

    pub fn components(&self) -> usize {
        self.physics.components()
    }

    pub fn cell_count(&self) -> usize {
        self.cells.iter().product()
    }

    pub fn cell_size(&self) -> Vector {
        let e = self.domain.extent();
        Vector::new(e.x / self.cells[0] as f64, e.y / self.cells[1] as f64, e.z / self.cells[2] as f64)
    }

    pub fn cell_edge(&self) -> f64 {
        self.cell_size().max()
    }

    /// Cell id of grid position `ijk`, x fastest.
    pub fn cell_index(&self, ijk: [usize; 3]) -> usize {
        ijk[0] + self.cells[0] * (ijk[1] + self.cells[1] * ijk[2])
    }

    pub fn cell_ijk(&self, cell: usize) -> [usize; 3] {
        let [nx, ny, _] = self.cells;
        [cell % nx, (cell / nx) % ny, cell / (nx * ny)]
    }

    pub fn cell_box(&self, cell: usize) -> Aabb {
        let ijk = self.cell_ijk(cell);
        let h = self.cell_size();
        let coord = |a: usize, i: usize| {
            if i == self.cells[a] {
                self.domain.max[a]
            } else {
                self.domain.min[a] + i as f64 * h[a]
            }
        };
        Aabb::new(
            Point::new(coord(0, ijk[0]), coord(1, ijk[1]), coord(2, ijk[2])),
            Point::new(coord(0, ijk[0] + 1), coord(1, ijk[1] + 1), coord(2, ijk[2] + 1)),
        )
    }

    /// Global 1D modes per axis.
    pub fn modes_per_axis(&self) -> [usize; 3] {
        self.cells.map(|n| n * self.p + 1)
    }

    pub fn scalar_count(&self) -> usize {
        self.modes_per_axis().iter().product()
    }

    pub fn dof_count(&self) -> usize {
        self.components() * self.scalar_count()
    }

    /// Scalar modes per cell, `(p+1)^3`.
    pub fn local_scalar_count(&self) -> usize {
        (self.p + 1).pow(3)
    }

    fn global_1d(&self, c: usize, m: usize) -> usize {
        match m {
            0 => c * self.p,
            1 => (c + 1) * self.p,
            _ => c * self.p + m - 1,
        }
    }

    /// Global scalar ids of a cell's modes, local mode `i + (p+1)(j + (p+1)k)`.
    pub fn cell_scalar_ids(&self, cell: usize) -> Vec<usize> {
        let [ci, cj, ck] = self.cell_ijk(cell);
        let [mx, my, _] = self.modes_per_axis();
        let m = self.p + 1;
        let mut ids = Vec::with_capacity(m * m * m);
        for k in 0..m {
            for j in 0..m {
                for i in 0..m {
                    let (gx, gy, gz) = (self.global_1d(ci, i), self.global_1d(cj, j), self.global_1d(ck, k));
                    ids.push(gx + mx * (gy + my * gz));
                }
            }
        }
        ids
    }

    /// Global unknowns of a cell; local unknown `components·a + comp`.
    pub fn cell_dofs(&self, cell: usize) -> Vec<usize> {
        let nc = self.components();
        self.cell_scalar_ids(cell)
            .into_iter()
            .flat_map(|s| (0..nc).map(move |c| nc * s + c))
            .collect()
    }

    pub fn to_local(&self, cell: usize, x: &Point) -> [f64; 3] {
        let b = self.cell_box(cell);
        [0, 1, 2].map(|a| 2.0 * (x[a] - b.min[a]) / (b.max[a] - b.min[a]) - 1.0)
    }

    pub fn to_global(&self, cell: usize, xi: [f64; 3]) -> Point {
        let b = self.cell_box(cell);
        Point::new(
            b.min.x + 0.5 * (xi[0] + 1.0) * (b.max.x - b.min.x),
            b.min.y + 0.5 * (xi[1] + 1.0) * (b.max.y - b.min.y),
            b.min.z + 0.5 * (xi[2] + 1.0) * (b.max.z - b.min.z),
        )
    }

    /// Cell containing `x` and its local coordinates. Points on an inner
    /// cell face belong to the cell on the upper side.
    pub fn locate(&self, x: &Point) -> Option<(usize, [f64; 3])> {
        if !self.domain.contains(x) {
            return None;
        }
        let h = self.cell_size();
        let ijk = [0, 1, 2].map(|a| (((x[a] - self.domain.min[a]) / h[a]).floor().max(0.0) as usize).min(self.cells[a] - 1));
        let cell = self.cell_index(ijk);
        Some((cell, self.to_local(cell, x)))
    }

    /// Index of the grid line at `value` along `axis`, if one lies within
    /// 1e-9 cell edges.
    pub fn plane_index(&self, axis: usize, value: f64) -> Result<usize> {
        let h = self.cell_size()[axis];
        let t = (value - self.domain.min[axis]) / h;
        let c = t.round();
        if (t - c).abs() > 1e-9 || c < 0.0 || c > self.cells[axis] as f64 {
            return Err(Error::UnalignedPlane { axis, value });
        }
        Ok(c as usize)
    }

    /// Scalar modes not vanishing on grid plane `line` along `axis`.
    pub fn plane_scalars(&self, axis: usize, line: usize) -> Vec<usize> {
        let m = self.modes_per_axis();
        let fixed = line * self.p;
        let mut out = Vec::new();
        for iz in 0..m[2] {
            for iy in 0..m[1] {
                for ix in 0..m[0] {
                    if [ix, iy, iz][axis] == fixed {
                        out.push(ix + m[0] * (iy + m[1] * iz));
                    }
                }
            }
        }
        out
    }
}
