//! Compressed sparse row storage.

use nalgebra::DMatrix;
use rayon::prelude::*;

/// Square CSR matrix with column indices sorted within each row.
#[derive(Debug, Clone, PartialEq)]
pub struct Csr {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl Csr {
    /// Sums duplicate entries. Sorting is stable, so duplicates are added
    /// in input order and the result is reproducible.
    pub fn from_triplets(n: usize, mut t: Vec<(usize, usize, f64)>) -> Csr {
        t.sort_by_key(|&(i, j, _)| (i, j));
        let mut row_ptr = vec![0; n + 1];
        let mut cols: Vec<usize> = Vec::with_capacity(t.len());
        let mut vals: Vec<f64> = Vec::with_capacity(t.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in t {
            assert!(i < n && j < n, "entry ({i},{j}) outside {n}x{n}");
            if last == Some((i, j)) {
                *vals.last_mut().expect("entry") += v;
            } else {
                cols.push(j);
                vals.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Csr { n, row_ptr, cols, vals }
    }

    pub fn from_dense(m: &DMatrix<f64>) -> Csr {
        let mut t = Vec::new();
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                if m[(i, j)] != 0.0 {
                    t.push((i, j, m[(i, j)]));
                }
            }
        }
        Csr::from_triplets(m.nrows(), t)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.cols[r.clone()], &self.vals[r])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (c, v) = self.row(i);
        c.binary_search(&j).map_or(0.0, |k| v[k])
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        y.par_iter_mut().enumerate().for_each(|(i, yi)| {
            let (c, v) = self.row(i);
            *yi = c.iter().zip(v).map(|(&j, a)| a * x[j]).sum();
        });
    }

    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.matvec(x, &mut y);
        y
    }

    /// `xᵀ A x`.
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        self.mul(x).iter().zip(x).map(|(a, b)| a * b).sum()
    }

    /// Largest `|a_ij - a_ji|` relative to the largest `|a_ij|`.
    pub fn asymmetry(&self) -> f64 {
        let scale = self.vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst = 0.0f64;
        for i in 0..self.n {
            let (c, v) = self.row(i);
            for (&j, a) in c.iter().zip(v) {
                worst = worst.max((a - self.get(j, i)).abs());
            }
        }
        worst / scale
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            let (c, v) = self.row(i);
            for (&j, a) in c.iter().zip(v) {
                m[(i, j)] = *a;
            }
        }
        m
    }

    /// Rows and columns with `map[i] = Some(new index)`, others dropped.
    pub fn restrict(&self, map: &[Option<usize>], n_new: usize) -> Csr {
        let mut t = Vec::new();
        for i in 0..self.n {
            let Some(ni) = map[i] else { continue };
            let (c, v) = self.row(i);
            for (&j, a) in c.iter().zip(v) {
                if let Some(nj) = map[j] {
                    t.push((ni, nj, *a));
                }
            }
        }
        Csr::from_triplets(n_new, t)
    }

    pub fn scaled(&self, s: f64) -> Csr {
        Csr {
            vals: self.vals.iter().map(|v| v * s).collect(),
            ..self.clone()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicates_are_summed() {
        let m = Csr::from_triplets(2, vec![(1, 0, 1.0), (0, 0, 2.0), (1, 0, 0.5), (0, 1, 3.0)]);
        assert_eq!(m.get(1, 0), 1.5);
        assert_eq!(m.get(1, 1), 0.0);
        assert_eq!(m.nnz(), 3);
        assert_eq!(m.mul(&[1.0, 1.0]), vec![5.0, 1.5]);
        assert!(m.asymmetry() > 0.0);
    }

    #[test]
    fn restrict_drops_rows_and_columns() {
        let d = DMatrix::from_row_slice(3, 3, &[4., 1., 0., 1., 5., 2., 0., 2., 6.]);
        let m = Csr::from_dense(&d);
        assert_eq!(m.asymmetry(), 0.0);
        let r = m.restrict(&[Some(0), None, Some(1)], 2);
        assert_eq!(r.to_dense(), DMatrix::from_row_slice(2, 2, &[4., 0., 0., 6.]));
        assert_eq!(m.quad_form(&[1., 1., 1.]), 21.0);
    }
}
