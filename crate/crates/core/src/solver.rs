//! Linear solvers for the assembled symmetric systems.

use std::collections::VecDeque;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse::Csr;

/// Largest system [`SolverKind::DirectDense`] accepts.
pub const DENSE_LIMIT: usize = 3000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SolverKind {
    /// Jacobi-preconditioned conjugate gradients; `max_iter` defaults to
    /// ten times the system size.
    Cg {
        #[serde(default = "default_tol")]
        tol: f64,
        #[serde(default)]
        max_iter: Option<usize>,
    },
    /// Dense Cholesky.
    DirectDense,
    /// Sparse Cholesky in envelope storage after reverse Cuthill-McKee
    /// reordering.
    Skyline,
}

fn default_tol() -> f64 {
    1e-10
}

impl Default for SolverKind {
    fn default() -> Self {
        SolverKind::Cg {
            tol: default_tol(),
            max_iter: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub iterations: usize,
    /// `‖Ku - f‖ / ‖f‖`, or the absolute norm when `f = 0`.
    pub residual: f64,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn relative_residual(k: &Csr, u: &[f64], f: &[f64]) -> f64 {
    let r: Vec<f64> = k.mul(u).iter().zip(f).map(|(a, b)| a - b).collect();
    let nf = norm(f);
    if nf > 0.0 {
        norm(&r) / nf
    } else {
        norm(&r)
    }
}

pub fn solve(k: &Csr, f: &[f64], kind: SolverKind) -> Result<(Vec<f64>, SolveStats)> {
    assert_eq!(k.n(), f.len());
    match kind {
        SolverKind::Cg { tol, max_iter } => cg_jacobi(k, f, tol, max_iter.unwrap_or(10 * k.n().max(1))),
        SolverKind::DirectDense => {
            let u = dense_cholesky(k, f)?;
            let residual = relative_residual(k, &u, f);
            Ok((u, SolveStats { iterations: 1, residual }))
        }
        SolverKind::Skyline => {
            let u = SkylineCholesky::factor(k)?.solve(f);
            let residual = relative_residual(k, &u, f);
            Ok((u, SolveStats { iterations: 1, residual }))
        }
    }
}

/// Conjugate gradients with diagonal scaling. On failure the error carries
/// the residual history sampled every 50 iterations.
pub fn cg_jacobi(k: &Csr, f: &[f64], tol: f64, max_iter: usize) -> Result<(Vec<f64>, SolveStats)> {
    let n = k.n();
    let inv_diag: Vec<f64> = k
        .diag()
        .iter()
        .enumerate()
        .map(|(row, &d)| if d > 0.0 { Ok(1.0 / d) } else { Err(Error::NotPositiveDefinite { row, pivot: d }) })
        .collect::<Result<_>>()?;
    let nf = norm(f);
    let mut u = vec![0.0; n];
    if nf == 0.0 {
        return Ok((u, SolveStats { iterations: 0, residual: 0.0 }));
    }
    let mut r = f.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(a, b)| a * b).collect();
    let mut d = z.clone();
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    let mut q = vec![0.0; n];
    let mut trace = Vec::new();
    for it in 1..=max_iter {
        k.matvec(&d, &mut q);
        let dq: f64 = d.iter().zip(&q).map(|(a, b)| a * b).sum();
        if dq <= 0.0 {
            return Err(Error::NotPositiveDefinite { row: it, pivot: dq });
        }
        let a = rz / dq;
        for i in 0..n {
            u[i] += a * d[i];
            r[i] -= a * q[i];
        }
        let res = norm(&r) / nf;
        if it % 50 == 0 {
            trace.push(res);
        }
        if res <= tol {
            // Confirm against the true residual, which drifts from the
            // recursive one on ill-conditioned systems.
            let true_res = relative_residual(k, &u, f);
            if true_res <= tol {
                return Ok((u, SolveStats { iterations: it, residual: true_res }));
            }
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            d[i] = z[i] + beta * d[i];
        }
    }
    Err(Error::CgNotConverged {
        iterations: max_iter,
        residual: relative_residual(k, &u, f),
        trace,
    })
}

pub fn dense_cholesky(k: &Csr, f: &[f64]) -> Result<Vec<f64>> {
    if k.n() > DENSE_LIMIT {
        return Err(Error::TooLarge {
            n: k.n(),
            limit: DENSE_LIMIT,
        });
    }
    let chol = k
        .to_dense()
        .cholesky()
        .ok_or(Error::NotPositiveDefinite { row: 0, pivot: f64::NAN })?;
    Ok(chol.solve(&DVector::from_column_slice(f)).as_slice().to_vec())
}

/// Reverse Cuthill-McKee order of the matrix graph: `perm[new] = old`.
/// Each component starts from a minimum-degree vertex; ties break by index.
pub fn rcm_ordering(k: &Csr) -> Vec<usize> {
    let n = k.n();
    let degree: Vec<usize> = (0..n).map(|i| k.row(i).0.len()).collect();
    let mut by_degree: Vec<usize> = (0..n).collect();
    by_degree.sort_by_key(|&i| (degree[i], i));
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut nb = Vec::new();
    for &start in &by_degree {
        if visited[start] {
            continue;
        }
        visited[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            nb.clear();
            nb.extend(k.row(v).0.iter().copied().filter(|&w| !visited[w]));
            nb.sort_by_key(|&w| (degree[w], w));
            for &w in &nb {
                visited[w] = true;
                queue.push_back(w);
            }
        }
    }
    order.reverse();
    order
}

/// Cholesky factor `L` stored row by row from each row's first nonzero
/// column to the diagonal.
#[derive(Debug, Clone)]
pub struct SkylineCholesky {
    perm: Vec<usize>,
    first: Vec<usize>,
    start: Vec<usize>,
    data: Vec<f64>,
}

impl SkylineCholesky {
    pub fn factor(k: &Csr) -> Result<SkylineCholesky> {
        let n = k.n();
        let perm = rcm_ordering(k);
        let mut inv = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let mut first: Vec<usize> = (0..n).collect();
        for (new, &old) in perm.iter().enumerate() {
            for &c in k.row(old).0 {
                first[new] = first[new].min(inv[c]);
            }
        }
        let mut start = vec![0; n + 1];
        for i in 0..n {
            start[i + 1] = start[i] + (i - first[i] + 1);
        }
        let mut data = vec![0.0; start[n]];
        for (new, &old) in perm.iter().enumerate() {
            let (c, v) = k.row(old);
            for (&j, a) in c.iter().zip(v) {
                let nj = inv[j];
                if nj <= new {
                    data[start[new] + nj - first[new]] = *a;
                }
            }
        }
        for i in 0..n {
            let fi = first[i];
            for j in fi..=i {
                let fj = first[j];
                let lo = fi.max(fj);
                let (ri, rj) = (start[i] + lo - fi, start[j] + lo - fj);
                let len = j - lo;
                let dot: f64 = if j == i {
                    data[ri..ri + len].iter().map(|x| x * x).sum()
                } else {
                    data[ri..ri + len].iter().zip(&data[rj..rj + len]).map(|(a, b)| a * b).sum()
                };
                let idx = start[i] + j - fi;
                if j == i {
                    let pivot = data[idx] - dot;
                    if !(pivot > 0.0) {
                        return Err(Error::NotPositiveDefinite { row: perm[i], pivot });
                    }
                    data[idx] = pivot.sqrt();
                } else {
                    data[idx] = (data[idx] - dot) / data[start[j + 1] - 1];
                }
            }
        }
        Ok(SkylineCholesky { perm, first, start, data })
    }

    /// Stored entries of the factor.
    pub fn envelope(&self) -> usize {
        self.data.len()
    }

    pub fn solve(&self, f: &[f64]) -> Vec<f64> {
        let n = self.perm.len();
        let mut y: Vec<f64> = self.perm.iter().map(|&o| f[o]).collect();
        for i in 0..n {
            let fi = self.first[i];
            let row = &self.data[self.start[i]..self.start[i + 1]];
            let s: f64 = row[..i - fi].iter().zip(&y[fi..i]).map(|(a, b)| a * b).sum();
            y[i] = (y[i] - s) / row[i - fi];
        }
        for i in (0..n).rev() {
            let fi = self.first[i];
            let row = &self.data[self.start[i]..self.start[i + 1]];
            y[i] /= row[i - fi];
            let yi = y[i];
            for (a, yj) in row[..i - fi].iter().zip(&mut y[fi..i]) {
                *yj -= a * yi;
            }
        }
        let mut u = vec![0.0; n];
        for (new, &old) in self.perm.iter().enumerate() {
            u[old] = y[new];
        }
        u
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// 3D Laplacian-like SPD matrix on an `m^3` lattice plus random
    /// symmetric perturbation kept diagonally dominant.
    fn fixture(m: usize, seed: u64) -> Csr {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = m * m * m;
        let id = |i: usize, j: usize, k: usize| i + m * (j + m * k);
        let mut t = Vec::new();
        for k in 0..m {
            for j in 0..m {
                for i in 0..m {
                    let a = id(i, j, k);
                    t.push((a, a, 6.5 + rng.gen::<f64>()));
                    for (di, dj, dk) in [(1, 0, 0), (0, 1, 0), (0, 0, 1)] {
                        let (ii, jj, kk) = (i + di, j + dj, k + dk);
                        if ii < m && jj < m && kk < m {
                            let b = id(ii, jj, kk);
                            let v = -1.0 + 0.1 * rng.gen::<f64>();
                            t.push((a, b, v));
                            t.push((b, a, v));
                        }
                    }
                }
            }
        }
        Csr::from_triplets(n, t)
    }

    #[test]
    fn one_unknown() {
        let k = Csr::from_triplets(1, vec![(0, 0, 2.0)]);
        for kind in [SolverKind::default(), SolverKind::DirectDense, SolverKind::Skyline] {
            let (u, _) = solve(&k, &[4.0], kind).unwrap();
            assert!((u[0] - 2.0).abs() < 1e-14);
        }
    }

    #[test]
    fn methods_agree_on_500_unknowns() {
        let k = fixture(8, 1);
        assert_eq!(k.n(), 512);
        let f: Vec<f64> = (0..k.n()).map(|i| ((i * 7919) % 13) as f64 - 6.0).collect();
        let (a, sa) = solve(&k, &f, SolverKind::default()).unwrap();
        let (b, _) = solve(&k, &f, SolverKind::DirectDense).unwrap();
        let (c, sc) = solve(&k, &f, SolverKind::Skyline).unwrap();
        assert!(sa.residual <= 1e-10 && sc.residual <= 1e-12);
        let scale = b.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        for i in 0..k.n() {
            assert!((a[i] - b[i]).abs() < 1e-8 * scale);
            assert!((c[i] - b[i]).abs() < 1e-10 * scale);
        }
    }

    #[test]
    fn rcm_is_a_permutation_and_narrows_the_band() {
        let k = fixture(6, 2);
        let mut p = rcm_ordering(&k);
        let bandwidth = |perm: &[usize]| {
            let mut inv = vec![0; perm.len()];
            for (n, &o) in perm.iter().enumerate() {
                inv[o] = n;
            }
            (0..k.n())
                .flat_map(|i| k.row(i).0.iter().map(move |&j| (i, j)))
                .map(|(i, j)| inv[i].abs_diff(inv[j]))
                .max()
                .unwrap()
        };
        let b = bandwidth(&p);
        assert!(b <= 36, "{b}");
        p.sort_unstable();
        assert_eq!(p, (0..k.n()).collect::<Vec<_>>());
    }

    #[test]
    fn indefinite_matrix_is_rejected() {
        let k = Csr::from_triplets(2, vec![(0, 0, 1.0), (0, 1, 2.0), (1, 0, 2.0), (1, 1, 1.0)]);
        assert!(matches!(SkylineCholesky::factor(&k), Err(Error::NotPositiveDefinite { .. })));
        assert!(dense_cholesky(&k, &[1.0, 1.0]).is_err());
    }

    #[test]
    fn cg_reports_trace_on_failure() {
        let k = fixture(6, 3);
        let f = vec![1.0; k.n()];
        match cg_jacobi(&k, &f, 1e-14, 3) {
            Err(Error::CgNotConverged { iterations, residual, .. }) => {
                assert_eq!(iterations, 3);
                assert!(residual > 1e-14);
            }
            other => panic!("{other:?}"),
        }
        let (u, s) = cg_jacobi(&k, &vec![0.0; k.n()], 1e-10, 10).unwrap();
        assert_eq!(s.iterations, 0);
        assert!(u.iter().all(|x| *x == 0.0));
    }

    #[test]
    fn dense_limit() {
        let k = Csr::from_triplets(DENSE_LIMIT + 1, (0..=DENSE_LIMIT).map(|i| (i, i, 1.0)).collect());
        assert!(matches!(dense_cholesky(&k, &vec![1.0; DENSE_LIMIT + 1]), Err(Error::TooLarge { .. })));
    }
}
