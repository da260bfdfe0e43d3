//! Hierarchic 1D shape functions built from integrated Legendre polynomials.
//!
//! Local index 0 and 1 are the linear end modes `(1-ξ)/2` and `(1+ξ)/2`;
//! index `m >= 2` is the integrated Legendre polynomial of degree `m`,
//! which vanishes at both ends.

/// Highest supported polynomial degree.
pub const MAX_DEGREE: usize = 4;

/// Legendre polynomials `L_0..=L_n` at `x`.
pub fn legendre(n: usize, x: f64) -> Vec<f64> {
    let mut l = Vec::with_capacity(n + 1);
    l.push(1.0);
    if n >= 1 {
        l.push(x);
    }
    for k in 2..=n {
        let kf = k as f64;
        l.push(((2.0 * kf - 1.0) * x * l[k - 1] - (kf - 1.0) * l[k - 2]) / kf);
    }
    l
}

/// Values and derivatives of the `p + 1` shape functions at `xi`.
pub fn shape_1d(p: usize, xi: f64) -> (Vec<f64>, Vec<f64>) {
    let mut n = vec![0.0; p + 1];
    let mut d = vec![0.0; p + 1];
    shape_1d_into(p, xi, &mut n, &mut d);
    (n, d)
}

/// [`shape_1d`] into caller buffers of length `p + 1`.
pub fn shape_1d_into(p: usize, xi: f64, n: &mut [f64], d: &mut [f64]) {
    n[0] = 0.5 * (1.0 - xi);
    n[1] = 0.5 * (1.0 + xi);
    d[0] = -0.5;
    d[1] = 0.5;
    if p < 2 {
        return;
    }
    let l = legendre(p, xi);
    for j in 2..=p {
        let jf = j as f64;
        n[j] = (l[j] - l[j - 2]) / (2.0 * (2.0 * jf - 1.0)).sqrt();
        d[j] = ((2.0 * jf - 1.0) / 2.0).sqrt() * l[j - 1];
    }
}

/// Tensor-product basis of a hexahedral cell evaluated at one local point.
/// Function `a = i + (p+1)(j + (p+1)k)` is `N_i(ξ) N_j(η) N_k(ζ)`.
#[derive(Debug, Clone)]
pub struct CellShape {
    pub values: Vec<f64>,
    /// Derivatives with respect to the local coordinates.
    pub grads: Vec<[f64; 3]>,
}

impl CellShape {
    pub fn eval(p: usize, xi: [f64; 3]) -> CellShape {
        let m = p + 1;
        let mut n = [[0.0; MAX_DEGREE + 1]; 3];
        let mut d = [[0.0; MAX_DEGREE + 1]; 3];
        for a in 0..3 {
            shape_1d_into(p, xi[a], &mut n[a][..m], &mut d[a][..m]);
        }
        let mut values = Vec::with_capacity(m * m * m);
        let mut grads = Vec::with_capacity(m * m * m);
        for k in 0..m {
            for j in 0..m {
                for i in 0..m {
                    values.push(n[0][i] * n[1][j] * n[2][k]);
                    grads.push([
                        d[0][i] * n[1][j] * n[2][k],
                        n[0][i] * d[1][j] * n[2][k],
                        n[0][i] * n[1][j] * d[2][k],
                    ]);
                }
            }
        }
        CellShape { values, grads }
    }
}
