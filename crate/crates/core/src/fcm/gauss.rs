//! Gauss-Legendre rules on `[-1, 1]` and collapsed rules on triangles.

use crate::fcm::basis::legendre;
use crate::geom::Point;

/// Nodes and weights of the `n`-point Gauss-Legendre rule, nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    // L_n' from (1 - t^2) L_n' = n (L_{n-1} - t L_n).
    let eval = |t: f64| {
        let l = legendre(n, t);
        (l[n], n as f64 * (l[n - 1] - t * l[n]) / (1.0 - t * t))
    };
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut t = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (l, dl) = eval(t);
            let step = l / dl;
            t -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        let (_, dl) = eval(t);
        x[n - 1 - i] = t;
        w[n - 1 - i] = 2.0 / ((1.0 - t * t) * dl * dl);
    }
    (x, w)
}

/// Points and weights integrating over triangle `abc`, exact for
/// polynomials of total degree `2n - 2`.
pub fn triangle_rule(a: &Point, b: &Point, c: &Point, n: usize) -> Vec<(Point, f64)> {
    let (x, w) = gauss_legendre(n);
    let area2 = (b - a).cross(&(c - a)).norm();
    let mut out = Vec::with_capacity(n * n);
    for (i, &xi) in x.iter().enumerate() {
        let u = 0.5 * (xi + 1.0);
        for (j, &eta) in x.iter().enumerate() {
            let v = 0.5 * (eta + 1.0) * (1.0 - u);
            let weight = 0.25 * w[i] * w[j] * (1.0 - u) * area2;
            out.push((a + (b - a) * u + (c - a) * v, weight));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_two_and_are_exact() {
        for n in 1..=10 {
            let (x, w) = gauss_legendre(n);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
            for deg in 0..2 * n {
                let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!((q - exact).abs() < 1e-14, "n={n} deg={deg}");
            }
            assert!(x.windows(2).all(|p| p[0] < p[1]));
        }
    }

    #[test]
    fn triangle_rule_integrates_monomials() {
        let (a, b, c) = (Point::origin(), Point::new(1.0, 0.0, 0.0), Point::new(0.0, 1.0, 0.0));
        // Integral of x^i y^j over the unit triangle is i! j! / (i+j+2)!.
        let fact = |n: u32| (1..=n).map(f64::from).product::<f64>();
        let n = 4;
        for i in 0..=3u32 {
            for j in 0..=(6 - i).min(3) {
                let q: f64 = triangle_rule(&a, &b, &c, n)
                    .iter()
                    .map(|(p, w)| w * p.x.powi(i as i32) * p.y.powi(j as i32))
                    .sum();
                assert!((q - fact(i) * fact(j) / fact(i + j + 2)).abs() < 1e-14);
            }
        }
        let skew = triangle_rule(&Point::new(0., 0., 1.), &Point::new(2., 0., 1.), &Point::new(0., 0., 3.), 1);
        assert!((skew[0].1 - 2.0).abs() < 1e-14);
    }
}
