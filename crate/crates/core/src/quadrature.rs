//! One-dimensional Gauss rules on [-1, 1].

use std::f64::consts::PI;

/// Legendre polynomial `P_n(x)` and its derivative, by the three-term recurrence.
pub fn legendre(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let (mut p_prev, mut p) = (1.0, x);
    for k in 2..=n {
        let kf = k as f64;
        let next = ((2.0 * kf - 1.0) * x * p - (kf - 1.0) * p_prev) / kf;
        p_prev = p;
        p = next;
    }
    let nf = n as f64;
    let dp = if (1.0 - x * x).abs() < 1e-300 {
        // endpoint limit of n (x P_n - P_{n-1}) / (x^2 - 1)
        x.powi(n as i32 + 1) * nf * (nf + 1.0) / 2.0
    } else {
        nf * (x * p - p_prev) / (x * x - 1.0)
    };
    (p, dp)
}

/// Nodes and weights of the `n`-point Gauss-Legendre rule, nodes ascending.
///
/// Exact for polynomials of degree `2n - 1`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss-Legendre rule needs at least one point");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let half = n.div_ceil(2);
    for i in 0..half {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() <= 1e-16 * x.abs().max(1.0) {
                break;
            }
        }
        let (_, dp) = legendre(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // i counts down from the largest root
        nodes[n - 1 - i] = x;
        nodes[i] = -x;
        weights[n - 1 - i] = w;
        weights[i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// Nodes and weights of the `n`-point Gauss-Lobatto rule, nodes ascending.
///
/// `n = 1` returns the midpoint rule (node 0, weight 2). For `n >= 2` the
/// endpoints are included and the rule is exact for degree `2n - 3`.
pub fn gauss_lobatto(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss-Lobatto rule needs at least one point");
    if n == 1 {
        return (vec![0.0], vec![2.0]);
    }
    let degree = n - 1;
    let df = degree as f64;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    nodes[0] = -1.0;
    nodes[degree] = 1.0;
    for i in 1..degree {
        let mut x = -(PI * i as f64 / df).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(degree, x);
            // (1 - x^2) P'' = 2 x P' - N (N + 1) P
            let ddp = (2.0 * x * dp - df * (df + 1.0) * p) / (1.0 - x * x);
            let dx = dp / ddp;
            x -= dx;
            if dx.abs() <= 1e-16 {
                break;
            }
        }
        nodes[i] = x;
    }
    for i in 0..n / 2 {
        let sym = 0.5 * (nodes[degree - i] - nodes[i]);
        nodes[i] = -sym;
        nodes[degree - i] = sym;
    }
    if n % 2 == 1 {
        nodes[degree / 2] = 0.0;
    }
    for (w, &x) in weights.iter_mut().zip(&nodes) {
        let (p, _) = legendre(degree, x);
        *w = 2.0 / (df * (df + 1.0) * p * p);
    }
    (nodes, weights)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn monomial_integral(p: usize) -> f64 {
        if p % 2 == 1 {
            0.0
        } else {
            2.0 / (p as f64 + 1.0)
        }
    }

    #[test]
    fn gauss_legendre_exactness() {
        for n in 1..=12 {
            let (x, w) = gauss_legendre(n);
            for p in 0..2 * n {
                let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(p as i32)).sum();
                assert!((q - monomial_integral(p)).abs() < 1e-13, "n={n} p={p} q={q}");
            }
        }
    }

    #[test]
    fn gauss_legendre_large_rule() {
        let (x, w) = gauss_legendre(1100);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-12);
        assert!(x.windows(2).all(|p| p[0] < p[1]));
        let second: f64 = x.iter().zip(&w).map(|(x, w)| w * x * x).sum();
        assert!((second - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn gauss_lobatto_exactness() {
        for n in 2..=10 {
            let (x, w) = gauss_lobatto(n);
            assert_eq!(x[0], -1.0);
            assert_eq!(x[n - 1], 1.0);
            for p in 0..=(2 * n - 3) {
                let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(p as i32)).sum();
                assert!((q - monomial_integral(p)).abs() < 1e-13, "n={n} p={p}");
            }
        }
    }

    #[test]
    fn lobatto_known_rules() {
        let (x, w) = gauss_lobatto(3);
        assert_eq!(x, vec![-1.0, 0.0, 1.0]);
        assert!((w[0] - 1.0 / 3.0).abs() < 1e-15 && (w[1] - 4.0 / 3.0).abs() < 1e-15);
        let (x, _) = gauss_lobatto(4);
        assert!((x[2] - 1.0 / 5f64.sqrt()).abs() < 1e-15);
    }
}
