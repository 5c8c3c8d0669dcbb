//! Small numerical building blocks: Gauss–Legendre rules, periodic
//! trapezoid nodes and Richardson-extrapolated central differences.

use std::f64::consts::{PI, TAU};

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n > 0, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        GaussLegendre { nodes, weights }
    }

    /// ∫_a^b f.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(mid + half * x))
            .sum::<f64>()
            * half
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Uniform nodes `2πk/n`, `k = 0..n`, on one period.
pub fn periodic_nodes(n: usize) -> Vec<f64> {
    (0..n).map(|k| TAU * k as f64 / n as f64).collect()
}

/// Central difference with one Richardson step: `(4 D(h/2) - D(h)) / 3`.
pub fn richardson_derivative<F: FnMut(f64) -> f64>(mut f: F, x: f64, h: f64) -> f64 {
    let d1 = (f(x + h) - f(x - h)) / (2.0 * h);
    let d2 = (f(x + 0.5 * h) - f(x - 0.5 * h)) / h;
    (4.0 * d2 - d1) / 3.0
}

/// Step used for finite differences of a coordinate of size `x`.
pub fn fd_step(x: f64, rel: f64) -> f64 {
    rel * x.abs().max(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let gl = GaussLegendre::new(8);
        // degree 15 is the exactness limit for 8 nodes
        let v = gl.integrate(-1.0, 2.0, |x| x.powi(15) - 3.0 * x.powi(4));
        let exact = (2f64.powi(16) - 1.0) / 16.0 - 3.0 * (32.0 + 1.0) / 5.0;
        assert!((v - exact).abs() < 1e-10 * exact.abs());
        let wsum: f64 = gl.weights.iter().sum();
        assert!((wsum - 2.0).abs() < 1e-14);
    }

    #[test]
    fn gauss_legendre_smooth_integrand() {
        let gl = GaussLegendre::new(40);
        let v = gl.integrate(0.0, 3.0, f64::exp);
        assert!((v - (3f64.exp() - 1.0)).abs() < 1e-13);
        // odd rules have a node at the midpoint
        let gl = GaussLegendre::new(7);
        assert!(gl.nodes[3].abs() < 1e-15);
    }

    #[test]
    fn richardson_is_fourth_order() {
        let d = richardson_derivative(f64::sin, 0.7, 1e-2);
        assert!((d - 0.7f64.cos()).abs() < 1e-10);
    }
}
