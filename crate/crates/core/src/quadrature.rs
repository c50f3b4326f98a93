//! Gauss–Legendre rules on `[0, 1]` and their tensor products.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::math::cos;

/// Nodes and weights of a Gauss–Legendre rule mapped to `[0, 1]`.
#[derive(Clone, Debug)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// `n`-point rule on `[0, 1]`; exact for polynomials of degree `2n − 1`.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        let nf = n as f64;
        for i in 0..n {
            // Newton from the Tricomi initial guess, roots in decreasing order
            let mut x = cos(PI * (i as f64 + 0.75) / (nf + 0.5));
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() <= 1e-16 * (1.0 + x.abs()) {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes.push(0.5 * (1.0 - x));
            weights.push(0.5 * w);
        }
        GaussLegendre { nodes, weights }
    }

    /// `nodes`-point rule repeated on `panels` equal subintervals of `[0, 1]`.
    pub fn composite(panels: usize, nodes: usize) -> Self {
        assert!(panels >= 1, "composite rule needs at least one panel");
        let base = GaussLegendre::new(nodes);
        let h = 1.0 / panels as f64;
        let mut out = GaussLegendre {
            nodes: Vec::with_capacity(panels * nodes),
            weights: Vec::with_capacity(panels * nodes),
        };
        for q in 0..panels {
            let left = q as f64 * h;
            for (&x, &w) in base.nodes.iter().zip(&base.weights) {
                out.nodes.push(left + h * x);
                out.weights.push(h * w);
            }
        }
        out
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }

    /// Tensor-product integral over `[0, 1]²`.
    pub fn integrate_2d(&self, f: impl Fn(f64, f64) -> f64) -> f64 {
        let mut total = 0.0;
        for (&x, &wx) in self.nodes.iter().zip(&self.weights) {
            let mut inner = 0.0;
            for (&y, &wy) in self.nodes.iter().zip(&self.weights) {
                inner += wy * f(x, y);
            }
            total += wx * inner;
        }
        total
    }
}

/// `(P_n(x), P_n'(x))` on `[-1, 1]` by the three-term recurrence.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let d = if (1.0 - x * x).abs() < 1e-300 {
        // P_n'(±1) = (±1)^(n+1) n(n+1)/2
        let sign = if x < 0.0 && n.is_multiple_of(2) { -1.0 } else { 1.0 };
        sign * 0.5 * nf * (nf + 1.0)
    } else {
        nf * (x * p1 - p0) / (x * x - 1.0)
    };
    (p1, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_polynomials_exactly() {
        let gl = GaussLegendre::new(5);
        let v = gl.integrate(|x| x.powi(9));
        assert!((v - 0.1).abs() < 1e-14);
        assert!((gl.weights.iter().sum::<f64>() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn large_rule_is_accurate() {
        let gl = GaussLegendre::new(2048);
        let v = gl.integrate(|x| (2.0 * PI * 37.0 * x).cos().powi(2));
        assert!((v - 0.5).abs() < 1e-12);
        assert!(gl.nodes.iter().all(|&x| x > 0.0 && x < 1.0));
    }

    #[test]
    fn tensor_rule() {
        let gl = GaussLegendre::new(8);
        let v = gl.integrate_2d(|x, y| x * x * y);
        assert!((v - 1.0 / 6.0).abs() < 1e-14);
    }
}
