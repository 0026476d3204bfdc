//! Gauss–Legendre rules on the unit interval.

use std::f64::consts::PI;

use crate::error::{Error, Result};

pub const DEFAULT_ORDER: usize = 16;

/// Gauss–Legendre nodes and weights mapped to `[0, 1]`, nodes ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// `q`-point rule, exact for polynomials of degree `2q - 1`.
    pub fn new(q: usize) -> Result<Self> {
        if q < 2 {
            return Err(Error::QuadratureOrder(q));
        }
        let mut nodes = vec![0.0; q];
        let mut weights = vec![0.0; q];
        let qf = q as f64;
        for i in 0..q.div_ceil(2) {
            // Newton on P_q from the Tricomi initial guess.
            let mut z = (PI * (i as f64 + 0.75) / (qf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(q, z);
                dp = d;
                let dz = p / d;
                z -= dz;
                if dz.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(q, z);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - z * z) * dp * dp);
            // z is descending in i; map [-1,1] -> [0,1].
            nodes[i] = 0.5 * (1.0 - z);
            nodes[q - 1 - i] = 0.5 * (1.0 + z);
            weights[i] = 0.5 * w;
            weights[q - 1 - i] = 0.5 * w;
        }
        Ok(Self { nodes, weights })
    }

    pub fn default_rule() -> Self {
        Self::new(DEFAULT_ORDER).expect("default order is valid")
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Weighted sum of samples taken at [`GaussLegendre::nodes`].
    pub fn integrate(&self, samples: &[f64]) -> f64 {
        assert_eq!(samples.len(), self.len(), "one sample per quadrature node");
        self.weights.iter().zip(samples).map(|(w, s)| w * s).sum()
    }

    pub fn integrate_fn(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&y, &w)| w * f(y))
            .sum()
    }

    /// Integral of `f` over `[a, b]` by affine remap of the rule.
    pub fn integrate_on(&self, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
        let len = b - a;
        len * self.integrate_fn(|s| f(a + len * s))
    }

    /// Differentiation matrix of the interpolating polynomial through the nodes:
    /// `(D u)_i = sum_j D[i][j] u_j` is the derivative at node `i`.
    pub fn diff_matrix(&self) -> Vec<Vec<f64>> {
        lagrange_diff_matrix(&self.nodes)
    }
}

/// Barycentric differentiation matrix for polynomial interpolation through
/// distinct nodes.
pub fn lagrange_diff_matrix(y: &[f64]) -> Vec<Vec<f64>> {
    let q = y.len();
    let bary: Vec<f64> = (0..q)
        .map(|j| {
            1.0 / (0..q)
                .filter(|&k| k != j)
                .map(|k| y[j] - y[k])
                .product::<f64>()
        })
        .collect();
    let mut d = vec![vec![0.0; q]; q];
    for i in 0..q {
        let mut diag = 0.0;
        for j in 0..q {
            if i != j {
                d[i][j] = bary[j] / bary[i] / (y[i] - y[j]);
                diag -= d[i][j];
            }
        }
        d[i][i] = diag;
    }
    d
}

/// `P_q(z)` and `P_q'(z)` by the three-term recurrence.
fn legendre_with_derivative(q: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    for k in 2..=q {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = q as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Gauss–Legendre approximation of the integral over `[0, 1]` from samples at the
/// `samples.len()`-point nodes.
pub fn quad_unit_interval(samples: &[f64]) -> Result<f64> {
    Ok(GaussLegendre::new(samples.len())?.integrate(samples))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_and_parabola() {
        let rule = GaussLegendre::new(4).unwrap();
        let ones: Vec<f64> = rule.nodes().iter().map(|_| 1.0).collect();
        assert!((quad_unit_interval(&ones).unwrap() - 1.0).abs() < 1e-15);
        let par: Vec<f64> = rule.nodes().iter().map(|y| y * (y - 1.0)).collect();
        assert!((quad_unit_interval(&par).unwrap() + 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn exponential_against_closed_form() {
        let rule = GaussLegendre::new(8).unwrap();
        let v = rule.integrate_fn(f64::exp);
        assert!((v - (std::f64::consts::E - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn exact_to_degree_2q_minus_1() {
        for q in 2..=20 {
            let rule = GaussLegendre::new(q).unwrap();
            let top = 2 * q - 1;
            let v = rule.integrate_fn(|y| y.powi(top as i32));
            assert!((v - 1.0 / (top as f64 + 1.0)).abs() < 1e-14, "q = {q}");
            assert!(rule.nodes().windows(2).all(|w| w[1] > w[0]));
            assert!(rule.nodes()[0] > 0.0 && rule.nodes()[q - 1] < 1.0);
            assert!((rule.weights().iter().sum::<f64>() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn rejects_single_node() {
        assert!(matches!(
            GaussLegendre::new(1),
            Err(Error::QuadratureOrder(1))
        ));
        assert!(quad_unit_interval(&[1.0]).is_err());
    }

    #[test]
    fn remapped_interval() {
        let rule = GaussLegendre::new(6).unwrap();
        let v = rule.integrate_on(0.25, 1.0, |z| z * z);
        assert!((v - (1.0 - 0.25f64.powi(3)) / 3.0).abs() < 1e-15);
    }

    #[test]
    fn differentiation_matrix_is_exact_for_low_degree() {
        let rule = GaussLegendre::new(8).unwrap();
        let d = rule.diff_matrix();
        let u: Vec<f64> = rule
            .nodes()
            .iter()
            .map(|y| y.powi(5) - 2.0 * y * y)
            .collect();
        for (i, row) in d.iter().enumerate() {
            let y = rule.nodes()[i];
            let du: f64 = row.iter().zip(&u).map(|(a, b)| a * b).sum();
            assert!((du - (5.0 * y.powi(4) - 4.0 * y)).abs() < 1e-11);
        }
    }
}
