//! Linear solve for the film velocity `w = dh/dt` when the mixed-derivative term is active:
//!
//! ```text
//! w + d/dx( h^3 (visco w_xxx - stiff w_xxxxx) ) = rhs
//! ```
//!
//! `stiff = 0` is the instantaneous relation; `stiff = tau beta / 12` appears in the
//! implicit time step. Solved with right-preconditioned restarted GMRES; the
//! preconditioner is the same operator with `h^3` replaced by its mean.

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::GridField;
use crate::params::ModelParams;
use crate::spectral::{mean_integral, Spectral};

const RESTART: usize = 60;

/// The assembled variable-coefficient operator for one `h`.
pub struct WdotOperator<'a> {
    spectral: &'a Spectral,
    h3: Vec<f64>,
    /// `i k (visco (ik)^3 - stiff (ik)^5)` on retained modes.
    inner: Vec<Complex64>,
    outer: Vec<Complex64>,
    precond: Vec<f64>,
}

impl<'a> WdotOperator<'a> {
    pub fn new(spectral: &'a Spectral, h: &GridField, visco: f64, stiff: f64) -> Self {
        let n = spectral.grid().n();
        let h3: Vec<f64> = h.values().iter().map(|v| v * v * v).collect();
        let h3_mean = h3.iter().sum::<f64>() / n as f64;
        let mut inner = Vec::with_capacity(n);
        let mut outer = Vec::with_capacity(n);
        let mut precond = Vec::with_capacity(n);
        for idx in 0..n {
            let keep = spectral.is_retained(idx);
            inner.push(spectral.symbol(3, idx) * visco - spectral.symbol(5, idx) * stiff);
            outer.push(if keep {
                spectral.symbol(1, idx)
            } else {
                Complex64::new(0.0, 0.0)
            });
            let k = spectral.wavenumber(idx);
            precond.push(if keep {
                1.0 + h3_mean * (visco * k.powi(4) + stiff * k.powi(6))
            } else {
                1.0
            });
        }
        Self {
            spectral,
            h3,
            inner,
            outer,
            precond,
        }
    }

    pub fn apply(&self, w: &[f64]) -> Vec<f64> {
        let s = self.spectral;
        let mut c = s.forward(w);
        for (ci, m) in c.iter_mut().zip(&self.inner) {
            *ci *= m;
        }
        let g: Vec<f64> = s
            .inverse(c)
            .iter()
            .zip(&self.h3)
            .map(|(a, b)| a * b)
            .collect();
        let mut c = s.forward(&g);
        for (ci, m) in c.iter_mut().zip(&self.outer) {
            *ci *= m;
        }
        s.inverse(c).iter().zip(w).map(|(d, w)| w + d).collect()
    }

    pub fn precondition(&self, v: &[f64]) -> Vec<f64> {
        let mut c = self.spectral.forward(v);
        for (ci, p) in c.iter_mut().zip(&self.precond) {
            *ci /= p;
        }
        self.spectral.inverse(c)
    }
}

/// Result of one inner solve.
#[derive(Debug, Clone)]
pub struct WdotSolve {
    pub w: GridField,
    pub iterations: usize,
    pub residual: f64,
}

/// Solves the rate equation for `w` to relative residual `tol`.
///
/// The exact solution has zero mean (the operator preserves the mean and the
/// right side is a divergence), so the mean is projected out afterwards.
#[allow(clippy::too_many_arguments)]
pub fn solve_wdot(
    spectral: &Spectral,
    h: &GridField,
    rhs: &GridField,
    visco: f64,
    stiff: f64,
    tol: f64,
    max_iters: usize,
    guess: Option<&GridField>,
) -> Result<WdotSolve> {
    if visco == 0.0 && stiff == 0.0 {
        return Ok(WdotSolve {
            w: rhs.clone(),
            iterations: 0,
            residual: 0.0,
        });
    }
    if h.min() <= 0.0 {
        let (node, value) = h.argmin();
        return Err(Error::InvalidParam(format!(
            "rate solve needs positive h; h = {value} at node {node}"
        )));
    }
    let op = WdotOperator::new(spectral, h, visco, stiff);
    let x0 = guess.map(|g| g.values());
    let (x, iterations, residual) = gmres(
        |v| op.apply(v),
        |v| op.precondition(v),
        rhs.values(),
        x0,
        tol,
        max_iters,
    )?;
    let w = GridField::from_raw(h.grid(), x);
    let mean = mean_integral(&w);
    Ok(WdotSolve {
        w: w.map(|v| v - mean),
        iterations,
        residual,
    })
}

/// Instantaneous rate relation `(I + (delta/12) d/dx(h^3 d^3/dx^3)) w = rhs`.
///
/// With the viscoelastic term inactive the operator is the identity.
pub fn implicit_wdot_solve(
    h: &GridField,
    rhs: &GridField,
    params: &ModelParams,
) -> Result<GridField> {
    let spectral = Spectral::new(h.grid());
    solve_wdot(
        &spectral,
        h,
        rhs,
        params.chi_delta() / 12.0,
        0.0,
        params.newton_tol(),
        params.max_inner_iters(),
        None,
    )
    .map(|s| s.w)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Right-preconditioned restarted GMRES. Returns `(x, iterations, relative residual)`.
fn gmres(
    apply: impl Fn(&[f64]) -> Vec<f64>,
    precond: impl Fn(&[f64]) -> Vec<f64>,
    b: &[f64],
    x0: Option<&[f64]>,
    tol: f64,
    max_iters: usize,
) -> Result<(Vec<f64>, usize, f64)> {
    let n = b.len();
    let bnorm = norm(b);
    if bnorm == 0.0 {
        return Ok((vec![0.0; n], 0, 0.0));
    }
    let mut x = x0.map_or_else(|| vec![0.0; n], <[f64]>::to_vec);
    let mut total = 0;
    let mut rel = f64::INFINITY;
    loop {
        let ax = apply(&x);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
        let beta = norm(&r);
        rel = if beta.is_finite() { beta / bnorm } else { rel };
        if !beta.is_finite() {
            return Err(Error::InnerDivergence {
                iters: total,
                residual: beta,
            });
        }
        if rel <= tol {
            return Ok((x, total, rel));
        }
        if total >= max_iters {
            return Err(Error::InnerDivergence {
                iters: total,
                residual: rel,
            });
        }

        let m = RESTART.min(max_iters - total).min(n);
        let mut v: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
        let mut z: Vec<Vec<f64>> = Vec::with_capacity(m);
        let mut hess = vec![vec![0.0; m]; m + 1];
        let (mut cs, mut sn) = (vec![0.0; m], vec![0.0; m]);
        let mut g = vec![0.0; m + 1];
        g[0] = beta;
        v.push(r.iter().map(|ri| ri / beta).collect());
        let mut k_used = 0;
        for j in 0..m {
            let zj = precond(&v[j]);
            let mut wv = apply(&zj);
            z.push(zj);
            for i in 0..=j {
                hess[i][j] = dot(&wv, &v[i]);
                for (a, b) in wv.iter_mut().zip(&v[i]) {
                    *a -= hess[i][j] * b;
                }
            }
            hess[j + 1][j] = norm(&wv);
            for i in 0..j {
                let t = cs[i] * hess[i][j] + sn[i] * hess[i + 1][j];
                hess[i + 1][j] = -sn[i] * hess[i][j] + cs[i] * hess[i + 1][j];
                hess[i][j] = t;
            }
            let denom = hess[j][j].hypot(hess[j + 1][j]);
            if denom == 0.0 || !denom.is_finite() {
                return Err(Error::InnerDivergence {
                    iters: total,
                    residual: rel,
                });
            }
            cs[j] = hess[j][j] / denom;
            sn[j] = hess[j + 1][j] / denom;
            let next = hess[j + 1][j];
            hess[j][j] = denom;
            hess[j + 1][j] = 0.0;
            g[j + 1] = -sn[j] * g[j];
            g[j] *= cs[j];
            total += 1;
            k_used = j + 1;
            if g[j + 1].abs() / bnorm <= tol * 0.5 || next == 0.0 {
                break;
            }
            v.push(wv.iter().map(|a| a / next).collect());
        }
        // back substitution on the upper-triangular system
        let mut y = vec![0.0; k_used];
        for i in (0..k_used).rev() {
            let s: f64 = (i + 1..k_used).map(|l| hess[i][l] * y[l]).sum();
            y[i] = (g[i] - s) / hess[i][i];
        }
        for (yi, zi) in y.iter().zip(&z) {
            for (a, b) in x.iter_mut().zip(zi) {
                *a += yi * b;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::PeriodicGrid;
    use crate::params::{validate_params, RawParams};
    use std::f64::consts::PI;

    #[test]
    fn inactive_term_is_identity() {
        let g = PeriodicGrid::new(16).unwrap();
        let rhs = g.sample(|x| (2.0 * PI * x).sin());
        let h = g.constant(1.0);
        let p = validate_params(RawParams::new(12.0, 0.0, 1.0)).unwrap();
        let w = implicit_wdot_solve(&h, &rhs, &p).unwrap();
        assert_eq!(w, rhs);
        let s = Spectral::new(g);
        let w = solve_wdot(&s, &h, &rhs, 0.0, 0.0, 1e-12, 10, None).unwrap();
        assert_eq!(w.w, rhs);
    }

    #[test]
    fn flat_film_fourier_symbol() {
        let g = PeriodicGrid::new(32).unwrap();
        let p = validate_params(RawParams::new(12.0, 12.0, 3.0)).unwrap();
        let rhs = g.sample(|x| (2.0 * PI * x).sin());
        let w = implicit_wdot_solve(&g.constant(1.0), &rhs, &p).unwrap();
        let den = 1.0 + (2.0 * PI).powi(4);
        let want = rhs.scale(1.0 / den);
        assert!(w.sub(&want).max_abs() < 1e-12);
    }

    #[test]
    fn operator_residual_is_small_on_variable_film() {
        let g = PeriodicGrid::new(64).unwrap();
        let s = Spectral::new(g);
        let h =
            s.dealias(&g.sample(|x| 1.0 + 0.4 * (2.0 * PI * x).sin() + 0.1 * (6.0 * PI * x).cos()));
        let rhs = s.dealias(&g.sample(|x| (4.0 * PI * x).cos() - 0.3 * (2.0 * PI * x).sin()));
        let sol = solve_wdot(&s, &h, &rhs, 1.0, 1e-4, 1e-11, 300, None).unwrap();
        let op = WdotOperator::new(&s, &h, 1.0, 1e-4);
        let back = GridField::from_raw(g, op.apply(sol.w.values()));
        assert!(back.sub(&rhs).max_abs() < 1e-9 * rhs.max_abs().max(1.0));
        assert!(sol.iterations < 100);
    }

    #[test]
    fn iteration_budget_is_enforced() {
        let g = PeriodicGrid::new(64).unwrap();
        let s = Spectral::new(g);
        let h = g.sample(|x| 1.0 + 0.8 * (2.0 * PI * x).sin());
        let rhs = s.dealias(&g.sample(|x| (8.0 * PI * x).cos()));
        let e = solve_wdot(&s, &h, &rhs, 1.0, 1.0, 1e-15, 1, None).unwrap_err();
        assert!(matches!(e, Error::InnerDivergence { .. }));
    }
}
