//! Fourier pseudospectral calculus on the periodic grid.
//!
//! Mode `m` (signed, `-n/2 < m <= n/2`) carries wavenumber `k = 2*pi*m`. The
//! Nyquist mode `m = n/2` is dropped by odd-order derivatives and kept with the
//! real symbol `(i*pi*n)^k` by even-order ones, so every derivative maps real
//! fields to real fields. Products are dealiased by the 2/3 rule: modes with
//! `|m| > n/3` are truncated.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::grid::{GridField, PeriodicGrid};

/// FFT plans and wavenumbers for one grid. Immutable after construction and shareable across threads.
#[derive(Clone)]
pub struct Spectral {
    grid: PeriodicGrid,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    modes: Vec<i64>,
    cutoff: i64,
}

impl fmt::Debug for Spectral {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Spectral")
            .field("n", &self.grid.n())
            .finish()
    }
}

impl Spectral {
    pub fn new(grid: PeriodicGrid) -> Self {
        let n = grid.n();
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        let half = (n / 2) as i64;
        let modes = (0..n as i64)
            .map(|j| if j <= half { j } else { j - n as i64 })
            .collect();
        Self {
            grid,
            fwd,
            inv,
            modes,
            cutoff: n as i64 / 3,
        }
    }

    pub fn grid(&self) -> PeriodicGrid {
        self.grid
    }

    /// Signed mode number stored at FFT index `idx`.
    pub fn mode(&self, idx: usize) -> i64 {
        self.modes[idx]
    }

    pub fn wavenumber(&self, idx: usize) -> f64 {
        2.0 * PI * self.modes[idx] as f64
    }

    pub fn is_nyquist(&self, idx: usize) -> bool {
        idx == self.grid.n() / 2
    }

    /// Largest retained `|m|` under the 2/3 rule.
    pub fn cutoff(&self) -> i64 {
        self.cutoff
    }

    pub fn is_retained(&self, idx: usize) -> bool {
        self.modes[idx].abs() <= self.cutoff
    }

    /// Unnormalised forward DFT of nodal values.
    pub fn forward(&self, values: &[f64]) -> Vec<Complex64> {
        debug_assert_eq!(values.len(), self.grid.n());
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.fwd.process(&mut buf);
        buf
    }

    /// Inverse of [`Spectral::forward`], returning the real part.
    pub fn inverse(&self, mut coeffs: Vec<Complex64>) -> Vec<f64> {
        self.inv.process(&mut coeffs);
        let scale = 1.0 / self.grid.n() as f64;
        coeffs.into_iter().map(|c| c.re * scale).collect()
    }

    /// Fourier symbol of `d^order/dx^order` at FFT index `idx`.
    pub fn symbol(&self, order: u32, idx: usize) -> Complex64 {
        if order == 0 {
            return Complex64::new(1.0, 0.0);
        }
        if self.is_nyquist(idx) && order % 2 == 1 {
            return Complex64::new(0.0, 0.0);
        }
        let k = self.wavenumber(idx);
        let mag = k.powi(order as i32);
        match order % 4 {
            0 => Complex64::new(mag, 0.0),
            1 => Complex64::new(0.0, mag),
            2 => Complex64::new(-mag, 0.0),
            _ => Complex64::new(0.0, -mag),
        }
    }

    /// Multiplies every coefficient by `mult(idx)` and transforms back.
    pub fn apply(&self, f: &GridField, mult: impl Fn(usize) -> Complex64) -> GridField {
        let mut c = self.forward(f.values());
        for (idx, ci) in c.iter_mut().enumerate() {
            *ci *= mult(idx);
        }
        GridField::from_raw(self.grid, self.inverse(c))
    }

    /// Spectral derivative of order `order` in 1..=6.
    pub fn deriv(&self, f: &GridField, order: u32) -> Result<GridField> {
        check_order(order)?;
        Ok(self.apply(f, |idx| self.symbol(order, idx)))
    }

    /// Several derivatives sharing one forward transform. Order 0 is allowed here.
    pub fn derivs(&self, f: &GridField, orders: &[u32]) -> Vec<GridField> {
        let c = self.forward(f.values());
        orders
            .iter()
            .map(|&order| {
                let d: Vec<Complex64> = c
                    .iter()
                    .enumerate()
                    .map(|(idx, &ci)| ci * self.symbol(order, idx))
                    .collect();
                GridField::from_raw(self.grid, self.inverse(d))
            })
            .collect()
    }

    /// 2/3-rule truncation.
    pub fn dealias(&self, f: &GridField) -> GridField {
        self.apply(f, |idx| {
            if self.is_retained(idx) {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    /// Conservative divergence `dG/dx`; its mean is removed so the integral vanishes to rounding.
    pub fn flux_divergence(&self, g: &GridField) -> GridField {
        let d = self.apply(g, |idx| self.symbol(1, idx));
        let mean = mean_integral(&d);
        d.map(|v| v - mean)
    }

    /// Dealiased flux followed by its divergence.
    pub fn dealiased_divergence(&self, g: &GridField) -> GridField {
        let d = self.apply(g, |idx| {
            if self.is_retained(idx) {
                self.symbol(1, idx)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        let mean = mean_integral(&d);
        d.map(|v| v - mean)
    }
}

fn check_order(order: u32) -> Result<()> {
    if (1..=6).contains(&order) {
        Ok(())
    } else {
        Err(Error::DerivativeOrder(order))
    }
}

/// Spectral derivative of the trigonometric interpolant of `f`.
pub fn deriv_x(f: &GridField, order: u32) -> Result<GridField> {
    check_order(order)?;
    Spectral::new(f.grid()).deriv(f, order)
}

/// Periodic trapezoid rule `dx * sum(f_j)` for the integral over the unit cell.
pub fn mean_integral(f: &GridField) -> f64 {
    f.grid().dx() * f.values().iter().sum::<f64>()
}

/// `dG/dx` in conservation form.
pub fn flux_divergence(g: &GridField) -> GridField {
    Spectral::new(g.grid()).flux_divergence(g)
}
