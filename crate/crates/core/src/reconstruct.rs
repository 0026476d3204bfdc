//! Limit fluid fields on the reference strip and the `eps`-family of approximate
//! solutions built from them.
//!
//! ```text
//! v1(x, y) = (1/2) y (y - 1) h^2 p_x + h^2 F(x, y)       v2 = 0
//! int_0^1 v1 dy = -(1/12) h^2 p_x + h^2 Phi
//! ```

use crate::error::{Error, Result};
use crate::forcing::{ForcingEval, ForcingSpec};
use crate::grid::{GridField, PeriodicGrid};
use crate::quadrature::GaussLegendre;
use crate::spectral::Spectral;

/// Samples on `x`-nodes times a set of `y`-nodes in `[0, 1]`, stored x-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PlaneField {
    grid: PeriodicGrid,
    y: Vec<f64>,
    values: Vec<f64>,
}

impl PlaneField {
    pub fn new(grid: PeriodicGrid, y: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let expected = grid.n() * y.len();
        if values.len() != expected {
            return Err(Error::LengthMismatch {
                expected,
                got: values.len(),
            });
        }
        if let Some(&bad) = y.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::OutOfStrip(bad));
        }
        if let Some(node) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { node });
        }
        Ok(Self { grid, y, values })
    }

    pub fn from_fn(grid: PeriodicGrid, y: &[f64], f: impl Fn(usize, f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.n() * y.len());
        for j in 0..grid.n() {
            let x = grid.node(j);
            values.extend(y.iter().map(|&yq| f(j, x, yq)));
        }
        Self {
            grid,
            y: y.to_vec(),
            values,
        }
    }

    pub fn zeros(grid: PeriodicGrid, y: &[f64]) -> Self {
        Self::from_fn(grid, y, |_, _, _| 0.0)
    }

    pub fn grid(&self) -> PeriodicGrid {
        self.grid
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, j: usize, q: usize) -> f64 {
        self.values[j * self.y.len() + q]
    }

    /// Values at `x_j` for every `y`-node.
    pub fn column(&self, j: usize) -> &[f64] {
        let q = self.y.len();
        &self.values[j * q..(j + 1) * q]
    }

    /// Values at the `q`-th `y`-node along `x`.
    pub fn row(&self, q: usize) -> GridField {
        let ny = self.y.len();
        GridField::from_raw(
            self.grid,
            (0..self.grid.n())
                .map(|j| self.values[j * ny + q])
                .collect(),
        )
    }

    pub fn scale(&self, a: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| v * a).collect(),
            ..self.clone()
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Spectral `x`-derivative of every row.
    pub fn deriv_x(&self, spectral: &Spectral) -> Self {
        let ny = self.y.len();
        let mut out = vec![0.0; self.values.len()];
        for q in 0..ny {
            let d = spectral.apply(&self.row(q), |idx| spectral.symbol(1, idx));
            for (j, v) in d.values().iter().enumerate() {
                out[j * ny + q] = *v;
            }
        }
        Self {
            values: out,
            ..self.clone()
        }
    }
}

/// Limit pressure and horizontal velocity; the vertical velocity vanishes identically.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitFields {
    pub p: GridField,
    pub v1: PlaneField,
}

impl LimitFields {
    pub fn v2_is_zero(&self) -> bool {
        true
    }
}

/// `v1 = (1/2) y (y-1) h^2 p_x + h^2 F(x, y, t)` on `x`-nodes times `y_nodes`.
pub fn limit_velocity(
    h: &GridField,
    p: &GridField,
    spec: &ForcingSpec,
    t: f64,
    y_nodes: &[f64],
) -> Result<PlaneField> {
    limit_velocity_with(&Spectral::new(h.grid()), h, p, spec, t, y_nodes)
}

pub fn limit_velocity_with(
    spectral: &Spectral,
    h: &GridField,
    p: &GridField,
    spec: &ForcingSpec,
    t: f64,
    y_nodes: &[f64],
) -> Result<PlaneField> {
    if let Some(&bad) = y_nodes.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::OutOfStrip(bad));
    }
    let grid = h.grid();
    let px = spectral.deriv(p, 1)?;
    let ev = ForcingEval::new(spec, GaussLegendre::default_rule());
    let mut values = Vec::with_capacity(grid.n() * y_nodes.len());
    for j in 0..grid.n() {
        let (hj, pxj) = (h.values()[j], px.values()[j]);
        let h2 = hj * hj;
        let f = ev.profile_column(grid.node(j), y_nodes, t)?;
        values.extend(
            y_nodes
                .iter()
                .zip(&f)
                .map(|(&y, &fq)| 0.5 * y * (y - 1.0) * h2 * pxj + h2 * fq),
        );
    }
    PlaneField::new(grid, y_nodes.to_vec(), values)
}

/// `dv1/dy = (y - 1/2) h^2 p_x + h^2 dF/dy`, analytic in `y`.
pub fn limit_velocity_dy(
    spectral: &Spectral,
    h: &GridField,
    p: &GridField,
    spec: &ForcingSpec,
    t: f64,
    y_nodes: &[f64],
) -> Result<PlaneField> {
    let grid = h.grid();
    let px = spectral.deriv(p, 1)?;
    let ev = ForcingEval::new(spec, GaussLegendre::default_rule());
    let mut values = Vec::with_capacity(grid.n() * y_nodes.len());
    for j in 0..grid.n() {
        let (hj, pxj) = (h.values()[j], px.values()[j]);
        let h2 = hj * hj;
        for &y in y_nodes {
            values.push((y - 0.5) * h2 * pxj + h2 * ev.profile_dy(grid.node(j), y, t)?);
        }
    }
    PlaneField::new(grid, y_nodes.to_vec(), values)
}

/// Largest `|v1|` on the walls `y = 0` and `y = 1`.
pub fn no_slip_defect(h: &GridField, p: &GridField, spec: &ForcingSpec, t: f64) -> Result<f64> {
    Ok(limit_velocity(h, p, spec, t, &[0.0, 1.0])?.max_abs())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DepthAverageReport {
    /// `max_j |int_0^1 v1 dy + (1/12) h^2 p_x - h^2 Phi|`
    pub depth_average: f64,
    /// `max_j |dh/dt + d/dx(h vbar)|` when a rate was supplied.
    pub mass_flux: Option<f64>,
}

/// Checks the depth-averaged velocity against the lubrication flux. `v1` must be
/// sampled on Gauss–Legendre nodes.
pub fn depth_average_check(
    v1: &PlaneField,
    h: &GridField,
    p: &GridField,
    phi: &GridField,
    dhdt: Option<&GridField>,
) -> Result<DepthAverageReport> {
    let rule = GaussLegendre::new(v1.y().len())?;
    let off = rule
        .nodes()
        .iter()
        .zip(v1.y())
        .fold(0.0, |m: f64, (a, b)| m.max((a - b).abs()));
    if off > 1e-14 {
        return Err(Error::InvalidParam(
            "depth average needs v1 on Gauss-Legendre nodes".into(),
        ));
    }
    let spectral = Spectral::new(h.grid());
    let px = spectral.deriv(p, 1)?;
    let n = h.len();
    let mut vbar = Vec::with_capacity(n);
    let mut worst: f64 = 0.0;
    for j in 0..n {
        let avg = rule.integrate(v1.column(j));
        let h2 = h.values()[j] * h.values()[j];
        let want = -h2 * px.values()[j] / 12.0 + h2 * phi.values()[j];
        worst = worst.max((avg - want).abs());
        vbar.push(avg);
    }
    let mass_flux = match dhdt {
        Some(w) => {
            let q = GridField::new(h.grid(), vbar)?.mul(h);
            let div = spectral.dealiased_divergence(&q);
            Some(w.add(&div).max_abs())
        }
        None => None,
    };
    Ok(DepthAverageReport {
        depth_average: worst,
        mass_flux,
    })
}

/// Member `eps` of the approximate family.
#[derive(Debug, Clone, PartialEq)]
pub struct ApproxFSI {
    pub eps: f64,
    /// `eps h`
    pub eta: GridField,
    pub p_eps: GridField,
    /// `eps^2 v1`
    pub v1_eps: PlaneField,
}

impl ApproxFSI {
    /// The vertical velocity of the family is zero by construction.
    pub fn v2_is_zero(&self) -> bool {
        true
    }
}

pub fn fsi_family(h: &GridField, fields: &LimitFields, eps: f64) -> Result<ApproxFSI> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::EpsOutOfRange(eps));
    }
    Ok(ApproxFSI {
        eps,
        eta: h.scale(eps),
        p_eps: fields.p.clone(),
        v1_eps: fields.v1.scale(eps * eps),
    })
}
