//! Weak-form residual harness.
//!
//! Each term of the rescaled weak formulation is evaluated on reconstructed
//! fields, written in the rescaled unknowns `eta/eps = h`, `v/eps^2 = v1` so that
//! every power of `eps` sits in a prefactor or in the rescaled gradient
//!
//! ```text
//! grad_eps f = ( f_x - y (h_x / h) f_y ,  f_y / (eps h) )
//! ```
//!
//! Integrals are tensor quadratures: periodic trapezoid in `x`, Gauss–Legendre
//! in `y` (weight `h`, the Jacobian of the strip map), composite Simpson in `t`.
//! Test pairs are `phi1 = b(t) y (1-y) c1(x)`, `phi2 = b(t) y^2 c2(x)`,
//! `psi = b(t) c2(x)` with the bump `b(t) = sin^2(pi (t - t0) / T)`, so the
//! trace condition `phi(x, 1, t) = (0, psi)` holds by construction.

use std::f64::consts::PI;
use std::fmt;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::forcing::ForcingSpec;
use crate::grid::GridField;
use crate::params::ModelParams;
use crate::quadrature::{lagrange_diff_matrix, GaussLegendre};
use crate::reconstruct::{limit_velocity_dy, limit_velocity_with, PlaneField};
use crate::solver::Snapshot;
use crate::spectral::Spectral;

/// Default sweep `eps = 1/8, ..., 1/128`.
pub const DEFAULT_EPS: [f64; 5] = [1.0 / 8.0, 1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0, 1.0 / 128.0];

/// Largest relative change tolerated when the Simpson rule is coarsened by two.
const SIMPSON_TOL: f64 = 0.01;

/// `mean + sum a_m cos(2 pi m x) + sum b_m sin(2 pi m x)`
#[derive(Debug, Clone, PartialEq)]
pub struct TrigSeries {
    pub mean: f64,
    pub cos: Vec<(u32, f64)>,
    pub sin: Vec<(u32, f64)>,
}

impl TrigSeries {
    /// `d^order/dx^order` at `x` (order 0 is the value).
    pub fn deriv(&self, x: f64, order: u32) -> f64 {
        let mut v = if order == 0 { self.mean } else { 0.0 };
        let term = |m: u32, a: f64, phase: u32| {
            let k = 2.0 * PI * m as f64;
            let arg = k * x;
            // cos^(n)(kx) = k^n cos(kx + n pi/2); sin is cos shifted by -pi/2
            let shift = (order + phase) % 4;
            let base = match shift {
                0 => arg.cos(),
                1 => -arg.sin(),
                2 => -arg.cos(),
                _ => arg.sin(),
            };
            a * k.powi(order as i32) * base
        };
        for &(m, a) in &self.cos {
            v += term(m, a, 0);
        }
        for &(m, b) in &self.sin {
            v += term(m, b, 3);
        }
        v
    }
}

/// Coupled test fields `(phi, psi)` on the strip times a time window.
#[derive(Debug, Clone, PartialEq)]
pub struct TestFunctionPair {
    pub name: String,
    pub c1: TrigSeries,
    pub c2: TrigSeries,
}

impl TestFunctionPair {
    /// The three versioned pairs used by the sweep.
    pub fn bundled() -> Vec<Self> {
        let s = |cos: &[(u32, f64)], sin: &[(u32, f64)], mean: f64| TrigSeries {
            mean,
            cos: cos.to_vec(),
            sin: sin.to_vec(),
        };
        vec![
            Self {
                name: "pair1".into(),
                c1: s(&[(1, 1.0)], &[], 0.0),
                c2: s(&[], &[(1, 1.0)], 0.0),
            },
            Self {
                name: "pair2".into(),
                c1: s(&[(1, 0.8)], &[(2, 0.3)], 0.0),
                c2: s(&[(2, 0.3)], &[(1, 1.0)], 0.0),
            },
            Self {
                name: "pair3".into(),
                c1: s(&[(1, 1.0), (2, -0.2)], &[], 0.25),
                c2: s(&[], &[(1, 0.6), (3, -0.2)], 0.2),
            },
        ]
    }

    /// `(phi1, phi2)` at a point; `bump` is `b(t)`.
    pub fn phi(&self, x: f64, y: f64, bump: f64) -> (f64, f64) {
        (
            bump * y * (1.0 - y) * self.c1.deriv(x, 0),
            bump * y * y * self.c2.deriv(x, 0),
        )
    }

    pub fn psi(&self, x: f64, bump: f64) -> f64 {
        bump * self.c2.deriv(x, 0)
    }
}

/// Temporal support `[t0, t0 + len]` of the bump.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeWindow {
    pub t0: f64,
    pub len: f64,
}

impl TimeWindow {
    pub fn bump(&self, t: f64) -> f64 {
        let s = (PI * (t - self.t0) / self.len).sin();
        s * s
    }

    pub fn bump_dt(&self, t: f64) -> f64 {
        PI / self.len * (2.0 * PI * (t - self.t0) / self.len).sin()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    InertiaTime,
    Convection,
    Viscous,
    Pressure,
    StructureInertia,
    StructureVisco,
    Bending,
    Force,
    DivergenceDefect,
}

impl Term {
    pub const ALL: [Term; 9] = [
        Term::InertiaTime,
        Term::Convection,
        Term::Viscous,
        Term::Pressure,
        Term::StructureInertia,
        Term::StructureVisco,
        Term::Bending,
        Term::Force,
        Term::DivergenceDefect,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Term::InertiaTime => "inertia_time",
            Term::Convection => "convection",
            Term::Viscous => "viscous",
            Term::Pressure => "pressure",
            Term::StructureInertia => "structure_inertia",
            Term::StructureVisco => "structure_visco",
            Term::Bending => "bending",
            Term::Force => "force",
            Term::DivergenceDefect => "divergence_defect",
        }
    }

    /// Power of `eps` in the printed prefactor.
    pub fn prefactor_exponent(self, r: f64) -> f64 {
        match self {
            Term::InertiaTime | Term::Convection => 3.0,
            Term::Viscous => 1.0,
            Term::Pressure | Term::Force => -1.0,
            Term::StructureInertia => 4.0,
            Term::StructureVisco => 1.0 - r,
            Term::Bending => -2.0,
            Term::DivergenceDefect => 0.0,
        }
    }

    /// Leading power of `eps` contributed by the rescaled gradient: the vertical
    /// component carries `1/eps`, twice in the viscous product (`v_y phi_y`) and
    /// once in the divergence of the test field.
    pub fn operator_exponent(self) -> f64 {
        match self {
            Term::Viscous => -2.0,
            Term::Pressure => -1.0,
            _ => 0.0,
        }
    }

    /// Powers carried by the fields themselves; zero in rescaled unknowns.
    pub fn field_exponent(self) -> f64 {
        0.0
    }

    pub fn predicted_exponent(self, r: f64) -> f64 {
        self.prefactor_exponent(r) + self.operator_exponent() + self.field_exponent()
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Signed value of every term at one `eps`, as it appears on the left-hand side.
#[derive(Debug, Clone, PartialEq)]
pub struct TermBreakdown {
    pub eps: f64,
    pub values: Vec<(Term, f64)>,
}

impl TermBreakdown {
    pub fn value(&self, term: Term) -> f64 {
        self.values
            .iter()
            .find(|(t, _)| *t == term)
            .map_or(0.0, |(_, v)| *v)
    }

    pub fn magnitude(&self, term: Term) -> f64 {
        self.value(term).abs()
    }

    /// `eps^2` times the sum of the weak-form terms (the divergence defect is a
    /// separate monitor, not a term).
    pub fn scaled_sum(&self) -> f64 {
        let total: f64 = self
            .values
            .iter()
            .filter(|(t, _)| *t != Term::DivergenceDefect)
            .map(|(_, v)| v)
            .sum();
        self.eps * self.eps * total
    }
}

/// Extra constants that enter only the weak-form harness.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarnessParams {
    /// Rescaled structure density.
    pub rho_hat: f64,
    pub quad_order: usize,
}

impl Default for HarnessParams {
    fn default() -> Self {
        Self {
            rho_hat: 1.0,
            quad_order: crate::quadrature::DEFAULT_ORDER,
        }
    }
}

/// Rescaled gradient `(f_x - y (h_x/h) f_y, f_y / (eps h))` of a field on the strip.
///
/// `f_x` is spectral; `f_y` differentiates the polynomial through the field's
/// `y`-nodes.
pub fn rescaled_gradient(
    f: &PlaneField,
    h: &GridField,
    eps: f64,
) -> Result<(PlaneField, PlaneField)> {
    if !(eps > 0.0) {
        return Err(Error::EpsOutOfRange(eps));
    }
    let (node, min) = h.argmin();
    if min <= 0.0 {
        return Err(Error::InvalidParam(format!(
            "rescaled gradient needs positive h; h = {min} at node {node}"
        )));
    }
    let spectral = Spectral::new(h.grid());
    let fx = f.deriv_x(&spectral);
    let hx = spectral.deriv(h, 1)?;
    let d = lagrange_diff_matrix(f.y());
    let ny = f.y().len();
    let grid = h.grid();
    let mut gx = Vec::with_capacity(f.values().len());
    let mut gy = Vec::with_capacity(f.values().len());
    for j in 0..grid.n() {
        let col = f.column(j);
        let (hj, hxj) = (h.values()[j], hx.values()[j]);
        #[allow(clippy::needless_range_loop)]
        for q in 0..ny {
            let fy: f64 = d[q].iter().zip(col).map(|(a, b)| a * b).sum();
            gx.push(fx.get(j, q) - f.y()[q] * hxj / hj * fy);
            gy.push(fy / (eps * hj));
        }
    }
    Ok((
        PlaneField::new(grid, f.y().to_vec(), gx)?,
        PlaneField::new(grid, f.y().to_vec(), gy)?,
    ))
}

/// Fields needed at one instant, independent of `eps` and of the test pair.
#[derive(Debug, Clone)]
struct Slice {
    t: f64,
    h: Vec<f64>,
    hx: Vec<f64>,
    hxx: Vec<f64>,
    w: Vec<f64>,
    p: Vec<f64>,
    /// `G = h^3 (p_x/12 - Phi)`
    flux: Vec<f64>,
    v: PlaneField,
    vx: PlaneField,
    vy: PlaneField,
    f1: PlaneField,
}

/// Snapshots over a window, reconstructed and ready for quadrature.
#[derive(Debug, Clone)]
pub struct PreparedWindow {
    slices: Vec<Slice>,
    window: TimeWindow,
    dt: f64,
    rule: GaussLegendre,
    params: ModelParams,
    harness: HarnessParams,
    dx: f64,
    xs: Vec<f64>,
}

impl PreparedWindow {
    /// Reconstructs the limit fields at every snapshot. The snapshots must be
    /// uniformly spaced, carry `dh/dt`, and number `4k + 1`.
    pub fn new(
        snapshots: &[Snapshot],
        params: &ModelParams,
        harness: HarnessParams,
    ) -> Result<Self> {
        let count = snapshots.len();
        if count < 5 || !(count - 1).is_multiple_of(4) {
            return Err(Error::TemporalResolution(format!(
                "need 4k + 1 snapshots (k >= 1) for two nested Simpson rules, got {count}"
            )));
        }
        let dt = snapshots[1].t - snapshots[0].t;
        if !(dt > 0.0) {
            return Err(Error::Window("snapshot times must increase".into()));
        }
        for pair in snapshots.windows(2) {
            if ((pair[1].t - pair[0].t) - dt).abs() > 1e-6 * dt {
                return Err(Error::Window(format!(
                    "snapshots are not uniformly spaced near t = {}",
                    pair[0].t
                )));
            }
        }
        let grid = snapshots[0].h.grid();
        let spectral = Spectral::new(grid);
        let rule = GaussLegendre::new(harness.quad_order)?;
        let forcing = params.forcing();
        let slices = snapshots
            .par_iter()
            .map(|s| prepare_slice(&spectral, s, forcing, &rule))
            .collect::<Result<Vec<_>>>()?;
        let t0 = snapshots[0].t;
        let len = snapshots[count - 1].t - t0;
        Ok(Self {
            slices,
            window: TimeWindow { t0, len },
            dt,
            rule,
            params: params.clone(),
            harness,
            dx: grid.dx(),
            xs: grid.nodes().collect(),
        })
    }

    pub fn window(&self) -> TimeWindow {
        self.window
    }

    pub fn len(&self) -> usize {
        self.slices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slices.is_empty()
    }

    /// Composite Simpson at full and half resolution.
    fn simpson_pair(&self, f: &[f64]) -> (f64, f64) {
        (
            simpson(f, self.dt),
            simpson(
                &f.iter().step_by(2).copied().collect::<Vec<_>>(),
                2.0 * self.dt,
            ),
        )
    }
}

fn prepare_slice(
    spectral: &Spectral,
    s: &Snapshot,
    forcing: &ForcingSpec,
    rule: &GaussLegendre,
) -> Result<Slice> {
    let w = s.w.as_ref().ok_or(Error::MissingRate)?;
    let d = spectral.derivs(&s.h, &[1, 2]);
    let phi = crate::forcing::ForcingEval::new(forcing, GaussLegendre::default_rule())
        .potential(s.h.grid(), s.t)?;
    let flux = crate::solver::flux_with(spectral, &s.h, &s.p, &phi);
    let y = rule.nodes();
    let v = limit_velocity_with(spectral, &s.h, &s.p, forcing, s.t, y)?;
    let vx = v.deriv_x(spectral);
    let vy = limit_velocity_dy(spectral, &s.h, &s.p, forcing, s.t, y)?;
    let grid = s.h.grid();
    let f1 = PlaneField::from_fn(grid, y, |_, x, yq| forcing.eval_f1(x, yq, s.t));
    Ok(Slice {
        t: s.t,
        h: s.h.values().to_vec(),
        hx: d[0].values().to_vec(),
        hxx: d[1].values().to_vec(),
        w: w.values().to_vec(),
        p: s.p.values().to_vec(),
        flux: flux.into_values(),
        v,
        vx,
        vy,
        f1,
    })
}

/// Composite Simpson on uniformly spaced samples (odd count).
fn simpson(f: &[f64], dt: f64) -> f64 {
    let n = f.len() - 1;
    let inner: f64 = f[1..n]
        .iter()
        .enumerate()
        .map(|(i, v)| if i % 2 == 0 { 4.0 * v } else { 2.0 * v })
        .sum();
    dt / 3.0 * (f[0] + f[n] + inner)
}

/// Per-instant term densities for one pair and one `eps`, in `Term::ALL` order.
fn slice_terms(pw: &PreparedWindow, s: &Slice, test: &TestFunctionPair, eps: f64) -> [f64; 9] {
    let b = pw.window.bump(s.t);
    let bp = pw.window.bump_dt(s.t);
    let p = &pw.params;
    let (e2, e3) = (eps * eps, eps * eps * eps);
    let rho = pw.harness.rho_hat;
    let visco_pref = p.delta() * eps.powf(1.0 - p.r());
    let bend_pref = p.beta() / e2;
    let y = pw.rule.nodes();
    let wq = pw.rule.weights();
    let mut acc = [0.0; 9];
    for (j, &x) in pw.xs.iter().enumerate() {
        let c1 = test.c1.deriv(x, 0);
        let c1x = test.c1.deriv(x, 1);
        let c2 = test.c2.deriv(x, 0);
        let c2x = test.c2.deriv(x, 1);
        let c2xx = test.c2.deriv(x, 2);
        let (h, hx) = (s.h[j], s.hx[j]);
        let (v, vx, vy, f1) = (
            s.v.column(j),
            s.vx.column(j),
            s.vy.column(j),
            s.f1.column(j),
        );
        let mut col = [0.0; 9];
        for q in 0..y.len() {
            let yq = y[q];
            let sl = yq * hx / h;
            let phi1 = b * yq * (1.0 - yq) * c1;
            let phi1_t = bp * yq * (1.0 - yq) * c1;
            let phi1_x = b * yq * (1.0 - yq) * c1x;
            let phi1_y = b * (1.0 - 2.0 * yq) * c1;
            let phi2_x = b * yq * yq * c2x;
            let phi2_y = 2.0 * b * yq * c2;
            let a = vx[q] - sl * vy[q];
            let bb = vy[q] / (eps * h);
            let c = phi1_x - sl * phi1_y;
            let d = phi1_y / (eps * h);
            let e = phi2_x - sl * phi2_y;
            let g = phi2_y / (eps * h);
            let wh = wq[q] * h;
            col[0] += -e3 * v[q] * phi1_t * wh;
            col[1] += e3 * v[q] * a * phi1 * wh;
            col[2] += 2.0 * eps * (a * c + 0.5 * bb * (d + e)) * wh;
            col[3] += -(s.p[j] / eps) * (c + g) * wh;
            // the profile F enters the velocity with the sign that balances this term
            col[7] += -(f1[q] / eps) * phi1 * wh;
            col[8] += a.abs() * wh;
        }
        col[4] = -rho * eps.powi(4) * s.w[j] * bp * c2;
        col[5] = -visco_pref * s.w[j] * b * c2xx;
        col[6] = bend_pref * s.hxx[j] * b * c2xx;
        for (a, c) in acc.iter_mut().zip(&col) {
            *a += c * pw.dx;
        }
    }
    acc
}

/// Space-time integrals of every weak-form term for one test pair and one `eps`.
pub fn assemble_terms(
    pw: &PreparedWindow,
    test: &TestFunctionPair,
    eps: f64,
) -> Result<TermBreakdown> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::EpsOutOfRange(eps));
    }
    let per_time: Vec<[f64; 9]> = pw
        .slices
        .iter()
        .map(|s| slice_terms(pw, s, test, eps))
        .collect();
    let mut values = Vec::with_capacity(9);
    for (k, term) in Term::ALL.iter().enumerate() {
        let series: Vec<f64> = per_time.iter().map(|v| v[k]).collect();
        let (full, half) = pw.simpson_pair(&series);
        let scale = full.abs().max(half.abs());
        if scale > 0.0 && (full - half).abs() > SIMPSON_TOL * scale {
            return Err(Error::TemporalResolution(format!(
                "{term} changes by {:.2}% when the Simpson rule is coarsened (eps = {eps})",
                100.0 * (full - half).abs() / scale
            )));
        }
        values.push((*term, full));
    }
    Ok(TermBreakdown { eps, values })
}

/// Residuals of the two limit identities tested with `psi`:
///
/// ```text
/// chi delta int h psi_xxt + beta int h_xx psi_xx - int p psi        = 0
/// int h^3 (p_x/12 - Phi) psi_x - int h psi_t                       = 0
/// ```
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitResidual {
    /// `eps^2`-limit of the weak form; the pressure identity, signed.
    pub limit_value: f64,
    pub pressure_identity: f64,
    pub reynolds_identity: f64,
}

impl LimitResidual {
    pub fn total(&self) -> f64 {
        self.pressure_identity + self.reynolds_identity
    }
}

pub fn limit_residual(pw: &PreparedWindow, test: &TestFunctionPair) -> LimitResidual {
    let chi_delta = pw.params.chi_delta();
    let beta = pw.params.beta();
    let mut bend = Vec::with_capacity(pw.len());
    let mut visco = Vec::with_capacity(pw.len());
    let mut press = Vec::with_capacity(pw.len());
    let mut flux = Vec::with_capacity(pw.len());
    let mut storage = Vec::with_capacity(pw.len());
    for s in &pw.slices {
        let b = pw.window.bump(s.t);
        let bp = pw.window.bump_dt(s.t);
        let (mut kb, mut kv, mut kp, mut kf, mut ks) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (j, &x) in pw.xs.iter().enumerate() {
            let c2 = test.c2.deriv(x, 0);
            let c2x = test.c2.deriv(x, 1);
            let c2xx = test.c2.deriv(x, 2);
            kb += beta * s.hxx[j] * b * c2xx;
            // int h psi_xxt = -int w psi_xx after integrating by parts in time
            kv += -chi_delta * s.w[j] * b * c2xx;
            kp += s.p[j] * b * c2;
            kf += s.flux[j] * b * c2x;
            ks += s.h[j] * bp * c2;
        }
        bend.push(kb * pw.dx);
        visco.push(kv * pw.dx);
        press.push(kp * pw.dx);
        flux.push(kf * pw.dx);
        storage.push(ks * pw.dx);
    }
    let i = |f: &[f64]| simpson(f, pw.dt);
    let (ib, iv, ip, iflux, is) = (i(&bend), i(&visco), i(&press), i(&flux), i(&storage));
    let limit_value = ib + iv - ip;
    let p_scale = ib.abs().max(iv.abs()).max(ip.abs()).max(f64::MIN_POSITIVE);
    let r_scale = iflux.abs().max(is.abs()).max(f64::MIN_POSITIVE);
    LimitResidual {
        limit_value,
        pressure_identity: limit_value.abs() / p_scale,
        reynolds_identity: (iflux - is).abs() / r_scale,
    }
}

/// Slope table for one test pair.
#[derive(Debug, Clone, PartialEq)]
pub struct PairSweep {
    pub pair: String,
    pub breakdowns: Vec<TermBreakdown>,
    /// `(term, predicted exponent, fitted slope)`; `None` for identically zero terms.
    pub slopes: Vec<(Term, f64, Option<f64>)>,
    pub limit: LimitResidual,
}

impl PairSweep {
    pub fn slope(&self, term: Term) -> Option<f64> {
        self.slopes
            .iter()
            .find(|(t, _, _)| *t == term)
            .and_then(|(_, _, s)| *s)
    }

    /// `|eps^2 (sum of terms) - limit|` at every sweep point.
    pub fn scaled_sum_defects(&self) -> Vec<(f64, f64)> {
        self.breakdowns
            .iter()
            .map(|b| (b.eps, (b.scaled_sum() - self.limit.limit_value).abs()))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub r: f64,
    pub pairs: Vec<PairSweep>,
}

impl SweepTable {
    /// Largest `|fitted - predicted|` over all active terms and pairs.
    pub fn worst_slope_error(&self) -> f64 {
        self.pairs
            .iter()
            .flat_map(|p| p.slopes.iter())
            .filter_map(|(_, pred, fit)| fit.map(|f| (f - pred).abs()))
            .fold(0.0, f64::max)
    }
}

/// Least-squares slope of `log|y|` against `log x`.
pub fn loglog_slope(points: &[(f64, f64)]) -> Result<f64> {
    let usable: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && y.abs() > 0.0 && y.is_finite())
        .map(|(x, y)| (x.ln(), y.abs().ln()))
        .collect();
    if usable.len() < 4 {
        return Err(Error::DegenerateFit(format!(
            "need at least 4 nonzero points, got {}",
            usable.len()
        )));
    }
    let n = usable.len() as f64;
    let mx = usable.iter().map(|p| p.0).sum::<f64>() / n;
    let my = usable.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = usable.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::DegenerateFit("all eps values coincide".into()));
    }
    let sxy: f64 = usable.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Ok(sxy / sxx)
}

/// Evaluates every term for every pair and `eps`, in parallel, and fits slopes.
pub fn eps_sweep_slopes(
    pw: &PreparedWindow,
    eps_list: &[f64],
    tests: &[TestFunctionPair],
) -> Result<SweepTable> {
    if eps_list.len() < 4 {
        return Err(Error::DegenerateFit(format!(
            "an eps sweep needs at least 4 values, got {}",
            eps_list.len()
        )));
    }
    let jobs: Vec<(usize, f64)> = (0..tests.len())
        .flat_map(|i| eps_list.iter().map(move |&e| (i, e)))
        .collect();
    let results = jobs
        .par_iter()
        .map(|&(i, eps)| assemble_terms(pw, &tests[i], eps))
        .collect::<Result<Vec<_>>>()?;
    let r = pw.params.r();
    let pairs = tests
        .iter()
        .enumerate()
        .map(|(i, test)| {
            let breakdowns: Vec<TermBreakdown> =
                results[i * eps_list.len()..(i + 1) * eps_list.len()].to_vec();
            let slopes = Term::ALL
                .iter()
                .map(|&term| {
                    let pts: Vec<(f64, f64)> = breakdowns
                        .iter()
                        .map(|b| (b.eps, b.magnitude(term)))
                        .collect();
                    let active = pts.iter().any(|(_, m)| *m > 0.0);
                    let fit = if active {
                        Some(loglog_slope(&pts)?)
                    } else {
                        None
                    };
                    Ok((term, term.predicted_exponent(r), fit))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(PairSweep {
                pair: test.name.clone(),
                breakdowns,
                slopes,
                limit: limit_residual(pw, test),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepTable { r, pairs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::PeriodicGrid;
    use crate::params::{validate_params, RawParams};

    #[test]
    fn predicted_exponents() {
        assert_eq!(Term::Bending.predicted_exponent(1.0), -2.0);
        assert_eq!(Term::InertiaTime.predicted_exponent(1.0), 3.0);
        assert_eq!(Term::StructureVisco.predicted_exponent(3.0), -2.0);
        assert_eq!(Term::Pressure.predicted_exponent(2.0), -2.0);
        assert_eq!(Term::Viscous.predicted_exponent(2.0), -1.0);
        assert_eq!(Term::DivergenceDefect.predicted_exponent(2.0), 0.0);
    }

    #[test]
    fn trig_series_derivatives() {
        let s = TrigSeries {
            mean: 0.5,
            cos: vec![(1, 2.0)],
            sin: vec![(2, 1.0)],
        };
        let x = 0.137;
        let k = 2.0 * PI;
        let f = |x: f64| 0.5 + 2.0 * (k * x).cos() + (2.0 * k * x).sin();
        assert!((s.deriv(x, 0) - f(x)).abs() < 1e-14);
        let d1 = -2.0 * k * (k * x).sin() + 2.0 * k * (2.0 * k * x).cos();
        assert!((s.deriv(x, 1) - d1).abs() < 1e-12);
        let d2 = -2.0 * k * k * (k * x).cos() - 4.0 * k * k * (2.0 * k * x).sin();
        assert!((s.deriv(x, 2) - d2).abs() < 1e-10);
    }

    #[test]
    fn trace_condition_holds() {
        for t in TestFunctionPair::bundled() {
            for &x in &[0.0, 0.3, 0.71] {
                let (p1, p2) = t.phi(x, 1.0, 0.4);
                assert_eq!(p1, 0.0);
                assert_eq!(p2, t.psi(x, 0.4));
            }
        }
        let w = TimeWindow { t0: 1.0, len: 2.0 };
        assert!(w.bump(3.0).abs() < 1e-30 && w.bump(1.0) == 0.0);
    }

    #[test]
    fn rescaled_gradient_examples() {
        let g = PeriodicGrid::new(32).unwrap();
        let y = GaussLegendre::new(6).unwrap().nodes().to_vec();
        let f = PlaneField::from_fn(g, &y, |_, x, y| (2.0 * PI * x).sin() * y * y);
        let (gx, gy) = rescaled_gradient(&f, &g.constant(1.0), 1.0).unwrap();
        let (_, gy_half) = rescaled_gradient(&f, &g.constant(1.0), 0.5).unwrap();
        for j in 0..g.n() {
            let x = g.node(j);
            for (q, &yq) in y.iter().enumerate() {
                assert!((gx.get(j, q) - 2.0 * PI * (2.0 * PI * x).cos() * yq * yq).abs() < 1e-11);
                assert!((gy.get(j, q) - 2.0 * (2.0 * PI * x).sin() * yq).abs() < 1e-11);
                assert!((gy_half.get(j, q) - 2.0 * gy.get(j, q)).abs() < 1e-11);
            }
        }
        let h = g.sample(|x| 1.0 + 0.2 * (2.0 * PI * x).sin());
        let sq = PlaneField::from_fn(g, &y, |_, _, y| y * y);
        let (gx, _) = rescaled_gradient(&sq, &h, 0.3).unwrap();
        for j in 0..g.n() {
            let x = g.node(j);
            let hx = 0.4 * PI * (2.0 * PI * x).cos();
            let hv = 1.0 + 0.2 * (2.0 * PI * x).sin();
            for (q, &yq) in y.iter().enumerate() {
                assert!((gx.get(j, q) + yq * hx / hv * 2.0 * yq).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn slope_fit() {
        let pts: Vec<(f64, f64)> = DEFAULT_EPS.iter().map(|&e| (e, 3.0 * e.powi(3))).collect();
        assert!((loglog_slope(&pts).unwrap() - 3.0).abs() < 1e-12);
        assert!(matches!(
            loglog_slope(&pts[..3]),
            Err(Error::DegenerateFit(_))
        ));
    }

    fn frozen_window(h: GridField, p: GridField, count: usize) -> Vec<Snapshot> {
        (0..count)
            .map(|i| Snapshot {
                t: i as f64 * 0.01,
                h: h.clone(),
                p: p.clone(),
                w: Some(h.grid().zeros()),
            })
            .collect()
    }

    #[test]
    fn quiescent_film_has_no_fluid_terms() {
        let g = PeriodicGrid::new(16).unwrap();
        let params = validate_params(RawParams::new(12.0, 0.0, 1.0)).unwrap();
        let snaps = frozen_window(g.constant(1.0), g.zeros(), 9);
        let pw = PreparedWindow::new(&snaps, &params, HarnessParams::default()).unwrap();
        let tb = assemble_terms(&pw, &TestFunctionPair::bundled()[0], 0.1).unwrap();
        for term in Term::ALL {
            assert!(tb.magnitude(term) < 1e-12, "{term}: {}", tb.magnitude(term));
        }
    }

    #[test]
    fn frozen_film_pressure_balances_bending() {
        let g = PeriodicGrid::new(32).unwrap();
        let params = validate_params(RawParams::new(12.0, 0.0, 1.0)).unwrap();
        let h = g.sample(|x| 1.0 + 0.2 * (2.0 * PI * x).sin() + 0.05 * (4.0 * PI * x).cos());
        let p = crate::solver::pressure_of(&h, None, &params).unwrap();
        let snaps = frozen_window(h, p, 41);
        let pw = PreparedWindow::new(&snaps, &params, HarnessParams::default()).unwrap();
        for test in TestFunctionPair::bundled() {
            let lim = limit_residual(&pw, &test);
            assert!(lim.pressure_identity < 1e-8, "{}", lim.pressure_identity);
        }
    }

    #[test]
    fn window_shape_is_checked() {
        let g = PeriodicGrid::new(16).unwrap();
        let params = validate_params(RawParams::new(12.0, 0.0, 1.0)).unwrap();
        let snaps = frozen_window(g.constant(1.0), g.zeros(), 7);
        assert!(matches!(
            PreparedWindow::new(&snaps, &params, HarnessParams::default()),
            Err(Error::TemporalResolution(_))
        ));
    }
}
