//! Vertical force profile `F` and external potential `Phi` generated by the
//! horizontal body force `f1(x, y, t)` on the reference strip.
//!
//! ```text
//! F(x,y,t)  = (y - 1) * int_0^1 z f1(x,z,t) dz - int_y^1 (y - z) f1(x,z,t) dz
//! Phi(x,t)  = int_0^1 F(x,y,t) dy
//! ```
//!
//! Both integrals use the same Gauss–Legendre rule; the one over `[y, 1]` is
//! remapped onto the unit interval. `f1` is assumed continuous in `y`.

use crate::error::{Error, Result};
use crate::expr::{Expr, Var};
use crate::grid::{GridField, PeriodicGrid};
use crate::quadrature::GaussLegendre;

/// Horizontal force density `f1(x, y, t)` with an optional declared sup-norm bound.
#[derive(Debug, Clone, PartialEq)]
pub struct ForcingSpec {
    f1: Expr,
    bound: Option<f64>,
}

impl ForcingSpec {
    pub fn new(f1: Expr, bound: Option<f64>) -> Self {
        Self { f1, bound }
    }

    pub fn zero() -> Self {
        Self::new(Expr::constant(0.0), None)
    }

    pub fn parse(src: &str) -> Result<Self> {
        Ok(Self::new(Expr::parse(src)?, None))
    }

    pub fn f1(&self) -> &Expr {
        &self.f1
    }

    pub fn bound(&self) -> Option<f64> {
        self.bound
    }

    pub fn is_zero(&self) -> bool {
        self.f1.as_constant() == Some(0.0)
    }

    pub fn is_time_independent(&self) -> bool {
        !self.f1.uses(Var::T)
    }

    pub fn eval_f1(&self, x: f64, y: f64, t: f64) -> f64 {
        self.f1.eval(x, y, t)
    }

    /// Spot-checks finiteness (and the declared bound) on a lattice over the strip and `[0, t_end]`.
    pub fn check(&self, t_end: f64) -> Result<()> {
        const LATTICE: usize = 9;
        for i in 0..LATTICE {
            let x = i as f64 / LATTICE as f64;
            for j in 0..LATTICE {
                let y = j as f64 / (LATTICE - 1) as f64;
                for k in 0..LATTICE {
                    let t = t_end * k as f64 / (LATTICE - 1) as f64;
                    let v = self.f1.eval(x, y, t);
                    if !v.is_finite() {
                        return Err(Error::Forcing(format!(
                            "f1 = `{}` is not finite at (x, y, t) = ({x}, {y}, {t})",
                            self.f1
                        )));
                    }
                    if let Some(b) = self.bound {
                        if v.abs() > b {
                            return Err(Error::Forcing(format!(
                                "|f1| = {} exceeds declared bound {b} at (x, y, t) = ({x}, {y}, {t})",
                                v.abs()
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// Forcing evaluator with a fixed quadrature rule.
#[derive(Debug, Clone)]
pub struct ForcingEval<'a> {
    spec: &'a ForcingSpec,
    rule: GaussLegendre,
}

impl<'a> ForcingEval<'a> {
    pub fn new(spec: &'a ForcingSpec, rule: GaussLegendre) -> Self {
        Self { spec, rule }
    }

    pub fn rule(&self) -> &GaussLegendre {
        &self.rule
    }

    /// `int_0^1 z f1(x, z, t) dz`
    fn first_moment(&self, x: f64, t: f64) -> f64 {
        self.rule.integrate_fn(|z| z * self.spec.eval_f1(x, z, t))
    }

    fn profile_with_moment(&self, moment: f64, x: f64, y: f64, t: f64) -> f64 {
        let tail = self
            .rule
            .integrate_on(y, 1.0, |z| (y - z) * self.spec.eval_f1(x, z, t));
        (y - 1.0) * moment - tail
    }

    pub fn profile(&self, x: f64, y: f64, t: f64) -> Result<f64> {
        check_y(y)?;
        if self.spec.is_zero() {
            return Ok(0.0);
        }
        Ok(self.profile_with_moment(self.first_moment(x, t), x, y, t))
    }

    /// `dF/dy = int_0^1 z f1 dz - int_y^1 f1 dz`
    pub fn profile_dy(&self, x: f64, y: f64, t: f64) -> Result<f64> {
        check_y(y)?;
        if self.spec.is_zero() {
            return Ok(0.0);
        }
        let tail = self
            .rule
            .integrate_on(y, 1.0, |z| self.spec.eval_f1(x, z, t));
        Ok(self.first_moment(x, t) - tail)
    }

    /// `F(x, y_q, t)` at every `y` in `ys`, sharing the first moment.
    pub fn profile_column(&self, x: f64, ys: &[f64], t: f64) -> Result<Vec<f64>> {
        if let Some(&y) = ys.iter().find(|y| !(0.0..=1.0).contains(*y)) {
            return Err(Error::OutOfStrip(y));
        }
        if self.spec.is_zero() {
            return Ok(vec![0.0; ys.len()]);
        }
        let m = self.first_moment(x, t);
        Ok(ys
            .iter()
            .map(|&y| self.profile_with_moment(m, x, y, t))
            .collect())
    }

    pub fn potential(&self, grid: PeriodicGrid, t: f64) -> Result<GridField> {
        if self.spec.is_zero() {
            return Ok(grid.zeros());
        }
        let values = grid
            .nodes()
            .map(|x| {
                let col = self.profile_column(x, self.rule.nodes(), t)?;
                Ok(self.rule.integrate(&col))
            })
            .collect::<Result<Vec<f64>>>()?;
        GridField::new(grid, values).map_err(|e| Error::Forcing(format!("potential: {e}")))
    }
}

fn check_y(y: f64) -> Result<()> {
    if (0.0..=1.0).contains(&y) {
        Ok(())
    } else {
        Err(Error::OutOfStrip(y))
    }
}

/// Vertical profile `F(x, y, t)` with the default 16-point rule.
#[allow(non_snake_case)]
pub fn eval_F(spec: &ForcingSpec, x: f64, y: f64, t: f64) -> Result<f64> {
    ForcingEval::new(spec, GaussLegendre::default_rule()).profile(x, y, t)
}

/// Potential `Phi(x_j, t)` on the grid with the default 16-point rule.
#[allow(non_snake_case)]
pub fn eval_Phi(spec: &ForcingSpec, grid: PeriodicGrid, t: f64) -> Result<GridField> {
    ForcingEval::new(spec, GaussLegendre::default_rule()).potential(grid, t)
}

/// Source of the potential driving the thin-film flux.
pub trait Potential: Send + Sync {
    fn phi(&self, grid: PeriodicGrid, t: f64) -> Result<GridField>;

    fn is_time_independent(&self) -> bool {
        false
    }

    fn is_zero(&self) -> bool {
        false
    }
}

impl Potential for ForcingSpec {
    fn phi(&self, grid: PeriodicGrid, t: f64) -> Result<GridField> {
        eval_Phi(self, grid, t)
    }

    fn is_time_independent(&self) -> bool {
        ForcingSpec::is_time_independent(self)
    }

    fn is_zero(&self) -> bool {
        ForcingSpec::is_zero(self)
    }
}

/// Potential given directly as a closed form `Phi(x, t)`.
pub struct FnPotential<F> {
    f: F,
    steady: bool,
}

impl<F: Fn(f64, f64) -> f64 + Send + Sync> FnPotential<F> {
    pub fn new(f: F, steady: bool) -> Self {
        Self { f, steady }
    }
}

impl<F: Fn(f64, f64) -> f64 + Send + Sync> Potential for FnPotential<F> {
    fn phi(&self, grid: PeriodicGrid, t: f64) -> Result<GridField> {
        GridField::new(grid, grid.nodes().map(|x| (self.f)(x, t)).collect())
    }

    fn is_time_independent(&self) -> bool {
        self.steady
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(s: &str) -> ForcingSpec {
        ForcingSpec::parse(s).unwrap()
    }

    #[test]
    fn zero_forcing_gives_zero_profile() {
        let s = ForcingSpec::zero();
        assert_eq!(eval_F(&s, 0.3, 0.4, 0.0).unwrap(), 0.0);
        let g = PeriodicGrid::new(16).unwrap();
        assert_eq!(eval_Phi(&s, g, 1.0).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn constant_forcing_profile_closed_form() {
        let s = spec("8");
        // c y (y - 1) / 2 at y = 1/2, c = 8
        assert!((eval_F(&s, 0.1, 0.5, 0.0).unwrap() + 1.0).abs() < 1e-14);
        for &y in &[0.0, 0.1, 0.37, 0.9, 1.0] {
            let want = 8.0 * y * (y - 1.0) / 2.0;
            assert!((eval_F(&s, 0.0, y, 0.0).unwrap() - want).abs() < 1e-14);
        }
    }

    #[test]
    fn walls_are_zero() {
        let s = spec("exp(y) * cos(2*pi*x) + t*y^3");
        for &x in &[0.0, 0.3, 0.77] {
            assert!(eval_F(&s, x, 0.0, 0.4).unwrap().abs() < 1e-12);
            assert!(eval_F(&s, x, 1.0, 0.4).unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_points_off_the_strip() {
        let s = spec("1");
        assert!(matches!(
            eval_F(&s, 0.0, 1.5, 0.0),
            Err(Error::OutOfStrip(_))
        ));
        assert!(eval_F(&s, 0.0, -0.1, 0.0).is_err());
    }

    #[test]
    fn constant_twelve_gives_unit_potential() {
        let g = PeriodicGrid::new(16).unwrap();
        let phi = eval_Phi(&spec("12"), g, 0.0).unwrap();
        assert!(phi.values().iter().all(|v| (v + 1.0).abs() < 1e-12));
    }

    #[test]
    fn profile_derivative_matches_finite_difference() {
        let s = spec("sin(3*y) + x*y");
        let ev = ForcingEval::new(&s, GaussLegendre::default_rule());
        let (x, y, t, h) = (0.2, 0.4, 0.0, 1e-5);
        let fd = (ev.profile(x, y + h, t).unwrap() - ev.profile(x, y - h, t).unwrap()) / (2.0 * h);
        assert!((ev.profile_dy(x, y, t).unwrap() - fd).abs() < 1e-8);
    }

    #[test]
    fn spot_check_catches_bad_forcing() {
        assert!(spec("1 / (x - x)").check(1.0).is_err());
        let bounded = ForcingSpec::new(Expr::parse("3*sin(2*pi*x)").unwrap(), Some(2.0));
        assert!(bounded.check(1.0).is_err());
        let ok = ForcingSpec::new(Expr::parse("3*sin(2*pi*x)").unwrap(), Some(3.0));
        assert!(ok.check(1.0).is_ok());
    }
}
