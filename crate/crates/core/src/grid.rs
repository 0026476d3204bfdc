//! Uniform periodic grid on the unit footprint and nodal fields on it.

use crate::error::{Error, Result};

/// Uniform 1-periodic grid with `n` nodes at `x_j = j / n`.
///
/// Only `n` is stored, so `n * dx == 1` holds exactly in the representation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PeriodicGrid {
    n: usize,
}

impl PeriodicGrid {
    pub const MIN_NODES: usize = 8;

    /// Builds a grid; `n` must be even and at least 8.
    pub fn new(n: usize) -> Result<Self> {
        if n < Self::MIN_NODES {
            return Err(Error::GridTooSmall(n));
        }
        if !n.is_multiple_of(2) {
            return Err(Error::OddGrid(n));
        }
        Ok(Self { n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dx(&self) -> f64 {
        1.0 / self.n as f64
    }

    pub fn node(&self, j: usize) -> f64 {
        j as f64 / self.n as f64
    }

    pub fn nodes(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        (0..self.n).map(move |j| self.node(j))
    }

    /// Samples `f` at every node.
    pub fn sample(&self, f: impl Fn(f64) -> f64) -> GridField {
        GridField {
            grid: *self,
            values: self.nodes().map(f).collect(),
        }
    }

    pub fn constant(&self, c: f64) -> GridField {
        GridField {
            grid: *self,
            values: vec![c; self.n],
        }
    }

    pub fn zeros(&self) -> GridField {
        self.constant(0.0)
    }
}

/// One real sample per grid node, interpreted as a 1-periodic function.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    grid: PeriodicGrid,
    values: Vec<f64>,
}

impl GridField {
    /// Wraps nodal values; rejects wrong lengths and non-finite entries.
    pub fn new(grid: PeriodicGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n() {
            return Err(Error::LengthMismatch {
                expected: grid.n(),
                got: values.len(),
            });
        }
        if let Some(node) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { node });
        }
        Ok(Self { grid, values })
    }

    /// Wraps values without the finiteness scan. Length is still checked in debug builds.
    pub(crate) fn from_raw(grid: PeriodicGrid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.n());
        Self { grid, values }
    }

    pub fn grid(&self) -> PeriodicGrid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> GridField {
        Self::from_raw(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_map(&self, other: &GridField, f: impl Fn(f64, f64) -> f64) -> GridField {
        assert_eq!(self.grid, other.grid, "fields live on different grids");
        Self::from_raw(
            self.grid,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        )
    }

    pub fn scale(&self, a: f64) -> GridField {
        self.map(|v| a * v)
    }

    pub fn add(&self, other: &GridField) -> GridField {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &GridField) -> GridField {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &GridField) -> GridField {
        self.zip_map(other, |a, b| a * b)
    }

    /// `a * self + b * other`
    pub fn lincomb(&self, a: f64, other: &GridField, b: f64) -> GridField {
        self.zip_map(other, |x, y| a * x + b * y)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Index and value of the smallest sample.
    pub fn argmin(&self) -> (usize, f64) {
        self.values
            .iter()
            .copied()
            .enumerate()
            .fold(
                (0, f64::INFINITY),
                |(i, m), (j, v)| if v < m { (j, v) } else { (i, m) },
            )
    }

    pub fn min(&self) -> f64 {
        self.argmin().1
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eight_node_grid() {
        let g = PeriodicGrid::new(8).unwrap();
        assert_eq!(g.dx(), 0.125);
        assert_eq!(g.node(3), 0.375);
        assert_eq!(g.n() as f64 * g.dx(), 1.0);
    }

    #[test]
    fn large_grid_starts_at_zero() {
        let g = PeriodicGrid::new(256).unwrap();
        assert_eq!(g.dx(), 1.0 / 256.0);
        assert_eq!(g.node(0), 0.0);
        assert_eq!(g.node(255), 1.0 - g.dx());
        let xs: Vec<f64> = g.nodes().collect();
        assert!(xs.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn rejects_small_and_odd() {
        assert!(matches!(PeriodicGrid::new(7), Err(Error::GridTooSmall(7))));
        assert!(PeriodicGrid::new(7)
            .unwrap_err()
            .to_string()
            .contains("grid too small"));
        assert!(matches!(PeriodicGrid::new(9), Err(Error::OddGrid(9))));
    }

    #[test]
    fn field_validation() {
        let g = PeriodicGrid::new(8).unwrap();
        assert!(GridField::new(g, vec![1.0; 7]).is_err());
        let mut v = vec![1.0; 8];
        v[5] = f64::NAN;
        assert!(matches!(
            GridField::new(g, v),
            Err(Error::NonFinite { node: 5 })
        ));
    }

    #[test]
    fn argmin_reports_first_minimum() {
        let g = PeriodicGrid::new(8).unwrap();
        let f = GridField::new(g, vec![3.0, 2.0, 1.0, 1.0, 5.0, 6.0, 7.0, 8.0]).unwrap();
        assert_eq!(f.argmin(), (2, 1.0));
        assert_eq!(f.max(), 8.0);
    }
}
