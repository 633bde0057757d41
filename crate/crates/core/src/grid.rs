//! Uniform grids and probability densities tabulated on them.
//!
//! All integrals use the composite trapezoid rule. Densities are stored
//! normalized so that their trapezoid integral is one.

use crate::error::{Error, Result};

/// Number of outermost cells inspected by the boundary-mass check.
pub const BOUNDARY_CELLS: usize = 2;
/// Mass fraction in the outer cells above which a density is deemed truncated.
pub const BOUNDARY_TOLERANCE: f64 = 0.01;
/// Default node count.
pub const DEFAULT_POINTS: usize = 2001;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformGrid {
    lo: f64,
    hi: f64,
    n: usize,
}

impl UniformGrid {
    pub fn new(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && hi > lo) {
            return Err(Error::InvalidInput(format!(
                "grid bounds must be finite with lo < hi, got [{lo}, {hi}]"
            )));
        }
        if n < 3 {
            return Err(Error::InvalidInput(format!(
                "grid needs at least 3 points, got {n}"
            )));
        }
        Ok(Self { lo, hi, n })
    }

    /// `[center - 10 scale, center + 10 scale]` with `n` points.
    pub fn centered(center: f64, scale: f64, n: usize) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "scale",
                value: scale,
                reason: "grid scale hint must be positive",
            });
        }
        Self::new(center - 10.0 * scale, center + 10.0 * scale, n)
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dx(&self) -> f64 {
        (self.hi - self.lo) / (self.n - 1) as f64
    }

    #[inline]
    pub fn node(&self, i: usize) -> f64 {
        if i == self.n - 1 {
            self.hi
        } else {
            self.lo + i as f64 * self.dx()
        }
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.node(i)).collect()
    }

    /// Trapezoid quadrature weight of node `i`.
    #[inline]
    pub fn weight(&self, i: usize) -> f64 {
        if i == 0 || i == self.n - 1 {
            0.5 * self.dx()
        } else {
            self.dx()
        }
    }

    pub fn weights(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.weight(i)).collect()
    }

    pub fn integrate(&self, f: &[f64]) -> f64 {
        debug_assert_eq!(f.len(), self.n);
        f.iter().enumerate().map(|(i, v)| self.weight(i) * v).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridDensity {
    grid: UniformGrid,
    values: Vec<f64>,
}

impl GridDensity {
    /// Normalizes `values` to unit trapezoid mass.
    pub fn from_values(grid: UniformGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::shape(
                format!("{} grid values", grid.len()),
                values.len(),
            ));
        }
        if let Some((i, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || **v < 0.0)
        {
            return Err(Error::InvalidInput(format!(
                "density value at node {i} is {v}; values must be finite and nonnegative"
            )));
        }
        let mass = grid.integrate(&values);
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::NonIntegrable(format!(
                "density has trapezoid mass {mass} on [{}, {}]",
                grid.lo(),
                grid.hi()
            )));
        }
        let values = values.into_iter().map(|v| v / mass).collect();
        Ok(Self { grid, values })
    }

    /// Builds a density from log-values with log-sum-exp stabilization.
    /// `-inf` entries are exact zeros.
    pub fn from_log_values(grid: UniformGrid, log_values: &[f64]) -> Result<Self> {
        let values = normalized_exp(&grid, log_values)?;
        Ok(Self { grid, values })
    }

    pub fn normal(grid: UniformGrid, mean: f64, sd: f64) -> Result<Self> {
        crate::params::require_positive("sd", sd)?;
        let logv: Vec<f64> = (0..grid.len())
            .map(|i| {
                let z = (grid.node(i) - mean) / sd;
                -0.5 * z * z
            })
            .collect();
        Self::from_log_values(grid, &logv)
    }

    /// Narrow normal proxy for a point mass: standard deviation of three grid steps.
    pub fn dirac_proxy(grid: UniformGrid, point: f64) -> Result<Self> {
        Self::normal(grid, point, 3.0 * grid.dx())
    }

    pub fn uniform(grid: UniformGrid) -> Self {
        let v = 1.0 / (grid.hi() - grid.lo());
        Self {
            grid,
            values: vec![v; grid.len()],
        }
    }

    /// Exponential density `rate * exp(-rate (x - lo))`; the grid's lower
    /// bound is taken as the left end of the support.
    pub fn exponential(grid: UniformGrid, rate: f64) -> Result<Self> {
        crate::params::require_positive("rate", rate)?;
        let logv: Vec<f64> = (0..grid.len())
            .map(|i| -rate * (grid.node(i) - grid.lo()))
            .collect();
        Self::from_log_values(grid, &logv)
    }

    pub fn grid(&self) -> &UniformGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn integral(&self) -> f64 {
        self.grid.integrate(&self.values)
    }

    /// Trapezoid integral of `f * density`.
    pub fn expect(&self, f: impl Fn(f64) -> f64) -> f64 {
        (0..self.grid.len())
            .map(|i| self.grid.weight(i) * self.values[i] * f(self.grid.node(i)))
            .sum()
    }

    pub fn mean(&self) -> f64 {
        self.expect(|x| x)
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.expect(|x| (x - m) * (x - m))
    }

    /// Trapezoid L1 distance to another density on the same grid.
    pub fn l1_distance(&self, other: &GridDensity) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::InvalidInput(
                "densities live on different grids".into(),
            ));
        }
        let diff: Vec<f64> = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .collect();
        Ok(self.grid.integrate(&diff))
    }

    /// Fractions of mass in the outermost [`BOUNDARY_CELLS`] cells at (left, right).
    pub fn boundary_fractions(&self) -> (f64, f64) {
        boundary_fractions(&self.grid, &self.values)
    }

    /// Fails when the density carries more than [`BOUNDARY_TOLERANCE`] of its
    /// mass in the outer cells at an edge *and* more than `reference` does
    /// there. Passing the reference density lets a support that genuinely
    /// begins at a grid edge (an exponential at zero) pass, while mass pushed
    /// onto an edge by tilting or transport is reported.
    pub fn check_boundary(&self, reference: Option<&GridDensity>) -> Result<()> {
        let (l, r) = self.boundary_fractions();
        let (rl, rr) = reference.map_or((0.0, 0.0), |d| d.boundary_fractions());
        if l > BOUNDARY_TOLERANCE && l > rl {
            return Err(Error::BoundaryMass {
                edge: "lower",
                fraction: l,
            });
        }
        if r > BOUNDARY_TOLERANCE && r > rr {
            return Err(Error::BoundaryMass {
                edge: "upper",
                fraction: r,
            });
        }
        Ok(())
    }
}

pub(crate) fn boundary_fractions(grid: &UniformGrid, values: &[f64]) -> (f64, f64) {
    let n = grid.len();
    let dx = grid.dx();
    let k = BOUNDARY_CELLS.min(n - 1);
    // trapezoid mass of the first/last k cells
    let cell = |i: usize| 0.5 * dx * (values[i] + values[i + 1]);
    let left: f64 = (0..k).map(cell).sum();
    let right: f64 = (n - 1 - k..n - 1).map(cell).sum();
    let total = grid.integrate(values);
    (left / total, right / total)
}

/// `exp(log_values)` scaled to unit trapezoid mass.
pub(crate) fn normalized_exp(grid: &UniformGrid, log_values: &[f64]) -> Result<Vec<f64>> {
    if log_values.len() != grid.len() {
        return Err(Error::shape(
            format!("{} grid values", grid.len()),
            log_values.len(),
        ));
    }
    let shift = log_values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !shift.is_finite() {
        return Err(Error::NonIntegrable(format!(
            "log-density maximum is {shift} on [{}, {}]",
            grid.lo(),
            grid.hi()
        )));
    }
    let mut values: Vec<f64> = log_values.iter().map(|l| (l - shift).exp()).collect();
    let mass = grid.integrate(&values);
    if !(mass > 0.0 && mass.is_finite()) {
        return Err(Error::NonIntegrable(format!(
            "normalizer {mass} after stabilization"
        )));
    }
    for v in &mut values {
        *v /= mass;
    }
    Ok(values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_on_unit_interval_has_mean_half() {
        let g = UniformGrid::new(0.0, 1.0, 101).unwrap();
        let u = GridDensity::uniform(g);
        assert!((u.integral() - 1.0).abs() < 1e-12);
        assert!((u.mean() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn normal_moments_match() {
        let g = UniformGrid::centered(0.3, 0.5, 2001).unwrap();
        let d = GridDensity::normal(g, 0.3, 0.5).unwrap();
        assert!((d.integral() - 1.0).abs() < 1e-10);
        assert!((d.mean() - 0.3).abs() < 1e-10);
        assert!((d.variance() - 0.25).abs() < 1e-8);
    }

    #[test]
    fn last_node_is_exactly_hi() {
        let g = UniformGrid::new(-1.0, 0.7, 17).unwrap();
        assert_eq!(g.node(16), 0.7);
        assert_eq!(g.node(0), -1.0);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(UniformGrid::new(1.0, 1.0, 10).is_err());
        assert!(UniformGrid::new(0.0, 1.0, 2).is_err());
        let g = UniformGrid::new(0.0, 1.0, 5).unwrap();
        assert!(GridDensity::from_values(g, vec![0.0; 5]).is_err());
        assert!(GridDensity::from_values(g, vec![1.0, -1.0, 1.0, 1.0, 1.0]).is_err());
        assert!(GridDensity::from_values(g, vec![1.0; 4]).is_err());
    }

    #[test]
    fn boundary_check_respects_reference() {
        let g = UniformGrid::new(0.0, 2.0, 201).unwrap();
        let expo = GridDensity::exponential(g, 1.0).unwrap();
        assert!(expo.boundary_fractions().0 > BOUNDARY_TOLERANCE);
        assert!(expo.check_boundary(Some(&expo)).is_ok());
        assert!(expo.check_boundary(None).is_err());
    }
}
