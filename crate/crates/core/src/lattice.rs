//! Uniform grid, intervals, and lattice fields.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use crate::error::{CoreError, Result};

/// Minimum cell count for a usable lattice.
pub const MIN_CELLS: usize = 8;

/// Closed interval `[lo, hi]` on the x axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(CoreError::InvalidParameter(alloc::format!(
                "interval [{lo}, {hi}] is not a finite nonempty range"
            )));
        }
        Ok(Self { lo, hi })
    }

    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

/// Uniform cell-centered grid over `[x_min, x_max]` with `n` cells.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    x_min: f64,
    x_max: f64,
    n: usize,
}

impl Grid {
    pub fn new(x_min: f64, x_max: f64, n: usize) -> Result<Self> {
        if !(x_min.is_finite() && x_max.is_finite() && x_max > x_min) {
            return Err(CoreError::InvalidGrid(alloc::format!(
                "domain [{x_min}, {x_max}] is not a finite nonempty range"
            )));
        }
        if n < MIN_CELLS {
            return Err(CoreError::InvalidGrid(alloc::format!(
                "need at least {MIN_CELLS} cells, got {n}"
            )));
        }
        Ok(Self { x_min, x_max, n })
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Cell width.
    pub fn h(&self) -> f64 {
        (self.x_max - self.x_min) / self.n as f64
    }

    /// Center of cell `i`.
    pub fn center(&self, i: usize) -> f64 {
        debug_assert!(i < self.n);
        self.x_min + (i as f64 + 0.5) * self.h()
    }

    /// Position of face `i` (faces run `0..=n`).
    pub fn face(&self, i: usize) -> f64 {
        debug_assert!(i <= self.n);
        self.x_min + i as f64 * self.h()
    }

    pub fn centers(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(move |i| self.center(i))
    }

    /// Index of the cell whose half-open span `[face_i, face_{i+1})` contains `x`.
    pub fn cell_containing(&self, x: f64) -> Option<usize> {
        if x < self.x_min || x > self.x_max {
            return None;
        }
        let i = ((x - self.x_min) / self.h()) as usize;
        Some(i.min(self.n - 1))
    }

    /// Range of cells whose centers lie inside `region`.
    pub fn cells_in(&self, region: Interval) -> Range<usize> {
        let mut lo = self.n;
        let mut hi = 0;
        for i in 0..self.n {
            if region.contains(self.center(i)) {
                lo = lo.min(i);
                hi = hi.max(i + 1);
            }
        }
        lo..hi.max(lo)
    }

    /// Contiguous sub-grid made of the given cell range (same spacing).
    pub fn subgrid(&self, cells: Range<usize>) -> Result<Grid> {
        if cells.start >= cells.end || cells.end > self.n {
            return Err(CoreError::InvalidGrid(alloc::format!(
                "cell range {}..{} out of bounds for {} cells",
                cells.start,
                cells.end,
                self.n
            )));
        }
        Grid::new(self.face(cells.start), self.face(cells.end), cells.len())
    }
}

/// A scalar density sampled on the cell centers of a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeField {
    grid: Grid,
    values: Vec<f64>,
    time: f64,
}

impl LatticeField {
    pub fn new(grid: Grid, values: Vec<f64>, time: f64) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(CoreError::InvalidGrid(alloc::format!(
                "field has {} values for {} cells",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) || !time.is_finite() {
            return Err(CoreError::InvalidParameter(
                "field values and time must be finite".into(),
            ));
        }
        Ok(Self { grid, values, time })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.len()],
            time: 0.0,
        }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.centers().map(f).collect();
        Self::new(grid, values, 0.0)
    }

    /// Constant field carrying `mass` over `region`, zero elsewhere.
    pub fn uniform_on(grid: Grid, region: Interval, mass: f64) -> Result<Self> {
        let cells = grid.cells_in(region);
        if cells.is_empty() {
            return Err(CoreError::EmptyRegion);
        }
        let level = mass / (cells.len() as f64 * grid.h());
        let mut values = vec![0.0; grid.len()];
        for v in &mut values[cells] {
            *v = level;
        }
        Self::new(grid, values, 0.0)
    }

    /// All of `mass` loaded into the single cell containing `x0`.
    pub fn point_mass(grid: Grid, x0: f64, mass: f64) -> Result<Self> {
        let i = grid
            .cell_containing(x0)
            .ok_or_else(|| CoreError::InvalidParameter(alloc::format!("x0 = {x0} off grid")))?;
        let mut values = vec![0.0; grid.len()];
        values[i] = mass / grid.h();
        Self::new(grid, values, 0.0)
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub(crate) fn with_values(&self, values: Vec<f64>, time: f64) -> Self {
        debug_assert_eq!(values.len(), self.grid.len());
        Self {
            grid: self.grid,
            values,
            time,
        }
    }

    /// Total mass `Σ u_i · h`.
    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.h()
    }

    /// Mass restricted to cells whose centers lie in `region`.
    pub fn interior_mass(&self, region: Interval) -> f64 {
        let cells = self.grid.cells_in(region);
        self.values[cells].iter().sum::<f64>() * self.grid.h()
    }

    /// Rescaled copy with unit mass on `region` (values scaled everywhere).
    pub fn normalized_on(&self, region: Interval) -> Result<Self> {
        let m = self.interior_mass(region);
        if m <= 0.0 {
            return Err(CoreError::InvalidParameter(
                "cannot normalize a field with non-positive interior mass".into(),
            ));
        }
        let values = self.values.iter().map(|v| v / m).collect();
        Ok(Self {
            grid: self.grid,
            values,
            time: self.time,
        })
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
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
    fn grid_geometry() {
        let g = Grid::new(-0.5, 1.5, 64).unwrap();
        assert!((g.h() - 2.0 / 64.0).abs() < 1e-15);
        assert!((g.center(0) - (-0.5 + g.h() / 2.0)).abs() < 1e-15);
        assert!((g.face(64) - 1.5).abs() < 1e-15);
        assert_eq!(g.cell_containing(-0.5), Some(0));
        assert_eq!(g.cell_containing(1.5), Some(63));
        assert_eq!(g.cell_containing(2.0), None);
    }

    #[test]
    fn grid_rejects_tiny() {
        assert!(Grid::new(0.0, 1.0, 4).is_err());
        assert!(Grid::new(1.0, 0.0, 64).is_err());
    }

    #[test]
    fn subgrid_preserves_spacing() {
        let g = Grid::new(-0.2, 1.2, 560).unwrap();
        let cells = g.cells_in(Interval::new(0.0, 1.0).unwrap());
        let sub = g.subgrid(cells.clone()).unwrap();
        assert!((sub.h() - g.h()).abs() < 1e-15);
        assert_eq!(sub.len(), cells.len());
        // walls land on faces of the parent grid
        assert!((sub.x_min() - 0.0).abs() < 1e-12);
        assert!((sub.x_max() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn uniform_mass_accounting() {
        let g = Grid::new(0.0, 1.0, 64).unwrap();
        let f = LatticeField::uniform_on(g, Interval::new(0.0, 1.0).unwrap(), 1.0).unwrap();
        assert!((f.mass() - 1.0).abs() < 1e-12);
        assert!((f.interior_mass(Interval::new(0.0, 1.0).unwrap()) - 1.0).abs() < 1e-12);

        // half-loaded field: u = 2 on [0, 0.5], zero elsewhere
        let half = LatticeField::from_fn(g, |x| if x < 0.5 { 2.0 } else { 0.0 }).unwrap();
        assert!((half.interior_mass(Interval::new(0.0, 1.0).unwrap()) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn point_mass_lands_in_one_cell() {
        let g = Grid::new(0.0, 1.0, 64).unwrap();
        let f = LatticeField::point_mass(g, 0.5, 1.0).unwrap();
        assert!((f.mass() - 1.0).abs() < 1e-12);
        assert_eq!(f.values().iter().filter(|v| **v > 0.0).count(), 1);
    }

    #[test]
    fn zero_field_has_zero_mass() {
        let g = Grid::new(0.0, 1.0, 16).unwrap();
        assert_eq!(LatticeField::zeros(g).mass(), 0.0);
    }
}
