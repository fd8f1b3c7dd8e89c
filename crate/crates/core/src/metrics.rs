//! Field-comparison norms, histogram binning of lattice fields, and the
//! boundary-layer width measurement.

use alloc::vec::Vec;

use crate::error::{CoreError, Result};
use crate::lattice::{Interval, LatticeField};
use crate::walkers::BinSpec;

/// Relative difference norms of a field pair over a region (`b` is the
/// reference).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldMetrics {
    /// `‖a − b‖₂ / ‖b‖₂` over the region cells.
    pub rel_l2: f64,
    /// `max|a − b| / max|b|` over the region cells.
    pub rel_sup: f64,
    pub cells: usize,
}

/// Compare two fields on a shared grid, restricted to `region`.
pub fn compare_fields(a: &LatticeField, b: &LatticeField, region: Interval) -> Result<FieldMetrics> {
    if a.grid() != b.grid() {
        return Err(CoreError::GridMismatch);
    }
    let cells = a.grid().cells_in(region);
    if cells.is_empty() {
        return Err(CoreError::EmptyRegion);
    }
    let mut diff2 = 0.0;
    let mut ref2 = 0.0;
    let mut diff_sup: f64 = 0.0;
    let mut ref_sup: f64 = 0.0;
    for i in cells.clone() {
        let d = a.values()[i] - b.values()[i];
        diff2 += d * d;
        ref2 += b.values()[i] * b.values()[i];
        diff_sup = diff_sup.max(d.abs());
        ref_sup = ref_sup.max(b.values()[i].abs());
    }
    if ref2 == 0.0 {
        return Err(CoreError::InvalidParameter(
            "reference field is zero on the region".into(),
        ));
    }
    Ok(FieldMetrics {
        rel_l2: libm::sqrt(diff2 / ref2),
        rel_sup: diff_sup / ref_sup,
        cells: cells.len(),
    })
}

/// Per-wall widths of the region where two normalized fields disagree.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayerWidths {
    pub left: f64,
    pub right: f64,
}

impl LayerWidths {
    pub fn max(&self) -> f64 {
        if self.left > self.right {
            self.left
        } else {
            self.right
        }
    }
}

/// Distance from each wall of `interior` to the innermost cell where the
/// pointwise relative discrepancy between the two fields exceeds `threshold`.
///
/// Both fields should be normalized to unit interior mass; the reference for
/// the relative discrepancy is `pde` (floored at a small fraction of its peak
/// so near-wall zeros do not blow up the ratio). A width of zero means the
/// discrepancy never exceeds the threshold on that half.
pub fn boundary_layer_width(
    me: &LatticeField,
    pde: &LatticeField,
    interior: Interval,
    threshold: f64,
) -> Result<LayerWidths> {
    if me.grid() != pde.grid() {
        return Err(CoreError::GridMismatch);
    }
    if !(threshold > 0.0) {
        return Err(CoreError::InvalidParameter(
            "threshold must be positive".into(),
        ));
    }
    let grid = me.grid();
    let cells = grid.cells_in(interior);
    if cells.is_empty() {
        return Err(CoreError::EmptyRegion);
    }
    let peak = pde.values()[cells.clone()]
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()));
    let floor = 1e-6 * peak;
    let exceeds = |i: usize| {
        let reference = pde.values()[i].abs().max(floor);
        (me.values()[i] - pde.values()[i]).abs() / reference > threshold
    };
    let mid = (cells.start + cells.end) / 2;

    // innermost exceeding cell scanning inward from each wall
    let mut left = 0.0;
    for i in cells.clone() {
        if i >= mid {
            break;
        }
        if exceeds(i) {
            left = grid.center(i) - interior.lo;
        }
    }
    let mut right = 0.0;
    for i in cells.clone().rev() {
        if i < mid {
            break;
        }
        if exceeds(i) {
            right = interior.hi - grid.center(i);
        }
    }
    Ok(LayerWidths { left, right })
}

/// Bin a lattice field into histogram bins by exact mass overlap, returning
/// per-bin average densities (comparable with walker histograms).
pub fn bin_field(field: &LatticeField, bins: BinSpec) -> Vec<f64> {
    let grid = field.grid();
    let h = grid.h();
    let w = bins.width();
    let mut mass = alloc::vec![0.0; bins.count];
    for i in 0..grid.len() {
        let cell_lo = grid.face(i);
        let cell_hi = grid.face(i + 1);
        let u = field.values()[i];
        if u == 0.0 {
            continue;
        }
        for b in 0..bins.count {
            let lo = bins.edge(b).max(cell_lo);
            let hi = bins.edge(b + 1).min(cell_hi);
            if hi > lo {
                mass[b] += u * (hi - lo);
            }
        }
    }
    let _ = h;
    mass.iter().map(|m| m / w).collect()
}

/// Least-squares slope of `log y` against `log x` (power-law exponent).
pub fn fit_log_slope(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 2 {
        return Err(CoreError::FitRejected("need at least two points".into()));
    }
    let logged: Vec<(f64, f64)> = points
        .iter()
        .map(|(x, y)| (libm::log(*x), libm::log(y.abs())))
        .collect();
    Ok(crate::stats::ls_slope(&logged))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Grid;

    #[test]
    fn identical_fields_have_zero_metrics() {
        let grid = Grid::new(0.0, 1.0, 32).unwrap();
        let f = LatticeField::from_fn(grid, |x| 1.0 + x).unwrap();
        let m = compare_fields(&f, &f, Interval::new(0.0, 1.0).unwrap()).unwrap();
        assert_eq!(m.rel_l2, 0.0);
        assert_eq!(m.rel_sup, 0.0);
    }

    #[test]
    fn doubled_field_has_unit_relative_error() {
        let grid = Grid::new(0.0, 1.0, 32).unwrap();
        let b = LatticeField::from_fn(grid, |_| 1.5).unwrap();
        let a = LatticeField::from_fn(grid, |_| 3.0).unwrap();
        let m = compare_fields(&a, &b, Interval::new(0.0, 1.0).unwrap()).unwrap();
        assert!((m.rel_l2 - 1.0).abs() < 1e-12);
        assert!((m.rel_sup - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mismatched_grids_are_rejected() {
        let a = LatticeField::zeros(Grid::new(0.0, 1.0, 32).unwrap());
        let b = LatticeField::zeros(Grid::new(0.0, 1.0, 64).unwrap());
        assert!(matches!(
            compare_fields(&a, &b, Interval::new(0.0, 1.0).unwrap()),
            Err(CoreError::GridMismatch)
        ));
    }

    #[test]
    fn layer_width_zero_for_identical_fields() {
        let grid = Grid::new(0.0, 1.0, 64).unwrap();
        let f = LatticeField::from_fn(grid, |x| (core::f64::consts::PI * x).sin()).unwrap();
        let w =
            boundary_layer_width(&f, &f, Interval::new(0.0, 1.0).unwrap(), 0.05).unwrap();
        assert_eq!(w.max(), 0.0);
    }

    #[test]
    fn layer_width_finds_a_synthetic_near_wall_defect() {
        let grid = Grid::new(0.0, 1.0, 100).unwrap();
        let pde = LatticeField::from_fn(grid, |x| (core::f64::consts::PI * x).sin()).unwrap();
        // inflate the field by 20% within 0.08 of the right wall only
        let me = LatticeField::from_fn(grid, |x| {
            let base = (core::f64::consts::PI * x).sin();
            if x > 0.92 {
                1.2 * base
            } else {
                base
            }
        })
        .unwrap();
        let w = boundary_layer_width(&me, &pde, Interval::new(0.0, 1.0).unwrap(), 0.05)
            .unwrap();
        assert_eq!(w.left, 0.0);
        assert!(w.right > 0.0 && w.right <= 0.085, "right width {}", w.right);
    }

    #[test]
    fn binning_preserves_mass_on_aligned_bins() {
        let grid = Grid::new(0.0, 1.0, 64).unwrap();
        let f = LatticeField::from_fn(grid, |x| 1.0 + x * x).unwrap();
        let bins = BinSpec::new(0.0, 1.0, 16).unwrap();
        let dens = bin_field(&f, bins);
        let mass: f64 = dens.iter().sum::<f64>() * bins.width();
        assert!((mass - f.mass()).abs() < 1e-12);
    }

    #[test]
    fn log_slope_of_a_power_law() {
        let pts: Vec<(f64, f64)> = [5.0, 10.0, 20.0, 40.0]
            .iter()
            .map(|n| (*n, 1.2 / n))
            .collect();
        let slope = fit_log_slope(&pts).unwrap();
        assert!((slope + 1.0).abs() < 1e-12);
    }
}
