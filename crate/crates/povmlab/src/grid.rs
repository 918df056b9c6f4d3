//! Uniform periodic discretizations of the line and interval partitions.
//!
//! A [`GridSpace`] carries `n` sample points `x_k = (k - n/2) dx` on a box of
//! length `L = n dx` with periodic (Fourier) boundary conditions.  The dual
//! momentum grid is `p_j = (2 pi hbar / L) j` for `j in [-n/2, n/2)`; momentum
//! samples are produced in FFT index order so they can be applied directly
//! after a forward transform.

use crate::error::{LabError, Result};
use crate::hbar::PlanckConstant;

/// A uniform, periodic discretization of the line.
///
/// `n_points` must be even so the momentum grid `j in [-n/2, n/2)` is
/// symmetric up to one sample, mirroring the position grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpace {
    n_points: usize,
    box_length: f64,
}

impl GridSpace {
    /// Build a grid with `n_points` samples on a box of length `box_length`.
    ///
    /// Fails for odd `n_points`, `n_points < 4`, or a non-positive box.
    pub fn new(n_points: usize, box_length: f64) -> Result<Self> {
        if n_points < 4 {
            return Err(LabError::InvalidArgument(format!(
                "n_points = {n_points} must be at least 4"
            )));
        }
        if !n_points.is_multiple_of(2) {
            return Err(LabError::InvalidArgument(format!(
                "n_points = {n_points} must be even"
            )));
        }
        if !(box_length > 0.0) || !box_length.is_finite() {
            return Err(LabError::InvalidArgument(format!(
                "box_length = {box_length} must be positive and finite"
            )));
        }
        Ok(GridSpace {
            n_points,
            box_length,
        })
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn box_length(&self) -> f64 {
        self.box_length
    }

    /// Sample spacing `dx = L / n`.
    pub fn spacing(&self) -> f64 {
        self.box_length / self.n_points as f64
    }

    /// `x_k = (k - n/2) dx`.
    pub fn position(&self, k: usize) -> f64 {
        (k as f64 - self.n_points as f64 / 2.0) * self.spacing()
    }

    /// All sample positions, ascending.
    pub fn positions(&self) -> Vec<f64> {
        (0..self.n_points).map(|k| self.position(k)).collect()
    }

    /// Signed grid index of `x` (distance from the center in samples),
    /// if `x` lies on the grid within `tol` spacings.
    pub fn index_of(&self, x: f64, tol: f64) -> Option<i64> {
        let steps = x / self.spacing();
        let rounded = steps.round();
        if (steps - rounded).abs() <= tol {
            Some(rounded as i64)
        } else {
            None
        }
    }

    /// Momentum spacing `dp = 2 pi hbar / L`.
    pub fn momentum_spacing(&self, hbar: PlanckConstant) -> f64 {
        2.0 * std::f64::consts::PI * hbar.value() / self.box_length
    }

    /// Momentum sample for FFT bin `m`: `p = dp * j` with `j = m` for
    /// `m < n/2` and `j = m - n` otherwise.
    pub fn momentum_fft(&self, m: usize, hbar: PlanckConstant) -> f64 {
        let n = self.n_points;
        let j = if m < n / 2 {
            m as i64
        } else {
            m as i64 - n as i64
        };
        j as f64 * self.momentum_spacing(hbar)
    }

    /// All momentum samples in FFT bin order.
    pub fn momenta_fft(&self, hbar: PlanckConstant) -> Vec<f64> {
        (0..self.n_points)
            .map(|m| self.momentum_fft(m, hbar))
            .collect()
    }

    /// Largest momentum magnitude representable on the grid, `pi hbar / dx`.
    pub fn momentum_cutoff(&self, hbar: PlanckConstant) -> f64 {
        std::f64::consts::PI * hbar.value() / self.spacing()
    }
}

/// A half-open interval `[lo, hi)` used as an outcome cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Interval { lo, hi }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x < self.hi
    }

    /// Interval scaled by `s` (endpoints swap for negative `s`).
    pub fn scaled(&self, s: f64) -> Interval {
        if s >= 0.0 {
            Interval::new(self.lo * s, self.hi * s)
        } else {
            Interval::new(self.hi * s, self.lo * s)
        }
    }

    pub fn translated(&self, d: f64) -> Interval {
        Interval::new(self.lo + d, self.hi + d)
    }
}

/// An ordered list of pairwise disjoint cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    cells: Vec<Interval>,
}

impl Partition {
    /// Build from explicit cells; they must be nonempty, ordered and disjoint.
    pub fn new(cells: Vec<Interval>) -> Result<Self> {
        if cells.is_empty() {
            return Err(LabError::InvalidArgument(
                "partition needs at least one cell".into(),
            ));
        }
        for c in &cells {
            if !(c.lo < c.hi) {
                return Err(LabError::InvalidArgument(format!(
                    "degenerate cell [{}, {})",
                    c.lo, c.hi
                )));
            }
        }
        for w in cells.windows(2) {
            if w[0].hi > w[1].lo + 1e-12 * w[1].width().abs().max(1.0) {
                return Err(LabError::InvalidArgument(format!(
                    "cells [{}, {}) and [{}, {}) overlap or are out of order",
                    w[0].lo, w[0].hi, w[1].lo, w[1].hi
                )));
            }
        }
        Ok(Partition { cells })
    }

    /// Contiguous cells with the given boundaries.
    pub fn from_boundaries(boundaries: &[f64]) -> Result<Self> {
        if boundaries.len() < 2 {
            return Err(LabError::InvalidArgument(
                "need at least two boundaries".into(),
            ));
        }
        let cells = boundaries
            .windows(2)
            .map(|w| Interval::new(w[0], w[1]))
            .collect();
        Partition::new(cells)
    }

    /// Two half-line cells split at `x0`, truncated to the grid box.
    pub fn half_lines(space: &GridSpace, x0: f64) -> Result<Self> {
        let half = space.box_length() / 2.0;
        Partition::from_boundaries(&[-half, x0, half])
    }

    /// `n_cells` equal cells covering the full box of `space`.
    pub fn uniform_cover(space: &GridSpace, n_cells: usize) -> Result<Self> {
        if n_cells == 0 {
            return Err(LabError::InvalidArgument("n_cells must be > 0".into()));
        }
        let half = space.box_length() / 2.0;
        let w = space.box_length() / n_cells as f64;
        let boundaries: Vec<f64> = (0..=n_cells).map(|i| -half + i as f64 * w).collect();
        Partition::from_boundaries(&boundaries)
    }

    /// One cell per grid sample: the finest grid-aligned partition.
    pub fn finest(space: &GridSpace) -> Self {
        let h = space.spacing();
        let cells = (0..space.n_points())
            .map(|k| {
                let x = space.position(k);
                Interval::new(x - 0.5 * h, x + 0.5 * h)
            })
            .collect();
        Partition { cells }
    }

    pub fn cells(&self) -> &[Interval] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn scaled(&self, s: f64) -> Partition {
        let mut cells: Vec<Interval> = self.cells.iter().map(|c| c.scaled(s)).collect();
        if s < 0.0 {
            cells.reverse();
        }
        Partition { cells }
    }

    pub fn translated(&self, d: f64) -> Partition {
        Partition {
            cells: self.cells.iter().map(|c| c.translated(d)).collect(),
        }
    }

    /// Check that consecutive cells share boundaries and jointly cover
    /// `[lo, hi]` within `tol`.
    pub fn check_covers(&self, lo: f64, hi: f64, tol: f64) -> Result<()> {
        if self.cells[0].lo > lo + tol {
            return Err(LabError::Coverage(format!(
                "first cell starts at {} > {}",
                self.cells[0].lo, lo
            )));
        }
        if self.cells[self.cells.len() - 1].hi < hi - tol {
            return Err(LabError::Coverage(format!(
                "last cell ends at {} < {}",
                self.cells[self.cells.len() - 1].hi,
                hi
            )));
        }
        for w in self.cells.windows(2) {
            if (w[0].hi - w[1].lo).abs() > tol {
                return Err(LabError::Coverage(format!(
                    "gap between {} and {}",
                    w[0].hi, w[1].lo
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn grid_arithmetic() {
        let g = GridSpace::new(4, 4.0).unwrap();
        assert_abs_diff_eq!(g.spacing(), 1.0);
        assert_eq!(g.positions(), vec![-2.0, -1.0, 0.0, 1.0]);

        let g = GridSpace::new(128, 20.0).unwrap();
        assert_abs_diff_eq!(g.spacing(), 0.15625);
    }

    #[test]
    fn grid_rejects_bad_arguments() {
        assert!(GridSpace::new(3, 4.0).is_err());
        assert!(GridSpace::new(2, 4.0).is_err());
        assert!(GridSpace::new(8, 0.0).is_err());
        assert!(GridSpace::new(8, -1.0).is_err());
    }

    #[test]
    fn momentum_grid_is_fft_ordered() {
        let g = GridSpace::new(8, 8.0).unwrap();
        let hbar = PlanckConstant::default();
        let dp = g.momentum_spacing(hbar);
        assert_abs_diff_eq!(dp, std::f64::consts::PI / 4.0);
        let p = g.momenta_fft(hbar);
        assert_abs_diff_eq!(p[0], 0.0);
        assert_abs_diff_eq!(p[3], 3.0 * dp);
        assert_abs_diff_eq!(p[4], -4.0 * dp);
        assert_abs_diff_eq!(p[7], -dp);
    }

    #[test]
    fn partition_validation() {
        assert!(Partition::from_boundaries(&[0.0, 1.0, 2.0]).is_ok());
        assert!(Partition::new(vec![Interval::new(0.0, 0.0)]).is_err());
        assert!(Partition::new(vec![Interval::new(0.0, 2.0), Interval::new(1.0, 3.0)]).is_err());
    }

    #[test]
    fn partition_coverage() {
        let g = GridSpace::new(16, 8.0).unwrap();
        let p = Partition::uniform_cover(&g, 4).unwrap();
        assert_eq!(p.len(), 4);
        p.check_covers(-4.0, 4.0, 1e-12).unwrap();
        let gap = Partition::new(vec![Interval::new(-4.0, 0.0), Interval::new(1.0, 4.0)]).unwrap();
        assert!(gap.check_covers(-4.0, 4.0, 1e-12).is_err());
    }
}
