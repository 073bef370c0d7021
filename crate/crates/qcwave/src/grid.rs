//! Uniform sampling grids.
//!
//! A [`Grid1D`] holds `n_points` samples on the closed interval
//! `[x_min, x_max]`. Periodic schemes treat the samples as one period of
//! length `n_points * dx`; Dirichlet schemes pin the two end samples to zero.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_POINTS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    x_min: f64,
    x_max: f64,
    n_points: usize,
}

impl Grid1D {
    pub fn new(x_min: f64, x_max: f64, n_points: usize) -> Result<Self> {
        if n_points < MIN_POINTS {
            return Err(Error::InvalidGrid(format!(
                "n_points = {n_points} < {MIN_POINTS}"
            )));
        }
        if !(x_min.is_finite() && x_max.is_finite()) || x_max <= x_min {
            return Err(Error::InvalidGrid(format!(
                "need x_max > x_min, got [{x_min}, {x_max}]"
            )));
        }
        Ok(Self {
            x_min,
            x_max,
            n_points,
        })
    }

    /// Grid whose spacing is `dx` and whose samples are symmetric about zero.
    pub fn centered(n_points: usize, dx: f64) -> Result<Self> {
        let half = 0.5 * dx * (n_points as f64 - 1.0);
        Self::new(-half, half, n_points)
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn len(&self) -> usize {
        self.n_points
    }

    pub fn is_empty(&self) -> bool {
        self.n_points == 0
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / (self.n_points as f64 - 1.0)
    }

    /// Period length used by spectral (periodic) operators.
    pub fn period(&self) -> f64 {
        self.dx() * self.n_points as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + self.dx() * i as f64
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n_points).map(|i| self.x(i)).collect()
    }

    /// Angular wavenumbers in FFT order for the periodic extension.
    pub fn wavenumbers(&self) -> Vec<f64> {
        let n = self.n_points;
        let dk = 2.0 * std::f64::consts::PI / self.period();
        (0..n)
            .map(|j| {
                let j = j as i64;
                let j = if j <= (n as i64 - 1) / 2 { j } else { j - n as i64 };
                dk * j as f64
            })
            .collect()
    }

    /// Fractional index of `x` on the grid (not clamped).
    pub fn locate(&self, x: f64) -> f64 {
        (x - self.x_min) / self.dx()
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.x_min && x <= self.x_max
    }

    /// Trapezoid-free Riemann sum: `dx * sum(f)`.
    pub fn integrate(&self, f: impl IntoIterator<Item = f64>) -> f64 {
        f.into_iter().sum::<f64>() * self.dx()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid2D {
    pub axis1: Grid1D,
    pub axis2: Grid1D,
}

impl Grid2D {
    pub fn new(axis1: Grid1D, axis2: Grid1D) -> Self {
        Self { axis1, axis2 }
    }

    pub fn len(&self) -> usize {
        self.axis1.len() * self.axis2.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.axis1.len(), self.axis2.len())
    }

    /// Row-major flat index, axis1 outer.
    pub fn index(&self, i1: usize, i2: usize) -> usize {
        i1 * self.axis2.len() + i2
    }

    pub fn cell_area(&self) -> f64 {
        self.axis1.dx() * self.axis2.dx()
    }
}

/// Either grid shape; a field lives on exactly one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Grid {
    One(Grid1D),
    Two(Grid2D),
}

impl Grid {
    pub fn len(&self) -> usize {
        match self {
            Grid::One(g) => g.len(),
            Grid::Two(g) => g.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dims(&self) -> usize {
        match self {
            Grid::One(_) => 1,
            Grid::Two(_) => 2,
        }
    }

    pub fn cell_volume(&self) -> f64 {
        match self {
            Grid::One(g) => g.dx(),
            Grid::Two(g) => g.cell_area(),
        }
    }

    pub fn as_1d(&self) -> Option<&Grid1D> {
        match self {
            Grid::One(g) => Some(g),
            Grid::Two(_) => None,
        }
    }

    pub fn as_2d(&self) -> Option<&Grid2D> {
        match self {
            Grid::Two(g) => Some(g),
            Grid::One(_) => None,
        }
    }

    /// The grid along degree of freedom `axis` (0 or 1).
    pub fn axis(&self, axis: usize) -> &Grid1D {
        match (self, axis) {
            (Grid::One(g), 0) => g,
            (Grid::Two(g), 0) => &g.axis1,
            (Grid::Two(g), 1) => &g.axis2,
            _ => panic!("axis {axis} out of range for {}-D grid", self.dims()),
        }
    }
}

impl From<Grid1D> for Grid {
    fn from(g: Grid1D) -> Self {
        Grid::One(g)
    }
}

impl From<Grid2D> for Grid {
    fn from(g: Grid2D) -> Self {
        Grid::Two(g)
    }
}

/// How finite-difference stencils treat the ends of a line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    /// One-sided second-order stencils on the two outermost rows.
    #[default]
    OneSided,
    /// Samples wrap around.
    Periodic,
    /// End samples are hard walls; values beyond them are odd reflections.
    Dirichlet,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_small_or_inverted_grids() {
        assert!(Grid1D::new(0.0, 1.0, 7).is_err());
        assert!(Grid1D::new(1.0, 1.0, 16).is_err());
        assert!(Grid1D::new(2.0, 1.0, 16).is_err());
        assert!(Grid1D::new(0.0, f64::NAN, 16).is_err());
    }

    #[test]
    fn spacing_and_points() {
        let g = Grid1D::new(0.0, 1.0, 11).unwrap();
        assert!((g.dx() - 0.1).abs() < 1e-15);
        assert_eq!(g.points().len(), 11);
        assert!((g.x(10) - 1.0).abs() < 1e-15);
        assert!((g.period() - 1.1).abs() < 1e-14);
    }

    #[test]
    fn wavenumbers_fft_order() {
        let g = Grid1D::new(0.0, 7.0, 8).unwrap();
        let k = g.wavenumbers();
        let dk = 2.0 * std::f64::consts::PI / 8.0;
        assert_eq!(k[0], 0.0);
        assert!((k[1] - dk).abs() < 1e-15);
        assert!((k[4] + 4.0 * dk).abs() < 1e-14);
        assert!((k[7] + dk).abs() < 1e-15);
    }

    #[test]
    fn centered_grid_is_symmetric() {
        let g = Grid1D::centered(16, 0.5).unwrap();
        assert!((g.x_min() + g.x_max()).abs() < 1e-15);
        assert!((g.dx() - 0.5).abs() < 1e-15);
    }
}
