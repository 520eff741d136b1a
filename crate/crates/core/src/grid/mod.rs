//! Uniform 1-D grids, spectral machinery, state containers and observables.

mod moments;
mod snapshot;
mod spectral;
mod state;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use moments::{compute_density_moments, compute_moments, Moments};
pub use snapshot::{read_snapshot_binary, write_snapshot_binary, write_snapshot_csv, Snapshot};
pub use spectral::{mean_field_potential, mean_field_potential_direct, Convolver, Spectral};
pub use state::{
    cat_state, gaussian_packet, gaussian_with_exponent, DensityMatrix, StateError, WaveFunction,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("bad grid dimensions: {0}")]
    BadDimensions(String),
}

/// `n` points spanning `[-L/2, L/2)` with spacing `h = L / n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    n: usize,
    length: f64,
    padding: usize,
}

pub fn make_grid(n: usize, length: f64, padding: usize) -> Result<GridSpec, GridError> {
    if n < 16 || !n.is_power_of_two() {
        return Err(GridError::BadDimensions(format!(
            "n must be a power of two >= 16, got {n}"
        )));
    }
    if !(length.is_finite() && length > 0.0) {
        return Err(GridError::BadDimensions(format!(
            "length must be positive, got {length}"
        )));
    }
    if padding < 2 {
        return Err(GridError::BadDimensions(format!(
            "aperiodic convolution needs padding >= 2, got {padding}"
        )));
    }
    Ok(GridSpec { n, length, padding })
}

impl GridSpec {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn padding(&self) -> usize {
        self.padding
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.n as f64
    }

    pub fn padded_len(&self) -> usize {
        self.n * self.padding
    }

    pub fn x(&self, i: usize) -> f64 {
        -0.5 * self.length + i as f64 * self.spacing()
    }

    pub fn positions(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.x(i)).collect()
    }

    /// FFT-ordered angular wavenumbers.
    pub fn wavenumbers(&self) -> Vec<f64> {
        let dk = 2.0 * std::f64::consts::PI / self.length;
        (0..self.n)
            .map(|j| {
                let m = if j < self.n / 2 {
                    j as f64
                } else {
                    j as f64 - self.n as f64
                };
                m * dk
            })
            .collect()
    }

    /// Index of the grid point nearest to `x`, clamped to the grid.
    pub fn index_of(&self, x: f64) -> usize {
        let f = ((x + 0.5 * self.length) / self.spacing()).round();
        f.clamp(0.0, (self.n - 1) as f64) as usize
    }

    /// Rule-of-thumb grid for a two-packet state: `L >= 8 (d + 6 w)` and `h <= w / 8`.
    pub fn suggested(separation: f64, width: f64, padding: usize) -> Result<Self, GridError> {
        let length = 8.0 * (separation + 6.0 * width);
        let need = (length / (width / 8.0)).ceil() as usize;
        let n = need.max(16).next_power_of_two();
        make_grid(n, length, padding)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spacing_and_validation() {
        let g = make_grid(16, 16.0, 2).unwrap();
        assert_eq!(g.spacing(), 1.0);
        assert_eq!(g.x(0), -8.0);
        assert_eq!(g.x(8), 0.0);
        assert!(make_grid(15, 16.0, 2).is_err());
        assert!(make_grid(8, 16.0, 2).is_err());
        assert!(make_grid(16, 0.0, 2).is_err());
        assert!(make_grid(16, 1.0, 1).is_err());
    }

    #[test]
    fn wavenumbers_are_fft_ordered() {
        let g = make_grid(16, 2.0 * std::f64::consts::PI, 2).unwrap();
        let k = g.wavenumbers();
        assert_eq!(k[1], 1.0);
        assert_eq!(k[8], -8.0);
        assert_eq!(k[15], -1.0);
    }

    #[test]
    fn suggested_grid_obeys_rules() {
        let g = GridSpec::suggested(20.0, 1.0, 2).unwrap();
        assert!(g.length() >= 8.0 * 26.0);
        assert!(g.spacing() <= 1.0 / 8.0);
    }
}
