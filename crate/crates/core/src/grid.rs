use crate::error::{LabError, Result};
use serde::{Deserialize, Serialize};

/// Hard cap on total grid points: keeps every experiment at desk scale.
pub const MAX_POINTS: usize = 1 << 24;

/// Uniform periodic grid on the box `prod_j [-L_j/2, L_j/2)`.
///
/// Axis `j` carries `n[j]` points at spacing `h_j = L_j / n[j]`; the point
/// lattice is `x_i = -L/2 + i h`. The dual lattice holds the frequencies
/// `xi_k = 2 pi k / L_j` in FFT storage order `0, 1, .., n/2-1, -n/2, .., -1`
/// (the Nyquist mode is stored as `-n/2`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    lens: Vec<f64>,
    ns: Vec<usize>,
}

impl GridSpec {
    pub fn new(lens: &[f64], ns: &[usize]) -> Result<Self> {
        if lens.len() != ns.len() {
            return Err(LabError::Grid(format!(
                "{} extents vs {} point counts",
                lens.len(),
                ns.len()
            )));
        }
        let dim = lens.len();
        if !(1..=3).contains(&dim) {
            return Err(LabError::Grid(format!("dimension {dim} outside 1..=3")));
        }
        for (j, (&l, &n)) in lens.iter().zip(ns).enumerate() {
            if !(l.is_finite() && l > 0.0) {
                return Err(LabError::Grid(format!("axis {j}: extent {l} must be positive")));
            }
            if n < 8 || n % 2 != 0 {
                return Err(LabError::Grid(format!("axis {j}: {n} points (need even, >= 8)")));
            }
        }
        let total: usize = ns.iter().product();
        if total > MAX_POINTS {
            return Err(LabError::Grid(format!(
                "{total} points exceeds the {MAX_POINTS} budget"
            )));
        }
        Ok(GridSpec { lens: lens.to_vec(), ns: ns.to_vec() })
    }

    /// Convenience: cubic grid, same extent and point count on every axis.
    pub fn cubic(dim: usize, len: f64, n: usize) -> Result<Self> {
        Self::new(&vec![len; dim], &vec![n; dim])
    }

    pub fn dim(&self) -> usize {
        self.lens.len()
    }

    pub fn len(&self, axis: usize) -> f64 {
        self.lens[axis]
    }

    pub fn lens(&self) -> &[f64] {
        &self.lens
    }

    pub fn points(&self, axis: usize) -> usize {
        self.ns[axis]
    }

    pub fn point_counts(&self) -> &[usize] {
        &self.ns
    }

    pub fn total_points(&self) -> usize {
        self.ns.iter().product()
    }

    /// Spatial spacing `h_j = L_j / n_j`.
    pub fn spacing(&self, axis: usize) -> f64 {
        self.lens[axis] / self.ns[axis] as f64
    }

    /// Volume of one grid cell, `prod_j h_j`; the quadrature weight of the
    /// discrete `L^2` norm.
    pub fn cell_volume(&self) -> f64 {
        (0..self.dim()).map(|j| self.spacing(j)).product()
    }

    /// Frequency spacing `2 pi / L_j` of the dual lattice.
    pub fn freq_spacing(&self, axis: usize) -> f64 {
        2.0 * std::f64::consts::PI / self.lens[axis]
    }

    /// Largest representable frequency magnitude on `axis` (the Nyquist mode).
    pub fn nyquist(&self, axis: usize) -> f64 {
        self.freq_spacing(axis) * (self.ns[axis] / 2) as f64
    }

    /// Signed integer mode index for FFT storage slot `k` on an axis with `n`
    /// points: `0, 1, .., n/2-1, -n/2, .., -1`.
    pub fn mode_index(n: usize, k: usize) -> i64 {
        debug_assert!(k < n);
        if k < n / 2 {
            k as i64
        } else {
            k as i64 - n as i64
        }
    }

    /// Frequencies of one axis in FFT storage order.
    pub fn freq_axis(&self, axis: usize) -> Vec<f64> {
        let n = self.ns[axis];
        let d = self.freq_spacing(axis);
        (0..n).map(|k| Self::mode_index(n, k) as f64 * d).collect()
    }

    /// Point coordinates of one axis: `x_i = -L/2 + i h`.
    pub fn x_axis(&self, axis: usize) -> Vec<f64> {
        let n = self.ns[axis];
        let h = self.spacing(axis);
        let half = self.lens[axis] / 2.0;
        (0..n).map(|i| i as f64 * h - half).collect()
    }

    /// Row-major strides (last axis contiguous).
    pub fn strides(&self) -> Vec<usize> {
        let dim = self.dim();
        let mut s = vec![1usize; dim];
        for j in (0..dim.saturating_sub(1)).rev() {
            s[j] = s[j + 1] * self.ns[j + 1];
        }
        s
    }

    /// Decode a flat index into per-axis indices.
    pub fn unravel(&self, mut flat: usize, out: &mut [usize]) {
        for (j, &s) in self.strides().iter().enumerate() {
            out[j] = flat / s;
            flat %= s;
        }
    }

    /// Fill `out` with the frequency vector of flat index `flat`.
    pub fn freq_at(&self, flat: usize, axes: &[Vec<f64>], out: &mut [f64]) {
        let mut rem = flat;
        let strides = self.strides();
        for j in 0..self.dim() {
            let idx = rem / strides[j];
            rem %= strides[j];
            out[j] = axes[j][idx];
        }
    }

    /// Materialise all per-axis frequency vectors (FFT order).
    pub fn freq_axes(&self) -> Vec<Vec<f64>> {
        (0..self.dim()).map(|j| self.freq_axis(j)).collect()
    }

    /// Materialise all per-axis point vectors.
    pub fn x_axes(&self) -> Vec<Vec<f64>> {
        (0..self.dim()).map(|j| self.x_axis(j)).collect()
    }

    /// Evaluate `f` on the whole frequency lattice (row-major flat order).
    pub fn eval_on_freq_lattice(&self, mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
        let axes = self.freq_axes();
        let mut xi = vec![0.0; self.dim()];
        (0..self.total_points())
            .map(|flat| {
                self.freq_at(flat, &axes, &mut xi);
                f(&xi)
            })
            .collect()
    }

    /// Evaluate `f` on the whole point lattice (row-major flat order).
    pub fn eval_on_x_lattice(&self, mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
        let axes = self.x_axes();
        let mut x = vec![0.0; self.dim()];
        (0..self.total_points())
            .map(|flat| {
                self.freq_at(flat, &axes, &mut x);
                f(&x)
            })
            .collect()
    }
}
