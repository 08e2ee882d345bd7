use crate::error::{LabError, Result};
use crate::field::{ComplexField, Space};
use crate::grid::GridSpec;
use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

/// Process-wide FFT plan cache keyed by (length, direction).
fn plan(n: usize, dir: FftDirection) -> Arc<dyn Fft<f64>> {
    static CACHE: OnceLock<Mutex<(FftPlanner<f64>, HashMap<(usize, bool), Arc<dyn Fft<f64>>>)>> =
        OnceLock::new();
    let cell = CACHE.get_or_init(|| Mutex::new((FftPlanner::new(), HashMap::new())));
    let mut guard = cell.lock().expect("fft plan cache poisoned");
    let key = (n, dir == FftDirection::Forward);
    if let Some(p) = guard.1.get(&key) {
        return p.clone();
    }
    let p = guard.0.plan_fft(n, dir);
    guard.1.insert(key, p.clone());
    p
}

fn transform_axes(grid: &GridSpec, values: &mut [Complex64], dir: FftDirection) {
    let strides = grid.strides();
    for axis in 0..grid.dim() {
        let n = grid.points(axis);
        let s = strides[axis];
        let fft = plan(n, dir);
        let mut line = vec![Complex64::ZERO; n];
        let mut scratch = vec![Complex64::ZERO; fft.get_inplace_scratch_len()];
        let pre = grid.total_points() / (n * s);
        for p in 0..pre {
            for q in 0..s {
                let base = p * n * s + q;
                for t in 0..n {
                    line[t] = values[base + t * s];
                }
                fft.process_with_scratch(&mut line, &mut scratch);
                for t in 0..n {
                    values[base + t * s] = line[t];
                }
            }
        }
    }
    // One global scaling keeps the transform unitary: forward and inverse
    // each carry 1/sqrt(prod N).
    let scale = 1.0 / (grid.total_points() as f64).sqrt();
    for v in values.iter_mut() {
        *v *= scale;
    }
}

/// Unitary forward DFT: physical -> frequency.
pub fn to_frequency(field: &ComplexField) -> Result<ComplexField> {
    match field.space() {
        Space::Frequency => Ok(field.clone()),
        Space::Physical => {
            let mut out = field.clone();
            let grid = out.grid().clone();
            transform_axes(&grid, out.values_mut(), FftDirection::Forward);
            out.set_space(Space::Frequency);
            Ok(out)
        }
    }
}

/// Unitary inverse DFT: frequency -> physical.
pub fn to_physical(field: &ComplexField) -> Result<ComplexField> {
    match field.space() {
        Space::Physical => Ok(field.clone()),
        Space::Frequency => {
            let mut out = field.clone();
            let grid = out.grid().clone();
            transform_axes(&grid, out.values_mut(), FftDirection::Inverse);
            out.set_space(Space::Physical);
            Ok(out)
        }
    }
}

/// Evaluate a multiplier on the frequency lattice, rejecting non-finite
/// values with the offending point named.
pub fn multiplier_values(grid: &GridSpec, m: impl Fn(&[f64]) -> f64) -> Result<Vec<f64>> {
    let axes = grid.freq_axes();
    let mut xi = vec![0.0; grid.dim()];
    let mut out = Vec::with_capacity(grid.total_points());
    for flat in 0..grid.total_points() {
        grid.freq_at(flat, &axes, &mut xi);
        let v = m(&xi);
        if !v.is_finite() {
            return Err(LabError::Multiplier { point: xi.clone() });
        }
        out.push(v);
    }
    Ok(out)
}

/// Apply a real Fourier multiplier `m(D)`, returning a field in the same
/// space as the input.
pub fn apply_multiplier(field: &ComplexField, m: impl Fn(&[f64]) -> f64) -> Result<ComplexField> {
    let vals = multiplier_values(field.grid(), m)?;
    apply_multiplier_values(field, &vals)
}

/// Apply precomputed multiplier lattice values.
pub fn apply_multiplier_values(field: &ComplexField, vals: &[f64]) -> Result<ComplexField> {
    if vals.len() != field.grid().total_points() {
        return Err(LabError::Shape("multiplier table does not match the grid".into()));
    }
    let input_space = field.space();
    let mut hat = to_frequency(field)?;
    for (v, m) in hat.values_mut().iter_mut().zip(vals) {
        *v *= *m;
    }
    match input_space {
        Space::Frequency => Ok(hat),
        Space::Physical => to_physical(&hat),
    }
}

/// Evaluate a symbol-style phase table `a(xi)` on the lattice, rejecting
/// non-finite values.
pub fn phase_values(grid: &GridSpec, a: impl Fn(&[f64]) -> f64) -> Result<Vec<f64>> {
    multiplier_values(grid, a)
}

/// Exact free propagator `u(t) = exp(i t a(D)) phi` for a real symbol table.
/// Diagonal in frequency, hence unitary and with the exact group law.
pub fn propagate_values(field: &ComplexField, a_vals: &[f64], t: f64) -> Result<ComplexField> {
    if a_vals.len() != field.grid().total_points() {
        return Err(LabError::Shape("phase table does not match the grid".into()));
    }
    let input_space = field.space();
    let mut hat = to_frequency(field)?;
    for (v, a) in hat.values_mut().iter_mut().zip(a_vals) {
        *v *= Complex64::new(0.0, t * a).exp();
    }
    match input_space {
        Space::Frequency => Ok(hat),
        Space::Physical => to_physical(&hat),
    }
}

/// Exact free propagator with the phase evaluated from `a` on the fly.
pub fn propagate(field: &ComplexField, a: impl Fn(&[f64]) -> f64, t: f64) -> Result<ComplexField> {
    let vals = phase_values(field.grid(), a)?;
    propagate_values(field, &vals, t)
}

/// Band-split specification: `low` keeps `|xi| <= r` untouched and rolls off
/// to zero across `r < |xi| < 2r` with a C^1 polynomial ramp.
#[derive(Debug, Clone, Copy)]
pub struct BandSpec {
    pub r: f64,
}

impl BandSpec {
    pub fn low_multiplier(&self, xi: &[f64]) -> f64 {
        let rho = xi.iter().map(|c| c * c).sum::<f64>().sqrt();
        if rho <= self.r {
            1.0
        } else if rho >= 2.0 * self.r {
            0.0
        } else {
            let u = (rho - self.r) / self.r;
            1.0 - (3.0 * u * u - 2.0 * u * u * u)
        }
    }
}

/// Split a field into low and high bands: `low + high == field` exactly,
/// `supp(low-hat)` inside `|xi| < 2r`, `supp(high-hat)` inside `|xi| > r`.
pub fn band_split(field: &ComplexField, band: &BandSpec) -> Result<(ComplexField, ComplexField)> {
    if !(band.r > 0.0 && band.r.is_finite()) {
        return Err(LabError::Band(format!("ramp start {} must be positive", band.r)));
    }
    let grid = field.grid();
    let nyq = (0..grid.dim()).map(|j| grid.nyquist(j)).fold(f64::INFINITY, f64::min);
    if 2.0 * band.r > nyq {
        return Err(LabError::Band(format!(
            "ramp end {} exceeds the grid Nyquist frequency {nyq}",
            2.0 * band.r
        )));
    }
    let input_space = field.space();
    let hat = to_frequency(field)?;
    let chi = multiplier_values(grid, |xi| band.low_multiplier(xi))?;
    let mut low = hat.clone();
    let mut high = hat;
    for ((l, h), c) in low.values_mut().iter_mut().zip(high.values_mut()).zip(&chi) {
        let keep = *l * *c;
        *h -= keep;
        *l = keep;
    }
    match input_space {
        Space::Frequency => Ok((low, high)),
        Space::Physical => Ok((to_physical(&low)?, to_physical(&high)?)),
    }
}
