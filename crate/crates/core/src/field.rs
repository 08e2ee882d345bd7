use crate::error::{LabError, Result};
use crate::grid::GridSpec;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// Which lattice the stored values live on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Space {
    Physical,
    Frequency,
}

impl Space {
    pub fn name(self) -> &'static str {
        match self {
            Space::Physical => "physical",
            Space::Frequency => "frequency",
        }
    }
}

/// Complex scalar field sampled on a [`GridSpec`] lattice, row-major flat
/// storage. Frequency-space values are unitary-DFT coefficients, so the
/// weighted norm below is the same number in either space.
#[derive(Debug, Clone)]
pub struct ComplexField {
    grid: GridSpec,
    space: Space,
    values: Vec<Complex64>,
}

impl ComplexField {
    pub fn zeros(grid: &GridSpec, space: Space) -> Self {
        ComplexField {
            grid: grid.clone(),
            space,
            values: vec![Complex64::ZERO; grid.total_points()],
        }
    }

    pub fn from_values(grid: &GridSpec, space: Space, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.total_points() {
            return Err(LabError::Shape(format!(
                "{} values for a {}-point grid",
                values.len(),
                grid.total_points()
            )));
        }
        Ok(ComplexField { grid: grid.clone(), space, values })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub(crate) fn set_space(&mut self, space: Space) {
        self.space = space;
    }

    pub fn expect_space(&self, space: Space) -> Result<()> {
        if self.space != space {
            return Err(LabError::Space { expected: space.name(), got: self.space.name() });
        }
        Ok(())
    }

    /// Discrete `L^2` norm `sqrt( sum |v|^2 * prod_j h_j )`. Identical in both
    /// spaces because the DFT is unitary on the raw value vectors.
    pub fn l2_norm(&self) -> f64 {
        let cell = self.grid.cell_volume();
        (self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * cell).sqrt()
    }

    /// Inner product with the same cell-volume weight as [`Self::l2_norm`].
    pub fn inner(&self, other: &ComplexField) -> Result<Complex64> {
        if self.grid != other.grid || self.space != other.space {
            return Err(LabError::Shape("inner product between mismatched fields".into()));
        }
        let cell = self.grid.cell_volume();
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a.conj() * b)
            .sum::<Complex64>()
            * cell)
    }

    pub fn scale(&mut self, c: Complex64) {
        for v in &mut self.values {
            *v *= c;
        }
    }

    /// Plane-wave decomposition of a frequency-space field: pairs
    /// `(xi_k, d_k)` such that the band-limited interpolant is
    /// `u(x) = sum_k d_k exp(i xi_k . x)` at arbitrary `x` on the torus.
    /// Only modes with nonzero coefficient are returned.
    pub fn plane_wave_modes(&self) -> Result<Vec<(Vec<f64>, Complex64)>> {
        self.expect_space(Space::Frequency)?;
        let g = &self.grid;
        let axes = g.freq_axes();
        let strides = g.strides();
        let scale = 1.0 / (g.total_points() as f64).sqrt();
        let mut out = Vec::new();
        for (flat, &c) in self.values.iter().enumerate() {
            if c == Complex64::ZERO {
                continue;
            }
            let mut xi = vec![0.0; g.dim()];
            let mut rem = flat;
            let mut parity = 0i64;
            for j in 0..g.dim() {
                let idx = rem / strides[j];
                rem %= strides[j];
                xi[j] = axes[j][idx];
                parity += GridSpec::mode_index(g.points(j), idx);
            }
            // x_i = -L/2 + i h shifts each mode by exp(-i pi k_j) relative to
            // the raw DFT phase, hence the parity sign.
            let sign = if parity.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            out.push((xi, c * sign * scale));
        }
        Ok(out)
    }

    /// Squared norm restricted to frequencies satisfying `pred`.
    pub fn band_energy(&self, pred: impl Fn(&[f64]) -> bool) -> Result<f64> {
        self.expect_space(Space::Frequency)?;
        let mask = self.grid.eval_on_freq_lattice(|xi| if pred(xi) { 1.0 } else { 0.0 });
        let cell = self.grid.cell_volume();
        Ok(self
            .values
            .iter()
            .zip(&mask)
            .map(|(v, m)| v.norm_sqr() * m)
            .sum::<f64>()
            * cell)
    }
}

/// Random band-limited field: independent complex Gaussian coefficients on
/// every frequency-lattice point satisfying `support`, zero elsewhere,
/// normalised to unit `L^2` norm. Returned in frequency space; identical
/// seeds give identical fields.
pub fn random_band_limited(
    grid: &GridSpec,
    support: impl Fn(&[f64]) -> bool,
    seed: u64,
) -> Result<ComplexField> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut field = ComplexField::zeros(grid, Space::Frequency);
    let mask = grid.eval_on_freq_lattice(|xi| if support(xi) { 1.0 } else { 0.0 });
    let mut hits = 0usize;
    for (v, m) in field.values.iter_mut().zip(&mask) {
        if *m != 0.0 {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            *v = Complex64::new(re, im);
            hits += 1;
        }
    }
    if hits == 0 {
        return Err(LabError::EmptySupport(
            "band support contains no frequency-lattice point".into(),
        ));
    }
    let norm = field.l2_norm();
    field.scale(Complex64::new(1.0 / norm, 0.0));
    Ok(field)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid1d() -> GridSpec {
        GridSpec::new(&[2.0 * std::f64::consts::PI], &[16]).unwrap()
    }

    #[test]
    fn random_band_limited_is_deterministic_and_unit_norm() {
        let g = grid1d();
        let a = random_band_limited(&g, |xi| xi[0] > 0.0, 7).unwrap();
        let b = random_band_limited(&g, |xi| xi[0] > 0.0, 7).unwrap();
        let c = random_band_limited(&g, |xi| xi[0] > 0.0, 8).unwrap();
        assert_eq!(a.values(), b.values(), "same seed must reproduce the field");
        assert_ne!(a.values(), c.values(), "different seeds must differ");
        assert!((a.l2_norm() - 1.0).abs() < 1e-12, "norm {} != 1", a.l2_norm());
    }

    #[test]
    fn random_band_limited_respects_support() {
        let g = grid1d();
        let f = random_band_limited(&g, |xi| xi[0] > 0.0, 3).unwrap();
        let xi = g.freq_axis(0);
        for (k, v) in f.values().iter().enumerate() {
            if xi[k] <= 0.0 {
                assert_eq!(*v, Complex64::ZERO, "mode xi={} must be empty", xi[k]);
            }
        }
        let onesided = f.band_energy(|xi| xi[0] > 0.0).unwrap();
        assert!((onesided - 1.0).abs() < 1e-12, "all energy must sit in the band");
    }

    #[test]
    fn empty_support_is_an_error() {
        let g = grid1d();
        assert!(matches!(
            random_band_limited(&g, |xi| xi[0] > 1e6, 1),
            Err(LabError::EmptySupport(_))
        ));
    }

    #[test]
    fn plane_wave_modes_reconstruct_grid_values() {
        let g = GridSpec::new(&[5.0, 3.0], &[8, 16]).unwrap();
        let f = random_band_limited(&g, |xi| xi.iter().all(|c| c.abs() > 0.1), 11).unwrap();
        let modes = f.plane_wave_modes().unwrap();
        let phys = crate::transform::to_physical(&f).unwrap();
        let xa = g.x_axes();
        // Check the interpolant against the inverse transform at a few points.
        for &flat in &[0usize, 37, 81, 127] {
            let mut x = vec![0.0; 2];
            g.freq_at(flat, &xa, &mut x);
            let direct: Complex64 = modes
                .iter()
                .map(|(xi, d)| {
                    let phase = xi.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>();
                    d * Complex64::new(0.0, phase).exp()
                })
                .sum();
            let got = phys.values()[flat];
            assert!(
                (direct - got).norm() < 1e-12,
                "interpolant {direct} vs grid value {got} at flat {flat}"
            );
        }
    }
}
