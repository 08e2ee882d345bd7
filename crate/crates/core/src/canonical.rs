use crate::error::{LabError, Result};
use crate::estimator::{window_norm, WeightSpec};
use crate::field::{random_band_limited, ComplexField, Space};
use crate::grid::GridSpec;
use crate::stable_seed;
use crate::symbol::classify::hessian_rank_at;
use crate::symbol::radial::Profile;
use crate::symbol::Symbol;
use crate::tol;
use crate::transform::{to_frequency, to_physical};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use std::fmt;

/// Change of frequency variable `eta = psi(xi)` used by canonical
/// transforms and composed symbols.
#[derive(Clone)]
pub enum FrequencyMap {
    /// `psi(xi) = M xi` with invertible `M` (row-major `n x n`).
    Linear { matrix: Vec<Vec<f64>>, inverse: Vec<Vec<f64>> },
    /// `psi(xi) = r(|xi|) xi / |xi|` with strictly monotone `r`, `r(0) = 0`.
    RadialWarp {
        r: Profile,
        r_inv: Profile,
        r_prime: Option<Profile>,
        /// Declared: all first derivatives of the map entries are bounded.
        derivative_bounded: bool,
        /// Declared: `r` is linear, making the map positively homogeneous.
        homogeneous: bool,
    },
}

impl fmt::Debug for FrequencyMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FrequencyMap::Linear { matrix, .. } => {
                f.debug_struct("Linear").field("matrix", matrix).finish()
            }
            FrequencyMap::RadialWarp { derivative_bounded, homogeneous, .. } => f
                .debug_struct("RadialWarp")
                .field("derivative_bounded", derivative_bounded)
                .field("homogeneous", homogeneous)
                .finish(),
        }
    }
}

impl FrequencyMap {
    pub fn linear(matrix: Vec<Vec<f64>>) -> Result<Self> {
        let n = matrix.len();
        if n == 0 || n > 3 || matrix.iter().any(|row| row.len() != n) {
            return Err(LabError::Param("linear map must be square, n in 1..=3".into()));
        }
        let m = DMatrix::from_fn(n, n, |i, j| matrix[i][j]);
        let det = m.determinant();
        if det.abs() < 1e-12 {
            return Err(LabError::Param(format!("linear map is singular (det = {det})")));
        }
        let inv = m
            .try_inverse()
            .ok_or_else(|| LabError::Param("linear map is not invertible".into()))?;
        let inverse = (0..n).map(|i| (0..n).map(|j| inv[(i, j)]).collect()).collect();
        Ok(FrequencyMap::Linear { matrix, inverse })
    }

    pub fn radial_warp(
        r: Profile,
        r_inv: Profile,
        r_prime: Option<Profile>,
        derivative_bounded: bool,
        homogeneous: bool,
    ) -> Self {
        FrequencyMap::RadialWarp { r, r_inv, r_prime, derivative_bounded, homogeneous }
    }

    pub fn apply(&self, xi: &[f64]) -> Vec<f64> {
        match self {
            FrequencyMap::Linear { matrix, .. } => matrix
                .iter()
                .map(|row| row.iter().zip(xi).map(|(m, x)| m * x).sum())
                .collect(),
            FrequencyMap::RadialWarp { r, .. } => {
                let rho = xi.iter().map(|c| c * c).sum::<f64>().sqrt();
                if rho == 0.0 {
                    return vec![0.0; xi.len()];
                }
                let s = r(rho) / rho;
                xi.iter().map(|&c| s * c).collect()
            }
        }
    }

    pub fn apply_inverse(&self, eta: &[f64]) -> Vec<f64> {
        match self {
            FrequencyMap::Linear { inverse, .. } => inverse
                .iter()
                .map(|row| row.iter().zip(eta).map(|(m, x)| m * x).sum())
                .collect(),
            FrequencyMap::RadialWarp { r_inv, .. } => {
                let rho = eta.iter().map(|c| c * c).sum::<f64>().sqrt();
                if rho == 0.0 {
                    return vec![0.0; eta.len()];
                }
                let s = r_inv(rho) / rho;
                eta.iter().map(|&c| s * c).collect()
            }
        }
    }

    /// Jacobian `D psi` at `xi` (row `i` = gradient of component `i`).
    pub fn jacobian(&self, xi: &[f64]) -> Vec<Vec<f64>> {
        match self {
            FrequencyMap::Linear { matrix, .. } => matrix.clone(),
            FrequencyMap::RadialWarp { r, r_prime, .. } => {
                let n = xi.len();
                let rho = xi.iter().map(|c| c * c).sum::<f64>().sqrt();
                let rp = |rho: f64| match r_prime {
                    Some(p) => p(rho),
                    None => {
                        let rr = r.clone();
                        crate::symbol::diff::fd_scalar_derivative(&move |t| rr(t), rho)
                    }
                };
                if rho < 1e-12 {
                    // r(0) = 0 forces D psi(0) = r'(0) I.
                    let d = rp(1e-8);
                    return (0..n)
                        .map(|i| (0..n).map(|j| if i == j { d } else { 0.0 }).collect())
                        .collect();
                }
                let radial = rp(rho);
                let tangential = r(rho) / rho;
                (0..n)
                    .map(|i| {
                        (0..n)
                            .map(|j| {
                                let par = xi[i] * xi[j] / (rho * rho);
                                let perp = if i == j { 1.0 - par } else { -par };
                                radial * par + tangential * perp
                            })
                            .collect()
                    })
                    .collect()
            }
        }
    }

    pub fn det_jacobian(&self, xi: &[f64]) -> f64 {
        let j = self.jacobian(xi);
        let n = j.len();
        DMatrix::from_fn(n, n, |r, c| j[r][c]).determinant()
    }

    /// Whether all entry derivatives are bounded (hypothesis for the
    /// non-homogeneous boundedness theorem).
    pub fn derivative_bounded(&self) -> bool {
        match self {
            FrequencyMap::Linear { .. } => true,
            FrequencyMap::RadialWarp { derivative_bounded, .. } => *derivative_bounded,
        }
    }

    /// Whether the map commutes with dilations (hypothesis for the
    /// homogeneous-weight boundedness theorem).
    pub fn is_homogeneous(&self) -> bool {
        match self {
            FrequencyMap::Linear { .. } => true,
            FrequencyMap::RadialWarp { homogeneous, .. } => *homogeneous,
        }
    }

    /// For linear maps: does `psi` send the frequency lattice of `grid` into
    /// itself? Exact coefficient relabelling is available in that case.
    pub fn lattice_compatible(&self, grid: &GridSpec) -> bool {
        match self {
            FrequencyMap::RadialWarp { .. } => false,
            FrequencyMap::Linear { matrix, .. } => {
                let n = grid.dim();
                if matrix.len() != n {
                    return false;
                }
                // psi(e_j d_j) must land on the lattice for every axis step.
                for j in 0..n {
                    let mut xi = vec![0.0; n];
                    xi[j] = grid.freq_spacing(j);
                    let eta = self.apply(&xi);
                    for (i, &e) in eta.iter().enumerate() {
                        let steps = e / grid.freq_spacing(i);
                        if (steps - steps.round()).abs() > 1e-9 {
                            return false;
                        }
                    }
                }
                true
            }
        }
    }

    /// Whether the inverse map sends the frequency lattice into itself
    /// (the exact-lookup condition for the inverse transform).
    pub fn inverse_lattice_compatible(&self, grid: &GridSpec) -> bool {
        match self {
            FrequencyMap::RadialWarp { .. } => false,
            FrequencyMap::Linear { inverse, .. } => {
                let n = grid.dim();
                if inverse.len() != n {
                    return false;
                }
                for j in 0..n {
                    let mut eta = vec![0.0; n];
                    eta[j] = grid.freq_spacing(j);
                    let xi = self.apply_inverse(&eta);
                    for (i, &c) in xi.iter().enumerate() {
                        let steps = c / grid.freq_spacing(i);
                        if (steps - steps.round()).abs() > 1e-9 {
                            return false;
                        }
                    }
                }
                true
            }
        }
    }

    /// Sup over the lattice of `max(|det D psi|, 1/|det D psi|)`: the
    /// conditioning window of the change of variables.
    pub fn det_window(&self, grid: &GridSpec) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        let axes = grid.freq_axes();
        let mut xi = vec![0.0; grid.dim()];
        for flat in 0..grid.total_points() {
            grid.freq_at(flat, &axes, &mut xi);
            if xi.iter().all(|&c| c == 0.0) {
                continue;
            }
            let d = self.det_jacobian(&xi).abs();
            lo = lo.min(d);
            hi = hi.max(d);
        }
        (lo, hi)
    }
}

/// C^2 ramp: 0 for `t <= 0`, 1 for `t >= 1`, quintic in between (first and
/// second derivatives vanish at both ends).
fn smoothstep(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        t * t * t * (t * (6.0 * t - 15.0) + 10.0)
    }
}

/// Compactly supported C^2 cutoff `gamma` with `0 <= gamma <= 1`, built
/// from quintic polynomial ramps.
#[derive(Debug, Clone)]
pub enum CutoffSpec {
    /// `gamma = 1` everywhere (no localization).
    One,
    /// 1 on `|xi - center| <= inner`, 0 outside `|xi - center| < outer`.
    Ball { center: Vec<f64>, inner: f64, outer: f64 },
    /// Radial shell: rises over `[r0, r1]`, 1 on `[r1, r2]`, falls over
    /// `[r2, r3]`.
    Annulus { r0: f64, r1: f64, r2: f64, r3: f64 },
    /// Angular aperture around `direction` times a radial shell: 1 where
    /// `cos(angle) >= cos_inner`, 0 where `cos(angle) <= cos_outer`.
    Cone { direction: Vec<f64>, cos_inner: f64, cos_outer: f64, radial: Box<CutoffSpec> },
}

impl CutoffSpec {
    pub fn one() -> Self {
        CutoffSpec::One
    }

    pub fn ball(center: Vec<f64>, inner: f64, outer: f64) -> Result<Self> {
        if center.is_empty() || center.iter().any(|c| !c.is_finite()) {
            return Err(LabError::Param("ball cutoff needs a finite center".into()));
        }
        if !(0.0 <= inner && inner < outer && outer.is_finite()) {
            return Err(LabError::Param(format!(
                "ball cutoff needs 0 <= inner < outer, got {inner}, {outer}"
            )));
        }
        Ok(CutoffSpec::Ball { center, inner, outer })
    }

    pub fn annulus(r0: f64, r1: f64, r2: f64, r3: f64) -> Result<Self> {
        if !(0.0 <= r0 && r0 < r1 && r1 <= r2 && r2 < r3 && r3.is_finite()) {
            return Err(LabError::Param(format!(
                "annulus cutoff needs 0 <= r0 < r1 <= r2 < r3, got {r0}, {r1}, {r2}, {r3}"
            )));
        }
        Ok(CutoffSpec::Annulus { r0, r1, r2, r3 })
    }

    /// `cos_inner`/`cos_outer` are the cosines of the plateau and support
    /// apertures: `1 >= cos_inner > cos_outer >= -1`.
    pub fn cone(direction: Vec<f64>, cos_inner: f64, cos_outer: f64, radial: CutoffSpec) -> Result<Self> {
        let norm = direction.iter().map(|c| c * c).sum::<f64>().sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(LabError::Param("cone cutoff needs a nonzero direction".into()));
        }
        if !(-1.0 <= cos_outer && cos_outer < cos_inner && cos_inner <= 1.0) {
            return Err(LabError::Param(format!(
                "cone cutoff needs -1 <= cos_outer < cos_inner <= 1, got {cos_outer}, {cos_inner}"
            )));
        }
        let direction = direction.iter().map(|c| c / norm).collect();
        Ok(CutoffSpec::Cone { direction, cos_inner, cos_outer, radial: Box::new(radial) })
    }

    pub fn eval(&self, xi: &[f64]) -> f64 {
        match self {
            CutoffSpec::One => 1.0,
            CutoffSpec::Ball { center, inner, outer } => {
                let d = xi
                    .iter()
                    .zip(center)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                smoothstep((outer - d) / (outer - inner))
            }
            CutoffSpec::Annulus { r0, r1, r2, r3 } => {
                let rho = xi.iter().map(|c| c * c).sum::<f64>().sqrt();
                if rho <= *r2 {
                    smoothstep((rho - r0) / (r1 - r0))
                } else {
                    smoothstep((r3 - rho) / (r3 - r2))
                }
            }
            CutoffSpec::Cone { direction, cos_inner, cos_outer, radial } => {
                let rho = xi.iter().map(|c| c * c).sum::<f64>().sqrt();
                if rho == 0.0 {
                    return 0.0;
                }
                let c = xi.iter().zip(direction).map(|(a, b)| a * b).sum::<f64>() / rho;
                smoothstep((c - cos_outer) / (cos_inner - cos_outer)) * radial.eval(xi)
            }
        }
    }

    /// The induced cutoff on the image side of a map: `gamma(psi^{-1}(eta))`.
    pub fn image_eval(&self, map: &FrequencyMap, eta: &[f64]) -> f64 {
        self.eval(&map.apply_inverse(eta))
    }

    pub fn values(&self, grid: &GridSpec) -> Vec<f64> {
        grid.eval_on_freq_lattice(|xi| self.eval(xi))
    }
}

/// Parity sign of every storage slot: the factor relating raw DFT
/// coefficients to the plane-wave coefficients of the centered lattice
/// `x = -L/2 + i h`. It is its own inverse.
fn parity_signs(grid: &GridSpec) -> Vec<f64> {
    let mut idx = vec![0usize; grid.dim()];
    (0..grid.total_points())
        .map(|flat| {
            grid.unravel(flat, &mut idx);
            let p: i64 = idx
                .iter()
                .enumerate()
                .map(|(j, &k)| GridSpec::mode_index(grid.points(j), k))
                .sum();
            if p.rem_euclid(2) == 0 {
                1.0
            } else {
                -1.0
            }
        })
        .collect()
}

/// Storage slot of ascending frequency position `q` (0 is the most negative
/// mode) on an axis of `n` points; `None` outside the lattice.
fn storage_of_ascending(n: usize, q: i64) -> Option<usize> {
    if q < 0 || q >= n as i64 {
        return None;
    }
    let mode = q - (n / 2) as i64;
    Some(if mode < 0 { (mode + n as i64) as usize } else { mode as usize })
}

/// Interpolating cubic-convolution weights for fractional offset `t` from
/// the second of four consecutive nodes. They sum to 1 and reproduce the
/// nodal values at `t = 0` and `t = 1`.
fn keys_weights(t: f64) -> [f64; 4] {
    let t2 = t * t;
    let t3 = t2 * t;
    [
        -0.5 * t3 + t2 - 0.5 * t,
        1.5 * t3 - 2.5 * t2 + 1.0,
        -1.5 * t3 + 2.0 * t2 + 0.5 * t,
        0.5 * t3 - 0.5 * t2,
    ]
}

/// Cubic resample of the sign-corrected coefficient table at an off-lattice
/// frequency. Stencil taps beyond the lattice contribute zero (band-limited
/// extension).
fn cubic_sample(grid: &GridSpec, e: &[Complex64], eta: &[f64]) -> Complex64 {
    let dim = grid.dim();
    let strides = grid.strides();
    let mut axis_w = [[0.0; 4]; 3];
    let mut axis_base = [0i64; 3];
    for j in 0..dim {
        let n = grid.points(j);
        let p = eta[j] / grid.freq_spacing(j) + (n / 2) as f64;
        let i0 = p.floor();
        axis_w[j] = keys_weights(p - i0);
        axis_base[j] = i0 as i64 - 1;
    }
    let mut acc = Complex64::ZERO;
    for c in 0..4usize.pow(dim as u32) {
        let mut rem = c;
        let mut w = 1.0;
        let mut flat = 0usize;
        let mut ok = true;
        for j in 0..dim {
            let tap = rem % 4;
            rem /= 4;
            w *= axis_w[j][tap];
            match storage_of_ascending(grid.points(j), axis_base[j] + tap as i64) {
                Some(s) => flat += s * strides[j],
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if ok && w != 0.0 {
            acc += e[flat] * w;
        }
    }
    acc
}

/// Exact lattice lookup of the coefficient table at a frequency that is
/// known to sit on the lattice.
fn exact_sample(grid: &GridSpec, e: &[Complex64], eta: &[f64]) -> Result<Complex64> {
    let strides = grid.strides();
    let mut flat = 0usize;
    for (j, &c) in eta.iter().enumerate() {
        let steps = c / grid.freq_spacing(j);
        let m = steps.round();
        if (steps - m).abs() > 1e-9 {
            return Err(LabError::Canonical(format!(
                "image frequency {eta:?} misses the lattice on a lattice-compatible map"
            )));
        }
        let n = grid.points(j) as i64;
        let mode = m as i64;
        if mode < -(n / 2) || mode >= n / 2 {
            return Err(LabError::Canonical(format!(
                "image frequency {eta:?} leaves the frequency box"
            )));
        }
        let slot = if mode < 0 { mode + n } else { mode };
        flat += slot as usize * strides[j];
    }
    Ok(e[flat])
}

/// Shared engine of the forward and inverse transforms: multiply by a
/// cutoff and resample the smooth coefficient function at mapped
/// frequencies. `exact` selects integer lattice lookup over interpolation.
fn resample_field(
    u: &ComplexField,
    gamma_at: &dyn Fn(&[f64]) -> f64,
    image_at: &dyn Fn(&[f64]) -> Vec<f64>,
    exact: bool,
) -> Result<ComplexField> {
    let grid = u.grid().clone();
    let hat = to_frequency(u)?;
    let signs = parity_signs(&grid);
    let e: Vec<Complex64> =
        hat.values().iter().zip(&signs).map(|(v, s)| v * *s).collect();
    let axes = grid.freq_axes();
    let mut xi = vec![0.0; grid.dim()];
    let mut out = vec![Complex64::ZERO; grid.total_points()];
    for (flat, slot) in out.iter_mut().enumerate() {
        grid.freq_at(flat, &axes, &mut xi);
        let g = gamma_at(&xi);
        if g == 0.0 {
            continue;
        }
        let eta = image_at(&xi);
        for j in 0..grid.dim() {
            let h = grid.freq_spacing(j);
            let lo = -grid.nyquist(j) - 1e-9 * h;
            let hi = grid.nyquist(j) - h + 1e-9 * h;
            if !(eta[j].is_finite() && (lo..=hi).contains(&eta[j])) {
                return Err(LabError::Canonical(format!(
                    "cutoff reaches {xi:?} whose image frequency {eta:?} leaves the box"
                )));
            }
        }
        let s = if exact { exact_sample(&grid, &e, &eta)? } else { cubic_sample(&grid, &e, &eta) };
        *slot = s * (g * signs[flat]);
    }
    let f = ComplexField::from_values(&grid, Space::Frequency, out)?;
    if u.space() == Space::Physical {
        to_physical(&f)
    } else {
        Ok(f)
    }
}

/// Cutoff-localized change of frequency variables:
/// coefficients become `gamma(xi) u-hat(psi(xi))`. Exact lattice lookup
/// when `psi` maps the lattice to itself, cubic interpolation otherwise.
/// The field comes back in the space it arrived in.
pub fn apply_transform(
    map: &FrequencyMap,
    cutoff: &CutoffSpec,
    u: &ComplexField,
) -> Result<ComplexField> {
    resample_field(
        u,
        &|xi| cutoff.eval(xi),
        &|xi| map.apply(xi),
        map.lattice_compatible(u.grid()),
    )
}

/// Inverse of [`apply_transform`]: coefficients become
/// `gamma(psi^{-1}(xi)) u-hat(psi^{-1}(xi))`.
pub fn apply_inverse_transform(
    map: &FrequencyMap,
    cutoff: &CutoffSpec,
    u: &ComplexField,
) -> Result<ComplexField> {
    resample_field(
        u,
        &|xi| cutoff.image_eval(map, xi),
        &|xi| map.apply_inverse(xi),
        map.inverse_lattice_compatible(u.grid()),
    )
}

/// Empirical operator norm of the transform on a polynomially weighted
/// space.
#[derive(Debug, Clone)]
pub struct BoundednessReport {
    pub kappa: f64,
    /// Largest observed `||<x>^kappa I u|| / ||<x>^kappa u||`.
    pub probe: f64,
    pub per_member: Vec<f64>,
    /// Whether the constructed map satisfies a hypothesis under which
    /// boundedness is guaranteed (bounded entry derivatives for any kappa,
    /// or a homogeneous map with `|kappa| < n/2`).
    pub guaranteed: bool,
}

/// Probe the weighted-space operator norm of the transform on an ensemble
/// of random band-limited fields.
pub fn boundedness_probe(
    map: &FrequencyMap,
    cutoff: &CutoffSpec,
    kappa: f64,
    grid: &GridSpec,
    support: impl Fn(&[f64]) -> bool + Sync,
    members: usize,
    seed: u64,
) -> Result<BoundednessReport> {
    if members == 0 {
        return Err(LabError::Param("boundedness probe needs at least one member".into()));
    }
    if !kappa.is_finite() {
        return Err(LabError::Param(format!("weight exponent must be finite, got {kappa}")));
    }
    let w = grid.eval_on_x_lattice(|x| {
        (1.0 + x.iter().map(|c| c * c).sum::<f64>()).powf(kappa / 2.0)
    });
    let weighted = |f: &ComplexField| -> f64 {
        f.values().iter().zip(&w).map(|(v, wi)| v.norm_sqr() * wi * wi).sum::<f64>().sqrt()
    };
    let per_member: Vec<f64> = (0..members)
        .into_par_iter()
        .map(|i| -> Result<f64> {
            let u = random_band_limited(grid, &support, stable_seed(seed, i as u64))?;
            let up = to_physical(&u)?;
            let iu = to_physical(&apply_transform(map, cutoff, &u)?)?;
            let den = weighted(&up);
            if den == 0.0 {
                return Err(LabError::ZeroNorm);
            }
            Ok(weighted(&iu) / den)
        })
        .collect::<Result<_>>()?;
    let probe = per_member.iter().cloned().fold(0.0, f64::max);
    let n_half = grid.dim() as f64 / 2.0;
    let guaranteed =
        map.derivative_bounded() || (map.is_homogeneous() && kappa.abs() < n_half);
    Ok(BoundednessReport { kappa, probe, per_member, guaranteed })
}

/// One measured pair of smoothing norms for a composed symbol and its
/// core: the composed-symbol norm of `phi` against the core-symbol norm of
/// the transformed field.
#[derive(Debug, Clone)]
pub struct EquivalenceItem {
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

/// Ensemble of equivalence ratios with their two-sided band.
#[derive(Debug, Clone)]
pub struct EquivalenceReport {
    pub items: Vec<EquivalenceItem>,
    /// `(smallest, largest)` observed ratio.
    pub band: (f64, f64),
    /// Smallest `B` with every ratio inside `[1/B, B]`.
    pub band_constant: f64,
}

/// Prepared tables for comparing the smoothing estimate of `a = sigma o psi`
/// against the estimate of `sigma` applied to the transformed data: the
/// two estimates hold or fail together, so the measured ratios stay inside
/// a two-sided band.
pub struct EquivalenceCase {
    grid: GridSpec,
    map: FrequencyMap,
    cutoff: CutoffSpec,
    gamma_vals: Vec<f64>,
    a_vals: Vec<f64>,
    zeta_a: Vec<f64>,
    sigma_vals: Vec<f64>,
    zeta_sigma: Vec<f64>,
    w: Vec<f64>,
    t_window: f64,
    time_samples: usize,
}

impl fmt::Debug for EquivalenceCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EquivalenceCase")
            .field("grid", &self.grid)
            .field("map", &self.map)
            .field("t_window", &self.t_window)
            .field("time_samples", &self.time_samples)
            .finish()
    }
}

impl EquivalenceCase {
    /// Build the lattice tables: `a = sigma o psi` (values and gradient
    /// norms through the chain rule), the smoother `zeta(|grad .|)` for
    /// both symbols, the spatial weight, and the cutoff.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        sigma: &Symbol,
        map: &FrequencyMap,
        cutoff: &CutoffSpec,
        zeta: impl Fn(f64) -> f64,
        weight: &WeightSpec,
        grid: &GridSpec,
        t_window: f64,
        time_samples: usize,
    ) -> Result<Self> {
        if sigma.dim() != grid.dim() {
            return Err(LabError::Shape(format!(
                "symbol dimension {} does not match grid dimension {}",
                sigma.dim(),
                grid.dim()
            )));
        }
        if !(t_window.is_finite() && t_window > 0.0) || time_samples == 0 {
            return Err(LabError::Param("need a positive window and sample count".into()));
        }
        let a = Symbol::composed(sigma.clone(), map.clone())?;
        let a_vals = a.lattice_values(grid)?;
        let zeta_a: Vec<f64> = a.lattice_grad_norms(grid)?.iter().map(|&g| zeta(g)).collect();
        let sigma_vals = sigma.lattice_values(grid)?;
        let zeta_sigma: Vec<f64> =
            sigma.lattice_grad_norms(grid)?.iter().map(|&g| zeta(g)).collect();
        if let Some(bad) = zeta_a.iter().chain(&zeta_sigma).find(|v| !v.is_finite()) {
            return Err(LabError::Param(format!("smoother produced a non-finite value {bad}")));
        }
        Ok(EquivalenceCase {
            grid: grid.clone(),
            map: map.clone(),
            cutoff: cutoff.clone(),
            gamma_vals: cutoff.values(grid),
            a_vals,
            zeta_a,
            sigma_vals,
            zeta_sigma,
            w: weight.values(grid)?,
            t_window,
            time_samples,
        })
    }

    /// Both norms and their ratio on one field with `supp phi-hat` inside
    /// the cutoff support.
    pub fn run(&self, phi: &ComplexField) -> Result<EquivalenceItem> {
        if phi.grid() != &self.grid {
            return Err(LabError::Shape("field grid does not match the case grid".into()));
        }
        let hat = to_frequency(phi)?;
        let axes = self.grid.freq_axes();
        let mut xi = vec![0.0; self.grid.dim()];
        for (flat, v) in hat.values().iter().enumerate() {
            if *v != Complex64::ZERO && self.gamma_vals[flat] == 0.0 {
                self.grid.freq_at(flat, &axes, &mut xi);
                return Err(LabError::Canonical(format!(
                    "field support escapes the cutoff at xi = {xi:?}"
                )));
            }
        }
        let lhs = window_norm(
            &self.a_vals,
            &self.w,
            &self.zeta_a,
            phi,
            -self.t_window,
            self.t_window,
            self.time_samples,
        )?;
        let iphi = apply_transform(&self.map, &self.cutoff, phi)?;
        let rhs = window_norm(
            &self.sigma_vals,
            &self.w,
            &self.zeta_sigma,
            &iphi,
            -self.t_window,
            self.t_window,
            self.time_samples,
        )?;
        if rhs == 0.0 {
            return Err(LabError::ZeroNorm);
        }
        Ok(EquivalenceItem { lhs, rhs, ratio: lhs / rhs })
    }
}

/// Run an [`EquivalenceCase`] over an ensemble of random band-limited
/// fields and report the two-sided ratio band.
pub fn equivalence_ensemble(
    case: &EquivalenceCase,
    support: impl Fn(&[f64]) -> bool + Sync,
    members: usize,
    seed: u64,
) -> Result<EquivalenceReport> {
    if members == 0 {
        return Err(LabError::Param("equivalence ensemble needs at least one member".into()));
    }
    let items: Vec<EquivalenceItem> = (0..members)
        .into_par_iter()
        .map(|i| {
            let phi = random_band_limited(&case.grid, &support, stable_seed(seed, i as u64))?;
            case.run(&phi)
        })
        .collect::<Result<_>>()?;
    let lo = items.iter().map(|i| i.ratio).fold(f64::INFINITY, f64::min);
    let hi = items.iter().map(|i| i.ratio).fold(0.0f64, f64::max);
    let band_constant = hi.max(1.0 / lo);
    Ok(EquivalenceReport { items, band: (lo, hi), band_constant })
}

/// Hessian ranks of a composed symbol and of its core at the mapped point.
#[derive(Debug, Clone, PartialEq)]
pub struct RankPair {
    pub point: Vec<f64>,
    pub mapped_point: Vec<f64>,
    pub rank_composed: usize,
    pub rank_core: usize,
}

/// At each given point, compare the Hessian rank of `a = sigma o psi`
/// against the rank of `sigma` at `psi(point)`: for invertible linear maps
/// the two are congruent, so the ranks agree.
pub fn rank_invariance_check(
    sigma: &Symbol,
    map: &FrequencyMap,
    points: &[Vec<f64>],
) -> Result<Vec<RankPair>> {
    if !matches!(map, FrequencyMap::Linear { .. }) {
        return Err(LabError::Param("rank comparison needs an invertible linear map".into()));
    }
    let a = Symbol::composed(sigma.clone(), map.clone())?;
    points
        .iter()
        .map(|p| {
            if p.len() != sigma.dim() {
                return Err(LabError::Shape(format!(
                    "point {p:?} does not match symbol dimension {}",
                    sigma.dim()
                )));
            }
            let mapped = map.apply(p);
            let (rank_composed, _) = hessian_rank_at(&a, p, tol::EIGEN_RANK_REL);
            let (rank_core, _) = hessian_rank_at(sigma, &mapped, tol::EIGEN_RANK_REL);
            Ok(RankPair { point: p.clone(), mapped_point: mapped, rank_composed, rank_core })
        })
        .collect()
}

/// Detect the critical points of `a = sigma o psi` inside a search box and
/// compare Hessian ranks there.
pub fn rank_invariance_scan(
    sigma: &Symbol,
    map: &FrequencyMap,
    search_box: &[(f64, f64)],
    seeds_per_axis: usize,
) -> Result<Vec<RankPair>> {
    if !matches!(map, FrequencyMap::Linear { .. }) {
        return Err(LabError::Param("rank comparison needs an invertible linear map".into()));
    }
    let a = Symbol::composed(sigma.clone(), map.clone())?;
    let pts = crate::symbol::classify::find_critical_points(&a, search_box, seeds_per_axis);
    let points: Vec<Vec<f64>> = pts.into_iter().map(|c| c.point).collect();
    rank_invariance_check(sigma, map, &points)
}

/// Supremum of the reduction quotient `gamma(xi) zeta(xi) / rho(psi(xi))`
/// over the lattice; quotients above [`tol::REDUCTION_FLAG`] mark the
/// configuration as effectively unbounded (the reference multiplier nearly
/// vanishes inside the cutoff) without rejecting it.
#[derive(Debug, Clone, Copy)]
pub struct ReductionReport {
    pub sup_q: f64,
    pub flagged: bool,
}

pub fn reduction_quotient(
    grid: &GridSpec,
    cutoff: &CutoffSpec,
    zeta: impl Fn(&[f64]) -> f64,
    rho: impl Fn(&[f64]) -> f64,
    map: &FrequencyMap,
) -> ReductionReport {
    let axes = grid.freq_axes();
    let mut xi = vec![0.0; grid.dim()];
    let mut sup_q = 0.0f64;
    for flat in 0..grid.total_points() {
        grid.freq_at(flat, &axes, &mut xi);
        let num = cutoff.eval(&xi) * zeta(&xi);
        if num == 0.0 {
            continue;
        }
        let den = rho(&map.apply(&xi));
        let q = if den == 0.0 { f64::INFINITY } else { (num / den).abs() };
        sup_q = sup_q.max(q);
    }
    ReductionReport { sup_q, flagged: !(sup_q <= tol::REDUCTION_FLAG) }
}
