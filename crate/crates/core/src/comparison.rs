//! Comparison principles and monotone frequency decompositions.
//!
//! Three families of checks live here. Exact model identities: the
//! translation flow preserves the time-sliced norm at every point, and the
//! one-sided model flows `exp(it|D|^p)` carry a pointwise-in-x `L^2_t`
//! identity whose constant `sqrt(l/m)` compares two orders. Comparison
//! principles: a monotone change of the dispersion relation converts one
//! smoothing estimate into another at the price of the derivative quotient
//! `(|sigma|/|f'|^{1/2}) (|g'|^{1/2}/|tau|)`. Monotone decomposition: a
//! polynomial symbol splits, per axis, into finitely many frequency pieces
//! on which its partial derivative keeps one sign, and the combiner
//! `eta = |grad a|^{1/2} / sum_j |d_j a|^{1/2} <= 1` reassembles the
//! invariant smoother from the per-axis ones.
//!
//! The pointwise-in-x time integrals are almost-periodic trigonometric
//! sums, so they are integrated exactly with the pairwise kernel
//! `S_T(d) = 2 sin(T d)/d` instead of a quadrature rule. The model and
//! comparison identities are statements about a single dispersing passage
//! of a wave packet; on the torus that means the integration window must
//! cover the full passage of the slowest mode group while the fastest one
//! has not yet wrapped around, which is why these checks take a `travel`
//! distance and derive per-side windows from the group speeds.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{LabError, Result};
use crate::estimator::{window_norm, WeightSpec};
use crate::field::{ComplexField, Space};
use crate::grid::GridSpec;
use crate::symbol::{PolynomialSymbol, RadialProfile};
use crate::tol;
use crate::transform::{apply_multiplier_values, propagate_values, to_physical};

/// Scalar function of one real variable (a radial smoother or profile).
pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
/// Support predicate on the radial variable.
pub type SupportFn = Arc<dyn Fn(f64) -> bool + Send + Sync>;

/// One plane-wave mode prepared for exact time integration: coefficient
/// (any multiplier already applied), frequency, and time phase a(xi).
struct KernelMode {
    xi: Vec<f64>,
    coeff: Complex64,
    a: f64,
}

/// Exact integral over `t in [-t_half, t_half]` of
/// `|sum_k c_k exp(i(xi_k . x + t a_k))|^2` via the pairwise kernel
/// `S(d) = 2 sin(t_half d)/d`, which is `2 t_half` at `d = 0`.
fn windowed_time_norm_sq(modes: &[KernelMode], x: &[f64], t_half: f64) -> f64 {
    let phased: Vec<(Complex64, f64)> = modes
        .iter()
        .map(|m| {
            let ph: f64 = m.xi.iter().zip(x).map(|(a, b)| a * b).sum();
            (m.coeff * Complex64::new(0.0, ph).exp(), m.a)
        })
        .collect();
    let mut total = 0.0;
    for (k, (ck, ak)) in phased.iter().enumerate() {
        total += ck.norm_sqr() * 2.0 * t_half;
        for (cl, al) in &phased[..k] {
            let d = ak - al;
            let s = if d == 0.0 { 2.0 * t_half } else { 2.0 * (t_half * d).sin() / d };
            total += 2.0 * (ck * cl.conj()).re * s;
        }
    }
    total
}

/// Deterministic wave packet: frequency coefficients `envelope(xi)` with the
/// lattice parity sign folded in, so the band-limited interpolant is the
/// aligned superposition `sum_k env(xi_k) exp(i xi_k . x)` -- a packet
/// peaked at `x = 0`. Unit `L^2` norm. The envelope is sampled at every
/// lattice frequency and must return exactly 0 outside its intended
/// support.
pub fn packet_field(grid: &GridSpec, envelope: impl Fn(&[f64]) -> f64) -> Result<ComplexField> {
    let axes = grid.freq_axes();
    let mut vals = vec![Complex64::ZERO; grid.total_points()];
    let mut xi = vec![0.0; grid.dim()];
    let mut idx = vec![0usize; grid.dim()];
    let mut hits = 0usize;
    for (flat, slot) in vals.iter_mut().enumerate() {
        grid.unravel(flat, &mut idx);
        let mut parity = 0i64;
        for j in 0..grid.dim() {
            xi[j] = axes[j][idx[j]];
            parity += GridSpec::mode_index(grid.points(j), idx[j]);
        }
        let e = envelope(&xi);
        if !e.is_finite() {
            return Err(LabError::Multiplier { point: xi.clone() });
        }
        if e != 0.0 {
            let sign = if parity.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            *slot = Complex64::new(sign * e, 0.0);
            hits += 1;
        }
    }
    if hits == 0 {
        return Err(LabError::EmptySupport("packet envelope vanishes on the lattice".into()));
    }
    let mut f = ComplexField::from_values(grid, Space::Frequency, vals)?;
    let n = f.l2_norm();
    f.scale(Complex64::new(1.0 / n, 0.0));
    Ok(f)
}

/// Per-site deviations of the one-period time norm from the spatial norm.
#[derive(Debug, Clone)]
pub struct TranslationReport {
    /// Relative deviation at each requested site.
    pub per_sample: Vec<f64>,
    pub max_rel_deviation: f64,
}

/// At each requested lattice site, integrate `|exp(itD) phi|^2` over one
/// full period in `t` with the equal-weight periodic rule and compare the
/// square root against `||phi||_2`. The flow only translates the profile,
/// so the two agree up to roundoff; the check exercises the whole
/// propagator and transform stack. `time_samples` must be at least the
/// point count so the periodic rule integrates the trigonometric
/// polynomial `|phi|^2` exactly.
pub fn translation_identity_check(
    phi: &ComplexField,
    x_samples: &[usize],
    time_samples: usize,
) -> Result<TranslationReport> {
    let grid = phi.grid();
    if grid.dim() != 1 {
        return Err(LabError::Param("translation identity is a 1D check".into()));
    }
    if x_samples.is_empty() {
        return Err(LabError::Param("need at least one sample site".into()));
    }
    let n = grid.points(0);
    if let Some(&bad) = x_samples.iter().find(|&&i| i >= n) {
        return Err(LabError::Param(format!("sample index {bad} outside grid of {n} points")));
    }
    if time_samples < n {
        return Err(LabError::Param(format!(
            "one-period rule needs at least {n} time samples for exactness, got {time_samples}"
        )));
    }
    let norm = phi.l2_norm();
    if norm == 0.0 {
        return Err(LabError::ZeroNorm);
    }
    let a_vals = grid.eval_on_freq_lattice(|xi| xi[0]);
    let dt = grid.len(0) / time_samples as f64;
    let slices: Vec<Vec<Complex64>> = (0..time_samples)
        .into_par_iter()
        .map(|k| -> Result<Vec<Complex64>> {
            let u = propagate_values(phi, &a_vals, k as f64 * dt)?;
            let u = if u.space() == Space::Physical { u } else { to_physical(&u)? };
            Ok(x_samples.iter().map(|&i| u.values()[i]).collect())
        })
        .collect::<Result<_>>()?;
    let per_sample: Vec<f64> = (0..x_samples.len())
        .map(|s| {
            let sq: f64 = slices.iter().map(|row| row[s].norm_sqr() * dt).sum();
            (sq.sqrt() - norm).abs() / norm
        })
        .collect();
    let max_rel_deviation = per_sample.iter().cloned().fold(0.0, f64::max);
    Ok(TranslationReport { per_sample, max_rel_deviation })
}

/// Measured order-comparison ratio of the model flows.
#[derive(Debug, Clone)]
pub struct ModelEqualityReport {
    /// Mean over the evaluation points (the measured ratio).
    pub ratio: f64,
    pub per_sample: Vec<f64>,
    /// Largest difference between per-point ratios.
    pub x_spread: f64,
    /// Half-windows actually used for the order-l and order-m sides.
    pub window_low: f64,
    pub window_high: f64,
}

fn model_side(
    modes: &[(Vec<f64>, Complex64)],
    p: u32,
    dim: usize,
) -> (Vec<KernelMode>, f64) {
    let pf = p as f64;
    let mut out = Vec::new();
    let mut v_min = f64::INFINITY;
    for (xi, d) in modes {
        let (b, a, speed) = if dim == 1 {
            let x = xi[0];
            (x.powf((pf - 1.0) / 2.0), x.powf(pf), pf * x.powf(pf - 1.0))
        } else {
            let r = xi[1].abs();
            (r.powf((pf - 1.0) / 2.0), xi[0] * r.powf(pf - 1.0), r.powf(pf - 1.0))
        };
        if b == 0.0 {
            continue;
        }
        v_min = v_min.min(speed);
        out.push(KernelMode { xi: xi.clone(), coeff: d * b, a });
    }
    (out, v_min)
}

/// Compare the smoothing norms of two model flows on a one-sided field.
///
/// In 1D the sides are `|D|^{(p-1)/2} exp(it|D|^p)` for `p = l, m`; with
/// `supp phi-hat` in `xi > 0` the pointwise `L^2(R_t)` norms at any `x`
/// both equal `sqrt(2 pi / p) ||phi||`, so the measured ratio is
/// `sqrt(l/m)`. In 2D the sides are `|D_y|^{(p-1)/2} exp(it D_x |D_y|^{p-1})`
/// and the ratio is 1. The identity is about one full dispersing passage:
/// every mode group must cover `travel` length units inside its side's
/// window (the window is `travel / min group speed`), and the caller must
/// pick `travel` large enough for complete passage yet short of wrapping.
pub fn model_equality_check(
    l: u32,
    m: u32,
    phi: &ComplexField,
    travel: f64,
    x_samples: &[Vec<f64>],
) -> Result<ModelEqualityReport> {
    let dim = phi.grid().dim();
    if dim != 1 && dim != 2 {
        return Err(LabError::Param("model comparison is a 1D or 2D check".into()));
    }
    if l == 0 || m == 0 {
        return Err(LabError::Param("model orders must be at least 1".into()));
    }
    if !(travel.is_finite() && travel > 0.0) {
        return Err(LabError::Param(format!("travel must be positive and finite, got {travel}")));
    }
    if x_samples.is_empty() || x_samples.iter().any(|x| x.len() != dim) {
        return Err(LabError::Param("evaluation points must match the grid dimension".into()));
    }
    let modes = phi.plane_wave_modes()?;
    if modes.is_empty() {
        return Err(LabError::ZeroNorm);
    }
    if let Some((xi, _)) = modes.iter().find(|(xi, _)| xi[0] <= 0.0) {
        return Err(LabError::Band(format!(
            "two-sided support: mode at xi = {xi:?} (model identities need supp in xi_1 > 0)"
        )));
    }
    let (low, v_low) = model_side(&modes, l, dim);
    let (high, v_high) = model_side(&modes, m, dim);
    if low.is_empty() || high.is_empty() {
        return Err(LabError::EmptySupport("smoother annihilates every mode of one side".into()));
    }
    let window_low = travel / v_low;
    let window_high = travel / v_high;
    let per_sample: Vec<f64> = x_samples
        .par_iter()
        .map(|x| {
            let hi = windowed_time_norm_sq(&high, x, window_high).max(0.0);
            let lo = windowed_time_norm_sq(&low, x, window_low).max(0.0);
            (hi / lo).sqrt()
        })
        .collect();
    let ratio = per_sample.iter().sum::<f64>() / per_sample.len() as f64;
    let x_spread = per_sample.iter().cloned().fold(f64::MIN, f64::max)
        - per_sample.iter().cloned().fold(f64::MAX, f64::min);
    Ok(ModelEqualityReport { ratio, per_sample, x_spread, window_low, window_high })
}

/// A comparison of two radial dispersion relations on a common support:
/// `|| chi sigma(D) e^{itf(|D|)} phi ||_{L^2_t} <= A || chi tau(D) e^{itg(|D|)} phi ||_{L^2_t}`
/// pointwise in `x`, where `A` is the supremum of
/// `(|sigma|/|f'|^{1/2}) (|g'|^{1/2}/|tau|)` over the lattice radii in the
/// support.
pub struct ComparisonCase {
    f: RadialProfile,
    g: RadialProfile,
    sigma: ScalarFn,
    tau: ScalarFn,
    chi: SupportFn,
    a_bound: f64,
    radii: Vec<f64>,
}

impl fmt::Debug for ComparisonCase {
    fn fmt(&self, w: &mut fmt::Formatter<'_>) -> fmt::Result {
        w.debug_struct("ComparisonCase")
            .field("a_bound", &self.a_bound)
            .field("support_radii", &self.radii.len())
            .finish()
    }
}

fn check_monotone(profile: &RadialProfile, label: &str, radii: &[f64]) -> Result<()> {
    let mut sign = 0.0f64;
    for &rho in radii {
        let d = profile.deriv(rho);
        if !d.is_finite() || d == 0.0 {
            return Err(LabError::Monotonicity(format!(
                "{label}' = {d} at rho = {rho}; strict monotonicity on the support is required"
            )));
        }
        if sign == 0.0 {
            sign = d.signum();
        } else if d.signum() != sign {
            return Err(LabError::Monotonicity(format!(
                "{label}' changes sign at rho = {rho} inside the support"
            )));
        }
    }
    Ok(())
}

impl ComparisonCase {
    /// Build a case over the lattice radii of `grid` that satisfy `chi`,
    /// verifying strict monotonicity of both profiles there and computing
    /// the comparison constant `A`.
    pub fn new(
        grid: &GridSpec,
        f: RadialProfile,
        sigma: ScalarFn,
        g: RadialProfile,
        tau: ScalarFn,
        chi: SupportFn,
    ) -> Result<Self> {
        let mut radii: Vec<f64> = Vec::new();
        let axes = grid.freq_axes();
        let mut xi = vec![0.0; grid.dim()];
        for flat in 0..grid.total_points() {
            grid.freq_at(flat, &axes, &mut xi);
            let rho = xi.iter().map(|c| c * c).sum::<f64>().sqrt();
            if chi(rho) {
                radii.push(rho);
            }
        }
        radii.sort_by(|a, b| a.partial_cmp(b).unwrap());
        radii.dedup();
        if radii.is_empty() {
            return Err(LabError::EmptySupport("chi excludes every lattice radius".into()));
        }
        check_monotone(&f, "f", &radii)?;
        check_monotone(&g, "g", &radii)?;
        let mut a_bound = 0.0f64;
        for &rho in &radii {
            let t = tau(rho);
            let s = sigma(rho);
            if t == 0.0 && s != 0.0 {
                return Err(LabError::Param(format!(
                    "tau vanishes at rho = {rho} while sigma does not; A is infinite"
                )));
            }
            if s == 0.0 {
                continue;
            }
            let q = (s.abs() / f.deriv(rho).abs().sqrt()) * (g.deriv(rho).abs().sqrt() / t.abs());
            if !q.is_finite() {
                return Err(LabError::Param(format!("comparison quotient is {q} at rho = {rho}")));
            }
            a_bound = a_bound.max(q);
        }
        Ok(Self { f, g, sigma, tau, chi, a_bound, radii })
    }

    pub fn a_bound(&self) -> f64 {
        self.a_bound
    }
}

/// Observed two-sided norms of a comparison case.
#[derive(Debug, Clone)]
pub struct CompareRadialReport {
    pub a_bound: f64,
    /// `(lhs, rhs)` time norms at each evaluation point.
    pub per_sample: Vec<(f64, f64)>,
    /// Largest observed `lhs/rhs`; the comparison principle asserts this
    /// stays below `a_bound` up to roundoff once both passages are complete.
    pub worst_quotient: f64,
}

/// Evaluate both sides of a [`ComparisonCase`] on a field at the given
/// points, integrating each side exactly over `[-travel/v_min, +travel/v_min]`
/// with `v_min` the slowest group speed of that side on the field's modes.
pub fn compare_radial(
    case: &ComparisonCase,
    phi: &ComplexField,
    x_samples: &[f64],
    travel: f64,
) -> Result<CompareRadialReport> {
    if phi.grid().dim() != 1 {
        return Err(LabError::Param("radial comparison fields are 1D".into()));
    }
    if x_samples.is_empty() {
        return Err(LabError::Param("need at least one evaluation point".into()));
    }
    if !(travel.is_finite() && travel > 0.0) {
        return Err(LabError::Param(format!("travel must be positive and finite, got {travel}")));
    }
    let mut lhs = Vec::new();
    let mut rhs = Vec::new();
    let (mut vf, mut vg) = (f64::INFINITY, f64::INFINITY);
    for (xi, d) in phi.plane_wave_modes()? {
        let rho = xi[0].abs();
        if !(case.chi)(rho) {
            continue;
        }
        vf = vf.min(case.f.deriv(rho).abs());
        vg = vg.min(case.g.deriv(rho).abs());
        lhs.push(KernelMode { xi: xi.clone(), coeff: d * (case.sigma)(rho), a: case.f.eval(rho) });
        rhs.push(KernelMode { xi, coeff: d * (case.tau)(rho), a: case.g.eval(rho) });
    }
    if rhs.iter().all(|m| m.coeff == Complex64::ZERO) {
        return Err(LabError::EmptySupport("right-hand side vanishes on the field".into()));
    }
    let tf = travel / vf;
    let tg = travel / vg;
    let per_sample: Vec<(f64, f64)> = x_samples
        .par_iter()
        .map(|&x| {
            let l = windowed_time_norm_sq(&lhs, &[x], tf).max(0.0).sqrt();
            let r = windowed_time_norm_sq(&rhs, &[x], tg).max(0.0).sqrt();
            (l, r)
        })
        .collect();
    let worst_quotient = per_sample.iter().map(|&(l, r)| l / r).fold(0.0, f64::max);
    Ok(CompareRadialReport { a_bound: case.a_bound, per_sample, worst_quotient })
}

/// Verify `|sigma| <= A |f'|^{1/2}` on the lattice radii in `chi` (with `A`
/// the computed supremum of the quotient) and record the weighted smoothing
/// ratio of the spec `(f, sigma chi)` with weight `<x>^{-s}`: returns
/// `(A, ratio)`.
#[allow(clippy::too_many_arguments)]
pub fn secondary_comparison_check(
    grid: &GridSpec,
    f: &RadialProfile,
    sigma: ScalarFn,
    chi: SupportFn,
    s: f64,
    t_window: f64,
    time_samples: usize,
    phi: &ComplexField,
) -> Result<(f64, f64)> {
    let norm = phi.l2_norm();
    if norm == 0.0 {
        return Err(LabError::ZeroNorm);
    }
    let axes = grid.freq_axes();
    let mut xi = vec![0.0; grid.dim()];
    let mut a_bound = 0.0f64;
    let total = grid.total_points();
    let mut a_vals = vec![0.0; total];
    let mut sig = vec![0.0; total];
    for flat in 0..total {
        grid.freq_at(flat, &axes, &mut xi);
        let rho = xi.iter().map(|c| c * c).sum::<f64>().sqrt();
        a_vals[flat] = f.eval(rho);
        if !a_vals[flat].is_finite() {
            return Err(LabError::Multiplier { point: xi.clone() });
        }
        if !chi(rho) {
            continue;
        }
        let sv = sigma(rho);
        if !sv.is_finite() {
            return Err(LabError::Multiplier { point: xi.clone() });
        }
        sig[flat] = sv;
        if sv != 0.0 {
            let q = sv.abs() / f.deriv(rho).abs().sqrt();
            if !q.is_finite() {
                return Err(LabError::Param(format!(
                    "sigma is not dominated by |f'|^(1/2) at rho = {rho} (f' vanishes)"
                )));
            }
            a_bound = a_bound.max(q);
        }
    }
    let w = WeightSpec::bracket(s)?.values(grid)?;
    let ratio = window_norm(&a_vals, &w, &sig, phi, -t_window, t_window, time_samples)? / norm;
    Ok((a_bound, ratio))
}

/// Real roots of one derivative slice, or the marker that the derivative
/// vanishes identically there.
#[derive(Debug, Clone, PartialEq)]
pub enum SliceRoots {
    Zero,
    /// Sorted, deduplicated real roots (possibly empty).
    Roots(Vec<f64>),
}

/// Per-axis monotone decomposition of a polynomial symbol on a frequency
/// lattice: root tables of `d_j a` per slice of the remaining axes, a piece
/// key per lattice point, and the combiner multiplier `eta`.
#[derive(Debug, Clone)]
pub struct MonotoneDecomposition {
    pub axis: usize,
    /// Root table per slice, row-major over the remaining axes in order.
    pub slices: Vec<SliceRoots>,
    /// Per lattice point: `(slice root count, interval index)`, or `None`
    /// on a root shell or a vanishing-derivative slice.
    pub piece_of: Vec<Option<(usize, usize)>>,
    /// `|grad a|^{1/2} / sum_j |d_j a|^{1/2}` on the lattice (0 where the
    /// gradient vanishes).
    pub eta: Vec<f64>,
    /// Distinct piece keys present on the lattice, sorted.
    pub pieces: Vec<(usize, usize)>,
}

impl MonotoneDecomposition {
    /// 0/1 indicator table of one piece.
    pub fn indicator(&self, piece: (usize, usize)) -> Vec<f64> {
        self.piece_of
            .iter()
            .map(|p| if *p == Some(piece) { 1.0 } else { 0.0 })
            .collect()
    }
}

/// Real roots of the ascending-coefficient polynomial via companion-matrix
/// eigenvalues: imaginary parts below [`tol::ROOT_IMAG`] are accepted as
/// real, and clusters closer than [`tol::ROOT_DEDUP`] merge to their mean.
/// Trailing coefficients at roundoff scale are trimmed first so near-degree
/// drops do not spray spurious far roots.
fn real_roots(coeffs: &[f64]) -> Vec<f64> {
    let scale = coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let mut c: Vec<f64> = coeffs.to_vec();
    while c.len() > 1 && c.last().unwrap().abs() <= scale * 1e-12 {
        c.pop();
    }
    let d = c.len() - 1;
    let mut roots: Vec<f64> = match d {
        0 => Vec::new(),
        1 => vec![-c[0] / c[1]],
        _ => {
            let lead = c[d];
            let companion = DMatrix::<f64>::from_fn(d, d, |r, col| {
                if col == d - 1 {
                    -c[r] / lead
                } else if r == col + 1 {
                    1.0
                } else {
                    0.0
                }
            });
            companion
                .complex_eigenvalues()
                .iter()
                .filter(|z| z.im.abs() < tol::ROOT_IMAG)
                .map(|z| z.re)
                .collect()
        }
    };
    roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut merged: Vec<f64> = Vec::new();
    let mut i = 0;
    while i < roots.len() {
        let mut j = i + 1;
        while j < roots.len() && roots[j] - roots[i] <= tol::ROOT_DEDUP {
            j += 1;
        }
        merged.push(roots[i..j].iter().sum::<f64>() / (j - i) as f64);
        i = j;
    }
    merged
}

/// Decompose `{d_j a != 0}` on the lattice into the pieces between the real
/// roots of the `xi_j`-derivative, slice by slice in the remaining
/// variables. Lattice points within [`tol::ROOT_DEDUP`] of a root, and
/// slices where the derivative vanishes identically, belong to no piece
/// (their multiplier is 0 downstream). Pieces are keyed by
/// `(slice root count, interval index)`, so a key names the union over all
/// slices with that root count -- the sign of `d_j a` is constant on each.
pub fn monotone_decomposition(
    p: &PolynomialSymbol,
    axis: usize,
    grid: &GridSpec,
) -> Result<MonotoneDecomposition> {
    let dim = grid.dim();
    if p.dim() != dim {
        return Err(LabError::Shape(format!(
            "symbol dimension {} does not match grid dimension {dim}",
            p.dim()
        )));
    }
    if axis >= dim {
        return Err(LabError::Param(format!("axis {axis} out of range for dimension {dim}")));
    }
    if p.degree() == 0 {
        return Err(LabError::Param("constant symbol has no monotone decomposition".into()));
    }
    let dp = p.partial(axis);
    let others: Vec<usize> = (0..dim).filter(|&j| j != axis).collect();
    let slice_total: usize = others.iter().map(|&j| grid.points(j)).product();
    let axes = grid.freq_axes();

    let slices: Vec<SliceRoots> = (0..slice_total)
        .into_par_iter()
        .map(|sidx| {
            let mut rem = sidx;
            let mut frozen = vec![0.0; others.len()];
            for (pos, &j) in others.iter().enumerate() {
                let later: usize = others[pos + 1..].iter().map(|&jj| grid.points(jj)).product();
                frozen[pos] = axes[j][rem / later];
                rem %= later;
            }
            let coeffs = dp.univariate_coeffs(axis, &frozen);
            if coeffs.len() == 1 && coeffs[0] == 0.0 {
                SliceRoots::Zero
            } else {
                SliceRoots::Roots(real_roots(&coeffs))
            }
        })
        .collect();

    let grads: Vec<PolynomialSymbol> = p.gradient();
    let total = grid.total_points();
    let mut piece_of = vec![None; total];
    let mut eta = vec![0.0; total];
    let mut keys = BTreeSet::new();
    let mut idx = vec![0usize; dim];
    let mut xi = vec![0.0; dim];
    for flat in 0..total {
        grid.unravel(flat, &mut idx);
        for j in 0..dim {
            xi[j] = axes[j][idx[j]];
        }
        let mut sidx = 0usize;
        for (pos, &j) in others.iter().enumerate() {
            let later: usize = others[pos + 1..].iter().map(|&jj| grid.points(jj)).product();
            sidx += idx[j] * later;
        }
        if let SliceRoots::Roots(roots) = &slices[sidx] {
            let v = xi[axis];
            if roots.iter().all(|r| (v - r).abs() > tol::ROOT_DEDUP) {
                let interval = roots.partition_point(|r| *r < v);
                piece_of[flat] = Some((roots.len(), interval));
                keys.insert((roots.len(), interval));
            }
        }
        let parts: Vec<f64> = grads.iter().map(|g| g.eval(&xi)).collect();
        let sum_roots: f64 = parts.iter().map(|d| d.abs().sqrt()).sum();
        if sum_roots > 0.0 {
            let gn = parts.iter().map(|d| d * d).sum::<f64>().sqrt();
            eta[flat] = gn.sqrt() / sum_roots;
        }
    }
    Ok(MonotoneDecomposition {
        axis,
        slices,
        piece_of,
        eta,
        pieces: keys.into_iter().collect(),
    })
}

/// Smoothing ratio of one monotone piece.
#[derive(Debug, Clone)]
pub struct PieceRatio {
    pub axis: usize,
    /// Piece key: root count of the slice family and interval index.
    pub piece: (usize, usize),
    pub ratio: f64,
}

/// The assembled piecewise estimate of a polynomial symbol.
#[derive(Debug, Clone)]
pub struct PolynomialAssembly {
    pub decompositions: Vec<MonotoneDecomposition>,
    /// Ratio per piece: weight `<x_j>^{-s}`, smoother `|d_j a|^{1/2}` on the
    /// piece.
    pub per_piece: Vec<PieceRatio>,
    /// Per-axis sums of the piece ratios.
    pub per_axis: Vec<f64>,
    /// Ratio with weight `<x>^{-s}` and the invariant smoother
    /// `|grad a|^{1/2}`.
    pub combined: f64,
    /// `||<x_j>^{-s} |d_j a|^{1/2} e^{ita(D)} eta(D) phi|| / ||phi||` per
    /// axis: the triangle inequality bounds `combined` by their sum.
    pub eta_axis_norms: Vec<f64>,
}

/// Assemble the piecewise-monotone estimate of a polynomial symbol on one
/// field: per-piece ratios, their per-axis sums, the combined invariant
/// ratio, and the eta-substituted axis norms that dominate it.
pub fn assemble_polynomial_estimate(
    p: &PolynomialSymbol,
    s: f64,
    phi: &ComplexField,
    grid: &GridSpec,
    t_window: f64,
    time_samples: usize,
) -> Result<PolynomialAssembly> {
    let dim = grid.dim();
    let norm = phi.l2_norm();
    if norm == 0.0 {
        return Err(LabError::ZeroNorm);
    }
    let a_vals = grid.eval_on_freq_lattice(|xi| p.eval(xi));
    let w_rad = WeightSpec::bracket(s)?.values(grid)?;
    let decompositions: Vec<MonotoneDecomposition> =
        (0..dim).map(|j| monotone_decomposition(p, j, grid)).collect::<Result<_>>()?;
    let eta = decompositions[0].eta.clone();
    let phi_eta = apply_multiplier_values(phi, &eta)?;

    let mut per_piece = Vec::new();
    let mut per_axis = Vec::new();
    let mut eta_axis_norms = Vec::new();
    for (j, dec) in decompositions.iter().enumerate() {
        let dpj = p.partial(j);
        let droot = grid.eval_on_freq_lattice(|xi| dpj.eval(xi).abs().sqrt());
        let w_j = grid.eval_on_x_lattice(|x| (1.0 + x[j] * x[j]).powf(-s / 2.0));
        let mut axis_sum = 0.0;
        for &key in &dec.pieces {
            let sig: Vec<f64> = dec
                .piece_of
                .iter()
                .zip(&droot)
                .map(|(pk, d)| if *pk == Some(key) { *d } else { 0.0 })
                .collect();
            let ratio =
                window_norm(&a_vals, &w_j, &sig, phi, -t_window, t_window, time_samples)? / norm;
            axis_sum += ratio;
            per_piece.push(PieceRatio { axis: j, piece: key, ratio });
        }
        per_axis.push(axis_sum);
        let ea = window_norm(&a_vals, &w_j, &droot, &phi_eta, -t_window, t_window, time_samples)?
            / norm;
        eta_axis_norms.push(ea);
    }
    let sig_inv = grid.eval_on_freq_lattice(|xi| {
        let gn: f64 = (0..dim).map(|j| p.partial(j).eval(xi).powi(2)).sum::<f64>().sqrt();
        gn.sqrt()
    });
    let combined =
        window_norm(&a_vals, &w_rad, &sig_inv, phi, -t_window, t_window, time_samples)? / norm;
    Ok(PolynomialAssembly { decompositions, per_piece, per_axis, combined, eta_axis_norms })
}
