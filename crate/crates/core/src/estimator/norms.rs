//! Weighted spacetime norms `|| w(x) sigma(D) e^{i t a(D)} phi ||_{L^2(t,x)}`.
//!
//! Time integration is a trapezoid rule. Because the field at the two
//! endpoints of a full period coincides, the half-weight endpoint rule
//! degenerates to the equal-weight periodic rule there and integrates
//! trigonometric polynomials of degree < time_samples exactly; off the
//! periodic case it is the ordinary second-order trapezoid rule.
//!
//! All time samples are evaluated in parallel, then reduced in node order,
//! so results are bit-identical at any worker count.

use rayon::prelude::*;

use crate::error::{LabError, Result};
use crate::field::ComplexField;
use crate::symbol::Symbol;
use crate::transform::{propagate_values, to_frequency, to_physical};

use super::spec::EstimateSpec;

/// Trapezoid nodes and weights over `[lo, hi]` with `n` intervals
/// (`n + 1` nodes, half-weight endpoints).
pub(crate) fn trapezoid(lo: f64, hi: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
    let dt = (hi - lo) / n as f64;
    let nodes: Vec<f64> = (0..=n).map(|j| lo + j as f64 * dt).collect();
    let weights: Vec<f64> = (0..=n)
        .map(|j| if j == 0 || j == n { dt / 2.0 } else { dt })
        .collect();
    (nodes, weights)
}

/// Core quadrature: given precomputed symbol values, weight table and
/// smoother table, integrate `|| w . (sigma phi)(t) ||^2` over the window
/// and return the square root.
pub fn window_norm(
    a_vals: &[f64],
    w: &[f64],
    sigma: &[f64],
    phi: &ComplexField,
    lo: f64,
    hi: f64,
    time_samples: usize,
) -> Result<f64> {
    let grid = phi.grid().clone();
    let hat = to_frequency(phi)?;
    let mut smoothed = hat;
    for (v, s) in smoothed.values_mut().iter_mut().zip(sigma) {
        *v *= s;
    }
    let cell = grid.cell_volume();
    let (nodes, weights) = trapezoid(lo, hi, time_samples);
    let samples: Vec<f64> = nodes
        .par_iter()
        .map(|&t| -> Result<f64> {
            let prop = propagate_values(&smoothed, a_vals, t)?;
            let phys = to_physical(&prop)?;
            Ok(phys
                .values()
                .iter()
                .zip(w)
                .map(|(v, wx)| wx * wx * v.norm_sqr())
                .sum::<f64>()
                * cell)
        })
        .collect::<Result<Vec<_>>>()?;
    // Sequential node-order reduction keeps the sum independent of the
    // rayon worker count.
    let total: f64 = samples.iter().zip(&weights).map(|(s, c)| s * c).sum();
    Ok(total.sqrt())
}

/// Precomputed per-grid tables for one estimate configuration, reusable
/// across fields and time windows.
pub(crate) struct EstimateTables {
    pub a_vals: Vec<f64>,
    pub w: Vec<f64>,
    pub sigma: Vec<f64>,
}

pub(crate) fn build_tables(
    a: &Symbol,
    weight: &super::spec::WeightSpec,
    smoother: &super::spec::SmootherSpec,
    grid: &crate::grid::GridSpec,
) -> Result<EstimateTables> {
    if a.dim() != grid.dim() {
        return Err(LabError::Shape(format!(
            "symbol '{}' has dimension {}, grid has {}",
            a.name(),
            a.dim(),
            grid.dim()
        )));
    }
    Ok(EstimateTables {
        a_vals: a.lattice_values(grid)?,
        w: weight.values(grid)?,
        sigma: smoother.values(grid, Some(a))?,
    })
}

/// `|| w(x) sigma(D) e^{i t a(D)} phi ||_{L^2([-T,T] x torus)}`.
pub fn spacetime_norm(a: &Symbol, spec: &EstimateSpec, phi: &ComplexField) -> Result<f64> {
    let t = build_tables(a, &spec.weight, &spec.smoother, phi.grid())?;
    window_norm(
        &t.a_vals,
        &t.w,
        &t.sigma,
        phi,
        -spec.t_window,
        spec.t_window,
        spec.time_samples,
    )
}

/// Spacetime norm divided by `||phi||`: the per-field sample of the
/// estimate's constant.
pub fn smoothing_ratio(a: &Symbol, spec: &EstimateSpec, phi: &ComplexField) -> Result<f64> {
    let n = phi.l2_norm();
    if n == 0.0 {
        return Err(LabError::ZeroNorm);
    }
    Ok(spacetime_norm(a, spec, phi)? / n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimator::spec::{SmootherSpec, WeightSpec};
    use crate::field::random_band_limited;
    use crate::grid::GridSpec;
    use crate::symbol::{PolynomialSymbol, Symbol};
    use num_complex::Complex64;

    fn translation_symbol() -> Symbol {
        Symbol::from_poly("xi", PolynomialSymbol::variable(1, 0))
    }

    fn band(grid: &GridSpec) -> impl Fn(&[f64]) -> bool {
        let cut = 2.0 / 3.0 * grid.nyquist(0);
        move |xi: &[f64]| {
            let r = xi.iter().map(|c| c * c).sum::<f64>().sqrt();
            r > 0.0 && r <= cut
        }
    }

    #[test]
    fn trapezoid_weights_sum_to_window_length() {
        let (nodes, weights) = trapezoid(-3.0, 5.0, 37);
        assert_eq!(nodes.len(), 38);
        let sum: f64 = weights.iter().sum();
        assert!((sum - 8.0).abs() < 1e-12, "weights must sum to the length, got {sum}");
        assert_eq!(weights[0], weights[37]);
        assert_eq!(weights[0] * 2.0, weights[1]);
    }

    #[test]
    fn translation_full_period_matches_closed_form() {
        // For a(xi) = xi the evolution is lattice translation, so over one
        // full period the time average of |phi(x+t)|^2 at fixed x is
        // ||phi||^2, making the squared norm exactly
        // ||phi||^2 * sum_x <x>^-2 h. That lattice sum is a periodic
        // trapezoid approximation of 2*arctan(L/2).
        let l = 40.0;
        let n = 256usize;
        let g = GridSpec::new(&[l], &[n]).unwrap();
        let a = translation_symbol();
        let spec = EstimateSpec::new(
            WeightSpec::bracket(1.0).unwrap(),
            SmootherSpec::classical(0.0).unwrap(),
            l / 2.0,
            n,
        )
        .unwrap();
        let phi = random_band_limited(&g, band(&g), 11).unwrap();
        let value = spacetime_norm(&a, &spec, &phi).unwrap();

        let h = g.spacing(0);
        let lattice_sum: f64 = g
            .x_axis(0)
            .iter()
            .map(|x| h / (1.0 + x * x))
            .sum();
        let norm = phi.l2_norm();
        let expect = (norm * norm * lattice_sum).sqrt();
        assert!(
            (value - expect).abs() / expect < 1e-12,
            "full-period translation norm: got {value}, lattice closed form {expect}"
        );

        let analytic = 2.0 * (l / 2.0).atan();
        assert!(
            (lattice_sum - analytic).abs() < 1e-3,
            "lattice sum {lattice_sum} vs 2 arctan(L/2) = {analytic}"
        );
        let ratio = smoothing_ratio(&a, &spec, &phi).unwrap();
        assert!(
            (ratio - analytic.sqrt()).abs() < 1e-3,
            "translation ratio {ratio} vs sqrt(2 arctan 20) = {}",
            analytic.sqrt()
        );
    }

    #[test]
    fn norm_is_homogeneous_in_field_and_smoother() {
        let g = GridSpec::new(&[20.0], &[64]).unwrap();
        let a = translation_symbol();
        let spec = EstimateSpec::new(
            WeightSpec::bracket(1.0).unwrap(),
            SmootherSpec::classical_half(),
            3.0,
            32,
        )
        .unwrap();
        let phi = random_band_limited(&g, band(&g), 3).unwrap();
        let base = spacetime_norm(&a, &spec, &phi).unwrap();

        let mut scaled = phi.clone();
        scaled.scale(Complex64::new(2.0, 0.0));
        let doubled = spacetime_norm(&a, &spec, &scaled).unwrap();
        assert!(
            (doubled - 2.0 * base).abs() / base < 1e-12,
            "norm must scale linearly with the field"
        );

        let t = build_tables(&a, &spec.weight, &spec.smoother, &g).unwrap();
        let twice: Vec<f64> = t.sigma.iter().map(|s| 2.0 * s).collect();
        let v1 = window_norm(&t.a_vals, &t.w, &t.sigma, &phi, -3.0, 3.0, 32).unwrap();
        let v2 = window_norm(&t.a_vals, &t.w, &twice, &phi, -3.0, 3.0, 32).unwrap();
        assert!(
            (v2 - 2.0 * v1).abs() / v1 < 1e-12,
            "norm must scale linearly with the smoother"
        );
    }

    #[test]
    fn stationary_symbol_reduces_to_weighted_norm() {
        // a = 0 freezes the evolution: the integral is exactly
        // 2T * ||w phi||^2 (trapezoid is exact on constants).
        let g = GridSpec::new(&[20.0], &[64]).unwrap();
        let a = Symbol::from_poly("zero", PolynomialSymbol::zero(1));
        let t_window = 3.0;
        let spec = EstimateSpec::new(
            WeightSpec::bracket(1.0).unwrap(),
            SmootherSpec::classical(0.0).unwrap(),
            t_window,
            32,
        )
        .unwrap();
        let phi = random_band_limited(&g, band(&g), 5).unwrap();
        let value = spacetime_norm(&a, &spec, &phi).unwrap();

        let w = spec.weight.values(&g).unwrap();
        let phys = to_physical(&phi).unwrap();
        let weighted_sq: f64 = phys
            .values()
            .iter()
            .zip(&w)
            .map(|(v, wx)| wx * wx * v.norm_sqr())
            .sum::<f64>()
            * g.cell_volume();
        let expect = (2.0 * t_window * weighted_sq).sqrt();
        assert!(
            (value - expect).abs() / expect < 1e-12,
            "stationary norm: got {value}, expect {expect}"
        );
    }

    #[test]
    fn norm_is_monotone_in_window() {
        let g = GridSpec::new(&[20.0], &[64]).unwrap();
        let a = Symbol::from_poly("xi^2", PolynomialSymbol::from_terms(1, &[([2, 0, 0], 1.0)]).unwrap());
        let phi = random_band_limited(&g, band(&g), 9).unwrap();
        let mk = |t: f64| {
            EstimateSpec::new(
                WeightSpec::bracket(1.0).unwrap(),
                SmootherSpec::invariant(),
                t,
                64,
            )
            .unwrap()
        };
        let short = spacetime_norm(&a, &mk(2.0), &phi).unwrap();
        let long = spacetime_norm(&a, &mk(4.0), &phi).unwrap();
        assert!(
            long >= short * (1.0 - 1e-12),
            "window growth must not shrink the norm: {short} -> {long}"
        );
    }

    #[test]
    fn invariant_vs_classical_sqrt2_for_quadratic() {
        // |grad(xi^2)|^(1/2) = sqrt(2)|xi|^(1/2) pointwise, so the whole
        // norm inherits the factor sqrt(2) exactly.
        let g = GridSpec::new(&[20.0], &[128]).unwrap();
        let a = Symbol::from_poly("xi^2", PolynomialSymbol::from_terms(1, &[([2, 0, 0], 1.0)]).unwrap());
        let phi = random_band_limited(&g, band(&g), 17).unwrap();
        let mk = |s: SmootherSpec| {
            EstimateSpec::new(WeightSpec::bracket(1.0).unwrap(), s, 5.0, 64).unwrap()
        };
        let inv = spacetime_norm(&a, &mk(SmootherSpec::invariant()), &phi).unwrap();
        let cls = spacetime_norm(&a, &mk(SmootherSpec::classical_half()), &phi).unwrap();
        let ratio = inv / cls;
        assert!(
            (ratio - std::f64::consts::SQRT_2).abs() < 1e-12,
            "invariant/classical ratio for |xi|^2 must be sqrt(2), got {ratio}"
        );
    }

    #[test]
    fn zero_field_is_rejected() {
        let g = GridSpec::new(&[20.0], &[32]).unwrap();
        let a = translation_symbol();
        let spec = EstimateSpec::new(
            WeightSpec::bracket(1.0).unwrap(),
            SmootherSpec::classical(0.0).unwrap(),
            1.0,
            16,
        )
        .unwrap();
        let zero = ComplexField::zeros(&g, crate::field::Space::Frequency);
        assert!(matches!(
            smoothing_ratio(&a, &spec, &zero),
            Err(LabError::ZeroNorm)
        ));
    }
}
