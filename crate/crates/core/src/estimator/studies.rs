//! Stability studies: refinement ladders and frequency-concentration scans.
//!
//! A refinement study reruns one estimate across a grid ladder under a
//! fixed master seed, exposing whether the estimated constant is a property
//! of the symbol or an artifact of the resolution. A concentration study
//! drives random fields into shrinking frequency shells around a
//! degeneracy and records how classical and invariant smoothing ratios
//! react: where dispersion fails, the classical ratio grows like
//! width^(-1/2) while the invariant one stays put. The study window grows
//! as the shell narrows (see [`concentration_study`]), tracking the
//! residence time of the ever-slower packets; at a fixed window the scan
//! would only measure how frozen the dynamics are.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{LabError, Result};
use crate::field::random_band_limited;
use crate::grid::GridSpec;
use crate::stable_seed;
use crate::symbol::Symbol;

use super::constant::{estimate_constant, ConstantEstimate, ConstantMethod, EnsembleParams};
use super::norms::{build_tables, window_norm};
use super::spec::{EstimateSpec, SmootherSpec, WeightSpec};

/// One rung of a refinement ladder.
#[derive(Debug, Clone, Serialize)]
pub struct RefinementRow {
    pub point_counts: Vec<usize>,
    pub lens: Vec<f64>,
    pub t_window: f64,
    pub time_samples: usize,
    pub estimate: ConstantEstimate,
}

/// Run the same estimate across a grid ladder with one master seed. Member
/// seeds derive from (seed, index) on every rung, so the random streams are
/// laid out identically and only the resolution changes.
pub fn refinement_study(
    a: &Symbol,
    cases: &[(GridSpec, EstimateSpec)],
    method: ConstantMethod,
    params: &EnsembleParams,
    seed: u64,
) -> Result<Vec<RefinementRow>> {
    if cases.is_empty() {
        return Err(LabError::Param("refinement ladder is empty".into()));
    }
    cases
        .iter()
        .map(|(grid, spec)| {
            let estimate = estimate_constant(a, spec, grid, method, params, seed)?;
            Ok(RefinementRow {
                point_counts: grid.point_counts().to_vec(),
                lens: grid.lens().to_vec(),
                t_window: spec.t_window,
                time_samples: spec.time_samples,
                estimate,
            })
        })
        .collect()
}

/// Largest relative deviation of the earlier values from the last (finest)
/// one: the stability figure of a ladder.
pub fn max_rel_deviation_from_last(values: &[f64]) -> f64 {
    match values.split_last() {
        None | Some((_, [])) => 0.0,
        Some((last, rest)) => rest
            .iter()
            .map(|v| (v - last).abs() / last.abs().max(f64::MIN_POSITIVE))
            .fold(0.0, f64::max),
    }
}

/// Where a concentration scan centers its shrinking frequency support.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CenterSpec {
    /// Shell `| |xi| - radius | <= width` around a sphere.
    Sphere { radius: f64 },
    /// Ball `|xi - point| <= width` around a point.
    Point { point: Vec<f64> },
}

impl CenterSpec {
    pub(crate) fn contains(&self, xi: &[f64], width: f64) -> bool {
        match self {
            CenterSpec::Sphere { radius } => {
                let r = xi.iter().map(|c| c * c).sum::<f64>().sqrt();
                (r - radius).abs() <= width
            }
            CenterSpec::Point { point } => {
                let d2: f64 = xi
                    .iter()
                    .zip(point)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                d2.sqrt() <= width
            }
        }
    }
}

/// Mean ratios at one support width.
#[derive(Debug, Clone, Serialize)]
pub struct ConcentrationRow {
    pub width: f64,
    /// Time window actually used at this width (widens as the shell narrows).
    pub t_window: f64,
    pub members: usize,
    /// Mean smoothing ratio with the classical smoother `|xi|^(1/2)`.
    pub classical_ratio: f64,
    /// Mean smoothing ratio with the invariant smoother `|grad a|^(1/2)`.
    pub invariant_ratio: f64,
}

/// Scan shrinking frequency supports around `center`, recording classical
/// and invariant mean ratios at every width. Widths so small that no
/// lattice mode survives surface as an empty-support error.
///
/// `t_window` is the half-window used at the widest shell; a shell of
/// width `w` runs over `t_window * max_width / w`. Packets concentrated
/// at a degeneracy have group speeds of order the width, so their time in
/// the weight bulk grows like `1/w`; scaling the window with it keeps the
/// measurement comparable across the ladder. Any fixed window instead
/// freezes the narrow shells (the squared ratio of a frozen field is
/// proportional to `window x mean squared smoother`), which would tilt
/// every smoother by the same spurious `sqrt(w)`. The classical/invariant
/// quotient is insensitive to this choice; the invariant ratio alone is
/// width-stable only under the scaled window.
#[allow(clippy::too_many_arguments)]
pub fn concentration_study(
    a: &Symbol,
    grid: &GridSpec,
    weight: &WeightSpec,
    t_window: f64,
    time_samples: usize,
    center: &CenterSpec,
    widths: &[f64],
    members: usize,
    seed: u64,
) -> Result<Vec<ConcentrationRow>> {
    if members == 0 {
        return Err(LabError::Param("concentration study needs members >= 1".into()));
    }
    if widths.is_empty() || widths.iter().any(|w| !w.is_finite() || *w <= 0.0) {
        return Err(LabError::Param(format!(
            "widths must be positive and finite, got {widths:?}"
        )));
    }
    let max_width = widths.iter().cloned().fold(0.0, f64::max);
    let classical = build_tables(a, weight, &SmootherSpec::classical_half(), grid)?;
    let invariant = build_tables(a, weight, &SmootherSpec::invariant(), grid)?;
    widths
        .iter()
        .enumerate()
        .map(|(wi, &width)| {
            let width_seed = stable_seed(seed, wi as u64);
            let t_w = t_window * max_width / width;
            let pairs: Vec<(f64, f64)> = (0..members)
                .into_par_iter()
                .map(|k| -> Result<(f64, f64)> {
                    let phi = random_band_limited(
                        grid,
                        |xi: &[f64]| center.contains(xi, width),
                        stable_seed(width_seed, k as u64),
                    )?;
                    let c = window_norm(
                        &classical.a_vals,
                        &classical.w,
                        &classical.sigma,
                        &phi,
                        -t_w,
                        t_w,
                        time_samples,
                    )?;
                    let i = window_norm(
                        &invariant.a_vals,
                        &invariant.w,
                        &invariant.sigma,
                        &phi,
                        -t_w,
                        t_w,
                        time_samples,
                    )?;
                    Ok((c, i))
                })
                .collect::<Result<Vec<_>>>()?;
            let m = members as f64;
            Ok(ConcentrationRow {
                width,
                t_window: t_w,
                members,
                classical_ratio: pairs.iter().map(|p| p.0).sum::<f64>() / m,
                invariant_ratio: pairs.iter().map(|p| p.1).sum::<f64>() / m,
            })
        })
        .collect()
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_slope(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len(), "slope needs paired samples");
    assert!(x.len() >= 2, "slope needs at least two samples");
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let cov: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let var: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    cov / var
}
