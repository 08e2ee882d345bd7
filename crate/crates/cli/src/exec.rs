//! Task execution: turn a validated config into report rows and a details
//! document. All numerical work happens in the core library; this module
//! only wires configs to library calls and flattens the reports.

use std::sync::Arc;

use serde_json::json;

use smoothing_core::canonical::{
    boundedness_probe, equivalence_ensemble, rank_invariance_scan, reduction_quotient,
    CutoffSpec, EquivalenceCase, FrequencyMap,
};
use smoothing_core::comparison::{
    assemble_polynomial_estimate, compare_radial, model_equality_check, monotone_decomposition,
    packet_field, ComparisonCase, SliceRoots,
};
use smoothing_core::estimator::{
    concentration_study, estimate_constant, log_slope, max_rel_deviation_from_last,
    refinement_study, timedep_norm, CenterSpec, ConstantMethod, EnsembleParams, EstimateSpec,
    SmootherSpec, TimeCoefficient, WeightSpec,
};
use smoothing_core::field::random_band_limited;
use smoothing_core::symbol::classify::{classify, default_search_box, ClassificationReport};
use smoothing_core::symbol::Symbol;
use smoothing_core::transform::{propagate_values, to_frequency, to_physical};
use smoothing_core::{ComplexField, GridSpec};

use crate::config::{
    CenterConfig, CliError, CliResult, CompareMode, CutoffConfig, ExperimentConfig, GridConfig,
    MapConfig, StudyConfig, SupportConfig, TaskConfig,
};
use crate::config::{parse_smoother, parse_weight, parse_zeta};
use crate::rows::{grid_label, ReportRow};
use crate::symbols::{infer_dim, parse_symbol_spec};

/// Everything one run produces.
#[derive(Debug)]
pub struct RunOutput {
    pub rows: Vec<ReportRow>,
    pub details: serde_json::Value,
}

/// Execute a validated config.
pub fn execute(cfg: &ExperimentConfig) -> CliResult<RunOutput> {
    match &cfg.task {
        TaskConfig::Classify { symbol, dim } => run_classify(symbol, *dim),
        TaskConfig::Propagate { symbol, t_window, band } => {
            run_propagate(cfg, symbol, *t_window, *band)
        }
        TaskConfig::Estimate {
            symbol,
            weight,
            smoother,
            t_window,
            time_samples,
            method,
            members,
            band,
            study,
        } => run_estimate(
            cfg,
            symbol,
            weight,
            smoother,
            *t_window,
            *time_samples,
            method,
            *members,
            *band,
            study,
        ),
        TaskConfig::Compare { mode } => run_compare(cfg, mode),
        TaskConfig::Decompose { symbol, axis, s, t_window, time_samples, band, assemble } => {
            run_decompose(cfg, symbol, *axis, *s, *t_window, *time_samples, *band, *assemble)
        }
        TaskConfig::Canonical {
            sigma,
            map,
            cutoff,
            zeta,
            weight,
            t_window,
            time_samples,
            members,
            support,
            kappa,
            rank_scan,
            reduction,
        } => run_canonical(
            cfg, sigma, map, cutoff, zeta, weight, *t_window, *time_samples, *members, support,
            *kappa, *rank_scan, *reduction,
        ),
        TaskConfig::Timedep { symbol, coefficient, window, weight, smoother, time_samples, band } => {
            run_timedep(cfg, symbol, coefficient, *window, weight, smoother, *time_samples, *band)
        }
    }
}

fn need_grid(cfg: &ExperimentConfig) -> CliResult<GridSpec> {
    cfg.grid
        .as_ref()
        .ok_or_else(|| CliError::Config("this task needs a grid (config `grid` or --grid n,L,N)".into()))?
        .build()
}

fn flag_string(report: &ClassificationReport) -> String {
    fn tf(b: bool) -> char {
        if b {
            't'
        } else {
            'f'
        }
    }
    format!(
        "H={};L={};HL={};Lp={}",
        tf(report.h.holds),
        tf(report.l.holds),
        tf(report.hl.holds),
        tf(report.lprime.holds)
    )
}

/// Default ensemble band `(0, (2/3) min Nyquist]` as a predicate.
fn band_predicate(grid: &GridSpec, band: Option<(f64, f64)>) -> impl Fn(&[f64]) -> bool {
    let (lo, hi) = band.unwrap_or_else(|| {
        let ny = (0..grid.dim()).fold(f64::INFINITY, |acc, ax| acc.min(grid.nyquist(ax)));
        (0.0, 2.0 / 3.0 * ny)
    });
    move |xi: &[f64]| {
        let r = xi.iter().map(|c| c * c).sum::<f64>().sqrt();
        r > lo && r <= hi
    }
}

fn run_classify(symbol_src: &str, dim: Option<usize>) -> CliResult<RunOutput> {
    let dim = infer_dim(symbol_src, dim);
    let symbol = parse_symbol_spec(symbol_src, dim)?;
    let report = classify(&symbol);
    let flags = flag_string(&report);
    let mut rows = Vec::new();
    for (kind, fw) in [
        ("flag-h", &report.h),
        ("flag-l", &report.l),
        ("flag-hl", &report.hl),
        ("flag-lprime", &report.lprime),
    ] {
        let mut row = ReportRow::new(symbol_src, "classify", kind, if fw.holds { 1.0 } else { 0.0 });
        row.flags = flags.clone();
        row.method = "sampled-hypothesis".into();
        row.residual = fw.witness;
        rows.push(row);
    }
    let mut count = ReportRow::new(symbol_src, "classify", "critical_points", report.critical_points.len() as f64);
    count.flags = flags.clone();
    count.method = "newton-scan".into();
    rows.push(count);
    let details = serde_json::to_value(&report)
        .map_err(|e| CliError::Runtime(format!("report serialization failed: {e}")))?;
    Ok(RunOutput { rows, details })
}

fn run_propagate(
    cfg: &ExperimentConfig,
    symbol_src: &str,
    t_window: f64,
    band: Option<(f64, f64)>,
) -> CliResult<RunOutput> {
    let grid = need_grid(cfg)?;
    let symbol = parse_symbol_spec(symbol_src, grid.dim())?;
    let flags = flag_string(&classify(&symbol));
    let a_vals = symbol.lattice_values(&grid)?;
    let phi = random_band_limited(&grid, band_predicate(&grid, band), cfg.seed)?;
    let norm = phi.l2_norm();
    let phi_hat = to_frequency(&phi)?;
    let parseval = (phi_hat.l2_norm() - norm).abs() / norm;
    let full = propagate_values(&phi_hat, &a_vals, t_window)?;
    let unitarity = (full.l2_norm() - norm).abs() / norm;
    let first = propagate_values(&phi_hat, &a_vals, t_window / 3.0)?;
    let second = propagate_values(&first, &a_vals, 2.0 * t_window / 3.0)?;
    let group_law = {
        let diff: f64 = second
            .values()
            .iter()
            .zip(full.values())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        // Stored values are norm-equivalent to the field up to the shared
        // cell volume, which cancels in the relative defect.
        let denom: f64 = full.values().iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        diff / denom
    };
    let mut rows = Vec::new();
    for (kind, value) in [("parseval", parseval), ("unitarity", unitarity), ("group_law", group_law)]
    {
        let mut row = ReportRow::new(symbol_src, "propagate", kind, value);
        row.flags = flags.clone();
        row.grid = grid_label(&grid);
        row.t_window = Some(t_window);
        row.method = "spectral".into();
        rows.push(row);
    }
    let details = json!({
        "grid": grid_label(&grid),
        "t_window": t_window,
        "l2_norm": norm,
        "parseval_defect": parseval,
        "unitarity_defect": unitarity,
        "group_law_defect": group_law,
    });
    Ok(RunOutput { rows, details })
}

#[allow(clippy::too_many_arguments)]
fn run_estimate(
    cfg: &ExperimentConfig,
    symbol_src: &str,
    weight_src: &str,
    smoother_src: &str,
    t_window: Option<f64>,
    time_samples: usize,
    method_src: &str,
    members: usize,
    band: Option<(f64, f64)>,
    study: &StudyConfig,
) -> CliResult<RunOutput> {
    let grid = need_grid(cfg)?;
    let symbol = parse_symbol_spec(symbol_src, grid.dim())?;
    let flags = flag_string(&classify(&symbol));
    let weight = parse_weight(weight_src)?;
    let method = match method_src {
        "ensemble" => ConstantMethod::Ensemble,
        "power" => ConstantMethod::PowerIteration,
        other => return Err(CliError::Config(format!("unknown method `{other}` (ensemble or power)"))),
    };
    let params = EnsembleParams { size: members, band };
    let base_row = |study_name: &str, kind: &str, value: f64| {
        let mut row = ReportRow::new(symbol_src, study_name, kind, value);
        row.flags = flags.clone();
        row.weight = weight_src.to_string();
        row.smoother = smoother_src.to_string();
        row.time_samples = Some(time_samples);
        row
    };

    match study {
        StudyConfig::Single => {
            let smoother = parse_smoother(smoother_src)?;
            let t = t_window.unwrap_or_else(|| EstimateSpec::default_window(&grid));
            let spec = EstimateSpec::new(weight, smoother, t, time_samples)?;
            let est = estimate_constant(&symbol, &spec, &grid, method, &params, cfg.seed)?;
            let mut row = base_row("single", "constant", est.value);
            row.grid = grid_label(&grid);
            row.t_window = Some(t);
            row.method = est.method.to_string();
            row.residual = Some(est.residual);
            let details = json!({
                "estimate": serde_json::to_value(&est).unwrap(),
                "t_window": t,
                "members": members,
            });
            Ok(RunOutput { rows: vec![row], details })
        }
        StudyConfig::Refinement { ladder } => {
            let cases: Vec<(GridSpec, EstimateSpec)> = ladder
                .iter()
                .map(|rung: &GridConfig| -> CliResult<(GridSpec, EstimateSpec)> {
                    let g = rung.build()?;
                    let t = t_window.unwrap_or_else(|| EstimateSpec::default_window(&g));
                    let spec =
                        EstimateSpec::new(weight.clone(), parse_smoother(smoother_src)?, t, time_samples)?;
                    Ok((g, spec))
                })
                .collect::<CliResult<_>>()?;
            let rung_rows = refinement_study(&symbol, &cases, method, &params, cfg.seed)?;
            let mut rows = Vec::new();
            for rung in &rung_rows {
                let mut row = base_row("refinement", "constant", rung.estimate.value);
                row.grid = format!(
                    "L={} N={}",
                    rung.lens.iter().map(|l| format!("{l}")).collect::<Vec<_>>().join("x"),
                    rung.point_counts.iter().map(|n| n.to_string()).collect::<Vec<_>>().join("x"),
                );
                row.t_window = Some(rung.t_window);
                row.ladder = "points".into();
                row.ladder_value = rung.point_counts.iter().product::<usize>() as f64;
                row.method = rung.estimate.method.to_string();
                row.residual = Some(rung.estimate.residual);
                rows.push(row);
            }
            let constants: Vec<f64> = rung_rows.iter().map(|r| r.estimate.value).collect();
            let stability = max_rel_deviation_from_last(&constants);
            let mut srow = base_row("refinement", "stability", stability);
            srow.ladder = "summary".into();
            srow.method = "max-rel-deviation".into();
            rows.push(srow);
            let details = json!({
                "rungs": rung_rows.iter().map(|r| serde_json::to_value(r).unwrap()).collect::<Vec<_>>(),
                "stability": stability,
            });
            Ok(RunOutput { rows, details })
        }
        StudyConfig::Concentration { widths, center } => {
            let t = t_window.unwrap_or_else(|| EstimateSpec::default_window(&grid));
            let center_spec = match center {
                CenterConfig::Sphere { radius } => CenterSpec::Sphere { radius: *radius },
                CenterConfig::Point { point } => CenterSpec::Point { point: point.clone() },
            };
            let study_rows = concentration_study(
                &symbol,
                &grid,
                &weight,
                t,
                time_samples,
                &center_spec,
                widths,
                members,
                cfg.seed,
            )?;
            let mut rows = Vec::new();
            for r in &study_rows {
                for (kind, smoother_label, value) in [
                    ("classical_ratio", "classical:0.5", r.classical_ratio),
                    ("invariant_ratio", "invariant", r.invariant_ratio),
                ] {
                    let mut row = base_row("concentration", kind, value);
                    row.smoother = smoother_label.into();
                    row.grid = grid_label(&grid);
                    row.t_window = Some(r.t_window);
                    row.ladder = "width".into();
                    row.ladder_value = r.width;
                    row.method = "ensemble-mean".into();
                    rows.push(row);
                }
            }
            let ws: Vec<f64> = study_rows.iter().map(|r| r.width).collect();
            let quotients: Vec<f64> =
                study_rows.iter().map(|r| r.classical_ratio / r.invariant_ratio).collect();
            let invariants: Vec<f64> = study_rows.iter().map(|r| r.invariant_ratio).collect();
            let slope = if ws.len() >= 2 { log_slope(&ws, &quotients) } else { 0.0 };
            let spread = max_rel_deviation_from_last(&invariants);
            let mut slope_row = base_row("concentration", "quotient_slope", slope);
            slope_row.grid = grid_label(&grid);
            slope_row.ladder = "summary".into();
            slope_row.method = "log-log-fit".into();
            rows.push(slope_row);
            let mut spread_row = base_row("concentration", "invariant_spread", spread);
            spread_row.grid = grid_label(&grid);
            spread_row.ladder = "summary".into();
            spread_row.method = "max-rel-deviation".into();
            rows.push(spread_row);
            let details = json!({
                "rows": study_rows.iter().map(|r| serde_json::to_value(r).unwrap()).collect::<Vec<_>>(),
                "quotient_slope": slope,
                "invariant_spread": spread,
            });
            Ok(RunOutput { rows, details })
        }
    }
}

/// Frozen desk configuration of the 1D model comparison: a one-sided
/// phase-aligned Gaussian packet on a long box, far from both the zero
/// mode and the Nyquist shell, observed over complete passages.
fn model_packet() -> CliResult<(GridSpec, ComplexField)> {
    let grid = GridSpec::new(&[1024.0], &[2048])?;
    let phi = packet_field(&grid, |xi: &[f64]| {
        let x = xi[0];
        if (0.85..=2.15).contains(&x) {
            (-(x - 1.5) * (x - 1.5) / (2.0 * 0.01)).exp()
        } else {
            0.0
        }
    })?;
    Ok((grid, phi))
}

fn run_compare(cfg: &ExperimentConfig, mode: &CompareMode) -> CliResult<RunOutput> {
    match mode {
        CompareMode::Model { l, m, travel } => {
            let (grid, phi) = model_packet()?;
            let report = model_equality_check(*l, *m, &phi, *travel, &[vec![0.0], vec![1.0], vec![-2.0]])?;
            let want = (*l as f64 / *m as f64).sqrt();
            let name = format!("model(l={l};m={m})");
            let mut row = ReportRow::new(&name, "model", "ratio", report.ratio);
            row.grid = grid_label(&grid);
            row.t_window = Some(report.window_high.max(report.window_low));
            row.method = "exact-kernel".into();
            row.residual = Some((report.ratio - want).abs());
            let mut spread = ReportRow::new(&name, "model", "x_spread", report.x_spread);
            spread.grid = grid_label(&grid);
            spread.method = "exact-kernel".into();
            let details = json!({
                "l": l, "m": m,
                "ratio": report.ratio,
                "expected": want,
                "x_spread": report.x_spread,
                "window_low": report.window_low,
                "window_high": report.window_high,
                "per_sample": report.per_sample,
                "travel": travel,
            });
            Ok(RunOutput { rows: vec![row, spread], details })
        }
        CompareMode::Radial { f, sigma, g, tau, support, travel, samples } => {
            let grid = need_grid(cfg)?;
            if grid.dim() != 1 {
                return Err(CliError::Config("radial comparison runs on a 1D grid".into()));
            }
            let fp = radial_profile(f)?;
            let gp = radial_profile(g)?;
            let sig = scalar_profile(sigma)?;
            let tau_fn = scalar_profile(tau)?;
            let (lo, hi) = *support;
            let chi: Arc<dyn Fn(f64) -> bool + Send + Sync> =
                Arc::new(move |rho: f64| (lo..=hi).contains(&rho));
            let case = ComparisonCase::new(&grid, fp, sig, gp, tau_fn, chi)?;
            let phi = random_band_limited(
                &grid,
                |xi: &[f64]| {
                    let r = xi[0].abs();
                    (lo..=hi).contains(&r)
                },
                cfg.seed,
            )?;
            let xs = grid.x_axis(0);
            let n = xs.len();
            let x_samples: Vec<f64> =
                (0..*samples).map(|k| xs[(k + 1) * n / (samples + 1)]).collect();
            let report = compare_radial(&case, &phi, &x_samples, *travel)?;
            let name = format!("{f} vs {g}");
            let mut bound = ReportRow::new(&name, "radial-compare", "comparison_bound", report.a_bound);
            bound.grid = grid_label(&grid);
            bound.method = "lattice-sup".into();
            let mut worst = ReportRow::new(&name, "radial-compare", "worst_quotient", report.worst_quotient);
            worst.grid = grid_label(&grid);
            worst.method = "exact-kernel".into();
            worst.residual = Some(report.a_bound);
            let details = json!({
                "a_bound": report.a_bound,
                "worst_quotient": report.worst_quotient,
                "per_sample": report.per_sample,
                "x_samples": x_samples,
                "travel": travel,
            });
            Ok(RunOutput { rows: vec![bound, worst], details })
        }
        CompareMode::Secondary { f, sigma, support, s, t_window, time_samples } => {
            let grid = need_grid(cfg)?;
            let fp = radial_profile(f)?;
            let sig = scalar_profile(sigma)?;
            let (lo, hi) = *support;
            let chi: Arc<dyn Fn(f64) -> bool + Send + Sync> =
                Arc::new(move |rho: f64| (lo..=hi).contains(&rho));
            let phi = random_band_limited(
                &grid,
                |xi: &[f64]| {
                    let r = xi.iter().map(|c| c * c).sum::<f64>().sqrt();
                    (lo..=hi).contains(&r)
                },
                cfg.seed,
            )?;
            let t = t_window.unwrap_or_else(|| EstimateSpec::default_window(&grid));
            let (a_bound, ratio) =
                smoothing_core::comparison::secondary_comparison_check(
                    &grid, &fp, sig, chi, *s, t, *time_samples, &phi,
                )?;
            let mut bound = ReportRow::new(f, "secondary-compare", "domination_bound", a_bound);
            bound.grid = grid_label(&grid);
            bound.method = "lattice-sup".into();
            let mut ratio_row = ReportRow::new(f, "secondary-compare", "weighted_ratio", ratio);
            ratio_row.grid = grid_label(&grid);
            ratio_row.weight = format!("bracket:{s}");
            ratio_row.t_window = Some(t);
            ratio_row.time_samples = Some(*time_samples);
            ratio_row.method = "trapezoid".into();
            let details = json!({
                "domination_bound": a_bound,
                "weighted_ratio": ratio,
                "support": [lo, hi],
            });
            Ok(RunOutput { rows: vec![bound, ratio_row], details })
        }
    }
}

/// Parse a rho-expression into a radial profile with exact derivative.
fn radial_profile(src: &str) -> CliResult<smoothing_core::symbol::RadialProfile> {
    let sym = parse_symbol_spec(src, 1)?;
    sym.radial().cloned().ok_or_else(|| {
        CliError::Config(format!("`{src}` is not a radial profile (write it in rho)"))
    })
}

/// Parse a rho-expression into a plain scalar function of the radius.
fn scalar_profile(src: &str) -> CliResult<Arc<dyn Fn(f64) -> f64 + Send + Sync>> {
    let prof = radial_profile(src)?;
    Ok(prof.f.clone())
}

#[allow(clippy::too_many_arguments)]
fn run_decompose(
    cfg: &ExperimentConfig,
    symbol_src: &str,
    axis: usize,
    s: f64,
    t_window: Option<f64>,
    time_samples: usize,
    band: Option<(f64, f64)>,
    assemble: bool,
) -> CliResult<RunOutput> {
    let grid = need_grid(cfg)?;
    let symbol = parse_symbol_spec(symbol_src, grid.dim())?;
    let flags = flag_string(&classify(&symbol));
    let poly = symbol
        .poly()
        .ok_or_else(|| {
            CliError::Config(format!("`{symbol_src}` has no polynomial expansion to decompose"))
        })?
        .clone();
    if axis > grid.dim() {
        return Err(CliError::Config(format!(
            "axis {axis} out of range for dimension {}",
            grid.dim()
        )));
    }
    let dec = monotone_decomposition(&poly, axis - 1, &grid)?;
    let eta_max = dec.eta.iter().cloned().fold(0.0, f64::max);
    let slices_json: Vec<serde_json::Value> = dec
        .slices
        .iter()
        .map(|s| match s {
            SliceRoots::Zero => json!({"kind": "zero_derivative"}),
            SliceRoots::Roots(r) => json!({"kind": "roots", "roots": r}),
        })
        .collect();
    let breakpoints: Option<&Vec<f64>> = if grid.dim() == 1 {
        match &dec.slices[0] {
            SliceRoots::Roots(r) => Some(r),
            SliceRoots::Zero => None,
        }
    } else {
        None
    };
    let mut rows = Vec::new();
    let mut pieces_row = ReportRow::new(symbol_src, "decompose", "pieces", dec.pieces.len() as f64);
    pieces_row.flags = flags.clone();
    pieces_row.grid = grid_label(&grid);
    pieces_row.ladder = "axis".into();
    pieces_row.ladder_value = axis as f64;
    pieces_row.method = "companion-roots".into();
    rows.push(pieces_row);
    let mut eta_row = ReportRow::new(symbol_src, "decompose", "eta_max", eta_max);
    eta_row.flags = flags.clone();
    eta_row.grid = grid_label(&grid);
    eta_row.ladder = "axis".into();
    eta_row.ladder_value = axis as f64;
    eta_row.method = "lattice-sup".into();
    rows.push(eta_row);

    let mut details = json!({
        "axis": axis,
        "slices": slices_json,
        "pieces": dec.pieces,
        "eta_max": eta_max,
    });
    if let Some(b) = breakpoints {
        details["breakpoints"] = json!(b);
    }

    if assemble {
        let phi = random_band_limited(&grid, band_predicate(&grid, band), cfg.seed)?;
        let t = t_window.unwrap_or_else(|| EstimateSpec::default_window(&grid));
        let asm = assemble_polynomial_estimate(&poly, s, &phi, &grid, t, time_samples)?;
        let mut combined = ReportRow::new(symbol_src, "decompose", "combined_ratio", asm.combined);
        combined.flags = flags.clone();
        combined.grid = grid_label(&grid);
        combined.weight = format!("bracket:{s}");
        combined.smoother = "invariant".into();
        combined.t_window = Some(t);
        combined.time_samples = Some(time_samples);
        combined.method = "trapezoid".into();
        rows.push(combined);
        for (j, (axis_sum, eta_norm)) in asm.per_axis.iter().zip(&asm.eta_axis_norms).enumerate() {
            for (kind, value) in [("axis_piece_sum", *axis_sum), ("eta_axis_norm", *eta_norm)] {
                let mut row = ReportRow::new(symbol_src, "decompose", kind, value);
                row.flags = flags.clone();
                row.grid = grid_label(&grid);
                row.weight = format!("bracket:{s}");
                row.t_window = Some(t);
                row.time_samples = Some(time_samples);
                row.ladder = "axis".into();
                row.ladder_value = (j + 1) as f64;
                row.method = "trapezoid".into();
                rows.push(row);
            }
        }
        details["assembly"] = json!({
            "combined": asm.combined,
            "per_axis": asm.per_axis,
            "eta_axis_norms": asm.eta_axis_norms,
            "per_piece": asm.per_piece.iter().map(|p| json!({
                "axis": p.axis + 1,
                "piece": p.piece,
                "ratio": p.ratio,
            })).collect::<Vec<_>>(),
        });
    }
    Ok(RunOutput { rows, details })
}

fn build_map(map: &MapConfig) -> CliResult<FrequencyMap> {
    match map {
        MapConfig::Linear { matrix } => Ok(FrequencyMap::linear(matrix.clone())?),
        MapConfig::QuadraticWarp { alpha } => {
            let a = *alpha;
            if !(a.is_finite() && a >= 0.0) {
                return Err(CliError::Config(format!(
                    "warp coefficient must be finite and nonnegative, got {a}"
                )));
            }
            let r = move |rho: f64| rho + a * rho * rho;
            let r_inv = move |s: f64| {
                if a == 0.0 {
                    s
                } else {
                    ((1.0 + 4.0 * a * s).sqrt() - 1.0) / (2.0 * a)
                }
            };
            let r_prime = move |rho: f64| 1.0 + 2.0 * a * rho;
            Ok(FrequencyMap::radial_warp(
                Arc::new(r),
                Arc::new(r_inv),
                Some(Arc::new(r_prime)),
                a == 0.0,
                a == 0.0,
            ))
        }
    }
}

fn build_cutoff(cutoff: &CutoffConfig) -> CliResult<CutoffSpec> {
    match cutoff {
        CutoffConfig::One => Ok(CutoffSpec::one()),
        CutoffConfig::Ball { center, inner, outer } => {
            Ok(CutoffSpec::ball(center.clone(), *inner, *outer)?)
        }
        CutoffConfig::Annulus { r0, r1, r2, r3 } => Ok(CutoffSpec::annulus(*r0, *r1, *r2, *r3)?),
    }
}

fn support_predicate(support: &SupportConfig) -> impl Fn(&[f64]) -> bool + Sync + '_ {
    move |xi: &[f64]| {
        xi.iter()
            .zip(&support.center)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
            <= support.radius
    }
}

#[allow(clippy::too_many_arguments)]
fn run_canonical(
    cfg: &ExperimentConfig,
    sigma_src: &str,
    map_cfg: &MapConfig,
    cutoff_cfg: &CutoffConfig,
    zeta_src: &str,
    weight_src: &str,
    t_window: Option<f64>,
    time_samples: usize,
    members: usize,
    support: &SupportConfig,
    kappa: Option<f64>,
    rank_scan: bool,
    reduction: bool,
) -> CliResult<RunOutput> {
    let grid = need_grid(cfg)?;
    if support.center.len() != grid.dim() {
        return Err(CliError::Config(format!(
            "support center has dimension {}, grid has {}",
            support.center.len(),
            grid.dim()
        )));
    }
    let sigma = parse_symbol_spec(sigma_src, grid.dim())?;
    let map = build_map(map_cfg)?;
    let cutoff = build_cutoff(cutoff_cfg)?;
    let zeta = parse_zeta(zeta_src)?;
    let weight = parse_weight(weight_src)?;
    let t = t_window.unwrap_or_else(|| EstimateSpec::default_window(&grid));
    let zeta_for_case = zeta.clone();
    let case = EquivalenceCase::new(
        &sigma,
        &map,
        &cutoff,
        move |s| zeta_for_case(s),
        &weight,
        &grid,
        t,
        time_samples,
    )?;
    let report = equivalence_ensemble(&case, support_predicate(support), members, cfg.seed)?;

    let mut rows = Vec::new();
    for (i, item) in report.items.iter().enumerate() {
        let mut row = ReportRow::new(sigma_src, "equivalence", "ratio", item.ratio);
        row.weight = weight_src.to_string();
        row.smoother = format!("zeta:{zeta_src}");
        row.grid = grid_label(&grid);
        row.t_window = Some(t);
        row.time_samples = Some(time_samples);
        row.ladder = "member".into();
        row.ladder_value = i as f64;
        row.method = "trapezoid".into();
        rows.push(row);
    }
    for (kind, value) in [
        ("band_low", report.band.0),
        ("band_high", report.band.1),
        ("band_constant", report.band_constant),
    ] {
        let mut row = ReportRow::new(sigma_src, "equivalence", kind, value);
        row.grid = grid_label(&grid);
        row.ladder = "summary".into();
        row.method = "ensemble".into();
        rows.push(row);
    }
    let mut details = json!({
        "band": [report.band.0, report.band.1],
        "band_constant": report.band_constant,
        "ratios": report.items.iter().map(|i| json!({
            "lhs": i.lhs, "rhs": i.rhs, "ratio": i.ratio,
        })).collect::<Vec<_>>(),
        "t_window": t,
    });

    if let Some(kappa) = kappa {
        let probe =
            boundedness_probe(&map, &cutoff, kappa, &grid, support_predicate(support), members, cfg.seed)?;
        let mut row = ReportRow::new(sigma_src, "equivalence", "weighted_probe", probe.probe);
        row.grid = grid_label(&grid);
        row.ladder = "kappa".into();
        row.ladder_value = kappa;
        row.method = if probe.guaranteed { "guaranteed" } else { "probe" }.into();
        rows.push(row);
        details["boundedness"] = json!({
            "kappa": probe.kappa,
            "probe": probe.probe,
            "per_member": probe.per_member,
            "guaranteed": probe.guaranteed,
        });
    }

    if rank_scan {
        let pairs = rank_invariance_scan(&sigma, &map, &default_search_box(grid.dim()), 9)?;
        for (i, pair) in pairs.iter().enumerate() {
            let mut row =
                ReportRow::new(sigma_src, "equivalence", "hessian_rank", pair.rank_composed as f64);
            row.grid = grid_label(&grid);
            row.ladder = "point".into();
            row.ladder_value = i as f64;
            row.method = "eigen-rank".into();
            row.residual = Some(pair.rank_core as f64);
            rows.push(row);
        }
        details["ranks"] = json!(pairs
            .iter()
            .map(|p| json!({
                "point": p.point,
                "mapped_point": p.mapped_point,
                "rank_composed": p.rank_composed,
                "rank_core": p.rank_core,
            }))
            .collect::<Vec<_>>());
    }

    if reduction {
        let sigma_for_rho = sigma.clone();
        let zeta_for_num = zeta.clone();
        let zeta_for_den = zeta.clone();
        let rep = reduction_quotient(
            &grid,
            &cutoff,
            {
                let a = Symbol::composed(sigma.clone(), map.clone())?;
                move |xi: &[f64]| zeta_for_num(a.grad_norm(xi))
            },
            move |eta: &[f64]| zeta_for_den(sigma_for_rho.grad_norm(eta)),
            &map,
        );
        let mut row = ReportRow::new(
            sigma_src,
            "equivalence",
            "reduction_flagged",
            if rep.flagged { 1.0 } else { 0.0 },
        );
        row.grid = grid_label(&grid);
        row.method = "lattice-sup".into();
        if rep.sup_q.is_finite() {
            row.residual = Some(rep.sup_q);
        }
        rows.push(row);
        details["reduction"] = json!({
            "sup_q": if rep.sup_q.is_finite() { json!(rep.sup_q) } else { json!("infinite") },
            "flagged": rep.flagged,
        });
    }

    Ok(RunOutput { rows, details })
}

fn parse_coefficient(spec: &str, window: Option<(f64, f64)>) -> CliResult<TimeCoefficient> {
    let (lo, hi) = window.unwrap_or((-3.0, 3.0));
    match spec.split_once(':') {
        Some(("const", k)) => {
            let k: f64 = k
                .trim()
                .parse()
                .map_err(|_| CliError::Config(format!("bad constant in `{spec}`")))?;
            Ok(TimeCoefficient::constant(k, lo, hi)?)
        }
        None if spec.trim() == "invquad" => {
            Ok(TimeCoefficient::new("invquad", lo, hi, |t| 1.0 / (1.0 + t * t))?)
        }
        _ => Err(CliError::Config(format!(
            "unknown coefficient `{spec}` (const:K or invquad)"
        ))),
    }
}

/// Trapezoid quadrature of `|c(t)| || w sigma e^{i C(t) a(D)} phi ||^2 dt`
/// directly in `t`: the independent cross-check of the reparametrized
/// window norm, built only from public spectral primitives.
fn direct_time_quadrature(
    a: &Symbol,
    coeff: &TimeCoefficient,
    weight: &WeightSpec,
    smoother: &SmootherSpec,
    time_samples: usize,
    phi: &ComplexField,
) -> CliResult<f64> {
    let grid = phi.grid();
    let a_vals = a.lattice_values(grid)?;
    let w = weight.values(grid)?;
    let sig = smoother.values(grid, Some(a))?;
    let phi_hat = to_frequency(phi)?;
    let sig_phi = smoothing_core::transform::apply_multiplier_values(&phi_hat, &sig)?;
    let (t_lo, t_hi) = coeff.interval();
    let dt = (t_hi - t_lo) / time_samples as f64;
    let mut acc = 0.0;
    for k in 0..=time_samples {
        let t = t_lo + dt * k as f64;
        let tau = coeff.primitive(t);
        let prop = propagate_values(&sig_phi, &a_vals, tau)?;
        let mut phys = to_physical(&prop)?;
        for (v, wi) in phys.values_mut().iter_mut().zip(&w) {
            *v *= *wi;
        }
        let g = phys.l2_norm().powi(2);
        let node_weight = if k == 0 || k == time_samples { 0.5 } else { 1.0 };
        acc += node_weight * dt * coeff.eval(t).abs() * g;
    }
    Ok(acc.sqrt())
}

#[allow(clippy::too_many_arguments)]
fn run_timedep(
    cfg: &ExperimentConfig,
    symbol_src: &str,
    coefficient: &str,
    window: Option<(f64, f64)>,
    weight_src: &str,
    smoother_src: &str,
    time_samples: usize,
    band: Option<(f64, f64)>,
) -> CliResult<RunOutput> {
    let grid = need_grid(cfg)?;
    let symbol = parse_symbol_spec(symbol_src, grid.dim())?;
    let flags = flag_string(&classify(&symbol));
    let weight = parse_weight(weight_src)?;
    let smoother = parse_smoother(smoother_src)?;
    let coeff = parse_coefficient(coefficient, window)?;
    let phi = random_band_limited(&grid, band_predicate(&grid, band), cfg.seed)?;
    let reparam = timedep_norm(&symbol, &coeff, &weight, &smoother, time_samples, &phi)?;
    let direct = direct_time_quadrature(&symbol, &coeff, &weight, &smoother, time_samples, &phi)?;
    if reparam == 0.0 {
        return Err(CliError::Runtime("reparametrized norm vanished".into()));
    }
    let deviation = (direct - reparam).abs() / reparam;
    let (lo, hi) = coeff.interval();
    let mut rows = Vec::new();
    let mut norm_row = ReportRow::new(symbol_src, "timedep", "reparametrized_norm", reparam);
    norm_row.flags = flags.clone();
    norm_row.weight = weight_src.to_string();
    norm_row.smoother = smoother_src.to_string();
    norm_row.grid = grid_label(&grid);
    norm_row.t_window = Some(hi);
    norm_row.time_samples = Some(time_samples);
    norm_row.method = "reparametrized".into();
    rows.push(norm_row);
    let mut dev_row = ReportRow::new(symbol_src, "timedep", "deviation", deviation);
    dev_row.flags = flags;
    dev_row.weight = weight_src.to_string();
    dev_row.smoother = smoother_src.to_string();
    dev_row.grid = grid_label(&grid);
    dev_row.t_window = Some(hi);
    dev_row.time_samples = Some(time_samples);
    dev_row.method = "trapezoid-vs-reparam".into();
    dev_row.residual = Some(direct);
    rows.push(dev_row);
    let details = json!({
        "coefficient": coefficient,
        "window": [lo, hi],
        "reparametrized": reparam,
        "direct": direct,
        "deviation": deviation,
    });
    Ok(RunOutput { rows, details })
}
