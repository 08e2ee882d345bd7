//! Dispersiveness predicates, critical-point detection, Hessian ranks and
//! the aggregate classification report. All predicates are verified by
//! sampling at a stated resolution plus local root-finding; witnesses are
//! reported, proofs are not claimed.

use super::poly::PolynomialSymbol;
use super::{sphere_directions, Symbol};
use crate::error::{LabError, Result};
use crate::tol;
use nalgebra::{DMatrix, DVector};
use serde::Serialize;

/// Outcome of a sampled hypothesis check: the flag, a numeric witness
/// (minimum gradient, lower constant, ...) and a human-readable account of
/// what was actually verified.
#[derive(Debug, Clone, Serialize)]
pub struct FlagWitness {
    pub holds: bool,
    pub witness: Option<f64>,
    pub detail: String,
}

/// A detected zero of the gradient with local curvature data.
#[derive(Debug, Clone, Serialize)]
pub struct CriticalPoint {
    pub point: Vec<f64>,
    pub rank: usize,
    /// (positive, negative, zero) eigenvalue counts of the Hessian.
    pub signature: (usize, usize, usize),
    pub non_degenerate: bool,
}

impl CriticalPoint {
    fn new(point: Vec<f64>, rank: usize, signature: (usize, usize, usize)) -> Self {
        let dim = point.len();
        // Non-degeneracy is exactly full rank; keep the two fields in lockstep.
        CriticalPoint { point, rank, signature, non_degenerate: rank == dim }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassificationReport {
    pub symbol: String,
    pub dim: usize,
    pub order: f64,
    pub homogeneous: Option<f64>,
    /// Homogeneous with nonvanishing gradient away from the origin.
    pub h: FlagWitness,
    /// Global gradient lower bound `|grad a| >= c <xi>^(m-1)`.
    pub l: FlagWitness,
    /// Dispersive principal part plus lower-order remainder.
    pub hl: FlagWitness,
    /// Gradient lower bound holding outside a threshold radius.
    pub lprime: FlagWitness,
    pub critical_points: Vec<CriticalPoint>,
    pub applicable_theorems: Vec<String>,
    pub notes: Vec<String>,
}

pub const DEFAULT_SPHERE_SAMPLES: usize = 10_000;
pub const DEFAULT_SEEDS_PER_AXIS: usize = 20;
/// Cap on reported critical points; a continuum of zeros (a vanishing line)
/// would otherwise flood the report.
pub const MAX_CRITICAL_POINTS: usize = 128;

/// Dyadic sampling radii 2^0 .. 2^7.
pub fn default_radius_ladder() -> Vec<f64> {
    (0..8).map(|k| f64::powi(2.0, k)).collect()
}

pub fn default_search_box(dim: usize) -> Vec<(f64, f64)> {
    vec![(-3.0, 3.0); dim]
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|c| c * c).sum::<f64>().sqrt()
}

fn bracket_pow(xi: &[f64], e: f64) -> f64 {
    let r2: f64 = xi.iter().map(|c| c * c).sum();
    (1.0 + r2).powf(0.5 * e)
}

/// Local minimization of `|grad a|` over the sphere of the given radius by
/// shrinking coordinate perturbations. Sampling alone can step over a
/// quadratic zero of the gradient (the minimum scales like the squared
/// sample spacing); the zoom drives such near-misses to the true local
/// minimum.
fn sphere_zoom(a: &Symbol, start: &[f64], initial_step: f64, radius: f64) -> f64 {
    let n = start.len();
    let mut d = start.to_vec();
    let dn = norm(&d);
    d.iter_mut().for_each(|c| *c /= dn);
    let eval = |dir: &[f64]| {
        let xi: Vec<f64> = dir.iter().map(|c| c * radius).collect();
        a.grad_norm(&xi)
    };
    let mut best = eval(&d);
    let mut step = initial_step;
    for _ in 0..200 {
        if step < 1e-16 || best == 0.0 {
            break;
        }
        let mut cand_best = best;
        let mut cand_dir: Option<Vec<f64>> = None;
        for axis in 0..n {
            for sgn in [1.0f64, -1.0] {
                let mut cand = d.clone();
                cand[axis] += sgn * step;
                let cn = norm(&cand);
                if cn == 0.0 {
                    continue;
                }
                cand.iter_mut().for_each(|c| *c /= cn);
                let v = eval(&cand);
                if v < cand_best {
                    cand_best = v;
                    cand_dir = Some(cand);
                }
            }
        }
        match cand_dir {
            // Demand solid progress before keeping the step size: marginal
            // drift along a tangent direction must not starve the shrink,
            // or the walk never dives into a zero lying between samples.
            Some(c) if cand_best < 0.95 * best => {
                d = c;
                best = cand_best;
            }
            Some(c) => {
                d = c;
                best = cand_best;
                step *= 0.5;
            }
            None => step *= 0.5,
        }
    }
    best
}

/// Minimum of `|grad a|` over the unit sphere for a positively homogeneous
/// symbol: quasi-uniform sampling refined by local zooms from the worst
/// candidates. Returns `(min > 1e-8, min)`.
pub fn check_h(a: &Symbol, sphere_samples: usize) -> Result<(bool, f64)> {
    let m = a.homogeneous_order().ok_or_else(|| {
        LabError::Param(format!(
            "symbol `{}` has no declared homogeneity; the sphere test needs one",
            a.name()
        ))
    })?;
    if let Some(defect) = a.euler_defect() {
        if defect > 1e-8 {
            return Err(LabError::Param(format!(
                "symbol `{}` declares homogeneity {m} but the Euler identity fails (relative defect {defect:.3e})",
                a.name()
            )));
        }
    }
    let dirs = sphere_directions(a.dim(), sphere_samples.max(2));
    let mut scored: Vec<(f64, usize)> =
        dirs.iter().enumerate().map(|(i, d)| (a.grad_norm(d), i)).collect();
    scored.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut min = scored[0].0;
    let step = (2.0 * std::f64::consts::PI / dirs.len() as f64).max(1e-4);
    for &(_, i) in scored.iter().take(8) {
        min = min.min(sphere_zoom(a, &dirs[i], step, 1.0));
    }
    Ok((min > tol::SPHERE_MIN_GRAD, min))
}

fn shell_direction_count(dim: usize) -> usize {
    match dim {
        1 => 2,
        2 => 512,
        _ => 1024,
    }
}

fn ladder_min_ratio(a: &Symbol, radii: &[f64]) -> f64 {
    let m = a.order();
    let dirs = sphere_directions(a.dim(), shell_direction_count(a.dim()));
    let step = 2.0 * std::f64::consts::PI / dirs.len() as f64;
    let mut c = f64::INFINITY;
    for &r in radii {
        // The bracket weight is constant on a shell, so minimizing the
        // ratio there is minimizing |grad a|: sample, then zoom from the
        // worst directions to catch zero rays that run between samples.
        let mut scored: Vec<(f64, usize)> = dirs
            .iter()
            .enumerate()
            .map(|(i, d)| {
                let xi: Vec<f64> = d.iter().map(|v| v * r).collect();
                (a.grad_norm(&xi), i)
            })
            .collect();
        scored.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut shell_min = scored[0].0;
        for &(_, i) in scored.iter().take(4) {
            shell_min = shell_min.min(sphere_zoom(a, &dirs[i], step, r));
        }
        let denom = (1.0 + r * r).powf(0.5 * (m - 1.0));
        c = c.min(shell_min / denom);
    }
    c
}

fn veto_by_critical_points(
    a: &Symbol,
    points: &[CriticalPoint],
    min_radius: f64,
    mut c: f64,
) -> f64 {
    let m = a.order();
    for cp in points {
        let r = norm(&cp.point);
        // The origin is exempt: homogeneous symbols always have a gradient
        // zero there and the bound is meant away from it.
        if r > min_radius.max(tol::CRITICAL_DEDUP) {
            c = c.min(a.grad_norm(&cp.point) / bracket_pow(&cp.point, m - 1.0));
        }
    }
    c
}

/// Sampled lower constant `c` in `|grad a(xi)| >= c <xi>^(m-1)` over the
/// dyadic radius ladder. Shell sampling alone cannot witness isolated
/// gradient zeros between shells, so detected critical points away from the
/// origin veto the bound. Returns `(c > 1e-8, c)`.
pub fn check_l(a: &Symbol, radii: &[f64]) -> (bool, f64) {
    let points =
        find_critical_points(a, &default_search_box(a.dim()), DEFAULT_SEEDS_PER_AXIS);
    check_l_with(a, radii, &points)
}

pub(crate) fn check_l_with(a: &Symbol, radii: &[f64], points: &[CriticalPoint]) -> (bool, f64) {
    let mut c = ladder_min_ratio(a, radii);
    c = veto_by_critical_points(a, points, 0.0, c);
    (c > tol::LADDER_MIN_C, c)
}

/// `check_l` restricted to `|xi| >= threshold`: the ladder is rescaled to
/// start at the threshold and only critical points outside it veto.
pub fn check_lprime(a: &Symbol, threshold: f64, radii: &[f64]) -> (bool, f64) {
    let points =
        find_critical_points(a, &default_search_box(a.dim()), DEFAULT_SEEDS_PER_AXIS);
    check_lprime_with(a, threshold, radii, &points)
}

pub(crate) fn check_lprime_with(
    a: &Symbol,
    threshold: f64,
    radii: &[f64],
    points: &[CriticalPoint],
) -> (bool, f64) {
    let scaled: Vec<f64> = radii.iter().map(|&r| r * threshold.max(1e-12)).collect();
    let mut c = ladder_min_ratio(a, &scaled);
    c = veto_by_critical_points(a, points, threshold * (1.0 - 1e-12), c);
    (c > tol::LADDER_MIN_C, c)
}

fn hessian_or_fd(a: &Symbol, xi: &[f64]) -> Vec<Vec<f64>> {
    match a.hessian(xi) {
        Some(h) => h,
        None => {
            let me = a.clone();
            super::diff::fd_hessian(&move |y: &[f64]| me.eval(y), xi)
        }
    }
}

fn damped_newton_step(
    a: &Symbol,
    x: &[f64],
    g: &[f64],
    gn: f64,
) -> Option<(Vec<f64>, Vec<f64>, f64)> {
    let n = x.len();
    let h = hessian_or_fd(a, x);
    let hm = DMatrix::from_fn(n, n, |r, c| h[r][c]);
    let rhs = DVector::from_fn(n, |r, _| -g[r]);
    // Least squares handles singular Hessians (degenerate zero sets).
    let d = hm.svd(true, true).solve(&rhs, 1e-13).ok()?;
    let mut t = 1.0f64;
    for _ in 0..30 {
        let cand: Vec<f64> = (0..n).map(|i| x[i] + t * d[i]).collect();
        let gc = a.gradient(&cand);
        let gcn = norm(&gc);
        if gcn < gn {
            return Some((cand, gc, gcn));
        }
        t *= 0.5;
    }
    None
}

/// Damped Newton iteration on `grad a = 0`; divergent seeds are dropped
/// silently. Accepted roots are polished past the acceptance threshold
/// (degenerate zeros converge only linearly, leaving the iterate well off
/// the zero set) and coordinates below the snap tolerance are reported as
/// exactly zero so curvature is read at the true point.
fn newton_root(a: &Symbol, seed: &[f64]) -> Option<Vec<f64>> {
    let mut x = seed.to_vec();
    let mut g = a.gradient(&x);
    let mut gn = norm(&g);
    let mut converged = gn < tol::NEWTON_GRAD;
    for _ in 0..80 {
        if converged {
            break;
        }
        if !gn.is_finite() || norm(&x) > 1e3 {
            return None;
        }
        let (nx, ng, ngn) = damped_newton_step(a, &x, &g, gn)?;
        x = nx;
        g = ng;
        gn = ngn;
        converged = gn < tol::NEWTON_GRAD;
    }
    if !converged {
        return None;
    }
    for _ in 0..40 {
        match damped_newton_step(a, &x, &g, gn) {
            Some((nx, ng, ngn)) => {
                x = nx;
                g = ng;
                gn = ngn;
            }
            None => break,
        }
    }
    for c in x.iter_mut() {
        if c.abs() < tol::CRITICAL_SNAP {
            *c = 0.0;
        }
    }
    Some(x)
}

/// Newton iteration on `grad a = 0` from a uniform seed lattice inside the
/// search box; converged roots are deduplicated, kept only inside the box,
/// sorted lexicographically and annotated with Hessian rank and signature.
pub fn find_critical_points(
    a: &Symbol,
    search_box: &[(f64, f64)],
    seeds_per_axis: usize,
) -> Vec<CriticalPoint> {
    let dim = a.dim();
    debug_assert_eq!(search_box.len(), dim);
    let seeds = seeds_per_axis.max(2);
    let total = seeds.pow(dim as u32);
    let mut roots: Vec<Vec<f64>> = Vec::new();
    for flat in 0..total {
        let mut rem = flat;
        let mut seed = vec![0.0; dim];
        for (j, &(lo, hi)) in search_box.iter().enumerate() {
            let idx = rem % seeds;
            rem /= seeds;
            seed[j] = lo + (hi - lo) * (idx as f64 + 0.5) / seeds as f64;
        }
        let Some(root) = newton_root(a, &seed) else { continue };
        let inside = root
            .iter()
            .zip(search_box)
            .all(|(&c, &(lo, hi))| c >= lo - 1e-9 && c <= hi + 1e-9);
        if !inside {
            continue;
        }
        let duplicate = roots.iter().any(|r| {
            r.iter().zip(&root).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt()
                < tol::CRITICAL_DEDUP
        });
        if !duplicate {
            roots.push(root);
            if roots.len() >= MAX_CRITICAL_POINTS {
                break;
            }
        }
    }
    roots.sort_by(|x, y| {
        x.iter().zip(y).map(|(p, q)| p.total_cmp(q)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal)
    });
    roots
        .into_iter()
        .map(|p| {
            let (rank, signature) = hessian_rank_at(a, &p, tol::EIGEN_RANK_REL);
            CriticalPoint::new(p, rank, signature)
        })
        .collect()
}

/// Rank and inertia of a symmetric matrix: eigenvalues above
/// `rel_tol * max |eigenvalue|` count toward the rank, signs give the
/// signature `(positive, negative, zero)`.
pub fn hessian_rank(h: &[Vec<f64>], rel_tol: f64) -> (usize, (usize, usize, usize)) {
    let n = h.len();
    let m = DMatrix::from_fn(n, n, |r, c| 0.5 * (h[r][c] + h[c][r]));
    let eig = m.symmetric_eigen();
    let max = eig.eigenvalues.iter().fold(0.0f64, |acc, &l| acc.max(l.abs()));
    if max == 0.0 {
        return (0, (0, 0, n));
    }
    let cut = rel_tol * max;
    let p = eig.eigenvalues.iter().filter(|&&l| l > cut).count();
    let q = eig.eigenvalues.iter().filter(|&&l| l < -cut).count();
    (p + q, (p, q, n - p - q))
}

pub fn hessian_rank_at(a: &Symbol, xi: &[f64], rel_tol: f64) -> (usize, (usize, usize, usize)) {
    hessian_rank(&hessian_or_fd(a, xi), rel_tol)
}

/// Sampled constant in the remainder bounds `|d^alpha r| <= C <xi>^(m-1-|alpha|)`
/// for orders `|alpha| <= 2` over the dyadic ladder.
fn remainder_bound(r: &PolynomialSymbol, m: f64, radii: &[f64]) -> f64 {
    if r.is_zero() {
        return 0.0;
    }
    let dim = r.dim();
    let grads = r.gradient();
    let hess: Vec<Vec<PolynomialSymbol>> = grads.iter().map(|g| g.gradient()).collect();
    let dirs = sphere_directions(dim, shell_direction_count(dim).min(128));
    let mut sup = 0.0f64;
    let mut radii_ext = radii.to_vec();
    radii_ext.push(0.5);
    for &rad in &radii_ext {
        for d in &dirs {
            let xi: Vec<f64> = d.iter().map(|v| v * rad).collect();
            sup = sup.max(r.eval(&xi).abs() / bracket_pow(&xi, m - 1.0));
            for g in &grads {
                sup = sup.max(g.eval(&xi).abs() / bracket_pow(&xi, m - 2.0));
            }
            for row in &hess {
                for hij in row {
                    sup = sup.max(hij.eval(&xi).abs() / bracket_pow(&xi, m - 3.0));
                }
            }
        }
    }
    sup
}

/// Run every hypothesis check and collect the theorem tags whose
/// assumptions were verified at sampling resolution.
pub fn classify(a: &Symbol) -> ClassificationReport {
    let dim = a.dim();
    let ladder = default_radius_ladder();
    let mut notes: Vec<String> = Vec::new();

    let critical_points =
        find_critical_points(a, &default_search_box(dim), DEFAULT_SEEDS_PER_AXIS);
    if critical_points.len() >= MAX_CRITICAL_POINTS {
        notes.push(format!(
            "critical point list capped at {MAX_CRITICAL_POINTS}; the zero set of the gradient may be a continuum"
        ));
    }

    let h = match a.homogeneous_order() {
        Some(m) => match check_h(a, DEFAULT_SPHERE_SAMPLES) {
            Ok((holds, min)) => FlagWitness {
                holds,
                witness: Some(min),
                detail: format!(
                    "min |grad| over {DEFAULT_SPHERE_SAMPLES} sphere samples with local refinement; homogeneous of order {m}"
                ),
            },
            Err(e) => {
                notes.push(format!("homogeneity verification failed: {e}"));
                FlagWitness {
                    holds: false,
                    witness: None,
                    detail: "declared homogeneity fails the Euler identity".into(),
                }
            }
        },
        None => FlagWitness {
            holds: false,
            witness: None,
            detail: "not positively homogeneous; hypothesis does not apply".into(),
        },
    };

    let (l_holds, l_c) = check_l_with(a, &ladder, &critical_points);
    let l = FlagWitness {
        holds: l_holds,
        witness: Some(l_c),
        detail: format!(
            "min |grad a| / <xi>^(m-1) over dyadic shells {:?} with critical-point veto",
            ladder
        ),
    };

    let mut lprime = FlagWitness {
        holds: false,
        witness: None,
        detail: "no threshold radius up to 20 gives a sampled lower bound".into(),
    };
    for threshold in [1.0, 2.0, 5.0, 10.0, 20.0] {
        let (ok, c) = check_lprime_with(a, threshold, &ladder, &critical_points);
        if ok {
            lprime = FlagWitness {
                holds: true,
                witness: Some(c),
                detail: format!("holds outside radius {threshold}"),
            };
            break;
        }
    }

    let hl = match a.poly() {
        Some(p) if p.degree() >= 1 => {
            let m = p.degree() as f64;
            let principal = p.principal_part();
            let ps = Symbol::from_poly(format!("principal({})", a.name()), principal);
            match check_h(&ps, DEFAULT_SPHERE_SAMPLES) {
                Ok((true, min)) => {
                    let c_rem = remainder_bound(&p.remainder(), m, &ladder);
                    notes.push(
                        "remainder derivative bounds sampled only for orders <= 2; higher orders unchecked"
                            .into(),
                    );
                    FlagWitness {
                        holds: true,
                        witness: Some(min),
                        detail: format!(
                            "principal part has gradient >= {min:.3e} on the sphere; remainder constant {c_rem:.3e} for derivative orders <= 2"
                        ),
                    }
                }
                Ok((false, min)) => FlagWitness {
                    holds: false,
                    witness: Some(min),
                    detail: "principal part gradient vanishes on the sphere".into(),
                },
                Err(e) => FlagWitness {
                    holds: false,
                    witness: None,
                    detail: format!("principal part check failed: {e}"),
                },
            }
        }
        Some(_) => FlagWitness {
            holds: false,
            witness: None,
            detail: "constant symbol has no principal part".into(),
        },
        None if a.homogeneous_order().is_some() => FlagWitness {
            holds: h.holds,
            witness: h.witness,
            detail: "symbol is its own principal part; remainder is zero".into(),
        },
        None => FlagWitness {
            holds: false,
            witness: None,
            detail: "no principal decomposition available for this representation".into(),
        },
    };

    let mut theorems: Vec<String> = Vec::new();
    if h.holds {
        theorems.push("homogeneous-dispersive".into());
    }
    if l.holds {
        theorems.push("lower-bound-dispersive".into());
    }
    if hl.holds {
        theorems.push("principal-plus-remainder".into());
    }
    if lprime.holds {
        theorems.push("large-frequency-dispersive".into());
    }
    if let Some(profile) = a.radial() {
        theorems.push("radial-profile".into());
        notes.push(format!(
            "radial profile derivative zeros at {:?}",
            profile.fp_zeros
        ));
    }
    if a.poly().is_some() {
        if dim <= 2 {
            theorems.push("polynomial-decomposition".into());
        } else {
            notes.push("monotone polynomial decomposition implemented for dimensions <= 2".into());
        }
    }
    if !critical_points.is_empty() {
        if critical_points.iter().all(|cp| cp.rank + 1 >= dim) {
            theorems.push("hessian-rank".into());
        }
        if critical_points.iter().all(|cp| cp.non_degenerate) {
            theorems.push("isolated-critical".into());
        }
    } else {
        notes.push("no critical points detected in the search box; curvature conditions are vacuous".into());
    }

    ClassificationReport {
        symbol: a.name().to_string(),
        dim,
        order: a.order(),
        homogeneous: a.homogeneous_order(),
        h,
        l,
        hl,
        lprime,
        critical_points,
        applicable_theorems: theorems,
        notes,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbol::expr::{parse_polynomial, parse_symbol};

    fn poly_symbol(src: &str, dim: usize) -> Symbol {
        Symbol::from_poly(src, parse_polynomial(src, dim).expect("parse"))
    }

    #[test]
    fn sphere_test_accepts_dispersive_and_rejects_flat_directions() {
        let (ok, min) = check_h(&poly_symbol("xi1^2 + xi2^2", 2), 10_000).expect("homogeneous");
        assert!(ok, "gradient of |xi|^2 never vanishes on the sphere");
        assert!((min - 2.0).abs() < 1e-6, "min |grad| = 2 on the unit sphere, got {min}");

        let (ok, _) = check_h(&poly_symbol("xi1^3 + xi2^3", 2), 10_000).expect("homogeneous");
        assert!(ok, "cubic diagonal symbol is dispersive");

        // grad xi1^3 = (3 xi1^2, 0) vanishes quadratically at (0, +-1):
        // plain sampling at 1e4 points leaves min ~ 1e-7, the zoom must
        // drive it below the 1e-8 gate.
        let (ok, min) = check_h(&poly_symbol("xi1^3", 2), 10_000).expect("homogeneous");
        assert!(!ok, "xi1^3 in two variables has flat directions, min {min}");

        assert!(
            check_h(&poly_symbol("xi1^3 + xi1", 1), 100).is_err(),
            "non-homogeneous symbols are rejected"
        );
    }

    #[test]
    fn gradient_lower_bound_needs_the_critical_point_veto() {
        let (ok, _) = check_l(&poly_symbol("xi1^3 + xi2^3 + xi1", 2), &default_radius_ladder());
        assert!(ok, "adding +xi1 keeps the gradient bounded below");

        // grad = (3 xi1^2 - 1, 3 xi2^2) vanishes at (+-1/sqrt 3, 0), strictly
        // between sampling shells; only the veto can see it.
        let (ok, c) = check_l(&poly_symbol("xi1^3 + xi2^3 - xi1", 2), &default_radius_ladder());
        assert!(!ok, "sign flip creates interior critical points, c = {c}");
        assert!(c < 1e-8);

        let (ok, c) = check_l(&poly_symbol("xi1^2 + xi2^2", 2), &default_radius_ladder());
        assert!(ok);
        assert!(c > 1.4 && c <= 2.0, "2|xi|/<xi> ranges over [sqrt2, 2) on the ladder, c = {c}");
    }

    #[test]
    fn large_frequency_bound_ignores_interior_degeneracies() {
        let quartic = poly_symbol("xi1^4 + xi2^4 + xi1^2 + xi2^2", 2);
        let (ok, _) = check_lprime(&quartic, 1.0, &default_radius_ladder());
        assert!(ok, "quartic plus laplacian has no critical point away from 0");

        let cubic = poly_symbol("xi1^3 + xi2^3 - xi1", 2);
        let (ok, c) = check_lprime(&cubic, 10.0, &default_radius_ladder());
        assert!(ok, "all degenerate points lie inside radius 10");
        // Independent oracle: dense polar sampling of |grad a| / <xi>^2 on
        // 10 <= |xi| <= 100.
        let mut oracle = f64::INFINITY;
        for i in 0..200 {
            let r = 10.0 + 90.0 * i as f64 / 199.0;
            for j in 0..720 {
                let th = 2.0 * std::f64::consts::PI * j as f64 / 720.0;
                let xi = [r * th.cos(), r * th.sin()];
                let g = [3.0 * xi[0] * xi[0] - 1.0, 3.0 * xi[1] * xi[1]];
                let gn = (g[0] * g[0] + g[1] * g[1]).sqrt();
                oracle = oracle.min(gn / (1.0 + r * r));
            }
        }
        assert!(oracle > 1e-8);
        assert!(
            (c - oracle).abs() < 0.25 * oracle,
            "sampled constant {c} must sit near the dense oracle {oracle}"
        );

        let ring = parse_symbol("(rho^2 - 1)^2", 2).expect("parse");
        let (ok, _) = check_lprime(&ring, 2.0, &default_radius_ladder());
        assert!(ok, "the degenerate ring |xi| = 1 lies inside radius 2");
    }

    #[test]
    fn critical_points_match_closed_form_roots() {
        // grad (xi1^3 + xi2^3 + xi1 xi2) = 0 at (0,0) and (-1/3,-1/3).
        let pts = find_critical_points(
            &poly_symbol("xi1^3 + xi2^3 + xi1*xi2", 2),
            &default_search_box(2),
            20,
        );
        assert_eq!(pts.len(), 2, "points {pts:?}");
        assert!(norm(&pts[0].point.iter().zip([-1.0 / 3.0, -1.0 / 3.0]).map(|(p, q)| p - q).collect::<Vec<_>>()) < 1e-8);
        assert!(norm(&pts[1].point) < 1e-8);
        assert!(pts.iter().all(|p| p.non_degenerate), "both roots are non-degenerate");

        // Four roots: (0,0), (-2/3, 0), (1/3, +-1/sqrt3).
        let pts = find_critical_points(
            &poly_symbol("xi1^3 - 3*xi1*xi2^2 + xi1^2 + xi2^2", 2),
            &default_search_box(2),
            20,
        );
        assert_eq!(pts.len(), 4, "points {pts:?}");
        let expected = [
            [-2.0 / 3.0, 0.0],
            [0.0, 0.0],
            [1.0 / 3.0, -1.0 / 3.0f64.sqrt()],
            [1.0 / 3.0, 1.0 / 3.0f64.sqrt()],
        ];
        for want in expected {
            assert!(
                pts.iter().any(|p| {
                    ((p.point[0] - want[0]).powi(2) + (p.point[1] - want[1]).powi(2)).sqrt() < 1e-8
                }),
                "missing root {want:?} in {pts:?}"
            );
        }
    }

    #[test]
    fn hessian_rank_reads_the_inertia() {
        // xi1^2 in two variables: Hessian diag(2, 0) everywhere.
        let s = poly_symbol("xi1^2", 2);
        let (rank, sig) = hessian_rank_at(&s, &[0.0, 1.0], tol::EIGEN_RANK_REL);
        assert_eq!((rank, sig), (1, (1, 0, 1)));

        // xi1^3 + xi1 xi2 at the origin: [[0,1],[1,0]], eigenvalues +-1.
        let s = poly_symbol("xi1^3 + xi1*xi2", 2);
        let pts = find_critical_points(&s, &default_search_box(2), 20);
        assert_eq!(pts.len(), 1, "unique critical point at the origin");
        assert!(norm(&pts[0].point) < 1e-10);
        assert_eq!(pts[0].rank, 2);
        assert_eq!(pts[0].signature, (1, 1, 0));
        assert!(pts[0].non_degenerate);

        assert_eq!(hessian_rank(&vec![vec![0.0; 2]; 2], 1e-8), (0, (0, 0, 2)));
    }

    #[test]
    fn classification_report_aggregates_flags_and_tags() {
        let report = classify(&poly_symbol("xi1^3 + xi2^3 - xi1", 2));
        assert!(!report.h.holds, "not homogeneous");
        assert!(!report.l.holds, "interior critical points break the global bound");
        assert!(report.hl.holds, "principal part xi1^3 + xi2^3 is dispersive");
        assert!(report.lprime.holds);
        assert!(report.applicable_theorems.iter().any(|t| t == "principal-plus-remainder"));
        assert!(report.applicable_theorems.iter().any(|t| t == "polynomial-decomposition"));

        let report = classify(&poly_symbol("xi1*xi2^2", 2));
        assert!(!report.h.holds, "gradient vanishes on the xi2 = 0 line");
        assert!(!report.l.holds);
        assert!(report.applicable_theorems.iter().any(|t| t == "polynomial-decomposition"));
        assert!(
            !report.applicable_theorems.iter().any(|t| t == "isolated-critical"),
            "a line of zeros is not a Morse configuration"
        );

        let report = classify(&poly_symbol("xi1^2 + xi2^2", 2));
        assert!(report.h.holds);
        assert!(report.applicable_theorems.iter().any(|t| t == "homogeneous-dispersive"));
        assert!(
            report.applicable_theorems.iter().any(|t| t == "isolated-critical"),
            "origin is the unique, non-degenerate critical point"
        );
    }

    #[test]
    fn ring_symbol_is_both_radial_and_polynomial() {
        use crate::symbol::radial::{Profile, RadialProfile};
        use std::sync::Arc;
        let f: Profile = Arc::new(|r: f64| (r * r - 1.0).powi(2));
        let fp: Profile = Arc::new(|r: f64| 4.0 * r * (r * r - 1.0));
        let zeros = RadialProfile::scan_fp_zeros(&fp, 8.0);
        let sym = Symbol::from_radial("(rho^2-1)^2", 2, 4.0, None, RadialProfile::new(f, fp, zeros))
            .with_polynomial_form(parse_polynomial("rho^4 - 2*rho^2 + 1", 2).expect("parse"));
        let report = classify(&sym);
        assert!(!report.h.holds);
        assert!(!report.l.holds, "the gradient vanishes on the unit ring");
        assert!(report.applicable_theorems.iter().any(|t| t == "radial-profile"));
        assert!(report.applicable_theorems.iter().any(|t| t == "polynomial-decomposition"));
    }
}
