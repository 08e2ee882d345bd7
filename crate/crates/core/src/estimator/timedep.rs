//! Time-dependent dispersion coefficients `c(t)` and the reparametrized
//! spacetime norm.
//!
//! For the evolution `i u_t + c(t) a(D) u = 0` the propagator is
//! `e^{i C(t) a(D)}` with `C(t) = int_0^t c`, and the natural norm carries
//! the density `|c(t)|^(1/2)`:
//!
//! `|| w(x) |c(t)|^(1/2) sigma(D) e^{i C(t) a(D)} phi ||_{L^2(t in [lo,hi], x)}`.
//!
//! Substituting `tau = C(t)` cancels the density against the Jacobian
//! exactly, so the norm is the constant-coefficient window norm over
//! `[C(lo), C(hi)]`; equivalently, the time samples sit at C-equispaced
//! points. That change of variables is exact at the propagator level, not
//! an approximation, provided `c` never changes sign on the window.

use std::sync::Arc;

use crate::error::{LabError, Result};
use crate::field::ComplexField;
use crate::symbol::Symbol;

use super::norms::{build_tables, window_norm};
use super::spec::{SmootherSpec, WeightSpec};

/// A dispersion coefficient `c(t)`, continuous and of one strict sign on
/// the closed window `[t_lo, t_hi]`, which must contain 0 (the primitive is
/// anchored there: `C(0) = 0`).
#[derive(Clone)]
pub struct TimeCoefficient {
    c: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    t_lo: f64,
    t_hi: f64,
    label: String,
}

impl std::fmt::Debug for TimeCoefficient {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TimeCoefficient")
            .field("label", &self.label)
            .field("window", &(self.t_lo, self.t_hi))
            .finish()
    }
}

/// Sign-scan resolution: zeros or sign changes of `c` are looked for on
/// this many equispaced samples of the window.
const SIGN_SCAN: usize = 4096;

impl TimeCoefficient {
    pub fn new(
        label: impl Into<String>,
        t_lo: f64,
        t_hi: f64,
        c: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        if !(t_lo.is_finite() && t_hi.is_finite() && t_lo < t_hi) {
            return Err(LabError::Param(format!(
                "time window must be finite with t_lo < t_hi, got [{t_lo}, {t_hi}]"
            )));
        }
        if !(t_lo <= 0.0 && 0.0 <= t_hi) {
            return Err(LabError::Param(format!(
                "time window [{t_lo}, {t_hi}] must contain 0: the primitive is anchored at C(0) = 0"
            )));
        }
        let sign = c(t_lo).signum();
        for k in 0..=SIGN_SCAN {
            let t = t_lo + (t_hi - t_lo) * k as f64 / SIGN_SCAN as f64;
            let v = c(t);
            if !v.is_finite() {
                return Err(LabError::TimeCoefficient(format!(
                    "c({t}) is not finite"
                )));
            }
            if v == 0.0 || v.signum() != sign {
                return Err(LabError::TimeCoefficient(format!(
                    "c changes sign or vanishes near t = {t}; the reparametrization needs one strict sign"
                )));
            }
        }
        Ok(TimeCoefficient { c: Arc::new(c), t_lo, t_hi, label: label.into() })
    }

    pub fn constant(k: f64, t_lo: f64, t_hi: f64) -> Result<Self> {
        if !k.is_finite() || k == 0.0 {
            return Err(LabError::TimeCoefficient(format!(
                "constant coefficient must be finite and nonzero, got {k}"
            )));
        }
        Self::new(format!("const:{k}"), t_lo, t_hi, move |_| k)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.t_lo, self.t_hi)
    }

    pub fn eval(&self, t: f64) -> f64 {
        (self.c)(t)
    }

    /// `C(t) = int_0^t c(s) ds` by adaptive Simpson quadrature to 1e-10.
    pub fn primitive(&self, t: f64) -> f64 {
        if t == 0.0 {
            0.0
        } else if t > 0.0 {
            adaptive_simpson(self.c.as_ref(), 0.0, t, 1e-10)
        } else {
            -adaptive_simpson(self.c.as_ref(), t, 0.0, 1e-10)
        }
    }

    /// Invert the strictly monotone primitive on the window by bisection.
    pub fn inverse_primitive(&self, tau: f64) -> Result<f64> {
        let increasing = self.eval(self.t_lo) > 0.0;
        let (c_lo, c_hi) = (self.primitive(self.t_lo), self.primitive(self.t_hi));
        let (tau_min, tau_max) = if c_lo <= c_hi { (c_lo, c_hi) } else { (c_hi, c_lo) };
        if !(tau_min..=tau_max).contains(&tau) {
            return Err(LabError::Param(format!(
                "tau = {tau} is outside the primitive's range [{tau_min}, {tau_max}]"
            )));
        }
        let sign = if increasing { 1.0 } else { -1.0 };
        let mut lo = self.t_lo;
        let mut hi = self.t_hi;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if sign * (self.primitive(mid) - tau) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-14 * hi.abs().max(lo.abs()).max(1.0) {
                break;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let m = 0.5 * (a + b);
    let fa = f(a);
    let fm = f(m);
    let fb = f(b);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, fa, b, fb, m, fm, whole, tol, 60)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    fa: f64,
    b: f64,
    fb: f64,
    m: f64,
    fm: f64,
    whole: f64,
    tol: f64,
    depth: usize,
) -> f64 {
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        simpson_step(f, a, fa, m, fm, lm, flm, left, tol / 2.0, depth - 1)
            + simpson_step(f, m, fm, b, fb, rm, frm, right, tol / 2.0, depth - 1)
    }
}

/// Reparametrized spacetime norm for the coefficient `c(t)` over its
/// window: exactly the constant-coefficient window norm over
/// `[C(t_lo), C(t_hi)]` (sorted when `c < 0`).
pub fn timedep_norm(
    a: &Symbol,
    coeff: &TimeCoefficient,
    weight: &WeightSpec,
    smoother: &SmootherSpec,
    time_samples: usize,
    phi: &ComplexField,
) -> Result<f64> {
    if time_samples < 16 {
        return Err(LabError::Param(format!(
            "need at least 16 time samples, got {time_samples}"
        )));
    }
    let tables = build_tables(a, weight, smoother, phi.grid())?;
    let (t_lo, t_hi) = coeff.interval();
    let c_lo = coeff.primitive(t_lo);
    let c_hi = coeff.primitive(t_hi);
    let (tau_lo, tau_hi) = if c_lo <= c_hi { (c_lo, c_hi) } else { (c_hi, c_lo) };
    window_norm(&tables.a_vals, &tables.w, &tables.sigma, phi, tau_lo, tau_hi, time_samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimator::spec::EstimateSpec;
    use crate::estimator::spacetime_norm;
    use crate::field::random_band_limited;
    use crate::grid::GridSpec;
    use crate::symbol::PolynomialSymbol;

    fn setup() -> (GridSpec, Symbol, ComplexField) {
        let g = GridSpec::new(&[20.0], &[64]).unwrap();
        let a = Symbol::from_poly(
            "xi^2",
            PolynomialSymbol::from_terms(1, &[([2, 0, 0], 1.0)]).unwrap(),
        );
        let cut = 2.0 / 3.0 * g.nyquist(0);
        let phi = random_band_limited(
            &g,
            move |xi: &[f64]| xi[0].abs() > 0.0 && xi[0].abs() <= cut,
            31,
        )
        .unwrap();
        (g, a, phi)
    }

    #[test]
    fn unit_coefficient_reduces_to_plain_window() {
        let (_, a, phi) = setup();
        let w = WeightSpec::bracket(1.0).unwrap();
        let s = SmootherSpec::invariant();
        let coeff = TimeCoefficient::constant(1.0, -3.0, 3.0).unwrap();
        let td = timedep_norm(&a, &coeff, &w, &s, 64, &phi).unwrap();
        let spec = EstimateSpec::new(w, s, 3.0, 64).unwrap();
        let plain = spacetime_norm(&a, &spec, &phi).unwrap();
        assert!(
            (td - plain).abs() / plain < 1e-12,
            "c = 1 must reduce to the plain norm: {td} vs {plain}"
        );
    }

    #[test]
    fn constant_speedup_rescales_the_window() {
        // c = 2 on [-T/2, T/2] covers the same phase range as c = 1 on
        // [-T, T]; the density factor makes the norms equal.
        let (_, a, phi) = setup();
        let w = WeightSpec::bracket(1.0).unwrap();
        let s = SmootherSpec::invariant();
        let coeff = TimeCoefficient::constant(2.0, -1.5, 1.5).unwrap();
        let td = timedep_norm(&a, &coeff, &w, &s, 64, &phi).unwrap();
        let spec = EstimateSpec::new(w, s, 3.0, 64).unwrap();
        let plain = spacetime_norm(&a, &spec, &phi).unwrap();
        assert!(
            (td - plain).abs() / plain < 1e-12,
            "c = 2 on the half window must equal c = 1 on the full window: {td} vs {plain}"
        );
    }

    #[test]
    fn decaying_coefficient_integrates_to_arctangent_window() {
        let (_, a, phi) = setup();
        let coeff = TimeCoefficient::new("1/(1+t^2)", 0.0, 50.0, |t| 1.0 / (1.0 + t * t))
            .unwrap();
        let c50 = coeff.primitive(50.0);
        assert!(
            (c50 - 50f64.atan()).abs() < 1e-10,
            "primitive of 1/(1+t^2): got {c50}, expect arctan 50"
        );
        assert_eq!(coeff.primitive(0.0), 0.0);

        let w = WeightSpec::bracket(1.0).unwrap();
        let s = SmootherSpec::invariant();
        let td = timedep_norm(&a, &coeff, &w, &s, 64, &phi).unwrap();
        let tables = build_tables(&a, &w, &s, phi.grid()).unwrap();
        let direct =
            window_norm(&tables.a_vals, &tables.w, &tables.sigma, &phi, 0.0, c50, 64).unwrap();
        assert!(
            (td - direct).abs() / direct < 1e-12,
            "reparametrized norm must be the arctan-window norm: {td} vs {direct}"
        );
    }

    #[test]
    fn primitive_inversion_round_trips() {
        let coeff = TimeCoefficient::new("1/(1+t^2)", 0.0, 50.0, |t| 1.0 / (1.0 + t * t))
            .unwrap();
        let t = 7.0;
        let tau = coeff.primitive(t);
        let back = coeff.inverse_primitive(tau).unwrap();
        assert!((back - t).abs() < 1e-9, "inverse(primitive({t})) = {back}");
        assert!(coeff.inverse_primitive(2.0).is_err(), "tau beyond arctan(50) must be rejected");
    }

    #[test]
    fn sign_changes_are_rejected() {
        assert!(
            TimeCoefficient::new("t", -1.0, 1.0, |t| t).is_err(),
            "coefficient crossing zero must be rejected"
        );
        assert!(
            TimeCoefficient::new("cos", 0.0, 5.0, f64::cos).is_err(),
            "interior zero must be rejected"
        );
        assert!(TimeCoefficient::constant(0.0, -1.0, 1.0).is_err());
        assert!(
            TimeCoefficient::new("shifted", 2.0, 5.0, |_| 1.0).is_err(),
            "window must contain the anchor t = 0"
        );
    }

    #[test]
    fn negative_coefficient_reverses_time_harmlessly() {
        // |c| = 1 with c < 0 runs the window backwards; over a symmetric
        // window the reparametrized norm is unchanged.
        let (_, a, phi) = setup();
        let w = WeightSpec::bracket(1.0).unwrap();
        let s = SmootherSpec::invariant();
        let forward = timedep_norm(
            &a,
            &TimeCoefficient::constant(1.0, -3.0, 3.0).unwrap(),
            &w,
            &s,
            64,
            &phi,
        )
        .unwrap();
        let backward = timedep_norm(
            &a,
            &TimeCoefficient::constant(-1.0, -3.0, 3.0).unwrap(),
            &w,
            &s,
            64,
            &phi,
        )
        .unwrap();
        assert!(
            (forward - backward).abs() / forward < 1e-12,
            "time reversal must preserve the symmetric-window norm"
        );
    }
}
