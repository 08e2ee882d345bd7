//! Catalog of benchmark symbols: the nine cubic normal forms in two
//! variables (every real cubic reduces to one of them under affine
//! frequency changes) plus the named degenerate examples used across the
//! estimator tests.

use super::expr::parse_polynomial;
use super::poly::PolynomialSymbol;
use super::radial::{Profile, RadialProfile};
use super::Symbol;
use std::sync::Arc;

const NORMAL_FORMS: [&str; 9] = [
    "xi1^3",
    "xi1^3 + xi2^3",
    "xi1^3 - xi1*xi2^2",
    "xi1^3 + xi2^2",
    "xi1*xi2^2",
    "xi1*xi2^2 + xi1^2",
    "xi1^3 + xi1*xi2",
    "xi1^3 + xi2^3 + xi1*xi2",
    "xi1^3 - 3*xi1*xi2^2 + xi1^2 + xi2^2",
];

/// The nine cubic normal forms as named polynomials in two variables.
pub fn normal_form_catalog() -> Vec<(String, PolynomialSymbol)> {
    NORMAL_FORMS
        .iter()
        .map(|src| {
            let p = parse_polynomial(src, 2).expect("catalog entries parse by construction");
            (src.to_string(), p)
        })
        .collect()
}

/// Normal forms wrapped as symbols, ready for classification.
pub fn normal_form_symbols() -> Vec<Symbol> {
    normal_form_catalog().into_iter().map(|(name, p)| Symbol::from_poly(name, p)).collect()
}

/// `(|xi|^2 - 1)^2`: radial double well whose gradient vanishes on the unit
/// ring; also a polynomial, so both the radial and the polynomial
/// machinery apply.
pub fn ring_quartic(dim: usize) -> Symbol {
    let f: Profile = Arc::new(|r: f64| (r * r - 1.0).powi(2));
    let fp: Profile = Arc::new(|r: f64| 4.0 * r * (r * r - 1.0));
    let zeros = RadialProfile::scan_fp_zeros(&fp, 64.0);
    let sym = Symbol::from_radial(
        "(rho^2 - 1)^2",
        dim,
        4.0,
        None,
        RadialProfile::new(f, fp, zeros),
    );
    let poly = match dim {
        1 => parse_polynomial("(xi1^2 - 1)^2", 1),
        2 => parse_polynomial("(xi1^2 + xi2^2 - 1)^2", 2),
        _ => parse_polynomial("(xi1^2 + xi2^2 + xi3^2 - 1)^2", 3),
    }
    .expect("catalog entries parse by construction");
    sym.with_polynomial_form(poly)
}

/// `xi1^2 xi2^2 / |xi|^2`: homogeneous of order 2, gradient vanishing on
/// both axes, with an analytic gradient `2 b grad b` for `b = xi1 xi2 / |xi|`.
pub fn axis_degenerate_quadratic() -> Symbol {
    let f = |xi: &[f64]| {
        let r2 = xi[0] * xi[0] + xi[1] * xi[1];
        if r2 == 0.0 {
            0.0
        } else {
            xi[0] * xi[0] * xi[1] * xi[1] / r2
        }
    };
    let grad = Arc::new(|xi: &[f64]| {
        let r2 = xi[0] * xi[0] + xi[1] * xi[1];
        if r2 == 0.0 {
            return vec![0.0, 0.0];
        }
        let r3 = r2 * r2.sqrt();
        let b = xi[0] * xi[1] / r2.sqrt();
        // grad b = (xi2^3, xi1^3) / |xi|^3, so grad (b^2) = 2 b grad b.
        vec![
            2.0 * b * xi[1] * xi[1] * xi[1] / r3,
            2.0 * b * xi[0] * xi[0] * xi[0] / r3,
        ]
    });
    Symbol::from_closure("xi1^2*xi2^2/rho^2", 2, 2.0, Some(2.0), f, Some(grad))
}

/// `xi1^4 + ... + xin^4 + |xi|^2`: strictly convex, dispersive only at
/// large frequency (the quartic and quadratic scalings disagree).
pub fn quartic_plus_square(dim: usize) -> Symbol {
    let src = match dim {
        1 => "xi1^4 + xi1^2",
        2 => "xi1^4 + xi2^4 + xi1^2 + xi2^2",
        _ => "xi1^4 + xi2^4 + xi3^4 + xi1^2 + xi2^2 + xi3^2",
    };
    Symbol::from_poly(src, parse_polynomial(src, dim).expect("catalog entries parse by construction"))
}

/// Normal forms plus the named degenerate examples, as used by the
/// cross-symbol sweeps.
pub fn extended_catalog() -> Vec<Symbol> {
    let mut all = normal_form_symbols();
    all.push(ring_quartic(2));
    all.push(axis_degenerate_quadratic());
    all.push(quartic_plus_square(2));
    all.push(quartic_plus_square(3));
    all
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbol::classify::{classify, hessian_rank_at};
    use crate::symbol::diff::fd_gradient;
    use crate::tol;

    #[test]
    fn catalog_has_exactly_nine_cubic_forms() {
        let cat = normal_form_catalog();
        assert_eq!(cat.len(), 9);
        for (name, p) in &cat {
            assert_eq!(p.dim(), 2, "{name} lives in two variables");
            assert!(p.degree() <= 3, "{name} has degree at most 3");
        }
        let (name, first) = &cat[0];
        assert_eq!(name, "xi1^3");
        assert_eq!(first.eval(&[2.0, 5.0]), 8.0);
    }

    #[test]
    fn ring_quartic_gradient_goldens() {
        let ring = ring_quartic(2);
        let g = ring.gradient(&[1.0, 0.0]);
        assert!(g[0].abs() < 1e-12 && g[1].abs() < 1e-12, "gradient vanishes on the ring: {g:?}");
        let g = ring.gradient(&[2.0f64.sqrt(), 0.0]);
        assert!((g[0] - 4.0 * 2.0f64.sqrt()).abs() < 1e-10, "grad = 4(|xi|^2-1)xi, got {g:?}");
        assert!(g[1].abs() < 1e-12);
        let zeros = &ring.radial().expect("radial form").fp_zeros;
        assert_eq!(zeros.len(), 2, "profile derivative zeros: {zeros:?}");
        assert!(zeros[0].abs() < 1e-12 && (zeros[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn axis_degenerate_quadratic_has_rank_one_ridges() {
        let s = axis_degenerate_quadratic();
        assert_eq!(s.eval(&[1.0, 1.0]), 0.5);
        // On the axis xi1 = 0 the function grows like xi1^2 * const: the
        // Hessian is 2 grad b (grad b)^T with grad b = (1, 0) at (0, 1).
        let h = s.hessian(&[0.0, 1.0]).expect("fd hessian");
        assert!((h[0][0] - 2.0).abs() < 1e-5, "h00 = {}", h[0][0]);
        assert!(h[0][1].abs() < 1e-5 && h[1][1].abs() < 1e-5);
        let (rank, _) = hessian_rank_at(&s, &[0.0, 1.0], tol::EIGEN_RANK_REL);
        assert_eq!(rank, 1);
        // The declared homogeneity of order 2 is genuine.
        assert!(s.euler_defect().expect("declared") < 1e-9);
    }

    #[test]
    fn analytic_gradients_agree_with_finite_differences() {
        let points: [[f64; 2]; 4] = [[0.7, -0.4], [1.3, 2.1], [-2.2, 0.9], [0.1, 0.3]];
        for sym in extended_catalog() {
            if sym.dim() != 2 {
                continue;
            }
            for p in &points {
                let analytic = sym.gradient(p);
                let s2 = sym.clone();
                let fd = fd_gradient(&move |y: &[f64]| s2.eval(y), p);
                for (a, f) in analytic.iter().zip(&fd) {
                    let scale = a.abs().max(f.abs()).max(1.0);
                    assert!(
                        (a - f).abs() <= tol::GRAD_CONSISTENCY_REL * scale,
                        "{}: gradient mismatch at {p:?}: {analytic:?} vs {fd:?}",
                        sym.name()
                    );
                }
            }
        }
    }

    #[test]
    fn every_normal_form_classifies_without_panicking() {
        for sym in normal_form_symbols() {
            let report = classify(&sym);
            assert_eq!(report.dim, 2);
            assert!(
                report.applicable_theorems.iter().any(|t| t == "polynomial-decomposition"),
                "{}: cubic normal forms are polynomials",
                report.symbol
            );
        }
    }

    #[test]
    fn quartic_plus_square_is_large_frequency_dispersive() {
        let report = classify(&quartic_plus_square(2));
        assert!(report.lprime.holds, "dispersive outside a bounded ball");
        assert!(report
            .applicable_theorems
            .iter()
            .any(|t| t == "large-frequency-dispersive"));
    }
}
