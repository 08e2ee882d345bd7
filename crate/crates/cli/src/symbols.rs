//! Symbol mini-language front end.
//!
//! A symbol spec is one of:
//!
//! * an expression in `xi1..xi3` (and `rho` at even powers), e.g.
//!   `"xi1^3 + xi2^3 - xi1"` — exact polynomial calculus;
//! * an expression in `rho` alone, e.g. `"(rho^2-1)^2"`, or wrapped as
//!   `"radial(rho^3 - rho)"` — a radial profile with exact symbolic
//!   derivative and a derivative-zero scan;
//! * any other expression mixing `rho` and `xi` — a sampled closure with
//!   numerically probed homogeneity;
//! * a named catalog entry: `catalog:normal_form_1` .. `catalog:normal_form_9`,
//!   `catalog:ring_quartic`, `catalog:axis_degenerate`,
//!   `catalog:quartic_plus_square`.

use crate::config::{CliError, CliResult};
use smoothing_core::symbol::catalog;
use smoothing_core::symbol::expr::{parse_radial, parse_symbol};
use smoothing_core::symbol::Symbol;

/// Largest `xiK` index mentioned, by token scan.
fn mentioned_axis(src: &str) -> usize {
    let b = src.as_bytes();
    let mut max = 0;
    for i in 0..b.len().saturating_sub(2) {
        if &b[i..i + 2] == b"xi" && (i == 0 || !b[i - 1].is_ascii_alphanumeric()) {
            if let Some(d @ b'1'..=b'3') = b.get(i + 2) {
                max = max.max((d - b'0') as usize);
            }
        }
    }
    max
}

fn mentions_rho(src: &str) -> bool {
    let b = src.as_bytes();
    for i in 0..b.len().saturating_sub(2) {
        if &b[i..i + 3] == b"rho"
            && (i == 0 || !b[i - 1].is_ascii_alphanumeric())
            && b.get(i + 3).is_none_or(|c| !c.is_ascii_alphanumeric())
        {
            return true;
        }
    }
    false
}

/// Dimension a spec runs in: an explicit hint wins, otherwise the largest
/// mentioned axis, otherwise 2 (the natural home of radial profiles).
pub fn infer_dim(src: &str, hint: Option<usize>) -> usize {
    if let Some(d) = hint {
        return d;
    }
    let axis = mentioned_axis(src);
    if axis > 0 {
        axis
    } else {
        2
    }
}

/// Parse a symbol spec at the given dimension.
pub fn parse_symbol_spec(src: &str, dim: usize) -> CliResult<Symbol> {
    let trimmed = src.trim();
    if let Some(name) = trimmed.strip_prefix("catalog:") {
        return catalog_entry(name.trim(), dim);
    }
    if let Some(rest) = trimmed.strip_prefix("radial(") {
        let inner = rest.strip_suffix(')').ok_or_else(|| CliError::Parse {
            pos: trimmed.len(),
            msg: "radial(...) is missing its closing parenthesis".into(),
        })?;
        return Ok(parse_radial(inner, dim)?);
    }
    if mentions_rho(trimmed) && mentioned_axis(trimmed) == 0 {
        // A pure-rho expression is a radial profile; parse_radial keeps the
        // polynomial expansion when the powers are even.
        if let Ok(sym) = parse_radial(trimmed, dim) {
            return Ok(sym);
        }
    }
    Ok(parse_symbol(trimmed, dim)?)
}

fn catalog_entry(name: &str, dim: usize) -> CliResult<Symbol> {
    if let Some(k) = name.strip_prefix("normal_form_") {
        let idx: usize = k
            .parse()
            .map_err(|_| CliError::Config(format!("bad normal form index `{k}`")))?;
        let forms = catalog::normal_form_symbols();
        if idx == 0 || idx > forms.len() {
            return Err(CliError::Config(format!(
                "normal form index {idx} out of range 1..={}",
                forms.len()
            )));
        }
        return Ok(forms.into_iter().nth(idx - 1).unwrap());
    }
    match name {
        "ring_quartic" => Ok(catalog::ring_quartic(dim)),
        "axis_degenerate" => Ok(catalog::axis_degenerate_quadratic()),
        "quartic_plus_square" => Ok(catalog::quartic_plus_square(dim)),
        _ => Err(CliError::Config(format!(
            "unknown catalog entry `{name}` (normal_form_1..9, ring_quartic, axis_degenerate, quartic_plus_square)"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dimension_inference_follows_mentioned_axes() {
        assert_eq!(infer_dim("xi1^2", None), 1);
        assert_eq!(infer_dim("xi1^3 + xi2^3", None), 2);
        assert_eq!(infer_dim("(rho^2-1)^2", None), 2);
        assert_eq!(infer_dim("xi1^2", Some(3)), 3);
    }

    #[test]
    fn rho_expressions_become_radial_symbols() {
        let s = parse_symbol_spec("(rho^2-1)^2", 2).expect("radial");
        assert!(s.radial().is_some(), "pure-rho spec keeps the profile");
        assert!(s.poly().is_some(), "even powers also expand");
        let w = parse_symbol_spec("radial(rho^3 - rho)", 2).expect("wrapped radial");
        assert!(w.radial().is_some());
        let p = parse_symbol_spec("xi1^3 - xi1", 1).expect("polynomial");
        assert!(p.poly().is_some() && p.radial().is_none());
    }

    #[test]
    fn catalog_names_resolve() {
        assert!(parse_symbol_spec("catalog:normal_form_1", 2).is_ok());
        assert!(parse_symbol_spec("catalog:ring_quartic", 2).is_ok());
        assert!(parse_symbol_spec("catalog:normal_form_10", 2).is_err());
        assert!(parse_symbol_spec("catalog:unknown", 2).is_err());
    }
}
