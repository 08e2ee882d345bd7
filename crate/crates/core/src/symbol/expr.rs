//! Tiny expression language for symbols: numbers, `xi1..xi3`, `rho`,
//! `+ - * / ^` and parentheses. Expressions that expand to polynomials get
//! exact calculus; anything else becomes a sampled closure.

use super::poly::PolynomialSymbol;
use super::{sphere_directions, Symbol};
use crate::error::{LabError, Result};
use std::sync::Arc;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Xi(usize),
    Rho,
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

fn lex(src: &str) -> Result<Vec<(usize, Tok)>> {
    let bytes = src.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        match c {
            ' ' | '\t' | '\n' | '\r' => i += 1,
            '+' => {
                toks.push((i, Tok::Plus));
                i += 1;
            }
            '-' => {
                toks.push((i, Tok::Minus));
                i += 1;
            }
            '*' => {
                toks.push((i, Tok::Star));
                i += 1;
            }
            '/' => {
                toks.push((i, Tok::Slash));
                i += 1;
            }
            '^' => {
                toks.push((i, Tok::Caret));
                i += 1;
            }
            '(' => {
                toks.push((i, Tok::LParen));
                i += 1;
            }
            ')' => {
                toks.push((i, Tok::RParen));
                i += 1;
            }
            '0'..='9' | '.' => {
                let start = i;
                while i < bytes.len()
                    && (bytes[i].is_ascii_digit()
                        || bytes[i] == b'.'
                        || bytes[i] == b'e'
                        || bytes[i] == b'E'
                        || ((bytes[i] == b'+' || bytes[i] == b'-')
                            && i > start
                            && (bytes[i - 1] == b'e' || bytes[i - 1] == b'E')))
                {
                    i += 1;
                }
                let text = &src[start..i];
                let v: f64 = text.parse().map_err(|_| LabError::Parse {
                    pos: start,
                    msg: format!("invalid number `{text}`"),
                })?;
                toks.push((start, Tok::Num(v)));
            }
            'a'..='z' | 'A'..='Z' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                let word = &src[start..i];
                let tok = match word {
                    "xi1" => Tok::Xi(0),
                    "xi2" => Tok::Xi(1),
                    "xi3" => Tok::Xi(2),
                    "rho" => Tok::Rho,
                    other => {
                        return Err(LabError::Parse {
                            pos: start,
                            msg: format!(
                                "unknown identifier `{other}` (expected xi1, xi2, xi3 or rho)"
                            ),
                        })
                    }
                };
                toks.push((start, tok));
            }
            other => {
                return Err(LabError::Parse { pos: i, msg: format!("unexpected character `{other}`") })
            }
        }
    }
    Ok(toks)
}

#[derive(Debug, Clone)]
enum Ast {
    Num(f64),
    Xi(usize),
    Rho,
    Neg(Box<Ast>),
    Add(Box<Ast>, Box<Ast>),
    Sub(Box<Ast>, Box<Ast>),
    Mul(Box<Ast>, Box<Ast>),
    Div(Box<Ast>, Box<Ast>),
    Pow(Box<Ast>, i32),
}

struct Parser<'a> {
    toks: &'a [(usize, Tok)],
    pos: usize,
    src_len: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn here(&self) -> usize {
        self.toks.get(self.pos).map_or(self.src_len, |(p, _)| *p)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(_, t)| t.clone());
        self.pos += 1;
        t
    }

    fn expr(&mut self) -> Result<Ast> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.bump();
                    lhs = Ast::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Some(Tok::Minus) => {
                    self.bump();
                    lhs = Ast::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Ast> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.bump();
                    lhs = Ast::Mul(Box::new(lhs), Box::new(self.unary()?));
                }
                Some(Tok::Slash) => {
                    self.bump();
                    lhs = Ast::Div(Box::new(lhs), Box::new(self.unary()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Ast> {
        if matches!(self.peek(), Some(Tok::Minus)) {
            self.bump();
            return Ok(Ast::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Ast> {
        let base = self.atom()?;
        if matches!(self.peek(), Some(Tok::Caret)) {
            self.bump();
            let neg = if matches!(self.peek(), Some(Tok::Minus)) {
                self.bump();
                true
            } else {
                false
            };
            let pos = self.here();
            match self.bump() {
                Some(Tok::Num(v)) if v.fract() == 0.0 && v.abs() <= i32::MAX as f64 => {
                    let mut k = v as i32;
                    if neg {
                        k = -k;
                    }
                    return Ok(Ast::Pow(Box::new(base), k));
                }
                _ => {
                    return Err(LabError::Parse {
                        pos,
                        msg: "exponent must be an integer literal".into(),
                    })
                }
            }
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Ast> {
        let pos = self.here();
        match self.bump() {
            Some(Tok::Num(v)) => Ok(Ast::Num(v)),
            Some(Tok::Xi(i)) => Ok(Ast::Xi(i)),
            Some(Tok::Rho) => Ok(Ast::Rho),
            Some(Tok::LParen) => {
                let inner = self.expr()?;
                let close = self.here();
                match self.bump() {
                    Some(Tok::RParen) => Ok(inner),
                    _ => Err(LabError::Parse { pos: close, msg: "expected `)`".into() }),
                }
            }
            Some(other) => {
                Err(LabError::Parse { pos, msg: format!("unexpected token {other:?}") })
            }
            None => Err(LabError::Parse { pos, msg: "unexpected end of expression".into() }),
        }
    }
}

fn parse_ast(src: &str) -> Result<Ast> {
    let toks = lex(src)?;
    let mut p = Parser { toks: &toks, pos: 0, src_len: src.len() };
    let ast = p.expr()?;
    if p.pos != toks.len() {
        return Err(LabError::Parse { pos: p.here(), msg: "trailing input after expression".into() });
    }
    Ok(ast)
}

fn max_axis(ast: &Ast) -> usize {
    match ast {
        Ast::Num(_) => 0,
        Ast::Xi(i) => i + 1,
        Ast::Rho => 0,
        Ast::Neg(a) | Ast::Pow(a, _) => max_axis(a),
        Ast::Add(a, b) | Ast::Sub(a, b) | Ast::Mul(a, b) | Ast::Div(a, b) => {
            max_axis(a).max(max_axis(b))
        }
    }
}

/// Expand to a polynomial in `xi`; `rho` is accepted only at even powers.
fn to_poly(ast: &Ast, dim: usize) -> Result<PolynomialSymbol> {
    let not_poly = |msg: &str| LabError::Parse { pos: 0, msg: msg.into() };
    match ast {
        Ast::Num(v) => Ok(PolynomialSymbol::constant(dim, *v)),
        Ast::Xi(i) => {
            if *i >= dim {
                return Err(not_poly(&format!("xi{} exceeds dimension {dim}", i + 1)));
            }
            Ok(PolynomialSymbol::variable(dim, *i))
        }
        Ast::Rho => Err(not_poly("rho at an odd power is not a polynomial")),
        Ast::Neg(a) => Ok(to_poly(a, dim)?.scale(-1.0)),
        Ast::Add(a, b) => Ok(to_poly(a, dim)?.add(&to_poly(b, dim)?)),
        Ast::Sub(a, b) => Ok(to_poly(a, dim)?.add(&to_poly(b, dim)?.scale(-1.0))),
        Ast::Mul(a, b) => Ok(to_poly(a, dim)?.mul(&to_poly(b, dim)?)),
        Ast::Div(a, b) => {
            let den = to_poly(b, dim)?;
            if den.degree() != 0 {
                return Err(not_poly("division only by constants in polynomial mode"));
            }
            let c = den.eval(&vec![0.0; dim]);
            if c == 0.0 {
                return Err(not_poly("division by zero"));
            }
            Ok(to_poly(a, dim)?.scale(1.0 / c))
        }
        Ast::Pow(a, k) => {
            if *k < 0 {
                return Err(not_poly("negative exponents are not polynomial"));
            }
            if let Ast::Rho = **a {
                if k % 2 != 0 {
                    return Err(not_poly("rho at an odd power is not a polynomial"));
                }
                let mut r2 = PolynomialSymbol::zero(dim);
                for j in 0..dim {
                    let x = PolynomialSymbol::variable(dim, j);
                    r2 = r2.add(&x.mul(&x));
                }
                return Ok(r2.powi((*k as u32) / 2));
            }
            Ok(to_poly(a, dim)?.powi(*k as u32))
        }
    }
}

fn eval_ast(ast: &Ast, xi: &[f64]) -> f64 {
    match ast {
        Ast::Num(v) => *v,
        Ast::Xi(i) => xi[*i],
        Ast::Rho => xi.iter().map(|c| c * c).sum::<f64>().sqrt(),
        Ast::Neg(a) => -eval_ast(a, xi),
        Ast::Add(a, b) => eval_ast(a, xi) + eval_ast(b, xi),
        Ast::Sub(a, b) => eval_ast(a, xi) - eval_ast(b, xi),
        Ast::Mul(a, b) => eval_ast(a, xi) * eval_ast(b, xi),
        Ast::Div(a, b) => eval_ast(a, xi) / eval_ast(b, xi),
        Ast::Pow(a, k) => eval_ast(a, xi).powi(*k),
    }
}

fn uses_xi(ast: &Ast) -> bool {
    max_axis(ast) > 0
}

/// Exact symbolic `d/d rho` of a rho-only expression.
fn diff_rho(ast: &Ast) -> Ast {
    match ast {
        Ast::Num(_) | Ast::Xi(_) => Ast::Num(0.0),
        Ast::Rho => Ast::Num(1.0),
        Ast::Neg(a) => Ast::Neg(Box::new(diff_rho(a))),
        Ast::Add(a, b) => Ast::Add(Box::new(diff_rho(a)), Box::new(diff_rho(b))),
        Ast::Sub(a, b) => Ast::Sub(Box::new(diff_rho(a)), Box::new(diff_rho(b))),
        Ast::Mul(a, b) => Ast::Add(
            Box::new(Ast::Mul(Box::new(diff_rho(a)), b.clone())),
            Box::new(Ast::Mul(a.clone(), Box::new(diff_rho(b)))),
        ),
        Ast::Div(a, b) => Ast::Div(
            Box::new(Ast::Sub(
                Box::new(Ast::Mul(Box::new(diff_rho(a)), b.clone())),
                Box::new(Ast::Mul(a.clone(), Box::new(diff_rho(b)))),
            )),
            Box::new(Ast::Pow(b.clone(), 2)),
        ),
        Ast::Pow(a, k) => {
            if *k == 0 {
                return Ast::Num(0.0);
            }
            Ast::Mul(
                Box::new(Ast::Mul(Box::new(Ast::Num(*k as f64)), Box::new(diff_rho(a)))),
                Box::new(Ast::Pow(a.clone(), k - 1)),
            )
        }
    }
}

/// Parse an expression in `rho` alone as a radial symbol: the profile, its
/// exact symbolic derivative, and the derivative zeros scanned on [0, 64].
/// When every `rho` power is even the polynomial expansion is attached, so
/// polynomial machinery applies too.
pub fn parse_radial(src: &str, dim: usize) -> Result<Symbol> {
    let ast = parse_ast(src)?;
    if uses_xi(&ast) {
        return Err(LabError::Parse {
            pos: 0,
            msg: "radial profiles are expressions in rho only".into(),
        });
    }
    let ast = Arc::new(ast);
    let dast = Arc::new(diff_rho(&ast));
    let f: crate::symbol::radial::Profile = {
        let ast = ast.clone();
        Arc::new(move |rho: f64| eval_ast(&ast, &[rho]))
    };
    let fp: crate::symbol::radial::Profile = {
        let dast = dast.clone();
        Arc::new(move |rho: f64| eval_ast(&dast, &[rho]))
    };
    let zeros = crate::symbol::radial::RadialProfile::scan_fp_zeros(&fp, 64.0);
    let (order, homogeneous) = probe_growth(&ast, 1.max(dim));
    let sym = Symbol::from_radial(
        src.trim(),
        dim,
        order,
        homogeneous,
        crate::symbol::radial::RadialProfile::new(f, fp, zeros),
    );
    match to_poly(&ast, dim) {
        Ok(p) => Ok(sym.with_polynomial_form(p)),
        Err(_) => Ok(sym),
    }
}

/// Parse an expression that must expand to a polynomial in `xi1..xi{dim}`.
pub fn parse_polynomial(src: &str, dim: usize) -> Result<PolynomialSymbol> {
    let ast = parse_ast(src)?;
    let used = max_axis(&ast);
    if used > dim {
        return Err(LabError::Parse {
            pos: 0,
            msg: format!("expression uses xi{used} but dimension is {dim}"),
        });
    }
    to_poly(&ast, dim)
}

/// Parse any expression; polynomial expansions keep exact calculus, and
/// everything else becomes a closure with numerically probed homogeneity.
pub fn parse_symbol(src: &str, dim: usize) -> Result<Symbol> {
    let ast = parse_ast(src)?;
    let used = max_axis(&ast);
    if used > dim {
        return Err(LabError::Parse {
            pos: 0,
            msg: format!("expression uses xi{used} but dimension is {dim}"),
        });
    }
    if let Ok(p) = to_poly(&ast, dim) {
        return Ok(Symbol::from_poly(src.trim(), p));
    }
    let ast = Arc::new(ast);
    let f = {
        let ast = ast.clone();
        move |xi: &[f64]| eval_ast(&ast, xi)
    };
    let (order, homogeneous) = probe_growth(&*ast, dim);
    Ok(Symbol::from_closure(src.trim(), dim, order, homogeneous, f, None))
}

/// Log-log growth slope at large radius, plus a dilation test for exact
/// homogeneity. Returns `(order, homogeneous_order)`.
fn probe_growth(ast: &Ast, dim: usize) -> (f64, Option<f64>) {
    let dirs = sphere_directions(dim, 16);
    let r1 = 512.0;
    let r2 = 1024.0;
    let mut max1 = 0.0f64;
    let mut max2 = 0.0f64;
    for d in &dirs {
        let x1: Vec<f64> = d.iter().map(|c| c * r1).collect();
        let x2: Vec<f64> = d.iter().map(|c| c * r2).collect();
        max1 = max1.max(eval_ast(ast, &x1).abs());
        max2 = max2.max(eval_ast(ast, &x2).abs());
    }
    if max1 == 0.0 || max2 == 0.0 || !max1.is_finite() || !max2.is_finite() {
        return (0.0, None);
    }
    let slope = (max2 / max1).log2();
    let rounded = (slope * 2.0).round() / 2.0;
    let order = if (slope - rounded).abs() < 1e-6 { rounded } else { slope };

    // Exact homogeneity: a(t xi) = t^m a(xi) at moderate points.
    let m = order;
    let mut homogeneous = true;
    'outer: for d in &dirs {
        for base in [0.7, 1.3] {
            for t in [2.0, 3.0] {
                let x: Vec<f64> = d.iter().map(|c| c * base).collect();
                let xt: Vec<f64> = x.iter().map(|c| c * t).collect();
                let lhs = eval_ast(ast, &xt);
                let rhs = t.powf(m) * eval_ast(ast, &x);
                if (lhs - rhs).abs() > 1e-9 * (lhs.abs() + rhs.abs() + 1e-12) {
                    homogeneous = false;
                    break 'outer;
                }
            }
        }
    }
    (order, homogeneous.then_some(m))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn polynomial_expressions_expand_exactly() {
        let p = parse_polynomial("xi1*xi2^2", 2).expect("parse");
        let terms: Vec<([u8; 3], f64)> = p.terms().map(|(a, c)| (*a, *c)).collect();
        assert_eq!(terms, vec![([1, 2, 0], 1.0)]);

        let q = parse_polynomial("(xi1^2 + xi2^2 - 1)^2", 2).expect("parse");
        assert_eq!(q.degree(), 4);
        let xi = [0.3, -1.1];
        let r2 = xi[0] * xi[0] + xi[1] * xi[1];
        assert_relative_eq!(q.eval(&xi), (r2 - 1.0) * (r2 - 1.0), max_relative = 1e-14);

        let even = parse_polynomial("rho^4 - 2*rho^2 + 1", 2).expect("even rho powers");
        assert_relative_eq!(even.eval(&xi), (r2 - 1.0) * (r2 - 1.0), max_relative = 1e-14);

        let half = parse_polynomial("xi1^2 / 2", 1).expect("constant division");
        assert_relative_eq!(half.eval(&[3.0]), 4.5, max_relative = 1e-15);
    }

    #[test]
    fn parse_errors_carry_byte_positions() {
        match parse_polynomial("xi1 + xi4", 3).expect_err("bad variable") {
            LabError::Parse { pos, msg } => {
                assert_eq!(pos, 6, "xi4 starts at byte 6");
                assert!(msg.contains("xi4"), "message names the identifier: {msg}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
        match parse_polynomial("2 ^ xi1", 1).expect_err("non-literal exponent") {
            LabError::Parse { pos, .. } => assert_eq!(pos, 4),
            other => panic!("expected parse error, got {other:?}"),
        }
        assert!(parse_polynomial("xi1 +", 1).is_err(), "dangling operator");
        assert!(parse_polynomial("rho^3", 2).is_err(), "odd rho power is not polynomial");
        assert!(parse_polynomial("xi1^-1", 1).is_err(), "negative power is not polynomial");
        assert!(parse_polynomial("xi2", 1).is_err(), "dimension bound enforced");
    }

    #[test]
    fn non_polynomial_expressions_become_closures() {
        let s = parse_symbol("rho^3", 2).expect("closure symbol");
        assert!(s.poly().is_none());
        assert_relative_eq!(s.eval(&[3.0, 4.0]), 125.0, max_relative = 1e-12);
        assert_eq!(s.homogeneous_order(), Some(3.0), "|xi|^3 is homogeneous of order 3");
        assert_relative_eq!(s.order(), 3.0, max_relative = 1e-9);

        let t = parse_symbol("rho^2 + rho", 2).expect("mixed growth");
        assert_eq!(t.homogeneous_order(), None, "sum of different orders");

        // Polynomial route keeps exact calculus.
        let p = parse_symbol("xi1^2 + xi2^2", 2).expect("poly symbol");
        assert!(p.poly().is_some());
        assert_eq!(p.homogeneous_order(), Some(2.0));
    }

    #[test]
    fn negative_exponents_evaluate_in_closure_mode() {
        let s = parse_symbol("xi1^-2", 1).expect("closure with negative power");
        assert_relative_eq!(s.eval(&[2.0]), 0.25, max_relative = 1e-15);
    }

    #[test]
    fn radial_profiles_carry_exact_derivatives_and_zero_scan() {
        let s = parse_radial("(rho^2 - 1)^2", 2).expect("radial symbol");
        let prof = s.radial().expect("radial representation");
        assert_relative_eq!(prof.eval(1.5), (1.5f64 * 1.5 - 1.0).powi(2), max_relative = 1e-14);
        // f' = 4 rho (rho^2 - 1), zeros at 0 and 1.
        assert_relative_eq!(prof.deriv(2.0), 24.0, max_relative = 1e-14);
        assert_eq!(prof.fp_zeros.len(), 2, "two derivative zeros, got {:?}", prof.fp_zeros);
        assert!(prof.fp_zeros[0].abs() < 1e-9 && (prof.fp_zeros[1] - 1.0).abs() < 1e-9);
        assert!(s.poly().is_some(), "even rho powers expand to a polynomial");
        assert_relative_eq!(s.eval(&[0.6, 0.8]), 0.0, epsilon = 1e-14);

        let odd = parse_radial("rho^3 - 2*rho", 1).expect("odd profile");
        assert!(odd.poly().is_none(), "odd rho powers have no polynomial expansion");
        assert_relative_eq!(odd.radial().unwrap().deriv(2.0), 10.0, max_relative = 1e-14);

        assert!(parse_radial("xi1^2", 1).is_err(), "xi variables are rejected");
    }
}
