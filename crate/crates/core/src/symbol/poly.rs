use crate::error::{LabError, Result};
use std::collections::BTreeMap;

/// Real polynomial in up to three frequency variables, stored as a sparse
/// multi-index table `alpha -> coefficient`. The `BTreeMap` keeps term order
/// deterministic for printing and for reproducible numerics.
#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialSymbol {
    dim: usize,
    terms: BTreeMap<[u8; 3], f64>,
}

impl PolynomialSymbol {
    pub fn zero(dim: usize) -> Self {
        PolynomialSymbol { dim, terms: BTreeMap::new() }
    }

    pub fn constant(dim: usize, c: f64) -> Self {
        let mut p = Self::zero(dim);
        p.add_term([0, 0, 0], c);
        p
    }

    /// The coordinate monomial `xi_axis`.
    pub fn variable(dim: usize, axis: usize) -> Self {
        assert!(axis < dim, "axis {axis} outside dimension {dim}");
        let mut alpha = [0u8; 3];
        alpha[axis] = 1;
        let mut p = Self::zero(dim);
        p.add_term(alpha, 1.0);
        p
    }

    pub fn from_terms(dim: usize, terms: &[([u8; 3], f64)]) -> Result<Self> {
        let mut p = Self::zero(dim);
        for &(alpha, c) in terms {
            for j in dim..3 {
                if alpha[j] != 0 {
                    return Err(LabError::Param(format!(
                        "monomial {alpha:?} uses axis {j} outside dimension {dim}"
                    )));
                }
            }
            p.add_term(alpha, c);
        }
        Ok(p)
    }

    pub fn add_term(&mut self, alpha: [u8; 3], c: f64) {
        if c == 0.0 {
            return;
        }
        let entry = self.terms.entry(alpha).or_insert(0.0);
        *entry += c;
        if *entry == 0.0 {
            self.terms.remove(&alpha);
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[u8; 3], &f64)> {
        self.terms.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn eval(&self, xi: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (alpha, c) in &self.terms {
            let mut t = *c;
            for j in 0..self.dim {
                t *= xi[j].powi(alpha[j] as i32);
            }
            acc += t;
        }
        acc
    }

    /// Total degree; zero polynomial reports 0.
    pub fn degree(&self) -> u32 {
        self.terms
            .keys()
            .map(|a| a.iter().map(|&e| e as u32).sum())
            .max()
            .unwrap_or(0)
    }

    /// `d/d xi_axis`, exact.
    pub fn partial(&self, axis: usize) -> Self {
        let mut out = Self::zero(self.dim);
        for (alpha, c) in &self.terms {
            if alpha[axis] == 0 {
                continue;
            }
            let mut beta = *alpha;
            beta[axis] -= 1;
            out.add_term(beta, c * alpha[axis] as f64);
        }
        out
    }

    pub fn gradient(&self) -> Vec<PolynomialSymbol> {
        (0..self.dim).map(|j| self.partial(j)).collect()
    }

    /// `Some(m)` when every monomial has total degree `m` (a positively
    /// homogeneous polynomial).
    pub fn homogeneous_order(&self) -> Option<u32> {
        let mut degs = self.terms.keys().map(|a| a.iter().map(|&e| e as u32).sum::<u32>());
        let first = degs.next()?;
        degs.all(|d| d == first).then_some(first)
    }

    /// Top-degree stratum: the principal part of the symbol.
    pub fn principal_part(&self) -> Self {
        let m: u32 = self.degree();
        let mut out = Self::zero(self.dim);
        for (alpha, c) in &self.terms {
            if alpha.iter().map(|&e| e as u32).sum::<u32>() == m {
                out.add_term(*alpha, *c);
            }
        }
        out
    }

    /// Lower-order remainder `a - a_m`.
    pub fn remainder(&self) -> Self {
        let mut out = self.clone();
        for (alpha, c) in self.principal_part().terms {
            out.add_term(alpha, -c);
        }
        out
    }

    /// Coefficients (ascending power) of the univariate polynomial obtained
    /// by freezing every coordinate except `axis` at `frozen` (which carries
    /// the remaining coordinates in axis order, skipping `axis`).
    pub fn univariate_coeffs(&self, axis: usize, frozen: &[f64]) -> Vec<f64> {
        let mut coeffs = vec![0.0; self.degree() as usize + 1];
        for (alpha, c) in &self.terms {
            let mut t = *c;
            let mut fi = 0;
            for j in 0..self.dim {
                if j == axis {
                    continue;
                }
                t *= frozen[fi].powi(alpha[j] as i32);
                fi += 1;
            }
            coeffs[alpha[axis] as usize] += t;
        }
        while coeffs.len() > 1 && *coeffs.last().unwrap() == 0.0 {
            coeffs.pop();
        }
        coeffs
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero(self.dim.max(other.dim));
        for (a, ca) in &self.terms {
            for (b, cb) in &other.terms {
                let alpha = [a[0] + b[0], a[1] + b[1], a[2] + b[2]];
                out.add_term(alpha, ca * cb);
            }
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.dim = self.dim.max(other.dim);
        for (alpha, c) in &other.terms {
            out.add_term(*alpha, *c);
        }
        out
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = Self::zero(self.dim);
        for (alpha, c) in &self.terms {
            out.add_term(*alpha, c * s);
        }
        out
    }

    pub fn powi(&self, mut e: u32) -> Self {
        let mut acc = Self::constant(self.dim, 1.0);
        let mut base = self.clone();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            base = base.mul(&base);
            e >>= 1;
        }
        acc
    }

    /// Canonical display: descending degree, `xi1^a*xi2^b` factors.
    pub fn render(&self) -> String {
        if self.terms.is_empty() {
            return "0".to_string();
        }
        let mut keys: Vec<&[u8; 3]> = self.terms.keys().collect();
        keys.sort_by_key(|a| {
            (std::cmp::Reverse(a.iter().map(|&e| e as u32).sum::<u32>()), (*a).clone())
        });
        let mut out = String::new();
        for alpha in keys {
            let c = self.terms[alpha];
            let mut factors: Vec<String> = Vec::new();
            for j in 0..self.dim {
                match alpha[j] {
                    0 => {}
                    1 => factors.push(format!("xi{}", j + 1)),
                    e => factors.push(format!("xi{}^{}", j + 1, e)),
                }
            }
            let mag = c.abs();
            let body = if factors.is_empty() {
                format!("{mag}")
            } else if mag == 1.0 {
                factors.join("*")
            } else {
                format!("{mag}*{}", factors.join("*"))
            };
            if out.is_empty() {
                if c < 0.0 {
                    out.push('-');
                }
            } else if c < 0.0 {
                out.push_str(" - ");
            } else {
                out.push_str(" + ");
            }
            out.push_str(&body);
        }
        out
    }
}
