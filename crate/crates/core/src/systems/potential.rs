//! One-dimensional wells `H = c p² + V(q)` with polynomial `V`.
//!
//! Potentials are written in a small polynomial language: one variable
//! (any single letter), decimal literals, `+ - * ^` with non-negative integer
//! exponents, parentheses and implicit multiplication (`2y^2`).

use std::fmt;
use std::sync::Arc;

use rand::RngCore;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::sampling::ray_sample;
use super::{check_dims, require_positive, Convention, Hamiltonian, Params, SystemSpec};
use crate::error::{Error, Result};
use crate::phase::PhasePoint;

/// Polynomial in one variable, `Σ coeffs[i] xⁱ`.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct Polynomial {
    pub source: String,
    pub coeffs: Vec<f64>,
}

impl fmt::Debug for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Polynomial({:?})", self.source)
    }
}

impl Polynomial {
    pub fn parse(src: &str) -> Result<Self> {
        let mut p = Parser {
            chars: src.chars().filter(|c| !c.is_whitespace()).collect(),
            pos: 0,
            var: None,
        };
        if p.chars.is_empty() {
            return Err(Error::Parse("empty potential expression".into()));
        }
        let mut coeffs = p.expr()?;
        if p.pos != p.chars.len() {
            return Err(Error::Parse(format!(
                "unexpected `{}` at position {} in `{src}`",
                p.chars[p.pos], p.pos
            )));
        }
        while coeffs.len() > 1 && *coeffs.last().unwrap() == 0.0 {
            coeffs.pop();
        }
        Ok(Self {
            source: src.trim().to_string(),
            coeffs,
        })
    }

    pub fn from_coeffs(coeffs: Vec<f64>) -> Self {
        let source = coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != 0.0)
            .map(|(i, c)| match i {
                0 => format!("{c}"),
                1 => format!("{c}*x"),
                _ => format!("{c}*x^{i}"),
            })
            .collect::<Vec<_>>()
            .join(" + ");
        Self {
            source: if source.is_empty() { "0".into() } else { source },
            coeffs,
        }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    pub fn derivative(&self) -> Polynomial {
        let coeffs: Vec<f64> = if self.coeffs.len() <= 1 {
            vec![0.0]
        } else {
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| i as f64 * c)
                .collect()
        };
        Polynomial::from_coeffs(coeffs)
    }
}

struct Parser {
    chars: Vec<char>,
    pos: usize,
    var: Option<char>,
}

fn poly_add(a: &[f64], b: &[f64], sign: f64) -> Vec<f64> {
    let n = a.len().max(b.len());
    (0..n)
        .map(|i| a.get(i).copied().unwrap_or(0.0) + sign * b.get(i).copied().unwrap_or(0.0))
        .collect()
}

fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

impl Parser {
    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<Vec<f64>> {
        let mut acc = self.term()?;
        while let Some(c) = self.peek() {
            let sign = match c {
                '+' => 1.0,
                '-' => -1.0,
                _ => break,
            };
            self.pos += 1;
            let rhs = self.term()?;
            acc = poly_add(&acc, &rhs, sign);
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<Vec<f64>> {
        let mut acc = self.factor()?;
        loop {
            match self.peek() {
                Some('*') => {
                    self.pos += 1;
                    let rhs = self.factor()?;
                    acc = poly_mul(&acc, &rhs);
                }
                // implicit multiplication: `2x`, `3(x+1)`, `x(x-1)`
                Some(c) if c.is_ascii_alphabetic() || c == '(' => {
                    let rhs = self.factor()?;
                    acc = poly_mul(&acc, &rhs);
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<Vec<f64>> {
        match self.peek() {
            Some('-') => {
                self.pos += 1;
                Ok(self.factor()?.iter().map(|c| -c).collect())
            }
            Some('+') => {
                self.pos += 1;
                self.factor()
            }
            _ => {
                let base = self.primary()?;
                if self.peek() == Some('^') {
                    self.pos += 1;
                    let start = self.pos;
                    while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                        self.pos += 1;
                    }
                    let digits: String = self.chars[start..self.pos].iter().collect();
                    let e: u32 = digits.parse().map_err(|_| {
                        Error::Parse(format!("expected integer exponent at position {start}"))
                    })?;
                    if e > 64 {
                        return Err(Error::Parse(format!("exponent {e} too large")));
                    }
                    let mut out = vec![1.0];
                    for _ in 0..e {
                        out = poly_mul(&out, &base);
                    }
                    Ok(out)
                } else {
                    Ok(base)
                }
            }
        }
    }

    fn primary(&mut self) -> Result<Vec<f64>> {
        match self.peek() {
            Some('(') => {
                self.pos += 1;
                let inner = self.expr()?;
                if self.peek() != Some(')') {
                    return Err(Error::Parse(format!("missing `)` at position {}", self.pos)));
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == '.' => {
                let start = self.pos;
                while self.peek().is_some_and(|c| c.is_ascii_digit() || c == '.') {
                    self.pos += 1;
                }
                let text: String = self.chars[start..self.pos].iter().collect();
                let v: f64 = text
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad number `{text}`")))?;
                Ok(vec![v])
            }
            Some(c) if c.is_ascii_alphabetic() => {
                match self.var {
                    None => self.var = Some(c),
                    Some(v) if v != c => {
                        return Err(Error::Parse(format!(
                            "more than one variable (`{v}` and `{c}`)"
                        )))
                    }
                    _ => {}
                }
                self.pos += 1;
                Ok(vec![0.0, 1.0])
            }
            Some(c) => Err(Error::Parse(format!("unexpected `{c}` at position {}", self.pos))),
            None => Err(Error::Parse("unexpected end of expression".into())),
        }
    }
}

/// `H = c p² + V(q)` on a bounded configuration interval.
#[derive(Debug, Clone)]
pub struct Potential1D {
    pub potential: Polynomial,
    pub kinetic: f64,
    pub interval: (f64, f64),
    pub convention: Convention,
    derivative: Polynomial,
}

impl Potential1D {
    pub const KIND: &'static str = "potential-1d";

    pub fn new(potential: Polynomial, kinetic: f64, interval: (f64, f64)) -> Result<Self> {
        require_positive(Self::KIND, "c", kinetic)?;
        let (lo, hi) = interval;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::Parameter(format!(
                "potential-1d: interval [{lo}, {hi}] must be finite and non-empty"
            )));
        }
        if potential.coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::Parameter("potential-1d: non-finite coefficient".into()));
        }
        let derivative = potential.derivative();
        Ok(Self {
            potential,
            kinetic,
            interval,
            convention: Convention::Canonical,
            derivative,
        })
    }

    pub fn parse(expr: &str, kinetic: f64, interval: (f64, f64)) -> Result<Self> {
        Self::new(Polynomial::parse(expr)?, kinetic, interval)
    }

    pub(crate) fn from_spec(spec: &SystemSpec) -> Result<Arc<dyn Hamiltonian>> {
        Ok(Arc::new(Self::from_system_spec(spec)?))
    }

    pub fn from_system_spec(spec: &SystemSpec) -> Result<Self> {
        let p = Params::new(spec);
        let interval = match p.opt_vec("interval")? {
            Some(v) if v.len() == 2 => (v[0], v[1]),
            Some(_) => {
                return Err(Error::Parameter("potential-1d: interval needs two numbers".into()))
            }
            None => (-10.0, 10.0),
        };
        let mut s = Self::parse(p.str_req("V")?, p.f64_or("c", 1.0)?, interval)?;
        s.convention = spec.convention.unwrap_or(Convention::Canonical);
        Ok(s)
    }

    pub fn v(&self, q: f64) -> f64 {
        self.potential.eval(q)
    }

    pub fn dv(&self, q: f64) -> f64 {
        self.derivative.eval(q)
    }
}

impl Hamiltonian for Potential1D {
    fn kind(&self) -> &'static str {
        Self::KIND
    }

    fn dof(&self) -> usize {
        1
    }

    fn convention(&self) -> Convention {
        self.convention
    }

    fn energy(&self, pt: &PhasePoint) -> Result<f64> {
        check_dims(Self::KIND, 1, pt)?;
        Ok(self.kinetic * pt.p[0] * pt.p[0] + self.v(pt.q[0]))
    }

    fn gradient(&self, pt: &PhasePoint) -> Result<(Vec<f64>, Vec<f64>)> {
        check_dims(Self::KIND, 1, pt)?;
        Ok((vec![self.dv(pt.q[0])], vec![2.0 * self.kinetic * pt.p[0]]))
    }

    fn is_separable(&self) -> bool {
        true
    }

    fn domain_exit(&self, pt: &PhasePoint) -> Option<String> {
        let q = pt.q[0];
        (!(self.interval.0..=self.interval.1).contains(&q))
            .then(|| format!("q = {q} left the configured interval"))
    }

    fn reference_period(&self, pt: &PhasePoint) -> Option<f64> {
        let e = self.energy(pt).ok()?;
        crate::period::period_oracle_1d(self, e).ok()
    }

    fn sample_point(&self, energy: f64, rng: &mut dyn RngCore) -> Result<Option<PhasePoint>> {
        let min = crate::period::quadrature::potential_minimum(self).1;
        if energy <= min {
            return Err(Error::DegenerateSurface {
                energy,
                reason: format!("E is not above min V = {min}"),
            });
        }
        ray_sample(self, energy, &[self.interval], |q| self.v(q[0]), rng)
    }

    fn spec(&self) -> SystemSpec {
        SystemSpec::new(
            Self::KIND,
            json!({
                "V": self.potential.source,
                "c": self.kinetic,
                "interval": [self.interval.0, self.interval.1],
            }),
        )
        .with_convention(self.convention)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_catalog_potentials() {
        assert_eq!(Polynomial::parse("x^2").unwrap().coeffs, vec![0.0, 0.0, 1.0]);
        assert_eq!(Polynomial::parse("0.5*x^2").unwrap().coeffs, vec![0.0, 0.0, 0.5]);
        assert_eq!(Polynomial::parse("x^4").unwrap().coeffs, vec![0.0, 0.0, 0.0, 0.0, 1.0]);
        assert_eq!(Polynomial::parse("2y^2").unwrap().coeffs, vec![0.0, 0.0, 2.0]);
        assert_eq!(
            Polynomial::parse("x^4 - 2*x^2 + 1").unwrap().coeffs,
            vec![1.0, 0.0, -2.0, 0.0, 1.0]
        );
        assert_eq!(Polynomial::parse("(x-1)^2").unwrap().coeffs, vec![1.0, -2.0, 1.0]);
        assert_eq!(Polynomial::parse("-x^2").unwrap().coeffs, vec![0.0, 0.0, -1.0]);
    }

    #[test]
    fn rejects_malformed_expressions() {
        for bad in ["", "x^", "x + * 2", "x*y", "sin(x)", "x^-2", "(x+1", "1..2"] {
            assert!(Polynomial::parse(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn derivative_and_eval() {
        let p = Polynomial::parse("x^4 - 2*x^2").unwrap();
        assert_eq!(p.eval(2.0), 8.0);
        assert_eq!(p.derivative().eval(2.0), 32.0 - 8.0);
    }

    #[test]
    fn energy_and_gradient() {
        let s = Potential1D::parse("x^2", 1.0, (-5.0, 5.0)).unwrap();
        let pt = PhasePoint::new(vec![2.0], vec![3.0]).unwrap();
        assert_eq!(s.energy(&pt).unwrap(), 13.0);
        assert_eq!(s.gradient(&pt).unwrap(), (vec![4.0], vec![6.0]));
    }

    #[test]
    fn invalid_configuration() {
        assert!(Potential1D::parse("x^2", 0.0, (-1.0, 1.0)).is_err());
        assert!(Potential1D::parse("x^2", 1.0, (1.0, -1.0)).is_err());
        assert!(Potential1D::parse("x^2", 1.0, (f64::NEG_INFINITY, 1.0)).is_err());
    }
}
