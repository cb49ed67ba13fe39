//! Polynomials in `x`, `p` with `[x, p] = i`, kept in normal order
//! `Σ c_{jk} x^j p^k`. Products are reduced with
//! `p^b x^c = Σ_k (−i)^k k! C(b,k) C(c,k) x^{c−k} p^{b−k}`.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use super::OscillatorBasis;
use crate::linalg::{identity, ComplexMatrix};

const ZERO_COEFF: f64 = 1e-12;

#[derive(Debug, Clone, Default)]
pub struct Poly {
    terms: BTreeMap<(u32, u32), Complex64>,
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, j| acc * f64::from(n - j) / f64::from(j + 1))
}

fn factorial(k: u32) -> f64 {
    (1..=k).map(f64::from).product()
}

fn minus_i_pow(k: u32) -> Complex64 {
    match k % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, -1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, 1.0),
    }
}

impl Poly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn monomial(coeff: Complex64, xpow: u32, ppow: u32) -> Self {
        let mut out = Self::zero();
        out.add_term((xpow, ppow), coeff);
        out
    }

    pub fn constant(c: Complex64) -> Self {
        Self::monomial(c, 0, 0)
    }

    pub fn x() -> Self {
        Self::monomial(Complex64::new(1.0, 0.0), 1, 0)
    }

    pub fn p() -> Self {
        Self::monomial(Complex64::new(1.0, 0.0), 0, 1)
    }

    fn add_term(&mut self, key: (u32, u32), c: Complex64) {
        let entry = self.terms.entry(key).or_insert(Complex64::new(0.0, 0.0));
        *entry += c;
        if entry.norm() <= ZERO_COEFF {
            self.terms.remove(&key);
        }
    }

    pub fn pow(&self, k: u32) -> Self {
        (0..k).fold(Self::constant(Complex64::new(1.0, 0.0)), |acc, _| &acc * self)
    }

    pub fn scale(&self, c: Complex64) -> Self {
        let mut out = Self::zero();
        for (&key, &v) in &self.terms {
            out.add_term(key, v * c);
        }
        out
    }

    /// `(x^j p^k)† = p^k x^j`, re-normal-ordered.
    pub fn adjoint(&self) -> Self {
        let mut out = Self::zero();
        for (&(j, k), &c) in &self.terms {
            out = &out + &reorder(k, j).scale(c.conj());
        }
        out
    }

    pub fn commutator(&self, other: &Self) -> Self {
        &(self * other) - &(other * self)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|(j, k)| j + k).max().unwrap_or(0)
    }

    pub fn terms(&self) -> impl Iterator<Item = ((u32, u32), Complex64)> + '_ {
        self.terms.iter().map(|(&k, &v)| (k, v))
    }

    /// Evaluates the normal-ordered form with truncated oscillator matrices.
    pub fn to_matrix(&self, basis: &OscillatorBasis) -> ComplexMatrix {
        let n = basis.x.nrows();
        let mut out = ComplexMatrix::zeros(n, n);
        for (&(j, k), &c) in &self.terms {
            let xj = (0..j).fold(identity(n), |acc, _| acc * &basis.x);
            let pk = (0..k).fold(identity(n), |acc, _| acc * &basis.p);
            out += xj * pk * c;
        }
        out
    }
}

/// Normal form of `p^b x^c`.
fn reorder(b: u32, c: u32) -> Poly {
    let mut out = Poly::zero();
    for k in 0..=b.min(c) {
        let coeff = minus_i_pow(k) * (factorial(k) * binomial(b, k) * binomial(c, k));
        out.add_term((c - k, b - k), coeff);
    }
    out
}

/// Equality up to coefficients below the zero threshold.
impl PartialEq for Poly {
    fn eq(&self, other: &Self) -> bool {
        (self - other).is_zero()
    }
}

impl<'a> Add<&'a Poly> for &'a Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        let mut out = self.clone();
        for (&key, &v) in &rhs.terms {
            out.add_term(key, v);
        }
        out
    }
}

impl<'a> Sub<&'a Poly> for &'a Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        self + &(-rhs)
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        self.scale(Complex64::new(-1.0, 0.0))
    }
}

impl<'a> Mul<&'a Poly> for &'a Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (&(j1, k1), &c1) in &self.terms {
            for (&(j2, k2), &c2) in &rhs.terms {
                for ((j, k), c) in reorder(k1, j2).terms() {
                    out.add_term((j1 + j, k + k2), c1 * c2 * c);
                }
            }
        }
        out
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut keys: Vec<_> = self.terms.keys().copied().collect();
        keys.sort_by_key(|k| std::cmp::Reverse((k.0 + k.1, k.0)));
        for (idx, key) in keys.iter().enumerate() {
            let c = self.terms[key];
            let coeff = if c.im.abs() <= ZERO_COEFF {
                format!("{}", c.re)
            } else if c.re.abs() <= ZERO_COEFF {
                format!("{}i", c.im)
            } else {
                format!("({}{:+}i)", c.re, c.im)
            };
            let mut word = String::new();
            for (sym, pow) in [("x", key.0), ("p", key.1)] {
                match pow {
                    0 => {}
                    1 => word.push_str(sym),
                    _ => word.push_str(&format!("{sym}^{pow}")),
                }
            }
            if idx > 0 {
                write!(f, " + ")?;
            }
            if word.is_empty() {
                write!(f, "{coeff}")?;
            } else {
                write!(f, "{coeff} {word}")?;
            }
        }
        Ok(())
    }
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Sum of `coeff · word` where each word is a product of `x`/`p` factors in
/// the written order.
fn words(items: &[(Complex64, &str)]) -> Poly {
    let mut out = Poly::zero();
    for &(coeff, word) in items {
        let term = word.chars().fold(Poly::constant(c(1.0, 0.0)), |acc, ch| match ch {
            'x' => &acc * &Poly::x(),
            'p' => &acc * &Poly::p(),
            _ => unreachable!("words use only x and p"),
        });
        out = &out + &term.scale(coeff);
    }
    out
}

pub fn h0() -> Poly {
    words(&[(c(1.0, 0.0), "pp"), (c(1.0, 0.0), "xx")])
}

pub fn h1() -> Poly {
    words(&[
        (c(2.0, 0.0), "xxxx"),
        (c(-1.0, 0.0), "xx"),
        (c(3.0, 0.0), "pp"),
        (c(-3.0, 0.0), ""),
        (c(0.0, 2.0), "xxxp"),
        (c(0.0, 2.0), "xppp"),
        (c(2.0, 0.0), "xxpp"),
        (c(0.0, -8.0), "xp"),
    ])
}

pub fn x1() -> Poly {
    words(&[
        (c(1.0, 0.0), "xxx"),
        (c(-1.0, 0.0), "xpp"),
        (c(0.0, 1.0), "xx"),
        (c(0.0, 1.0), "xxp"),
        (c(-1.0, 0.0), "x"),
        (c(0.0, 1.0), "ppp"),
        (c(1.0, 0.0), "pxp"),
        (c(1.0, 0.0), "ppx"),
    ])
    .scale(c(0.125, 0.0))
}

pub fn f() -> Poly {
    let quartic = words(&[(c(1.0, 0.0), "xxpp"), (c(1.0, 0.0), "pppp"), (c(1.0, 0.0), "ppxx")]);
    let mixed = words(&[(c(1.0, 0.0), "xppp"), (c(-1.0, 0.0), "pppx")]);
    (&quartic.scale(c(0.25, 0.0)) + &mixed.scale(c(0.0, 1.0 / 3.0))).scale(c(0.25, 0.0))
}

pub fn g() -> Poly {
    f().scale(c(0.5, 0.0))
}

/// The displayed expression for `(X_q† − X_q)/(ε/8)`.
pub fn displayed_xq_defect() -> Poly {
    words(&[
        (c(2.0, 0.0), "xpp"),
        (c(0.0, -1.0), "xxp"),
        (c(0.0, -2.0), "ppp"),
        (c(-2.0, 0.0), "ppx"),
        (c(0.0, -1.0), "pxx"),
    ])
}

/// First-order X condition `[f, x] + X₁ − X₁†`; zero iff `Θ₀ = 1 + εf`
/// Hermitizes `X_q` to first order.
pub fn x_condition() -> Poly {
    let x1 = x1();
    &f().commutator(&Poly::x()) + &(&x1 - &x1.adjoint())
}

/// Limit of `Δ/ε`: `(H₁ − H₁†)/8 + 2[g, H₀]`.
pub fn hermitization_first_order() -> Poly {
    let h1 = h1();
    &(&h1 - &h1.adjoint()).scale(c(0.125, 0.0)) + &g().commutator(&h0()).scale(c(2.0, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_commutator() {
        let comm = Poly::x().commutator(&Poly::p());
        assert_eq!(comm, Poly::constant(c(0.0, 1.0)));
        assert_eq!(reorder(1, 2), &Poly::monomial(c(1.0, 0.0), 2, 1) - &Poly::monomial(c(0.0, 2.0), 1, 0));
    }

    #[test]
    fn hermitian_pieces() {
        assert!((&f() - &f().adjoint()).is_zero());
        assert!((&h0() - &h0().adjoint()).is_zero());
        assert!(!(&h1() - &h1().adjoint()).is_zero());
    }

    #[test]
    fn x1_antihermitian_part() {
        let x1 = x1();
        let expected = words(&[
            (c(2.0, 0.0), "xx"),
            (c(1.0, 0.0), "xxp"),
            (c(1.0, 0.0), "pxx"),
            (c(2.0, 0.0), "ppp"),
            (c(-4.0, 0.0), "p"),
        ])
        .scale(c(0.0, 0.125));
        assert_eq!(&x1 - &x1.adjoint(), expected);
    }

    #[test]
    fn x_condition_leaves_an_x_squared() {
        assert_eq!(x_condition(), Poly::monomial(c(0.0, 0.25), 2, 0));
    }

    #[test]
    fn displayed_defect_misses_x_squared() {
        let x1 = x1();
        let direct = (&x1.adjoint() - &x1).scale(c(8.0, 0.0));
        let missing = &direct - &displayed_xq_defect();
        assert_eq!(missing, Poly::monomial(c(0.0, -2.0), 2, 0));
        assert_eq!(missing.to_string(), "-2i x^2");
    }

    #[test]
    fn hermitization_limit_is_nonzero() {
        assert!(!hermitization_first_order().is_zero());
    }
}
