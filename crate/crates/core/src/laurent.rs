//! Integer Laurent polynomials in N.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Serialize, Serializer};

/// Finite sum of c_k N^k with exact integer coefficients and k of either sign.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct LaurentPolynomial {
    coeffs: BTreeMap<i32, i128>,
}

impl LaurentPolynomial {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::monomial(0, 1)
    }

    pub fn monomial(exponent: i32, coefficient: i128) -> Self {
        let mut p = Self::zero();
        p.add_term(exponent, coefficient);
        p
    }

    /// Builds from (exponent, coefficient) pairs, merging repeated exponents.
    pub fn from_terms<I: IntoIterator<Item = (i32, i128)>>(terms: I) -> Self {
        let mut p = Self::zero();
        for (e, c) in terms {
            p.add_term(e, c);
        }
        p
    }

    pub fn add_term(&mut self, exponent: i32, coefficient: i128) {
        if coefficient == 0 {
            return;
        }
        let slot = self.coeffs.entry(exponent).or_insert(0);
        *slot = slot.checked_add(coefficient).expect("Laurent coefficient overflow");
        if *slot == 0 {
            self.coeffs.remove(&exponent);
        }
    }

    pub fn coefficient(&self, exponent: i32) -> i128 {
        self.coeffs.get(&exponent).copied().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Nonzero terms in ascending exponent order.
    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (i32, i128)> + '_ {
        self.coeffs.iter().map(|(&e, &c)| (e, c))
    }

    pub fn max_exponent(&self) -> Option<i32> {
        self.coeffs.keys().next_back().copied()
    }

    pub fn min_exponent(&self) -> Option<i32> {
        self.coeffs.keys().next().copied()
    }

    /// Value at N = 1, i.e. the sum of all coefficients.
    pub fn at_one(&self) -> i128 {
        self.coeffs.values().sum()
    }

    pub fn eval(&self, n: f64) -> f64 {
        self.terms().map(|(e, c)| c as f64 * n.powi(e)).sum()
    }

    pub fn scale(&self, k: i128) -> Self {
        Self::from_terms(
            self.terms()
                .map(|(e, c)| (e, c.checked_mul(k).expect("Laurent coefficient overflow"))),
        )
    }

    /// Multiplies by N^shift.
    pub fn shift(&self, shift: i32) -> Self {
        Self::from_terms(self.terms().map(|(e, c)| (e + shift, c)))
    }
}

impl Add for &LaurentPolynomial {
    type Output = LaurentPolynomial;
    fn add(self, rhs: &LaurentPolynomial) -> LaurentPolynomial {
        let mut out = self.clone();
        for (e, c) in rhs.terms() {
            out.add_term(e, c);
        }
        out
    }
}

impl Sub for &LaurentPolynomial {
    type Output = LaurentPolynomial;
    fn sub(self, rhs: &LaurentPolynomial) -> LaurentPolynomial {
        self + &(-rhs)
    }
}

impl Neg for &LaurentPolynomial {
    type Output = LaurentPolynomial;
    fn neg(self) -> LaurentPolynomial {
        self.scale(-1)
    }
}

impl Mul for &LaurentPolynomial {
    type Output = LaurentPolynomial;
    fn mul(self, rhs: &LaurentPolynomial) -> LaurentPolynomial {
        let mut out = LaurentPolynomial::zero();
        for (ea, ca) in self.terms() {
            for (eb, cb) in rhs.terms() {
                out.add_term(ea + eb, ca.checked_mul(cb).expect("Laurent coefficient overflow"));
            }
        }
        out
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for LaurentPolynomial {
            type Output = LaurentPolynomial;
            fn $m(self, rhs: LaurentPolynomial) -> LaurentPolynomial {
                (&self).$m(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl fmt::Display for LaurentPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        for (i, (e, c)) in self.terms().rev().enumerate() {
            let mag = c.unsigned_abs();
            if i == 0 {
                if c < 0 {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if c < 0 { '-' } else { '+' })?;
            }
            match (mag, e) {
                (_, 0) => write!(f, "{mag}")?,
                (1, 1) => write!(f, "N")?,
                (1, _) => write!(f, "N^{e}")?,
                (_, 1) => write!(f, "{mag}N")?,
                _ => write!(f, "{mag}N^{e}")?,
            }
        }
        Ok(())
    }
}

/// Serializes as {"exponent": coefficient} with string keys.
impl Serialize for LaurentPolynomial {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut map = s.serialize_map(Some(self.coeffs.len()))?;
        for (e, c) in self.terms().rev() {
            map.serialize_entry(&e.to_string(), &c)?;
        }
        map.end()
    }
}
