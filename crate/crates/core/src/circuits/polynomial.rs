//! Canonical `N[X]` polynomials.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigUint;
use num_traits::{One, Zero};

/// A monomial: variables with positive exponents, sorted by name.
pub type Monomial = BTreeMap<String, u32>;

/// A polynomial with positive integer coefficients. Zero coefficients are
/// never stored, so structural equality is polynomial equality.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Polynomial {
    terms: BTreeMap<Monomial, BigUint>,
}

impl Polynomial {
    pub fn zero() -> Self {
        Polynomial::default()
    }

    pub fn one() -> Self {
        Self::constant(BigUint::one())
    }

    pub fn constant(c: BigUint) -> Self {
        let mut p = Polynomial::zero();
        if !c.is_zero() {
            p.terms.insert(Monomial::new(), c);
        }
        p
    }

    pub fn var(name: &str) -> Self {
        let mut p = Polynomial::zero();
        p.terms.insert(Monomial::from([(name.to_string(), 1)]), BigUint::one());
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Number of monomials with a nonzero coefficient.
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &BigUint)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, m: &Monomial) -> BigUint {
        self.terms.get(m).cloned().unwrap_or_default()
    }

    pub fn add_term(&mut self, m: Monomial, c: BigUint) {
        if c.is_zero() {
            return;
        }
        *self.terms.entry(m).or_insert_with(BigUint::zero) += c;
    }

    pub fn add(&self, other: &Polynomial) -> Polynomial {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn mul(&self, other: &Polynomial) -> Polynomial {
        let mut out = Polynomial::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                let mut m = m1.clone();
                for (v, e) in m2 {
                    *m.entry(v.clone()).or_insert(0) += e;
                }
                out.add_term(m, c1 * c2);
            }
        }
        out
    }

    /// Evaluates the polynomial in a semiring through the unique
    /// homomorphism extending `value`.
    pub fn eval<K: super::Semiring>(&self, value: impl Fn(&str) -> K) -> K {
        let mut total = K::zero();
        for (m, c) in &self.terms {
            let mut term = K::from_natural(c);
            for (v, &e) in m {
                let x = value(v);
                for _ in 0..e {
                    term = term.mul(&x);
                }
            }
            total = total.add(&term);
        }
        total
    }
}

impl fmt::Display for Polynomial {
    /// Prints monomials in canonical order, e.g. `F1^2 + 2*F2*F3`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (m, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            let mut factors: Vec<String> = Vec::new();
            if !c.is_one() || m.is_empty() {
                factors.push(c.to_string());
            }
            for (v, &e) in m {
                factors.push(if e == 1 { v.clone() } else { format!("{v}^{e}") });
            }
            write!(f, "{}", factors.join("*"))?;
        }
        Ok(())
    }
}
