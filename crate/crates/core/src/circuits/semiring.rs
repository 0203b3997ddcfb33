//! Commutative semirings used to specialize `N[X]` provenance.

use std::collections::BTreeSet;
use std::fmt::Debug;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};

use super::Polynomial;

pub trait Semiring: Clone + PartialEq + Debug {
    fn zero() -> Self;
    fn one() -> Self;
    fn add(&self, other: &Self) -> Self;
    fn mul(&self, other: &Self) -> Self;

    /// The image of a natural number: `1 + 1 + ... + 1`.
    fn from_natural(n: &BigUint) -> Self {
        if n.is_zero() {
            return Self::zero();
        }
        // Double-and-add keeps this logarithmic in `n`.
        let mut acc = Self::zero();
        for i in (0..n.bits()).rev() {
            acc = acc.add(&acc);
            if n.bit(i) {
                acc = acc.add(&Self::one());
            }
        }
        acc
    }
}

/// The Boolean semiring (∨, ∧).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Boolean(pub bool);

impl Semiring for Boolean {
    fn zero() -> Self {
        Boolean(false)
    }
    fn one() -> Self {
        Boolean(true)
    }
    fn add(&self, o: &Self) -> Self {
        Boolean(self.0 || o.0)
    }
    fn mul(&self, o: &Self) -> Self {
        Boolean(self.0 && o.0)
    }
}

/// Natural numbers: counts matches under bag semantics.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Natural(pub BigUint);

impl Semiring for Natural {
    fn zero() -> Self {
        Natural(BigUint::zero())
    }
    fn one() -> Self {
        Natural(BigUint::one())
    }
    fn add(&self, o: &Self) -> Self {
        Natural(&self.0 + &o.0)
    }
    fn mul(&self, o: &Self) -> Self {
        Natural(&self.0 * &o.0)
    }
    fn from_natural(n: &BigUint) -> Self {
        Natural(n.clone())
    }
}

/// Min-plus over the integers extended with +∞ (`None`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Tropical(pub Option<BigInt>);

impl Semiring for Tropical {
    fn zero() -> Self {
        Tropical(None)
    }
    fn one() -> Self {
        Tropical(Some(BigInt::zero()))
    }
    fn add(&self, o: &Self) -> Self {
        match (&self.0, &o.0) {
            (None, x) | (x, None) => Tropical(x.clone()),
            (Some(a), Some(b)) => Tropical(Some(a.min(b).clone())),
        }
    }
    fn mul(&self, o: &Self) -> Self {
        match (&self.0, &o.0) {
            (Some(a), Some(b)) => Tropical(Some(a + b)),
            _ => Tropical(None),
        }
    }
    fn from_natural(n: &BigUint) -> Self {
        if n.is_zero() {
            Self::zero()
        } else {
            Self::one()
        }
    }
}

/// Clearance levels: 0 is public, larger is more restricted, and
/// [`Security::NEVER`] means inaccessible. Alternatives take the least
/// restrictive level, joint use the most restrictive one.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Security(pub u8);

impl Security {
    pub const PUBLIC: Security = Security(0);
    pub const CONFIDENTIAL: Security = Security(1);
    pub const SECRET: Security = Security(2);
    pub const TOP_SECRET: Security = Security(3);
    pub const NEVER: Security = Security(u8::MAX);

    pub fn parse(text: &str) -> Option<Security> {
        match text.trim().to_ascii_lowercase().as_str() {
            "p" | "public" => Some(Self::PUBLIC),
            "c" | "confidential" => Some(Self::CONFIDENTIAL),
            "s" | "secret" => Some(Self::SECRET),
            "t" | "ts" | "topsecret" | "top_secret" => Some(Self::TOP_SECRET),
            "0" | "never" => Some(Self::NEVER),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match *self {
            Self::PUBLIC => "public",
            Self::CONFIDENTIAL => "confidential",
            Self::SECRET => "secret",
            Self::TOP_SECRET => "topsecret",
            Self::NEVER => "never",
            _ => "level",
        }
    }
}

impl Semiring for Security {
    fn zero() -> Self {
        Self::NEVER
    }
    fn one() -> Self {
        Self::PUBLIC
    }
    fn add(&self, o: &Self) -> Self {
        *self.min(o)
    }
    fn mul(&self, o: &Self) -> Self {
        *self.max(o)
    }
}

/// Fuzzy semiring over rationals in [0, 1] with (max, min).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Fuzzy(pub BigRational);

impl Semiring for Fuzzy {
    fn zero() -> Self {
        Fuzzy(BigRational::zero())
    }
    fn one() -> Self {
        Fuzzy(BigRational::one())
    }
    fn add(&self, o: &Self) -> Self {
        Fuzzy(self.0.clone().max(o.0.clone()))
    }
    fn mul(&self, o: &Self) -> Self {
        Fuzzy(self.0.clone().min(o.0.clone()))
    }
}

/// Monotone Boolean functions, kept as an antichain of minimal monomials
/// (sets of variables).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PosBool(BTreeSet<BTreeSet<String>>);

impl PosBool {
    pub fn var(name: &str) -> Self {
        PosBool(BTreeSet::from([BTreeSet::from([name.to_string()])]))
    }

    pub fn monomials(&self) -> &BTreeSet<BTreeSet<String>> {
        &self.0
    }

    pub fn eval(&self, nu: impl Fn(&str) -> bool) -> bool {
        self.0.iter().any(|m| m.iter().all(|v| nu(v)))
    }

    fn minimize(sets: BTreeSet<BTreeSet<String>>) -> Self {
        let mut keep = BTreeSet::new();
        for s in &sets {
            if !sets.iter().any(|t| t != s && t.is_subset(s)) {
                keep.insert(s.clone());
            }
        }
        PosBool(keep)
    }
}

impl Semiring for PosBool {
    fn zero() -> Self {
        PosBool(BTreeSet::new())
    }
    fn one() -> Self {
        PosBool(BTreeSet::from([BTreeSet::new()]))
    }
    fn add(&self, o: &Self) -> Self {
        Self::minimize(self.0.union(&o.0).cloned().collect())
    }
    fn mul(&self, o: &Self) -> Self {
        let mut out = BTreeSet::new();
        for a in &self.0 {
            for b in &o.0 {
                out.insert(a.union(b).cloned().collect());
            }
        }
        Self::minimize(out)
    }
    fn from_natural(n: &BigUint) -> Self {
        if n.is_zero() {
            Self::zero()
        } else {
            Self::one()
        }
    }
}

impl std::fmt::Display for PosBool {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.0.is_empty() {
            return write!(f, "false");
        }
        let terms: Vec<String> = self
            .0
            .iter()
            .map(|m| if m.is_empty() { "true".to_string() } else { m.iter().cloned().collect::<Vec<_>>().join(" & ") })
            .collect();
        write!(f, "{}", terms.join(" | "))
    }
}

impl Semiring for Polynomial {
    fn zero() -> Self {
        Polynomial::zero()
    }
    fn one() -> Self {
        Polynomial::one()
    }
    fn add(&self, o: &Self) -> Self {
        Polynomial::add(self, o)
    }
    fn mul(&self, o: &Self) -> Self {
        Polynomial::mul(self, o)
    }
    fn from_natural(n: &BigUint) -> Self {
        Polynomial::constant(n.clone())
    }
}
