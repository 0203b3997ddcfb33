//! Semiring circuits built from ⊕ and ⊗ gates.

use serde::{Deserialize, Serialize};

use super::{GateId, Polynomial, Semiring};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SemiringGate {
    Input(String),
    /// Nullary sums are `0`.
    Plus(Vec<GateId>),
    /// Nullary products are `1`.
    Times(Vec<GateId>),
}

/// A circuit over an arbitrary commutative semiring. `semiring` is a tag
/// naming the semiring the circuit is meant for (e.g. `N[X]`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SemiringCircuit {
    pub semiring: String,
    pub gates: Vec<SemiringGate>,
    pub output: GateId,
}

impl SemiringCircuit {
    pub fn new(semiring: impl Into<String>) -> Self {
        SemiringCircuit { semiring: semiring.into(), gates: Vec::new(), output: 0 }
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    fn push(&mut self, g: SemiringGate) -> GateId {
        self.gates.push(g);
        self.gates.len() - 1
    }

    pub fn input(&mut self, name: impl Into<String>) -> GateId {
        self.push(SemiringGate::Input(name.into()))
    }

    pub fn plus(&mut self, inputs: Vec<GateId>) -> GateId {
        debug_assert!(inputs.iter().all(|&g| g < self.gates.len()));
        self.push(SemiringGate::Plus(inputs))
    }

    pub fn times(&mut self, inputs: Vec<GateId>) -> GateId {
        debug_assert!(inputs.iter().all(|&g| g < self.gates.len()));
        self.push(SemiringGate::Times(inputs))
    }

    /// Names of the input gates, in gate order, without duplicates.
    pub fn input_names(&self) -> Vec<String> {
        let mut seen = std::collections::BTreeSet::new();
        self.gates
            .iter()
            .filter_map(|g| match g {
                SemiringGate::Input(n) if seen.insert(n.clone()) => Some(n.clone()),
                _ => None,
            })
            .collect()
    }

    pub fn eval_all<K: Semiring>(&self, value: impl Fn(&str) -> K) -> Vec<K> {
        let mut vals: Vec<K> = Vec::with_capacity(self.len());
        for g in &self.gates {
            let v = match g {
                SemiringGate::Input(n) => value(n),
                SemiringGate::Plus(ins) => ins.iter().fold(K::zero(), |acc, &j| acc.add(&vals[j])),
                SemiringGate::Times(ins) => ins.iter().fold(K::one(), |acc, &j| acc.mul(&vals[j])),
            };
            vals.push(v);
        }
        vals
    }

    pub fn eval<K: Semiring>(&self, value: impl Fn(&str) -> K) -> K {
        if self.gates.is_empty() {
            return K::zero();
        }
        self.eval_all(value).swap_remove(self.output)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.gates.is_empty() && self.output >= self.len() {
            return Err(Error::input("output gate out of range"));
        }
        for (i, g) in self.gates.iter().enumerate() {
            if let SemiringGate::Plus(ins) | SemiringGate::Times(ins) = g {
                if ins.iter().any(|&j| j >= i) {
                    return Err(Error::input(format!("gate {i} has an input that is not earlier in the order")));
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> serde_json::Value {
        let gates = self
            .gates
            .iter()
            .map(|g| match g {
                SemiringGate::Input(n) => Entry { kind: "inp".into(), inputs: vec![], name: Some(n.clone()) },
                SemiringGate::Plus(ins) => Entry { kind: "plus".into(), inputs: ins.clone(), name: None },
                SemiringGate::Times(ins) => Entry { kind: "times".into(), inputs: ins.clone(), name: None },
            })
            .collect();
        serde_json::to_value(File { semiring: self.semiring.clone(), gates, output: self.output })
            .expect("circuit serializes")
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Self> {
        let file: File =
            serde_json::from_value(value.clone()).map_err(|e| Error::input(format!("circuit file: {e}")))?;
        let gates = file
            .gates
            .into_iter()
            .map(|e| match (e.kind.as_str(), e.name) {
                ("inp", Some(n)) => Ok(SemiringGate::Input(n)),
                ("plus", _) => Ok(SemiringGate::Plus(e.inputs)),
                ("times", _) => Ok(SemiringGate::Times(e.inputs)),
                (k, _) => Err(Error::input(format!("unknown gate type {k:?}"))),
            })
            .collect::<Result<_>>()?;
        let c = SemiringCircuit { semiring: file.semiring, gates, output: file.output };
        c.validate()?;
        Ok(c)
    }
}

#[derive(Serialize, Deserialize)]
struct File {
    semiring: String,
    gates: Vec<Entry>,
    output: usize,
}

#[derive(Serialize, Deserialize)]
struct Entry {
    #[serde(rename = "type")]
    kind: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    inputs: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
}

/// Expands the `N[X]` element captured by the circuit, each input gate
/// standing for the variable it is named after. Fails with `SizeCap` once
/// an intermediate polynomial has more than `cap` monomials.
pub fn expand_polynomial(c: &SemiringCircuit, cap: usize) -> Result<Polynomial> {
    if c.gates.is_empty() {
        return Ok(Polynomial::zero());
    }
    let mut vals: Vec<Polynomial> = Vec::with_capacity(c.len());
    for g in &c.gates {
        let v = match g {
            SemiringGate::Input(n) => Polynomial::var(n),
            SemiringGate::Plus(ins) => ins.iter().fold(Polynomial::zero(), |acc, &j| acc.add(&vals[j])),
            SemiringGate::Times(ins) => ins.iter().fold(Polynomial::one(), |acc, &j| acc.mul(&vals[j])),
        };
        if v.len() > cap {
            return Err(Error::SizeCap(cap));
        }
        vals.push(v);
    }
    Ok(vals.swap_remove(c.output))
}
