//! Boolean and semiring circuits.
//!
//! Gates are stored in topological order: every wire goes from a smaller id
//! to a larger one. Nullary AND gates evaluate to 1 and nullary OR gates to
//! 0, which is how constants are represented.

mod arith;
mod polynomial;
mod semiring;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::relational::{check_hypergraph, Instance, Signature, TreeDecomposition};

pub use arith::{expand_polynomial, SemiringCircuit, SemiringGate};
pub use polynomial::{Monomial, Polynomial};
pub use semiring::{Boolean, Fuzzy, Natural, PosBool, Security, Semiring, Tropical};

pub type GateId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GateKind {
    #[serde(rename = "inp")]
    Input,
    Not,
    And,
    Or,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Gate {
    pub kind: GateKind,
    pub inputs: Vec<GateId>,
    /// Only input gates carry names.
    pub name: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoolCircuit {
    pub gates: Vec<Gate>,
    pub output: GateId,
}

/// Incremental construction of a [`BoolCircuit`].
#[derive(Clone, Debug, Default)]
pub struct CircuitBuilder {
    gates: Vec<Gate>,
}

impl CircuitBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    fn push(&mut self, kind: GateKind, inputs: Vec<GateId>, name: Option<String>) -> GateId {
        debug_assert!(inputs.iter().all(|&g| g < self.gates.len()));
        self.gates.push(Gate { kind, inputs, name });
        self.gates.len() - 1
    }

    pub fn input(&mut self, name: impl Into<String>) -> GateId {
        self.push(GateKind::Input, Vec::new(), Some(name.into()))
    }

    pub fn not(&mut self, g: GateId) -> GateId {
        self.push(GateKind::Not, vec![g], None)
    }

    pub fn and(&mut self, inputs: Vec<GateId>) -> GateId {
        self.push(GateKind::And, inputs, None)
    }

    pub fn or(&mut self, inputs: Vec<GateId>) -> GateId {
        self.push(GateKind::Or, inputs, None)
    }

    pub fn constant(&mut self, value: bool) -> GateId {
        if value {
            self.and(Vec::new())
        } else {
            self.or(Vec::new())
        }
    }

    pub fn finish(self, output: GateId) -> BoolCircuit {
        assert!(output < self.gates.len(), "output gate out of range");
        BoolCircuit { gates: self.gates, output }
    }
}

impl BoolCircuit {
    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn inputs(&self) -> Vec<GateId> {
        (0..self.len()).filter(|&g| self.gates[g].kind == GateKind::Input).collect()
    }

    pub fn input_name(&self, g: GateId) -> &str {
        self.gates[g].name.as_deref().unwrap_or("")
    }

    pub fn input_by_name(&self, name: &str) -> Option<GateId> {
        self.inputs().into_iter().find(|&g| self.input_name(g) == name)
    }

    pub fn has_not_gates(&self) -> bool {
        self.gates.iter().any(|g| g.kind == GateKind::Not)
    }

    pub fn is_arity_two(&self) -> bool {
        self.gates.iter().all(|g| match g.kind {
            GateKind::And | GateKind::Or => g.inputs.is_empty() || g.inputs.len() == 2,
            GateKind::Not => g.inputs.len() == 1,
            GateKind::Input => g.inputs.is_empty(),
        })
    }

    /// Values of every gate; `nu` is queried on input gates only.
    pub fn eval_all(&self, nu: impl Fn(GateId) -> bool) -> Vec<bool> {
        let mut val = vec![false; self.len()];
        for (i, g) in self.gates.iter().enumerate() {
            val[i] = match g.kind {
                GateKind::Input => nu(i),
                GateKind::Not => !val[g.inputs[0]],
                GateKind::And => g.inputs.iter().all(|&j| val[j]),
                GateKind::Or => g.inputs.iter().any(|&j| val[j]),
            };
        }
        val
    }

    pub fn eval(&self, nu: impl Fn(GateId) -> bool) -> bool {
        self.eval_all(nu)[self.output]
    }

    /// Evaluates with input values given by name; missing names are an error.
    pub fn eval_named(&self, nu: &HashMap<String, bool>) -> Result<bool> {
        for g in self.inputs() {
            if !nu.contains_key(self.input_name(g)) {
                return Err(Error::PartialValuation(self.input_name(g).to_string()));
            }
        }
        Ok(self.eval(|g| nu[self.input_name(g)]))
    }

    /// Checks topological order and gate arities.
    pub fn validate(&self) -> Result<()> {
        if self.output >= self.len() {
            return Err(Error::input("output gate out of range"));
        }
        for (i, g) in self.gates.iter().enumerate() {
            if g.inputs.iter().any(|&j| j >= i) {
                return Err(Error::input(format!("gate {i} has an input that is not earlier in the order")));
            }
            let ok = match g.kind {
                GateKind::Input => g.inputs.is_empty() && g.name.is_some(),
                GateKind::Not => g.inputs.len() == 1,
                _ => true,
            };
            if !ok {
                return Err(Error::input(format!("gate {i} has the wrong number of inputs")));
            }
        }
        Ok(())
    }

    /// One hyperedge per gate: the gate together with its inputs.
    pub fn hyperedges(&self) -> Vec<Vec<GateId>> {
        self.gates
            .iter()
            .enumerate()
            .map(|(i, g)| {
                let mut e = vec![i];
                e.extend(&g.inputs);
                e
            })
            .collect()
    }

    pub fn check_decomposition(&self, t: &TreeDecomposition) -> bool {
        check_hypergraph(&self.hyperedges(), t) && t.bags.iter().all(|b| b.dom.iter().all(|&g| g < self.len()))
    }

    pub fn to_json(&self) -> serde_json::Value {
        let gates: Vec<GateEntry> = self
            .gates
            .iter()
            .map(|g| GateEntry { kind: g.kind, inputs: g.inputs.clone(), name: g.name.clone() })
            .collect();
        serde_json::to_value(CircuitFile { gates, output: self.output }).expect("circuit serializes")
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Self> {
        let file: CircuitFile =
            serde_json::from_value(value.clone()).map_err(|e| Error::input(format!("circuit file: {e}")))?;
        let c = BoolCircuit {
            gates: file.gates.into_iter().map(|g| Gate { kind: g.kind, inputs: g.inputs, name: g.name }).collect(),
            output: file.output,
        };
        c.validate()?;
        Ok(c)
    }
}

#[derive(Serialize, Deserialize)]
struct CircuitFile {
    gates: Vec<GateEntry>,
    output: usize,
}

#[derive(Serialize, Deserialize)]
struct GateEntry {
    #[serde(rename = "type")]
    kind: GateKind,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    inputs: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
}

/// Rewrites every AND/OR gate to fan-in 0 or 2: wider gates become chains,
/// fan-in 1 gates are replaced by their input. Returns the new circuit and
/// the image of every old gate.
pub fn arity_two(c: &BoolCircuit) -> (BoolCircuit, Vec<GateId>) {
    let mut b = CircuitBuilder::new();
    let mut image = Vec::with_capacity(c.len());
    for g in &c.gates {
        let ins: Vec<GateId> = g.inputs.iter().map(|&j| image[j]).collect();
        let new = match g.kind {
            GateKind::Input => b.input(g.name.clone().unwrap_or_default()),
            GateKind::Not => b.not(ins[0]),
            GateKind::And | GateKind::Or => match ins.len() {
                0 => b.push(g.kind, Vec::new(), None),
                1 => ins[0],
                _ => {
                    let mut acc = ins[0];
                    for &x in &ins[1..] {
                        acc = b.push(g.kind, vec![acc, x], None);
                    }
                    acc
                }
            },
        };
        image.push(new);
    }
    let out = image[c.output];
    (b.finish(out), image)
}

pub const REL_INPUT: &str = "Rinp";
pub const REL_FALSE: &str = "R0";
pub const REL_TRUE: &str = "R1";
pub const REL_NOT: &str = "Rnot";
pub const REL_AND: &str = "Rand";
pub const REL_OR: &str = "Ror";

pub fn circuit_signature() -> Signature {
    Signature::new()
        .with(REL_INPUT, 1)
        .with(REL_FALSE, 1)
        .with(REL_TRUE, 1)
        .with(REL_NOT, 2)
        .with(REL_AND, 3)
        .with(REL_OR, 3)
}

/// Encodes an arity-two circuit as one fact per gate; gate `g` becomes the
/// element `g{g}`.
pub fn circuit_relational_encoding(c: &BoolCircuit) -> Result<Instance> {
    if !c.is_arity_two() {
        return Err(Error::input("relational encodings need arity-two circuits"));
    }
    let mut i = Instance::new(circuit_signature());
    let name = |g: GateId| format!("g{g}");
    for (id, g) in c.gates.iter().enumerate() {
        let me = name(id);
        let args: Vec<String> = std::iter::once(me).chain(g.inputs.iter().map(|&j| name(j))).collect();
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        let rel = match (g.kind, g.inputs.len()) {
            (GateKind::Input, _) => REL_INPUT,
            (GateKind::Not, _) => REL_NOT,
            (GateKind::And, 0) => REL_TRUE,
            (GateKind::Or, 0) => REL_FALSE,
            (GateKind::And, _) => REL_AND,
            (GateKind::Or, _) => REL_OR,
        };
        i.add_fact(rel, &args, None)?;
    }
    Ok(i)
}

/// Stitches `c2` on top of `c`: every input gate of `c2` is identified with
/// the gate of `c` given by `binding`. Gates of `c` keep their ids; the other
/// gates of `c2` follow. Returns the stitched circuit, whose output is the
/// image of `c2`'s output, and the image of every gate of `c2`.
pub fn stitch(c: &BoolCircuit, c2: &BoolCircuit, binding: &HashMap<GateId, GateId>) -> Result<(BoolCircuit, Vec<GateId>)> {
    let inputs2 = c2.inputs();
    if binding.len() != inputs2.len() || inputs2.iter().any(|g| !binding.contains_key(g)) {
        return Err(Error::NotStitchable("the shared gates must be exactly the inputs of the second circuit".into()));
    }
    if binding.values().any(|&g| g >= c.len()) {
        return Err(Error::NotStitchable("binding refers to a missing gate".into()));
    }
    let mut gates = c.gates.clone();
    let mut image = Vec::with_capacity(c2.len());
    for (i, g) in c2.gates.iter().enumerate() {
        if g.kind == GateKind::Input {
            image.push(binding[&i]);
        } else {
            gates.push(Gate { kind: g.kind, inputs: g.inputs.iter().map(|&j| image[j]).collect(), name: None });
            image.push(gates.len() - 1);
        }
    }
    let output = image[c2.output];
    Ok((BoolCircuit { gates, output }, image))
}

/// Bag-wise union of two decompositions with the same skeleton, the second
/// one being translated through `image` (as returned by [`stitch`]). Fails
/// if an input gate of the second circuit occurs in a bag whose counterpart
/// in the first decomposition does not contain its image.
pub fn sum_decompositions(
    t: &TreeDecomposition,
    t2: &TreeDecomposition,
    c2: &BoolCircuit,
    image: &[GateId],
) -> Result<TreeDecomposition> {
    let same = t.len() == t2.len() && t.root == t2.root && t.bags.iter().zip(&t2.bags).all(|(a, b)| a.children == b.children);
    if !same {
        return Err(Error::NotStitchable("decompositions do not have the same skeleton".into()));
    }
    let mut doms = Vec::with_capacity(t.len());
    for (b, b2) in t.bags.iter().zip(&t2.bags) {
        let mut dom = b.dom.clone();
        for &g in &b2.dom {
            let img = image[g];
            if c2.gates[g].kind == GateKind::Input {
                if !b.contains(img) {
                    return Err(Error::NotStitchable(format!("shared gate {img} missing from a bag of the first decomposition")));
                }
            } else {
                dom.push(img);
            }
        }
        doms.push(dom);
    }
    let children = t.bags.iter().map(|b| b.children.clone()).collect();
    Ok(TreeDecomposition::from_parts(doms, children, t.root))
}
