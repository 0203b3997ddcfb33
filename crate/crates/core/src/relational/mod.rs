//! Relational instances, valuations and tree decompositions.

mod decomposition;

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use decomposition::{
    check_decomposition, check_hypergraph, decompose_hypergraph, normalize_decomposition, normalize_hypergraph,
    tree_decomposition, Bag, TreeDecomposition,
};

/// Index of an interned domain element.
pub type Elem = usize;
/// Dense fact index, in input order.
pub type FactId = usize;

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Signature {
    arities: BTreeMap<String, usize>,
}

impl Signature {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, rel: &str, arity: usize) -> Result<()> {
        if arity == 0 {
            return Err(Error::input(format!("relation {rel} must have positive arity")));
        }
        match self.arities.get(rel) {
            Some(&a) if a != arity => Err(Error::input(format!("relation {rel} declared with arities {a} and {arity}"))),
            _ => {
                self.arities.insert(rel.to_string(), arity);
                Ok(())
            }
        }
    }

    pub fn with(mut self, rel: &str, arity: usize) -> Self {
        self.add(rel, arity).expect("valid relation");
        self
    }

    pub fn arity(&self, rel: &str) -> Option<usize> {
        self.arities.get(rel).copied()
    }

    pub fn relations(&self) -> impl Iterator<Item = (&str, usize)> {
        self.arities.iter().map(|(r, &a)| (r.as_str(), a))
    }

    pub fn len(&self) -> usize {
        self.arities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arities.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Fact {
    pub rel: String,
    pub args: Vec<Elem>,
    pub id: String,
}

/// A finite set of ground facts. Elements are interned in order of first
/// appearance, so the element table is exactly the active domain.
#[derive(Clone, Debug, Default)]
pub struct Instance {
    signature: Signature,
    elements: Vec<String>,
    elem_index: HashMap<String, Elem>,
    facts: Vec<Fact>,
    tuples: HashSet<(String, Vec<Elem>)>,
    ids: HashMap<String, FactId>,
}

impl Instance {
    pub fn new(signature: Signature) -> Self {
        Instance { signature, ..Default::default() }
    }

    pub fn signature(&self) -> &Signature {
        &self.signature
    }

    /// Adds a fact over named elements. Without an explicit id the fact is
    /// called `F<n>` with `n` its 1-based position.
    pub fn add_fact(&mut self, rel: &str, args: &[&str], id: Option<&str>) -> Result<FactId> {
        let elems: Vec<Elem> = args.iter().map(|a| self.intern(a)).collect();
        self.add_fact_elems(rel, elems, id)
    }

    /// Adds a fact over already-interned elements.
    pub fn add_fact_elems(&mut self, rel: &str, args: Vec<Elem>, id: Option<&str>) -> Result<FactId> {
        match self.signature.arity(rel) {
            None => return Err(Error::input(format!("relation {rel} is not in the signature"))),
            Some(a) if a != args.len() => {
                return Err(Error::input(format!("relation {rel} has arity {a}, got {} arguments", args.len())))
            }
            _ => {}
        }
        if args.iter().any(|&e| e >= self.elements.len()) {
            return Err(Error::input("unknown element index"));
        }
        let key = (rel.to_string(), args.clone());
        if self.tuples.contains(&key) {
            return Err(Error::input(format!("duplicate fact {}", self.render_tuple(rel, &args))));
        }
        let fid = self.facts.len();
        let id = id.map(str::to_string).unwrap_or_else(|| format!("F{}", fid + 1));
        if self.ids.contains_key(&id) {
            return Err(Error::input(format!("duplicate fact id {id}")));
        }
        self.tuples.insert(key);
        self.ids.insert(id.clone(), fid);
        self.facts.push(Fact { rel: rel.to_string(), args, id });
        Ok(fid)
    }

    /// Interns an element name. Elements that never appear in a fact are
    /// still counted by [`Instance::num_elements`], so prefer `add_fact`.
    pub fn intern(&mut self, name: &str) -> Elem {
        if let Some(&e) = self.elem_index.get(name) {
            return e;
        }
        let e = self.elements.len();
        self.elements.push(name.to_string());
        self.elem_index.insert(name.to_string(), e);
        e
    }

    pub fn facts(&self) -> &[Fact] {
        &self.facts
    }

    pub fn fact(&self, f: FactId) -> &Fact {
        &self.facts[f]
    }

    pub fn len(&self) -> usize {
        self.facts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.facts.is_empty()
    }

    pub fn num_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn element_name(&self, e: Elem) -> &str {
        &self.elements[e]
    }

    pub fn element(&self, name: &str) -> Option<Elem> {
        self.elem_index.get(name).copied()
    }

    pub fn fact_by_id(&self, id: &str) -> Option<FactId> {
        self.ids.get(id).copied()
    }

    pub fn contains(&self, rel: &str, args: &[Elem]) -> bool {
        self.tuples.contains(&(rel.to_string(), args.to_vec()))
    }

    pub fn find(&self, rel: &str, args: &[Elem]) -> Option<FactId> {
        if !self.contains(rel, args) {
            return None;
        }
        self.facts.iter().position(|f| f.rel == rel && f.args == args)
    }

    /// Element index sets of the facts, i.e. the hyperedges of the Gaifman graph.
    pub fn hyperedges(&self) -> Vec<Vec<Elem>> {
        self.facts.iter().map(|f| f.args.clone()).collect()
    }

    pub fn render_fact(&self, f: FactId) -> String {
        let fact = &self.facts[f];
        self.render_tuple(&fact.rel, &fact.args)
    }

    fn render_tuple(&self, rel: &str, args: &[Elem]) -> String {
        let names: Vec<&str> = args.iter().map(|&e| self.elements[e].as_str()).collect();
        format!("{rel}({})", names.join(","))
    }

    pub fn to_json(&self) -> serde_json::Value {
        let file = InstanceFile {
            signature: self.signature.arities.clone(),
            facts: self
                .facts
                .iter()
                .map(|f| FactEntry {
                    rel: f.rel.clone(),
                    args: f.args.iter().map(|&e| self.elements[e].clone()).collect(),
                    id: Some(f.id.clone()),
                })
                .collect(),
        };
        serde_json::to_value(file).expect("instance serializes")
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Self> {
        let file: InstanceFile =
            serde_json::from_value(value.clone()).map_err(|e| Error::input(format!("instance file: {e}")))?;
        let mut sig = Signature::new();
        for (rel, &arity) in &file.signature {
            check_identifier(rel)?;
            sig.add(rel, arity)?;
        }
        let mut inst = Instance::new(sig);
        for f in &file.facts {
            let args: Vec<&str> = f.args.iter().map(String::as_str).collect();
            inst.add_fact(&f.rel, &args, f.id.as_deref())?;
        }
        Ok(inst)
    }
}

impl std::fmt::Display for Instance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = (0..self.len()).map(|i| format!("{}={}", self.facts[i].id, self.render_fact(i))).collect();
        write!(f, "{{{}}}", parts.join(", "))
    }
}

pub(crate) fn check_identifier(name: &str) -> Result<()> {
    let mut chars = name.chars();
    let ok = matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_');
    if ok {
        Ok(())
    } else {
        Err(Error::input(format!("invalid relation name {name:?}")))
    }
}

#[derive(Serialize, Deserialize)]
struct InstanceFile {
    signature: BTreeMap<String, usize>,
    facts: Vec<FactEntry>,
}

#[derive(Serialize, Deserialize)]
struct FactEntry {
    rel: String,
    args: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    id: Option<String>,
}

/// A Boolean valuation of facts, keyed by dense fact index.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FactValuation(HashMap<FactId, bool>);

impl FactValuation {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn constant(n: usize, value: bool) -> Self {
        FactValuation((0..n).map(|f| (f, value)).collect())
    }

    /// Bit `i` of `mask` gives the value of fact `i`.
    pub fn from_mask(n: usize, mask: u64) -> Self {
        FactValuation((0..n).map(|f| (f, mask >> f & 1 == 1)).collect())
    }

    pub fn set(&mut self, f: FactId, value: bool) {
        self.0.insert(f, value);
    }

    pub fn get(&self, f: FactId) -> Option<bool> {
        self.0.get(&f).copied()
    }

    /// Pointwise conjunction.
    pub fn and(&self, other: &FactValuation) -> FactValuation {
        FactValuation(self.0.iter().map(|(&f, &v)| (f, v && other.get(f).unwrap_or(false))).collect())
    }
}

/// The subinstance `{F ∈ I | ν(F) = 1}`; fact ids are preserved.
pub fn subinstance(i: &Instance, nu: &FactValuation) -> Result<Instance> {
    let mut out = Instance::new(i.signature.clone());
    for (fid, fact) in i.facts.iter().enumerate() {
        let keep = nu.get(fid).ok_or_else(|| Error::PartialValuation(fact.id.clone()))?;
        if keep {
            let args: Vec<&str> = fact.args.iter().map(|&e| i.element_name(e)).collect();
            out.add_fact(&fact.rel, &args, Some(&fact.id))?;
        }
    }
    Ok(out)
}

/// True iff `sub`'s facts (by relation and element names) all occur in `sup`.
pub fn is_subinstance(sub: &Instance, sup: &Instance) -> bool {
    sub.facts.iter().all(|f| {
        let args: Option<Vec<Elem>> = f.args.iter().map(|&e| sup.element(sub.element_name(e))).collect();
        args.is_some_and(|a| sup.contains(&f.rel, &a))
    })
}

/// Isomorphism test by backtracking over element bijections.
pub fn isomorphic(a: &Instance, b: &Instance) -> bool {
    if a.len() != b.len() || a.num_elements() != b.num_elements() {
        return false;
    }
    let mut count_a: BTreeMap<(&str, usize), usize> = BTreeMap::new();
    let mut count_b: BTreeMap<(&str, usize), usize> = BTreeMap::new();
    for f in &a.facts {
        *count_a.entry((&f.rel, f.args.len())).or_default() += 1;
    }
    for f in &b.facts {
        *count_b.entry((&f.rel, f.args.len())).or_default() += 1;
    }
    if count_a != count_b {
        return false;
    }
    let mut fwd = vec![None; a.num_elements()];
    let mut bwd = vec![None; b.num_elements()];
    iso_search(a, b, 0, &mut fwd, &mut bwd)
}

fn iso_search(a: &Instance, b: &Instance, idx: usize, fwd: &mut [Option<Elem>], bwd: &mut [Option<Elem>]) -> bool {
    if idx == a.len() {
        return true;
    }
    let fa = &a.facts[idx];
    for fb in b.facts.iter().filter(|fb| fb.rel == fa.rel && fb.args.len() == fa.args.len()) {
        let mut bound = Vec::new();
        let mut ok = true;
        for (&x, &y) in fa.args.iter().zip(&fb.args) {
            match (fwd[x], bwd[y]) {
                (Some(fx), _) if fx != y => ok = false,
                (None, Some(_)) => ok = false,
                (None, None) => {
                    fwd[x] = Some(y);
                    bwd[y] = Some(x);
                    bound.push(x);
                }
                _ => {}
            }
            if !ok {
                break;
            }
        }
        if ok && iso_search(a, b, idx + 1, fwd, bwd) {
            return true;
        }
        for x in bound {
            if let Some(y) = fwd[x].take() {
                bwd[y] = None;
            }
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn paper_instance() -> Instance {
        let mut i = Instance::new(Signature::new().with("R", 2));
        i.add_fact("R", &["a", "a"], None).unwrap();
        i.add_fact("R", &["b", "c"], None).unwrap();
        i.add_fact("R", &["c", "b"], None).unwrap();
        i
    }

    #[test]
    fn subinstance_filters() {
        let i = paper_instance();
        let mut nu = FactValuation::constant(3, true);
        nu.set(1, false);
        let s = subinstance(&i, &nu).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.facts()[0].id, "F1");
        assert_eq!(s.render_fact(1), "R(c,b)");
        let empty = subinstance(&i, &FactValuation::constant(3, false)).unwrap();
        assert!(empty.is_empty() && empty.num_elements() == 0);
        let err = subinstance(&i, &FactValuation::constant(2, true)).unwrap_err();
        assert!(matches!(err, Error::PartialValuation(id) if id == "F3"));
    }

    #[test]
    fn rejects_bad_facts() {
        let mut i = paper_instance();
        assert!(i.add_fact("R", &["a", "a"], None).is_err());
        assert!(i.add_fact("R", &["a"], None).is_err());
        assert!(i.add_fact("S", &["a"], None).is_err());
    }

    #[test]
    fn isomorphism() {
        let i = paper_instance();
        let mut j = Instance::new(Signature::new().with("R", 2));
        j.add_fact("R", &["x", "y"], None).unwrap();
        j.add_fact("R", &["z", "z"], None).unwrap();
        j.add_fact("R", &["y", "x"], None).unwrap();
        assert!(isomorphic(&i, &j));
        let mut k = Instance::new(Signature::new().with("R", 2));
        k.add_fact("R", &["x", "y"], None).unwrap();
        k.add_fact("R", &["z", "z"], None).unwrap();
        k.add_fact("R", &["y", "z"], None).unwrap();
        assert!(!isomorphic(&i, &k));
    }

    #[test]
    fn json_round_trip() {
        let i = paper_instance();
        let j = Instance::from_json(&i.to_json()).unwrap();
        assert!(isomorphic(&i, &j));
        assert_eq!(j.facts()[2].id, "F3");
    }
}
