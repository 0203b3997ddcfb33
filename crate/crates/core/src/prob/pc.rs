//! Instances whose facts are annotated by propositional formulas over
//! independent events.

use std::collections::{BTreeMap, HashMap};

use num_rational::BigRational;
use serde_json::{json, Value};

use super::formula::Formula;
use super::pcc::PccInstance;
use crate::circuits::{CircuitBuilder, GateId};
use crate::error::{Error, Result};
use crate::rational::{format_rational, parse_probability};
use crate::relational::{check_hypergraph, decompose_hypergraph, subinstance, FactValuation, Instance, TreeDecomposition};

#[derive(Clone, Debug)]
pub struct PcInstance {
    pub instance: Instance,
    /// One formula per fact.
    pub cond: Vec<Formula>,
    pub events: BTreeMap<String, BigRational>,
}

impl PcInstance {
    pub fn validate(&self) -> Result<()> {
        if self.cond.len() != self.instance.len() {
            return Err(Error::input("one condition per fact is needed"));
        }
        for (f, c) in self.cond.iter().enumerate() {
            if let Some(e) = c.events().into_iter().find(|e| !self.events.contains_key(e)) {
                return Err(Error::input(format!("fact {} uses undeclared event {e}", self.instance.fact(f).id)));
            }
        }
        Ok(())
    }

    /// The possible world of a valuation of the events.
    pub fn world(&self, nu: &dyn Fn(&str) -> bool) -> Instance {
        let mut v = FactValuation::new();
        for (f, c) in self.cond.iter().enumerate() {
            v.set(f, c.eval(nu));
        }
        subinstance(&self.instance, &v).expect("total valuation")
    }

    /// Events used by some condition, in name order.
    pub fn used_events(&self) -> Vec<String> {
        let mut all: Vec<String> = self.cond.iter().flat_map(|c| c.events()).collect();
        all.sort();
        all.dedup();
        all
    }

    /// The hypergraph of the encoding with one vertex per used event
    /// (after the elements): facts, element/event occurrences and event
    /// co-occurrences.
    pub fn hypergraph(&self) -> (usize, Vec<Vec<usize>>) {
        let ne = self.instance.num_elements();
        let used = self.used_events();
        let index: HashMap<&str, usize> = used.iter().enumerate().map(|(i, e)| (e.as_str(), ne + i)).collect();
        let mut edges = self.instance.hyperedges();
        for (f, c) in self.cond.iter().enumerate() {
            let ev: Vec<usize> = c.events().iter().map(|e| index[e.as_str()]).collect();
            for &a in &self.instance.fact(f).args {
                for &e in &ev {
                    edges.push(vec![a, e]);
                }
            }
            for (i, &e) in ev.iter().enumerate() {
                for &g in &ev[i + 1..] {
                    edges.push(vec![e, g]);
                }
            }
        }
        (ne + used.len(), edges)
    }

    pub fn to_json(&self) -> Value {
        let mut v = self.instance.to_json();
        for (entry, c) in v["facts"].as_array_mut().unwrap().iter_mut().zip(&self.cond) {
            entry["cond"] = json!(c.to_string());
        }
        v["events"] = json!(self.events.iter().map(|(e, p)| (e.clone(), format_rational(p))).collect::<BTreeMap<_, _>>());
        v
    }

    /// An instance file whose facts may carry `"cond"` (default `true`),
    /// plus `"events"` mapping event names to probabilities.
    pub fn from_json(value: &Value) -> Result<Self> {
        let instance = Instance::from_json(value)?;
        let mut cond = Vec::new();
        for entry in value["facts"].as_array().into_iter().flatten() {
            cond.push(match entry.get("cond") {
                None => Formula::Const(true),
                Some(Value::String(s)) => Formula::parse(s)?,
                Some(_) => return Err(Error::input("cond must be a string")),
            });
        }
        let mut events = BTreeMap::new();
        if let Some(map) = value.get("events") {
            let map = map.as_object().ok_or_else(|| Error::input("events must be an object"))?;
            for (e, p) in map {
                let p = p.as_str().ok_or_else(|| Error::input("probabilities are strings such as \"1/2\""))?;
                events.insert(e.clone(), parse_probability(p)?);
            }
        }
        let j = PcInstance { instance, cond, events };
        j.validate()?;
        Ok(j)
    }
}

fn chain(b: &mut CircuitBuilder, gates: &[GateId], and: bool) -> GateId {
    match gates {
        [] => b.constant(and),
        [g] => *g,
        _ => {
            let mut acc = gates[0];
            for &g in &gates[1..] {
                acc = if and { b.and(vec![acc, g]) } else { b.or(vec![acc, g]) };
            }
            acc
        }
    }
}

/// Rewrites every condition as the disjunction of its satisfying
/// valuations and builds the corresponding arity-two pcc-instance, with a
/// decomposition of it obtained from a width-`k` decomposition of the
/// pc-instance's encoding. Conditions over more than `k` events are
/// rejected: a width-`k` encoding cannot contain them.
pub fn pc_to_pcc(j: &PcInstance, k: usize) -> Result<(PccInstance, TreeDecomposition)> {
    j.validate()?;
    for (f, c) in j.cond.iter().enumerate() {
        if c.events().len() > k {
            return Err(Error::input(format!(
                "condition of fact {} uses {} events, more than the width {k}",
                j.instance.fact(f).id,
                c.events().len()
            )));
        }
    }
    let (nv, edges) = j.hypergraph();
    pc_to_pcc_on(j, &decompose_hypergraph(nv, &edges, k)?)
}

/// As [`pc_to_pcc`], from a given decomposition of the pc-instance's
/// encoding (see [`PcInstance::hypergraph`]).
pub fn pc_to_pcc_on(j: &PcInstance, t: &TreeDecomposition) -> Result<(PccInstance, TreeDecomposition)> {
    j.validate()?;
    let (_, edges) = j.hypergraph();
    if !check_hypergraph(&edges, t) {
        return Err(Error::InvalidDecomposition("not a decomposition of the pc-instance".into()));
    }
    let ne = j.instance.num_elements();
    let used = j.used_events();
    let mut b = CircuitBuilder::new();
    // Event i is input gate i, i.e. vertex ne + i in both hypergraphs.
    let inputs: HashMap<String, GateId> = used.iter().map(|e| (e.clone(), b.input(e.clone()))).collect();
    let mut extra: Vec<Vec<GateId>> = vec![Vec::new(); t.len()];
    let mut phi = Vec::new();
    for (f, c) in j.cond.iter().enumerate() {
        let ev: Vec<String> = c.events().into_iter().collect();
        let start = b.len();
        let sat: Vec<u32> = (0..1u32 << ev.len())
            .filter(|&m| c.eval(&|x| ev.iter().position(|e| e == x).is_some_and(|i| m >> i & 1 == 1)))
            .collect();
        let g = if sat.is_empty() {
            b.constant(false)
        } else if sat.len() == 1 << ev.len() {
            b.constant(true)
        } else {
            let mut negs: Vec<Option<GateId>> = vec![None; ev.len()];
            let mut terms = Vec::new();
            for m in sat {
                let mut lits = Vec::new();
                for (i, e) in ev.iter().enumerate() {
                    let x = inputs[e];
                    lits.push(if m >> i & 1 == 1 { x } else { *negs[i].get_or_insert_with(|| b.not(x)) });
                }
                terms.push(chain(&mut b, &lits, true));
            }
            chain(&mut b, &terms, false)
        };
        phi.push(g);
        let mut need: Vec<usize> = j.instance.fact(f).args.clone();
        need.extend(ev.iter().map(|e| ne + inputs[e]));
        let bag = (0..t.len()).find(|&x| t.bags[x].covers(&need)).ok_or_else(|| {
            Error::InvalidDecomposition(format!("no bag covers fact {} with its events", j.instance.fact(f).id))
        })?;
        extra[bag].extend(start..b.len());
    }
    if b.is_empty() {
        extra[t.root].push(b.constant(false));
    }
    let last = b.len() - 1;
    let circuit = b.finish(last);
    let doms = t
        .bags
        .iter()
        .zip(&extra)
        .map(|(bag, ex)| bag.dom.iter().copied().chain(ex.iter().map(|&g| ne + g)).collect())
        .collect();
    let children = t.bags.iter().map(|bag| bag.children.clone()).collect();
    let witness = TreeDecomposition::from_parts(doms, children, t.root);
    let prob = used.iter().map(|e| (inputs[e], j.events[e].clone())).collect();
    Ok((PccInstance { instance: j.instance.clone(), circuit, phi, prob }, witness))
}
