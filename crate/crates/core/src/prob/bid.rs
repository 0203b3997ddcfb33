//! Block-independent disjoint instances.

use std::collections::{BTreeMap, HashMap};

use num_rational::BigRational;
use num_traits::{One, Zero};
use serde_json::{json, Value};

use super::pcc::PccInstance;
use crate::circuits::{CircuitBuilder, GateId};
use crate::error::{Error, Result};
use crate::rational::{format_rational, parse_probability};
use crate::relational::{normalize_decomposition, tree_decomposition, Elem, FactId, Instance, TreeDecomposition};

/// Facts agreeing on the key positions of their relation form a block; at
/// most one fact per block is kept, independently across blocks.
#[derive(Clone, Debug)]
pub struct BidInstance {
    pub instance: Instance,
    /// Key positions per relation; relations not listed are all-key.
    pub key_positions: BTreeMap<String, Vec<usize>>,
    pub prob: Vec<BigRational>,
}

impl BidInstance {
    /// Every fact is its own block.
    pub fn tuple_independent(instance: Instance, prob: Vec<BigRational>) -> Self {
        BidInstance { instance, key_positions: BTreeMap::new(), prob }
    }

    pub fn key(&self, f: FactId) -> (String, Vec<Elem>) {
        let fact = self.instance.fact(f);
        let args = match self.key_positions.get(&fact.rel) {
            Some(pos) => pos.iter().map(|&p| fact.args[p]).collect(),
            None => fact.args.clone(),
        };
        (fact.rel.clone(), args)
    }

    /// Blocks in order of first appearance.
    pub fn blocks(&self) -> Vec<Vec<FactId>> {
        let mut index: HashMap<(String, Vec<Elem>), usize> = HashMap::new();
        let mut out: Vec<Vec<FactId>> = Vec::new();
        for f in 0..self.instance.len() {
            let i = *index.entry(self.key(f)).or_insert_with(|| {
                out.push(Vec::new());
                out.len() - 1
            });
            out[i].push(f);
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        if self.prob.len() != self.instance.len() {
            return Err(Error::input("one probability per fact is needed"));
        }
        for (rel, pos) in &self.key_positions {
            let arity = self.instance.signature().arity(rel).ok_or_else(|| Error::input(format!("unknown relation {rel}")))?;
            if pos.iter().any(|&p| p >= arity) {
                return Err(Error::input(format!("key position out of range for {rel}")));
            }
        }
        for (f, p) in self.prob.iter().enumerate() {
            if p.is_zero() || p > &BigRational::one() || p < &BigRational::zero() {
                return Err(Error::input(format!("fact {} needs a probability in (0,1]", self.instance.fact(f).id)));
            }
        }
        for block in self.blocks() {
            let total: BigRational = block.iter().map(|&f| &self.prob[f]).sum();
            if total > BigRational::one() {
                return Err(Error::input(format!("block of {} has total probability above 1", self.instance.fact(block[0]).id)));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Value {
        let mut v = self.instance.to_json();
        for (entry, p) in v["facts"].as_array_mut().unwrap().iter_mut().zip(&self.prob) {
            entry["prob"] = json!(format_rational(p));
        }
        v["key_positions"] = json!(self.key_positions);
        v
    }

    /// An instance file with `"key_positions"` per relation and a `"prob"`
    /// per fact (default 1).
    pub fn from_json(value: &Value) -> Result<Self> {
        let instance = Instance::from_json(value)?;
        let mut prob = Vec::new();
        for entry in value["facts"].as_array().into_iter().flatten() {
            prob.push(match entry.get("prob") {
                None => BigRational::one(),
                Some(Value::String(s)) => parse_probability(s)?,
                Some(_) => return Err(Error::input("prob must be a string such as \"3/10\"")),
            });
        }
        let key_positions = match value.get("key_positions") {
            None => BTreeMap::new(),
            Some(v) => serde_json::from_value(v.clone()).map_err(|e| Error::input(format!("key_positions: {e}")))?,
        };
        let b = BidInstance { instance, key_positions, prob };
        b.validate()?;
        Ok(b)
    }
}

/// The pcc-instance equivalent to a BID instance, with a decomposition of
/// its joint encoding and, for checking, the gate `g^i_b` of every block
/// and bag together with its intended probability.
#[derive(Clone, Debug)]
pub struct BidTranslation {
    pub pcc: PccInstance,
    pub decomposition: TreeDecomposition,
    pub choice_gates: Vec<(GateId, BigRational)>,
}

/// Follows a width-`k` decomposition of the instance, normalized so that
/// each bag holds at most one fact. For each block, over the subtree of
/// bags covering its key, the gate `g^i_b` says that the block's fact is
/// chosen within the subtree of `b`. It has probability `w'(b)`, the total
/// probability of the block's facts below `b`. At `b`, an input `h` keeps
/// the local fact (conditional probability `w(b)/w'(b)`); otherwise an
/// input picks the left or the right child in proportion to their `w'`.
/// Blocks made of a single certain fact get a constant gate.
pub fn bid_to_pcc(bid: &BidInstance, k: usize) -> Result<BidTranslation> {
    bid.validate()?;
    let i = &bid.instance;
    let t = normalize_decomposition(i, &tree_decomposition(i, k)?);
    let home = t.assignment.clone().expect("normalized decompositions carry an assignment");
    let ne = i.num_elements();
    let mut b = CircuitBuilder::new();
    let mut extra: Vec<Vec<GateId>> = vec![Vec::new(); t.len()];
    let mut phi = vec![usize::MAX; i.len()];
    let mut prob: HashMap<GateId, BigRational> = HashMap::new();
    let mut choice_gates = Vec::new();
    let preorder = t.preorder();
    let postorder = t.postorder();

    for (bi, block) in bid.blocks().into_iter().enumerate() {
        if let [f] = block[..] {
            if bid.prob[f].is_one() {
                let g = b.constant(true);
                extra[home[f]].push(g);
                phi[f] = g;
                continue;
            }
        }
        let (_, key) = bid.key(block[0]);
        let inside: Vec<bool> = t.bags.iter().map(|bag| bag.covers(&key)).collect();
        let mut w = vec![BigRational::zero(); t.len()];
        let mut fact_at: HashMap<usize, FactId> = HashMap::new();
        for &f in &block {
            w[home[f]] = bid.prob[f].clone();
            fact_at.insert(home[f], f);
        }
        let mut wp = vec![BigRational::zero(); t.len()];
        for &x in &postorder {
            if inside[x] {
                let below: BigRational = t.bags[x].children.iter().filter(|&&c| inside[c]).map(|&c| wp[c].clone()).sum();
                wp[x] = &w[x] + below;
            }
        }
        let root = *preorder.iter().find(|&&x| inside[x]).expect("some bag covers the key");
        let mut gi: HashMap<usize, GateId> = HashMap::new();
        let g = b.input(format!("b{bi}.{root}.i"));
        prob.insert(g, wp[root].clone());
        extra[root].push(g);
        gi.insert(root, g);
        for &x in &preorder {
            let Some(&gx) = gi.get(&x) else { continue };
            choice_gates.push((gx, wp[x].clone()));
            let mut here = Vec::new();
            // Remaining choices when the local fact is not kept.
            let mut rest = gx;
            if let Some(&f) = fact_at.get(&x) {
                if w[x] == wp[x] {
                    phi[f] = gx;
                } else {
                    let h = b.input(format!("b{bi}.{x}.h"));
                    prob.insert(h, &w[x] / &wp[x]);
                    let keep = b.and(vec![gx, h]);
                    let nh = b.not(h);
                    rest = b.and(vec![gx, nh]);
                    phi[f] = keep;
                    here.extend([h, keep, nh, rest]);
                }
            }
            let live: Vec<usize> =
                t.bags[x].children.iter().copied().filter(|&c| inside[c] && !wp[c].is_zero()).collect();
            match live[..] {
                [] => {}
                [c] => {
                    gi.insert(c, rest);
                    extra[c].push(rest);
                }
                [l, r] => {
                    let lr = b.input(format!("b{bi}.{x}.lr"));
                    prob.insert(lr, &wp[l] / (&wp[x] - &w[x]));
                    let gl = b.and(vec![rest, lr]);
                    let nlr = b.not(lr);
                    let gr = b.and(vec![rest, nlr]);
                    here.extend([lr, gl, nlr, gr]);
                    gi.insert(l, gl);
                    gi.insert(r, gr);
                    extra[l].push(gl);
                    extra[r].push(gr);
                }
                _ => unreachable!("normalized decompositions are binary"),
            }
            extra[x].extend(here);
        }
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
    let decomposition = TreeDecomposition::from_parts(doms, children, t.root);
    let pcc = PccInstance { instance: i.clone(), circuit, phi, prob };
    Ok(BidTranslation { pcc, decomposition, choice_gates })
}
