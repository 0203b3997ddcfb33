//! Direct evaluation by backtracking over facts. These are the reference
//! semantics the automaton constructions are tested against.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use num_bigint::{BigInt, BigUint};
use num_traits::One;

use super::{Cq, Ucq};
use crate::circuits::{Monomial, Polynomial};
use crate::encoding::BagInstance;
use crate::relational::{Elem, FactId, Instance};

/// A satisfying assignment of one disjunct, with the fact each atom is
/// mapped to.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Match {
    pub disjunct: usize,
    pub assignment: BTreeMap<String, Elem>,
    pub facts: Vec<FactId>,
}

fn cq_matches(cq: &Cq, i: &Instance, out: &mut Vec<(BTreeMap<String, Elem>, Vec<FactId>)>) {
    fn go(
        cq: &Cq,
        i: &Instance,
        at: usize,
        asg: &mut BTreeMap<String, Elem>,
        facts: &mut Vec<FactId>,
        out: &mut Vec<(BTreeMap<String, Elem>, Vec<FactId>)>,
    ) {
        if at == cq.atoms.len() {
            if cq.neq.iter().all(|(x, y)| asg.get(x) != asg.get(y)) {
                out.push((asg.clone(), facts.clone()));
            }
            return;
        }
        let atom = &cq.atoms[at];
        for (fid, fact) in i.facts().iter().enumerate() {
            if fact.rel != atom.rel || fact.args.len() != atom.args.len() {
                continue;
            }
            let mut added = Vec::new();
            let mut ok = true;
            for (v, &e) in atom.args.iter().zip(&fact.args) {
                match asg.get(v) {
                    Some(&x) if x != e => {
                        ok = false;
                        break;
                    }
                    Some(_) => {}
                    None => {
                        asg.insert(v.clone(), e);
                        added.push(v.clone());
                    }
                }
            }
            if ok {
                facts.push(fid);
                go(cq, i, at + 1, asg, facts, out);
                facts.pop();
            }
            for v in added {
                asg.remove(&v);
            }
        }
    }
    go(cq, i, 0, &mut BTreeMap::new(), &mut Vec::new(), out);
}

/// Every match of every disjunct, in disjunct order.
pub fn enumerate_matches(q: &Ucq, i: &Instance) -> Vec<Match> {
    let mut out = Vec::new();
    for (d, cq) in q.disjuncts.iter().enumerate() {
        let mut found = Vec::new();
        cq_matches(cq, i, &mut found);
        out.extend(found.into_iter().map(|(assignment, facts)| Match { disjunct: d, assignment, facts }));
    }
    out
}

pub fn holds(q: &Ucq, i: &Instance) -> bool {
    q.disjuncts.iter().any(|cq| {
        let mut found = Vec::new();
        cq_matches(cq, i, &mut found);
        !found.is_empty()
    })
}

/// Whether some match uses every fact at most as often as its
/// multiplicity.
pub fn bag_holds(cq: &Cq, bag: &BagInstance) -> bool {
    let mut found = Vec::new();
    cq_matches(cq, &bag.instance, &mut found);
    found.iter().any(|(_, facts)| {
        let mut used: HashMap<FactId, u32> = HashMap::new();
        for &f in facts {
            *used.entry(f).or_default() += 1;
        }
        used.iter().all(|(&f, &n)| n <= bag.multiplicity[f])
    })
}

/// Sum over matches of the product of the facts they use, with fact ids
/// as variables.
pub fn nx_provenance_bruteforce(q: &Ucq, i: &Instance) -> Polynomial {
    let mut p = Polynomial::zero();
    for m in enumerate_matches(q, i) {
        let mut mono = Monomial::new();
        for &f in &m.facts {
            *mono.entry(i.fact(f).id.clone()).or_default() += 1;
        }
        p.add_term(mono, BigUint::one());
    }
    p
}

/// Cheapest match when each use of a fact costs `cost(fact)`; `None` when
/// the query does not hold.
pub fn tropical_bruteforce(q: &Ucq, i: &Instance, cost: impl Fn(FactId) -> BigInt) -> Option<BigInt> {
    enumerate_matches(q, i).iter().map(|m| m.facts.iter().map(|&f| cost(f)).sum()).min()
}

/// Number of distinct answer tuples over the free variables (0 or 1 for a
/// Boolean query).
pub fn count_projections(q: &Ucq, i: &Instance) -> usize {
    let answers: BTreeSet<Vec<Elem>> = enumerate_matches(q, i)
        .into_iter()
        .map(|m| q.free.iter().map(|x| m.assignment[x]).collect())
        .collect();
    answers.len()
}
