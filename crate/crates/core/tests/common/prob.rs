//! Probabilistic instance generators and possible-world oracles.

use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::Rng;
use treeprov::prob::{pc_to_pcc, BidInstance, Formula, PcInstance};
use treeprov::relational::{subinstance, FactValuation, Instance};
use treeprov::ucq::{holds, Ucq};

pub fn one() -> BigRational {
    BigRational::one()
}

pub fn random_formula(rng: &mut StdRng, events: &[String], depth: usize) -> Formula {
    if depth == 0 || rng.gen_bool(0.3) {
        return match rng.gen_range(0..10) {
            0 => Formula::Const(rng.gen_bool(0.5)),
            _ => Formula::Var(events.choose(rng).unwrap().clone()),
        };
    }
    match rng.gen_range(0..3) {
        0 => Formula::Not(Box::new(random_formula(rng, events, depth - 1))),
        1 => Formula::And(vec![random_formula(rng, events, depth - 1), random_formula(rng, events, depth - 1)]),
        _ => Formula::Or(vec![random_formula(rng, events, depth - 1), random_formula(rng, events, depth - 1)]),
    }
}

/// A pc-instance whose formulas mention at most two events each and
/// whose encoding has width at most 3.
pub fn random_pc(rng: &mut StdRng) -> PcInstance {
    loop {
        let j = random_pc_any(rng);
        if pc_to_pcc(&j, 3).is_ok() {
            return j;
        }
    }
}

pub fn random_pc_any(rng: &mut StdRng) -> PcInstance {
    let instance = super::instance(rng, 5, 4, 2);
    let all: Vec<String> = (0..4).map(|e| format!("e{e}")).collect();
    let cond = (0..instance.len())
        .map(|_| {
            let pair: Vec<String> = all.choose_multiple(rng, 2).cloned().collect();
            random_formula(rng, &pair, 2)
        })
        .collect();
    let events = all.iter().map(|e| (e.clone(), super::probability(rng, 4))).collect();
    PcInstance { instance, cond, events }
}

pub fn pc_bruteforce(q: &Ucq, j: &PcInstance) -> BigRational {
    let names: Vec<&String> = j.events.keys().collect();
    let mut total = BigRational::zero();
    for mask in 0u32..1 << names.len() {
        let value = |e: &str| mask >> names.iter().position(|n| n.as_str() == e).unwrap() & 1 == 1;
        if holds(q, &j.world(&value)) {
            total += names
                .iter()
                .enumerate()
                .map(|(i, n)| if mask >> i & 1 == 1 { j.events[*n].clone() } else { one() - &j.events[*n] })
                .product::<BigRational>();
        }
    }
    total
}

/// A random BID instance over the shared relations, keyed on the first
/// position of R and T.
pub fn random_bid(rng: &mut StdRng, max_facts: usize) -> BidInstance {
    let instance = super::instance(rng, max_facts, 4, 2);
    let key_positions: BTreeMap<String, Vec<usize>> =
        [("R".to_string(), vec![0]), ("T".to_string(), vec![0])].into_iter().collect();
    let mut bid = BidInstance { instance, key_positions, prob: Vec::new() };
    bid.prob = vec![BigRational::zero(); bid.instance.len()];
    for block in bid.blocks() {
        // Split at most 1 among the block's facts.
        let d = 2 * block.len() as i64 + 1;
        let mut left = d;
        for &f in &block {
            let p = rng.gen_range(1..=(left - (block.len() as i64 - 1)).clamp(1, 3));
            left -= p;
            bid.prob[f] = BigRational::new(p.into(), d.into());
        }
        if block.len() == 1 && rng.gen_bool(0.3) {
            bid.prob[block[0]] = one();
        }
    }
    bid.validate().unwrap();
    bid
}

/// Distribution of the worlds of a BID instance, keyed by fact set.
pub fn bid_worlds(bid: &BidInstance) -> BTreeMap<Vec<usize>, BigRational> {
    let mut out = BTreeMap::new();
    out.insert(Vec::new(), one());
    for block in bid.blocks() {
        let none = one() - block.iter().map(|&f| bid.prob[f].clone()).sum::<BigRational>();
        let mut next = BTreeMap::new();
        for (world, p) in out {
            if !none.is_zero() {
                *next.entry(world.clone()).or_insert_with(BigRational::zero) += &p * &none;
            }
            for &f in &block {
                let mut w: Vec<usize> = world.clone();
                w.push(f);
                w.sort();
                *next.entry(w).or_insert_with(BigRational::zero) += &p * &bid.prob[f];
            }
        }
        out = next;
    }
    out
}

pub fn world_instance(i: &Instance, facts: &[usize]) -> Instance {
    let mut nu = FactValuation::constant(i.len(), false);
    for &f in facts {
        nu.set(f, true);
    }
    subinstance(i, &nu).unwrap()
}
