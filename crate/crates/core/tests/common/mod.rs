//! Random generators shared by the integration tests.
#![allow(dead_code)]

pub mod prob;
pub mod prxml;

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use treeprov::relational::{tree_decomposition, Instance, Signature};
use treeprov::ucq::{Atom, Cq, Ucq};

pub const RELATIONS: [(&str, usize); 3] = [("R", 2), ("S", 1), ("T", 2)];

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

pub fn signature() -> Signature {
    let mut sig = Signature::new();
    for (r, a) in RELATIONS {
        sig.add(r, a).unwrap();
    }
    sig
}

/// A random instance with at most `max_facts` facts over at most
/// `max_elems` elements whose treewidth is at most `k`.
pub fn instance(rng: &mut StdRng, max_facts: usize, max_elems: usize, k: usize) -> Instance {
    loop {
        let mut i = Instance::new(signature());
        let n = rng.gen_range(0..=max_facts);
        let elems: Vec<String> = (0..max_elems.max(1)).map(|e| format!("c{e}")).collect();
        for _ in 0..n {
            let (rel, arity) = *RELATIONS.choose(rng).unwrap();
            let args: Vec<&str> = (0..arity).map(|_| elems.choose(rng).unwrap().as_str()).collect();
            let _ = i.add_fact(rel, &args, None);
        }
        if tree_decomposition(&i, k).is_ok() {
            return i;
        }
    }
}

pub fn cq(rng: &mut StdRng, max_atoms: usize, max_vars: usize) -> Cq {
    let vars: Vec<String> = ["x", "y", "z", "w"][..max_vars].iter().map(|s| s.to_string()).collect();
    let n = rng.gen_range(1..=max_atoms);
    let atoms = (0..n)
        .map(|_| {
            let (rel, arity) = *RELATIONS.choose(rng).unwrap();
            Atom { rel: rel.to_string(), args: (0..arity).map(|_| vars.choose(rng).unwrap().clone()).collect() }
        })
        .collect();
    Cq { atoms, neq: Vec::new() }
}

pub fn ucq(rng: &mut StdRng, max_disjuncts: usize, max_atoms: usize, max_vars: usize) -> Ucq {
    let n = rng.gen_range(1..=max_disjuncts);
    Ucq { disjuncts: (0..n).map(|_| cq(rng, max_atoms, max_vars)).collect(), free: Vec::new() }
}

/// A random probability in {1/d, ..., d/d}.
pub fn probability(rng: &mut StdRng, d: i64) -> num_rational::BigRational {
    num_rational::BigRational::new(rng.gen_range(1..=d).into(), d.into())
}

/// A random Boolean circuit over at most `max_inputs` inputs whose output
/// is the last gate.
pub fn circuit(rng: &mut StdRng, max_inputs: usize, max_gates: usize) -> treeprov::circuits::BoolCircuit {
    let mut b = treeprov::circuits::CircuitBuilder::new();
    let n = rng.gen_range(1..=max_inputs);
    let mut gates: Vec<usize> = (0..n).map(|i| b.input(format!("x{i}"))).collect();
    for _ in 0..rng.gen_range(1..=max_gates) {
        let g = match rng.gen_range(0..5) {
            0 => b.not(*gates.choose(rng).unwrap()),
            1 => b.constant(rng.gen()),
            k => {
                let arity = rng.gen_range(1..=3);
                // Favour recent gates so circuits stay narrow.
                let lo = gates.len().saturating_sub(4);
                let ins = (0..arity).map(|_| gates[rng.gen_range(lo..gates.len())]).collect();
                if k % 2 == 0 {
                    b.and(ins)
                } else {
                    b.or(ins)
                }
            }
        };
        gates.push(g);
    }
    let out = *gates.last().unwrap();
    b.finish(out)
}

/// A random bNTA over labels `(c, i)` with `c` in `labels` and `i <= p`.
pub fn bnta(rng: &mut StdRng, states: usize, labels: &[char], p: u8) -> treeprov::automata::Bnta<(char, u8)> {
    let mut a = treeprov::automata::Bnta::new();
    for q in 0..states {
        a.add_state(format!("q{q}"));
        if rng.gen_bool(0.4) {
            a.set_final(q);
        }
    }
    for &c in labels {
        for i in 0..=p {
            for q in 0..states {
                if rng.gen_bool(0.4) {
                    a.add_initial((c, i), q);
                }
                for q1 in 0..states {
                    for q2 in 0..states {
                        if rng.gen_bool(0.25) {
                            a.add_transition(q1, q2, (c, i), q);
                        }
                    }
                }
            }
        }
    }
    a
}

/// A random full binary tree with `internal` internal nodes.
pub fn tree<L>(rng: &mut StdRng, internal: usize, label: &mut impl FnMut(&mut StdRng) -> L) -> treeprov::tree::Tree<L> {
    if internal == 0 {
        return treeprov::tree::Tree::leaf(label(rng));
    }
    let left = rng.gen_range(0..internal);
    let l = tree(rng, left, label);
    let r = tree(rng, internal - 1 - left, label);
    treeprov::tree::Tree::node(label(rng), l, r)
}
