mod common;

use std::collections::HashMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::Rng;
use treeprov::automata::{accepts, count_runs, lift_boolean, materialize, monotonize, reachable_states};
use treeprov::circuits::{expand_polynomial, GateKind, Monomial, Polynomial, PosBool, Tropical};
use treeprov::encoding::{decode_bag, encode, enumerate_alphabet};
use treeprov::prob::message_passing_prob;
use treeprov::provcirc::{
    bool_provenance_circuit, monotone_provenance_circuit, node_inputs, nx_provenance_circuit, Budget, NodeInput,
};
use treeprov::relational::{decompose_hypergraph, tree_decomposition};
use treeprov::tree::Tree;
use treeprov::ucq::{bag_holds, bool_provenance, compile_bag, compile_bool, nx_provenance, tropical_bruteforce};

const CAP: usize = 1 << 16;
const LABELS: [char; 2] = ['a', 'b'];

fn char_tree(rng: &mut StdRng, max_internal: usize) -> Tree<char> {
    let n = rng.gen_range(0..=max_internal);
    common::tree(rng, n, &mut |r: &mut StdRng| *LABELS.choose(r).unwrap())
}

fn valuation(n: usize, mask: usize) -> HashMap<String, bool> {
    (0..n).map(|i| (format!("n{i}"), mask >> i & 1 == 1)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn bool_provenance_matches_every_valuation(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let a = common::bnta(&mut rng, 3, &LABELS, 1);
        let t = char_tree(&mut rng, 4);
        let res = bool_provenance_circuit(&a, &t, &node_inputs(&t), CAP).unwrap();
        prop_assert!(res.circuit.check_decomposition(&res.decomposition));
        prop_assert!(res.decomposition.len() == t.len());
        for mask in 0..1usize << t.len() {
            let nu = valuation(t.len(), mask);
            let annotated = t.map(|n, &c| (c, (mask >> n & 1) as u8));
            let values = res.circuit.eval_all(|g| nu[res.circuit.input_name(g)]);
            prop_assert_eq!(values[res.circuit.output], accepts(&a, &annotated));
            // Every state gate tells whether its state is reachable there.
            let reach = reachable_states(&a, &annotated);
            for n in 0..t.len() {
                for (q, g) in &res.state_gates[n] {
                    prop_assert_eq!(values[*g], reach[n].contains(q));
                }
                for q in &reach[n] {
                    prop_assert!(res.state_gates[n].iter().any(|(s, _)| s == q));
                }
            }
        }
    }

    #[test]
    fn monotone_circuits_need_no_negation(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let a = common::bnta(&mut rng, 3, &LABELS, 1);
        let m = materialize(&monotonize(&a), &[('a', 0), ('a', 1), ('b', 0), ('b', 1)], CAP).unwrap();
        let t = char_tree(&mut rng, 4);
        let res = monotone_provenance_circuit(&m, &t, &node_inputs(&t), CAP).unwrap();
        prop_assert!(!res.circuit.has_not_gates());
        for mask in 0..1usize << t.len() {
            let nu = valuation(t.len(), mask);
            let annotated = t.map(|n, &c| (c, (mask >> n & 1) as u8));
            prop_assert_eq!(res.circuit.eval_named(&nu).unwrap(), accepts(&m, &annotated));
        }
    }

    #[test]
    fn nx_provenance_counts_runs(seed in any::<u64>(), p in 1u8..3, exact in any::<bool>()) {
        let mut rng = common::rng(seed);
        let a = common::bnta(&mut rng, 2, &LABELS, p);
        let t = char_tree(&mut rng, 3);
        let budget = if exact { Budget::Exactly(rng.gen_range(0..=t.len() * p as usize)) } else { Budget::All };
        let c = nx_provenance_circuit(&a, &t, &node_inputs(&t), p, budget, CAP).unwrap();
        let got = expand_polynomial(&c, CAP).unwrap();
        let mut want = Polynomial::zero();
        let base = p as usize + 1;
        for code in 0..base.pow(t.len() as u32) {
            let ann: Vec<u8> = (0..t.len()).map(|n| (code / base.pow(n as u32) % base) as u8).collect();
            if let Budget::Exactly(l) = budget {
                if ann.iter().map(|&x| x as usize).sum::<usize>() != l {
                    continue;
                }
            }
            let runs = count_runs(&a, &t.map(|n, &c| (c, ann[n])));
            if runs.is_zero() {
                continue;
            }
            let mono: Monomial = (0..t.len()).filter(|&n| ann[n] > 0).map(|n| (format!("n{n}"), ann[n] as u32)).collect();
            want.add_term(mono, runs);
        }
        prop_assert_eq!(got, want);
    }

    #[test]
    fn message_passing_matches_bruteforce(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let c = common::circuit(&mut rng, 12, 14);
        let Ok(t) = decompose_hypergraph(c.len(), &c.hyperedges(), 4) else { return Ok(()) };
        let inputs = c.inputs();
        let pi: HashMap<usize, BigRational> = inputs.iter().map(|&g| (g, common::probability(&mut rng, 5))).collect();
        let mut want = BigRational::zero();
        for mask in 0..1u32 << inputs.len() {
            let on = |k: usize| mask >> k & 1 == 1;
            if c.eval(|g| on(inputs.iter().position(|&x| x == g).unwrap())) {
                let mut w = BigRational::one();
                for (k, g) in inputs.iter().enumerate() {
                    w *= if on(k) { pi[g].clone() } else { BigRational::one() - &pi[g] };
                }
                want += w;
            }
        }
        prop_assert_eq!(message_passing_prob(&c, &t, &pi).unwrap(), want);
    }

    #[test]
    fn nx_specializations_agree(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let i = common::instance(&mut rng, 6, 4, 2);
        let q = common::ucq(&mut rng, 2, 3, 3);
        let c = nx_provenance(&q, &i, 2, CAP).unwrap();
        let (b, _) = bool_provenance(&q, &i, 2, CAP).unwrap();
        let pb = c.eval(|x| PosBool::var(x));
        for mask in 0..1usize << i.len() {
            let nu: HashMap<String, bool> = i.facts().iter().enumerate().map(|(f, fact)| (fact.id.clone(), mask >> f & 1 == 1)).collect();
            let bv = b.circuit.eval(|g| nu.get(b.circuit.input_name(g)).copied().unwrap_or(true));
            prop_assert_eq!(pb.eval(|x| nu[x]), bv, "q = {}, I = {}", q, i);
        }
        let cost: Vec<i64> = (0..i.len()).map(|_| rng.gen_range(0..6)).collect();
        let ids: HashMap<String, usize> = i.facts().iter().enumerate().map(|(f, fact)| (fact.id.clone(), f)).collect();
        let trop = c.eval(|x| Tropical(Some(BigInt::from(cost[ids[x]]))));
        prop_assert_eq!(trop.0, tropical_bruteforce(&q, &i, |f| BigInt::from(cost[f])));
    }

    #[test]
    fn monotonized_query_automata_accept_the_same(seed in any::<u64>(), mask in any::<u64>()) {
        let mut rng = common::rng(seed);
        let i = common::instance(&mut rng, 7, 5, 2);
        let q = common::ucq(&mut rng, 2, 3, 3);
        let enc = encode(&i, &tree_decomposition(&i, 2).unwrap()).unwrap();
        let tree = enc.annotate(|f| (mask >> f & 1) as u8);
        let lifted = lift_boolean(compile_bool(&q, 2).unwrap());
        prop_assert_eq!(accepts(&monotonize(&lifted), &tree), accepts(&lifted, &tree));
    }

    #[test]
    fn bag_automata_match_bag_semantics(seed in any::<u64>(), p in 1u8..3) {
        let mut rng = common::rng(seed);
        let i = common::instance(&mut rng, 6, 4, 2);
        let cq = common::cq(&mut rng, 3, 3);
        let enc = encode(&i, &tree_decomposition(&i, 2).unwrap()).unwrap();
        let mult: Vec<u8> = (0..i.len()).map(|_| rng.gen_range(0..=p)).collect();
        let tree = enc.annotate(|f| mult[f]);
        let bag = decode_bag(&tree).expect("valid");
        let a = compile_bag(&cq, 2, p).unwrap();
        prop_assert_eq!(accepts(&a, &tree), bag_holds(&cq, &bag), "q = {}, I = {}, m = {:?}", cq, i, mult);
    }
}

/// Provenance circuits of a fixed automaton grow linearly with the tree and
/// keep the same decomposition width.
#[test]
fn provenance_size_is_linear() {
    let a = materialize(&lift_boolean(compile_bool(&treeprov::ucq::parse_ucq("R(x,y), S(y)").unwrap(), 1).unwrap()),
        &enumerate_alphabet(1, &common::signature()).into_iter().flat_map(|l| [(l.clone(), 0), (l, 1)]).collect::<Vec<_>>(),
        CAP,
    )
    .unwrap();
    let label = enumerate_alphabet(1, &common::signature()).into_iter().find(|l| l.dom_size() == 2).unwrap();
    let mut ratios = Vec::new();
    let mut widths = Vec::new();
    for size in [11, 101, 1001] {
        let t = treeprov::tree::balanced_shape(size).map(|_, _| label.clone());
        let res = bool_provenance_circuit(&a, &t, &node_inputs(&t), CAP).unwrap();
        ratios.push(res.circuit.len() as f64 / t.len() as f64);
        widths.push(res.decomposition.width());
        assert!(res.circuit.gates.iter().filter(|g| g.kind == GateKind::Input).count() == t.len());
    }
    assert!(widths.windows(2).all(|w| w[0] == w[1]), "{widths:?}");
    let (lo, hi) = ratios.iter().fold((f64::MAX, 0f64), |(l, h), &r| (l.min(r), h.max(r)));
    assert!(hi / lo < 1.05, "{ratios:?}");
}

#[test]
fn named_inputs_can_be_fixed() {
    let mut rng = common::rng(3);
    let a = common::bnta(&mut rng, 3, &LABELS, 1);
    let t = char_tree(&mut rng, 3);
    let inputs: Vec<NodeInput> = (0..t.len()).map(|n| if n % 2 == 0 { NodeInput::Fixed(1) } else { NodeInput::Named(format!("n{n}")) }).collect();
    let res = bool_provenance_circuit(&a, &t, &inputs, CAP).unwrap();
    for mask in 0..1usize << t.len() {
        let mask = mask | (0..t.len()).step_by(2).map(|n| 1 << n).sum::<usize>();
        let nu = valuation(t.len(), mask);
        let annotated = t.map(|n, &c| (c, (mask >> n & 1) as u8));
        assert_eq!(res.circuit.eval(|g| nu[res.circuit.input_name(g)]), accepts(&a, &annotated));
    }
}
