mod common;

use common::prob::{bid_worlds, pc_bruteforce, random_bid, random_pc, world_instance};

use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::{One, Zero};
use proptest::prelude::*;
use rand::Rng;
use treeprov::prob::{
    bid_to_pcc, count_matches, gate_marginals, pc_to_pcc, query_probability_bid, query_probability_pc,
    query_probability_pcc, BidInstance, Formula, PcInstance,
};
use treeprov::relational::Instance;
use treeprov::ucq::{compile_bool, count_projections, holds, Ucq};

const CAP: usize = 1 << 16;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn pc_probability_matches_bruteforce(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let j = random_pc(&mut rng);
        let q = common::ucq(&mut rng, 2, 2, 2);
        let expected = pc_bruteforce(&q, &j);
        let a = compile_bool(&q, 3).unwrap();
        prop_assert_eq!(query_probability_pc(&a, &j, 3, CAP).unwrap(), expected, "q = {}", q);
    }

    #[test]
    fn pc_translation_preserves_worlds(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let j = random_pc(&mut rng);
        let (pcc, t) = pc_to_pcc(&j, 3).unwrap();
        let (_, edges) = pcc.hypergraph();
        prop_assert!(treeprov::relational::check_hypergraph(&edges, &t));
        let names: Vec<String> = j.events.keys().cloned().collect();
        for mask in 0u32..1 << names.len() {
            let value = |e: &str| mask >> names.iter().position(|n| n == e).unwrap() & 1 == 1;
            let by_gate = |g: usize| value(pcc.circuit.input_name(g));
            let (got, want) = (pcc.world(by_gate), j.world(&value));
            prop_assert_eq!(got.facts(), want.facts());
        }
    }

    #[test]
    fn bid_translation_preserves_distribution(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let bid = random_bid(&mut rng, 5);
        let tr = bid_to_pcc(&bid, 2).unwrap();
        let (_, edges) = tr.pcc.hypergraph();
        prop_assert!(treeprov::relational::check_hypergraph(&edges, &tr.decomposition));
        let inputs = tr.pcc.circuit.inputs();
        prop_assume!(inputs.len() <= 14);
        let mut dist: BTreeMap<Vec<usize>, BigRational> = BTreeMap::new();
        for mask in 0u32..1 << inputs.len() {
            let nu = |g: usize| mask >> inputs.iter().position(|&x| x == g).unwrap() & 1 == 1;
            let values = tr.pcc.circuit.eval_all(nu);
            let facts: Vec<usize> = (0..bid.instance.len()).filter(|&f| values[tr.pcc.phi[f]]).collect();
            *dist.entry(facts).or_insert_with(BigRational::zero) += tr.pcc.valuation_probability(nu);
        }
        dist.retain(|_, p| !p.is_zero());
        prop_assert_eq!(dist, bid_worlds(&bid));
    }

    #[test]
    fn bid_choice_gates_have_subtree_mass(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let bid = random_bid(&mut rng, 6);
        let tr = bid_to_pcc(&bid, 2).unwrap();
        let gates: Vec<usize> = tr.choice_gates.iter().map(|(g, _)| *g).collect();
        let (_, edges) = tr.pcc.hypergraph();
        let ne = bid.instance.num_elements();
        // Restrict the joint decomposition to gates for message passing.
        let doms: Vec<Vec<usize>> = tr.decomposition.bags.iter()
            .map(|b| b.dom.iter().filter(|&&v| v >= ne).map(|&v| v - ne).collect()).collect();
        let children = tr.decomposition.bags.iter().map(|b| b.children.clone()).collect();
        let t = treeprov::relational::TreeDecomposition::from_parts(doms, children, tr.decomposition.root);
        prop_assert!(!edges.is_empty() || gates.is_empty());
        let marg = gate_marginals(&tr.pcc.circuit, &t, &tr.pcc.prob, &gates).unwrap();
        let expected: Vec<BigRational> = tr.choice_gates.iter().map(|(_, w)| w.clone()).collect();
        prop_assert_eq!(marg, expected);
    }

    #[test]
    fn bid_probability_matches_bruteforce(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let bid = random_bid(&mut rng, 6);
        let q = common::ucq(&mut rng, 2, 2, 2);
        let expected: BigRational = bid_worlds(&bid)
            .into_iter()
            .filter(|(w, _)| holds(&q, &world_instance(&bid.instance, w)))
            .map(|(_, p)| p)
            .sum();
        let a = compile_bool(&q, 2).unwrap();
        prop_assert_eq!(query_probability_bid(&a, &bid, 2, CAP).unwrap(), expected, "q = {}", q);
    }

    #[test]
    fn counting_matches_projections(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let i = common::instance(&mut rng, 5, 4, 1);
        let mut q = common::ucq(&mut rng, 2, 2, 2);
        let shared: Vec<String> = q.disjuncts.iter()
            .map(|d| d.vars())
            .reduce(|a, b| a.into_iter().filter(|v| b.contains(v)).collect())
            .unwrap();
        q.free = shared.into_iter().take(rng.gen_range(0..=1)).collect();
        let r = count_matches(&q, &i, 2, CAP).unwrap();
        prop_assert_eq!(r.count, count_projections(&q, &i).into(), "q = {}", q);
    }
}

#[test]
fn single_block_worlds() {
    let mut i = Instance::new(common::signature());
    i.add_fact("R", &["a", "b"], Some("f1")).unwrap();
    i.add_fact("R", &["a", "c"], Some("f2")).unwrap();
    let bid = BidInstance {
        instance: i,
        key_positions: [("R".to_string(), vec![0])].into_iter().collect(),
        prob: vec![BigRational::new(3.into(), 10.into()), BigRational::new(5.into(), 10.into())],
    };
    let w = bid_worlds(&bid);
    assert_eq!(w[&vec![0]], BigRational::new(3.into(), 10.into()));
    assert_eq!(w[&vec![1]], BigRational::new(1.into(), 2.into()));
    assert_eq!(w[&vec![]], BigRational::new(1.into(), 5.into()));
    let q = Ucq::parse("R(x,y)").unwrap();
    let p = query_probability_bid(&compile_bool(&q, 1).unwrap(), &bid, 1, CAP).unwrap();
    assert_eq!(p, BigRational::new(4.into(), 5.into()));
}

#[test]
fn negated_event_condition() {
    let mut i = Instance::new(common::signature());
    i.add_fact("S", &["a"], None).unwrap();
    let events: BTreeMap<String, BigRational> = [
        ("x".to_string(), BigRational::new(1.into(), 2.into())),
        ("y".to_string(), BigRational::new(1.into(), 3.into())),
    ]
    .into_iter()
    .collect();
    let j = PcInstance { instance: i, cond: vec![Formula::parse("x & !y").unwrap()], events };
    let a = compile_bool(&Ucq::parse("S(x)").unwrap(), 2).unwrap();
    assert_eq!(query_probability_pc(&a, &j, 2, CAP).unwrap(), BigRational::new(1.into(), 3.into()));
    let (pcc, t) = pc_to_pcc(&j, 2).unwrap();
    let (p, lineage) = query_probability_pcc(&a, &pcc, &t, CAP).unwrap();
    assert_eq!(p, BigRational::new(1.into(), 3.into()));
    assert!(lineage.circuit.check_decomposition(&lineage.decomposition));
}

#[test]
fn counting_example() {
    let mut i = Instance::new(common::signature());
    for (a, b) in [("a", "b"), ("a", "c"), ("b", "c"), ("c", "c")] {
        i.add_fact("R", &[a, b], None).unwrap();
    }
    let q = Ucq::parse("q(x) :- R(x,y)").unwrap();
    let r = count_matches(&q, &i, 2, CAP).unwrap();
    assert_eq!(r.count, 3u32.into());
    assert_eq!(r.domain_size, 3);
    assert_eq!(r.probability, BigRational::one());
}

#[test]
fn lineage_width_does_not_grow() {
    let a = compile_bool(&Ucq::parse("R(x,y), R(y,z)").unwrap(), 1).unwrap();
    let mut widths = Vec::new();
    for n in [16, 64, 256] {
        let mut i = Instance::new(common::signature());
        for k in 0..n {
            i.add_fact("R", &[&format!("c{k}"), &format!("c{}", k + 1)], None).unwrap();
        }
        let cond = (0..n).map(|k| Formula::Var(format!("e{k}"))).collect();
        let events = (0..n).map(|k| (format!("e{k}"), BigRational::new(1.into(), 2.into()))).collect();
        let (pcc, t) = pc_to_pcc(&PcInstance { instance: i, cond, events }, 2).unwrap();
        let (p, lineage) = query_probability_pcc(&a, &pcc, &t, CAP).unwrap();
        assert!(p > BigRational::zero());
        widths.push(lineage.decomposition.width());
    }
    assert!(widths.windows(2).all(|w| w[0] == w[1]), "{widths:?}");
}
