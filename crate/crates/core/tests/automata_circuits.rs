mod common;

use std::collections::HashMap;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::Zero;
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::Rng;
use treeprov::automata::{accepts, count_runs, determinize, materialize, monotonize, Bnta};
use treeprov::circuits::{
    expand_polynomial, stitch, sum_decompositions, Boolean, CircuitBuilder, Fuzzy, Natural, PosBool, Security, Semiring,
    SemiringCircuit, Tropical,
};
use treeprov::relational::decompose_hypergraph;

const LABELS: [char; 2] = ['a', 'b'];

fn labeled_tree(rng: &mut StdRng, p: u8) -> treeprov::tree::Tree<(char, u8)> {
    let n = rng.gen_range(0..6);
    common::tree(rng, n, &mut |r: &mut StdRng| (*LABELS.choose(r).unwrap(), r.gen_range(0..=p)))
}

fn alphabet(p: u8) -> Vec<(char, u8)> {
    LABELS.iter().flat_map(|&c| (0..=p).map(move |i| (c, i))).collect()
}

fn check_laws<K: Semiring>(a: &K, b: &K, c: &K) -> std::result::Result<(), TestCaseError> {
    prop_assert_eq!(a.add(&b.add(c)), a.add(b).add(c));
    prop_assert_eq!(a.mul(&b.mul(c)), a.mul(b).mul(c));
    prop_assert_eq!(a.add(b), b.add(a));
    prop_assert_eq!(a.mul(b), b.mul(a));
    prop_assert_eq!(a.mul(&b.add(c)), a.mul(b).add(&a.mul(c)));
    prop_assert_eq!(a.add(&K::zero()), a.clone());
    prop_assert_eq!(a.mul(&K::one()), a.clone());
    prop_assert_eq!(a.mul(&K::zero()), K::zero());
    Ok(())
}

fn posbool(rng: &mut StdRng) -> PosBool {
    let mut acc = PosBool::zero();
    for _ in 0..rng.gen_range(0..3) {
        let mut m = PosBool::one();
        for _ in 0..rng.gen_range(0..3) {
            m = m.mul(&PosBool::var(["x", "y", "z"].choose(rng).unwrap()));
        }
        acc = acc.add(&m);
    }
    acc
}

fn tropical(rng: &mut StdRng) -> Tropical {
    if rng.gen_bool(0.2) {
        Tropical(None)
    } else {
        Tropical(Some(BigInt::from(rng.gen_range(-5..10))))
    }
}

/// A random ⊕/⊗ circuit over inputs x0..x3.
fn semiring_circuit(rng: &mut StdRng) -> SemiringCircuit {
    let mut c = SemiringCircuit::new("N[X]");
    let mut gates: Vec<usize> = (0..4).map(|i| c.input(format!("x{i}"))).collect();
    for _ in 0..rng.gen_range(1..8) {
        let ins = (0..rng.gen_range(0..3)).map(|_| *gates.choose(rng).unwrap()).collect();
        let g = if rng.gen() { c.plus(ins) } else { c.times(ins) };
        gates.push(g);
    }
    c.output = *gates.last().unwrap();
    c
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(150))]

    #[test]
    fn acceptance_iff_some_run(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let a = common::bnta(&mut rng, 3, &LABELS, 1);
        let t = labeled_tree(&mut rng, 1);
        prop_assert_eq!(accepts(&a, &t), !count_runs(&a, &t).is_zero());
    }

    #[test]
    fn determinized_automata_have_one_run(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let a = common::bnta(&mut rng, 3, &LABELS, 1);
        let d = determinize(&a, 1 << 12).unwrap();
        for _ in 0..5 {
            let t = labeled_tree(&mut rng, 1);
            prop_assert_eq!(count_runs(&d, &t), BigUint::from(accepts(&a, &t) as u8));
            prop_assert_eq!(accepts(&d, &t), accepts(&a, &t));
        }
    }

    #[test]
    fn monotonized_automata_are_monotone(seed in any::<u64>(), p in 1u8..3) {
        let mut rng = common::rng(seed);
        let a = common::bnta(&mut rng, 3, &LABELS, p);
        let m = materialize(&monotonize(&a), &alphabet(p), 1 << 12).unwrap();
        prop_assert!(m.check_monotone().is_ok());
        // Raising annotations never loses acceptance.
        let t = labeled_tree(&mut rng, p);
        let raised = t.map(|_, &(c, i)| (c, (i + 1).min(p)));
        if accepts(&m, &t) {
            prop_assert!(accepts(&m, &raised));
        }
    }

    #[test]
    fn semiring_laws(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let b: Vec<Boolean> = (0..3).map(|_| Boolean(rng.gen())).collect();
        check_laws(&b[0], &b[1], &b[2])?;
        let n: Vec<Natural> = (0..3).map(|_| Natural(BigUint::from(rng.gen_range(0u32..20)))).collect();
        check_laws(&n[0], &n[1], &n[2])?;
        let t: Vec<Tropical> = (0..3).map(|_| tropical(&mut rng)).collect();
        check_laws(&t[0], &t[1], &t[2])?;
        let s: Vec<Security> = (0..3).map(|_| [Security::PUBLIC, Security::SECRET, Security::TOP_SECRET, Security::NEVER][rng.gen_range(0..4)]).collect();
        check_laws(&s[0], &s[1], &s[2])?;
        let f: Vec<Fuzzy> = (0..3).map(|_| Fuzzy(common::probability(&mut rng, 6))).collect();
        check_laws(&f[0], &f[1], &f[2])?;
        let p: Vec<PosBool> = (0..3).map(|_| posbool(&mut rng)).collect();
        check_laws(&p[0], &p[1], &p[2])?;
        // Absorption: a + a·b = a.
        prop_assert_eq!(p[0].add(&p[0].mul(&p[1])), p[0].clone());
    }

    #[test]
    fn polynomials_commute_with_homomorphisms(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let c = semiring_circuit(&mut rng);
        let poly = expand_polynomial(&c, 1 << 12).unwrap();
        let nat: HashMap<String, u32> = (0..4).map(|i| (format!("x{i}"), rng.gen_range(0..4))).collect();
        let k = |x: &str| Natural(BigUint::from(nat[x]));
        prop_assert_eq!(poly.eval(k), c.eval(k));
        let tro: HashMap<String, Tropical> = (0..4).map(|i| (format!("x{i}"), tropical(&mut rng))).collect();
        prop_assert_eq!(poly.eval(|x| tro[x].clone()), c.eval(|x| tro[x].clone()));
        let pb = |x: &str| if x == "x3" { PosBool::one() } else { PosBool::var(x) };
        prop_assert_eq!(poly.eval(pb), c.eval(pb));
    }

    #[test]
    fn stitched_decompositions_are_valid(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let c = common::circuit(&mut rng, 4, 8);
        let Ok(t) = decompose_hypergraph(c.len(), &c.hyperedges(), 4) else { return Ok(()) };
        // A second circuit reading one gate of c per bag and or-ing the
        // negations up the skeleton, decomposed along the same skeleton.
        let mut b = CircuitBuilder::new();
        let mut binding = HashMap::new();
        let mut doms = vec![Vec::new(); t.len()];
        let mut acc: Vec<Option<usize>> = vec![None; t.len()];
        for n in t.postorder() {
            let mut ins: Vec<usize> = t.bags[n].children.iter().filter_map(|&ch| acc[ch]).collect();
            if let Some(&g) = t.bags[n].dom.choose(&mut rng) {
                let x = b.input(format!("s{g}"));
                let y = b.not(x);
                binding.insert(x, g);
                doms[n].extend([x, y]);
                ins.push(y);
            }
            if !ins.is_empty() {
                let o = b.or(ins.clone());
                doms[n].extend(ins.iter().copied().chain([o]));
                acc[n] = Some(o);
            }
        }
        let Some(o) = acc[t.root] else { return Ok(()) };
        let c2 = b.finish(o);
        for d in doms.iter_mut() {
            d.sort();
            d.dedup();
        }
        let children = t.bags.iter().map(|b| b.children.clone()).collect();
        let t2 = treeprov::relational::TreeDecomposition::from_parts(doms, children, t.root);
        prop_assert!(c2.check_decomposition(&t2));
        let (s, image) = stitch(&c, &c2, &binding).unwrap();
        let st = sum_decompositions(&t, &t2, &c2, &image).unwrap();
        prop_assert!(s.check_decomposition(&st));
        prop_assert!(s.validate().is_ok());
    }
}

#[test]
fn materialized_bnta_is_itself() {
    let mut rng = common::rng(7);
    let a: Bnta<(char, u8)> = common::bnta(&mut rng, 3, &LABELS, 1);
    let m = materialize(&a, &alphabet(1), 1 << 10).unwrap();
    for _ in 0..50 {
        let t = labeled_tree(&mut rng, 1);
        assert_eq!(count_runs(&m, &t), count_runs(&a, &t));
    }
}

#[test]
fn fuzzy_bounds() {
    let half = Fuzzy(BigRational::new(1.into(), 2.into()));
    assert_eq!(half.add(&Fuzzy::one()), Fuzzy::one());
    assert_eq!(half.mul(&Fuzzy::zero()), Fuzzy::zero());
}
