//! Possible-world enumeration and random documents for PrXML tests.

use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::rngs::StdRng;
use rand::Rng;
use treeprov::prxml::{EdgeAnn, NodeKind, PrXmlDoc, PrXmlNode, XmlTree};

pub type Dist<T> = BTreeMap<T, BigRational>;

fn add<T: Ord>(d: &mut Dist<T>, k: T, p: BigRational) {
    if !p.is_zero() {
        *d.entry(k).or_insert_with(BigRational::zero) += p;
    }
}

fn concat(a: &Dist<Vec<XmlTree>>, b: &Dist<Vec<XmlTree>>) -> Dist<Vec<XmlTree>> {
    let mut out = Dist::new();
    for (fa, pa) in a {
        for (fb, pb) in b {
            let mut f = fa.clone();
            f.extend(fb.iter().cloned());
            add(&mut out, f, pa * pb);
        }
    }
    out
}

fn unit() -> Dist<Vec<XmlTree>> {
    [(Vec::new(), BigRational::one())].into_iter().collect()
}

/// Distribution of the forest a mux/ind node stands for.
fn forest(n: &PrXmlNode) -> Dist<Vec<XmlTree>> {
    let prob = |a: &EdgeAnn| match a {
        EdgeAnn::Prob(p) => p.clone(),
        _ => BigRational::one(),
    };
    match &n.kind {
        NodeKind::Regular(l) => {
            let mut kids = unit();
            for (_, c) in &n.children {
                kids = concat(&kids, &forest(c));
            }
            let mut out = Dist::new();
            for (f, p) in kids {
                add(&mut out, vec![XmlTree { label: l.clone(), children: f }], p);
            }
            out
        }
        NodeKind::Ind => {
            let mut acc = unit();
            for (a, c) in &n.children {
                let p = prob(a);
                let mut opt = Dist::new();
                for (f, q) in forest(c) {
                    add(&mut opt, f, &p * q);
                }
                add(&mut opt, Vec::new(), BigRational::one() - &p);
                acc = concat(&acc, &opt);
            }
            acc
        }
        NodeKind::Mux => {
            let mut out = Dist::new();
            let mut rest = BigRational::one();
            for (a, c) in &n.children {
                let p = prob(a);
                rest -= &p;
                for (f, q) in forest(c) {
                    add(&mut out, f, &p * q);
                }
            }
            add(&mut out, Vec::new(), rest);
            out
        }
        NodeKind::Fie => panic!("fie nodes need valuations"),
    }
}

pub fn muxind_worlds(d: &PrXmlDoc) -> Dist<XmlTree> {
    forest(&d.root).into_iter().map(|(mut f, p)| (f.pop().unwrap(), p)).collect()
}

/// Sums `weight(nu)` into `f(nu)` over all valuations of the events.
pub fn over_valuations<T: Ord>(events: &BTreeMap<String, BigRational>, f: impl Fn(&dyn Fn(&str) -> bool) -> T) -> Dist<T> {
    let names: Vec<&String> = events.keys().collect();
    assert!(names.len() <= 16);
    let mut out = Dist::new();
    for mask in 0u32..1 << names.len() {
        let nu = |e: &str| mask >> names.iter().position(|n| n.as_str() == e).unwrap() & 1 == 1;
        let w: BigRational = names
            .iter()
            .enumerate()
            .map(|(i, n)| if mask >> i & 1 == 1 { events[*n].clone() } else { BigRational::one() - &events[*n] })
            .product();
        add(&mut out, f(&nu), w);
    }
    out
}

pub fn fie_worlds(d: &PrXmlDoc) -> Dist<XmlTree> {
    over_valuations(&d.events, |nu| d.world(nu).unwrap())
}

fn prob(rng: &mut StdRng) -> BigRational {
    let d = rng.gen_range(2..=4i64);
    BigRational::new(rng.gen_range(0..=d).into(), d.into())
}

fn node(rng: &mut StdRng, depth: usize, budget: &mut usize) -> PrXmlNode {
    let label = ["a", "b", "c"][rng.gen_range(0..3)];
    let n = if depth == 0 { 0 } else { rng.gen_range(0..=3) };
    let kind = if *budget > 0 && depth > 0 { rng.gen_range(0..5) } else { 0 };
    match kind {
        3 => {
            *budget -= 1;
            let kids = (0..n.max(1)).map(|_| (prob(rng), node(rng, depth - 1, budget))).collect();
            PrXmlNode::ind(kids)
        }
        4 => {
            *budget -= 1;
            let m = n.max(1);
            let d = m as i64 + 1;
            let mut left = d;
            let mut kids = Vec::new();
            for _ in 0..m {
                let p = rng.gen_range(0..=left.min(2));
                left -= p;
                kids.push((BigRational::new(p.into(), d.into()), node(rng, depth - 1, budget)));
            }
            PrXmlNode::mux(kids)
        }
        _ => PrXmlNode::regular(label, (0..n).map(|_| node(rng, depth - 1, budget)).collect()),
    }
}

/// A random mux/ind document with at most `choices` choice nodes.
pub fn muxind_doc(rng: &mut StdRng, choices: usize) -> PrXmlDoc {
    let mut budget = choices;
    let root = PrXmlNode::regular("r", (0..rng.gen_range(1..=3)).map(|_| node(rng, 3, &mut budget)).collect());
    PrXmlDoc::new(root, BTreeMap::new()).unwrap()
}

/// A random fie document whose formulas use events e0..e(n-1).
pub fn fie_doc(rng: &mut StdRng, events: usize) -> PrXmlDoc {
    use treeprov::prob::Formula;
    let names: Vec<String> = (0..events).map(|e| format!("e{e}")).collect();
    fn go(rng: &mut StdRng, names: &[String], depth: usize) -> PrXmlNode {
        let n = if depth == 0 { 0 } else { rng.gen_range(0..=3) };
        if depth > 0 && rng.gen_bool(0.4) {
            let kids = (0..n.max(1))
                .map(|_| {
                    let x = Formula::Var(names[rng.gen_range(0..names.len())].clone());
                    let f = match rng.gen_range(0..3) {
                        0 => x,
                        1 => Formula::Not(Box::new(x)),
                        _ => Formula::And(vec![x, Formula::Var(names[rng.gen_range(0..names.len())].clone())]),
                    };
                    (f, go(rng, names, depth - 1))
                })
                .collect();
            PrXmlNode::fie(kids)
        } else {
            let label = ["a", "b", "c"][rng.gen_range(0..3)];
            PrXmlNode::regular(label, (0..n).map(|_| go(rng, names, depth - 1)).collect())
        }
    }
    let root = PrXmlNode::regular("r", (0..rng.gen_range(1..=3)).map(|_| go(rng, &names, 3)).collect());
    let ev = names.iter().map(|e| (e.clone(), prob(rng))).collect();
    PrXmlDoc::new(root, ev).unwrap()
}

/// A mux/ind document with at most 12 events once converted to fie.
pub fn small_muxind(rng: &mut StdRng) -> PrXmlDoc {
    loop {
        let d = muxind_doc(rng, 4);
        if treeprov::prxml::to_fie(&d).unwrap().events.len() <= 12 {
            return d;
        }
    }
}
