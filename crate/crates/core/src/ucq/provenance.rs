//! Provenance of UCQs on treelike instances.

use super::compile::{compile_bag, compile_bool, DupMerge, ExactlyOne};
use super::{Atom, Ucq};
use crate::automata::{intersect, Union};
use crate::circuits::SemiringCircuit;
use crate::encoding::{encode, TreeEncoding};
use crate::error::{Error, Result};
use crate::provcirc::{nx_provenance_into, query_provenance_circuit, Budget, NodeInput, ProvenanceResult};
use crate::relational::{tree_decomposition, Instance};

/// Name of the unary relation marking the value of variable `var`. The
/// leading `#` keeps it apart from user relations.
pub fn p_relation(var: &str) -> String {
    format!("#{var}")
}

/// Boolean provenance of a Boolean UCQ, through its compiled automaton.
pub fn bool_provenance(
    q: &Ucq,
    i: &Instance,
    k: usize,
    cap: usize,
) -> Result<(ProvenanceResult<<Union<super::MatchAutomaton> as crate::automata::TreeAutomaton>::State>, TreeEncoding)> {
    query_provenance_circuit(&compile_bool(q, k)?, i, k, cap)
}

/// `N[X]` provenance of a Boolean UCQ, one variable per fact named after
/// its id.
///
/// Each disjunct gets a fresh unary relation `P_x` per variable, with a
/// `P_x` fact on every element; its bag automaton is intersected with an
/// automaton requiring exactly one `P_x` fact per variable, so that a
/// choice of `P_x` facts pins down a match. The `P_x` nodes are annotated 0
/// and the subset automaton is allowed to read them as present, each
/// choice giving a separate run; summing over valuations of total weight
/// `|atoms|` then counts every match once. Disjuncts share the tree and
/// the input gates and are summed at the top.
pub fn nx_provenance(q: &Ucq, i: &Instance, k: usize, cap: usize) -> Result<SemiringCircuit> {
    if !q.is_boolean() {
        return Err(Error::input("provenance needs a Boolean query"));
    }
    let mut vars: Vec<String> = Vec::new();
    for d in &q.disjuncts {
        for v in d.vars() {
            if !vars.contains(&v) {
                vars.push(v);
            }
        }
    }
    let mut sig = i.signature().clone();
    for v in &vars {
        sig.add(&p_relation(v), 1)?;
    }
    let mut aug = Instance::new(sig);
    for f in i.facts() {
        let args: Vec<&str> = f.args.iter().map(|&e| i.element_name(e)).collect();
        aug.add_fact(&f.rel, &args, Some(&f.id))?;
    }
    for v in &vars {
        for e in 0..i.num_elements() {
            let name = i.element_name(e);
            aug.add_fact(&p_relation(v), &[name], Some(&format!("#{v}:{name}")))?;
        }
    }
    let enc = encode(&aug, &tree_decomposition(&aug, k)?)?;
    let inputs: Vec<NodeInput> = enc
        .node_fact
        .iter()
        .map(|f| match f {
            Some(f) if *f < i.len() => NodeInput::Named(i.fact(*f).id.clone()),
            _ => NodeInput::Fixed(0),
        })
        .collect();
    let p = u8::try_from(q.max_atoms()).map_err(|_| Error::input("too many atoms"))?;

    let mut c = SemiringCircuit::new("N[X]");
    let mut outs = Vec::new();
    for d in &q.disjuncts {
        let dvars = d.vars();
        let rels: Vec<String> = dvars.iter().map(|v| p_relation(v)).collect();
        let mut marked = d.clone();
        for (v, r) in dvars.iter().zip(&rels) {
            marked.atoms.push(Atom { rel: r.clone(), args: vec![v.clone()] });
        }
        let a = DupMerge::new(intersect(compile_bag(&marked, k, p)?, ExactlyOne::new(&rels)), &rels);
        outs.push(nx_provenance_into(&mut c, &a, &enc.tree, &inputs, p, Budget::Exactly(d.atoms.len()), cap)?);
    }
    c.output = if outs.len() == 1 { outs[0] } else { c.plus(outs) };
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuits::{expand_polynomial, Natural};
    use crate::relational::Signature;
    use crate::ucq::{nx_provenance_bruteforce, parse_ucq};
    use num_bigint::BigUint;

    #[test]
    fn example_polynomial() {
        let mut i = Instance::new(Signature::new().with("R", 2));
        i.add_fact("R", &["a", "a"], None).unwrap();
        i.add_fact("R", &["b", "c"], None).unwrap();
        i.add_fact("R", &["c", "b"], None).unwrap();
        let q = parse_ucq("R(x,y), R(y,x)").unwrap();
        let c = nx_provenance(&q, &i, 1, 1 << 16).unwrap();
        let poly = expand_polynomial(&c, 1 << 16).unwrap();
        assert_eq!(poly.to_string(), "F1^2 + 2*F2*F3");
        assert_eq!(poly, nx_provenance_bruteforce(&q, &i));
        assert_eq!(c.eval(|_| Natural(BigUint::from(1u8))), Natural(BigUint::from(3u8)));
    }
}
