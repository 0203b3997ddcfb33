//! Counting answers of a query with free variables through a
//! probabilistic instance.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::One;

use super::bid::{bid_to_pcc, BidInstance};
use super::pcc::query_probability_pcc;
use crate::error::{Error, Result};
use crate::ucq::{compile_bool, p_relation, Atom, Ucq};
use crate::relational::Instance;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CountResult {
    pub count: BigUint,
    /// Probability of the rewritten Boolean query on the BID instance.
    pub probability: BigRational,
    pub domain_size: usize,
}

/// Number of answer tuples of `q` on `i`. Each free variable `x` gets a
/// block of facts `P_x(a)`, one per element, each of probability
/// `1/|dom|`; the certain facts of `i` form single-fact blocks. The
/// Boolean query `q ∧ ⋀ P_x(x)` then holds with probability
/// `count / |dom|^|x|`.
pub fn count_matches(q: &Ucq, i: &Instance, k: usize, cap: usize) -> Result<CountResult> {
    let n = i.num_elements();
    let mut sig = i.signature().clone();
    for x in &q.free {
        sig.add(&p_relation(x), 1)?;
    }
    let mut inst = Instance::new(sig);
    for f in i.facts() {
        let args: Vec<&str> = f.args.iter().map(|&e| i.element_name(e)).collect();
        inst.add_fact(&f.rel, &args, Some(&f.id))?;
    }
    let mut bid = BidInstance::tuple_independent(inst, vec![BigRational::one(); i.len()]);
    for x in &q.free {
        bid.key_positions.insert(p_relation(x), Vec::new());
        for e in 0..n {
            let name = i.element_name(e);
            bid.instance.add_fact(&p_relation(x), &[name], Some(&format!("#{x}:{name}")))?;
            bid.prob.push(BigRational::new(BigInt::one(), BigInt::from(n)));
        }
    }
    let mut boolean = q.clone();
    boolean.free.clear();
    for d in &mut boolean.disjuncts {
        for x in &q.free {
            d.atoms.push(Atom { rel: p_relation(x), args: vec![x.clone()] });
        }
    }
    let tr = bid_to_pcc(&bid, k)?;
    let (probability, _) = query_probability_pcc(&compile_bool(&boolean, k)?, &tr.pcc, &tr.decomposition, cap)?;
    let scaled = &probability * BigRational::from_integer(BigInt::from(n).pow(q.free.len() as u32));
    if !scaled.is_integer() {
        return Err(Error::Invalid(format!("non-integral count {scaled}")));
    }
    let count = scaled.to_integer().to_biguint().expect("counts are nonnegative");
    Ok(CountResult { count, probability, domain_size: n })
}
