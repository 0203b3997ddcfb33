//! Probabilistic instances and counting: pc-instances (formula
//! annotations), pcc-instances (circuit annotations), BID instances, query
//! lineage and exact probability computation.

mod bid;
mod count;
mod formula;
mod junction;
mod pc;
mod pcc;

pub use bid::{bid_to_pcc, BidInstance, BidTranslation};
pub use count::{count_matches, CountResult};
pub use formula::Formula;
pub use junction::{gate_marginals, message_passing_prob};
pub use pc::{pc_to_pcc, pc_to_pcc_on, PcInstance};
pub use pcc::{cc_encode, lineage_circuit, query_probability_pcc, CcEncoding, Lineage, PccInstance};

use num_rational::BigRational;

use crate::automata::TreeAutomaton;
use crate::encoding::KFact;
use crate::error::Result;

/// Probability that the automaton accepts a random world of a
/// pc-instance of width at most `k`.
pub fn query_probability_pc<A>(a: &A, j: &PcInstance, k: usize, cap: usize) -> Result<BigRational>
where
    A: TreeAutomaton<Label = KFact>,
{
    let (pcc, t) = pc_to_pcc(j, k)?;
    Ok(query_probability_pcc(a, &pcc, &t, cap)?.0)
}

/// Probability that the automaton accepts a random world of a BID
/// instance of width at most `k`.
pub fn query_probability_bid<A>(a: &A, b: &BidInstance, k: usize, cap: usize) -> Result<BigRational>
where
    A: TreeAutomaton<Label = KFact>,
{
    let tr = bid_to_pcc(b, k)?;
    Ok(query_probability_pcc(a, &tr.pcc, &tr.decomposition, cap)?.0)
}
