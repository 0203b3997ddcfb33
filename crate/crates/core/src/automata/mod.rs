//! Bottom-up nondeterministic tree automata over full binary trees.
//!
//! Automata are described by the [`TreeAutomaton`] trait, which exposes the
//! initial relation, the transition relation and the final states. Most
//! constructions (lifting, union, product, subset construction, relabeling)
//! are lazy wrappers: states are only built for the labels that actually
//! occur in the trees being processed. [`Bnta`] is the explicit, serializable
//! representation.

mod explicit;
mod ops;

use std::collections::{BTreeSet, HashMap};
use std::fmt::Debug;
use std::hash::Hash;

use num_bigint::BigUint;
use num_traits::Zero;

use crate::tree::Tree;

pub use explicit::{determinize, materialize, Bnta};
pub use ops::{
    intersect, lift_boolean, monotonize, relabel_hom, union, Determinized, Intersect, Lifted, Monotonized, Neuter,
    Relabeled, Union,
};

/// A bottom-up tree automaton. The vectors returned by [`initial`] and
/// [`transition`] must not contain duplicates: run counting relies on it.
///
/// [`initial`]: TreeAutomaton::initial
/// [`transition`]: TreeAutomaton::transition
pub trait TreeAutomaton {
    type Label;
    type State: Clone + Eq + Hash + Ord + Debug;

    /// States reachable at a leaf carrying `label`.
    fn initial(&self, label: &Self::Label) -> Vec<Self::State>;
    /// States reachable at an internal node from the children's states.
    fn transition(&self, left: &Self::State, right: &Self::State, label: &Self::Label) -> Vec<Self::State>;
    fn is_final(&self, q: &Self::State) -> bool;
}

impl<A: TreeAutomaton + ?Sized> TreeAutomaton for &A {
    type Label = A::Label;
    type State = A::State;

    fn initial(&self, label: &Self::Label) -> Vec<Self::State> {
        (**self).initial(label)
    }
    fn transition(&self, left: &Self::State, right: &Self::State, label: &Self::Label) -> Vec<Self::State> {
        (**self).transition(left, right, label)
    }
    fn is_final(&self, q: &Self::State) -> bool {
        (**self).is_final(q)
    }
}

/// The set of states some run reaches at each node.
pub fn reachable_states<A: TreeAutomaton>(a: &A, tree: &Tree<A::Label>) -> Vec<BTreeSet<A::State>> {
    let mut sets: Vec<BTreeSet<A::State>> = vec![BTreeSet::new(); tree.len()];
    for n in tree.postorder() {
        let set = match tree.children(n) {
            None => a.initial(tree.label(n)).into_iter().collect(),
            Some((l, r)) => {
                let mut set = BTreeSet::new();
                for q1 in &sets[l] {
                    for q2 in &sets[r] {
                        set.extend(a.transition(q1, q2, tree.label(n)));
                    }
                }
                set
            }
        };
        sets[n] = set;
    }
    sets
}

pub fn accepts<A: TreeAutomaton>(a: &A, tree: &Tree<A::Label>) -> bool {
    reachable_states(a, tree)[tree.root()].iter().any(|q| a.is_final(q))
}

/// Number of accepting runs, computed bottom-up by counting the runs that
/// end in each state.
pub fn count_runs<A: TreeAutomaton>(a: &A, tree: &Tree<A::Label>) -> BigUint {
    let mut counts: Vec<HashMap<A::State, BigUint>> = vec![HashMap::new(); tree.len()];
    for n in tree.postorder() {
        let mut here: HashMap<A::State, BigUint> = HashMap::new();
        match tree.children(n) {
            None => {
                for q in a.initial(tree.label(n)) {
                    *here.entry(q).or_insert_with(BigUint::zero) += 1u32;
                }
            }
            Some((l, r)) => {
                let (left, right) = (std::mem::take(&mut counts[l]), std::mem::take(&mut counts[r]));
                for (q1, c1) in &left {
                    for (q2, c2) in &right {
                        let prod = c1 * c2;
                        for q in a.transition(q1, q2, tree.label(n)) {
                            *here.entry(q).or_insert_with(BigUint::zero) += &prod;
                        }
                    }
                }
            }
        }
        counts[n] = here;
    }
    counts[tree.root()].iter().filter(|(q, _)| a.is_final(q)).map(|(_, c)| c.clone()).fold(BigUint::zero(), |s, c| s + c)
}

/// Checks that `run` (one state per node) is locally consistent and ends in
/// a final state.
pub fn is_accepting_run<A: TreeAutomaton>(a: &A, tree: &Tree<A::Label>, run: &[A::State]) -> bool {
    let local = (0..tree.len()).all(|n| match tree.children(n) {
        None => a.initial(tree.label(n)).contains(&run[n]),
        Some((l, r)) => a.transition(&run[l], &run[r], tree.label(n)).contains(&run[n]),
    });
    local && a.is_final(&run[tree.root()])
}
