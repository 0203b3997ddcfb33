//! Lazy closure constructions on tree automata.

use std::collections::BTreeSet;
use std::marker::PhantomData;

use super::TreeAutomaton;
use crate::encoding::KFact;

/// Labels that have a fact-free counterpart.
pub trait Neuter {
    fn neuter(&self) -> Self;
}

impl Neuter for KFact {
    fn neuter(&self) -> Self {
        KFact::neuter(self)
    }
}

/// Runs the inner automaton on `(τ, b)` labels, reading `(τ, 0)` as the
/// neutered label and any nonzero annotation as `τ` itself.
#[derive(Clone, Debug)]
pub struct Lifted<A>(pub A);

pub fn lift_boolean<A: TreeAutomaton>(a: A) -> Lifted<A>
where
    A::Label: Neuter,
{
    Lifted(a)
}

impl<A: TreeAutomaton> Lifted<A>
where
    A::Label: Neuter,
{
    fn read<R>(&self, label: &(A::Label, u8), f: impl FnOnce(&A::Label) -> R) -> R {
        if label.1 == 0 {
            f(&label.0.neuter())
        } else {
            f(&label.0)
        }
    }
}

impl<A: TreeAutomaton> TreeAutomaton for Lifted<A>
where
    A::Label: Neuter,
{
    type Label = (A::Label, u8);
    type State = A::State;

    fn initial(&self, label: &Self::Label) -> Vec<Self::State> {
        self.read(label, |l| self.0.initial(l))
    }
    fn transition(&self, left: &Self::State, right: &Self::State, label: &Self::Label) -> Vec<Self::State> {
        self.read(label, |l| self.0.transition(left, right, l))
    }
    fn is_final(&self, q: &Self::State) -> bool {
        self.0.is_final(q)
    }
}

/// Cumulative union over smaller annotations: a label `(τ, i)` allows every
/// move the inner automaton allows on some `(τ, j)` with `j <= i`.
#[derive(Clone, Debug)]
pub struct Monotonized<A>(pub A);

pub fn monotonize<A, L>(a: A) -> Monotonized<A>
where
    A: TreeAutomaton<Label = (L, u8)>,
    L: Clone,
{
    Monotonized(a)
}

impl<A, L> TreeAutomaton for Monotonized<A>
where
    A: TreeAutomaton<Label = (L, u8)>,
    L: Clone,
{
    type Label = (L, u8);
    type State = A::State;

    fn initial(&self, label: &Self::Label) -> Vec<Self::State> {
        let mut out = BTreeSet::new();
        for j in 0..=label.1 {
            out.extend(self.0.initial(&(label.0.clone(), j)));
        }
        out.into_iter().collect()
    }
    fn transition(&self, left: &Self::State, right: &Self::State, label: &Self::Label) -> Vec<Self::State> {
        let mut out = BTreeSet::new();
        for j in 0..=label.1 {
            out.extend(self.0.transition(left, right, &(label.0.clone(), j)));
        }
        out.into_iter().collect()
    }
    fn is_final(&self, q: &Self::State) -> bool {
        self.0.is_final(q)
    }
}

/// Disjoint union: states are tagged with the index of their automaton, so
/// the runs of the union are exactly the disjoint union of the runs.
#[derive(Clone, Debug)]
pub struct Union<A>(pub Vec<A>);

pub fn union<A: TreeAutomaton>(parts: Vec<A>) -> Union<A> {
    Union(parts)
}

impl<A: TreeAutomaton> TreeAutomaton for Union<A> {
    type Label = A::Label;
    type State = (usize, A::State);

    fn initial(&self, label: &Self::Label) -> Vec<Self::State> {
        self.0.iter().enumerate().flat_map(|(i, a)| a.initial(label).into_iter().map(move |q| (i, q))).collect()
    }
    fn transition(&self, left: &Self::State, right: &Self::State, label: &Self::Label) -> Vec<Self::State> {
        if left.0 != right.0 {
            return Vec::new();
        }
        let i = left.0;
        self.0[i].transition(&left.1, &right.1, label).into_iter().map(|q| (i, q)).collect()
    }
    fn is_final(&self, q: &Self::State) -> bool {
        self.0[q.0].is_final(&q.1)
    }
}

/// Product automaton.
#[derive(Clone, Debug)]
pub struct Intersect<A, B>(pub A, pub B);

pub fn intersect<A, B>(a: A, b: B) -> Intersect<A, B>
where
    A: TreeAutomaton,
    B: TreeAutomaton<Label = A::Label>,
{
    Intersect(a, b)
}

impl<A, B> TreeAutomaton for Intersect<A, B>
where
    A: TreeAutomaton,
    B: TreeAutomaton<Label = A::Label>,
{
    type Label = A::Label;
    type State = (A::State, B::State);

    fn initial(&self, label: &Self::Label) -> Vec<Self::State> {
        let right = self.1.initial(label);
        let mut out = Vec::new();
        for q1 in self.0.initial(label) {
            out.extend(right.iter().map(|q2| (q1.clone(), q2.clone())));
        }
        out
    }
    fn transition(&self, left: &Self::State, right: &Self::State, label: &Self::Label) -> Vec<Self::State> {
        let second = self.1.transition(&left.1, &right.1, label);
        if second.is_empty() {
            return Vec::new();
        }
        let mut out = Vec::new();
        for q1 in self.0.transition(&left.0, &right.0, label) {
            out.extend(second.iter().map(|q2| (q1.clone(), q2.clone())));
        }
        out
    }
    fn is_final(&self, q: &Self::State) -> bool {
        self.0.is_final(&q.0) && self.1.is_final(&q.1)
    }
}

/// Subset construction. States are sorted, duplicate-free state lists; the
/// empty list is a (rejecting) sink state, so every tree has exactly one run.
#[derive(Clone, Debug)]
pub struct Determinized<A>(pub A);

impl<A: TreeAutomaton> TreeAutomaton for Determinized<A> {
    type Label = A::Label;
    type State = Vec<A::State>;

    fn initial(&self, label: &Self::Label) -> Vec<Self::State> {
        let set: BTreeSet<A::State> = self.0.initial(label).into_iter().collect();
        vec![set.into_iter().collect()]
    }
    fn transition(&self, left: &Self::State, right: &Self::State, label: &Self::Label) -> Vec<Self::State> {
        let mut set = BTreeSet::new();
        for q1 in left {
            for q2 in right {
                set.extend(self.0.transition(q1, q2, label));
            }
        }
        vec![set.into_iter().collect()]
    }
    fn is_final(&self, q: &Self::State) -> bool {
        q.iter().any(|s| self.0.is_final(s))
    }
}

/// Runs the inner automaton on the image of every label under `h`.
pub struct Relabeled<A, F, L2> {
    pub inner: A,
    pub h: F,
    _label: PhantomData<fn(&L2)>,
}

pub fn relabel_hom<A, F, L2>(inner: A, h: F) -> Relabeled<A, F, L2>
where
    A: TreeAutomaton,
    F: Fn(&L2) -> A::Label,
{
    Relabeled { inner, h, _label: PhantomData }
}

impl<A, F, L2> TreeAutomaton for Relabeled<A, F, L2>
where
    A: TreeAutomaton,
    F: Fn(&L2) -> A::Label,
{
    type Label = L2;
    type State = A::State;

    fn initial(&self, label: &L2) -> Vec<Self::State> {
        self.inner.initial(&(self.h)(label))
    }
    fn transition(&self, left: &Self::State, right: &Self::State, label: &L2) -> Vec<Self::State> {
        self.inner.transition(left, right, &(self.h)(label))
    }
    fn is_final(&self, q: &Self::State) -> bool {
        self.inner.is_final(q)
    }
}
