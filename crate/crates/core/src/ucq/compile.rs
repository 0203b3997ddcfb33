//! Compilation of queries to automata over k-fact labels.
//!
//! A [`MatchAutomaton`] state describes a partial match of one CQ inside
//! the subtree read so far: which atoms are already matched, and for each
//! variable whether it is still unassigned, bound to an element visible in
//! the current label (by slot), or bound to an element that was forgotten
//! on the way up (its slot left the domain). Forgotten elements never
//! reappear in a valid encoding, so atoms mentioning them can no longer be
//! matched and they can never equal any other element.

use std::collections::{BTreeSet, HashMap};
use std::sync::Arc;

use super::{Atom, Cq, Ucq};
use crate::automata::{Determinized, TreeAutomaton, Union};
use crate::encoding::KFact;
use crate::error::{Error, Result};

const UNASSIGNED: u8 = 0xFF;
const FORGOTTEN: u8 = 0xFE;

#[derive(Clone, Debug)]
struct MAtom {
    /// Any of these relation names matches.
    rels: Vec<Arc<str>>,
    vars: Vec<u8>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MatchState {
    pub matched: u32,
    /// Per variable: a slot, or one of the unassigned/forgotten markers.
    pub vars: Box<[u8]>,
}

/// Tests one CQ (with optional inequalities) on valid width-`k` encodings.
#[derive(Clone, Debug)]
pub struct MatchAutomaton {
    atoms: Vec<MAtom>,
    nvars: usize,
    neq: Vec<(u8, u8)>,
    width: usize,
}

impl MatchAutomaton {
    pub fn new(cq: &Cq, width: usize) -> Result<Self> {
        let vars = cq.vars();
        let index = |v: &String| -> Result<u8> {
            vars.iter()
                .position(|x| x == v)
                .map(|i| i as u8)
                .ok_or_else(|| Error::input(format!("variable {v} only occurs in an inequality")))
        };
        let atoms = cq
            .atoms
            .iter()
            .map(|a| Ok(MAtom { rels: vec![Arc::from(a.rel.as_str())], vars: a.args.iter().map(index).collect::<Result<_>>()? }))
            .collect::<Result<Vec<_>>>()?;
        let neq = cq.neq.iter().map(|(x, y)| Ok((index(x)?, index(y)?))).collect::<Result<Vec<_>>>()?;
        Self::from_parts(atoms, vars.len(), neq, width)
    }

    fn from_parts(atoms: Vec<MAtom>, nvars: usize, neq: Vec<(u8, u8)>, width: usize) -> Result<Self> {
        if atoms.len() > 32 {
            return Err(Error::input("at most 32 atoms per conjunctive query"));
        }
        if nvars >= FORGOTTEN as usize {
            return Err(Error::input("too many variables"));
        }
        Ok(MatchAutomaton { atoms, nvars, neq, width })
    }

    fn full(&self) -> u32 {
        if self.atoms.len() == 32 {
            u32::MAX
        } else {
            (1u32 << self.atoms.len()) - 1
        }
    }

    fn forget(&self, s: &MatchState, dom: u32) -> MatchState {
        let vars = s
            .vars
            .iter()
            .map(|&v| if v < FORGOTTEN && dom >> v & 1 == 0 { FORGOTTEN } else { v })
            .collect();
        MatchState { matched: s.matched, vars }
    }

    fn join(&self, a: &MatchState, b: &MatchState) -> Option<MatchState> {
        if a.matched & b.matched != 0 {
            return None;
        }
        let mut vars = a.vars.clone();
        for (x, &y) in vars.iter_mut().zip(b.vars.iter()) {
            match (*x, y) {
                (_, UNASSIGNED) => {}
                (UNASSIGNED, y) => *x = y,
                // Two forgotten elements from different subtrees differ.
                (FORGOTTEN, _) | (_, FORGOTTEN) => return None,
                (x, y) if x != y => return None,
                _ => {}
            }
        }
        Some(MatchState { matched: a.matched | b.matched, vars })
    }

    fn alive(&self, s: &MatchState) -> bool {
        if self.neq.iter().any(|&(x, y)| {
            let (a, b) = (s.vars[x as usize], s.vars[y as usize]);
            a == b && a < FORGOTTEN
        }) {
            return false;
        }
        self.atoms.iter().enumerate().all(|(i, atom)| {
            s.matched >> i & 1 == 1 || atom.vars.iter().all(|&v| s.vars[v as usize] != FORGOTTEN)
        })
    }

    /// All ways of additionally matching a set of unmatched atoms to the
    /// label's fact.
    fn extend(&self, s: MatchState, label: &KFact, out: &mut BTreeSet<MatchState>) {
        let Some(fact) = &label.fact else {
            if self.alive(&s) {
                out.insert(s);
            }
            return;
        };
        let candidates: Vec<usize> = (0..self.atoms.len())
            .filter(|&i| {
                s.matched >> i & 1 == 0
                    && self.atoms[i].vars.len() == fact.args.len()
                    && self.atoms[i].rels.iter().any(|r| **r == *fact.rel)
            })
            .collect();
        self.extend_rec(&candidates, 0, s, &fact.args, out);
    }

    fn extend_rec(&self, cand: &[usize], at: usize, s: MatchState, args: &[u8], out: &mut BTreeSet<MatchState>) {
        if at == cand.len() {
            if self.alive(&s) {
                out.insert(s);
            }
            return;
        }
        let atom = &self.atoms[cand[at]];
        let mut taken = s.clone();
        let mut ok = true;
        for (&v, &slot) in atom.vars.iter().zip(args) {
            let cur = &mut taken.vars[v as usize];
            if *cur == UNASSIGNED {
                *cur = slot;
            } else if *cur != slot {
                ok = false;
                break;
            }
        }
        if ok {
            taken.matched |= 1 << cand[at];
            self.extend_rec(cand, at + 1, taken, args, out);
        }
        self.extend_rec(cand, at + 1, s, args, out);
    }
}

impl TreeAutomaton for MatchAutomaton {
    type Label = KFact;
    type State = MatchState;

    fn initial(&self, label: &KFact) -> Vec<MatchState> {
        if label.check(self.width).is_err() {
            return Vec::new();
        }
        let start = MatchState { matched: 0, vars: vec![UNASSIGNED; self.nvars].into_boxed_slice() };
        let mut out = BTreeSet::new();
        self.extend(start, label, &mut out);
        out.into_iter().collect()
    }

    fn transition(&self, left: &MatchState, right: &MatchState, label: &KFact) -> Vec<MatchState> {
        if label.check(self.width).is_err() {
            return Vec::new();
        }
        let (l, r) = (self.forget(left, label.dom), self.forget(right, label.dom));
        let Some(joined) = self.join(&l, &r) else { return Vec::new() };
        if !self.alive(&joined) {
            return Vec::new();
        }
        let mut out = BTreeSet::new();
        self.extend(joined, label, &mut out);
        out.into_iter().collect()
    }

    fn is_final(&self, q: &MatchState) -> bool {
        q.matched == self.full()
    }
}

/// Automaton testing a UCQ on width-`k` encodings.
pub type BoolAutomaton = Union<MatchAutomaton>;

pub fn compile_bool(q: &Ucq, k: usize) -> Result<BoolAutomaton> {
    Ok(Union(q.disjuncts.iter().map(|d| MatchAutomaton::new(d, k)).collect::<Result<_>>()?))
}

/// Bag-semantics automaton over annotated labels `(τ, i)`: the annotation
/// is the multiplicity of the label's fact, truncated to `p`.
#[derive(Clone, Debug)]
pub struct BagAutomaton {
    inner: Union<MatchAutomaton>,
    renamed: HashMap<(Arc<str>, u8), Arc<str>>,
    p: u8,
}

fn set_partitions(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut rgs = vec![0usize; n];
    fn go(i: usize, max: usize, rgs: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if i == rgs.len() {
            out.push(rgs.clone());
            return;
        }
        for b in 0..=max {
            rgs[i] = b;
            go(i + 1, max.max(b + 1), rgs, out);
        }
    }
    go(0, 0, &mut rgs, &mut out);
    out
}

fn power_name(rel: &str, i: u8) -> String {
    format!("{rel}^{i}")
}

/// Compiles a CQ under bag semantics. Every way of identifying variables
/// gives a query whose variables must take pairwise distinct values; in
/// it, an atom occurring `m` times needs a fact of multiplicity at least
/// `m`, which is tested by renaming facts of multiplicity `i` to `R^i`.
/// Identifications needing a multiplicity above `p` are dropped.
pub fn compile_bag(q: &Cq, k: usize, p: u8) -> Result<BagAutomaton> {
    let vars = q.vars();
    let pos = |v: &String| vars.iter().position(|x| x == v);
    let mut parts = Vec::new();
    'partition: for blocks in set_partitions(vars.len()) {
        for (x, y) in &q.neq {
            match (pos(x), pos(y)) {
                (Some(a), Some(b)) if blocks[a] == blocks[b] => continue 'partition,
                (Some(_), Some(_)) => {}
                _ => return Err(Error::input("inequality over a variable missing from the atoms")),
            }
        }
        let nblocks = blocks.iter().max().map_or(0, |m| m + 1);
        let mut merged: Vec<(Atom, u8)> = Vec::new();
        for a in &q.atoms {
            let image = Atom {
                rel: a.rel.clone(),
                args: a.args.iter().map(|v| blocks[pos(v).unwrap()].to_string()).collect(),
            };
            match merged.iter_mut().find(|(b, _)| *b == image) {
                Some((_, m)) => *m += 1,
                None => merged.push((image, 1)),
            }
        }
        if merged.iter().any(|&(_, m)| m > p) {
            continue;
        }
        let atoms = merged
            .into_iter()
            .map(|(a, m)| MAtom {
                rels: (m..=p).map(|i| Arc::from(power_name(&a.rel, i))).collect(),
                vars: a.args.iter().map(|v| v.parse::<u8>().unwrap()).collect(),
            })
            .collect();
        let mut neq = Vec::new();
        for x in 0..nblocks as u8 {
            for y in x + 1..nblocks as u8 {
                neq.push((x, y));
            }
        }
        parts.push(MatchAutomaton::from_parts(atoms, nblocks, neq, k)?);
    }
    let mut renamed = HashMap::new();
    for a in &q.atoms {
        for i in 1..=p {
            renamed.insert((Arc::from(a.rel.as_str()), i), Arc::from(power_name(&a.rel, i)));
        }
    }
    Ok(BagAutomaton { inner: Union(parts), renamed, p })
}

impl BagAutomaton {
    fn relabel(&self, (label, i): &(KFact, u8)) -> KFact {
        let i = (*i).min(self.p);
        match &label.fact {
            Some(f) if i > 0 => match self.renamed.get(&(f.rel.clone(), i)) {
                Some(name) => {
                    let mut l = label.clone();
                    l.fact.as_mut().unwrap().rel = name.clone();
                    l
                }
                None => label.neuter(),
            },
            _ => label.neuter(),
        }
    }
}

impl TreeAutomaton for BagAutomaton {
    type Label = (KFact, u8);
    type State = (usize, MatchState);

    fn initial(&self, label: &(KFact, u8)) -> Vec<Self::State> {
        self.inner.initial(&self.relabel(label))
    }
    fn transition(&self, left: &Self::State, right: &Self::State, label: &(KFact, u8)) -> Vec<Self::State> {
        self.inner.transition(left, right, &self.relabel(label))
    }
    fn is_final(&self, q: &Self::State) -> bool {
        self.inner.is_final(q)
    }
}

/// Deterministic automaton accepting annotated trees in which each of the
/// given relations has exactly one fact with a nonzero annotation.
#[derive(Clone, Debug)]
pub struct ExactlyOne {
    rels: Vec<Arc<str>>,
}

impl ExactlyOne {
    pub fn new(rels: &[String]) -> Self {
        assert!(rels.len() <= 32);
        ExactlyOne { rels: rels.iter().map(|r| Arc::from(r.as_str())).collect() }
    }

    fn bit(&self, (label, i): &(KFact, u8)) -> u32 {
        match &label.fact {
            Some(f) if *i > 0 => self.rels.iter().position(|r| *r == f.rel).map_or(0, |p| 1 << p),
            _ => 0,
        }
    }
}

impl TreeAutomaton for ExactlyOne {
    type Label = (KFact, u8);
    type State = u32;

    fn initial(&self, label: &(KFact, u8)) -> Vec<u32> {
        vec![self.bit(label)]
    }
    fn transition(&self, left: &u32, right: &u32, label: &(KFact, u8)) -> Vec<u32> {
        let bit = self.bit(label);
        if left & right != 0 || (left | right) & bit != 0 {
            return Vec::new();
        }
        vec![left | right | bit]
    }
    fn is_final(&self, q: &u32) -> bool {
        q.count_ones() as usize == self.rels.len()
    }
}

/// Wraps a subset automaton so that on a label `(τ, 0)` whose fact belongs
/// to one of the `extra` relations it may also behave as on `(τ, 1)`. The
/// two options are kept apart by a flag, so each choice of extra facts
/// yields its own run. Rejecting sink subsets are dropped.
#[derive(Clone, Debug)]
pub struct DupMerge<A> {
    pub inner: Determinized<A>,
    extra: Vec<Arc<str>>,
}

impl<A> DupMerge<A> {
    pub fn new(inner: A, extra: &[String]) -> Self {
        DupMerge { inner: Determinized(inner), extra: extra.iter().map(|r| Arc::from(r.as_str())).collect() }
    }

    fn is_extra(&self, (label, i): &(KFact, u8)) -> bool {
        *i == 0 && label.fact.as_ref().is_some_and(|f| self.extra.contains(&f.rel))
    }
}

impl<A> TreeAutomaton for DupMerge<A>
where
    A: TreeAutomaton<Label = (KFact, u8)>,
{
    type Label = (KFact, u8);
    type State = (Vec<A::State>, bool);

    fn initial(&self, label: &(KFact, u8)) -> Vec<Self::State> {
        let mut out: Vec<Self::State> = self.inner.initial(label).into_iter().map(|s| (s, false)).collect();
        if self.is_extra(label) {
            out.extend(self.inner.initial(&(label.0.clone(), 1)).into_iter().map(|s| (s, true)));
        }
        out.retain(|(s, _)| !s.is_empty());
        out
    }
    fn transition(&self, left: &Self::State, right: &Self::State, label: &(KFact, u8)) -> Vec<Self::State> {
        let mut out: Vec<Self::State> =
            self.inner.transition(&left.0, &right.0, label).into_iter().map(|s| (s, false)).collect();
        if self.is_extra(label) {
            out.extend(self.inner.transition(&left.0, &right.0, &(label.0.clone(), 1)).into_iter().map(|s| (s, true)));
        }
        out.retain(|(s, _)| !s.is_empty());
        out
    }
    fn is_final(&self, q: &Self::State) -> bool {
        self.inner.is_final(&q.0)
    }
}
