//! Explicit automata with sparse, label-indexed transition tables.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::{Determinized, TreeAutomaton};
use crate::error::{Error, Result};

/// An explicit bNTA. Labels missing from the tables have no initial states
/// and no transitions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Bnta<L: Ord> {
    pub states: Vec<String>,
    pub finals: BTreeSet<usize>,
    pub iota: BTreeMap<L, Vec<usize>>,
    pub delta: BTreeMap<L, BTreeMap<(usize, usize), Vec<usize>>>,
}

impl<L: Ord + Clone> Bnta<L> {
    pub fn new() -> Self {
        Bnta { states: Vec::new(), finals: BTreeSet::new(), iota: BTreeMap::new(), delta: BTreeMap::new() }
    }

    pub fn add_state(&mut self, name: impl Into<String>) -> usize {
        self.states.push(name.into());
        self.states.len() - 1
    }

    pub fn set_final(&mut self, q: usize) {
        self.finals.insert(q);
    }

    pub fn add_initial(&mut self, label: L, q: usize) {
        let v = self.iota.entry(label).or_default();
        if !v.contains(&q) {
            v.push(q);
        }
    }

    pub fn add_transition(&mut self, q1: usize, q2: usize, label: L, q: usize) {
        let v = self.delta.entry(label).or_default().entry((q1, q2)).or_default();
        if !v.contains(&q) {
            v.push(q);
        }
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn num_transitions(&self) -> usize {
        self.iota.values().map(Vec::len).sum::<usize>()
            + self.delta.values().flat_map(|m| m.values()).map(Vec::len).sum::<usize>()
    }

    /// Every label mentioned in the tables.
    pub fn labels(&self) -> Vec<L> {
        let set: BTreeSet<&L> = self.iota.keys().chain(self.delta.keys()).collect();
        set.into_iter().cloned().collect()
    }
}

impl<L: Ord + Clone> Default for Bnta<L> {
    fn default() -> Self {
        Self::new()
    }
}

impl<M: Ord + Clone> Bnta<(M, u8)> {
    /// Checks that annotations only ever add moves: for every stored label
    /// `(τ, i)`, the moves allowed on it are also allowed on `(τ, i + 1)`
    /// whenever that label is mentioned, and on every larger label mentioned.
    pub fn check_monotone(&self) -> Result<()> {
        let mut by_base: BTreeMap<&M, Vec<u8>> = BTreeMap::new();
        for (m, i) in self.iota.keys().chain(self.delta.keys()) {
            by_base.entry(m).or_default().push(*i);
        }
        for (m, anns) in by_base {
            for &i in &anns {
                for &j in anns.iter().filter(|&&j| j > i) {
                    let (lo, hi) = ((m.clone(), i), (m.clone(), j));
                    let empty = Vec::new();
                    let (a, b) = (self.iota.get(&lo).unwrap_or(&empty), self.iota.get(&hi).unwrap_or(&empty));
                    if a.iter().any(|q| !b.contains(q)) {
                        return Err(Error::NotMonotone(format!("initial states shrink from annotation {i} to {j}")));
                    }
                    let none = BTreeMap::new();
                    let (da, db) = (self.delta.get(&lo).unwrap_or(&none), self.delta.get(&hi).unwrap_or(&none));
                    for (pair, targets) in da {
                        let up = db.get(pair).unwrap_or(&empty);
                        if targets.iter().any(|q| !up.contains(q)) {
                            return Err(Error::NotMonotone(format!("transitions shrink from annotation {i} to {j}")));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

impl<L: Ord + Clone> TreeAutomaton for Bnta<L> {
    type Label = L;
    type State = usize;

    fn initial(&self, label: &L) -> Vec<usize> {
        self.iota.get(label).cloned().unwrap_or_default()
    }
    fn transition(&self, left: &usize, right: &usize, label: &L) -> Vec<usize> {
        self.delta.get(label).and_then(|m| m.get(&(*left, *right))).cloned().unwrap_or_default()
    }
    fn is_final(&self, q: &usize) -> bool {
        self.finals.contains(q)
    }
}

#[derive(Serialize, Deserialize)]
struct AutomatonFile<L> {
    states: Vec<String>,
    #[serde(rename = "final")]
    finals: Vec<String>,
    initial: Vec<InitialEntry<L>>,
    transitions: Vec<TransitionEntry<L>>,
}

#[derive(Serialize, Deserialize)]
struct InitialEntry<L> {
    label: L,
    states: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct TransitionEntry<L> {
    left: String,
    right: String,
    label: L,
    states: Vec<String>,
}

impl<L: Ord + Clone + Serialize + DeserializeOwned> Bnta<L> {
    pub fn to_json(&self) -> serde_json::Value {
        let names = |qs: &[usize]| qs.iter().map(|&q| self.states[q].clone()).collect::<Vec<_>>();
        let file = AutomatonFile {
            states: self.states.clone(),
            finals: self.finals.iter().map(|&q| self.states[q].clone()).collect(),
            initial: self.iota.iter().map(|(l, qs)| InitialEntry { label: l.clone(), states: names(qs) }).collect(),
            transitions: self
                .delta
                .iter()
                .flat_map(|(l, m)| {
                    m.iter().map(move |(&(a, b), qs)| TransitionEntry {
                        left: self.states[a].clone(),
                        right: self.states[b].clone(),
                        label: l.clone(),
                        states: names(qs),
                    })
                })
                .collect(),
        };
        serde_json::to_value(file).expect("automaton serializes")
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Self> {
        let file: AutomatonFile<L> =
            serde_json::from_value(value.clone()).map_err(|e| Error::input(format!("automaton file: {e}")))?;
        let mut index = HashMap::new();
        for (i, s) in file.states.iter().enumerate() {
            if index.insert(s.clone(), i).is_some() {
                return Err(Error::input(format!("duplicate state {s:?}")));
            }
        }
        let get = |s: &String| index.get(s).copied().ok_or_else(|| Error::input(format!("unknown state {s:?}")));
        let mut a = Bnta { states: file.states.clone(), ..Bnta::new() };
        for s in &file.finals {
            a.set_final(get(s)?);
        }
        for e in file.initial {
            for s in &e.states {
                a.add_initial(e.label.clone(), get(s)?);
            }
        }
        for e in file.transitions {
            let (l, r) = (get(&e.left)?, get(&e.right)?);
            for s in &e.states {
                a.add_transition(l, r, e.label.clone(), get(s)?);
            }
        }
        Ok(a)
    }
}

/// Explores the states of `a` reachable on trees over `alphabet` and stores
/// them explicitly. Fails with `StateBlowup` past `cap` states.
pub fn materialize<A>(a: &A, alphabet: &[A::Label], cap: usize) -> Result<Bnta<A::Label>>
where
    A: TreeAutomaton,
    A::Label: Ord + Clone,
{
    let mut out = Bnta::new();
    let mut index: HashMap<A::State, usize> = HashMap::new();
    let mut known: Vec<A::State> = Vec::new();
    let mut queue = VecDeque::new();
    let mut intern = |q: A::State, out: &mut Bnta<A::Label>, known: &mut Vec<A::State>, queue: &mut VecDeque<usize>| {
        if let Some(&i) = index.get(&q) {
            return Ok(i);
        }
        if known.len() >= cap {
            return Err(Error::StateBlowup(cap));
        }
        let i = out.add_state(format!("q{}", known.len()));
        if a.is_final(&q) {
            out.set_final(i);
        }
        index.insert(q.clone(), i);
        known.push(q);
        queue.push_back(i);
        Ok(i)
    };
    for label in alphabet {
        for q in a.initial(label) {
            let i = intern(q, &mut out, &mut known, &mut queue)?;
            out.add_initial(label.clone(), i);
        }
    }
    // States are popped in creation order, so pairing each popped state with
    // the ones before it covers every pair exactly once.
    while let Some(s) = queue.pop_front() {
        for t in 0..=s {
            let pairs: &[(usize, usize)] = if t == s { &[(s, s)] } else { &[(s, t), (t, s)] };
            for label in alphabet {
                for &(x, y) in pairs {
                    let (qx, qy) = (known[x].clone(), known[y].clone());
                    for q in a.transition(&qx, &qy, label) {
                        let i = intern(q, &mut out, &mut known, &mut queue)?;
                        out.add_transition(x, y, label.clone(), i);
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Subset construction on an explicit automaton, over the labels it
/// mentions. The result has exactly one run on every tree over those labels.
pub fn determinize<L: Ord + Clone>(a: &Bnta<L>, cap: usize) -> Result<Bnta<L>> {
    materialize(&Determinized(a), &a.labels(), cap)
}
