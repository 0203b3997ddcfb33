//! Provenance circuits of tree automata on trees and of queries on
//! treelike instances.
//!
//! The Boolean builders emit arity-two circuits. Every gate is created for a
//! specific tree node, which yields a decomposition of the circuit with the
//! same skeleton as the tree: the bag of a node holds its own gates and the
//! state gates of its two children.

use std::collections::{BTreeMap, HashMap};
use std::hash::Hash;

use crate::automata::{lift_boolean, TreeAutomaton};
use crate::circuits::{BoolCircuit, GateId, GateKind, SemiringCircuit};
use crate::encoding::{encode, KFact, TreeEncoding};
use crate::error::{Error, Result};
use crate::relational::{tree_decomposition, Instance, TreeDecomposition};
use crate::tree::{NodeId, Tree};

/// What the annotation of a tree node is bound to.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum NodeInput {
    /// A circuit input with this name.
    Named(String),
    /// Boolean builders: the node is annotated 1. `N[X]` builders: the
    /// annotation ranges over `0..=p` but contributes the factor 1.
    One,
    /// The annotation is this value and contributes the factor 1.
    Fixed(u8),
}

/// One named input per node, called `n<id>`.
pub fn node_inputs<L>(tree: &Tree<L>) -> Vec<NodeInput> {
    (0..tree.len()).map(|n| NodeInput::Named(format!("n{n}"))).collect()
}

#[derive(Clone, Debug)]
pub struct ProvenanceResult<S> {
    pub circuit: BoolCircuit,
    /// The input gate created for each node, if any.
    pub node_input: Vec<Option<GateId>>,
    /// A decomposition of the circuit with the same skeleton as the tree.
    pub decomposition: TreeDecomposition,
    /// For each node, the gate `g^q` of every state `q` that can be reached
    /// there. Missing states are constantly false.
    pub state_gates: Vec<Vec<(S, GateId)>>,
}

/// Interns states and labels and memoizes automaton moves.
struct Moves<'a, A: TreeAutomaton<Label = (L, u8)>, L> {
    a: &'a A,
    states: Vec<A::State>,
    index: HashMap<A::State, u32>,
    labels: Vec<Option<A::Label>>,
    node_label: Vec<u32>,
    max_ann: u8,
    init_memo: HashMap<(u32, u8), Vec<u32>>,
    trans_memo: HashMap<(u32, u8, u32, u32), Vec<u32>>,
    cap: usize,
}

impl<'a, A, L> Moves<'a, A, L>
where
    A: TreeAutomaton<Label = (L, u8)>,
    L: Clone + Eq + Hash,
{
    fn new(a: &'a A, tree: &Tree<L>, max_ann: u8, cap: usize) -> Self {
        let mut label_index: HashMap<&L, u32> = HashMap::new();
        let mut bases = Vec::new();
        let node_label = tree
            .labels()
            .iter()
            .map(|l| {
                *label_index.entry(l).or_insert_with(|| {
                    bases.push(l.clone());
                    bases.len() as u32 - 1
                })
            })
            .collect();
        let width = max_ann as usize + 1;
        let mut labels = vec![None; bases.len() * width];
        for (i, b) in bases.into_iter().enumerate() {
            for j in 0..=max_ann {
                labels[i * width + j as usize] = Some((b.clone(), j));
            }
        }
        Moves {
            a,
            states: Vec::new(),
            index: HashMap::new(),
            labels,
            node_label,
            max_ann,
            init_memo: HashMap::new(),
            trans_memo: HashMap::new(),
            cap,
        }
    }

    fn label(&self, n: NodeId, j: u8) -> &A::Label {
        let width = self.max_ann as usize + 1;
        self.labels[self.node_label[n] as usize * width + j as usize].as_ref().expect("label table is full")
    }

    fn intern(&mut self, qs: Vec<A::State>) -> Result<Vec<u32>> {
        let mut out = Vec::with_capacity(qs.len());
        for q in qs {
            let id = match self.index.get(&q) {
                Some(&id) => id,
                None => {
                    if self.states.len() >= self.cap {
                        return Err(Error::StateBlowup(self.cap));
                    }
                    let id = self.states.len() as u32;
                    self.index.insert(q.clone(), id);
                    self.states.push(q);
                    id
                }
            };
            out.push(id);
        }
        out.sort_unstable();
        out.dedup();
        Ok(out)
    }

    fn initial(&mut self, n: NodeId, j: u8) -> Result<Vec<u32>> {
        let key = (self.node_label[n], j);
        if let Some(v) = self.init_memo.get(&key) {
            return Ok(v.clone());
        }
        let qs = self.a.initial(self.label(n, j));
        let v = self.intern(qs)?;
        self.init_memo.insert(key, v.clone());
        Ok(v)
    }

    fn transition(&mut self, n: NodeId, j: u8, q1: u32, q2: u32) -> Result<Vec<u32>> {
        let key = (self.node_label[n], j, q1, q2);
        if let Some(v) = self.trans_memo.get(&key) {
            return Ok(v.clone());
        }
        let qs = self.a.transition(&self.states[q1 as usize], &self.states[q2 as usize], self.label(n, j));
        let v = self.intern(qs)?;
        self.trans_memo.insert(key, v.clone());
        Ok(v)
    }

    fn is_final(&self, q: u32) -> bool {
        self.a.is_final(&self.states[q as usize])
    }
}

/// Arity-two circuit construction with node tags.
struct TaggedBuilder {
    gates: Vec<crate::circuits::Gate>,
    tag: Vec<NodeId>,
}

impl TaggedBuilder {
    fn push(&mut self, kind: GateKind, inputs: Vec<GateId>, name: Option<String>, node: NodeId) -> GateId {
        self.gates.push(crate::circuits::Gate { kind, inputs, name });
        self.tag.push(node);
        self.gates.len() - 1
    }

    fn constant(&mut self, value: bool, node: NodeId) -> GateId {
        self.push(if value { GateKind::And } else { GateKind::Or }, Vec::new(), None, node)
    }

    fn and2(&mut self, a: GateId, b: GateId, node: NodeId) -> GateId {
        self.push(GateKind::And, vec![a, b], None, node)
    }

    /// OR of the given gates as a chain; a single gate is returned as is.
    fn or_chain(&mut self, gates: &[GateId], node: NodeId) -> GateId {
        match gates {
            [] => self.constant(false, node),
            [g] => *g,
            _ => {
                let mut acc = gates[0];
                for &g in &gates[1..] {
                    acc = self.push(GateKind::Or, vec![acc, g], None, node);
                }
                acc
            }
        }
    }
}

/// Provenance circuit of a `(Γ × {0,1})`-automaton on a Γ-tree: for every
/// valuation of the named inputs, the circuit is true iff the automaton
/// accepts the correspondingly annotated tree. NOT gates are used for the
/// nodes whose annotation is 0.
pub fn bool_provenance_circuit<A, L>(
    a: &A,
    tree: &Tree<L>,
    inputs: &[NodeInput],
    cap: usize,
) -> Result<ProvenanceResult<A::State>>
where
    A: TreeAutomaton<Label = (L, u8)>,
    L: Clone + Eq + Hash,
{
    build_bool(a, tree, inputs, cap, false)
}

/// NOT-free variant for monotone automata. Fails with `NotMonotone` when a
/// move allowed on `(τ, 0)` is missing on `(τ, 1)` for a label and state
/// pair met during the construction.
pub fn monotone_provenance_circuit<A, L>(
    a: &A,
    tree: &Tree<L>,
    inputs: &[NodeInput],
    cap: usize,
) -> Result<ProvenanceResult<A::State>>
where
    A: TreeAutomaton<Label = (L, u8)>,
    L: Clone + Eq + Hash,
{
    build_bool(a, tree, inputs, cap, true)
}

fn build_bool<A, L>(
    a: &A,
    tree: &Tree<L>,
    inputs: &[NodeInput],
    cap: usize,
    monotone: bool,
) -> Result<ProvenanceResult<A::State>>
where
    A: TreeAutomaton<Label = (L, u8)>,
    L: Clone + Eq + Hash,
{
    assert_eq!(inputs.len(), tree.len(), "one input binding per node");
    let mut moves = Moves::new(a, tree, 1, cap);
    let mut b = TaggedBuilder { gates: Vec::new(), tag: Vec::new() };
    let mut node_input = vec![None; tree.len()];
    // Interned state -> gate, per node.
    let mut sgates: Vec<BTreeMap<u32, GateId>> = vec![BTreeMap::new(); tree.len()];
    let not_monotone = |what: &str| Error::NotMonotone(format!("{what} allowed on annotation 0 but not on 1"));

    for n in tree.postorder() {
        // Either a fixed annotation, or an input gate (with its negation in
        // the general construction).
        let (fixed, gi, gni) = match &inputs[n] {
            NodeInput::Named(name) => {
                let gi = b.push(GateKind::Input, Vec::new(), Some(name.clone()), n);
                node_input[n] = Some(gi);
                let gni = if monotone { None } else { Some(b.push(GateKind::Not, vec![gi], None, n)) };
                (None, Some(gi), gni)
            }
            NodeInput::One => (Some(1u8), None, None),
            NodeInput::Fixed(v) => (Some((*v).min(1)), None, None),
        };
        // Gates whose disjunction is g^q, per state q.
        let mut sources: BTreeMap<u32, Vec<GateId>> = BTreeMap::new();
        match tree.children(n) {
            None => {
                if let Some(v) = fixed {
                    for q in moves.initial(n, v)? {
                        let one = b.constant(true, n);
                        sources.entry(q).or_default().push(one);
                    }
                } else {
                    let q0 = moves.initial(n, 0)?;
                    let q1 = moves.initial(n, 1)?;
                    if monotone {
                        if q0.iter().any(|q| !q1.contains(q)) {
                            return Err(not_monotone("an initial state"));
                        }
                        for &q in &q1 {
                            let g = if q0.contains(&q) { b.constant(true, n) } else { gi.unwrap() };
                            sources.entry(q).or_default().push(g);
                        }
                    } else {
                        for &q in &q1 {
                            sources.entry(q).or_default().push(gi.unwrap());
                        }
                        for &q in &q0 {
                            sources.entry(q).or_default().push(gni.unwrap());
                        }
                    }
                }
            }
            Some((l, r)) => {
                let left: Vec<(u32, GateId)> = sgates[l].iter().map(|(&q, &g)| (q, g)).collect();
                let right: Vec<(u32, GateId)> = sgates[r].iter().map(|(&q, &g)| (q, g)).collect();
                for &(ql, gl) in &left {
                    for &(qr, gr) in &right {
                        if let Some(v) = fixed {
                            let targets = moves.transition(n, v, ql, qr)?;
                            if targets.is_empty() {
                                continue;
                            }
                            let pair = b.and2(gl, gr, n);
                            for q in targets {
                                sources.entry(q).or_default().push(pair);
                            }
                            continue;
                        }
                        let t0 = moves.transition(n, 0, ql, qr)?;
                        let t1 = moves.transition(n, 1, ql, qr)?;
                        if t0.is_empty() && t1.is_empty() {
                            continue;
                        }
                        let pair = b.and2(gl, gr, n);
                        if monotone {
                            if t0.iter().any(|q| !t1.contains(q)) {
                                return Err(not_monotone("a transition"));
                            }
                            let guarded = if t1.iter().any(|q| !t0.contains(q)) {
                                Some(b.and2(pair, gi.unwrap(), n))
                            } else {
                                None
                            };
                            for &q in &t1 {
                                let g = if t0.contains(&q) { pair } else { guarded.unwrap() };
                                sources.entry(q).or_default().push(g);
                            }
                        } else {
                            if !t1.is_empty() {
                                let g = b.and2(pair, gi.unwrap(), n);
                                for &q in &t1 {
                                    sources.entry(q).or_default().push(g);
                                }
                            }
                            if !t0.is_empty() {
                                let g = b.and2(pair, gni.unwrap(), n);
                                for &q in &t0 {
                                    sources.entry(q).or_default().push(g);
                                }
                            }
                        }
                    }
                }
            }
        }
        for (q, srcs) in sources {
            // A state gate must not be the input gate itself: input gates
            // stay in the bag of their own node.
            let g = match srcs[..] {
                [g] if b.gates[g].kind == GateKind::Input => b.and2(g, g, n),
                _ => b.or_chain(&srcs, n),
            };
            sgates[n].insert(q, g);
        }
    }

    let root = tree.root();
    let finals: Vec<GateId> = sgates[root].iter().filter(|(&q, _)| moves.is_final(q)).map(|(_, &g)| g).collect();
    let g0 = b.or_chain(&finals, root);

    let mut doms: Vec<Vec<GateId>> = vec![Vec::new(); tree.len()];
    for (g, &n) in b.tag.iter().enumerate() {
        doms[n].push(g);
    }
    let mut children = vec![Vec::new(); tree.len()];
    for n in 0..tree.len() {
        if let Some((l, r)) = tree.children(n) {
            children[n] = vec![l, r];
            let iface: Vec<GateId> = sgates[l].values().chain(sgates[r].values()).copied().collect();
            doms[n].extend(iface);
        }
    }
    let decomposition = TreeDecomposition::from_parts(doms, children, root);
    let state_gates = sgates
        .into_iter()
        .map(|m| m.into_iter().map(|(q, g)| (moves.states[q as usize].clone(), g)).collect())
        .collect();
    let circuit = BoolCircuit { gates: b.gates, output: g0 };
    Ok(ProvenanceResult { circuit, node_input, decomposition, state_gates })
}

/// Which annotation totals the `N[X]` provenance sums over.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Budget {
    /// Valuations whose annotations sum to exactly this value.
    Exactly(usize),
    /// All valuations.
    All,
}

/// `N[X]` provenance of a `(Γ × {0..p})`-automaton on a Γ-tree: the sum over
/// valuations (restricted by `budget`) of the number of accepting runs times
/// the product of `n^ν(n)`.
pub fn nx_provenance_circuit<A, L>(
    a: &A,
    tree: &Tree<L>,
    inputs: &[NodeInput],
    p: u8,
    budget: Budget,
    cap: usize,
) -> Result<SemiringCircuit>
where
    A: TreeAutomaton<Label = (L, u8)>,
    L: Clone + Eq + Hash,
{
    let mut c = SemiringCircuit::new("N[X]");
    let out = nx_provenance_into(&mut c, a, tree, inputs, p, budget, cap)?;
    c.output = out;
    Ok(c)
}

/// Builds the `N[X]` provenance inside an existing circuit and returns its
/// output gate. Input gates are created once per name and shared with any
/// gate of the same name already present, which lets several constructions
/// over the same tree be summed.
pub fn nx_provenance_into<A, L>(
    c: &mut SemiringCircuit,
    a: &A,
    tree: &Tree<L>,
    inputs: &[NodeInput],
    p: u8,
    budget: Budget,
    cap: usize,
) -> Result<GateId>
where
    A: TreeAutomaton<Label = (L, u8)>,
    L: Clone + Eq + Hash,
{
    assert_eq!(inputs.len(), tree.len(), "one input binding per node");
    let mut named: HashMap<String, GateId> = HashMap::new();
    for (g, gate) in c.gates.iter().enumerate() {
        if let crate::circuits::SemiringGate::Input(n) = gate {
            named.entry(n.clone()).or_insert(g);
        }
    }
    let mut moves = Moves::new(a, tree, p, cap);
    // Levels are annotation totals for `Exactly`, a single level for `All`.
    let top = match budget {
        Budget::Exactly(l) => l,
        Budget::All => 0,
    };
    let combine = |l1: usize, l2: usize, j: u8| -> Option<usize> {
        match budget {
            Budget::All => Some(0),
            Budget::Exactly(l0) => {
                let s = l1 + l2 + j as usize;
                (s <= l0).then_some(s)
            }
        }
    };
    let mut one_gate: Option<GateId> = None;
    let mut one = |c: &mut SemiringCircuit| *one_gate.get_or_insert_with(|| c.times(Vec::new()));
    // (state, level) -> gate, per node.
    let mut sgates: Vec<BTreeMap<(u32, usize), GateId>> = vec![BTreeMap::new(); tree.len()];

    for n in tree.postorder() {
        let allowed: Vec<u8> = match &inputs[n] {
            NodeInput::Fixed(v) => vec![*v],
            _ => (0..=p).collect(),
        };
        // g^{i,j}: the factor contributed by annotation j.
        let mut power: HashMap<u8, GateId> = HashMap::new();
        match &inputs[n] {
            NodeInput::Named(name) => {
                let gi = *named.entry(name.clone()).or_insert_with(|| c.input(name.clone()));
                let copies: Vec<GateId> = (0..p).map(|_| c.plus(vec![gi])).collect();
                for &j in &allowed {
                    let g = if j == 0 { one(c) } else { c.times(copies[..j as usize].to_vec()) };
                    power.insert(j, g);
                }
            }
            _ => {
                for &j in &allowed {
                    power.insert(j, one(c));
                }
            }
        }
        let mut sources: BTreeMap<(u32, usize), Vec<GateId>> = BTreeMap::new();
        match tree.children(n) {
            None => {
                for &j in &allowed {
                    if let Some(level) = combine(0, 0, j) {
                        for q in moves.initial(n, j)? {
                            sources.entry((q, level)).or_default().push(power[&j]);
                        }
                    }
                }
            }
            Some((l, r)) => {
                let left: Vec<((u32, usize), GateId)> = sgates[l].iter().map(|(&k, &g)| (k, g)).collect();
                let right: Vec<((u32, usize), GateId)> = sgates[r].iter().map(|(&k, &g)| (k, g)).collect();
                for &((ql, l1), gl) in &left {
                    for &((qr, l2), gr) in &right {
                        if combine(l1, l2, 0).is_none() {
                            continue;
                        }
                        let mut pair = None;
                        for &j in &allowed {
                            let Some(level) = combine(l1, l2, j) else { continue };
                            let targets = moves.transition(n, j, ql, qr)?;
                            if targets.is_empty() {
                                continue;
                            }
                            let pg = *pair.get_or_insert_with(|| c.times(vec![gl, gr]));
                            let g = c.times(vec![pg, power[&j]]);
                            for q in targets {
                                sources.entry((q, level)).or_default().push(g);
                            }
                        }
                    }
                }
            }
        }
        for (key, srcs) in sources {
            let g = if srcs.len() == 1 { srcs[0] } else { c.plus(srcs) };
            sgates[n].insert(key, g);
        }
    }
    let root = tree.root();
    let finals: Vec<GateId> = sgates[root]
        .iter()
        .filter(|(&(q, level), _)| level == top && moves.is_final(q))
        .map(|(_, &g)| g)
        .collect();
    Ok(c.plus(finals))
}

/// Provenance of a query given by an automaton over the k-fact alphabet:
/// the instance is encoded along a width-`k` decomposition, the automaton
/// is lifted to Boolean annotations, fact nodes become inputs named after
/// the fact ids and the other nodes are fixed to 1.
pub fn query_provenance_circuit<A>(
    a: &A,
    i: &Instance,
    k: usize,
    cap: usize,
) -> Result<(ProvenanceResult<A::State>, TreeEncoding)>
where
    A: TreeAutomaton<Label = KFact>,
{
    let enc = encode(i, &tree_decomposition(i, k)?)?;
    let inputs = fact_inputs(i, &enc);
    let res = bool_provenance_circuit(&lift_boolean(a), &enc.tree, &inputs, cap)?;
    Ok((res, enc))
}

/// Fact nodes are named after their fact ids; other nodes are fixed to 1.
pub fn fact_inputs(i: &Instance, enc: &TreeEncoding) -> Vec<NodeInput> {
    enc.node_fact
        .iter()
        .map(|f| match f {
            Some(f) => NodeInput::Named(i.fact(*f).id.clone()),
            None => NodeInput::One,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automata::{accepts, Bnta};

    /// Accepts iff the root is annotated 1.
    fn root_marked() -> Bnta<(char, u8)> {
        let mut a = Bnta::new();
        let (q0, q1) = (a.add_state("q0"), a.add_state("q1"));
        a.set_final(q1);
        for b in 0..2u8 {
            a.add_initial(('a', b), if b == 1 { q1 } else { q0 });
            for x in [q0, q1] {
                for y in [q0, q1] {
                    a.add_transition(x, y, ('a', b), if b == 1 { q1 } else { q0 });
                }
            }
        }
        a
    }

    #[test]
    fn root_marked_is_root_input() {
        let t = Tree::node('a', Tree::leaf('a'), Tree::node('a', Tree::leaf('a'), Tree::leaf('a')));
        let a = root_marked();
        let res = bool_provenance_circuit(&a, &t, &node_inputs(&t), 100).unwrap();
        assert!(res.circuit.is_arity_two());
        assert!(res.circuit.check_decomposition(&res.decomposition));
        for m in 0..32u32 {
            let nu = |n: usize| m >> n & 1 == 1;
            let annotated = t.map(|n, l| (*l, nu(n) as u8));
            let by_name = |g: GateId| {
                let n: usize = res.circuit.input_name(g)[1..].parse().unwrap();
                nu(n)
            };
            assert_eq!(res.circuit.eval(by_name), accepts(&a, &annotated));
            assert_eq!(res.circuit.eval(by_name), nu(t.root()));
        }
    }

    #[test]
    fn monotone_rejects_non_monotone() {
        let mut a: Bnta<(char, u8)> = Bnta::new();
        let q = a.add_state("q");
        a.set_final(q);
        a.add_initial(('a', 0), q);
        let t = Tree::leaf('a');
        assert!(matches!(monotone_provenance_circuit(&a, &t, &node_inputs(&t), 10), Err(Error::NotMonotone(_))));
        let res = bool_provenance_circuit(&a, &t, &node_inputs(&t), 10).unwrap();
        assert!(res.circuit.eval(|_| false));
        assert!(!res.circuit.eval(|_| true));
    }
}
