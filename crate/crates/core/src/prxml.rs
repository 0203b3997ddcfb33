//! Probabilistic XML: documents with `fie` (event formulas on edges) or
//! `ind`/`mux` (local independent or exclusive choices) nodes, their
//! left-child-right-sibling form, the relational encoding over `FC`, `NS`
//! and `P_λ`, and probability evaluation through pc-instances.
//!
//! Queries are posed against the weak relational encoding: `ind`, `mux`
//! and `fie` nodes appear as `P_det` facts, dropped nodes keep their `FC`
//! and `NS` facts but lose their label fact.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use num_rational::BigRational;
use num_traits::{One, Zero};
use serde_json::{json, Map, Value};

use crate::automata::TreeAutomaton;
use crate::encoding::KFact;
use crate::error::{Error, Result};
use crate::prob::{pc_to_pcc_on, query_probability_pcc, Formula, PcInstance};
use crate::rational::{format_rational, parse_probability};
use crate::relational::{Instance, Signature, TreeDecomposition};
use crate::tree::{NodeId, Tree};
use crate::ucq::{compile_bool, Ucq};

/// Label of the relation for nodes that are not regular.
pub const DET: &str = "det";

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum NodeKind {
    Regular(String),
    Ind,
    Mux,
    Fie,
}

/// Annotation of the edge to a child: none below regular nodes, a
/// probability below `ind` and `mux` nodes, a formula below `fie` nodes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EdgeAnn {
    None,
    Prob(BigRational),
    Cond(Formula),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PrXmlNode {
    pub kind: NodeKind,
    pub children: Vec<(EdgeAnn, PrXmlNode)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PrXmlDoc {
    pub root: PrXmlNode,
    /// Probabilities of the events of `fie` formulas.
    pub events: BTreeMap<String, BigRational>,
}

/// A deterministic unranked ordered tree.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct XmlTree {
    pub label: String,
    pub children: Vec<XmlTree>,
}

impl XmlTree {
    pub fn leaf(label: &str) -> Self {
        XmlTree { label: label.to_string(), children: Vec::new() }
    }

    pub fn new(label: &str, children: Vec<XmlTree>) -> Self {
        XmlTree { label: label.to_string(), children }
    }

    pub fn size(&self) -> usize {
        1 + self.children.iter().map(XmlTree::size).sum::<usize>()
    }
}

/// `a(b, c(d))`
impl fmt::Display for XmlTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.label)?;
        if !self.children.is_empty() {
            write!(f, "(")?;
            for (i, c) in self.children.iter().enumerate() {
                if i > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{c}")?;
            }
            write!(f, ")")?;
        }
        Ok(())
    }
}

impl PrXmlNode {
    pub fn regular(label: &str, children: Vec<PrXmlNode>) -> Self {
        PrXmlNode { kind: NodeKind::Regular(label.to_string()), children: children.into_iter().map(|c| (EdgeAnn::None, c)).collect() }
    }

    pub fn ind(children: Vec<(BigRational, PrXmlNode)>) -> Self {
        PrXmlNode { kind: NodeKind::Ind, children: children.into_iter().map(|(p, c)| (EdgeAnn::Prob(p), c)).collect() }
    }

    pub fn mux(children: Vec<(BigRational, PrXmlNode)>) -> Self {
        PrXmlNode { kind: NodeKind::Mux, children: children.into_iter().map(|(p, c)| (EdgeAnn::Prob(p), c)).collect() }
    }

    pub fn fie(children: Vec<(Formula, PrXmlNode)>) -> Self {
        PrXmlNode { kind: NodeKind::Fie, children: children.into_iter().map(|(f, c)| (EdgeAnn::Cond(f), c)).collect() }
    }

    /// An `ind` node keeping all its children.
    pub fn det(children: Vec<PrXmlNode>) -> Self {
        PrXmlNode::ind(children.into_iter().map(|c| (BigRational::one(), c)).collect())
    }

    pub fn from_xml(t: &XmlTree) -> Self {
        PrXmlNode::regular(&t.label, t.children.iter().map(PrXmlNode::from_xml).collect())
    }

    pub fn size(&self) -> usize {
        1 + self.children.iter().map(|(_, c)| c.size()).sum::<usize>()
    }

    fn is_full_binary(&self) -> bool {
        matches!(self.children.len(), 0 | 2) && self.children.iter().all(|(_, c)| c.is_full_binary())
    }

    fn walk<'a>(&'a self, out: &mut Vec<&'a PrXmlNode>) {
        out.push(self);
        for (_, c) in &self.children {
            c.walk(out);
        }
    }

    fn check(&self, events: &BTreeMap<String, BigRational>) -> Result<()> {
        let mut total = BigRational::zero();
        for (ann, c) in &self.children {
            match (&self.kind, ann) {
                (NodeKind::Regular(_), EdgeAnn::None) => {}
                (NodeKind::Ind | NodeKind::Mux, EdgeAnn::Prob(p)) => {
                    if p < &BigRational::zero() || p > &BigRational::one() {
                        return Err(Error::input(format!("edge probability {p} outside [0,1]")));
                    }
                    total += p;
                }
                (NodeKind::Fie, EdgeAnn::Cond(f)) => {
                    if let Some(e) = f.events().into_iter().find(|e| !events.contains_key(e)) {
                        return Err(Error::input(format!("undeclared event {e}")));
                    }
                }
                (kind, _) => return Err(Error::input(format!("wrong edge annotation below a {} node", kind_name(kind)))),
            }
            c.check(events)?;
        }
        if self.kind == NodeKind::Mux && total > BigRational::one() {
            return Err(Error::input(format!("mux probabilities sum to {total} > 1")));
        }
        if let NodeKind::Regular(l) = &self.kind {
            check_label(l)?;
        }
        Ok(())
    }
}

fn kind_name(kind: &NodeKind) -> &str {
    match kind {
        NodeKind::Regular(l) => l,
        NodeKind::Ind => "ind",
        NodeKind::Mux => "mux",
        NodeKind::Fie => "fie",
    }
}

fn check_label(l: &str) -> Result<()> {
    let ok = !l.is_empty() && l.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
    if !ok || [DET, "ind", "mux", "fie"].contains(&l) {
        return Err(Error::input(format!("invalid or reserved label {l:?}")));
    }
    Ok(())
}

/// Relation holding the nodes with the given label.
pub fn label_relation(label: &str) -> String {
    format!("P_{label}")
}

impl PrXmlDoc {
    pub fn new(root: PrXmlNode, events: BTreeMap<String, BigRational>) -> Result<Self> {
        let d = PrXmlDoc { root, events };
        d.validate()?;
        Ok(d)
    }

    pub fn deterministic(t: &XmlTree) -> Self {
        PrXmlDoc { root: PrXmlNode::from_xml(t), events: BTreeMap::new() }
    }

    pub fn validate(&self) -> Result<()> {
        if !matches!(self.root.kind, NodeKind::Regular(_)) {
            return Err(Error::input("the root must be a regular node"));
        }
        for (e, p) in &self.events {
            if p < &BigRational::zero() || p > &BigRational::one() {
                return Err(Error::input(format!("event {e} has probability {p} outside [0,1]")));
            }
        }
        self.root.check(&self.events)
    }

    pub fn nodes(&self) -> Vec<&PrXmlNode> {
        let mut out = Vec::new();
        self.root.walk(&mut out);
        out
    }

    pub fn has_fie(&self) -> bool {
        self.nodes().iter().any(|n| n.kind == NodeKind::Fie)
    }

    pub fn has_muxind(&self) -> bool {
        self.nodes().iter().any(|n| matches!(n.kind, NodeKind::Ind | NodeKind::Mux))
    }

    /// Full binary, with the probabilities below every `mux` summing to 1.
    pub fn is_binary_form(&self) -> bool {
        self.root.is_full_binary()
            && self.nodes().iter().filter(|n| n.kind == NodeKind::Mux).all(|n| {
                n.children.iter().map(|(a, _)| prob_of(a)).sum::<BigRational>().is_one()
            })
    }

    /// The possible world of a `fie` document under a valuation of its
    /// events: every `fie` node is replaced by its children whose edge
    /// formula holds.
    pub fn world(&self, nu: &dyn Fn(&str) -> bool) -> Result<XmlTree> {
        if self.has_muxind() {
            return Err(Error::input("valuations only apply to fie documents"));
        }
        fn forest(n: &PrXmlNode, nu: &dyn Fn(&str) -> bool, out: &mut Vec<XmlTree>) {
            match &n.kind {
                NodeKind::Regular(l) => {
                    let mut children = Vec::new();
                    for (_, c) in &n.children {
                        forest(c, nu, &mut children);
                    }
                    out.push(XmlTree { label: l.clone(), children });
                }
                _ => {
                    for (ann, c) in &n.children {
                        if matches!(ann, EdgeAnn::Cond(f) if f.eval(nu)) {
                            forest(c, nu, out);
                        }
                    }
                }
            }
        }
        let mut out = Vec::new();
        forest(&self.root, nu, &mut out);
        Ok(out.pop().expect("the root is regular"))
    }

    pub fn to_json(&self) -> Value {
        let events: BTreeMap<&String, String> = self.events.iter().map(|(e, p)| (e, format_rational(p))).collect();
        json!({ "events": events, "root": node_to_json(&self.root) })
    }

    /// Reads `{"events": {...}, "root": node}` or a bare node. A node is
    /// `{"label": "a", "children": [...]}` for regular nodes, or has a
    /// `"kind"` among `ind`, `mux`, `fie`, `det`; children entries are
    /// `{"prob": "3/10", "node": ...}` below `ind`/`mux`, `{"cond": "x &
    /// !y", "node": ...}` below `fie`, and plain nodes otherwise.
    pub fn from_json(value: &Value) -> Result<Self> {
        let (root, events) = match value.get("root") {
            Some(r) => (r, value.get("events")),
            None => (value, None),
        };
        let mut ev = BTreeMap::new();
        if let Some(events) = events {
            let m = events.as_object().ok_or_else(|| Error::input("events must be an object"))?;
            for (e, p) in m {
                let p = p.as_str().ok_or_else(|| Error::input("event probabilities are strings such as \"1/2\""))?;
                ev.insert(e.clone(), parse_probability(p)?);
            }
        }
        PrXmlDoc::new(node_from_json(root)?, ev)
    }
}

impl fmt::Display for PrXmlDoc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn go(n: &PrXmlNode, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            write!(f, "{}", kind_name(&n.kind))?;
            if !n.children.is_empty() {
                write!(f, "(")?;
                for (i, (ann, c)) in n.children.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    match ann {
                        EdgeAnn::None => {}
                        EdgeAnn::Prob(p) => write!(f, "{}: ", format_rational(p))?,
                        EdgeAnn::Cond(c) => write!(f, "[{c}] ")?,
                    }
                    go(c, f)?;
                }
                write!(f, ")")?;
            }
            Ok(())
        }
        go(&self.root, f)
    }
}

fn prob_of(a: &EdgeAnn) -> BigRational {
    match a {
        EdgeAnn::Prob(p) => p.clone(),
        _ => BigRational::one(),
    }
}

fn node_to_json(n: &PrXmlNode) -> Value {
    let children: Vec<Value> = n
        .children
        .iter()
        .map(|(ann, c)| match ann {
            EdgeAnn::None => node_to_json(c),
            EdgeAnn::Prob(p) => json!({ "prob": format_rational(p), "node": node_to_json(c) }),
            EdgeAnn::Cond(f) => json!({ "cond": f.to_string(), "node": node_to_json(c) }),
        })
        .collect();
    let mut m = Map::new();
    match &n.kind {
        NodeKind::Regular(l) => {
            m.insert("label".into(), json!(l));
        }
        k => {
            m.insert("kind".into(), json!(kind_name(k)));
        }
    }
    if !children.is_empty() {
        m.insert("children".into(), Value::Array(children));
    }
    Value::Object(m)
}

fn node_from_json(v: &Value) -> Result<PrXmlNode> {
    let obj = v.as_object().ok_or_else(|| Error::input("document nodes are objects"))?;
    let kind = obj.get("kind").and_then(Value::as_str).unwrap_or("regular");
    let entries: &[Value] = match obj.get("children") {
        None => &[],
        Some(Value::Array(a)) => a,
        Some(_) => return Err(Error::input("children must be an array")),
    };
    let child = |e: &Value| node_from_json(e.get("node").unwrap_or(e));
    let mut children = Vec::new();
    for e in entries {
        let ann = match kind {
            "regular" | "det" => EdgeAnn::None,
            "ind" | "mux" => {
                let p = e.get("prob").and_then(Value::as_str).ok_or_else(|| Error::input(format!("{kind} children need a \"prob\"")))?;
                EdgeAnn::Prob(parse_probability(p)?)
            }
            "fie" => {
                let c = e.get("cond").and_then(Value::as_str).ok_or_else(|| Error::input("fie children need a \"cond\""))?;
                EdgeAnn::Cond(Formula::parse(c)?)
            }
            other => return Err(Error::input(format!("unknown node kind {other:?}"))),
        };
        children.push((ann, child(e)?));
    }
    Ok(match kind {
        "regular" => {
            let label = obj.get("label").and_then(Value::as_str).ok_or_else(|| Error::input("regular nodes need a \"label\""))?;
            PrXmlNode { kind: NodeKind::Regular(label.to_string()), children }
        }
        "det" => PrXmlNode::det(children.into_iter().map(|(_, c)| c).collect()),
        "ind" => PrXmlNode { kind: NodeKind::Ind, children },
        "mux" => PrXmlNode { kind: NodeKind::Mux, children },
        _ => PrXmlNode { kind: NodeKind::Fie, children },
    })
}

/// A node of the LCRS representation: the document node's kind and the
/// annotation of the edge from its parent.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LcrsNode {
    pub kind: NodeKind,
    pub ann: EdgeAnn,
}

/// Left-child-right-sibling representation: the left child of a node is
/// its first child, the right child its next sibling; `None` marks the
/// padding nodes that make the tree full.
pub type LcrsTree = Tree<Option<LcrsNode>>;

pub fn lcrs(d: &PrXmlDoc) -> LcrsTree {
    // Builds the LCRS tree of a sibling sequence, right to left.
    fn seq(siblings: &[(EdgeAnn, PrXmlNode)]) -> LcrsTree {
        let mut acc = Tree::leaf(None);
        for (ann, n) in siblings.iter().rev() {
            let first = seq(&n.children);
            acc = Tree::node(Some(LcrsNode { kind: n.kind.clone(), ann: ann.clone() }), first, acc);
        }
        acc
    }
    seq(&[(EdgeAnn::None, d.root.clone())])
}

/// Inverse of [`lcrs`].
pub fn from_lcrs(t: &LcrsTree, events: BTreeMap<String, BigRational>) -> Result<PrXmlDoc> {
    fn seq(t: &LcrsTree, mut n: NodeId) -> Result<Vec<(EdgeAnn, PrXmlNode)>> {
        let mut out = Vec::new();
        while let Some(label) = t.label(n) {
            let (l, r) = t.children(n).ok_or_else(|| Error::input("an LCRS node is missing its children"))?;
            out.push((label.ann.clone(), PrXmlNode { kind: label.kind.clone(), children: seq(t, l)? }));
            n = r;
        }
        if t.children(n).is_some() {
            return Err(Error::input("a padding node has children"));
        }
        Ok(out)
    }
    let mut top = seq(t, t.root())?;
    if top.len() != 1 {
        return Err(Error::input("the LCRS root must have no sibling"));
    }
    PrXmlDoc::new(top.pop().unwrap().1, events)
}

/// The relational encoding of a document over `FC`, `NS` and `P_λ`, with
/// non-regular nodes as `P_det`. Node `i` in preorder is element `n{i}`.
/// Also returns, per fact, the annotation of the edge above the node of
/// its `P` fact (`true` for `FC` and `NS` facts), and the LCRS tree with
/// the element of each non-padding node.
fn encode_doc(d: &PrXmlDoc) -> Result<(Instance, Vec<Formula>, LcrsTree, Vec<Option<usize>>)> {
    let t = lcrs(d);
    let mut labels: BTreeSet<String> = BTreeSet::new();
    for n in d.nodes() {
        labels.insert(match &n.kind {
            NodeKind::Regular(l) => l.clone(),
            _ => DET.to_string(),
        });
    }
    let mut sig = Signature::new().with("FC", 2).with("NS", 2);
    for l in &labels {
        sig.add(&label_relation(l), 1)?;
    }
    let mut inst = Instance::new(sig);
    let mut elem: Vec<Option<usize>> = vec![None; t.len()];
    for n in t.preorder() {
        if t.label(n).is_some() {
            elem[n] = Some(inst.intern(&format!("n{}", inst.num_elements())));
        }
    }
    let mut cond = Vec::new();
    for n in t.preorder() {
        let Some(label) = t.label(n) else { continue };
        let e = elem[n].unwrap();
        let rel = label_relation(match &label.kind {
            NodeKind::Regular(l) => l,
            _ => DET,
        });
        inst.add_fact_elems(&rel, vec![e], None)?;
        cond.push(match &label.ann {
            EdgeAnn::Cond(f) => f.clone(),
            EdgeAnn::Prob(_) => return Err(Error::input("ind and mux nodes have no relational encoding; convert to fie first")),
            EdgeAnn::None => Formula::Const(true),
        });
        let (l, r) = t.children(n).unwrap();
        for (rel, c) in [("FC", l), ("NS", r)] {
            if let Some(ec) = elem[c] {
                inst.add_fact_elems(rel, vec![e, ec], None)?;
                cond.push(Formula::Const(true));
            }
        }
    }
    Ok((inst, cond, t, elem))
}

/// Relational encoding of a deterministic document.
pub fn xml_relational_encoding(t: &XmlTree) -> Result<Instance> {
    let d = PrXmlDoc::deterministic(t);
    d.validate()?;
    Ok(encode_doc(&d)?.0)
}

/// A decomposition of the relational encoding of width 1, shaped like
/// the LCRS tree: node `n` with parent `n'` gets the bag `{n', n}`.
pub fn xml_decomposition(t: &XmlTree) -> Result<TreeDecomposition> {
    let d = PrXmlDoc::deterministic(t);
    d.validate()?;
    let (_, _, lt, elem) = encode_doc(&d)?;
    Ok(lcrs_decomposition(&lt, &elem, &vec![Vec::new(); lt.len()]))
}

fn lcrs_decomposition(t: &LcrsTree, elem: &[Option<usize>], extra: &[Vec<usize>]) -> TreeDecomposition {
    let nodes: Vec<NodeId> = t.preorder().into_iter().filter(|&n| elem[n].is_some()).collect();
    let index: HashMap<NodeId, usize> = nodes.iter().enumerate().map(|(i, &n)| (n, i)).collect();
    let mut doms = Vec::new();
    let mut children = Vec::new();
    for &n in &nodes {
        let mut dom: Vec<usize> = t.parent(n).and_then(|p| elem[p]).into_iter().collect();
        dom.push(elem[n].unwrap());
        dom.extend(&extra[n]);
        doms.push(dom);
        let (l, r) = t.children(n).unwrap();
        children.push([l, r].into_iter().filter_map(|c| index.get(&c).copied()).collect());
    }
    TreeDecomposition::from_parts(doms, children, 0)
}

/// Reads a document back from a (weak) relational encoding: nodes without
/// a label fact are dropped with their descendants, `P_det` nodes are
/// replaced by their children. `None` if the facts do not describe a tree
/// with a regular root.
pub fn decode_weak(i: &Instance) -> Option<XmlTree> {
    let n = i.num_elements();
    let mut fc: Vec<Option<usize>> = vec![None; n];
    let mut ns: Vec<Option<usize>> = vec![None; n];
    let mut has_parent = vec![false; n];
    let mut label: Vec<Option<String>> = vec![None; n];
    for f in i.facts() {
        match (f.rel.as_str(), &f.args[..]) {
            ("FC", &[a, b]) | ("NS", &[a, b]) => {
                let slot = if f.rel == "FC" { &mut fc[a] } else { &mut ns[a] };
                if slot.is_some() || has_parent[b] {
                    return None;
                }
                *slot = Some(b);
                has_parent[b] = true;
            }
            (rel, &[a]) => {
                let l = rel.strip_prefix("P_")?;
                if label[a].replace(l.to_string()).is_some() {
                    return None;
                }
            }
            _ => return None,
        }
    }
    let roots: Vec<usize> = (0..n).filter(|&e| !has_parent[e]).collect();
    let [root] = roots[..] else { return None };
    let mut seen = vec![false; n];
    fn forest(
        first: Option<usize>,
        fc: &[Option<usize>],
        ns: &[Option<usize>],
        label: &[Option<String>],
        seen: &mut [bool],
        out: &mut Vec<XmlTree>,
    ) -> Option<()> {
        let mut cur = first;
        while let Some(e) = cur {
            if std::mem::replace(&mut seen[e], true) {
                return None;
            }
            let mut children = Vec::new();
            forest(fc[e], fc, ns, label, seen, &mut children)?;
            match label[e].as_deref() {
                None => {}
                Some(DET) => out.extend(children),
                Some(l) => out.push(XmlTree { label: l.to_string(), children }),
            }
            cur = ns[e];
        }
        Some(())
    }
    if ns[root].is_some() || matches!(label[root].as_deref(), None | Some(DET)) {
        return None;
    }
    let mut out = Vec::new();
    forest(Some(root), &fc, &ns, &label, &mut seen, &mut out)?;
    if seen.iter().any(|s| !s) {
        return None;
    }
    out.pop()
}

/// Rewrites a `mux`/`ind` document into an equivalent full binary one
/// where the probabilities below every `mux` sum to 1. `det` nodes are
/// `ind` nodes whose edges have probability 1.
pub fn muxind_to_binary(d: &PrXmlDoc) -> Result<PrXmlDoc> {
    d.validate()?;
    if d.has_fie() {
        return Err(Error::input("expected a mux/ind document"));
    }
    fn det_leaf() -> PrXmlNode {
        PrXmlNode { kind: NodeKind::Ind, children: Vec::new() }
    }
    fn go(n: &PrXmlNode) -> PrXmlNode {
        let mut kids: Vec<(EdgeAnn, PrXmlNode)> = n.children.iter().map(|(a, c)| (a.clone(), go(c))).collect();
        let mut kind = n.kind.clone();
        if kind == NodeKind::Mux {
            let total: BigRational = kids.iter().map(|(a, _)| prob_of(a)).sum();
            if total < BigRational::one() {
                kids.push((EdgeAnn::Prob(BigRational::one() - total), det_leaf()));
            }
            // p_i is kept with p_i / (p_i + ... + p_m) at the i-th mux.
            while kids.len() > 2 {
                let (la, lc) = kids.pop().unwrap();
                let (pa, pc) = kids.pop().unwrap();
                let (p, q) = (prob_of(&pa), prob_of(&la));
                let sum = &p + &q;
                let inner = if sum.is_zero() {
                    PrXmlNode::mux(vec![(BigRational::one(), pc), (BigRational::zero(), lc)])
                } else {
                    PrXmlNode::mux(vec![(&p / &sum, pc), (&q / &sum, lc)])
                };
                kids.push((EdgeAnn::Prob(sum), inner));
            }
            if kids.len() == 1 {
                kind = NodeKind::Ind;
            }
        } else if kids.len() > 2 {
            // Chain the children through det nodes (ind with probability 1 edges).
            let mut tail = kids.pop().unwrap();
            while kids.len() > 1 {
                let prev = kids.pop().unwrap();
                let link = match kind {
                    NodeKind::Regular(_) => PrXmlNode { kind: NodeKind::Ind, children: vec![promote(prev), promote(tail)] },
                    _ => PrXmlNode { kind: NodeKind::Ind, children: vec![prev, tail] },
                };
                tail = (link_ann(&kind), link);
            }
            kids.push(tail);
        }
        if kids.len() == 1 {
            let ann = link_ann(&kind);
            kids.push((ann, det_leaf()));
        }
        PrXmlNode { kind, children: kids }
    }
    // Edge into a det node from a node of the given kind.
    fn link_ann(kind: &NodeKind) -> EdgeAnn {
        match kind {
            NodeKind::Regular(_) => EdgeAnn::None,
            _ => EdgeAnn::Prob(BigRational::one()),
        }
    }
    // A child of a regular node moved below a det node.
    fn promote((_, c): (EdgeAnn, PrXmlNode)) -> (EdgeAnn, PrXmlNode) {
        (EdgeAnn::Prob(BigRational::one()), c)
    }
    Ok(PrXmlDoc { root: go(&d.root), events: d.events.clone() })
}

/// Equivalent `fie` document of a binary-form `mux`/`ind` document: an
/// `ind` node gets one fresh event per child edge (or `true` for
/// probability 1), a `mux` node one event `e` with `e` and `!e` on its two
/// edges. Every event scope then has size at most 1.
pub fn muxind_to_fie(d: &PrXmlDoc) -> Result<PrXmlDoc> {
    if !d.is_binary_form() || d.has_fie() {
        return Err(Error::input("expected a mux/ind document in binary form"));
    }
    let mut events = d.events.clone();
    let mut counter = 0usize;
    fn go(n: &PrXmlNode, events: &mut BTreeMap<String, BigRational>, counter: &mut usize) -> PrXmlNode {
        let id = *counter;
        *counter += 1;
        let mut children: Vec<(EdgeAnn, PrXmlNode)> = Vec::new();
        for (i, (ann, c)) in n.children.iter().enumerate() {
            let sub = go(c, events, counter);
            let cond = match n.kind {
                NodeKind::Regular(_) => None,
                NodeKind::Ind => {
                    let p = prob_of(ann);
                    Some(if p.is_one() {
                        Formula::Const(true)
                    } else {
                        let e = format!("ind{id}_{}", i + 1);
                        events.insert(e.clone(), p);
                        Formula::Var(e)
                    })
                }
                NodeKind::Mux => {
                    let e = format!("mux{id}");
                    if i == 0 {
                        events.insert(e.clone(), prob_of(ann));
                        Some(Formula::Var(e))
                    } else {
                        Some(Formula::Not(Box::new(Formula::Var(e))))
                    }
                }
                NodeKind::Fie => unreachable!(),
            };
            children.push((cond.map_or(EdgeAnn::None, EdgeAnn::Cond), sub));
        }
        let kind = match n.kind {
            NodeKind::Regular(_) => n.kind.clone(),
            _ => NodeKind::Fie,
        };
        PrXmlNode { kind, children }
    }
    let root = go(&d.root, &mut events, &mut counter);
    PrXmlDoc::new(root, events)
}

/// Event scopes on the LCRS tree: for each node, the events whose
/// occurrences (edges above nodes mentioning them) span a subtree
/// containing it.
fn scopes(t: &LcrsTree) -> Vec<BTreeSet<String>> {
    let mut depth = vec![0usize; t.len()];
    for n in t.preorder() {
        if let Some(p) = t.parent(n) {
            depth[n] = depth[p] + 1;
        }
    }
    let mut occ: BTreeMap<String, Vec<NodeId>> = BTreeMap::new();
    for n in 0..t.len() {
        if let Some(LcrsNode { ann: EdgeAnn::Cond(f), .. }) = t.label(n) {
            for e in f.events() {
                occ.entry(e).or_default().push(n);
            }
        }
    }
    let mut out = vec![BTreeSet::new(); t.len()];
    for (e, nodes) in occ {
        let mut lca = nodes[0];
        for &n in &nodes[1..] {
            let mut a = n;
            while depth[a] > depth[lca] {
                a = t.parent(a).unwrap();
            }
            while depth[lca] > depth[a] {
                lca = t.parent(lca).unwrap();
            }
            while a != lca {
                a = t.parent(a).unwrap();
                lca = t.parent(lca).unwrap();
            }
        }
        for &n in &nodes {
            let mut a = n;
            loop {
                if !out[a].insert(e.clone()) || a == lca {
                    break;
                }
                a = t.parent(a).unwrap();
            }
        }
        out[lca].insert(e);
    }
    out
}

/// Largest number of events whose scope contains a given LCRS node.
pub fn scope_width(d: &PrXmlDoc) -> usize {
    scopes(&lcrs(d)).iter().map(BTreeSet::len).max().unwrap_or(0)
}

/// The pc-encoding of a `fie` document: its relational encoding where each
/// `P` fact carries the formula of the edge above its node and `FC`/`NS`
/// facts are certain. Also returns a decomposition of the pc-instance's
/// encoding shaped like the LCRS tree, with bag `{n', n} ∪ S(n)`, hence
/// of width at most the scope width plus one.
pub fn fie_to_pc(d: &PrXmlDoc) -> Result<(PcInstance, TreeDecomposition)> {
    d.validate()?;
    if d.has_muxind() {
        return Err(Error::input("expected a fie document; convert mux/ind documents first"));
    }
    let (instance, cond, t, elem) = encode_doc(d)?;
    let j = PcInstance { instance, cond, events: d.events.clone() };
    let ne = j.instance.num_elements();
    let used: HashMap<String, usize> = j.used_events().into_iter().enumerate().map(|(i, e)| (e, ne + i)).collect();
    let extra: Vec<Vec<usize>> = scopes(&t).into_iter().map(|s| s.iter().map(|e| used[e]).collect()).collect();
    let witness = lcrs_decomposition(&t, &elem, &extra);
    Ok((j, witness))
}

/// Rewrites any supported document into a `fie` document.
pub fn to_fie(d: &PrXmlDoc) -> Result<PrXmlDoc> {
    d.validate()?;
    if d.has_muxind() {
        muxind_to_fie(&muxind_to_binary(d)?)
    } else {
        Ok(d.clone())
    }
}

/// Probability that the weak encoding of a random world is accepted. The
/// automaton must read encodings of width 1.
pub fn prxml_probability<A>(a: &A, d: &PrXmlDoc, cap: usize) -> Result<BigRational>
where
    A: TreeAutomaton<Label = KFact>,
{
    let (j, t) = fie_to_pc(&to_fie(d)?)?;
    let (pcc, tw) = pc_to_pcc_on(&j, &t)?;
    Ok(query_probability_pcc(a, &pcc, &tw, cap)?.0)
}

/// Probability that a Boolean UCQ over `FC`, `NS` and `P_λ` holds on the
/// weak encoding of a random world.
pub fn prxml_query_probability(q: &Ucq, d: &PrXmlDoc, cap: usize) -> Result<BigRational> {
    if !q.is_boolean() {
        return Err(Error::input("probabilities are defined for Boolean queries"));
    }
    prxml_probability(&compile_bool(q, 1)?, d, cap)
}
