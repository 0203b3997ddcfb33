//! The k-fact alphabet and tree encodings of treelike instances.
//!
//! A k-fact pairs a set of at most `k + 1` slots (out of `2k + 2`) with at
//! most one fact whose arguments are slots of that set. Slots are numbered
//! from 0 internally and printed as `a1, a2, ...`.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::relational::{normalize_decomposition, FactId, Instance, Signature, TreeDecomposition};
use crate::tree::{NodeId, Tree};

/// Maximum number of slots a label can use (bitmask width).
pub const MAX_SLOTS: usize = 32;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SlotFact {
    pub rel: Arc<str>,
    pub args: Vec<u8>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct KFact {
    /// Bit `s` is set iff slot `s` is in the domain.
    pub dom: u32,
    pub fact: Option<SlotFact>,
}

impl KFact {
    pub fn empty() -> Self {
        KFact { dom: 0, fact: None }
    }

    pub fn dom_size(&self) -> usize {
        self.dom.count_ones() as usize
    }

    pub fn has_slot(&self, s: u8) -> bool {
        self.dom >> s & 1 == 1
    }

    pub fn slots(&self) -> impl Iterator<Item = u8> + '_ {
        (0..MAX_SLOTS as u8).filter(move |&s| self.has_slot(s))
    }

    /// The same domain without a fact.
    pub fn neuter(&self) -> KFact {
        KFact { dom: self.dom, fact: None }
    }

    /// Checks the width-`k` constraints.
    pub fn check(&self, k: usize) -> Result<()> {
        let slots = 2 * k + 2;
        if slots < MAX_SLOTS && self.dom >> slots != 0 {
            return Err(Error::InvalidLabel(format!("{self}: slot beyond a{slots}")));
        }
        if self.dom_size() > k + 1 {
            return Err(Error::InvalidLabel(format!("{self}: more than {} slots", k + 1)));
        }
        if let Some(f) = &self.fact {
            if f.args.iter().any(|&a| !self.has_slot(a)) {
                return Err(Error::InvalidLabel(format!("{self}: argument outside the domain")));
            }
        }
        Ok(())
    }
}

/// Builds a validated k-fact from 0-based slots.
pub fn alphabet_label(dom: &[u8], fact: Option<(&str, &[u8])>, k: usize) -> Result<KFact> {
    let mut mask = 0u32;
    for &s in dom {
        if s as usize >= MAX_SLOTS {
            return Err(Error::InvalidLabel(format!("slot a{} out of range", s + 1)));
        }
        mask |= 1 << s;
    }
    let label = KFact { dom: mask, fact: fact.map(|(rel, args)| SlotFact { rel: Arc::from(rel), args: args.to_vec() }) };
    label.check(k)?;
    Ok(label)
}

/// Every label of the width-`k` alphabet over `sig`. Only practical for
/// small `k` and signatures; the automata never need it.
pub fn enumerate_alphabet(k: usize, sig: &Signature) -> Vec<KFact> {
    let slots = 2 * k + 2;
    assert!(slots <= MAX_SLOTS, "width too large to enumerate");
    let mut out = Vec::new();
    for mask in 0u64..(1u64 << slots) {
        let mask = mask as u32;
        if mask.count_ones() as usize > k + 1 {
            continue;
        }
        let dom: Vec<u8> = (0..slots as u8).filter(|&s| mask >> s & 1 == 1).collect();
        out.push(KFact { dom: mask, fact: None });
        for (rel, arity) in sig.relations() {
            let rel: Arc<str> = Arc::from(rel);
            let mut tuple = vec![0usize; arity];
            if dom.is_empty() {
                continue;
            }
            loop {
                let args: Vec<u8> = tuple.iter().map(|&i| dom[i]).collect();
                out.push(KFact { dom: mask, fact: Some(SlotFact { rel: rel.clone(), args }) });
                let mut pos = 0;
                while pos < arity {
                    tuple[pos] += 1;
                    if tuple[pos] < dom.len() {
                        break;
                    }
                    tuple[pos] = 0;
                    pos += 1;
                }
                if pos == arity {
                    break;
                }
            }
        }
    }
    out
}

impl fmt::Display for KFact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let dom: Vec<String> = self.slots().map(|s| format!("a{}", s + 1)).collect();
        write!(f, "{{{}}}", dom.join(","))?;
        if let Some(fact) = &self.fact {
            let args: Vec<String> = fact.args.iter().map(|s| format!("a{}", s + 1)).collect();
            write!(f, " {}({})", fact.rel, args.join(","))?;
        }
        Ok(())
    }
}

fn parse_slot(text: &str) -> Result<u8> {
    let bad = || Error::InvalidLabel(format!("bad slot {text:?}"));
    let n: usize = text.trim().strip_prefix('a').ok_or_else(bad)?.parse().map_err(|_| bad())?;
    if n == 0 || n > MAX_SLOTS {
        return Err(bad());
    }
    Ok((n - 1) as u8)
}

impl FromStr for KFact {
    type Err = Error;

    /// Parses `{a1,a2} R(a1,a2)`, `{a1}` or `{}`.
    fn from_str(text: &str) -> Result<Self> {
        let bad = || Error::InvalidLabel(format!("cannot parse label {text:?}"));
        let text = text.trim();
        let rest = text.strip_prefix('{').ok_or_else(bad)?;
        let (dom_text, rest) = rest.split_once('}').ok_or_else(bad)?;
        let mut dom = 0u32;
        for part in dom_text.split(',').filter(|p| !p.trim().is_empty()) {
            dom |= 1 << parse_slot(part)?;
        }
        let rest = rest.trim();
        let fact = if rest.is_empty() {
            None
        } else {
            let (rel, args) = rest.split_once('(').ok_or_else(bad)?;
            let args = args.strip_suffix(')').ok_or_else(bad)?;
            let args: Vec<u8> = args.split(',').map(parse_slot).collect::<Result<_>>()?;
            Some(SlotFact { rel: Arc::from(rel.trim()), args })
        };
        let label = KFact { dom, fact };
        if label.fact.as_ref().is_some_and(|f| f.args.iter().any(|&a| !label.has_slot(a))) {
            return Err(bad());
        }
        Ok(label)
    }
}

impl Serialize for KFact {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for KFact {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

/// A tree encoding together with the bijection between facts and the nodes
/// that carry them.
#[derive(Clone, Debug)]
pub struct TreeEncoding {
    pub tree: Tree<KFact>,
    pub width: usize,
    pub node_fact: Vec<Option<FactId>>,
    pub fact_node: Vec<NodeId>,
}

impl TreeEncoding {
    /// Annotates every node: fact nodes get `nu(fact)`, other nodes get 1.
    pub fn annotate(&self, nu: impl Fn(FactId) -> u8) -> Tree<(KFact, u8)> {
        self.tree.map(|n, l| (l.clone(), self.node_fact[n].map_or(1, &nu)))
    }
}

/// Encodes `i` along `t`. The decomposition is normalized first if needed;
/// the encoding has the same skeleton as the normalized decomposition.
pub fn encode(i: &Instance, t: &TreeDecomposition) -> Result<TreeEncoding> {
    let t = normalize_decomposition(i, t);
    let width = t.width();
    if width + 1 > MAX_SLOTS / 2 {
        return Err(Error::input("decomposition too wide to encode"));
    }
    let assign = t.assignment.as_ref().expect("normalized decompositions carry an assignment");
    let mut node_fact = vec![None; t.len()];
    for (f, &b) in assign.iter().enumerate() {
        node_fact[b] = Some(f);
    }
    let mut slot_maps: Vec<HashMap<usize, u8>> = vec![HashMap::new(); t.len()];
    for b in t.preorder() {
        let parent = t.bags[b].parent.map(|p| slot_maps[p].clone()).unwrap_or_default();
        let taken: u32 = parent.values().fold(0, |m, &s| m | 1 << s);
        let mut map = HashMap::new();
        let mut used = 0u32;
        for &e in &t.bags[b].dom {
            if let Some(&s) = parent.get(&e) {
                map.insert(e, s);
                used |= 1 << s;
            }
        }
        for &e in &t.bags[b].dom {
            if map.contains_key(&e) {
                continue;
            }
            let s = (0..MAX_SLOTS as u8).find(|&s| (taken | used) >> s & 1 == 0).expect("enough slots");
            map.insert(e, s);
            used |= 1 << s;
        }
        slot_maps[b] = map;
    }
    let labels: Vec<KFact> = (0..t.len())
        .map(|b| {
            let map = &slot_maps[b];
            let dom = map.values().fold(0u32, |m, &s| m | 1 << s);
            let fact = node_fact[b].map(|f| {
                let fact = i.fact(f);
                SlotFact { rel: Arc::from(fact.rel.as_str()), args: fact.args.iter().map(|e| map[e]).collect() }
            });
            KFact { dom, fact }
        })
        .collect();
    let children = t
        .bags
        .iter()
        .map(|b| match b.children.as_slice() {
            [] => None,
            [l, r] => Some((*l, *r)),
            _ => unreachable!("normalized decompositions are binary full"),
        })
        .collect();
    let tree = Tree::from_parts(labels, children, t.root);
    let mut fact_node = vec![0; i.len()];
    for (n, f) in node_fact.iter().enumerate() {
        if let Some(f) = *f {
            fact_node[f] = n;
        }
    }
    Ok(TreeEncoding { tree, width, node_fact, fact_node })
}

/// Result of decoding: the instance and the fact created at each node.
#[derive(Clone, Debug)]
pub struct Decoded {
    pub instance: Instance,
    pub node_fact: Vec<Option<FactId>>,
}

/// Decodes a k-fact tree top-down, picking fresh elements for slots that are
/// not inherited from the parent. Returns `None` (invalid encoding) when the
/// same fact is produced twice or a relation is used with two arities.
pub fn decode(tree: &Tree<KFact>) -> Option<Decoded> {
    decode_weighted(&tree.map(|_, l| (l.clone(), 1)))
        .map(|(instance, node_fact, _)| Decoded { instance, node_fact })
}

/// A bag-instance: an instance plus a positive multiplicity per fact.
#[derive(Clone, Debug)]
pub struct BagInstance {
    pub instance: Instance,
    pub multiplicity: Vec<u32>,
    pub node_fact: Vec<Option<FactId>>,
}

/// Decodes an annotated tree: a fact node annotated 0 creates no fact,
/// otherwise the annotation is the multiplicity.
pub fn decode_bag(tree: &Tree<(KFact, u8)>) -> Option<BagInstance> {
    decode_weighted(tree).map(|(instance, node_fact, multiplicity)| BagInstance { instance, multiplicity, node_fact })
}

type DecodedParts = (Instance, Vec<Option<FactId>>, Vec<u32>);

fn decode_weighted(tree: &Tree<(KFact, u8)>) -> Option<DecodedParts> {
    let mut sig = Signature::new();
    for (label, ann) in tree.labels() {
        if let (Some(f), true) = (&label.fact, *ann > 0) {
            sig.add(&f.rel, f.args.len()).ok()?;
        }
    }
    let mut inst = Instance::new(sig);
    let mut elems: Vec<[usize; MAX_SLOTS]> = vec![[usize::MAX; MAX_SLOTS]; tree.len()];
    let mut fresh = 0usize;
    let mut node_fact = vec![None; tree.len()];
    let mut mult = Vec::new();
    for n in tree.preorder() {
        let (label, ann) = tree.label(n);
        let parent = tree.parent(n);
        for s in label.slots() {
            let inherited = parent.filter(|&p| tree.label(p).0.has_slot(s)).map(|p| elems[p][s as usize]);
            elems[n][s as usize] = inherited.unwrap_or_else(|| {
                fresh += 1;
                fresh - 1
            });
        }
        if let (Some(f), true) = (&label.fact, *ann > 0) {
            let names: Vec<String> = f.args.iter().map(|&s| format!("e{}", elems[n][s as usize])).collect();
            let args: Vec<&str> = names.iter().map(String::as_str).collect();
            let elem_ids: Vec<usize> = args.iter().map(|a| inst.intern(a)).collect();
            if inst.contains(&f.rel, &elem_ids) {
                return None;
            }
            let fid = inst.add_fact_elems(&f.rel, elem_ids, None).ok()?;
            node_fact[n] = Some(fid);
            mult.push(*ann as u32);
        }
    }
    Some((inst, node_fact, mult))
}

/// Replaces `(τ, 1)` by `τ` and `(τ, 0)` by the neutered label.
pub fn teval(tree: &Tree<(KFact, u8)>) -> Tree<KFact> {
    tree.map(|_, (l, b)| if *b == 0 { l.neuter() } else { l.clone() })
}

#[derive(Serialize, Deserialize)]
struct EncodingFile {
    width: usize,
    root: usize,
    nodes: Vec<NodeEntry>,
}

#[derive(Serialize, Deserialize)]
struct NodeEntry {
    dom: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    fact: Option<FactEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    ann: Option<u8>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    children: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct FactEntry {
    rel: String,
    args: Vec<usize>,
}

/// Serializes an encoding as a flat node array (slots printed 1-based).
pub fn encoding_to_json(tree: &Tree<KFact>, width: usize, ann: Option<&[u8]>) -> serde_json::Value {
    let nodes = (0..tree.len())
        .map(|n| {
            let l = tree.label(n);
            NodeEntry {
                dom: l.slots().map(|s| s as usize + 1).collect(),
                fact: l.fact.as_ref().map(|f| FactEntry {
                    rel: f.rel.to_string(),
                    args: f.args.iter().map(|&s| s as usize + 1).collect(),
                }),
                ann: ann.map(|a| a[n]),
                children: tree.children(n).map(|(a, b)| vec![a, b]).unwrap_or_default(),
            }
        })
        .collect();
    serde_json::to_value(EncodingFile { width, root: tree.root(), nodes }).expect("encoding serializes")
}

/// Parses the flat node-array format; returns the tree, its width and the
/// annotation if every node carries one.
pub fn encoding_from_json(value: &serde_json::Value) -> Result<(Tree<KFact>, usize, Option<Vec<u8>>)> {
    let file: EncodingFile =
        serde_json::from_value(value.clone()).map_err(|e| Error::input(format!("encoding file: {e}")))?;
    let n = file.nodes.len();
    if file.root >= n {
        return Err(Error::input("encoding root out of range"));
    }
    let mut labels = Vec::with_capacity(n);
    let mut children = Vec::with_capacity(n);
    let mut anns = Vec::with_capacity(n);
    let mut parents = vec![0usize; n];
    for node in &file.nodes {
        let to_slot = |s: usize| -> Result<u8> {
            if s == 0 || s > MAX_SLOTS {
                Err(Error::InvalidLabel(format!("slot {s} out of range")))
            } else {
                Ok((s - 1) as u8)
            }
        };
        let dom: Vec<u8> = node.dom.iter().map(|&s| to_slot(s)).collect::<Result<_>>()?;
        let fact = match &node.fact {
            None => None,
            Some(f) => Some((f.rel.as_str(), f.args.iter().map(|&s| to_slot(s)).collect::<Result<Vec<u8>>>()?)),
        };
        let label = alphabet_label(&dom, fact.as_ref().map(|(r, a)| (*r, a.as_slice())), file.width)?;
        labels.push(label);
        anns.push(node.ann);
        children.push(match node.children.as_slice() {
            [] => None,
            [l, r] if *l < n && *r < n => {
                parents[*l] += 1;
                parents[*r] += 1;
                Some((*l, *r))
            }
            _ => return Err(Error::input("encoding nodes need zero or two valid children")),
        });
    }
    if parents.iter().enumerate().any(|(i, &c)| c > 1 || (c == 1 && i == file.root) || (c == 0 && i != file.root)) {
        return Err(Error::input("encoding nodes do not form a tree"));
    }
    let tree = Tree::from_parts(labels, children, file.root);
    if tree.postorder().len() != n {
        return Err(Error::input("encoding nodes do not form a tree"));
    }
    let ann = anns.iter().copied().collect::<Option<Vec<u8>>>();
    Ok((tree, file.width, ann))
}
