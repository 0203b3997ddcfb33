//! Tree decompositions of hypergraphs (instances, circuits, combined encodings).

use std::collections::{BTreeSet, HashSet};

use serde_json::json;

use super::Instance;
use crate::error::{Error, Result};

/// Exact elimination-ordering search is used on connected components up to
/// this many vertices.
const EXACT_LIMIT: usize = 14;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Bag {
    /// Sorted, duplicate-free vertex indices.
    pub dom: Vec<usize>,
    pub children: Vec<usize>,
    pub parent: Option<usize>,
}

impl Bag {
    pub fn contains(&self, v: usize) -> bool {
        self.dom.binary_search(&v).is_ok()
    }

    pub fn covers(&self, edge: &[usize]) -> bool {
        edge.iter().all(|&v| self.contains(v))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TreeDecomposition {
    pub bags: Vec<Bag>,
    pub root: usize,
    /// Optional map from hyperedge (fact) index to a bag covering it.
    pub assignment: Option<Vec<usize>>,
}

impl TreeDecomposition {
    /// Builds a decomposition from bag domains and child lists.
    pub fn from_parts(doms: Vec<Vec<usize>>, children: Vec<Vec<usize>>, root: usize) -> Self {
        let mut bags: Vec<Bag> = doms
            .into_iter()
            .zip(children)
            .map(|(mut dom, children)| {
                dom.sort_unstable();
                dom.dedup();
                Bag { dom, children, parent: None }
            })
            .collect();
        for b in 0..bags.len() {
            for c in bags[b].children.clone() {
                bags[c].parent = Some(b);
            }
        }
        TreeDecomposition { bags, root, assignment: None }
    }

    pub fn single(dom: Vec<usize>) -> Self {
        Self::from_parts(vec![dom], vec![vec![]], 0)
    }

    pub fn len(&self) -> usize {
        self.bags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bags.is_empty()
    }

    /// Largest bag size minus one (0 when every bag has at most one vertex).
    pub fn width(&self) -> usize {
        self.bags.iter().map(|b| b.dom.len()).max().unwrap_or(0).saturating_sub(1)
    }

    pub fn preorder(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.len());
        let mut stack = vec![self.root];
        while let Some(b) = stack.pop() {
            out.push(b);
            stack.extend(self.bags[b].children.iter().rev());
        }
        out
    }

    pub fn postorder(&self) -> Vec<usize> {
        let mut out = self.preorder_reversed_children();
        out.reverse();
        out
    }

    // Preorder visiting children right-to-left; reversing it yields a
    // postorder visiting children left-to-right.
    fn preorder_reversed_children(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.len());
        let mut stack = vec![self.root];
        while let Some(b) = stack.pop() {
            out.push(b);
            stack.extend(self.bags[b].children.iter());
        }
        out
    }

    pub fn is_binary_full(&self) -> bool {
        self.bags.iter().all(|b| b.children.is_empty() || b.children.len() == 2)
    }

    /// Binary full, with a total assignment placing at most one hyperedge per bag.
    pub fn is_normalized(&self, edges: &[Vec<usize>]) -> bool {
        if !self.is_binary_full() {
            return false;
        }
        let Some(assign) = &self.assignment else { return false };
        if assign.len() != edges.len() {
            return false;
        }
        let mut used = vec![false; self.len()];
        for (e, &b) in edges.iter().zip(assign) {
            if b >= self.len() || used[b] || !self.bags[b].covers(e) {
                return false;
            }
            used[b] = true;
        }
        true
    }

    /// Bags whose domain contains `v`, per vertex.
    pub fn occurrences(&self, num_vertices: usize) -> Vec<Vec<usize>> {
        let mut occ = vec![Vec::new(); num_vertices];
        for (b, bag) in self.bags.iter().enumerate() {
            for &v in &bag.dom {
                if v < num_vertices {
                    occ[v].push(b);
                }
            }
        }
        occ
    }

    pub fn depths(&self) -> Vec<usize> {
        let mut depth = vec![0; self.len()];
        for b in self.preorder() {
            for &c in &self.bags[b].children {
                depth[c] = depth[b] + 1;
            }
        }
        depth
    }

    /// Export with vertex and hyperedge names supplied by the caller.
    pub fn to_json(&self, vertex_name: &dyn Fn(usize) -> String, edge_name: &dyn Fn(usize) -> String) -> serde_json::Value {
        let mut per_bag: Vec<Vec<String>> = vec![Vec::new(); self.len()];
        if let Some(assign) = &self.assignment {
            for (e, &b) in assign.iter().enumerate() {
                per_bag[b].push(edge_name(e));
            }
        }
        let bags: Vec<_> = self
            .bags
            .iter()
            .zip(per_bag)
            .map(|(b, facts)| {
                let dom: Vec<String> = b.dom.iter().map(|&v| vertex_name(v)).collect();
                json!({ "dom": dom, "children": b.children, "facts": facts })
            })
            .collect();
        json!({ "width": self.width(), "root": self.root, "bags": bags })
    }

    /// Export of a decomposition of `i`, using element names and fact ids.
    /// Without an assignment, each fact is listed at its topmost covering bag.
    pub fn to_instance_json(&self, i: &Instance) -> serde_json::Value {
        let names = (&|v| i.element_name(v).to_string(), &|f| i.fact(f).id.clone());
        if self.assignment.is_some() || !check_decomposition(i, self) {
            return self.to_json(names.0, names.1);
        }
        let mut t = self.clone();
        t.assignment = Some(topmost_bags(self, &i.hyperedges()));
        t.to_json(names.0, names.1)
    }
}

/// Computes a tree decomposition of `i` of width at most `k`.
pub fn tree_decomposition(i: &Instance, k: usize) -> Result<TreeDecomposition> {
    decompose_hypergraph(i.num_elements(), &i.hyperedges(), k)
}

pub fn check_decomposition(i: &Instance, t: &TreeDecomposition) -> bool {
    check_hypergraph(&i.hyperedges(), t)
}

pub fn normalize_decomposition(i: &Instance, t: &TreeDecomposition) -> TreeDecomposition {
    normalize_hypergraph(t, &i.hyperedges())
}

/// Decomposes the hypergraph on vertices `0..num_vertices` with the given
/// hyperedges. Components with at most 14 vertices are solved exactly by a
/// dynamic program over elimination orderings; larger ones use the min-fill
/// heuristic, so `NoDecomposition` may be reported for them even when a
/// width-`k` decomposition exists.
pub fn decompose_hypergraph(num_vertices: usize, edges: &[Vec<usize>], k: usize) -> Result<TreeDecomposition> {
    let mut adj: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); num_vertices];
    let mut used = vec![false; num_vertices];
    for e in edges {
        for &u in e {
            if u >= num_vertices {
                return Err(Error::input("hyperedge vertex out of range"));
            }
            used[u] = true;
            for &v in e {
                if u != v {
                    adj[u].insert(v);
                }
            }
        }
    }
    let mut doms: Vec<Vec<usize>> = Vec::new();
    let mut parents: Vec<Option<usize>> = Vec::new();
    let mut roots = Vec::new();
    let mut seen = vec![false; num_vertices];
    for start in 0..num_vertices {
        if !used[start] || seen[start] {
            continue;
        }
        let mut comp = vec![start];
        seen[start] = true;
        let mut i = 0;
        while i < comp.len() {
            for &w in &adj[comp[i]] {
                if !seen[w] {
                    seen[w] = true;
                    comp.push(w);
                }
            }
            i += 1;
        }
        comp.sort_unstable();
        let order = if comp.len() <= EXACT_LIMIT { exact_order(&comp, &adj) } else { min_fill_order(&comp, &adj) };
        let root = eliminate(&order, &adj, &mut doms, &mut parents);
        roots.push(root);
    }
    if doms.is_empty() {
        return Ok(TreeDecomposition::single(Vec::new()));
    }
    let width = doms.iter().map(Vec::len).max().unwrap_or(1) - 1;
    if width > k {
        return Err(Error::NoDecomposition(k));
    }
    for &r in &roots[1..] {
        parents[r] = Some(roots[0]);
    }
    let mut children = vec![Vec::new(); doms.len()];
    for (b, p) in parents.iter().enumerate() {
        if let Some(p) = *p {
            children[p].push(b);
        }
    }
    Ok(TreeDecomposition::from_parts(doms, children, roots[0]))
}

/// Runs the elimination game along `order`, appending one bag per vertex.
/// Returns the index of the component's root bag.
fn eliminate(order: &[usize], adj: &[BTreeSet<usize>], doms: &mut Vec<Vec<usize>>, parents: &mut Vec<Option<usize>>) -> usize {
    let base = doms.len();
    let mut pos = std::collections::HashMap::new();
    for (i, &v) in order.iter().enumerate() {
        pos.insert(v, i);
    }
    let mut local: std::collections::HashMap<usize, HashSet<usize>> =
        order.iter().map(|&v| (v, adj[v].iter().copied().collect())).collect();
    let mut root = base;
    for (i, &v) in order.iter().enumerate() {
        let nb: Vec<usize> = local.remove(&v).unwrap_or_default().into_iter().collect();
        for &a in &nb {
            let set = local.get_mut(&a).expect("neighbor not yet eliminated");
            set.remove(&v);
            for &b in &nb {
                if a != b {
                    set.insert(b);
                }
            }
        }
        let mut dom = nb.clone();
        dom.push(v);
        dom.sort_unstable();
        doms.push(dom);
        let parent = nb.iter().min_by_key(|u| pos[u]).map(|u| base + pos[u]);
        parents.push(parent);
        if parent.is_none() {
            root = base + i;
        }
    }
    root
}

/// Optimal elimination ordering by the subset dynamic program
/// TW(S) = min over v in S of max(TW(S - v), |Q(S - v, v)|).
fn exact_order(comp: &[usize], adj: &[BTreeSet<usize>]) -> Vec<usize> {
    let n = comp.len();
    let index: std::collections::HashMap<usize, usize> = comp.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let masks: Vec<u32> = comp.iter().map(|&v| adj[v].iter().fold(0u32, |m, w| m | 1 << index[w])).collect();
    let full = (1u32 << n) - 1;
    let mut tw = vec![i32::MAX; 1 << n];
    let mut best = vec![0u8; 1 << n];
    tw[0] = -1;
    for s in 1..=full {
        let mut rest = s;
        while rest != 0 {
            let v = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            let prev = s & !(1 << v);
            let cand = tw[prev as usize].max(q_size(&masks, prev, v));
            if cand < tw[s as usize] {
                tw[s as usize] = cand;
                best[s as usize] = v as u8;
            }
        }
    }
    let mut order = Vec::with_capacity(n);
    let mut s = full;
    while s != 0 {
        let v = best[s as usize] as usize;
        order.push(comp[v]);
        s &= !(1 << v);
    }
    order.reverse();
    order
}

/// Number of vertices outside `s ∪ {v}` reachable from `v` through `s`.
fn q_size(masks: &[u32], s: u32, v: usize) -> i32 {
    let mut visited = 1u32 << v;
    let mut reached = 0u32;
    let mut stack = vec![v];
    while let Some(u) = stack.pop() {
        let mut nb = masks[u] & !visited;
        while nb != 0 {
            let w = nb.trailing_zeros() as usize;
            nb &= nb - 1;
            visited |= 1 << w;
            if s >> w & 1 == 1 {
                stack.push(w);
            } else {
                reached |= 1 << w;
            }
        }
    }
    reached.count_ones() as i32
}

/// Greedy min-fill ordering (ties: smaller degree, then smaller vertex).
fn min_fill_order(comp: &[usize], adj: &[BTreeSet<usize>]) -> Vec<usize> {
    let mut local: std::collections::HashMap<usize, BTreeSet<usize>> =
        comp.iter().map(|&v| (v, adj[v].clone())).collect();
    let fill = |local: &std::collections::HashMap<usize, BTreeSet<usize>>, v: usize| -> usize {
        let nb: Vec<usize> = local[&v].iter().copied().collect();
        let mut missing = 0;
        for (i, a) in nb.iter().enumerate() {
            for b in &nb[i + 1..] {
                if !local[a].contains(b) {
                    missing += 1;
                }
            }
        }
        missing
    };
    let mut key: std::collections::HashMap<usize, (usize, usize)> = std::collections::HashMap::new();
    let mut queue: BTreeSet<(usize, usize, usize)> = BTreeSet::new();
    for &v in comp {
        let k = (fill(&local, v), local[&v].len());
        key.insert(v, k);
        queue.insert((k.0, k.1, v));
    }
    let mut order = Vec::with_capacity(comp.len());
    while let Some((f, d, v)) = queue.pop_first() {
        debug_assert_eq!(key[&v], (f, d));
        key.remove(&v);
        order.push(v);
        let nb: Vec<usize> = local.remove(&v).unwrap_or_default().into_iter().collect();
        let mut affected: BTreeSet<usize> = BTreeSet::new();
        for &a in &nb {
            let set = local.get_mut(&a).expect("live neighbor");
            set.remove(&v);
            for &b in &nb {
                if a != b {
                    set.insert(b);
                }
            }
        }
        for &a in &nb {
            affected.insert(a);
            affected.extend(local[&a].iter().copied());
        }
        for w in affected {
            let old = key[&w];
            let new = (fill(&local, w), local[&w].len());
            if old != new {
                queue.remove(&(old.0, old.1, w));
                queue.insert((new.0, new.1, w));
                key.insert(w, new);
            }
        }
    }
    order
}

/// Connectivity, coverage, and assignment soundness.
pub fn check_hypergraph(edges: &[Vec<usize>], t: &TreeDecomposition) -> bool {
    let n = t.len();
    if n == 0 || t.root >= n || t.bags[t.root].parent.is_some() {
        return false;
    }
    for (b, bag) in t.bags.iter().enumerate() {
        if bag.dom.windows(2).any(|w| w[0] >= w[1]) {
            return false;
        }
        for &c in &bag.children {
            if c >= n || t.bags[c].parent != Some(b) {
                return false;
            }
        }
        if let Some(p) = bag.parent {
            if p >= n || !t.bags[p].children.contains(&b) {
                return false;
            }
        }
    }
    let order = t.preorder();
    if order.len() != n || order.iter().collect::<HashSet<_>>().len() != n {
        return false;
    }
    let max_vertex = t.bags.iter().flat_map(|b| b.dom.iter().copied()).chain(edges.iter().flatten().copied()).max();
    let nv = max_vertex.map_or(0, |m| m + 1);
    let mut tops = vec![0usize; nv];
    for bag in &t.bags {
        for &v in &bag.dom {
            let continues = bag.parent.is_some_and(|p| t.bags[p].contains(v));
            if !continues {
                tops[v] += 1;
            }
        }
    }
    if tops.iter().any(|&c| c > 1) {
        return false;
    }
    let occ = t.occurrences(nv);
    for e in edges {
        let covered = match e.first() {
            None => true,
            Some(&v) => occ[v].iter().any(|&b| t.bags[b].covers(e)),
        };
        if !covered {
            return false;
        }
    }
    if let Some(assign) = &t.assignment {
        if assign.len() != edges.len() || assign.iter().zip(edges).any(|(&b, e)| b >= n || !t.bags[b].covers(e)) {
            return false;
        }
    }
    true
}

/// Makes `t` binary full with at most one hyperedge assigned per bag.
///
/// A valid existing assignment is kept; otherwise each hyperedge goes to the
/// topmost bag covering it. A bag holding several hyperedges becomes a chain
/// of copies (in hyperedge order), and missing children are padded with
/// empty bags.
pub fn normalize_hypergraph(t: &TreeDecomposition, edges: &[Vec<usize>]) -> TreeDecomposition {
    if t.is_normalized(edges) {
        return t.clone();
    }
    let assign = match &t.assignment {
        Some(a) if a.len() == edges.len() && a.iter().zip(edges).all(|(&b, e)| b < t.len() && t.bags[b].covers(e)) => {
            a.clone()
        }
        _ => topmost_bags(t, edges),
    };
    let mut at: Vec<Vec<usize>> = vec![Vec::new(); t.len()];
    for (e, &b) in assign.iter().enumerate() {
        at[b].push(e);
    }
    let mut doms: Vec<Vec<usize>> = Vec::new();
    let mut children: Vec<Vec<usize>> = Vec::new();
    let mut new_assign = vec![0; edges.len()];
    let mut top = vec![0; t.len()];
    let mut last = vec![0; t.len()];
    let alloc = |dom: Vec<usize>, doms: &mut Vec<Vec<usize>>, children: &mut Vec<Vec<usize>>| {
        doms.push(dom);
        children.push(Vec::new());
        doms.len() - 1
    };
    for b in t.preorder() {
        let dom = t.bags[b].dom.clone();
        let chain_len = at[b].len().max(1);
        let ids: Vec<usize> = (0..chain_len).map(|_| alloc(dom.clone(), &mut doms, &mut children)).collect();
        for (i, &e) in at[b].iter().enumerate() {
            new_assign[e] = ids[i];
        }
        for w in ids.windows(2) {
            let pad = alloc(Vec::new(), &mut doms, &mut children);
            children[w[0]] = vec![w[1], pad];
        }
        top[b] = ids[0];
        last[b] = *ids.last().expect("chain is nonempty");
    }
    for b in 0..t.len() {
        let kids: Vec<usize> = t.bags[b].children.iter().map(|&c| top[c]).collect();
        let mut cur = last[b];
        match kids.len() {
            0 => {}
            1 => {
                let pad = alloc(Vec::new(), &mut doms, &mut children);
                children[cur] = vec![kids[0], pad];
            }
            m => {
                for &kid in &kids[..m - 2] {
                    let copy = alloc(t.bags[b].dom.clone(), &mut doms, &mut children);
                    children[cur] = vec![kid, copy];
                    cur = copy;
                }
                children[cur] = vec![kids[m - 2], kids[m - 1]];
            }
        }
    }
    let mut out = TreeDecomposition::from_parts(doms, children, top[t.root]);
    out.assignment = Some(new_assign);
    out
}

fn topmost_bags(t: &TreeDecomposition, edges: &[Vec<usize>]) -> Vec<usize> {
    let depth = t.depths();
    let nv = edges.iter().flatten().copied().max().map_or(0, |m| m + 1);
    let occ = t.occurrences(nv);
    edges
        .iter()
        .map(|e| {
            let candidates: Box<dyn Iterator<Item = usize>> = match e.first() {
                Some(&v) => Box::new(occ[v].iter().copied()),
                None => Box::new(std::iter::once(t.root)),
            };
            candidates
                .filter(|&b| t.bags[b].covers(e))
                .min_by_key(|&b| (depth[b], b))
                .expect("decomposition covers every hyperedge")
        })
        .collect()
}
