//! Rooted, ordered, full binary trees stored in an arena.
//!
//! Every node has either zero or two children. All traversals are
//! iterative so that deep trees (long fact chains) do not overflow the stack.

pub type NodeId = usize;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Tree<L> {
    labels: Vec<L>,
    children: Vec<Option<(NodeId, NodeId)>>,
    parent: Vec<Option<NodeId>>,
    root: NodeId,
}

impl<L> Tree<L> {
    pub fn leaf(label: L) -> Self {
        Tree { labels: vec![label], children: vec![None], parent: vec![None], root: 0 }
    }

    /// Joins two trees under a new root. Node ids of `left` are kept; node ids
    /// of `right` are shifted by `left.len()`; the new root gets the last id.
    pub fn node(label: L, left: Tree<L>, right: Tree<L>) -> Self {
        let off = left.len();
        let Tree { mut labels, mut children, mut parent, root: lroot } = left;
        let rroot = right.root + off;
        labels.extend(right.labels);
        children.extend(right.children.into_iter().map(|c| c.map(|(a, b)| (a + off, b + off))));
        parent.extend(right.parent.into_iter().map(|p| p.map(|p| p + off)));
        let root = labels.len();
        labels.push(label);
        children.push(Some((lroot, rroot)));
        parent.push(None);
        parent[lroot] = Some(root);
        parent[rroot] = Some(root);
        Tree { labels, children, parent, root }
    }

    /// Builds a tree from parallel label and child arrays.
    ///
    /// Panics if the arrays do not describe a full binary tree rooted at `root`
    /// that covers every node exactly once.
    pub fn from_parts(labels: Vec<L>, children: Vec<Option<(NodeId, NodeId)>>, root: NodeId) -> Self {
        assert_eq!(labels.len(), children.len(), "label and child arrays differ in length");
        let mut parent = vec![None; labels.len()];
        for (n, c) in children.iter().enumerate() {
            if let Some((l, r)) = *c {
                assert!(parent[l].is_none() && parent[r].is_none() && l != root && r != root, "node with two parents");
                parent[l] = Some(n);
                parent[r] = Some(n);
            }
        }
        let t = Tree { labels, children, parent, root };
        assert_eq!(t.postorder().len(), t.len(), "nodes unreachable from the root");
        t
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn label(&self, n: NodeId) -> &L {
        &self.labels[n]
    }

    pub fn labels(&self) -> &[L] {
        &self.labels
    }

    pub fn children(&self, n: NodeId) -> Option<(NodeId, NodeId)> {
        self.children[n]
    }

    pub fn parent(&self, n: NodeId) -> Option<NodeId> {
        self.parent[n]
    }

    pub fn is_leaf(&self, n: NodeId) -> bool {
        self.children[n].is_none()
    }

    /// Children before parents, left subtree before right subtree.
    pub fn postorder(&self) -> Vec<NodeId> {
        let mut out = Vec::with_capacity(self.len());
        let mut stack = vec![(self.root, false)];
        while let Some((n, expanded)) = stack.pop() {
            match (expanded, self.children[n]) {
                (false, Some((l, r))) => {
                    stack.push((n, true));
                    stack.push((r, false));
                    stack.push((l, false));
                }
                _ => out.push(n),
            }
        }
        out
    }

    /// Parents before children, left subtree before right subtree.
    pub fn preorder(&self) -> Vec<NodeId> {
        let mut out = Vec::with_capacity(self.len());
        let mut stack = vec![self.root];
        while let Some(n) = stack.pop() {
            out.push(n);
            if let Some((l, r)) = self.children[n] {
                stack.push(r);
                stack.push(l);
            }
        }
        out
    }

    pub fn depth(&self) -> usize {
        let mut depth = vec![0usize; self.len()];
        let mut best = 0;
        for n in self.preorder() {
            if let Some(p) = self.parent[n] {
                depth[n] = depth[p] + 1;
                best = best.max(depth[n]);
            }
        }
        best
    }

    /// Same skeleton, new labels.
    pub fn map<M>(&self, mut f: impl FnMut(NodeId, &L) -> M) -> Tree<M> {
        Tree {
            labels: self.labels.iter().enumerate().map(|(n, l)| f(n, l)).collect(),
            children: self.children.clone(),
            parent: self.parent.clone(),
            root: self.root,
        }
    }

    pub fn same_skeleton<M>(&self, other: &Tree<M>) -> bool {
        self.root == other.root && self.children == other.children
    }
}

/// Enumerates every full binary tree shape with exactly `size` nodes.
/// Returned trees have unit labels; callers relabel them with [`Tree::map`].
pub fn all_shapes(size: usize) -> Vec<Tree<()>> {
    if size == 0 || size % 2 == 0 {
        return Vec::new();
    }
    let mut table: Vec<Vec<Tree<()>>> = vec![Vec::new(); size + 1];
    table[1].push(Tree::leaf(()));
    for n in (3..=size).step_by(2) {
        let mut shapes = Vec::new();
        for left in (1..n - 1).step_by(2) {
            let right = n - 1 - left;
            for l in &table[left] {
                for r in &table[right] {
                    shapes.push(Tree::node((), l.clone(), r.clone()));
                }
            }
        }
        table[n] = shapes;
    }
    std::mem::take(&mut table[size])
}

/// Builds a near-balanced full binary tree with `size` nodes (`size` odd).
pub fn balanced_shape(size: usize) -> Tree<()> {
    assert!(size % 2 == 1, "full binary trees have an odd number of nodes");
    let mut labels = Vec::with_capacity(size);
    let mut children = Vec::with_capacity(size);
    // Node i has children 2i+1, 2i+2 while they fit: a heap layout stays full
    // as long as the node count is odd.
    for i in 0..size {
        labels.push(());
        children.push(if 2 * i + 2 < size { Some((2 * i + 1, 2 * i + 2)) } else { None });
    }
    Tree::from_parts(labels, children, 0)
}
