//! Canonical dendrogram representation of a finite ultrametric measure space.
//!
//! A space is a rooted tree. Leaves carry a mass (and optionally a mark),
//! internal nodes carry the merge value: the distance between any two leaves
//! whose lowest common ancestor is that node. Merge values strictly increase
//! towards the root, which is the dendrogram form of the ultrametric
//! inequality. Children are stored in a canonical order (subtree mass, then
//! subtree digest), so equal trees serialize to equal bytes.

use sha2::{Digest as _, Sha256};

use crate::error::{GenealogyError, Result};
use crate::mark::LeafMark;
use crate::scalar::{stable_sum, Scalar};

/// SHA-256 digest of a canonical subtree encoding.
pub type Digest = [u8; 32];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NodeId {
    Leaf(usize),
    Internal(usize),
}

#[derive(Clone, Debug)]
struct LeafRecord<T, M> {
    mass: T,
    mark: M,
    parent: Option<usize>,
    depth: usize,
    digest: Digest,
}

#[derive(Clone, Debug)]
struct InternalRecord<T> {
    merge: T,
    children: Vec<NodeId>,
    parent: Option<usize>,
    mass: T,
    digest: Digest,
    /// Positions `[start, end)` in `leaf_order` covered by this subtree.
    leaf_range: (usize, usize),
}

/// A finite (optionally marked) ultrametric measure space in canonical
/// dendrogram form. Leaves are addressed by the label they were created
/// with; the canonical order of leaves is available separately.
#[derive(Clone, Debug)]
pub struct UltrametricSpace<T: Scalar, M: LeafMark = ()> {
    leaves: Vec<LeafRecord<T, M>>,
    nodes: Vec<InternalRecord<T>>,
    root: Option<NodeId>,
    leaf_order: Vec<usize>,
    total_mass: T,
}

/// Incremental construction of a dendrogram. Merge values are checked and
/// equal-valued parent/child chains are flattened when [`TreeBuilder::build`]
/// canonicalizes the tree.
#[derive(Clone, Debug)]
pub struct TreeBuilder<T, M> {
    leaves: Vec<(T, M)>,
    nodes: Vec<(T, Vec<NodeId>)>,
}

impl<T: Scalar, M: LeafMark> Default for TreeBuilder<T, M> {
    fn default() -> Self {
        Self::new()
    }
}

enum Resolved<T> {
    Pending,
    Removed,
    Alias(NodeId),
    Kept {
        merge: T,
        children: Vec<NodeId>,
        mass: T,
        digest: Digest,
    },
}

fn leaf_digest<T: Scalar, M: LeafMark>(mass: T, mark: &M) -> Digest {
    let mut bytes = Vec::with_capacity(17);
    bytes.push(b'L');
    bytes.extend_from_slice(&mass.canonical_bits().to_le_bytes());
    mark.encode(&mut bytes);
    Sha256::digest(&bytes).into()
}

fn internal_digest<T: Scalar>(merge: T, children: &[Digest]) -> Digest {
    let mut h = Sha256::new();
    h.update([b'N']);
    h.update(merge.canonical_bits().to_le_bytes());
    h.update((children.len() as u64).to_le_bytes());
    for d in children {
        h.update(d);
    }
    h.finalize().into()
}

pub(crate) fn zero_digest() -> Digest {
    Sha256::digest(b"Z").into()
}

impl<T: Scalar, M: LeafMark> TreeBuilder<T, M> {
    pub fn new() -> Self {
        TreeBuilder {
            leaves: Vec::new(),
            nodes: Vec::new(),
        }
    }

    /// Adds a leaf; its label in the built space is the order of insertion.
    pub fn leaf(&mut self, mass: T, mark: M) -> NodeId {
        self.leaves.push((mass, mark));
        NodeId::Leaf(self.leaves.len() - 1)
    }

    pub fn internal(&mut self, merge: T, children: Vec<NodeId>) -> NodeId {
        self.nodes.push((merge, children));
        NodeId::Internal(self.nodes.len() - 1)
    }

    pub fn leaf_count(&self) -> usize {
        self.leaves.len()
    }

    /// Copies a whole space into the builder (leaves appended in label
    /// order) and returns the id of its root.
    pub fn graft_copy<N: LeafMark>(
        &mut self,
        space: &UltrametricSpace<T, N>,
        mark: impl Fn(&N) -> M,
    ) -> Option<NodeId> {
        let root = space.root?;
        let ids: Vec<NodeId> = (0..space.leaf_count())
            .map(|l| self.leaf(space.leaf_mass(l), mark(&space.mark(l))))
            .collect();
        Some(space.copy_into(self, root, &ids, &|m| m))
    }

    /// Validates and canonicalizes the tree rooted at `root`. `None` builds the
    /// zero element, which must not own any leaves.
    pub fn build(self, root: Option<NodeId>) -> Result<UltrametricSpace<T, M>> {
        let TreeBuilder { leaves, nodes } = self;
        for (i, (mass, _)) in leaves.iter().enumerate() {
            if !mass.is_finite() || *mass < T::zero() {
                return Err(GenealogyError::NegativeMass {
                    leaf: i,
                    value: mass.as_f64(),
                });
            }
        }
        for (merge, _) in &nodes {
            if !merge.is_finite() || *merge < T::zero() {
                return Err(GenealogyError::InvalidTree(format!(
                    "merge value {merge} is negative or not finite"
                )));
            }
        }
        let root = match root {
            None if leaves.is_empty() => {
                return Ok(UltrametricSpace::zero());
            }
            None => {
                return Err(GenealogyError::InvalidTree(
                    "leaves exist but no root was given".into(),
                ))
            }
            Some(r) => r,
        };

        let leaf_digests: Vec<Digest> = leaves.iter().map(|(m, k)| leaf_digest(*m, k)).collect();
        let mut used_leaf = vec![false; leaves.len()];
        let mut used_node = vec![false; nodes.len()];
        let mut resolved: Vec<Resolved<T>> = (0..nodes.len()).map(|_| Resolved::Pending).collect();

        // Pass 1: post-order resolution (flatten equal merges, collapse unary nodes).
        let mut stack = vec![(root, false)];
        while let Some((id, expanded)) = stack.pop() {
            match id {
                NodeId::Leaf(l) => {
                    let slot = used_leaf
                        .get_mut(l)
                        .ok_or_else(|| GenealogyError::InvalidTree(format!("unknown leaf {l}")))?;
                    if *slot {
                        return Err(GenealogyError::InvalidTree(format!("leaf {l} used twice")));
                    }
                    *slot = true;
                }
                NodeId::Internal(i) if !expanded => {
                    let slot = used_node.get_mut(i).ok_or_else(|| {
                        GenealogyError::InvalidTree(format!("unknown internal node {i}"))
                    })?;
                    if *slot {
                        return Err(GenealogyError::InvalidTree(format!("node {i} used twice")));
                    }
                    *slot = true;
                    stack.push((id, true));
                    for &c in &nodes[i].1 {
                        stack.push((c, false));
                    }
                }
                NodeId::Internal(i) => {
                    let merge = nodes[i].0;
                    let mut children: Vec<NodeId> = Vec::with_capacity(nodes[i].1.len());
                    for &c in &nodes[i].1 {
                        let mut c = c;
                        loop {
                            match c {
                                NodeId::Leaf(_) => {
                                    children.push(c);
                                    break;
                                }
                                NodeId::Internal(ci) => match &resolved[ci] {
                                    Resolved::Removed => break,
                                    Resolved::Alias(a) => c = *a,
                                    Resolved::Kept {
                                        merge: cm,
                                        children: cc,
                                        ..
                                    } => {
                                        if *cm > merge {
                                            return Err(GenealogyError::MergeOrder {
                                                child: cm.as_f64(),
                                                parent: merge.as_f64(),
                                            });
                                        }
                                        if *cm == merge {
                                            children.extend_from_slice(cc);
                                        } else {
                                            children.push(c);
                                        }
                                        break;
                                    }
                                    Resolved::Pending => {
                                        unreachable!("child resolved before parent")
                                    }
                                },
                            }
                        }
                    }
                    resolved[i] = match children.len() {
                        0 => Resolved::Removed,
                        1 => Resolved::Alias(children[0]),
                        _ => {
                            let key = |c: &NodeId| -> (T, Digest) {
                                match *c {
                                    NodeId::Leaf(l) => (leaves[l].0, leaf_digests[l]),
                                    NodeId::Internal(ci) => match &resolved[ci] {
                                        Resolved::Kept { mass, digest, .. } => (*mass, *digest),
                                        _ => unreachable!(),
                                    },
                                }
                            };
                            let mut keyed: Vec<(T, Digest, NodeId)> = children
                                .iter()
                                .map(|c| {
                                    let (m, d) = key(c);
                                    (m, d, *c)
                                })
                                .collect();
                            keyed.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
                            let mut masses: Vec<T> = keyed.iter().map(|k| k.0).collect();
                            let mass = stable_sum(&mut masses);
                            let digests: Vec<Digest> = keyed.iter().map(|k| k.1).collect();
                            Resolved::Kept {
                                merge,
                                children: keyed.into_iter().map(|k| k.2).collect(),
                                mass,
                                digest: internal_digest(merge, &digests),
                            }
                        }
                    };
                }
            }
        }
        if used_leaf.iter().any(|u| !u) {
            return Err(GenealogyError::InvalidTree(
                "some leaves are not reachable from the root".into(),
            ));
        }

        let mut root = root;
        while let NodeId::Internal(i) = root {
            match &resolved[i] {
                Resolved::Alias(a) => root = *a,
                Resolved::Removed => {
                    return Err(GenealogyError::InvalidTree("root has no leaves".into()))
                }
                _ => break,
            }
        }

        // Pass 2: emit the canonical arena in post-order.
        let mut out_leaves: Vec<LeafRecord<T, M>> = leaves
            .iter()
            .zip(&leaf_digests)
            .map(|((m, k), d)| LeafRecord {
                mass: *m,
                mark: *k,
                parent: None,
                depth: 0,
                digest: *d,
            })
            .collect();
        let mut out_nodes: Vec<InternalRecord<T>> = Vec::new();
        let mut leaf_order = Vec::with_capacity(leaves.len());
        let mut map: Vec<usize> = vec![usize::MAX; nodes.len()];
        let mut stack = vec![(root, false, 0usize)];
        let mut starts: Vec<usize> = Vec::new();
        while let Some((id, expanded, depth)) = stack.pop() {
            match id {
                NodeId::Leaf(l) => {
                    out_leaves[l].depth = depth;
                    leaf_order.push(l);
                }
                NodeId::Internal(i) if !expanded => {
                    starts.push(leaf_order.len());
                    stack.push((id, true, depth));
                    if let Resolved::Kept { children, .. } = &resolved[i] {
                        for &c in children.iter().rev() {
                            stack.push((c, false, depth + 1));
                        }
                    }
                }
                NodeId::Internal(i) => {
                    let start = starts.pop().expect("balanced traversal");
                    if let Resolved::Kept {
                        merge,
                        children,
                        mass,
                        digest,
                    } = std::mem::replace(&mut resolved[i], Resolved::Removed)
                    {
                        let idx = out_nodes.len();
                        map[i] = idx;
                        let children: Vec<NodeId> = children
                            .into_iter()
                            .map(|c| match c {
                                NodeId::Leaf(l) => {
                                    out_leaves[l].parent = Some(idx);
                                    c
                                }
                                NodeId::Internal(ci) => {
                                    let n = map[ci];
                                    out_nodes[n].parent = Some(idx);
                                    NodeId::Internal(n)
                                }
                            })
                            .collect();
                        out_nodes.push(InternalRecord {
                            merge,
                            children,
                            parent: None,
                            mass,
                            digest,
                            leaf_range: (start, leaf_order.len()),
                        });
                    }
                }
            }
        }
        let root = match root {
            NodeId::Leaf(_) => root,
            NodeId::Internal(i) => NodeId::Internal(map[i]),
        };
        // Leaves removed from the tree by collapse do not exist: every leaf is
        // reachable, so `leaf_order` is a permutation of the labels.
        debug_assert_eq!(leaf_order.len(), out_leaves.len());
        let total_mass = match root {
            NodeId::Leaf(l) => out_leaves[l].mass,
            NodeId::Internal(i) => out_nodes[i].mass,
        };
        Ok(UltrametricSpace {
            leaves: out_leaves,
            nodes: out_nodes,
            root: Some(root),
            leaf_order,
            total_mass,
        })
    }
}

impl<T: Scalar, M: LeafMark> UltrametricSpace<T, M> {
    /// The zero element: no leaves, no mass.
    pub fn zero() -> Self {
        UltrametricSpace {
            leaves: Vec::new(),
            nodes: Vec::new(),
            root: None,
            leaf_order: Vec::new(),
            total_mass: T::zero(),
        }
    }

    pub fn single_leaf(mass: T, mark: M) -> Result<Self> {
        let mut b = TreeBuilder::new();
        let l = b.leaf(mass, mark);
        b.build(Some(l))
    }

    /// Leaves with the given masses, all pairwise at distance `distance`.
    pub fn star(masses: &[T], marks: &[M], distance: T) -> Result<Self> {
        if masses.len() != marks.len() {
            return Err(GenealogyError::DimensionMismatch {
                expected: masses.len(),
                found: marks.len(),
            });
        }
        let mut b = TreeBuilder::new();
        let children: Vec<NodeId> = masses
            .iter()
            .zip(marks)
            .map(|(m, k)| b.leaf(*m, *k))
            .collect();
        let root = match children.len() {
            0 => None,
            1 => Some(children[0]),
            _ => Some(b.internal(distance, children)),
        };
        b.build(root)
    }

    pub fn is_zero(&self) -> bool {
        self.root.is_none()
    }

    pub fn total_mass(&self) -> T {
        self.total_mass
    }

    pub fn leaf_count(&self) -> usize {
        self.leaves.len()
    }

    pub fn internal_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn root(&self) -> Option<NodeId> {
        self.root
    }

    pub fn leaf_mass(&self, leaf: usize) -> T {
        self.leaves[leaf].mass
    }

    pub fn leaf_masses(&self) -> Vec<T> {
        self.leaves.iter().map(|l| l.mass).collect()
    }

    pub fn mark(&self, leaf: usize) -> M {
        self.leaves[leaf].mark
    }

    pub fn marks(&self) -> Vec<M> {
        self.leaves.iter().map(|l| l.mark).collect()
    }

    /// Leaf labels in canonical depth-first order.
    pub fn leaf_order(&self) -> &[usize] {
        &self.leaf_order
    }

    /// Merge value of a node; zero for leaves.
    pub fn merge_value(&self, node: NodeId) -> T {
        match node {
            NodeId::Leaf(_) => T::zero(),
            NodeId::Internal(i) => self.nodes[i].merge,
        }
    }

    pub fn children(&self, node: NodeId) -> &[NodeId] {
        match node {
            NodeId::Leaf(_) => &[],
            NodeId::Internal(i) => &self.nodes[i].children,
        }
    }

    pub fn node_mass(&self, node: NodeId) -> T {
        match node {
            NodeId::Leaf(l) => self.leaves[l].mass,
            NodeId::Internal(i) => self.nodes[i].mass,
        }
    }

    pub fn node_digest(&self, node: NodeId) -> Digest {
        match node {
            NodeId::Leaf(l) => self.leaves[l].digest,
            NodeId::Internal(i) => self.nodes[i].digest,
        }
    }

    /// Leaf labels below `node`, in canonical order.
    pub fn leaves_below(&self, node: NodeId) -> &[usize] {
        match node {
            NodeId::Leaf(l) => {
                let pos = self.leaf_order.iter().position(|&x| x == l).unwrap_or(0);
                &self.leaf_order[pos..pos + 1]
            }
            NodeId::Internal(i) => {
                let (s, e) = self.nodes[i].leaf_range;
                &self.leaf_order[s..e]
            }
        }
    }

    /// Internal nodes in post-order (children before parents).
    pub fn internal_nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.nodes.len()).map(NodeId::Internal)
    }

    /// Digest of the stored tree (zero-mass leaves included). Use
    /// [`crate::canonical_hash`] for the equivalence-class digest.
    pub fn structural_digest(&self) -> Digest {
        match self.root {
            None => zero_digest(),
            Some(r) => self.node_digest(r),
        }
    }

    /// Pairwise distance of two leaves: the merge value of their lowest
    /// common ancestor.
    pub fn distance(&self, a: usize, b: usize) -> T {
        if a == b {
            return T::zero();
        }
        let (mut x, mut dx) = match self.leaves[a].parent {
            Some(p) => (p, self.leaves[a].depth - 1),
            None => return T::zero(),
        };
        let (mut y, mut dy) = match self.leaves[b].parent {
            Some(p) => (p, self.leaves[b].depth - 1),
            None => return T::zero(),
        };
        while dx > dy {
            x = self.nodes[x].parent.expect("depth bookkeeping");
            dx -= 1;
        }
        while dy > dx {
            y = self.nodes[y].parent.expect("depth bookkeeping");
            dy -= 1;
        }
        while x != y {
            x = self.nodes[x].parent.expect("common root");
            y = self.nodes[y].parent.expect("common root");
        }
        self.nodes[x].merge
    }

    /// Full leaf-by-leaf distance matrix (row-major, indexed by label).
    pub fn distance_matrix(&self) -> Vec<T> {
        let n = self.leaves.len();
        let mut out = vec![T::zero(); n * n];
        for node in &self.nodes {
            let ranges: Vec<(usize, usize)> = node
                .children
                .iter()
                .map(|c| match *c {
                    NodeId::Leaf(l) => {
                        let p = self.leaf_position(l);
                        (p, p + 1)
                    }
                    NodeId::Internal(i) => self.nodes[i].leaf_range,
                })
                .collect();
            for (ci, a) in ranges.iter().enumerate() {
                for b in &ranges[ci + 1..] {
                    for pa in a.0..a.1 {
                        let la = self.leaf_order[pa];
                        for pb in b.0..b.1 {
                            let lb = self.leaf_order[pb];
                            out[la * n + lb] = node.merge;
                            out[lb * n + la] = node.merge;
                        }
                    }
                }
            }
        }
        out
    }

    fn leaf_position(&self, leaf: usize) -> usize {
        // Leaves hang directly below their parent, so search its range only.
        match self.leaves[leaf].parent {
            Some(p) => {
                let (s, e) = self.nodes[p].leaf_range;
                s + self.leaf_order[s..e]
                    .iter()
                    .position(|&x| x == leaf)
                    .expect("leaf inside parent range")
            }
            None => 0,
        }
    }

    /// Maximal subtrees whose merge value satisfies `keep` (leaves always do).
    /// With `keep = |m| m <= eps` these are the closed `eps`-balls.
    pub fn clusters(&self, keep: impl Fn(T) -> bool) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut stack: Vec<NodeId> = self.root.into_iter().collect();
        while let Some(id) = stack.pop() {
            match id {
                NodeId::Leaf(_) => out.push(id),
                NodeId::Internal(i) => {
                    if keep(self.nodes[i].merge) {
                        out.push(id);
                    } else {
                        stack.extend(self.nodes[i].children.iter().rev().copied());
                    }
                }
            }
        }
        out
    }

    /// Rebuilds with every merge value passed through `f`, which must be
    /// nondecreasing; equal images are flattened.
    pub fn map_merges(&self, f: impl Fn(T) -> T) -> Result<Self> {
        self.rebuild(|l| (l.mass, l.mark), f)
    }

    fn rebuild<N: LeafMark>(
        &self,
        leaf: impl Fn(&LeafRecord<T, M>) -> (T, N),
        merge: impl Fn(T) -> T,
    ) -> Result<UltrametricSpace<T, N>> {
        let mut b = TreeBuilder::new();
        let ids: Vec<NodeId> = self
            .leaves
            .iter()
            .map(|l| {
                let (m, k) = leaf(l);
                b.leaf(m, k)
            })
            .collect();
        let root = self.root.map(|r| self.copy_into(&mut b, r, &ids, &merge));
        b.build(root)
    }

    /// Copies the subtree at `root` into `b`; `leaf_ids[label]` gives the
    /// builder id already allocated for each leaf.
    pub(crate) fn copy_into<N: LeafMark>(
        &self,
        b: &mut TreeBuilder<T, N>,
        root: NodeId,
        leaf_ids: &[NodeId],
        merge: &impl Fn(T) -> T,
    ) -> NodeId {
        let mut stack = vec![(root, false)];
        let mut built: Vec<NodeId> = Vec::new();
        while let Some((id, expanded)) = stack.pop() {
            match id {
                NodeId::Leaf(l) => built.push(leaf_ids[l]),
                NodeId::Internal(i) if !expanded => {
                    stack.push((id, true));
                    for &c in self.nodes[i].children.iter().rev() {
                        stack.push((c, false));
                    }
                }
                NodeId::Internal(i) => {
                    let rec = &self.nodes[i];
                    let children = built.split_off(built.len() - rec.children.len());
                    built.push(b.internal(merge(rec.merge), children));
                }
            }
        }
        built.pop().expect("non-empty copy")
    }

    /// Multiplies every leaf mass by `factor`.
    pub fn scale_masses(&self, factor: T) -> Result<Self> {
        self.rebuild(|l| (l.mass * factor, l.mark), |m| m)
    }

    /// Replaces the leaf marks, keeping labels.
    pub fn with_marks<N: LeafMark>(&self, marks: &[N]) -> Result<UltrametricSpace<T, N>> {
        if marks.len() != self.leaves.len() {
            return Err(GenealogyError::DimensionMismatch {
                expected: self.leaves.len(),
                found: marks.len(),
            });
        }
        let mut b = TreeBuilder::new();
        let ids: Vec<NodeId> = self
            .leaves
            .iter()
            .zip(marks)
            .map(|(l, k)| b.leaf(l.mass, *k))
            .collect();
        let root = self.root.map(|r| self.copy_into(&mut b, r, &ids, &|m| m));
        b.build(root)
    }

    /// Drops the marks.
    pub fn forget_marks(&self) -> UltrametricSpace<T, ()> {
        self.with_marks(&vec![(); self.leaves.len()])
            .expect("same leaf count")
    }

    /// Support-canonical representative: zero-mass leaves removed and
    /// zero-distance leaves with equal marks merged. Labels follow the
    /// canonical leaf order of the result.
    pub fn reduced(&self) -> Self {
        let Some(root) = self.root else {
            return Self::zero();
        };
        let mut b = TreeBuilder::new();
        let mut stack = vec![(root, false)];
        let mut built: Vec<Option<NodeId>> = Vec::new();
        while let Some((id, expanded)) = stack.pop() {
            match id {
                NodeId::Leaf(l) => {
                    let rec = &self.leaves[l];
                    built.push((rec.mass > T::zero()).then(|| b.leaf(rec.mass, rec.mark)));
                }
                NodeId::Internal(i) if !expanded => {
                    let rec = &self.nodes[i];
                    if rec.merge == T::zero() {
                        // Only leaves sit below a zero merge.
                        let mut groups: Vec<(M, Vec<T>)> = Vec::new();
                        for c in &rec.children {
                            if let NodeId::Leaf(l) = *c {
                                let lr = &self.leaves[l];
                                if lr.mass > T::zero() {
                                    match groups.iter_mut().find(|g| g.0 == lr.mark) {
                                        Some(g) => g.1.push(lr.mass),
                                        None => groups.push((lr.mark, vec![lr.mass])),
                                    }
                                }
                            }
                        }
                        groups.sort_by(|a, b| a.0.cmp(&b.0));
                        let kids: Vec<NodeId> = groups
                            .into_iter()
                            .map(|(k, mut ms)| b.leaf(stable_sum(&mut ms), k))
                            .collect();
                        built.push(match kids.len() {
                            0 => None,
                            _ => Some(b.internal(T::zero(), kids)),
                        });
                    } else {
                        stack.push((id, true));
                        for &c in rec.children.iter().rev() {
                            stack.push((c, false));
                        }
                    }
                }
                NodeId::Internal(i) => {
                    let rec = &self.nodes[i];
                    let kids: Vec<NodeId> = built
                        .split_off(built.len() - rec.children.len())
                        .into_iter()
                        .flatten()
                        .collect();
                    built.push((!kids.is_empty()).then(|| b.internal(rec.merge, kids)));
                }
            }
        }
        let root = built.pop().flatten();
        // Relabel in canonical order so equal classes get equal labels.
        let tmp = b.build(root).expect("reduction of a valid tree");
        tmp.relabel_canonical()
    }

    /// Same space with labels renumbered along the canonical leaf order.
    pub fn relabel_canonical(&self) -> Self {
        let Some(root) = self.root else {
            return Self::zero();
        };
        let mut b = TreeBuilder::new();
        let mut ids = vec![NodeId::Leaf(0); self.leaves.len()];
        for &l in &self.leaf_order {
            ids[l] = b.leaf(self.leaves[l].mass, self.leaves[l].mark);
        }
        let root = self.copy_into(&mut b, root, &ids, &|m| m);
        b.build(Some(root)).expect("relabel of a valid tree")
    }
}

/// Pure aging by `dt` time units: every distance between distinct leaves
/// grows by `2 dt`.
pub fn age<T: Scalar, M: LeafMark>(
    space: &UltrametricSpace<T, M>,
    dt: T,
) -> Result<UltrametricSpace<T, M>> {
    let shift = dt + dt;
    space.map_merges(|m| m + shift)
}
