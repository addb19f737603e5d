//! Ancestry bookkeeping for exact-jump particle simulations.
//!
//! The genealogy of the living individuals is kept as a forest of binary
//! trees: leaves are individuals, an internal node is a reproduction event
//! with both sides still represented in the population, and a root is an
//! individual of the initial population with living descendants. A
//! reproduction turns the parent's leaf into a branch point with two fresh
//! leaves; when an individual dies its leaf is freed and the parent branch
//! point, left with one child, is spliced out. The forest therefore never
//! holds more than `2N - 1` nodes, and every event costs O(1).

use genealab_core::{graft_assigned, LeafMark, NodeId, TreeBuilder, UltrametricSpace};

use crate::error::{Result, SimError};

const NONE: u32 = u32::MAX;

/// Nodes are stored column-wise; `origin` is meaningful at roots only.
#[derive(Clone, Debug)]
pub struct Ancestry {
    parent: Vec<u32>,
    children: Vec<[u32; 2]>,
    split: Vec<f64>,
    origin: Vec<u32>,
    free: Vec<u32>,
    slots: Vec<u32>,
}

impl Ancestry {
    /// One root per individual; `origins[i]` is the index of individual
    /// `i` in the initial population.
    pub fn new(origins: impl IntoIterator<Item = u32>) -> Self {
        let origin: Vec<u32> = origins.into_iter().collect();
        let n = origin.len();
        Ancestry {
            parent: vec![NONE; n],
            children: vec![[NONE; 2]; n],
            split: vec![f64::NAN; n],
            origin,
            free: Vec::new(),
            slots: (0..n as u32).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    /// Number of nodes in use.
    pub fn node_count(&self) -> usize {
        self.parent.len() - self.free.len()
    }

    fn root_of(&self, mut v: u32) -> u32 {
        while self.parent[v as usize] != NONE {
            v = self.parent[v as usize];
        }
        v
    }

    /// Initial ancestor of individual `i`.
    pub fn origin(&self, i: usize) -> u32 {
        self.origin[self.root_of(self.slots[i]) as usize]
    }

    #[inline]
    fn alloc(&mut self, parent: u32) -> u32 {
        match self.free.pop() {
            Some(id) => {
                let k = id as usize;
                self.parent[k] = parent;
                self.children[k] = [NONE; 2];
                id
            }
            None => {
                self.parent.push(parent);
                self.children.push([NONE; 2]);
                self.split.push(f64::NAN);
                self.origin.push(NONE);
                (self.parent.len() - 1) as u32
            }
        }
    }

    /// Turns the leaf of `i` into a branch point; `i` moves to the first
    /// child and the second child is returned.
    #[inline]
    fn fork(&mut self, i: usize, t: f64) -> u32 {
        let old = self.slots[i];
        let a = self.alloc(old);
        let b = self.alloc(old);
        self.children[old as usize] = [a, b];
        self.split[old as usize] = t;
        self.slots[i] = a;
        b
    }

    /// Frees a leaf and splices out its parent.
    #[inline]
    fn release(&mut self, leaf: u32) {
        let p = self.parent[leaf as usize];
        self.free.push(leaf);
        if p == NONE {
            return;
        }
        let [c0, c1] = self.children[p as usize];
        let sibling = if c0 == leaf { c1 } else { c0 };
        let gp = self.parent[p as usize];
        self.parent[sibling as usize] = gp;
        if gp == NONE {
            self.origin[sibling as usize] = self.origin[p as usize];
        } else {
            let g = &mut self.children[gp as usize];
            let k = (g[0] != p) as usize;
            g[k] = sibling;
        }
        self.free.push(p);
    }

    /// Individual `child` is replaced by an offspring of `parent` at time `t`.
    #[inline]
    pub fn copy(&mut self, parent: usize, child: usize, t: f64) {
        debug_assert_ne!(parent, child);
        let dead = self.slots[child];
        self.release(dead);
        let b = self.fork(parent, t);
        self.slots[child] = b;
    }

    /// `parent` splits in two; the offspring is appended as the last
    /// individual.
    pub fn birth(&mut self, parent: usize, t: f64) -> usize {
        let b = self.fork(parent, t);
        self.slots.push(b);
        self.slots.len() - 1
    }

    /// Removes individual `i`; the last individual takes its index.
    pub fn remove(&mut self, i: usize) {
        let dead = self.slots.swap_remove(i);
        self.release(dead);
    }

    fn ancestors(&self, mut v: u32) -> Vec<u32> {
        let mut out = Vec::new();
        while v != NONE {
            out.push(v);
            v = self.parent[v as usize];
        }
        out
    }

    /// Time of the most recent common ancestor of `i` and `j`, or `None`
    /// if their lineages have not met since time 0. `i == j` gives `now`.
    pub fn coalescence_time(&self, i: usize, j: usize, now: f64) -> Option<f64> {
        if i == j {
            return Some(now);
        }
        let a = self.ancestors(self.slots[i]);
        let b = self.ancestors(self.slots[j]);
        if a.last() != b.last() {
            return None;
        }
        // Walk down from the shared root until the paths part.
        let mut common = NONE;
        for (x, y) in a.iter().rev().zip(b.iter().rev()) {
            if x != y {
                break;
            }
            common = *x;
        }
        Some(self.split[common as usize])
    }

    /// Symmetric matrix of coalescence times (row-major), with `None` for
    /// pairs whose lineages did not meet.
    pub fn coalescence_matrix(&self, now: f64) -> Vec<Option<f64>> {
        let n = self.slots.len();
        let mut out = vec![None; n * n];
        for i in 0..n {
            out[i * n + i] = Some(now);
            for j in i + 1..n {
                let c = self.coalescence_time(i, j, now);
                out[i * n + j] = c;
                out[j * n + i] = c;
            }
        }
        out
    }

    /// Genealogy of the living individuals at time `now`: leaf `i` is
    /// individual `i` with the given mass and mark, distances are
    /// `2 (now - T_MRCA)`, and lineages that reach time 0 are grafted onto
    /// `base` at the leaf `ancestor_leaf[origin]`.
    pub fn genealogy<B: LeafMark, M: LeafMark>(
        &self,
        now: f64,
        leaf_mass: f64,
        marks: &[M],
        base: &UltrametricSpace<f64, B>,
        ancestor_leaf: &[usize],
    ) -> Result<UltrametricSpace<f64, M>> {
        if marks.len() != self.slots.len() {
            return Err(SimError::InconsistentAncestry(format!(
                "{} marks for {} individuals",
                marks.len(),
                self.slots.len()
            )));
        }
        let mut b = TreeBuilder::new();
        let mut ids: Vec<Option<NodeId>> = vec![None; self.parent.len()];
        let mut roots = Vec::new();
        for (i, &s) in self.slots.iter().enumerate() {
            ids[s as usize] = Some(b.leaf(leaf_mass, marks[i]));
            roots.push(self.root_of(s));
        }
        roots.sort_unstable();
        roots.dedup();
        let mut lines = Vec::with_capacity(roots.len());
        for &root in &roots {
            // Post-order over the binary subtree.
            let mut stack = vec![(root, false)];
            while let Some((v, expanded)) = stack.pop() {
                if ids[v as usize].is_some() {
                    continue;
                }
                let children = self.children[v as usize];
                let split = self.split[v as usize];
                if children[0] == NONE {
                    return Err(SimError::InconsistentAncestry(format!(
                        "leaf {v} has no individual"
                    )));
                }
                if !expanded {
                    stack.push((v, true));
                    stack.push((children[0], false));
                    stack.push((children[1], false));
                    continue;
                }
                let kids = children.map(|c| ids[c as usize].expect("post-order"));
                if !(split <= now) {
                    return Err(SimError::InconsistentAncestry(format!(
                        "split at {split} after {now}"
                    )));
                }
                ids[v as usize] = Some(b.internal(2.0 * (now - split), kids.to_vec()));
            }
            let origin = self.origin[root as usize] as usize;
            let leaf = *ancestor_leaf.get(origin).ok_or_else(|| {
                SimError::InconsistentAncestry(format!("origin {origin} has no initial leaf"))
            })?;
            lines.push((ids[root as usize].expect("root built"), leaf));
        }
        Ok(graft_assigned(base, b, &lines, now)?)
    }
}
