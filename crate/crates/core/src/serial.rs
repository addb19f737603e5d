//! JSON form of a space.
//!
//! ```json
//! {
//!   "schema": "genealab/ultrametric-space/1",
//!   "total_mass": 1.0,
//!   "leaves": [{"mass": 0.5, "location": 0, "type": 1}, ...],
//!   "internal_nodes": [{"merge_value": 6.0, "children": [0, 1]}, ...],
//!   "root": 2
//! }
//! ```
//!
//! Node ids number the leaves first (`0..leaves.len()`), then the internal
//! nodes in order. Internal nodes are listed children-first and the root is
//! `null` for the zero element. The written form is the reduced canonical
//! representative, so equivalent spaces serialize to identical bytes.

use serde::{Deserialize, Serialize};

use crate::error::{GenealogyError, Result};
use crate::mark::{LeafMark, Mark};
use crate::scalar::Scalar;
use crate::space::{NodeId, TreeBuilder, UltrametricSpace};

pub const SCHEMA: &str = "genealab/ultrametric-space/1";

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LeafJson {
    mass: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    location: Option<u32>,
    #[serde(default, rename = "type", skip_serializing_if = "Option::is_none")]
    genotype: Option<u32>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeJson {
    merge_value: f64,
    children: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpaceJson {
    schema: String,
    total_mass: f64,
    leaves: Vec<LeafJson>,
    internal_nodes: Vec<NodeJson>,
    root: Option<usize>,
}

fn document<T: Scalar, M: LeafMark>(space: &UltrametricSpace<T, M>) -> SpaceJson {
    let space = space.reduced();
    let n = space.leaf_count();
    let id = |node: NodeId| match node {
        NodeId::Leaf(l) => l,
        NodeId::Internal(i) => n + i,
    };
    SpaceJson {
        schema: SCHEMA.into(),
        total_mass: space.total_mass().as_f64(),
        leaves: (0..n)
            .map(|l| {
                let mark = space.mark(l).to_mark();
                LeafJson {
                    mass: space.leaf_mass(l).as_f64(),
                    location: mark.map(|m| m.location),
                    genotype: mark.map(|m| m.genotype),
                }
            })
            .collect(),
        internal_nodes: space
            .internal_nodes()
            .map(|node| NodeJson {
                merge_value: space.merge_value(node).as_f64(),
                children: space.children(node).iter().map(|c| id(*c)).collect(),
            })
            .collect(),
        root: space.root().map(id),
    }
}

/// Pretty-printed canonical JSON.
pub fn to_json<T: Scalar, M: LeafMark>(space: &UltrametricSpace<T, M>) -> String {
    serde_json::to_string_pretty(&document(space)).expect("plain data serializes")
}

/// Parses a document written by [`to_json`] (or by hand). Marks must be
/// present on every leaf or on none, matching `M`.
pub fn from_json<T: Scalar, M: LeafMark>(text: &str) -> Result<UltrametricSpace<T, M>> {
    let doc: SpaceJson =
        serde_json::from_str(text).map_err(|e| GenealogyError::Serialization(e.to_string()))?;
    if doc.schema != SCHEMA {
        return Err(GenealogyError::Serialization(format!(
            "unknown schema {:?}",
            doc.schema
        )));
    }
    let mut b = TreeBuilder::new();
    let mut ids = Vec::with_capacity(doc.leaves.len() + doc.internal_nodes.len());
    for (i, leaf) in doc.leaves.iter().enumerate() {
        let mark = match (leaf.location, leaf.genotype) {
            (None, None) => None,
            (location, genotype) => Some(Mark::new(location.unwrap_or(0), genotype.unwrap_or(0))),
        };
        let mark = M::from_mark(mark).ok_or_else(|| {
            GenealogyError::Serialization(format!("leaf {i}: mark does not match the space kind"))
        })?;
        ids.push(b.leaf(T::of(leaf.mass), mark));
    }
    let n = doc.leaves.len();
    for (i, node) in doc.internal_nodes.iter().enumerate() {
        let mut children = Vec::with_capacity(node.children.len());
        for &c in &node.children {
            if c >= n + i {
                return Err(GenealogyError::Serialization(format!(
                    "internal node {i} refers to node {c}, which is not listed before it"
                )));
            }
            children.push(ids[c]);
        }
        ids.push(b.internal(T::of(node.merge_value), children));
    }
    let root = match doc.root {
        None => None,
        Some(r) => Some(
            *ids.get(r)
                .ok_or_else(|| GenealogyError::Serialization(format!("root {r} does not exist")))?,
        ),
    };
    b.build(root)
}
