//! Tree-top truncation, h-concatenation, grafting and metric transforms.

use rand::Rng;

use crate::error::{GenealogyError, Result};
use crate::mark::LeafMark;
use crate::sample::LeafSampler;
use crate::scalar::Scalar;
use crate::space::{NodeId, TreeBuilder, UltrametricSpace};

/// Caps every distance at `2h`; everything above collapses into one root at
/// `2h`. Masses and labels are unchanged.
pub fn truncate<T: Scalar, M: LeafMark>(
    space: &UltrametricSpace<T, M>,
    h: T,
) -> Result<UltrametricSpace<T, M>> {
    if !(h >= T::zero()) {
        return Err(GenealogyError::InvalidArgument(format!(
            "truncation level {h} < 0"
        )));
    }
    let cap = h + h;
    space.map_merges(|m| if m > cap { cap } else { m })
}

/// Disjoint union at level `h`: distances inside a component are kept,
/// distances across components are exactly `2h`. Leaf labels are the
/// components' labels, offset in component order.
pub fn concatenate<T: Scalar, M: LeafMark>(
    components: &[&UltrametricSpace<T, M>],
    h: T,
) -> Result<UltrametricSpace<T, M>> {
    if !(h > T::zero()) {
        return Err(GenealogyError::InvalidArgument(format!(
            "concatenation level {h} must be positive"
        )));
    }
    let bound = h + h;
    let mut b = TreeBuilder::new();
    let mut roots = Vec::with_capacity(components.len());
    for (index, c) in components.iter().enumerate() {
        let diameter = crate::diagnostics::tree_height(c);
        if diameter > bound {
            return Err(GenealogyError::ComponentTooTall {
                index,
                diameter: diameter.as_f64(),
                bound: bound.as_f64(),
            });
        }
        if let Some(r) = b.graft_copy(c, |m| *m) {
            roots.push(r);
        }
    }
    let root = match roots.len() {
        0 => None,
        1 => Some(roots[0]),
        _ => Some(b.internal(bound, roots)),
    };
    b.build(root)
}

/// The depth-`t` ancestral lines of a top tree: its maximal subtrees with
/// merge value strictly below `2t`.
pub fn ancestral_lines<T: Scalar, M: LeafMark>(top: &UltrametricSpace<T, M>, t: T) -> Vec<NodeId> {
    let bound = t + t;
    top.clusters(|m| m < bound)
}

/// Grafts `top` (the result of evolving for time `t`) onto `base`: every
/// depth-`t` ancestral line of `top` picks an independent ancestor from the
/// base sampling measure, and lines that did not coalesce within `top` are
/// at distance `2t + r_base(ancestor, ancestor')`.
pub fn graft<T: Scalar, B: LeafMark, M: LeafMark, R: Rng + ?Sized>(
    base: &UltrametricSpace<T, B>,
    top: &UltrametricSpace<T, M>,
    t: T,
    rng: &mut R,
) -> Result<UltrametricSpace<T, M>> {
    if base.total_mass() <= T::zero() {
        return Err(GenealogyError::EmptyBase);
    }
    let bound = t + t;
    let height = crate::diagnostics::tree_height(top);
    if height > bound {
        return Err(GenealogyError::TopTooTall {
            diameter: height.as_f64(),
            bound: bound.as_f64(),
        });
    }
    let sampler = LeafSampler::new(base)?;
    let lines = ancestral_lines(top, t);
    let mut b = TreeBuilder::new();
    let ids: Vec<NodeId> = (0..top.leaf_count())
        .map(|l| b.leaf(top.leaf_mass(l), top.mark(l)))
        .collect();
    let assigned: Vec<(NodeId, usize)> = lines
        .iter()
        .map(|&line| {
            (
                top.copy_into(&mut b, line, &ids, &|m| m),
                sampler.sample(rng),
            )
        })
        .collect();
    graft_assigned(base, b, &assigned, t)
}

/// Grafting with an explicit ancestor for every line. `lines` pairs a
/// subtree already present in `builder` (all merge values `< 2t`) with the
/// label of a base leaf. Base leaves that receive no line disappear.
pub fn graft_assigned<T: Scalar, B: LeafMark, M: LeafMark>(
    base: &UltrametricSpace<T, B>,
    mut builder: TreeBuilder<T, M>,
    lines: &[(NodeId, usize)],
    t: T,
) -> Result<UltrametricSpace<T, M>> {
    let shift = t + t;
    let Some(base_root) = base.root() else {
        return if lines.is_empty() {
            builder.build(None)
        } else {
            Err(GenealogyError::EmptyBase)
        };
    };
    let mut per_leaf: Vec<Vec<NodeId>> = vec![Vec::new(); base.leaf_count()];
    for &(line, ancestor) in lines {
        per_leaf
            .get_mut(ancestor)
            .ok_or_else(|| {
                GenealogyError::InvalidArgument(format!("unknown base leaf {ancestor}"))
            })?
            .push(line);
    }
    // Post-order copy of the base with shifted merges; base leaves become
    // the (possibly empty) group of lines assigned to them.
    let mut stack = vec![(base_root, false)];
    let mut built: Vec<Option<NodeId>> = Vec::new();
    while let Some((id, expanded)) = stack.pop() {
        match id {
            NodeId::Leaf(l) => {
                let group = std::mem::take(&mut per_leaf[l]);
                built.push(match group.len() {
                    0 => None,
                    1 => Some(group[0]),
                    _ => Some(builder.internal(shift, group)),
                });
            }
            NodeId::Internal(_) if !expanded => {
                stack.push((id, true));
                for &c in base.children(id).iter().rev() {
                    stack.push((c, false));
                }
            }
            NodeId::Internal(_) => {
                let k = base.children(id).len();
                let kids: Vec<NodeId> = built
                    .split_off(built.len() - k)
                    .into_iter()
                    .flatten()
                    .collect();
                built.push(match kids.len() {
                    0 => None,
                    1 => Some(kids[0]),
                    _ => Some(builder.internal(base.merge_value(id) + shift, kids)),
                });
            }
        }
    }
    builder.build(built.pop().flatten())
}

/// Transformation applied to all distances.
pub enum MetricMap<'a, T> {
    /// `r -> 1 - exp(-r)`: bounded by 1, with 1 standing for infinite distance.
    OneMinusExp,
    Custom(&'a dyn Fn(T) -> T),
}

impl<T: Scalar> MetricMap<'_, T> {
    pub fn apply(&self, r: T) -> T {
        match self {
            MetricMap::OneMinusExp => T::one() - (-r).exp(),
            MetricMap::Custom(f) => f(r),
        }
    }
}

/// Applies a nondecreasing map fixing 0 to every merge value.
pub fn metric_transform<T: Scalar, M: LeafMark>(
    space: &UltrametricSpace<T, M>,
    map: &MetricMap<'_, T>,
) -> Result<UltrametricSpace<T, M>> {
    if map.apply(T::zero()) != T::zero() {
        return Err(GenealogyError::NonMonotoneMap);
    }
    let mut values: Vec<T> = space
        .internal_nodes()
        .map(|n| space.merge_value(n))
        .collect();
    values.push(T::zero());
    values.sort_by(|a, b| a.total_cmp(b));
    values.dedup();
    let images: Vec<T> = values.iter().map(|&v| map.apply(v)).collect();
    if images.iter().any(|v| !v.is_finite() || *v < T::zero())
        || images.windows(2).any(|w| w[1] < w[0])
    {
        return Err(GenealogyError::NonMonotoneMap);
    }
    space.map_merges(|m| map.apply(m))
}
