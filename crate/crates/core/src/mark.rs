use std::fmt::Debug;
use std::hash::Hash;

use serde::{Deserialize, Serialize};

/// A leaf mark: a location in a finite geography and a genetic type.
#[derive(
    Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub struct Mark {
    pub location: u32,
    #[serde(rename = "type")]
    pub genotype: u32,
}

impl Mark {
    pub fn new(location: u32, genotype: u32) -> Self {
        Mark { location, genotype }
    }
}

/// What a leaf may carry besides its mass. `()` for unmarked spaces.
pub trait LeafMark:
    Clone + Copy + Debug + PartialEq + Eq + Ord + Hash + Send + Sync + 'static
{
    fn to_mark(&self) -> Option<Mark>;
    fn from_mark(mark: Option<Mark>) -> Option<Self>;
    fn encode(&self, out: &mut Vec<u8>);
}

impl LeafMark for () {
    fn to_mark(&self) -> Option<Mark> {
        None
    }

    fn from_mark(_: Option<Mark>) -> Option<Self> {
        Some(())
    }

    fn encode(&self, _: &mut Vec<u8>) {}
}

impl LeafMark for Mark {
    fn to_mark(&self) -> Option<Mark> {
        Some(*self)
    }

    fn from_mark(mark: Option<Mark>) -> Option<Self> {
        mark
    }

    fn encode(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.location.to_le_bytes());
        out.extend_from_slice(&self.genotype.to_le_bytes());
    }
}
