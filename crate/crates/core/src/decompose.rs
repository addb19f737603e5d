//! Splitting a finite space into its total mass and its normalized
//! genealogy, and back.

use crate::error::Result;
use crate::mark::LeafMark;
use crate::scalar::Scalar;
use crate::space::UltrametricSpace;

/// `u = (total mass, normalized space)`. The normalized part is absent for
/// the zero element unless a genealogy was explicitly retained.
#[derive(Clone, Debug)]
pub struct MassDecomposition<T: Scalar, M: LeafMark = ()> {
    pub total_mass: T,
    pub normalized: Option<UltrametricSpace<T, M>>,
}

pub fn decompose<T: Scalar, M: LeafMark>(
    space: &UltrametricSpace<T, M>,
) -> Result<MassDecomposition<T, M>> {
    let total_mass = space.total_mass();
    if total_mass <= T::zero() {
        return Ok(MassDecomposition {
            total_mass: T::zero(),
            normalized: None,
        });
    }
    Ok(MassDecomposition {
        total_mass,
        normalized: Some(space.scale_masses(T::one() / total_mass)?),
    })
}

/// Like [`decompose`], but at mass 0 keeps `retained` (normalized) as the
/// genealogy of the zero-mass state.
pub fn decompose_retaining<T: Scalar, M: LeafMark>(
    space: &UltrametricSpace<T, M>,
    retained: &UltrametricSpace<T, M>,
) -> Result<MassDecomposition<T, M>> {
    let mut out = decompose(space)?;
    if out.normalized.is_none() {
        out.normalized = decompose(retained)?.normalized;
    }
    Ok(out)
}

/// Inverse of [`decompose`]: multiplies the normalized masses by the total.
/// Mass 0 gives the zero element whatever genealogy was retained.
pub fn compose<T: Scalar, M: LeafMark>(
    d: &MassDecomposition<T, M>,
) -> Result<UltrametricSpace<T, M>> {
    match &d.normalized {
        Some(n) if d.total_mass > T::zero() => n.scale_masses(d.total_mass),
        _ => Ok(UltrametricSpace::zero()),
    }
}
