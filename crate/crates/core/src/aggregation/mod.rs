//! Aggregation of matched activation paths into a cost volume.

mod backward;
mod brute;
mod count;
mod volume;

pub use backward::{backward, backward_generic, backward_with, BackwardOptions, BackwardOutput, LayerTable};
pub use brute::{brute_force, brute_force_generic, brute_force_limited, BruteForceOutput, DEFAULT_PATH_LIMIT};
pub use count::{count_arcs, count_paths, PathCounts};
pub use volume::{
    ArcMode, CostVolume, LayerRange, VolumeKind, NPCV_CORRELATION_CODE, NPCV_MAGIC, NPCV_VERSION,
};

use crate::error::{Error, Result};
use crate::network::{ActivationStack, LayerGeometry};

/// Checks that two stacks can be matched over `range` and that every
/// aggregated activation is non-negative.
pub(crate) fn validate_inputs(reference: &ActivationStack, searched: &ActivationStack, range: LayerRange) -> Result<()> {
    if !reference.is_compatible(searched) {
        return Err(Error::MismatchedStacks("layer geometry or extents differ".into()));
    }
    if range.end > reference.depth() {
        return Err(Error::LayerIndex { index: range.end, max: reference.depth() });
    }
    if range.start > range.end {
        return Err(Error::LayerIndex { index: range.start, max: range.end });
    }
    for layer in range.start..=range.end {
        if let LayerGeometry::Conv { kh, kw } = reference.layer(layer).geometry {
            if kh % 2 == 0 || kw % 2 == 0 {
                return Err(Error::Unsupported(format!("layer {layer}: conv kernel {kh}x{kw} is not same-padded")));
            }
        }
        for stack in [reference, searched] {
            let min = stack.activations(layer).min_value();
            if min < 0.0 {
                return Err(Error::NegativeActivation(min));
            }
        }
    }
    Ok(())
}
