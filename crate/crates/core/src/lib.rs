//! Dense correspondence search by aggregating matched activation paths
//! through a convolutional feature hierarchy.
//!
//! Two images are run through the same network. A pixel `x` of the
//! reference image is said to match pixel `x - d` of the searched image
//! when "parallel" paths through both activation graphs (same channels,
//! same subsampled shift at every layer) carry similar activations. The
//! number of such paths grows exponentially with depth; [`backward`]
//! aggregates all of them in a single dynamic-programming sweep over any
//! semiring whose product distributes over its sum.
//!
//! # Pipeline
//! - [`grid`]: dense activation grids, shift sets and shift subsampling.
//! - [`network`]: layer descriptions, the NPW1 weight format and the forward pass.
//! - [`semiring`]: the `(⊕, ⊙)` operator pairs.
//! - [`matching`]: per-neuron matching functions.
//! - [`aggregation`]: the backward pass, the brute-force path oracle, path counting.
//! - [`stereo`]: normalization, winner-take-all, the correlation baseline and metrics.
//! - [`toy`]: seeded random networks and fixtures used by tests, the CLI and benches.

pub mod aggregation;
pub mod error;
pub mod grid;
pub mod image;
pub mod matching;
pub mod network;
pub mod semiring;
pub mod stereo;
pub mod toy;

pub use aggregation::{backward, brute_force, count_paths, ArcMode, BackwardOptions, CostVolume, LayerRange};
pub use error::{Error, Result};
pub use grid::{gamma, Grid, Shift, ShiftSet, SubsampleChain};
pub use network::{forward, load_weights, ActivationStack, LayerKind, LayerSpec, NetworkSpec};
pub use semiring::{Semiring, SemiringOps};
pub use stereo::{DisparityMap, EvalReport};
