//! Fixed backward-pass workloads shared by the criterion benches.

use neuropath::toy::{random_texture, rng, uniform_conv_network};
use neuropath::{backward, forward, ActivationStack, ArcMode, CostVolume, LayerRange, Semiring, ShiftSet};

pub const SIZE: usize = 64;
pub const CHANNELS: usize = 4;
pub const DMAX: u32 = 15;

/// Activations of a random pair through an `layers`-deep uniform conv net.
pub struct Workload {
    pub reference: ActivationStack,
    pub searched: ActivationStack,
    pub range: LayerRange,
    pub shifts: ShiftSet,
}

impl Workload {
    pub fn new(layers: usize, seed: u64) -> Self {
        let net = uniform_conv_network(layers, CHANNELS, seed);
        let mut g = rng(seed + 1);
        let (a, b) = (random_texture(&mut g, SIZE, SIZE, CHANNELS), random_texture(&mut g, SIZE, SIZE, CHANNELS));
        Self {
            reference: forward(&net, &a, 0, layers).expect("toy network accepts the texture"),
            searched: forward(&net, &b, 0, layers).expect("toy network accepts the texture"),
            range: LayerRange::new(0, layers).expect("valid range"),
            shifts: ShiftSet::stereo(DMAX),
        }
    }

    pub fn run(&self, semiring: Semiring, arc_mode: ArcMode) -> CostVolume {
        backward(&self.reference, &self.searched, &self.shifts, semiring, self.range, arc_mode).expect("compatible stacks")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn workload_shapes() {
        let w = Workload::new(2, 0);
        let v = w.run(Semiring::SumProduct, ArcMode::Full);
        assert_eq!((v.width(), v.height(), v.shift_count()), (SIZE, SIZE, DMAX as usize + 1));
    }
}
