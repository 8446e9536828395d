#![allow(dead_code)]

use neuropath::aggregation::VolumeKind;
use neuropath::stereo::{make_synthetic_pair, normalize, wta};
use neuropath::toy::{random_network, random_texture, rng, toy_stereo_network};
use neuropath::LayerKind::{ConvRelu, MaxPool};
use neuropath::{backward, forward, ArcMode, CostVolume, Grid, LayerRange, LayerSpec, NetworkSpec, Semiring, ShiftSet};

pub const SYNTHETIC_SIZE: usize = 64;
pub const SYNTHETIC_SHIFT: usize = 7;
pub const SYNTHETIC_DMAX: u32 = 15;

/// Fraction of interior pixels of the constant-shift fixture whose winner
/// is the true shift. Interior leaves out the receptive field on every
/// side plus `SYNTHETIC_DMAX` columns on the left.
pub fn synthetic_accuracy(seed: u64, noise: f32) -> f64 {
    let net = toy_stereo_network(seed);
    let (left, right, gt) = make_synthetic_pair(SYNTHETIC_SIZE, SYNTHETIC_SIZE, SYNTHETIC_SHIFT, noise, seed).unwrap();
    // the image is the base layer, so every conv and pooling arc takes part
    let range = LayerRange::new(0, net.depth()).unwrap();
    let r = forward(&net, &left, range.start, range.end).unwrap();
    let s = forward(&net, &right, range.start, range.end).unwrap();
    let shifts = ShiftSet::stereo(SYNTHETIC_DMAX);
    let volume = backward(&r, &s, &shifts, Semiring::SumProduct, range, ArcMode::Full).unwrap();
    let disparity = wta(&normalize(&volume));
    let rf = net.receptive_field(net.depth());
    let (mut hits, mut total) = (0, 0);
    for x in rf + SYNTHETIC_DMAX as usize..SYNTHETIC_SIZE - rf {
        for y in rf..SYNTHETIC_SIZE - rf {
            if gt.get(x, y).is_some() {
                total += 1;
                hits += usize::from(disparity.get(x, y) == Some(SYNTHETIC_SHIFT as f32));
            }
        }
    }
    hits as f64 / total as f64
}

/// Compares the volume of a pair with that of the same pair seen `Q`
/// columns further right (`Q` = total pooling stride) on interior columns.
/// Returns the number of compared and of differing entries.
pub fn translation_check(seed: u64) -> (usize, usize) {
    let net = random_network(&mut rng(seed), 1, &[(ConvRelu, 2), (MaxPool, 2), (ConvRelu, 2), (MaxPool, 2), (ConvRelu, 2)]);
    let q = net.total_stride(net.depth());
    let rf = net.receptive_field(net.depth());
    let (width, height, dmax) = (160, 16, 6u32);
    let mut g = rng(seed + 50);
    let (big_a, big_b) = (random_texture(&mut g, width + q, height, 1), random_texture(&mut g, width + q, height, 1));
    let range = LayerRange::new(0, net.depth()).unwrap();
    let shifts = ShiftSet::stereo(dmax);
    let volume = |x0| {
        let crop = |g: &Grid| g.crop(x0, 0, width, height).unwrap();
        let r = forward(&net, &crop(&big_a), range.start, range.end).unwrap();
        let s = forward(&net, &crop(&big_b), range.start, range.end).unwrap();
        backward(&r, &s, &shifts, Semiring::SumProduct, range, ArcMode::Full).unwrap()
    };
    // `moved` sees the same content q columns further right
    let (base, moved) = (volume(q), volume(0));
    let margin = 2 * rf + q + dmax as usize;
    let (mut compared, mut differing) = (0, 0);
    for x in margin..width - margin {
        for y in 0..height {
            for d in 0..shifts.len() {
                compared += 1;
                differing += usize::from(moved.get(x + q, y, d).to_bits() != base.get(x, y, d).to_bits());
            }
        }
    }
    (compared, differing)
}

pub const SMALL_NPW1: &[u8] = include_bytes!("../fixtures/small.npw1");
pub const VOLUME_NPCV: &[u8] = include_bytes!("../fixtures/volume.npcv");

/// The network stored in `small.npw1`.
pub fn small_network() -> NetworkSpec {
    let w1 = (0..18).map(|i| (i as f32 - 8.0) * 0.125).collect();
    let w2 = (0..18).map(|i| (i % 7) as f32 * 0.0625 - 0.1875).collect();
    NetworkSpec::new(vec![
        LayerSpec::conv_relu(1, 2, (3, 3), w1, vec![0.5, -0.25]).unwrap(),
        LayerSpec::max_pool(2, 2).unwrap(),
        LayerSpec::conv_relu(2, 1, (3, 3), w2, vec![1.0]).unwrap(),
    ])
    .unwrap()
}

/// The volume stored in `volume.npcv`.
pub fn golden_volume() -> CostVolume {
    let mut values = Vec::new();
    for x in 0..3 {
        for y in 0..2 {
            for d in 0..4 {
                values.push(x as f64 + 0.25 * y as f64 + 0.0625 * d as f64);
            }
        }
    }
    let kind = VolumeKind::Path { semiring: Semiring::MaxProduct, arc_mode: ArcMode::Central };
    CostVolume::new(3, 2, ShiftSet::stereo(3), values, LayerRange::new(1, 3).unwrap(), kind).unwrap()
}
