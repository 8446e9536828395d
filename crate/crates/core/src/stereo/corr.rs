//! Stacked-feature normalized cross-correlation baseline.
//!
//! The responses of layers `s..=t` (pre-ReLU for conv layers, pooled values
//! for pooling layers, the image for layer 0) are nearest-neighbour
//! up-sampled to input resolution and stacked into one feature vector per
//! pixel. The score of shift `d` at `x` is the NCC of the mean-centered
//! vectors at `x` and `x - d`, gathered over a `window × window` patch.

use crate::aggregation::{CostVolume, LayerRange, VolumeKind};
use crate::error::{Error, Result};
use crate::grid::{Grid, ShiftSet};
use crate::network::{ActivationStack, LayerGeometry};

/// Score given to a shift whose searched pixel is off the image.
pub const CORR_OFF_GRID: f64 = -1.0;

fn layer_features(stack: &ActivationStack, layer: usize) -> &Grid {
    let l = stack.layer(layer);
    match l.geometry {
        LayerGeometry::Conv { .. } => l.pre_activations.as_ref().expect("conv layers keep pre-activations"),
        LayerGeometry::Input | LayerGeometry::Pool { .. } => &l.activations,
    }
}

/// Unit-norm, zero-mean stacked feature vector per input pixel (`x`-major);
/// all-zero when the vector is constant.
fn stacked(stack: &ActivationStack, range: LayerRange, window: usize) -> Vec<Vec<f64>> {
    let input = stack.input();
    let (w, h) = (input.width(), input.height());
    let r = (window / 2) as i64;
    let layers: Vec<(&Grid, usize)> = (range.start..=range.end)
        .map(|l| {
            let g = layer_features(stack, l);
            (g, w / g.width())
        })
        .collect();
    let mut out = Vec::with_capacity(w * h);
    for x in 0..w {
        for y in 0..h {
            let mut v = Vec::new();
            for dx in -r..=r {
                for dy in -r..=r {
                    let px = (x as i64 + dx).clamp(0, w as i64 - 1) as usize;
                    let py = (y as i64 + dy).clamp(0, h as i64 - 1) as usize;
                    for &(g, q) in &layers {
                        v.extend(g.pixel(px / q, py / q).iter().map(|&f| f64::from(f)));
                    }
                }
            }
            let mean = v.iter().sum::<f64>() / v.len() as f64;
            v.iter_mut().for_each(|f| *f -= mean);
            let norm = v.iter().map(|f| f * f).sum::<f64>().sqrt();
            if norm > 0.0 {
                v.iter_mut().for_each(|f| *f /= norm);
            } else {
                v.iter_mut().for_each(|f| *f = 0.0);
            }
            out.push(v);
        }
    }
    out
}

pub fn corr_baseline(
    reference: &ActivationStack,
    searched: &ActivationStack,
    shifts: &ShiftSet,
    range: LayerRange,
    window: usize,
) -> Result<CostVolume> {
    if window.is_multiple_of(2) {
        return Err(Error::shape(format!("correlation window {window} must be odd")));
    }
    if !reference.is_compatible(searched) {
        return Err(Error::MismatchedStacks("layer geometry or extents differ".into()));
    }
    if range.end > reference.depth() {
        return Err(Error::LayerIndex { index: range.end, max: reference.depth() });
    }
    let (w, h) = (reference.input().width(), reference.input().height());
    let fr = stacked(reference, range, window);
    let fs = stacked(searched, range, window);
    let mut values = Vec::with_capacity(w * h * shifts.len());
    for x in 0..w {
        for y in 0..h {
            let a = &fr[x * h + y];
            for s in shifts.shifts() {
                let (sx, sy) = (x as i64 - s.dx, y as i64 - s.dy);
                if sx < 0 || sy < 0 || sx >= w as i64 || sy >= h as i64 {
                    values.push(CORR_OFF_GRID);
                    continue;
                }
                let b = &fs[sx as usize * h + sy as usize];
                let ncc: f64 = a.iter().zip(b).map(|(p, q)| p * q).sum();
                values.push(ncc.clamp(-1.0, 1.0));
            }
        }
    }
    CostVolume::new(w, h, shifts.clone(), values, range, VolumeKind::Correlation)
}
