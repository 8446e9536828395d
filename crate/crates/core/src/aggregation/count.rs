//! Path and arc counting over the reference activation graph.
//!
//! Counting paths is the backward recursion with `(+, ×)` over the constant
//! one, so it runs in linear time even though the counts grow
//! exponentially with depth.

use super::{ArcMode, LayerRange};
use crate::error::{Error, Result};
use crate::network::{ActivationStack, LayerGeometry};

/// Per-origin path counts over the base grid (`x`-major).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PathCounts {
    pub width: usize,
    pub height: usize,
    pub per_origin: Vec<u64>,
}

impl PathCounts {
    pub fn at(&self, x: usize, y: usize) -> u64 {
        self.per_origin[x * self.height + y]
    }

    /// Sum over origins, `None` on overflow.
    pub fn total(&self) -> Option<u64> {
        self.per_origin.iter().try_fold(0u64, |acc, &c| acc.checked_add(c))
    }
}

fn overflow() -> Error {
    Error::PathOverflow { limit: u64::MAX }
}

fn check_range(stack: &ActivationStack, range: LayerRange) -> Result<()> {
    if range.end > stack.depth() {
        return Err(Error::LayerIndex { index: range.end, max: stack.depth() });
    }
    Ok(())
}

/// Number of siamese paths starting at each virtual base node.
pub fn count_paths(reference: &ActivationStack, range: LayerRange, arc_mode: ArcMode) -> Result<PathCounts> {
    check_range(reference, range)?;
    let mut upper = vec![1u64; reference.activations(range.end).data().len()];
    for layer in (range.start..range.end).rev() {
        let [w, h, c] = reference.activations(layer).dims();
        let next = reference.layer(layer + 1);
        let mut counts = vec![0u64; w * h * c];
        match next.geometry {
            LayerGeometry::Conv { kh, kw } => {
                let c_up = next.activations.channels();
                let reduced = upper
                    .chunks_exact(c_up)
                    .map(|px| px.iter().try_fold(0u64, |a, &b| a.checked_add(b)).ok_or_else(overflow))
                    .collect::<Result<Vec<_>>>()?;
                let (rx, ry) = match arc_mode {
                    ArcMode::Full => (kw / 2, kh / 2),
                    ArcMode::Central => (0, 0),
                };
                for x in 0..w {
                    for y in 0..h {
                        let mut sum = 0u64;
                        for xn in x.saturating_sub(rx)..=(x + rx).min(w - 1) {
                            for yn in y.saturating_sub(ry)..=(y + ry).min(h - 1) {
                                sum = sum.checked_add(reduced[xn * h + yn]).ok_or_else(overflow)?;
                            }
                        }
                        counts[(x * h + y) * c..(x * h + y + 1) * c].fill(sum);
                    }
                }
            }
            LayerGeometry::Pool { size } => {
                let mask = next.argmax.as_ref().expect("pool layer has a mask");
                let h_up = h / size;
                for x in 0..w {
                    for y in 0..h {
                        for ch in 0..c {
                            if mask.source(x / size, y / size, ch) == (x, y) {
                                counts[(x * h + y) * c + ch] = upper[((x / size) * h_up + y / size) * c + ch];
                            }
                        }
                    }
                }
            }
            LayerGeometry::Input => unreachable!("the input is never above another layer"),
        }
        upper = counts;
    }
    let [width, height, c] = reference.activations(range.start).dims();
    let per_origin = upper
        .chunks_exact(c)
        .map(|px| px.iter().try_fold(0u64, |a, &b| a.checked_add(b)).ok_or_else(overflow))
        .collect::<Result<Vec<_>>>()?;
    Ok(PathCounts { width, height, per_origin })
}

/// Number of arcs `|E|` of the aggregated graph, including the virtual fan-out.
pub fn count_arcs(reference: &ActivationStack, range: LayerRange, arc_mode: ArcMode) -> Result<u64> {
    check_range(reference, range)?;
    let mut arcs = reference.activations(range.start).data().len() as u64;
    for layer in range.start..range.end {
        let [w, h, c] = reference.activations(layer).dims();
        let next = reference.layer(layer + 1);
        match next.geometry {
            LayerGeometry::Conv { kh, kw } => {
                let (rx, ry) = match arc_mode {
                    ArcMode::Full => (kw / 2, kh / 2),
                    ArcMode::Central => (0, 0),
                };
                let span = |p: usize, r: usize, n: usize| ((p + r).min(n - 1) - p.saturating_sub(r) + 1) as u64;
                let positions: u64 =
                    (0..w).map(|x| span(x, rx, w)).sum::<u64>() * (0..h).map(|y| span(y, ry, h)).sum::<u64>();
                arcs += positions * (c * next.activations.channels()) as u64;
            }
            // one surviving arc per pooling window and channel
            LayerGeometry::Pool { .. } => arcs += next.activations.data().len() as u64,
            LayerGeometry::Input => unreachable!("the input is never above another layer"),
        }
    }
    Ok(arcs)
}
