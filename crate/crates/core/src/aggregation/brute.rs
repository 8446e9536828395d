//! Literal path enumeration: every siamese path is walked and its score
//! folded left to right, then ⊕-accumulated per origin and shift. This is
//! the reference the backward pass is checked against; it does not share
//! the backward pass's tables, shift tree or factored sums.

use super::{validate_inputs, ArcMode, CostVolume, LayerRange, VolumeKind};
use crate::error::{Error, Result};
use crate::grid::{Shift, ShiftSet};
use crate::matching::MatchContext;
use crate::network::{ActivationStack, LayerGeometry};
use crate::semiring::{Semiring, SemiringOps};

/// Default cap on the number of enumerated paths.
pub const DEFAULT_PATH_LIMIT: u64 = 50_000_000;

#[derive(Clone, Debug)]
pub struct BruteForceOutput {
    pub volume: CostVolume,
    /// Paths enumerated from each base position (`x`-major).
    pub path_counts: Vec<u64>,
}

impl BruteForceOutput {
    pub fn total_paths(&self) -> u64 {
        self.path_counts.iter().sum()
    }
}

struct Walker<'a, S> {
    reference: &'a ActivationStack,
    searched: &'a ActivationStack,
    sr: S,
    arc_mode: ArcMode,
    end: usize,
    /// `layer_shifts[ℓ][j]` = shift `j` of the set expressed at layer `ℓ`.
    layer_shifts: Vec<Vec<Shift>>,
    limit: u64,
    enumerated: u64,
}

impl<S: SemiringOps> Walker<'_, S> {
    /// Extends the path prefix scored by `prefix` (one entry per shift) with
    /// node `(x, y, c)` of `layer`, then recurses into its out-set.
    fn visit(&mut self, layer: usize, x: usize, y: usize, c: usize, prefix: &[f64], acc: &mut [f64]) -> Result<()> {
        let sr = self.sr;
        let scored: Vec<f64> = prefix
            .iter()
            .zip(&self.layer_shifts[layer])
            .map(|(&p, &e)| sr.times(p, MatchContext::new(self.reference, self.searched, layer, e).node(&sr, x, y, c)))
            .collect();

        if layer == self.end {
            self.enumerated += 1;
            if self.enumerated > self.limit {
                return Err(Error::PathOverflow { limit: self.limit });
            }
            for (a, m) in acc.iter_mut().zip(&scored) {
                *a = sr.plus(*a, *m);
            }
            return Ok(());
        }

        let next = self.reference.layer(layer + 1);
        match next.geometry {
            LayerGeometry::Conv { kh, kw } => {
                let [w, h, _] = self.reference.activations(layer).dims();
                let c_next = next.activations.channels();
                let (rx, ry) = match self.arc_mode {
                    ArcMode::Full => ((kw / 2) as i64, (kh / 2) as i64),
                    ArcMode::Central => (0, 0),
                };
                for nx in x as i64 - rx..=x as i64 + rx {
                    for ny in y as i64 - ry..=y as i64 + ry {
                        if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                            continue;
                        }
                        for nc in 0..c_next {
                            self.visit(layer + 1, nx as usize, ny as usize, nc, &scored, acc)?;
                        }
                    }
                }
            }
            LayerGeometry::Pool { size } => {
                let (px, py) = (x / size, y / size);
                let ref_mask = next.argmax.as_ref().expect("pool layer has a mask");
                if ref_mask.source(px, py, c) == (x, y) {
                    let gated: Vec<f64> = scored
                        .iter()
                        .zip(&self.layer_shifts[layer])
                        .map(|(&p, &e)| {
                            let ctx = MatchContext::new(self.reference, self.searched, layer, e);
                            sr.times(p, ctx.pool_gate(&sr, x, y, px, py, c).expect("position is in its window"))
                        })
                        .collect();
                    self.visit(layer + 1, px, py, c, &gated, acc)?;
                }
            }
            LayerGeometry::Input => unreachable!("the input is never above another layer"),
        }
        Ok(())
    }
}

/// Enumerates every siamese path; intended for small networks.
pub fn brute_force(
    reference: &ActivationStack,
    searched: &ActivationStack,
    shifts: &ShiftSet,
    semiring: Semiring,
    range: LayerRange,
    arc_mode: ArcMode,
) -> Result<BruteForceOutput> {
    brute_force_limited(reference, searched, shifts, semiring, range, arc_mode, DEFAULT_PATH_LIMIT)
}

pub fn brute_force_limited(
    reference: &ActivationStack,
    searched: &ActivationStack,
    shifts: &ShiftSet,
    semiring: Semiring,
    range: LayerRange,
    arc_mode: ArcMode,
    limit: u64,
) -> Result<BruteForceOutput> {
    let (values, path_counts) = brute_force_generic(reference, searched, shifts, semiring, range, arc_mode, limit)?;
    let [w, h, _] = reference.activations(range.start).dims();
    let volume = CostVolume::new(w, h, shifts.clone(), values, range, VolumeKind::Path { semiring, arc_mode })?;
    Ok(BruteForceOutput { volume, path_counts })
}

/// Returns the raw scores (volume order) and per-origin path counts.
pub fn brute_force_generic<S: SemiringOps>(
    reference: &ActivationStack,
    searched: &ActivationStack,
    shifts: &ShiftSet,
    sr: S,
    range: LayerRange,
    arc_mode: ArcMode,
    limit: u64,
) -> Result<(Vec<f64>, Vec<u64>)> {
    validate_inputs(reference, searched, range)?;
    let chain = reference.chain();
    let mut layer_shifts = vec![Vec::new(); range.end + 1];
    for (layer, slot) in layer_shifts.iter_mut().enumerate().skip(range.start) {
        *slot = shifts.shifts().iter().map(|&d| chain.k(0, layer, d)).collect::<Result<_>>()?;
    }
    let mut walker = Walker { reference, searched, sr, arc_mode, end: range.end, layer_shifts, limit, enumerated: 0 };

    let [w, h, c] = reference.activations(range.start).dims();
    let n = shifts.len();
    let mut values = Vec::with_capacity(w * h * n);
    let mut counts = Vec::with_capacity(w * h);
    for x in 0..w {
        for y in 0..h {
            let before = walker.enumerated;
            let mut acc = vec![sr.zero(); n];
            // virtual base node: matching value one, arcs to every channel
            let virtual_prefix = vec![sr.one(); n];
            for ch in 0..c {
                walker.visit(range.start, x, y, ch, &virtual_prefix, &mut acc)?;
            }
            values.extend(acc);
            counts.push(walker.enumerated - before);
        }
    }
    Ok((values, counts))
}
