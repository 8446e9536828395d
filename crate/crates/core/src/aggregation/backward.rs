//! Linear-time aggregation of all siamese paths.
//!
//! For a layer `ℓ` and a shift `e` expressed at that layer's resolution,
//!
//! ```text
//! U_ℓ(x, e) = m_ℓ(x, e) ⊙ ⊕_{x' ∈ out(x)} U_{ℓ+1}(x', γ_{ℓ+1}(e))
//! U_t(x, e) = m_t(x, e)
//! ```
//!
//! and the volume is `U(x, d) = one ⊙ ⊕_c U_s((x, c), k_s(d))` at the
//! virtual base. Shifts that collapse onto the same subsampled value share
//! their upper-layer tables: the distinct shifts of all layers form a tree
//! (each shift's parent is its image under `γ`), which is walked depth
//! first. Top-level branches run in parallel; each branch keeps one table
//! per layer alive.

use rayon::prelude::*;

use super::{validate_inputs, ArcMode, CostVolume, LayerRange, VolumeKind};
use crate::error::Result;
use crate::grid::{gamma_unchecked, Shift, ShiftSet};
use crate::matching::{gate_open, MatchContext};
use crate::network::{ActivationStack, LayerGeometry};
use crate::semiring::{Semiring, SemiringOps};

#[derive(Clone, Copy, Debug, Default)]
pub struct BackwardOptions {
    /// Keep every per-layer table for inspection.
    pub retain_tables: bool,
}

/// `U_ℓ` of one layer over the distinct subsampled shifts reaching it.
#[derive(Clone, Debug)]
pub struct LayerTable {
    pub layer: usize,
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub shifts: Vec<Shift>,
    /// One grid-ordered slab per shift.
    pub values: Vec<Vec<f64>>,
}

impl LayerTable {
    pub fn get(&self, x: usize, y: usize, c: usize, shift: Shift) -> Option<f64> {
        let i = self.shifts.iter().position(|&s| s == shift)?;
        Some(self.values[i][(x * self.height + y) * self.channels + c])
    }
}

#[derive(Clone, Debug)]
pub struct BackwardOutput {
    pub volume: CostVolume,
    /// Tables of layers `start..=end`, present when requested.
    pub tables: Option<Vec<LayerTable>>,
    /// Set when the shift set moves vertically (fine for the engine, unusual for rectified stereo).
    pub non_horizontal_shifts: bool,
}

/// Distinct subsampled shifts per layer and how they nest.
struct ShiftTree {
    start: usize,
    /// `shifts[ℓ - start]`: distinct `k_ℓ(d)` in first-occurrence order.
    shifts: Vec<Vec<Shift>>,
    /// `children[ℓ - start][i]`: indices at layer `ℓ - 1` whose parent is `i`.
    children: Vec<Vec<Vec<usize>>>,
    /// For each base shift index, the volume columns it feeds.
    base_members: Vec<Vec<usize>>,
}

impl ShiftTree {
    fn build(stack: &ActivationStack, shifts: &ShiftSet, range: LayerRange) -> Result<Self> {
        let chain = stack.chain();
        let mut per_layer = Vec::with_capacity(range.len());
        for layer in range.start..=range.end {
            let mut distinct: Vec<Shift> = Vec::new();
            for &d in shifts.shifts() {
                let e = chain.k(0, layer, d)?;
                if !distinct.contains(&e) {
                    distinct.push(e);
                }
            }
            per_layer.push(distinct);
        }
        let mut children = vec![Vec::new(); range.len()];
        for layer in range.start + 1..=range.end {
            let q = chain.factor(layer);
            let upper = &per_layer[layer - range.start];
            let mut kids = vec![Vec::new(); upper.len()];
            for (i, &e) in per_layer[layer - 1 - range.start].iter().enumerate() {
                let parent = gamma_unchecked(e, q);
                let p = upper.iter().position(|&u| u == parent).expect("parent shift is in the upper layer");
                kids[p].push(i);
            }
            children[layer - range.start] = kids;
        }
        let base = &per_layer[0];
        let mut base_members = vec![Vec::new(); base.len()];
        for (j, &d) in shifts.shifts().iter().enumerate() {
            let e = chain.k(0, range.start, d)?;
            base_members[base.iter().position(|&b| b == e).expect("base shift present")].push(j);
        }
        Ok(Self { start: range.start, shifts: per_layer, children, base_members })
    }
}

struct Engine<'a, S> {
    reference: &'a ActivationStack,
    searched: &'a ActivationStack,
    sr: S,
    arc_mode: ArcMode,
    tree: &'a ShiftTree,
    retain: bool,
}

/// Results of one branch of the shift tree.
#[derive(Default)]
struct Branch {
    columns: Vec<(usize, Vec<f64>)>,
    retained: Vec<(usize, usize, Vec<f64>)>,
}

impl<S: SemiringOps> Engine<'_, S> {
    fn dims(&self, layer: usize) -> [usize; 3] {
        self.reference.activations(layer).dims()
    }

    fn shift(&self, layer: usize, index: usize) -> Shift {
        self.tree.shifts[layer - self.tree.start][index]
    }

    /// `U_ℓ` at the top layer: the node matching values alone.
    fn top(&self, layer: usize, shift: Shift) -> Vec<f64> {
        let [w, h, c] = self.dims(layer);
        let ctx = MatchContext::new(self.reference, self.searched, layer, shift);
        let mut out = Vec::with_capacity(w * h * c);
        for x in 0..w {
            for y in 0..h {
                for ch in 0..c {
                    out.push(ctx.node(&self.sr, x, y, ch));
                }
            }
        }
        out
    }

    /// One backward step: `U_ℓ` from `U_{ℓ+1}` at the parent shift.
    fn step(&self, layer: usize, shift: Shift, upper: &[f64]) -> Vec<f64> {
        let sr = &self.sr;
        let [w, h, c] = self.dims(layer);
        let ctx = MatchContext::new(self.reference, self.searched, layer, shift);
        let mut out = vec![sr.zero(); w * h * c];
        match self.reference.layer(layer + 1).geometry {
            LayerGeometry::Conv { kh, kw } => {
                let c_up = self.dims(layer + 1)[2];
                // every channel of x shares the same out-set, so ⊕ over the
                // upper channels once per position
                let reduced: Vec<f64> =
                    upper.chunks_exact(c_up).map(|px| px.iter().fold(sr.zero(), |acc, &u| sr.plus(acc, u))).collect();
                let (rx, ry) = match self.arc_mode {
                    ArcMode::Full => (kw / 2, kh / 2),
                    ArcMode::Central => (0, 0),
                };
                for x in 0..w {
                    let (x0, x1) = (x.saturating_sub(rx), (x + rx).min(w - 1));
                    for y in 0..h {
                        let (y0, y1) = (y.saturating_sub(ry), (y + ry).min(h - 1));
                        let mut sum = sr.zero();
                        for xn in x0..=x1 {
                            for yn in y0..=y1 {
                                sum = sr.plus(sum, reduced[xn * h + yn]);
                            }
                        }
                        let base = (x * h + y) * c;
                        for ch in 0..c {
                            out[base + ch] = sr.times(ctx.node(sr, x, y, ch), sum);
                        }
                    }
                }
            }
            LayerGeometry::Pool { size } => {
                let next = self.reference.layer(layer + 1);
                let ref_mask = next.argmax.as_ref().expect("pool layer has a mask");
                let srch_mask = self.searched.layer(layer + 1).argmax.as_ref().expect("pool layer has a mask");
                let h_up = h / size;
                for x in 0..w {
                    for y in 0..h {
                        let up = ((x / size) * h_up + y / size) * c;
                        for ch in 0..c {
                            // the truncated pooling graph keeps only the reference argmax arc
                            if ref_mask.source(x / size, y / size, ch) != (x, y) {
                                continue;
                            }
                            let gate = if gate_open(ref_mask, srch_mask, size, shift, x, y, ch) {
                                sr.one()
                            } else {
                                sr.zero()
                            };
                            let s = sr.plus(sr.zero(), sr.times(gate, upper[up + ch]));
                            out[(x * h + y) * c + ch] = sr.times(ctx.node(sr, x, y, ch), s);
                        }
                    }
                }
            }
            LayerGeometry::Input => unreachable!("the input is never above another layer"),
        }
        out
    }

    /// Virtual base: `one ⊙ ⊕_c U_s(x, c)`.
    fn base_column(&self, table: &[f64]) -> Vec<f64> {
        let sr = &self.sr;
        let c = self.dims(self.tree.start)[2];
        table
            .chunks_exact(c)
            .map(|px| sr.times(sr.one(), px.iter().fold(sr.zero(), |acc, &u| sr.plus(acc, u))))
            .collect()
    }

    fn descend(&self, layer: usize, index: usize, table: Vec<f64>, out: &mut Branch) {
        if layer == self.tree.start {
            let column = self.base_column(&table);
            for &j in &self.tree.base_members[index] {
                out.columns.push((j, column.clone()));
            }
        } else {
            for &child in &self.tree.children[layer - self.tree.start][index] {
                let lower = self.step(layer - 1, self.shift(layer - 1, child), &table);
                self.descend(layer - 1, child, lower, out);
            }
        }
        if self.retain {
            out.retained.push((layer, index, table));
        }
    }
}

/// Aggregates all siamese paths between `range.start` and `range.end`.
pub fn backward(
    reference: &ActivationStack,
    searched: &ActivationStack,
    shifts: &ShiftSet,
    semiring: Semiring,
    range: LayerRange,
    arc_mode: ArcMode,
) -> Result<CostVolume> {
    Ok(backward_with(reference, searched, shifts, semiring, range, arc_mode, BackwardOptions::default())?.volume)
}

/// [`backward`] with a caller-supplied operator pair and options.
pub fn backward_generic<S: SemiringOps>(
    reference: &ActivationStack,
    searched: &ActivationStack,
    shifts: &ShiftSet,
    sr: S,
    range: LayerRange,
    arc_mode: ArcMode,
    options: BackwardOptions,
) -> Result<(Vec<f64>, Option<Vec<LayerTable>>)> {
    validate_inputs(reference, searched, range)?;
    let tree = ShiftTree::build(reference, shifts, range)?;
    let engine = Engine { reference, searched, sr, arc_mode, tree: &tree, retain: options.retain_tables };

    let top = range.end;
    let branches: Vec<Branch> = (0..tree.shifts[top - range.start].len())
        .into_par_iter()
        .map(|i| {
            let mut branch = Branch::default();
            engine.descend(top, i, engine.top(top, engine.shift(top, i)), &mut branch);
            branch
        })
        .collect();

    let [w, h, _] = engine.dims(range.start);
    let n = shifts.len();
    let mut values = vec![0.0; w * h * n];
    let mut retained = Vec::new();
    for branch in branches {
        for (j, column) in branch.columns {
            for (p, v) in column.into_iter().enumerate() {
                values[p * n + j] = v;
            }
        }
        retained.extend(branch.retained);
    }

    let tables = options.retain_tables.then(|| {
        (range.start..=range.end)
            .map(|layer| {
                let [width, height, channels] = engine.dims(layer);
                let layer_shifts = tree.shifts[layer - range.start].clone();
                let mut slabs = vec![Vec::new(); layer_shifts.len()];
                for (l, i, table) in retained.iter().filter(|r| r.0 == layer) {
                    debug_assert_eq!(*l, layer);
                    slabs[*i] = table.clone();
                }
                LayerTable { layer, width, height, channels, shifts: layer_shifts, values: slabs }
            })
            .collect()
    });
    Ok((values, tables))
}

pub fn backward_with(
    reference: &ActivationStack,
    searched: &ActivationStack,
    shifts: &ShiftSet,
    semiring: Semiring,
    range: LayerRange,
    arc_mode: ArcMode,
    options: BackwardOptions,
) -> Result<BackwardOutput> {
    let (values, tables) = backward_generic(reference, searched, shifts, semiring, range, arc_mode, options)?;
    let [w, h, _] = reference.activations(range.start).dims();
    let volume = CostVolume::new(w, h, shifts.clone(), values, range, VolumeKind::Path { semiring, arc_mode })?;
    Ok(BackwardOutput { volume, tables, non_horizontal_shifts: !shifts.is_horizontal() })
}
