//! Per-neuron matching functions.
//!
//! Conv (and input) nodes are compared with a ratio of activations;
//! pooling contributes an argmax gate on the arc entering the pooled node;
//! the virtual base layer contributes the `⊙`-identity. A searched
//! position that falls off the grid always matches with the semiring zero.

use crate::error::{Error, Result};
use crate::grid::{Grid, Shift};
use crate::network::{ActivationStack, LayerGeometry, PoolMask};
use crate::semiring::SemiringOps;

/// `min(w, v) / max(w, v)`, with `0` when both are zero.
pub fn m_conv(w: f32, v: f32) -> Result<f64> {
    if w < 0.0 {
        return Err(Error::NegativeActivation(w));
    }
    if v < 0.0 {
        return Err(Error::NegativeActivation(v));
    }
    Ok(m_conv_nonneg(w, v))
}

/// [`m_conv`] for inputs already known to be non-negative.
#[inline]
pub(crate) fn m_conv_nonneg(w: f32, v: f32) -> f64 {
    let (w, v) = (f64::from(w), f64::from(v));
    let hi = w.max(v);
    if hi == 0.0 {
        0.0
    } else {
        w.min(v) / hi
    }
}

/// Matching value of a virtual base node.
pub fn m_virtual<S: SemiringOps>(sr: &S) -> f64 {
    sr.one()
}

/// A reference/searched stack pair viewed at one layer and one
/// (already subsampled) shift.
#[derive(Clone, Copy)]
pub struct MatchContext<'a> {
    pub reference: &'a ActivationStack,
    pub searched: &'a ActivationStack,
    pub layer: usize,
    pub shift: Shift,
}

impl<'a> MatchContext<'a> {
    pub fn new(reference: &'a ActivationStack, searched: &'a ActivationStack, layer: usize, shift: Shift) -> Self {
        Self { reference, searched, layer, shift }
    }

    /// Node matching value at `(x, y, c)` of this layer. Pooling nodes match
    /// with `one` (their evidence sits on the incoming arc).
    #[inline]
    pub fn node<S: SemiringOps>(&self, sr: &S, x: usize, y: usize, c: usize) -> f64 {
        let srch: &Grid = self.searched.activations(self.layer);
        let (sx, sy) = (x as i64 - self.shift.dx, y as i64 - self.shift.dy);
        if !srch.contains(sx, sy) {
            return sr.zero();
        }
        match self.reference.layer(self.layer).geometry {
            LayerGeometry::Pool { .. } => sr.one(),
            LayerGeometry::Input | LayerGeometry::Conv { .. } => {
                let w = self.reference.activations(self.layer).get(x, y, c);
                let v = srch.get(sx as usize, sy as usize, c);
                m_conv_nonneg(w, v)
            }
        }
    }

    /// Gate on the arc from input `(x, y)` of this layer into pooled output
    /// `(px, py)` of layer `layer + 1`, channel `c`: one iff the reference
    /// window picks `(x, y)` and the searched window covering
    /// `(x, y) - shift` picks that position.
    pub fn pool_gate<S: SemiringOps>(&self, sr: &S, x: usize, y: usize, px: usize, py: usize, c: usize) -> Result<f64> {
        let next = self.layer + 1;
        let (ref_mask, srch_mask, size) = self.masks(next)?;
        if x / size != px || y / size != py {
            return Err(Error::shape(format!("({x}, {y}) is not in pooling window ({px}, {py})")));
        }
        Ok(if gate_open(ref_mask, srch_mask, size, self.shift, x, y, c) { sr.one() } else { sr.zero() })
    }

    fn masks(&self, next: usize) -> Result<(&'a PoolMask, &'a PoolMask, usize)> {
        let ref_layer = self.reference.layer(next);
        match (ref_layer.geometry, &ref_layer.argmax, &self.searched.layer(next).argmax) {
            (LayerGeometry::Pool { size }, Some(r), Some(s)) => Ok((r, s, size)),
            _ => Err(Error::Unsupported(format!("layer {next} is not a pooling layer"))),
        }
    }
}

/// Pool gate on raw masks; `(x, y)` is an input position at the pooling
/// layer's input resolution and `shift` is expressed at that resolution.
#[inline]
pub(crate) fn gate_open(
    ref_mask: &PoolMask,
    srch_mask: &PoolMask,
    size: usize,
    shift: Shift,
    x: usize,
    y: usize,
    c: usize,
) -> bool {
    let (px, py) = (x / size, y / size);
    if ref_mask.source(px, py, c) != (x, y) {
        return false;
    }
    let (sx, sy) = (x as i64 - shift.dx, y as i64 - shift.dy);
    let [w, h, _] = srch_mask.dims();
    let q = size as i64;
    if sx < 0 || sy < 0 || sx >= w as i64 * q || sy >= h as i64 * q {
        return false;
    }
    let (sx, sy) = (sx as usize, sy as usize);
    srch_mask.source(sx / size, sy / size, c) == (sx, sy)
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::network::{forward, LayerSpec, NetworkSpec};
    use crate::semiring::Semiring;

    #[test]
    fn conv_examples() {
        assert_eq!(m_conv(0.0, 0.0).unwrap(), 0.0);
        assert_eq!(m_conv(3.5, 3.5).unwrap(), 1.0);
        assert_eq!(m_conv(1.0, 2.0).unwrap(), 0.5);
        assert_eq!(m_conv(0.0, 5.0).unwrap(), 0.0);
        assert!(matches!(m_conv(-0.1, 1.0), Err(Error::NegativeActivation(_))));
        assert!(matches!(m_conv(1.0, -2.0), Err(Error::NegativeActivation(_))));
    }

    #[test]
    fn virtual_is_one() {
        for sr in Semiring::ALL {
            assert_eq!(m_virtual(&sr), 1.0);
        }
    }

    fn pool_pair(reference: Vec<f32>, searched: Vec<f32>) -> (ActivationStack, ActivationStack) {
        let net = NetworkSpec::new(vec![LayerSpec::max_pool(1, 2).unwrap()]).unwrap();
        let mk = |v: Vec<f32>| {
            // 4x2 image; values listed row by row
            let g = Grid::from_fn(4, 2, 1, |x, y, _| v[y * 4 + x]).unwrap();
            forward(&net, &g, 1, 1).unwrap()
        };
        (mk(reference), mk(searched))
    }

    #[test]
    fn gate_requires_both_argmaxes() {
        let sr = Semiring::SumProduct;
        // windows: x in {0,1} and {2,3}
        let (r, s) = pool_pair(vec![9., 0., 0., 9., 0., 0., 0., 0.], vec![9., 0., 0., 9., 0., 0., 0., 0.]);
        let ctx = MatchContext::new(&r, &s, 0, Shift::ZERO);
        assert_eq!(ctx.pool_gate(&sr, 0, 0, 0, 0, 0).unwrap(), 1.0);
        assert_eq!(ctx.pool_gate(&sr, 1, 0, 0, 0, 0).unwrap(), 0.0, "not the reference argmax");

        // searched argmax at offset (1,0) while reference picks (0,0)
        let (r, s) = pool_pair(vec![9., 0., 0., 0., 0., 0., 0., 0.], vec![0., 9., 0., 0., 0., 0., 0., 0.]);
        let ctx = MatchContext::new(&r, &s, 0, Shift::ZERO);
        assert_eq!(ctx.pool_gate(&sr, 0, 0, 0, 0, 0).unwrap(), 0.0);

        // shift 2 maps window 1 onto window 0; reference picks x=3, searched picks x=1
        let (r, s) = pool_pair(vec![0., 0., 0., 9., 0., 0., 0., 0.], vec![0., 9., 0., 0., 0., 0., 0., 0.]);
        let ctx = MatchContext::new(&r, &s, 0, Shift::horizontal(2));
        assert_eq!(ctx.pool_gate(&sr, 3, 0, 1, 0, 0).unwrap(), 1.0);

        // shift 1 moves x=2 (window 1) to x=1, which lies in searched window 0
        let (r, s) = pool_pair(vec![0., 0., 9., 0., 0., 0., 0., 0.], vec![0., 9., 0., 0., 0., 0., 0., 0.]);
        let ctx = MatchContext::new(&r, &s, 0, Shift::horizontal(1));
        assert_eq!(ctx.pool_gate(&sr, 2, 0, 1, 0, 0).unwrap(), 1.0);
        let (r, s) = pool_pair(vec![0., 0., 9., 0., 0., 0., 0., 0.], vec![9., 0., 0., 0., 0., 0., 0., 0.]);
        let ctx = MatchContext::new(&r, &s, 0, Shift::horizontal(1));
        assert_eq!(ctx.pool_gate(&sr, 2, 0, 1, 0, 0).unwrap(), 0.0);
        // a large shift pushes the searched window off the grid
        let ctx = MatchContext::new(&r, &s, 0, Shift::horizontal(6));
        assert_eq!(ctx.pool_gate(&sr, 3, 0, 1, 0, 0).unwrap(), 0.0);
        assert!(ctx.pool_gate(&sr, 3, 0, 0, 0, 0).is_err(), "position outside window");
    }

    #[test]
    fn gate_ignores_magnitudes() {
        let sr = Semiring::SumProduct;
        let (r, s) = pool_pair(vec![9., 1., 0., 0., 2., 3., 0., 0.], vec![9., 1., 0., 0., 2., 3., 0., 0.]);
        let (r2, s2) = pool_pair(vec![9., 7., 0., 0., 8., 0., 0., 0.], vec![4., 1., 0., 0., 2., 0.5, 0., 0.]);
        for (x, y) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
            let a = MatchContext::new(&r, &s, 0, Shift::ZERO).pool_gate(&sr, x, y, 0, 0, 0).unwrap();
            let b = MatchContext::new(&r2, &s2, 0, Shift::ZERO).pool_gate(&sr, x, y, 0, 0, 0).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn node_out_of_bounds_is_zero() {
        let (r, s) = pool_pair(vec![1.0; 8], vec![1.0; 8]);
        let sr = Semiring::MaxMin;
        assert_eq!(MatchContext::new(&r, &s, 0, Shift::horizontal(1)).node(&sr, 0, 0, 0), 0.0);
        assert_eq!(MatchContext::new(&r, &s, 0, Shift::horizontal(1)).node(&sr, 1, 0, 0), 1.0);
        assert_eq!(MatchContext::new(&r, &s, 1, Shift::ZERO).node(&sr, 1, 0, 0), 1.0, "pool node");
    }

    proptest! {
        #[test]
        fn conv_properties(w in 0.0f32..100.0, v in 0.0f32..100.0, scale in 0.01f32..100.0) {
            let m = m_conv(w, v).unwrap();
            prop_assert_eq!(m, m_conv(v, w).unwrap());
            prop_assert!((0.0..=1.0).contains(&m));
            prop_assert_eq!(m == 1.0, w == v && w > 0.0);
            let scaled = m_conv(w * scale, v * scale).unwrap();
            prop_assert!((scaled - m).abs() <= 1e-6);
        }
    }
}
