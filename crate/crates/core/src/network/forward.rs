use rayon::prelude::*;

use super::{LayerKind, LayerSpec, NetworkSpec};
use crate::error::{Error, Result};
use crate::grid::{Grid, SubsampleChain};

/// What produced a layer's activations; enough to rebuild its arc sets.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LayerGeometry {
    Input,
    Conv { kh: usize, kw: usize },
    Pool { size: usize },
}

impl LayerGeometry {
    pub fn factor(self) -> usize {
        match self {
            LayerGeometry::Pool { size } => size,
            _ => 1,
        }
    }
}

/// Argmax offsets of a pooling layer: for every pooled output `(x, y, c)`,
/// the `(ox, oy)` position inside its window that held the maximum.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PoolMask {
    width: usize,
    height: usize,
    channels: usize,
    size: usize,
    offsets: Vec<(u16, u16)>,
}

impl PoolMask {
    #[inline]
    pub fn offset(&self, x: usize, y: usize, c: usize) -> (usize, usize) {
        let (ox, oy) = self.offsets[(x * self.height + y) * self.channels + c];
        (usize::from(ox), usize::from(oy))
    }

    /// Input position selected by window `(x, y)` of channel `c`.
    #[inline]
    pub fn source(&self, x: usize, y: usize, c: usize) -> (usize, usize) {
        let (ox, oy) = self.offset(x, y, c);
        (x * self.size + ox, y * self.size + oy)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn dims(&self) -> [usize; 3] {
        [self.width, self.height, self.channels]
    }
}

#[derive(Clone, Debug)]
pub struct LayerActivation {
    pub geometry: LayerGeometry,
    /// Post-ReLU for conv layers, pooled values for pooling, the image for layer 0.
    pub activations: Grid,
    /// Conv responses before the ReLU.
    pub pre_activations: Option<Grid>,
    pub argmax: Option<PoolMask>,
}

/// Activations of layers `0..=t` for one input.
#[derive(Clone, Debug)]
pub struct ActivationStack {
    layers: Vec<LayerActivation>,
}

impl ActivationStack {
    /// Index of the last computed layer.
    pub fn depth(&self) -> usize {
        self.layers.len() - 1
    }

    pub fn layer(&self, index: usize) -> &LayerActivation {
        &self.layers[index]
    }

    pub fn layers(&self) -> &[LayerActivation] {
        &self.layers
    }

    pub fn activations(&self, index: usize) -> &Grid {
        &self.layers[index].activations
    }

    pub fn input(&self) -> &Grid {
        &self.layers[0].activations
    }

    pub fn chain(&self) -> SubsampleChain {
        SubsampleChain::new(self.layers[1..].iter().map(|l| l.geometry.factor() as u32).collect())
            .expect("positive factors")
    }

    /// Same geometry and extents at every layer.
    pub fn is_compatible(&self, other: &ActivationStack) -> bool {
        self.layers.len() == other.layers.len()
            && self
                .layers
                .iter()
                .zip(&other.layers)
                .all(|(a, b)| a.geometry == b.geometry && a.activations.dims() == b.activations.dims())
    }
}

fn check_range(net: &NetworkSpec, s: usize, t: usize) -> Result<()> {
    if t == 0 || t > net.depth() {
        return Err(Error::LayerIndex { index: t, max: net.depth() });
    }
    if s > t {
        return Err(Error::LayerIndex { index: s, max: t });
    }
    Ok(())
}

/// Runs layers `1..=t` on `image`. `s` only participates in range validation;
/// every layer below `t` is computed because later layers depend on it.
///
/// A single-channel image feeding a multi-channel first layer is replicated
/// across channels.
pub fn forward(net: &NetworkSpec, image: &Grid, s: usize, t: usize) -> Result<ActivationStack> {
    check_range(net, s, t)?;
    let want = net.input_channels();
    let input = if image.channels() == want {
        image.clone()
    } else if image.channels() == 1 {
        Grid::from_fn(image.width(), image.height(), want, |x, y, _| image.get(x, y, 0))?
    } else {
        return Err(Error::shape(format!(
            "image has {} channels, network expects {want}",
            image.channels()
        )));
    };

    let mut layers = vec![LayerActivation {
        geometry: LayerGeometry::Input,
        activations: input,
        pre_activations: None,
        argmax: None,
    }];
    for index in 1..=t {
        let spec = net.layer(index);
        let prev = &layers[index - 1].activations;
        let next = match spec.kind {
            LayerKind::ConvRelu => {
                let pre = conv(spec, prev)?;
                let post = Grid::new(
                    pre.width(),
                    pre.height(),
                    pre.channels(),
                    pre.data().iter().map(|&v| v.max(0.0)).collect(),
                )?;
                LayerActivation {
                    geometry: LayerGeometry::Conv { kh: spec.kernel.0, kw: spec.kernel.1 },
                    activations: post,
                    pre_activations: Some(pre),
                    argmax: None,
                }
            }
            LayerKind::MaxPool => {
                let (pooled, mask) = max_pool(prev, spec.stride).map_err(|e| match e {
                    Error::Shape(msg) => Error::Shape(format!("layer {index}: {msg}")),
                    e => e,
                })?;
                LayerActivation {
                    geometry: LayerGeometry::Pool { size: spec.stride },
                    activations: pooled,
                    pre_activations: None,
                    argmax: Some(mask),
                }
            }
        };
        layers.push(next);
    }
    Ok(ActivationStack { layers })
}

/// Stride-1 convolution with replicate ("same as boundary") padding, no ReLU.
/// Each output sums bias + taps in `(in, ky, kx)` order in f64.
pub(crate) fn conv(spec: &LayerSpec, input: &Grid) -> Result<Grid> {
    let (w, h, cin) = (input.width(), input.height(), input.channels());
    if cin != spec.in_channels {
        return Err(Error::shape(format!("conv expects {} channels, got {cin}", spec.in_channels)));
    }
    let (kh, kw) = spec.kernel;
    let (ry, rx) = ((kh / 2) as i64, (kw / 2) as i64);
    let cout = spec.out_channels;
    // [o][ky][kx][i] so each output is one contiguous dot product with the patch
    let mut taps = Vec::with_capacity(spec.weights.len());
    for o in 0..cout {
        for ky in 0..kh {
            for kx in 0..kw {
                for i in 0..cin {
                    taps.push(f64::from(spec.weight(o, i, ky, kx)));
                }
            }
        }
    }
    let patch_len = kh * kw * cin;
    let mut data = vec![0f32; w * h * cout];
    data.par_chunks_mut(h * cout).enumerate().for_each(|(x, column)| {
        let mut patch = vec![0f64; patch_len];
        for y in 0..h {
            let mut p = 0;
            for ky in 0..kh as i64 {
                let sy = (y as i64 + ky - ry).clamp(0, h as i64 - 1) as usize;
                for kx in 0..kw as i64 {
                    let sx = (x as i64 + kx - rx).clamp(0, w as i64 - 1) as usize;
                    for &v in input.pixel(sx, sy) {
                        patch[p] = f64::from(v);
                        p += 1;
                    }
                }
            }
            for o in 0..cout {
                let t = &taps[o * patch_len..(o + 1) * patch_len];
                let acc = t.iter().zip(&patch).fold(f64::from(spec.bias[o]), |acc, (a, b)| acc + a * b);
                column[y * cout + o] = acc as f32;
            }
        }
    });
    Grid::new(w, h, cout, data)
}

/// Non-overlapping max pooling; ties go to the first position of a
/// row-major window scan.
pub(crate) fn max_pool(input: &Grid, size: usize) -> Result<(Grid, PoolMask)> {
    let (w, h, c) = (input.width(), input.height(), input.channels());
    if size == 0 || w % size != 0 || h % size != 0 {
        return Err(Error::shape(format!(
            "extent {w}x{h} is not divisible by pooling stride {size}; crop the input first"
        )));
    }
    let (pw, ph) = (w / size, h / size);
    let mut data = Vec::with_capacity(pw * ph * c);
    let mut offsets = Vec::with_capacity(pw * ph * c);
    for px in 0..pw {
        for py in 0..ph {
            for ch in 0..c {
                let mut best = (0usize, 0usize);
                let mut best_v = input.get(px * size, py * size, ch);
                for oy in 0..size {
                    for ox in 0..size {
                        let v = input.get(px * size + ox, py * size + oy, ch);
                        if v > best_v {
                            best_v = v;
                            best = (ox, oy);
                        }
                    }
                }
                data.push(best_v);
                offsets.push((best.0 as u16, best.1 as u16));
            }
        }
    }
    let mask = PoolMask { width: pw, height: ph, channels: c, size, offsets };
    Ok((Grid::new(pw, ph, c, data)?, mask))
}

/// The single-channel aggregation base placed under layer `s`: one virtual
/// node per spatial position of that layer, fanning out to all its channels.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct VirtualLayer {
    pub base_layer: usize,
    pub width: usize,
    pub height: usize,
    pub fanout: usize,
}

impl VirtualLayer {
    pub fn dims(&self) -> [usize; 3] {
        [self.width, self.height, 1]
    }
}

pub fn attach_virtual_layer(stack: &ActivationStack, s: usize) -> Result<VirtualLayer> {
    if s > stack.depth() {
        return Err(Error::LayerIndex { index: s, max: stack.depth() });
    }
    let base = stack.activations(s);
    Ok(VirtualLayer { base_layer: s, width: base.width(), height: base.height(), fanout: base.channels() })
}
