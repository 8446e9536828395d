//! Layer graph description and forward pass.
//!
//! A network is an ordered list of 3×3-style `conv_relu` layers and
//! non-overlapping max-pooling layers. The arc sets of the computation
//! graph are never materialized; they follow from kernel geometry.

mod forward;
mod weights;

pub use forward::{attach_virtual_layer, forward, ActivationStack, LayerActivation, LayerGeometry, PoolMask, VirtualLayer};
pub use weights::{load_weights, write_weights, NPW1_MAGIC, NPW1_VERSION};

use crate::error::{Error, Result};
use crate::grid::SubsampleChain;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LayerKind {
    ConvRelu,
    MaxPool,
}

impl LayerKind {
    pub fn code(self) -> u8 {
        match self {
            LayerKind::ConvRelu => 0,
            LayerKind::MaxPool => 1,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(LayerKind::ConvRelu),
            1 => Some(LayerKind::MaxPool),
            _ => None,
        }
    }

    /// Single-letter tag: `c` for conv + ReLU, `p` for pooling.
    pub fn letter(self) -> char {
        match self {
            LayerKind::ConvRelu => 'c',
            LayerKind::MaxPool => 'p',
        }
    }
}

/// Kinds and output channels of the first eight VGG-16 layers.
pub const VGG16_PREFIX: [(LayerKind, usize); 8] = [
    (LayerKind::ConvRelu, 64),
    (LayerKind::ConvRelu, 64),
    (LayerKind::MaxPool, 64),
    (LayerKind::ConvRelu, 128),
    (LayerKind::ConvRelu, 128),
    (LayerKind::MaxPool, 128),
    (LayerKind::ConvRelu, 256),
    (LayerKind::ConvRelu, 256),
];

#[derive(Clone, Debug, PartialEq)]
pub struct LayerSpec {
    pub kind: LayerKind,
    pub in_channels: usize,
    pub out_channels: usize,
    /// `(kh, kw)`.
    pub kernel: (usize, usize),
    pub stride: usize,
    /// `[out][in][kh][kw]`, conv only.
    pub weights: Vec<f32>,
    /// `[out]`, conv only.
    pub bias: Vec<f32>,
}

impl LayerSpec {
    pub fn conv_relu(
        in_channels: usize,
        out_channels: usize,
        kernel: (usize, usize),
        weights: Vec<f32>,
        bias: Vec<f32>,
    ) -> Result<Self> {
        let layer = Self { kind: LayerKind::ConvRelu, in_channels, out_channels, kernel, stride: 1, weights, bias };
        layer.validate(0)?;
        Ok(layer)
    }

    pub fn max_pool(channels: usize, size: usize) -> Result<Self> {
        let layer = Self {
            kind: LayerKind::MaxPool,
            in_channels: channels,
            out_channels: channels,
            kernel: (size, size),
            stride: size,
            weights: Vec::new(),
            bias: Vec::new(),
        };
        layer.validate(0)?;
        Ok(layer)
    }

    /// Spatial subsampling factor of this layer.
    pub fn factor(&self) -> usize {
        match self.kind {
            LayerKind::ConvRelu => 1,
            LayerKind::MaxPool => self.stride,
        }
    }

    #[inline]
    pub(crate) fn weight(&self, o: usize, i: usize, ky: usize, kx: usize) -> f32 {
        let (kh, kw) = self.kernel;
        self.weights[((o * self.in_channels + i) * kh + ky) * kw + kx]
    }

    fn validate(&self, layer: usize) -> Result<()> {
        let bad = |reason: String| Err(Error::InvalidLayer { layer, reason });
        let (kh, kw) = self.kernel;
        if self.in_channels == 0 || self.out_channels == 0 || kh == 0 || kw == 0 || self.stride == 0 {
            return bad("zero-sized channel count, kernel or stride".into());
        }
        match self.kind {
            LayerKind::ConvRelu => {
                if self.stride != 1 {
                    return bad(format!("strided convolution (stride {}) is not supported", self.stride));
                }
                if kh % 2 == 0 || kw % 2 == 0 {
                    return bad(format!("conv kernel {kh}x{kw} must be odd-sized"));
                }
                let expected = self.out_channels * self.in_channels * kh * kw;
                if self.weights.len() != expected {
                    return bad(format!("{} weights, expected {expected}", self.weights.len()));
                }
                if self.bias.len() != self.out_channels {
                    return bad(format!("{} biases, expected {}", self.bias.len(), self.out_channels));
                }
                if self.weights.iter().chain(&self.bias).any(|v| !v.is_finite()) {
                    return bad("non-finite weight".into());
                }
            }
            LayerKind::MaxPool => {
                if kh != kw || kh != self.stride {
                    return Err(Error::Unsupported(format!(
                        "layer {layer}: pooling kernel {kh}x{kw} with stride {} overlaps or leaves gaps",
                        self.stride
                    )));
                }
                if self.in_channels != self.out_channels {
                    return bad("pooling must preserve channel count".into());
                }
                if !self.weights.is_empty() || !self.bias.is_empty() {
                    return bad("pooling layer carries weights".into());
                }
            }
        }
        Ok(())
    }
}

/// Layers `1..=L` of a feed-forward network; layer 0 is the input.
#[derive(Clone, Debug, PartialEq)]
pub struct NetworkSpec {
    layers: Vec<LayerSpec>,
}

impl NetworkSpec {
    pub fn new(layers: Vec<LayerSpec>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidLayer { layer: 0, reason: "network has no layers".into() });
        }
        for (i, layer) in layers.iter().enumerate() {
            layer.validate(i + 1)?;
            if i > 0 && layers[i - 1].out_channels != layer.in_channels {
                return Err(Error::ChannelChain {
                    layer: i + 1,
                    expected: layer.in_channels,
                    found: layers[i - 1].out_channels,
                });
            }
        }
        Ok(Self { layers })
    }

    /// Number of layers `L`.
    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn layers(&self) -> &[LayerSpec] {
        &self.layers
    }

    /// Layer `index` in `1..=L`.
    pub fn layer(&self, index: usize) -> &LayerSpec {
        &self.layers[index - 1]
    }

    pub fn input_channels(&self) -> usize {
        self.layers[0].in_channels
    }

    pub fn subsample_chain(&self) -> SubsampleChain {
        SubsampleChain::new(self.layers.iter().map(|l| l.factor() as u32).collect())
            .expect("validated layers have positive factors")
    }

    /// Product of pooling strides over layers `1..=t`.
    pub fn total_stride(&self, t: usize) -> usize {
        self.layers[..t].iter().map(LayerSpec::factor).product()
    }

    /// Width in input pixels of the region that influences one activation
    /// of layer `t`.
    pub fn receptive_field(&self, t: usize) -> usize {
        let (mut field, mut jump) = (1, 1);
        for l in &self.layers[..t] {
            field += (l.kernel.1 - 1) * jump;
            jump *= l.stride;
        }
        field
    }

    /// Kind letters, e.g. `"ccpccpcc"` for the VGG-16 prefix.
    pub fn kind_string(&self) -> String {
        self.layers.iter().map(|l| l.kind.letter()).collect()
    }
}
