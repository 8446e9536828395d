//! NPW1 weight files.
//!
//! Little-endian, no padding:
//!
//! ```text
//! "NPW1" | u32 version=1 | u32 layer_count
//! per layer: u8 kind (0 conv_relu, 1 maxpool)
//!            u32 in_channels | u32 out_channels | u32 kh | u32 kw | u32 stride
//!            conv only: f32 weights[out][in][kh][kw] | f32 bias[out]
//! ```

use std::io::{self, Read, Write};

use super::{LayerKind, LayerSpec, NetworkSpec};
use crate::error::{Error, Result};

pub const NPW1_MAGIC: [u8; 4] = *b"NPW1";
pub const NPW1_VERSION: u32 = 1;

// Upper bound on a single declared dimension, so a corrupt header cannot
// request an absurd allocation before the truncation check fires.
const MAX_DIM: u32 = 1 << 16;

fn read_exact<R: Read>(r: &mut R, buf: &mut [u8], what: &'static str) -> Result<()> {
    r.read_exact(buf).map_err(|e| match e.kind() {
        io::ErrorKind::UnexpectedEof => Error::Truncated(what),
        _ => Error::Io(e),
    })
}

fn read_u8<R: Read>(r: &mut R, what: &'static str) -> Result<u8> {
    let mut b = [0u8; 1];
    read_exact(r, &mut b, what)?;
    Ok(b[0])
}

fn read_u32<R: Read>(r: &mut R, what: &'static str) -> Result<u32> {
    let mut b = [0u8; 4];
    read_exact(r, &mut b, what)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f32s<R: Read>(r: &mut R, n: usize, what: &'static str) -> Result<Vec<f32>> {
    let mut out = Vec::with_capacity(n.min(1 << 20));
    let mut buf = [0u8; 4096];
    let mut remaining = n;
    while remaining > 0 {
        let take = remaining.min(buf.len() / 4);
        read_exact(r, &mut buf[..take * 4], what)?;
        out.extend(buf[..take * 4].chunks_exact(4).map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]])));
        remaining -= take;
    }
    Ok(out)
}

fn dim<R: Read>(r: &mut R, layer: usize, what: &'static str) -> Result<usize> {
    let v = read_u32(r, what)?;
    if v > MAX_DIM {
        return Err(Error::InvalidLayer { layer, reason: format!("{what} = {v} is implausibly large") });
    }
    Ok(v as usize)
}

/// Parses and validates an NPW1 stream.
pub fn load_weights<R: Read>(mut r: R) -> Result<NetworkSpec> {
    let mut magic = [0u8; 4];
    read_exact(&mut r, &mut magic, "magic")?;
    if magic != NPW1_MAGIC {
        return Err(Error::BadMagic { expected: NPW1_MAGIC, found: magic });
    }
    let version = read_u32(&mut r, "version")?;
    if version != NPW1_VERSION {
        return Err(Error::VersionMismatch { expected: NPW1_VERSION, found: version });
    }
    let count = read_u32(&mut r, "layer count")? as usize;
    let mut layers = Vec::with_capacity(count.min(1024));
    for index in 1..=count {
        let code = read_u8(&mut r, "layer kind")?;
        let kind = LayerKind::from_code(code)
            .ok_or_else(|| Error::InvalidLayer { layer: index, reason: format!("unknown kind code {code}") })?;
        let in_channels = dim(&mut r, index, "in_channels")?;
        let out_channels = dim(&mut r, index, "out_channels")?;
        let kh = dim(&mut r, index, "kh")?;
        let kw = dim(&mut r, index, "kw")?;
        let stride = dim(&mut r, index, "stride")?;
        let (weights, bias) = match kind {
            LayerKind::ConvRelu => {
                let n = out_channels * in_channels * kh * kw;
                (read_f32s(&mut r, n, "conv weights")?, read_f32s(&mut r, out_channels, "conv bias")?)
            }
            LayerKind::MaxPool => (Vec::new(), Vec::new()),
        };
        layers.push(LayerSpec { kind, in_channels, out_channels, kernel: (kh, kw), stride, weights, bias });
    }
    NetworkSpec::new(layers)
}

pub fn write_weights<W: Write>(mut w: W, net: &NetworkSpec) -> Result<()> {
    let mut buf = Vec::new();
    buf.extend_from_slice(&NPW1_MAGIC);
    buf.extend_from_slice(&NPW1_VERSION.to_le_bytes());
    buf.extend_from_slice(&(net.depth() as u32).to_le_bytes());
    for layer in net.layers() {
        buf.push(layer.kind.code());
        for v in [layer.in_channels, layer.out_channels, layer.kernel.0, layer.kernel.1, layer.stride] {
            buf.extend_from_slice(&(v as u32).to_le_bytes());
        }
        for v in layer.weights.iter().chain(&layer.bias) {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    w.write_all(&buf)?;
    Ok(())
}
