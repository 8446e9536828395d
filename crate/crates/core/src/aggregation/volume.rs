use std::fmt;
use std::io::{self, Read, Write};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::grid::ShiftSet;
use crate::semiring::Semiring;

/// Which conv arcs the aggregation follows.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum ArcMode {
    /// Every kernel tap.
    #[default]
    Full,
    /// Only the arc to the same spatial position.
    Central,
}

impl ArcMode {
    pub fn code(self) -> u8 {
        match self {
            ArcMode::Full => 0,
            ArcMode::Central => 1,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(ArcMode::Full),
            1 => Some(ArcMode::Central),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ArcMode::Full => "full",
            ArcMode::Central => "central",
        }
    }
}

impl fmt::Display for ArcMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ArcMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "full" => Ok(ArcMode::Full),
            "central" => Ok(ArcMode::Central),
            _ => Err(format!("unknown arc mode {s:?} (expected full or central)")),
        }
    }
}

/// Activation layers `start..=end` taking part in aggregation. The virtual
/// base sits under `start`; layer 0 is the network input.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct LayerRange {
    pub start: usize,
    pub end: usize,
}

impl LayerRange {
    pub fn new(start: usize, end: usize) -> Result<Self> {
        if start > end {
            return Err(Error::LayerIndex { index: start, max: end });
        }
        Ok(Self { start, end })
    }

    /// The range whose arcs run through network layers `first..=last`: its
    /// base is the activation entering layer `first`.
    pub fn through_layers(first: usize, last: usize) -> Result<Self> {
        if first == 0 {
            return Err(Error::LayerIndex { index: 0, max: last });
        }
        Self::new(first - 1, last)
    }

    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

impl FromStr for LayerRange {
    type Err = String;

    /// Parses `s:t`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (a, b) = s.split_once(':').ok_or_else(|| format!("expected s:t, got {s:?}"))?;
        let start = a.trim().parse().map_err(|_| format!("bad start layer {a:?}"))?;
        let end = b.trim().parse().map_err(|_| format!("bad end layer {b:?}"))?;
        LayerRange::new(start, end).map_err(|e| e.to_string())
    }
}

/// How a volume's scores were produced.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VolumeKind {
    Path { semiring: Semiring, arc_mode: ArcMode },
    /// Normalized cross-correlation of stacked features; scores in `[-1, 1]`.
    Correlation,
}

/// Semiring byte marking a correlation volume in NPCV dumps.
pub const NPCV_CORRELATION_CODE: u8 = 3;
pub const NPCV_MAGIC: [u8; 4] = *b"NPCV";
pub const NPCV_VERSION: u32 = 1;

/// Scores `U(x, y, d)` for every position of the base grid and every shift.
#[derive(Clone, Debug, PartialEq)]
pub struct CostVolume {
    width: usize,
    height: usize,
    shifts: ShiftSet,
    values: Vec<f64>,
    reliable: Vec<bool>,
    range: LayerRange,
    kind: VolumeKind,
}

impl CostVolume {
    /// `values` are laid out `x`-major, then `y`, then shift.
    pub fn new(
        width: usize,
        height: usize,
        shifts: ShiftSet,
        values: Vec<f64>,
        range: LayerRange,
        kind: VolumeKind,
    ) -> Result<Self> {
        if values.len() != width * height * shifts.len() {
            return Err(Error::shape(format!(
                "volume {width}x{height}x{} does not match {} values",
                shifts.len(),
                values.len()
            )));
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        let reliable = vec![true; width * height];
        Ok(Self { width, height, shifts, values, reliable, range, kind })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn shifts(&self) -> &ShiftSet {
        &self.shifts
    }

    pub fn shift_count(&self) -> usize {
        self.shifts.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn range(&self) -> LayerRange {
        self.range
    }

    pub fn kind(&self) -> VolumeKind {
        self.kind
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, d: usize) -> f64 {
        self.values[(x * self.height + y) * self.shifts.len() + d]
    }

    /// Scores of all shifts at `(x, y)`.
    #[inline]
    pub fn scores(&self, x: usize, y: usize) -> &[f64] {
        let n = self.shifts.len();
        let start = (x * self.height + y) * n;
        &self.values[start..start + n]
    }

    pub fn is_reliable(&self, x: usize, y: usize) -> bool {
        self.reliable[x * self.height + y]
    }

    pub(crate) fn with_scores(&self, values: Vec<f64>, reliable: Vec<bool>) -> Self {
        debug_assert_eq!(values.len(), self.values.len());
        Self { values, reliable, shifts: self.shifts.clone(), ..*self }
    }

    /// NPCV dump: header, then the scores as little-endian f32 in memory order.
    pub fn write_npcv<W: Write>(&self, mut w: W) -> Result<()> {
        let (semiring, arcs) = match self.kind {
            VolumeKind::Path { semiring, arc_mode } => (semiring.code(), arc_mode.code()),
            VolumeKind::Correlation => (NPCV_CORRELATION_CODE, ArcMode::Full.code()),
        };
        let mut buf = Vec::with_capacity(30 + 4 * self.values.len());
        buf.extend_from_slice(&NPCV_MAGIC);
        for v in [NPCV_VERSION, self.height as u32, self.width as u32, self.shifts.len() as u32] {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        buf.push(semiring);
        buf.push(arcs);
        for v in [self.range.start as u32, self.range.end as u32] {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        for &v in &self.values {
            buf.extend_from_slice(&(v as f32).to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    /// Reads an NPCV dump. The file does not record shift vectors, so the
    /// volume is indexed by stereo shifts `0..D`.
    pub fn read_npcv<R: Read>(mut r: R) -> Result<Self> {
        fn exact<R: Read>(r: &mut R, buf: &mut [u8], what: &'static str) -> Result<()> {
            r.read_exact(buf).map_err(|e| match e.kind() {
                io::ErrorKind::UnexpectedEof => Error::Truncated(what),
                _ => Error::Io(e),
            })
        }
        fn u32_le<R: Read>(r: &mut R, what: &'static str) -> Result<u32> {
            let mut b = [0u8; 4];
            exact(r, &mut b, what)?;
            Ok(u32::from_le_bytes(b))
        }
        let mut magic = [0u8; 4];
        exact(&mut r, &mut magic, "magic")?;
        if magic != NPCV_MAGIC {
            return Err(Error::BadMagic { expected: NPCV_MAGIC, found: magic });
        }
        let version = u32_le(&mut r, "version")?;
        if version != NPCV_VERSION {
            return Err(Error::VersionMismatch { expected: NPCV_VERSION, found: version });
        }
        let height = u32_le(&mut r, "height")? as usize;
        let width = u32_le(&mut r, "width")? as usize;
        let count = u32_le(&mut r, "shift count")?;
        let mut codes = [0u8; 2];
        exact(&mut r, &mut codes, "semiring/arc mode")?;
        let arc_mode = ArcMode::from_code(codes[1]).ok_or_else(|| Error::Format(format!("arc mode {}", codes[1])))?;
        let kind = if codes[0] == NPCV_CORRELATION_CODE {
            VolumeKind::Correlation
        } else {
            let semiring =
                Semiring::from_code(codes[0]).ok_or_else(|| Error::Format(format!("semiring {}", codes[0])))?;
            VolumeKind::Path { semiring, arc_mode }
        };
        let start = u32_le(&mut r, "start layer")? as usize;
        let end = u32_le(&mut r, "end layer")? as usize;
        if count == 0 {
            return Err(Error::Format("volume with no shifts".into()));
        }
        let n = width * height * count as usize;
        let mut bytes = vec![0u8; 4 * n];
        exact(&mut r, &mut bytes, "scores")?;
        let values = bytes.chunks_exact(4).map(|b| f64::from(f32::from_le_bytes([b[0], b[1], b[2], b[3]]))).collect();
        Self::new(width, height, ShiftSet::stereo(count - 1), values, LayerRange::new(start, end)?, kind)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn range_parsing() {
        assert_eq!("2:8".parse::<LayerRange>().unwrap(), LayerRange { start: 2, end: 8 });
        assert!("8:2".parse::<LayerRange>().is_err());
        assert!("2-8".parse::<LayerRange>().is_err());
        assert_eq!(LayerRange::through_layers(2, 8).unwrap(), LayerRange { start: 1, end: 8 });
        assert!(LayerRange::through_layers(0, 3).is_err());
    }

    #[test]
    fn npcv_round_trip() {
        let kind = VolumeKind::Path { semiring: Semiring::MaxMin, arc_mode: ArcMode::Central };
        let values = (0..2 * 3 * 4).map(|i| f64::from(i as f32 * 0.25)).collect();
        let v = CostVolume::new(2, 3, ShiftSet::stereo(3), values, LayerRange::new(1, 4).unwrap(), kind).unwrap();
        let mut bytes = Vec::new();
        v.write_npcv(&mut bytes).unwrap();
        assert_eq!(bytes.len(), 30 + 4 * 24);
        assert_eq!(CostVolume::read_npcv(&bytes[..]).unwrap(), v);
        assert!(matches!(CostVolume::read_npcv(&bytes[..40]), Err(Error::Truncated(_))));
    }
}
