//! Dense grids, shift sets and the shift-subsampling arithmetic.
//!
//! Grids are indexed `(x, y, c)` and stored with `x` outermost and the
//! channel innermost: the flat offset of `(x, y, c)` is
//! `(x * height + y) * channels + c`. The same order is used by the
//! cost-volume dump, so dumps are a straight copy of memory.

use std::collections::HashSet;

use crate::error::{Error, Result};

/// A dense `width × height × channels` grid of finite `f32` values.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f32>,
}

impl Grid {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<f32>) -> Result<Self> {
        let dims = [width, height, channels];
        if width == 0 || height == 0 || channels == 0 || data.len() != width * height * channels {
            return Err(Error::GridShape { dims, len: data.len() });
        }
        if let Some(index) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { width, height, channels, data })
    }

    pub fn zeros(width: usize, height: usize, channels: usize) -> Self {
        assert!(width > 0 && height > 0 && channels > 0, "grid extents must be positive");
        Self { width, height, channels, data: vec![0.0; width * height * channels] }
    }

    /// Builds a grid by evaluating `f(x, y, c)` at every position.
    pub fn from_fn(
        width: usize,
        height: usize,
        channels: usize,
        mut f: impl FnMut(usize, usize, usize) -> f32,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height * channels);
        for x in 0..width {
            for y in 0..height {
                for c in 0..channels {
                    data.push(f(x, y, c));
                }
            }
        }
        Self::new(width, height, channels, data)
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn channels(&self) -> usize {
        self.channels
    }

    /// Extents ordered `(x, y, c)`.
    pub fn dims(&self) -> [usize; 3] {
        [self.width, self.height, self.channels]
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, c: usize) -> usize {
        debug_assert!(x < self.width && y < self.height && c < self.channels);
        (x * self.height + y) * self.channels + c
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> f32 {
        self.data[self.index(x, y, c)]
    }

    /// Channel vector at `(x, y)`.
    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> &[f32] {
        let start = self.index(x, y, 0);
        &self.data[start..start + self.channels]
    }

    /// Signed lookup; `None` when `(x, y)` falls outside the grid.
    #[inline]
    pub fn get_signed(&self, x: i64, y: i64, c: usize) -> Option<f32> {
        self.contains(x, y).then(|| self.get(x as usize, y as usize, c))
    }

    #[inline]
    pub fn contains(&self, x: i64, y: i64) -> bool {
        x >= 0 && y >= 0 && (x as usize) < self.width && (y as usize) < self.height
    }

    pub fn min_value(&self) -> f32 {
        self.data.iter().copied().fold(f32::INFINITY, f32::min)
    }

    /// Copies the `width × height` window starting at `(x0, y0)`.
    pub fn crop(&self, x0: usize, y0: usize, width: usize, height: usize) -> Result<Self> {
        if x0 + width > self.width || y0 + height > self.height {
            return Err(Error::shape(format!(
                "crop {width}x{height}+{x0}+{y0} exceeds grid {}x{}",
                self.width, self.height
            )));
        }
        Self::from_fn(width, height, self.channels, |x, y, c| self.get(x0 + x, y0 + y, c))
    }

    /// Center-crops both extents down to multiples of `q`.
    pub fn center_crop_to_multiple(&self, q: usize) -> Result<Self> {
        if q == 0 {
            return Err(Error::InvalidFactor);
        }
        let w = self.width - self.width % q;
        let h = self.height - self.height % q;
        if w == 0 || h == 0 {
            return Err(Error::shape(format!(
                "grid {}x{} is smaller than the total pooling stride {q}",
                self.width, self.height
            )));
        }
        if w == self.width && h == self.height {
            return Ok(self.clone());
        }
        self.crop((self.width - w) / 2, (self.height - h) / 2, w, h)
    }

    /// Mirrors the grid left-to-right.
    pub fn flip_horizontal(&self) -> Self {
        let w = self.width;
        Self::from_fn(w, self.height, self.channels, |x, y, c| self.get(w - 1 - x, y, c))
            .expect("flip preserves shape")
    }
}

/// An integer displacement `(dx, dy)`; the channel component is always zero.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Shift {
    pub dx: i64,
    pub dy: i64,
}

impl Shift {
    pub const ZERO: Shift = Shift { dx: 0, dy: 0 };

    pub const fn new(dx: i64, dy: i64) -> Self {
        Self { dx, dy }
    }

    pub const fn horizontal(dx: i64) -> Self {
        Self { dx, dy: 0 }
    }

    /// From a full `(x, y, c)` grid vector; shifts never move across channels.
    pub fn from_components(v: [i64; 3]) -> Result<Self> {
        if v[2] != 0 {
            return Err(Error::InvalidShiftSet(format!("shift {v:?} has a channel component")));
        }
        Ok(Self::new(v[0], v[1]))
    }

    pub fn components(self) -> [i64; 3] {
        [self.dx, self.dy, 0]
    }
}

/// Subsamples a shift by a layer factor: element-wise floor division.
pub fn gamma(shift: Shift, q: u32) -> Result<Shift> {
    if q == 0 {
        return Err(Error::InvalidFactor);
    }
    Ok(gamma_unchecked(shift, q))
}

#[inline]
pub(crate) fn gamma_unchecked(shift: Shift, q: u32) -> Shift {
    let q = i64::from(q);
    Shift::new(shift.dx.div_euclid(q), shift.dy.div_euclid(q))
}

/// An ordered set of distinct shift candidates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShiftSet {
    shifts: Vec<Shift>,
}

impl ShiftSet {
    pub fn new(shifts: Vec<Shift>) -> Result<Self> {
        if shifts.is_empty() {
            return Err(Error::InvalidShiftSet("empty".into()));
        }
        let mut seen = HashSet::with_capacity(shifts.len());
        for s in &shifts {
            if !seen.insert(*s) {
                return Err(Error::InvalidShiftSet(format!("duplicate shift {s:?}")));
            }
        }
        Ok(Self { shifts })
    }

    /// Horizontal stereo shifts `(0,0), (1,0), …, (dmax,0)`.
    pub fn stereo(dmax: u32) -> Self {
        Self { shifts: (0..=i64::from(dmax)).map(Shift::horizontal).collect() }
    }

    pub fn shifts(&self) -> &[Shift] {
        &self.shifts
    }

    pub fn len(&self) -> usize {
        self.shifts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shifts.is_empty()
    }

    pub fn is_horizontal(&self) -> bool {
        self.shifts.iter().all(|s| s.dy == 0)
    }

    pub fn max_abs_dx(&self) -> i64 {
        self.shifts.iter().map(|s| s.dx.abs()).max().unwrap_or(0)
    }

    pub fn position(&self, shift: Shift) -> Option<usize> {
        self.shifts.iter().position(|&s| s == shift)
    }

    /// The same shifts mirrored, `(dx, dy) -> (-dx, dy)`; used for right-view matching.
    pub fn mirrored(&self) -> Self {
        Self { shifts: self.shifts.iter().map(|s| Shift::new(-s.dx, s.dy)).collect() }
    }
}

/// Per-layer subsampling factors `q_1 … q_L` (1 for conv, the stride for pooling).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubsampleChain {
    factors: Vec<u32>,
}

impl SubsampleChain {
    pub fn new(factors: Vec<u32>) -> Result<Self> {
        if factors.contains(&0) {
            return Err(Error::InvalidFactor);
        }
        Ok(Self { factors })
    }

    /// Number of layers `L`; valid layer indices are `0..=L`.
    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    /// Factor of layer `layer` (1-based).
    pub fn factor(&self, layer: usize) -> u32 {
        self.factors[layer - 1]
    }

    pub fn factors(&self) -> &[u32] {
        &self.factors
    }

    /// Product of the factors of layers `1..=layer`.
    pub fn total(&self, layer: usize) -> u64 {
        self.factors[..layer].iter().map(|&q| u64::from(q)).product()
    }

    /// Maps a shift expressed at layer `from` to layer `to` by applying the
    /// factors of layers `from + 1 ..= to` in sequence.
    pub fn k(&self, from: usize, to: usize, shift: Shift) -> Result<Shift> {
        let max = self.factors.len();
        if to > max {
            return Err(Error::LayerIndex { index: to, max });
        }
        if from > to {
            return Err(Error::LayerIndex { index: from, max: to });
        }
        Ok(self.factors[from..to].iter().fold(shift, |s, &q| gamma_unchecked(s, q)))
    }
}
