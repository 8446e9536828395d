//! Stereo read-out: score normalization, winner-take-all, left-right
//! checking, the stacked-feature correlation baseline, error metrics and
//! synthetic fixtures.

mod corr;
mod metric;
mod synthetic;

pub use corr::{corr_baseline, CORR_OFF_GRID};
pub use metric::{err_metric, EvalReport};
pub use synthetic::make_synthetic_pair;

use std::io::{BufRead, Write};

use crate::aggregation::CostVolume;
use crate::error::{Error, Result};
use crate::image::{read_pnm, write_pnm, Pnm};

/// Per-pixel disparities in pixels with a validity mask (`x`-major).
#[derive(Clone, Debug, PartialEq)]
pub struct DisparityMap {
    width: usize,
    height: usize,
    values: Vec<f32>,
    valid: Vec<bool>,
}

impl DisparityMap {
    pub fn new(width: usize, height: usize, values: Vec<f32>, valid: Vec<bool>) -> Result<Self> {
        if values.len() != width * height || valid.len() != width * height {
            return Err(Error::shape(format!("disparity map {width}x{height} has wrong buffer sizes")));
        }
        if values.iter().zip(&valid).any(|(v, &ok)| ok && !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::shape("valid disparities must be finite and non-negative"));
        }
        Ok(Self { width, height, values, valid })
    }

    /// A map holding `value` everywhere.
    pub fn constant(width: usize, height: usize, value: f32) -> Self {
        Self { width, height, values: vec![value; width * height], valid: vec![true; width * height] }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> Option<f32> {
        let i = x * self.height + y;
        self.valid[i].then_some(self.values[i])
    }

    pub fn set(&mut self, x: usize, y: usize, value: Option<f32>) {
        let i = x * self.height + y;
        match value {
            Some(v) => {
                self.values[i] = v;
                self.valid[i] = true;
            }
            None => {
                self.values[i] = 0.0;
                self.valid[i] = false;
            }
        }
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|&&v| v).count()
    }

    /// 16-bit PGM, `round(d * 256)` per pixel and 0 for invalid pixels.
    pub fn write_pgm16<W: Write>(&self, w: W) -> Result<()> {
        let mut samples = Vec::with_capacity(self.width * self.height);
        for y in 0..self.height {
            for x in 0..self.width {
                samples.push(match self.get(x, y) {
                    Some(d) => (f64::from(d) * 256.0).round().clamp(0.0, 65535.0) as u16,
                    None => 0,
                });
            }
        }
        write_pnm(w, &Pnm { width: self.width, height: self.height, channels: 1, maxval: 65535, samples })
    }

    /// Reads a 16-bit disparity PGM; zero samples are invalid.
    pub fn read_pgm16<R: BufRead>(r: R) -> Result<Self> {
        let pnm = read_pnm(r)?;
        if pnm.channels != 1 || pnm.maxval < 256 {
            return Err(Error::Format("disparity maps are 16-bit single-channel PGM".into()));
        }
        let mut map = Self::constant(pnm.width, pnm.height, 0.0);
        for y in 0..pnm.height {
            for x in 0..pnm.width {
                let s = pnm.samples[y * pnm.width + x];
                map.set(x, y, (s != 0).then(|| f32::from(s) / 256.0));
            }
        }
        Ok(map)
    }
}

/// Divides each pixel's scores by their maximum. Pixels whose scores are
/// all zero stay zero and are marked unreliable.
pub fn normalize(volume: &CostVolume) -> CostVolume {
    let n = volume.shift_count();
    let mut values = Vec::with_capacity(volume.values().len());
    let mut reliable = Vec::with_capacity(volume.width() * volume.height());
    for x in 0..volume.width() {
        for y in 0..volume.height() {
            let scores = volume.scores(x, y);
            let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if max > 0.0 {
                values.extend(scores.iter().map(|s| s / max));
                reliable.push(volume.is_reliable(x, y));
            } else {
                values.extend(std::iter::repeat_n(0.0, n));
                reliable.push(false);
            }
        }
    }
    volume.with_scores(values, reliable)
}

/// Per-pixel argmax over shifts; ties go to the earliest shift. The
/// disparity is the magnitude of the winning shift's horizontal component.
pub fn wta(volume: &CostVolume) -> DisparityMap {
    let (w, h) = (volume.width(), volume.height());
    let shifts = volume.shifts().shifts();
    let mut map = DisparityMap::constant(w, h, 0.0);
    for x in 0..w {
        for y in 0..h {
            if !volume.is_reliable(x, y) {
                map.set(x, y, None);
                continue;
            }
            let scores = volume.scores(x, y);
            let mut best = 0;
            for (i, &s) in scores.iter().enumerate().skip(1) {
                if s > scores[best] {
                    best = i;
                }
            }
            map.set(x, y, Some(shifts[best].dx.unsigned_abs() as f32));
        }
    }
    map
}

/// Invalidates left pixels whose right-view counterpart disagrees by more
/// than `tol` pixels. Pixels whose counterpart is off the image or invalid
/// cannot be checked and are kept.
pub fn lr_check(left: &DisparityMap, right: &DisparityMap, tol: f32) -> Result<DisparityMap> {
    if (left.width, left.height) != (right.width, right.height) {
        return Err(Error::shape("left and right disparity maps differ in size"));
    }
    let mut out = left.clone();
    for x in 0..left.width {
        for y in 0..left.height {
            let Some(dl) = left.get(x, y) else { continue };
            let xr = x as i64 - dl.round() as i64;
            if xr < 0 || xr as usize >= right.width {
                continue;
            }
            if right.get(xr as usize, y).is_some_and(|dr| (dl - dr).abs() > tol) {
                out.set(x, y, None);
            }
        }
    }
    Ok(out)
}
