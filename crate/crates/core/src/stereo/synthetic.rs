use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::DisparityMap;
use crate::error::{Error, Result};
use crate::grid::Grid;

/// A constant-shift stereo pair: a uniform random texture, the same
/// texture moved left by `d0` pixels (right edge replicated), optional
/// Gaussian noise of standard deviation `noise` on the searched image, and
/// the ground truth (`d0`, invalid in the `d0` leftmost columns, which have
/// no counterpart).
pub fn make_synthetic_pair(
    width: usize,
    height: usize,
    d0: usize,
    noise: f32,
    seed: u64,
) -> Result<(Grid, Grid, DisparityMap)> {
    if d0 >= width {
        return Err(Error::shape(format!("shift {d0} must be smaller than width {width}")));
    }
    if !(noise >= 0.0 && noise.is_finite()) {
        return Err(Error::shape(format!("noise level {noise} must be a non-negative number")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let reference = Grid::from_fn(width, height, 1, |_, _, _| rng.random::<f32>())?;
    let normal = Normal::new(0.0f32, noise).expect("valid deviation");
    let searched = Grid::from_fn(width, height, 1, |x, y, _| {
        let v = reference.get((x + d0).min(width - 1), y, 0);
        if noise > 0.0 {
            (v + normal.sample(&mut rng)).clamp(0.0, 1.0)
        } else {
            v
        }
    })?;
    let mut gt = DisparityMap::constant(width, height, d0 as f32);
    for x in 0..d0 {
        for y in 0..height {
            gt.set(x, y, None);
        }
    }
    Ok((reference, searched, gt))
}
