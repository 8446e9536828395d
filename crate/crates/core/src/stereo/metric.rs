use std::fmt;

use super::DisparityMap;
use crate::error::{Error, Result};

/// Percentage of evaluated pixels whose disparity error exceeds `t`, for `t = 1..=5`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvalReport {
    pub err: [f64; 5],
    pub evaluated: usize,
}

impl EvalReport {
    /// `Err_t` for `t` in `1..=5`.
    pub fn err_at(&self, t: usize) -> f64 {
        self.err[t - 1]
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.err.iter().enumerate() {
            writeln!(f, "Err_{} {e:.2}", i + 1)?;
        }
        Ok(())
    }
}

/// Evaluates `pred` on every pixel where `gt` is valid. A missing
/// prediction on such a pixel counts as an error at every threshold.
pub fn err_metric(pred: &DisparityMap, gt: &DisparityMap) -> Result<EvalReport> {
    if (pred.width(), pred.height()) != (gt.width(), gt.height()) {
        return Err(Error::shape(format!(
            "prediction is {}x{}, ground truth is {}x{}",
            pred.width(),
            pred.height(),
            gt.width(),
            gt.height()
        )));
    }
    let mut wrong = [0usize; 5];
    let mut evaluated = 0;
    for x in 0..gt.width() {
        for y in 0..gt.height() {
            let Some(truth) = gt.get(x, y) else { continue };
            evaluated += 1;
            let error = pred.get(x, y).map_or(f32::INFINITY, |p| (p - truth).abs());
            for (t, count) in wrong.iter_mut().enumerate() {
                if error > (t + 1) as f32 {
                    *count += 1;
                }
            }
        }
    }
    if evaluated == 0 {
        return Err(Error::EmptyEvaluation);
    }
    Ok(EvalReport { err: wrong.map(|w| 100.0 * w as f64 / evaluated as f64), evaluated })
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    #[test]
    fn perfect_prediction() {
        let gt = DisparityMap::constant(8, 4, 3.0);
        let report = err_metric(&gt, &gt).unwrap();
        assert_eq!(report.err, [0.0; 5]);
        assert_eq!(report.to_string().lines().nth(2), Some("Err_3 0.00"));
    }

    #[test]
    fn constant_offset() {
        let gt = DisparityMap::constant(5, 5, 10.0);
        let pred = DisparityMap::constant(5, 5, 12.5);
        assert_eq!(err_metric(&pred, &gt).unwrap().err, [100.0, 100.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn missing_predictions_count_as_errors() {
        let gt = DisparityMap::constant(2, 1, 1.0);
        let mut pred = gt.clone();
        pred.set(0, 0, None);
        assert_eq!(err_metric(&pred, &gt).unwrap().err, [50.0; 5]);
    }

    #[test]
    fn errors() {
        let mut gt = DisparityMap::constant(2, 2, 1.0);
        assert!(err_metric(&DisparityMap::constant(3, 2, 1.0), &gt).is_err());
        for x in 0..2 {
            for y in 0..2 {
                gt.set(x, y, None);
            }
        }
        assert!(matches!(err_metric(&gt.clone(), &gt), Err(Error::EmptyEvaluation)));
    }

    proptest! {
        #[test]
        fn monotone_in_threshold(
            pred in proptest::collection::vec(proptest::option::of(0.0f32..40.0), 36),
            gt in proptest::collection::vec(proptest::option::of(0.0f32..40.0), 36),
        ) {
            let mk = |v: &[Option<f32>]| {
                let mut m = DisparityMap::constant(6, 6, 0.0);
                for (i, d) in v.iter().enumerate() {
                    m.set(i / 6, i % 6, *d);
                }
                m
            };
            if let Ok(r) = err_metric(&mk(&pred), &mk(&gt)) {
                for t in 0..4 {
                    prop_assert!(r.err[t] >= r.err[t + 1]);
                }
                prop_assert!(r.err.iter().all(|e| (0.0..=100.0).contains(e)));
            }
        }
    }
}
