//! Finite-range surrogates for asymptotic statements.
//!
//! An asymptotic claim such as "this ratio stays bounded" is decided from
//! three checkpoints at the top of the sampled range (for index sequences
//! `n/4, n/2, n`; for geometric grids two and one decade below the top).
//! If the increment over the last stretch is a large fraction of the
//! previous one the ratio keeps growing (log-type growth gives exactly one);
//! if it is a small fraction the ratio is converging.

use serde::{Deserialize, Serialize};

/// Increment ratio at or above which growth is called divergent.
pub const DIVERGING_RATIO: f64 = 0.9;
/// Increment ratio at or below which growth is called convergent.
pub const BOUNDED_RATIO: f64 = 0.75;
/// Relative change over the last stretch that counts as flat.
pub const FLAT_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trend {
    Bounded,
    Diverging,
    Inconclusive,
}

/// Classifies the growth of a quantity from its values at three increasing
/// checkpoints.
pub fn classify(early: f64, middle: f64, last: f64) -> Trend {
    if !(early.is_finite() && middle.is_finite() && last.is_finite()) {
        return Trend::Diverging;
    }
    let scale = last.abs().max(middle.abs()).max(f64::MIN_POSITIVE);
    let d1 = middle - early;
    let d2 = last - middle;
    if d2 <= FLAT_TOLERANCE * scale {
        return Trend::Bounded;
    }
    if d1 <= 0.0 {
        return Trend::Inconclusive;
    }
    let r = d2 / d1;
    if r >= DIVERGING_RATIO {
        Trend::Diverging
    } else if r <= BOUNDED_RATIO {
        Trend::Bounded
    } else {
        Trend::Inconclusive
    }
}

/// Trend of an index sequence `values[0..n]` from the checkpoints
/// `n/4, n/2, n-1`. Sequences shorter than four entries are treated as
/// bounded since there is no tail to speak of.
pub fn index_trend(values: &[f64]) -> Trend {
    let n = values.len();
    if n < 4 {
        return Trend::Bounded;
    }
    classify(values[n / 4], values[n / 2], values[n - 1])
}

/// Trend of `values` sampled on the strictly increasing geometric grid `t`
/// using the points nearest to `top/100`, `top/10` and `top`.
pub fn decade_trend(t: &[f64], values: &[f64]) -> Trend {
    assert_eq!(t.len(), values.len());
    let n = t.len();
    if n < 3 {
        return Trend::Bounded;
    }
    let top = t[n - 1];
    let i1 = nearest_index(t, top / 100.0);
    let i2 = nearest_index(t, top / 10.0);
    classify(values[i1], values[i2], values[n - 1])
}

fn nearest_index(t: &[f64], target: f64) -> usize {
    let lt = target.ln();
    t.iter()
        .enumerate()
        .min_by(|a, b| (a.1.ln() - lt).abs().total_cmp(&(b.1.ln() - lt).abs()))
        .map(|(i, _)| i)
        .unwrap_or(0)
}

/// Running maximum of a sequence.
pub fn running_max(values: &[f64]) -> Vec<f64> {
    let mut acc = f64::NEG_INFINITY;
    values
        .iter()
        .map(|&v| {
            acc = acc.max(v);
            acc
        })
        .collect()
}

/// Geometric grid of `points` abscissae from `lo` to `hi` inclusive.
pub fn geometric_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && points >= 2);
    let (a, b) = (lo.ln(), hi.ln());
    (0..points)
        .map(|i| {
            if i == 0 {
                lo
            } else if i == points - 1 {
                hi
            } else {
                (a + (b - a) * i as f64 / (points - 1) as f64).exp()
            }
        })
        .collect()
}
