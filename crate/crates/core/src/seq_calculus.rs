//! Transforms of a single weight sequence.
//!
//! A [`WeightSequence`] is a finite truncation `m_0, ..., m_K` kept in the
//! log domain: both `log m_k` and the log quotients `log(m_k / m_{k-1})` are
//! stored as independent canonical vectors, so quotient-level identities
//! (duplication, monotonicity) are exact and never depend on re-differencing
//! rounded values.
//!
//! Every supremum or infimum over `k` is enumerated up to the cutoff; if the
//! extremum sits on the cutoff the truncation is unsound and an error is
//! returned.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;

/// Smallest admissible truncation index.
pub const MIN_LEN: usize = 16;
/// Default truncation index.
pub const DEFAULT_K: usize = 256;

/// Positive sequence `m_0 = 1, m_1, ..., m_K` stored in the log domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct WeightSequence {
    log_values: Vec<f64>,
    /// `log_quotients[k] = log(m_k / m_{k-1})` for `k >= 1`; entry 0 is 0.
    log_quotients: Vec<f64>,
    log_convex: bool,
}

impl WeightSequence {
    /// Builds a sequence from `log m_0, ..., log m_K`.
    pub fn from_log_values(log_values: Vec<f64>) -> Result<Self> {
        let mut q = vec![0.0; log_values.len()];
        for k in 1..log_values.len() {
            q[k] = log_values[k] - log_values[k - 1];
        }
        Self::from_parts(log_values, q)
    }

    /// Builds a sequence from `log q_1, ..., log q_K` with `m_0 = 1`.
    pub fn from_log_quotients(log_q: &[f64]) -> Result<Self> {
        let mut lv = Vec::with_capacity(log_q.len() + 1);
        let mut q = Vec::with_capacity(log_q.len() + 1);
        lv.push(0.0);
        q.push(0.0);
        let mut acc = 0.0;
        for &x in log_q {
            acc += x;
            lv.push(acc);
            q.push(x);
        }
        Self::from_parts(lv, q)
    }

    /// Builds a sequence from positive values `m_0 = 1, ..., m_K`.
    pub fn from_values(values: &[f64]) -> Result<Self> {
        if values.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::InvalidInput("weight sequence values must be positive".into()));
        }
        Self::from_log_values(values.iter().map(|v| v.ln()).collect())
    }

    /// `m_k = (k!)^s`, built from the quotients `k^s`.
    pub fn factorial_power(k_max: usize, s: f64) -> Result<Self> {
        let q: Vec<f64> = (1..=k_max).map(|k| s * (k as f64).ln()).collect();
        Self::from_log_quotients(&q)
    }

    /// Like [`Self::from_log_values`] but without the escape check; divided
    /// views such as `k!/k! = 1` are legitimate inputs for minorants and
    /// interleaving even though they stay bounded.
    pub fn from_log_values_unescaped(log_values: Vec<f64>) -> Result<Self> {
        let mut q = vec![0.0; log_values.len()];
        for k in 1..log_values.len() {
            q[k] = log_values[k] - log_values[k - 1];
        }
        Self::from_parts_checked(log_values, q, false)
    }

    /// Like [`Self::from_log_quotients`] but without the escape check.
    pub fn from_log_quotients_unescaped(log_q: &[f64]) -> Result<Self> {
        let mut lv = Vec::with_capacity(log_q.len() + 1);
        lv.push(0.0);
        let mut acc = 0.0;
        for &x in log_q {
            acc += x;
            lv.push(acc);
        }
        Self::from_parts_checked(lv, std::iter::once(0.0).chain(log_q.iter().copied()).collect(), false)
    }

    pub(crate) fn from_parts(log_values: Vec<f64>, log_quotients: Vec<f64>) -> Result<Self> {
        Self::from_parts_checked(log_values, log_quotients, true)
    }

    fn from_parts_checked(log_values: Vec<f64>, log_quotients: Vec<f64>, escape: bool) -> Result<Self> {
        let len = log_values.len();
        if len < MIN_LEN + 1 {
            return Err(Error::InvalidInput(format!(
                "weight sequence needs K >= {MIN_LEN}, got K = {}",
                len.saturating_sub(1)
            )));
        }
        if log_values[0] != 0.0 {
            return Err(Error::InvalidInput("weight sequence must satisfy m_0 = 1".into()));
        }
        if log_values.iter().chain(&log_quotients).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("weight sequence has non-finite entries".into()));
        }
        let k = len - 1;
        let half = k / 2;
        // Escape proxy for m_k^{1/k} -> infinity on the stored range.
        if escape && log_values[k] / k as f64 <= log_values[half] / half as f64 {
            return Err(Error::InvalidInput(format!(
                "m_K^(1/K) must exceed m_(K/2)^(2/K) (K = {k})"
            )));
        }
        let log_convex = log_quotients[1..].windows(2).all(|w| w[0] <= w[1]);
        Ok(Self { log_values, log_quotients, log_convex })
    }

    /// Truncation index `K`.
    pub fn k_max(&self) -> usize {
        self.log_values.len() - 1
    }

    pub fn log_values(&self) -> &[f64] {
        &self.log_values
    }

    pub fn log_value(&self, k: usize) -> f64 {
        self.log_values[k]
    }

    pub fn value(&self, k: usize) -> f64 {
        self.log_values[k].exp()
    }

    /// `log(m_k / m_{k-1})` for `1 <= k <= K`.
    pub fn log_quotient(&self, k: usize) -> f64 {
        assert!(k >= 1, "quotients start at k = 1");
        self.log_quotients[k]
    }

    /// Log quotients `q_1, ..., q_K`.
    pub fn log_quotients(&self) -> &[f64] {
        &self.log_quotients[1..]
    }

    /// True iff the quotients are nondecreasing.
    pub fn is_log_convex(&self) -> bool {
        self.log_convex
    }

    /// The first `k_max + 1` terms as a new sequence.
    pub fn truncate(&self, k_max: usize) -> Result<Self> {
        let n = (k_max + 1).min(self.log_values.len());
        Self::from_parts_checked(self.log_values[..n].to_vec(), self.log_quotients[..n].to_vec(), false)
    }

    /// `log m_k - log k!`, i.e. the divided sequence `m_k / k!` (not
    /// required to escape).
    pub fn divided_by_factorial(&self) -> Result<Self> {
        let q: Vec<f64> = (1..=self.k_max()).map(|k| self.log_quotients[k] - (k as f64).ln()).collect();
        let lv = with_log_factorial(&self.log_values, -1.0);
        Self::from_parts_checked(lv, std::iter::once(0.0).chain(q).collect(), false)
    }

    /// `k! m_k`.
    pub fn times_factorial(&self) -> Result<Self> {
        let q: Vec<f64> = (1..=self.k_max()).map(|k| self.log_quotients[k] + (k as f64).ln()).collect();
        let lv = with_log_factorial(&self.log_values, 1.0);
        Self::from_parts(lv, std::iter::once(0.0).chain(q).collect())
    }
}

fn with_log_factorial(lv: &[f64], sign: f64) -> Vec<f64> {
    let mut lf = 0.0;
    lv.iter()
        .enumerate()
        .map(|(k, &v)| {
            if k > 0 {
                lf += (k as f64).ln();
            }
            v + sign * lf
        })
        .collect()
}

impl TryFrom<Vec<f64>> for WeightSequence {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::from_log_values(v)
    }
}

impl From<WeightSequence> for Vec<f64> {
    fn from(m: WeightSequence) -> Self {
        m.log_values
    }
}

/// `ln k!` for `k = 0..=n`.
pub fn log_factorials(n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for k in 1..=n {
        acc += (k as f64).ln();
        out.push(acc);
    }
    out
}

/// Abscissae and enumeration cutoff shared by the grid transforms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeqTransformGrid {
    t_grid: Vec<f64>,
    k_cutoff: usize,
}

impl SeqTransformGrid {
    pub fn new(t_grid: Vec<f64>, k_cutoff: usize) -> Result<Self> {
        if t_grid.is_empty() || t_grid[0] <= 0.0 || t_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidInput("t grid must be positive and strictly increasing".into()));
        }
        Ok(Self { t_grid, k_cutoff })
    }

    /// Geometric grid from `lo` to `hi`.
    pub fn geometric(lo: f64, hi: f64, points: usize, k_cutoff: usize) -> Result<Self> {
        if !(lo > 0.0 && hi > lo && points >= 2) {
            return Err(Error::InvalidInput("geometric grid needs 0 < lo < hi and >= 2 points".into()));
        }
        Self::new(crate::trend::geometric_grid(lo, hi, points), k_cutoff)
    }

    pub fn t_grid(&self) -> &[f64] {
        &self.t_grid
    }

    pub fn k_cutoff(&self) -> usize {
        self.k_cutoff
    }

    fn cutoff_for(&self, m: &WeightSequence) -> Result<usize> {
        if self.k_cutoff > m.k_max() {
            return Err(Error::InvalidInput(format!(
                "k_cutoff {} exceeds K = {}",
                self.k_cutoff,
                m.k_max()
            )));
        }
        Ok(self.k_cutoff)
    }

    pub fn omega(&self, m: &WeightSequence) -> Result<Vec<f64>> {
        let c = self.cutoff_for(m)?;
        par::try_map(&self.t_grid, |&t| omega_of_m_upto(m, t, c))
    }

    pub fn h(&self, m: &WeightSequence) -> Result<Vec<f64>> {
        let c = self.cutoff_for(m)?;
        par::try_map(&self.t_grid, |&t| h_of_m_upto(m, t, c))
    }

    pub fn gamma(&self, m: &WeightSequence) -> Result<Vec<usize>> {
        let c = self.cutoff_for(m)?;
        par::try_map(&self.t_grid, |&t| gamma_of_m_upto(m, t, c))
    }
}

/// `omega_m(t) = sup_k log(t^k / m_k)`, enumerated over `k <= K`.
pub fn omega_of_m(m: &WeightSequence, t: f64) -> Result<f64> {
    omega_of_m_upto(m, t, m.k_max())
}

/// [`omega_of_m`] with an explicit enumeration cutoff.
pub fn omega_of_m_upto(m: &WeightSequence, t: f64, cutoff: usize) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::InvalidInput(format!("omega_m needs t > 0, got {t}")));
    }
    let lt = t.ln();
    let mut best = 0.0;
    let mut arg = 0;
    for k in 1..=cutoff.min(m.k_max()) {
        let v = k as f64 * lt - m.log_values[k];
        if v > best {
            best = v;
            arg = k;
        }
    }
    if arg == cutoff && cutoff > 0 {
        return Err(Error::SupremumAtCutoff { t, cutoff });
    }
    Ok(best)
}

/// Log of `h_m(t) = inf_k m_k t^k` for `t > 0`, with the minimizing index
/// (smallest on ties) and a flag telling whether it sits on the cutoff.
pub fn log_h_with_arg(m: &WeightSequence, t: f64, cutoff: usize) -> (f64, usize, bool) {
    let lt = t.ln();
    let mut best = 0.0;
    let mut arg = 0;
    for k in 1..=cutoff.min(m.k_max()) {
        let v = m.log_values[k] + k as f64 * lt;
        if v < best {
            best = v;
            arg = k;
        }
    }
    (best, arg, arg == cutoff && cutoff > 0)
}

/// `h_m(t) = inf_k m_k t^k` with `h_m(0) = 0`.
pub fn h_of_m(m: &WeightSequence, t: f64) -> Result<f64> {
    h_of_m_upto(m, t, m.k_max())
}

/// [`h_of_m`] with an explicit enumeration cutoff.
pub fn h_of_m_upto(m: &WeightSequence, t: f64, cutoff: usize) -> Result<f64> {
    if t == 0.0 {
        return Ok(0.0);
    }
    if !(t > 0.0) {
        return Err(Error::InvalidInput(format!("h_m needs t >= 0, got {t}")));
    }
    let (lh, _, at_cutoff) = log_h_with_arg(m, t, cutoff);
    if at_cutoff {
        return Err(Error::InfimumAtCutoff { t, cutoff });
    }
    Ok(lh.exp())
}

/// Value of `h_m(t)` that may have been truncated.
///
/// When the infimum sits on the cutoff, `value` is only an upper bound for
/// the true `h_m(t)` (more terms can only lower an infimum); the sound lower
/// bound is then 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncatedH {
    pub value: f64,
    pub at_cutoff: bool,
}

impl TruncatedH {
    pub fn lower(&self) -> f64 {
        if self.at_cutoff {
            0.0
        } else {
            self.value
        }
    }
}

pub fn h_of_m_truncated(m: &WeightSequence, t: f64) -> TruncatedH {
    if t <= 0.0 {
        return TruncatedH { value: 0.0, at_cutoff: false };
    }
    let (lh, _, at_cutoff) = log_h_with_arg(m, t, m.k_max());
    TruncatedH { value: lh.exp(), at_cutoff }
}

/// Counting function `Gamma_m(t) = min{k : m_{k+1}/m_k >= 1/t}`.
///
/// Meaningful for log-convex `m`; ties resolve to the smallest index.
pub fn gamma_of_m(m: &WeightSequence, t: f64) -> Result<usize> {
    gamma_of_m_upto(m, t, m.k_max())
}

/// [`gamma_of_m`] with an explicit enumeration cutoff.
pub fn gamma_of_m_upto(m: &WeightSequence, t: f64, cutoff: usize) -> Result<usize> {
    if !(t > 0.0) {
        return Err(Error::InvalidInput(format!("Gamma_m needs t > 0, got {t}")));
    }
    let threshold = -t.ln();
    let top = cutoff.min(m.k_max());
    // k ranges over 0..top so that q_{k+1} is stored.
    (0..top)
        .find(|&k| m.log_quotients[k + 1] >= threshold)
        .ok_or(Error::GammaAtCutoff { t, cutoff })
}

/// Log-convex minorant: the lower convex envelope of `(k, log m_k)`.
///
/// Computed by a monotone chain with slope comparisons, so the resulting
/// quotients are nondecreasing exactly. A sequence that is already
/// log-convex is returned unchanged.
pub fn log_convex_minorant(m: &WeightSequence) -> WeightSequence {
    if m.log_convex {
        return m.clone();
    }
    let lv = &m.log_values;
    let slope = |i: usize, j: usize| (lv[j] - lv[i]) / (j - i) as f64;
    let mut hull: Vec<usize> = Vec::with_capacity(lv.len());
    for k in 0..lv.len() {
        while hull.len() >= 2 {
            let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            if slope(a, b) >= slope(b, k) {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(k);
    }
    let mut out_v = lv.clone();
    let mut out_q = vec![0.0; lv.len()];
    for w in hull.windows(2) {
        let (i, j) = (w[0], w[1]);
        let s = slope(i, j);
        for k in i + 1..=j {
            out_q[k] = s;
            if k < j {
                out_v[k] = (lv[i] + (k - i) as f64 * s).min(lv[k]);
            }
        }
    }
    WeightSequence::from_parts_checked(out_v, out_q, false).expect("minorant of a valid sequence is valid")
}
