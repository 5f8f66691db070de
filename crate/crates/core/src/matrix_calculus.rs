//! One-parameter weight matrices `{M^xi}`: the associated matrix of a
//! weight function, its strongly log-convex regularization, the interleaved
//! matrix, Lemma-8 style regularization and goodness / inclusion predicates.
//!
//! Matrix-level existential quantifiers only search stored rows. When no
//! stored row works the answer is "not decidable on the stored grid", never
//! a flat no.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;
use crate::seq_calculus::{gamma_of_m, gamma_of_m_upto, log_convex_minorant, WeightSequence};
use crate::trend::{self, Trend};
use crate::weight_functions::{young_conjugate, WeightFunction};

/// Default parameter grid.
pub const DEFAULT_XI_GRID: [f64; 6] = [0.25, 0.5, 1.0, 2.0, 4.0, 8.0];
/// Relative slack used when comparing stored log values across rows.
const LOG_SLACK: f64 = 1e-12;

/// One row: the sequence `M^xi` and its divided view `m^xi = M^xi / k!`.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixRow {
    pub xi: f64,
    pub big: WeightSequence,
    pub divided: WeightSequence,
}

impl MatrixRow {
    pub fn from_big(xi: f64, big: WeightSequence) -> Result<Self> {
        let divided = big.divided_by_factorial()?;
        Ok(Self { xi, big, divided })
    }

    pub fn from_divided(xi: f64, divided: WeightSequence) -> Result<Self> {
        let big = divided.times_factorial()?;
        Ok(Self { xi, big, divided })
    }
}

/// Rows sorted by increasing `xi`, all with the same truncation index.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    rows: Vec<MatrixRow>,
}

fn same_xi(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs())
}

impl WeightMatrix {
    pub fn new(mut rows: Vec<MatrixRow>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidInput("weight matrix needs at least one row".into()));
        }
        if rows.iter().any(|r| !(r.xi > 0.0 && r.xi.is_finite())) {
            return Err(Error::InvalidInput("matrix parameters must be positive".into()));
        }
        rows.sort_by(|a, b| a.xi.total_cmp(&b.xi));
        if rows.windows(2).any(|w| same_xi(w[0].xi, w[1].xi)) {
            return Err(Error::InvalidInput("duplicate matrix parameter".into()));
        }
        let k = rows[0].big.k_max();
        if rows.iter().any(|r| r.big.k_max() != k) {
            return Err(Error::InvalidInput("matrix rows must share the truncation index".into()));
        }
        Ok(Self { rows })
    }

    /// Builds a matrix from factorial-included rows `(xi, M^xi)`.
    pub fn from_big_rows(rows: Vec<(f64, WeightSequence)>) -> Result<Self> {
        Self::new(rows.into_iter().map(|(x, m)| MatrixRow::from_big(x, m)).collect::<Result<_>>()?)
    }

    pub fn rows(&self) -> &[MatrixRow] {
        &self.rows
    }

    pub fn xi_grid(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.xi).collect()
    }

    pub fn k_max(&self) -> usize {
        self.rows[0].big.k_max()
    }

    pub fn row(&self, xi: f64) -> Option<&MatrixRow> {
        self.rows.iter().find(|r| same_xi(r.xi, xi))
    }

    fn index_of(&self, xi: f64) -> Result<usize> {
        self.rows.iter().position(|r| same_xi(r.xi, xi)).ok_or(Error::MissingRow(xi))
    }

    /// First violation `(xi, xi', k)` of `M^xi <= M^xi'` for `xi < xi'`.
    pub fn total_order_violation(&self) -> Option<(f64, f64, usize)> {
        for w in self.rows.windows(2) {
            let (a, b) = (&w[0].big, &w[1].big);
            for k in 0..=a.k_max() {
                let (x, y) = (a.log_value(k), b.log_value(k));
                if x > y + LOG_SLACK * x.abs().max(1.0) {
                    return Some((w[0].xi, w[1].xi, k));
                }
            }
        }
        None
    }

    /// `max_k (k!/M_k)^{1/k}` per row with its trend; `k! <= M_k` holds up
    /// to equivalence when every trend is bounded.
    pub fn factorial_domination(&self) -> Vec<(f64, f64, Trend)> {
        self.rows
            .iter()
            .map(|r| {
                let roots: Vec<f64> =
                    (1..=r.divided.k_max()).map(|k| (-r.divided.log_value(k) / k as f64).exp()).collect();
                let run = trend::running_max(&roots);
                (r.xi, *run.last().unwrap_or(&1.0), trend::index_trend(&run))
            })
            .collect()
    }

    /// JSON form `{xi: [log M_0, ..., log M_K]}`.
    pub fn to_json_map(&self) -> BTreeMap<String, Vec<f64>> {
        self.rows.iter().map(|r| (format!("{}", r.xi), r.big.log_values().to_vec())).collect()
    }

    pub fn from_json_map(map: &BTreeMap<String, Vec<f64>>) -> Result<Self> {
        let rows = map
            .iter()
            .map(|(k, v)| {
                let xi: f64 = k.parse().map_err(|_| Error::InvalidInput(format!("bad matrix key `{k}`")))?;
                Ok((xi, WeightSequence::from_log_values(v.clone())?))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_big_rows(rows)
    }
}

impl Serialize for WeightMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_json_map().serialize(s)
    }
}

impl<'de> Deserialize<'de> for WeightMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let map = BTreeMap::<String, Vec<f64>>::deserialize(d)?;
        Self::from_json_map(&map).map_err(serde::de::Error::custom)
    }
}

/// Associated matrix: `log S^xi_k = phi*(xi k) / xi` with `phi` taken from
/// the `omega(1) = 0` normalization of `w`, rows computed in parallel.
pub fn associated_matrix(w: &WeightFunction, xi_grid: &[f64], k_max: usize) -> Result<WeightMatrix> {
    let wn = w.normalized();
    let rows = par::try_map(xi_grid, |&xi| {
        if !(xi > 0.0) {
            return Err(Error::InvalidInput(format!("xi must be positive, got {xi}")));
        }
        let lv = (0..=k_max)
            .map(|k| Ok(young_conjugate(&wn, xi * k as f64)? / xi))
            .collect::<Result<Vec<f64>>>()?;
        MatrixRow::from_big(xi, WeightSequence::from_log_values(lv)?)
    })?;
    WeightMatrix::new(rows)
}

/// Fitted constants of `A^{-1} s^{xi/B} <= sbar^xi <= s^xi <= C^k sbar^{B xi}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SandwichFit {
    pub xi: f64,
    pub b: f64,
    pub a: f64,
    pub c: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StrongRegularization {
    pub matrix: WeightMatrix,
    /// One fit per row that has both `xi/B` and `B xi` stored for some `B`.
    pub sandwich: Vec<SandwichFit>,
}

/// Replaces every divided row by its log-convex minorant, then fits the
/// two-sided comparison with the neighbouring rows.
pub fn strong_regularization(s: &WeightMatrix) -> Result<StrongRegularization> {
    let rows = par::try_map(&s.rows, |r| MatrixRow::from_divided(r.xi, log_convex_minorant(&r.divided)))?;
    let matrix = WeightMatrix::new(rows)?;
    let mut sandwich = Vec::new();
    for row in &s.rows {
        let bs: Vec<f64> = s
            .rows
            .iter()
            .map(|r| r.xi / row.xi)
            .filter(|b| *b >= 1.0 - 1e-12 && s.row(row.xi / b).is_some())
            .collect();
        if bs.is_empty() {
            continue;
        }
        let mut worst = 0.0_f64;
        let mut found = None;
        for b in bs {
            match fit_sandwich(s, &matrix, row.xi, b)? {
                Ok(fit) => {
                    found = Some(fit);
                    break;
                }
                Err(ratio) => worst = worst.max(ratio),
            }
        }
        match found {
            Some(fit) => sandwich.push(fit),
            None => return Err(Error::SandwichUnverifiable { xi: row.xi, worst }),
        }
    }
    Ok(StrongRegularization { matrix, sandwich })
}

/// Fits `A` and `C` for a given `B`; the inner `Err` carries the worst
/// ratio when either constant trends upward.
pub fn fit_sandwich(
    s: &WeightMatrix,
    sbar: &WeightMatrix,
    xi: f64,
    b: f64,
) -> Result<std::result::Result<SandwichFit, f64>> {
    let lo = &s.rows[s.index_of(xi / b)?].divided;
    let mid = &sbar.rows[sbar.index_of(xi)?].divided;
    let hi = &sbar.rows[sbar.index_of(xi * b)?].divided;
    let k = mid.k_max();
    let a_seq: Vec<f64> = (0..=k).map(|j| (lo.log_value(j) - mid.log_value(j)).exp()).collect();
    let s_row = &s.rows[s.index_of(xi)?].divided;
    let c_seq: Vec<f64> =
        (1..=k).map(|j| ((s_row.log_value(j) - hi.log_value(j)) / j as f64).exp()).collect();
    let a_run = trend::running_max(&a_seq);
    let c_run = trend::running_max(&c_seq);
    let (a, c) = (a_run[k].max(1.0), c_run[k - 1].max(1.0));
    if trend::index_trend(&a_run) == Trend::Bounded && trend::index_trend(&c_run) == Trend::Bounded {
        Ok(Ok(SandwichFit { xi, b, a, c }))
    } else {
        Ok(Err(a.max(c)))
    }
}

/// Quotient duplication: `q^v_{2k-1} = q^v_{2k} = q^s_k`, truncated at `K`.
pub fn interleave_sequence(s: &WeightSequence) -> Result<WeightSequence> {
    let q = s.log_quotients();
    let k = s.k_max();
    let vq: Vec<f64> = (1..=k).map(|j| q[j.div_ceil(2) - 1]).collect();
    WeightSequence::from_log_quotients_unescaped(&vq)
}

/// `log v_k = min_{0 <= j <= k} (log s_j + log s_{k-j})`, by enumeration.
pub fn interleave_direct(s: &WeightSequence) -> Vec<f64> {
    let lv = s.log_values();
    (0..lv.len())
        .map(|k| (0..=k).map(|j| lv[j] + lv[k - j]).fold(f64::INFINITY, f64::min))
        .collect()
}

/// Row `v^xi` built from the regularized row at `2 xi` (divided view).
pub fn interleave_row(sbar: &WeightMatrix, xi: f64) -> Result<MatrixRow> {
    let s = &sbar.rows[sbar.index_of(2.0 * xi)?].divided;
    MatrixRow::from_divided(xi, interleave_sequence(s)?)
}

/// The interleaved matrix: one row for every stored `xi` whose `2 xi` is
/// also stored.
pub fn interleave_matrix(sbar: &WeightMatrix) -> Result<WeightMatrix> {
    let xis: Vec<f64> = sbar.xi_grid().into_iter().filter(|x| sbar.row(2.0 * x).is_some()).collect();
    if xis.is_empty() {
        let top = sbar.xi_grid()[0];
        return Err(Error::MissingRow(2.0 * top));
    }
    WeightMatrix::new(par::try_map(&xis, |&x| interleave_row(sbar, x))?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaDoubling {
    pub holds: bool,
    pub first_violation: Option<f64>,
}

/// Checks `2 Gamma_{sbar^{2 xi}}(t) = Gamma_{v^xi}(t)` on every grid point.
pub fn gamma_doubling_check(sbar: &WeightMatrix, v: &WeightMatrix, xi: f64, t_grid: &[f64]) -> Result<GammaDoubling> {
    let s = &sbar.rows[sbar.index_of(2.0 * xi)?].divided;
    let vr = &v.rows[v.index_of(xi)?].divided;
    let half = vr.k_max() / 2;
    for &t in t_grid {
        let gs = gamma_of_m_upto(s, t, half)?;
        let gv = gamma_of_m(vr, t)?;
        if 2 * gs != gv {
            return Ok(GammaDoubling { holds: false, first_violation: Some(t) });
        }
    }
    Ok(GammaDoubling { holds: true, first_violation: None })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SandwichH {
    pub xi: f64,
    pub h: f64,
    /// `v^xi_k <= sbar^{2 xi}_k` on the whole range.
    pub right_chain_holds: bool,
    /// `H` refitted on shorter ranges (`K = 50, 100, 200`, as stored).
    pub h_by_k: Vec<(usize, f64)>,
    /// Set when `H` still grows with `K`.
    pub growing: bool,
}

/// Smallest `H >= 1` with `sbar^xi_k <= H^k v^xi_k` for `k <= K`.
pub fn sandwich_h(sbar: &WeightMatrix, v: &WeightMatrix, xi: f64, k_max: usize) -> Result<SandwichH> {
    let s = &sbar.rows[sbar.index_of(xi)?].divided;
    let s2 = &sbar.rows[sbar.index_of(2.0 * xi)?].divided;
    let vr = &v.rows[v.index_of(xi)?].divided;
    let k_max = k_max.min(vr.k_max());
    let roots: Vec<f64> =
        (1..=k_max).map(|k| ((s.log_value(k) - vr.log_value(k)) / k as f64).exp()).collect();
    let run = trend::running_max(&roots);
    let h_at = |k: usize| run[k - 1].max(1.0);
    let right_chain_holds = (0..=k_max).all(|k| vr.log_value(k) <= s2.log_value(k) + LOG_SLACK * s2.log_value(k).abs());
    let h_by_k: Vec<(usize, f64)> =
        [50, 100, 200].iter().filter(|&&k| k <= k_max).map(|&k| (k, h_at(k))).collect();
    let growing = trend::index_trend(&run) == Trend::Diverging;
    Ok(SandwichH { xi, h: h_at(k_max), right_chain_holds, h_by_k, growing })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lemma8 {
    /// `nu~_1, ..., nu~_K`.
    pub nu_tilde: Vec<f64>,
    /// `nu~_k / k`, nondecreasing.
    pub ratios: Vec<f64>,
}

/// Regularizes `nu` (quotients `nu_1, ..., nu_K`) so that `nu~_k / k` is
/// nondecreasing, with `C^{-1} mu <= nu~ <= nu`.
///
/// The suffix minimum `r_k = min_{l >= k} nu_l / l` is taken right to
/// left and `nu~_k = min(k r_k, nu_k)`, so the upper bound is exact in
/// floating point; the lower bound holds exactly in the ratio form
/// `mu_k / k <= C r_k`.
pub fn lemma8_regularize(mu: &[f64], nu: &[f64], c: f64) -> Result<Lemma8> {
    if mu.len() != nu.len() || nu.is_empty() {
        return Err(Error::InvalidInput("mu and nu must have equal nonzero length".into()));
    }
    if !(c > 0.0) {
        return Err(Error::InvalidInput("regularization constant must be positive".into()));
    }
    if nu[0] < 1.0 || nu.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidInput("nu must satisfy 1 <= nu_1 <= nu_2 <= ...".into()));
    }
    let mut best = (0usize, f64::NEG_INFINITY);
    for (i, &n) in nu.iter().enumerate() {
        let m = mu[i] / (i + 1) as f64;
        if m > best.1 {
            best = (i + 1, m);
        }
        let rhs = c * n / (i + 1) as f64;
        if best.1 > rhs {
            return Err(Error::HypothesisViolated { j: best.0, k: i + 1, lhs: best.1, rhs });
        }
    }
    let mut ratios = vec![0.0; nu.len()];
    let mut acc = f64::INFINITY;
    for i in (0..nu.len()).rev() {
        acc = acc.min(nu[i] / (i + 1) as f64);
        ratios[i] = acc;
    }
    let nu_tilde = ratios.iter().enumerate().map(|(i, r)| (r * (i + 1) as f64).min(nu[i])).collect();
    Ok(Lemma8 { nu_tilde, ratios })
}

/// Outcome of a quantified condition on the stored rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Holds,
    NotDecidable,
}

/// `from` row satisfied via `to` row with constant `c`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairWitness {
    pub from: f64,
    pub to: f64,
    pub c: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub verdict: Verdict,
    pub witnesses: Vec<PairWitness>,
    /// Rows with no witness among the stored rows.
    pub undecided_rows: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoodnessReport {
    /// Condition (26): `mu^xi_j / j <= C mu^eta_k / k`, `eta >= xi`.
    pub r_good: Condition,
    /// Condition (27): mirrored quantifiers, `eta <= xi`.
    pub b_good: Condition,
    /// `m^xi_j^{1/j} <= C m^eta_k^{1/k}` on divided rows.
    pub condition_d: Condition,
    /// Condition (28): `mu^xi_k <= C (M^eta_k)^{1/k}`.
    pub moderate_growth_roumieu: Condition,
    /// Condition (29): mirrored.
    pub moderate_growth_beurling: Condition,
}

/// `log(M_k/M_{k-1}) - log k` for `k = 1..=K`.
fn log_mu_over_k(m: &WeightSequence, k_max: usize) -> Vec<f64> {
    (1..=k_max).map(|k| m.log_quotient(k) - (k as f64).ln()).collect()
}

fn log_roots(m: &WeightSequence, k_max: usize) -> Vec<f64> {
    (1..=k_max).map(|k| m.log_value(k) / k as f64).collect()
}

/// Fits `C` in `a_j <= C b_k` for all `j <= k` (log inputs) and reports
/// whether the running constant stays bounded.
fn prefix_fit(log_a: &[f64], log_b: &[f64]) -> (f64, Trend) {
    let mut pref = f64::NEG_INFINITY;
    let mut run = f64::NEG_INFINITY;
    let consts: Vec<f64> = log_a
        .iter()
        .zip(log_b)
        .map(|(a, b)| {
            pref = pref.max(*a);
            run = run.max(pref - b);
            run.exp()
        })
        .collect();
    (consts.last().copied().unwrap_or(1.0).max(1.0), trend::index_trend(&consts))
}

/// Pointwise `a_k <= C b_k` (log inputs).
fn pointwise_fit(log_a: &[f64], log_b: &[f64]) -> (f64, Trend) {
    let d: Vec<f64> = log_a.iter().zip(log_b).map(|(a, b)| a - b).collect();
    let run: Vec<f64> = trend::running_max(&d).into_iter().map(f64::exp).collect();
    (run.last().copied().unwrap_or(1.0).max(1.0), trend::index_trend(&run))
}

fn quantify<F>(n_rows: usize, xis: &[f64], upward: bool, fit: F) -> Condition
where
    F: Fn(usize, usize) -> (f64, Trend) + Sync + Send,
{
    let per_row = par::map_range(n_rows, |i| {
        let candidates: Vec<usize> = if upward { (i..n_rows).collect() } else { (0..=i).rev().collect() };
        candidates.into_iter().find_map(|j| {
            let (c, t) = fit(i, j);
            (t == Trend::Bounded).then_some((j, c))
        })
    });
    let mut witnesses = Vec::new();
    let mut undecided_rows = Vec::new();
    for (i, r) in per_row.into_iter().enumerate() {
        match r {
            Some((j, c)) => witnesses.push(PairWitness { from: xis[i], to: xis[j], c }),
            None => undecided_rows.push(xis[i]),
        }
    }
    let verdict = if undecided_rows.is_empty() { Verdict::Holds } else { Verdict::NotDecidable };
    Condition { verdict, witnesses, undecided_rows }
}

/// Goodness conditions on the first `k_max` indices of every row.
pub fn goodness(m: &WeightMatrix, k_max: usize) -> GoodnessReport {
    let k = k_max.min(m.k_max());
    let xis = m.xi_grid();
    let n = xis.len();
    let mu: Vec<Vec<f64>> = m.rows.iter().map(|r| log_mu_over_k(&r.big, k)).collect();
    let mu_plain: Vec<Vec<f64>> = m.rows.iter().map(|r| (1..=k).map(|j| r.big.log_quotient(j)).collect()).collect();
    let roots_small: Vec<Vec<f64>> = m.rows.iter().map(|r| log_roots(&r.divided, k)).collect();
    let roots_big: Vec<Vec<f64>> = m.rows.iter().map(|r| log_roots(&r.big, k)).collect();
    GoodnessReport {
        r_good: quantify(n, &xis, true, |i, j| prefix_fit(&mu[i], &mu[j])),
        b_good: quantify(n, &xis, false, |i, j| prefix_fit(&mu[j], &mu[i])),
        condition_d: quantify(n, &xis, true, |i, j| prefix_fit(&roots_small[i], &roots_small[j])),
        moderate_growth_roumieu: quantify(n, &xis, true, |i, j| pointwise_fit(&mu_plain[i], &roots_big[j])),
        moderate_growth_beurling: quantify(n, &xis, false, |i, j| pointwise_fit(&mu_plain[j], &roots_big[i])),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Inclusion {
    pub included: bool,
    pub witnesses: Vec<PairWitness>,
    /// For a negative answer: the row with no bounded partner and its
    /// largest root ratio.
    pub failure: Option<(f64, f64)>,
}

fn root_ratio_fit(a: &WeightSequence, b: &WeightSequence, k: usize) -> (f64, Trend) {
    let la = log_roots(a, k);
    let lb = log_roots(b, k);
    pointwise_fit(&la, &lb)
}

fn inclusion(m: &WeightMatrix, n: &WeightMatrix, roumieu: bool) -> Result<Inclusion> {
    let k = m.k_max().min(n.k_max());
    let (outer, inner) = if roumieu { (m, n) } else { (n, m) };
    let mut witnesses = Vec::new();
    for r in &outer.rows {
        let mut worst = 0.0_f64;
        let mut inconclusive = false;
        let mut found = None;
        for s in &inner.rows {
            let (c, t) = if roumieu { root_ratio_fit(&r.big, &s.big, k) } else { root_ratio_fit(&s.big, &r.big, k) };
            match t {
                Trend::Bounded => {
                    found = Some(PairWitness { from: r.xi, to: s.xi, c });
                    break;
                }
                Trend::Diverging => worst = worst.max(c),
                Trend::Inconclusive => inconclusive = true,
            }
        }
        match found {
            Some(w) => witnesses.push(w),
            None if inconclusive => {
                return Err(Error::InconclusiveTrend(format!("root ratios for row xi = {}", r.xi)));
            }
            None => return Ok(Inclusion { included: false, witnesses, failure: Some((r.xi, worst)) }),
        }
    }
    Ok(Inclusion { included: true, witnesses, failure: None })
}

/// Roumieu inclusion: every row of `M` is dominated by some row of `N`
/// up to `C^k`.
pub fn roumieu_inclusion(m: &WeightMatrix, n: &WeightMatrix) -> Result<Inclusion> {
    inclusion(m, n, true)
}

/// Beurling inclusion: every row of `N` dominates some row of `M`.
pub fn beurling_inclusion(m: &WeightMatrix, n: &WeightMatrix) -> Result<Inclusion> {
    inclusion(m, n, false)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sqrt_matrix(k: usize) -> WeightMatrix {
        associated_matrix(&WeightFunction::power(0.5).unwrap(), &DEFAULT_XI_GRID, k).unwrap()
    }

    #[test]
    fn associated_matrix_closed_form() {
        let m = sqrt_matrix(64);
        for r in m.rows() {
            assert_eq!(r.big.log_value(0), 0.0);
            for k in 1..=64 {
                let y = r.xi * k as f64;
                if y < 0.5 {
                    continue;
                }
                // normalized conjugate = raw conjugate + 1
                let want = (2.0 * y * (2.0 * y).ln() - 2.0 * y + 1.0) / r.xi;
                assert!((r.big.log_value(k) - want).abs() <= 1e-9 * want.abs().max(1.0), "xi {} k {k}", r.xi);
            }
        }
        let one = m.row(1.0).unwrap();
        let s2 = one.big.value(2) / 1f64.exp();
        assert!((s2 / (4.0 / 1f64.exp()).powi(4) - 1.0).abs() < 1e-6);
        assert!(m.total_order_violation().is_none());
    }

    #[test]
    fn regularization_and_sandwich() {
        let m = sqrt_matrix(100);
        let reg = strong_regularization(&m).unwrap();
        for (r, s) in m.rows().iter().zip(reg.matrix.rows()) {
            assert!(s.divided.is_log_convex());
            for k in 0..=100 {
                assert!(s.divided.log_value(k) <= r.divided.log_value(k));
            }
        }
        let fit = fit_sandwich(&m, &reg.matrix, 1.0, 2.0).unwrap().unwrap();
        assert!(fit.a.is_finite() && fit.c.is_finite());
        assert!(!reg.sandwich.is_empty());
    }

    #[test]
    fn gevrey_rows_are_fixed_by_regularization() {
        let g = WeightSequence::factorial_power(40, 3.0).unwrap();
        let m = WeightMatrix::from_big_rows(vec![(1.0, g.clone()), (2.0, g)]).unwrap();
        let reg = strong_regularization(&m).unwrap();
        assert_eq!(reg.matrix.rows()[0].divided, m.rows()[0].divided);
    }

    #[test]
    fn interleave_examples() {
        let s = WeightSequence::factorial_power(40, 2.0).unwrap();
        let v = interleave_sequence(&s).unwrap();
        let q: Vec<f64> = v.log_quotients()[..6].iter().map(|x| x.exp()).collect();
        for (a, b) in q.iter().zip([1.0, 1.0, 4.0, 4.0, 9.0, 9.0]) {
            assert!((a - b).abs() < 1e-12);
        }
        for k in 1..=20 {
            assert_eq!(v.log_quotient(2 * k - 1).to_bits(), v.log_quotient(2 * k).to_bits());
        }
        let direct = interleave_direct(&s);
        for k in 0..=40 {
            assert!((v.log_value(k) - direct[k]).abs() < 1e-9, "k = {k}");
        }
        assert_eq!(v.log_value(0), 0.0);
        assert_eq!(v.log_value(1), s.log_value(1));
        for k in 0..=20 {
            assert!((v.log_value(2 * k) - 2.0 * s.log_value(k)).abs() < 1e-9);
        }
        assert!(v.is_log_convex());
    }

    #[test]
    fn gamma_doubling() {
        let s = WeightSequence::factorial_power(60, 2.0).unwrap();
        let sbar = WeightMatrix::new(vec![MatrixRow::from_divided(2.0, s).unwrap()]).unwrap();
        assert!(interleave_row(&sbar, 2.0).is_err());
        let v = WeightMatrix::new(vec![interleave_row(&sbar, 1.0).unwrap()]).unwrap();
        let r = gamma_doubling_check(&sbar, &v, 1.0, &[0.25, 1.0, 2.0, 0.01, 0.05]).unwrap();
        assert!(r.holds);
        let vr = &v.rows()[0].divided;
        assert_eq!(gamma_of_m(vr, 0.25).unwrap(), 2);
        assert_eq!(gamma_of_m(vr, 0.01).unwrap(), 18);
    }

    #[test]
    fn sandwich_h_stabilizes() {
        let sbar = strong_regularization(&sqrt_matrix(200)).unwrap().matrix;
        let v = interleave_matrix(&sbar).unwrap();
        let h = sandwich_h(&sbar, &v, 1.0, 200).unwrap();
        assert!(h.right_chain_holds);
        assert!(!h.growing, "{h:?}");
        assert_eq!(h.h_by_k.len(), 3);
        assert!(h.h >= 1.0);
        let k0 = sandwich_h(&sbar, &v, 1.0, 1).unwrap();
        assert!(k0.h >= 1.0);
    }

    #[test]
    fn lemma8_examples() {
        let out = lemma8_regularize(&[1.0, 1.0, 1.0], &[2.0, 3.0, 9.0], 1.0).unwrap();
        assert_eq!(out.ratios, vec![1.5, 1.5, 3.0]);
        assert_eq!(out.nu_tilde, vec![1.5, 3.0, 9.0]);
        let nu = [1.0, 4.0, 9.0, 16.0];
        assert_eq!(lemma8_regularize(&nu, &nu, 1.0).unwrap().nu_tilde, nu.to_vec());
        assert!(matches!(
            lemma8_regularize(&[10.0, 1.0, 1.0], &[1.0, 2.0, 3.0], 1.0),
            Err(Error::HypothesisViolated { j: 1, k: 1, .. })
        ));
    }

    #[test]
    fn goodness_examples() {
        let g = WeightSequence::factorial_power(80, 3.0).unwrap();
        let m = WeightMatrix::from_big_rows(vec![(1.0, g.clone()), (2.0, g)]).unwrap();
        let rep = goodness(&m, 80);
        assert_eq!(rep.r_good.verdict, Verdict::Holds);
        assert_eq!(rep.r_good.witnesses[0], PairWitness { from: 1.0, to: 1.0, c: 1.0 });
        assert_eq!(rep.condition_d.verdict, Verdict::Holds);

        let rep = goodness(&sqrt_matrix(120), 120);
        assert_eq!(rep.condition_d.verdict, Verdict::Holds);
        assert_eq!(rep.r_good.verdict, Verdict::Holds);

        // quotients oscillate: mu_k / k alternates between ~k and 1
        let q: Vec<f64> = (1..=80).map(|k| if k % 2 == 0 { 2.0 * (k as f64).ln() } else { (k as f64).ln() }).collect();
        let osc = WeightSequence::from_log_quotients(&q).unwrap();
        let m = WeightMatrix::from_big_rows(vec![(1.0, osc)]).unwrap();
        let rep = goodness(&m, 80);
        assert_eq!(rep.r_good.verdict, Verdict::NotDecidable);
        assert_eq!(rep.r_good.undecided_rows, vec![1.0]);
    }

    #[test]
    fn inclusion_examples() {
        let f1 = WeightSequence::factorial_power(100, 1.0).unwrap();
        let f2 = WeightSequence::factorial_power(100, 2.0).unwrap();
        let m1 = WeightMatrix::from_big_rows(vec![(1.0, f1)]).unwrap();
        let m2 = WeightMatrix::from_big_rows(vec![(1.0, f2)]).unwrap();
        let inc = roumieu_inclusion(&m1, &m2).unwrap();
        assert!(inc.included);
        let same = roumieu_inclusion(&m1, &m1).unwrap();
        assert!(same.included);
        assert_eq!(same.witnesses[0].c, 1.0);
        let not = roumieu_inclusion(&m2, &m1).unwrap();
        assert!(!not.included && not.failure.is_some());
        assert!(beurling_inclusion(&m1, &m2).unwrap().included);
        assert!(!beurling_inclusion(&m2, &m1).unwrap().included);
    }

    #[test]
    fn json_round_trip() {
        let m = sqrt_matrix(32);
        let s = serde_json::to_string(&m).unwrap();
        let back: WeightMatrix = serde_json::from_str(&s).unwrap();
        assert_eq!(back.xi_grid(), m.xi_grid());
        assert_eq!(back.rows()[2].big.log_values(), m.rows()[2].big.log_values());
    }
}
