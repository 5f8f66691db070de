//! Evaluable weight functions, their Young conjugates and the kappa
//! transform, plus a finite-grid classifier for the asymptotic properties
//! (non-quasianalytic, `o(t)`, strong, equivalent to a concave weight).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;
use crate::quadrature::adaptive_simpson;
use crate::trend::{self, Trend};

/// Upper end of the bracket searched by [`young_conjugate`].
pub const CONJUGATE_SEARCH_BOUND: f64 = 1.0e4;
/// Relative tolerance of the kappa quadrature (tail stopping rule).
pub const KAPPA_RTOL: f64 = 1e-8;
/// Relative tolerance used inside each quadrature chunk.
const CHUNK_RTOL: f64 = 1e-12;
/// Number of doublings of `log U` before the tail is declared divergent.
const MAX_DOUBLINGS: usize = 64;
/// `omega(t)/t` at the grid top must fall below this fraction of its grid
/// maximum for `omega = o(t)`.
pub const LITTLE_O_FRACTION: f64 = 0.1;
/// Dilations tested for `omega(lambda t) <= C lambda omega(t)`.
pub const LAMBDAS: [f64; 11] = [1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0, 128.0, 256.0, 512.0, 1024.0];

/// Closed-form families of weights.
#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    /// `t^a`.
    Power { a: f64 },
    /// `t`; quasianalytic, kept as a control.
    Linear,
    /// `t / (log t)^2` for `t >= e^2`, constant `e^2/4` below (the constant
    /// branch keeps `omega(e^x)` convex).
    LogSquaredRatio,
    /// `max(0, log t)^s` with `s >= 1`.
    LogPower { s: f64 },
    /// Piecewise linear in `log t` through `(t_i, omega_i)`, constant to the
    /// left and linearly extrapolated (in `log t`) to the right.
    Tabulated { log_t: Vec<f64>, omega: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// Use the family as written.
    #[default]
    None,
    /// Subtract `omega(1)` and clamp at 0, so that `omega(1) = 0` and
    /// `phi*(0) = 0`.
    AtOne,
}

/// An increasing weight `omega`, evaluated through `phi(x) = omega(e^x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightFunction {
    family: Family,
    normalization: Normalization,
    /// `log phi(0)` of the raw family, cached for normalization.
    log_phi0: f64,
}

impl WeightFunction {
    pub fn new(family: Family, normalization: Normalization) -> Result<Self> {
        match &family {
            Family::Power { a } if !(*a > 0.0 && a.is_finite()) => {
                return Err(Error::InvalidInput(format!("power weight needs a > 0, got {a}")));
            }
            Family::LogPower { s } if !(*s >= 1.0 && s.is_finite()) => {
                return Err(Error::InvalidInput(format!("log-power weight needs s >= 1, got {s}")));
            }
            Family::Tabulated { log_t, omega } => validate_table(log_t, omega)?,
            _ => {}
        }
        let mut w = Self { family, normalization: Normalization::None, log_phi0: 0.0 };
        w.log_phi0 = w.log_phi_raw(0.0);
        w.normalization = normalization;
        Ok(w)
    }

    pub fn power(a: f64) -> Result<Self> {
        Self::new(Family::Power { a }, Normalization::None)
    }

    /// Builds a tabulated weight from samples `(t_i, omega(t_i))`.
    pub fn tabulated(t: &[f64], omega: &[f64], normalization: Normalization) -> Result<Self> {
        if t.iter().any(|x| !(*x > 0.0)) {
            return Err(Error::InvalidInput("tabulated abscissae must be positive".into()));
        }
        Self::new(
            Family::Tabulated { log_t: t.iter().map(|x| x.ln()).collect(), omega: omega.to_vec() },
            normalization,
        )
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn normalization(&self) -> Normalization {
        self.normalization
    }

    /// The same family with `omega(1) = 0` normalization.
    pub fn normalized(&self) -> Self {
        Self { normalization: Normalization::AtOne, ..self.clone() }
    }

    fn log_phi_raw(&self, x: f64) -> f64 {
        match &self.family {
            Family::Power { a } => a * x,
            Family::Linear => x,
            Family::LogSquaredRatio => {
                if x >= 2.0 {
                    x - 2.0 * x.ln()
                } else {
                    2.0 - 4f64.ln()
                }
            }
            Family::LogPower { s } => {
                if x > 0.0 {
                    s * x.ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
            Family::Tabulated { log_t, omega } => tabulated_phi(log_t, omega, x).ln(),
        }
    }

    /// `log phi(x)`, `-inf` where `phi` vanishes. Stable for huge `x`.
    pub fn log_phi(&self, x: f64) -> f64 {
        let raw = self.log_phi_raw(x);
        match self.normalization {
            Normalization::None => raw,
            Normalization::AtOne => {
                if !(raw > self.log_phi0) {
                    f64::NEG_INFINITY
                } else {
                    raw + (-(self.log_phi0 - raw).exp()).ln_1p()
                }
            }
        }
    }

    /// `log phi(x + v) - v`, arranged so that large shifts `v` do not cancel.
    pub fn log_phi_shifted(&self, x: f64, v: f64) -> f64 {
        let y = x + v;
        let shifted = match &self.family {
            Family::Power { a } => a * x + (a - 1.0) * v,
            Family::Linear => x,
            Family::LogSquaredRatio if y >= 2.0 => x - 2.0 * y.ln(),
            _ => self.log_phi_raw(y) - v,
        };
        match self.normalization {
            Normalization::None => shifted,
            Normalization::AtOne => {
                let raw = self.log_phi_raw(y);
                if !(raw > self.log_phi0) {
                    f64::NEG_INFINITY
                } else {
                    shifted + (-(self.log_phi0 - raw).exp()).ln_1p()
                }
            }
        }
    }

    /// `phi(x) = omega(e^x)`.
    pub fn phi(&self, x: f64) -> f64 {
        self.log_phi(x).exp()
    }

    /// `omega(t)` for `t >= 0`.
    pub fn eval(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return self.phi(f64::NEG_INFINITY);
        }
        self.phi(t.ln())
    }

    /// Checks the weight axioms on a sampled range: monotonicity, midpoint
    /// convexity of `phi`, and `log t = O(omega(t))` at the top of the grid.
    pub fn check_axioms(&self, t_grid: &[f64]) -> AxiomReport {
        let vals: Vec<f64> = t_grid.iter().map(|&t| self.eval(t)).collect();
        let nondecreasing = vals.windows(2).all(|w| w[0] <= w[1] * (1.0 + 1e-14));
        let xs: Vec<f64> = t_grid.iter().map(|t| t.ln()).filter(|x| *x >= 0.0).collect();
        let phi_convex = xs.windows(2).all(|w| {
            let mid = self.phi(0.5 * (w[0] + w[1]));
            let avg = 0.5 * (self.phi(w[0]) + self.phi(w[1]));
            mid <= avg * (1.0 + 1e-12) + 1e-300
        });
        let top = *t_grid.last().unwrap_or(&1.0);
        let log_ratio = if top > 1.0 { self.eval(top) / top.ln() } else { f64::NAN };
        AxiomReport { nondecreasing, phi_convex, log_over_omega_ratio_at_top: log_ratio }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxiomReport {
    pub nondecreasing: bool,
    pub phi_convex: bool,
    /// `omega(t)/log t` at the grid top; bounded below by a positive
    /// constant when `log t = O(omega(t))`.
    pub log_over_omega_ratio_at_top: f64,
}

fn validate_table(log_t: &[f64], omega: &[f64]) -> Result<()> {
    if log_t.len() < 2 || log_t.len() != omega.len() {
        return Err(Error::InvalidInput("tabulated weight needs >= 2 matching samples".into()));
    }
    if log_t.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidInput("tabulated abscissae must increase".into()));
    }
    if omega.iter().any(|v| !(*v >= 0.0)) || omega.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidInput("tabulated values must be nonnegative and nondecreasing".into()));
    }
    let slopes: Vec<f64> = (1..log_t.len()).map(|i| (omega[i] - omega[i - 1]) / (log_t[i] - log_t[i - 1])).collect();
    if slopes.windows(2).any(|w| w[0] > w[1] * (1.0 + 1e-12)) {
        return Err(Error::InvalidInput("tabulated omega(e^x) must be convex".into()));
    }
    Ok(())
}

fn tabulated_phi(log_t: &[f64], omega: &[f64], x: f64) -> f64 {
    let n = log_t.len();
    if x <= log_t[0] {
        return omega[0];
    }
    let i = log_t.partition_point(|&v| v <= x).min(n - 1).max(1);
    let slope = (omega[i] - omega[i - 1]) / (log_t[i] - log_t[i - 1]);
    omega[i - 1] + slope * (x - log_t[i - 1])
}

/// Young conjugate `phi*(y) = sup_{x >= 0} (x y - phi(x))`.
///
/// The objective is concave; the maximizer is bracketed by doubling and then
/// located by golden-section search. A maximizer beyond
/// [`CONJUGATE_SEARCH_BOUND`] is an error, never a clamp.
pub fn young_conjugate(w: &WeightFunction, y: f64) -> Result<f64> {
    young_conjugate_with_arg(w, y).map(|(v, _)| v)
}

/// [`young_conjugate`] together with the maximizing `x`.
pub fn young_conjugate_with_arg(w: &WeightFunction, y: f64) -> Result<(f64, f64)> {
    if !(y >= 0.0) || !y.is_finite() {
        return Err(Error::InvalidInput(format!("Young conjugate needs y >= 0, got {y}")));
    }
    let g = |x: f64| x * y - w.phi(x);
    let mut hi = 1.0;
    while g(2.0 * hi) > g(hi) {
        hi *= 2.0;
        if hi > CONJUGATE_SEARCH_BOUND {
            return Err(Error::BracketFailure { y, bound: CONJUGATE_SEARCH_BOUND });
        }
    }
    let (mut a, mut b) = (0.0_f64, 2.0 * hi);
    let inv_phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut gc, mut gd) = (g(c), g(d));
    for _ in 0..300 {
        if b - a <= 1e-15 * b.max(1.0) {
            break;
        }
        if gc >= gd {
            b = d;
            d = c;
            gd = gc;
            c = b - inv_phi * (b - a);
            gc = g(c);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + inv_phi * (b - a);
            gd = g(d);
        }
    }
    let x = 0.5 * (a + b);
    let candidates = [(g(x), x), (gc, c), (gd, d), (g(0.0), 0.0)];
    let best = candidates.iter().copied().fold((f64::NEG_INFINITY, 0.0), |acc, v| if v.0 > acc.0 { v } else { acc });
    Ok(best)
}

/// `kappa(t) = int_1^inf omega(t u) / u^2 du`.
///
/// Integrated in `v = log u` as `int_0^inf omega(t e^v) e^{-v} dv` over
/// chunks `[0, c], [c, 2c], [2c, 4c], ...` (the upper limit `log U` doubles).
/// Each chunk uses adaptive Simpson; the tail after a chunk is estimated
/// geometrically from the last two chunk ratios and bounded below by
/// `omega(t U)/U` (monotonicity). Integration stops once both are below
/// [`KAPPA_RTOL`] times the partial sum; the geometric estimate is added.
pub fn kappa_transform(w: &WeightFunction, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::InvalidInput(format!("kappa needs t > 0, got {t}")));
    }
    let lt = t.ln();
    let f = |v: f64| w.log_phi_shifted(lt, v).exp();
    let c = std::f64::consts::LN_2;
    let mut partial = 0.0;
    let mut prev = 0.0;
    let (mut lo, mut hi) = (0.0, c);
    for _ in 0..MAX_DOUBLINGS {
        let (chunk, _) = adaptive_simpson(&f, lo, hi, CHUNK_RTOL, 0.0);
        partial += chunk;
        if partial > 0.0 && prev > 0.0 {
            let r = chunk / prev;
            if r < 1.0 {
                let tail_geo = chunk * r / (1.0 - r);
                let tail_low = f(hi);
                if tail_geo.max(tail_low) <= KAPPA_RTOL * partial {
                    return Ok(partial + tail_geo);
                }
            }
        }
        prev = chunk;
        lo = hi;
        hi *= 2.0;
    }
    Err(Error::DivergentTail { t, upper: hi.exp() })
}

/// Grid evaluation of [`kappa_transform`], fanned out over the grid.
pub fn kappa_on_grid(w: &WeightFunction, t_grid: &[f64]) -> Result<Vec<f64>> {
    par::try_map(t_grid, |&t| kappa_transform(w, t))
}

/// Witness attached to a verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Witness {
    /// Fitted constant(s) on the grid.
    Constant { c: f64, t0: Option<f64> },
    /// Ratio samples `(t, ratio)` exhibiting unbounded growth.
    Divergence { samples: Vec<(f64, f64)> },
    /// A pair `(lambda, t)` and the ratio it produced.
    Violation { lambda: f64, t: f64, ratio: f64 },
    /// Verdict follows from another flag.
    Implied { by: String },
    /// Test not run, with a reason.
    Skipped { reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightClassification {
    pub nonquasianalytic: bool,
    pub little_o_of_t: bool,
    pub strong: bool,
    pub concave_equivalent: bool,
    pub nonquasianalytic_witness: Witness,
    pub little_o_witness: Witness,
    pub strong_witness: Witness,
    pub concave_witness: Witness,
}

/// Smallest `C` with `lhs <= C * rhs + C` on all samples: the maximum of
/// `lhs/rhs` where `rhs >= 1` and of `lhs` where `rhs < 1`.
pub fn fit_affine_constant(lhs: &[f64], rhs: &[f64]) -> f64 {
    lhs.iter()
        .zip(rhs)
        .map(|(&l, &r)| if r >= 1.0 { l / r } else { l })
        .fold(0.0, f64::max)
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.len() < 3 || grid[0] <= 0.0 || grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidInput("grid must be positive and strictly increasing".into()));
    }
    if grid[grid.len() - 1] / grid[0] < 1e6 * (1.0 - 1e-12) {
        return Err(Error::InvalidInput("classification grid must span at least 6 decades".into()));
    }
    Ok(())
}

fn tail_samples(grid: &[f64], ratios: &[f64], decades: f64) -> Vec<(f64, f64)> {
    let top = grid[grid.len() - 1];
    grid.iter()
        .zip(ratios)
        .filter(|(t, _)| **t >= top / 10f64.powf(decades) * (1.0 - 1e-12))
        .map(|(t, r)| (*t, *r))
        .collect()
}

/// Classifies a weight on a geometric grid spanning at least six decades.
pub fn classify(w: &WeightFunction, grid: &[f64]) -> Result<WeightClassification> {
    check_grid(grid)?;
    let omega: Vec<f64> = grid.iter().map(|&t| w.eval(t)).collect();

    // Non-quasianalytic iff int_1^inf omega(t)/t^2 dt = kappa(1) < inf.
    let (nonquasianalytic, nonquasianalytic_witness) = match kappa_transform(w, 1.0) {
        Ok(v) => (true, Witness::Constant { c: v, t0: None }),
        Err(Error::DivergentTail { upper, .. }) => {
            (false, Witness::Skipped { reason: format!("integral diverges up to u = {upper:e}") })
        }
        Err(e) => return Err(e),
    };

    let (little_o_of_t, little_o_witness) = little_o(grid, &omega)?;

    let (strong, strong_witness) = if nonquasianalytic {
        let kappa = kappa_on_grid(w, grid)?;
        let c = fit_affine_constant(&kappa, &omega);
        let (ts, ratios): (Vec<f64>, Vec<f64>) = grid
            .iter()
            .zip(kappa.iter().zip(&omega))
            .filter(|(_, (_, o))| **o > 0.0)
            .map(|(t, (k, o))| (*t, k / o))
            .unzip();
        match trend::decade_trend(&ts, &ratios) {
            Trend::Bounded => (true, Witness::Constant { c, t0: None }),
            Trend::Diverging => (false, Witness::Divergence { samples: tail_samples(&ts, &ratios, 2.0) }),
            Trend::Inconclusive => {
                return Err(Error::InconclusiveTrend("kappa/omega ratio at the grid top".into()));
            }
        }
    } else {
        (false, Witness::Skipped { reason: "weight is quasianalytic".into() })
    };

    let (concave_equivalent, concave_witness) = if strong {
        (true, Witness::Implied { by: "strong".into() })
    } else {
        concave_test(w, grid, &omega)?
    };

    Ok(WeightClassification {
        nonquasianalytic,
        little_o_of_t,
        strong,
        concave_equivalent,
        nonquasianalytic_witness,
        little_o_witness,
        strong_witness,
        concave_witness,
    })
}

fn little_o(grid: &[f64], omega: &[f64]) -> Result<(bool, Witness)> {
    let ratios: Vec<f64> = grid.iter().zip(omega).map(|(t, o)| o / t).collect();
    let n = grid.len();
    let top = grid[n - 1];
    let idx = |target: f64| {
        (0..n)
            .min_by(|&a, &b| (grid[a].ln() - target.ln()).abs().total_cmp(&(grid[b].ln() - target.ln()).abs()))
            .unwrap_or(0)
    };
    let (r2, r1, r0) = (ratios[idx(top / 100.0)], ratios[idx(top / 10.0)], ratios[n - 1]);
    let max = ratios.iter().copied().fold(0.0, f64::max);
    let samples = tail_samples(grid, &ratios, 2.0);
    if r2 >= r1 && r1 >= r0 {
        if r0 < LITTLE_O_FRACTION * max {
            Ok((true, Witness::Constant { c: r0, t0: Some(top) }))
        } else {
            Ok((false, Witness::Divergence { samples }))
        }
    } else if r2 <= r1 && r1 <= r0 {
        Ok((false, Witness::Divergence { samples }))
    } else {
        Err(Error::InconclusiveTrend("omega(t)/t is not monotone at the grid top".into()))
    }
}

fn concave_test(w: &WeightFunction, grid: &[f64], omega: &[f64]) -> Result<(bool, Witness)> {
    let Some(start) = omega.iter().position(|&o| o >= 1.0) else {
        return Err(Error::InconclusiveTrend("omega stays below 1 on the grid".into()));
    };
    let t0 = grid[start];
    let ts = &grid[start..];
    let per_t: Vec<(f64, f64)> = par::map(ts, |&t| {
        let base = w.eval(t);
        LAMBDAS
            .iter()
            .map(|&l| (w.eval(l * t) / (l * base), l))
            .fold((f64::NEG_INFINITY, 1.0), |acc, v| if v.0 > acc.0 { v } else { acc })
    });
    let cs: Vec<f64> = per_t.iter().map(|p| p.0).collect();
    let (imax, &(c, lambda)) = per_t
        .iter()
        .enumerate()
        .max_by(|a, b| a.1 .0.total_cmp(&b.1 .0))
        .expect("non-empty grid tail");
    let tr = if ts.len() >= 3 && ts[ts.len() - 1] / ts[0] >= 100.0 {
        trend::decade_trend(ts, &cs)
    } else {
        trend::index_trend(&cs)
    };
    match tr {
        Trend::Bounded => Ok((true, Witness::Constant { c, t0: Some(t0) })),
        Trend::Diverging => Ok((false, Witness::Violation { lambda, t: ts[imax], ratio: c })),
        Trend::Inconclusive => Err(Error::InconclusiveTrend("omega(lambda t)/(lambda omega(t)) at the grid top".into())),
    }
}

/// Result of an equivalence test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Equivalence {
    pub equivalent: bool,
    pub witness: Witness,
}

/// Tests `w1 = O(w2)` and `w2 = O(w1)` on the grid.
pub fn equivalent(w1: &WeightFunction, w2: &WeightFunction, grid: &[f64]) -> Result<Equivalence> {
    let a: Vec<f64> = grid.iter().map(|&t| w1.eval(t)).collect();
    let b: Vec<f64> = grid.iter().map(|&t| w2.eval(t)).collect();
    equivalent_samples(grid, &a, &b)
}

/// [`equivalent`] on precomputed samples, e.g. `omega` against `kappa`.
pub fn equivalent_samples(grid: &[f64], a: &[f64], b: &[f64]) -> Result<Equivalence> {
    let c = fit_affine_constant(a, b).max(fit_affine_constant(b, a));
    let mut ts = Vec::new();
    let mut ab = Vec::new();
    let mut ba = Vec::new();
    for i in 0..grid.len() {
        if a[i] > 0.0 && b[i] > 0.0 {
            ts.push(grid[i]);
            ab.push(a[i] / b[i]);
            ba.push(b[i] / a[i]);
        }
    }
    if ts.len() < 3 {
        return Err(Error::InconclusiveTrend("too few positive samples".into()));
    }
    let t1 = trend::decade_trend(&ts, &ab);
    let t2 = trend::decade_trend(&ts, &ba);
    match (t1, t2) {
        (Trend::Bounded, Trend::Bounded) => Ok(Equivalence { equivalent: true, witness: Witness::Constant { c, t0: None } }),
        (Trend::Diverging, _) => Ok(Equivalence {
            equivalent: false,
            witness: Witness::Divergence { samples: tail_samples(&ts, &ab, 2.0) },
        }),
        (_, Trend::Diverging) => Ok(Equivalence {
            equivalent: false,
            witness: Witness::Divergence { samples: tail_samples(&ts, &ba, 2.0) },
        }),
        _ => Err(Error::InconclusiveTrend("ratio trend at the grid top".into())),
    }
}

/// JSON weight definition: `{family, parameters, normalization}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightDefinition {
    pub family: FamilyName,
    #[serde(default)]
    pub parameters: FamilyParameters,
    #[serde(default)]
    pub normalization: Normalization,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyName {
    Power,
    Linear,
    LogSquaredRatio,
    LogPower,
    Tabulated,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyParameters {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<Vec<f64>>,
}

impl WeightDefinition {
    pub fn build(&self) -> Result<WeightFunction> {
        let p = &self.parameters;
        let need = |v: Option<f64>, name: &str| {
            v.ok_or_else(|| Error::InvalidInput(format!("family {:?} needs parameter `{name}`", self.family)))
        };
        match self.family {
            FamilyName::Power => WeightFunction::new(Family::Power { a: need(p.a, "a")? }, self.normalization),
            FamilyName::Linear => WeightFunction::new(Family::Linear, self.normalization),
            FamilyName::LogSquaredRatio => WeightFunction::new(Family::LogSquaredRatio, self.normalization),
            FamilyName::LogPower => WeightFunction::new(Family::LogPower { s: need(p.s, "s")? }, self.normalization),
            FamilyName::Tabulated => {
                let (Some(t), Some(o)) = (&p.t, &p.omega) else {
                    return Err(Error::InvalidInput("tabulated family needs `t` and `omega`".into()));
                };
                WeightFunction::tabulated(t, o, self.normalization)
            }
        }
    }
}
