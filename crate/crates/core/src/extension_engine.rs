//! Extension of a certified ultrajet on `E` to a function on the line:
//! `f = sum_i phi_i T_{x^_i}^{p(x_i)} F` off `E`, `f = F^0` on `E`, where
//! `x^_i` is a nearest point of `E` to the center of `Q_i` and the local
//! degree is `p(x) = max(2 Gamma_{sbar^{2 xi}}(L d(x)) - 1, 0)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix_calculus::{
    associated_matrix, interleave_matrix, sandwich_h, strong_regularization, MatrixRow, SandwichH, WeightMatrix,
};
use crate::par;
use crate::partition_of_unity::{build_bump, build_partition, factorial, BumpSpec, Partition, PiecewisePolynomial};
use crate::seq_calculus::{gamma_of_m, h_of_m_truncated, WeightSequence, DEFAULT_K};
use crate::trend::{self, Trend};
use crate::ultrajets::{taylor_poly, JetCertificate, TaylorPolynomial, UltraJet};
use crate::weight_functions::{kappa_on_grid, WeightFunction};
use crate::whitney_geometry::{CompactSet1D, CoverOptions, WhitneyCover};

/// Finest dyadic generation of the cover used by the engine.
pub const DEFAULT_MAX_GENERATION: i32 = 48;
/// Default cap on the fold count `p` of the partition.
pub const DEFAULT_P_FOLD_CAP: usize = 8;

/// The rows of the weight matrices the construction draws on.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtensionRows {
    pub xi: f64,
    /// `sigma = c omega`, with `c >= sup kappa/omega` on the fit grid.
    pub sigma_scale: f64,
    /// Divided `sbar^{2 xi}`.
    pub s2: WeightSequence,
    /// Divided `sbar^{4 xi}`.
    pub s4: WeightSequence,
    /// Interleaved matrix; row `xi` carries `v^xi` and `V^xi`.
    pub v: WeightMatrix,
    /// `W^{2 xi}` of `omega` (big).
    pub w: WeightSequence,
    /// `sbar^{2 xi}_k <= H^k v^{2 xi}_k`.
    pub h: SandwichH,
}

impl ExtensionRows {
    /// Builds the rows for `omega`, taking `sigma = c omega` with
    /// `c = max(1, max kappa/omega)` on `kappa_grid`; a ratio that still
    /// grows on the grid means `omega` is not strong and is rejected.
    pub fn from_weight(omega: &WeightFunction, xi: f64, k_max: usize, kappa_grid: &[f64]) -> Result<Self> {
        if !(xi > 0.0) {
            return Err(Error::InvalidInput(format!("xi must be positive, got {xi}")));
        }
        let kappa = kappa_on_grid(omega, kappa_grid)?;
        let ratios: Vec<f64> = kappa_grid.iter().zip(&kappa).map(|(&t, k)| k / omega.eval(t)).collect();
        if trend::decade_trend(kappa_grid, &trend::running_max(&ratios)) == Trend::Diverging {
            return Err(Error::PlanInvalid("kappa/omega keeps growing: omega is not strong".into()));
        }
        let c = ratios.iter().copied().fold(1.0_f64, f64::max);
        // The associated matrix of c omega at xi is that of omega at xi / c.
        let labels = [xi, 2.0 * xi, 4.0 * xi];
        let base = associated_matrix(omega, &labels.map(|x| x / c), k_max)?;
        let rows = labels
            .iter()
            .zip(base.rows())
            .map(|(&x, r)| MatrixRow::from_big(x, r.big.clone()))
            .collect::<Result<Vec<_>>>()?;
        let s = WeightMatrix::new(rows)?;
        let sbar = strong_regularization(&s)?.matrix;
        let v = interleave_matrix(&sbar)?;
        let h = sandwich_h(&sbar, &v, 2.0 * xi, k_max)?;
        let w = associated_matrix(omega, &[2.0 * xi], k_max)?.rows()[0].big.clone();
        let s2 = sbar.row(2.0 * xi).ok_or(Error::MissingRow(2.0 * xi))?.divided.clone();
        let s4 = sbar.row(4.0 * xi).ok_or(Error::MissingRow(4.0 * xi))?.divided.clone();
        Ok(Self { xi, sigma_scale: c, s2, s4, v, w, h })
    }

    pub fn v_row(&self) -> &MatrixRow {
        self.v.row(self.xi).expect("interleaved row at xi")
    }
}

/// Multiples of `rho` that `L` must exceed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self { c0: 4.0, c1: 12.0, c2: 8.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanOptions {
    pub l: f64,
    pub r_cov: f64,
    pub max_generation: i32,
    /// Fold count override; otherwise `min(ceil(K_1 L), p_fold_cap)`.
    pub p_fold: Option<usize>,
    pub p_fold_cap: usize,
    pub thresholds: Thresholds,
    /// Multiply by a bump supported in `{d < d_max}`.
    pub cutoff: bool,
}

impl PlanOptions {
    pub fn new(l: f64) -> Self {
        Self {
            l,
            r_cov: 1.0,
            max_generation: DEFAULT_MAX_GENERATION,
            p_fold: None,
            p_fold_cap: DEFAULT_P_FOLD_CAP,
            thresholds: Thresholds::default(),
            cutoff: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtensionPlan {
    pub l: f64,
    pub xi: f64,
    pub c: f64,
    pub rho: f64,
    pub h: f64,
    /// `K_1 = 27 A_2 B H / b_1`.
    pub k_1: f64,
    /// `K_3 = 3 H`.
    pub k_3: f64,
    pub p_nominal: f64,
    pub p_fold: usize,
    /// Set when `p_fold` is below `K_1 L`.
    pub p_capped: bool,
    /// `L` has to exceed this.
    pub l_threshold: f64,
    pub valid: bool,
    pub r_cov: f64,
    /// `min(r_cov / 3, 1 / (3 L sbar^{2 xi}_1))`.
    pub d_max: f64,
    pub max_generation: i32,
    pub cutoff: bool,
}

pub fn plan(rows: &ExtensionRows, cert: &JetCertificate, opts: &PlanOptions) -> Result<ExtensionPlan> {
    let p = plan_unchecked(rows, cert, opts)?;
    if !p.valid {
        return Err(Error::PlanInvalid(format!(
            "L = {} must exceed max(C_0, C_1, C_2) rho = {}",
            p.l, p.l_threshold
        )));
    }
    Ok(p)
}

/// [`plan`] without the threshold check on `L`; `valid` records it.
pub fn plan_unchecked(rows: &ExtensionRows, cert: &JetCertificate, opts: &PlanOptions) -> Result<ExtensionPlan> {
    if !(opts.l > 0.0 && opts.l.is_finite()) {
        return Err(Error::InvalidInput(format!("L must be positive, got {}", opts.l)));
    }
    if cert.xi != rows.xi {
        return Err(Error::PlanInvalid(format!("certificate row {} differs from plan row {}", cert.xi, rows.xi)));
    }
    let t = opts.thresholds;
    let l_threshold = t.c0.max(t.c1).max(t.c2) * cert.rho;
    let h = rows.h.h;
    let b = 1.0;
    let (a_2, b_1) = (32.0, 0.25);
    let k_1 = 27.0 * a_2 * b * h / b_1;
    let p_nominal = k_1 * opts.l;
    let p_fold = opts.p_fold.unwrap_or_else(|| (p_nominal.ceil() as usize).clamp(1, opts.p_fold_cap.max(1)));
    let d_max = (opts.r_cov / 3.0).min(1.0 / (3.0 * opts.l * rows.s2.value(1)));
    Ok(ExtensionPlan {
        l: opts.l,
        xi: rows.xi,
        c: cert.c,
        rho: cert.rho,
        h,
        k_1,
        k_3: 3.0 * h,
        p_nominal,
        p_fold,
        p_capped: (p_fold as f64) < p_nominal,
        l_threshold,
        valid: opts.l > l_threshold,
        r_cov: opts.r_cov,
        d_max,
        max_generation: opts.max_generation,
        cutoff: opts.cutoff,
    })
}

/// Base point and degree of the Taylor polynomial attached to `Q_i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalPiece {
    pub center: f64,
    pub d: f64,
    pub base: f64,
    pub degree: usize,
    /// Degree clipped at the jet order (or `Gamma` beyond the stored rows).
    pub capped: bool,
}

#[derive(Debug, Clone)]
pub struct ExtensionFunction {
    jet: UltraJet,
    rows: ExtensionRows,
    plan: ExtensionPlan,
    partition: Partition,
    pieces: Vec<LocalPiece>,
    cutoff: Vec<PiecewisePolynomial>,
}

pub fn assemble(jet: &UltraJet, cert: &JetCertificate, rows: &ExtensionRows, opts: &PlanOptions) -> Result<ExtensionFunction> {
    build(jet, rows, plan(rows, cert, opts)?)
}

/// Assembles even when `L` is below the threshold (negative controls).
pub fn assemble_unchecked(
    jet: &UltraJet,
    cert: &JetCertificate,
    rows: &ExtensionRows,
    opts: &PlanOptions,
) -> Result<ExtensionFunction> {
    build(jet, rows, plan_unchecked(rows, cert, opts)?)
}

/// `p(x) = max(2 Gamma_{sbar}(L d(x)) - 1, 0)` for `d = d(x) > 0`.
pub fn local_degree(sbar: &WeightSequence, l: f64, d: f64) -> Result<usize> {
    Ok((2 * gamma_of_m(sbar, l * d)?).saturating_sub(1))
}

fn local_degree_for(s2: &WeightSequence, l: f64, alpha_max: usize, d: f64) -> (usize, bool) {
    if d <= 0.0 {
        return (alpha_max, true);
    }
    match local_degree(s2, l, d) {
        Ok(p) if p <= alpha_max => (p, false),
        _ => (alpha_max, true),
    }
}

fn build(jet: &UltraJet, rows: &ExtensionRows, plan: ExtensionPlan) -> Result<ExtensionFunction> {
    let set = jet.set();
    let cover = WhitneyCover::build_with(
        set,
        plan.r_cov,
        CoverOptions { max_generation: plan.max_generation, ..CoverOptions::default() },
    )?;
    let partition = build_partition(&cover, plan.p_fold)?;
    let pieces = cover
        .intervals()
        .iter()
        .map(|q| {
            let (d, base) = set.distance_and_nearest(q.center);
            let (degree, capped) = local_degree_for(&rows.s2, plan.l, jet.alpha_max(), d);
            LocalPiece { center: q.center, d, base, degree, capped }
        })
        .collect::<Vec<_>>();
    for p in &pieces {
        jet.values_at(p.base)?;
    }
    let cutoff = if plan.cutoff { cutoff_bumps(set, plan.d_max, plan.p_fold)? } else { Vec::new() };
    Ok(ExtensionFunction { jet: jet.clone(), rows: rows.clone(), plan, partition, pieces, cutoff })
}

/// One bump per group of components closer than `2 d_max`, equal to 1 on
/// the group hull widened by `d_max/4`, vanishing beyond `3 d_max / 4`.
fn cutoff_bumps(set: &CompactSet1D, d_max: f64, p: usize) -> Result<Vec<PiecewisePolynomial>> {
    let mut groups: Vec<(f64, f64)> = Vec::new();
    for &(a, b) in set.components() {
        match groups.last_mut() {
            Some(g) if a - g.1 < 2.0 * d_max => g.1 = b,
            _ => groups.push((a, b)),
        }
    }
    groups
        .into_iter()
        .map(|(a, b)| {
            build_bump(&BumpSpec { core: (a - 0.25 * d_max, b + 0.25 * d_max), margin: 0.5 * d_max, p })
        })
        .collect()
}

fn binomial(n: usize, k: usize) -> f64 {
    factorial(n) / (factorial(k) * factorial(n - k))
}

/// `d^beta (T_i - T) (x)` for `beta <= order`, where both are Taylor
/// polynomials of the same jet. With a common base only the differing
/// coefficients are summed, so nothing cancels.
pub fn taylor_difference(ti: &TaylorPolynomial, t: &TaylorPolynomial, x: f64, order: usize) -> Vec<f64> {
    if ti.base == t.base {
        let (lo, hi, sign) =
            if ti.degree() >= t.degree() { (t, ti, 1.0) } else { (ti, t, -1.0) };
        let mut derivatives = hi.derivatives.clone();
        for c in derivatives.iter_mut().take(lo.degree() + 1) {
            *c = 0.0;
        }
        let diff = TaylorPolynomial { base: hi.base, derivatives };
        return (0..=order).map(|b| sign * diff.eval_derivative(x, b)).collect();
    }
    (0..=order).map(|b| ti.eval_derivative(x, b) - t.eval_derivative(x, b)).collect()
}

/// Lowest power of `(y - a)` present in `T_a^{p_i} F - T_a^{p} F`: `min + 1`
/// when the degrees differ and that coefficient is nonzero.
pub fn difference_valuation(jet: &UltraJet, a: f64, p_i: usize, p: usize) -> Result<Option<usize>> {
    let (lo, hi) = (p_i.min(p), p_i.max(p));
    let v = jet.values_at(a)?;
    Ok((lo + 1..=hi).find(|&j| v[j] != 0.0))
}

/// Terms of one evaluation, kept for the bound checks.
struct Evaluation {
    d: f64,
    base: f64,
    degree: usize,
    /// `T_{x^}^{p(x)}` derivatives at `x`.
    taylor: Vec<f64>,
    /// `(i, d^beta (T_i - T_{x^})(x))` for `x` in `Q_i*`.
    differences: Vec<(usize, Vec<f64>)>,
    /// `f^{(alpha)}(x)`.
    value: Vec<f64>,
}

impl ExtensionFunction {
    pub fn plan(&self) -> &ExtensionPlan {
        &self.plan
    }

    pub fn rows(&self) -> &ExtensionRows {
        &self.rows
    }

    pub fn jet(&self) -> &UltraJet {
        &self.jet
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn pieces(&self) -> &[LocalPiece] {
        &self.pieces
    }

    /// `p(x)` from `d(x)`, clipped at the jet order.
    pub fn local_degree(&self, d: f64) -> (usize, bool) {
        local_degree_for(&self.rows.s2, self.plan.l, self.jet.alpha_max(), d)
    }

    /// Whether `x` is off `E` with `d_floor <= d(x) < d_max`.
    pub fn in_region(&self, x: f64) -> bool {
        let d = self.jet.set().distance(x);
        d >= self.partition.cover().d_floor() && d < self.plan.d_max
    }

    fn check_order(&self, alpha: usize) -> Result<()> {
        if alpha > self.plan.p_fold {
            return Err(Error::OrderOverflow { order: alpha, alpha_max: self.plan.p_fold });
        }
        Ok(())
    }

    fn evaluate(&self, x: f64, alpha: usize) -> Result<Evaluation> {
        let set = self.jet.set();
        let (d, base) = set.distance_and_nearest(x);
        let floor = self.partition.cover().d_floor();
        if d < floor || d >= self.plan.d_max {
            return Err(Error::OutsideRegion { x, d, d_max: self.plan.d_max });
        }
        let (degree, _) = self.local_degree(d);
        let t = taylor_poly(&self.jet, base, degree)?;
        let taylor: Vec<f64> = (0..=alpha).map(|b| t.eval_derivative(x, b)).collect();
        let jets = self.partition.phi_jets(x, alpha)?;
        let mut value = taylor.clone();
        let mut differences = Vec::with_capacity(jets.len());
        for (i, phi) in jets {
            let piece = &self.pieces[i];
            let ti = taylor_poly(&self.jet, piece.base, piece.degree)?;
            let diff = taylor_difference(&ti, &t, x, alpha);
            let dphi = phi.derivatives();
            for (g, v) in value.iter_mut().enumerate() {
                *v += (0..=g).map(|b| binomial(g, b) * dphi[g - b] * diff[b]).sum::<f64>();
            }
            differences.push((i, diff));
        }
        Ok(Evaluation { d, base, degree, taylor, differences, value })
    }

    /// `f^{(0)}(x), ..., f^{(alpha)}(x)`.
    pub fn eval_derivatives(&self, x: f64, alpha: usize) -> Result<Vec<f64>> {
        self.check_order(alpha)?;
        if self.jet.set().contains(x) {
            if alpha > self.jet.alpha_max() {
                return Err(Error::OrderOverflow { order: alpha, alpha_max: self.jet.alpha_max() });
            }
            return Ok(self.jet.values_at(x)?[..=alpha].to_vec());
        }
        Ok(self.evaluate(x, alpha)?.value)
    }

    pub fn eval_derivative(&self, x: f64, alpha: usize) -> Result<f64> {
        Ok(self.eval_derivatives(x, alpha)?[alpha])
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        self.eval_derivative(x, 0)
    }

    /// Derivatives of `chi f` with the cut-off `chi`; zero where `chi`
    /// vanishes. Requires the plan to carry a cut-off.
    pub fn eval_cut(&self, x: f64, alpha: usize) -> Result<Vec<f64>> {
        if self.cutoff.is_empty() {
            return Err(Error::InvalidInput("extension was assembled without a cut-off".into()));
        }
        self.check_order(alpha)?;
        let Some(bump) = self.cutoff.iter().find(|b| {
            let (lo, hi) = b.support();
            lo < x && x < hi
        }) else {
            return Ok(vec![0.0; alpha + 1]);
        };
        let f = self.eval_derivatives(x, alpha)?;
        let chi: Vec<f64> = (0..=alpha).map(|k| bump.eval_derivative(x, k)).collect();
        Ok((0..=alpha).map(|g| (0..=g).map(|b| binomial(g, b) * chi[g - b] * f[b]).sum()).collect())
    }
}

/// Points `e +- 2^{-j}` off `E` for every component endpoint `e`, from the
/// first `j` with `2^{-j} < d_max` up to `j_max`.
pub fn dyadic_samples(f: &ExtensionFunction, j_max: u32) -> Vec<f64> {
    let set = f.jet.set();
    let j0 = (-f.plan.d_max.log2()).floor().max(0.0) as u32 + 1;
    let mut out = Vec::new();
    for e in set.endpoints() {
        for j in j0..=j_max {
            let h = (-(j as f64)).exp2();
            for x in [e + h, e - h] {
                if x != e && !set.contains(x) && f.in_region(x) {
                    out.push(x);
                }
            }
        }
    }
    out.sort_by(f64::total_cmp);
    out.dedup();
    out
}

/// `n` seeded points in the region, at log-uniform distances from random
/// endpoints.
pub fn random_samples(f: &ExtensionFunction, n: usize, seed: u64) -> Vec<f64> {
    let set = f.jet.set();
    let ends = set.endpoints();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lo = f.partition.cover().d_floor().max(1e-12).ln();
    let hi = f.plan.d_max.ln();
    let mut out = Vec::with_capacity(n);
    let mut tries = 0;
    while out.len() < n && tries < 100 * n {
        tries += 1;
        let e = ends[rng.gen_range(0..ends.len())];
        let dist = rng.gen_range(lo..hi).exp();
        let x = if rng.gen_bool(0.5) { e + dist } else { e - dist };
        if !set.contains(x) && f.in_region(x) {
            out.push(x);
        }
    }
    out
}

/// One bound with a prescribed constant: the ratio left/right side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaCheck {
    pub name: String,
    pub max_ratio: f64,
    /// Over the order, from the per-order maxima.
    pub trend_alpha: Trend,
    /// As `d -> 0`, from the per-sample maxima.
    pub trend_d: Trend,
    pub samples: usize,
    /// Samples whose `h` sat on the truncation cutoff.
    pub skipped_truncated: usize,
    pub passed: bool,
}

/// One bound with a fitted geometric constant `M^{alpha+1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedCheck {
    pub name: String,
    pub m: f64,
    pub trend_d: Trend,
    pub samples: usize,
    pub skipped_truncated: usize,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub alpha_max: usize,
    pub lemmas: Vec<LemmaCheck>,
    pub fitted: Vec<FittedCheck>,
    pub passed: bool,
}

#[derive(Default, Clone)]
struct Acc {
    per_alpha: Vec<f64>,
    per_sample: Vec<(f64, f64)>,
    truncated: usize,
}

impl Acc {
    fn new(n: usize) -> Self {
        Self { per_alpha: vec![0.0; n + 1], ..Self::default() }
    }

    fn merge_sample(&mut self, d: f64, ratios: &[(usize, f64)], truncated: bool) {
        if truncated {
            self.truncated += 1;
            return;
        }
        let mut m = 0.0_f64;
        for &(a, r) in ratios {
            self.per_alpha[a] = self.per_alpha[a].max(r);
            m = m.max(r);
        }
        self.per_sample.push((d, m));
    }

    fn trend_d(&self) -> Trend {
        let mut s = self.per_sample.clone();
        s.sort_by(|a, b| b.0.total_cmp(&a.0));
        let v: Vec<f64> = s.iter().map(|x| x.1).collect();
        trend::index_trend(&trend::running_max(&v))
    }

    fn lemma(&self, name: &str) -> LemmaCheck {
        let max_ratio = self.per_alpha.iter().copied().fold(0.0, f64::max);
        let trend_alpha = trend::index_trend(&trend::running_max(&self.per_alpha));
        let trend_d = self.trend_d();
        LemmaCheck {
            name: name.into(),
            max_ratio,
            trend_alpha,
            trend_d,
            samples: self.per_sample.len(),
            skipped_truncated: self.truncated,
            passed: max_ratio.is_finite() && trend_alpha != Trend::Diverging && trend_d != Trend::Diverging,
        }
    }

    fn fitted(&self, name: &str) -> FittedCheck {
        let m = self.per_sample.iter().map(|x| x.1).fold(0.0, f64::max);
        let trend_d = self.trend_d();
        FittedCheck {
            name: name.into(),
            m,
            trend_d,
            samples: self.per_sample.len(),
            skipped_truncated: self.truncated,
            passed: m.is_finite() && trend_d != Trend::Diverging,
        }
    }
}

const CHECKS: usize = 6;

/// Checks the Taylor, telescoping and derivative bounds of the
/// construction on the samples for orders `alpha <= alpha_max`.
pub fn verify_bounds(f: &ExtensionFunction, samples: &[f64], alpha_max: usize) -> Result<BoundReport> {
    f.check_order(alpha_max)?;
    let n = alpha_max;
    let pl = &f.plan;
    let (c, l) = (pl.c, pl.l);
    let row = f.rows.v_row();
    let big_v = &row.big;
    let small_v = &row.divided;
    let s2 = &f.rows.s2;
    let s4 = &f.rows.s4;
    let w = &f.rows.w;
    let log_fact: Vec<f64> = (0..=n + 1).map(|k| factorial(k).ln()).collect();
    let pts: Vec<f64> = samples.iter().copied().filter(|&x| f.in_region(x)).collect();
    let per = par::try_map(&pts, |&x| -> Result<Vec<Acc>> {
        let ev = f.evaluate(x, n)?;
        let d = ev.d;
        let mut acc = vec![Acc::new(n); CHECKS];
        // (15) |T^(a)(x)| <= C (2L)^{a+1} V_a
        let r15: Vec<(usize, f64)> = (0..=n)
            .map(|a| (a, ev.taylor[a].abs() / (c * ((a + 1) as f64 * (2.0 * l).ln() + big_v.log_value(a)).exp())))
            .collect();
        acc[0].merge_sample(d, &r15, false);
        // (16) for a < p(x): |T^(a)(x) - F^a(x^)| <= C (2L)^{a+1} a! v_{a+1} d
        let fx = f.jet.values_at(ev.base)?;
        let r16: Vec<(usize, f64)> = (0..=n.min(ev.degree.saturating_sub(1)))
            .filter(|&a| a < ev.degree)
            .map(|a| {
                let rhs = ((a + 1) as f64 * (2.0 * l).ln() + log_fact[a] + small_v.log_value(a + 1)).exp() * c * d;
                (a, (ev.taylor[a] - fx[a]).abs() / rhs)
            })
            .collect();
        acc[1].merge_sample(d, &r16, false);
        // (17) and (18), big sbar_beta = beta! sbar_beta
        let h18 = h_of_m_truncated(s2, 3.0 * l * d);
        for (i, diff) in &ev.differences {
            let di = f.pieces[*i].d;
            let h17 = h_of_m_truncated(s2, l * di);
            let r17: Vec<(usize, f64)> = (0..=n)
                .map(|b| {
                    let rhs = c * ((b + 1) as f64 * l.ln() + log_fact[b] + s2.log_value(b)).exp() * h17.value;
                    (b, diff[b].abs() / rhs)
                })
                .collect();
            acc[2].merge_sample(d, &r17, h17.at_cutoff);
            let r18: Vec<(usize, f64)> = (0..=n)
                .map(|b| {
                    let rhs =
                        c * ((b + 1) as f64 * (3.0 * l).ln() + log_fact[b] + s2.log_value(b)).exp() * h18.value;
                    (b, diff[b].abs() / rhs)
                })
                .collect();
            acc[3].merge_sample(d, &r18, h18.at_cutoff);
        }
        // (20) |d^a (f - T)(x)| <= C M_1^{a+1} W_a h_{sbar^{4 xi}}(K_3 L d), M_1 fitted
        let h20 = h_of_m_truncated(s4, pl.k_3 * l * d);
        let m20: Vec<(usize, f64)> = (0..=n)
            .map(|a| {
                let lhs = (ev.value[a] - ev.taylor[a]).abs();
                let r = lhs / (c * w.value(a) * h20.value);
                (a, r.powf(1.0 / (a + 1) as f64))
            })
            .collect();
        acc[4].merge_sample(d, &m20, h20.at_cutoff);
        // (25) |f^(a)(x)| <= C M^{a+1} W_a, M fitted
        let m25: Vec<(usize, f64)> = (0..=n)
            .map(|a| (a, (ev.value[a].abs() / (c * w.value(a))).powf(1.0 / (a + 1) as f64)))
            .collect();
        acc[5].merge_sample(d, &m25, false);
        Ok(acc)
    })?;
    let mut total = vec![Acc::new(n); CHECKS];
    for accs in per {
        for (t, a) in total.iter_mut().zip(accs) {
            for (k, v) in a.per_alpha.iter().enumerate() {
                t.per_alpha[k] = t.per_alpha[k].max(*v);
            }
            t.per_sample.extend(a.per_sample);
            t.truncated += a.truncated;
        }
    }
    let lemmas = vec![
        total[0].lemma("taylor_growth_15"),
        total[1].lemma("taylor_increment_16"),
        total[2].lemma("telescoping_17"),
        total[3].lemma("telescoping_18"),
    ];
    let fitted = vec![total[4].fitted("remainder_20"), total[5].fitted("derivatives_25")];
    let passed = lemmas.iter().all(|l| l.passed) && fitted.iter().all(|l| l.passed);
    Ok(BoundReport { alpha_max: n, lemmas, fitted, passed })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitRow {
    pub alpha: usize,
    /// `(j, d, e_j)` with `e_j = |f^(alpha)(x_j) - F^alpha(a)|`.
    pub errors: Vec<(u32, f64, f64)>,
    /// `e_{j+1} <= e_j` throughout.
    pub monotone: bool,
    /// `max e_j / (d_j + h_{sbar^{4 xi}}(K_3 L d_j))`, with the truncated
    /// `h` replaced by its sound lower bound 0.
    pub fitted: f64,
    pub fitted_trend: Trend,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitReport {
    pub a: f64,
    /// `+1` or `-1`: side of `a` the points approach from.
    pub direction: f64,
    pub rows: Vec<LimitRow>,
    /// First `j` where `x_j` left the representable region, if any.
    pub precision_floor: Option<u32>,
}

/// Approaches the base point `a` along `x_j = a +- 2^{-j}` (the side off
/// `E`) and records `|f^(alpha)(x_j) - F^alpha(a)|`.
pub fn boundary_limits(f: &ExtensionFunction, a: f64, alpha_max: usize, j_max: u32) -> Result<LimitReport> {
    f.check_order(alpha_max)?;
    let set = f.jet.set();
    let fa = f.jet.values_at(a)?.to_vec();
    if fa.len() <= alpha_max {
        return Err(Error::OrderOverflow { order: alpha_max, alpha_max: fa.len() - 1 });
    }
    let probe = (-(j_max as f64)).exp2();
    let direction = if !set.contains(a + probe) {
        1.0
    } else if !set.contains(a - probe) {
        -1.0
    } else {
        return Err(Error::InvalidInput(format!("{a} is interior to E")));
    };
    let j0 = (-f.plan.d_max.log2()).floor().max(0.0) as u32 + 1;
    let mut precision_floor = None;
    let mut js = Vec::new();
    for j in j0..=j_max {
        let x = a + direction * (-(j as f64)).exp2();
        if x == a || !f.in_region(x) || set.distance(x) != (x - a).abs() {
            precision_floor = Some(j);
            break;
        }
        js.push((j, x));
    }
    let vals = par::try_map(&js, |&(_, x)| f.eval_derivatives(x, alpha_max))?;
    let pl = &f.plan;
    let rows = (0..=alpha_max)
        .map(|alpha| {
            let errors: Vec<(u32, f64, f64)> = js
                .iter()
                .zip(&vals)
                .map(|(&(j, x), v)| (j, (x - a).abs(), (v[alpha] - fa[alpha]).abs()))
                .collect();
            let monotone = errors.windows(2).all(|w| w[1].2 <= w[0].2);
            let ratios: Vec<f64> = errors
                .iter()
                .map(|&(_, d, e)| e / (d + h_of_m_truncated(&f.rows.s4, pl.k_3 * pl.l * d).lower()))
                .collect();
            let run = trend::running_max(&ratios);
            LimitRow {
                alpha,
                fitted: run.last().copied().unwrap_or(0.0),
                fitted_trend: trend::index_trend(&run),
                errors,
                monotone,
            }
        })
        .collect();
    Ok(LimitReport { a, direction, rows, precision_floor })
}

/// The jet `F^k(0) = V^xi_k` on `E = {0}`.
pub fn gevrey_jet(rows: &ExtensionRows, alpha_max: usize) -> Result<UltraJet> {
    let v = &rows.v_row().big;
    UltraJet::from_fn(CompactSet1D::point(0.0)?, &[0.0], alpha_max, |_, k| v.value(k))
}

/// `kappa` fit grid used by default: 64 geometric points on `[e, 1e6]`.
pub fn default_kappa_grid() -> Vec<f64> {
    trend::geometric_grid(std::f64::consts::E, 1e6, 64)
}

/// Convenience: rows from `omega` at `xi` with the default `K` and grid.
pub fn rows_for(omega: &WeightFunction, xi: f64) -> Result<ExtensionRows> {
    ExtensionRows::from_weight(omega, xi, DEFAULT_K, &default_kappa_grid())
}
