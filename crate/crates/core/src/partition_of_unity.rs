//! Exact piecewise-polynomial bumps from repeated box convolution and the
//! normalized partition of unity subordinate to a Whitney cover.
//!
//! Everything here is symbolic per piece: derivatives and antiderivatives
//! act on coefficient lists and sup norms come from root isolation of the
//! derivative. Nothing is finite-differenced.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;
use crate::seq_calculus::{h_of_m_truncated, WeightSequence};
use crate::trend::{self, Trend};
use crate::whitney_geometry::{ExtensionConstants, WhitneyCover};

/// Margin of the reference bump, relative to the interval side. With the
/// core `[-1/2, 1/2]` the support is `[-9/16, 9/16]`, i.e. exactly `Q*`.
pub const REFERENCE_MARGIN: f64 = 1.0 / 16.0;

/// `sum_j c_j s^j` by Horner's rule.
pub fn poly_eval(c: &[f64], s: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &v| acc * s + v)
}

pub fn poly_derivative(c: &[f64]) -> Vec<f64> {
    c.iter().enumerate().skip(1).map(|(j, &v)| j as f64 * v).collect()
}

/// Antiderivative vanishing at 0.
pub fn poly_antiderivative(c: &[f64]) -> Vec<f64> {
    std::iter::once(0.0).chain(c.iter().enumerate().map(|(j, &v)| v / (j + 1) as f64)).collect()
}

/// Taylor coefficients of `c` re-expanded about `s0`.
pub fn poly_shift(c: &[f64], s0: f64) -> Vec<f64> {
    let mut out = c.to_vec();
    let n = out.len();
    for i in 0..n {
        for j in (i..n.saturating_sub(1)).rev() {
            out[j] += s0 * out[j + 1];
        }
    }
    out
}

fn trim(c: &[f64]) -> &[f64] {
    let mut n = c.len();
    while n > 0 && c[n - 1] == 0.0 {
        n -= 1;
    }
    &c[..n]
}

/// Real roots of `c` in `[a, b]`, isolated between consecutive critical
/// points (found recursively) and refined by bisection.
pub fn poly_roots(c: &[f64], a: f64, b: f64) -> Vec<f64> {
    let c = trim(c);
    match c.len() {
        0 | 1 => Vec::new(),
        2 => {
            let r = -c[0] / c[1];
            if a <= r && r <= b {
                vec![r]
            } else {
                Vec::new()
            }
        }
        _ => {
            let crit = poly_roots(&poly_derivative(c), a, b);
            let mut knots = Vec::with_capacity(crit.len() + 2);
            knots.push(a);
            knots.extend(crit);
            knots.push(b);
            let mut roots = Vec::new();
            for w in knots.windows(2) {
                let (mut lo, mut hi) = (w[0], w[1]);
                let (mut flo, fhi) = (poly_eval(c, lo), poly_eval(c, hi));
                if flo == 0.0 {
                    roots.push(lo);
                    continue;
                }
                if flo * fhi > 0.0 {
                    continue;
                }
                if fhi == 0.0 {
                    continue;
                }
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    let fm = poly_eval(c, mid);
                    if fm == 0.0 {
                        lo = mid;
                        hi = mid;
                        break;
                    }
                    if (fm > 0.0) == (flo > 0.0) {
                        lo = mid;
                        flo = fm;
                    } else {
                        hi = mid;
                    }
                }
                roots.push(0.5 * (lo + hi));
            }
            if poly_eval(c, b) == 0.0 {
                roots.push(b);
            }
            roots
        }
    }
}

/// `max_{[0, w]} |c|`.
fn poly_sup_abs(c: &[f64], w: f64) -> f64 {
    let mut m = poly_eval(c, 0.0).abs().max(poly_eval(c, w).abs());
    for r in poly_roots(&poly_derivative(c), 0.0, w) {
        m = m.max(poly_eval(c, r).abs());
    }
    m
}

/// Piecewise polynomial, zero outside `[breakpoints[0], breakpoints[n]]`.
/// Piece `i` lives on `[breakpoints[i], breakpoints[i+1]]` and is stored in
/// the power basis of `x - breakpoints[i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewisePolynomial {
    pub breakpoints: Vec<f64>,
    pub pieces: Vec<Vec<f64>>,
}

impl PiecewisePolynomial {
    pub fn new(breakpoints: Vec<f64>, pieces: Vec<Vec<f64>>) -> Result<Self> {
        if breakpoints.len() != pieces.len() + 1 || pieces.is_empty() {
            return Err(Error::InvalidInput("need one more breakpoint than pieces".into()));
        }
        if breakpoints.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidInput("breakpoints must increase strictly".into()));
        }
        Ok(Self { breakpoints, pieces })
    }

    pub fn support(&self) -> (f64, f64) {
        (self.breakpoints[0], self.breakpoints[self.breakpoints.len() - 1])
    }

    pub fn degree(&self) -> usize {
        self.pieces.iter().map(|p| trim(p).len().saturating_sub(1)).max().unwrap_or(0)
    }

    /// Piece index for `x`, preferring the piece on the right at interior
    /// breakpoints; `None` outside the support.
    fn locate(&self, x: f64) -> Option<usize> {
        let (a, b) = self.support();
        if !(a <= x && x <= b) {
            return None;
        }
        let i = self.breakpoints.partition_point(|&v| v <= x);
        Some(i.saturating_sub(1).min(self.pieces.len() - 1))
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.eval_derivative(x, 0)
    }

    /// `f^{(beta)}(x)` evaluated on the piece containing `x`.
    pub fn eval_derivative(&self, x: f64, beta: usize) -> f64 {
        self.taylor(x, beta).get(beta).map_or(0.0, |c| c * factorial(beta))
    }

    /// Taylor coefficients `f^{(k)}(x)/k!`, `k = 0..=order`.
    pub fn taylor(&self, x: f64, order: usize) -> Vec<f64> {
        let mut out = vec![0.0; order + 1];
        if let Some(i) = self.locate(x) {
            let shifted = poly_shift(&self.pieces[i], x - self.breakpoints[i]);
            for (k, v) in shifted.into_iter().take(order + 1).enumerate() {
                out[k] = v;
            }
        }
        out
    }

    pub fn derivative(&self) -> Self {
        Self { breakpoints: self.breakpoints.clone(), pieces: self.pieces.iter().map(|p| poly_derivative(p)).collect() }
    }

    /// Antiderivative vanishing at the left end of the support (it is then
    /// constant, not zero, beyond the right end; that constant is
    /// [`Self::integral`]).
    pub fn antiderivative(&self) -> Self {
        let mut acc = 0.0;
        let pieces = self
            .pieces
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let mut q = poly_antiderivative(p);
                q[0] = acc;
                acc += poly_eval(&q, self.breakpoints[i + 1] - self.breakpoints[i]) - q[0];
                q
            })
            .collect();
        Self { breakpoints: self.breakpoints.clone(), pieces }
    }

    pub fn integral(&self) -> f64 {
        let a = self.antiderivative();
        let n = a.pieces.len();
        poly_eval(&a.pieces[n - 1], a.breakpoints[n] - a.breakpoints[n - 1])
    }

    /// Exact `sup |f|` over the support.
    pub fn sup_abs(&self) -> f64 {
        self.pieces
            .iter()
            .enumerate()
            .map(|(i, p)| poly_sup_abs(p, self.breakpoints[i + 1] - self.breakpoints[i]))
            .fold(0.0, f64::max)
    }

    /// Exact `sup |f^{(beta)}|` over the support.
    pub fn sup_abs_derivative(&self, beta: usize) -> f64 {
        let mut f = self.clone();
        for _ in 0..beta {
            f = f.derivative();
        }
        f.sup_abs()
    }

    /// `x -> f((x - shift) / scale)`.
    pub fn affine(&self, shift: f64, scale: f64) -> Self {
        let breakpoints = self.breakpoints.iter().map(|b| shift + scale * b).collect();
        let pieces = self
            .pieces
            .iter()
            .map(|p| p.iter().enumerate().map(|(j, c)| c / scale.powi(j as i32)).collect())
            .collect();
        Self { breakpoints, pieces }
    }
}

pub(crate) fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Pieces of the cardinal B-spline `B_p` (p-fold convolution of the unit
/// box) on `[k, k+1]`, `k = 0..p`, in the local variable `s`.
pub fn cardinal_bspline(p: usize) -> Vec<Vec<f64>> {
    assert!(p >= 1);
    let mut b: Vec<Vec<f64>> = vec![vec![1.0]];
    for n in 1..p {
        // Cumulative antiderivative pieces A_j(s) = A(j) + int_0^s B_j.
        let mut acc = 0.0;
        let a: Vec<Vec<f64>> = b
            .iter()
            .map(|piece| {
                let mut q = poly_antiderivative(piece);
                q[0] = acc;
                acc += poly_eval(&q, 1.0) - q[0];
                q
            })
            .collect();
        let total = acc;
        let next: Vec<Vec<f64>> = (0..=n)
            .map(|j| {
                let upper = if j < n { a[j].clone() } else { vec![total] };
                let lower = if j >= 1 { a[j - 1].clone() } else { vec![0.0] };
                let len = upper.len().max(lower.len());
                (0..len).map(|k| upper.get(k).unwrap_or(&0.0) - lower.get(k).unwrap_or(&0.0)).collect()
            })
            .collect();
        b = next;
    }
    b
}

/// Antiderivative of `B_p` on `[k, k+1]`, rising from 0 to 1.
fn cardinal_ramp(p: usize) -> Vec<Vec<f64>> {
    let mut acc = 0.0;
    cardinal_bspline(p)
        .iter()
        .map(|piece| {
            let mut q = poly_antiderivative(piece);
            q[0] = acc;
            acc += poly_eval(&q, 1.0) - q[0];
            q
        })
        .collect()
}

/// Bump data: equal to 1 on `core`, supported in `core` inflated by
/// `margin`, obtained from the indicator of `core` inflated by `margin/2`
/// convolved `p` times with centered boxes of width `h = margin/p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BumpSpec {
    pub core: (f64, f64),
    pub margin: f64,
    pub p: usize,
}

impl BumpSpec {
    pub fn h(&self) -> f64 {
        self.margin / self.p as f64
    }
}

pub fn build_bump(spec: &BumpSpec) -> Result<PiecewisePolynomial> {
    let (a, b) = spec.core;
    if !(spec.margin > 0.0) {
        return Err(Error::DegenerateSupport(spec.margin));
    }
    if spec.p == 0 || !(a <= b) {
        return Err(Error::InvalidInput("bump needs p >= 1 and a core [a, b]".into()));
    }
    let p = spec.p;
    let h = spec.h();
    let ramp = cardinal_ramp(p);
    let to_x = |c: &[f64]| -> Vec<f64> { c.iter().enumerate().map(|(j, v)| v / h.powi(j as i32)).collect() };
    let mut bps = Vec::with_capacity(2 * p + 2);
    let mut pieces = Vec::with_capacity(2 * p + 1);
    for (k, r) in ramp.iter().enumerate() {
        bps.push(a - spec.margin + k as f64 * h);
        pieces.push(to_x(r));
    }
    bps.push(a);
    if b > a {
        pieces.push(vec![1.0]);
        bps.push(b);
    }
    for (k, r) in ramp.iter().enumerate() {
        let mut c: Vec<f64> = r.iter().map(|v| -v).collect();
        c[0] += 1.0;
        pieces.push(to_x(&c));
        bps.push(if k + 1 == p { b + spec.margin } else { b + (k + 1) as f64 * h });
    }
    PiecewisePolynomial::new(bps, pieces)
}

/// Truncated Taylor series `sum_k c_k (y - x)^k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Jet {
    pub coeffs: Vec<f64>,
}

impl Jet {
    pub fn zero(order: usize) -> Self {
        Self { coeffs: vec![0.0; order + 1] }
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn add_assign(&mut self, other: &Jet) {
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += b;
        }
    }

    pub fn mul(&self, other: &Jet) -> Jet {
        let n = self.coeffs.len().min(other.coeffs.len());
        let coeffs = (0..n).map(|k| (0..=k).map(|j| self.coeffs[j] * other.coeffs[k - j]).sum()).collect();
        Jet { coeffs }
    }

    /// `1/f` via `r_0 = 1/a_0`, `r_k = -(1/a_0) sum_{j=1..k} a_j r_{k-j}`.
    pub fn recip(&self) -> Option<Jet> {
        let a0 = self.coeffs[0];
        if a0 == 0.0 {
            return None;
        }
        let n = self.coeffs.len();
        let mut r = vec![0.0; n];
        r[0] = 1.0 / a0;
        for k in 1..n {
            let s: f64 = (1..=k).map(|j| self.coeffs[j] * r[k - j]).sum();
            r[k] = -s / a0;
        }
        Some(Jet { coeffs: r })
    }

    /// `f^{(k)}` for `k = 0..=order`.
    pub fn derivatives(&self) -> Vec<f64> {
        let mut f = 1.0;
        self.coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| {
                if k > 0 {
                    f *= k as f64;
                }
                c * f
            })
            .collect()
    }
}

/// Normalized partition `phi_i = psi_i / sum_j psi_j` with
/// `psi_i(x) = Psi((x - c_i)/l_i)` for one reference bump `Psi`.
#[derive(Debug, Clone)]
pub struct Partition {
    cover: WhitneyCover,
    p: usize,
    reference: PiecewisePolynomial,
}

pub fn build_partition(cover: &WhitneyCover, p: usize) -> Result<Partition> {
    let reference = build_bump(&BumpSpec { core: (-0.5, 0.5), margin: REFERENCE_MARGIN, p })?;
    Ok(Partition { cover: cover.clone(), p, reference })
}

impl Partition {
    pub fn cover(&self) -> &WhitneyCover {
        &self.cover
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn reference(&self) -> &PiecewisePolynomial {
        &self.reference
    }

    /// `psi_i` as an explicit spline in `x`.
    pub fn psi(&self, i: usize) -> PiecewisePolynomial {
        let q = &self.cover.intervals()[i];
        self.reference.affine(q.center, q.side)
    }

    /// Taylor jet of `psi_i` at `x`.
    pub fn psi_jet(&self, i: usize, x: f64, order: usize) -> Jet {
        let q = &self.cover.intervals()[i];
        let mut coeffs = self.reference.taylor((x - q.center) / q.side, order);
        let mut scale = 1.0;
        for c in coeffs.iter_mut() {
            *c *= scale;
            scale /= q.side;
        }
        Jet { coeffs }
    }

    /// Jets of every `phi_i` not vanishing identically near `x`.
    pub fn phi_jets(&self, x: f64, order: usize) -> Result<Vec<(usize, Jet)>> {
        let idx = self.cover.expanded_containing(x);
        let psis: Vec<(usize, Jet)> = idx.into_iter().map(|i| (i, self.psi_jet(i, x, order))).collect();
        let mut sum = Jet::zero(order);
        for (_, j) in &psis {
            sum.add_assign(j);
        }
        let Some(inv) = sum.recip() else {
            if self.cover.in_region(x) {
                return Err(Error::UncoveredPoint(x));
            }
            return Ok(Vec::new());
        };
        Ok(psis.into_iter().map(|(i, j)| (i, j.mul(&inv))).collect())
    }

    /// `sum_i phi_i(x)`.
    pub fn sum_at(&self, x: f64) -> Result<f64> {
        Ok(self.phi_jets(x, 0)?.iter().map(|(_, j)| j.coeffs[0]).sum())
    }

    /// Exact `sup |Psi^{(beta)}|` of the reference bump.
    pub fn reference_sup(&self, beta: usize) -> f64 {
        self.reference.sup_abs_derivative(beta)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaFit {
    pub beta: usize,
    /// Smallest `M` making the bound hold at every sample for this order.
    pub m: f64,
    /// Exact `sup |Psi^{(beta)}|` against the per-fold bound `(2/h)^beta`.
    pub reference_sup: f64,
    pub per_fold_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivativeBoundReport {
    pub per_beta: Vec<BetaFit>,
    pub m: f64,
    pub trend: Trend,
    /// Samples where `h_{s^eta}` sat on the truncation cutoff.
    pub truncated_h_samples: usize,
    pub samples: usize,
}

/// Envelope `Pi(p, x) = (e / h_s(c p d))^{c'/p}` with `c = b_1/(9 A_2 B)`,
/// `c' = A_1 B`; returns the value and whether `h` was truncated.
pub fn pi_envelope(s_eta: &WeightSequence, consts: &ExtensionConstants, b: f64, p: usize, d: f64) -> (f64, bool) {
    let c = consts.b_1 / (9.0 * consts.a_2 * b);
    let c_prime = consts.a_1 * b;
    let h = h_of_m_truncated(s_eta, c * p as f64 * d);
    ((std::f64::consts::E / h.value).powf(c_prime / p as f64), h.at_cutoff)
}

/// Fits `M` in `|phi_i^{(beta)}(x)| <= M W_beta Pi(p, x)` over the samples
/// for `beta = 0..=beta_max` (`B = 1`).
pub fn check_derivative_bound(
    partition: &Partition,
    w_row: &WeightSequence,
    s_eta: &WeightSequence,
    beta_max: usize,
    samples: &[f64],
) -> Result<DerivativeBoundReport> {
    let p = partition.p;
    if beta_max > p {
        return Err(Error::OrderOverflow { order: beta_max, alpha_max: p });
    }
    let consts = partition.cover.constants();
    let set = partition.cover.set();
    let pts: Vec<f64> = samples.iter().copied().filter(|&x| partition.cover.in_region(x)).collect();
    let per_x = par::try_map(&pts, |&x| -> Result<(Vec<f64>, bool)> {
        let (pi, trunc) = pi_envelope(s_eta, &consts, 1.0, p, set.distance(x));
        let jets = partition.phi_jets(x, beta_max)?;
        let mut best = vec![0.0_f64; beta_max + 1];
        for (_, j) in jets {
            for (beta, v) in j.derivatives().into_iter().enumerate() {
                best[beta] = best[beta].max(v.abs() / (w_row.value(beta) * pi));
            }
        }
        Ok((best, trunc))
    })?;
    let h = REFERENCE_MARGIN / p as f64;
    let per_beta: Vec<BetaFit> = (0..=beta_max)
        .map(|beta| BetaFit {
            beta,
            m: per_x.iter().map(|(b, _)| b[beta]).fold(0.0, f64::max),
            reference_sup: partition.reference_sup(beta),
            per_fold_bound: (2.0 / h).powi(beta as i32),
        })
        .collect();
    let ms: Vec<f64> = trend::running_max(&per_beta.iter().map(|b| b.m).collect::<Vec<_>>());
    Ok(DerivativeBoundReport {
        m: ms.last().copied().unwrap_or(0.0),
        trend: trend::index_trend(&ms),
        per_beta,
        truncated_h_samples: per_x.iter().filter(|(_, t)| *t).count(),
        samples: pts.len(),
    })
}
