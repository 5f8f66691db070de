//! Whitney ultrajets on a compact set: storage, Taylor polynomials,
//! Whitney remainders and class certificates.
//!
//! A jet is stored at finitely many base points of `E` (every component
//! endpoint must be among them); the remainder bound is checked on all
//! stored pairs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix_calculus::WeightMatrix;
use crate::par;
use crate::partition_of_unity::factorial;
use crate::trend::{self, Trend};
use crate::whitney_geometry::CompactSet1D;

/// `rho` grid `2^{j/4}`, `j = 0..RHO_STEPS`.
pub const RHO_STEPS: usize = 161;

fn rho_at(j: usize) -> f64 {
    (j as f64 / 4.0).exp2()
}

/// Jet values `F^alpha(a)` for stored base points `a` and `alpha <= alpha_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct UltraJet {
    set: CompactSet1D,
    alpha_max: usize,
    base_points: Vec<f64>,
    /// `values[i][alpha]` at `base_points[i]`.
    values: Vec<Vec<f64>>,
}

impl UltraJet {
    pub fn new(set: CompactSet1D, alpha_max: usize, mut points: Vec<(f64, Vec<f64>)>) -> Result<Self> {
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        if points.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidInput("duplicate jet base point".into()));
        }
        for (a, v) in &points {
            if !set.contains(*a) {
                return Err(Error::InvalidInput(format!("base point {a} is not in E")));
            }
            if v.len() != alpha_max + 1 {
                return Err(Error::InvalidInput(format!("base point {a} needs {} jet values", alpha_max + 1)));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidInput(format!("non-finite jet value at {a}")));
            }
        }
        for e in set.endpoints() {
            if !points.iter().any(|(a, _)| *a == e) {
                return Err(Error::MissingBasePoint(e));
            }
        }
        let (base_points, values) = points.into_iter().unzip();
        Ok(Self { set, alpha_max, base_points, values })
    }

    /// Samples `F^alpha(a) = f(a, alpha)` at the given base points.
    pub fn from_fn<F: Fn(f64, usize) -> f64>(
        set: CompactSet1D,
        base_points: &[f64],
        alpha_max: usize,
        f: F,
    ) -> Result<Self> {
        let pts = base_points.iter().map(|&a| (a, (0..=alpha_max).map(|k| f(a, k)).collect())).collect();
        Self::new(set, alpha_max, pts)
    }

    /// Jet of the polynomial `sum_j c_j x^j`.
    pub fn polynomial(set: CompactSet1D, base_points: &[f64], alpha_max: usize, coeffs: &[f64]) -> Result<Self> {
        Self::from_fn(set, base_points, alpha_max, |a, k| {
            (k..coeffs.len())
                .map(|j| coeffs[j] * a.powi((j - k) as i32) * factorial(j) / factorial(j - k))
                .sum()
        })
    }

    pub fn zero(set: CompactSet1D, base_points: &[f64], alpha_max: usize) -> Result<Self> {
        Self::from_fn(set, base_points, alpha_max, |_, _| 0.0)
    }

    pub fn set(&self) -> &CompactSet1D {
        &self.set
    }

    pub fn alpha_max(&self) -> usize {
        self.alpha_max
    }

    pub fn base_points(&self) -> &[f64] {
        &self.base_points
    }

    fn index(&self, a: f64) -> Result<usize> {
        self.base_points.iter().position(|&b| b == a).ok_or(Error::MissingBasePoint(a))
    }

    /// `F^0(a), ..., F^{alpha_max}(a)`.
    pub fn values_at(&self, a: f64) -> Result<&[f64]> {
        Ok(&self.values[self.index(a)?])
    }

    pub fn value(&self, a: f64, alpha: usize) -> Result<f64> {
        if alpha > self.alpha_max {
            return Err(Error::OrderOverflow { order: alpha, alpha_max: self.alpha_max });
        }
        Ok(self.values_at(a)?[alpha])
    }

    /// `F + G` on identical base points.
    pub fn add(&self, other: &UltraJet) -> Result<UltraJet> {
        if self.base_points != other.base_points || self.alpha_max != other.alpha_max {
            return Err(Error::InvalidInput("jets must share base points and order".into()));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + y).collect())
            .collect();
        Ok(UltraJet { values, ..self.clone() })
    }

    pub fn scale(&self, c: f64) -> UltraJet {
        let values = self.values.iter().map(|v| v.iter().map(|x| c * x).collect()).collect();
        UltraJet { values, ..self.clone() }
    }
}

/// JSON jet file: `{E, alpha_max, values: [[a, alpha, value], ...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JetFile {
    #[serde(rename = "E")]
    pub e: Vec<(f64, f64)>,
    pub alpha_max: usize,
    pub values: Vec<(f64, usize, f64)>,
}

impl UltraJet {
    pub fn to_file(&self) -> JetFile {
        let mut values = Vec::new();
        for (a, v) in self.base_points.iter().zip(&self.values) {
            values.extend(v.iter().enumerate().map(|(k, x)| (*a, k, *x)));
        }
        JetFile { e: self.set.components().to_vec(), alpha_max: self.alpha_max, values }
    }

    pub fn from_file(f: &JetFile) -> Result<Self> {
        let set = CompactSet1D::new(f.e.clone())?;
        let mut pts: Vec<(f64, Vec<Option<f64>>)> = Vec::new();
        for &(a, k, v) in &f.values {
            if k > f.alpha_max {
                return Err(Error::OrderOverflow { order: k, alpha_max: f.alpha_max });
            }
            let i = match pts.iter().position(|p| p.0 == a) {
                Some(i) => i,
                None => {
                    pts.push((a, vec![None; f.alpha_max + 1]));
                    pts.len() - 1
                }
            };
            if pts[i].1[k].replace(v).is_some() {
                return Err(Error::InvalidInput(format!("duplicate jet entry ({a}, {k})")));
            }
        }
        let pts = pts
            .into_iter()
            .map(|(a, v)| {
                let v = v
                    .into_iter()
                    .enumerate()
                    .map(|(k, x)| x.ok_or_else(|| Error::InvalidInput(format!("missing jet entry ({a}, {k})"))))
                    .collect::<Result<Vec<f64>>>()?;
                Ok((a, v))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(set, f.alpha_max, pts)
    }
}

/// `y -> sum_{alpha <= p} c_alpha (y - base)^alpha / alpha!`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaylorPolynomial {
    pub base: f64,
    /// Derivatives at the base, `F^0(a), ..., F^p(a)`.
    pub derivatives: Vec<f64>,
}

impl TaylorPolynomial {
    pub fn degree(&self) -> usize {
        self.derivatives.len() - 1
    }

    /// `d^beta/dy^beta` at `y`.
    pub fn eval_derivative(&self, y: f64, beta: usize) -> f64 {
        let p = self.degree();
        if beta > p {
            return 0.0;
        }
        let h = y - self.base;
        // Horner on sum_{j=beta}^{p} F^j h^{j-beta}/(j-beta)!
        let mut acc = 0.0;
        for j in (beta..=p).rev() {
            acc = acc * h / ((j - beta + 1) as f64) + self.derivatives[j];
        }
        acc
    }

    pub fn eval(&self, y: f64) -> f64 {
        self.eval_derivative(y, 0)
    }
}

pub fn taylor_poly(f: &UltraJet, a: f64, p: usize) -> Result<TaylorPolynomial> {
    if p > f.alpha_max {
        return Err(Error::OrderOverflow { order: p, alpha_max: f.alpha_max });
    }
    Ok(TaylorPolynomial { base: a, derivatives: f.values_at(a)?[..=p].to_vec() })
}

/// Whitney remainder `(R_a^k F)^alpha(b) = F^alpha(b) - (T_a^k F)^{(alpha)}(b)`.
pub fn remainder(f: &UltraJet, a: f64, b: f64, k: usize, alpha: usize) -> Result<f64> {
    if k > f.alpha_max {
        return Err(Error::OrderOverflow { order: k, alpha_max: f.alpha_max });
    }
    if alpha > k {
        return Err(Error::InvalidInput(format!("remainder needs alpha <= k, got alpha = {alpha}, k = {k}")));
    }
    let fb = f.value(b, alpha)?;
    if a == b {
        return Ok(0.0);
    }
    Ok(fb - taylor_poly(f, a, k)?.eval_derivative(b, alpha))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JetCertificate {
    pub xi: f64,
    pub c: f64,
    pub rho: f64,
    /// Fitted `rho` on the truncations `alpha_max/4`, `alpha_max/2`,
    /// `alpha_max`.
    pub rho_by_order: Vec<(usize, f64)>,
    /// `max |F^alpha(a)| / (C rho^alpha V_alpha)`, at most 1.
    pub margin_12: f64,
    /// `max |R| / (C rho^{k+1} alpha! v_{k+1} |b-a|^{k+1-alpha})`, at most 1.
    pub margin_13: f64,
}

/// Per-order constants: entry `m` collects the growth bound at order `m`
/// with `rho = 1`, from `(12)` at `alpha = m` and `(13)` at `k + 1 = m`.
fn order_constants(f: &UltraJet, big: &[f64], small_log: &[f64]) -> Vec<f64> {
    let n = f.alpha_max;
    let mut c = vec![0.0_f64; n + 1];
    for v in &f.values {
        for m in 0..=n {
            c[m] = c[m].max((v[m].abs().ln() - big[m]).exp());
        }
    }
    let pts = &f.base_points;
    let pairs: Vec<(usize, usize)> =
        (0..pts.len()).flat_map(|i| (0..pts.len()).filter(move |&j| j != i).map(move |j| (i, j))).collect();
    let per_pair = par::map(&pairs, |&(i, j)| {
        let (a, b) = (pts[i], pts[j]);
        let dist = (b - a).abs();
        let mut out = vec![0.0_f64; n + 1];
        for k in 0..n {
            let t = TaylorPolynomial { base: a, derivatives: f.values[i][..=k].to_vec() };
            for alpha in 0..=k {
                let r = (f.values[j][alpha] - t.eval_derivative(b, alpha)).abs();
                if r == 0.0 {
                    continue;
                }
                let log_rhs =
                    factorial(alpha).ln() + small_log[k + 1] + (k + 1 - alpha) as f64 * dist.ln();
                out[k + 1] = out[k + 1].max((r.ln() - log_rhs).exp());
            }
        }
        out
    });
    for o in per_pair {
        for m in 0..=n {
            c[m] = c[m].max(o[m]);
        }
    }
    c
}

/// Smallest grid `rho` such that `c_m / rho^m` sets no new record beyond
/// `n/2` for `m <= n`.
fn fit_rho(c: &[f64], n: usize) -> Option<f64> {
    (0..RHO_STEPS).map(rho_at).find(|&rho| {
        let lr = rho.ln();
        let vals: Vec<f64> = (0..=n).map(|m| c[m].ln() - m as f64 * lr).collect();
        let first = vals[..=n / 2].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let second = vals[n / 2 + 1..].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        second <= first + 1e-12 * first.abs().max(1.0)
    })
}

/// Certificate for a fixed row `xi` of the matrix `V`.
pub fn certify_at(f: &UltraJet, v: &WeightMatrix, xi: f64) -> Result<JetCertificate> {
    let row = v.row(xi).ok_or(Error::MissingRow(xi))?;
    let n = f.alpha_max;
    if n + 1 > row.big.k_max() {
        return Err(Error::OrderOverflow { order: n + 1, alpha_max: row.big.k_max() });
    }
    let c = order_constants(f, row.big.log_values(), row.divided.log_values());
    if c.iter().all(|&x| x == 0.0) {
        return Ok(JetCertificate {
            xi,
            c: 1.0,
            rho: 1.0,
            rho_by_order: vec![(n, 1.0)],
            margin_12: 0.0,
            margin_13: 0.0,
        });
    }
    let checkpoints = [n / 4, n / 2, n];
    let mut rhos = Vec::new();
    for &m in &checkpoints {
        let r = fit_rho(&c, m).ok_or_else(|| {
            Error::NotInClass(format!("no rho <= {} fits orders <= {m} at xi = {xi}", rho_at(RHO_STEPS - 1)))
        })?;
        rhos.push((m, r));
    }
    if n >= 4 && trend::classify(rhos[0].1, rhos[1].1, rhos[2].1) == Trend::Diverging {
        return Err(Error::NotInClass(format!(
            "fitted rho grows with the order at xi = {xi}: {:?}",
            rhos
        )));
    }
    let rho = rhos[2].1;
    let lr = rho.ln();
    let cc = (0..=n).map(|m| (c[m].ln() - m as f64 * lr).exp()).fold(0.0, f64::max);
    let (m12, m13) = margins(f, row.big.log_values(), row.divided.log_values(), cc, rho);
    Ok(JetCertificate { xi, c: cc, rho, rho_by_order: rhos, margin_12: m12, margin_13: m13 })
}

fn margins(f: &UltraJet, big: &[f64], small_log: &[f64], c: f64, rho: f64) -> (f64, f64) {
    let n = f.alpha_max;
    let mut m12 = 0.0_f64;
    for v in &f.values {
        for m in 0..=n {
            m12 = m12.max(v[m].abs() / (c * (m as f64 * rho.ln() + big[m]).exp()));
        }
    }
    let mut m13 = 0.0_f64;
    for (i, &a) in f.base_points.iter().enumerate() {
        for (j, &b) in f.base_points.iter().enumerate() {
            if i == j {
                continue;
            }
            for k in 0..n {
                let t = TaylorPolynomial { base: a, derivatives: f.values[i][..=k].to_vec() };
                for alpha in 0..=k {
                    let r = (f.values[j][alpha] - t.eval_derivative(b, alpha)).abs();
                    let log_rhs = c.ln()
                        + (k + 1) as f64 * rho.ln()
                        + factorial(alpha).ln()
                        + small_log[k + 1]
                        + (k + 1 - alpha) as f64 * (b - a).abs().ln();
                    m13 = m13.max(r / log_rhs.exp());
                }
            }
        }
    }
    (m12, m13)
}

/// Searches the stored rows in increasing `xi` and returns the first
/// certificate (lexicographic minimum over `(xi, rho)`).
pub fn certify(f: &UltraJet, v: &WeightMatrix) -> Result<JetCertificate> {
    let xis = v.xi_grid();
    let results = par::map(&xis, |&xi| certify_at(f, v, xi));
    let mut last_err = None;
    for r in results {
        match r {
            Ok(c) => return Ok(c),
            Err(e @ Error::NotInClass(_)) => last_err = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last_err.unwrap_or_else(|| Error::NotInClass("no stored row".into())))
}
