//! Compact subsets of the line, distance oracles and a dyadic Whitney
//! cover of `{x : 0 < d(x, E) < r_cov}`.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Expansion factor of `Q_i*` relative to `Q_i`.
pub const EXPANSION: f64 = 9.0 / 8.0;
/// Finest dyadic generation generated by default.
pub const DEFAULT_MAX_GENERATION: i32 = 40;

/// Finite union of disjoint closed intervals (points allowed), sorted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<(f64, f64)>", into = "Vec<(f64, f64)>")]
pub struct CompactSet1D {
    components: Vec<(f64, f64)>,
}

impl CompactSet1D {
    pub fn new(mut components: Vec<(f64, f64)>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidInput("compact set must be nonempty".into()));
        }
        if components.iter().any(|&(a, b)| !(a.is_finite() && b.is_finite() && a <= b)) {
            return Err(Error::InvalidInput("components must be finite intervals [a, b] with a <= b".into()));
        }
        components.sort_by(|x, y| x.0.total_cmp(&y.0));
        if components.windows(2).any(|w| w[0].1 >= w[1].0) {
            return Err(Error::InvalidInput("components must be disjoint".into()));
        }
        Ok(Self { components })
    }

    pub fn point(x: f64) -> Result<Self> {
        Self::new(vec![(x, x)])
    }

    pub fn components(&self) -> &[(f64, f64)] {
        &self.components
    }

    /// Component endpoints, sorted, without duplicates.
    pub fn endpoints(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(2 * self.components.len());
        for &(a, b) in &self.components {
            out.push(a);
            if b != a {
                out.push(b);
            }
        }
        out
    }

    pub fn contains(&self, x: f64) -> bool {
        self.components.iter().any(|&(a, b)| a <= x && x <= b)
    }

    /// `d(x, E)` and a nearest point; ties go to the smaller coordinate.
    pub fn distance_and_nearest(&self, x: f64) -> (f64, f64) {
        let i = self.components.partition_point(|c| c.0 <= x);
        let mut best = (f64::INFINITY, f64::INFINITY);
        for j in [i.wrapping_sub(1), i] {
            let Some(&(a, b)) = self.components.get(j) else { continue };
            let cand = if x < a {
                (a - x, a)
            } else if x > b {
                (x - b, b)
            } else {
                (0.0, x)
            };
            if cand.0 < best.0 || (cand.0 == best.0 && cand.1 < best.1) {
                best = cand;
            }
        }
        best
    }

    pub fn distance(&self, x: f64) -> f64 {
        self.distance_and_nearest(x).0
    }

    pub fn min(&self) -> f64 {
        self.components[0].0
    }

    pub fn max(&self) -> f64 {
        self.components[self.components.len() - 1].1
    }
}

impl TryFrom<Vec<(f64, f64)>> for CompactSet1D {
    type Error = Error;
    fn try_from(v: Vec<(f64, f64)>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<CompactSet1D> for Vec<(f64, f64)> {
    fn from(e: CompactSet1D) -> Self {
        e.components
    }
}

/// Dyadic interval `[n 2^-j, (n+1) 2^-j]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WhitneyInterval {
    pub center: f64,
    pub side: f64,
    pub generation: i32,
    pub index: i64,
}

impl WhitneyInterval {
    fn new(generation: i32, index: i64) -> Self {
        let side = (-generation as f64).exp2();
        Self { center: (index as f64 + 0.5) * side, side, generation, index }
    }

    pub fn left(&self) -> f64 {
        self.center - 0.5 * self.side
    }

    pub fn right(&self) -> f64 {
        self.center + 0.5 * self.side
    }

    pub fn contains(&self, x: f64) -> bool {
        self.left() <= x && x <= self.right()
    }

    /// Endpoints of the interval expanded about its center by `factor`.
    pub fn expanded(&self, factor: f64) -> (f64, f64) {
        let r = 0.5 * factor * self.side;
        (self.center - r, self.center + r)
    }
}

/// Constants of the cover and partition as realized here.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtensionConstants {
    pub r_0: f64,
    pub b_1_upper: f64,
    pub b_1: f64,
    pub a_1: f64,
    pub a_2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoverOptions {
    pub max_generation: i32,
    pub expansion: f64,
}

impl Default for CoverOptions {
    fn default() -> Self {
        Self { max_generation: DEFAULT_MAX_GENERATION, expansion: EXPANSION }
    }
}

/// Maximal dyadic intervals `Q` with `side <= d(center) < 4 side` meeting
/// `{d < r_cov}`, sorted left to right.
#[derive(Debug, Clone, PartialEq)]
pub struct WhitneyCover {
    set: CompactSet1D,
    intervals: Vec<WhitneyInterval>,
    r_cov: f64,
    expansion: f64,
    d_floor: f64,
}

fn in_window(e: &CompactSet1D, q: &WhitneyInterval) -> bool {
    let d = e.distance(q.center);
    q.side <= d && d < 4.0 * q.side
}

impl WhitneyCover {
    pub fn build(set: &CompactSet1D, r_cov: f64) -> Result<Self> {
        Self::build_with(set, r_cov, CoverOptions::default())
    }

    pub fn build_with(set: &CompactSet1D, r_cov: f64, opts: CoverOptions) -> Result<Self> {
        if !(r_cov > 0.0 && r_cov.is_finite()) {
            return Err(Error::InvalidInput(format!("r_cov must be positive, got {r_cov}")));
        }
        if !(opts.expansion >= 1.0) {
            return Err(Error::InvalidInput("expansion factor must be >= 1".into()));
        }
        let d_floor = 3.0 * (-opts.max_generation as f64).exp2();
        if r_cov <= d_floor {
            return Err(Error::EmptyCover { r_cov, floor: d_floor });
        }
        // Coarsest generation: side >= r_cov, so nothing coarser can meet
        // the region.
        let g_min = -(r_cov.log2().ceil() as i32);
        let mut keys = BTreeSet::new();
        for e in set.endpoints() {
            for g in g_min..=opts.max_generation {
                let side = (-g as f64).exp2();
                let lo = ((e - 5.0 * side) / side).floor() as i64;
                let hi = ((e + 5.0 * side) / side).ceil() as i64;
                for n in lo..=hi {
                    let q = WhitneyInterval::new(g, n);
                    if !in_window(set, &q) || set.distance(q.center) - 0.5 * q.side >= r_cov {
                        continue;
                    }
                    let maximal = g == g_min || !in_window(set, &WhitneyInterval::new(g - 1, n.div_euclid(2)));
                    if maximal {
                        keys.insert((n, g));
                    }
                }
            }
        }
        let mut intervals: Vec<WhitneyInterval> = keys.into_iter().map(|(n, g)| WhitneyInterval::new(g, n)).collect();
        intervals.sort_by(|a, b| a.left().total_cmp(&b.left()));
        if intervals.is_empty() {
            return Err(Error::EmptyCover { r_cov, floor: d_floor });
        }
        Ok(Self { set: set.clone(), intervals, r_cov, expansion: opts.expansion, d_floor })
    }

    pub fn set(&self) -> &CompactSet1D {
        &self.set
    }

    pub fn intervals(&self) -> &[WhitneyInterval] {
        &self.intervals
    }

    pub fn r_cov(&self) -> f64 {
        self.r_cov
    }

    pub fn expansion(&self) -> f64 {
        self.expansion
    }

    /// Points with `d(x) < d_floor` lie below the finest generated scale.
    pub fn d_floor(&self) -> f64 {
        self.d_floor
    }

    /// Whether `x` lies in the region the cover is responsible for.
    pub fn in_region(&self, x: f64) -> bool {
        let d = self.set.distance(x);
        d >= self.d_floor && d < self.r_cov
    }

    /// Expanded interval `Q_i*`.
    pub fn expanded(&self, i: usize) -> (f64, f64) {
        self.intervals[i].expanded(self.expansion)
    }

    fn neighbourhood(&self, x: f64) -> std::ops::Range<usize> {
        let i = self.intervals.partition_point(|q| q.left() <= x);
        // Expanded neighbours of comparable size reach at most a few slots.
        i.saturating_sub(6)..(i + 6).min(self.intervals.len())
    }

    /// Indices `i` with `x` in `Q_i`.
    pub fn containing(&self, x: f64) -> Vec<usize> {
        self.neighbourhood(x).filter(|&i| self.intervals[i].contains(x)).collect()
    }

    /// Indices `i` with `x` in `Q_i*`.
    pub fn expanded_containing(&self, x: f64) -> Vec<usize> {
        self.neighbourhood(x)
            .filter(|&i| {
                let (a, b) = self.expanded(i);
                a <= x && x <= b
            })
            .collect()
    }

    /// Constants of this construction: `r_0 = r_cov`, sides within
    /// `[b_1 d, B_1 d]` of the center distance, and the partition constants
    /// `A_1 = 1`, `A_2 = 32` of the bumps built on it.
    pub fn constants(&self) -> ExtensionConstants {
        ExtensionConstants { r_0: self.r_cov, b_1_upper: 1.0, b_1: 0.25, a_1: 1.0, a_2: 32.0 }
    }

    /// CSV dump `center,side,generation`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("center,side,generation\n");
        for q in &self.intervals {
            let _ = writeln!(s, "{},{},{}", q.center, q.side, q.generation);
        }
        s
    }

    /// `per` evenly spaced samples (endpoints included) in every `Q_i*`.
    pub fn expanded_samples(&self, per: usize) -> Vec<f64> {
        let per = per.max(2);
        let mut out = Vec::with_capacity(per * self.intervals.len());
        for i in 0..self.intervals.len() {
            let (a, b) = self.expanded(i);
            out.extend((0..per).map(|k| a + (b - a) * k as f64 / (per - 1) as f64));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Eq14Report {
    pub checked: usize,
    /// `min d(x_i)/d(x)`; at least 1/2 when the bound holds.
    pub worst_lower: f64,
    /// `max d(x_i)/d(x)`; at most 3 when the bound holds.
    pub worst_upper: f64,
    /// First `(x, i, d(x_i)/d(x))` outside `[1/2, 3]`.
    pub violation: Option<(f64, usize, f64)>,
}

impl Eq14Report {
    pub fn passed(&self) -> bool {
        self.violation.is_none()
    }
}

/// Checks `d(x)/2 <= d(x_i) <= 3 d(x)` for every sample and every `Q_i*`
/// containing it. The comparison is done in the product form so dyadic
/// inputs are checked exactly.
pub fn verify_eq14(cover: &WhitneyCover, samples: &[f64]) -> Eq14Report {
    let mut rep = Eq14Report { checked: 0, worst_lower: f64::INFINITY, worst_upper: 0.0, violation: None };
    for &x in samples {
        let dx = cover.set.distance(x);
        for i in cover.expanded_containing(x) {
            let di = cover.set.distance(cover.intervals[i].center);
            rep.checked += 1;
            let ratio = if dx > 0.0 { di / dx } else { f64::INFINITY };
            rep.worst_lower = rep.worst_lower.min(ratio);
            rep.worst_upper = rep.worst_upper.max(ratio);
            let ok = 0.5 * dx <= di && di <= 3.0 * dx;
            if !ok && rep.violation.is_none() {
                rep.violation = Some((x, i, ratio));
            }
        }
    }
    rep
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub sampled: usize,
    pub uncovered: Vec<f64>,
    pub max_overlap: usize,
}

/// Coverage by `Q_i` and overlap of `Q_i*` at the region samples.
pub fn coverage(cover: &WhitneyCover, samples: &[f64]) -> CoverageReport {
    let mut rep = CoverageReport { sampled: 0, uncovered: Vec::new(), max_overlap: 0 };
    for &x in samples.iter().filter(|&&x| cover.in_region(x)) {
        rep.sampled += 1;
        if cover.containing(x).is_empty() {
            rep.uncovered.push(x);
        }
        rep.max_overlap = rep.max_overlap.max(cover.expanded_containing(x).len());
    }
    rep
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_piece() -> CompactSet1D {
        CompactSet1D::new(vec![(1.0, 1.0), (-1.0, 0.0)]).unwrap()
    }

    #[test]
    fn distance_examples() {
        let e = two_piece();
        assert_eq!(e.distance_and_nearest(0.25), (0.25, 0.0));
        let (d, n) = e.distance_and_nearest(0.7);
        assert!((d - 0.3).abs() < 1e-15);
        assert_eq!(n, 1.0);
        assert_eq!(e.distance_and_nearest(-0.5), (0.0, -0.5));
        assert_eq!(e.distance_and_nearest(0.5), (0.5, 0.0));
        assert_eq!(e.distance_and_nearest(-3.0), (2.0, -1.0));
        assert!(CompactSet1D::new(vec![(0.0, 1.0), (0.5, 2.0)]).is_err());
        assert!(CompactSet1D::new(vec![]).is_err());
    }

    #[test]
    fn point_cover_example() {
        let e = CompactSet1D::point(0.0).unwrap();
        let c = WhitneyCover::build(&e, 1.0).unwrap();
        let q = c.intervals().iter().position(|q| q.left() == 0.25 && q.right() == 0.5).expect("[1/4,1/2] in cover");
        assert_eq!(c.intervals()[q].center, 0.375);
        let x = 15.0 / 64.0;
        assert!(c.expanded_containing(x).contains(&q));
        let rep = verify_eq14(&c, &[x]);
        assert!(rep.passed());
        for (i, iv) in c.intervals().iter().enumerate() {
            let (a, b) = c.expanded(i);
            assert!(!(a <= 0.0 && 0.0 <= b));
            let d = e.distance(iv.center);
            assert!(iv.side <= d && d <= 4.0 * iv.side);
        }
    }

    #[test]
    fn cover_properties() {
        let e = CompactSet1D::new(vec![(-1.0, 0.0), (1.0, 1.0), (2.5, 3.0)]).unwrap();
        let c = WhitneyCover::build(&e, 0.75).unwrap();
        let xs: Vec<f64> = (0..10_000).map(|i| -2.0 + 5.5 * (i as f64 + 0.5) / 10_000.0).collect();
        let cov = coverage(&c, &xs);
        assert!(cov.uncovered.is_empty(), "{:?}", &cov.uncovered[..cov.uncovered.len().min(5)]);
        assert!(cov.max_overlap <= 3);
        assert!(verify_eq14(&c, &c.expanded_samples(33)).passed());
        assert!(verify_eq14(&c, &c.intervals().iter().map(|q| q.center).collect::<Vec<_>>()).worst_lower >= 1.0);
    }

    #[test]
    fn wide_expansion_is_caught() {
        let e = CompactSet1D::point(0.0).unwrap();
        let opts = CoverOptions { expansion: 3.0, ..CoverOptions::default() };
        let c = WhitneyCover::build_with(&e, 1.0, opts).unwrap();
        assert!(!verify_eq14(&c, &c.expanded_samples(65)).passed());
    }

    #[test]
    fn empty_cover() {
        let e = CompactSet1D::point(0.0).unwrap();
        assert!(matches!(WhitneyCover::build(&e, 1e-15), Err(Error::EmptyCover { .. })));
    }

    #[test]
    fn csv_dump() {
        let c = WhitneyCover::build(&CompactSet1D::point(0.0).unwrap(), 1.0).unwrap();
        let csv = c.to_csv();
        assert!(csv.starts_with("center,side,generation\n"));
        assert!(csv.contains("0.375,0.25,2\n"));
        assert_eq!(csv.lines().count(), c.intervals().len() + 1);
    }
}
