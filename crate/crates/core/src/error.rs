use thiserror::Error;

/// Errors raised by the weight calculus and the extension engine.
///
/// Every truncation of an infinite supremum, infimum or integral surfaces
/// here instead of being silently clamped.
#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("supremum of omega_m({t}) attained at the cutoff index {cutoff}")]
    SupremumAtCutoff { t: f64, cutoff: usize },

    #[error("infimum of h_m({t}) attained at the cutoff index {cutoff}")]
    InfimumAtCutoff { t: f64, cutoff: usize },

    #[error("Gamma_m({t}) is not reached below the cutoff index {cutoff}")]
    GammaAtCutoff { t: f64, cutoff: usize },

    #[error("Young conjugate maximizer for y = {y} exceeds the search bound {bound}")]
    BracketFailure { y: f64, bound: f64 },

    #[error("tail of the kappa integral at t = {t} does not converge up to u = {upper}")]
    DivergentTail { t: f64, upper: f64 },

    #[error("inconclusive trend: {0}")]
    InconclusiveTrend(String),

    #[error("sandwich constants not verifiable for xi = {xi}: worst ratio {worst}")]
    SandwichUnverifiable { xi: f64, worst: f64 },

    #[error("row xi = {0} is not stored in the matrix")]
    MissingRow(f64),

    #[error("hypothesis violated at j = {j}, k = {k}: mu_j/j = {lhs} > C nu_k/k = {rhs}")]
    HypothesisViolated { j: usize, k: usize, lhs: f64, rhs: f64 },

    #[error("cover is empty: radius {r_cov} is below the finest scale {floor}")]
    EmptyCover { r_cov: f64, floor: f64 },

    #[error("degenerate bump support: margin = {0}")]
    DegenerateSupport(f64),

    #[error("point {0} is in the covered region but no bump is positive there")]
    UncoveredPoint(f64),

    #[error("order {order} exceeds the stored jet order {alpha_max}")]
    OrderOverflow { order: usize, alpha_max: usize },

    #[error("jet is not in the class: {0}")]
    NotInClass(String),

    #[error("extension plan invalid: {0}")]
    PlanInvalid(String),

    #[error("point {x} lies outside the region of validity (d(x) = {d}, d_max = {d_max})")]
    OutsideRegion { x: f64, d: f64, d_max: f64 },

    #[error("no jet stored at base point {0}")]
    MissingBasePoint(f64),
}

pub type Result<T> = std::result::Result<T, Error>;
