use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("nonpositive radius")]
    NonPositiveRadius,
    #[error("profile touches rotation axis")]
    TouchesAxis,
    #[error("interval needs r0 < r1, got [{r0}, {r1}]")]
    EmptyInterval { r0: f64, r1: f64 },
    #[error("ρ ≤ 0 at φ = {phi}")]
    RadiusNonPositive { phi: f64 },
    #[error("profile exits the half-plane at φ = {phi}")]
    ExitsHalfPlane { phi: f64 },
    #[error("grid folds (mapping Jacobian ≤ 0) along φ = {phi}")]
    GridFold { phi: f64 },
    #[error("resolution must be at least {min}, got {got}")]
    ResolutionTooSmall { min: usize, got: usize },
    #[error("angular resolution must be even, got {0}")]
    OddAngularResolution(usize),
    #[error("resolution kind does not match the profile dimension")]
    ResolutionMismatch,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FlowError {
    #[error("sigma out of range: sigma ∈ (0, 0.5], got {0}")]
    SigmaOutOfRange(f64),
    #[error("t_final must be > 0, got {0}")]
    NonPositiveFinalTime(f64),
    #[error("vtilde_cap must be > 1, got {0}")]
    VtildeCapTooSmall(f64),
    #[error("rkl2 needs at least 3 stages, got {0}")]
    TooFewStages(usize),
    #[error("gradient blow-up at t={t}: ṽ = {vtilde} > cap at node {node} (y={y}, r={r})")]
    GradientBlowUp {
        t: f64,
        node: usize,
        y: f64,
        r: f64,
        vtilde: f64,
    },
    #[error("non-finite value at t={t}, node {node} (y={y}, r={r})")]
    NonFinite { t: f64, node: usize, y: f64, r: f64 },
    #[error("field has {got} values, grid has {expected} nodes")]
    LengthMismatch { expected: usize, got: usize },
}
