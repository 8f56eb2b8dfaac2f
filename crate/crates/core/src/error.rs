use thiserror::Error;

/// Errors raised by geometric constructors and numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeoError {
    #[error("non-finite coordinate in {0}")]
    NonFinite(&'static str),
    #[error("point is off the hyperboloid: <v,v> = {0}")]
    NotOnHyperboloid(f64),
    #[error("vector is not tangent at its base point: <p,w> = {0}")]
    NotTangent(f64),
    #[error("tangent vectors are based at different points")]
    BaseMismatch,
    #[error("expected a unit vector, got norm {0}")]
    NotUnit(f64),
    #[error("vector is not null: <n,n> = {0}")]
    NotNull(f64),
    #[error("half-space coordinate z must be positive, got {0}")]
    InvalidHalfSpace(f64),
    #[error("ball coordinates must have norm < 1, got {0}")]
    InvalidBall(f64),
    #[error("Jacobi data live on different geodesics")]
    GeodesicMismatch,
    #[error("Jacobi data are not orthogonal to the geodesic: <J,dir> = {0}")]
    NonOrthogonal(f64),
    #[error("chart vectors violate <u,v> = 0 or |u| = 1")]
    InvalidChartPoint,
    #[error("finite-difference step {0} is too small")]
    StepUnderflow(f64),
    #[error("parameters ({0}, {1}) lie outside the chart domain")]
    OutsideDomain(f64, f64),
    #[error("chart tangent plane is rank deficient at ({0}, {1})")]
    RankDeficient(f64, f64),
    #[error("geodesic intersection is ambiguous (near-null plane intersection, <l,l>/|l|^2 = {0})")]
    AmbiguousIntersection(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, GeoError>;
