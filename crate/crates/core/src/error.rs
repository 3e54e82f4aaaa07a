use std::fmt;

use serde::Serialize;
use thiserror::Error;

/// Why an invariant screen construction could not be carried out at a point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum UnavailableReason {
    /// The second fundamental tensor vanishes; no invariant can be built from it.
    TotallyGeodesic,
    /// The coefficient `K` coincides with an eigenvalue of the shape operator.
    KIsEigenvalue,
    /// The level sets of the absolute invariant are not transversal to the generators.
    NonTransversal,
    /// The shape operator has a repeated eigenvalue.
    EqualEigenvalues,
    /// The `K_a` coefficients are proportional to the eigenvalues.
    KProportionalToEigenvalues,
    /// A relative invariant needed by the construction is zero at the point.
    VanishingInvariant,
}

impl UnavailableReason {
    pub const ALL: [UnavailableReason; 6] = [
        UnavailableReason::TotallyGeodesic,
        UnavailableReason::KIsEigenvalue,
        UnavailableReason::NonTransversal,
        UnavailableReason::EqualEigenvalues,
        UnavailableReason::KProportionalToEigenvalues,
        UnavailableReason::VanishingInvariant,
    ];

    pub fn code(self) -> &'static str {
        match self {
            UnavailableReason::TotallyGeodesic => "totally_geodesic",
            UnavailableReason::KIsEigenvalue => "K_is_eigenvalue",
            UnavailableReason::NonTransversal => "non_transversal",
            UnavailableReason::EqualEigenvalues => "equal_eigenvalues",
            UnavailableReason::KProportionalToEigenvalues => "K_proportional_to_eigenvalues",
            UnavailableReason::VanishingInvariant => "vanishing_invariant",
        }
    }
}

impl fmt::Display for UnavailableReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("point {point:?} lies outside the chart")]
    OutOfChart { point: Vec<f64> },
    #[error("metric is degenerate at {point:?} (condition ratio {ratio:.3e})")]
    DegenerateMetric { point: Vec<f64>, ratio: f64 },
    #[error("metric at {point:?} has {negative} negative eigenvalues, expected exactly one")]
    Signature { point: Vec<f64>, negative: usize },
    #[error("dimension mismatch: expected {expected}, got {found}")]
    Dimension { expected: usize, found: usize },
    #[error("tangent map of the patch is not of full rank at {params:?}")]
    NotImmersed { params: Vec<f64> },
    #[error("tangent plane is not lightlike (radical dimension {radical_dim})")]
    NotLightlike { radical_dim: usize },
    #[error("tangent plane is degenerate beyond lightlike (radical dimension {radical_dim})")]
    DegenerateInput { radical_dim: usize },
    #[error("invalid gauge transform: {0}")]
    InvalidGauge(&'static str),
    #[error("radical vector has a vanishing anchor coordinate {coord}")]
    AnchorLost { coord: usize },
    #[error("initial velocity is not null: g(v, v) = {norm:.3e}")]
    NotNull { norm: f64 },
    #[error("frame residual {residual:.3e} exceeds tolerance")]
    FrameResidual { residual: f64 },
    #[error("normalization unavailable: |I| = {value:.3e} is below threshold")]
    NormalizationUnavailable { value: f64 },
    #[error("vanishing denominator in absolute invariant ({value:.3e})")]
    VanishingDenominator { value: f64 },
    #[error("isotropic vector P: g(P, P) = {value:.3e}")]
    IsotropicPlaneVector { value: f64 },
    #[error("vector is not tangent to the hypersurface (residual {residual:.3e})")]
    NotTangent { residual: f64 },
    #[error("screen construction unavailable: {0}")]
    Unavailable(UnavailableReason),
    #[error("induced connection decomposition residual {residual:.3e} exceeds tolerance")]
    InconsistentScreen { residual: f64 },
    #[error("hypersurface classification requires a totally umbilical point with nonzero factor")]
    NotUmbilical,
    #[error("{0}")]
    Unsupported(String),
    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },
    #[error("point {index} at parameters {params:?} is not lightlike: {kind}")]
    NonLightlikeGridPoint {
        index: usize,
        params: Vec<f64>,
        kind: String,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }

    /// Reason code when this error is a screen unavailability.
    pub fn unavailable_reason(&self) -> Option<UnavailableReason> {
        match self {
            Error::Unavailable(r) => Some(*r),
            _ => None,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
