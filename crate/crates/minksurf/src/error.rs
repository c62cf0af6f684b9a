//! Error types shared across the geometry kernels.

use nalgebra::Vector3;
use thiserror::Error;

/// Errors produced by the geometric kernels.
#[derive(Debug, Clone, Error)]
pub enum GeomError {
    /// Input vector is numerically zero and cannot be normalized or fed to the norm jet.
    #[error("vector magnitude below machine threshold")]
    ZeroVector,

    /// A vector that must be Euclidean-unit is off tolerance.
    #[error("expected a Euclidean unit vector, got |v| = {norm}")]
    NotUnit { norm: f64 },

    /// Spanning vectors of a plane are (anti)parallel.
    #[error("plane spanning vectors are linearly dependent")]
    DegeneratePlane,

    /// Newton iteration for the support point did not converge.
    #[error("support-point solve did not converge at v = [{}, {}, {}] (residual {residual:.3e} after {iterations} iterations)", at.x, at.y, at.z)]
    NoConvergence {
        at: Vector3<f64>,
        iterations: usize,
        residual: f64,
    },

    /// The implicit-function system for the support differential is rank-deficient.
    #[error("singular implicit system at v = [{}, {}, {}]; norm is inadmissible or ill-conditioned there", at.x, at.y, at.z)]
    SingularSystem { at: Vector3<f64> },

    /// Too few samples around the evaluation point of a curve.
    #[error("curvature estimate needs at least {needed} samples around the base point, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    /// Curve samples are collinear; curvature is indeterminate.
    #[error("curve samples are collinear, curvature indeterminate")]
    CollinearSamples,

    /// Consecutive curve samples coincide.
    #[error("consecutive curve samples coincide at index {index}")]
    DuplicateSamples { index: usize },

    /// No unit-circle parameter matches the requested tangent orientation.
    #[error("no unit-circle point with the requested tangent orientation")]
    OrientationAmbiguity,

    /// Chart evaluated outside its advertised domain.
    #[error("chart coordinates ({u}, {v}) outside the advertised domain")]
    OutOfDomain { u: f64, v: f64 },

    /// The chart fails the immersion condition at the evaluation point.
    #[error("chart is degenerate at ({u}, {v}): |f_u x f_v| = {cross_norm:.3e}")]
    DegenerateChart { u: f64, v: f64, cross_norm: f64 },

    /// The Birkhoff normal is numerically tangent to the surface.
    #[error("Birkhoff normal nearly tangent to the surface: <eta, xi> = {inner:.3e}")]
    NearTangentNormal { inner: f64 },

    /// The Birkhoff-Gauss differential has a complex eigenvalue pair beyond tolerance.
    #[error("shape differential numerically non-diagonalizable (discriminant {discriminant:.3e})")]
    DefectiveDifferential { discriminant: f64 },

    /// Conjugate direction requested for an asymptotic input vector.
    #[error("input direction is asymptotic; conjugate direction degenerates to the input")]
    AsymptoticInput,

    /// Flow started at an umbilic point where principal directions are undefined.
    #[error("principal directions undefined at umbilic start point")]
    UmbilicStart,

    /// Coercivity diagnostic requested at an umbilic point.
    #[error("diagnostic undefined at umbilic point")]
    UmbilicPoint,

    /// Section tracing stalled (corrector failure or chart exit).
    #[error("section trace stalled after {steps} steps: {reason}")]
    TraceStall { steps: usize, reason: String },

    /// Section plane is degenerate because the direction is parallel to the normal.
    #[error("section plane degenerate: direction parallel to the Birkhoff normal")]
    PlaneDegenerate,

    /// Operation requires a closed surface chart.
    #[error("operation requires a closed built-in surface, chart family is open")]
    OpenSurface,

    /// Asymptotic-curve integration started where the fundamental form is definite.
    #[error("fundamental form definite at start point; no asymptotic direction")]
    DefiniteStart,

    /// Matrix inversion failed inside a kernel.
    #[error("singular linear system in {context}")]
    SingularMatrix { context: &'static str },

    /// The admissibility sweep rejected the norm; curvature output would be
    /// unreliable and is refused.
    #[error("norm failed the admissibility check: min du eigenvalue {min_eigen:.3e} <= {tol:.3e} near v = [{}, {}, {}]", worst.x, worst.y, worst.z)]
    InadmissibleNorm {
        min_eigen: f64,
        tol: f64,
        worst: Vector3<f64>,
    },
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, GeomError>;
