//! Run configuration: a TOML document with a norm block, a surface block,
//! and per-command options.
//!
//! ```toml
//! command = "curvatures"
//!
//! [norm]
//! family = "quartic"
//! eps = 0.1
//!
//! [surface]
//! family = "minkowski_sphere"
//! radius = 2.0
//! grid = [20, 20]
//!
//! [options]
//! directions = 64
//! ```
//!
//! Everything outside the two family selectors has a documented default; see
//! the field docs on [`Options`].

use nalgebra::{Matrix3, Vector2, Vector3};
use serde::Deserialize;
use thiserror::Error;

use crate::chart::{Domain, SurfaceChart};
use crate::norm::NormModel;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("invalid config field `{field}`: {message}")]
    Validation { field: String, message: String },
}

fn invalid(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Validation {
        field: field.to_string(),
        message: message.into(),
    }
}

/// The CLI subcommands.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    /// Grid sweep of the curvature field.
    Curvatures,
    /// Normal-curvature profile over tangent directions at one point.
    NormalProfile,
    /// Plane-section traces at one point.
    Sections,
    /// Curvature-line and asymptotic-curve traces from one point.
    Lines,
    /// The invariant suite.
    Check,
}

impl Command {
    pub fn parse(s: &str) -> Option<Command> {
        match s {
            "curvatures" => Some(Command::Curvatures),
            "normal-profile" | "normal_profile" => Some(Command::NormalProfile),
            "sections" => Some(Command::Sections),
            "lines" => Some(Command::Lines),
            "check" => Some(Command::Check),
            _ => None,
        }
    }
}

/// Output format for exports.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

/// Command options with their defaults.
#[derive(Debug, Clone)]
pub struct Options {
    /// Evaluation point for `normal-profile`, `sections`, and `lines`;
    /// defaults to the domain center.
    pub point: Vector2<f64>,
    /// Tangent direction (chart coordinates) for `sections`.
    pub direction: Vector2<f64>,
    /// Number of tangent directions in profiles and section fans.
    pub directions: usize,
    /// Half arc length of section traces, in norm length.
    pub arc_extent: f64,
    /// Marching step of section traces.
    pub trace_step: f64,
    /// Integration step of flow traces.
    pub flow_step: f64,
    /// Arc-length budget of flow traces.
    pub max_length: f64,
    /// Relative gap below which principal curvatures count as equal.
    pub umbilic_tol: f64,
    /// Zero band for the sign-equivalence classification.
    pub sign_tol: f64,
    /// Smallest admissible eigenvalue of the support differential.
    pub admissible_tol: f64,
    /// Sample count of the admissibility sweep.
    pub admissible_samples: usize,
    /// Number of point/direction pairs in the section-oracle check.
    pub oracle_samples: usize,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            point: Vector2::new(f64::NAN, f64::NAN), // filled from the domain
            direction: Vector2::new(1.0, 0.0),
            directions: 64,
            arc_extent: crate::section::DEFAULT_ARC_EXTENT,
            trace_step: crate::section::DEFAULT_STEP,
            flow_step: 1e-3,
            max_length: 1.0,
            umbilic_tol: 1e-6,
            sign_tol: 1e-6,
            admissible_tol: 1e-6,
            admissible_samples: 500,
            oracle_samples: 12,
        }
    }
}

/// A fully validated run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    pub norm: NormModel,
    pub chart: SurfaceChart,
    pub grid: (usize, usize),
    pub options: Options,
    /// Family names kept for report labels.
    pub norm_name: String,
    pub surface_name: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    command: Option<String>,
    norm: RawNorm,
    surface: RawSurface,
    #[serde(default)]
    options: RawOptions,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNorm {
    family: String,
    eps: Option<f64>,
    matrix: Option<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSurface {
    family: String,
    radius: Option<f64>,
    center: Option<[f64; 3]>,
    semi_axes: Option<[f64; 3]>,
    major: Option<f64>,
    minor: Option<f64>,
    a: Option<f64>,
    b: Option<f64>,
    cross: Option<f64>,
    domain: Option<[f64; 4]>,
    grid: Option<[usize; 2]>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOptions {
    point: Option<[f64; 2]>,
    direction: Option<[f64; 2]>,
    directions: Option<usize>,
    arc_extent: Option<f64>,
    trace_step: Option<f64>,
    flow_step: Option<f64>,
    max_length: Option<f64>,
    umbilic_tol: Option<f64>,
    sign_tol: Option<f64>,
    admissible_tol: Option<f64>,
    admissible_samples: Option<usize>,
    oracle_samples: Option<usize>,
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;

    let command = match &raw.command {
        None => Command::Curvatures,
        Some(s) => {
            Command::parse(s).ok_or_else(|| invalid("command", format!("unknown command `{s}`")))?
        }
    };

    let norm = build_norm(&raw.norm)?;
    let (chart, grid) = build_surface(&raw.surface, &norm)?;
    let options = build_options(&raw.options, &chart)?;

    Ok(RunConfig {
        command,
        norm,
        chart,
        grid,
        options,
        norm_name: raw.norm.family.clone(),
        surface_name: raw.surface.family.clone(),
    })
}

fn build_norm(raw: &RawNorm) -> Result<NormModel, ConfigError> {
    match raw.family.as_str() {
        "euclidean" => Ok(NormModel::euclidean()),
        "quartic" => {
            let eps = raw
                .eps
                .ok_or_else(|| invalid("eps", "quartic norm needs `eps`"))?;
            if !eps.is_finite() || eps < 0.0 {
                return Err(invalid(
                    "eps",
                    format!("must be finite and >= 0, got {eps}"),
                ));
            }
            NormModel::quartic(eps).map_err(|e| invalid("eps", e.to_string()))
        }
        "ellipsoid" => {
            let m = raw.matrix.as_ref().ok_or_else(|| {
                invalid("matrix", "ellipsoid norm needs a 3x3 `matrix` (row-major)")
            })?;
            if m.len() != 9 {
                return Err(invalid(
                    "matrix",
                    format!("expected 9 entries, got {}", m.len()),
                ));
            }
            let matrix = Matrix3::from_row_slice(m);
            NormModel::ellipsoid(matrix).map_err(|_| invalid("matrix", "matrix is singular"))
        }
        other => Err(invalid("family", format!("unknown norm family `{other}`"))),
    }
}

fn build_surface(
    raw: &RawSurface,
    norm: &NormModel,
) -> Result<(SurfaceChart, (usize, usize)), ConfigError> {
    let radius = |field: &str| -> Result<f64, ConfigError> {
        let r = raw
            .radius
            .ok_or_else(|| invalid(field, "missing `radius`"))?;
        if !r.is_finite() || r <= 0.0 {
            return Err(invalid(field, format!("must be positive, got {r}")));
        }
        Ok(r)
    };

    let mut chart = match raw.surface_family()? {
        SurfaceFamily::Graph => SurfaceChart::graph(
            raw.a.unwrap_or(0.0),
            raw.b.unwrap_or(0.0),
            raw.cross.unwrap_or(0.0),
        ),
        SurfaceFamily::EuclideanSphere => SurfaceChart::euclidean_sphere(radius("radius")?),
        SurfaceFamily::MinkowskiSphere => {
            let center = raw.center.unwrap_or([0.0; 3]);
            SurfaceChart::minkowski_sphere(
                norm.clone(),
                radius("radius")?,
                Vector3::new(center[0], center[1], center[2]),
            )
        }
        SurfaceFamily::Ellipsoid => {
            let ax = raw
                .semi_axes
                .ok_or_else(|| invalid("semi_axes", "ellipsoid surface needs `semi_axes`"))?;
            if ax.iter().any(|a| !a.is_finite() || *a <= 0.0) {
                return Err(invalid("semi_axes", "must all be positive"));
            }
            SurfaceChart::ellipsoid(ax[0], ax[1], ax[2])
        }
        SurfaceFamily::Torus => {
            let major = raw
                .major
                .ok_or_else(|| invalid("major", "torus needs `major`"))?;
            let minor = raw
                .minor
                .ok_or_else(|| invalid("minor", "torus needs `minor`"))?;
            if !minor.is_finite() || !major.is_finite() || minor <= 0.0 || major <= minor {
                return Err(invalid("minor", "torus needs 0 < minor < major"));
            }
            SurfaceChart::torus(major, minor)
        }
        SurfaceFamily::Cylinder => SurfaceChart::cylinder(radius("radius")?),
    };

    if let Some(d) = raw.domain {
        if !(d[0] < d[1] && d[2] < d[3]) {
            return Err(invalid(
                "domain",
                "expected [u_min, u_max, v_min, v_max] with min < max",
            ));
        }
        chart = chart.with_domain(Domain::new(d[0], d[1], d[2], d[3]));
    }

    let grid = raw.grid.unwrap_or([20, 20]);
    if grid[0] < 2 || grid[1] < 2 {
        return Err(invalid(
            "grid",
            format!("needs at least 2x2, got {}x{}", grid[0], grid[1]),
        ));
    }

    Ok((chart, (grid[0], grid[1])))
}

enum SurfaceFamily {
    Graph,
    EuclideanSphere,
    MinkowskiSphere,
    Ellipsoid,
    Torus,
    Cylinder,
}

impl RawSurface {
    fn surface_family(&self) -> Result<SurfaceFamily, ConfigError> {
        match self.family.as_str() {
            "graph" | "plane" => Ok(SurfaceFamily::Graph),
            "euclidean_sphere" | "sphere" => Ok(SurfaceFamily::EuclideanSphere),
            "minkowski_sphere" => Ok(SurfaceFamily::MinkowskiSphere),
            "ellipsoid" => Ok(SurfaceFamily::Ellipsoid),
            "torus" => Ok(SurfaceFamily::Torus),
            "cylinder" => Ok(SurfaceFamily::Cylinder),
            other => Err(invalid(
                "family",
                format!("unknown surface family `{other}`"),
            )),
        }
    }
}

fn build_options(raw: &RawOptions, chart: &SurfaceChart) -> Result<Options, ConfigError> {
    let mut options = Options::default();
    let d = &chart.domain;
    options.point = Vector2::new(0.5 * (d.u_min + d.u_max), 0.5 * (d.v_min + d.v_max));

    if let Some(p) = raw.point {
        options.point = Vector2::new(p[0], p[1]);
        if p[0] < d.u_min || p[0] > d.u_max || p[1] < d.v_min || p[1] > d.v_max {
            return Err(invalid("point", "outside the chart domain"));
        }
    }
    if let Some(x) = raw.direction {
        options.direction = Vector2::new(x[0], x[1]);
        if options.direction.norm() < 1e-14 {
            return Err(invalid("direction", "must be nonzero"));
        }
    }
    if let Some(n) = raw.directions {
        if n < 4 {
            return Err(invalid("directions", "needs at least 4"));
        }
        options.directions = n;
    }

    let positive = |field: &str, target: &mut f64, value: Option<f64>| -> Result<(), ConfigError> {
        if let Some(v) = value {
            if !v.is_finite() || v <= 0.0 {
                return Err(invalid(field, format!("must be positive, got {v}")));
            }
            *target = v;
        }
        Ok(())
    };
    positive("arc_extent", &mut options.arc_extent, raw.arc_extent)?;
    positive("trace_step", &mut options.trace_step, raw.trace_step)?;
    positive("flow_step", &mut options.flow_step, raw.flow_step)?;
    positive("max_length", &mut options.max_length, raw.max_length)?;
    positive("sign_tol", &mut options.sign_tol, raw.sign_tol)?;
    positive(
        "admissible_tol",
        &mut options.admissible_tol,
        raw.admissible_tol,
    )?;

    // zero is allowed here: it is the documented negative control
    if let Some(v) = raw.umbilic_tol {
        if !v.is_finite() || v < 0.0 {
            return Err(invalid(
                "umbilic_tol",
                format!("must be finite and >= 0, got {v}"),
            ));
        }
        options.umbilic_tol = v;
    }
    if let Some(n) = raw.admissible_samples {
        if n == 0 {
            return Err(invalid("admissible_samples", "must be at least 1"));
        }
        options.admissible_samples = n;
    }
    if let Some(n) = raw.oracle_samples {
        if n == 0 {
            return Err(invalid("oracle_samples", "must be at least 1"));
        }
        options.oracle_samples = n;
    }
    Ok(options)
}
