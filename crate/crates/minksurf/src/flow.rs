//! Flows of the principal and asymptotic direction fields, and the
//! global-shape diagnostics built on them.
//!
//! Curvature lines solve `q' = E_i(q)` for a principal direction field;
//! along such a curve the Birkhoff normal satisfies
//! `(eta . gamma)'(t) = lambda(t) gamma'(t)`, and the per-step defect of that
//! identity is recorded as the trace residual. Asymptotic curves follow a
//! root branch of `h(X, X) = 0` through regions where the fundamental form
//! stays indefinite.
//!
//! Direction fields carry a sign ambiguity only, so orientation continuity is
//! maintained by aligning each evaluation with the previous direction.

use nalgebra::{Matrix3, Vector2, Vector3};

use crate::chart::SurfaceChart;
use crate::curvature::{analyze, report_from_analysis, AsymptoticDirections, UMBILIC_TOL};
use crate::error::{GeomError, Result};
use crate::norm::NormModel;
use crate::support::support_point;

/// Which direction field a trace follows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlowKind {
    Principal1,
    Principal2,
    AsymptoticA,
    AsymptoticB,
}

/// Why a trace stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    LengthReached,
    UmbilicEncountered,
    DomainExit,
    DirectionUndefined,
    /// Asymptotic traces only: the fundamental form became definite.
    DefiniteRegion,
}

/// An integrated trace of a direction field.
#[derive(Debug, Clone)]
pub struct FlowlineTrace {
    pub kind: FlowKind,
    /// Chart coordinates along the trace.
    pub points: Vec<Vector2<f64>>,
    /// Ambient positions of the trace points.
    pub ambient: Vec<Vector3<f64>>,
    /// The followed eigenvalue along the trace (principal traces only).
    pub lambdas: Vec<f64>,
    /// Per-point defect: for principal traces the curvature-line identity
    /// residual, for asymptotic traces the absolute normal curvature.
    pub residuals: Vec<f64>,
    pub stop_reason: StopReason,
}

/// A direction field evaluation: unit ambient direction and its chart
/// coordinates, plus the data the stop rules need.
struct FieldSample {
    chart_dir: Vector2<f64>,
    ambient_dir: Vector3<f64>,
    lambda: f64,
    umbilic_gap: f64,
}

fn principal_field(
    norm: &NormModel,
    chart: &SurfaceChart,
    q: &Vector2<f64>,
    kind: FlowKind,
    align: Option<&Vector3<f64>>,
) -> Result<FieldSample> {
    let analysis = analyze(norm, chart, q)?;
    let report = report_from_analysis(&analysis)?;
    let (dir_chart, lambda) = match kind {
        FlowKind::Principal1 => (report.dir1_chart, report.lambda1),
        FlowKind::Principal2 => (report.dir2_chart, report.lambda2),
        _ => unreachable!("principal_field called with an asymptotic kind"),
    };
    let mut ambient = analysis.to_ambient(&dir_chart);
    let mut chart_dir = dir_chart;
    let scale = ambient.norm();
    ambient /= scale;
    chart_dir /= scale;
    if let Some(prev) = align {
        if ambient.dot(prev) < 0.0 {
            ambient = -ambient;
            chart_dir = -chart_dir;
        }
    }
    Ok(FieldSample {
        chart_dir,
        ambient_dir: ambient,
        lambda,
        umbilic_gap: (report.lambda1 - report.lambda2).abs()
            / (report.lambda1.abs() + report.lambda2.abs()).max(1.0),
    })
}

/// Integrates the curvature line through `q0` following the chosen principal
/// field with a fixed-step fourth-order Runge-Kutta scheme. Arc length is
/// measured in the ambient Euclidean metric.
pub fn integrate_curvature_line(
    norm: &NormModel,
    chart: &SurfaceChart,
    q0: &Vector2<f64>,
    kind: FlowKind,
    step: f64,
    max_length: f64,
) -> Result<FlowlineTrace> {
    assert!(
        matches!(kind, FlowKind::Principal1 | FlowKind::Principal2),
        "curvature lines follow principal fields"
    );
    let start = principal_field(norm, chart, q0, kind, None)?;
    if start.umbilic_gap <= 10.0 * UMBILIC_TOL {
        return Err(GeomError::UmbilicStart);
    }

    let mut points = vec![*q0];
    let mut lambdas = vec![start.lambda];
    let mut dir = start.ambient_dir;
    let mut stop = StopReason::LengthReached;
    let n_steps = (max_length / step).ceil() as usize;

    'integrate: for _ in 0..n_steps {
        let q = *points.last().unwrap();
        // RK4 stages, each realigned to the direction at the step start
        let mut stage_dirs = Vec::with_capacity(4);
        let eval = |at: Vector2<f64>| -> Result<FieldSample> {
            principal_field(norm, chart, &at, kind, Some(&dir))
        };
        let k1 = match eval(q) {
            Ok(s) => s,
            Err(GeomError::OutOfDomain { .. }) => {
                stop = StopReason::DomainExit;
                break 'integrate;
            }
            Err(GeomError::DefectiveDifferential { .. }) => {
                stop = StopReason::DirectionUndefined;
                break 'integrate;
            }
            Err(e) => return Err(e),
        };
        if k1.umbilic_gap <= 10.0 * UMBILIC_TOL {
            stop = StopReason::UmbilicEncountered;
            break;
        }
        stage_dirs.push(k1.chart_dir);
        for (c, prev) in [(0.5, 0), (0.5, 1), (1.0, 2)] {
            let probe = q + step * c * stage_dirs[prev];
            match eval(probe) {
                Ok(s) => stage_dirs.push(s.chart_dir),
                Err(GeomError::OutOfDomain { .. }) => {
                    stop = StopReason::DomainExit;
                    break 'integrate;
                }
                Err(GeomError::DefectiveDifferential { .. }) => {
                    stop = StopReason::DirectionUndefined;
                    break 'integrate;
                }
                Err(e) => return Err(e),
            }
        }
        let q_next = q + step / 6.0
            * (stage_dirs[0] + 2.0 * stage_dirs[1] + 2.0 * stage_dirs[2] + stage_dirs[3]);

        let sample = match eval(q_next) {
            Ok(s) => s,
            Err(GeomError::OutOfDomain { .. }) => {
                stop = StopReason::DomainExit;
                break;
            }
            Err(GeomError::DefectiveDifferential { .. }) => {
                stop = StopReason::DirectionUndefined;
                break;
            }
            Err(e) => return Err(e),
        };
        if sample.umbilic_gap <= 10.0 * UMBILIC_TOL {
            stop = StopReason::UmbilicEncountered;
            break;
        }
        dir = sample.ambient_dir;
        points.push(q_next);
        lambdas.push(sample.lambda);
    }

    let ambient: Vec<Vector3<f64>> = points
        .iter()
        .map(|p| chart.position(p))
        .collect::<Result<_>>()?;

    // Curvature-line identity residual by central differences along the trace.
    let mut residuals = vec![0.0; points.len()];
    if points.len() >= 3 {
        let etas: Vec<Vector3<f64>> = points
            .iter()
            .map(|p| {
                let jet = chart.jet(p)?;
                Ok(support_point(norm, &jet.normal)?.point)
            })
            .collect::<Result<_>>()?;
        for i in 1..points.len() - 1 {
            let d_eta = etas[i + 1] - etas[i - 1];
            let d_gamma = ambient[i + 1] - ambient[i - 1];
            residuals[i] = (d_eta - lambdas[i] * d_gamma).norm() / d_gamma.norm();
        }
        residuals[0] = residuals[1];
        let last = points.len() - 1;
        residuals[last] = residuals[last - 1];
    }

    Ok(FlowlineTrace {
        kind,
        points,
        ambient,
        lambdas,
        residuals,
        stop_reason: stop,
    })
}

/// Asymptotic branch selection at a point: the two roots ordered by their
/// chart angle, aligned to `align` when given.
fn asymptotic_field(
    norm: &NormModel,
    chart: &SurfaceChart,
    q: &Vector2<f64>,
    kind: FlowKind,
    align: Option<&Vector3<f64>>,
) -> Result<Option<FieldSample>> {
    let analysis = analyze(norm, chart, q)?;
    let dirs = analysis.asymptotic_directions(norm)?;
    let (a, b) = match dirs {
        AsymptoticDirections::Pair(a, b) => (a, b),
        _ => return Ok(None),
    };
    let pick = match align {
        Some(prev) => {
            // orientation continuity: the branch most parallel to the
            // previous direction
            let score =
                |d: &crate::curvature::TangentDirection| d.ambient.normalize().dot(prev).abs();
            if score(&a) >= score(&b) {
                a
            } else {
                b
            }
        }
        None => {
            // deterministic initial ordering by chart angle modulo pi
            let angle = |d: &crate::curvature::TangentDirection| {
                let mut t = d.chart.y.atan2(d.chart.x);
                if t < 0.0 {
                    t += std::f64::consts::PI;
                }
                t
            };
            let (first, second) = if angle(&a) <= angle(&b) {
                (a, b)
            } else {
                (b, a)
            };
            match kind {
                FlowKind::AsymptoticA => first,
                FlowKind::AsymptoticB => second,
                _ => unreachable!(),
            }
        }
    };
    let mut ambient = pick.ambient;
    let mut chart_dir = pick.chart;
    let scale = ambient.norm();
    ambient /= scale;
    chart_dir /= scale;
    if let Some(prev) = align {
        if ambient.dot(prev) < 0.0 {
            ambient = -ambient;
            chart_dir = -chart_dir;
        }
    }
    let k = analysis.normal_curvature(&chart_dir)?;
    Ok(Some(FieldSample {
        chart_dir,
        ambient_dir: ambient,
        lambda: k,
        umbilic_gap: f64::INFINITY,
    }))
}

/// Integrates an asymptotic curve through `q0` along the chosen root branch
/// of `h(X, X) = 0`. The recorded residual is the absolute normal curvature
/// along the trace, which vanishes exactly on asymptotic directions.
pub fn integrate_asymptotic_curve(
    norm: &NormModel,
    chart: &SurfaceChart,
    q0: &Vector2<f64>,
    kind: FlowKind,
    step: f64,
    max_length: f64,
) -> Result<FlowlineTrace> {
    assert!(
        matches!(kind, FlowKind::AsymptoticA | FlowKind::AsymptoticB),
        "asymptotic traces follow asymptotic branches"
    );
    let start = asymptotic_field(norm, chart, q0, kind, None)?.ok_or(GeomError::DefiniteStart)?;

    let mut points = vec![*q0];
    let mut residuals = vec![start.lambda.abs()];
    let mut dir = start.ambient_dir;
    let mut stop = StopReason::LengthReached;
    let n_steps = (max_length / step).ceil() as usize;

    for _ in 0..n_steps {
        let q = *points.last().unwrap();
        // midpoint rule; asymptotic fields lose smoothness at the parabolic
        // boundary, so high-order stages buy nothing
        let k1 = match asymptotic_field(norm, chart, &q, kind, Some(&dir)) {
            Ok(Some(s)) => s,
            Ok(None) => {
                stop = StopReason::DefiniteRegion;
                break;
            }
            Err(GeomError::OutOfDomain { .. }) => {
                stop = StopReason::DomainExit;
                break;
            }
            Err(e) => return Err(e),
        };
        let mid = q + 0.5 * step * k1.chart_dir;
        let k2 = match asymptotic_field(norm, chart, &mid, kind, Some(&k1.ambient_dir)) {
            Ok(Some(s)) => s,
            Ok(None) => {
                stop = StopReason::DefiniteRegion;
                break;
            }
            Err(GeomError::OutOfDomain { .. }) => {
                stop = StopReason::DomainExit;
                break;
            }
            Err(e) => return Err(e),
        };
        let q_next = q + step * k2.chart_dir;
        let sample = match asymptotic_field(norm, chart, &q_next, kind, Some(&k2.ambient_dir)) {
            Ok(Some(s)) => s,
            Ok(None) => {
                stop = StopReason::DefiniteRegion;
                break;
            }
            Err(GeomError::OutOfDomain { .. }) => {
                stop = StopReason::DomainExit;
                break;
            }
            Err(e) => return Err(e),
        };
        dir = sample.ambient_dir;
        points.push(q_next);
        residuals.push(sample.lambda.abs());
    }

    let ambient: Vec<Vector3<f64>> = points
        .iter()
        .map(|p| chart.position(p))
        .collect::<Result<_>>()?;

    Ok(FlowlineTrace {
        kind,
        points,
        ambient,
        lambdas: Vec::new(),
        residuals,
        stop_reason: stop,
    })
}

/// Outcome of the coercive-convexity probe at a point.
#[derive(Debug, Clone, Copy)]
pub struct CoercivityReport {
    /// Component along `V1` of the ambient derivative `D_{V1} V2`.
    pub projection: f64,
    /// Derivative of that component along the `V2`-trajectory.
    pub projection_derivative: f64,
    /// Whether the hypothesis applies here, i.e. the projection vanishes
    /// within the supplied tolerance.
    pub applicable: bool,
}

/// Unit principal fields at `q`, sign-aligned to the given references.
fn principal_pair(
    norm: &NormModel,
    chart: &SurfaceChart,
    q: &Vector2<f64>,
    align: Option<(&Vector3<f64>, &Vector3<f64>)>,
) -> Result<(FieldSample, FieldSample)> {
    let v1 = principal_field(norm, chart, q, FlowKind::Principal1, align.map(|a| a.0))?;
    let v2 = principal_field(norm, chart, q, FlowKind::Principal2, align.map(|a| a.1))?;
    Ok((v1, v2))
}

/// `V1`-component of `D_{V1} V2` at `q` in the frame `{V1, V2, eta}`, by
/// ambient central differences of the sign-aligned `V2` field along `V1`.
fn projection_at(
    norm: &NormModel,
    chart: &SurfaceChart,
    q: &Vector2<f64>,
    align: Option<(&Vector3<f64>, &Vector3<f64>)>,
) -> Result<f64> {
    let (v1, v2) = principal_pair(norm, chart, q, align)?;
    let eps = 1e-5;
    let dq = eps * v1.chart_dir;
    let plus = principal_field(
        norm,
        chart,
        &(q + dq),
        FlowKind::Principal2,
        Some(&v2.ambient_dir),
    )?;
    let minus = principal_field(
        norm,
        chart,
        &(q - dq),
        FlowKind::Principal2,
        Some(&v2.ambient_dir),
    )?;
    let deriv = (plus.ambient_dir - minus.ambient_dir) / (2.0 * eps);

    let jet = chart.jet(q)?;
    let eta = support_point(norm, &jet.normal)?.point;
    let frame = Matrix3::from_columns(&[v1.ambient_dir, v2.ambient_dir, eta]);
    let coeffs = frame.lu().solve(&deriv).ok_or(GeomError::SingularMatrix {
        context: "principal frame decomposition",
    })?;
    Ok(coeffs.x)
}

/// Coercive-convexity diagnostic: evaluates the `V1`-projection of
/// `D_{V1} V2` and, when it vanishes within `tol`, its derivative along the
/// `V2`-trajectory through `q` (negative means the hypothesis holds).
pub fn coercivity_diagnostic(
    norm: &NormModel,
    chart: &SurfaceChart,
    q: &Vector2<f64>,
    tol: f64,
) -> Result<CoercivityReport> {
    let probe = principal_field(norm, chart, q, FlowKind::Principal1, None);
    match probe {
        Err(e) => return Err(e),
        Ok(s) if s.umbilic_gap <= 10.0 * UMBILIC_TOL => return Err(GeomError::UmbilicPoint),
        Ok(_) => {}
    }
    let (v1_ref, v2_ref) = principal_pair(norm, chart, q, None)?;
    let projection = projection_at(norm, chart, q, None)?;
    let applicable = projection.abs() <= tol;

    // derivative of the projection along the V2-trajectory via short traces
    let span = 5e-3;
    let fwd = integrate_curvature_line(norm, chart, q, FlowKind::Principal2, 1e-3, span)?;
    let q_fwd = *fwd.points.last().unwrap();
    let mut bwd_dir = -v2_ref.ambient_dir;
    let mut q_bwd = *q;
    // backward trace by explicit midpoint steps against the field
    for _ in 0..5 {
        let s = principal_field(norm, chart, &q_bwd, FlowKind::Principal2, Some(&bwd_dir))?;
        let mid = q_bwd + 0.5e-3 * s.chart_dir;
        let sm = principal_field(
            norm,
            chart,
            &mid,
            FlowKind::Principal2,
            Some(&s.ambient_dir),
        )?;
        q_bwd += 1e-3 * sm.chart_dir;
        bwd_dir = sm.ambient_dir;
    }
    let align = (&v1_ref.ambient_dir, &v2_ref.ambient_dir);
    let f_fwd = projection_at(norm, chart, &q_fwd, Some(align))?;
    let f_bwd = projection_at(norm, chart, &q_bwd, Some(align))?;
    let projection_derivative = (f_fwd - f_bwd) / (2.0 * span);

    Ok(CoercivityReport {
        projection,
        projection_derivative,
        applicable,
    })
}

/// Contact data of the smallest norm ball centered at the origin that
/// contains a closed surface.
#[derive(Debug, Clone, Copy)]
pub struct EnclosingBallContact {
    /// Chart coordinates of the contact point.
    pub chart_point: Vector2<f64>,
    /// Ambient contact point.
    pub point: Vector3<f64>,
    /// Radius of the enclosing ball, `max F . f`.
    pub radius: f64,
    /// Minkowski Gaussian curvature at the contact point.
    pub gaussian: f64,
}

/// Finds the contact point of the smallest origin-centered norm ball
/// containing the (closed) surface: a grid sweep of `F . f` refined by a few
/// local quadratic maximization steps.
pub fn enclosing_ball_contact(
    norm: &NormModel,
    chart: &SurfaceChart,
    nx: usize,
    ny: usize,
) -> Result<EnclosingBallContact> {
    if !chart.is_closed() {
        return Err(GeomError::OpenSurface);
    }
    let d = &chart.domain;
    let value = |q: &Vector2<f64>| -> Result<f64> { norm.value(&chart.position(q)?) };

    let mut best_q = Vector2::new(d.u_min, d.v_min);
    let mut best = f64::NEG_INFINITY;
    for i in 0..nx {
        for j in 0..ny {
            let q = Vector2::new(
                d.u_min + (d.u_max - d.u_min) * (i as f64 + 0.5) / nx as f64,
                d.v_min + (d.v_max - d.v_min) * (j as f64 + 0.5) / ny as f64,
            );
            let v = value(&q)?;
            if v > best {
                best = v;
                best_q = q;
            }
        }
    }

    // Newton refinement of the maximum with finite-difference derivatives,
    // clamped to one grid cell.
    let cell = Vector2::new(
        (d.u_max - d.u_min) / nx as f64,
        (d.v_max - d.v_min) / ny as f64,
    );
    let fd = 1e-5;
    for _ in 0..8 {
        let f0 = value(&best_q)?;
        let mut grad = Vector2::zeros();
        let mut hess = nalgebra::Matrix2::zeros();
        for a in 0..2 {
            let mut qp = best_q;
            let mut qm = best_q;
            qp[a] += fd;
            qm[a] -= fd;
            let (fp, fm) = (value(&qp)?, value(&qm)?);
            grad[a] = (fp - fm) / (2.0 * fd);
            hess[(a, a)] = (fp - 2.0 * f0 + fm) / (fd * fd);
        }
        let mut qpp = best_q;
        qpp.x += fd;
        qpp.y += fd;
        let mut qpm = best_q;
        qpm.x += fd;
        qpm.y -= fd;
        let mut qmp = best_q;
        qmp.x -= fd;
        qmp.y += fd;
        let mut qmm = best_q;
        qmm.x -= fd;
        qmm.y -= fd;
        let mixed = (value(&qpp)? - value(&qpm)? - value(&qmp)? + value(&qmm)?) / (4.0 * fd * fd);
        hess[(0, 1)] = mixed;
        hess[(1, 0)] = mixed;

        let step = match hess.try_inverse() {
            Some(inv) if hess[(0, 0)] < 0.0 && hess.determinant() > 0.0 => -(inv * grad),
            _ => break,
        };
        let clamped = Vector2::new(step.x.clamp(-cell.x, cell.x), step.y.clamp(-cell.y, cell.y));
        let candidate = best_q + clamped;
        if value(&candidate)? >= f0 {
            best_q = candidate;
        } else {
            break;
        }
        if clamped.norm() < 1e-12 {
            break;
        }
    }

    let report = crate::curvature::curvature_report(norm, chart, &best_q)?;
    Ok(EnclosingBallContact {
        chart_point: best_q,
        point: report.point,
        radius: norm.value(&report.point)?,
        gaussian: report.gaussian,
    })
}
