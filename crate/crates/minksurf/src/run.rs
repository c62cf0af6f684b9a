//! Grid sweeps, profile and trace exports, and the invariant-suite runner
//! behind the CLI commands.
//!
//! Sweeps parallelize over grid points with order-preserving collection, so
//! the exported tables are byte-identical regardless of thread count.
//! Per-point failures land in the `error` column instead of aborting a sweep.

use nalgebra::{Vector2, Vector3};
use rayon::prelude::*;
use serde::Serialize;

use crate::chart::SurfaceChart;
use crate::config::{Options, RunConfig};
use crate::curvature::{analyze, report_from_analysis, AsymptoticDirections, CurvatureReport};
use crate::error::{GeomError, Result};
use crate::flow::{
    enclosing_ball_contact, integrate_asymptotic_curve, integrate_curvature_line, FlowKind,
};
use crate::norm::NormModel;
use crate::plane::{
    circular_curvature_ratio, circular_curvature_reparam, restrict_norm, PlaneCurveSample,
};
use crate::section::oracle_normal_curvature;
use crate::support::{check_admissible, support_differential, support_point, tangent_basis};

/// One row of the curvature-field export.
#[derive(Debug, Clone, Serialize)]
pub struct FieldRecord {
    pub u: f64,
    pub v: f64,
    pub p: [f64; 3],
    pub xi: [f64; 3],
    pub eta: [f64; 3],
    pub lambda1: f64,
    pub lambda2: f64,
    #[serde(rename = "K")]
    pub gaussian: f64,
    #[serde(rename = "H_mean")]
    pub mean: f64,
    #[serde(rename = "K_e")]
    pub euclidean_gaussian: f64,
    pub umbilic: bool,
    pub tau_residual: f64,
    pub rank_h: u8,
    pub error: Option<String>,
}

impl FieldRecord {
    fn from_report(q: &Vector2<f64>, r: &CurvatureReport) -> Self {
        FieldRecord {
            u: q.x,
            v: q.y,
            p: r.point.into(),
            xi: r.xi.into(),
            eta: r.eta.into(),
            lambda1: r.lambda1,
            lambda2: r.lambda2,
            gaussian: r.gaussian,
            mean: r.mean,
            euclidean_gaussian: r.euclidean_gaussian,
            umbilic: r.umbilic,
            tau_residual: r.transversal_residual,
            rank_h: r.fundamental_rank,
            error: None,
        }
    }

    fn from_error(q: &Vector2<f64>, e: &GeomError) -> Self {
        FieldRecord {
            u: q.x,
            v: q.y,
            p: [f64::NAN; 3],
            xi: [f64::NAN; 3],
            eta: [f64::NAN; 3],
            lambda1: f64::NAN,
            lambda2: f64::NAN,
            gaussian: f64::NAN,
            mean: f64::NAN,
            euclidean_gaussian: f64::NAN,
            umbilic: false,
            tau_residual: f64::NAN,
            rank_h: 0,
            error: Some(e.to_string()),
        }
    }
}

/// Row-major grid over the chart domain, `u` fastest, endpoints included.
pub fn grid_points(chart: &SurfaceChart, nx: usize, ny: usize) -> Vec<Vector2<f64>> {
    let d = &chart.domain;
    let mut out = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        let v = d.v_min + (d.v_max - d.v_min) * j as f64 / (ny - 1) as f64;
        for i in 0..nx {
            let u = d.u_min + (d.u_max - d.u_min) * i as f64 / (nx - 1) as f64;
            out.push(Vector2::new(u, v));
        }
    }
    out
}

/// Admissibility gate shared by the sweep commands: refuses to produce
/// curvature output for a norm whose support differential degenerates.
pub fn admissibility_gate(config: &RunConfig) -> Result<()> {
    let report = check_admissible(
        &config.norm,
        config.options.admissible_samples,
        config.options.admissible_tol,
    )?;
    if !report.pass {
        return Err(GeomError::InadmissibleNorm {
            min_eigen: report.min_eigen_du,
            tol: config.options.admissible_tol,
            worst: report.worst_v,
        });
    }
    Ok(())
}

/// Curvature field over the configured grid. Point failures are recorded in
/// the `error` column; an inadmissible norm aborts the whole sweep.
pub fn run_curvature_field(config: &RunConfig) -> Result<Vec<FieldRecord>> {
    admissibility_gate(config)?;
    let points = grid_points(&config.chart, config.grid.0, config.grid.1);
    Ok(points
        .par_iter()
        .map(|q| match curvature_at(config, q) {
            Ok(r) => FieldRecord::from_report(q, &r),
            Err(e) => FieldRecord::from_error(q, &e),
        })
        .collect())
}

fn curvature_at(config: &RunConfig, q: &Vector2<f64>) -> Result<CurvatureReport> {
    let analysis = analyze(&config.norm, &config.chart, q)?;
    report_from_analysis(&analysis)
}

/// One row of the normal-curvature profile export.
#[derive(Debug, Clone, Serialize)]
pub struct ProfileRecord {
    pub theta: f64,
    pub k: f64,
    pub lambda1: f64,
    pub lambda2: f64,
}

/// Normal curvature over a fan of tangent directions at the configured
/// point, with the principal curvatures as reference lines. Directions are
/// parametrized by angle in the orthonormal tangent frame.
pub fn run_normal_profile(config: &RunConfig) -> Result<Vec<ProfileRecord>> {
    admissibility_gate(config)?;
    let analysis = analyze(&config.norm, &config.chart, &config.options.point)?;
    let report = report_from_analysis(&analysis)?;
    let frame = tangent_basis(&analysis.jet.normal);

    let n = config.options.directions;
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let theta = std::f64::consts::TAU * i as f64 / n as f64;
        let ambient = theta.cos() * frame[0] + theta.sin() * frame[1];
        let x_chart = analysis.to_chart(&ambient)?;
        out.push(ProfileRecord {
            theta,
            k: analysis.normal_curvature(&x_chart)?,
            lambda1: report.lambda1,
            lambda2: report.lambda2,
        });
    }
    Ok(out)
}

/// One row of the section-trace export.
#[derive(Debug, Clone, Serialize)]
pub struct SectionRecord {
    pub dir_index: usize,
    pub theta: f64,
    pub sample_index: usize,
    pub u: f64,
    pub v: f64,
    pub p: [f64; 3],
    pub plane_x: f64,
    pub plane_y: f64,
    /// Circular curvature of this section at the base point.
    pub circ_curvature: f64,
    /// Closed-form normal curvature in the same direction.
    pub k_formula: f64,
}

/// Traces a fan of plane sections at the configured point. The configured
/// `direction` is the first section; the rest spread over a half turn of the
/// tangent plane.
pub fn run_sections(config: &RunConfig) -> Result<Vec<SectionRecord>> {
    admissibility_gate(config)?;
    let analysis = analyze(&config.norm, &config.chart, &config.options.point)?;
    let frame = tangent_basis(&analysis.jet.normal);
    let n = config.options.directions;

    let mut out = Vec::new();
    for i in 0..n {
        let (theta, x_chart) = if i == 0 {
            let x = config.options.direction;
            let ambient = analysis.to_ambient(&x);
            (ambient.dot(&frame[1]).atan2(ambient.dot(&frame[0])), x)
        } else {
            let theta = std::f64::consts::PI * i as f64 / n as f64;
            let ambient = theta.cos() * frame[0] + theta.sin() * frame[1];
            (theta, analysis.to_chart(&ambient)?)
        };
        let k_formula = analysis.normal_curvature(&x_chart)?;
        let (k, section) = oracle_normal_curvature(
            &config.norm,
            &config.chart,
            &config.options.point,
            &x_chart,
            config.options.arc_extent,
            config.options.trace_step,
        )?;
        for (j, (qc, p)) in section
            .chart_points
            .iter()
            .zip(&section.samples)
            .enumerate()
        {
            out.push(SectionRecord {
                dir_index: i,
                theta,
                sample_index: j,
                u: qc.x,
                v: qc.y,
                p: (*p).into(),
                plane_x: section.projected.points[j].x,
                plane_y: section.projected.points[j].y,
                circ_curvature: k,
                k_formula,
            });
        }
    }
    Ok(out)
}

/// One row of the flow-trace export.
#[derive(Debug, Clone, Serialize)]
pub struct LineRecord {
    pub trace: &'static str,
    pub step: usize,
    pub u: f64,
    pub v: f64,
    pub p: [f64; 3],
    pub lambda: f64,
    pub residual: f64,
    pub stop_reason: &'static str,
}

fn stop_name(reason: crate::flow::StopReason) -> &'static str {
    use crate::flow::StopReason::*;
    match reason {
        LengthReached => "length_reached",
        UmbilicEncountered => "umbilic_encountered",
        DomainExit => "domain_exit",
        DirectionUndefined => "direction_undefined",
        DefiniteRegion => "definite_region",
    }
}

/// Integrates both principal traces from the configured point, plus the two
/// asymptotic branches where the fundamental form is indefinite.
pub fn run_lines(config: &RunConfig) -> Result<Vec<LineRecord>> {
    admissibility_gate(config)?;
    let o = &config.options;
    let mut out = Vec::new();

    let mut push_trace = |name: &'static str, trace: &crate::flow::FlowlineTrace| {
        for (i, (q, p)) in trace.points.iter().zip(&trace.ambient).enumerate() {
            out.push(LineRecord {
                trace: name,
                step: i,
                u: q.x,
                v: q.y,
                p: (*p).into(),
                lambda: trace.lambdas.get(i).copied().unwrap_or(f64::NAN),
                residual: trace.residuals.get(i).copied().unwrap_or(f64::NAN),
                stop_reason: stop_name(trace.stop_reason),
            });
        }
    };

    for (name, kind) in [
        ("principal_1", FlowKind::Principal1),
        ("principal_2", FlowKind::Principal2),
    ] {
        match integrate_curvature_line(
            &config.norm,
            &config.chart,
            &o.point,
            kind,
            o.flow_step,
            o.max_length,
        ) {
            Ok(trace) => push_trace(name, &trace),
            Err(GeomError::UmbilicStart) => {}
            Err(e) => return Err(e),
        }
    }
    for (name, kind) in [
        ("asymptotic_a", FlowKind::AsymptoticA),
        ("asymptotic_b", FlowKind::AsymptoticB),
    ] {
        match integrate_asymptotic_curve(
            &config.norm,
            &config.chart,
            &o.point,
            kind,
            o.flow_step,
            o.max_length,
        ) {
            Ok(trace) => push_trace(name, &trace),
            Err(GeomError::DefiniteStart) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// One record of the invariant suite.
#[derive(Debug, Clone, Serialize)]
pub struct CheckRecord {
    pub name: &'static str,
    pub witnesses: usize,
    pub worst: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl CheckRecord {
    /// Pass iff the worst residual stays at or below the threshold.
    fn residual(name: &'static str, witnesses: usize, worst: f64, threshold: f64) -> Self {
        CheckRecord {
            name,
            witnesses,
            worst,
            threshold,
            pass: worst <= threshold && worst.is_finite(),
        }
    }

    /// Pass iff the measured value stays at or above the threshold.
    fn floor(name: &'static str, witnesses: usize, value: f64, threshold: f64) -> Self {
        CheckRecord {
            name,
            witnesses,
            worst: value,
            threshold,
            pass: value >= threshold && value.is_finite(),
        }
    }

    fn failed(name: &'static str, err: &GeomError) -> Self {
        let _ = err;
        CheckRecord {
            name,
            witnesses: 0,
            worst: f64::NAN,
            threshold: 0.0,
            pass: false,
        }
    }
}

/// Deterministic unit directions used by the norm-level checks.
fn fibonacci_directions(n: usize) -> Vec<Vector3<f64>> {
    let golden = std::f64::consts::PI * (3.0 - 5.0f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - (2.0 * i as f64 + 1.0) / n as f64;
            let r = (1.0 - z * z).max(0.0).sqrt();
            let phi = golden * i as f64;
            Vector3::new(r * phi.cos(), r * phi.sin(), z).normalize()
        })
        .collect()
}

/// Runs the full invariant suite on the configured norm and surface. Returns
/// one record per invariant; the process exit status is nonzero iff any
/// record fails.
pub fn run_check(config: &RunConfig) -> Result<Vec<CheckRecord>> {
    let norm = &config.norm;
    let chart = &config.chart;
    let o = &config.options;
    // ----- norm-level checks -----
    let mut records = vec![
        check_norm_homogeneity(norm),
        check_support_on_sphere(norm),
        check_support_symmetry(norm),
        check_support_vs_fd(norm),
    ];

    let admissible = check_admissible(norm, o.admissible_samples, o.admissible_tol)?;
    records.push(CheckRecord::floor(
        "admissible_min_eigen",
        admissible.samples,
        admissible.min_eigen_du,
        o.admissible_tol,
    ));
    let norm_ok = admissible.pass;

    records.push(check_plane_methods(norm));

    // ----- surface-level checks (skipped for inadmissible norms) -----
    if norm_ok {
        let points = grid_points(chart, config.grid.0.min(12), config.grid.1.min(12));
        let mut analyses = Vec::new();
        for q in &points {
            match analyze(norm, chart, q) {
                Ok(a) => analyses.push((*q, a)),
                Err(e) => {
                    records.push(CheckRecord::failed("grid_analysis", &e));
                    break;
                }
            }
        }

        records.push(check_jet_fd(chart, &points));
        records.push(check_xi_orthogonality(chart, &points));
        records.push(check_birkhoff_orthogonality(norm, &analyses));
        records.push(check_equiaffinity(&analyses));
        records.push(check_chain_rule(&analyses));
        records.push(check_self_adjointness(&analyses));
        records.push(check_fundamental_cross(&analyses));
        records.push(check_weingarten(&analyses));
        records.extend(check_profiles(&analyses, o));
        records.push(check_asymptotic_zero(norm, &analyses));
        records.push(check_conjugacy(&analyses));
        records.push(check_sign_equivalences(&analyses, o));
        records.push(check_oracle(norm, chart, &analyses, o));
        records.push(check_curvature_line(norm, chart, &analyses, o));

        if is_sphere_family(chart) {
            records.push(check_umbilic_classification(&analyses, o));
            records.push(check_center_recovery(chart, &analyses));
        }
        if chart.is_closed() && centered_at_origin(chart) {
            match enclosing_ball_contact(norm, chart, 24, 24) {
                Ok(c) => records.push(CheckRecord::floor(
                    "enclosing_ball_contact",
                    1,
                    c.gaussian * c.radius * c.radius,
                    1.0 - 1e-3,
                )),
                Err(e) => records.push(CheckRecord::failed("enclosing_ball_contact", &e)),
            }
        }
    }

    Ok(records)
}

fn is_sphere_family(chart: &SurfaceChart) -> bool {
    matches!(
        chart.family,
        crate::chart::ChartFamily::EuclideanSphere { .. }
            | crate::chart::ChartFamily::MinkowskiSphere { .. }
    )
}

fn centered_at_origin(chart: &SurfaceChart) -> bool {
    match &chart.family {
        crate::chart::ChartFamily::MinkowskiSphere { center, .. } => center.norm() == 0.0,
        _ => true,
    }
}

fn check_norm_homogeneity(norm: &NormModel) -> CheckRecord {
    let mut worst: f64 = 0.0;
    let mut witnesses = 0;
    for v in fibonacci_directions(24) {
        let x = 1.3 * v;
        let Ok(base) = norm.jet(&x) else {
            return CheckRecord::failed("norm_homogeneity", &GeomError::ZeroVector);
        };
        for t in [0.5, 2.0, 10.0] {
            let Ok(scaled) = norm.jet(&(t * x)) else {
                return CheckRecord::failed("norm_homogeneity", &GeomError::ZeroVector);
            };
            let dv = (scaled.value - t * base.value).abs() / (t * base.value).max(1.0);
            let dg = (scaled.gradient - base.gradient).norm() / base.gradient.norm().max(1.0);
            let dh =
                (scaled.hessian - base.hessian / t).norm() / (base.hessian.norm() / t).max(1.0);
            worst = worst.max(dv).max(dg).max(dh);
            witnesses += 1;
        }
    }
    CheckRecord::residual("norm_homogeneity", witnesses, worst, 1e-9)
}

fn check_support_on_sphere(norm: &NormModel) -> CheckRecord {
    let analytic = norm.dual_jet(&Vector3::z()).is_some();
    let tol = if analytic { 1e-9 } else { 1e-7 };
    let dirs = fibonacci_directions(200);
    let mut worst: f64 = 0.0;
    for v in &dirs {
        match support_point(norm, v).and_then(|s| norm.value(&s.point)) {
            Ok(f) => worst = worst.max((f - 1.0).abs()),
            Err(e) => return CheckRecord::failed("support_point_on_sphere", &e),
        }
    }
    CheckRecord::residual("support_point_on_sphere", dirs.len(), worst, tol)
}

fn check_support_symmetry(norm: &NormModel) -> CheckRecord {
    let dirs = fibonacci_directions(100);
    let mut worst: f64 = 0.0;
    for v in &dirs {
        match support_differential(norm, v) {
            Ok(s) => {
                let du = s.differential.unwrap();
                worst = worst.max((du[(0, 1)] - du[(1, 0)]).abs());
            }
            Err(e) => return CheckRecord::failed("support_differential_symmetry", &e),
        }
    }
    CheckRecord::residual("support_differential_symmetry", dirs.len(), worst, 1e-8)
}

fn check_support_vs_fd(norm: &NormModel) -> CheckRecord {
    let dirs = fibonacci_directions(16);
    let step = 1e-5;
    let mut worst: f64 = 0.0;
    for v in &dirs {
        let s = match support_differential(norm, v) {
            Ok(s) => s,
            Err(e) => return CheckRecord::failed("support_differential_vs_fd", &e),
        };
        let du = s.differential.unwrap();
        for (j, w) in s.basis.iter().enumerate() {
            let vp = (v + step * w).normalize();
            let vm = (v - step * w).normalize();
            let (up, um) = match (support_point(norm, &vp), support_point(norm, &vm)) {
                (Ok(a), Ok(b)) => (a.point, b.point),
                _ => {
                    return CheckRecord::failed(
                        "support_differential_vs_fd",
                        &GeomError::ZeroVector,
                    )
                }
            };
            let fd = (up - um) / (2.0 * step);
            for i in 0..2 {
                worst = worst.max((du[(i, j)] - fd.dot(&s.basis[i])).abs());
            }
        }
    }
    CheckRecord::residual("support_differential_vs_fd", dirs.len(), worst, 1e-4)
}

fn check_plane_methods(norm: &NormModel) -> CheckRecord {
    // ratio vs reparametrization circular curvature on homothets of the
    // restricted unit circle
    let plane = match restrict_norm(norm, &Vector3::x(), &Vector3::y()) {
        Ok(p) => p,
        Err(e) => return CheckRecord::failed("circular_curvature_methods", &e),
    };
    let mut worst: f64 = 0.0;
    let mut witnesses = 0;
    for rho in [0.5, 2.0] {
        for theta0 in [0.3, 2.5] {
            let mut pts = Vec::new();
            for i in 0..=20 {
                let theta = theta0 + (i as f64 - 10.0) * 1e-3 / rho;
                match plane.circle_jet(theta) {
                    Ok(jet) => pts.push(rho * jet.point),
                    Err(e) => return CheckRecord::failed("circular_curvature_methods", &e),
                }
            }
            let curve = match PlaneCurveSample::new(pts, 10) {
                Ok(c) => c,
                Err(e) => return CheckRecord::failed("circular_curvature_methods", &e),
            };
            let (a, b) = match (
                circular_curvature_ratio(&plane, &curve),
                circular_curvature_reparam(&plane, &curve),
            ) {
                (Ok(a), Ok(b)) => (a, b),
                (Err(e), _) | (_, Err(e)) => {
                    return CheckRecord::failed("circular_curvature_methods", &e)
                }
            };
            worst = worst.max((a - b).abs()).max((a - 1.0 / rho).abs());
            witnesses += 1;
        }
    }
    CheckRecord::residual("circular_curvature_methods", witnesses, worst, 1e-3)
}

fn check_jet_fd(chart: &SurfaceChart, points: &[Vector2<f64>]) -> CheckRecord {
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for q in points.iter().step_by(7) {
        let jet = match chart.jet(q) {
            Ok(j) => j,
            Err(e) => return CheckRecord::failed("chart_jet_vs_fd", &e),
        };
        let pos = |du: f64, dv: f64| chart.position(&Vector2::new(q.x + du, q.y + dv));
        let (pp, pm, qp, qm) = match (pos(h, 0.0), pos(-h, 0.0), pos(0.0, h), pos(0.0, -h)) {
            (Ok(a), Ok(b), Ok(c), Ok(d)) => (a, b, c, d),
            _ => return CheckRecord::failed("chart_jet_vs_fd", &GeomError::ZeroVector),
        };
        let scale = jet.f_u.norm().max(jet.f_v.norm()).max(1.0);
        worst = worst.max((jet.f_u - (pp - pm) / (2.0 * h)).norm() / scale);
        worst = worst.max((jet.f_v - (qp - qm) / (2.0 * h)).norm() / scale);
    }
    CheckRecord::residual("chart_jet_vs_fd", points.len().div_ceil(7), worst, 1e-6)
}

fn check_xi_orthogonality(chart: &SurfaceChart, points: &[Vector2<f64>]) -> CheckRecord {
    let mut worst: f64 = 0.0;
    for q in points {
        match chart.jet(q) {
            Ok(jet) => {
                worst = worst.max(jet.normal.dot(&jet.f_u).abs() / jet.f_u.norm());
                worst = worst.max(jet.normal.dot(&jet.f_v).abs() / jet.f_v.norm());
            }
            Err(e) => return CheckRecord::failed("gauss_map_orthogonality", &e),
        }
    }
    CheckRecord::residual("gauss_map_orthogonality", points.len(), worst, 1e-10)
}

type Analyses = [(Vector2<f64>, crate::curvature::PointAnalysis)];

fn check_birkhoff_orthogonality(norm: &NormModel, analyses: &Analyses) -> CheckRecord {
    let mut worst: f64 = 0.0;
    for (_, a) in analyses {
        let Ok(jet) = norm.jet(&a.eta) else {
            return CheckRecord::failed("birkhoff_orthogonality", &GeomError::ZeroVector);
        };
        let g = jet.gradient.norm();
        worst = worst.max(jet.gradient.dot(&a.jet.f_u).abs() / (g * a.jet.f_u.norm()));
        worst = worst.max(jet.gradient.dot(&a.jet.f_v).abs() / (g * a.jet.f_v.norm()));
    }
    CheckRecord::residual("birkhoff_orthogonality", analyses.len(), worst, 1e-9)
}

fn check_equiaffinity(analyses: &Analyses) -> CheckRecord {
    let worst = analyses
        .iter()
        .map(|(_, a)| a.transversal_residual)
        .fold(0.0, f64::max);
    CheckRecord::residual("equiaffinity_tau", analyses.len(), worst, 1e-4)
}

fn check_chain_rule(analyses: &Analyses) -> CheckRecord {
    let worst = analyses
        .iter()
        .map(|(_, a)| a.chain_residual)
        .fold(0.0, f64::max);
    CheckRecord::residual("chain_rule", analyses.len(), worst, 1e-4)
}

fn check_self_adjointness(analyses: &Analyses) -> CheckRecord {
    let mut worst: f64 = 0.0;
    for (_, a) in analyses {
        match report_from_analysis(a) {
            Ok(r) => worst = worst.max(r.self_adjoint_residual),
            Err(e) => return CheckRecord::failed("h_self_adjointness", &e),
        }
    }
    CheckRecord::residual("h_self_adjointness", analyses.len(), worst, 1e-6)
}

fn check_fundamental_cross(analyses: &Analyses) -> CheckRecord {
    let worst = analyses
        .iter()
        .map(|(_, a)| a.fundamental_cross_residual)
        .fold(0.0, f64::max);
    CheckRecord::residual("fundamental_form_cross_check", analyses.len(), worst, 1e-6)
}

fn check_weingarten(analyses: &Analyses) -> CheckRecord {
    // finite differences against the analytic operator; truncation grows
    // toward the shrunken polar edges of sphere-like charts
    let worst = analyses
        .iter()
        .map(|(_, a)| (a.gauss_differential - a.gauss_weingarten).abs().max())
        .fold(0.0, f64::max);
    CheckRecord::residual("weingarten_agreement", analyses.len(), worst, 1e-5)
}

/// Bounds, extremum locations, homogeneity, and umbilic spread of the
/// normal-curvature profile.
fn check_profiles(analyses: &Analyses, o: &Options) -> Vec<CheckRecord> {
    let n_dirs = 64;
    let mut bound_worst: f64 = 0.0;
    let mut homog_worst: f64 = 0.0;
    let mut umbilic_spread: f64 = 0.0;
    let mut nonumbilic_margin: f64 = f64::INFINITY;
    let mut has_umbilic = false;
    let mut has_nonumbilic = false;

    for (_, a) in analyses {
        let Ok(report) = report_from_analysis(a) else {
            continue;
        };
        let frame = tangent_basis(&a.jet.normal);
        let mut kmin = f64::INFINITY;
        let mut kmax = f64::NEG_INFINITY;
        for i in 0..n_dirs {
            let theta = std::f64::consts::TAU * i as f64 / n_dirs as f64;
            let ambient = theta.cos() * frame[0] + theta.sin() * frame[1];
            let Ok(x) = a.to_chart(&ambient) else {
                continue;
            };
            let Ok(k) = a.normal_curvature(&x) else {
                continue;
            };
            kmin = kmin.min(k);
            kmax = kmax.max(k);
            bound_worst = bound_worst.max(k - report.lambda1).max(report.lambda2 - k);
            if i % 16 == 0 {
                if let (Ok(k2), Ok(km)) =
                    (a.normal_curvature(&(2.0 * x)), a.normal_curvature(&(-x)))
                {
                    homog_worst = homog_worst.max((k2 - k).abs()).max((km - k).abs());
                }
            }
        }
        let gap = report.lambda1 - report.lambda2;
        if report.umbilic {
            has_umbilic = true;
            umbilic_spread = umbilic_spread.max(kmax - kmin);
        } else if gap > 1e-3 {
            has_nonumbilic = true;
            nonumbilic_margin = nonumbilic_margin.min((kmax - kmin) / (0.5 * gap));
        }
    }

    let mut out = vec![
        CheckRecord::residual(
            "normal_curvature_bounds",
            analyses.len() * n_dirs,
            bound_worst,
            1e-5,
        ),
        CheckRecord::residual(
            "normal_curvature_homogeneity",
            analyses.len() * 4,
            homog_worst,
            1e-12,
        ),
    ];
    if has_umbilic {
        out.push(CheckRecord::residual(
            "umbilic_profile_spread",
            analyses.len(),
            umbilic_spread,
            1e-5,
        ));
    }
    if has_nonumbilic {
        out.push(CheckRecord::floor(
            "nonumbilic_profile_spread",
            analyses.len(),
            nonumbilic_margin,
            1.0,
        ));
    }
    let _ = o;
    out
}

fn check_asymptotic_zero(norm: &NormModel, analyses: &Analyses) -> CheckRecord {
    let mut worst: f64 = 0.0;
    let mut witnesses = 0;
    for (_, a) in analyses {
        match a.asymptotic_directions(norm) {
            Ok(AsymptoticDirections::Pair(d1, d2)) => {
                for d in [d1, d2] {
                    if let Ok(k) = a.normal_curvature(&d.chart) {
                        worst = worst.max(k.abs());
                        witnesses += 1;
                    }
                }
            }
            Ok(_) => {}
            Err(e) => return CheckRecord::failed("asymptotic_normal_curvature", &e),
        }
    }
    CheckRecord::residual("asymptotic_normal_curvature", witnesses, worst, 1e-5)
}

fn check_conjugacy(analyses: &Analyses) -> CheckRecord {
    let mut worst: f64 = 0.0;
    let mut witnesses = 0;
    for (_, a) in analyses {
        let Ok(report) = report_from_analysis(a) else {
            continue;
        };
        if report.umbilic || (report.lambda1 - report.lambda2).abs() < 1e-3 {
            continue;
        }
        let h = 0.5 * (a.fundamental + a.fundamental.transpose());
        let val = (report.dir1_chart.transpose() * h * report.dir2_chart)[(0, 0)].abs();
        worst = worst.max(val / h.abs().max().max(1e-30));
        witnesses += 1;
    }
    CheckRecord::residual("principal_directions_conjugate", witnesses, worst, 1e-6)
}

fn check_sign_equivalences(analyses: &Analyses, o: &Options) -> CheckRecord {
    let mut witnesses = 0;
    let mut failures = 0;
    for (_, a) in analyses {
        match a.sign_equivalences(o.sign_tol) {
            Ok(signs) => {
                if let Some(ok) = signs.consistent {
                    witnesses += 1;
                    if !ok {
                        failures += 1;
                    }
                }
            }
            Err(e) => return CheckRecord::failed("sign_equivalences", &e),
        }
    }
    CheckRecord::residual("sign_equivalences", witnesses, failures as f64, 0.0)
}

fn check_oracle(
    norm: &NormModel,
    chart: &SurfaceChart,
    analyses: &Analyses,
    o: &Options,
) -> CheckRecord {
    let mut worst: f64 = 0.0;
    let mut witnesses = 0;
    let stride = (analyses.len() / o.oracle_samples.max(1)).max(1);
    for (q, a) in analyses.iter().step_by(stride) {
        let frame = tangent_basis(&a.jet.normal);
        let theta = 0.9 + witnesses as f64;
        let ambient = theta.cos() * frame[0] + theta.sin() * frame[1];
        let Ok(x) = a.to_chart(&ambient) else {
            continue;
        };
        let Ok(expected) = a.normal_curvature(&x) else {
            continue;
        };
        match oracle_normal_curvature(norm, chart, q, &x, o.arc_extent, o.trace_step) {
            Ok((k, _)) => {
                worst = worst.max((k - expected).abs());
                witnesses += 1;
            }
            Err(GeomError::TraceStall { .. }) | Err(GeomError::OutOfDomain { .. }) => {
                // sections near chart edges may leave the domain; not a failure
            }
            Err(e) => return CheckRecord::failed("section_oracle_agreement", &e),
        }
        if witnesses >= o.oracle_samples {
            break;
        }
    }
    CheckRecord::residual("section_oracle_agreement", witnesses, worst, 1e-3)
}

fn check_curvature_line(
    norm: &NormModel,
    chart: &SurfaceChart,
    analyses: &Analyses,
    o: &Options,
) -> CheckRecord {
    // first clearly non-umbilic grid point seeds a short trace
    for (q, a) in analyses {
        let Ok(report) = report_from_analysis(a) else {
            continue;
        };
        if (report.lambda1 - report.lambda2).abs() < 1e-2 {
            continue;
        }
        match integrate_curvature_line(norm, chart, q, FlowKind::Principal1, o.flow_step, 0.2) {
            Ok(trace) => {
                let worst = trace.residuals.iter().cloned().fold(0.0, f64::max);
                return CheckRecord::residual(
                    "curvature_line_residual",
                    trace.points.len(),
                    worst,
                    1e-3,
                );
            }
            Err(GeomError::UmbilicStart) => continue,
            Err(e) => return CheckRecord::failed("curvature_line_residual", &e),
        }
    }
    // all-umbilic surfaces have no curvature-line field to test
    CheckRecord::residual("curvature_line_residual", 0, 0.0, 1e-3)
}

fn check_umbilic_classification(analyses: &Analyses, o: &Options) -> CheckRecord {
    // sphere families are everywhere umbilic; classify with the configured
    // tolerance so a zero tolerance is a deliberate negative control
    let mut failures = 0;
    for (_, a) in analyses {
        let Ok(report) = report_from_analysis(a) else {
            failures += 1;
            continue;
        };
        let gap = (report.lambda1 - report.lambda2).abs();
        if gap > o.umbilic_tol * (report.lambda1.abs() + report.lambda2.abs()).max(1.0) {
            failures += 1;
        }
    }
    CheckRecord::residual(
        "umbilic_classification",
        analyses.len(),
        failures as f64,
        0.0,
    )
}

fn check_center_recovery(chart: &SurfaceChart, analyses: &Analyses) -> CheckRecord {
    let center = match &chart.family {
        crate::chart::ChartFamily::MinkowskiSphere { center, .. } => *center,
        _ => Vector3::zeros(),
    };
    let mut worst: f64 = 0.0;
    for (_, a) in analyses {
        let Ok(report) = report_from_analysis(a) else {
            continue;
        };
        if report.lambda1.abs() < 1e-12 {
            continue;
        }
        let recovered = report.point - report.eta / report.lambda1;
        worst = worst.max((recovered - center).norm());
    }
    CheckRecord::residual("sphere_center_recovery", analyses.len(), worst, 1e-3)
}

// ---------------------------------------------------------------------------
// serialization

/// Formats a float with 17 significant digits, round-trip safe.
fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

/// CSV with the exact field-record schema; numbers carry 17 significant
/// digits so the export round-trips bit-exactly.
pub fn field_csv(records: &[FieldRecord]) -> String {
    let mut out = String::from(
        "u,v,p_x,p_y,p_z,xi_x,xi_y,xi_z,eta_x,eta_y,eta_z,lambda1,lambda2,K,H_mean,K_e,umbilic,tau_residual,rank_h,error\n",
    );
    for r in records {
        let fields = [
            fmt(r.u),
            fmt(r.v),
            fmt(r.p[0]),
            fmt(r.p[1]),
            fmt(r.p[2]),
            fmt(r.xi[0]),
            fmt(r.xi[1]),
            fmt(r.xi[2]),
            fmt(r.eta[0]),
            fmt(r.eta[1]),
            fmt(r.eta[2]),
            fmt(r.lambda1),
            fmt(r.lambda2),
            fmt(r.gaussian),
            fmt(r.mean),
            fmt(r.euclidean_gaussian),
            r.umbilic.to_string(),
            fmt(r.tau_residual),
            r.rank_h.to_string(),
            r.error.clone().unwrap_or_default().replace(',', ";"),
        ];
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

pub fn profile_csv(records: &[ProfileRecord]) -> String {
    let mut out = String::from("theta,k,lambda1,lambda2\n");
    for r in records {
        out.push_str(&format!(
            "{},{},{},{}\n",
            fmt(r.theta),
            fmt(r.k),
            fmt(r.lambda1),
            fmt(r.lambda2)
        ));
    }
    out
}

pub fn section_csv(records: &[SectionRecord]) -> String {
    let mut out = String::from(
        "dir_index,theta,sample_index,u,v,p_x,p_y,p_z,plane_x,plane_y,circ_curvature,k_formula\n",
    );
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.dir_index,
            fmt(r.theta),
            r.sample_index,
            fmt(r.u),
            fmt(r.v),
            fmt(r.p[0]),
            fmt(r.p[1]),
            fmt(r.p[2]),
            fmt(r.plane_x),
            fmt(r.plane_y),
            fmt(r.circ_curvature),
            fmt(r.k_formula)
        ));
    }
    out
}

pub fn line_csv(records: &[LineRecord]) -> String {
    let mut out = String::from("trace,step,u,v,p_x,p_y,p_z,lambda,residual,stop_reason\n");
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            r.trace,
            r.step,
            fmt(r.u),
            fmt(r.v),
            fmt(r.p[0]),
            fmt(r.p[1]),
            fmt(r.p[2]),
            fmt(r.lambda),
            fmt(r.residual),
            r.stop_reason
        ));
    }
    out
}

pub fn check_csv(records: &[CheckRecord]) -> String {
    let mut out = String::from("name,witnesses,worst,threshold,pass\n");
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.name,
            r.witnesses,
            fmt(r.worst),
            fmt(r.threshold),
            r.pass
        ));
    }
    out
}

/// JSON export mirroring the record field names.
pub fn to_json<T: Serialize>(records: &[T]) -> String {
    serde_json::to_string_pretty(records).expect("serializable records")
}
