//! Plane-section oracle for the normal curvature.
//!
//! The normal curvature at `p` in a tangent direction `X` is, by definition,
//! the circular curvature of the curve cut out of the surface by the affine
//! plane through `p` spanned by the Birkhoff normal and `X`, measured in the
//! restricted plane norm. This module computes it exactly that way: trace the
//! section with a predictor-corrector march in chart coordinates, project it
//! into the plane, and hand it to the plane-curvature estimator. No shape
//! differential enters, which makes the result an independent check of the
//! closed-form normal-curvature expression.

use nalgebra::{Vector2, Vector3};

use crate::chart::SurfaceChart;
use crate::curvature::birkhoff_normal;
use crate::error::{GeomError, Result};
use crate::norm::NormModel;
use crate::plane::{circular_curvature_ratio, restrict_norm, PlaneCurveSample};

/// Default half-length of the traced arc, in norm length.
pub const DEFAULT_ARC_EXTENT: f64 = 0.2;
/// Default norm-length marching step.
pub const DEFAULT_STEP: f64 = 1e-3;
/// Corrector convergence threshold on the plane residual.
const CORRECTOR_TOL: f64 = 1e-12;

/// A traced intersection of the surface with a normal plane.
#[derive(Debug, Clone)]
pub struct PlaneSectionCurve {
    /// The surface point the section passes through.
    pub base_point: Vector3<f64>,
    /// Euclidean unit normal of the section plane `span{eta, X}`.
    pub plane_normal: Vector3<f64>,
    /// Orthonormal plane basis used for projection. The first vector points
    /// along `X`; the second is oriented so that the Birkhoff normal lies on
    /// its negative side, which fixes the sign of the circular curvature.
    pub basis: [Vector3<f64>; 2],
    /// Ambient samples, ordered along the curve with the base in the middle.
    pub samples: Vec<Vector3<f64>>,
    /// The matching chart coordinates.
    pub chart_points: Vec<Vector2<f64>>,
    pub base_index: usize,
    /// The samples in plane coordinates, relative to the base point.
    pub projected: PlaneCurveSample,
    /// Circular curvature at the base point, filled by the oracle.
    pub circular_curvature: Option<f64>,
}

/// Traces the section of the surface by the plane through `f(q)` spanned by
/// the Birkhoff normal and the tangent direction `x_chart`, marching
/// `arc_extent` of norm length to each side in steps of `step`.
///
/// The predictor moves along the chart direction whose image is tangent to
/// the plane; the corrector is a 1D Newton iteration on the plane residual
/// along the transverse chart direction, so every sample lies exactly on the
/// chart image and on the plane up to the corrector tolerance.
pub fn trace_section(
    norm: &NormModel,
    chart: &SurfaceChart,
    q: &Vector2<f64>,
    x_chart: &Vector2<f64>,
    arc_extent: f64,
    step: f64,
) -> Result<PlaneSectionCurve> {
    let jet = chart.jet(q)?;
    let eta = birkhoff_normal(norm, &jet)?;
    let x_amb = x_chart.x * jet.f_u + x_chart.y * jet.f_v;
    if x_amb.norm() < 1e-14 {
        return Err(GeomError::ZeroVector);
    }
    let cross = eta.cross(&x_amb);
    if cross.norm() <= 1e-12 * eta.norm() * x_amb.norm() {
        return Err(GeomError::PlaneDegenerate);
    }
    let plane_normal = cross.normalize();
    let base_point = jet.point;

    // Oriented plane basis: b1 along X, b2 with <eta, b2> < 0. In these
    // coordinates the unit circle of the restricted norm runs
    // counterclockwise with the orientation that makes a Minkowski sphere
    // section positively curved.
    let b1 = x_amb.normalize();
    let eta_perp = eta - b1 * eta.dot(&b1);
    let b2 = -eta_perp.normalize();

    let n_steps = (arc_extent / step).ceil() as usize;
    let forward = march(
        norm,
        chart,
        q,
        &base_point,
        &plane_normal,
        &x_amb,
        step,
        n_steps,
    )?;
    let backward = march(
        norm,
        chart,
        q,
        &base_point,
        &plane_normal,
        &(-x_amb),
        step,
        n_steps,
    )?;

    let mut chart_points = Vec::with_capacity(2 * n_steps + 1);
    chart_points.extend(backward.into_iter().rev());
    chart_points.push(*q);
    let base_index = chart_points.len() - 1;
    chart_points.extend(forward);

    let mut samples = Vec::with_capacity(chart_points.len());
    for qc in &chart_points {
        samples.push(chart.position(qc)?);
    }

    let projected_points: Vec<Vector2<f64>> = samples
        .iter()
        .map(|s| {
            let d = s - base_point;
            Vector2::new(d.dot(&b1), d.dot(&b2))
        })
        .collect();
    let projected = PlaneCurveSample::new(projected_points, base_index)?;

    Ok(PlaneSectionCurve {
        base_point,
        plane_normal,
        basis: [b1, b2],
        samples,
        chart_points,
        base_index,
        projected,
        circular_curvature: None,
    })
}

/// Marches one side of the section. Returns the chart points past the base,
/// nearest first.
#[allow(clippy::too_many_arguments)]
fn march(
    norm: &NormModel,
    chart: &SurfaceChart,
    q0: &Vector2<f64>,
    base_point: &Vector3<f64>,
    plane_normal: &Vector3<f64>,
    start_dir: &Vector3<f64>,
    step: f64,
    n_steps: usize,
) -> Result<Vec<Vector2<f64>>> {
    let mut out = Vec::with_capacity(n_steps);
    let mut qc = *q0;
    let mut prev_dir = *start_dir;

    for step_count in 0..n_steps {
        let jet = chart.jet(&qc).map_err(|e| stall(step_count, &e))?;

        // chart direction whose ambient image is tangent to the plane
        let a = -jet.f_v.dot(plane_normal);
        let b = jet.f_u.dot(plane_normal);
        let mut t_chart = Vector2::new(a, b);
        let t_amb = a * jet.f_u + b * jet.f_v;
        if t_amb.norm() < 1e-14 {
            return Err(stall_msg(step_count, "section tangent undefined"));
        }
        let speed = norm.value(&t_amb).map_err(|e| stall(step_count, &e))?;
        t_chart /= speed;
        if t_amb.dot(&prev_dir) < 0.0 {
            t_chart = -t_chart;
        }
        prev_dir = t_chart.x * jet.f_u + t_chart.y * jet.f_v;

        // predictor
        let mut q_next = qc + step * t_chart;

        // corrector: 1D Newton on the plane residual along the transverse
        // chart direction
        let mut converged = false;
        for _ in 0..12 {
            let j = chart.jet(&q_next).map_err(|e| stall(step_count, &e))?;
            let g = (j.point - base_point).dot(plane_normal);
            if g.abs() <= CORRECTOR_TOL {
                converged = true;
                break;
            }
            let w = Vector2::new(j.f_u.dot(plane_normal), j.f_v.dot(plane_normal));
            let slope = w.norm_squared();
            if slope < 1e-30 {
                return Err(stall_msg(step_count, "corrector direction degenerate"));
            }
            q_next -= (g / slope) * w;
        }
        if !converged {
            return Err(stall_msg(step_count, "corrector did not converge"));
        }
        qc = q_next;
        out.push(qc);
    }
    Ok(out)
}

fn stall(steps: usize, err: &GeomError) -> GeomError {
    GeomError::TraceStall {
        steps,
        reason: err.to_string(),
    }
}

fn stall_msg(steps: usize, reason: &str) -> GeomError {
    GeomError::TraceStall {
        steps,
        reason: reason.to_string(),
    }
}

/// Normal curvature at `q` in direction `x_chart` measured from the traced
/// plane section, the first-principles counterpart of the closed-form
/// expression. Returns the curvature and the traced section.
pub fn oracle_normal_curvature(
    norm: &NormModel,
    chart: &SurfaceChart,
    q: &Vector2<f64>,
    x_chart: &Vector2<f64>,
    arc_extent: f64,
    step: f64,
) -> Result<(f64, PlaneSectionCurve)> {
    let mut section = trace_section(norm, chart, q, x_chart, arc_extent, step)?;
    let plane_model = restrict_norm(norm, &section.basis[0], &section.basis[1])?;
    let k = circular_curvature_ratio(&plane_model, &section.projected)?;
    section.circular_curvature = Some(k);
    Ok((k, section))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curvature::analyze;
    use approx::assert_relative_eq;

    #[test]
    fn sphere_sections_are_great_circles() {
        // Normal sections of the round sphere pass through the center.
        let chart = SurfaceChart::euclidean_sphere(1.0);
        let q = Vector2::new(1.2, 0.7);
        let section = trace_section(
            &NormModel::euclidean(),
            &chart,
            &q,
            &Vector2::new(0.6, 0.4),
            0.2,
            1e-3,
        )
        .unwrap();
        for s in &section.samples {
            assert_relative_eq!(s.norm(), 1.0, max_relative = 1e-9);
            assert!((s - section.base_point).dot(&section.plane_normal).abs() <= 1e-9);
        }
    }

    #[test]
    fn minkowski_sphere_sections_are_central() {
        let norm = NormModel::quartic(0.1).unwrap();
        let center = Vector3::new(0.1, 0.2, -0.3);
        let chart = SurfaceChart::minkowski_sphere(norm.clone(), 2.0, center);
        let section = trace_section(
            &norm,
            &chart,
            &Vector2::new(1.0, 0.9),
            &Vector2::new(1.0, -0.5),
            0.2,
            1e-3,
        )
        .unwrap();
        for s in &section.samples {
            assert_relative_eq!(norm.value(&(s - center)).unwrap(), 2.0, max_relative = 1e-9);
            assert!((s - section.base_point).dot(&section.plane_normal).abs() <= 1e-9);
        }
    }

    #[test]
    fn graph_section_is_the_parabola() {
        let chart = SurfaceChart::graph(1.0, 1.0, 0.0);
        let section = trace_section(
            &NormModel::euclidean(),
            &chart,
            &Vector2::zeros(),
            &Vector2::new(1.0, 0.0),
            0.15,
            1e-3,
        )
        .unwrap();
        for s in &section.samples {
            assert!(s.y.abs() <= 1e-10, "section stays in the xz-plane");
            assert_relative_eq!(s.z, 0.5 * s.x * s.x, epsilon = 1e-10);
        }
    }

    #[test]
    fn oracle_on_minkowski_sphere_gives_inverse_radius() {
        let norm = NormModel::quartic(0.1).unwrap();
        let chart = SurfaceChart::minkowski_sphere(norm.clone(), 2.0, Vector3::zeros());
        for (q, x) in [
            (Vector2::new(1.0, 0.7), Vector2::new(1.0, 0.0)),
            (Vector2::new(1.4, 2.0), Vector2::new(0.3, 0.8)),
            (Vector2::new(2.0, 4.4), Vector2::new(-0.5, 0.5)),
        ] {
            let (k, _) = oracle_normal_curvature(&norm, &chart, &q, &x, 0.2, 1e-3).unwrap();
            assert_relative_eq!(k, 0.5, epsilon = 1e-3);
        }
    }

    #[test]
    fn oracle_on_plane_is_zero() {
        let chart = SurfaceChart::plane();
        let (k, _) = oracle_normal_curvature(
            &NormModel::quartic(0.1).unwrap(),
            &chart,
            &Vector2::new(0.1, 0.0),
            &Vector2::new(0.7, 0.7),
            0.2,
            1e-3,
        )
        .unwrap();
        assert!(k.abs() <= 1e-9, "plane sections are straight: {k:.2e}");
    }

    #[test]
    fn oracle_matches_closed_form_on_graphs() {
        // The defining agreement: section-trace curvature equals the
        // closed-form normal curvature.
        let norm = NormModel::quartic(0.1).unwrap();
        for (chart, q, x) in [
            (
                SurfaceChart::graph(1.0, 1.0, 0.0),
                Vector2::zeros(),
                Vector2::new(1.0, 0.0),
            ),
            (
                SurfaceChart::graph(1.0, 1.0, 0.0),
                Vector2::new(0.1, -0.1),
                Vector2::new(0.5, 1.0),
            ),
            (
                SurfaceChart::graph(1.0, -1.0, 0.3),
                Vector2::zeros(),
                Vector2::new(1.0, 0.2),
            ),
        ] {
            let analysis = analyze(&norm, &chart, &q).unwrap();
            let expected = analysis.normal_curvature(&x).unwrap();
            let (k, _) = oracle_normal_curvature(&norm, &chart, &q, &x, 0.2, 1e-3).unwrap();
            assert!(
                (k - expected).abs() <= 1e-3,
                "oracle {k:.6} vs closed form {expected:.6}"
            );
        }
    }

    #[test]
    fn oracle_negative_curvature_sign_agrees() {
        // Bowl with upward normal: sections bend away from eta, k = -1.
        let chart = SurfaceChart::graph(1.0, 1.0, 0.0);
        let (k, _) = oracle_normal_curvature(
            &NormModel::euclidean(),
            &chart,
            &Vector2::zeros(),
            &Vector2::new(1.0, 0.0),
            0.15,
            1e-3,
        )
        .unwrap();
        assert_relative_eq!(k, -1.0, epsilon = 1e-4);
    }

    #[test]
    fn oracle_matches_formula_under_rotated_norm() {
        use nalgebra::Matrix3;
        let c = 0.5f64.sqrt();
        let rot = Matrix3::new(c, -c, 0.0, c, c, 0.0, 0.0, 0.0, 1.0);
        let norm = NormModel::ellipsoid(rot * Matrix3::from_diagonal(&Vector3::new(1.0, 1.4, 1.9)))
            .unwrap();
        let chart = SurfaceChart::torus(2.0, 0.5);
        for (q, x) in [
            (Vector2::new(0.9, 0.7), Vector2::new(1.0, 0.4)),
            (Vector2::new(2.2, 2.9), Vector2::new(-0.3, 1.0)),
        ] {
            let expected = analyze(&norm, &chart, &q)
                .unwrap()
                .normal_curvature(&x)
                .unwrap();
            let (k, _) = oracle_normal_curvature(&norm, &chart, &q, &x, 0.2, 1e-3).unwrap();
            assert!(
                (k - expected).abs() <= 1e-3,
                "oracle {k:.6} vs formula {expected:.6}"
            );
        }
    }

    #[test]
    fn zero_direction_rejected() {
        let chart = SurfaceChart::plane();
        let err = trace_section(
            &NormModel::euclidean(),
            &chart,
            &Vector2::zeros(),
            &Vector2::zeros(),
            0.1,
            1e-3,
        )
        .unwrap_err();
        assert!(matches!(err, GeomError::ZeroVector));
    }
}
