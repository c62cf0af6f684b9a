//! Parametric surface charts with analytic two-jets.
//!
//! Every built-in family evaluates its position and first and second partial
//! derivatives in closed form; the Euclidean Gauss map comes from the chart
//! orientation, `xi = (f_u x f_v) / |f_u x f_v|`.
//!
//! Charts advertise a rectangular domain on which they are regular. Sphere
//! charts shrink the polar range to stay off the coordinate singularity;
//! points near a pole are reached by rotating the chart, not by evaluating at
//! the singularity. Evaluation tolerates a small overshoot past the advertised
//! rectangle so that centered finite differences work at the boundary.

use nalgebra::{Matrix3, Vector2, Vector3};

use crate::error::{GeomError, Result};
use crate::norm::NormModel;

/// Fractional slack around the advertised domain accepted by evaluators.
const DOMAIN_SLACK: f64 = 0.05;
/// Immersion threshold on |f_u x f_v| relative to |f_u| |f_v|.
const REGULARITY_TOL: f64 = 1e-10;

/// Rectangular chart domain `[u_min, u_max] x [v_min, v_max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Domain {
    pub u_min: f64,
    pub u_max: f64,
    pub v_min: f64,
    pub v_max: f64,
}

impl Domain {
    pub fn new(u_min: f64, u_max: f64, v_min: f64, v_max: f64) -> Self {
        Domain {
            u_min,
            u_max,
            v_min,
            v_max,
        }
    }

    pub fn diagonal(&self) -> f64 {
        let du = self.u_max - self.u_min;
        let dv = self.v_max - self.v_min;
        (du * du + dv * dv).sqrt()
    }

    fn contains_with_slack(&self, q: &Vector2<f64>) -> bool {
        let su = DOMAIN_SLACK * (self.u_max - self.u_min);
        let sv = DOMAIN_SLACK * (self.v_max - self.v_min);
        q.x >= self.u_min - su
            && q.x <= self.u_max + su
            && q.y >= self.v_min - sv
            && q.y <= self.v_max + sv
    }
}

/// Built-in chart families.
#[derive(Debug, Clone)]
pub enum ChartFamily {
    /// Height graph `(u, v, (a u^2 + b v^2)/2 + c u v)`.
    Graph { a: f64, b: f64, cross: f64 },
    /// Round sphere of the given radius, polar-azimuthal chart.
    EuclideanSphere { radius: f64 },
    /// Sphere of a norm: `center + radius * d / F(d)` over spherical directions.
    MinkowskiSphere {
        norm: NormModel,
        radius: f64,
        center: Vector3<f64>,
    },
    /// Coordinate ellipsoid with the given semi-axes.
    Ellipsoid { a: f64, b: f64, c: f64 },
    /// Torus with major radius `major` and tube radius `minor`.
    Torus { major: f64, minor: f64 },
    /// Right circular cylinder around the z-axis.
    Cylinder { radius: f64 },
    /// Image of another chart under an invertible linear map.
    LinearImage {
        base: Box<SurfaceChart>,
        map: Matrix3<f64>,
    },
}

/// A parametric surface immersion over a rectangular domain.
#[derive(Debug, Clone)]
pub struct SurfaceChart {
    pub family: ChartFamily,
    pub domain: Domain,
}

/// Chart point with first and second partials and the Euclidean unit normal.
#[derive(Debug, Clone, Copy)]
pub struct SurfaceJet {
    pub q: Vector2<f64>,
    pub point: Vector3<f64>,
    pub f_u: Vector3<f64>,
    pub f_v: Vector3<f64>,
    pub f_uu: Vector3<f64>,
    pub f_uv: Vector3<f64>,
    pub f_vv: Vector3<f64>,
    /// Euclidean-unit normal `(f_u x f_v)/|f_u x f_v|`.
    pub normal: Vector3<f64>,
}

/// Raw two-jet before the normal is attached.
#[derive(Debug, Clone, Copy)]
struct RawJet {
    point: Vector3<f64>,
    f_u: Vector3<f64>,
    f_v: Vector3<f64>,
    f_uu: Vector3<f64>,
    f_uv: Vector3<f64>,
    f_vv: Vector3<f64>,
}

impl SurfaceChart {
    pub fn graph(a: f64, b: f64, cross: f64) -> Self {
        SurfaceChart {
            family: ChartFamily::Graph { a, b, cross },
            domain: Domain::new(-0.5, 0.5, -0.5, 0.5),
        }
    }

    /// The flat chart `(u, v, 0)`.
    pub fn plane() -> Self {
        Self::graph(0.0, 0.0, 0.0)
    }

    pub fn euclidean_sphere(radius: f64) -> Self {
        SurfaceChart {
            family: ChartFamily::EuclideanSphere { radius },
            domain: polar_domain(),
        }
    }

    pub fn minkowski_sphere(norm: NormModel, radius: f64, center: Vector3<f64>) -> Self {
        SurfaceChart {
            family: ChartFamily::MinkowskiSphere {
                norm,
                radius,
                center,
            },
            domain: polar_domain(),
        }
    }

    pub fn ellipsoid(a: f64, b: f64, c: f64) -> Self {
        SurfaceChart {
            family: ChartFamily::Ellipsoid { a, b, c },
            domain: polar_domain(),
        }
    }

    pub fn torus(major: f64, minor: f64) -> Self {
        SurfaceChart {
            family: ChartFamily::Torus { major, minor },
            domain: Domain::new(0.0, std::f64::consts::TAU, 0.0, std::f64::consts::TAU),
        }
    }

    pub fn cylinder(radius: f64) -> Self {
        SurfaceChart {
            family: ChartFamily::Cylinder { radius },
            domain: Domain::new(0.0, std::f64::consts::TAU, -1.0, 1.0),
        }
    }

    /// The chart `q -> map * f(q)`, used by the transform oracles.
    pub fn linear_image(base: SurfaceChart, map: Matrix3<f64>) -> Self {
        let domain = base.domain;
        SurfaceChart {
            family: ChartFamily::LinearImage {
                base: Box::new(base),
                map,
            },
            domain,
        }
    }

    pub fn with_domain(mut self, domain: Domain) -> Self {
        self.domain = domain;
        self
    }

    /// True for the compact boundary-free families.
    pub fn is_closed(&self) -> bool {
        match &self.family {
            ChartFamily::Graph { .. } | ChartFamily::Cylinder { .. } => false,
            ChartFamily::EuclideanSphere { .. }
            | ChartFamily::MinkowskiSphere { .. }
            | ChartFamily::Ellipsoid { .. }
            | ChartFamily::Torus { .. } => true,
            ChartFamily::LinearImage { base, .. } => base.is_closed(),
        }
    }

    /// Surface point alone, cheaper than the full jet.
    pub fn position(&self, q: &Vector2<f64>) -> Result<Vector3<f64>> {
        if !self.domain.contains_with_slack(q) {
            return Err(GeomError::OutOfDomain { u: q.x, v: q.y });
        }
        Ok(self.raw_jet(q)?.point)
    }

    /// Full two-jet with the Euclidean unit normal; errors if the chart is
    /// outside its domain or fails the immersion condition.
    pub fn jet(&self, q: &Vector2<f64>) -> Result<SurfaceJet> {
        if !self.domain.contains_with_slack(q) {
            return Err(GeomError::OutOfDomain { u: q.x, v: q.y });
        }
        let raw = self.raw_jet(q)?;
        let cross = raw.f_u.cross(&raw.f_v);
        let scale = raw.f_u.norm() * raw.f_v.norm();
        if cross.norm() <= REGULARITY_TOL * scale.max(1e-30) {
            return Err(GeomError::DegenerateChart {
                u: q.x,
                v: q.y,
                cross_norm: cross.norm(),
            });
        }
        Ok(SurfaceJet {
            q: *q,
            point: raw.point,
            f_u: raw.f_u,
            f_v: raw.f_v,
            f_uu: raw.f_uu,
            f_uv: raw.f_uv,
            f_vv: raw.f_vv,
            normal: cross.normalize(),
        })
    }

    fn raw_jet(&self, q: &Vector2<f64>) -> Result<RawJet> {
        match &self.family {
            ChartFamily::Graph { a, b, cross } => {
                let (x, y) = (q.x, q.y);
                let g = 0.5 * (a * x * x + b * y * y) + cross * x * y;
                Ok(RawJet {
                    point: Vector3::new(x, y, g),
                    f_u: Vector3::new(1.0, 0.0, a * x + cross * y),
                    f_v: Vector3::new(0.0, 1.0, b * y + cross * x),
                    f_uu: Vector3::new(0.0, 0.0, *a),
                    f_uv: Vector3::new(0.0, 0.0, *cross),
                    f_vv: Vector3::new(0.0, 0.0, *b),
                })
            }
            ChartFamily::EuclideanSphere { radius } => Ok(scaled_sphere_jet(
                q,
                &Matrix3::from_diagonal_element(*radius),
            )),
            ChartFamily::Ellipsoid { a, b, c } => Ok(scaled_sphere_jet(
                q,
                &Matrix3::from_diagonal(&Vector3::new(*a, *b, *c)),
            )),
            ChartFamily::Torus { major, minor } => {
                let (su, cu) = q.x.sin_cos();
                let (sv, cv) = q.y.sin_cos();
                let w = major + minor * cv;
                Ok(RawJet {
                    point: Vector3::new(w * cu, w * su, minor * sv),
                    f_u: Vector3::new(-w * su, w * cu, 0.0),
                    f_v: Vector3::new(-minor * sv * cu, -minor * sv * su, minor * cv),
                    f_uu: Vector3::new(-w * cu, -w * su, 0.0),
                    f_uv: Vector3::new(minor * sv * su, -minor * sv * cu, 0.0),
                    f_vv: Vector3::new(-minor * cv * cu, -minor * cv * su, -minor * sv),
                })
            }
            ChartFamily::Cylinder { radius } => {
                let (su, cu) = q.x.sin_cos();
                Ok(RawJet {
                    point: Vector3::new(radius * cu, radius * su, q.y),
                    f_u: Vector3::new(-radius * su, radius * cu, 0.0),
                    f_v: Vector3::new(0.0, 0.0, 1.0),
                    f_uu: Vector3::new(-radius * cu, -radius * su, 0.0),
                    f_uv: Vector3::zeros(),
                    f_vv: Vector3::zeros(),
                })
            }
            ChartFamily::MinkowskiSphere {
                norm,
                radius,
                center,
            } => minkowski_sphere_jet(norm, *radius, center, q),
            ChartFamily::LinearImage { base, map } => {
                let inner = base.raw_jet(q)?;
                Ok(RawJet {
                    point: map * inner.point,
                    f_u: map * inner.f_u,
                    f_v: map * inner.f_v,
                    f_uu: map * inner.f_uu,
                    f_uv: map * inner.f_uv,
                    f_vv: map * inner.f_vv,
                })
            }
        }
    }
}

fn polar_domain() -> Domain {
    Domain::new(
        0.05,
        std::f64::consts::PI - 0.05,
        0.0,
        std::f64::consts::TAU,
    )
}

/// Two-jet of the spherical direction vector.
fn direction_jet(q: &Vector2<f64>) -> (Vector3<f64>, [Vector3<f64>; 2], [Vector3<f64>; 3]) {
    let (st, ct) = q.x.sin_cos();
    let (sp, cp) = q.y.sin_cos();
    let d = Vector3::new(st * cp, st * sp, ct);
    let d_u = Vector3::new(ct * cp, ct * sp, -st);
    let d_v = Vector3::new(-st * sp, st * cp, 0.0);
    let d_uu = -d;
    let d_uv = Vector3::new(-ct * sp, ct * cp, 0.0);
    let d_vv = Vector3::new(-st * cp, -st * sp, 0.0);
    (d, [d_u, d_v], [d_uu, d_uv, d_vv])
}

fn scaled_sphere_jet(q: &Vector2<f64>, scale: &Matrix3<f64>) -> RawJet {
    let (d, d1, d2) = direction_jet(q);
    RawJet {
        point: scale * d,
        f_u: scale * d1[0],
        f_v: scale * d1[1],
        f_uu: scale * d2[0],
        f_uv: scale * d2[1],
        f_vv: scale * d2[2],
    }
}

/// Jet of `center + radius * d / F(d)` via the chain rule through the norm jet.
fn minkowski_sphere_jet(
    norm: &NormModel,
    radius: f64,
    center: &Vector3<f64>,
    q: &Vector2<f64>,
) -> Result<RawJet> {
    let (d, d1, d2) = direction_jet(q);
    let jet = norm.jet(&d)?;
    let n = jet.value;
    let g = jet.gradient;
    let h = jet.hessian;

    let n_u = g.dot(&d1[0]);
    let n_v = g.dot(&d1[1]);
    let n_uu = d1[0].dot(&(h * d1[0])) + g.dot(&d2[0]);
    let n_uv = d1[1].dot(&(h * d1[0])) + g.dot(&d2[1]);
    let n_vv = d1[1].dot(&(h * d1[1])) + g.dot(&d2[2]);

    let inv = 1.0 / n;
    let inv2 = inv * inv;
    let inv3 = inv2 * inv;
    let second =
        |dab: &Vector3<f64>, da: &Vector3<f64>, db: &Vector3<f64>, na: f64, nb: f64, nab: f64| {
            radius
                * (dab * inv - da * (nb * inv2) - db * (na * inv2) - d * (nab * inv2)
                    + d * (2.0 * na * nb * inv3))
        };

    Ok(RawJet {
        point: center + radius * d * inv,
        f_u: radius * (d1[0] * inv - d * (n_u * inv2)),
        f_v: radius * (d1[1] * inv - d * (n_v * inv2)),
        f_uu: second(&d2[0], &d1[0], &d1[0], n_u, n_u, n_uu),
        f_uv: second(&d2[1], &d1[0], &d1[1], n_u, n_v, n_uv),
        f_vv: second(&d2[2], &d1[1], &d1[1], n_v, n_v, n_vv),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn all_charts() -> Vec<SurfaceChart> {
        vec![
            SurfaceChart::graph(1.0, 1.0, 0.0),
            SurfaceChart::graph(1.0, -1.0, 0.3),
            SurfaceChart::euclidean_sphere(2.0),
            SurfaceChart::ellipsoid(1.0, 1.0, 2.0),
            SurfaceChart::torus(2.0, 0.5),
            SurfaceChart::cylinder(2.0),
            SurfaceChart::minkowski_sphere(NormModel::quartic(0.1).unwrap(), 2.0, Vector3::zeros()),
            SurfaceChart::linear_image(
                SurfaceChart::torus(2.0, 0.5),
                Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, 2.0)),
            ),
        ]
    }

    fn probe_points(chart: &SurfaceChart) -> Vec<Vector2<f64>> {
        let d = &chart.domain;
        let mut out = Vec::new();
        for i in 1..4 {
            for j in 1..4 {
                out.push(Vector2::new(
                    d.u_min + (d.u_max - d.u_min) * i as f64 / 4.0,
                    d.v_min + (d.v_max - d.v_min) * j as f64 / 4.0,
                ));
            }
        }
        out
    }

    #[test]
    fn analytic_partials_match_finite_differences() {
        let h = 1e-5;
        for chart in all_charts() {
            for q in probe_points(&chart) {
                let jet = chart.jet(&q).unwrap();
                let p =
                    |du: f64, dv: f64| chart.position(&Vector2::new(q.x + du, q.y + dv)).unwrap();

                let fu = (p(h, 0.0) - p(-h, 0.0)) / (2.0 * h);
                let fv = (p(0.0, h) - p(0.0, -h)) / (2.0 * h);
                let fuu = (p(h, 0.0) - 2.0 * p(0.0, 0.0) + p(-h, 0.0)) / (h * h);
                let fvv = (p(0.0, h) - 2.0 * p(0.0, 0.0) + p(0.0, -h)) / (h * h);
                let fuv = (p(h, h) - p(h, -h) - p(-h, h) + p(-h, -h)) / (4.0 * h * h);

                let scale = jet.f_u.norm().max(jet.f_v.norm()).max(1.0);
                assert!(
                    (jet.f_u - fu).norm() <= 1e-6 * scale,
                    "f_u at {q:?} of {:?}",
                    chart.family
                );
                assert!((jet.f_v - fv).norm() <= 1e-6 * scale, "f_v at {q:?}");
                assert!((jet.f_uu - fuu).norm() <= 1e-4 * scale, "f_uu at {q:?}");
                assert!((jet.f_uv - fuv).norm() <= 1e-4 * scale, "f_uv at {q:?}");
                assert!((jet.f_vv - fvv).norm() <= 1e-4 * scale, "f_vv at {q:?}");
            }
        }
    }

    #[test]
    fn normal_is_unit_and_orthogonal() {
        for chart in all_charts() {
            for q in probe_points(&chart) {
                let jet = chart.jet(&q).unwrap();
                assert_relative_eq!(jet.normal.norm(), 1.0, max_relative = 1e-12);
                assert!(jet.normal.dot(&jet.f_u).abs() <= 1e-10 * jet.f_u.norm());
                assert!(jet.normal.dot(&jet.f_v).abs() <= 1e-10 * jet.f_v.norm());
            }
        }
    }

    #[test]
    fn sphere_normal_is_outward_radial() {
        let chart = SurfaceChart::euclidean_sphere(1.0);
        let q = Vector2::new(std::f64::consts::FRAC_PI_2, 0.3);
        let jet = chart.jet(&q).unwrap();
        assert_relative_eq!(jet.normal, jet.point.normalize(), epsilon = 1e-12);
    }

    #[test]
    fn graph_jet_at_origin() {
        let chart = SurfaceChart::graph(1.0, 1.0, 0.0);
        let jet = chart.jet(&Vector2::zeros()).unwrap();
        assert_relative_eq!(jet.f_u, Vector3::new(1.0, 0.0, 0.0), epsilon = 1e-14);
        assert_relative_eq!(jet.f_v, Vector3::new(0.0, 1.0, 0.0), epsilon = 1e-14);
        assert_relative_eq!(jet.normal, Vector3::new(0.0, 0.0, 1.0), epsilon = 1e-14);
        assert_relative_eq!(jet.f_uu, Vector3::new(0.0, 0.0, 1.0), epsilon = 1e-14);
    }

    #[test]
    fn torus_outer_equator_normal_radial() {
        let chart = SurfaceChart::torus(2.0, 0.5);
        let jet = chart.jet(&Vector2::new(0.7, 0.0)).unwrap();
        let radial = Vector3::new(0.7f64.cos(), 0.7f64.sin(), 0.0);
        assert_relative_eq!(jet.normal, radial, epsilon = 1e-12);
    }

    #[test]
    fn minkowski_sphere_satisfies_defining_identity() {
        let norm = NormModel::quartic(0.1).unwrap();
        let center = Vector3::new(0.3, -0.2, 0.1);
        let chart = SurfaceChart::minkowski_sphere(norm.clone(), 2.0, center);
        let d = &chart.domain;
        for i in 0..40 {
            for j in 0..25 {
                let q = Vector2::new(
                    d.u_min + (d.u_max - d.u_min) * (i as f64 + 0.5) / 40.0,
                    d.v_min + (d.v_max - d.v_min) * (j as f64 + 0.5) / 25.0,
                );
                let p = chart.position(&q).unwrap();
                assert_relative_eq!(
                    norm.value(&(p - center)).unwrap(),
                    2.0,
                    max_relative = 1e-10
                );
            }
        }
    }

    #[test]
    fn ellipsoid_norm_sphere_is_coordinate_ellipsoid() {
        // Unit sphere of |diag(1,1,2) x| is x^2 + y^2 + 4 z^2 = 1.
        let norm =
            NormModel::ellipsoid(Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, 2.0))).unwrap();
        let chart = SurfaceChart::minkowski_sphere(norm, 1.0, Vector3::zeros());
        for q in probe_points(&chart) {
            let p = chart.position(&q).unwrap();
            assert_relative_eq!(
                p.x * p.x + p.y * p.y + 4.0 * p.z * p.z,
                1.0,
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn out_of_domain_rejected() {
        let chart = SurfaceChart::euclidean_sphere(1.0);
        let err = chart.jet(&Vector2::new(-1.0, 0.0)).unwrap_err();
        assert!(matches!(err, GeomError::OutOfDomain { .. }));
    }

    #[test]
    fn degenerate_chart_detected() {
        // A rank-one linear image collapses the immersion.
        let mut map = Matrix3::zeros();
        map[(0, 0)] = 1.0;
        let chart = SurfaceChart::linear_image(SurfaceChart::plane(), map);
        let err = chart.jet(&Vector2::new(0.1, 0.1)).unwrap_err();
        assert!(matches!(err, GeomError::DegenerateChart { .. }));
    }

    #[test]
    fn closed_families() {
        assert!(SurfaceChart::euclidean_sphere(1.0).is_closed());
        assert!(SurfaceChart::torus(2.0, 0.5).is_closed());
        assert!(!SurfaceChart::plane().is_closed());
        assert!(!SurfaceChart::cylinder(1.0).is_closed());
    }
}
