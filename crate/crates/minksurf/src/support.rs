//! The support map of a unit ball: the inverse Euclidean Gauss map of the
//! unit sphere of the norm.
//!
//! For a Euclidean-unit direction `v`, the support point `u(v)` is the point
//! of the unit sphere whose supporting hyperplane has outer Euclidean normal
//! `v`. Of the two smooth choices we fix the outward one, `<u, v> > 0`.
//!
//! The differential of `v -> u(v)` restricted to the tangent plane `v^perp`
//! is the restricted Hessian of the support function: symmetric, and positive
//! definite exactly when the unit sphere has positive Euclidean Gaussian
//! curvature at `u(v)` (an admissible norm).

use nalgebra::{Matrix2, Matrix4, Vector2, Vector3, Vector4};

use crate::error::{GeomError, Result};
use crate::norm::NormModel;

/// Newton convergence threshold on the residual norm.
pub const NEWTON_TOL: f64 = 1e-10;
/// Maximum Newton iterations for one support-point solve.
pub const NEWTON_MAX_ITER: usize = 50;
/// Tolerance on |v| - 1 for incoming directions.
pub const UNIT_TOL: f64 = 1e-8;

/// Support point of the unit ball in direction `v`, with the optional
/// differential of the support map on `v^perp`.
#[derive(Debug, Clone)]
pub struct SupportMapResult {
    /// The probed Euclidean-unit outer normal.
    pub normal: Vector3<f64>,
    /// Support point `u` on the unit sphere of the norm, `F(u) = 1`.
    pub point: Vector3<f64>,
    /// Positive multiplier with `grad F(u) = multiplier * v`.
    pub multiplier: f64,
    /// Orthonormal basis of `v^perp` in which `differential` is expressed.
    pub basis: [Vector3<f64>; 2],
    /// 2x2 differential of the support map on `v^perp`; filled by
    /// [`support_differential`], `None` after a plain [`support_point`].
    pub differential: Option<Matrix2<f64>>,
}

/// Deterministic orthonormal basis of the plane orthogonal to `v`:
/// Gram-Schmidt on the coordinate axis least aligned with `v`, completed by
/// the cross product so that `(v, b1, b2)` is right-handed.
pub fn tangent_basis(v: &Vector3<f64>) -> [Vector3<f64>; 2] {
    let abs = [v.x.abs(), v.y.abs(), v.z.abs()];
    let mut k = 0;
    for i in 1..3 {
        if abs[i] < abs[k] {
            k = i;
        }
    }
    let mut axis = Vector3::zeros();
    axis[k] = 1.0;
    let b1 = (axis - v * v.dot(&axis)).normalize();
    let b2 = v.cross(&b1).normalize();
    [b1, b2]
}

fn require_unit(v: &Vector3<f64>) -> Result<()> {
    let n = v.norm();
    if (n - 1.0).abs() > UNIT_TOL {
        return Err(GeomError::NotUnit { norm: n });
    }
    Ok(())
}

/// Support point of the unit ball with outer Euclidean normal `v`.
///
/// Families with a closed-form dual use `u = grad F*(v)` directly; otherwise
/// a damped Newton iteration solves `{grad F(x) = mu v, F(x) = 1}` from the
/// radial initial guess. After meeting the convergence threshold one extra
/// full step polishes the root to the machine floor, so downstream finite
/// differences are not limited by solver noise.
pub fn support_point(model: &NormModel, v: &Vector3<f64>) -> Result<SupportMapResult> {
    require_unit(v)?;
    let basis = tangent_basis(v);

    if let Some(dual) = model.dual_jet(v) {
        let dual = dual?;
        let point = dual.gradient;
        return Ok(SupportMapResult {
            normal: *v,
            point,
            multiplier: 1.0 / dual.value,
            basis,
            differential: None,
        });
    }

    let x0 = v / model.value(v)?;
    let mu0 = model.jet(&x0)?.gradient.dot(v);
    let mut z = Vector4::new(x0.x, x0.y, x0.z, mu0);
    let mut res = residual(model, v, &z)?;
    let mut res_norm = res.norm();

    for iter in 0..NEWTON_MAX_ITER {
        if res_norm <= NEWTON_TOL {
            break;
        }
        let jac = jacobian(model, v, &z)?;
        let lu = jac.lu();
        let step = lu
            .solve(&(-res))
            .ok_or(GeomError::SingularSystem { at: *v })?;

        // Armijo backtracking on the residual norm.
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let cand = z + t * step;
            if let Ok(r) = residual(model, v, &cand) {
                let n = r.norm();
                if n <= (1.0 - 1e-4 * t) * res_norm {
                    z = cand;
                    res = r;
                    res_norm = n;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !accepted {
            return Err(GeomError::NoConvergence {
                at: *v,
                iterations: iter,
                residual: res_norm,
            });
        }
    }
    if res_norm > NEWTON_TOL {
        return Err(GeomError::NoConvergence {
            at: *v,
            iterations: NEWTON_MAX_ITER,
            residual: res_norm,
        });
    }

    // One full polish step past the threshold, kept only if it improves the
    // residual; quadratic convergence takes it to the machine floor.
    if let Ok(jac) = jacobian(model, v, &z) {
        if let Some(step) = jac.lu().solve(&(-res)) {
            let cand = z + step;
            if let Ok(r) = residual(model, v, &cand) {
                if r.norm() < res_norm {
                    z = cand;
                }
            }
        }
    }

    let point = Vector3::new(z.x, z.y, z.z);
    let multiplier = z.w;
    if multiplier <= 0.0 || point.dot(v) <= 0.0 {
        return Err(GeomError::NoConvergence {
            at: *v,
            iterations: NEWTON_MAX_ITER,
            residual: res_norm,
        });
    }
    Ok(SupportMapResult {
        normal: *v,
        point,
        multiplier,
        basis,
        differential: None,
    })
}

fn residual(model: &NormModel, v: &Vector3<f64>, z: &Vector4<f64>) -> Result<Vector4<f64>> {
    let x = Vector3::new(z.x, z.y, z.z);
    let jet = model.jet(&x)?;
    let top = jet.gradient - z.w * v;
    Ok(Vector4::new(top.x, top.y, top.z, jet.value - 1.0))
}

fn jacobian(model: &NormModel, v: &Vector3<f64>, z: &Vector4<f64>) -> Result<Matrix4<f64>> {
    let x = Vector3::new(z.x, z.y, z.z);
    let jet = model.jet(&x)?;
    let mut jac = Matrix4::zeros();
    for i in 0..3 {
        for j in 0..3 {
            jac[(i, j)] = jet.hessian[(i, j)];
        }
        jac[(i, 3)] = -v[i];
        jac[(3, i)] = jet.gradient[i];
    }
    Ok(jac)
}

/// Support point plus the differential of the support map on `v^perp`,
/// obtained by implicit differentiation of the support-point system: for each
/// tangent direction `w` solve
///
/// ```text
/// Hess F(u) dx - dmu v = mu w,    <grad F(u), dx> = 0.
/// ```
pub fn support_differential(model: &NormModel, v: &Vector3<f64>) -> Result<SupportMapResult> {
    let mut result = support_point(model, v)?;
    let jet = model.jet(&result.point)?;

    let mut sys = Matrix4::zeros();
    for i in 0..3 {
        for j in 0..3 {
            sys[(i, j)] = jet.hessian[(i, j)];
        }
        sys[(i, 3)] = -v[i];
        sys[(3, i)] = jet.gradient[i];
    }
    let lu = sys.lu();

    let mut diff = Matrix2::zeros();
    for (j, w) in result.basis.iter().enumerate() {
        let rhs = Vector4::new(
            result.multiplier * w.x,
            result.multiplier * w.y,
            result.multiplier * w.z,
            0.0,
        );
        let sol = lu.solve(&rhs).ok_or(GeomError::SingularSystem { at: *v })?;
        let dx = Vector3::new(sol.x, sol.y, sol.z);
        diff[(0, j)] = dx.dot(&result.basis[0]);
        diff[(1, j)] = dx.dot(&result.basis[1]);
    }
    result.differential = Some(diff);
    Ok(result)
}

/// Verdict of the admissibility sweep.
#[derive(Debug, Clone)]
pub struct AdmissibilityReport {
    pub min_eigen_du: f64,
    pub worst_v: Vector3<f64>,
    pub pass: bool,
    pub samples: usize,
}

/// Samples the support differential over a deterministic low-discrepancy set
/// of directions (Fibonacci sphere) and reports the smallest eigenvalue seen.
/// The norm passes iff that eigenvalue exceeds `tol` everywhere sampled.
pub fn check_admissible(
    model: &NormModel,
    n_samples: usize,
    tol: f64,
) -> Result<AdmissibilityReport> {
    let n = n_samples.max(1);
    let golden = std::f64::consts::PI * (3.0 - 5.0f64.sqrt());
    let mut min_eigen = f64::INFINITY;
    let mut worst = Vector3::z();
    for i in 0..n {
        let z = 1.0 - (2.0 * i as f64 + 1.0) / n as f64;
        let r = (1.0 - z * z).max(0.0).sqrt();
        let phi = golden * i as f64;
        let v = Vector3::new(r * phi.cos(), r * phi.sin(), z).normalize();
        let du = support_differential(model, &v)?
            .differential
            .expect("differential filled");
        let sym = 0.5 * (du + du.transpose());
        let eig = symmetric_eigen_2x2(&sym);
        if eig.x < min_eigen {
            min_eigen = eig.x;
            worst = v;
        }
    }
    Ok(AdmissibilityReport {
        min_eigen_du: min_eigen,
        worst_v: worst,
        pass: min_eigen > tol,
        samples: n,
    })
}

/// Eigenvalues of a symmetric 2x2 matrix, ascending. The discriminant is
/// formed from the off-diagonal entry directly to avoid the cancellation in
/// `tr^2 - 4 det`.
pub fn symmetric_eigen_2x2(m: &Matrix2<f64>) -> Vector2<f64> {
    let half_tr = 0.5 * (m[(0, 0)] + m[(1, 1)]);
    let half_gap = 0.5 * (m[(0, 0)] - m[(1, 1)]);
    let off = 0.5 * (m[(0, 1)] + m[(1, 0)]);
    let disc = (half_gap * half_gap + off * off).sqrt();
    Vector2::new(half_tr - disc, half_tr + disc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::Matrix3;

    fn ellipsoid_112() -> NormModel {
        NormModel::ellipsoid(Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, 2.0))).unwrap()
    }

    /// Central finite differences of the support point along the tangent
    /// basis; the oracle for the implicit-differentiation path.
    fn fd_differential(model: &NormModel, v: &Vector3<f64>, h: f64) -> Matrix2<f64> {
        let basis = tangent_basis(v);
        let mut out = Matrix2::zeros();
        for (j, w) in basis.iter().enumerate() {
            let vp = (v + h * w).normalize();
            let vm = (v - h * w).normalize();
            let up = support_point(model, &vp).unwrap().point;
            let um = support_point(model, &vm).unwrap().point;
            let d = (up - um) / (2.0 * h);
            out[(0, j)] = d.dot(&basis[0]);
            out[(1, j)] = d.dot(&basis[1]);
        }
        out
    }

    #[test]
    fn euclidean_support_is_identity() {
        let model = NormModel::euclidean();
        let v = Vector3::new(0.0, 0.0, 1.0);
        let res = support_differential(&model, &v).unwrap();
        assert_relative_eq!(res.point, v, epsilon = 1e-14);
        assert_relative_eq!(res.multiplier, 1.0, max_relative = 1e-14);
        assert_relative_eq!(
            res.differential.unwrap(),
            Matrix2::identity(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn ellipsoid_support_closed_form() {
        let model = ellipsoid_112();
        let res = support_point(&model, &Vector3::z()).unwrap();
        assert_relative_eq!(res.point, Vector3::new(0.0, 0.0, 0.5), epsilon = 1e-13);
        assert_relative_eq!(model.value(&res.point).unwrap(), 1.0, max_relative = 1e-13);
        // grad F(u) parallel to v
        let grad = model.jet(&res.point).unwrap().gradient;
        assert!(grad.cross(&Vector3::z()).norm() < 1e-12);
    }

    #[test]
    fn ellipsoid_differential_matches_dual_hessian_and_fd() {
        // At v = e3 the dual Hessian of F*(v) = |diag(1,1,0.5) v| restricted
        // to e3^perp is diag(2, 2): the polar radius of curvature of the
        // ellipsoid x^2 + y^2 + 4 z^2 = 1 is a^2/c = 2.
        let model = ellipsoid_112();
        let v = Vector3::z();
        let res = support_differential(&model, &v).unwrap();
        let du = res.differential.unwrap();
        assert_relative_eq!(du, Matrix2::identity() * 2.0, epsilon = 1e-10);

        let fd = fd_differential(&model, &v, 1e-5);
        assert_relative_eq!(du, fd, epsilon = 1e-4);

        // And at a generic direction the analytic dual Hessian agrees too.
        let v = Vector3::new(0.3, -0.2, 0.93).normalize();
        let res = support_differential(&model, &v).unwrap();
        let du = res.differential.unwrap();
        let hess = model.dual_jet(&v).unwrap().unwrap().hessian;
        let mut restricted = Matrix2::zeros();
        for i in 0..2 {
            for j in 0..2 {
                restricted[(i, j)] = res.basis[i].dot(&(hess * res.basis[j]));
            }
        }
        assert_relative_eq!(du, restricted, epsilon = 1e-9);
    }

    #[test]
    fn quartic_support_axis_newton() {
        // Axis symmetry pins the support point at z = (1 + eps)^(-1/4).
        let model = NormModel::quartic(0.1).unwrap();
        let res = support_point(&model, &Vector3::z()).unwrap();
        let expected = 1.1f64.powf(-0.25);
        assert_relative_eq!(res.point.z, expected, max_relative = 1e-10);
        assert_relative_eq!(res.point.z, 0.976454, max_relative = 1e-6);
        assert!(res.point.x.abs() < 1e-12 && res.point.y.abs() < 1e-12);
        assert_relative_eq!(model.value(&res.point).unwrap(), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn quartic_differential_symmetric_positive_and_fd_checked() {
        let model = NormModel::quartic(0.1).unwrap();
        let v = Vector3::z();
        let res = support_differential(&model, &v).unwrap();
        let du = res.differential.unwrap();
        // symmetric, positive definite, and symmetric under the x <-> y swap
        assert!((du[(0, 1)] - du[(1, 0)]).abs() < 1e-8);
        assert!((du[(0, 0)] - du[(1, 1)]).abs() < 1e-8);
        assert!(symmetric_eigen_2x2(&du).x > 0.0);
        let fd = fd_differential(&model, &v, 1e-5);
        assert_relative_eq!(du, fd, epsilon = 1e-4);

        let v = Vector3::new(0.5, -0.7, 0.4).normalize();
        let res = support_differential(&model, &v).unwrap();
        let du = res.differential.unwrap();
        assert!((du[(0, 1)] - du[(1, 0)]).abs() < 1e-8);
        let fd = fd_differential(&model, &v, 1e-5);
        assert_relative_eq!(du, fd, epsilon = 1e-4);
    }

    #[test]
    fn rotated_ellipsoid_norm_support() {
        // a non-axis-aligned norm matrix exercises the generic paths
        let c = 0.5f64.sqrt();
        let rot = Matrix3::new(c, -c, 0.0, c, c, 0.0, 0.0, 0.0, 1.0);
        let model =
            NormModel::ellipsoid(rot * Matrix3::from_diagonal(&Vector3::new(1.0, 1.5, 2.0)))
                .unwrap();
        for v in [
            Vector3::z(),
            Vector3::new(0.6, -0.48, 0.64).normalize(),
            Vector3::new(-0.3, 0.8, 0.52).normalize(),
        ] {
            let res = support_differential(&model, &v).unwrap();
            assert_relative_eq!(model.value(&res.point).unwrap(), 1.0, max_relative = 1e-12);
            let grad = model.jet(&res.point).unwrap().gradient;
            assert!(grad.cross(&v).norm() < 1e-10 * grad.norm());
            let du = res.differential.unwrap();
            assert!((du[(0, 1)] - du[(1, 0)]).abs() < 1e-8);
            assert!(symmetric_eigen_2x2(&du).x > 0.0);
            let fd = fd_differential(&model, &v, 1e-5);
            assert_relative_eq!(du, fd, epsilon = 1e-4);
        }
    }

    #[test]
    fn support_points_stay_on_unit_sphere() {
        // 1e-9 for analytic duals, 1e-7 for the Newton path (the polish step
        // usually lands far below either).
        let golden = std::f64::consts::PI * (3.0 - 5.0f64.sqrt());
        for (model, tol) in [
            (ellipsoid_112(), 1e-9),
            (NormModel::quartic(0.25).unwrap(), 1e-7),
        ] {
            for i in 0..64 {
                let z = 1.0 - (2.0 * i as f64 + 1.0) / 64.0;
                let r = (1.0f64 - z * z).max(0.0).sqrt();
                let phi = golden * i as f64;
                let v = Vector3::new(r * phi.cos(), r * phi.sin(), z).normalize();
                let res = support_point(&model, &v).unwrap();
                assert_relative_eq!(model.value(&res.point).unwrap(), 1.0, max_relative = tol);
                assert!(res.point.dot(&v) > 0.0);
            }
        }
    }

    #[test]
    fn quartic_support_converges_to_euclidean() {
        // As eps -> 0 the support point converges to v, monotonically over
        // the tested sequence.
        let golden = std::f64::consts::PI * (3.0 - 5.0f64.sqrt());
        let mut sups = Vec::new();
        for eps in [0.1, 0.01, 0.001] {
            let model = NormModel::quartic(eps).unwrap();
            let mut sup: f64 = 0.0;
            for i in 0..40 {
                let z = 1.0 - (2.0 * i as f64 + 1.0) / 40.0;
                let r = (1.0f64 - z * z).max(0.0).sqrt();
                let phi = golden * i as f64;
                let v = Vector3::new(r * phi.cos(), r * phi.sin(), z).normalize();
                let u = support_point(&model, &v).unwrap().point;
                sup = sup.max((u - v).norm());
            }
            sups.push(sup);
        }
        assert!(sups[0] > sups[1] && sups[1] > sups[2]);
        assert!(sups[2] < 1e-3);
    }

    #[test]
    fn admissibility_euclidean_and_quartic() {
        let report = check_admissible(&NormModel::euclidean(), 100, 1e-6).unwrap();
        assert!(report.pass);
        assert_relative_eq!(report.min_eigen_du, 1.0, max_relative = 1e-10);

        let report = check_admissible(&NormModel::quartic(0.1).unwrap(), 200, 1e-6).unwrap();
        assert!(report.pass);
        assert!(report.min_eigen_du > 0.0);
    }

    #[test]
    fn non_unit_direction_rejected() {
        let err = support_point(&NormModel::euclidean(), &Vector3::new(0.0, 0.0, 2.0)).unwrap_err();
        assert!(matches!(err, GeomError::NotUnit { .. }));
    }

    proptest::proptest! {
        /// Support points land on the unit sphere with outward orientation
        /// and a symmetric differential, for random directions and quartic
        /// perturbation strengths.
        #[test]
        fn support_map_properties(
            cx in -1.0f64..1.0,
            cy in -1.0f64..1.0,
            cz in -1.0f64..1.0,
            eps in 0.0f64..5.0,
        ) {
            let raw = Vector3::new(cx, cy, cz);
            proptest::prop_assume!(raw.norm() > 1e-2);
            let v = raw.normalize();
            let model = NormModel::quartic(eps).unwrap();
            let res = support_differential(&model, &v).unwrap();
            proptest::prop_assert!((model.value(&res.point).unwrap() - 1.0).abs() <= 1e-7);
            proptest::prop_assert!(res.point.dot(&v) > 0.0);
            proptest::prop_assert!(res.multiplier > 0.0);
            let du = res.differential.unwrap();
            proptest::prop_assert!((du[(0, 1)] - du[(1, 0)]).abs() <= 1e-8);
            proptest::prop_assert!(symmetric_eigen_2x2(&du).x > 0.0);
        }
    }

    #[test]
    fn tangent_basis_is_orthonormal_right_handed() {
        for v in [
            Vector3::z(),
            Vector3::new(0.6, -0.48, 0.64).normalize(),
            Vector3::new(-1.0, 0.0, 0.0),
        ] {
            let [b1, b2] = tangent_basis(&v);
            assert!(b1.dot(&v).abs() < 1e-14);
            assert!(b2.dot(&v).abs() < 1e-14);
            assert!(b1.dot(&b2).abs() < 1e-14);
            assert_relative_eq!(b1.cross(&b2), v, epsilon = 1e-13);
        }
    }
}
