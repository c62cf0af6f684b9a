//! Smooth strictly convex norms on R^3.
//!
//! A norm enters every computation through its Minkowski functional `F`:
//! the positively 1-homogeneous convex function whose unit level set is the
//! unit sphere of the norm. This module evaluates `F` together with its
//! gradient and Hessian (the "norm jet"), tests Birkhoff orthogonality, and
//! exposes a closed-form dual jet for the families that have one.
//!
//! Built-in families:
//! - `euclidean`: F(x) = |x|
//! - `ellipsoid(A)`: F(x) = |A x| for an invertible 3x3 matrix A
//! - `quartic(eps)`: F(x) = ((x1^2+x2^2+x3^2)^2 + eps (x1^4+x2^4+x3^4))^(1/4)
//!
//! The quartic family reduces to the Euclidean norm at eps = 0 and stays
//! smooth and strictly convex for every eps >= 0.

use nalgebra::{Matrix3, Vector3};

use crate::error::{GeomError, Result};

/// Magnitudes below this are rejected rather than normalized.
pub const ZERO_VECTOR_THRESHOLD: f64 = 1e-300;

/// Value, gradient, and Hessian of a Minkowski functional at a point.
#[derive(Debug, Clone, Copy)]
pub struct NormJet {
    pub value: f64,
    pub gradient: Vector3<f64>,
    pub hessian: Matrix3<f64>,
}

/// The built-in norm families.
#[derive(Debug, Clone)]
pub enum NormFamily {
    Euclidean,
    /// F(x) = |A x|. The matrix must be invertible.
    Ellipsoid {
        matrix: Matrix3<f64>,
    },
    /// F(x)^4 = (x1^2+x2^2+x3^2)^2 + eps (x1^4+x2^4+x3^4), eps >= 0.
    Quartic {
        eps: f64,
    },
}

/// A smooth strictly convex norm on R^3.
///
/// Immutable after construction; all evaluations are pure.
#[derive(Debug, Clone)]
pub struct NormModel {
    family: NormFamily,
    /// A^{-T}, cached for the ellipsoid dual jet.
    dual_matrix: Option<Matrix3<f64>>,
}

impl NormModel {
    pub fn euclidean() -> Self {
        NormModel {
            family: NormFamily::Euclidean,
            dual_matrix: None,
        }
    }

    /// Norm with unit ball {x : |A x| <= 1}.
    pub fn ellipsoid(matrix: Matrix3<f64>) -> Result<Self> {
        let inv = matrix.try_inverse().ok_or(GeomError::SingularMatrix {
            context: "ellipsoid norm matrix",
        })?;
        Ok(NormModel {
            family: NormFamily::Ellipsoid { matrix },
            dual_matrix: Some(inv.transpose()),
        })
    }

    /// Quartic perturbation of the Euclidean norm; any eps >= 0 is accepted
    /// and admissibility is measured, not assumed.
    pub fn quartic(eps: f64) -> Result<Self> {
        if !eps.is_finite() || eps < 0.0 {
            return Err(GeomError::SingularMatrix {
                context: "quartic eps must be finite and >= 0",
            });
        }
        Ok(NormModel {
            family: NormFamily::Quartic { eps },
            dual_matrix: None,
        })
    }

    pub fn family(&self) -> &NormFamily {
        &self.family
    }

    /// F(x) alone, cheaper than the full jet.
    pub fn value(&self, x: &Vector3<f64>) -> Result<f64> {
        check_nonzero(x)?;
        Ok(match &self.family {
            NormFamily::Euclidean => x.norm(),
            NormFamily::Ellipsoid { matrix } => (matrix * x).norm(),
            NormFamily::Quartic { eps } => {
                let s = x.norm_squared();
                let q = x.iter().map(|c| c.powi(4)).sum::<f64>();
                (s * s + eps * q).powf(0.25)
            }
        })
    }

    /// Minkowski functional with first and second derivatives at `x`.
    pub fn jet(&self, x: &Vector3<f64>) -> Result<NormJet> {
        check_nonzero(x)?;
        Ok(match &self.family {
            NormFamily::Euclidean => quadratic_jet(&Matrix3::identity(), x),
            NormFamily::Ellipsoid { matrix } => quadratic_jet(matrix, x),
            NormFamily::Quartic { eps } => quartic_jet(*eps, x),
        })
    }

    /// Support function h_B = F* with derivatives, for families with a
    /// closed-form dual (euclidean and ellipsoid). `None` means the dual has
    /// no closed form and support points fall back to Newton.
    pub fn dual_jet(&self, v: &Vector3<f64>) -> Option<Result<NormJet>> {
        match &self.family {
            NormFamily::Euclidean => {
                Some(check_nonzero(v).map(|_| quadratic_jet(&Matrix3::identity(), v)))
            }
            NormFamily::Ellipsoid { .. } => {
                let m = self.dual_matrix.as_ref()?;
                Some(check_nonzero(v).map(|_| quadratic_jet(m, v)))
            }
            NormFamily::Quartic { .. } => None,
        }
    }

    /// True iff `v` is Birkhoff orthogonal to the plane spanned by `h1`, `h2`:
    /// the unit ball is supported at v/F(v) by a hyperplane parallel to the
    /// plane, i.e. the gradient of F there is Euclidean-orthogonal to both
    /// spanning vectors.
    pub fn is_birkhoff_orthogonal(
        &self,
        v: &Vector3<f64>,
        h1: &Vector3<f64>,
        h2: &Vector3<f64>,
        tol: f64,
    ) -> Result<bool> {
        check_nonzero(v)?;
        if h1.cross(h2).norm() <= 1e-12 * h1.norm() * h2.norm() {
            return Err(GeomError::DegeneratePlane);
        }
        let unit = v / self.value(v)?;
        let grad = self.jet(&unit)?.gradient;
        let g = grad.norm();
        let a = grad.dot(h1).abs() / (g * h1.norm());
        let b = grad.dot(h2).abs() / (g * h2.norm());
        Ok(a <= tol && b <= tol)
    }
}

fn check_nonzero(x: &Vector3<f64>) -> Result<()> {
    if x.norm() < ZERO_VECTOR_THRESHOLD {
        Err(GeomError::ZeroVector)
    } else {
        Ok(())
    }
}

/// Jet of F(x) = |M x|.
fn quadratic_jet(m: &Matrix3<f64>, x: &Vector3<f64>) -> NormJet {
    let mtm = m.transpose() * m;
    let value = (m * x).norm();
    let gradient = mtm * x / value;
    let hessian = mtm / value - gradient * gradient.transpose() / value;
    NormJet {
        value,
        gradient,
        hessian,
    }
}

/// Jet of F = (s^2 + eps q)^(1/4) with s = sum x_i^2, q = sum x_i^4.
fn quartic_jet(eps: f64, x: &Vector3<f64>) -> NormJet {
    let s = x.norm_squared();
    let g4 = s * s + eps * x.iter().map(|c| c.powi(4)).sum::<f64>();

    // dG/dx_i = 4 x_i (s + eps x_i^2)
    let grad_g = Vector3::from_fn(|i, _| 4.0 * x[i] * (s + eps * x[i] * x[i]));
    // d2G/dx_i dx_j = 4 s delta_ij + 8 x_i x_j + 12 eps x_i^2 delta_ij
    let mut hess_g = 8.0 * x * x.transpose();
    for i in 0..3 {
        hess_g[(i, i)] += 4.0 * s + 12.0 * eps * x[i] * x[i];
    }

    let value = g4.powf(0.25);
    let gm34 = g4.powf(-0.75);
    let gradient = 0.25 * gm34 * grad_g;
    let hessian =
        0.25 * gm34 * hess_g - (3.0 / 16.0) * g4.powf(-1.75) * grad_g * grad_g.transpose();
    NormJet {
        value,
        gradient,
        hessian,
    }
}
