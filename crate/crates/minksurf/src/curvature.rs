//! Curvature via the Birkhoff-Gauss map.
//!
//! A surface in a normed 3-space carries the transversal field `eta` of
//! norm-unit vectors Birkhoff orthogonal to the tangent planes. Composing the
//! support map of the unit ball with the Euclidean Gauss map, `eta = u . xi`,
//! makes `eta` computable for any admissible norm. Its differential maps each
//! tangent plane to itself; the eigenvalues are the principal curvatures and
//! their product and mean are the Gaussian and mean curvatures of the surface
//! in the norm geometry.
//!
//! The differential is computed by centered finite differences of the
//! composed map `q -> u(xi(q))` in chart coordinates; the chain rule
//! `d eta = du . d xi` and the classical Weingarten operator serve as
//! cross-checks, and the transversal component of the derivative (zero for an
//! equiaffine transversal field) is reported as a residual.

use nalgebra::{Matrix2, Matrix3, Vector2, Vector3};

use crate::chart::{SurfaceChart, SurfaceJet};
use crate::error::{GeomError, Result};
use crate::norm::NormModel;
use crate::support::{support_differential, support_point, symmetric_eigen_2x2};

/// Finite-difference step as a fraction of the chart domain diagonal.
pub const FD_FACTOR: f64 = 1e-4;
/// Relative gap below which the two principal curvatures count as equal.
pub const UMBILIC_TOL: f64 = 1e-6;
/// Relative threshold for the numerical rank of the fundamental form.
pub const RANK_TOL: f64 = 1e-8;
/// Discriminants of the 2x2 eigenproblem are clamped to zero above this.
const DISC_CLAMP: f64 = -1e-12;

/// Norm-unit Birkhoff normal at a surface jet: the support point of the unit
/// ball in the direction of the Euclidean normal, so `<eta, xi> > 0`.
pub fn birkhoff_normal(norm: &NormModel, jet: &SurfaceJet) -> Result<Vector3<f64>> {
    Ok(support_point(norm, &jet.normal)?.point)
}

/// Everything the curvature operations need at one surface point.
///
/// All 2x2 matrices act on chart coordinates `(a, b)` representing the
/// tangent vector `a f_u + b f_v`, except `support_diff` which acts on
/// coordinates in the orthonormal basis `frame` of the tangent plane.
#[derive(Debug, Clone)]
pub struct PointAnalysis {
    pub jet: SurfaceJet,
    /// Birkhoff normal, norm-unit.
    pub eta: Vector3<f64>,
    /// `<eta, xi>`, the support function of the unit ball at `xi`.
    pub eta_dot_xi: f64,
    /// Orthonormal basis of the tangent plane shared with the support map.
    pub frame: [Vector3<f64>; 2],
    /// Differential of the support map at `xi`, in `frame` coordinates.
    pub support_diff: Matrix2<f64>,
    /// d eta by finite differences of `u . xi`.
    pub birkhoff_differential: Matrix2<f64>,
    /// d xi by finite differences of the Euclidean Gauss map.
    pub gauss_differential: Matrix2<f64>,
    /// d xi from the classical Weingarten equations (analytic partials).
    pub gauss_weingarten: Matrix2<f64>,
    /// Affine fundamental form `h(B_i, B_j) = -<B_j, d xi B_i> / <eta, xi>`.
    pub fundamental: Matrix2<f64>,
    /// Largest transversal component of `D eta` relative to its size.
    pub transversal_residual: f64,
    /// Deviation of `d eta` from `du . d xi`, relative.
    pub chain_residual: f64,
    /// Deviation of the fundamental form from its Gauss-formula evaluation.
    pub fundamental_cross_residual: f64,
    /// First fundamental form (Gram matrix of the chart basis).
    metric: Matrix2<f64>,
}

impl PointAnalysis {
    /// Ambient vector of chart coordinates.
    pub fn to_ambient(&self, x: &Vector2<f64>) -> Vector3<f64> {
        x.x * self.jet.f_u + x.y * self.jet.f_v
    }

    /// Chart coordinates of a tangent vector (orthogonal projection for
    /// vectors carrying finite-difference noise off the tangent plane).
    pub fn to_chart(&self, w: &Vector3<f64>) -> Result<Vector2<f64>> {
        let rhs = Vector2::new(w.dot(&self.jet.f_u), w.dot(&self.jet.f_v));
        self.metric
            .lu()
            .solve(&rhs)
            .ok_or(GeomError::SingularMatrix {
                context: "tangent frame metric",
            })
    }

    /// Coordinates of a tangent vector in the orthonormal frame.
    pub fn to_frame(&self, w: &Vector3<f64>) -> Vector2<f64> {
        Vector2::new(w.dot(&self.frame[0]), w.dot(&self.frame[1]))
    }
}

/// Decomposition of an ambient vector as `a f_u + b f_v + c eta`.
fn decompose(jet: &SurfaceJet, eta: &Vector3<f64>, w: &Vector3<f64>) -> Result<Vector3<f64>> {
    let m = Matrix3::from_columns(&[jet.f_u, jet.f_v, *eta]);
    m.lu().solve(w).ok_or(GeomError::SingularMatrix {
        context: "tangent-transversal decomposition",
    })
}

/// Builds the full analysis at a chart point. This is the single shared entry
/// point behind the curvature operations.
pub fn analyze(norm: &NormModel, chart: &SurfaceChart, q: &Vector2<f64>) -> Result<PointAnalysis> {
    let jet = chart.jet(q)?;
    let support = support_differential(norm, &jet.normal)?;
    let eta = support.point;
    let eta_dot_xi = eta.dot(&jet.normal);
    if eta_dot_xi.abs() < 1e-10 {
        return Err(GeomError::NearTangentNormal { inner: eta_dot_xi });
    }
    let support_diff = support.differential.expect("differential filled");
    let frame = support.basis;

    // Finite differences of xi and eta along the chart coordinates.
    let h = FD_FACTOR * chart.domain.diagonal();
    if !h.is_finite() || h <= f64::EPSILON {
        return Err(GeomError::SingularMatrix {
            context: "finite-difference step (degenerate chart domain)",
        });
    }
    let mut d_eta_cols = [Vector2::zeros(); 2];
    let mut d_xi_cols = [Vector2::zeros(); 2];
    let mut tau_max: f64 = 0.0;
    let mut speed_max: f64 = 0.0;
    for a in 0..2 {
        let mut qp = *q;
        let mut qm = *q;
        qp[a] += h;
        qm[a] -= h;
        let jp = chart.jet(&qp)?;
        let jm = chart.jet(&qm)?;
        let eta_p = support_point(norm, &jp.normal)?.point;
        let eta_m = support_point(norm, &jm.normal)?.point;

        let d_eta = (eta_p - eta_m) / (2.0 * h);
        let d_xi = (jp.normal - jm.normal) / (2.0 * h);

        let coeffs = decompose(&jet, &eta, &d_eta)?;
        d_eta_cols[a] = Vector2::new(coeffs.x, coeffs.y);
        tau_max = tau_max.max(coeffs.z.abs());
        speed_max = speed_max.max(d_eta.norm());

        let coeffs = decompose(&jet, &eta, &d_xi)?;
        d_xi_cols[a] = Vector2::new(coeffs.x, coeffs.y);
    }
    let birkhoff_differential = Matrix2::from_columns(&d_eta_cols);
    let gauss_differential = Matrix2::from_columns(&d_xi_cols);
    let transversal_residual = tau_max / speed_max.max(1.0);

    // Classical Weingarten operator from analytic partials: d xi = -I^{-1} II.
    let metric = Matrix2::new(
        jet.f_u.dot(&jet.f_u),
        jet.f_u.dot(&jet.f_v),
        jet.f_u.dot(&jet.f_v),
        jet.f_v.dot(&jet.f_v),
    );
    let second = Matrix2::new(
        jet.f_uu.dot(&jet.normal),
        jet.f_uv.dot(&jet.normal),
        jet.f_uv.dot(&jet.normal),
        jet.f_vv.dot(&jet.normal),
    );
    let gauss_weingarten = -(metric.try_inverse().ok_or(GeomError::SingularMatrix {
        context: "first fundamental form",
    })? * second);

    // Fundamental form via the Gauss-map route, cross-checked against the
    // Gauss-formula route <f_ij, xi> / <eta, xi>.
    let b = [jet.f_u, jet.f_v];
    let mut fundamental = Matrix2::zeros();
    for i in 0..2 {
        let dxi_i = d_xi_cols[i].x * jet.f_u + d_xi_cols[i].y * jet.f_v;
        for j in 0..2 {
            fundamental[(i, j)] = -b[j].dot(&dxi_i) / eta_dot_xi;
        }
    }
    let gauss_route = second / eta_dot_xi;
    let fundamental_cross_residual =
        (fundamental - gauss_route).abs().max() / gauss_route.abs().max().max(1.0);

    // Chain rule d eta = du . d xi through the orthonormal frame.
    let chart_to_frame = Matrix2::new(
        jet.f_u.dot(&frame[0]),
        jet.f_v.dot(&frame[0]),
        jet.f_u.dot(&frame[1]),
        jet.f_v.dot(&frame[1]),
    );
    let frame_to_chart = chart_to_frame
        .try_inverse()
        .ok_or(GeomError::SingularMatrix {
            context: "chart-frame change of basis",
        })?;
    let chained = frame_to_chart * support_diff * chart_to_frame * gauss_differential;
    let chain_residual =
        (birkhoff_differential - chained).abs().max() / birkhoff_differential.abs().max().max(1.0);

    Ok(PointAnalysis {
        jet,
        eta,
        eta_dot_xi,
        frame,
        support_diff,
        birkhoff_differential,
        gauss_differential,
        gauss_weingarten,
        fundamental,
        transversal_residual,
        chain_residual,
        fundamental_cross_residual,
        metric,
    })
}

/// The shape differentials at a point: `(d eta, d xi, transversal residual)`.
pub fn shape_differential(
    norm: &NormModel,
    chart: &SurfaceChart,
    q: &Vector2<f64>,
) -> Result<(Matrix2<f64>, Matrix2<f64>, f64)> {
    let a = analyze(norm, chart, q)?;
    Ok((
        a.birkhoff_differential,
        a.gauss_differential,
        a.transversal_residual,
    ))
}

/// The affine fundamental form in chart coordinates.
pub fn fundamental_form(
    norm: &NormModel,
    chart: &SurfaceChart,
    q: &Vector2<f64>,
) -> Result<Matrix2<f64>> {
    Ok(analyze(norm, chart, q)?.fundamental)
}

/// Eigen-decomposition of a real 2x2 matrix with guaranteed real spectrum.
/// Small negative discriminants are clamped (repeated root); anything beyond
/// the clamp reports a defective differential.
fn eigen_2x2(m: &Matrix2<f64>) -> Result<(f64, f64, Vector2<f64>, Vector2<f64>)> {
    let scale = m.abs().max().max(1.0);
    let tr = m[(0, 0)] + m[(1, 1)];
    let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
    let mut disc = tr * tr - 4.0 * det;
    if disc < 0.0 {
        if disc < DISC_CLAMP * scale * scale {
            return Err(GeomError::DefectiveDifferential { discriminant: disc });
        }
        disc = 0.0;
    }
    let root = disc.sqrt();
    let l1 = 0.5 * (tr + root);
    let l2 = 0.5 * (tr - root);

    let vector_for = |l: f64| -> Vector2<f64> {
        // rows of (m - l I) are orthogonal to the eigenvector; the larger
        // row is the better conditioned one
        let r1 = Vector2::new(m[(0, 0)] - l, m[(0, 1)]);
        let r2 = Vector2::new(m[(1, 0)], m[(1, 1)] - l);
        let r = if r1.norm() >= r2.norm() { r1 } else { r2 };
        if r.norm() <= 1e-14 * scale {
            Vector2::new(1.0, 0.0)
        } else {
            Vector2::new(-r.y, r.x).normalize()
        }
    };

    if (l1 - l2).abs() <= UMBILIC_TOL * scale {
        // repeated root: deterministic frame directions
        Ok((l1, l2, Vector2::new(1.0, 0.0), Vector2::new(0.0, 1.0)))
    } else {
        Ok((l1, l2, vector_for(l1), vector_for(l2)))
    }
}

/// Full curvature classification at one surface point.
#[derive(Debug, Clone)]
pub struct CurvatureReport {
    pub q: Vector2<f64>,
    pub point: Vector3<f64>,
    pub xi: Vector3<f64>,
    pub eta: Vector3<f64>,
    pub birkhoff_differential: Matrix2<f64>,
    pub gauss_differential: Matrix2<f64>,
    pub fundamental: Matrix2<f64>,
    /// Principal curvatures, `lambda1 >= lambda2`.
    pub lambda1: f64,
    pub lambda2: f64,
    /// Principal directions in chart coordinates and in ambient space.
    pub dir1_chart: Vector2<f64>,
    pub dir2_chart: Vector2<f64>,
    pub dir1: Vector3<f64>,
    pub dir2: Vector3<f64>,
    /// Gaussian curvature `lambda1 lambda2` of the norm geometry.
    pub gaussian: f64,
    /// Mean curvature `(lambda1 + lambda2)/2`.
    pub mean: f64,
    /// Euclidean Gaussian curvature from the Weingarten operator.
    pub euclidean_gaussian: f64,
    pub umbilic: bool,
    pub transversal_residual: f64,
    pub self_adjoint_residual: f64,
    pub chain_residual: f64,
    pub fundamental_cross_residual: f64,
    pub fundamental_rank: u8,
    pub fundamental_definite: bool,
}

/// Principal curvatures and the derived quantities at a chart point.
pub fn curvature_report(
    norm: &NormModel,
    chart: &SurfaceChart,
    q: &Vector2<f64>,
) -> Result<CurvatureReport> {
    let analysis = analyze(norm, chart, q)?;
    report_from_analysis(&analysis)
}

/// Builds the report from an existing analysis (shared by the grid sweeps).
pub fn report_from_analysis(analysis: &PointAnalysis) -> Result<CurvatureReport> {
    let m = &analysis.birkhoff_differential;
    let (lambda1, lambda2, dir1_chart, dir2_chart) = eigen_2x2(m)?;
    let scale = m.abs().max().max(1.0);
    let umbilic =
        (lambda1 - lambda2).abs() <= UMBILIC_TOL * (lambda1.abs() + lambda2.abs()).max(1.0);

    // self-adjointness of d eta with respect to h
    let h = &analysis.fundamental;
    let left = h * m;
    let right = m.transpose() * h;
    let self_adjoint_residual = (left - right).abs().max() / left.abs().max().max(1.0);

    let (rank, definite) = fundamental_rank(h);

    let _ = scale;
    Ok(CurvatureReport {
        q: analysis.jet.q,
        point: analysis.jet.point,
        xi: analysis.jet.normal,
        eta: analysis.eta,
        birkhoff_differential: *m,
        gauss_differential: analysis.gauss_differential,
        fundamental: *h,
        lambda1,
        lambda2,
        dir1_chart,
        dir2_chart,
        dir1: analysis.to_ambient(&dir1_chart),
        dir2: analysis.to_ambient(&dir2_chart),
        gaussian: lambda1 * lambda2,
        mean: 0.5 * (lambda1 + lambda2),
        euclidean_gaussian: analysis.gauss_weingarten.determinant(),
        umbilic,
        transversal_residual: analysis.transversal_residual,
        self_adjoint_residual,
        chain_residual: analysis.chain_residual,
        fundamental_cross_residual: analysis.fundamental_cross_residual,
        fundamental_rank: rank,
        fundamental_definite: definite,
    })
}

/// Numerical rank of the symmetrized fundamental form and definiteness.
fn fundamental_rank(h: &Matrix2<f64>) -> (u8, bool) {
    let sym = 0.5 * (h + h.transpose());
    let eig = symmetric_eigen_2x2(&sym);
    let scale = eig.x.abs().max(eig.y.abs());
    if scale < 1e-12 {
        return (0, false);
    }
    let thr = RANK_TOL * scale;
    let rank = (eig.x.abs() > thr) as u8 + (eig.y.abs() > thr) as u8;
    (rank, rank == 2 && eig.x * eig.y > 0.0)
}

impl PointAnalysis {
    /// Normal curvature in the tangent direction with the given chart
    /// coordinates:
    ///
    /// ```text
    /// k(X) = <du^{-1} X, d eta X> / <du^{-1} X, X>
    /// ```
    ///
    /// evaluated in the orthonormal frame of the tangent plane. Homogeneous
    /// of degree zero in `X`.
    pub fn normal_curvature(&self, x_chart: &Vector2<f64>) -> Result<f64> {
        if x_chart.norm() < 1e-14 {
            return Err(GeomError::ZeroVector);
        }
        let x_amb = self.to_ambient(x_chart);
        let x_f = self.to_frame(&x_amb);
        let y_amb = self.to_ambient(&(self.birkhoff_differential * x_chart));
        let y_f = self.to_frame(&y_amb);
        let du_inv = self
            .support_diff
            .try_inverse()
            .ok_or(GeomError::SingularSystem {
                at: self.jet.normal,
            })?;
        let w = du_inv * x_f;
        Ok(w.dot(&y_f) / w.dot(&x_f))
    }

    /// Directions with `h(X, X) = 0`, norm-unit.
    pub fn asymptotic_directions(&self, norm: &NormModel) -> Result<AsymptoticDirections> {
        let sym = 0.5 * (self.fundamental + self.fundamental.transpose());
        let (rank, definite) = fundamental_rank(&sym);
        match rank {
            0 => Ok(AsymptoticDirections::AllDirections),
            _ if definite => Ok(AsymptoticDirections::None),
            1 => {
                let eig = symmetric_eigen_2x2(&sym);
                // kernel direction: eigenvector of the eigenvalue closer to zero
                let target = if eig.x.abs() < eig.y.abs() {
                    eig.x
                } else {
                    eig.y
                };
                let r1 = Vector2::new(sym[(0, 0)] - target, sym[(0, 1)]);
                let r2 = Vector2::new(sym[(1, 0)], sym[(1, 1)] - target);
                let r = if r1.norm() >= r2.norm() { r1 } else { r2 };
                let dir = Vector2::new(-r.y, r.x);
                Ok(AsymptoticDirections::Single(
                    self.unit_direction(norm, &dir)?,
                ))
            }
            _ => {
                // indefinite rank 2: two real roots of h11 t^2 + 2 h12 t + h22.
                // When the leading coefficient vanishes one root escapes to
                // infinity, i.e. the corresponding direction is the chart
                // axis itself; substitute it when the computed root collapses.
                let (h11, h12, h22) = (sym[(0, 0)], sym[(0, 1)], sym[(1, 1)]);
                let disc = (h12 * h12 - h11 * h22).max(0.0).sqrt();
                let scale = h11.abs().max(h22.abs()).max(h12.abs());
                let fix = |d: Vector2<f64>, axis: Vector2<f64>| {
                    if d.norm() <= 1e-12 * scale {
                        axis
                    } else {
                        d
                    }
                };
                let (d1, d2) = if h11.abs() >= h22.abs() {
                    // roots proportional to (t, 1); the escaped root is (0, 1)
                    let axis = Vector2::new(0.0, 1.0);
                    (
                        fix(Vector2::new(-h12 + disc, h11), axis),
                        fix(Vector2::new(-h12 - disc, h11), axis),
                    )
                } else {
                    let axis = Vector2::new(1.0, 0.0);
                    (
                        fix(Vector2::new(h22, -h12 + disc), axis),
                        fix(Vector2::new(h22, -h12 - disc), axis),
                    )
                };
                Ok(AsymptoticDirections::Pair(
                    self.unit_direction(norm, &d1)?,
                    self.unit_direction(norm, &d2)?,
                ))
            }
        }
    }

    fn unit_direction(&self, norm: &NormModel, dir: &Vector2<f64>) -> Result<TangentDirection> {
        let ambient = self.to_ambient(dir);
        let scale = norm.value(&ambient)?;
        Ok(TangentDirection {
            chart: dir / scale,
            ambient: ambient / scale,
        })
    }

    /// The conjugate direction of `x`: the kernel of `h(x, .)`, with a
    /// finite-difference witness that the ambient derivative of the conjugate
    /// field along `x` is tangential.
    pub fn conjugate_direction(
        &self,
        norm: &NormModel,
        chart: &SurfaceChart,
        x_chart: &Vector2<f64>,
    ) -> Result<ConjugateDirection> {
        let sym = 0.5 * (self.fundamental + self.fundamental.transpose());
        let hscale = sym.abs().max();
        let hx = sym * x_chart;
        let hxx = x_chart.dot(&hx);
        if hxx.abs() <= 1e-8 * hscale * x_chart.norm_squared() {
            return Err(GeomError::AsymptoticInput);
        }
        let dir = Vector2::new(-hx.y, hx.x);
        let unit = self.unit_direction(norm, &dir)?;

        // Conjugacy is equivalent to the derivative of the conjugate field
        // along x being tangential; witness it by finite differences.
        let h = FD_FACTOR * chart.domain.diagonal();
        let step = x_chart.normalize() * h;
        let jp = chart.jet(&(self.jet.q + step))?;
        let jm = chart.jet(&(self.jet.q - step))?;
        let y = unit.chart;
        let yp = y.x * jp.f_u + y.y * jp.f_v;
        let ym = y.x * jm.f_u + y.y * jm.f_v;
        let deriv = (yp - ym) / (2.0 * h);
        let tangency_residual = deriv.dot(&self.jet.normal).abs() / deriv.norm().max(1.0);

        Ok(ConjugateDirection {
            direction: unit,
            tangency_residual,
        })
    }

    /// Sign trichotomy of the two Gaussian curvatures and definiteness of the
    /// fundamental form. Values within `sign_tol` of zero are indeterminate
    /// and excluded from the consistency verdict.
    pub fn sign_equivalences(&self, sign_tol: f64) -> Result<SignEquivalences> {
        let report = report_from_analysis(self)?;
        let classify = |v: f64| {
            if v > sign_tol {
                Trichotomy::Positive
            } else if v < -sign_tol {
                Trichotomy::Negative
            } else {
                Trichotomy::Indeterminate
            }
        };
        let k = classify(report.gaussian);
        let k_e = classify(report.euclidean_gaussian);
        let h_definite = match report.fundamental_rank {
            2 => Some(report.fundamental_definite),
            _ => None,
        };
        let consistent = match (k, k_e, h_definite) {
            (Trichotomy::Indeterminate, _, _)
            | (_, Trichotomy::Indeterminate, _)
            | (_, _, None) => None,
            (a, b, Some(def)) => Some(a == b && (a == Trichotomy::Positive) == def),
        };
        Ok(SignEquivalences {
            gaussian_positive: k,
            euclidean_positive: k_e,
            fundamental_definite: h_definite,
            consistent,
        })
    }
}

/// A tangent direction in both coordinate systems, norm-unit.
#[derive(Debug, Clone, Copy)]
pub struct TangentDirection {
    pub chart: Vector2<f64>,
    pub ambient: Vector3<f64>,
}

/// Solutions of `h(X, X) = 0` at a point.
#[derive(Debug, Clone)]
pub enum AsymptoticDirections {
    /// Rank 0: every direction is asymptotic.
    AllDirections,
    /// Definite form: no asymptotic direction.
    None,
    /// Rank 1: the kernel direction.
    Single(TangentDirection),
    /// Indefinite rank 2: two distinct directions.
    Pair(TangentDirection, TangentDirection),
}

/// Conjugate direction with its tangential-derivative witness.
#[derive(Debug, Clone, Copy)]
pub struct ConjugateDirection {
    pub direction: TangentDirection,
    pub tangency_residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Trichotomy {
    Positive,
    Negative,
    Indeterminate,
}

/// The three equivalent positivity statements at a point.
#[derive(Debug, Clone, Copy)]
pub struct SignEquivalences {
    pub gaussian_positive: Trichotomy,
    pub euclidean_positive: Trichotomy,
    /// `Some(definite?)` when the form has full rank, `None` otherwise.
    pub fundamental_definite: Option<bool>,
    /// Agreement of the three when all are determinate.
    pub consistent: Option<bool>,
}

/// Free-function form of [`PointAnalysis::normal_curvature`].
pub fn normal_curvature(
    norm: &NormModel,
    chart: &SurfaceChart,
    q: &Vector2<f64>,
    x_chart: &Vector2<f64>,
) -> Result<f64> {
    analyze(norm, chart, q)?.normal_curvature(x_chart)
}
