//! Manifolds with closed-form exponential and logarithm maps.
//!
//! Four geometries are supported:
//!
//! * `Euclidean(n)`: points and tangent vectors are plain vectors in R^n.
//! * `Hyperbolic(n, kappa)`: the hyperboloid `<x,x>_L = -1/kappa`, `x_n > 0` in
//!   R^{n+1} with the Minkowski product `<u,v>_L = sum_{i<n} u_i v_i - u_n v_n`
//!   (time coordinate last). Sectional curvature is exactly `-kappa`.
//! * `Spd(n)`: symmetric positive definite matrices (row-major, `n*n` coordinates)
//!   with the affine-invariant metric `<U,V>_X = tr(X^-1 U X^-1 V)`. Curvature lies
//!   in `[-1/2, 0]`; the lower bound used by the distortion rates is configurable.
//! * `Sphere(n, sigma)`: the sphere of radius `1/sqrt(sigma)` in R^{n+1}, curvature
//!   exactly `sigma`.
//!
//! Tangent vectors carry their base point. Every binary operation on tangent
//! vectors checks that the bases agree.

use nalgebra::{DMatrix, SymmetricEigen};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::scalar::{sinc, sinhc};

/// Tolerance for the hyperboloid and sphere membership equations.
pub const MEMBERSHIP_TOL: f64 = 1e-9;
/// Tolerance for matrix symmetry (SPD points and tangents).
pub const SYMMETRY_TOL: f64 = 1e-12;
/// SPD matrices with an eigenvalue below this are rejected.
pub const SPD_MIN_EIGENVALUE: f64 = 1e-12;
/// Default lower curvature bound magnitude for the affine-invariant SPD metric.
pub const DEFAULT_SPD_KAPPA: f64 = 0.5;

/// Relative gap from pi*R at which sphere points count as antipodal.
const ANTIPODAL_GAP: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub coords: Vec<f64>,
}

impl Point {
    pub fn new(coords: Vec<f64>) -> Self {
        Point { coords }
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.coords.iter().all(|c| c.is_finite())
    }

    fn max_abs(&self) -> f64 {
        self.coords.iter().fold(0.0_f64, |m, c| m.max(c.abs()))
    }
}

impl From<Vec<f64>> for Point {
    fn from(coords: Vec<f64>) -> Self {
        Point { coords }
    }
}

/// Whether two points are the same base point (exact copies or equal to ~1e-12).
pub fn same_point(a: &Point, b: &Point) -> bool {
    if a.coords.len() != b.coords.len() {
        return false;
    }
    if a.coords == b.coords {
        return true;
    }
    let scale = 1.0 + a.max_abs().max(b.max_abs());
    a.coords.iter().zip(&b.coords).all(|(x, y)| (x - y).abs() <= 1e-12 * scale)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TangentVector {
    pub base: Point,
    pub coords: Vec<f64>,
}

impl TangentVector {
    pub fn new(base: Point, coords: Vec<f64>) -> Self {
        TangentVector { base, coords }
    }

    pub fn zero(base: &Point) -> Self {
        TangentVector { coords: vec![0.0; base.len()], base: base.clone() }
    }

    pub fn scaled(&self, s: f64) -> Self {
        TangentVector { base: self.base.clone(), coords: self.coords.iter().map(|c| s * c).collect() }
    }

    fn check_base(&self, other: &TangentVector) -> Result<()> {
        if same_point(&self.base, &other.base) {
            Ok(())
        } else {
            Err(Error::domain("tangent vectors live at different base points"))
        }
    }

    /// `self + s * other`.
    pub fn axpy(&self, s: f64, other: &TangentVector) -> Result<Self> {
        self.check_base(other)?;
        Ok(TangentVector {
            base: self.base.clone(),
            coords: self.coords.iter().zip(&other.coords).map(|(a, b)| a + s * b).collect(),
        })
    }

    pub fn add(&self, other: &TangentVector) -> Result<Self> {
        self.axpy(1.0, other)
    }

    pub fn sub(&self, other: &TangentVector) -> Result<Self> {
        self.axpy(-1.0, other)
    }

    pub fn is_finite(&self) -> bool {
        self.coords.iter().all(|c| c.is_finite())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Manifold {
    Euclidean {
        dim: usize,
    },
    Hyperbolic {
        dim: usize,
        kappa: f64,
    },
    Spd {
        n: usize,
        #[serde(default = "default_spd_kappa")]
        kappa: f64,
    },
    Sphere {
        dim: usize,
        sigma: f64,
    },
}

fn default_spd_kappa() -> f64 {
    DEFAULT_SPD_KAPPA
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn minkowski(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() - 1;
    dot(&a[..n], &b[..n]) - a[n] * b[n]
}

fn diff(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

impl Manifold {
    pub fn euclidean(dim: usize) -> Self {
        Manifold::Euclidean { dim }
    }

    pub fn hyperbolic(dim: usize, kappa: f64) -> Self {
        Manifold::Hyperbolic { dim, kappa }
    }

    pub fn spd(n: usize) -> Self {
        Manifold::Spd { n, kappa: DEFAULT_SPD_KAPPA }
    }

    pub fn sphere(dim: usize, sigma: f64) -> Self {
        Manifold::Sphere { dim, sigma }
    }

    /// Checks the curvature parameters.
    pub fn validate(&self) -> Result<()> {
        match *self {
            Manifold::Euclidean { dim } | Manifold::Spd { n: dim, .. } if dim == 0 => {
                Err(Error::domain("dimension must be positive"))
            }
            Manifold::Hyperbolic { dim, kappa } if dim == 0 || !(kappa > 0.0) => {
                Err(Error::domain("hyperbolic space needs dim > 0 and kappa > 0"))
            }
            Manifold::Spd { kappa, .. } if !(kappa >= 0.0) => {
                Err(Error::domain("SPD curvature bound must be nonnegative"))
            }
            Manifold::Sphere { dim, sigma } if dim == 0 || !(sigma > 0.0) => {
                Err(Error::domain("sphere needs dim > 0 and sigma > 0"))
            }
            _ => Ok(()),
        }
    }

    /// Magnitude `kappa >= 0` of the lower sectional-curvature bound `-kappa`.
    pub fn kappa(&self) -> f64 {
        match *self {
            Manifold::Hyperbolic { kappa, .. } | Manifold::Spd { kappa, .. } => kappa,
            Manifold::Euclidean { .. } | Manifold::Sphere { .. } => 0.0,
        }
    }

    /// Upper sectional-curvature bound `sigma >= 0`.
    pub fn sigma(&self) -> f64 {
        match *self {
            Manifold::Sphere { sigma, .. } => sigma,
            _ => 0.0,
        }
    }

    /// Nonpositively curved and simply connected.
    pub fn is_hadamard(&self) -> bool {
        !matches!(self, Manifold::Sphere { .. })
    }

    pub fn is_euclidean(&self) -> bool {
        matches!(self, Manifold::Euclidean { .. })
    }

    pub fn ambient_dim(&self) -> usize {
        match *self {
            Manifold::Euclidean { dim } => dim,
            Manifold::Hyperbolic { dim, .. } | Manifold::Sphere { dim, .. } => dim + 1,
            Manifold::Spd { n, .. } => n * n,
        }
    }

    pub fn intrinsic_dim(&self) -> usize {
        match *self {
            Manifold::Euclidean { dim } | Manifold::Hyperbolic { dim, .. } | Manifold::Sphere { dim, .. } => dim,
            Manifold::Spd { n, .. } => n * (n + 1) / 2,
        }
    }

    pub fn name(&self) -> String {
        match *self {
            Manifold::Euclidean { dim } => format!("euclidean({dim})"),
            Manifold::Hyperbolic { dim, kappa } => format!("hyperbolic({dim}, kappa={kappa})"),
            Manifold::Spd { n, kappa } => format!("spd({n}, kappa={kappa})"),
            Manifold::Sphere { dim, sigma } => format!("sphere({dim}, sigma={sigma})"),
        }
    }

    /// Radius `1/sqrt(curvature)` of the model space, for hyperbolic and sphere.
    fn radius(&self) -> f64 {
        match *self {
            Manifold::Hyperbolic { kappa, .. } => 1.0 / kappa.sqrt(),
            Manifold::Sphere { sigma, .. } => 1.0 / sigma.sqrt(),
            _ => 1.0,
        }
    }

    fn check_len(&self, coords: &[f64], what: &str) -> Result<()> {
        if coords.len() != self.ambient_dim() {
            return Err(Error::Domain(format!(
                "{what} has {} coordinates, {} expects {}",
                coords.len(),
                self.name(),
                self.ambient_dim()
            )));
        }
        Ok(())
    }

    fn check_base(&self, x: &Point, v: &TangentVector) -> Result<()> {
        if !same_point(x, &v.base) {
            return Err(Error::domain("tangent vector is not based at the given point"));
        }
        self.check_len(&v.coords, "tangent vector")
    }

    /// Canonical base point: origin, hyperboloid apex, identity, or north pole.
    pub fn origin(&self) -> Point {
        let mut coords = vec![0.0; self.ambient_dim()];
        match *self {
            Manifold::Euclidean { .. } => {}
            Manifold::Hyperbolic { dim, .. } | Manifold::Sphere { dim, .. } => {
                coords[dim] = self.radius();
            }
            Manifold::Spd { n, .. } => {
                for i in 0..n {
                    coords[i * n + i] = 1.0;
                }
            }
        }
        Point::new(coords)
    }

    /// Verifies the membership invariant of `x`.
    pub fn check_point(&self, x: &Point) -> Result<()> {
        self.check_len(&x.coords, "point")?;
        if !x.is_finite() {
            return Err(Error::NonFinite("point coordinates".into()));
        }
        match *self {
            Manifold::Euclidean { .. } => Ok(()),
            Manifold::Hyperbolic { dim, kappa } => {
                let r2 = 1.0 / kappa;
                let m = minkowski(&x.coords, &x.coords);
                let scale = dot(&x.coords, &x.coords).max(1.0);
                if (m + r2).abs() > MEMBERSHIP_TOL * scale {
                    return Err(Error::Domain(format!(
                        "point is off the hyperboloid: <x,x>_L = {m}, expected {}",
                        -r2
                    )));
                }
                if x.coords[dim] <= 0.0 {
                    return Err(Error::domain("hyperboloid point must have positive last coordinate"));
                }
                Ok(())
            }
            Manifold::Sphere { .. } => {
                let r = self.radius();
                let norm = dot(&x.coords, &x.coords).sqrt();
                if (norm - r).abs() > MEMBERSHIP_TOL * r.max(1.0) {
                    return Err(Error::Domain(format!("point is off the sphere: |x| = {norm}, expected {r}")));
                }
                Ok(())
            }
            Manifold::Spd { n, .. } => {
                let m = spd::matrix(&x.coords, n);
                spd::check_symmetric(&m)?;
                let eig = spd::eigen(&m)?;
                let min = eig.eigenvalues.min();
                if min <= SPD_MIN_EIGENVALUE {
                    return Err(Error::Domain(format!(
                        "matrix is not positive definite (smallest eigenvalue {min:e})"
                    )));
                }
                Ok(())
            }
        }
    }

    /// Verifies that `v` is tangent at its base point.
    pub fn check_tangent(&self, v: &TangentVector) -> Result<()> {
        self.check_len(&v.coords, "tangent vector")?;
        match *self {
            Manifold::Euclidean { .. } => Ok(()),
            Manifold::Hyperbolic { .. } => {
                let ip = minkowski(&v.base.coords, &v.coords);
                let scale = (dot(&v.base.coords, &v.base.coords) * dot(&v.coords, &v.coords)).sqrt().max(1.0);
                if ip.abs() > MEMBERSHIP_TOL * scale {
                    return Err(Error::Domain(format!("<x,v>_L = {ip} is not zero")));
                }
                Ok(())
            }
            Manifold::Sphere { .. } => {
                let ip = dot(&v.base.coords, &v.coords);
                let scale = (dot(&v.base.coords, &v.base.coords) * dot(&v.coords, &v.coords)).sqrt().max(1.0);
                if ip.abs() > MEMBERSHIP_TOL * scale {
                    return Err(Error::Domain(format!("<x,v> = {ip} is not zero")));
                }
                Ok(())
            }
            Manifold::Spd { n, .. } => spd::check_symmetric(&spd::matrix(&v.coords, n)),
        }
    }

    /// Orthogonal projection of an ambient vector onto the tangent space at `x`.
    pub fn project_tangent(&self, x: &Point, ambient: Vec<f64>) -> TangentVector {
        let coords = match *self {
            Manifold::Euclidean { .. } => ambient,
            Manifold::Hyperbolic { kappa, .. } => {
                let ip = minkowski(&x.coords, &ambient);
                ambient.iter().zip(&x.coords).map(|(a, b)| a + kappa * ip * b).collect()
            }
            Manifold::Sphere { sigma, .. } => {
                let ip = dot(&x.coords, &ambient);
                ambient.iter().zip(&x.coords).map(|(a, b)| a - sigma * ip * b).collect()
            }
            Manifold::Spd { n, .. } => {
                let m = spd::matrix(&ambient, n);
                spd::flatten(&((&m + m.transpose()) * 0.5))
            }
        };
        TangentVector::new(x.clone(), coords)
    }

    /// Nearest manifold point to an ambient vector (used for coordinate means).
    pub fn project_point(&self, ambient: Vec<f64>) -> Result<Point> {
        self.check_len(&ambient, "point")?;
        match *self {
            Manifold::Euclidean { .. } => Ok(Point::new(ambient)),
            Manifold::Hyperbolic { .. } => {
                let m = minkowski(&ambient, &ambient);
                let last = *ambient.last().unwrap_or(&0.0);
                if !(m < 0.0) || last <= 0.0 {
                    return Err(Error::domain("vector is not future timelike"));
                }
                let s = self.radius() / (-m).sqrt();
                Ok(Point::new(ambient.iter().map(|c| c * s).collect()))
            }
            Manifold::Sphere { .. } => {
                let norm = dot(&ambient, &ambient).sqrt();
                if norm == 0.0 {
                    return Err(Error::domain("cannot project the zero vector onto the sphere"));
                }
                let s = self.radius() / norm;
                Ok(Point::new(ambient.iter().map(|c| c * s).collect()))
            }
            Manifold::Spd { n, .. } => {
                let m = spd::matrix(&ambient, n);
                let p = Point::new(spd::flatten(&((&m + m.transpose()) * 0.5)));
                self.check_point(&p)?;
                Ok(p)
            }
        }
    }

    /// Re-projects a point computed in floating point back onto the manifold.
    fn retract_drift(&self, mut p: Vec<f64>) -> Vec<f64> {
        match *self {
            Manifold::Hyperbolic { dim, .. } => {
                let r = self.radius();
                let spatial = dot(&p[..dim], &p[..dim]);
                p[dim] = (r * r + spatial).sqrt();
                p
            }
            Manifold::Sphere { .. } => {
                let norm = dot(&p, &p).sqrt();
                let s = self.radius() / norm;
                p.iter_mut().for_each(|c| *c *= s);
                p
            }
            Manifold::Spd { n, .. } => {
                let m = spd::matrix(&p, n);
                spd::flatten(&((&m + m.transpose()) * 0.5))
            }
            Manifold::Euclidean { .. } => p,
        }
    }

    pub fn inner(&self, x: &Point, u: &TangentVector, v: &TangentVector) -> Result<f64> {
        self.check_base(x, u)?;
        self.check_base(x, v)?;
        match *self {
            Manifold::Euclidean { .. } | Manifold::Sphere { .. } => Ok(dot(&u.coords, &v.coords)),
            Manifold::Hyperbolic { .. } => Ok(minkowski(&u.coords, &v.coords)),
            Manifold::Spd { n, .. } => {
                let frame = spd::Frame::new(&x.coords, n)?;
                let a = frame.whiten(&u.coords);
                let b = frame.whiten(&v.coords);
                Ok(a.dot(&b))
            }
        }
    }

    pub fn norm(&self, x: &Point, v: &TangentVector) -> Result<f64> {
        self.check_base(x, v)?;
        self.tangent_norm(v)
    }

    /// Norm of `v` at its own base point.
    pub fn tangent_norm(&self, v: &TangentVector) -> Result<f64> {
        match *self {
            Manifold::Euclidean { .. } | Manifold::Sphere { .. } => Ok(dot(&v.coords, &v.coords).sqrt()),
            Manifold::Hyperbolic { .. } => Ok(minkowski(&v.coords, &v.coords).max(0.0).sqrt()),
            Manifold::Spd { n, .. } => {
                let frame = spd::Frame::new(&v.base.coords, n)?;
                Ok(frame.whiten(&v.coords).norm())
            }
        }
    }

    pub fn exp(&self, x: &Point, v: &TangentVector) -> Result<Point> {
        self.check_base(x, v)?;
        if !v.is_finite() {
            return Err(Error::NonFinite("tangent vector passed to exp".into()));
        }
        let coords = match *self {
            Manifold::Euclidean { .. } => x.coords.iter().zip(&v.coords).map(|(a, b)| a + b).collect(),
            Manifold::Hyperbolic { .. } => {
                let nv = minkowski(&v.coords, &v.coords).max(0.0).sqrt();
                if nv == 0.0 {
                    return Ok(x.clone());
                }
                let t = nv / self.radius();
                let (c, s) = (t.cosh(), sinhc(t));
                let p = x.coords.iter().zip(&v.coords).map(|(a, b)| c * a + s * b).collect();
                self.retract_drift(p)
            }
            Manifold::Sphere { .. } => {
                let nv = dot(&v.coords, &v.coords).sqrt();
                let limit = std::f64::consts::PI * self.radius();
                if nv >= limit {
                    return Err(Error::Injectivity { norm: nv, limit });
                }
                if nv == 0.0 {
                    return Ok(x.clone());
                }
                let t = nv / self.radius();
                let (c, s) = (t.cos(), sinc(t));
                let p = x.coords.iter().zip(&v.coords).map(|(a, b)| c * a + s * b).collect();
                self.retract_drift(p)
            }
            Manifold::Spd { n, .. } => {
                let frame = spd::Frame::new(&x.coords, n)?;
                let m = frame.whiten(&v.coords);
                let e = spd::apply(&spd::eigen(&m)?, f64::exp);
                self.retract_drift(spd::flatten(&frame.color(&e)))
            }
        };
        Ok(Point::new(coords))
    }

    pub fn log(&self, x: &Point, y: &Point) -> Result<TangentVector> {
        self.check_len(&x.coords, "point")?;
        self.check_len(&y.coords, "point")?;
        let coords = match *self {
            Manifold::Euclidean { .. } => diff(&y.coords, &x.coords),
            Manifold::Hyperbolic { kappa, .. } => {
                let w = diff(&y.coords, &x.coords);
                let q = minkowski(&w, &w).max(0.0);
                let r = self.radius();
                let d = 2.0 * r * (q.sqrt() / (2.0 * r)).asinh();
                // u = y + kappa <x,y>_L x, written to avoid cancellation for nearby points.
                let scale = 1.0 / sinhc(d / r);
                w.iter().zip(&x.coords).map(|(wi, xi)| (wi - 0.5 * kappa * q * xi) * scale).collect()
            }
            Manifold::Sphere { sigma, .. } => {
                let w = diff(&y.coords, &x.coords);
                let q = dot(&w, &w);
                let r = self.radius();
                let d = 2.0 * r * (q.sqrt() / (2.0 * r)).min(1.0).asin();
                if d >= std::f64::consts::PI * r * (1.0 - ANTIPODAL_GAP) {
                    return Err(Error::Antipodal);
                }
                let scale = 1.0 / sinc(d / r);
                w.iter().zip(&x.coords).map(|(wi, xi)| (wi + 0.5 * sigma * q * xi) * scale).collect()
            }
            Manifold::Spd { n, .. } => {
                let frame = spd::Frame::new(&x.coords, n)?;
                let m = frame.whiten(&y.coords);
                let eig = spd::eigen(&m)?;
                if eig.eigenvalues.min() <= 0.0 {
                    return Err(Error::domain("log of a non positive definite matrix"));
                }
                let l = spd::apply(&eig, f64::ln);
                let c = frame.color(&l);
                spd::flatten(&((&c + c.transpose()) * 0.5))
            }
        };
        Ok(TangentVector::new(x.clone(), coords))
    }

    pub fn distance(&self, x: &Point, y: &Point) -> Result<f64> {
        self.check_len(&x.coords, "point")?;
        self.check_len(&y.coords, "point")?;
        match *self {
            Manifold::Euclidean { .. } => {
                let w = diff(&y.coords, &x.coords);
                Ok(dot(&w, &w).sqrt())
            }
            Manifold::Hyperbolic { .. } => {
                let w = diff(&y.coords, &x.coords);
                let q = minkowski(&w, &w).max(0.0);
                let r = self.radius();
                Ok(2.0 * r * (q.sqrt() / (2.0 * r)).asinh())
            }
            Manifold::Sphere { .. } => {
                let w = diff(&y.coords, &x.coords);
                let r = self.radius();
                Ok(2.0 * r * (dot(&w, &w).sqrt() / (2.0 * r)).min(1.0).asin())
            }
            Manifold::Spd { n, .. } => {
                let frame = spd::Frame::new(&x.coords, n)?;
                let eig = spd::eigen(&frame.whiten(&y.coords))?;
                if eig.eigenvalues.min() <= 0.0 {
                    return Err(Error::domain("distance to a non positive definite matrix"));
                }
                Ok(eig.eigenvalues.iter().map(|l| l.ln().powi(2)).sum::<f64>().sqrt())
            }
        }
    }

    /// `(log_x(y), d(x, y))` for each `y`, sharing the base-point work.
    pub fn logs_and_distances(&self, x: &Point, ys: &[Point]) -> Result<Vec<(TangentVector, f64)>> {
        match *self {
            Manifold::Spd { n, .. } => {
                let frame = spd::Frame::new(&x.coords, n)?;
                ys.iter()
                    .map(|y| {
                        self.check_len(&y.coords, "point")?;
                        let eig = spd::eigen(&frame.whiten(&y.coords))?;
                        if eig.eigenvalues.min() <= 0.0 {
                            return Err(Error::domain("log of a non positive definite matrix"));
                        }
                        let d = eig.eigenvalues.iter().map(|l| l.ln().powi(2)).sum::<f64>().sqrt();
                        let c = frame.color(&spd::apply(&eig, f64::ln));
                        let v = spd::flatten(&((&c + c.transpose()) * 0.5));
                        Ok((TangentVector::new(x.clone(), v), d))
                    })
                    .collect()
            }
            _ => ys.iter().map(|y| Ok((self.log(x, y)?, self.distance(x, y)?))).collect(),
        }
    }

    /// `|| log_u(v) - log_u(w) ||_u`.
    pub fn projected_distance(&self, u: &Point, v: &Point, w: &Point) -> Result<f64> {
        let lv = self.log(u, v)?;
        let lw = self.log(u, w)?;
        self.tangent_norm(&lv.sub(&lw)?)
    }

    /// Uniformly random unit tangent direction at `x`.
    pub fn random_unit_tangent(&self, x: &Point, rng: &mut Rng) -> Result<TangentVector> {
        loop {
            let ambient: Vec<f64> = (0..self.ambient_dim()).map(|_| StandardNormal.sample(rng)).collect();
            let v = self.project_tangent(x, ambient);
            let norm = self.tangent_norm(&v)?;
            if norm > 1e-8 {
                return Ok(v.scaled(1.0 / norm));
            }
        }
    }

    /// Random point at geodesic distance at most `radius` from `center`,
    /// uniform in the radial parameter raised to `1/dim`.
    pub fn random_point_in_ball(&self, center: &Point, radius: f64, rng: &mut Rng) -> Result<Point> {
        let dir = self.random_unit_tangent(center, rng)?;
        let u = crate::rng::uniform(rng, 0.0, 1.0);
        let r = radius * u.powf(1.0 / self.intrinsic_dim() as f64);
        self.exp(center, &dir.scaled(r))
    }
}

mod spd {
    use super::*;

    pub(super) fn matrix(coords: &[f64], n: usize) -> DMatrix<f64> {
        DMatrix::from_row_slice(n, n, coords)
    }

    pub(super) fn flatten(m: &DMatrix<f64>) -> Vec<f64> {
        let n = m.nrows();
        let mut out = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                out.push(m[(i, j)]);
            }
        }
        out
    }

    pub(super) fn check_symmetric(m: &DMatrix<f64>) -> Result<()> {
        let scale = m.amax().max(1.0);
        let asym = (m - m.transpose()).amax();
        if asym > SYMMETRY_TOL * scale {
            return Err(Error::Domain(format!("matrix is not symmetric (max |M - M^T| = {asym:e})")));
        }
        Ok(())
    }

    pub(super) fn eigen(m: &DMatrix<f64>) -> Result<SymmetricEigen<f64, nalgebra::Dyn>> {
        let sym = (m + m.transpose()) * 0.5;
        SymmetricEigen::try_new(sym, f64::EPSILON, 10_000)
            .ok_or_else(|| Error::Convergence("symmetric eigendecomposition".into()))
    }

    /// `V diag(f(lambda)) V^T`.
    pub(super) fn apply(eig: &SymmetricEigen<f64, nalgebra::Dyn>, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
        let v = &eig.eigenvectors;
        let d = DMatrix::from_diagonal(&eig.eigenvalues.map(f));
        v * d * v.transpose()
    }

    /// Square root and inverse square root of an SPD base point.
    pub(super) struct Frame {
        sqrt: DMatrix<f64>,
        inv_sqrt: DMatrix<f64>,
    }

    impl Frame {
        pub(super) fn new(coords: &[f64], n: usize) -> Result<Self> {
            let eig = eigen(&matrix(coords, n))?;
            if eig.eigenvalues.min() <= SPD_MIN_EIGENVALUE {
                return Err(Error::domain("base point is not positive definite"));
            }
            Ok(Frame { sqrt: apply(&eig, f64::sqrt), inv_sqrt: apply(&eig, |l| 1.0 / l.sqrt()) })
        }

        /// `X^{-1/2} M X^{-1/2}`, symmetrized.
        pub(super) fn whiten(&self, coords: &[f64]) -> DMatrix<f64> {
            let n = self.sqrt.nrows();
            let m = &self.inv_sqrt * matrix(coords, n) * &self.inv_sqrt;
            (&m + m.transpose()) * 0.5
        }

        /// `X^{1/2} M X^{1/2}`.
        pub(super) fn color(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
            &self.sqrt * m * &self.sqrt
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use approx::assert_abs_diff_eq;

    fn pt(c: &[f64]) -> Point {
        Point::new(c.to_vec())
    }

    #[test]
    fn euclidean_exp_log_are_vector_ops() {
        let m = Manifold::euclidean(2);
        let x = pt(&[1.0, 2.0]);
        let v = TangentVector::new(x.clone(), vec![3.0, -1.0]);
        assert_eq!(m.exp(&x, &v).unwrap().coords, vec![4.0, 1.0]);
        let l = m.log(&x, &pt(&[4.0, 1.0])).unwrap();
        assert_eq!(l.coords, vec![3.0, -1.0]);
        let e1 = TangentVector::new(x.clone(), vec![1.0, 0.0]);
        let e2 = TangentVector::new(x.clone(), vec![0.0, 1.0]);
        assert_eq!(m.inner(&x, &e1, &e2).unwrap(), 0.0);
    }

    #[test]
    fn exp_of_zero_is_identity_everywhere() {
        let mut r = rng::seeded(11);
        for m in [Manifold::euclidean(3), Manifold::hyperbolic(3, 2.0), Manifold::spd(3), Manifold::sphere(3, 0.5)] {
            let x = m.random_point_in_ball(&m.origin(), 1.0, &mut r).unwrap();
            let y = m.exp(&x, &TangentVector::zero(&x)).unwrap();
            for (a, b) in x.coords.iter().zip(&y.coords) {
                assert_abs_diff_eq!(a, b, epsilon = 1e-12);
            }
            let l = m.log(&x, &x).unwrap();
            assert!(m.tangent_norm(&l).unwrap() < 1e-7);
            assert!(m.distance(&x, &x).unwrap() < 1e-12);
        }
    }

    #[test]
    fn hyperbolic_closed_form_geodesic() {
        let m = Manifold::hyperbolic(2, 1.0);
        let x = pt(&[0.0, 0.0, 1.0]);
        let v = TangentVector::new(x.clone(), vec![1.0, 0.0, 0.0]);
        let y = m.exp(&x, &v).unwrap();
        let expected = [1f64.sinh(), 0.0, 1f64.cosh()];
        for (a, b) in y.coords.iter().zip(expected) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(y.coords[0], 1.175201, epsilon = 1e-6);
        assert_abs_diff_eq!(y.coords[2], 1.543081, epsilon = 1e-6);
        let back = m.log(&x, &pt(&[1.175201, 0.0, 1.543081])).unwrap();
        assert_abs_diff_eq!(back.coords[0], 1.0, epsilon = 1e-6);
        let exact = m.log(&x, &y).unwrap();
        assert_abs_diff_eq!(exact.coords[0], 1.0, epsilon = 1e-8);
        assert_abs_diff_eq!(exact.coords[1], 0.0, epsilon = 1e-8);
        assert_abs_diff_eq!(exact.coords[2], 0.0, epsilon = 1e-8);
        assert_abs_diff_eq!(m.distance(&x, &y).unwrap(), 1.0, epsilon = 1e-12);
        // arccosh(-<x,y>_L) independently
        let ip = -(y.coords[2]);
        assert_abs_diff_eq!((-ip).acosh(), 1.0, epsilon = 1e-8);
    }

    #[test]
    fn spd_distance_and_inner() {
        let m = Manifold::spd(2);
        let i = pt(&[1.0, 0.0, 0.0, 1.0]);
        let e = std::f64::consts::E;
        let y = pt(&[e, 0.0, 0.0, e]);
        assert_abs_diff_eq!(m.distance(&i, &y).unwrap(), 2f64.sqrt(), epsilon = 1e-12);
        let u = TangentVector::new(i.clone(), vec![1.0, 0.0, 0.0, 1.0]);
        assert_abs_diff_eq!(m.inner(&i, &u, &u).unwrap(), 2.0, epsilon = 1e-12);
        // <U,V>_X = tr(X^-1 U X^-1 V) at a non-identity base
        let x = pt(&[2.0, 0.0, 0.0, 4.0]);
        let u = TangentVector::new(x.clone(), vec![1.0, 1.0, 1.0, 0.0]);
        // X^-1 U = [[.5,.5],[.25,0]]; squared trace = .25 + .125 + .125 + 0
        assert_abs_diff_eq!(m.inner(&x, &u, &u).unwrap(), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn base_mismatch_is_a_domain_error() {
        let m = Manifold::euclidean(2);
        let x = pt(&[0.0, 0.0]);
        let v = TangentVector::new(pt(&[1.0, 0.0]), vec![1.0, 1.0]);
        assert!(matches!(m.exp(&x, &v), Err(Error::Domain(_))));
        assert!(matches!(m.inner(&x, &v, &v), Err(Error::Domain(_))));
    }

    #[test]
    fn sphere_injectivity_and_antipodes() {
        let m = Manifold::sphere(2, 1.0);
        let x = m.origin();
        let v = TangentVector::new(x.clone(), vec![4.0, 0.0, 0.0]);
        assert!(matches!(m.exp(&x, &v), Err(Error::Injectivity { .. })));
        let anti = pt(&[0.0, 0.0, -1.0]);
        assert!(matches!(m.log(&x, &anti), Err(Error::Antipodal)));
    }

    #[test]
    fn membership_checks() {
        let h = Manifold::hyperbolic(2, 1.0);
        assert!(h.check_point(&pt(&[0.0, 0.0, 1.0])).is_ok());
        assert!(h.check_point(&pt(&[0.0, 0.0, -1.0])).is_err());
        assert!(h.check_point(&pt(&[0.5, 0.0, 1.0])).is_err());
        let s = Manifold::spd(2);
        assert!(s.check_point(&pt(&[1.0, 0.5, 0.5, 1.0])).is_ok());
        assert!(s.check_point(&pt(&[1.0, 0.5, 0.4, 1.0])).is_err());
        assert!(s.check_point(&pt(&[1.0, 2.0, 2.0, 1.0])).is_err());
        let sp = Manifold::sphere(2, 4.0);
        assert!(sp.check_point(&pt(&[0.0, 0.5, 0.0])).is_ok());
        assert!(sp.check_point(&pt(&[0.0, 1.0, 0.0])).is_err());
    }

    #[test]
    fn exp_output_stays_on_manifold() {
        let mut r = rng::seeded(5);
        for m in [Manifold::hyperbolic(4, 0.7), Manifold::spd(3), Manifold::sphere(4, 2.0)] {
            for _ in 0..50 {
                let x = m.random_point_in_ball(&m.origin(), 1.0, &mut r).unwrap();
                let v = m.random_unit_tangent(&x, &mut r).unwrap().scaled(1.0);
                let y = m.exp(&x, &v).unwrap();
                m.check_point(&y).unwrap();
                m.check_tangent(&m.log(&x, &y).unwrap()).unwrap();
            }
        }
    }
}
