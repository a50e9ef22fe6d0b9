//! Benchmark problems: strongly convex quadratics, Karcher means on Hadamard
//! manifolds and weighted means on a spherical cap.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::distortion::trig_coeff;
use crate::error::{Error, Result};
use crate::geometry::{Manifold, Point, TangentVector};
use crate::rng::{self, Rng};
use crate::scalar::xcot;

/// Floor for the strong-convexity constant of sphere problems.
pub const SPHERE_MU_FLOOR: f64 = 1e-3;
pub const ORACLE_TOL: f64 = 1e-10;
pub const ORACLE_MAX_ITERS: usize = 1_000_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Objective {
    /// `1/2 (x - c)^T H (x - c)` with `H` row-major.
    Quadratic { h: Vec<f64>, center: Vec<f64> },
    /// `1/2 sum_i w_i d(x, p_i)^2`.
    WeightedMean { anchors: Vec<Point>, weights: Vec<f64> },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Problem {
    pub manifold: Manifold,
    pub objective: Objective,
    pub mu: f64,
    pub l: f64,
    pub optimum: Option<Point>,
    pub initial: Point,
    /// Center of the ball on which `mu` and `L` are certified.
    pub center: Point,
    /// Largest anchor distance from `center` (0 for quadratics).
    pub anchor_radius: f64,
    pub feasible_radius: f64,
    /// Iterates must stay within this distance of `center` (sphere problems).
    pub domain_radius: Option<f64>,
}

fn matvec(h: &[f64], x: &[f64]) -> Vec<f64> {
    let n = x.len();
    (0..n).map(|i| h[i * n..(i + 1) * n].iter().zip(x).map(|(a, b)| a * b).sum()).collect()
}

impl Problem {
    pub fn value(&self, x: &Point) -> Result<f64> {
        match &self.objective {
            Objective::Quadratic { h, center } => {
                let w: Vec<f64> = x.coords.iter().zip(center).map(|(a, b)| a - b).collect();
                let hw = matvec(h, &w);
                Ok(0.5 * hw.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>())
            }
            Objective::WeightedMean { anchors, weights } => {
                let mut f = 0.0;
                for (p, w) in anchors.iter().zip(weights) {
                    f += w * self.manifold.distance(x, p)?.powi(2);
                }
                Ok(0.5 * f)
            }
        }
    }

    pub fn gradient(&self, x: &Point) -> Result<TangentVector> {
        Ok(self.value_and_gradient(x)?.1)
    }

    pub fn value_and_gradient(&self, x: &Point) -> Result<(f64, TangentVector)> {
        let (f, g) = match &self.objective {
            Objective::Quadratic { h, center } => {
                let w: Vec<f64> = x.coords.iter().zip(center).map(|(a, b)| a - b).collect();
                let hw = matvec(h, &w);
                let f = 0.5 * hw.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>();
                (f, TangentVector::new(x.clone(), hw))
            }
            Objective::WeightedMean { anchors, weights } => {
                let logs = self.manifold.logs_and_distances(x, anchors)?;
                let mut g = vec![0.0; x.len()];
                let mut f = 0.0;
                for ((v, d), w) in logs.iter().zip(weights) {
                    f += w * d * d;
                    for (gi, vi) in g.iter_mut().zip(&v.coords) {
                        *gi -= w * vi;
                    }
                }
                (0.5 * f, TangentVector::new(x.clone(), g))
            }
        };
        if !f.is_finite() || !g.is_finite() {
            return Err(Error::NonFinite("objective or gradient".into()));
        }
        Ok((f, g))
    }

    pub fn gradient_norm(&self, x: &Point) -> Result<f64> {
        self.manifold.tangent_norm(&self.gradient(x)?)
    }

    pub fn f_star(&self) -> Result<Option<f64>> {
        self.optimum.as_ref().map(|x| self.value(x)).transpose()
    }

    /// Rebuilds the constants for a larger certified ball (same optimum).
    pub fn with_feasible_radius(&self, radius: f64) -> Result<Problem> {
        let mut p = self.clone();
        p.feasible_radius = radius;
        match (&self.objective, &self.manifold) {
            (Objective::Quadratic { .. }, _) => {}
            (Objective::WeightedMean { .. }, Manifold::Sphere { sigma, .. }) => {
                p.mu = sphere_mu(*sigma, self.anchor_radius + radius);
            }
            (Objective::WeightedMean { .. }, m) => {
                p.l = trig_coeff(m.kappa(), self.anchor_radius + radius);
            }
        }
        Ok(p)
    }

    /// Replaces the starting point.
    pub fn with_initial(mut self, x0: Point) -> Result<Problem> {
        self.manifold.check_point(&x0)?;
        self.initial = x0;
        Ok(self)
    }
}

fn sphere_mu(sigma: f64, reach: f64) -> f64 {
    xcot(sigma.sqrt() * reach).max(SPHERE_MU_FLOOR)
}

/// Orthogonal matrix from the QR factorization of a Gaussian matrix.
fn random_orthogonal(dim: usize, rng: &mut Rng) -> DMatrix<f64> {
    let g = DMatrix::from_vec(dim, dim, rng::normal_vec(rng, dim * dim));
    let qr = g.qr();
    let (q, r) = (qr.q(), qr.r());
    // sign fix so the distribution is Haar
    let signs = DVector::from_iterator(dim, (0..dim).map(|i| if r[(i, i)] < 0.0 { -1.0 } else { 1.0 }));
    q * DMatrix::from_diagonal(&signs)
}

/// Quadratic with spectrum in `[mu, L]` (both endpoints attained), a random
/// rotation and a Gaussian center. Starts at the origin.
pub fn make_quadratic(dim: usize, mu: f64, l: f64, rng: &mut Rng) -> Result<Problem> {
    if dim == 0 || !(mu > 0.0) || !(l >= mu) || !l.is_finite() {
        return Err(Error::Domain(format!("quadratic needs dim > 0 and 0 < mu <= L (got dim={dim}, mu={mu}, L={l})")));
    }
    let mut spectrum: Vec<f64> = (0..dim).map(|_| rng::uniform(rng, mu, l)).collect();
    spectrum[0] = mu;
    if dim > 1 {
        spectrum[dim - 1] = l;
    }
    let q = random_orthogonal(dim, rng);
    let h = &q * DMatrix::from_diagonal(&DVector::from_vec(spectrum)) * q.transpose();
    let h = (&h + h.transpose()) * 0.5;
    let center = rng::normal_vec(rng, dim);
    quadratic_from_parts(flatten(&h), center, Some((mu, l)))
}

fn flatten(m: &DMatrix<f64>) -> Vec<f64> {
    let n = m.nrows();
    (0..n * n).map(|k| m[(k / n, k % n)]).collect()
}

/// Quadratic from an explicit symmetric `H`. `mu` and `L` default to the
/// extreme eigenvalues.
pub fn quadratic_from_parts(h: Vec<f64>, center: Vec<f64>, constants: Option<(f64, f64)>) -> Result<Problem> {
    let dim = center.len();
    if h.len() != dim * dim || dim == 0 {
        return Err(Error::domain("H must be dim x dim and match the center"));
    }
    let hm = DMatrix::from_row_slice(dim, dim, &h);
    if (&hm - hm.transpose()).amax() > 1e-12 * hm.amax().max(1.0) {
        return Err(Error::domain("H is not symmetric"));
    }
    let (mu, l) = match constants {
        Some(c) => c,
        None => {
            let eig = hm.clone().symmetric_eigenvalues();
            (eig.min(), eig.max())
        }
    };
    if !(mu > 0.0) || !(l >= mu) {
        return Err(Error::Domain(format!("H must be positive definite (mu={mu}, L={l})")));
    }
    let manifold = Manifold::euclidean(dim);
    let optimum = Point::new(center.clone());
    Ok(Problem {
        initial: manifold.origin(),
        center: optimum.clone(),
        manifold,
        objective: Objective::Quadratic { h, center },
        mu,
        l,
        optimum: Some(optimum),
        anchor_radius: 0.0,
        feasible_radius: f64::INFINITY,
        domain_radius: None,
    })
}

fn check_weights(weights: &[f64], count: usize) -> Result<()> {
    if weights.len() != count || count == 0 {
        return Err(Error::Domain(format!("need one weight per anchor ({} weights, {count} anchors)", weights.len())));
    }
    if weights.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
        return Err(Error::domain("weights must be positive and finite"));
    }
    let sum: f64 = weights.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::Domain(format!("weights sum to {sum}, not 1")));
    }
    Ok(())
}

/// Normalized coordinate mean of the anchors.
fn reference_point(m: &Manifold, anchors: &[Point]) -> Result<Point> {
    let mut mean = vec![0.0; m.ambient_dim()];
    for p in anchors {
        for (a, c) in mean.iter_mut().zip(&p.coords) {
            *a += c / anchors.len() as f64;
        }
    }
    m.project_point(mean)
}

struct MeanSetup {
    center: Point,
    radius: f64,
    initial: Point,
}

fn mean_setup(m: &Manifold, anchors: &[Point], weights: &[f64]) -> Result<MeanSetup> {
    m.validate()?;
    check_weights(weights, anchors.len())?;
    for p in anchors {
        m.check_point(p)?;
    }
    let center = reference_point(m, anchors)?;
    let mut radius = 0.0;
    let mut far = 0;
    for (i, p) in anchors.iter().enumerate() {
        let d = m.distance(&center, p)?;
        if d > radius {
            radius = d;
            far = i;
        }
    }
    Ok(MeanSetup { center, radius, initial: anchors[far].clone() })
}

/// Weighted Karcher mean on a Hadamard manifold. `mu = 1` and
/// `L = trig_coeff(kappa, R + r)` where `R` bounds the anchor distances from
/// the reference point and `r` (default `R`) is the radius of the certified ball.
pub fn make_karcher(
    manifold: Manifold,
    anchors: Vec<Point>,
    weights: Vec<f64>,
    feasible_radius: Option<f64>,
) -> Result<Problem> {
    if !manifold.is_hadamard() {
        return Err(Error::domain("Karcher problems need a Hadamard manifold; use make_sphere_mean"));
    }
    let setup = mean_setup(&manifold, &anchors, &weights)?;
    let feasible = feasible_radius.unwrap_or(setup.radius);
    let mut p = Problem {
        l: trig_coeff(manifold.kappa(), setup.radius + feasible),
        mu: 1.0,
        objective: Objective::WeightedMean { anchors, weights },
        optimum: None,
        initial: setup.initial,
        center: setup.center,
        anchor_radius: setup.radius,
        feasible_radius: feasible,
        domain_radius: None,
        manifold,
    };
    let start = p.center.clone();
    p.optimum = Some(oracle_optimum(&p, &start, ORACLE_TOL)?);
    Ok(p)
}

/// Weighted mean on a spherical cap of radius `pi / (4 sqrt(sigma))`.
pub fn make_sphere_mean(manifold: Manifold, anchors: Vec<Point>, weights: Vec<f64>) -> Result<Problem> {
    let sigma = match manifold {
        Manifold::Sphere { sigma, .. } => sigma,
        _ => return Err(Error::domain("make_sphere_mean needs a sphere")),
    };
    let setup = mean_setup(&manifold, &anchors, &weights)?;
    let domain = std::f64::consts::FRAC_PI_4 / sigma.sqrt();
    if setup.radius >= domain {
        return Err(Error::Domain(format!(
            "anchors reach distance {} from their mean; the cap radius is {domain}",
            setup.radius
        )));
    }
    let mut p = Problem {
        mu: sphere_mu(sigma, 2.0 * setup.radius),
        l: 1.0,
        objective: Objective::WeightedMean { anchors, weights },
        optimum: None,
        initial: setup.initial,
        center: setup.center,
        anchor_radius: setup.radius,
        feasible_radius: setup.radius,
        domain_radius: Some(domain),
        manifold,
    };
    let start = p.center.clone();
    p.optimum = Some(oracle_optimum(&p, &start, ORACLE_TOL)?);
    Ok(p)
}

/// `count` anchors drawn uniformly in the geodesic ball `B(center, radius)`.
pub fn random_anchors(m: &Manifold, center: &Point, count: usize, radius: f64, rng: &mut Rng) -> Result<Vec<Point>> {
    (0..count).map(|_| m.random_point_in_ball(center, radius, rng)).collect()
}

/// Positive weights summing to one.
pub fn random_weights(count: usize, rng: &mut Rng) -> Vec<f64> {
    let raw: Vec<f64> = (0..count).map(|_| rng::uniform(rng, 0.1, 1.0)).collect();
    let s: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / s).collect()
}

pub fn uniform_weights(count: usize) -> Vec<f64> {
    vec![1.0 / count as f64; count]
}

/// Riemannian gradient descent with step `1/L` until `||grad|| <= tol`.
pub fn oracle_optimum(problem: &Problem, start: &Point, tol: f64) -> Result<Point> {
    let m = &problem.manifold;
    let mut x = start.clone();
    let step = 1.0 / problem.l;
    for _ in 0..ORACLE_MAX_ITERS {
        let g = problem.gradient(&x)?;
        let norm = m.tangent_norm(&g)?;
        if norm <= tol {
            return Ok(x);
        }
        x = m.exp(&x, &g.scaled(-step))?;
    }
    let norm = problem.gradient_norm(&x)?;
    if norm <= tol {
        return Ok(x);
    }
    Err(Error::Convergence(format!("oracle stopped after {ORACLE_MAX_ITERS} steps with gradient norm {norm:e}")))
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct GradientAudit {
    pub points: usize,
    /// Largest `|fd - <grad, v>| / max(1, ||grad||)` over unit directions `v`.
    pub max_rel_error: f64,
    pub pairs: usize,
    pub convexity_violations: usize,
    pub smoothness_violations: usize,
    /// Smallest slack of the strong-convexity inequality (negative = violated).
    pub min_convexity_slack: f64,
    pub min_smoothness_slack: f64,
}

impl GradientAudit {
    pub fn passed(&self, tol: f64) -> bool {
        self.max_rel_error <= tol && self.convexity_violations == 0 && self.smoothness_violations == 0
    }
}

/// Finite-difference check of the gradient plus sampled strong-convexity and
/// smoothness inequalities on pairs inside the certified ball.
pub fn gradient_audit(problem: &Problem, n_points: usize, n_pairs: usize, rng: &mut Rng) -> Result<GradientAudit> {
    let m = &problem.manifold;
    let h = 1e-5;
    let radius = if problem.feasible_radius.is_finite() {
        problem.feasible_radius
    } else {
        problem.manifold.distance(&problem.center, &problem.initial)?.max(1.0)
    };
    let mut out = GradientAudit {
        points: n_points,
        pairs: n_pairs,
        min_convexity_slack: f64::INFINITY,
        min_smoothness_slack: f64::INFINITY,
        ..Default::default()
    };
    for _ in 0..n_points {
        let x = m.random_point_in_ball(&problem.center, radius, rng)?;
        let v = m.random_unit_tangent(&x, rng)?;
        let g = problem.gradient(&x)?;
        let exact = m.inner(&x, &g, &v)?;
        let fp = problem.value(&m.exp(&x, &v.scaled(h))?)?;
        let fm = problem.value(&m.exp(&x, &v.scaled(-h))?)?;
        let fd = (fp - fm) / (2.0 * h);
        let scale = m.tangent_norm(&g)?.max(1.0);
        out.max_rel_error = out.max_rel_error.max((fd - exact).abs() / scale);
    }
    for _ in 0..n_pairs {
        let x = m.random_point_in_ball(&problem.center, radius, rng)?;
        let y = m.random_point_in_ball(&problem.center, radius, rng)?;
        let (fx, g) = problem.value_and_gradient(&x)?;
        let fy = problem.value(&y)?;
        let l = m.log(&x, &y)?;
        let lin = fx + m.inner(&x, &g, &l)?;
        let d2 = m.distance(&x, &y)?.powi(2);
        let tol = 1e-9 * (1.0 + fx.abs() + fy.abs());
        let cvx = fy - lin - 0.5 * problem.mu * d2;
        let smooth = lin + 0.5 * problem.l * d2 - fy;
        out.min_convexity_slack = out.min_convexity_slack.min(cvx);
        out.min_smoothness_slack = out.min_smoothness_slack.min(smooth);
        if cvx < -tol {
            out.convexity_violations += 1;
        }
        if smooth < -tol {
            out.smoothness_violations += 1;
        }
    }
    Ok(out)
}

/// How anchors are provided in a problem description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AnchorSpec {
    Explicit(Vec<Vec<f64>>),
    Random { count: usize, radius: f64 },
}

/// JSON description of a problem instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemSpec {
    Quadratic {
        dim: usize,
        #[serde(default)]
        mu: Option<f64>,
        #[serde(default, alias = "L")]
        l: Option<f64>,
        #[serde(default)]
        h: Option<Vec<Vec<f64>>>,
        #[serde(default)]
        center: Option<Vec<f64>>,
        #[serde(default)]
        x0: Option<Vec<f64>>,
    },
    Karcher {
        manifold: Manifold,
        anchors: AnchorSpec,
        #[serde(default)]
        weights: Option<Vec<f64>>,
        #[serde(default)]
        random_weights: bool,
        #[serde(default)]
        feasible_radius: Option<f64>,
        #[serde(default)]
        x0: Option<Vec<f64>>,
    },
    SphereMean {
        manifold: Manifold,
        anchors: AnchorSpec,
        #[serde(default)]
        weights: Option<Vec<f64>>,
        #[serde(default)]
        random_weights: bool,
        #[serde(default)]
        x0: Option<Vec<f64>>,
    },
}

fn resolve_anchors(m: &Manifold, spec: &AnchorSpec, rng: &mut Rng) -> Result<Vec<Point>> {
    match spec {
        AnchorSpec::Explicit(list) => Ok(list.iter().cloned().map(Point::new).collect()),
        AnchorSpec::Random { count, radius } => {
            if *count == 0 {
                return Err(Error::Config("anchor count must be positive".into()));
            }
            random_anchors(m, &m.origin(), *count, *radius, rng)
        }
    }
}

fn resolve_weights(explicit: &Option<Vec<f64>>, random: bool, count: usize, rng: &mut Rng) -> Vec<f64> {
    match explicit {
        Some(w) => w.clone(),
        None if random => random_weights(count, rng),
        None => uniform_weights(count),
    }
}

impl ProblemSpec {
    /// Builds the instance; random parts are drawn from `rng`.
    pub fn build(&self, rng: &mut Rng) -> Result<Problem> {
        let (problem, x0) = match self {
            ProblemSpec::Quadratic { dim, mu, l, h, center, x0 } => {
                let p = match h {
                    Some(rows) => {
                        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
                        let c = center.clone().unwrap_or_else(|| vec![0.0; *dim]);
                        let constants = match (mu, l) {
                            (Some(a), Some(b)) => Some((*a, *b)),
                            _ => None,
                        };
                        quadratic_from_parts(flat, c, constants)?
                    }
                    None => {
                        let (mu, l) =
                            mu.zip(*l).ok_or_else(|| Error::Config("random quadratic needs both mu and L".into()))?;
                        let mut p = make_quadratic(*dim, mu, l, rng)?;
                        if let Some(c) = center {
                            if c.len() != *dim {
                                return Err(Error::Config("center has the wrong dimension".into()));
                            }
                            p.objective = match p.objective {
                                Objective::Quadratic { h, .. } => Objective::Quadratic { h, center: c.clone() },
                                o => o,
                            };
                            p.optimum = Some(Point::new(c.clone()));
                            p.center = Point::new(c.clone());
                        }
                        p
                    }
                };
                if p.manifold.ambient_dim() != *dim {
                    return Err(Error::Config("H does not match dim".into()));
                }
                (p, x0)
            }
            ProblemSpec::Karcher { manifold, anchors, weights, random_weights, feasible_radius, x0 } => {
                let a = resolve_anchors(manifold, anchors, rng)?;
                let w = resolve_weights(weights, *random_weights, a.len(), rng);
                (make_karcher(manifold.clone(), a, w, *feasible_radius)?, x0)
            }
            ProblemSpec::SphereMean { manifold, anchors, weights, random_weights, x0 } => {
                let a = resolve_anchors(manifold, anchors, rng)?;
                let w = resolve_weights(weights, *random_weights, a.len(), rng);
                (make_sphere_mean(manifold.clone(), a, w)?, x0)
            }
        };
        match x0 {
            Some(c) => problem.with_initial(Point::new(c.clone())),
            None => Ok(problem),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn explicit_quadratic_values() {
        let p = quadratic_from_parts(vec![1.0, 0.0, 0.0, 4.0], vec![0.0, 0.0], None).unwrap();
        assert_eq!((p.mu, p.l), (1.0, 4.0));
        let x = Point::new(vec![1.0, 1.0]);
        assert_eq!(p.value(&x).unwrap(), 2.5);
        assert_eq!(p.gradient(&x).unwrap().coords, vec![1.0, 4.0]);
        let c = p.optimum.clone().unwrap();
        assert_eq!(p.value(&c).unwrap(), 0.0);
        assert_eq!(p.gradient_norm(&c).unwrap(), 0.0);
    }

    #[test]
    fn generated_spectrum_hits_both_endpoints() {
        let p = make_quadratic(6, 0.5, 20.0, &mut rng::seeded(3)).unwrap();
        let h = match &p.objective {
            Objective::Quadratic { h, .. } => DMatrix::from_row_slice(6, 6, h),
            _ => unreachable!(),
        };
        let eig = h.symmetric_eigenvalues();
        assert_abs_diff_eq!(eig.min(), 0.5, epsilon = 1e-10);
        assert_abs_diff_eq!(eig.max(), 20.0, epsilon = 1e-10);
        let opt = p.optimum.clone().unwrap();
        let found = oracle_optimum(&p, &p.initial, 1e-11).unwrap();
        for (a, b) in found.coords.iter().zip(&opt.coords) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-10);
        }
    }

    #[test]
    fn euclidean_two_anchor_mean() {
        let m = Manifold::euclidean(1);
        let p = make_karcher(m, vec![Point::new(vec![0.0]), Point::new(vec![2.0])], vec![0.5, 0.5], None).unwrap();
        let opt = p.optimum.clone().unwrap();
        assert_abs_diff_eq!(opt.coords[0], 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(p.value(&opt).unwrap(), 0.5, epsilon = 1e-12);
        assert_eq!(p.l, 1.0);
    }

    #[test]
    fn single_anchor_is_its_own_mean() {
        let m = Manifold::hyperbolic(2, 1.0);
        let a = m.random_point_in_ball(&m.origin(), 1.0, &mut rng::seeded(1)).unwrap();
        let p = make_karcher(m, vec![a.clone()], vec![1.0], None).unwrap();
        assert!(p.manifold.distance(p.optimum.as_ref().unwrap(), &a).unwrap() < 1e-10);
    }

    #[test]
    fn weight_validation() {
        let m = Manifold::euclidean(1);
        let a = vec![Point::new(vec![0.0]), Point::new(vec![1.0])];
        assert!(make_karcher(m.clone(), a.clone(), vec![0.5, 0.6], None).is_err());
        assert!(make_karcher(m.clone(), a.clone(), vec![1.5, -0.5], None).is_err());
        assert!(make_karcher(m, a, vec![1.0], None).is_err());
    }

    #[test]
    fn hyperbolic_karcher_oracle_is_stationary_and_restart_stable() {
        let m = Manifold::hyperbolic(2, 1.0);
        let mut r = rng::seeded(9);
        let anchors = random_anchors(&m, &m.origin(), 5, 1.0, &mut r).unwrap();
        let p = make_karcher(m.clone(), anchors, random_weights(5, &mut r), None).unwrap();
        let opt = p.optimum.clone().unwrap();
        assert!(p.gradient_norm(&opt).unwrap() <= 1e-7);
        let other = oracle_optimum(&p, &p.initial, 1e-10).unwrap();
        assert!(m.distance(&opt, &other).unwrap() < 1e-8);
    }

    #[test]
    fn sphere_mean_near_pole() {
        let m = Manifold::sphere(3, 1.0);
        let mut r = rng::seeded(4);
        let anchors = random_anchors(&m, &m.origin(), 4, 0.3, &mut r).unwrap();
        let p = make_sphere_mean(m.clone(), anchors, uniform_weights(4)).unwrap();
        let opt = p.optimum.clone().unwrap();
        assert!(p.gradient_norm(&opt).unwrap() <= 1e-7);
        assert!(m.distance(&p.center, &opt).unwrap() < p.domain_radius.unwrap());
        assert!(p.mu > SPHERE_MU_FLOOR && p.mu < 1.0);
    }

    #[test]
    fn sphere_rejects_spread_anchors() {
        let m = Manifold::sphere(2, 1.0);
        let anchors =
            vec![Point::new(vec![1.0, 0.0, 0.0]), Point::new(vec![-1.0, 0.0, 0.0]), Point::new(vec![0.0, 0.0, 1.0])];
        assert!(make_sphere_mean(m, anchors, uniform_weights(3)).is_err());
    }

    #[test]
    fn audits_pass() {
        let mut r = rng::seeded(2);
        let q = make_quadratic(8, 1.0, 50.0, &mut r).unwrap();
        let a = gradient_audit(&q, 50, 200, &mut r).unwrap();
        assert!(a.max_rel_error <= 1e-7 && a.passed(1e-7), "{a:?}");
        for m in [Manifold::hyperbolic(3, 1.0), Manifold::spd(3)] {
            let anchors = random_anchors(&m, &m.origin(), 6, 1.5, &mut r).unwrap();
            let p = make_karcher(m, anchors, random_weights(6, &mut r), None).unwrap();
            let a = gradient_audit(&p, 50, 500, &mut r).unwrap();
            assert!(a.passed(1e-6), "{a:?}");
        }
    }

    #[test]
    fn spec_roundtrip() {
        let json = r#"{"kind":"karcher","manifold":{"type":"hyperbolic","dim":2,"kappa":1.0},
                       "anchors":{"count":4,"radius":1.0},"random_weights":true}"#;
        let spec: ProblemSpec = serde_json::from_str(json).unwrap();
        let a = spec.build(&mut rng::seeded(5)).unwrap();
        let b = spec.build(&mut rng::seeded(5)).unwrap();
        assert_eq!(a.optimum, b.optimum);
        let back: ProblemSpec = serde_json::from_str(&serde_json::to_string(&spec).unwrap()).unwrap();
        assert_eq!(back, spec);
        let q: ProblemSpec = serde_json::from_str(r#"{"kind":"quadratic","dim":3,"mu":1,"L":10}"#).unwrap();
        assert_eq!(q.build(&mut rng::seeded(1)).unwrap().l, 10.0);
    }
}
