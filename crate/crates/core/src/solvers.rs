//! Accelerated and plain gradient methods on the supported manifolds.
//!
//! Every accelerated step takes
//!
//! ```text
//! x+ = Exp_y(alpha Log_y z)
//! y+ = Exp_{x+}(-gamma grad f(x+))
//! z+ = Exp_{x+}(beta Log_{x+} z - eta grad f(x+))
//! ```
//!
//! with `alpha, beta, eta` fixed by the shrinking ratio `xi` (see [`step_params`]).
//! On Euclidean space `Exp` and `Log` are `+` and `-`, which gives Nesterov's method.

use serde::{Deserialize, Serialize};

use crate::distortion::{self, DistortionRate, RateSource};
use crate::error::{Error, Result};
use crate::geometry::{Manifold, Point, TangentVector};
use crate::problems::Problem;
use crate::xi::{next_xi, XiParams};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum SolverMode {
    EuclidNesterov,
    Ragd,
    RagdConstantDelta { delta: f64 },
    Rgd,
}

impl SolverMode {
    pub fn name(&self) -> &'static str {
        match self {
            SolverMode::EuclidNesterov => "euclid_nesterov",
            SolverMode::Ragd => "ragd",
            SolverMode::RagdConstantDelta { .. } => "ragd_constant_delta",
            SolverMode::Rgd => "rgd",
        }
    }

    pub fn is_accelerated(&self) -> bool {
        !matches!(self, SolverMode::Rgd)
    }
}

fn default_xi0() -> f64 {
    1.0
}

fn default_iters() -> usize {
    500
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    #[serde(flatten)]
    pub mode: SolverMode,
    /// Label used for output files; defaults to the mode name.
    #[serde(default)]
    pub name: Option<String>,
    /// Overrides the problem's strong-convexity constant.
    #[serde(default)]
    pub mu: Option<f64>,
    /// Overrides the problem's smoothness constant.
    #[serde(default, alias = "L")]
    pub l: Option<f64>,
    #[serde(default)]
    pub gamma: Option<f64>,
    /// Step size as a multiple of `1/L`; ignored when `gamma` is set.
    #[serde(default)]
    pub gamma_l: Option<f64>,
    #[serde(default = "default_xi0")]
    pub xi0: f64,
    #[serde(default = "default_iters")]
    pub max_iters: usize,
    #[serde(default)]
    pub record_diagnostics: bool,
    #[serde(default)]
    pub optimum_hint: Option<Point>,
    /// Use `T_hat` instead of `T` for the distortion rate.
    #[serde(default)]
    pub sharp_rate: bool,
}

impl SolverConfig {
    pub fn new(mode: SolverMode) -> Self {
        SolverConfig {
            mode,
            name: None,
            mu: None,
            l: None,
            gamma: None,
            gamma_l: None,
            xi0: default_xi0(),
            max_iters: default_iters(),
            record_diagnostics: false,
            optimum_hint: None,
            sharp_rate: false,
        }
    }

    pub fn iters(mut self, n: usize) -> Self {
        self.max_iters = n;
        self
    }

    pub fn xi0(mut self, xi0: f64) -> Self {
        self.xi0 = xi0;
        self
    }

    pub fn gamma_l(mut self, gl: f64) -> Self {
        self.gamma_l = Some(gl);
        self
    }

    pub fn diagnostics(mut self) -> Self {
        self.record_diagnostics = true;
        self
    }

    pub fn label(&self) -> String {
        self.name.clone().unwrap_or_else(|| self.mode.name().to_string())
    }

    /// Default step multiple: 1.05 for full RAGD, 1 otherwise.
    fn default_gamma_l(&self) -> f64 {
        match self.mode {
            SolverMode::Ragd => 1.05,
            _ => 1.0,
        }
    }

    /// Resolves constants against `problem` and validates them.
    pub fn resolve(&self, problem: &Problem) -> Result<(Constants, Vec<String>)> {
        let mu = self.mu.unwrap_or(problem.mu);
        let l = self.l.unwrap_or(problem.l);
        let mut warnings = Vec::new();
        if !(l > 0.0) || !l.is_finite() || !(mu >= 0.0) || mu > l {
            return Err(Error::Config(format!("need 0 <= mu <= L, got mu={mu}, L={l}")));
        }
        if mu == 0.0 && self.mode != SolverMode::EuclidNesterov {
            return Err(Error::Config("mu = 0 is only supported by euclid_nesterov".into()));
        }
        let gamma = self.gamma.unwrap_or(self.gamma_l.unwrap_or(self.default_gamma_l()) / l);
        if !(gamma > 0.0 && gamma * l < 2.0) {
            return Err(Error::Config(format!("gamma = {gamma} is outside (0, 2/L)")));
        }
        let delta_gamma = gamma * (1.0 - l * gamma / 2.0);
        let a = 2.0 * mu * delta_gamma;
        if a >= 1.0 {
            return Err(Error::Config(format!(
                "2 mu Delta = {a} is not below 1 (mu = L with gamma = 1/L is degenerate)"
            )));
        }
        if !(self.xi0 >= 0.0) || !self.xi0.is_finite() {
            return Err(Error::Config(format!("xi0 = {} must be >= 0", self.xi0)));
        }
        if self.max_iters == 0 {
            return Err(Error::Config("max_iters must be positive".into()));
        }
        if let SolverMode::RagdConstantDelta { delta } = self.mode {
            DistortionRate::constant(delta).map_err(|e| Error::Config(e.to_string()))?;
        }
        if self.mode == SolverMode::Ragd {
            let upper = 2.0 - (mu / l).sqrt();
            let gl = gamma * l;
            if !(gl > 1.0 && gl <= upper) {
                let msg = format!("gamma L = {gl} is outside (1, {upper}]; full acceleration is not guaranteed");
                log::warn!("{msg}");
                warnings.push(msg);
            }
        }
        if self.mode == SolverMode::EuclidNesterov && !problem.manifold.is_euclidean() {
            return Err(Error::Config("euclid_nesterov needs a Euclidean problem".into()));
        }
        Ok((Constants { mu, l, gamma, delta_gamma, a }, warnings))
    }
}

/// Resolved scalar constants of a run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    pub mu: f64,
    pub l: f64,
    pub gamma: f64,
    /// `gamma (1 - L gamma / 2)`
    pub delta_gamma: f64,
    /// `2 mu Delta_gamma`
    pub a: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepParams {
    pub alpha: f64,
    pub beta: f64,
    pub eta: f64,
    pub xi: f64,
    pub delta_gamma: f64,
}

/// `alpha = (xi - a)/(1 - a)`, `beta = 1 - a/xi`, `eta = 2 Delta / xi` with `a = 2 mu Delta`.
pub fn step_params(xi: f64, mu: f64, delta_gamma: f64) -> Result<StepParams> {
    let a = 2.0 * mu * delta_gamma;
    if !(xi >= a && xi < 1.0) || xi <= 0.0 {
        return Err(Error::Domain(format!("xi = {xi} is outside [{a}, 1)")));
    }
    Ok(StepParams {
        alpha: ((xi - a) / (1.0 - a)).clamp(0.0, 1.0),
        beta: (1.0 - a / xi).clamp(0.0, 1.0),
        eta: 2.0 * delta_gamma / xi,
        xi,
        delta_gamma,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverState {
    pub t: usize,
    pub x: Point,
    pub y: Point,
    pub z: Point,
    pub xi: f64,
    /// Weight of the cost gap in the potential.
    pub coef_a: f64,
    /// Weight of the distance term in the potential.
    pub coef_b: f64,
    pub delta: DistortionRate,
    /// Parameters of the step that produced this state.
    pub params: Option<StepParams>,
}

impl SolverState {
    /// `x = y = z = x0`, `A_0 = 1`, `B_0 = xi0^2 / (4 Delta)`.
    pub fn initial(x0: Point, xi0: f64, delta_gamma: f64) -> Self {
        SolverState {
            t: 0,
            y: x0.clone(),
            z: x0.clone(),
            x: x0,
            xi: xi0,
            coef_a: 1.0,
            coef_b: xi0 * xi0 / (4.0 * delta_gamma),
            delta: DistortionRate { value: 1.0, source: RateSource::ImprovedT },
            params: None,
        }
    }

    fn advance(&self, x: Point, y: Point, z: Point, p: StepParams, delta: DistortionRate) -> Self {
        let xi = p.xi;
        SolverState {
            t: self.t + 1,
            x,
            y,
            z,
            xi,
            coef_a: self.coef_a / (1.0 - xi),
            coef_b: xi * xi / (1.0 - xi) * self.coef_a / (4.0 * p.delta_gamma),
            delta,
            params: Some(p),
        }
    }
}

fn check_gradient(g: &TangentVector) -> Result<()> {
    if g.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite("gradient".into()))
    }
}

fn lincomb(a: &[f64], s: f64, b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + s * y).collect()
}

/// One Euclidean step written with vector arithmetic.
pub fn euclid_step(
    state: &SolverState,
    p: StepParams,
    gamma: f64,
    delta: DistortionRate,
    problem: &Problem,
) -> Result<SolverState> {
    let (y, z) = (&state.y.coords, &state.z.coords);
    let zy: Vec<f64> = z.iter().zip(y).map(|(a, b)| a - b).collect();
    let x = Point::new(lincomb(y, p.alpha, &zy));
    let g = problem.gradient(&x)?;
    check_gradient(&g)?;
    let y_next = Point::new(x.coords.iter().zip(&g.coords).map(|(a, b)| a + -gamma * b).collect());
    let step: Vec<f64> =
        z.iter().zip(&x.coords).zip(&g.coords).map(|((zi, xi), gi)| p.beta * (zi - xi) + -p.eta * gi).collect();
    let z_next = Point::new(x.coords.iter().zip(&step).map(|(a, b)| a + b).collect());
    Ok(state.advance(x, y_next, z_next, p, delta))
}

/// One Riemannian step; the `z` update combines tangent vectors at `x+`.
pub fn ragd_step(
    state: &SolverState,
    p: StepParams,
    gamma: f64,
    delta: DistortionRate,
    problem: &Problem,
) -> Result<SolverState> {
    let m = &problem.manifold;
    let x = m.exp(&state.y, &m.log(&state.y, &state.z)?.scaled(p.alpha))?;
    let g = problem.gradient(&x)?;
    check_gradient(&g)?;
    let y_next = m.exp(&x, &g.scaled(-gamma))?;
    let v = m.log(&x, &state.z)?.scaled(p.beta).axpy(-p.eta, &g)?;
    let z_next = m.exp(&x, &v)?;
    Ok(state.advance(x, y_next, z_next, p, delta))
}

/// `y+ = Exp_y(-gamma grad f(y))`, with `x = z = y`.
pub fn rgd_step(state: &SolverState, gamma: f64, a: f64, problem: &Problem) -> Result<SolverState> {
    let m = &problem.manifold;
    let g = problem.gradient(&state.y)?;
    check_gradient(&g)?;
    let y = m.exp(&state.y, &g.scaled(-gamma))?;
    Ok(SolverState {
        t: state.t + 1,
        x: y.clone(),
        z: y.clone(),
        y,
        xi: a,
        coef_a: state.coef_a,
        coef_b: state.coef_b,
        delta: state.delta,
        params: None,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub t: usize,
    pub f_gap: f64,
    pub xi: f64,
    pub delta_rate: f64,
    pub d_xz: f64,
    pub d_yz: f64,
    pub d_yopt: Option<f64>,
    pub potential: Option<f64>,
    /// `Psi_t - Psi_{t+1}`; empty on the last row.
    pub decrease_margin: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GapReference {
    Optimum,
    BestSeen,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Trace {
    pub solver: String,
    pub mode: SolverMode,
    pub constants: Constants,
    pub xi0: f64,
    pub f_star: f64,
    pub gap_reference: GapReference,
    pub rows: Vec<TraceRow>,
    /// `f(y_t)` for every row.
    pub values: Vec<f64>,
    /// Full states, kept when diagnostics are requested.
    pub iterates: Option<Vec<SolverState>>,
    pub warnings: Vec<String>,
    /// Largest distance of `x_t` or `y_t` from the problem's certified center.
    pub max_excursion: f64,
    pub left_feasible: bool,
}

impl Trace {
    pub fn gaps(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.f_gap).collect()
    }

    pub fn xis(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.xi).collect()
    }

    pub fn final_gap(&self) -> f64 {
        self.rows.last().map(|r| r.f_gap).unwrap_or(f64::NAN)
    }
}

fn distortion_rate(mode: &SolverMode, sharp: bool, m: &Manifold, d_xz: f64, d_yz: f64) -> Result<DistortionRate> {
    Ok(match *mode {
        SolverMode::RagdConstantDelta { delta } => DistortionRate::constant(delta)?,
        SolverMode::EuclidNesterov => DistortionRate::constant(1.0)?,
        _ if m.is_euclidean() => DistortionRate::constant(1.0)?,
        _ if m.is_hadamard() && sharp => distortion::valid_rate_sharp(m.kappa(), d_xz),
        _ if m.is_hadamard() => distortion::valid_rate_hadamard(m.kappa(), d_xz),
        _ => distortion::valid_rate_nonhadamard(m.kappa(), d_xz, d_yz),
    })
}

struct Geometry {
    d_xz: f64,
    d_yz: f64,
}

fn measure(m: &Manifold, s: &SolverState) -> Result<Geometry> {
    Ok(Geometry { d_xz: m.distance(&s.x, &s.z)?, d_yz: m.distance(&s.y, &s.z)? })
}

/// Runs `config.max_iters` steps from `problem.initial`.
pub fn run(problem: &Problem, config: &SolverConfig) -> Result<Trace> {
    let (c, mut warnings) = config.resolve(problem)?;
    let m = &problem.manifold;
    m.check_point(&problem.initial)?;
    let optimum = config.optimum_hint.clone().or_else(|| problem.optimum.clone());
    let keep = config.record_diagnostics;
    let mut state = SolverState::initial(problem.initial.clone(), config.xi0, c.delta_gamma);
    if config.mode == SolverMode::Rgd {
        state.xi = c.a;
    }
    let mut states = Vec::with_capacity(if keep { config.max_iters + 1 } else { 0 });
    let mut values = Vec::with_capacity(config.max_iters + 1);
    let mut rows: Vec<TraceRow> = Vec::with_capacity(config.max_iters + 1);
    let mut dists = Vec::with_capacity(config.max_iters + 1);
    // (A_t, B_t d~^2) per row, combined with the gap once f* is known
    let mut terms: Vec<Option<(f64, f64)>> = Vec::with_capacity(config.max_iters + 1);
    let mut max_excursion = 0.0_f64;

    let containment = |s: &SolverState, excursion: &mut f64| -> Result<()> {
        if problem.feasible_radius.is_finite() || problem.domain_radius.is_some() {
            let dx = m.distance(&problem.center, &s.x)?;
            let dy = m.distance(&problem.center, &s.y)?;
            *excursion = excursion.max(dx).max(dy);
            if let Some(r) = problem.domain_radius {
                let dz = m.distance(&problem.center, &s.z)?;
                let worst = dx.max(dy).max(dz);
                if worst > r {
                    return Err(Error::RuntimeContainment { t: s.t, distance: worst, radius: r });
                }
            }
        }
        Ok(())
    };

    for t in 0..=config.max_iters {
        if t > 0 {
            let prev = dists.last().map(|g: &Geometry| (g.d_xz, g.d_yz)).unwrap_or((0.0, 0.0));
            state = if config.mode == SolverMode::Rgd {
                rgd_step(&state, c.gamma, c.a, problem)?
            } else {
                let delta = distortion_rate(&config.mode, config.sharp_rate, m, prev.0, prev.1)?;
                let xi = next_xi(state.xi, XiParams { a: c.a, delta: delta.value });
                if !(xi >= c.a && xi < 1.0) {
                    return Err(Error::Internal(format!(
                        "xi left [{}, 1) at t={t}: xi={xi}, delta={}",
                        c.a, delta.value
                    )));
                }
                let p = step_params(xi, c.mu, c.delta_gamma)
                    .map_err(|e| Error::Internal(format!("step parameters at t={t}: {e}")))?;
                if m.is_euclidean() {
                    euclid_step(&state, p, c.gamma, delta, problem)?
                } else {
                    ragd_step(&state, p, c.gamma, delta, problem)?
                }
            };
        }
        containment(&state, &mut max_excursion)?;
        let g = measure(m, &state)?;
        let fy = problem.value(&state.y)?;
        if !fy.is_finite() {
            return Err(Error::NonFinite(format!("objective at t={t}")));
        }
        let d_yopt = optimum.as_ref().map(|o| m.distance(&state.y, o)).transpose()?;
        rows.push(TraceRow {
            t,
            f_gap: fy,
            xi: state.xi,
            delta_rate: state.delta.value,
            d_xz: g.d_xz,
            d_yz: g.d_yz,
            d_yopt,
            potential: None,
            decrease_margin: None,
        });
        values.push(fy);
        dists.push(g);
        // A_t grows geometrically and overflows on long runs; the potential stops there
        let weights_finite = state.coef_a.is_finite() && state.coef_b.is_finite();
        if let (Some(o), true) = (optimum.as_ref(), config.mode.is_accelerated() && weights_finite) {
            let dt = m.projected_distance(&state.x, &state.z, o)?;
            terms.push(Some((state.coef_a, state.coef_b * dt * dt)));
        } else {
            terms.push(None);
        }
        if keep {
            states.push(state.clone());
        }
    }

    let (f_star, reference) = match optimum.as_ref() {
        Some(o) => (problem.value(o)?, GapReference::Optimum),
        None => (values.iter().copied().fold(f64::INFINITY, f64::min), GapReference::BestSeen),
    };
    for (r, term) in rows.iter_mut().zip(&terms) {
        r.f_gap -= f_star;
        if let Some((a, bd2)) = *term {
            r.potential = Some(a * r.f_gap + bd2);
        }
    }
    for t in 0..rows.len().saturating_sub(1) {
        if let (Some(a), Some(b)) = (rows[t].potential, rows[t + 1].potential) {
            rows[t].decrease_margin = Some(a - b);
        }
    }
    let left_feasible =
        problem.feasible_radius.is_finite() && max_excursion > problem.feasible_radius * (1.0 + 1e-9) + 1e-12;
    if left_feasible {
        let msg = format!(
            "iterates reached distance {max_excursion} from the center, beyond the certified radius {}",
            problem.feasible_radius
        );
        log::warn!("{msg}");
        warnings.push(msg);
    }
    Ok(Trace {
        solver: config.label(),
        mode: config.mode,
        constants: c,
        xi0: config.xi0,
        f_star,
        gap_reference: reference,
        rows,
        values,
        iterates: keep.then_some(states),
        warnings,
        max_excursion,
        left_feasible,
    })
}

/// Runs, and if the iterates leave the certified ball, re-runs with the ball
/// enlarged to cover them (and `L` or `mu` recomputed) until they stay inside.
pub fn run_contained(problem: &Problem, config: &SolverConfig) -> Result<(Trace, Problem)> {
    let mut p = problem.clone();
    let mut notes = Vec::new();
    for _ in 0..8 {
        let mut trace = run(&p, config)?;
        if !trace.left_feasible || config.l.is_some() {
            trace.warnings.splice(0..0, notes);
            return Ok((trace, p));
        }
        let radius = (trace.max_excursion * 1.25).max(p.feasible_radius * 2.0);
        notes.append(&mut trace.warnings);
        notes.push(format!("re-running with certified radius {radius}"));
        p = p.with_feasible_radius(radius)?;
    }
    Err(Error::Convergence("iterates kept leaving the enlarged certified ball".into()))
}
