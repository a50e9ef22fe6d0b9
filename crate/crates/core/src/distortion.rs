//! Metric-distortion functions and valid distortion rates.
//!
//! A distortion rate `delta >= 1` bounds how much the logarithm at one point
//! can shrink distances between two others. On a space with curvature at least
//! `-kappa`, `T_kappa(d(x, z))` is a valid rate for the step from `x` to `z`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{sinhc, xcoth};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateSource {
    RauchS,
    ImprovedT,
    EpsilonOptThat,
    Nonhadamard,
    Constant,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistortionRate {
    pub value: f64,
    pub source: RateSource,
}

impl DistortionRate {
    /// A user-supplied constant rate.
    pub fn constant(value: f64) -> Result<Self> {
        if !(value >= 1.0) || !value.is_finite() {
            return Err(Error::Domain(format!("distortion rate must be a finite value >= 1, got {value}")));
        }
        Ok(DistortionRate { value, source: RateSource::Constant })
    }
}

/// `(sinh(sqrt(k) r) / (sqrt(k) r))^2`, the Rauch comparison factor.
pub fn s_kappa(kappa: f64, r: f64) -> f64 {
    let s = kappa.max(0.0).sqrt() * r.abs();
    sinhc(s).powi(2)
}

/// `sqrt(k) c / tanh(sqrt(k) c)`.
pub fn trig_coeff(kappa: f64, c: f64) -> f64 {
    xcoth(kappa.max(0.0).sqrt() * c.abs())
}

/// `T_kappa(r) = max{1 + 4(s coth s - 1), sinhc(2s)^2}` with `s = sqrt(k) r`.
pub fn t_kappa(kappa: f64, r: f64) -> f64 {
    let s = kappa.max(0.0).sqrt() * r.abs();
    if s == 0.0 {
        return 1.0;
    }
    let trig = 1.0 + 4.0 * (xcoth(s) - 1.0);
    trig.max(sinhc(2.0 * s).powi(2))
}

fn t_hat_objective(s: f64, eps: f64) -> f64 {
    let k = 1.0 + 1.0 / eps;
    let trig = 1.0 + k * k * (xcoth(s) - 1.0);
    trig.max(sinhc((1.0 + eps) * s).powi(2))
}

const T_HAT_GRID: usize = 241;
const T_HAT_LOG_RANGE: (f64, f64) = (-6.0, 6.0);

/// `min_{eps > 0} max{1 + (1 + 1/eps)^2 (s coth s - 1), sinhc((1 + eps) s)^2}`.
///
/// The first branch decreases in `eps` and the second increases, so the
/// maximum is quasiconvex: a log-spaced grid brackets the minimum and
/// golden-section search refines it.
pub fn t_kappa_hat(kappa: f64, r: f64) -> f64 {
    t_kappa_hat_argmin(kappa, r).1
}

/// `(eps*, T_hat)` for the minimization in [`t_kappa_hat`].
pub fn t_kappa_hat_argmin(kappa: f64, r: f64) -> (f64, f64) {
    let s = kappa.max(0.0).sqrt() * r.abs();
    if s == 0.0 {
        return (1.0, 1.0);
    }
    let (lo, hi) = T_HAT_LOG_RANGE;
    let step = (hi - lo) / (T_HAT_GRID - 1) as f64;
    let f = |log_eps: f64| t_hat_objective(s, 10f64.powf(log_eps));
    let (mut best_i, mut best) = (0, f64::INFINITY);
    for i in 0..T_HAT_GRID {
        let v = f(lo + step * i as f64);
        if v < best {
            best = v;
            best_i = i;
        }
    }
    let mut a = lo + step * best_i.saturating_sub(1) as f64;
    let mut b = (lo + step * (best_i + 1) as f64).min(hi);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() < 1e-14 {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    let mid = 0.5 * (a + b);
    let refined = f(mid);
    let (arg, val) =
        if refined <= best { (10f64.powf(mid), refined) } else { (10f64.powf(lo + step * best_i as f64), best) };
    (arg, val.max(1.0))
}

/// `T_kappa(d(x_t, z_t))`, the default rate on Hadamard manifolds.
pub fn valid_rate_hadamard(kappa: f64, d_xz: f64) -> DistortionRate {
    DistortionRate { value: t_kappa(kappa, d_xz), source: RateSource::ImprovedT }
}

/// `T_hat_kappa(d(x_t, z_t))`, sharper but costlier.
pub fn valid_rate_sharp(kappa: f64, d_xz: f64) -> DistortionRate {
    DistortionRate { value: t_kappa_hat(kappa, d_xz), source: RateSource::EpsilonOptThat }
}

/// `S_kappa(max{d_xy, d_xz})`, the rate from the Rauch comparison bound.
pub fn valid_rate_rauch(kappa: f64, d_xy: f64, d_xz: f64) -> DistortionRate {
    DistortionRate { value: s_kappa(kappa, d_xy.max(d_xz)), source: RateSource::RauchS }
}

/// `T_kappa(d_xz) * (1 + 2 d_yz^2)`, valid when the iterates stay inside a
/// uniquely geodesic ball on a space with positive curvature.
pub fn valid_rate_nonhadamard(kappa: f64, d_xz: f64, d_yz: f64) -> DistortionRate {
    DistortionRate { value: t_kappa(kappa, d_xz) * (1.0 + 2.0 * d_yz * d_yz), source: RateSource::Nonhadamard }
}

/// [`valid_rate_nonhadamard`] with the caller's diameter bound checked against
/// `pi / (2 sqrt(sigma))`.
pub fn valid_rate_nonhadamard_checked(
    kappa: f64,
    sigma: f64,
    d_xz: f64,
    d_yz: f64,
    diameter: f64,
) -> Result<DistortionRate> {
    let limit = std::f64::consts::FRAC_PI_2 / sigma.sqrt();
    if sigma > 0.0 && diameter >= limit {
        return Err(Error::Domain(format!("iterate diameter {diameter} is not below {limit}")));
    }
    Ok(valid_rate_nonhadamard(kappa, d_xz, d_yz))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn flat_and_zero_limits() {
        for f in [s_kappa, trig_coeff, t_kappa, t_kappa_hat] {
            assert_eq!(f(1.0, 0.0), 1.0);
            assert_eq!(f(0.0, 5.0), 1.0);
        }
        assert_eq!(valid_rate_hadamard(0.0, 3.0).value, 1.0);
        assert_eq!(valid_rate_nonhadamard(1.0, 0.0, 0.0).value, 1.0);
    }

    #[test]
    fn closed_form_values() {
        assert_abs_diff_eq!(s_kappa(1.0, 1.0), 1.381097845541213, epsilon = 1e-12);
        assert_abs_diff_eq!(trig_coeff(1.0, 1.0), 1.3130352854993312, epsilon = 1e-12);
        // both T branches at s = 1: 1 + 4(coth 1 - 1) and (sinh 2 / 2)^2
        assert_abs_diff_eq!(1.0 + 4.0 * (trig_coeff(1.0, 1.0) - 1.0), 2.252141141997325, epsilon = 1e-12);
        assert_abs_diff_eq!(t_kappa(1.0, 1.0), 3.2885291045020613, epsilon = 1e-12);
        assert_abs_diff_eq!(t_kappa(1.0, 1.0), 3.288527, epsilon = 1e-5);
        let r = valid_rate_nonhadamard(1.0, 1.0, 0.5);
        assert_abs_diff_eq!(r.value, 4.932791, epsilon = 1e-5);
        assert_abs_diff_eq!(valid_rate_nonhadamard(1.0, 0.0, 0.5).value, 1.5, epsilon = 1e-15);
    }

    #[test]
    fn t_hat_matches_dense_grid() {
        let t_hat = t_kappa_hat(1.0, 1.0);
        assert!(t_hat <= t_kappa(1.0, 1.0));
        // bounded scalar minimization in log(eps), computed offline
        assert_abs_diff_eq!(t_hat, 2.624888519962193, epsilon = 1e-8);
        let (lo, hi) = (1e-3f64.ln(), 10f64.ln());
        let dense = (0..10_000)
            .map(|i| t_hat_objective(1.0, (lo + (hi - lo) * i as f64 / 9999.0).exp()))
            .fold(f64::INFINITY, f64::min);
        assert!(t_hat <= dense + 1e-12);
        assert!(dense - t_hat < 1e-3, "{t_hat} vs {dense}");
    }

    #[test]
    fn small_r_quadratic_bound() {
        let kappa: f64 = 2.0;
        let rmax = 1.0 / (2.0 * kappa.sqrt());
        for i in 0..=1000 {
            let r = rmax * i as f64 / 1000.0;
            assert!(t_kappa(kappa, r) <= 1.0 + 2.0 * kappa * r * r + 1e-9);
        }
    }

    #[test]
    fn monotone_in_r() {
        let mut prev = [1.0; 3];
        for i in 1..500 {
            let r = i as f64 * 0.01;
            let cur = [s_kappa(0.8, r), trig_coeff(0.8, r), t_kappa(0.8, r)];
            for k in 0..3 {
                assert!(cur[k] >= prev[k]);
            }
            prev = cur;
        }
    }

    #[test]
    fn constant_rate_validation() {
        assert!(DistortionRate::constant(1.0).is_ok());
        assert!(DistortionRate::constant(0.99).is_err());
        assert!(DistortionRate::constant(f64::NAN).is_err());
        assert!(valid_rate_nonhadamard_checked(0.0, 1.0, 0.1, 0.1, 2.0).is_err());
        assert!(valid_rate_nonhadamard_checked(0.0, 1.0, 0.1, 0.1, 1.0).is_ok());
    }
}
