//! Scalar kernels shared by the geometry and distortion code.
//!
//! Each function switches to a 6th-order Taylor expansion below `TAYLOR_CUTOFF`,
//! where the closed form suffers 0/0 cancellation.

pub(crate) const TAYLOR_CUTOFF: f64 = 1e-4;

/// `sinh(s) / s`, continuous at 0.
pub fn sinhc(s: f64) -> f64 {
    let s = s.abs();
    if s < TAYLOR_CUTOFF {
        let s2 = s * s;
        1.0 + s2 / 6.0 + s2 * s2 / 120.0 + s2 * s2 * s2 / 5040.0
    } else {
        s.sinh() / s
    }
}

/// `sin(s) / s`, continuous at 0.
pub fn sinc(s: f64) -> f64 {
    let s = s.abs();
    if s < TAYLOR_CUTOFF {
        let s2 = s * s;
        1.0 - s2 / 6.0 + s2 * s2 / 120.0 - s2 * s2 * s2 / 5040.0
    } else {
        s.sin() / s
    }
}

/// `s / tanh(s)`, continuous at 0.
pub fn xcoth(s: f64) -> f64 {
    let s = s.abs();
    if s < TAYLOR_CUTOFF {
        let s2 = s * s;
        1.0 + s2 / 3.0 - s2 * s2 / 45.0 + 2.0 * s2 * s2 * s2 / 945.0
    } else {
        s / s.tanh()
    }
}

/// `s / tan(s)`, continuous at 0. Only meaningful on `[0, pi)`.
pub fn xcot(s: f64) -> f64 {
    let s = s.abs();
    if s < TAYLOR_CUTOFF {
        let s2 = s * s;
        1.0 - s2 / 3.0 - s2 * s2 / 45.0 - 2.0 * s2 * s2 * s2 / 945.0
    } else {
        s / s.tan()
    }
}
