//! Small float helpers that `core` does not provide.

#[inline]
pub(crate) fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

/// Angle wrapped into `[0, 2pi)`.
#[inline]
pub(crate) fn wrap_angle(theta: f64) -> f64 {
    let tau = core::f64::consts::TAU;
    let w = theta - tau * libm::floor(theta / tau);
    if w >= tau {
        0.0
    } else {
        w
    }
}
