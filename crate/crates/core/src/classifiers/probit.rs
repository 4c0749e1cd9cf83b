//! Standard normal helpers for the probit link.

use libm::erfc;

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Standard normal CDF `Ψ(x)`.
pub fn psi(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Standard normal density.
pub fn phi(x: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

/// `φ(t)/Ψ(t)`; for `t < −8` the asymptotic Mills-ratio series is used
/// instead of dividing two vanishing quantities.
pub fn inverse_mills(t: f64) -> f64 {
    if t < -8.0 {
        let t2 = t * t;
        let series = 1.0 - 1.0 / t2 + 3.0 / (t2 * t2) - 15.0 / (t2 * t2 * t2);
        -t / series
    } else {
        phi(t) / psi(t)
    }
}

/// Mean of the latent `h ~ N(z, 1)` truncated to the side of `y ∈ {−1, +1}`:
/// `z + y·φ(z)/Ψ(y·z)`.
pub fn truncated_mean(z: f64, y: f64) -> f64 {
    z + y * inverse_mills(y * z)
}
