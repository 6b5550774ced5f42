//! Gaussian tail function and its inverse.

use statrs::function::erf::erfc_inv;
use std::f64::consts::{PI, SQRT_2};

/// Gaussian tail probability `Q(x) = P[N(0,1) > x]`.
pub fn q(x: f64) -> f64 {
    0.5 * libm::erfc(x / SQRT_2)
}

/// Inverse of [`q`] on `(0, 1)`.
///
/// Starts from the inverse complementary error function and polishes with
/// Halley steps against `q` itself.
pub fn q_inv(p: f64) -> f64 {
    debug_assert!(p > 0.0 && p < 1.0, "q_inv domain is (0, 1), got {p}");
    let mut x = SQRT_2 * erfc_inv(2.0 * p);
    for _ in 0..2 {
        let density = (-0.5 * x * x).exp() / (2.0 * PI).sqrt();
        if density == 0.0 {
            break;
        }
        // f(x) = q(x) - p, f' = -phi(x), f'' = x * phi(x)
        let step = (q(x) - p) / -density;
        x -= step / (1.0 + 0.5 * step * x);
    }
    x
}
