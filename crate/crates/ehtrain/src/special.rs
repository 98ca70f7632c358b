//! Exponential-integral kernel used by the achievable-rate model.
//!
//! The per-slot rate of a Rayleigh block-fading link with estimated CSI
//! reduces to terms of the form `exp(1/K) * E1(1/K)` where `E1` is the
//! exponential integral `E1(x) = ∫_x^∞ t^-1 e^-t dt`. Because `1/K` is
//! large whenever the effective SNR is small, the product is evaluated
//! directly (never as `exp(x) * e1(x)`, which overflows for `x ≳ 710`).
//!
//! Two classic regimes:
//! - `x ≤ 1`: the alternating series
//!   `E1(x) = -γ - ln x + Σ_{k≥1} (-1)^{k+1} x^k / (k·k!)`,
//! - `x > 1`: the continued fraction
//!   `E1(x) = e^-x / (x + 1/(1 + 1/(x + 2/(1 + 2/(x + ...)))))`
//!   evaluated with the modified Lentz algorithm, pre-scaled so the
//!   `e^-x` factor never has to be formed for the scaled variant.

use thiserror::Error;

/// Euler–Mascheroni constant to 20 significant digits.
pub const EULER_GAMMA: f64 = 0.57721566490153286061;

/// Iteration cap for both the series and the continued fraction.
const MAX_ITER: usize = 500;

/// Per-term relative tolerance for the alternating series.
const SERIES_TOL: f64 = 1e-16;

/// Convergence tolerance on the Lentz multiplier `|delta - 1|`.
///
/// `delta` is a product of two correction factors that each land within a
/// few ulps of 1 at convergence, so the achievable floor is ~2^-52. The
/// threshold is set to two machine epsilons; demanding 1e-16 exactly can
/// stall forever when `delta` alternates between `1 ± 1 ulp`.
const LENTZ_TOL: f64 = 2.0 * f64::EPSILON;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum SpecialError {
    /// Argument outside `(0, ∞)`.
    #[error("exponential integral argument must be a positive finite number, got {0}")]
    Domain(f64),
    /// The continued fraction failed to converge within [`MAX_ITER`] terms.
    #[error("continued fraction did not converge within {0} iterations")]
    NoConvergence(usize),
}

/// Exponential integral `E1(x)` for `x > 0`.
///
/// Underflows to `0.0` for `x ≳ 740`; that is a property of f64, not an
/// error, and callers treat the resulting rate terms as negligible.
///
/// ```
/// let v = ehtrain::special::e1(1.0).unwrap();
/// assert!((v - 0.21938393439552027).abs() < 1e-15);
/// ```
pub fn e1(x: f64) -> Result<f64, SpecialError> {
    check_domain(x)?;
    if x <= 1.0 {
        Ok(e1_series(x))
    } else {
        Ok((-x).exp() * lentz_tail(x)?)
    }
}

/// Scaled exponential integral `g(x) = e^x · E1(x)` for `x > 0`.
///
/// Well-conditioned over the whole positive axis: strictly decreasing,
/// with `1/(x+1) < g(x) < 1/x`. This is the function the rate model calls;
/// `x = 1/K` may be enormous when a slot's effective SNR is tiny and the
/// unscaled factors would overflow/underflow individually.
///
/// ```
/// let g = ehtrain::special::exp_e1(3.0).unwrap();
/// assert!((g - 0.2620837402553185).abs() < 1e-15);
/// assert!(g > 1.0 / 4.0 && g < 1.0 / 3.0);
/// ```
pub fn exp_e1(x: f64) -> Result<f64, SpecialError> {
    check_domain(x)?;
    if x <= 1.0 {
        Ok(x.exp() * e1_series(x))
    } else {
        lentz_tail(x)
    }
}

fn check_domain(x: f64) -> Result<(), SpecialError> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(SpecialError::Domain(x))
    }
}

/// Alternating series for `E1`, accurate for `x ≤ 1` (no cancellation:
/// every partial sum change is at most the first term, which is ≤ 1).
fn e1_series(x: f64) -> f64 {
    let mut sum = 0.0;
    let mut factorial_term = 1.0; // x^k / k!
    for k in 1..=MAX_ITER {
        factorial_term *= x / k as f64;
        let contribution = factorial_term / k as f64;
        if k % 2 == 1 {
            sum += contribution;
        } else {
            sum -= contribution;
        }
        if contribution <= SERIES_TOL * sum.abs().max(f64::MIN_POSITIVE) {
            break;
        }
    }
    -EULER_GAMMA - x.ln() + sum
}

/// Modified Lentz evaluation of the continued fraction
/// `1/(x+1- 1²/(x+3- 2²/(x+5- ...)))`, which equals `e^x · E1(x)`.
///
/// This is the even contraction of the classic Stieltjes fraction; the
/// leading `e^-x` of `E1` is cancelled analytically, so the return value
/// is the scaled integral directly.
fn lentz_tail(x: f64) -> Result<f64, SpecialError> {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..=MAX_ITER {
        let a = -((i * i) as f64);
        b += 2.0;
        d = a * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + a / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() <= LENTZ_TOL {
            return Ok(h);
        }
    }
    Err(SpecialError::NoConvergence(MAX_ITER))
}
