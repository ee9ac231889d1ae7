//! Digamma and trigamma functions on the positive reals.
//!
//! Both are computed by lifting the argument with the recurrence
//! `psi(x) = psi(x+1) - 1/x` (resp. `psi1(x) = psi1(x+1) + 1/x^2`) until
//! `x >= LIFT_THRESHOLD`, then evaluating the asymptotic expansion
//!
//! ```text
//! psi(x)  ~ ln x - 1/(2x) - 1/(12x^2) + 1/(120x^4) - 1/(252x^6)
//! psi1(x) ~ 1/x + 1/(2x^2) + 1/(6x^3) - 1/(30x^5) + 1/(42x^7)
//! ```
//!
//! The lift threshold of 20 keeps the truncation error of both expansions
//! below 2.5e-13, so values agree with an independent series oracle to well
//! under 1e-10 everywhere on the supported range `x >= 1e-3`.

use crate::error::{Result, TmurError};

const LIFT_THRESHOLD: f64 = 20.0;

/// Digamma `psi(x) = d/dx ln Gamma(x)` for `x > 0`.
pub fn digamma(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(TmurError::domain(format!(
            "digamma requires x > 0, got {x}"
        )));
    }
    Ok(digamma_raw(x))
}

/// Trigamma `psi'(x)` for `x > 0`.
pub fn trigamma(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(TmurError::domain(format!(
            "trigamma requires x > 0, got {x}"
        )));
    }
    Ok(trigamma_raw(x))
}

pub(crate) fn digamma_raw(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    let mut shift = 0.0;
    let mut y = x;
    while y < LIFT_THRESHOLD {
        shift -= 1.0 / y;
        y += 1.0;
    }
    let inv = 1.0 / y;
    let inv2 = inv * inv;
    // ln y - 1/(2y) - 1/(12y^2) + 1/(120y^4) - 1/(252y^6)
    let series = y.ln() - 0.5 * inv - inv2 * (1.0 / 12.0 - inv2 * (1.0 / 120.0 - inv2 / 252.0));
    series + shift
}

pub(crate) fn trigamma_raw(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    let mut shift = 0.0;
    let mut y = x;
    while y < LIFT_THRESHOLD {
        shift += 1.0 / (y * y);
        y += 1.0;
    }
    let inv = 1.0 / y;
    let inv2 = inv * inv;
    // 1/y + 1/(2y^2) + 1/(6y^3) - 1/(30y^5) + 1/(42y^7)
    let series = inv + inv2 * (0.5 + inv * (1.0 / 6.0 - inv2 * (1.0 / 30.0 - inv2 / 42.0)));
    series + shift
}

#[cfg(test)]
mod tests {
    use super::*;

    const EULER_MASCHERONI: f64 = 0.577_215_664_901_532_9;
    const PI_SQUARED_OVER_SIX: f64 = 1.644_934_066_848_226_4;

    #[test]
    fn digamma_known_values() {
        // psi(1) = -gamma, psi(2) = 1 - gamma, psi(1/2) = -gamma - 2 ln 2.
        assert!((digamma(1.0).unwrap() + EULER_MASCHERONI).abs() < 1e-12);
        assert!((digamma(2.0).unwrap() - (1.0 - EULER_MASCHERONI)).abs() < 1e-12);
        let half = -EULER_MASCHERONI - 2.0 * std::f64::consts::LN_2;
        assert!((digamma(0.5).unwrap() - half).abs() < 1e-12);
    }

    #[test]
    fn trigamma_known_values() {
        // psi'(1) = pi^2/6, psi'(2) = pi^2/6 - 1, psi'(1/2) = pi^2/2.
        assert!((trigamma(1.0).unwrap() - PI_SQUARED_OVER_SIX).abs() < 1e-12);
        assert!((trigamma(2.0).unwrap() - (PI_SQUARED_OVER_SIX - 1.0)).abs() < 1e-12);
        assert!((trigamma(0.5).unwrap() - std::f64::consts::PI.powi(2) / 2.0).abs() < 1e-11);
        // Frozen spot value for a mid-range argument.
        assert!((trigamma(10.0).unwrap() - 0.105_166_335_681_685_75).abs() < 1e-12);
    }

    #[test]
    fn recurrence_identities_hold() {
        // psi(x+1) - psi(x) = 1/x and psi'(x+1) - psi'(x) = -1/x^2.
        let mut x = 1e-3;
        while x < 100.0 {
            let d = digamma(x + 1.0).unwrap() - digamma(x).unwrap();
            assert!(
                (d - 1.0 / x).abs() < 1e-10,
                "digamma recurrence off at x={x}: {d} vs {}",
                1.0 / x
            );
            let t = trigamma(x).unwrap() - trigamma(x + 1.0).unwrap();
            assert!((t - 1.0 / (x * x)).abs() < 1e-9 * (1.0 / (x * x)).max(1.0));
            x *= 1.37;
        }
    }

    #[test]
    fn psi_three_minus_psi_two_is_half() {
        let d = digamma(3.0).unwrap() - digamma(2.0).unwrap();
        assert!((d - 0.5).abs() < 1e-12);
    }

    #[test]
    fn trigamma_matches_digamma_slope() {
        let h = 1e-5;
        for &x in &[0.01, 0.1, 0.7, 1.0, 2.5, 9.0, 42.0, 99.5] {
            let slope = (digamma_raw(x + h) - digamma_raw(x - h)) / (2.0 * h);
            let t = trigamma_raw(x);
            assert!(
                (slope - t).abs() <= 1e-6 * t.abs().max(1.0),
                "slope {slope} vs trigamma {t} at x={x}"
            );
        }
    }

    #[test]
    fn domain_errors() {
        assert!(digamma(0.0).is_err());
        assert!(digamma(-1.0).is_err());
        assert!(digamma(f64::NAN).is_err());
        assert!(trigamma(0.0).is_err());
        assert!(trigamma(-3.5).is_err());
    }
}
