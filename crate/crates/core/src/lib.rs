//! Exact operator calculus and numerical potential theory on the unit ball of ℂⁿ.
//!
//! The crate has two layers. The exact layer ([`poly`], [`spectral`], [`identities`])
//! works with holomorphic polynomials over exact rational complex coefficients and
//! realizes the Bergman-type operator calculus — reproducing formulas, inverses,
//! integration by parts, Taylor and fractional Leibnitz decompositions — as identities
//! that hold with zero residual. The numerical layer ([`quad`], [`potential`],
//! [`capacity`], [`multiplier`]) provides certified quadrature on the sphere and the
//! weighted ball, Riesz/Wolff/holomorphic potentials, a convex capacity solver and
//! multiplier certification reports.
//!
//! Named verification routines are registered behind the [`check::Check`] trait and
//! selected at runtime by the CLI (`ops verify`, `identities run`, `suite`).

pub mod capacity;
pub mod check;
pub mod identities;
pub mod multiplier;
pub mod poly;
pub mod potential;
pub mod quad;
pub mod spectral;

use thiserror::Error;

pub type Rat = num::BigRational;
pub type Coeff = num::Complex<Rat>;
pub type C64 = num::Complex<f64>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("quadrature did not converge: {0}")]
    Divergence(String),
    #[error("solver failed: {0}")]
    SolverFailure(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

/// `k_s = max([s], 0) + 1`, the canonical derivative order attached to a smoothness
/// index `s` (`[s]` is the integer part).
pub fn k_s(s: f64) -> u32 {
    (s.floor().max(0.0)) as u32 + 1
}

/// Builds the global rayon pool honoring the `BALLLAB_THREADS` cap. Safe to call
/// more than once; only the first call takes effect.
pub fn init_threads() {
    use std::sync::Once;
    static ONCE: Once = Once::new();
    ONCE.call_once(|| {
        if let Ok(v) = std::env::var("BALLLAB_THREADS") {
            if let Ok(k) = v.parse::<usize>() {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(k.max(1))
                    .build_global();
            }
        }
    });
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn k_s_convention() {
        assert_eq!(k_s(0.5), 1);
        assert_eq!(k_s(0.0), 1);
        assert_eq!(k_s(1.0), 2);
        assert_eq!(k_s(1.7), 2);
        assert_eq!(k_s(-0.3), 1);
    }
}
