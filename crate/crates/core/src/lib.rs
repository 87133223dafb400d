//! Exact q-series arithmetic and high-accuracy quadrature for identities that
//! relate regulator integrals of modular units to L-values of weight-2 forms,
//! together with direct Mahler-measure evaluation pipelines.
//!
//! The crate is organised in layers:
//!
//! * [`cyclotomic`] — exact arithmetic in Q(zeta_N), so series coefficients
//!   stay exact until the final embedding into `Complex64`.
//! * [`qseries`] — truncated q-expansions with fractional leading exponent,
//!   the shared engine for Siegel units, eta quotients and Eisenstein series.
//! * [`siegel`] — Siegel units `g_a`: exact expansions, cusp asymptotics, and
//!   factorisation of modular functions into unit products.
//! * [`eisenstein`] — the weight-1 series `e_{a,b}`, their modular partners
//!   `et_{a,b}`, and weight-2 combinations with exact constant terms.
//! * [`special`] — Clausen's function, digamma, the exponential integral, and
//!   closed-form integral evaluations used as oracles.
//! * [`quad`] — deterministic quadrature engines (exp-substituted trapezoid
//!   and composite Gauss–Legendre panels).
//! * [`regulator`] — numerical integration of the closed 1-form
//!   `eta(g,h) = log|g| d arg h − log|h| d arg g` along vertical geodesics.
//! * [`lvalue`] — L-values at s = 2, 3 by exponentially convergent
//!   Mellin-split sums, with slow partial sums as an independent oracle.
//! * [`mahler`] — logarithmic Mahler measures by Jensen-formula quadrature.
//! * [`examples`] — curated records and end-to-end verification pipelines for
//!   the five curve parameterisations and the three-variable check.

pub mod cyclotomic;
pub mod eisenstein;
pub mod error;
pub mod examples;
pub mod lvalue;
pub mod mahler;
pub mod qseries;
pub mod quad;
pub mod regulator;
pub mod siegel;
pub mod special;

pub use error::{Error, Result};
pub use regulator::{NumericResult, WorkStats};
