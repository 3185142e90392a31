//! Arbitrary-precision evaluation of scaled q^{-1}-Hermite polynomials and
//! certified verification of their seven-regime asymptotic expansions.

pub mod acceptance;
pub mod asymptotics;
pub mod error;
pub mod ismail_masson;
pub mod numtheory;
pub mod qseries;
pub mod report;

pub use acceptance::CriterionOutcome;
pub use asymptotics::{Regime, RegimeArithmetic, RegimeReport, Targets};
pub use error::{Error, Result};
pub use ismail_masson::{LogComplex, ScalingParams};
pub use numtheory::{ExactReal, RealDescriptor};
pub use qseries::{QContext, SeriesResult};
