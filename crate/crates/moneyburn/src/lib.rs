//! Numerical toolkit for allocation mechanisms that cannot use monetary
//! transfers, where screening instead burns value ("money burning").
//!
//! The library computes, for a population of agents each demanding one of
//! `K` object varieties:
//!
//! - the *reduced* value distribution (the maximum of `K` i.i.d. marginal
//!   values) and its hazard-rate geometry ([`distributions`]);
//! - extreme-value normalizations and limit families for large `K`
//!   ([`extreme_value`]);
//! - residual-surplus-maximizing mechanisms in the reduced one-object
//!   problem via Myerson-style ironing ([`reduced_design`]);
//! - closed-form and quadrature benchmarks comparing no-screening
//!   (serial dictatorship), full-screening (VCG with burned payments) and
//!   random-favorites mechanisms ([`benchmarks`]);
//! - exact linear-programming solutions of small discretized multi-object
//!   design problems ([`lp_design`]);
//! - finite-market Monte Carlo comparisons of serial dictatorship and VCG
//!   ([`finite_market`]).
//!
//! All floating-point work is `f64`; every fallible operation returns
//! [`Result`] with a structured [`Error`].

pub mod benchmarks;
pub mod distributions;
pub mod extreme_value;
pub mod finite_market;
pub mod lp_design;
pub mod numerics;
pub mod parsing;
pub mod reduced_design;

mod error;
pub use error::{Error, Result, SupportSide};
