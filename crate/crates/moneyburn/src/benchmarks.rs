//! Closed-form and quadrature benchmarks: residual surplus of the
//! no-screening (random assignment) and full-screening (pay-to-win)
//! mechanisms across environments, and the two-object exponential
//! random-favorites analysis.

use crate::distributions::{reduced, Dist, Marginal};
use crate::numerics::{integrate, DEFAULT_INTEGRAL_TOL};
use crate::{Error, Result};

fn check_supply(m_bar: f64) -> Result<()> {
    if !(m_bar > 0.0 && m_bar < 1.0) {
        return Err(Error::DomainViolation(format!(
            "supply must lie in (0, 1), got {m_bar}"
        )));
    }
    Ok(())
}

/// Residual surplus of the no-screening mechanism:
/// `m̄ · E[v]` under the reduced distribution, evaluated as
/// `m̄ ∫ (1 - G_K) dv`.
pub fn rs_sd(g: Marginal, k: u32, m_bar: f64) -> Result<f64> {
    check_supply(m_bar)?;
    if !g.mean_is_finite() {
        return Err(Error::DivergentMoment(format!(
            "no-screening surplus needs a finite mean; {g} has none"
        )));
    }
    let red = reduced(g, k)?;
    let mean = integrate(
        |v| red.survival(v).unwrap_or(f64::NAN),
        0.0,
        red.support_upper(),
        DEFAULT_INTEGRAL_TOL,
    )?;
    Ok(m_bar * mean)
}

/// Residual surplus of the full-screening mechanism: with the
/// market-clearing price `q` at `1 - G_K(q) = m̄`,
/// `∫_q (v - q) dG_K = ∫_q (1 - G_K) dv`.
pub fn rs_vcg(g: Marginal, k: u32, m_bar: f64) -> Result<f64> {
    check_supply(m_bar)?;
    if !g.mean_is_finite() {
        return Err(Error::DivergentMoment(format!(
            "full-screening surplus needs a finite mean; {g} has none"
        )));
    }
    let red = reduced(g, k)?;
    let q = red.quantile(1.0 - m_bar)?;
    integrate(
        |v| red.survival(v).unwrap_or(f64::NAN),
        q,
        red.support_upper(),
        DEFAULT_INTEGRAL_TOL,
    )
}

/// `(k, rs_sd, rs_vcg)` rows for `k = 1..=k_max`.
pub fn sd_vcg_curve(g: Marginal, m_bar: f64, k_max: u32) -> Result<Vec<(u32, f64, f64)>> {
    if k_max == 0 || k_max > 200 {
        return Err(Error::DomainViolation(format!(
            "curve length must lie in 1..=200, got {k_max}"
        )));
    }
    (1..=k_max)
        .map(|k| Ok((k, rs_sd(g, k, m_bar)?, rs_vcg(g, k, m_bar)?)))
        .collect()
}

/// Closed-form outcome of the random-favorites mechanism for two object
/// types with exponential values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RfOutcome {
    /// Favorite-group size for the scarcer… larger-supply object.
    pub a: f64,
    /// Favorite-group size for the smaller-supply object.
    pub b: f64,
    /// Residual surplus of random favorites.
    pub rs_rf: f64,
    /// Residual surplus of the two-object no-screening benchmark.
    pub rs_sd2: f64,
    /// Relative improvement `(rs_rf - rs_sd2) / rs_rf`.
    pub pct_diff: f64,
}

fn check_rf(m1: f64, m2: f64) -> Result<()> {
    if !(m1 >= m2 && m2 > 0.0 && m1 + m2 <= 1.0) {
        return Err(Error::DomainViolation(format!(
            "random favorites needs m1 ≥ m2 > 0 and m1 + m2 ≤ 1, got ({m1}, {m2})"
        )));
    }
    Ok(())
}

/// Random-favorites closed forms for supplies `(m1, m2)`, `m1 ≥ m2`:
/// group sizes `a = m1 + √(m1 m2)`, `b = m2 + √(m1 m2)`, surplus
/// `m1 + m2 + √(m1 m2)` versus the no-screening `m1 + 2 m2`.
pub fn rf_exponential(m1: f64, m2: f64) -> Result<RfOutcome> {
    check_rf(m1, m2)?;
    let s = (m1 * m2).sqrt();
    let rs_rf = m1 + m2 + s;
    Ok(RfOutcome {
        a: m1 + s,
        b: m2 + s,
        rs_rf,
        rs_sd2: m1 + 2.0 * m2,
        pct_diff: (s - m2) / rs_rf,
    })
}

/// Verifies the market-clearing identity of the random-favorites group
/// sizes: demands `a²/(a+b)` and `b²/(a+b)` reproduce the supplies.
/// Returns the absolute residuals `(|a²/(a+b) - m1|, |b²/(a+b) - m2|)`.
pub fn rf_market_clearing_check(m1: f64, m2: f64) -> Result<(f64, f64)> {
    let out = rf_exponential(m1, m2)?;
    let total = out.a + out.b;
    Ok((
        (out.a * out.a / total - m1).abs(),
        (out.b * out.b / total - m2).abs(),
    ))
}
