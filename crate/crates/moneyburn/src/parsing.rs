//! Textual specification parsers shared by the command-line layer and
//! the fuzz harnesses: market-size count expressions (`4m`, `m,m`,
//! `1e5`), numeric lists, hazard-grid specs (`lo:hi:steps`), joint
//! specs, and correlation modes. Distribution specs parse via
//! [`Marginal`](crate::distributions::Marginal)'s `FromStr`.

use crate::lp_design::JointSpec;
use crate::finite_market::Correlation;
use crate::{Error, Result};

fn parse_err(what: &'static str, input: &str, reason: impl Into<String>) -> Error {
    Error::Parse {
        what,
        input: input.to_string(),
        reason: reason.into(),
    }
}

/// Parses one count expression: a nonnegative integer literal
/// (decimal or scientific, e.g. `12`, `1e5`), the market-scale symbol
/// `m`, or a coefficient times the scale (`4m`, `2.5m` when the product
/// is integral). Returns the evaluated count.
pub fn parse_count_expr(expr: &str, m: u64) -> Result<u64> {
    const WHAT: &str = "count expression";
    let s = expr.trim();
    if s.is_empty() {
        return Err(parse_err(WHAT, expr, "empty expression"));
    }
    let (number, scaled) = match s.strip_suffix('m') {
        Some(prefix) => (prefix.trim_end(), true),
        None => (s, false),
    };
    let coefficient = if number.is_empty() {
        if !scaled {
            return Err(parse_err(WHAT, expr, "empty expression"));
        }
        1.0
    } else {
        if !number
            .bytes()
            .all(|b| b.is_ascii_digit() || matches!(b, b'.' | b'e' | b'E' | b'+' | b'-'))
        {
            return Err(parse_err(WHAT, expr, "expected digits, '.', exponent, or 'm'"));
        }
        number
            .parse::<f64>()
            .map_err(|e| parse_err(WHAT, expr, e.to_string()))?
    };
    if !(coefficient >= 0.0) || !coefficient.is_finite() {
        return Err(parse_err(WHAT, expr, "count must be finite and nonnegative"));
    }
    let value = if scaled { coefficient * m as f64 } else { coefficient };
    if value > u32::MAX as f64 {
        return Err(parse_err(WHAT, expr, "count exceeds the u32 range"));
    }
    if (value - value.round()).abs() > 1e-9 {
        return Err(parse_err(WHAT, expr, format!("count {value} is not an integer")));
    }
    Ok(value.round() as u64)
}

/// Parses a comma-separated list of count expressions (e.g. `m,m` or
/// `1,0,2`), as used for integer capacities.
pub fn parse_capacities(expr: &str, m: u64) -> Result<Vec<u64>> {
    let s = expr.trim();
    if s.is_empty() {
        return Err(parse_err("capacity list", expr, "empty list"));
    }
    s.split(',').map(|part| parse_count_expr(part, m)).collect()
}

/// Parses a comma-separated list of finite decimal numbers.
pub fn parse_f64_list(expr: &str) -> Result<Vec<f64>> {
    const WHAT: &str = "number list";
    let s = expr.trim();
    if s.is_empty() {
        return Err(parse_err(WHAT, expr, "empty list"));
    }
    s.split(',')
        .map(|part| {
            let x: f64 = part
                .trim()
                .parse()
                .map_err(|e: std::num::ParseFloatError| parse_err(WHAT, expr, e.to_string()))?;
            if !x.is_finite() {
                return Err(parse_err(WHAT, expr, "entries must be finite"));
            }
            Ok(x)
        })
        .collect()
}

/// Parses a comma-separated list of positive integers (decimal or
/// scientific, e.g. `1,2,4,16` or `1e3`), each in `1..=10^6`.
pub fn parse_u32_list(expr: &str) -> Result<Vec<u32>> {
    const WHAT: &str = "integer list";
    let s = expr.trim();
    if s.is_empty() {
        return Err(parse_err(WHAT, expr, "empty list"));
    }
    s.split(',')
        .map(|part| {
            let x: f64 = part
                .trim()
                .parse()
                .map_err(|e: std::num::ParseFloatError| parse_err(WHAT, expr, e.to_string()))?;
            if !x.is_finite() || !(1.0..=1_000_000.0).contains(&x) {
                return Err(parse_err(WHAT, expr, "entries must lie in 1..=1000000"));
            }
            if (x - x.round()).abs() > 1e-9 {
                return Err(parse_err(WHAT, expr, format!("entry {x} is not an integer")));
            }
            Ok(x.round() as u32)
        })
        .collect()
}

/// Parses an evaluation grid `lo:hi:steps` with `lo < hi` and
/// `1 ≤ steps ≤ 10^6`; the grid has `steps + 1` equally-spaced points.
pub fn parse_grid_spec(expr: &str) -> Result<(f64, f64, usize)> {
    const WHAT: &str = "grid spec";
    let parts: Vec<&str> = expr.trim().split(':').collect();
    if parts.len() != 3 {
        return Err(parse_err(WHAT, expr, "expected lo:hi:steps"));
    }
    let lo: f64 = parts[0]
        .trim()
        .parse()
        .map_err(|e: std::num::ParseFloatError| parse_err(WHAT, expr, e.to_string()))?;
    let hi: f64 = parts[1]
        .trim()
        .parse()
        .map_err(|e: std::num::ParseFloatError| parse_err(WHAT, expr, e.to_string()))?;
    let steps: usize = parts[2]
        .trim()
        .parse()
        .map_err(|e: std::num::ParseIntError| parse_err(WHAT, expr, e.to_string()))?;
    if !lo.is_finite() || !hi.is_finite() || !(lo < hi) {
        return Err(parse_err(WHAT, expr, "need finite lo < hi"));
    }
    if steps == 0 || steps > 1_000_000 {
        return Err(parse_err(WHAT, expr, "steps must lie in 1..=1000000"));
    }
    Ok((lo, hi, steps))
}

/// Parses a joint specification: `product`, or `diagonal:<weight>` for
/// the half-correlated mixture with the given diagonal weight.
pub fn parse_joint_spec(expr: &str) -> Result<JointSpec> {
    const WHAT: &str = "joint spec";
    let s = expr.trim();
    if s == "product" {
        return Ok(JointSpec::Product);
    }
    if let Some(w) = s.strip_prefix("diagonal:") {
        let weight: f64 = w
            .trim()
            .parse()
            .map_err(|e: std::num::ParseFloatError| parse_err(WHAT, expr, e.to_string()))?;
        if !(0.0..=1.0).contains(&weight) {
            return Err(parse_err(WHAT, expr, "diagonal weight must lie in [0,1]"));
        }
        return Ok(JointSpec::DiagonalMixture {
            diagonal_weight: weight,
        });
    }
    Err(parse_err(WHAT, expr, "expected 'product' or 'diagonal:<weight>'"))
}

/// Parses a correlation mode: `iid`, `within`, or `between`.
pub fn parse_correlation(expr: &str) -> Result<Correlation> {
    match expr.trim() {
        "iid" => Ok(Correlation::Iid),
        "within" => Ok(Correlation::WithinAgent),
        "between" => Ok(Correlation::BetweenAgent),
        _ => Err(parse_err(
            "correlation mode",
            expr,
            "expected 'iid', 'within', or 'between'",
        )),
    }
}
