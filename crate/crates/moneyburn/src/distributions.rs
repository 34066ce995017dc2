//! Parametric marginal value distributions `G`, the reduced
//! largest-order-statistic distribution `G_K(v) = G(v)^K`, and the
//! hazard-rate / virtual-valuation machinery built on them.
//!
//! All families live on `[0, v̄]` with `v̄ = ∞` except `Uniform`. The Gumbel
//! family is primarily a limit shape; as a *marginal* it is truncated at 0
//! and renormalized so the support contract holds.

use crate::{Error, Result, SupportSide};
use std::str::FromStr;

/// Tolerance for "the cdf has saturated at 1" checks.
const CDF_SATURATION_TOL: f64 = 1e-14;

/// A parametric marginal value distribution with unit scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Marginal {
    /// `G(v) = 1 - e^{-λv}` on `[0, ∞)`.
    Exponential { rate: f64 },
    /// `G(v) = 1 - exp(-v^α)` on `[0, ∞)` (unit scale).
    Weibull { shape: f64 },
    /// `G(v) = 1 - (1+v)^{-α}` on `[0, ∞)`.
    ShiftedPareto { shape: f64 },
    /// `G(v) = exp(-v^{-α})` on `[0, ∞)` (unit scale).
    Frechet { shape: f64 },
    /// Standard Gumbel truncated to `[0, ∞)` and renormalized:
    /// `G(v) = (Λ(v) - Λ(0)) / (1 - Λ(0))` with `Λ(w) = exp(-e^{-w})`.
    Gumbel,
    /// `G(v) = v / v̄` on `[0, v̄]`.
    Uniform { upper: f64 },
}

/// Common distribution interface shared by [`Marginal`] and [`Reduced`].
pub trait Dist {
    /// Cumulative distribution function. Errors outside the support,
    /// distinguishing below from above.
    fn cdf(&self, v: f64) -> Result<f64>;
    /// Density `g`.
    fn pdf(&self, v: f64) -> Result<f64>;
    /// Analytic density derivative `g'`.
    fn pdf_derivative(&self, v: f64) -> Result<f64>;
    /// Inverse cdf for `q ∈ (0, 1)`.
    fn quantile(&self, q: f64) -> Result<f64>;
    /// Upper end of the support (`∞` for unbounded families).
    fn support_upper(&self) -> f64;

    /// Survival `1 - G(v)`, computed without cancellation where possible.
    fn survival(&self, v: f64) -> Result<f64> {
        Ok(1.0 - self.cdf(v)?)
    }

    /// Hazard rate `r(v) = g(v) / (1 - G(v))`.
    ///
    /// Errors once the cdf has saturated at 1 (survival below 1e-14).
    fn hazard_rate(&self, v: f64) -> Result<f64> {
        let s = self.survival(v)?;
        if s < CDF_SATURATION_TOL {
            return Err(Error::DomainViolation(format!(
                "hazard rate undefined at v = {v}: cdf is 1 within 1e-14"
            )));
        }
        Ok(self.pdf(v)? / s)
    }

    /// Virtual valuation for utility `ϑ(v) = (1 - G(v)) / g(v)`.
    ///
    /// Errors where the density vanishes.
    fn virtual_valuation(&self, v: f64) -> Result<f64> {
        let g = self.pdf(v)?;
        if !(g > 0.0) || !g.is_finite() {
            return Err(Error::DomainViolation(format!(
                "virtual valuation needs finite positive density at v = {v}, got {g}"
            )));
        }
        Ok(self.survival(v)? / g)
    }

    /// Derivative `ϑ'(v) = (-g² - g'(1-G)) / g² = -1 - g'(1-G)/g²`.
    fn virtual_valuation_derivative(&self, v: f64) -> Result<f64> {
        let g = self.pdf(v)?;
        if !(g > 0.0) || !g.is_finite() {
            return Err(Error::DomainViolation(format!(
                "virtual valuation derivative needs finite positive density at v = {v}, got {g}"
            )));
        }
        let gp = self.pdf_derivative(v)?;
        let s = self.survival(v)?;
        Ok(-1.0 - gp * s / (g * g))
    }
}

impl Marginal {
    /// Validate the family parameters.
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Marginal::Exponential { rate } => rate > 0.0 && rate.is_finite(),
            Marginal::Weibull { shape }
            | Marginal::ShiftedPareto { shape }
            | Marginal::Frechet { shape } => shape > 0.0 && shape.is_finite(),
            Marginal::Gumbel => true,
            Marginal::Uniform { upper } => upper > 0.0 && upper.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::DomainViolation(format!(
                "invalid distribution parameter in {self:?}"
            )))
        }
    }

    /// Whether the mean `∫ v dG` is finite.
    pub fn mean_is_finite(&self) -> bool {
        match *self {
            Marginal::Frechet { shape } | Marginal::ShiftedPareto { shape } => shape > 1.0,
            _ => true,
        }
    }

    fn check_support(&self, v: f64) -> Result<()> {
        if v.is_nan() {
            return Err(Error::NonFinite { at: v });
        }
        if v < 0.0 {
            return Err(Error::OutOfSupport {
                v,
                side: SupportSide::Below,
            });
        }
        let upper = self.support_upper();
        if v > upper {
            return Err(Error::OutOfSupport {
                v,
                side: SupportSide::Above,
            });
        }
        Ok(())
    }
}

// Gumbel truncation constants: Λ(0) = e^{-1}.
const GUMBEL_CDF_AT_0: f64 = 0.367_879_441_171_442_33; // e^{-1}
const GUMBEL_MASS: f64 = 1.0 - GUMBEL_CDF_AT_0;

fn gumbel_lambda(v: f64) -> f64 {
    // Λ(v) = exp(-e^{-v})
    (-(-v).exp()).exp()
}

impl Dist for Marginal {
    fn cdf(&self, v: f64) -> Result<f64> {
        self.validate()?;
        self.check_support(v)?;
        Ok(match *self {
            Marginal::Exponential { rate } => -(-rate * v).exp_m1(),
            Marginal::Weibull { shape } => -(-v.powf(shape)).exp_m1(),
            Marginal::ShiftedPareto { shape } => 1.0 - (1.0 + v).powf(-shape),
            Marginal::Frechet { shape } => {
                if v == 0.0 {
                    0.0
                } else {
                    (-v.powf(-shape)).exp()
                }
            }
            Marginal::Gumbel => (gumbel_lambda(v) - GUMBEL_CDF_AT_0) / GUMBEL_MASS,
            Marginal::Uniform { upper } => v / upper,
        })
    }

    fn survival(&self, v: f64) -> Result<f64> {
        self.validate()?;
        self.check_support(v)?;
        Ok(match *self {
            Marginal::Exponential { rate } => (-rate * v).exp(),
            Marginal::Weibull { shape } => (-v.powf(shape)).exp(),
            Marginal::ShiftedPareto { shape } => (1.0 + v).powf(-shape),
            Marginal::Frechet { shape } => {
                if v == 0.0 {
                    1.0
                } else {
                    -(-v.powf(-shape)).exp_m1()
                }
            }
            Marginal::Gumbel => -(-(-v).exp()).exp_m1() / GUMBEL_MASS,
            Marginal::Uniform { upper } => 1.0 - v / upper,
        })
    }

    fn pdf(&self, v: f64) -> Result<f64> {
        self.validate()?;
        self.check_support(v)?;
        Ok(match *self {
            Marginal::Exponential { rate } => rate * (-rate * v).exp(),
            Marginal::Weibull { shape } => {
                // αv^{α-1}e^{-v^α}; diverges at 0 for α < 1 (integrable).
                shape * v.powf(shape - 1.0) * (-v.powf(shape)).exp()
            }
            Marginal::ShiftedPareto { shape } => shape * (1.0 + v).powf(-shape - 1.0),
            Marginal::Frechet { shape } => {
                if v == 0.0 {
                    0.0
                } else {
                    shape * v.powf(-shape - 1.0) * (-v.powf(-shape)).exp()
                }
            }
            Marginal::Gumbel => (-v).exp() * gumbel_lambda(v) / GUMBEL_MASS,
            Marginal::Uniform { upper } => 1.0 / upper,
        })
    }

    fn pdf_derivative(&self, v: f64) -> Result<f64> {
        self.validate()?;
        self.check_support(v)?;
        Ok(match *self {
            Marginal::Exponential { rate } => -rate * rate * (-rate * v).exp(),
            Marginal::Weibull { shape } => {
                // g' = e^{-v^α} (α(α-1)v^{α-2} - α²v^{2α-2})
                let a = shape;
                (-v.powf(a)).exp() * (a * (a - 1.0) * v.powf(a - 2.0) - a * a * v.powf(2.0 * a - 2.0))
            }
            Marginal::ShiftedPareto { shape } => {
                -shape * (shape + 1.0) * (1.0 + v).powf(-shape - 2.0)
            }
            Marginal::Frechet { shape } => {
                if v == 0.0 {
                    0.0
                } else {
                    // g' = α e^{-v^{-α}} v^{-α-2} (α v^{-α} - (α+1))
                    let a = shape;
                    a * (-v.powf(-a)).exp() * v.powf(-a - 2.0) * (a * v.powf(-a) - (a + 1.0))
                }
            }
            Marginal::Gumbel => {
                // λ'(v) = λ(v)(e^{-v} - 1), λ(v) = e^{-v}Λ(v)
                let lam = (-v).exp() * gumbel_lambda(v);
                lam * ((-v).exp() - 1.0) / GUMBEL_MASS
            }
            Marginal::Uniform { .. } => 0.0,
        })
    }

    fn quantile(&self, q: f64) -> Result<f64> {
        self.validate()?;
        if !(0.0..=1.0).contains(&q) {
            return Err(Error::DomainViolation(format!(
                "quantile requires q in [0,1], got {q}"
            )));
        }
        Ok(match *self {
            Marginal::Exponential { rate } => -(-q).ln_1p() / rate,
            Marginal::Weibull { shape } => (-(-q).ln_1p()).powf(1.0 / shape),
            Marginal::ShiftedPareto { shape } => (1.0 - q).powf(-1.0 / shape) - 1.0,
            Marginal::Frechet { shape } => (-q.ln()).powf(-1.0 / shape),
            Marginal::Gumbel => {
                let target = GUMBEL_CDF_AT_0 + q * GUMBEL_MASS;
                -(-target.ln()).ln()
            }
            Marginal::Uniform { upper } => q * upper,
        })
    }

    fn support_upper(&self) -> f64 {
        match *self {
            Marginal::Uniform { upper } => upper,
            _ => f64::INFINITY,
        }
    }
}

/// The reduced value distribution `G_K(v) = G(v)^K`: the law of the best
/// of `k` i.i.d. draws from the marginal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reduced {
    base: Marginal,
    k: u32,
}

/// Construct the reduced distribution for `k ≥ 1` varieties.
pub fn reduced(base: Marginal, k: u32) -> Result<Reduced> {
    base.validate()?;
    if k < 1 {
        return Err(Error::DomainViolation("reduced requires k >= 1".into()));
    }
    Ok(Reduced { base, k })
}

impl Reduced {
    pub fn base(&self) -> Marginal {
        self.base
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    /// Hazard-rate derivative of the reduced distribution,
    /// `r'(v; G_K) = K G^{K-2} [K g² - (g² - g' G)(1 - G^K)] / (1 - G^K)²`.
    ///
    /// For `K = 1` the algebraically identical direct form
    /// `(g'(1-G) + g²)/(1-G)²` is used: the factored form multiplies
    /// `G^{-1}` into a difference that cancels to `O(G)`, which destroys
    /// precision near the lower support end.
    ///
    /// Preconditions: `v > 0` (so `G(v) > 0`) and `cdf(v) < 1`.
    pub fn hazard_rate_derivative(&self, v: f64) -> Result<f64> {
        let g_big = self.base.cdf(v)?;
        if !(g_big > 0.0) {
            return Err(Error::DomainViolation(format!(
                "hazard_rate_derivative requires G(v) > 0, got G({v}) = {g_big}"
            )));
        }
        let s_red = self.survival(v)?; // 1 - G^K
        if s_red < CDF_SATURATION_TOL {
            return Err(Error::DomainViolation(format!(
                "hazard_rate_derivative undefined at v = {v}: cdf is 1 within 1e-14"
            )));
        }
        let g = self.base.pdf(v)?;
        let gp = self.base.pdf_derivative(v)?;
        let k = f64::from(self.k);
        if self.k == 1 {
            let s = self.base.survival(v)?;
            return Ok((gp * s + g * g) / (s * s));
        }
        let num = k * g_big.powi(self.k as i32 - 2) * (k * g * g - (g * g - gp * g_big) * s_red);
        Ok(num / (s_red * s_red))
    }
}

impl Dist for Reduced {
    fn cdf(&self, v: f64) -> Result<f64> {
        Ok(self.base.cdf(v)?.powi(self.k as i32))
    }

    fn survival(&self, v: f64) -> Result<f64> {
        // 1 - G^K = -expm1(K ln G), exact for G near both 0 and 1.
        let g_big = self.base.cdf(v)?;
        if g_big == 0.0 {
            return Ok(1.0);
        }
        Ok(-(f64::from(self.k) * g_big.ln()).exp_m1())
    }

    fn pdf(&self, v: f64) -> Result<f64> {
        let g_big = self.base.cdf(v)?;
        let k = f64::from(self.k);
        if self.k == 1 {
            return self.base.pdf(v);
        }
        if g_big == 0.0 {
            // Define by the v↓0 limit of K g G^{K-1}. Only the Weibull
            // family has a non-trivial limit: g G^{K-1} ~ α v^{Kα-1}.
            return Ok(match self.base {
                Marginal::Weibull { shape } => {
                    let e = k * shape - 1.0;
                    if e > 0.0 {
                        0.0
                    } else if e == 0.0 {
                        1.0 // K α v^{Kα-1} → Kα = 1
                    } else {
                        f64::INFINITY
                    }
                }
                _ => 0.0,
            });
        }
        Ok(k * self.base.pdf(v)? * g_big.powi(self.k as i32 - 1))
    }

    fn pdf_derivative(&self, v: f64) -> Result<f64> {
        let g_big = self.base.cdf(v)?;
        let k = f64::from(self.k);
        if self.k == 1 {
            return self.base.pdf_derivative(v);
        }
        if g_big == 0.0 {
            // Limit of K(K-1)g²G^{K-2} + K g' G^{K-1} as v↓0.
            return Ok(match self.base {
                Marginal::Weibull { shape } => {
                    // Both terms scale as v^{Kα-2} with coefficient Kα(Kα-1).
                    let e = k * shape - 2.0;
                    let coeff = k * shape * (k * shape - 1.0);
                    if e > 0.0 {
                        0.0
                    } else if e == 0.0 {
                        coeff
                    } else {
                        f64::INFINITY.copysign(coeff)
                    }
                }
                _ => {
                    let g = self.base.pdf(v)?;
                    let gp = self.base.pdf_derivative(v)?;
                    if self.k == 2 {
                        2.0 * g * g + 2.0 * gp * g_big
                    } else {
                        0.0
                    }
                }
            });
        }
        let g = self.base.pdf(v)?;
        let gp = self.base.pdf_derivative(v)?;
        Ok(k * (k - 1.0) * g * g * g_big.powi(self.k as i32 - 2)
            + k * gp * g_big.powi(self.k as i32 - 1))
    }

    fn quantile(&self, q: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&q) {
            return Err(Error::DomainViolation(format!(
                "quantile requires q in [0,1], got {q}"
            )));
        }
        self.base.quantile(q.powf(1.0 / f64::from(self.k)))
    }

    fn support_upper(&self) -> f64 {
        self.base.support_upper()
    }
}

impl FromStr for Marginal {
    type Err = Error;

    /// Parse the distribution grammar `family:param` (lowercase family,
    /// decimal parameter): `exp:1`, `weibull:0.9`, `spareto:2`,
    /// `frechet:3`, `uniform:1`, and the parameter-free `gumbel`.
    fn from_str(s: &str) -> Result<Self> {
        let err = |reason: &str| Error::Parse {
            what: "distribution spec",
            input: s.to_string(),
            reason: reason.to_string(),
        };
        let (family, params) = match s.split_once(':') {
            Some((f, p)) => (f, Some(p)),
            None => (s, None),
        };
        let parse_one = |params: Option<&str>| -> Result<f64> {
            let raw = params.ok_or_else(|| err("expected one parameter after ':'"))?;
            if raw.is_empty() || raw.contains(',') {
                return Err(err("expected exactly one parameter"));
            }
            if !raw
                .bytes()
                .all(|b| b.is_ascii_digit() || b == b'.' || b == b'-' || b == b'+' || b == b'e' || b == b'E')
            {
                return Err(err("parameter must be a decimal number"));
            }
            let x: f64 = raw
                .parse()
                .map_err(|_| err("parameter must be a decimal number"))?;
            if !x.is_finite() {
                return Err(err("parameter must be finite"));
            }
            Ok(x)
        };
        let dist = match family {
            "exp" => Marginal::Exponential {
                rate: parse_one(params)?,
            },
            "weibull" => Marginal::Weibull {
                shape: parse_one(params)?,
            },
            "spareto" => Marginal::ShiftedPareto {
                shape: parse_one(params)?,
            },
            "frechet" => Marginal::Frechet {
                shape: parse_one(params)?,
            },
            "uniform" => Marginal::Uniform {
                upper: parse_one(params)?,
            },
            "gumbel" => {
                if params.is_some() {
                    return Err(err("gumbel takes no parameter"));
                }
                Marginal::Gumbel
            }
            _ => return Err(err("unknown family (expected exp, weibull, spareto, frechet, gumbel, uniform)")),
        };
        dist.validate().map_err(|_| err("parameter out of range"))?;
        Ok(dist)
    }
}

impl std::fmt::Display for Marginal {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match *self {
            Marginal::Exponential { rate } => write!(f, "exp:{rate}"),
            Marginal::Weibull { shape } => write!(f, "weibull:{shape}"),
            Marginal::ShiftedPareto { shape } => write!(f, "spareto:{shape}"),
            Marginal::Frechet { shape } => write!(f, "frechet:{shape}"),
            Marginal::Gumbel => write!(f, "gumbel"),
            Marginal::Uniform { upper } => write!(f, "uniform:{upper}"),
        }
    }
}
