//! Extreme-value machinery for the reduced distribution at large variety
//! counts: normalization constants, normalized reduced distributions,
//! the three limit families, and domain-of-attraction classification.

use crate::distributions::{Dist, Marginal, Reduced};
use crate::numerics::integrate;
use crate::{Error, Result};

/// Affine normalization `(a_K, b_K)` applied as `w ↦ a_K w + b_K`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizationConstants {
    pub a_k: f64,
    pub b_k: f64,
}

/// Limit family of normalized maxima.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LimitFamily {
    /// `Λ(w) = exp(-e^{-w})` on the whole real line.
    ///
    /// The standard maxima convention; a source expressing the cdf as
    /// `exp(-exp(w))` is inconsistent with its own hazard
    /// `e^{-w}/(e^{e^{-w}} - 1)`, which this library follows.
    Gumbel,
    /// `Φ_α(w) = exp(-w^{-α})` on `w > 0`.
    Frechet { shape: f64 },
    /// `Ψ_α(w) = exp(-(-w)^α)` on `w < 0`.
    ReverseWeibull { shape: f64 },
}

/// Survival floor below which the mean-residual-value integral is cut off.
const TAIL_FLOOR: f64 = 1e-15;

/// Mean residual value `s(v) = ∫_v^{v̄} (1 - G(t)) dt / (1 - G(v))`.
fn mean_residual(g: Marginal, v: f64) -> Result<f64> {
    if !g.mean_is_finite() {
        return Err(Error::DivergentMoment(format!(
            "mean residual value diverges for {g}"
        )));
    }
    let upper = g.support_upper();
    let hi = if upper.is_finite() {
        upper
    } else {
        // Truncate where survival reaches the double-precision floor.
        g.quantile(1.0 - TAIL_FLOOR)?
    };
    let tail = integrate(
        |t| g.survival(t).unwrap_or(0.0),
        v,
        hi,
        crate::numerics::DEFAULT_INTEGRAL_TOL,
    )?;
    Ok(tail / g.survival(v)?)
}

/// Gumbel-domain constants: `b_K = G^{-1}(1 - 1/K)`, `a_K = s(b_K)`.
pub fn gumbel_constants(g: Marginal, k: u32) -> Result<NormalizationConstants> {
    if k < 2 {
        return Err(Error::DomainViolation(
            "normalization constants require k >= 2".into(),
        ));
    }
    let b_k = g.quantile(1.0 - 1.0 / f64::from(k))?;
    let a_k = mean_residual(g, b_k)?;
    if !(a_k > 0.0) || !a_k.is_finite() {
        return Err(Error::NonFinite { at: b_k });
    }
    Ok(NormalizationConstants { a_k, b_k })
}

/// Fréchet-domain constants: `a_K = G^{-1}(1 - 1/K)`, `b_K = 0`.
pub fn frechet_constants(g: Marginal, k: u32) -> Result<NormalizationConstants> {
    if k < 2 {
        return Err(Error::DomainViolation(
            "normalization constants require k >= 2".into(),
        ));
    }
    Ok(NormalizationConstants {
        a_k: g.quantile(1.0 - 1.0 / f64::from(k))?,
        b_k: 0.0,
    })
}

/// Normalized reduced cdf `Ĝ_K(w) = G_K(a_K w + b_K)`, extended by the
/// 0/1 convention outside the support.
pub fn normalized_cdf(red: &Reduced, c: &NormalizationConstants, w: f64) -> Result<f64> {
    let v = c.a_k * w + c.b_k;
    if v < 0.0 {
        return Ok(0.0);
    }
    if v > red.support_upper() {
        return Ok(1.0);
    }
    red.cdf(v)
}

/// Normalized reduced density `a_K g_K(a_K w + b_K)`; 0 outside support.
pub fn normalized_pdf(red: &Reduced, c: &NormalizationConstants, w: f64) -> Result<f64> {
    let v = c.a_k * w + c.b_k;
    if v < 0.0 || v > red.support_upper() {
        return Ok(0.0);
    }
    Ok(c.a_k * red.pdf(v)?)
}

/// Normalized reduced density derivative `a_K² g_K'(a_K w + b_K)`;
/// 0 outside support.
pub fn normalized_pdf_derivative(
    red: &Reduced,
    c: &NormalizationConstants,
    w: f64,
) -> Result<f64> {
    let v = c.a_k * w + c.b_k;
    if v < 0.0 || v > red.support_upper() {
        return Ok(0.0);
    }
    Ok(c.a_k * c.a_k * red.pdf_derivative(v)?)
}

/// Hazard-rate derivative of the normalized reduced distribution,
/// `a_K² r'(a_K w + b_K; G_K)`. Errors where the underlying hazard is
/// undefined (outside the support or at cdf saturation).
pub fn normalized_hazard_derivative(
    red: &Reduced,
    c: &NormalizationConstants,
    w: f64,
) -> Result<f64> {
    let v = c.a_k * w + c.b_k;
    Ok(c.a_k * c.a_k * red.hazard_rate_derivative(v)?)
}

impl LimitFamily {
    /// Limit cdf at `w` (0/1 outside the family support).
    pub fn cdf(&self, w: f64) -> f64 {
        match *self {
            LimitFamily::Gumbel => (-(-w).exp()).exp(),
            LimitFamily::Frechet { shape } => {
                if w <= 0.0 {
                    0.0
                } else {
                    (-w.powf(-shape)).exp()
                }
            }
            LimitFamily::ReverseWeibull { shape } => {
                if w >= 0.0 {
                    1.0
                } else {
                    (-(-w).powf(shape)).exp()
                }
            }
        }
    }

    /// Limit density at `w` (0 outside the family support).
    pub fn pdf(&self, w: f64) -> f64 {
        match *self {
            LimitFamily::Gumbel => (-w).exp() * (-(-w).exp()).exp(),
            LimitFamily::Frechet { shape } => {
                if w <= 0.0 {
                    0.0
                } else {
                    shape * w.powf(-shape - 1.0) * (-w.powf(-shape)).exp()
                }
            }
            LimitFamily::ReverseWeibull { shape } => {
                if w >= 0.0 {
                    0.0
                } else {
                    shape * (-w).powf(shape - 1.0) * (-(-w).powf(shape)).exp()
                }
            }
        }
    }

    /// Limit survival `1 - cdf(w)`, cancellation-free.
    pub fn survival(&self, w: f64) -> f64 {
        match *self {
            LimitFamily::Gumbel => -(-(-w).exp()).exp_m1(),
            LimitFamily::Frechet { shape } => {
                if w <= 0.0 {
                    1.0
                } else {
                    -(-w.powf(-shape)).exp_m1()
                }
            }
            LimitFamily::ReverseWeibull { shape } => {
                if w >= 0.0 {
                    0.0
                } else {
                    -(-(-w).powf(shape)).exp_m1()
                }
            }
        }
    }

    /// Limit hazard `pdf / (1 - cdf)`; `+∞` where the survival vanishes.
    pub fn hazard(&self, w: f64) -> f64 {
        match *self {
            LimitFamily::Gumbel => {
                // e^{-w} / (e^{e^{-w}} - 1), evaluated as t / expm1(t).
                let t = (-w).exp();
                t / t.exp_m1()
            }
            _ => {
                let s = self.survival(w);
                if s > 0.0 {
                    self.pdf(w) / s
                } else {
                    f64::INFINITY
                }
            }
        }
    }
}

/// Limit cdf at `w` (0/1 outside the family support).
pub fn limit_cdf(fam: LimitFamily, w: f64) -> f64 {
    fam.cdf(w)
}

/// Limit density at `w` (0 outside the family support).
pub fn limit_pdf(fam: LimitFamily, w: f64) -> f64 {
    fam.pdf(w)
}

/// Limit hazard at `w` (`+∞` where the survival vanishes).
pub fn limit_hazard(fam: LimitFamily, w: f64) -> f64 {
    fam.hazard(w)
}

/// Limit families expose the full distribution interface so the
/// screening machinery (ironing, thresholds, residual surplus) can run
/// on them directly.
impl Dist for LimitFamily {
    fn cdf(&self, v: f64) -> Result<f64> {
        if v.is_nan() {
            return Err(Error::NonFinite { at: v });
        }
        Ok(LimitFamily::cdf(self, v))
    }

    fn pdf(&self, v: f64) -> Result<f64> {
        if v.is_nan() {
            return Err(Error::NonFinite { at: v });
        }
        Ok(LimitFamily::pdf(self, v))
    }

    fn pdf_derivative(&self, v: f64) -> Result<f64> {
        if v.is_nan() {
            return Err(Error::NonFinite { at: v });
        }
        Ok(match *self {
            LimitFamily::Gumbel => LimitFamily::pdf(self, v) * ((-v).exp() - 1.0),
            LimitFamily::Frechet { shape } => {
                if v <= 0.0 {
                    0.0
                } else {
                    LimitFamily::pdf(self, v) * (shape * v.powf(-shape - 1.0) - (shape + 1.0) / v)
                }
            }
            LimitFamily::ReverseWeibull { shape } => {
                if v >= 0.0 {
                    0.0
                } else {
                    LimitFamily::pdf(self, v) * ((shape - 1.0) / v + shape * (-v).powf(shape - 1.0))
                }
            }
        })
    }

    fn quantile(&self, q: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&q) {
            return Err(Error::DomainViolation(format!(
                "quantile argument {q} outside [0, 1]"
            )));
        }
        Ok(match *self {
            LimitFamily::Gumbel => -(-(q.ln())).ln(),
            LimitFamily::Frechet { shape } => {
                if q == 0.0 {
                    0.0
                } else {
                    (-(q.ln())).powf(-1.0 / shape)
                }
            }
            LimitFamily::ReverseWeibull { shape } => -(-(q.ln())).powf(1.0 / shape),
        })
    }

    fn support_upper(&self) -> f64 {
        match self {
            LimitFamily::ReverseWeibull { .. } => 0.0,
            _ => f64::INFINITY,
        }
    }

    fn survival(&self, v: f64) -> Result<f64> {
        if v.is_nan() {
            return Err(Error::NonFinite { at: v });
        }
        Ok(LimitFamily::survival(self, v))
    }
}

/// Domain-of-attraction classification through the tail behavior of the
/// virtual-valuation derivative.
///
/// Evaluates `γ_j = ϑ'(G^{-1}(1 - 10^{-j}))` for `j = 3..8`. For every
/// built-in family `γ_j = γ + c/j + O(10^{-j})`, so the two-point
/// extrapolants `e_j = j γ_j - (j-1) γ_{j-1}` (exact for a `c/j`
/// correction) converge immediately; acceptance requires
/// `|e_8 - e_7| < 1e-3`. The tail index is `e_8`: zero (within 0.02)
/// gives Gumbel, positive gives Fréchet(1/e_8); a finite upper endpoint
/// gives ReverseWeibull(-1/e_8) directly.
pub fn classify_domain(g: Marginal) -> Result<LimitFamily> {
    g.validate()?;
    let mut gammas = Vec::with_capacity(6);
    for j in 3..=8 {
        let q = 1.0 - 10f64.powi(-j);
        let v = g.quantile(q)?;
        gammas.push((j as f64, g.virtual_valuation_derivative(v)?));
    }
    let extrapolant = |i: usize| {
        let (j1, g1) = gammas[i - 1];
        let (j2, g2) = gammas[i];
        j2 * g2 - j1 * g1
    };
    let e7 = extrapolant(4);
    let e8 = extrapolant(5);
    if (e8 - e7).abs() >= 1e-3 {
        return Err(Error::DomainViolation(format!(
            "no classification: tail index did not converge (e7 = {e7}, e8 = {e8})"
        )));
    }
    if g.support_upper().is_finite() {
        if e8 < 0.0 {
            return Ok(LimitFamily::ReverseWeibull { shape: -1.0 / e8 });
        }
        return Err(Error::DomainViolation(format!(
            "no classification: bounded support with non-negative tail index {e8}"
        )));
    }
    // Gumbel threshold 0.02: every built-in Fréchet-domain family has a
    // tail index of at least 1/8, far above it; Gumbel-domain indices
    // extrapolate below 1e-3.
    if e8.abs() < 0.02 {
        Ok(LimitFamily::Gumbel)
    } else if e8 > 0.0 {
        Ok(LimitFamily::Frechet { shape: 1.0 / e8 })
    } else {
        Err(Error::DomainViolation(format!(
            "no classification: negative tail index {e8} with unbounded support"
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::reduced;
    use crate::numerics::upper_incomplete_gamma;

    fn assert_close(actual: f64, expected: f64, tol: f64) {
        assert!(
            (actual - expected).abs() <= tol,
            "expected {expected}, got {actual}"
        );
    }

    #[test]
    fn exponential_gumbel_constants() {
        for k in [2u32, 10, 1000] {
            let c = gumbel_constants(Marginal::Exponential { rate: 1.0 }, k).unwrap();
            assert_close(c.a_k, 1.0, 1e-8);
            assert_close(c.b_k, f64::from(k).ln(), 1e-12);
        }
    }

    #[test]
    fn weibull_gumbel_constants_match_closed_form() {
        // b_K = (ln K)^{1/α}; a_K = (K/α) Γ(1/α, ln K), where Γ with
        // argument above 1 comes from Γ(s+1, x) = s Γ(s, x) + x^s e^{-x}.
        let gamma_above_one = |s_plus_1: f64, x: f64| {
            let s = s_plus_1 - 1.0;
            if s == 0.0 {
                (-x).exp()
            } else {
                s * upper_incomplete_gamma(s, x).unwrap() + x.powf(s) * (-x).exp()
            }
        };
        for (alpha, k, a_expect, b_expect) in [
            (0.9, 256u32, 1.367_664_219_998_24, 6.707_685_935_313_96),
            (0.5, 16, 7.545_177_444_479_56, 7.687_248_222_691_22),
        ] {
            let c = gumbel_constants(Marginal::Weibull { shape: alpha }, k).unwrap();
            assert_close(c.b_k, (f64::from(k).ln()).powf(1.0 / alpha), 1e-10);
            assert_close(c.b_k, b_expect, 1e-10);
            let closed = f64::from(k) / alpha * gamma_above_one(1.0 / alpha, f64::from(k).ln());
            assert_close(c.a_k, closed, 1e-6);
            assert_close(c.a_k, a_expect, 1e-6);
        }
    }

    #[test]
    fn gumbel_constants_reject_heavy_tails() {
        assert!(matches!(
            gumbel_constants(Marginal::ShiftedPareto { shape: 1.0 }, 4),
            Err(Error::DivergentMoment(_))
        ));
    }

    #[test]
    fn frechet_constants_examples() {
        let c = frechet_constants(Marginal::ShiftedPareto { shape: 2.0 }, 4).unwrap();
        assert_close(c.a_k, 1.0, 1e-12);
        assert_eq!(c.b_k, 0.0);
        for k in [2u32, 5, 50] {
            let c = frechet_constants(Marginal::Frechet { shape: 3.0 }, k).unwrap();
            let expect = (-(1.0 - 1.0 / f64::from(k)).ln()).powf(-1.0 / 3.0);
            assert_close(c.a_k, expect, 1e-12);
            assert_eq!(c.b_k, 0.0);
        }
    }

    #[test]
    fn normalized_cdf_conventions_and_limit() {
        let g = Marginal::Exponential { rate: 1.0 };
        let red = reduced(g, 1000).unwrap();
        let c = gumbel_constants(g, 1000).unwrap();
        // Below-support convention.
        assert_eq!(normalized_cdf(&red, &c, -1e9).unwrap(), 0.0);
        assert_eq!(normalized_pdf(&red, &c, -1e9).unwrap(), 0.0);
        // (1 - 1/K)^K → e^{-1} at w = 0.
        assert_close(
            normalized_cdf(&red, &c, 0.0).unwrap(),
            (-1.0f64).exp(),
            1e-3,
        );
    }

    #[test]
    fn frechet_limit_plug_in() {
        let f2 = LimitFamily::Frechet { shape: 2.0 };
        assert_close(f2.cdf(1.0), (-1.0f64).exp(), 1e-15);
        assert_eq!(f2.cdf(-1.0), 0.0);
        assert_eq!(f2.pdf(0.0), 0.0);
    }

    #[test]
    fn gumbel_limit_hazard_nondecreasing() {
        let fam = LimitFamily::Gumbel;
        let mut prev = f64::NEG_INFINITY;
        for i in 0..500 {
            let w = -5.0 + 15.0 * i as f64 / 499.0;
            let h = fam.hazard(w);
            assert!(h >= prev - 1e-12, "hazard decreased at w = {w}");
            prev = h;
        }
    }

    #[test]
    fn frechet_limit_hazard_rises_then_falls() {
        let fam = LimitFamily::Frechet { shape: 3.0 };
        let grid: Vec<f64> = (1..400).map(|i| 0.02 + i as f64 * 0.02).collect();
        let mut signs = Vec::new();
        for pair in grid.windows(2) {
            let d = fam.hazard(pair[1]) - fam.hazard(pair[0]);
            let s = d.signum();
            if signs.last() != Some(&s) {
                signs.push(s);
            }
        }
        assert_eq!(signs, vec![1.0, -1.0], "expected one interior peak");
    }

    #[test]
    fn reverse_weibull_limit_shapes() {
        let fam = LimitFamily::ReverseWeibull { shape: 1.0 };
        assert_eq!(fam.cdf(0.0), 1.0);
        assert_eq!(fam.cdf(1.0), 1.0);
        assert_close(fam.cdf(-1.0), (-1.0f64).exp(), 1e-15);
        assert_eq!(fam.pdf(0.5), 0.0);
    }

    #[test]
    fn classification_matches_known_domains() {
        use LimitFamily::*;
        assert_eq!(
            classify_domain(Marginal::Exponential { rate: 1.0 }).unwrap(),
            Gumbel
        );
        assert_eq!(
            classify_domain(Marginal::Weibull { shape: 0.9 }).unwrap(),
            Gumbel
        );
        assert_eq!(
            classify_domain(Marginal::Weibull { shape: 0.5 }).unwrap(),
            Gumbel
        );
        assert_eq!(
            classify_domain(Marginal::Weibull { shape: 1.2 }).unwrap(),
            Gumbel
        );
        assert_eq!(classify_domain(Marginal::Gumbel).unwrap(), Gumbel);
        match classify_domain(Marginal::ShiftedPareto { shape: 2.0 }).unwrap() {
            Frechet { shape } => assert_close(shape, 2.0, 1e-6),
            other => panic!("expected Frechet(2), got {other:?}"),
        }
        match classify_domain(Marginal::Frechet { shape: 3.0 }).unwrap() {
            Frechet { shape } => assert_close(shape, 3.0, 1e-3),
            other => panic!("expected Frechet(3), got {other:?}"),
        }
        match classify_domain(Marginal::Uniform { upper: 1.0 }).unwrap() {
            ReverseWeibull { shape } => assert_close(shape, 1.0, 1e-6),
            other => panic!("expected ReverseWeibull(1), got {other:?}"),
        }
    }

    #[test]
    fn convergence_in_distribution_is_monotone_in_k() {
        // sup_w |Ĝ_K(w) - limit(w)| decreasing along K = 4, 16, 64, 256.
        let grid: Vec<f64> = (0..121).map(|i| -2.0 + 6.0 * i as f64 / 120.0).collect();
        let cases: [(Marginal, LimitFamily, bool); 2] = [
            (
                Marginal::Exponential { rate: 1.0 },
                LimitFamily::Gumbel,
                true,
            ),
            (
                Marginal::ShiftedPareto { shape: 2.0 },
                LimitFamily::Frechet { shape: 2.0 },
                false,
            ),
        ];
        for (g, fam, gumbel_norm) in cases {
            let mut prev = f64::INFINITY;
            for k in [4u32, 16, 64, 256] {
                let red = reduced(g, k).unwrap();
                let c = if gumbel_norm {
                    gumbel_constants(g, k).unwrap()
                } else {
                    frechet_constants(g, k).unwrap()
                };
                let sup = grid
                    .iter()
                    .map(|&w| (normalized_cdf(&red, &c, w).unwrap() - fam.cdf(w)).abs())
                    .fold(0.0f64, f64::max);
                assert!(
                    sup < prev,
                    "{g} K={k}: sup distance {sup} did not shrink from {prev}"
                );
                prev = sup;
            }
        }
    }

    #[test]
    fn weibull09_k256_normalized_hazard_derivative_positive() {
        // For fixed K the deep tail inherits the marginal's decreasing
        // hazard (true sign change near w = 3.783), so positivity holds
        // on [-2, 3.5] and the positive region expands with K.
        let g = Marginal::Weibull { shape: 0.9 };
        let red = reduced(g, 256).unwrap();
        let c = gumbel_constants(g, 256).unwrap();
        for i in 0..200 {
            let w = -2.0 + 5.5 * i as f64 / 199.0;
            let d = normalized_hazard_derivative(&red, &c, w).unwrap();
            assert!(d > 0.0, "hazard derivative not positive at w = {w}: {d}");
        }
    }

    #[test]
    fn weibull09_increasing_hazard_region_expands_with_k() {
        // The v-location where the reduced hazard derivative turns
        // negative grows with K.
        let g = Marginal::Weibull { shape: 0.9 };
        let expected = [
            (2u32, 2.848_502_998),
            (4, 4.703_733_121),
            (16, 7.343_227_675),
            (64, 9.650_375_764),
            (256, 11.882_167_183),
        ];
        let mut prev = 0.0;
        for (k, loc) in expected {
            let red = reduced(g, k).unwrap();
            let root = crate::numerics::find_root(
                |v| red.hazard_rate_derivative(v).unwrap(),
                crate::numerics::Bracket {
                    lo: loc - 1.0,
                    hi: loc + 1.0,
                },
                1e-10,
            )
            .unwrap();
            assert_close(root, loc, 1e-3);
            assert!(root > prev, "K={k}: region did not expand");
            prev = root;
        }
    }

    #[test]
    fn limit_families_satisfy_distribution_interface() {
        // quantile∘cdf roundtrip and pdf-derivative finite differences.
        let fams = [
            LimitFamily::Gumbel,
            LimitFamily::Frechet { shape: 2.0 },
            LimitFamily::ReverseWeibull { shape: 1.5 },
        ];
        for fam in fams {
            for q in [0.05, 0.3, 0.7, 0.95] {
                let v = Dist::quantile(&fam, q).unwrap();
                assert_close(Dist::cdf(&fam, v).unwrap(), q, 1e-12);
                let h = 1e-6;
                let fd = (Dist::pdf(&fam, v + h).unwrap() - Dist::pdf(&fam, v - h).unwrap())
                    / (2.0 * h);
                let an = Dist::pdf_derivative(&fam, v).unwrap();
                assert!(
                    (fd - an).abs() <= 1e-5 * (1.0 + an.abs()),
                    "{fam:?} at v={v}: fd {fd} vs analytic {an}"
                );
            }
        }
    }

    #[test]
    fn gumbel_a_k_positive_and_finite_up_to_1e6() {
        for g in [
            Marginal::Exponential { rate: 1.0 },
            Marginal::Weibull { shape: 0.9 },
            Marginal::Weibull { shape: 0.5 },
        ] {
            for k in [10u32, 1_000, 1_000_000] {
                let c = gumbel_constants(g, k).unwrap();
                assert!(c.a_k > 0.0 && c.a_k.is_finite(), "{g} K={k}: a_K = {}", c.a_k);
            }
        }
    }
}
