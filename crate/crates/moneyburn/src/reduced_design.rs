//! Myerson ironing and efficient-mechanism construction for the reduced
//! one-dimensional screening problem: ironed virtual values, the
//! increasing-then-decreasing-hazard shortcut, Fréchet threshold closed
//! forms, allocation/payment rules, and residual surplus.

use crate::distributions::Dist;
use crate::numerics::{
    find_root, integrate, lower_convex_hull, upper_incomplete_gamma, Bracket,
    DEFAULT_INTEGRAL_TOL,
};
use crate::{Error, Result};
use serde::Serialize;

/// Default quantile-grid resolution for ironing.
pub const DEFAULT_IRON_GRID: usize = 10_000;

/// Quadrature tolerance for the per-cell integrals building `H`.
const CELL_TOL: f64 = 1e-12;

/// Two hull slopes closer than this (relatively) are merged into one
/// flat segment: grid noise below quadrature accuracy cannot certify
/// strict convexity.
const SLOPE_MERGE_TOL: f64 = 1e-9;

/// Adjacent allocation levels closer than this are one segment.
const X_MERGE_TOL: f64 = 1e-9;

/// Ironed virtual value on a uniform quantile grid.
///
/// `H(q) = ∫_0^{v(q)} (1 - G(t)) dt` is the integral of the
/// quantile-space virtual value (`dH/dq = ϑ(v(q))`, exact even where
/// `ϑ(v(0)) = ∞`); the ironed value is the derivative of the lower
/// convex hull of `H`.
#[derive(Debug, Clone, Serialize)]
pub struct IronedVirtualValue {
    /// Uniform quantile grid `q_i = i/n`; the last point is `1 - 1/n`.
    pub qs: Vec<f64>,
    /// Matching values `v_i = G^{-1}(q_i)`.
    pub vs: Vec<f64>,
    /// Ironed virtual value on each cell `[q_i, q_{i+1})` (hull slope);
    /// nondecreasing, length `n - 1`.
    pub values: Vec<f64>,
    /// Grid-index ranges `(i, j)` of hull segments spanning more than
    /// one cell (`q ∈ [qs[i], qs[j]]`), where the hull lies strictly
    /// below `H` and pooling is required.
    pub flats: Vec<(usize, usize)>,
}

impl IronedVirtualValue {
    /// Ironed virtual value at quantile `q` (right-continuous lookup).
    pub fn value_at(&self, q: f64) -> f64 {
        let n = self.qs.len();
        let cell = ((q * n as f64).floor() as usize).min(n - 2);
        self.values[cell]
    }
}

/// Irons the virtual valuation of `red` on an `n_grid`-point uniform
/// quantile grid capped at `q_max = 1 - 1/n_grid`.
pub fn iron<D: Dist>(red: &D, n_grid: usize) -> Result<IronedVirtualValue> {
    if n_grid < 100 {
        return Err(Error::DomainViolation(format!(
            "ironing grid needs at least 100 points, got {n_grid}"
        )));
    }
    let n = n_grid;
    let mut qs = Vec::with_capacity(n);
    let mut vs = Vec::with_capacity(n);
    for i in 0..n {
        let q = i as f64 / n as f64;
        let v = red.quantile(q)?;
        if !v.is_finite() {
            return Err(Error::DomainViolation(
                "ironing requires a finite lower support endpoint".into(),
            ));
        }
        qs.push(q);
        vs.push(v);
    }
    let mut hs = vec![0.0; n];
    for i in 0..n - 1 {
        let cell = integrate(
            |t| red.survival(t).unwrap_or(f64::NAN),
            vs[i],
            vs[i + 1],
            CELL_TOL,
        )?;
        hs[i + 1] = hs[i] + cell;
    }
    let points: Vec<(f64, f64)> = qs.iter().copied().zip(hs.iter().copied()).collect();
    let hull = lower_convex_hull(&points)?;

    // Hull vertices back to grid indices (q values are exact copies).
    let mut idx: Vec<usize> = hull
        .iter()
        .map(|&(q, _)| (q * n as f64).round() as usize)
        .collect();
    // Merge segments whose slopes are indistinguishable at quadrature
    // accuracy; recompute the merged slope from the endpoints.
    let slope = |a: usize, b: usize| (hs[b] - hs[a]) / (qs[b] - qs[a]);
    loop {
        let mut merged = false;
        let mut out = Vec::with_capacity(idx.len());
        out.push(idx[0]);
        let mut k = 1;
        while k < idx.len() {
            let a = *out.last().unwrap();
            let b = idx[k];
            if k + 1 < idx.len() {
                let c = idx[k + 1];
                let s1 = slope(a, b);
                let s2 = slope(b, c);
                if (s2 - s1).abs() <= SLOPE_MERGE_TOL * (1.0 + s1.abs()) {
                    out.push(c);
                    k += 2;
                    merged = true;
                    continue;
                }
            }
            out.push(b);
            k += 1;
        }
        idx = out;
        if !merged {
            break;
        }
    }

    let mut values = vec![0.0; n - 1];
    let mut flats = Vec::new();
    for pair in idx.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let s = slope(a, b);
        for cell in values.iter_mut().take(b).skip(a) {
            *cell = s;
        }
        if b - a > 1 {
            flats.push((a, b));
        }
    }
    Ok(IronedVirtualValue {
        qs,
        vs,
        values,
        flats,
    })
}

/// One constant-allocation piece of a reduced mechanism.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MechanismSegment {
    pub v_lo: f64,
    pub v_hi: f64,
    /// Allocation probability on `[v_lo, v_hi)`.
    pub x: f64,
    /// Payment charged on the segment (constant; envelope formula).
    pub p: f64,
}

/// Monotone step mechanism for the reduced problem.
#[derive(Debug, Clone, Serialize)]
pub struct ReducedMechanism {
    pub segments: Vec<MechanismSegment>,
    pub m_bar: f64,
}

impl ReducedMechanism {
    /// Builds a mechanism from contiguous `(v_lo, v_hi, x)` pieces
    /// starting at 0, filling payments by the envelope formula.
    pub fn from_allocation(pieces: &[(f64, f64, f64)], m_bar: f64) -> Result<Self> {
        if pieces.is_empty() {
            return Err(Error::DomainViolation("mechanism needs a segment".into()));
        }
        if !(m_bar > 0.0 && m_bar < 1.0) {
            return Err(Error::DomainViolation(format!(
                "supply must lie in (0, 1), got {m_bar}"
            )));
        }
        if pieces[0].0 != 0.0 {
            return Err(Error::DomainViolation(
                "segments must start at the lower support endpoint 0".into(),
            ));
        }
        let mut merged: Vec<(f64, f64, f64)> = Vec::with_capacity(pieces.len());
        let mut prev_x = -1.0;
        for &(lo, hi, x) in pieces {
            if !(hi > lo) {
                return Err(Error::DomainViolation(format!(
                    "empty or inverted segment [{lo}, {hi})"
                )));
            }
            if let Some(last) = merged.last() {
                if lo != last.1 {
                    return Err(Error::DomainViolation(
                        "segments must be contiguous".into(),
                    ));
                }
            }
            if !(-1e-12..=1.0 + 1e-12).contains(&x) || x < prev_x - 1e-12 {
                return Err(Error::DomainViolation(
                    "allocation must be nondecreasing within [0, 1]".into(),
                ));
            }
            let x = x.clamp(0.0, 1.0);
            match merged.last_mut() {
                Some(last) if (x - last.2).abs() <= X_MERGE_TOL => last.1 = hi,
                _ => merged.push((lo, hi, x)),
            }
            prev_x = x;
        }
        let mut mech = ReducedMechanism {
            segments: merged
                .into_iter()
                .map(|(v_lo, v_hi, x)| MechanismSegment {
                    v_lo,
                    v_hi,
                    x,
                    p: 0.0,
                })
                .collect(),
            m_bar,
        };
        let pays = payments_from_allocation(&mech);
        for (seg, p) in mech.segments.iter_mut().zip(pays) {
            seg.p = p;
        }
        Ok(mech)
    }

    /// Allocation at value `v`.
    pub fn allocation(&self, v: f64) -> f64 {
        if v < 0.0 {
            return 0.0;
        }
        for seg in &self.segments {
            if v < seg.v_hi {
                return seg.x;
            }
        }
        self.segments.last().map_or(0.0, |s| s.x)
    }

    /// Payment at value `v`.
    pub fn payment(&self, v: f64) -> f64 {
        if v < 0.0 {
            return 0.0;
        }
        for seg in &self.segments {
            if v < seg.v_hi {
                return seg.p;
            }
        }
        self.segments.last().map_or(0.0, |s| s.p)
    }
}

/// Strategy-proof payments for a monotone step allocation:
/// `p(v) = v x(v) - ∫_0^v x(s) ds` with `p(0) = 0` collapses to the
/// jump sum `Σ_{j: t_j ≤ v} t_j (x_j - x_{j-1})`.
pub fn payments_from_allocation(mech: &ReducedMechanism) -> Vec<f64> {
    let mut out = Vec::with_capacity(mech.segments.len());
    let mut acc = 0.0;
    let mut prev_x = 0.0;
    for seg in &mech.segments {
        acc += seg.v_lo * (seg.x - prev_x);
        prev_x = seg.x;
        out.push(acc);
    }
    out
}

/// Hazard-rate derivative from the generic interface:
/// `r' = (g'·(1-G) + g²)/(1-G)²`.
pub fn hazard_derivative<D: Dist>(d: &D, v: f64) -> Result<f64> {
    let s = d.survival(v)?;
    if s < 1e-14 {
        return Err(Error::DomainViolation(format!(
            "hazard derivative undefined at saturated cdf (v = {v})"
        )));
    }
    let g = d.pdf(v)?;
    let gp = d.pdf_derivative(v)?;
    Ok((gp * s + g * g) / (s * s))
}

/// Threshold `w**` for increasing-then-decreasing-hazard distributions:
/// the solution of `∫_0^w ϑ g dt / G(w) = ϑ(w)`. Verifies the IDHR
/// shape numerically first and errors if the hazard derivative does not
/// change sign from + to − exactly once.
pub fn idhr_threshold<D: Dist>(red: &D) -> Result<f64> {
    const GRID: usize = 500;
    let q_cap = 1.0 - 1e-4;
    let mut last_sign = 0i8;
    let mut down = 0u32;
    let mut up = 0u32;
    let mut peak = None;
    let mut prev_v = 0.0;
    for j in 0..GRID {
        let q = (j as f64 + 0.5) / GRID as f64 * q_cap;
        let v = red.quantile(q)?;
        let d = hazard_derivative(red, v)?;
        let s = if d > 0.0 {
            1
        } else if d < 0.0 {
            -1
        } else {
            0
        };
        if s != 0 {
            if last_sign == 1 && s == -1 {
                down += 1;
                peak = Some(prev_v);
            }
            if last_sign == -1 && s == 1 {
                up += 1;
            }
            last_sign = s;
            prev_v = v;
        }
    }
    if down != 1 || up != 0 {
        return Err(Error::DomainViolation(
            "hazard rate is not increasing-then-decreasing; use iron() for the general \
             construction"
            .into(),
        ));
    }
    let peak = peak.expect("sign change recorded");
    // ϑ g = 1 - G turns the averaged-virtual-value condition into
    // φ(w) = ∫_0^w (1 - G) dt - G(w) (1 - G(w)) / g(w), positive below
    // w** and negative above.
    let phi = |w: f64| -> f64 {
        let tail = integrate(
            |t| red.survival(t).unwrap_or(f64::NAN),
            0.0,
            w,
            DEFAULT_INTEGRAL_TOL,
        )
        .unwrap_or(f64::NAN);
        let (c, s, g) = match (red.cdf(w), red.survival(w), red.pdf(w)) {
            (Ok(c), Ok(s), Ok(g)) => (c, s, g),
            _ => return f64::NAN,
        };
        tail - c * s / g
    };
    if !(phi(peak) > 0.0) {
        return Err(Error::NoSignChange {
            f_lo: phi(peak),
            f_hi: f64::NAN,
        });
    }
    let mut hi = (peak * 2.0).max(peak + 1.0);
    let mut tries = 0;
    while phi(hi) > 0.0 {
        hi = hi * 2.0;
        tries += 1;
        if tries > 60 {
            return Err(Error::NoSignChange {
                f_lo: phi(peak),
                f_hi: phi(hi),
            });
        }
    }
    find_root(phi, Bracket { lo: peak, hi }, 1e-10)
}

/// Hazard-peak location `w*` of the Fréchet limit `Φ_α`: the root of
/// `w^{-α} / (1 - exp(-w^{-α})) = (α + 1)/α`.
pub fn frechet_wstar(alpha: f64) -> Result<f64> {
    if !alpha.is_finite() || alpha <= 1.0 {
        return Err(Error::DomainViolation(format!(
            "Fréchet thresholds require shape > 1, got {alpha}"
        )));
    }
    let target = (alpha + 1.0) / alpha;
    // In t = w^{-α} the left side t/(1 - e^{-t}) rises from 1 to ∞.
    let t = find_root(
        |t| t / (-(-t).exp_m1()) - target,
        Bracket {
            lo: 1e-12,
            hi: 50.0,
        },
        1e-14,
    )?;
    Ok(t.powf(-1.0 / alpha))
}

/// Ironing threshold `w**` of the Fréchet limit `Φ_α`: the root of
/// `(1 - e^{-w^{-α}}) w + Γ((α-1)/α, w^{-α}) - w^{α+1} (1 - e^{-w^{-α}})/α`.
pub fn frechet_wdstar(alpha: f64) -> Result<f64> {
    if !alpha.is_finite() || alpha <= 1.0 {
        return Err(Error::DomainViolation(format!(
            "Fréchet thresholds require shape > 1, got {alpha}"
        )));
    }
    let resid = |w: f64| {
        let t = w.powf(-alpha);
        let one_m = -(-t).exp_m1();
        let gam = upper_incomplete_gamma(1.0 - 1.0 / alpha, t).unwrap_or(f64::NAN);
        one_m * w + gam - w.powf(alpha + 1.0) * one_m / alpha
    };
    let lo = frechet_wstar(alpha)?;
    let f_lo = resid(lo);
    if !(f_lo > 0.0) {
        return Err(Error::NoSignChange { f_lo, f_hi: f_lo });
    }
    let mut hi = lo * 2.0;
    let mut tries = 0;
    while resid(hi) > 0.0 {
        hi *= 2.0;
        tries += 1;
        if tries > 60 {
            return Err(Error::NoSignChange {
                f_lo,
                f_hi: resid(hi),
            });
        }
    }
    find_root(resid, Bracket { lo, hi }, 1e-12)
}

/// Residual-surplus-maximizing mechanism: allocates greedily by ironed
/// virtual value subject to `∫ x dG = m̄` and `x ≤ 1`, pooling uniformly
/// on the flat segment containing the supply boundary.
pub fn efficient_reduced_mechanism<D: Dist>(red: &D, m_bar: f64) -> Result<ReducedMechanism> {
    if !(m_bar > 0.0 && m_bar < 1.0) {
        return Err(Error::DomainViolation(format!(
            "supply must lie in (0, 1), got {m_bar}"
        )));
    }
    let iv = iron(red, DEFAULT_IRON_GRID)?;
    let n = iv.qs.len();
    let upper = red.support_upper();
    let q_thr = 1.0 - m_bar;
    let threshold = |v_thr: f64| -> Result<ReducedMechanism> {
        ReducedMechanism::from_allocation(&[(0.0, v_thr, 0.0), (v_thr, upper, 1.0)], m_bar)
    };
    if q_thr >= iv.qs[n - 1] {
        // Entire supply fits above the grid cap; the cap region is a
        // touching region for every built-in family at this resolution.
        return threshold(red.quantile(q_thr)?);
    }
    let j = ((q_thr * n as f64).floor() as usize).min(n - 2);
    let val = iv.values[j];
    let mut a = j;
    while a > 0 && iv.values[a - 1] == val {
        a -= 1;
    }
    let mut b = j;
    while b + 1 <= n - 2 && iv.values[b + 1] == val {
        b += 1;
    }
    if a == b {
        // Single-cell hull segment: the hull touches H at both cell
        // endpoints, so the exact rule is a threshold at q_thr.
        return threshold(red.quantile(q_thr)?);
    }
    let q_a = iv.qs[a];
    let v_a = iv.vs[a];
    // A flat reaching the grid cap extends through q = 1 in the
    // continuum (the remaining hull mass above the cap is negligible
    // for every family with an eventually-monotone virtual value).
    let reaches_top = b + 1 == n - 1;
    let (b_eff, v_b) = if reaches_top {
        (1.0, upper)
    } else {
        (iv.qs[b + 1], iv.vs[b + 1])
    };
    let x_seg = ((m_bar - (1.0 - b_eff)) / (b_eff - q_a)).clamp(0.0, 1.0);
    let mut pieces = Vec::new();
    if a > 0 {
        pieces.push((0.0, v_a, 0.0));
    }
    pieces.push((v_a, v_b, x_seg));
    if !reaches_top {
        pieces.push((v_b, upper, 1.0));
    }
    ReducedMechanism::from_allocation(&pieces, m_bar)
}

/// Residual surplus through both routes: direct
/// `∫ (v x(v) - p(v)) dG(v)` and virtual `∫ x(v) (1 - G(v)) dv`.
pub fn residual_surplus_routes<D: Dist>(
    red: &D,
    mech: &ReducedMechanism,
) -> Result<(f64, f64)> {
    let mut prev_x = 0.0;
    for seg in &mech.segments {
        if !(0.0..=1.0).contains(&seg.x) || seg.x < prev_x {
            return Err(Error::DomainViolation(
                "mechanism allocation must be nondecreasing within [0, 1]".into(),
            ));
        }
        prev_x = seg.x;
    }
    let mut direct = 0.0;
    let mut virt = 0.0;
    for seg in &mech.segments {
        if seg.x == 0.0 && seg.p == 0.0 {
            continue;
        }
        let (x, p) = (seg.x, seg.p);
        direct += integrate(
            |v| (v * x - p) * red.pdf(v).unwrap_or(f64::NAN),
            seg.v_lo,
            seg.v_hi,
            DEFAULT_INTEGRAL_TOL,
        )?;
        if seg.x != 0.0 {
            virt += x * integrate(
                |v| red.survival(v).unwrap_or(f64::NAN),
                seg.v_lo,
                seg.v_hi,
                DEFAULT_INTEGRAL_TOL,
            )?;
        }
    }
    Ok((direct, virt))
}

/// Residual surplus of `mech` under `red`, with a built-in consistency
/// check: the payment-based and virtual-value routes must agree (they
/// are equal for any monotone allocation with envelope payments), so a
/// gap beyond 1e-4 signals a payment or ironing bug.
pub fn residual_surplus<D: Dist>(red: &D, mech: &ReducedMechanism) -> Result<f64> {
    let (direct, virt) = residual_surplus_routes(red, mech)?;
    if (direct - virt).abs() > 1e-4 * virt.abs().max(1.0) {
        return Err(Error::DomainViolation(format!(
            "residual-surplus routes disagree: direct {direct} vs virtual {virt}"
        )));
    }
    Ok(virt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{reduced, Marginal};
    use crate::extreme_value::{limit_hazard, LimitFamily};

    fn assert_close(actual: f64, expected: f64, tol: f64) {
        assert!(
            (actual - expected).abs() <= tol,
            "expected {expected}, got {actual}"
        );
    }

    fn no_screening<D: Dist>(red: &D, m: f64) -> ReducedMechanism {
        ReducedMechanism::from_allocation(&[(0.0, red.support_upper(), m)], m).unwrap()
    }

    fn full_screening<D: Dist>(red: &D, m: f64) -> ReducedMechanism {
        let t = red.quantile(1.0 - m).unwrap();
        ReducedMechanism::from_allocation(&[(0.0, t, 0.0), (t, red.support_upper(), 1.0)], m)
            .unwrap()
    }

    fn resource<D: Dist>(red: &D, mech: &ReducedMechanism) -> f64 {
        mech.segments
            .iter()
            .map(|s| {
                let hi = if s.v_hi.is_finite() {
                    red.cdf(s.v_hi).unwrap()
                } else {
                    1.0
                };
                s.x * (hi - red.cdf(s.v_lo).unwrap())
            })
            .sum()
    }

    #[test]
    fn ironing_constant_virtual_value_is_identity() {
        let red = reduced(Marginal::Exponential { rate: 1.0 }, 1).unwrap();
        let iv = iron(&red, 1000).unwrap();
        for &v in &iv.values {
            assert_close(v, 1.0, 1e-6);
        }
    }

    #[test]
    fn ironing_ihr_pools_fully() {
        let red = reduced(Marginal::Weibull { shape: 1.1 }, 1).unwrap();
        let iv = iron(&red, 2000).unwrap();
        assert_eq!(iv.flats.len(), 1, "flats: {:?}", iv.flats);
        let (a, b) = iv.flats[0];
        assert_eq!((a, b), (0, iv.qs.len() - 1));
        let first = iv.values[0];
        for &v in &iv.values {
            assert_eq!(v, first);
        }
    }

    #[test]
    fn ironing_frechet_limit_flat_matches_threshold() {
        let fam = LimitFamily::Frechet { shape: 2.0 };
        let iv = iron(&fam, 10_000).unwrap();
        // Pooled exactly on [0, Φ₂(w**)].
        let (a, b) = iv.flats[0];
        assert_eq!(a, 0);
        assert_close(iv.qs[b], 0.898_740_907_131_546, 1.5e-3);
        // The flat's end v agrees with the analytic threshold.
        let wd = idhr_threshold(&fam).unwrap();
        assert_close(iv.vs[b], wd, 2e-3);
        // Above the flat the ironed value equals the virtual value.
        let n = iv.qs.len() as f64;
        for q in [0.95, 0.97, 0.99] {
            let cell = (q * n) as usize;
            let q_mid = (cell as f64 + 0.5) / n;
            let theta = fam.virtual_valuation(fam.quantile(q_mid).unwrap()).unwrap();
            assert!(
                (iv.values[cell] - theta).abs() <= 1e-3 * theta,
                "q={q}: ironed {} vs virtual {theta}",
                iv.values[cell]
            );
        }
    }

    #[test]
    fn idhr_threshold_agrees_with_closed_form() {
        for (alpha, frozen) in [
            (1.5, 2.456_670_010_066_15),
            (2.0, 3.060_516_508_358_88),
            (3.0, 3.999_983_186_750_66),
        ] {
            let wd = frechet_wdstar(alpha).unwrap();
            assert_close(wd, frozen, 1e-9);
            let via_integral = idhr_threshold(&LimitFamily::Frechet { shape: alpha }).unwrap();
            assert_close(via_integral, wd, 1e-6);
        }
        // Only the top ~1.5% screen for α = 3.
        let wd3 = frechet_wdstar(3.0).unwrap();
        let served = 1.0 - LimitFamily::Frechet { shape: 3.0 }.cdf(wd3);
        assert!(served > 0.010 && served < 0.020, "served {served}");
        assert_close(served, 0.015_503_756_971_8, 1e-9);
        // Case (ii) of the IDHR proposition applies at α=2, m̄=0.6.
        let wd2 = frechet_wdstar(2.0).unwrap();
        assert!(1.0 - LimitFamily::Frechet { shape: 2.0 }.cdf(wd2) < 0.6);
    }

    #[test]
    fn idhr_threshold_rejects_monotone_hazards() {
        let constant = reduced(Marginal::Exponential { rate: 1.0 }, 1).unwrap();
        assert!(idhr_threshold(&constant).is_err());
        let ihr = reduced(Marginal::Weibull { shape: 1.2 }, 1).unwrap();
        assert!(idhr_threshold(&ihr).is_err());
    }

    #[test]
    fn frechet_wstar_values_and_hazard_peak() {
        assert_close(frechet_wstar(2.0).unwrap(), 1.069_523_325_243_14, 1e-9);
        assert_close(frechet_wstar(3.0).unwrap(), 1.181_796_170_723_06, 1e-9);
        // The limit hazard peaks at w*.
        let fam = LimitFamily::Frechet { shape: 2.0 };
        let w = frechet_wstar(2.0).unwrap();
        let d = 1e-3;
        assert!(limit_hazard(fam, w) > limit_hazard(fam, w - d));
        assert!(limit_hazard(fam, w) > limit_hazard(fam, w + d));
        assert!(frechet_wstar(1.0).is_err());
        assert!(frechet_wdstar(0.8).is_err());
    }

    #[test]
    fn frechet_threshold_curves_increase_with_shape() {
        let mut prev_star = 0.0;
        let mut prev_dstar = 0.0;
        for alpha in [1.5, 2.0, 3.0, 5.0, 8.0] {
            let fam = LimitFamily::Frechet { shape: alpha };
            let ps = fam.cdf(frechet_wstar(alpha).unwrap());
            let pd = fam.cdf(frechet_wdstar(alpha).unwrap());
            assert!(ps > prev_star && pd > prev_dstar, "alpha {alpha}");
            prev_star = ps;
            prev_dstar = pd;
        }
        // Frozen threshold-curve values at the shape-range ends.
        let f15 = LimitFamily::Frechet { shape: 1.5 };
        assert_close(f15.cdf(frechet_wstar(1.5).unwrap()), 0.324_243_266_418_988, 1e-9);
        assert_close(f15.cdf(frechet_wdstar(1.5).unwrap()), 0.771_279_332_000_974, 1e-9);
        let f8 = LimitFamily::Frechet { shape: 8.0 };
        assert_close(f8.cdf(frechet_wstar(8.0).unwrap()), 0.786_329_845_539_71, 1e-9);
        assert_close(f8.cdf(frechet_wdstar(8.0).unwrap()), 0.999_999_970_01, 1e-9);
    }

    #[test]
    fn efficient_ihr_is_no_screening() {
        let red = reduced(Marginal::Weibull { shape: 1.2 }, 1).unwrap();
        let mech = efficient_reduced_mechanism(&red, 0.5).unwrap();
        assert_eq!(mech.segments.len(), 1);
        assert_close(mech.segments[0].x, 0.5, 1e-9);
        assert_eq!(mech.segments[0].p, 0.0);
        assert_close(resource(&red, &mech), 0.5, 1e-6);
    }

    #[test]
    fn efficient_dhr_is_full_screening() {
        let red = reduced(Marginal::Weibull { shape: 0.5 }, 1).unwrap();
        let mech = efficient_reduced_mechanism(&red, 0.25).unwrap();
        assert_eq!(mech.segments.len(), 2);
        let v_thr = 4.0f64.ln().powi(2);
        assert_close(mech.segments[0].x, 0.0, 0.0);
        assert_close(mech.segments[1].x, 1.0, 0.0);
        assert_close(mech.segments[1].v_lo, v_thr, 1e-9);
        assert_close(mech.segments[1].p, v_thr, 1e-9);
        assert_close(resource(&red, &mech), 0.25, 1e-6);
        let rs = residual_surplus(&red, &mech).unwrap();
        assert_close(rs, 1.193_147_180_559_95, 1e-6);
    }

    #[test]
    fn efficient_frechet_two_tier() {
        let fam = LimitFamily::Frechet { shape: 3.0 };
        let mech = efficient_reduced_mechanism(&fam, 0.5).unwrap();
        assert_eq!(mech.segments.len(), 2, "{:?}", mech.segments);
        let lo = mech.segments[0];
        let hi = mech.segments[1];
        assert_eq!(lo.v_lo, 0.0);
        assert_close(lo.x, 0.492_126_045_639, 1.5e-3);
        assert_close(hi.v_lo, 3.999_983_186_750_66, 2e-2);
        assert_close(hi.x, 1.0, 0.0);
        assert_eq!(lo.p, 0.0);
        assert_close(hi.p, (1.0 - lo.x) * hi.v_lo, 1e-12);
        assert_close(resource(&fam, &mech), 0.5, 1e-5);
        // Both residual-surplus routes agree tightly.
        let (d, v) = residual_surplus_routes(&fam, &mech).unwrap();
        assert!((d - v).abs() <= 1e-6 * v.abs().max(1.0), "{d} vs {v}");
    }

    #[test]
    fn payment_examples() {
        let red = reduced(Marginal::Exponential { rate: 1.0 }, 1).unwrap();
        let ns = no_screening(&red, 0.3);
        assert!(ns.segments.iter().all(|s| s.p == 0.0));
        let fs = full_screening(&red, 0.5);
        let q = 2.0f64.ln();
        assert_eq!(fs.payment(0.1), 0.0);
        assert_close(fs.payment(1.0), q, 1e-12);
        assert_close(fs.payment(10.0), q, 1e-12);
    }

    #[test]
    fn exponential_screening_neutrality() {
        // Constant virtual valuation: all mechanisms with the same
        // supply have the same residual surplus.
        let red = reduced(Marginal::Exponential { rate: 1.0 }, 1).unwrap();
        let rs_ns = residual_surplus(&red, &no_screening(&red, 0.5)).unwrap();
        let rs_fs = residual_surplus(&red, &full_screening(&red, 0.5)).unwrap();
        assert_close(rs_ns, 0.5, 1e-6);
        assert_close(rs_fs, 0.5, 1e-6);
    }

    #[test]
    fn frechet_low_supply_prefers_screening() {
        let fam = LimitFamily::Frechet { shape: 2.0 };
        let rs_fs = residual_surplus(&fam, &full_screening(&fam, 0.1)).unwrap();
        let rs_ns = residual_surplus(&fam, &no_screening(&fam, 0.1)).unwrap();
        assert!(
            rs_fs > rs_ns,
            "full screening {rs_fs} should beat no screening {rs_ns}"
        );
    }

    #[test]
    fn efficient_dominates_benchmarks() {
        let cases: [(Marginal, u32, f64); 5] = [
            (Marginal::Exponential { rate: 1.0 }, 2, 0.5),
            (Marginal::ShiftedPareto { shape: 2.0 }, 4, 0.6),
            (Marginal::Weibull { shape: 0.5 }, 1, 0.25),
            (Marginal::Weibull { shape: 0.9 }, 16, 0.5),
            (Marginal::Uniform { upper: 1.0 }, 4, 0.5),
        ];
        for (g, k, m) in cases {
            let red = reduced(g, k).unwrap();
            let eff = residual_surplus(&red, &efficient_reduced_mechanism(&red, m).unwrap())
                .unwrap();
            let ns = residual_surplus(&red, &no_screening(&red, m)).unwrap();
            let fs = residual_surplus(&red, &full_screening(&red, m)).unwrap();
            assert!(
                eff >= ns - 1e-6 && eff >= fs - 1e-6,
                "{g} K={k} m̄={m}: eff {eff}, ns {ns}, fs {fs}"
            );
        }
    }

    #[test]
    fn bounded_support_limits() {
        // Uniform(1): no-screening surplus rises toward m̄·v̄ while
        // full-screening surplus collapses to 0 as K grows.
        let mut prev_ns = 0.0;
        let mut prev_fs = f64::INFINITY;
        for k in [1u32, 4, 16, 64] {
            let red = reduced(Marginal::Uniform { upper: 1.0 }, k).unwrap();
            let ns = residual_surplus(&red, &no_screening(&red, 0.5)).unwrap();
            let fs = residual_surplus(&red, &full_screening(&red, 0.5)).unwrap();
            assert!(ns > prev_ns && fs < prev_fs, "K={k}: ns {ns}, fs {fs}");
            prev_ns = ns;
            prev_fs = fs;
        }
        assert_close(prev_ns, 0.492_307_692_307_692, 1e-6);
        assert_close(prev_fs, 0.002_996_817_676_747_4, 1e-6);
    }

    #[test]
    fn gumbel_domain_pooling_mass() {
        let red = reduced(Marginal::Weibull { shape: 0.9 }, 256).unwrap();
        let mech = efficient_reduced_mechanism(&red, 0.5).unwrap();
        let biggest = mech
            .segments
            .iter()
            .map(|s| {
                let hi = if s.v_hi.is_finite() {
                    red.cdf(s.v_hi).unwrap()
                } else {
                    1.0
                };
                hi - red.cdf(s.v_lo).unwrap()
            })
            .fold(0.0f64, f64::max);
        assert!(biggest >= 0.95, "largest segment mass {biggest}");
        assert_close(resource(&red, &mech), 0.5, 1e-6);
    }

    #[test]
    fn frechet_domain_pooling_mass() {
        let red = reduced(Marginal::ShiftedPareto { shape: 2.0 }, 256).unwrap();
        let mech = efficient_reduced_mechanism(&red, 0.6).unwrap();
        // The pooled (fractional-x) segment's mass is close to Φ₂(w**).
        let pooled = mech
            .segments
            .iter()
            .find(|s| s.x > 0.0 && s.x < 1.0)
            .expect("pooled segment");
        let mass = red.cdf(pooled.v_hi).unwrap() - red.cdf(pooled.v_lo).unwrap();
        assert_close(mass, 0.898_740_907_131_546, 0.05);
        assert_close(resource(&red, &mech), 0.6, 1e-6);
    }

    #[test]
    fn residual_surplus_rejects_bad_mechanisms() {
        let red = reduced(Marginal::Exponential { rate: 1.0 }, 1).unwrap();
        let mut mech = full_screening(&red, 0.5);
        mech.segments[0].x = 0.9; // non-monotone after the top segment's 1.0 → fine; make it invalid:
        mech.segments[1].x = 0.2;
        assert!(residual_surplus(&red, &mech).is_err());
    }
}
