//! Shared numerical kernels: adaptive Gauss–Kronrod quadrature, Brent root
//! finding, the upper incomplete gamma function on (0,1], and lower convex
//! hulls of planar point lists.
//!
//! Every routine is a pure function over immutable inputs and is safe to
//! call concurrently.

use crate::{Error, Result};
use std::collections::BinaryHeap;

/// Root-finding bracket `[lo, hi]`.
///
/// Invariant: `lo < hi` and, when used with [`find_root`], the target
/// function changes sign between the endpoints.
#[derive(Debug, Clone, Copy)]
pub struct Bracket {
    pub lo: f64,
    pub hi: f64,
}

/// A point `(q, h)` on a cumulative curve; `q` is a quantile in `[0, 1]`.
pub type Point = (f64, f64);

/// Default absolute tolerance for integrals.
pub const DEFAULT_INTEGRAL_TOL: f64 = 1e-9;
/// Default tolerance for root finding.
pub const DEFAULT_ROOT_TOL: f64 = 1e-10;

const MAX_SEGMENTS: usize = 4096;
const MAX_BRENT_ITERS: usize = 200;

// 15-point Kronrod rule with embedded 7-point Gauss rule.
// Abscissae (positive half; odd indices plus the center are Gauss nodes).
const XGK: [f64; 8] = [
    0.991455371120813,
    0.949107912342759,
    0.864864423359769,
    0.741531185599394,
    0.586087235467691,
    0.405845151377397,
    0.207784955007898,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529,
    0.063092092629979,
    0.104790010322250,
    0.140653259715525,
    0.169004726639267,
    0.190350578064785,
    0.204432940075298,
    0.209482141084728,
];
const WG: [f64; 4] = [
    0.129484966168870,
    0.279705391489277,
    0.381830050505119,
    0.417959183673469,
];

fn gauss_kronrod_15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Result<(f64, f64)> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    if !fc.is_finite() {
        return Err(Error::NonFinite { at: c });
    }
    let mut res_k = WGK[7] * fc;
    let mut res_g = WG[3] * fc;
    for (j, (&x, &wk)) in XGK.iter().zip(WGK.iter()).enumerate().take(7) {
        let dx = h * x;
        let f1 = f(c - dx);
        if !f1.is_finite() {
            return Err(Error::NonFinite { at: c - dx });
        }
        let f2 = f(c + dx);
        if !f2.is_finite() {
            return Err(Error::NonFinite { at: c + dx });
        }
        res_k += wk * (f1 + f2);
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    Ok((res_k * h, ((res_k - res_g) * h).abs()))
}

#[derive(Debug)]
struct Segment {
    err: f64,
    a: f64,
    b: f64,
    val: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.err.total_cmp(&other.err)
    }
}

fn adaptive<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    let (val, err) = gauss_kronrod_15(f, lo, hi)?;
    let mut heap = BinaryHeap::new();
    heap.push(Segment {
        err,
        a: lo,
        b: hi,
        val,
    });
    let mut total_err = err;
    let mut total_val = val;
    while total_err > tol {
        if heap.len() >= MAX_SEGMENTS {
            return Err(Error::NoConvergence { partial: total_val });
        }
        let worst = heap.pop().expect("heap cannot be empty while err > 0");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Interval too narrow to split further: accept its estimate
            // (its value is already part of the running total).
            total_err -= worst.err;
            heap.push(Segment { err: 0.0, ..worst });
            continue;
        }
        let (v1, e1) = gauss_kronrod_15(f, worst.a, mid)?;
        let (v2, e2) = gauss_kronrod_15(f, mid, worst.b)?;
        total_val += v1 + v2 - worst.val;
        total_err += e1 + e2 - worst.err;
        heap.push(Segment {
            err: e1,
            a: worst.a,
            b: mid,
            val: v1,
        });
        heap.push(Segment {
            err: e2,
            a: mid,
            b: worst.b,
            val: v2,
        });
    }
    Ok(total_val)
}

/// Adaptive quadrature of `f` over `(lo, hi)` to absolute accuracy `tol`.
///
/// `hi` may be `f64::INFINITY`; the tail is mapped to `[0, 1)` through the
/// monotone substitution `v = lo + t/(1-t)`, which turns polynomially and
/// exponentially decaying tails into integrands a bisecting Gauss–Kronrod
/// scheme resolves without truncation. The integrand is evaluated only at
/// interior nodes, so integrable endpoint singularities are admissible.
///
/// Errors: [`Error::NoConvergence`] (carrying the partial estimate) when
/// the subdivision budget is exhausted, [`Error::NonFinite`] if `f`
/// returns NaN/infinity at an evaluation node, and
/// [`Error::DomainViolation`] for invalid limits or tolerance.
pub fn integrate<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::DomainViolation("tolerance must be positive".into()));
    }
    if !lo.is_finite() {
        return Err(Error::DomainViolation(
            "lower integration limit must be finite".into(),
        ));
    }
    if hi.is_finite() {
        if lo == hi {
            return Ok(0.0);
        }
        if lo > hi {
            return Err(Error::DomainViolation(
                "integration limits must satisfy lo <= hi".into(),
            ));
        }
        adaptive(&f, lo, hi, tol)
    } else if hi == f64::INFINITY {
        let g = |t: f64| {
            let om = 1.0 - t;
            let v = lo + t / om;
            if !v.is_finite() {
                return 0.0; // t rounded to exactly 1: zero-measure tail end
            }
            f(v) / (om * om)
        };
        adaptive(&g, 0.0, 1.0, tol)
    } else {
        Err(Error::DomainViolation(
            "upper limit must be finite or +infinity".into(),
        ))
    }
}

/// Brent's method on `bracket`, stopping when `|f(x)| <= tol` or the
/// enclosing interval narrows to `tol`. The result always lies inside the
/// initial bracket.
///
/// Errors: [`Error::NoSignChange`] when the endpoints do not straddle a
/// root, [`Error::MaxIterations`] after 200 iterations, and
/// [`Error::DomainViolation`] for a malformed bracket.
pub fn find_root<F: Fn(f64) -> f64>(f: F, bracket: Bracket, tol: f64) -> Result<f64> {
    let Bracket { lo, hi } = bracket;
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::DomainViolation(
            "bracket must satisfy lo < hi with finite endpoints".into(),
        ));
    }
    if !(tol > 0.0) {
        return Err(Error::DomainViolation("tolerance must be positive".into()));
    }
    let mut a = lo;
    let mut b = hi;
    let mut fa = f(a);
    let mut fb = f(b);
    if !fa.is_finite() {
        return Err(Error::NonFinite { at: a });
    }
    if !fb.is_finite() {
        return Err(Error::NonFinite { at: b });
    }
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::NoSignChange { f_lo: fa, f_hi: fb });
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = b - a;
    for _ in 0..MAX_BRENT_ITERS {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * tol;
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb.abs() <= tol {
            return Ok(b);
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            // Attempt inverse quadratic interpolation / secant.
            let s = fb / fa;
            let (mut p, mut q) = if a == c {
                (2.0 * xm * s, 1.0 - s)
            } else {
                let q = fa / fc;
                let r = fb / fc;
                (
                    s * (2.0 * xm * q * (q - r) - (b - a) * (r - 1.0)),
                    (q - 1.0) * (r - 1.0) * (s - 1.0),
                )
            };
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            let min1 = 3.0 * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if 2.0 * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        if d.abs() > tol1 {
            b += d;
        } else {
            b += tol1.copysign(xm);
        }
        fb = f(b);
        if !fb.is_finite() {
            return Err(Error::NonFinite { at: b });
        }
    }
    Err(Error::MaxIterations("find_root"))
}

// Lanczos approximation (g = 7, 9 terms); accurate to ~1e-15 for s > 0.
const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEFFS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Complete gamma function for positive arguments (Lanczos).
pub fn gamma(s: f64) -> Result<f64> {
    if !(s > 0.0) || !s.is_finite() {
        return Err(Error::DomainViolation(format!(
            "gamma requires s > 0, got {s}"
        )));
    }
    let z = s - 1.0;
    let mut acc = LANCZOS_COEFFS[0];
    for (i, &c) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
        acc += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    Ok((2.0 * std::f64::consts::PI).sqrt() * t.powf(z + 0.5) * (-t).exp() * acc)
}

/// Upper incomplete gamma function `Γ(s, x) = ∫_x^∞ t^{s-1} e^{-t} dt`
/// for `s ∈ (0, 1]`, `x ≥ 0`, to relative accuracy better than 1e-10.
///
/// Small `x` uses the lower-incomplete power series subtracted from the
/// complete gamma; large `x` uses the modified-Lentz continued fraction.
pub fn upper_incomplete_gamma(s: f64, x: f64) -> Result<f64> {
    if !(s > 0.0 && s <= 1.0) {
        return Err(Error::DomainViolation(format!(
            "upper_incomplete_gamma requires s in (0, 1], got {s}"
        )));
    }
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::DomainViolation(format!(
            "upper_incomplete_gamma requires finite x >= 0, got {x}"
        )));
    }
    let complete = gamma(s)?;
    if x == 0.0 {
        return Ok(complete);
    }
    if x < s + 1.0 {
        // Lower series: γ(s,x) = x^s e^{-x} Σ_{n>=0} x^n / (s (s+1) ... (s+n)).
        let mut term = 1.0 / s;
        let mut sum = term;
        for n in 1..=500 {
            term *= x / (s + n as f64);
            sum += term;
            if term.abs() < sum.abs() * 1e-17 {
                let lower = sum * (-x).exp() * x.powf(s);
                return Ok(complete - lower);
            }
        }
        Err(Error::MaxIterations("upper_incomplete_gamma series"))
    } else {
        // Continued fraction (modified Lentz).
        let tiny = 1e-300;
        let mut b = x + 1.0 - s;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..=500 {
            let an = -(i as f64) * (i as f64 - s);
            b += 2.0;
            d = an * d + b;
            if d.abs() < tiny {
                d = tiny;
            }
            c = b + an / c;
            if c.abs() < tiny {
                c = tiny;
            }
            d = 1.0 / d;
            let delta = d * c;
            h *= delta;
            if (delta - 1.0).abs() < 1e-16 {
                return Ok((-x).exp() * x.powf(s) * h);
            }
        }
        Err(Error::MaxIterations("upper_incomplete_gamma fraction"))
    }
}

/// Lower convex hull of a planar point list whose `q` coordinates are
/// strictly increasing (monotone chain).
///
/// The output is a subset of the input points; the piecewise-linear
/// interpolant through it lies on or below every input point, its slopes
/// are nondecreasing, and collinear interior points are merged. Cross
/// products are compared exactly so flat stretches cannot oscillate.
pub fn lower_convex_hull(points: &[Point]) -> Result<Vec<Point>> {
    if points.len() < 2 {
        return Err(Error::DomainViolation(
            "lower_convex_hull requires at least 2 points".into(),
        ));
    }
    for pair in points.windows(2) {
        if !(pair[0].0 < pair[1].0) {
            return Err(Error::DomainViolation(
                "hull input q-coordinates must be strictly increasing".into(),
            ));
        }
    }
    for &(q, h) in points {
        if !q.is_finite() || !h.is_finite() {
            return Err(Error::NonFinite { at: q });
        }
    }
    let mut hull: Vec<Point> = Vec::with_capacity(points.len().min(64));
    for &p in points {
        while hull.len() >= 2 {
            let o = hull[hull.len() - 2];
            let a = hull[hull.len() - 1];
            // cross > 0 iff (o, a, p) turns convex (slope strictly increases).
            let cross = (a.0 - o.0) * (p.1 - o.1) - (p.0 - o.0) * (a.1 - o.1);
            if cross <= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    Ok(hull)
}
