//! Bracketed scalar root finding: bisection followed by Newton polish.

use crate::error::{Error, Result};

/// Root of `f` in `[lo, hi]` where `f(lo)` and `f(hi)` differ in sign.
///
/// Bisection narrows the bracket to `1e-3` relative width, then Newton
/// steps (with `df`) polish to `tol`, falling back to bisection whenever a
/// Newton iterate leaves the bracket.
pub fn bisect_newton<F, D>(f: F, df: D, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() || !flo.is_finite() || !fhi.is_finite() {
        return Err(Error::domain("root bracket", format!("f({lo}) = {flo}, f({hi}) = {fhi}")));
    }
    for _ in 0..200 {
        if (hi - lo).abs() <= 1e-3 * lo.abs().max(hi.abs()).max(1e-300) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..100 {
        let fx = f(x);
        if fx == 0.0 {
            return Ok(x);
        }
        if fx.signum() == flo.signum() {
            lo = x;
        } else {
            hi = x;
        }
        let step = fx / df(x);
        let mut next = x - step;
        if !next.is_finite() || next <= lo.min(hi) || next >= lo.max(hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= tol * x.abs().max(1.0) {
            return Ok(next);
        }
        x = next;
    }
    Err(Error::NoConvergence("bisect_newton"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_cubic_root() {
        let r = bisect_newton(|x| x * x * x - 2.0, |x| 3.0 * x * x, 0.0, 5.0, 1e-14).unwrap();
        assert!((r - 2f64.cbrt()).abs() < 1e-13);
    }

    #[test]
    fn rejects_bad_bracket() {
        assert!(bisect_newton(|x| x * x + 1.0, |x| 2.0 * x, -1.0, 1.0, 1e-12).is_err());
    }

    #[test]
    fn steep_monotone_function() {
        // 1/sqrt(c) = 0.25 has root c = 16
        let r = bisect_newton(|c| 1.0 / c.sqrt() - 0.25, |c| -0.5 * c.powf(-1.5), 1e-9, 1e6, 1e-13).unwrap();
        assert!((r - 16.0).abs() < 1e-10);
    }
}
