//! Bracketed scalar root finding.

use crate::error::{Error, Result};

/// Bisection on `[lo, hi]` for a root of `f`, stopping when the bracket is
/// narrower than `xtol` or `f` vanishes exactly.
///
/// Accepts fallible functions so flow failures inside the bracket propagate.
pub fn bisect<F>(mut f: F, mut lo: f64, mut hi: f64, xtol: f64, max_iter: usize) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut flo = f(lo)?;
    let fhi = f(hi)?;
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::Bracket(format!(
            "f({lo}) = {flo:e} and f({hi}) = {fhi:e} have the same sign"
        )));
    }
    for _ in 0..max_iter {
        let mid = 0.5 * (lo + hi);
        if (hi - lo).abs() <= xtol || mid == lo || mid == hi {
            return Ok(mid);
        }
        let fmid = f(mid)?;
        if fmid == 0.0 {
            return Ok(mid);
        }
        if fmid.signum() == flo.signum() {
            lo = mid;
            flo = fmid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Bisection on a monotone predicate: `above(lo)` is assumed false and
/// `above(hi)` true without being evaluated. Returns the midpoint of the final
/// bracket, which is narrower than `xtol`.
///
/// Useful where the boundary values are exact fixed points (so a signed
/// residual would be zero there) or where failures classify as one side.
pub fn bisect_predicate<F>(mut above: F, mut lo: f64, mut hi: f64, xtol: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<bool>,
{
    if !(lo < hi) {
        return Err(Error::Bracket(format!("empty bracket [{lo}, {hi}]")));
    }
    while hi - lo > xtol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if above(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Bisection down to `bracket_tol`, then safeguarded Newton polish to `xtol`.
///
/// `fd` returns `(f(x), f'(x))`. Newton steps that leave the current bracket
/// are replaced by bisection steps.
pub fn bisect_newton<F>(fd: F, lo: f64, hi: f64, bracket_tol: f64, xtol: f64) -> Result<f64>
where
    F: Fn(f64) -> (f64, f64),
{
    let (mut a, mut b) = (lo.min(hi), lo.max(hi));
    let (fa, _) = fd(a);
    let (fb, _) = fd(b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::Bracket(format!(
            "f({a}) = {fa:e} and f({b}) = {fb:e} have the same sign"
        )));
    }
    let sa = fa.signum();
    while b - a > bracket_tol {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            return Ok(m);
        }
        let (fm, _) = fd(m);
        if fm == 0.0 {
            return Ok(m);
        }
        if fm.signum() == sa {
            a = m;
        } else {
            b = m;
        }
    }
    let mut x = 0.5 * (a + b);
    for _ in 0..60 {
        let (fx, dfx) = fd(x);
        if fx == 0.0 {
            return Ok(x);
        }
        if fx.signum() == sa {
            a = x;
        } else {
            b = x;
        }
        let mut next = if dfx != 0.0 { x - fx / dfx } else { f64::NAN };
        // a converged Newton step may land on the bracket end through rounding
        if (next - x).abs() <= xtol && next >= a && next <= b {
            return Ok(next);
        }
        if !(next > a && next < b) {
            next = 0.5 * (a + b);
        }
        let step = (next - x).abs();
        x = next;
        if step <= xtol || b - a <= xtol {
            return Ok(x);
        }
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn newton_polish_reaches_rounding_level() {
        // the root sits where the first Newton step lands exactly
        let e = 0.20194113356080098f64;
        let fd = |u: f64| ((u * u / 2.0 - u.powi(3) / 6.6) / 2.0 - e, u * (1.0 - u / 2.2) / 2.0);
        let x = bisect_newton(fd, 0.0, 2.2, 2.2e-6, 1e-12).unwrap();
        assert!(fd(x).0.abs() <= 1e-16);
    }

    #[test]
    fn predicate_bisection_finds_threshold() {
        let x = bisect_predicate(|x| Ok(x * x >= 2.0), 0.0, 2.0, 1e-13).unwrap();
        assert!((x - 2f64.sqrt()).abs() < 1e-13);
        assert!(bisect_predicate(|_| Ok(true), 1.0, 1.0, 1e-3).is_err());
    }

    #[test]
    fn bisect_finds_sqrt2() {
        let r = bisect(|x| Ok(x * x - 2.0), 0.0, 2.0, 1e-14, 200).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn bisect_rejects_non_bracket() {
        assert!(matches!(
            bisect(|x| Ok(x * x + 1.0), -1.0, 1.0, 1e-12, 100),
            Err(Error::Bracket(_))
        ));
    }

    #[test]
    fn newton_polish_is_tight() {
        let r = bisect_newton(|x| (x.cos() - x, -x.sin() - 1.0), 0.0, 1.0, 1e-3, 1e-15).unwrap();
        assert!((r.cos() - r).abs() < 1e-15);
    }
}
