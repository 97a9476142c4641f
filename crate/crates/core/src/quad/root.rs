use super::QuadError;

const MAX_ITERATIONS: usize = 200;

/// Brent's method: inverse quadratic interpolation and secant steps with a
/// bisection fallback. Returns once `f(x) == 0` or the bracket has shrunk
/// below `tol` (plus a few ulps of `x`).
pub fn bracketed_root<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: f64) -> Result<f64, QuadError> {
    let (mut a, mut b) = (lo, hi);
    let (mut fa, mut fb) = (f(a), f(b));
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if !(fa.is_finite() && fb.is_finite()) || fa.signum() == fb.signum() {
        return Err(QuadError::NoSignChange {
            lo,
            hi,
            f_lo: fa,
            f_hi: fb,
        });
    }

    let (mut c, mut fc) = (b, fb);
    let (mut d, mut e) = (b - a, b - a);
    for _ in 0..MAX_ITERATIONS {
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
        if xm.abs() <= tol1 || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
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
        b += if d.abs() > tol1 { d } else { tol1.copysign(xm) };
        fb = f(b);
    }
    Err(QuadError::RootNotConverged {
        iterations: MAX_ITERATIONS,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_root_of_four() {
        let x = bracketed_root(|x| x * x - 4.0, 0.0, 10.0, 1e-14).unwrap();
        assert!((x - 2.0).abs() < 1e-13);
    }

    #[test]
    fn constant_function_has_no_bracket() {
        assert!(matches!(
            bracketed_root(|_| 1.0, 0.0, 1.0, 1e-12),
            Err(QuadError::NoSignChange { .. })
        ));
    }

    #[test]
    fn model_potential_half_level() {
        // u(r) = (m + 2 r0) / (m + 2 r) with m = 2, r0 = 1 equals 1/2 at r = 3.
        let u = |r: f64| 4.0 / (2.0 + 2.0 * r);
        let r = bracketed_root(|r| u(r) - 0.5, 1.0, 100.0, 1e-14).unwrap();
        assert!((r - 3.0).abs() < 1e-12);
    }

    #[test]
    fn endpoint_roots_are_returned_exactly() {
        assert_eq!(bracketed_root(|x| x - 1.0, 1.0, 2.0, 1e-12).unwrap(), 1.0);
    }
}
