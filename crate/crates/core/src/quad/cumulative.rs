//! Cached cumulative integrals over a geometric knot ladder.
//!
//! The harmonic potential and the arclength of a profile are both integrals
//! of a smooth positive density from a point to infinity (or from the inner
//! boundary to a point), evaluated thousands of times by the level-set root
//! solves. Precomputing panel integrals between knots reduces each
//! evaluation to one short adaptive quadrature.

use std::cell::RefCell;

use super::{bracketed_root, integrate, integrate_to_infinity_scaled, QuadError};

/// `x0 + scale * (ratio^i - 1)` for `i = 0, 1, ...` until the offset from
/// `x0` reaches `scale * span`.
pub fn geometric_knots(x0: f64, scale: f64, ratio: f64, span: f64) -> Vec<f64> {
    assert!(ratio > 1.0 && scale > 0.0 && span > 0.0);
    let mut knots = vec![x0];
    let mut power = 1.0;
    while power - 1.0 < span {
        power *= ratio;
        knots.push(x0 + scale * (power - 1.0));
    }
    knots
}

fn panel_of(knots: &[f64], x: f64) -> usize {
    // Index i with knots[i] <= x < knots[i + 1].
    knots
        .partition_point(|&k| k <= x)
        .saturating_sub(1)
        .min(knots.len() - 2)
}

/// Tracks the first quadrature failure inside a root-solve closure.
struct Failure(RefCell<Option<QuadError>>);

impl Failure {
    fn new() -> Self {
        Failure(RefCell::new(None))
    }

    fn record(&self, value: Result<f64, QuadError>) -> f64 {
        match value {
            Ok(v) => v,
            Err(e) => {
                self.0.borrow_mut().get_or_insert(e);
                f64::NAN
            }
        }
    }

    fn check(self) -> Result<(), QuadError> {
        match self.0.into_inner() {
            Some(e) => Err(e),
            None => Ok(()),
        }
    }
}

/// `T(x) = ∫_x^∞ f` for a positive integrand decaying at least like `x^-2`.
pub struct TailIntegral<F> {
    f: F,
    knots: Vec<f64>,
    tails: Vec<f64>,
    scale: f64,
    rtol: f64,
    /// Absolute tolerance per panel; the last entry covers `[last knot, ∞)`.
    atols: Vec<f64>,
}

impl<F: Fn(f64) -> f64> TailIntegral<F> {
    pub fn new(f: F, knots: Vec<f64>, scale: f64, rtol: f64) -> Result<Self, QuadError> {
        let atols = vec![0.0; knots.len()];
        Self::with_panel_atols(f, knots, scale, rtol, atols)
    }

    /// As [`TailIntegral::new`], with an absolute tolerance for each panel
    /// (`atols[i]` for `[knots[i], knots[i + 1]]`, the last entry for the far
    /// tail). Intended for integrands whose values are only accurate to a
    /// known absolute level.
    pub fn with_panel_atols(f: F, knots: Vec<f64>, scale: f64, rtol: f64, atols: Vec<f64>) -> Result<Self, QuadError> {
        assert!(knots.len() >= 2, "need at least one panel");
        assert_eq!(atols.len(), knots.len(), "one tolerance per panel plus the far tail");
        let n = knots.len();
        let last = knots[n - 1];
        let far = integrate_to_infinity_scaled(&f, last, last - knots[0] + scale, rtol, atols[n - 1])?.require()?;
        let mut tails = vec![0.0; n];
        tails[n - 1] = far;
        for i in (0..n - 1).rev() {
            let panel = integrate(&f, knots[i], knots[i + 1], rtol, atols[i])?.require()?;
            tails[i] = tails[i + 1] + panel;
        }
        Ok(TailIntegral {
            f,
            knots,
            tails,
            scale,
            rtol,
            atols,
        })
    }

    /// `T` at each knot.
    pub fn tails(&self) -> &[f64] {
        &self.tails
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// Tail integral from the first knot.
    pub fn total(&self) -> f64 {
        self.tails[0]
    }

    pub fn eval(&self, x: f64) -> Result<f64, QuadError> {
        let n = self.knots.len();
        let last = self.knots[n - 1];
        if x >= last {
            let atol = self.atols[n - 1];
            return integrate_to_infinity_scaled(&self.f, x, x - self.knots[0] + self.scale, self.rtol, atol)?
                .require();
        }
        if x < self.knots[0] {
            let head = integrate(&self.f, x, self.knots[0], self.rtol, self.atols[0])?.require()?;
            return Ok(self.tails[0] + head);
        }
        let i = panel_of(&self.knots, x);
        let piece = integrate(&self.f, x, self.knots[i + 1], self.rtol, self.atols[i])?.require()?;
        Ok(self.tails[i + 1] + piece)
    }

    /// The point `x >= knots[0]` with `T(x) = target`, for `0 < target <= T(knots[0])`.
    pub fn solve(&self, target: f64) -> Result<f64, QuadError> {
        let n = self.knots.len();
        if target >= self.tails[0] {
            return Ok(self.knots[0]);
        }
        let log_target = target.ln();
        let failure = Failure::new();
        let residual = |x: f64| failure.record(self.eval(x)).ln() - log_target;

        let (lo, hi) = if target >= self.tails[n - 1] {
            // tails is decreasing: find i with tails[i] > target >= tails[i + 1].
            let i = self.tails.partition_point(|&t| t > target) - 1;
            (self.knots[i], self.knots[i + 1])
        } else {
            let mut lo = self.knots[n - 1];
            let mut hi = lo;
            let mut found = false;
            for _ in 0..200 {
                lo = hi;
                hi = self.knots[0] + 4.0 * (hi - self.knots[0]);
                if failure.record(self.eval(hi)) <= target {
                    found = true;
                    break;
                }
            }
            failure_check(&failure)?;
            if !found {
                return Err(QuadError::RootNotConverged { iterations: 200 });
            }
            (lo, hi)
        };
        let root = bracketed_root(residual, lo, hi, 1e-15 * hi.abs().max(self.scale));
        failure.check()?;
        root
    }
}

fn failure_check(failure: &Failure) -> Result<(), QuadError> {
    match failure.0.borrow().as_ref() {
        Some(e) => Err(e.clone()),
        None => Ok(()),
    }
}

/// `S(x) = ∫_{knots[0]}^x f` for a positive integrand.
pub struct RunningIntegral<F> {
    f: F,
    knots: Vec<f64>,
    heads: Vec<f64>,
    rtol: f64,
}

impl<F: Fn(f64) -> f64> RunningIntegral<F> {
    pub fn new(f: F, knots: Vec<f64>, rtol: f64) -> Result<Self, QuadError> {
        assert!(knots.len() >= 2, "need at least one panel");
        let mut heads = vec![0.0; knots.len()];
        for i in 1..knots.len() {
            let panel = integrate(&f, knots[i - 1], knots[i], rtol, 0.0)?.require()?;
            heads[i] = heads[i - 1] + panel;
        }
        Ok(RunningIntegral { f, knots, heads, rtol })
    }

    pub fn start(&self) -> f64 {
        self.knots[0]
    }

    pub fn eval(&self, x: f64) -> Result<f64, QuadError> {
        if x <= self.knots[0] {
            let back = integrate(&self.f, x, self.knots[0], self.rtol, 0.0)?.require()?;
            return Ok(-back);
        }
        let n = self.knots.len();
        let i = if x >= self.knots[n - 1] {
            n - 1
        } else {
            panel_of(&self.knots, x)
        };
        let piece = integrate(&self.f, self.knots[i], x, self.rtol, 0.0)?.require()?;
        Ok(self.heads[i] + piece)
    }

    /// The point `x >= knots[0]` with `S(x) = target >= 0`.
    pub fn solve(&self, target: f64) -> Result<f64, QuadError> {
        if target <= 0.0 {
            return Ok(self.knots[0]);
        }
        let n = self.knots.len();
        let failure = Failure::new();
        let residual = |x: f64| failure.record(self.eval(x)) - target;
        let (lo, hi) = if target <= self.heads[n - 1] {
            let i = self.heads.partition_point(|&h| h < target);
            (self.knots[i - 1], self.knots[i])
        } else {
            let mut lo = self.knots[n - 1];
            let mut hi = lo;
            let mut found = false;
            for _ in 0..200 {
                lo = hi;
                hi = self.knots[0] + 4.0 * (hi - self.knots[0]);
                if failure.record(self.eval(hi)) >= target {
                    found = true;
                    break;
                }
            }
            failure_check(&failure)?;
            if !found {
                return Err(QuadError::RootNotConverged { iterations: 200 });
            }
            (lo, hi)
        };
        let root = bracketed_root(residual, lo, hi, 1e-15 * hi.abs().max(1.0));
        failure.check()?;
        root
    }
}
