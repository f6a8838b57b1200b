//! Tabulated primitive `P(x) = int_0^x g` of a positive integrand, with
//! exact (quadrature-backed) evaluation and monotone inversion.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;

const QUAD_TOL: f64 = 1e-13;
const MAX_PIECES: usize = 1 << 16;

pub struct Primitive<F: Fn(f64) -> f64> {
    g: F,
    xs: Vec<f64>,
    ps: Vec<f64>,
}

impl<F: Fn(f64) -> f64> Primitive<F> {
    /// Tabulates `P` on breakpoints `0, +-h, +-2h, ...` until it covers
    /// `[lo, hi]` in `x` and, when given, reaches `p_hi` above and `p_lo`
    /// below.
    pub fn build(g: F, lo: f64, hi: f64, h: f64, p_lo: Option<f64>, p_hi: Option<f64>) -> Result<Self> {
        let mut right = alloc::vec![(0.0, 0.0)];
        let mut x = 0.0;
        let mut p = 0.0;
        while x < hi || p_hi.is_some_and(|t| p < t) {
            if right.len() > MAX_PIECES {
                return Err(Error::Quadrature {
                    a: 0.0,
                    b: x,
                    estimate: f64::INFINITY,
                });
            }
            p += math::integrate(&g, x, x + h, QUAD_TOL, QUAD_TOL)?;
            x += h;
            right.push((x, p));
        }
        let mut left = Vec::new();
        let (mut x, mut p) = (0.0, 0.0);
        while x > lo || p_lo.is_some_and(|t| p > t) {
            if left.len() > MAX_PIECES {
                return Err(Error::Quadrature {
                    a: x,
                    b: 0.0,
                    estimate: f64::INFINITY,
                });
            }
            p -= math::integrate(&g, x - h, x, QUAD_TOL, QUAD_TOL)?;
            x -= h;
            left.push((x, p));
        }
        left.reverse();
        left.extend(right);
        let (xs, ps) = left.into_iter().unzip();
        Ok(Primitive { g, xs, ps })
    }

    pub fn x_range(&self) -> (f64, f64) {
        (self.xs[0], *self.xs.last().unwrap())
    }

    pub fn p_range(&self) -> (f64, f64) {
        (self.ps[0], *self.ps.last().unwrap())
    }

    #[inline]
    pub fn integrand(&self, x: f64) -> f64 {
        (self.g)(x)
    }

    fn segment(&self, x: f64) -> usize {
        let k = self.xs.partition_point(|&b| b <= x);
        k.clamp(1, self.xs.len() - 1) - 1
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        let k = self.segment(x);
        Ok(self.ps[k] + math::integrate(&self.g, self.xs[k], x, QUAD_TOL, QUAD_TOL)?)
    }

    /// Solves `P(x) = target` by safeguarded Newton inside the bracketing
    /// segment; `tol` is the tolerance on `x`.
    pub fn invert(&self, target: f64, tol: f64) -> Result<f64> {
        let (plo, phi) = self.p_range();
        // grid coordinates such as `start + step * i` can overshoot by an ulp
        let slack = 1e-12 * (phi - plo).abs().max(1.0);
        let target = if target < plo && target >= plo - slack {
            plo
        } else if target > phi && target <= phi + slack {
            phi
        } else {
            target
        };
        if !(target >= plo && target <= phi) {
            return Err(Error::MonotoneInversion {
                target,
                reason: alloc::format!("outside tabulated range [{plo}, {phi}]"),
            });
        }
        let k = self.ps.partition_point(|&p| p <= target).clamp(1, self.ps.len() - 1) - 1;
        let (mut a, mut b) = (self.xs[k], self.xs[k + 1]);
        if self.ps[k] == target {
            return Ok(a);
        }
        let frac = (target - self.ps[k]) / (self.ps[k + 1] - self.ps[k]);
        let mut x = a + frac * (b - a);
        for _ in 0..100 {
            let r = self.ps[k] + math::integrate(&self.g, self.xs[k], x, QUAD_TOL, QUAD_TOL)? - target;
            if r > 0.0 {
                b = x;
            } else {
                a = x;
            }
            let d = (self.g)(x);
            let mut next = x - r / d;
            if !(next > a && next < b) || !next.is_finite() {
                next = 0.5 * (a + b);
            }
            if (next - x).abs() <= tol || b - a <= tol {
                return Ok(next);
            }
            x = next;
        }
        Err(Error::MonotoneInversion {
            target,
            reason: "no convergence".into(),
        })
    }
}
