//! Small numerical kernels shared by the solvers: the continuous-extension
//! power, angle wrapping, adaptive Gauss-Kronrod quadrature, line
//! integration on lattices, monotone bisection and log-log regression.

use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)] // inherent methods take over when std is linked
use num_traits::Float;

use crate::error::{Error, Result};

/// `base^exp` for `base >= 0`, with `0^0 = 1` and `0^e = 0` for `e > 0`.
///
/// Used for `(cos^2(v/2))^e`; rounding can leave `base` a hair below zero.
#[inline]
pub fn pow_ext(base: f64, exp: f64) -> f64 {
    let b = base.max(0.0);
    if exp == 0.0 {
        1.0
    } else if b == 0.0 {
        0.0
    } else if exp == 1.0 {
        b
    } else if exp == 0.5 {
        b.sqrt()
    } else if exp == 2.0 {
        b * b
    } else {
        b.powf(exp)
    }
}

/// Maps an angle to `(-pi, pi]`.
#[inline]
pub fn wrap_angle(a: f64) -> f64 {
    let mut r = a % (2.0 * PI);
    if r > PI {
        r -= 2.0 * PI;
    } else if r <= -PI {
        r += 2.0 * PI;
    }
    r
}

/// Half-angle trigonometry of an angle variable `v = 2 arctan R`.
#[derive(Debug, Clone, Copy)]
pub struct HalfAngle {
    /// sin(v/2)
    pub s: f64,
    /// cos(v/2)
    pub c: f64,
}

impl HalfAngle {
    #[inline]
    pub fn new(v: f64) -> Self {
        let (s, c) = (0.5 * v).sin_cos();
        HalfAngle { s, c }
    }
    /// sin v
    #[inline]
    pub fn sin_full(&self) -> f64 {
        2.0 * self.s * self.c
    }
    #[inline]
    pub fn sin2(&self) -> f64 {
        self.s * self.s
    }
    #[inline]
    pub fn cos2(&self) -> f64 {
        self.c * self.c
    }
}

const GK_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const K15_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const G7_WEIGHTS: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(mid);
    let mut kron = fc * K15_WEIGHTS[7];
    let mut gauss = fc * G7_WEIGHTS[3];
    for k in 0..7 {
        let dx = half * GK_NODES[k];
        let s = f(mid - dx) + f(mid + dx);
        kron += K15_WEIGHTS[k] * s;
        if k % 2 == 1 {
            gauss += G7_WEIGHTS[k / 2] * s;
        }
    }
    (kron * half, ((kron - gauss) * half).abs())
}

/// Adaptive Gauss-Kronrod (7/15) quadrature of `f` over `[a, b]`.
///
/// Bisects the interval with the largest error estimate until the summed
/// estimate falls below `max(abs_tol, rel_tol * |I|)`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let (v, e) = gk15(&f, lo, hi);
    let mut pieces: Vec<(f64, f64, f64, f64)> = alloc::vec![(lo, hi, v, e)];
    for _ in 0..2000 {
        let total: f64 = pieces.iter().map(|p| p.2).sum();
        let err: f64 = pieces.iter().map(|p| p.3).sum();
        if !total.is_finite() {
            return Err(Error::Quadrature { a, b, estimate: err });
        }
        if err <= abs_tol.max(rel_tol * total.abs()) {
            return Ok(sign * total);
        }
        let (worst, _) = pieces
            .iter()
            .enumerate()
            .fold((0, -1.0), |acc, (i, p)| if p.3 > acc.1 { (i, p.3) } else { acc });
        let (pa, pb, _, _) = pieces.swap_remove(worst);
        let pm = 0.5 * (pa + pb);
        let (v1, e1) = gk15(&f, pa, pm);
        let (v2, e2) = gk15(&f, pm, pb);
        pieces.push((pa, pm, v1, e1));
        pieces.push((pm, pb, v2, e2));
    }
    let err: f64 = pieces.iter().map(|p| p.3).sum();
    Err(Error::Quadrature { a, b, estimate: err })
}

/// Trapezoidal running integral along one lattice line.
///
/// The line starts at an off-lattice origin `origin` (value `origin_value`,
/// integrand `origin_rhs`) and continues through the lattice coordinates
/// `first, first + h, ...`, one per entry of `rhs`.
pub fn integrate_line(
    origin: f64,
    origin_value: f64,
    origin_rhs: f64,
    first: f64,
    h: f64,
    rhs: &[f64],
    out: &mut [f64],
) {
    debug_assert_eq!(rhs.len(), out.len());
    if rhs.is_empty() {
        return;
    }
    let lead = (first - origin).max(0.0);
    let mut acc = origin_value + 0.5 * lead * (origin_rhs + rhs[0]);
    out[0] = acc;
    for k in 1..rhs.len() {
        acc += 0.5 * h * (rhs[k - 1] + rhs[k]);
        out[k] = acc;
    }
}

/// Bisection for a root of a monotone function on `[lo, hi]`.
pub fn bisect<F: FnMut(f64) -> f64>(mut g: F, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64> {
    let mut glo = g(lo);
    let ghi = g(hi);
    if glo == 0.0 {
        return Ok(lo);
    }
    if ghi == 0.0 {
        return Ok(hi);
    }
    if !(glo.is_finite() && ghi.is_finite()) || glo.signum() == ghi.signum() {
        return Err(Error::MonotoneInversion {
            target: 0.0,
            reason: alloc::format!("no sign change on [{lo}, {hi}]"),
        });
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= tol {
            return Ok(mid);
        }
        let gm = g(mid);
        if gm == 0.0 {
            return Ok(mid);
        }
        if gm.signum() == glo.signum() {
            lo = mid;
            glo = gm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Linear interpolation of `(xs, ys)` at `x`; `xs` non-decreasing.
/// Values outside the range are clamped to the end samples.
pub fn interp_linear(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let n = xs.len();
    if n == 0 {
        return f64::NAN;
    }
    if x <= xs[0] {
        return ys[0];
    }
    if x >= xs[n - 1] {
        return ys[n - 1];
    }
    // first index with xs[i] > x
    let hi = xs.partition_point(|&v| v <= x);
    let lo = hi - 1;
    let dx = xs[hi] - xs[lo];
    if dx <= 0.0 {
        return ys[lo];
    }
    let w = (x - xs[lo]) / dx;
    ys[lo] + w * (ys[hi] - ys[lo])
}

/// Integral over `[lo, hi]` of the piecewise-linear interpolant of
/// `(xs, ys)`; `xs` increasing and covering `[lo, hi]`.
pub fn integrate_samples(xs: &[f64], ys: &[f64], lo: f64, hi: f64) -> f64 {
    let mut acc = 0.0;
    for k in 1..xs.len() {
        let (x0, x1) = (xs[k - 1], xs[k]);
        let a = x0.max(lo);
        let b = x1.min(hi);
        if b <= a || x1 <= x0 {
            continue;
        }
        let ya = ys[k - 1] + (ys[k] - ys[k - 1]) * (a - x0) / (x1 - x0);
        let yb = ys[k - 1] + (ys[k] - ys[k - 1]) * (b - x0) / (x1 - x0);
        acc += 0.5 * (b - a) * (ya + yb);
    }
    acc
}

/// Least-squares slope of `ys` against `xs`.
pub fn ls_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn pow_ext_conventions() {
        assert_eq!(pow_ext(0.0, 0.0), 1.0);
        assert_eq!(pow_ext(0.0, 1.0), 0.0);
        assert_eq!(pow_ext(-1e-17, 0.5), 0.0);
        assert_relative_eq!(pow_ext(0.25, 0.5), 0.5);
        assert_relative_eq!(pow_ext(0.3, 1.7), 0.3f64.powf(1.7));
    }

    #[test]
    fn wrap_angle_range() {
        assert_relative_eq!(wrap_angle(3.0 * PI / 2.0), -PI / 2.0, epsilon = 1e-14);
        assert_relative_eq!(wrap_angle(-PI), PI);
        assert_relative_eq!(wrap_angle(0.3 + 4.0 * PI), 0.3, epsilon = 1e-13);
    }

    #[test]
    fn gauss_kronrod_polynomials_and_exp() {
        let v = integrate(|x| x * x * x - x, 0.0, 2.0, 1e-14, 1e-14).unwrap();
        assert_relative_eq!(v, 2.0, epsilon = 1e-13);
        let v = integrate(|x| x.exp(), 0.0, 1.0, 1e-14, 1e-14).unwrap();
        assert_relative_eq!(v, core::f64::consts::E - 1.0, epsilon = 1e-13);
        let v = integrate(|x| x.sqrt(), 1.0, 0.0, 1e-12, 1e-12).unwrap();
        assert_relative_eq!(v, -2.0 / 3.0, epsilon = 1e-10);
    }

    #[test]
    fn line_integration_with_partial_lead() {
        let rhs = [1.0, 1.0, 1.0];
        let mut out = [0.0; 3];
        integrate_line(-0.25, 2.0, 1.0, 0.0, 0.5, &rhs, &mut out);
        assert_relative_eq!(out[0], 2.25);
        assert_relative_eq!(out[2], 3.25);
    }

    #[test]
    fn bisect_and_interp() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-14).unwrap();
        assert_relative_eq!(r, 2f64.sqrt(), epsilon = 1e-13);
        assert!(bisect(|x| x * x + 1.0, 0.0, 1.0, 1e-12).is_err());
        let xs = [0.0, 1.0, 1.0, 2.0];
        let ys = [0.0, 1.0, 1.0, 3.0];
        assert_relative_eq!(interp_linear(&xs, &ys, 1.5), 2.0);
        assert_relative_eq!(interp_linear(&xs, &ys, 5.0), 3.0);
    }

    #[test]
    fn piecewise_linear_integral() {
        let xs = [0.0, 1.0, 2.0];
        let ys = [0.0, 1.0, 0.0];
        assert_relative_eq!(integrate_samples(&xs, &ys, 0.0, 2.0), 1.0);
        assert_relative_eq!(integrate_samples(&xs, &ys, 0.5, 1.0), 0.375);
    }
}
