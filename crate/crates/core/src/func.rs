//! Closed-form scalar evaluators for fluxes, wave speeds and initial
//! profiles. Every variant returns its value together with the first two
//! derivatives.

use alloc::vec::Vec;

#[allow(unused_imports)] // inherent methods take over when std is linked
use num_traits::Float;
use serde::{Deserialize, Serialize};

/// Value and first two derivatives of a scalar function at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
}

/// Peak of `(2x - x^2) e^{-x}` on `x >= 0`, attained at `x = 2 - sqrt 2`.
pub fn sq_exp_slope_peak() -> f64 {
    let x = 2.0 - 2f64.sqrt();
    (2.0 * x - x * x) * (-x).exp()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Func1 {
    /// `sum c_k u^k`
    Poly(Vec<f64>),
    /// `a0 + sum_k (a_k cos(k u) + b_k sin(k u))`, stored as `[a0, a1, b1, a2, b2, ...]`.
    Trig(Vec<f64>),
    /// `amplitude * sech(u / width)`
    Sech { amplitude: f64, width: f64 },
    /// `amplitude * u^2 e^{-u}`
    SqExp { amplitude: f64 },
    /// `sqrt(cos^2 u + 1)`
    CosSpeed,
}

impl Func1 {
    pub fn constant(c: f64) -> Self {
        Func1::Poly(alloc::vec![c])
    }

    /// `amplitude * u^2 e^{-u}` scaled so the most negative slope equals `min_slope`.
    pub fn dip(min_slope: f64) -> Self {
        Func1::SqExp {
            amplitude: min_slope / sq_exp_slope_peak(),
        }
    }

    pub fn jet(&self, u: f64) -> Jet {
        match self {
            Func1::Poly(c) => {
                // Horner for value and both derivatives.
                let mut v = 0.0;
                let mut d1 = 0.0;
                let mut d2 = 0.0;
                for &ck in c.iter().rev() {
                    d2 = d2 * u + 2.0 * d1;
                    d1 = d1 * u + v;
                    v = v * u + ck;
                }
                Jet { value: v, d1, d2 }
            }
            Func1::Trig(c) => {
                let mut jet = Jet {
                    value: c.first().copied().unwrap_or(0.0),
                    d1: 0.0,
                    d2: 0.0,
                };
                for (k, pair) in c[1.min(c.len())..].chunks(2).enumerate() {
                    let kf = (k + 1) as f64;
                    let a = pair[0];
                    let b = pair.get(1).copied().unwrap_or(0.0);
                    let (s, co) = (kf * u).sin_cos();
                    jet.value += a * co + b * s;
                    jet.d1 += kf * (-a * s + b * co);
                    jet.d2 += -kf * kf * (a * co + b * s);
                }
                jet
            }
            Func1::Sech { amplitude, width } => {
                let z = u / width;
                let s = 1.0 / z.cosh();
                let t = z.tanh();
                Jet {
                    value: amplitude * s,
                    d1: -amplitude * s * t / width,
                    d2: amplitude * s * (t * t - s * s) / (width * width),
                }
            }
            Func1::SqExp { amplitude } => {
                let e = (-u).exp();
                Jet {
                    value: amplitude * u * u * e,
                    d1: amplitude * (2.0 * u - u * u) * e,
                    d2: amplitude * (2.0 - 4.0 * u + u * u) * e,
                }
            }
            Func1::CosSpeed => {
                let (s2, c2) = (2.0 * u).sin_cos();
                let co = u.cos();
                let c = (co * co + 1.0).sqrt();
                Jet {
                    value: c,
                    d1: -s2 / (2.0 * c),
                    d2: -c2 / c - s2 * s2 / (4.0 * c * c * c),
                }
            }
        }
    }

    #[inline]
    pub fn value(&self, u: f64) -> f64 {
        self.jet(u).value
    }

    #[inline]
    pub fn d1(&self, u: f64) -> f64 {
        self.jet(u).d1
    }

    #[inline]
    pub fn d2(&self, u: f64) -> f64 {
        self.jet(u).d2
    }

    /// Adds `a * u` to the function (used by invariance checks on `f''`).
    pub fn plus_linear(&self, a: f64) -> Option<Func1> {
        match self {
            Func1::Poly(c) => {
                let mut c = c.clone();
                if c.len() < 2 {
                    c.resize(2, 0.0);
                }
                c[1] += a;
                Some(Func1::Poly(c))
            }
            _ => None,
        }
    }
}

/// Initial velocity `u_t(x, 0)` for the second-order equation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Velocity {
    Zero,
    /// `u_t(x, 0) = u_x(x, 0)`
    SlopeOfDisplacement,
    Profile(Func1),
}

impl Velocity {
    pub fn value(&self, displacement: &Func1, x: f64) -> f64 {
        match self {
            Velocity::Zero => 0.0,
            Velocity::SlopeOfDisplacement => displacement.d1(x),
            Velocity::Profile(f) => f.value(x),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn fd_check(f: &Func1, u: f64) {
        let h = 1e-5;
        let j = f.jet(u);
        let d1 = (f.value(u + h) - f.value(u - h)) / (2.0 * h);
        let d2 = (f.d1(u + h) - f.d1(u - h)) / (2.0 * h);
        assert!((j.d1 - d1).abs() < 1e-6 * (1.0 + d1.abs()), "{f:?} d1 at {u}");
        assert!((j.d2 - d2).abs() < 1e-6 * (1.0 + d2.abs()), "{f:?} d2 at {u}");
    }

    proptest! {
        #[test]
        fn derivatives_match_central_differences(u in -3.0f64..3.0) {
            for f in [
                Func1::Poly(alloc::vec![0.3, -1.0, 0.5, 0.25]),
                Func1::Trig(alloc::vec![1.0, 0.2, -0.4, 0.1]),
                Func1::Sech { amplitude: 1.3, width: 0.7 },
                Func1::SqExp { amplitude: -2.0 },
                Func1::CosSpeed,
            ] {
                fd_check(&f, u);
            }
        }
    }

    #[test]
    fn quadratic_flux_has_unit_curvature() {
        let f = Func1::Poly(alloc::vec![0.0, 0.0, 0.5]);
        let j = f.jet(1.7);
        assert_relative_eq!(j.value, 0.5 * 1.7 * 1.7);
        assert_relative_eq!(j.d1, 1.7);
        assert_relative_eq!(j.d2, 1.0);
    }

    #[test]
    fn dip_has_requested_minimum_slope() {
        let f = Func1::dip(-1.0);
        let x = 2.0 - 2f64.sqrt();
        assert_relative_eq!(f.d1(x), -1.0, epsilon = 1e-14);
        assert!(f.d2(x).abs() < 1e-12);
        assert_eq!(f.value(0.0), 0.0);
        assert_eq!(f.d1(0.0), 0.0);
    }

    #[test]
    fn cos_speed_bounds() {
        assert_relative_eq!(Func1::CosSpeed.value(0.0), 2f64.sqrt());
        assert_relative_eq!(Func1::CosSpeed.value(core::f64::consts::FRAC_PI_2), 1.0);
    }
}
