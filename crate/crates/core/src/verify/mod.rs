//! Independent references for the characteristic solvers: direct
//! finite-difference schemes (valid before blowup), closed-form solutions,
//! field comparison, refinement orders and Hölder quotients.

mod fd;
mod holder;

pub use fd::{fd_solve_uni, fd_solve_wave, wave_energy, FdSolution};
pub use holder::{holder_quotient, HolderReport};

use alloc::format;
use alloc::vec::Vec;

#[allow(unused_imports)] // inherent methods take over when std is linked
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::func::{Func1, Velocity};
use crate::math;
use crate::model::{lattice, ModelSpec1};

/// `1/2 (u0(x - c0 t) + u0(x + c0 t)) + 1/(2 c0) int_{x - c0 t}^{x + c0 t} u1`.
pub fn dalembert_exact(c0: f64, u0: &Func1, u1: &Velocity, x: f64, t: f64) -> Result<f64> {
    if !(c0 > 0.0) {
        return Err(Error::InvalidInput(format!("wave speed c0 = {c0} must be positive")));
    }
    let (a, b) = (x - c0 * t, x + c0 * t);
    let drift = match u1 {
        Velocity::Zero => 0.0,
        // int u0' = u0(b) - u0(a)
        Velocity::SlopeOfDisplacement => u0.value(b) - u0.value(a),
        Velocity::Profile(f) => math::integrate(|s| f.value(s), a, b, 1e-14, 1e-13)?,
    };
    Ok(0.5 * (u0.value(a) + u0.value(b)) + drift / (2.0 * c0))
}

/// Closed-form blowup time `1 / (lambda max(-f'' u0'))` when `f''` is
/// constant; `None` when `f'' u0' >= 0` everywhere.
pub fn riccati_blowup_time(spec: &ModelSpec1) -> Result<Option<f64>> {
    let u_range = crate::model::state_range(&spec.u0, spec.x_domain)?;
    let k0 = spec.flux.d2(u_range.0);
    for u in lattice(u_range) {
        let d = spec.flux.d2(u);
        if (d - k0).abs() > 1e-10 {
            return Err(Error::NotApplicable(format!(
                "f'' is not constant: f''({}) = {k0}, f''({u}) = {d}",
                u_range.0
            )));
        }
    }
    if k0 == 0.0 {
        return Ok(None);
    }
    // Steepest decrease of k0 R0 on the lattice, refined by golden section.
    let g = |x: f64| -k0 * spec.u0.d1(x);
    let xs: Vec<f64> = lattice(spec.x_domain).collect();
    let (mut best, mut at) = (f64::NEG_INFINITY, 0);
    for (k, &x) in xs.iter().enumerate() {
        let v = g(x);
        if v > best {
            best = v;
            at = k;
        }
    }
    if !(best > 0.0) {
        return Ok(None);
    }
    let mut lo = xs[at.saturating_sub(1)];
    let mut hi = xs[(at + 1).min(xs.len() - 1)];
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..100 {
        let m1 = hi - phi * (hi - lo);
        let m2 = lo + phi * (hi - lo);
        if g(m1) > g(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    let peak = g(0.5 * (lo + hi)).max(best);
    Ok(Some(1.0 / (spec.lambda() * peak)))
}

/// A function of one variable given by samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    pub x: Vec<f64>,
    pub u: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub linf: f64,
    pub l2: f64,
    pub samples: usize,
}

/// Sup and L2 norms of `a - b` over the samples of `a` inside `window`,
/// with `b` interpolated linearly.
pub fn compare_fields(a: &Profile, b: &Profile, window: (f64, f64)) -> Result<Comparison> {
    let lo = window.0.max(a.x[0]).max(b.x[0]);
    let hi = window.1.min(*a.x.last().unwrap()).min(*b.x.last().unwrap());
    if !(hi > lo) {
        return Err(Error::Window(format!("window {window:?} misses one of the sample ranges")));
    }
    let mut xs = Vec::new();
    let mut d2 = Vec::new();
    let mut linf: f64 = 0.0;
    for (&x, &u) in a.x.iter().zip(&a.u) {
        if x < lo || x > hi {
            continue;
        }
        let d = u - math::interp_linear(&b.x, &b.u, x);
        linf = linf.max(d.abs());
        xs.push(x);
        d2.push(d * d);
    }
    if xs.is_empty() {
        return Err(Error::Window(format!("no samples of the first field in [{lo}, {hi}]")));
    }
    let l2 = if xs.len() > 1 {
        // trapezoid over the covered part, extended flat to the window ends
        let mut acc = math::integrate_samples(&xs, &d2, xs[0], *xs.last().unwrap());
        acc += d2[0] * (xs[0] - lo) + d2[d2.len() - 1] * (hi - xs[xs.len() - 1]);
        acc.sqrt()
    } else {
        (d2[0] * (hi - lo)).sqrt()
    };
    Ok(Comparison {
        linf,
        l2,
        samples: xs.len(),
    })
}

/// Least-squares slope of `log error` against `log h`.
pub fn convergence_order(runs: &[(f64, f64)]) -> Result<f64> {
    if runs.len() < 3 {
        return Err(Error::InvalidInput(format!("{} runs; at least three are needed", runs.len())));
    }
    if runs.windows(2).any(|w| !(w[1].0 < w[0].0)) {
        return Err(Error::InvalidInput("grid spacings must decrease".into()));
    }
    if let Some(&(h, e)) = runs.iter().find(|(h, e)| !(*h > 0.0 && *e > 0.0)) {
        return Err(Error::InvalidInput(format!("non-positive spacing or error ({h}, {e})")));
    }
    let lx: Vec<f64> = runs.iter().map(|r| r.0.ln()).collect();
    let ly: Vec<f64> = runs.iter().map(|r| r.1.ln()).collect();
    Ok(math::ls_slope(&lx, &ly))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn dalembert_examples() {
        let sech = Func1::Sech {
            amplitude: 1.0,
            width: 1.0,
        };
        let v = dalembert_exact(1.0, &sech, &Velocity::Zero, 0.0, 1.0).unwrap();
        assert_relative_eq!(v, 1.0 / 1f64.cosh(), epsilon = 1e-15);
        assert_relative_eq!(
            dalembert_exact(2.0, &sech, &Velocity::Zero, 0.3, 0.0).unwrap(),
            sech.value(0.3)
        );
        let one = Velocity::Profile(Func1::constant(1.0));
        assert_relative_eq!(
            dalembert_exact(1.0, &Func1::constant(0.0), &one, 0.4, 0.7).unwrap(),
            0.7,
            epsilon = 1e-14
        );
        assert!(dalembert_exact(0.0, &sech, &one, 0.0, 1.0).is_err());
    }

    #[test]
    fn orders_of_exact_sequences() {
        let h = 0.1;
        assert_relative_eq!(
            convergence_order(&[(h, h), (h / 2.0, h / 2.0), (h / 4.0, h / 4.0)]).unwrap(),
            1.0,
            epsilon = 1e-12
        );
        let sq = |h: f64| (h, h * h);
        assert_relative_eq!(
            convergence_order(&[sq(h), sq(h / 2.0), sq(h / 4.0)]).unwrap(),
            2.0,
            epsilon = 1e-12
        );
        assert!(convergence_order(&[sq(h), sq(h / 2.0), (h / 4.0, 0.0)]).is_err());
        assert!(convergence_order(&[sq(h), sq(h / 2.0)]).is_err());
    }

    #[test]
    fn comparison_of_offset_fields() {
        let x: Vec<f64> = (0..11).map(|k| k as f64 * 0.2).collect();
        let a = Profile {
            x: x.clone(),
            u: x.iter().map(|x| x * x).collect(),
        };
        let b = Profile {
            x: x.clone(),
            u: x.iter().map(|x| x * x + 0.1).collect(),
        };
        let c = compare_fields(&a, &a, (0.0, 2.0)).unwrap();
        assert_eq!((c.linf, c.l2), (0.0, 0.0));
        let c = compare_fields(&a, &b, (0.0, 2.0)).unwrap();
        assert_relative_eq!(c.linf, 0.1, epsilon = 1e-12);
        assert_relative_eq!(c.l2, 0.1 * 2f64.sqrt(), epsilon = 1e-12);
        assert!(matches!(compare_fields(&a, &b, (3.0, 4.0)), Err(Error::Window(_))));
    }
}
