//! Direct schemes in physical coordinates. Both stop being meaningful at
//! the first gradient blowup.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // inherent methods take over when std is linked
use num_traits::Float;
use serde::{Deserialize, Serialize};

use super::Profile;
use crate::error::{Error, Result};
use crate::model::{lattice, state_range, ModelSpec1, ModelSpec2};

/// Largest admissible CFL number.
pub const CFL_LIMIT: f64 = 0.9;
/// Gradient magnitude at which the unidirectional scheme gives up.
pub const GRADIENT_CAP: f64 = 1e3;

/// Solution on a uniform `(x, t)` lattice; every time level is stored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FdSolution {
    pub x: Vec<f64>,
    pub t: Vec<f64>,
    pub u: Vec<Vec<f64>>,
    /// `u_x` for the unidirectional scheme.
    pub rho: Option<Vec<Vec<f64>>>,
    pub cfl: f64,
}

impl FdSolution {
    pub fn dx(&self) -> f64 {
        self.x[1] - self.x[0]
    }

    pub fn dt(&self) -> f64 {
        self.t[1] - self.t[0]
    }

    /// `u(., t)` interpolated linearly between the bracketing levels.
    pub fn profile_at(&self, t: f64) -> Option<Profile> {
        let n = self.t.len();
        if !(t >= self.t[0] && t <= self.t[n - 1] + 1e-12 * self.t[n - 1].abs()) {
            return None;
        }
        let pos = ((t - self.t[0]) / self.dt()).max(0.0);
        let k = (pos.floor() as usize).min(n - 1);
        let w = pos - k as f64;
        let u = if k + 1 >= n || w <= 1e-12 {
            self.u[k].clone()
        } else {
            self.u[k].iter().zip(&self.u[k + 1]).map(|(a, b)| a + w * (b - a)).collect()
        };
        Some(Profile {
            x: self.x.clone(),
            u,
        })
    }
}

fn cumtrapz(rho: &[f64], dx: f64, out: &mut [f64]) {
    out[0] = 0.0;
    for j in 1..rho.len() {
        out[j] = out[j - 1] + 0.5 * dx * (rho[j - 1] + rho[j]);
    }
}

/// Upwind/Heun scheme for `rho_t + f'(u) rho_x = -lambda f''(u) rho^2` with
/// `rho = u_x`, `u = int_0^x rho` and `rho = 0` at `x = 0`.
pub fn fd_solve_uni(spec: &ModelSpec1, nx: usize, x_max: f64, t_end: f64, cfl: f64) -> Result<FdSolution> {
    if nx < 3 || !(x_max > 0.0) || !(t_end > 0.0) {
        return Err(Error::InvalidInput(format!("lattice nx = {nx}, x_max = {x_max}, t_end = {t_end}")));
    }
    if !(cfl > 0.0 && cfl <= CFL_LIMIT) {
        return Err(Error::Stability { cfl, limit: CFL_LIMIT });
    }
    let lam = spec.lambda();
    let dx = x_max / (nx - 1) as f64;
    let x: Vec<f64> = (0..nx).map(|j| dx * j as f64).collect();
    let a_max = lattice(state_range(&spec.u0, spec.x_domain)?)
        .map(|u| spec.flux.d1(u).abs())
        .fold(0.0, f64::max);
    let dt_cfl = if a_max > 0.0 { cfl * dx / a_max } else { dx };
    let nt = (t_end / dt_cfl).ceil().max(1.0) as usize;
    let dt = t_end / nt as f64;

    let mut rho: Vec<f64> = x.iter().map(|&x| spec.u0.d1(x)).collect();
    rho[0] = 0.0;
    let mut u = vec![0.0; nx];
    cumtrapz(&rho, dx, &mut u);
    let mut us = vec![u.clone()];
    let mut rhos = vec![rho.clone()];
    let mut ts = vec![0.0];

    let rate = |rho: &[f64], u: &[f64], out: &mut [f64]| -> f64 {
        let mut amax: f64 = 0.0;
        out[0] = 0.0;
        for j in 1..nx {
            let a = spec.flux.d1(u[j]);
            amax = amax.max(a.abs());
            let d = if a >= 0.0 {
                (rho[j] - rho[j - 1]) / dx
            } else if j + 1 < nx {
                (rho[j + 1] - rho[j]) / dx
            } else {
                0.0
            };
            out[j] = -a * d - lam * spec.flux.d2(u[j]) * rho[j] * rho[j];
        }
        amax
    };
    let (mut k1, mut k2) = (vec![0.0; nx], vec![0.0; nx]);
    let mut star = vec![0.0; nx];
    let mut u_star = vec![0.0; nx];
    let mut worst_cfl: f64 = 0.0;
    for n in 1..=nt {
        let a1 = rate(&rho, &u, &mut k1);
        for j in 0..nx {
            star[j] = rho[j] + dt * k1[j];
        }
        cumtrapz(&star, dx, &mut u_star);
        let a2 = rate(&star, &u_star, &mut k2);
        let c = a1.max(a2) * dt / dx;
        worst_cfl = worst_cfl.max(c);
        if c > CFL_LIMIT {
            return Err(Error::Stability { cfl: c, limit: CFL_LIMIT });
        }
        for j in 0..nx {
            rho[j] += 0.5 * dt * (k1[j] + k2[j]);
        }
        cumtrapz(&rho, dx, &mut u);
        let t = dt * n as f64;
        let peak = rho.iter().fold(0.0f64, |m, r| m.max(r.abs()));
        if !(peak <= GRADIENT_CAP) {
            return Err(Error::PreBlowupOnly {
                magnitude: peak,
                cap: GRADIENT_CAP,
                t,
            });
        }
        us.push(u.clone());
        rhos.push(rho.clone());
        ts.push(t);
    }
    Ok(FdSolution {
        x,
        t: ts,
        u: us,
        rho: Some(rhos),
        cfl: worst_cfl,
    })
}

/// Three-level centred scheme for `u_tt = c^2 u_xx + 2 lambda c c' u_x^2` on
/// `[-half_width, half_width]`, Taylor first step, linear extrapolation at
/// both ends.
pub fn fd_solve_wave(spec: &ModelSpec2, nx: usize, half_width: f64, t_end: f64, cfl: f64) -> Result<FdSolution> {
    if nx < 5 || !(half_width > 0.0) || !(t_end > 0.0) {
        return Err(Error::InvalidInput(format!(
            "lattice nx = {nx}, half_width = {half_width}, t_end = {t_end}"
        )));
    }
    if !(cfl > 0.0 && cfl <= CFL_LIMIT) {
        return Err(Error::Stability { cfl, limit: CFL_LIMIT });
    }
    let lam = spec.lambda();
    let dx = 2.0 * half_width / (nx - 1) as f64;
    let x: Vec<f64> = (0..nx).map(|j| -half_width + dx * j as f64).collect();
    let c_max = spec.speed.c_max;
    let nt = (t_end * c_max / (cfl * dx)).ceil().max(1.0) as usize;
    let dt = t_end / nt as f64;
    let r2 = (dt / dx).powi(2);

    let accel = |u: &[f64], out: &mut [f64]| {
        for j in 1..nx - 1 {
            let (c, dc) = spec.speed.eval(u[j]);
            let uxx = u[j + 1] - 2.0 * u[j] + u[j - 1];
            let ux = 0.5 * (u[j + 1] - u[j - 1]);
            out[j] = r2 * (c * c * uxx + 2.0 * lam * c * dc * ux * ux);
        }
    };
    let extrapolate = |u: &mut [f64]| {
        u[0] = 2.0 * u[1] - u[2];
        u[nx - 1] = 2.0 * u[nx - 2] - u[nx - 3];
    };

    let u0: Vec<f64> = x.iter().map(|&x| spec.u0.value(x)).collect();
    let mut acc = vec![0.0; nx];
    accel(&u0, &mut acc);
    let mut u1: Vec<f64> = (0..nx)
        .map(|j| u0[j] + dt * spec.u1.value(&spec.u0, x[j]) + 0.5 * acc[j])
        .collect();
    extrapolate(&mut u1);
    let mut us = vec![u0, u1];
    let mut ts = vec![0.0, dt];
    let mut worst_cfl: f64 = 0.0;
    for n in 2..=nt {
        let (prev, cur) = (&us[n - 2], &us[n - 1]);
        let c_now = cur.iter().map(|&u| spec.speed.eval(u).0).fold(0.0, f64::max) * dt / dx;
        worst_cfl = worst_cfl.max(c_now);
        if c_now > CFL_LIMIT {
            return Err(Error::Stability {
                cfl: c_now,
                limit: CFL_LIMIT,
            });
        }
        accel(cur, &mut acc);
        let mut next: Vec<f64> = (0..nx).map(|j| 2.0 * cur[j] - prev[j] + acc[j]).collect();
        extrapolate(&mut next);
        if let Some(j) = next.iter().position(|v| !v.is_finite()) {
            return Err(Error::NumericalDomain {
                what: "leapfrog update".into(),
                at: x[j],
            });
        }
        us.push(next);
        ts.push(dt * n as f64);
    }
    Ok(FdSolution {
        x,
        t: ts,
        u: us,
        rho: None,
        cfl: worst_cfl,
    })
}

/// Discrete `int (u_t^2 + c0^2 u_x^2) dx` on every interior time level.
pub fn wave_energy(sol: &FdSolution, c0: f64) -> Vec<f64> {
    let (dx, dt) = (sol.dx(), sol.dt());
    let nx = sol.x.len();
    (1..sol.t.len() - 1)
        .map(|k| {
            (1..nx - 1)
                .map(|j| {
                    let ut = (sol.u[k + 1][j] - sol.u[k - 1][j]) / (2.0 * dt);
                    let ux = (sol.u[k][j + 1] - sol.u[k][j - 1]) / (2.0 * dx);
                    (ut * ut + c0 * c0 * ux * ux) * dx
                })
                .sum()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::func::{Func1, Velocity};

    #[test]
    fn zero_data_stays_zero() {
        let spec = ModelSpec1::new(0.25, Func1::Poly(vec![0.0, 0.0, 0.5]), Func1::constant(0.0), 10.0).unwrap();
        let s = fd_solve_uni(&spec, 65, 10.0, 1.0, 0.5).unwrap();
        assert!(s.u.iter().flatten().all(|&u| u == 0.0));
    }

    #[test]
    fn constant_state_is_stationary() {
        let spec = ModelSpec2::new(0.25, Func1::CosSpeed, Func1::constant(0.7), Velocity::Zero, 10.0).unwrap();
        let s = fd_solve_wave(&spec, 101, 10.0, 2.0, 0.5).unwrap();
        assert!(s.u.last().unwrap().iter().all(|&u| (u - 0.7).abs() < 1e-14));
    }

    #[test]
    fn cfl_above_limit_is_rejected() {
        let spec = ModelSpec2::new(0.25, Func1::CosSpeed, Func1::constant(0.0), Velocity::Zero, 10.0).unwrap();
        assert!(matches!(
            fd_solve_wave(&spec, 101, 10.0, 1.0, 0.95),
            Err(Error::Stability { .. })
        ));
    }

    #[test]
    fn gradient_follows_riccati_before_blowup() {
        // lambda = 1/2, f'' = 1, min u0' = -1: the steepest slope is -1/(1 - t/2)
        let spec = ModelSpec1::new(0.5, Func1::Poly(vec![0.0, 0.0, 0.5]), Func1::dip(-1.0), 20.0).unwrap();
        let err = |nx| {
            let s = fd_solve_uni(&spec, nx, 20.0, 1.0, 0.5).unwrap();
            assert!(s.cfl <= CFL_LIMIT);
            let min = s.rho.unwrap().last().unwrap().iter().fold(0.0f64, |m, &r| m.min(r));
            (min + 2.0).abs()
        };
        let (coarse, fine) = (err(1001), err(2001));
        assert!(fine < 0.1, "{fine}");
        // first order
        assert!(coarse / fine > 1.6, "{coarse} {fine}");
    }
}
