//! Compactly supported C^2 bump test functions on the `(x, t)` plane.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

/// `psi((x - xc)/ax) psi((t - tc)/at)` with `psi(s) = (1 - s^2)^3` on `|s| < 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub xc: f64,
    pub tc: f64,
    pub ax: f64,
    pub at: f64,
}

#[inline]
fn psi(s: f64) -> (f64, f64) {
    if s.abs() >= 1.0 {
        (0.0, 0.0)
    } else {
        let w = 1.0 - s * s;
        (w * w * w, -6.0 * s * w * w)
    }
}

impl Bump {
    /// `(phi, phi_x, phi_t)`
    #[inline]
    pub fn eval(&self, x: f64, t: f64) -> (f64, f64, f64) {
        let (px, dpx) = psi((x - self.xc) / self.ax);
        let (pt, dpt) = psi((t - self.tc) / self.at);
        (px * pt, dpx * pt / self.ax, px * dpt / self.at)
    }

    pub fn x_support(&self) -> (f64, f64) {
        (self.xc - self.ax, self.xc + self.ax)
    }

    pub fn t_support(&self) -> (f64, f64) {
        (self.tc - self.at, self.tc + self.at)
    }

    /// `nx * nt` bumps tiling `x_range x t_range`, each of half-width equal
    /// to its tile size so neighbours overlap.
    pub fn family(x_range: (f64, f64), t_range: (f64, f64), nx: usize, nt: usize) -> Vec<Bump> {
        let dx = (x_range.1 - x_range.0) / (nx + 1) as f64;
        let dt = (t_range.1 - t_range.0) / (nt + 1) as f64;
        let mut out = Vec::with_capacity(nx * nt);
        for j in 1..=nt {
            for i in 1..=nx {
                out.push(Bump {
                    xc: x_range.0 + dx * i as f64,
                    tc: t_range.0 + dt * j as f64,
                    ax: dx,
                    at: dt,
                });
            }
        }
        out
    }
}
