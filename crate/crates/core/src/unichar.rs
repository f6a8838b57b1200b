//! Energy-dependent characteristic coordinates `(Y, T)` for the
//! unidirectional equation.
//!
//! `Y` labels characteristics by the energy carried between the boundary and
//! the foot of the characteristic, `T = t`. In these coordinates the
//! equation becomes the semi-linear system
//!
//! ```text
//! u_Y  = 1/2 xi sin v (cos^2(v/2))^(1/(2 lambda) - 1)
//! v_T  = -2 lambda f''(u) sin^2(v/2)
//! xi_T = 1/2 f''(u) xi sin v
//! ```
//!
//! which stays regular through gradient blowup (`v = +-pi`).

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // inherent methods take over when std is linked
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Axis, Grid};
use crate::math::{self, integrate_line, pow_ext, wrap_angle, HalfAngle};
use crate::model::ModelSpec1;
use crate::primitive::Primitive;
use crate::report::{BlowupReport, BlowupVariable, ConvergenceHistory, IterationRecord, PhysicalSamples, TimeLine};
use crate::testfn::Bump;

/// Truncated characteristic domain `{Y >= -f'(0) T, 0 <= T <= r, Y <= r}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CharDomain1 {
    pub r: f64,
    /// `f'(0)`; the boundary `x = 0` is the line `Y = -f'(0) T`.
    pub boundary_speed: f64,
}

impl CharDomain1 {
    pub fn new(spec: &ModelSpec1, r: f64) -> Result<Self> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::InvalidInput(format!("truncation radius r = {r}")));
        }
        let a = spec.flux.d1(0.0);
        if a < 0.0 {
            return Err(Error::InvalidInput(format!("f'(0) = {a} is negative")));
        }
        Ok(CharDomain1 { r, boundary_speed: a })
    }

    #[inline]
    pub fn gamma_b(&self, t: f64) -> f64 {
        -self.boundary_speed * t
    }

    pub fn contains(&self, y: f64, t: f64) -> bool {
        (0.0..=self.r).contains(&t) && y <= self.r && y >= self.gamma_b(t)
    }
}

/// `(1 + u0'(x)^2)^(1/(2 lambda))`
fn energy_density(spec: &ModelSpec1) -> impl Fn(f64) -> f64 + '_ {
    let k = 0.5 / spec.lambda();
    move |x| pow_ext(1.0 + spec.u0.d1(x).powi(2), k)
}

/// `Y(x) = int_0^x (1 + u0'^2)^(1/(2 lambda))`.
pub fn initial_coordinate(spec: &ModelSpec1, x: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(Error::InvalidInput(format!("initial coordinate needs x >= 0, got {x}")));
    }
    math::integrate(energy_density(spec), 0.0, x, 1e-13, 1e-13)
}

/// Lattice over the truncated domain, with the data traced on `T = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid1 {
    pub domain: CharDomain1,
    pub grid: Grid,
    /// `x(Y_i, 0)` for columns with `Y_i >= 0`, NaN elsewhere.
    pub x0: Vec<f64>,
    pub u_data: Vec<f64>,
    pub v_data: Vec<f64>,
}

impl Grid1 {
    /// `n x n` lattice; `Y` spans `[-f'(0) r, r]` and `T` spans `[0, r]`.
    pub fn new(spec: &ModelSpec1, r: f64, n: usize) -> Result<Self> {
        let domain = CharDomain1::new(spec, r)?;
        let y_lo = domain.gamma_b(r);
        let a = Axis::spanning(y_lo, r, n)?;
        let b = Axis::spanning(0.0, r, n)?;
        let row_origin = (0..b.len).map(|j| domain.gamma_b(b.at(j))).collect();
        let col_origin = (0..a.len)
            .map(|i| {
                let y = a.at(i);
                if y >= 0.0 {
                    0.0
                } else {
                    -y / domain.boundary_speed
                }
            })
            .collect();
        let grid = Grid::new(a, b, row_origin, col_origin)?;

        let prim = Primitive::build(energy_density(spec), 0.0, 0.0, r / 64.0, None, Some(r))?;
        let mut x0 = vec![f64::NAN; a.len];
        let mut u_data = vec![0.0; a.len];
        let mut v_data = vec![0.0; a.len];
        for i in 0..a.len {
            let y = a.at(i);
            if y < 0.0 {
                continue;
            }
            let x = if y == 0.0 { 0.0 } else { prim.invert(y, 1e-12 * r)? };
            let j = spec.u0.jet(x);
            x0[i] = x;
            u_data[i] = j.value;
            v_data[i] = 2.0 * j.d1.atan();
        }
        // Boundary values win at the corner.
        if let Some(i0) = (0..a.len).find(|&i| a.at(i) == 0.0) {
            u_data[i0] = 0.0;
            v_data[i0] = 0.0;
        }
        Ok(Grid1 {
            domain,
            grid,
            x0,
            u_data,
            v_data,
        })
    }

    /// The same lattice with the data angle shifted by `shift` on `T = 0`.
    pub fn with_angle_shift(&self, shift: f64) -> Self {
        let mut g = self.clone();
        for (i, v) in g.v_data.iter_mut().enumerate() {
            if g.grid.a.at(i) >= 0.0 {
                *v += shift;
            }
        }
        g
    }

    /// Whether column `i` starts on the initial line (else on the boundary).
    #[inline]
    pub fn from_data(&self, i: usize) -> bool {
        self.grid.a.at(i) >= 0.0
    }
}

/// Solution fields, indexed like [`Grid::idx`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct State1 {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub xi: Vec<f64>,
    pub s: Option<Vec<f64>>,
}

/// Seeds every column with its data (or boundary) values.
pub fn init_fields(spec: &ModelSpec1, grid: &Grid1) -> State1 {
    let g = &grid.grid;
    let mut st = State1 {
        u: g.field(),
        v: g.field(),
        xi: g.field(),
        s: None,
    };
    for (i, j) in g.nodes() {
        let k = g.idx(i, j);
        let (u, v) = if grid.from_data(i) {
            (grid.u_data[i], grid.v_data[i])
        } else {
            (0.0, 0.0)
        };
        st.u[k] = u;
        st.v[k] = v;
        st.xi[k] = 1.0;
    }
    if spec.lambda.has_s_system() {
        st.s = Some(vec![0.0; g.len()]);
    }
    st
}

/// `(u_Y, v_T, xi_T)`.
#[inline]
pub fn rhs_semi(u: f64, v: f64, xi: f64, spec: &ModelSpec1) -> (f64, f64, f64) {
    let h = HalfAngle::new(v);
    let f2 = spec.flux.d2(u);
    let ce = pow_ext(h.cos2(), spec.lambda.cos_exponent());
    let sv = h.sin_full();
    (0.5 * xi * sv * ce, -2.0 * spec.lambda() * f2 * h.sin2(), 0.5 * f2 * xi * sv)
}

/// `(u_T, S_Y, v_T, xi_T)` of the auxiliary system.
pub fn rhs_semi2(u: f64, s: f64, v: f64, xi: f64, spec: &ModelSpec1) -> Result<(f64, f64, f64, f64)> {
    if !spec.lambda.has_s_system() {
        return Err(Error::UnsupportedRegime {
            lambda: spec.lambda(),
            context: "the S system (requires lambda in (0, 1/3] or lambda = 1/2)",
        });
    }
    let (_, vt, xt) = rhs_semi(u, v, xi, spec);
    Ok((s, s_y(u, v, xi, spec), vt, xt))
}

#[inline]
fn s_y(u: f64, v: f64, xi: f64, spec: &ModelSpec1) -> f64 {
    let h = HalfAngle::new(v);
    let ce = pow_ext(h.cos2(), spec.lambda.cos_exponent());
    (1.0 - spec.lambda()) * spec.flux.d2(u) * xi * h.sin2() * ce
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    /// Weight of the sup-norm; `None` picks `2 max(1, sup|f''|) r`.
    pub kappa: Option<f64>,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            kappa: None,
            tol: 1e-10,
            max_iter: 200,
        }
    }
}

pub fn default_kappa(spec: &ModelSpec1, r: f64) -> f64 {
    2.0 * spec.flux.f2_sup.max(1.0) * r
}

/// Consistency checks of the auxiliary `S` field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SCheck {
    /// `sup |u - (u_data + int S dT)|`
    pub u_mismatch: f64,
    /// `sup |D_T u_Y - S_Y|` with a centred difference in `T`.
    pub cross_derivative: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniSolution {
    pub spec: ModelSpec1,
    pub grid: Grid1,
    pub state: State1,
    pub history: ConvergenceHistory,
    pub s_check: Option<SCheck>,
}

/// Picard iteration on the integral form of the semi-linear system.
///
/// `u` is integrated along rows from the boundary, `v` and `xi` along
/// columns from the initial line or the boundary. The iteration stops once
/// both the weighted and the plain sup-norm of the update are below `tol`.
pub fn solve_fixed_point(spec: &ModelSpec1, grid: &Grid1, opts: &SolveOptions) -> Result<UniSolution> {
    let g = &grid.grid;
    let r = grid.domain.r;
    let kappa = opts.kappa.unwrap_or_else(|| default_kappa(spec, r));
    let weights = g.weights(kappa);
    let mut st = init_fields(spec, grid);
    let (mut ru, mut rv, mut rx) = (g.field(), g.field(), g.field());
    let (mut nu, mut nv, mut nx) = (g.field(), g.field(), g.field());
    let mut cin = Vec::with_capacity(g.b.len);
    let mut cout = vec![0.0; g.b.len];
    let mut records = Vec::new();
    let mut converged = false;

    for iter in 1..=opts.max_iter {
        for (i, j) in g.nodes() {
            let k = g.idx(i, j);
            let (a, b, c) = rhs_semi(st.u[k], st.v[k], st.xi[k], spec);
            ru[k] = a;
            rv[k] = b;
            rx[k] = c;
        }
        for j in 0..g.b.len {
            let s = g.row_start[j];
            if s >= g.a.len {
                continue;
            }
            let base = j * g.a.len;
            integrate_line(
                g.row_origin[j],
                0.0,
                0.0,
                g.a.at(s),
                g.a.step,
                &ru[base + s..base + g.a.len],
                &mut nu[base + s..base + g.a.len],
            );
        }
        for i in 0..g.a.len {
            let s = g.col_start[i];
            if s >= g.b.len {
                continue;
            }
            let data = grid.from_data(i);
            for (field, rhs, out, v0) in [
                (0, &rv, &mut nv, grid.v_data[i]),
                (1, &rx, &mut nx, 1.0),
            ] {
                cin.clear();
                cin.extend((s..g.b.len).map(|j| rhs[g.idx(i, j)]));
                let m = cin.len();
                let (value, orhs) = if data { (v0, cin[0]) } else { (if field == 0 { 0.0 } else { 1.0 }, 0.0) };
                integrate_line(g.col_origin[i], value, orhs, g.b.at(s), g.b.step, &cin, &mut cout[..m]);
                for (jj, &val) in cout[..m].iter().enumerate() {
                    out[g.idx(i, s + jj)] = val;
                }
            }
        }
        let (wu, su) = g.diff_norms(&nu, &st.u, &weights);
        let (wv, sv) = g.diff_norms(&nv, &st.v, &weights);
        let (wx, sx) = g.diff_norms(&nx, &st.xi, &weights);
        core::mem::swap(&mut st.u, &mut nu);
        core::mem::swap(&mut st.v, &mut nv);
        core::mem::swap(&mut st.xi, &mut nx);
        let rec = IterationRecord {
            iter,
            update_norm: wu.max(wv).max(wx),
            sup_norm: su.max(sv).max(sx),
        };
        records.push(rec);
        if !rec.sup_norm.is_finite() {
            break;
        }
        if rec.update_norm < opts.tol && rec.sup_norm < opts.tol {
            converged = true;
            break;
        }
    }
    if !converged {
        let last = records.last().map_or(f64::INFINITY, |r| r.sup_norm);
        return Err(Error::FixedPointDivergence {
            iterations: records.len(),
            last_update: last,
            history: records.iter().map(|r| r.update_norm).collect(),
        });
    }

    let bound = (0.5 * r * spec.flux.f2_sup).exp();
    let (xmin, xmax) = g.extrema(&st.xi);
    if !(xmin > 0.0) {
        return Err(Error::InvariantViolation {
            what: "xi > 0",
            value: xmin,
            bound: 0.0,
        });
    }
    if xmax > 1.01 * bound {
        return Err(Error::InvariantViolation {
            what: "xi <= exp(r sup|f''| / 2)",
            value: xmax,
            bound,
        });
    }

    let s_check = if spec.lambda.has_s_system() {
        Some(solve_s(spec, grid, &mut st))
    } else {
        st.s = None;
        None
    };

    Ok(UniSolution {
        spec: spec.clone(),
        grid: grid.clone(),
        state: st,
        history: ConvergenceHistory {
            kappa,
            records,
            converged,
        },
        s_check,
    })
}

/// Integrates `S_Y` along rows from the boundary (`S = 0` there) and checks
/// `u_T = S` and `u_YT = u_TY`.
fn solve_s(spec: &ModelSpec1, grid: &Grid1, st: &mut State1) -> SCheck {
    let g = &grid.grid;
    let mut sy = g.field();
    let mut uy = g.field();
    for (i, j) in g.nodes() {
        let k = g.idx(i, j);
        sy[k] = s_y(st.u[k], st.v[k], st.xi[k], spec);
        uy[k] = rhs_semi(st.u[k], st.v[k], st.xi[k], spec).0;
    }
    let mut s = g.field();
    for j in 0..g.b.len {
        let st0 = g.row_start[j];
        if st0 >= g.a.len {
            continue;
        }
        let base = j * g.a.len;
        integrate_line(
            g.row_origin[j],
            0.0,
            0.0,
            g.a.at(st0),
            g.a.step,
            &sy[base + st0..base + g.a.len],
            &mut s[base + st0..base + g.a.len],
        );
    }

    let mut u_mismatch: f64 = 0.0;
    let mut cin = Vec::with_capacity(g.b.len);
    let mut cout = vec![0.0; g.b.len];
    for i in 0..g.a.len {
        let s0 = g.col_start[i];
        if s0 >= g.b.len {
            continue;
        }
        cin.clear();
        cin.extend((s0..g.b.len).map(|j| s[g.idx(i, j)]));
        let m = cin.len();
        let (value, orhs) = if grid.from_data(i) {
            (grid.u_data[i], cin[0])
        } else {
            (0.0, 0.0)
        };
        integrate_line(g.col_origin[i], value, orhs, g.b.at(s0), g.b.step, &cin, &mut cout[..m]);
        for (jj, &val) in cout[..m].iter().enumerate() {
            u_mismatch = u_mismatch.max((val - st.u[g.idx(i, s0 + jj)]).abs());
        }
    }

    let mut cross: f64 = 0.0;
    for (i, j) in g.nodes() {
        if j == 0 || j + 1 >= g.b.len || !g.masked(i, j - 1) {
            continue;
        }
        let d = (uy[g.idx(i, j + 1)] - uy[g.idx(i, j - 1)]) / (2.0 * g.b.step);
        cross = cross.max((d - sy[g.idx(i, j)]).abs());
    }
    st.s = Some(s);
    SCheck {
        u_mismatch,
        cross_derivative: cross,
    }
}

/// Recovered map `(Y, T) -> x` and the solution on physical time lines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Inverse1 {
    /// `x` from integrating `x_Y` along rows.
    pub x: Vec<f64>,
    /// `x` from integrating `x_T = f'(u)` along columns.
    pub x_alt: Vec<f64>,
    pub mismatch: f64,
    pub tolerance: f64,
    pub samples: PhysicalSamples,
}

/// Integrates `x_Y = xi (cos^2(v/2))^(1/(2 lambda))` from the boundary on
/// every row, and `x_T = f'(u)` on every column as a path-independence check.
pub fn inverse_transform(sol: &UniSolution) -> Result<Inverse1> {
    let spec = &sol.spec;
    let grid = &sol.grid;
    let g = &grid.grid;
    let st = &sol.state;
    let k2 = 0.5 / spec.lambda();
    let mut dxy = g.field();
    let mut dxt = g.field();
    for (i, j) in g.nodes() {
        let k = g.idx(i, j);
        dxy[k] = st.xi[k] * pow_ext(HalfAngle::new(st.v[k]).cos2(), k2);
        dxt[k] = spec.flux.d1(st.u[k]);
    }
    let mut x = g.field();
    for j in 0..g.b.len {
        let s = g.row_start[j];
        if s >= g.a.len {
            continue;
        }
        let base = j * g.a.len;
        integrate_line(
            g.row_origin[j],
            0.0,
            1.0,
            g.a.at(s),
            g.a.step,
            &dxy[base + s..base + g.a.len],
            &mut x[base + s..base + g.a.len],
        );
    }
    let mut x_alt = g.field();
    let mut cin = Vec::with_capacity(g.b.len);
    let mut cout = vec![0.0; g.b.len];
    let a0 = grid.domain.boundary_speed;
    for i in 0..g.a.len {
        let s = g.col_start[i];
        if s >= g.b.len {
            continue;
        }
        cin.clear();
        cin.extend((s..g.b.len).map(|j| dxt[g.idx(i, j)]));
        let m = cin.len();
        let (value, orhs) = if grid.from_data(i) {
            (grid.x0[i], cin[0])
        } else {
            (0.0, a0)
        };
        integrate_line(g.col_origin[i], value, orhs, g.b.at(s), g.b.step, &cin, &mut cout[..m]);
        for (jj, &val) in cout[..m].iter().enumerate() {
            x_alt[g.idx(i, s + jj)] = val;
        }
    }
    let mismatch = g.sup_diff(&x, &x_alt);
    let (_, xmax) = g.extrema(&x);
    let tolerance = g.spacing() * (1.0 + xmax.abs());
    if !(mismatch <= tolerance) {
        return Err(Error::Compatibility {
            what: "inverse map (Y- vs T-integration)",
            mismatch,
            tolerance,
        });
    }

    let mut lines = Vec::with_capacity(g.b.len);
    for j in 0..g.b.len {
        let s = g.row_start[j];
        if s >= g.a.len {
            continue;
        }
        let r = g.idx(s, j)..g.idx(g.a.len - 1, j) + 1;
        lines.push(TimeLine {
            t: g.b.at(j),
            x: x[r.clone()].to_vec(),
            u: st.u[r.clone()].to_vec(),
            ux: st.v[r].iter().map(|&v| (0.5 * v).tan()).collect(),
            a: (s..g.a.len).map(|i| g.a.at(i)).collect(),
            b: vec![g.b.at(j); g.a.len - s],
        });
    }
    Ok(Inverse1 {
        x,
        x_alt,
        mismatch,
        tolerance,
        samples: PhysicalSamples { lines },
    })
}

fn sobolev_row(sol: &UniSolution, j: usize, y1: f64, y2: f64) -> f64 {
    let g = &sol.grid.grid;
    let k = 1.0 / sol.spec.lambda();
    let s = g.row_start[j];
    let mut ys = Vec::with_capacity(g.a.len + 1);
    let mut fs = Vec::with_capacity(g.a.len + 1);
    // v = 0 on the boundary, so the integrand vanishes there.
    if s < g.a.len && g.row_origin[j] < g.a.at(s) {
        ys.push(g.row_origin[j]);
        fs.push(0.0);
    }
    for i in s..g.a.len {
        let n = g.idx(i, j);
        ys.push(g.a.at(i));
        fs.push(HalfAngle::new(sol.state.v[n]).s.abs().powf(k) * sol.state.xi[n]);
    }
    math::integrate_samples(&ys, &fs, y1, y2)
}

/// `int_{Y1}^{Y2} |sin(v/2)|^(1/lambda) xi dY` at level `t`, which equals
/// `int |u_x|^(1/lambda) dx` over the image interval.
pub fn sobolev_seminorm(sol: &UniSolution, t: f64, y1: f64, y2: f64) -> Result<f64> {
    let g = &sol.grid.grid;
    let dom = &sol.grid.domain;
    if !(t >= 0.0 && t <= dom.r && y1 <= y2 && y1 >= dom.gamma_b(t) - 1e-12 && y2 <= dom.r + 1e-12) {
        return Err(Error::InvalidInput(format!(
            "[{y1}, {y2}] at T = {t} is not inside the solved region"
        )));
    }
    let pos = (t - g.b.start) / g.b.step;
    let j0 = (pos.floor() as usize).min(g.b.len - 2);
    let w = pos - j0 as f64;
    let lo = sobolev_row(sol, j0, y1, y2);
    if w <= 0.0 {
        return Ok(lo);
    }
    let hi = sobolev_row(sol, j0 + 1, y1, y2);
    Ok((1.0 - w) * lo + w * hi)
}

/// Largest `|int int {-u_Y phi_T + (lambda - 1) f'' xi sin^2(v/2) c^e phi} dY dT|`
/// over the family, where `phi_T = phi_t + f'(u) phi_x` and
/// `c^e = (cos^2(v/2))^(1/(2 lambda) - 1)`.
pub fn weak_residual(sol: &UniSolution, inv: &Inverse1, bumps: &[Bump]) -> Result<f64> {
    let spec = &sol.spec;
    let g = &sol.grid.grid;
    let st = &sol.state;
    let r = sol.grid.domain.r;
    for b in bumps {
        let (x_lo, x_hi) = b.x_support();
        let (t_lo, t_hi) = b.t_support();
        if !(x_lo > 0.0 && t_lo > 0.0 && t_hi < r) {
            return Err(Error::Support(format!("{b:?} is not inside x > 0, 0 < t < {r}")));
        }
        for line in &inv.samples.lines {
            if line.t >= t_lo && line.t <= t_hi && line.x_range().1 <= x_hi {
                return Err(Error::Support(format!(
                    "{b:?} reaches x = {x_hi} beyond the solved edge {} at t = {}",
                    line.x_range().1,
                    line.t
                )));
            }
        }
    }
    let lam = spec.lambda();
    let e = spec.lambda.cos_exponent();
    let cell = g.a.step * g.b.step;
    let mut worst: f64 = 0.0;
    for b in bumps {
        let (t_lo, t_hi) = b.t_support();
        let (x_lo, x_hi) = b.x_support();
        let j_lo = g.b.first_at_or_after(t_lo);
        let mut acc = 0.0;
        for j in j_lo..g.b.len {
            let t = g.b.at(j);
            if t > t_hi {
                break;
            }
            for i in g.row_start[j]..g.a.len {
                let k = g.idx(i, j);
                let x = inv.x[k];
                if x <= x_lo {
                    continue;
                }
                if x >= x_hi {
                    break;
                }
                let (phi, px, pt) = b.eval(x, t);
                let u = st.u[k];
                let h = HalfAngle::new(st.v[k]);
                let ce = pow_ext(h.cos2(), e);
                let uy = 0.5 * st.xi[k] * h.sin_full() * ce;
                let phi_t = pt + spec.flux.d1(u) * px;
                acc += -uy * phi_t + (lam - 1.0) * spec.flux.d2(u) * st.xi[k] * h.sin2() * ce * phi;
            }
        }
        worst = worst.max((acc * cell).abs());
    }
    Ok(worst)
}

/// First level `T` at which `|v|` (wrapped to `(-pi, pi]`) reaches
/// `threshold`, interpolated linearly between rows.
pub fn detect_blowup1(sol: &UniSolution, inv: Option<&Inverse1>, threshold: f64) -> BlowupReport {
    let g = &sol.grid.grid;
    let v = &sol.state.v;
    let mut max_angle: f64 = 0.0;
    let mut first: Option<(f64, usize, usize)> = None;
    for j in 0..g.b.len {
        let mut hit: Option<(f64, usize)> = None;
        for i in g.row_start[j]..g.a.len {
            let a = wrap_angle(v[g.idx(i, j)]).abs();
            max_angle = max_angle.max(a);
            if first.is_none() && a >= threshold {
                let t = if j > 0 && g.masked(i, j - 1) {
                    let ap = wrap_angle(v[g.idx(i, j - 1)]).abs();
                    if ap < threshold && a > ap {
                        g.b.at(j - 1) + (threshold - ap) / (a - ap) * g.b.step
                    } else {
                        g.b.at(j)
                    }
                } else {
                    g.b.at(j)
                };
                if hit.is_none_or(|(th, _)| t < th) {
                    hit = Some((t, i));
                }
            }
        }
        if first.is_none() {
            if let Some((t, i)) = hit {
                first = Some((t, i, j));
            }
        }
    }
    let xi = g.extrema(&sol.state.xi);
    BlowupReport {
        detected: first.is_some(),
        threshold,
        variable: first.map(|_| BlowupVariable::V),
        first_location: first.map(|(t, i, _)| [g.a.at(i), t]),
        first_physical: first.and_then(|(t, i, j)| inv.map(|m| [m.x[g.idx(i, j)], t])),
        first_time: first.map(|(t, _, _)| t),
        max_angle,
        pq_extrema: None,
        xi_extrema: Some([xi.0, xi.1]),
    }
}

/// Largest cell residual of `(|u_x|^(1/lambda))_t + (f'(u) |u_x|^(1/lambda))_x`
/// on a uniform `(x, t)` lattice resampled from the time lines, using centred
/// differences.
pub fn energy_residual(samples: &PhysicalSamples, spec: &ModelSpec1) -> Result<f64> {
    let lines = &samples.lines;
    if lines.len() < 3 {
        return Err(Error::DegenerateSamples("energy residual needs three time lines".into()));
    }
    let (x_lo, x_hi) = samples.common_x_range();
    let nx = lines.iter().map(|l| l.x.len()).min().unwrap_or(0);
    if !(x_hi > x_lo) || nx < 3 {
        return Err(Error::DegenerateSamples("time lines share no x-interval".into()));
    }
    let k = 1.0 / spec.lambda();
    let hx = (x_hi - x_lo) / (nx - 1) as f64;
    let xs: Vec<f64> = (0..nx).map(|m| x_lo + hx * m as f64).collect();
    // energy density and flux on each line, resampled
    let mut dens = Vec::with_capacity(lines.len());
    let mut flux = Vec::with_capacity(lines.len());
    for l in lines {
        let d: Vec<f64> = xs.iter().map(|&x| math::interp_linear(&l.x, &l.ux, x).abs().powf(k)).collect();
        let f: Vec<f64> = xs
            .iter()
            .zip(&d)
            .map(|(&x, &e)| spec.flux.d1(l.u_at(x)) * e)
            .collect();
        dens.push(d);
        flux.push(f);
    }
    let mut worst: f64 = 0.0;
    for j in 1..lines.len() - 1 {
        let ht = lines[j + 1].t - lines[j - 1].t;
        for m in 1..nx - 1 {
            let res = (dens[j + 1][m] - dens[j - 1][m]) / ht + (flux[j][m + 1] - flux[j][m - 1]) / (2.0 * hx);
            worst = worst.max(res.abs());
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::func::Func1;
    use approx::assert_relative_eq;
    use core::f64::consts::PI;

    fn quadratic() -> Func1 {
        Func1::Poly(vec![0.0, 0.0, 0.5])
    }

    #[test]
    fn rhs_hand_values() {
        let spec = ModelSpec1::new(0.5, quadratic(), Func1::constant(0.0), 10.0).unwrap();
        let (uy, vt, xt) = rhs_semi(0.0, PI / 2.0, 1.0, &spec);
        assert_relative_eq!(uy, 0.5, epsilon = 1e-15);
        assert_relative_eq!(vt, -0.5, epsilon = 1e-15);
        assert_relative_eq!(xt, 0.5, epsilon = 1e-15);
        let (_, sy, _, _) = rhs_semi2(0.0, 0.0, PI, 1.0, &spec).unwrap();
        assert_relative_eq!(sy, 0.5, epsilon = 1e-15);
        assert_eq!(rhs_semi(0.3, 0.0, 2.0, &spec), (0.0, 0.0, 0.0));
    }

    #[test]
    fn rhs_at_blowup_line() {
        let spec = ModelSpec1::new(0.25, quadratic(), Func1::constant(0.0), 10.0).unwrap();
        let (uy, vt, xt) = rhs_semi(0.0, PI, 1.3, &spec);
        assert!(uy.abs() < 1e-15 && xt.abs() < 1e-15);
        assert_relative_eq!(vt, -0.5, epsilon = 1e-15);
        assert!(rhs_semi2(0.0, 0.0, PI, 1.0, &spec).unwrap().1.abs() < 1e-15);
        let s3 = ModelSpec1::new(0.4, quadratic(), Func1::constant(0.0), 10.0).unwrap();
        assert!(matches!(
            rhs_semi2(0.0, 0.0, 1.0, 1.0, &s3),
            Err(Error::UnsupportedRegime { .. })
        ));
    }

    #[test]
    fn initial_coordinate_simple_cases() {
        let flat = ModelSpec1::new(0.3, quadratic(), Func1::constant(0.0), 10.0).unwrap();
        assert_relative_eq!(initial_coordinate(&flat, 2.5).unwrap(), 2.5, epsilon = 1e-13);
        let ramp = ModelSpec1::new(0.5, quadratic(), Func1::Poly(vec![0.0, 1.0]), 10.0).unwrap();
        assert_relative_eq!(initial_coordinate(&ramp, 1.5).unwrap(), 3.0, epsilon = 1e-13);
        assert!(initial_coordinate(&ramp, -1.0).is_err());
    }

    #[test]
    fn zero_data_is_stationary() {
        let spec = ModelSpec1::new(0.25, quadratic(), Func1::constant(0.0), 10.0).unwrap();
        let grid = Grid1::new(&spec, 2.0, 33).unwrap();
        let sol = solve_fixed_point(&spec, &grid, &SolveOptions::default()).unwrap();
        assert!(sol.history.iterations() <= 2);
        let g = &grid.grid;
        for (i, j) in g.nodes() {
            let k = g.idx(i, j);
            assert_eq!((sol.state.u[k], sol.state.v[k], sol.state.xi[k]), (0.0, 0.0, 1.0));
        }
        let inv = inverse_transform(&sol).unwrap();
        for (i, j) in g.nodes() {
            assert_relative_eq!(inv.x[g.idx(i, j)], g.a.at(i), epsilon = 1e-13);
        }
        assert_eq!(sobolev_seminorm(&sol, 1.0, 0.0, 2.0).unwrap(), 0.0);
    }

    #[test]
    fn linear_ramp_maps_back_to_half() {
        // u0' = 1 on the initial line, lambda = 1/2: Y = 2x.
        let spec = ModelSpec1::new(0.5, Func1::Poly(vec![0.0, 1.0]), Func1::Poly(vec![0.0, 1.0]), 10.0).unwrap();
        let grid = Grid1::new(&spec, 2.0, 41).unwrap();
        for i in 0..grid.grid.a.len {
            let y = grid.grid.a.at(i);
            if y > 0.0 {
                assert_relative_eq!(grid.x0[i], 0.5 * y, epsilon = 1e-11);
                assert_relative_eq!(grid.v_data[i], PI / 2.0, epsilon = 1e-12);
            }
        }
    }
}
