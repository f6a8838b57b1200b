//! Characteristic coordinates `(X, Y)` for the second-order wave equation.
//!
//! `X` is constant along backward characteristics and `Y` along forward
//! ones; both are normalised on `t = 0` by the energy of the Riemann
//! invariants `R = u_t + c u_x`, `S = u_t - c u_x`. With `w = 2 arctan R`,
//! `v = 2 arctan S` and the dilations `p`, `q` the equation becomes a
//! semi-linear system of six equations, solved here by Picard iteration
//! from the initial curve `Y = phi(X)`.

use alloc::boxed::Box;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // inherent methods take over when std is linked
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Axis, Grid};
use crate::math::{integrate_line, pow_ext, wrap_angle, HalfAngle};
use crate::model::{ModelSpec2, Regime};
use crate::primitive::Primitive;
use crate::report::{
    BlowupReport, BlowupVariable, ConvergenceHistory, IterationRecord, PhysicalSamples, PqExtrema, TimeLine,
};

type Integrand = Box<dyn Fn(f64) -> f64 + Send + Sync>;

/// Exact curve data at parameter `x` on `t = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub x: f64,
    pub big_x: f64,
    pub big_y: f64,
    pub u: f64,
    pub w: f64,
    pub v: f64,
    pub p: f64,
    pub q: f64,
}

/// Sampled initial curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialCurve {
    pub points: Vec<CurvePoint>,
}

/// `X(x)` and `Y(x)` on `t = 0` with their inverses.
pub struct CurveMap {
    spec: ModelSpec2,
    px: Primitive<Integrand>,
    ps: Primitive<Integrand>,
}

fn density(spec: &ModelSpec2, forward: bool) -> Integrand {
    let s = spec.clone();
    let k = 0.5 / spec.lambda();
    Box::new(move |x| {
        let (r, q) = s.riemann_data(x);
        let z = if forward { r } else { q };
        pow_ext(1.0 + z * z, k)
    })
}

impl CurveMap {
    /// Tabulates the curve far enough to cross both `Y = r` and `X = r`.
    pub fn new(spec: &ModelSpec2, r: f64) -> Result<Self> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::InvalidInput(format!("truncation radius r = {r}")));
        }
        let h = (r / 64.0).min(0.05);
        let ps0 = Primitive::build(density(spec, false), 0.0, 0.0, h, Some(-r), None)?;
        let x_l = ps0.invert(-r, 1e-13)?;
        let px = Primitive::build(density(spec, true), x_l, 0.0, h, None, Some(r))?;
        let x_r = px.invert(r, 1e-13)?;
        let ps = Primitive::build(density(spec, false), x_l, x_r, h, Some(-r), None)?;
        for (lo, hi) in [(x_l, x_r)] {
            if lo < spec.x_domain.0 || hi > spec.x_domain.1 {
                return Err(Error::InvalidInput(format!(
                    "initial curve for r = {r} needs x in [{lo}, {hi}], outside the data domain {:?}",
                    spec.x_domain
                )));
            }
        }
        Ok(CurveMap {
            spec: spec.clone(),
            px,
            ps,
        })
    }

    pub fn big_x(&self, x: f64) -> Result<f64> {
        self.px.eval(x)
    }

    pub fn big_y(&self, x: f64) -> Result<f64> {
        Ok(-self.ps.eval(x)?)
    }

    /// Curve parameter with `X(x) = big_x`.
    pub fn x_at_big_x(&self, big_x: f64) -> Result<f64> {
        self.px.invert(big_x, 1e-13)
    }

    /// Curve parameter with `Y(x) = big_y`.
    pub fn x_at_big_y(&self, big_y: f64) -> Result<f64> {
        self.ps.invert(-big_y, 1e-13)
    }

    /// `phi(X)`: the `Y` coordinate of the curve point with abscissa `X`.
    pub fn phi(&self, big_x: f64) -> Result<f64> {
        self.big_y(self.x_at_big_x(big_x)?)
    }

    pub fn phi_inv(&self, big_y: f64) -> Result<f64> {
        self.big_x(self.x_at_big_y(big_y)?)
    }

    pub fn point(&self, x: f64) -> Result<CurvePoint> {
        let (r, s) = self.spec.riemann_data(x);
        Ok(CurvePoint {
            x,
            big_x: self.big_x(x)?,
            big_y: self.big_y(x)?,
            u: self.spec.u0.value(x),
            w: 2.0 * r.atan(),
            v: 2.0 * s.atan(),
            p: 1.0,
            q: 1.0,
        })
    }
}

/// Samples the initial curve at `n` equispaced parameters on `[xmin, xmax]`.
pub fn build_initial_curve(spec: &ModelSpec2, xmin: f64, xmax: f64, n: usize) -> Result<InitialCurve> {
    if !(xmin < 0.0 && xmax > 0.0) || n < 2 {
        return Err(Error::InvalidInput(format!(
            "initial curve needs xmin < 0 < xmax and n >= 2, got [{xmin}, {xmax}], n = {n}"
        )));
    }
    let h = ((xmax - xmin) / 64.0).min(0.05);
    let px = Primitive::build(density(spec, true), xmin, xmax, h, None, None)?;
    let ps = Primitive::build(density(spec, false), xmin, xmax, h, None, None)?;
    let map = CurveMap {
        spec: spec.clone(),
        px,
        ps,
    };
    let points = (0..n)
        .map(|k| map.point(xmin + (xmax - xmin) * k as f64 / (n - 1) as f64))
        .collect::<Result<Vec<_>>>()?;
    Ok(InitialCurve { points })
}

/// Lattice on `{Y >= phi(X), X <= r, Y <= r}` with the curve data at every
/// row and column origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid2 {
    pub r: f64,
    pub grid: Grid,
    /// Curve point where row `j` starts.
    pub row_curve: Vec<CurvePoint>,
    /// Curve point where column `i` starts.
    pub col_curve: Vec<CurvePoint>,
}

impl Grid2 {
    pub fn new(spec: &ModelSpec2, r: f64, n: usize) -> Result<Self> {
        let map = CurveMap::new(spec, r)?;
        let x_lo = map.phi_inv(r)?;
        let y_lo = map.phi(r)?;
        let a = Axis::spanning(x_lo, r, n)?;
        let b = Axis::spanning(y_lo, r, n)?;
        let row_curve = (0..b.len)
            .map(|j| map.point(map.x_at_big_y(b.at(j))?))
            .collect::<Result<Vec<_>>>()?;
        let col_curve = (0..a.len)
            .map(|i| map.point(map.x_at_big_x(a.at(i))?))
            .collect::<Result<Vec<_>>>()?;
        let row_origin = row_curve.iter().map(|c| c.big_x).collect();
        let col_origin = col_curve.iter().map(|c| c.big_y).collect();
        Ok(Grid2 {
            r,
            grid: Grid::new(a, b, row_origin, col_origin)?,
            row_curve,
            col_curve,
        })
    }

    /// The same lattice with both data angles shifted by `shift`.
    pub fn with_angle_shift(&self, shift: f64) -> Self {
        let mut g = self.clone();
        for c in g.row_curve.iter_mut().chain(g.col_curve.iter_mut()) {
            c.w += shift;
            c.v += shift;
        }
        g
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct State2 {
    pub u: Vec<f64>,
    pub w: Vec<f64>,
    pub v: Vec<f64>,
    pub p: Vec<f64>,
    pub q: Vec<f64>,
}

/// Right-hand sides `(u_X, u_Y, w_Y, v_X, p_Y, q_X)`.
///
/// The first two are `sin w (cos^2(w/2))^e p / (4c)` and
/// `sin v (cos^2(v/2))^e q / (4c)`, the form implied by `X_t + c X_x = 2c X_x`
/// and the definitions of `p`, `q`.
#[inline]
pub fn rhs_wave(u: f64, w: f64, v: f64, p: f64, q: f64, spec: &ModelSpec2) -> [f64; 6] {
    let lam = spec.lambda();
    let e = spec.lambda.cos_exponent();
    let (c, dc) = spec.speed.eval(u);
    let hw = HalfAngle::new(w);
    let hv = HalfAngle::new(v);
    let (sw, sv) = (hw.sin_full(), hv.sin_full());
    let (sw2, cw2, sv2, cv2) = (hw.sin2(), hw.cos2(), hv.sin2(), hv.cos2());
    let (cwe, cve) = (pow_ext(cw2, e), pow_ext(cv2, e));
    let k = dc / (2.0 * c * c);
    let cross = (2.0 * lam - 1.0) / 4.0 * sw * sv;
    let m = (lam - 1.0) / lam;
    let bal = m * (sw * sv2 - sv * sw2) - sw * cv2 + sv * cw2;
    // u_X = R / (2 c X_x) and u_Y = S / (-2 c Y_x).
    let uk = 0.25 / c;
    [
        uk * sw * cwe * p,
        uk * sv * cve * q,
        k * q * cve * (lam * sw2 * cv2 + (lam - 1.0) * sv2 * cw2 - cross),
        k * p * cwe * (lam * sv2 * cw2 + (lam - 1.0) * sw2 * cv2 - cross),
        0.25 * k * p * q * cve * bal,
        -0.25 * k * p * q * cwe * bal,
    ]
}

fn curve_rhs(c: &CurvePoint, spec: &ModelSpec2) -> [f64; 6] {
    rhs_wave(c.u, c.w, c.v, c.p, c.q, spec)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveOptions {
    /// `None` picks `2 (c_max / c_min^2) max|c'| r max(1, (1 - lambda)/lambda)`.
    pub kappa: Option<f64>,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for WaveOptions {
    fn default() -> Self {
        WaveOptions {
            kappa: None,
            tol: 1e-10,
            max_iter: 200,
        }
    }
}

pub fn default_kappa(spec: &ModelSpec2, r: f64) -> f64 {
    let s = &spec.speed;
    let lam = spec.lambda();
    2.0 * (s.c_max / (s.c_min * s.c_min)) * s.dc_sup * r * ((1.0 - lam) / lam).max(1.0)
}

/// Nodes where `p` or `q` was not positive in the converged state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PositivityLossEvent {
    pub count: usize,
    /// `(X, Y)` of the first offending node in row-major order.
    pub first: [f64; 2],
    pub min_p: f64,
    pub min_q: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveSolution {
    pub spec: ModelSpec2,
    pub grid: Grid2,
    pub state: State2,
    pub history: ConvergenceHistory,
    /// `p`, `q` extrema after every sweep.
    pub pq_history: Vec<PqExtrema>,
    pub positivity_loss: Option<PositivityLossEvent>,
}

fn pq_extrema(g: &Grid, st: &State2) -> PqExtrema {
    let (min_p, max_p) = g.extrema(&st.p);
    let (min_q, max_q) = g.extrema(&st.q);
    PqExtrema {
        min_p,
        max_p,
        min_q,
        max_q,
    }
}

/// Initial iterate: curve data extended along the integration directions.
pub fn init_fields2(grid: &Grid2) -> State2 {
    let g = &grid.grid;
    let mut st = State2 {
        u: g.field(),
        w: g.field(),
        v: g.field(),
        p: g.field(),
        q: g.field(),
    };
    for (i, j) in g.nodes() {
        let k = g.idx(i, j);
        let (rc, cc) = (&grid.row_curve[j], &grid.col_curve[i]);
        st.u[k] = rc.u;
        st.v[k] = rc.v;
        st.q[k] = rc.q;
        st.w[k] = cc.w;
        st.p[k] = cc.p;
    }
    st
}

/// Picard iteration: `u`, `v`, `q` integrated in `X` from `(phi^-1(Y), Y)`,
/// `w`, `p` integrated in `Y` from `(X, phi(X))`, trapezoidal rule.
pub fn picard_solve(spec: &ModelSpec2, grid: &Grid2, opts: &WaveOptions) -> Result<WaveSolution> {
    let g = &grid.grid;
    let kappa = opts.kappa.unwrap_or_else(|| default_kappa(spec, grid.r));
    let weights = g.weights(kappa);
    let row_rhs: Vec<[f64; 6]> = grid.row_curve.iter().map(|c| curve_rhs(c, spec)).collect();
    let col_rhs: Vec<[f64; 6]> = grid.col_curve.iter().map(|c| curve_rhs(c, spec)).collect();

    let mut st = init_fields2(grid);
    let mut next = st.clone();
    let mut rhs: [Vec<f64>; 6] = core::array::from_fn(|_| g.field());
    let mut cin = Vec::with_capacity(g.b.len);
    let mut cout = vec![0.0; g.b.len];
    let mut records = Vec::new();
    let mut pq_history = Vec::new();
    let mut converged = false;

    for iter in 1..=opts.max_iter {
        for (i, j) in g.nodes() {
            let k = g.idx(i, j);
            let r = rhs_wave(st.u[k], st.w[k], st.v[k], st.p[k], st.q[k], spec);
            for (f, val) in rhs.iter_mut().zip(r) {
                f[k] = val;
            }
        }
        #[allow(clippy::needless_range_loop)] // mirrors the column loop below
        for j in 0..g.b.len {
            let s = g.row_start[j];
            if s >= g.a.len {
                continue;
            }
            let lo = g.idx(s, j);
            let hi = g.idx(g.a.len - 1, j) + 1;
            let c = &grid.row_curve[j];
            for (value, ri, out) in [
                (c.u, 0, &mut next.u),
                (c.v, 3, &mut next.v),
                (c.q, 5, &mut next.q),
            ] {
                integrate_line(
                    c.big_x,
                    value,
                    row_rhs[j][ri],
                    g.a.at(s),
                    g.a.step,
                    &rhs[ri][lo..hi],
                    &mut out[lo..hi],
                );
            }
        }
        for i in 0..g.a.len {
            let s = g.col_start[i];
            if s >= g.b.len {
                continue;
            }
            let c = &grid.col_curve[i];
            for (value, ri, out) in [(c.w, 2, &mut next.w), (c.p, 4, &mut next.p)] {
                cin.clear();
                cin.extend((s..g.b.len).map(|j| rhs[ri][g.idx(i, j)]));
                let m = cin.len();
                integrate_line(c.big_y, value, col_rhs[i][ri], g.b.at(s), g.b.step, &cin, &mut cout[..m]);
                for (jj, &val) in cout[..m].iter().enumerate() {
                    out[g.idx(i, s + jj)] = val;
                }
            }
        }
        let mut wn: f64 = 0.0;
        let mut sn: f64 = 0.0;
        for (a, b) in [
            (&next.u, &st.u),
            (&next.w, &st.w),
            (&next.v, &st.v),
            (&next.p, &st.p),
            (&next.q, &st.q),
        ] {
            let (x, y) = g.diff_norms(a, b, &weights);
            wn = wn.max(x);
            sn = sn.max(y);
        }
        core::mem::swap(&mut st, &mut next);
        pq_history.push(pq_extrema(g, &st));
        let rec = IterationRecord {
            iter,
            update_norm: wn,
            sup_norm: sn,
        };
        records.push(rec);
        if !sn.is_finite() {
            break;
        }
        if wn < opts.tol && sn < opts.tol {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::FixedPointDivergence {
            iterations: records.len(),
            last_update: records.last().map_or(f64::INFINITY, |r| r.sup_norm),
            history: records.iter().map(|r| r.update_norm).collect(),
        });
    }

    let ext = pq_extrema(g, &st);
    let mut loss: Option<PositivityLossEvent> = None;
    for (i, j) in g.nodes() {
        let k = g.idx(i, j);
        if !(st.p[k] > 0.0 && st.q[k] > 0.0) {
            let e = loss.get_or_insert(PositivityLossEvent {
                count: 0,
                first: [g.a.at(i), g.b.at(j)],
                min_p: ext.min_p,
                min_q: ext.min_q,
            });
            e.count += 1;
        }
    }
    Ok(WaveSolution {
        spec: spec.clone(),
        grid: grid.clone(),
        state: st,
        history: ConvergenceHistory {
            kappa,
            records,
            converged,
        },
        pq_history,
        positivity_loss: loss,
    })
}

/// Largest `|(cos^2(w/2))^e p_Y + (cos^2(v/2))^e q_X|` over interior nodes
/// whose stencil keeps `max(|w|, |v|)` (wrapped) at most `angle_cap`;
/// derivatives by centred differences.
pub fn balance_residual(sol: &WaveSolution, angle_cap: f64) -> f64 {
    let g = &sol.grid.grid;
    let st = &sol.state;
    let e = sol.spec.lambda.cos_exponent();
    let angle = |k: usize| wrap_angle(st.w[k]).abs().max(wrap_angle(st.v[k]).abs());
    let mut worst: f64 = 0.0;
    for (i, j) in g.nodes() {
        if i + 1 >= g.a.len || j + 1 >= g.b.len || j == 0 || i == 0 {
            continue;
        }
        if !(g.masked(i - 1, j) && g.masked(i, j - 1)) {
            continue;
        }
        let k = g.idx(i, j);
        let stencil = [k, g.idx(i - 1, j), g.idx(i + 1, j), g.idx(i, j - 1), g.idx(i, j + 1)];
        if stencil.iter().any(|&s| angle(s) > angle_cap) {
            continue;
        }
        let py = (st.p[g.idx(i, j + 1)] - st.p[g.idx(i, j - 1)]) / (2.0 * g.b.step);
        let qx = (st.q[g.idx(i + 1, j)] - st.q[g.idx(i - 1, j)]) / (2.0 * g.a.step);
        let cw = pow_ext(HalfAngle::new(st.w[k]).cos2(), e);
        let cv = pow_ext(HalfAngle::new(st.v[k]).cos2(), e);
        worst = worst.max((cw * py + cv * qx).abs());
    }
    worst
}

/// Recovered `(x, t)` on the lattice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Inverse2 {
    /// Average of the row and column integrations.
    pub x: Vec<f64>,
    pub t: Vec<f64>,
    /// `t` integrated along rows (in `X`) and along columns (in `Y`).
    pub t_row: Vec<f64>,
    pub t_col: Vec<f64>,
    pub x_row: Vec<f64>,
    pub x_col: Vec<f64>,
    pub mismatch: f64,
    pub tolerance: f64,
}

/// Integrates `t_X = p (cos^2(w/2))^(1/(2 lambda)) / (2c)`, `x_X = c t_X`
/// along rows and `t_Y = q (cos^2(v/2))^(1/(2 lambda)) / (2c)`, `x_Y = -c t_Y`
/// along columns, starting from `t = 0` on the initial curve.
pub fn inverse_transform2(sol: &WaveSolution) -> Result<Inverse2> {
    let spec = &sol.spec;
    let grid = &sol.grid;
    let g = &grid.grid;
    let st = &sol.state;
    let k2 = 0.5 / spec.lambda();
    let tx_of = |u: f64, w: f64, p: f64| {
        let (c, _) = spec.speed.eval(u);
        let t = p * pow_ext(HalfAngle::new(w).cos2(), k2) / (2.0 * c);
        (t, c * t)
    };
    let ty_of = |u: f64, v: f64, q: f64| {
        let (c, _) = spec.speed.eval(u);
        let t = q * pow_ext(HalfAngle::new(v).cos2(), k2) / (2.0 * c);
        (t, -c * t)
    };
    let (mut tx, mut xx, mut ty, mut xy) = (g.field(), g.field(), g.field(), g.field());
    for (i, j) in g.nodes() {
        let k = g.idx(i, j);
        (tx[k], xx[k]) = tx_of(st.u[k], st.w[k], st.p[k]);
        (ty[k], xy[k]) = ty_of(st.u[k], st.v[k], st.q[k]);
    }
    let (mut t_row, mut x_row, mut t_col, mut x_col) = (g.field(), g.field(), g.field(), g.field());
    for j in 0..g.b.len {
        let s = g.row_start[j];
        if s >= g.a.len {
            continue;
        }
        let c = &grid.row_curve[j];
        let (ot, ox) = tx_of(c.u, c.w, c.p);
        let lo = g.idx(s, j);
        let hi = g.idx(g.a.len - 1, j) + 1;
        integrate_line(c.big_x, 0.0, ot, g.a.at(s), g.a.step, &tx[lo..hi], &mut t_row[lo..hi]);
        integrate_line(c.big_x, c.x, ox, g.a.at(s), g.a.step, &xx[lo..hi], &mut x_row[lo..hi]);
    }
    let mut cin = Vec::with_capacity(g.b.len);
    let mut cout = vec![0.0; g.b.len];
    for i in 0..g.a.len {
        let s = g.col_start[i];
        if s >= g.b.len {
            continue;
        }
        let c = &grid.col_curve[i];
        let (ot, ox) = ty_of(c.u, c.v, c.q);
        for (src, out, value, orhs) in [(&ty, &mut t_col, 0.0, ot), (&xy, &mut x_col, c.x, ox)] {
            cin.clear();
            cin.extend((s..g.b.len).map(|j| src[g.idx(i, j)]));
            let m = cin.len();
            integrate_line(c.big_y, value, orhs, g.b.at(s), g.b.step, &cin, &mut cout[..m]);
            for (jj, &val) in cout[..m].iter().enumerate() {
                out[g.idx(i, s + jj)] = val;
            }
        }
    }
    let mismatch = g.sup_diff(&t_row, &t_col).max(g.sup_diff(&x_row, &x_col));
    let (xmin, xmax) = g.extrema(&x_row);
    let (_, tmax) = g.extrema(&t_row);
    let tolerance = g.spacing() * (1.0 + xmin.abs().max(xmax.abs()).max(tmax));
    if !(mismatch <= tolerance) {
        return Err(Error::Compatibility {
            what: "inverse map (X- vs Y-integration)",
            mismatch,
            tolerance,
        });
    }
    let mut x = g.field();
    let mut t = g.field();
    for (i, j) in g.nodes() {
        let k = g.idx(i, j);
        x[k] = 0.5 * (x_row[k] + x_col[k]);
        t[k] = 0.5 * (t_row[k] + t_col[k]);
    }
    Ok(Inverse2 {
        x,
        t,
        t_row,
        t_col,
        x_row,
        x_col,
        mismatch,
        tolerance,
    })
}

/// Whether `t_row` is non-decreasing along every row and `t_col` along
/// every column.
pub fn time_monotone(sol: &WaveSolution, inv: &Inverse2) -> bool {
    let g = &sol.grid.grid;
    let rows = (0..g.b.len).all(|j| {
        (g.row_start[j] + 1..g.a.len).all(|i| inv.t_row[g.idx(i, j)] >= inv.t_row[g.idx(i - 1, j)])
    });
    let cols = (0..g.a.len).all(|i| {
        (g.col_start[i] + 1..g.b.len).all(|j| inv.t_col[g.idx(i, j)] >= inv.t_col[g.idx(i, j - 1)])
    });
    rows && cols
}

/// Solution on `levels` equispaced time levels in `[0, t_top]`, obtained by
/// locating each level along every column of the lattice.
pub fn physical_samples2(sol: &WaveSolution, inv: &Inverse2, levels: usize, t_top: f64) -> PhysicalSamples {
    let g = &sol.grid.grid;
    let st = &sol.state;
    let mut lines = Vec::with_capacity(levels);
    for l in 0..levels {
        let tau = if levels > 1 {
            t_top * l as f64 / (levels - 1) as f64
        } else {
            0.0
        };
        let mut pts: Vec<(f64, f64, f64, f64, f64)> = Vec::new();
        for i in 0..g.a.len {
            let s = g.col_start[i];
            for j in s + 1..g.b.len {
                let (k0, k1) = (g.idx(i, j - 1), g.idx(i, j));
                let (t0, t1) = (inv.t[k0], inv.t[k1]);
                if !(t0 <= tau && tau <= t1) || t1 <= t0 {
                    continue;
                }
                let a = (tau - t0) / (t1 - t0);
                let lerp = |f: &[f64]| f[k0] + a * (f[k1] - f[k0]);
                let (c, _) = sol.spec.speed.eval(lerp(&st.u));
                let r = (0.5 * lerp(&st.w)).tan();
                let sv = (0.5 * lerp(&st.v)).tan();
                pts.push((lerp(&inv.x), lerp(&st.u), (r - sv) / (2.0 * c), g.a.at(i), g.b.at(j - 1) + a * g.b.step));
                break;
            }
        }
        if pts.len() < 2 {
            continue;
        }
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        lines.push(TimeLine {
            t: tau,
            x: pts.iter().map(|p| p.0).collect(),
            u: pts.iter().map(|p| p.1).collect(),
            ux: pts.iter().map(|p| p.2).collect(),
            a: pts.iter().map(|p| p.3).collect(),
            b: pts.iter().map(|p| p.4).collect(),
        });
    }
    PhysicalSamples { lines }
}

/// First node (smallest recovered `t`, or smallest `X + Y` without a map)
/// where `max(|w|, |v|)` (wrapped) reaches `threshold`.
pub fn detect_blowup2(sol: &WaveSolution, inv: Option<&Inverse2>, threshold: f64) -> BlowupReport {
    let g = &sol.grid.grid;
    let st = &sol.state;
    let mut max_angle: f64 = 0.0;
    let mut first: Option<(f64, usize, usize)> = None;
    for (i, j) in g.nodes() {
        let k = g.idx(i, j);
        let a = wrap_angle(st.w[k]).abs().max(wrap_angle(st.v[k]).abs());
        max_angle = max_angle.max(a);
        if a >= threshold {
            let key = inv.map_or(g.a.at(i) + g.b.at(j), |m| m.t[k]);
            if first.is_none_or(|(f, _, _)| key < f) {
                first = Some((key, i, j));
            }
        }
    }
    let variable = first.map(|(_, i, j)| {
        let k = g.idx(i, j);
        let (hw, hv) = (wrap_angle(st.w[k]).abs() >= threshold, wrap_angle(st.v[k]).abs() >= threshold);
        match (hw, hv) {
            (true, false) => BlowupVariable::W,
            (false, true) => BlowupVariable::V,
            _ => BlowupVariable::VOrW,
        }
    });
    BlowupReport {
        detected: first.is_some(),
        threshold,
        variable,
        first_location: first.map(|(_, i, j)| [g.a.at(i), g.b.at(j)]),
        first_physical: first.and_then(|(_, i, j)| inv.map(|m| [m.x[g.idx(i, j)], m.t[g.idx(i, j)]])),
        first_time: first.and_then(|(_, i, j)| inv.map(|m| m.t[g.idx(i, j)])),
        max_angle,
        pq_extrema: Some(pq_extrema(g, st)),
        xi_extrema: None,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n: usize,
    pub extrema: PqExtrema,
    pub blowup_t: Option<f64>,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PqSweepReport {
    pub lambda: f64,
    pub regime: Regime,
    pub rows: Vec<SweepRow>,
    /// Largest relative change of the extrema between consecutive resolutions.
    pub max_relative_change: f64,
    /// Whether that change is below 5%.
    pub cauchy: bool,
}

/// Solves on an `n x n` lattice for every `n` of `resolutions` and tabulates
/// the `p`, `q` extrema.
pub fn pq_stability_sweep(spec: &ModelSpec2, r: f64, resolutions: &[usize], opts: &WaveOptions) -> Result<PqSweepReport> {
    if resolutions.len() < 2 {
        return Err(Error::InvalidInput("the sweep needs at least two resolutions".into()));
    }
    let mut rows = Vec::with_capacity(resolutions.len());
    for &n in resolutions {
        let grid = Grid2::new(spec, r, n)?;
        let sol = picard_solve(spec, &grid, opts)?;
        let inv = inverse_transform2(&sol).ok();
        let rep = detect_blowup2(&sol, inv.as_ref(), crate::report::DEFAULT_BLOWUP_THRESHOLD);
        rows.push(SweepRow {
            n,
            extrema: pq_extrema(&grid.grid, &sol.state),
            blowup_t: rep.first_time,
            iterations: sol.history.iterations(),
        });
    }
    let max_relative_change = rows
        .windows(2)
        .map(|w| w[1].extrema.max_relative_change(&w[0].extrema))
        .fold(0.0, f64::max);
    Ok(PqSweepReport {
        lambda: spec.lambda(),
        regime: spec.lambda.wave_regime(),
        rows,
        max_relative_change,
        cauchy: max_relative_change < 0.05,
    })
}

/// Physical samples on as many levels as the lattice has rows, up to the
/// latest recovered time (the corner `X = Y = r`). Level `t` spans the
/// region between the edges `Y = r` and `X = r`, which shrinks as `t` grows.
pub fn default_samples2(sol: &WaveSolution, inv: &Inverse2) -> PhysicalSamples {
    let g = &sol.grid.grid;
    let (_, t_max) = g.extrema(&inv.t);
    physical_samples2(sol, inv, g.b.len, t_max.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;
    use crate::func::{Func1, Velocity};
    use approx::assert_relative_eq;

    fn flat(lambda: f64) -> ModelSpec2 {
        ModelSpec2::new(lambda, Func1::CosSpeed, Func1::constant(0.0), Velocity::Zero, 20.0).unwrap()
    }

    #[test]
    fn rhs_symmetric_and_constant_speed() {
        let spec = flat(0.3);
        for &(w, p, q) in &[(0.4, 1.0, 2.0), (-2.0, 0.5, 0.7), (PI, 1.0, 1.0)] {
            let r = rhs_wave(0.9, w, w, p, q, &spec);
            for (k, v) in r.iter().enumerate().skip(2) {
                assert!(v.abs() < 1e-15, "{k}: {v}");
            }
        }
        let c1 = ModelSpec2::new(0.25, Func1::constant(1.0), Func1::constant(0.0), Velocity::Zero, 20.0).unwrap();
        let r = rhs_wave(0.2, 0.5, -1.0, 1.0, 1.0, &c1);
        assert!(r[2..].iter().all(|v| *v == 0.0));
        let half = ModelSpec2::new(0.5, Func1::constant(1.0), Func1::constant(0.0), Velocity::Zero, 20.0).unwrap();
        assert_relative_eq!(rhs_wave(0.0, PI / 2.0, 0.0, 1.0, 1.0, &half)[0], 0.25, epsilon = 1e-15);
    }

    #[test]
    fn trivial_curve_is_antidiagonal() {
        let spec = flat(0.25);
        let c = build_initial_curve(&spec, -1.0, 1.0, 9).unwrap();
        for pt in &c.points {
            assert_relative_eq!(pt.big_x, pt.x, epsilon = 1e-13);
            assert_relative_eq!(pt.big_y, -pt.x, epsilon = 1e-13);
            assert_eq!((pt.w, pt.v, pt.p, pt.q), (0.0, 0.0, 1.0, 1.0));
        }
    }

    #[test]
    fn ramp_curve_doubles() {
        let spec = ModelSpec2::new(0.5, Func1::constant(1.0), Func1::Poly(vec![0.0, 1.0]), Velocity::Zero, 20.0).unwrap();
        let c = build_initial_curve(&spec, -1.0, 1.0, 5).unwrap();
        for pt in &c.points {
            assert_relative_eq!(pt.big_x, 2.0 * pt.x, epsilon = 1e-12);
            assert_relative_eq!(pt.big_y, -2.0 * pt.x, epsilon = 1e-12);
        }
    }

    #[test]
    fn zero_data_stays_zero() {
        let spec = flat(0.25);
        let grid = Grid2::new(&spec, 1.0, 17).unwrap();
        let sol = picard_solve(&spec, &grid, &WaveOptions::default()).unwrap();
        let g = &grid.grid;
        for (i, j) in g.nodes() {
            let k = g.idx(i, j);
            assert_eq!((sol.state.u[k], sol.state.w[k], sol.state.p[k]), (0.0, 0.0, 1.0));
        }
        let inv = inverse_transform2(&sol).unwrap();
        // c = sqrt(2) at u = 0: t = (X + Y) / (2c), x = (X - Y) / 2.
        for (i, j) in g.nodes() {
            let k = g.idx(i, j);
            let (x, y) = (g.a.at(i), g.b.at(j));
            assert_relative_eq!(inv.t[k], (x + y) / (2.0 * 2f64.sqrt()), epsilon = 1e-12);
            assert_relative_eq!(inv.x[k], 0.5 * (x - y), epsilon = 1e-12);
        }
        assert!(time_monotone(&sol, &inv));
        assert!(!detect_blowup2(&sol, Some(&inv), 3.0).detected);
    }
}
