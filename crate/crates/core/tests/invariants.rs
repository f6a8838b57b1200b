//! Structural properties of the solvers and oracles.

mod common;

use charwave_core::func::{Func1, Velocity};
use charwave_core::report::{PhysicalSamples, TimeLine};
use charwave_core::unichar::{rhs_semi, solve_fixed_point, Grid1, SolveOptions};
use charwave_core::verify::{compare_fields, fd_solve_wave, holder_quotient, riccati_blowup_time, wave_energy, Profile};
use charwave_core::wavechar::{picard_solve, rhs_wave, time_monotone, Grid2, WaveOptions};
use charwave_core::{builtin_model, Model, ModelSpec1, ModelSpec2};
use common::*;
use proptest::prelude::*;
use std::f64::consts::PI;

fn cos_speed(lambda: f64) -> ModelSpec2 {
    ModelSpec2::new(lambda, Func1::CosSpeed, Func1::constant(0.0), Velocity::Zero, 10.0).unwrap()
}

proptest! {
    #[test]
    fn riemann_identities(x in -15.0..15.0f64) {
        for name in ["paper-fig", "symmetric-wave", "constant-speed"] {
            let spec = wave_model(name);
            let (r0, s0) = spec.riemann_data(x);
            let c = spec.speed.eval(spec.u0.value(x)).0;
            prop_assert!((r0 - s0 - 2.0 * c * spec.u0.d1(x)).abs() < 1e-13);
            prop_assert!((r0 + s0 - 2.0 * spec.u1.value(&spec.u0, x)).abs() < 1e-13);
        }
    }

    #[test]
    fn equal_angles_freeze_w_v_p_q(lambda in 0.05..1.0f64, u in -3.0..3.0f64, w in -3.1..3.1f64,
                                   p in 0.1..5.0f64, q in 0.1..5.0f64) {
        let rhs = rhs_wave(u, w, w, p, q, &cos_speed(lambda));
        for (k, v) in rhs.iter().enumerate().skip(2) {
            prop_assert!(v.abs() < 1e-12, "component {k}: {v}");
        }
    }

    #[test]
    fn constant_speed_moves_only_u(lambda in 0.05..1.0f64, u in -3.0..3.0f64, w in -3.1..3.1f64,
                                   v in -3.1..3.1f64, p in 0.1..5.0f64, q in 0.1..5.0f64) {
        let spec = ModelSpec2::new(lambda, Func1::constant(1.7), Func1::constant(0.0), Velocity::Zero, 10.0).unwrap();
        let rhs = rhs_wave(u, w, v, p, q, &spec);
        prop_assert!(rhs[2..].iter().all(|&r| r == 0.0));
    }

    #[test]
    fn unidirectional_rhs_is_2pi_periodic(lambda in 0.05..0.5f64, u in -2.0..2.0f64, v in -3.1..3.1f64, xi in 0.1..4.0f64) {
        let spec = ModelSpec1::new(lambda, Func1::Poly(vec![0.0, 0.3, 0.5, -0.1]), Func1::constant(0.0), 10.0).unwrap();
        let a = rhs_semi(u, v, xi, &spec);
        let b = rhs_semi(u, v + 2.0 * PI, xi, &spec);
        prop_assert!((a.0 - b.0).abs() < 1e-12 && (a.1 - b.1).abs() < 1e-12 && (a.2 - b.2).abs() < 1e-12);
    }

    #[test]
    fn holder_quotient_is_monotone_in_beta(vals in prop::collection::vec(-2.0..2.0f64, 5 * 40)) {
        let lines = (0..5).map(|l| {
            let x: Vec<f64> = (0..40).map(|k| 3.0 * k as f64 / 39.0).collect();
            TimeLine {
                t: 0.5 * l as f64,
                u: vals[l * 40..(l + 1) * 40].to_vec(),
                ux: vec![0.0; 40],
                a: x.clone(),
                b: vec![0.0; 40],
                x,
            }
        }).collect();
        let s = PhysicalSamples { lines };
        let mut prev = 0.0;
        for beta in [0.1, 0.3, 0.5, 0.75, 1.0] {
            let q = holder_quotient(&s, beta, 400).unwrap().quotient;
            prop_assert!(q >= prev && q >= 0.0);
            prev = q;
        }
    }

    #[test]
    fn comparison_is_nearly_symmetric(k in 0.5..3.0f64, shift in -0.3..0.3f64) {
        let a = Profile {
            x: (0..801).map(|i| i as f64 / 100.0).collect(),
            u: (0..801).map(|i| (k * i as f64 / 100.0).sin()).collect(),
        };
        let xb: Vec<f64> = (0..613).map(|i| 0.2 + i as f64 * 0.013).collect();
        let b = Profile { u: xb.iter().map(|&x| (k * x).sin() + shift * x.cos()).collect(), x: xb };
        let ab = compare_fields(&a, &b, (1.0, 7.0)).unwrap().linf;
        let ba = compare_fields(&b, &a, (1.0, 7.0)).unwrap().linf;
        // second-order interpolation error of the finer of the two spacings
        prop_assert!((ab - ba).abs() <= (k * k + 1.0) * 0.013f64.powi(2), "{ab} {ba}");
    }

    #[test]
    fn riccati_time_ignores_linear_flux_terms(a in 0.0..3.0f64, slope in -3.0..-0.1f64, lambda in 0.05..0.5f64) {
        let f = Func1::Poly(vec![0.0, 0.0, 0.5]);
        let base = ModelSpec1::new(lambda, f.clone(), Func1::dip(slope), 20.0).unwrap();
        let moved = ModelSpec1::new(lambda, f.plus_linear(a).unwrap(), Func1::dip(slope), 20.0).unwrap();
        prop_assert_eq!(riccati_blowup_time(&base).unwrap(), riccati_blowup_time(&moved).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    /// Per-node bounds of the unidirectional solution for random data.
    #[test]
    fn dilation_bounds_and_monotone_x(amp in -1.5..1.5f64, li in 0usize..3, lin in 0.0..0.5f64) {
        let lambda = [0.25, 0.4, 0.5][li];
        let flux = Func1::Poly(vec![0.0, lin, 0.5]);
        let spec = ModelSpec1::new(lambda, flux, Func1::SqExp { amplitude: amp }, 20.0).unwrap();
        let r = 4.0;
        let (sol, inv) = solve1(&spec, r, 48);
        let g = &sol.grid.grid;
        let bound = (0.5 * r * spec.flux.f2_sup).exp();
        for (i, j) in g.nodes() {
            let k = g.idx(i, j);
            prop_assert!(sol.state.xi[k] > 0.0 && sol.state.xi[k] <= bound);
            if i > g.row_start[j] {
                prop_assert!(inv.x[k] >= inv.x[g.idx(i - 1, j)]);
            }
            if !sol.grid.from_data(i) && i == g.row_start[j] {
                prop_assert!(sol.state.u[k].abs() < 1e-12 && sol.state.v[k].abs() < 1e-12);
            }
        }
    }
}

#[test]
fn shifting_data_angles_by_2pi_changes_nothing() {
    let spec = uni_model("riccati-dip");
    let grid = Grid1::new(&spec, 5.0, 128).unwrap();
    let a = solve_fixed_point(&spec, &grid, &SolveOptions::default()).unwrap();
    let b = solve_fixed_point(&spec, &grid.with_angle_shift(2.0 * PI), &SolveOptions::default()).unwrap();
    let g = &grid.grid;
    assert!(g.sup_diff(&a.state.u, &b.state.u) < 1e-9);
    assert!(g.sup_diff(&a.state.xi, &b.state.xi) < 1e-9);

    let spec = wave_model("paper-fig");
    let grid = Grid2::new(&spec, 3.0, 96).unwrap();
    let a = picard_solve(&spec, &grid, &WaveOptions::default()).unwrap();
    let b = picard_solve(&spec, &grid.with_angle_shift(2.0 * PI), &WaveOptions::default()).unwrap();
    let g = &grid.grid;
    for (x, y) in [(&a.state.u, &b.state.u), (&a.state.p, &b.state.p), (&a.state.q, &b.state.q)] {
        assert!(g.sup_diff(x, y) < 1e-9);
    }
}

/// Even data with `u0' = 0` give `R0 = S0` and the curve `Y = -X`; the
/// reflection `x -> -x` becomes `(X, Y) -> (Y, X)` with `w <-> v`, `p <-> q`.
#[test]
fn symmetric_data_mirror_w_and_v() {
    let spec = wave_model("symmetric-wave");
    let (sol, _) = solve2(&spec, 3.0, 128);
    let g = &sol.grid.grid;
    let n = g.a.len;
    assert_eq!(n, g.b.len);
    assert!((g.a.start - g.b.start).abs() < 1e-12 && (g.a.step - g.b.step).abs() < 1e-15);
    let st = &sol.state;
    let mut worst: f64 = 0.0;
    for (i, j) in g.nodes() {
        let (k, m) = (g.idx(i, j), g.idx(j, i));
        // nodes on the curve itself may fall either side of the mask by rounding
        if !g.masked(j, i) {
            assert!(i + j + 1 == n);
            continue;
        }
        worst = worst
            .max((st.w[k] - st.v[m]).abs())
            .max((st.p[k] - st.q[m]).abs())
            .max((st.u[k] - st.u[m]).abs());
    }
    // the sweeps integrate along fixed directions, so the mirror image only
    // agrees to quadrature error
    assert!(worst < 1e-4, "{worst}");
    // the curve itself carries equal angles
    for c in &sol.grid.row_curve {
        assert!((c.w - c.v).abs() < 1e-14);
    }
}

#[test]
fn constant_speed_keeps_p_and_q_at_one() {
    let spec = wave_model("constant-speed");
    let (sol, _) = solve2(&spec, 3.0, 128);
    let g = &sol.grid.grid;
    for f in [&sol.state.p, &sol.state.q] {
        let (lo, hi) = g.extrema(f);
        assert!((lo - 1.0).abs() < 1e-14 && (hi - 1.0).abs() < 1e-14);
    }
    for (i, j) in g.nodes() {
        let k = g.idx(i, j);
        // w is carried along Y from the row curve point, v along X
        assert!((sol.state.w[k] - sol.grid.col_curve[i].w).abs() < 1e-14);
        assert!((sol.state.v[k] - sol.grid.row_curve[j].v).abs() < 1e-14);
    }
}

#[test]
fn every_wave_model_keeps_p_q_positive_and_time_monotone() {
    for name in ["paper-fig", "constant-speed", "symmetric-wave"] {
        for lambda in [0.25, 1.0 / 3.0] {
            let Model::Wave(spec) = builtin_model(name).unwrap().with_lambda(lambda).unwrap() else {
                unreachable!()
            };
            let (sol, inv) = solve2(&spec, 3.0, 128);
            assert!(sol.positivity_loss.is_none(), "{name}");
            assert!(time_monotone(&sol, &inv), "{name}");
            let g = &sol.grid.grid;
            assert!(g.extrema(&inv.t_row).0 >= 0.0 && g.extrema(&inv.t_col).0 >= 0.0);
        }
    }
}

#[test]
fn linear_wave_energy_is_conserved() {
    let spec = ModelSpec2::new(0.25, Func1::constant(1.0), Func1::Sech { amplitude: 1.0, width: 1.0 }, Velocity::Zero, 30.0)
        .unwrap();
    let drift = |nx: usize| {
        let fd = fd_solve_wave(&spec, nx, 30.0, 8.0, 0.5).unwrap();
        let e = wave_energy(&fd, 1.0);
        e.iter().map(|v| (v - e[0]).abs()).fold(0.0, f64::max) / e[0]
    };
    let (coarse, fine) = (drift(1501), drift(3001));
    assert!(fine < 1e-3, "{fine}");
    // second order in dt
    assert!(coarse / fine > 3.0, "{coarse} {fine}");
}
