#![allow(dead_code)]

use charwave_core::report::PhysicalSamples;
use charwave_core::unichar::{inverse_transform, solve_fixed_point, Grid1, Inverse1, SolveOptions, UniSolution};
use charwave_core::verify::Profile;
use charwave_core::wavechar::{inverse_transform2, picard_solve, Grid2, Inverse2, WaveOptions, WaveSolution};
use charwave_core::{builtin_model, Model, ModelSpec1, ModelSpec2};

pub fn uni_model(name: &str) -> ModelSpec1 {
    match builtin_model(name).unwrap() {
        Model::Unidirectional(s) => s,
        Model::Wave(_) => panic!("{name} is a wave model"),
    }
}

pub fn wave_model(name: &str) -> ModelSpec2 {
    match builtin_model(name).unwrap() {
        Model::Wave(s) => s,
        Model::Unidirectional(_) => panic!("{name} is unidirectional"),
    }
}

pub fn solve1(spec: &ModelSpec1, r: f64, n: usize) -> (UniSolution, Inverse1) {
    let grid = Grid1::new(spec, r, n).unwrap();
    let sol = solve_fixed_point(spec, &grid, &SolveOptions::default()).unwrap();
    let inv = inverse_transform(&sol).unwrap();
    (sol, inv)
}

pub fn solve2(spec: &ModelSpec2, r: f64, n: usize) -> (WaveSolution, Inverse2) {
    let grid = Grid2::new(spec, r, n).map_err(|e| e.to_string()).unwrap();
    let sol = picard_solve(spec, &grid, &WaveOptions::default()).unwrap();
    let inv = inverse_transform2(&sol).unwrap();
    (sol, inv)
}

/// The recovered solution on level `t`, restricted to the `x`-range both
/// bracketing lines cover.
pub fn profile_at(samples: &PhysicalSamples, t: f64, points: usize) -> Profile {
    let (lo, hi) = samples.x_range_at_time(t).unwrap();
    let x: Vec<f64> = (0..points).map(|k| lo + (hi - lo) * k as f64 / (points - 1) as f64).collect();
    let u = samples.u_at_time(t, &x).unwrap();
    Profile { x, u }
}
