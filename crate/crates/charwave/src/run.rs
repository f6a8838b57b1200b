//! Experiment orchestration: solve, verify, sweep and the frozen figure
//! reproductions.

use std::path::{Path, PathBuf};

use serde::Serialize;

use charwave_core::func::Func1;
use charwave_core::math::wrap_angle;
use charwave_core::model::ValidationReport;
use charwave_core::report::{BlowupReport, ConvergenceHistory, PhysicalSamples, PqExtrema, DEFAULT_BLOWUP_THRESHOLD};
use charwave_core::testfn::Bump;
use charwave_core::unichar::{
    detect_blowup1, energy_residual, inverse_transform, solve_fixed_point, weak_residual, Grid1, Inverse1, SolveOptions,
    UniSolution,
};
use charwave_core::verify::{
    compare_fields, convergence_order, dalembert_exact, fd_solve_uni, fd_solve_wave, holder_quotient,
    riccati_blowup_time, HolderReport, Profile,
};
use charwave_core::wavechar::{
    balance_residual, default_samples2, detect_blowup2, inverse_transform2, picard_solve, pq_stability_sweep,
    time_monotone, Grid2, Inverse2, PositivityLossEvent, PqSweepReport, WaveOptions, WaveSolution,
};
use charwave_core::{builtin_model, Model, ModelSpec1, ModelSpec2, Regime};

use crate::config::{Experiment, RunConfig};
use crate::error::CliError;
use crate::output::{to_json, Cell, Table};

/// Largest wrapped angle kept in the balance-law stencil.
pub const BALANCE_ANGLE_CAP: f64 = 3.0;
/// Fraction of `pi` that `|w|` must reach for the figure verdict.
pub const FIGURE_ANGLE_FRACTION: f64 = 0.95;
/// Resolutions of the `p`, `q` Cauchy check in the figure reproductions.
pub const FIGURE_SWEEP: [usize; 2] = [256, 512];
/// Step of the CFL-limited direct schemes in the verify experiment.
pub const VERIFY_CFL: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Figure {
    Quarter,
    Third,
}

impl Figure {
    pub fn lambda(self) -> f64 {
        match self {
            Figure::Quarter => 0.25,
            Figure::Third => 1.0 / 3.0,
        }
    }

    pub fn experiment(self) -> Experiment {
        match self {
            Figure::Quarter => Experiment::ReproduceFigQuarter,
            Figure::Third => Experiment::ReproduceFigThird,
        }
    }
}

/// The pinned configuration of a figure reproduction.
pub fn frozen_config(fig: Figure, outputs: &str) -> RunConfig {
    let model = builtin_model("paper-fig")
        .and_then(|m| m.with_lambda(fig.lambda()))
        .expect("the figure model is registered");
    RunConfig {
        model,
        r: 3.0,
        n: 512,
        tol: 1e-10,
        max_iter: 200,
        kappa: None,
        outputs: outputs.to_string(),
        experiment: fig.experiment(),
        lambdas: Vec::new(),
        holder_pairs: 4000,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceSummary {
    pub kappa: f64,
    pub iterations: usize,
    pub converged: bool,
    pub final_update: f64,
    pub final_sup_update: f64,
    /// Largest weighted-norm ratio after the second iterate.
    pub max_ratio_after_second: f64,
}

impl ConvergenceSummary {
    fn of(h: &ConvergenceHistory) -> Self {
        let last = h.records.last();
        ConvergenceSummary {
            kappa: h.kappa,
            iterations: h.iterations(),
            converged: h.converged,
            final_update: last.map_or(f64::NAN, |r| r.update_norm),
            final_sup_update: last.map_or(f64::NAN, |r| r.sup_norm),
            max_ratio_after_second: h.max_ratio_from(2, 1e-13),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct Residuals {
    /// Energy law over `t <= energy_t_max`.
    pub energy: Option<f64>,
    pub energy_t_max: Option<f64>,
    pub weak: Option<f64>,
    pub weak_bumps: usize,
    pub balance: Option<f64>,
    pub balance_angle_cap: Option<f64>,
    pub inverse_mismatch: f64,
    pub inverse_tolerance: f64,
    pub s_u_mismatch: Option<f64>,
    pub cross_derivative: Option<f64>,
    pub time_monotone: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveReport {
    pub equation: &'static str,
    pub lambda: f64,
    pub regime: Regime,
    pub r: f64,
    pub n: usize,
    pub validation: ValidationReport,
    pub convergence: ConvergenceSummary,
    pub blowup: BlowupReport,
    /// `exp(r sup|f''| / 2)`, the a-priori bound on `xi`.
    pub xi_bound: Option<f64>,
    pub positivity_loss: Option<PositivityLossEvent>,
    pub recovered_t_max: f64,
    pub residuals: Residuals,
    pub holder: Vec<HolderReport>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RefinementRun {
    pub n: usize,
    pub h: f64,
    pub linf: f64,
    pub l2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleCheck {
    pub name: String,
    pub t: Option<f64>,
    pub reference: Option<f64>,
    pub measured: Option<f64>,
    pub runs: Vec<RefinementRun>,
    pub order: Option<f64>,
    pub bound: f64,
    pub passed: bool,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepEntry {
    pub lambda: f64,
    pub directory: String,
    pub regime: Regime,
    pub iterations: usize,
    pub converged: bool,
    pub blowup_detected: bool,
    pub blowup_time: Option<f64>,
    pub max_angle: f64,
    pub xi_extrema: Option<[f64; 2]>,
    pub pq_extrema: Option<PqExtrema>,
    pub holder_quotient: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FigureVerdict {
    pub lambda: f64,
    pub max_w: f64,
    pub angle_target: f64,
    pub w_reaches_target: bool,
    pub p_q_positive: bool,
    pub pq_sweep: PqSweepReport,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub version: &'static str,
    pub experiment: Experiment,
    pub config: ConfigEcho,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solve: Option<SolveReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verify: Option<Vec<OracleCheck>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<Vec<SweepEntry>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub figure: Option<FigureVerdict>,
}

/// The configuration minus the output location, so reruns into another
/// directory stay byte-identical.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfigEcho {
    pub model: Model,
    pub r: f64,
    pub n: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub kappa: Option<f64>,
    pub lambdas: Vec<f64>,
    pub holder_pairs: usize,
}

impl ConfigEcho {
    fn of(c: &RunConfig) -> Self {
        ConfigEcho {
            model: c.model.clone(),
            r: c.r,
            n: c.n,
            tol: c.tol,
            max_iter: c.max_iter,
            kappa: c.kappa,
            lambdas: c.lambdas.clone(),
            holder_pairs: c.holder_pairs,
        }
    }
}

/// Solution, inverse map and physical samples of either equation.
pub enum Solved {
    Uni(Box<UniSolution>, Box<Inverse1>),
    Wave(Box<WaveSolution>, Box<Inverse2>, PhysicalSamples),
}

impl Solved {
    pub fn samples(&self) -> &PhysicalSamples {
        match self {
            Solved::Uni(_, inv) => &inv.samples,
            Solved::Wave(_, _, s) => s,
        }
    }

    pub fn history(&self) -> &ConvergenceHistory {
        match self {
            Solved::Uni(s, _) => &s.history,
            Solved::Wave(s, _, _) => &s.history,
        }
    }
}

pub fn solve_model(model: &Model, r: f64, n: usize, cfg: &RunConfig) -> Result<Solved, CliError> {
    match model {
        Model::Unidirectional(spec) => {
            let grid = Grid1::new(spec, r, n)?;
            let opts = SolveOptions {
                kappa: cfg.kappa,
                tol: cfg.tol,
                max_iter: cfg.max_iter,
            };
            let sol = solve_fixed_point(spec, &grid, &opts)?;
            let inv = inverse_transform(&sol)?;
            Ok(Solved::Uni(Box::new(sol), Box::new(inv)))
        }
        Model::Wave(spec) => {
            let grid = Grid2::new(spec, r, n)?;
            let sol = picard_solve(spec, &grid, &wave_options(cfg))?;
            let inv = inverse_transform2(&sol)?;
            let samples = default_samples2(&sol, &inv);
            Ok(Solved::Wave(Box::new(sol), Box::new(inv), samples))
        }
    }
}

fn wave_options(cfg: &RunConfig) -> WaveOptions {
    WaveOptions {
        kappa: cfg.kappa,
        tol: cfg.tol,
        max_iter: cfg.max_iter,
    }
}

fn lambda_of(model: &Model) -> f64 {
    match model {
        Model::Unidirectional(s) => s.lambda(),
        Model::Wave(s) => s.lambda(),
    }
}

/// Exponents `1 - lambda` and `1 - lambda + 0.1` (when still at most one).
pub fn holder_betas(lambda: f64) -> Vec<f64> {
    let b = 1.0 - lambda;
    if b + 0.1 <= 1.0 {
        vec![b, b + 0.1]
    } else {
        vec![b]
    }
}

/// Ten bumps tiling the solved region of a unidirectional run, clear of
/// the `x = 0` boundary, the top edge and the moving right edge.
pub fn default_bumps(sol: &UniSolution, inv: &Inverse1) -> Vec<Bump> {
    let r = sol.grid.domain.r;
    let t_range = (r / 12.0, 11.0 * r / 12.0);
    let x_edge = inv
        .samples
        .lines
        .iter()
        .filter(|l| l.t <= t_range.1)
        .map(|l| l.x_range().1)
        .fold(f64::INFINITY, f64::min);
    if !(x_edge.is_finite() && x_edge > 0.0) {
        return Vec::new();
    }
    Bump::family((0.05 * x_edge, 0.95 * x_edge), t_range, 5, 2)
}

fn diagnose(cfg: &RunConfig, solved: &Solved, validation: ValidationReport) -> Result<SolveReport, CliError> {
    let lambda = lambda_of(&cfg.model);
    let mut warnings = validation.warnings.clone();
    let mut residuals = Residuals::default();
    let (blowup, xi_bound, positivity_loss, equation, regime) = match solved {
        Solved::Uni(sol, inv) => {
            let blowup = detect_blowup1(sol, Some(inv), DEFAULT_BLOWUP_THRESHOLD);
            // The energy law holds where the solution is still smooth.
            let t_smooth = blowup.first_time.map_or(cfg.r, |t| 0.25 * t);
            residuals.energy_t_max = Some(t_smooth);
            residuals.energy = match energy_residual(&inv.samples.restrict_t(0.0, t_smooth), &sol.spec) {
                Ok(v) => Some(v),
                Err(e) => {
                    warnings.push(format!("energy residual skipped: {e}"));
                    None
                }
            };
            let bumps = default_bumps(sol, inv);
            residuals.weak_bumps = bumps.len();
            residuals.weak = match weak_residual(sol, inv, &bumps) {
                Ok(v) if !bumps.is_empty() => Some(v),
                Ok(_) => None,
                Err(e) => {
                    warnings.push(format!("weak residual skipped: {e}"));
                    None
                }
            };
            residuals.inverse_mismatch = inv.mismatch;
            residuals.inverse_tolerance = inv.tolerance;
            residuals.s_u_mismatch = sol.s_check.map(|c| c.u_mismatch);
            residuals.cross_derivative = sol.s_check.map(|c| c.cross_derivative);
            let xi_bound = (0.5 * sol.grid.domain.r * sol.spec.flux.f2_sup).exp();
            (blowup, Some(xi_bound), None, "unidirectional", sol.spec.lambda.regime())
        }
        Solved::Wave(sol, inv, _) => {
            let blowup = detect_blowup2(sol, Some(inv), DEFAULT_BLOWUP_THRESHOLD);
            residuals.balance = Some(balance_residual(sol, BALANCE_ANGLE_CAP));
            residuals.balance_angle_cap = Some(BALANCE_ANGLE_CAP);
            residuals.inverse_mismatch = inv.mismatch;
            residuals.inverse_tolerance = inv.tolerance;
            let mono = time_monotone(sol, inv);
            if !mono {
                warnings.push("recovered t decreases along a characteristic".into());
            }
            residuals.time_monotone = Some(mono);
            (blowup, None, sol.positivity_loss, "wave", sol.spec.lambda.wave_regime())
        }
    };
    let samples = solved.samples();
    let recovered_t_max = samples.lines.last().map_or(0.0, |l| l.t);
    let mut holder = Vec::new();
    for beta in holder_betas(lambda) {
        match holder_quotient(samples, beta, cfg.holder_pairs) {
            Ok(h) => holder.push(h),
            Err(e) => warnings.push(format!("Holder quotient at beta = {beta} skipped: {e}")),
        }
    }
    if !solved.history().converged {
        warnings.push("Picard iteration stopped at max_iter before reaching tol".into());
    }
    Ok(SolveReport {
        equation,
        lambda,
        regime,
        r: cfg.r,
        n: cfg.n,
        validation,
        convergence: ConvergenceSummary::of(solved.history()),
        blowup,
        xi_bound,
        positivity_loss,
        recovered_t_max,
        residuals,
        holder,
        warnings,
    })
}

fn validated(model: &Model) -> Result<ValidationReport, CliError> {
    let v = model.validate()?;
    if !v.passed() {
        let failed: Vec<String> = v
            .conditions
            .iter()
            .filter(|c| !c.passed)
            .map(|c| format!("{} (measured {})", c.name, c.measured))
            .collect();
        return Err(CliError::Validation(failed.join("; ")));
    }
    Ok(v)
}

fn write_fields(dir: &Path, solved: &Solved) -> Result<(), CliError> {
    let fields = dir.join("fields");
    match solved {
        Solved::Uni(sol, inv) => {
            let g = &sol.grid.grid;
            let st = &sol.state;
            let mut header = vec!["Y", "T", "u", "v", "xi"];
            if st.s.is_some() {
                header.push("S");
            }
            let mut state = Table::new(&header);
            let mut map = Table::new(&["Y", "T", "x", "x_alt"]);
            for (i, j) in g.nodes() {
                let k = g.idx(i, j);
                let mut row = vec![g.a.at(i), g.b.at(j), st.u[k], st.v[k], st.xi[k]];
                if let Some(s) = &st.s {
                    row.push(s[k]);
                }
                state.floats(&row);
                map.floats(&[g.a.at(i), g.b.at(j), inv.x[k], inv.x_alt[k]]);
            }
            state.write(&fields.join("state.csv"))?;
            map.write(&dir.join("map.csv"))?;
        }
        Solved::Wave(sol, inv, _) => {
            let g = &sol.grid.grid;
            let st = &sol.state;
            let mut state = Table::new(&["X", "Y", "u", "w", "v", "p", "q"]);
            let mut map = Table::new(&["X", "Y", "x", "t", "x_row", "x_col", "t_row", "t_col"]);
            let names = ["u", "w", "v", "p", "q"];
            let mut single: Vec<Table> = names.iter().map(|n| Table::new(&["X", "Y", n])).collect();
            for (i, j) in g.nodes() {
                let k = g.idx(i, j);
                let (xa, yb) = (g.a.at(i), g.b.at(j));
                let vals = [st.u[k], st.w[k], st.v[k], st.p[k], st.q[k]];
                state.floats(&[xa, yb, vals[0], vals[1], vals[2], vals[3], vals[4]]);
                for (t, v) in single.iter_mut().zip(vals) {
                    t.floats(&[xa, yb, v]);
                }
                map.floats(&[xa, yb, inv.x[k], inv.t[k], inv.x_row[k], inv.x_col[k], inv.t_row[k], inv.t_col[k]]);
            }
            state.write(&fields.join("state.csv"))?;
            for (t, n) in single.iter().zip(names) {
                t.write(&fields.join(format!("{n}.csv")))?;
            }
            map.write(&dir.join("map.csv"))?;
        }
    }
    let (ca, cb) = match solved {
        Solved::Uni(..) => ("Y", "T"),
        Solved::Wave(..) => ("X", "Y"),
    };
    let mut phys = Table::new(&["t", "x", "u", "ux", ca, cb]);
    for line in &solved.samples().lines {
        for k in 0..line.x.len() {
            phys.floats(&[line.t, line.x[k], line.u[k], line.ux[k], line.a[k], line.b[k]]);
        }
    }
    phys.write(&fields.join("physical.csv"))
}

#[derive(Serialize)]
struct HistoryFile<'a> {
    history: &'a ConvergenceHistory,
    #[serde(skip_serializing_if = "Option::is_none")]
    pq_history: Option<&'a [PqExtrema]>,
}

fn write_history(dir: &Path, solved: &Solved) -> Result<(), CliError> {
    let file = HistoryFile {
        history: solved.history(),
        pq_history: match solved {
            Solved::Wave(s, _, _) => Some(&s.pq_history),
            Solved::Uni(..) => None,
        },
    };
    crate::output::write_file(&dir.join("history.json"), &to_json(&file))
}

/// Validates and solves the configured model and computes the diagnostics,
/// without writing anything.
pub fn solve_and_diagnose(cfg: &RunConfig) -> Result<(SolveReport, Solved), CliError> {
    let validation = validated(&cfg.model)?;
    let solved = solve_model(&cfg.model, cfg.r, cfg.n, cfg)?;
    let report = diagnose(cfg, &solved, validation)?;
    Ok((report, solved))
}

/// [`solve_and_diagnose`], then the fields and history under `dir`.
pub fn run_solve(cfg: &RunConfig, dir: &Path) -> Result<(SolveReport, Solved), CliError> {
    let (report, solved) = solve_and_diagnose(cfg)?;
    write_fields(dir, &solved)?;
    write_history(dir, &solved)?;
    Ok((report, solved))
}

fn refinement_levels(n: usize) -> Vec<usize> {
    vec![(n / 4).max(16), (n / 2).max(16), n]
}

fn profile_at(samples: &PhysicalSamples, t: f64, points: usize) -> Option<Profile> {
    let (lo, hi) = samples.x_range_at_time(t)?;
    let x: Vec<f64> = (0..points).map(|k| lo + (hi - lo) * k as f64 / (points - 1) as f64).collect();
    let u = samples.u_at_time(t, &x)?;
    Some(Profile { x, u })
}

fn finish_check(name: &str, t: f64, runs: Vec<RefinementRun>, bound: f64) -> Result<OracleCheck, CliError> {
    let pairs: Vec<(f64, f64)> = runs.iter().map(|r| (r.h, r.linf)).collect();
    let order = convergence_order(&pairs).ok();
    let finest = runs.last().map_or(f64::INFINITY, |r| r.linf);
    Ok(OracleCheck {
        name: name.into(),
        t: Some(t),
        reference: None,
        measured: Some(finest),
        passed: finest <= bound && order.is_some_and(|o| o >= 0.8),
        runs,
        order,
        bound,
        note: None,
    })
}

fn verify_uni(spec: &ModelSpec1, cfg: &RunConfig) -> Result<Vec<OracleCheck>, CliError> {
    let model = Model::Unidirectional(spec.clone());
    let mut checks = Vec::new();
    let t_star = match riccati_blowup_time(spec) {
        Ok(t) => t,
        Err(charwave_core::Error::NotApplicable(_)) => None,
        Err(e) => return Err(e.into()),
    };
    if let Some(ts) = t_star {
        let mut check = OracleCheck {
            name: "riccati-blowup-time".into(),
            t: None,
            reference: Some(ts),
            measured: None,
            runs: Vec::new(),
            order: None,
            bound: 0.02,
            passed: false,
            note: None,
        };
        if ts < cfg.r {
            let Solved::Uni(sol, inv) = solve_model(&model, cfg.r, cfg.n, cfg)? else {
                unreachable!()
            };
            let found = detect_blowup1(&sol, Some(&inv), DEFAULT_BLOWUP_THRESHOLD).first_time;
            check.measured = found;
            check.passed = found.is_some_and(|t| (t - ts).abs() <= 0.02 * ts);
        } else {
            check.note = Some(format!("closed-form time {ts} lies beyond r = {}", cfg.r));
        }
        checks.push(check);
    }
    let t_cmp = t_star.map_or(0.25 * cfg.r, |t| 0.25 * t).min(0.5 * cfg.r);
    let x_max = spec.x_domain.1;
    let mut runs = Vec::new();
    for n in refinement_levels(cfg.n) {
        let Solved::Uni(_, inv) = solve_model(&model, cfg.r, n, cfg)? else {
            unreachable!()
        };
        let h = cfg.r / (n - 1) as f64;
        let fd = fd_solve_uni(spec, (x_max / h).round() as usize + 1, x_max, t_cmp, VERIFY_CFL)?;
        let ours = profile_at(&inv.samples, t_cmp, 2001)
            .ok_or_else(|| charwave_core::Error::Window(format!("no recovered level at t = {t_cmp}")))?;
        let reference = fd.profile_at(t_cmp).expect("the direct scheme reaches t_end");
        let cmp = compare_fields(&ours, &reference, (0.0, x_max))?;
        runs.push(RefinementRun {
            n,
            h,
            linf: cmp.linf,
            l2: cmp.l2,
        });
    }
    checks.push(finish_check("direct-scheme", t_cmp, runs, 1e-2)?);
    Ok(checks)
}

fn verify_wave(spec: &ModelSpec2, cfg: &RunConfig) -> Result<Vec<OracleCheck>, CliError> {
    let model = Model::Wave(spec.clone());
    let mut checks = Vec::new();
    let hw = spec.x_domain.1;
    let mut t_top = f64::INFINITY;
    let mut runs = Vec::new();
    for n in refinement_levels(cfg.n) {
        let solved = solve_model(&model, cfg.r, n, cfg)?;
        t_top = t_top.min(solved.samples().lines.last().map_or(0.0, |l| l.t));
        runs.push((n, solved));
    }
    if let Func1::Poly(c) = &spec.speed.c {
        if c.len() == 1 {
            let c0 = c[0];
            let (_, solved) = runs.last().unwrap();
            let mut worst: f64 = 0.0;
            for line in &solved.samples().lines {
                for (&x, &u) in line.x.iter().zip(&line.u) {
                    worst = worst.max((u - dalembert_exact(c0, &spec.u0, &spec.u1, x, line.t)?).abs());
                }
            }
            checks.push(OracleCheck {
                name: "dalembert".into(),
                t: None,
                reference: None,
                measured: Some(worst),
                runs: Vec::new(),
                order: None,
                bound: 1e-3,
                passed: worst <= 1e-3,
                note: None,
            });
        }
    }
    let t_cmp = t_top / 3.0;
    let mut table = Vec::new();
    for (n, solved) in &runs {
        let h = 2.0 * cfg.r / (n - 1) as f64;
        let fd = fd_solve_wave(spec, (2.0 * hw / h).round() as usize + 1, hw, t_cmp, VERIFY_CFL)?;
        let ours = profile_at(solved.samples(), t_cmp, 2001)
            .ok_or_else(|| charwave_core::Error::Window(format!("no recovered level at t = {t_cmp}")))?;
        let reference = fd.profile_at(t_cmp).expect("the direct scheme reaches t_end");
        let cmp = compare_fields(&ours, &reference, (-hw, hw))?;
        table.push(RefinementRun {
            n: *n,
            h,
            linf: cmp.linf,
            l2: cmp.l2,
        });
    }
    checks.push(finish_check("direct-scheme", t_cmp, table, 1e-2)?);
    Ok(checks)
}

fn sweep_entry(lambda: f64, directory: String, rep: &SolveReport) -> SweepEntry {
    SweepEntry {
        lambda,
        directory,
        regime: rep.regime,
        iterations: rep.convergence.iterations,
        converged: rep.convergence.converged,
        blowup_detected: rep.blowup.detected,
        blowup_time: rep.blowup.first_time,
        max_angle: rep.blowup.max_angle,
        xi_extrema: rep.blowup.xi_extrema,
        pq_extrema: rep.blowup.pq_extrema,
        holder_quotient: rep.holder.first().map(|h| h.quotient),
    }
}

/// Worker count: `CHARWAVE_THREADS` if set, else the available parallelism.
pub fn thread_cap() -> usize {
    std::env::var("CHARWAVE_THREADS")
        .ok()
        .and_then(|s| s.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

fn run_sweep(cfg: &RunConfig, dir: &Path) -> Result<Vec<SweepEntry>, CliError> {
    if cfg.lambdas.is_empty() {
        return Err(CliError::Config {
            pointer: "/lambdas".into(),
            message: "a sweep needs at least one lambda".into(),
        });
    }
    let mut jobs = Vec::new();
    for &l in &cfg.lambdas {
        let model = cfg.model.clone().with_lambda(l)?;
        let sub = RunConfig {
            model,
            experiment: Experiment::Solve,
            lambdas: Vec::new(),
            ..cfg.clone()
        };
        jobs.push((l, format!("lambda-{l}"), sub));
    }
    let workers = thread_cap().min(jobs.len());
    let mut results: Vec<Option<Result<SweepEntry, CliError>>> = (0..jobs.len()).map(|_| None).collect();
    std::thread::scope(|s| {
        let chunks: Vec<Vec<usize>> = (0..workers).map(|w| (w..jobs.len()).step_by(workers).collect()).collect();
        let handles: Vec<_> = chunks
            .into_iter()
            .map(|idx| {
                let jobs = &jobs;
                s.spawn(move || {
                    idx.into_iter()
                        .map(|k| {
                            let (l, name, sub) = &jobs[k];
                            let out = dir.join(name);
                            let res = run_solve(sub, &out).and_then(|(rep, _)| {
                                let full = RunReport {
                                    version: env!("CARGO_PKG_VERSION"),
                                    experiment: Experiment::Solve,
                                    config: ConfigEcho::of(sub),
                                    solve: Some(rep.clone()),
                                    verify: None,
                                    sweep: None,
                                    figure: None,
                                };
                                crate::output::write_file(&out.join("report.json"), &to_json(&full))?;
                                Ok(sweep_entry(*l, name.clone(), &rep))
                            });
                            (k, res)
                        })
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        for h in handles {
            for (k, res) in h.join().expect("sweep worker panicked") {
                results[k] = Some(res);
            }
        }
    });
    let entries = results
        .into_iter()
        .map(|r| r.expect("every job ran"))
        .collect::<Result<Vec<_>, _>>()?;
    let mut table = Table::new(&[
        "lambda",
        "regime",
        "iterations",
        "converged",
        "blowup_detected",
        "blowup_time",
        "max_angle",
        "xi_min",
        "xi_max",
        "p_min",
        "p_max",
        "q_min",
        "q_max",
        "holder_quotient",
    ]);
    for e in &entries {
        let regime = crate::output::to_json_compact(&e.regime);
        let xi = e.xi_extrema;
        let pq = e.pq_extrema;
        table.row(&[
            Cell::F(e.lambda),
            Cell::S(regime.trim_matches('"')),
            Cell::I(e.iterations),
            Cell::B(e.converged),
            Cell::B(e.blowup_detected),
            Cell::Opt(e.blowup_time),
            Cell::F(e.max_angle),
            Cell::Opt(xi.map(|x| x[0])),
            Cell::Opt(xi.map(|x| x[1])),
            Cell::Opt(pq.map(|p| p.min_p)),
            Cell::Opt(pq.map(|p| p.max_p)),
            Cell::Opt(pq.map(|p| p.min_q)),
            Cell::Opt(pq.map(|p| p.max_q)),
            Cell::Opt(e.holder_quotient),
        ]);
    }
    table.write(&dir.join("sweep.csv"))?;
    Ok(entries)
}

fn figure_verdict(cfg: &RunConfig, fig: Figure, solved: &Solved) -> Result<FigureVerdict, CliError> {
    let (Model::Wave(spec), Solved::Wave(sol, _, _)) = (&cfg.model, solved) else {
        unreachable!("figure reproductions are wave runs")
    };
    let g = &sol.grid.grid;
    let max_w = g
        .nodes()
        .map(|(i, j)| wrap_angle(sol.state.w[g.idx(i, j)]).abs())
        .fold(0.0, f64::max);
    let pq_sweep = pq_stability_sweep(spec, cfg.r, &FIGURE_SWEEP, &wave_options(cfg))?;
    let angle_target = FIGURE_ANGLE_FRACTION * std::f64::consts::PI;
    let p_q_positive = pq_sweep.rows.iter().all(|r| r.extrema.positive_and_bounded());
    let w_reaches_target = max_w >= angle_target;
    Ok(FigureVerdict {
        lambda: fig.lambda(),
        max_w,
        angle_target,
        w_reaches_target,
        p_q_positive,
        passed: w_reaches_target && p_q_positive && pq_sweep.cauchy,
        pq_sweep,
    })
}

/// Runs the configured experiment into `dir` and writes `report.json`.
pub fn run(cfg: &RunConfig, dir: &Path) -> Result<RunReport, CliError> {
    let figure = match cfg.experiment {
        Experiment::ReproduceFigQuarter => Some(Figure::Quarter),
        Experiment::ReproduceFigThird => Some(Figure::Third),
        _ => None,
    };
    let frozen;
    let cfg = match figure {
        Some(f) => {
            frozen = frozen_config(f, &cfg.outputs);
            &frozen
        }
        None => cfg,
    };
    let mut report = RunReport {
        version: env!("CARGO_PKG_VERSION"),
        experiment: cfg.experiment,
        config: ConfigEcho::of(cfg),
        solve: None,
        verify: None,
        sweep: None,
        figure: None,
    };
    match cfg.experiment {
        Experiment::Solve => {
            report.solve = Some(run_solve(cfg, dir)?.0);
        }
        Experiment::ReproduceFigQuarter | Experiment::ReproduceFigThird => {
            let (rep, solved) = run_solve(cfg, dir)?;
            report.figure = Some(figure_verdict(cfg, figure.unwrap(), &solved)?);
            report.solve = Some(rep);
        }
        Experiment::Verify => {
            validated(&cfg.model)?;
            report.verify = Some(match &cfg.model {
                Model::Unidirectional(s) => verify_uni(s, cfg)?,
                Model::Wave(s) => verify_wave(s, cfg)?,
            });
        }
        Experiment::Sweep => {
            report.sweep = Some(run_sweep(cfg, dir)?);
        }
    }
    crate::output::write_file(&dir.join("report.json"), &to_json(&report))?;
    Ok(report)
}

/// Output directory: `--out` when given, else the config's `outputs`.
pub fn out_dir(cfg: &RunConfig, over: Option<&Path>) -> PathBuf {
    over.map_or_else(|| PathBuf::from(&cfg.outputs), Path::to_path_buf)
}
