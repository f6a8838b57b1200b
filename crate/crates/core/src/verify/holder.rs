//! Sampled Hölder quotients `|u(P1) - u(P2)| / dist(P1, P2)^beta`.
//!
//! Both axes are rescaled to unit length and the distance is the Chebyshev
//! one, so every sampled distance is at most 1 and the quotient can only grow
//! with `beta` on a fixed pair set.

use alloc::format;
use alloc::vec::Vec;

#[allow(unused_imports)] // inherent methods take over when std is linked
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::report::{PhysicalSamples, TimeLine};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolderReport {
    pub beta: f64,
    /// Pairs on a common time level.
    pub x_quotient: f64,
    /// Pairs at a common `x`.
    pub t_quotient: Option<f64>,
    pub mixed_quotient: Option<f64>,
    /// Largest of the three.
    pub quotient: f64,
    pub pairs: usize,
    /// Pair attaining `quotient`, as `[x1, t1, x2, t2]`.
    pub attained_at: Option<[f64; 4]>,
}

struct Scale {
    x0: f64,
    xl: f64,
    tl: f64,
}

impl Scale {
    fn dist(&self, x1: f64, t1: f64, x2: f64, t2: f64) -> f64 {
        let dx = (x1 - x2).abs() / self.xl;
        let dt = if self.tl > 0.0 { (t1 - t2).abs() / self.tl } else { 0.0 };
        dx.max(dt)
    }

    fn x_of(&self, s: f64) -> f64 {
        self.x0 + s * self.xl
    }
}

#[derive(Default)]
struct Acc {
    best: f64,
    at: Option<[f64; 4]>,
    pairs: usize,
}

impl Acc {
    fn push(&mut self, beta: f64, scale: &Scale, p: (f64, f64, f64), q: (f64, f64, f64)) {
        let d = scale.dist(p.0, p.1, q.0, q.1);
        if !(d > 0.0) {
            return;
        }
        self.pairs += 1;
        let v = (p.2 - q.2).abs() / d.powf(beta);
        if v > self.best || self.at.is_none() {
            self.best = self.best.max(v);
            self.at = Some([p.0, p.1, q.0, q.1]);
        }
    }
}

/// Index of the steepest sample on a line; a non-finite `u_x` wins.
fn locus(line: &TimeLine) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (k, g) in line.ux.iter().enumerate() {
        let g = if g.is_finite() { g.abs() } else { f64::INFINITY };
        if g > best.1 {
            best = (k, g);
        }
    }
    best.0
}

fn nearest(xs: &[f64], x: f64) -> usize {
    let k = xs.partition_point(|&v| v < x);
    if k == 0 {
        0
    } else if k == xs.len() || x - xs[k - 1] <= xs[k] - x {
        k - 1
    } else {
        k
    }
}

/// Unit-interval start points: `m` evenly spread (endpoints included) plus
/// `m` packed just below `focus` so the pairs straddle it.
fn starts(m: usize, d: f64, focus: Option<f64>) -> Vec<f64> {
    let span = (1.0 - d).max(0.0);
    let mut out: Vec<f64> = (0..m)
        .map(|k| if m == 1 { 0.0 } else { span * k as f64 / (m - 1) as f64 })
        .collect();
    if let Some(f) = focus {
        out.extend((0..m).map(|k| (f - d * (k as f64 + 0.5) / m as f64).clamp(0.0, span)));
    }
    out
}

fn separations(min_step: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut d = 1.0;
    while d >= 0.5 * min_step && out.len() < 48 {
        out.push(d);
        d *= 0.5;
    }
    out
}

/// Sup of the quotient over roughly `n_pairs` deterministic pairs, split
/// evenly between equal-time, equal-`x` and mixed pairs.
pub fn holder_quotient(samples: &PhysicalSamples, beta: f64, n_pairs: usize) -> Result<HolderReport> {
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::InvalidInput(format!("beta = {beta} outside (0, 1]")));
    }
    let lines: Vec<&TimeLine> = samples.lines.iter().filter(|l| l.x.len() >= 2).collect();
    let (x0, x1) = lines.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), l| {
        let (a, b) = l.x_range();
        (lo.min(a), hi.max(b))
    });
    if lines.is_empty() || !(x1 > x0) {
        return Err(Error::DegenerateSamples(format!(
            "{} usable time levels, x-span {}",
            lines.len(),
            x1 - x0
        )));
    }
    let (t0, t1) = (lines[0].t, lines[lines.len() - 1].t);
    let scale = Scale {
        x0,
        xl: x1 - x0,
        tl: t1 - t0,
    };
    let multi = lines.len() > 1 && scale.tl > 0.0;
    let per_dir = if multi { n_pairs.div_ceil(3) } else { n_pairs }.max(1);

    // Equal-time pairs, snapped to sample points.
    let min_dx = lines
        .iter()
        .flat_map(|l| l.x.windows(2).map(|w| w[1] - w[0]))
        .filter(|&d| d > 0.0)
        .fold(f64::INFINITY, f64::min)
        / scale.xl;
    let seps = separations(min_dx);
    let stride = (lines.len() / per_dir.div_ceil(2 * seps.len()).max(1)).max(1);
    let chosen: Vec<&TimeLine> = lines.iter().step_by(stride).copied().collect();
    let m = (per_dir / (2 * seps.len() * chosen.len())).max(1);
    let mut xs_acc = Acc::default();
    for l in &chosen {
        let focus = (l.x[locus(l)] - x0) / scale.xl;
        for &d in &seps {
            for s in starts(m, d, Some(focus)) {
                let i = nearest(&l.x, scale.x_of(s));
                let j = nearest(&l.x, scale.x_of(s + d));
                xs_acc.push(beta, &scale, (l.x[i], l.t, l.u[i]), (l.x[j], l.t, l.u[j]));
            }
        }
    }

    let mut t_acc = Acc::default();
    let mut m_acc = Acc::default();
    if multi {
        let min_dt = lines.windows(2).map(|w| w[1].t - w[0].t).filter(|&d| d > 0.0).fold(f64::INFINITY, f64::min)
            / scale.tl;
        let tseps = separations(min_dt);
        let anchors = per_dir.div_ceil(2 * tseps.len()).clamp(1, lines.len());
        let m = (per_dir / (2 * tseps.len() * anchors)).max(1);
        let ts: Vec<f64> = lines.iter().map(|l| (l.t - t0) / scale.tl).collect();
        for &d in &tseps {
            for a in starts(anchors, d, None) {
                let ia = nearest(&ts, a);
                let ib = nearest(&ts, ts[ia] + d);
                if ib == ia {
                    continue;
                }
                let (la, lb) = (lines[ia], lines[ib]);
                let (lo, hi) = (la.x_range().0.max(lb.x_range().0), la.x_range().1.min(lb.x_range().1));
                if !(hi > lo) {
                    continue;
                }
                let focus = (la.x[locus(la)] - x0) / scale.xl;
                for s in starts(m, d, Some(focus)) {
                    // equal x
                    let i = nearest(&la.x, scale.x_of(s));
                    let x = la.x[i].clamp(lo, hi);
                    t_acc.push(beta, &scale, (x, la.t, la.u_at(x)), (x, lb.t, lb.u_at(x)));
                    // x shifted by the same unit distance, either way
                    for sign in [1.0, -1.0] {
                        let x2 = x + sign * d * scale.xl;
                        if x2 >= lb.x_range().0 && x2 <= lb.x_range().1 {
                            let j = nearest(&lb.x, x2);
                            m_acc.push(beta, &scale, (x, la.t, la.u_at(x)), (lb.x[j], lb.t, lb.u[j]));
                        }
                    }
                }
            }
        }
    }

    let mut best = (xs_acc.best, xs_acc.at);
    for acc in [&t_acc, &m_acc] {
        if acc.pairs > 0 && acc.best > best.0 {
            best = (acc.best, acc.at);
        }
    }
    Ok(HolderReport {
        beta,
        x_quotient: xs_acc.best,
        t_quotient: (t_acc.pairs > 0).then_some(t_acc.best),
        mixed_quotient: (m_acc.pairs > 0).then_some(m_acc.best),
        quotient: best.0,
        pairs: xs_acc.pairs + t_acc.pairs + m_acc.pairs,
        attained_at: best.1,
    })
}
