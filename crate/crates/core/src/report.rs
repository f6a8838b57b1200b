//! Result records shared by both characteristic solvers.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::math::interp_linear;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iter: usize,
    /// Update size in the exponentially weighted sup-norm.
    pub update_norm: f64,
    /// Update size in the plain sup-norm.
    pub sup_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceHistory {
    pub kappa: f64,
    pub records: Vec<IterationRecord>,
    pub converged: bool,
}

impl ConvergenceHistory {
    pub fn iterations(&self) -> usize {
        self.records.len()
    }

    /// Ratios of consecutive weighted update norms.
    pub fn contraction_ratios(&self) -> Vec<f64> {
        self.records
            .windows(2)
            .filter(|w| w[0].update_norm > 0.0)
            .map(|w| w[1].update_norm / w[0].update_norm)
            .collect()
    }

    /// Largest weighted-norm ratio from iterate `from` on, ignoring updates
    /// already at rounding level.
    pub fn max_ratio_from(&self, from: usize, floor: f64) -> f64 {
        self.records
            .windows(2)
            .skip(from.saturating_sub(1))
            .filter(|w| w[0].update_norm > floor)
            .map(|w| w[1].update_norm / w[0].update_norm)
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BlowupVariable {
    V,
    W,
    VOrW,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PqExtrema {
    pub min_p: f64,
    pub max_p: f64,
    pub min_q: f64,
    pub max_q: f64,
}

impl PqExtrema {
    pub fn as_array(&self) -> [f64; 4] {
        [self.min_p, self.max_p, self.min_q, self.max_q]
    }

    pub fn positive_and_bounded(&self) -> bool {
        self.min_p > 0.0 && self.min_q > 0.0 && self.max_p.is_finite() && self.max_q.is_finite()
    }

    /// Largest relative change of any extremum against `other`.
    pub fn max_relative_change(&self, other: &PqExtrema) -> f64 {
        self.as_array()
            .iter()
            .zip(other.as_array())
            .map(|(a, b)| (a - b).abs() / a.abs().max(b.abs()))
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlowupReport {
    pub detected: bool,
    pub threshold: f64,
    pub variable: Option<BlowupVariable>,
    /// First node reaching the threshold, in characteristic coordinates.
    pub first_location: Option<[f64; 2]>,
    /// The same point as `(x, t)`.
    pub first_physical: Option<[f64; 2]>,
    pub first_time: Option<f64>,
    /// Largest `|v|` or `max(|w|, |v|)` (wrapped) over the domain.
    pub max_angle: f64,
    pub pq_extrema: Option<PqExtrema>,
    pub xi_extrema: Option<[f64; 2]>,
}

/// Default detection threshold for `|v|`, `|w|`.
pub const DEFAULT_BLOWUP_THRESHOLD: f64 = core::f64::consts::PI - 1e-3;

/// Recovered solution on one time level, ordered by `x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeLine {
    pub t: f64,
    pub x: Vec<f64>,
    pub u: Vec<f64>,
    /// `u_x` where available (infinite on a gradient blowup).
    pub ux: Vec<f64>,
    /// Generating characteristic coordinates.
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl TimeLine {
    pub fn u_at(&self, x: f64) -> f64 {
        interp_linear(&self.x, &self.u, x)
    }

    pub fn x_range(&self) -> (f64, f64) {
        (self.x[0], *self.x.last().unwrap())
    }
}

/// Point cloud `(t, x, u)` grouped by time level.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PhysicalSamples {
    pub lines: Vec<TimeLine>,
}

impl PhysicalSamples {
    /// `x`-interval covered by every line.
    pub fn common_x_range(&self) -> (f64, f64) {
        self.lines.iter().fold((f64::NEG_INFINITY, f64::INFINITY), |(lo, hi), l| {
            let (a, b) = l.x_range();
            (lo.max(a), hi.min(b))
        })
    }

    /// Lines with `t0 <= t <= t1`.
    pub fn restrict_t(&self, t0: f64, t1: f64) -> PhysicalSamples {
        PhysicalSamples {
            lines: self.lines.iter().filter(|l| l.t >= t0 && l.t <= t1).cloned().collect(),
        }
    }

    /// Solution on level `t`, interpolated linearly between the two
    /// bracketing lines at each `x` of `xs`.
    pub fn u_at_time(&self, t: f64, xs: &[f64]) -> Option<Vec<f64>> {
        let k = self.lines.partition_point(|l| l.t <= t);
        let lo = self.lines.get(k.checked_sub(1)?)?;
        if lo.t == t {
            return Some(xs.iter().map(|&x| lo.u_at(x)).collect());
        }
        let hi = self.lines.get(k)?;
        let w = (t - lo.t) / (hi.t - lo.t);
        Some(xs.iter().map(|&x| (1.0 - w) * lo.u_at(x) + w * hi.u_at(x)).collect())
    }

    /// `x`-range covered on level `t` by the two bracketing lines.
    pub fn x_range_at_time(&self, t: f64) -> Option<(f64, f64)> {
        let k = self.lines.partition_point(|l| l.t <= t);
        let lo = self.lines.get(k.checked_sub(1)?)?;
        let (a, b) = lo.x_range();
        if lo.t == t {
            return Some((a, b));
        }
        let (c, d) = self.lines.get(k)?.x_range();
        Some((a.max(c), b.min(d)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn line(t: f64, slope: f64) -> TimeLine {
        let x: Vec<f64> = (0..11).map(|k| k as f64 * 0.1).collect();
        let u = x.iter().map(|x| slope * x).collect();
        TimeLine {
            t,
            ux: vec![slope; 11],
            a: x.clone(),
            b: vec![t; 11],
            x,
            u,
        }
    }

    #[test]
    fn time_interpolation_between_lines() {
        let s = PhysicalSamples {
            lines: vec![line(0.0, 1.0), line(1.0, 3.0)],
        };
        let u = s.u_at_time(0.5, &[0.5]).unwrap();
        assert!((u[0] - 1.0).abs() < 1e-14);
        assert!(s.u_at_time(1.5, &[0.5]).is_none());
        assert_eq!(s.u_at_time(1.0, &[0.5]).unwrap()[0], 1.5);
        assert_eq!(s.x_range_at_time(0.3), Some((0.0, 1.0)));
    }

    #[test]
    fn ratios_skip_rounding_floor() {
        let h = ConvergenceHistory {
            kappa: 1.0,
            records: [1.0, 0.5, 0.1, 1e-17, 2e-17]
                .iter()
                .enumerate()
                .map(|(i, &n)| IterationRecord {
                    iter: i + 1,
                    update_norm: n,
                    sup_norm: n,
                })
                .collect(),
            converged: true,
        };
        assert_eq!(h.contraction_ratios().len(), 4);
        assert!((h.max_ratio_from(2, 1e-15) - 0.2).abs() < 1e-12);
    }
}
