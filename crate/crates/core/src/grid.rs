//! Rectangular lattices clipped by a monotone data curve.
//!
//! Both characteristic domains have the same shape: a rectangle whose
//! lower-left part is cut off by a non-increasing curve. Every row is
//! masked from some first column onward and every column from some first
//! row onward, so integration paths back to the curve stay in the mask.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // inherent methods take over when std is linked
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub start: f64,
    pub step: f64,
    pub len: usize,
}

impl Axis {
    pub fn spanning(start: f64, end: f64, len: usize) -> Result<Self> {
        if len < 2 || !(end > start) {
            return Err(Error::InvalidInput(alloc::format!(
                "axis [{start}, {end}] with {len} nodes"
            )));
        }
        Ok(Axis {
            start,
            step: (end - start) / (len - 1) as f64,
            len,
        })
    }

    #[inline]
    pub fn at(&self, i: usize) -> f64 {
        self.start + self.step * i as f64
    }

    pub fn end(&self) -> f64 {
        self.at(self.len - 1)
    }

    /// Index of the first node at or beyond `x` (within a small slack).
    pub fn first_at_or_after(&self, x: f64) -> usize {
        let k = ((x - self.start) / self.step - 1e-9).ceil();
        if k <= 0.0 {
            0
        } else {
            (k as usize).min(self.len)
        }
    }
}

/// A lattice over `a x b` with a staircase mask.
///
/// `row_origin[j]` is the `a`-coordinate where row `j` meets the data curve
/// and `col_origin[i]` is the `b`-coordinate where column `i` meets it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub a: Axis,
    pub b: Axis,
    pub row_origin: Vec<f64>,
    pub col_origin: Vec<f64>,
    pub row_start: Vec<usize>,
    pub col_start: Vec<usize>,
}

impl Grid {
    pub fn new(a: Axis, b: Axis, row_origin: Vec<f64>, col_origin: Vec<f64>) -> Result<Self> {
        if row_origin.len() != b.len || col_origin.len() != a.len {
            return Err(Error::InvalidInput("origin arrays do not match the axes".into()));
        }
        let row_start: Vec<usize> = row_origin.iter().map(|&o| a.first_at_or_after(o)).collect();
        // Column starts follow from the row starts so both views agree.
        let mut col_start = vec![b.len; a.len];
        for (j, &rs) in row_start.iter().enumerate() {
            for cs in col_start.iter_mut().skip(rs) {
                if *cs > j {
                    *cs = j;
                }
            }
        }
        for w in row_start.windows(2) {
            if w[1] > w[0] {
                return Err(Error::InvalidInput("mask is not a staircase".into()));
            }
        }
        Ok(Grid {
            a,
            b,
            row_origin,
            col_origin,
            row_start,
            col_start,
        })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.a.len * self.b.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.a.len + i
    }

    #[inline]
    pub fn masked(&self, i: usize, j: usize) -> bool {
        i >= self.row_start[j]
    }

    /// Masked nodes in row-major order (`b` outer, `a` inner).
    pub fn nodes(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.b.len).flat_map(move |j| (self.row_start[j]..self.a.len).map(move |i| (i, j)))
    }

    pub fn masked_count(&self) -> usize {
        self.row_start.iter().map(|&s| self.a.len - s).sum()
    }

    pub fn spacing(&self) -> f64 {
        self.a.step.max(self.b.step)
    }

    pub fn field(&self) -> Vec<f64> {
        vec![f64::NAN; self.len()]
    }

    /// Weights `exp(-kappa (|a| + |b|))` of the weighted sup-norm.
    pub fn weights(&self, kappa: f64) -> Vec<f64> {
        let mut w = self.field();
        for (i, j) in self.nodes() {
            w[self.idx(i, j)] = (-kappa * (self.a.at(i).abs() + self.b.at(j).abs())).exp();
        }
        w
    }

    /// Weighted and plain sup-norms of `x - y` over the mask.
    pub fn diff_norms(&self, x: &[f64], y: &[f64], weights: &[f64]) -> (f64, f64) {
        let mut wn: f64 = 0.0;
        let mut sn: f64 = 0.0;
        for (i, j) in self.nodes() {
            let k = self.idx(i, j);
            let d = (x[k] - y[k]).abs();
            let d = if d.is_nan() { f64::INFINITY } else { d };
            wn = wn.max(weights[k] * d);
            sn = sn.max(d);
        }
        (wn, sn)
    }

    /// `(min, max)` of a field over the mask.
    pub fn extrema(&self, f: &[f64]) -> (f64, f64) {
        self.nodes().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (i, j)| {
            let v = f[self.idx(i, j)];
            (lo.min(v), hi.max(v))
        })
    }

    /// Plain sup-norm of `x - y` over the mask.
    pub fn sup_diff(&self, x: &[f64], y: &[f64]) -> f64 {
        self.nodes()
            .map(|(i, j)| {
                let k = self.idx(i, j);
                (x[k] - y[k]).abs()
            })
            .fold(0.0, f64::max)
    }
}
