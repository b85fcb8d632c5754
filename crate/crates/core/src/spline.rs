//! Stage-one floating-point least-squares piecewise-cubic fit with continuity
//! constraints, plus a local knot-placement search.
//!
//! Each segment carries its own local time origin (t = 0 at the segment's
//! first sample). That keeps coefficient magnitudes small for the fixed-point
//! stage and matches the per-segment reset of the decompression recursion.
//! Internally the solver normalizes local time to [0, 1] per segment and
//! rescales coefficients afterwards, which keeps the normal-equations block
//! well conditioned even for multi-thousand-sample segments.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pulse::Pulse;

/// Minimum samples per segment: a cubic needs four points.
pub const MIN_SEGMENT_SAMPLES: usize = 4;

/// Strictly increasing segment boundaries, from 0 to the pulse length.
///
/// Segment `s` owns sample indices `[boundaries[s], boundaries[s+1])`; shared
/// knots belong to the later segment, and the final boundary equals the pulse
/// length (one past the last sample).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KnotPartition {
    boundaries: Vec<usize>,
}

impl KnotPartition {
    pub fn new(boundaries: Vec<usize>) -> Result<Self> {
        if boundaries.len() < 2 {
            return Err(Error::invalid("partition needs at least two boundaries"));
        }
        if boundaries[0] != 0 {
            return Err(Error::invalid("first boundary must be 0"));
        }
        for w in boundaries.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::invalid("boundaries must be strictly increasing"));
            }
            if w[1] - w[0] < MIN_SEGMENT_SAMPLES {
                return Err(Error::invalid(format!(
                    "segment [{}, {}) has fewer than {MIN_SEGMENT_SAMPLES} samples",
                    w[0], w[1]
                )));
            }
        }
        Ok(KnotPartition { boundaries })
    }

    pub fn boundaries(&self) -> &[usize] {
        &self.boundaries
    }

    pub fn segment_count(&self) -> usize {
        self.boundaries.len() - 1
    }

    /// Half-open sample range `[start, end)` of segment `s`.
    pub fn segment_bounds(&self, s: usize) -> (usize, usize) {
        (self.boundaries[s], self.boundaries[s + 1])
    }

    pub fn pulse_len(&self) -> usize {
        *self.boundaries.last().unwrap()
    }

    /// Index of the segment owning sample position `t` (`t == len` maps to the
    /// last segment).
    pub fn owner(&self, t: f64) -> Option<usize> {
        let len = self.pulse_len() as f64;
        if !(0.0..=len).contains(&t) {
            return None;
        }
        if t == len {
            return Some(self.segment_count() - 1);
        }
        // boundaries are sorted; partition_point finds the first boundary > t
        let idx = self.boundaries.partition_point(|&b| b as f64 <= t);
        Some(idx - 1)
    }
}

/// Evenly spaced partition; segment lengths differ by at most one sample.
pub fn uniform_knots(n_segments: usize, pulse_len: usize) -> Result<KnotPartition> {
    if n_segments == 0 {
        return Err(Error::invalid("n_segments must be at least 1"));
    }
    if pulse_len < MIN_SEGMENT_SAMPLES * n_segments {
        return Err(Error::invalid(format!(
            "pulse of {pulse_len} samples is too short for {n_segments} segments"
        )));
    }
    let boundaries = (0..=n_segments)
        .map(|i| (i * pulse_len) / n_segments)
        .collect();
    KnotPartition::new(boundaries)
}

/// Cubic polynomial `p0 + p1 t + p2 t^2 + p3 t^3` over segment-local time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CubicPoly {
    pub p0: f64,
    pub p1: f64,
    pub p2: f64,
    pub p3: f64,
}

impl CubicPoly {
    pub fn new(p0: f64, p1: f64, p2: f64, p3: f64) -> Self {
        CubicPoly { p0, p1, p2, p3 }
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.p0 + t * (self.p1 + t * (self.p2 + t * self.p3))
    }

    pub fn deriv(&self, t: f64) -> f64 {
        self.p1 + t * (2.0 * self.p2 + t * 3.0 * self.p3)
    }
}

/// A fitted piecewise cubic: partition, per-segment coefficients in local
/// time, the continuity order imposed at interior knots, and the final
/// least-squares residual.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SplineFit {
    pub partition: KnotPartition,
    pub polys: Vec<CubicPoly>,
    pub continuity_order: u8,
    pub residual: f64,
}

impl SplineFit {
    /// Evaluates the owning segment's polynomial at `t` (global sample index).
    /// Boundary positions belong to the later segment except the final one.
    pub fn eval(&self, t: f64) -> Result<f64> {
        let s = self
            .partition
            .owner(t)
            .ok_or_else(|| Error::invalid(format!("t = {t} outside [0, pulse length]")))?;
        let (start, _) = self.partition.segment_bounds(s);
        Ok(self.polys[s].eval(t - start as f64))
    }

    /// Stage-one polynomial values on segment `s`'s own sample grid.
    pub fn segment_values(&self, s: usize) -> Vec<f64> {
        let (start, end) = self.partition.segment_bounds(s);
        (0..end - start)
            .map(|k| self.polys[s].eval(k as f64))
            .collect()
    }
}

/// Free-function form of [`SplineFit::eval`].
pub fn eval_spline(fit: &SplineFit, t: f64) -> Result<f64> {
    fit.eval(t)
}

/// Least-squares fit of `pulse` over `partition` with value continuity plus
/// `continuity_order` derivative orders matched at interior knots.
pub fn fit_float(pulse: &Pulse, partition: &KnotPartition, continuity_order: u8) -> Result<SplineFit> {
    if continuity_order > 2 {
        return Err(Error::invalid("continuity_order must be 0, 1, or 2"));
    }
    if partition.pulse_len() != pulse.len() {
        return Err(Error::invalid(format!(
            "partition covers {} samples but pulse has {}",
            partition.pulse_len(),
            pulse.len()
        )));
    }
    let y = pulse.samples();
    let k = partition.segment_count();
    let nvar = 4 * k;
    let ncon = (continuity_order as usize + 1) * (k - 1);
    let dim = nvar + ncon;

    let mut kkt = DMatrix::<f64>::zeros(dim, dim);
    let mut rhs = DMatrix::<f64>::zeros(dim, 1);

    // Normal-equation blocks on the normalized basis 1, u, u^2, u^3.
    for s in 0..k {
        let (a, b) = partition.segment_bounds(s);
        let h = (b - a) as f64;
        let mut m = [[0.0; 4]; 4];
        let mut r = [0.0; 4];
        for (idx, &yt) in y[a..b].iter().enumerate() {
            let u = idx as f64 / h;
            let v = [1.0, u, u * u, u * u * u];
            for i in 0..4 {
                for j in 0..4 {
                    m[i][j] += v[i] * v[j];
                }
                r[i] += v[i] * yt;
            }
        }
        for i in 0..4 {
            for j in 0..4 {
                kkt[(4 * s + i, 4 * s + j)] = 2.0 * m[i][j];
            }
            rhs[(4 * s + i, 0)] = 2.0 * r[i];
        }
    }

    // Continuity constraints at interior knots, on the normalized basis.
    let mut row = nvar;
    for s in 0..k - 1 {
        let h0 = (partition.boundaries()[s + 1] - partition.boundaries()[s]) as f64;
        let h1 = (partition.boundaries()[s + 2] - partition.boundaries()[s + 1]) as f64;
        let hmin = h0.min(h1);
        // value: q_s(1) == q_{s+1}(0)
        for j in 0..4 {
            kkt[(row, 4 * s + j)] = 1.0;
            kkt[(4 * s + j, row)] = 1.0;
        }
        kkt[(row, 4 * (s + 1))] = -1.0;
        kkt[(4 * (s + 1), row)] = -1.0;
        row += 1;
        if continuity_order >= 1 {
            let c = [0.0, 1.0 / h0, 2.0 / h0, 3.0 / h0];
            for (j, cj) in c.iter().enumerate() {
                kkt[(row, 4 * s + j)] = cj * hmin;
                kkt[(4 * s + j, row)] = cj * hmin;
            }
            kkt[(row, 4 * (s + 1) + 1)] = -hmin / h1;
            kkt[(4 * (s + 1) + 1, row)] = -hmin / h1;
            row += 1;
        }
        if continuity_order >= 2 {
            let c = [0.0, 0.0, 2.0 / (h0 * h0), 6.0 / (h0 * h0)];
            let scale = hmin * hmin;
            for (j, cj) in c.iter().enumerate() {
                kkt[(row, 4 * s + j)] = cj * scale;
                kkt[(4 * s + j, row)] = cj * scale;
            }
            kkt[(row, 4 * (s + 1) + 2)] = -2.0 * scale / (h1 * h1);
            kkt[(4 * (s + 1) + 2, row)] = -2.0 * scale / (h1 * h1);
            row += 1;
        }
    }
    debug_assert_eq!(row, dim);

    let solution = kkt.lu().solve(&rhs).ok_or_else(|| {
        // Attribute the failure to the first degenerate segment block if any.
        let segment = (0..k)
            .find(|&s| {
                let (a, b) = partition.segment_bounds(s);
                b - a < MIN_SEGMENT_SAMPLES
            })
            .unwrap_or(0);
        Error::FitFailure {
            segment,
            reason: "singular constrained least-squares system".into(),
        }
    })?;

    let mut polys = Vec::with_capacity(k);
    for s in 0..k {
        let (a, b) = partition.segment_bounds(s);
        let h = (b - a) as f64;
        polys.push(CubicPoly::new(
            solution[(4 * s, 0)],
            solution[(4 * s + 1, 0)] / h,
            solution[(4 * s + 2, 0)] / (h * h),
            solution[(4 * s + 3, 0)] / (h * h * h),
        ));
    }

    let mut residual = 0.0;
    for s in 0..k {
        let (a, b) = partition.segment_bounds(s);
        for (idx, &yt) in y[a..b].iter().enumerate() {
            let e = polys[s].eval(idx as f64) - yt;
            residual += e * e;
        }
    }
    if !residual.is_finite() {
        return Err(Error::FitFailure {
            segment: 0,
            reason: "non-finite residual".into(),
        });
    }

    Ok(SplineFit {
        partition: partition.clone(),
        polys,
        continuity_order,
        residual,
    })
}

/// Coordinate descent over the interior boundaries: each boundary is tried at
/// offsets of +/- 1, 2, 4, ... samples and the best strictly improving move
/// is kept. Sweeps run left to right in a fixed order until a sweep makes no
/// improvement or `max_iters` sweeps have run; the result never has a larger
/// residual than the input partition.
pub fn optimize_knots_local(
    pulse: &Pulse,
    initial: &KnotPartition,
    continuity_order: u8,
    max_iters: usize,
) -> Result<KnotPartition> {
    let mut boundaries = initial.boundaries().to_vec();
    let mut best_residual = fit_float(pulse, initial, continuity_order)?.residual;

    for _ in 0..max_iters {
        let mut improved = false;
        for bi in 1..boundaries.len() - 1 {
            let lo = boundaries[bi - 1] + MIN_SEGMENT_SAMPLES;
            let hi = boundaries[bi + 1] - MIN_SEGMENT_SAMPLES;
            let mut candidates = Vec::new();
            for dir in [-1i64, 1] {
                let mut step = 1i64;
                loop {
                    let nb = boundaries[bi] as i64 + dir * step;
                    if nb < lo as i64 || nb > hi as i64 {
                        break;
                    }
                    candidates.push(nb as usize);
                    step *= 2;
                }
            }
            let results: Vec<Option<f64>> = candidates
                .par_iter()
                .map(|&nb| {
                    let mut trial = boundaries.clone();
                    trial[bi] = nb;
                    KnotPartition::new(trial)
                        .and_then(|p| fit_float(pulse, &p, continuity_order))
                        .ok()
                        .map(|f| f.residual)
                })
                .collect();
            // first strictly-best candidate in fixed order keeps this deterministic
            let mut chosen: Option<(usize, f64)> = None;
            for (i, res) in results.iter().enumerate() {
                if let Some(r) = res {
                    if *r < chosen.map_or(best_residual, |(_, br)| br) {
                        chosen = Some((i, *r));
                    }
                }
            }
            if let Some((i, r)) = chosen {
                boundaries[bi] = candidates[i];
                best_residual = r;
                improved = true;
            }
        }
        if !improved {
            break;
        }
    }
    KnotPartition::new(boundaries)
}
