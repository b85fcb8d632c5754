//! Stage-two quantisation-aware fit: per-segment search over the integer
//! coefficient grid that minimizes the emulated hardware output error.
//!
//! The stage-one fit minimizes the floating-point residual, but truncating
//! its coefficients onto the fixed-point grid accumulates error with weights
//! `1, n, n(n+1)/2, n(n+1)(n+2)/6` per coefficient. The second stage keeps
//! `alpha` fixed and treats the raw `beta/gamma/delta` words as integer
//! decision variables near the truncated seed, scoring candidates against the
//! target window with the exact integer accumulator stream the hardware would
//! produce. A differential-evolution population search (optionally followed
//! by a greedy integer descent) does the minimizing; per-segment RNG streams
//! are derived from the seed plus the segment index so results are identical
//! regardless of how segments are scheduled across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fixedpoint::{
    quantize_segment, to_bowler, BowlerCoeffs, CompressedPulse, FixedPointFormat,
    QuantizedSegment,
};
use crate::pulse::{detect_symmetry, Pulse};
use crate::spline::SplineFit;

/// How the stored-half symmetry flag is decided during compression.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SymmetryMode {
    /// Never store symmetric.
    Off,
    /// Store symmetric when the pulse mirrors exactly and the partition has
    /// an even segment count split at the centre.
    Auto,
    /// Require the structural conditions (even count, centre split) and store
    /// symmetric regardless of sample values; errors if the structure does
    /// not permit it.
    On,
}

impl Default for SymmetryMode {
    fn default() -> Self {
        SymmetryMode::Off
    }
}

fn default_population() -> usize {
    32
}
fn default_generations() -> usize {
    300
}
fn default_mutation() -> f64 {
    0.7
}
fn default_crossover() -> f64 {
    0.9
}
fn default_radius_bg() -> u64 {
    4096
}
fn default_radius_d() -> u64 {
    64
}
fn default_true() -> bool {
    true
}

/// Tuning knobs for the per-segment search. All fields have defaults so a
/// partial JSON config is enough.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QaFitOptions {
    pub population_size: usize,
    pub generations: usize,
    /// Differential weight applied to population difference vectors.
    pub mutation_scale: f64,
    pub crossover_rate: f64,
    /// Search half-width around the seed for `beta`, in grid steps.
    pub radius_beta: u64,
    /// Search half-width around the seed for `gamma`, in grid steps.
    pub radius_gamma: u64,
    /// Search half-width around the seed for `delta`, in grid steps. The
    /// cubic weight means one step already moves the segment tail by
    /// `n^3/6` grid units, so this stays small.
    pub radius_delta: u64,
    /// Scale the beta/gamma radii with segment length (`beta ~ n^2/16`,
    /// `gamma ~ n`, floored at the fixed radii). Long segments need the
    /// linear coefficient to move by O(n^2) steps to cancel the cubic error
    /// term; fixed radii leave that cancellation out of reach.
    pub adaptive_radius: bool,
    /// Run a greedy integer coordinate descent from the best population
    /// member after the generations finish.
    pub polish: bool,
    pub rng_seed: u64,
    /// Blend weight for the worst-sample term: `0` scores the plain sum of
    /// squared errors, `w > 0` scores
    /// `(1-w) * mean-square + w * max(|error|)^2`.
    pub max_error_weight: f64,
}

impl Default for QaFitOptions {
    fn default() -> Self {
        QaFitOptions {
            population_size: default_population(),
            generations: default_generations(),
            mutation_scale: default_mutation(),
            crossover_rate: default_crossover(),
            radius_beta: default_radius_bg(),
            radius_gamma: default_radius_bg(),
            radius_delta: default_radius_d(),
            adaptive_radius: default_true(),
            polish: default_true(),
            rng_seed: 0,
            max_error_weight: 0.0,
        }
    }
}

impl QaFitOptions {
    pub fn validate(&self) -> Result<()> {
        if self.population_size < 4 {
            return Err(Error::invalid("population_size must be at least 4"));
        }
        if self.generations < 1 {
            return Err(Error::invalid("generations must be at least 1"));
        }
        if !(self.mutation_scale > 0.0 && self.mutation_scale.is_finite()) {
            return Err(Error::invalid("mutation_scale must be positive"));
        }
        if !(0.0..=1.0).contains(&self.crossover_rate) {
            return Err(Error::invalid("crossover_rate must be in [0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.max_error_weight) {
            return Err(Error::invalid("max_error_weight must be in [0, 1]"));
        }
        Ok(())
    }

    /// Effective search half-widths for a segment of `n` samples.
    fn radii(&self, n: u32) -> [i64; 3] {
        let n = n as u64;
        if self.adaptive_radius {
            [
                self.radius_beta.max(n * n / 16) as i64,
                self.radius_gamma.max(n) as i64,
                self.radius_delta as i64,
            ]
        } else {
            [
                self.radius_beta as i64,
                self.radius_gamma as i64,
                self.radius_delta as i64,
            ]
        }
    }
}

/// Outcome of optimizing one segment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QaSegmentResult {
    pub segment: QuantizedSegment,
    pub seed_cost: f64,
    pub optimized_cost: f64,
    pub evaluations: u64,
}

/// Cost of emitting `candidate` against the `target` window.
///
/// The emulated output sample is the integer part of the candidate's exact
/// accumulator stream, which equals the stage-one polynomial value plus the
/// accumulated coefficient errors, so no separate error-model evaluation is
/// needed: iterating the raw recursion scores the model exactly. Candidates
/// whose accumulators leave the adder container get infinite cost.
///
/// With `max_error_weight == 0` this is the plain sum of squared errors;
/// otherwise `(1-w) * mean-square + w * max(|error|)^2`.
pub fn segment_cost(
    target: &[f64],
    candidate: &QuantizedSegment,
    fmt: &FixedPointFormat,
    max_error_weight: f64,
) -> f64 {
    debug_assert_eq!(target.len(), candidate.n_samples as usize);
    let limit = 1i128 << (fmt.container_bits() - 1);
    let frac = fmt.frac_bits;
    let mut alpha = (candidate.alpha_raw as i128) << frac;
    let mut beta = candidate.beta_raw as i128;
    let mut gamma = candidate.gamma_raw as i128;
    let delta = candidate.delta_raw as i128;

    let mut sum_sq = 0.0f64;
    let mut max_abs = 0.0f64;
    for (t, &y) in target.iter().enumerate() {
        if t > 0 {
            gamma += delta;
            beta += gamma;
            alpha += beta;
            if gamma < -limit
                || gamma >= limit
                || beta < -limit
                || beta >= limit
                || alpha < -limit
                || alpha >= limit
            {
                return f64::INFINITY;
            }
        } else if alpha < -limit || alpha >= limit {
            return f64::INFINITY;
        }
        let e = y - ((alpha >> frac) as i64) as f64;
        sum_sq += e * e;
        if e.abs() > max_abs {
            max_abs = e.abs();
        }
    }
    if max_error_weight == 0.0 {
        sum_sq
    } else {
        let w = max_error_weight;
        (1.0 - w) * sum_sq / target.len() as f64 + w * max_abs * max_abs
    }
}

/// Integer-grid search over `(beta_raw, gamma_raw, delta_raw)` near the
/// quantized seed; `alpha` stays fixed. Deterministic for a given
/// `opts.rng_seed` and segment index, and never worse than the seed, which is
/// always a population member.
pub fn optimize_segment(
    target: &[f64],
    seed: &BowlerCoeffs,
    fmt: &FixedPointFormat,
    opts: &QaFitOptions,
    segment_index: usize,
) -> Result<QaSegmentResult> {
    opts.validate()?;
    if target.is_empty() {
        return Err(Error::invalid("empty target window"));
    }
    let n = u32::try_from(target.len())
        .map_err(|_| Error::invalid("segment too long"))?;
    let (seed_seg, _) = quantize_segment(seed, fmt, n)?;
    let w = opts.max_error_weight;
    let seed_cost = segment_cost(target, &seed_seg, fmt, w);
    let mut evaluations = 1u64;
    if seed_cost == 0.0 {
        return Ok(QaSegmentResult {
            segment: seed_seg,
            seed_cost,
            optimized_cost: seed_cost,
            evaluations,
        });
    }

    let radii = opts.radii(n);
    let word_bound = 1i64 << (fmt.word_bits - 1);
    // clamp offsets so absolute raws stay representable
    let lo: Vec<i64> = [seed_seg.beta_raw, seed_seg.gamma_raw, seed_seg.delta_raw]
        .iter()
        .zip(radii)
        .map(|(&raw, r)| (-r).max(-word_bound - raw))
        .collect();
    let hi: Vec<i64> = [seed_seg.beta_raw, seed_seg.gamma_raw, seed_seg.delta_raw]
        .iter()
        .zip(radii)
        .map(|(&raw, r)| r.min(word_bound - 1 - raw))
        .collect();

    let with_offsets = |ofs: &[i64; 3]| QuantizedSegment {
        alpha_raw: seed_seg.alpha_raw,
        beta_raw: seed_seg.beta_raw + ofs[0],
        gamma_raw: seed_seg.gamma_raw + ofs[1],
        delta_raw: seed_seg.delta_raw + ofs[2],
        n_samples: n,
    };

    // ChaCha stream is stable across platforms and crate versions, so a
    // stored rng_seed reproduces the same compressed pulse anywhere.
    let mut rng = ChaCha8Rng::seed_from_u64(
        opts.rng_seed ^ (segment_index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15),
    );

    let pop = opts.population_size;
    let mut members: Vec<[i64; 3]> = Vec::with_capacity(pop);
    members.push([0, 0, 0]); // the seed itself
    for i in 1..pop {
        // most members start near the seed, every fourth explores the full box
        let shrink = if i % 4 == 1 { 1 } else { 8 };
        let mut m = [0i64; 3];
        for j in 0..3 {
            let (l, h) = (lo[j] / shrink, hi[j] / shrink);
            m[j] = if l < h { rng.random_range(l..=h) } else { l };
        }
        members.push(m);
    }
    let mut costs: Vec<f64> = members
        .iter()
        .map(|m| segment_cost(target, &with_offsets(m), fmt, w))
        .collect();
    evaluations += (pop - 1) as u64;

    for _ in 0..opts.generations {
        for i in 0..pop {
            let mut pick = || loop {
                let j = rng.random_range(0..pop);
                if j != i {
                    return j;
                }
            };
            let (a, b, c) = {
                let a = pick();
                let b = loop {
                    let v = pick();
                    if v != a {
                        break v;
                    }
                };
                let c = loop {
                    let v = pick();
                    if v != a && v != b {
                        break v;
                    }
                };
                (a, b, c)
            };
            let forced = rng.random_range(0..3usize);
            let mut trial = members[i];
            for j in 0..3 {
                if j == forced || rng.random::<f64>() < opts.crossover_rate {
                    let v = members[a][j] as f64
                        + opts.mutation_scale * (members[b][j] - members[c][j]) as f64;
                    trial[j] = (v.round() as i64).clamp(lo[j], hi[j]);
                }
            }
            let cost = segment_cost(target, &with_offsets(&trial), fmt, w);
            evaluations += 1;
            if cost <= costs[i] {
                members[i] = trial;
                costs[i] = cost;
            }
        }
    }

    let mut best_idx = 0;
    for i in 1..pop {
        if costs[i] < costs[best_idx] {
            best_idx = i;
        }
    }
    let mut best = members[best_idx];
    let mut best_cost = costs[best_idx];

    if opts.polish {
        // greedy integer descent with doubling steps, fixed coordinate order
        let mut improved = true;
        while improved {
            improved = false;
            for j in 0..3 {
                for dir in [1i64, -1] {
                    let mut step = 1i64;
                    loop {
                        let mut trial = best;
                        trial[j] = (trial[j] + dir * step).clamp(lo[j], hi[j]);
                        if trial[j] == best[j] {
                            break;
                        }
                        let cost = segment_cost(target, &with_offsets(&trial), fmt, w);
                        evaluations += 1;
                        if cost < best_cost {
                            best = trial;
                            best_cost = cost;
                            improved = true;
                            step *= 2;
                        } else {
                            break;
                        }
                    }
                }
            }
        }
    }

    Ok(QaSegmentResult {
        segment: with_offsets(&best),
        seed_cost,
        optimized_cost: best_cost,
        evaluations,
    })
}

/// Result of the full two-stage compression of one pulse.
#[derive(Debug, Clone, Serialize)]
pub struct QaFitResult {
    pub compressed: CompressedPulse,
    pub per_segment: Vec<QaSegmentResult>,
}

impl QaFitResult {
    pub fn total_seed_cost(&self) -> f64 {
        self.per_segment.iter().map(|r| r.seed_cost).sum()
    }

    pub fn total_cost(&self) -> f64 {
        self.per_segment.iter().map(|r| r.optimized_cost).sum()
    }
}

fn check_fit_covers(pulse: &Pulse, stage_one: &SplineFit) -> Result<()> {
    if stage_one.partition.pulse_len() != pulse.len() {
        return Err(Error::invalid(format!(
            "stage-one fit covers {} samples but pulse has {}",
            stage_one.partition.pulse_len(),
            pulse.len()
        )));
    }
    Ok(())
}

fn resolve_symmetry(pulse: &Pulse, stage_one: &SplineFit, mode: SymmetryMode) -> Result<bool> {
    let structural = || -> std::result::Result<(), String> {
        let n = pulse.len();
        let k = stage_one.partition.segment_count();
        if n % 2 != 0 {
            return Err(format!("pulse length {n} is odd"));
        }
        if k % 2 != 0 {
            return Err(format!("segment count {k} is odd"));
        }
        if stage_one.partition.boundaries()[k / 2] != n / 2 {
            return Err(format!(
                "partition does not split at the centre sample {}",
                n / 2
            ));
        }
        Ok(())
    };
    match mode {
        SymmetryMode::Off => Ok(false),
        SymmetryMode::On => structural()
            .map(|()| true)
            .map_err(|why| Error::invalid(format!("symmetric storage impossible: {why}"))),
        SymmetryMode::Auto => {
            Ok(structural().is_ok() && detect_symmetry(pulse, 0.0).is_some())
        }
    }
}

fn stored_segment_count(stage_one: &SplineFit, symmetric: bool) -> usize {
    let k = stage_one.partition.segment_count();
    if symmetric {
        k / 2
    } else {
        k
    }
}

/// Stage-one coefficients truncated onto the grid with no optimization.
pub fn compress_naive(
    pulse: &Pulse,
    stage_one: &SplineFit,
    fmt: &FixedPointFormat,
    symmetry: SymmetryMode,
) -> Result<CompressedPulse> {
    check_fit_covers(pulse, stage_one)?;
    let symmetric = resolve_symmetry(pulse, stage_one, symmetry)?;
    let stored = stored_segment_count(stage_one, symmetric);
    let mut segments = Vec::with_capacity(stored);
    for s in 0..stored {
        let (a, b) = stage_one.partition.segment_bounds(s);
        let seed = to_bowler(&stage_one.polys[s]);
        let (seg, _) = quantize_segment(&seed, fmt, (b - a) as u32)?;
        segments.push(seg);
    }
    Ok(CompressedPulse {
        format: *fmt,
        segments,
        symmetric,
    })
}

/// The full second stage: quantize each stored segment and optimize it
/// against its own target window. Segments are independent and run in
/// parallel; per-segment RNG streams keep the result deterministic.
pub fn quantisation_aware_fit(
    pulse: &Pulse,
    stage_one: &SplineFit,
    fmt: &FixedPointFormat,
    opts: &QaFitOptions,
    symmetry: SymmetryMode,
) -> Result<QaFitResult> {
    opts.validate()?;
    check_fit_covers(pulse, stage_one)?;
    let symmetric = resolve_symmetry(pulse, stage_one, symmetry)?;
    let stored = stored_segment_count(stage_one, symmetric);

    let results: Result<Vec<QaSegmentResult>> = (0..stored)
        .into_par_iter()
        .map(|s| {
            let (a, b) = stage_one.partition.segment_bounds(s);
            let seed = to_bowler(&stage_one.polys[s]);
            optimize_segment(&pulse.samples()[a..b], &seed, fmt, opts, s)
        })
        .collect();
    let per_segment = results?;

    Ok(QaFitResult {
        compressed: CompressedPulse {
            format: *fmt,
            segments: per_segment.iter().map(|r| r.segment).collect(),
            symmetric,
        },
        per_segment,
    })
}
