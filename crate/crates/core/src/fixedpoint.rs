//! Bit-exact software model of the recursive fixed-point decompression
//! pipeline, its symmetric (time-reversed) replay mode, the closed-form
//! accumulated-error model, and the quantisation-width sweep.
//!
//! One cubic segment decompresses through three accumulators:
//!
//! ```text
//! gamma_t = gamma_{t-1} + delta_0
//! beta_t  = beta_{t-1}  + gamma_t
//! alpha_t = alpha_{t-1} + beta_t        y(t) = alpha_t, y(0) = alpha_0
//! ```
//!
//! All arithmetic runs on raw integers at `2^-frac_bits` scale; an emitted
//! sample is the integer part of `alpha`, clamped to the output width. The
//! recursion is linear in the four initial coefficients with weights
//! `1, n, n(n+1)/2, n(n+1)(n+2)/6`, so per-coefficient quantisation errors
//! accumulate along exactly those weights; `predict_error` evaluates that
//! closed form.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spline::CubicPoly;

/// Fixed-point word layout for stored coefficients and the output grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixedPointFormat {
    /// Total two's-complement width of the beta/gamma/delta words.
    pub word_bits: u32,
    /// Fractional bits within `word_bits`.
    pub frac_bits: u32,
    /// Width of the stored alpha word, aligned to the output integer grid.
    pub alpha_bits: u32,
    /// Output truncation width.
    pub out_bits: u32,
}

impl Default for FixedPointFormat {
    fn default() -> Self {
        FixedPointFormat {
            word_bits: 36,
            frac_bits: 20,
            alpha_bits: 16,
            out_bits: 16,
        }
    }
}

impl FixedPointFormat {
    pub fn new(word_bits: u32, frac_bits: u32, alpha_bits: u32, out_bits: u32) -> Result<Self> {
        let fmt = FixedPointFormat {
            word_bits,
            frac_bits,
            alpha_bits,
            out_bits,
        };
        fmt.validate()?;
        Ok(fmt)
    }

    pub fn validate(&self) -> Result<()> {
        if self.frac_bits < 1 || self.frac_bits >= self.word_bits {
            return Err(Error::invalid(format!(
                "need 1 <= frac_bits < word_bits, got {}/{}",
                self.frac_bits, self.word_bits
            )));
        }
        if self.word_bits > 62 {
            return Err(Error::invalid("word_bits must not exceed 62"));
        }
        if self.alpha_bits < 1 || self.alpha_bits > self.word_bits {
            return Err(Error::invalid("alpha_bits must be in 1..=word_bits"));
        }
        if self.out_bits < 1 || self.out_bits > 32 {
            return Err(Error::invalid("out_bits must be in 1..=32"));
        }
        Ok(())
    }

    /// One quantisation grid step, `2^-frac_bits`.
    pub fn grid_step(&self) -> f64 {
        (2.0f64).powi(-(self.frac_bits as i32))
    }

    /// Adder container width: the emulated accumulators must stay inside this
    /// signed range at every cycle.
    pub fn container_bits(&self) -> u32 {
        self.word_bits.max(48)
    }

    fn word_raw_bound(&self) -> i64 {
        1i64 << (self.word_bits - 1)
    }

    fn alpha_raw_bound(&self) -> i64 {
        1i64 << (self.alpha_bits - 1)
    }

    fn out_bound(&self) -> i64 {
        1i64 << (self.out_bits - 1)
    }
}

/// Recursion-ready initial coefficients in real arithmetic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BowlerCoeffs {
    pub alpha0: f64,
    pub beta0: f64,
    pub gamma0: f64,
    pub delta0: f64,
}

/// Transforms cubic polynomial coefficients into the additive-recursion form:
/// `alpha0 = p0`, `beta0 = p1 - p2 + p3`, `gamma0 = 2 p2 - 6 p3`,
/// `delta0 = 6 p3`.
pub fn to_bowler(c: &CubicPoly) -> BowlerCoeffs {
    BowlerCoeffs {
        alpha0: c.p0,
        beta0: c.p1 - c.p2 + c.p3,
        gamma0: 2.0 * c.p2 - 6.0 * c.p3,
        delta0: 6.0 * c.p3,
    }
}

/// One stored segment: raw integer coefficients plus the emitted length.
/// `beta/gamma/delta` are at `2^-frac_bits` scale, `alpha` on the output
/// integer grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuantizedSegment {
    pub alpha_raw: i64,
    pub beta_raw: i64,
    pub gamma_raw: i64,
    pub delta_raw: i64,
    pub n_samples: u32,
}

/// Per-coefficient quantisation errors of one segment
/// (`quantised value - exact value`, each in `(-grid step, 0]`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentErrorProfile {
    pub eps_alpha: f64,
    pub eps_beta: f64,
    pub eps_gamma: f64,
    pub eps_delta: f64,
    pub n_samples: u32,
}

impl SegmentErrorProfile {
    /// Predicted accumulated error after `n` addition cycles.
    pub fn predicted(&self, n: u64) -> f64 {
        predict_error(self, n)
    }

    /// The full predicted per-sample error sequence for this segment.
    pub fn prediction(&self) -> Vec<f64> {
        (0..self.n_samples as u64).map(|n| self.predicted(n)).collect()
    }
}

/// Accumulation weights of the gamma and delta coefficients after `n`
/// cycles: `(n(n+1)/2, n(n+1)(n+2)/6)`, exact in `i128`.
#[inline]
pub fn weights_of(n: u64) -> (i128, i128) {
    let n = n as i128;
    let tri = n * (n + 1) / 2;
    let tet = tri * (n + 2) / 3;
    (tri, tet)
}

pub(crate) use weights_of as weights;

/// `eps_alpha + n eps_beta + n(n+1)/2 eps_gamma + n(n+1)(n+2)/6 eps_delta`.
pub fn predict_error(prof: &SegmentErrorProfile, n: u64) -> f64 {
    let (tri, tet) = weights(n);
    prof.eps_alpha
        + n as f64 * prof.eps_beta
        + tri as f64 * prof.eps_gamma
        + tet as f64 * prof.eps_delta
}

fn floor_to_raw(value: f64, scale: f64, bound: i64, name: &'static str, bits: u32) -> Result<i64> {
    if !value.is_finite() {
        return Err(Error::Range {
            coefficient: name,
            value,
            bits,
        });
    }
    // scale is a power of two, so the product is exact for in-range values
    let scaled = (value * scale).floor();
    if scaled < -(bound as f64) || scaled >= bound as f64 {
        return Err(Error::Range {
            coefficient: name,
            value,
            bits,
        });
    }
    Ok(scaled as i64)
}

/// Truncates coefficients toward minus infinity onto the fixed-point grid and
/// records the quantisation error of each.
pub fn quantize_segment(
    b: &BowlerCoeffs,
    fmt: &FixedPointFormat,
    n_samples: u32,
) -> Result<(QuantizedSegment, SegmentErrorProfile)> {
    fmt.validate()?;
    if n_samples == 0 {
        return Err(Error::invalid("segment must emit at least one sample"));
    }
    let scale = (2.0f64).powi(fmt.frac_bits as i32);
    let alpha_raw = floor_to_raw(b.alpha0, 1.0, fmt.alpha_raw_bound(), "alpha", fmt.alpha_bits)?;
    let beta_raw = floor_to_raw(b.beta0, scale, fmt.word_raw_bound(), "beta", fmt.word_bits)?;
    let gamma_raw = floor_to_raw(b.gamma0, scale, fmt.word_raw_bound(), "gamma", fmt.word_bits)?;
    let delta_raw = floor_to_raw(b.delta0, scale, fmt.word_raw_bound(), "delta", fmt.word_bits)?;
    let seg = QuantizedSegment {
        alpha_raw,
        beta_raw,
        gamma_raw,
        delta_raw,
        n_samples,
    };
    let prof = SegmentErrorProfile {
        eps_alpha: alpha_raw as f64 - b.alpha0,
        eps_beta: beta_raw as f64 / scale - b.beta0,
        eps_gamma: gamma_raw as f64 / scale - b.gamma0,
        eps_delta: delta_raw as f64 / scale - b.delta0,
        n_samples,
    };
    Ok((seg, prof))
}

/// An ordered set of quantized segments plus the format that decodes them.
/// When `symmetric` is set the stored segments cover the first half only and
/// the second half replays them time-reversed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompressedPulse {
    pub format: FixedPointFormat,
    pub segments: Vec<QuantizedSegment>,
    pub symmetric: bool,
}

impl CompressedPulse {
    /// Number of samples decompression will emit.
    pub fn total_samples(&self) -> usize {
        let stored: usize = self.segments.iter().map(|s| s.n_samples as usize).sum();
        if self.symmetric {
            stored * 2
        } else {
            stored
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.format.validate()?;
        if self.segments.is_empty() {
            return Err(Error::invalid("compressed pulse has no segments"));
        }
        for (i, seg) in self.segments.iter().enumerate() {
            if seg.n_samples == 0 {
                return Err(Error::invalid(format!("segment {i} emits no samples")));
            }
            let wb = self.format.word_raw_bound();
            let ab = self.format.alpha_raw_bound();
            if seg.alpha_raw < -ab || seg.alpha_raw >= ab {
                return Err(Error::SignExtension { coefficient: "alpha", segment: i });
            }
            for (raw, name) in [
                (seg.beta_raw, "beta"),
                (seg.gamma_raw, "gamma"),
                (seg.delta_raw, "delta"),
            ] {
                if raw < -wb || raw >= wb {
                    return Err(Error::SignExtension { coefficient: name, segment: i });
                }
            }
        }
        Ok(())
    }
}

/// Emitted output-grid samples plus a clamp diagnostic: `clamp_events` counts
/// samples that fell outside the output range and were saturated.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decompressed {
    pub samples: Vec<i64>,
    pub clamp_events: usize,
}

#[derive(Debug, Clone, Copy)]
struct AccState {
    alpha: i128,
    beta: i128,
    gamma: i128,
}

struct Emulator<'a> {
    fmt: &'a FixedPointFormat,
    limit: i128,
    out: Vec<i64>,
    clamp_events: usize,
}

impl<'a> Emulator<'a> {
    fn new(fmt: &'a FixedPointFormat, capacity: usize) -> Self {
        Emulator {
            fmt,
            limit: 1i128 << (fmt.container_bits() - 1),
            out: Vec::with_capacity(capacity),
            clamp_events: 0,
        }
    }

    fn check(&self, v: i128, segment: usize) -> Result<()> {
        if v < -self.limit || v >= self.limit {
            Err(Error::Overflow {
                segment,
                sample: self.out.len(),
            })
        } else {
            Ok(())
        }
    }

    fn emit(&mut self, alpha: i128) {
        let v = (alpha >> self.fmt.frac_bits) as i64;
        let bound = self.fmt.out_bound();
        let clamped = v.clamp(-bound, bound - 1);
        if clamped != v {
            self.clamp_events += 1;
        }
        self.out.push(clamped);
    }

    /// Runs one segment forward and returns its final accumulator state.
    fn forward(&mut self, seg: &QuantizedSegment, segment: usize) -> Result<AccState> {
        let frac = self.fmt.frac_bits;
        let mut st = AccState {
            alpha: (seg.alpha_raw as i128) << frac,
            beta: seg.beta_raw as i128,
            gamma: seg.gamma_raw as i128,
        };
        let delta = seg.delta_raw as i128;
        self.check(st.alpha, segment)?;
        self.emit(st.alpha);
        for _ in 1..seg.n_samples {
            st.gamma += delta;
            self.check(st.gamma, segment)?;
            st.beta += st.gamma;
            self.check(st.beta, segment)?;
            st.alpha += st.beta;
            self.check(st.alpha, segment)?;
            self.emit(st.alpha);
        }
        Ok(st)
    }

    /// Replays one segment backwards from its final forward state.
    fn backward(&mut self, seg: &QuantizedSegment, st: AccState, segment: usize) -> Result<()> {
        let delta = seg.delta_raw as i128;
        let (mut alpha, mut beta, mut gamma) = (st.alpha, st.beta, st.gamma);
        self.emit(alpha);
        for _ in 1..seg.n_samples {
            let a = alpha - beta;
            let b = beta - gamma;
            let g = gamma - delta;
            self.check(a, segment)?;
            self.check(b, segment)?;
            self.check(g, segment)?;
            alpha = a;
            beta = b;
            gamma = g;
            self.emit(alpha);
        }
        Ok(())
    }
}

/// Bit-exact forward decompression of a non-symmetric pulse. Segments stitch
/// seamlessly: each one reloads `alpha` fresh and its first sample directly
/// follows the previous segment's last.
pub fn decompress(cp: &CompressedPulse) -> Result<Decompressed> {
    if cp.symmetric {
        return Err(Error::invalid(
            "decompress requires a non-symmetric pulse; use decompress_symmetric",
        ));
    }
    cp.validate()?;
    let mut emu = Emulator::new(&cp.format, cp.total_samples());
    for (i, seg) in cp.segments.iter().enumerate() {
        emu.forward(seg, i)?;
    }
    Ok(Decompressed {
        samples: emu.out,
        clamp_events: emu.clamp_events,
    })
}

/// Forward pass over the stored half followed by the backward recursion,
/// seeded per segment from that segment's final forward state and replayed in
/// reverse order. The output is exactly twice the stored length and the
/// second half is the bit-exact reversal of the first (the apex sample
/// appears once per half).
pub fn decompress_symmetric(cp: &CompressedPulse) -> Result<Decompressed> {
    if !cp.symmetric {
        return Err(Error::invalid(
            "decompress_symmetric requires a symmetric pulse",
        ));
    }
    cp.validate()?;
    let mut emu = Emulator::new(&cp.format, cp.total_samples());
    let mut finals = Vec::with_capacity(cp.segments.len());
    for (i, seg) in cp.segments.iter().enumerate() {
        finals.push(emu.forward(seg, i)?);
    }
    for (i, seg) in cp.segments.iter().enumerate().rev() {
        emu.backward(seg, finals[i], i)?;
    }
    Ok(Decompressed {
        samples: emu.out,
        clamp_events: emu.clamp_events,
    })
}

/// Decompresses either mode.
pub fn emit(cp: &CompressedPulse) -> Result<Decompressed> {
    if cp.symmetric {
        decompress_symmetric(cp)
    } else {
        decompress(cp)
    }
}

/// The raw `alpha` accumulator trace of one segment at `2^-frac_bits` scale,
/// before output truncation. This is the quantity the error model predicts.
pub fn segment_accumulators(seg: &QuantizedSegment, fmt: &FixedPointFormat) -> Result<Vec<i128>> {
    fmt.validate()?;
    let limit = 1i128 << (fmt.container_bits() - 1);
    let mut trace = Vec::with_capacity(seg.n_samples as usize);
    let mut alpha = (seg.alpha_raw as i128) << fmt.frac_bits;
    let mut beta = seg.beta_raw as i128;
    let mut gamma = seg.gamma_raw as i128;
    let delta = seg.delta_raw as i128;
    let check = |v: i128, sample: usize| -> Result<()> {
        if v < -limit || v >= limit {
            Err(Error::Overflow { segment: 0, sample })
        } else {
            Ok(())
        }
    };
    check(alpha, 0)?;
    trace.push(alpha);
    for t in 1..seg.n_samples as usize {
        gamma += delta;
        check(gamma, t)?;
        beta += gamma;
        check(beta, t)?;
        alpha += beta;
        check(alpha, t)?;
        trace.push(alpha);
    }
    Ok(trace)
}

/// Outcome of quantizing one coefficient set at one width.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum SweepOutcome {
    /// Largest `|predicted error|` over the segment, in output-grid units.
    MaxAbsError(f64),
    /// The named coefficient does not fit this width.
    Overflow { coefficient: &'static str },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WidthSweepRow {
    pub word_bits: u32,
    pub frac_bits: u32,
    pub outcome: SweepOutcome,
}

/// Quantizes `b` at each `(word_bits, frac_bits)` width and reports the
/// worst predicted accumulated error over `n_samples` cycles. Per-width
/// overflow is reported inline rather than aborting the sweep.
pub fn sweep_quantization_width(
    b: &BowlerCoeffs,
    n_samples: u32,
    widths: &[(u32, u32)],
) -> Vec<WidthSweepRow> {
    widths
        .iter()
        .map(|&(word_bits, frac_bits)| {
            let fmt = match FixedPointFormat::new(word_bits, frac_bits, 16.min(word_bits), 16) {
                Ok(f) => f,
                Err(_) => {
                    return WidthSweepRow {
                        word_bits,
                        frac_bits,
                        outcome: SweepOutcome::Overflow {
                            coefficient: "format",
                        },
                    }
                }
            };
            match quantize_segment(b, &fmt, n_samples) {
                Ok((_, prof)) => {
                    let max = (0..n_samples as u64)
                        .map(|n| prof.predicted(n).abs())
                        .fold(0.0, f64::max);
                    WidthSweepRow {
                        word_bits,
                        frac_bits,
                        outcome: SweepOutcome::MaxAbsError(max),
                    }
                }
                Err(Error::Range { coefficient, .. }) => WidthSweepRow {
                    word_bits,
                    frac_bits,
                    outcome: SweepOutcome::Overflow { coefficient },
                },
                Err(_) => WidthSweepRow {
                    word_bits,
                    frac_bits,
                    outcome: SweepOutcome::Overflow {
                        coefficient: "format",
                    },
                },
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn seg(alpha: i64, beta: i64, gamma: i64, delta: i64, n: u32) -> QuantizedSegment {
        QuantizedSegment {
            alpha_raw: alpha,
            beta_raw: beta,
            gamma_raw: gamma,
            delta_raw: delta,
            n_samples: n,
        }
    }

    fn one_segment(s: QuantizedSegment) -> CompressedPulse {
        CompressedPulse {
            format: FixedPointFormat::default(),
            segments: vec![s],
            symmetric: false,
        }
    }

    #[test]
    fn to_bowler_substitutions() {
        let c = to_bowler(&CubicPoly::new(7.0, 0.0, 0.0, 0.0));
        assert_eq!((c.alpha0, c.beta0, c.gamma0, c.delta0), (7.0, 0.0, 0.0, 0.0));
        let c = to_bowler(&CubicPoly::new(0.0, 0.0, 0.0, 1.0));
        assert_eq!((c.alpha0, c.beta0, c.gamma0, c.delta0), (0.0, 1.0, -6.0, 6.0));
        let c = to_bowler(&CubicPoly::new(0.0, 1.0, 1.0, 1.0));
        assert_eq!((c.alpha0, c.beta0, c.gamma0, c.delta0), (0.0, 1.0, -4.0, 6.0));
    }

    #[test]
    fn quantize_exact_values() {
        let fmt = FixedPointFormat::default();
        let b = BowlerCoeffs {
            alpha0: 5.0,
            beta0: 1.5,
            gamma0: -0.75,
            delta0: 0.0,
        };
        let (q, prof) = quantize_segment(&b, &fmt, 4).unwrap();
        assert_eq!(q.beta_raw, 1_572_864); // 1.5 * 2^20
        assert_eq!(q.gamma_raw, -786_432); // -0.75 * 2^20
        assert_eq!(prof.eps_beta, 0.0);
        assert_eq!(prof.eps_gamma, 0.0);
        assert_eq!(prof.eps_alpha, 0.0);
    }

    #[test]
    fn quantize_floor_matches_high_precision_oracle() {
        // floor(3.7681 * 2^20) computed exactly from the f64 bit pattern
        let fmt = FixedPointFormat::default();
        let b = BowlerCoeffs {
            alpha0: 0.0,
            beta0: 3.7681,
            gamma0: 0.0,
            delta0: 0.0,
        };
        let (q, prof) = quantize_segment(&b, &fmt, 2).unwrap();
        // oracle: exact rational floor via 128-bit integer mantissa arithmetic
        let bits = 3.7681f64.to_bits();
        let mantissa = (bits & ((1 << 52) - 1)) | (1 << 52);
        let exp = ((bits >> 52) & 0x7ff) as i64 - 1023 - 52; // value = mantissa * 2^exp
        let shift = exp + 20;
        let expected = if shift >= 0 {
            (mantissa as i128) << shift
        } else {
            (mantissa as i128) >> (-shift)
        };
        assert_eq!(q.beta_raw as i128, expected);
        assert!(prof.eps_beta <= 0.0 && prof.eps_beta > -fmt.grid_step());
    }

    #[test]
    fn quantize_range_error_names_coefficient() {
        let fmt = FixedPointFormat::default();
        let b = BowlerCoeffs {
            alpha0: 0.0,
            beta0: 0.0,
            gamma0: 1e30,
            delta0: 0.0,
        };
        match quantize_segment(&b, &fmt, 1) {
            Err(Error::Range { coefficient, .. }) => assert_eq!(coefficient, "gamma"),
            other => panic!("expected range error, got {other:?}"),
        }
    }

    #[test]
    fn decompress_constant_linear_cubic() {
        let d = decompress(&one_segment(seg(5, 0, 0, 0, 4))).unwrap();
        assert_eq!(d.samples, vec![5, 5, 5, 5]);
        assert_eq!(d.clamp_events, 0);

        let d = decompress(&one_segment(seg(0, 1 << 20, 0, 0, 4))).unwrap();
        assert_eq!(d.samples, vec![0, 1, 2, 3]);

        // t^3 through the coefficient transform: beta=1, gamma=-6, delta=6
        let d = decompress(&one_segment(seg(0, 1 << 20, -6 << 20, 6 << 20, 3))).unwrap();
        assert_eq!(d.samples, vec![0, 1, 8]);
    }

    #[test]
    fn decompress_rejects_symmetric_input_and_vice_versa() {
        let mut cp = one_segment(seg(1, 0, 0, 0, 2));
        assert!(decompress_symmetric(&cp).is_err());
        cp.symmetric = true;
        assert!(decompress(&cp).is_err());
    }

    #[test]
    fn symmetric_constant_doubles_length() {
        let mut cp = one_segment(seg(9, 0, 0, 0, 5));
        cp.symmetric = true;
        let d = decompress_symmetric(&cp).unwrap();
        assert_eq!(d.samples, vec![9; 10]);
    }

    #[test]
    fn symmetric_ramp_mirrors_exactly() {
        let mut cp = one_segment(seg(0, 1 << 20, 0, 0, 4));
        cp.symmetric = true;
        let d = decompress_symmetric(&cp).unwrap();
        assert_eq!(d.samples, vec![0, 1, 2, 3, 3, 2, 1, 0]);
    }

    #[test]
    fn overflow_reports_segment_and_sample() {
        // large delta walks alpha out of the 48-bit container
        let cp = one_segment(seg(0, 0, 0, (1 << 35) - 1, 20000));
        match decompress(&cp) {
            Err(Error::Overflow { segment, sample }) => {
                assert_eq!(segment, 0);
                assert!(sample > 0);
            }
            other => panic!("expected overflow, got {other:?}"),
        }
    }

    #[test]
    fn predict_error_substitutions() {
        let prof = SegmentErrorProfile {
            eps_alpha: 0.25,
            eps_beta: 0.0,
            eps_gamma: 0.0,
            eps_delta: 0.0,
            n_samples: 4,
        };
        assert_eq!(predict_error(&prof, 0), 0.25);

        let prof = SegmentErrorProfile {
            eps_alpha: 1.0,
            eps_beta: 1.0,
            eps_gamma: 1.0,
            eps_delta: 1.0,
            n_samples: 4,
        };
        assert_eq!(predict_error(&prof, 2), 10.0); // 1 + 2 + 3 + 4
    }

    #[test]
    fn predict_error_delta_dominated_rational_value() {
        // eps_delta = 2^-20 alone at n = 1000: 1000*1001*1002/6 / 2^20
        let prof = SegmentErrorProfile {
            eps_alpha: 0.0,
            eps_beta: 0.0,
            eps_gamma: 0.0,
            eps_delta: (2.0f64).powi(-20),
            n_samples: 1001,
        };
        let expected = 167_167_000.0 / 1_048_576.0;
        assert!((predict_error(&prof, 1000) - expected).abs() < 1e-9);
        assert_eq!(weights(1000).1, 167_167_000);
    }

    #[test]
    fn prediction_sequence_has_declared_length() {
        let prof = SegmentErrorProfile {
            eps_alpha: -0.5,
            eps_beta: -1e-6,
            eps_gamma: 0.0,
            eps_delta: -1e-7,
            n_samples: 17,
        };
        assert_eq!(prof.prediction().len(), 17);
    }

    #[test]
    fn sweep_exact_coefficients_zero_at_all_widths() {
        let b = BowlerCoeffs {
            alpha0: 12.0,
            beta0: 0.5,
            gamma0: -0.25,
            delta0: 0.125,
        };
        let widths = [(24, 8), (32, 16), (36, 20), (44, 28)];
        for row in sweep_quantization_width(&b, 100, &widths) {
            match row.outcome {
                SweepOutcome::MaxAbsError(e) => assert_eq!(e, 0.0),
                SweepOutcome::Overflow { .. } => panic!("unexpected overflow"),
            }
        }
    }

    #[test]
    fn sweep_error_non_increasing_in_frac_bits() {
        let b = BowlerCoeffs {
            alpha0: 100.3,
            beta0: 3.7681,
            gamma0: 0.0012048,
            delta0: -6.2639e-7,
        };
        let widths: Vec<(u32, u32)> = (10..=40).step_by(2).map(|f| (f + 16, f)).collect();
        let rows = sweep_quantization_width(&b, 2000, &widths);
        let mut prev = f64::INFINITY;
        for row in rows {
            let SweepOutcome::MaxAbsError(e) = row.outcome else {
                panic!("unexpected overflow");
            };
            assert!(e <= prev + 1e-12, "error grew: {e} after {prev}");
            prev = e;
        }
    }

    #[test]
    fn sweep_reports_overflow_inline() {
        let b = BowlerCoeffs {
            alpha0: 0.0,
            beta0: 3000.0,
            gamma0: 0.0,
            delta0: 0.0,
        };
        // 3000 needs 12 integer bits; (14,12) leaves only 1
        let rows = sweep_quantization_width(&b, 10, &[(14, 12), (36, 20)]);
        assert!(matches!(
            rows[0].outcome,
            SweepOutcome::Overflow {
                coefficient: "beta"
            }
        ));
        assert!(matches!(rows[1].outcome, SweepOutcome::MaxAbsError(_)));
    }

    /// Strategy: coefficient values representable in the default format and
    /// sized so the accumulators provably stay inside the 48-bit container
    /// for the chosen segment length.
    fn bounded_coeffs(max_n: u64) -> impl Strategy<Value = (BowlerCoeffs, u32)> {
        (4u32..=max_n as u32).prop_flat_map(move |n| {
            let (tri, tet) = weights(n as u64 - 1);
            let budget = (1u64 << 24) as f64;
            let word_bound: f64 = 32768.0 * 0.98; // value range of a 36/20 word
            let bb = word_bound.min(budget / (n as f64).max(1.0));
            let gb = word_bound.min(budget / (tri as f64).max(1.0));
            let db = word_bound.min(budget / (tet as f64).max(1.0));
            (
                -16384.0..16384.0f64,
                prop::num::f64::NORMAL.prop_map(move |x| (x % 1.0) * bb),
                prop::num::f64::NORMAL.prop_map(move |x| (x % 1.0) * gb),
                prop::num::f64::NORMAL.prop_map(move |x| (x % 1.0) * db),
            )
                .prop_map(move |(a, b, g, d)| {
                    (
                        BowlerCoeffs {
                            alpha0: a,
                            beta0: b,
                            gamma0: g,
                            delta0: d,
                        },
                        n,
                    )
                })
        })
    }

    proptest! {
        /// Quantisation truncates toward minus infinity: each error is in
        /// (-step, 0].
        #[test]
        fn quantization_is_floor((b, n) in bounded_coeffs(64)) {
            let fmt = FixedPointFormat::default();
            let (_, prof) = quantize_segment(&b, &fmt, n).unwrap();
            let step = fmt.grid_step();
            for (eps, limit) in [
                (prof.eps_alpha, 1.0),
                (prof.eps_beta, step),
                (prof.eps_gamma, step),
                (prof.eps_delta, step),
            ] {
                prop_assert!(eps <= 0.0, "eps = {eps}");
                prop_assert!(eps > -limit, "eps = {eps} below one grid step");
            }
        }

        /// For exactly representable coefficients the emulated output equals
        /// the floor of the exact polynomial on the integer grid, bit for bit.
        #[test]
        fn representable_coefficients_reproduce_polynomial((b, n) in bounded_coeffs(512)) {
            let fmt = FixedPointFormat::default();
            // snap to the grid so quantisation is exact
            let step = fmt.grid_step();
            let snapped = BowlerCoeffs {
                alpha0: b.alpha0.floor(),
                beta0: (b.beta0 / step).floor() * step,
                gamma0: (b.gamma0 / step).floor() * step,
                delta0: (b.delta0 / step).floor() * step,
            };
            let (q, prof) = quantize_segment(&snapped, &fmt, n).unwrap();
            prop_assert_eq!(prof.eps_alpha, 0.0);
            prop_assert_eq!(prof.eps_beta, 0.0);
            prop_assert_eq!(prof.eps_gamma, 0.0);
            prop_assert_eq!(prof.eps_delta, 0.0);
            let out = decompress(&CompressedPulse {
                format: fmt,
                segments: vec![q],
                symmetric: false,
            })
            .unwrap();
            // integer closed-form oracle at 2^-frac scale, saturated to the
            // output width the same way the emitter is
            for (t, &got) in out.samples.iter().enumerate() {
                let (tri, tet) = weights(t as u64);
                let acc = ((q.alpha_raw as i128) << 20)
                    + t as i128 * q.beta_raw as i128
                    + tri * q.gamma_raw as i128
                    + tet * q.delta_raw as i128;
                let expect = ((acc >> 20) as i64).clamp(-32768, 32767);
                prop_assert_eq!(got, expect);
            }
        }

        /// The second half of a symmetric decompression is the bit-exact
        /// reversal of the first for arbitrary stored data.
        #[test]
        fn symmetric_second_half_reverses_first((b, n) in bounded_coeffs(256), nseg in 1usize..4) {
            let fmt = FixedPointFormat::default();
            let (q, _) = quantize_segment(&b, &fmt, n).unwrap();
            let mut segments = vec![q];
            for i in 1..nseg {
                let mut s = q;
                s.delta_raw = -s.delta_raw;
                s.gamma_raw += i as i64;
                segments.push(s);
            }
            let cp = CompressedPulse { format: fmt, segments, symmetric: true };
            let d = decompress_symmetric(&cp).unwrap();
            let half = d.samples.len() / 2;
            prop_assert_eq!(d.samples.len(), cp.total_samples());
            let mut rev = d.samples[..half].to_vec();
            rev.reverse();
            prop_assert_eq!(&d.samples[half..], &rev[..]);
        }

        /// Deterministic and total: same input, same output.
        #[test]
        fn decompress_is_deterministic((b, n) in bounded_coeffs(128)) {
            let fmt = FixedPointFormat::default();
            let (q, _) = quantize_segment(&b, &fmt, n).unwrap();
            let cp = CompressedPulse { format: fmt, segments: vec![q], symmetric: false };
            let d1 = decompress(&cp).unwrap();
            let d2 = decompress(&cp).unwrap();
            prop_assert_eq!(d1, d2);
        }
    }
}
