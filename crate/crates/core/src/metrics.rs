//! Time-domain, spectral, and memory-footprint evaluation of compressed
//! pulses against their references.

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fixedpoint::CompressedPulse;
use crate::pulse::Pulse;

/// Summary statistics of `reference - test`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorReport {
    pub max_abs: f64,
    pub mean_abs: f64,
    pub rms: f64,
    /// `max_abs` relative to the declared full scale, in percent.
    pub max_abs_pct: f64,
    /// Per-sample error sequence, kept only on request.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_sample: Option<Vec<f64>>,
}

/// Error statistics of emulated integer output against a reference pulse.
/// The percentage baseline is the pulse's declared full scale, not the
/// instantaneous value, so zero crossings do not blow it up.
pub fn time_domain_error(reference: &Pulse, test: &[i64], dump: bool) -> Result<ErrorReport> {
    if reference.len() != test.len() {
        return Err(Error::invalid(format!(
            "length mismatch: reference {} vs test {}",
            reference.len(),
            test.len()
        )));
    }
    let errors: Vec<f64> = reference
        .samples()
        .iter()
        .zip(test)
        .map(|(&r, &t)| r - t as f64)
        .collect();
    let n = errors.len() as f64;
    let max_abs = errors.iter().fold(0.0f64, |m, e| m.max(e.abs()));
    let mean_abs = errors.iter().map(|e| e.abs()).sum::<f64>() / n;
    let rms = (errors.iter().map(|e| e * e).sum::<f64>() / n).sqrt();
    Ok(ErrorReport {
        max_abs,
        mean_abs,
        rms,
        max_abs_pct: 100.0 * max_abs / reference.scale(),
        per_sample: dump.then_some(errors),
    })
}

/// Multiplies an envelope by the oscillator output `sin(2 pi f n / rate)`.
pub fn dds_modulate(envelope: &[f64], carrier_hz: f64, sample_rate: f64) -> Result<Vec<f64>> {
    if !(sample_rate > 0.0) {
        return Err(Error::invalid("sample_rate must be positive"));
    }
    if carrier_hz >= sample_rate / 2.0 {
        return Err(Error::invalid(format!(
            "carrier {carrier_hz} Hz at or above Nyquist ({} Hz)",
            sample_rate / 2.0
        )));
    }
    Ok(envelope
        .iter()
        .enumerate()
        .map(|(n, &e)| e * (2.0 * std::f64::consts::PI * carrier_hz * n as f64 / sample_rate).sin())
        .collect())
}

/// Magnitudes of the unnormalized forward transform of two real signals and
/// their per-bin absolute difference. Bins run 0..=N/2 in Hz.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumReport {
    pub bins_hz: Vec<f64>,
    pub ref_mag: Vec<f64>,
    pub test_mag: Vec<f64>,
    pub abs_err: Vec<f64>,
}

impl SpectrumReport {
    pub fn max_abs_err(&self) -> f64 {
        self.abs_err.iter().fold(0.0f64, |m, &e| m.max(e))
    }
}

fn real_magnitudes(signal: &[f64]) -> Vec<f64> {
    let n = signal.len();
    let mut buf: Vec<Complex64> = signal.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    buf[..n / 2 + 1].iter().map(|c| c.norm()).collect()
}

/// Compares the magnitude spectra of two equal-length real signals.
/// The transform is the plain unnormalized sum, so
/// `sum_k |X_k|^2 == N * sum_n x_n^2` over the full bin set.
pub fn spectrum_error(reference: &[f64], test: &[f64], sample_rate: f64) -> Result<SpectrumReport> {
    if reference.len() != test.len() {
        return Err(Error::invalid(format!(
            "length mismatch: reference {} vs test {}",
            reference.len(),
            test.len()
        )));
    }
    if reference.is_empty() {
        return Err(Error::invalid("empty input"));
    }
    if !(sample_rate > 0.0) {
        return Err(Error::invalid("sample_rate must be positive"));
    }
    let n = reference.len();
    let ref_mag = real_magnitudes(reference);
    let test_mag = real_magnitudes(test);
    let bins_hz = (0..=n / 2)
        .map(|k| k as f64 * sample_rate / n as f64)
        .collect();
    let abs_err = ref_mag
        .iter()
        .zip(&test_mag)
        .map(|(r, t)| (r - t).abs())
        .collect();
    Ok(SpectrumReport {
        bins_hz,
        ref_mag,
        test_mag,
        abs_err,
    })
}

/// Memory accounting of a compressed pulse against the direct sample store.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FootprintReport {
    pub compressed_bits: u64,
    pub awg_bits: u64,
    pub ratio: f64,
}

/// Pulse-data memory: stored segments times `alpha_bits + 3 * word_bits`,
/// against `total_samples * awg_sample_bits` for the sample store. Symmetric
/// pulses count stored segments only. Set `include_container` to charge the
/// on-disk container format (header and per-segment framing) instead of the
/// logical coefficient widths.
pub fn footprint(
    cp: &CompressedPulse,
    awg_sample_bits: u32,
    total_samples: u64,
    include_container: bool,
) -> FootprintReport {
    let compressed_bits = if include_container {
        crate::io::cps_file_bits(cp)
    } else {
        cp.segments.len() as u64 * (cp.format.alpha_bits as u64 + 3 * cp.format.word_bits as u64)
    };
    let awg_bits = total_samples * awg_sample_bits as u64;
    FootprintReport {
        compressed_bits,
        awg_bits,
        ratio: awg_bits as f64 / compressed_bits as f64,
    }
}
