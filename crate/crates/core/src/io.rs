//! File formats: pulse CSV with a JSON sidecar, the `.cps` binary coefficient
//! container, and the CSV report layouts.
//!
//! `.cps` layout (little-endian):
//!
//! ```text
//! magic "CPS1" (4 bytes)
//! flags: u8            bit0 = symmetric
//! word_bits: u8
//! frac_bits: u8
//! alpha_bits: u8
//! segment_count: u32
//! per segment:
//!   n_samples: u32
//!   alpha_raw: i16
//!   beta_raw:  i64
//!   gamma_raw: i64
//!   delta_raw: i64
//! ```
//!
//! The beta/gamma/delta words are sign-extended into their 64-bit containers;
//! a reader rejects any word whose bits above `word_bits` disagree with its
//! sign bit.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fixedpoint::{CompressedPulse, FixedPointFormat, QuantizedSegment};
use crate::metrics::SpectrumReport;
use crate::pulse::{Pulse, DEFAULT_SAMPLE_RATE, DEFAULT_SCALE};

const MAGIC: &[u8; 4] = b"CPS1";
const HEADER_BYTES: usize = 12;
const SEGMENT_BYTES: usize = 4 + 2 + 8 * 3;

/// Exact size of the serialized container, in bits.
pub fn cps_file_bits(cp: &CompressedPulse) -> u64 {
    8 * (HEADER_BYTES + SEGMENT_BYTES * cp.segments.len()) as u64
}

pub fn cps_to_bytes(cp: &CompressedPulse) -> Result<Vec<u8>> {
    cp.validate()?;
    if cp.format.alpha_bits > 16 {
        return Err(Error::invalid(
            "container stores alpha as i16; alpha_bits must be <= 16",
        ));
    }
    let count = u32::try_from(cp.segments.len())
        .map_err(|_| Error::invalid("too many segments"))?;
    let mut out = Vec::with_capacity(HEADER_BYTES + SEGMENT_BYTES * cp.segments.len());
    out.extend_from_slice(MAGIC);
    out.push(u8::from(cp.symmetric));
    out.push(cp.format.word_bits as u8);
    out.push(cp.format.frac_bits as u8);
    out.push(cp.format.alpha_bits as u8);
    out.extend_from_slice(&count.to_le_bytes());
    for seg in &cp.segments {
        out.extend_from_slice(&seg.n_samples.to_le_bytes());
        out.extend_from_slice(&(seg.alpha_raw as i16).to_le_bytes());
        out.extend_from_slice(&seg.beta_raw.to_le_bytes());
        out.extend_from_slice(&seg.gamma_raw.to_le_bytes());
        out.extend_from_slice(&seg.delta_raw.to_le_bytes());
    }
    Ok(out)
}

fn fits_signed(raw: i64, bits: u32) -> bool {
    let bound = 1i64 << (bits - 1);
    raw >= -bound && raw < bound
}

pub fn cps_from_bytes(bytes: &[u8]) -> Result<CompressedPulse> {
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        return Err(Error::BadMagic);
    }
    if bytes.len() < HEADER_BYTES {
        return Err(Error::UnexpectedEof(0));
    }
    let flags = bytes[4];
    if flags & !1 != 0 {
        return Err(Error::Parse(format!("unknown flag bits 0x{flags:02x}")));
    }
    let word_bits = bytes[5] as u32;
    let frac_bits = bytes[6] as u32;
    let alpha_bits = bytes[7] as u32;
    // out_bits is not stored; alpha is aligned to the output grid
    let format = FixedPointFormat::new(word_bits, frac_bits, alpha_bits, alpha_bits)?;
    let count = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;

    let mut segments = Vec::with_capacity(count);
    let mut off = HEADER_BYTES;
    for i in 0..count {
        if bytes.len() < off + SEGMENT_BYTES {
            return Err(Error::UnexpectedEof(i));
        }
        let n_samples = u32::from_le_bytes(bytes[off..off + 4].try_into().unwrap());
        let alpha_raw = i16::from_le_bytes(bytes[off + 4..off + 6].try_into().unwrap()) as i64;
        let beta_raw = i64::from_le_bytes(bytes[off + 6..off + 14].try_into().unwrap());
        let gamma_raw = i64::from_le_bytes(bytes[off + 14..off + 22].try_into().unwrap());
        let delta_raw = i64::from_le_bytes(bytes[off + 22..off + 30].try_into().unwrap());
        off += SEGMENT_BYTES;
        if n_samples == 0 {
            return Err(Error::Parse(format!("segment {i} declares zero samples")));
        }
        if !fits_signed(alpha_raw, alpha_bits) {
            return Err(Error::SignExtension {
                coefficient: "alpha",
                segment: i,
            });
        }
        for (raw, name) in [(beta_raw, "beta"), (gamma_raw, "gamma"), (delta_raw, "delta")] {
            if !fits_signed(raw, word_bits) {
                return Err(Error::SignExtension {
                    coefficient: name,
                    segment: i,
                });
            }
        }
        segments.push(QuantizedSegment {
            alpha_raw,
            beta_raw,
            gamma_raw,
            delta_raw,
            n_samples,
        });
    }
    if off != bytes.len() {
        return Err(Error::Parse(format!(
            "{} trailing bytes after segment data",
            bytes.len() - off
        )));
    }
    let cp = CompressedPulse {
        format,
        segments,
        symmetric: flags & 1 != 0,
    };
    cp.validate()?;
    Ok(cp)
}

pub fn write_cps(path: impl AsRef<Path>, cp: &CompressedPulse) -> Result<()> {
    fs::write(path, cps_to_bytes(cp)?)?;
    Ok(())
}

pub fn read_cps(path: impl AsRef<Path>) -> Result<CompressedPulse> {
    cps_from_bytes(&fs::read(path)?)
}

/// Metadata carried next to a pulse CSV.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PulseSidecar {
    pub sample_rate: f64,
    #[serde(default = "default_scale")]
    pub scale: f64,
}

fn default_scale() -> f64 {
    DEFAULT_SCALE
}

fn sidecar_path(path: &Path) -> std::path::PathBuf {
    let mut os = path.as_os_str().to_owned();
    os.push(".json");
    os.into()
}

const PULSE_HEADER: &str = "index,value";

pub fn pulse_to_csv(pulse: &Pulse) -> String {
    let mut out = String::with_capacity(pulse.len() * 12 + 16);
    out.push_str(PULSE_HEADER);
    out.push('\n');
    for (i, s) in pulse.samples().iter().enumerate() {
        out.push_str(&format!("{i},{s}\n"));
    }
    out
}

/// Writes `index,value` rows plus a JSON sidecar with the sample rate.
pub fn write_pulse_csv(path: impl AsRef<Path>, pulse: &Pulse) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, pulse_to_csv(pulse))?;
    let sidecar = PulseSidecar {
        sample_rate: pulse.sample_rate(),
        scale: pulse.scale(),
    };
    fs::write(
        sidecar_path(path),
        serde_json::to_string_pretty(&sidecar).expect("sidecar serializes"),
    )?;
    Ok(())
}

pub fn pulse_from_csv(text: &str, sample_rate: f64, scale: f64) -> Result<Pulse> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == PULSE_HEADER => {}
        Some(h) => {
            return Err(Error::Parse(format!(
                "expected header '{PULSE_HEADER}', found '{h}'"
            )))
        }
        None => return Err(Error::Parse("empty pulse file".into())),
    }
    let mut samples = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (idx, value) = line
            .split_once(',')
            .ok_or_else(|| Error::Parse(format!("line {}: missing comma", lineno + 2)))?;
        let idx: usize = idx
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("line {}: bad index '{idx}'", lineno + 2)))?;
        if idx != samples.len() {
            return Err(Error::Parse(format!(
                "line {}: index {idx} out of order (expected {})",
                lineno + 2,
                samples.len()
            )));
        }
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("line {}: bad value '{value}'", lineno + 2)))?;
        samples.push(value);
    }
    Pulse::with_scale(samples, sample_rate, scale)
}

/// Reads a pulse CSV; the sample rate comes from `rate_override`, else the
/// JSON sidecar, else the 1 GSps default.
pub fn read_pulse_csv(path: impl AsRef<Path>, rate_override: Option<f64>) -> Result<Pulse> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    let sidecar: Option<PulseSidecar> = match fs::read_to_string(sidecar_path(path)) {
        Ok(s) => Some(
            serde_json::from_str(&s)
                .map_err(|e| Error::Parse(format!("bad sidecar JSON: {e}")))?,
        ),
        Err(_) => None,
    };
    let rate = rate_override
        .or(sidecar.map(|s| s.sample_rate))
        .unwrap_or(DEFAULT_SAMPLE_RATE);
    let scale = sidecar.map(|s| s.scale).unwrap_or(DEFAULT_SCALE);
    pulse_from_csv(&text, rate, scale)
}

pub fn samples_to_csv(samples: &[i64]) -> String {
    let mut out = String::with_capacity(samples.len() * 10 + 16);
    out.push_str(PULSE_HEADER);
    out.push('\n');
    for (i, s) in samples.iter().enumerate() {
        out.push_str(&format!("{i},{s}\n"));
    }
    out
}

/// Emitted integer samples as `index,value` rows.
pub fn write_samples_csv(path: impl AsRef<Path>, samples: &[i64]) -> Result<()> {
    fs::write(path, samples_to_csv(samples))?;
    Ok(())
}

pub fn read_samples_csv(path: impl AsRef<Path>) -> Result<Vec<i64>> {
    let text = fs::read_to_string(path)?;
    let pulse = pulse_from_csv(&text, DEFAULT_SAMPLE_RATE, DEFAULT_SCALE)?;
    Ok(pulse.samples().iter().map(|&v| v as i64).collect())
}

/// `bin_hz,ref_mag,test_mag,abs_err` rows.
pub fn spectrum_to_csv(report: &SpectrumReport) -> String {
    let mut out = String::from("bin_hz,ref_mag,test_mag,abs_err\n");
    for k in 0..report.bins_hz.len() {
        out.push_str(&format!(
            "{},{},{},{}\n",
            report.bins_hz[k], report.ref_mag[k], report.test_mag[k], report.abs_err[k]
        ));
    }
    out
}

/// `index,error` rows.
pub fn errors_to_csv(errors: &[f64]) -> String {
    let mut out = String::from("index,error\n");
    for (i, e) in errors.iter().enumerate() {
        out.push_str(&format!("{i},{e}\n"));
    }
    out
}
