//! JSON config files and flag/config/default resolution.

use serde::{Deserialize, Serialize};
use std::path::Path;

use pulsec::{Error, FixedPointFormat, QaFitOptions, Result, StirapConfig};

/// Partial fixed-point format; unset fields take the 36/20/16/16 defaults.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FormatConfig {
    pub word_bits: Option<u32>,
    pub frac_bits: Option<u32>,
    pub alpha_bits: Option<u32>,
    pub out_bits: Option<u32>,
}

impl FormatConfig {
    pub fn resolve(
        &self,
        word: Option<u32>,
        frac: Option<u32>,
        alpha: Option<u32>,
        out: Option<u32>,
    ) -> Result<FixedPointFormat> {
        let d = FixedPointFormat::default();
        FixedPointFormat::new(
            word.or(self.word_bits).unwrap_or(d.word_bits),
            frac.or(self.frac_bits).unwrap_or(d.frac_bits),
            alpha.or(self.alpha_bits).unwrap_or(d.alpha_bits),
            out.or(self.out_bits).unwrap_or(d.out_bits),
        )
    }
}

/// Config file for `compress`.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompressConfig {
    pub segments: Option<usize>,
    pub continuity: Option<u8>,
    pub optimize_knots: Option<bool>,
    pub knot_iters: Option<usize>,
    pub symmetry: Option<pulsec::SymmetryMode>,
    pub qa_fit: Option<bool>,
    pub sample_rate: Option<f64>,
    pub format: FormatConfig,
    pub qafit: QaFitOptions,
}

/// Config file for `bench`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    pub stirap: StirapConfig,
    pub segment_counts: Vec<usize>,
    pub format: FormatConfig,
    pub qafit: QaFitOptions,
    /// Width sweep: (word_bits, frac_bits) pairs.
    pub widths: Vec<(u32, u32)>,
    /// Width sweep and corpus: pulse length in samples.
    pub corpus_length: usize,
    pub corpus_segment_counts: Vec<usize>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            stirap: StirapConfig::default(),
            segment_counts: vec![2, 4, 6, 8, 10, 12, 14, 16, 20, 24],
            format: FormatConfig::default(),
            qafit: QaFitOptions::default(),
            widths: vec![
                (24, 8),
                (28, 12),
                (32, 16),
                (36, 20),
                (40, 24),
                (44, 28),
                (48, 32),
            ],
            corpus_length: 40000,
            corpus_segment_counts: vec![4, 6, 8, 12, 16, 20, 28, 40],
        }
    }
}

pub fn load<T: for<'de> Deserialize<'de> + Default>(path: Option<&Path>) -> Result<T> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)?;
            serde_json::from_str(&text)
                .map_err(|e| Error::Parse(format!("config {}: {e}", p.display())))
        }
    }
}
