//! The bench subcommand: transfer fidelity grid, quantisation-width sweep,
//! and the three-shape fitting-error corpus.

use std::path::Path;

use pulsec::fixedpoint::{sweep_quantization_width, SweepOutcome};
use pulsec::metrics::time_domain_error;
use pulsec::qafit::{compress_naive, quantisation_aware_fit, SymmetryMode};
use pulsec::spline::{fit_float, uniform_knots};
use pulsec::stirap::REPORT_HEADER;
use pulsec::{Pulse, Result};

use crate::config::{load, BenchConfig};
use crate::manifest::Manifest;
use crate::util::write_atomic;
use crate::{BenchArgs, BenchName};

pub fn run(args: BenchArgs) -> Result<()> {
    let mut cfg: BenchConfig = load(args.config.as_deref())?;
    if let Some(seed) = args.seed {
        cfg.qafit.rng_seed = seed;
    }
    std::fs::create_dir_all(&args.out_dir)?;
    match args.name {
        BenchName::Stirap => stirap(&args.out_dir, &cfg),
        BenchName::WidthSweep => width_sweep(&args.out_dir, &cfg),
        BenchName::Corpus => corpus(&args.out_dir, &cfg),
    }
}

fn write_bench_outputs<C: serde::Serialize>(
    out_dir: &Path,
    name: &'static str,
    csv: String,
    config: C,
    rng_seed: u64,
) -> Result<()> {
    let csv_path = out_dir.join(format!("{name}.csv"));
    write_atomic(&csv_path, csv.as_bytes())?;
    let manifest_path = out_dir.join(format!("{name}.manifest.json"));
    Manifest {
        tool_version: pulsec::VERSION,
        subcommand: "bench",
        config,
        inputs: vec![],
        outputs: vec![csv_path.display().to_string()],
        rng_seed,
    }
    .write(&manifest_path)?;
    println!("wrote {}", csv_path.display());
    Ok(())
}

fn stirap(out_dir: &Path, cfg: &BenchConfig) -> Result<()> {
    let fmt = cfg.format.resolve(None, None, None, None)?;
    let rows = pulsec::run_benchmark(&cfg.stirap, &cfg.segment_counts, &fmt, &cfg.qafit)?;
    let mut csv = format!("{REPORT_HEADER}\nmethod,segments,fidelity,compressed_bits,ratio\n");
    for r in &rows {
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            r.method, r.segments, r.fidelity, r.compressed_bits, r.ratio
        ));
    }
    let echo = serde_json::json!({
        "stirap": cfg.stirap,
        "segment_counts": cfg.segment_counts,
        "format": fmt,
        "qafit": cfg.qafit,
    });
    write_bench_outputs(out_dir, "stirap", csv, echo, cfg.qafit.rng_seed)
}

/// Sweeps the coefficient widths on a mid-pulse segment of the reference
/// Gaussian and reports the worst predicted error per width.
fn width_sweep(out_dir: &Path, cfg: &BenchConfig) -> Result<()> {
    let n = cfg.corpus_length;
    let pulse = pulsec::gen_gaussian(n, (n as f64 - 1.0) / 2.0, (n as f64 / 10.6).powi(2), 32112.0, None, 1e9)?;
    let stage_one = fit_float(&pulse, &uniform_knots(7, n)?, 1)?;
    // a rising-edge segment, where all four coefficients are in play
    let seg_index = 2;
    let coeffs = pulsec::to_bowler(&stage_one.polys[seg_index]);
    let (a, b) = stage_one.partition.segment_bounds(seg_index);
    let rows = sweep_quantization_width(&coeffs, (b - a) as u32, &cfg.widths);

    let mut csv = String::from("word_bits,frac_bits,max_abs_error\n");
    for row in &rows {
        match &row.outcome {
            SweepOutcome::MaxAbsError(e) => {
                csv.push_str(&format!("{},{},{}\n", row.word_bits, row.frac_bits, e))
            }
            SweepOutcome::Overflow { coefficient } => csv.push_str(&format!(
                "{},{},overflow:{}\n",
                row.word_bits, row.frac_bits, coefficient
            )),
        }
    }
    let echo = serde_json::json!({
        "widths": cfg.widths,
        "segment_index": seg_index,
        "segment_samples": b - a,
        "coefficients": coeffs,
    });
    write_bench_outputs(out_dir, "width-sweep", csv, echo, 0)
}

/// Naive vs quantisation-aware fitting errors for the three reference shapes
/// across segment counts.
fn corpus(out_dir: &Path, cfg: &BenchConfig) -> Result<()> {
    let fmt = cfg.format.resolve(None, None, None, None)?;
    let n = cfg.corpus_length;
    let amp = 32112.0; // headroom below the 16-bit grid top for fit overshoot
    let shapes: Vec<(&str, Pulse)> = vec![
        (
            "gaussian",
            pulsec::gen_gaussian(n, (n as f64 - 1.0) / 2.0, (n as f64 / 10.6).powi(2), amp, None, 1e9)?,
        ),
        ("blackman", pulsec::gen_blackman(n, amp)?),
        ("sigmoid", pulsec::gen_sigmoid(n, 20.0 / n as f64, amp)?),
    ];

    let mut csv = String::from("shape,method,segments,max_abs,mean_abs,rms,max_abs_pct\n");
    for (shape, pulse) in &shapes {
        for &count in &cfg.corpus_segment_counts {
            let stage_one = fit_float(pulse, &uniform_knots(count, pulse.len())?, 1)?;
            let naive = compress_naive(pulse, &stage_one, &fmt, SymmetryMode::Off)?;
            let qa =
                quantisation_aware_fit(pulse, &stage_one, &fmt, &cfg.qafit, SymmetryMode::Off)?;
            for (method, cp) in [("float-fit", &naive), ("qa-fit", &qa.compressed)] {
                let out = pulsec::emit(cp)?;
                let e = time_domain_error(pulse, &out.samples, false)?;
                csv.push_str(&format!(
                    "{shape},{method},{count},{},{},{},{}\n",
                    e.max_abs, e.mean_abs, e.rms, e.max_abs_pct
                ));
            }
        }
    }
    let echo = serde_json::json!({
        "corpus_length": n,
        "corpus_segment_counts": cfg.corpus_segment_counts,
        "format": fmt,
        "qafit": cfg.qafit,
    });
    write_bench_outputs(out_dir, "corpus", csv, echo, cfg.qafit.rng_seed)
}
