//! The compress and decompress subcommands.

use serde::Serialize;
use std::path::PathBuf;

use pulsec::metrics::{footprint, time_domain_error, ErrorReport, FootprintReport};
use pulsec::qafit::{compress_naive, quantisation_aware_fit, segment_cost, QaFitOptions};
use pulsec::spline::{fit_float, optimize_knots_local, uniform_knots};
use pulsec::{Error, Pulse, Result, SymmetryMode};

use crate::config::{load, CompressConfig};
use crate::manifest::{path_for, Manifest};
use crate::util::write_atomic;
use crate::{CompressArgs, DecompressArgs};

/// Builds a pulse from a generator spec like `blackman:20000:32000`.
fn generate(spec: &str, sample_rate: f64) -> Result<Pulse> {
    let parts: Vec<&str> = spec.split(':').collect();
    let num = |s: &str| -> Result<f64> {
        s.parse()
            .map_err(|_| Error::invalid(format!("bad number '{s}' in generator spec")))
    };
    let int = |s: &str| -> Result<usize> {
        s.parse()
            .map_err(|_| Error::invalid(format!("bad length '{s}' in generator spec")))
    };
    let mut pulse = match (parts[0], parts.len()) {
        ("blackman", 3) => pulsec::gen_blackman(int(parts[1])?, num(parts[2])?),
        ("gaussian", 5) => pulsec::gen_gaussian(
            int(parts[1])?,
            num(parts[2])?,
            num(parts[3])?,
            num(parts[4])?,
            None,
            sample_rate,
        ),
        ("gaussian", 6) => pulsec::gen_gaussian(
            int(parts[1])?,
            num(parts[2])?,
            num(parts[3])?,
            num(parts[4])?,
            Some(num(parts[5])?),
            sample_rate,
        ),
        ("sigmoid", 4) => pulsec::gen_sigmoid(int(parts[1])?, num(parts[2])?, num(parts[3])?),
        ("chirp", 4) => {
            pulsec::gen_piecewise_quadratic_chirp(int(parts[1])?, num(parts[2])?, num(parts[3])?)
        }
        _ => Err(Error::invalid(format!(
            "unknown generator spec '{spec}' (expected blackman:LEN:AMP, \
             gaussian:LEN:CENTER:SIGMA_SQ:AMP[:CARRIER_HZ], sigmoid:LEN:STEEPNESS:AMP, \
             or chirp:LEN:F0:FF)"
        ))),
    }?;
    pulse.set_sample_rate(sample_rate)?;
    Ok(pulse)
}

#[derive(Serialize)]
struct ResolvedCompress {
    input: Option<String>,
    generator: Option<String>,
    segments: usize,
    continuity: u8,
    optimize_knots: bool,
    knot_iters: usize,
    symmetry: SymmetryMode,
    qa_fit: bool,
    sample_rate: f64,
    format: pulsec::FixedPointFormat,
    qafit: QaFitOptions,
}

#[derive(Serialize)]
struct SegmentRow {
    segment: usize,
    n_samples: u32,
    seed_cost: f64,
    optimized_cost: f64,
    evaluations: u64,
}

#[derive(Serialize)]
struct CompressReport {
    pulse_len: usize,
    sample_rate: f64,
    boundaries: Vec<usize>,
    stage_one_residual: f64,
    symmetric: bool,
    seed_total_cost: f64,
    total_cost: f64,
    per_segment: Vec<SegmentRow>,
    error: ErrorReport,
    clamp_events: usize,
    footprint: FootprintReport,
    config: ResolvedCompress,
}

pub fn run(args: CompressArgs) -> Result<()> {
    let cfg: CompressConfig = load(args.config.as_deref())?;
    let sample_rate = args
        .sample_rate
        .or(cfg.sample_rate)
        .unwrap_or(pulsec::DEFAULT_SAMPLE_RATE);

    let pulse = match (&args.input, &args.gen) {
        (Some(path), None) => pulsec::io::read_pulse_csv(path, args.sample_rate.or(cfg.sample_rate))?,
        (None, Some(spec)) => generate(spec, sample_rate)?,
        _ => {
            return Err(Error::invalid(
                "exactly one of --input or --gen is required",
            ))
        }
    };

    let resolved = ResolvedCompress {
        input: args.input.as_ref().map(|p| p.display().to_string()),
        generator: args.gen.clone(),
        segments: args.segments.or(cfg.segments).unwrap_or(8),
        continuity: args.continuity.or(cfg.continuity).unwrap_or(1),
        optimize_knots: args.optimize_knots || cfg.optimize_knots.unwrap_or(false),
        knot_iters: args.knot_iters.or(cfg.knot_iters).unwrap_or(25),
        symmetry: args
            .symmetry
            .map(Into::into)
            .or(cfg.symmetry)
            .unwrap_or(SymmetryMode::Off),
        qa_fit: args.qa_fit || cfg.qa_fit.unwrap_or(false),
        sample_rate: pulse.sample_rate(),
        format: cfg.format.resolve(
            args.word_bits,
            args.frac_bits,
            args.alpha_bits,
            args.out_bits,
        )?,
        qafit: QaFitOptions {
            rng_seed: args.seed.unwrap_or(cfg.qafit.rng_seed),
            ..cfg.qafit.clone()
        },
    };

    let mut partition = uniform_knots(resolved.segments, pulse.len())?;
    if resolved.optimize_knots {
        partition =
            optimize_knots_local(&pulse, &partition, resolved.continuity, resolved.knot_iters)?;
    }
    let stage_one = fit_float(&pulse, &partition, resolved.continuity)?;

    let fmt = resolved.format;
    let (compressed, per_segment) = if resolved.qa_fit {
        let res =
            quantisation_aware_fit(&pulse, &stage_one, &fmt, &resolved.qafit, resolved.symmetry)?;
        let rows = res
            .per_segment
            .iter()
            .enumerate()
            .map(|(i, r)| SegmentRow {
                segment: i,
                n_samples: r.segment.n_samples,
                seed_cost: r.seed_cost,
                optimized_cost: r.optimized_cost,
                evaluations: r.evaluations,
            })
            .collect();
        (res.compressed, rows)
    } else {
        let cp = compress_naive(&pulse, &stage_one, &fmt, resolved.symmetry)?;
        let rows = cp
            .segments
            .iter()
            .enumerate()
            .map(|(i, seg)| {
                let (a, b) = stage_one.partition.segment_bounds(i);
                let cost = segment_cost(&pulse.samples()[a..b], seg, &fmt, 0.0);
                SegmentRow {
                    segment: i,
                    n_samples: seg.n_samples,
                    seed_cost: cost,
                    optimized_cost: cost,
                    evaluations: 0,
                }
            })
            .collect();
        (cp, rows)
    };

    let out = pulsec::emit(&compressed)?;
    let error = time_domain_error(&pulse, &out.samples, false)?;
    let fp = footprint(&compressed, fmt.out_bits, pulse.len() as u64, false);

    let report = CompressReport {
        pulse_len: pulse.len(),
        sample_rate: pulse.sample_rate(),
        boundaries: stage_one.partition.boundaries().to_vec(),
        stage_one_residual: stage_one.residual,
        symmetric: compressed.symmetric,
        seed_total_cost: per_segment.iter().map(|r| r.seed_cost).sum(),
        total_cost: per_segment.iter().map(|r| r.optimized_cost).sum(),
        per_segment,
        error,
        clamp_events: out.clamp_events,
        footprint: fp,
        config: resolved,
    };

    write_atomic(&args.output, &pulsec::io::cps_to_bytes(&compressed)?)?;
    let report_path = args
        .report
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("{}.report.json", args.output.display())));
    write_atomic(
        &report_path,
        serde_json::to_string_pretty(&report)
            .expect("report serializes")
            .as_bytes(),
    )?;

    let rng_seed = report.config.qafit.rng_seed;
    Manifest {
        tool_version: pulsec::VERSION,
        subcommand: "compress",
        config: &report.config,
        inputs: report.config.input.iter().cloned().collect(),
        outputs: vec![
            args.output.display().to_string(),
            report_path.display().to_string(),
        ],
        rng_seed,
    }
    .write(&path_for(&args.output))?;

    println!(
        "compressed {} samples into {} segments ({} bits, ratio {:.1}), max |error| {:.3}",
        report.pulse_len,
        compressed.segments.len(),
        report.footprint.compressed_bits,
        report.footprint.ratio,
        report.error.max_abs,
    );
    Ok(())
}

pub fn run_decompress(args: DecompressArgs) -> Result<()> {
    let cp = pulsec::io::read_cps(&args.input)?;
    let out = pulsec::emit(&cp)?;
    write_atomic(&args.output, pulsec::io::samples_to_csv(&out.samples).as_bytes())?;
    Manifest {
        tool_version: pulsec::VERSION,
        subcommand: "decompress",
        config: serde_json::json!({
            "format": cp.format,
            "segments": cp.segments.len(),
            "symmetric": cp.symmetric,
        }),
        inputs: vec![args.input.display().to_string()],
        outputs: vec![args.output.display().to_string()],
        rng_seed: 0,
    }
    .write(&path_for(&args.output))?;
    println!(
        "decompressed {} samples ({} clamped)",
        out.samples.len(),
        out.clamp_events
    );
    Ok(())
}
