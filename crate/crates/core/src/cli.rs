//! `ncdft` command line: analyze, sweep, bench, plan.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::audio::{read_wav, stream_analyze};
use crate::engine::NcEngine;
use crate::error::{Error, Result};
use crate::noise::pink_noise;
use crate::oracle::{sweep_response, ResponseSource};
use crate::scale::{plan_bank, NoteScaleConfig};

#[derive(Debug, Parser)]
#[command(
    name = "ncdft",
    version,
    about = "Note-aligned sliding NC-DFT analysis"
)]
struct Cli {
    #[command(flatten)]
    bank: BankArgs,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct BankArgs {
    /// Sample rate in Hz [default: 48000, or the input file's rate for analyze]
    #[arg(long, global = true)]
    sample_rate: Option<u32>,

    #[arg(long, global = true, default_value_t = 24)]
    bins_per_octave: u32,

    #[arg(long, global = true, default_value_t = 8)]
    octaves: u32,

    /// MIDI note of the lowest bin (21 = A0)
    #[arg(
        long,
        global = true,
        default_value_t = 21,
        allow_negative_numbers = true
    )]
    start_note: i32,

    /// Longest window in seconds
    #[arg(long, global = true, default_value_t = 0.125)]
    max_window: f64,

    /// Pitch of A4 in Hz
    #[arg(long, global = true, default_value_t = 440.0)]
    reference_pitch: f64,
}

impl BankArgs {
    fn config(&self, sample_rate: Option<u32>) -> NoteScaleConfig {
        NoteScaleConfig {
            reference_pitch: self.reference_pitch,
            lowest_note_midi: self.start_note,
            octaves: self.octaves,
            bins_per_octave: self.bins_per_octave,
            sample_rate: self.sample_rate.or(sample_rate).unwrap_or(48_000),
            max_window_seconds: self.max_window,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum OutputFormat {
    Csv,
    Pgm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Baseline {
    Rectangular,
    None,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SweepSource {
    Engine,
    Oracle,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Spectrogram of a 16-bit PCM WAV file
    Analyze {
        input: PathBuf,
        /// Output path [default: stdout]
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "csv")]
        format: OutputFormat,
        #[arg(long, default_value_t = 60.0)]
        frame_rate: f64,
    },
    /// Frequency response of one bin to swept full-scale tones
    Sweep {
        /// Bin to measure [default: the bin nearest 440 Hz]
        #[arg(long)]
        bin_index: Option<usize>,
        /// Total swept span in Hz, centered on the bin [default: 3 bin widths]
        #[arg(long)]
        span: Option<f64>,
        #[arg(long, default_value_t = 1000)]
        steps: usize,
        #[arg(long, value_enum, default_value = "none")]
        baseline: Baseline,
        #[arg(long, value_enum, default_value = "engine")]
        source: SweepSource,
        /// CSV path for the bin's curve [default: stdout]
        #[arg(long)]
        out: Option<PathBuf>,
        /// CSV path for the rectangular baseline curve
        #[arg(long)]
        baseline_out: Option<PathBuf>,
    },
    /// Throughput over synthetic pink noise
    Bench {
        /// Duration of synthetic audio
        #[arg(long, default_value_t = 10.0)]
        seconds: f64,
        /// Total bin count; must be a multiple of --octaves
        #[arg(long)]
        bins: Option<u32>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Print the planned bin bank
    Plan,
}

/// Runs the CLI against the process's stdout and stderr.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with(argv, &mut io::stdout().lock(), &mut io::stderr().lock())
}

/// Runs the CLI with explicit output streams; returns the exit code.
pub fn run_with<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = write!(stdout, "{e}");
            return 0;
        }
        Err(e) => {
            let text = e.to_string();
            let line = text.lines().next().unwrap_or("invalid arguments");
            let _ = writeln!(stderr, "{line}");
            return 2;
        }
    };
    match execute(cli, stdout, stderr) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            1
        }
    }
}

fn execute(cli: Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Plan => plan(&cli.bank.config(None), stdout),
        Command::Analyze {
            input,
            out,
            format,
            frame_rate,
        } => {
            let stream = read_wav(&input).map_err(|e| match e {
                Error::Io(io) => Error::Io(io::Error::new(
                    io.kind(),
                    format!("{}: {io}", input.display()),
                )),
                other => other,
            })?;
            let config = cli.bank.config(Some(stream.sample_rate));
            let spectrogram = stream_analyze(&stream, &config, frame_rate)?;
            let mut sink: Box<dyn Write + '_> = match &out {
                Some(path) => Box::new(File::create(path)?),
                None => Box::new(&mut *stdout),
            };
            match format {
                OutputFormat::Csv => spectrogram.write_csv(&mut sink),
                OutputFormat::Pgm => spectrogram.write_pgm(&mut sink),
            }
        }
        Command::Sweep {
            bin_index,
            span,
            steps,
            baseline,
            source,
            out,
            baseline_out,
        } => {
            let config = cli.bank.config(None);
            let plans = plan_bank(&config)?;
            let index = bin_index.unwrap_or_else(|| config.nearest_bin(440.0));
            let plan = plans.get(index).ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "--bin-index {index} out of range, bank has {} bins",
                    plans.len()
                ))
            })?;
            let w = plan.bandwidth();
            let span = span.unwrap_or(3.0 * w);
            if !(span > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "--span must be positive, got {span}"
                )));
            }
            let lo = plan.f_center_quantized - span / 2.0;
            let hi = plan.f_center_quantized + span / 2.0;
            let source = match source {
                SweepSource::Engine => ResponseSource::Engine,
                SweepSource::Oracle => ResponseSource::Oracle,
            };
            let curve = sweep_response(plan, lo, hi, steps, source)?;
            match &out {
                Some(path) => curve.write_csv(File::create(path)?)?,
                None => curve.write_csv(&mut *stdout)?,
            }
            let step = span / (steps - 1) as f64;
            writeln!(
                stderr,
                "bin {index}: center {:.4} Hz, N {}, M {}, expected support {:.4} Hz",
                plan.f_center_quantized, plan.window_len, plan.half_periods, w
            )?;
            writeln!(
                stderr,
                "support width {:.4} Hz (step {step:.4} Hz), out-of-band max {:.1} dB",
                curve.measured_support_width,
                curve.max_out_of_band_db()
            )?;
            if baseline == Baseline::Rectangular {
                let rect = sweep_response(plan, lo, hi, steps, ResponseSource::Rectangular)?;
                if let Some(path) = &baseline_out {
                    rect.write_csv(File::create(path)?)?;
                }
                writeln!(
                    stderr,
                    "rectangular main lobe {:.4} Hz, highest sidelobe {:.1} dB",
                    rect.measured_support_width,
                    rect.max_out_of_band_db()
                )?;
            } else if baseline_out.is_some() {
                return Err(Error::InvalidArgument(
                    "--baseline-out needs --baseline rectangular".into(),
                ));
            }
            Ok(())
        }
        Command::Bench {
            seconds,
            bins,
            seed,
        } => {
            let mut config = cli.bank.config(None);
            if let Some(bins) = bins {
                if bins == 0 || bins % config.octaves != 0 {
                    return Err(Error::InvalidArgument(format!(
                        "--bins {bins} is not a positive multiple of --octaves {}",
                        config.octaves
                    )));
                }
                config.bins_per_octave = bins / config.octaves;
            }
            if !(seconds > 0.0) || !seconds.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "--seconds must be positive, got {seconds}"
                )));
            }
            let report = bench(&config, seconds, seed)?;
            writeln!(stdout, "bins: {}", report.bins)?;
            writeln!(stdout, "samples: {}", report.samples)?;
            writeln!(stdout, "elapsed_s: {:.6}", report.elapsed_seconds)?;
            writeln!(
                stdout,
                "samples_per_second: {:.0}",
                report.samples_per_second()
            )?;
            writeln!(stdout, "us_per_sample: {:.4}", report.micros_per_sample())?;
            writeln!(stdout, "realtime_factor: {:.1}", report.realtime_factor())?;
            Ok(())
        }
    }
}

fn plan(config: &NoteScaleConfig, out: &mut dyn Write) -> Result<()> {
    let plans = plan_bank(config)?;
    writeln!(
        out,
        "{:>5} {:>12} {:>12} {:>6} {:>4} {:>12} {:>12} {:>10} {:>10}",
        "index", "f_center", "f_quantized", "N", "M", "f_left", "f_right", "W_NC", "variable_q"
    )?;
    for p in &plans {
        writeln!(
            out,
            "{:>5} {:>12.4} {:>12.4} {:>6} {:>4} {:>12.4} {:>12.4} {:>10.4} {:>10}",
            p.index,
            p.f_center,
            p.f_center_quantized,
            p.window_len,
            p.half_periods,
            p.f_left,
            p.f_right,
            p.bandwidth(),
            p.is_variable_q
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy)]
pub struct BenchReport {
    pub bins: usize,
    pub samples: usize,
    pub sample_rate: u32,
    pub elapsed_seconds: f64,
}

impl BenchReport {
    pub fn samples_per_second(&self) -> f64 {
        self.samples as f64 / self.elapsed_seconds
    }

    pub fn micros_per_sample(&self) -> f64 {
        1e6 * self.elapsed_seconds / self.samples as f64
    }

    pub fn realtime_factor(&self) -> f64 {
        self.samples_per_second() / self.sample_rate as f64
    }
}

/// Times the engine over `seconds` of pink noise, fed in 10 ms packets.
pub fn bench(config: &NoteScaleConfig, seconds: f64, seed: u64) -> Result<BenchReport> {
    let mut engine = NcEngine::from_config(config)?;
    let samples = (seconds * config.sample_rate as f64).round() as usize;
    let input = pink_noise(samples, seed);
    let packet = crate::audio::default_packet_len(config.sample_rate);
    let start = Instant::now();
    for chunk in input.chunks(packet) {
        engine.process_block(chunk);
    }
    let elapsed = start.elapsed().as_secs_f64();
    // Keep the result observable so the loop is not optimized out.
    std::hint::black_box(engine.accumulators(0));
    Ok(BenchReport {
        bins: engine.bin_count(),
        samples,
        sample_rate: config.sample_rate,
        elapsed_seconds: elapsed.max(f64::MIN_POSITIVE),
    })
}
