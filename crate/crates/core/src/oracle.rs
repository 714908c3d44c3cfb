//! Floating point reference implementations.
//!
//! Nothing here reuses the engine's arithmetic: bin sums are evaluated
//! directly over an explicit window with `f64` trigonometry, and the
//! neighbour combination is written out again. The engine is only touched
//! as a device under test when a sweep asks for [`ResponseSource::Engine`].

use std::f64::consts::PI;
use std::io::{self, Write};
use std::sync::OnceLock;

use crate::engine::NcEngine;
use crate::error::{Error, Result};
use crate::scale::{plan_bank, BinPlan, NoteScaleConfig};
use crate::FULL_SCALE;

/// Number of window positions averaged or maximized over when measuring a
/// steady tone.
const STEADY_POSITIONS: usize = 8;

/// Relative level below which a swept response counts as outside the lobe.
pub const SUPPORT_FLOOR: f64 = 1e-4;

/// `(sum x[n] cos(w (n + origin)), -sum x[n] sin(w (n + origin)))` with
/// `w = 2 pi f / F_S`.
pub fn direct_bin_sum(samples: &[i16], f: f64, sample_rate: f64, phase_origin: i64) -> (f64, f64) {
    let w = 2.0 * PI * f / sample_rate;
    samples
        .iter()
        .enumerate()
        .fold((0.0, 0.0), |(re, im), (n, &x)| {
            let phase = w * (n as i64 + phase_origin) as f64;
            let x = x as f64;
            (re + x * phase.cos(), im - x * phase.sin())
        })
}

/// Left and right component sums of `plan` over `window` (the last
/// `window_len` samples, oldest first), phase-referenced to the sample after
/// the window.
pub fn component_sums(window: &[i16], plan: &BinPlan) -> ((f64, f64), (f64, f64)) {
    assert_eq!(window.len(), plan.window_len);
    let fs = plan.sample_rate as f64;
    let origin = -(plan.window_len as i64);
    (
        direct_bin_sum(window, plan.f_left, fs, origin),
        direct_bin_sum(window, plan.f_right, fs, origin),
    )
}

/// Neighbour combination of the component sums.
pub fn nc_value(window: &[i16], plan: &BinPlan) -> f64 {
    let ((lr, li), (rr, ri)) = component_sums(window, plan);
    let dot = lr * rr + li * ri;
    if dot < 0.0 {
        -dot
    } else {
        0.0
    }
}

/// Uncalibrated NC magnitude: `sqrt(combination) / (N * full scale)`.
pub fn nc_magnitude(window: &[i16], plan: &BinPlan) -> f64 {
    nc_value(window, plan).sqrt() / (plan.window_len as f64 * FULL_SCALE)
}

/// Rectangular-window DFT magnitude at the bin's quantized center, scaled so
/// a full-scale tone on the center reads close to 1.
pub fn rectangular_magnitude(window: &[i16], plan: &BinPlan) -> f64 {
    let (re, im) = direct_bin_sum(window, plan.f_center_quantized, plan.sample_rate as f64, 0);
    2.0 * re.hypot(im) / (plan.window_len as f64 * FULL_SCALE)
}

/// `amplitude * sin(2 pi f n / F_S)` rounded to 16 bits, no dither.
pub fn tone(frequency: f64, sample_rate: f64, len: usize, amplitude: f64) -> Vec<i16> {
    let w = 2.0 * PI * frequency / sample_rate;
    (0..len)
        .map(|n| {
            (amplitude * (w * n as f64).sin())
                .round()
                .clamp(-32768.0, 32767.0) as i16
        })
        .collect()
}

/// Window end positions inside the third window of a `3N`-sample tone.
fn steady_ends(window_len: usize) -> impl Iterator<Item = usize> {
    (0..STEADY_POSITIONS).map(move |j| 2 * window_len + j * window_len / STEADY_POSITIONS)
}

/// Gain making a full-scale tone on the bin's quantized center read 1.0.
pub fn calibrate(plan: &BinPlan) -> f64 {
    let n = plan.window_len;
    let x = tone(
        plan.f_center_quantized,
        plan.sample_rate as f64,
        3 * n,
        FULL_SCALE,
    );
    let mean = steady_ends(n)
        .map(|end| nc_magnitude(&x[end - n..end], plan))
        .sum::<f64>()
        / STEADY_POSITIONS as f64;
    1.0 / mean
}

/// Calibration of the 440 Hz bin of the default bank, computed once.
pub fn reference_calibration() -> f64 {
    static CAL: OnceLock<f64> = OnceLock::new();
    *CAL.get_or_init(|| {
        let cfg = NoteScaleConfig::default();
        let plans = plan_bank(&cfg).expect("default bank plans");
        calibrate(&plans[cfg.nearest_bin(440.0)])
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResponseSource {
    /// The integer engine, one fresh single-bin bank per tone.
    Engine,
    /// Floating point NC bin.
    Oracle,
    /// Floating point rectangular-window DFT bin at the same `N`.
    Rectangular,
}

/// Relative response of one bin to a series of steady tones.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseCurve {
    pub source: ResponseSource,
    pub frequencies: Vec<f64>,
    /// Normalized so the largest entry is exactly 1.0.
    pub relative_magnitudes: Vec<f64>,
    pub peak_frequency: f64,
    /// Nulls bounding the lobe around the peak. A null where the response
    /// drops under [`SUPPORT_FLOOR`] is placed halfway between the sweep
    /// points on either side of it; a null at a local minimum is that point.
    pub lobe: (f64, f64),
    pub measured_support_width: f64,
    /// Largest relative response outside the lobe guard band.
    pub max_out_of_band: f64,
}

impl ResponseCurve {
    pub fn max_out_of_band_db(&self) -> f64 {
        20.0 * self.max_out_of_band.log10()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "frequency_hz,relative_magnitude")?;
        for (f, m) in self.frequencies.iter().zip(&self.relative_magnitudes) {
            writeln!(out, "{f},{m}")?;
        }
        Ok(())
    }
}

/// Measures steady responses of `plan` at each frequency of `frequencies`.
pub struct ResponseMeter<'a> {
    plan: &'a BinPlan,
    source: ResponseSource,
    engine: Option<NcEngine>,
}

impl<'a> ResponseMeter<'a> {
    pub fn new(plan: &'a BinPlan, source: ResponseSource) -> Result<Self> {
        let engine = match source {
            ResponseSource::Engine => Some(NcEngine::with_calibration(vec![plan.clone()], 1.0)?),
            _ => None,
        };
        Ok(Self {
            plan,
            source,
            engine,
        })
    }

    /// Largest magnitude over several window positions once the tone has
    /// run for two windows.
    pub fn steady(&mut self, frequency: f64) -> f64 {
        let n = self.plan.window_len;
        let x = tone(frequency, self.plan.sample_rate as f64, 3 * n, FULL_SCALE);
        match (&mut self.engine, self.source) {
            (Some(engine), _) => {
                engine.reset();
                let mut fed = 0;
                let mut best: f64 = 0.0;
                for end in steady_ends(n) {
                    engine.process_block(&x[fed..end]);
                    fed = end;
                    best = best.max(engine.raw_magnitudes()[0]);
                }
                best
            }
            (None, ResponseSource::Rectangular) => steady_ends(n)
                .map(|end| rectangular_magnitude(&x[end - n..end], self.plan))
                .fold(0.0, f64::max),
            (None, _) => steady_ends(n)
                .map(|end| nc_magnitude(&x[end - n..end], self.plan))
                .fold(0.0, f64::max),
        }
    }
}

/// Response of `plan` at arbitrary (strictly increasing) frequencies.
pub fn measure_response(
    plan: &BinPlan,
    frequencies: &[f64],
    source: ResponseSource,
) -> Result<ResponseCurve> {
    if frequencies.len() < 3 {
        return Err(Error::InvalidArgument(
            "sweep needs at least 3 points".into(),
        ));
    }
    if frequencies.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidArgument(
            "sweep frequencies must be strictly increasing".into(),
        ));
    }
    let mut meter = ResponseMeter::new(plan, source)?;
    let raw: Vec<f64> = frequencies.iter().map(|&f| meter.steady(f)).collect();

    let (peak_idx, &peak) = raw
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty");
    if !(peak > 0.0) {
        return Err(Error::InvalidArgument(
            "bin does not respond anywhere in the sweep range".into(),
        ));
    }
    let rel: Vec<f64> = raw.iter().map(|&m| m / peak).collect();

    // Walk out from the peak to the first null on each side: a point under
    // the floor, or a local minimum below half the peak. Ripple in the upper
    // half of the lobe is stepped over.
    let continues = |from: usize, to: usize| {
        rel[from] > SUPPORT_FLOOR && (rel[to] <= rel[from] || rel[from] > 0.5)
    };
    let mut lo = peak_idx;
    while lo > 0 && continues(lo, lo - 1) {
        lo -= 1;
    }
    let mut hi = peak_idx;
    while hi + 1 < rel.len() && continues(hi, hi + 1) {
        hi += 1;
    }
    // A null under the floor lies between the last point inside the lobe and
    // the first one outside; a local minimum is taken as the null itself.
    let edge = |outside: usize, inside: usize| {
        if rel[outside] <= SUPPORT_FLOOR && outside != inside {
            0.5 * (frequencies[outside] + frequencies[inside])
        } else {
            frequencies[outside]
        }
    };
    let lobe = (
        edge(lo, (lo + 1).min(peak_idx)),
        edge(hi, hi.saturating_sub(1).max(peak_idx)),
    );

    let (band_lo, band_hi) = match source {
        ResponseSource::Rectangular => lobe,
        _ => {
            let w = plan.bandwidth();
            (plan.f_left - w / 2.0, plan.f_right + w / 2.0)
        }
    };
    let max_out_of_band = frequencies
        .iter()
        .zip(&rel)
        .filter(|(&f, _)| f < band_lo || f > band_hi)
        .map(|(_, &m)| m)
        .fold(0.0, f64::max);

    Ok(ResponseCurve {
        source,
        frequencies: frequencies.to_vec(),
        relative_magnitudes: rel,
        peak_frequency: frequencies[peak_idx],
        lobe,
        measured_support_width: lobe.1 - lobe.0,
        max_out_of_band,
    })
}

/// Linear sweep of `steps` tones from `f_lo` to `f_hi` inclusive.
pub fn sweep_response(
    plan: &BinPlan,
    f_lo: f64,
    f_hi: f64,
    steps: usize,
    source: ResponseSource,
) -> Result<ResponseCurve> {
    if !(f_lo < f_hi) || !(f_lo > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "sweep range {f_lo}..{f_hi} Hz is empty or non-positive"
        )));
    }
    if steps < 100 {
        return Err(Error::InvalidArgument(format!(
            "sweep needs at least 100 steps, got {steps}"
        )));
    }
    let step = (f_hi - f_lo) / (steps - 1) as f64;
    let freqs: Vec<f64> = (0..steps).map(|i| f_lo + step * i as f64).collect();
    measure_response(plan, &freqs, source)
}

/// Geometric sweep of `steps` tones from `f_lo` to `f_hi` inclusive.
pub fn log_sweep_response(
    plan: &BinPlan,
    f_lo: f64,
    f_hi: f64,
    steps: usize,
    source: ResponseSource,
) -> Result<ResponseCurve> {
    if !(f_lo < f_hi) || !(f_lo > 0.0) || steps < 3 {
        return Err(Error::InvalidArgument(format!(
            "invalid log sweep {f_lo}..{f_hi} Hz in {steps} steps"
        )));
    }
    let ratio = (f_hi / f_lo).ln() / (steps - 1) as f64;
    let freqs: Vec<f64> = (0..steps)
        .map(|i| f_lo * (ratio * i as f64).exp())
        .collect();
    measure_response(plan, &freqs, source)
}
