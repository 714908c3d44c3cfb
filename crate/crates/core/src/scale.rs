//! Note scale and NC bin bank planning.
//!
//! Every bin is built from two DFT components that share one window length
//! `N`. The components sit at `(M - 1)` and `(M + 1)` half-periods per window,
//! so the right component completes exactly one more cycle over the window
//! than the left one, and the bin responds to the span between them. `M` is
//! the half-period count of the bin's (quantized) center frequency.

use crate::error::{Error, Result};

/// Smallest half-period count accepted for a planned bin.
pub const MIN_HALF_PERIODS: u32 = 5;

/// Smallest window accepted for a planned bin.
pub const MIN_WINDOW_LEN: usize = 3;

/// Frequency of a (possibly fractional) MIDI note on the equal-tempered scale.
pub fn note_frequency(note: f64, reference_pitch: f64) -> f64 {
    reference_pitch * ((note - 69.0) / 12.0).exp2()
}

/// Window length a plain DFT would need for bins spaced `delta_f` apart.
///
/// Only used for comparison; NC bins need half of it for the same resolution.
pub fn classical_dft_window(delta_f: f64, sample_rate: f64) -> Result<usize> {
    if !(delta_f > 0.0) || !delta_f.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "bin spacing must be positive, got {delta_f}"
        )));
    }
    if !(sample_rate > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "sample rate must be positive, got {sample_rate}"
        )));
    }
    Ok((sample_rate / (2.0 * delta_f)).ceil() as usize)
}

/// Window length holding a whole number of half-periods of `f_center` while
/// giving a bandwidth close to `target_bandwidth`.
pub fn window_size(f_center: f64, target_bandwidth: f64, sample_rate: f64) -> Result<usize> {
    if !(target_bandwidth > 0.0) || !(target_bandwidth <= f_center) {
        return Err(Error::InvalidArgument(format!(
            "bandwidth {target_bandwidth} Hz must lie in (0, {f_center}]"
        )));
    }
    if !(f_center < sample_rate / 2.0) {
        return Err(Error::InvalidArgument(format!(
            "center {f_center} Hz is not below Nyquist ({} Hz)",
            sample_rate / 2.0
        )));
    }
    let half_periods = (2.0 * f_center / target_bandwidth).round();
    Ok((half_periods * sample_rate / (2.0 * f_center)).round() as usize)
}

/// Half-period count of `f_center` over `window_len` samples, rounded.
pub fn half_period_count(f_center: f64, window_len: usize, sample_rate: f64) -> u32 {
    (2.0 * f_center * window_len as f64 / sample_rate).round() as u32
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoteScaleConfig {
    /// Pitch of MIDI note 69 (A4), in Hz.
    pub reference_pitch: f64,
    /// Note of the lowest bin.
    pub lowest_note_midi: i32,
    pub octaves: u32,
    pub bins_per_octave: u32,
    pub sample_rate: u32,
    /// Upper bound on any bin's window, in seconds.
    pub max_window_seconds: f64,
}

impl Default for NoteScaleConfig {
    fn default() -> Self {
        Self {
            reference_pitch: 440.0,
            lowest_note_midi: 21,
            octaves: 8,
            bins_per_octave: 24,
            sample_rate: 48_000,
            max_window_seconds: 0.125,
        }
    }
}

impl NoteScaleConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidConfig(msg));
        if self.bins_per_octave < 1 {
            return fail("bins_per_octave must be at least 1".into());
        }
        if self.octaves < 1 {
            return fail("octaves must be at least 1".into());
        }
        if self.sample_rate == 0 {
            return fail("sample_rate must be positive".into());
        }
        if !(self.max_window_seconds > 0.0) || !self.max_window_seconds.is_finite() {
            return fail(format!(
                "max_window_seconds must be positive, got {}",
                self.max_window_seconds
            ));
        }
        if !(self.reference_pitch > 0.0) || !self.reference_pitch.is_finite() {
            return fail(format!(
                "reference_pitch must be positive, got {}",
                self.reference_pitch
            ));
        }
        let top = self.grid_frequency(self.bin_count() as i64 - 1);
        if top >= self.sample_rate as f64 / 2.0 {
            return fail(format!(
                "highest bin {top:.1} Hz is not below Nyquist ({} Hz)",
                self.sample_rate as f64 / 2.0
            ));
        }
        Ok(())
    }

    pub fn bin_count(&self) -> usize {
        self.octaves as usize * self.bins_per_octave as usize
    }

    /// Longest permitted window in samples.
    pub fn max_window_len(&self) -> usize {
        (self.max_window_seconds * self.sample_rate as f64).round() as usize
    }

    /// Ideal frequency of grid position `i`; `i` may lie outside the bank.
    pub fn grid_frequency(&self, i: i64) -> f64 {
        let note = self.lowest_note_midi as f64 + 12.0 * i as f64 / self.bins_per_octave as f64;
        note_frequency(note, self.reference_pitch)
    }

    /// Index of the bin whose ideal center is closest to `frequency`.
    pub fn nearest_bin(&self, frequency: f64) -> usize {
        let pos = (frequency / self.reference_pitch).log2() * self.bins_per_octave as f64
            + (69 - self.lowest_note_midi) as f64 * self.bins_per_octave as f64 / 12.0;
        (pos.round().max(0.0) as usize).min(self.bin_count().saturating_sub(1))
    }
}

/// Static design of one NC bin.
#[derive(Debug, Clone, PartialEq)]
pub struct BinPlan {
    pub index: usize,
    /// Ideal center from the note scale.
    pub f_center: f64,
    /// Designed bandwidth before window quantization.
    pub target_bandwidth: f64,
    pub window_len: usize,
    /// Half-periods of the quantized center frequency within the window.
    pub half_periods: u32,
    pub f_center_quantized: f64,
    pub f_left: f64,
    pub f_right: f64,
    pub sample_rate: u32,
    /// Set when the window clamp moved the bin off constant-Q.
    pub is_variable_q: bool,
    pub smoothing_time_constant: f64,
}

impl BinPlan {
    /// Builds a bin from its center and designed bandwidth, clamping the
    /// window to `max_window_len`.
    pub fn design(
        index: usize,
        f_center: f64,
        target_bandwidth: f64,
        sample_rate: u32,
        max_window_len: usize,
    ) -> Result<Self> {
        let fs = sample_rate as f64;
        let infeasible = |reason: String| Error::InfeasibleBin {
            index,
            frequency: f_center,
            reason,
        };
        let mut window_len =
            window_size(f_center, target_bandwidth, fs).map_err(|e| infeasible(e.to_string()))?;
        let mut is_variable_q = false;
        if window_len > max_window_len {
            window_len = max_window_len;
            is_variable_q = true;
        }
        let half_periods = half_period_count(f_center, window_len, fs);
        let plan = Self::from_counts(index, window_len, half_periods, sample_rate)?;
        Ok(Self {
            f_center,
            target_bandwidth,
            is_variable_q,
            ..plan
        })
    }

    /// Builds a bin directly from its window and half-period count.
    pub fn from_counts(
        index: usize,
        window_len: usize,
        half_periods: u32,
        sample_rate: u32,
    ) -> Result<Self> {
        let fs = sample_rate as f64;
        let n = window_len as f64;
        let at = |m: u32| m as f64 * fs / (2.0 * n);
        let f_center_quantized = at(half_periods);
        let infeasible = |reason: String| Error::InfeasibleBin {
            index,
            frequency: f_center_quantized,
            reason,
        };
        if window_len < MIN_WINDOW_LEN {
            return Err(infeasible(format!(
                "window of {window_len} samples is shorter than {MIN_WINDOW_LEN}"
            )));
        }
        if half_periods < MIN_HALF_PERIODS {
            return Err(infeasible(format!(
                "window holds {half_periods} half-periods, need at least {MIN_HALF_PERIODS}"
            )));
        }
        // The right component must stay below Nyquist: (M + 1) < N.
        if half_periods as usize + 1 >= window_len {
            return Err(infeasible(format!(
                "right component at {:.1} Hz reaches Nyquist",
                at(half_periods + 1)
            )));
        }
        Ok(Self {
            index,
            f_center: f_center_quantized,
            target_bandwidth: fs / n,
            window_len,
            half_periods,
            f_center_quantized,
            f_left: at(half_periods - 1),
            f_right: at(half_periods + 1),
            sample_rate,
            is_variable_q: false,
            smoothing_time_constant: 0.0,
        })
    }

    /// Realized NC bandwidth, `F_S / N`.
    pub fn bandwidth(&self) -> f64 {
        self.sample_rate as f64 / self.window_len as f64
    }

    pub fn window_seconds(&self) -> f64 {
        self.window_len as f64 / self.sample_rate as f64
    }

    pub fn left_half_periods(&self) -> u32 {
        self.half_periods - 1
    }

    pub fn right_half_periods(&self) -> u32 {
        self.half_periods + 1
    }
}

/// Plans the full exponential bank described by `config`.
pub fn plan_bank(config: &NoteScaleConfig) -> Result<Vec<BinPlan>> {
    config.validate()?;
    let count = config.bin_count();
    let max_len = config.max_window_len();
    let grid = |i: i64| config.grid_frequency(i);

    let mut plans = (0..count)
        .map(|i| {
            let k = i as i64;
            let bandwidth = if count == 1 || i == 0 {
                2.0 * (grid(k + 1) - grid(k))
            } else if i == count - 1 {
                2.0 * (grid(k) - grid(k - 1))
            } else {
                grid(k + 1) - grid(k - 1)
            };
            BinPlan::design(i, grid(k), bandwidth, config.sample_rate, max_len)
        })
        .collect::<Result<Vec<_>>>()?;

    // Even out response time: window time plus twice the smoothing constant
    // is roughly the longest window everywhere.
    let longest = plans
        .iter()
        .map(BinPlan::window_seconds)
        .fold(0.0, f64::max);
    for plan in &mut plans {
        plan.smoothing_time_constant = (longest - plan.window_seconds()).max(0.0) / 2.0;
    }
    Ok(plans)
}
