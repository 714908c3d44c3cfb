//! Sliding-window NC-DFT engine.
//!
//! Every bin keeps four integer accumulators: real and imaginary sums of the
//! samples in its window against the left and right reference waves. A new
//! sample is multiplied by the reference values at its position and added;
//! the sample leaving the window is multiplied by the very same table entries
//! it was added with and subtracted. All of this is integer arithmetic, so a
//! window of zeros always brings the accumulators back to exactly zero.
//!
//! Reference tables are indexed by sample position modulo `2N`. A component
//! with `M'` half-periods per window has entry `p` at phase `pi * M' * p / N`,
//! so the entry `N` positions back is the same integer, negated when `M'` is
//! odd. The expiring sample therefore folds into the incoming one and the
//! update costs one multiply per accumulator. Only the first `N` entries are
//! stored; left and right half-period counts share a parity, so one sign
//! covers both tables.
//!
//! Input is processed bin by bin over runs of at most the shortest window,
//! which keeps each bin's table reads sequential.
//!
//! Magnitudes are computed on demand: both accumulator pairs are rotated to a
//! phase origin at the current sample, combined, square-rooted and normalized
//! by `N`, the table scale and full scale.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::oracle;
use crate::ring::SharedRingBuffer;
use crate::scale::{plan_bank, BinPlan, NoteScaleConfig};
use crate::FULL_SCALE;

/// Fixed-point scale of the reference tables.
pub const REFERENCE_SCALE: i32 = 1 << 15;

/// Cosine and sine of one component at each sample position of a `2N` cycle,
/// scaled by [`REFERENCE_SCALE`].
#[derive(Debug, Clone)]
pub struct ReferenceTable {
    window_len: usize,
    half_periods: u32,
    /// `(cos, sin)` for positions `0..N`; positions `N..2N` repeat them,
    /// negated when `half_periods` is odd.
    entries: Vec<[i32; 2]>,
}

impl ReferenceTable {
    pub fn new(window_len: usize, half_periods: u32) -> Self {
        assert!(window_len > 0);
        let r = REFERENCE_SCALE as f64;
        let n = window_len as f64;
        let cycle = 2 * window_len as u64;
        let entries = (0..window_len as u64)
            .map(|p| {
                let theta = PI * ((half_periods as u64 * p) % cycle) as f64 / n;
                [
                    (r * theta.cos()).round() as i32,
                    (r * theta.sin()).round() as i32,
                ]
            })
            .collect();
        Self {
            window_len,
            half_periods,
            entries,
        }
    }

    pub fn window_len(&self) -> usize {
        self.window_len
    }

    pub fn half_periods(&self) -> u32 {
        self.half_periods
    }

    /// Logical length, `2N`.
    pub fn len(&self) -> usize {
        2 * self.window_len
    }

    pub fn is_empty(&self) -> bool {
        self.window_len == 0
    }

    fn entry(&self, position: usize) -> [i32; 2] {
        let p = position % self.len();
        let [c, s] = self.entries[p % self.window_len];
        if p >= self.window_len && self.half_periods % 2 == 1 {
            [-c, -s]
        } else {
            [c, s]
        }
    }

    pub fn cos(&self, position: usize) -> i32 {
        self.entry(position)[0]
    }

    pub fn sin(&self, position: usize) -> i32 {
        self.entry(position)[1]
    }
}

/// The four window sums of one bin, in table-scaled sample units.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct Accumulators {
    pub re_left: i64,
    pub im_left: i64,
    pub re_right: i64,
    pub im_right: i64,
}

impl Accumulators {
    pub fn is_zero(&self) -> bool {
        *self == Self::default()
    }

    pub fn as_array(&self) -> [i64; 4] {
        [self.re_left, self.im_left, self.re_right, self.im_right]
    }
}

#[derive(Debug, Clone)]
struct BinState {
    left: ReferenceTable,
    right: ReferenceTable,
    window_len: usize,
    /// Half-period counts are odd: entries flip sign every `N` samples and
    /// the expiring sample's entry is the incoming one negated.
    odd: bool,
    /// Position modulo `N` of the next sample.
    cursor: usize,
    /// The next sample falls in the negated half of the cycle.
    negated: bool,
    acc: Accumulators,
    smoothed: f64,
    tau_samples: f64,
}

impl BinState {
    fn new(plan: &BinPlan) -> Self {
        let m = plan.half_periods;
        Self {
            left: ReferenceTable::new(plan.window_len, m - 1),
            right: ReferenceTable::new(plan.window_len, m + 1),
            window_len: plan.window_len,
            odd: (m - 1) % 2 == 1,
            cursor: 0,
            negated: false,
            acc: Accumulators::default(),
            smoothed: 0.0,
            tau_samples: plan.smoothing_time_constant * plan.sample_rate as f64,
        }
    }

    /// Adds `incoming` and removes `outgoing` (the samples `N` earlier), both
    /// of the same length.
    fn update(&mut self, mut incoming: &[i16], mut outgoing: &[i16]) {
        debug_assert_eq!(incoming.len(), outgoing.len());
        let fold: i64 = if self.odd { 1 } else { -1 };
        while !incoming.is_empty() {
            let len = (self.window_len - self.cursor).min(incoming.len());
            let left = &self.left.entries[self.cursor..self.cursor + len];
            let right = &self.right.entries[self.cursor..self.cursor + len];
            let (mut rl, mut il, mut rr, mut ir) = (0i64, 0i64, 0i64, 0i64);
            for i in 0..len {
                let d = incoming[i] as i64 + fold * outgoing[i] as i64;
                rl += d * left[i][0] as i64;
                il += d * left[i][1] as i64;
                rr += d * right[i][0] as i64;
                ir += d * right[i][1] as i64;
            }
            if self.negated {
                (rl, il, rr, ir) = (-rl, -il, -rr, -ir);
            }
            self.acc.re_left += rl;
            self.acc.im_left -= il;
            self.acc.re_right += rr;
            self.acc.im_right -= ir;

            self.cursor += len;
            if self.cursor == self.window_len {
                self.cursor = 0;
                self.negated ^= self.odd;
            }
            incoming = &incoming[len..];
            outgoing = &outgoing[len..];
        }
    }

    /// Rotation phase indices `(M' * position) mod 2N` of both components.
    fn phase_indices(&self, position: u64) -> (usize, usize) {
        let cycle = 2 * self.window_len as u64;
        let p = position % cycle;
        (
            ((self.left.half_periods as u64 * p) % cycle) as usize,
            ((self.right.half_periods as u64 * p) % cycle) as usize,
        )
    }

    /// Accumulator pairs rotated to a phase origin at the current sample,
    /// still in table-scaled units.
    fn rotated(&self, position: u64) -> ((f64, f64), (f64, f64)) {
        let n = self.window_len;
        let (pl, pr) = self.phase_indices(position);
        let left = rotate_accumulators(self.acc.re_left, self.acc.im_left, pl, n);
        let right = rotate_accumulators(self.acc.re_right, self.acc.im_right, pr, n);
        (left, right)
    }

    fn combined(&self, position: u64) -> f64 {
        let ((re_l, im_l), (re_r, im_r)) = self.rotated(position);
        nc_combine(re_l, im_l, re_r, im_r)
    }

    fn reset(&mut self) {
        self.cursor = 0;
        self.negated = false;
        self.acc = Accumulators::default();
        self.smoothed = 0.0;
    }
}

/// Rotates an accumulator pair by `pi * phase_index / window_len`.
pub fn rotate_accumulators(re: i64, im: i64, phase_index: usize, window_len: usize) -> (f64, f64) {
    if phase_index == 0 {
        return (re as f64, im as f64);
    }
    let theta = PI * phase_index as f64 / window_len as f64;
    let (sin, cos) = theta.sin_cos();
    let (re, im) = (re as f64, im as f64);
    (re * cos - im * sin, re * sin + im * cos)
}

/// Neighbour-component combination of rotated left and right components.
pub fn nc_combine(re_left: f64, im_left: f64, re_right: f64, im_right: f64) -> f64 {
    (-(re_left * re_right + im_left * im_right)).max(0.0)
}

/// Averages a stereo pair, rounding halves away from zero.
pub fn downmix_stereo(left: i16, right: i16) -> i16 {
    let sum = left as i32 + right as i32;
    let half = sum / 2;
    (if sum % 2 != 0 {
        half + sum.signum()
    } else {
        half
    }) as i16
}

/// Per-bin magnitudes at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumFrame {
    /// Samples processed when the frame was taken.
    pub sample_position: u64,
    /// Smoothed magnitudes.
    pub magnitudes: Vec<f64>,
    /// Magnitudes before smoothing.
    pub raw_magnitudes: Vec<f64>,
}

/// A bank of NC bins sharing one sample buffer.
#[derive(Debug, Clone)]
pub struct NcEngine {
    plans: Vec<BinPlan>,
    bins: Vec<BinState>,
    ring: SharedRingBuffer,
    /// Longest run processed bin by bin: the shortest window.
    run_len: usize,
    sample_rate: u32,
    calibration: f64,
    last_raw: Vec<f64>,
    last_snapshot: u64,
}

impl NcEngine {
    /// Engine for the bank planned from `config`.
    pub fn from_config(config: &NoteScaleConfig) -> Result<Self> {
        Self::new(plan_bank(config)?)
    }

    /// Engine over `plans`, calibrated so a full-scale tone at a bin's center
    /// reads 1.0.
    pub fn new(plans: Vec<BinPlan>) -> Result<Self> {
        Self::with_calibration(plans, oracle::reference_calibration())
    }

    pub fn with_calibration(plans: Vec<BinPlan>, calibration: f64) -> Result<Self> {
        let first = plans
            .first()
            .ok_or_else(|| Error::InvalidArgument("engine needs at least one bin".into()))?;
        let sample_rate = first.sample_rate;
        if let Some(p) = plans.iter().find(|p| p.sample_rate != sample_rate) {
            return Err(Error::InvalidArgument(format!(
                "bin {} is planned for {} Hz, bin 0 for {sample_rate} Hz",
                p.index, p.sample_rate
            )));
        }
        if !(calibration > 0.0) || !calibration.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "calibration must be positive, got {calibration}"
            )));
        }
        // Re-validate hand-built plans.
        for p in &plans {
            BinPlan::from_counts(p.index, p.window_len, p.half_periods, p.sample_rate)?;
        }

        let bins = plans.iter().map(BinState::new).collect();
        let capacity = plans.iter().map(|p| p.window_len).max().unwrap_or(1);
        let run_len = plans.iter().map(|p| p.window_len).min().unwrap_or(1);
        Ok(Self {
            last_raw: vec![0.0; plans.len()],
            plans,
            bins,
            ring: SharedRingBuffer::new(capacity),
            run_len,
            sample_rate,
            calibration,
            last_snapshot: 0,
        })
    }

    pub fn plans(&self) -> &[BinPlan] {
        &self.plans
    }

    pub fn bin_count(&self) -> usize {
        self.bins.len()
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn calibration(&self) -> f64 {
        self.calibration
    }

    /// Samples processed since creation or the last reset.
    pub fn position(&self) -> u64 {
        self.ring.write_cursor()
    }

    pub fn buffer(&self) -> &SharedRingBuffer {
        &self.ring
    }

    /// Smoothing cadence: half the shortest window.
    pub fn recommended_snapshot_interval(&self) -> usize {
        (self.run_len / 2).max(1)
    }

    pub fn process_sample(&mut self, sample: i16) {
        self.process_block(&[sample]);
    }

    pub fn process_block(&mut self, samples: &[i16]) {
        for run in samples.chunks(self.run_len) {
            let ring = &self.ring;
            for bin in &mut self.bins {
                bin.update(run, ring.run(bin.window_len, run.len()));
            }
            self.ring.push_slice(run);
        }
    }

    /// Feeds interleaved stereo frames, downmixed to mono.
    pub fn process_stereo_block(&mut self, interleaved: &[i16]) {
        let mono: Vec<i16> = interleaved
            .chunks_exact(2)
            .map(|frame| downmix_stereo(frame[0], frame[1]))
            .collect();
        self.process_block(&mono);
    }

    pub fn accumulators(&self, bin: usize) -> Accumulators {
        self.bins[bin].acc
    }

    /// Current `(left, right)` rotation phase indices of a bin, in `0..2N`.
    pub fn phase_indices(&self, bin: usize) -> (usize, usize) {
        self.bins[bin].phase_indices(self.position())
    }

    /// `(left, right)` reference tables of a bin.
    pub fn reference_tables(&self, bin: usize) -> (&ReferenceTable, &ReferenceTable) {
        let b = &self.bins[bin];
        (&b.left, &b.right)
    }

    /// Rotated `(re, im)` of the left and right components in sample units,
    /// phase-referenced to the current sample.
    pub fn rotated_components(&self, bin: usize) -> ((f64, f64), (f64, f64)) {
        let r = REFERENCE_SCALE as f64;
        let ((a, b), (c, d)) = self.bins[bin].rotated(self.position());
        ((a / r, b / r), (c / r, d / r))
    }

    /// Unnormalized combination output of every bin, in squared sample units.
    pub fn nc_outputs(&self) -> Vec<f64> {
        let r2 = (REFERENCE_SCALE as f64).powi(2);
        let position = self.position();
        self.bins
            .iter()
            .map(|b| b.combined(position) / r2)
            .collect()
    }

    /// Current magnitudes without touching the smoothing state.
    pub fn raw_magnitudes(&self) -> Vec<f64> {
        let scale = REFERENCE_SCALE as f64 * FULL_SCALE;
        let position = self.position();
        self.bins
            .iter()
            .map(|b| self.calibration * b.combined(position).sqrt() / (b.window_len as f64 * scale))
            .collect()
    }

    /// Smoothed magnitudes as of the last snapshot.
    pub fn smoothed_magnitudes(&self) -> Vec<f64> {
        self.bins.iter().map(|b| b.smoothed).collect()
    }

    /// Advances every bin's smoothing filter by `elapsed_samples` towards the
    /// most recent raw magnitudes.
    pub fn update_smoothing(&mut self, elapsed_samples: u64) {
        let dt = elapsed_samples as f64;
        for (bin, &raw) in self.bins.iter_mut().zip(&self.last_raw) {
            let alpha = if bin.tau_samples > 0.0 {
                1.0 - (-dt / bin.tau_samples).exp()
            } else {
                1.0
            };
            bin.smoothed += alpha * (raw - bin.smoothed);
        }
    }

    /// Computes magnitudes now and feeds them through the smoothing filters.
    /// Accumulators and phases are left untouched.
    pub fn snapshot(&mut self) -> SpectrumFrame {
        let position = self.position();
        self.last_raw = self.raw_magnitudes();
        self.update_smoothing(position.saturating_sub(self.last_snapshot));
        self.last_snapshot = position;
        SpectrumFrame {
            sample_position: position,
            magnitudes: self.smoothed_magnitudes(),
            raw_magnitudes: self.last_raw.clone(),
        }
    }

    pub fn reset(&mut self) {
        self.ring.reset();
        self.bins.iter_mut().for_each(BinState::reset);
        self.last_raw.fill(0.0);
        self.last_snapshot = 0;
    }
}
