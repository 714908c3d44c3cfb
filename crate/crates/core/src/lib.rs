//! Streaming spectral analysis with neighbour-component (NC) bins.
//!
//! Each output bin is formed from two sliding-window DFT bins whose
//! frequencies sit half a bin width either side of a musical note. Combining
//! the pair suppresses everything outside the span between them, so no window
//! function is needed and each bin's window is half as long as a rectangular
//! DFT of the same resolution.
//!
//! The pipeline is:
//!
//! * [`scale`] plans the bank: note frequencies, window lengths and the
//!   quantized left/right component frequencies.
//! * [`engine`] runs the per-sample integer accumulators over a shared
//!   [`ring`] buffer and turns them into magnitudes on demand.
//! * [`audio`] reads WAV input, drives the engine packet by packet and writes
//!   CSV or PGM spectrograms.
//! * [`oracle`] holds floating point reference implementations used for
//!   calibration and verification.

// `!(x > 0.0)` range checks also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod audio;
pub mod cli;
pub mod engine;
mod error;
pub mod noise;
pub mod oracle;
pub mod ring;
pub mod scale;

pub use audio::{PcmStream, Spectrogram, StreamAnalyzer};
pub use engine::{NcEngine, SpectrumFrame};
pub use error::{Error, Result};
pub use oracle::{ResponseCurve, ResponseSource};
pub use ring::SharedRingBuffer;
pub use scale::{BinPlan, NoteScaleConfig};

/// Largest magnitude of a 16-bit PCM sample.
pub const FULL_SCALE: f64 = 32767.0;
