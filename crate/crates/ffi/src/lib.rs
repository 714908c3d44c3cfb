//! C ABI for the `ncdft` engine.
//!
//! The engine is exposed as an opaque [`NcdftEngine`] handle created by
//! [`ncdft_engine_new`] and released with [`ncdft_engine_free`]. Every fallible
//! call returns an [`NcdftStatus`]; the text of the most recent failure on the
//! calling thread is available from [`ncdft_last_error_message`]. Panics never
//! cross the boundary: they are caught and reported as
//! [`NcdftStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use ncdft::{Error, NcEngine, NoteScaleConfig};

/// Result codes returned by the fallible functions.
#[repr(i32)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NcdftStatus {
    Ok = 0,
    /// A required pointer argument was NULL.
    NullPointer = 1,
    /// The configuration fails validation.
    InvalidConfig = 2,
    /// A bin of the configured bank cannot be realized.
    InfeasibleBank = 3,
    /// An output buffer is shorter than the bin count.
    BufferTooSmall = 4,
    /// An index or length is out of range.
    InvalidArgument = 5,
    /// A panic was caught inside the library.
    Panic = 6,
}

/// Bank parameters, mirroring the Rust `NoteScaleConfig`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NcdftConfig {
    /// Pitch of A4 in Hz.
    pub reference_pitch: f64,
    /// MIDI note number of the lowest bin.
    pub lowest_note_midi: i32,
    pub octaves: u32,
    pub bins_per_octave: u32,
    pub sample_rate: u32,
    /// Longest analysis window in seconds.
    pub max_window_seconds: f64,
}

impl From<NoteScaleConfig> for NcdftConfig {
    fn from(c: NoteScaleConfig) -> Self {
        Self {
            reference_pitch: c.reference_pitch,
            lowest_note_midi: c.lowest_note_midi,
            octaves: c.octaves,
            bins_per_octave: c.bins_per_octave,
            sample_rate: c.sample_rate,
            max_window_seconds: c.max_window_seconds,
        }
    }
}

impl From<NcdftConfig> for NoteScaleConfig {
    fn from(c: NcdftConfig) -> Self {
        Self {
            reference_pitch: c.reference_pitch,
            lowest_note_midi: c.lowest_note_midi,
            octaves: c.octaves,
            bins_per_octave: c.bins_per_octave,
            sample_rate: c.sample_rate,
            max_window_seconds: c.max_window_seconds,
        }
    }
}

/// Opaque engine handle.
pub struct NcdftEngine {
    inner: NcEngine,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(message: &str) {
    let text = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = text);
}

fn fail(status: NcdftStatus, message: &str) -> NcdftStatus {
    set_last_error(message);
    status
}

fn status_of(error: &Error) -> NcdftStatus {
    match error {
        Error::InvalidConfig(_) | Error::SampleRateMismatch { .. } => NcdftStatus::InvalidConfig,
        Error::InfeasibleBin { .. } => NcdftStatus::InfeasibleBank,
        _ => NcdftStatus::InvalidArgument,
    }
}

/// Runs `body`, turning a panic into [`NcdftStatus::Panic`].
fn guarded(body: impl FnOnce() -> NcdftStatus) -> NcdftStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".to_string());
            fail(NcdftStatus::Panic, &format!("panic: {message}"))
        }
    }
}

/// # Safety
/// `ptr` must be NULL or valid for reads of `len` elements.
unsafe fn input<'a>(ptr: *const i16, len: usize) -> Option<&'a [i16]> {
    if len == 0 {
        Some(&[])
    } else if ptr.is_null() {
        None
    } else {
        Some(slice::from_raw_parts(ptr, len))
    }
}

/// The default bank: 8 octaves of 24 bins from A0 at 48 kHz.
#[no_mangle]
pub extern "C" fn ncdft_config_default() -> NcdftConfig {
    NoteScaleConfig::default().into()
}

/// Static description of a status code. Never NULL; unknown codes yield
/// "unknown status".
#[no_mangle]
pub extern "C" fn ncdft_status_message(status: i32) -> *const c_char {
    const CODES: [(NcdftStatus, &[u8]); 7] = [
        (NcdftStatus::Ok, b"ok\0"),
        (NcdftStatus::NullPointer, b"null pointer argument\0"),
        (NcdftStatus::InvalidConfig, b"invalid configuration\0"),
        (NcdftStatus::InfeasibleBank, b"infeasible bin in bank\0"),
        (NcdftStatus::BufferTooSmall, b"output buffer too small\0"),
        (NcdftStatus::InvalidArgument, b"invalid argument\0"),
        (NcdftStatus::Panic, b"internal panic\0"),
    ];
    let text = CODES
        .iter()
        .find(|(code, _)| *code as i32 == status)
        .map_or(&b"unknown status\0"[..], |(_, text)| text);
    text.as_ptr().cast()
}

/// Detail of the most recent failure on the calling thread, or an empty
/// string. The pointer stays valid until the next failing call on the same
/// thread.
#[no_mangle]
pub extern "C" fn ncdft_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Plans the bank described by `config` and creates an engine for it.
///
/// # Safety
/// `config` must point to a valid `NcdftConfig`; `out` must be valid for a
/// pointer write. On failure `*out` is set to NULL.
#[no_mangle]
pub unsafe extern "C" fn ncdft_engine_new(
    config: *const NcdftConfig,
    out: *mut *mut NcdftEngine,
) -> NcdftStatus {
    guarded(|| {
        if out.is_null() {
            return fail(NcdftStatus::NullPointer, "out is NULL");
        }
        *out = ptr::null_mut();
        if config.is_null() {
            return fail(NcdftStatus::NullPointer, "config is NULL");
        }
        let config: NoteScaleConfig = (*config).into();
        match NcEngine::from_config(&config) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(NcdftEngine { inner }));
                NcdftStatus::Ok
            }
            Err(e) => fail(status_of(&e), &e.to_string()),
        }
    })
}

/// Releases an engine. NULL is ignored.
///
/// # Safety
/// `engine` must be NULL or a handle from [`ncdft_engine_new`] that has not
/// been freed.
#[no_mangle]
pub unsafe extern "C" fn ncdft_engine_free(engine: *mut NcdftEngine) {
    if !engine.is_null() {
        drop(Box::from_raw(engine));
    }
}

/// Number of bins, or 0 for NULL.
///
/// # Safety
/// `engine` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ncdft_engine_bin_count(engine: *const NcdftEngine) -> usize {
    engine.as_ref().map_or(0, |e| e.inner.bin_count())
}

/// Samples processed since creation or the last reset, or 0 for NULL.
///
/// # Safety
/// `engine` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ncdft_engine_position(engine: *const NcdftEngine) -> u64 {
    engine.as_ref().map_or(0, |e| e.inner.position())
}

/// Quantized center frequency of bin `index` in Hz.
///
/// # Safety
/// `engine` must be a live handle; `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn ncdft_engine_bin_frequency(
    engine: *const NcdftEngine,
    index: usize,
    out: *mut f64,
) -> NcdftStatus {
    guarded(|| {
        let (Some(engine), false) = (engine.as_ref(), out.is_null()) else {
            return fail(NcdftStatus::NullPointer, "engine or out is NULL");
        };
        match engine.inner.plans().get(index) {
            Some(plan) => {
                *out = plan.f_center_quantized;
                NcdftStatus::Ok
            }
            None => fail(
                NcdftStatus::InvalidArgument,
                &format!(
                    "bin {index} out of range ({} bins)",
                    engine.inner.bin_count()
                ),
            ),
        }
    })
}

/// Window length in samples of bin `index`.
///
/// # Safety
/// `engine` must be a live handle; `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn ncdft_engine_bin_window_len(
    engine: *const NcdftEngine,
    index: usize,
    out: *mut usize,
) -> NcdftStatus {
    guarded(|| {
        let (Some(engine), false) = (engine.as_ref(), out.is_null()) else {
            return fail(NcdftStatus::NullPointer, "engine or out is NULL");
        };
        match engine.inner.plans().get(index) {
            Some(plan) => {
                *out = plan.window_len;
                NcdftStatus::Ok
            }
            None => fail(
                NcdftStatus::InvalidArgument,
                &format!(
                    "bin {index} out of range ({} bins)",
                    engine.inner.bin_count()
                ),
            ),
        }
    })
}

/// Feeds `len` mono samples. `samples` may be NULL when `len` is 0.
///
/// # Safety
/// `engine` must be a live handle not used concurrently; `samples` must be
/// valid for reads of `len` values.
#[no_mangle]
pub unsafe extern "C" fn ncdft_engine_process(
    engine: *mut NcdftEngine,
    samples: *const i16,
    len: usize,
) -> NcdftStatus {
    guarded(|| {
        let (Some(engine), Some(samples)) = (engine.as_mut(), input(samples, len)) else {
            return fail(NcdftStatus::NullPointer, "engine or samples is NULL");
        };
        engine.inner.process_block(samples);
        NcdftStatus::Ok
    })
}

/// Feeds `len` interleaved stereo values (`len / 2` frames), averaging each
/// pair to mono. `len` must be even.
///
/// # Safety
/// As for [`ncdft_engine_process`].
#[no_mangle]
pub unsafe extern "C" fn ncdft_engine_process_interleaved_stereo(
    engine: *mut NcdftEngine,
    samples: *const i16,
    len: usize,
) -> NcdftStatus {
    guarded(|| {
        let (Some(engine), Some(samples)) = (engine.as_mut(), input(samples, len)) else {
            return fail(NcdftStatus::NullPointer, "engine or samples is NULL");
        };
        if len % 2 != 0 {
            return fail(
                NcdftStatus::InvalidArgument,
                &format!("interleaved stereo length {len} is odd"),
            );
        }
        engine.inner.process_stereo_block(samples);
        NcdftStatus::Ok
    })
}

/// Advances smoothing to the current position and writes one magnitude per
/// bin. `raw_magnitudes` may be NULL; otherwise it receives the unsmoothed
/// values. Both buffers must hold at least `len` values and `len` must be at
/// least the bin count.
///
/// # Safety
/// `engine` must be a live handle; non-NULL buffers must be valid for writes
/// of `len` values.
#[no_mangle]
pub unsafe extern "C" fn ncdft_engine_snapshot(
    engine: *mut NcdftEngine,
    magnitudes: *mut f64,
    raw_magnitudes: *mut f64,
    len: usize,
) -> NcdftStatus {
    guarded(|| {
        let (Some(engine), false) = (engine.as_mut(), magnitudes.is_null()) else {
            return fail(NcdftStatus::NullPointer, "engine or magnitudes is NULL");
        };
        let bins = engine.inner.bin_count();
        if len < bins {
            return fail(
                NcdftStatus::BufferTooSmall,
                &format!("buffer holds {len} values, bank has {bins} bins"),
            );
        }
        let frame = engine.inner.snapshot();
        slice::from_raw_parts_mut(magnitudes, bins).copy_from_slice(&frame.magnitudes);
        if !raw_magnitudes.is_null() {
            slice::from_raw_parts_mut(raw_magnitudes, bins).copy_from_slice(&frame.raw_magnitudes);
        }
        NcdftStatus::Ok
    })
}

/// Clears all samples, accumulators and smoothing state.
///
/// # Safety
/// `engine` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn ncdft_engine_reset(engine: *mut NcdftEngine) -> NcdftStatus {
    guarded(|| match engine.as_mut() {
        Some(engine) => {
            engine.inner.reset();
            NcdftStatus::Ok
        }
        None => fail(NcdftStatus::NullPointer, "engine is NULL"),
    })
}
