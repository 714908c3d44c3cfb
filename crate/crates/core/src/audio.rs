//! WAV ingestion, packetized streaming into the engine, spectrogram output.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::engine::{downmix_stereo, Accumulators, NcEngine, SpectrumFrame};
use crate::error::{Error, Result};
use crate::scale::NoteScaleConfig;

/// Lowest level shown in PGM output, relative to the spectrogram maximum.
pub const PGM_FLOOR_DB: f64 = -60.0;

/// Interleaved 16-bit PCM audio.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PcmStream {
    pub sample_rate: u32,
    pub channels: u16,
    pub samples: Vec<i16>,
}

impl PcmStream {
    pub fn new(sample_rate: u32, channels: u16, samples: Vec<i16>) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::InvalidArgument(
                "sample rate must be positive".into(),
            ));
        }
        if !(1..=2).contains(&channels) {
            return Err(Error::InvalidArgument(format!(
                "expected 1 or 2 channels, got {channels}"
            )));
        }
        if samples.len() % channels as usize != 0 {
            return Err(Error::InvalidArgument(format!(
                "{} samples do not divide into {channels} channels",
                samples.len()
            )));
        }
        Ok(Self {
            sample_rate,
            channels,
            samples,
        })
    }

    pub fn frames(&self) -> usize {
        self.samples.len() / self.channels as usize
    }

    pub fn duration(&self) -> f64 {
        self.frames() as f64 / self.sample_rate as f64
    }

    /// Mono samples as fed to the engine.
    pub fn mono(&self) -> Vec<i16> {
        match self.channels {
            1 => self.samples.clone(),
            _ => self
                .samples
                .chunks_exact(2)
                .map(|f| downmix_stereo(f[0], f[1]))
                .collect(),
        }
    }
}

fn u16_at(b: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([b[at], b[at + 1]])
}

fn u32_at(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([b[at], b[at + 1], b[at + 2], b[at + 3]])
}

struct Format {
    channels: u16,
    sample_rate: u32,
}

/// Parses a RIFF/WAVE byte buffer holding 16-bit PCM.
pub fn parse_wav(bytes: &[u8]) -> Result<PcmStream> {
    if bytes.len() < 12 {
        return Err(Error::wav(
            "RIFF",
            format!("header truncated at {} bytes", bytes.len()),
        ));
    }
    if &bytes[0..4] != b"RIFF" {
        return Err(Error::wav("RIFF", "missing RIFF signature"));
    }
    if &bytes[8..12] != b"WAVE" {
        return Err(Error::wav("RIFF", "form type is not WAVE"));
    }

    let mut format: Option<Format> = None;
    let mut data: Option<&[u8]> = None;
    let mut at = 12;
    while at < bytes.len() {
        if bytes.len() - at < 8 {
            return Err(Error::wav(
                "chunk header",
                format!("{} trailing bytes at offset {at}", bytes.len() - at),
            ));
        }
        let id = String::from_utf8_lossy(&bytes[at..at + 4]).into_owned();
        let size = u32_at(bytes, at + 4) as usize;
        let body_start = at + 8;
        let available = bytes.len() - body_start;
        if size > available {
            return Err(Error::wav(
                &id,
                format!("declares {size} bytes but only {available} remain"),
            ));
        }
        let body = &bytes[body_start..body_start + size];
        match id.as_str() {
            "fmt " => format = Some(parse_format(body)?),
            "data" => {
                if format.is_none() {
                    return Err(Error::wav("data", "appears before the `fmt ` chunk"));
                }
                data = Some(body);
            }
            _ => {}
        }
        // Chunks are word aligned; a missing final pad byte is tolerated.
        at = (body_start + size + (size & 1)).min(bytes.len());
    }

    let format = format.ok_or_else(|| Error::wav("fmt ", "chunk is missing"))?;
    let data = data.ok_or_else(|| Error::wav("data", "chunk is missing"))?;
    let frame_bytes = 2 * format.channels as usize;
    if data.len() % frame_bytes != 0 {
        return Err(Error::wav(
            "data",
            format!(
                "{} bytes is not a whole number of {frame_bytes}-byte frames",
                data.len()
            ),
        ));
    }
    let samples = data
        .chunks_exact(2)
        .map(|c| i16::from_le_bytes([c[0], c[1]]))
        .collect();
    PcmStream::new(format.sample_rate, format.channels, samples)
}

fn parse_format(body: &[u8]) -> Result<Format> {
    if body.len() < 16 {
        return Err(Error::wav(
            "fmt ",
            format!("is {} bytes, need at least 16", body.len()),
        ));
    }
    let code = u16_at(body, 0);
    if code != 1 {
        return Err(Error::wav(
            "fmt ",
            format!("unsupported format code {code:#06x}, only PCM (1) is accepted"),
        ));
    }
    let channels = u16_at(body, 2);
    if !(1..=2).contains(&channels) {
        return Err(Error::wav(
            "fmt ",
            format!("unsupported channel count {channels}"),
        ));
    }
    let sample_rate = u32_at(body, 4);
    if sample_rate == 0 {
        return Err(Error::wav("fmt ", "sample rate is zero"));
    }
    let bits = u16_at(body, 14);
    if bits != 16 {
        return Err(Error::wav(
            "fmt ",
            format!("unsupported bit depth {bits}, need 16"),
        ));
    }
    Ok(Format {
        channels,
        sample_rate,
    })
}

pub fn read_wav(path: impl AsRef<Path>) -> Result<PcmStream> {
    parse_wav(&fs::read(path)?)
}

/// Serializes a stream as a canonical 44-byte-header WAV.
pub fn encode_wav(stream: &PcmStream) -> Vec<u8> {
    let data_len = (stream.samples.len() * 2) as u32;
    let block_align = 2 * stream.channels;
    let mut out = Vec::with_capacity(44 + data_len as usize);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_len).to_le_bytes());
    out.extend_from_slice(b"WAVEfmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&stream.channels.to_le_bytes());
    out.extend_from_slice(&stream.sample_rate.to_le_bytes());
    out.extend_from_slice(&(stream.sample_rate * block_align as u32).to_le_bytes());
    out.extend_from_slice(&block_align.to_le_bytes());
    out.extend_from_slice(&16u16.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&data_len.to_le_bytes());
    for s in &stream.samples {
        out.extend_from_slice(&s.to_le_bytes());
    }
    out
}

pub fn write_wav(stream: &PcmStream, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_wav(stream))?;
    Ok(())
}

/// Frames of smoothed magnitudes at a fixed interval.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    pub frames: Vec<SpectrumFrame>,
    /// Seconds between frames.
    pub frame_interval: f64,
    /// Center frequency of each bin, in Hz.
    pub bin_labels: Vec<f64>,
    pub sample_rate: u32,
}

impl Spectrogram {
    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    fn ensure_non_empty(&self) -> Result<()> {
        if self.frames.is_empty() {
            return Err(Error::InvalidArgument("spectrogram has no frames".into()));
        }
        Ok(())
    }

    /// Largest smoothed magnitude over all frames and bins.
    pub fn max_magnitude(&self) -> f64 {
        self.frames
            .iter()
            .flat_map(|f| f.magnitudes.iter().copied())
            .fold(0.0, f64::max)
    }

    /// `time_s,<f1>,<f2>,...` then one row per frame.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        self.ensure_non_empty()?;
        let mut out = BufWriter::new(out);
        write!(out, "time_s")?;
        for f in &self.bin_labels {
            write!(out, ",{f:.4}")?;
        }
        writeln!(out)?;
        for frame in &self.frames {
            write!(
                out,
                "{}",
                frame.sample_position as f64 / self.sample_rate as f64
            )?;
            for m in &frame.magnitudes {
                write!(out, ",{m}")?;
            }
            writeln!(out)?;
        }
        out.flush()?;
        Ok(())
    }

    /// Binary PGM: one column per frame, highest bin on the top row,
    /// log-scaled against the global maximum.
    pub fn write_pgm<W: Write>(&self, out: W) -> Result<()> {
        self.ensure_non_empty()?;
        let width = self.frames.len();
        let height = self.bin_labels.len();
        let max = self.max_magnitude();
        let mut out = BufWriter::new(out);
        write!(out, "P5\n{width} {height}\n255\n")?;
        let mut row = vec![0u8; width];
        for bin in (0..height).rev() {
            for (px, frame) in row.iter_mut().zip(&self.frames) {
                *px = pgm_level(frame.magnitudes[bin], max);
            }
            out.write_all(&row)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Grey level of magnitude `m` against maximum `max`: 255 at the maximum,
/// 0 at or below [`PGM_FLOOR_DB`]. An all-zero image when `max` is zero.
pub fn pgm_level(m: f64, max: f64) -> u8 {
    if !(max > 0.0) || !(m > 0.0) {
        return 0;
    }
    let db = 20.0 * (m / max).log10();
    (255.0 * (1.0 - db / PGM_FLOOR_DB))
        .round()
        .clamp(0.0, 255.0) as u8
}

pub fn write_csv(spectrogram: &Spectrogram, path: impl AsRef<Path>) -> Result<()> {
    spectrogram.write_csv(fs::File::create(path)?)
}

pub fn write_pgm(spectrogram: &Spectrogram, path: impl AsRef<Path>) -> Result<()> {
    spectrogram.write_pgm(fs::File::create(path)?)
}

/// Drives an engine from a sample stream, snapshotting at fixed sample
/// positions and keeping every `decimation`-th snapshot as an output frame.
///
/// Snapshot positions depend only on the total sample count, never on how
/// the input is split into packets.
#[derive(Debug, Clone)]
pub struct StreamAnalyzer {
    engine: NcEngine,
    snapshot_interval: usize,
    decimation: usize,
    until_snapshot: usize,
    snapshots: u64,
    frames: Vec<SpectrumFrame>,
    trace: Option<Vec<Vec<Accumulators>>>,
}

impl StreamAnalyzer {
    pub fn new(engine: NcEngine, frame_rate: f64) -> Result<Self> {
        let fs = engine.sample_rate() as f64;
        if !(frame_rate > 0.0) || frame_rate > fs {
            return Err(Error::InvalidArgument(format!(
                "frame rate must be in (0, {fs}], got {frame_rate}"
            )));
        }
        let per_frame = (fs / frame_rate).floor().max(1.0) as usize;
        let snapshot_interval = engine.recommended_snapshot_interval().min(per_frame);
        let decimation = ((per_frame as f64 / snapshot_interval as f64).round() as usize).max(1);
        Ok(Self {
            engine,
            snapshot_interval,
            decimation,
            until_snapshot: snapshot_interval,
            snapshots: 0,
            frames: Vec::new(),
            trace: None,
        })
    }

    /// Records every bin's accumulators at each snapshot.
    pub fn with_trace(mut self) -> Self {
        self.trace = Some(Vec::new());
        self
    }

    pub fn engine(&self) -> &NcEngine {
        &self.engine
    }

    pub fn snapshot_interval(&self) -> usize {
        self.snapshot_interval
    }

    /// Seconds between output frames.
    pub fn frame_interval(&self) -> f64 {
        (self.snapshot_interval * self.decimation) as f64 / self.engine.sample_rate() as f64
    }

    pub fn frames(&self) -> &[SpectrumFrame] {
        &self.frames
    }

    pub fn trace(&self) -> Option<&[Vec<Accumulators>]> {
        self.trace.as_deref()
    }

    pub fn feed(&mut self, mut samples: &[i16]) {
        while !samples.is_empty() {
            let take = self.until_snapshot.min(samples.len());
            self.engine.process_block(&samples[..take]);
            samples = &samples[take..];
            self.until_snapshot -= take;
            if self.until_snapshot == 0 {
                self.until_snapshot = self.snapshot_interval;
                self.take_snapshot();
            }
        }
    }

    fn take_snapshot(&mut self) {
        let frame = self.engine.snapshot();
        self.snapshots += 1;
        if let Some(trace) = &mut self.trace {
            trace.push(
                (0..self.engine.bin_count())
                    .map(|b| self.engine.accumulators(b))
                    .collect(),
            );
        }
        if self.snapshots % self.decimation as u64 == 0 {
            self.frames.push(frame);
        }
    }

    pub fn finish(self) -> Spectrogram {
        Spectrogram {
            frame_interval: self.frame_interval(),
            bin_labels: self.engine.plans().iter().map(|p| p.f_center).collect(),
            sample_rate: self.engine.sample_rate(),
            frames: self.frames,
        }
    }
}

/// Packet length mirroring a 10 ms audio callback.
pub fn default_packet_len(sample_rate: u32) -> usize {
    ((sample_rate as f64 / 100.0).round() as usize).max(1)
}

/// Analyzes a whole stream, feeding it in 10 ms packets.
pub fn stream_analyze(
    stream: &PcmStream,
    config: &NoteScaleConfig,
    frame_rate: f64,
) -> Result<Spectrogram> {
    stream_analyze_packets(
        stream,
        config,
        frame_rate,
        default_packet_len(stream.sample_rate),
    )
}

/// Like [`stream_analyze`] with an explicit packet length.
pub fn stream_analyze_packets(
    stream: &PcmStream,
    config: &NoteScaleConfig,
    frame_rate: f64,
    packet_len: usize,
) -> Result<Spectrogram> {
    if stream.sample_rate != config.sample_rate {
        return Err(Error::SampleRateMismatch {
            stream: stream.sample_rate,
            config: config.sample_rate,
        });
    }
    if packet_len == 0 {
        return Err(Error::InvalidArgument(
            "packet length must be positive".into(),
        ));
    }
    let mut analyzer = StreamAnalyzer::new(NcEngine::from_config(config)?, frame_rate)?;
    for packet in stream.mono().chunks(packet_len) {
        analyzer.feed(packet);
    }
    Ok(analyzer.finish())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wav_bytes(channels: u16, rate: u32, samples: &[i16]) -> Vec<u8> {
        encode_wav(&PcmStream::new(rate, channels, samples.to_vec()).unwrap())
    }

    #[test]
    fn silence_file() {
        let bytes = wav_bytes(1, 48_000, &vec![0; 48_000]);
        let s = parse_wav(&bytes).unwrap();
        assert_eq!(s.samples.len(), 48_000);
        assert!(s.samples.iter().all(|&x| x == 0));
        assert_eq!(s.duration(), 1.0);
    }

    #[test]
    fn stereo_is_kept_then_downmixed() {
        let frames: Vec<i16> = (0..100).flat_map(|_| [1000, 3000]).collect();
        let s = parse_wav(&wav_bytes(2, 44_100, &frames)).unwrap();
        assert_eq!(s.channels, 2);
        assert_eq!(s.samples, frames);
        assert!(s.mono().iter().all(|&x| x == 2000));
    }

    #[test]
    fn empty_data_chunk() {
        let bytes = wav_bytes(1, 48_000, &[]);
        assert_eq!(bytes.len(), 44);
        let s = parse_wav(&bytes).unwrap();
        assert!(s.samples.is_empty());
    }

    #[test]
    fn skips_unknown_chunks() {
        let mut bytes = wav_bytes(1, 8000, &[1, 2, 3]);
        // Insert an odd-sized LIST chunk (with pad byte) before `data`.
        let list = [b"LIST".as_slice(), &3u32.to_le_bytes(), b"abc\0"].concat();
        bytes.splice(36..36, list);
        let s = parse_wav(&bytes).unwrap();
        assert_eq!(s.samples, vec![1, 2, 3]);
    }

    fn wav_error(bytes: &[u8]) -> (String, String) {
        match parse_wav(bytes) {
            Err(Error::Wav { chunk, reason }) => (chunk, reason),
            other => panic!("expected wav error, got {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_files() {
        let good = wav_bytes(1, 48_000, &[5; 10]);

        assert_eq!(wav_error(&good[..8]).0, "RIFF");
        let mut b = good.clone();
        b[0] = b'X';
        assert_eq!(wav_error(&b).0, "RIFF");

        let mut b = good.clone();
        b[20] = 3; // IEEE float
        let (chunk, reason) = wav_error(&b);
        assert_eq!(chunk, "fmt ");
        assert!(reason.contains("format code"), "{reason}");

        let mut b = good.clone();
        b[34] = 24;
        let (chunk, reason) = wav_error(&b);
        assert_eq!(chunk, "fmt ");
        assert!(reason.contains("bit depth"), "{reason}");

        let (chunk, reason) = wav_error(&good[..good.len() - 4]);
        assert_eq!(chunk, "data");
        assert!(reason.contains("remain"), "{reason}");

        let (chunk, _) = wav_error(&good[..40]);
        assert_eq!(chunk, "chunk header");

        let (chunk, _) = wav_error(&good[..36]);
        assert_eq!(chunk, "data");
    }

    #[test]
    fn pgm_levels() {
        assert_eq!(pgm_level(1.0, 1.0), 255);
        assert_eq!(pgm_level(0.001, 1.0), 0);
        assert_eq!(pgm_level(1e-9, 1.0), 0);
        assert_eq!(pgm_level(0.0, 1.0), 0);
        assert_eq!(pgm_level(0.0, 0.0), 0);
        assert_eq!(pgm_level(0.1, 1.0), 170);
        let mut last = 0;
        for i in 0..=1000 {
            let level = pgm_level(i as f64 / 1000.0, 1.0);
            assert!(level >= last);
            last = level;
        }
    }

    fn spectrogram(mags: Vec<Vec<f64>>) -> Spectrogram {
        let bins = mags[0].len();
        Spectrogram {
            frames: mags
                .into_iter()
                .enumerate()
                .map(|(i, m)| SpectrumFrame {
                    sample_position: 480 * (i as u64 + 1),
                    raw_magnitudes: m.clone(),
                    magnitudes: m,
                })
                .collect(),
            frame_interval: 0.01,
            bin_labels: (0..bins).map(|b| 100.0 * (b + 1) as f64).collect(),
            sample_rate: 48_000,
        }
    }

    #[test]
    fn pgm_layout() {
        let mut out = Vec::new();
        spectrogram(vec![vec![0.5]]).write_pgm(&mut out).unwrap();
        assert_eq!(out, b"P5\n1 1\n255\n\xff");

        let mut out = Vec::new();
        spectrogram(vec![vec![0.0, 0.0], vec![0.0, 0.0], vec![0.0, 0.0]])
            .write_pgm(&mut out)
            .unwrap();
        assert_eq!(&out[..11], b"P5\n3 2\n255\n");
        assert!(out[11..].iter().all(|&p| p == 0));

        // Highest bin is the top row.
        let mut out = Vec::new();
        spectrogram(vec![vec![1.0, 0.001], vec![0.001, 1.0]])
            .write_pgm(&mut out)
            .unwrap();
        assert_eq!(&out[11..], &[0, 255, 255, 0]);
    }

    #[test]
    fn csv_layout() {
        let mut out = Vec::new();
        spectrogram(vec![vec![0.0, 0.25], vec![1.0, 0.5]])
            .write_csv(&mut out)
            .unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text, "time_s,100.0000,200.0000\n0.01,0,0.25\n0.02,1,0.5\n");
        let empty = Spectrogram {
            frames: vec![],
            ..spectrogram(vec![vec![0.0]])
        };
        assert!(empty.write_csv(Vec::new()).is_err());
        assert!(empty.write_pgm(Vec::new()).is_err());
    }

    #[test]
    fn sample_rate_must_match() {
        let s = PcmStream::new(44_100, 1, vec![0; 100]).unwrap();
        let err = stream_analyze(&s, &NoteScaleConfig::default(), 60.0).unwrap_err();
        assert!(matches!(
            err,
            Error::SampleRateMismatch {
                stream: 44_100,
                config: 48_000
            }
        ));
    }

    #[test]
    fn silence_analyzes_to_zero() {
        let s = PcmStream::new(48_000, 1, vec![0; 24_000]).unwrap();
        let sg = stream_analyze(&s, &NoteScaleConfig::default(), 60.0).unwrap();
        assert!(!sg.is_empty());
        assert_eq!(sg.bin_labels.len(), 192);
        assert!(sg
            .frames
            .iter()
            .all(|f| f.magnitudes.iter().all(|&m| m == 0.0)));
        let gap = sg.frames[1].sample_position - sg.frames[0].sample_position;
        assert!((gap as f64 / 48_000.0 - sg.frame_interval).abs() < 1e-12);
        assert!((sg.frame_interval - 1.0 / 60.0).abs() < 0.002);
    }

    #[test]
    fn pcm_stream_invariants() {
        assert!(PcmStream::new(0, 1, vec![]).is_err());
        assert!(PcmStream::new(48_000, 3, vec![]).is_err());
        assert!(PcmStream::new(48_000, 2, vec![1, 2, 3]).is_err());
    }
}
