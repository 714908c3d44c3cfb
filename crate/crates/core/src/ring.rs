use crate::error::{Error, Result};

/// Circular store of the most recent 16-bit samples, shared by every bin.
///
/// Each bin looks back exactly its own window length to find the sample that
/// is leaving its window. Slots that have never been written read as zero.
///
/// Every sample is stored twice, `capacity` slots apart, so any run of up to
/// `capacity` consecutive samples is one contiguous slice.
#[derive(Debug, Clone)]
pub struct SharedRingBuffer {
    storage: Vec<i16>,
    capacity: usize,
    /// Slot the next push lands in, in `0..capacity`.
    head: usize,
    written: u64,
}

impl SharedRingBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "ring buffer capacity must be positive");
        Self {
            storage: vec![0; 2 * capacity],
            capacity,
            head: 0,
            written: 0,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Total number of samples pushed since creation or the last reset.
    pub fn write_cursor(&self) -> u64 {
        self.written
    }

    #[inline]
    pub fn push(&mut self, sample: i16) {
        self.storage[self.head] = sample;
        self.storage[self.head + self.capacity] = sample;
        self.head += 1;
        if self.head == self.capacity {
            self.head = 0;
        }
        self.written += 1;
    }

    pub fn push_slice(&mut self, samples: &[i16]) {
        for &s in samples {
            self.push(s);
        }
    }

    /// The sample pushed `lag` pushes ago.
    pub fn sample_at_lag(&self, lag: usize) -> Result<i16> {
        if lag == 0 || lag > self.capacity() {
            return Err(Error::LagOutOfRange {
                lag,
                capacity: self.capacity(),
            });
        }
        Ok(self.lag_unchecked(lag))
    }

    /// Like [`sample_at_lag`](Self::sample_at_lag) without the range check;
    /// `lag` must be in `1..=capacity`.
    #[inline]
    pub(crate) fn lag_unchecked(&self, lag: usize) -> i16 {
        debug_assert!(lag >= 1 && lag <= self.capacity);
        self.storage[self.head + self.capacity - lag]
    }

    /// The `len` samples starting `lag` pushes ago, oldest first. Requires
    /// `1 <= lag <= capacity` and `len <= lag`.
    #[inline]
    pub(crate) fn run(&self, lag: usize, len: usize) -> &[i16] {
        debug_assert!(lag >= 1 && lag <= self.capacity && len <= lag);
        let start = self.head + self.capacity - lag;
        &self.storage[start..start + len]
    }

    pub fn reset(&mut self) {
        self.storage.fill(0);
        self.head = 0;
        self.written = 0;
    }
}
