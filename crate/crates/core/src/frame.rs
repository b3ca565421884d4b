//! Fixed-width frame layout, timestamp extraction and the byte/hex codecs.
//!
//! A frame is a `frame_bits`-wide unsigned integer stored as a sequence of
//! `word_bits`-wide words, word 0 being the least-significant. The timestamp
//! is a contiguous bit field `[ts_offset, ts_offset + ts_width)` of that
//! integer and may straddle word boundaries.
//!
//! On the wire a frame is its words in order, word 0 first, each word
//! little-endian. In hex text a frame is `frame_bits / 4` hex digits, most
//! significant nibble first.

use std::fmt;

use thiserror::Error;

/// Default upper bound on `ts_width`; the counting histogram has `2^ts_width` counters.
pub const DEFAULT_MAX_TS_WIDTH: u32 = 24;

/// Absolute upper bound on `ts_width`, whatever cap a caller configures.
pub const HARD_MAX_TS_WIDTH: u32 = 32;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FrameError {
    #[error("invalid layout: {0}")]
    InvalidLayout(String),
    #[error("unsupported layout: {0}")]
    UnsupportedLayout(String),
    #[error("malformed frame: {0}")]
    Malformed(String),
    #[error("truncated frame: expected {expected} bytes, got {got}")]
    Truncated { expected: usize, got: usize },
    #[error("hex parse error at position {position}: {reason}")]
    HexParse { position: usize, reason: String },
}

/// Bit geometry of a frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FrameLayout {
    frame_bits: u32,
    word_bits: u32,
    ts_offset: u32,
    ts_width: u32,
}

impl Default for FrameLayout {
    /// 48-bit frames of three 16-bit words, 8-bit timestamp at bits 16..24.
    fn default() -> Self {
        FrameLayout {
            frame_bits: 48,
            word_bits: 16,
            ts_offset: 16,
            ts_width: 8,
        }
    }
}

impl FrameLayout {
    pub fn new(frame_bits: u32, word_bits: u32, ts_offset: u32, ts_width: u32) -> Result<Self, FrameError> {
        Self::with_ts_cap(frame_bits, word_bits, ts_offset, ts_width, DEFAULT_MAX_TS_WIDTH)
    }

    /// Like [`FrameLayout::new`] but with a caller-chosen cap on `ts_width`
    /// (itself at most [`HARD_MAX_TS_WIDTH`]).
    pub fn with_ts_cap(
        frame_bits: u32,
        word_bits: u32,
        ts_offset: u32,
        ts_width: u32,
        max_ts_width: u32,
    ) -> Result<Self, FrameError> {
        let invalid = |msg: String| Err(FrameError::InvalidLayout(msg));
        if word_bits == 0 || word_bits > 64 {
            return invalid(format!("word_bits must be in 1..=64, got {word_bits}"));
        }
        if frame_bits == 0 || !frame_bits.is_multiple_of(word_bits) {
            return invalid(format!(
                "frame_bits ({frame_bits}) must be a positive multiple of word_bits ({word_bits})"
            ));
        }
        let cap = max_ts_width.min(HARD_MAX_TS_WIDTH);
        if ts_width == 0 || ts_width > cap {
            return invalid(format!("ts_width must be in 1..={cap}, got {ts_width}"));
        }
        if u64::from(ts_offset) + u64::from(ts_width) > u64::from(frame_bits) {
            return invalid(format!(
                "timestamp field {ts_offset}+{ts_width} exceeds frame width {frame_bits}"
            ));
        }
        Ok(FrameLayout {
            frame_bits,
            word_bits,
            ts_offset,
            ts_width,
        })
    }

    pub fn frame_bits(&self) -> u32 {
        self.frame_bits
    }

    pub fn word_bits(&self) -> u32 {
        self.word_bits
    }

    pub fn ts_offset(&self) -> u32 {
        self.ts_offset
    }

    pub fn ts_width(&self) -> u32 {
        self.ts_width
    }

    pub fn words_per_frame(&self) -> usize {
        (self.frame_bits / self.word_bits) as usize
    }

    /// Number of distinct timestamp values, `2^ts_width`.
    pub fn key_space(&self) -> u64 {
        1u64 << self.ts_width
    }

    /// Serialized size of one frame, or an error if words are not whole bytes.
    pub fn frame_bytes(&self) -> Result<usize, FrameError> {
        if !self.word_bits.is_multiple_of(8) {
            return Err(FrameError::UnsupportedLayout(format!(
                "word_bits ({}) is not a multiple of 8",
                self.word_bits
            )));
        }
        Ok((self.frame_bits / 8) as usize)
    }

    fn word_mask(&self) -> u64 {
        low_mask(self.word_bits)
    }

    /// Checks word count and word magnitudes.
    pub fn check(&self, frame: &Frame) -> Result<(), FrameError> {
        let expected = self.words_per_frame();
        if frame.words.len() != expected {
            return Err(FrameError::Malformed(format!(
                "expected {expected} words, got {}",
                frame.words.len()
            )));
        }
        let mask = self.word_mask();
        if let Some((i, w)) = frame.words.iter().enumerate().find(|(_, &w)| w & !mask != 0) {
            return Err(FrameError::Malformed(format!(
                "word {i} value {w:#x} exceeds {} bits",
                self.word_bits
            )));
        }
        Ok(())
    }

    /// All-zero frame.
    pub fn zero_frame(&self) -> Frame {
        Frame {
            words: vec![0; self.words_per_frame()],
        }
    }

    /// Overwrites the timestamp field of `frame` with `ts` (truncated to `ts_width` bits).
    pub fn set_timestamp(&self, frame: &mut Frame, ts: u32) -> Result<(), FrameError> {
        self.check(frame)?;
        write_bits(
            &mut frame.words,
            self.word_bits,
            self.ts_offset,
            self.ts_width,
            u64::from(ts),
        );
        Ok(())
    }
}

impl fmt::Display for FrameLayout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}-bit frame / {}-bit words / ts bits {}..{}",
            self.frame_bits,
            self.word_bits,
            self.ts_offset,
            self.ts_offset + self.ts_width
        )
    }
}

/// One fixed-width record. Word 0 is the least-significant word.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Frame {
    words: Vec<u64>,
}

impl Frame {
    pub fn new(words: Vec<u64>) -> Self {
        Frame { words }
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn into_words(self) -> Vec<u64> {
        self.words
    }
}

impl From<Vec<u64>> for Frame {
    fn from(words: Vec<u64>) -> Self {
        Frame::new(words)
    }
}

fn low_mask(bits: u32) -> u64 {
    if bits >= 64 {
        u64::MAX
    } else {
        (1u64 << bits) - 1
    }
}

/// Reads `width` (<= 64) bits starting at bit `pos` of the multi-word integer.
fn read_bits(words: &[u64], word_bits: u32, pos: u32, width: u32) -> u64 {
    let end = pos + width;
    let mut value = 0u64;
    let mut bit = pos;
    while bit < end {
        let w = (bit / word_bits) as usize;
        let word_lo = w as u32 * word_bits;
        let take = (end - bit).min(word_lo + word_bits - bit);
        let chunk = (words[w] >> (bit - word_lo)) & low_mask(take);
        value |= chunk << (bit - pos);
        bit += take;
    }
    value
}

fn write_bits(words: &mut [u64], word_bits: u32, pos: u32, width: u32, value: u64) {
    let end = pos + width;
    let mut bit = pos;
    while bit < end {
        let w = (bit / word_bits) as usize;
        let word_lo = w as u32 * word_bits;
        let shift = bit - word_lo;
        let take = (end - bit).min(word_lo + word_bits - bit);
        let mask = low_mask(take);
        let chunk = (value >> (bit - pos)) & mask;
        words[w] = (words[w] & !(mask << shift)) | (chunk << shift);
        bit += take;
    }
}

/// `(frame >> ts_offset) & (2^ts_width - 1)`, treating the frame as one integer.
pub fn extract_timestamp(frame: &Frame, layout: &FrameLayout) -> Result<u32, FrameError> {
    layout.check(frame)?;
    Ok(read_bits(&frame.words, layout.word_bits, layout.ts_offset, layout.ts_width) as u32)
}

/// Appends the wire bytes of `frame` to `out`.
pub fn encode_frame_into(frame: &Frame, layout: &FrameLayout, out: &mut Vec<u8>) -> Result<(), FrameError> {
    layout.frame_bytes()?;
    layout.check(frame)?;
    let word_bytes = (layout.word_bits / 8) as usize;
    for &w in &frame.words {
        out.extend_from_slice(&w.to_le_bytes()[..word_bytes]);
    }
    Ok(())
}

pub fn encode_frame(frame: &Frame, layout: &FrameLayout) -> Result<Vec<u8>, FrameError> {
    let mut out = Vec::with_capacity(layout.frame_bytes()?);
    encode_frame_into(frame, layout, &mut out)?;
    Ok(out)
}

pub fn decode_frame(bytes: &[u8], layout: &FrameLayout) -> Result<Frame, FrameError> {
    let expected = layout.frame_bytes()?;
    if bytes.len() != expected {
        return Err(FrameError::Truncated {
            expected,
            got: bytes.len(),
        });
    }
    let word_bytes = (layout.word_bits / 8) as usize;
    let words = bytes
        .chunks_exact(word_bytes)
        .map(|chunk| {
            let mut buf = [0u8; 8];
            buf[..word_bytes].copy_from_slice(chunk);
            u64::from_le_bytes(buf)
        })
        .collect();
    Ok(Frame { words })
}

/// Parses one hex line (surrounding whitespace allowed). Error positions are
/// 0-based character offsets into `line`.
pub fn parse_hex_frame(line: &str, layout: &FrameLayout) -> Result<Frame, FrameError> {
    if !layout.frame_bits.is_multiple_of(4) {
        return Err(FrameError::UnsupportedLayout(format!(
            "frame_bits ({}) is not a multiple of 4",
            layout.frame_bits
        )));
    }
    let lead = line.len() - line.trim_start().len();
    let digits = line.trim();
    let mut nibbles = Vec::with_capacity(digits.len());
    for (i, c) in digits.char_indices() {
        match c.to_digit(16) {
            Some(d) => nibbles.push(d as u64),
            None => {
                return Err(FrameError::HexParse {
                    position: lead + i,
                    reason: format!("non-hex character {c:?}"),
                })
            }
        }
    }
    let expected = (layout.frame_bits / 4) as usize;
    if nibbles.len() != expected {
        return Err(FrameError::HexParse {
            position: lead + digits.len().min(expected),
            reason: format!("expected {expected} hex digits, got {}", nibbles.len()),
        });
    }
    let mut frame = layout.zero_frame();
    for (n, &d) in nibbles.iter().rev().enumerate() {
        write_bits(&mut frame.words, layout.word_bits, 4 * n as u32, 4, d);
    }
    Ok(frame)
}

/// Uppercase hex, most significant nibble first, no line terminator.
pub fn format_hex_frame(frame: &Frame, layout: &FrameLayout) -> Result<String, FrameError> {
    if !layout.frame_bits.is_multiple_of(4) {
        return Err(FrameError::UnsupportedLayout(format!(
            "frame_bits ({}) is not a multiple of 4",
            layout.frame_bits
        )));
    }
    layout.check(frame)?;
    let nibbles = layout.frame_bits / 4;
    Ok((0..nibbles)
        .rev()
        .map(|n| {
            let d = read_bits(&frame.words, layout.word_bits, 4 * n, 4) as u32;
            char::from_digit(d, 16).unwrap().to_ascii_uppercase()
        })
        .collect())
}
