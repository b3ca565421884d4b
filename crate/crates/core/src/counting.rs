//! Counting sort with decrement-after-place placement.
//!
//! The three passes are exposed separately ([`build_histogram`],
//! [`prefix_sums`], [`place_keys`]) as well as composed ([`sort_keys`],
//! [`sort_frames`]). Ranks are 1-based: a key whose cumulative rank is `c`
//! lands in slot `c`, which is stored at index `c - 1`.
//!
//! Placement walks the input left to right and decrements the rank after
//! each write, so equal keys come out in reverse arrival order. That is
//! [`SortMode::Paper`], the default. [`SortMode::Stable`] walks the input
//! right to left instead, which gives the usual stable counting sort.

use thiserror::Error;

use crate::frame::{extract_timestamp, Frame, FrameError, FrameLayout, HARD_MAX_TS_WIDTH};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SortError {
    #[error("key {key} at index {index} is out of range for {key_bits}-bit keys")]
    KeyOutOfRange { index: usize, key: u32, key_bits: u32 },
    #[error("ranks inconsistent with keys at input index {index}")]
    InconsistentRanks { index: usize },
    #[error("key width {0} is outside 1..={HARD_MAX_TS_WIDTH}")]
    InvalidKeyWidth(u32),
    #[error("batch of {0} records exceeds the 32-bit counter range")]
    BatchTooLarge(usize),
    #[error(transparent)]
    Frame(#[from] FrameError),
}

/// Order given to records with equal keys.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
pub enum SortMode {
    /// Reverse arrival order among equal keys.
    #[default]
    Paper,
    /// Arrival order among equal keys.
    Stable,
}

/// Multiplicity of every key value; `counts.len() == 2^k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Histogram {
    counts: Vec<u32>,
}

impl Histogram {
    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().map(|&c| u64::from(c)).sum()
    }
}

/// `ranks[v]` = number of keys `<= v`. Consumed by placement.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CumulativeRanks {
    ranks: Vec<u32>,
}

impl CumulativeRanks {
    pub fn ranks(&self) -> &[u32] {
        &self.ranks
    }
}

/// Sorted records. Logical slots are `1..=len`; slot `c` lives at index `c - 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SortedOutput<T> {
    slots: Vec<T>,
}

impl<T> SortedOutput<T> {
    /// Record in logical slot `slot` (1-based).
    pub fn slot(&self, slot: usize) -> Option<&T> {
        slot.checked_sub(1).and_then(|i| self.slots.get(i))
    }

    pub fn as_slice(&self) -> &[T] {
        &self.slots
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn into_vec(self) -> Vec<T> {
        self.slots
    }
}

impl<T> IntoIterator for SortedOutput<T> {
    type Item = T;
    type IntoIter = std::vec::IntoIter<T>;

    fn into_iter(self) -> Self::IntoIter {
        self.slots.into_iter()
    }
}

pub(crate) fn check_batch_len(len: usize) -> Result<(), SortError> {
    if len as u64 > u64::from(u32::MAX) {
        return Err(SortError::BatchTooLarge(len));
    }
    Ok(())
}

fn check_key_bits(key_bits: u32) -> Result<(), SortError> {
    if key_bits == 0 || key_bits > HARD_MAX_TS_WIDTH {
        return Err(SortError::InvalidKeyWidth(key_bits));
    }
    Ok(())
}

pub fn build_histogram(keys: &[u32], key_bits: u32) -> Result<Histogram, SortError> {
    check_key_bits(key_bits)?;
    check_batch_len(keys.len())?;
    let size = 1usize << key_bits;
    let mut counts = vec![0u32; size];
    for (index, &key) in keys.iter().enumerate() {
        match counts.get_mut(key as usize) {
            Some(c) => *c += 1,
            None => return Err(SortError::KeyOutOfRange { index, key, key_bits }),
        }
    }
    Ok(Histogram { counts })
}

pub fn prefix_sums(hist: &Histogram) -> CumulativeRanks {
    let mut running = 0u32;
    let ranks = hist
        .counts
        .iter()
        .map(|&c| {
            running += c;
            running
        })
        .collect();
    CumulativeRanks { ranks }
}

/// For every output slot, the input index that lands there.
fn placement(keys: &[u32], ranks: &mut CumulativeRanks, mode: SortMode) -> Result<Vec<usize>, SortError> {
    let n = keys.len();
    let mut source: Vec<Option<usize>> = vec![None; n];
    let mut place = |index: usize| -> Result<(), SortError> {
        let key = keys[index] as usize;
        let rank = ranks.ranks.get_mut(key).ok_or(SortError::InconsistentRanks { index })?;
        let slot = *rank as usize;
        if slot == 0 || slot > n || source[slot - 1].is_some() {
            return Err(SortError::InconsistentRanks { index });
        }
        source[slot - 1] = Some(index);
        *rank -= 1;
        Ok(())
    };
    match mode {
        SortMode::Paper => (0..n).try_for_each(&mut place)?,
        SortMode::Stable => (0..n).rev().try_for_each(&mut place)?,
    }
    // every slot is written at most once above, so n writes fill all n slots
    Ok(source.into_iter().map(|s| s.expect("slot filled")).collect())
}

/// Scatters `keys` into their slots, consuming `ranks`.
pub fn place_keys(keys: &[u32], ranks: &mut CumulativeRanks) -> Result<SortedOutput<u32>, SortError> {
    place_keys_with(keys, ranks, SortMode::Paper)
}

pub fn place_keys_with(
    keys: &[u32],
    ranks: &mut CumulativeRanks,
    mode: SortMode,
) -> Result<SortedOutput<u32>, SortError> {
    let order = placement(keys, ranks, mode)?;
    Ok(SortedOutput {
        slots: order.into_iter().map(|i| keys[i]).collect(),
    })
}

pub fn sort_keys(keys: &[u32], key_bits: u32) -> Result<SortedOutput<u32>, SortError> {
    sort_keys_with(keys, key_bits, SortMode::Paper)
}

pub fn sort_keys_with(keys: &[u32], key_bits: u32, mode: SortMode) -> Result<SortedOutput<u32>, SortError> {
    let hist = build_histogram(keys, key_bits)?;
    let mut ranks = prefix_sums(&hist);
    place_keys_with(keys, &mut ranks, mode)
}

/// Permutation `p` such that `output[j] = input[p[j]]` for a key sort.
pub fn sort_permutation(keys: &[u32], key_bits: u32, mode: SortMode) -> Result<Vec<usize>, SortError> {
    let hist = build_histogram(keys, key_bits)?;
    let mut ranks = prefix_sums(&hist);
    placement(keys, &mut ranks, mode)
}

pub fn sort_frames(frames: Vec<Frame>, layout: &FrameLayout) -> Result<SortedOutput<Frame>, SortError> {
    sort_frames_with(frames, layout, SortMode::Paper)
}

/// Reorders whole frames by their extracted timestamps. Frames are moved, not copied.
pub fn sort_frames_with(
    frames: Vec<Frame>,
    layout: &FrameLayout,
    mode: SortMode,
) -> Result<SortedOutput<Frame>, SortError> {
    let keys = frames
        .iter()
        .map(|f| extract_timestamp(f, layout))
        .collect::<Result<Vec<_>, _>>()?;
    let order = sort_permutation(&keys, layout.ts_width(), mode)?;
    let mut pool: Vec<Option<Frame>> = frames.into_iter().map(Some).collect();
    let slots = order
        .into_iter()
        .map(|i| pool[i].take().expect("permutation visits each index once"))
        .collect();
    Ok(SortedOutput { slots })
}

/// Word-level counting sort over a flat word buffer.
///
/// `words` holds `N` frames back to back (`W = layout.words_per_frame()`
/// words each). Each frame's words are written straight into a 1-based
/// output array at `W*c - (W-1) ..= W*c`, where `c` is the frame's current
/// rank, before the rank is decremented. For three-word frames this is the
/// `3c-2`, `3c-1`, `3c` scatter. The returned buffer is 0-based with the
/// unused index 0 dropped, so it has exactly `W*N` words.
pub fn scatter_words(words: &[u64], layout: &FrameLayout, mode: SortMode) -> Result<Vec<u64>, SortError> {
    let w = layout.words_per_frame();
    if !words.len().is_multiple_of(w) {
        return Err(FrameError::Malformed(format!(
            "{} words is not a whole number of {w}-word frames",
            words.len()
        ))
        .into());
    }
    let n = words.len() / w;
    let keys = words
        .chunks_exact(w)
        .map(|chunk| extract_timestamp(&Frame::new(chunk.to_vec()), layout))
        .collect::<Result<Vec<_>, _>>()?;
    let hist = build_histogram(&keys, layout.ts_width())?;
    let mut ranks = prefix_sums(&hist);

    let mut out = vec![0u64; w * n + 1];
    let mut visit = |i: usize| -> Result<(), SortError> {
        let rank = &mut ranks.ranks[keys[i] as usize];
        let c = *rank as usize;
        if c == 0 || c > n {
            return Err(SortError::InconsistentRanks { index: i });
        }
        for j in 0..w {
            out[w * c - (w - 1) + j] = words[w * i + j];
        }
        *rank -= 1;
        Ok(())
    };
    match mode {
        SortMode::Paper => (0..n).try_for_each(&mut visit)?,
        SortMode::Stable => (0..n).rev().try_for_each(&mut visit)?,
    }
    out.remove(0);
    Ok(out)
}
