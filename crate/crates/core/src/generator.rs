//! Seeded generator for timestamped frame streams.
//!
//! Batch `i` draws its timestamps uniformly from the window
//! `[lo(i), lo(i) + spread)` with `lo(i) = floor(i * spread / 2)`. Windows of
//! batches two apart are disjoint and ascending, so the separation constraint
//! holds, while neighbouring batches overlap whenever `spread >= 2`. Every
//! timestamp of batch `i+1` also exceeds everything in batches `0..i`, which
//! keeps the continuous sorter's output globally ordered.
//!
//! Payload bits outside the timestamp field are random.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::frame::{Frame, FrameLayout};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GenError {
    #[error(
        "{batches} batches with spread {spread} need timestamps up to {needed}, \
         but {ts_width}-bit timestamps stop at {max}"
    )]
    Infeasible {
        batches: u64,
        spread: u64,
        ts_width: u32,
        needed: u64,
        max: u64,
    },
    #[error("invalid generator parameters: {0}")]
    InvalidParams(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GenParams {
    pub batches: u64,
    pub half_batch: usize,
    pub seed: u64,
    /// Width of each batch's timestamp window.
    pub spread: u64,
    pub layout: FrameLayout,
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams {
            batches: 16,
            half_batch: 64,
            seed: 0,
            spread: 2,
            layout: FrameLayout::default(),
        }
    }
}

impl GenParams {
    fn validate(&self) -> Result<(), GenError> {
        if self.half_batch == 0 {
            return Err(GenError::InvalidParams("half_batch must be at least 1".into()));
        }
        if self.spread == 0 {
            return Err(GenError::InvalidParams("spread must be at least 1".into()));
        }
        Ok(())
    }

    fn window_lo(&self, batch: u64) -> u64 {
        // exact in u128 for any u64 inputs
        ((u128::from(batch) * u128::from(self.spread)) / 2) as u64
    }

    /// Largest timestamp the stream can contain.
    pub fn max_timestamp(&self) -> u64 {
        if self.batches == 0 {
            return 0;
        }
        self.window_lo(self.batches - 1).saturating_add(self.spread - 1)
    }

    pub fn check_feasible(&self) -> Result<(), GenError> {
        self.validate()?;
        let max = self.layout.key_space() - 1;
        let needed = self.max_timestamp();
        if needed > max {
            return Err(GenError::Infeasible {
                batches: self.batches,
                spread: self.spread,
                ts_width: self.layout.ts_width(),
                needed,
                max,
            });
        }
        Ok(())
    }

    /// Most batches that fit in the timestamp range for this spread.
    pub fn max_feasible_batches(&self) -> u64 {
        let max = self.layout.key_space() - 1;
        if self.spread == 0 || self.spread - 1 > max {
            return 0;
        }
        // largest b with floor((b-1) * spread / 2) <= max - spread + 1
        let room = u128::from(max - (self.spread - 1));
        ((2 * room + 1) / u128::from(self.spread) + 1) as u64
    }
}

/// Constraint-satisfying stream of `batches` batches.
pub fn generate(params: &GenParams) -> Result<Vec<Vec<Frame>>, GenError> {
    params.check_feasible()?;
    Ok(generate_inner(params, false))
}

/// Same windows, reduced modulo `2^ts_width`. Never fails on range, but
/// breaks the separation constraint every time the window wraps. For load
/// and timing runs where ordering is irrelevant.
pub fn generate_wrapping(params: &GenParams) -> Result<Vec<Vec<Frame>>, GenError> {
    params.validate()?;
    Ok(generate_inner(params, true))
}

fn generate_inner(params: &GenParams, wrap: bool) -> Vec<Vec<Frame>> {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let layout = &params.layout;
    let word_max = if layout.word_bits() >= 64 {
        u64::MAX
    } else {
        (1u64 << layout.word_bits()) - 1
    };
    let key_mask = layout.key_space() - 1;
    (0..params.batches)
        .map(|b| {
            let lo = params.window_lo(b);
            (0..params.half_batch)
                .map(|_| {
                    let words = (0..layout.words_per_frame())
                        .map(|_| rng.gen_range(0..=word_max))
                        .collect();
                    let mut frame = Frame::new(words);
                    let ts = lo.wrapping_add(rng.gen_range(0..params.spread));
                    let ts = if wrap { ts & key_mask } else { ts };
                    layout
                        .set_timestamp(&mut frame, ts as u32)
                        .expect("generated frame conforms to layout");
                    frame
                })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::extract_timestamp;
    use crate::stream::{timestamp_range, ContinuousSorter, StreamConfig};

    #[test]
    fn deterministic() {
        let p = GenParams {
            batches: 3,
            half_batch: 2,
            seed: 42,
            ..Default::default()
        };
        assert_eq!(generate(&p).unwrap(), generate(&p).unwrap());
        let q = GenParams { seed: 43, ..p };
        assert_ne!(generate(&p).unwrap(), generate(&q).unwrap());
    }

    #[test]
    fn windows_satisfy_separation() {
        for spread in 1..6 {
            let p = GenParams {
                batches: 40,
                half_batch: 5,
                seed: spread,
                spread,
                ..Default::default()
            };
            let stream = generate(&p).unwrap();
            let ranges: Vec<(u32, u32)> = stream
                .iter()
                .map(|b| timestamp_range(b, &p.layout).unwrap().unwrap())
                .collect();
            for i in 2..ranges.len() {
                assert!(ranges[i].0 > ranges[i - 2].1, "spread {spread} batch {i}");
                let prior_max = ranges[..i - 1].iter().map(|r| r.1).max().unwrap();
                assert!(ranges[i].0 > prior_max);
            }
        }
    }

    #[test]
    fn adjacent_batches_can_overlap() {
        let p = GenParams {
            batches: 50,
            half_batch: 8,
            seed: 7,
            spread: 4,
            ..Default::default()
        };
        let stream = generate(&p).unwrap();
        let overlaps = stream
            .windows(2)
            .filter(|w| {
                let a = timestamp_range(&w[0], &p.layout).unwrap().unwrap();
                let b = timestamp_range(&w[1], &p.layout).unwrap().unwrap();
                b.0 <= a.1
            })
            .count();
        assert!(overlaps > 0);
    }

    #[test]
    fn feasibility_bound() {
        let base = GenParams {
            half_batch: 1,
            spread: 1,
            ..Default::default()
        };
        // spread 1: lo(i) = floor(i/2), so 512 batches reach 255
        assert_eq!(base.max_feasible_batches(), 512);
        assert!(GenParams { batches: 512, ..base }.check_feasible().is_ok());
        assert!(GenParams { batches: 513, ..base }.check_feasible().is_err());
        for spread in 1..40 {
            let p = GenParams { spread, ..base };
            let b = p.max_feasible_batches();
            assert!(
                GenParams { batches: b, ..p }.check_feasible().is_ok(),
                "spread {spread}"
            );
            assert!(
                GenParams { batches: b + 1, ..p }.check_feasible().is_err(),
                "spread {spread}"
            );
        }
        assert!(matches!(
            generate(&GenParams {
                batches: 1000,
                ..Default::default()
            }),
            Err(GenError::Infeasible { .. })
        ));
    }

    #[test]
    fn generated_stream_passes_separation_check() {
        let p = GenParams {
            batches: 200,
            half_batch: 3,
            seed: 1,
            ..Default::default()
        };
        let mut sorter = ContinuousSorter::new(StreamConfig::new(3, p.layout).unwrap()).unwrap();
        for batch in generate(&p).unwrap() {
            assert!(sorter.push_batch(batch).unwrap().violations.is_empty());
        }
        assert_eq!(sorter.stats().violations, 0);
    }

    #[test]
    fn wrapping_stays_in_range() {
        let p = GenParams {
            batches: 2000,
            half_batch: 2,
            ..Default::default()
        };
        let stream = generate_wrapping(&p).unwrap();
        assert_eq!(stream.len(), 2000);
        for f in stream.iter().flatten() {
            assert!(extract_timestamp(f, &p.layout).unwrap() < 256);
        }
    }
}
