use std::collections::HashMap;

use framesort::stream::timestamp_range;
use framesort::{
    extract_timestamp, generate, ContinuousSorter, Frame, FrameLayout, GenParams, StreamConfig, ViolationPolicy,
    ViolationReport,
};
use proptest::prelude::*;

fn layout() -> FrameLayout {
    FrameLayout::default()
}

fn frame(ts: u32, tag: u64) -> Frame {
    Frame::new(vec![tag & 0xFFFF, u64::from(ts), (tag >> 16) & 0xFFFF])
}

fn stamps(frames: &[Frame]) -> Vec<u32> {
    frames
        .iter()
        .map(|f| extract_timestamp(f, &layout()).unwrap())
        .collect()
}

fn multiset(frames: &[Frame]) -> HashMap<Frame, usize> {
    let mut m = HashMap::new();
    for f in frames {
        *m.entry(f.clone()).or_insert(0) += 1;
    }
    m
}

/// Pushes every batch, then flushes; returns all emissions and reports.
fn run(config: StreamConfig, batches: Vec<Vec<Frame>>) -> (Vec<Frame>, Vec<ViolationReport>, ContinuousSorter) {
    let mut sorter = ContinuousSorter::new(config).unwrap();
    let mut out = Vec::new();
    let mut reports = Vec::new();
    for b in batches {
        let o = sorter.push_batch(b).unwrap();
        assert!(sorter.live_frames() <= sorter.config().half_batch);
        out.extend(o.emitted);
        reports.extend(o.violations);
    }
    out.extend(sorter.flush());
    (out, reports, sorter)
}

/// Batches whose timestamps respect both the pairwise i/i-2 separation and
/// nondecreasing batch maxima: each batch's window starts above the
/// maximum of everything two or more batches back.
fn ordered_stream() -> impl Strategy<Value = (usize, Vec<Vec<Frame>>)> {
    (1usize..8, 0usize..30)
        .prop_flat_map(|(half, n)| {
            let batch = prop::collection::vec((0u32..4, any::<u64>()), half);
            (Just(half), prop::collection::vec((0u32..3, batch), n))
        })
        .prop_map(|(half, raw)| {
            let mut batches: Vec<Vec<Frame>> = Vec::new();
            let mut maxes: Vec<u32> = Vec::new();
            let mut base = 0u32;
            for (i, (step, items)) in raw.into_iter().enumerate() {
                // floor = max over batches 0..=i-2, so every new timestamp exceeds it
                let floor = if i >= 2 {
                    maxes[..i - 1].iter().copied().max()
                } else {
                    None
                };
                base = match floor {
                    Some(f) => base.max(f + 1),
                    None => base,
                } + step;
                let frames: Vec<Frame> = items
                    .into_iter()
                    .map(|(off, tag)| frame((base + off).min(255), tag & 0xFFFF_FFFF))
                    .collect();
                maxes.push(stamps(&frames).into_iter().max().unwrap());
                batches.push(frames);
            }
            (half, batches)
        })
        .prop_filter("fits in 8 bits", |(_, batches)| {
            batches
                .iter()
                .flatten()
                .all(|f| extract_timestamp(f, &layout()).unwrap() < 250)
        })
}

proptest! {
    #[test]
    fn ordered_streams_come_out_sorted((half, batches) in ordered_stream()) {
        let input: Vec<Frame> = batches.iter().flatten().cloned().collect();
        let config = StreamConfig::new(half, layout()).unwrap();
        let (out, reports, _) = run(config, batches);
        prop_assert!(reports.is_empty());
        let ts = stamps(&out);
        prop_assert!(ts.windows(2).all(|w| w[0] <= w[1]), "{:?}", ts);
        prop_assert_eq!(multiset(&out), multiset(&input));
    }

    #[test]
    fn conservation_under_warn(half in 1usize..6, raw in prop::collection::vec(prop::collection::vec(0u32..256, 1..6), 0..20)) {
        let batches: Vec<Vec<Frame>> = raw
            .iter()
            .enumerate()
            .map(|(b, ts)| (0..half).map(|j| frame(ts[j % ts.len()], (b * 100 + j) as u64)).collect())
            .collect();
        let input: Vec<Frame> = batches.iter().flatten().cloned().collect();
        let config = StreamConfig::new(half, layout()).unwrap();
        let (out, _, sorter) = run(config, batches);
        prop_assert_eq!(multiset(&out), multiset(&input));
        prop_assert!(sorter.stats().peak_working_frames <= 2 * half);
        prop_assert!(sorter.stats().peak_histogram_counters <= 256);
    }

    #[test]
    fn check_separation_is_strict_comparison(floor in 0u32..256, min in 0u32..256) {
        let mut sorter = ContinuousSorter::new(StreamConfig::new(1, layout()).unwrap()).unwrap();
        sorter.push_batch(vec![frame(floor, 0)]).unwrap();
        sorter.push_batch(vec![frame(255, 1)]).unwrap();
        let report = sorter.check_separation(min);
        prop_assert_eq!(report.is_some(), min <= floor);
        if let Some(r) = report {
            prop_assert_eq!(r, ViolationReport { batch_index: 2, offending_min: min, required_floor: floor });
        }
    }
}

#[test]
fn pairwise_check_alone_does_not_guarantee_order() {
    // passes every i vs i-2 check, yet batch 3 undercuts what batch 2 emitted
    let batches = vec![
        vec![frame(100, 0)],
        vec![frame(1, 1)],
        vec![frame(101, 2)],
        vec![frame(2, 3)],
    ];
    let (out, reports, _) = run(StreamConfig::new(1, layout()).unwrap(), batches);
    assert!(reports.is_empty());
    assert_eq!(stamps(&out), vec![1, 100, 2, 101]);
}

#[test]
fn generated_stream_end_to_end() {
    for (half, spread) in [(1, 1), (3, 2), (8, 5), (64, 2)] {
        let params = GenParams {
            half_batch: half,
            spread,
            seed: spread,
            batches: GenParams {
                half_batch: half,
                spread,
                ..Default::default()
            }
            .max_feasible_batches(),
            ..Default::default()
        };
        let batches = generate(&params).unwrap();
        let input: Vec<Frame> = batches.iter().flatten().cloned().collect();
        let (out, reports, _) = run(StreamConfig::new(half, layout()).unwrap(), batches);
        assert!(reports.is_empty());
        assert!(stamps(&out).windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(multiset(&out), multiset(&input));
    }
}

#[test]
fn equal_windows_cross_check_with_violation_fixture() {
    // batch 2's min equals batch 0's max
    let batches = vec![
        vec![frame(3, 0), frame(9, 1)],
        vec![frame(10, 2), frame(12, 3)],
        vec![frame(9, 4), frame(15, 5)],
    ];
    let ranges: Vec<_> = batches
        .iter()
        .map(|b| timestamp_range(b, &layout()).unwrap().unwrap())
        .collect();
    assert_eq!(ranges[2].0, ranges[0].1);
    for policy in [ViolationPolicy::Warn, ViolationPolicy::DropBatch] {
        let config = StreamConfig::new(2, layout()).unwrap().with_policy(policy);
        let (out, reports, _) = run(config, batches.clone());
        assert_eq!(
            reports,
            vec![ViolationReport {
                batch_index: 2,
                offending_min: 9,
                required_floor: 9
            }]
        );
        let expected = if policy == ViolationPolicy::Warn { 6 } else { 4 };
        assert_eq!(out.len(), expected);
    }
}

#[test]
fn stable_mode_keeps_arrival_order() {
    let config = StreamConfig::new(2, layout())
        .unwrap()
        .with_mode(framesort::SortMode::Stable);
    let batches = vec![vec![frame(1, 0), frame(1, 1)], vec![frame(1, 2), frame(2, 3)]];
    let (out, _, _) = run(config, batches);
    let tags: Vec<u64> = out.iter().map(|f| f.words()[0]).collect();
    assert_eq!(tags, vec![0, 1, 2, 3]);
}
