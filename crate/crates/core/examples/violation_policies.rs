//! What happens when a batch starts at or below the maximum of the batch two
//! cycles back, under each violation policy.
//!
//! ```bash
//! cargo run --example violation_policies
//! ```

use framesort::{ContinuousSorter, Frame, FrameLayout, StreamConfig, ViolationPolicy};

fn main() {
    let layout = FrameLayout::default();
    let f = |ts: u64| Frame::new(vec![0, ts, 0]);
    let batches = || {
        vec![
            vec![f(3), f(9)],
            vec![f(10), f(12)],
            vec![f(9), f(15)],
            vec![f(16), f(17)],
        ]
    };

    for policy in [
        ViolationPolicy::Warn,
        ViolationPolicy::DropBatch,
        ViolationPolicy::Error,
    ] {
        let config = StreamConfig::new(2, layout).unwrap().with_policy(policy);
        let mut sorter = ContinuousSorter::new(config).unwrap();
        let mut emitted = 0;
        for (i, b) in batches().into_iter().enumerate() {
            match sorter.push_batch(b) {
                Ok(out) => {
                    emitted += out.emitted.len();
                    for r in out.violations {
                        println!("{policy:?}: batch {i}: {r}");
                    }
                }
                Err(e) => {
                    println!("{policy:?}: batch {i}: rejected: {e}");
                    break;
                }
            }
        }
        emitted += sorter.flush().len();
        println!("{policy:?}: {emitted} frames emitted\n");
    }
}
