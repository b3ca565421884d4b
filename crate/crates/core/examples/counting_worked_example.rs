//! The three counting-sort passes on a six-key input with 3-bit keys.
//!
//! ```bash
//! cargo run --example counting_worked_example
//! ```

use framesort::counting::sort_permutation;
use framesort::{build_histogram, place_keys, prefix_sums, SortMode};

fn main() {
    let keys = [0u32, 5, 2, 2, 7, 4];
    let hist = build_histogram(&keys, 3).unwrap();
    println!("keys       {keys:?}");
    println!("histogram  {:?}", hist.counts());

    let mut ranks = prefix_sums(&hist);
    println!("ranks      {:?}", ranks.ranks());

    let sorted = place_keys(&keys, &mut ranks).unwrap();
    println!("sorted     {:?}", sorted.as_slice());
    println!("ranks now  {:?} (consumed by placement)", ranks.ranks());

    // equal keys: the later arrival takes the earlier slot
    println!(
        "paper order of input indices  {:?}",
        sort_permutation(&keys, 3, SortMode::Paper).unwrap()
    );
    println!(
        "stable order of input indices {:?}",
        sort_permutation(&keys, 3, SortMode::Stable).unwrap()
    );
}
