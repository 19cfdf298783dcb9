//! Rank and linear correlations, and Cramér's V on a chain of categories.
//!
//! cargo run --example correlations

use probqual::rng;
use probqual::stats::{cramers_v, lag_one_cramers_v, pearson, spearman};
use rand::Rng as _;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let x = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
    let y = [1.0, 4.0, 9.0, 16.0, 25.0, 100.0];
    println!("pearson {:.4}, spearman {:.4}", pearson(&x, &y)?, spearman(&x, &y)?);
    println!("V of a diagonal table {:.3}", cramers_v(&[vec![10, 0], vec![0, 10]]));
    let sticky: Vec<u8> = (0..1000).map(|i| ((i / 50) % 2) as u8).collect();
    let mut r = rng::seeded(0);
    let mixing: Vec<u8> = (0..1000).map(|_| r.random_range(0..2)).collect();
    println!("lag-1 V: sticky {:.3}, mixing {:.3}", lag_one_cramers_v(&sticky), lag_one_cramers_v(&mixing));
    Ok(())
}
