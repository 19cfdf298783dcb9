//! The toy aligned world: string-level correlation between log-prior and
//! reward is positive, yet among typical corpora it turns negative.
//!
//! cargo run --release --example toy_experiment [seed]

use probqual::experiments::{banded_report, build_toy_world, causal_bootstrap_corpora, simpsons_check, ToyConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(0);
    let world = build_toy_world(&ToyConfig { seed, ..Default::default() })?;
    let banded = causal_bootstrap_corpora(&world, 200, 10_000, seed)?;
    let report = banded_report(&world, &banded, 0.03)?;

    println!("band occupancy {:?}", banded.occupancy());
    println!("string level   pearson {:+.3}  spearman {:+.3}", report.string_pearson, report.string_spearman);
    println!("corpus level   pearson {:+.3}  spearman {:+.3}", report.corpus_pearson, report.corpus_spearman);
    println!(
        "typical set    {} corpora in {} bands, pearson {:?}",
        report.typical_count, report.typical_bands, report.typical_pearson
    );
    println!(
        "median log q_good: typical {:?}, atypical {:?}",
        report.typical_median_log_aligned, report.atypical_median_log_aligned
    );
    println!("{}", simpsons_check(&report).summary);
    Ok(())
}
