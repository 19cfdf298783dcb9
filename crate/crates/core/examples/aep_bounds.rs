//! How often a corpus misses the typical set, against the Chebyshev and
//! Chernoff bounds.
//!
//! cargo run --release --example aep_bounds

use probqual::lm::{Alphabet, AutoregressiveLM, StringModel};
use probqual::typicality::exceedance_experiment;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let al = Alphabet::with_eos(&["x", "y"], "$")?;
    let q = AutoregressiveLM::new(al, 0, vec![(vec![], vec![0.45, 0.25, 0.3])])?;
    println!("H = {:.4} nats, V(I) = {:.4}", q.entropy()?, q.varentropy()?);
    let rows = exceedance_experiment(&q, &[100, 1_000, 10_000], &[0.05, 0.1, 0.5], 1_000, 0)?;
    println!("{:>6} {:>5} {:>10} {:>10} {:>10}", "N", "eps", "empirical", "chebyshev", "chernoff");
    for r in rows {
        let chernoff = r.chernoff.map_or("-".to_string(), |c| format!("{c:.3e}"));
        println!("{:>6} {:>5} {:>10.4} {:>10.4} {:>10}", r.n, r.epsilon, r.empirical, r.chebyshev, chernoff);
    }
    Ok(())
}
