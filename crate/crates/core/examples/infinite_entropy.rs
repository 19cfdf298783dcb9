//! A tight model with infinite entropy: the mass converges, the entropy
//! partial sums keep growing.
//!
//! cargo run --release --example infinite_entropy

use probqual::lm::InfiniteEntropyLM;

fn main() {
    let m = InfiniteEntropyLM;
    println!("{:>9} {:>14} {:>14} {:>12}", "n", "mass", "1-1/lg(n+2)", "entropy bits");
    for n in [10u64, 1_000, 100_000, 1_000_000] {
        println!(
            "{:>9} {:>14.10} {:>14.10} {:>12.5}",
            n,
            m.partial_mass_summed(n),
            m.partial_mass(n),
            m.partial_entropy_bits(n)
        );
    }
}
