//! Rényi entropies across orders, the gap to Shannon entropy, and the
//! Chernoff rate that gap produces.
//!
//! cargo run --example renyi_profile

use probqual::lm::entropy::entropy_bounds;
use probqual::lm::{entropy_profile, Alphabet, AutoregressiveLM, GAMMA_GRID};
use probqual::typicality::chernoff_rate;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let al = Alphabet::with_eos(&["a", "b"], "$")?;
    let lm = AutoregressiveLM::new(
        al,
        1,
        vec![(vec![], vec![0.6, 0.3, 0.1]), (vec![0], vec![0.3, 0.3, 0.4]), (vec![1], vec![0.5, 0.2, 0.3])],
    )?;
    let prof = entropy_profile(&lm, &GAMMA_GRID, lm.eos_lower_bound())?;
    println!("Shannon {:.5}, varentropy {:.5}, EOS floor {:?}", prof.shannon, prof.varentropy, prof.eos_lower_bound);
    for (g, h) in &prof.renyi {
        println!("  gamma {g:<4}  H {h:>9.5}  gap {:>8.5}", h - prof.shannon);
    }
    println!("non-increasing: {}", prof.is_non_increasing());

    // enumeration plus certified tails brackets the same numbers
    let b = entropy_bounds(&lm, 12)?;
    println!("entropy in [{:.6}, {:.6}]", b.entropy.lo, b.entropy.hi);

    for eps in [0.05, 0.1, 0.5] {
        let r = chernoff_rate(&lm, eps)?;
        println!("eps {eps}: s = {:?} at t = {:.4}, bound at N=1000 {:?}", r.s, r.t_star, r.bound(1000));
    }
    Ok(())
}
