//! Sampling a globally normalized top-2 adaptor by IMHA with the locally
//! normalized one as proposal, checked against the exact distribution.
//!
//! cargo run --release --example imha_sampler

use std::collections::HashMap;

use probqual::adaptors::{AdaptedModel, TransformFunction};
use probqual::imha::{convergence_diagnostic, imha_run, ImhaConfig};
use probqual::lm::model_file::{parse_model, LoadedModel};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let LoadedModel::Autoregressive(lm) = parse_model(include_str!("../data/reversal.toml"))? else { unreachable!() };
    let ad = AdaptedModel::new(&lm, TransformFunction::top_k(2))?;
    let chain = imha_run(&ad, &ImhaConfig { steps: 200_000, seed: 0, burn_in: 1_000 })?;
    println!("acceptance rate {:.4}", chain.acceptance_rate);
    println!("lag-1 Cramér's V {:.4}", convergence_diagnostic(&chain)?);

    let mut counts: HashMap<&[usize], usize> = HashMap::new();
    for y in &chain.samples {
        *counts.entry(y).or_default() += 1;
    }
    let n = chain.samples.len() as f64;
    println!("{:<6} {:>10} {:>10}", "string", "chain", "exact");
    for text in ["a", "b", "aa", "bb", "aaa", "bbb"] {
        let y = lm.alphabet().parse(text)?;
        let freq = counts.get(y.as_slice()).copied().unwrap_or(0) as f64 / n;
        println!("{:<6} {:>10.5} {:>10.5}", text, freq, ad.global_logprob(&y)?.exp());
    }

    // the ancestral adaptor proposes from its own target, so nothing is rejected
    let anc = AdaptedModel::new(&lm, TransformFunction::ancestral())?;
    println!("ancestral acceptance {}", imha_run(&anc, &ImhaConfig::new(10_000, 1))?.acceptance_rate);
    Ok(())
}
