//! Top-2 sampling on a three-symbol model: the local and global views of
//! the same adaptor rank `aaa` and `bbb` in opposite orders.
//!
//! cargo run --example reversal

use probqual::adaptors::{AdaptedModel, TransformFunction};
use probqual::lm::model_file::{parse_model, LoadedModel};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let LoadedModel::Autoregressive(lm) = parse_model(include_str!("../data/reversal.toml"))? else {
        unreachable!("bundled model is autoregressive")
    };
    let ad = AdaptedModel::new(&lm, "topk:k=2".parse::<TransformFunction>()?)?;
    let log_z = ad.log_normalizer()?;
    println!("{:<6} {:>10} {:>12} {:>14} {:>12}", "string", "prior", "local", "unnormalized", "global");
    for text in ["aaa", "bbb", "a", "b", "ab"] {
        let y = lm.alphabet().parse(text)?;
        println!(
            "{:<6} {:>10.6} {:>12.6} {:>14.6} {:>12.6}",
            text,
            lm.string_logprob(&y).exp(),
            ad.local_logprob(&y).exp(),
            ad.global_unnorm_logweight(&y).exp(),
            (ad.global_unnorm_logweight(&y) - log_z).exp(),
        );
    }
    let (aaa, bbb) = (lm.alphabet().parse("aaa")?, lm.alphabet().parse("bbb")?);
    println!("reversal between aaa and bbb: {}", ad.reverses(&aaa, &bbb));
    Ok(())
}
