//! Exact normalizers: a transfer-matrix solve, checked against enumeration
//! with a certified tail.
//!
//! cargo run --example normalizer

use probqual::adaptors::{AdaptedModel, TransformFunction};
use probqual::lm::enumerate_support;
use probqual::lm::model_file::{parse_model, LoadedModel};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let LoadedModel::Autoregressive(lm) = parse_model(include_str!("../data/reversal.toml"))? else { unreachable!() };
    let e = enumerate_support(&lm, 10, true)?;
    println!("{} strings up to length 10, mass {:.10}, tail {:.3e}", e.entries.len(), e.mass(), e.tail_bound);
    for spec in ["ancestral", "topk:k=2", "nucleus:pi=0.8", "typical:pi=0.9,temp=0.7"] {
        let ad = AdaptedModel::new(&lm, spec.parse::<TransformFunction>()?)?;
        let z = ad.global_normalizer(12)?;
        println!(
            "{spec:<26} Z = {:.10}  enumerated {:.10}  tail <= {:.2e}",
            z.z_transfer, z.z_enumerated, z.tail_bound
        );
    }
    Ok(())
}
