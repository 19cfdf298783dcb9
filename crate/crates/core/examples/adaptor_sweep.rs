//! Every adaptor at every temperature on the bundled aligned world, with the
//! trend checks.
//!
//! cargo run --release --example adaptor_sweep

use probqual::experiments::{adaptor_sweep, default_world, trend_report, SweepConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let world = default_world()?;
    let result = adaptor_sweep(&world, &SweepConfig::default())?;
    println!("{:<16} {:>5} {:>10} {:>10} {:>8} {:>7}", "adaptor", "temp", "log prior", "reward", "accept", "V");
    for r in &result.rows {
        println!(
            "{:<16} {:>5} {:>10.4} {:>10.4} {:>8.4} {:>7.4}",
            r.adaptor, r.temperature, r.avg_log_prior, r.avg_reward, r.acceptance_rate, r.cramers_v
        );
    }
    let trends = trend_report(&result, [0.5, 1.0, 1.5], Some(("nucleus:pi=0.9", "nucleus:pi=0.95")));
    println!("{trends:#?}");
    Ok(())
}
