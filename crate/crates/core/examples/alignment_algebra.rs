//! Aligning a prior with a reward, recovering the reward from the two
//! models, and the KL objective and trade-off identities.
//!
//! cargo run --example alignment_algebra

use probqual::alignment::{align, kl_objective, secret_reward, RewardFunction};
use probqual::lm::{StringModel, TabularLM};
use probqual::typicality::tradeoff_residual;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let prior = TabularLM::from_probs(&[0.4, 0.3, 0.2, 0.1])?;
    let reward = RewardFunction::from_values(vec![-1.0, 0.5, 1.0, 2.0])?;
    let beta = 0.5;
    let aligned = align(&prior, &reward, beta)?;
    println!(
        "aligned {:?}, log Z+ {:.5}",
        (0..4).map(|i| aligned.model.prob(i)).collect::<Vec<_>>(),
        aligned.log_z_plus
    );

    let sr = secret_reward(&aligned.model, &prior, beta)?;
    println!("recovered reward {:?} (constant {:.2e})", sr.reward.values(), sr.constant);

    let q = TabularLM::from_probs(&[0.1, 0.2, 0.3, 0.4])?;
    let kl = kl_objective(&q, &prior, &reward, beta)?;
    println!("KL(q || aligned) {:.6} = log Z+ + KL(q || p) - E[r]/beta = {:.6}", kl.kl_to_aligned, kl.decomposition);

    let h = aligned.model.entropy()?;
    let corpus = [3, 3, 2, 1, 3, 0, 2, 3];
    let pt = tradeoff_residual(&corpus, &aligned, h)?;
    println!(
        "corpus: avg log prior {:.4}, avg reward {:.4}, residual {:.6} (typicality form {:.6})",
        pt.avg_log_prior, pt.avg_reward, pt.residual, pt.typicality_residual
    );
    Ok(())
}
