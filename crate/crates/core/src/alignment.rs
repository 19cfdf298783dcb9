//! Reward-tilted models: `p_good(y) = p(y) exp(r(y) / beta) / Z`, the
//! reward implied by a pair of models, and the KL objective.

use std::collections::HashMap;

use crate::adaptors::{Scaling, TransformFunction};
use crate::error::{Error, Result};
use crate::lm::enumerate::enumerate_support;
use crate::lm::{AutoregressiveLM, Symbol, TabularLM};
use crate::numeric::logsumexp;

/// Rewards over the items of a tabular model, bounded above.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardFunction {
    values: Vec<f64>,
    bound: f64,
}

impl RewardFunction {
    pub fn new(values: Vec<f64>, bound: f64) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Input("rewards must be finite".into()));
        }
        if let Some(v) = values.iter().find(|&&v| v > bound) {
            return Err(Error::Input(format!("reward {v} exceeds the bound {bound}")));
        }
        Ok(RewardFunction { values, bound })
    }

    /// Bound taken as the largest value.
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        let bound = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Self::new(values, bound)
    }

    pub fn zero(n: usize) -> Self {
        RewardFunction { values: vec![0.0; n], bound: 0.0 }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, i: usize) -> f64 {
        self.values[i]
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Read rewards for the items of `model` from a reward file; every item
    /// must be listed.
    pub fn from_file(file: &crate::lm::model_file::RewardFile, model: &TabularLM) -> Result<Self> {
        let map: HashMap<&str, f64> = file.item.iter().map(|i| (i.id.as_str(), i.reward)).collect();
        let values = model
            .labels()
            .iter()
            .map(|l| map.get(l.as_str()).copied().ok_or_else(|| Error::Input(format!("no reward for item `{l}`"))))
            .collect::<Result<Vec<_>>>()?;
        Self::new(values, file.bound)
    }
}

/// A prior tilted by a reward.
#[derive(Debug, Clone)]
pub struct AlignedLM {
    pub prior: TabularLM,
    pub reward: RewardFunction,
    pub beta: f64,
    /// `log Z(+)`.
    pub log_z_plus: f64,
    /// The aligned distribution itself.
    pub model: TabularLM,
}

pub fn align(prior: &TabularLM, reward: &RewardFunction, beta: f64) -> Result<AlignedLM> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::Input(format!("beta {beta} must be positive")));
    }
    if reward.len() != prior.len() {
        return Err(Error::Input(format!("reward covers {} items, prior has {}", reward.len(), prior.len())));
    }
    let logw: Vec<f64> = prior
        .logprobs()
        .iter()
        .zip(reward.values())
        .map(|(&lp, &r)| if lp == f64::NEG_INFINITY { lp } else { lp + r / beta })
        .collect();
    let log_z_plus = logsumexp(&logw);
    let model = TabularLM::from_logprobs(prior.labels().to_vec(), logw.iter().map(|l| l - log_z_plus).collect())?;
    Ok(AlignedLM { prior: prior.clone(), reward: reward.clone(), beta, log_z_plus, model })
}

/// A reward recovered from two models, with the additive constant kept
/// apart.
#[derive(Debug, Clone)]
pub struct SecretReward {
    /// `beta log(q / p)` on the shared support; zero off it.
    pub reward: RewardFunction,
    /// `beta log Z` of the recovered reward, which is what the pure log-ratio
    /// leaves out.
    pub constant: f64,
}

pub fn secret_reward(q: &TabularLM, p: &TabularLM, beta: f64) -> Result<SecretReward> {
    if q.len() != p.len() {
        return Err(Error::SupportMismatch(format!("{} items against {}", q.len(), p.len())));
    }
    let mut values = Vec::with_capacity(q.len());
    for i in 0..q.len() {
        let (lq, lp) = (q.logprobs()[i], p.logprobs()[i]);
        match (lq == f64::NEG_INFINITY, lp == f64::NEG_INFINITY) {
            (true, true) => values.push(0.0),
            (false, false) => values.push(beta * (lq - lp)),
            _ => return Err(Error::SupportMismatch(format!("item `{}` is in only one support", q.label(i)))),
        }
    }
    let reward = RewardFunction::from_values(values)?;
    let log_z: Vec<f64> = (0..p.len())
        .filter(|&i| p.logprobs()[i] > f64::NEG_INFINITY)
        .map(|i| p.logprobs()[i] + reward.get(i) / beta)
        .collect();
    Ok(SecretReward { reward, constant: beta * logsumexp(&log_z) })
}

/// `KL(q || p_good)` and its three-term expansion.
#[derive(Debug, Clone, Copy)]
pub struct KlReport {
    pub kl_to_aligned: f64,
    pub log_z_plus: f64,
    pub kl_to_prior: f64,
    pub expected_reward: f64,
    /// `log Z(+) + KL(q || p) - E_q[r] / beta`.
    pub decomposition: f64,
}

fn kl(q: &TabularLM, p: &[f64]) -> f64 {
    let mut total = 0.0;
    for (i, &lq) in q.logprobs().iter().enumerate() {
        if lq == f64::NEG_INFINITY {
            continue;
        }
        if p[i] == f64::NEG_INFINITY {
            return f64::INFINITY;
        }
        total += lq.exp() * (lq - p[i]);
    }
    total
}

/// Evaluate the KL objective both directly and through its expansion; the
/// two must agree to `1e-9` (or both be infinite).
pub fn kl_objective(q: &TabularLM, p: &TabularLM, reward: &RewardFunction, beta: f64) -> Result<KlReport> {
    if q.len() != p.len() {
        return Err(Error::SupportMismatch(format!("{} items against {}", q.len(), p.len())));
    }
    let aligned = align(p, reward, beta)?;
    let kl_to_aligned = kl(q, aligned.model.logprobs());
    let kl_to_prior = kl(q, p.logprobs());
    let expected_reward: f64 = q.support().map(|i| q.prob(i) * reward.get(i)).sum();
    let decomposition = aligned.log_z_plus + kl_to_prior - expected_reward / beta;
    let agree = if kl_to_aligned.is_infinite() || decomposition.is_infinite() {
        kl_to_aligned == decomposition
    } else {
        (kl_to_aligned - decomposition).abs() <= 1e-9 * kl_to_aligned.abs().max(1.0)
    };
    if !agree {
        return Err(Error::Identity(format!("KL {kl_to_aligned} against expansion {decomposition}")));
    }
    Ok(KlReport { kl_to_aligned, log_z_plus: aligned.log_z_plus, kl_to_prior, expected_reward, decomposition })
}

/// An autoregressive model flattened to its enumerated strings. Refuses when
/// the mass beyond `max_len` exceeds `tolerance`; the remainder is
/// renormalized away.
pub fn tabulate(lm: &AutoregressiveLM, max_len: usize, tolerance: f64) -> Result<(TabularLM, Vec<Vec<Symbol>>)> {
    let e = enumerate_support(lm, max_len, true)?;
    if e.tail_bound > tolerance {
        return Err(Error::UncertifiedTail(format!(
            "mass {} beyond length {max_len} exceeds {tolerance}",
            e.tail_bound
        )));
    }
    let labels = e.entries.iter().map(|(s, _)| lm.alphabet().render(s)).collect();
    let logw: Vec<f64> = e.entries.iter().map(|(_, l)| *l).collect();
    let strings = e.entries.into_iter().map(|(s, _)| s).collect();
    Ok((TabularLM::from_logweights(labels, &logw)?, strings))
}

/// Outcome of checking that a truncating adaptor applied to the aligned
/// model equals the prior's truncation pattern times the tilt.
#[derive(Debug, Clone)]
pub struct PushedPriorReport {
    /// Largest `|log p~_+(y) - log target(y)|` over strings either model keeps.
    pub max_log_deviation: f64,
    /// Strings kept by exactly one of the two.
    pub support_disagreements: usize,
    /// Prefixes where the prior and aligned truncation sets differ.
    pub violations: Vec<Vec<Symbol>>,
    pub strings_checked: usize,
    /// Prior mass beyond the enumeration cutoff.
    pub tail_bound: f64,
}

impl PushedPriorReport {
    pub fn holds(&self, tol: f64) -> bool {
        self.violations.is_empty() && self.support_disagreements == 0 && self.max_log_deviation <= tol
    }
}

/// Compare the global adaptation of the aligned model with
/// `1{every step survives the prior's truncation} p(y) exp(r(y) / beta)`,
/// both normalized over the strings up to `max_len`.
pub fn pushed_prior_check<R>(
    prior: &AutoregressiveLM,
    reward: R,
    beta: f64,
    transform: &TransformFunction,
    max_len: usize,
) -> Result<PushedPriorReport>
where
    R: Fn(&[Symbol]) -> f64,
{
    if transform.scaling != Scaling::Identity {
        return Err(Error::Input("the check needs an adaptor without scaling".into()));
    }
    if !(beta > 0.0) {
        return Err(Error::Input(format!("beta {beta} must be positive")));
    }
    let e = enumerate_support(prior, max_len, false)?;
    let eos = prior.alphabet().eos();
    let k = prior.alphabet().len();

    // aligned string masses and their prefix sums
    let log_good: Vec<f64> = e.entries.iter().map(|(s, l)| l + reward(s) / beta).collect();
    let log_z = logsumexp(&log_good);
    let mut prefix_mass: HashMap<&[Symbol], f64> = HashMap::new();
    let mut own_mass: HashMap<&[Symbol], f64> = HashMap::new();
    for ((s, _), &lg) in e.entries.iter().zip(&log_good) {
        let m = (lg - log_z).exp();
        own_mass.insert(s.as_slice(), m);
        for t in 0..=s.len() {
            *prefix_mass.entry(&s[..t]).or_insert(0.0) += m;
        }
    }
    let aligned_conditional = |u: &[Symbol]| -> Vec<f64> {
        let total = prefix_mass.get(u).copied().unwrap_or(0.0);
        let mut ext = u.to_vec();
        (0..k)
            .map(|x| {
                if total <= 0.0 {
                    return 0.0;
                }
                if x == eos {
                    own_mass.get(u).copied().unwrap_or(0.0) / total
                } else {
                    ext.push(x);
                    let m = prefix_mass.get(ext.as_slice()).copied().unwrap_or(0.0);
                    ext.pop();
                    m / total
                }
            })
            .collect()
    };

    let mut violations = Vec::new();
    let mut checked_prefixes: HashMap<Vec<Symbol>, bool> = HashMap::new();
    let mut pushed = Vec::with_capacity(e.entries.len());
    let mut target = Vec::with_capacity(e.entries.len());
    for (s, lp) in &e.entries {
        let mut state = prior.start();
        let mut w_pushed = 0.0;
        let mut prior_keeps = true;
        for t in 0..=s.len() {
            let u = &s[..t];
            let x = if t == s.len() { eos } else { s[t] };
            let prior_set = transform.truncation.mask(prior.conditional(state));
            let good = aligned_conditional(u);
            let good_set = transform.truncation.mask(&good);
            if !checked_prefixes.contains_key(u) {
                let differs = prior_set != good_set;
                checked_prefixes.insert(u.to_vec(), differs);
                if differs {
                    violations.push(u.to_vec());
                }
            }
            prior_keeps &= prior_set[x];
            w_pushed += if good_set[x] && good[x] > 0.0 { good[x].ln() } else { f64::NEG_INFINITY };
            if t < s.len() {
                state = match prior.next_state(state, x) {
                    Some(n) => n,
                    None => break,
                };
            }
        }
        pushed.push(w_pushed);
        target.push(if prior_keeps { lp + reward(s) / beta } else { f64::NEG_INFINITY });
    }
    let zp = logsumexp(&pushed);
    let zt = logsumexp(&target);
    let mut max_dev: f64 = 0.0;
    let mut disagreements = 0;
    for (a, b) in pushed.iter().zip(&target) {
        match (a.is_finite(), b.is_finite()) {
            (true, true) => max_dev = max_dev.max(((a - zp) - (b - zt)).abs()),
            (false, false) => {}
            _ => disagreements += 1,
        }
    }
    Ok(PushedPriorReport {
        max_log_deviation: max_dev,
        support_disagreements: disagreements,
        violations,
        strings_checked: e.entries.len(),
        tail_bound: e.tail_bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lm::Alphabet;

    fn world() -> (TabularLM, RewardFunction) {
        (
            TabularLM::from_probs(&[0.5, 0.3, 0.2]).unwrap(),
            RewardFunction::from_values(vec![0.0, 2f64.ln(), 0.0]).unwrap(),
        )
    }

    #[test]
    fn align_by_hand() {
        let (p, r) = world();
        let a = align(&p, &r, 1.0).unwrap();
        assert!((a.log_z_plus - 1.3f64.ln()).abs() < 1e-15);
        for (i, want) in [5.0 / 13.0, 6.0 / 13.0, 2.0 / 13.0].iter().enumerate() {
            assert!((a.model.prob(i) - want).abs() < 1e-15);
        }
        let z = align(&p, &RewardFunction::zero(3), 1.0).unwrap();
        assert_eq!(z.log_z_plus, 0.0);
        let big = align(&p, &r, 1e6).unwrap();
        let tv: f64 = (0..3).map(|i| (big.model.prob(i) - p.prob(i)).abs()).sum::<f64>() / 2.0;
        assert!(tv < 1e-4);
        assert!(align(&p, &RewardFunction::zero(2), 1.0).is_err());
    }

    #[test]
    fn secret_reward_round_trip() {
        let (p, r) = world();
        let q = align(&p, &r, 1.0).unwrap().model;
        let s = secret_reward(&q, &p, 1.0).unwrap();
        let shift = s.reward.get(0) - r.get(0);
        for i in 0..3 {
            assert!((s.reward.get(i) - r.get(i) - shift).abs() < 1e-12);
        }
        let back = align(&p, &s.reward, 1.0).unwrap();
        for i in 0..3 {
            assert!((back.model.prob(i) - q.prob(i)).abs() < 1e-12);
        }
        assert!(s.constant.abs() < 1e-12);
        let same = secret_reward(&p, &p, 2.0).unwrap();
        assert!(same.reward.values().iter().all(|&v| v == 0.0));
        let other = TabularLM::from_probs(&[1.0, 0.0, 0.0]).unwrap();
        assert!(matches!(secret_reward(&other, &p, 1.0), Err(Error::SupportMismatch(_))));
    }

    #[test]
    fn kl_expansion() {
        let (p, r) = world();
        let a = align(&p, &r, 1.0).unwrap();
        let at_optimum = kl_objective(&a.model, &p, &r, 1.0).unwrap();
        assert!(at_optimum.kl_to_aligned.abs() < 1e-12);

        let at_prior = kl_objective(&p, &p, &r, 1.0).unwrap();
        let direct: f64 = (0..3).map(|i| p.prob(i) * (p.prob(i) / a.model.prob(i)).ln()).sum();
        assert!((at_prior.kl_to_aligned - direct).abs() < 1e-14);

        let point = TabularLM::from_probs(&[0.0, 1.0, 0.0]).unwrap();
        let rep = kl_objective(&point, &p, &r, 1.0).unwrap();
        assert!((rep.kl_to_aligned + (6.0f64 / 13.0).ln()).abs() < 1e-14);
    }

    /// Two symbols, strings of length at most two, EOS forced at depth two.
    fn short_world() -> AutoregressiveLM {
        let al = Alphabet::with_eos(&["a", "b"], "EOS").unwrap();
        AutoregressiveLM::new(
            al,
            2,
            vec![
                (vec![], vec![0.6, 0.3, 0.1]),
                (vec![0], vec![0.5, 0.2, 0.3]),
                (vec![1], vec![0.3, 0.3, 0.4]),
                (vec![0, 0], vec![0.0, 0.0, 1.0]),
                (vec![0, 1], vec![0.0, 0.0, 1.0]),
                (vec![1, 0], vec![0.0, 0.0, 1.0]),
                (vec![1, 1], vec![0.0, 0.0, 1.0]),
            ],
        )
        .unwrap()
    }

    #[test]
    fn pushed_prior_top1() {
        let p = short_world();
        // a mild reward that leaves every argmax in place
        let r = |s: &[Symbol]| 0.1 * s.iter().filter(|&&x| x == 1).count() as f64;
        let rep = pushed_prior_check(&p, r, 1.0, &TransformFunction::top_k(1), 4).unwrap();
        assert!(rep.violations.is_empty());
        assert!(rep.holds(1e-10), "{rep:?}");
        assert_eq!(rep.tail_bound, 0.0);

        let anc = pushed_prior_check(&p, r, 1.0, &TransformFunction::ancestral(), 4).unwrap();
        assert!(anc.holds(1e-10));

        // a strong reward on `b` flips the first argmax
        let strong = |s: &[Symbol]| 3.0 * s.iter().filter(|&&x| x == 1).count() as f64;
        let bad = pushed_prior_check(&p, strong, 1.0, &TransformFunction::top_k(1), 4).unwrap();
        assert!(!bad.violations.is_empty());
        assert!(bad.violations.contains(&vec![]));
    }

    #[test]
    fn tabulate_short_world() {
        let (t, strings) = tabulate(&short_world(), 4, 0.0).unwrap();
        assert_eq!(t.len(), strings.len());
        assert_eq!(strings.len(), 7);
        assert!((t.prob(0) - 0.1).abs() < 1e-15);
    }
}
