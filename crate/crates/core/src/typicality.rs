//! Typical sets and the concentration of sample entropy.

use rayon::prelude::*;

use crate::alignment::AlignedLM;
use crate::error::{Error, Result};
use crate::lm::StringModel;
use crate::rng;

/// Whether a corpus lies in the `(N, eps)` typical set of a model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TypicalityReport {
    pub sample_entropy: f64,
    pub model_entropy: f64,
    pub epsilon: f64,
    pub deviation: f64,
    pub member: bool,
}

/// `-(1/N) sum log q(y)`.
pub fn sample_entropy<M: StringModel>(corpus: &[M::Item], q: &M) -> Result<f64> {
    if corpus.is_empty() {
        return Err(Error::Input("empty corpus".into()));
    }
    let mut total = 0.0;
    for y in corpus {
        let l = q.log_prob(y);
        if l == f64::NEG_INFINITY {
            return Err(Error::OutsideSupport(q.describe(y)));
        }
        total += l;
    }
    Ok(-total / corpus.len() as f64)
}

pub fn typical_membership<M: StringModel>(corpus: &[M::Item], q: &M, epsilon: f64) -> Result<TypicalityReport> {
    let h = q.entropy()?;
    typicality_against(corpus, q, h, epsilon)
}

/// Membership against a precomputed model entropy.
pub fn typicality_against<M: StringModel>(
    corpus: &[M::Item],
    q: &M,
    entropy: f64,
    epsilon: f64,
) -> Result<TypicalityReport> {
    let se = sample_entropy(corpus, q)?;
    let deviation = (se - entropy).abs();
    Ok(TypicalityReport { sample_entropy: se, model_entropy: entropy, epsilon, deviation, member: deviation < epsilon })
}

/// `V / (N eps^2)`, clipped to `[0, 1]`.
pub fn chebyshev_bound(varentropy: f64, n: usize, epsilon: f64) -> f64 {
    (varentropy / (n as f64 * epsilon * epsilon)).clamp(0.0, 1.0)
}

pub fn chebyshev_bound_for<M: StringModel>(q: &M, n: usize, epsilon: f64) -> Result<f64> {
    Ok(chebyshev_bound(q.varentropy()?, n, epsilon))
}

/// Exponent of the exponential concentration bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChernoffRate {
    pub epsilon: f64,
    /// Best `t` found (kept even when infeasible, for diagnostics).
    pub t_star: f64,
    /// `t (eps - gap_{1-t})` at `t_star`, when positive.
    pub s: Option<f64>,
    /// Rényi gap at order `1 - t_star`.
    pub gap_at_t_star: f64,
}

impl ChernoffRate {
    pub fn bound(&self, n: usize) -> Option<f64> {
        self.s.map(|s| 2.0 * (-s * n as f64).exp())
    }
}

/// The `t` grid `0.01, 0.015, ..., 0.99`.
pub fn t_grid() -> Vec<f64> {
    (0..197).map(|i| 0.01 + 0.005 * i as f64).collect()
}

/// Maximize `t (eps - gap_{1-t})` over the grid, then refine around the best
/// point by ternary search.
pub fn chernoff_rate<M: StringModel>(q: &M, epsilon: f64) -> Result<ChernoffRate> {
    if !q.concentration_certified() {
        return Err(Error::Hypotheses("model is neither finite nor EOS bounded".into()));
    }
    if !(epsilon > 0.0) {
        return Err(Error::Input(format!("epsilon {epsilon} must be positive")));
    }
    let h = q.entropy()?;
    let gap = |t: f64| -> Result<f64> {
        let g = q.renyi_entropy(1.0 - t)? - h;
        Ok(if g < 0.0 && g > -1e-12 { 0.0 } else { g })
    };
    let objective = |t: f64| -> Result<f64> {
        let g = gap(t)?;
        Ok(if g.is_finite() { t * (epsilon - g) } else { f64::NEG_INFINITY })
    };
    let grid = t_grid();
    let mut best = (grid[0], objective(grid[0])?);
    for &t in &grid[1..] {
        let v = objective(t)?;
        if v > best.1 {
            best = (t, v);
        }
    }
    let (mut lo, mut hi) = ((best.0 - 0.005).max(0.01), (best.0 + 0.005).min(0.99));
    for _ in 0..60 {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if objective(m1)? < objective(m2)? {
            lo = m1;
        } else {
            hi = m2;
        }
    }
    let t_ref = 0.5 * (lo + hi);
    let v_ref = objective(t_ref)?;
    if v_ref > best.1 {
        best = (t_ref, v_ref);
    }
    let s = (best.1 > 0.0).then_some(best.1);
    Ok(ChernoffRate { epsilon, t_star: best.0, s, gap_at_t_star: gap(best.0)? })
}

/// Averages of a corpus from an aligned world and the trade-off residual.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TradeoffPoint {
    pub avg_log_prior: f64,
    pub avg_reward: f64,
    /// `H(q_good) - log Z(+)`.
    pub constant: f64,
    /// `|C + avg_log_prior + avg_reward / beta|`.
    pub residual: f64,
    /// `|H + (1/N) sum log q_good(y)|`, the same quantity before substitution.
    pub typicality_residual: f64,
}

/// Trade-off point for a corpus of items of a tabular aligned world, with
/// the substitution `log q_good = r / beta + log p - log Z` checked to `1e-8`.
pub fn tradeoff_residual(corpus: &[usize], world: &AlignedLM, entropy: f64) -> Result<TradeoffPoint> {
    if corpus.is_empty() {
        return Err(Error::Input("empty corpus".into()));
    }
    let n = corpus.len() as f64;
    let mut lp = 0.0;
    let mut r = 0.0;
    let mut lq = 0.0;
    for &y in corpus {
        if y >= world.prior.len() || world.model.log_prob(&y) == f64::NEG_INFINITY {
            return Err(Error::SupportMismatch(format!("item {y} is outside the aligned support")));
        }
        lp += world.prior.log_prob(&y);
        r += world.reward.get(y);
        lq += world.model.log_prob(&y);
    }
    let point = tradeoff_point(lp / n, r / n, world.beta, entropy, world.log_z_plus, lq / n);
    let scale = point.residual.abs().max(1.0);
    if (point.residual - point.typicality_residual).abs() > 1e-8 * scale {
        return Err(Error::Identity(format!(
            "trade-off residual {} against typicality residual {}",
            point.residual, point.typicality_residual
        )));
    }
    Ok(point)
}

/// Assemble a point from precomputed averages.
pub fn tradeoff_point(
    avg_log_prior: f64,
    avg_reward: f64,
    beta: f64,
    entropy: f64,
    log_z_plus: f64,
    avg_log_aligned: f64,
) -> TradeoffPoint {
    let constant = entropy - log_z_plus;
    TradeoffPoint {
        avg_log_prior,
        avg_reward,
        constant,
        residual: (constant + avg_log_prior + avg_reward / beta).abs(),
        typicality_residual: (entropy + avg_log_aligned).abs(),
    }
}

/// One `(N, eps)` cell of an exceedance experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExceedanceRow {
    pub n: usize,
    pub epsilon: f64,
    pub trials: usize,
    /// Fraction of trials whose corpus fell outside the typical set.
    pub empirical: f64,
    /// Binomial standard error of `empirical`.
    pub sigma: f64,
    pub chebyshev: f64,
    pub chernoff: Option<f64>,
    pub seed: u64,
}

/// For each corpus size, draw `trials` corpora and record how often the
/// sample entropy misses the model entropy by `eps` or more. Each corpus
/// is scored against every `eps`.
pub fn exceedance_experiment<M: StringModel>(
    q: &M,
    n_grid: &[usize],
    eps_grid: &[f64],
    trials: usize,
    seed: u64,
) -> Result<Vec<ExceedanceRow>> {
    if trials == 0 || n_grid.contains(&0) {
        return Err(Error::Input("trials and corpus sizes must be positive".into()));
    }
    let h = q.entropy()?;
    let v = q.varentropy()?;
    let rates: Vec<Option<ChernoffRate>> =
        eps_grid.iter().map(|&e| if q.concentration_certified() { chernoff_rate(q, e).ok() } else { None }).collect();
    let mut rows = Vec::new();
    for &n in n_grid {
        let cell_seed = rng::derive_seed(seed, n as u64);
        let deviations: Vec<f64> = (0..trials)
            .into_par_iter()
            .map(|trial| -> Result<f64> {
                let mut r = rng::stream(cell_seed, trial as u64);
                let mut total = 0.0;
                for _ in 0..n {
                    let y = q.sample(&mut r)?;
                    total += q.log_prob(&y);
                }
                Ok((-total / n as f64 - h).abs())
            })
            .collect::<Result<Vec<_>>>()?;
        for (k, &eps) in eps_grid.iter().enumerate() {
            let outside = deviations.iter().filter(|&&d| d >= eps).count();
            let p = outside as f64 / trials as f64;
            rows.push(ExceedanceRow {
                n,
                epsilon: eps,
                trials,
                empirical: p,
                sigma: (p * (1.0 - p) / trials as f64).sqrt(),
                chebyshev: chebyshev_bound(v, n, eps),
                chernoff: rates[k].and_then(|r| r.bound(n)),
                seed: cell_seed,
            });
        }
    }
    Ok(rows)
}
