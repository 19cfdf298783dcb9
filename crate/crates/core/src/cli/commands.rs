use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};

use super::output::{f, load_settings, opt, Run};
use super::{CliError, Common, RunManifest};
use crate::adaptors::{AdaptedModel, Composition, TransformFunction};
use crate::experiments::{
    adaptor_sweep, banded_report, build_toy_world, causal_bootstrap_with, default_world, simpsons_check, trend_report,
    AlignedWorld, BandSpec, SweepConfig, ToyConfig,
};
use crate::imha::{convergence_diagnostic, imha_run, write_chain_csv, ImhaConfig};
use crate::lm::model_file::{load_model, load_world, parse_model, LoadedModel};
use crate::lm::{AutoregressiveLM, StringModel};
use crate::typicality::exceedance_experiment;

const REVERSAL_MODEL: &str = include_str!("../../data/reversal.toml");

macro_rules! set {
    ($s:expr, $($flag:expr => $field:ident),* $(,)?) => {
        $( if let Some(v) = $flag { $s.$field = v; } )*
    };
}

fn model_or_default(run: &mut Run, path: Option<&Path>) -> Result<LoadedModel, CliError> {
    match path {
        Some(p) => {
            run.input(p)?;
            Ok(load_model(p)?)
        }
        None => Ok(parse_model(REVERSAL_MODEL)?),
    }
}

fn autoregressive(model: LoadedModel) -> Result<AutoregressiveLM, CliError> {
    match model {
        LoadedModel::Autoregressive(m) => Ok(m),
        LoadedModel::Tabular(_) => Err(CliError::Usage("this command needs an autoregressive model".into())),
    }
}

// ---------------------------------------------------------------- toy

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToySettings {
    pub domain_size: usize,
    pub dirichlet_alpha: f64,
    pub tau: f64,
    pub kappa: f64,
    pub beta: f64,
    pub seed: u64,
    pub corpora: usize,
    pub corpus_size: usize,
    pub typical_epsilon: f64,
    pub bands: usize,
    pub tilt_span: f64,
    pub retries: usize,
}

impl Default for ToySettings {
    fn default() -> Self {
        let t = ToyConfig::default();
        let b = BandSpec::default();
        ToySettings {
            domain_size: t.domain_size,
            dirichlet_alpha: t.dirichlet_alpha,
            tau: t.tau,
            kappa: t.kappa,
            beta: t.beta,
            seed: t.seed,
            corpora: 200,
            corpus_size: 10_000,
            typical_epsilon: 0.03,
            bands: b.bands,
            tilt_span: b.tilt_span,
            retries: b.retries,
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct ToyFlags {
    /// Number of strings in the toy domain.
    #[arg(long)]
    pub domain_size: Option<usize>,
    /// Dirichlet concentration for the ground-truth distribution.
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub tau: Option<f64>,
    /// Half-width of the uniform logit noise.
    #[arg(long)]
    pub kappa: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub corpora: Option<usize>,
    #[arg(long)]
    pub corpus_size: Option<usize>,
    /// Typical-set width in nats.
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub bands: Option<usize>,
    #[arg(long)]
    pub tilt_span: Option<f64>,
}

pub(crate) fn toy(common: &Common, flags: ToyFlags) -> Result<RunManifest, CliError> {
    let mut s: ToySettings = load_settings(common.config.as_deref(), "toy")?;
    set!(s,
        flags.domain_size => domain_size, flags.alpha => dirichlet_alpha, flags.tau => tau,
        flags.kappa => kappa, flags.beta => beta, flags.corpora => corpora,
        flags.corpus_size => corpus_size, flags.epsilon => typical_epsilon, flags.bands => bands,
        flags.tilt_span => tilt_span, common.seed => seed,
    );
    let mut run = Run::start("toy", &common.out_dir)?;
    let cfg = ToyConfig {
        domain_size: s.domain_size,
        dirichlet_alpha: s.dirichlet_alpha,
        tau: s.tau,
        kappa: s.kappa,
        beta: s.beta,
        seed: s.seed,
    };
    let world = build_toy_world(&cfg)?;
    let spec = BandSpec { bands: s.bands, tilt_span: s.tilt_span, retries: s.retries };
    let banded = causal_bootstrap_with(&world, &spec, s.corpora, s.corpus_size, s.seed)?;
    let report = banded_report(&world, &banded, s.typical_epsilon)?;
    let check = simpsons_check(&report);

    let strings: Vec<Vec<String>> = (0..world.prior.len())
        .map(|i| {
            vec![
                world.prior.label(i).to_string(),
                f(world.p_good.logprobs()[i]),
                f(world.prior.logprobs()[i]),
                f(world.reward.get(i)),
                f(world.aligned.model.logprobs()[i]),
                f(world.noise[i]),
            ]
        })
        .collect();
    run.table("toy_strings.csv", &["item", "log_p_good", "log_prior", "reward", "log_aligned", "noise"], &strings)?;

    let corpora: Vec<Vec<String>> = banded
        .corpora
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let h = c.stats.sample_entropy();
            let typical = (h - report.entropy).abs() < s.typical_epsilon;
            vec![
                i.to_string(),
                c.band.to_string(),
                f(c.tilt),
                c.stats.size.to_string(),
                f(c.stats.avg_log_prior),
                f(c.stats.avg_reward),
                f(c.stats.log_aligned),
                f(h),
                u8::from(typical).to_string(),
            ]
        })
        .collect();
    run.table(
        "toy_corpora.csv",
        &["corpus", "band", "tilt", "size", "avg_log_prior", "avg_reward", "log_aligned", "sample_entropy", "typical"],
        &corpora,
    )?;

    let more = report.typical_more_probable().map(|b| b.to_string()).unwrap_or_default();
    let summary: Vec<Vec<String>> = [
        ("string_pearson", f(report.string_pearson)),
        ("string_spearman", f(report.string_spearman)),
        ("corpus_pearson", f(report.corpus_pearson)),
        ("corpus_spearman", f(report.corpus_spearman)),
        ("entropy", f(report.entropy)),
        ("typical_epsilon", f(report.typical_epsilon)),
        ("typical_count", report.typical_count.to_string()),
        ("typical_bands", report.typical_bands.to_string()),
        ("typical_pearson", opt(report.typical_pearson)),
        ("typical_median_log_aligned", opt(report.typical_median_log_aligned)),
        ("atypical_median_log_aligned", opt(report.atypical_median_log_aligned)),
        ("typical_more_probable", more),
        ("verdict", format!("{:?}", check.verdict).to_lowercase()),
    ]
    .into_iter()
    .map(|(k, v)| vec![k.to_string(), v])
    .collect();
    run.table("toy_summary.csv", &["metric", "value"], &summary)?;

    println!("{}", check.summary);
    for d in &banded.diagnostics {
        eprintln!("warning: {d}");
    }
    run.notes.push(check.summary.clone());
    run.notes.extend(banded.diagnostics.iter().cloned());
    run.finish(s.seed, &s)
}

// ---------------------------------------------------------------- sweep

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSettings {
    /// World file with `[prior]` and `[aligned]` tables; the bundled world
    /// when absent.
    pub world: Option<PathBuf>,
    pub beta: f64,
    pub adaptors: Vec<String>,
    pub temperatures: Vec<f64>,
    pub corpus_size: usize,
    pub resamples: usize,
    pub seed: u64,
}

impl Default for SweepSettings {
    fn default() -> Self {
        let c = SweepConfig::default();
        SweepSettings {
            world: None,
            beta: 1.0,
            adaptors: c.adaptors,
            temperatures: c.temperatures,
            corpus_size: c.corpus_size,
            resamples: c.resamples,
            seed: c.seed,
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct SweepFlags {
    #[arg(long)]
    pub world: Option<PathBuf>,
    #[arg(long)]
    pub beta: Option<f64>,
    /// Adaptor spec without temperature; repeat for several.
    #[arg(long = "adaptor")]
    pub adaptors: Vec<String>,
    /// Comma-separated temperatures.
    #[arg(long, value_delimiter = ',')]
    pub temperatures: Vec<f64>,
    #[arg(long)]
    pub corpus_size: Option<usize>,
    #[arg(long)]
    pub resamples: Option<usize>,
}

pub(crate) fn sweep(common: &Common, flags: SweepFlags) -> Result<RunManifest, CliError> {
    let mut s: SweepSettings = load_settings(common.config.as_deref(), "sweep")?;
    let adaptors = (!flags.adaptors.is_empty()).then_some(flags.adaptors);
    let temperatures = (!flags.temperatures.is_empty()).then_some(flags.temperatures);
    let world_path = flags.world.map(Some);
    set!(s,
        world_path => world, flags.beta => beta, adaptors => adaptors, temperatures => temperatures,
        flags.corpus_size => corpus_size, flags.resamples => resamples, common.seed => seed,
    );
    let mut run = Run::start("sweep", &common.out_dir)?;
    let world = match &s.world {
        Some(p) => {
            run.input(p)?;
            let (prior, aligned) = load_world(p)?;
            AlignedWorld::new(prior, aligned, s.beta)?
        }
        None if s.beta == 1.0 => default_world()?,
        None => {
            let w = default_world()?;
            AlignedWorld::new(w.prior, w.aligned, s.beta)?
        }
    };
    let cfg = SweepConfig {
        adaptors: s.adaptors.clone(),
        temperatures: s.temperatures.clone(),
        corpus_size: s.corpus_size,
        resamples: s.resamples,
        seed: s.seed,
    };
    let result = adaptor_sweep(&world, &cfg)?;
    let rows: Vec<Vec<String>> = result
        .rows
        .iter()
        .map(|r| {
            vec![
                r.adaptor.clone(),
                f(r.temperature),
                f(r.avg_log_prior),
                f(r.avg_reward),
                f(r.acceptance_rate),
                f(r.cramers_v),
                f(r.expected_log_prior),
                f(r.expected_reward),
            ]
        })
        .collect();
    run.table(
        "sweep.csv",
        &[
            "adaptor",
            "temperature",
            "avg_log_prior",
            "avg_reward",
            "acceptance_rate",
            "cramers_v",
            "expected_log_prior",
            "expected_reward",
        ],
        &rows,
    )?;

    let temps = [0.5, 1.0, 1.5];
    if temps.iter().all(|t| s.temperatures.contains(t)) {
        let has = |a: &str| result.rows.iter().any(|r| r.adaptor == a);
        let pair = (has("nucleus:pi=0.9") && has("nucleus:pi=0.95")).then_some(("nucleus:pi=0.9", "nucleus:pi=0.95"));
        let trends = trend_report(&result, temps, pair);
        let line = format!(
            "trends: monotone {:?}, not monotone {:?}, nucleus ordered {:?}, ancestral baseline {}",
            trends.monotone, trends.not_monotone, trends.nucleus_ordered, trends.ancestral_baseline
        );
        println!("{line}");
        run.notes.push(line);
    }
    println!("{} rows", result.rows.len());
    run.finish(s.seed, &s)
}

// ---------------------------------------------------------------- aep

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AepSettings {
    /// Model file; the bundled three-symbol model when absent.
    pub model: Option<PathBuf>,
    pub epsilons: Vec<f64>,
    pub sizes: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
}

impl Default for AepSettings {
    fn default() -> Self {
        AepSettings {
            model: None,
            epsilons: vec![0.05, 0.1, 0.5],
            sizes: vec![100, 1000, 10_000],
            trials: 1000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct AepFlags {
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Comma-separated typical-set widths.
    #[arg(long, value_delimiter = ',')]
    pub epsilons: Vec<f64>,
    /// Comma-separated corpus sizes.
    #[arg(long, value_delimiter = ',')]
    pub sizes: Vec<usize>,
    #[arg(long)]
    pub trials: Option<usize>,
}

pub(crate) fn aep(common: &Common, flags: AepFlags) -> Result<RunManifest, CliError> {
    let mut s: AepSettings = load_settings(common.config.as_deref(), "aep")?;
    let epsilons = (!flags.epsilons.is_empty()).then_some(flags.epsilons);
    let sizes = (!flags.sizes.is_empty()).then_some(flags.sizes);
    let model_path = flags.model.map(Some);
    set!(s,
        model_path => model, epsilons => epsilons, sizes => sizes, flags.trials => trials, common.seed => seed,
    );
    let mut run = Run::start("aep", &common.out_dir)?;
    match model_or_default(&mut run, s.model.as_deref())? {
        LoadedModel::Autoregressive(m) => aep_table(&mut run, &m, &s)?,
        LoadedModel::Tabular(m) => aep_table(&mut run, &m, &s)?,
    }
    run.finish(s.seed, &s)
}

fn aep_table<M: StringModel>(run: &mut Run, q: &M, s: &AepSettings) -> Result<(), CliError> {
    let rows = exceedance_experiment(q, &s.sizes, &s.epsilons, s.trials, s.seed)?;
    let any_chernoff = rows.iter().any(|r| r.chernoff.is_some());
    let mut header = vec!["n", "epsilon", "trials", "empirical", "sigma", "chebyshev"];
    if any_chernoff {
        header.push("chernoff");
    } else if q.concentration_certified() {
        run.notes.push("chernoff columns omitted: no epsilon in the grid has a feasible rate".into());
    } else {
        run.notes.push("chernoff columns omitted: model is not certified EOS-bounded".into());
    }
    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let mut v =
                vec![r.n.to_string(), f(r.epsilon), r.trials.to_string(), f(r.empirical), f(r.sigma), f(r.chebyshev)];
            if any_chernoff {
                v.push(opt(r.chernoff));
            }
            v
        })
        .collect();
    run.table("aep.csv", &header, &table)?;
    for n in &run.notes {
        println!("note: {n}");
    }
    Ok(())
}

// ---------------------------------------------------------------- imha

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ImhaSettings {
    pub model: Option<PathBuf>,
    pub adaptor: String,
    pub steps: usize,
    pub burn_in: usize,
    pub seed: u64,
    /// Rows in the per-string frequency table.
    pub top: usize,
    /// Also write every step to `imha_chain.csv`.
    pub write_chain: bool,
}

impl Default for ImhaSettings {
    fn default() -> Self {
        ImhaSettings {
            model: None,
            adaptor: "topk:k=2".into(),
            steps: 200_000,
            burn_in: 0,
            seed: 0,
            top: 20,
            write_chain: false,
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct ImhaFlags {
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub adaptor: Option<String>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub burn_in: Option<usize>,
    #[arg(long)]
    pub top: Option<usize>,
    #[arg(long)]
    pub write_chain: bool,
}

pub(crate) fn imha(common: &Common, flags: ImhaFlags) -> Result<RunManifest, CliError> {
    let mut s: ImhaSettings = load_settings(common.config.as_deref(), "imha")?;
    let model_path = flags.model.map(Some);
    let write_chain = flags.write_chain.then_some(true);
    set!(s,
        model_path => model, flags.adaptor => adaptor, flags.steps => steps, flags.burn_in => burn_in,
        flags.top => top, write_chain => write_chain, common.seed => seed,
    );
    let mut run = Run::start("imha", &common.out_dir)?;
    let lm = autoregressive(model_or_default(&mut run, s.model.as_deref())?)?;
    let transform: TransformFunction = s.adaptor.parse()?;
    let ad = AdaptedModel::new(&lm, transform)?;
    let log_z = ad.log_normalizer()?;
    let cfg = ImhaConfig { steps: s.steps, seed: s.seed, burn_in: s.burn_in };
    let chain = imha_run(&ad, &cfg)?;
    let v = convergence_diagnostic(&chain)?;

    let al = lm.alphabet();
    let mut counts: BTreeMap<&[usize], usize> = BTreeMap::new();
    for y in &chain.samples {
        *counts.entry(y.as_slice()).or_default() += 1;
    }
    let mut ranked: Vec<(&[usize], usize)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    let n = chain.samples.len() as f64;
    let strings: Vec<Vec<String>> = ranked
        .iter()
        .take(s.top)
        .map(|&(y, c)| {
            vec![
                al.render(y),
                c.to_string(),
                f(c as f64 / n),
                f((ad.global_unnorm_logweight(y) - log_z).exp()),
                f(ad.local_logprob(y).exp()),
            ]
        })
        .collect();
    run.table("imha_strings.csv", &["string", "count", "frequency", "global_prob", "local_prob"], &strings)?;
    let summary = vec![
        vec!["adaptor".to_string(), transform.to_string()],
        vec!["retained".to_string(), chain.samples.len().to_string()],
        vec!["acceptance_rate".to_string(), f(chain.acceptance_rate)],
        vec!["cramers_v".to_string(), f(v)],
        vec!["log_normalizer".to_string(), f(log_z)],
    ];
    run.table("imha_summary.csv", &["metric", "value"], &summary)?;
    if s.write_chain {
        let path = common.out_dir.join("imha_chain.csv");
        let mut file = std::io::BufWriter::new(std::fs::File::create(&path)?);
        write_chain_csv(&mut file, &chain, |y| al.render(y))?;
        drop(file);
        run.output(&path, "imha_chain.csv")?;
    }
    println!("acceptance rate {}, Cramér's V {}", f(chain.acceptance_rate), f(v));
    run.finish(s.seed, &s)
}

// ---------------------------------------------------------------- inspect

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InspectSettings {
    pub model: Option<PathBuf>,
    pub adaptor: String,
    pub string: Option<String>,
    /// Report scale-then-truncate and truncate-then-scale side by side.
    pub both_orders: bool,
    pub seed: u64,
}

impl Default for InspectSettings {
    fn default() -> Self {
        InspectSettings { model: None, adaptor: "topk:k=2".into(), string: None, both_orders: false, seed: 0 }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct InspectFlags {
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub adaptor: Option<String>,
    /// The string to trace, in the model's alphabet.
    #[arg(long)]
    pub string: Option<String>,
    #[arg(long)]
    pub both_orders: bool,
}

pub(crate) fn inspect(common: &Common, flags: InspectFlags) -> Result<RunManifest, CliError> {
    let mut s: InspectSettings = load_settings(common.config.as_deref(), "inspect")?;
    let string = flags.string.map(Some);
    let both = flags.both_orders.then_some(true);
    let model_path = flags.model.map(Some);
    set!(s,
        model_path => model, flags.adaptor => adaptor, string => string, both => both_orders, common.seed => seed,
    );
    let text = s.string.clone().ok_or_else(|| CliError::Usage("inspect needs --string".into()))?;
    let mut run = Run::start("inspect", &common.out_dir)?;
    let lm = autoregressive(model_or_default(&mut run, s.model.as_deref())?)?;
    let y = lm.alphabet().parse(&text)?;
    let base: TransformFunction = s.adaptor.parse()?;
    let orders = if s.both_orders {
        vec![
            base.with_composition(Composition::ScaleThenTruncate),
            base.with_composition(Composition::TruncateThenScale),
        ]
    } else {
        vec![base]
    };

    let mut rows = Vec::new();
    for t in orders {
        let ad = AdaptedModel::new(&lm, t)?;
        let trace = trace(&ad, &y);
        let order = match t.composition {
            Composition::ScaleThenTruncate => "scale-first",
            Composition::TruncateThenScale => "truncate-first",
        };
        println!("{t}  string \"{}\"", lm.alphabet().render(&y));
        for step in &trace {
            println!(
                "  {:>2} ctx {:<6} sym {:<4} p [{}]  kept [{}]  weights [{}]  local {}  cum local {}  cum global {}",
                step[0], step[1], step[2], step[3], step[4], step[5], step[6], step[7], step[8]
            );
        }
        let (local, unnorm) = products(&ad, &y);
        println!("  local prob {}  unnormalized global weight {}", f(local), f(unnorm));
        rows.extend(trace.into_iter().map(|mut r| {
            r.insert(0, order.to_string());
            r
        }));
    }
    run.table(
        "inspect.csv",
        &[
            "order",
            "step",
            "context",
            "symbol",
            "distribution",
            "truncation_set",
            "weights",
            "local_prob",
            "cum_local_logprob",
            "cum_global_logweight",
        ],
        &rows,
    )?;
    run.finish(s.seed, &s)
}

/// Local probability and unnormalized global weight as plain products.
fn products(ad: &AdaptedModel, y: &[usize]) -> (f64, f64) {
    let lm = ad.base();
    let mut state = Some(lm.start());
    let (mut local, mut global) = (1.0, 1.0);
    for &sym in y.iter().chain(std::iter::once(&lm.alphabet().eos())) {
        let Some(s) = state else { return (0.0, 0.0) };
        local *= ad.local().conditional(s)[sym];
        global *= ad.global_weights().weights(s)[sym];
        state = lm.next_state(s, sym);
    }
    (local, global)
}

/// One row per step, EOS included.
fn trace(ad: &AdaptedModel, y: &[usize]) -> Vec<Vec<String>> {
    let lm = ad.base();
    let al = lm.alphabet();
    let t = ad.transform();
    let named = |v: &[f64]| {
        v.iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(|(i, &p)| format!("{}={}", al.name(i), f(p)))
            .collect::<Vec<_>>()
            .join(" ")
    };
    let mut state = Some(lm.start());
    let (mut cum_local, mut cum_global) = (0.0, 0.0);
    let mut rows = Vec::new();
    for (i, &sym) in y.iter().chain(std::iter::once(&al.eos())).enumerate() {
        let Some(s) = state else { break };
        let dist = lm.conditional(s);
        let kept: Vec<&str> = t.truncation_set(dist).iter().map(|&k| al.name(k)).collect();
        let w = ad.global_weights().weights(s);
        let local = ad.local().conditional(s)[sym];
        cum_local += local.ln();
        cum_global += w[sym].ln();
        rows.push(vec![
            i.to_string(),
            lm.context_name(s),
            al.name(sym).to_string(),
            named(dist),
            kept.join(" "),
            named(w),
            f(local),
            f(cum_local),
            f(cum_global),
        ]);
        state = lm.next_state(s, sym);
    }
    rows
}
