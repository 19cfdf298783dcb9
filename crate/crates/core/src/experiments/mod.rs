//! End-to-end pipelines: the toy world with its banded corpora, and the
//! adaptor sweep over an aligned autoregressive world.

pub mod bands;
pub mod toy;

pub use bands::{
    causal_bootstrap_corpora, causal_bootstrap_with, plain_corpora, BandSpec, BandedCorpora, BandedCorpus,
};
pub use toy::{
    banded_report, build_toy_world, correlation_report, simpsons_check, CorpusStats, CorrelationReport, SimpsonsCheck,
    ToyConfig, ToyWorld, Verdict,
};
pub mod sweep;

pub use sweep::{
    adaptor_sweep, default_world, trend_report, AlignedWorld, SweepConfig, SweepResult, SweepRow, TrendReport,
};
