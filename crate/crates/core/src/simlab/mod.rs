//! Monte-Carlo estimation, worst-case corpora and experiment drivers.
//!
//! All randomness comes from [`crate::rng::stream`]: replicate `r` of a run
//! with master seed `s` always uses stream `(s, r)`, so rows are identical
//! for a fixed configuration whatever the thread count.

mod config;
mod corpus;
mod eval;
mod experiments;

pub use config::{ExperimentConfig, ExperimentName};
pub use corpus::{corpus, CorpusProfile, ProfileKind, DEFAULT_CORPUS_SEED, LOG_PRICE_SIZES, RSOL_SIZES};
pub use eval::{
    estimate, monte_carlo_on_profile, profile_average, replicate, EvalMode, MechanismEval, MIN_REPLICATES,
};
pub use experiments::{
    experiment_lb43, experiment_rsol_ratio, experiment_surplus_gap, experiment_thmub, ratio_summary,
    run_experiment, write_rows, Lb43Row, RsolRow, SurplusGapRow, ThmubRow, DEFAULT_K_LIST, LB43_COND_BIN, VERSION,
};
