use rand::Rng;
use serde::Serialize;

use crate::dist::ValuationProfile;
use crate::rng::stream;

/// Agent counts of the worst-case corpus where exact RSOL is affordable.
pub const RSOL_SIZES: [usize; 9] = [1, 2, 3, 4, 5, 6, 8, 12, 16];
/// Agent counts of the corpus used for the log-price guarantee.
pub const LOG_PRICE_SIZES: [usize; 13] = [1, 2, 3, 4, 5, 6, 8, 12, 16, 32, 64, 128, 256];
pub const DEFAULT_CORPUS_SEED: u64 = 0x5eed_c0de;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProfileKind {
    /// `v_i = 2^-i`.
    Geometric,
    /// All values 1.
    Equal,
    /// One agent at 1, the rest at 0.
    Spike,
    /// i.i.d. uniform on [0, 1].
    Uniform,
    /// A third of the agents at 1, the rest at 1/2.
    TwoLevel,
}

impl ProfileKind {
    pub const ALL: [ProfileKind; 5] = [
        ProfileKind::Geometric,
        ProfileKind::Equal,
        ProfileKind::Spike,
        ProfileKind::Uniform,
        ProfileKind::TwoLevel,
    ];

    pub fn label(self) -> &'static str {
        match self {
            ProfileKind::Geometric => "geometric",
            ProfileKind::Equal => "equal",
            ProfileKind::Spike => "spike",
            ProfileKind::Uniform => "uniform",
            ProfileKind::TwoLevel => "two-level",
        }
    }

    pub fn build(self, n: usize, seed: u64) -> ValuationProfile {
        let values: Vec<f64> = match self {
            ProfileKind::Geometric => (1..=n).map(|i| 0.5f64.powi(i as i32)).collect(),
            ProfileKind::Equal => vec![1.0; n],
            ProfileKind::Spike => (0..n).map(|i| if i == 0 { 1.0 } else { 0.0 }).collect(),
            ProfileKind::Uniform => {
                let mut rng = stream(seed, n as u64);
                (0..n).map(|_| rng.random::<f64>()).collect()
            }
            ProfileKind::TwoLevel => {
                let high = n.div_ceil(3);
                (0..n).map(|i| if i < high { 1.0 } else { 0.5 }).collect()
            }
        };
        ValuationProfile::new(values).expect("corpus values are finite and nonnegative")
    }
}

#[derive(Debug, Clone)]
pub struct CorpusProfile {
    pub kind: ProfileKind,
    pub profile: ValuationProfile,
    /// Seed the profile was built from.
    pub seed: u64,
}

/// Every profile kind at every size, ordered by size then kind.
pub fn corpus(sizes: &[usize], seed: u64) -> Vec<CorpusProfile> {
    sizes
        .iter()
        .flat_map(|&n| {
            ProfileKind::ALL.into_iter().map(move |kind| CorpusProfile {
                kind,
                profile: kind.build(n, seed),
                seed,
            })
        })
        .collect()
}
