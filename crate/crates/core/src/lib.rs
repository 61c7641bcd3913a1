//! Pure algorithms for synthesising culture-related survey data, harvesting
//! culture-aware/unaware answers, selecting activation pairs and scoring
//! cultural alignment against survey references.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the HTTP
//! backend, concurrency and the command line live in the `cultalign` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod culture;
pub mod forge;
pub mod gateway;
pub mod harvest;
pub mod metrics;
pub mod plan;
pub mod prompt;
pub mod select;
pub mod sft;
pub mod survey;

pub use culture::{Continent, CultureCode, CultureProfile, CultureRegistry};
pub use gateway::{ChatBackend, ChatRequest, ChatResponse, GatewayError, MockBackend, TaskTag};
pub use prompt::{PromptStrategy, RenderedPrompt, StrategyKind};
pub use survey::{Origin, QuestionOption, ResponseVector, SurveyCorpus, SurveyQuestion};

/// Mixes two 64-bit values into a seed. Used to derive independent RNG
/// streams (per topic, per culture) from one configured seed.
pub(crate) fn mix_seed(seed: u64, salt: u64) -> u64 {
    // splitmix64 finaliser
    let mut z = seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
