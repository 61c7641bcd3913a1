//! Instruction-response examples from selected pairs, and the culture-joint
//! and culture-specific training files built from them.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::culture::{CultureCode, CultureRegistry};
use crate::gateway::fnv1a64;
use crate::prompt::{render, PromptError, PromptStrategy, StrategyKind};
use crate::select::{SelectedPair, Selector};
use crate::survey::{topic_name, TOPIC_COUNT};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SftError {
    Prompt(PromptError),
    BadStrategy(StrategyKind),
    Empty,
    Serialize(String),
}

impl fmt::Display for SftError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Prompt(e) => write!(f, "{e}"),
            Self::BadStrategy(k) => write!(f, "activation examples need a culture-aware strategy, got {k}"),
            Self::Empty => f.write_str("no activation examples to compose"),
            Self::Serialize(m) => write!(f, "serialization failed: {m}"),
        }
    }
}

impl core::error::Error for SftError {}

impl From<PromptError> for SftError {
    fn from(e: PromptError) -> Self {
        Self::Prompt(e)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActivationExample {
    pub system_prompt: String,
    pub instruction: String,
    pub response: String,
    pub culture: CultureCode,
    pub question_id: String,
    pub topic_id: u8,
    pub selector: Selector,
}

impl ActivationExample {
    pub fn to_line(&self) -> SftLine {
        SftLine {
            system: self.system_prompt.clone(),
            instruction: self.instruction.clone(),
            output: self.response.clone(),
        }
    }
}

/// Renders the pair with the culture-aware template it was harvested
/// with; the response is the aware answer as a decimal string.
pub fn to_activation_example(
    pair: &SelectedPair,
    strategy: StrategyKind,
    registry: &CultureRegistry,
) -> Result<ActivationExample, SftError> {
    if !matches!(strategy, StrategyKind::P1 | StrategyKind::P2) {
        return Err(SftError::BadStrategy(strategy));
    }
    let profile = registry.get(pair.culture).ok_or(PromptError::UnknownCulture(pair.culture))?;
    let prompt = render(&PromptStrategy::new(strategy, Some(profile), registry, None)?, &pair.question)?;
    Ok(ActivationExample {
        system_prompt: prompt.system_prompt,
        instruction: prompt.user_prompt,
        response: pair.answer.to_string(),
        culture: pair.culture,
        question_id: pair.question.id.clone(),
        topic_id: pair.question.topic_id,
        selector: pair.selector,
    })
}

/// One training line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SftLine {
    pub system: String,
    pub instruction: String,
    pub output: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Joint,
    Specific,
}

impl Variant {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Joint => "joint",
            Self::Specific => "specific",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "joint" => Some(Self::Joint),
            "specific" => Some(Self::Specific),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub variant: Variant,
    pub cultures: Vec<CultureCode>,
    pub total: usize,
    pub per_culture: BTreeMap<CultureCode, usize>,
    pub per_topic: BTreeMap<u8, usize>,
    /// Relative path → line count.
    pub files: BTreeMap<String, usize>,
    pub source_harvest_id: String,
    pub rng_seed: u64,
}

/// File contents keyed by path relative to the dataset directory, plus the
/// manifest describing them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComposedDataset {
    pub files: BTreeMap<String, String>,
    pub manifest: DatasetManifest,
}

pub const JOINT_FILE: &str = "joint.jsonl";

pub fn specific_file(culture: CultureCode) -> String {
    format!("specific/{culture}.jsonl")
}

fn canonical_order(examples: &mut [&ActivationExample]) {
    examples.sort_by(|a, b| {
        (a.culture, &a.question_id, a.selector, &a.response, &a.system_prompt, &a.instruction).cmp(&(
            b.culture,
            &b.question_id,
            b.selector,
            &b.response,
            &b.system_prompt,
            &b.instruction,
        ))
    });
}

fn jsonl(examples: &[&ActivationExample]) -> Result<String, SftError> {
    let mut out = String::new();
    for e in examples {
        out.push_str(&serde_json::to_string(&e.to_line()).map_err(|e| SftError::Serialize(e.to_string()))?);
        out.push('\n');
    }
    Ok(out)
}

/// Builds the training files for `variant`. Input order does not matter:
/// examples are put in canonical order and then shuffled with
/// `shuffle_seed` (each culture file with its own derived stream).
pub fn compose(
    examples: &[ActivationExample],
    variant: Variant,
    shuffle_seed: u64,
    source_harvest_id: &str,
) -> Result<ComposedDataset, SftError> {
    if examples.is_empty() {
        return Err(SftError::Empty);
    }
    let mut sorted: Vec<&ActivationExample> = examples.iter().collect();
    canonical_order(&mut sorted);
    let mut by_culture: BTreeMap<CultureCode, Vec<&ActivationExample>> = BTreeMap::new();
    for e in &sorted {
        by_culture.entry(e.culture).or_default().push(*e);
    }
    let mut files = BTreeMap::new();
    let mut line_counts = BTreeMap::new();
    match variant {
        Variant::Joint => {
            sorted.shuffle(&mut ChaCha8Rng::seed_from_u64(shuffle_seed));
            files.insert(JOINT_FILE.to_string(), jsonl(&sorted)?);
            line_counts.insert(JOINT_FILE.to_string(), sorted.len());
        }
        Variant::Specific => {
            for (culture, list) in &mut by_culture {
                let salt = fnv1a64(culture.as_str().as_bytes());
                list.shuffle(&mut ChaCha8Rng::seed_from_u64(crate::mix_seed(shuffle_seed, salt)));
                files.insert(specific_file(*culture), jsonl(list)?);
                line_counts.insert(specific_file(*culture), list.len());
            }
        }
    }
    let stats = distribution_stats(examples);
    let manifest = DatasetManifest {
        variant,
        cultures: by_culture.keys().copied().collect(),
        total: examples.len(),
        per_culture: by_culture.iter().map(|(c, v)| (*c, v.len())).collect(),
        per_topic: stats.per_topic.into_iter().filter(|&(_, n)| n > 0).collect(),
        files: line_counts,
        source_harvest_id: source_harvest_id.to_string(),
        rng_seed: shuffle_seed,
    };
    Ok(ComposedDataset { files, manifest })
}

/// Example counts per topic, per culture and per (topic, culture).
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DistributionStats {
    /// Every topic, including empty ones.
    pub per_topic: BTreeMap<u8, usize>,
    pub per_culture: BTreeMap<CultureCode, usize>,
    pub cells: BTreeMap<(u8, CultureCode), usize>,
}

pub fn distribution_stats(examples: &[ActivationExample]) -> DistributionStats {
    let mut stats = DistributionStats { per_topic: (1..=TOPIC_COUNT).map(|t| (t, 0)).collect(), ..Default::default() };
    for e in examples {
        *stats.per_topic.entry(e.topic_id).or_insert(0) += 1;
        *stats.per_culture.entry(e.culture).or_insert(0) += 1;
        *stats.cells.entry((e.topic_id, e.culture)).or_insert(0) += 1;
    }
    stats
}

impl DistributionStats {
    pub fn total(&self) -> usize {
        self.per_topic.values().sum()
    }

    /// Plain-text table: one row per topic, one column per culture.
    pub fn to_table(&self) -> String {
        let cultures: Vec<CultureCode> = self.per_culture.keys().copied().collect();
        let width = self.per_topic.keys().map(|&t| topic_name(t).unwrap_or("?").len()).max().unwrap_or(0).max(5);
        let mut out = String::new();
        let _ = write!(out, "{:<width$}", "topic");
        for c in &cultures {
            let _ = write!(out, " {:>5}", c.as_str());
        }
        let _ = writeln!(out, " {:>6}", "total");
        for (&t, &n) in &self.per_topic {
            let _ = write!(out, "{:<width$}", topic_name(t).unwrap_or("?"));
            for c in &cultures {
                let _ = write!(out, " {:>5}", self.cells.get(&(t, *c)).copied().unwrap_or(0));
            }
            let _ = writeln!(out, " {n:>6}");
        }
        let _ = write!(out, "{:<width$}", "total");
        for c in &cultures {
            let _ = write!(out, " {:>5}", self.per_culture[c]);
        }
        let _ = writeln!(out, " {:>6}", self.total());
        out
    }

    /// Long-format CSV `topic_id,topic,culture,count`, one row per
    /// non-empty cell.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("topic_id,topic,culture,count\n");
        for (&(t, c), &n) in &self.cells {
            let _ = writeln!(out, "{t},\"{}\",{c},{n}", topic_name(t).unwrap_or("?"));
        }
        out
    }
}
