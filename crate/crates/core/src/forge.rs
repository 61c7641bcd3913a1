//! Iterative self-instruct question generation per topic and quality
//! filtering of the generated candidates.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use rand::seq::{index, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::gateway::{ChatBackend, ChatRequest, GatewayError, TaskTag};
use crate::prompt::{render_generation, PromptError};
use crate::survey::{topic_name, Origin, QuestionOption, SurveyError, SurveyQuestion};

pub const ICL_TOTAL: usize = 5;
pub const MAX_QUESTION_CHARS: usize = 600;
pub const MAX_OPTIONS: usize = 12;
/// Generation calls per topic are capped at this multiple of the target.
pub const ITERATION_CAP_FACTOR: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub enum ForgeError {
    BadConfig(&'static str),
    UnknownTopic(u8),
    NotEnoughSeeds { topic_id: u8, seeds: usize },
    NotEnoughExamples { topic_id: u8, available: usize },
    NoJson,
    MissingKey(&'static str),
    EmptyOptions,
    InvalidQuestion(SurveyError),
    Prompt(PromptError),
    Backend(GatewayError),
}

impl fmt::Display for ForgeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::BadConfig(m) => write!(f, "invalid generation config: {m}"),
            Self::UnknownTopic(t) => write!(f, "unknown topic {t}"),
            Self::NotEnoughSeeds { topic_id, seeds } => {
                write!(f, "topic {topic_id} has {seeds} seed questions, at least 3 needed")
            }
            Self::NotEnoughExamples { topic_id, available } => {
                write!(f, "topic {topic_id} has only {available} distinct questions, 5 needed")
            }
            Self::NoJson => f.write_str("no JSON object with \"Question\" and \"Options\" found"),
            Self::MissingKey(k) => write!(f, "JSON object lacks key {k:?}"),
            Self::EmptyOptions => f.write_str("question has no options"),
            Self::InvalidQuestion(e) => write!(f, "{e}"),
            Self::Prompt(e) => write!(f, "{e}"),
            Self::Backend(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for ForgeError {}

impl From<GatewayError> for ForgeError {
    fn from(e: GatewayError) -> Self {
        Self::Backend(e)
    }
}

impl From<PromptError> for ForgeError {
    fn from(e: PromptError) -> Self {
        Self::Prompt(e)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationConfig {
    pub per_topic_target: usize,
    pub icl_seed_count: usize,
    pub icl_generated_count: usize,
    pub rng_seed: u64,
    pub max_parse_retries: u32,
    pub temperature: f64,
    pub max_tokens: u32,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        Self {
            per_topic_target: 10,
            icl_seed_count: 3,
            icl_generated_count: 2,
            rng_seed: 0,
            max_parse_retries: 1,
            temperature: 0.7,
            max_tokens: 512,
        }
    }
}

impl GenerationConfig {
    pub fn validate(&self) -> Result<(), ForgeError> {
        if self.icl_seed_count + self.icl_generated_count != ICL_TOTAL {
            return Err(ForgeError::BadConfig("icl_seed_count + icl_generated_count must be 5"));
        }
        if self.temperature.is_nan() || self.temperature < 0.0 {
            return Err(ForgeError::BadConfig("temperature must be >= 0"));
        }
        Ok(())
    }

    pub fn iteration_cap(&self) -> usize {
        ITERATION_CAP_FACTOR * self.per_topic_target
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectReason {
    ParseFailure,
    Duplicate,
    LengthOutlier,
    OptionMismatch,
    OptionFormatInconsistent,
}

impl RejectReason {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::ParseFailure => "parse_failure",
            Self::Duplicate => "duplicate",
            Self::LengthOutlier => "length_outlier",
            Self::OptionMismatch => "option_mismatch",
            Self::OptionFormatInconsistent => "option_format_inconsistent",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RejectionRecord {
    pub topic_id: u8,
    pub raw_text: String,
    pub reason: RejectReason,
}

/// Case-folded, whitespace-collapsed question text used for duplicate
/// detection.
pub fn normalize_text(text: &str) -> String {
    let lower = text.to_lowercase();
    let words: Vec<&str> = lower.split_whitespace().collect();
    words.join(" ")
}

#[derive(Debug, Clone, Default)]
struct TopicPool {
    seeds: Vec<SurveyQuestion>,
    generated: Vec<SurveyQuestion>,
    seen: BTreeSet<String>,
}

/// Seed and generated questions per topic. Seeds are fixed; generated
/// questions grow as candidates are accepted.
#[derive(Debug, Clone, Default)]
pub struct QuestionPool {
    topics: BTreeMap<u8, TopicPool>,
}

impl QuestionPool {
    pub fn from_seeds(seeds: &[SurveyQuestion]) -> Self {
        let mut pool = Self::default();
        for q in seeds {
            let t = pool.topics.entry(q.topic_id).or_default();
            t.seen.insert(normalize_text(&q.text));
            t.seeds.push(q.clone());
        }
        pool
    }

    pub fn seeds(&self, topic_id: u8) -> &[SurveyQuestion] {
        self.topics.get(&topic_id).map_or(&[], |t| &t.seeds)
    }

    pub fn generated(&self, topic_id: u8) -> &[SurveyQuestion] {
        self.topics.get(&topic_id).map_or(&[], |t| &t.generated)
    }

    pub fn contains_text(&self, topic_id: u8, text: &str) -> bool {
        self.topics.get(&topic_id).is_some_and(|t| t.seen.contains(&normalize_text(text)))
    }

    pub fn push_generated(&mut self, q: SurveyQuestion) {
        let t = self.topics.entry(q.topic_id).or_default();
        t.seen.insert(normalize_text(&q.text));
        t.generated.push(q);
    }

    /// Splits off a single topic so topics can be generated independently.
    pub fn take_topic(&mut self, topic_id: u8) -> QuestionPool {
        let mut out = QuestionPool::default();
        if let Some(t) = self.topics.remove(&topic_id) {
            out.topics.insert(topic_id, t);
        }
        out
    }

    pub fn merge(&mut self, other: QuestionPool) {
        self.topics.extend(other.topics);
    }
}

/// Five in-context examples: three seeds and two generated questions, with
/// seeds filling any shortfall of generated ones. Order is shuffled.
pub fn sample_icl_examples<R: rand::Rng + ?Sized>(
    pool: &QuestionPool,
    topic_id: u8,
    config: &GenerationConfig,
    rng: &mut R,
) -> Result<Vec<SurveyQuestion>, ForgeError> {
    let seeds = pool.seeds(topic_id);
    let generated = pool.generated(topic_id);
    if seeds.len() < config.icl_seed_count {
        return Err(ForgeError::NotEnoughSeeds { topic_id, seeds: seeds.len() });
    }
    let from_generated = config.icl_generated_count.min(generated.len());
    let from_seeds = ICL_TOTAL - from_generated;
    if seeds.len() < from_seeds {
        return Err(ForgeError::NotEnoughExamples { topic_id, available: seeds.len() + generated.len() });
    }
    let mut out: Vec<SurveyQuestion> =
        index::sample(rng, seeds.len(), from_seeds).into_iter().map(|i| seeds[i].clone()).collect();
    out.extend(index::sample(rng, generated.len(), from_generated).into_iter().map(|i| generated[i].clone()));
    out.shuffle(rng);
    Ok(out)
}

/// A parsed candidate before it receives an id and topic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuestionDraft {
    pub text: String,
    pub options: Vec<QuestionOption>,
}

impl QuestionDraft {
    pub fn into_question(self, id: impl Into<String>, topic_id: u8) -> Result<SurveyQuestion, SurveyError> {
        SurveyQuestion::new(id, topic_id, self.text, self.options, Origin::Generated)
    }
}

/// Splits `"1.Yes"`, `"2) No"`, `"1 - Not at all"` into code and label.
/// Bare numerals give an empty label; text without a leading number gives
/// no code.
fn split_option(raw: &str) -> (Option<u32>, String) {
    let s = raw.trim();
    let digits = s.bytes().take_while(u8::is_ascii_digit).count();
    if digits == 0 {
        return (None, s.to_string());
    }
    let code = s[..digits].parse::<u32>().ok();
    let label =
        s[digits..].trim_start_matches(|c: char| c == '.' || c == ')' || c == '-' || c == ':' || c.is_whitespace());
    (code, label.trim().to_string())
}

fn draft_from_object(obj: &serde_json::Map<String, Value>) -> Result<QuestionDraft, ForgeError> {
    let text = ["Question", "Question:"]
        .iter()
        .find_map(|k| obj.get(*k))
        .and_then(Value::as_str)
        .ok_or(ForgeError::MissingKey("Question"))?;
    let options = obj.get("Options").and_then(Value::as_array).ok_or(ForgeError::MissingKey("Options"))?;
    if options.is_empty() {
        return Err(ForgeError::EmptyOptions);
    }
    let mut parsed = Vec::with_capacity(options.len());
    for o in options {
        parsed.push(match o {
            Value::String(s) => split_option(s),
            Value::Number(n) => (n.as_u64().and_then(|c| u32::try_from(c).ok()), String::new()),
            other => (None, other.to_string()),
        });
    }
    // keep explicit codes only when every option has one and they increase
    let explicit = parsed.iter().all(|(c, _)| c.is_some_and(|c| c > 0)) && parsed.windows(2).all(|w| w[0].0 < w[1].0);
    let options = parsed
        .into_iter()
        .enumerate()
        .map(|(i, (code, label))| {
            let code = if explicit { code.unwrap_or(0) } else { i as u32 + 1 };
            QuestionOption::new(code, label)
        })
        .collect();
    Ok(QuestionDraft { text: text.trim().to_string(), options })
}

/// Extracts the first JSON object carrying "Question" and "Options" keys
/// from `text`, ignoring surrounding prose.
pub fn parse_question_json(text: &str) -> Result<QuestionDraft, ForgeError> {
    let mut first_err = None;
    for (start, _) in text.match_indices('{') {
        let mut stream = serde_json::Deserializer::from_str(&text[start..]).into_iter::<Value>();
        let Some(Ok(Value::Object(obj))) = stream.next() else { continue };
        match draft_from_object(&obj) {
            Ok(d) => return Ok(d),
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    Err(first_err.unwrap_or(ForgeError::NoJson))
}

fn mentions_number(text: &str, n: u32) -> bool {
    let needle = n.to_string();
    let bytes = text.as_bytes();
    text.match_indices(needle.as_str()).any(|(i, m)| {
        let before = i.checked_sub(1).map(|j| bytes[j]);
        let after = bytes.get(i + m.len()).copied();
        !before.is_some_and(|b| b.is_ascii_digit()) && !after.is_some_and(|b| b.is_ascii_digit())
    })
}

/// Whether the question text explains what its numeric options mean.
fn describes_scale(question: &SurveyQuestion) -> bool {
    let lower = question.text.to_lowercase();
    if lower.contains("scale") || lower.contains("mean") {
        return true;
    }
    let lo = question.options.first().map_or(0, |o| o.code);
    let hi = question.options.last().map_or(0, |o| o.code);
    mentions_number(&lower, lo) && mentions_number(&lower, hi)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterVerdict {
    Accept,
    Reject(RejectReason),
}

/// Quality gates, in order: duplicate text in the topic pool, length
/// outlier, options that do not match the question, inconsistent option
/// formats.
///
/// The mismatch gate only fires on bare numeric options whose question
/// gives no scale description (no "scale"/"means" wording and no mention
/// of both endpoints). The format gate fires when labeled options and bare
/// numerals are mixed.
pub fn filter_question(candidate: &SurveyQuestion, pool: &QuestionPool) -> FilterVerdict {
    use RejectReason::*;
    if pool.contains_text(candidate.topic_id, &candidate.text) {
        return FilterVerdict::Reject(Duplicate);
    }
    if candidate.text.chars().count() > MAX_QUESTION_CHARS || candidate.options.len() > MAX_OPTIONS {
        return FilterVerdict::Reject(LengthOutlier);
    }
    let bare = candidate.options.iter().filter(|o| o.is_bare()).count();
    if bare == candidate.options.len() && candidate.options.len() > 1 && !describes_scale(candidate) {
        return FilterVerdict::Reject(OptionMismatch);
    }
    if bare > 0 && bare < candidate.options.len() {
        return FilterVerdict::Reject(OptionFormatInconsistent);
    }
    FilterVerdict::Accept
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TopicOutcome {
    pub topic_id: u8,
    pub accepted: Vec<SurveyQuestion>,
    pub rejected: Vec<RejectionRecord>,
    pub calls: usize,
    /// The call cap was hit before reaching the target.
    pub capped: bool,
}

/// Id of the `n`-th (1-based) accepted question of a topic.
pub fn generated_id(topic_id: u8, n: usize) -> String {
    format!("G{topic_id:02}-{n:05}")
}

/// Runs the generate → parse → filter loop for one topic until the target
/// is reached or the call cap is hit. Accepted questions join the pool
/// before the next examples are sampled.
pub fn generate_topic_questions(
    pool: &mut QuestionPool,
    topic_id: u8,
    config: &GenerationConfig,
    backend: &dyn ChatBackend,
) -> Result<TopicOutcome, ForgeError> {
    config.validate()?;
    let name = topic_name(topic_id).ok_or(ForgeError::UnknownTopic(topic_id))?;
    let mut out = TopicOutcome { topic_id, ..TopicOutcome::default() };
    if config.per_topic_target == 0 {
        return Ok(out);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(crate::mix_seed(config.rng_seed, u64::from(topic_id)));
    let cap = config.iteration_cap();
    while out.accepted.len() < config.per_topic_target && out.calls < cap {
        let examples = sample_icl_examples(pool, topic_id, config, &mut rng)?;
        let prompt = render_generation(name, &examples)?;
        let request = ChatRequest {
            system_prompt: prompt.system_prompt,
            user_prompt: prompt.user_prompt,
            temperature: config.temperature,
            max_tokens: config.max_tokens,
            seed: None,
            task: Some(TaskTag::Generate { topic_id }),
        };
        let mut retries = 0;
        let (raw, draft) = loop {
            let response = backend.complete(&request)?;
            out.calls += 1;
            match parse_question_json(&response.text) {
                Ok(d) => break (response.text, Some(d)),
                Err(_) if retries < config.max_parse_retries && out.calls < cap => retries += 1,
                Err(_) => break (response.text, None),
            }
        };
        let next_id = generated_id(topic_id, out.accepted.len() + 1);
        let candidate = draft.and_then(|d| d.into_question(next_id, topic_id).ok());
        let Some(candidate) = candidate else {
            out.rejected.push(RejectionRecord { topic_id, raw_text: raw, reason: RejectReason::ParseFailure });
            continue;
        };
        match filter_question(&candidate, pool) {
            FilterVerdict::Accept => {
                pool.push_generated(candidate.clone());
                out.accepted.push(candidate);
            }
            FilterVerdict::Reject(reason) => out.rejected.push(RejectionRecord { topic_id, raw_text: raw, reason }),
        }
    }
    out.capped = out.accepted.len() < config.per_topic_target;
    Ok(out)
}
