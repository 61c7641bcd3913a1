//! Prompt rendering for every answering strategy and for question
//! generation, plus chrF++ retrieval of in-context examples.
//!
//! Template bodies are stored as text assets under `templates/` and filled
//! in a single pass, so substituted question text is never re-expanded.

mod chrf;
mod retrieve;

pub use chrf::{chrf_pp, chrf_with, ChrfParams};
pub use retrieve::{icl_candidates, retrieve_icl};

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::culture::{CultureCode, CultureProfile, CultureRegistry};
use crate::survey::{QuestionOption, SurveyQuestion};

/// Version tag of the bundled template assets.
pub const TEMPLATE_VERSION: &str = "v1";

const GENERATE_SYSTEM: &str = include_str!("../../templates/generate.system.txt");
const GENERATE_USER: &str = include_str!("../../templates/generate.user.txt");
const UNAWARE_SYSTEM: &str = include_str!("../../templates/unaware.system.txt");
const AWARE_SYSTEM: &str = include_str!("../../templates/aware.system.txt");
const CCT_SYSTEM: &str = include_str!("../../templates/cct.system.txt");
const ANSWER_USER: &str = include_str!("../../templates/answer.user.txt");
const ICL_USER: &str = include_str!("../../templates/icl.user.txt");

pub const ICL_EXAMPLES: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PromptError {
    MissingCulture(StrategyKind),
    MissingIcl(StrategyKind),
    WrongIclCount { expected: usize, got: usize },
    UnknownCulture(CultureCode),
    UnresolvedPlaceholder(String),
    WrongExampleCount(usize),
    InsufficientCandidates { needed: usize, available: usize },
    TopicMismatch(String),
    SelfCandidate(String),
}

impl fmt::Display for PromptError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::MissingCulture(k) => write!(f, "strategy {k} requires a culture"),
            Self::MissingIcl(k) => write!(f, "strategy {k} requires in-context examples"),
            Self::WrongIclCount { expected, got } => {
                write!(f, "expected {expected} in-context examples, got {got}")
            }
            Self::UnknownCulture(c) => write!(f, "culture {c} is not in the registry"),
            Self::UnresolvedPlaceholder(p) => write!(f, "template placeholder {{{p}}} left unsubstituted"),
            Self::WrongExampleCount(n) => write!(f, "question generation needs 5 examples, got {n}"),
            Self::InsufficientCandidates { needed, available } => {
                write!(f, "need {needed} retrieval candidates, only {available} available")
            }
            Self::TopicMismatch(id) => write!(f, "candidate {id} is from a different topic"),
            Self::SelfCandidate(id) => write!(f, "candidate {id} is the test question itself"),
        }
    }
}

impl core::error::Error for PromptError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StrategyKind {
    Unaware,
    P1,
    P2,
    P3,
    P1P3,
    P2P3,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 6] = [Self::Unaware, Self::P1, Self::P2, Self::P3, Self::P1P3, Self::P2P3];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Unaware => "unaware",
            Self::P1 => "p1",
            Self::P2 => "p2",
            Self::P3 => "p3",
            Self::P1P3 => "p1p3",
            Self::P2P3 => "p2p3",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.as_str().eq_ignore_ascii_case(s))
    }

    /// P1, P2 and their combinations name a culture in the system prompt.
    pub fn needs_culture(self) -> bool {
        matches!(self, Self::P1 | Self::P2 | Self::P1P3 | Self::P2P3)
    }

    pub fn needs_icl(self) -> bool {
        matches!(self, Self::P3 | Self::P1P3 | Self::P2P3)
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A question with the answer shown to the model as an in-context example.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnsweredQuestion {
    pub question: SurveyQuestion,
    pub answer: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct CultureSlots {
    article: &'static str,
    demonym: String,
    similar: [String; 3],
    different: [String; 3],
}

/// A validated prompting strategy; kind-specific requirements are checked
/// at construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptStrategy {
    kind: StrategyKind,
    culture: Option<CultureCode>,
    slots: Option<CultureSlots>,
    icl: Vec<AnsweredQuestion>,
}

impl PromptStrategy {
    pub fn unaware() -> Self {
        Self { kind: StrategyKind::Unaware, culture: None, slots: None, icl: Vec::new() }
    }

    /// Builds a strategy. `registry` resolves the related cultures of P2.
    pub fn new(
        kind: StrategyKind,
        culture: Option<&CultureProfile>,
        registry: &CultureRegistry,
        icl: Option<Vec<AnsweredQuestion>>,
    ) -> Result<Self, PromptError> {
        let slots = match (kind.needs_culture(), culture) {
            (true, None) => return Err(PromptError::MissingCulture(kind)),
            (true, Some(p)) => {
                let (sim, diff) = registry.related_demonyms(p.code).ok_or(PromptError::UnknownCulture(p.code))?;
                Some(CultureSlots {
                    article: p.article(),
                    demonym: p.demonym.clone(),
                    similar: sim.map(ToString::to_string),
                    different: diff.map(ToString::to_string),
                })
            }
            (false, _) => None,
        };
        let icl = match (kind.needs_icl(), icl) {
            (true, None) => return Err(PromptError::MissingIcl(kind)),
            (true, Some(v)) if v.len() != ICL_EXAMPLES => {
                return Err(PromptError::WrongIclCount { expected: ICL_EXAMPLES, got: v.len() })
            }
            (true, Some(v)) => v,
            (false, _) => Vec::new(),
        };
        Ok(Self { kind, culture: culture.map(|p| p.code), slots, icl })
    }

    pub fn kind(&self) -> StrategyKind {
        self.kind
    }

    pub fn culture(&self) -> Option<CultureCode> {
        self.culture
    }

    pub fn icl(&self) -> &[AnsweredQuestion] {
        &self.icl
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenderedPrompt {
    /// Empty only for the self-alignment strategy, whose template has no
    /// system turn.
    pub system_prompt: String,
    pub user_prompt: String,
}

impl RenderedPrompt {
    /// `[system]` / `[user]` sectioned text used by golden files and the
    /// `dump-prompt` command.
    pub fn to_sectioned(&self) -> String {
        format!("[system]\n{}\n[user]\n{}\n", self.system_prompt, self.user_prompt)
    }
}

/// Options as shown in prompts: `1.Label, 2.Label` or bare `1, 2, 3`.
pub fn format_options(options: &[QuestionOption]) -> String {
    let parts: Vec<String> = options
        .iter()
        .map(|o| if o.is_bare() { o.code.to_string() } else { format!("{}.{}", o.code, o.label) })
        .collect();
    parts.join(", ")
}

fn asset(s: &'static str) -> &'static str {
    s.trim_end_matches('\n')
}

fn is_placeholder_name(name: &str) -> bool {
    !name.is_empty() && name.chars().all(|c| c.is_ascii_alphanumeric() || c == ' ' || c == '/')
}

/// Single-pass `{Name}` substitution. Any placeholder without a value is an
/// error; braces that do not enclose a placeholder name are copied as-is.
fn fill(template: &str, values: &[(&str, &str)]) -> Result<String, PromptError> {
    let mut out = String::with_capacity(template.len() + 256);
    let mut rest = template;
    while let Some(start) = rest.find('{') {
        out.push_str(&rest[..start]);
        let tail = &rest[start + 1..];
        match tail.find('}') {
            Some(end) if is_placeholder_name(&tail[..end]) => {
                let name = &tail[..end];
                let value = values
                    .iter()
                    .find(|(k, _)| *k == name)
                    .map(|(_, v)| *v)
                    .ok_or_else(|| PromptError::UnresolvedPlaceholder(name.to_string()))?;
                out.push_str(value);
                rest = &tail[end + 1..];
            }
            _ => {
                out.push('{');
                rest = tail;
            }
        }
    }
    out.push_str(rest);
    Ok(out)
}

fn system_prompt(strategy: &PromptStrategy) -> Result<String, PromptError> {
    let slots = strategy.slots.as_ref();
    let need = || slots.ok_or(PromptError::MissingCulture(strategy.kind));
    match strategy.kind {
        StrategyKind::Unaware => fill(asset(UNAWARE_SYSTEM), &[]),
        StrategyKind::P3 => Ok(String::new()),
        StrategyKind::P1 | StrategyKind::P1P3 => {
            let s = need()?;
            fill(asset(AWARE_SYSTEM), &[("a/an", s.article), ("Culture", &s.demonym)])
        }
        StrategyKind::P2 | StrategyKind::P2P3 => {
            let s = need()?;
            fill(
                asset(CCT_SYSTEM),
                &[
                    ("a/an", s.article),
                    ("Culture", &s.demonym),
                    ("Culture1", &s.similar[0]),
                    ("Culture2", &s.similar[1]),
                    ("Culture3", &s.similar[2]),
                    ("Culture4", &s.different[0]),
                    ("Culture5", &s.different[1]),
                    ("Culture6", &s.different[2]),
                ],
            )
        }
    }
}

/// Renders the answering prompt for `question` under `strategy`.
pub fn render(strategy: &PromptStrategy, question: &SurveyQuestion) -> Result<RenderedPrompt, PromptError> {
    let system_prompt = system_prompt(strategy)?;
    let options = format_options(&question.options);
    let user_prompt = if strategy.kind.needs_icl() {
        let ex: Vec<(String, String, String)> = strategy
            .icl
            .iter()
            .map(|a| (a.question.text.clone(), format_options(&a.question.options), a.answer.to_string()))
            .collect();
        if ex.len() != ICL_EXAMPLES {
            return Err(PromptError::MissingIcl(strategy.kind));
        }
        fill(
            asset(ICL_USER),
            &[
                ("Question1", &ex[0].0),
                ("Options1", &ex[0].1),
                ("Answer1", &ex[0].2),
                ("Question2", &ex[1].0),
                ("Options2", &ex[1].1),
                ("Answer2", &ex[1].2),
                ("Question3", &ex[2].0),
                ("Options3", &ex[2].1),
                ("Answer3", &ex[2].2),
                ("Question4", &ex[3].0),
                ("Options4", &ex[3].1),
                ("Answer4", &ex[3].2),
                ("Question5", &ex[4].0),
                ("Options5", &ex[4].1),
                ("Answer5", &ex[4].2),
                ("Question", &question.text),
                ("Options", &options),
            ],
        )?
    } else {
        fill(asset(ANSWER_USER), &[("Question", &question.text), ("Options", &options)])?
    };
    Ok(RenderedPrompt { system_prompt, user_prompt })
}

/// Renders the question-generation prompt for a topic from five examples.
pub fn render_generation(topic_name: &str, examples: &[SurveyQuestion]) -> Result<RenderedPrompt, PromptError> {
    if examples.len() != 5 {
        return Err(PromptError::WrongExampleCount(examples.len()));
    }
    let opts: Vec<String> = examples.iter().map(|q| format_options(&q.options)).collect();
    let user_prompt = fill(
        asset(GENERATE_USER),
        &[
            ("Culture Topic", topic_name),
            ("Question1", &examples[0].text),
            ("Options1", &opts[0]),
            ("Question2", &examples[1].text),
            ("Options2", &opts[1]),
            ("Question3", &examples[2].text),
            ("Options3", &opts[2]),
            ("Question4", &examples[3].text),
            ("Options4", &opts[3]),
            ("Question5", &examples[4].text),
            ("Options5", &opts[4]),
        ],
    )?;
    Ok(RenderedPrompt { system_prompt: asset(GENERATE_SYSTEM).to_string(), user_prompt })
}
