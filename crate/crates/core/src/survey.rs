//! Survey questions, participant answers and majority-vote reference vectors.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::culture::{CultureCode, CultureRegistry};

/// The 13 culture topics of the survey, indexed by `topic_id - 1`.
pub const TOPIC_NAMES: [&str; 13] = [
    "Social Values, Attitudes, and Stereotypes",
    "Happiness and Well-being",
    "Social Capital, Trust, and Organizational Membership",
    "Economic Values",
    "Corruption",
    "Migration",
    "Security",
    "Post-materialist Index",
    "Science and Technology",
    "Religious Values",
    "Ethical Values and Norms",
    "Political Interest and Participation",
    "Political Culture and Regimes",
];

pub const TOPIC_COUNT: u8 = 13;

pub fn topic_name(topic_id: u8) -> Option<&'static str> {
    TOPIC_NAMES.get(usize::from(topic_id).checked_sub(1)?).copied()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SurveyError {
    EmptyId,
    EmptyText(String),
    UnknownTopic { id: String, topic_id: u8 },
    NoOptions(String),
    BadOptionCodes(String),
    DuplicateId(String),
    NoQuestions,
    UnknownCulture(String),
    UnknownQuestion(String),
    Misaligned(&'static str),
}

impl fmt::Display for SurveyError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::EmptyId => f.write_str("question id is empty"),
            Self::EmptyText(id) => write!(f, "question {id} has empty text"),
            Self::UnknownTopic { id, topic_id } => {
                write!(f, "question {id} has unknown topic_id {topic_id} (expected 1..=13)")
            }
            Self::NoOptions(id) => write!(f, "question {id} has no options"),
            Self::BadOptionCodes(id) => {
                write!(f, "question {id} option codes must be positive and strictly increasing")
            }
            Self::DuplicateId(id) => write!(f, "duplicate question id {id}"),
            Self::NoQuestions => f.write_str("no questions"),
            Self::UnknownCulture(c) => write!(f, "unknown culture {c}"),
            Self::UnknownQuestion(q) => write!(f, "unknown question {q}"),
            Self::Misaligned(what) => write!(f, "response vector misaligned: {what}"),
        }
    }
}

impl core::error::Error for SurveyError {}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuestionOption {
    pub code: u32,
    /// Empty for pure numeric scales.
    #[serde(default)]
    pub label: String,
}

impl QuestionOption {
    pub fn new(code: u32, label: impl Into<String>) -> Self {
        Self { code, label: label.into() }
    }

    pub fn is_bare(&self) -> bool {
        self.label.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    #[default]
    Seed,
    Generated,
}

/// One multiple-choice survey item.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawQuestion")]
pub struct SurveyQuestion {
    pub id: String,
    pub topic_id: u8,
    pub text: String,
    pub options: Vec<QuestionOption>,
    #[serde(default)]
    pub origin: Origin,
}

#[derive(Deserialize)]
struct RawQuestion {
    id: String,
    topic_id: u8,
    text: String,
    options: Vec<QuestionOption>,
    #[serde(default)]
    origin: Origin,
}

impl TryFrom<RawQuestion> for SurveyQuestion {
    type Error = SurveyError;
    fn try_from(r: RawQuestion) -> Result<Self, Self::Error> {
        SurveyQuestion::new(r.id, r.topic_id, r.text, r.options, r.origin)
    }
}

impl SurveyQuestion {
    pub fn new(
        id: impl Into<String>,
        topic_id: u8,
        text: impl Into<String>,
        options: Vec<QuestionOption>,
        origin: Origin,
    ) -> Result<Self, SurveyError> {
        let id = id.into();
        let text = text.into();
        if id.trim().is_empty() {
            return Err(SurveyError::EmptyId);
        }
        if text.trim().is_empty() {
            return Err(SurveyError::EmptyText(id));
        }
        if topic_name(topic_id).is_none() {
            return Err(SurveyError::UnknownTopic { id, topic_id });
        }
        if options.is_empty() {
            return Err(SurveyError::NoOptions(id));
        }
        let increasing = options.windows(2).all(|w| w[0].code < w[1].code);
        if options[0].code == 0 || !increasing {
            return Err(SurveyError::BadOptionCodes(id));
        }
        Ok(Self { id, topic_id, text, options, origin })
    }

    pub fn topic_name(&self) -> &'static str {
        topic_name(self.topic_id).unwrap_or("")
    }

    pub fn has_code(&self, code: u32) -> bool {
        self.options.iter().any(|o| o.code == code)
    }

    pub fn codes(&self) -> impl Iterator<Item = u32> + '_ {
        self.options.iter().map(|o| o.code)
    }

    /// Largest possible distance between two answers (max code - min code).
    pub fn code_span(&self) -> u32 {
        let first = self.options.first().map_or(0, |o| o.code);
        let last = self.options.last().map_or(0, |o| o.code);
        last - first
    }
}

/// Raw answer counts of one culture's participants, keyed by question id
/// then by the recorded code. Negative codes are the survey's
/// non-substantive answers ("don't know", "no answer", ...).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParticipantAnswers {
    pub culture: CultureCode,
    pub counts: BTreeMap<String, BTreeMap<i64, u64>>,
}

impl ParticipantAnswers {
    pub fn new(culture: CultureCode) -> Self {
        Self { culture, counts: BTreeMap::new() }
    }

    /// Adds `n` participants answering `code` to `question_id`.
    pub fn add(&mut self, question_id: &str, code: i64, n: u64) {
        *self.counts.entry(question_id.to_string()).or_default().entry(code).or_insert(0) += n;
    }
}

/// Plurality answer over the codes valid for `question`; ties go to the
/// smallest code. `None` when no valid answer remains after cleaning.
pub fn majority_code(counts: &BTreeMap<i64, u64>, question: &SurveyQuestion) -> Option<u32> {
    let mut best: Option<(u32, u64)> = None;
    // BTreeMap iterates codes ascending, so a strict `>` keeps the smallest on ties
    for (&code, &n) in counts {
        let Ok(code) = u32::try_from(code) else { continue };
        if n == 0 || !question.has_code(code) {
            continue;
        }
        if best.is_none_or(|(_, m)| n > m) {
            best = Some((code, n));
        }
    }
    best.map(|(c, _)| c)
}

pub fn majority_vote(answers: &ParticipantAnswers, question: &SurveyQuestion) -> Option<u32> {
    answers.counts.get(&question.id).and_then(|c| majority_code(c, question))
}

/// Per-culture answer sequence aligned to an ordered question list.
/// `None` marks a masked position.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResponseVector {
    pub culture: Option<CultureCode>,
    pub question_ids: Vec<String>,
    pub answers: Vec<Option<u32>>,
}

impl ResponseVector {
    pub fn new(
        culture: Option<CultureCode>,
        question_ids: Vec<String>,
        answers: Vec<Option<u32>>,
    ) -> Result<Self, SurveyError> {
        if question_ids.len() != answers.len() {
            return Err(SurveyError::Misaligned("lengths differ"));
        }
        Ok(Self { culture, question_ids, answers })
    }

    pub fn len(&self) -> usize {
        self.answers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.answers.is_empty()
    }

    pub fn is_masked(&self, i: usize) -> bool {
        self.answers[i].is_none()
    }

    pub fn unmasked_count(&self) -> usize {
        self.answers.iter().filter(|a| a.is_some()).count()
    }

    /// Checks alignment with `questions` and that every unmasked answer is a
    /// valid code of its question.
    pub fn check_against(&self, questions: &[SurveyQuestion]) -> Result<(), SurveyError> {
        if questions.len() != self.len() {
            return Err(SurveyError::Misaligned("question count differs"));
        }
        for ((q, id), a) in questions.iter().zip(&self.question_ids).zip(&self.answers) {
            if q.id != *id {
                return Err(SurveyError::Misaligned("question ids differ"));
            }
            if let Some(code) = a {
                if !q.has_code(*code) {
                    return Err(SurveyError::Misaligned("answer outside option set"));
                }
            }
        }
        Ok(())
    }
}

/// Seed questions, participant answers and culture profiles.
#[derive(Debug, Clone)]
pub struct SurveyCorpus {
    questions: Vec<SurveyQuestion>,
    answers: BTreeMap<CultureCode, ParticipantAnswers>,
    cultures: CultureRegistry,
}

impl SurveyCorpus {
    pub fn new(
        questions: Vec<SurveyQuestion>,
        answers: Vec<ParticipantAnswers>,
        cultures: CultureRegistry,
    ) -> Result<Self, SurveyError> {
        if questions.is_empty() {
            return Err(SurveyError::NoQuestions);
        }
        let mut seen = BTreeSet::new();
        for q in &questions {
            if !seen.insert(q.id.as_str()) {
                return Err(SurveyError::DuplicateId(q.id.clone()));
            }
        }
        let mut merged: BTreeMap<CultureCode, ParticipantAnswers> = BTreeMap::new();
        for a in answers {
            let slot = merged.entry(a.culture).or_insert_with(|| ParticipantAnswers::new(a.culture));
            for (qid, counts) in a.counts {
                for (code, n) in counts {
                    slot.add(&qid, code, n);
                }
            }
        }
        Ok(Self { questions, answers: merged, cultures })
    }

    pub fn questions(&self) -> &[SurveyQuestion] {
        &self.questions
    }

    pub fn question(&self, id: &str) -> Option<&SurveyQuestion> {
        self.questions.iter().find(|q| q.id == id)
    }

    pub fn cultures(&self) -> &CultureRegistry {
        &self.cultures
    }

    pub fn answers(&self, culture: CultureCode) -> Option<&ParticipantAnswers> {
        self.answers.get(&culture)
    }

    /// Distinct topic ids present, ascending.
    pub fn topics(&self) -> Vec<u8> {
        let set: BTreeSet<u8> = self.questions.iter().map(|q| q.topic_id).collect();
        set.into_iter().collect()
    }

    /// Majority-vote reference answers of `culture` for `question_ids`.
    /// Questions without valid participant answers are masked.
    pub fn reference_vector(
        &self,
        culture: CultureCode,
        question_ids: &[String],
    ) -> Result<ResponseVector, SurveyError> {
        if self.cultures.get(culture).is_none() && !self.answers.contains_key(&culture) {
            return Err(SurveyError::UnknownCulture(culture.to_string()));
        }
        let empty = ParticipantAnswers::new(culture);
        let answers = self.answers.get(&culture).unwrap_or(&empty);
        let mut out = Vec::with_capacity(question_ids.len());
        for id in question_ids {
            let q = self.question(id).ok_or_else(|| SurveyError::UnknownQuestion(id.clone()))?;
            out.push(majority_vote(answers, q));
        }
        ResponseVector::new(Some(culture), question_ids.to_vec(), out)
    }
}
