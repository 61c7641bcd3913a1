//! Loading the seed corpus: questions, per-culture answer counts and
//! culture profiles. The bundled sample corpus is used when no paths are
//! configured.

use std::collections::BTreeMap;
use std::path::Path;

use cultalign_core::survey::ParticipantAnswers;
use cultalign_core::{CultureCode, CultureProfile, CultureRegistry, SurveyCorpus, SurveyQuestion};
use serde::Deserialize;

use crate::io::{parse_jsonl, read_text, IoError};

pub const SAMPLE_QUESTIONS: &str = include_str!("../data/questions.jsonl");
pub const SAMPLE_ANSWERS: &str = include_str!("../data/answers.jsonl");
pub const SAMPLE_CULTURES: &str = include_str!("../data/cultures.jsonl");

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error(transparent)]
    Io(#[from] IoError),
    #[error("{0}")]
    Survey(#[from] cultalign_core::survey::SurveyError),
    #[error("{0}")]
    Culture(#[from] cultalign_core::culture::CultureError),
}

/// One answers line: participant counts of a culture for one question,
/// keyed by the recorded code (negative codes are non-answers).
#[derive(Debug, Clone, Deserialize)]
pub struct AnswerRow {
    pub culture: CultureCode,
    pub question_id: String,
    pub counts: BTreeMap<i64, u64>,
}

pub struct CorpusSources<'a> {
    pub questions: Option<&'a Path>,
    pub answers: Option<&'a Path>,
    pub cultures: Option<&'a Path>,
}

fn load<T: serde::de::DeserializeOwned>(path: Option<&Path>, fallback: &str, name: &str) -> Result<Vec<T>, IoError> {
    match path {
        Some(p) => parse_jsonl(&read_text(p)?, p),
        None => parse_jsonl(fallback, Path::new(name)),
    }
}

pub fn load_questions(path: Option<&Path>) -> Result<Vec<SurveyQuestion>, IoError> {
    load(path, SAMPLE_QUESTIONS, "<sample>/questions.jsonl")
}

pub fn load_registry(path: Option<&Path>) -> Result<CultureRegistry, CorpusError> {
    if path.is_none() {
        return Ok(CultureRegistry::builtin());
    }
    let profiles: Vec<CultureProfile> = load(path, SAMPLE_CULTURES, "<sample>/cultures.jsonl")?;
    Ok(CultureRegistry::new(profiles)?)
}

pub fn load_corpus(src: &CorpusSources<'_>) -> Result<SurveyCorpus, CorpusError> {
    let questions = load_questions(src.questions)?;
    let rows: Vec<AnswerRow> = load(src.answers, SAMPLE_ANSWERS, "<sample>/answers.jsonl")?;
    let mut answers: BTreeMap<CultureCode, ParticipantAnswers> = BTreeMap::new();
    for row in rows {
        let slot = answers.entry(row.culture).or_insert_with(|| ParticipantAnswers::new(row.culture));
        for (code, n) in row.counts {
            slot.add(&row.question_id, code, n);
        }
    }
    let registry = load_registry(src.cultures)?;
    Ok(SurveyCorpus::new(questions, answers.into_values().collect(), registry)?)
}
