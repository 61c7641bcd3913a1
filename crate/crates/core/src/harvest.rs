//! Answer collection for the unaware scenario and one aware scenario per
//! culture, with option parsing, parse retries and masking.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::culture::{CultureCode, CultureProfile, CultureRegistry};
use crate::gateway::{ChatBackend, ChatRequest, GatewayError, TaskTag};
use crate::prompt::{
    icl_candidates, render, retrieve_icl, AnsweredQuestion, PromptError, PromptStrategy, RenderedPrompt, StrategyKind,
    ICL_EXAMPLES,
};
use crate::survey::{ResponseVector, SurveyQuestion};

pub const DEFAULT_PARSE_RETRIES: u32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptionParseError {
    NoInteger,
    OutOfRange(u64),
}

impl fmt::Display for OptionParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::NoInteger => f.write_str("no integer found"),
            Self::OutOfRange(n) => write!(f, "{n} is not an option code"),
        }
    }
}

impl core::error::Error for OptionParseError {}

/// Extracts the first integer token of `text` and accepts it iff it is an
/// option code of `question`. Digits glued to a letter (`Q46`, `v2`) are not
/// tokens, so `"Option 3"`, `"3."` and `"I choose 2. Disagree"` all parse.
pub fn parse_option(text: &str, question: &SurveyQuestion) -> Result<u32, OptionParseError> {
    let bytes = text.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        if !bytes[i].is_ascii_digit() {
            i += 1;
            continue;
        }
        let start = i;
        while i < bytes.len() && bytes[i].is_ascii_digit() {
            i += 1;
        }
        let glued = text[..start].chars().next_back().is_some_and(char::is_alphabetic)
            || text[i..].chars().next().is_some_and(char::is_alphabetic);
        if glued {
            continue;
        }
        let digits = text[start..i].trim_start_matches('0');
        let n = if digits.is_empty() { 0 } else { digits.parse::<u64>().unwrap_or(u64::MAX) };
        return match u32::try_from(n) {
            Ok(code) if question.has_code(code) => Ok(code),
            _ => Err(OptionParseError::OutOfRange(n)),
        };
    }
    Err(OptionParseError::NoInteger)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum HarvestError {
    NoQuestions,
    NoCultures,
    BadStrategy(StrategyKind),
    ZeroConcurrency,
    Prompt(PromptError),
    /// Records for an unknown or repeated (question, scenario) pair, or a
    /// missing one.
    Inconsistent(String),
    Backend {
        error: GatewayError,
        partial: Vec<HarvestRecord>,
    },
}

impl fmt::Display for HarvestError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::NoQuestions => f.write_str("harvest plan has no questions"),
            Self::NoCultures => f.write_str("harvest plan has no cultures"),
            Self::BadStrategy(k) => write!(f, "{k} cannot be used as the culture-aware strategy"),
            Self::ZeroConcurrency => f.write_str("concurrency cap must be positive"),
            Self::Prompt(e) => write!(f, "{e}"),
            Self::Inconsistent(m) => write!(f, "inconsistent harvest records: {m}"),
            Self::Backend { error, partial } => {
                write!(f, "backend failure after {} records: {error}", partial.len())
            }
        }
    }
}

impl core::error::Error for HarvestError {}

impl From<PromptError> for HarvestError {
    fn from(e: PromptError) -> Self {
        Self::Prompt(e)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HarvestPlan {
    pub questions: Vec<SurveyQuestion>,
    pub cultures: Vec<CultureProfile>,
    pub aware_strategy: StrategyKind,
    pub parse_retry_cap: u32,
    pub concurrency_cap: usize,
    pub temperature: f64,
    pub max_tokens: u32,
}

impl HarvestPlan {
    pub fn new(questions: Vec<SurveyQuestion>, cultures: Vec<CultureProfile>, aware_strategy: StrategyKind) -> Self {
        Self {
            questions,
            cultures,
            aware_strategy,
            parse_retry_cap: DEFAULT_PARSE_RETRIES,
            concurrency_cap: 1,
            temperature: 0.0,
            max_tokens: 16,
        }
    }

    pub fn validate(&self) -> Result<(), HarvestError> {
        if self.questions.is_empty() {
            return Err(HarvestError::NoQuestions);
        }
        if self.cultures.is_empty() {
            return Err(HarvestError::NoCultures);
        }
        if self.aware_strategy == StrategyKind::Unaware {
            return Err(HarvestError::BadStrategy(self.aware_strategy));
        }
        if self.concurrency_cap == 0 {
            return Err(HarvestError::ZeroConcurrency);
        }
        Ok(())
    }

    /// Unaware first, then one aware scenario per culture in plan order.
    pub fn scenarios(&self) -> Vec<Scenario> {
        let mut out = Vec::with_capacity(1 + self.cultures.len());
        out.push(Scenario::Unaware);
        out.extend(self.cultures.iter().map(|c| Scenario::Aware(c.code)));
        out
    }

    /// Every (scenario, question) pair in canonical order: scenario-major,
    /// questions in plan order within a scenario.
    pub fn work_items(&self) -> Vec<WorkItem> {
        let scenarios = self.scenarios();
        let mut out = Vec::with_capacity(scenarios.len() * self.questions.len());
        for (s, scenario) in scenarios.into_iter().enumerate() {
            for q in 0..self.questions.len() {
                out.push(WorkItem { scenario_index: s, question_index: q, scenario });
            }
        }
        out
    }

    pub fn strategy_for(&self, scenario: Scenario) -> StrategyKind {
        match scenario {
            Scenario::Unaware => StrategyKind::Unaware,
            Scenario::Aware(_) => self.aware_strategy,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Scenario {
    Unaware,
    Aware(CultureCode),
}

impl Scenario {
    pub fn culture(self) -> Option<CultureCode> {
        match self {
            Self::Unaware => None,
            Self::Aware(c) => Some(c),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WorkItem {
    pub scenario_index: usize,
    pub question_index: usize,
    pub scenario: Scenario,
}

/// Renders the prompt of one (scenario, question) pair.
pub trait PromptSource: Send + Sync {
    fn prompt(&self, scenario: Scenario, question: &SurveyQuestion) -> Result<RenderedPrompt, PromptError>;
}

/// Prompts from the standard strategies. Strategies with in-context
/// examples draw them from `icl_pool`: per culture, the questions answered
/// with that culture's reference answers.
#[derive(Debug, Clone)]
pub struct StrategyPrompts {
    registry: CultureRegistry,
    aware: StrategyKind,
    icl_pool: BTreeMap<CultureCode, Vec<AnsweredQuestion>>,
}

impl StrategyPrompts {
    pub fn new(registry: CultureRegistry, aware: StrategyKind) -> Self {
        Self { registry, aware, icl_pool: BTreeMap::new() }
    }

    pub fn with_icl_pool(mut self, pool: BTreeMap<CultureCode, Vec<AnsweredQuestion>>) -> Self {
        self.icl_pool = pool;
        self
    }
}

impl PromptSource for StrategyPrompts {
    fn prompt(&self, scenario: Scenario, question: &SurveyQuestion) -> Result<RenderedPrompt, PromptError> {
        let Scenario::Aware(code) = scenario else {
            return render(&PromptStrategy::unaware(), question);
        };
        let profile = self.registry.get(code).ok_or(PromptError::UnknownCulture(code))?;
        let icl = if self.aware.needs_icl() {
            let pool = self.icl_pool.get(&code).map_or(&[][..], Vec::as_slice);
            Some(retrieve_icl(question, &icl_candidates(question, pool), ICL_EXAMPLES)?)
        } else {
            None
        };
        let strategy = PromptStrategy::new(self.aware, Some(profile), &self.registry, icl)?;
        render(&strategy, question)
    }
}

/// One line of harvest output.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HarvestRecord {
    pub question_id: String,
    pub culture: Option<CultureCode>,
    pub strategy: StrategyKind,
    pub raw_text: String,
    pub parsed_code: Option<u32>,
    pub failure_reason: Option<String>,
}

impl HarvestRecord {
    pub fn scenario(&self) -> Scenario {
        self.culture.map_or(Scenario::Unaware, Scenario::Aware)
    }
}

pub fn answer_request(
    plan: &HarvestPlan,
    prompt: RenderedPrompt,
    scenario: Scenario,
    question: &SurveyQuestion,
) -> ChatRequest {
    ChatRequest {
        system_prompt: prompt.system_prompt,
        user_prompt: prompt.user_prompt,
        temperature: plan.temperature,
        max_tokens: plan.max_tokens,
        seed: None,
        task: Some(TaskTag::Answer {
            question_id: question.id.clone(),
            option_codes: question.codes().collect(),
            culture: scenario.culture(),
        }),
    }
}

/// Answers one work item, resending the identical prompt up to
/// `parse_retry_cap` times when the reply does not parse. A persistent
/// parse failure yields a masked record; backend errors are returned.
pub fn answer_item(
    plan: &HarvestPlan,
    source: &dyn PromptSource,
    backend: &dyn ChatBackend,
    scenario: Scenario,
    question: &SurveyQuestion,
) -> Result<HarvestRecord, GatewayError> {
    let prompt = source.prompt(scenario, question).map_err(|e| GatewayError::InvalidRequest(e.to_string()))?;
    let request = answer_request(plan, prompt, scenario, question);
    let mut last_text = String::new();
    let mut last_err = OptionParseError::NoInteger;
    for _ in 0..=plan.parse_retry_cap {
        let response = backend.complete(&request)?;
        match parse_option(&response.text, question) {
            Ok(code) => {
                return Ok(HarvestRecord {
                    question_id: question.id.clone(),
                    culture: scenario.culture(),
                    strategy: plan.strategy_for(scenario),
                    raw_text: response.text,
                    parsed_code: Some(code),
                    failure_reason: None,
                })
            }
            Err(e) => {
                last_text = response.text;
                last_err = e;
            }
        }
    }
    Ok(HarvestRecord {
        question_id: question.id.clone(),
        culture: scenario.culture(),
        strategy: plan.strategy_for(scenario),
        raw_text: last_text,
        parsed_code: None,
        failure_reason: Some(last_err.to_string()),
    })
}

/// Sequential harvest in canonical order. On a backend failure the records
/// collected so far are returned inside the error.
pub fn harvest(
    plan: &HarvestPlan,
    source: &dyn PromptSource,
    backend: &dyn ChatBackend,
) -> Result<Vec<HarvestRecord>, HarvestError> {
    plan.validate()?;
    let mut out = Vec::with_capacity(plan.questions.len() * (1 + plan.cultures.len()));
    for item in plan.work_items() {
        let q = &plan.questions[item.question_index];
        match answer_item(plan, source, backend, item.scenario, q) {
            Ok(r) => out.push(r),
            Err(error) => return Err(HarvestError::Backend { error, partial: out }),
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HarvestFailure {
    pub question_id: String,
    pub culture: Option<CultureCode>,
    pub reason: String,
}

/// Response vectors assembled from harvest records.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HarvestResult {
    pub unaware: ResponseVector,
    pub aware: BTreeMap<CultureCode, ResponseVector>,
    pub failures: Vec<HarvestFailure>,
}

impl HarvestResult {
    /// Requires exactly one record per (question, scenario) pair of
    /// `questions` × (unaware + `cultures`); record order does not matter.
    pub fn from_records(
        questions: &[SurveyQuestion],
        cultures: &[CultureCode],
        records: &[HarvestRecord],
    ) -> Result<Self, HarvestError> {
        let index: BTreeMap<&str, usize> = questions.iter().enumerate().map(|(i, q)| (q.id.as_str(), i)).collect();
        let known: BTreeSet<CultureCode> = cultures.iter().copied().collect();
        let ids: Vec<String> = questions.iter().map(|q| q.id.clone()).collect();
        let mut slots: BTreeMap<Option<CultureCode>, Vec<Option<Option<u32>>>> = BTreeMap::new();
        slots.insert(None, alloc::vec![None; questions.len()]);
        for &c in cultures {
            slots.insert(Some(c), alloc::vec![None; questions.len()]);
        }
        let mut failures = Vec::new();
        for r in records {
            let &i = index
                .get(r.question_id.as_str())
                .ok_or_else(|| HarvestError::Inconsistent(alloc::format!("unknown question {}", r.question_id)))?;
            if r.culture.is_some_and(|c| !known.contains(&c)) {
                return Err(HarvestError::Inconsistent(alloc::format!(
                    "unknown culture in record for {}",
                    r.question_id
                )));
            }
            let slot = &mut slots.get_mut(&r.culture).expect("all scenarios inserted")[i];
            if slot.is_some() {
                return Err(HarvestError::Inconsistent(alloc::format!(
                    "duplicate record for {} / {}",
                    r.question_id,
                    r.culture.as_ref().map_or("unaware", CultureCode::as_str)
                )));
            }
            if let Some(code) = r.parsed_code {
                if !questions[i].has_code(code) {
                    return Err(HarvestError::Inconsistent(alloc::format!(
                        "code {code} invalid for {}",
                        r.question_id
                    )));
                }
            }
            *slot = Some(r.parsed_code);
            if r.parsed_code.is_none() {
                failures.push(HarvestFailure {
                    question_id: r.question_id.clone(),
                    culture: r.culture,
                    reason: r.failure_reason.clone().unwrap_or_else(|| "unparsed".to_string()),
                });
            }
        }
        let mut vectors = BTreeMap::new();
        for (culture, answers) in slots {
            let mut out = Vec::with_capacity(answers.len());
            for (i, a) in answers.into_iter().enumerate() {
                out.push(a.ok_or_else(|| {
                    HarvestError::Inconsistent(alloc::format!(
                        "missing record for {} / {}",
                        ids[i],
                        culture.as_ref().map_or("unaware", CultureCode::as_str)
                    ))
                })?);
            }
            vectors.insert(culture, ResponseVector { culture, question_ids: ids.clone(), answers: out });
        }
        let unaware = vectors.remove(&None).expect("unaware inserted");
        let aware = vectors.into_iter().map(|(c, v)| (c.expect("only unaware is None"), v)).collect();
        Ok(Self { unaware, aware, failures })
    }
}
