//! Chat-completion interface shared by every backend, plus the deterministic
//! mock persona used for tests and desk-scale runs.
//!
//! The mock answers survey questions with
//! `code = options[stable_hash(question_id, culture_or_empty, seed) mod n]`,
//! which is `1 + hash mod n` for the usual `1..=n` code sets. It never looks
//! at the prompt text for answers, so culture-conditioned answers differ from
//! unconditioned ones for a hash-determined subset of questions.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::time::Duration;

use serde::Serialize;

use crate::culture::CultureCode;
use crate::survey::{topic_name, SurveyQuestion};

/// Machine-readable description of what a request asks for. Real backends
/// ignore it; the mock backend answers from it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TaskTag {
    Answer { question_id: String, option_codes: Vec<u32>, culture: Option<CultureCode> },
    Generate { topic_id: u8 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChatRequest {
    /// May be empty; the self-alignment template has no system turn.
    pub system_prompt: String,
    pub user_prompt: String,
    pub temperature: f64,
    pub max_tokens: u32,
    pub seed: Option<u64>,
    pub task: Option<TaskTag>,
}

impl ChatRequest {
    pub fn new(system_prompt: impl Into<String>, user_prompt: impl Into<String>) -> Self {
        Self {
            system_prompt: system_prompt.into(),
            user_prompt: user_prompt.into(),
            temperature: 0.0,
            max_tokens: 16,
            seed: None,
            task: None,
        }
    }

    pub fn with_task(mut self, task: TaskTag) -> Self {
        self.task = Some(task);
        self
    }

    pub fn validate(&self) -> Result<(), GatewayError> {
        if self.user_prompt.trim().is_empty() {
            return Err(GatewayError::InvalidRequest("empty user prompt".into()));
        }
        if self.temperature.is_nan() || self.temperature < 0.0 {
            return Err(GatewayError::InvalidRequest("temperature must be >= 0".into()));
        }
        if self.max_tokens == 0 {
            return Err(GatewayError::InvalidRequest("max_tokens must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChatResponse {
    pub text: String,
    pub backend_id: String,
    pub latency: Duration,
    /// Number of HTTP attempts spent, 1 when the first try succeeded.
    pub attempts: u32,
    /// The backend stopped on its token limit.
    pub truncated: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GatewayError {
    Config(String),
    Auth(String),
    InvalidRequest(String),
    Http { status: u16, body: String },
    Transport(String),
    Exhausted { attempts: u32, last: String },
    Malformed(String),
}

impl GatewayError {
    /// Whether a retry may succeed.
    pub fn is_transient(&self) -> bool {
        match self {
            Self::Http { status, .. } => *status == 429 || *status >= 500,
            Self::Transport(_) => true,
            _ => false,
        }
    }
}

impl fmt::Display for GatewayError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Config(m) => write!(f, "backend configuration error: {m}"),
            Self::Auth(m) => write!(f, "authentication failed: {m}"),
            Self::InvalidRequest(m) => write!(f, "invalid request: {m}"),
            Self::Http { status, body } => write!(f, "HTTP {status}: {body}"),
            Self::Transport(m) => write!(f, "transport error: {m}"),
            Self::Exhausted { attempts, last } => {
                write!(f, "gave up after {attempts} attempts: {last}")
            }
            Self::Malformed(m) => write!(f, "malformed backend response: {m}"),
        }
    }
}

impl core::error::Error for GatewayError {}

/// Answer-generation backend. Implementations must accept concurrent calls.
pub trait ChatBackend: Send + Sync {
    fn id(&self) -> &str;
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, GatewayError>;
}

impl<B: ChatBackend + ?Sized> ChatBackend for &B {
    fn id(&self) -> &str {
        (**self).id()
    }
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, GatewayError> {
        (**self).complete(request)
    }
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// 64-bit FNV-1a.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    fnv1a64_extend(FNV_OFFSET, bytes)
}

fn fnv1a64_extend(mut h: u64, bytes: &[u8]) -> u64 {
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

/// Platform-independent hash of `(question_id, culture, seed)`:
/// FNV-1a over `question_id ‖ 0x1F ‖ culture ‖ 0x1F ‖ seed as 8 little-endian
/// bytes`. `culture` is the empty string for the unaware scenario.
pub fn stable_hash(question_id: &str, culture: &str, seed: u64) -> u64 {
    let mut h = fnv1a64_extend(FNV_OFFSET, question_id.as_bytes());
    h = fnv1a64_extend(h, &[0x1F]);
    h = fnv1a64_extend(h, culture.as_bytes());
    h = fnv1a64_extend(h, &[0x1F]);
    fnv1a64_extend(h, &seed.to_le_bytes())
}

fn pick_code(codes: &[u32], question_id: &str, culture: Option<CultureCode>, seed: u64) -> Option<u32> {
    if codes.is_empty() {
        return None;
    }
    let c = culture.as_ref().map_or("", CultureCode::as_str);
    let h = stable_hash(question_id, c, seed);
    Some(codes[(h % codes.len() as u64) as usize])
}

/// The option the mock persona picks for `question`.
pub fn mock_answer_policy(question: &SurveyQuestion, culture: Option<CultureCode>, seed: u64) -> u32 {
    let codes: Vec<u32> = question.codes().collect();
    pick_code(&codes, &question.id, culture, seed).unwrap_or(1)
}

/// A simulated respondent: optionally culture-conditioned, keyed by seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MockPersona {
    pub culture: Option<CultureCode>,
    pub seed: u64,
}

impl MockPersona {
    pub fn answer(&self, question: &SurveyQuestion) -> u32 {
        mock_answer_policy(question, self.culture, self.seed)
    }
}

/// Deterministic backend: the same `(seed, request)` always yields the same
/// text, on every platform.
#[derive(Debug, Clone)]
pub struct MockBackend {
    seed: u64,
    tag_ids: bool,
    id: String,
}

impl MockBackend {
    pub fn new(seed: u64) -> Self {
        Self { seed, tag_ids: false, id: format!("mock:{seed}") }
    }

    /// Appends `[question_id|culture]` to every answer so callers can check
    /// that responses are attributed to the right work item.
    pub fn tagging_ids(mut self) -> Self {
        self.tag_ids = true;
        self
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    fn respond(&self, request: &ChatRequest) -> Result<String, GatewayError> {
        match &request.task {
            Some(TaskTag::Answer { question_id, option_codes, culture }) => {
                let code = pick_code(option_codes, question_id, *culture, self.seed)
                    .ok_or_else(|| GatewayError::InvalidRequest("question has no options".into()))?;
                if self.tag_ids {
                    let c = culture.as_ref().map_or("-", CultureCode::as_str);
                    Ok(format!("{code} [{question_id}|{c}]"))
                } else {
                    Ok(code.to_string())
                }
            }
            Some(TaskTag::Generate { topic_id }) => {
                let mut h = fnv1a64(request.system_prompt.as_bytes());
                h = fnv1a64_extend(h, request.user_prompt.as_bytes());
                h = fnv1a64_extend(h, &self.seed.to_le_bytes());
                Ok(mock_generated_question(*topic_id, h))
            }
            None => Err(GatewayError::InvalidRequest("mock backend needs a task tag".into())),
        }
    }
}

impl ChatBackend for MockBackend {
    fn id(&self) -> &str {
        &self.id
    }

    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, GatewayError> {
        request.validate()?;
        Ok(ChatResponse {
            text: self.respond(request)?,
            backend_id: self.id.clone(),
            latency: Duration::ZERO,
            attempts: 1,
            truncated: false,
        })
    }
}

const SUBJECTS: [[&str; 8]; 13] = [
    [
        "respect for elders",
        "gender equality at home",
        "obedience in children",
        "tolerance of people with different lifestyles",
        "independence in children",
        "family traditions",
        "hard work",
        "sharing household chores",
    ],
    [
        "your own sense of happiness",
        "free time with friends",
        "physical health",
        "a sense of control over your life",
        "financial satisfaction",
        "emotional well-being",
        "close family relationships",
        "everyday leisure",
    ],
    [
        "trust in your neighbours",
        "membership in voluntary organizations",
        "trust in people you meet for the first time",
        "participation in community groups",
        "confidence in labour unions",
        "trust in people of another religion",
        "confidence in charitable organizations",
        "help from people in your neighbourhood",
    ],
    [
        "private ownership of business",
        "government responsibility for welfare",
        "competition in the economy",
        "equal incomes",
        "individual effort",
        "economic growth",
        "job security",
        "protecting the environment over growth",
    ],
    [
        "bribery among public officials",
        "transparency in government spending",
        "honesty of business leaders",
        "corruption in local government",
        "fair treatment by the police",
        "reporting of corruption by the media",
        "accountability of elected officials",
        "integrity in the courts",
    ],
    [
        "the cultural contribution of immigrants",
        "immigrants filling job vacancies",
        "the integration of newcomers",
        "the risk of social conflict from immigration",
        "immigrants strengthening cultural diversity",
        "border controls",
        "family reunification for immigrants",
        "immigrant access to public services",
    ],
    [
        "safety in your neighbourhood",
        "protection from crime at night",
        "national security spending",
        "the risk of terrorism",
        "personal data security",
        "the presence of police on the streets",
        "the risk of losing your job",
        "protection from war",
    ],
    [
        "maintaining order in the nation",
        "giving people more say in government decisions",
        "fighting rising prices",
        "protecting freedom of speech",
        "a stable economy",
        "a less impersonal and more humane society",
        "the fight against crime",
        "a society where ideas count more than money",
    ],
    [
        "scientific research",
        "new technologies",
        "the internet as a source of information",
        "science in everyday life",
        "artificial intelligence",
        "medical innovation",
        "technology in schools",
        "scientific knowledge for ordinary people",
    ],
    [
        "belief in God",
        "attending religious services",
        "prayer",
        "religious leaders",
        "religious teachings on morality",
        "religious tolerance",
        "religion in public life",
        "religious education for children",
    ],
    [
        "honesty in paying taxes",
        "avoiding fares on public transport",
        "accepting a bribe",
        "personal responsibility for the environment",
        "moral rules in a changing world",
        "euthanasia",
        "divorce",
        "fairness toward strangers",
    ],
    [
        "interest in politics",
        "voting in national elections",
        "signing a petition",
        "joining a peaceful demonstration",
        "following political news",
        "discussing politics with friends",
        "contacting elected officials",
        "participating in local elections",
    ],
    [
        "having a strong leader",
        "democratic elections",
        "rule by experts",
        "army rule",
        "respect for human rights",
        "the independence of courts",
        "free and fair elections",
        "civil rights protection",
    ],
];

const CONTEXTS: [&str; 8] = [
    "making decisions about your future",
    "raising children",
    "choosing whom to vote for",
    "talking with your neighbours",
    "planning for retirement",
    "dealing with public institutions",
    "thinking about the next generation",
    "meeting people from other countries",
];

const IMPORTANCE: [&str; 4] = ["Very important", "Rather important", "Not very important", "Not at all important"];
const AGREEMENT: [&str; 5] = ["Strongly agree", "Agree", "Neither agree nor disagree", "Disagree", "Strongly disagree"];
const FREQUENCY: [&str; 5] = ["Always", "Often", "Sometimes", "Rarely", "Never"];
const CONFIDENCE: [&str; 4] = ["A great deal", "Quite a lot", "Not very much", "None at all"];
const YES_NO: [&str; 2] = ["Yes", "No"];

#[derive(Serialize)]
struct GeneratedJson<'a> {
    #[serde(rename = "Question")]
    question: &'a str,
    #[serde(rename = "Options")]
    options: Vec<String>,
}

fn labeled(labels: &[&str]) -> Vec<String> {
    labels.iter().enumerate().map(|(i, l)| format!("{}.{l}", i + 1)).collect()
}

fn bare(n: u32) -> Vec<String> {
    (1..=n).map(|c| c.to_string()).collect()
}

/// Synthetic generator output for one prompt hash. Mostly well-formed
/// questions; a few per hundred exercise each rejection path.
fn mock_generated_question(topic_id: u8, h: u64) -> String {
    if h % 50 == 7 {
        return "I'm sorry, I cannot come up with a new question right now.".into();
    }
    let t = usize::from(topic_id.clamp(1, 13)) - 1;
    let subject = SUBJECTS[t][((h >> 8) % 8) as usize];
    let context = CONTEXTS[((h >> 16) % 8) as usize];
    let (text, options) = match h % 20 {
        1 => (format!("Do you think {subject} can always be justified when {context}?"), bare(10)),
        2 => (
            format!("How much does {subject} matter when {context}?"),
            ["1 - Not at all important", "2", "3", "4 - Very important"].iter().map(|s| s.to_string()).collect(),
        ),
        _ => match (h >> 24) % 6 {
            0 => (format!("How important is {subject} to you when {context}?"), labeled(&IMPORTANCE)),
            1 => (
                format!("To what extent do you agree that {subject} should matter more when {context}?"),
                labeled(&AGREEMENT),
            ),
            2 => (format!("How often do you think about {subject} when {context}?"), labeled(&FREQUENCY)),
            3 => (
                format!("How much confidence do you have in {subject} when {context}?"),
                labeled(&CONFIDENCE),
            ),
            4 => (
                format!(
                    "On a scale from 1 meaning 'not at all' to 10 meaning 'completely', how much does {subject} matter to you when {context}?"
                ),
                bare(10),
            ),
            _ => (format!("Do you think {subject} deserves more attention when {context}?"), labeled(&YES_NO)),
        },
    };
    let body = serde_json::to_string(&GeneratedJson { question: &text, options }).unwrap_or_default();
    if (h >> 32).is_multiple_of(7) {
        format!("Sure! Here is a new question about {}:\n{body}", topic_name(topic_id).unwrap_or("culture"))
    } else {
        body
    }
}
