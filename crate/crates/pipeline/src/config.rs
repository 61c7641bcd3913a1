//! Pipeline configuration: one TOML document, with any scalar overridable
//! from the command line by its dotted name (`--harvest.concurrency 8`).
//!
//! Relative paths in the file resolve against the file's directory;
//! relative paths given on the command line resolve against the working
//! directory.

use std::path::{Path, PathBuf};
use std::time::Duration;

use cultalign_core::forge::GenerationConfig;
use cultalign_core::select::Selector;
use cultalign_core::sft::Variant;
use cultalign_core::{CultureCode, CultureProfile, CultureRegistry, StrategyKind};
use serde::{Deserialize, Serialize};
use toml::Value;

use crate::http::HttpConfig;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("invalid config: {0}")]
    Parse(String),
    #[error("invalid override {0:?}: expected --section.key VALUE")]
    Override(String),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    /// Seeds every stochastic step: example sampling, RDS draws, shuffles.
    pub seed: u64,
    pub out_dir: PathBuf,
    pub corpus: CorpusConfig,
    pub backend: BackendConfig,
    pub generate: GenerateConfig,
    pub harvest: HarvestConfig,
    pub select: SelectConfig,
    pub compose: ComposeConfig,
    pub score: ScoreConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            out_dir: PathBuf::from("out"),
            corpus: CorpusConfig::default(),
            backend: BackendConfig::default(),
            generate: GenerateConfig::default(),
            harvest: HarvestConfig::default(),
            select: SelectConfig::default(),
            compose: ComposeConfig::default(),
            score: ScoreConfig::default(),
        }
    }
}

/// Unset paths fall back to the bundled sample corpus.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CorpusConfig {
    pub questions: Option<PathBuf>,
    pub answers: Option<PathBuf>,
    pub cultures: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Mock,
    Http,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BackendConfig {
    pub kind: BackendKind,
    pub mock_seed: u64,
    pub endpoint: String,
    pub model: String,
    /// Environment variable holding the API key. The key itself never
    /// appears in the config.
    pub api_key_env: String,
    pub timeout_secs: u64,
    pub max_attempts: u32,
    pub backoff_ms: u64,
}

impl Default for BackendConfig {
    fn default() -> Self {
        let http = HttpConfig::default();
        Self {
            kind: BackendKind::Mock,
            mock_seed: 0,
            endpoint: http.endpoint,
            model: http.model,
            api_key_env: http.api_key_env,
            timeout_secs: http.timeout.as_secs(),
            max_attempts: http.max_attempts,
            backoff_ms: http.backoff.as_millis() as u64,
        }
    }
}

impl BackendConfig {
    pub fn http(&self) -> HttpConfig {
        HttpConfig {
            endpoint: self.endpoint.clone(),
            model: self.model.clone(),
            api_key_env: self.api_key_env.clone(),
            timeout: Duration::from_secs(self.timeout_secs),
            max_attempts: self.max_attempts,
            backoff: Duration::from_millis(self.backoff_ms),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GenerateConfig {
    pub per_topic: usize,
    pub icl_seeds: usize,
    pub icl_generated: usize,
    pub parse_retries: u32,
    pub temperature: f64,
    pub max_tokens: u32,
}

impl Default for GenerateConfig {
    fn default() -> Self {
        let g = GenerationConfig::default();
        Self {
            per_topic: g.per_topic_target,
            icl_seeds: g.icl_seed_count,
            icl_generated: g.icl_generated_count,
            parse_retries: g.max_parse_retries,
            temperature: g.temperature,
            max_tokens: g.max_tokens,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HarvestConfig {
    /// Culture codes; empty means every culture in the registry.
    pub cultures: Vec<String>,
    /// Culture-aware strategy for the training harvest.
    pub strategy: String,
    pub parse_retries: u32,
    pub concurrency: usize,
    pub temperature: f64,
    pub max_tokens: u32,
}

impl Default for HarvestConfig {
    fn default() -> Self {
        Self {
            cultures: Vec::new(),
            strategy: "p1".into(),
            parse_retries: cultalign_core::harvest::DEFAULT_PARSE_RETRIES,
            concurrency: 4,
            temperature: 0.0,
            max_tokens: 16,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SelectConfig {
    pub selector: String,
}

impl Default for SelectConfig {
    fn default() -> Self {
        Self { selector: "crqpc".into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ComposeConfig {
    /// `joint`, `specific` or `both`.
    pub variant: String,
}

impl Default for ComposeConfig {
    fn default() -> Self {
        Self { variant: "both".into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScoreConfig {
    /// Culture-aware strategy of the evaluation harvest over seed questions.
    pub strategy: String,
    /// Harvest directory to score; defaults to `<out_dir>/eval`.
    pub harvest: Option<PathBuf>,
}

impl Default for ScoreConfig {
    fn default() -> Self {
        Self { strategy: "p1".into(), harvest: None }
    }
}

/// Dotted keys naming paths, resolved against the config file directory.
const PATH_KEYS: [&str; 5] = ["out_dir", "corpus.questions", "corpus.answers", "corpus.cultures", "score.harvest"];

/// Dotted key → raw value, in command-line order.
pub type Overrides = Vec<(String, String)>;

/// Pulls `--a.b VALUE` and `--a.b=VALUE` out of `args`. Returns the
/// remaining arguments and the overrides in order.
pub fn extract_overrides(args: Vec<String>) -> Result<(Vec<String>, Overrides), ConfigError> {
    let mut rest = Vec::with_capacity(args.len());
    let mut overrides = Vec::new();
    let mut it = args.into_iter();
    while let Some(arg) = it.next() {
        let Some(name) = arg.strip_prefix("--").filter(|n| n.split('=').next().is_some_and(|k| k.contains('.'))) else {
            rest.push(arg);
            continue;
        };
        let (key, value) = match name.split_once('=') {
            Some((k, v)) => (k.to_string(), v.to_string()),
            None => {
                let v = it.next().ok_or_else(|| ConfigError::Override(arg.clone()))?;
                (name.to_string(), v)
            }
        };
        if key.split('.').any(str::is_empty) {
            return Err(ConfigError::Override(arg));
        }
        overrides.push((key, value));
    }
    Ok((rest, overrides))
}

/// A command-line value: a TOML literal when it parses as one, otherwise a
/// bare string.
fn parse_literal(raw: &str) -> Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_string()))
}

fn set_path(root: &mut toml::Table, key: &str, value: Value) -> Result<(), ConfigError> {
    let mut parts: Vec<&str> = key.split('.').collect();
    let last = parts.pop().expect("split yields one part");
    let mut table = root;
    for p in parts {
        let entry = table.entry(p.to_string()).or_insert_with(|| Value::Table(toml::Table::new()));
        table = entry.as_table_mut().ok_or_else(|| ConfigError::Invalid(format!("{key}: {p} is not a table")))?;
    }
    table.insert(last.to_string(), value);
    Ok(())
}

fn get_path_mut<'a>(root: &'a mut toml::Table, key: &str) -> Option<&'a mut Value> {
    let mut parts = key.split('.').peekable();
    let mut table = root;
    while let Some(p) = parts.next() {
        let v = table.get_mut(p)?;
        if parts.peek().is_none() {
            return Some(v);
        }
        table = v.as_table_mut()?;
    }
    None
}

impl PipelineConfig {
    /// Reads the file (if any), applies overrides and validates.
    pub fn load(path: Option<&Path>, overrides: &[(String, String)]) -> Result<Self, ConfigError> {
        let mut table = match path {
            Some(p) => {
                let text =
                    std::fs::read_to_string(p).map_err(|source| ConfigError::Read { path: p.to_path_buf(), source })?;
                let mut t: toml::Table =
                    toml::from_str(&text).map_err(|e| ConfigError::Parse(format!("{}: {e}", p.display())))?;
                let base = p.parent().unwrap_or(Path::new(""));
                for key in PATH_KEYS {
                    if let Some(Value::String(s)) = get_path_mut(&mut t, key) {
                        *s = base.join(&*s).to_string_lossy().into_owned();
                    }
                }
                t
            }
            None => toml::Table::new(),
        };
        for (key, raw) in overrides {
            let value = if key == "harvest.cultures" && parse_literal(raw).is_str() {
                Value::Array(
                    raw.split(',')
                        .map(|s| Value::String(s.trim().to_string()))
                        .filter(|v| v.as_str() != Some(""))
                        .collect(),
                )
            } else {
                parse_literal(raw)
            };
            set_path(&mut table, key, value)?;
        }
        let config: Self =
            Value::Table(table).try_into().map_err(|e: toml::de::Error| ConfigError::Parse(e.message().to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        for p in [&self.corpus.questions, &self.corpus.answers, &self.corpus.cultures].into_iter().flatten() {
            if !p.is_file() {
                return bad(format!("corpus file {} does not exist", p.display()));
            }
        }
        self.generation().validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.training_strategy()?;
        self.eval_strategy()?;
        self.selector()?;
        self.variants()?;
        if self.harvest.concurrency == 0 {
            return bad("harvest.concurrency must be positive".into());
        }
        if self.harvest.max_tokens == 0 || self.generate.max_tokens == 0 {
            return bad("max_tokens must be positive".into());
        }
        if self.harvest.temperature.is_nan() || self.harvest.temperature < 0.0 {
            return bad("harvest.temperature must be >= 0".into());
        }
        if self.backend.kind == BackendKind::Http {
            if self.backend.model.is_empty() {
                return bad("backend.model is required for the http backend".into());
            }
            if self.backend.max_attempts == 0 {
                return bad("backend.max_attempts must be positive".into());
            }
            if self.backend.api_key_env.is_empty() {
                return bad("backend.api_key_env must name an environment variable".into());
            }
        }
        Ok(())
    }

    pub fn generation(&self) -> GenerationConfig {
        GenerationConfig {
            per_topic_target: self.generate.per_topic,
            icl_seed_count: self.generate.icl_seeds,
            icl_generated_count: self.generate.icl_generated,
            rng_seed: self.seed,
            max_parse_retries: self.generate.parse_retries,
            temperature: self.generate.temperature,
            max_tokens: self.generate.max_tokens,
        }
    }

    /// P1 or P2: training examples are rendered with the same template.
    pub fn training_strategy(&self) -> Result<StrategyKind, ConfigError> {
        match StrategyKind::parse(&self.harvest.strategy) {
            Some(k @ (StrategyKind::P1 | StrategyKind::P2)) => Ok(k),
            _ => {
                Err(ConfigError::Invalid(format!("harvest.strategy must be p1 or p2, got {:?}", self.harvest.strategy)))
            }
        }
    }

    /// Any culture-aware strategy.
    pub fn eval_strategy(&self) -> Result<StrategyKind, ConfigError> {
        match StrategyKind::parse(&self.score.strategy) {
            Some(k) if k != StrategyKind::Unaware => Ok(k),
            _ => Err(ConfigError::Invalid(format!(
                "score.strategy must be one of p1, p2, p3, p1p3, p2p3, got {:?}",
                self.score.strategy
            ))),
        }
    }

    pub fn selector(&self) -> Result<Selector, ConfigError> {
        Selector::parse(&self.select.selector).ok_or_else(|| {
            ConfigError::Invalid(format!("select.selector must be crqpc, cds or rds, got {:?}", self.select.selector))
        })
    }

    pub fn variants(&self) -> Result<Vec<Variant>, ConfigError> {
        if self.compose.variant.eq_ignore_ascii_case("both") {
            return Ok(vec![Variant::Joint, Variant::Specific]);
        }
        Variant::parse(&self.compose.variant).map(|v| vec![v]).ok_or_else(|| {
            ConfigError::Invalid(format!(
                "compose.variant must be joint, specific or both, got {:?}",
                self.compose.variant
            ))
        })
    }

    /// Profiles of the configured cultures in configured order, or the
    /// whole registry.
    pub fn cultures(&self, registry: &CultureRegistry) -> Result<Vec<CultureProfile>, ConfigError> {
        if self.harvest.cultures.is_empty() {
            return Ok(registry.profiles().to_vec());
        }
        let mut out: Vec<CultureProfile> = Vec::new();
        for c in &self.harvest.cultures {
            let p = registry
                .lookup(&c.trim().to_ascii_uppercase())
                .map_err(|e| ConfigError::Invalid(format!("harvest.cultures: {e}")))?;
            if out.iter().any(|o| o.code == p.code) {
                return Err(ConfigError::Invalid(format!("harvest.cultures lists {} twice", p.code)));
            }
            out.push(p.clone());
        }
        Ok(out)
    }

    pub fn eval_dir(&self) -> PathBuf {
        self.score.harvest.clone().unwrap_or_else(|| self.out_dir.join("eval"))
    }

    /// Hash of the effective configuration. The output directory is left
    /// out so identical runs into different directories hash the same.
    pub fn fingerprint(&self) -> String {
        let mut c = self.clone();
        c.out_dir = PathBuf::new();
        if c.score.harvest.as_deref().is_some_and(|h| h.starts_with(&self.out_dir)) {
            c.score.harvest = None;
        }
        let text = toml::to_string(&c).expect("config serializes");
        crate::io::sha256_hex(text.as_bytes())
    }
}

/// Codes of `profiles`, in order.
pub fn codes(profiles: &[CultureProfile]) -> Vec<CultureCode> {
    profiles.iter().map(|p| p.code).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(s: &[&str]) -> Vec<String> {
        s.iter().map(|a| a.to_string()).collect()
    }

    #[test]
    fn overrides_are_extracted() {
        let (rest, ov) =
            extract_overrides(args(&["harvest", "--harvest.concurrency", "8", "--seed", "3", "--backend.kind=mock"]))
                .unwrap();
        assert_eq!(rest, args(&["harvest", "--seed", "3"]));
        assert_eq!(ov, [("harvest.concurrency".into(), "8".into()), ("backend.kind".into(), "mock".into())]);
        assert!(extract_overrides(args(&["--a.b"])).is_err());
        assert!(extract_overrides(args(&["--a..b", "1"])).is_err());
    }

    #[test]
    fn literal_parsing() {
        assert_eq!(parse_literal("8"), Value::Integer(8));
        assert_eq!(parse_literal("0.5"), Value::Float(0.5));
        assert_eq!(parse_literal("true"), Value::Boolean(true));
        assert_eq!(parse_literal("p1"), Value::String("p1".into()));
        assert_eq!(parse_literal("\"8\""), Value::String("8".into()));
    }

    #[test]
    fn defaults_validate() {
        let c = PipelineConfig::load(None, &[]).unwrap();
        assert_eq!(c, PipelineConfig::default());
        assert_eq!(c.variants().unwrap().len(), 2);
    }

    #[test]
    fn file_paths_resolve_against_config_dir() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("run.toml");
        std::fs::write(&cfg, "seed = 5\nout_dir = \"results\"\n[generate]\nper_topic = 2\n").unwrap();
        let c = PipelineConfig::load(Some(&cfg), &[("generate.per_topic".into(), "3".into())]).unwrap();
        assert_eq!(c.out_dir, dir.path().join("results"));
        assert_eq!(c.seed, 5);
        assert_eq!(c.generate.per_topic, 3);
        let c = PipelineConfig::load(Some(&cfg), &[("out_dir".into(), "elsewhere".into())]).unwrap();
        assert_eq!(c.out_dir, PathBuf::from("elsewhere"));
    }

    #[test]
    fn rejects_bad_values() {
        let bad = |k: &str, v: &str| PipelineConfig::load(None, &[(k.into(), v.into())]).unwrap_err();
        assert!(matches!(bad("harvest.strategy", "p3"), ConfigError::Invalid(_)));
        assert!(matches!(bad("select.selector", "best"), ConfigError::Invalid(_)));
        assert!(matches!(bad("compose.variant", "mixed"), ConfigError::Invalid(_)));
        assert!(matches!(bad("harvest.concurrency", "0"), ConfigError::Invalid(_)));
        assert!(matches!(bad("generate.nonsense", "1"), ConfigError::Parse(_)));
        assert!(matches!(bad("backend.kind", "carrier-pigeon"), ConfigError::Parse(_)));
        assert!(matches!(bad("corpus.questions", "/no/such/file.jsonl"), ConfigError::Invalid(_)));
        assert!(matches!(bad("backend.kind", "http"), ConfigError::Invalid(_)));
    }

    #[test]
    fn culture_list_override() {
        let c = PipelineConfig::load(None, &[("harvest.cultures".into(), "USA, chn,IND".into())]).unwrap();
        let reg = CultureRegistry::builtin();
        let codes: Vec<String> = c.cultures(&reg).unwrap().iter().map(|p| p.code.to_string()).collect();
        assert_eq!(codes, ["USA", "CHN", "IND"]);
        let c = PipelineConfig::load(None, &[("harvest.cultures".into(), "USA,XYZ".into())]).unwrap();
        assert!(c.cultures(&reg).is_err());
    }

    #[test]
    fn fingerprint_ignores_out_dir() {
        let a = PipelineConfig::load(None, &[("out_dir".into(), "a".into())]).unwrap();
        let b = PipelineConfig::load(None, &[("out_dir".into(), "b".into())]).unwrap();
        let c = PipelineConfig::load(None, &[("seed".into(), "1".into())]).unwrap();
        assert_eq!(a.fingerprint(), b.fingerprint());
        assert_ne!(a.fingerprint(), c.fingerprint());
    }
}
