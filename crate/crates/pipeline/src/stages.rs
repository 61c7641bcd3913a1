//! The pipeline stages. Each reads only its configuration and the
//! persisted artifacts of earlier stages, and writes its own directory
//! under the output root with a manifest.
//!
//! Layout:
//!   generate/  questions.jsonl rejections.jsonl summary.json
//!   harvest/   questions.jsonl plan.json records.jsonl failures.jsonl records/<scenario>.jsonl
//!   eval/      same as harvest/, over the seed questions
//!   select/    <selector>.jsonl summary.json
//!   compose/   joint.jsonl specific/<CODE>.jsonl <variant>.manifest.json distribution.{csv,txt}
//!   score/     report.txt scores.csv model_matrix.csv reference_matrix.csv correlation.csv

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use cultalign_core::forge::QuestionPool;
use cultalign_core::gateway::fnv1a64;
use cultalign_core::harvest::{HarvestPlan, HarvestRecord, HarvestResult, StrategyPrompts};
use cultalign_core::metrics::alignment_report;
use cultalign_core::prompt::{icl_candidates, render, render_generation, retrieve_icl, AnsweredQuestion, ICL_EXAMPLES};
use cultalign_core::select::{select_cds, select_crqpc, select_rds, SelectedPair, SelectionInput, Selector};
use cultalign_core::sft::{compose, distribution_stats, to_activation_example};
use cultalign_core::survey::topic_name;
use cultalign_core::{
    ChatBackend, CultureCode, GatewayError, MockBackend, PromptStrategy, RenderedPrompt, StrategyKind, SurveyCorpus,
    SurveyQuestion,
};
use serde::{Deserialize, Serialize};

use crate::config::{codes, BackendKind, PipelineConfig};
use crate::corpus::{load_corpus, CorpusSources, SAMPLE_ANSWERS, SAMPLE_CULTURES, SAMPLE_QUESTIONS};
use crate::http::HttpBackend;
use crate::manifest::Tracked;
use crate::runner::{generate_topics, harvest_checkpointed};

pub fn build_backend(config: &PipelineConfig) -> Result<Box<dyn ChatBackend>, GatewayError> {
    Ok(match config.backend.kind {
        BackendKind::Mock => Box::new(MockBackend::new(config.backend.mock_seed)),
        BackendKind::Http => Box::new(HttpBackend::from_env(config.backend.http())?),
    })
}

/// Which questions a harvest covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HarvestTarget {
    /// Generated questions, for building training data.
    Generated,
    /// Seed questions with survey references, for scoring.
    Seeds,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HarvestMeta {
    pub strategy: StrategyKind,
    pub cultures: Vec<CultureCode>,
    pub questions: usize,
    pub parse_retries: u32,
    pub max_tokens: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopicSummary {
    pub topic_id: u8,
    pub topic: String,
    pub accepted: usize,
    pub rejected: usize,
    pub calls: usize,
    pub capped: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CultureSelection {
    pub culture: CultureCode,
    pub unmasked: usize,
    pub crqpc: usize,
    pub cds: usize,
    pub selected: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectSummary {
    pub selector: Selector,
    pub strategy: StrategyKind,
    pub cultures: Vec<CultureSelection>,
}

pub struct Stages<'a> {
    pub config: &'a PipelineConfig,
    fingerprint: String,
}

fn corpus_sources(config: &PipelineConfig) -> CorpusSources<'_> {
    CorpusSources {
        questions: config.corpus.questions.as_deref(),
        answers: config.corpus.answers.as_deref(),
        cultures: config.corpus.cultures.as_deref(),
    }
}

impl<'a> Stages<'a> {
    pub fn new(config: &'a PipelineConfig) -> Self {
        Self { config, fingerprint: config.fingerprint() }
    }

    fn out(&self, rel: &str) -> PathBuf {
        self.config.out_dir.join(rel)
    }

    fn tracked(&self) -> Tracked {
        Tracked::new(&self.config.out_dir)
    }

    fn corpus(&self, t: &mut Tracked) -> Result<SurveyCorpus> {
        let c = &self.config.corpus;
        for (path, sample, name) in [
            (&c.questions, SAMPLE_QUESTIONS, "<sample>/questions.jsonl"),
            (&c.answers, SAMPLE_ANSWERS, "<sample>/answers.jsonl"),
            (&c.cultures, SAMPLE_CULTURES, "<sample>/cultures.jsonl"),
        ] {
            match path {
                Some(p) => {
                    t.read(p)?;
                }
                None => t.note_input(name, sample.as_bytes()),
            }
        }
        load_corpus(&corpus_sources(self.config)).context("loading corpus")
    }

    fn finish(&self, t: Tracked, stage: &str, backend: Option<&dyn ChatBackend>, dir: &Path) -> Result<()> {
        t.finish(stage, &self.fingerprint, backend.map(|b| b.id()), self.config.seed, dir)?;
        Ok(())
    }

    pub fn generate(&self, backend: &dyn ChatBackend) -> Result<String> {
        let dir = self.out("generate");
        let mut t = self.tracked();
        let corpus = self.corpus(&mut t)?;
        let mut pool = QuestionPool::from_seeds(corpus.questions());
        let topics = corpus.topics();
        let outcomes =
            generate_topics(&mut pool, &topics, &self.config.generation(), backend, self.config.harvest.concurrency)?;
        let mut questions = Vec::new();
        let mut rejections = Vec::new();
        let mut summary = Vec::new();
        for o in outcomes {
            summary.push(TopicSummary {
                topic_id: o.topic_id,
                topic: topic_name(o.topic_id).unwrap_or("?").to_string(),
                accepted: o.accepted.len(),
                rejected: o.rejected.len(),
                calls: o.calls,
                capped: o.capped,
            });
            questions.extend(o.accepted);
            rejections.extend(o.rejected);
        }
        t.write_jsonl(&dir.join("questions.jsonl"), &questions)?;
        t.write_jsonl(&dir.join("rejections.jsonl"), &rejections)?;
        t.write_json(&dir.join("summary.json"), &summary)?;
        self.finish(t, "generate", Some(backend), &dir)?;
        let capped: Vec<String> = summary.iter().filter(|s| s.capped).map(|s| s.topic_id.to_string()).collect();
        let mut msg = format!(
            "generate: {} questions accepted, {} rejected -> {}",
            questions.len(),
            rejections.len(),
            dir.display()
        );
        if !capped.is_empty() {
            msg.push_str(&format!("\nwarning: call cap reached before target for topics {}", capped.join(", ")));
        }
        Ok(msg)
    }

    pub fn harvest_dir(&self, target: HarvestTarget) -> PathBuf {
        match target {
            HarvestTarget::Generated => self.out("harvest"),
            HarvestTarget::Seeds => self.config.eval_dir(),
        }
    }

    pub fn harvest(&self, backend: &dyn ChatBackend, target: HarvestTarget) -> Result<String> {
        let dir = self.harvest_dir(target);
        let mut t = self.tracked();
        let corpus = self.corpus(&mut t)?;
        let (questions, strategy) = match target {
            HarvestTarget::Generated => {
                let q: Vec<SurveyQuestion> = t.read_jsonl(&self.out("generate/questions.jsonl"))?;
                (q, self.config.training_strategy()?)
            }
            HarvestTarget::Seeds => (corpus.questions().to_vec(), self.config.eval_strategy()?),
        };
        if questions.is_empty() {
            bail!("no questions to harvest (is {} empty?)", self.out("generate/questions.jsonl").display());
        }
        let cultures = self.config.cultures(corpus.cultures())?;
        let mut prompts = StrategyPrompts::new(corpus.cultures().clone(), strategy);
        if strategy.needs_icl() {
            prompts = prompts.with_icl_pool(reference_pool(&corpus, &codes(&cultures))?);
        }
        let mut plan = HarvestPlan::new(questions, cultures, strategy);
        plan.parse_retry_cap = self.config.harvest.parse_retries;
        plan.concurrency_cap = self.config.harvest.concurrency;
        plan.temperature = self.config.harvest.temperature;
        plan.max_tokens = self.config.harvest.max_tokens;
        let (records, stats) = harvest_checkpointed(&plan, &prompts, backend, &dir.join("records"))?;
        for s in plan.scenarios() {
            t.note_output(&crate::runner::checkpoint_path(&dir.join("records"), s))?;
        }
        let cultures = codes(&plan.cultures);
        let result = HarvestResult::from_records(&plan.questions, &cultures, &records)?;
        let meta = HarvestMeta {
            strategy,
            cultures,
            questions: plan.questions.len(),
            parse_retries: plan.parse_retry_cap,
            max_tokens: plan.max_tokens,
        };
        t.write_jsonl(&dir.join("questions.jsonl"), &plan.questions)?;
        t.write_json(&dir.join("plan.json"), &meta)?;
        t.write_jsonl(&dir.join("records.jsonl"), &records)?;
        t.write_jsonl(&dir.join("failures.jsonl"), &result.failures)?;
        let stage = match target {
            HarvestTarget::Generated => "harvest",
            HarvestTarget::Seeds => "harvest-eval",
        };
        self.finish(t, stage, Some(backend), &dir)?;
        Ok(format!(
            "{stage}: {} records ({} reused, {} answered, {} unparsed) -> {}",
            records.len(),
            stats.reused,
            stats.answered,
            result.failures.len(),
            dir.display()
        ))
    }

    fn load_harvest(&self, t: &mut Tracked, dir: &Path) -> Result<(Vec<SurveyQuestion>, HarvestMeta, HarvestResult)> {
        let questions: Vec<SurveyQuestion> = t.read_jsonl(&dir.join("questions.jsonl"))?;
        let meta: HarvestMeta = t.read_json(&dir.join("plan.json"))?;
        let records: Vec<HarvestRecord> = t.read_jsonl(&dir.join("records.jsonl"))?;
        let result = HarvestResult::from_records(&questions, &meta.cultures, &records)
            .with_context(|| format!("{}", dir.join("records.jsonl").display()))?;
        Ok((questions, meta, result))
    }

    pub fn select(&self) -> Result<String> {
        let dir = self.out("select");
        let mut t = self.tracked();
        let selector = self.config.selector()?;
        let (questions, meta, result) = self.load_harvest(&mut t, &self.out("harvest"))?;
        let mut pairs: Vec<SelectedPair> = Vec::new();
        let mut per_culture = Vec::new();
        for c in &meta.cultures {
            let input = SelectionInput::new(&questions, &result.unaware, &result.aware[c])?;
            let crqpc = select_crqpc(&input);
            let cds = select_cds(&input);
            let chosen = match selector {
                Selector::Crqpc => crqpc.clone(),
                Selector::Cds => cds.clone(),
                Selector::Rds => select_rds(&input, crqpc.len(), culture_seed(self.config.seed, *c))?,
            };
            per_culture.push(CultureSelection {
                culture: *c,
                unmasked: input.unmasked_count(),
                crqpc: crqpc.len(),
                cds: cds.len(),
                selected: chosen.len(),
            });
            pairs.extend(chosen);
        }
        let summary = SelectSummary { selector, strategy: meta.strategy, cultures: per_culture };
        let file = dir.join(format!("{selector}.jsonl"));
        t.write_jsonl(&file, &pairs)?;
        t.write_json(&dir.join("summary.json"), &summary)?;
        self.finish(t, "select", None, &dir)?;
        Ok(format!("select: {} {selector} pairs -> {}", pairs.len(), file.display()))
    }

    pub fn compose(&self) -> Result<String> {
        let dir = self.out("compose");
        let mut t = self.tracked();
        let corpus = self.corpus(&mut t)?;
        let selector = self.config.selector()?;
        let summary: SelectSummary = t.read_json(&self.out("select/summary.json"))?;
        let pairs_path = self.out(&format!("select/{selector}.jsonl"));
        let pairs_text = t.read(&pairs_path)?;
        let pairs: Vec<SelectedPair> = crate::io::parse_jsonl(&pairs_text, &pairs_path)?;
        let source_id = crate::io::sha256_hex(pairs_text.as_bytes());
        let examples = pairs
            .iter()
            .map(|p| to_activation_example(p, summary.strategy, corpus.cultures()))
            .collect::<Result<Vec<_>, _>>()?;
        let mut lines = Vec::new();
        for variant in self.config.variants()? {
            let ds = compose(&examples, variant, self.config.seed, &source_id)
                .with_context(|| format!("composing {} dataset from {}", variant.as_str(), pairs_path.display()))?;
            for (rel, body) in &ds.files {
                t.write(&dir.join(rel), body.as_bytes())?;
            }
            t.write_json(&dir.join(format!("{}.manifest.json", variant.as_str())), &ds.manifest)?;
            lines.push(format!("{} {} lines", variant.as_str(), ds.manifest.total));
        }
        let stats = distribution_stats(&examples);
        t.write(&dir.join("distribution.csv"), stats.to_csv().as_bytes())?;
        t.write(&dir.join("distribution.txt"), stats.to_table().as_bytes())?;
        self.finish(t, "compose", None, &dir)?;
        Ok(format!("compose: {} -> {}", lines.join(", "), dir.display()))
    }

    pub fn score(&self) -> Result<String> {
        let dir = self.out("score");
        let mut t = self.tracked();
        let corpus = self.corpus(&mut t)?;
        let (questions, meta, result) = self.load_harvest(&mut t, &self.config.eval_dir())?;
        let ids: Vec<String> = questions.iter().map(|q| q.id.clone()).collect();
        let model: Vec<_> = meta.cultures.iter().map(|c| result.aware[c].clone()).collect();
        let reference =
            meta.cultures.iter().map(|c| corpus.reference_vector(*c, &ids)).collect::<Result<Vec<_>, _>>()?;
        let report = alignment_report(&model, &reference, &questions)?;
        let table = report.to_table();
        t.write(&dir.join("report.txt"), table.as_bytes())?;
        t.write(&dir.join("scores.csv"), report.scores_csv().as_bytes())?;
        t.write(&dir.join("correlation.csv"), report.correlation_csv().as_bytes())?;
        if let (Some(m), Some(r)) = (&report.model_matrix, &report.reference_matrix) {
            t.write(&dir.join("model_matrix.csv"), m.to_csv().as_bytes())?;
            t.write(&dir.join("reference_matrix.csv"), r.to_csv().as_bytes())?;
        }
        self.finish(t, "score", None, &dir)?;
        Ok(format!("{table}score: -> {}", dir.display()))
    }

    /// Renders one prompt: a strategy (`unaware`, `p1` ... `p2p3`) for a
    /// corpus question, or `generate` for a topic id.
    pub fn dump_prompt(&self, what: &str, target: &str, culture: Option<&str>) -> Result<RenderedPrompt> {
        let mut t = self.tracked();
        let corpus = self.corpus(&mut t)?;
        if what.eq_ignore_ascii_case("generate") {
            let topic: u8 = target.parse().map_err(|_| anyhow!("topic id expected, got {target:?}"))?;
            let name = topic_name(topic).ok_or_else(|| anyhow!("unknown topic {topic}"))?;
            let seeds: Vec<SurveyQuestion> =
                corpus.questions().iter().filter(|q| q.topic_id == topic).cloned().collect();
            if seeds.len() < ICL_EXAMPLES {
                bail!("topic {topic} has {} seed questions, {ICL_EXAMPLES} needed", seeds.len());
            }
            return Ok(render_generation(name, &seeds[..ICL_EXAMPLES])?);
        }
        let kind = StrategyKind::parse(what).ok_or_else(|| anyhow!("unknown strategy {what:?}"))?;
        let question = corpus.question(target).ok_or_else(|| anyhow!("no question {target:?} in corpus"))?;
        let profile = match culture {
            Some(c) => Some(corpus.cultures().lookup(&c.to_ascii_uppercase())?),
            None => None,
        };
        let icl = if kind.needs_icl() {
            let code = profile.map(|p| p.code).ok_or_else(|| anyhow!("{kind} needs a culture"))?;
            let pool = reference_pool(&corpus, &[code])?;
            Some(retrieve_icl(question, &icl_candidates(question, &pool[&code]), ICL_EXAMPLES)?)
        } else {
            None
        };
        Ok(render(&PromptStrategy::new(kind, profile, corpus.cultures(), icl)?, question)?)
    }
}

/// Per culture, the seed questions answered with the culture's majority
/// survey answer. Questions without answers are left out.
pub fn reference_pool(
    corpus: &SurveyCorpus,
    cultures: &[CultureCode],
) -> Result<BTreeMap<CultureCode, Vec<AnsweredQuestion>>> {
    let ids: Vec<String> = corpus.questions().iter().map(|q| q.id.clone()).collect();
    let mut out = BTreeMap::new();
    for &c in cultures {
        let v = corpus.reference_vector(c, &ids)?;
        let answered = corpus
            .questions()
            .iter()
            .zip(&v.answers)
            .filter_map(|(q, a)| Some(AnsweredQuestion { question: q.clone(), answer: (*a)? }))
            .collect();
        out.insert(c, answered);
    }
    Ok(out)
}

fn culture_seed(seed: u64, culture: CultureCode) -> u64 {
    seed ^ fnv1a64(culture.as_str().as_bytes())
}

/// Every stage in order against one backend.
pub fn pipeline(config: &PipelineConfig, backend: &dyn ChatBackend) -> Result<Vec<String>> {
    let s = Stages::new(config);
    Ok(vec![
        s.generate(backend)?,
        s.harvest(backend, HarvestTarget::Generated)?,
        s.select()?,
        s.compose()?,
        s.harvest(backend, HarvestTarget::Seeds)?,
        s.score()?,
    ])
}
