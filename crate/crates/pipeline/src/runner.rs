//! Threaded execution: harvest work items under a concurrency cap with
//! per-scenario checkpoints, and topic-parallel question generation.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Mutex;

use cultalign_core::forge::{generate_topic_questions, ForgeError, GenerationConfig, QuestionPool, TopicOutcome};
use cultalign_core::harvest::{answer_item, HarvestPlan, HarvestRecord, PromptSource, Scenario};
use cultalign_core::{ChatBackend, CultureCode, GatewayError, StrategyKind};

use crate::io::{self, IoError};

/// Runs `f` over `0..n` on at most `cap` threads. Stops handing out new
/// indices after the first error. Returns the successes by index and the
/// error with the lowest index, if any.
pub fn run_bounded<T: Send, E: Send>(
    n: usize,
    cap: usize,
    f: impl Fn(usize) -> Result<T, E> + Sync,
) -> (Vec<Option<T>>, Option<(usize, E)>) {
    let next = AtomicUsize::new(0);
    let stop = AtomicBool::new(false);
    let slots: Vec<Mutex<Option<T>>> = (0..n).map(|_| Mutex::new(None)).collect();
    let errors: Mutex<Vec<(usize, E)>> = Mutex::new(Vec::new());
    std::thread::scope(|s| {
        for _ in 0..cap.clamp(1, n.max(1)) {
            s.spawn(|| loop {
                if stop.load(Ordering::Relaxed) {
                    break;
                }
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= n {
                    break;
                }
                match f(i) {
                    Ok(v) => *slots[i].lock().expect("slot lock") = Some(v),
                    Err(e) => {
                        stop.store(true, Ordering::Relaxed);
                        errors.lock().expect("error lock").push((i, e));
                    }
                }
            });
        }
    });
    let results = slots.into_iter().map(|m| m.into_inner().expect("slot lock")).collect();
    let err = errors.into_inner().expect("error lock").into_iter().min_by_key(|(i, _)| *i);
    (results, err)
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Io(#[from] IoError),
    #[error("{message}")]
    Backend { message: String, source: GatewayError },
    #[error("{0}")]
    Plan(String),
    #[error("topic {topic}: {source}")]
    Forge { topic: u8, source: ForgeError },
}

/// File name stem of a scenario's checkpoint.
pub fn scenario_name(s: Scenario) -> String {
    match s {
        Scenario::Unaware => "unaware".into(),
        Scenario::Aware(c) => c.to_string(),
    }
}

pub fn checkpoint_path(dir: &Path, s: Scenario) -> PathBuf {
    dir.join(format!("{}.jsonl", scenario_name(s)))
}

fn partial_path(dir: &Path, s: Scenario) -> PathBuf {
    dir.join(format!("{}.partial.jsonl", scenario_name(s)))
}

type Key = (String, Option<CultureCode>, StrategyKind);

fn key(r: &HarvestRecord) -> Key {
    (r.question_id.clone(), r.culture, r.strategy)
}

/// Records already on disk for `s`, from a finished checkpoint or a
/// partial one left by an interrupted run.
fn load_existing(dir: &Path, s: Scenario) -> Result<BTreeMap<Key, HarvestRecord>, IoError> {
    let mut out = BTreeMap::new();
    for p in [checkpoint_path(dir, s), partial_path(dir, s)] {
        if p.is_file() {
            for r in io::read_jsonl::<HarvestRecord>(&p)? {
                out.entry(key(&r)).or_insert(r);
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Default, Clone, PartialEq, Eq)]
pub struct HarvestStats {
    pub reused: usize,
    pub answered: usize,
}

/// Harvests every work item of `plan`, one scenario at a time, with up to
/// `plan.concurrency_cap` requests in flight. Each finished scenario is
/// written to `dir/<scenario>.jsonl`; on a backend failure the answers
/// gathered so far go to `dir/<scenario>.partial.jsonl` and are reused on
/// the next run, as are finished checkpoints whose records match by
/// (question, culture, strategy). Returns all records in canonical order.
pub fn harvest_checkpointed(
    plan: &HarvestPlan,
    source: &dyn PromptSource,
    backend: &dyn ChatBackend,
    dir: &Path,
) -> Result<(Vec<HarvestRecord>, HarvestStats), RunError> {
    plan.validate().map_err(|e| RunError::Plan(e.to_string()))?;
    let mut all = Vec::with_capacity(plan.questions.len() * (1 + plan.cultures.len()));
    let mut stats = HarvestStats::default();
    for scenario in plan.scenarios() {
        let mut existing = load_existing(dir, scenario)?;
        let strategy = plan.strategy_for(scenario);
        let mut done: Vec<Option<HarvestRecord>> =
            plan.questions.iter().map(|q| existing.remove(&(q.id.clone(), scenario.culture(), strategy))).collect();
        stats.reused += done.iter().flatten().count();
        let todo: Vec<usize> = (0..done.len()).filter(|&i| done[i].is_none()).collect();
        let (fresh, err) = run_bounded(todo.len(), plan.concurrency_cap, |k| {
            answer_item(plan, source, backend, scenario, &plan.questions[todo[k]])
        });
        for (k, r) in fresh.into_iter().enumerate() {
            if let Some(r) = r {
                stats.answered += 1;
                done[todo[k]] = Some(r);
            }
        }
        if let Some((k, e)) = err {
            let partial: Vec<HarvestRecord> = done.into_iter().flatten().collect();
            let p = partial_path(dir, scenario);
            io::write_jsonl(&p, &partial)?;
            return Err(RunError::Backend {
                message: format!(
                    "question {} ({}): {e}; {} answers for this scenario saved to {}",
                    plan.questions[todo[k]].id,
                    scenario_name(scenario),
                    partial.len(),
                    p.display()
                ),
                source: e,
            });
        }
        let records: Vec<HarvestRecord> = done.into_iter().map(|r| r.expect("all items answered")).collect();
        io::write_jsonl(&checkpoint_path(dir, scenario), &records)?;
        let p = partial_path(dir, scenario);
        if p.exists() {
            std::fs::remove_file(&p).map_err(|source| IoError::Write { path: p, source })?;
        }
        all.extend(records);
    }
    Ok((all, stats))
}

/// Generates questions for `topics`, at most `cap` topics at a time. Each
/// topic owns its slice of the pool, so results do not depend on
/// scheduling. Outcomes are returned in `topics` order.
pub fn generate_topics(
    pool: &mut QuestionPool,
    topics: &[u8],
    config: &GenerationConfig,
    backend: &dyn ChatBackend,
    cap: usize,
) -> Result<Vec<TopicOutcome>, RunError> {
    let parts: Vec<Mutex<QuestionPool>> = topics.iter().map(|&t| Mutex::new(pool.take_topic(t))).collect();
    let (outcomes, err) = run_bounded(topics.len(), cap, |i| {
        let mut part = parts[i].lock().expect("pool lock");
        generate_topic_questions(&mut part, topics[i], config, backend)
    });
    for p in parts {
        pool.merge(p.into_inner().expect("pool lock"));
    }
    if let Some((i, source)) = err {
        return Err(RunError::Forge { topic: topics[i], source });
    }
    Ok(outcomes.into_iter().map(|o| o.expect("no error means all ran")).collect())
}
