//! Self-alignment example retrieval: the `k` same-topic answered questions
//! most similar to the test question under chrF++.

use alloc::vec::Vec;

use super::{chrf_pp, AnsweredQuestion, PromptError};
use crate::survey::SurveyQuestion;

/// Ranks `candidates` by `chrf_pp(candidate.text, test.text)` descending,
/// ties by candidate id ascending, and returns the top `k`.
pub fn retrieve_icl(
    test: &SurveyQuestion,
    candidates: &[AnsweredQuestion],
    k: usize,
) -> Result<Vec<AnsweredQuestion>, PromptError> {
    for c in candidates {
        if c.question.topic_id != test.topic_id {
            return Err(PromptError::TopicMismatch(c.question.id.clone()));
        }
        if c.question.id == test.id {
            return Err(PromptError::SelfCandidate(c.question.id.clone()));
        }
    }
    if candidates.len() < k {
        return Err(PromptError::InsufficientCandidates { needed: k, available: candidates.len() });
    }
    let mut scored: Vec<(f64, &AnsweredQuestion)> =
        candidates.iter().map(|c| (chrf_pp(&c.question.text, &test.text), c)).collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.question.id.cmp(&b.1.question.id)));
    Ok(scored.into_iter().take(k).map(|(_, c)| c.clone()).collect())
}

/// Same-topic candidates for `test` drawn from `pool`, excluding `test`.
pub fn icl_candidates(test: &SurveyQuestion, pool: &[AnsweredQuestion]) -> Vec<AnsweredQuestion> {
    pool.iter().filter(|a| a.question.topic_id == test.topic_id && a.question.id != test.id).cloned().collect()
}
