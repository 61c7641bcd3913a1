//! Activation-pair selection: shifted answers (CRQPC), consistent answers
//! (CDS) and uniform random pairs (RDS).

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::culture::CultureCode;
use crate::survey::{ResponseVector, SurveyQuestion};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Selector {
    Crqpc,
    Cds,
    Rds,
}

impl Selector {
    pub const ALL: [Selector; 3] = [Self::Crqpc, Self::Cds, Self::Rds];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Crqpc => "crqpc",
            Self::Cds => "cds",
            Self::Rds => "rds",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.as_str().eq_ignore_ascii_case(s))
    }
}

impl fmt::Display for Selector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SelectError {
    Misaligned(&'static str),
    MissingCulture,
    TooMany { requested: usize, available: usize },
}

impl fmt::Display for SelectError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Misaligned(m) => write!(f, "selection input misaligned: {m}"),
            Self::MissingCulture => f.write_str("aware vector has no culture"),
            Self::TooMany { requested, available } => {
                write!(f, "cannot sample {requested} pairs from {available} unmasked positions")
            }
        }
    }
}

impl core::error::Error for SelectError {}

/// Questions with the unaware answers and one culture's aware answers.
#[derive(Debug, Clone, Copy)]
pub struct SelectionInput<'a> {
    questions: &'a [SurveyQuestion],
    unaware: &'a ResponseVector,
    aware: &'a ResponseVector,
    culture: CultureCode,
}

impl<'a> SelectionInput<'a> {
    pub fn new(
        questions: &'a [SurveyQuestion],
        unaware: &'a ResponseVector,
        aware: &'a ResponseVector,
    ) -> Result<Self, SelectError> {
        let culture = aware.culture.ok_or(SelectError::MissingCulture)?;
        if unaware.len() != questions.len() || aware.len() != questions.len() {
            return Err(SelectError::Misaligned("lengths differ"));
        }
        let ids_match = |v: &ResponseVector| v.question_ids.iter().zip(questions).all(|(id, q)| *id == q.id);
        if !ids_match(unaware) || !ids_match(aware) {
            return Err(SelectError::Misaligned("question ids differ"));
        }
        Ok(Self { questions, unaware, aware, culture })
    }

    pub fn culture(&self) -> CultureCode {
        self.culture
    }

    /// Positions where both answers exist, with (unaware, aware) codes.
    fn unmasked(&self) -> impl Iterator<Item = (usize, u32, u32)> + '_ {
        self.unaware
            .answers
            .iter()
            .zip(&self.aware.answers)
            .enumerate()
            .filter_map(|(i, (u, a))| Some((i, (*u)?, (*a)?)))
    }

    pub fn unmasked_count(&self) -> usize {
        self.unmasked().count()
    }

    fn pair(&self, i: usize, answer: u32, selector: Selector) -> SelectedPair {
        SelectedPair { question: self.questions[i].clone(), culture: self.culture, answer, selector }
    }

    fn by_predicate(&self, shifted: bool, selector: Selector) -> Vec<SelectedPair> {
        self.unmasked().filter(|&(_, u, a)| (u != a) == shifted).map(|(i, _, a)| self.pair(i, a, selector)).collect()
    }
}

/// A question paired with the culture-aware answer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectedPair {
    pub question: SurveyQuestion,
    pub culture: CultureCode,
    pub answer: u32,
    pub selector: Selector,
}

impl SelectedPair {
    pub fn question_id(&self) -> &String {
        &self.question.id
    }
}

/// Unmasked positions whose aware answer differs from the unaware one, in
/// question order.
pub fn select_crqpc(input: &SelectionInput<'_>) -> Vec<SelectedPair> {
    input.by_predicate(true, Selector::Crqpc)
}

/// Unmasked positions where both answers agree, in question order.
pub fn select_cds(input: &SelectionInput<'_>) -> Vec<SelectedPair> {
    input.by_predicate(false, Selector::Cds)
}

/// `n` distinct unmasked positions drawn uniformly without replacement,
/// returned in question order.
pub fn select_rds(input: &SelectionInput<'_>, n: usize, rng_seed: u64) -> Result<Vec<SelectedPair>, SelectError> {
    let pool: Vec<(usize, u32, u32)> = input.unmasked().collect();
    let picked = sample_sorted(pool.len(), n, rng_seed)?;
    Ok(picked.into_iter().map(|k| input.pair(pool[k].0, pool[k].2, Selector::Rds)).collect())
}

/// CDS down-sampled to `n` pairs, for size-matched comparisons. Returns all
/// of CDS when it has `n` or fewer pairs.
pub fn select_cds_matched(input: &SelectionInput<'_>, n: usize, rng_seed: u64) -> Vec<SelectedPair> {
    let cds = select_cds(input);
    if cds.len() <= n {
        return cds;
    }
    let picked = sample_sorted(cds.len(), n, rng_seed).expect("n < len checked");
    picked.into_iter().map(|k| cds[k].clone()).collect()
}

fn sample_sorted(len: usize, n: usize, rng_seed: u64) -> Result<Vec<usize>, SelectError> {
    if n > len {
        return Err(SelectError::TooMany { requested: n, available: len });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut picked = index::sample(&mut rng, len, n).into_vec();
    picked.sort_unstable();
    Ok(picked)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::survey::{Origin, QuestionOption};
    use alloc::collections::BTreeSet;
    use alloc::format;
    use alloc::vec;
    use proptest::prelude::*;

    fn questions(n: usize) -> Vec<SurveyQuestion> {
        (0..n)
            .map(|i| {
                let opts = (1..=4).map(|c| QuestionOption::new(c, "x")).collect();
                SurveyQuestion::new(format!("Q{i}"), 1, "q?", opts, Origin::Generated).unwrap()
            })
            .collect()
    }

    fn vector(qs: &[SurveyQuestion], culture: Option<&str>, answers: &[Option<u32>]) -> ResponseVector {
        ResponseVector::new(
            culture.map(|c| CultureCode::new(c).unwrap()),
            qs.iter().map(|q| q.id.clone()).collect(),
            answers.to_vec(),
        )
        .unwrap()
    }

    fn positions(pairs: &[SelectedPair]) -> Vec<String> {
        pairs.iter().map(|p| p.question.id.clone()).collect()
    }

    #[test]
    fn single_shift() {
        let qs = questions(3);
        let o = vector(&qs, None, &[Some(1), Some(2), Some(3)]);
        let oc = vector(&qs, Some("CHN"), &[Some(1), Some(3), Some(3)]);
        let input = SelectionInput::new(&qs, &o, &oc).unwrap();
        let crqpc = select_crqpc(&input);
        assert_eq!(positions(&crqpc), ["Q1"]);
        assert_eq!(crqpc[0].answer, 3);
        assert_eq!(positions(&select_cds(&input)), ["Q0", "Q2"]);
    }

    #[test]
    fn full_consistency_and_disjoint() {
        let qs = questions(3);
        let o = vector(&qs, None, &[Some(1), Some(2), Some(3)]);
        let same = vector(&qs, Some("USA"), &[Some(1), Some(2), Some(3)]);
        let diff = vector(&qs, Some("USA"), &[Some(2), Some(3), Some(4)]);
        assert!(select_crqpc(&SelectionInput::new(&qs, &o, &same).unwrap()).is_empty());
        assert!(select_cds(&SelectionInput::new(&qs, &o, &diff).unwrap()).is_empty());
    }

    #[test]
    fn rds_edges() {
        let qs = questions(4);
        let o = vector(&qs, None, &[Some(1), None, Some(3), Some(4)]);
        let oc = vector(&qs, Some("USA"), &[Some(2), Some(2), Some(3), None]);
        let input = SelectionInput::new(&qs, &o, &oc).unwrap();
        assert_eq!(positions(&select_rds(&input, 2, 1).unwrap()), ["Q0", "Q2"]);
        assert!(select_rds(&input, 0, 1).unwrap().is_empty());
        assert_eq!(select_rds(&input, 3, 1), Err(SelectError::TooMany { requested: 3, available: 2 }));
    }

    #[test]
    fn input_checks() {
        let qs = questions(2);
        let o = vector(&qs, None, &[Some(1), Some(2)]);
        assert_eq!(SelectionInput::new(&qs, &o, &o).err(), Some(SelectError::MissingCulture));
        let short = vector(&qs[..1], Some("USA"), &[Some(1)]);
        assert!(matches!(SelectionInput::new(&qs, &o, &short), Err(SelectError::Misaligned(_))));
    }

    #[test]
    fn matched_cds_size() {
        let qs = questions(10);
        let o = vector(&qs, None, &[Some(1); 10]);
        let mut a = vec![Some(1); 10];
        a[3] = Some(2);
        a[7] = Some(4);
        let oc = vector(&qs, Some("DEU"), &a);
        let input = SelectionInput::new(&qs, &o, &oc).unwrap();
        let n = select_crqpc(&input).len();
        let cds = select_cds_matched(&input, n, 5);
        assert_eq!(cds.len(), 2);
        assert_eq!(cds, select_cds_matched(&input, n, 5));
        assert_eq!(select_cds_matched(&input, 100, 5).len(), 8);
    }

    fn answers() -> impl Strategy<Value = Vec<(Option<u32>, Option<u32>)>> {
        proptest::collection::vec(
            (proptest::option::weighted(0.9, 1u32..=4), proptest::option::weighted(0.9, 1u32..=4)),
            0..40,
        )
    }

    proptest! {
        #[test]
        fn partition_and_rds(pairs in answers(), seed in any::<u64>()) {
            let qs = questions(pairs.len());
            let o = vector(&qs, None, &pairs.iter().map(|p| p.0).collect::<Vec<_>>());
            let oc = vector(&qs, Some("BRA"), &pairs.iter().map(|p| p.1).collect::<Vec<_>>());
            let input = SelectionInput::new(&qs, &o, &oc).unwrap();
            let crqpc: BTreeSet<_> = positions(&select_crqpc(&input)).into_iter().collect();
            let cds: BTreeSet<_> = positions(&select_cds(&input)).into_iter().collect();
            let unmasked: BTreeSet<_> = pairs.iter().enumerate()
                .filter(|(_, p)| p.0.is_some() && p.1.is_some())
                .map(|(i, _)| format!("Q{i}")).collect();
            prop_assert!(crqpc.is_disjoint(&cds));
            prop_assert_eq!(crqpc.union(&cds).cloned().collect::<BTreeSet<_>>(), unmasked);
            for p in select_crqpc(&input).iter().chain(&select_cds(&input)) {
                let i: usize = p.question.id[1..].parse().unwrap();
                prop_assert_eq!(Some(p.answer), pairs[i].1);
            }
            let rds = select_rds(&input, crqpc.len(), seed).unwrap();
            let distinct: BTreeSet<_> = positions(&rds).into_iter().collect();
            prop_assert_eq!(distinct.len(), crqpc.len());
            prop_assert!(distinct.is_subset(&input_unmasked(&pairs)));
            prop_assert_eq!(rds, select_rds(&input, crqpc.len(), seed).unwrap());
        }
    }

    fn input_unmasked(pairs: &[(Option<u32>, Option<u32>)]) -> BTreeSet<String> {
        pairs.iter().enumerate().filter(|(_, p)| p.0.is_some() && p.1.is_some()).map(|(i, _)| format!("Q{i}")).collect()
    }
}
