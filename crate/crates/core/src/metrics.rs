//! Cultural alignment score, cross-culture score matrices and their
//! Pearson correlation.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::fmt::Write as _;

use crate::culture::CultureCode;
use crate::survey::{ResponseVector, SurveyQuestion};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MetricsError {
    Misaligned(&'static str),
    NoJointPositions,
    /// Every jointly answered question has a single option and the answers
    /// still differ.
    ZeroMaxDistance,
    TooFewCultures(usize),
    MissingCulture,
    CultureOrderMismatch,
    ZeroVariance,
    TooFewPairs(usize),
    NoOverlap,
}

impl fmt::Display for MetricsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Misaligned(m) => write!(f, "vectors misaligned: {m}"),
            Self::NoJointPositions => f.write_str("no jointly answered questions"),
            Self::ZeroMaxDistance => f.write_str("maximum distance is zero but answers differ"),
            Self::TooFewCultures(n) => write!(f, "a cross-culture matrix needs at least 2 cultures, got {n}"),
            Self::MissingCulture => f.write_str("response vector has no culture"),
            Self::CultureOrderMismatch => f.write_str("matrices have different culture orders"),
            Self::ZeroVariance => f.write_str("correlation undefined: zero variance"),
            Self::TooFewPairs(n) => write!(f, "correlation needs at least 2 paired values, got {n}"),
            Self::NoOverlap => f.write_str("model and reference share no culture"),
        }
    }
}

impl core::error::Error for MetricsError {}

fn check_aligned(questions: &[SurveyQuestion], v: &ResponseVector) -> Result<(), MetricsError> {
    if v.len() != questions.len() {
        return Err(MetricsError::Misaligned("length differs from question list"));
    }
    if v.question_ids.iter().zip(questions).any(|(id, q)| *id != q.id) {
        return Err(MetricsError::Misaligned("question ids differ"));
    }
    Ok(())
}

/// Alignment score of `a` against `r` over the jointly answered questions:
/// `(1 - ||a - r|| / ||d||) * 100` where `d_i` is the code span of question
/// `i`.
pub fn cas(questions: &[SurveyQuestion], a: &ResponseVector, r: &ResponseVector) -> Result<f64, MetricsError> {
    check_aligned(questions, a)?;
    check_aligned(questions, r)?;
    let (mut diff_sq, mut max_sq, mut joint) = (0.0f64, 0.0f64, 0usize);
    for ((q, x), y) in questions.iter().zip(&a.answers).zip(&r.answers) {
        let (Some(x), Some(y)) = (x, y) else { continue };
        let d = f64::from(*x) - f64::from(*y);
        let span = f64::from(q.code_span());
        diff_sq += d * d;
        max_sq += span * span;
        joint += 1;
    }
    if joint == 0 {
        return Err(MetricsError::NoJointPositions);
    }
    if max_sq == 0.0 {
        return if diff_sq == 0.0 { Ok(100.0) } else { Err(MetricsError::ZeroMaxDistance) };
    }
    Ok((1.0 - libm::sqrt(diff_sq) / libm::sqrt(max_sq)) * 100.0)
}

/// Square matrix of pairwise scores. Cells whose score is undefined hold
/// `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossCultureMatrix {
    pub cultures: Vec<CultureCode>,
    pub values: Vec<Vec<Option<f64>>>,
}

impl CrossCultureMatrix {
    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        self.values[i][j]
    }

    /// Strict upper triangle, row-major.
    pub fn upper_triangle(&self) -> Vec<Option<f64>> {
        let n = self.cultures.len();
        (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).map(|(i, j)| self.values[i][j]).collect()
    }

    /// CSV with culture-code headers, values at 2 decimals, undefined
    /// cells empty.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("culture");
        for c in &self.cultures {
            let _ = write!(out, ",{c}");
        }
        out.push('\n');
        for (c, row) in self.cultures.iter().zip(&self.values) {
            out.push_str(c.as_str());
            for v in row {
                match v {
                    Some(v) => {
                        let _ = write!(out, ",{v:.2}");
                    }
                    None => out.push(','),
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Pairwise scores between the vectors, in the given order. Each cell is
/// computed once for `i <= j` and mirrored.
pub fn cross_matrix(
    vectors: &[ResponseVector],
    questions: &[SurveyQuestion],
) -> Result<CrossCultureMatrix, MetricsError> {
    if vectors.len() < 2 {
        return Err(MetricsError::TooFewCultures(vectors.len()));
    }
    let mut cultures = Vec::with_capacity(vectors.len());
    for v in vectors {
        cultures.push(v.culture.ok_or(MetricsError::MissingCulture)?);
        check_aligned(questions, v)?;
    }
    let n = vectors.len();
    let mut values = alloc::vec![alloc::vec![None; n]; n];
    for i in 0..n {
        for j in i..n {
            let s = cas(questions, &vectors[i], &vectors[j]).ok();
            values[i][j] = s;
            values[j][i] = s;
        }
    }
    Ok(CrossCultureMatrix { cultures, values })
}

/// Pearson coefficient over paired values; pairs with a missing side are
/// skipped.
pub fn pearson(x: &[Option<f64>], y: &[Option<f64>]) -> Result<f64, MetricsError> {
    let pairs: Vec<(f64, f64)> = x.iter().zip(y).filter_map(|(a, b)| Some(((*a)?, (*b)?))).collect();
    if pairs.len() < 2 {
        return Err(MetricsError::TooFewPairs(pairs.len()));
    }
    let n = pairs.len() as f64;
    let mx = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in &pairs {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(MetricsError::ZeroVariance);
    }
    Ok((sxy / libm::sqrt(sxx * syy)).clamp(-1.0, 1.0))
}

/// Correlation of two matrices over their strict upper triangles.
pub fn pearson_between(m1: &CrossCultureMatrix, m2: &CrossCultureMatrix) -> Result<f64, MetricsError> {
    if m1.cultures != m2.cultures {
        return Err(MetricsError::CultureOrderMismatch);
    }
    pearson(&m1.upper_triangle(), &m2.upper_triangle())
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlignmentReport {
    /// Per culture, in model order; `None` when the score is undefined.
    pub per_culture: Vec<(CultureCode, Option<f64>)>,
    pub average: Option<f64>,
    pub model_matrix: Option<CrossCultureMatrix>,
    pub reference_matrix: Option<CrossCultureMatrix>,
    pub pearson: Option<f64>,
    pub notices: Vec<String>,
}

/// Scores each culture present in both `model` and `reference`, and with
/// two or more cultures correlates the two cross-culture matrices.
pub fn alignment_report(
    model: &[ResponseVector],
    reference: &[ResponseVector],
    questions: &[SurveyQuestion],
) -> Result<AlignmentReport, MetricsError> {
    let refs: BTreeMap<CultureCode, &ResponseVector> = reference.iter().filter_map(|v| Some((v.culture?, v))).collect();
    let mut shared_model = Vec::new();
    let mut shared_ref = Vec::new();
    for v in model {
        let c = v.culture.ok_or(MetricsError::MissingCulture)?;
        if let Some(r) = refs.get(&c) {
            shared_model.push(v.clone());
            shared_ref.push((*r).clone());
        }
    }
    if shared_model.is_empty() {
        return Err(MetricsError::NoOverlap);
    }
    let mut notices = Vec::new();
    let mut per_culture = Vec::with_capacity(shared_model.len());
    for (m, r) in shared_model.iter().zip(&shared_ref) {
        let c = m.culture.expect("checked above");
        let s = match cas(questions, m, r) {
            Ok(s) => Some(s),
            Err(e) => {
                notices.push(format!("{c}: score undefined ({e})"));
                None
            }
        };
        per_culture.push((c, s));
    }
    let scored: Vec<f64> = per_culture.iter().filter_map(|p| p.1).collect();
    let average = (!scored.is_empty()).then(|| scored.iter().sum::<f64>() / scored.len() as f64);
    let (model_matrix, reference_matrix, pearson) = if shared_model.len() < 2 {
        notices.push(String::from("single culture: cross-culture matrices and correlation omitted"));
        (None, None, None)
    } else {
        let mm = cross_matrix(&shared_model, questions)?;
        let rm = cross_matrix(&shared_ref, questions)?;
        let p = match pearson_between(&mm, &rm) {
            Ok(p) => Some(p),
            Err(e) => {
                notices.push(format!("correlation undefined ({e})"));
                None
            }
        };
        (Some(mm), Some(rm), p)
    };
    Ok(AlignmentReport { per_culture, average, model_matrix, reference_matrix, pearson, notices })
}

fn fmt2(v: Option<f64>) -> String {
    v.map_or_else(String::new, |v| format!("{v:.2}"))
}

impl AlignmentReport {
    pub fn scores_csv(&self) -> String {
        let mut out = String::from("culture,cas\n");
        for (c, s) in &self.per_culture {
            let _ = writeln!(out, "{c},{}", fmt2(*s));
        }
        let _ = writeln!(out, "AVG,{}", fmt2(self.average));
        out
    }

    pub fn correlation_csv(&self) -> String {
        let p = self.pearson.map_or_else(String::new, |p| format!("{p:.4}"));
        format!("metric,value\npearson_upper_triangle,{p}\ncultures,{}\n", self.per_culture.len())
    }

    pub fn to_table(&self) -> String {
        let mut out = String::from("culture      CAS\n");
        for (c, s) in &self.per_culture {
            let s = s.map_or_else(|| String::from("n/a"), |v| format!("{v:.2}"));
            let _ = writeln!(out, "{c}  {s:>9}");
        }
        let avg = self.average.map_or_else(|| String::from("n/a"), |v| format!("{v:.2}"));
        let _ = writeln!(out, "AVG  {avg:>9}");
        if let Some(p) = self.pearson {
            let _ = writeln!(out, "pearson(model, reference) = {p:.4}");
        }
        for n in &self.notices {
            let _ = writeln!(out, "note: {n}");
        }
        out
    }
}
