//! Questions, answers and the question bank.
//!
//! A [`Question`] can only be obtained through validation, so any value of
//! that type satisfies the quiz invariants: 2 to 4 answers, exactly one of
//! them correct, unique answer ids and non-empty texts. Answer position `k`
//! is the floor segment `k`.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::time::Timestamp;

/// Number of segments on the floor.
pub const SEGMENT_COUNT: usize = 4;
pub const MIN_ANSWERS: usize = 2;
pub const MAX_ANSWERS: usize = SEGMENT_COUNT;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Answer {
    pub id: String,
    pub text: String,
    pub is_correct: bool,
}

impl Answer {
    pub fn new(id: impl Into<String>, text: impl Into<String>, is_correct: bool) -> Self {
        Self {
            id: id.into(),
            text: text.into(),
            is_correct,
        }
    }
}

/// Unvalidated question data, as authored or as received over the wire.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuestionDraft {
    pub id: String,
    pub text: String,
    #[serde(default)]
    pub answers: Vec<Answer>,
}

/// A rule broken by a candidate question.
#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ValidationError {
    #[error("question id is empty")]
    EmptyId,
    #[error("question text is empty")]
    EmptyText,
    #[error("question has {count} answer(s), at least 2 required")]
    TooFewAnswers { count: usize },
    #[error("question has {count} answers, at most 4 allowed")]
    TooManyAnswers { count: usize },
    #[error("no answer is marked correct")]
    NoCorrectAnswer,
    #[error("{count} answers are marked correct, exactly one required")]
    MultipleCorrectAnswers { count: usize },
    #[error("answer id {id:?} is used more than once")]
    DuplicateAnswerId { id: String },
    #[error("answer {index} has an empty id")]
    EmptyAnswerId { index: usize },
    #[error("answer {index} has empty text")]
    EmptyAnswerText { index: usize },
    #[error("question id {id:?} is used more than once")]
    DuplicateQuestionId { id: String },
}

impl ValidationError {
    /// Stable machine-readable name, used in HTTP error bodies.
    pub fn code(&self) -> &'static str {
        match self {
            ValidationError::EmptyId => "EmptyId",
            ValidationError::EmptyText => "EmptyText",
            ValidationError::TooFewAnswers { .. } => "TooFewAnswers",
            ValidationError::TooManyAnswers { .. } => "TooManyAnswers",
            ValidationError::NoCorrectAnswer => "NoCorrectAnswer",
            ValidationError::MultipleCorrectAnswers { .. } => "MultipleCorrectAnswers",
            ValidationError::DuplicateAnswerId { .. } => "DuplicateAnswerId",
            ValidationError::EmptyAnswerId { .. } => "EmptyAnswerId",
            ValidationError::EmptyAnswerText { .. } => "EmptyAnswerText",
            ValidationError::DuplicateQuestionId { .. } => "DuplicateQuestionId",
        }
    }
}

/// Checks every rule and reports all violations, not just the first.
pub fn validate_question(candidate: QuestionDraft) -> Result<Question, Vec<ValidationError>> {
    let mut errors = Vec::new();
    if candidate.id.trim().is_empty() {
        errors.push(ValidationError::EmptyId);
    }
    if candidate.text.trim().is_empty() {
        errors.push(ValidationError::EmptyText);
    }

    let count = candidate.answers.len();
    if count < MIN_ANSWERS {
        errors.push(ValidationError::TooFewAnswers { count });
    } else if count > MAX_ANSWERS {
        errors.push(ValidationError::TooManyAnswers { count });
    }

    // The correct-count rule only makes sense once there are answers at all.
    if count > 0 {
        let correct = candidate.answers.iter().filter(|a| a.is_correct).count();
        match correct {
            0 => errors.push(ValidationError::NoCorrectAnswer),
            1 => {}
            n => errors.push(ValidationError::MultipleCorrectAnswers { count: n }),
        }
    }

    let mut seen = HashSet::new();
    for (index, answer) in candidate.answers.iter().enumerate() {
        if answer.id.trim().is_empty() {
            errors.push(ValidationError::EmptyAnswerId { index });
        } else if !seen.insert(answer.id.as_str()) {
            let dup = ValidationError::DuplicateAnswerId {
                id: answer.id.clone(),
            };
            if !errors.contains(&dup) {
                errors.push(dup);
            }
        }
        if answer.text.trim().is_empty() {
            errors.push(ValidationError::EmptyAnswerText { index });
        }
    }

    if errors.is_empty() {
        Ok(Question {
            id: candidate.id,
            text: candidate.text,
            answers: candidate.answers,
        })
    } else {
        Err(errors)
    }
}

/// A validated question. Construct with [`validate_question`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "QuestionDraft", into = "QuestionDraft")]
pub struct Question {
    id: String,
    text: String,
    answers: Vec<Answer>,
}

impl Question {
    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn answers(&self) -> &[Answer] {
        &self.answers
    }

    /// Segment holding the correct answer.
    pub fn correct_segment(&self) -> usize {
        self.answers
            .iter()
            .position(|a| a.is_correct)
            .expect("validated question has a correct answer")
    }

    pub fn to_draft(&self) -> QuestionDraft {
        QuestionDraft::from(self.clone())
    }
}

impl From<Question> for QuestionDraft {
    fn from(q: Question) -> Self {
        QuestionDraft {
            id: q.id,
            text: q.text,
            answers: q.answers,
        }
    }
}

/// Validation failure carried through serde's `try_from`.
#[derive(Debug)]
pub struct InvalidQuestion(pub Vec<ValidationError>);

impl fmt::Display for InvalidQuestion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let msgs: Vec<String> = self.0.iter().map(|e| e.to_string()).collect();
        write!(f, "invalid question: {}", msgs.join("; "))
    }
}

impl TryFrom<QuestionDraft> for Question {
    type Error = InvalidQuestion;

    fn try_from(draft: QuestionDraft) -> Result<Self, Self::Error> {
        validate_question(draft).map_err(InvalidQuestion)
    }
}

/// Floor segment colors, fixed by position.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SegmentColor {
    Red,
    Blue,
    Green,
    Yellow,
}

impl SegmentColor {
    pub const BY_SEGMENT: [SegmentColor; SEGMENT_COUNT] = [
        SegmentColor::Red,
        SegmentColor::Blue,
        SegmentColor::Green,
        SegmentColor::Yellow,
    ];

    pub fn for_segment(segment: usize) -> Option<SegmentColor> {
        Self::BY_SEGMENT.get(segment).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SegmentColor::Red => "red",
            SegmentColor::Blue => "blue",
            SegmentColor::Green => "green",
            SegmentColor::Yellow => "yellow",
        }
    }
}

impl fmt::Display for SegmentColor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SegmentSlot {
    pub segment: usize,
    pub color: SegmentColor,
    pub text: String,
}

/// Pairs each answer with the color of the segment at the same position.
pub fn assign_segment_colors(question: &Question) -> Vec<SegmentSlot> {
    question
        .answers
        .iter()
        .zip(SegmentColor::BY_SEGMENT)
        .enumerate()
        .map(|(segment, (answer, color))| SegmentSlot {
            segment,
            color,
            text: answer.text.clone(),
        })
        .collect()
}

/// What a client may see of an answer: its label and color, never its
/// correctness.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnswerView {
    pub label: String,
    pub color: SegmentColor,
}

impl From<SegmentSlot> for AnswerView {
    fn from(slot: SegmentSlot) -> Self {
        AnswerView {
            label: slot.text,
            color: slot.color,
        }
    }
}

/// Violations found in one question of a bank or sync payload.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BankIssue {
    pub index: usize,
    pub question_id: String,
    pub errors: Vec<ValidationError>,
}

impl fmt::Display for BankIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let msgs: Vec<String> = self.errors.iter().map(|e| e.to_string()).collect();
        write!(
            f,
            "question #{} ({:?}): {}",
            self.index,
            self.question_id,
            msgs.join("; ")
        )
    }
}

#[derive(Debug, Error)]
pub enum BankError {
    #[error("malformed bank document at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("bank document has {} invalid question(s)", .0.len())]
    Invalid(Vec<BankIssue>),
}

#[derive(Deserialize)]
struct BankDraft {
    revision: u64,
    questions: Vec<QuestionDraft>,
}

/// The teacher-authored question collection.
///
/// Every successful mutation returns a new bank with a higher revision.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct QuestionBank {
    revision: u64,
    questions: Vec<Question>,
}

impl QuestionBank {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn revision(&self) -> u64 {
        self.revision
    }

    pub fn questions(&self) -> &[Question] {
        &self.questions
    }

    pub fn len(&self) -> usize {
        self.questions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.questions.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Question> {
        self.questions.iter().find(|q| q.id == id)
    }

    /// Returns a copy without question `id`, or `None` if it is absent.
    pub fn without(&self, id: &str) -> Option<QuestionBank> {
        let pos = self.questions.iter().position(|q| q.id == id)?;
        let mut questions = self.questions.clone();
        questions.remove(pos);
        Some(QuestionBank {
            revision: self.revision + 1,
            questions,
        })
    }

    /// Builds a bank from drafts, checking every question and id uniqueness.
    pub fn from_drafts(revision: u64, drafts: Vec<QuestionDraft>) -> Result<Self, Vec<BankIssue>> {
        let questions = validate_all(drafts)?;
        Ok(QuestionBank {
            revision,
            questions,
        })
    }
}

impl<'de> Deserialize<'de> for QuestionBank {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let draft = BankDraft::deserialize(deserializer)?;
        QuestionBank::from_drafts(draft.revision, draft.questions).map_err(|issues| {
            let msgs: Vec<String> = issues.iter().map(|i| i.to_string()).collect();
            serde::de::Error::custom(msgs.join("; "))
        })
    }
}

fn validate_all(drafts: Vec<QuestionDraft>) -> Result<Vec<Question>, Vec<BankIssue>> {
    let mut issues = Vec::new();
    let mut questions = Vec::with_capacity(drafts.len());
    let mut ids = HashSet::new();
    for (index, draft) in drafts.into_iter().enumerate() {
        let question_id = draft.id.clone();
        let duplicate = !draft.id.is_empty() && !ids.insert(draft.id.clone());
        let mut errors = match validate_question(draft) {
            Ok(q) => {
                questions.push(q);
                Vec::new()
            }
            Err(errors) => errors,
        };
        if duplicate {
            errors.push(ValidationError::DuplicateQuestionId {
                id: question_id.clone(),
            });
        }
        if !errors.is_empty() {
            issues.push(BankIssue {
                index,
                question_id,
                errors,
            });
        }
    }
    if issues.is_empty() {
        Ok(questions)
    } else {
        Err(issues)
    }
}

/// Canonical compact JSON: fixed key order, no insignificant whitespace.
pub fn serialize_bank(bank: &QuestionBank) -> String {
    serde_json::to_string(bank).expect("bank serialization is infallible")
}

pub fn parse_bank(document: &[u8]) -> Result<QuestionBank, BankError> {
    let draft: BankDraft = serde_json::from_slice(document).map_err(|e| BankError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    QuestionBank::from_drafts(draft.revision, draft.questions).map_err(BankError::Invalid)
}

/// Applies a sync payload: upserts `payload` by id, then removes `deletions`.
///
/// Replacements keep their position in the bank and new ids are appended in
/// payload order. The revision moves by exactly one when the question list
/// changes and stays put otherwise. If any payload question is invalid the
/// whole merge is rejected.
pub fn merge_sync_payload(
    bank: &QuestionBank,
    payload: Vec<QuestionDraft>,
    deletions: &[String],
) -> Result<QuestionBank, Vec<BankIssue>> {
    let incoming = validate_all(payload)?;

    let mut questions = bank.questions.clone();
    for q in incoming {
        match questions.iter_mut().find(|existing| existing.id == q.id) {
            Some(slot) => *slot = q,
            None => questions.push(q),
        }
    }
    if !deletions.is_empty() {
        let doomed: HashSet<&str> = deletions.iter().map(String::as_str).collect();
        questions.retain(|q| !doomed.contains(q.id.as_str()));
    }

    let revision = if questions == bank.questions {
        bank.revision
    } else {
        bank.revision + 1
    };
    Ok(QuestionBank {
        revision,
        questions,
    })
}

/// A registered teacher. Only the salted password digest is kept.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TeacherAccount {
    pub username: String,
    pub password_hash: String,
    pub created_at: Timestamp,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn answers(texts: &[&str], correct: usize) -> Vec<Answer> {
        texts
            .iter()
            .enumerate()
            .map(|(i, t)| Answer::new(format!("a{i}"), *t, i == correct))
            .collect()
    }

    fn draft(id: &str, n: usize, correct: usize) -> QuestionDraft {
        let texts: Vec<String> = (0..n).map(|i| format!("option {i}")).collect();
        let refs: Vec<&str> = texts.iter().map(String::as_str).collect();
        QuestionDraft {
            id: id.into(),
            text: format!("question {id}"),
            answers: answers(&refs, correct),
        }
    }

    fn question(id: &str, n: usize, correct: usize) -> Question {
        validate_question(draft(id, n, correct)).unwrap()
    }

    #[test]
    fn four_answers_one_correct_is_valid() {
        let q = validate_question(draft("q1", 4, 2)).unwrap();
        assert_eq!(q.answers().len(), 4);
        assert_eq!(q.correct_segment(), 2);
    }

    #[test]
    fn five_answers_rejected() {
        let errs = validate_question(draft("q1", 5, 0)).unwrap_err();
        assert_eq!(errs, vec![ValidationError::TooManyAnswers { count: 5 }]);
    }

    #[test]
    fn no_correct_answer_rejected() {
        let mut d = draft("q1", 2, 0);
        d.answers[0].is_correct = false;
        assert_eq!(
            validate_question(d).unwrap_err(),
            vec![ValidationError::NoCorrectAnswer]
        );
    }

    #[test]
    fn errors_accumulate() {
        let d = QuestionDraft {
            id: "q".into(),
            text: "  ".into(),
            answers: answers(&["only"], 0),
        };
        let errs = validate_question(d).unwrap_err();
        assert!(errs.contains(&ValidationError::EmptyText));
        assert!(errs.contains(&ValidationError::TooFewAnswers { count: 1 }));
        assert_eq!(errs.len(), 2);
    }

    #[test]
    fn multiple_correct_and_duplicate_ids() {
        let mut d = draft("q", 3, 0);
        d.answers[1].is_correct = true;
        d.answers[2].id = "a0".into();
        d.answers[2].text = "".into();
        let errs = validate_question(d).unwrap_err();
        assert_eq!(
            errs,
            vec![
                ValidationError::MultipleCorrectAnswers { count: 2 },
                ValidationError::DuplicateAnswerId { id: "a0".into() },
                ValidationError::EmptyAnswerText { index: 2 },
            ]
        );
    }

    #[test]
    fn colors_follow_fixed_table() {
        let slots = assign_segment_colors(&question("q", 4, 0));
        let got: Vec<(usize, SegmentColor, &str)> = slots
            .iter()
            .map(|s| (s.segment, s.color, s.text.as_str()))
            .collect();
        assert_eq!(
            got,
            vec![
                (0, SegmentColor::Red, "option 0"),
                (1, SegmentColor::Blue, "option 1"),
                (2, SegmentColor::Green, "option 2"),
                (3, SegmentColor::Yellow, "option 3"),
            ]
        );

        let two = assign_segment_colors(&question("q", 2, 1));
        assert_eq!(two.len(), 2);
        assert_eq!(two[1].color, SegmentColor::Blue);
        assert_eq!(two, assign_segment_colors(&question("q", 2, 1)));
        assert_eq!(SegmentColor::for_segment(4), None);
    }

    #[test]
    fn empty_bank_document() {
        let bank = QuestionBank::new();
        let doc = serialize_bank(&bank);
        assert_eq!(doc, r#"{"revision":0,"questions":[]}"#);
        assert_eq!(parse_bank(doc.as_bytes()).unwrap(), bank);
    }

    #[test]
    fn single_question_round_trip() {
        let bank = QuestionBank::from_drafts(3, vec![draft("q1", 4, 1)]).unwrap();
        let doc = serialize_bank(&bank);
        assert_eq!(
            doc,
            concat!(
                r#"{"revision":3,"questions":[{"id":"q1","text":"question q1","answers":["#,
                r#"{"id":"a0","text":"option 0","is_correct":false},"#,
                r#"{"id":"a1","text":"option 1","is_correct":true},"#,
                r#"{"id":"a2","text":"option 2","is_correct":false},"#,
                r#"{"id":"a3","text":"option 3","is_correct":false}]}]}"#
            )
        );
        assert_eq!(parse_bank(doc.as_bytes()).unwrap(), bank);
    }

    #[test]
    fn parse_rejects_two_correct() {
        let doc = r#"{"revision":1,"questions":[{"id":"q","text":"t","answers":[
            {"id":"a","text":"x","is_correct":true},{"id":"b","text":"y","is_correct":true}]}]}"#;
        match parse_bank(doc.as_bytes()) {
            Err(BankError::Invalid(issues)) => {
                assert_eq!(issues.len(), 1);
                assert_eq!(
                    issues[0].errors,
                    vec![ValidationError::MultipleCorrectAnswers { count: 2 }]
                );
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn parse_reports_position() {
        match parse_bank(b"{\"revision\":1,\n\"questions\":[") {
            Err(BankError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn parse_rejects_duplicate_question_ids() {
        let bank = QuestionBank::from_drafts(0, vec![draft("q", 2, 0)]).unwrap();
        let mut doc = serialize_bank(&bank);
        let q = serde_json::to_string(&bank.questions()[0]).unwrap();
        doc = doc.replace(&q, &format!("{q},{q}"));
        match parse_bank(doc.as_bytes()) {
            Err(BankError::Invalid(issues)) => assert_eq!(
                issues[0].errors,
                vec![ValidationError::DuplicateQuestionId { id: "q".into() }]
            ),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn merge_into_empty() {
        let merged =
            merge_sync_payload(&QuestionBank::new(), vec![draft("q1", 2, 0)], &[]).unwrap();
        assert_eq!(merged.revision(), 1);
        assert_eq!(merged.questions(), &[question("q1", 2, 0)]);
    }

    #[test]
    fn merge_upsert_and_delete() {
        let bank =
            QuestionBank::from_drafts(5, vec![draft("q1", 2, 0), draft("q2", 3, 1)]).unwrap();
        let mut q1_prime = draft("q1", 4, 3);
        q1_prime.text = "edited".into();
        let merged = merge_sync_payload(&bank, vec![q1_prime.clone()], &["q2".into()]).unwrap();
        assert_eq!(merged.revision(), 6);
        assert_eq!(merged.questions(), &[validate_question(q1_prime).unwrap()]);
    }

    #[test]
    fn merge_keeps_positions_and_appends_in_payload_order() {
        let bank =
            QuestionBank::from_drafts(0, vec![draft("q1", 2, 0), draft("q2", 2, 0)]).unwrap();
        let merged = merge_sync_payload(
            &bank,
            vec![draft("q4", 2, 1), draft("q1", 3, 2), draft("q3", 2, 0)],
            &[],
        )
        .unwrap();
        let ids: Vec<&str> = merged.questions().iter().map(Question::id).collect();
        assert_eq!(ids, ["q1", "q2", "q4", "q3"]);
        assert_eq!(merged.questions()[0].answers().len(), 3);
    }

    #[test]
    fn merge_noop_keeps_revision() {
        let bank = QuestionBank::from_drafts(7, vec![draft("q1", 2, 0)]).unwrap();
        assert_eq!(merge_sync_payload(&bank, vec![], &[]).unwrap(), bank);
        assert_eq!(
            merge_sync_payload(&bank, vec![draft("q1", 2, 0)], &["missing".into()]).unwrap(),
            bank
        );
    }

    #[test]
    fn merge_is_atomic() {
        let bank = QuestionBank::from_drafts(2, vec![draft("q1", 2, 0)]).unwrap();
        let issues = merge_sync_payload(
            &bank,
            vec![draft("ok", 2, 0), draft("bad", 5, 0)],
            &["q1".into()],
        )
        .unwrap_err();
        assert_eq!(issues.len(), 1);
        assert_eq!(issues[0].index, 1);
        assert_eq!(issues[0].question_id, "bad");
        assert_eq!(bank.len(), 1);
    }

    #[test]
    fn merge_rejects_duplicate_ids_in_payload() {
        let issues = merge_sync_payload(
            &QuestionBank::new(),
            vec![draft("x", 2, 0), draft("x", 2, 1)],
            &[],
        )
        .unwrap_err();
        assert_eq!(
            issues[0].errors,
            vec![ValidationError::DuplicateQuestionId { id: "x".into() }]
        );
    }

    #[test]
    fn without_removes_and_bumps_revision() {
        let bank =
            QuestionBank::from_drafts(1, vec![draft("q1", 2, 0), draft("q2", 2, 0)]).unwrap();
        let smaller = bank.without("q1").unwrap();
        assert_eq!(smaller.revision(), 2);
        assert_eq!(smaller.len(), 1);
        assert!(bank.without("nope").is_none());
    }

    #[test]
    fn question_deserialize_validates() {
        let bad = r#"{"id":"q","text":"t","answers":[{"id":"a","text":"x","is_correct":false}]}"#;
        let err = serde_json::from_str::<Question>(bad).unwrap_err();
        assert!(err.to_string().contains("at least 2"));
    }
}
