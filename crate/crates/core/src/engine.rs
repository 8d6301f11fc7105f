//! The quiz session state machine.
//!
//! ```text
//!   start ──► Presenting ──press──► Feedback ──tick(hold elapsed)──► Presenting (next or same question)
//!                                      │
//!                                      └──tick, no questions left──► Finished
//! ```
//!
//! Every transition takes an explicit timestamp. The engine reads no clock
//! and no randomness other than the seeded shuffle, so replaying the same
//! inputs yields the same states and events.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{assign_segment_colors, AnswerView, Question, QuestionBank, SEGMENT_COUNT};
use crate::shuffle::shuffled_order;
use crate::time::Timestamp;

pub const FEEDBACK_CORRECT: &str = "Correct!";
pub const FEEDBACK_WRONG: &str = "I'm sorry, but it is wrong!";

pub const DEFAULT_FEEDBACK_HOLD_MS: u64 = 2000;
pub const DEFAULT_PRESS_DEBOUNCE_MS: u64 = 300;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QuestionOrder {
    #[default]
    Sequential,
    Shuffled,
}

/// What happens after a wrong answer once the feedback hold expires.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WrongPolicy {
    #[default]
    Advance,
    Retry,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionConfig {
    pub order: QuestionOrder,
    pub shuffle_seed: u64,
    pub wrong_policy: WrongPolicy,
    pub feedback_hold_ms: u64,
    pub press_debounce_ms: u64,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self {
            order: QuestionOrder::Sequential,
            shuffle_seed: 0,
            wrong_policy: WrongPolicy::Advance,
            feedback_hold_ms: DEFAULT_FEEDBACK_HOLD_MS,
            press_debounce_ms: DEFAULT_PRESS_DEBOUNCE_MS,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    #[default]
    Idle,
    Presenting,
    Feedback,
    Finished,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnswerLogEntry {
    pub question_id: String,
    pub segment: u8,
    pub was_correct: bool,
    pub at: Timestamp,
    pub attempt: u32,
}

/// Output of a transition, to be broadcast by whoever drives the engine.
///
/// None of these carry the correctness of an answer that was not pressed.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SessionEvent {
    QuestionPosted {
        /// 1-based position in the session.
        index: usize,
        total: usize,
        text: String,
        answers: Vec<AnswerView>,
    },
    FeedbackIssued {
        correct: bool,
        segment: u8,
        message: String,
    },
    SessionFinished {
        correct_count: u32,
        total: usize,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionSummary {
    pub total: usize,
    pub correct_count: u32,
    pub entries: Vec<AnswerLogEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StartError {
    #[error("the question bank is empty")]
    EmptyBank,
    #[error("feedback_hold_ms must be positive")]
    ZeroFeedbackHold,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PressError {
    #[error("segment {0} is outside 0..=3")]
    SegmentOutOfRange(u32),
}

/// Authoritative state of one quiz run.
///
/// Holds a snapshot of the questions taken at start, so later bank edits
/// never affect a running session.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionState {
    questions: Vec<Question>,
    config: SessionConfig,
    phase: Phase,
    question_order: Vec<usize>,
    cursor: usize,
    attempt: u32,
    last_verdict: Option<bool>,
    last_press_at: Option<Timestamp>,
    feedback_until: Option<Timestamp>,
    started_at: Timestamp,
    log: Vec<AnswerLogEntry>,
    correct_count: u32,
}

/// Starts a session on a snapshot of `bank` and posts the first question.
pub fn start_session(
    bank: &QuestionBank,
    config: SessionConfig,
    now: Timestamp,
) -> Result<(SessionState, Vec<SessionEvent>), StartError> {
    if bank.is_empty() {
        return Err(StartError::EmptyBank);
    }
    if config.feedback_hold_ms == 0 {
        return Err(StartError::ZeroFeedbackHold);
    }
    let n = bank.len();
    let question_order = match config.order {
        QuestionOrder::Sequential => (0..n).collect(),
        QuestionOrder::Shuffled => shuffled_order(n, config.shuffle_seed),
    };
    let state = SessionState {
        questions: bank.questions().to_vec(),
        config,
        phase: Phase::Presenting,
        question_order,
        cursor: 0,
        attempt: 1,
        last_verdict: None,
        last_press_at: None,
        feedback_until: None,
        started_at: now,
        log: Vec::new(),
        correct_count: 0,
    };
    let first = state.question_event().expect("non-empty session");
    Ok((state, vec![first]))
}

impl SessionState {
    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn config(&self) -> &SessionConfig {
        &self.config
    }

    pub fn question_order(&self) -> &[usize] {
        &self.question_order
    }

    pub fn cursor(&self) -> usize {
        self.cursor
    }

    pub fn total(&self) -> usize {
        self.question_order.len()
    }

    pub fn correct_count(&self) -> u32 {
        self.correct_count
    }

    pub fn last_verdict(&self) -> Option<bool> {
        self.last_verdict
    }

    pub fn feedback_until(&self) -> Option<Timestamp> {
        self.feedback_until
    }

    pub fn started_at(&self) -> Timestamp {
        self.started_at
    }

    pub fn log(&self) -> &[AnswerLogEntry] {
        &self.log
    }

    /// The question on screen, if any.
    pub fn current_question(&self) -> Option<&Question> {
        match self.phase {
            Phase::Presenting | Phase::Feedback => self
                .question_order
                .get(self.cursor)
                .map(|&i| &self.questions[i]),
            Phase::Idle | Phase::Finished => None,
        }
    }

    /// The `QuestionPosted` event for the current question, e.g. for a
    /// screen that joins mid-session.
    pub fn question_event(&self) -> Option<SessionEvent> {
        let question = self.current_question()?;
        Some(SessionEvent::QuestionPosted {
            index: self.cursor + 1,
            total: self.total(),
            text: question.text().to_owned(),
            answers: assign_segment_colors(question)
                .into_iter()
                .map(AnswerView::from)
                .collect(),
        })
    }

    /// Evaluates a floor press.
    ///
    /// Presses outside the Presenting phase, on segments without an answer,
    /// or inside the debounce window are ignored: the state is left as is
    /// and no events are produced. Only a segment above 3 is an error.
    pub fn handle_press(
        &mut self,
        segment: u32,
        now: Timestamp,
    ) -> Result<Vec<SessionEvent>, PressError> {
        if segment as usize >= SEGMENT_COUNT {
            return Err(PressError::SegmentOutOfRange(segment));
        }
        if self.phase != Phase::Presenting {
            return Ok(Vec::new());
        }
        let question = self.current_question().expect("presenting has a question");
        let Some(answer) = question.answers().get(segment as usize) else {
            return Ok(Vec::new());
        };
        if let Some(last) = self.last_press_at {
            if now.millis_since(last) < self.config.press_debounce_ms {
                return Ok(Vec::new());
            }
        }

        let correct = answer.is_correct;
        let entry = AnswerLogEntry {
            question_id: question.id().to_owned(),
            segment: segment as u8,
            was_correct: correct,
            at: now,
            attempt: self.attempt,
        };
        self.log.push(entry);
        if correct {
            self.correct_count += 1;
        }
        self.last_verdict = Some(correct);
        self.last_press_at = Some(now);
        self.feedback_until = Some(now.plus_millis(self.config.feedback_hold_ms));
        self.phase = Phase::Feedback;

        let message = if correct {
            FEEDBACK_CORRECT
        } else {
            FEEDBACK_WRONG
        };
        Ok(vec![SessionEvent::FeedbackIssued {
            correct,
            segment: segment as u8,
            message: message.to_owned(),
        }])
    }

    /// Advances past an expired feedback hold. A no-op in every other case.
    pub fn tick(&mut self, now: Timestamp) -> Vec<SessionEvent> {
        if self.phase != Phase::Feedback {
            return Vec::new();
        }
        match self.feedback_until {
            Some(until) if now >= until => {}
            _ => return Vec::new(),
        }
        self.feedback_until = None;

        let repeat =
            self.last_verdict == Some(false) && self.config.wrong_policy == WrongPolicy::Retry;
        if repeat {
            self.attempt += 1;
        } else {
            self.cursor += 1;
            self.attempt = 1;
        }

        if self.cursor >= self.question_order.len() {
            self.phase = Phase::Finished;
            return vec![SessionEvent::SessionFinished {
                correct_count: self.correct_count,
                total: self.total(),
            }];
        }
        self.phase = Phase::Presenting;
        vec![self.question_event().expect("cursor in range")]
    }

    pub fn summarize(&self) -> SessionSummary {
        SessionSummary {
            total: self.total(),
            correct_count: self.correct_count,
            entries: self.log.clone(),
        }
    }
}
