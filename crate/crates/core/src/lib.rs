//! Domain model, quiz session engine and wire protocol for the interactive
//! floor quiz.
//!
//! The crate is free of I/O. Everything here is a value type or a pure
//! function, so the hub, the teacher CLI and the floor simulator all share
//! one definition of a question bank and of the quiz state machine.

pub mod engine;
pub mod model;
pub mod shuffle;
pub mod time;
pub mod wire;

pub use engine::{
    start_session, AnswerLogEntry, Phase, PressError, QuestionOrder, SessionConfig, SessionEvent,
    SessionState, SessionSummary, StartError, WrongPolicy, FEEDBACK_CORRECT, FEEDBACK_WRONG,
};
pub use model::{
    assign_segment_colors, merge_sync_payload, parse_bank, serialize_bank, validate_question,
    Answer, AnswerView, BankError, BankIssue, Question, QuestionBank, QuestionDraft, SegmentColor,
    SegmentSlot, TeacherAccount, ValidationError, SEGMENT_COUNT,
};
pub use time::Timestamp;
pub use wire::{ClientRole, ErrorCode, WireMessage, PROTOCOL_VERSION};
