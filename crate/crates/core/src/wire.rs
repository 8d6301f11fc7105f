//! JSON text frames exchanged over the hub WebSocket.
//!
//! Every frame is an object with a lowercase `"type"` tag:
//!
//! | direction     | type       | fields                              |
//! |---------------|------------|-------------------------------------|
//! | client → hub  | `hello`    | `role`                              |
//! | client → hub  | `press`    | `segment`                           |
//! | hub → client  | `welcome`  | `role`, `protocol_version`          |
//! | hub → client  | `question` | `index`, `total`, `text`, `answers` |
//! | hub → client  | `feedback` | `correct`, `segment`, `message`     |
//! | hub → client  | `finished` | `correct_count`, `total`            |
//! | hub → client  | `error`    | `code`, `detail`                    |

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::engine::SessionEvent;
use crate::model::AnswerView;

pub const PROTOCOL_VERSION: &str = "1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClientRole {
    Floor,
    Screen,
    Observer,
}

impl fmt::Display for ClientRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ClientRole::Floor => "floor",
            ClientRole::Screen => "screen",
            ClientRole::Observer => "observer",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    MalformedFrame,
    ProtocolViolation,
    RoleViolation,
    SegmentOutOfRange,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum WireMessage {
    Hello {
        role: ClientRole,
    },
    Press {
        segment: u32,
    },
    Welcome {
        role: ClientRole,
        protocol_version: String,
    },
    Question {
        index: usize,
        total: usize,
        text: String,
        answers: Vec<AnswerView>,
    },
    Feedback {
        correct: bool,
        segment: u8,
        message: String,
    },
    Finished {
        correct_count: u32,
        total: usize,
    },
    Error {
        code: ErrorCode,
        detail: String,
    },
}

impl WireMessage {
    pub fn welcome(role: ClientRole) -> Self {
        WireMessage::Welcome {
            role,
            protocol_version: PROTOCOL_VERSION.to_owned(),
        }
    }

    pub fn error(code: ErrorCode, detail: impl Into<String>) -> Self {
        WireMessage::Error {
            code,
            detail: detail.into(),
        }
    }

    pub fn encode(&self) -> String {
        serde_json::to_string(self).expect("wire messages always serialize")
    }

    pub fn decode(frame: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(frame)
    }

    /// True for the messages only the hub may send.
    pub fn is_hub_message(&self) -> bool {
        !matches!(self, WireMessage::Hello { .. } | WireMessage::Press { .. })
    }
}

impl From<SessionEvent> for WireMessage {
    fn from(event: SessionEvent) -> Self {
        match event {
            SessionEvent::QuestionPosted {
                index,
                total,
                text,
                answers,
            } => WireMessage::Question {
                index,
                total,
                text,
                answers,
            },
            SessionEvent::FeedbackIssued {
                correct,
                segment,
                message,
            } => WireMessage::Feedback {
                correct,
                segment,
                message,
            },
            SessionEvent::SessionFinished {
                correct_count,
                total,
            } => WireMessage::Finished {
                correct_count,
                total,
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SegmentColor;

    #[test]
    fn press_frame_is_byte_exact() {
        assert_eq!(
            WireMessage::Press { segment: 2 }.encode(),
            r#"{"type":"press","segment":2}"#
        );
        assert_eq!(
            WireMessage::Hello {
                role: ClientRole::Floor
            }
            .encode(),
            r#"{"type":"hello","role":"floor"}"#
        );
    }

    #[test]
    fn hub_frames() {
        assert_eq!(
            WireMessage::welcome(ClientRole::Screen).encode(),
            r#"{"type":"welcome","role":"screen","protocol_version":"1"}"#
        );
        assert_eq!(
            WireMessage::error(ErrorCode::RoleViolation, "x").encode(),
            r#"{"type":"error","code":"role_violation","detail":"x"}"#
        );
        let q = WireMessage::Question {
            index: 1,
            total: 2,
            text: "2+2?".into(),
            answers: vec![AnswerView {
                label: "4".into(),
                color: SegmentColor::Red,
            }],
        };
        assert_eq!(
            q.encode(),
            r#"{"type":"question","index":1,"total":2,"text":"2+2?","answers":[{"label":"4","color":"red"}]}"#
        );
        let fb = WireMessage::Feedback {
            correct: false,
            segment: 0,
            message: crate::FEEDBACK_WRONG.into(),
        };
        assert_eq!(
            fb.encode(),
            r#"{"type":"feedback","correct":false,"segment":0,"message":"I'm sorry, but it is wrong!"}"#
        );
    }

    #[test]
    fn decode_rejects_garbage() {
        assert!(WireMessage::decode("not json").is_err());
        assert!(WireMessage::decode(r#"{"type":"press","segment":-1}"#).is_err());
        assert!(WireMessage::decode(r#"{"type":"dance"}"#).is_err());
        assert_eq!(
            WireMessage::decode(r#"{"segment":7,"type":"press"}"#).unwrap(),
            WireMessage::Press { segment: 7 }
        );
    }
}
