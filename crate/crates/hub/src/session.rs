//! The session actor.
//!
//! One task owns the engine state and the connection registry. Presses,
//! ticks, start and stop all arrive through its command queue, which gives
//! every session mutation a single total order and makes each broadcast a
//! replay of the engine's event stream.

use std::collections::HashMap;
use std::time::Duration;

use edu_core::{
    start_session, ClientRole, ErrorCode, Phase, QuestionBank, SessionConfig, SessionEvent,
    SessionState, SessionSummary, StartError, Timestamp, WireMessage,
};
use serde::Serialize;
use tokio::sync::{mpsc, oneshot};
use tokio::time::Instant;
use tracing::info;

pub type ConnId = u64;

/// Frames queued for one connection's writer.
#[derive(Debug, Clone, PartialEq)]
pub enum Outbound {
    Frame(WireMessage),
    Ping,
    Close,
}

/// Maps engine timestamps onto the monotonic clock.
#[derive(Clone, Copy, Debug)]
pub struct HubClock {
    base_instant: Instant,
    base: Timestamp,
}

impl HubClock {
    pub fn new() -> Self {
        Self {
            base_instant: Instant::now(),
            base: Timestamp::now(),
        }
    }

    pub fn now(&self) -> Timestamp {
        self.base
            .plus_millis(self.base_instant.elapsed().as_millis() as u64)
    }

    pub fn instant_of(&self, at: Timestamp) -> Instant {
        self.base_instant + Duration::from_millis(at.millis_since(self.base))
    }
}

impl Default for HubClock {
    fn default() -> Self {
        Self::new()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SessionStatus {
    pub phase: Phase,
    pub index: usize,
    pub total: usize,
    pub correct_count: u32,
}

#[derive(Debug, PartialEq, Eq)]
pub enum StartRefused {
    AlreadyRunning,
    Engine(StartError),
}

#[derive(Debug)]
enum Command {
    Join {
        conn: ConnId,
        role: ClientRole,
        tx: mpsc::UnboundedSender<Outbound>,
    },
    Leave {
        conn: ConnId,
    },
    Press {
        conn: ConnId,
        segment: u32,
    },
    Start {
        bank: QuestionBank,
        config: SessionConfig,
        reply: oneshot::Sender<Result<SessionStatus, StartRefused>>,
    },
    Stop {
        reply: oneshot::Sender<Option<SessionSummary>>,
    },
    Status {
        reply: oneshot::Sender<SessionStatus>,
    },
}

/// Cheap, cloneable handle to the session actor.
#[derive(Clone, Debug)]
pub struct SessionHandle {
    tx: mpsc::UnboundedSender<Command>,
}

impl SessionHandle {
    /// Spawns the actor on the current runtime.
    pub fn spawn(clock: HubClock) -> Self {
        let (tx, rx) = mpsc::unbounded_channel();
        tokio::spawn(Actor::new(clock).run(rx));
        Self { tx }
    }

    pub fn join(&self, conn: ConnId, role: ClientRole, tx: mpsc::UnboundedSender<Outbound>) {
        let _ = self.tx.send(Command::Join { conn, role, tx });
    }

    pub fn leave(&self, conn: ConnId) {
        let _ = self.tx.send(Command::Leave { conn });
    }

    pub fn press(&self, conn: ConnId, segment: u32) {
        let _ = self.tx.send(Command::Press { conn, segment });
    }

    pub async fn start(
        &self,
        bank: QuestionBank,
        config: SessionConfig,
    ) -> Result<SessionStatus, StartRefused> {
        let (reply, rx) = oneshot::channel();
        let _ = self.tx.send(Command::Start {
            bank,
            config,
            reply,
        });
        rx.await.expect("session actor alive")
    }

    pub async fn stop(&self) -> Option<SessionSummary> {
        let (reply, rx) = oneshot::channel();
        let _ = self.tx.send(Command::Stop { reply });
        rx.await.expect("session actor alive")
    }

    pub async fn status(&self) -> SessionStatus {
        let (reply, rx) = oneshot::channel();
        let _ = self.tx.send(Command::Status { reply });
        rx.await.expect("session actor alive")
    }
}

struct Peer {
    role: ClientRole,
    tx: mpsc::UnboundedSender<Outbound>,
}

struct Actor {
    clock: HubClock,
    peers: HashMap<ConnId, Peer>,
    session: Option<SessionState>,
}

impl Actor {
    fn new(clock: HubClock) -> Self {
        Self {
            clock,
            peers: HashMap::new(),
            session: None,
        }
    }

    async fn run(mut self, mut rx: mpsc::UnboundedReceiver<Command>) {
        loop {
            let deadline = self
                .session
                .as_ref()
                .filter(|s| s.phase() == Phase::Feedback)
                .and_then(SessionState::feedback_until)
                .map(|until| self.clock.instant_of(until));

            tokio::select! {
                cmd = rx.recv() => match cmd {
                    Some(cmd) => self.apply(cmd),
                    None => break,
                },
                _ = sleep_until_opt(deadline), if deadline.is_some() => self.tick(),
            }
        }
    }

    fn apply(&mut self, cmd: Command) {
        match cmd {
            Command::Join { conn, role, tx } => {
                let _ = tx.send(Outbound::Frame(WireMessage::welcome(role)));
                if role != ClientRole::Floor {
                    if let Some(ev) = self.session.as_ref().and_then(SessionState::question_event) {
                        let _ = tx.send(Outbound::Frame(ev.into()));
                    }
                }
                info!(event = "join", conn, role = %role);
                self.peers.insert(conn, Peer { role, tx });
            }
            Command::Leave { conn } => {
                if self.peers.remove(&conn).is_some() {
                    info!(event = "leave", conn);
                }
            }
            Command::Press { conn, segment } => self.press(conn, segment),
            Command::Start {
                bank,
                config,
                reply,
            } => {
                let _ = reply.send(self.start(bank, config));
            }
            Command::Stop { reply } => {
                let summary = self.session.take().map(|s| s.summarize());
                if let Some(s) = &summary {
                    info!(
                        event = "session_stop",
                        total = s.total,
                        correct_count = s.correct_count
                    );
                }
                let _ = reply.send(summary);
            }
            Command::Status { reply } => {
                let _ = reply.send(self.status());
            }
        }
    }

    fn start(
        &mut self,
        bank: QuestionBank,
        config: SessionConfig,
    ) -> Result<SessionStatus, StartRefused> {
        if let Some(s) = &self.session {
            if s.phase() != Phase::Finished {
                return Err(StartRefused::AlreadyRunning);
            }
        }
        let (state, events) =
            start_session(&bank, config, self.clock.now()).map_err(StartRefused::Engine)?;
        info!(event = "session_start", total = state.total(), order = ?state.question_order());
        self.session = Some(state);
        self.broadcast(events);
        Ok(self.status())
    }

    fn press(&mut self, conn: ConnId, segment: u32) {
        let now = self.clock.now();
        let Some(session) = self.session.as_mut() else {
            info!(event = "press", conn, segment, outcome = "no_session");
            return;
        };
        match session.handle_press(segment, now) {
            Ok(events) => {
                info!(
                    event = "press",
                    conn,
                    segment,
                    at = now.as_millis(),
                    outcome = if events.is_empty() {
                        "ignored"
                    } else {
                        "accepted"
                    }
                );
                self.broadcast(events);
            }
            Err(err) => {
                info!(event = "press", conn, segment, outcome = "out_of_range");
                if let Some(peer) = self.peers.get(&conn) {
                    let _ = peer.tx.send(Outbound::Frame(WireMessage::error(
                        ErrorCode::SegmentOutOfRange,
                        err.to_string(),
                    )));
                }
            }
        }
    }

    fn tick(&mut self) {
        let now = self.clock.now();
        if let Some(session) = self.session.as_mut() {
            let events = session.tick(now);
            self.broadcast(events);
        }
    }

    fn status(&self) -> SessionStatus {
        match &self.session {
            None => SessionStatus {
                phase: Phase::Idle,
                index: 0,
                total: 0,
                correct_count: 0,
            },
            Some(s) => SessionStatus {
                phase: s.phase(),
                index: (s.cursor() + 1).min(s.total()),
                total: s.total(),
                correct_count: s.correct_count(),
            },
        }
    }

    fn broadcast(&mut self, events: Vec<SessionEvent>) {
        for event in events {
            let to_floor = matches!(event, SessionEvent::FeedbackIssued { .. });
            if let SessionEvent::FeedbackIssued {
                correct,
                segment,
                ref message,
            } = event
            {
                info!(event = "feedback", correct, segment, message = %message);
            }
            let msg = WireMessage::from(event);
            self.peers.retain(|_, peer| {
                if peer.role == ClientRole::Floor && !to_floor {
                    return true;
                }
                peer.tx.send(Outbound::Frame(msg.clone())).is_ok()
            });
        }
    }
}

async fn sleep_until_opt(deadline: Option<Instant>) {
    match deadline {
        Some(d) => tokio::time::sleep_until(d).await,
        None => std::future::pending().await,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use edu_core::{Answer, QuestionDraft};

    fn bank() -> QuestionBank {
        let drafts = (0..2)
            .map(|i| QuestionDraft {
                id: format!("q{i}"),
                text: format!("Q{i}"),
                answers: vec![Answer::new("a", "A", true), Answer::new("b", "B", false)],
            })
            .collect();
        QuestionBank::from_drafts(0, drafts).unwrap()
    }

    fn drain(rx: &mut mpsc::UnboundedReceiver<Outbound>) -> Vec<Outbound> {
        let mut out = Vec::new();
        while let Ok(o) = rx.try_recv() {
            out.push(o);
        }
        out
    }

    #[tokio::test]
    async fn routes_events_by_role() {
        let hub = SessionHandle::spawn(HubClock::new());
        let (screen_tx, mut screen) = mpsc::unbounded_channel();
        let (floor_tx, mut floor) = mpsc::unbounded_channel();
        hub.join(1, ClientRole::Screen, screen_tx);
        hub.join(2, ClientRole::Floor, floor_tx);
        let config = SessionConfig {
            feedback_hold_ms: 20,
            ..SessionConfig::default()
        };
        hub.start(bank(), config.clone()).await.unwrap();
        assert_eq!(
            hub.start(bank(), config).await,
            Err(StartRefused::AlreadyRunning)
        );
        hub.press(2, 0);
        tokio::time::sleep(Duration::from_millis(80)).await;
        hub.status().await;

        let screen_frames = drain(&mut screen);
        let floor_frames = drain(&mut floor);
        let kinds = |v: &[Outbound]| -> Vec<&'static str> {
            v.iter()
                .map(|o| match o {
                    Outbound::Frame(WireMessage::Welcome { .. }) => "welcome",
                    Outbound::Frame(WireMessage::Question { .. }) => "question",
                    Outbound::Frame(WireMessage::Feedback { .. }) => "feedback",
                    _ => "other",
                })
                .collect()
        };
        assert_eq!(
            kinds(&screen_frames),
            ["welcome", "question", "feedback", "question"]
        );
        assert_eq!(kinds(&floor_frames), ["welcome", "feedback"]);
    }

    #[tokio::test]
    async fn out_of_range_goes_to_sender_only() {
        let hub = SessionHandle::spawn(HubClock::new());
        let (screen_tx, mut screen) = mpsc::unbounded_channel();
        let (floor_tx, mut floor) = mpsc::unbounded_channel();
        hub.join(1, ClientRole::Screen, screen_tx);
        hub.join(2, ClientRole::Floor, floor_tx);
        hub.start(bank(), SessionConfig::default()).await.unwrap();
        hub.press(2, 9);
        let status = hub.status().await;
        assert_eq!(status.phase, Phase::Presenting);
        assert!(matches!(
            drain(&mut floor).last(),
            Some(Outbound::Frame(WireMessage::Error {
                code: ErrorCode::SegmentOutOfRange,
                ..
            }))
        ));
        assert_eq!(drain(&mut screen).len(), 2);
    }

    #[tokio::test]
    async fn stop_returns_summary_and_idles() {
        let hub = SessionHandle::spawn(HubClock::new());
        assert_eq!(hub.stop().await, None);
        assert_eq!(
            hub.start(QuestionBank::new(), SessionConfig::default())
                .await,
            Err(StartRefused::Engine(StartError::EmptyBank))
        );
        hub.start(bank(), SessionConfig::default()).await.unwrap();
        hub.press(7, 0);
        let summary = hub.stop().await.unwrap();
        assert_eq!(summary.total, 2);
        assert_eq!(summary.correct_count, 1);
        assert_eq!(hub.status().await.phase, Phase::Idle);
    }
}
