//! Per-connection WebSocket handling: handshake, role rules, heartbeat.

use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Duration;

use axum::extract::ws::{Message, WebSocket};
use edu_core::{ClientRole, ErrorCode, WireMessage};
use futures::{SinkExt, StreamExt};
use tokio::sync::mpsc;
use tokio::time::{Instant, MissedTickBehavior};
use tracing::{debug, info};

use crate::session::{ConnId, Outbound, SessionHandle};

static NEXT_CONN: AtomicU64 = AtomicU64::new(1);

pub(crate) async fn serve_socket(socket: WebSocket, session: SessionHandle, heartbeat: Duration) {
    let conn: ConnId = NEXT_CONN.fetch_add(1, Ordering::Relaxed);
    let (mut sink, mut stream) = socket.split();
    let (tx, mut rx) = mpsc::unbounded_channel::<Outbound>();

    let writer = tokio::spawn(async move {
        while let Some(out) = rx.recv().await {
            let result = match out {
                Outbound::Frame(msg) => sink.send(Message::Text(msg.encode().into())).await,
                Outbound::Ping => sink.send(Message::Ping(Vec::new().into())).await,
                Outbound::Close => {
                    let _ = sink.send(Message::Close(None)).await;
                    break;
                }
            };
            if result.is_err() {
                break;
            }
        }
    });

    let mut role: Option<ClientRole> = None;
    let mut last_seen = Instant::now();
    let mut ticker = tokio::time::interval_at(Instant::now() + heartbeat, heartbeat);
    ticker.set_missed_tick_behavior(MissedTickBehavior::Delay);

    loop {
        tokio::select! {
            incoming = stream.next() => {
                let Some(Ok(message)) = incoming else { break };
                last_seen = Instant::now();
                let text = match message {
                    Message::Text(text) => text,
                    Message::Close(_) => break,
                    Message::Ping(_) | Message::Pong(_) => continue,
                    Message::Binary(_) => {
                        if !reject(&tx, role.is_none(), ErrorCode::MalformedFrame, "binary frames are not supported") {
                            break;
                        }
                        continue;
                    }
                };
                match on_text(conn, text.as_str(), &mut role, &tx, &session) {
                    Flow::Continue => {}
                    Flow::Close => break,
                }
            }
            _ = ticker.tick() => {
                if last_seen.elapsed() > heartbeat * 2 {
                    info!(event = "heartbeat_timeout", conn);
                    let _ = tx.send(Outbound::Close);
                    break;
                }
                let _ = tx.send(Outbound::Ping);
            }
        }
    }

    session.leave(conn);
    drop(tx);
    let _ = tokio::time::timeout(Duration::from_secs(1), writer).await;
    debug!(event = "disconnect", conn);
}

enum Flow {
    Continue,
    Close,
}

/// Sends an error; closes the connection if it never completed the handshake.
/// Returns false when the connection should close.
fn reject(
    tx: &mpsc::UnboundedSender<Outbound>,
    fatal: bool,
    code: ErrorCode,
    detail: &str,
) -> bool {
    let _ = tx.send(Outbound::Frame(WireMessage::error(code, detail)));
    if fatal {
        let _ = tx.send(Outbound::Close);
    }
    !fatal
}

fn on_text(
    conn: ConnId,
    text: &str,
    role: &mut Option<ClientRole>,
    tx: &mpsc::UnboundedSender<Outbound>,
    session: &SessionHandle,
) -> Flow {
    let msg = match WireMessage::decode(text) {
        Ok(msg) => msg,
        Err(e) => {
            let keep = reject(
                tx,
                role.is_none(),
                ErrorCode::MalformedFrame,
                &e.to_string(),
            );
            return if keep { Flow::Continue } else { Flow::Close };
        }
    };

    match (*role, msg) {
        (None, WireMessage::Hello { role: r }) => {
            *role = Some(r);
            session.join(conn, r, tx.clone());
            Flow::Continue
        }
        (None, _) => {
            reject(
                tx,
                true,
                ErrorCode::ProtocolViolation,
                "first frame must be hello",
            );
            Flow::Close
        }
        (Some(current), WireMessage::Hello { role: r }) if current == r => {
            let _ = tx.send(Outbound::Frame(WireMessage::welcome(r)));
            Flow::Continue
        }
        (Some(current), WireMessage::Hello { role: r }) => {
            reject(
                tx,
                false,
                ErrorCode::RoleViolation,
                &format!("connection role is {current}, cannot become {r}"),
            );
            Flow::Continue
        }
        (Some(ClientRole::Floor), WireMessage::Press { segment }) => {
            session.press(conn, segment);
            Flow::Continue
        }
        (Some(current), WireMessage::Press { .. }) => {
            reject(
                tx,
                false,
                ErrorCode::RoleViolation,
                &format!("{current} connections may not press"),
            );
            Flow::Continue
        }
        (Some(_), other) => {
            debug_assert!(other.is_hub_message());
            reject(
                tx,
                false,
                ErrorCode::ProtocolViolation,
                "clients may only send hello and press",
            );
            Flow::Continue
        }
    }
}
