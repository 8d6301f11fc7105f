//! Minimal hub WebSocket client shared by the floor simulator and `watch`.

use std::time::Duration;

use edu_core::{ClientRole, WireMessage};
use futures::{SinkExt, StreamExt};
use thiserror::Error;
use tokio::net::TcpStream;
use tokio_tungstenite::tungstenite::Message;
use tokio_tungstenite::{connect_async, MaybeTlsStream, WebSocketStream};

pub const HANDSHAKE_TIMEOUT: Duration = Duration::from_secs(5);

#[derive(Debug, Error)]
pub enum ClientError {
    #[error("cannot connect to {url}: {reason}")]
    ConnectionRefused { url: String, reason: String },
    #[error("hub rejected the handshake: {0}")]
    HandshakeRejected(String),
    #[error("connection lost: {0}")]
    Disconnected(String),
}

/// A raw text frame together with its decoded form, when it decodes.
#[derive(Clone, Debug)]
pub struct Frame {
    pub raw: String,
    pub message: Option<WireMessage>,
}

pub struct HubSocket {
    inner: WebSocketStream<MaybeTlsStream<TcpStream>>,
}

impl HubSocket {
    /// Connects, sends `hello` and waits for `welcome`.
    pub async fn connect(url: &str, role: ClientRole) -> Result<Self, ClientError> {
        let (inner, _) = connect_async(url)
            .await
            .map_err(|e| ClientError::ConnectionRefused {
                url: url.to_owned(),
                reason: e.to_string(),
            })?;
        let mut socket = HubSocket { inner };
        socket
            .send(&WireMessage::Hello { role })
            .await
            .map_err(|e| ClientError::HandshakeRejected(e.to_string()))?;
        match socket.next_frame(HANDSHAKE_TIMEOUT).await {
            Ok(Some(Frame {
                message: Some(WireMessage::Welcome { .. }),
                ..
            })) => Ok(socket),
            Ok(Some(frame)) => Err(ClientError::HandshakeRejected(frame.raw)),
            Ok(None) => Err(ClientError::HandshakeRejected("no welcome received".into())),
            Err(e) => Err(ClientError::HandshakeRejected(e.to_string())),
        }
    }

    pub async fn send(&mut self, msg: &WireMessage) -> Result<(), ClientError> {
        self.send_raw(msg.encode()).await
    }

    pub async fn send_raw(&mut self, text: String) -> Result<(), ClientError> {
        self.inner
            .send(Message::Text(text.into()))
            .await
            .map_err(|e| ClientError::Disconnected(e.to_string()))
    }

    /// Next text frame, or `None` on timeout. Control frames are skipped.
    pub async fn next_frame(&mut self, timeout: Duration) -> Result<Option<Frame>, ClientError> {
        let deadline = tokio::time::Instant::now() + timeout;
        loop {
            let next = match tokio::time::timeout_at(deadline, self.inner.next()).await {
                Err(_) => return Ok(None),
                Ok(next) => next,
            };
            match next {
                Some(Ok(Message::Text(text))) => {
                    let raw = text.to_string();
                    let message = WireMessage::decode(&raw).ok();
                    return Ok(Some(Frame { raw, message }));
                }
                Some(Ok(Message::Close(_))) | None => {
                    return Err(ClientError::Disconnected("closed by hub".into()))
                }
                Some(Ok(_)) => continue,
                Some(Err(e)) => return Err(ClientError::Disconnected(e.to_string())),
            }
        }
    }

    pub async fn close(mut self) {
        let _ = self.inner.close(None).await;
    }

    /// Splits into independent halves for concurrent send and receive.
    pub fn split(self) -> (SocketSender, SocketReceiver) {
        let (sink, stream) = self.inner.split();
        (SocketSender { sink }, SocketReceiver { stream })
    }
}

pub struct SocketSender {
    sink: futures::stream::SplitSink<WebSocketStream<MaybeTlsStream<TcpStream>>, Message>,
}

impl SocketSender {
    pub async fn send(&mut self, msg: &WireMessage) -> Result<(), ClientError> {
        self.sink
            .send(Message::Text(msg.encode().into()))
            .await
            .map_err(|e| ClientError::Disconnected(e.to_string()))
    }

    pub async fn close(mut self) {
        let _ = self.sink.send(Message::Close(None)).await;
        let _ = self.sink.close().await;
    }
}

pub struct SocketReceiver {
    stream: futures::stream::SplitStream<WebSocketStream<MaybeTlsStream<TcpStream>>>,
}

impl SocketReceiver {
    /// Next text frame; `None` once the connection is gone.
    pub async fn recv(&mut self) -> Option<Frame> {
        loop {
            match self.stream.next().await? {
                Ok(Message::Text(text)) => {
                    let raw = text.to_string();
                    let message = WireMessage::decode(&raw).ok();
                    return Some(Frame { raw, message });
                }
                Ok(Message::Close(_)) | Err(_) => return None,
                Ok(_) => continue,
            }
        }
    }
}

/// `http://host:port[/...]` → `ws://host:port/ws`.
pub fn ws_url_from_http(base: &str) -> String {
    let trimmed = base.trim_end_matches('/');
    let rest = trimmed
        .strip_prefix("https://")
        .map(|r| format!("wss://{r}"))
        .or_else(|| trimmed.strip_prefix("http://").map(|r| format!("ws://{r}")))
        .unwrap_or_else(|| format!("ws://{trimmed}"));
    format!("{rest}/ws")
}
