#![allow(dead_code)]

use std::path::Path;
use std::time::{Duration, Instant};

use edu_cli::client::{HubSocket, SocketSender};
use edu_core::{Answer, ClientRole, QuestionBank, QuestionDraft, WireMessage};
use edu_hub::{HubConfig, RunningHub};
use serde_json::{json, Value};
use tokio::sync::mpsc;

pub const USER: &str = "teacher";
pub const PASSWORD: &str = "correct horse";

/// Correct segment of each fixture question.
pub const FIXTURE_CORRECT: [usize; 3] = [2, 0, 3];

pub async fn spawn_hub(store: &Path) -> RunningHub {
    spawn_hub_with_ttl(store, Duration::from_secs(3600)).await
}

pub async fn spawn_hub_with_ttl(store: &Path, ttl: Duration) -> RunningHub {
    let mut config = HubConfig::new("127.0.0.1:0".parse().unwrap(), store);
    config.password_rounds = 1000;
    config.token_ttl = ttl;
    edu_hub::start(config).await.expect("hub starts")
}

/// The 3-question fixture: 4, 3 and 4 answers.
pub fn fixture_drafts() -> Vec<QuestionDraft> {
    let sizes = [4, 3, 4];
    let texts = ["2+2?", "Capital of Brazil?", "Which is a mammal?"];
    (0..3)
        .map(|q| QuestionDraft {
            id: format!("fx{q}"),
            text: texts[q].into(),
            answers: (0..sizes[q])
                .map(|a| {
                    Answer::new(
                        format!("fx{q}a{a}"),
                        format!("option {q}.{a}"),
                        a == FIXTURE_CORRECT[q],
                    )
                })
                .collect(),
        })
        .collect()
}

pub fn fixture_bank() -> QuestionBank {
    QuestionBank::from_drafts(1, fixture_drafts()).unwrap()
}

pub async fn register(http: &reqwest::Client, hub: &RunningHub) -> reqwest::StatusCode {
    http.post(format!("{}/api/teachers/register", hub.http_url()))
        .json(&json!({"username": USER, "password": PASSWORD}))
        .send()
        .await
        .unwrap()
        .status()
}

pub async fn login(
    http: &reqwest::Client,
    hub: &RunningHub,
) -> (reqwest::StatusCode, Option<String>) {
    let resp = http
        .post(format!("{}/api/teachers/login", hub.http_url()))
        .json(&json!({"username": USER, "password": PASSWORD}))
        .send()
        .await
        .unwrap();
    let status = resp.status();
    let body: Value = resp.json().await.unwrap_or(Value::Null);
    (status, body["token"].as_str().map(str::to_owned))
}

pub async fn teacher_token(http: &reqwest::Client, hub: &RunningHub) -> String {
    register(http, hub).await;
    login(http, hub).await.1.expect("login succeeds")
}

pub async fn sync(
    http: &reqwest::Client,
    hub: &RunningHub,
    token: &str,
    body: &Value,
) -> (reqwest::StatusCode, Value) {
    let resp = http
        .post(format!("{}/api/sync", hub.http_url()))
        .bearer_auth(token)
        .json(body)
        .send()
        .await
        .unwrap();
    let status = resp.status();
    (status, resp.json().await.unwrap_or(Value::Null))
}

pub async fn sync_fixture(http: &reqwest::Client, hub: &RunningHub, token: &str) {
    let (status, _) = sync(http, hub, token, &json!({"questions": fixture_drafts()})).await;
    assert_eq!(status, 200);
}

pub async fn start_session(
    http: &reqwest::Client,
    hub: &RunningHub,
    token: &str,
    body: Value,
) -> reqwest::StatusCode {
    http.post(format!("{}/api/session/start", hub.http_url()))
        .bearer_auth(token)
        .json(&body)
        .send()
        .await
        .unwrap()
        .status()
}

pub async fn get_bank(http: &reqwest::Client, hub: &RunningHub, token: &str) -> String {
    http.get(format!("{}/api/questions", hub.http_url()))
        .bearer_auth(token)
        .send()
        .await
        .unwrap()
        .text()
        .await
        .unwrap()
}

/// A connected client recording every frame with its receipt time.
pub struct Recorder {
    rx: mpsc::UnboundedReceiver<(Instant, String)>,
    pub sender: SocketSender,
}

impl Recorder {
    pub async fn connect(hub: &RunningHub, role: ClientRole) -> Self {
        let socket = HubSocket::connect(&hub.ws_url(), role)
            .await
            .expect("connect");
        let (sender, mut receiver) = socket.split();
        let (tx, rx) = mpsc::unbounded_channel();
        tokio::spawn(async move {
            while let Some(frame) = receiver.recv().await {
                if tx.send((Instant::now(), frame.raw)).is_err() {
                    break;
                }
            }
        });
        Recorder { rx, sender }
    }

    pub async fn next(&mut self, timeout: Duration) -> Option<(Instant, String)> {
        tokio::time::timeout(timeout, self.rx.recv())
            .await
            .ok()
            .flatten()
    }

    /// Next frame matching `pred`, skipping others.
    pub async fn next_matching(
        &mut self,
        timeout: Duration,
        pred: impl Fn(&WireMessage) -> bool,
    ) -> Option<(Instant, String)> {
        let deadline = tokio::time::Instant::now() + timeout;
        loop {
            let remaining = deadline.saturating_duration_since(tokio::time::Instant::now());
            let (at, raw) = self.next(remaining).await?;
            if WireMessage::decode(&raw).map(|m| pred(&m)).unwrap_or(false) {
                return Some((at, raw));
            }
        }
    }

    /// Every frame up to and including `finished`.
    pub async fn until_finished(&mut self, timeout: Duration) -> Vec<String> {
        let deadline = tokio::time::Instant::now() + timeout;
        let mut frames = Vec::new();
        loop {
            let remaining = deadline.saturating_duration_since(tokio::time::Instant::now());
            let Some((_, raw)) = self.next(remaining).await else {
                return frames;
            };
            let done = matches!(WireMessage::decode(&raw), Ok(WireMessage::Finished { .. }));
            frames.push(raw);
            if done {
                return frames;
            }
        }
    }
}

/// Prints one acceptance line and fails the test on a miss. Writes to the
/// real stdout so the line shows up even when the harness captures output.
pub fn report(criterion: &str, outcome: Result<String, String>) {
    use std::io::Write;
    let line = match &outcome {
        Ok(detail) => format!("ACCEPTANCE PASS  {criterion}: {detail}\n"),
        Err(detail) => format!("ACCEPTANCE FAIL  {criterion}: {detail}\n"),
    };
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(line.as_bytes());
    let _ = out.flush();
    if let Err(detail) = outcome {
        panic!("acceptance criterion failed: {criterion}: {detail}");
    }
}

pub fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}
