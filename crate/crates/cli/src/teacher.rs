//! `edu-teacher`: offline question authoring plus sync and session control.
//!
//! Questions live in a local bank file using the same canonical format as
//! the hub's store. Removals are queued in a sidecar file
//! (`<bank>.sync.json`) and sent with the next `sync`.

use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use edu_core::{
    assign_segment_colors, merge_sync_payload, parse_bank, serialize_bank, Answer, BankError,
    ClientRole, QuestionBank, QuestionDraft, WireMessage,
};
use reqwest::StatusCode;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::client::{ws_url_from_http, ClientError, HubSocket};

pub const CREDENTIALS_ENV: &str = "INTERACTIVE_EDU_CREDENTIALS";

#[derive(Parser, Debug)]
#[command(
    name = "edu-teacher",
    version,
    about = "Author quiz questions and run sessions on the hub"
)]
pub struct Cli {
    /// Hub base URL.
    #[arg(
        long,
        env = "INTERACTIVE_EDU_HUB",
        default_value = "http://127.0.0.1:8080"
    )]
    pub hub: String,

    /// Local question bank file.
    #[arg(long, default_value = "questions.json")]
    pub bank: PathBuf,

    /// Credentials file (defaults to ~/.config/interactive-edu/credentials.json).
    #[arg(long, env = CREDENTIALS_ENV)]
    pub credentials: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Create a teacher account on the hub.
    Register(Login),
    /// Log in and cache a token.
    Login(Login),
    /// Add a question to the local bank.
    Add {
        #[arg(long)]
        text: String,
        /// Answer text; append `:correct` to mark the right one. Order = floor segments.
        #[arg(long = "answer", required = true)]
        answers: Vec<String>,
    },
    /// Show the local bank with floor colors.
    List,
    /// Remove a question locally and queue its deletion for the next sync.
    Remove { id: String },
    /// Push local questions and queued deletions to the hub.
    Sync,
    /// Start a quiz session on the hub.
    Start(StartArgs),
    /// Stop the running session and print its summary.
    Stop,
    /// Follow the live session as an observer.
    Watch,
}

#[derive(Args, Debug)]
pub struct Login {
    #[arg(long)]
    pub username: String,
    /// Read from stdin when omitted.
    #[arg(long, env = "INTERACTIVE_EDU_PASSWORD", hide_env_values = true)]
    pub password: Option<String>,
}

#[derive(Args, Debug, Default)]
pub struct StartArgs {
    #[arg(long)]
    pub shuffle: bool,
    #[arg(long, requires = "shuffle")]
    pub seed: Option<u64>,
    /// Repeat a question until it is answered correctly.
    #[arg(long)]
    pub retry: bool,
    #[arg(long)]
    pub hold_ms: Option<u64>,
}

#[derive(Debug, Error)]
pub enum TeacherError {
    #[error("invalid question:\n{0}")]
    Validation(String),
    #[error("authentication failed ({0}); run `edu-teacher login`")]
    Auth(String),
    #[error("cannot reach hub: {0}")]
    Connectivity(String),
    #[error("conflict: {0}")]
    Conflict(String),
    #[error("not found: {0}")]
    NotFound(String),
    #[error("{0}")]
    Local(String),
    #[error("hub error: {0}")]
    Hub(String),
}

impl TeacherError {
    pub fn exit_code(&self) -> i32 {
        match self {
            TeacherError::Local(_) | TeacherError::Hub(_) => 1,
            TeacherError::Connectivity(_) => 2,
            TeacherError::Validation(_) => 3,
            TeacherError::Auth(_) => 4,
            TeacherError::Conflict(_) => 5,
            TeacherError::NotFound(_) => 6,
        }
    }
}

impl From<ClientError> for TeacherError {
    fn from(e: ClientError) -> Self {
        TeacherError::Connectivity(e.to_string())
    }
}

impl From<reqwest::Error> for TeacherError {
    fn from(e: reqwest::Error) -> Self {
        TeacherError::Connectivity(e.to_string())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
struct SyncState {
    deletions: Vec<String>,
    server_revision: Option<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Credentials {
    hub: String,
    username: String,
    token: String,
    expires_at: u64,
}

/// Splits `"text:correct"` into `("text", true)`.
pub fn parse_answer_arg(arg: &str) -> (String, bool) {
    match arg.strip_suffix(":correct") {
        Some(text) => (text.trim_matches('"').to_owned(), true),
        None => (arg.to_owned(), false),
    }
}

pub fn new_id() -> String {
    uuid::Uuid::new_v4().simple().to_string()
}

/// Renders the bank as `list` prints it.
pub fn render_bank(bank: &QuestionBank) -> String {
    let mut out = String::new();
    for (i, q) in bank.questions().iter().enumerate() {
        out.push_str(&format!("{}. {}  [{}]\n", i + 1, q.text(), q.id()));
        for (slot, answer) in assign_segment_colors(q).iter().zip(q.answers()) {
            let mark = if answer.is_correct { "  (correct)" } else { "" };
            out.push_str(&format!(
                "   {} {:<6} {}{}\n",
                slot.segment + 1,
                slot.color.as_str(),
                slot.text,
                mark
            ));
        }
    }
    if bank.is_empty() {
        out.push_str("(no questions)\n");
    }
    out
}

fn read_bank(path: &Path) -> Result<QuestionBank, TeacherError> {
    match std::fs::read(path) {
        Ok(bytes) => parse_bank(&bytes).map_err(|e| match e {
            BankError::Invalid(issues) => TeacherError::Local(format!(
                "{} is invalid: {}",
                path.display(),
                issues
                    .iter()
                    .map(|i| i.to_string())
                    .collect::<Vec<_>>()
                    .join("; ")
            )),
            parse => TeacherError::Local(format!("{}: {parse}", path.display())),
        }),
        Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(QuestionBank::new()),
        Err(e) => Err(TeacherError::Local(format!("{}: {e}", path.display()))),
    }
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), TeacherError> {
    let fail = |e: io::Error| TeacherError::Local(format!("{}: {e}", path.display()));
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(fail)?;
    // NamedTempFile is created with mode 0600 on unix.
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(fail)?;
    tmp.write_all(contents).map_err(fail)?;
    tmp.as_file().sync_all().map_err(fail)?;
    tmp.persist(path).map_err(|e| fail(e.error))?;
    Ok(())
}

fn sync_state_path(bank: &Path) -> PathBuf {
    let mut name = bank.file_name().unwrap_or_default().to_os_string();
    name.push(".sync.json");
    bank.with_file_name(name)
}

fn read_sync_state(bank: &Path) -> Result<SyncState, TeacherError> {
    let path = sync_state_path(bank);
    match std::fs::read(&path) {
        Ok(bytes) => serde_json::from_slice(&bytes)
            .map_err(|e| TeacherError::Local(format!("{}: {e}", path.display()))),
        Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(SyncState::default()),
        Err(e) => Err(TeacherError::Local(format!("{}: {e}", path.display()))),
    }
}

fn write_sync_state(bank: &Path, state: &SyncState) -> Result<(), TeacherError> {
    let doc = serde_json::to_vec(state).expect("sync state serializes");
    write_file(&sync_state_path(bank), &doc)
}

fn credentials_path(cli: &Cli) -> Result<PathBuf, TeacherError> {
    if let Some(p) = &cli.credentials {
        return Ok(p.clone());
    }
    let home = std::env::var_os("HOME").ok_or_else(|| {
        TeacherError::Local(format!(
            "HOME is not set; use --credentials or {CREDENTIALS_ENV}"
        ))
    })?;
    Ok(PathBuf::from(home).join(".config/interactive-edu/credentials.json"))
}

fn read_token(cli: &Cli) -> Result<String, TeacherError> {
    let path = credentials_path(cli)?;
    let bytes = std::fs::read(&path).map_err(|_| TeacherError::Auth("not logged in".into()))?;
    let creds: Credentials = serde_json::from_slice(&bytes)
        .map_err(|e| TeacherError::Auth(format!("unreadable credentials: {e}")))?;
    Ok(creds.token)
}

fn read_password(given: &Option<String>) -> Result<String, TeacherError> {
    if let Some(p) = given {
        return Ok(p.clone());
    }
    eprint!("password: ");
    let mut line = String::new();
    io::stdin()
        .lock()
        .read_line(&mut line)
        .map_err(|e| TeacherError::Local(e.to_string()))?;
    Ok(line.trim_end_matches(['\r', '\n']).to_owned())
}

fn api(cli: &Cli, path: &str) -> String {
    format!("{}{}", cli.hub.trim_end_matches('/'), path)
}

fn http() -> reqwest::Client {
    reqwest::Client::builder()
        .timeout(Duration::from_secs(15))
        .build()
        .expect("http client builds")
}

async fn error_for(resp: reqwest::Response) -> TeacherError {
    let status = resp.status();
    let body: Value = resp.json().await.unwrap_or(Value::Null);
    let detail = body
        .get("detail")
        .and_then(Value::as_str)
        .or_else(|| body.get("error").and_then(Value::as_str))
        .unwrap_or("")
        .to_owned();
    match status {
        StatusCode::UNAUTHORIZED => TeacherError::Auth(detail),
        StatusCode::CONFLICT => TeacherError::Conflict(detail),
        StatusCode::NOT_FOUND => TeacherError::NotFound(detail),
        StatusCode::BAD_REQUEST
            if body.get("error").and_then(Value::as_str) == Some("validation") =>
        {
            TeacherError::Validation(format_issues(&body))
        }
        other => TeacherError::Hub(format!("{other}: {detail}")),
    }
}

fn format_issues(body: &Value) -> String {
    let mut out = Vec::new();
    for issue in body["issues"].as_array().into_iter().flatten() {
        let codes: Vec<String> = issue["errors"]
            .as_array()
            .into_iter()
            .flatten()
            .map(|e| {
                format!(
                    "{} ({})",
                    e["code"].as_str().unwrap_or("?"),
                    e["detail"].as_str().unwrap_or("")
                )
            })
            .collect();
        out.push(format!(
            "  question {}: {}",
            issue["question_id"].as_str().unwrap_or("?"),
            codes.join(", ")
        ));
    }
    out.join("\n")
}

/// Runs one subcommand, writing human-readable output to `out`.
pub async fn execute(cli: Cli, out: &mut (dyn Write + Send)) -> Result<(), TeacherError> {
    let w = |out: &mut (dyn Write + Send), s: String| {
        let _ = writeln!(out, "{s}");
    };
    match &cli.command {
        Command::Register(login) => {
            let password = read_password(&login.password)?;
            let resp = http()
                .post(api(&cli, "/api/teachers/register"))
                .json(&json!({ "username": login.username, "password": password }))
                .send()
                .await?;
            if resp.status() != StatusCode::CREATED {
                return Err(error_for(resp).await);
            }
            w(out, format!("registered {}", login.username));
        }
        Command::Login(login) => {
            let password = read_password(&login.password)?;
            let resp = http()
                .post(api(&cli, "/api/teachers/login"))
                .json(&json!({ "username": login.username, "password": password }))
                .send()
                .await?;
            if resp.status() != StatusCode::OK {
                return Err(error_for(resp).await);
            }
            let body: Value = resp.json().await?;
            let creds = Credentials {
                hub: cli.hub.clone(),
                username: login.username.clone(),
                token: body["token"].as_str().unwrap_or_default().to_owned(),
                expires_at: body["expires_at"].as_u64().unwrap_or_default(),
            };
            let path = credentials_path(&cli)?;
            write_file(
                &path,
                &serde_json::to_vec(&creds).expect("credentials serialize"),
            )?;
            w(out, format!("logged in as {}", login.username));
        }
        Command::Add { text, answers } => {
            let draft = QuestionDraft {
                id: new_id(),
                text: text.clone(),
                answers: answers
                    .iter()
                    .map(|a| {
                        let (text, correct) = parse_answer_arg(a);
                        Answer::new(new_id(), text, correct)
                    })
                    .collect(),
            };
            let bank = read_bank(&cli.bank)?;
            let id = draft.id.clone();
            let next = merge_sync_payload(&bank, vec![draft], &[]).map_err(|issues| {
                TeacherError::Validation(
                    issues
                        .iter()
                        .flat_map(|i| i.errors.iter().map(|e| format!("  {} ({e})", e.code())))
                        .collect::<Vec<_>>()
                        .join("\n"),
                )
            })?;
            write_file(&cli.bank, serialize_bank(&next).as_bytes())?;
            w(out, format!("added {id}"));
        }
        Command::List => {
            let bank = read_bank(&cli.bank)?;
            let _ = write!(out, "{}", render_bank(&bank));
        }
        Command::Remove { id } => {
            let bank = read_bank(&cli.bank)?;
            let next = bank
                .without(id)
                .ok_or_else(|| TeacherError::NotFound(format!("no local question {id}")))?;
            let mut state = read_sync_state(&cli.bank)?;
            if !state.deletions.contains(id) {
                state.deletions.push(id.clone());
            }
            write_file(&cli.bank, serialize_bank(&next).as_bytes())?;
            write_sync_state(&cli.bank, &state)?;
            w(out, format!("removed {id} (deletion queued for next sync)"));
        }
        Command::Sync => {
            let token = read_token(&cli)?;
            let bank = read_bank(&cli.bank)?;
            let mut state = read_sync_state(&cli.bank)?;
            let questions: Vec<QuestionDraft> =
                bank.questions().iter().map(|q| q.to_draft()).collect();
            let resp = http()
                .post(api(&cli, "/api/sync"))
                .bearer_auth(token)
                .json(&json!({ "questions": questions, "deletions": state.deletions }))
                .send()
                .await?;
            if resp.status() != StatusCode::OK {
                return Err(error_for(resp).await);
            }
            let body: Value = resp.json().await?;
            let revision = body["revision"].as_u64().unwrap_or_default();
            let unchanged = state.server_revision == Some(revision);
            state.deletions.clear();
            state.server_revision = Some(revision);
            write_sync_state(&cli.bank, &state)?;
            w(
                out,
                format!(
                    "synced {} question(s); server revision {revision}{}",
                    bank.len(),
                    if unchanged { " (unchanged)" } else { "" }
                ),
            );
        }
        Command::Start(args) => {
            let token = read_token(&cli)?;
            let mut body = json!({
                "order": if args.shuffle { "shuffled" } else { "sequential" },
                "wrong_policy": if args.retry { "retry" } else { "advance" },
            });
            if args.shuffle {
                // A fresh order per session unless the teacher pins one.
                let seed = args
                    .seed
                    .unwrap_or_else(|| uuid::Uuid::new_v4().as_u64_pair().0);
                body["shuffle_seed"] = json!(seed);
                w(out, format!("shuffle seed {seed}"));
            }
            if let Some(hold) = args.hold_ms {
                body["feedback_hold_ms"] = json!(hold);
            }
            let resp = http()
                .post(api(&cli, "/api/session/start"))
                .bearer_auth(token)
                .json(&body)
                .send()
                .await?;
            if resp.status() != StatusCode::OK {
                return Err(error_for(resp).await);
            }
            let status: Value = resp.json().await?;
            w(
                out,
                format!("session started: {} question(s)", status["total"]),
            );
        }
        Command::Stop => {
            let token = read_token(&cli)?;
            let resp = http()
                .post(api(&cli, "/api/session/stop"))
                .bearer_auth(token)
                .send()
                .await?;
            if resp.status() != StatusCode::OK {
                return Err(error_for(resp).await);
            }
            let summary: Value = resp.json().await?;
            w(
                out,
                format!(
                    "session stopped: {} of {} correct, {} answer(s) logged",
                    summary["correct_count"],
                    summary["total"],
                    summary["entries"].as_array().map_or(0, Vec::len)
                ),
            );
        }
        Command::Watch => {
            let url = ws_url_from_http(&cli.hub);
            let mut socket = HubSocket::connect(&url, ClientRole::Observer).await?;
            w(out, format!("watching {url}"));
            loop {
                let Some(frame) = socket.next_frame(Duration::from_secs(3600)).await? else {
                    continue;
                };
                let Some(msg) = frame.message else { continue };
                let finished = matches!(msg, WireMessage::Finished { .. });
                if let Some(line) = describe(&msg) {
                    w(out, line);
                    let _ = out.flush();
                }
                if finished {
                    break;
                }
            }
            socket.close().await;
        }
    }
    Ok(())
}

/// Human-readable rendering of a hub frame for `watch`.
pub fn describe(msg: &WireMessage) -> Option<String> {
    match msg {
        WireMessage::Question {
            index,
            total,
            text,
            answers,
        } => {
            let mut s = format!("Question {index}/{total}: {text}");
            for (i, a) in answers.iter().enumerate() {
                s.push_str(&format!(
                    "\n   {} {:<6} {}",
                    i + 1,
                    a.color.as_str(),
                    a.label
                ));
            }
            Some(s)
        }
        WireMessage::Feedback {
            segment, message, ..
        } => Some(format!("  segment {} -> {message}", segment + 1)),
        WireMessage::Finished {
            correct_count,
            total,
        } => Some(format!("Finished: {correct_count} of {total} correct")),
        WireMessage::Error { code, detail } => Some(format!("error {code:?}: {detail}")),
        _ => None,
    }
}
