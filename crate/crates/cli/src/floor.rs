//! Floor simulator: stands in for the physical mat.
//!
//! Script format, one command per line, `#` starts a comment:
//!
//! ```text
//! wait 500                 # sleep 500 ms (must be positive)
//! press 2                  # step on segment 2 (0-3)
//! expect feedback correct  # next feedback frame must say correct (or `wrong`)
//! ```

use std::io::Write;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use edu_core::{ClientRole, WireMessage};
use thiserror::Error;
use tokio::io::{AsyncBufReadExt, BufReader};
use tokio::sync::mpsc;

use crate::client::{ClientError, HubSocket};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ASSERTION: i32 = 1;
pub const EXIT_CONNECTIVITY: i32 = 2;
pub const EXIT_PARSE: i32 = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScriptCommand {
    Wait { ms: u64 },
    Press { segment: u8 },
    ExpectFeedback { correct: bool },
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PressScript {
    pub commands: Vec<ScriptCommand>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {reason}")]
pub struct ScriptError {
    pub line: usize,
    pub reason: String,
}

pub fn parse_script(text: &str) -> Result<PressScript, ScriptError> {
    let mut commands = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let err = |reason: String| ScriptError { line, reason };
        let words: Vec<&str> = content.split_whitespace().collect();
        let cmd = match words.as_slice() {
            ["wait", ms] => {
                let ms: u64 = ms
                    .parse()
                    .map_err(|_| err(format!("wait needs a positive integer, got {ms:?}")))?;
                if ms == 0 {
                    return Err(err("wait must be positive".into()));
                }
                ScriptCommand::Wait { ms }
            }
            ["press", seg] => match seg.parse::<u8>() {
                Ok(segment) if segment <= 3 => ScriptCommand::Press { segment },
                _ => return Err(err(format!("segment must be 0-3, got {seg:?}"))),
            },
            ["expect", "feedback", verdict] => match *verdict {
                "correct" => ScriptCommand::ExpectFeedback { correct: true },
                "wrong" => ScriptCommand::ExpectFeedback { correct: false },
                other => return Err(err(format!("expected `correct` or `wrong`, got {other:?}"))),
            },
            _ => return Err(err(format!("unknown command {content:?}"))),
        };
        commands.push(cmd);
    }
    Ok(PressScript { commands })
}

#[derive(Debug, Error)]
pub enum FloorError {
    #[error(transparent)]
    Client(#[from] ClientError),
    #[error("assertion failed at command {index}: expected {expected} feedback, got {got}")]
    AssertionFailed {
        index: usize,
        expected: &'static str,
        got: String,
    },
}

impl FloorError {
    pub fn exit_code(&self) -> i32 {
        match self {
            FloorError::Client(_) => EXIT_CONNECTIVITY,
            FloorError::AssertionFailed { .. } => EXIT_ASSERTION,
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub hub: String,
    /// How long `expect feedback` waits for the verdict.
    pub expect_timeout: Duration,
    /// Time to keep listening after the last command.
    pub linger: Duration,
    /// Print every received frame to stdout.
    pub echo: bool,
}

impl RunOptions {
    pub fn new(hub: impl Into<String>) -> Self {
        Self {
            hub: hub.into(),
            expect_timeout: Duration::from_secs(10),
            linger: Duration::from_millis(300),
            echo: true,
        }
    }
}

#[derive(Debug)]
pub struct RunReport {
    pub result: Result<(), FloorError>,
    /// Every frame received, in receipt order.
    pub transcript: Vec<String>,
}

impl RunReport {
    pub fn exit_code(&self) -> i32 {
        match &self.result {
            Ok(()) => EXIT_OK,
            Err(e) => e.exit_code(),
        }
    }
}

/// Input source for a run.
pub enum Mode {
    Script(PressScript),
    /// Keys 1-4 on stdin press segments 0-3; `q` or end of input stops.
    Interactive,
}

pub async fn run(mode: Mode, opts: &RunOptions) -> RunReport {
    let transcript = Arc::new(Mutex::new(Vec::new()));
    let result = drive(mode, opts, transcript.clone()).await;
    let transcript = std::mem::take(&mut *transcript.lock().expect("transcript poisoned"));
    RunReport { result, transcript }
}

async fn drive(
    mode: Mode,
    opts: &RunOptions,
    transcript: Arc<Mutex<Vec<String>>>,
) -> Result<(), FloorError> {
    let socket = HubSocket::connect(&opts.hub, ClientRole::Floor).await?;
    let (mut sender, mut receiver) = socket.split();

    let (verdict_tx, mut verdicts) = mpsc::unbounded_channel::<bool>();
    let echo = opts.echo;
    let sink = transcript.clone();
    let reader = tokio::spawn(async move {
        while let Some(frame) = receiver.recv().await {
            if echo {
                println!("{}", frame.raw);
                let _ = std::io::stdout().flush();
            }
            if let Some(WireMessage::Feedback { correct, .. }) = frame.message {
                let _ = verdict_tx.send(correct);
            }
            sink.lock().expect("transcript poisoned").push(frame.raw);
        }
    });

    let outcome = match mode {
        Mode::Script(script) => execute(&script, opts, &mut sender, &mut verdicts).await,
        Mode::Interactive => interactive(&mut sender).await,
    };

    if outcome.is_ok() {
        tokio::time::sleep(opts.linger).await;
    }
    sender.close().await;
    reader.abort();
    outcome
}

async fn execute(
    script: &PressScript,
    opts: &RunOptions,
    sender: &mut crate::client::SocketSender,
    verdicts: &mut mpsc::UnboundedReceiver<bool>,
) -> Result<(), FloorError> {
    for (index, cmd) in script.commands.iter().enumerate() {
        match *cmd {
            ScriptCommand::Wait { ms } => tokio::time::sleep(Duration::from_millis(ms)).await,
            ScriptCommand::Press { segment } => {
                sender
                    .send(&WireMessage::Press {
                        segment: segment.into(),
                    })
                    .await?
            }
            ScriptCommand::ExpectFeedback { correct } => {
                let expected = if correct { "correct" } else { "wrong" };
                let got = tokio::time::timeout(opts.expect_timeout, verdicts.recv()).await;
                match got {
                    Ok(Some(v)) if v == correct => {}
                    Ok(Some(v)) => {
                        return Err(FloorError::AssertionFailed {
                            index,
                            expected,
                            got: if v { "correct" } else { "wrong" }.into(),
                        })
                    }
                    Ok(None) => {
                        return Err(FloorError::Client(ClientError::Disconnected(
                            "hub closed the connection".into(),
                        )))
                    }
                    Err(_) => {
                        return Err(FloorError::AssertionFailed {
                            index,
                            expected,
                            got: "no feedback".into(),
                        })
                    }
                }
            }
        }
    }
    Ok(())
}

async fn interactive(sender: &mut crate::client::SocketSender) -> Result<(), FloorError> {
    eprintln!("floor-sim: keys 1-4 press segments 0-3 (Enter to send), q to quit");
    let mut lines = BufReader::new(tokio::io::stdin()).lines();
    while let Ok(Some(line)) = lines.next_line().await {
        for key in line.chars() {
            match key {
                '1'..='4' => {
                    let segment = key as u32 - '1' as u32;
                    sender.send(&WireMessage::Press { segment }).await?;
                }
                'q' => return Ok(()),
                _ => {}
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_press() {
        assert_eq!(
            parse_script("press 2").unwrap().commands,
            vec![ScriptCommand::Press { segment: 2 }]
        );
    }

    #[test]
    fn three_commands_with_comments() {
        let script =
            parse_script("# warmup\nwait 500\npress 0   # red\n\nexpect feedback wrong\n").unwrap();
        assert_eq!(
            script.commands,
            vec![
                ScriptCommand::Wait { ms: 500 },
                ScriptCommand::Press { segment: 0 },
                ScriptCommand::ExpectFeedback { correct: false },
            ]
        );
    }

    #[test]
    fn errors_carry_line_numbers() {
        assert_eq!(parse_script("press 7").unwrap_err().line, 1);
        assert_eq!(parse_script("press 1\nwait 0").unwrap_err().line, 2);
        assert_eq!(parse_script("\n\nwait soon").unwrap_err().line, 3);
        assert_eq!(parse_script("press -1").unwrap_err().line, 1);
        assert_eq!(parse_script("expect feedback maybe").unwrap_err().line, 1);
        assert_eq!(parse_script("jump 2").unwrap_err().line, 1);
    }
}
