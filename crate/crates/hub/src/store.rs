//! File-backed persistence for teachers and the question bank.
//!
//! The store is one canonical JSON document:
//! `{"teachers":[...],"bank":{"revision":N,"questions":[...]}}`.
//! Writes go to a temporary file in the same directory which is fsynced and
//! renamed over the target, so a crash leaves either the old or the new
//! document, never a torn one.

use std::collections::HashSet;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use edu_core::{QuestionBank, TeacherAccount};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Store {
    pub teachers: Vec<TeacherAccount>,
    pub bank: QuestionBank,
}

impl Store {
    pub fn teacher(&self, username: &str) -> Option<&TeacherAccount> {
        self.teachers.iter().find(|t| t.username == username)
    }

    pub fn to_document(&self) -> String {
        serde_json::to_string(self).expect("store serialization is infallible")
    }
}

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("store {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("store {path} is corrupt at line {line}, column {column}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("store {path} is invalid: {detail}")]
    Invalid { path: PathBuf, detail: String },
}

/// Loads the store at `path`. A missing file is an empty store.
pub fn load_store(path: &Path) -> Result<Store, StoreError> {
    let bytes = match fs::read(path) {
        Ok(bytes) => bytes,
        Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(Store::default()),
        Err(source) => {
            return Err(StoreError::Io {
                path: path.to_owned(),
                source,
            })
        }
    };
    let store: Store = serde_json::from_slice(&bytes).map_err(|e| StoreError::Parse {
        path: path.to_owned(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;

    let mut names = HashSet::new();
    for t in &store.teachers {
        if !names.insert(t.username.as_str()) {
            return Err(StoreError::Invalid {
                path: path.to_owned(),
                detail: format!("duplicate teacher {:?}", t.username),
            });
        }
    }
    Ok(store)
}

/// Atomically replaces the file at `path` with the serialized store.
pub fn persist_store(store: &Store, path: &Path) -> Result<(), StoreError> {
    write_atomic(path, store.to_document().as_bytes()).map_err(|source| StoreError::Io {
        path: path.to_owned(),
        source,
    })
}

pub(crate) fn write_atomic(path: &Path, contents: &[u8]) -> io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    // Make the rename itself durable.
    #[cfg(unix)]
    fs::File::open(dir)?.sync_all()?;
    Ok(())
}
