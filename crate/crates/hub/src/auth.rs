//! Teacher credentials and bearer tokens.
//!
//! Passwords are stored as PHC strings produced by PBKDF2-HMAC-SHA256 with
//! a 16-byte random salt and a 32-byte output. The round count is part of
//! the stored string, so it can be raised later without invalidating old
//! accounts. Tokens are 32 random bytes, hex encoded, kept in memory only.

use std::collections::HashMap;

use edu_core::Timestamp;
use pbkdf2::password_hash::{PasswordHash, PasswordHasher, PasswordVerifier, SaltString};
use pbkdf2::{Algorithm, Params, Pbkdf2};
use rand::rngs::OsRng;
use rand::RngCore;
use serde::Serialize;

pub const DEFAULT_PASSWORD_ROUNDS: u32 = 600_000;

#[derive(Clone, Copy, Debug)]
pub struct PasswordPolicy {
    pub rounds: u32,
}

impl Default for PasswordPolicy {
    fn default() -> Self {
        Self {
            rounds: DEFAULT_PASSWORD_ROUNDS,
        }
    }
}

impl PasswordPolicy {
    pub fn hash(&self, password: &str) -> String {
        let mut salt = [0u8; 16];
        OsRng.fill_bytes(&mut salt);
        let salt = SaltString::encode_b64(&salt).expect("16-byte salt encodes");
        let params = Params {
            rounds: self.rounds,
            output_length: 32,
        };
        Pbkdf2
            .hash_password_customized(
                password.as_bytes(),
                Some(Algorithm::Pbkdf2Sha256.ident()),
                None,
                params,
                &salt,
            )
            .expect("pbkdf2 parameters are valid")
            .to_string()
    }

    pub fn verify(&self, password: &str, stored: &str) -> bool {
        match PasswordHash::new(stored) {
            Ok(parsed) => Pbkdf2.verify_password(password.as_bytes(), &parsed).is_ok(),
            Err(_) => false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AuthToken {
    pub token: String,
    #[serde(skip)]
    pub teacher: String,
    pub expires_at: Timestamp,
}

#[derive(Debug)]
pub struct TokenRegistry {
    ttl_ms: u64,
    live: HashMap<String, AuthToken>,
}

impl TokenRegistry {
    pub fn new(ttl_ms: u64) -> Self {
        Self {
            ttl_ms,
            live: HashMap::new(),
        }
    }

    pub fn issue(&mut self, teacher: &str, now: Timestamp) -> AuthToken {
        self.prune(now);
        let mut bytes = [0u8; 32];
        OsRng.fill_bytes(&mut bytes);
        let token = AuthToken {
            token: hex::encode(bytes),
            teacher: teacher.to_owned(),
            expires_at: now.plus_millis(self.ttl_ms),
        };
        self.live.insert(token.token.clone(), token.clone());
        token
    }

    /// Returns the teacher for a live token. Expired tokens are dropped.
    pub fn check(&mut self, token: &str, now: Timestamp) -> Option<String> {
        match self.live.get(token) {
            Some(t) if now < t.expires_at => Some(t.teacher.clone()),
            Some(_) => {
                self.live.remove(token);
                None
            }
            None => None,
        }
    }

    fn prune(&mut self, now: Timestamp) {
        self.live.retain(|_, t| now < t.expires_at);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_and_verify() {
        let policy = PasswordPolicy { rounds: 1000 };
        let stored = policy.hash("s3cret");
        assert!(
            stored.starts_with("$pbkdf2-sha256$i=1000,l=32$"),
            "{stored}"
        );
        assert!(!stored.contains("s3cret"));
        assert!(policy.verify("s3cret", &stored));
        assert!(!policy.verify("secret", &stored));
        assert!(!policy.verify("s3cret", "garbage"));
        // Salted: same password, different digests.
        assert_ne!(stored, policy.hash("s3cret"));
    }

    #[test]
    fn tokens_expire() {
        let mut reg = TokenRegistry::new(1000);
        let tok = reg.issue("ana", Timestamp(0));
        assert_eq!(tok.token.len(), 64);
        assert_eq!(
            reg.check(&tok.token, Timestamp(999)).as_deref(),
            Some("ana")
        );
        assert_eq!(reg.check(&tok.token, Timestamp(1000)), None);
        assert_eq!(reg.check(&tok.token, Timestamp(10)), None);
        assert_eq!(reg.check("bogus", Timestamp(0)), None);
    }
}
