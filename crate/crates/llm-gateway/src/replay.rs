//! Replay backend: answers requests from a recorded call log, strictly in
//! recorded per-match order, verifying that each request digest matches the
//! recorded one.

use crate::{
    request_digest, CallRecord, ChatSession, Completion, CompletionRequest, Gateway, GatewayError,
};
use std::collections::HashMap;
use std::path::Path;
use std::sync::Mutex;

pub struct ReplayGateway {
    // Records per match, in recorded seq order; sessions drain their entry.
    by_match: Mutex<HashMap<String, Vec<CallRecord>>>,
}

impl ReplayGateway {
    pub fn from_records(records: Vec<CallRecord>) -> Self {
        let mut by_match: HashMap<String, Vec<CallRecord>> = HashMap::new();
        for record in records {
            by_match
                .entry(record.match_key.clone())
                .or_default()
                .push(record);
        }
        for queue in by_match.values_mut() {
            queue.sort_by_key(|r| r.seq);
        }
        ReplayGateway {
            by_match: Mutex::new(by_match),
        }
    }

    pub fn from_log(path: &Path) -> std::io::Result<Self> {
        Ok(Self::from_records(crate::load_call_log(path)?))
    }
}

impl Gateway for ReplayGateway {
    fn session(&self, match_key: &str) -> Box<dyn ChatSession> {
        let records = self
            .by_match
            .lock()
            .expect("replay lock")
            .remove(match_key)
            .unwrap_or_default();
        Box::new(ReplaySession {
            match_key: match_key.to_string(),
            records: records.into_iter(),
            seq: 0,
        })
    }
}

struct ReplaySession {
    match_key: String,
    records: std::vec::IntoIter<CallRecord>,
    seq: u64,
}

impl ChatSession for ReplaySession {
    fn complete(&mut self, request: &CompletionRequest) -> Result<Completion, GatewayError> {
        let record = self
            .records
            .next()
            .ok_or_else(|| GatewayError::ReplayExhausted {
                match_key: self.match_key.clone(),
                seq: self.seq,
            })?;
        if record.digest != request_digest(request) {
            return Err(GatewayError::ReplayMismatch {
                match_key: self.match_key.clone(),
                seq: self.seq,
            });
        }
        self.seq += 1;
        Ok(Completion {
            text: record.response,
            attempt: record.attempt,
        })
    }
}
