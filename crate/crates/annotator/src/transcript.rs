use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::path::Path;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::error::{ProviderError, TranscriptError};
use crate::provider::{ChatProvider, ChatRequest};

/// One line of a transcript file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub request_hash: String,
    pub reply: String,
}

pub fn read_transcript(reader: impl BufRead) -> Result<Vec<TranscriptEntry>, TranscriptError> {
    let mut out = Vec::new();
    for (k, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let entry = serde_json::from_str(&line).map_err(|e| TranscriptError::Parse { line: k + 1, message: e.to_string() })?;
        out.push(entry);
    }
    Ok(out)
}

pub fn write_transcript(mut writer: impl Write, entries: &[TranscriptEntry]) -> Result<(), TranscriptError> {
    for e in entries {
        let line = serde_json::to_string(e).expect("entries always serialize");
        writeln!(writer, "{line}")?;
    }
    Ok(())
}

/// Replays recorded replies by request hash. A request seen several times
/// gets its recorded replies in order, then the last one again.
#[derive(Debug, Default)]
pub struct TranscriptProvider {
    replies: HashMap<String, Vec<String>>,
    served: Mutex<HashMap<String, usize>>,
}

impl TranscriptProvider {
    pub fn new(entries: Vec<TranscriptEntry>) -> Self {
        let mut replies: HashMap<String, Vec<String>> = HashMap::new();
        for e in entries {
            replies.entry(e.request_hash).or_default().push(e.reply);
        }
        Self { replies, served: Mutex::new(HashMap::new()) }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, TranscriptError> {
        let file = std::fs::File::open(path)?;
        Ok(Self::new(read_transcript(std::io::BufReader::new(file))?))
    }
}

impl ChatProvider for TranscriptProvider {
    fn complete(&self, request: &ChatRequest) -> Result<String, ProviderError> {
        let hash = request.hash();
        let list = self
            .replies
            .get(&hash)
            .ok_or_else(|| ProviderError::NotInTranscript { request_hash: hash.clone() })?;
        let mut served = self.served.lock().expect("transcript lock");
        let k = served.entry(hash).or_insert(0);
        let reply = list[(*k).min(list.len() - 1)].clone();
        *k += 1;
        Ok(reply)
    }
}

/// Passes requests through to another provider and records every reply.
#[derive(Debug)]
pub struct RecordingProvider<P> {
    inner: P,
    log: Mutex<Vec<TranscriptEntry>>,
}

impl<P> RecordingProvider<P> {
    pub fn new(inner: P) -> Self {
        Self { inner, log: Mutex::new(Vec::new()) }
    }

    /// Recorded entries grouped by hash, keeping per-hash order, so the
    /// file does not depend on request timing.
    pub fn entries(&self) -> Vec<TranscriptEntry> {
        let mut out = self.log.lock().expect("recording lock").clone();
        out.sort_by(|a, b| a.request_hash.cmp(&b.request_hash));
        out
    }
}

impl<P: ChatProvider + Send> ChatProvider for RecordingProvider<P> {
    fn complete(&self, request: &ChatRequest) -> Result<String, ProviderError> {
        let reply = self.inner.complete(request)?;
        self.log
            .lock()
            .expect("recording lock")
            .push(TranscriptEntry { request_hash: request.hash(), reply: reply.clone() });
        Ok(reply)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::provider::RequestSettings;

    #[test]
    fn replays_in_recorded_order() {
        let req = RequestSettings::new("m").request("q".into());
        let h = req.hash();
        let p = TranscriptProvider::new(vec![
            TranscriptEntry { request_hash: h.clone(), reply: "A".into() },
            TranscriptEntry { request_hash: h, reply: "B".into() },
        ]);
        let got: Vec<String> = (0..3).map(|_| p.complete(&req).unwrap()).collect();
        assert_eq!(got, ["A", "B", "B"]);
        let other = RequestSettings::new("m").request("other".into());
        assert!(matches!(p.complete(&other), Err(ProviderError::NotInTranscript { .. })));
    }

    #[test]
    fn file_round_trip() {
        let entries = vec![TranscriptEntry { request_hash: "ab".into(), reply: "line\nbreak \"quoted\"".into() }];
        let mut buf = Vec::new();
        write_transcript(&mut buf, &entries).unwrap();
        assert_eq!(read_transcript(buf.as_slice()).unwrap(), entries);
        let err = read_transcript("{\"request_hash\": 1}\n".as_bytes()).unwrap_err();
        assert!(matches!(err, TranscriptError::Parse { line: 1, .. }));
    }
}
