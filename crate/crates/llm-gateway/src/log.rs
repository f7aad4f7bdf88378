//! The shared JSON-lines call log: concurrent appends, per-match ordering
//! preserved by each session's sequence counter.

use crate::CallRecord;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::{Arc, Mutex};

#[derive(Clone)]
pub struct CallLog {
    writer: Arc<Mutex<BufWriter<File>>>,
}

impl CallLog {
    /// Open (and append to) the log file at `path`, creating it if needed.
    pub fn open(path: &Path) -> std::io::Result<Self> {
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(CallLog {
            writer: Arc::new(Mutex::new(BufWriter::new(file))),
        })
    }

    pub fn append(&self, record: &CallRecord) -> std::io::Result<()> {
        let line = serde_json::to_string(record).expect("record serializes");
        let mut writer = self.writer.lock().expect("log lock");
        writeln!(writer, "{line}")?;
        writer.flush()
    }
}

/// Read every record from a call log file.
pub fn load_call_log(path: &Path) -> std::io::Result<Vec<CallRecord>> {
    let reader = BufReader::new(File::open(path)?);
    let mut records = Vec::new();
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line)
            .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))?;
        records.push(record);
    }
    Ok(records)
}
