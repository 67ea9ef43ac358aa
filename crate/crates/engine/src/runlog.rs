//! Append-only JSON Lines run log. Wall times and clock stamps go to a
//! sidecar file keyed by event id so the main log is reproducible.

use std::fs::{File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LogRecord {
    pub event: u64,
    pub phase: String,
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outer: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub turn: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub player: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slot: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub operator: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub status: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none", with = "crate::numfmt::opt")]
    pub mean_cost: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none", with = "crate::numfmt::opt")]
    pub improvement: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none", with = "crate::numfmt::opt")]
    pub q: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none", with = "crate::numfmt::opt")]
    pub reward: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none", with = "crate::numfmt::opt")]
    pub baseline_cost: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none", with = "crate::numfmt::opt")]
    pub best_p1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none", with = "crate::numfmt::opt")]
    pub best_p2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub digest: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start_digest: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fallback: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cached: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attempts: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prompt_tokens: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub completion_tokens: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<Value>,
}

impl LogRecord {
    pub fn new(phase: &str, kind: &str) -> Self {
        Self { phase: phase.to_string(), kind: kind.to_string(), ..Self::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRecord {
    pub event: u64,
    pub wall_ms: f64,
    pub unix_ms: u128,
}

pub const RUN_LOG: &str = "run.jsonl";
pub const TIMING_LOG: &str = "timing.jsonl";

/// Log writer; without a directory it only keeps records in memory.
#[derive(Debug)]
pub struct RunLog {
    records: Vec<LogRecord>,
    files: Option<(File, File)>,
    dir: Option<PathBuf>,
}

impl RunLog {
    pub fn in_memory() -> Self {
        Self { records: Vec::new(), files: None, dir: None }
    }

    /// Opens `dir/run.jsonl`, keeping only the first `keep` events of any
    /// existing log and dropping the matching timing rows.
    pub fn open(dir: &Path, keep: u64) -> io::Result<Self> {
        std::fs::create_dir_all(dir)?;
        let run = dir.join(RUN_LOG);
        let timing = dir.join(TIMING_LOG);
        let records: Vec<LogRecord> = read_log(&run).unwrap_or_default().into_iter().take(keep as usize).collect();
        if records.len() as u64 != keep {
            return Err(io::Error::new(
                io::ErrorKind::InvalidData,
                format!("run log holds {} events, snapshot expects {keep}", records.len()),
            ));
        }
        let mut text = String::new();
        for r in &records {
            text.push_str(&serde_json::to_string(r).map_err(io::Error::other)?);
            text.push('\n');
        }
        std::fs::write(&run, text)?;
        let timing_rows: Vec<String> = read_lines(&timing)
            .unwrap_or_default()
            .into_iter()
            .filter(|l| serde_json::from_str::<TimingRecord>(l).is_ok_and(|t| t.event < keep))
            .collect();
        std::fs::write(&timing, timing_rows.iter().map(|l| format!("{l}\n")).collect::<String>())?;
        let open = |p: &Path| OpenOptions::new().append(true).create(true).open(p);
        Ok(Self { records, files: Some((open(&run)?, open(&timing)?)), dir: Some(dir.to_path_buf()) })
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    pub fn len(&self) -> u64 {
        self.records.len() as u64
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[LogRecord] {
        &self.records
    }

    /// Stamps the next event id onto `record` and writes it out.
    pub fn append(&mut self, mut record: LogRecord, wall: Option<Duration>) -> io::Result<u64> {
        let id = self.records.len() as u64;
        record.event = id;
        if let Some((run, timing)) = &mut self.files {
            let line = serde_json::to_string(&record).map_err(io::Error::other)?;
            run.write_all(format!("{line}\n").as_bytes())?;
            let t = TimingRecord {
                event: id,
                wall_ms: wall.map_or(0.0, |w| w.as_secs_f64() * 1e3),
                unix_ms: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis()),
            };
            timing.write_all(format!("{}\n", serde_json::to_string(&t).map_err(io::Error::other)?).as_bytes())?;
        }
        self.records.push(record);
        Ok(id)
    }
}

fn read_lines(path: &Path) -> io::Result<Vec<String>> {
    let f = File::open(path)?;
    BufReader::new(f).lines().filter(|l| l.as_ref().map_or(true, |s| !s.trim().is_empty())).collect()
}

/// Reads a run log; a torn final line from a crash is dropped.
pub fn read_log(path: &Path) -> io::Result<Vec<LogRecord>> {
    let lines = read_lines(path)?;
    let n = lines.len();
    let mut out = Vec::with_capacity(n);
    for (i, l) in lines.into_iter().enumerate() {
        match serde_json::from_str::<LogRecord>(&l) {
            Ok(r) => out.push(r),
            Err(_) if i + 1 == n => break,
            Err(e) => return Err(io::Error::new(io::ErrorKind::InvalidData, format!("line {}: {e}", i + 1))),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn append_and_truncate() {
        let dir = tempfile::tempdir().unwrap();
        let mut log = RunLog::open(dir.path(), 0).unwrap();
        for i in 0..5 {
            let mut r = LogRecord::new("outer", "evaluation");
            r.improvement = Some(if i == 2 { f64::NEG_INFINITY } else { i as f64 });
            log.append(r, Some(Duration::from_millis(3))).unwrap();
        }
        drop(log);
        let all = read_log(&dir.path().join(RUN_LOG)).unwrap();
        assert_eq!(all.iter().map(|r| r.event).collect::<Vec<_>>(), vec![0, 1, 2, 3, 4]);
        assert_eq!(all[2].improvement, Some(f64::NEG_INFINITY));
        let mut log = RunLog::open(dir.path(), 3).unwrap();
        assert_eq!(log.append(LogRecord::new("outer", "x"), None).unwrap(), 3);
        drop(log);
        assert_eq!(read_log(&dir.path().join(RUN_LOG)).unwrap().len(), 4);
        assert_eq!(read_lines(&dir.path().join(TIMING_LOG)).unwrap().len(), 4);
        assert!(RunLog::open(dir.path(), 9).is_err());
    }
}
