//! Result persistence.
//!
//! Per-episode records stream to `episodes.csv` (columns
//! `seed,return,steps,termination`, in that order) or `episodes.jsonl`, one
//! row per episode in episode-index order, flushed as each row is written so
//! an interrupted batch leaves every finished prefix on disk. Aggregates go to
//! `summary.json` once the batch completes.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use lceopt_core::{EpisodeRecord, Termination};
use serde::{Deserialize, Serialize};

use crate::config::OutputFormat;
use crate::BenchError;

pub const CSV_FILE: &str = "episodes.csv";
pub const JSONL_FILE: &str = "episodes.jsonl";
pub const SUMMARY_FILE: &str = "summary.json";

#[derive(Debug, Serialize, Deserialize)]
struct CsvRow {
    seed: u64,
    #[serde(rename = "return")]
    discounted_return: f64,
    steps: usize,
    termination: Termination,
}

pub fn episodes_path(dir: &Path, format: OutputFormat) -> PathBuf {
    dir.join(match format {
        OutputFormat::Csv => CSV_FILE,
        OutputFormat::Json => JSONL_FILE,
    })
}

pub enum EpisodeWriter {
    Csv(Box<csv::Writer<File>>),
    Json(BufWriter<File>),
}

fn runtime<E: std::fmt::Display>(e: E) -> BenchError {
    BenchError::Runtime(e.to_string())
}

impl EpisodeWriter {
    pub fn create(dir: &Path, format: OutputFormat) -> Result<Self, BenchError> {
        std::fs::create_dir_all(dir)?;
        let file = File::create(episodes_path(dir, format))?;
        Ok(match format {
            OutputFormat::Csv => EpisodeWriter::Csv(Box::new(csv::Writer::from_writer(file))),
            OutputFormat::Json => EpisodeWriter::Json(BufWriter::new(file)),
        })
    }

    pub fn write(&mut self, record: &EpisodeRecord) -> Result<(), BenchError> {
        match self {
            EpisodeWriter::Csv(w) => {
                w.serialize(CsvRow {
                    seed: record.seed,
                    discounted_return: record.discounted_return,
                    steps: record.steps,
                    termination: record.termination,
                })
                .map_err(runtime)?;
                w.flush()?;
            }
            EpisodeWriter::Json(w) => {
                serde_json::to_writer(&mut *w, record).map_err(runtime)?;
                w.write_all(b"\n")?;
                w.flush()?;
            }
        }
        Ok(())
    }
}

/// Reads back persisted records. CSV rows carry no diagnostic.
pub fn read_episodes(path: &Path) -> Result<Vec<EpisodeRecord>, BenchError> {
    let is_csv = path.extension().is_some_and(|e| e == "csv");
    if is_csv {
        let mut reader = csv::Reader::from_path(path).map_err(runtime)?;
        reader
            .deserialize::<CsvRow>()
            .map(|row| {
                row.map(|r| EpisodeRecord {
                    seed: r.seed,
                    discounted_return: r.discounted_return,
                    steps: r.steps,
                    termination: r.termination,
                    diagnostic: None,
                })
                .map_err(runtime)
            })
            .collect()
    } else {
        BufReader::new(File::open(path)?)
            .lines()
            .filter(|l| !matches!(l, Ok(s) if s.trim().is_empty()))
            .map(|l| serde_json::from_str(&l?).map_err(runtime))
            .collect()
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), BenchError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let mut text = serde_json::to_string_pretty(value).map_err(runtime)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}
