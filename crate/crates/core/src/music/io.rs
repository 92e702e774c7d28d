//! Event files: JSON lines, one `{"t", "a", "part"}` object per event, with an
//! optional leading header line naming the format version.

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::MusicEvent;
use crate::error::{Error, Result};

pub const EVENTS_FORMAT: &str = "ppsmc-events";
pub const EVENTS_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Header {
    format: String,
    version: u32,
}

pub fn write_events<W: Write>(mut out: W, events: &[MusicEvent]) -> Result<()> {
    serde_json::to_writer(
        &mut out,
        &Header {
            format: EVENTS_FORMAT.into(),
            version: EVENTS_VERSION,
        },
    )?;
    out.write_all(b"\n")?;
    for ev in events {
        serde_json::to_writer(&mut out, ev)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_events<R: Read>(input: R) -> Result<Vec<MusicEvent>> {
    let mut events = Vec::new();
    for (n, line) in BufReader::new(input).lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let value: serde_json::Value = serde_json::from_str(line)?;
        if value.get("format").is_some() {
            let header: Header = serde_json::from_value(value)?;
            if n != 0 || header.format != EVENTS_FORMAT || header.version != EVENTS_VERSION {
                return Err(Error::Format(format!(
                    "unsupported event file header {} v{} on line {}",
                    header.format,
                    header.version,
                    n + 1
                )));
            }
            continue;
        }
        events.push(
            serde_json::from_value(value)
                .map_err(|e| Error::Format(format!("line {}: {e}", n + 1)))?,
        );
    }
    Ok(events)
}

pub fn load_events(path: &Path) -> Result<Vec<MusicEvent>> {
    read_events(fs::File::open(path)?)
}

pub fn save_events(path: &Path, events: &[MusicEvent]) -> Result<()> {
    let mut buf = Vec::new();
    write_events(&mut buf, events)?;
    fs::write(path, buf)?;
    Ok(())
}

/// Event files (`*.jsonl`) in a corpus directory, sorted by name.
pub fn corpus_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
        .collect();
    files.sort();
    Ok(files)
}
