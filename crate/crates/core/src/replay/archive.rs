//! JSON-lines replay archive: a header line
//! `{"format":"advlogic-replays","version":1}` followed by one replay per
//! line.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Replay, ReplayError};

pub const ARCHIVE_VERSION: u32 = 1;
const FORMAT: &str = "advlogic-replays";

#[derive(Serialize, Deserialize)]
struct Header {
    format: String,
    version: u32,
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> ReplayError + '_ {
    move |source| ReplayError::Io {
        path: path.display().to_string(),
        source,
    }
}

pub fn write_archive(path: &Path, replays: &[Replay]) -> Result<(), ReplayError> {
    let mut w = BufWriter::new(File::create(path).map_err(io_err(path))?);
    let header = Header {
        format: FORMAT.into(),
        version: ARCHIVE_VERSION,
    };
    writeln!(w, "{}", json(&header)?).map_err(io_err(path))?;
    for r in replays {
        writeln!(w, "{}", json(r)?).map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

fn json<T: Serialize>(value: &T) -> Result<String, ReplayError> {
    serde_json::to_string(value).map_err(|e| ReplayError::Archive(e.to_string()))
}

pub fn read_archive(path: &Path) -> Result<Vec<Replay>, ReplayError> {
    let reader = BufReader::new(File::open(path).map_err(io_err(path))?);
    let mut lines = reader.lines();
    let first = lines
        .next()
        .ok_or_else(|| ReplayError::Archive("missing header".into()))?
        .map_err(io_err(path))?;
    let header: Header = serde_json::from_str(&first).map_err(|e| ReplayError::Archive(format!("bad header: {e}")))?;
    if header.format != FORMAT || header.version != ARCHIVE_VERSION {
        return Err(ReplayError::Archive(format!(
            "unsupported archive {} version {}",
            header.format, header.version
        )));
    }
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let r = serde_json::from_str(&line).map_err(|e| ReplayError::Archive(format!("record {}: {e}", i + 1)))?;
        out.push(r);
    }
    Ok(out)
}
