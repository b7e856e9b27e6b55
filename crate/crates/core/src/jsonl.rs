//! Line-delimited JSON helpers.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

/// A line that failed to parse.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BadLine {
    pub line: usize,
    pub error: String,
}

/// Reads every parseable line; blank lines are ignored, bad lines are returned
/// separately with their 1-based line number.
pub fn read_lenient<T: DeserializeOwned>(path: &Path) -> std::io::Result<(Vec<T>, Vec<BadLine>)> {
    let reader = BufReader::new(File::open(path)?);
    let mut good = Vec::new();
    let mut bad = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str(&line) {
            Ok(v) => good.push(v),
            Err(e) => bad.push(BadLine {
                line: i + 1,
                error: e.to_string(),
            }),
        }
    }
    Ok((good, bad))
}

/// Reads every line, failing on the first bad one.
pub fn read_strict<T: DeserializeOwned>(path: &Path) -> std::io::Result<Vec<T>> {
    let (good, bad) = read_lenient(path)?;
    match bad.first() {
        None => Ok(good),
        Some(b) => Err(std::io::Error::new(
            std::io::ErrorKind::InvalidData,
            format!("{}:{}: {}", path.display(), b.line, b.error),
        )),
    }
}

pub fn to_string<T: Serialize>(items: &[T]) -> serde_json::Result<String> {
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(item)?);
        out.push('\n');
    }
    Ok(out)
}

pub fn write<T: Serialize>(path: &Path, items: &[T]) -> std::io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for item in items {
        serde_json::to_writer(&mut w, item)?;
        w.write_all(b"\n")?;
    }
    w.flush()
}
