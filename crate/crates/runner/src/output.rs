//! Artifact writing. Each file is written to a temporary sibling and
//! renamed into place.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::commands::Outcome;
use crate::error::RunnerResult;

#[derive(Clone, Debug, Serialize)]
pub struct RunArtifact {
    pub scenario_hash: String,
    pub files: Vec<PathBuf>,
    pub summary: Vec<(String, String)>,
    pub wall_time_s: f64,
}

pub fn write_atomic(path: &Path, contents: &[u8]) -> RunnerResult<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn summary_csv(summary: &[(String, String)]) -> String {
    let mut s = String::from("key,value\n");
    for (k, v) in summary {
        s.push_str(&csv_field(k));
        s.push(',');
        s.push_str(&csv_field(v));
        s.push('\n');
    }
    s
}

/// Writes every table plus `summary.csv`. The wall time is reported on the
/// artifact only, so the files stay byte-identical across reruns.
pub fn write_outcome(outcome: &Outcome, out: &Path, wall_time_s: f64) -> RunnerResult<RunArtifact> {
    write_tables(&outcome.hash, &outcome.tables, &outcome.summary, out, wall_time_s)
}

pub fn write_tables(
    hash: &str,
    tables: &[(String, String)],
    summary: &[(String, String)],
    out: &Path,
    wall_time_s: f64,
) -> RunnerResult<RunArtifact> {
    let mut files = Vec::with_capacity(tables.len() + 1);
    for (name, text) in tables {
        let p = out.join(name);
        write_atomic(&p, text.as_bytes())?;
        files.push(p);
    }
    let p = out.join("summary.csv");
    write_atomic(&p, summary_csv(summary).as_bytes())?;
    files.push(p);
    Ok(RunArtifact { scenario_hash: hash.to_string(), files, summary: summary.to_vec(), wall_time_s })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quotes_fields_that_need_it() {
        let s = summary_csv(&[("a".into(), "1".into()), ("json".into(), r#"{"x":1,"y":2}"#.into())]);
        assert_eq!(s, "key,value\na,1\njson,\"{\"\"x\"\":1,\"\"y\"\":2}\"\n");
    }

    #[test]
    fn atomic_write_replaces_contents() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub").join("f.csv");
        write_atomic(&p, b"one\n").unwrap();
        write_atomic(&p, b"two\n").unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "two\n");
        assert_eq!(fs::read_dir(p.parent().unwrap()).unwrap().count(), 1);
    }
}
