//! Output files: CSV tables with `#` metadata lines, the run manifest, and
//! the reader for `qn.csv`.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::montecarlo::QnEstimate;

/// An output directory that remembers every file written into it.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    files: Vec<String>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).map_err(|e| Error::io(root, e))?;
        Ok(OutputDir {
            root: root.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn files(&self) -> &[String] {
        &self.files
    }

    /// Path of a plain file name inside the directory.
    fn path(&mut self, name: &str) -> PathBuf {
        debug_assert!(!name.contains(['/', '\\']), "output names are plain file names");
        if !self.files.iter().any(|f| f == name) {
            self.files.push(name.to_string());
        }
        self.root.join(name)
    }

    /// Writes `rows` as CSV under a block of `# key: value` lines.
    pub fn write_csv<T: Serialize>(&mut self, name: &str, meta: &[(&str, String)], rows: &[T]) -> Result<PathBuf> {
        let path = self.path(name);
        let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
        let mut out = BufWriter::new(file);
        for (k, v) in meta {
            writeln!(out, "# {k}: {v}").map_err(|e| Error::io(&path, e))?;
        }
        let mut w = csv::Writer::from_writer(out);
        for r in rows {
            w.serialize(r).map_err(|e| Error::Csv {
                path: path.clone(),
                source: e,
            })?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }

    /// Writes a table given as strings, for layouts not known at compile
    /// time.
    pub fn write_table(
        &mut self,
        name: &str,
        meta: &[(&str, String)],
        header: &[String],
        rows: &[Vec<String>],
    ) -> Result<PathBuf> {
        let path = self.path(name);
        let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
        let mut out = BufWriter::new(file);
        for (k, v) in meta {
            writeln!(out, "# {k}: {v}").map_err(|e| Error::io(&path, e))?;
        }
        let mut w = csv::Writer::from_writer(out);
        let csv_err = |e| Error::Csv {
            path: path.clone(),
            source: e,
        };
        w.write_record(header).map_err(csv_err)?;
        for r in rows {
            w.write_record(r).map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }

    pub fn write_text(&mut self, name: &str, text: &str) -> Result<PathBuf> {
        let path = self.path(name);
        fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }

    /// Writes the manifest (listing every other file) through a temporary
    /// name, so its presence marks a finished run.
    pub fn write_manifest(&mut self, manifest: &mut RunManifest) -> Result<PathBuf> {
        manifest.files = self.files.clone();
        let text = serde_json::to_string_pretty(manifest).map_err(|e| Error::Runtime(e.to_string()))?;
        let tmp = self.root.join(".manifest.json.tmp");
        fs::write(&tmp, text + "\n").map_err(|e| Error::io(&tmp, e))?;
        let path = self.root.join(MANIFEST);
        fs::rename(&tmp, &path).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }
}

pub const MANIFEST: &str = "manifest.json";

/// Wall-clock time spent in one phase of a command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseTiming {
    pub phase: String,
    pub seconds: f64,
}

/// Record of a finished command, written last.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub tool_version: String,
    pub config_path: Option<PathBuf>,
    /// The configuration after defaults and overrides.
    pub config: Option<serde_json::Value>,
    pub output_dir: PathBuf,
    pub timings: Vec<PhaseTiming>,
    pub files: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &str, output_dir: &Path) -> Self {
        RunManifest {
            command: command.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config_path: None,
            config: None,
            output_dir: output_dir.to_path_buf(),
            timings: Vec::new(),
            files: Vec::new(),
        }
    }

    /// Runs `f`, recording its duration under `phase`.
    pub fn time<T>(&mut self, phase: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.timings.push(PhaseTiming {
            phase: phase.to_string(),
            seconds: start.elapsed().as_secs_f64(),
        });
        out
    }
}

/// Reads a `qn.csv` written by `simulate`, skipping `#` lines.
pub fn read_qn_csv(path: &Path) -> Result<Vec<QnEstimate>> {
    let bad = |location: String, message: String| Error::Config {
        path: path.display().to_string(),
        location,
        message,
    };
    let text = fs::read_to_string(path).map_err(|e| bad("file".into(), e.to_string()))?;
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for record in reader.deserialize::<QnEstimate>() {
        let row = record.map_err(|e| {
            let line = e.position().map_or(String::from("row"), |p| format!("line {}", p.line()));
            bad(line, e.to_string())
        })?;
        if row.hits > row.reps || row.reps == 0 {
            return Err(bad(format!("row n = {}", row.n), "need 0 <= hits <= reps, reps > 0".into()));
        }
        rows.push(row);
    }
    Ok(rows)
}

/// The `# key: value` metadata lines at the top of a CSV file.
pub fn read_csv_meta(path: &Path) -> Result<Vec<(String, String)>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text
        .lines()
        .take_while(|l| l.starts_with('#'))
        .filter_map(|l| {
            let (k, v) = l.trim_start_matches('#').split_once(':')?;
            Some((k.trim().to_string(), v.trim().to_string()))
        })
        .collect())
}

/// Common metadata block: the seed always comes first.
pub fn seed_meta(seed: u64) -> Vec<(&'static str, String)> {
    vec![("master_seed", seed.to_string())]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn qn_csv_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let mut out = OutputDir::create(dir.path()).unwrap();
        let rows = vec![
            QnEstimate::new(4, 10, 100, 0, 0.99, 1).unwrap(),
            QnEstimate::new(8, 0, 100, 1, 0.99, 1).unwrap(),
        ];
        let path = out.write_csv("qn.csv", &seed_meta(17), &rows).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("# master_seed: 17\nn,hits,reps,p_hat,"));
        assert_eq!(read_qn_csv(&path).unwrap(), rows);
        let mut m = RunManifest::new("simulate", dir.path());
        out.write_manifest(&mut m).unwrap();
        assert_eq!(m.files, vec!["qn.csv"]);
        assert!(dir.path().join(MANIFEST).exists());
    }

    #[test]
    fn malformed_rows_are_config_errors() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("qn.csv");
        fs::write(&p, "n,hits,reps\n1,x,3\n").unwrap();
        let e = read_qn_csv(&p).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        assert_eq!(read_qn_csv(&dir.path().join("missing.csv")).unwrap_err().exit_code(), 2);
    }
}
