//! CSV artifacts: `#`-prefixed metadata lines, a column header, then rows.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::Failure;

/// Metadata shared by every file of one run.
#[derive(Debug, Clone)]
pub struct RunDir {
    dir: PathBuf,
    meta: Vec<(String, String)>,
    pub verbose: bool,
}

impl RunDir {
    pub fn create(dir: &Path, meta: Vec<(String, String)>, verbose: bool) -> Result<Self, Failure> {
        fs::create_dir_all(dir)
            .map_err(|e| Failure::Input(format!("cannot create {}: {e}", dir.display())))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            meta,
            verbose,
        })
    }

    pub fn with_meta(&self, key: &str, value: impl ToString) -> Self {
        let mut out = self.clone();
        out.meta.push((key.into(), value.to_string()));
        out
    }

    pub fn write_csv(&self, name: &str, columns: &str, rows: &[String]) -> Result<(), Failure> {
        let path = self.dir.join(name);
        let mut text = String::new();
        for (k, v) in &self.meta {
            text.push_str(&format!("# {k}: {v}\n"));
        }
        text.push_str(columns);
        text.push('\n');
        for r in rows {
            text.push_str(r);
            text.push('\n');
        }
        self.write_text(&path, &text)?;
        self.log(&format!("wrote {}", path.display()));
        Ok(())
    }

    /// Copies the config verbatim so the run can be repeated from its
    /// directory.
    pub fn echo_config(&self, text: &str) -> Result<(), Failure> {
        self.write_text(&self.dir.join("config.toml"), text)
    }

    fn write_text(&self, path: &Path, text: &str) -> Result<(), Failure> {
        fs::File::create(path)
            .and_then(|mut f| f.write_all(text.as_bytes()))
            .map_err(|e| Failure::Input(format!("cannot write {}: {e}", path.display())))
    }

    pub fn log(&self, msg: &str) {
        if self.verbose {
            eprintln!("{msg}");
        }
    }
}

/// Summary rows `check,value,threshold,passed`.
#[derive(Debug, Default)]
pub struct Summary {
    rows: Vec<String>,
    failed: Vec<String>,
}

impl Summary {
    pub fn record(&mut self, check: &str, value: impl std::fmt::Display, threshold: impl std::fmt::Display, passed: bool) {
        self.rows.push(format!("{check},{value},{threshold},{passed}"));
        if !passed {
            self.failed.push(check.to_string());
        }
    }

    pub fn finish(self, run: &RunDir) -> Result<(), Failure> {
        run.write_csv("summary.csv", "check,value,threshold,passed", &self.rows)?;
        if self.failed.is_empty() {
            Ok(())
        } else {
            Err(Failure::Check(format!("failed checks: {}", self.failed.join(", "))))
        }
    }
}
