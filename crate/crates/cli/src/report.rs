//! Machine-readable run artifacts: key=value manifest, CSV samples, JSON
//! summary. Nothing here depends on wall-clock state, so reruns of the same
//! manifest are byte-identical.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

/// One labeled assertion: every number carries its threshold and origin.
#[derive(Debug, Clone, Serialize)]
pub struct CheckRecord {
    pub name: String,
    pub statistic: f64,
    pub threshold: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_value: Option<f64>,
    pub verdict: Verdict,
    pub detail: String,
}

#[derive(Debug, Serialize)]
pub struct Summary {
    pub suite: String,
    pub run_id: String,
    pub params: serde_json::Value,
    pub checks: Vec<CheckRecord>,
    pub verdict: Verdict,
}

pub fn overall(checks: &[CheckRecord]) -> Verdict {
    if checks.iter().any(|c| c.verdict == Verdict::Fail) {
        Verdict::Fail
    } else if checks.iter().any(|c| c.verdict == Verdict::Inconclusive) {
        Verdict::Inconclusive
    } else {
        Verdict::Pass
    }
}

pub fn exit_code(v: Verdict) -> i32 {
    match v {
        Verdict::Pass => 0,
        Verdict::Fail => 1,
        Verdict::Inconclusive => 2,
    }
}

/// FNV-1a over the manifest body; stable across runs and platforms.
pub fn run_id(pairs: &[(String, String)]) -> String {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for (k, v) in pairs {
        for b in k.bytes().chain([b'='].into_iter()).chain(v.bytes()).chain([b'\n'].into_iter()) {
            hash ^= b as u64;
            hash = hash.wrapping_mul(0x1000_0000_01b3);
        }
    }
    format!("{hash:016x}")
}

pub struct RunWriter {
    dir: PathBuf,
    run_id: String,
}

impl RunWriter {
    pub fn create(dir: &Path, pairs: &[(String, String)]) -> std::io::Result<RunWriter> {
        fs::create_dir_all(dir)?;
        let id = run_id(pairs);
        let mut manifest = String::new();
        for (k, v) in pairs {
            manifest.push_str(&format!("{k}={v}\n"));
        }
        manifest.push_str(&format!("run_id={id}\n"));
        fs::write(dir.join("manifest.txt"), manifest)?;
        Ok(RunWriter {
            dir: dir.to_path_buf(),
            run_id: id,
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Samples CSV: run_id, trajectory_index, value[, coord_2, ...].
    pub fn write_samples(&self, name: &str, rows: &[Vec<f64>]) -> std::io::Result<PathBuf> {
        let path = self.dir.join(format!("{name}.csv"));
        let mut f = fs::File::create(&path)?;
        let width = rows.iter().map(|r| r.len()).max().unwrap_or(1);
        let mut header = String::from("run_id,trajectory_index,value");
        for c in 2..=width {
            header.push_str(&format!(",coord_{c}"));
        }
        writeln!(f, "{header}")?;
        for (idx, row) in rows.iter().enumerate() {
            let mut line = format!("{},{}", self.run_id, idx);
            for v in row {
                line.push_str(&format!(",{v}"));
            }
            writeln!(f, "{line}")?;
        }
        Ok(path)
    }

    pub fn write_summary(&self, suite: &str, params: serde_json::Value, checks: Vec<CheckRecord>) -> std::io::Result<Verdict> {
        let verdict = overall(&checks);
        let summary = Summary {
            suite: suite.to_string(),
            run_id: self.run_id.clone(),
            params,
            checks,
            verdict,
        };
        let json = serde_json::to_string_pretty(&summary).expect("serializable summary");
        fs::write(self.dir.join("summary.json"), json)?;
        Ok(verdict)
    }
}
