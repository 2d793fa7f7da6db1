#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::Command;

pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Outcome {
    /// The run directory printed on success.
    pub fn dir(&self) -> PathBuf {
        assert_eq!(self.code, 0, "stderr: {}", self.stderr);
        PathBuf::from(self.stdout.trim())
    }
}

pub fn esc(args: &[&str]) -> Outcome {
    let out = Command::new(env!("CARGO_BIN_EXE_esc"))
        .args(args)
        .output()
        .expect("binary runs");
    Outcome {
        code: out.status.code().unwrap_or(-1),
        stdout: String::from_utf8_lossy(&out.stdout).into_owned(),
        stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
    }
}

/// Writes `config` and runs `esc <command> --config .. --out <out>` plus
/// `extra` flags.
pub fn run_config(command: &str, config: &serde_json::Value, out: &Path, extra: &[&str]) -> Outcome {
    std::fs::create_dir_all(out).unwrap();
    let path = out.join(format!("{command}-config.json"));
    std::fs::write(&path, serde_json::to_string_pretty(config).unwrap()).unwrap();
    let mut args = vec![
        command,
        "--config",
        path.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    esc(&args)
}

pub fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

/// Every regular file under `dir` except SVG plots, relative path -> bytes.
pub fn output_files(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else if p.extension().is_some_and(|e| e != "svg") {
                out.push((p.strip_prefix(dir).unwrap().to_path_buf(), std::fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}
