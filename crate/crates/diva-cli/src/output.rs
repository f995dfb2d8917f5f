//! Output plumbing: headers, logging, and deterministic file writing.

use std::fmt::Write as _;
use std::path::Path;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum LogLevel {
    Error,
    Info,
    Debug,
}

/// Verbosity from `DIVA_LOG={error|info|debug}`; default error.
pub fn log_level() -> LogLevel {
    match std::env::var("DIVA_LOG").as_deref() {
        Ok("debug") => LogLevel::Debug,
        Ok("info") => LogLevel::Info,
        _ => LogLevel::Error,
    }
}

pub fn info(msg: &str) {
    if log_level() >= LogLevel::Info {
        eprintln!("[diva] {msg}");
    }
}

/// Header block embedded in every output file: version, the flags that
/// produced it, and the solver tolerances, so outputs are reproducible
/// byte for byte from the recorded invocation.
pub fn header(command: &str, flags: &str, tolerances: &str, seed: u64) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# diva {VERSION}");
    let _ = writeln!(out, "# command: {command}");
    let _ = writeln!(out, "# flags: {flags}");
    let _ = writeln!(out, "# tolerances: {tolerances}");
    let _ = writeln!(out, "# seed: {seed}");
    out
}

pub fn write_file(dir: &Path, name: &str, content: &str) -> std::io::Result<std::path::PathBuf> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(name);
    std::fs::write(&path, content)?;
    Ok(path)
}

/// Fixed float formatting for CSV cells (deterministic across runs).
pub fn cell(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else {
        format!("{v:.12e}")
    }
}
