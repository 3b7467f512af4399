//! External compliance callbacks: judge models, embedding similarity and
//! anything else that lives outside this crate.
//!
//! A callback receives the detokenized string and returns a decimal in
//! `[0, 1]`. Values outside the unit interval by at most
//! [`CLAMP_TOLERANCE`] are clamped with a warning; anything further out is an
//! error.

use std::io::{Read, Write};
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

pub const CLAMP_TOLERANCE: f64 = 1e-6;

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(10);

pub trait ComplianceCallback: Send + Sync {
    fn call(&self, text: &str) -> Result<f64, String>;

    /// Callbacks are serialized unless they declare themselves reentrant.
    fn reentrant(&self) -> bool {
        false
    }
}

/// In-process callback wrapping a closure.
pub struct FnCallback<F> {
    f: F,
    reentrant: bool,
}

impl<F> FnCallback<F>
where
    F: Fn(&str) -> Result<f64, String> + Send + Sync,
{
    pub fn new(f: F) -> Self {
        Self { f, reentrant: false }
    }

    pub fn reentrant(f: F) -> Self {
        Self { f, reentrant: true }
    }
}

impl<F> ComplianceCallback for FnCallback<F>
where
    F: Fn(&str) -> Result<f64, String> + Send + Sync,
{
    fn call(&self, text: &str) -> Result<f64, String> {
        (self.f)(text)
    }

    fn reentrant(&self) -> bool {
        self.reentrant
    }
}

/// Runs a command per evaluation: the string is written to stdin followed by
/// a newline, and stdout must hold a single decimal.
#[derive(Clone, Debug)]
pub struct SubprocessCallback {
    pub program: String,
    pub args: Vec<String>,
    pub timeout: Duration,
    pub reentrant: bool,
}

impl SubprocessCallback {
    pub fn new(command: &[String], timeout: Duration) -> Result<Self, String> {
        let (program, args) = command.split_first().ok_or("empty command")?;
        Ok(Self { program: program.clone(), args: args.to_vec(), timeout, reentrant: false })
    }
}

impl ComplianceCallback for SubprocessCallback {
    fn call(&self, text: &str) -> Result<f64, String> {
        let mut child = Command::new(&self.program)
            .args(&self.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|e| format!("cannot spawn '{}': {e}", self.program))?;
        {
            let mut stdin = child.stdin.take().ok_or("stdin unavailable")?;
            // A child that exits without reading stdin is not an error here.
            let _ = stdin.write_all(text.as_bytes()).and_then(|_| stdin.write_all(b"\n"));
        }
        let deadline = Instant::now() + self.timeout;
        let status = loop {
            match child.try_wait().map_err(|e| e.to_string())? {
                Some(status) => break status,
                None if Instant::now() >= deadline => {
                    let _ = child.kill();
                    let _ = child.wait();
                    return Err(format!("timed out after {:?}", self.timeout));
                }
                None => std::thread::sleep(Duration::from_millis(2)),
            }
        };
        if !status.success() {
            return Err(format!("exited with {status}"));
        }
        let mut out = String::new();
        child
            .stdout
            .take()
            .ok_or("stdout unavailable")?
            .read_to_string(&mut out)
            .map_err(|e| e.to_string())?;
        out.trim().parse::<f64>().map_err(|e| format!("unparsable output '{}': {e}", out.trim()))
    }

    fn reentrant(&self) -> bool {
        self.reentrant
    }
}

/// Applies the clamping rule. `Err` carries the offending value.
pub fn clamp_compliance(value: f64) -> Result<f64, f64> {
    if value.is_nan() {
        return Err(value);
    }
    if (0.0..=1.0).contains(&value) {
        return Ok(value);
    }
    if (-CLAMP_TOLERANCE..=1.0 + CLAMP_TOLERANCE).contains(&value) {
        log::warn!("callback compliance {value} clamped into [0, 1]");
        return Ok(value.clamp(0.0, 1.0));
    }
    Err(value)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clamping_rule() {
        assert_eq!(clamp_compliance(0.4), Ok(0.4));
        assert_eq!(clamp_compliance(1.0 + 5e-7), Ok(1.0));
        assert_eq!(clamp_compliance(-5e-7), Ok(0.0));
        assert!(clamp_compliance(1.01).is_err());
        assert!(clamp_compliance(f64::NAN).is_err());
    }

    #[cfg(unix)]
    #[test]
    fn subprocess_reads_stdout() {
        let cb = SubprocessCallback::new(
            &["sh".into(), "-c".into(), "read line; echo 0.25".into()],
            DEFAULT_TIMEOUT,
        )
        .unwrap();
        assert_eq!(cb.call("a b").unwrap(), 0.25);
    }

    #[cfg(unix)]
    #[test]
    fn subprocess_times_out() {
        let cb = SubprocessCallback::new(&["sleep".into(), "5".into()], Duration::from_millis(50)).unwrap();
        assert!(cb.call("x").unwrap_err().contains("timed out"));
    }
}
