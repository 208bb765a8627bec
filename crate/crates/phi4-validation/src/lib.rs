//! Pass/fail bookkeeping for the acceptance run.

use std::process::ExitCode;
use std::time::Instant;

/// Outcome of one check: a verdict plus the measured numbers behind it.
pub struct Outcome {
    pub pass: bool,
    pub detail: String,
}

impl Outcome {
    pub fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }
}

/// Prints one line per check as soon as it finishes.
#[derive(Default)]
pub struct Report {
    failed: Vec<String>,
    total: usize,
}

impl Report {
    pub fn run<E: std::fmt::Display>(
        &mut self,
        label: &str,
        check: impl FnOnce() -> Result<Outcome, E>,
    ) {
        let t = Instant::now();
        let out = check().unwrap_or_else(|e| Outcome::new(false, format!("error: {e}")));
        let verdict = if out.pass { "PASS" } else { "FAIL" };
        println!(
            "{verdict} {label}: {} [{:.1} s]",
            out.detail,
            t.elapsed().as_secs_f64()
        );
        self.total += 1;
        if !out.pass {
            self.failed.push(label.to_string());
        }
    }

    pub fn failed(&self) -> &[String] {
        &self.failed
    }

    pub fn finish(self) -> ExitCode {
        println!(
            "\n{} of {} checks passed",
            self.total - self.failed.len(),
            self.total
        );
        if self.failed.is_empty() {
            ExitCode::SUCCESS
        } else {
            println!("failed: {}", self.failed.join("; "));
            ExitCode::FAILURE
        }
    }
}

/// Largest absolute value, NaN-propagating.
pub fn sup(xs: impl IntoIterator<Item = f64>) -> f64 {
    xs.into_iter().fold(0.0, |m, x| {
        if x.is_nan() || m.is_nan() {
            f64::NAN
        } else {
            m.max(x.abs())
        }
    })
}
