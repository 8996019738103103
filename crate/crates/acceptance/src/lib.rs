//! Pass/fail bookkeeping for the acceptance run: each criterion prints one
//! line as soon as it finishes, and a panic inside a check counts as a failure.

use std::panic::{self, AssertUnwindSafe};
use std::time::{Duration, Instant};

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub passed: bool,
    pub detail: String,
}

impl Outcome {
    pub fn pass(detail: impl Into<String>) -> Self {
        Self {
            passed: true,
            detail: detail.into(),
        }
    }

    pub fn fail(detail: impl Into<String>) -> Self {
        Self {
            passed: false,
            detail: detail.into(),
        }
    }

    /// Pass when `failures` is empty, otherwise list the first few.
    pub fn from_failures(failures: &[String], summary: impl Into<String>) -> Self {
        let summary = summary.into();
        if failures.is_empty() {
            return Self::pass(summary);
        }
        let shown: Vec<&str> = failures.iter().take(6).map(String::as_str).collect();
        let more = failures.len().saturating_sub(shown.len());
        let tail = if more > 0 { format!("; +{more} more") } else { String::new() };
        Self::fail(format!(
            "{summary}; {} violation(s): {}{tail}",
            failures.len(),
            shown.join("; ")
        ))
    }
}

#[derive(Debug, Clone)]
pub struct Line {
    pub id: u32,
    pub title: &'static str,
    pub outcome: Outcome,
    pub elapsed: Duration,
}

impl Line {
    pub fn render(&self) -> String {
        format!(
            "criterion {:>2} {:<32} {} ({:.1} s) {}",
            self.id,
            self.title,
            if self.outcome.passed { "PASS" } else { "FAIL" },
            self.elapsed.as_secs_f64(),
            self.outcome.detail
        )
    }
}

#[derive(Debug, Default)]
pub struct Report {
    lines: Vec<Line>,
}

impl Report {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn check(&mut self, id: u32, title: &'static str, f: impl FnOnce() -> Outcome) -> &Line {
        let start = Instant::now();
        let outcome = match panic::catch_unwind(AssertUnwindSafe(f)) {
            Ok(o) => o,
            Err(e) => {
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_else(|| "panic".into());
                Outcome::fail(format!("panicked: {msg}"))
            }
        };
        let line = Line {
            id,
            title,
            outcome,
            elapsed: start.elapsed(),
        };
        println!("{}", line.render());
        self.lines.push(line);
        self.lines.last().unwrap()
    }

    pub fn lines(&self) -> &[Line] {
        &self.lines
    }

    pub fn failed(&self) -> Vec<u32> {
        self.lines.iter().filter(|l| !l.outcome.passed).map(|l| l.id).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn panics_become_failures() {
        let mut r = Report::new();
        r.check(1, "ok", || Outcome::pass("fine"));
        r.check(2, "boom", || panic!("no"));
        assert_eq!(r.failed(), [2]);
        assert!(r.lines()[1].outcome.detail.contains("no"));
        assert!(r.lines()[0].render().contains("PASS"));
    }

    #[test]
    fn failure_lists_are_truncated() {
        let many: Vec<String> = (0..9).map(|i| i.to_string()).collect();
        let o = Outcome::from_failures(&many, "s");
        assert!(!o.passed);
        assert!(o.detail.ends_with("+3 more"));
        assert!(Outcome::from_failures(&[], "s").passed);
    }
}
