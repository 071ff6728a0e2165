use std::fmt::Write;

/// Counterexamples kept per suite; the count of failures is always exact.
const SHOWN: usize = 3;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SuiteReport {
    pub suite: &'static str,
    pub criterion: u32,
    pub checked: usize,
    pub failed: usize,
    pub notes: Vec<String>,
    pub counterexamples: Vec<String>,
}

impl SuiteReport {
    pub fn new(suite: &'static str, criterion: u32) -> Self {
        SuiteReport { suite, criterion, checked: 0, failed: 0, notes: Vec::new(), counterexamples: Vec::new() }
    }

    pub fn passed(&self) -> bool {
        self.failed == 0
    }

    /// Counts one check; the counterexample text is only built on failure.
    pub fn record(&mut self, ok: bool, describe: impl FnOnce() -> String) {
        self.checked += 1;
        if !ok {
            self.fail_with(describe());
        }
    }

    pub fn fail(&mut self, what: String) {
        self.checked += 1;
        self.fail_with(what);
    }

    fn fail_with(&mut self, what: String) {
        self.failed += 1;
        if self.counterexamples.len() < SHOWN {
            self.counterexamples.push(what);
        }
    }

    pub fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }

    /// Human lines, then one machine-readable line in the schema.
    pub fn render(&self) -> String {
        let mut s = String::new();
        let verdict = if self.passed() { "pass" } else { "FAIL" };
        let _ = writeln!(
            s,
            "criterion {} {}: {verdict}, {} checked, {} failed",
            self.criterion, self.suite, self.checked, self.failed
        );
        for n in &self.notes {
            let _ = writeln!(s, "  note: {n}");
        }
        for c in &self.counterexamples {
            let _ = writeln!(s, "  counterexample: {c}");
        }
        let _ = writeln!(
            s,
            "(result (suite {}) (criterion {}) (checked {}) (failed {}) (verdict {}))",
            self.suite,
            self.criterion,
            self.checked,
            self.failed,
            if self.passed() { "pass" } else { "fail" }
        );
        s
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunReport {
    pub manifest: String,
    pub suites: Vec<SuiteReport>,
}

impl RunReport {
    pub fn passed(&self) -> bool {
        self.suites.iter().all(SuiteReport::passed)
    }

    pub fn render(&self) -> String {
        let mut s = format!("manifest {}\n", self.manifest);
        for r in &self.suites {
            s.push_str(&r.render());
        }
        let failed = self.suites.iter().filter(|r| !r.passed()).count();
        let _ = writeln!(s, "summary: {} suites, {} passed, {failed} failed", self.suites.len(), self.suites.len() - failed);
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keeps_a_few_counterexamples_and_every_count() {
        let mut r = SuiteReport::new("x", 0);
        for i in 0..10 {
            r.record(i % 2 == 0, || format!("odd {i}"));
        }
        assert_eq!((r.checked, r.failed, r.counterexamples.len()), (10, 5, SHOWN));
        assert!(r.render().contains("(failed 5) (verdict fail)"));
    }
}
