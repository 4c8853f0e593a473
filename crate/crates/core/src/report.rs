//! Verification reports.
//!
//! The canonical JSON form has a fixed field order and renders every float
//! with 17 significant digits; wall time is kept out of it so that identical
//! seeds give byte-identical output.

use std::fmt::Write as _;
use std::time::{Duration, Instant};

#[derive(Clone, Debug, PartialEq)]
pub struct PropertyResult {
    pub name: String,
    pub trials: usize,
    /// Largest residual (or worst violation) seen; `+inf` when a trial errored.
    pub max_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Clone, Debug)]
pub struct VerificationReport {
    pub suite: String,
    pub seed: u64,
    pub properties: Vec<PropertyResult>,
    pub wall_time: Duration,
}

impl VerificationReport {
    pub fn new(suite: impl Into<String>, seed: u64) -> Self {
        Self { suite: suite.into(), seed, properties: Vec::new(), wall_time: Duration::ZERO }
    }

    pub fn pass(&self) -> bool {
        self.properties.iter().all(|p| p.pass)
    }

    pub fn push(&mut self, property: PropertyResult) {
        self.properties.push(property);
    }

    pub fn property(&self, name: &str) -> Option<&PropertyResult> {
        self.properties.iter().find(|p| p.name == name)
    }

    pub fn failing(&self) -> impl Iterator<Item = &PropertyResult> {
        self.properties.iter().filter(|p| !p.pass)
    }

    /// Appends another report's properties under `prefix.`.
    pub fn merge(&mut self, prefix: &str, other: VerificationReport) {
        for mut p in other.properties {
            p.name = format!("{prefix}.{}", p.name);
            self.properties.push(p);
        }
        self.wall_time += other.wall_time;
    }

    pub fn to_canonical_json(&self) -> String {
        let mut out = String::new();
        out.push_str("{\"suite\":");
        push_json_string(&mut out, &self.suite);
        let _ = write!(out, ",\"seed\":{},\"properties\":[", self.seed);
        for (i, p) in self.properties.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            out.push_str("{\"name\":");
            push_json_string(&mut out, &p.name);
            let _ = write!(
                out,
                ",\"trials\":{},\"max_residual\":{},\"tolerance\":{},\"pass\":{}}}",
                p.trials,
                format_float(p.max_residual),
                format_float(p.tolerance),
                p.pass
            );
        }
        let _ = write!(out, "],\"pass\":{}}}", self.pass());
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("suite {} (seed {})\n", self.suite, self.seed);
        let width = self.properties.iter().map(|p| p.name.len()).max().unwrap_or(0);
        for p in &self.properties {
            let _ = writeln!(
                out,
                "  {} {:width$}  trials {:>4}  residual {:>10.3e}  tol {:.1e}",
                if p.pass { "PASS" } else { "FAIL" },
                p.name,
                p.trials,
                p.max_residual,
                p.tolerance,
            );
        }
        let _ = writeln!(out, "{}", if self.pass() { "PASS" } else { "FAIL" });
        out
    }
}

/// 17 significant digits; non-finite values become `null`.
pub fn format_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        "null".to_string()
    }
}

pub fn push_json_string(out: &mut String, s: &str) {
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c if (c as u32) < 0x20 => {
                let _ = write!(out, "\\u{:04x}", c as u32);
            }
            c => out.push(c),
        }
    }
    out.push('"');
}

/// Running maximum of one property's residual.
#[derive(Clone, Debug)]
pub struct Tracker {
    name: String,
    tolerance: f64,
    trials: usize,
    worst: f64,
}

impl Tracker {
    pub fn new(name: impl Into<String>, tolerance: f64) -> Self {
        Self { name: name.into(), tolerance, trials: 0, worst: 0.0 }
    }

    pub fn record(&mut self, residual: f64) {
        self.trials += 1;
        let r = if residual.is_nan() { f64::INFINITY } else { residual.abs() };
        if r > self.worst {
            self.worst = r;
        }
    }

    /// Records a residual, or a failed trial when the computation errored.
    pub fn record_result<E>(&mut self, residual: Result<f64, E>) {
        match residual {
            Ok(r) => self.record(r),
            Err(_) => self.record(f64::INFINITY),
        }
    }

    pub fn trials(&self) -> usize {
        self.trials
    }

    pub fn worst(&self) -> f64 {
        self.worst
    }

    pub fn finish(self) -> PropertyResult {
        PropertyResult {
            pass: self.trials > 0 && self.worst <= self.tolerance,
            name: self.name,
            trials: self.trials,
            max_residual: self.worst,
            tolerance: self.tolerance,
        }
    }
}

/// Collects trackers in insertion order and stamps the wall time.
pub struct ReportBuilder {
    report: VerificationReport,
    started: Instant,
}

impl ReportBuilder {
    pub fn new(suite: impl Into<String>, seed: u64) -> Self {
        Self { report: VerificationReport::new(suite, seed), started: Instant::now() }
    }

    pub fn add(&mut self, tracker: Tracker) {
        self.report.push(tracker.finish());
    }

    pub fn add_all(&mut self, trackers: impl IntoIterator<Item = Tracker>) {
        for t in trackers {
            self.add(t);
        }
    }

    pub fn merge(&mut self, prefix: &str, other: VerificationReport) {
        self.report.merge(prefix, other);
    }

    /// A property that could not be evaluated at all.
    pub fn add_failure(&mut self, name: impl Into<String>, tolerance: f64) {
        self.report.push(PropertyResult {
            name: name.into(),
            trials: 0,
            max_residual: f64::INFINITY,
            tolerance,
            pass: false,
        });
    }

    pub fn finish(mut self) -> VerificationReport {
        self.report.wall_time = self.started.elapsed();
        self.report
    }
}
