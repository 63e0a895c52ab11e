//! Human-readable run report: headline numbers with units, provenance and
//! pass/fail verdicts.

use std::fmt;

/// Where a reported number comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    /// Closed-form evaluation of the model.
    Model,
    /// Estimated from synthesized data.
    Simulated,
    /// Published measurement of the reference instrument.
    Reference,
    /// Taken from the scenario configuration.
    Config,
}

impl Provenance {
    fn label(&self) -> &'static str {
        match self {
            Provenance::Model => "model",
            Provenance::Simulated => "simulated",
            Provenance::Reference => "reference",
            Provenance::Config => "config",
        }
    }
}

#[derive(Debug, Clone)]
enum Verdict {
    /// Plain value, no check.
    Info,
    /// Relative comparison against a target.
    Against { target: f64, rel_tol: f64, pass: bool },
    /// Externally evaluated condition.
    Gate { condition: String, pass: bool },
}

#[derive(Debug, Clone)]
pub struct ReportLine {
    name: String,
    value: f64,
    unit: &'static str,
    provenance: Provenance,
    verdict: Verdict,
}

impl ReportLine {
    pub fn passed(&self) -> Option<bool> {
        match &self.verdict {
            Verdict::Info => None,
            Verdict::Against { pass, .. } | Verdict::Gate { pass, .. } => Some(*pass),
        }
    }
}

/// Per-scenario summary printed to stdout and written next to the CSVs.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub scenario: String,
    lines: Vec<ReportLine>,
}

impl RunReport {
    pub fn new(scenario: impl Into<String>) -> Self {
        Self {
            scenario: scenario.into(),
            lines: Vec::new(),
        }
    }

    /// Plain informational value.
    pub fn value(
        &mut self,
        name: impl Into<String>,
        value: f64,
        unit: &'static str,
        provenance: Provenance,
    ) {
        self.lines.push(ReportLine {
            name: name.into(),
            value,
            unit,
            provenance,
            verdict: Verdict::Info,
        });
    }

    /// Relative-tolerance comparison against a target value.
    pub fn check(
        &mut self,
        name: impl Into<String>,
        value: f64,
        unit: &'static str,
        provenance: Provenance,
        target: f64,
        rel_tol: f64,
    ) {
        let pass = (value - target).abs() <= rel_tol * target.abs();
        self.lines.push(ReportLine {
            name: name.into(),
            value,
            unit,
            provenance,
            verdict: Verdict::Against {
                target,
                rel_tol,
                pass,
            },
        });
    }

    /// Pre-evaluated boolean condition attached to a value.
    pub fn gate(
        &mut self,
        name: impl Into<String>,
        value: f64,
        unit: &'static str,
        provenance: Provenance,
        condition: impl Into<String>,
        pass: bool,
    ) {
        self.lines.push(ReportLine {
            name: name.into(),
            value,
            unit,
            provenance,
            verdict: Verdict::Gate {
                condition: condition.into(),
                pass,
            },
        });
    }

    pub fn all_passed(&self) -> bool {
        self.lines.iter().all(|l| l.passed().unwrap_or(true))
    }
}

impl fmt::Display for RunReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "== {} ==", self.scenario)?;
        for line in &self.lines {
            match &line.verdict {
                Verdict::Info => writeln!(
                    f,
                    "       {:<40} {:>12.4e} {:<9} ({})",
                    line.name,
                    line.value,
                    line.unit,
                    line.provenance.label()
                )?,
                Verdict::Against {
                    target,
                    rel_tol,
                    pass,
                } => writeln!(
                    f,
                    "[{}] {:<40} {:>12.4e} {:<9} vs {:.4e} +- {:.0}% ({})",
                    if *pass { "PASS" } else { "FAIL" },
                    line.name,
                    line.value,
                    line.unit,
                    target,
                    rel_tol * 100.0,
                    line.provenance.label()
                )?,
                Verdict::Gate { condition, pass } => writeln!(
                    f,
                    "[{}] {:<40} {:>12.4e} {:<9} gate: {} ({})",
                    if *pass { "PASS" } else { "FAIL" },
                    line.name,
                    line.value,
                    line.unit,
                    condition,
                    line.provenance.label()
                )?,
            }
        }
        Ok(())
    }
}
