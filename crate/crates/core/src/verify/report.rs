//! Verification outcomes and their serialization.

use std::fmt;
use std::io::Write;

use crate::error::Result;
use crate::hjb::{write_preamble, CsvHeader};

/// How a measured statistic is judged.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Relation {
    /// `|value - target| <= tolerance`
    Within,
    /// `value <= target + tolerance`
    AtMost,
    /// `value >= target - tolerance`
    AtLeast,
    /// Recorded only; always passes.
    Info,
}

impl Relation {
    pub fn as_str(self) -> &'static str {
        match self {
            Relation::Within => "within",
            Relation::AtMost => "at_most",
            Relation::AtLeast => "at_least",
            Relation::Info => "info",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Statistic {
    pub name: String,
    pub value: f64,
    pub target: f64,
    pub tolerance: f64,
    pub relation: Relation,
}

impl Statistic {
    pub fn within(name: impl Into<String>, value: f64, target: f64, tolerance: f64) -> Self {
        Self::new(name, value, target, tolerance, Relation::Within)
    }

    pub fn at_most(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self::new(name, value, bound, 0.0, Relation::AtMost)
    }

    pub fn at_least(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self::new(name, value, bound, 0.0, Relation::AtLeast)
    }

    pub fn info(name: impl Into<String>, value: f64) -> Self {
        Self::new(name, value, f64::NAN, f64::NAN, Relation::Info)
    }

    fn new(name: impl Into<String>, value: f64, target: f64, tolerance: f64, relation: Relation) -> Self {
        Statistic {
            name: name.into(),
            value,
            target,
            tolerance,
            relation,
        }
    }

    /// Pure function of the recorded fields; NaN never passes a comparison.
    pub fn pass(&self) -> bool {
        match self.relation {
            Relation::Within => (self.value - self.target).abs() <= self.tolerance,
            Relation::AtMost => self.value <= self.target + self.tolerance,
            Relation::AtLeast => self.value >= self.target - self.tolerance,
            Relation::Info => true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub id: String,
    pub statistics: Vec<Statistic>,
    /// Sample sizes, grid sizes and other settings, as `(key, value)`.
    pub metadata: Vec<(String, String)>,
}

impl CheckReport {
    pub fn new(id: impl Into<String>) -> Self {
        CheckReport {
            id: id.into(),
            statistics: Vec::new(),
            metadata: Vec::new(),
        }
    }

    pub fn push(&mut self, s: Statistic) -> &mut Self {
        self.statistics.push(s);
        self
    }

    pub fn meta(&mut self, key: impl Into<String>, value: impl fmt::Display) -> &mut Self {
        self.metadata.push((key.into(), value.to_string()));
        self
    }

    pub fn pass(&self) -> bool {
        !self.statistics.is_empty() && self.statistics.iter().all(Statistic::pass)
    }

    pub fn statistic(&self, name: &str) -> Option<&Statistic> {
        self.statistics.iter().find(|s| s.name == name)
    }

    /// Names of the failing statistics.
    pub fn failures(&self) -> Vec<&str> {
        self.statistics
            .iter()
            .filter(|s| !s.pass())
            .map(|s| s.name.as_str())
            .collect()
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "[{}] {}", if self.pass() { "PASS" } else { "FAIL" }, self.id)?;
        for (k, v) in &self.metadata {
            writeln!(f, "    {k} = {v}")?;
        }
        for s in &self.statistics {
            let mark = if s.pass() { "ok  " } else { "FAIL" };
            match s.relation {
                Relation::Within => writeln!(
                    f,
                    "  {mark} {} = {} (target {} +/- {})",
                    s.name, s.value, s.target, s.tolerance
                )?,
                Relation::AtMost => writeln!(f, "  {mark} {} = {} (<= {})", s.name, s.value, s.target + s.tolerance)?,
                Relation::AtLeast => writeln!(f, "  {mark} {} = {} (>= {})", s.name, s.value, s.target - s.tolerance)?,
                Relation::Info => writeln!(f, "       {} = {}", s.name, s.value)?,
            }
        }
        Ok(())
    }
}

pub const REPORT_COLUMNS: &str = "id,statistic,target,tolerance,pass,relation";

/// One row per statistic; `id` is `check.statistic`.
pub fn write_reports_csv<W: Write>(out: &mut W, reports: &[CheckReport], header: &CsvHeader) -> Result<()> {
    write_preamble(out, header)?;
    writeln!(out, "{REPORT_COLUMNS}")?;
    for r in reports {
        for s in &r.statistics {
            writeln!(
                out,
                "{}.{},{},{},{},{},{}",
                r.id,
                s.name,
                s.value,
                s.target,
                s.tolerance,
                s.pass(),
                s.relation.as_str()
            )?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Plain-text summary of all reports.
pub fn write_reports_text<W: Write>(out: &mut W, reports: &[CheckReport], header: &CsvHeader) -> Result<()> {
    write_preamble(out, header)?;
    for r in reports {
        write!(out, "{r}")?;
    }
    let passed = reports.iter().filter(|r| r.pass()).count();
    writeln!(out, "{passed}/{} checks passed", reports.len())?;
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pass_is_derived_from_fields() {
        assert!(Statistic::within("a", 1.05, 1.0, 0.05 + 1e-12).pass());
        assert!(!Statistic::within("a", 1.2, 1.0, 0.1).pass());
        assert!(Statistic::at_most("r", 2.0, 2.0).pass());
        assert!(!Statistic::at_least("r", 1.0, 2.0).pass());
        assert!(!Statistic::at_most("r", f64::NAN, 2.0).pass());
        let mut r = CheckReport::new("c");
        assert!(!r.pass());
        r.push(Statistic::info("n", 3.0))
            .push(Statistic::at_most("x", 1.0, 0.5));
        assert!(!r.pass());
        assert_eq!(r.failures(), vec!["x"]);
    }

    #[test]
    fn csv_rows() {
        let mut r = CheckReport::new("demo");
        r.push(Statistic::within("mean", 0.5, 0.5, 0.01));
        let mut buf = Vec::new();
        write_reports_csv(
            &mut buf,
            &[r],
            &CsvHeader {
                config_hash: "ab".into(),
                timestamp: None,
            },
        )
        .unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert_eq!(
            s,
            format!("# config_sha256=ab\n{REPORT_COLUMNS}\ndemo.mean,0.5,0.5,0.01,true,within\n")
        );
    }
}
