use std::fmt;

use thiserror::Error;

use crate::time::SimTime;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KernelError {
    #[error("event scheduled in the past: due {due}, clock at {now}")]
    ScheduledInPast { due: SimTime, now: SimTime },
}

/// Invalid model or configuration parameters.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("unsupported subcarrier spacing {0} kHz (allowed: 15, 30, 60, 120, 240)")]
    UnsupportedScs(u32),
    #[error("hop plan infeasible: {0}")]
    InfeasibleHopPlan(String),
    #[error("invalid latency model: {0}")]
    InvalidLatencyModel(String),
    #[error("invalid transfer model: {0}")]
    InvalidTransferModel(String),
    #[error("invalid PLC configuration: {0}")]
    InvalidPlc(String),
    #[error("invalid safety parameters: {0}")]
    InvalidSafety(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StatsError {
    #[error("statistics are empty")]
    Empty,
    #[error("percentile {0} outside 0..=100")]
    PercentileOutOfRange(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DiagnosticKind {
    Syntax,
    UnknownSection,
    UnknownKey,
    DuplicateKey,
    MissingKey,
    InvalidValue,
    UnknownSegmentKind,
    UnresolvedId,
    Capacity,
    Path,
    Budget,
}

impl fmt::Display for DiagnosticKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            DiagnosticKind::Syntax => "syntax error",
            DiagnosticKind::UnknownSection => "unknown section",
            DiagnosticKind::UnknownKey => "unknown key",
            DiagnosticKind::DuplicateKey => "duplicate key",
            DiagnosticKind::MissingKey => "missing key",
            DiagnosticKind::InvalidValue => "invalid value",
            DiagnosticKind::UnknownSegmentKind => "unknown segment kind",
            DiagnosticKind::UnresolvedId => "unresolved id",
            DiagnosticKind::Capacity => "capacity violation",
            DiagnosticKind::Path => "path error",
            DiagnosticKind::Budget => "budget error",
        };
        f.write_str(s)
    }
}

/// A located problem in a scenario file. Line and column are 1-based;
/// zero means the problem has no single source location.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub line: usize,
    pub column: usize,
    pub kind: DiagnosticKind,
    pub message: String,
}

impl Diagnostic {
    pub fn new(
        line: usize,
        column: usize,
        kind: DiagnosticKind,
        message: impl Into<String>,
    ) -> Self {
        Diagnostic {
            line,
            column,
            kind,
            message: message.into(),
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}:{}: {}: {}",
            self.line, self.column, self.kind, self.message
        )
    }
}

/// All diagnostics produced while loading a scenario.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct LoadError {
    pub diagnostics: Vec<Diagnostic>,
}

impl LoadError {
    pub fn has(&self, kind: DiagnosticKind) -> bool {
        self.diagnostics.iter().any(|d| d.kind == kind)
    }
}

impl fmt::Display for LoadError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, d) in self.diagnostics.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{d}")?;
        }
        Ok(())
    }
}
