use std::fmt;
use std::time::Duration;

use crate::timeloop::RunStats;

#[derive(Debug, Clone, PartialEq)]
pub enum RunStatus {
    Success,
    Failed { exit_code: i32, message: String },
}

/// Plain-text run summary written to standard error.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub command: String,
    pub status: RunStatus,
    pub wall_time: Duration,
    pub stats: Option<RunStats>,
    pub warnings: Vec<String>,
}

impl RunReport {
    pub fn exit_code(&self) -> i32 {
        match &self.status {
            RunStatus::Success => 0,
            RunStatus::Failed { exit_code, .. } => *exit_code,
        }
    }
}

impl fmt::Display for RunReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.status {
            RunStatus::Success => writeln!(f, "{}: ok", self.command)?,
            RunStatus::Failed { exit_code, message } => {
                writeln!(f, "{}: failed (exit {exit_code})", self.command)?;
                for line in message.lines() {
                    writeln!(f, "  {line}")?;
                }
            }
        }
        writeln!(f, "  wall time: {:.3} s", self.wall_time.as_secs_f64())?;
        if let Some(s) = &self.stats {
            writeln!(f, "  steady-state Newton iterations: {}", s.steady_iterations)?;
            if s.steps > 0 {
                writeln!(
                    f,
                    "  steps: {}, Newton iterations per step: mean {:.2}, max {}, total {}",
                    s.steps,
                    s.mean_iterations(),
                    s.max_iterations(),
                    s.total_iterations()
                )?;
                writeln!(f, "  largest final scaled residual: {:.3e}", s.max_step_residual)?;
            }
        }
        if self.warnings.is_empty() {
            writeln!(f, "  warnings: none")?;
        } else {
            writeln!(f, "  warnings:")?;
            for w in &self.warnings {
                writeln!(f, "    - {w}")?;
            }
        }
        Ok(())
    }
}
