use std::io::Write;

use relq_core::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    Admitted,
    Lost,
    Departure,
    PhaseChange,
}

impl EventKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Admitted => "admit",
            Self::Lost => "loss",
            Self::Departure => "departure",
            Self::PhaseChange => "phase",
        }
    }
}

/// System state right after an event.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceEvent {
    pub time: f64,
    pub kind: EventKind,
    pub phase: usize,
    pub in_service: usize,
    pub occupied_prbs: usize,
    /// Sum of the allocations of all sessions in service.
    pub allocated_prbs: usize,
}

/// Writes at most `limit` events as CSV.
pub fn write_trace_csv<W: Write>(events: &[TraceEvent], limit: usize, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["time", "event_type", "phase", "in_service", "occupied_prbs"])?;
    for e in events.iter().take(limit) {
        out.write_record([
            format!("{:.9}", e.time),
            e.kind.name().to_string(),
            e.phase.to_string(),
            e.in_service.to_string(),
            e.occupied_prbs.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}
