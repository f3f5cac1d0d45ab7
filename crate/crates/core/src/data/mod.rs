//! Event-sequence data model and preprocessing of interval annotations.
//!
//! Raw annotations are calendar intervals on a 250 ms grid. They are
//! superposed across behavior classes, each maximal run of positive grid
//! samples is reduced to its left boundary, and the resulting onsets are
//! re-expressed in minutes since the start of their session.

mod collapse;
pub mod io;
mod validate;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Result, TppError};

pub use collapse::{collapse_episodes, normalize_session, Collapsed};
pub use validate::{validate_dataset, ParticipantRow, SequenceSummary, ValidationReport, Violation};

/// Annotation grid resolution in milliseconds.
pub const GRID_MS: i64 = 250;

/// Milliseconds since the Unix epoch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Timestamp(pub i64);

impl Timestamp {
    pub fn from_secs_f64(secs: f64) -> Self {
        Timestamp((secs * 1000.0).round() as i64)
    }

    pub fn millis(self) -> i64 {
        self.0
    }

    pub fn is_on_grid(self) -> bool {
        self.0.rem_euclid(GRID_MS) == 0
    }

    /// Nearest grid point, ties rounded up.
    pub fn snap_to_grid(self) -> Self {
        let r = self.0.rem_euclid(GRID_MS);
        if r * 2 >= GRID_MS {
            Timestamp(self.0 - r + GRID_MS)
        } else {
            Timestamp(self.0 - r)
        }
    }

    /// Grid sample index (floor division by the grid step).
    pub fn sample_index(self) -> i64 {
        self.0.div_euclid(GRID_MS)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Behavior {
    /// Self-injurious behavior.
    #[serde(rename = "SIB")]
    Sib,
    /// Emotional dysregulation.
    #[serde(rename = "ED")]
    Ed,
    /// Aggression towards others.
    #[serde(rename = "ATO")]
    Ato,
}

impl FromStr for Behavior {
    type Err = TppError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "SIB" => Ok(Behavior::Sib),
            "ED" => Ok(Behavior::Ed),
            "ATO" => Ok(Behavior::Ato),
            other => Err(TppError::invalid(format!("unknown behavior '{other}'"))),
        }
    }
}

impl fmt::Display for Behavior {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Behavior::Sib => "SIB",
            Behavior::Ed => "ED",
            Behavior::Ato => "ATO",
        })
    }
}

/// One annotated behavior episode.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawAnnotation {
    pub participant_id: String,
    pub session_id: String,
    pub behavior: Behavior,
    pub start: Timestamp,
    pub stop: Timestamp,
}

impl RawAnnotation {
    /// Builds an annotation, rejecting `stop < start` and off-grid bounds.
    /// With `tolerate_offgrid` the bounds are snapped to the nearest grid point.
    pub fn new(
        participant_id: impl Into<String>,
        session_id: impl Into<String>,
        behavior: Behavior,
        start: Timestamp,
        stop: Timestamp,
        tolerate_offgrid: bool,
    ) -> Result<Self> {
        let session_id = session_id.into();
        let (start, stop) = if tolerate_offgrid {
            (start.snap_to_grid(), stop.snap_to_grid())
        } else {
            if !start.is_on_grid() || !stop.is_on_grid() {
                return Err(TppError::session(
                    &session_id,
                    format!(
                        "annotation [{}, {}] ms is not aligned to the {GRID_MS} ms grid",
                        start.0, stop.0
                    ),
                ));
            }
            (start, stop)
        };
        if stop < start {
            return Err(TppError::session(
                &session_id,
                format!("annotation stop {} precedes start {}", stop.0, start.0),
            ));
        }
        Ok(RawAnnotation {
            participant_id: participant_id.into(),
            session_id,
            behavior,
            start,
            stop,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SessionRecord {
    pub session_id: String,
    pub participant_id: String,
    pub session_start: Timestamp,
    pub session_end: Timestamp,
}

impl SessionRecord {
    pub fn new(
        session_id: impl Into<String>,
        participant_id: impl Into<String>,
        session_start: Timestamp,
        session_end: Timestamp,
    ) -> Result<Self> {
        let session_id = session_id.into();
        if session_end <= session_start {
            return Err(TppError::session(&session_id, "session_end must be after session_start"));
        }
        Ok(SessionRecord {
            session_id,
            participant_id: participant_id.into(),
            session_start,
            session_end,
        })
    }

    pub fn duration_minutes(&self) -> f64 {
        (self.session_end.0 - self.session_start.0) as f64 / 60_000.0
    }
}

/// One observation session: onset times in minutes on `[0, T)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventSequence {
    pub session_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub participant_id: Option<String>,
    #[serde(rename = "T")]
    pub duration: f64,
    pub onsets: Vec<f64>,
}

impl EventSequence {
    /// Validating constructor: onsets strictly increasing within `[0, T)`.
    pub fn new(session_id: impl Into<String>, onsets: Vec<f64>, duration: f64) -> Result<Self> {
        let seq = EventSequence {
            session_id: session_id.into(),
            participant_id: None,
            duration,
            onsets,
        };
        if let Some(v) = seq.violations().into_iter().next() {
            return Err(TppError::session(&seq.session_id, v.to_string()));
        }
        Ok(seq)
    }

    pub fn with_participant(mut self, participant_id: impl Into<String>) -> Self {
        self.participant_id = Some(participant_id.into());
        self
    }

    pub fn len(&self) -> usize {
        self.onsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.onsets.is_empty()
    }

    /// Onsets strictly before `t`.
    pub fn history_before(&self, t: f64) -> &[f64] {
        let k = self.onsets.partition_point(|&s| s < t);
        &self.onsets[..k]
    }

    /// Onsets at or before `t`.
    pub fn history_through(&self, t: f64) -> &[f64] {
        let k = self.onsets.partition_point(|&s| s <= t);
        &self.onsets[..k]
    }

    /// Number of onsets in `(a, b]`.
    pub fn count_in(&self, a: f64, b: f64) -> usize {
        self.onsets.partition_point(|&s| s <= b) - self.onsets.partition_point(|&s| s <= a)
    }

    pub fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if !(self.duration.is_finite() && self.duration > 0.0) {
            out.push(Violation::NonPositiveDuration);
        }
        for (i, w) in self.onsets.windows(2).enumerate() {
            if w[1] == w[0] {
                out.push(Violation::Duplicate { index: i + 1, time: w[1] });
            } else if !(w[1] > w[0]) {
                out.push(Violation::Misordered { index: i + 1, time: w[1] });
            }
        }
        for (i, &t) in self.onsets.iter().enumerate() {
            if !t.is_finite() || t < 0.0 || t >= self.duration {
                out.push(Violation::OutOfWindow { index: i, time: t });
            }
        }
        out
    }
}

/// A collection of independent sessions.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    pub sequences: Vec<EventSequence>,
    pub metadata: BTreeMap<String, String>,
}

impl Dataset {
    /// Builds a dataset, rejecting duplicate session ids.
    pub fn new(sequences: Vec<EventSequence>) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        for s in &sequences {
            if !seen.insert(s.session_id.as_str()) {
                return Err(TppError::session(&s.session_id, "duplicate session_id"));
            }
        }
        Ok(Dataset {
            sequences,
            metadata: BTreeMap::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.sequences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequences.is_empty()
    }

    pub fn total_events(&self) -> usize {
        self.sequences.iter().map(EventSequence::len).sum()
    }

    pub fn total_duration(&self) -> f64 {
        self.sequences.iter().map(|s| s.duration).sum()
    }

    pub fn durations(&self) -> Vec<f64> {
        self.sequences.iter().map(|s| s.duration).collect()
    }

    pub fn get(&self, session_id: &str) -> Option<&EventSequence> {
        self.sequences.iter().find(|s| s.session_id == session_id)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sequence_rejects_onset_at_duration() {
        assert!(EventSequence::new("s", vec![1.0, 10.0], 10.0).is_err());
        assert!(EventSequence::new("s", vec![0.0, 9.99], 10.0).is_ok());
    }

    #[test]
    fn sequence_rejects_duplicates_and_misorder() {
        assert!(EventSequence::new("s", vec![1.0, 1.0], 10.0).is_err());
        assert!(EventSequence::new("s", vec![3.0, 2.0], 10.0).is_err());
    }

    #[test]
    fn history_views() {
        let s = EventSequence::new("s", vec![1.0, 2.0, 3.0], 10.0).unwrap();
        assert_eq!(s.history_before(2.0), &[1.0]);
        assert_eq!(s.history_through(2.0), &[1.0, 2.0]);
        assert_eq!(s.count_in(1.0, 3.0), 2);
    }

    #[test]
    fn dataset_rejects_duplicate_ids() {
        let a = EventSequence::new("s", vec![], 1.0).unwrap();
        assert!(Dataset::new(vec![a.clone(), a]).is_err());
    }

    #[test]
    fn grid_snapping() {
        assert_eq!(Timestamp(1124).snap_to_grid(), Timestamp(1000));
        assert_eq!(Timestamp(1125).snap_to_grid(), Timestamp(1250));
        assert!(Timestamp(-250).is_on_grid());
    }
}
