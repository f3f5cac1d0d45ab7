use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use super::Dataset;
use crate::stats;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    Misordered { index: usize, time: f64 },
    Duplicate { index: usize, time: f64 },
    OutOfWindow { index: usize, time: f64 },
    NonPositiveDuration,
    DuplicateSessionId,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Misordered { index, time } => {
                write!(f, "onset {index} at {time} precedes its predecessor")
            }
            Violation::Duplicate { index, time } => write!(f, "onset {index} duplicates time {time}"),
            Violation::OutOfWindow { index, time } => {
                write!(f, "onset {index} at {time} lies outside [0, T)")
            }
            Violation::NonPositiveDuration => f.write_str("duration must be positive and finite"),
            Violation::DuplicateSessionId => f.write_str("session_id is not unique"),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SequenceSummary {
    pub session_id: String,
    pub participant_id: String,
    pub onsets: usize,
    pub duration: f64,
    pub violations: Vec<Violation>,
}

/// One row in the per-participant layout: onsets, sessions, total minutes,
/// minutes per session.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParticipantRow {
    pub participant_id: String,
    pub onsets: f64,
    pub sessions: f64,
    pub total_minutes: f64,
    pub minutes_per_session: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub sequences: Vec<SequenceSummary>,
    pub total_violations: usize,
    pub total_onsets: usize,
    pub total_minutes: f64,
    pub participants: Vec<ParticipantRow>,
    pub mean: ParticipantRow,
    pub median: ParticipantRow,
    pub std: ParticipantRow,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.total_violations == 0
    }
}

/// Report-only check of every sequence plus per-participant summary rows.
/// Sessions without a participant id are grouped under their session id.
pub fn validate_dataset(ds: &Dataset) -> ValidationReport {
    let mut seen = std::collections::HashSet::new();
    let mut sequences = Vec::with_capacity(ds.len());
    let mut groups: BTreeMap<String, (usize, usize, f64)> = BTreeMap::new();
    for s in &ds.sequences {
        let mut violations = s.violations();
        if !seen.insert(s.session_id.as_str()) {
            violations.push(Violation::DuplicateSessionId);
        }
        let participant = s.participant_id.clone().unwrap_or_else(|| s.session_id.clone());
        let g = groups.entry(participant.clone()).or_default();
        g.0 += s.len();
        g.1 += 1;
        g.2 += s.duration;
        sequences.push(SequenceSummary {
            session_id: s.session_id.clone(),
            participant_id: participant,
            onsets: s.len(),
            duration: s.duration,
            violations,
        });
    }

    let participants: Vec<ParticipantRow> = groups
        .into_iter()
        .map(|(id, (onsets, sessions, minutes))| ParticipantRow {
            participant_id: id,
            onsets: onsets as f64,
            sessions: sessions as f64,
            total_minutes: minutes,
            minutes_per_session: minutes / sessions as f64,
        })
        .collect();

    let column = |f: fn(&ParticipantRow) -> f64| participants.iter().map(f).collect::<Vec<_>>();
    let cols = [
        column(|r| r.onsets),
        column(|r| r.sessions),
        column(|r| r.total_minutes),
        column(|r| r.minutes_per_session),
    ];
    let summarize = |name: &str, f: fn(&[f64]) -> f64| ParticipantRow {
        participant_id: name.to_string(),
        onsets: f(&cols[0]),
        sessions: f(&cols[1]),
        total_minutes: f(&cols[2]),
        minutes_per_session: f(&cols[3]),
    };

    ValidationReport {
        total_violations: sequences.iter().map(|s| s.violations.len()).sum(),
        total_onsets: ds.total_events(),
        total_minutes: ds.total_duration(),
        mean: summarize("mean", stats::mean),
        median: summarize("median", stats::median),
        std: summarize("std", stats::sd),
        participants,
        sequences,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::EventSequence;

    #[test]
    fn clean_dataset_has_no_violations() {
        let ds = Dataset::new(vec![
            EventSequence::new("a", vec![1.0, 2.0], 10.0).unwrap(),
            EventSequence::new("b", vec![], 5.0).unwrap(),
        ])
        .unwrap();
        let r = validate_dataset(&ds);
        assert!(r.is_clean());
        assert_eq!(r.total_onsets, 2);
        assert_eq!(r.total_minutes, 15.0);
    }

    #[test]
    fn misordered_onsets_are_flagged() {
        let mut ds = Dataset::default();
        ds.sequences.push(EventSequence {
            session_id: "a".into(),
            participant_id: None,
            duration: 10.0,
            onsets: vec![3.0, 2.0],
        });
        let r = validate_dataset(&ds);
        assert_eq!(r.total_violations, 1);
        assert!(matches!(r.sequences[0].violations[0], Violation::Misordered { .. }));
    }
}
