use super::{EventSequence, RawAnnotation, SessionRecord, Timestamp, GRID_MS};
use crate::error::{Result, TppError};

/// Result of reducing a session's annotations to onsets.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Collapsed {
    /// Left boundary of every maximal run of positive grid samples, sorted.
    pub onsets: Vec<Timestamp>,
    /// Grid-sample runs as inclusive `[first, last]` timestamps.
    pub runs: Vec<(Timestamp, Timestamp)>,
    /// Annotations absorbed into a run started by another annotation.
    pub merged: usize,
    /// Annotations sharing their start sample with another annotation.
    pub duplicate_onsets: usize,
}

/// Superposes all behavior classes and reduces each continuous episode to its
/// onset. Annotations outside the session bounds are rejected.
pub fn collapse_episodes(annotations: &[RawAnnotation], session: &SessionRecord) -> Result<Collapsed> {
    let mut spans: Vec<(i64, i64)> = Vec::with_capacity(annotations.len());
    for a in annotations {
        if a.session_id != session.session_id {
            return Err(TppError::session(
                &session.session_id,
                format!("annotation belongs to session '{}'", a.session_id),
            ));
        }
        if a.start < session.session_start || a.stop > session.session_end {
            return Err(TppError::session(
                &session.session_id,
                format!(
                    "annotation [{}, {}] ms lies outside the session [{}, {}] ms",
                    a.start.0, a.stop.0, session.session_start.0, session.session_end.0
                ),
            ));
        }
        spans.push((a.start.sample_index(), a.stop.sample_index()));
    }
    spans.sort_unstable();

    let mut out = Collapsed::default();
    let mut current: Option<(i64, i64)> = None;
    let mut prev_start: Option<i64> = None;
    for &(s, e) in &spans {
        if prev_start == Some(s) {
            out.duplicate_onsets += 1;
        }
        prev_start = Some(s);
        match current {
            // consecutive samples belong to the same run
            Some((cs, ce)) if s <= ce + 1 => {
                current = Some((cs, ce.max(e)));
                out.merged += 1;
            }
            Some(run) => {
                push_run(&mut out, run);
                current = Some((s, e));
            }
            None => current = Some((s, e)),
        }
    }
    if let Some(run) = current {
        push_run(&mut out, run);
    }
    Ok(out)
}

fn push_run(out: &mut Collapsed, (s, e): (i64, i64)) {
    let first = Timestamp(s * GRID_MS);
    out.onsets.push(first);
    out.runs.push((first, Timestamp(e * GRID_MS)));
}

/// Re-expresses onsets in minutes since the session start. Onsets at the
/// session end fall outside `[0, T)` and are dropped.
pub fn normalize_session(onsets: &[Timestamp], session: &SessionRecord) -> Result<EventSequence> {
    let start = session.session_start.0;
    let mut times = Vec::with_capacity(onsets.len());
    for &o in onsets {
        if o < session.session_start || o > session.session_end {
            return Err(TppError::session(
                &session.session_id,
                format!("onset {} ms outside session bounds", o.0),
            ));
        }
        if o == session.session_end {
            continue;
        }
        times.push((o.0 - start) as f64 / 60_000.0);
    }
    times.sort_by(f64::total_cmp);
    times.dedup();
    let seq = EventSequence::new(session.session_id.clone(), times, session.duration_minutes())?;
    Ok(seq.with_participant(session.participant_id.clone()))
}
