//! CSV ingestion and the canonical JSON-lines dataset format.

use std::collections::BTreeMap;
use std::io::{BufRead, Read, Write};

use chrono::{DateTime, NaiveDateTime};
use serde::{Deserialize, Serialize};

use super::{
    collapse_episodes, normalize_session, Behavior, Dataset, EventSequence, RawAnnotation,
    SessionRecord, Timestamp,
};
use crate::error::{Result, TppError};

pub const ANNOTATION_HEADER: [&str; 5] = ["participant_id", "session_id", "behavior", "start", "stop"];
pub const SESSION_HEADER: [&str; 4] = ["session_id", "participant_id", "session_start", "session_end"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeEncoding {
    Iso8601,
    EpochSeconds,
}

impl TimeEncoding {
    pub fn as_str(self) -> &'static str {
        match self {
            TimeEncoding::Iso8601 => "iso8601",
            TimeEncoding::EpochSeconds => "epoch_seconds",
        }
    }

    /// Decided by the first value: fractional epoch seconds if it parses as
    /// a number, ISO-8601 otherwise. Rows that disagree fail to parse and are
    /// reported with their own line number.
    pub fn detect<'a>(values: impl IntoIterator<Item = &'a str>) -> Self {
        match values.into_iter().map(str::trim).find(|v| !v.is_empty()) {
            Some(v) if v.parse::<f64>().is_ok() => TimeEncoding::EpochSeconds,
            _ => TimeEncoding::Iso8601,
        }
    }

    pub fn parse(self, s: &str) -> std::result::Result<Timestamp, String> {
        let s = s.trim();
        match self {
            TimeEncoding::EpochSeconds => s
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .map(Timestamp::from_secs_f64)
                .ok_or_else(|| format!("'{s}' is not a number of seconds")),
            TimeEncoding::Iso8601 => parse_iso(s).ok_or_else(|| format!("'{s}' is not an ISO-8601 timestamp")),
        }
    }
}

fn parse_iso(s: &str) -> Option<Timestamp> {
    if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
        return Some(Timestamp(dt.timestamp_millis()));
    }
    // Offset-less timestamps are read as UTC.
    for fmt in ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f", "%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S"] {
        if let Ok(dt) = NaiveDateTime::parse_from_str(s, fmt) {
            return Some(Timestamp(dt.and_utc().timestamp_millis()));
        }
    }
    None
}

fn read_rows<R: Read>(reader: R, header: &[&str]) -> Result<Vec<(usize, csv::StringRecord)>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let got: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if got != header {
        return Err(TppError::Parse {
            location: "line 1".into(),
            reason: format!("expected header '{}', found '{}'", header.join(","), got.join(",")),
        });
    }
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| TppError::Parse {
            location: format!("line {line}"),
            reason: e.to_string(),
        })?;
        if rec.len() != header.len() {
            return Err(TppError::Parse {
                location: format!("line {line}"),
                reason: format!("expected {} fields, found {}", header.len(), rec.len()),
            });
        }
        rows.push((line, rec));
    }
    Ok(rows)
}

fn row_err(line: usize, reason: impl Into<String>) -> TppError {
    TppError::Parse {
        location: format!("line {line}"),
        reason: reason.into(),
    }
}

/// Reads `participant_id,session_id,behavior,start,stop` rows.
pub fn read_annotations<R: Read>(reader: R, tolerate_offgrid: bool) -> Result<(Vec<RawAnnotation>, TimeEncoding)> {
    let rows = read_rows(reader, &ANNOTATION_HEADER)?;
    let enc = TimeEncoding::detect(rows.iter().flat_map(|(_, r)| [&r[3], &r[4]]));
    let mut out = Vec::with_capacity(rows.len());
    for (line, r) in rows {
        let behavior: Behavior = r[2].parse().map_err(|e: TppError| row_err(line, e.to_string()))?;
        let start = enc.parse(&r[3]).map_err(|e| row_err(line, e))?;
        let stop = enc.parse(&r[4]).map_err(|e| row_err(line, e))?;
        let a = RawAnnotation::new(&r[0], &r[1], behavior, start, stop, tolerate_offgrid)
            .map_err(|e| row_err(line, e.to_string()))?;
        out.push(a);
    }
    Ok((out, enc))
}

/// Reads `session_id,participant_id,session_start,session_end` rows.
pub fn read_sessions<R: Read>(reader: R) -> Result<(Vec<SessionRecord>, TimeEncoding)> {
    let rows = read_rows(reader, &SESSION_HEADER)?;
    let enc = TimeEncoding::detect(rows.iter().flat_map(|(_, r)| [&r[2], &r[3]]));
    let mut out = Vec::with_capacity(rows.len());
    for (line, r) in rows {
        let start = enc.parse(&r[2]).map_err(|e| row_err(line, e))?;
        let end = enc.parse(&r[3]).map_err(|e| row_err(line, e))?;
        out.push(SessionRecord::new(&r[0], &r[1], start, end).map_err(|e| row_err(line, e.to_string()))?);
    }
    Ok((out, enc))
}

/// Collapses and normalizes every session, in session-file order.
pub fn build_dataset(
    annotations: &[RawAnnotation],
    sessions: &[SessionRecord],
) -> Result<Dataset> {
    let mut by_session: BTreeMap<&str, Vec<RawAnnotation>> = BTreeMap::new();
    for a in annotations {
        by_session.entry(a.session_id.as_str()).or_default().push(a.clone());
    }
    for id in by_session.keys() {
        if !sessions.iter().any(|s| s.session_id == *id) {
            return Err(TppError::session(id, "annotations reference an unknown session"));
        }
    }
    let mut seqs = Vec::with_capacity(sessions.len());
    let (mut merged, mut duplicates) = (0usize, 0usize);
    for s in sessions {
        let anns = by_session.get(s.session_id.as_str()).map(Vec::as_slice).unwrap_or(&[]);
        let c = collapse_episodes(anns, s)?;
        merged += c.merged;
        duplicates += c.duplicate_onsets;
        seqs.push(normalize_session(&c.onsets, s)?);
    }
    let mut ds = Dataset::new(seqs)?;
    ds.metadata.insert("annotations".into(), annotations.len().to_string());
    ds.metadata.insert("merged_annotations".into(), merged.to_string());
    ds.metadata.insert("dedup_count".into(), duplicates.to_string());
    Ok(ds)
}

/// Rounds to 9 significant digits; idempotent.
pub fn round_sig9(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.8e}").parse().unwrap_or(x)
}

#[derive(Serialize)]
struct LineOut<'a> {
    session_id: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    participant_id: Option<&'a str>,
    #[serde(rename = "T")]
    duration: f64,
    onsets: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    provenance: Option<&'a serde_json::Value>,
}

#[derive(Deserialize)]
struct LineIn {
    session_id: String,
    #[serde(default)]
    participant_id: Option<String>,
    #[serde(rename = "T")]
    duration: f64,
    onsets: Vec<f64>,
}

/// Writes one JSON object per session, times rounded to 9 significant digits.
pub fn write_jsonl<W: Write>(
    mut w: W,
    ds: &Dataset,
    provenance: Option<&serde_json::Value>,
) -> Result<()> {
    for s in &ds.sequences {
        let line = LineOut {
            session_id: &s.session_id,
            participant_id: s.participant_id.as_deref(),
            duration: round_sig9(s.duration),
            onsets: s.onsets.iter().copied().map(round_sig9).collect(),
            provenance,
        };
        serde_json::to_writer(&mut w, &line)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// Reads a JSON-lines dataset without validating sequence contents, so a
/// report can still be produced for malformed sessions.
pub fn read_jsonl_unchecked<R: BufRead>(r: R) -> Result<Dataset> {
    let mut ds = Dataset::default();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let l: LineIn = serde_json::from_str(&line).map_err(|e| TppError::Parse {
            location: format!("line {}", i + 1),
            reason: e.to_string(),
        })?;
        ds.sequences.push(EventSequence {
            session_id: l.session_id,
            participant_id: l.participant_id,
            duration: l.duration,
            onsets: l.onsets,
        });
    }
    Ok(ds)
}

/// Reads and validates a JSON-lines dataset.
pub fn read_jsonl<R: BufRead>(r: R) -> Result<Dataset> {
    let raw = read_jsonl_unchecked(r)?;
    for s in &raw.sequences {
        if let Some(v) = s.violations().into_iter().next() {
            return Err(TppError::session(&s.session_id, v.to_string()));
        }
    }
    let mut ds = Dataset::new(raw.sequences)?;
    ds.metadata = raw.metadata;
    Ok(ds)
}

pub fn read_jsonl_path(path: &std::path::Path) -> Result<Dataset> {
    let f = std::fs::File::open(path)?;
    read_jsonl(std::io::BufReader::new(f))
}

pub fn write_jsonl_path(path: &std::path::Path, ds: &Dataset, provenance: Option<&serde_json::Value>) -> Result<()> {
    let mut buf = Vec::new();
    write_jsonl(&mut buf, ds, provenance)?;
    std::fs::write(path, buf)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const ANNS: &str = "participant_id,session_id,behavior,start,stop\n\
        p1,s1,SIB,1.0,1.5\n\
        p1,s1,ED,1.25,2.0\n\
        p1,s1,ATO,5.0,5.0\n\
        p1,s2,ED,61.0,62.0\n";
    const SESS: &str = "session_id,participant_id,session_start,session_end\n\
        s1,p1,0,600\n\
        s2,p1,60,120\n";

    #[test]
    fn epoch_and_iso_detection() {
        assert_eq!(TimeEncoding::detect(["1.5", "2"]), TimeEncoding::EpochSeconds);
        assert_eq!(TimeEncoding::detect(["2020-01-01T00:00:00Z"]), TimeEncoding::Iso8601);
        let t = TimeEncoding::Iso8601.parse("1970-01-01T00:00:01.250Z").unwrap();
        assert_eq!(t, Timestamp(1250));
        let t = TimeEncoding::Iso8601.parse("1970-01-01 00:01:00").unwrap();
        assert_eq!(t, Timestamp(60_000));
    }

    #[test]
    fn ingest_pipeline() {
        let (anns, enc) = read_annotations(ANNS.as_bytes(), false).unwrap();
        assert_eq!(enc, TimeEncoding::EpochSeconds);
        let (sess, _) = read_sessions(SESS.as_bytes()).unwrap();
        let ds = build_dataset(&anns, &sess).unwrap();
        assert_eq!(ds.sequences[0].onsets.len(), 2);
        assert!((ds.sequences[0].onsets[1] - 5.0 / 60.0).abs() < 1e-12);
        assert_eq!(ds.sequences[1].onsets, vec![1.0 / 60.0]);
        assert_eq!(ds.metadata["merged_annotations"], "1");
    }

    #[test]
    fn malformed_row_reports_line_number() {
        let bad = "participant_id,session_id,behavior,start,stop\np1,s1,SIB,1.0,1.5\np1,s1,XYZ,1.0,1.5\n";
        let err = read_annotations(bad.as_bytes(), false).unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
    }

    #[test]
    fn jsonl_round_trip_is_byte_stable() {
        let mut ds = Dataset::new(vec![
            EventSequence::new("a", vec![1.0 / 3.0, 2.5], 60.0).unwrap(),
            EventSequence::new("b", vec![], 4.98).unwrap(),
        ])
        .unwrap();
        ds.sequences[0].participant_id = Some("p".into());
        let mut first = Vec::new();
        write_jsonl(&mut first, &ds, None).unwrap();
        let back = read_jsonl(first.as_slice()).unwrap();
        let mut second = Vec::new();
        write_jsonl(&mut second, &back, None).unwrap();
        assert_eq!(first, second);
        let text = String::from_utf8(first).unwrap();
        assert!(text.starts_with(r#"{"session_id":"a","participant_id":"p","T":60.0,"onsets":[0.333333333,2.5]}"#));
    }

    #[test]
    fn sig9_rounding() {
        assert_eq!(round_sig9(1.0 / 3.0), 0.333333333);
        assert_eq!(round_sig9(123456.789012), 123456.789);
        assert_eq!(round_sig9(round_sig9(2.0 / 7.0)), round_sig9(2.0 / 7.0));
    }
}
