use tpplab::data::{io, validate_dataset};
use tpplab::{Dataset, EventSequence};

const SESSIONS: &str = "\
session_id,participant_id,session_start,session_end
s1,p1,2024-03-01T10:00:00,2024-03-01T10:10:00
s2,p1,2024-03-01T10:20:00,2024-03-01T10:24:58.800
";

// Six annotations across three behaviors. Three of them join an existing
// run: ED overlaps SIB, ATO starts on the sample after ED stops, and the
// second annotation at 10:01:00 shares its start sample.
const ANNOTATIONS: &str = "\
participant_id,session_id,behavior,start,stop
p1,s1,SIB,2024-03-01T10:00:01,2024-03-01T10:00:02
p1,s1,ED,2024-03-01T10:00:01.500,2024-03-01T10:00:03
p1,s1,ATO,2024-03-01T10:00:03.250,2024-03-01T10:00:04
p1,s1,SIB,2024-03-01T10:01:00,2024-03-01T10:01:00
p1,s1,ED,2024-03-01T10:01:00,2024-03-01T10:01:05
p1,s1,ATO,2024-03-01T10:05:00.250,2024-03-01T10:05:10
";

fn ingest() -> Dataset {
    let (anns, _) = io::read_annotations(ANNOTATIONS.as_bytes(), false).unwrap();
    let (sess, _) = io::read_sessions(SESSIONS.as_bytes()).unwrap();
    io::build_dataset(&anns, &sess).unwrap()
}

#[test]
fn three_behavior_fixture_counts() {
    let ds = ingest();
    let s1 = ds.get("s1").unwrap();
    // 2 SIB + 2 ED + 2 ATO annotations, 3 absorbed into earlier runs
    assert_eq!(s1.len(), 6 - 3);
    assert_eq!(ds.metadata["merged_annotations"], "3");
    assert_eq!(ds.metadata["dedup_count"], "1");
    let expected = [1.0 / 60.0, 1.0, 300.25 / 60.0];
    for (a, b) in s1.onsets.iter().zip(expected) {
        assert!((a - b).abs() < 1e-12, "{a} vs {b}");
    }
    assert_eq!(s1.duration, 10.0);

    let s2 = ds.get("s2").unwrap();
    assert!(s2.is_empty());
    assert!((s2.duration - 4.98).abs() < 1e-12);
}

#[test]
fn jsonl_round_trip_is_stable() {
    let ds = ingest();
    let mut first = Vec::new();
    io::write_jsonl(&mut first, &ds, None).unwrap();
    let back = io::read_jsonl(first.as_slice()).unwrap();
    let mut second = Vec::new();
    io::write_jsonl(&mut second, &back, None).unwrap();
    assert_eq!(first, second);
    assert_eq!(back.sequences.len(), 2);
}

#[test]
fn normalization_preserves_gaps() {
    let ds = ingest();
    let s1 = ds.get("s1").unwrap();
    let gap_secs = (s1.onsets[2] - s1.onsets[1]) * 60.0;
    assert!((gap_secs - 240.25).abs() < 1e-9);
}

/// 100 participants: 13 with 7 sessions and 87 with 6, each observed for
/// 426.10 minutes in total with 69 or 70 onsets.
fn cohort_fixture() -> Dataset {
    let mut seqs = Vec::new();
    for p in 0..100 {
        let n_sessions = if p < 13 { 7 } else { 6 };
        let onsets = if p < 59 { 70 } else { 69 };
        let per = 426.10 / n_sessions as f64;
        for s in 0..n_sessions {
            let j = onsets / n_sessions + usize::from(s < onsets % n_sessions);
            let on: Vec<f64> = (0..j).map(|k| per * k as f64 / j as f64).collect();
            seqs.push(EventSequence::new(format!("p{p:03}-{s}"), on, per).unwrap().with_participant(format!("p{p:03}")));
        }
    }
    Dataset::new(seqs).unwrap()
}

#[test]
fn participant_summary_means() {
    let report = validate_dataset(&cohort_fixture());
    assert!(report.is_clean());
    assert_eq!(report.participants.len(), 100);
    assert!((report.mean.sessions - 6.13).abs() < 1e-12);
    assert!((report.mean.total_minutes - 426.10).abs() < 1e-9);
    assert!((report.mean.onsets - 69.59).abs() < 1e-12);
    assert_eq!(report.median.sessions, 6.0);
}

#[test]
fn malformed_inputs_are_rejected() {
    let bad = ANNOTATIONS.replace("2024-03-01T10:05:10", "not-a-time");
    assert!(io::read_annotations(bad.as_bytes(), false).is_err());
    let offgrid = ANNOTATIONS.replace("10:00:01.500", "10:00:01.600");
    assert!(io::read_annotations(offgrid.as_bytes(), false).is_err());
    assert!(io::read_annotations(offgrid.as_bytes(), true).is_ok());
    let outside = ANNOTATIONS.replace("10:05:10", "10:15:10");
    let (anns, _) = io::read_annotations(outside.as_bytes(), false).unwrap();
    let (sess, _) = io::read_sessions(SESSIONS.as_bytes()).unwrap();
    let err = io::build_dataset(&anns, &sess).unwrap_err().to_string();
    assert!(err.contains("s1"), "{err}");
}
