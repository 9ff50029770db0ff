//! Canonical corpus file: one record per line,
//! `phase_id<TAB>phase<TAB>text`, with a leading header line carrying the
//! label map in declaration order. Tabs, newlines, and backslashes in text
//! are escaped so the format stays line-oriented.

use std::io::{BufRead, Write};

use super::{IngestError, LabelMap, LabeledNarrative};

const HEADER_PREFIX: &str = "#labels";

fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            _ => out.push(c),
        }
    }
    out
}

fn unescape(text: &str, line: usize) -> Result<String, IngestError> {
    let mut out = String::with_capacity(text.len());
    let mut chars = text.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('\\') => out.push('\\'),
            Some('t') => out.push('\t'),
            Some('n') => out.push('\n'),
            Some('r') => out.push('\r'),
            other => {
                return Err(IngestError::MalformedInput {
                    position: format!("line {line}"),
                    reason: format!(
                        "bad escape sequence \\{}",
                        other.map(String::from).unwrap_or_default()
                    ),
                })
            }
        }
    }
    Ok(out)
}

/// Write records and their label map in the canonical corpus format.
pub fn write_corpus(
    records: &[LabeledNarrative],
    map: &LabelMap,
    out: &mut impl Write,
) -> std::io::Result<()> {
    let mut header = String::from(HEADER_PREFIX);
    for label in map.labels() {
        header.push('\t');
        header.push_str(&escape(label));
    }
    writeln!(out, "{header}")?;
    for record in records {
        writeln!(
            out,
            "{}\t{}\t{}",
            record.phase_id,
            escape(&record.phase),
            escape(&record.text)
        )?;
    }
    Ok(())
}

/// Read a canonical corpus file back into records and a label map.
pub fn read_corpus(
    input: &mut impl BufRead,
) -> Result<(Vec<LabeledNarrative>, LabelMap), IngestError> {
    let malformed = |line: usize, reason: String| IngestError::MalformedInput {
        position: format!("line {line}"),
        reason,
    };

    let mut lines = input.lines().enumerate();
    let header = match lines.next() {
        Some((_, Ok(h))) => h,
        Some((_, Err(e))) => return Err(malformed(1, e.to_string())),
        None => return Err(malformed(1, "empty corpus file".to_string())),
    };
    let mut parts = header.split('\t');
    if parts.next() != Some(HEADER_PREFIX) {
        return Err(malformed(1, "missing #labels header".to_string()));
    }
    let labels = parts
        .map(|l| unescape(l, 1))
        .collect::<Result<Vec<_>, _>>()?;
    let map = LabelMap::new(labels)?;

    let mut records = Vec::new();
    for (idx, line) in lines {
        let lineno = idx + 1;
        let line = line.map_err(|e| malformed(lineno, e.to_string()))?;
        if line.is_empty() {
            continue;
        }
        let mut parts = line.splitn(3, '\t');
        let phase_id: usize = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| malformed(lineno, "bad phase id".to_string()))?;
        let phase = parts
            .next()
            .map(|s| unescape(s, lineno))
            .transpose()?
            .ok_or_else(|| malformed(lineno, "missing phase".to_string()))?;
        let text = parts
            .next()
            .map(|s| unescape(s, lineno))
            .transpose()?
            .ok_or_else(|| malformed(lineno, "missing text".to_string()))?;
        match map.label(phase_id) {
            Some(expected) if expected == phase => {}
            Some(expected) => {
                return Err(malformed(
                    lineno,
                    format!("phase {phase:?} does not match label {expected:?} for id {phase_id}"),
                ))
            }
            None => {
                return Err(malformed(
                    lineno,
                    format!(
                        "phase id {phase_id} outside label map of size {}",
                        map.len()
                    ),
                ))
            }
        }
        records.push(LabeledNarrative {
            text,
            phase,
            phase_id,
        });
    }
    Ok((records, map))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> (Vec<LabeledNarrative>, LabelMap) {
        let map = LabelMap::new(vec!["landing".into(), "enroute".into()]).unwrap();
        let records = vec![
            LabeledNarrative {
                text: "touched\tdown\nhard \\ bounced".to_string(),
                phase: "landing".to_string(),
                phase_id: 0,
            },
            LabeledNarrative {
                text: "steady cruise".to_string(),
                phase: "enroute".to_string(),
                phase_id: 1,
            },
        ];
        (records, map)
    }

    #[test]
    fn round_trip_with_escaped_characters() {
        let (records, map) = sample();
        let mut buf = Vec::new();
        write_corpus(&records, &map, &mut buf).unwrap();
        let (parsed, parsed_map) = read_corpus(&mut buf.as_slice()).unwrap();
        assert_eq!(parsed, records);
        assert_eq!(parsed_map, map);
        // The on-disk form stays line-oriented despite embedded newlines.
        assert_eq!(buf.iter().filter(|&&b| b == b'\n').count(), 3);
    }

    #[test]
    fn header_carries_labels_in_order() {
        let (records, map) = sample();
        let mut buf = Vec::new();
        write_corpus(&records, &map, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("#labels\tlanding\tenroute\n"));
    }

    #[test]
    fn mismatched_phase_and_id_rejected() {
        let mut bad = b"#labels\ta\tb\n0\tb\tsome text\n".as_slice();
        assert!(matches!(
            read_corpus(&mut bad),
            Err(IngestError::MalformedInput { .. })
        ));
    }

    #[test]
    fn missing_header_rejected() {
        let mut bad = b"0\ta\ttext\n".as_slice();
        assert!(matches!(
            read_corpus(&mut bad),
            Err(IngestError::MalformedInput { .. })
        ));
    }

    #[test]
    fn bad_escape_rejected() {
        let mut bad = b"#labels\ta\n0\ta\tbroken \\x escape\n".as_slice();
        assert!(matches!(
            read_corpus(&mut bad),
            Err(IngestError::MalformedInput { .. })
        ));
    }
}
