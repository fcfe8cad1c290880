//! Replay trace files: one `<t_seconds> <value>` sample per line, strictly
//! increasing time, `#` starts a comment.

use super::TraceError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceSample {
    pub t: f64,
    pub value: f64,
}

/// Parses a replay trace. Untrusted input: every malformation is rejected
/// with its line number, nothing panics.
pub fn parse_replay_trace(text: &str) -> Result<Vec<TraceSample>, TraceError> {
    let mut samples = Vec::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw_line.find('#') {
            Some(pos) => &raw_line[..pos],
            None => raw_line,
        };
        let mut fields = line.split_whitespace();
        let (t_field, value_field) = match (fields.next(), fields.next()) {
            (None, _) => continue, // blank or comment-only line
            (Some(t), Some(v)) => (t, v),
            (Some(_), None) => {
                return Err(TraceError::Malformed {
                    line: line_no,
                    reason: "expected `<t_seconds> <value>`".to_string(),
                })
            }
        };
        if let Some(extra) = fields.next() {
            return Err(TraceError::Malformed {
                line: line_no,
                reason: format!("unexpected trailing field `{extra}`"),
            });
        }
        let t: f64 = t_field.parse().map_err(|_| TraceError::Malformed {
            line: line_no,
            reason: format!("invalid time `{t_field}`"),
        })?;
        let value: f64 = value_field.parse().map_err(|_| TraceError::Malformed {
            line: line_no,
            reason: format!("invalid value `{value_field}`"),
        })?;
        if !t.is_finite() || !value.is_finite() {
            return Err(TraceError::Malformed {
                line: line_no,
                reason: "non-finite sample".to_string(),
            });
        }
        if let Some(last) = samples.last() {
            let last: &TraceSample = last;
            if t <= last.t {
                return Err(TraceError::Malformed {
                    line: line_no,
                    reason: format!("time {t} does not increase past {}", last.t),
                });
            }
        }
        samples.push(TraceSample { t, value });
    }
    Ok(samples)
}

/// Renders samples in the trace format; `parse_replay_trace` reads the
/// result back unchanged.
pub fn trace_to_string(samples: &[TraceSample]) -> String {
    let mut out = String::new();
    for s in samples {
        out.push_str(&format!("{} {}\n", s.t, s.value));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_samples_comments_and_blanks() {
        let text = "# header\n0.5 10\n\n1.5 20 # inline note\n2.5 -3.25\n";
        let samples = parse_replay_trace(text).unwrap();
        assert_eq!(
            samples,
            vec![
                TraceSample { t: 0.5, value: 10.0 },
                TraceSample { t: 1.5, value: 20.0 },
                TraceSample { t: 2.5, value: -3.25 },
            ]
        );
    }

    #[test]
    fn rejects_decreasing_time_with_line_number() {
        let err = parse_replay_trace("1 1\n0.5 2\n").unwrap_err();
        assert!(matches!(err, TraceError::Malformed { line: 2, .. }));
    }

    #[test]
    fn rejects_equal_time() {
        assert!(parse_replay_trace("1 1\n1 2\n").is_err());
    }

    #[test]
    fn rejects_garbage_fields() {
        assert!(matches!(
            parse_replay_trace("abc 1\n").unwrap_err(),
            TraceError::Malformed { line: 1, .. }
        ));
        assert!(parse_replay_trace("1\n").is_err());
        assert!(parse_replay_trace("1 2 3\n").is_err());
        assert!(parse_replay_trace("1 nan\n").is_err());
        assert!(parse_replay_trace("inf 2\n").is_err());
    }

    #[test]
    fn empty_input_is_an_empty_trace() {
        assert_eq!(parse_replay_trace("").unwrap(), vec![]);
        assert_eq!(parse_replay_trace("# only comments\n").unwrap(), vec![]);
    }

    #[test]
    fn roundtrips_through_render() {
        let samples = vec![
            TraceSample { t: 0.1, value: 0.25 },
            TraceSample { t: 1.0, value: -7.0 },
        ];
        assert_eq!(parse_replay_trace(&trace_to_string(&samples)).unwrap(), samples);
    }
}
