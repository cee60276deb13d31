//! The de facto RTTM interchange format: one `SPEAKER` line per segment,
//! `SPEAKER <file> <chan> <onset> <dur> <NA> <NA> <speaker> <NA> <NA>`.

use super::ScoreError;

#[derive(Debug, Clone, PartialEq)]
pub struct RttmRecord {
    pub file_id: String,
    pub channel: String,
    pub onset: f64,
    pub duration: f64,
    pub speaker: String,
}

/// Parses SPEAKER lines. Blank lines and `;;` comments are skipped; anything
/// else malformed is an error carrying its 1-based line number.
pub fn parse_rttm(text: &str) -> Result<Vec<RttmRecord>, ScoreError> {
    let mut records = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with(";;") {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if fields[0] != "SPEAKER" {
            return Err(ScoreError::Parse {
                line,
                detail: format!("expected SPEAKER record, got {:?}", fields[0]),
            });
        }
        if fields.len() < 8 {
            return Err(ScoreError::Parse {
                line,
                detail: format!("expected at least 8 fields, got {}", fields.len()),
            });
        }
        let onset: f64 = fields[3].parse().map_err(|_| ScoreError::Parse {
            line,
            detail: format!("bad onset {:?}", fields[3]),
        })?;
        let duration: f64 = fields[4].parse().map_err(|_| ScoreError::Parse {
            line,
            detail: format!("bad duration {:?}", fields[4]),
        })?;
        if !(onset.is_finite() && onset >= 0.0) {
            return Err(ScoreError::Parse {
                line,
                detail: format!("onset must be >= 0, got {onset}"),
            });
        }
        if !(duration.is_finite() && duration > 0.0) {
            return Err(ScoreError::Parse {
                line,
                detail: format!("duration must be > 0, got {duration}"),
            });
        }
        records.push(RttmRecord {
            file_id: fields[1].to_string(),
            channel: fields[2].to_string(),
            onset,
            duration,
            speaker: fields[7].to_string(),
        });
    }
    Ok(records)
}

/// Writes records with onset/duration at 3 decimals.
pub fn write_rttm(records: &[RttmRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&format!(
            "SPEAKER {} {} {:.3} {:.3} <NA> <NA> {} <NA> <NA>\n",
            r.file_id, r.channel, r.onset, r.duration, r.speaker
        ));
    }
    out
}
