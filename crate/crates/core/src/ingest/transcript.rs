use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptTurn {
    pub speaker: String,
    /// Seconds from the start of the recording.
    pub start_time: Option<u32>,
    pub text: String,
}

pub const UNKNOWN_SPEAKER: &str = "unknown";

fn tag_pattern() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        // `[HH:MM:SS] Speaker: text`, timestamp optional. Speakers are short
        // labels so ordinary prose containing a colon stays a continuation.
        Regex::new(
            r"^\s*(?:\[(\d{1,3}):([0-5]\d):([0-5]\d)\]\s*)?([\p{L}\p{N}][\p{L}\p{N} ._'()-]{0,39}?)\s*:(?:\s+(.*)|)$",
        )
        .expect("transcript pattern compiles")
    })
}

fn timestamp_only() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^\s*\[(\d{1,3}):([0-5]\d):([0-5]\d)\]\s*(.*)$").expect("compiles"))
}

fn seconds(h: &str, m: &str, s: &str) -> u32 {
    h.parse::<u32>().unwrap_or(0) * 3600 + m.parse::<u32>().unwrap_or(0) * 60 + s.parse::<u32>().unwrap_or(0)
}

/// Parses `[HH:MM:SS] Speaker: text` lines. Untagged lines continue the
/// current turn; untagged text before the first tag becomes an `unknown`
/// turn. Turns whose text ends up empty are dropped, and timestamps are
/// clamped so they never decrease.
pub fn parse_transcript(raw: &str) -> Vec<TranscriptTurn> {
    let mut turns: Vec<TranscriptTurn> = Vec::new();
    let mut last_time: Option<u32> = None;
    for line in raw.lines() {
        let tagged = tag_pattern().captures(line).map(|c| {
            let time = c.get(1).map(|h| seconds(h.as_str(), &c[2], &c[3]));
            (c[4].trim().to_owned(), time, c.get(5).map_or("", |m| m.as_str()).to_owned())
        });
        let tagged = tagged.or_else(|| {
            // a bare timestamp opens a turn by whoever spoke last
            timestamp_only().captures(line).map(|c| {
                let speaker = turns
                    .last()
                    .map_or(UNKNOWN_SPEAKER.to_owned(), |t| t.speaker.clone());
                (speaker, Some(seconds(&c[1], &c[2], &c[3])), c[4].to_owned())
            })
        });
        match tagged {
            Some((speaker, time, text)) => {
                let time = time.map(|t| last_time.map_or(t, |l| t.max(l)));
                if time.is_some() {
                    last_time = time;
                }
                turns.push(TranscriptTurn {
                    speaker,
                    start_time: time,
                    text,
                });
            }
            None => match turns.last_mut() {
                Some(turn) => {
                    if !turn.text.is_empty() {
                        turn.text.push('\n');
                    }
                    turn.text.push_str(line);
                }
                None if line.trim().is_empty() => {}
                None => turns.push(TranscriptTurn {
                    speaker: UNKNOWN_SPEAKER.to_owned(),
                    start_time: None,
                    text: line.to_owned(),
                }),
            },
        }
    }
    for turn in &mut turns {
        turn.text = turn.text.trim_end().to_owned();
    }
    turns.retain(|t| !t.text.trim().is_empty());
    turns
}

/// One `Speaker: text` paragraph per turn.
pub fn flatten_transcript(turns: &[TranscriptTurn]) -> String {
    turns
        .iter()
        .map(|t| format!("{}: {}", t.speaker, t.text))
        .collect::<Vec<_>>()
        .join("\n\n")
}
