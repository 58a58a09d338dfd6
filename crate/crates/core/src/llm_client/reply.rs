//! Structured-reply extraction, tried in order: strict JSON, fenced code
//! block, first-brace span, then keyword regex (decisions only).

use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParseStage {
    Strict,
    Fenced,
    Brace,
    Keyword,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedDecision {
    pub sector: u8,
    pub found: bool,
    pub reason: String,
    pub stage: ParseStage,
}

static FENCE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?s)```(?:json)?\s*(.*?)```").unwrap());
static SECTOR_WORD: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)\b(?:direction|sector)\s*(?:#|number\s*|no\.?\s*)?(\d+)").unwrap());
static NOT_FOUND: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r#"(?i)\bnot\s+(?:yet\s+)?found\b|\bfound"?\s*[:=]\s*false\b"#).unwrap());
static FOUND: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?i)\bfound\b").unwrap());

fn object(text: &str) -> Option<serde_json::Value> {
    serde_json::from_str::<serde_json::Value>(text.trim())
        .ok()
        .filter(serde_json::Value::is_object)
}

/// First JSON object in `text` and the stage that found it.
pub fn parse_json_reply(text: &str) -> Option<(serde_json::Value, ParseStage)> {
    if let Some(v) = object(text) {
        return Some((v, ParseStage::Strict));
    }
    if let Some(v) = FENCE.captures_iter(text).find_map(|c| object(&c[1])) {
        return Some((v, ParseStage::Fenced));
    }
    let start = text.find('{')?;
    let end = text.rfind('}')?;
    (end > start)
        .then(|| object(&text[start..=end]))
        .flatten()
        .map(|v| (v, ParseStage::Brace))
}

fn decision_from_json(v: &serde_json::Value, allowed: &[u8]) -> Option<(u8, bool, String)> {
    let sector = match &v["sector"] {
        serde_json::Value::Number(n) => n.as_u64()?,
        serde_json::Value::String(s) => s.trim().parse().ok()?,
        _ => return None,
    };
    let sector = u8::try_from(sector).ok().filter(|s| allowed.contains(s))?;
    let found = match &v["found"] {
        serde_json::Value::Bool(b) => *b,
        serde_json::Value::String(s) => s.eq_ignore_ascii_case("true"),
        serde_json::Value::Null => false,
        _ => return None,
    };
    let reason = v["reason"].as_str().unwrap_or_default().to_string();
    Some((sector, found, reason))
}

/// Decision `{sector, found, reason}` from a model reply; `None` when no
/// rung of the ladder yields a sector in `allowed`.
pub fn parse_decision_reply(text: &str, allowed: &[u8]) -> Option<ParsedDecision> {
    if let Some((v, stage)) = parse_json_reply(text) {
        if let Some((sector, found, reason)) = decision_from_json(&v, allowed) {
            return Some(ParsedDecision {
                sector,
                found,
                reason,
                stage,
            });
        }
    }
    let sector = SECTOR_WORD
        .captures_iter(text)
        .filter_map(|c| c[1].parse::<u8>().ok())
        .find(|s| allowed.contains(s))?;
    let found = !NOT_FOUND.is_match(text) && FOUND.is_match(text);
    Some(ParsedDecision {
        sector,
        found,
        reason: text.trim().to_string(),
        stage: ParseStage::Keyword,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const ALL: [u8; 6] = [1, 2, 3, 4, 5, 6];

    #[test]
    fn strict_json() {
        let d = parse_decision_reply(r#"{"sector": 3, "found": false, "reason": "door"}"#, &ALL).unwrap();
        assert_eq!((d.sector, d.found, d.stage), (3, false, ParseStage::Strict));
        assert_eq!(d.reason, "door");
    }

    #[test]
    fn fenced_json() {
        let text = "Sure.\n```json\n{\"sector\": \"5\", \"found\": true}\n```\n";
        let d = parse_decision_reply(text, &ALL).unwrap();
        assert_eq!((d.sector, d.found, d.stage), (5, true, ParseStage::Fenced));
    }

    #[test]
    fn embedded_json() {
        let d = parse_decision_reply("I pick {\"sector\": 6, \"found\": false} because.", &ALL).unwrap();
        assert_eq!((d.sector, d.stage), (6, ParseStage::Brace));
    }

    #[test]
    fn prose_keywords() {
        let d = parse_decision_reply("I would go toward direction 2; the sofa is not found yet.", &ALL).unwrap();
        assert_eq!((d.sector, d.found, d.stage), (2, false, ParseStage::Keyword));
        let d = parse_decision_reply("Target found in sector 4.", &ALL).unwrap();
        assert_eq!((d.sector, d.found), (4, true));
    }

    #[test]
    fn garbage_and_out_of_range() {
        assert!(parse_decision_reply("lorem ipsum", &ALL).is_none());
        assert!(parse_decision_reply(r#"{"sector": 9, "found": false}"#, &ALL).is_none());
        assert!(parse_decision_reply("direction 4", &[6, 1, 2]).is_none());
    }

    #[test]
    fn invalid_json_falls_through_to_keywords() {
        let d = parse_decision_reply(r#"{"sector": 1, "found": "maybe"} direction 2"#, &ALL).unwrap();
        assert_eq!(d.stage, ParseStage::Brace);
        let d = parse_decision_reply(r#"{"dir": 1} go direction 2"#, &ALL).unwrap();
        assert_eq!((d.sector, d.stage), (2, ParseStage::Keyword));
    }
}
