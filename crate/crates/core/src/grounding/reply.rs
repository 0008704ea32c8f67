//! Parsing of model replies into groundings.

use std::collections::HashSet;

use serde_json::Value;
use thiserror::Error;

use crate::model::{GroundingResult, ShapeId};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("unparseable reply: {0}")]
pub struct ReplyError(pub String);

/// A parsed reply plus the problems that were tolerated.
#[derive(Clone, Debug, PartialEq)]
pub struct ParsedReply {
    pub result: GroundingResult,
    pub warnings: Vec<String>,
}

/// Pulls the first JSON value out of a reply, skipping code fences and prose.
pub fn extract_json(reply: &str) -> Result<Value, ReplyError> {
    let start = reply.find(['{', '[']).ok_or_else(|| ReplyError("no JSON object or array found".into()))?;
    let mut stream = serde_json::Deserializer::from_str(&reply[start..]).into_iter::<Value>();
    match stream.next() {
        Some(Ok(v)) => Ok(v),
        Some(Err(e)) => Err(ReplyError(format!("invalid JSON: {e}"))),
        None => Err(ReplyError("empty reply".into())),
    }
}

fn parse_index(key: &str) -> Option<usize> {
    key.trim().parse().ok()
}

fn ids_of(v: &Value) -> Option<&Vec<Value>> {
    match v {
        Value::Array(a) => Some(a),
        Value::Object(o) => ["shape_ids", "shape_IDs", "ids", "objects"].iter().find_map(|k| o.get(*k)?.as_array()),
        _ => None,
    }
}

/// Sentence index to raw id list, in reply order.
fn entries(v: &Value) -> Result<Vec<(usize, &Vec<Value>)>, ReplyError> {
    match v {
        Value::Object(o) => {
            for wrapper in ["groundings", "results", "sentences"] {
                if let (Some(inner), 1) = (o.get(wrapper), o.len()) {
                    return entries(inner);
                }
            }
            o.iter()
                .map(|(k, v)| {
                    let i = parse_index(k).ok_or_else(|| ReplyError(format!("key {k:?} is not a sentence index")))?;
                    let ids = ids_of(v).ok_or_else(|| ReplyError(format!("entry {k:?} is not a list of shape_IDs")))?;
                    Ok((i, ids))
                })
                .collect()
        }
        Value::Array(items) => items
            .iter()
            .enumerate()
            .map(|(pos, item)| {
                let index = item
                    .as_object()
                    .and_then(|o| ["index", "sentence_index", "sentence"].iter().find_map(|k| o.get(*k)?.as_u64()))
                    .map_or(pos, |i| i as usize);
                let ids = ids_of(item).ok_or_else(|| ReplyError(format!("item {pos} is not a list of shape_IDs")))?;
                Ok((index, ids))
            })
            .collect(),
        _ => Err(ReplyError("expected a JSON object or array".into())),
    }
}

/// Parses a reply mapping sentence indices to shape_IDs.
///
/// Ids are deduplicated keeping first occurrence; ids outside `valid_ids` and
/// indices outside `0..n_sentences` are dropped with a warning; missing
/// indices ground to nothing. The result's object order is `valid_ids`.
pub fn parse_grounding_reply(
    reply: &str,
    valid_ids: &[ShapeId],
    n_sentences: usize,
) -> Result<ParsedReply, ReplyError> {
    let value = extract_json(reply)?;
    let valid: HashSet<&str> = valid_ids.iter().map(ShapeId::as_str).collect();
    let mut rows: Vec<Vec<ShapeId>> = vec![Vec::new(); n_sentences];
    let mut warnings = Vec::new();
    for (i, ids) in entries(&value)? {
        let Some(row) = rows.get_mut(i) else {
            warnings.push(format!("sentence {i} does not exist; ignored"));
            continue;
        };
        for raw in ids {
            let Some(text) = raw.as_str().map(str::trim) else {
                warnings.push(format!("sentence {i}: non-string id {raw} dropped"));
                continue;
            };
            if !valid.contains(text) {
                warnings.push(format!("sentence {i}: unknown id {text} dropped"));
            } else if !row.iter().any(|id| id.as_str() == text) {
                row.push(ShapeId::new(text).expect("valid ids are non-empty"));
            }
        }
    }
    let result = GroundingResult::new(valid_ids.to_vec(), rows).map_err(|e| ReplyError(e.to_string()))?;
    Ok(ParsedReply { result, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(n: usize) -> Vec<ShapeId> {
        (1..=n).map(ShapeId::element).collect()
    }

    fn rows(p: &ParsedReply) -> Vec<Vec<&str>> {
        p.result.groundings().iter().map(|r| r.iter().map(ShapeId::as_str).collect()).collect()
    }

    #[test]
    fn plain_mapping() {
        let p = parse_grounding_reply(r#"{"0":["s2","s4"],"1":["s3"]}"#, &ids(4), 2).unwrap();
        assert_eq!(rows(&p), vec![vec!["s2", "s4"], vec!["s3"]]);
        assert!(p.warnings.is_empty());
    }

    #[test]
    fn dedupe_and_drop() {
        let p = parse_grounding_reply(r#"{"0":["s2","s2","s9"]}"#, &ids(4), 1).unwrap();
        assert_eq!(rows(&p), vec![vec!["s2"]]);
        assert_eq!(p.warnings.len(), 1);
        assert!(p.warnings[0].contains("s9"));
    }

    #[test]
    fn missing_sentence_is_empty() {
        let p = parse_grounding_reply(r#"{"0":["s1"]}"#, &ids(2), 2).unwrap();
        assert_eq!(rows(&p), vec![vec!["s1"], vec![]]);
    }

    #[test]
    fn tolerated_shapes() {
        let fenced = "Here you go:\n```json\n{\"0\": [\"s1\"], \"1\": []}\n```\n";
        assert_eq!(rows(&parse_grounding_reply(fenced, &ids(2), 2).unwrap()), vec![vec!["s1"], vec![]]);

        let listed = r#"[{"index":1,"shape_ids":["s2"]},{"index":0,"shape_ids":["s1"]}]"#;
        assert_eq!(rows(&parse_grounding_reply(listed, &ids(2), 2).unwrap()), vec![vec!["s1"], vec!["s2"]]);

        let conduct = r#"{"0":{"shape_ids":["s2"],"commands":[]}}"#;
        assert_eq!(rows(&parse_grounding_reply(conduct, &ids(2), 1).unwrap()), vec![vec!["s2"]]);

        let wrapped = r#"{"groundings":{"0":["s1"]}}"#;
        assert_eq!(rows(&parse_grounding_reply(wrapped, &ids(2), 1).unwrap()), vec![vec!["s1"]]);
    }

    #[test]
    fn out_of_range_index_warns() {
        let p = parse_grounding_reply(r#"{"0":[],"5":["s1"]}"#, &ids(1), 1).unwrap();
        assert_eq!(rows(&p), vec![Vec::<&str>::new()]);
        assert_eq!(p.warnings.len(), 1);
    }

    #[test]
    fn malformed_replies_fail() {
        for bad in ["I cannot help with that.", "{\"0\": [\"s1\"", "{\"first\": [\"s1\"]}", "{\"0\": \"s1\"}", "42"] {
            assert!(parse_grounding_reply(bad, &ids(2), 1).is_err(), "{bad}");
        }
    }
}
