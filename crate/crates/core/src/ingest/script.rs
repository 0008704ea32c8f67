//! Narration script segmentation.

use crate::model::ScriptSentence;

/// Splits speaker notes into sentences.
///
/// A sentence ends at a newline, or at a period followed by whitespace or
/// the end of the text. The period stays with its sentence. A period between
/// two digits never ends a sentence.
pub fn segment_script(notes: &str) -> Vec<ScriptSentence> {
    let chars: Vec<char> = notes.chars().collect();
    let mut pieces: Vec<String> = Vec::new();
    let mut current = String::new();
    for (k, &c) in chars.iter().enumerate() {
        if c == '\n' || c == '\r' {
            pieces.push(std::mem::take(&mut current));
            continue;
        }
        current.push(c);
        if c == '.' {
            let prev = k.checked_sub(1).map(|p| chars[p]);
            let next = chars.get(k + 1).copied();
            let decimal = prev.is_some_and(|p| p.is_ascii_digit()) && next.is_some_and(|n| n.is_ascii_digit());
            let boundary = next.is_none_or(char::is_whitespace);
            if boundary && !decimal {
                pieces.push(std::mem::take(&mut current));
            }
        }
    }
    pieces.push(current);
    pieces
        .into_iter()
        .map(|p| p.trim().to_string())
        .filter(|p| !p.is_empty())
        .enumerate()
        .map(|(index, text)| ScriptSentence { index, text })
        .collect()
}
