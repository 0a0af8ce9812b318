use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParseStatus {
    Matched,
    Fallback,
}

/// Lowercase, every non-alphanumeric run collapsed to one space, padded
/// with a space on both ends so that `" word "` searches respect word
/// boundaries.
fn normalize(text: &str) -> String {
    let mut out = String::with_capacity(text.len() + 2);
    out.push(' ');
    for ch in text.chars().flat_map(char::to_lowercase) {
        if ch.is_alphanumeric() {
            out.push(ch);
        } else if !out.ends_with(' ') {
            out.push(' ');
        }
    }
    if !out.ends_with(' ') {
        out.push(' ');
    }
    out
}

/// Earliest class mention in `hay`; the longest class wins among mentions
/// starting at the same place.
fn first_mention<'a>(hay: &str, classes: &'a [String]) -> Option<&'a str> {
    let mut best: Option<(usize, usize, &'a str)> = None;
    for class in classes {
        let needle = normalize(class);
        if needle.trim().is_empty() {
            continue;
        }
        if let Some(pos) = hay.find(&needle) {
            let better = match best {
                None => true,
                Some((bp, blen, _)) => pos < bp || (pos == bp && needle.len() > blen),
            };
            if better {
                best = Some((pos, needle.len(), class.as_str()));
            }
        }
    }
    best.map(|(_, _, c)| c)
}

/// Maps a completion onto one of `classes`.
///
/// Looks after the last "classified as" first, then the whole completion,
/// then gives up and returns `fallback`.
pub fn parse_label(completion: &str, classes: &[String], fallback: &str) -> (String, ParseStatus) {
    let norm = normalize(completion);
    if let Some(pos) = norm.rfind(" classified as ") {
        let tail = &norm[pos + " classified as".len()..];
        if let Some(c) = first_mention(tail, classes) {
            return (c.to_string(), ParseStatus::Matched);
        }
    }
    if let Some(c) = first_mention(&norm, classes) {
        return (c.to_string(), ParseStatus::Matched);
    }
    (fallback.to_string(), ParseStatus::Fallback)
}
