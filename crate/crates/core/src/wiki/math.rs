use std::borrow::Cow;

use quick_xml::escape::resolve_html5_entity;
use serde::{Deserialize, Serialize};

use super::{PageRecord, RawExpression};

/// Tally of `<math>` tags that produced no record.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Opening tags with no matching close before the next opening tag or the end of text.
    pub unterminated: usize,
    /// Self-closing tags and tags with only whitespace inside.
    pub empty: usize,
    /// Pages outside the main namespace.
    pub skipped_pages: usize,
}

impl Diagnostics {
    pub fn merge(&mut self, other: Diagnostics) {
        self.unterminated += other.unterminated;
        self.empty += other.empty;
        self.skipped_pages += other.skipped_pages;
    }
}

/// Decodes HTML entities, leaving unknown or unterminated ones verbatim.
pub fn decode_entities(text: &str) -> Cow<'_, str> {
    if !text.contains('&') {
        return Cow::Borrowed(text);
    }
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(amp) = rest.find('&') {
        out.push_str(&rest[..amp]);
        rest = &rest[amp..];
        let semi = rest[1..].find(';').map(|i| i + 1).filter(|&i| i <= 33);
        let resolved = semi.and_then(|i| {
            let name = &rest[1..i];
            let text: Option<String> = if let Some(num) = name.strip_prefix('#') {
                let code = match num.strip_prefix(['x', 'X']) {
                    Some(hex) => u32::from_str_radix(hex, 16).ok(),
                    None => num.parse().ok(),
                };
                code.and_then(char::from_u32).filter(|&c| c != '\0').map(String::from)
            } else {
                resolve_html5_entity(name).map(str::to_owned)
            };
            text.map(|t| (t, i + 1))
        });
        match resolved {
            Some((t, consumed)) => {
                out.push_str(&t);
                rest = &rest[consumed..];
            }
            None => {
                out.push('&');
                rest = &rest[1..];
            }
        }
    }
    out.push_str(rest);
    Cow::Owned(out)
}

/// Finds the next `<math` opening at or after `from`, case-insensitively.
fn find_open(text: &str, from: usize) -> Option<usize> {
    let bytes = text.as_bytes();
    let mut i = from;
    while i + 5 <= bytes.len() {
        let at = memchr_lt(bytes, i)?;
        if bytes.len() >= at + 5 && bytes[at + 1..at + 5].eq_ignore_ascii_case(b"math") {
            match bytes.get(at + 5) {
                Some(b'>' | b'/') => return Some(at),
                Some(c) if c.is_ascii_whitespace() => return Some(at),
                _ => {}
            }
        }
        i = at + 1;
    }
    None
}

/// Finds the next `</math>` at or after `from`; returns (start, end past `>`).
fn find_close(text: &str, from: usize) -> Option<(usize, usize)> {
    let bytes = text.as_bytes();
    let mut i = from;
    while let Some(at) = memchr_lt(bytes, i) {
        if bytes.len() >= at + 6 && bytes[at + 1..at + 6].eq_ignore_ascii_case(b"/math") {
            let mut j = at + 6;
            while bytes.get(j).is_some_and(u8::is_ascii_whitespace) {
                j += 1;
            }
            if bytes.get(j) == Some(&b'>') {
                return Some((at, j + 1));
            }
        }
        i = at + 1;
    }
    None
}

fn memchr_lt(bytes: &[u8], from: usize) -> Option<usize> {
    bytes.get(from..)?.iter().position(|&b| b == b'<').map(|p| p + from)
}

/// One record per well-formed `<math ...>...</math>` element of a main-namespace page.
pub fn extract_math(page: &PageRecord, diagnostics: &mut Diagnostics) -> Vec<RawExpression> {
    let mut out = Vec::new();
    if page.namespace != 0 {
        diagnostics.skipped_pages += 1;
        return out;
    }
    let text = page.text.as_str();
    let mut pos = 0;
    while let Some(open) = find_open(text, pos) {
        let Some(tag_end) = text[open..].find('>').map(|i| open + i) else {
            diagnostics.unterminated += 1;
            break;
        };
        if text.as_bytes()[tag_end - 1] == b'/' {
            diagnostics.empty += 1;
            pos = tag_end + 1;
            continue;
        }
        let body_start = tag_end + 1;
        let close = find_close(text, body_start);
        let next_open = find_open(text, body_start);
        match close {
            Some((close_start, close_end)) if next_open.is_none_or(|n| n > close_start) => {
                let inner = &text[body_start..close_start];
                if inner.trim().is_empty() {
                    diagnostics.empty += 1;
                } else {
                    out.push(RawExpression {
                        page_id: page.page_id,
                        page_title: page.title.clone(),
                        offset: open,
                        latex: decode_entities(inner).into_owned(),
                    });
                }
                pos = close_end;
            }
            _ => {
                diagnostics.unterminated += 1;
                pos = body_start;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn page(text: &str) -> PageRecord {
        PageRecord { page_id: 1, title: "T".into(), namespace: 0, text: text.into() }
    }

    fn latex(text: &str) -> (Vec<String>, Diagnostics) {
        let mut d = Diagnostics::default();
        let out = extract_math(&page(text), &mut d);
        (out.into_iter().map(|r| r.latex).collect(), d)
    }

    #[test]
    fn attributes_are_ignored() {
        let (l, _) = latex("a <math>x^2</math> b <math display=block>y</math>");
        assert_eq!(l, ["x^2", "y"]);
    }

    #[test]
    fn no_math() {
        assert!(latex("no math here").0.is_empty());
    }

    #[test]
    fn entities_decode() {
        assert_eq!(latex("<math>a &lt; b</math>").0, ["a < b"]);
        assert_eq!(latex("<math>a &amp; b &#x3C0; &nbsp;&bogus; &</math>").0, ["a & b π \u{a0}&bogus; &"]);
    }

    #[test]
    fn offsets_and_case() {
        let mut d = Diagnostics::default();
        let out = extract_math(&page("ab<MATH>x</Math >"), &mut d);
        assert_eq!(out[0].offset, 2);
        assert_eq!(out[0].latex, "x");
    }

    #[test]
    fn skipped_tags_are_tallied() {
        let (l, d) = latex("<math/> <math></math> <math>open <math>z</math> <math>tail");
        assert_eq!(l, ["z"]);
        assert_eq!(d.empty, 2);
        assert_eq!(d.unterminated, 2);
    }

    #[test]
    fn mathematics_word_is_not_a_tag() {
        assert!(latex("<mathematics>x</mathematics>").0.is_empty());
    }

    #[test]
    fn other_namespaces_are_skipped() {
        let mut p = page("<math>x</math>");
        p.namespace = 14;
        let mut d = Diagnostics::default();
        assert!(extract_math(&p, &mut d).is_empty());
        assert_eq!(d.skipped_pages, 1);
    }
}
