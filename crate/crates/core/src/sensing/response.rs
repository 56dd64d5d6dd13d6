//! Tolerant extraction of the flag object from free-form model output.
//!
//! Models wrap the requested object in prose, use single quotes, or capitalize
//! booleans. The parser takes the first balanced `{...}` block (ignoring braces
//! inside quoted strings), reads `key: value` pairs with either quote style, and
//! accepts `true`/`false` in any casing, bare or quoted.

use super::{Flags, SensingError, SensorReport, FLAG_KEYS, NUM_FLAGS};

/// Key order of the JSON object the prompt asks for.
const PROMPT_KEY_ORDER: [usize; NUM_FLAGS] = [1, 2, 3, 4, 5, 0];

#[derive(Debug, Clone, PartialEq)]
enum Value {
    Text(String),
    Nested,
}

pub fn parse_response(raw: &str) -> Result<SensorReport, SensingError> {
    let block = first_object(raw).ok_or(SensingError::NoJsonFound)?;
    let pairs = object_pairs(block);
    let mut flags: Flags = [false; NUM_FLAGS];
    for (slot, key) in FLAG_KEYS.iter().enumerate() {
        let value = pairs
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v)
            .ok_or_else(|| SensingError::MissingField((*key).to_string()))?;
        flags[slot] = match value {
            Value::Text(t) if t.eq_ignore_ascii_case("true") => true,
            Value::Text(t) if t.eq_ignore_ascii_case("false") => false,
            _ => return Err(SensingError::NonBooleanValue((*key).to_string())),
        };
    }
    Ok(SensorReport::from_flags(flags, raw))
}

/// Renders flags as the JSON object the prompt asks for, in the prompt's key order.
pub fn report_json(flags: &Flags) -> String {
    let body: Vec<String> = PROMPT_KEY_ORDER.iter().map(|&j| format!("\"{}\": {}", FLAG_KEYS[j], flags[j])).collect();
    format!("{{{}}}", body.join(", "))
}

/// Interior of the first balanced brace block, or `None` if there is none.
fn first_object(raw: &str) -> Option<&str> {
    let start = raw.find('{')?;
    let mut depth = 0usize;
    let mut quote: Option<char> = None;
    let mut escaped = false;
    for (offset, c) in raw[start..].char_indices() {
        if let Some(q) = quote {
            if escaped {
                escaped = false;
            } else if c == '\\' {
                escaped = true;
            } else if c == q {
                quote = None;
            }
            continue;
        }
        match c {
            '"' | '\'' => quote = Some(c),
            '{' => depth += 1,
            '}' => {
                depth -= 1;
                if depth == 0 {
                    return Some(&raw[start + 1..start + offset]);
                }
            }
            _ => {}
        }
    }
    None
}

struct Cursor {
    chars: Vec<char>,
    pos: usize,
}

impl Cursor {
    fn new(src: &str) -> Self {
        Self { chars: src.chars().collect(), pos: 0 }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn skip_ws(&mut self) {
        while self.peek().is_some_and(char::is_whitespace) {
            self.pos += 1;
        }
    }

    fn quoted(&mut self, q: char) -> String {
        self.pos += 1;
        let mut out = String::new();
        while let Some(c) = self.peek() {
            self.pos += 1;
            match c {
                '\\' => {
                    if let Some(next) = self.peek() {
                        out.push(next);
                        self.pos += 1;
                    }
                }
                c if c == q => break,
                c => out.push(c),
            }
        }
        out
    }

    /// Skips a nested `{...}` or `[...]` value, honoring quotes.
    fn skip_nested(&mut self) {
        let mut depth = 0usize;
        while let Some(c) = self.peek() {
            match c {
                '"' | '\'' => {
                    self.quoted(c);
                    continue;
                }
                '{' | '[' => depth += 1,
                '}' | ']' => {
                    depth = depth.saturating_sub(1);
                    if depth == 0 {
                        self.pos += 1;
                        return;
                    }
                }
                _ => {}
            }
            self.pos += 1;
        }
    }

    fn bare(&mut self, stop: impl Fn(char) -> bool) -> String {
        let start = self.pos;
        while self.peek().is_some_and(|c| !stop(c)) {
            self.pos += 1;
        }
        self.chars[start..self.pos].iter().collect::<String>().trim().to_string()
    }

    fn skip_past_comma(&mut self) {
        while let Some(c) = self.peek() {
            self.pos += 1;
            if c == ',' {
                return;
            }
        }
    }
}

/// `key: value` pairs of an object interior; malformed stretches are skipped.
fn object_pairs(body: &str) -> Vec<(String, Value)> {
    let mut cur = Cursor::new(body);
    let mut pairs = Vec::new();
    loop {
        cur.skip_ws();
        while cur.peek() == Some(',') {
            cur.pos += 1;
            cur.skip_ws();
        }
        let Some(c) = cur.peek() else { break };
        let key = match c {
            '"' | '\'' => cur.quoted(c),
            _ => cur.bare(|c| c == ':' || c == ',' || c.is_whitespace()),
        };
        cur.skip_ws();
        if key.is_empty() || cur.peek() != Some(':') {
            cur.skip_past_comma();
            continue;
        }
        cur.pos += 1;
        cur.skip_ws();
        let value = match cur.peek() {
            Some(q @ ('"' | '\'')) => Value::Text(cur.quoted(q).trim().to_string()),
            Some('{' | '[') => {
                cur.skip_nested();
                Value::Nested
            }
            _ => Value::Text(cur.bare(|c| c == ',')),
        };
        pairs.push((key, value));
        cur.skip_past_comma();
    }
    pairs
}
