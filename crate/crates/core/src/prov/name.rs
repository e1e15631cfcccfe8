use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// A `prefix:local` identifier.
///
/// The local part is stored in escaped form: any byte outside
/// `[A-Za-z0-9_.:-]` is written as `%XX` (uppercase hex, UTF-8 bytes).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct QualifiedName {
    text: String,
    colon: usize,
}

fn is_local_char(b: u8) -> bool {
    b.is_ascii_alphanumeric() || matches!(b, b'_' | b'.' | b':' | b'-')
}

/// Characters safe in a single path segment on every platform we care about.
pub(crate) fn is_file_char(b: u8) -> bool {
    b.is_ascii_alphanumeric() || matches!(b, b'_' | b'.' | b'-')
}

pub(crate) fn percent_escape(raw: &str, keep: fn(u8) -> bool) -> String {
    let mut out = String::with_capacity(raw.len());
    for &b in raw.as_bytes() {
        if keep(b) {
            out.push(b as char);
        } else {
            out.push_str(&format!("%{b:02X}"));
        }
    }
    out
}

pub(crate) fn percent_unescape(escaped: &str) -> String {
    let bytes = escaped.as_bytes();
    let mut out = Vec::with_capacity(bytes.len());
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'%' && i + 2 < bytes.len() {
            let hex = |c: u8| (c as char).to_digit(16);
            if let (Some(hi), Some(lo)) = (hex(bytes[i + 1]), hex(bytes[i + 2])) {
                out.push((hi * 16 + lo) as u8);
                i += 3;
                continue;
            }
        }
        out.push(bytes[i]);
        i += 1;
    }
    String::from_utf8_lossy(&out).into_owned()
}

pub(crate) fn is_valid_prefix(prefix: &str) -> bool {
    let mut chars = prefix.bytes();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == b'_')
}

fn is_valid_escaped_local(local: &str) -> bool {
    let bytes = local.as_bytes();
    if bytes.is_empty() {
        return false;
    }
    let mut i = 0;
    while i < bytes.len() {
        let b = bytes[i];
        if b == b'%' {
            let ok = bytes.get(i + 1).is_some_and(|c| c.is_ascii_hexdigit())
                && bytes.get(i + 2).is_some_and(|c| c.is_ascii_hexdigit());
            if !ok {
                return false;
            }
            i += 3;
        } else if is_local_char(b) {
            i += 1;
        } else {
            return false;
        }
    }
    true
}

impl QualifiedName {
    /// Build from a prefix and a raw (unescaped) local name.
    pub fn new(prefix: &str, local: &str) -> Result<Self> {
        if !is_valid_prefix(prefix) {
            return Err(Error::invalid(format!("invalid namespace prefix `{prefix}`")));
        }
        if local.is_empty() {
            return Err(Error::invalid("empty local name"));
        }
        let escaped = percent_escape(local, is_local_char);
        Ok(Self {
            text: format!("{prefix}:{escaped}"),
            colon: prefix.len(),
        })
    }

    /// Parse the rendered `prefix:local` form. The local part must already be escaped.
    pub fn parse(text: &str) -> Result<Self> {
        let colon = text
            .find(':')
            .ok_or_else(|| Error::invalid(format!("`{text}` is not a qualified name")))?;
        let (prefix, local) = (&text[..colon], &text[colon + 1..]);
        if !is_valid_prefix(prefix) || !is_valid_escaped_local(local) {
            return Err(Error::invalid(format!("`{text}` is not a qualified name")));
        }
        Ok(Self {
            text: text.to_owned(),
            colon,
        })
    }

    pub fn prefix(&self) -> &str {
        &self.text[..self.colon]
    }

    /// Escaped local part.
    pub fn local(&self) -> &str {
        &self.text[self.colon + 1..]
    }

    pub fn unescaped_local(&self) -> String {
        percent_unescape(self.local())
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }

    /// Same local part under another prefix.
    pub fn with_prefix(&self, prefix: &str) -> Result<Self> {
        if !is_valid_prefix(prefix) {
            return Err(Error::invalid(format!("invalid namespace prefix `{prefix}`")));
        }
        Ok(Self {
            text: format!("{prefix}:{}", self.local()),
            colon: prefix.len(),
        })
    }
}

impl fmt::Display for QualifiedName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

impl FromStr for QualifiedName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s)
    }
}
