//! Prompt text with per-token byte spans and the derived line structure.
//!
//! Offsets in spans are byte offsets into the UTF-8 prompt. Character-level
//! vectors (visual attention, dwell) are indexed by Unicode scalar position.
//! A token owns the characters whose first byte falls inside its span; a token
//! that only holds continuation bytes of a multi-byte character owns that
//! character instead.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenSpan {
    pub id: u32,
    pub start: usize,
    pub end: usize,
}

/// One prompt line: its characters including the terminating newline, if any.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Line {
    pub chars: Range<usize>,
    /// Columns a reader can see: the line minus its `\n` / `\r\n` terminator.
    pub visible_len: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenAlignment {
    prompt: String,
    tokens: Vec<TokenSpan>,
    char_starts: Vec<usize>,
    token_chars: Vec<Range<usize>>,
    token_of_char: Vec<usize>,
    token_line: Vec<usize>,
    lines: Vec<Line>,
}

#[derive(Serialize, Deserialize)]
struct AlignmentFile {
    prompt: String,
    tokens: Vec<TokenSpan>,
}

impl TokenAlignment {
    /// Validates the spans against the prompt and derives the line map.
    pub fn new(prompt: String, tokens: Vec<TokenSpan>) -> Result<Self> {
        let len = prompt.len();
        if tokens.is_empty() {
            return Err(Error::Empty("alignment has no tokens"));
        }
        let mut cursor = 0usize;
        for span in &tokens {
            if span.end > len {
                return Err(Error::SpanBeyondEnd {
                    start: span.start,
                    end: span.end,
                    len,
                });
            }
            if span.end <= span.start {
                return Err(Error::InvalidSpan {
                    start: span.start,
                    end: span.end,
                    reason: "span is empty",
                });
            }
            if span.start > cursor {
                return Err(Error::SpanGap(cursor));
            }
            if span.start < cursor {
                return Err(Error::SpanOverlap(span.start));
            }
            cursor = span.end;
        }
        if cursor < len {
            return Err(Error::SpanGap(cursor));
        }

        let char_starts: Vec<usize> = prompt.char_indices().map(|(b, _)| b).collect();
        let n_chars = char_starts.len();
        // Char containing a byte offset.
        let char_at_byte = |b: usize| char_starts.partition_point(|&s| s <= b) - 1;

        let mut token_chars = Vec::with_capacity(tokens.len());
        let mut token_of_char = vec![usize::MAX; n_chars];
        for (k, span) in tokens.iter().enumerate() {
            let lo = char_starts.partition_point(|&s| s < span.start);
            let hi = char_starts.partition_point(|&s| s < span.end);
            let range = if lo < hi {
                lo..hi
            } else {
                let c = char_at_byte(span.start);
                c..c + 1
            };
            for c in lo..hi {
                token_of_char[c] = k;
            }
            token_chars.push(range);
        }

        let mut lines = Vec::new();
        let mut line_start = 0usize;
        let chars: Vec<char> = prompt.chars().collect();
        for (c, &ch) in chars.iter().enumerate() {
            if ch == '\n' {
                let mut visible = c - line_start;
                if visible > 0 && chars[c - 1] == '\r' {
                    visible -= 1;
                }
                lines.push(Line {
                    chars: line_start..c + 1,
                    visible_len: visible,
                });
                line_start = c + 1;
            }
        }
        if line_start < n_chars || lines.is_empty() {
            lines.push(Line {
                chars: line_start..n_chars,
                visible_len: n_chars - line_start,
            });
        }
        let token_line = tokens
            .iter()
            .map(|span| {
                let c = char_at_byte(span.start);
                lines.partition_point(|l| l.chars.end <= c)
            })
            .collect();

        Ok(Self {
            prompt,
            tokens,
            char_starts,
            token_chars,
            token_of_char,
            token_line,
            lines,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: AlignmentFile =
            serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        Self::new(file.prompt, file.tokens)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&AlignmentFile {
            prompt: self.prompt.clone(),
            tokens: self.tokens.clone(),
        })
        .expect("alignment serializes")
    }

    pub fn prompt(&self) -> &str {
        &self.prompt
    }

    pub fn tokens(&self) -> &[TokenSpan] {
        &self.tokens
    }

    /// Token count `n`.
    pub fn n_tokens(&self) -> usize {
        self.tokens.len()
    }

    /// Line count `n_l`.
    pub fn n_lines(&self) -> usize {
        self.lines.len()
    }

    /// Character count `c`.
    pub fn n_chars(&self) -> usize {
        self.char_starts.len()
    }

    pub fn lines(&self) -> &[Line] {
        &self.lines
    }

    /// 0-based line of each token (the line holding its first byte).
    pub fn token_lines(&self) -> &[usize] {
        &self.token_line
    }

    pub fn token_line(&self, token: usize) -> usize {
        self.token_line[token]
    }

    /// Characters a token's weight is shared over; never empty.
    pub fn token_chars(&self, token: usize) -> Range<usize> {
        self.token_chars[token].clone()
    }

    /// Token owning a character.
    pub fn token_of_char(&self, ch: usize) -> usize {
        self.token_of_char[ch]
    }

    pub fn char_byte_offset(&self, ch: usize) -> usize {
        self.char_starts[ch]
    }

    /// Character at a 1-based (column, line) editor position, if that cell holds
    /// a visible character of the prompt.
    pub fn char_at(&self, column: usize, line: usize) -> Option<usize> {
        if column == 0 || line == 0 {
            return None;
        }
        let l = self.lines.get(line - 1)?;
        (column <= l.visible_len).then(|| l.chars.start + column - 1)
    }

    /// Text of one token.
    pub fn token_text(&self, token: usize) -> &str {
        let s = self.tokens[token];
        self.prompt.get(s.start..s.end).unwrap_or("")
    }
}
