//! Eye-tracking session records and viewport geometry.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Raw fixation: timestamp and duration in milliseconds, position in screen pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixationEvent {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub d: f64,
}

/// Editor scroll: from `t` (ms) on, file line `first_visible_line` (1-based) is the top row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScrollEvent {
    pub t: f64,
    pub first_visible_line: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Viewport {
    pub x0: f64,
    pub y0: f64,
    pub width: f64,
    pub height: f64,
    pub n_cols: usize,
    pub n_rows: usize,
    #[serde(default = "default_v_off")]
    pub v_off: usize,
    #[serde(default = "default_h_off")]
    pub h_off: usize,
}

fn default_v_off() -> usize {
    1
}

fn default_h_off() -> usize {
    4
}

impl Viewport {
    pub fn new(x0: f64, y0: f64, width: f64, height: f64, n_cols: usize, n_rows: usize) -> Result<Self> {
        let vp = Self {
            x0,
            y0,
            width,
            height,
            n_cols,
            n_rows,
            v_off: default_v_off(),
            h_off: default_h_off(),
        };
        vp.validate()?;
        Ok(vp)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.width > 0.0 && self.height > 0.0) || self.n_cols == 0 || self.n_rows == 0 {
            return Err(Error::InvalidParameter(format!(
                "viewport needs positive size and grid, got {}x{} px over {}x{} cells",
                self.width, self.height, self.n_cols, self.n_rows
            )));
        }
        Ok(())
    }

    pub fn cell_width(&self) -> f64 {
        self.width / self.n_cols as f64
    }

    pub fn cell_height(&self) -> f64 {
        self.height / self.n_rows as f64
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let vp: Viewport = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        vp.validate()?;
        Ok(vp)
    }
}

/// Fixation in file coordinates: 1-based `column` and `line`, times in ms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CharEvent {
    pub t: f64,
    pub column: usize,
    pub line: usize,
    pub d: f64,
}

/// A token visible during a fixation; times in seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TokenEvent {
    pub t: f64,
    pub token: usize,
    pub d: f64,
}

impl TokenEvent {
    pub fn end(&self) -> f64 {
        self.t + self.d
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum Record {
    Fix {
        t: f64,
        x: f64,
        y: f64,
        d: f64,
    },
    Scroll {
        t: f64,
        first_visible_line: usize,
    },
}

/// One recorded session, both streams sorted by time.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Session {
    pub fixations: Vec<FixationEvent>,
    pub scrolls: Vec<ScrollEvent>,
}

impl Session {
    /// Parses JSON lines; blank lines are skipped and both streams are sorted by `t`.
    pub fn from_jsonl(text: &str) -> Result<Self> {
        let mut s = Session::default();
        for (k, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let rec: Record = serde_json::from_str(line)
                .map_err(|e| Error::Parse(format!("session line {}: {e}", k + 1)))?;
            match rec {
                Record::Fix { t, x, y, d } => s.fixations.push(FixationEvent { t, x, y, d }),
                Record::Scroll {
                    t,
                    first_visible_line,
                } => {
                    if first_visible_line == 0 {
                        return Err(Error::Parse(format!(
                            "session line {}: first_visible_line is 1-based",
                            k + 1
                        )));
                    }
                    s.scrolls.push(ScrollEvent {
                        t,
                        first_visible_line,
                    })
                }
            }
        }
        s.fixations.sort_by(|a, b| a.t.total_cmp(&b.t));
        s.scrolls.sort_by(|a, b| a.t.total_cmp(&b.t));
        Ok(s)
    }

    /// Serializes scrolls and fixations interleaved by time (scrolls first on ties).
    pub fn to_jsonl(&self) -> String {
        let mut records: Vec<(f64, u8, Record)> = self
            .scrolls
            .iter()
            .map(|s| {
                (
                    s.t,
                    0,
                    Record::Scroll {
                        t: s.t,
                        first_visible_line: s.first_visible_line,
                    },
                )
            })
            .chain(self.fixations.iter().map(|f| {
                (
                    f.t,
                    1,
                    Record::Fix {
                        t: f.t,
                        x: f.x,
                        y: f.y,
                        d: f.d,
                    },
                )
            }))
            .collect();
        records.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut out = String::new();
        for (_, _, r) in records {
            out.push_str(&serde_json::to_string(&r).expect("record serializes"));
            out.push('\n');
        }
        out
    }
}
