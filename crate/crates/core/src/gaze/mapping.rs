//! Screen fixations → file characters → visible tokens.

use std::collections::BTreeSet;

use crate::data::{TokenAlignment, VisualAttention};
use crate::error::{Error, Result};
use crate::gaze::events::{CharEvent, FixationEvent, ScrollEvent, TokenEvent, Viewport};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct MappedFixations {
    pub events: Vec<CharEvent>,
    /// Fixations outside the code area or with non-positive duration.
    pub dropped: usize,
}

/// Converts pixel fixations to 1-based (column, line) file positions.
///
/// The grid is monospace and scrolling moves whole lines, so the file line is
/// the top visible line at the fixation's time plus the screen row offset.
pub fn map_fixations(
    events: &[FixationEvent],
    scrolls: &[ScrollEvent],
    vp: &Viewport,
) -> Result<MappedFixations> {
    vp.validate()?;
    if scrolls.windows(2).any(|w| w[1].t < w[0].t) {
        return Err(Error::InvalidParameter("scroll events are not sorted by time".into()));
    }
    let (cw, ch) = (vp.cell_width(), vp.cell_height());
    let mut out = Vec::with_capacity(events.len());
    let mut dropped = 0;
    for e in events {
        let inside = e.x >= vp.x0
            && e.x < vp.x0 + vp.width
            && e.y >= vp.y0
            && e.y < vp.y0 + vp.height;
        if !inside || !(e.d > 0.0) {
            dropped += 1;
            continue;
        }
        let k = scrolls.partition_point(|s| s.t <= e.t);
        if k == 0 {
            return Err(Error::MissingScrollState(e.t));
        }
        let first = scrolls[k - 1].first_visible_line;
        let column = (((e.x - vp.x0) / cw).floor() as usize).min(vp.n_cols - 1) + 1;
        let row = (((e.y - vp.y0) / ch).floor() as usize).min(vp.n_rows - 1) + 1;
        out.push(CharEvent {
            t: e.t,
            column,
            line: first + row - 1,
            d: e.d,
        });
    }
    Ok(MappedFixations {
        events: out,
        dropped,
    })
}

/// Replaces each event by events on every character within `h_off` columns and
/// `v_off` lines, keeping time and duration. Cells past a line's end or outside
/// the file are dropped.
pub fn parafoveal_augment(events: &[CharEvent], vp: &Viewport, a: &TokenAlignment) -> Vec<CharEvent> {
    let lines = a.lines();
    let mut out = Vec::with_capacity(events.len() * (2 * vp.v_off + 1) * (2 * vp.h_off + 1));
    for e in events {
        let l_lo = e.line.saturating_sub(vp.v_off).max(1);
        let l_hi = (e.line + vp.v_off).min(lines.len());
        for line in l_lo..=l_hi {
            let visible = lines[line - 1].visible_len;
            let c_lo = e.column.saturating_sub(vp.h_off).max(1);
            let c_hi = (e.column + vp.h_off).min(visible);
            for column in c_lo..=c_hi {
                out.push(CharEvent { column, line, ..*e });
            }
        }
    }
    out
}

/// Seconds each character was visible. Returns the vector and the number of
/// events that fell outside the prompt.
pub fn dwell_vector<T: Scalar>(events: &[CharEvent], a: &TokenAlignment) -> (VisualAttention<T>, usize) {
    let mut out = vec![0.0f64; a.n_chars()];
    let mut dropped = 0;
    for e in events {
        match a.char_at(e.column, e.line) {
            Some(c) => out[c] += e.d / 1000.0,
            None => dropped += 1,
        }
    }
    let v = VisualAttention::new(out.into_iter().map(T::of).collect())
        .expect("durations are positive");
    (v, dropped)
}

/// One event per (fixation time, token) with at least one visible character.
/// Output is sorted by time, then token index; times are converted to seconds.
pub fn token_events(events: &[CharEvent], a: &TokenAlignment) -> Vec<TokenEvent> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for e in events {
        let Some(c) = a.char_at(e.column, e.line) else {
            continue;
        };
        let token = a.token_of_char(c);
        if seen.insert((e.t.to_bits(), token)) {
            out.push(TokenEvent {
                t: e.t / 1000.0,
                token,
                d: e.d / 1000.0,
            });
        }
    }
    out.sort_by(|x, y| x.t.total_cmp(&y.t).then(x.token.cmp(&y.token)));
    out
}

/// Total visible seconds per token, used as the row weight when scoring.
pub fn token_dwell(events: &[TokenEvent], n_tokens: usize) -> Vec<f64> {
    let mut out = vec![0.0; n_tokens];
    for e in events {
        out[e.token] += e.d;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::TokenSpan;

    fn vp() -> Viewport {
        Viewport::new(100.0, 50.0, 800.0, 400.0, 80, 20).unwrap()
    }

    fn long_lines(n_lines: usize, width: usize) -> TokenAlignment {
        let mut prompt = String::new();
        let mut spans = Vec::new();
        for l in 0..n_lines {
            let start = prompt.len();
            prompt.push_str(&"x".repeat(width));
            if l + 1 < n_lines {
                prompt.push('\n');
            }
            spans.push(TokenSpan { id: 0, start, end: prompt.len() });
        }
        TokenAlignment::new(prompt, spans).unwrap()
    }

    fn scroll(t: f64, line: usize) -> ScrollEvent {
        ScrollEvent { t, first_visible_line: line }
    }

    #[test]
    fn origin_cell_maps_to_first_visible_line() {
        let fix = [FixationEvent { t: 5.0, x: 100.0, y: 50.0, d: 200.0 }];
        let m = map_fixations(&fix, &[scroll(0.0, 10)], &vp()).unwrap();
        assert_eq!((m.events[0].column, m.events[0].line), (1, 10));
        assert_eq!(m.dropped, 0);
    }

    #[test]
    fn left_of_area_is_dropped() {
        let fix = [FixationEvent { t: 5.0, x: 99.0, y: 60.0, d: 200.0 }];
        let m = map_fixations(&fix, &[scroll(0.0, 1)], &vp()).unwrap();
        assert!(m.events.is_empty());
        assert_eq!(m.dropped, 1);
    }

    #[test]
    fn scroll_state_follows_time() {
        let fix = [
            FixationEvent { t: 5.0, x: 125.0, y: 75.0, d: 100.0 },
            FixationEvent { t: 50.0, x: 125.0, y: 75.0, d: 100.0 },
        ];
        let m = map_fixations(&fix, &[scroll(0.0, 1), scroll(20.0, 7)], &vp()).unwrap();
        assert_eq!((m.events[0].column, m.events[0].line), (3, 2));
        assert_eq!(m.events[1].line, 8);
    }

    #[test]
    fn missing_scroll_rejects_session() {
        let fix = [FixationEvent { t: 5.0, x: 125.0, y: 75.0, d: 100.0 }];
        let err = map_fixations(&fix, &[scroll(10.0, 1)], &vp()).unwrap_err();
        assert!(matches!(err, Error::MissingScrollState(_)));
    }

    #[test]
    fn augmentation_counts_and_clipping() {
        let a = long_lines(5, 40);
        let ev = CharEvent { t: 0.0, column: 20, line: 3, d: 100.0 };
        assert_eq!(parafoveal_augment(&[ev], &vp(), &a).len(), 27);
        let top = CharEvent { line: 1, ..ev };
        let out = parafoveal_augment(&[top], &vp(), &a);
        assert_eq!(out.len(), 18);
        assert!(out.iter().all(|e| e.line >= 1));
        let edge = CharEvent { column: 39, ..ev };
        let out = parafoveal_augment(&[edge], &vp(), &a);
        assert!(out.iter().all(|e| e.column <= 40));
        assert_eq!(out.len(), 3 * 6);
    }

    #[test]
    fn dwell_single_and_additive() {
        let a = long_lines(2, 10);
        let e = CharEvent { t: 0.0, column: 3, line: 2, d: 500.0 };
        let (v, dropped) = dwell_vector::<f64>(&[e], &a);
        assert_eq!(dropped, 0);
        let c = a.char_at(3, 2).unwrap();
        assert_eq!(v.values()[c], 0.5);
        assert_eq!(v.total(), 0.5);
        let two = [CharEvent { d: 200.0, ..e }, CharEvent { t: 900.0, d: 300.0, ..e }];
        assert_eq!(dwell_vector::<f64>(&two, &a).0.values()[c], 0.5);
        let outside = CharEvent { column: 11, ..e };
        assert_eq!(dwell_vector::<f64>(&[outside], &a).1, 1);
    }

    #[test]
    fn token_events_dedup_and_split() {
        let a = TokenAlignment::new(
            "abcdefgh".into(),
            vec![
                TokenSpan { id: 0, start: 0, end: 4 },
                TokenSpan { id: 1, start: 4, end: 8 },
            ],
        )
        .unwrap();
        let base = CharEvent { t: 1000.0, column: 1, line: 1, d: 250.0 };
        let within: Vec<_> = (1..=4).map(|c| CharEvent { column: c, ..base }).collect();
        let ev = token_events(&within, &a);
        assert_eq!(ev, vec![TokenEvent { t: 1.0, token: 0, d: 0.25 }]);
        let across: Vec<_> = (3..=6).map(|c| CharEvent { column: c, ..base }).collect();
        let ev = token_events(&across, &a);
        assert_eq!(ev.len(), 2);
        assert_eq!((ev[0].token, ev[1].token), (0, 1));
        assert_eq!(ev[0].t, ev[1].t);
    }
}
