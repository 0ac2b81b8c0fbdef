//! Synthetic gaze sessions with a known fixation schedule.

use rand::Rng;
use rand_distr::{Distribution, Weibull};

use crate::data::TokenAlignment;
use crate::gaze::events::{FixationEvent, ScrollEvent, Session, Viewport};
use crate::traversal::TraversalParams;

/// A planned fixation on a 1-based (column, line) file cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduledFixation {
    pub t: f64,
    pub d: f64,
    pub column: usize,
    pub line: usize,
}

/// Renders a schedule to pixel fixations aimed at cell centres. The view
/// scrolls (whole lines) whenever a target line is off screen.
pub fn render_session(schedule: &[ScheduledFixation], vp: &Viewport) -> Session {
    let mut session = Session::default();
    let mut first = 1usize;
    session.scrolls.push(ScrollEvent {
        t: schedule.first().map_or(0.0, |f| f.t.min(0.0)),
        first_visible_line: first,
    });
    for f in schedule {
        if f.line < first || f.line >= first + vp.n_rows {
            first = f.line.saturating_sub(vp.n_rows / 2).max(1);
            session.scrolls.push(ScrollEvent {
                t: f.t,
                first_visible_line: first,
            });
        }
        session.fixations.push(FixationEvent {
            t: f.t,
            x: vp.x0 + (f.column as f64 - 0.5) * vp.cell_width(),
            y: vp.y0 + ((f.line - first) as f64 + 0.5) * vp.cell_height(),
            d: f.d,
        });
    }
    session
}

/// Viewport used for generated sessions: 120 x 25 cells of 8 x 16 px.
pub fn synth_viewport() -> Viewport {
    Viewport::new(40.0, 60.0, 960.0, 400.0, 120, 25).expect("fixed geometry is valid")
}

/// Random walk over the visible tokens of `a` following the traversal model,
/// rendered as a session. Returns the session and its schedule.
pub fn synth_session(
    seed: u64,
    a: &TokenAlignment,
    vp: &Viewport,
    n_fixations: usize,
    params: &TraversalParams,
) -> (Session, Vec<ScheduledFixation>) {
    let mut rng = crate::data::synth::rng(seed ^ 0x6A2E_5E55);
    // Tokens whose first character is a visible cell.
    let cells: Vec<(usize, usize)> = (0..a.n_tokens())
        .filter_map(|k| {
            let c = a.token_chars(k).start;
            let line = a.token_line(k);
            let l = &a.lines()[line];
            let col = c - l.chars.start + 1;
            (col <= l.visible_len && col <= vp.n_cols).then_some((col, line + 1))
        })
        .collect();
    let mut schedule = Vec::with_capacity(n_fixations);
    if cells.is_empty() {
        return (render_session(&schedule, vp), schedule);
    }
    let fwd = Weibull::new(params.forward_weibull.scale, params.forward_weibull.shape)
        .expect("validated params");
    let bwd = Weibull::new(params.backward_weibull.scale, params.backward_weibull.shape)
        .expect("validated params");
    let last = cells.len() - 1;
    let mut pos = 0usize;
    let mut t = 0.0f64;
    for _ in 0..n_fixations {
        let d = rng.random_range(150.0..400.0f64).round();
        let (column, line) = cells[pos];
        schedule.push(ScheduledFixation { t, d, column, line });
        t += d + rng.random_range(20.0..200.0f64).round();
        let u = if last == 0 { 0.0 } else { pos as f64 / last as f64 };
        let (pf, pb, _) = params.direction_masses(u);
        let r: f64 = rng.random();
        if r < pf && pos < last {
            let jump = (fwd.sample(&mut rng).ceil() as usize).max(1);
            pos = (pos + jump).min(last);
        } else if r < pf + pb && pos > 0 {
            let jump = (bwd.sample(&mut rng).ceil() as usize).max(1);
            pos = pos.saturating_sub(jump);
        }
    }
    (render_session(&schedule, vp), schedule)
}
