//! Minimal SVG rendering of a backtest: cumulative PnL line over shaded
//! active intervals. No plotting dependency; output is deterministic.

use crate::backtest::StepRecord;

const WIDTH: f64 = 960.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 46.0;

fn fmt(v: f64) -> String {
    format!("{v:.3}")
}

/// Renders the cumulative PnL curve; steps holding a position are shaded.
pub fn render_cumulative_pnl(records: &[StepRecord]) -> String {
    let n = records.len();
    let mut cumulative = Vec::with_capacity(n);
    let mut acc = 0.0;
    for r in records {
        acc += r.pnl;
        cumulative.push(acc);
    }
    let low = cumulative.iter().cloned().fold(0.0f64, f64::min);
    let high = cumulative.iter().cloned().fold(0.0f64, f64::max);
    let span = (high - low).max(1e-12);

    let x = |i: usize| MARGIN + (WIDTH - 2.0 * MARGIN) * i as f64 / (n.max(2) - 1) as f64;
    let y = |v: f64| HEIGHT - MARGIN - (HEIGHT - 2.0 * MARGIN) * (v - low) / span;

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");

    // shaded runs of active (position-holding) steps
    let mut run_start: Option<usize> = None;
    for i in 0..=n {
        let active = i < n && records[i].position != 0.0;
        match (run_start, active) {
            (None, true) => run_start = Some(i),
            (Some(s), false) => {
                let x0 = x(s);
                let x1 = x(i.saturating_sub(1).max(s));
                svg.push_str(&format!(
                    "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" \
                     fill=\"#d62728\" opacity=\"0.18\"/>\n",
                    fmt(x0),
                    fmt(MARGIN),
                    fmt((x1 - x0).max(0.8)),
                    fmt(HEIGHT - 2.0 * MARGIN)
                ));
                run_start = None;
            }
            _ => {}
        }
    }

    // zero line
    if low < 0.0 && high > 0.0 {
        svg.push_str(&format!(
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#999999\" \
             stroke-dasharray=\"4 3\"/>\n",
            fmt(MARGIN),
            fmt(y(0.0)),
            fmt(WIDTH - MARGIN),
            fmt(y(0.0))
        ));
    }

    // cumulative PnL path
    let mut path = String::from("M");
    for (i, v) in cumulative.iter().enumerate() {
        path.push_str(&format!(" {} {}", fmt(x(i)), fmt(y(*v))));
    }
    svg.push_str(&format!(
        "<path d=\"{path}\" fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\"/>\n"
    ));

    // frame and labels
    svg.push_str(&format!(
        "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#333333\"/>\n",
        fmt(MARGIN),
        fmt(MARGIN),
        fmt(WIDTH - 2.0 * MARGIN),
        fmt(HEIGHT - 2.0 * MARGIN)
    ));
    let label = |sx: f64, sy: f64, anchor: &str, text: String| {
        format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" \
             text-anchor=\"{anchor}\" fill=\"#333333\">{text}</text>\n",
            fmt(sx),
            fmt(sy)
        )
    };
    if let (Some(first), Some(last)) = (records.first(), records.last()) {
        svg.push_str(&label(
            MARGIN,
            HEIGHT - MARGIN + 16.0,
            "start",
            first.date.to_string(),
        ));
        svg.push_str(&label(
            WIDTH - MARGIN,
            HEIGHT - MARGIN + 16.0,
            "end",
            last.date.to_string(),
        ));
    }
    svg.push_str(&label(MARGIN - 6.0, y(high) + 4.0, "end", format!("{high:.2}")));
    svg.push_str(&label(MARGIN - 6.0, y(low) + 4.0, "end", format!("{low:.2}")));
    svg.push_str(&label(
        WIDTH / 2.0,
        MARGIN - 12.0,
        "middle",
        "cumulative PnL (shaded: position held)".to_string(),
    ));
    svg.push_str("</svg>\n");
    svg
}
