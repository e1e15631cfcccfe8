use std::fmt::Write;

use crate::logging::MetricSample;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 720.0;
const TOP: f64 = 50.0;
const BOTTOM: f64 = 440.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

/// A labelled series to draw.
#[derive(Debug, Clone)]
pub struct PlotSeries {
    pub label: String,
    pub samples: Vec<MetricSample>,
}

#[derive(Debug, Clone, Copy)]
struct Range {
    lo: f64,
    hi: f64,
}

impl Range {
    fn of(values: impl Iterator<Item = f64>) -> Option<Range> {
        values.filter(|v| v.is_finite()).fold(None, |acc, v| match acc {
            None => Some(Range { lo: v, hi: v }),
            Some(r) => Some(Range { lo: r.lo.min(v), hi: r.hi.max(v) }),
        })
    }

    fn union(a: Option<Range>, b: Option<Range>) -> Option<Range> {
        match (a, b) {
            (Some(a), Some(b)) => Some(Range { lo: a.lo.min(b.lo), hi: a.hi.max(b.hi) }),
            (a, b) => a.or(b),
        }
    }

    fn padded(self) -> Range {
        if self.hi > self.lo {
            self
        } else {
            Range { lo: self.lo - 0.5, hi: self.hi + 0.5 }
        }
    }

    fn scale(self, v: f64, from: f64, to: f64) -> f64 {
        from + (v - self.lo) / (self.hi - self.lo) * (to - from)
    }

    fn disjoint(self, other: Range) -> bool {
        self.hi < other.lo || other.hi < self.lo
    }
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn num(v: f64) -> String {
    format!("{v:.2}")
}

fn tick(v: f64) -> String {
    format!("{v:.4}").trim_end_matches('0').trim_end_matches('.').to_string()
}

/// Self-contained SVG line chart: one `<polyline>` per series, x is the step.
///
/// Exactly two series whose value ranges do not overlap get a y-axis each
/// (left for the first, right for the second); otherwise all series share the
/// left axis. Non-finite values are skipped.
pub fn render_plot(series: &[PlotSeries]) -> String {
    let x_range = Range::of(series.iter().flat_map(|s| s.samples.iter().map(|p| p.step as f64)))
        .unwrap_or(Range { lo: 0.0, hi: 1.0 })
        .padded();
    let y_ranges: Vec<Option<Range>> = series
        .iter()
        .map(|s| Range::of(s.samples.iter().map(|p| p.value)))
        .collect();
    let dual = match y_ranges.as_slice() {
        [Some(a), Some(b)] => a.disjoint(*b),
        _ => false,
    };
    let shared = y_ranges
        .iter()
        .fold(None, |acc, r| Range::union(acc, *r))
        .unwrap_or(Range { lo: 0.0, hi: 1.0 })
        .padded();
    let axis_for = |i: usize| -> Range {
        if dual {
            y_ranges[i].expect("dual axes imply both ranges").padded()
        } else {
            shared
        }
    };

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#,
        W = WIDTH,
        H = HEIGHT
    );
    let _ = writeln!(out, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<line class="x-axis" x1="{LEFT}" y1="{BOTTOM}" x2="{RIGHT}" y2="{BOTTOM}" stroke="black"/>"#
    );
    let _ = writeln!(
        out,
        r#"<text x="{LEFT}" y="{}" text-anchor="start">{}</text>"#,
        BOTTOM + 20.0,
        tick(x_range.lo)
    );
    let _ = writeln!(
        out,
        r#"<text x="{RIGHT}" y="{}" text-anchor="end">{}</text>"#,
        BOTTOM + 20.0,
        tick(x_range.hi)
    );
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle">step</text>"#,
        (LEFT + RIGHT) / 2.0,
        BOTTOM + 40.0
    );

    let axes: Vec<(f64, Range, &str, &str)> = if dual {
        vec![
            (LEFT, axis_for(0), "end", PALETTE[0]),
            (RIGHT, axis_for(1), "start", PALETTE[1]),
        ]
    } else {
        vec![(LEFT, shared, "end", "black")]
    };
    for (x, range, anchor, color) in &axes {
        let label_x = if *anchor == "end" { x - 6.0 } else { x + 6.0 };
        let _ = writeln!(
            out,
            r#"<line class="y-axis" x1="{x}" y1="{TOP}" x2="{x}" y2="{BOTTOM}" stroke="{color}"/>"#
        );
        for (v, y) in [(range.lo, BOTTOM), (range.hi, TOP)] {
            let _ = writeln!(
                out,
                r#"<text x="{label_x}" y="{}" text-anchor="{anchor}" fill="{color}">{}</text>"#,
                y + 4.0,
                tick(v)
            );
        }
    }

    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let y_range = axis_for(i);
        let points: Vec<String> = s
            .samples
            .iter()
            .filter(|p| p.value.is_finite())
            .map(|p| {
                format!(
                    "{},{}",
                    num(x_range.scale(p.step as f64, LEFT, RIGHT)),
                    num(y_range.scale(p.value, BOTTOM, TOP))
                )
            })
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"><title>{}</title></polyline>"#,
            points.join(" "),
            xml_escape(&s.label)
        );
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" fill="{color}">{}</text>"#,
            LEFT + 10.0,
            TOP - 30.0 + 14.0 * i as f64,
            xml_escape(&s.label)
        );
    }
    out.push_str("</svg>\n");
    out
}
