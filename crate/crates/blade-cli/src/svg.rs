//! Self-contained SVG line-chart writer: one polyline per series, shaded
//! confidence bands, optional log-scale y axis, optional horizontal
//! reference line. Output is byte-deterministic for identical input.

pub struct Series {
    pub name: String,
    /// (x, y) points, in x order.
    pub points: Vec<(f64, f64)>,
    /// Optional (x, low, high) confidence band, same x order.
    pub band: Vec<(f64, f64, f64)>,
}

pub struct ChartSpec {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_y: bool,
    pub reference_y: Option<f64>,
}

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 520.0;
const MARGIN_L: f64 = 72.0;
const MARGIN_R: f64 = 24.0;
const MARGIN_T: f64 = 44.0;
const MARGIN_B: f64 = 56.0;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf", "#7f7f7f",
];

fn fmt(v: f64) -> String {
    format!("{v:.2}")
}

fn fmt_tick(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 100_000.0 || v.abs() < 0.01) {
        format!("{v:.1e}")
    } else if v.fract() == 0.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}

struct Scale {
    min: f64,
    max: f64,
    log: bool,
    lo_px: f64,
    hi_px: f64,
}

impl Scale {
    fn project(&self, v: f64) -> f64 {
        let (v, min, max) = if self.log {
            (v.max(self.min).log10(), self.min.log10(), self.max.log10())
        } else {
            (v, self.min, self.max)
        };
        let t = if max > min { (v - min) / (max - min) } else { 0.5 };
        self.lo_px + t * (self.hi_px - self.lo_px)
    }

    fn ticks(&self) -> Vec<f64> {
        if self.log {
            let lo = self.min.log10().floor() as i32;
            let hi = self.max.log10().ceil() as i32;
            (lo..=hi).map(|e| 10f64.powi(e)).collect()
        } else {
            let span = self.max - self.min;
            if span <= 0.0 {
                return vec![self.min];
            }
            let raw = span / 5.0;
            let mag = 10f64.powf(raw.log10().floor());
            let step = [1.0, 2.0, 5.0, 10.0]
                .iter()
                .map(|m| m * mag)
                .find(|&s| span / s <= 6.0)
                .unwrap_or(mag * 10.0);
            let first = (self.min / step).ceil() * step;
            let mut ticks = Vec::new();
            let mut v = first;
            while v <= self.max + step * 1e-9 {
                ticks.push(v);
                v += step;
            }
            ticks
        }
    }
}

pub fn render(spec: &ChartSpec, series: &[Series]) -> String {
    let xs: Vec<f64> = series
        .iter()
        .flat_map(|s| s.points.iter().map(|p| p.0))
        .collect();
    let mut ys: Vec<f64> = series
        .iter()
        .flat_map(|s| {
            s.points
                .iter()
                .map(|p| p.1)
                .chain(s.band.iter().flat_map(|b| [b.1, b.2]))
        })
        .collect();
    if let Some(r) = spec.reference_y {
        ys.push(r);
    }
    let (x_min, x_max) = bounds(&xs, false);
    let (y_min, y_max) = bounds(&ys, spec.log_y);
    let x_scale = Scale {
        min: x_min,
        max: x_max,
        log: false,
        lo_px: MARGIN_L,
        hi_px: WIDTH - MARGIN_R,
    };
    let y_scale = Scale {
        min: y_min,
        max: y_max,
        log: spec.log_y,
        lo_px: HEIGHT - MARGIN_B,
        hi_px: MARGIN_T,
    };

    let mut out = String::new();
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
    ));
    out.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    out.push_str(&format!(
        "<text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">{}</text>\n",
        fmt(WIDTH / 2.0),
        escape(&spec.title)
    ));

    // axes
    out.push_str(&format!(
        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n",
        fmt(MARGIN_L),
        fmt(HEIGHT - MARGIN_B),
        fmt(WIDTH - MARGIN_R),
        fmt(HEIGHT - MARGIN_B)
    ));
    out.push_str(&format!(
        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n",
        fmt(MARGIN_L),
        fmt(MARGIN_T),
        fmt(MARGIN_L),
        fmt(HEIGHT - MARGIN_B)
    ));
    for t in x_scale.ticks() {
        let x = x_scale.project(t);
        out.push_str(&format!(
            "<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"black\"/>\n",
            fmt(x),
            fmt(HEIGHT - MARGIN_B),
            fmt(HEIGHT - MARGIN_B + 5.0)
        ));
        out.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">{}</text>\n",
            fmt(x),
            fmt(HEIGHT - MARGIN_B + 18.0),
            fmt_tick(t)
        ));
    }
    for t in y_scale.ticks() {
        let y = y_scale.project(t);
        out.push_str(&format!(
            "<line x1=\"{1}\" y1=\"{0}\" x2=\"{2}\" y2=\"{0}\" stroke=\"black\"/>\n",
            fmt(y),
            fmt(MARGIN_L - 5.0),
            fmt(MARGIN_L)
        ));
        out.push_str(&format!(
            "<line x1=\"{1}\" y1=\"{0}\" x2=\"{2}\" y2=\"{0}\" stroke=\"#dddddd\"/>\n",
            fmt(y),
            fmt(MARGIN_L),
            fmt(WIDTH - MARGIN_R)
        ));
        out.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">{}</text>\n",
            fmt(MARGIN_L - 8.0),
            fmt(y + 4.0),
            fmt_tick(t)
        ));
    }
    out.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">{}</text>\n",
        fmt((MARGIN_L + WIDTH - MARGIN_R) / 2.0),
        fmt(HEIGHT - 12.0),
        escape(&spec.x_label)
    ));
    out.push_str(&format!(
        "<text x=\"16\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" transform=\"rotate(-90 16 {})\">{}</text>\n",
        fmt((MARGIN_T + HEIGHT - MARGIN_B) / 2.0),
        fmt((MARGIN_T + HEIGHT - MARGIN_B) / 2.0),
        escape(&spec.y_label)
    ));

    if let Some(r) = spec.reference_y {
        let y = y_scale.project(r);
        out.push_str(&format!(
            "<line x1=\"{1}\" y1=\"{0}\" x2=\"{2}\" y2=\"{0}\" stroke=\"#444444\" stroke-dasharray=\"6 4\"/>\n",
            fmt(y),
            fmt(MARGIN_L),
            fmt(WIDTH - MARGIN_R)
        ));
    }

    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        if s.band.len() >= 2 {
            let mut d = String::from("M");
            for (x, lo, _) in &s.band {
                d.push_str(&format!(
                    " {} {}",
                    fmt(x_scale.project(*x)),
                    fmt(y_scale.project(*lo))
                ));
            }
            for (x, _, hi) in s.band.iter().rev() {
                d.push_str(&format!(
                    " {} {}",
                    fmt(x_scale.project(*x)),
                    fmt(y_scale.project(*hi))
                ));
            }
            d.push_str(" Z");
            out.push_str(&format!(
                "<path d=\"{d}\" fill=\"{color}\" fill-opacity=\"0.2\" stroke=\"none\"/>\n"
            ));
        }
        let pts: Vec<String> = s
            .points
            .iter()
            .map(|(x, y)| format!("{},{}", fmt(x_scale.project(*x)), fmt(y_scale.project(*y))))
            .collect();
        out.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"2\"/>\n",
            pts.join(" ")
        ));
        // legend entry
        let ly = MARGIN_T + 16.0 * i as f64 + 8.0;
        out.push_str(&format!(
            "<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"{color}\" stroke-width=\"2\"/>\n",
            fmt(MARGIN_L + 12.0),
            fmt(ly),
            fmt(MARGIN_L + 36.0)
        ));
        out.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\">{}</text>\n",
            fmt(MARGIN_L + 42.0),
            fmt(ly + 4.0),
            escape(&s.name)
        ));
    }
    out.push_str("</svg>\n");
    out
}

fn bounds(vals: &[f64], log: bool) -> (f64, f64) {
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for &v in vals {
        if log && v <= 0.0 {
            continue;
        }
        min = min.min(v);
        max = max.max(v);
    }
    if !min.is_finite() || !max.is_finite() {
        return (0.0, 1.0);
    }
    if log {
        (min, max)
    } else {
        let pad = 0.05 * (max - min).max(max.abs().max(1.0) * 0.01);
        ((min - pad).min(0.0_f64.min(min)), max + pad)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
