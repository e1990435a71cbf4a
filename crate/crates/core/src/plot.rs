//! Static SVG scatter plots of instance coordinates: Z1 horizontal, Z2
//! vertical, equal-aspect axes, categorical palette for set membership or a
//! blue-to-red scale for performance (blue = low = better). Everything is
//! hand-emitted text so output bytes are deterministic and diffable.

use indexmap::IndexMap;

#[derive(Debug, Clone)]
pub struct ScatterPoint {
    pub name: String,
    pub z: [f64; 2],
}

#[derive(Debug, Clone)]
pub enum ColorSpec {
    /// Single color for every point.
    Uniform,
    /// One label per point; distinct labels get palette colors + legend
    /// entries in first-seen order.
    Categorical(Vec<String>),
    /// One value per point on a blue (low) → red (high) scale.
    Continuous(Vec<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Marker {
    Circle,
    Square,
    Triangle,
    Star,
}

#[derive(Debug, Clone, Default)]
pub struct PlotSpec {
    pub title: Option<String>,
    /// Heading for the continuous color bar (e.g. the algorithm name).
    pub color_label: Option<String>,
    /// Per-category marker shape overrides; default is circles.
    pub markers: Vec<(String, Marker)>,
}

const WIDTH: f64 = 760.0;
const HEIGHT: f64 = 560.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_TOP: f64 = 50.0;
const PLOT_W: f64 = 510.0;
const PLOT_H: f64 = 440.0;
const LEGEND_X: f64 = 600.0;
const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];
const SCALE_LOW: (u8, u8, u8) = (0x3b, 0x4c, 0xc0); // blue, better
const SCALE_HIGH: (u8, u8, u8) = (0xb4, 0x04, 0x26); // red, worse

/// Equal-aspect mapping from data space into the plot rectangle: one scale
/// for both axes, centered inside the available area.
struct Viewport {
    scale: f64,
    min: [f64; 2],
    max: [f64; 2],
    off: [f64; 2],
}

impl Viewport {
    fn fit(points: &[ScatterPoint]) -> Viewport {
        let mut min = [f64::INFINITY; 2];
        let mut max = [f64::NEG_INFINITY; 2];
        for p in points {
            for a in 0..2 {
                min[a] = min[a].min(p.z[a]);
                max[a] = max[a].max(p.z[a]);
            }
        }
        if points.is_empty() {
            min = [0.0; 2];
            max = [1.0; 2];
        }
        for a in 0..2 {
            let span = max[a] - min[a];
            let pad = if span > 0.0 { 0.05 * span } else { 0.5 };
            min[a] -= pad;
            max[a] += pad;
        }
        let scale = (PLOT_W / (max[0] - min[0])).min(PLOT_H / (max[1] - min[1]));
        let off = [
            MARGIN_LEFT + (PLOT_W - scale * (max[0] - min[0])) / 2.0,
            MARGIN_TOP + (PLOT_H - scale * (max[1] - min[1])) / 2.0,
        ];
        Viewport { scale, min, max, off }
    }

    fn x(&self, v: f64) -> f64 {
        self.off[0] + (v - self.min[0]) * self.scale
    }

    /// SVG y grows downward; data Z2 grows upward.
    fn y(&self, v: f64) -> f64 {
        self.off[1] + (self.max[1] - v) * self.scale
    }
}

pub fn escape_xml(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            _ => out.push(c),
        }
    }
    out
}

fn lerp_channel(a: u8, b: u8, t: f64) -> u8 {
    (a as f64 + (b as f64 - a as f64) * t).round() as u8
}

/// Position `t ∈ [0,1]` on the blue→red scale.
fn scale_color(t: f64) -> String {
    let t = t.clamp(0.0, 1.0);
    format!(
        "#{:02x}{:02x}{:02x}",
        lerp_channel(SCALE_LOW.0, SCALE_HIGH.0, t),
        lerp_channel(SCALE_LOW.1, SCALE_HIGH.1, t),
        lerp_channel(SCALE_LOW.2, SCALE_HIGH.2, t),
    )
}

fn marker_svg(shape: Marker, cx: f64, cy: f64, r: f64, fill: &str, name: &str) -> String {
    let title = format!("<title>{}</title>", escape_xml(name));
    match shape {
        Marker::Circle => format!(
            "<circle cx=\"{cx:.2}\" cy=\"{cy:.2}\" r=\"{r:.2}\" fill=\"{fill}\" fill-opacity=\"0.8\">{title}</circle>"
        ),
        Marker::Square => format!(
            "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"{fill}\" fill-opacity=\"0.8\">{title}</rect>",
            cx - r,
            cy - r,
            2.0 * r,
            2.0 * r
        ),
        Marker::Triangle => {
            let pts = [
                (cx, cy - 1.2 * r),
                (cx - 1.1 * r, cy + 0.9 * r),
                (cx + 1.1 * r, cy + 0.9 * r),
            ];
            polygon(&pts, fill, &title)
        }
        Marker::Star => {
            let mut pts = Vec::with_capacity(10);
            for i in 0..10 {
                let radius = if i % 2 == 0 { 1.6 * r } else { 0.64 * r };
                let angle = std::f64::consts::PI * (i as f64 / 5.0) - std::f64::consts::FRAC_PI_2;
                pts.push((cx + radius * angle.cos(), cy + radius * angle.sin()));
            }
            polygon(&pts, fill, &title)
        }
    }
}

fn polygon(pts: &[(f64, f64)], fill: &str, title: &str) -> String {
    let coords: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
    format!(
        "<polygon points=\"{}\" fill=\"{fill}\" fill-opacity=\"0.8\">{title}</polygon>",
        coords.join(" ")
    )
}

/// Round tick step to 1/2/5 × 10^k near `span / target_count`.
fn nice_step(span: f64, target_count: f64) -> f64 {
    let raw = span / target_count;
    let mag = 10f64.powf(raw.log10().floor());
    let norm = raw / mag;
    let factor = if norm < 1.5 {
        1.0
    } else if norm < 3.5 {
        2.0
    } else if norm < 7.5 {
        5.0
    } else {
        10.0
    };
    factor * mag
}

fn tick_values(min: f64, max: f64) -> (Vec<f64>, usize) {
    let step = nice_step(max - min, 5.0);
    let decimals = (-step.log10().floor()).max(0.0) as usize;
    let mut ticks = Vec::new();
    let mut k = (min / step).ceil() as i64;
    while (k as f64) * step <= max + 1e-12 * step {
        ticks.push(k as f64 * step);
        k += 1;
    }
    (ticks, decimals)
}

pub fn scatter_svg(points: &[ScatterPoint], color: &ColorSpec, spec: &PlotSpec) -> String {
    match color {
        ColorSpec::Categorical(labels) => assert_eq!(labels.len(), points.len()),
        ColorSpec::Continuous(values) => assert_eq!(values.len(), points.len()),
        ColorSpec::Uniform => {}
    }
    let vp = Viewport::fit(points);
    let mut s = String::new();
    s.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    s.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\" font-size=\"12\">\n"
    ));
    s.push_str(&format!(
        "<rect x=\"0\" y=\"0\" width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n"
    ));

    if let Some(title) = &spec.title {
        s.push_str(&format!(
            "<text x=\"{:.1}\" y=\"28\" text-anchor=\"middle\" font-size=\"16\">{}</text>\n",
            MARGIN_LEFT + PLOT_W / 2.0,
            escape_xml(title)
        ));
    }

    // Frame, ticks, axis labels.
    s.push_str("<g stroke=\"#444444\" fill=\"none\" stroke-width=\"1\">\n");
    s.push_str(&format!(
        "<rect x=\"{MARGIN_LEFT}\" y=\"{MARGIN_TOP}\" width=\"{PLOT_W}\" height=\"{PLOT_H}\"/>\n"
    ));
    s.push_str("</g>\n<g fill=\"#222222\">\n");
    let bottom = MARGIN_TOP + PLOT_H;
    let (xticks, xdec) = tick_values(vp.min[0], vp.max[0]);
    for t in &xticks {
        let x = vp.x(*t);
        s.push_str(&format!(
            "<line x1=\"{x:.2}\" y1=\"{bottom}\" x2=\"{x:.2}\" y2=\"{:.1}\" stroke=\"#444444\"/>\n",
            bottom + 5.0
        ));
        s.push_str(&format!(
            "<text x=\"{x:.2}\" y=\"{:.1}\" text-anchor=\"middle\">{:.*}</text>\n",
            bottom + 20.0,
            xdec,
            t
        ));
    }
    let (yticks, ydec) = tick_values(vp.min[1], vp.max[1]);
    for t in &yticks {
        let y = vp.y(*t);
        s.push_str(&format!(
            "<line x1=\"{MARGIN_LEFT}\" y1=\"{y:.2}\" x2=\"{:.1}\" y2=\"{y:.2}\" stroke=\"#444444\"/>\n",
            MARGIN_LEFT - 5.0
        ));
        s.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.2}\" text-anchor=\"end\" dominant-baseline=\"middle\">{:.*}</text>\n",
            MARGIN_LEFT - 9.0,
            y + 1.0,
            ydec,
            t
        ));
    }
    s.push_str(&format!(
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\" font-size=\"14\">Z1</text>\n",
        MARGIN_LEFT + PLOT_W / 2.0,
        bottom + 42.0
    ));
    s.push_str(&format!(
        "<text x=\"22\" y=\"{:.1}\" text-anchor=\"middle\" font-size=\"14\" transform=\"rotate(-90 22 {:.1})\">Z2</text>\n",
        MARGIN_TOP + PLOT_H / 2.0,
        MARGIN_TOP + PLOT_H / 2.0
    ));
    s.push_str("</g>\n");

    // Category → (color, marker) assignment in first-seen order.
    let mut categories: IndexMap<&str, (String, Marker)> = IndexMap::new();
    if let ColorSpec::Categorical(labels) = color {
        for label in labels {
            let next = categories.len();
            categories.entry(label.as_str()).or_insert_with(|| {
                let marker = spec
                    .markers
                    .iter()
                    .find(|(l, _)| l == label)
                    .map(|&(_, m)| m)
                    .unwrap_or(Marker::Circle);
                (PALETTE[next % PALETTE.len()].to_string(), marker)
            });
        }
    }
    let (cmin, cmax) = match color {
        ColorSpec::Continuous(values) => {
            let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            (lo, hi)
        }
        _ => (0.0, 1.0),
    };

    s.push_str("<g stroke=\"none\">\n");
    for (i, p) in points.iter().enumerate() {
        let (fill, marker) = match color {
            ColorSpec::Uniform => (PALETTE[0].to_string(), Marker::Circle),
            ColorSpec::Categorical(labels) => categories[labels[i].as_str()].clone(),
            ColorSpec::Continuous(values) => {
                let t = if cmax > cmin { (values[i] - cmin) / (cmax - cmin) } else { 0.0 };
                (scale_color(t), Marker::Circle)
            }
        };
        s.push_str(&marker_svg(marker, vp.x(p.z[0]), vp.y(p.z[1]), 4.0, &fill, &p.name));
        s.push('\n');
    }
    s.push_str("</g>\n");

    // Legend.
    match color {
        ColorSpec::Categorical(_) => {
            s.push_str("<g>\n");
            for (i, (label, (fill, marker))) in categories.iter().enumerate() {
                let y = MARGIN_TOP + 10.0 + 22.0 * i as f64;
                s.push_str(&marker_svg(*marker, LEGEND_X + 8.0, y, 5.0, fill, label));
                s.push('\n');
                s.push_str(&format!(
                    "<text x=\"{:.1}\" y=\"{:.1}\" dominant-baseline=\"middle\">{}</text>\n",
                    LEGEND_X + 22.0,
                    y + 1.0,
                    escape_xml(label)
                ));
            }
            s.push_str("</g>\n");
        }
        ColorSpec::Continuous(_) => {
            s.push_str("<g>\n");
            if let Some(label) = &spec.color_label {
                s.push_str(&format!(
                    "<text x=\"{LEGEND_X}\" y=\"{:.1}\">{}</text>\n",
                    MARGIN_TOP + 2.0,
                    escape_xml(label)
                ));
            }
            let bar_top = MARGIN_TOP + 14.0;
            let bar_h = 180.0;
            let steps = 64;
            for i in 0..steps {
                // Red (worse) on top, blue (better) at the bottom.
                let t = 1.0 - (i as f64 + 0.5) / steps as f64;
                s.push_str(&format!(
                    "<rect x=\"{LEGEND_X}\" y=\"{:.2}\" width=\"16\" height=\"{:.2}\" fill=\"{}\"/>\n",
                    bar_top + bar_h * i as f64 / steps as f64,
                    bar_h / steps as f64 + 0.5,
                    scale_color(t)
                ));
            }
            s.push_str(&format!(
                "<text x=\"{:.1}\" y=\"{:.1}\" dominant-baseline=\"middle\">{cmax}</text>\n",
                LEGEND_X + 22.0,
                bar_top + 1.0
            ));
            s.push_str(&format!(
                "<text x=\"{:.1}\" y=\"{:.1}\" dominant-baseline=\"middle\">{cmin}</text>\n",
                LEGEND_X + 22.0,
                bar_top + bar_h + 1.0
            ));
            s.push_str("</g>\n");
        }
        ColorSpec::Uniform => {}
    }

    s.push_str("</svg>\n");
    s
}

/// Minimal XML well-formedness check: balanced matching tags, quoted
/// attributes, valid entities, nothing but whitespace outside the root.
/// Not a full parser — just enough to keep emitted SVG honest.
pub fn validate_xml(text: &str) -> Result<(), String> {
    let b = text.as_bytes();
    let mut i = 0;
    let mut stack: Vec<String> = Vec::new();
    let mut seen_root = false;
    let fail = |msg: &str, at: usize| Err(format!("{msg} at byte {at}"));

    fn name_end(b: &[u8], mut i: usize) -> usize {
        while i < b.len()
            && (b[i].is_ascii_alphanumeric() || matches!(b[i], b'-' | b'_' | b'.' | b':'))
        {
            i += 1;
        }
        i
    }
    fn entity_end(b: &[u8], start: usize) -> Option<usize> {
        let end = b[start..].iter().take(12).position(|&c| c == b';')? + start;
        let body = &b[start + 1..end];
        let ok = match body {
            b"amp" | b"lt" | b"gt" | b"quot" | b"apos" => true,
            _ if body.first() == Some(&b'#') => {
                let digits = &body[1..];
                if digits.first() == Some(&b'x') {
                    digits.len() > 1 && digits[1..].iter().all(u8::is_ascii_hexdigit)
                } else {
                    !digits.is_empty() && digits.iter().all(u8::is_ascii_digit)
                }
            }
            _ => false,
        };
        ok.then_some(end)
    }

    while i < b.len() {
        match b[i] {
            b'<' => {
                if b[i..].starts_with(b"<?") {
                    match text[i..].find("?>") {
                        Some(off) => i += off + 2,
                        None => return fail("unterminated processing instruction", i),
                    }
                } else if b[i..].starts_with(b"<!--") {
                    match text[i..].find("-->") {
                        Some(off) => i += off + 3,
                        None => return fail("unterminated comment", i),
                    }
                } else if b[i..].starts_with(b"</") {
                    let start = i + 2;
                    let end = name_end(b, start);
                    if end == start {
                        return fail("empty closing tag name", i);
                    }
                    let name = &text[start..end];
                    match stack.pop() {
                        Some(open) if open == name => {}
                        Some(open) => return fail(&format!("</{name}> closes <{open}>"), i),
                        None => return fail(&format!("</{name}> without opener"), i),
                    }
                    i = end;
                    while i < b.len() && b[i].is_ascii_whitespace() {
                        i += 1;
                    }
                    if i >= b.len() || b[i] != b'>' {
                        return fail("closing tag not terminated", i);
                    }
                    i += 1;
                } else {
                    let start = i + 1;
                    let end = name_end(b, start);
                    if end == start {
                        return fail("tag without a name", i);
                    }
                    if stack.is_empty() && seen_root {
                        return fail("second root element", i);
                    }
                    let name = text[start..end].to_string();
                    i = end;
                    loop {
                        while i < b.len() && b[i].is_ascii_whitespace() {
                            i += 1;
                        }
                        if i >= b.len() {
                            return fail("unterminated tag", end);
                        }
                        match b[i] {
                            b'>' => {
                                stack.push(name);
                                seen_root = true;
                                i += 1;
                                break;
                            }
                            b'/' => {
                                if b.get(i + 1) != Some(&b'>') {
                                    return fail("stray `/` in tag", i);
                                }
                                seen_root = true;
                                i += 2;
                                break;
                            }
                            _ => {
                                let attr_end = name_end(b, i);
                                if attr_end == i {
                                    return fail("malformed attribute name", i);
                                }
                                i = attr_end;
                                while i < b.len() && b[i].is_ascii_whitespace() {
                                    i += 1;
                                }
                                if i >= b.len() || b[i] != b'=' {
                                    return fail("attribute without `=`", i);
                                }
                                i += 1;
                                while i < b.len() && b[i].is_ascii_whitespace() {
                                    i += 1;
                                }
                                let quote = match b.get(i) {
                                    Some(&q @ (b'"' | b'\'')) => q,
                                    _ => return fail("attribute value not quoted", i),
                                };
                                i += 1;
                                while i < b.len() && b[i] != quote {
                                    match b[i] {
                                        b'<' => return fail("`<` inside attribute value", i),
                                        b'&' => match entity_end(b, i) {
                                            Some(end) => i = end + 1,
                                            None => return fail("bad entity reference", i),
                                        },
                                        _ => i += 1,
                                    }
                                }
                                if i >= b.len() {
                                    return fail("unterminated attribute value", i);
                                }
                                i += 1;
                            }
                        }
                    }
                }
            }
            b'&' => match entity_end(b, i) {
                Some(end) => i = end + 1,
                None => return fail("bad entity reference", i),
            },
            c => {
                if stack.is_empty() && !c.is_ascii_whitespace() && seen_root {
                    return fail("text after document root", i);
                }
                if stack.is_empty() && !c.is_ascii_whitespace() && !seen_root {
                    return fail("text before document root", i);
                }
                i += 1;
            }
        }
    }
    if let Some(open) = stack.pop() {
        return fail(&format!("<{open}> never closed"), text.len());
    }
    if !seen_root {
        return fail("no root element", 0);
    }
    Ok(())
}
