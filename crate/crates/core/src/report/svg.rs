//! Deterministic SVG figures: heatmaps and bar charts. Output depends only on
//! the inputs; numbers are written with fixed precision.

use std::fmt::Write as _;

use super::ReportError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColorMode {
    /// [0, 1] onto a white-to-blue scale; values outside are clamped.
    Absolute,
    /// [-max|v|, +max|v|] onto blue-white-red, white at zero.
    Diverging,
}

type Rgb = (u8, u8, u8);

pub const ABSOLUTE_LOW: Rgb = (255, 255, 255);
pub const ABSOLUTE_HIGH: Rgb = (8, 48, 107);
pub const DIVERGING_NEG: Rgb = (33, 102, 172);
pub const DIVERGING_MID: Rgb = (247, 247, 247);
pub const DIVERGING_POS: Rgb = (178, 24, 43);

const CELL_W: f64 = 44.0;
const CELL_H: f64 = 14.0;
const LEFT: f64 = 56.0;
const TOP: f64 = 44.0;

fn lerp(a: Rgb, b: Rgb, t: f64) -> Rgb {
    let t = t.clamp(0.0, 1.0);
    let f = |x: u8, y: u8| (x as f64 + (y as f64 - x as f64) * t).round() as u8;
    (f(a.0, b.0), f(a.1, b.1), f(a.2, b.2))
}

fn hex(c: Rgb) -> String {
    format!("#{:02x}{:02x}{:02x}", c.0, c.1, c.2)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Cell colour for `v` given the matrix-wide `max_abs` (diverging only).
pub fn cell_color(v: f64, mode: ColorMode, max_abs: f64) -> String {
    match mode {
        ColorMode::Absolute => hex(lerp(ABSOLUTE_LOW, ABSOLUTE_HIGH, v)),
        ColorMode::Diverging => {
            if max_abs == 0.0 || v == 0.0 {
                hex(DIVERGING_MID)
            } else if v > 0.0 {
                hex(lerp(DIVERGING_MID, DIVERGING_POS, v / max_abs))
            } else {
                hex(lerp(DIVERGING_MID, DIVERGING_NEG, -v / max_abs))
            }
        }
    }
}

fn check_matrix(values: &[Vec<f64>], rows: usize, cols: usize) -> Result<(), ReportError> {
    if values.is_empty() || values[0].is_empty() {
        return Err(ReportError::EmptyMatrix);
    }
    if values.len() != rows || values.iter().any(|r| r.len() != cols) {
        return Err(ReportError::Render(format!(
            "matrix shape does not match {rows} row and {cols} column labels"
        )));
    }
    if values.iter().flatten().any(|v| !v.is_finite()) {
        return Err(ReportError::Render("matrix contains non-finite values".into()));
    }
    Ok(())
}

pub fn render_heatmap(
    title: &str,
    values: &[Vec<f64>],
    row_labels: &[String],
    col_labels: &[String],
    mode: ColorMode,
) -> Result<String, ReportError> {
    check_matrix(values, row_labels.len(), col_labels.len())?;
    let max_abs = values.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    let width = LEFT + CELL_W * col_labels.len() as f64 + 10.0;
    let height = TOP + CELL_H * row_labels.len() as f64 + 24.0;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="sans-serif">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{LEFT:.0}" y="16" font-size="12">{}</text>"#,
        escape(title)
    );
    for (j, c) in col_labels.iter().enumerate() {
        let x = LEFT + CELL_W * (j as f64 + 0.5);
        let _ = writeln!(
            s,
            r#"<text x="{x:.1}" y="{:.1}" font-size="9" text-anchor="middle">{}</text>"#,
            TOP - 6.0,
            escape(c)
        );
    }
    for (i, (label, row)) in row_labels.iter().zip(values).enumerate() {
        let y = TOP + CELL_H * i as f64;
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" font-size="9" text-anchor="end">{}</text>"#,
            LEFT - 4.0,
            y + CELL_H - 3.0,
            escape(label)
        );
        for (j, &v) in row.iter().enumerate() {
            let x = LEFT + CELL_W * j as f64;
            let _ = writeln!(
                s,
                r#"<rect x="{x:.1}" y="{y:.1}" width="{CELL_W:.1}" height="{CELL_H:.1}" fill="{}"><title>{} {}: {v:.4}</title></rect>"#,
                cell_color(v, mode, max_abs),
                escape(label),
                escape(&col_labels[j]),
            );
        }
    }
    let legend = match mode {
        ColorMode::Absolute => "scale: 0 (white) to 1 (blue)".to_string(),
        ColorMode::Diverging => format!("scale: -{max_abs:.4} (blue) to +{max_abs:.4} (red)"),
    };
    let _ = writeln!(
        s,
        r#"<text x="{LEFT:.0}" y="{:.1}" font-size="9">{legend}</text>"#,
        height - 8.0
    );
    s.push_str("</svg>\n");
    Ok(s)
}

/// Vertical bars on a [min(0, lowest), 1] axis, with optional
/// `(low, high)` whiskers per bar.
pub fn render_bar_chart(
    title: &str,
    labels: &[String],
    values: &[f64],
    intervals: Option<&[(f64, f64)]>,
) -> Result<String, ReportError> {
    if values.is_empty() {
        return Err(ReportError::EmptyMatrix);
    }
    if labels.len() != values.len() || intervals.is_some_and(|iv| iv.len() != values.len()) {
        return Err(ReportError::Render("bar chart inputs differ in length".into()));
    }
    let all: Vec<f64> = values
        .iter()
        .copied()
        .chain(intervals.into_iter().flatten().flat_map(|&(a, b)| [a, b]))
        .collect();
    if all.iter().any(|v| !v.is_finite()) {
        return Err(ReportError::Render("bar chart contains non-finite values".into()));
    }
    let lo = all.iter().copied().fold(0.0f64, f64::min);
    let hi = all.iter().copied().fold(1.0f64, f64::max);
    let (plot_h, bar_w, gap) = (200.0, 60.0, 30.0);
    let width = LEFT + (bar_w + gap) * values.len() as f64 + gap;
    let height = TOP + plot_h + 40.0;
    let y_of = |v: f64| TOP + plot_h * (hi - v) / (hi - lo);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="sans-serif">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{LEFT:.0}" y="16" font-size="12">{}</text>"#,
        escape(title)
    );
    for tick in [lo, 0.0, 0.5, hi] {
        if tick < lo || tick > hi {
            continue;
        }
        let y = y_of(tick);
        let _ = writeln!(
            s,
            r##"<line x1="{LEFT:.1}" y1="{y:.1}" x2="{width:.1}" y2="{y:.1}" stroke="#dddddd"/><text x="{:.1}" y="{:.1}" font-size="9" text-anchor="end">{tick:.2}</text>"##,
            LEFT - 4.0,
            y + 3.0
        );
    }
    let zero = y_of(0.0);
    for (i, (label, &v)) in labels.iter().zip(values).enumerate() {
        let x = LEFT + gap + (bar_w + gap) * i as f64;
        let (top, h) = if v >= 0.0 { (y_of(v), zero - y_of(v)) } else { (zero, y_of(v) - zero) };
        let _ = writeln!(
            s,
            r#"<rect x="{x:.1}" y="{top:.1}" width="{bar_w:.1}" height="{h:.1}" fill="{}"><title>{}: {v:.4}</title></rect>"#,
            hex(ABSOLUTE_HIGH),
            escape(label)
        );
        if let Some(iv) = intervals {
            let (a, b) = iv[i];
            let cx = x + bar_w / 2.0;
            let _ = writeln!(
                s,
                r#"<line x1="{cx:.1}" y1="{:.1}" x2="{cx:.1}" y2="{:.1}" stroke="black"/>"#,
                y_of(a),
                y_of(b)
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" font-size="10" text-anchor="middle">{}</text><text x="{:.1}" y="{:.1}" font-size="9" text-anchor="middle">{v:.4}</text>"#,
            x + bar_w / 2.0,
            TOP + plot_h + 16.0,
            escape(label),
            x + bar_w / 2.0,
            TOP + plot_h + 30.0
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(prefix: &str, n: usize) -> Vec<String> {
        (0..n).map(|i| format!("{prefix}{i}")).collect()
    }

    fn fills(svg: &str) -> Vec<String> {
        svg.match_indices("fill=\"#")
            .map(|(i, _)| svg[i + 6..i + 13].to_string())
            .collect()
    }

    #[test]
    fn single_zero_cell_is_scale_minimum() {
        let svg = render_heatmap("t", &[vec![0.0]], &labels("r", 1), &labels("c", 1), ColorMode::Absolute)
            .unwrap();
        assert_eq!(fills(&svg), vec![hex(ABSOLUTE_LOW)]);
    }

    #[test]
    fn diverging_all_zero_is_midpoint_everywhere() {
        let m = vec![vec![0.0; 3]; 2];
        let svg = render_heatmap("t", &m, &labels("r", 2), &labels("c", 3), ColorMode::Diverging).unwrap();
        assert!(fills(&svg).iter().all(|c| *c == hex(DIVERGING_MID)));
        let m = vec![vec![0.0, 0.5, -0.25]];
        let svg = render_heatmap("t", &m, &labels("r", 1), &labels("c", 3), ColorMode::Diverging).unwrap();
        let f = fills(&svg);
        assert_eq!(f, vec![hex(DIVERGING_MID), hex(DIVERGING_POS), hex(lerp(DIVERGING_MID, DIVERGING_NEG, 0.5))]);
    }

    #[test]
    fn rendering_is_deterministic_and_validated() {
        let m = vec![vec![0.1, 0.9], vec![0.5, 0.3]];
        let a = render_heatmap("x<y", &m, &labels("r", 2), &labels("c", 2), ColorMode::Absolute).unwrap();
        let b = render_heatmap("x<y", &m, &labels("r", 2), &labels("c", 2), ColorMode::Absolute).unwrap();
        assert_eq!(a, b);
        assert!(a.contains("x&lt;y"));
        assert!(matches!(
            render_heatmap("t", &[], &[], &[], ColorMode::Absolute),
            Err(ReportError::EmptyMatrix)
        ));
        assert!(render_heatmap("t", &[vec![f64::NAN]], &labels("r", 1), &labels("c", 1), ColorMode::Absolute).is_err());
        assert!(render_heatmap("t", &m, &labels("r", 1), &labels("c", 2), ColorMode::Absolute).is_err());
    }

    #[test]
    fn bar_chart_renders_whiskers() {
        let svg = render_bar_chart(
            "r",
            &labels("p", 2),
            &[0.7, 0.8],
            Some(&[(0.6, 0.75), (0.7, 0.85)]),
        )
        .unwrap();
        assert_eq!(svg.matches("<line x1=\"").count() >= 2, true);
        assert!(render_bar_chart("r", &labels("p", 1), &[0.1, 0.2], None).is_err());
    }
}
