//! Heatmap rendering of scalar fields as standalone SVG.

use std::fmt::Write;

use jacdet::ScalarField;

const MAX_CELLS: usize = 128;
const CELL_PX: f64 = 4.0;

/// Diverging blue/white/red colour for `t` in `[-1, 1]`.
fn colour(t: f64) -> (u8, u8, u8) {
    let t = t.clamp(-1.0, 1.0);
    let fade = |c: f64| (255.0 - (255.0 - c) * t.abs()).round() as u8;
    if t >= 0.0 {
        (fade(178.0), fade(24.0), fade(43.0))
    } else {
        (fade(33.0), fade(102.0), fade(172.0))
    }
}

/// Renders `field` with the colour scale symmetric about zero. Nodes flagged
/// in `masked` are drawn grey. Large grids are subsampled.
pub fn heatmap(field: &ScalarField, masked: Option<&[bool]>, title: &str) -> String {
    let g = field.grid;
    let stride = (g.cols().max(g.rows()) + MAX_CELLS - 1) / MAX_CELLS;
    let cols: Vec<usize> = (0..g.cols()).step_by(stride).collect();
    let rows: Vec<usize> = (0..g.rows()).step_by(stride).collect();
    let scale = field.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let (w, h) = (cols.len() as f64 * CELL_PX, rows.len() as f64 * CELL_PX);
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{}" viewBox="0 0 {w} {}">"#,
        h + 20.0,
        h + 20.0
    );
    let _ = writeln!(
        out,
        r#"<text x="2" y="14" font-family="monospace" font-size="11">{title} (|max| = {scale:.4e})</text>"#
    );
    for (r, &j) in rows.iter().enumerate() {
        // y grows upward in the field, downward in SVG
        let y = 20.0 + h - (r + 1) as f64 * CELL_PX;
        for (c, &i) in cols.iter().enumerate() {
            let k = g.index(i, j);
            let fill = if masked.is_some_and(|m| m[k]) {
                "#999999".to_string()
            } else {
                let t = if scale > 0.0 {
                    field.values[k] / scale
                } else {
                    0.0
                };
                let (r, gg, b) = colour(t);
                format!("#{r:02x}{gg:02x}{b:02x}")
            };
            let _ = writeln!(
                out,
                r#"<rect x="{}" y="{y}" width="{CELL_PX}" height="{CELL_PX}" fill="{fill}"/>"#,
                c as f64 * CELL_PX
            );
        }
    }
    out.push_str("</svg>\n");
    out
}
