//! Deterministic SVG heatmaps of grid values with a diverging colour map
//! centred at zero.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::fields::{ScalarField, UniformGrid};

use super::CliError;

const PLOT_PX: f64 = 400.0;
const MARGIN: f64 = 20.0;
const LEGEND_W: f64 = 90.0;

/// Blue (negative) through white (zero) to red (positive); `t` in [-1, 1].
fn diverging(t: f64) -> (u8, u8, u8) {
    let t = t.clamp(-1.0, 1.0);
    let mix = |a: f64, b: f64, s: f64| (a + (b - a) * s).round() as u8;
    if t < 0.0 {
        let s = -t;
        (mix(255.0, 33.0, s), mix(255.0, 102.0, s), mix(255.0, 172.0, s))
    } else {
        (mix(255.0, 178.0, t), mix(255.0, 24.0, t), mix(255.0, 43.0, t))
    }
}

fn hex((r, g, b): (u8, u8, u8)) -> String {
    format!("#{r:02x}{g:02x}{b:02x}")
}

/// Render `values` (one per grid node, NaN = not drawn) as an SVG document.
pub fn render_svg(grid: &UniformGrid, values: &[f64], title: &str) -> String {
    let drawn: Vec<usize> = grid.active_nodes().iter().copied().filter(|&n| values[n].is_finite()).collect();
    let (lo, hi) = drawn.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &n| (lo.min(values[n]), hi.max(values[n])));
    let (lo, hi) = if drawn.is_empty() { (0.0, 0.0) } else { (lo, hi) };
    let limit = lo.abs().max(hi.abs());
    let scale_t = |v: f64| if limit > 0.0 { v / limit } else { 0.0 };

    let b = grid.domain().bbox();
    let h = grid.h();
    let (w_world, h_world) = (b.x1_max - b.x1_min + h, b.x2_max - b.x2_min + h);
    let px = PLOT_PX / w_world.max(h_world);
    let (plot_w, plot_h) = (w_world * px, h_world * px);
    let width = plot_w + 2.0 * MARGIN + LEGEND_W;
    let height = plot_h + 2.0 * MARGIN + 20.0;

    let mut s = String::new();
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width:.0}\" height=\"{height:.0}\" viewBox=\"0 0 {width:.2} {height:.2}\">"
    );
    let _ = writeln!(s, "<rect x=\"0\" y=\"0\" width=\"{width:.2}\" height=\"{height:.2}\" fill=\"#f4f4f4\"/>");
    let _ = writeln!(s, "<text x=\"{MARGIN:.2}\" y=\"14\" font-family=\"monospace\" font-size=\"11\">{}</text>", xml_escape(title));
    let _ = writeln!(s, "<g shape-rendering=\"crispEdges\">");
    for &n in &drawn {
        let p = grid.point(n);
        // cell of side h centred on the node, inside a frame padded by h/2
        let x = MARGIN + (p.x1 - b.x1_min) * px;
        let y = MARGIN + 20.0 + (b.x2_max - p.x2) * px;
        let _ = writeln!(
            s,
            "<rect x=\"{x:.2}\" y=\"{y:.2}\" width=\"{w:.2}\" height=\"{w:.2}\" fill=\"{c}\"/>",
            w = h * px + 0.01,
            c = hex(diverging(scale_t(values[n])))
        );
    }
    let _ = writeln!(s, "</g>");

    // legend: vertical bar from +limit (top) to -limit (bottom)
    let lx = MARGIN + plot_w + 20.0;
    let ly = MARGIN + 20.0;
    let steps = 32;
    let bar_h = plot_h.min(240.0);
    for k in 0..steps {
        let t = 1.0 - 2.0 * (k as f64 + 0.5) / steps as f64;
        let _ = writeln!(
            s,
            "<rect x=\"{lx:.2}\" y=\"{y:.2}\" width=\"16\" height=\"{hh:.2}\" fill=\"{c}\"/>",
            y = ly + bar_h * k as f64 / steps as f64,
            hh = bar_h / steps as f64 + 0.01,
            c = hex(diverging(t))
        );
    }
    let label = |s: &mut String, y: f64, text: String| {
        let _ = writeln!(s, "<text x=\"{:.2}\" y=\"{y:.2}\" font-family=\"monospace\" font-size=\"10\">{text}</text>", lx + 20.0);
    };
    label(&mut s, ly + 8.0, format!("{limit:+.3e}"));
    label(&mut s, ly + 0.5 * bar_h + 4.0, "0".to_string());
    label(&mut s, ly + bar_h, format!("{:+.3e}", -limit));
    label(&mut s, ly + bar_h + 18.0, format!("min {lo:.3e}"));
    label(&mut s, ly + bar_h + 32.0, format!("max {hi:.3e}"));
    let _ = writeln!(s, "</svg>");
    s
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn write_svg(grid: &UniformGrid, values: &[f64], title: &str, path: &Path) -> Result<(), CliError> {
    fs::write(path, render_svg(grid, values, title)).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// Heatmap of a field over its active nodes.
pub fn emit_heatmap(field: &ScalarField, path: &Path) -> Result<(), CliError> {
    if field.grid().active_nodes().is_empty() {
        return Err(CliError::Config("cannot draw an empty field".into()));
    }
    write_svg(field.grid(), field.values(), "field", path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Domain2D;

    #[test]
    fn zero_field_is_uniform_mid_colour() {
        let grid = UniformGrid::new(&Domain2D::unit_disk(), 0.25).unwrap();
        let z = ScalarField::zeros(&grid, None);
        let svg = render_svg(&grid, z.values(), "zero");
        let cells: Vec<&str> = svg.lines().filter(|l| l.contains("crispEdges") || l.starts_with("<rect x=\"2")).collect();
        assert!(!cells.is_empty());
        let body: String = svg.split("<g shape-rendering=\"crispEdges\">").nth(1).unwrap().split("</g>").next().unwrap().into();
        assert!(body.lines().filter(|l| !l.is_empty()).all(|l| l.contains("#ffffff")));
    }

    #[test]
    fn colours_follow_sign() {
        assert_eq!(diverging(0.0), (255, 255, 255));
        let (r, _, b) = diverging(-1.0);
        assert!(b > r);
        let (r, _, b) = diverging(1.0);
        assert!(r > b);
    }
}
