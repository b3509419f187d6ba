//! Static heatmaps and probe curves.
//!
//! Heatmaps are grayscale, darker for higher values. Cells below `tau` stay
//! blank. Rows run down the vertical axis, columns along the top.

use std::fmt::Write as _;

use dialab::corpus::Slot;
use dialab::probe::{LabelledGrid, SlotProbeReport};

use crate::CliError;

const CELL: usize = 22;
const CHAR_W: usize = 7;

/// Checks the grid is rectangular with every value in `[0, 1]`.
pub fn check_grid(grid: &LabelledGrid) -> Result<(), CliError> {
    grid.validate()?;
    for (i, row) in grid.cells.iter().enumerate() {
        if let Some(v) = row.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(CliError::Data(format!("heatmap value {v} in row {i} lies outside [0, 1]")));
        }
    }
    Ok(())
}

fn gray(v: f64) -> u8 {
    (255.0 * (1.0 - v)).round() as u8
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn longest(labels: &[String]) -> usize {
    labels.iter().map(|l| l.chars().count()).max().unwrap_or(0)
}

pub fn heatmap_svg(grid: &LabelledGrid, tau: f64) -> Result<String, CliError> {
    check_grid(grid)?;
    let left = 10 + CHAR_W * longest(&grid.rows);
    // column labels are rotated, so their length sets the top margin
    let top = 10 + (CHAR_W * longest(&grid.cols)) * 3 / 4;
    let (w, h) = (left + CELL * grid.cols.len() + 10, top + CELL * grid.rows.len() + 10);
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="monospace" font-size="11">"#);
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    for (j, c) in grid.cols.iter().enumerate() {
        let x = left + CELL * j + CELL / 2;
        let _ = writeln!(s, r#"<text x="{x}" y="{}" transform="rotate(-45 {x} {})">{}</text>"#, top - 4, top - 4, escape(c));
    }
    for (i, (r, row)) in grid.rows.iter().zip(&grid.cells).enumerate() {
        let y = top + CELL * i;
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#, left - 4, y + CELL * 2 / 3, escape(r));
        for (j, &v) in row.iter().enumerate() {
            let x = left + CELL * j;
            let fill = if v < tau { "none".to_string() } else { format!("rgb({0},{0},{0})", gray(v)) };
            let _ = writeln!(s, r##"<rect x="{x}" y="{y}" width="{CELL}" height="{CELL}" fill="{fill}" stroke="#ddd"><title>{v:.3}</title></rect>"##);
        }
    }
    s.push_str("</svg>\n");
    Ok(s)
}

/// Binary portable pixmap, `cell` pixels per matrix cell with a 1-pixel grid.
/// The format has no text, so labels are left to the SVG output.
pub fn heatmap_ppm(grid: &LabelledGrid, tau: f64, cell: usize) -> Result<Vec<u8>, CliError> {
    check_grid(grid)?;
    let cell = cell.max(2);
    let (w, h) = (cell * grid.cols.len().max(1) + 1, cell * grid.rows.len().max(1) + 1);
    let mut out = format!("P6\n{w} {h}\n255\n").into_bytes();
    for y in 0..h {
        for x in 0..w {
            let v = if x % cell == 0 || y % cell == 0 {
                0xdd
            } else {
                match grid.cells.get(y / cell).and_then(|r| r.get(x / cell)) {
                    Some(&v) if v >= tau => gray(v),
                    _ => 0xff,
                }
            };
            out.extend_from_slice(&[v, v, v]);
        }
    }
    Ok(out)
}

/// Accuracy against offset from the latest mention, one line per slot.
pub fn slot_curve_svg(report: &SlotProbeReport, cap: usize) -> String {
    let (left, top, pw, ph) = (50usize, 20usize, 40 * cap.max(1), 240usize);
    let (w, h) = (left + pw + 130, top + ph + 45);
    let colours = ["#1b6ca8", "#c0392b", "#27ae60", "#8e44ad"];
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="11">"#);
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let px = |o: usize| left + pw * o / cap.max(1);
    let py = |a: f64| top as f64 + ph as f64 * (1.0 - a);
    for t in 0..=4 {
        let a = t as f64 / 4.0;
        let _ = writeln!(s, r##"<line x1="{left}" x2="{}" y1="{y:.1}" y2="{y:.1}" stroke="#eee"/><text x="{}" y="{:.1}" text-anchor="end">{a:.2}</text>"##, left + pw, left - 4, py(a) + 4.0, y = py(a));
    }
    for o in 0..=cap {
        let label = if o == cap { format!("{o}+") } else { o.to_string() };
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{label}</text>"#, px(o), top + ph + 15);
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">offset from mention</text>"#, left + pw / 2, top + ph + 35);
    for (k, slot) in Slot::ALL.into_iter().enumerate() {
        let points: Vec<String> = report
            .curve(slot, cap)
            .into_iter()
            .filter_map(|(o, a)| a.map(|a| format!("{},{:.1}", px(o), py(a))))
            .collect();
        let c = colours[k];
        let _ = writeln!(s, r#"<polyline fill="none" stroke="{c}" stroke-width="2" points="{}"/>"#, points.join(" "));
        let ly = top + 14 * k + 10;
        let _ = writeln!(s, r#"<text x="{}" y="{ly}" fill="{c}">{}</text>"#, left + pw + 12, slot.name());
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(cells: Vec<Vec<f64>>) -> LabelledGrid {
        let rows = (0..cells.len()).map(|i| format!("r{i}")).collect();
        let cols = (0..cells.first().map_or(0, Vec::len)).map(|j| format!("c{j}")).collect();
        LabelledGrid { rows, cols, cells }
    }

    #[test]
    fn single_full_cell_is_darkest() {
        let g = grid(vec![vec![1.0]]);
        let svg = heatmap_svg(&g, 0.2).unwrap();
        assert!(svg.contains("rgb(0,0,0)"));
        let ppm = heatmap_ppm(&g, 0.2, 4).unwrap();
        assert!(ppm.starts_with(b"P6\n5 5\n255\n"));
        let body = &ppm[b"P6\n5 5\n255\n".len()..];
        assert_eq!(body.len(), 5 * 5 * 3);
        assert_eq!(body[3 * (2 * 5 + 2)], 0);
    }

    #[test]
    fn cells_below_tau_are_blank() {
        let g = grid(vec![vec![0.1, 0.19], vec![0.0, 0.05]]);
        let svg = heatmap_svg(&g, 0.2).unwrap();
        assert!(!svg.contains("rgb("));
        let ppm = heatmap_ppm(&g, 0.2, 4).unwrap();
        let body = &ppm[b"P6\n9 9\n255\n".len()..];
        assert!(body.iter().all(|&b| b == 0xff || b == 0xdd));
    }

    #[test]
    fn labels_land_on_both_axes() {
        let g = LabelledGrid { rows: vec!["api_call".into(), "CUISINE".into()], cols: vec!["<u>".into(), "food".into()], cells: vec![vec![0.5, 0.5]; 2] };
        let svg = heatmap_svg(&g, 0.2).unwrap();
        for l in ["api_call", "CUISINE", "&lt;u&gt;", "food"] {
            assert!(svg.contains(&format!(">{l}</text>")), "{l}");
        }
    }

    #[test]
    fn ragged_and_out_of_range_grids_are_rejected() {
        let mut g = grid(vec![vec![0.1, 0.2], vec![0.3, 0.4]]);
        g.cells[1].pop();
        assert!(heatmap_svg(&g, 0.2).is_err());
        assert!(heatmap_ppm(&grid(vec![vec![1.5]]), 0.2, 4).is_err());
    }
}
