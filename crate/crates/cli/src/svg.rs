//! Self-contained SVG rendering of a reliability heatmap.
//!
//! No scripts, no external references: one `<svg>` element with colored
//! cell rectangles, a per-cell order label, tick labels on both axes, and
//! a fixed eight-step sequential colormap from light yellow to dark red.

use qnv_core::optimizer::Heatmap;

/// Light-to-dark sequential ramp. Low objective values take the light
/// end, high values the dark end.
const RAMP: [&str; 8] = [
    "#ffffcc", "#ffeda0", "#fed976", "#feb24c", "#fd8d3c", "#fc4e2a", "#e31a1c", "#b10026",
];

const CELL: f64 = 64.0;
const MARGIN_LEFT: f64 = 78.0;
const MARGIN_TOP: f64 = 46.0;
const MARGIN_RIGHT: f64 = 24.0;
const MARGIN_BOTTOM: f64 = 64.0;

/// Maps an objective value to one of the eight ramp steps.
fn bucket(value: f64, min: f64, max: f64) -> usize {
    let span = max - min;
    if span <= 0.0 {
        return 0;
    }
    (((value - min) / span) * 8.0).floor().clamp(0.0, 7.0) as usize
}

/// Renders the heatmap. Axis 1 (supplier 1 reliability) runs left to
/// right; axis 2 (supplier 2 reliability) runs bottom to top. Each cell
/// is labeled with its optimal order vector `q1,q2`.
pub fn heatmap_svg(map: &Heatmap) -> String {
    let n1 = map.axis1.len();
    let n2 = map.axis2.len();
    let width = MARGIN_LEFT + CELL * n1 as f64 + MARGIN_RIGHT;
    let height = MARGIN_TOP + CELL * n2 as f64 + MARGIN_BOTTOM;

    let values: Vec<f64> = map.objective.iter().flatten().copied().collect();
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);

    let mut svg = format!(
        concat!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" ",
            "width=\"{w:.0}\" height=\"{h:.0}\" ",
            "viewBox=\"0 0 {w:.0} {h:.0}\" ",
            "font-family=\"ui-monospace, Menlo, Consolas, monospace\">\n"
        ),
        w = width,
        h = height
    );
    svg.push_str(&format!(
        "  <rect x=\"0\" y=\"0\" width=\"{width:.0}\" height=\"{height:.0}\" fill=\"#ffffff\"/>\n"
    ));
    svg.push_str(&format!(
        "  <text x=\"{MARGIN_LEFT:.0}\" y=\"24\" font-size=\"15\" fill=\"#1a1a1a\">\
            best expected profit by supplier reliability</text>\n"
    ));
    svg.push_str(&format!(
        "  <text x=\"{:.0}\" y=\"24\" font-size=\"11\" fill=\"#555555\" text-anchor=\"end\">\
            range {:.4} to {:.4}</text>\n",
        width - MARGIN_RIGHT,
        min,
        max
    ));

    for (i, _) in map.axis1.iter().enumerate() {
        for (j, _) in map.axis2.iter().enumerate() {
            let x = MARGIN_LEFT + CELL * i as f64;
            // Row j = 0 sits at the bottom of the grid.
            let y = MARGIN_TOP + CELL * (n2 - 1 - j) as f64;
            let b = bucket(map.objective[i][j], min, max);
            let q = map.decision[i][j].q();
            let text_fill = if b >= 5 { "#ffffff" } else { "#1a1a1a" };
            svg.push_str(&format!(
                "  <rect x=\"{x:.0}\" y=\"{y:.0}\" width=\"{CELL:.0}\" height=\"{CELL:.0}\" \
                 fill=\"{}\" stroke=\"#ffffff\" stroke-width=\"1\"/>\n",
                RAMP[b]
            ));
            svg.push_str(&format!(
                "  <text x=\"{:.0}\" y=\"{:.0}\" font-size=\"13\" fill=\"{text_fill}\" \
                 text-anchor=\"middle\" dominant-baseline=\"middle\">{},{}</text>\n",
                x + CELL / 2.0,
                y + CELL / 2.0,
                q[0],
                q[1]
            ));
        }
    }

    for (i, &r1) in map.axis1.iter().enumerate() {
        svg.push_str(&format!(
            "  <text x=\"{:.0}\" y=\"{:.0}\" font-size=\"11\" fill=\"#1a1a1a\" \
             text-anchor=\"middle\">{r1:.2}</text>\n",
            MARGIN_LEFT + CELL * (i as f64 + 0.5),
            MARGIN_TOP + CELL * n2 as f64 + 16.0
        ));
    }
    for (j, &r2) in map.axis2.iter().enumerate() {
        svg.push_str(&format!(
            "  <text x=\"{:.0}\" y=\"{:.0}\" font-size=\"11\" fill=\"#1a1a1a\" \
             text-anchor=\"end\" dominant-baseline=\"middle\">{r2:.2}</text>\n",
            MARGIN_LEFT - 8.0,
            MARGIN_TOP + CELL * (n2 - 1 - j) as f64 + CELL / 2.0
        ));
    }

    svg.push_str(&format!(
        "  <text x=\"{:.0}\" y=\"{:.0}\" font-size=\"12\" fill=\"#1a1a1a\" \
         text-anchor=\"middle\">supplier 1 reliability r1</text>\n",
        MARGIN_LEFT + CELL * n1 as f64 / 2.0,
        MARGIN_TOP + CELL * n2 as f64 + 40.0
    ));
    let y_mid = MARGIN_TOP + CELL * n2 as f64 / 2.0;
    svg.push_str(&format!(
        "  <text x=\"18\" y=\"{y_mid:.0}\" font-size=\"12\" fill=\"#1a1a1a\" \
         text-anchor=\"middle\" transform=\"rotate(-90 18 {y_mid:.0})\">\
         supplier 2 reliability r2</text>\n"
    ));
    svg.push_str("</svg>\n");
    svg
}
