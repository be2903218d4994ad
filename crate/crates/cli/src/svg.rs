//! Static SVG views of a run. They are drawn from the report alone and
//! carry no numbers that results.json does not already hold.

use std::fmt::Write;

use anoht::anoht_tree::AuthenticityReport;
use anoht::model::{ChildRef, EdgeMark, GappedHistogram};

use crate::analysis::DessRow;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 360.0;
const MARGIN: f64 = 48.0;
const PALETTE: [&str; 8] = [
    "#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f", "#edc948", "#b07aa1", "#9c755f",
];

struct Canvas {
    body: String,
    width: f64,
    height: f64,
}

impl Canvas {
    fn new(width: f64, height: f64) -> Self {
        Canvas {
            body: String::new(),
            width,
            height,
        }
    }

    fn rect(&mut self, x: f64, y: f64, w: f64, h: f64, fill: &str, extra: &str) {
        let _ = writeln!(
            self.body,
            r#"<rect x="{x:.2}" y="{y:.2}" width="{:.2}" height="{:.2}" fill="{fill}" {extra}/>"#,
            w.max(0.0),
            h.max(0.0)
        );
    }

    fn line(&mut self, x1: f64, y1: f64, x2: f64, y2: f64, style: &str) {
        let _ = writeln!(
            self.body,
            r#"<line x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}" {style}/>"#
        );
    }

    fn polyline(&mut self, pts: &[(f64, f64)], style: &str) {
        let pts: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
        let _ = writeln!(self.body, r#"<polyline points="{}" fill="none" {style}/>"#, pts.join(" "));
    }

    fn text(&mut self, x: f64, y: f64, anchor: &str, s: &str) {
        let s = s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;");
        let _ = writeln!(
            self.body,
            r#"<text x="{x:.2}" y="{y:.2}" text-anchor="{anchor}" font-size="11" font-family="sans-serif">{s}</text>"#
        );
    }

    fn finish(self) -> String {
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n\
             <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n{}</svg>\n",
            self.body,
            w = self.width,
            h = self.height
        )
    }
}

/// Linear map from `[lo, hi]` onto `[a, b]`.
fn scale(lo: f64, hi: f64, a: f64, b: f64) -> impl Fn(f64) -> f64 {
    let span = if hi > lo { hi - lo } else { 1.0 };
    move |v| a + (v - lo) / span * (b - a)
}

fn frame(c: &mut Canvas, title: &str) {
    let (w, h) = (c.width, c.height);
    c.line(MARGIN, h - MARGIN, w - MARGIN, h - MARGIN, r#"stroke="black""#);
    c.line(MARGIN, MARGIN, MARGIN, h - MARGIN, r#"stroke="black""#);
    c.text(w / 2.0, MARGIN / 2.0, "middle", title);
}

/// Density histogram with bars stacked by treatment (when `stacks` is
/// given, one row of bin weights per treatment), the piecewise-linear
/// cumulative curve through the bin edges, and dashed bin separators.
pub fn histogram(hist: &GappedHistogram, weights: &[f64], stacks: Option<(&[String], &[Vec<f64>])>, title: &str) -> String {
    let mut c = Canvas::new(WIDTH, HEIGHT);
    let edges = hist.edges();
    let total: f64 = weights.iter().sum();
    let density: Vec<f64> = hist
        .bins
        .iter()
        .zip(weights)
        .map(|(b, &w)| if b.width() > 0.0 && total > 0.0 { w / total / b.width() } else { 0.0 })
        .collect();
    let top = density.iter().cloned().fold(0.0, f64::max);
    let x = scale(edges[0], edges[edges.len() - 1], MARGIN, WIDTH - MARGIN);
    let y = scale(0.0, if top > 0.0 { top } else { 1.0 }, HEIGHT - MARGIN, MARGIN);
    let y_cdf = scale(0.0, 1.0, HEIGHT - MARGIN, MARGIN);
    for (k, bin) in hist.bins.iter().enumerate() {
        let (x0, x1) = (x(bin.a), x(bin.b));
        match stacks {
            Some((_, rows)) => {
                let mut base = 0.0;
                for (j, row) in rows.iter().enumerate() {
                    let share = if weights[k] > 0.0 { row[k] / weights[k] } else { 0.0 };
                    let h = density[k] * share;
                    c.rect(x0, y(base + h), x1 - x0, y(base) - y(base + h), PALETTE[j % PALETTE.len()], r#"stroke="white""#);
                    base += h;
                }
            }
            None => c.rect(x0, y(density[k]), x1 - x0, y(0.0) - y(density[k]), PALETTE[0], r#"stroke="white""#),
        }
        if bin.right_gap == EdgeMark::Gap {
            let next = hist.bins[k + 1].a;
            c.rect(x1, MARGIN, x(next) - x1, HEIGHT - 2.0 * MARGIN, "#dddddd", r#"opacity="0.5""#);
        }
    }
    for &e in &edges {
        c.line(x(e), MARGIN, x(e), HEIGHT - MARGIN, r#"stroke="gray" stroke-dasharray="4 3""#);
    }
    let mut cum = 0.0;
    let mut pts = vec![(x(edges[0]), y_cdf(0.0))];
    for (bin, &w) in hist.bins.iter().zip(weights) {
        cum += if total > 0.0 { w / total } else { 0.0 };
        pts.push((x(bin.b), y_cdf(cum)));
    }
    c.polyline(&pts, r#"stroke="black" stroke-width="1.5""#);
    if let Some((names, _)) = stacks {
        for (j, name) in names.iter().enumerate() {
            let ly = MARGIN + 14.0 * j as f64;
            c.rect(WIDTH - MARGIN - 110.0, ly - 9.0, 10.0, 10.0, PALETTE[j % PALETTE.len()], "");
            c.text(WIDTH - MARGIN - 95.0, ly, "start", name);
        }
    }
    c.text(MARGIN, HEIGHT - MARGIN + 16.0, "start", &format!("{:.3}", edges[0]));
    c.text(WIDTH - MARGIN, HEIGHT - MARGIN + 16.0, "end", &format!("{:.3}", edges[edges.len() - 1]));
    frame(&mut c, title);
    c.finish()
}

/// Per-bin decoding error as bars, each with its `(b - a)^2 / 3` reference.
pub fn dess_bars(rows: &[DessRow], title: &str) -> String {
    let mut c = Canvas::new(WIDTH, HEIGHT);
    let top = rows
        .iter()
        .flat_map(|r| [r.dess, r.reference])
        .fold(0.0, f64::max);
    let y = scale(0.0, if top > 0.0 { top } else { 1.0 }, HEIGHT - MARGIN, MARGIN);
    let slot = (WIDTH - 2.0 * MARGIN) / rows.len().max(1) as f64;
    for (k, r) in rows.iter().enumerate() {
        let x0 = MARGIN + slot * (k as f64 + 0.15);
        let w = slot * 0.7;
        let fill = if r.accepted { PALETTE[0] } else { PALETTE[2] };
        c.rect(x0, y(r.dess), w, y(0.0) - y(r.dess), fill, "");
        c.line(x0 - slot * 0.1, y(r.reference), x0 + w + slot * 0.1, y(r.reference), r#"stroke="black" stroke-width="2""#);
        c.text(x0 + w / 2.0, HEIGHT - MARGIN + 14.0, "middle", &(k + 1).to_string());
    }
    frame(&mut c, title);
    c.finish()
}

/// Heatmap of treatment rows ordered by the treatment tree, with the tree
/// drawn on the left and each branch labelled by its authenticity index.
pub fn heatmap_tree(rows: &[Vec<f64>], report: &AuthenticityReport, title: &str) -> String {
    let tree = &report.tree;
    let j = rows.len();
    let k = rows.first().map_or(0, Vec::len);
    let cell_h = 22.0;
    let height = 2.0 * MARGIN + cell_h * j as f64;
    let mut c = Canvas::new(WIDTH, height);
    let tree_w = 220.0;
    let label_w = 90.0;
    let heat_x = MARGIN + tree_w + label_w;
    let cell_w = (WIDTH - MARGIN - heat_x) / k.max(1) as f64;
    let top = rows.iter().flatten().cloned().fold(0.0, f64::max);
    let order = tree.leaf_order();
    let leaf_y = |pos: usize| MARGIN + cell_h * (pos as f64 + 0.5);
    for (pos, &leaf) in order.iter().enumerate() {
        for (b, &v) in rows[leaf].iter().enumerate() {
            let t = if top > 0.0 { (v / top).clamp(0.0, 1.0) } else { 0.0 };
            let shade = (255.0 * (1.0 - t)).round() as u8;
            let fill = format!("rgb({shade},{shade},255)");
            c.rect(heat_x + cell_w * b as f64, MARGIN + cell_h * pos as f64, cell_w, cell_h, &fill, r#"stroke="white""#);
        }
        c.text(heat_x - 6.0, leaf_y(pos) + 4.0, "end", &report.treatment_names[leaf]);
    }
    let max_h = tree.nodes().last().map_or(1.0, |n| n.height).max(f64::MIN_POSITIVE);
    let hx = scale(0.0, max_h, MARGIN + tree_w, MARGIN);
    let mut node_pos = Vec::with_capacity(tree.nodes().len());
    let place = |r: ChildRef, node_pos: &[(f64, f64)]| match r {
        ChildRef::Leaf(_) => (hx(0.0), leaf_y(tree.span(r).start)),
        ChildRef::Node(m) => node_pos[m],
    };
    for (m, node) in tree.nodes().iter().enumerate() {
        let (lx, ly) = place(node.left, &node_pos);
        let (rx, ry) = place(node.right, &node_pos);
        let x = hx(node.height);
        c.line(lx, ly, x, ly, r#"stroke="black""#);
        c.line(rx, ry, x, ry, r#"stroke="black""#);
        c.line(x, ly, x, ry, r#"stroke="black""#);
        if let Some(a) = report.nodes.iter().find(|a| a.node == m) {
            c.text(x - 3.0, (ly + ry) / 2.0 - 3.0, "end", &format!("{:.0}%", 100.0 * a.index));
        }
        node_pos.push((x, (ly + ry) / 2.0));
    }
    frame(&mut c, title);
    c.finish()
}
