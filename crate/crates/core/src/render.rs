//! Circuit diagrams: a fold-based grid rendered as SVG or TikZ.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::circuit::Circuit;
use crate::error::Result;
use crate::gates::{Draw, GateKind, Side};
use crate::ket::QubitId;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Cell {
    Box(String),
    /// Box covering rows `top..=bottom`, drawn once at `top`.
    Span { text: String, top: usize, bottom: usize },
    Ctrl,
    /// Control on a measured (classical) bit.
    ClassicalCtrl,
    Targ,
    Meter,
}

/// One circuit leaf placed in a column.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Placement {
    pub cells: Vec<(usize, Cell)>,
    /// Vertical connector between these rows, double when classical.
    pub connector: Option<(usize, usize, bool)>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LayoutGrid {
    /// Wire shown on each row.
    pub rows: Vec<QubitId>,
    pub columns: Vec<Vec<Placement>>,
    pub left: Vec<Option<String>>,
    pub right: Vec<Option<String>>,
    /// First column from which the row is a classical wire.
    pub classical_from: Vec<Option<usize>>,
}

fn span(text: &str, rows: &[usize]) -> Cell {
    let top = *rows.iter().min().expect("rows");
    let bottom = *rows.iter().max().expect("rows");
    if top == bottom {
        Cell::Box(text.to_string())
    } else {
        Cell::Span { text: text.to_string(), top, bottom }
    }
}

fn connector(rows: &[usize], classical: bool) -> Option<(usize, usize, bool)> {
    let top = *rows.iter().min()?;
    let bottom = *rows.iter().max()?;
    (top != bottom).then_some((top, bottom, classical))
}

fn draw_cells(draw: &Draw, rows: &[usize], out: &mut Vec<(usize, Cell)>) {
    match draw {
        Draw::Box(s) if rows.len() == 1 => out.push((rows[0], Cell::Box(s.clone()))),
        Draw::Box(s) | Draw::Span(s) | Draw::Label(s) => {
            out.push((*rows.iter().min().expect("rows"), span(s, rows)))
        }
        Draw::Targ => out.extend(rows.iter().map(|&r| (r, Cell::Targ))),
        Draw::Meter => out.extend(rows.iter().map(|&r| (r, Cell::Meter))),
        Draw::Ctrl { controls, base } => {
            let k = (*controls).min(rows.len());
            out.extend(rows[..k].iter().map(|&r| (r, Cell::Ctrl)));
            draw_cells(base, &rows[k..], out);
        }
    }
}

fn body_text(body: &Circuit) -> String {
    let names: Vec<String> = body
        .leaves()
        .iter()
        .filter_map(|l| match l {
            Circuit::Apply(op) => Some(op.gate.name.clone()),
            Circuit::Wrap { gate, .. } => Some(gate.name.clone()),
            _ => None,
        })
        .collect();
    names.join(" ")
}

impl LayoutGrid {
    /// Lay out `c` column by column as its fold; labels go to the margins.
    pub fn new(c: &Circuit) -> LayoutGrid {
        let rows = c.wires();
        let row_of = |w: QubitId| rows.binary_search(&w).expect("wire of circuit");
        let mut grid = LayoutGrid {
            left: vec![None; rows.len()],
            right: vec![None; rows.len()],
            classical_from: vec![None; rows.len()],
            rows: rows.clone(),
            columns: Vec::new(),
        };
        let mut body = Vec::new();
        for leaf in c.flatten().leaves() {
            if let Circuit::Apply(op) = leaf {
                if let GateKind::Label { text, side } = &op.gate.kind {
                    let r = row_of(op.wires[0]);
                    let slot = match side {
                        Side::Left => &mut grid.left[r],
                        Side::Right => &mut grid.right[r],
                    };
                    *slot = Some(match slot.take() {
                        Some(prev) => format!("{prev} {text}"),
                        None => text.clone(),
                    });
                    continue;
                }
            }
            body.push(leaf.clone());
        }
        let Circuit::Seq(cols) = Circuit::Seq(body).fold() else {
            unreachable!("fold returns a Seq")
        };
        for (ci, col) in cols.iter().enumerate() {
            let Circuit::Par(items) = col else { unreachable!("fold columns are Par") };
            let mut placed = Vec::new();
            for item in items {
                let mut cells = Vec::new();
                let conn = match item {
                    Circuit::Apply(op) => {
                        let rs: Vec<usize> = op.wires.iter().map(|&w| row_of(w)).collect();
                        draw_cells(&op.gate.draw, &rs, &mut cells);
                        if matches!(op.gate.kind, GateKind::Measure) {
                            for &r in &rs {
                                grid.classical_from[r].get_or_insert(ci + 1);
                            }
                        }
                        match op.gate.draw {
                            Draw::Ctrl { .. } => connector(&rs, false),
                            _ => None,
                        }
                    }
                    Circuit::BitCon { ctrls, body, .. } => {
                        let cr: Vec<usize> = ctrls.iter().map(|&w| row_of(w)).collect();
                        cells.extend(cr.iter().map(|&r| (r, Cell::ClassicalCtrl)));
                        let br: Vec<usize> = body.wires().iter().map(|&w| row_of(w)).collect();
                        match body.leaves().as_slice() {
                            [Circuit::Apply(op)] => {
                                let rs: Vec<usize> = op.wires.iter().map(|&w| row_of(w)).collect();
                                draw_cells(&op.gate.draw, &rs, &mut cells);
                            }
                            _ => cells.push((br[0], span(&body_text(body), &br))),
                        }
                        let mut all = cr;
                        all.extend(br);
                        connector(&all, true)
                    }
                    Circuit::Wrap { gate, wires, .. } => {
                        let rs: Vec<usize> = wires.iter().map(|&w| row_of(w)).collect();
                        cells.push((*rs.iter().min().expect("wires"), span(&gate.name, &rs)));
                        None
                    }
                    Circuit::Seq(_) | Circuit::Par(_) => unreachable!("leaves only"),
                };
                placed.push(Placement { cells, connector: conn });
            }
            grid.columns.push(placed);
        }
        grid
    }

    pub fn is_classical(&self, row: usize, col: usize) -> bool {
        self.classical_from[row].is_some_and(|c| col >= c)
    }

    /// Split into pieces of at most `max_columns` columns.
    pub fn pages(&self, max_columns: usize) -> Vec<LayoutGrid> {
        let width = max_columns.max(1);
        if self.columns.len() <= width {
            return vec![self.clone()];
        }
        self.columns
            .chunks(width)
            .enumerate()
            .map(|(i, chunk)| {
                let start = i * width;
                LayoutGrid {
                    rows: self.rows.clone(),
                    columns: chunk.to_vec(),
                    left: if i == 0 { self.left.clone() } else { vec![None; self.rows.len()] },
                    right: if start + chunk.len() == self.columns.len() {
                        self.right.clone()
                    } else {
                        vec![None; self.rows.len()]
                    },
                    classical_from: self
                        .classical_from
                        .iter()
                        .map(|c| c.map(|c| c.saturating_sub(start)))
                        .collect(),
                }
            })
            .collect()
    }
}

const COL_W: f64 = 48.0;
const ROW_H: f64 = 40.0;
const BOX: f64 = 28.0;
const CHAR_W: f64 = 9.0;

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// TeX-ish label text in plain characters for SVG.
fn plain(s: &str) -> String {
    let mut out = s.to_string();
    while let Some(i) = out.find("\\ket{") {
        let Some(j) = out[i..].find('}') else { break };
        let inner = out[i + 5..i + j].to_string();
        out.replace_range(i..=i + j, &format!("|{inner}⟩"));
    }
    esc(&out)
}

fn label_width(labels: &[Option<String>]) -> f64 {
    let chars = labels.iter().flatten().map(|s| s.chars().count()).max().unwrap_or(0);
    12.0 + chars as f64 * CHAR_W
}

/// SVG 1.1 document for the grid.
pub fn to_svg(grid: &LayoutGrid) -> String {
    let left = label_width(&grid.left);
    let right = label_width(&grid.right);
    let ncols = grid.columns.len();
    let mut edges = vec![left + COL_W / 2.0];
    for col in &grid.columns {
        edges.push(edges[edges.len() - 1] + column_width(col));
    }
    let x_end = edges[ncols] + COL_W / 2.0;
    let width = x_end + right;
    let height = (grid.rows.len().max(1) as f64 + 0.5) * ROW_H;
    let x_of = |c: usize| (edges[c] + edges[c + 1]) / 2.0;
    let y_of = |r: usize| (r as f64 + 0.75) * ROW_H;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="serif" font-size="14">"#
    );
    let _ = writeln!(s, r#"<g stroke="black" stroke-width="1" fill="none">"#);
    for r in 0..grid.rows.len() {
        let y = y_of(r);
        let split = grid.classical_from[r].map_or(x_end, |c| edges.get(c).copied().unwrap_or(x_end));
        let _ = writeln!(s, r#"<line x1="{left:.1}" y1="{y:.1}" x2="{split:.1}" y2="{y:.1}"/>"#);
        if split < x_end {
            for dy in [-1.5, 1.5] {
                let _ = writeln!(
                    s,
                    r#"<line x1="{split:.1}" y1="{:.1}" x2="{x_end:.1}" y2="{:.1}"/>"#,
                    y + dy,
                    y + dy
                );
            }
        }
    }
    for (ci, col) in grid.columns.iter().enumerate() {
        let x = x_of(ci);
        for p in col {
            if let Some((top, bottom, classical)) = p.connector {
                let offsets: &[f64] = if classical { &[-1.5, 1.5] } else { &[0.0] };
                for dx in offsets {
                    let _ = writeln!(
                        s,
                        r#"<line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}"/>"#,
                        x + dx,
                        y_of(top),
                        x + dx,
                        y_of(bottom)
                    );
                }
            }
        }
    }
    let _ = writeln!(s, "</g>");
    for (ci, col) in grid.columns.iter().enumerate() {
        let x = x_of(ci);
        for p in col {
            for (r, cell) in &p.cells {
                svg_cell(&mut s, cell, x, y_of(*r), y_of);
            }
        }
    }
    for (r, l) in grid.left.iter().enumerate() {
        if let Some(t) = l {
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="end" dominant-baseline="middle">{}</text>"#,
                left - 4.0,
                y_of(r),
                plain(t)
            );
        }
    }
    for (r, l) in grid.right.iter().enumerate() {
        if let Some(t) = l {
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}" dominant-baseline="middle">{}</text>"#,
                x_end + 4.0,
                y_of(r),
                plain(t)
            );
        }
    }
    s.push_str("</svg>\n");
    s
}

fn box_width(text: &str) -> f64 {
    BOX.max(text.chars().count() as f64 * CHAR_W + 10.0)
}

fn column_width(col: &[Placement]) -> f64 {
    col.iter()
        .flat_map(|p| &p.cells)
        .map(|(_, cell)| match cell {
            Cell::Box(t) | Cell::Span { text: t, .. } => box_width(t) + 20.0,
            _ => COL_W,
        })
        .fold(COL_W, f64::max)
}

fn svg_box(s: &mut String, x: f64, y0: f64, y1: f64, text: &str) {
    let w = box_width(text);
    let _ = writeln!(
        s,
        r#"<rect x="{:.1}" y="{:.1}" width="{w:.1}" height="{:.1}" fill="white" stroke="black"/>"#,
        x - w / 2.0,
        y0 - BOX / 2.0,
        y1 - y0 + BOX
    );
    let _ = writeln!(
        s,
        r#"<text x="{x:.1}" y="{:.1}" text-anchor="middle" dominant-baseline="middle">{}</text>"#,
        (y0 + y1) / 2.0,
        esc(text)
    );
}

fn svg_cell(s: &mut String, cell: &Cell, x: f64, y: f64, y_of: impl Fn(usize) -> f64) {
    match cell {
        Cell::Box(t) => svg_box(s, x, y, y, t),
        Cell::Span { text, top, bottom } => svg_box(s, x, y_of(*top), y_of(*bottom), text),
        Cell::Ctrl => {
            let _ = writeln!(s, r#"<circle cx="{x:.1}" cy="{y:.1}" r="4" fill="black"/>"#);
        }
        Cell::ClassicalCtrl => {
            let _ = writeln!(
                s,
                r#"<circle cx="{x:.1}" cy="{y:.1}" r="4" fill="white" stroke="black"/>"#
            );
        }
        Cell::Targ => {
            let _ = writeln!(
                s,
                r#"<circle cx="{x:.1}" cy="{y:.1}" r="9" fill="white" stroke="black"/>"#
            );
            let _ = writeln!(
                s,
                r#"<path d="M {:.1} {y:.1} H {:.1} M {x:.1} {:.1} V {:.1}" stroke="black"/>"#,
                x - 9.0,
                x + 9.0,
                y - 9.0,
                y + 9.0
            );
        }
        Cell::Meter => {
            svg_box(s, x, y, y, "");
            let _ = writeln!(
                s,
                r#"<path d="M {:.1} {:.1} A 9 9 0 0 1 {:.1} {:.1} M {x:.1} {:.1} L {:.1} {:.1}" stroke="black" fill="none"/>"#,
                x - 9.0,
                y + 5.0,
                x + 9.0,
                y + 5.0,
                y + 5.0,
                x + 7.0,
                y - 8.0
            );
        }
    }
}

/// Gate text in TeX: `†` becomes `^\dagger`.
fn tex(s: &str) -> String {
    s.replace('†', "^\\dagger")
}

/// Macros used by `to_tikz` output.
pub const TIKZ_PREAMBLE: &str = r"\usetikzlibrary{matrix,backgrounds}
\pgfdeclarelayer{background}\pgfsetlayers{background,main}
\tikzset{matStyle/.style={matrix of nodes,column sep=4pt,row sep=8pt,nodes={minimum size=0pt}}}
\newcommand{\point}[1][]{|(#1)| {}}
\newcommand{\lbl}[2][]{|(#1)[anchor=east]| {$#2$}}
\newcommand{\rlbl}[2][]{|(#1)[anchor=west]| {$#2$}}
\newcommand{\gate}[2][]{|(#1)[draw,fill=white,minimum size=14pt]| {$#2$}}
\newcommand{\mgate}[3][]{|(#1)[draw,fill=white,minimum size=14pt]| {$#3$}}
\newcommand{\ctrl}[1][]{|(#1)[circle,fill,inner sep=1.5pt]| {}}
\newcommand{\cctrl}[1][]{|(#1)[circle,draw,inner sep=1.5pt]| {}}
\newcommand{\targ}[1][]{|(#1)[circle,draw,inner sep=0pt,minimum size=8pt]| {$+$}}
\newcommand{\meter}[1][]{|(#1)[draw,fill=white,minimum size=14pt]| {$\nearrow$}}
\newcommand{\qw}[2]{\draw (#1) -- (#2);}
\newcommand{\cw}[2]{\draw[double] (#1) -- (#2);}
\newcommand{\qwx}[2]{\draw (#1) -- (#2);}
\newcommand{\cwx}[2]{\draw[double] (#1) -- (#2);}
";

/// TikZ picture with one matrix cell per grid position.
pub fn to_tikz(grid: &LayoutGrid) -> String {
    let ncols = grid.columns.len();
    let first = 2;
    let last = first + ncols;
    let mut table: Vec<Vec<String>> = vec![vec![String::new(); last + 2]; grid.rows.len()];
    for (r, row) in table.iter_mut().enumerate() {
        row[0] = grid.left[r].as_ref().map_or(String::new(), |t| format!("\\lbl[{r}-0]{{{t}}}"));
        row[1] = format!("\\point[{r}-1]");
        row[last] = format!("\\point[{r}-{last}]");
        row[last + 1] = grid.right[r]
            .as_ref()
            .map_or(String::new(), |t| format!("\\rlbl[{r}-{}]{{{t}}}", last + 1));
    }
    let mut links = Vec::new();
    for (ci, col) in grid.columns.iter().enumerate() {
        let c = first + ci;
        for p in col {
            for (r, cell) in &p.cells {
                table[*r][c] = match cell {
                    Cell::Box(t) => format!("\\gate[{r}-{c}]{{{}}}", tex(t)),
                    Cell::Span { text, top, bottom } => {
                        format!("\\mgate[{r}-{c}]{{{}}}{{{}}}", bottom - top + 1, tex(text))
                    }
                    Cell::Ctrl => format!("\\ctrl[{r}-{c}]"),
                    Cell::ClassicalCtrl => format!("\\cctrl[{r}-{c}]"),
                    Cell::Targ => format!("\\targ[{r}-{c}]"),
                    Cell::Meter => format!("\\meter[{r}-{c}]"),
                };
            }
            if let Some((top, bottom, classical)) = p.connector {
                let m = if classical { "cwx" } else { "qwx" };
                links.push(format!("\\{m}{{{top}-{c}}}{{{bottom}-{c}}}"));
            }
        }
    }
    let mut s = String::from("\\begin{tikzpicture}[scale=1.00,every node/.style={scale=0.50}]\n\\matrix[matStyle] {\n");
    for row in &table {
        s.push_str(&row.join(" & "));
        s.push_str(" \\\\\n");
    }
    s.push_str("};\n\\begin{pgfonlayer}{background}\n");
    for r in 0..grid.rows.len() {
        match grid.classical_from[r] {
            Some(cf) if cf < ncols => {
                let split = first + cf;
                s.push_str(&format!("\\qw{{{r}-1}}{{{r}-{split}}} \\cw{{{r}-{split}}}{{{r}-{last}}}\n"));
            }
            _ => s.push_str(&format!("\\qw{{{r}-1}}{{{r}-{last}}}\n")),
        }
    }
    for l in &links {
        s.push_str(l);
        s.push('\n');
    }
    s.push_str("\\end{pgfonlayer}\n\\end{tikzpicture}\n");
    s
}

/// A full standalone TeX document around `to_tikz`.
pub fn to_tex_document(grid: &LayoutGrid) -> String {
    format!(
        "\\documentclass{{standalone}}\n\\usepackage{{tikz}}\n{TIKZ_PREAMBLE}\\begin{{document}}\n{}\\end{{document}}\n",
        to_tikz(grid)
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Svg,
    Tikz,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Svg => "svg",
            Format::Tikz => "tex",
        }
    }
}

/// Write one file per format (and per page when `max_columns` splits the
/// diagram) next to `base`; returns the paths written.
pub fn render(
    c: &Circuit,
    formats: &[Format],
    base: &Path,
    max_columns: Option<usize>,
) -> Result<Vec<PathBuf>> {
    let grid = LayoutGrid::new(c);
    let pages = match max_columns {
        Some(m) => grid.pages(m),
        None => vec![grid],
    };
    let mut written = Vec::new();
    for (i, page) in pages.iter().enumerate() {
        for &f in formats {
            let stem = base.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            let name = if pages.len() > 1 {
                format!("{stem}-{}.{}", i + 1, f.extension())
            } else {
                format!("{stem}.{}", f.extension())
            };
            let path = base.with_file_name(name);
            let text = match f {
                Format::Svg => to_svg(page),
                Format::Tikz => to_tex_document(page),
            };
            std::fs::write(&path, text)?;
            written.push(path);
        }
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::compile;
    use crate::gates::{cnot, h};

    #[test]
    fn empty_circuit_has_no_columns() {
        let g = LayoutGrid::new(&Circuit::default());
        assert!(g.rows.is_empty());
        assert!(g.columns.is_empty());
        assert!(to_svg(&g).starts_with("<svg"));
    }

    #[test]
    fn cnot_has_dot_target_and_connector() {
        let c = compile(|em, qs| {
            em.apply(&h(), &qs[..1])?;
            em.apply(&cnot(), &[qs[1], qs[0]])
        }, &[0, 1])
        .unwrap();
        let g = LayoutGrid::new(&c);
        assert_eq!(g.columns.len(), 2);
        let p = &g.columns[1][0];
        assert_eq!(p.cells, vec![(1, Cell::Ctrl), (0, Cell::Targ)]);
        assert_eq!(p.connector, Some((0, 1, false)));
        let t = to_tikz(&g);
        assert!(t.contains("\\ctrl[1-3]"));
        assert!(t.contains("\\targ[0-3]"));
        assert!(t.contains("\\qwx{0-3}{1-3}"));
    }

    #[test]
    fn plain_labels() {
        assert_eq!(plain("\\ket{0}"), "|0⟩");
        assert_eq!(plain("a<b"), "a&lt;b");
        assert_eq!(tex("R2†"), "R2^\\dagger");
    }

    #[test]
    fn pages_split_columns() {
        let c = compile(|em, qs| {
            for _ in 0..5 {
                em.apply(&h(), &qs[..1])?;
            }
            Ok(())
        }, &[0])
        .unwrap();
        let g = LayoutGrid::new(&c);
        let pages = g.pages(2);
        assert_eq!(pages.iter().map(|p| p.columns.len()).collect::<Vec<_>>(), vec![2, 2, 1]);
    }
}
