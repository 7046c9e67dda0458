//! SVG rendering of the train and test curves of a run directory.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use log::warn;

use enr_elm::dataset::{read_error_curve_csv, CurveFile};
use enr_elm::{Error, Result};

use crate::output::{create_dir, write_text};

const PANEL_W: f64 = 440.0;
const PANEL_H: f64 = 300.0;
const MARGIN: f64 = 50.0;
const WIDTH: f64 = 2.0 * PANEL_W + 3.0 * MARGIN;
const HEIGHT: f64 = PANEL_H + 2.0 * MARGIN + 30.0;

const A_COLOR: &str = "#1f77b4";
const I_COLOR: &str = "#d62728";
const ELM_COLOR: &str = "#2ca02c";

/// Curves of one dataset as read back from its run directory.
#[derive(Clone, Debug)]
pub struct PlotData {
    pub name: String,
    pub a_enr: CurveFile,
    pub i_enr: CurveFile,
    pub elm: CurveFile,
    pub elm_train: Option<CurveFile>,
    /// Number of neurons I-ENR-ELM fitted before stopping.
    pub stop_index: usize,
}

/// Reads `a_enr.csv`, `i_enr.csv` and `elm.csv` from `dir`; `None` when absent.
pub fn load_plot_data(dir: &Path) -> Result<Option<PlotData>> {
    let files = ["a_enr.csv", "i_enr.csv", "elm.csv"];
    if !files.iter().all(|f| dir.join(f).is_file()) {
        return Ok(None);
    }
    let a_enr = read_error_curve_csv(&dir.join("a_enr.csv"))?;
    let i_enr = read_error_curve_csv(&dir.join("i_enr.csv"))?;
    let elm = read_error_curve_csv(&dir.join("elm.csv"))?;
    let train_path = dir.join("elm_train_band.csv");
    let elm_train = if train_path.is_file() {
        Some(read_error_curve_csv(&train_path)?)
    } else {
        None
    };
    let stop_index = match i_enr.meta_value("stop_index") {
        Some(v) => v
            .parse()
            .map_err(|_| Error::Data(format!("{}: bad stop_index {v:?}", dir.display())))?,
        None => i_enr.len(),
    };
    let name = dir
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "run".into());
    Ok(Some(PlotData {
        name,
        a_enr,
        i_enr,
        elm,
        elm_train,
        stop_index,
    }))
}

struct Frame {
    x0: f64,
    y0: f64,
    n_max: usize,
    y_max: f64,
}

impl Frame {
    fn x(&self, n: usize) -> f64 {
        let span = (self.n_max.max(2) - 1) as f64;
        self.x0 + (n.saturating_sub(1)) as f64 / span * PANEL_W
    }

    fn y(&self, v: f64) -> f64 {
        let v = if v.is_finite() { v.clamp(0.0, self.y_max) } else { self.y_max };
        self.y0 + PANEL_H - v / self.y_max * PANEL_H
    }

    fn points(&self, first_n: usize, vals: &[f64]) -> String {
        let mut s = String::new();
        for (k, &v) in vals.iter().enumerate() {
            if k > 0 {
                s.push(' ');
            }
            let _ = write!(s, "{:.2},{:.2}", self.x(first_n + k), self.y(v));
        }
        s
    }
}

/// x coordinate of neuron count `n` in the panel whose left edge is `x0`.
pub fn x_coordinate(x0: f64, n_max: usize, n: usize) -> f64 {
    Frame {
        x0,
        y0: 0.0,
        n_max,
        y_max: 1.0,
    }
    .x(n)
}

/// Left edges of the train and test panels.
pub const PANEL_X: [f64; 2] = [MARGIN, 2.0 * MARGIN + PANEL_W];

fn panel(svg: &mut String, f: &Frame, title: &str, a: &[f64], i: &[f64], elm: &[f64], band: Option<(&[f64], &[f64])>, stop: usize) {
    let _ = writeln!(
        svg,
        r##"<rect x="{:.2}" y="{:.2}" width="{PANEL_W}" height="{PANEL_H}" fill="none" stroke="#444"/>"##,
        f.x0, f.y0
    );
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="14">{title}</text>"#,
        f.x0 + PANEL_W / 2.0,
        f.y0 - 10.0
    );
    for k in 0..=4 {
        let v = f.y_max * k as f64 / 4.0;
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end" font-size="10">{v:.2}</text>"#,
            f.x0 - 4.0,
            f.y(v) + 3.0
        );
    }
    for n in [1, f.n_max.div_ceil(2), f.n_max] {
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="10">{n}</text>"#,
            f.x(n),
            f.y0 + PANEL_H + 14.0
        );
    }
    if let Some((lo, hi)) = band {
        let mut pts = f.points(1, lo);
        let rev: Vec<f64> = hi.iter().rev().copied().collect();
        for (k, &v) in rev.iter().enumerate() {
            let n = hi.len() - k;
            let _ = write!(pts, " {:.2},{:.2}", f.x(n), f.y(v));
        }
        let _ = writeln!(
            svg,
            r#"<polygon class="elm-band" points="{pts}" fill="{ELM_COLOR}" fill-opacity="0.2" stroke="none"/>"#
        );
    }
    let line = |svg: &mut String, class: &str, color: &str, first: usize, vals: &[f64], dash: bool| {
        if vals.is_empty() {
            return;
        }
        let dash = if dash { r#" stroke-dasharray="6,4""# } else { "" };
        let _ = writeln!(
            svg,
            r#"<polyline class="{class}" points="{}" fill="none" stroke="{color}" stroke-width="1.5"{dash}/>"#,
            f.points(first, vals)
        );
    };
    line(svg, "elm", ELM_COLOR, 1, elm, false);
    line(svg, "a_enr", A_COLOR, 1, a, false);
    let stop = stop.min(i.len());
    if stop >= 1 {
        line(svg, "i_enr", I_COLOR, 1, &i[..stop], false);
    }
    if stop < i.len() {
        // The dashed tail starts at the last fitted point.
        let from = stop.max(1);
        line(svg, "i_enr-tail", I_COLOR, from, &i[from - 1..], true);
    }
}

pub fn render_svg(d: &PlotData) -> String {
    let n_max = d.a_enr.len().max(d.i_enr.len()).max(d.elm.len()).max(1);
    let mut y_max: f64 = 1.0;
    let all = [&d.a_enr.train, &d.a_enr.test, &d.i_enr.train, &d.i_enr.test, &d.elm.train, &d.elm.test];
    for v in all.iter().flat_map(|c| c.iter()) {
        if v.is_finite() {
            y_max = y_max.max(*v);
        }
    }
    if let Some([_, _, hi]) = &d.elm.band {
        for v in hi.iter().filter(|v| v.is_finite()) {
            y_max = y_max.max(*v);
        }
    }
    let y_max = (y_max * 10.0).ceil() / 10.0;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="20" text-anchor="middle" font-size="15">{}</text>"#,
        WIDTH / 2.0,
        escape(&d.name)
    );
    let train_band = d
        .elm_train
        .as_ref()
        .and_then(|c| c.band.as_ref())
        .map(|b| (b[1].as_slice(), b[2].as_slice()));
    let test_band = d.elm.band.as_ref().map(|b| (b[1].as_slice(), b[2].as_slice()));
    for (k, (title, a, i, e, band)) in [
        ("Training error", &d.a_enr.train, &d.i_enr.train, &d.elm.train, train_band),
        ("Test error", &d.a_enr.test, &d.i_enr.test, &d.elm.test, test_band),
    ]
    .into_iter()
    .enumerate()
    {
        let f = Frame {
            x0: PANEL_X[k],
            y0: MARGIN,
            n_max,
            y_max,
        };
        panel(&mut svg, &f, title, a, i, e, band, d.stop_index);
    }
    let ly = HEIGHT - 18.0;
    for (k, (label, color)) in [("A-ENR-ELM", A_COLOR), ("I-ENR-ELM", I_COLOR), ("ELM (mean, min-max)", ELM_COLOR)]
        .iter()
        .enumerate()
    {
        let x = MARGIN + k as f64 * 200.0;
        let _ = writeln!(
            svg,
            r#"<line x1="{x:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/>"#,
            x + 24.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" font-size="12">{label}</text>"#,
            x + 30.0,
            ly + 4.0
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Renders one SVG per run directory into `outdir`.
pub fn plot_dirs(dirs: &[PathBuf], outdir: &Path) -> Result<Vec<PathBuf>> {
    let mut data = Vec::new();
    for d in dirs {
        match load_plot_data(d)? {
            Some(p) => data.push(p),
            None => warn!("{}: no curve files, skipped", d.display()),
        }
    }
    if data.is_empty() {
        warn!("no curves to plot");
        return Ok(Vec::new());
    }
    create_dir(outdir)?;
    let mut out = Vec::new();
    for d in &data {
        let p = outdir.join(format!("{}.svg", d.name));
        write_text(&p, &render_svg(d))?;
        out.push(p);
    }
    Ok(out)
}
