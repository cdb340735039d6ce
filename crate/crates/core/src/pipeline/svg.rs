//! Grouped NMI bar charts.
//!
//! Every plotted number is formatted once and the same string goes into the
//! CSV sidecar and the `data-value` attribute of its bar.

use std::fmt::Write as _;

use crate::extract::Animacy;
use crate::info::{NmiValue, Normalizer};

use super::{AnalysisResult, Variable};

/// Variables drawn in the figures; indirect objects are left out because
/// their pair counts are too small to plot meaningfully.
const PLOTTED: [Variable; 3] = [Variable::Amod, Variable::Dobj, Variable::Nsubj];

const PALETTE: [&str; 6] = ["#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f", "#edc948"];

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Figure {
    /// File stem, e.g. `nmi_inanimate`.
    pub name: String,
    pub svg: String,
    pub csv: String,
}

/// A plotted value: a formatted number, or a marker for undefined / N/A.
fn format_value(v: Option<NmiValue>) -> String {
    match v {
        Some(NmiValue::Defined(x)) => format!("{x:.6}"),
        Some(NmiValue::Undefined(_)) => "undefined".into(),
        None => "N/A".into(),
    }
}

fn nmi_value(result: &AnalysisResult, class: Animacy, variable: Variable, normalizer: Normalizer) -> Option<NmiValue> {
    result.cell(class, variable)?.analyzed().map(|(_, nmi)| nmi.get(normalizer))
}

struct Chart {
    title: String,
    groups: Vec<String>,
    series: Vec<String>,
    /// values[group][series]
    values: Vec<Vec<String>>,
}

impl Chart {
    fn csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["group", "series", "value"]).expect("in-memory write");
        for (g, row) in self.groups.iter().zip(&self.values) {
            for (s, v) in self.series.iter().zip(row) {
                w.write_record([g, s, v]).expect("in-memory write");
            }
        }
        String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf-8")
    }

    fn svg(&self) -> String {
        const WIDTH: f64 = 760.0;
        const HEIGHT: f64 = 380.0;
        const LEFT: f64 = 60.0;
        const RIGHT: f64 = 150.0;
        const TOP: f64 = 40.0;
        const BOTTOM: f64 = 50.0;
        let plot_w = WIDTH - LEFT - RIGHT;
        let plot_h = HEIGHT - TOP - BOTTOM;
        let base = TOP + plot_h;

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
        let _ = writeln!(s, r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#, WIDTH / 2.0, escape(&self.title));
        // y axis with ticks at 0, 0.25, ..., 1
        let _ = writeln!(s, r#"<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{base}" stroke="black"/>"#);
        let _ = writeln!(s, r#"<line x1="{LEFT}" y1="{base}" x2="{}" y2="{base}" stroke="black"/>"#, LEFT + plot_w);
        for k in 0..=4 {
            let v = k as f64 / 4.0;
            let y = base - v * plot_h;
            let _ = writeln!(s, r#"<line x1="{}" y1="{y}" x2="{LEFT}" y2="{y}" stroke="black"/>"#, LEFT - 4.0);
            let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{v:.2}</text>"#, LEFT - 6.0, y + 4.0);
        }
        let _ = writeln!(
            s,
            r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">NMI</text>"#,
            TOP + plot_h / 2.0,
            TOP + plot_h / 2.0
        );

        let n_groups = self.groups.len().max(1) as f64;
        let group_w = plot_w / n_groups;
        let bar_w = group_w * 0.8 / self.series.len().max(1) as f64;
        for (gi, (group, row)) in self.groups.iter().zip(&self.values).enumerate() {
            let gx = LEFT + gi as f64 * group_w + group_w * 0.1;
            for (si, (series, value)) in self.series.iter().zip(row).enumerate() {
                let x = gx + si as f64 * bar_w;
                match value.parse::<f64>() {
                    Ok(v) => {
                        let h = v * plot_h;
                        let _ = writeln!(
                            s,
                            r#"<rect x="{x:.2}" y="{:.2}" width="{:.2}" height="{h:.2}" fill="{}" data-group="{}" data-series="{}" data-value="{value}"/>"#,
                            base - h,
                            bar_w,
                            PALETTE[si % PALETTE.len()],
                            escape(group),
                            escape(series),
                        );
                    }
                    Err(_) => {
                        let _ = writeln!(
                            s,
                            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="9" data-group="{}" data-series="{}" data-value="{value}">{value}</text>"#,
                            x + bar_w / 2.0,
                            base - 4.0,
                            escape(group),
                            escape(series),
                        );
                    }
                }
            }
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{}" text-anchor="middle">{}</text>"#,
                gx + group_w * 0.4,
                base + 20.0,
                escape(group)
            );
        }
        for (si, series) in self.series.iter().enumerate() {
            let y = TOP + 10.0 + si as f64 * 18.0;
            let x = WIDTH - RIGHT + 15.0;
            let _ = writeln!(s, r#"<rect x="{x}" y="{}" width="12" height="12" fill="{}"/>"#, y - 10.0, PALETTE[si % PALETTE.len()]);
            let _ = writeln!(s, r#"<text x="{}" y="{y}">{}</text>"#, x + 18.0, escape(series));
        }
        s.push_str("</svg>\n");
        s
    }

    fn into_figure(self, name: String) -> Figure {
        Figure {
            svg: self.svg(),
            csv: self.csv(),
            name,
        }
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// One chart per selected animacy class (six NMI variants per variable) and,
/// when both classes were analysed, one inanimate-vs-animate chart per
/// variable.
pub fn emit_figures(result: &AnalysisResult) -> Vec<Figure> {
    let classes: Vec<Animacy> = [Animacy::Inanimate, Animacy::Animate]
        .into_iter()
        .filter(|c| result.settings.animacy.contains(c))
        .collect();
    let variables: Vec<Variable> = PLOTTED
        .into_iter()
        .filter(|&v| result.cells.iter().any(|c| c.variable == v))
        .collect();
    if variables.is_empty() {
        return Vec::new();
    }
    let normalizers: Vec<String> = Normalizer::ALL.iter().map(|n| n.to_string()).collect();
    let mut figures = Vec::new();
    for &class in &classes {
        let chart = Chart {
            title: format!("NMI between gender and partner lemmata, {class} nouns ({})", result.language),
            groups: variables.iter().map(|v| v.to_string()).collect(),
            series: normalizers.clone(),
            values: variables
                .iter()
                .map(|&v| Normalizer::ALL.iter().map(|&n| format_value(nmi_value(result, class, v, n))).collect())
                .collect(),
        };
        figures.push(chart.into_figure(format!("nmi_{class}")));
    }
    if classes.len() == 2 {
        for &v in &variables {
            let chart = Chart {
                title: format!("NMI, {v}: inanimate vs animate nouns ({})", result.language),
                groups: normalizers.clone(),
                series: classes.iter().map(|c| c.to_string()).collect(),
                values: Normalizer::ALL
                    .iter()
                    .map(|&n| classes.iter().map(|&c| format_value(nmi_value(result, c, v, n))).collect())
                    .collect(),
            };
            figures.push(chart.into_figure(format!("nmi_paired_{v}")));
        }
    }
    figures
}
