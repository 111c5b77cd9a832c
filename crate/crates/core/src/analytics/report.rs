use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::{
    AnalysisBundle, AnalyticsError, FrequencyTable, Result, TrendFit, DISPERSION_DEFINITION,
};
use crate::probing::Subcategory;

/// Points sampled along each fitted curve.
pub const CURVE_SAMPLES: usize = 100;

/// Integers print without a fractional part; other values use the shortest
/// round-trip representation.
pub fn fmt_num(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}

fn werr(path: &Path, e: impl ToString) -> AnalyticsError {
    AnalyticsError::Write {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

fn write_file(path: &Path, body: &str) -> Result<()> {
    if let Some(p) = path.parent() {
        fs::create_dir_all(p).map_err(|e| werr(p, e))?;
    }
    fs::write(path, body).map_err(|e| werr(path, e))
}

fn csv_string(header: &[&str], rows: Vec<Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input")
}

fn heatmap_csv(t: &FrequencyTable) -> String {
    let mut header = vec!["decade"];
    header.extend(t.subcategories.iter().map(|s| s.as_str()));
    header.push("uncategorized");
    let rows = t
        .rows
        .iter()
        .map(|(era, row)| {
            let mut r = vec![era.to_string()];
            r.extend(t.subcategories.iter().map(|&s| fmt_num(row.percent(s))));
            r.push(fmt_num(row.uncategorized_percent()));
            r
        })
        .collect();
    csv_string(&header, rows)
}

#[derive(Serialize)]
struct Point {
    x: f64,
    y: f64,
}

#[derive(Serialize)]
struct TrendOut {
    subcategory: Subcategory,
    series: Vec<Point>,
    fit: Option<TrendFit>,
    curve: Vec<Point>,
}

fn curve(fit: &TrendFit, x0: f64, x1: f64) -> Vec<Point> {
    (0..CURVE_SAMPLES)
        .map(|i| {
            let x = x0 + (x1 - x0) * i as f64 / (CURVE_SAMPLES - 1) as f64;
            Point { x, y: fit.eval(x) }
        })
        .collect()
}

/// One line on an SVG plot. `dashed` lines are drawn without markers.
pub struct SvgSeries<'a> {
    pub label: &'a str,
    pub points: Vec<(f64, f64)>,
    pub dashed: bool,
}

const PALETTE: [&str; 8] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

/// Minimal line plot with a fixed 0..100 y-axis.
pub fn svg_line_plot(title: &str, series: &[SvgSeries]) -> String {
    let (w, h, m) = (640.0, 400.0, 50.0);
    let xs = series.iter().flat_map(|s| s.points.iter().map(|p| p.0));
    let (mut x0, mut x1) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| {
        (a.min(x), b.max(x))
    });
    if !x0.is_finite() {
        (x0, x1) = (0.0, 1.0);
    }
    if x1 <= x0 {
        x1 = x0 + 1.0;
    }
    let sx = |x: f64| m + (x - x0) / (x1 - x0) * (w - 2.0 * m);
    let sy = |y: f64| h - m - y.clamp(0.0, 100.0) / 100.0 * (h - 2.0 * m);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{m}" y="20" font-size="13">{}</text>"#,
        escape(title)
    );
    let _ = writeln!(
        s,
        r#"<path d="M{m} {m} V{} H{}" fill="none" stroke="black"/>"#,
        h - m,
        w - m
    );
    for tick in [0.0, 25.0, 50.0, 75.0, 100.0] {
        let _ = writeln!(
            s,
            r#"<text x="8" y="{:.1}">{}</text>"#,
            sy(tick) + 4.0,
            tick
        );
    }
    for (i, ser) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let d: Vec<String> = ser
            .points
            .iter()
            .enumerate()
            .map(|(j, &(x, y))| {
                format!(
                    "{}{:.2} {:.2}",
                    if j == 0 { 'M' } else { 'L' },
                    sx(x),
                    sy(y)
                )
            })
            .collect();
        let dash = if ser.dashed {
            r#" stroke-dasharray="4 3""#
        } else {
            ""
        };
        let _ = writeln!(
            s,
            r#"<path d="{}" fill="none" stroke="{color}"{dash}/>"#,
            d.join(" ")
        );
        if !ser.dashed {
            for &(x, y) in &ser.points {
                let _ = writeln!(
                    s,
                    r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#,
                    sx(x),
                    sy(y)
                );
            }
        }
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" fill="{color}">{}</text>"#,
            w - m + 5.0,
            m + 14.0 * i as f64,
            escape(ser.label)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

const NOTES: &str = "\
significance.csv
  For each subcategory, a Kruskal-Wallis test compares that subcategory's
  per-decade percentages against the pooled per-decade percentages of the
  remaining subcategories of the same table. h uses average ranks with the
  tie correction; p comes from a chi-square distribution with df = 1.
  significant means p < 0.05.

dispersion.json
";

/// Writes heatmap CSVs, significance, dispersion, trends, deltas, SVG plots
/// and NOTES.txt under `dir`. Returns the written paths, sorted.
pub fn render_reports(bundle: &AnalysisBundle, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    let mut put = |rel: String, body: String| -> Result<()> {
        let p = dir.join(rel);
        write_file(&p, &body)?;
        written.push(p);
        Ok(())
    };

    for t in &bundle.tables {
        put(format!("heatmaps/{}.csv", t.stem()), heatmap_csv(t))?;
    }

    let mut sig_rows = Vec::new();
    for t in &bundle.tables {
        if let Some(res) = bundle.significance.get(&t.stem()) {
            for (sub, r) in res {
                sig_rows.push(vec![
                    t.family.clone(),
                    t.demographic.to_string(),
                    t.role.clone(),
                    sub.to_string(),
                    fmt_num(r.h_statistic),
                    r.degrees_freedom.to_string(),
                    fmt_num(r.p_value),
                    r.significant.to_string(),
                ]);
            }
        }
    }
    put(
        "significance.csv".into(),
        csv_string(
            &[
                "family",
                "demographic",
                "role",
                "subcategory",
                "h",
                "df",
                "p",
                "significant",
            ],
            sig_rows,
        ),
    )?;

    put(
        "dispersion.json".into(),
        serde_json::to_string_pretty(&bundle.dispersion).map_err(|e| werr(dir, e))? + "\n",
    )?;

    for (stem, trends) in &bundle.trends {
        let x_range = trends
            .iter()
            .flat_map(|t| t.series.iter().map(|p| p.0))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| {
                (a.min(x), b.max(x))
            });
        let out: Vec<TrendOut> = trends
            .iter()
            .map(|t| TrendOut {
                subcategory: t.subcategory,
                series: t.series.iter().map(|&(x, y)| Point { x, y }).collect(),
                fit: t.fit,
                curve: t
                    .fit
                    .map(|f| curve(&f, x_range.0, x_range.1))
                    .unwrap_or_default(),
            })
            .collect();
        put(
            format!("trends/{stem}.json"),
            serde_json::to_string_pretty(&out).map_err(|e| werr(dir, e))? + "\n",
        )?;

        let labels: Vec<String> = trends
            .iter()
            .map(|t| format!("{} fit", t.subcategory))
            .collect();
        let mut series = Vec::new();
        for (t, fit_label) in trends.iter().zip(&labels) {
            series.push(SvgSeries {
                label: t.subcategory.as_str(),
                points: t.series.clone(),
                dashed: false,
            });
            if let Some(f) = t.fit {
                series.push(SvgSeries {
                    label: fit_label,
                    points: curve(&f, x_range.0, x_range.1)
                        .into_iter()
                        .map(|p| (p.x, p.y))
                        .collect(),
                    dashed: true,
                });
            }
        }
        put(format!("plots/{stem}.svg"), svg_line_plot(stem, &series))?;
    }

    let delta_rows = bundle
        .deltas
        .iter()
        .flat_map(|(fam, d)| {
            d.iter()
                .map(move |(s, v)| vec![fam.clone(), s.to_string(), fmt_num(*v)])
        })
        .collect();
    put(
        "deltas.csv".into(),
        csv_string(&["family", "subcategory", "delta"], delta_rows),
    )?;

    put(
        "NOTES.txt".into(),
        format!("{NOTES}  {DISPERSION_DEFINITION}.\n\ntrends/*.json\n  x is (decade - 1950) / 10; fit holds a2, a1, a0 of y = a2 x^2 + a1 x + a0.\n"),
    )?;

    written.sort();
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_formatting() {
        assert_eq!(fmt_num(30.0), "30");
        assert_eq!(fmt_num(-2.0), "-2");
        assert_eq!(fmt_num(0.5), "0.5");
    }

    #[test]
    fn svg_is_well_formed_enough() {
        let s = svg_line_plot(
            "a<b",
            &[SvgSeries {
                label: "man",
                points: vec![(0.0, 10.0), (1.0, 90.0)],
                dashed: false,
            }],
        );
        assert!(s.starts_with("<svg") && s.ends_with("</svg>\n"));
        assert!(s.contains("a&lt;b"));
        assert_eq!(s.matches("<circle").count(), 2);
    }
}
