//! Self-contained SVG line charts rendered from CSV text alone.

use std::fmt::Write as _;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 56.0;

pub struct Series {
    pub column: &'static str,
    pub color: &'static str,
    pub dashed: bool,
}

pub struct Chart {
    pub title: &'static str,
    pub x_column: &'static str,
    pub y_label: &'static str,
    pub series: Vec<Series>,
    /// Comment key (`# key=value`) whose value is drawn as a dashed vertical marker.
    pub marker: &'static str,
}

/// Renders `chart` from a CSV document in the harness's format.
pub fn render(csv_text: &str, chart: &Chart) -> Result<String, String> {
    let marker = csv_text
        .lines()
        .filter_map(|l| l.strip_prefix("# "))
        .flat_map(|l| l.split(", "))
        .find_map(|kv| kv.strip_prefix(chart.marker)?.strip_prefix('=')?.parse::<f64>().ok());

    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(csv_text.as_bytes());
    let headers = reader.headers().map_err(|e| e.to_string())?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name).ok_or_else(|| format!("missing column `{name}`"));
    let x_idx = col(chart.x_column)?;
    let y_idx: Vec<usize> = chart.series.iter().map(|s| col(s.column)).collect::<Result<_, _>>()?;

    let mut xs = Vec::new();
    let mut ys = vec![Vec::new(); y_idx.len()];
    for rec in reader.records() {
        let rec = rec.map_err(|e| e.to_string())?;
        let parse = |i: usize| rec[i].parse::<f64>().map_err(|e| format!("{}: {e}", &rec[i]));
        xs.push(parse(x_idx)?);
        for (j, &i) in y_idx.iter().enumerate() {
            ys[j].push(parse(i)?);
        }
    }
    if xs.is_empty() {
        return Err("no data rows".into());
    }

    let y_max = ys.iter().flatten().fold(0.0f64, |m, &y| m.max(y)) * 1.05;
    let y_max = if y_max > 0.0 { y_max } else { 1.0 };
    let px = |x: f64| MARGIN + x * (WIDTH - 2.0 * MARGIN);
    let py = |y: f64| HEIGHT - MARGIN - y / y_max * (HEIGHT - 2.0 * MARGIN);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(svg, r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#, WIDTH / 2.0, chart.title);
    let (x0, x1, y0, y1) = (px(0.0), px(1.0), py(0.0), py(y_max));
    let _ = writeln!(svg, r#"<path d="M{x0:.2} {y1:.2} L{x0:.2} {y0:.2} L{x1:.2} {y0:.2}" fill="none" stroke="black"/>"#);
    for i in 0..=4 {
        let x = i as f64 / 4.0;
        let _ = writeln!(svg, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{x}</text>"#, px(x), y0 + 18.0);
        let y = y_max * i as f64 / 4.0;
        let _ = writeln!(svg, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{y:.2}</text>"#, x0 - 6.0, py(y) + 4.0);
    }
    let _ = writeln!(svg, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, WIDTH / 2.0, HEIGHT - 12.0, chart.x_column);
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        chart.y_label
    );
    if let Some(m) = marker {
        let _ = writeln!(
            svg,
            r#"<line x1="{:.2}" y1="{y0:.2}" x2="{:.2}" y2="{y1:.2}" stroke="gray" stroke-dasharray="5 4"/>"#,
            px(m),
            px(m)
        );
        let _ = writeln!(svg, r#"<text x="{:.2}" y="{:.2}" fill="gray">{}</text>"#, px(m) + 4.0, y1 + 12.0, chart.marker);
    }
    for (series, y) in chart.series.iter().zip(&ys) {
        let points: Vec<String> = xs.iter().zip(y).map(|(&x, &y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
        let dash = if series.dashed { r#" stroke-dasharray="4 3""# } else { "" };
        let _ = writeln!(
            svg,
            r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="1.5"{dash}/>"#,
            points.join(" "),
            series.color
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}
