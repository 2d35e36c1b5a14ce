//! In-process SVG rendering.

use plotters::prelude::*;

const SIZE: (u32, u32) = (900, 560);
const PALETTE: [RGBColor; 5] =
    [RGBColor(31, 119, 180), RGBColor(214, 39, 40), RGBColor(44, 160, 44), RGBColor(148, 103, 189), RGBColor(255, 127, 14)];

pub struct Curve {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    /// Drawn as isolated markers rather than a line.
    pub markers: bool,
}

impl Curve {
    pub fn line(label: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Self { label: label.into(), points, markers: false }
    }

    pub fn markers(label: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Self { label: label.into(), points, markers: true }
    }
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn extent(values: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if lo > hi {
        return None;
    }
    if hi - lo <= f64::EPSILON * hi.abs().max(1.0) {
        let pad = 0.5 * hi.abs().max(1.0);
        return Some((lo - pad, hi + pad));
    }
    Some((lo, hi))
}

/// Line plot of several curves; with `log_y`, non-positive values are dropped.
pub fn line_plot(title: &str, x_desc: &str, y_desc: &str, curves: &[Curve], log_y: bool) -> Result<String, String> {
    let curves: Vec<Curve> = curves
        .iter()
        .map(|c| Curve {
            label: c.label.clone(),
            points: c.points.iter().copied().filter(|(x, y)| x.is_finite() && y.is_finite() && (!log_y || *y > 0.0)).collect(),
            markers: c.markers,
        })
        .collect();
    let xr = extent(curves.iter().flat_map(|c| c.points.iter().map(|p| p.0))).unwrap_or((0.0, 1.0));
    let yr = extent(curves.iter().flat_map(|c| c.points.iter().map(|p| p.1))).unwrap_or((1e-3, 1.0));
    let mut svg = String::new();
    {
        let root = SVGBackend::with_string(&mut svg, SIZE).into_drawing_area();
        root.fill(&WHITE).map_err(err)?;
        let mut builder = ChartBuilder::on(&root);
        builder.caption(title, ("sans-serif", 20)).margin(12).x_label_area_size(40).y_label_area_size(70);
        if log_y {
            let lo = yr.0.max(yr.1 * 1e-16);
            let mut chart = builder.build_cartesian_2d(xr.0..xr.1, (lo..yr.1 * 1.5).log_scale()).map_err(err)?;
            chart.configure_mesh().x_desc(x_desc).y_desc(y_desc).draw().map_err(err)?;
            draw_curves(&mut chart, &curves)?;
        } else {
            let pad = 0.05 * (yr.1 - yr.0);
            let mut chart = builder.build_cartesian_2d(xr.0..xr.1, (yr.0 - pad)..(yr.1 + pad)).map_err(err)?;
            chart.configure_mesh().x_desc(x_desc).y_desc(y_desc).draw().map_err(err)?;
            draw_curves(&mut chart, &curves)?;
        }
        root.present().map_err(err)?;
    }
    Ok(svg)
}

fn draw_curves<'a, DB, X, Y>(chart: &mut ChartContext<'a, DB, Cartesian2d<X, Y>>, curves: &[Curve]) -> Result<(), String>
where
    DB: DrawingBackend + 'a,
    X: Ranged<ValueType = f64>,
    Y: Ranged<ValueType = f64>,
{
    for (k, c) in curves.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        if c.markers {
            chart
                .draw_series(c.points.iter().map(|p| Circle::new(*p, 3, color.filled())))
                .map_err(err)?
                .label(c.label.as_str())
                .legend(move |(x, y)| Circle::new((x + 10, y), 3, color.filled()));
        } else {
            chart
                .draw_series(LineSeries::new(c.points.iter().copied(), color.stroke_width(2)))
                .map_err(err)?
                .label(c.label.as_str())
                .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], color.stroke_width(2)));
        }
    }
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.8))
        .border_style(BLACK)
        .draw()
        .map_err(err)?;
    Ok(())
}

/// Linear color map from dark blue through green to yellow.
fn color_of(s: f64) -> RGBColor {
    const STOPS: [(f64, f64, f64); 4] = [(68.0, 1.0, 84.0), (49.0, 104.0, 142.0), (53.0, 183.0, 121.0), (253.0, 231.0, 37.0)];
    let s = s.clamp(0.0, 1.0) * (STOPS.len() - 1) as f64;
    let k = (s.floor() as usize).min(STOPS.len() - 2);
    let w = s - k as f64;
    let (a, b) = (STOPS[k], STOPS[k + 1]);
    let mix = |p: f64, q: f64| (p + w * (q - p)).round() as u8;
    RGBColor(mix(a.0, b.0), mix(a.1, b.1), mix(a.2, b.2))
}

fn cell_edges(centers: &[f64]) -> Vec<f64> {
    let n = centers.len();
    if n == 1 {
        return vec![centers[0] - 0.5, centers[0] + 0.5];
    }
    let mut e = Vec::with_capacity(n + 1);
    e.push(centers[0] - 0.5 * (centers[1] - centers[0]));
    for w in centers.windows(2) {
        e.push(0.5 * (w[0] + w[1]));
    }
    e.push(centers[n - 1] + 0.5 * (centers[n - 1] - centers[n - 2]));
    e
}

/// Density over `(x, t)`; `density[k][j]` belongs to `ts[k]`, `xs[j]`.
pub fn heatmap(title: &str, xs: &[f64], ts: &[f64], density: &[Vec<f64>]) -> Result<String, String> {
    if xs.is_empty() || ts.is_empty() || density.len() != ts.len() || density.iter().any(|r| r.len() != xs.len()) {
        return Err("heatmap data has inconsistent shape".into());
    }
    let max = density.iter().flatten().copied().filter(|v| v.is_finite()).fold(0.0, f64::max);
    let scale = if max > 0.0 { 1.0 / max } else { 0.0 };
    let xe = cell_edges(xs);
    let te = cell_edges(ts);
    let mut svg = String::new();
    {
        let root = SVGBackend::with_string(&mut svg, SIZE).into_drawing_area();
        root.fill(&WHITE).map_err(err)?;
        let (main, bar) = root.split_horizontally(SIZE.0 - 90);
        let mut chart = ChartBuilder::on(&main)
            .caption(title, ("sans-serif", 20))
            .margin(12)
            .x_label_area_size(40)
            .y_label_area_size(50)
            .build_cartesian_2d(xe[0]..xe[xs.len()], te[0]..te[ts.len()])
            .map_err(err)?;
        chart.configure_mesh().disable_mesh().x_desc("x").y_desc("t").draw().map_err(err)?;
        let cells = density.iter().enumerate().flat_map(|(k, r)| {
            let (xe, te) = (&xe, &te);
            r.iter().enumerate().map(move |(j, v)| {
                Rectangle::new([(xe[j], te[k]), (xe[j + 1], te[k + 1])], color_of(v * scale).filled())
            })
        });
        chart.draw_series(cells).map_err(err)?;
        let mut legend = ChartBuilder::on(&bar)
            .margin(12)
            .margin_top(44)
            .y_label_area_size(50)
            .build_cartesian_2d(0.0..1.0, 0.0..max.max(f64::MIN_POSITIVE))
            .map_err(err)?;
        legend.configure_mesh().disable_mesh().disable_x_axis().y_desc("|u|²").draw().map_err(err)?;
        let steps = 64;
        legend
            .draw_series((0..steps).map(|k| {
                let (a, b) = (k as f64 / steps as f64, (k + 1) as f64 / steps as f64);
                Rectangle::new([(0.0, a * max), (1.0, b * max)], color_of(a).filled())
            }))
            .map_err(err)?;
        root.present().map_err(err)?;
    }
    Ok(svg)
}
