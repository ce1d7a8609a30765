use std::path::Path as FsPath;

use plotters::prelude::*;

use super::{Aggregate, BenchError, Estimate};

/// Linear range of the symmetric-log axis.
const SYMLOG_LINEAR: f64 = 1e-3;
/// Smallest value drawn on a log axis; lower values are clamped to it.
const LOG_FLOOR: f64 = 1e-4;

const COLORS: [RGBColor; 8] = [
    RGBColor(31, 119, 180),
    RGBColor(255, 127, 14),
    RGBColor(44, 160, 44),
    RGBColor(214, 39, 40),
    RGBColor(148, 103, 189),
    RGBColor(140, 86, 75),
    RGBColor(227, 119, 194),
    RGBColor(127, 127, 127),
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlotMetric {
    WallTime,
    OverflowRatio,
    PathChangeRatioMinusOne,
}

#[derive(Clone, Copy)]
enum Scale {
    Log,
    SymLog,
}

impl Scale {
    fn forward(self, y: f64) -> f64 {
        match self {
            Scale::Log => y.max(LOG_FLOOR).log10(),
            Scale::SymLog => y.signum() * (1.0 + y.abs() / SYMLOG_LINEAR).log10(),
        }
    }

    fn inverse(self, v: f64) -> f64 {
        match self {
            Scale::Log => 10f64.powf(v),
            Scale::SymLog => v.signum() * SYMLOG_LINEAR * (10f64.powf(v.abs()) - 1.0),
        }
    }
}

impl PlotMetric {
    pub const ALL: [PlotMetric; 3] = [PlotMetric::WallTime, PlotMetric::OverflowRatio, PlotMetric::PathChangeRatioMinusOne];

    pub fn name(self) -> &'static str {
        match self {
            PlotMetric::WallTime => "wall_time",
            PlotMetric::OverflowRatio => "overflow_ratio",
            PlotMetric::PathChangeRatioMinusOne => "path_change_ratio_minus_one",
        }
    }

    fn label(self) -> &'static str {
        match self {
            PlotMetric::WallTime => "wall time (s)",
            PlotMetric::OverflowRatio => "overflow ratio",
            PlotMetric::PathChangeRatioMinusOne => "path-change ratio - 1",
        }
    }

    fn scale(self) -> Scale {
        match self {
            PlotMetric::OverflowRatio => Scale::SymLog,
            _ => Scale::Log,
        }
    }

    fn estimate(self, a: &Aggregate) -> Option<Estimate> {
        match self {
            PlotMetric::WallTime => a.wall_time,
            PlotMetric::OverflowRatio => a.overflow_ratio,
            PlotMetric::PathChangeRatioMinusOne => a.path_change_ratio_minus_one,
        }
    }
}

fn plot_err<E: std::fmt::Debug>(e: E) -> BenchError {
    BenchError::Plot(format!("{e:?}"))
}

fn format_tick(y: f64) -> String {
    if y == 0.0 {
        "0".into()
    } else if (1e-2..1e4).contains(&y.abs()) {
        format!("{}", (y * 1000.0).round() / 1000.0)
    } else {
        format!("{y:.0e}")
    }
}

/// Writes `<dataset>_<metric>.svg` for every dataset and metric: mean curves
/// over the size parameter with bootstrap bands, one curve per solver.
/// Suppressed groups are left out. Returns the written paths.
pub fn write_plots(dir: &FsPath, aggregates: &[Aggregate]) -> Result<Vec<std::path::PathBuf>, BenchError> {
    std::fs::create_dir_all(dir).map_err(|source| BenchError::Io { path: dir.to_path_buf(), source })?;
    let mut datasets: Vec<&str> = aggregates.iter().map(|a| a.dataset.as_str()).collect();
    datasets.dedup();
    datasets.sort();
    datasets.dedup();
    let mut written = Vec::new();
    for ds in datasets {
        let rows: Vec<&Aggregate> = aggregates.iter().filter(|a| a.dataset == ds).collect();
        for metric in PlotMetric::ALL {
            let path = dir.join(format!("{ds}_{}.svg", metric.name()));
            draw(&path, ds, metric, &rows)?;
            written.push(path);
        }
    }
    Ok(written)
}

fn draw(path: &FsPath, dataset: &str, metric: PlotMetric, rows: &[&Aggregate]) -> Result<(), BenchError> {
    let scale = metric.scale();
    let mut solvers: Vec<&str> = Vec::new();
    for a in rows {
        if !solvers.contains(&a.solver.as_str()) {
            solvers.push(&a.solver);
        }
    }
    let series: Vec<(&str, Vec<(f64, Estimate)>)> = solvers
        .iter()
        .map(|&s| {
            let pts = rows
                .iter()
                .filter(|a| a.solver == s && !a.suppressed)
                .filter_map(|a| metric.estimate(a).map(|e| (a.size as f64, e)))
                .collect();
            (s, pts)
        })
        .collect();
    let xs: Vec<f64> = rows.iter().map(|a| a.size as f64).collect();
    let (x0, x1) = xs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    let (x0, x1) = if x0.is_finite() { (x0 - 0.5, x1 + 0.5) } else { (0.0, 1.0) };
    let ys: Vec<f64> = series
        .iter()
        .flat_map(|(_, p)| p.iter().flat_map(|(_, e)| [e.low, e.high]))
        .map(|y| scale.forward(y))
        .collect();
    let (y0, y1) = ys.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &y| (lo.min(y), hi.max(y)));
    let (y0, y1) = match (y0.is_finite(), y1 - y0) {
        (false, _) => (scale.forward(0.0), scale.forward(1.0)),
        (true, d) if d < 1e-9 => (y0 - 0.5, y1 + 0.5),
        (true, d) => (y0 - 0.05 * d, y1 + 0.05 * d),
    };

    let root = SVGBackend::new(path, (720, 480)).into_drawing_area();
    root.fill(&WHITE).map_err(plot_err)?;
    let mut chart = ChartBuilder::on(&root)
        .caption(format!("{dataset}: {}", metric.label()), ("sans-serif", 20))
        .margin(12)
        .x_label_area_size(40)
        .y_label_area_size(70)
        .build_cartesian_2d(x0..x1, y0..y1)
        .map_err(plot_err)?;
    chart
        .configure_mesh()
        .x_desc("size")
        .y_desc(metric.label())
        .y_label_formatter(&|v| format_tick(scale.inverse(*v)))
        .draw()
        .map_err(plot_err)?;
    for (i, (solver, pts)) in series.iter().enumerate() {
        if pts.is_empty() {
            continue;
        }
        let color = COLORS[i % COLORS.len()];
        let mut band: Vec<(f64, f64)> = pts.iter().map(|(x, e)| (*x, scale.forward(e.high))).collect();
        band.extend(pts.iter().rev().map(|(x, e)| (*x, scale.forward(e.low))));
        chart.draw_series(std::iter::once(Polygon::new(band, color.mix(0.2)))).map_err(plot_err)?;
        chart
            .draw_series(LineSeries::new(pts.iter().map(|(x, e)| (*x, scale.forward(e.mean))), color.stroke_width(2)))
            .map_err(plot_err)?
            .label(*solver)
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 18, y)], color.stroke_width(2)));
    }
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.85))
        .border_style(BLACK)
        .draw()
        .map_err(plot_err)?;
    root.present().map_err(plot_err)
}
