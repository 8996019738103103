use std::fs;
use std::path::{Path, PathBuf};

use plotters::prelude::*;

use super::{ConvergenceRecord, LedgerRow};
use crate::designs::DesignMetrics;
use crate::error::{Error, Result};

fn csv_string(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(header).map_err(io)?;
    for row in rows {
        w.write_record(&row).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
}

fn join<T: ToString>(items: impl IntoIterator<Item = T>) -> String {
    items
        .into_iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(";")
}

fn full(x: f64) -> String {
    format!("{x:?}")
}

/// One line per record. Repetition rows list their factors (one-based) and
/// estimates separated by `;`; aggregate rows have `rep = mean` and leave
/// both lists empty.
pub fn records_csv(records: &[ConvergenceRecord]) -> Result<String> {
    if records.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    csv_string(
        &[
            "function", "estimator", "n", "p", "N", "N_T", "rep", "factor", "T_hat", "mae",
        ],
        records.iter().map(|r| {
            vec![
                r.function.clone(),
                r.estimator.clone(),
                r.n.to_string(),
                r.p.to_string(),
                r.rows.to_string(),
                r.total_points.to_string(),
                r.rep.map_or_else(|| "mean".to_string(), |x| x.to_string()),
                join(1..=r.t_hat.len()),
                join(r.t_hat.iter().map(|&t| full(t))),
                full(r.mae),
            ]
        }),
    )
}

pub fn table3_csv(rows: &[DesignMetrics]) -> Result<String> {
    csv_string(
        &["kind", "N", "n", "N_T", "E_T", "nN", "D", "chi"],
        rows.iter().map(|m| {
            vec![
                m.spec.kind.to_string(),
                m.spec.rows.to_string(),
                m.spec.n.to_string(),
                m.total_points.to_string(),
                m.total_effects.to_string(),
                (m.spec.n * m.spec.rows).to_string(),
                m.discrepancy.map(full).unwrap_or_default(),
                full(m.explorativity),
            ]
        }),
    )
}

pub fn ledger_csv(function: &str, rows: &[LedgerRow]) -> Result<String> {
    csv_string(
        &[
            "function", "p", "rep", "budget", "block", "first_row", "end_row", "active", "runs",
        ],
        rows.iter().map(|r| {
            vec![
                function.to_string(),
                r.p.to_string(),
                r.rep.to_string(),
                r.budget.to_string(),
                r.entry.block.to_string(),
                r.entry.first_row.to_string(),
                r.entry.end_row.to_string(),
                join(r.entry.active.iter().map(|j| j + 1)),
                r.entry.runs.to_string(),
            ]
        }),
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotSeries {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

impl PlotSeries {
    /// `(N_T, MAE)` series from the aggregate rows, one per estimator in
    /// order of first appearance.
    pub fn from_records(records: &[ConvergenceRecord]) -> Vec<PlotSeries> {
        let mut series: Vec<PlotSeries> = Vec::new();
        for r in records.iter().filter(|r| r.is_aggregate()) {
            let point = (r.total_points as f64, r.mae);
            match series.iter_mut().find(|s| s.label == r.estimator) {
                Some(s) => s.points.push(point),
                None => series.push(PlotSeries {
                    label: r.estimator.clone(),
                    points: vec![point],
                }),
            }
        }
        series
    }
}

const PALETTE: [RGBColor; 8] = [
    RGBColor(0, 0, 0),
    RGBColor(213, 94, 0),
    RGBColor(0, 114, 178),
    RGBColor(0, 158, 115),
    RGBColor(204, 121, 167),
    RGBColor(230, 159, 0),
    RGBColor(86, 180, 233),
    RGBColor(120, 120, 120),
];

fn plot_err<E: std::fmt::Debug>(e: E) -> Error {
    Error::Io(format!("plot: {e:?}"))
}

fn log_range(values: impl Iterator<Item = f64>) -> Result<std::ops::Range<f64>> {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in values {
        if v > 0.0 && v.is_finite() {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    if !lo.is_finite() {
        return Err(Error::EmptyPointSet);
    }
    let lo = 10f64.powf(lo.log10().floor());
    let hi = 10f64.powf(hi.log10().ceil()).max(lo * 10.0);
    Ok(lo..hi)
}

/// Log-log line plot with a legend naming every series.
pub fn plot_svg(series: &[PlotSeries], title: &str, x_desc: &str, y_desc: &str) -> Result<String> {
    let pts = || series.iter().flat_map(|s| s.points.iter());
    let x = log_range(pts().map(|p| p.0))?;
    let y = log_range(pts().map(|p| p.1))?;
    let mut svg = String::new();
    {
        let root = SVGBackend::with_string(&mut svg, (720, 520)).into_drawing_area();
        root.fill(&WHITE).map_err(plot_err)?;
        let mut chart = ChartBuilder::on(&root)
            .caption(title, ("sans-serif", 18))
            .margin(12)
            .x_label_area_size(44)
            .y_label_area_size(64)
            .build_cartesian_2d(x.log_scale(), y.log_scale())
            .map_err(plot_err)?;
        chart
            .configure_mesh()
            .x_desc(x_desc)
            .y_desc(y_desc)
            .draw()
            .map_err(plot_err)?;
        for (i, s) in series.iter().enumerate() {
            let color = PALETTE[i % PALETTE.len()];
            let kept: Vec<(f64, f64)> = s
                .points
                .iter()
                .copied()
                .filter(|&(a, b)| a > 0.0 && b > 0.0)
                .collect();
            chart
                .draw_series(LineSeries::new(kept.clone(), color.stroke_width(2)))
                .map_err(plot_err)?
                .label(s.label.as_str())
                .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], color.stroke_width(2)));
            chart
                .draw_series(kept.iter().map(|&p| Circle::new(p, 3, color.filled())))
                .map_err(plot_err)?;
        }
        chart
            .configure_series_labels()
            .background_style(WHITE.mix(0.8))
            .border_style(BLACK)
            .position(SeriesLabelPosition::UpperRight)
            .draw()
            .map_err(plot_err)?;
        root.present().map_err(plot_err)?;
    }
    Ok(svg)
}

/// Explorativity against economy, one labelled point per design.
pub fn figure2_svg(points: &[(String, f64, f64)]) -> Result<String> {
    if points.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    let mut svg = String::new();
    {
        let root = SVGBackend::with_string(&mut svg, (640, 520)).into_drawing_area();
        root.fill(&WHITE).map_err(plot_err)?;
        let mut chart = ChartBuilder::on(&root)
            .caption("explorativity vs economy", ("sans-serif", 18))
            .margin(12)
            .x_label_area_size(44)
            .y_label_area_size(54)
            .build_cartesian_2d(0f64..1.05, 0f64..1.05)
            .map_err(plot_err)?;
        chart
            .configure_mesh()
            .x_desc("economy e")
            .y_desc("explorativity chi")
            .draw()
            .map_err(plot_err)?;
        chart
            .draw_series(points.iter().map(|(label, e, chi)| {
                EmptyElement::at((*e, *chi))
                    + Circle::new((0, 0), 4, PALETTE[2].filled())
                    + Text::new(label.clone(), (6, -12), ("sans-serif", 12))
            }))
            .map_err(plot_err)?;
        root.present().map_err(plot_err)?;
    }
    Ok(svg)
}

/// Write `contents` to `dir/name`, creating `dir` if needed.
pub fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    fs::write(&path, contents)?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(estimator: &str, p: u32, rep: Option<usize>, mae: f64) -> ConvergenceRecord {
        ConvergenceRecord {
            function: "A1".into(),
            estimator: estimator.into(),
            n: 2,
            p,
            rows: 1 << p,
            total_points: 7 << p,
            rep,
            t_hat: if rep.is_some() { vec![0.5, 0.25] } else { vec![] },
            mae,
        }
    }

    #[test]
    fn csv_has_header_plus_one_line_per_record() {
        let rs = vec![
            rec("saltenis", 3, Some(1), 0.1),
            rec("saltenis", 3, Some(2), 0.3),
            rec("saltenis", 3, None, 0.2),
        ];
        let s = records_csv(&rs).unwrap();
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[0], "function,estimator,n,p,N,N_T,rep,factor,T_hat,mae");
        assert_eq!(lines[1], "A1,saltenis,2,3,8,56,1,1;2,0.5;0.25,0.1");
        assert_eq!(lines[3], "A1,saltenis,2,3,8,56,mean,,,0.2");
        assert!(records_csv(&[]).is_err());
    }

    #[test]
    fn plot_names_every_series() {
        let rs = vec![
            rec("saltenis", 3, None, 0.2),
            rec("saltenis", 4, None, 0.1),
            rec("glen_isaacs", 3, None, 0.4),
            rec("glen_isaacs", 4, None, 0.3),
        ];
        let series = PlotSeries::from_records(&rs);
        assert_eq!(series.len(), 2);
        let svg = plot_svg(&series, "A1", "N_T", "MAE").unwrap();
        assert!(svg.contains("saltenis") && svg.contains("glen_isaacs"));
        assert!(svg.matches("<polyline").count() >= 2);
    }
}
