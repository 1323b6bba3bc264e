use std::path::Path;

use anyhow::{anyhow, Result};
use immrb::pipeline::Report;
use plotters::prelude::*;

const COLORS: [RGBColor; 6] = [
    RGBColor(31, 119, 180),
    RGBColor(214, 39, 40),
    RGBColor(44, 160, 44),
    RGBColor(148, 103, 189),
    RGBColor(255, 127, 14),
    RGBColor(23, 190, 207),
];

/// Log-scale `|Φ_g|` per irrep with the fitted `κ p^{g−1}` curves.
pub fn decay_svg(report: &Report, path: &Path) -> Result<()> {
    let series: Vec<_> = report
        .irreps
        .iter()
        .map(|r| {
            let fit = &r.analysis.fit;
            let pts: Vec<(f64, f64)> = fit
                .points
                .iter()
                .map(|p| (f64::from(p.g), p.phi.norm()))
                .filter(|(_, y)| *y > 0.0)
                .collect();
            (r.analysis.mu.to_string(), fit.kappa_hat.norm(), fit.p_hat, pts)
        })
        .filter(|s| !s.3.is_empty())
        .collect();
    if series.is_empty() {
        return Err(anyhow!("nothing to plot: every Φ_g is zero"));
    }
    let g_max = report.depths.iter().copied().max().unwrap_or(1) as f64;
    let ys = series.iter().flat_map(|s| s.3.iter().map(|p| p.1));
    let (lo, hi) = ys.fold((f64::INFINITY, 0.0f64), |(a, b), y| (a.min(y), b.max(y)));
    let (lo, hi) = (lo / 2.0, hi * 2.0);

    let root = SVGBackend::new(path, (720, 480)).into_drawing_area();
    let err = |e: DrawingAreaErrorKind<_>| anyhow!("plotting {}: {e}", path.display());
    root.fill(&WHITE).map_err(err)?;
    let mut chart = ChartBuilder::on(&root)
        .caption("filtered decay |Φ_g|", ("sans-serif", 20))
        .margin(12)
        .x_label_area_size(36)
        .y_label_area_size(60)
        .build_cartesian_2d(0f64..g_max + 1.0, (lo..hi).log_scale())
        .map_err(err)?;
    chart
        .configure_mesh()
        .x_desc("sequence length g")
        .y_desc("|Φ_g|")
        .draw()
        .map_err(err)?;
    for (i, (label, kappa, p, pts)) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        chart
            .draw_series(pts.iter().map(|&(x, y)| Circle::new((x, y), 3, color.filled())))
            .map_err(err)?
            .label(format!("{label}: p = {p:.5}"))
            .legend(move |(x, y)| Circle::new((x + 10, y), 3, color.filled()));
        let curve = (0..=200).map(|k| {
            let g = 1.0 + (g_max - 1.0) * f64::from(k) / 200.0;
            (g, kappa * p.abs().powf(g - 1.0))
        });
        chart
            .draw_series(LineSeries::new(curve.filter(|(_, y)| *y >= lo && *y <= hi), color))
            .map_err(err)?;
    }
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.8))
        .border_style(BLACK)
        .draw()
        .map_err(err)?;
    root.present().map_err(err)?;
    Ok(())
}
