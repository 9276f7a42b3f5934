//! CSV writers.
//!
//! Every file starts with a header row; numbers use Rust's shortest
//! round-trip `f64` formatting, so parsing a field gives back the exact
//! value. Lines end in `\n`. Comment lines start with `# `.

use std::io::{self, Write};

use crate::covers::Ellipse;
use crate::dimension::PressureCurve;
use crate::estimators::{BoxCountSeries, BoxDimFit, PointCloud};
use crate::linalg::SmallVector;

const AXIS_NAMES: [&str; 4] = ["x", "y", "z", "w"];

/// `x,y[,z[,w]]` header, then one row per point.
pub fn write_points_csv<W: Write>(mut out: W, cloud: &PointCloud) -> io::Result<()> {
    writeln!(out, "{}", AXIS_NAMES[..cloud.dim()].join(","))?;
    for p in cloud.points() {
        write_row(&mut out, p)?;
    }
    Ok(())
}

fn write_row<W: Write>(out: &mut W, values: &[f64]) -> io::Result<()> {
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            out.write_all(b",")?;
        }
        write!(out, "{v}")?;
    }
    out.write_all(b"\n")
}

fn cover_header(d: usize) -> String {
    if d == 2 {
        return "cx,cy,semi_major,semi_minor,angle".to_string();
    }
    let centers = (0..d).map(|j| format!("c{j}"));
    let semis = (0..d).map(|j| format!("semi{j}"));
    centers.chain(semis).collect::<Vec<_>>().join(",")
}

/// One row per ellipse. In the plane: center, semi-axes (major first) and
/// the major-axis angle in radians from the x axis; otherwise center and
/// semi-axes only.
pub fn write_cover_csv<W: Write>(mut out: W, ellipses: &[Ellipse]) -> io::Result<()> {
    let Some(first) = ellipses.first() else {
        return writeln!(out, "{}", cover_header(2));
    };
    let d = first.dim();
    writeln!(out, "{}", cover_header(d))?;
    for e in ellipses {
        let mut row: Vec<f64> = e.center.as_slice().to_vec();
        row.extend_from_slice(&e.semi_lengths);
        if d == 2 {
            row.push(e.angle());
        }
        write_row(&mut out, &row)?;
    }
    Ok(())
}

/// Balls of a common radius, in the cover layout with angle 0.
pub fn write_balls_csv<W: Write>(out: W, centers: &[SmallVector], radius: f64) -> io::Result<()> {
    let balls: Vec<Ellipse> = centers.iter().map(|c| Ellipse::ball(*c, radius)).collect();
    write_cover_csv(out, &balls)
}

/// `# n=<depth> s_n=<zero> clamped=<bool> above_ambient=<bool>`, then
/// `s,pressure` rows.
pub fn write_pressure_csv<W: Write>(mut out: W, curve: &PressureCurve) -> io::Result<()> {
    writeln!(
        out,
        "# n={} s_n={} clamped={} above_ambient={}",
        curve.depth, curve.zero, curve.clamped, curve.above_ambient
    )?;
    writeln!(out, "s,pressure")?;
    for &(s, p) in &curve.samples {
        write_row(&mut out, &[s, p])?;
    }
    Ok(())
}

/// `delta,count` rows; with a fit, a footer
/// `# slope=<> intercept=<> max_residual=<> n_points=<>`.
pub fn write_box_counts_csv<W: Write>(
    mut out: W,
    series: &BoxCountSeries,
    fit: Option<&BoxDimFit>,
) -> io::Result<()> {
    writeln!(out, "delta,count")?;
    for (delta, count) in series.scales.iter().zip(&series.counts) {
        writeln!(out, "{delta},{count}")?;
    }
    if let Some(f) = fit {
        writeln!(
            out,
            "# slope={} intercept={} max_residual={} n_points={}",
            f.slope, f.intercept, f.max_residual, series.n_points
        )?;
    }
    Ok(())
}
