//! Deterministic CSV and SVG renditions of a partition.

use std::fmt::Write as _;

use num_traits::Zero;
use thiserror::Error;

use crate::ratfunc::{rational_to_string, Rational};
use crate::regions::Region;

use super::PartitionState;

#[derive(Debug, Error)]
pub enum ExportError {
    #[error("svg export needs exactly 2 parameters, model has {0}")]
    DimensionUnsupported(usize),
}

fn class_rows<'s>(st: &'s PartitionState) -> Vec<(&'s Region, &'static str)> {
    let mut rows: Vec<(&Region, &'static str)> = Vec::new();
    rows.extend(st.accepted.iter().map(|r| (r, "accepted")));
    rows.extend(st.rejected.iter().map(|r| (r, "rejected")));
    rows.extend(st.queue.iter().map(|r| (r, "unknown")));
    rows.sort_by(|(a, sa), (b, sb)| {
        sa.cmp(sb).then_with(|| {
            a.intervals()
                .iter()
                .map(|(_, lo, hi)| (lo.clone(), hi.clone()))
                .collect::<Vec<_>>()
                .cmp(
                    &b.intervals()
                        .iter()
                        .map(|(_, lo, hi)| (lo.clone(), hi.clone()))
                        .collect::<Vec<_>>(),
                )
        })
    });
    rows
}

/// One row per box: interval bounds per parameter, then the status. For two
/// parameters the header is the classic `xmin,xmax,ymin,ymax,status`.
pub fn export_csv(st: &PartitionState) -> String {
    let params = st.space.params();
    let mut out = String::new();
    if params.len() == 2 {
        out.push_str("xmin,xmax,ymin,ymax,status\n");
    } else {
        let mut cols = Vec::new();
        for p in &params {
            cols.push(format!("{}_min", p.name()));
            cols.push(format!("{}_max", p.name()));
        }
        cols.push("status".to_string());
        out.push_str(&cols.join(","));
        out.push('\n');
    }
    for (region, status) in class_rows(st) {
        let mut cols = Vec::new();
        for (_, lo, hi) in region.intervals() {
            cols.push(rational_to_string(lo));
            cols.push(rational_to_string(hi));
        }
        cols.push(status.to_string());
        out.push_str(&cols.join(","));
        out.push('\n');
    }
    out
}

const VIEW: f64 = 1000.0;

fn to_f64(r: &Rational) -> f64 {
    let n: f64 = r.numer().to_string().parse().unwrap_or(0.0);
    let d: f64 = r.denom().to_string().parse().unwrap_or(1.0);
    n / d
}

/// Green/red/white boxes on a fixed 1000x1000 viewport; the y axis points up.
pub fn export_svg(st: &PartitionState) -> Result<String, ExportError> {
    let params = st.space.params();
    if params.len() != 2 {
        return Err(ExportError::DimensionUnsupported(params.len()));
    }
    let (_, xlo, xhi) = &st.space.intervals()[0];
    let (_, ylo, yhi) = &st.space.intervals()[1];
    let xw = xhi - xlo;
    let yw = yhi - ylo;
    if xw.is_zero() || yw.is_zero() {
        return Err(ExportError::DimensionUnsupported(params.len()));
    }
    let mut out = String::new();
    writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {} {}\">",
        VIEW as u32, VIEW as u32
    )
    .unwrap();
    writeln!(
        out,
        "<rect x=\"0\" y=\"0\" width=\"{}\" height=\"{}\" fill=\"white\" stroke=\"black\"/>",
        VIEW as u32, VIEW as u32
    )
    .unwrap();
    for (region, status) in class_rows(st) {
        let fill = match status {
            "accepted" => "#2e7d32",
            "rejected" => "#c62828",
            _ => "none",
        };
        if fill == "none" {
            continue;
        }
        let (_, alo, ahi) = &region.intervals()[0];
        let (_, blo, bhi) = &region.intervals()[1];
        let x = (to_f64(alo) - to_f64(xlo)) / to_f64(&xw) * VIEW;
        let w = (to_f64(ahi) - to_f64(alo)) / to_f64(&xw) * VIEW;
        let yh = (to_f64(bhi) - to_f64(ylo)) / to_f64(&yw) * VIEW;
        let h = (to_f64(bhi) - to_f64(blo)) / to_f64(&yw) * VIEW;
        let y = VIEW - yh;
        writeln!(
            out,
            "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"{}\" stroke=\"none\"/>",
            x, y, w, h, fill
        )
        .unwrap();
    }
    out.push_str("</svg>\n");
    Ok(out)
}
