//! CSV and SVG output.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};
use crate::trace::{relative_metric, TraceSet};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Svg,
}

/// One CSV row per metric record. `up_bits` and `down_bits` are the bits
/// charged in iteration `t`; `total_bits_cum` is the cumulative TotalCom.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub t: u64,
    pub communicated: bool,
    pub up_bits: u64,
    pub down_bits: u64,
    pub total_bits_cum: f64,
    pub psi: f64,
    pub subopt: f64,
    pub bregman_sum: f64,
    pub consensus_client: f64,
    pub consensus_y: f64,
    pub seed: u64,
}

pub const CSV_HEADER: &str =
    "t,communicated,up_bits,down_bits,total_bits_cum,psi,subopt,bregman_sum,consensus_client,consensus_y,seed";

pub fn rows(set: &TraceSet) -> Vec<CsvRow> {
    let mut out = Vec::new();
    for st in &set.traces {
        for r in &st.trace.records {
            let round = (r.t > 0).then(|| st.trace.rounds[r.t as usize - 1]);
            out.push(CsvRow {
                t: r.t,
                communicated: round.is_some_and(|x| x.communicated),
                up_bits: round.map_or(0, |x| x.up_bits),
                down_bits: round.map_or(0, |x| x.down_bits),
                total_bits_cum: r.totalcom_bits,
                psi: r.psi,
                subopt: r.subopt,
                bregman_sum: r.bregman_sum,
                consensus_client: r.consensus_client,
                consensus_y: r.consensus_y,
                seed: st.seed,
            });
        }
    }
    out
}

pub fn write_csv<W: Write>(set: &TraceSet, w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for row in rows(set) {
        wr.serialize(row)?;
    }
    wr.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(r: R) -> Result<Vec<CsvRow>> {
    let mut rd = csv::Reader::from_reader(r);
    Ok(rd.deserialize().collect::<std::result::Result<Vec<CsvRow>, _>>()?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub t: u64,
    pub count: usize,
    pub total_bits_mean: f64,
    pub metric_mean: f64,
    pub metric_lo: f64,
    pub metric_hi: f64,
}

/// Mean and min/max band of the relative stopping metric across seeds,
/// per recorded iteration.
pub fn aggregate(set: &TraceSet) -> Vec<AggregateRow> {
    let mut by_t: BTreeMap<u64, Vec<(f64, f64)>> = BTreeMap::new();
    for st in &set.traces {
        let rel = relative_metric(&st.trace.records, set.stop_metric);
        for (r, m) in st.trace.records.iter().zip(rel) {
            by_t.entry(r.t).or_default().push((r.totalcom_bits, m));
        }
    }
    by_t.into_iter()
        .map(|(t, v)| {
            let c = v.len() as f64;
            AggregateRow {
                t,
                count: v.len(),
                total_bits_mean: v.iter().map(|x| x.0).sum::<f64>() / c,
                metric_mean: v.iter().map(|x| x.1).sum::<f64>() / c,
                metric_lo: v.iter().map(|x| x.1).fold(f64::INFINITY, f64::min),
                metric_hi: v.iter().map(|x| x.1).fold(f64::NEG_INFINITY, f64::max),
            }
        })
        .collect()
}

pub fn write_aggregate<W: Write>(set: &TraceSet, w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for row in aggregate(set) {
        wr.serialize(row)?;
    }
    wr.flush()?;
    Ok(())
}

/// Log-linear plot of the relative stopping metric against cumulative
/// TotalCom bits, one polyline per seed.
pub fn render_svg(set: &TraceSet) -> String {
    const W: f64 = 640.0;
    const H: f64 = 400.0;
    const M: f64 = 50.0;
    let series: Vec<Vec<(f64, f64)>> = set
        .traces
        .iter()
        .map(|st| {
            st.trace
                .records
                .iter()
                .zip(relative_metric(&st.trace.records, set.stop_metric))
                .filter(|(_, m)| *m > 0.0 && m.is_finite())
                .map(|(r, m)| (r.totalcom_bits, m.log10()))
                .collect()
        })
        .collect();
    let pts = series.iter().flatten();
    let x_max = pts.clone().map(|p| p.0).fold(1.0, f64::max);
    let y_min = pts.clone().map(|p| p.1).fold(f64::INFINITY, f64::min).min(-1.0).floor();
    let y_max = pts.map(|p| p.1).fold(f64::NEG_INFINITY, f64::max).max(0.0).ceil();
    let sx = |x: f64| M + x / x_max * (W - 2.0 * M);
    let sy = |y: f64| H - M - (y - y_min) / (y_max - y_min) * (H - 2.0 * M);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(s, r#"<path d="M{M} {M} V{} H{}" stroke="black" fill="none"/>"#, H - M, W - M);
    let mut e = y_min as i64;
    while e <= y_max as i64 {
        let y = sy(e as f64);
        let _ =
            writeln!(s, r#"<text x="{}" y="{y:.1}" font-size="10" text-anchor="end">1e{e}</text>"#, M - 4.0);
        e += 1;
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-size="11" text-anchor="middle">TotalCom bits (max {x_max:.3e})</text>"#,
        W / 2.0,
        H - 12.0
    );
    let palette = ["#c0392b", "#2471a3", "#229954", "#7d3c98", "#d68910", "#515a5a"];
    for (i, line) in series.iter().enumerate() {
        if line.is_empty() {
            continue;
        }
        let pts: Vec<String> = line.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{}" stroke-width="1" points="{}"/>"#,
            palette[i % palette.len()],
            pts.join(" ")
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Writes the trace set to `dir` and returns the created paths.
pub fn emit(set: &TraceSet, format: Format, dir: &Path) -> Result<Vec<PathBuf>> {
    if set.traces.is_empty() {
        return Err(HarnessError::EmptyTraceSet);
    }
    std::fs::create_dir_all(dir)?;
    let mut out = Vec::new();
    match format {
        Format::Csv => {
            let p = dir.join("trace.csv");
            write_csv(set, std::fs::File::create(&p)?)?;
            out.push(p);
            let p = dir.join("aggregate.csv");
            write_aggregate(set, std::fs::File::create(&p)?)?;
            out.push(p);
        }
        Format::Svg => {
            let p = dir.join("plot.svg");
            std::fs::write(&p, render_svg(set))?;
            out.push(p);
        }
    }
    Ok(out)
}
