//! CSV tables for correlations, measurement matrices, sweeps and studies.
//!
//! All numbers are written with 12 significant digits.

use std::io::Write;

use crate::analysis::{StudySummary, ToleranceReport};
use crate::error::Result;
use crate::optimize::SweepPoint;
use crate::tomography::{column_labels, dash, CorrelationVector, MeasurementMatrix};

/// Formats like C's `%.12g`.
pub fn sig12(x: f64) -> String {
    const DIGITS: i32 = 12;
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{:.*e}", (DIGITS - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if exp < -4 || exp >= DIGITS {
        let m = trim_zeros(mantissa);
        format!("{m}e{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs())
    } else {
        let decimals = (DIGITS - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().from_writer(w)
}

pub fn write_correlations_csv<W: Write>(w: W, t: &MeasurementMatrix, gamma: &CorrelationVector) -> Result<()> {
    let mut out = writer(w);
    out.write_record(["detector_set", "probability"])?;
    for (set, g) in t.detector_sets().iter().zip(gamma.as_slice()) {
        out.write_record([dash(set), sig12(*g)])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_measurement_csv<W: Write>(w: W, t: &MeasurementMatrix) -> Result<()> {
    let mut out = writer(w);
    let mut header = vec!["detector_set".to_string()];
    header.extend(column_labels(t.n())?);
    out.write_record(&header)?;
    for (r, set) in t.detector_sets().iter().enumerate() {
        let mut rec = vec![dash(set)];
        rec.extend(t.t_real().row(r).iter().map(|&x| sig12(x)));
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_sweep_csv<W: Write>(w: W, points: &[SweepPoint]) -> Result<()> {
    let mut out = writer(w);
    let widths: Vec<usize> = points
        .iter()
        .find_map(|p| p.result.as_ref())
        .map(|r| r.best_phases.iter().map(Vec::len).collect())
        .unwrap_or_default();
    let mut header = vec!["length".to_string(), "condition_number".to_string()];
    for (l, &w) in widths.iter().enumerate() {
        header.extend((0..w).map(|k| format!("phase_{}_{}", l + 1, k)));
    }
    header.push("error".into());
    out.write_record(&header)?;
    let phase_cols: usize = widths.iter().sum();
    for p in points {
        let mut rec = vec![sig12(p.length), sig12(p.condition_number())];
        match &p.result {
            Some(r) => rec.extend(r.best_phases.iter().flatten().map(|&x| sig12(x))),
            None => rec.extend(std::iter::repeat_n(String::new(), phase_cols)),
        }
        rec.push(p.error.clone().unwrap_or_default());
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}

/// One row per trial: `trial,score`.
pub fn write_trials_csv<W: Write>(w: W, score_name: &str, summary: &StudySummary) -> Result<()> {
    let mut out = writer(w);
    out.write_record(["trial", score_name])?;
    for (i, v) in summary.values.iter().enumerate() {
        out.write_record([i.to_string(), sig12(*v)])?;
    }
    out.flush()?;
    Ok(())
}

const SUMMARY_HEADER: [&str; 5] = ["trials", "mean", "min", "max", "std_dev"];

fn summary_fields(s: &StudySummary) -> Vec<String> {
    vec![
        s.trials.to_string(),
        sig12(s.mean),
        sig12(s.min),
        sig12(s.max),
        sig12(s.std_dev),
    ]
}

pub fn write_summary_csv<W: Write>(w: W, summary: &StudySummary) -> Result<()> {
    let mut out = writer(w);
    out.write_record(SUMMARY_HEADER)?;
    out.write_record(summary_fields(summary))?;
    out.flush()?;
    Ok(())
}

pub fn write_histogram_csv<W: Write>(w: W, summary: &StudySummary) -> Result<()> {
    let mut out = writer(w);
    out.write_record(["bin_low", "bin_high", "count", "density"])?;
    let h = &summary.histogram;
    for ((e, c), d) in h.edges.windows(2).zip(&h.counts).zip(h.density()) {
        out.write_record([sig12(e[0]), sig12(e[1]), c.to_string(), sig12(d)])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_tolerance_trials_csv<W: Write>(w: W, report: &ToleranceReport) -> Result<()> {
    let mut out = writer(w);
    out.write_record(["magnitude", "trial", "condition_number"])?;
    for level in &report.levels {
        for (i, v) in level.summary.values.iter().enumerate() {
            out.write_record([sig12(level.magnitude), i.to_string(), sig12(*v)])?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn write_tolerance_summary_csv<W: Write>(w: W, report: &ToleranceReport) -> Result<()> {
    let mut out = writer(w);
    let mut header = vec!["magnitude"];
    header.extend(SUMMARY_HEADER);
    out.write_record(&header)?;
    for level in &report.levels {
        let mut rec = vec![sig12(level.magnitude)];
        rec.extend(summary_fields(&level.summary));
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}
