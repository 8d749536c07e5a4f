//! CSV and JSON writers for experiment outputs.
//!
//! Floats are written with [`fmt_float`](crate::fmt_float) so that files
//! round-trip exactly and reruns are byte-identical.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::audit::{AuditReport, Verdict};
use crate::error::Result;
use crate::fmt_float;
use crate::model::SubsetMask;
use crate::sim::{MisspecResult, SimulationResult};

/// Long format: one row per (subset, n, replicate).
pub fn write_trajectories<W: Write>(sim: &SimulationResult, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["subset", "n", "replicate", "log_bf", "log_bf_over_n"])?;
    for t in &sim.trajectories {
        let label = t.subset.to_string();
        for (i, &n) in t.n_grid.iter().enumerate() {
            for (r, &v) in t.log_bf[i].iter().enumerate() {
                out.write_record([
                    label.clone(),
                    n.to_string(),
                    r.to_string(),
                    fmt_float(v),
                    fmt_float(v / n as f64),
                ])?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

pub fn write_summary<W: Write>(sim: &SimulationResult, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["subset", "delta_hat", "select_fraction"])?;
    for t in &sim.trajectories {
        out.write_record([t.subset.to_string(), fmt_float(t.delta_hat), fmt_float(t.select_fraction)])?;
    }
    out.flush()?;
    Ok(())
}

/// Replicate-mean pairwise matrix in long format.
pub fn write_misspec<W: Write>(m: &MisspecResult, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["s1", "s2", "log_ibf_over_n"])?;
    for (i, s1) in m.candidates.iter().enumerate() {
        for (j, s2) in m.candidates.iter().enumerate() {
            out.write_record([s1.to_string(), s2.to_string(), fmt_float(m.mean[(i, j)])])?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Ranking of the misspecified candidates, best first.
pub fn write_misspec_ranking<W: Write>(m: &MisspecResult, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["rank", "subset", "row_sum", "delta_hat"])?;
    for (rank, s) in m.ranking.iter().enumerate() {
        let i = m.index_of(s).expect("ranking lists candidates");
        out.write_record([
            (rank + 1).to_string(),
            s.to_string(),
            fmt_float(m.mean.row(i).sum()),
            fmt_float(m.delta_hat[i]),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// One row per (subset, n) with a column per audit series.
pub fn write_audit_csv<W: Write>(reports: &[AuditReport], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "subset",
        "n",
        "delta_over_n",
        "lambda_max_a",
        "mean_gap_over_n",
        "kl_over_n",
        "a4_rowsum",
    ])?;
    for rep in reports {
        for (i, &n) in rep.n_grid.iter().enumerate() {
            let a4 = rep.a4_rowsum.as_ref().map_or(String::new(), |r| fmt_float(r[i]));
            out.write_record([
                rep.subset.to_string(),
                n.to_string(),
                fmt_float(rep.delta_over_n[i]),
                fmt_float(rep.lambda_max_a[i]),
                fmt_float(rep.mean_gap_over_n[i]),
                fmt_float(rep.kl_over_n[i]),
                a4,
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Headline label for a report: `indistinguishable` when candidate and
/// truth coincide, otherwise read off the A1 verdict.
pub fn audit_label(rep: &AuditReport) -> &'static str {
    if rep.indistinguishable {
        return "indistinguishable";
    }
    match rep.verdicts.a1 {
        Verdict::Pass => "distinguishable",
        Verdict::Fail => "means_coincide",
        _ => "inconclusive",
    }
}

#[derive(Serialize)]
struct AuditEntry<'a> {
    verdict: &'static str,
    empirical: bool,
    #[serde(flatten)]
    report: &'a AuditReport,
}

pub fn write_audit_json<W: Write>(reports: &[AuditReport], mut w: W) -> Result<()> {
    let entries: Vec<AuditEntry> = reports
        .iter()
        .map(|report| AuditEntry {
            verdict: audit_label(report),
            empirical: true,
            report,
        })
        .collect();
    serde_json::to_writer_pretty(&mut w, &entries).map_err(std::io::Error::from)?;
    writeln!(w)?;
    Ok(())
}

#[derive(Serialize)]
struct Selection<'a> {
    selected: &'a SubsetMask,
    n: usize,
    replicates: usize,
    selection_rate: f64,
}

/// The selected subset and the fraction of replicates that chose it.
pub fn write_selection<W: Write>(sim: &SimulationResult, mut w: W) -> Result<()> {
    let selected = sim.selected()?;
    let doc = Selection {
        selection_rate: sim.selection_rate(&selected),
        selected: &selected,
        n: *sim.n_grid.last().expect("nonempty grid"),
        replicates: sim.replicate_selection.len(),
    };
    serde_json::to_writer_pretty(&mut w, &doc).map_err(std::io::Error::from)?;
    writeln!(w)?;
    Ok(())
}

/// Creates `path` and hands a buffered writer to `f`.
pub fn to_file<F>(path: &Path, f: F) -> Result<()>
where
    F: FnOnce(&mut BufWriter<File>) -> Result<()>,
{
    let mut w = BufWriter::new(File::create(path)?);
    f(&mut w)?;
    w.flush()?;
    Ok(())
}
