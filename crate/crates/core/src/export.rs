//! Result serialization: per-run CSV, event traces as JSON lines, KPI
//! summaries, and histogram/density tables.
//!
//! Formatting is deterministic — a batch serialized twice yields identical
//! bytes — so exported artifacts can be diffed across machines and runs.
//! Files are written atomically via a sibling temporary file.

use std::fmt::Write as _;
use std::path::Path;

use crate::analytics::{AnalyticalPdf, KpiSummary, TocHistogram};
use crate::error::Result;
use crate::scenario::{Scheme, SearchBudget};
use crate::sim::RunResult;

/// Column order of the per-run table.
pub const RUNS_CSV_HEADER: &str =
    "scheme,variant,d_mrm,spot_count,layout_id,seed,toc_x,outcome,stop_x,dist_mrm_speed,parked_window";

fn fmt_opt(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.3}")).unwrap_or_default()
}

fn fmt_opt_usize(x: Option<usize>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

/// Search budget as it appears in the `d_mrm` column; empty outside the
/// notification scheme where no budget applies.
fn d_mrm_label(r: &RunResult, budget: SearchBudget) -> &'static str {
    if r.scheme != Scheme::Denm {
        return "";
    }
    match budget.meters() {
        Some(b) if b == 0.0 => "0",
        Some(_) => "50",
        None => "unlimited",
    }
}

/// Renders a batch as CSV. The string form exists so callers can assert
/// byte-for-byte determinism without touching the filesystem.
pub fn runs_csv_string(results: &[RunResult], budget: SearchBudget) -> String {
    let mut out = String::with_capacity(64 * (results.len() + 1));
    out.push_str(RUNS_CSV_HEADER);
    out.push('\n');
    for r in results {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{:.3},{}",
            r.scheme.label(),
            r.variant,
            d_mrm_label(r, budget),
            r.layout.len(),
            r.layout_id,
            r.seed,
            fmt_opt(r.toc_x),
            r.outcome.label(),
            fmt_opt(r.stop_x),
            r.dist_at_mrm_speed,
            fmt_opt_usize(r.parked_window),
        );
    }
    out
}

pub fn write_runs_csv(path: &Path, results: &[RunResult], budget: SearchBudget) -> Result<()> {
    write_atomic(path, runs_csv_string(results, budget).as_bytes())
}

/// One JSON object per trace event, tagged with its run's position in the
/// batch.
pub fn traces_jsonl_string(results: &[RunResult]) -> String {
    let mut out = String::new();
    for (run, r) in results.iter().enumerate() {
        for ev in &r.trace {
            let line = serde_json::json!({
                "run": run,
                "t": ev.t,
                "entity": ev.entity,
                "event": ev.event,
                "payload": ev.payload,
            });
            let _ = writeln!(out, "{line}");
        }
    }
    out
}

pub fn write_traces_jsonl(path: &Path, results: &[RunResult]) -> Result<()> {
    write_atomic(path, traces_jsonl_string(results).as_bytes())
}

/// Column order of the KPI summary table.
pub const SUMMARY_CSV_HEADER: &str = "variant,runs,parked,stopped_on_lane,no_toc,\
success_rate_pct,mean_stop_x,min_stop_x,max_stop_x,mean_dist_mrm_speed,max_dist_mrm_speed";

pub fn summary_csv_string(rows: &[(String, KpiSummary)]) -> String {
    let mut out = String::new();
    out.push_str(SUMMARY_CSV_HEADER);
    out.push('\n');
    for (variant, kpi) in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{:.3},{},{},{},{:.3},{:.3}",
            variant,
            kpi.runs,
            kpi.parked,
            kpi.stopped_on_lane,
            kpi.no_toc,
            kpi.success_rate_pct,
            fmt_opt(kpi.mean_stop_x),
            fmt_opt(kpi.min_stop_x),
            fmt_opt(kpi.max_stop_x),
            kpi.mean_dist_at_mrm_speed,
            kpi.max_dist_at_mrm_speed,
        );
    }
    out
}

pub fn write_summary_csv(path: &Path, rows: &[(String, KpiSummary)]) -> Result<()> {
    write_atomic(path, summary_csv_string(rows).as_bytes())
}

/// Histogram as `x_lo,x_hi,mass` rows.
pub fn histogram_csv_string(hist: &TocHistogram) -> String {
    let mut out = String::from("x_lo,x_hi,mass\n");
    for (bin, _) in hist.bins() {
        let _ = writeln!(
            out,
            "{:.3},{:.3},{:.6}",
            hist.bin_lo(bin),
            hist.bin_hi(bin),
            hist.frequency(bin),
        );
    }
    out
}

/// Closed-form distribution in the same `x_lo,x_hi,mass` shape: atoms
/// occupy zero-width rows, bands carry their integrated mass.
pub fn pdf_csv_string(pdf: &AnalyticalPdf) -> String {
    let mut out = String::from("x_lo,x_hi,mass\n");
    for atom in &pdf.atoms {
        let _ = writeln!(out, "{:.3},{:.3},{:.6}", atom.x, atom.x, atom.mass);
    }
    for band in &pdf.bands {
        let _ = writeln!(
            out,
            "{:.3},{:.3},{:.6}",
            band.lo,
            band.hi,
            band.density * (band.hi - band.lo),
        );
    }
    out
}

pub fn write_histogram_csv(path: &Path, hist: &TocHistogram) -> Result<()> {
    write_atomic(path, histogram_csv_string(hist).as_bytes())
}

pub fn write_pdf_csv(path: &Path, pdf: &AnalyticalPdf) -> Result<()> {
    write_atomic(path, pdf_csv_string(pdf).as_bytes())
}

/// Writes through a temporary sibling so readers never observe a partial
/// file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    use std::io::Write as _;
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    if let Some(dir) = dir {
        std::fs::create_dir_all(dir)?;
    }
    let mut tmp = match dir {
        Some(dir) => tempfile::NamedTempFile::new_in(dir)?,
        None => tempfile::NamedTempFile::new_in(".")?,
    };
    tmp.write_all(bytes)?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::CalibrationProfile;
    use crate::scenario::ScenarioConfig;
    use crate::sim::{Outcome, TraceEvent};

    fn sample_results() -> Vec<RunResult> {
        vec![
            RunResult {
                scheme: Scheme::Denm,
                variant: "fifty".into(),
                layout_id: 3,
                layout: vec![3],
                seed: 42,
                toc_x: Some(500.0),
                outcome: Outcome::Parked,
                stop_x: None,
                dist_at_mrm_speed: 33.33,
                parked_window: Some(3),
                sim_time: 70.0,
                trace: vec![TraceEvent {
                    t: 0.1,
                    entity: "cav",
                    event: "hazard_armed",
                    payload: serde_json::json!({ "trigger_x": 500.0 }),
                }],
            },
            RunResult {
                scheme: Scheme::Denm,
                variant: "fifty".into(),
                layout_id: 17,
                layout: vec![17],
                seed: 43,
                toc_x: Some(500.0),
                outcome: Outcome::StoppedOnLane,
                stop_x: Some(109.33),
                dist_at_mrm_speed: 50.0,
                parked_window: None,
                sim_time: 80.0,
                trace: Vec::new(),
            },
        ]
    }

    #[test]
    fn runs_csv_matches_the_frozen_shape() {
        let csv = runs_csv_string(&sample_results(), SearchBudget::Fifty);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], RUNS_CSV_HEADER);
        assert_eq!(
            lines[1],
            "denm,fifty,50,1,3,42,500.000,parked,,33.330,3"
        );
        assert_eq!(
            lines[2],
            "denm,fifty,50,1,17,43,500.000,stopped_on_lane,109.330,50.000,"
        );
    }

    #[test]
    fn serialization_is_byte_stable() {
        let results = sample_results();
        let a = runs_csv_string(&results, SearchBudget::Fifty);
        let b = runs_csv_string(&results, SearchBudget::Fifty);
        assert_eq!(a, b);
    }

    #[test]
    fn traces_become_one_json_object_per_line() {
        let jsonl = traces_jsonl_string(&sample_results());
        let lines: Vec<&str> = jsonl.lines().collect();
        assert_eq!(lines.len(), 1);
        let v: serde_json::Value = serde_json::from_str(lines[0]).unwrap();
        assert_eq!(v["run"], 0);
        assert_eq!(v["event"], "hazard_armed");
        assert_eq!(v["payload"]["trigger_x"], 500.0);
    }

    #[test]
    fn atomic_write_replaces_the_target_in_one_step() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out/runs.csv");
        write_runs_csv(&path, &sample_results(), SearchBudget::Fifty).unwrap();
        let read_back = std::fs::read_to_string(&path).unwrap();
        assert_eq!(read_back, runs_csv_string(&sample_results(), SearchBudget::Fifty));
        // Overwrite works too.
        write_runs_csv(&path, &sample_results()[..1], SearchBudget::Fifty).unwrap();
        let shorter = std::fs::read_to_string(&path).unwrap();
        assert_eq!(shorter.lines().count(), 2);
    }

    #[test]
    fn histogram_and_density_tables_share_their_shape() {
        let cfg = ScenarioConfig::default();
        let profile = CalibrationProfile::default();
        let pdf = crate::analytics::pdf_min_dmrm(&cfg, &profile);
        let mut hist = crate::analytics::TocHistogram::for_scenario(&cfg, &profile);
        for atom in &pdf.atoms {
            hist.add(atom.x);
        }
        let hist_csv = histogram_csv_string(&hist);
        let pdf_csv = pdf_csv_string(&pdf);
        assert!(hist_csv.starts_with("x_lo,x_hi,mass\n"));
        assert!(pdf_csv.starts_with("x_lo,x_hi,mass\n"));
        assert_eq!(hist_csv.lines().count(), 19); // header + 18 occupied bins
        assert_eq!(pdf_csv.lines().count(), 19); // header + 18 atoms
        // Every bin holds exactly one atom's mass.
        for line in hist_csv.lines().skip(1) {
            assert!(line.ends_with(",0.055556"), "unexpected row {line}");
        }
    }
}
