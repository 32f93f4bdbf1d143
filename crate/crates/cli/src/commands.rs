//! The three commands: batch simulation with CSV export, reproduction of
//! the published evaluation targets, and sampled density validation.

use std::fs;
use std::path::Path;

use log::info;
use rand::Rng;
use tocsim_core::export::{
    write_atomic, write_histogram_csv, write_pdf_csv, write_runs_csv, write_summary_csv,
    write_traces_jsonl,
};
use tocsim_core::reference::{
    distribution, COORDINATED_SUCCESS_PCT, CRAWL_DISTANCES_AT_700, SINGLE_SPOT_RATES,
    STOP_POSITIONS, TWO_SPOT_RATES,
};
use tocsim_core::{
    aggregate, empirical_atoms, l1_distance, min_dist_to_safespot, pdf_denm, pdf_distr_toc,
    pdf_min_dmrm, rng_stream, AnalyticalPdf, BatchMode, CalibrationProfile, CavOption,
    ChannelModel, Engine, EngineOptions, Outcome, RsuOption, RunResult, ScenarioConfig, Scheme,
    SearchBudget, SeedPurpose, TocHistogram,
};

use crate::config::FileConfig;
use crate::{
    CliError, ModeArg, PdfVariantArg, ReproduceArgs, RunArgs, TargetArg, ValidatePdfArgs,
};

/// Replicates per layout when a success-rate readout involves the
/// randomized trigger; the rate itself is layout-determined.
const RATE_CHECK_REPLICATES: usize = 50;
/// Default replicates per window for fig14's randomized trigger.
const FIG14_REPLICATES: usize = 1_000;

fn runtime(e: tocsim_core::Error) -> CliError {
    CliError::Runtime(e.to_string())
}

/// Engine construction fails only over inadmissible inputs, so its errors
/// map to the configuration exit code.
fn build_engine(cfg: ScenarioConfig, opts: EngineOptions) -> Result<Engine, CliError> {
    Engine::new(cfg, CalibrationProfile::default(), opts)
        .map_err(|e| CliError::Config(e.to_string()))
}

fn denm_engine(budget: SearchBudget, spot_count: usize) -> Result<Engine, CliError> {
    let mut cfg = ScenarioConfig::default();
    cfg.scheme = Scheme::Denm;
    cfg.denm_d_mrm = budget;
    cfg.spot_count = spot_count;
    build_engine(cfg, EngineOptions::default())
}

fn mcm_engine(
    rsu_option: RsuOption,
    cav_option: CavOption,
    spot_count: usize,
    max_toc_range: f64,
    replicates: usize,
) -> Result<Engine, CliError> {
    let mut cfg = ScenarioConfig::default();
    cfg.scheme = Scheme::Mcm;
    cfg.mcm_rsu_option = rsu_option;
    cfg.mcm_cav_option = cav_option;
    cfg.spot_count = spot_count;
    cfg.max_toc_range = max_toc_range;
    let mut opts = EngineOptions::default();
    opts.distr_replicates = replicates;
    build_engine(cfg, opts)
}

fn budget_from_label(label: &str) -> SearchBudget {
    match label {
        "zero" => SearchBudget::Zero,
        "fifty" => SearchBudget::Fifty,
        "unlimited" => SearchBudget::Unlimited,
        other => unreachable!("reference table carries unknown budget `{other}`"),
    }
}

fn success_pct(results: &[RunResult]) -> f64 {
    let parked = results
        .iter()
        .filter(|r| r.outcome == Outcome::Parked)
        .count();
    100.0 * parked as f64 / results.len() as f64
}

fn histogram_of(results: &[RunResult], cfg: &ScenarioConfig) -> TocHistogram {
    let mut hist = TocHistogram::for_scenario(cfg, &CalibrationProfile::default());
    for r in results {
        if let Some(toc) = r.toc_x {
            hist.add(toc);
        }
    }
    hist
}

/// Compact float rendering for report cells: fixed 3 decimals with
/// trailing zeros trimmed, and sub-micrometer magnitudes collapsed to 0.
fn fmt_num(x: f64) -> String {
    if x.abs() < 1e-6 {
        return "0".to_string();
    }
    let s = format!("{x:.3}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

// ---------------------------------------------------------------------------
// run

pub fn cmd_run(args: &RunArgs) -> Result<(), CliError> {
    let mut file_cfg = match &args.config {
        Some(path) => crate::config::load_config(path)?,
        None => FileConfig::default(),
    };
    if let Some(scheme) = args.scheme {
        file_cfg.scenario.scheme = scheme.into();
    }
    if let Some(budget) = args.budget {
        file_cfg.scenario.denm_d_mrm = budget.into();
    }
    if let Some(rsu) = args.rsu_option {
        file_cfg.scenario.mcm_rsu_option = rsu.into();
    }
    if let Some(cav) = args.cav_option {
        file_cfg.scenario.mcm_cav_option = cav.into();
    }
    if let Some(spots) = args.spots {
        file_cfg.scenario.spot_count = spots;
    }
    if let Some(range) = args.comm_range {
        file_cfg.comm_range = Some(range);
    }
    if let Some(p) = args.p_loss {
        if !(0.0..=1.0).contains(&p) {
            return Err(CliError::Config(format!("p_loss {p} outside [0, 1]")));
        }
        file_cfg.p_loss = p;
    }

    let mut opts = EngineOptions::default();
    opts.channel = ChannelModel {
        comm_range: file_cfg.comm_range,
        p_loss: file_cfg.p_loss,
    };
    opts.capture_trace = args.trace;
    opts.distr_replicates = args.replicates;

    let variant = file_cfg.scenario.variant_label();
    let engine = build_engine(file_cfg.scenario, opts)?;
    let mode = match args.mode {
        ModeArg::Enumerate => BatchMode::Enumerate,
        ModeArg::MonteCarlo => BatchMode::MonteCarlo { runs: args.runs },
    };
    info!("running batch: {variant}, seed {}", args.seed);
    let results = engine.batch(mode, args.seed).map_err(runtime)?;

    fs::create_dir_all(&args.out)?;
    write_runs_csv(
        &args.out.join("runs.csv"),
        &results,
        engine.scenario.denm_d_mrm,
    )
    .map_err(runtime)?;
    let kpi = aggregate(&results, &engine.profile, &engine.scenario).map_err(runtime)?;
    let success = kpi.success_rate_pct;
    write_summary_csv(&args.out.join("summary.csv"), &[(variant.clone(), kpi)])
        .map_err(runtime)?;
    let hist = histogram_of(&results, &engine.scenario);
    write_histogram_csv(&args.out.join("toc_histogram.csv"), &hist).map_err(runtime)?;
    if args.trace {
        write_traces_jsonl(&args.out.join("traces.jsonl"), &results).map_err(runtime)?;
    }

    println!(
        "{} runs ({variant}): {:.1}% parked -> {}",
        results.len(),
        success,
        args.out.display()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// reproduce

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Status {
    Pass,
    Fail,
    /// Within the pinned acceptance band, but documented to differ from
    /// the published value.
    ExpectedDeviation,
    /// Measured without a published counterpart (off-reference settings).
    Uncompared,
}

impl Status {
    fn label(&self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::ExpectedDeviation => "expected_deviation",
            Status::Uncompared => "uncompared",
        }
    }
}

struct Comparison {
    case: String,
    metric: &'static str,
    ours: f64,
    paper_value: f64,
    tolerance: String,
    status: Status,
}

fn status_tol(ours: f64, reference: f64, tol: f64) -> Status {
    if (ours - reference).abs() <= tol {
        Status::Pass
    } else {
        Status::Fail
    }
}

pub fn cmd_reproduce(args: &ReproduceArgs) -> Result<(), CliError> {
    let rows = match args.target {
        TargetArg::Table2 => reproduce_table2(args.seed)?,
        TargetArg::Table3 => reproduce_table3(args.seed)?,
        TargetArg::Fig14 => reproduce_fig14(
            args.range,
            args.runs.unwrap_or(FIG14_REPLICATES),
            args.seed,
        )?,
        TargetArg::Fig15 => {
            reproduce_fig15(args.runs.unwrap_or(distribution::MC_RUNS), args.seed)?
        }
    };
    emit(args.target.label(), &rows, &args.out)
}

fn emit(target: &str, rows: &[Comparison], out_dir: &Path) -> Result<(), CliError> {
    let mut csv = String::from("target,case,metric,ours,paper_value,tolerance,status\n");
    for row in rows {
        csv.push_str(&format!(
            "{target},{},{},{},{},{},{}\n",
            row.case,
            row.metric,
            fmt_num(row.ours),
            fmt_num(row.paper_value),
            row.tolerance,
            row.status.label()
        ));
    }
    fs::create_dir_all(out_dir)?;
    let path = out_dir.join(format!("{target}.csv"));
    write_atomic(&path, csv.as_bytes()).map_err(runtime)?;

    println!("{target}:");
    for row in rows {
        println!(
            "  {:<28} {:<22} ours {:>9}  published {:>7}  tol {:<9} {}",
            row.case,
            row.metric,
            fmt_num(row.ours),
            fmt_num(row.paper_value),
            row.tolerance,
            row.status.label()
        );
    }
    let passes = rows.iter().filter(|r| r.status == Status::Pass).count();
    let deviations = rows
        .iter()
        .filter(|r| r.status == Status::ExpectedDeviation)
        .count();
    let fails = rows.iter().filter(|r| r.status == Status::Fail).count();
    println!(
        "reproduce {target}: {} comparisons, {passes} pass, {deviations} expected deviation(s), {fails} fail -> {}",
        rows.len(),
        path.display()
    );
    if fails > 0 {
        Err(CliError::Mismatch(format!(
            "{target}: {fails} comparison(s) outside tolerance"
        )))
    } else {
        Ok(())
    }
}

fn reproduce_table3(seed: u64) -> Result<Vec<Comparison>, CliError> {
    let mut rows = Vec::new();
    for spec in STOP_POSITIONS {
        let engine = denm_engine(budget_from_label(spec.variant), 1)?;
        let result = engine
            .run(&[spec.window], spec.window, seed)
            .map_err(runtime)?;
        let ours = result.stop_x.ok_or_else(|| {
            CliError::Runtime(format!("{}: run did not stop on the lane", spec.variant))
        })?;
        rows.push(Comparison {
            case: spec.variant.to_string(),
            metric: "stop_position_m",
            ours,
            paper_value: spec.reference_stop_x,
            tolerance: fmt_num(spec.tol),
            status: status_tol(ours, spec.reference_stop_x, spec.tol),
        });
    }
    Ok(rows)
}

fn reproduce_table2(seed: u64) -> Result<Vec<Comparison>, CliError> {
    let mut rows = Vec::new();
    for (section, spots, specs) in [
        ("b", 1usize, SINGLE_SPOT_RATES),
        ("c", 2usize, TWO_SPOT_RATES),
    ] {
        for spec in specs {
            let engine = denm_engine(budget_from_label(spec.variant), spots)?;
            let results = engine.batch(BatchMode::Enumerate, seed).map_err(runtime)?;
            let pct = success_pct(&results);
            let in_band = (pct - spec.reference_pct).abs() <= spec.tol_pp;
            let status = match spec.expected_pct {
                Some(expected) if in_band && (pct - expected).abs() < 1e-9 => {
                    Status::ExpectedDeviation
                }
                _ => status_tol(pct, spec.reference_pct, spec.tol_pp),
            };
            rows.push(Comparison {
                case: format!("{section}/{}", spec.variant),
                metric: "success_pct",
                ours: pct,
                paper_value: spec.reference_pct,
                tolerance: fmt_num(spec.tol_pp),
                status,
            });
        }
        for rsu_option in [RsuOption::MinDmrm, RsuOption::DistrToc] {
            for cav_option in [CavOption::RsuAdvice, CavOption::CavDecision] {
                let engine =
                    mcm_engine(rsu_option, cav_option, spots, 900.0, RATE_CHECK_REPLICATES)?;
                let results = engine.batch(BatchMode::Enumerate, seed).map_err(runtime)?;
                let pct = success_pct(&results);
                rows.push(Comparison {
                    case: format!(
                        "{section}/{}/{}",
                        rsu_option.label(),
                        cav_option.label()
                    ),
                    metric: "success_pct",
                    ours: pct,
                    paper_value: COORDINATED_SUCCESS_PCT,
                    tolerance: "0".to_string(),
                    status: status_tol(pct, COORDINATED_SUCCESS_PCT, 0.0),
                });
            }
        }
    }
    Ok(rows)
}

fn reproduce_fig14(range: f64, replicates: usize, seed: u64) -> Result<Vec<Comparison>, CliError> {
    let compare = (range - 700.0).abs() < 1e-9;
    if !compare {
        println!("note: published readouts correspond to the 700 m cap; comparisons left open");
    }
    let profile = CalibrationProfile::default();
    let mut probe = ScenarioConfig::default();
    probe.scheme = Scheme::Mcm;
    probe.max_toc_range = range;
    probe
        .validate()
        .map_err(|e| CliError::Config(e.to_string()))?;
    let feasible: Vec<usize> = (0..probe.window_count())
        .filter(|&k| min_dist_to_safespot(k, &profile, &probe) <= range)
        .collect();
    if feasible.is_empty() {
        return Err(CliError::Config(format!(
            "take-over cap {range} m is below every window's minimum distance"
        )));
    }

    let mut rows = Vec::new();
    for spec in CRAWL_DISTANCES_AT_700 {
        let (rsu_option, cav_option) = match spec.variant {
            "min_dmrm/rsu_advice" => (RsuOption::MinDmrm, CavOption::RsuAdvice),
            "min_dmrm/cav_decision" => (RsuOption::MinDmrm, CavOption::CavDecision),
            "distr_toc/rsu_advice" => (RsuOption::DistrToc, CavOption::RsuAdvice),
            "distr_toc/cav_decision" => (RsuOption::DistrToc, CavOption::CavDecision),
            other => unreachable!("reference table carries unknown variant `{other}`"),
        };
        let reps = if rsu_option == RsuOption::DistrToc {
            replicates
        } else {
            1
        };
        let engine = mcm_engine(rsu_option, cav_option, 1, range, reps)?;
        let mut max_dist = 0.0f64;
        let mut seeder = rng_stream(seed, 0, SeedPurpose::RunSeeds);
        for &window in &feasible {
            for _ in 0..reps {
                let result = engine
                    .run(&[window], window, seeder.gen())
                    .map_err(runtime)?;
                max_dist = max_dist.max(result.dist_at_mrm_speed);
            }
        }
        let status = if !compare {
            Status::Uncompared
        } else if spec.band.0 <= max_dist && max_dist <= spec.band.1 {
            if spec.expected_max.is_some() {
                Status::ExpectedDeviation
            } else {
                Status::Pass
            }
        } else {
            Status::Fail
        };
        rows.push(Comparison {
            case: spec.variant.to_string(),
            metric: "max_crawl_m",
            ours: max_dist,
            paper_value: spec.reference_max,
            tolerance: format!("{}..{}", fmt_num(spec.band.0), fmt_num(spec.band.1)),
            status,
        });
    }
    Ok(rows)
}

fn reproduce_fig15(runs: usize, seed: u64) -> Result<Vec<Comparison>, CliError> {
    if runs == 0 {
        return Err(CliError::Config("--runs must be positive".to_string()));
    }
    let profile = CalibrationProfile::default();
    let mut cfg = ScenarioConfig::default();
    cfg.scheme = Scheme::Mcm;
    // Monte-Carlo noise shrinks with the square root of the sample count,
    // so the budgets pinned at the reference count scale accordingly.
    let scale = (distribution::MC_RUNS as f64 / runs as f64).sqrt();
    let freq_tol = distribution::FREQ_TOL * scale;
    let l1_budget = distribution::L1_MAX * scale;
    let mut rows = Vec::new();

    // Notification scheme: a single atom at the relevance distance.
    let engine = denm_engine(SearchBudget::Unlimited, 1)?;
    let results = engine.batch(BatchMode::Enumerate, seed).map_err(runtime)?;
    let relevance = engine.scenario.relevance_distance;
    // Report the worst-deviating transfer position; they all coincide.
    let ours = results
        .iter()
        .filter_map(|r| r.toc_x)
        .max_by(|a, b| {
            let (da, db) = ((a - relevance).abs(), (b - relevance).abs());
            da.partial_cmp(&db).expect("positions are finite")
        })
        .unwrap_or(f64::NAN);
    rows.push(Comparison {
        case: "denm".to_string(),
        metric: "toc_position_m",
        ours,
        paper_value: relevance,
        tolerance: fmt_num(distribution::ATOM_TOL),
        status: status_tol(ours, relevance, distribution::ATOM_TOL),
    });

    // Earliest braking: one atom per window, uniform weights.
    let closed = pdf_min_dmrm(&cfg, &profile);
    let engine = mcm_engine(RsuOption::MinDmrm, CavOption::RsuAdvice, 1, 900.0, 1)?;
    let enumerated = engine.batch(BatchMode::Enumerate, seed).map_err(runtime)?;
    let max_atom_err = enumerated
        .iter()
        .zip(&closed.atoms)
        .map(|(r, atom)| (r.toc_x.unwrap_or(f64::NAN) - atom.x).abs())
        .fold(0.0f64, f64::max);
    rows.push(Comparison {
        case: "min_dmrm".to_string(),
        metric: "max_atom_error_m",
        ours: max_atom_err,
        paper_value: 0.0,
        tolerance: fmt_num(distribution::ATOM_TOL),
        status: status_tol(max_atom_err, 0.0, distribution::ATOM_TOL),
    });
    let sampled = engine
        .batch(BatchMode::MonteCarlo { runs }, seed)
        .map_err(runtime)?;
    let samples: Vec<f64> = sampled.iter().filter_map(|r| r.toc_x).collect();
    let clusters = empirical_atoms(&samples, 1.0);
    rows.push(Comparison {
        case: "min_dmrm".to_string(),
        metric: "atom_count",
        ours: clusters.len() as f64,
        paper_value: closed.atoms.len() as f64,
        tolerance: "0".to_string(),
        status: status_tol(clusters.len() as f64, closed.atoms.len() as f64, 0.0),
    });
    let hist = histogram_of(&sampled, &cfg);
    let max_freq_err = closed
        .atoms
        .iter()
        .map(|atom| (hist.frequency(hist.bin_of(atom.x)) - atom.mass).abs())
        .fold(0.0f64, f64::max);
    rows.push(Comparison {
        case: "min_dmrm".to_string(),
        metric: "max_freq_error",
        ours: max_freq_err,
        paper_value: 0.0,
        tolerance: fmt_num(freq_tol),
        status: status_tol(max_freq_err, 0.0, freq_tol),
    });
    let nearest = clusters.first().map(|&(x, _)| x).unwrap_or(f64::NAN);
    rows.push(Comparison {
        case: "min_dmrm".to_string(),
        metric: "nearest_atom_m",
        ours: nearest,
        paper_value: distribution::NEAREST_ATOM_REFERENCE,
        tolerance: fmt_num(distribution::NEAREST_ATOM_TOL),
        status: status_tol(
            nearest,
            distribution::NEAREST_ATOM_REFERENCE,
            distribution::NEAREST_ATOM_TOL,
        ),
    });

    // Randomized trigger: staircase density over the schedulable interval.
    let pdf = pdf_distr_toc(&cfg, &profile).map_err(runtime)?;
    rows.push(Comparison {
        case: "distr_toc".to_string(),
        metric: "support_lower_edge_m",
        ours: pdf.bands[0].lo,
        paper_value: distribution::NEAREST_ATOM_REFERENCE,
        tolerance: fmt_num(distribution::NEAREST_ATOM_TOL),
        status: status_tol(
            pdf.bands[0].lo,
            distribution::NEAREST_ATOM_REFERENCE,
            distribution::NEAREST_ATOM_TOL,
        ),
    });
    let engine = mcm_engine(RsuOption::DistrToc, CavOption::RsuAdvice, 1, 900.0, 1)?;
    let sampled = engine
        .batch(BatchMode::MonteCarlo { runs }, seed)
        .map_err(runtime)?;
    let hist = histogram_of(&sampled, &cfg);
    let l1 = l1_distance(&hist, &pdf);
    rows.push(Comparison {
        case: "distr_toc".to_string(),
        metric: "l1_distance",
        ours: l1,
        paper_value: 0.0,
        tolerance: fmt_num(l1_budget),
        status: status_tol(l1, 0.0, l1_budget),
    });
    Ok(rows)
}

// ---------------------------------------------------------------------------
// validate-pdf

pub fn cmd_validate_pdf(args: &ValidatePdfArgs) -> Result<(), CliError> {
    if args.runs == 0 {
        return Err(CliError::Config("--runs must be positive".to_string()));
    }
    let profile = CalibrationProfile::default();
    let (engine, pdf, label): (Engine, AnalyticalPdf, &str) = match args.variant {
        PdfVariantArg::Denm => {
            let engine = denm_engine(SearchBudget::Unlimited, 1)?;
            let pdf = pdf_denm(&engine.scenario);
            (engine, pdf, "denm")
        }
        PdfVariantArg::MinDmrm => {
            let engine = mcm_engine(RsuOption::MinDmrm, CavOption::RsuAdvice, 1, 900.0, 1)?;
            let pdf = pdf_min_dmrm(&engine.scenario, &profile);
            (engine, pdf, "min_dmrm")
        }
        PdfVariantArg::DistrToc => {
            let engine = mcm_engine(RsuOption::DistrToc, CavOption::RsuAdvice, 1, 900.0, 1)?;
            let pdf = pdf_distr_toc(&engine.scenario, &profile).map_err(runtime)?;
            (engine, pdf, "distr_toc")
        }
    };
    let results = engine
        .batch(BatchMode::MonteCarlo { runs: args.runs }, args.seed)
        .map_err(runtime)?;
    let hist = histogram_of(&results, &engine.scenario);
    let l1 = l1_distance(&hist, &pdf);
    let budget = distribution::L1_MAX * (distribution::MC_RUNS as f64 / args.runs as f64).sqrt();

    if let Some(dir) = &args.out {
        fs::create_dir_all(dir)?;
        write_histogram_csv(&dir.join(format!("{label}_sampled.csv")), &hist)
            .map_err(runtime)?;
        write_pdf_csv(&dir.join(format!("{label}_closed_form.csv")), &pdf).map_err(runtime)?;
    }
    println!(
        "{label}: L1 distance {l1:.4} over {} samples (budget {budget:.4})",
        args.runs
    );
    if l1 <= budget {
        Ok(())
    } else {
        Err(CliError::Mismatch(format!(
            "{label}: L1 distance {l1:.4} exceeds the {budget:.4} budget"
        )))
    }
}
