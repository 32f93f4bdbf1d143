//! Closed-form take-over position distributions, empirical histograms and
//! batch KPIs.
//!
//! The closed forms describe where the transfer of control lands on the
//! approach for each policy, before running a single simulation:
//!
//! * notification only — all probability mass at the relevance distance;
//! * earliest braking — one atom per window at its minimum distance, each
//!   carrying the window's share;
//! * randomized trigger — a mixture of uniforms, one per window, producing
//!   a staircase density that rises toward the cap as more windows'
//!   intervals overlap.
//!
//! Monte Carlo batches are reduced to a [`TocHistogram`] whose bins align
//! with the per-window minimum distances, so the staircase steps fall on
//! bin edges and the L1 gap between the sampled and the exact distribution
//! measures nothing but sampling noise.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::model::CalibrationProfile;
use crate::rsu::min_dist_to_safespot;
use crate::scenario::ScenarioConfig;
use crate::sim::{Outcome, RunResult};

const EPS: f64 = 1e-9;

/// Point mass of a take-over position distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PdfAtom {
    pub x: f64,
    pub mass: f64,
}

/// Constant-density stretch `[lo, hi)` of a take-over position
/// distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PdfBand {
    pub lo: f64,
    pub hi: f64,
    pub density: f64,
}

/// A mixed discrete/continuous distribution over take-over positions.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticalPdf {
    pub atoms: Vec<PdfAtom>,
    pub bands: Vec<PdfBand>,
}

impl AnalyticalPdf {
    /// Total probability mass; 1 up to rounding for every well-formed
    /// distribution.
    pub fn total_mass(&self) -> f64 {
        let atoms: f64 = self.atoms.iter().map(|a| a.mass).sum();
        let bands: f64 = self
            .bands
            .iter()
            .map(|b| b.density * (b.hi - b.lo))
            .sum();
        atoms + bands
    }

    /// Mass on the half-open interval `[lo, hi)`.
    pub fn mass_between(&self, lo: f64, hi: f64) -> f64 {
        if hi <= lo {
            return 0.0;
        }
        let mut mass = 0.0;
        for atom in &self.atoms {
            if atom.x >= lo - EPS && atom.x < hi - EPS {
                mass += atom.mass;
            }
        }
        for band in &self.bands {
            let overlap = band.hi.min(hi) - band.lo.max(lo);
            if overlap > 0.0 {
                mass += band.density * overlap;
            }
        }
        mass
    }
}

/// Notification scheme: the take-over always fires at the relevance
/// distance of the hazard notification.
pub fn pdf_denm(cfg: &ScenarioConfig) -> AnalyticalPdf {
    AnalyticalPdf {
        atoms: vec![PdfAtom {
            x: cfg.relevance_distance,
            mass: 1.0,
        }],
        bands: Vec::new(),
    }
}

/// Earliest-braking policy: with the spot window drawn uniformly, the
/// trigger sits exactly at that window's minimum distance.
pub fn pdf_min_dmrm(cfg: &ScenarioConfig, profile: &CalibrationProfile) -> AnalyticalPdf {
    let n = cfg.window_count();
    let atoms = (0..n)
        .map(|k| PdfAtom {
            x: min_dist_to_safespot(k, profile, cfg),
            mass: 1.0 / n as f64,
        })
        .collect();
    AnalyticalPdf {
        atoms,
        bands: Vec::new(),
    }
}

/// Randomized policy: for window `k` the trigger is uniform on
/// `[min_dist(k), max_toc_range)`; mixing uniformly over windows stacks
/// these intervals into a staircase density with a step up at every
/// window's minimum distance.
pub fn pdf_distr_toc(
    cfg: &ScenarioConfig,
    profile: &CalibrationProfile,
) -> Result<AnalyticalPdf> {
    let n = cfg.window_count();
    let cap = cfg.max_toc_range;
    let min_dists: Vec<f64> = (0..n)
        .map(|k| min_dist_to_safespot(k, profile, cfg))
        .collect();
    let last = *min_dists.last().expect("window count is positive");
    if cap <= last + EPS {
        return Err(Error::DegenerateGeometry(format!(
            "take-over cap {cap} m leaves no room above the largest minimum \
             distance {last:.2} m"
        )));
    }
    let weight = 1.0 / n as f64;
    let mut bands = Vec::with_capacity(n);
    let mut density = 0.0;
    for k in 0..n {
        density += weight / (cap - min_dists[k]);
        let hi = if k + 1 < n { min_dists[k + 1] } else { cap };
        bands.push(PdfBand {
            lo: min_dists[k],
            hi,
            density,
        });
    }
    Ok(AnalyticalPdf {
        atoms: Vec::new(),
        bands,
    })
}

/// Fixed-width histogram of take-over positions, with bins anchored so
/// window minimum distances fall on bin edges.
#[derive(Debug, Clone)]
pub struct TocHistogram {
    pub origin: f64,
    pub bin_width: f64,
    counts: BTreeMap<i64, usize>,
    total: usize,
}

impl TocHistogram {
    pub fn new(origin: f64, bin_width: f64) -> Self {
        assert!(bin_width > 0.0, "bin width must be positive");
        TocHistogram {
            origin,
            bin_width,
            counts: BTreeMap::new(),
            total: 0,
        }
    }

    /// Bin layout used for batch KPIs: anchored at the first window's
    /// minimum distance, one bin per section.
    pub fn for_scenario(cfg: &ScenarioConfig, profile: &CalibrationProfile) -> Self {
        TocHistogram::new(min_dist_to_safespot(0, profile, cfg), cfg.s_len)
    }

    pub fn bin_of(&self, x: f64) -> i64 {
        // The nudge keeps samples sitting exactly on an edge (the common
        // case for deterministic policies) in the bin they open.
        ((x - self.origin) / self.bin_width + EPS).floor() as i64
    }

    pub fn add(&mut self, x: f64) {
        *self.counts.entry(self.bin_of(x)).or_insert(0) += 1;
        self.total += 1;
    }

    pub fn total(&self) -> usize {
        self.total
    }

    pub fn bin_lo(&self, bin: i64) -> f64 {
        self.origin + bin as f64 * self.bin_width
    }

    pub fn bin_hi(&self, bin: i64) -> f64 {
        self.bin_lo(bin + 1)
    }

    pub fn frequency(&self, bin: i64) -> f64 {
        if self.total == 0 {
            return 0.0;
        }
        *self.counts.get(&bin).unwrap_or(&0) as f64 / self.total as f64
    }

    /// Occupied bins, ascending.
    pub fn bins(&self) -> impl Iterator<Item = (i64, usize)> + '_ {
        self.counts.iter().map(|(&b, &c)| (b, c))
    }
}

/// L1 distance between a sampled histogram and a closed-form distribution,
/// summed over the union of occupied and supported bins.
pub fn l1_distance(hist: &TocHistogram, pdf: &AnalyticalPdf) -> f64 {
    let mut bins: std::collections::BTreeSet<i64> =
        hist.bins().map(|(b, _)| b).collect();
    for atom in &pdf.atoms {
        bins.insert(hist.bin_of(atom.x));
    }
    for band in &pdf.bands {
        let lo = hist.bin_of(band.lo);
        let hi = hist.bin_of(band.hi - EPS);
        bins.extend(lo..=hi);
    }
    bins.into_iter()
        .map(|b| {
            let expected = pdf.mass_between(hist.bin_lo(b), hist.bin_hi(b));
            (hist.frequency(b) - expected).abs()
        })
        .sum()
}

/// Clusters raw sample positions into atoms: values within `tol` of the
/// running cluster start collapse together. Returns `(position, relative
/// frequency)` pairs, ascending.
pub fn empirical_atoms(samples: &[f64], tol: f64) -> Vec<(f64, f64)> {
    if samples.is_empty() {
        return Vec::new();
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("positions are finite"));
    let mut clusters: Vec<(f64, usize)> = Vec::new(); // (sum, count)
    let mut start = sorted[0];
    let mut sum = 0.0;
    let mut count = 0usize;
    for &x in &sorted {
        if x - start > tol {
            clusters.push((sum, count));
            start = x;
            sum = 0.0;
            count = 0;
        }
        sum += x;
        count += 1;
    }
    clusters.push((sum, count));
    let total = samples.len() as f64;
    clusters
        .into_iter()
        .map(|(s, c)| (s / c as f64, c as f64 / total))
        .collect()
}

/// Batch-level aggregates.
#[derive(Debug, Clone)]
pub struct KpiSummary {
    pub runs: usize,
    pub parked: usize,
    pub stopped_on_lane: usize,
    pub no_toc: usize,
    /// Share of runs that ended parked, in percent.
    pub success_rate_pct: f64,
    pub mean_stop_x: Option<f64>,
    pub min_stop_x: Option<f64>,
    pub max_stop_x: Option<f64>,
    pub mean_dist_at_mrm_speed: f64,
    pub max_dist_at_mrm_speed: f64,
    pub toc_hist: TocHistogram,
}

/// Reduces a batch to its KPIs.
pub fn aggregate(
    results: &[RunResult],
    profile: &CalibrationProfile,
    cfg: &ScenarioConfig,
) -> Result<KpiSummary> {
    if results.is_empty() {
        return Err(Error::EmptyInput("no runs to aggregate"));
    }
    let mut parked = 0;
    let mut stopped = 0;
    let mut no_toc = 0;
    let mut stops: Vec<f64> = Vec::new();
    let mut dist_sum = 0.0;
    let mut dist_max = 0.0f64;
    let mut hist = TocHistogram::for_scenario(cfg, profile);
    for r in results {
        match r.outcome {
            Outcome::Parked => parked += 1,
            Outcome::StoppedOnLane => stopped += 1,
            Outcome::NoToc => no_toc += 1,
        }
        if let Some(stop) = r.stop_x {
            stops.push(stop);
        }
        dist_sum += r.dist_at_mrm_speed;
        dist_max = dist_max.max(r.dist_at_mrm_speed);
        if let Some(toc) = r.toc_x {
            hist.add(toc);
        }
    }
    let runs = results.len();
    Ok(KpiSummary {
        runs,
        parked,
        stopped_on_lane: stopped,
        no_toc,
        success_rate_pct: 100.0 * parked as f64 / runs as f64,
        mean_stop_x: mean(&stops),
        min_stop_x: stops.iter().copied().reduce(f64::min),
        max_stop_x: stops.iter().copied().reduce(f64::max),
        mean_dist_at_mrm_speed: dist_sum / runs as f64,
        max_dist_at_mrm_speed: dist_max,
        toc_hist: hist,
    })
}

fn mean(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        None
    } else {
        Some(xs.iter().sum::<f64>() / xs.len() as f64)
    }
}
