//! Scenario geometry and configuration.
//!
//! The road segment in front of the zone entry is a grid of `n_sections`
//! emergency-lane sections of `s_len` meters each, covering positions
//! `[0, n_sections·s_len)`. A *safe spot* occupies `spot_sections`
//! consecutive free sections; a *window* is a candidate placement, indexed by
//! its lowest section, so window `k` spans
//! `[k·s_len, (k + spot_sections)·s_len)`. Everything outside the placed
//! spots is blocked by the roadworks.
//!
//! Configurations load from flat `key = value` files (one pair per line,
//! `#` starts a comment) whose keys are exactly the field names of
//! [`ScenarioConfig`].

use std::fmt;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};

/// Messaging scheme under evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Hazard notification only; the vehicle searches for a spot on its own.
    Denm,
    /// Maneuver coordination: the roadside unit assigns spot and trigger.
    Mcm,
}

impl Scheme {
    pub fn label(&self) -> &'static str {
        match self {
            Scheme::Denm => "denm",
            Scheme::Mcm => "mcm",
        }
    }
}

/// How far past the notification point a vehicle may keep crawling while it
/// looks for a free spot (notification-only scheme).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchBudget {
    /// Stop immediately if no spot is reachable right where the maneuver
    /// reaches crawl speed.
    Zero,
    /// Keep searching for up to 50 m.
    Fifty,
    /// Search all the way down to the final braking point.
    Unlimited,
}

impl SearchBudget {
    /// Budget in meters; `None` means unbounded.
    pub fn meters(&self) -> Option<f64> {
        match self {
            SearchBudget::Zero => Some(0.0),
            SearchBudget::Fifty => Some(50.0),
            SearchBudget::Unlimited => None,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            SearchBudget::Zero => "zero",
            SearchBudget::Fifty => "fifty",
            SearchBudget::Unlimited => "unlimited",
        }
    }
}

/// How the roadside unit places the take-over trigger for an assigned spot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RsuOption {
    /// Latest safe trigger: the minimum distance that still reaches the spot.
    MinDmrm,
    /// Trigger drawn from the admissible distance interval, spreading
    /// take-overs over the approach.
    DistrToc,
}

impl RsuOption {
    pub fn label(&self) -> &'static str {
        match self {
            RsuOption::MinDmrm => "min_dmrm",
            RsuOption::DistrToc => "distr_toc",
        }
    }
}

/// How the vehicle times its deceleration once it follows roadside advice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CavOption {
    /// Decelerate right after the take-over request expires, then crawl to
    /// the spot.
    RsuAdvice,
    /// Keep cruising and brake as late as possible, reaching crawl speed at
    /// the spot's far edge.
    CavDecision,
}

impl CavOption {
    pub fn label(&self) -> &'static str {
        match self {
            CavOption::RsuAdvice => "rsu_advice",
            CavOption::CavDecision => "cav_decision",
        }
    }
}

/// Where the safe spots sit on the section grid.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Placement {
    /// Run every admissible layout once.
    GridEnumerate,
    /// Draw a layout uniformly per run.
    GridRandom,
    /// Fixed window indices, one per spot.
    Explicit(Vec<usize>),
}

/// Complete description of one experiment scenario.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioConfig {
    /// Relevance range of the hazard notification (m). Must equal
    /// `n_sections · s_len`: the notification covers exactly the grid.
    pub relevance_distance: f64,
    /// Upper bound for scheduled take-over positions (m); also determines
    /// the spawn distance.
    pub max_toc_range: f64,
    /// Length of one emergency-lane section (m).
    pub s_len: f64,
    /// Number of sections on the grid.
    pub n_sections: usize,
    /// Sections per safe spot.
    pub spot_sections: usize,
    /// Number of spots placed (1 or 2).
    pub spot_count: usize,
    pub placement: Placement,
    pub scheme: Scheme,
    /// Search budget in the notification-only scheme.
    pub denm_d_mrm: SearchBudget,
    /// Trigger placement policy in the coordination scheme.
    pub mcm_rsu_option: RsuOption,
    /// Deceleration timing in the coordination scheme.
    pub mcm_cav_option: CavOption,
    /// Scheduling margin added on top of the minimal reach distance (m).
    pub y_margin: f64,
    /// Simulation tick length (s).
    pub timestep: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            relevance_distance: 500.0,
            max_toc_range: 900.0,
            s_len: 25.0,
            n_sections: 20,
            spot_sections: 3,
            spot_count: 1,
            placement: Placement::GridEnumerate,
            scheme: Scheme::Denm,
            denm_d_mrm: SearchBudget::Unlimited,
            mcm_rsu_option: RsuOption::MinDmrm,
            mcm_cav_option: CavOption::RsuAdvice,
            y_margin: 15.0,
            timestep: 0.1,
        }
    }
}

fn config_err(field: &str, reason: impl fmt::Display) -> Error {
    Error::Config {
        field: field.to_string(),
        reason: reason.to_string(),
    }
}

impl ScenarioConfig {
    /// Length of one safe spot in meters.
    pub fn spot_length(&self) -> f64 {
        self.spot_sections as f64 * self.s_len
    }

    /// Number of candidate windows on the grid.
    pub fn window_count(&self) -> usize {
        self.n_sections + 1 - self.spot_sections
    }

    /// Far (upstream) edge of window `k` in meters.
    pub fn window_far_edge(&self, window: usize) -> f64 {
        (window + self.spot_sections) as f64 * self.s_len
    }

    /// Near (downstream) edge of window `k` in meters.
    pub fn window_near_edge(&self, window: usize) -> f64 {
        window as f64 * self.s_len
    }

    /// Checks every cross-field invariant, naming the offending field.
    pub fn validate(&self) -> Result<()> {
        if !(self.s_len > 0.0) {
            return Err(config_err("s_len", "must be positive"));
        }
        if self.n_sections == 0 {
            return Err(config_err("n_sections", "must be at least 1"));
        }
        if self.spot_sections == 0 {
            return Err(config_err("spot_sections", "must be at least 1"));
        }
        if self.spot_sections > self.n_sections {
            return Err(config_err(
                "spot_sections",
                format!(
                    "spot ({} sections) does not fit the grid ({} sections)",
                    self.spot_sections, self.n_sections
                ),
            ));
        }
        if !(self.spot_count == 1 || self.spot_count == 2) {
            return Err(config_err(
                "spot_count",
                format!("must be 1 or 2, got {}", self.spot_count),
            ));
        }
        let grid_len = self.n_sections as f64 * self.s_len;
        if (self.relevance_distance - grid_len).abs() > 1e-9 {
            return Err(config_err(
                "relevance_distance",
                format!(
                    "must equal n_sections * s_len = {grid_len}, got {}",
                    self.relevance_distance
                ),
            ));
        }
        if self.max_toc_range < self.relevance_distance {
            return Err(config_err(
                "max_toc_range",
                format!(
                    "must be at least relevance_distance ({}), got {}",
                    self.relevance_distance, self.max_toc_range
                ),
            ));
        }
        if self.y_margin < 0.0 {
            return Err(config_err("y_margin", "must be non-negative"));
        }
        if !(self.timestep > 0.0) {
            return Err(config_err("timestep", "must be positive"));
        }
        if let Placement::Explicit(windows) = &self.placement {
            // Full disjointness checking happens when the occupancy is
            // built; catch the shape mismatch early.
            if windows.len() != self.spot_count {
                return Err(config_err(
                    "placement",
                    format!(
                        "{} explicit windows given but spot_count is {}",
                        windows.len(),
                        self.spot_count
                    ),
                ));
            }
        }
        Ok(())
    }

    /// Parses a flat `key = value` scenario file.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())?;
        Self::parse(&text)
    }

    /// Parses scenario text: one `key = value` pair per line, keys named
    /// exactly like the struct fields, `#` comments, blank lines ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = ScenarioConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(i) => &raw[..i],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                config_err(
                    "<file>",
                    format!("line {}: expected `key = value`, got `{line}`", lineno + 1),
                )
            })?;
            cfg.apply_kv(key.trim(), value.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Applies one `key = value` pair. Used by the file parser and by
    /// command-line overrides.
    pub fn apply_kv(&mut self, key: &str, value: &str) -> Result<()> {
        fn parse_f64(key: &str, value: &str) -> Result<f64> {
            value
                .parse()
                .map_err(|_| config_err(key, format!("`{value}` is not a number")))
        }
        fn parse_usize(key: &str, value: &str) -> Result<usize> {
            value
                .parse()
                .map_err(|_| config_err(key, format!("`{value}` is not a non-negative integer")))
        }
        match key {
            "relevance_distance" => self.relevance_distance = parse_f64(key, value)?,
            "max_toc_range" => self.max_toc_range = parse_f64(key, value)?,
            "s_len" => self.s_len = parse_f64(key, value)?,
            "n_sections" => self.n_sections = parse_usize(key, value)?,
            "spot_sections" => self.spot_sections = parse_usize(key, value)?,
            "spot_count" => self.spot_count = parse_usize(key, value)?,
            "y_margin" => self.y_margin = parse_f64(key, value)?,
            "timestep" => self.timestep = parse_f64(key, value)?,
            "placement" => {
                self.placement = match value {
                    "grid_enumerate" => Placement::GridEnumerate,
                    "grid_random" => Placement::GridRandom,
                    list => {
                        let windows = list
                            .split(',')
                            .map(|w| parse_usize(key, w.trim()))
                            .collect::<Result<Vec<usize>>>()?;
                        Placement::Explicit(windows)
                    }
                }
            }
            "scheme" => {
                self.scheme = match value {
                    "denm" => Scheme::Denm,
                    "mcm" => Scheme::Mcm,
                    other => return Err(config_err(key, format!("unknown scheme `{other}`"))),
                }
            }
            "denm_d_mrm" => {
                self.denm_d_mrm = match value {
                    "zero" => SearchBudget::Zero,
                    "fifty" => SearchBudget::Fifty,
                    "unlimited" => SearchBudget::Unlimited,
                    other => {
                        return Err(config_err(key, format!("unknown search budget `{other}`")))
                    }
                }
            }
            "mcm_rsu_option" => {
                self.mcm_rsu_option = match value {
                    "min_dmrm" => RsuOption::MinDmrm,
                    "distr_toc" => RsuOption::DistrToc,
                    other => return Err(config_err(key, format!("unknown policy `{other}`"))),
                }
            }
            "mcm_cav_option" => {
                self.mcm_cav_option = match value {
                    "rsu_advice" => CavOption::RsuAdvice,
                    "cav_decision" => CavOption::CavDecision,
                    other => return Err(config_err(key, format!("unknown policy `{other}`"))),
                }
            }
            other => return Err(config_err(other, "unknown configuration key")),
        }
        Ok(())
    }

    /// Human-readable label of the active variant, for exports.
    pub fn variant_label(&self) -> String {
        match self.scheme {
            Scheme::Denm => self.denm_d_mrm.label().to_string(),
            Scheme::Mcm => format!(
                "{}/{}",
                self.mcm_rsu_option.label(),
                self.mcm_cav_option.label()
            ),
        }
    }
}

/// A maximal contiguous free range of the emergency lane, `[near_x, far_x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FreeRun {
    pub near_x: f64,
    pub far_x: f64,
}

impl FreeRun {
    pub fn len(&self) -> f64 {
        self.far_x - self.near_x
    }
}

/// Ground-truth occupancy of the emergency lane along the grid.
///
/// Section `j` covers `[j·s_len, (j+1)·s_len)` and is free exactly when a
/// placed spot covers it. Two adjacent spots merge into one longer free run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmergencyLaneOccupancy {
    free: Vec<bool>,
    s_len: f64,
}

impl EmergencyLaneOccupancy {
    /// Builds the occupancy for spots at the given windows, validating
    /// bounds and disjointness.
    pub fn from_windows(cfg: &ScenarioConfig, windows: &[usize]) -> Result<Self> {
        let mut free = vec![false; cfg.n_sections];
        for (i, &w) in windows.iter().enumerate() {
            if w >= cfg.window_count() {
                return Err(Error::InvalidLayout(format!(
                    "window {w} out of range 0..{}",
                    cfg.window_count()
                )));
            }
            for (j, &other) in windows.iter().enumerate() {
                if i < j && w.abs_diff(other) < cfg.spot_sections {
                    return Err(Error::InvalidLayout(format!(
                        "windows {w} and {other} overlap (need at least {} sections apart)",
                        cfg.spot_sections
                    )));
                }
            }
            for section in w..w + cfg.spot_sections {
                free[section] = true;
            }
        }
        Ok(EmergencyLaneOccupancy {
            free,
            s_len: cfg.s_len,
        })
    }

    pub fn n_sections(&self) -> usize {
        self.free.len()
    }

    pub fn s_len(&self) -> f64 {
        self.s_len
    }

    pub fn is_section_free(&self, section: usize) -> bool {
        self.free.get(section).copied().unwrap_or(false)
    }

    /// Number of free sections (always `spot_count · spot_sections`).
    pub fn free_section_count(&self) -> usize {
        self.free.iter().filter(|&&f| f).count()
    }

    /// Maximal free runs, ordered far-to-near (as the vehicle meets them).
    pub fn free_runs(&self) -> Vec<FreeRun> {
        let mut runs = Vec::new();
        let mut start: Option<usize> = None;
        for j in 0..=self.free.len() {
            let is_free = j < self.free.len() && self.free[j];
            match (start, is_free) {
                (None, true) => start = Some(j),
                (Some(s), false) => {
                    runs.push(FreeRun {
                        near_x: s as f64 * self.s_len,
                        far_x: j as f64 * self.s_len,
                    });
                    start = None;
                }
                _ => {}
            }
        }
        runs.reverse();
        runs
    }

    /// Contiguous free meters immediately below position `x` (how much free
    /// lane a vehicle at `x` could still pull into). Zero when the section
    /// just below `x` is blocked or the grid has ended.
    pub fn clearance_below(&self, x: f64) -> f64 {
        self.free_runs()
            .iter()
            .find(|run| run.near_x < x + 1e-9 && x < run.far_x + 1e-9)
            .map(|run| (x - run.near_x).max(0.0).min(run.len()))
            .unwrap_or(0.0)
    }
}

/// All candidate windows for one spot, in grid order.
pub fn enumerate_windows(cfg: &ScenarioConfig) -> Vec<usize> {
    (0..cfg.window_count()).collect()
}

/// All admissible layouts for the configured spot count: every window for
/// one spot, every non-overlapping unordered pair for two. An explicit
/// placement yields exactly that single layout (validated).
pub fn enumerate_layouts(cfg: &ScenarioConfig) -> Result<Vec<Vec<usize>>> {
    if let Placement::Explicit(windows) = &cfg.placement {
        // Validation happens through the occupancy constructor.
        EmergencyLaneOccupancy::from_windows(cfg, windows)?;
        return Ok(vec![windows.clone()]);
    }
    let n = cfg.window_count();
    let layouts = match cfg.spot_count {
        1 => (0..n).map(|w| vec![w]).collect(),
        2 => {
            let mut pairs = Vec::new();
            for i in 0..n {
                for j in i + 1..n {
                    if j - i >= cfg.spot_sections {
                        pairs.push(vec![i, j]);
                    }
                }
            }
            pairs
        }
        other => {
            return Err(Error::Config {
                field: "spot_count".into(),
                reason: format!("must be 1 or 2, got {other}"),
            })
        }
    };
    Ok(layouts)
}

/// The first (nearest) free-lane encounter at or below position `x`:
/// where the vehicle would meet free emergency lane, and how much contiguous
/// clearance extends from there toward the zone.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpotEncounter {
    /// Position of the encounter (m); `min(x, far edge of the run)`.
    pub encounter_x: f64,
    /// Contiguous free meters from `encounter_x` down to the run's end.
    pub clearance: f64,
    /// Near edge of the free run, i.e. where parking space ends.
    pub run_near_x: f64,
}

/// Finds the nearest free run at or below `x` and the clearance available
/// there. `None` when no free lane remains below `x`.
pub fn first_spot_encounter(x: f64, occ: &EmergencyLaneOccupancy) -> Option<SpotEncounter> {
    occ.free_runs()
        .into_iter()
        .find(|run| run.near_x <= x)
        .map(|run| {
            let encounter_x = x.min(run.far_x);
            SpotEncounter {
                encounter_x,
                clearance: encounter_x - run.near_x,
                run_near_x: run.near_x,
            }
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn default_grid_has_18_windows_with_expected_edges() {
        let cfg = ScenarioConfig::default();
        cfg.validate().unwrap();
        let windows = enumerate_windows(&cfg);
        assert_eq!(windows.len(), 18);
        assert_abs_diff_eq!(cfg.window_far_edge(0), 75.0);
        assert_abs_diff_eq!(cfg.window_near_edge(0), 0.0);
        assert_abs_diff_eq!(cfg.window_far_edge(17), 500.0);
        assert_abs_diff_eq!(cfg.spot_length(), 75.0);
    }

    #[test]
    fn two_spot_enumeration_yields_all_disjoint_pairs() {
        let mut cfg = ScenarioConfig::default();
        cfg.spot_count = 2;
        let layouts = enumerate_layouts(&cfg).unwrap();
        assert_eq!(layouts.len(), 120);
        for layout in &layouts {
            assert!(layout[1] - layout[0] >= cfg.spot_sections);
            EmergencyLaneOccupancy::from_windows(&cfg, layout).unwrap();
        }
    }

    #[test]
    fn overlapping_explicit_placement_is_rejected() {
        let mut cfg = ScenarioConfig::default();
        cfg.spot_count = 2;
        cfg.placement = Placement::Explicit(vec![4, 5]);
        assert!(matches!(
            enumerate_layouts(&cfg),
            Err(Error::InvalidLayout(_))
        ));
        cfg.placement = Placement::Explicit(vec![4, 18]);
        assert!(enumerate_layouts(&cfg).is_err());
        cfg.placement = Placement::Explicit(vec![4, 7]);
        assert_eq!(enumerate_layouts(&cfg).unwrap(), vec![vec![4, 7]]);
    }

    #[test]
    fn adjacent_spots_merge_into_one_free_run() {
        let mut cfg = ScenarioConfig::default();
        cfg.spot_count = 2;
        let occ = EmergencyLaneOccupancy::from_windows(&cfg, &[3, 6]).unwrap();
        let runs = occ.free_runs();
        assert_eq!(runs.len(), 1);
        assert_abs_diff_eq!(runs[0].near_x, 75.0);
        assert_abs_diff_eq!(runs[0].far_x, 225.0);
        assert_abs_diff_eq!(runs[0].len(), 150.0);

        let occ = EmergencyLaneOccupancy::from_windows(&cfg, &[3, 10]).unwrap();
        let runs = occ.free_runs();
        assert_eq!(runs.len(), 2);
        // Far-to-near order: the vehicle meets window 10 first.
        assert_abs_diff_eq!(runs[0].near_x, 250.0);
        assert_abs_diff_eq!(runs[0].far_x, 325.0);
        assert_abs_diff_eq!(runs[1].near_x, 75.0);
    }

    #[test]
    fn spot_encounter_examples() {
        let cfg = ScenarioConfig::default();
        // Spot at window 5: free range [125, 200).
        let occ = EmergencyLaneOccupancy::from_windows(&cfg, &[5]).unwrap();
        let enc = first_spot_encounter(184.0, &occ).unwrap();
        assert_abs_diff_eq!(enc.encounter_x, 184.0);
        assert_abs_diff_eq!(enc.clearance, 59.0);

        // Spot at window 3: free range [75, 150); approached from above.
        let occ = EmergencyLaneOccupancy::from_windows(&cfg, &[3]).unwrap();
        let enc = first_spot_encounter(400.0, &occ).unwrap();
        assert_abs_diff_eq!(enc.encounter_x, 150.0);
        assert_abs_diff_eq!(enc.clearance, 75.0);

        // Nothing below the vehicle.
        let occ = EmergencyLaneOccupancy::from_windows(&cfg, &[10]).unwrap();
        assert!(first_spot_encounter(200.0, &occ).is_none());

        // Inside the run: clearance shrinks with progress.
        let enc = first_spot_encounter(260.0, &occ).unwrap();
        assert_abs_diff_eq!(enc.encounter_x, 260.0);
        assert_abs_diff_eq!(enc.clearance, 10.0);
    }

    #[test]
    fn clearance_below_matches_encounters() {
        let cfg = ScenarioConfig::default();
        let occ = EmergencyLaneOccupancy::from_windows(&cfg, &[5]).unwrap();
        assert_abs_diff_eq!(occ.clearance_below(184.0), 59.0);
        assert_abs_diff_eq!(occ.clearance_below(200.0), 75.0);
        assert_abs_diff_eq!(occ.clearance_below(125.0), 0.0);
        assert_abs_diff_eq!(occ.clearance_below(300.0), 0.0);
        assert_abs_diff_eq!(occ.clearance_below(60.0), 0.0);
    }

    #[test]
    fn config_file_round_trip_and_diagnostics() {
        let text = "\
# experiment geometry
relevance_distance = 500
max_toc_range = 900
s_len = 25
n_sections = 20
spot_sections = 3
spot_count = 2          # two spots on the grid
placement = 3, 10
scheme = mcm
denm_d_mrm = fifty
mcm_rsu_option = distr_toc
mcm_cav_option = cav_decision
y_margin = 15
timestep = 0.1
";
        let cfg = ScenarioConfig::parse(text).unwrap();
        assert_eq!(cfg.spot_count, 2);
        assert_eq!(cfg.placement, Placement::Explicit(vec![3, 10]));
        assert_eq!(cfg.scheme, Scheme::Mcm);
        assert_eq!(cfg.mcm_rsu_option, RsuOption::DistrToc);
        assert_eq!(cfg.mcm_cav_option, CavOption::CavDecision);
        assert_eq!(cfg.variant_label(), "distr_toc/cav_decision");

        match ScenarioConfig::parse("spot_count = 3") {
            Err(Error::Config { field, .. }) => assert_eq!(field, "spot_count"),
            other => panic!("expected config error, got {other:?}"),
        }
        match ScenarioConfig::parse("no_such_key = 1") {
            Err(Error::Config { field, .. }) => assert_eq!(field, "no_such_key"),
            other => panic!("expected config error, got {other:?}"),
        }
        match ScenarioConfig::parse("s_len = fast") {
            Err(Error::Config { field, .. }) => assert_eq!(field, "s_len"),
            other => panic!("expected config error, got {other:?}"),
        }
        // Relevance must tile the grid exactly.
        assert!(ScenarioConfig::parse("relevance_distance = 499").is_err());
    }

    #[test]
    fn free_section_count_is_conserved() {
        let mut cfg = ScenarioConfig::default();
        for layout in enumerate_layouts(&cfg).unwrap() {
            let occ = EmergencyLaneOccupancy::from_windows(&cfg, &layout).unwrap();
            assert_eq!(occ.free_section_count(), cfg.spot_sections);
        }
        cfg.spot_count = 2;
        for layout in enumerate_layouts(&cfg).unwrap() {
            let occ = EmergencyLaneOccupancy::from_windows(&cfg, &layout).unwrap();
            assert_eq!(occ.free_section_count(), 2 * cfg.spot_sections);
        }
    }

    #[test]
    fn every_window_appears_equally_often_in_single_spot_enumeration() {
        let cfg = ScenarioConfig::default();
        let mut counts = vec![0usize; cfg.window_count()];
        for layout in enumerate_layouts(&cfg).unwrap() {
            counts[layout[0]] += 1;
        }
        assert!(counts.iter().all(|&c| c == 1));
    }

    proptest! {
        /// A single isolated spot never offers more clearance than its own
        /// length, and exactly its length when met from above.
        #[test]
        fn prop_single_spot_clearance_is_bounded(window in 0usize..18) {
            let cfg = ScenarioConfig::default();
            let occ = EmergencyLaneOccupancy::from_windows(&cfg, &[window]).unwrap();
            let enc = first_spot_encounter(600.0, &occ).unwrap();
            prop_assert!((enc.clearance - cfg.spot_length()).abs() < 1e-9);
            prop_assert!((enc.encounter_x - cfg.window_far_edge(window)).abs() < 1e-9);
        }

        /// Encounter positions and clearances are consistent for any x.
        #[test]
        fn prop_encounter_consistency(
            window in 0usize..18,
            x in 0.0..600.0f64,
        ) {
            let cfg = ScenarioConfig::default();
            let occ = EmergencyLaneOccupancy::from_windows(&cfg, &[window]).unwrap();
            if let Some(enc) = first_spot_encounter(x, &occ) {
                prop_assert!(enc.encounter_x <= x + 1e-9);
                prop_assert!(enc.clearance >= -1e-9);
                prop_assert!(enc.clearance <= cfg.spot_length() + 1e-9);
                prop_assert!((enc.encounter_x - enc.clearance - enc.run_near_x).abs() < 1e-9);
            } else {
                // No free lane below x: the spot must start at or above x.
                prop_assert!(cfg.window_near_edge(window) >= x);
            }
        }
    }
}
