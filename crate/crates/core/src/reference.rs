//! Published results of the reference evaluation campaign this toolkit
//! reproduces, together with the tolerances a reproduction must meet.
//!
//! Everything here is frozen: acceptance tests and the `reproduce` command
//! both read these constants, so the pass/fail gates cannot drift apart.
//! A handful of entries carry an `expected_value` differing from the
//! published one — cases where the published number cannot be recovered
//! from the campaign's own stated geometry and the deviation is understood
//! and documented. Those rows are reported as `expected_deviation`, not as
//! failures, as long as our result matches the expectation.

/// Stop positions for the single far window, notification scheme (m).
#[derive(Debug, Clone, Copy)]
pub struct StopReference {
    /// Search budget variant label.
    pub variant: &'static str,
    /// Spot window used in the reference runs.
    pub window: usize,
    /// Published stop position (m above the zone entry).
    pub reference_stop_x: f64,
    /// Allowed absolute deviation (m).
    pub tol: f64,
}

pub const STOP_POSITIONS: &[StopReference] = &[
    StopReference {
        variant: "zero",
        window: 17,
        reference_stop_x: 160.0,
        tol: 1.0,
    },
    StopReference {
        variant: "fifty",
        window: 17,
        reference_stop_x: 110.0,
        tol: 1.0,
    },
    StopReference {
        variant: "unlimited",
        window: 17,
        reference_stop_x: 0.0,
        tol: 1.0,
    },
];

/// A published success rate and the gate for reproducing it.
#[derive(Debug, Clone, Copy)]
pub struct RateReference {
    pub variant: &'static str,
    /// Published success rate (percent).
    pub reference_pct: f64,
    /// Allowed absolute deviation (percentage points).
    pub tol_pp: f64,
    /// Exact rate implied by the stated geometry, when it differs from the
    /// published value.
    pub expected_pct: Option<f64>,
}

/// Success rates over all single-spot layouts, notification scheme.
pub const SINGLE_SPOT_RATES: &[RateReference] = &[
    RateReference {
        variant: "zero",
        reference_pct: 5.5,
        tol_pp: 1.5,
        expected_pct: None,
    },
    RateReference {
        variant: "fifty",
        reference_pct: 16.5,
        tol_pp: 1.5,
        expected_pct: None,
    },
    RateReference {
        variant: "unlimited",
        reference_pct: 33.5,
        tol_pp: 1.5,
        expected_pct: None,
    },
];

/// Success rates over all two-spot layouts, notification scheme.
///
/// The zero-budget cell is the one documented deviation: enumerating the
/// 120 pairs under the stated sensing and clearance rules yields exactly
/// 15 successes (12.5%), published as 13%. The band is widened to ±3 pp
/// and the exact enumeration result is pinned alongside.
pub const TWO_SPOT_RATES: &[RateReference] = &[
    RateReference {
        variant: "zero",
        reference_pct: 13.0,
        tol_pp: 3.0,
        expected_pct: Some(12.5),
    },
    RateReference {
        variant: "fifty",
        reference_pct: 33.0,
        tol_pp: 2.0,
        expected_pct: None,
    },
    RateReference {
        variant: "unlimited",
        reference_pct: 62.3,
        tol_pp: 2.0,
        expected_pct: None,
    },
];

/// Every coordinated run parks: the unit never advises an unreachable
/// spot, so the success rate is exactly 100%.
pub const COORDINATED_SUCCESS_PCT: f64 = 100.0;

/// Crawl-distance envelope for the coordinated variants.
#[derive(Debug, Clone, Copy)]
pub struct CrawlReference {
    /// `rsu_option/cav_option` label.
    pub variant: &'static str,
    /// Published maximum crawl distance at maneuver speed (m).
    pub reference_max: f64,
    /// Accepted band for the reproduced maximum (m).
    pub band: (f64, f64),
    /// Exact value implied by the stated geometry, when it differs.
    pub expected_max: Option<f64>,
}

/// Maximum crawl distances with the take-over cap at 700 m.
///
/// The earliest-braking row is the second documented deviation: braking at
/// the advised minimum distance leaves exactly the scheduling margin
/// (15 m) of crawling, while the published chart shows 49 m; the published
/// value is not reachable from the stated minimum-distance formula.
pub const CRAWL_DISTANCES_AT_700: &[CrawlReference] = &[
    CrawlReference {
        variant: "min_dmrm/rsu_advice",
        reference_max: 49.0,
        band: (14.0, 16.0),
        expected_max: Some(15.0),
    },
    CrawlReference {
        variant: "min_dmrm/cav_decision",
        reference_max: 0.0,
        band: (-1e-9, 1.0),
        expected_max: None,
    },
    CrawlReference {
        variant: "distr_toc/rsu_advice",
        reference_max: 280.0,
        band: (250.0, 310.0),
        expected_max: None,
    },
    CrawlReference {
        variant: "distr_toc/cav_decision",
        reference_max: 0.0,
        band: (-1e-9, 1.0),
        expected_max: None,
    },
];

/// Take-over position distribution gates.
pub mod distribution {
    /// Monte Carlo sample size for distribution checks.
    pub const MC_RUNS: usize = 100_000;
    /// Allowed deviation of a reproduced atom position (m).
    pub const ATOM_TOL: f64 = 0.1;
    /// Allowed deviation of a reproduced atom frequency.
    pub const FREQ_TOL: f64 = 0.005;
    /// L1 budget between the sampled histogram and the closed form.
    pub const L1_MAX: f64 = 0.02;
    /// Published position of the atom nearest the zone (m).
    pub const NEAREST_ATOM_REFERENCE: f64 = 400.0;
    /// Allowed deviation from the published nearest-atom position (m): the
    /// chart is read at axis-tick precision.
    pub const NEAREST_ATOM_TOL: f64 = 10.0;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn documented_deviations_stay_inside_their_bands() {
        for r in TWO_SPOT_RATES {
            if let Some(expected) = r.expected_pct {
                assert!(
                    (expected - r.reference_pct).abs() <= r.tol_pp,
                    "{}: pinned expectation {expected} outside the ±{} pp band around {}",
                    r.variant,
                    r.tol_pp,
                    r.reference_pct
                );
            }
        }
        for r in CRAWL_DISTANCES_AT_700 {
            if let Some(expected) = r.expected_max {
                assert!(
                    r.band.0 <= expected && expected <= r.band.1,
                    "{}: pinned expectation {expected} outside its band",
                    r.variant
                );
            }
        }
    }
}
