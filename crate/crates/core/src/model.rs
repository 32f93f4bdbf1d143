//! Vehicle kinematics: calibration, state, and the exact integrator.
//!
//! The vehicle is a point mass on a one-dimensional track. Positions are
//! measured as the remaining distance to the entry of the zone where
//! automated driving ends, so `x` decreases while driving and `x = 0` is the
//! zone entry. Speed profiles are piecewise constant-acceleration; the two
//! deceleration levels are not free parameters but are calibrated from the
//! distances the maneuvers must fit into.
//!
//! [`advance`] integrates a state over a time step in closed form and splits
//! the step exactly at the instant a speed clamp engages. This makes results
//! independent of the tick length: halving the step never changes where the
//! vehicle ends up.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::messages::ComplianceStatus;

/// Tolerance below which two positions or speeds count as equal (m, m/s).
pub const EPS: f64 = 1e-9;

/// Deceleration that takes speed `v0` down to `v1` in exactly distance `d`.
///
/// From `v1² = v0² + 2·a·d`: `a = (v1² − v0²) / (2·d)`. Requires `d > 0` and
/// `v1 < v0` (both non-negative); the result is strictly negative.
pub fn calibrate_deceleration(v0: f64, v1: f64, d: f64) -> Result<f64> {
    if !(d > 0.0) {
        return Err(Error::InvalidCalibration(format!(
            "braking distance must be positive, got {d}"
        )));
    }
    if v0 < 0.0 || v1 < 0.0 {
        return Err(Error::InvalidCalibration(format!(
            "speeds must be non-negative, got v0={v0}, v1={v1}"
        )));
    }
    if v1 >= v0 {
        return Err(Error::InvalidCalibration(format!(
            "target speed {v1} must be below initial speed {v0}"
        )));
    }
    Ok((v1 * v1 - v0 * v0) / (2.0 * d))
}

/// Distance covered going from `v0` down to `v1` at constant deceleration
/// `a < 0`. Zero when the speeds are equal; inverse of
/// [`calibrate_deceleration`].
pub fn braking_distance(v0: f64, v1: f64, a: f64) -> Result<f64> {
    if v0 < 0.0 || v1 < 0.0 || v1 > v0 {
        return Err(Error::InvalidParameter(format!(
            "speeds must satisfy 0 <= v1 <= v0, got v0={v0}, v1={v1}"
        )));
    }
    if v1 == v0 {
        return Ok(0.0);
    }
    if !(a < 0.0) {
        return Err(Error::InvalidParameter(format!(
            "deceleration must be negative, got {a}"
        )));
    }
    Ok((v1 * v1 - v0 * v0) / (2.0 * a))
}

/// Calibrated speed profile of the vehicle, with the derived decelerations.
///
/// Plain data, copied freely into agents so a run never aliases another's
/// calibration.
///
/// All distances in meters, speeds in m/s, times in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CalibrationProfile {
    /// Cruise speed under automation.
    pub v_drive: f64, // m/s
    /// Reduced speed during a minimum-risk maneuver.
    pub v_mrm: f64, // m/s
    /// Lead time granted to the driver after a take-over request.
    pub t_tor: f64, // s
    /// Distance within which the vehicle decelerates from `v_drive` to
    /// `v_mrm` once the take-over request expires unanswered.
    pub d_to_mrm_speed: f64, // m
    /// Distance within which the vehicle brakes from `v_mrm` to standstill.
    pub d_to_stop: f64, // m
    /// Longitudinal distance consumed by the lane change onto the emergency
    /// lane, driven at `v_mrm`.
    pub d_lane_change: f64, // m
    /// Minimum free emergency-lane length ahead of an encountered spot for
    /// the vehicle to commit to parking there.
    pub min_park_clearance: f64, // m
    /// Deceleration `v_drive -> v_mrm`, derived from `d_to_mrm_speed`.
    pub a_to_mrm: f64, // m/s^2
    /// Deceleration `v_mrm -> 0`, derived from `d_to_stop`.
    pub a_to_stop: f64, // m/s^2
}

impl CalibrationProfile {
    /// Builds a profile and derives both decelerations from the distances.
    pub fn new(
        v_drive: f64,
        v_mrm: f64,
        t_tor: f64,
        d_to_mrm_speed: f64,
        d_to_stop: f64,
        d_lane_change: f64,
        min_park_clearance: f64,
    ) -> Result<Self> {
        if !(v_mrm > 0.0) {
            return Err(Error::InvalidCalibration(format!(
                "v_mrm must be positive, got {v_mrm}"
            )));
        }
        if t_tor < 0.0 {
            return Err(Error::InvalidCalibration(format!(
                "t_tor must be non-negative, got {t_tor}"
            )));
        }
        if !(d_lane_change > 0.0) {
            return Err(Error::InvalidCalibration(format!(
                "d_lane_change must be positive, got {d_lane_change}"
            )));
        }
        if !(min_park_clearance > 0.0) {
            return Err(Error::InvalidCalibration(format!(
                "min_park_clearance must be positive, got {min_park_clearance}"
            )));
        }
        let a_to_mrm = calibrate_deceleration(v_drive, v_mrm, d_to_mrm_speed)?;
        let a_to_stop = calibrate_deceleration(v_mrm, 0.0, d_to_stop)?;
        Ok(CalibrationProfile {
            v_drive,
            v_mrm,
            t_tor,
            d_to_mrm_speed,
            d_to_stop,
            d_lane_change,
            min_park_clearance,
            a_to_mrm,
            a_to_stop,
        })
    }

    /// Distance covered at `v_drive` while the take-over request is pending.
    pub fn d_tor(&self) -> f64 {
        self.v_drive * self.t_tor
    }
}

impl Default for CalibrationProfile {
    /// Motorway calibration: 60 km/h cruise, 20 km/h maneuver speed, 10 s
    /// take-over lead time, 150 m to reach maneuver speed, 24 m to stop from
    /// it, 68 m per lane change and 50 m minimum parking clearance.
    fn default() -> Self {
        CalibrationProfile::new(16.667, 5.556, 10.0, 150.0, 24.0, 68.0, 50.0)
            .expect("default calibration is valid")
    }
}

/// Lane the vehicle occupies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Lane {
    Driving,
    Emergency,
}

/// Control mode of the vehicle. Terminal modes end the simulation run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Driving automated at cruise speed; no hazard acted upon yet.
    Automated,
    /// Take-over request issued; waiting for the driver until `deadline` (s).
    TorPending { deadline: f64 },
    /// Holding a constant speed en route to a known target position.
    MrmCruise,
    /// Crawling at maneuver speed, scanning the emergency lane for a spot.
    MrmSearch,
    /// Decelerating toward the reduced maneuver speed.
    MrmBrakeToMrmSpeed,
    /// Moving onto the emergency lane; `remaining` meters still to cover.
    LaneChange { remaining: f64 },
    /// Terminal: came to a standstill on the driving lane.
    StoppedOnDrivingLane,
    /// Terminal: parked on the emergency lane.
    ParkedInSafeSpot,
}

impl Mode {
    /// Whether the mode ends the run.
    pub fn is_terminal(&self) -> bool {
        matches!(self, Mode::StoppedOnDrivingLane | Mode::ParkedInSafeSpot)
    }

    /// Stable label used in traces and exports.
    pub fn label(&self) -> &'static str {
        match self {
            Mode::Automated => "automated",
            Mode::TorPending { .. } => "tor_pending",
            Mode::MrmCruise => "mrm_cruise",
            Mode::MrmSearch => "mrm_search",
            Mode::MrmBrakeToMrmSpeed => "mrm_brake_to_mrm_speed",
            Mode::LaneChange { .. } => "lane_change",
            Mode::StoppedOnDrivingLane => "stopped_on_driving_lane",
            Mode::ParkedInSafeSpot => "parked_in_safe_spot",
        }
    }
}

/// Emergency-lane range assigned or chosen for parking, `[near, far]` in
/// meters to the zone entry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpotRange {
    pub far_x: f64,
    pub near_x: f64,
}

/// Bookkeeping for one advice received from the roadside unit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdviceRecord {
    pub advice_id: u32,
    /// Stable label of the advice kind ("toc" or "safe_spot").
    pub kind: &'static str,
    /// Last compliance status reported for this advice.
    pub status: ComplianceStatus,
}

/// Full kinematic and protocol state of the vehicle.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VehicleState {
    /// Distance to the zone entry (m); decreases while driving.
    pub x: f64,
    /// Current speed (m/s), non-negative.
    pub v: f64,
    /// Current acceleration (m/s²); 0 in constant-speed phases.
    pub a: f64,
    /// Speed the current longitudinal plan levels out at (m/s). Under
    /// deceleration the integrator clamps `v` here and holds it.
    pub v_target: f64,
    pub lane: Lane,
    pub mode: Mode,
    /// Position at which control was handed back (set exactly once).
    pub toc_x: Option<f64>,
    /// Parking range the vehicle is committed to, if any.
    pub assigned_spot: Option<SpotRange>,
    /// All advices received so far with their reported status.
    pub received_advices: Vec<AdviceRecord>,
}

impl VehicleState {
    /// Fresh automated vehicle at position `x`, cruising at `v_drive`.
    pub fn spawn(x: f64, profile: &CalibrationProfile) -> Self {
        VehicleState {
            x,
            v: profile.v_drive,
            a: 0.0,
            v_target: profile.v_drive,
            lane: Lane::Driving,
            mode: Mode::Automated,
            toc_x: None,
            assigned_spot: None,
            received_advices: Vec::new(),
        }
    }
}

/// Exact constant-acceleration update over `dt` with the speed clamped to
/// `[v_lo, v_hi]`. Returns the new `(x, v)`.
///
/// When the clamp engages mid-step the motion is split at that exact instant,
/// so no integration error accumulates across the speed boundary.
pub(crate) fn integrate_clamped(
    x: f64,
    v: f64,
    a: f64,
    v_lo: f64,
    v_hi: f64,
    dt: f64,
) -> (f64, f64) {
    debug_assert!(v_lo <= v_hi + EPS);
    let v = v.clamp(v_lo, v_hi);
    if a == 0.0 {
        return (x - v * dt, v);
    }
    // Time until the clamp bound in the direction of the acceleration.
    let bound = if a < 0.0 { v_lo } else { v_hi };
    let t_hit = (bound - v) / a; // >= 0 since v is inside the band
    if t_hit >= dt {
        return (x - (v * dt + 0.5 * a * dt * dt), v + a * dt);
    }
    let x_at_bound = x - (v * t_hit + 0.5 * a * t_hit * t_hit);
    (x_at_bound - bound * (dt - t_hit), bound)
}

/// Integrates a vehicle state over `dt` seconds.
///
/// Pure kinematics: positions and speeds move, the lane-change progress
/// counter shrinks with the distance covered, and nothing else changes. Mode
/// transitions are decided by the agents, not here. Terminal states and
/// non-positive steps return the state unchanged.
pub fn advance(state: &VehicleState, profile: &CalibrationProfile, dt: f64) -> VehicleState {
    let mut s = state.clone();
    if dt <= 0.0 || s.mode.is_terminal() {
        return s;
    }
    let (x, v) = integrate_clamped(s.x, s.v, s.a, s.v_target.min(profile.v_drive), profile.v_drive, dt);
    if let Mode::LaneChange { remaining } = s.mode {
        s.mode = Mode::LaneChange {
            remaining: (remaining - (s.x - x)).max(0.0),
        };
    }
    s.x = x;
    s.v = v;
    s
}

/// Time until the speed reaches `v_target` under constant acceleration `a`,
/// or `None` if it never does.
pub fn time_to_speed(v: f64, a: f64, v_target: f64) -> Option<f64> {
    if (v - v_target).abs() <= EPS {
        return Some(0.0);
    }
    if a == 0.0 || (a > 0.0) != (v_target > v) {
        return None;
    }
    Some((v_target - v) / a)
}

/// Time until the position falls to `x_target <= x` while moving with
/// acceleration `a` and the speed clamped to `[v_lo, v_hi]`, or `None` if the
/// vehicle never gets there (it would stop first).
pub fn time_to_position(
    x: f64,
    v: f64,
    a: f64,
    v_lo: f64,
    v_hi: f64,
    x_target: f64,
) -> Option<f64> {
    let d = x - x_target;
    if d <= 0.0 {
        return Some(0.0);
    }
    let v = v.clamp(v_lo, v_hi);
    if a == 0.0 {
        return if v > EPS { Some(d / v) } else { None };
    }
    let bound = if a < 0.0 { v_lo } else { v_hi };
    let t_hit = (bound - v) / a;
    let d_hit = v * t_hit + 0.5 * a * t_hit * t_hit;
    if d <= d_hit + EPS {
        // Reached while still accelerating: solve 0.5·a·t² + v·t = d for the
        // earliest positive root.
        let disc = v * v + 2.0 * a * d;
        if disc < 0.0 {
            return None;
        }
        let t = if a < 0.0 {
            (v - disc.sqrt()) / (-a)
        } else {
            (disc.sqrt() - v) / a
        };
        return (t >= -EPS).then(|| t.max(0.0));
    }
    if bound <= EPS {
        return None; // stops before getting there
    }
    Some(t_hit + (d - d_hit) / bound)
}
