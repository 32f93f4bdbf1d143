//! Vehicle agent: reacting to notifications and advices, executing the
//! take-over request and the minimum-risk maneuver.
//!
//! The agent owns the [`VehicleState`] and advances it tick by tick. Inside
//! a tick it never integrates across a decision point: the step is cut at
//! the exact instant a trigger position, a speed floor, a deadline, a sensor
//! horizon or a standstill is reached, the decision is applied there, and
//! integration continues. Results are therefore independent of the tick
//! length, and recorded positions (take-over points, stop positions) are
//! exact rather than rounded to a tick.
//!
//! Behavior by scheme:
//!
//! * **Notification only**: a received hazard notification arms a take-over
//!   at its relevance distance. When the request expires the vehicle slows
//!   to maneuver speed and hunts for parking space on its own, using a
//!   forward sensor with limited range; how far it may keep crawling is the
//!   search budget. No spot within budget means stopping on the driving
//!   lane.
//! * **Coordination**: the roadside unit advises the take-over position and
//!   a safe spot. The vehicle acknowledges, triggers at the advised point,
//!   and either decelerates immediately and crawls to the spot or keeps
//!   cruising and brakes just in time, depending on the configured policy.

use serde_json::json;

use crate::messages::{
    mm_to_m, s_to_ms, AdviceKind, AdviceResponse, CamMessage, ComplianceStatus, McmBody,
    McmMessage, Message, TocTrigger, VehicleManeuverContainer, Waypoint,
};
use crate::model::{
    advance, CalibrationProfile, AdviceRecord, Lane, Mode, SpotRange, VehicleState,
};
use crate::rsu::EventRec;
use crate::scenario::{
    first_spot_encounter, CavOption, EmergencyLaneOccupancy, FreeRun, ScenarioConfig, Scheme,
};

/// Position/speed tolerance for boundary detection (m, m/s).
const EPS: f64 = 1e-9;

/// Static vehicle parameters.
#[derive(Debug, Clone)]
pub struct CavConfig {
    pub station_id: u32,
    /// Automation level reported in beacons.
    pub sae_level: u8,
    /// Forward range of the emergency-lane sensor (m).
    pub sensor_range: f64,
    /// Beacon period (s).
    pub cam_period: f64,
    /// Maneuver-message period (s).
    pub mcm_period: f64,
    /// Whether the driver answers the take-over request. Disabled by
    /// default: the evaluated scenarios assume an unresponsive driver, so
    /// every take-over request runs into the minimum-risk maneuver.
    pub driver_takes_over: bool,
}

impl Default for CavConfig {
    fn default() -> Self {
        CavConfig {
            station_id: 7,
            sae_level: 3,
            sensor_range: 100.0,
            cam_period: 0.1,
            mcm_period: 1.0,
            driver_takes_over: false,
        }
    }
}

/// What the vehicle sensor reports: the slice of ground truth covering the
/// section alongside the vehicle plus every section whose far edge lies
/// within sensor range ahead.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorView {
    /// `(section index, is free)`, ascending by index.
    pub sections: Vec<(usize, bool)>,
    s_len: f64,
}

impl SensorView {
    pub fn capture(x: f64, sensor_range: f64, occ: &EmergencyLaneOccupancy) -> Self {
        let s_len = occ.s_len();
        let mut sections = Vec::new();
        for j in 0..occ.n_sections() {
            let near = j as f64 * s_len;
            let far = near + s_len;
            if near < x - EPS && far > x - sensor_range - EPS {
                sections.push((j, occ.is_section_free(j)));
            }
        }
        SensorView { sections, s_len }
    }

    /// Maximal visible free runs, ordered far-to-near.
    pub fn visible_free_runs(&self) -> Vec<FreeRun> {
        let mut runs: Vec<FreeRun> = Vec::new();
        let mut current: Option<(usize, usize)> = None;
        for &(j, free) in &self.sections {
            match (current, free) {
                (None, true) => current = Some((j, j)),
                (Some((lo, hi)), true) if j == hi + 1 => current = Some((lo, j)),
                (Some((lo, hi)), _) => {
                    runs.push(FreeRun {
                        near_x: lo as f64 * self.s_len,
                        far_x: (hi + 1) as f64 * self.s_len,
                    });
                    current = if free { Some((j, j)) } else { None };
                }
                (None, false) => {}
            }
        }
        if let Some((lo, hi)) = current {
            runs.push(FreeRun {
                near_x: lo as f64 * self.s_len,
                far_x: (hi + 1) as f64 * self.s_len,
            });
        }
        runs.reverse();
        runs
    }
}

/// What a cruise phase is heading toward.
#[derive(Debug, Clone, Copy, PartialEq)]
enum CruiseGoal {
    /// Cruise at drive speed, then decelerate to maneuver speed here.
    BrakePoint(f64),
    /// Cruise at maneuver speed to the spot's far edge, then change lane.
    SpotArrival(f64),
}

/// Decision point inside a tick.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Boundary {
    /// The armed take-over position is reached.
    TorTrigger(f64),
    /// The driver lead time expires.
    TorDeadline,
    /// The speed hits the maneuver-speed floor.
    SpeedFloor,
    /// A planned deceleration point is reached.
    BrakeStart(f64),
    /// The committed spot encounter (or advised far edge) is reached.
    Arrival(f64),
    /// A new emergency-lane section enters sensor range.
    ViewAdvance(f64),
    /// The lane change has covered its longitudinal distance.
    LaneChangeDone,
    /// The vehicle comes to a standstill.
    Stopped,
}

/// The automated vehicle.
pub struct CavAgent {
    profile: CalibrationProfile,
    scenario: ScenarioConfig,
    cfg: CavConfig,
    pub state: VehicleState,
    /// Armed take-over position, from the notification's relevance range or
    /// from a roadside advice.
    armed_tor_x: Option<f64>,
    toc_advice_id: Option<u32>,
    spot_advice_id: Option<u32>,
    cruise_goal: Option<CruiseGoal>,
    /// Search state (notification scheme): how far crawling may continue,
    /// where the final brake must start, the next sensor-horizon event, and
    /// the committed encounter if one was found.
    search_budget_end_x: f64,
    search_brake_start_x: f64,
    search_next_view_x: Option<f64>,
    search_target_x: Option<f64>,
    /// Set while braking from maneuver speed to standstill.
    final_braking: bool,
    pending_responses: Vec<AdviceResponse>,
    cam_count: u64,
    mcm_count: u64,
    /// Meters covered at constant maneuver speed before the lane change —
    /// the exposure of the maneuver on the driving lane.
    pub dist_at_mrm_speed: f64,
    /// Standstill position if the run ended on the driving lane.
    pub stop_x: Option<f64>,
    /// Window the vehicle parked in, if it parked.
    pub parked_window: Option<usize>,
    events: Vec<EventRec>,
}

impl CavAgent {
    pub fn new(
        spawn_x: f64,
        profile: CalibrationProfile,
        scenario: ScenarioConfig,
        cfg: CavConfig,
    ) -> Self {
        let state = VehicleState::spawn(spawn_x, &profile);
        CavAgent {
            profile,
            scenario,
            cfg,
            state,
            armed_tor_x: None,
            toc_advice_id: None,
            spot_advice_id: None,
            cruise_goal: None,
            search_budget_end_x: f64::NEG_INFINITY,
            search_brake_start_x: f64::NEG_INFINITY,
            search_next_view_x: None,
            search_target_x: None,
            final_braking: false,
            pending_responses: Vec::new(),
            cam_count: 0,
            mcm_count: 0,
            dist_at_mrm_speed: 0.0,
            stop_x: None,
            parked_window: None,
            events: Vec::new(),
        }
    }

    pub fn station_id(&self) -> u32 {
        self.cfg.station_id
    }

    /// Processes one received message.
    pub fn handle(&mut self, msg: &Message, now: f64) {
        match msg {
            Message::Denm(denm) => self.on_denm(denm.relevance_distance_m(), now),
            Message::Mcm(mcm) => {
                self.on_mcm(mcm, now);
            }
            Message::Cam(_) => {} // the vehicle ignores beacons
        }
    }

    /// A hazard notification arms the take-over at its relevance distance.
    ///
    /// Repeated notifications are idempotent; anything received after the
    /// take-over was issued changes nothing. A notification received inside
    /// the relevance range (first contact came late) triggers right away at
    /// the next step boundary.
    pub fn on_denm(&mut self, relevance_distance: f64, now: f64) {
        if self.scenario.scheme != Scheme::Denm || self.state.mode != Mode::Automated {
            return;
        }
        if self.armed_tor_x.is_none() {
            self.armed_tor_x = Some(relevance_distance);
            self.events.push((
                now,
                "hazard_armed",
                json!({ "trigger_x": relevance_distance }),
            ));
        }
    }

    /// Processes roadside advices and returns the responses it queues.
    ///
    /// New advices are stored and answered `received_will_try`; an advice
    /// already known just gets its current status re-sent (the unit keeps
    /// retransmitting until an acknowledgement makes it through). Advices
    /// the vehicle cannot execute — a trigger form it does not implement, a
    /// trigger position it has already passed, or any advice arriving after
    /// automation ended — are answered `rejected`.
    pub fn on_mcm(&mut self, mcm: &McmMessage, now: f64) -> Vec<AdviceResponse> {
        let McmBody::Rsu(container) = &mcm.body else {
            return Vec::new();
        };
        if self.scenario.scheme != Scheme::Mcm {
            return Vec::new();
        }
        let mut queued = Vec::new();
        for entry in &container.entries {
            if entry.target_station_id != self.cfg.station_id {
                continue;
            }
            for advice in &entry.advices {
                if let Some(record) = self
                    .state
                    .received_advices
                    .iter()
                    .find(|r| r.advice_id == advice.advice_id)
                {
                    queued.push(AdviceResponse {
                        advice_id: advice.advice_id,
                        status: record.status,
                    });
                    continue;
                }
                let (kind_label, status) = match advice.kind {
                    _ if self.state.mode != Mode::Automated => {
                        // Too late to take on new advice mid-maneuver.
                        (advice_kind_label(&advice.kind), ComplianceStatus::Rejected)
                    }
                    AdviceKind::TransitionOfControl {
                        trigger: TocTrigger::DistanceRange { near_mm, .. },
                        ..
                    } => {
                        let trigger_x = mm_to_m(near_mm);
                        if self.state.x > trigger_x + EPS {
                            self.armed_tor_x = Some(trigger_x);
                            self.toc_advice_id = Some(advice.advice_id);
                            ("toc", ComplianceStatus::ReceivedWillTry)
                        } else {
                            log::warn!(
                                "take-over advice at {trigger_x:.2} m arrived at {:.2} m, already passed",
                                self.state.x
                            );
                            ("toc", ComplianceStatus::Rejected)
                        }
                    }
                    AdviceKind::TransitionOfControl {
                        trigger: TocTrigger::TimeWindow { .. },
                        ..
                    } => {
                        // Only distance triggers are implemented on board.
                        ("toc", ComplianceStatus::Rejected)
                    }
                    AdviceKind::SafeSpot { far_mm, near_mm } => {
                        self.state.assigned_spot = Some(SpotRange {
                            far_x: mm_to_m(far_mm),
                            near_x: mm_to_m(near_mm),
                        });
                        self.spot_advice_id = Some(advice.advice_id);
                        ("safe_spot", ComplianceStatus::ReceivedWillTry)
                    }
                };
                self.state.received_advices.push(AdviceRecord {
                    advice_id: advice.advice_id,
                    kind: kind_label,
                    status,
                });
                self.events.push((
                    now,
                    "advice_received",
                    json!({ "advice_id": advice.advice_id, "kind": kind_label,
                            "status": format!("{status:?}") }),
                ));
                queued.push(AdviceResponse {
                    advice_id: advice.advice_id,
                    status,
                });
            }
        }
        self.pending_responses.extend(queued.iter().copied());
        queued
    }

    /// Updates the reported status of a stored advice and queues the
    /// corresponding response.
    fn report_advice(&mut self, advice_id: Option<u32>, status: ComplianceStatus) {
        let Some(id) = advice_id else { return };
        if let Some(record) = self
            .state
            .received_advices
            .iter_mut()
            .find(|r| r.advice_id == id)
        {
            record.status = status;
        }
        self.pending_responses.push(AdviceResponse {
            advice_id: id,
            status,
        });
    }

    // -----------------------------------------------------------------
    // Emission.
    // -----------------------------------------------------------------

    /// Messages leaving the vehicle this tick: the 10 Hz beacon and, in the
    /// coordination scheme, the 1 Hz maneuver message carrying the planned
    /// trajectory and any queued advice responses.
    pub fn collect_emissions(&mut self, now: f64) -> Vec<Message> {
        if self.state.mode.is_terminal() {
            return Vec::new();
        }
        let mut out = Vec::new();
        if now + EPS >= self.cam_count as f64 * self.cfg.cam_period {
            self.cam_count += 1;
            out.push(Message::Cam(self.emit_cam(now)));
        }
        if self.scenario.scheme == Scheme::Mcm
            && now + EPS >= self.mcm_count as f64 * self.cfg.mcm_period
        {
            self.mcm_count += 1;
            if let Some(mcm) = self.emit_mcm(now) {
                out.push(Message::Mcm(mcm));
            }
        }
        out
    }

    /// Builds the awareness beacon for the current state.
    pub fn emit_cam(&self, now: f64) -> CamMessage {
        CamMessage::from_si(
            self.cfg.station_id,
            now,
            self.state.x,
            self.state.v,
            self.state.a,
            self.cfg.sae_level,
        )
    }

    /// Builds the maneuver message: current dynamics, a three-point
    /// constant-speed trajectory prediction one second apart, and all
    /// queued advice responses (deduplicated, latest status wins).
    ///
    /// Returns `None` when the vehicle is so slow that the predicted
    /// waypoints would not strictly decrease — near standstill there is no
    /// meaningful trajectory to announce.
    pub fn emit_mcm(&mut self, now: f64) -> Option<McmMessage> {
        let horizon = 1.0; // s between waypoints
        let mut planned = Vec::with_capacity(3);
        for i in 0..3 {
            let x = (self.state.x - self.state.v * horizon * i as f64).max(0.0);
            planned.push(Waypoint {
                position_mm: crate::messages::m_to_mm(x),
                speed_cm_s: crate::messages::mps_to_cms(self.state.v),
            });
        }
        if !planned
            .windows(2)
            .all(|w| w[1].position_mm < w[0].position_mm)
        {
            log::debug!("skipping maneuver message: no usable trajectory near standstill");
            return None;
        }
        let mut responses: Vec<AdviceResponse> = Vec::new();
        for resp in self.pending_responses.drain(..) {
            match responses.iter_mut().find(|r| r.advice_id == resp.advice_id) {
                Some(existing) => existing.status = resp.status,
                None => responses.push(resp),
            }
        }
        Some(McmMessage {
            station_id: self.cfg.station_id,
            gen_time_ms: s_to_ms(now),
            body: McmBody::Vehicle(VehicleManeuverContainer {
                position_mm: crate::messages::m_to_mm(self.state.x),
                speed_cm_s: crate::messages::mps_to_cms(self.state.v),
                accel_mm_s2: crate::messages::mps2_to_mms2(self.state.a),
                planned_trajectory: planned,
                desired_trajectory: None,
                advice_responses: responses,
            }),
        })
    }

    // -----------------------------------------------------------------
    // Stepping.
    // -----------------------------------------------------------------

    /// Advances the vehicle by `dt`, cutting the step at every decision
    /// point so that triggers, speed floors and standstills land exactly.
    pub fn step(&mut self, now: f64, dt: f64, occ: &EmergencyLaneOccupancy) {
        let end = now + dt;
        let mut t = now;
        // Each boundary either terminates the run or strictly advances the
        // maneuver; a handful per tick is the theoretical maximum.
        for _ in 0..64 {
            if self.state.mode.is_terminal() || end - t <= EPS {
                return;
            }
            let (tau, boundary) = self.next_boundary(t, end - t);
            self.integrate(tau);
            t += tau;
            if let Some(b) = boundary {
                self.apply_boundary(b, t, occ);
            }
        }
        debug_assert!(false, "boundary loop failed to converge within one tick");
    }

    /// Integrates the kinematics over `tau`, accumulating the crawl-distance
    /// indicator while the vehicle holds maneuver speed ahead of the spot.
    fn integrate(&mut self, tau: f64) {
        if tau <= 0.0 {
            return;
        }
        let counting = self.state.a == 0.0
            && (self.state.v - self.profile.v_mrm).abs() <= EPS
            && matches!(self.state.mode, Mode::MrmSearch | Mode::MrmCruise);
        let x_before = self.state.x;
        self.state = advance(&self.state, &self.profile, tau);
        if counting {
            self.dist_at_mrm_speed += x_before - self.state.x;
        }
    }

    /// The earliest decision point within `tau_max` seconds, if any.
    fn next_boundary(&self, t: f64, tau_max: f64) -> (f64, Option<Boundary>) {
        let s = &self.state;
        let candidate: Option<(f64, Boundary)> = match s.mode {
            Mode::Automated => self.armed_tor_x.map(|trigger| {
                let tau = if s.x <= trigger + EPS {
                    0.0
                } else {
                    (s.x - trigger) / s.v
                };
                (tau, Boundary::TorTrigger(trigger))
            }),
            Mode::TorPending { deadline } => Some(((deadline - t).max(0.0), Boundary::TorDeadline)),
            Mode::MrmBrakeToMrmSpeed => {
                if self.final_braking {
                    Some(((0.0 - s.v) / self.profile.a_to_stop, Boundary::Stopped))
                } else {
                    Some((
                        (self.profile.v_mrm - s.v) / self.profile.a_to_mrm,
                        Boundary::SpeedFloor,
                    ))
                }
            }
            Mode::MrmCruise => {
                if self.final_braking {
                    Some(((0.0 - s.v) / self.profile.a_to_stop, Boundary::Stopped))
                } else {
                    self.cruise_goal.map(|goal| match goal {
                        CruiseGoal::BrakePoint(bx) => {
                            ((s.x - bx).max(0.0) / s.v, Boundary::BrakeStart(bx))
                        }
                        CruiseGoal::SpotArrival(fx) => {
                            ((s.x - fx).max(0.0) / s.v, Boundary::Arrival(fx))
                        }
                    })
                }
            }
            Mode::MrmSearch => {
                if self.final_braking {
                    Some(((0.0 - s.v) / self.profile.a_to_stop, Boundary::Stopped))
                } else if let Some(target) = self.search_target_x {
                    Some(((s.x - target).max(0.0) / s.v, Boundary::Arrival(target)))
                } else {
                    // Whichever comes first while crawling down: a new
                    // section entering sensor range, or the braking point.
                    let brake = self.search_brake_start_x;
                    match self.search_next_view_x {
                        Some(view) if view > brake + EPS => {
                            Some(((s.x - view).max(0.0) / s.v, Boundary::ViewAdvance(view)))
                        }
                        _ => Some(((s.x - brake).max(0.0) / s.v, Boundary::BrakeStart(brake))),
                    }
                }
            }
            Mode::LaneChange { remaining } => Some((remaining / s.v, Boundary::LaneChangeDone)),
            Mode::StoppedOnDrivingLane | Mode::ParkedInSafeSpot => None,
        };
        match candidate {
            Some((tau, b)) if tau <= tau_max + EPS => (tau.clamp(0.0, tau_max), Some(b)),
            _ => (tau_max, None),
        }
    }

    /// Applies the decision at a boundary the integration just landed on.
    fn apply_boundary(&mut self, boundary: Boundary, t: f64, occ: &EmergencyLaneOccupancy) {
        match boundary {
            Boundary::TorTrigger(trigger_x) => {
                self.state.x = self.state.x.min(trigger_x);
                self.armed_tor_x = None;
                self.state.toc_x = Some(self.state.x);
                self.state.mode = Mode::TorPending {
                    deadline: t + self.profile.t_tor,
                };
                self.events
                    .push((t, "tor_issued", json!({ "x": self.state.x })));
                self.report_advice(self.toc_advice_id, ComplianceStatus::Following);
            }
            Boundary::TorDeadline => {
                if self.cfg.driver_takes_over {
                    // The driver resumes manual control; the maneuver never
                    // starts and the vehicle simply drives on.
                    self.state.mode = Mode::Automated;
                    self.events
                        .push((t, "driver_took_over", json!({ "x": self.state.x })));
                    return;
                }
                self.events
                    .push((t, "mrm_started", json!({ "x": self.state.x })));
                self.report_advice(self.spot_advice_id, ComplianceStatus::Following);
                match (self.scenario.scheme, self.scenario.mcm_cav_option) {
                    (Scheme::Denm, _) | (Scheme::Mcm, CavOption::RsuAdvice) => {
                        self.begin_brake_to_mrm_speed();
                        if self.scenario.scheme == Scheme::Mcm {
                            let far = self.assigned_far_edge();
                            self.cruise_goal = Some(CruiseGoal::SpotArrival(far));
                        }
                    }
                    (Scheme::Mcm, CavOption::CavDecision) => {
                        let far = self.assigned_far_edge();
                        let brake_x = far + self.profile.d_to_mrm_speed;
                        self.cruise_goal = Some(CruiseGoal::SpotArrival(far));
                        if self.state.x <= brake_x + EPS {
                            self.begin_brake_to_mrm_speed();
                        } else {
                            self.state.mode = Mode::MrmCruise;
                            self.state.a = 0.0;
                            self.state.v_target = self.profile.v_drive;
                            self.cruise_goal = Some(CruiseGoal::BrakePoint(brake_x));
                        }
                    }
                }
            }
            Boundary::SpeedFloor => {
                self.state.v = self.profile.v_mrm;
                self.state.a = 0.0;
                self.state.v_target = self.profile.v_mrm;
                self.events
                    .push((t, "mrm_speed_reached", json!({ "x": self.state.x })));
                match self.scenario.scheme {
                    Scheme::Denm => self.begin_search(t, occ),
                    Scheme::Mcm => {
                        let far = self.assigned_far_edge();
                        self.cruise_goal = Some(CruiseGoal::SpotArrival(far));
                        if self.state.x <= far + EPS {
                            self.arrive_at_spot(t, occ);
                        } else {
                            self.state.mode = Mode::MrmCruise;
                        }
                    }
                }
            }
            Boundary::BrakeStart(bx) => {
                self.state.x = self.state.x.min(bx).max(0.0);
                match self.state.mode {
                    Mode::MrmCruise => {
                        // Late-braking policy: decelerate to maneuver speed.
                        self.begin_brake_to_mrm_speed();
                    }
                    Mode::MrmSearch => {
                        // End of the search budget. One last sensor sweep,
                        // then brake to standstill if it found nothing.
                        // The sweep may itself commit to a lane change
                        // right here, which ends the search.
                        self.evaluate_search(t, occ);
                        if self.state.mode == Mode::MrmSearch && self.search_target_x.is_none()
                        {
                            self.begin_final_braking(t);
                        }
                    }
                    _ => debug_assert!(false, "brake boundary in mode {:?}", self.state.mode),
                }
            }
            Boundary::Arrival(target) => {
                self.state.x = self.state.x.min(target);
                self.search_target_x = None;
                self.cruise_goal = None;
                self.arrive_at_spot(t, occ);
            }
            Boundary::ViewAdvance(view_x) => {
                self.state.x = self.state.x.min(view_x);
                self.evaluate_search(t, occ);
                if self.state.mode == Mode::MrmSearch && self.search_target_x.is_none() {
                    self.search_next_view_x = next_view_position(
                        self.state.x,
                        self.cfg.sensor_range,
                        occ.s_len(),
                    );
                }
            }
            Boundary::LaneChangeDone => {
                self.state.mode = Mode::ParkedInSafeSpot;
                self.state.lane = Lane::Emergency;
                self.state.v = 0.0;
                self.state.a = 0.0;
                self.state.v_target = 0.0;
                self.events.push((
                    t,
                    "parked",
                    json!({ "x": self.state.x, "window": self.parked_window }),
                ));
            }
            Boundary::Stopped => {
                self.state.v = 0.0;
                self.state.a = 0.0;
                self.state.mode = Mode::StoppedOnDrivingLane;
                self.stop_x = Some(self.state.x);
                self.events
                    .push((t, "stopped", json!({ "x": self.state.x })));
            }
        }
    }

    /// Far edge of the advised spot. The coordination flow guarantees the
    /// spot advice arrived together with the take-over advice.
    fn assigned_far_edge(&self) -> f64 {
        match self.state.assigned_spot {
            Some(spot) => spot.far_x,
            None => {
                debug_assert!(false, "maneuver started without an assigned spot");
                0.0
            }
        }
    }

    fn begin_brake_to_mrm_speed(&mut self) {
        self.state.mode = Mode::MrmBrakeToMrmSpeed;
        self.state.a = self.profile.a_to_mrm;
        self.state.v_target = self.profile.v_mrm;
    }

    fn begin_final_braking(&mut self, t: f64) {
        self.final_braking = true;
        self.state.a = self.profile.a_to_stop;
        self.state.v_target = 0.0;
        self.events
            .push((t, "brake_to_stop_started", json!({ "x": self.state.x })));
    }

    /// Entry into the self-guided search, right when maneuver speed is
    /// reached. Fixes the budget and braking point, then evaluates the
    /// sensor picture once.
    fn begin_search(&mut self, t: f64, occ: &EmergencyLaneOccupancy) {
        self.search_budget_end_x = match self.scenario.denm_d_mrm.meters() {
            Some(budget) => self.state.x - budget,
            None => f64::NEG_INFINITY,
        };
        // Never brake later than the distance needed to stop before the
        // zone entry.
        self.search_brake_start_x = self.search_budget_end_x.max(self.profile.d_to_stop);
        self.state.mode = Mode::MrmSearch;
        // The first sweep may commit immediately (spot right here); only a
        // still-searching vehicle needs a braking plan and a view schedule.
        self.evaluate_search(t, occ);
        if self.state.mode == Mode::MrmSearch && self.search_target_x.is_none() {
            if self.state.x <= self.search_brake_start_x + EPS {
                // No budget to crawl: stop right here.
                self.begin_final_braking(t);
            } else {
                self.search_next_view_x =
                    next_view_position(self.state.x, self.cfg.sensor_range, occ.s_len());
            }
        }
    }

    /// One sensor sweep: finds the nearest visible free-lane encounter that
    /// is still within budget and offers enough ground-truth clearance.
    /// Commits to it (possibly immediately) when found.
    fn evaluate_search(&mut self, t: f64, occ: &EmergencyLaneOccupancy) {
        let view = SensorView::capture(self.state.x, self.cfg.sensor_range, occ);
        for run in view.visible_free_runs() {
            let encounter = self.state.x.min(run.far_x);
            if encounter <= run.near_x + EPS {
                continue; // no free lane actually below the vehicle here
            }
            if encounter < self.search_budget_end_x - EPS {
                break; // out of budget, and lower runs are farther still
            }
            // The sensor spotted the run; the commitment is checked against
            // ground truth from the encounter downward.
            let clearance = occ.clearance_below(encounter);
            if clearance + EPS >= self.profile.min_park_clearance {
                self.events.push((
                    t,
                    "search_target_acquired",
                    json!({ "encounter_x": encounter, "clearance": clearance }),
                ));
                if self.state.x <= encounter + EPS {
                    self.start_lane_change(t, occ);
                } else {
                    self.search_target_x = Some(encounter);
                }
                return;
            }
        }
    }

    /// Reached the spot (advised far edge or committed encounter): verify
    /// the clearance against ground truth and move over. A spot that turns
    /// out unusable (it never does under a truthful roadside unit) degrades
    /// into braking to a standstill.
    fn arrive_at_spot(&mut self, t: f64, occ: &EmergencyLaneOccupancy) {
        let ok = first_spot_encounter(self.state.x, occ)
            .map(|enc| {
                enc.encounter_x + EPS >= self.state.x
                    && enc.clearance + EPS >= self.profile.min_park_clearance
            })
            .unwrap_or(false);
        if ok {
            self.start_lane_change(t, occ);
        } else {
            log::warn!(
                "advised or committed spot at {:.2} m offers no clearance; stopping instead",
                self.state.x
            );
            self.state.mode = Mode::MrmSearch;
            self.begin_final_braking(t);
        }
    }

    fn start_lane_change(&mut self, t: f64, occ: &EmergencyLaneOccupancy) {
        let window = first_spot_encounter(self.state.x, occ)
            .map(|enc| (enc.run_near_x / occ.s_len()).round() as usize);
        self.parked_window = window;
        self.state.mode = Mode::LaneChange {
            remaining: self.profile.d_lane_change,
        };
        self.state.a = 0.0;
        self.state.v_target = self.profile.v_mrm;
        self.events.push((
            t,
            "lane_change_started",
            json!({ "x": self.state.x, "window": window }),
        ));
    }

    /// Drains the trace events produced since the last call.
    pub fn take_events(&mut self) -> Vec<EventRec> {
        std::mem::take(&mut self.events)
    }
}

fn advice_kind_label(kind: &AdviceKind) -> &'static str {
    match kind {
        AdviceKind::TransitionOfControl { .. } => "toc",
        AdviceKind::SafeSpot { .. } => "safe_spot",
    }
}

/// Position at which the next unseen section's far edge enters sensor
/// range, or `None` once the grid is exhausted.
fn next_view_position(x: f64, sensor_range: f64, s_len: f64) -> Option<f64> {
    let bottom = x - sensor_range;
    if bottom <= s_len {
        return None; // every remaining far edge is already visible
    }
    // Largest grid far edge strictly below the current view bottom.
    let mut k = (bottom / s_len).floor();
    if (bottom - k * s_len).abs() <= EPS {
        k -= 1.0;
    }
    let far_edge = k * s_len;
    if far_edge < s_len - EPS {
        return None;
    }
    Some(far_edge + sensor_range)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::messages::{
        cms_to_mps, m_to_mm, Advice, AdviceEntry, RsuSuggestedManeuverContainer,
    };
    use crate::scenario::SearchBudget;
    use approx::assert_abs_diff_eq;

    fn denm_setup(budget: SearchBudget, windows: &[usize]) -> (CavAgent, EmergencyLaneOccupancy) {
        let mut cfg = ScenarioConfig::default();
        cfg.scheme = Scheme::Denm;
        cfg.denm_d_mrm = budget;
        cfg.spot_count = windows.len().max(1);
        let occ = EmergencyLaneOccupancy::from_windows(&cfg, windows).unwrap();
        let agent = CavAgent::new(
            1000.0,
            CalibrationProfile::default(),
            cfg,
            CavConfig::default(),
        );
        (agent, occ)
    }

    /// Drives an agent to completion at the given tick length.
    fn run_to_end(agent: &mut CavAgent, occ: &EmergencyLaneOccupancy, dt: f64) -> f64 {
        agent.on_denm(500.0, 0.0);
        for tick in 0..200_000u64 {
            let now = tick as f64 * dt;
            agent.step(now, dt, occ);
            if agent.state.mode.is_terminal() {
                return now + dt;
            }
        }
        panic!("vehicle never terminated");
    }

    #[test]
    fn notification_arms_and_triggers_exactly_at_relevance() {
        let (mut agent, occ) = denm_setup(SearchBudget::Unlimited, &[5]);
        agent.on_denm(500.0, 0.0);
        assert_eq!(agent.state.mode, Mode::Automated);
        assert_eq!(agent.state.toc_x, None);
        // Duplicate notifications change nothing.
        agent.on_denm(500.0, 1.0);
        let mut now = 0.0;
        loop {
            agent.step(now, 0.1, &occ);
            now += 0.1;
            if agent.state.toc_x.is_some() {
                break;
            }
        }
        assert_abs_diff_eq!(agent.state.toc_x.unwrap(), 500.0, epsilon = 1e-9);
        match agent.state.mode {
            Mode::TorPending { deadline } => {
                // 500 m of cruising takes 1000-500 over v_drive seconds.
                let trigger_t = 500.0 / 16.667;
                assert_abs_diff_eq!(deadline, trigger_t + 10.0, epsilon = 1e-6);
            }
            other => panic!("expected pending take-over, got {other:?}"),
        }
    }

    #[test]
    fn maneuver_reaches_crawl_speed_at_the_expected_point() {
        let (mut agent, occ) = denm_setup(SearchBudget::Unlimited, &[5]);
        agent.on_denm(500.0, 0.0);
        let mut now = 0.0;
        while !matches!(agent.state.mode, Mode::MrmSearch | Mode::LaneChange { .. }) {
            agent.step(now, 0.1, &occ);
            now += 0.1;
            assert!(now < 120.0);
        }
        // 500 − 166.67 (lead time) − 150 (deceleration) = 183.33.
        let x_mrm = 500.0 - agent.profile.d_tor() - agent.profile.d_to_mrm_speed;
        assert!(agent.state.x <= x_mrm + 1e-6);
        assert_abs_diff_eq!(agent.state.v, agent.profile.v_mrm, epsilon = 1e-9);
    }

    #[test]
    fn zero_budget_parks_only_when_the_spot_is_right_there() {
        // Window 5 covers [125, 200): at 183.33 the clearance is 58.33 m.
        let (mut agent, occ) = denm_setup(SearchBudget::Zero, &[5]);
        run_to_end(&mut agent, &occ, 0.1);
        assert_eq!(agent.state.mode, Mode::ParkedInSafeSpot);
        assert_eq!(agent.parked_window, Some(5));
        assert_abs_diff_eq!(agent.dist_at_mrm_speed, 0.0, epsilon = 1e-9);

        // Window 6 covers [150, 225): clearance at 183.33 is only 33.33 m.
        let (mut agent, occ) = denm_setup(SearchBudget::Zero, &[6]);
        run_to_end(&mut agent, &occ, 0.1);
        assert_eq!(agent.state.mode, Mode::StoppedOnDrivingLane);
        let x_mrm = 500.0 - agent.profile.d_tor() - agent.profile.d_to_mrm_speed;
        assert_abs_diff_eq!(
            agent.stop_x.unwrap(),
            x_mrm - agent.profile.d_to_stop,
            epsilon = 1e-6
        );
    }

    #[test]
    fn fifty_budget_crawls_to_spots_within_reach() {
        // Window 3 covers [75, 150): encounter at 150, 33.33 m below the
        // crawl start, within the 50 m budget.
        let (mut agent, occ) = denm_setup(SearchBudget::Fifty, &[3]);
        run_to_end(&mut agent, &occ, 0.1);
        assert_eq!(agent.state.mode, Mode::ParkedInSafeSpot);
        assert_eq!(agent.parked_window, Some(3));
        assert_abs_diff_eq!(agent.dist_at_mrm_speed, 33.33, epsilon = 1e-6);

        // Window 2 covers [50, 125): encounter at 125 needs 58.33 m.
        let (mut agent, occ) = denm_setup(SearchBudget::Fifty, &[2]);
        run_to_end(&mut agent, &occ, 0.1);
        assert_eq!(agent.state.mode, Mode::StoppedOnDrivingLane);
        // Crawled the full budget, then braked 24 m.
        assert_abs_diff_eq!(agent.dist_at_mrm_speed, 50.0, epsilon = 1e-6);
        assert_abs_diff_eq!(agent.stop_x.unwrap(), 109.33, epsilon = 1e-6);
    }

    #[test]
    fn unlimited_budget_finds_every_spot_or_stops_at_the_entry() {
        for window in 0..6 {
            let (mut agent, occ) = denm_setup(SearchBudget::Unlimited, &[window]);
            run_to_end(&mut agent, &occ, 0.1);
            assert_eq!(
                agent.state.mode,
                Mode::ParkedInSafeSpot,
                "window {window} must be reachable"
            );
            assert_eq!(agent.parked_window, Some(window));
        }
        for window in 6..18 {
            let (mut agent, occ) = denm_setup(SearchBudget::Unlimited, &[window]);
            run_to_end(&mut agent, &occ, 0.1);
            assert_eq!(
                agent.state.mode,
                Mode::StoppedOnDrivingLane,
                "window {window} is already passed or too tight"
            );
        }
        // The farthest failure case brakes at the last moment and stops
        // exactly at the zone entry.
        let (mut agent, occ) = denm_setup(SearchBudget::Unlimited, &[17]);
        run_to_end(&mut agent, &occ, 0.1);
        assert_abs_diff_eq!(agent.stop_x.unwrap(), 0.0, epsilon = 1e-6);
        assert_abs_diff_eq!(agent.dist_at_mrm_speed, 159.33, epsilon = 1e-6);
    }

    #[test]
    fn results_are_tick_length_invariant() {
        for windows in [[3usize], [5], [9]] {
            let (mut coarse, occ) = denm_setup(SearchBudget::Unlimited, &windows);
            run_to_end(&mut coarse, &occ, 0.1);
            let (mut fine, occ) = denm_setup(SearchBudget::Unlimited, &windows);
            run_to_end(&mut fine, &occ, 0.01);
            assert_eq!(coarse.state.mode, fine.state.mode);
            assert_abs_diff_eq!(coarse.state.x, fine.state.x, epsilon = 1e-6);
            assert_abs_diff_eq!(
                coarse.dist_at_mrm_speed,
                fine.dist_at_mrm_speed,
                epsilon = 1e-6
            );
            assert_abs_diff_eq!(
                coarse.state.toc_x.unwrap(),
                fine.state.toc_x.unwrap(),
                epsilon = 1e-9
            );
        }
    }

    #[test]
    fn sensor_view_is_a_slice_of_ground_truth() {
        let cfg = ScenarioConfig::default();
        let occ = EmergencyLaneOccupancy::from_windows(&cfg, &[5]).unwrap();
        let view = SensorView::capture(183.33, 100.0, &occ);
        // Sections from view bottom 83.33 up to the one alongside 183.33.
        let indices: Vec<usize> = view.sections.iter().map(|&(j, _)| j).collect();
        assert_eq!(indices, vec![3, 4, 5, 6, 7]);
        for &(j, free) in &view.sections {
            assert_eq!(free, occ.is_section_free(j));
        }
        let runs = view.visible_free_runs();
        assert_eq!(runs.len(), 1);
        assert_abs_diff_eq!(runs[0].near_x, 125.0);
        assert_abs_diff_eq!(runs[0].far_x, 200.0);
    }

    #[test]
    fn view_advance_positions_walk_the_grid() {
        // From 183.33 with 100 m range the bottom sits at 83.33; the next
        // far edge below is 75, entering view at 175.
        let next = next_view_position(183.33, 100.0, 25.0).unwrap();
        assert_abs_diff_eq!(next, 175.0, epsilon = 1e-9);
        let next = next_view_position(175.0, 100.0, 25.0).unwrap();
        assert_abs_diff_eq!(next, 150.0, epsilon = 1e-9);
        // Bottom at or below the first section: nothing new will appear.
        assert!(next_view_position(125.0, 100.0, 25.0).is_none());
        assert!(next_view_position(90.0, 100.0, 25.0).is_none());
    }

    fn advice_mcm(tor_x: f64, window_far: f64, window_near: f64) -> McmMessage {
        McmMessage {
            station_id: 1,
            gen_time_ms: 0,
            body: McmBody::Rsu(RsuSuggestedManeuverContainer {
                entries: vec![AdviceEntry {
                    target_station_id: 7,
                    advices: vec![
                        Advice {
                            advice_id: 1,
                            kind: AdviceKind::TransitionOfControl {
                                target_level: 0,
                                trigger: TocTrigger::DistanceRange {
                                    far_mm: m_to_mm(tor_x),
                                    near_mm: m_to_mm(tor_x),
                                },
                            },
                        },
                        Advice {
                            advice_id: 2,
                            kind: AdviceKind::SafeSpot {
                                far_mm: m_to_mm(window_far),
                                near_mm: m_to_mm(window_near),
                            },
                        },
                    ],
                }],
            }),
        }
    }

    fn mcm_setup(cav_option: CavOption, window: usize) -> (CavAgent, EmergencyLaneOccupancy, f64) {
        let mut cfg = ScenarioConfig::default();
        cfg.scheme = Scheme::Mcm;
        cfg.mcm_cav_option = cav_option;
        let occ = EmergencyLaneOccupancy::from_windows(&cfg, &[window]).unwrap();
        let far = cfg.window_far_edge(window);
        let agent = CavAgent::new(
            1000.0,
            CalibrationProfile::default(),
            cfg,
            CavConfig::default(),
        );
        (agent, occ, far)
    }

    fn run_mcm(agent: &mut CavAgent, occ: &EmergencyLaneOccupancy) {
        for tick in 0..200_000u64 {
            agent.step(tick as f64 * 0.1, 0.1, occ);
            if agent.state.mode.is_terminal() {
                return;
            }
        }
        panic!("vehicle never terminated");
    }

    #[test]
    fn advice_flow_acknowledges_then_follows() {
        let (mut agent, occ, far) = mcm_setup(CavOption::RsuAdvice, 5);
        let responses = agent.on_mcm(&advice_mcm(500.0, far, far - 75.0), 0.2);
        assert_eq!(responses.len(), 2);
        assert!(responses
            .iter()
            .all(|r| r.status == ComplianceStatus::ReceivedWillTry));
        assert_eq!(agent.state.received_advices.len(), 2);
        assert!(agent.state.assigned_spot.is_some());

        // A retransmission of the same ids just repeats the answer.
        let responses = agent.on_mcm(&advice_mcm(500.0, far, far - 75.0), 1.2);
        assert_eq!(responses.len(), 2);
        assert_eq!(agent.state.received_advices.len(), 2);

        run_mcm(&mut agent, &occ);
        assert_eq!(agent.state.mode, Mode::ParkedInSafeSpot);
        assert_eq!(agent.parked_window, Some(5));
        assert_abs_diff_eq!(agent.state.toc_x.unwrap(), 500.0, epsilon = 1e-9);
        // Both advices ended up in "following".
        assert!(agent
            .state
            .received_advices
            .iter()
            .all(|r| r.status == ComplianceStatus::Following));
    }

    #[test]
    fn early_deceleration_crawls_exactly_the_margin() {
        // Trigger at the minimum distance: far + lead + deceleration + margin.
        let (mut agent, occ, far) = mcm_setup(CavOption::RsuAdvice, 5);
        let tor_x = far + 166.67 + 150.0 + 15.0;
        agent.on_mcm(&advice_mcm(tor_x, far, far - 75.0), 0.2);
        run_mcm(&mut agent, &occ);
        assert_eq!(agent.state.mode, Mode::ParkedInSafeSpot);
        assert_abs_diff_eq!(agent.dist_at_mrm_speed, 15.0, epsilon = 0.05);
    }

    #[test]
    fn late_braking_reaches_the_spot_at_crawl_speed_with_no_crawling() {
        let (mut agent, occ, far) = mcm_setup(CavOption::CavDecision, 5);
        let tor_x = far + 166.67 + 150.0 + 15.0;
        agent.on_mcm(&advice_mcm(tor_x, far, far - 75.0), 0.2);
        run_mcm(&mut agent, &occ);
        assert_eq!(agent.state.mode, Mode::ParkedInSafeSpot);
        assert_abs_diff_eq!(agent.dist_at_mrm_speed, 0.0, epsilon = 1e-6);
    }

    #[test]
    fn passed_triggers_and_unsupported_forms_are_rejected() {
        let (mut agent, _occ, far) = mcm_setup(CavOption::RsuAdvice, 5);
        agent.state.x = 400.0; // already below the advised trigger
        let responses = agent.on_mcm(&advice_mcm(500.0, far, far - 75.0), 0.2);
        assert_eq!(responses[0].status, ComplianceStatus::Rejected);
        // The safe-spot advice itself is still accepted.
        assert_eq!(responses[1].status, ComplianceStatus::ReceivedWillTry);

        let (mut agent, _occ, _far) = mcm_setup(CavOption::RsuAdvice, 5);
        let mcm = McmMessage {
            station_id: 1,
            gen_time_ms: 0,
            body: McmBody::Rsu(RsuSuggestedManeuverContainer {
                entries: vec![AdviceEntry {
                    target_station_id: 7,
                    advices: vec![Advice {
                        advice_id: 1,
                        kind: AdviceKind::TransitionOfControl {
                            target_level: 0,
                            trigger: TocTrigger::TimeWindow {
                                start_ms: 0,
                                end_ms: 10_000,
                            },
                        },
                    }],
                }],
            }),
        };
        let responses = agent.on_mcm(&mcm, 0.2);
        assert_eq!(responses[0].status, ComplianceStatus::Rejected);
    }

    #[test]
    fn beacons_and_maneuver_messages_follow_their_rates() {
        let (mut agent, _occ, _far) = mcm_setup(CavOption::RsuAdvice, 5);
        let mut cams = 0;
        let mut mcms = 0;
        for tick in 0..10 {
            // one second of simulation
            for msg in agent.collect_emissions(tick as f64 * 0.1) {
                match msg {
                    Message::Cam(_) => cams += 1,
                    Message::Mcm(_) => mcms += 1,
                    Message::Denm(_) => panic!("vehicles do not send notifications"),
                }
            }
        }
        assert_eq!(cams, 10);
        assert_eq!(mcms, 1);
    }

    #[test]
    fn maneuver_message_carries_prediction_and_responses() {
        let (mut agent, _occ, far) = mcm_setup(CavOption::RsuAdvice, 5);
        agent.on_mcm(&advice_mcm(500.0, far, far - 75.0), 0.0);
        let mcm = agent.emit_mcm(0.1).unwrap();
        let McmBody::Vehicle(v) = &mcm.body else {
            panic!("expected vehicle container")
        };
        assert_eq!(v.planned_trajectory.len(), 3);
        assert!(v
            .planned_trajectory
            .windows(2)
            .all(|w| w[1].position_mm < w[0].position_mm));
        // One second apart at drive speed.
        let gap = v.planned_trajectory[0].position_mm - v.planned_trajectory[1].position_mm;
        assert_abs_diff_eq!(mm_to_m(gap), 16.667, epsilon = 0.01);
        assert_eq!(v.advice_responses.len(), 2);
        // Responses were drained; the next message carries none.
        let mcm = agent.emit_mcm(1.1).unwrap();
        let McmBody::Vehicle(v) = &mcm.body else {
            panic!("expected vehicle container")
        };
        assert!(v.advice_responses.is_empty());
        let speed = cms_to_mps(v.planned_trajectory[0].speed_cm_s);
        assert_abs_diff_eq!(speed, 16.667, epsilon = 0.01);
    }

    #[test]
    fn driver_takeover_hook_skips_the_maneuver() {
        let mut cfg = ScenarioConfig::default();
        cfg.scheme = Scheme::Denm;
        let occ = EmergencyLaneOccupancy::from_windows(&cfg, &[5]).unwrap();
        let mut cav_cfg = CavConfig::default();
        cav_cfg.driver_takes_over = true;
        let mut agent = CavAgent::new(1000.0, CalibrationProfile::default(), cfg, cav_cfg);
        agent.on_denm(500.0, 0.0);
        let mut now = 0.0;
        while agent.state.x > 300.0 {
            agent.step(now, 0.1, &occ);
            now += 0.1;
        }
        // Past the trigger and the deadline, yet still driving at speed.
        assert!(agent.state.toc_x.is_some());
        assert_eq!(agent.state.mode, Mode::Automated);
        assert_abs_diff_eq!(agent.state.v, agent.profile.v_drive, epsilon = 1e-9);
    }
}
