//! V2X message set and its deterministic wire codec.
//!
//! Three message families are exchanged between the roadside unit and the
//! vehicle, distinguished by their transport destination port:
//!
//! * [`CamMessage`] (port 2002) — periodic position/dynamics beacon,
//! * [`DenmMessage`] (port 2001) — hazard notification with a relevance range,
//! * [`McmMessage`] (port 2010) — maneuver coordination, carrying either a
//!   vehicle container (dynamics, trajectories, advice responses) or a
//!   roadside container (per-target advice lists).
//!
//! The codec is deliberately simple and self-contained rather than a full
//! ASN.1 encoder: big-endian fixed-width integers, a fixed field order per
//! message, a 2-byte port prefix, and 1-byte element counts in front of
//! lists. Distances travel as millimeters (`u32`), speeds as cm/s (`u16`),
//! accelerations as mm/s² (`i16`) and times as milliseconds (`u64`), which
//! keeps every round trip bit-exact. Structs store those integer wire units
//! natively; meter-based accessors convert at the boundary.
//!
//! Every invariant is enforced in both directions: [`encode`] refuses to
//! build a frame that violates one, and [`decode`] rejects any frame that
//! does — including truncated input and trailing bytes.

use std::io::Cursor;

use byteorder::{BigEndian, ReadBytesExt, WriteBytesExt};
use serde::Serialize;

use crate::error::{Error, Result};

/// Destination port of decentralized environmental notifications.
pub const PORT_DENM: u16 = 2001;
/// Destination port of cooperative awareness beacons.
pub const PORT_CAM: u16 = 2002;
/// Destination port of maneuver coordination messages.
pub const PORT_MCM: u16 = 2010;

/// Largest element count a wire list can carry (1-byte length prefix).
pub const MAX_LIST_LEN: usize = u8::MAX as usize;

// ---------------------------------------------------------------------------
// Unit conversions between SI floats and integer wire units.
// ---------------------------------------------------------------------------

/// Meters to wire millimeters, rounded and saturated to the `u32` range.
pub fn m_to_mm(x: f64) -> u32 {
    (x * 1000.0).round().clamp(0.0, u32::MAX as f64) as u32
}

/// Wire millimeters back to meters.
pub fn mm_to_m(mm: u32) -> f64 {
    mm as f64 / 1000.0
}

/// Meters per second to wire cm/s, rounded and saturated to the `u16` range.
pub fn mps_to_cms(v: f64) -> u16 {
    (v * 100.0).round().clamp(0.0, u16::MAX as f64) as u16
}

/// Wire cm/s back to m/s.
pub fn cms_to_mps(cms: u16) -> f64 {
    cms as f64 / 100.0
}

/// Meters per second squared to wire mm/s², rounded and saturated.
pub fn mps2_to_mms2(a: f64) -> i16 {
    (a * 1000.0).round().clamp(i16::MIN as f64, i16::MAX as f64) as i16
}

/// Wire mm/s² back to m/s².
pub fn mms2_to_mps2(mms2: i16) -> f64 {
    mms2 as f64 / 1000.0
}

/// Seconds to wire milliseconds (non-negative input expected).
pub fn s_to_ms(t: f64) -> u64 {
    (t * 1000.0).round().max(0.0) as u64
}

// ---------------------------------------------------------------------------
// Message types.
// ---------------------------------------------------------------------------

/// Cooperative awareness beacon: who is where, how fast, at what automation
/// level. Sent by the vehicle at 10 Hz.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CamMessage {
    pub station_id: u32,
    pub gen_time_ms: u64,
    pub position_mm: u32,
    pub speed_cm_s: u16,
    pub accel_mm_s2: i16,
    /// Driving automation level, 0..=5.
    pub sae_level: u8,
}

impl CamMessage {
    /// Builds a beacon from SI units, quantizing to wire resolution.
    pub fn from_si(
        station_id: u32,
        now_s: f64,
        position_m: f64,
        speed_mps: f64,
        accel_mps2: f64,
        sae_level: u8,
    ) -> Self {
        CamMessage {
            station_id,
            gen_time_ms: s_to_ms(now_s),
            position_mm: m_to_mm(position_m),
            speed_cm_s: mps_to_cms(speed_mps),
            accel_mm_s2: mps2_to_mms2(accel_mps2),
            sae_level,
        }
    }

    pub fn position_m(&self) -> f64 {
        mm_to_m(self.position_mm)
    }

    pub fn speed_mps(&self) -> f64 {
        cms_to_mps(self.speed_cm_s)
    }
}

/// Hazard category carried by a notification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EventType {
    Roadworks,
}

impl EventType {
    fn to_wire(self) -> u8 {
        match self {
            EventType::Roadworks => 0,
        }
    }

    fn from_wire(tag: u8) -> Result<Self> {
        match tag {
            0 => Ok(EventType::Roadworks),
            other => Err(Error::MalformedPayload(format!(
                "unknown event type {other}"
            ))),
        }
    }
}

/// Decentralized environmental notification: a static hazard at a position,
/// relevant from a given distance upstream. Sent by the roadside unit at 1 Hz.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DenmMessage {
    pub station_id: u32,
    pub event_type: EventType,
    /// Hazard position, measured like all positions as distance to the zone
    /// entry (the hazard itself sits at 0).
    pub event_position_mm: u32,
    /// Identifier of the blocked lane (0 = driving lane).
    pub affected_lane: u8,
    /// Upstream distance from the hazard within which the notification is
    /// relevant. Strictly positive.
    pub relevance_distance_mm: u32,
}

impl DenmMessage {
    pub fn relevance_distance_m(&self) -> f64 {
        mm_to_m(self.relevance_distance_mm)
    }

    pub fn event_position_m(&self) -> f64 {
        mm_to_m(self.event_position_mm)
    }
}

/// Kind of station that produced a maneuver coordination message.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StationType {
    Vehicle,
    Rsu,
}

/// One trajectory sample: longitudinal position and planned speed there.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Waypoint {
    pub position_mm: u32,
    pub speed_cm_s: u16,
}

/// Compliance state a vehicle reports for one received advice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ComplianceStatus {
    /// Advice stored; execution not started yet.
    ReceivedWillTry,
    /// The vehicle is executing the advised maneuver.
    Following,
    /// The vehicle will not execute the advice.
    Rejected,
}

impl ComplianceStatus {
    fn to_wire(self) -> u8 {
        match self {
            ComplianceStatus::ReceivedWillTry => 0,
            ComplianceStatus::Following => 1,
            ComplianceStatus::Rejected => 2,
        }
    }

    fn from_wire(tag: u8) -> Result<Self> {
        match tag {
            0 => Ok(ComplianceStatus::ReceivedWillTry),
            1 => Ok(ComplianceStatus::Following),
            2 => Ok(ComplianceStatus::Rejected),
            other => Err(Error::MalformedPayload(format!(
                "unknown compliance status {other}"
            ))),
        }
    }
}

/// A vehicle's answer to one advice, keyed by the advice identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct AdviceResponse {
    pub advice_id: u32,
    pub status: ComplianceStatus,
}

/// Condition under which an advised transition of control must trigger.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TocTrigger {
    /// Trigger while the vehicle is inside `[near, far]` (positions in mm).
    DistanceRange { far_mm: u32, near_mm: u32 },
    /// Trigger inside a wall-clock window (ms).
    TimeWindow { start_ms: u64, end_ms: u64 },
}

/// Advice payload. Only the two implemented kinds can be constructed; the
/// reserved wire tags (2 = gap, 3 = lane change, 4 = speed) have no variant
/// here and are rejected by the decoder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AdviceKind {
    /// Hand control back to the driver once the trigger condition holds.
    TransitionOfControl {
        /// Automation level to transition down to.
        target_level: u8,
        trigger: TocTrigger,
    },
    /// Park on the emergency lane inside `[near, far]` (positions in mm).
    SafeSpot { far_mm: u32, near_mm: u32 },
}

const TAG_ADVICE_TOC: u8 = 0;
const TAG_ADVICE_SAFE_SPOT: u8 = 1;
const TAG_TRIGGER_DISTANCE: u8 = 0;
const TAG_TRIGGER_TIME: u8 = 1;

/// One advice with its roadside-assigned identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Advice {
    pub advice_id: u32,
    pub kind: AdviceKind,
}

/// Vehicle-side maneuver container: current dynamics, the short-horizon
/// planned trajectory, an optional desired trajectory, and responses to
/// advices received so far.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VehicleManeuverContainer {
    pub position_mm: u32,
    pub speed_cm_s: u16,
    pub accel_mm_s2: i16,
    /// Non-empty; positions strictly decreasing toward the zone.
    pub planned_trajectory: Vec<Waypoint>,
    /// Optional alternative the vehicle would prefer; same shape rules.
    pub desired_trajectory: Option<Vec<Waypoint>>,
    pub advice_responses: Vec<AdviceResponse>,
}

/// Roadside maneuver container: advice lists grouped per target station.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RsuSuggestedManeuverContainer {
    pub entries: Vec<AdviceEntry>,
}

/// Advices directed at one target station.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AdviceEntry {
    pub target_station_id: u32,
    pub advices: Vec<Advice>,
}

/// Body of a maneuver coordination message.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum McmBody {
    Vehicle(VehicleManeuverContainer),
    Rsu(RsuSuggestedManeuverContainer),
}

/// Maneuver coordination message. Sent by the vehicle at 1 Hz and by the
/// roadside unit whenever it has unacknowledged advices outstanding.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct McmMessage {
    pub station_id: u32,
    pub gen_time_ms: u64,
    pub body: McmBody,
}

impl McmMessage {
    /// Station type, derived from which container the body carries.
    pub fn station_type(&self) -> StationType {
        match self.body {
            McmBody::Vehicle(_) => StationType::Vehicle,
            McmBody::Rsu(_) => StationType::Rsu,
        }
    }
}

/// Any message of the set, as it travels over the simulated channel.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Message {
    Cam(CamMessage),
    Denm(DenmMessage),
    Mcm(McmMessage),
}

impl Message {
    /// Destination port selecting the message family.
    pub fn port(&self) -> u16 {
        match self {
            Message::Denm(_) => PORT_DENM,
            Message::Cam(_) => PORT_CAM,
            Message::Mcm(_) => PORT_MCM,
        }
    }

    /// Identifier of the originating station.
    pub fn station_id(&self) -> u32 {
        match self {
            Message::Cam(m) => m.station_id,
            Message::Denm(m) => m.station_id,
            Message::Mcm(m) => m.station_id,
        }
    }
}

// ---------------------------------------------------------------------------
// Invariant checks, shared by encoder and decoder.
// ---------------------------------------------------------------------------

fn check_list_len(field: &'static str, len: usize) -> Result<()> {
    if len > MAX_LIST_LEN {
        return Err(Error::Encode {
            field,
            reason: format!("{len} elements exceed the 1-byte count limit"),
        });
    }
    Ok(())
}

fn check_cam(msg: &CamMessage) -> Result<()> {
    if msg.sae_level > 5 {
        return Err(Error::Encode {
            field: "sae_level",
            reason: format!("{} is outside 0..=5", msg.sae_level),
        });
    }
    Ok(())
}

fn check_denm(msg: &DenmMessage) -> Result<()> {
    if msg.relevance_distance_mm == 0 {
        return Err(Error::Encode {
            field: "relevance_distance",
            reason: "must be strictly positive".into(),
        });
    }
    Ok(())
}

fn check_trajectory(field: &'static str, traj: &[Waypoint]) -> Result<()> {
    check_list_len(field, traj.len())?;
    if traj.is_empty() {
        return Err(Error::Encode {
            field,
            reason: "must contain at least one waypoint".into(),
        });
    }
    for pair in traj.windows(2) {
        if pair[1].position_mm >= pair[0].position_mm {
            return Err(Error::Encode {
                field,
                reason: format!(
                    "waypoint positions must strictly decrease ({} then {})",
                    pair[0].position_mm, pair[1].position_mm
                ),
            });
        }
    }
    Ok(())
}

fn check_advice(advice: &Advice) -> Result<()> {
    match advice.kind {
        AdviceKind::TransitionOfControl {
            target_level,
            trigger,
        } => {
            if target_level > 5 {
                return Err(Error::Encode {
                    field: "target_level",
                    reason: format!("{target_level} is outside 0..=5"),
                });
            }
            match trigger {
                TocTrigger::DistanceRange { far_mm, near_mm } => {
                    if far_mm < near_mm {
                        return Err(Error::Encode {
                            field: "toc_trigger",
                            reason: format!("far {far_mm} below near {near_mm}"),
                        });
                    }
                }
                TocTrigger::TimeWindow { start_ms, end_ms } => {
                    if end_ms < start_ms {
                        return Err(Error::Encode {
                            field: "toc_trigger",
                            reason: format!("window ends ({end_ms}) before it starts ({start_ms})"),
                        });
                    }
                }
            }
        }
        AdviceKind::SafeSpot { far_mm, near_mm } => {
            if far_mm < near_mm {
                return Err(Error::Encode {
                    field: "safe_spot",
                    reason: format!("far {far_mm} below near {near_mm}"),
                });
            }
        }
    }
    Ok(())
}

fn check_mcm(msg: &McmMessage) -> Result<()> {
    match &msg.body {
        McmBody::Vehicle(v) => {
            check_trajectory("planned_trajectory", &v.planned_trajectory)?;
            if let Some(desired) = &v.desired_trajectory {
                check_trajectory("desired_trajectory", desired)?;
            }
            check_list_len("advice_responses", v.advice_responses.len())?;
        }
        McmBody::Rsu(r) => {
            check_list_len("entries", r.entries.len())?;
            for entry in &r.entries {
                check_list_len("advices", entry.advices.len())?;
                let mut toc_seen = false;
                let mut spot_seen = false;
                for advice in &entry.advices {
                    check_advice(advice)?;
                    let seen = match advice.kind {
                        AdviceKind::TransitionOfControl { .. } => &mut toc_seen,
                        AdviceKind::SafeSpot { .. } => &mut spot_seen,
                    };
                    if *seen {
                        return Err(Error::Encode {
                            field: "advices",
                            reason: format!(
                                "more than one advice of the same kind for target {}",
                                entry.target_station_id
                            ),
                        });
                    }
                    *seen = true;
                }
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Encoder.
// ---------------------------------------------------------------------------

/// Serializes a message into its wire frame (port prefix plus body).
///
/// The encoding is deterministic: equal messages produce identical bytes.
/// Invariant violations are refused here rather than producing a frame the
/// decoder would reject.
pub fn encode(msg: &Message) -> Result<Vec<u8>> {
    let mut buf: Vec<u8> = Vec::with_capacity(64);
    buf.write_u16::<BigEndian>(msg.port()).expect("vec write");
    match msg {
        Message::Cam(m) => {
            check_cam(m)?;
            buf.write_u32::<BigEndian>(m.station_id).unwrap();
            buf.write_u64::<BigEndian>(m.gen_time_ms).unwrap();
            buf.write_u32::<BigEndian>(m.position_mm).unwrap();
            buf.write_u16::<BigEndian>(m.speed_cm_s).unwrap();
            buf.write_i16::<BigEndian>(m.accel_mm_s2).unwrap();
            buf.write_u8(m.sae_level).unwrap();
        }
        Message::Denm(m) => {
            check_denm(m)?;
            buf.write_u32::<BigEndian>(m.station_id).unwrap();
            buf.write_u8(m.event_type.to_wire()).unwrap();
            buf.write_u32::<BigEndian>(m.event_position_mm).unwrap();
            buf.write_u8(m.affected_lane).unwrap();
            buf.write_u32::<BigEndian>(m.relevance_distance_mm).unwrap();
        }
        Message::Mcm(m) => {
            check_mcm(m)?;
            buf.write_u32::<BigEndian>(m.station_id).unwrap();
            buf.write_u64::<BigEndian>(m.gen_time_ms).unwrap();
            match &m.body {
                McmBody::Vehicle(v) => {
                    buf.write_u8(0).unwrap();
                    buf.write_u32::<BigEndian>(v.position_mm).unwrap();
                    buf.write_u16::<BigEndian>(v.speed_cm_s).unwrap();
                    buf.write_i16::<BigEndian>(v.accel_mm_s2).unwrap();
                    write_trajectory(&mut buf, &v.planned_trajectory);
                    match &v.desired_trajectory {
                        Some(desired) => {
                            buf.write_u8(1).unwrap();
                            write_trajectory(&mut buf, desired);
                        }
                        None => buf.write_u8(0).unwrap(),
                    }
                    buf.write_u8(v.advice_responses.len() as u8).unwrap();
                    for resp in &v.advice_responses {
                        buf.write_u32::<BigEndian>(resp.advice_id).unwrap();
                        buf.write_u8(resp.status.to_wire()).unwrap();
                    }
                }
                McmBody::Rsu(r) => {
                    buf.write_u8(1).unwrap();
                    buf.write_u8(r.entries.len() as u8).unwrap();
                    for entry in &r.entries {
                        buf.write_u32::<BigEndian>(entry.target_station_id).unwrap();
                        buf.write_u8(entry.advices.len() as u8).unwrap();
                        for advice in &entry.advices {
                            write_advice(&mut buf, advice);
                        }
                    }
                }
            }
        }
    }
    Ok(buf)
}

fn write_trajectory(buf: &mut Vec<u8>, traj: &[Waypoint]) {
    buf.write_u8(traj.len() as u8).unwrap();
    for wp in traj {
        buf.write_u32::<BigEndian>(wp.position_mm).unwrap();
        buf.write_u16::<BigEndian>(wp.speed_cm_s).unwrap();
    }
}

fn write_advice(buf: &mut Vec<u8>, advice: &Advice) {
    buf.write_u32::<BigEndian>(advice.advice_id).unwrap();
    match advice.kind {
        AdviceKind::TransitionOfControl {
            target_level,
            trigger,
        } => {
            buf.write_u8(TAG_ADVICE_TOC).unwrap();
            buf.write_u8(target_level).unwrap();
            match trigger {
                TocTrigger::DistanceRange { far_mm, near_mm } => {
                    buf.write_u8(TAG_TRIGGER_DISTANCE).unwrap();
                    buf.write_u32::<BigEndian>(far_mm).unwrap();
                    buf.write_u32::<BigEndian>(near_mm).unwrap();
                }
                TocTrigger::TimeWindow { start_ms, end_ms } => {
                    buf.write_u8(TAG_TRIGGER_TIME).unwrap();
                    buf.write_u64::<BigEndian>(start_ms).unwrap();
                    buf.write_u64::<BigEndian>(end_ms).unwrap();
                }
            }
        }
        AdviceKind::SafeSpot { far_mm, near_mm } => {
            buf.write_u8(TAG_ADVICE_SAFE_SPOT).unwrap();
            buf.write_u32::<BigEndian>(far_mm).unwrap();
            buf.write_u32::<BigEndian>(near_mm).unwrap();
        }
    }
}

// ---------------------------------------------------------------------------
// Decoder.
// ---------------------------------------------------------------------------

/// Parses a wire frame back into a message.
///
/// Strict by construction: unknown ports, unknown tags, truncated frames,
/// trailing bytes and invariant violations are all rejected. Any byte
/// sequence either decodes to a valid message or returns an error — the
/// decoder never panics.
pub fn decode(bytes: &[u8]) -> Result<Message> {
    let mut cur = Cursor::new(bytes);
    let port = read_u16(&mut cur)?;
    let msg = match port {
        PORT_CAM => Message::Cam(decode_cam(&mut cur)?),
        PORT_DENM => Message::Denm(decode_denm(&mut cur)?),
        PORT_MCM => Message::Mcm(decode_mcm(&mut cur)?),
        other => return Err(Error::UnknownPort(other)),
    };
    if (cur.position() as usize) != bytes.len() {
        return Err(Error::MalformedPayload(format!(
            "{} trailing bytes after message end",
            bytes.len() - cur.position() as usize
        )));
    }
    // The decoder applies the same invariants the encoder enforces, so a
    // decoded message is always re-encodable.
    match &msg {
        Message::Cam(m) => check_cam(m),
        Message::Denm(m) => check_denm(m),
        Message::Mcm(m) => check_mcm(m),
    }
    .map_err(|e| Error::MalformedPayload(e.to_string()))?;
    Ok(msg)
}

fn truncated() -> Error {
    Error::MalformedPayload("frame truncated".into())
}

fn read_u8(cur: &mut Cursor<&[u8]>) -> Result<u8> {
    cur.read_u8().map_err(|_| truncated())
}

fn read_u16(cur: &mut Cursor<&[u8]>) -> Result<u16> {
    cur.read_u16::<BigEndian>().map_err(|_| truncated())
}

fn read_i16(cur: &mut Cursor<&[u8]>) -> Result<i16> {
    cur.read_i16::<BigEndian>().map_err(|_| truncated())
}

fn read_u32(cur: &mut Cursor<&[u8]>) -> Result<u32> {
    cur.read_u32::<BigEndian>().map_err(|_| truncated())
}

fn read_u64(cur: &mut Cursor<&[u8]>) -> Result<u64> {
    cur.read_u64::<BigEndian>().map_err(|_| truncated())
}

fn decode_cam(cur: &mut Cursor<&[u8]>) -> Result<CamMessage> {
    Ok(CamMessage {
        station_id: read_u32(cur)?,
        gen_time_ms: read_u64(cur)?,
        position_mm: read_u32(cur)?,
        speed_cm_s: read_u16(cur)?,
        accel_mm_s2: read_i16(cur)?,
        sae_level: read_u8(cur)?,
    })
}

fn decode_denm(cur: &mut Cursor<&[u8]>) -> Result<DenmMessage> {
    Ok(DenmMessage {
        station_id: read_u32(cur)?,
        event_type: EventType::from_wire(read_u8(cur)?)?,
        event_position_mm: read_u32(cur)?,
        affected_lane: read_u8(cur)?,
        relevance_distance_mm: read_u32(cur)?,
    })
}

fn decode_mcm(cur: &mut Cursor<&[u8]>) -> Result<McmMessage> {
    let station_id = read_u32(cur)?;
    let gen_time_ms = read_u64(cur)?;
    let body = match read_u8(cur)? {
        0 => {
            let position_mm = read_u32(cur)?;
            let speed_cm_s = read_u16(cur)?;
            let accel_mm_s2 = read_i16(cur)?;
            let planned_trajectory = read_trajectory(cur)?;
            let desired_trajectory = match read_u8(cur)? {
                0 => None,
                1 => Some(read_trajectory(cur)?),
                other => {
                    return Err(Error::MalformedPayload(format!(
                        "invalid desired-trajectory flag {other}"
                    )))
                }
            };
            let n_resp = read_u8(cur)? as usize;
            let mut advice_responses = Vec::with_capacity(n_resp);
            for _ in 0..n_resp {
                advice_responses.push(AdviceResponse {
                    advice_id: read_u32(cur)?,
                    status: ComplianceStatus::from_wire(read_u8(cur)?)?,
                });
            }
            McmBody::Vehicle(VehicleManeuverContainer {
                position_mm,
                speed_cm_s,
                accel_mm_s2,
                planned_trajectory,
                desired_trajectory,
                advice_responses,
            })
        }
        1 => {
            let n_entries = read_u8(cur)? as usize;
            let mut entries = Vec::with_capacity(n_entries);
            for _ in 0..n_entries {
                let target_station_id = read_u32(cur)?;
                let n_advices = read_u8(cur)? as usize;
                let mut advices = Vec::with_capacity(n_advices);
                for _ in 0..n_advices {
                    advices.push(read_advice(cur)?);
                }
                entries.push(AdviceEntry {
                    target_station_id,
                    advices,
                });
            }
            McmBody::Rsu(RsuSuggestedManeuverContainer { entries })
        }
        other => {
            return Err(Error::MalformedPayload(format!(
                "unknown station type {other}"
            )))
        }
    };
    Ok(McmMessage {
        station_id,
        gen_time_ms,
        body,
    })
}

fn read_trajectory(cur: &mut Cursor<&[u8]>) -> Result<Vec<Waypoint>> {
    let n = read_u8(cur)? as usize;
    let mut traj = Vec::with_capacity(n);
    for _ in 0..n {
        traj.push(Waypoint {
            position_mm: read_u32(cur)?,
            speed_cm_s: read_u16(cur)?,
        });
    }
    Ok(traj)
}

fn read_advice(cur: &mut Cursor<&[u8]>) -> Result<Advice> {
    let advice_id = read_u32(cur)?;
    let kind = match read_u8(cur)? {
        TAG_ADVICE_TOC => {
            let target_level = read_u8(cur)?;
            let trigger = match read_u8(cur)? {
                TAG_TRIGGER_DISTANCE => TocTrigger::DistanceRange {
                    far_mm: read_u32(cur)?,
                    near_mm: read_u32(cur)?,
                },
                TAG_TRIGGER_TIME => TocTrigger::TimeWindow {
                    start_ms: read_u64(cur)?,
                    end_ms: read_u64(cur)?,
                },
                other => {
                    return Err(Error::MalformedPayload(format!(
                        "unknown trigger form {other}"
                    )))
                }
            };
            AdviceKind::TransitionOfControl {
                target_level,
                trigger,
            }
        }
        TAG_ADVICE_SAFE_SPOT => AdviceKind::SafeSpot {
            far_mm: read_u32(cur)?,
            near_mm: read_u32(cur)?,
        },
        // 2 = gap, 3 = lane change, 4 = speed: reserved, not implemented.
        reserved @ 2..=4 => return Err(Error::UnsupportedAdvice(reserved)),
        other => {
            return Err(Error::MalformedPayload(format!(
                "unknown advice kind {other}"
            )))
        }
    };
    // Skip any deliberate sanity check here: decode() re-validates the full
    // message, which covers range ordering for both advice kinds.
    Ok(Advice { advice_id, kind })
}

// ---------------------------------------------------------------------------
