//! Deterministic simulator and analysis toolkit for infrastructure-assisted
//! transition of control near roadworks.
//!
//! An automated vehicle approaches a roadworks zone on a highway whose
//! emergency lane is mostly blocked by equipment, with a few free windows
//! left as safe spots. Automation must end before the zone. The toolkit
//! models the two ways to get there:
//!
//! * **Notification only** ([`Scheme::Denm`]): a roadside unit broadcasts a
//!   hazard notification; the vehicle requests a take-over at the
//!   notification's relevance distance and, if the driver does not respond,
//!   performs a minimum-risk maneuver, hunting for a free spot with its own
//!   forward sensor.
//! * **Coordination** ([`Scheme::Mcm`]): the roadside unit tracks the
//!   vehicle, assigns it a concrete safe spot, and advises where to hand
//!   over control, so the maneuver ends on the emergency lane instead of
//!   blocking traffic.
//!
//! The crate provides the wire codec for the three message types involved,
//! the kinematic vehicle model, both agents, a deterministic tick engine
//! with replayable randomness, closed-form take-over position
//! distributions, and exporters for the resulting tables.
//!
//! # Example
//!
//! ```
//! use tocsim_core::{
//!     BatchMode, CalibrationProfile, Engine, EngineOptions, Outcome, ScenarioConfig,
//! };
//!
//! let engine = Engine::new(
//!     ScenarioConfig::default(),
//!     CalibrationProfile::default(),
//!     EngineOptions::default(),
//! )
//! .unwrap();
//! // One run per admissible safe-spot layout.
//! let results = engine.batch(BatchMode::Enumerate, 42).unwrap();
//! assert_eq!(results.len(), 18);
//! assert!(results.iter().any(|r| r.outcome == Outcome::Parked));
//! ```

mod error;

pub mod messages;
pub mod model;
pub mod scenario;

pub mod cav;
pub mod rsu;
pub mod sim;

pub mod analytics;
pub mod export;
pub mod reference;

pub use error::{Error, Result};

pub use messages::{
    decode, encode, Advice, AdviceKind, AdviceResponse, CamMessage, ComplianceStatus,
    DenmMessage, McmBody, McmMessage, Message, StationType, TocTrigger, Waypoint,
    PORT_CAM, PORT_DENM, PORT_MCM,
};
pub use model::{CalibrationProfile, Lane, Mode, SpotRange, VehicleState};
pub use scenario::{
    enumerate_layouts, CavOption, EmergencyLaneOccupancy, Placement, RsuOption, ScenarioConfig,
    Scheme, SearchBudget,
};

pub use cav::{CavAgent, CavConfig, SensorView};
pub use rsu::{min_dist_to_safespot, toc_distance_overhead, RsuAgent};
pub use sim::{
    rng_stream, BatchMode, ChannelModel, Engine, EngineOptions, Outcome, RunResult, SeedPurpose,
    TraceEvent,
};

pub use analytics::{
    aggregate, empirical_atoms, l1_distance, pdf_denm, pdf_distr_toc, pdf_min_dmrm,
    AnalyticalPdf, KpiSummary, PdfAtom, PdfBand, TocHistogram,
};
