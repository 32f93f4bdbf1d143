//! Simulation engine: wires one vehicle and one roadside unit together
//! over a lossy message bus and drives the tick loop to a terminal state.
//!
//! Reproducibility contract: every random decision draws from a
//! [`ChaCha8Rng`] stream derived from `(master seed, run index, purpose)`,
//! so any single run can be replayed in isolation and batch results do not
//! depend on thread scheduling. Runs inside a batch are independent and
//! execute in parallel; results keep their submission order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::Value;

use crate::cav::{CavAgent, CavConfig};
use crate::error::{Error, Result};
use crate::messages::Message;
use crate::model::{CalibrationProfile, Mode};
use crate::rsu::RsuAgent;
use crate::scenario::{
    enumerate_layouts, EmergencyLaneOccupancy, RsuOption, ScenarioConfig, Scheme,
};

/// Propagation model of the V2X channel. The default is an ideal channel:
/// infinite range, no losses, and (by construction of the bus) a one-tick
/// delivery latency.
#[derive(Debug, Clone)]
pub struct ChannelModel {
    /// Maximum sender-receiver distance for a frame to arrive (m).
    pub comm_range: Option<f64>,
    /// Independent per-frame loss probability.
    pub p_loss: f64,
}

impl Default for ChannelModel {
    fn default() -> Self {
        ChannelModel {
            comm_range: None,
            p_loss: 0.0,
        }
    }
}

/// Engine knobs that are not part of the scenario definition.
#[derive(Debug, Clone)]
pub struct EngineOptions {
    pub channel: ChannelModel,
    /// Record per-run event traces (off for large batches).
    pub capture_trace: bool,
    /// Repetitions per layout when enumerating with the randomized
    /// take-over policy, which is the only stochastic element of a run.
    pub distr_replicates: usize,
    /// Multiplier on the generous worst-case run time before a run is
    /// declared stuck.
    pub watchdog_factor: f64,
    pub cav: CavConfig,
    pub rsu_station_id: u32,
    /// Spawn this far above the largest take-over range so every advice
    /// arrives while it is still ahead of the vehicle (m).
    pub spawn_margin: f64,
}

impl Default for EngineOptions {
    fn default() -> Self {
        EngineOptions {
            channel: ChannelModel::default(),
            capture_trace: false,
            distr_replicates: 1000,
            watchdog_factor: 10.0,
            cav: CavConfig::default(),
            rsu_station_id: 1,
            spawn_margin: 100.0,
        }
    }
}

/// How a run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    /// The vehicle parked on the emergency lane.
    Parked,
    /// The minimum-risk maneuver ended in a standstill on the driving lane.
    StoppedOnLane,
    /// Control was never transferred: the vehicle crossed the zone entry
    /// still in automation (lost notifications, or the driver resumed).
    NoToc,
}

impl Outcome {
    pub fn label(&self) -> &'static str {
        match self {
            Outcome::Parked => "parked",
            Outcome::StoppedOnLane => "stopped_on_lane",
            Outcome::NoToc => "no_toc",
        }
    }
}

/// One timestamped entry of a run trace.
#[derive(Debug, Clone)]
pub struct TraceEvent {
    pub t: f64,
    pub entity: &'static str,
    pub event: &'static str,
    pub payload: Value,
}

/// Everything measured on a single run.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub scheme: Scheme,
    /// Human-readable policy variant, e.g. `fifty` or `min_dmrm/rsu_advice`.
    pub variant: String,
    pub layout_id: usize,
    pub layout: Vec<usize>,
    pub seed: u64,
    /// Position where control transfer was requested, if it ever was.
    pub toc_x: Option<f64>,
    pub outcome: Outcome,
    /// Standstill position for runs that ended on the driving lane.
    pub stop_x: Option<f64>,
    /// Meters crawled at maneuver speed on the driving lane.
    pub dist_at_mrm_speed: f64,
    pub parked_window: Option<usize>,
    pub sim_time: f64,
    pub trace: Vec<TraceEvent>,
}

/// What a random stream is used for. Separating purposes keeps draws for
/// one concern from perturbing another when parameters change.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeedPurpose {
    /// Deriving per-run seeds inside a batch.
    RunSeeds,
    /// The roadside unit's take-over scheduling draws.
    TocSchedule,
    /// Layout selection in Monte Carlo batches.
    Layout,
    /// Channel loss draws.
    Channel,
}

/// Deterministic stream for `(master, run, purpose)`.
pub fn rng_stream(master: u64, run: u64, purpose: SeedPurpose) -> ChaCha8Rng {
    let mut seed = [0u8; 32];
    seed[0..8].copy_from_slice(&master.to_le_bytes());
    seed[8..16].copy_from_slice(&run.to_le_bytes());
    seed[16..24].copy_from_slice(&(purpose as u64).to_le_bytes());
    ChaCha8Rng::from_seed(seed)
}

/// Batch composition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BatchMode {
    /// Every admissible layout once (or `distr_replicates` times when the
    /// take-over position is randomized).
    Enumerate,
    /// `runs` independent runs, each on a layout drawn uniformly.
    MonteCarlo { runs: usize },
}

/// One vehicle, one roadside unit, one scenario.
#[derive(Debug)]
pub struct Engine {
    pub scenario: ScenarioConfig,
    pub profile: CalibrationProfile,
    pub opts: EngineOptions,
}

/// Longitudinal position of the roadside unit: at the zone entry.
const RSU_X: f64 = 0.0;

impl Engine {
    pub fn new(
        scenario: ScenarioConfig,
        profile: CalibrationProfile,
        opts: EngineOptions,
    ) -> Result<Self> {
        scenario.validate()?;
        if profile.min_park_clearance > scenario.spot_length() + 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "required parking clearance {} m exceeds the {} m spot length; \
                 no isolated spot could ever qualify",
                profile.min_park_clearance,
                scenario.spot_length()
            )));
        }
        Ok(Engine {
            scenario,
            profile,
            opts,
        })
    }

    /// Simulates a single run on the given layout to its terminal state.
    pub fn run(&self, layout: &[usize], layout_id: usize, seed: u64) -> Result<RunResult> {
        let occ = EmergencyLaneOccupancy::from_windows(&self.scenario, layout)?;
        let dt = self.scenario.timestep;
        let spawn_x = self.scenario.max_toc_range + self.opts.spawn_margin;

        let schedule_rng = rng_stream(seed, 0, SeedPurpose::TocSchedule);
        let mut channel_rng = rng_stream(seed, 0, SeedPurpose::Channel);

        let mut rsu = RsuAgent::new(
            self.opts.rsu_station_id,
            self.scenario.clone(),
            self.profile,
            occ.clone(),
            schedule_rng,
        );
        let mut cav_cfg = self.opts.cav.clone();
        cav_cfg.cam_period = cav_cfg.cam_period.max(dt);
        let mut cav = CavAgent::new(spawn_x, self.profile, self.scenario.clone(), cav_cfg);

        // Frames put on the air last tick, delivered this tick.
        let mut in_flight_to_cav: Vec<Message> = Vec::new();
        let mut in_flight_to_rsu: Vec<Message> = Vec::new();
        let mut trace: Vec<TraceEvent> = Vec::new();

        // Crawling the whole approach plus the driver lead time bounds any
        // legitimate run; the factor leaves room for odd calibrations.
        let worst_case = spawn_x / self.profile.v_mrm + self.profile.t_tor + 60.0;
        let limit = self.opts.watchdog_factor * worst_case;
        let max_ticks = (limit / dt).ceil() as u64;

        for tick in 0..=max_ticks {
            let now = tick as f64 * dt;

            // 1. Deliver what survived the channel.
            for msg in in_flight_to_rsu.drain(..) {
                if self.channel_passes(cav.state.x, RSU_X, &mut channel_rng) {
                    rsu.handle(&msg, now)?;
                }
            }
            for msg in in_flight_to_cav.drain(..) {
                if self.channel_passes(cav.state.x, RSU_X, &mut channel_rng) {
                    cav.handle(&msg, now);
                }
            }

            // 2. Roadside unit acts and emits.
            in_flight_to_cav.extend(rsu.tick(now));

            // 3. Vehicle emits, then moves through the tick.
            in_flight_to_rsu.extend(cav.collect_emissions(now));
            cav.step(now, dt, &occ);

            if self.opts.capture_trace {
                for (t, event, payload) in rsu.take_events() {
                    trace.push(TraceEvent {
                        t,
                        entity: "rsu",
                        event,
                        payload,
                    });
                }
                for (t, event, payload) in cav.take_events() {
                    trace.push(TraceEvent {
                        t,
                        entity: "cav",
                        event,
                        payload,
                    });
                }
            }

            let done = cav.state.mode.is_terminal()
                || (cav.state.mode == Mode::Automated && cav.state.x <= 0.0);
            if done {
                let outcome = match cav.state.mode {
                    Mode::ParkedInSafeSpot => Outcome::Parked,
                    Mode::StoppedOnDrivingLane => Outcome::StoppedOnLane,
                    _ => Outcome::NoToc,
                };
                return Ok(RunResult {
                    scheme: self.scenario.scheme,
                    variant: self.scenario.variant_label(),
                    layout_id,
                    layout: layout.to_vec(),
                    seed,
                    toc_x: cav.state.toc_x,
                    outcome,
                    stop_x: cav.stop_x,
                    dist_at_mrm_speed: cav.dist_at_mrm_speed,
                    parked_window: cav.parked_window,
                    sim_time: now,
                    trace,
                });
            }
        }
        Err(Error::StuckRun(limit))
    }

    fn channel_passes(&self, cav_x: f64, rsu_x: f64, rng: &mut ChaCha8Rng) -> bool {
        if let Some(range) = self.opts.channel.comm_range {
            if (cav_x - rsu_x).abs() > range {
                return false;
            }
        }
        // Draw only on lossy channels so the ideal default stays
        // insensitive to how many frames fly.
        if self.opts.channel.p_loss > 0.0 {
            if rng.gen::<f64>() < self.opts.channel.p_loss {
                return false;
            }
        }
        true
    }

    /// Runs a batch and returns results in deterministic submission order.
    pub fn batch(&self, mode: BatchMode, master_seed: u64) -> Result<Vec<RunResult>> {
        let layouts = enumerate_layouts(&self.scenario)?;
        let mut seeder = rng_stream(master_seed, 0, SeedPurpose::RunSeeds);

        // (layout index, per-run seed) jobs, fixed before going parallel.
        let jobs: Vec<(usize, u64)> = match mode {
            BatchMode::Enumerate => {
                let reps = if self.scenario.scheme == Scheme::Mcm
                    && self.scenario.mcm_rsu_option == RsuOption::DistrToc
                {
                    self.opts.distr_replicates.max(1)
                } else {
                    1
                };
                (0..layouts.len())
                    .flat_map(|l| std::iter::repeat(l).take(reps))
                    .map(|l| (l, seeder.gen::<u64>()))
                    .collect()
            }
            BatchMode::MonteCarlo { runs } => (0..runs as u64)
                .map(|run| {
                    let mut layout_rng = rng_stream(master_seed, run, SeedPurpose::Layout);
                    let l = layout_rng.gen_range(0..layouts.len());
                    (l, seeder.gen::<u64>())
                })
                .collect(),
        };

        jobs.into_par_iter()
            .map(|(layout_id, seed)| self.run(&layouts[layout_id], layout_id, seed))
            .collect()
    }
}
