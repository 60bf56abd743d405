//! Fixed-step simulation engine.

use serde::{Deserialize, Serialize};

use super::config::{Multiplexing, SimConfig};
use crate::error::Result;
use crate::geometry::{los_blocked, BodyCylinder, Constellation, Point3, Room};
use crate::linkbudget::LinkModel;
use crate::mobility::{init_users, Crowd, UserState};

/// Alignment countdowns below this fraction of a step count as finished.
const ALIGN_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Link {
    pub ap: usize,
    /// Alignment time still to run before data flows, s.
    pub align_remaining_s: f64,
}

impl Link {
    pub fn aligned(&self) -> bool {
        self.align_remaining_s <= 0.0
    }
}

/// Serving AP and alignment state per user.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct LinkAssignment {
    pub links: Vec<Option<Link>>,
}

impl LinkAssignment {
    pub fn serving(&self, user: usize) -> Option<usize> {
        self.links[user].map(|l| l.ap)
    }

    pub fn users_of(&self, ap: usize) -> usize {
        self.links.iter().flatten().filter(|l| l.ap == ap).count()
    }
}

/// Device position of a user.
pub fn device_point(user: &UserState, device_height: f64) -> Point3 {
    Point3::new(user.position[0], user.position[1], device_height)
}

/// Strongest AP whose view sector holds the receiver and, with blockers,
/// whose line of sight is clear.
fn best_ap(
    device: &Point3,
    constellation: &Constellation,
    model: &LinkModel,
    blockers: Option<&[BodyCylinder]>,
    exclude: Option<usize>,
) -> Option<usize> {
    let mut order: Vec<(usize, f64)> = constellation
        .nodes
        .iter()
        .enumerate()
        .filter(|(_, n)| n.sees(device.x, device.y))
        .map(|(j, n)| (j, model.received_power(n.position.distance(device))))
        .collect();
    // Highest power first; stable sort keeps the lower index on ties.
    order.sort_by(|a, b| b.1.total_cmp(&a.1));
    let clear = |j: usize| blockers.is_none_or(|b| !los_blocked(&constellation.nodes[j].position, device, b, exclude));
    order.into_iter().map(|(j, _)| j).find(|&j| clear(j))
}

/// Assigns every user to the AP with the highest received power among those
/// whose view sector contains the user and, when `blockers` is given, whose
/// line of sight clears every other user's body. Ties go to the lower AP id.
///
/// `blockers[u]` must be user `u`'s own body; it is skipped for that user.
/// Fresh links carry the serving AP's full alignment time.
pub fn associate(
    users: &[UserState],
    constellation: &Constellation,
    model: &LinkModel,
    device_height: f64,
    blockers: Option<&[BodyCylinder]>,
) -> LinkAssignment {
    let links = users
        .iter()
        .enumerate()
        .map(|(u, user)| {
            let device = device_point(user, device_height);
            best_ap(&device, constellation, model, blockers, Some(u)).map(|ap| Link {
                ap,
                align_remaining_s: constellation.nodes[ap].alignment_time_s,
            })
        })
        .collect();
    LinkAssignment { links }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Handoff,
    BlockageStart,
    BlockageEnd,
    AlignmentDone,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::Handoff => "handoff",
            EventKind::BlockageStart => "blockage_start",
            EventKind::BlockageEnd => "blockage_end",
            EventKind::AlignmentDone => "alignment_done",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub t: f64,
    pub kind: EventKind,
    pub user: usize,
    pub ap: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub t: f64,
    pub user: usize,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApMetrics {
    pub id: usize,
    pub idle_fraction: f64,
    pub mean_users: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserMetrics {
    pub id: usize,
    pub demand_bps: f64,
    pub coverage: f64,
    pub mean_throughput_bps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub placement_type: String,
    pub n_aps: usize,
    pub effective_height_m: f64,
    pub seed: u64,
    pub blockage_enabled: bool,
    pub p_o_w: f64,
    pub per_ap_power_w: f64,
    pub h_c_m: f64,
    pub steps: u64,
    /// Fraction of (user, step) pairs whose delivered rate met the user's demand.
    pub user_coverage: f64,
    /// Delivered rate averaged over users and steps, bit/s.
    pub mean_throughput_bps: f64,
    /// Fraction of steps an AP had no associated user, averaged over APs.
    pub ap_idle_fraction: f64,
    pub handoff_count: u64,
    pub per_ap: Vec<ApMetrics>,
    pub per_user: Vec<UserMetrics>,
}

/// What happened in one step.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StepOutcome {
    pub t: f64,
    pub delivered_bps: Vec<f64>,
    pub events: Vec<Event>,
}

pub struct Simulation {
    config: SimConfig,
    room: Room,
    model: LinkModel,
    constellation: Constellation,
    crowd: Crowd,
    assignment: LinkAssignment,
    shadowed: Vec<bool>,
    step_index: u64,
    realign_every: Option<u64>,
    covered_steps: Vec<u64>,
    delivered_sum: Vec<f64>,
    busy_steps: Vec<u64>,
    user_load_sum: Vec<u64>,
    handoffs: u64,
    keep_events: bool,
    events: Vec<Event>,
    keep_trajectory: bool,
    trajectory: Vec<TrajectoryPoint>,
}

impl Simulation {
    pub fn new(config: SimConfig) -> Result<Self> {
        config.validate()?;
        let room = config.effective_room();
        let crowd = init_users(&room, config.n_users, config.seed, &config.mobility);
        Self::with_crowd(config, crowd)
    }

    /// Runs with caller-provided users instead of the seeded population.
    pub fn with_users(config: SimConfig, users: Vec<UserState>) -> Result<Self> {
        let crowd = Crowd::from_users(users, config.seed);
        Self::with_crowd(config, crowd)
    }

    fn with_crowd(config: SimConfig, crowd: Crowd) -> Result<Self> {
        config.validate()?;
        let room = config.effective_room();
        let model = config.link_model()?;
        let constellation = config.constellation()?;
        let n_users = crowd.users.len();
        let n_aps = constellation.len();
        let realign_every = config.realign_interval_s.map(|p| (p / config.dt_s).round().max(1.0) as u64);
        Ok(Self {
            room,
            model,
            constellation,
            crowd,
            assignment: LinkAssignment { links: vec![None; n_users] },
            shadowed: vec![false; n_users],
            step_index: 0,
            realign_every,
            covered_steps: vec![0; n_users],
            delivered_sum: vec![0.0; n_users],
            busy_steps: vec![0; n_aps],
            user_load_sum: vec![0; n_aps],
            handoffs: 0,
            keep_events: false,
            events: Vec::new(),
            keep_trajectory: false,
            trajectory: Vec::new(),
            config,
        })
    }

    pub fn record_events(mut self, on: bool) -> Self {
        self.keep_events = on;
        self
    }

    pub fn record_trajectory(mut self, on: bool) -> Self {
        self.keep_trajectory = on;
        self
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn constellation(&self) -> &Constellation {
        &self.constellation
    }

    pub fn link_model(&self) -> &LinkModel {
        &self.model
    }

    pub fn users(&self) -> &[UserState] {
        &self.crowd.users
    }

    pub fn assignment(&self) -> &LinkAssignment {
        &self.assignment
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn trajectory(&self) -> &[TrajectoryPoint] {
        &self.trajectory
    }

    /// Simulation time at the end of the last completed step.
    pub fn time(&self) -> f64 {
        self.step_index as f64 * self.config.dt_s
    }

    /// Moves users, re-associates, advances alignment and accounts delivered
    /// rates for one step of `dt`.
    pub fn step(&mut self) -> StepOutcome {
        let dt = self.config.dt_s;
        let device_height = self.config.mobility.device_height;
        self.crowd.step(&self.room, dt, &self.config.mobility);
        self.step_index += 1;
        let t = self.time();
        let mut events = Vec::new();

        let bodies = self.config.blockage_enabled.then(|| self.crowd.bodies());
        let n_users = self.crowd.users.len();
        let force_realign = self.realign_every.is_some_and(|k| self.step_index > 1 && (self.step_index - 1).is_multiple_of(k));

        for u in 0..n_users {
            let device = device_point(&self.crowd.users[u], device_height);
            let best = best_ap(&device, &self.constellation, &self.model, None, Some(u));
            let prev = self.assignment.links[u];
            self.assignment.links[u] = match (prev, best) {
                (Some(link), Some(ap)) if link.ap == ap => {
                    if force_realign && link.aligned() {
                        Some(Link { ap, align_remaining_s: self.constellation.nodes[ap].alignment_time_s })
                    } else {
                        Some(link)
                    }
                }
                (prev, Some(ap)) => {
                    if prev.is_some() {
                        self.handoffs += 1;
                        events.push(Event { t, kind: EventKind::Handoff, user: u, ap: Some(ap) });
                    }
                    Some(Link { ap, align_remaining_s: self.constellation.nodes[ap].alignment_time_s })
                }
                (_, None) => None,
            };
            let blocked = match (&bodies, self.assignment.links[u]) {
                (Some(b), Some(link)) => los_blocked(&self.constellation.nodes[link.ap].position, &device, b, Some(u)),
                _ => false,
            };
            if blocked != self.shadowed[u] {
                let kind = if blocked { EventKind::BlockageStart } else { EventKind::BlockageEnd };
                events.push(Event { t, kind, user: u, ap: self.assignment.serving(u) });
                self.shadowed[u] = blocked;
                if let (false, Some(link)) = (blocked, self.assignment.links[u].as_mut()) {
                    link.align_remaining_s = self.constellation.nodes[link.ap].alignment_time_s;
                }
            }
        }

        let n_aps = self.constellation.len();
        let mut load = vec![0usize; n_aps];
        let mut strongest: Vec<Option<(usize, f64)>> = vec![None; n_aps];
        for (u, link) in self.assignment.links.iter().enumerate() {
            if let Some(link) = link {
                load[link.ap] += 1;
                let p = self.model.received_power(self.distance(u, link.ap));
                let better = strongest[link.ap].is_none_or(|(_, best)| p > best);
                if better {
                    strongest[link.ap] = Some((u, p));
                }
            }
        }

        let mut delivered = vec![0.0; n_users];
        for u in 0..n_users {
            let Some(link) = self.assignment.links[u].as_mut() else { continue };
            if self.shadowed[u] {
                continue;
            }
            if !link.aligned() {
                link.align_remaining_s -= dt;
                if link.align_remaining_s <= ALIGN_EPS * dt {
                    link.align_remaining_s = 0.0;
                    events.push(Event { t, kind: EventKind::AlignmentDone, user: u, ap: Some(link.ap) });
                }
                continue;
            }
            let ap = link.ap;
            let rate = self.model.rate_unchecked(self.distance(u, ap));
            delivered[u] = match self.config.multiplexing {
                Multiplexing::TimeShare => rate / load[ap] as f64,
                Multiplexing::StrongestOnly => {
                    if strongest[ap].map(|(w, _)| w) == Some(u) {
                        rate
                    } else {
                        0.0
                    }
                }
            };
        }

        for (u, &d) in delivered.iter().enumerate() {
            self.delivered_sum[u] += d;
            if d >= self.crowd.users[u].demand_bps {
                self.covered_steps[u] += 1;
            }
        }
        for (ap, &k) in load.iter().enumerate() {
            if k > 0 {
                self.busy_steps[ap] += 1;
            }
            self.user_load_sum[ap] += k as u64;
        }
        if self.keep_trajectory {
            self.trajectory.extend(self.crowd.users.iter().map(|user| TrajectoryPoint {
                t,
                user: user.id,
                x: user.position[0],
                y: user.position[1],
            }));
        }
        if self.keep_events {
            self.events.extend_from_slice(&events);
        }
        StepOutcome { t, delivered_bps: delivered, events }
    }

    fn distance(&self, user: usize, ap: usize) -> f64 {
        let device = device_point(&self.crowd.users[user], self.config.mobility.device_height);
        self.constellation.nodes[ap].position.distance(&device)
    }

    pub fn report(&self) -> MetricsReport {
        let steps = self.step_index.max(1) as f64;
        let n_users = self.crowd.users.len();
        let n_aps = self.constellation.len();
        let per_user: Vec<UserMetrics> = self
            .crowd
            .users
            .iter()
            .enumerate()
            .map(|(u, user)| UserMetrics {
                id: user.id,
                demand_bps: user.demand_bps,
                coverage: self.covered_steps[u] as f64 / steps,
                mean_throughput_bps: self.delivered_sum[u] / steps,
            })
            .collect();
        let per_ap: Vec<ApMetrics> = (0..n_aps)
            .map(|ap| ApMetrics {
                id: self.constellation.nodes[ap].id,
                idle_fraction: 1.0 - self.busy_steps[ap] as f64 / steps,
                mean_users: self.user_load_sum[ap] as f64 / steps,
            })
            .collect();
        let (user_coverage, mean_throughput_bps) = if n_users == 0 {
            (0.0, 0.0)
        } else {
            (
                self.covered_steps.iter().sum::<u64>() as f64 / (steps * n_users as f64),
                self.delivered_sum.iter().sum::<f64>() / (steps * n_users as f64),
            )
        };
        let ap_idle_fraction = if n_aps == 0 {
            1.0
        } else {
            per_ap.iter().map(|a| a.idle_fraction).sum::<f64>() / n_aps as f64
        };
        MetricsReport {
            placement_type: self.config.placement.to_string(),
            n_aps: self.config.n_aps,
            effective_height_m: self.config.effective_height(),
            seed: self.config.seed,
            blockage_enabled: self.config.blockage_enabled,
            p_o_w: self.config.p_o_w,
            per_ap_power_w: self.config.per_ap_power(),
            h_c_m: self.constellation.h_c,
            steps: self.step_index,
            user_coverage,
            mean_throughput_bps,
            ap_idle_fraction,
            handoff_count: self.handoffs,
            per_ap,
            per_user,
        }
    }
}

/// Executes `config.n_steps()` steps and returns the aggregated metrics.
pub fn run(config: &SimConfig) -> Result<MetricsReport> {
    let mut sim = Simulation::new(config.clone())?;
    for _ in 0..config.n_steps() {
        sim.step();
    }
    Ok(sim.report())
}
