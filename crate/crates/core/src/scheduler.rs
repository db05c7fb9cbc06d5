//! Per-station uplink schedulers behind a common interface.
//!
//! Resource blocks are bundled into `n_groups` groups. The learning
//! schedulers pick a codebook action that maps each group to a candidate
//! slot; slots index the most backlogged devices of the station, so the same
//! action index keeps its meaning from one subframe to the next.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dqn::{self, DqnConfig, LstmQNet, ReplayMemory, StateWindow, Transition};
use crate::error::{Error, Result};
use crate::rl::{self, epsilon_greedy, q_update, Experience, LearnParams, QTable};
use crate::topology::DeviceId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchedulerKind {
    Rr,
    Qtab,
    Dmdq,
}

impl SchedulerKind {
    pub const ALL: [SchedulerKind; 3] = [SchedulerKind::Rr, SchedulerKind::Qtab, SchedulerKind::Dmdq];

    pub fn as_str(self) -> &'static str {
        match self {
            SchedulerKind::Rr => "rr",
            SchedulerKind::Qtab => "qtab",
            SchedulerKind::Dmdq => "dmdq",
        }
    }
}

impl fmt::Display for SchedulerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SchedulerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "rr" => Ok(SchedulerKind::Rr),
            "qtab" => Ok(SchedulerKind::Qtab),
            "dmdq" => Ok(SchedulerKind::Dmdq),
            other => Err(format!("unknown scheduler {other:?} (expected rr, qtab or dmdq)")),
        }
    }
}

/// Scheduling section of the run config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SchedulingConfig {
    pub n_groups: usize,
    pub n_dev_cap: usize,
    pub codebook_cap: usize,
    pub candidate_order: CandidateOrder,
}

/// How backlogged devices are ranked into codebook slots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CandidateOrder {
    /// Largest queued bits first.
    BacklogDesc,
    /// Smallest queued bits first.
    BacklogAsc,
    /// Oldest head-of-line packet first.
    OldestFirst,
}

impl Default for SchedulingConfig {
    fn default() -> Self {
        Self {
            n_groups: 4,
            n_dev_cap: 4,
            codebook_cap: 1024,
            candidate_order: CandidateOrder::BacklogDesc,
        }
    }
}

impl SchedulingConfig {
    pub(crate) fn validate(&self) -> Result<()> {
        if self.n_groups == 0 {
            return Err(Error::range("scheduling.n_groups", "must be at least 1"));
        }
        if self.n_dev_cap == 0 {
            return Err(Error::range("scheduling.n_dev_cap", "must be at least 1"));
        }
        let size = (self.n_dev_cap as u128).checked_pow(self.n_groups as u32);
        if size.is_none_or(|s| s > self.codebook_cap as u128) {
            return Err(Error::range(
                "scheduling.codebook_cap",
                format!(
                    "n_dev_cap^n_groups = {}^{} exceeds the cap {}",
                    self.n_dev_cap, self.n_groups, self.codebook_cap
                ),
            ));
        }
        Ok(())
    }
}

/// What a station sees at the start of a subframe. Per-device vectors are
/// aligned with `devices`, which lists the attached devices by ascending id.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub subframe: u64,
    pub devices: Vec<DeviceId>,
    pub backlog_bits: Vec<u64>,
    pub hol_age: Vec<u64>,
    pub avg_delay_ms: f64,
    pub prev_reward: f64,
}

impl Observation {
    pub fn is_backlogged(&self, i: usize) -> bool {
        self.backlog_bits[i] > 0
    }
}

/// RB group to device map; `None` leaves the group idle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Allocation {
    pub groups: Vec<Option<DeviceId>>,
}

impl Allocation {
    pub fn idle(n_groups: usize) -> Self {
        Self {
            groups: vec![None; n_groups],
        }
    }

    pub fn is_idle(&self) -> bool {
        self.groups.iter().all(Option::is_none)
    }

    /// Every assigned device is attached and backlogged.
    pub fn is_valid_for(&self, obs: &Observation) -> bool {
        self.groups.iter().flatten().all(|d| {
            obs.devices
                .iter()
                .position(|x| x == d)
                .is_some_and(|i| obs.is_backlogged(i))
        })
    }
}

/// All maps from RB group to candidate slot, lexicographic with group 0 most
/// significant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionCodebook {
    n_devices: usize,
    n_groups: usize,
    actions: Vec<Vec<usize>>,
}

pub fn action_codebook(n_devices: usize, n_groups: usize, cap: usize) -> Result<ActionCodebook> {
    if n_devices == 0 || n_groups == 0 {
        return Err(Error::EmptyCodebook {
            devices: n_devices,
            groups: n_groups,
        });
    }
    let size = (n_devices as u128).checked_pow(n_groups as u32).unwrap_or(u128::MAX);
    if size > cap as u128 {
        return Err(Error::CodebookTooLarge { size, cap });
    }
    let actions = (0..size as usize)
        .map(|mut idx| {
            let mut slots = vec![0; n_groups];
            for g in (0..n_groups).rev() {
                slots[g] = idx % n_devices;
                idx /= n_devices;
            }
            slots
        })
        .collect();
    Ok(ActionCodebook {
        n_devices,
        n_groups,
        actions,
    })
}

impl ActionCodebook {
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn n_devices(&self) -> usize {
        self.n_devices
    }

    pub fn n_groups(&self) -> usize {
        self.n_groups
    }

    pub fn slots(&self, action: usize) -> &[usize] {
        &self.actions[action]
    }

    /// Resolves an action against the current candidates. Groups pointing at
    /// an empty slot stay idle.
    pub fn allocation(&self, action: usize, obs: &Observation, candidates: &[usize]) -> Allocation {
        Allocation {
            groups: self.actions[action]
                .iter()
                .map(|&slot| {
                    candidates
                        .get(slot)
                        .copied()
                        .filter(|&i| obs.is_backlogged(i))
                        .map(|i| obs.devices[i])
                })
                .collect(),
        }
    }
}

/// Indices (into `obs.devices`) of at most `cap` backlogged devices, largest
/// backlog first, ties to the lower device id.
pub fn candidates(obs: &Observation, cap: usize) -> Vec<usize> {
    ranked_candidates(obs, cap, CandidateOrder::BacklogDesc)
}

pub fn ranked_candidates(obs: &Observation, cap: usize, order: CandidateOrder) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..obs.devices.len()).filter(|&i| obs.is_backlogged(i)).collect();
    match order {
        CandidateOrder::BacklogDesc => idx.sort_by(|&a, &b| obs.backlog_bits[b].cmp(&obs.backlog_bits[a]).then(a.cmp(&b))),
        CandidateOrder::BacklogAsc => idx.sort_by(|&a, &b| obs.backlog_bits[a].cmp(&obs.backlog_bits[b]).then(a.cmp(&b))),
        CandidateOrder::OldestFirst => idx.sort_by(|&a, &b| obs.hol_age[b].cmp(&obs.hol_age[a]).then(a.cmp(&b))),
    }
    idx.truncate(cap);
    idx
}

/// Sum of head-of-line ages of the backlogged devices, in subframes.
pub fn total_hol_delay(obs: &Observation) -> u64 {
    (0..obs.devices.len())
        .filter(|&i| obs.is_backlogged(i))
        .map(|i| obs.hol_age[i])
        .sum()
}

pub trait Scheduler: Send {
    fn kind(&self) -> SchedulerKind;

    fn schedule(&mut self, obs: &Observation, rng: &mut dyn rand::RngCore) -> Result<Allocation>;

    /// Reward earned by the most recent allocation.
    fn feedback(&mut self, _reward: f64) {}
}

#[derive(Debug, Clone, Default)]
pub struct RoundRobin {
    n_groups: usize,
    /// Position in the attached-device list of the last device served.
    last: Option<usize>,
}

impl RoundRobin {
    pub fn new(n_groups: usize) -> Self {
        Self { n_groups, last: None }
    }
}

/// Hands groups to backlogged devices in circular order, resuming after the
/// last device served.
pub fn rr_schedule(state: &mut RoundRobin, obs: &Observation) -> Allocation {
    let n = obs.devices.len();
    let mut alloc = Allocation::idle(state.n_groups);
    if !(0..n).any(|i| obs.is_backlogged(i)) {
        return alloc;
    }
    for slot in alloc.groups.iter_mut() {
        let start = state.last.map_or(0, |l| l + 1);
        let pick = (0..n).map(|k| (start + k) % n).find(|&i| obs.is_backlogged(i)).expect("some backlog");
        *slot = Some(obs.devices[pick]);
        state.last = Some(pick);
    }
    alloc
}

impl Scheduler for RoundRobin {
    fn kind(&self) -> SchedulerKind {
        SchedulerKind::Rr
    }

    fn schedule(&mut self, obs: &Observation, _rng: &mut dyn rand::RngCore) -> Result<Allocation> {
        Ok(rr_schedule(self, obs))
    }
}

/// Tabular Q-learning over the binary delay state.
#[derive(Debug, Clone)]
pub struct QAgent {
    pub table: QTable,
    codebook: ActionCodebook,
    params: LearnParams,
    dev_cap: usize,
    order: CandidateOrder,
    pending: Option<(usize, usize)>,
    pending_reward: Option<f64>,
}

impl QAgent {
    pub fn new(codebook: ActionCodebook, params: LearnParams, dev_cap: usize) -> Self {
        Self {
            table: QTable::new(2, codebook.len()),
            codebook,
            params,
            dev_cap,
            order: CandidateOrder::BacklogDesc,
            pending: None,
            pending_reward: None,
        }
    }

    pub fn with_order(mut self, order: CandidateOrder) -> Self {
        self.order = order;
        self
    }

    /// Closes the previous decision against the state observed now, then
    /// picks the next action.
    pub fn q_schedule<R: Rng + ?Sized>(&mut self, obs: &Observation, rng: &mut R) -> Result<(Allocation, usize)> {
        let s = rl::delay_state(obs.avg_delay_ms, self.params.target_delay_ms);
        if let (Some((ps, pa)), Some(rc)) = (self.pending.take(), self.pending_reward.take()) {
            q_update(&mut self.table, &Experience { s: ps, a: pa, rc, s_next: s }, &self.params);
        }
        let eps = self.params.epsilon_at(obs.subframe);
        let action = epsilon_greedy(self.table.row(s), eps, rng)?;
        self.pending = Some((s, action));
        let cands = ranked_candidates(obs, self.dev_cap, self.order);
        Ok((self.codebook.allocation(action, obs, &cands), action))
    }
}

impl Scheduler for QAgent {
    fn kind(&self) -> SchedulerKind {
        SchedulerKind::Qtab
    }

    fn schedule(&mut self, obs: &Observation, rng: &mut dyn rand::RngCore) -> Result<Allocation> {
        self.q_schedule(obs, rng).map(|(a, _)| a)
    }

    fn feedback(&mut self, reward: f64) {
        self.pending_reward = Some(reward);
    }
}

/// Deep Q-learning with an LSTM over a window of recent observations.
#[derive(Debug, Clone)]
pub struct DmdqAgent {
    pub net: LstmQNet,
    pub memory: ReplayMemory<Transition>,
    window: StateWindow,
    codebook: ActionCodebook,
    params: LearnParams,
    dqn: DqnConfig,
    dev_cap: usize,
    order: CandidateOrder,
    pending: Option<(Vec<f64>, usize)>,
    pending_reward: Option<f64>,
    last_loss: Option<f64>,
}

impl DmdqAgent {
    /// Feature width: delay state, one backlog per candidate slot, previous reward.
    pub fn feature_dim(dev_cap: usize) -> usize {
        dev_cap + 2
    }

    pub fn new(codebook: ActionCodebook, net: LstmQNet, params: LearnParams, dqn: DqnConfig, dev_cap: usize) -> Result<Self> {
        let dim = Self::feature_dim(dev_cap);
        if net.input_dim() != dim {
            return Err(Error::DimensionMismatch {
                what: "network input",
                expected: dim,
                got: net.input_dim(),
            });
        }
        if net.n_actions() != codebook.len() {
            return Err(Error::DimensionMismatch {
                what: "network head",
                expected: codebook.len(),
                got: net.n_actions(),
            });
        }
        Ok(Self {
            net,
            memory: ReplayMemory::new(dqn.replay_capacity),
            window: StateWindow::new(dim, dqn.window),
            codebook,
            params,
            dev_cap,
            dqn,
            order: CandidateOrder::BacklogDesc,
            pending: None,
            pending_reward: None,
            last_loss: None,
        })
    }

    pub fn with_order(mut self, order: CandidateOrder) -> Self {
        self.order = order;
        self
    }

    pub fn last_loss(&self) -> Option<f64> {
        self.last_loss
    }

    pub fn window(&self) -> &StateWindow {
        &self.window
    }

    fn features(&self, obs: &Observation, cands: &[usize]) -> Vec<f64> {
        let mut f = Vec::with_capacity(Self::feature_dim(self.dev_cap));
        f.push(rl::delay_state(obs.avg_delay_ms, self.params.target_delay_ms) as f64);
        for slot in 0..self.dev_cap {
            let v = cands
                .get(slot)
                .map_or(0.0, |&i| (obs.backlog_bits[i] as f64 / self.dqn.backlog_scale_bits).min(1.0));
            f.push(v);
        }
        f.push(obs.prev_reward.clamp(0.0, 1.0));
        f
    }

    pub fn dmdq_schedule<R: Rng + ?Sized>(&mut self, obs: &Observation, rng: &mut R) -> Result<(Allocation, usize)> {
        let cands = ranked_candidates(obs, self.dev_cap, self.order);
        let features = self.features(obs, &cands);
        self.window.push(&features)?;
        if let (Some((w, a)), Some(r)) = (self.pending.take(), self.pending_reward.take()) {
            self.memory.store(Transition {
                window: w,
                action: a,
                reward: r,
                next_window: self.window.as_slice().to_vec(),
            });
        }

        let q = self.net.forward(self.window.as_slice())?;
        let action = epsilon_greedy(&q, self.params.epsilon_at(obs.subframe), rng)?;
        self.pending = Some((self.window.as_slice().to_vec(), action));

        if self.memory.len() >= self.dqn.batch {
            let batch = self.memory.sample(self.dqn.batch, rng)?;
            self.last_loss = Some(dqn::train_step(&mut self.net, &batch, &self.params, self.dqn.lr)?);
        }
        Ok((self.codebook.allocation(action, obs, &cands), action))
    }
}

impl Scheduler for DmdqAgent {
    fn kind(&self) -> SchedulerKind {
        SchedulerKind::Dmdq
    }

    fn schedule(&mut self, obs: &Observation, rng: &mut dyn rand::RngCore) -> Result<Allocation> {
        self.dmdq_schedule(obs, rng).map(|(a, _)| a)
    }

    fn feedback(&mut self, reward: f64) {
        self.pending_reward = Some(reward);
    }
}

/// Codebook for a station with `n_attached` devices.
pub fn station_codebook(cfg: &SchedulingConfig, n_attached: usize) -> Result<ActionCodebook> {
    action_codebook(cfg.n_dev_cap.min(n_attached).max(1), cfg.n_groups, cfg.codebook_cap)
}

/// Builds the scheduler of `kind` for one station.
pub fn build_scheduler<R: Rng + ?Sized>(
    kind: SchedulerKind,
    sched: &SchedulingConfig,
    learn: &LearnParams,
    dqn_cfg: &DqnConfig,
    n_attached: usize,
    rng: &mut R,
) -> Result<Box<dyn Scheduler>> {
    Ok(match kind {
        SchedulerKind::Rr => Box::new(RoundRobin::new(sched.n_groups)),
        SchedulerKind::Qtab => Box::new(
            QAgent::new(station_codebook(sched, n_attached)?, learn.clone(), sched.n_dev_cap).with_order(sched.candidate_order),
        ),
        SchedulerKind::Dmdq => {
            let codebook = station_codebook(sched, n_attached)?;
            let net = LstmQNet::init(DmdqAgent::feature_dim(sched.n_dev_cap), dqn_cfg.hidden, codebook.len(), rng)?;
            Box::new(
                DmdqAgent::new(codebook, net, learn.clone(), dqn_cfg.clone(), sched.n_dev_cap)?
                    .with_order(sched.candidate_order),
            )
        }
    })
}
