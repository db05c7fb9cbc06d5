//! Slotted uplink simulation loop.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::channel::{dbm_to_mw, link_loss_db, rb_bits, sinr_linear};
use crate::config::RunConfig;
use crate::error::Result;
use crate::rl::{reward_sigmoid, DelayWindow};
use crate::scheduler::{build_scheduler, Observation, Scheduler, SchedulerKind};
use crate::topology::{build_topology, DeviceKind, StationKind, Topology};
use crate::traffic::{generate_arrivals, DeviceQueue, Packet};

const STREAM_TOPOLOGY: u64 = 0;
const STREAM_TRAFFIC: u64 = 1;
const STREAM_POLICY_BASE: u64 = 16;

/// Independent deterministic stream `stream` of the master `seed`.
pub fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub scheduler: SchedulerKind,
    pub seed: u64,
    /// Subframes simulated.
    pub horizon: u64,
    pub device_kinds: Vec<DeviceKind>,
    /// End-to-end delay of every delivered packet, per device, in ms.
    pub device_delays_ms: Vec<Vec<f64>>,
    pub injected: Vec<u64>,
    /// Packets still queued (including partially sent) at the horizon.
    pub queued: Vec<u64>,
    /// Reward per subframe, one trace per station in id order.
    pub rewards: Vec<Vec<f64>>,
}

impl MetricsReport {
    pub fn delivered(&self) -> u64 {
        self.device_delays_ms.iter().map(|d| d.len() as u64).sum()
    }

    pub fn class_packets(&self, kind: DeviceKind) -> u64 {
        self.class_delays(kind).count() as u64
    }

    pub fn class_delays(&self, kind: DeviceKind) -> impl Iterator<Item = f64> + '_ {
        self.device_kinds
            .iter()
            .zip(&self.device_delays_ms)
            .filter(move |(k, _)| **k == kind)
            .flat_map(|(_, d)| d.iter().copied())
    }

    /// Mean delay of a device class, `None` if nothing was delivered.
    pub fn class_mean_delay(&self, kind: DeviceKind) -> Option<f64> {
        let (sum, n) = self.class_delays(kind).fold((0.0, 0u64), |(s, n), d| (s + d, n + 1));
        (n > 0).then(|| sum / n as f64)
    }

    /// Per-subframe reward averaged over stations.
    pub fn mean_reward_trace(&self) -> Vec<f64> {
        let n = self.rewards.len().max(1) as f64;
        (0..self.horizon as usize)
            .map(|t| self.rewards.iter().map(|r| r[t].abs()).sum::<f64>() / n)
            .collect()
    }
}

/// Received power at every station from every device, in mW.
fn gain_matrix(topo: &Topology, cfg: &RunConfig) -> Vec<Vec<f64>> {
    topo.devices
        .iter()
        .map(|d| {
            topo.stations
                .iter()
                .map(|s| {
                    let budget = cfg.channel.budget(d.tx_power_dbm, s.kind == StationKind::Macro);
                    dbm_to_mw(d.tx_power_dbm - link_loss_db(d.pos.distance(&s.center), &budget))
                })
                .collect()
        })
        .collect()
}

/// Group of resource block `rb` when `n_rb` blocks are split into `n_groups`.
fn group_of(rb: usize, n_rb: usize, n_groups: usize) -> usize {
    rb * n_groups / n_rb
}

pub fn run_sim(cfg: &RunConfig, kind: SchedulerKind, seed: u64) -> Result<MetricsReport> {
    cfg.validate()?;
    let topo = build_topology(&cfg.scenario, &cfg.channel, &mut substream(seed, STREAM_TOPOLOGY))?;
    run_on_topology(cfg, &topo, kind, seed)
}

/// Runs the loop on a prebuilt topology; traffic and policies still derive
/// from `seed`.
pub fn run_on_topology(cfg: &RunConfig, topo: &Topology, kind: SchedulerKind, seed: u64) -> Result<MetricsReport> {
    run_with_schedulers(cfg, topo, kind, seed, |_, n_attached, rng| {
        build_scheduler(kind, &cfg.scheduling, &cfg.learning, &cfg.dqn, n_attached, rng)
    })
}

/// Runs the loop with schedulers from `make(station_index, n_attached, policy_rng)`.
/// `kind` only labels the report.
pub fn run_with_schedulers<F>(cfg: &RunConfig, topo: &Topology, kind: SchedulerKind, seed: u64, mut make: F) -> Result<MetricsReport>
where
    F: FnMut(usize, usize, &mut ChaCha8Rng) -> Result<Box<dyn Scheduler>>,
{
    let horizon = cfg.horizon;
    let ch = &cfg.channel;
    let subframe_ms = ch.subframe_s * 1e3;
    let n_groups = cfg.scheduling.n_groups;
    let noise_mw = dbm_to_mw(ch.noise_floor_dbm());

    let arrivals = generate_arrivals(topo, &cfg.traffic, horizon, ch.subframe_s, &mut substream(seed, STREAM_TRAFFIC));
    let gains = gain_matrix(topo, cfg);
    let attached: Vec<_> = topo.stations.iter().map(|s| topo.attached(s.id)).collect();

    let mut policy_rngs: Vec<ChaCha8Rng> = (0..topo.stations.len())
        .map(|s| substream(seed, STREAM_POLICY_BASE + s as u64))
        .collect();
    let mut schedulers: Vec<Box<dyn Scheduler>> = attached
        .iter()
        .zip(policy_rngs.iter_mut())
        .enumerate()
        .map(|(s, (devs, rng))| make(s, devs.len(), rng))
        .collect::<Result<_>>()?;

    let n_dev = topo.devices.len();
    let mut queues: Vec<DeviceQueue> = topo.devices.iter().map(|d| DeviceQueue::new(d.id)).collect();
    let mut next_arrival = vec![0usize; n_dev];
    let mut injected = vec![0u64; n_dev];
    let mut delays: Vec<Vec<f64>> = vec![Vec::new(); n_dev];
    let mut windows: Vec<DelayWindow> = topo.stations.iter().map(|_| DelayWindow::new(cfg.learning.delay_window)).collect();
    let mut prev_reward = vec![0.0; topo.stations.len()];
    let mut rewards: Vec<Vec<f64>> = topo.stations.iter().map(|_| Vec::with_capacity(horizon as usize)).collect();

    let mut tx: Vec<Vec<Option<usize>>> = topo.stations.iter().map(|s| vec![None; s.n_rb]).collect();
    let mut granted = vec![0u64; n_dev];
    let mut interferers: Vec<f64> = Vec::with_capacity(topo.stations.len());

    for t in 0..horizon {
        for (d, q) in queues.iter_mut().enumerate() {
            let list = &arrivals[d];
            while next_arrival[d] < list.len() && list[next_arrival[d]] == t {
                q.push(Packet::new(topo.devices[d].id, t, cfg.traffic.packet_bits(topo.devices[d].kind)));
                next_arrival[d] += 1;
                injected[d] += 1;
            }
        }

        for (s, station) in topo.stations.iter().enumerate() {
            let devs = &attached[s];
            let obs = Observation {
                subframe: t,
                devices: devs.clone(),
                backlog_bits: devs.iter().map(|d| queues[d.0].backlog_bits()).collect(),
                hol_age: devs
                    .iter()
                    .map(|d| queues[d.0].head().map_or(0, |p| t - p.arrival_subframe))
                    .collect(),
                avg_delay_ms: windows[s].mean(),
                prev_reward: prev_reward[s],
            };
            let alloc = schedulers[s].schedule(&obs, &mut policy_rngs[s])?;
            debug_assert!(alloc.is_valid_for(&obs));
            for (rb, slot) in tx[s].iter_mut().enumerate() {
                *slot = alloc.groups[group_of(rb, station.n_rb, n_groups)].map(|d| d.0);
            }
        }

        granted.fill(0);
        for (s, rbs) in tx.iter().enumerate() {
            for (rb, dev) in rbs.iter().enumerate() {
                let Some(d) = *dev else { continue };
                interferers.clear();
                for (o, other) in tx.iter().enumerate() {
                    if o != s {
                        if let Some(Some(i)) = other.get(rb) {
                            interferers.push(gains[*i][s]);
                        }
                    }
                }
                let sinr = sinr_linear(gains[d][s], &interferers, noise_mw);
                granted[d] += rb_bits(sinr, ch.rb_bandwidth_hz, ch.subframe_s, ch.max_se);
            }
        }

        let done_at = t + 1;
        for (s, devs) in attached.iter().enumerate() {
            let mut completed = Vec::new();
            for d in devs {
                for p in queues[d.0].serve(granted[d.0]) {
                    let ms = (done_at - p.arrival_subframe) as f64 * subframe_ms;
                    delays[d.0].push(ms);
                    completed.push(ms);
                }
            }
            windows[s].push_subframe(completed);

            let total_ms: f64 = devs
                .iter()
                .filter_map(|d| queues[d.0].head())
                .map(|p| (done_at - p.arrival_subframe) as f64 * subframe_ms)
                .sum();
            let r = reward_sigmoid(total_ms, &cfg.learning);
            schedulers[s].feedback(r);
            rewards[s].push(r);
            prev_reward[s] = r;
        }
    }

    Ok(MetricsReport {
        scheduler: kind,
        seed,
        horizon,
        device_kinds: topo.devices.iter().map(|d| d.kind).collect(),
        device_delays_ms: delays,
        injected,
        queued: queues.iter().map(|q| q.len() as u64).collect(),
        rewards,
    })
}
