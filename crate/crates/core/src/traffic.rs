//! Packet arrival processes and per-device FIFO queues.

use std::collections::VecDeque;

use rand::Rng;
use rand_distr::{Beta, Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::topology::{DeviceId, DeviceKind, Topology};

/// Shape parameters of the 3GPP machine-type activation model.
pub const MTC_BETA_ALPHA: f64 = 3.0;
pub const MTC_BETA_BETA: f64 = 4.0;

/// Traffic section of the run config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrafficConfig {
    /// Activation window of the MCD burst process, repeated back to back.
    pub mtc_period_s: f64,
    /// Packets each MCD emits per activation.
    pub mcd_burst_packets: usize,
    pub mcd_packet_bits: u64,
    pub ue_packet_bits: u64,
    /// Poisson rate for UEs and UNBs.
    pub ue_rate_pps: f64,
}

impl Default for TrafficConfig {
    fn default() -> Self {
        Self {
            mtc_period_s: 10.0,
            mcd_burst_packets: 1,
            mcd_packet_bits: 256,
            ue_packet_bits: 4096,
            ue_rate_pps: 50.0,
        }
    }
}

impl TrafficConfig {
    pub(crate) fn validate(&self) -> Result<()> {
        if !(self.mtc_period_s.is_finite() && self.mtc_period_s > 0.0) {
            return Err(Error::range("traffic.mtc_period_s", "must be positive"));
        }
        if !(self.ue_rate_pps.is_finite() && self.ue_rate_pps >= 0.0) {
            return Err(Error::range("traffic.ue_rate_pps", "must be non-negative"));
        }
        if self.mcd_packet_bits == 0 {
            return Err(Error::range("traffic.mcd_packet_bits", "must be at least 1"));
        }
        if self.ue_packet_bits == 0 {
            return Err(Error::range("traffic.ue_packet_bits", "must be at least 1"));
        }
        Ok(())
    }

    pub fn packet_bits(&self, kind: DeviceKind) -> u64 {
        match kind {
            DeviceKind::Mcd => self.mcd_packet_bits,
            DeviceKind::Ue | DeviceKind::Unb => self.ue_packet_bits,
        }
    }
}

/// One activation time per device, each `period * Beta(3, 4)`.
pub fn mtc_arrival_times<R: Rng + ?Sized>(rng: &mut R, n_devices: usize, period: f64) -> Vec<f64> {
    let beta = Beta::new(MTC_BETA_ALPHA, MTC_BETA_BETA).expect("valid beta shape");
    (0..n_devices).map(|_| period * beta.sample(rng)).collect()
}

/// Poisson process on `[0, horizon)`, ascending.
pub fn poisson_arrivals<R: Rng + ?Sized>(rng: &mut R, rate: f64, horizon: f64) -> Vec<f64> {
    if !(rate > 0.0) || !(horizon > 0.0) {
        return Vec::new();
    }
    let exp = Exp::new(rate).expect("positive rate");
    let mut out = Vec::with_capacity((rate * horizon * 1.1) as usize + 4);
    let mut t = exp.sample(rng);
    while t < horizon {
        out.push(t);
        t += exp.sample(rng);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Packet {
    pub device: DeviceId,
    pub arrival_subframe: u64,
    pub size: u64,
    pub remaining: u64,
}

impl Packet {
    pub fn new(device: DeviceId, arrival_subframe: u64, size: u64) -> Self {
        Self {
            device,
            arrival_subframe,
            size,
            remaining: size,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeviceQueue {
    pub device: DeviceId,
    packets: VecDeque<Packet>,
    backlog: u64,
}

impl DeviceQueue {
    pub fn new(device: DeviceId) -> Self {
        Self {
            device,
            packets: VecDeque::new(),
            backlog: 0,
        }
    }

    /// Appends a packet; arrivals must not go backwards in time.
    pub fn push(&mut self, packet: Packet) {
        debug_assert!(self
            .packets
            .back()
            .is_none_or(|p| p.arrival_subframe <= packet.arrival_subframe));
        self.backlog += packet.remaining;
        self.packets.push_back(packet);
    }

    pub fn packets(&self) -> impl Iterator<Item = &Packet> {
        self.packets.iter()
    }

    pub fn len(&self) -> usize {
        self.packets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.packets.is_empty()
    }

    pub fn backlog_bits(&self) -> u64 {
        self.backlog
    }

    pub fn head(&self) -> Option<&Packet> {
        self.packets.front()
    }

    /// Drains up to `bits` from the head of the queue and returns the packets
    /// that finished.
    pub fn serve(&mut self, mut bits: u64) -> Vec<Packet> {
        let mut done = Vec::new();
        while bits > 0 {
            let Some(head) = self.packets.front_mut() else { break };
            let sent = bits.min(head.remaining);
            head.remaining -= sent;
            self.backlog -= sent;
            bits -= sent;
            if head.remaining == 0 {
                done.push(self.packets.pop_front().expect("head exists"));
            }
        }
        done
    }
}

/// Age of every queued packet at subframe `now`, head first.
pub fn queue_delays(queue: &DeviceQueue, now: u64) -> Result<Vec<u64>> {
    queue
        .packets()
        .map(|p| {
            now.checked_sub(p.arrival_subframe).ok_or(Error::PacketFromFuture {
                arrival: p.arrival_subframe,
                now,
            })
        })
        .collect()
}

fn to_subframe(t: f64, subframe_s: f64) -> u64 {
    (t / subframe_s).floor() as u64
}

/// Arrival subframes for every device over `horizon` subframes, indexed by
/// device id. MCDs repeat their Beta activation every period, UEs and UNBs
/// draw a Poisson process.
pub fn generate_arrivals<R: Rng + ?Sized>(
    topology: &Topology,
    cfg: &TrafficConfig,
    horizon: u64,
    subframe_s: f64,
    rng: &mut R,
) -> Vec<Vec<u64>> {
    let horizon_s = horizon as f64 * subframe_s;
    let n_periods = (horizon_s / cfg.mtc_period_s).ceil() as usize;
    topology
        .devices
        .iter()
        .map(|d| match d.kind {
            DeviceKind::Mcd => {
                let mut out = Vec::new();
                for k in 0..n_periods {
                    let start = k as f64 * cfg.mtc_period_s;
                    let t = start + mtc_arrival_times(rng, 1, cfg.mtc_period_s)[0];
                    let sf = to_subframe(t, subframe_s);
                    if sf < horizon {
                        out.extend(std::iter::repeat_n(sf, cfg.mcd_burst_packets));
                    }
                }
                out
            }
            DeviceKind::Ue | DeviceKind::Unb => poisson_arrivals(rng, cfg.ue_rate_pps, horizon_s)
                .into_iter()
                .map(|t| to_subframe(t, subframe_s))
                .filter(|&sf| sf < horizon)
                .collect(),
        })
        .collect()
}
