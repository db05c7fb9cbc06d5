//! Two-tier topology: one macro station, a set of small cells, and the
//! devices they serve.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{link_loss_db, ChannelConfig};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Position) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StationId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DeviceId(pub usize);

impl fmt::Display for StationId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "bs{}", self.0)
    }
}

impl fmt::Display for DeviceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "dev{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StationKind {
    Macro,
    Small,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DeviceKind {
    /// Mission-critical device with bursty machine-type traffic.
    Mcd,
    Ue,
    /// UE that may only attach to the macro station.
    Unb,
}

impl DeviceKind {
    pub const ALL: [DeviceKind; 3] = [DeviceKind::Mcd, DeviceKind::Ue, DeviceKind::Unb];

    pub fn label(self) -> &'static str {
        match self {
            DeviceKind::Mcd => "MCD",
            DeviceKind::Ue => "UE",
            DeviceKind::Unb => "UNB",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Station {
    pub id: StationId,
    pub kind: StationKind,
    pub center: Position,
    pub radius: f64,
    pub tx_power_dbm: f64,
    pub n_rb: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Device {
    pub id: DeviceId,
    pub kind: DeviceKind,
    pub pos: Position,
    pub serving: StationId,
    pub tx_power_dbm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    pub stations: Vec<Station>,
    pub devices: Vec<Device>,
    pub association: BTreeMap<DeviceId, StationId>,
}

/// Scenario section of the run config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub n_sbs: usize,
    pub n_ue: usize,
    pub n_unb: usize,
    pub n_mcd: usize,
    pub macro_radius_m: f64,
    pub sbs_radius_m: f64,
    pub macro_tx_power_dbm: f64,
    pub sbs_tx_power_dbm: f64,
    pub device_tx_power_dbm: f64,
    pub macro_n_rb: usize,
    pub sbs_n_rb: usize,
    /// Fixed small-cell centers as `[x, y]` pairs; sampled when absent.
    pub sbs_centers: Option<Vec<[f64; 2]>>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            n_sbs: 5,
            n_ue: 20,
            n_unb: 6,
            n_mcd: 10,
            macro_radius_m: 800.0,
            sbs_radius_m: 50.0,
            macro_tx_power_dbm: 46.0,
            sbs_tx_power_dbm: 30.0,
            device_tx_power_dbm: 23.0,
            macro_n_rb: 12,
            sbs_n_rb: 12,
            sbs_centers: None,
        }
    }
}

impl ScenarioConfig {
    pub fn n_devices(&self) -> usize {
        self.n_mcd + self.n_ue + self.n_unb
    }

    pub(crate) fn validate(&self) -> Result<()> {
        for (field, v) in [
            ("scenario.macro_radius_m", self.macro_radius_m),
            ("scenario.sbs_radius_m", self.sbs_radius_m),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::range(field, format!("must be positive, got {v}")));
            }
        }
        for (field, v) in [
            ("scenario.macro_tx_power_dbm", self.macro_tx_power_dbm),
            ("scenario.sbs_tx_power_dbm", self.sbs_tx_power_dbm),
            ("scenario.device_tx_power_dbm", self.device_tx_power_dbm),
        ] {
            if !v.is_finite() {
                return Err(Error::range(field, "must be finite"));
            }
        }
        if self.macro_n_rb == 0 {
            return Err(Error::range("scenario.macro_n_rb", "must be at least 1"));
        }
        if self.sbs_n_rb == 0 {
            return Err(Error::range("scenario.sbs_n_rb", "must be at least 1"));
        }
        if let Some(centers) = &self.sbs_centers {
            if centers.len() != self.n_sbs {
                return Err(Error::range(
                    "scenario.sbs_centers",
                    format!("{} centers given for n_sbs = {}", centers.len(), self.n_sbs),
                ));
            }
        }
        Ok(())
    }
}

/// Uniform point in the disk of `radius` around `center`.
pub fn sample_position<R: Rng + ?Sized>(rng: &mut R, center: Position, radius: f64) -> Result<Position> {
    if !(radius > 0.0) {
        return Err(Error::NonPositiveRadius(radius));
    }
    let r = radius * rng.random::<f64>().sqrt();
    let theta = 2.0 * PI * rng.random::<f64>();
    Ok(Position::new(center.x + r * theta.cos(), center.y + r * theta.sin()))
}

/// Serving station for `device`: the macro for UNBs, otherwise the strongest
/// received power with ties going to the lowest station id.
pub fn associate_device(device: &Device, stations: &[Station], channel: &ChannelConfig) -> Result<StationId> {
    if stations.is_empty() {
        return Err(Error::NoStations);
    }
    if device.kind == DeviceKind::Unb {
        if let Some(m) = stations.iter().find(|s| s.kind == StationKind::Macro) {
            return Ok(m.id);
        }
    }
    let mut best: Option<(f64, StationId)> = None;
    for s in stations {
        let budget = channel.budget(s.tx_power_dbm, s.kind == StationKind::Macro);
        let rx = s.tx_power_dbm - link_loss_db(device.pos.distance(&s.center), &budget);
        best = match best {
            Some((p, id)) if p > rx || (p == rx && id < s.id) => Some((p, id)),
            _ => Some((rx, s.id)),
        };
    }
    Ok(best.map(|(_, id)| id).expect("stations non-empty"))
}

const PLACEMENT_ATTEMPTS: usize = 10_000;

fn small_cell_centers<R: Rng + ?Sized>(cfg: &ScenarioConfig, rng: &mut R) -> Result<Vec<Position>> {
    if let Some(fixed) = &cfg.sbs_centers {
        return fixed
            .iter()
            .enumerate()
            .map(|(index, &[x, y])| {
                let p = Position::new(x, y);
                if !(x.is_finite() && y.is_finite()) || p.distance(&Position::default()) > cfg.macro_radius_m {
                    Err(Error::SmallCellOutsideMacro {
                        index,
                        x,
                        y,
                        radius: cfg.macro_radius_m,
                    })
                } else {
                    Ok(p)
                }
            })
            .collect();
    }

    let separation = 2.0 * cfg.sbs_radius_m;
    let mut centers: Vec<Position> = Vec::with_capacity(cfg.n_sbs);
    let mut attempts = 0;
    while centers.len() < cfg.n_sbs {
        if attempts == PLACEMENT_ATTEMPTS {
            return Err(Error::SmallCellPlacement {
                wanted: cfg.n_sbs,
                separation,
                radius: cfg.macro_radius_m,
            });
        }
        attempts += 1;
        let p = sample_position(rng, Position::default(), cfg.macro_radius_m)?;
        if centers.iter().all(|c| c.distance(&p) >= separation) {
            centers.push(p);
        }
    }
    Ok(centers)
}

/// Builds the macro station (id 0) and small cells (ids 1..), then drops
/// devices in id order MCDs, UEs, UNBs.
///
/// MCDs and UEs land uniformly inside a uniformly chosen small cell (or the
/// macro disk when there are none); UNBs land uniformly in the macro disk.
pub fn build_topology<R: Rng + ?Sized>(cfg: &ScenarioConfig, channel: &ChannelConfig, rng: &mut R) -> Result<Topology> {
    cfg.validate()?;
    let origin = Position::default();
    let mut stations = vec![Station {
        id: StationId(0),
        kind: StationKind::Macro,
        center: origin,
        radius: cfg.macro_radius_m,
        tx_power_dbm: cfg.macro_tx_power_dbm,
        n_rb: cfg.macro_n_rb,
    }];
    for (i, center) in small_cell_centers(cfg, rng)?.into_iter().enumerate() {
        stations.push(Station {
            id: StationId(i + 1),
            kind: StationKind::Small,
            center,
            radius: cfg.sbs_radius_m,
            tx_power_dbm: cfg.sbs_tx_power_dbm,
            n_rb: cfg.sbs_n_rb,
        });
    }

    let kinds = std::iter::repeat_n(DeviceKind::Mcd, cfg.n_mcd)
        .chain(std::iter::repeat_n(DeviceKind::Ue, cfg.n_ue))
        .chain(std::iter::repeat_n(DeviceKind::Unb, cfg.n_unb));
    let mut devices = Vec::with_capacity(cfg.n_devices());
    for (i, kind) in kinds.enumerate() {
        let pos = match kind {
            DeviceKind::Unb => sample_position(rng, origin, cfg.macro_radius_m)?,
            _ if cfg.n_sbs == 0 => sample_position(rng, origin, cfg.macro_radius_m)?,
            _ => {
                let cell = &stations[1 + rng.random_range(0..cfg.n_sbs)];
                sample_position(rng, cell.center, cell.radius)?
            }
        };
        let mut device = Device {
            id: DeviceId(i),
            kind,
            pos,
            serving: StationId(0),
            tx_power_dbm: cfg.device_tx_power_dbm,
        };
        device.serving = associate_device(&device, &stations, channel)?;
        devices.push(device);
    }

    let association = devices.iter().map(|d| (d.id, d.serving)).collect();
    Ok(Topology {
        stations,
        devices,
        association,
    })
}

impl Topology {
    pub fn device(&self, id: DeviceId) -> &Device {
        &self.devices[id.0]
    }

    /// Devices served by `station`, in ascending id order.
    pub fn attached(&self, station: StationId) -> Vec<DeviceId> {
        self.devices
            .iter()
            .filter(|d| d.serving == station)
            .map(|d| d.id)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn station(id: usize, kind: StationKind, x: f64, power: f64) -> Station {
        Station {
            id: StationId(id),
            kind,
            center: Position::new(x, 0.0),
            radius: if kind == StationKind::Macro { 800.0 } else { 50.0 },
            tx_power_dbm: power,
            n_rb: 12,
        }
    }

    fn device(kind: DeviceKind, x: f64, y: f64) -> Device {
        Device {
            id: DeviceId(0),
            kind,
            pos: Position::new(x, y),
            serving: StationId(0),
            tx_power_dbm: 23.0,
        }
    }

    #[test]
    fn sample_position_tiny_disk() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = sample_position(&mut rng, Position::default(), 0.001).unwrap();
        assert!(p.distance(&Position::default()) <= 0.001);
    }

    #[test]
    fn sample_position_rejects_bad_radius() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(matches!(
            sample_position(&mut rng, Position::default(), 0.0),
            Err(Error::NonPositiveRadius(_))
        ));
        assert!(sample_position(&mut rng, Position::default(), -2.0).is_err());
    }

    #[test]
    fn sample_position_mean_radius() {
        // Uniform disk: E[r] = 2R/3.
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let c = Position::new(10.0, -4.0);
        let n = 10_000;
        let mean = (0..n)
            .map(|_| sample_position(&mut rng, c, 50.0).unwrap().distance(&c))
            .sum::<f64>()
            / n as f64;
        assert!((mean - 100.0 / 3.0).abs() < 1.0, "mean radius {mean}");
    }

    #[test]
    fn sample_position_deterministic() {
        let a = sample_position(&mut ChaCha8Rng::seed_from_u64(3), Position::default(), 5.0).unwrap();
        let b = sample_position(&mut ChaCha8Rng::seed_from_u64(3), Position::default(), 5.0).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn default_preset_counts() {
        let cfg = ScenarioConfig::default();
        let topo = build_topology(&cfg, &ChannelConfig::default(), &mut ChaCha8Rng::seed_from_u64(11)).unwrap();
        assert_eq!(topo.stations.len(), 6);
        assert_eq!(topo.stations[0].kind, StationKind::Macro);
        assert_eq!(topo.stations[0].radius, 800.0);
        assert!(topo.stations[1..].iter().all(|s| s.kind == StationKind::Small && s.radius == 50.0));
        let count = |k| topo.devices.iter().filter(|d| d.kind == k).count();
        assert_eq!(count(DeviceKind::Ue), 20);
        assert_eq!(count(DeviceKind::Unb), 6);
        assert_eq!(count(DeviceKind::Mcd), 10);
        assert_eq!(topo.association.len(), topo.devices.len());
        for s in &topo.stations[1..] {
            assert!(s.center.distance(&Position::default()) <= 800.0);
            for t in &topo.stations[1..] {
                if s.id != t.id {
                    assert!(s.center.distance(&t.center) >= 100.0);
                }
            }
        }
    }

    #[test]
    fn single_device_goes_to_macro() {
        let cfg = ScenarioConfig {
            n_sbs: 0,
            n_ue: 1,
            n_unb: 0,
            n_mcd: 0,
            ..Default::default()
        };
        let topo = build_topology(&cfg, &ChannelConfig::default(), &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert_eq!(topo.devices.len(), 1);
        assert_eq!(topo.association[&DeviceId(0)], StationId(0));
    }

    #[test]
    fn rebuild_is_identical() {
        let cfg = ScenarioConfig::default();
        let ch = ChannelConfig::default();
        let a = build_topology(&cfg, &ch, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let b = build_topology(&cfg, &ch, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn fixed_center_outside_macro_is_rejected() {
        let cfg = ScenarioConfig {
            n_sbs: 2,
            sbs_centers: Some(vec![[0.0, 100.0], [900.0, 0.0]]),
            ..Default::default()
        };
        let err = build_topology(&cfg, &ChannelConfig::default(), &mut ChaCha8Rng::seed_from_u64(0)).unwrap_err();
        assert!(matches!(err, Error::SmallCellOutsideMacro { index: 1, .. }));
    }

    #[test]
    fn impossible_separation_is_reported() {
        let cfg = ScenarioConfig {
            n_sbs: 50,
            macro_radius_m: 100.0,
            sbs_radius_m: 50.0,
            ..Default::default()
        };
        let err = build_topology(&cfg, &ChannelConfig::default(), &mut ChaCha8Rng::seed_from_u64(0)).unwrap_err();
        assert!(matches!(err, Error::SmallCellPlacement { .. }));
    }

    #[test]
    fn unb_always_macro() {
        let stations = [station(0, StationKind::Macro, 0.0, 46.0), station(1, StationKind::Small, 300.0, 30.0)];
        let d = device(DeviceKind::Unb, 300.0, 0.0);
        assert_eq!(associate_device(&d, &stations, &ChannelConfig::default()).unwrap(), StationId(0));
    }

    #[test]
    fn ue_at_small_cell_center_picks_small_cell() {
        let stations = [station(0, StationKind::Macro, 0.0, 46.0), station(1, StationKind::Small, 300.0, 30.0)];
        let d = device(DeviceKind::Ue, 300.0, 0.0);
        assert_eq!(associate_device(&d, &stations, &ChannelConfig::default()).unwrap(), StationId(1));
    }

    #[test]
    fn equal_power_tie_goes_to_lower_id() {
        let stations = [station(1, StationKind::Small, -10.0, 30.0), station(2, StationKind::Small, 10.0, 30.0)];
        let d = device(DeviceKind::Ue, 0.0, 0.0);
        assert_eq!(associate_device(&d, &stations, &ChannelConfig::default()).unwrap(), StationId(1));
        let flipped = [stations[1].clone(), stations[0].clone()];
        assert_eq!(associate_device(&d, &flipped, &ChannelConfig::default()).unwrap(), StationId(1));
    }

    #[test]
    fn empty_station_list() {
        let d = device(DeviceKind::Ue, 0.0, 0.0);
        assert!(matches!(
            associate_device(&d, &[], &ChannelConfig::default()),
            Err(Error::NoStations)
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn association_invariants(seed in any::<u64>()) {
            let cfg = ScenarioConfig::default();
            let ch = ChannelConfig::default();
            let topo = build_topology(&cfg, &ch, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            prop_assert_eq!(topo.association.len(), topo.devices.len());
            for d in &topo.devices {
                prop_assert!(topo.stations.iter().any(|s| s.id == d.serving));
                prop_assert_eq!(topo.association[&d.id], d.serving);
                if d.kind == DeviceKind::Unb {
                    prop_assert_eq!(d.serving, StationId(0));
                }
                // re-association is idempotent
                prop_assert_eq!(associate_device(d, &topo.stations, &ch).unwrap(), d.serving);
            }
        }
    }
}
