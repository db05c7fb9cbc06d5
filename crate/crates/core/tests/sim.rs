use hetsched::config::RunConfig;
use hetsched::scheduler::SchedulerKind;
use hetsched::sim::{run_sim, MetricsReport};
use hetsched::topology::DeviceKind;

fn small(horizon: u64) -> RunConfig {
    let mut cfg = RunConfig {
        horizon,
        ..RunConfig::default()
    };
    cfg.traffic.mtc_period_s = 0.3;
    cfg.dqn.hidden = 4;
    cfg.dqn.batch = 4;
    cfg
}

fn conserved(r: &MetricsReport) -> bool {
    r.injected
        .iter()
        .zip(&r.device_delays_ms)
        .zip(&r.queued)
        .all(|((i, d), q)| *i == d.len() as u64 + q)
}

#[test]
fn no_traffic_means_no_packets() {
    let mut cfg = small(200);
    cfg.traffic.ue_rate_pps = 0.0;
    cfg.traffic.mcd_burst_packets = 0;
    for kind in SchedulerKind::ALL {
        let r = run_sim(&cfg, kind, 1).unwrap();
        assert_eq!(r.delivered(), 0);
        assert!(r.injected.iter().all(|&n| n == 0));
        for class in DeviceKind::ALL {
            assert_eq!(r.class_mean_delay(class), None);
        }
        assert!(r.rewards.iter().all(|t| t.len() == 200));
    }
}

#[test]
fn packets_are_conserved() {
    for kind in SchedulerKind::ALL {
        for seed in [1, 2] {
            let r = run_sim(&small(600), kind, seed).unwrap();
            assert!(conserved(&r), "{kind} seed {seed}");
            assert!(r.delivered() > 0);
            assert!(r.device_delays_ms.iter().flatten().all(|&d| d >= 1.0));
        }
    }
}

#[test]
fn reruns_are_identical() {
    for kind in SchedulerKind::ALL {
        assert_eq!(run_sim(&small(300), kind, 9).unwrap(), run_sim(&small(300), kind, 9).unwrap());
    }
    assert_ne!(run_sim(&small(300), SchedulerKind::Rr, 9).unwrap(), run_sim(&small(300), SchedulerKind::Rr, 10).unwrap());
}

#[test]
fn lone_packet_takes_one_subframe() {
    let mut cfg = small(3000);
    cfg.scenario.n_ue = 0;
    cfg.scenario.n_unb = 0;
    cfg.scenario.n_mcd = 1;
    cfg.traffic.mtc_period_s = 10.0;
    let r = run_sim(&cfg, SchedulerKind::Rr, 4).unwrap();
    let delays: Vec<f64> = r.device_delays_ms.concat();
    assert_eq!(r.injected.iter().sum::<u64>(), delays.len() as u64);
    assert!(delays.iter().all(|&d| d == 1.0), "{delays:?}");
}

#[test]
fn rewards_stay_in_unit_interval() {
    let r = run_sim(&small(400), SchedulerKind::Qtab, 2).unwrap();
    assert_eq!(r.rewards.len(), 6);
    assert!(r.rewards.iter().flatten().all(|&x| (0.0..=1.0).contains(&x)));
}
