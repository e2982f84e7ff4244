use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use relq_core::radio::{array_gain, LinkState};
use relq_core::{DemandPmf, McsTable, RadioConfig};

const PI: f64 = std::f64::consts::PI;

fn trapezoid_gain(n: usize, steps: usize) -> f64 {
    let half = (102.0 / n as f64).to_radians() / 2.0;
    let (a, b) = (PI / 2.0 - half, PI / 2.0 + half);
    let f = |t: f64| {
        let x = PI * t.cos() / 2.0;
        if x.sin().abs() < 1e-15 {
            n as f64
        } else {
            (n as f64 * x).sin() / x.sin()
        }
    };
    let h = (b - a) / steps as f64;
    let inner: f64 = (1..steps).map(|i| f(a + i as f64 * h)).sum();
    (inner + 0.5 * (f(a) + f(b))) * h / (b - a)
}

/// Link budget rebuilt in the dB domain.
struct Oracle {
    cfg: RadioConfig<f64>,
    base_db: f64,
}

impl Oracle {
    fn new(cfg: RadioConfig<f64>) -> Self {
        let g = |n: usize| if n == 1 { 1.0 } else { trapezoid_gain(n, 200_000) };
        let gain = g(cfg.bs_elements_h) * g(cfg.bs_elements_v) * g(cfg.ue_elements_h) * g(cfg.ue_elements_v);
        let noise_dbw = cfg.noise_psd_dbm_hz - 30.0 + 10.0 * cfg.bandwidth_hz.log10();
        let margins = cfg.interference_margin_db + cfg.fast_fading_margin_db + cfg.shadow_fading_margin_db;
        let base_db = 10.0 * cfg.tx_power_w.log10() + 10.0 * gain.log10() - noise_dbw - margins;
        Self { cfg, base_db }
    }

    fn sinr_db(&self, r: f64, blocked: bool) -> f64 {
        let c = &self.cfg;
        let y = (r * r + (c.bs_height_m - c.ue_height_m).powi(2)).sqrt();
        let eps = if blocked { c.blocked_attenuation_db } else { c.clear_attenuation_db };
        let pl = 32.4 + eps + 10.0 * c.pathloss_exponent * y.log10() + 20.0 * c.carrier_ghz.log10();
        self.base_db - pl
    }

    fn radius(&self) -> f64 {
        let (mut lo, mut hi) = (0.0, 1e7);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.sinr_db(mid, true) > self.cfg.outage_sinr_db {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    fn blockage(&self, r: f64) -> f64 {
        let c = &self.cfg;
        let slope = (c.blocker_height_m - c.ue_height_m) / (c.bs_height_m - c.ue_height_m);
        1.0 - (-2.0 * c.blocker_density * c.blocker_radius_m * (r * slope + c.blocker_radius_m)).exp()
    }

    /// One UE drop: SINR (dB) at a uniform disk point, with the link state
    /// drawn from the blockage law at an independent uniform disk point.
    fn drop(&self, rng: &mut ChaCha8Rng, r_c: f64) -> f64 {
        let r = r_c * rng.random::<f64>().sqrt();
        let r_b = r_c * rng.random::<f64>().sqrt();
        let blocked = rng.random::<f64>() < self.blockage(r_b);
        self.sinr_db(r, blocked)
    }
}

fn mcs_demand(mcs: &McsTable<f64>, sinr_db: f64, rate: f64, prb_bw: f64) -> Option<usize> {
    let row = mcs.rows().iter().rev().find(|row| sinr_db >= row.sinr_db)?;
    Some((rate / (row.spectral_efficiency * prb_bw)).ceil() as usize)
}

fn empirical_pmf(cfg: &RadioConfig<f64>, rate: f64, samples: usize, seed: u64) -> (Vec<f64>, f64) {
    let oracle = Oracle::new(cfg.clone());
    let mcs = McsTable::default();
    let r_c = oracle.radius();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = vec![0usize; 1];
    let mut outage = 0usize;
    for _ in 0..samples {
        match mcs_demand(&mcs, oracle.drop(&mut rng, r_c), rate, cfg.prb_bandwidth_hz) {
            Some(j) => {
                if j >= counts.len() {
                    counts.resize(j + 1, 0);
                }
                counts[j] += 1;
            }
            None => outage += 1,
        }
    }
    let served = (samples - outage) as f64;
    (counts.iter().map(|&c| c as f64 / served).collect(), outage as f64 / samples as f64)
}

fn total_variation(a: &DemandPmf<f64>, b: &[f64]) -> f64 {
    let n = a.probs().len().max(b.len());
    0.5 * (0..n).map(|j| (a.p(j) - b.get(j).copied().unwrap_or(0.0)).abs()).sum::<f64>()
}

#[test]
fn blockage_hand_values() {
    let mut c = RadioConfig::<f64>::default();
    assert!((c.blockage_probability(0.0).unwrap() - 0.012718).abs() < 1e-6);
    assert!((c.blockage_probability(50.0).unwrap() - 0.049195).abs() < 1e-6);
    c.blocker_density = 0.0;
    assert_eq!(c.blockage_probability(0.0).unwrap(), 0.0);
    assert_eq!(c.mean_blockage_probability(100.0).unwrap(), 0.0);
}

#[test]
fn blockage_monotone() {
    let base = RadioConfig::<f64>::default();
    let mut prev = 0.0;
    for r in [0.0, 1.0, 10.0, 100.0, 1000.0] {
        let p = base.blockage_probability(r).unwrap();
        assert!(p >= prev && p < 1.0);
        prev = p;
    }
    let mut lo = base.clone();
    for (field, bump) in [(0usize, 0.01), (1, 0.1), (2, 0.2)] {
        let mut hi = lo.clone();
        match field {
            0 => hi.blocker_density += bump,
            1 => hi.blocker_radius_m += bump,
            _ => hi.blocker_height_m += bump,
        }
        for r in [0.0, 30.0, 300.0] {
            assert!(hi.blockage_probability(r).unwrap() >= lo.blockage_probability(r).unwrap());
        }
        lo = hi;
    }
}

#[test]
fn constant_blockage_average() {
    let mut c = RadioConfig::<f64>::default();
    c.blocker_height_m = c.ue_height_m + 1e-12;
    let p0 = c.blockage_probability(0.0).unwrap();
    let mean = c.mean_blockage_probability(300.0).unwrap();
    assert!((mean - p0).abs() < 1e-9);
}

#[test]
fn mean_blockage_matches_monte_carlo() {
    let c = RadioConfig::<f64>::default();
    let r_c = c.coverage_radius().unwrap();
    let oracle = Oracle::new(c.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let n = 10_000_000;
    let sum: f64 = (0..n).map(|_| oracle.blockage(r_c * rng.random::<f64>().sqrt())).sum();
    let mc = sum / n as f64;
    let got = c.mean_blockage_probability(r_c).unwrap();
    assert!((got - mc).abs() < 1e-4, "{got} vs {mc}");
}

#[test]
fn path_loss_values() {
    let mut c = RadioConfig::<f64>::default();
    let pl = c.path_loss_db(100.0, LinkState::Clear).unwrap();
    assert!((pl - (32.4 + 42.0 + 20.0 * 28f64.log10())).abs() < 1e-12);
    assert!((pl - 103.344).abs() < 1e-3);
    for y in [1.0, 8.5, 77.0, 5000.0] {
        let d = c.path_loss_db(y, LinkState::Blocked).unwrap() - c.path_loss_db(y, LinkState::Clear).unwrap();
        assert!((d - 15.0).abs() < 1e-12);
    }
    c.carrier_ghz = 1.0;
    assert!((c.path_loss_db(1.0, LinkState::Clear).unwrap() - 32.4).abs() < 1e-12);
    assert!(c.path_loss_db(0.0, LinkState::Clear).is_err());
}

#[test]
fn array_gain_against_trapezoid() {
    assert_eq!(array_gain::<f64>(1).unwrap(), 1.0);
    assert!(array_gain::<f64>(0).is_err());
    for n in [2usize, 4, 8, 16, 64] {
        let g = array_gain::<f64>(n).unwrap();
        let t = trapezoid_gain(n, 400_000);
        assert!(g > 0.0 && g <= n as f64);
        assert!(((g - t) / t).abs() < 1e-6, "n {n}: {g} vs {t}");
    }
    let c = RadioConfig::<f64>::default();
    let g16 = array_gain::<f64>(16).unwrap();
    assert!((c.bs_gain().unwrap() - g16 * g16).abs() < 1e-12 * g16 * g16);
}

#[test]
fn coverage_radius_against_bisection() {
    let c = RadioConfig::<f64>::default();
    let r_c = c.coverage_radius().unwrap();
    let oracle = Oracle::new(c.clone());
    assert!((r_c - oracle.radius()).abs() < 1e-6, "{r_c} vs {}", oracle.radius());
    let at_edge = c.sinr_db_at_distance(r_c, LinkState::Blocked).unwrap();
    assert!((at_edge - c.outage_sinr_db).abs() < 1e-9);
}

#[test]
fn coverage_radius_power_scaling() {
    let mut c = RadioConfig::<f64>::default();
    c.bs_elements_h = 2;
    c.bs_elements_v = 2;
    c.carrier_ghz = 140.0;
    let gap = c.height_gap();
    let y = |r: f64| (r * r + gap * gap).sqrt();
    let before = c.coverage_radius().unwrap();
    c.tx_power_w *= 2.0;
    let after = c.coverage_radius().unwrap();
    let ratio = y(after) / y(before);
    assert!((ratio - 2f64.powf(1.0 / 2.1)).abs() < 1e-12);
}

#[test]
fn weak_budget_is_infeasible() {
    let mut c = RadioConfig::<f64>::default();
    c.tx_power_w = 1e-12;
    assert!(matches!(c.coverage_radius(), Err(relq_core::Error::Infeasible(_))));
}

#[test]
fn sinr_cdf_against_monte_carlo() {
    let c = RadioConfig::<f64>::default();
    let r_c = c.coverage_radius().unwrap();
    let dist = c.sinr_distribution(r_c).unwrap();
    let oracle = Oracle::new(c.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let probes_db = [-9.0, -5.0, 0.0, 5.0, 10.0, 20.0, 30.0, 45.0];
    let mut hits = [0usize; 8];
    let n = 10_000_000;
    for _ in 0..n {
        let s = oracle.drop(&mut rng, r_c);
        for (h, p) in hits.iter_mut().zip(probes_db) {
            if s <= p {
                *h += 1;
            }
        }
    }
    for (h, p) in hits.iter().zip(probes_db) {
        let mc = *h as f64 / n as f64;
        let got = c.sinr_cdf(10f64.powf(p / 10.0), r_c).unwrap();
        assert!((got - mc).abs() < 5e-3, "{p} dB: {got} vs {mc}");
    }
    let (lo, _) = dist.support(LinkState::Blocked);
    let (_, hi) = dist.support(LinkState::Clear);
    assert_eq!(dist.cdf(lo * 0.5), 0.0);
    assert_eq!(dist.cdf(hi * 2.0), 1.0);
    assert!(c.sinr_cdf(0.0, r_c).is_err());
}

#[test]
fn sinr_cdf_nondecreasing() {
    let c = RadioConfig::<f64>::default();
    let dist = c.sinr_distribution(800.0).unwrap();
    let mut prev = 0.0;
    for i in 0..2000 {
        let s = 10f64.powf(-2.0 + i as f64 * 0.005);
        let v = dist.cdf(s);
        assert!(v >= prev && (0.0..=1.0).contains(&v));
        prev = v;
    }
}

#[test]
fn demand_pmf_against_monte_carlo() {
    let c = RadioConfig::<f64>::default();
    let pmf = c.demand_pmf(10e6, &McsTable::default()).unwrap();
    let (emp, outage) = empirical_pmf(&c, 10e6, 2_000_000, 3);
    let tv = total_variation(&pmf, &emp);
    assert!(tv < 5e-3, "tv {tv}");
    assert!((pmf.outage_mass() - outage).abs() < 1e-3);
    assert!((pmf.total_mass() - 1.0).abs() < 1e-12);
}

#[test]
fn saturated_link_needs_two_prbs() {
    let mut c = RadioConfig::<f64>::default();
    c.tx_power_w = 1e6;
    let dist = c.sinr_distribution(1.0).unwrap();
    let pmf = dist.demand_pmf(10e6, c.prb_bandwidth_hz, &McsTable::default()).unwrap();
    assert_eq!(pmf.p(2), 1.0);
    assert_eq!(pmf.j_max(), 2);
}

#[test]
fn higher_rate_dominates() {
    let c = RadioConfig::<f64>::default();
    let mcs = McsTable::default();
    let low = c.demand_pmf(10e6, &mcs).unwrap();
    let high = c.demand_pmf(20e6, &mcs).unwrap();
    assert!(high.mean() > low.mean());
    let top = high.j_max().max(low.j_max());
    for k in 0..=top {
        assert!(high.cdf(k) <= low.cdf(k) + 1e-12);
    }
}

#[test]
fn better_link_lowers_mean_demand() {
    let c = RadioConfig::<f64>::default();
    let mcs = McsTable::default();
    let r_c = c.coverage_radius().unwrap();
    let mean_at = |cfg: &RadioConfig<f64>| {
        cfg.sinr_distribution(r_c).unwrap().demand_pmf(10e6, cfg.prb_bandwidth_hz, &mcs).unwrap().mean()
    };
    let base = mean_at(&c);
    let mut louder = c.clone();
    louder.tx_power_w *= 4.0;
    let mut wider = c.clone();
    wider.ue_elements_h = 8;
    assert!(mean_at(&louder) <= base);
    assert!(mean_at(&wider) <= base);
}

#[test]
fn demand_is_monotone_in_rate() {
    let mcs = McsTable::<f64>::default();
    for row in mcs.rows() {
        let j = |rate: f64| (rate / (row.spectral_efficiency * 1.44e6)).ceil();
        for rate in [1e6, 5e6, 10e6, 20e6, 50e6] {
            assert!(j(rate / 2.0) <= j(rate));
        }
    }
}

#[test]
fn denser_blockers_raise_mean_blockage() {
    let mut c = RadioConfig::<f64>::default();
    c.blocker_density = 0.2;
    let r_c = c.coverage_radius().unwrap();
    assert!(r_c > 0.0);
    let pb_dense = c.mean_blockage_probability(r_c).unwrap();
    let pb = RadioConfig::<f64>::default().mean_blockage_probability(r_c).unwrap();
    assert!(pb_dense >= pb);
}
