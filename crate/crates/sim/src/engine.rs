use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;

use relq_core::{Error, Result};

use crate::sampler::{draw_index, DemandSampler, MapSampler};
use crate::trace::{EventKind, TraceEvent};
use crate::{Horizon, SimConfig};

/// Outcome of one independent replication, post-warmup.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Replication {
    pub offered: u64,
    pub accepted: u64,
    pub loss: f64,
    pub utilization: f64,
    /// Length of the measurement window, s.
    pub measured_time: f64,
}

/// Scheduled end of a session holding `prbs` blocks.
#[derive(Debug, Clone, Copy)]
struct Departure {
    time: f64,
    seq: u64,
    prbs: usize,
}

impl PartialEq for Departure {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Departure {}

impl PartialOrd for Departure {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

// Reversed so the max-heap pops the earliest departure; ties go to the
// session admitted first.
impl Ord for Departure {
    fn cmp(&self, other: &Self) -> Ordering {
        other.time.total_cmp(&self.time).then_with(|| other.seq.cmp(&self.seq))
    }
}

struct Window {
    measuring: bool,
    start_time: f64,
    /// Time at which measurement starts, time horizons only.
    warm_time: f64,
    area: f64,
}

/// Runs replication `index`. The observer, if any, sees the state after
/// every event.
pub fn run_replication(
    cfg: &SimConfig,
    index: u64,
    mut observer: Option<&mut dyn FnMut(&TraceEvent)>,
) -> Result<Replication> {
    cfg.validate()?;
    let sys = &cfg.system;
    let (servers, prbs) = (sys.servers, sys.prbs);
    let mu = sys.service_rate;
    let map = MapSampler::new(&sys.map);
    let demand = DemandSampler::new(&sys.pmf);

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(index);

    let (arrival_limit, time_limit, warm_arrivals, warm_time) = match cfg.horizon {
        Horizon::Arrivals(n) => (n, f64::INFINITY, (cfg.warmup * n as f64).floor() as u64, f64::INFINITY),
        Horizon::Time(t) => (u64::MAX, t, u64::MAX, cfg.warmup * t),
    };
    let mut win = Window { measuring: warm_arrivals == 0 || warm_time == 0.0, start_time: 0.0, warm_time, area: 0.0 };

    let mut phase = draw_index(&mut rng, sys.map.stationary_distribution());
    let mut now = 0.0;
    let mut heap: BinaryHeap<Departure> = BinaryHeap::new();
    let (mut occupied, mut seq) = (0usize, 0u64);
    let (mut arrivals, mut offered, mut accepted) = (0u64, 0u64, 0u64);

    let advance = |win: &mut Window, now: &mut f64, to: f64, occupied: usize| {
        if !win.measuring && to >= win.warm_time {
            win.measuring = true;
            win.start_time = win.warm_time;
            *now = win.warm_time;
        }
        if win.measuring {
            win.area += occupied as f64 * (to - *now);
        }
        *now = to;
    };

    loop {
        let t_map = now + map.holding_time(&mut rng, phase);
        let next_departure = heap.peek().map(|d| d.time).filter(|&t| t <= t_map);
        let t_next = next_departure.unwrap_or(t_map);
        if t_next > time_limit {
            advance(&mut win, &mut now, time_limit, occupied);
            break;
        }
        advance(&mut win, &mut now, t_next, occupied);

        let kind = if next_departure.is_some() {
            let d = heap.pop().expect("peeked departure");
            occupied -= d.prbs;
            EventKind::Departure
        } else {
            let (next, arrival) = map.transition(&mut rng, phase);
            phase = next;
            if !arrival {
                EventKind::PhaseChange
            } else {
                arrivals += 1;
                let j = demand.sample(&mut rng);
                let admit = heap.len() < servers && occupied + j <= prbs;
                if win.measuring {
                    offered += 1;
                    accepted += u64::from(admit);
                }
                if admit {
                    occupied += j;
                    seq += 1;
                    let hold: f64 = rng.sample(Exp1);
                    heap.push(Departure { time: now + hold / mu, seq, prbs: j });
                    EventKind::Admitted
                } else {
                    EventKind::Lost
                }
            }
        };

        if let Some(obs) = observer.as_deref_mut() {
            obs(&TraceEvent {
                time: now,
                kind,
                phase,
                in_service: heap.len(),
                occupied_prbs: occupied,
                allocated_prbs: heap.iter().map(|d| d.prbs).sum(),
            });
        }

        if matches!(kind, EventKind::Admitted | EventKind::Lost) {
            if arrivals == warm_arrivals && !win.measuring {
                win.measuring = true;
                win.start_time = now;
            }
            if arrivals >= arrival_limit {
                break;
            }
        }
    }

    if offered == 0 {
        return Err(Error::InvalidArgument("horizon too short: no arrivals after warmup".into()));
    }
    let span = now - win.start_time;
    let utilization = if span > 0.0 { win.area / (prbs as f64 * span) } else { 0.0 };
    Ok(Replication {
        offered,
        accepted,
        loss: (offered - accepted) as f64 / offered as f64,
        utilization: utilization.clamp(0.0, 1.0),
        measured_time: span,
    })
}
