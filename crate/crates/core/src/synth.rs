//! Seeded random instances for property checks and benchmarks.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{Bus, Instance, Line, Participant, ParticipantKind, Scenario, ScenarioSet};

#[derive(Debug, Clone, Copy)]
pub struct SynthConfig {
    pub max_buses: usize,
    pub max_participants: usize,
    pub max_scenarios: usize,
    /// every generator gets x_min = X_min = 0
    pub zero_min_generators: bool,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            max_buses: 5,
            max_participants: 8,
            max_scenarios: 10,
            zero_min_generators: true,
        }
    }
}

fn round2(v: f64) -> f64 {
    (v * 100.0).round() / 100.0
}

/// Random connected network with thermal and wind generators and elastic
/// loads. Real-time ranges always contain zero so every instance is feasible
/// when generator minimums are zero.
pub fn random_instance(seed: u64, cfg: &SynthConfig) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nb = rng.gen_range(1..=cfg.max_buses.max(1));
    let buses: Vec<Bus> = (0..nb)
        .map(|b| Bus {
            id: b as u32 + 1,
            name: format!("bus{}", b + 1),
        })
        .collect();

    let mut lines = Vec::new();
    let mut edges = Vec::new();
    for b in 1..nb {
        edges.push((rng.gen_range(0..b), b));
    }
    if nb >= 3 {
        for _ in 0..rng.gen_range(0..=2) {
            let a = rng.gen_range(0..nb);
            let b = rng.gen_range(0..nb);
            if a != b && !edges.iter().any(|&(p, q)| (p, q) == (a, b) || (p, q) == (b, a)) {
                edges.push((a, b));
            }
        }
    }
    for (k, &(a, b)) in edges.iter().enumerate() {
        let cap = if rng.gen_bool(0.6) {
            round2(rng.gen_range(15.0..80.0))
        } else {
            f64::INFINITY
        };
        let rt_cap = if cap.is_finite() { round2(cap * rng.gen_range(1.0..1.3)) } else { cap };
        lines.push(Line {
            name: format!("l{}", k + 1),
            from: a,
            to: b,
            f_min: -cap,
            f_max: cap,
            rt_min: -rt_cap,
            rt_max: rt_cap,
            beta: round2(rng.gen_range(100.0..800.0)),
        });
    }

    let np = rng.gen_range(2..=cfg.max_participants.max(2));
    let n_loads = rng.gen_range(1..np);
    let mut kinds: Vec<ParticipantKind> = (0..np)
        .map(|k| if k < n_loads { ParticipantKind::Load } else { ParticipantKind::Generator })
        .collect();
    kinds.shuffle(&mut rng);

    let mut participants = Vec::with_capacity(np);
    let (mut ng, mut nd) = (0, 0);
    for kind in kinds {
        let bus = rng.gen_range(0..nb);
        let stochastic = rng.gen_bool(0.5);
        let p = match kind {
            ParticipantKind::Generator => {
                ng += 1;
                let wind = stochastic;
                let c = if wind { round2(rng.gen_range(0.5..6.0)) } else { round2(rng.gen_range(8.0..60.0)) };
                let delta_minus = round2(rng.gen_range(0.2..(c.min(12.0))).max(0.1)).min(c);
                let delta_plus = round2(rng.gen_range(0.2..12.0));
                let x_max = round2(rng.gen_range(20.0..120.0));
                let rt_max = round2(x_max * rng.gen_range(1.0..1.25));
                let (x_min, rt_min) = if cfg.zero_min_generators || rng.gen_bool(0.7) {
                    (0.0, 0.0)
                } else {
                    let lo = round2(x_max * rng.gen_range(0.05..0.3));
                    (lo, 0.0)
                };
                Participant {
                    id: format!("{}{}", if wind { "W" } else { "G" }, ng),
                    kind,
                    bus,
                    c,
                    delta_plus,
                    delta_minus,
                    x_min,
                    x_max,
                    rt_min,
                    rt_max,
                    is_stochastic: wind,
                }
            }
            ParticipantKind::Load => {
                nd += 1;
                let demand = round2(rng.gen_range(20.0..110.0));
                Participant {
                    id: format!("D{}", nd),
                    kind,
                    bus,
                    c: round2(rng.gen_range(65.0..140.0)),
                    delta_plus: round2(rng.gen_range(0.2..12.0)),
                    delta_minus: round2(rng.gen_range(0.2..12.0)),
                    x_min: -demand,
                    x_max: 0.0,
                    rt_min: -round2(demand * rng.gen_range(1.1..1.5)),
                    rt_max: 0.0,
                    is_stochastic: stochastic,
                }
            }
        };
        participants.push(p);
    }

    let ns = rng.gen_range(1..=cfg.max_scenarios.max(1));
    let uniform = rng.gen_bool(0.5);
    let mut weights: Vec<f64> = (0..ns)
        .map(|_| if uniform { 1.0 } else { rng.gen_range(0.2..1.0) })
        .collect();
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    // make the weights sum to one exactly
    let head: f64 = weights[..ns - 1].iter().sum();
    weights[ns - 1] = 1.0 - head;

    let scenarios = (0..ns)
        .map(|s| {
            let mut avail = BTreeMap::new();
            for p in participants.iter().filter(|p| p.is_stochastic) {
                let scale = match p.kind {
                    ParticipantKind::Generator => p.rt_max,
                    ParticipantKind::Load => -p.x_min,
                };
                let lo = if p.kind == ParticipantKind::Generator { 0.1 } else { 0.6 };
                avail.insert(p.id.clone(), round2(scale * rng.gen_range(lo..1.3)));
            }
            Scenario {
                name: format!("s{}", s + 1),
                prob: weights[s],
                avail,
            }
        })
        .collect();

    Instance {
        name: format!("random-{seed}"),
        buses,
        lines,
        participants,
        scenarios: ScenarioSet { scenarios },
        theta_min: -std::f64::consts::PI,
        theta_max: std::f64::consts::PI,
        reference_bus: 0,
        fixture_complete: false,
    }
}

/// Single-bus variant with no lines, used by the enumeration oracle.
pub fn random_one_bus_instance(seed: u64, max_participants: usize, max_scenarios: usize) -> Instance {
    let cfg = SynthConfig {
        max_buses: 1,
        max_participants,
        max_scenarios,
        zero_min_generators: true,
    };
    random_instance(seed, &cfg)
}
