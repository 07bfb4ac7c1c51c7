#![allow(dead_code)]

use stoclear::io::parse_instance_str;
use stoclear::model::{realized_value, Instance};

/// One bus, one scenario. G1 sits at its day-ahead cap and is marginal upward
/// in real time, so Π = 10 + 0.1. G2 is interior in the day-ahead market and
/// sells back in real time, so π − Π = δ⁻(G2) = 5. The distortion of G1 is
/// therefore 5, far outside [−0.1, 0.1], and both prices are unique.
pub const AT_BOUND_COUNTEREXAMPLE: &str = r#"{
  "name": "at-bound",
  "theta_min_rad": -3.14,
  "theta_max_rad": 3.14,
  "reference_bus": 1,
  "buses": [{ "id": 1 }],
  "participants": [
    { "id": "G1", "kind": "generator", "bus": 1, "bid_usd_per_mwh": 10, "delta_plus_usd_per_mwh": 0.1,
      "delta_minus_usd_per_mwh": 0.1, "x_min_mw": 0, "x_max_mw": 50, "rt_min_mw": 0, "rt_max_mw": 100 },
    { "id": "G2", "kind": "generator", "bus": 1, "bid_usd_per_mwh": 30, "delta_plus_usd_per_mwh": 5,
      "delta_minus_usd_per_mwh": 5, "x_min_mw": 0, "x_max_mw": 100, "rt_min_mw": 0, "rt_max_mw": 100 },
    { "id": "D", "kind": "load", "bus": 1, "bid_usd_per_mwh": 100, "delta_plus_usd_per_mwh": 50,
      "delta_minus_usd_per_mwh": 50, "x_min_mw": -80, "x_max_mw": 0, "rt_min_mw": -80, "rt_max_mw": 0 }
  ],
  "scenarios": [{ "name": "s1", "prob": 1.0, "avail_mw": {} }]
}"#;

pub fn at_bound_counterexample() -> Instance {
    parse_instance_str(AT_BOUND_COUNTEREXAMPLE).expect("counterexample parses")
}

/// Single-bus real-time clearing for fixed day-ahead quantities: fills the
/// cheapest deviation segments first until the bus balances. Returns the
/// scenario cost −Σφ and the real-time quantities, or None if infeasible.
pub fn recourse(inst: &Instance, s: usize, x: &[f64]) -> Option<(f64, Vec<f64>)> {
    let mut big = vec![0.0; x.len()];
    let mut segments = Vec::new();
    let mut total = 0.0;
    for (i, p) in inst.participants.iter().enumerate() {
        let (lo, hi) = inst.rt_bounds(i, s);
        big[i] = lo;
        total += lo;
        let kink = x[i].clamp(lo, hi);
        if kink > lo {
            segments.push((p.c - p.delta_minus, i, kink - lo));
        }
        if hi > kink {
            segments.push((p.c + p.delta_plus, i, hi - kink));
        }
    }
    if total > 1e-12 {
        return None;
    }
    segments.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut need = -total;
    for (_, i, len) in segments {
        if need <= 0.0 {
            break;
        }
        let take = len.min(need);
        big[i] += take;
        need -= take;
    }
    if need > 1e-9 {
        return None;
    }
    let cost = inst
        .participants
        .iter()
        .enumerate()
        .map(|(i, p)| -realized_value(p, x[i], big[i]))
        .sum();
    Some((cost, big))
}

pub struct OracleSolution {
    pub objective: f64,
    pub x: Vec<f64>,
    /// [scenario][participant]
    pub big_x: Vec<Vec<f64>>,
}

/// Brute-force canonical clearing of a single-bus instance. Day-ahead
/// quantities range over breakpoints: each participant's own day-ahead and
/// real-time bounds (availabilities included), and the negated sums of other
/// participants' breakpoints, which is where a real-time marginal unit puts
/// the kink. One participant at a time absorbs the day-ahead balance.
pub fn enumerate_single_bus(inst: &Instance) -> OracleSolution {
    assert!(inst.lines.is_empty() && inst.buses.len() == 1, "oracle handles one bus only");
    let n = inst.participants.len();
    let ns = inst.num_scenarios();
    let own: Vec<Vec<f64>> = inst
        .participants
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let mut v = vec![p.x_min, p.x_max];
            for s in 0..ns {
                let (lo, hi) = inst.rt_bounds(i, s);
                v.push(lo);
                v.push(hi);
            }
            v.sort_by(f64::total_cmp);
            v.dedup();
            v
        })
        .collect();
    let candidates: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let p = &inst.participants[i];
            let mut sums = vec![0.0f64];
            for j in (0..n).filter(|&j| j != i) {
                let mut next = sums.clone();
                for s in &sums {
                    next.extend(own[j].iter().map(|b| s + b));
                }
                sums = next;
            }
            let mut v = own[i].clone();
            v.extend(sums.iter().map(|s| -s));
            v.retain(|&a| a >= p.x_min - 1e-12 && a <= p.x_max + 1e-12);
            v.sort_by(f64::total_cmp);
            v.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
            v
        })
        .collect();

    let probs = inst.probs();
    let mut best = OracleSolution {
        objective: f64::INFINITY,
        x: Vec::new(),
        big_x: Vec::new(),
    };
    for slack in 0..n {
        let others: Vec<usize> = (0..n).filter(|&i| i != slack).collect();
        let mut idx = vec![0usize; others.len()];
        'grid: loop {
            let mut x = vec![0.0; n];
            for (k, &i) in others.iter().enumerate() {
                x[i] = candidates[i][idx[k]];
            }
            x[slack] = -others.iter().map(|&i| x[i]).sum::<f64>();
            let p = &inst.participants[slack];
            if x[slack] >= p.x_min - 1e-12 && x[slack] <= p.x_max + 1e-12 {
                let mut total = 0.0;
                let mut big_x = Vec::with_capacity(ns);
                let mut feasible = true;
                for s in 0..ns {
                    match recourse(inst, s, &x) {
                        Some((cost, big)) => {
                            total += probs[s] * cost;
                            big_x.push(big);
                        }
                        None => {
                            feasible = false;
                            break;
                        }
                    }
                }
                if feasible && total < best.objective - 1e-12 {
                    best = OracleSolution {
                        objective: total,
                        x: x.clone(),
                        big_x,
                    };
                }
            }
            let mut d = 0;
            loop {
                if d == idx.len() {
                    break 'grid;
                }
                idx[d] += 1;
                if idx[d] < candidates[others[d]].len() {
                    break;
                }
                idx[d] = 0;
                d += 1;
            }
        }
    }
    best
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
