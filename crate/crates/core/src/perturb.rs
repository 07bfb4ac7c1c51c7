//! Perturbation mode for dual-uniqueness checks. Never used for reported
//! settlements.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::formulations::Injections;
use crate::model::Instance;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Perturbation {
    pub seed: u64,
    /// relative jitter on bids and premiums
    pub cost_scale: f64,
    /// MW bound on each balance-row injection
    pub injection_mw: f64,
}

impl Perturbation {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            cost_scale: 1e-7,
            injection_mw: 1e-5,
        }
    }

    /// Jitters c, δ⁺ and δ⁻ of every participant by at most `cost_scale`
    /// relative. Premiums stay positive.
    pub fn jitter_costs(&self, inst: &Instance) -> Instance {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut out = inst.clone();
        let mut jig = |v: f64| v * (1.0 + self.cost_scale * rng.gen_range(-1.0..1.0));
        for p in out.participants.iter_mut() {
            p.c = jig(p.c);
            p.delta_plus = jig(p.delta_plus);
            p.delta_minus = jig(p.delta_minus);
        }
        out
    }

    /// Random injections, identical for every formulation built from the
    /// same instance and seed.
    pub fn injections(&self, inst: &Instance) -> Injections {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed.wrapping_add(0x9e37_79b9_7f4a_7c15));
        let nb = inst.buses.len();
        let e = self.injection_mw;
        let day_ahead = (0..nb).map(|_| rng.gen_range(-e..e)).collect();
        let real_time = (0..inst.num_scenarios())
            .map(|_| (0..nb).map(|_| rng.gen_range(-e..e)).collect())
            .collect();
        Injections { day_ahead, real_time }
    }
}
