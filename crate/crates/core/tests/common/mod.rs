#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rankone::{ConstructionParams, Stage};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_stage(rng: &mut ChaCha8Rng, cuts: std::ops::RangeInclusive<u64>, spacer_max: u64) -> Stage {
    let p = rng.gen_range(cuts);
    let spacers = (0..p).map(|_| rng.gen_range(0..=spacer_max)).collect();
    Stage::new(p, spacers).unwrap()
}

/// Bounded parameters whose first `depth` cuts multiply to at most `max_q`.
pub fn random_params(rng: &mut ChaCha8Rng, depth: usize, max_q: u64, spacer_max: u64) -> ConstructionParams {
    let mut stages = Vec::with_capacity(depth);
    let mut q = 1u64;
    while stages.len() < depth {
        let st = random_stage(rng, 2..=4, spacer_max);
        if q * st.cut <= max_q {
            q *= st.cut;
            stages.push(st);
        } else {
            let spacers = (0..2).map(|_| rng.gen_range(0..=spacer_max)).collect();
            let st = Stage::new(2, spacers).unwrap();
            q *= 2;
            stages.push(st);
        }
    }
    ConstructionParams::custom(stages).unwrap()
}
