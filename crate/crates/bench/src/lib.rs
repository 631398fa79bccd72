//! Fixtures shared by the benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use retsim::analytics::FixedEffect;
use retsim::session::SessionLog;
use retsim::task::TaskKind;
use retsim::trainee::{generate_session, SkillProfile};

/// Random-intercept data in the shape of the skill study: `participants`
/// people, three runs each, all five fixed effects. Returns `(y, x, groups)`
/// with `x` row-major.
pub fn lmm_dataset(seed: u64, participants: usize) -> (Vec<f64>, Vec<f64>, Vec<usize>) {
    let beta = [60.0, 10.0, 0.3, -4.0, -7.67];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut y, mut x, mut g) = (Vec::new(), Vec::new(), Vec::new());
    for p in 0..participants {
        let novice = f64::from(u8::from(p % 2 == 0));
        let age: f64 = rng.random_range(22.0..65.0);
        let male = f64::from(u8::from(rng.random_bool(0.5)));
        let b = 6.0 * rng.sample::<f64, _>(StandardNormal);
        for run in 1..=3 {
            let row = [1.0, novice, age, male, f64::from(run)];
            let mean: f64 = row.iter().zip(&beta).map(|(a, b)| a * b).sum();
            y.push(mean + b + 8.0 * rng.sample::<f64, _>(StandardNormal));
            x.extend_from_slice(&row);
            g.push(p);
        }
    }
    (y, x, g)
}

pub const LMM_TERMS: [FixedEffect; 5] = FixedEffect::ALL;

/// A complete synthetic expert session.
pub fn fixture_session(kind: TaskKind, seed: u64) -> SessionLog {
    generate_session(kind, &SkillProfile::EXPERT, seed, 1).expect("expert sessions complete")
}
