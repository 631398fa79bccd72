use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::session::replay;
use crate::task::ModuleMetrics;

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

#[test]
fn ou_noise_has_stationary_sd_and_lag_one_correlation() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut ou = OuNoise3::new(0.4, NOISE_TAU_MS, FRAME_MS as f64, &mut rng);
    let xs: Vec<f64> = (0..200_000).map(|_| ou.sample(&mut rng).x).collect();
    let m = mean(&xs);
    let var = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64;
    let cov = xs.windows(2).map(|w| (w[0] - m) * (w[1] - m)).sum::<f64>() / (xs.len() - 1) as f64;
    assert!((var.sqrt() - 0.4).abs() < 0.02, "sd {}", var.sqrt());
    let rho = (-(FRAME_MS as f64) / NOISE_TAU_MS).exp();
    assert!((cov / var - rho).abs() < 0.01, "lag-1 {} vs {rho}", cov / var);
}

#[test]
fn generation_is_deterministic_in_the_seed() {
    for kind in TaskKind::ALL {
        let a = generate_session(kind, &SkillProfile::NOVICE, 17, 2).unwrap();
        let b = generate_session(kind, &SkillProfile::NOVICE, 17, 2).unwrap();
        assert_eq!(a.header, b.header);
        assert_eq!(a.frames, b.frames);
        assert_eq!(a.events, b.events);
    }
}

#[test]
fn generated_logs_replay_to_completed_reports() {
    for kind in TaskKind::ALL {
        let log = generate_session(kind, &SkillProfile::EXPERT, 3, 1).unwrap();
        let report = replay(&log).unwrap();
        assert!(report.completed, "{kind}");
        assert_eq!(log.header.participant.group, Group::Expert);
        let last = log.frames.last().unwrap().t_ms - log.frames[0].t_ms;
        assert!((report.completion_time_s - last as f64 / 1000.0).abs() < 1e-9);
    }
}

#[test]
fn ideal_trainee_never_touches_the_retina() {
    for kind in TaskKind::ALL {
        let log = generate_session(kind, &SkillProfile::ideal(), 9, 1).unwrap();
        let report = replay(&log).unwrap();
        assert!(report.completed);
        assert_eq!(report.retinal_touches, 0, "{kind}");
    }
}

#[test]
fn participant_traits_are_stable_across_runs() {
    let a = participant_for(42, &SkillProfile::EXPERT, 1);
    let b = participant_for(42, &SkillProfile::EXPERT, 3);
    assert_eq!((a.participant_id.as_str(), a.age, a.sex), (b.participant_id.as_str(), b.age, b.sex));
    assert_eq!(b.run_index, 3);
    assert!(a.age >= 32.0);
    assert!(participant_for(42, &SkillProfile::NOVICE, 1).age < 32.0);
    assert_ne!(session_seed(42, TaskKind::Laser, 1), session_seed(42, TaskKind::Laser, 2));
}

#[test]
fn invalid_profiles_are_rejected() {
    let bad = SkillProfile { caution: 1.5, ..SkillProfile::EXPERT };
    assert_eq!(generate_session(TaskKind::Tremor, &bad, 1, 1).unwrap_err(), TraineeError::InvalidProfile);
    let bad = SkillProfile { tremor_sd_mm: f64::NAN, ..SkillProfile::EXPERT };
    assert!(bad.validate().is_err());
    assert_eq!(SkillProfile::preset("Expert"), Some(SkillProfile::EXPERT));
    assert_eq!(SkillProfile::preset("unknown"), None);
}

#[test]
fn more_tremor_never_lowers_path_deviation() {
    // Least-squares slope of mean deviation on tremor SD over 60 sessions.
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (i, sd) in [0.05, 0.15, 0.25, 0.35, 0.45, 0.55].into_iter().enumerate() {
        let profile = SkillProfile { tremor_sd_mm: sd, ..SkillProfile::EXPERT };
        for s in 0..10 {
            let log = generate_session(TaskKind::Tremor, &profile, 100 * i as u64 + s, 1).unwrap();
            let ModuleMetrics::Tremor { mean_dev_mm, .. } = replay(&log).unwrap().specific else { panic!() };
            xs.push(sd);
            ys.push(mean_dev_mm);
        }
    }
    let (mx, my) = (mean(&xs), mean(&ys));
    let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
        / xs.iter().map(|x| (x - mx) * (x - mx)).sum::<f64>();
    assert!(slope >= 0.0, "slope {slope}");
}

#[test]
fn practice_shortens_sessions_on_average() {
    for kind in [TaskKind::Tremor, TaskKind::Peeling] {
        let times: Vec<f64> = (1..=3)
            .map(|run| {
                let t: Vec<f64> = (0..8)
                    .map(|s| replay(&generate_session(kind, &SkillProfile::EXPERT, 500 + s, run).unwrap()).unwrap().completion_time_s)
                    .collect();
                mean(&t)
            })
            .collect();
        assert!(times[0] >= times[1] && times[1] >= times[2], "{kind}: {times:?}");
    }
}

#[test]
fn cohort_seeds_are_distinct() {
    let seeds = cohort_seeds(7, 10, 10);
    assert_eq!(seeds.len(), 20);
    let mut ids: Vec<u64> = seeds.iter().map(|s| s.0).collect();
    ids.sort_unstable();
    ids.dedup();
    assert_eq!(ids.len(), 20);
    assert_eq!(seeds.iter().filter(|s| s.1 == Group::Expert).count(), 10);
}
