#![allow(clippy::approx_constant)]

use unmask_core::staircase::{
    levitt_target, run_track, ConstantObserver, LogisticObserver, Observer, Rule, StaircaseConfig, Track,
};

/// Replays a trial log against the rule and step schedule.
fn check_track(t: &Track, cfg: &StaircaseConfig) {
    assert_eq!(t.trials[0].level, cfg.start_level);
    let mut run = 0;
    let mut direction = 0i32;
    let mut reversals = Vec::new();
    for (i, tr) in t.trials.iter().enumerate() {
        assert_eq!(tr.correct, tr.interval == tr.response);
        let mv = if tr.correct {
            run += 1;
            if run == 2 {
                run = 0;
                -1
            } else {
                0
            }
        } else {
            run = 0;
            1
        };
        let reversal = mv != 0 && direction != 0 && mv != direction;
        assert_eq!(tr.reversal, reversal, "trial {}", tr.trial);
        if reversal {
            reversals.push(tr.level);
        }
        if mv != 0 {
            direction = mv;
        }
        let expect_step = match (mv, reversals.len()) {
            (0, _) => 0.0,
            (_, 0) => 5.0,
            (_, 1..=3) => 2.0,
            _ => 1.0,
        };
        assert_eq!(tr.step, expect_step);
        if let Some(next) = t.trials.get(i + 1) {
            assert_eq!(next.level, tr.level + mv as f64 * tr.step);
        }
    }
    assert_eq!(reversals, t.reversal_levels);
    if t.converged {
        // the fourth reversal is the first at the 1 dB step
        assert_eq!(reversals.len(), 3 + 12);
        assert!(t.trials.last().unwrap().reversal);
        let last10 = &reversals[reversals.len() - 10..];
        let mean = last10.iter().sum::<f64>() / 10.0;
        assert!((t.threshold.unwrap() - mean).abs() < 1e-12);
        let mut rev: Vec<f64> = last10.to_vec();
        rev.reverse();
        assert!((rev.iter().sum::<f64>() / 10.0 - mean).abs() < 1e-12);
    }
}

#[test]
fn logistic_observer_converges_on_the_target_point() {
    let cfg = StaircaseConfig::default();
    let p = levitt_target(Rule::TWO_DOWN_ONE_UP).unwrap();
    let obs = LogisticObserver::through(40.0, p, 2.0, 1.0 / 3.0).unwrap();
    let mut sum = 0.0;
    for seed in 0..1000 {
        let t = run_track(&obs, &cfg, seed).unwrap();
        assert!(t.converged);
        check_track(&t, &cfg);
        sum += t.threshold.unwrap();
    }
    let mean = sum / 1000.0;
    assert!((mean - 40.0).abs() <= 1.0, "{mean}");
}

#[test]
fn always_correct_observer_descends_until_the_cap() {
    let cfg = StaircaseConfig::default().with_cap(StaircaseConfig::SAFETY_CAP);
    let t = run_track(&ConstantObserver(1.0), &cfg, 3).unwrap();
    assert!(!t.converged);
    assert_eq!(t.threshold, None);
    assert_eq!(t.trials.len(), 400);
    assert!(t.trials.windows(2).all(|w| w[1].level <= w[0].level));
    assert_eq!(t.trials.last().unwrap().level, 65.0 - 5.0 * 199.0);
    check_track(&t, &cfg);
}

#[test]
fn chance_observer_drifts_upward() {
    let cfg = StaircaseConfig::default();
    let mut downs = 0usize;
    let mut pairs = 0usize;
    for seed in 0..50 {
        let t = run_track(&ConstantObserver(1.0 / 3.0), &cfg, seed).unwrap();
        check_track(&t, &cfg);
        assert!(t.threshold.unwrap() > cfg.start_level);
        downs += t.trials.iter().filter(|tr| tr.step > 0.0 && tr.correct).count();
        pairs += t.trials.iter().filter(|tr| tr.step > 0.0).count();
    }
    // a move is down with probability (1/9) / (1/9 + 2/3 + 2/9) = 1/9
    let frac = downs as f64 / pairs as f64;
    assert!((frac - 1.0 / 9.0).abs() < 0.03, "{frac}");
}

#[test]
fn tracks_are_seeded() {
    let cfg = StaircaseConfig::default();
    let obs = LogisticObserver::through(40.0, 0.7071, 2.0, 1.0 / 3.0).unwrap();
    assert_eq!(run_track(&obs, &cfg, 9).unwrap(), run_track(&obs, &cfg, 9).unwrap());
    assert_ne!(run_track(&obs, &cfg, 9).unwrap(), run_track(&obs, &cfg, 10).unwrap());
    assert!(obs.p_correct(40.0) > 0.7);
}
