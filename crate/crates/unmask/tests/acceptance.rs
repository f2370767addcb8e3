//! Acceptance report: one PASS/FAIL line per criterion.
//!
//! Runs without the test harness so the report is always printed. The run
//! only fails when a check cannot be evaluated at all, or, with
//! `UNMASK_ACCEPTANCE_STRICT=1`, when any criterion fails. Set
//! `UNMASK_BRAASCH_DATA` to a measured-threshold CSV to evaluate the Braasch
//! RMSE comparison.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use unmask::artifact::read_csv;
use unmask::runner::run_parallel;
use unmask::tables::{evaluate_tables, MeasuredRow};
use unmask_core::acoustics::{
    compute_image_sources, direct_window, manipulate_rir, reverberation_time, Absorption, IsmOptions, Manipulation, Rir,
    Room,
};
use unmask_core::binaural::render_point_source;
use unmask_core::experiments::{
    build_braasch_conditions, build_paper_conditions, build_zurek_conditions, ic_timeseries, reference_drr_db,
    reference_rt60, render_source, ResultRow, RoomSetup, BRAASCH_ALPHA,
    DEFAULT_SEED, PAPER_ALPHAS, PAPER_TIMES_MS, ZUREK_ALPHAS,
};
use unmask_core::frontend::{exp_filter, FilterbankSpec, FrameGrid};
use unmask_core::math::power_db;
use unmask_core::model::{bmld_ratio, k_factor, predict, ModelConfig, Variant};
use unmask_core::staircase::{levitt_target, run_track, LogisticObserver, Rule, StaircaseConfig, Track};
use unmask_core::stimuli::{spatialize, BinauralSignal, HctSpec};
use unmask_core::Vec3;

const FS: f64 = 44_100.0;

struct Report {
    lines: Vec<(String, bool, String)>,
}

impl Report {
    fn add(&mut self, id: &str, pass: bool, detail: String) {
        println!("criterion {id}: {} | {detail}", if pass { "PASS" } else { "FAIL" });
        self.lines.push((id.into(), pass, detail));
    }
}

fn yes(b: bool) -> &'static str {
    if b {
        "ok"
    } else {
        "FAIL"
    }
}

// 1 -----------------------------------------------------------------------

fn criterion_1(r: &mut Report) {
    // independent evaluation of (1 + s_e^2) exp((2 pi f s_d)^2)
    let oracle = 1.0625 * ((2.0 * PI * 500.0 * 0.105e-3f64).powi(2)).exp();
    let k = k_factor(500.0, 0.25, 0.105e-3);
    let cfg_k = ModelConfig::fast().k(500.0);
    let n0s0 = power_db(bmld_ratio(0.0, 0.0, 1.0, k));
    let n0spi = power_db(bmld_ratio(PI, 0.0, 1.0, k));
    let ok_k = (k - 1.1846).abs() <= 1e-4 && (k - oracle).abs() < 1e-12 && cfg_k == k;
    let ok_0 = n0s0 == 0.0;
    let ok_pi = (n0spi - 10.73).abs() <= 0.01;
    r.add(
        "1",
        ok_k && ok_0 && ok_pi,
        format!("k(500) = {k:.5} {}; N0S0 = {n0s0} dB {}; N0Spi = {n0spi:.3} dB {}", yes(ok_k), yes(ok_0), yes(ok_pi)),
    );
}

// 2 -----------------------------------------------------------------------

/// Shoebox images along one axis are `2kL + s` (|2k| reflections) and
/// `2kL - s` (|2k - 1| reflections).
fn lattice(dims: [f64; 3], src: [f64; 3], max_order: usize) -> Vec<(Vec3, usize)> {
    let axis = |l: f64, s: f64| -> Vec<(f64, usize)> {
        let n = max_order as i64;
        let mut v = Vec::new();
        for k in -n..=n {
            let (a, b) = ((2 * k).unsigned_abs() as usize, (2 * k - 1).unsigned_abs() as usize);
            if a <= max_order {
                v.push((2.0 * k as f64 * l + s, a));
            }
            if b <= max_order {
                v.push((2.0 * k as f64 * l - s, b));
            }
        }
        v
    };
    let (xs, ys, zs) = (axis(dims[0], src[0]), axis(dims[1], src[1]), axis(dims[2], src[2]));
    let mut out = Vec::new();
    for &(x, ox) in &xs {
        for &(y, oy) in &ys {
            for &(z, oz) in &zs {
                if ox + oy + oz <= max_order {
                    out.push((Vec3::new(x, y, z), ox + oy + oz));
                }
            }
        }
    }
    out
}

fn criterion_2(r: &mut Report) {
    let cases = [
        ([5.0, 6.0, 3.0], [1.3, 4.1, 1.7], [2.2, 1.1, 1.2]),
        ([4.8, 6.6, 2.6], [2.03, 3.51, 1.32], [2.0, 2.5, 1.21]),
        ([3.1, 2.2, 2.9], [0.41, 1.73, 2.11], [2.52, 0.33, 0.67]),
    ];
    let mut fails = Vec::new();
    let mut checked = 0;
    for (dims, s, c) in cases {
        let room = Room::shoebox(dims[0], dims[1], dims[2], Absorption::flat(0.3).unwrap()).unwrap();
        for order in 0..=4 {
            let set = compute_image_sources(
                &room,
                Vec3::new(s[0], s[1], s[2]),
                Vec3::new(c[0], c[1], c[2]),
                &IsmOptions::with_max_order(order),
            )
            .unwrap();
            let oracle = lattice(dims, s, order);
            let matched = oracle.iter().all(|(p, o)| {
                let hits: Vec<_> = set.images.iter().filter(|i| i.position.distance(*p) < 1e-9).collect();
                hits.len() == 1 && hits[0].order == *o
            });
            checked += 1;
            if set.len() != oracle.len() || !matched {
                fails.push(format!("{dims:?} order {order}: {} vs {}", set.len(), oracle.len()));
            }
        }
    }
    r.add(
        "2",
        fails.is_empty(),
        format!("{checked} room/order cases against lattice enumeration; mismatches: {fails:?}"),
    );
}

// 3 -----------------------------------------------------------------------

fn criterion_3(r: &mut Report) {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let n = (2.0 * FS) as usize;
    let x: Vec<f64> = (0..n)
        .map(|i| (rng.random::<f64>() - 0.5) * (-(i as f64 / FS) / 0.1).exp())
        .collect();
    let synthetic = Rir {
        channels: vec![x],
        fs: FS,
        direct_time: vec![Some(0.0)],
        manipulation: Manipulation::None,
        tail_seed: None,
    };
    let t = reverberation_time(&synthetic).unwrap() * 1e3;
    let ok_syn = (t - 691.0).abs() <= 10.0;
    let mut parts = vec![format!("synthetic tau=100 ms: {t:.1} ms {}", yes(ok_syn))];
    let mut pass = ok_syn;
    let setup = RoomSetup::paper().unwrap();
    for &alpha in &PAPER_ALPHAS {
        let conds = build_paper_conditions(1, DEFAULT_SEED).unwrap();
        for az in [0.0, 60.0] {
            let c = conds.iter().find(|c| c.alpha == alpha && c.target.azimuth_deg == az).unwrap();
            let full = render_source(&setup, alpha, &c.target, c.head_radius, c.fs, c.max_order).unwrap();
            let a = unmask_core::acoustics::analyze_rir(&full).unwrap();
            let rt = a.rt60.unwrap_or(f64::NAN);
            let want_rt = reference_rt60(alpha).unwrap();
            let want_drr = reference_drr_db(alpha, az).unwrap();
            let ok_rt = (rt - want_rt).abs() <= 0.05 * want_rt;
            let ok_drr = (a.drr_db - want_drr).abs() <= 2.0;
            pass &= ok_rt && ok_drr;
            parts.push(format!(
                "a={alpha} az={az}: RT60 {:.0} ms (want {:.0} +-5%) {}, DRR {:.2} dB (want {want_drr}) {}",
                rt * 1e3,
                want_rt * 1e3,
                yes(ok_rt),
                a.drr_db,
                yes(ok_drr)
            ));
        }
    }
    r.add("3", pass, parts.join("; "));
}

// 4 to 7 --------------------------------------------------------------------

type Key = (String, u64, i64, String, i64, Variant);

fn key(exp: &str, alpha: f64, az: f64, mode: &str, t_ms: f64, v: Variant) -> Key {
    (exp.into(), (alpha * 1000.0).round() as u64, az.round() as i64, mode.into(), t_ms.round() as i64, v)
}

fn index(rows: &[ResultRow]) -> BTreeMap<Key, ResultRow> {
    rows.iter()
        .map(|r| {
            (
                key(&r.experiment, r.alpha, r.azimuth_deg, &r.mode, r.t_ms.unwrap_or(-1.0), r.variant),
                r.clone(),
            )
        })
        .collect()
}

fn criterion_4(r: &mut Report, rows: &BTreeMap<Key, ResultRow>) {
    let b = |alpha: f64, t: f64| rows[&key("exp1", alpha, 0.0, "truncate", t, Variant::Fast)].benefit_db;
    let mut pass = true;
    let mut parts = Vec::new();
    for &alpha in &PAPER_ALPHAS {
        let rise = b(alpha, 45.0) - b(alpha, 15.0);
        let plateau = (b(alpha, 150.0) - b(alpha, 500.0)).abs();
        pass &= rise >= 4.0 && plateau <= 1.5;
        parts.push(format!(
            "a={alpha}: b45-b15 = {rise:.2} dB (>= 4) {}, |b150-b500| = {plateau:.2} dB (<= 1.5) {}",
            yes(rise >= 4.0),
            yes(plateau <= 1.5)
        ));
    }
    r.add("4", pass, parts.join("; "));
}

fn criterion_5(r: &mut Report, rows: &BTreeMap<Key, ResultRow>) {
    let b = |alpha: f64, az: f64, t: f64| rows[&key("exp1", alpha, az, "truncate", t, Variant::Fast)].benefit_db;
    let mut pass = true;
    let mut parts = Vec::new();
    for &alpha in &PAPER_ALPHAS {
        let vals: Vec<f64> = PAPER_TIMES_MS.iter().map(|&t| b(alpha, 60.0, t)).collect();
        let range = vals.iter().cloned().fold(f64::MIN, f64::max) - vals.iter().cloned().fold(f64::MAX, f64::min);
        let gap = b(alpha, 60.0, 15.0) - b(alpha, 0.0, 15.0);
        let (ok_r, ok_g) = (range <= 3.0, (gap - 15.0).abs() <= 5.0);
        pass &= ok_r && ok_g;
        parts.push(format!(
            "a={alpha}: 60 deg range {range:.2} dB (<= 3) {}, direct-only 60 minus 0 deg = {gap:.2} dB (15 +-5) {}",
            yes(ok_r),
            yes(ok_g)
        ));
    }
    r.add("5", pass, parts.join("; "));
}

fn criterion_6(r: &mut Report, rows: &BTreeMap<Key, ResultRow>) {
    let b = |t: f64, v: Variant| rows[&key("exp2", 0.1, 0.0, "cut", t, v)].benefit_db;
    let mut pass = true;
    let mut parts = Vec::new();
    for t in [150.0, 250.0, 500.0] {
        let d = b(t, Variant::Fast) - b(t, Variant::Slow);
        pass &= d >= 2.0;
        parts.push(format!("cut {t} ms: fast-slow = {d:.2} dB (>= 2) {}", yes(d >= 2.0)));
    }
    let direct = rows[&key("exp1", 0.1, 0.0, "truncate", 15.0, Variant::Fast)].benefit_db;
    let late = b(250.0, Variant::Fast) - direct;
    pass &= late >= 2.0;
    parts.push(format!("fast(cut 250) - fast(direct only) = {late:.2} dB (>= 2) {}", yes(late >= 2.0)));

    // same physical responses must give the same benefit
    let mut same = Vec::new();
    for &alpha in &PAPER_ALPHAS {
        for v in Variant::BOTH {
            let d1 = (rows[&key("exp1", alpha, 0.0, "truncate", 500.0, v)].benefit_db
                - rows[&key("exp2", alpha, 0.0, "cut", 15.0, v)].benefit_db)
                .abs();
            let d2 = (rows[&key("exp2", alpha, 0.0, "cut", 500.0, v)].benefit_db
                - rows[&key("exp1", alpha, 0.0, "truncate", 15.0, v)].benefit_db)
                .abs();
            same.push(d1.max(d2));
        }
    }
    let worst = same.iter().cloned().fold(0.0, f64::max);
    parts.push(format!(
        "(invariant) truncate 500 = cut 15 and cut 500 = truncate 15 within {worst:.3} dB (<= 0.1) {}",
        yes(worst <= 0.1)
    ));
    pass &= worst <= 0.1;
    r.add("6", pass, parts.join("; "));
}

fn criterion_7(r: &mut Report, rows: &BTreeMap<Key, ResultRow>) {
    let ic = |t: f64| rows[&key("exp1", 0.1, 0.0, "truncate", t, Variant::Fast)].mean_ic.unwrap_or(f64::NAN);
    let early: Vec<f64> = [15.0, 20.0, 45.0, 75.0].iter().map(|&t| ic(t)).collect();
    let decreasing = early.windows(2).all(|w| w[1] < w[0]);
    let late: Vec<f64> = [75.0, 150.0, 250.0, 500.0].iter().map(|&t| ic(t)).collect();
    let spread = late.iter().cloned().fold(f64::MIN, f64::max) - late.iter().cloned().fold(f64::MAX, f64::min);

    // anechoic frontal source: every frame with target energy
    let head = RoomSetup::paper().unwrap().head(0.0875).unwrap();
    let dry = unmask_core::stimuli::synth_hct(&HctSpec::default(), FS).unwrap();
    let brir = render_point_source(0.0, 5.0, &head, FS).unwrap();
    let sig = spatialize(&dry, &brir).unwrap();
    let grid = FrameGrid::fast(FS, sig.len()).unwrap();
    let frames = ic_timeseries(&sig, &grid).unwrap();
    let voiced: Vec<f64> = frames.iter().flatten().copied().collect();
    let min_anechoic = voiced.iter().cloned().fold(f64::MAX, f64::min);
    let ok_a = !voiced.is_empty() && min_anechoic >= 0.99;
    let pass = decreasing && spread <= 0.05 && ok_a;
    r.add(
        "7",
        pass,
        format!(
            "IC 15/20/45/75 ms = {:.3?} strictly decreasing {}; 75-500 ms spread {spread:.3} (<= 0.05) {}; anechoic min IC over {} frames = {min_anechoic:.4} (>= 0.99) {}",
            early,
            yes(decreasing),
            yes(spread <= 0.05),
            voiced.len(),
            yes(ok_a)
        ),
    );
}

// 8 -----------------------------------------------------------------------

fn criterion_8(r: &mut Report) {
    let braasch = run_parallel(
        &build_braasch_conditions(BRAASCH_ALPHA, true, DEFAULT_SEED).unwrap(),
        &Variant::BOTH,
        0,
    )
    .unwrap();
    let thr = |v: Variant| -> Vec<f64> { braasch.iter().filter(|r| r.variant == v).map(|r| r.threshold_db).collect() };
    let fast = thr(Variant::Fast);
    let slow = thr(Variant::Slow);
    let ok_b = fast.windows(2).all(|w| w[1] < w[0]);

    let zurek = run_parallel(&build_zurek_conditions(&ZUREK_ALPHAS, DEFAULT_SEED).unwrap(), &[Variant::Fast], 0).unwrap();
    let zb: Vec<f64> = zurek.iter().map(|r| r.benefit_db).collect();
    let ok_z = zb.windows(2).all(|w| w[1] < w[0]);

    let mut parts = vec![
        format!(
            "Braasch fast thresholds at 0/2/20 deg = {fast:.2?} dB strictly decreasing {} (slow {slow:.2?})",
            yes(ok_b)
        ),
        format!("Zurek fast benefit re monaural at alpha {ZUREK_ALPHAS:?} = {zb:.2?} dB decreasing {}", yes(ok_z)),
    ];
    let mut pass = ok_b && ok_z;
    match std::env::var_os("UNMASK_BRAASCH_DATA") {
        Some(p) => {
            let data: Vec<MeasuredRow> = read_csv(Path::new(&p)).unwrap();
            let rep = evaluate_tables(&braasch, &data).unwrap();
            let m = &rep["braasch"];
            let (rf, rs) = (m[&Variant::Fast].rmse, m[&Variant::Slow].rmse);
            pass &= rf <= rs;
            parts.push(format!("Braasch RMSE fast {rf:.2} dB <= slow {rs:.2} dB {}", yes(rf <= rs)));
        }
        None => parts.push("Braasch RMSE not evaluated: set UNMASK_BRAASCH_DATA to a digitized CSV".into()),
    }
    r.add("8", pass, parts.join("; "));
}

// 9 -----------------------------------------------------------------------

fn track_ok(t: &Track, cfg: &StaircaseConfig) -> bool {
    let mut run = 0;
    let mut dir = 0i32;
    let mut revs = Vec::new();
    for (i, tr) in t.trials.iter().enumerate() {
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
        let reversal = mv != 0 && dir != 0 && mv != dir;
        if reversal != tr.reversal {
            return false;
        }
        if reversal {
            revs.push(tr.level);
        }
        if mv != 0 {
            dir = mv;
        }
        let step = match (mv, revs.len()) {
            (0, _) => 0.0,
            (_, 0) => 5.0,
            (_, 1..=3) => 2.0,
            _ => 1.0,
        };
        if tr.step != step {
            return false;
        }
        if let Some(next) = t.trials.get(i + 1) {
            if next.level != tr.level + mv as f64 * step {
                return false;
            }
        }
    }
    let final_step = revs.len().saturating_sub(3);
    t.converged
        && t.trials[0].level == cfg.start_level
        && final_step == 12
        && revs == t.reversal_levels
        && (t.threshold.unwrap() - revs[revs.len() - 10..].iter().sum::<f64>() / 10.0).abs() < 1e-12
}

fn criterion_9(r: &mut Report) {
    let cfg = StaircaseConfig::default();
    let p = levitt_target(Rule::TWO_DOWN_ONE_UP).unwrap();
    let obs = LogisticObserver::through(40.0, p, 2.0, 1.0 / 3.0).unwrap();
    let tracks: Vec<Track> = (0..1000).map(|s| run_track(&obs, &cfg, s).unwrap()).collect();
    let bad = tracks.iter().filter(|t| !track_ok(t, &cfg)).count();
    let mean = tracks.iter().filter_map(|t| t.threshold).sum::<f64>() / tracks.len() as f64;
    let ok_m = (mean - 40.0).abs() <= 1.0;
    r.add(
        "9",
        ok_m && bad == 0,
        format!(
            "1000 tracks, mean threshold {mean:.3} dB (40 +-1) {}; tracks violating rule/schedule: {bad}",
            yes(ok_m)
        ),
    );
}

// 10 ----------------------------------------------------------------------

fn dir_bytes(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&p).unwrap())
        })
        .collect()
}

fn criterion_10(r: &mut Report) {
    let cond = tempfile::NamedTempFile::new().unwrap();
    let spec = &build_paper_conditions(1, DEFAULT_SEED).unwrap()[2];
    fs::write(cond.path(), serde_json::to_string(spec).unwrap()).unwrap();
    let cond_path = cond.path().to_str().unwrap().to_string();
    let commands: Vec<Vec<&str>> = vec![
        vec!["rir", "--room", "paper", "--alpha", "0.5", "--src-az", "60", "--cut", "20"],
        vec!["stimuli", "--kind", "hct"],
        vec!["stimuli", "--kind", "uen"],
        vec!["predict", "--condition", &cond_path],
        vec!["experiment", "--exp", "2", "--variant", "both"],
        vec!["ic", "--alpha", "0.5"],
        vec!["staircase", "--tracks", "20"],
        vec!["replicate", "braasch"],
    ];
    let mut bad = Vec::new();
    for args in &commands {
        let d = tempfile::tempdir().unwrap();
        let run = || {
            let o = Command::new(env!("CARGO_BIN_EXE_unmask"))
                .arg("--out")
                .arg(d.path())
                .args(args)
                .output()
                .unwrap();
            assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
            dir_bytes(d.path())
        };
        let first = run();
        let second = run();
        if first != second || first.len() < 2 {
            bad.push(args[0]);
        }
    }
    r.add(
        "10",
        bad.is_empty(),
        format!("{} commands rerun with the same manifest; differing outputs: {bad:?}", commands.len()),
    );
}

// 11 ----------------------------------------------------------------------

fn noise(n: usize, seed: u64) -> Vec<f64> {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| r.random::<f64>() - 0.5).collect()
}

fn criterion_11(r: &mut Report) {
    let mut runner = TestRunner::new(Config {
        cases: 32,
        failure_persistence: None,
        ..Config::default()
    });
    let mut results = Vec::new();

    let gain = runner.run(&(0u64..1000, -3.0f64..3.0, any::<bool>()), |(seed, lg, slow)| {
        let fs = 16_000.0;
        let x = noise(8000, seed);
        let m = noise(8000, seed + 1);
        let t = BinauralSignal::new(x.clone(), x.iter().map(|v| -0.5 * v).collect(), fs).unwrap();
        let mk = BinauralSignal::new(m.clone(), m, fs).unwrap();
        let v = if slow { Variant::Slow } else { Variant::Fast };
        let cfg = ModelConfig::new(v).with_filterbank(FilterbankSpec::new(vec![400.0, 800.0], fs).unwrap());
        let base = predict(&t, &mk, &cfg).unwrap().benefit_db;
        let (mut t2, mut m2) = (t.clone(), mk.clone());
        t2.scale(10f64.powf(lg));
        m2.scale(10f64.powf(lg));
        prop_assert!((predict(&t2, &m2, &cfg).unwrap().benefit_db - base).abs() < 1e-6);
        Ok(())
    });
    results.push(("predict gain invariance", gain.is_ok()));

    let partition = runner.run(&(0u64..1000, 100usize..3000, 0.001f64..0.01, 0.0f64..80.0), |(seed, len, td, extra)| {
        let rir = Rir {
            channels: vec![noise(len, seed), noise(len, seed + 9)],
            fs: FS,
            direct_time: vec![Some(td), Some(td + 0.0004)],
            manipulation: Manipulation::None,
            tail_seed: None,
        };
        let t_ms = (td + 0.0004) * 1e3 + extra;
        let tr = manipulate_rir(&rir, Manipulation::Truncate { t_ms }).unwrap();
        let cu = manipulate_rir(&rir, Manipulation::Cut { t_ms }).unwrap();
        for ch in 0..2 {
            let head_end = direct_window(rir.direct_time[ch].unwrap(), FS).1.min(len);
            for i in 0..len {
                let head = if i < head_end { rir.channels[ch][i] } else { 0.0 };
                prop_assert_eq!(tr.channels[ch][i] + cu.channels[ch][i] - head, rir.channels[ch][i]);
            }
        }
        Ok(())
    });
    results.push(("truncate/cut partition", partition.is_ok()));

    let cola = runner.run(&(1.0f64..200.0), |hop_ms| {
        let g = FrameGrid::new(FS, hop_ms * 1e-3, 1).unwrap();
        let w = g.window();
        for k in 0..g.hop {
            prop_assert!((w[k] + w[k + g.hop] - 1.0).abs() < 1e-12);
        }
        Ok(())
    });
    results.push(("Hann COLA", cola.is_ok()));

    let dc = runner.run(&(-1e3f64..1e3, 0.01f64..2.0, 0.001f64..0.3, 1usize..300), |(level, tau, hop, n)| {
        let y = exp_filter(&vec![level; n], tau, hop).unwrap();
        prop_assert!(y.iter().all(|v| (v - level).abs() <= 1e-9 * level.abs().max(1.0)));
        Ok(())
    });
    results.push(("exp_filter DC gain", dc.is_ok()));

    let pass = results.iter().all(|r| r.1);
    let detail = results
        .iter()
        .map(|(n, ok)| format!("{n} {}", yes(*ok)))
        .collect::<Vec<_>>()
        .join(", ");
    r.add("11", pass, format!("32 generated cases each: {detail} (full suites: tests/properties.rs)"));
}

fn main() {
    // libtest flags such as --list must not trigger the full run
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let start = Instant::now();
    let mut r = Report { lines: Vec::new() };
    criterion_1(&mut r);
    criterion_2(&mut r);
    criterion_3(&mut r);

    let mut conditions = build_paper_conditions(1, DEFAULT_SEED).unwrap();
    conditions.extend(build_paper_conditions(2, DEFAULT_SEED).unwrap());
    let rows = index(&run_parallel(&conditions, &Variant::BOTH, 0).unwrap());
    criterion_4(&mut r, &rows);
    criterion_5(&mut r, &rows);
    criterion_6(&mut r, &rows);
    criterion_7(&mut r, &rows);
    criterion_8(&mut r);
    criterion_9(&mut r);
    criterion_10(&mut r);
    criterion_11(&mut r);

    let failed: Vec<&str> = r.lines.iter().filter(|l| !l.1).map(|l| l.0.as_str()).collect();
    println!(
        "acceptance: {} of {} criteria pass; failing: {failed:?} ({:.0} s)",
        r.lines.len() - failed.len(),
        r.lines.len(),
        start.elapsed().as_secs_f64()
    );
    if !failed.is_empty() && std::env::var_os("UNMASK_ACCEPTANCE_STRICT").is_some() {
        std::process::exit(1);
    }
}
