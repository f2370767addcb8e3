use std::f64::consts::PI;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use unmask_core::frontend::{analyze, exp_filter, gammatone_for, interaural_cue, FilterbankSpec, FrameGrid};
use unmask_core::stimuli::{critical_bandwidth, BinauralSignal};

const FS: f64 = 44_100.0;

fn tone(f: f64, secs: f64) -> Vec<f64> {
    (0..(secs * FS) as usize).map(|i| (2.0 * PI * f * i as f64 / FS).sin()).collect()
}

#[test]
fn on_frequency_tone_has_flat_envelope() {
    let g = gammatone_for(500.0, FS).unwrap();
    let y = g.filter(&tone(500.0, 0.3));
    let env: Vec<f64> = y[(0.05 * FS) as usize..].iter().map(|c| c.norm()).collect();
    let max = env.iter().cloned().fold(0.0, f64::max);
    let min = env.iter().cloned().fold(f64::MAX, f64::min);
    assert!(20.0 * (max / min).log10() < 0.1);
    // unit sinusoid gives a unit envelope
    assert!((max - 1.0).abs() < 1e-3, "{max}");
}

#[test]
fn off_frequency_rejection() {
    for fc in [300.0, 500.0, 1000.0] {
        let g = gammatone_for(fc, FS).unwrap();
        let cb = critical_bandwidth(fc);
        let level = |f: f64| {
            let y = g.filter(&tone(f, 0.3));
            let tail = &y[(0.1 * FS) as usize..];
            tail.iter().map(|c| c.norm_sqr()).sum::<f64>() / tail.len() as f64
        };
        let on = level(fc);
        for f in [fc - 2.0 * cb, fc + 2.0 * cb] {
            if f > 0.0 {
                let rel = 10.0 * (level(f) / on).log10();
                assert!(rel <= -20.0, "fc {fc}, f {f}: {rel} dB");
            }
        }
    }
}

#[test]
fn impulse_envelope_is_unimodal() {
    let g = gammatone_for(500.0, FS).unwrap();
    let mut x = vec![0.0; 4000];
    x[0] = 1.0;
    let env: Vec<f64> = g.filter(&x).iter().map(|c| c.norm()).collect();
    let peak = env.iter().enumerate().fold((0, 0.0), |b, (i, &v)| if v > b.1 { (i, v) } else { b }).0;
    assert!(peak > 0);
    assert!(env[..=peak].windows(2).all(|w| w[1] >= w[0]));
    assert!(env[peak..].windows(2).all(|w| w[1] <= w[0]));
}

fn mean_coherence_of_independent_noises(hop_s: f64, frames: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let n = ((frames + 3) as f64 * hop_s * FS) as usize;
    let l: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
    let r: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
    let sig = BinauralSignal::new(l, r, FS).unwrap();
    let fb = FilterbankSpec::new(vec![500.0], FS).unwrap();
    let grid = FrameGrid::new(FS, hop_s, sig.len()).unwrap();
    assert!(grid.frames >= frames + 2);
    let cues = &analyze(&sig, &fb, &[grid]).unwrap()[0];
    let rhos: Vec<f64> = cues.cues[0].iter().skip(2).take(frames).map(|c| c.unwrap().rho).collect();
    rhos.iter().sum::<f64>() / rhos.len() as f64
}

/// A 24 ms Hann frame in a 117 Hz wide band holds only one or two
/// independent complex samples, so the magnitude of the normalized
/// correlation of independent noises is biased to about 0.5. Kept as a
/// record of the expectation it fails to meet.
#[test]
#[ignore = "24 ms frames bias zero-lag coherence of independent noises to ~0.54"]
fn independent_noises_mean_coherence_below_0_3_on_24ms_frames() {
    let mean = mean_coherence_of_independent_noises(0.012, 1000);
    assert!(mean < 0.3, "{mean}");
}

#[test]
fn coherence_bias_of_independent_noises_shrinks_with_frame_length() {
    let short = mean_coherence_of_independent_noises(0.012, 1000);
    let long = mean_coherence_of_independent_noises(0.150, 200);
    assert!(long < 0.3, "{long}");
    assert!(long < short);
    assert!(short < 0.7, "{short}");
}

#[test]
fn analyzed_cues_of_antiphasic_and_diotic_tones() {
    let x = tone(500.0, 0.5);
    let neg: Vec<f64> = x.iter().map(|v| -v).collect();
    let fb = FilterbankSpec::new(vec![500.0], FS).unwrap();
    for (right, phi) in [(x.clone(), 0.0), (neg, PI)] {
        let sig = BinauralSignal::new(x.clone(), right, FS).unwrap();
        let grid = FrameGrid::fast(FS, sig.len()).unwrap();
        let c = &analyze(&sig, &fb, &[grid]).unwrap()[0];
        for cue in c.cues[0].iter().skip(5).take(20) {
            let cue = cue.unwrap();
            assert!((cue.rho - 1.0).abs() < 1e-9);
            assert!((cue.phi - phi).abs() < 1e-9);
        }
        // mean power of a unit-amplitude sinusoid
        assert!((c.power[0][0][10] - 0.5).abs() < 1e-3);
    }
}

#[test]
fn hann_frames_are_cola() {
    for fs in [16_000.0, 44_100.0, 48_000.0] {
        for g in [FrameGrid::fast(fs, 100_000).unwrap(), FrameGrid::slow(fs, 100_000).unwrap()] {
            let w = g.window();
            let mut sum = vec![0.0; g.start(g.frames - 1) + g.len];
            for k in 0..g.frames {
                for (i, v) in w.iter().enumerate() {
                    sum[g.start(k) + i] += v;
                }
            }
            for v in &sum[g.hop..sum.len() - g.hop] {
                assert!((v - 1.0).abs() < 1e-6);
            }
        }
    }
}

#[test]
fn exp_filter_step_and_impulse_responses() {
    let hop = 0.012;
    let tau = 0.3;
    // step at frame 10
    let mut x = vec![0.0; 200];
    x[10..].iter_mut().for_each(|v| *v = 1.0);
    let y = exp_filter(&x, tau, hop).unwrap();
    let k = y.iter().position(|&v| v >= 1.0 - (-1.0f64).exp()).unwrap();
    let t = (k - 10) as f64 * hop;
    assert!((t - tau).abs() <= hop, "{t}");
    // constant input stays at the constant
    let settle = (10.0 * tau / hop) as usize;
    let c = vec![2.5; 1000];
    let y = exp_filter(&c, tau, hop).unwrap();
    assert!((y[settle] - 2.5).abs() < 1e-9);
    // isolated impulse: decays by 1/e per tau
    let mut x = vec![0.0; 400];
    x[100] = 1.0;
    let y = exp_filter(&x, tau, hop).unwrap();
    let steps = (tau / hop).round() as usize;
    let ratio = y[100 + steps] / y[100];
    let expect = (-(steps as f64) * hop / tau).exp();
    assert!((ratio - expect).abs() < 1e-12);
    assert!((ratio - (-1.0f64).exp()).abs() < 0.02);
}

#[test]
fn cue_is_gain_invariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let l: Vec<Complex64> = (0..500)
        .map(|_| Complex64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng)))
        .collect();
    let r: Vec<Complex64> = l.iter().map(|v| v * Complex64::from_polar(0.7, 1.1)).collect();
    let base = interaural_cue(&l, &r).unwrap().unwrap();
    assert!((base.phi - (-1.1)).abs() < 1e-12);
    for g in [0.25, 2.0, 8.0] {
        // powers of two scale exactly
        let gl: Vec<Complex64> = l.iter().map(|v| v * g).collect();
        let gr: Vec<Complex64> = r.iter().map(|v| v * g).collect();
        assert_eq!(interaural_cue(&gl, &gr).unwrap().unwrap(), base);
    }
    for g in [1e-3, 0.37, 13.0] {
        let gl: Vec<Complex64> = l.iter().map(|v| v * g).collect();
        let gr: Vec<Complex64> = r.iter().map(|v| v * g).collect();
        let c = interaural_cue(&gl, &gr).unwrap().unwrap();
        assert!((c.rho - base.rho).abs() < 1e-12 && (c.phi - base.phi).abs() < 1e-12);
    }
}
