use unmask_core::fft::rfft_padded;
use unmask_core::math::power_db;
use unmask_core::stimuli::{
    bark_to_hz, critical_bandwidth, synth_hct, synth_noise, synth_uen, HctSpec, NoiseSpec, Signal,
};

const FS: f64 = 44_100.0;

/// Power spectrum |X(f)|^2 and bin spacing.
fn power_spectrum(s: &Signal, n: usize) -> (Vec<f64>, f64) {
    let x = rfft_padded(&s.samples, n);
    (x[..n / 2].iter().map(|c| c.norm_sqr()).collect(), s.fs / n as f64)
}

fn band_power(ps: &[f64], df: f64, lo: f64, hi: f64) -> f64 {
    ps.iter()
        .enumerate()
        .filter(|(k, _)| {
            let f = *k as f64 * df;
            f >= lo && f < hi
        })
        .map(|(_, p)| p)
        .sum()
}

#[test]
fn hct_components_are_the_seven_harmonics() {
    let s = synth_hct(&HctSpec::default(), FS).unwrap();
    // components are read from the steady-state part through a 4-term
    // Blackman-Harris window, whose sidelobes stay below -92 dB
    let start = (0.06 * FS) as usize;
    let len = (0.4 * FS) as usize;
    let w = |i: usize| {
        let x = 2.0 * std::f64::consts::PI * i as f64 / (len - 1) as f64;
        0.35875 - 0.48829 * x.cos() + 0.14128 * (2.0 * x).cos() - 0.01168 * (3.0 * x).cos()
    };
    let seg = Signal::new((0..len).map(|i| s.samples[start + i] * w(i)).collect(), FS).unwrap();
    let (ps, df) = power_spectrum(&seg, 1 << 17);
    let peak = ps.iter().cloned().fold(0.0, f64::max);
    // local maxima above -60 dB must be the harmonics
    for k in 1..ps.len() - 1 {
        if ps[k] > ps[k - 1] && ps[k] >= ps[k + 1] && power_db(ps[k] / peak) > -60.0 {
            let f = k as f64 * df;
            let nearest = (f / 50.0).round() * 50.0;
            assert!((f - nearest).abs() < 1.0, "unexpected peak at {f} Hz");
            assert!((350.0..=650.0).contains(&nearest), "unexpected peak at {f} Hz");
        }
    }
    for h in 7..=13 {
        let f = h as f64 * 50.0;
        let k = (f / df).round() as usize;
        let local = ps[k - 3..=k + 3].iter().cloned().fold(0.0, f64::max);
        assert!(power_db(local / peak) > -3.0, "harmonic {f} Hz missing");
    }
}

#[test]
fn hct_equal_power_per_critical_band() {
    let s = synth_hct(&HctSpec::default(), FS).unwrap();
    let (ps, df) = power_spectrum(&s, 1 << 16);
    // bands centered on the inner harmonics each hold three components; the
    // outermost (350, 650 Hz) only have one in-range neighbour
    let levels: Vec<f64> = [400.0, 450.0, 500.0, 550.0, 600.0]
        .iter()
        .map(|&fc| {
            let cb = critical_bandwidth(fc);
            power_db(band_power(&ps, df, fc - cb / 2.0, fc + cb / 2.0))
        })
        .collect();
    let max = levels.iter().cloned().fold(f64::MIN, f64::max);
    let min = levels.iter().cloned().fold(f64::MAX, f64::min);
    assert!(max - min <= 2.0, "{levels:?}");
    for l in &levels {
        assert!((l - levels[2]).abs() <= 1.0, "{levels:?}");
    }
}

#[test]
fn hct_effective_duration_and_level() {
    let s = synth_hct(&HctSpec::default(), FS).unwrap();
    assert!((s.level_db() - 60.0).abs() < 0.01);
    // the tone is steady(t) * env(t); divide by an independently built steady
    // harmonic sum wherever it is far from zero
    let steady = |t: f64| -> f64 {
        (7..=13)
            .map(|h| {
                let f = 50.0 * h as f64;
                (50.0 / critical_bandwidth(f)).sqrt() * (2.0 * std::f64::consts::PI * f * t).sin()
            })
            .sum()
    };
    let peak = (0..2000).map(|i| steady(i as f64 / FS).abs()).fold(0.0, f64::max);
    let mid = s.len() / 2;
    let scale = (mid..mid + 2000)
        .find(|&i| steady(i as f64 / FS).abs() > 0.5 * peak)
        .map(|i| s.samples[i] / steady(i as f64 / FS))
        .unwrap();
    let env: Vec<(usize, f64)> = (0..s.len())
        .filter(|&i| steady(i as f64 / FS).abs() > 0.05 * peak)
        .map(|i| (i, s.samples[i] / steady(i as f64 / FS) / scale))
        .collect();
    assert!(env.iter().all(|&(_, e)| e <= 1.0 + 1e-9));
    let first = env.iter().find(|&&(_, e)| e >= 0.9).unwrap().0;
    let last = env.iter().rev().find(|&&(_, e)| e >= 0.9).unwrap().0;
    let above = (last - first + 1) as f64 / FS;
    assert!((above - 0.5).abs() <= 0.002, "{above}");
    let b = synth_hct(&HctSpec::default(), FS).unwrap();
    assert_eq!(s, b);
}

#[test]
fn uen_equal_power_per_bark_band() {
    // Bark bands fully inside 250-750 Hz: edges at integer Bark
    let edges: Vec<f64> = (0..30).map(|z| bark_to_hz(z as f64)).collect();
    let bands: Vec<(f64, f64)> = edges
        .windows(2)
        .map(|w| (w[0], w[1]))
        .filter(|&(lo, hi)| lo >= 250.0 && hi <= 750.0)
        .collect();
    assert!(bands.len() >= 3);
    let mut acc = vec![0.0; bands.len()];
    for seed in 0..20 {
        let s = synth_uen(&NoiseSpec::uniform_exciting(seed), FS).unwrap();
        let (ps, df) = power_spectrum(&s, 1 << 16);
        for (a, &(lo, hi)) in acc.iter_mut().zip(&bands) {
            *a += band_power(&ps, df, lo, hi);
        }
    }
    let db: Vec<f64> = acc.iter().map(|&p| power_db(p)).collect();
    let mean = db.iter().sum::<f64>() / db.len() as f64;
    for d in &db {
        assert!((d - mean).abs() <= 1.0, "{db:?}");
    }
}

#[test]
fn uen_psd_follows_inverse_critical_bandwidth() {
    let mut acc = vec![0.0; 1 << 15];
    let mut df = 0.0;
    for seed in 0..20 {
        let s = synth_uen(&NoiseSpec::uniform_exciting(100 + seed), FS).unwrap();
        let (ps, d) = power_spectrum(&s, 1 << 16);
        df = d;
        acc.iter_mut().zip(&ps).for_each(|(a, p)| *a += p);
    }
    // 50 Hz wide slices, normalized by 1/CB at their centers
    let rel: Vec<f64> = (0..8)
        .map(|i| {
            let lo = 300.0 + 50.0 * i as f64;
            let fc = lo + 25.0;
            power_db(band_power(&acc, df, lo, lo + 50.0) * critical_bandwidth(fc))
        })
        .collect();
    let mean = rel.iter().sum::<f64>() / rel.len() as f64;
    for r in &rel {
        assert!((r - mean).abs() <= 1.0, "{rel:?}");
    }
}

#[test]
fn uen_is_band_limited_calibrated_and_seeded() {
    let spec = NoiseSpec::uniform_exciting(7);
    let s = synth_uen(&spec, FS).unwrap();
    assert_eq!(s.len(), (0.9 * FS).round() as usize);
    assert!((s.level_db() - 60.0).abs() < 0.01);
    let (ps, df) = power_spectrum(&s, 1 << 16);
    let total: f64 = ps.iter().sum();
    let outside = total - band_power(&ps, df, 200.0, 800.0);
    assert!(power_db(outside / total) <= -50.0, "{}", power_db(outside / total));
    assert_eq!(s, synth_uen(&spec, FS).unwrap());
    assert_ne!(s, synth_uen(&NoiseSpec::uniform_exciting(8), FS).unwrap());
}

#[test]
fn white_noise_band() {
    let s = synth_noise(&NoiseSpec::white(200.0, 14_000.0, 3), FS).unwrap();
    let (ps, df) = power_spectrum(&s, 1 << 16);
    let lo = band_power(&ps, df, 1000.0, 2000.0);
    let hi = band_power(&ps, df, 10_000.0, 11_000.0);
    assert!(power_db(lo / hi).abs() < 1.0);
    assert!(synth_noise(&NoiseSpec::white(200.0, 30_000.0, 3), FS).is_err());
}
