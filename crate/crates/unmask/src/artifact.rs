//! Output artifacts: provenance stamps, JSON sidecars, WAV and CSV files.
//!
//! Everything written here is a pure function of its inputs, so reruns with
//! the same configuration produce byte-identical files.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const TOOL: &str = "unmask";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
/// Environment variable naming the default output root.
pub const OUT_ENV: &str = "UNMASK_OUT";

/// Stamp embedded in every artifact.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub config_hash: String,
    pub seed: u64,
}

impl Provenance {
    pub fn new<C: Serialize>(config: &C, seed: u64) -> Self {
        Provenance {
            tool: TOOL.into(),
            version: VERSION.into(),
            config_hash: config_hash(config),
            seed,
        }
    }

    /// First line of every CSV file.
    pub fn csv_comment(&self) -> String {
        format!("# {} {} config={} seed={}", self.tool, self.version, self.config_hash, self.seed)
    }
}

/// First 16 hex digits of the SHA-256 of the configuration's JSON form.
pub fn config_hash<C: Serialize>(config: &C) -> String {
    let bytes = serde_json::to_vec(config).expect("configuration serializes");
    let digest = Sha256::digest(&bytes);
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

/// Output directory: the explicit one, else `$UNMASK_OUT`, else `unmask-out`.
pub fn resolve_out(explicit: Option<&Path>) -> PathBuf {
    explicit
        .map(Path::to_path_buf)
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("unmask-out"))
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        ensure_dir(parent)?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|source| Error::Json {
        path: path.into(),
        source,
    })?;
    writeln!(w).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|source| Error::Json {
        path: path.into(),
        source,
    })
}

fn wav_rate(fs: f64) -> Result<u32> {
    if fs.fract() != 0.0 || !(1.0..=f64::from(u32::MAX)).contains(&fs) {
        return Err(Error::Config(format!("WAV needs an integer sample rate, got {fs}")));
    }
    Ok(fs as u32)
}

/// 32-bit float WAV, channels interleaved.
pub fn write_wav(path: &Path, channels: &[&[f64]], fs: f64) -> Result<()> {
    let len = channels.first().map_or(0, |c| c.len());
    if channels.is_empty() || channels.iter().any(|c| c.len() != len) {
        return Err(Error::Config("WAV channels must be non-empty and equally long".into()));
    }
    let spec = hound::WavSpec {
        channels: channels.len() as u16,
        sample_rate: wav_rate(fs)?,
        bits_per_sample: 32,
        sample_format: hound::SampleFormat::Float,
    };
    let wav_err = |source| Error::Wav {
        path: path.into(),
        source,
    };
    let mut w = hound::WavWriter::new(create(path)?, spec).map_err(wav_err)?;
    for i in 0..len {
        for c in channels {
            w.write_sample(c[i] as f32).map_err(wav_err)?;
        }
    }
    w.finalize().map_err(wav_err)
}

/// Reads any PCM or float WAV into per-channel samples scaled to [-1, 1].
pub fn read_wav(path: &Path) -> Result<(Vec<Vec<f64>>, f64)> {
    let wav_err = |source| Error::Wav {
        path: path.into(),
        source,
    };
    let mut r = hound::WavReader::open(path).map_err(wav_err)?;
    let spec = r.spec();
    let n = spec.channels as usize;
    let flat: Vec<f64> = match spec.sample_format {
        hound::SampleFormat::Float => r
            .samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<std::result::Result<_, _>>()
            .map_err(wav_err)?,
        hound::SampleFormat::Int => {
            let full = (1i64 << (spec.bits_per_sample - 1)) as f64;
            r.samples::<i32>()
                .map(|s| s.map(|v| v as f64 / full))
                .collect::<std::result::Result<_, _>>()
                .map_err(wav_err)?
        }
    };
    let mut channels = vec![Vec::with_capacity(flat.len() / n.max(1)); n];
    for (i, v) in flat.into_iter().enumerate() {
        channels[i % n].push(v);
    }
    Ok((channels, spec.sample_rate as f64))
}

/// Writes serializable rows as CSV under a provenance comment line.
pub fn write_csv<R: Serialize>(path: &Path, prov: &Provenance, rows: &[R]) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "{}", prov.csv_comment()).map_err(|e| Error::io(path, e))?;
    let csv_err = |source| Error::Csv {
        path: path.into(),
        source,
    };
    let mut c = csv::Writer::from_writer(w);
    for r in rows {
        c.serialize(r).map_err(csv_err)?;
    }
    c.flush().map_err(|e| Error::io(path, e))
}

/// Reads CSV rows, skipping `#` comment lines.
pub fn read_csv<R: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<R>> {
    let csv_err = |source| Error::Csv {
        path: path.into(),
        source,
    };
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(csv_err)?;
    r.deserialize().collect::<std::result::Result<_, _>>().map_err(csv_err)
}
