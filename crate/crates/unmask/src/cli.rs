//! Command-line surface: argument types and one function per subcommand.
//!
//! Every run writes `manifest.json` next to its artifacts. The manifest's
//! configuration (all arguments except the output directory and worker
//! count) is hashed into every artifact together with the seed.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use unmask_core::acoustics::{analyze_rir, manipulate_rir, Manipulation};
use unmask_core::experiments::{
    apply_offset, build_braasch_conditions, build_paper_conditions, build_zurek_conditions, default_tail,
    derive_seed, ic_timeseries, mean_ic_between, render_condition, render_source, ConditionSpec, RoomId,
    RoomSetup, SourcePath, SourcePose, Stimulus, BRAASCH_ALPHA, DEFAULT_FS, IC_SETTLE, PAPER_SOURCE_DISTANCE,
    ZUREK_ALPHAS,
};
use unmask_core::frontend::FrameGrid;
use unmask_core::model::{predict, ModelConfig, Variant};
use unmask_core::staircase::{levitt_target, run_track, LogisticObserver, StaircaseConfig};
use unmask_core::stimuli::{BinauralSignal, HctSpec, NoiseSpec};

use crate::artifact::{ensure_dir, read_csv, read_json, read_wav, resolve_out, write_csv, write_json, write_wav, Provenance};
use crate::error::{Error, Result};
use crate::runner::{map_parallel, run_parallel};
use crate::tables::{
    evaluate_tables, format_report, prediction_cells, trial_rows, IcFrameRow, IcSummaryRow, MeasuredRow,
    PredictionSummary, TrackRow,
};

#[derive(Debug, Parser)]
#[command(name = "unmask", version, about = "Binaural unmasking in rooms: simulate, render, predict")]
pub struct Cli {
    /// Output directory [default: $UNMASK_OUT or ./unmask-out]
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Global seed; every random stream is derived from it.
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    /// Worker threads for condition-level parallelism (0 = one per core).
    #[arg(long, global = true, default_value_t = 0)]
    pub jobs: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "command", rename_all = "lowercase")]
pub enum Command {
    /// Simulate a binaural room impulse response.
    Rir(RirArgs),
    /// Synthesize a stimulus.
    Stimuli(StimuliArgs),
    /// Predict the binaural benefit of a target in a masker.
    Predict(PredictArgs),
    /// Run a built-in experiment sweep.
    Experiment(ExperimentArgs),
    /// Compare predictions with measured thresholds.
    Evaluate(EvaluateArgs),
    /// Short-term interaural coherence of truncated responses.
    Ic(IcArgs),
    /// Simulate adaptive staircase tracks.
    Staircase(StaircaseArgs),
    /// Replicate a literature configuration.
    Replicate(ReplicateArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum VariantChoice {
    Fast,
    Slow,
    Both,
}

impl VariantChoice {
    pub fn variants(self) -> Vec<Variant> {
        match self {
            VariantChoice::Fast => vec![Variant::Fast],
            VariantChoice::Slow => vec![Variant::Slow],
            VariantChoice::Both => Variant::BOTH.to_vec(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RoomChoice {
    Paper,
    Braasch,
    Zurek,
}

impl From<RoomChoice> for RoomId {
    fn from(r: RoomChoice) -> Self {
        match r {
            RoomChoice::Paper => RoomId::Paper,
            RoomChoice::Braasch => RoomId::Braasch,
            RoomChoice::Zurek => RoomId::Zurek,
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct RirArgs {
    #[arg(long, value_enum, default_value_t = RoomChoice::Paper)]
    pub room: RoomChoice,
    #[arg(long, default_value_t = 0.1)]
    pub alpha: f64,
    /// Source azimuth (deg, positive to the right).
    #[arg(long, default_value_t = 0.0)]
    pub src_az: f64,
    /// Source distance (m) [default: 5 in the `paper` room, 2 otherwise].
    #[arg(long)]
    pub src_dist: Option<f64>,
    /// Keep only the first T ms after the direct sound.
    #[arg(long, value_name = "T_MS", conflicts_with = "cut")]
    pub truncate: Option<f64>,
    /// Remove everything between the direct sound and T ms.
    #[arg(long, value_name = "T_MS")]
    pub cut: Option<f64>,
    /// Image sources only, no stochastic tail.
    #[arg(long)]
    pub no_tail: bool,
    #[arg(long, default_value_t = DEFAULT_FS)]
    pub fs: f64,
    #[arg(long, default_value_t = 100)]
    pub max_order: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum StimulusKind {
    /// Harmonic complex tone (350-650 Hz, 50 Hz spacing).
    Hct,
    /// Uniform exciting noise, 250-750 Hz.
    Uen,
    /// White noise in [--low, --high].
    White,
}

#[derive(Debug, Args, Serialize)]
pub struct StimuliArgs {
    #[arg(long, value_enum, default_value_t = StimulusKind::Hct)]
    pub kind: StimulusKind,
    /// Full stimulus description (JSON); overrides the other options.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long, default_value_t = 60.0)]
    pub level: f64,
    #[arg(long, default_value_t = 200.0)]
    pub low: f64,
    #[arg(long, default_value_t = 14_000.0)]
    pub high: f64,
    /// Noise duration (s).
    #[arg(long, default_value_t = 0.9)]
    pub duration: f64,
    #[arg(long, default_value_t = DEFAULT_FS)]
    pub fs: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct PredictArgs {
    /// Condition file (JSON) to render and predict.
    #[arg(long, conflicts_with_all = ["target", "masker"], required_unless_present_all = ["target", "masker"])]
    pub condition: Option<PathBuf>,
    /// Two-channel target WAV.
    #[arg(long, requires = "masker")]
    pub target: Option<PathBuf>,
    /// Two-channel masker WAV.
    #[arg(long, requires = "target")]
    pub masker: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = VariantChoice::Both)]
    pub variant: VariantChoice,
}

#[derive(Debug, Args, Serialize)]
pub struct ExperimentArgs {
    /// Built-in experiment: 1 (truncation) or 2 (cut).
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2), required_unless_present = "conditions")]
    pub exp: Option<u8>,
    /// Custom condition list (JSON) instead of a built-in sweep.
    #[arg(long, conflicts_with = "exp")]
    pub conditions: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = VariantChoice::Both)]
    pub variant: VariantChoice,
    /// Threshold offset: threshold = offset - benefit.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub offset: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct EvaluateArgs {
    /// Results CSV written by `experiment` or `replicate`.
    #[arg(long)]
    pub pred: PathBuf,
    /// Measured thresholds CSV: experiment, alpha, azimuth_deg, mode, t_ms, threshold_db.
    #[arg(long)]
    pub data: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct IcArgs {
    #[arg(long, default_value_t = 0.1)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.0)]
    pub az: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct StaircaseArgs {
    #[arg(long, default_value_t = 1)]
    pub tracks: usize,
    /// Level (dB) at which the observer is at the rule's target proportion correct.
    #[arg(long, default_value_t = 40.0)]
    pub target_level: f64,
    /// Logistic slope (dB per logistic unit).
    #[arg(long, default_value_t = 2.0)]
    pub slope: f64,
    /// Stop unconverged tracks after this many trials.
    #[arg(long)]
    pub cap: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Replication {
    Braasch,
    Zurek,
}

#[derive(Debug, Args, Serialize)]
pub struct ReplicateArgs {
    #[arg(value_enum)]
    pub which: Replication,
    #[arg(long, value_enum, default_value_t = VariantChoice::Both)]
    pub variant: VariantChoice,
    /// Absorption of the Braasch room.
    #[arg(long, default_value_t = BRAASCH_ALPHA)]
    pub alpha: f64,
    /// Braasch only: present the masker anechoically.
    #[arg(long)]
    pub anechoic_masker: bool,
}

/// What a run was asked to do; stored as `manifest.json`.
#[derive(Debug, Serialize)]
pub struct RunManifest<'a> {
    pub provenance: Provenance,
    pub config: &'a Command,
    pub seed: u64,
    pub out: &'a Path,
    pub jobs: usize,
}

#[derive(Serialize)]
struct HashedConfig<'a> {
    command: &'a Command,
    seed: u64,
}

pub fn run(cli: &Cli) -> Result<()> {
    let out = resolve_out(cli.out.as_deref());
    ensure_dir(&out)?;
    let prov = Provenance::new(
        &HashedConfig {
            command: &cli.command,
            seed: cli.seed,
        },
        cli.seed,
    );
    write_json(
        &out.join("manifest.json"),
        &RunManifest {
            provenance: prov.clone(),
            config: &cli.command,
            seed: cli.seed,
            out: &out,
            jobs: cli.jobs,
        },
    )?;
    let ctx = Ctx {
        out,
        prov,
        seed: cli.seed,
        jobs: cli.jobs,
    };
    match &cli.command {
        Command::Rir(a) => cmd_rir(&ctx, a),
        Command::Stimuli(a) => cmd_stimuli(&ctx, a),
        Command::Predict(a) => cmd_predict(&ctx, a),
        Command::Experiment(a) => cmd_experiment(&ctx, a),
        Command::Evaluate(a) => cmd_evaluate(&ctx, a),
        Command::Ic(a) => cmd_ic(&ctx, a),
        Command::Staircase(a) => cmd_staircase(&ctx, a),
        Command::Replicate(a) => cmd_replicate(&ctx, a),
    }
}

struct Ctx {
    out: PathBuf,
    prov: Provenance,
    seed: u64,
    jobs: usize,
}

/// Finite values as JSON numbers, infinities as `"+inf"` / `"-inf"`.
fn json_db(v: f64) -> serde_json::Value {
    if v.is_finite() {
        serde_json::json!(v)
    } else if v > 0.0 {
        "+inf".into()
    } else {
        "-inf".into()
    }
}

fn fmt_db(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.2}")
    } else if v > 0.0 {
        "+inf".into()
    } else {
        "-inf".into()
    }
}

fn cmd_rir(ctx: &Ctx, a: &RirArgs) -> Result<()> {
    let room: RoomId = a.room.into();
    let setup = RoomSetup::by_id(room)?;
    let distance = a.src_dist.unwrap_or(match room {
        RoomId::Paper => PAPER_SOURCE_DISTANCE,
        _ => 2.0,
    });
    let tail = if a.no_tail {
        None
    } else {
        default_tail(&setup, a.alpha, a.src_az, distance, ctx.seed)?
    };
    let pose = SourcePose {
        azimuth_deg: a.src_az,
        distance,
        path: SourcePath::Room { tail: tail.clone() },
    };
    let manipulation = match (a.truncate, a.cut) {
        (Some(t_ms), _) => Manipulation::Truncate { t_ms },
        (_, Some(t_ms)) => Manipulation::Cut { t_ms },
        _ => Manipulation::None,
    };
    let brir = render_source(&setup, a.alpha, &pose, unmask_core::binaural::DEFAULT_HEAD_RADIUS, a.fs, a.max_order)?;
    let brir = manipulate_rir(&brir, manipulation)?;
    let analysis = analyze_rir(&brir)?;

    let mut stem = format!("rir_{}_a{}_az{}", room.name(), a.alpha, a.src_az);
    if let Some(t) = manipulation.time_ms() {
        stem += &format!("_{}{t}", unmask_core::experiments::mode_name(&manipulation));
    }
    let wav = ctx.out.join(format!("{stem}.wav"));
    let channels: Vec<&[f64]> = brir.channels.iter().map(Vec::as_slice).collect();
    write_wav(&wav, &channels, brir.fs)?;
    write_json(
        &ctx.out.join(format!("{stem}.json")),
        &serde_json::json!({
            "provenance": ctx.prov,
            "room": room,
            "alpha": a.alpha,
            "listener": setup.listener,
            "source": pose,
            "fs": brir.fs,
            "samples": brir.len(),
            "direct_time_s": brir.direct_time,
            "manipulation": brir.manipulation,
            "tail_seed": brir.tail_seed,
            "rt60_s": analysis.rt60,
            "drr_db": json_db(analysis.drr_db),
        }),
    )?;
    let rt = analysis.rt60.map_or_else(|| "n/a".into(), |t| format!("{:.1} ms", t * 1e3));
    println!("{}: RT60 {rt}, DRR {} dB", wav.display(), fmt_db(analysis.drr_db));
    Ok(())
}

fn cmd_stimuli(ctx: &Ctx, a: &StimuliArgs) -> Result<()> {
    let stim: Stimulus = match &a.spec {
        Some(p) => read_json(p)?,
        None => match a.kind {
            StimulusKind::Hct => Stimulus::Hct(HctSpec {
                level_db: a.level,
                ..HctSpec::default()
            }),
            StimulusKind::Uen => Stimulus::Noise(NoiseSpec {
                level_db: a.level,
                duration: a.duration,
                ..NoiseSpec::uniform_exciting(derive_seed(ctx.seed, "stimulus"))
            }),
            StimulusKind::White => Stimulus::Noise(NoiseSpec {
                level_db: a.level,
                duration: a.duration,
                ..NoiseSpec::white(a.low, a.high, derive_seed(ctx.seed, "stimulus"))
            }),
        },
    };
    let sig = stim.synth(a.fs)?;
    let stem = match &stim {
        Stimulus::Hct(_) => "hct",
        Stimulus::Noise(_) => "noise",
    };
    let wav = ctx.out.join(format!("{stem}.wav"));
    write_wav(&wav, &[&sig.samples], sig.fs)?;
    write_json(
        &ctx.out.join(format!("{stem}.json")),
        &serde_json::json!({
            "provenance": ctx.prov,
            "stimulus": stim,
            "fs": sig.fs,
            "samples": sig.len(),
            "calibration_db": sig.calibration_db,
            "level_db": sig.level_db(),
        }),
    )?;
    println!("{}: {:.3} s at {:.1} dB SPL", wav.display(), sig.duration(), sig.level_db());
    Ok(())
}

fn read_binaural(path: &Path) -> Result<BinauralSignal> {
    let (mut ch, fs) = read_wav(path)?;
    if ch.len() != 2 {
        return Err(Error::Config(format!("{}: need 2 channels, found {}", path.display(), ch.len())));
    }
    let r = ch.pop().unwrap_or_default();
    let l = ch.pop().unwrap_or_default();
    Ok(BinauralSignal::new(l, r, fs)?)
}

fn cmd_predict(ctx: &Ctx, a: &PredictArgs) -> Result<()> {
    let (target, masker, configs): (BinauralSignal, BinauralSignal, Vec<ModelConfig>) =
        match (&a.condition, &a.target, &a.masker) {
            (Some(c), _, _) => {
                let spec: ConditionSpec = read_json(c)?;
                let r = render_condition(&spec)?;
                let cfgs = a.variant.variants().into_iter().map(|v| spec.model_config(v)).collect();
                (r.target, r.masker, cfgs)
            }
            (None, Some(t), Some(m)) => {
                let cfgs = a.variant.variants().into_iter().map(ModelConfig::new).collect();
                (read_binaural(t)?, read_binaural(m)?, cfgs)
            }
            _ => return Err(Error::Config("need --condition or both --target and --masker".into())),
        };
    let preds = map_parallel(&configs, ctx.jobs, |cfg| predict(&target, &masker, cfg))?;
    for p in &preds {
        let name = p.config.variant.name();
        write_csv(&ctx.out.join(format!("prediction_{name}.csv")), &ctx.prov, &prediction_cells(p))?;
        write_json(
            &ctx.out.join(format!("prediction_{name}.json")),
            &serde_json::json!({
                "provenance": ctx.prov,
                "summary": PredictionSummary::of(p),
                "config": p.config,
            }),
        )?;
        println!("{name}: benefit {:.2} dB", p.benefit_db);
    }
    Ok(())
}

fn cmd_experiment(ctx: &Ctx, a: &ExperimentArgs) -> Result<()> {
    let (name, conditions) = match (a.exp, &a.conditions) {
        (Some(e), _) => (format!("exp{e}"), build_paper_conditions(e, ctx.seed)?),
        (None, Some(p)) => ("custom".to_string(), read_json::<Vec<ConditionSpec>>(p)?),
        _ => return Err(Error::Config("need --exp or --conditions".into())),
    };
    write_json(&ctx.out.join(format!("{name}_conditions.json")), &conditions)?;
    let mut rows = run_parallel(&conditions, &a.variant.variants(), ctx.jobs)?;
    apply_offset(&mut rows, a.offset);
    let path = ctx.out.join(format!("{name}_results.csv"));
    write_csv(&path, &ctx.prov, &rows)?;
    println!("{}: {} rows", path.display(), rows.len());
    Ok(())
}

fn cmd_evaluate(ctx: &Ctx, a: &EvaluateArgs) -> Result<()> {
    let pred = read_csv(&a.pred)?;
    let data: Vec<MeasuredRow> = read_csv(&a.data)?;
    let report = evaluate_tables(&pred, &data)?;
    write_json(
        &ctx.out.join("metrics.json"),
        &serde_json::json!({ "provenance": ctx.prov, "datasets": report }),
    )?;
    print!("{}", format_report(&report));
    Ok(())
}

fn cmd_ic(ctx: &Ctx, a: &IcArgs) -> Result<()> {
    let conditions: Vec<ConditionSpec> = build_paper_conditions(1, ctx.seed)?
        .into_iter()
        .filter(|c| c.alpha == a.alpha && c.target.azimuth_deg == a.az)
        .collect();
    if conditions.is_empty() {
        return Err(Error::Config(format!(
            "no paper condition with alpha {} and azimuth {}",
            a.alpha, a.az
        )));
    }
    let per = map_parallel(&conditions, ctx.jobs, |c| {
        let r = render_condition(c)?;
        let grid = FrameGrid::fast(r.target.fs, r.target.len())?;
        let ic = ic_timeseries(&r.target, &grid)?;
        let [start, end] = c.target_span();
        let mean = mean_ic_between(&r.target, start + IC_SETTLE, end)?;
        let t_ms = c.manipulation.time_ms().unwrap_or(f64::NAN);
        let frames: Vec<IcFrameRow> = (0..grid.frames)
            .map(|j| IcFrameRow {
                alpha: c.alpha,
                azimuth_deg: c.target.azimuth_deg,
                t_ms,
                frame_time_s: grid.center_time(j),
                ic: ic[j],
            })
            .collect();
        Ok((
            IcSummaryRow {
                alpha: c.alpha,
                azimuth_deg: c.target.azimuth_deg,
                t_ms,
                mean_ic: mean,
            },
            frames,
        ))
    })?;
    let summary: Vec<IcSummaryRow> = per.iter().map(|p| p.0.clone()).collect();
    let frames: Vec<IcFrameRow> = per.into_iter().flat_map(|p| p.1).collect();
    write_csv(&ctx.out.join("ic_timeseries.csv"), &ctx.prov, &frames)?;
    write_csv(&ctx.out.join("ic_summary.csv"), &ctx.prov, &summary)?;
    for s in &summary {
        let ic = s.mean_ic.map_or_else(|| "n/a".into(), |v| format!("{v:.3}"));
        println!("truncate {} ms: mean IC {ic}", s.t_ms);
    }
    Ok(())
}

fn cmd_staircase(ctx: &Ctx, a: &StaircaseArgs) -> Result<()> {
    let cfg = StaircaseConfig {
        max_trials: a.cap,
        ..Default::default()
    };
    let p = levitt_target(cfg.rule)?;
    let obs = LogisticObserver::through(a.target_level, p, a.slope, cfg.chance())?;
    let seeds: Vec<u64> = (0..a.tracks).map(|i| derive_seed(ctx.seed, &format!("track/{i}"))).collect();
    let tracks = map_parallel(&seeds, ctx.jobs, |&s| run_track(&obs, &cfg, s))?;
    let trials: Vec<_> = tracks.iter().enumerate().flat_map(|(i, t)| trial_rows(i, t)).collect();
    let summary: Vec<TrackRow> = tracks
        .iter()
        .zip(&seeds)
        .enumerate()
        .map(|(i, (t, &seed))| TrackRow {
            track: i,
            seed,
            trials: t.trials.len(),
            reversals: t.reversal_levels.len(),
            converged: t.converged,
            threshold_db: t.threshold,
        })
        .collect();
    write_csv(&ctx.out.join("staircase_trials.csv"), &ctx.prov, &trials)?;
    write_csv(&ctx.out.join("staircase_tracks.csv"), &ctx.prov, &summary)?;
    let done: Vec<f64> = tracks.iter().filter_map(|t| t.threshold).collect();
    if done.is_empty() {
        println!("{} tracks, none converged", tracks.len());
    } else {
        let mean = done.iter().sum::<f64>() / done.len() as f64;
        println!("{} tracks, {} converged, mean threshold {mean:.2} dB", tracks.len(), done.len());
    }
    Ok(())
}

fn cmd_replicate(ctx: &Ctx, a: &ReplicateArgs) -> Result<()> {
    let (name, conditions) = match a.which {
        Replication::Braasch => ("braasch", build_braasch_conditions(a.alpha, !a.anechoic_masker, ctx.seed)?),
        Replication::Zurek => ("zurek", build_zurek_conditions(&ZUREK_ALPHAS, ctx.seed)?),
    };
    write_json(&ctx.out.join(format!("{name}_conditions.json")), &conditions)?;
    let rows = run_parallel(&conditions, &a.variant.variants(), ctx.jobs)?;
    let path = ctx.out.join(format!("{name}_results.csv"));
    write_csv(&path, &ctx.prov, &rows)?;
    for r in &rows {
        println!("{} {}: benefit {:.2} dB", r.id, r.variant.name(), r.benefit_db);
    }
    Ok(())
}
