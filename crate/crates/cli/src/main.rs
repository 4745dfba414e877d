mod config;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use amfm_groupdet::backhead::{detect_backheads, BackHeadConfig};
use amfm_groupdet::demod::{dca_decompose, fm_image, AmFmField};
use amfm_groupdet::detection::{DetectionKind, DetectionSet, GroupLabel};
use amfm_groupdet::error::Error;
use amfm_groupdet::eval::{evaluate_video, render_table, DEFAULT_IOU_MIN};
use amfm_groupdet::filterbank::{FilterBank, FilterbankSpec};
use amfm_groupdet::fusion::{fuse, DEFAULT_IOU_DEDUP};
use amfm_groupdet::group_filter::{filter_detections, GroupFilterConfig, Scorer};
use amfm_groupdet::io::{
    encode_png_gray, encode_png_rgb, ground_truth_to_jsonl, list_frames, read_detections, read_frame, read_ground_truth,
    read_scores, write_atomic, write_detections, GroundTruth,
};
use amfm_groupdet::overlay::render_overlay;
use amfm_groupdet::raster::RasterF32;
use amfm_groupdet::synth::synthetic_video;
use clap::{Args, Parser, Subcommand, ValueEnum};

use config::FileConfig;

/// AM-FM texture analysis and student-group detection post-processing.
#[derive(Debug, Parser)]
#[command(name = "amfm-groupdet", version)]
struct Cli {
    /// Worker threads (default: one per CPU). Never changes output.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// TOML file with [filterbank], [group_filter], [backhead], [fusion] and
    /// [evaluate] sections. Flags take precedence over it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write <frame>_am.png and <frame>_fm.png for every frame.
    Decompose {
        frames: PathBuf,
        out_dir: PathBuf,
        #[command(flatten)]
        bank: BankArgs,
    },
    /// Label face detections in or out of group.
    Filter {
        frames: PathBuf,
        detections: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[command(flatten)]
        bank: BankArgs,
        #[arg(long)]
        if_threshold: Option<f64>,
        #[arg(long)]
        quantile: Option<f64>,
        #[arg(long)]
        score_threshold: Option<f64>,
        #[command(flatten)]
        scorer: ScorerArgs,
        /// Omit out-of-group records from the output.
        #[arg(long)]
        drop_out_of_group: bool,
        #[command(flatten)]
        video: VideoArgs,
    },
    /// Detect back-of-head regions on every frame.
    Backhead {
        frames: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[command(flatten)]
        bank: BankArgs,
        #[arg(long)]
        if_band_low: Option<f64>,
        #[arg(long)]
        if_band_high: Option<f64>,
        #[arg(long)]
        min_am_factor: Option<f64>,
        #[arg(long)]
        min_region_area: Option<u64>,
        #[arg(long)]
        max_region_area: Option<u64>,
        #[arg(long)]
        aspect_min: Option<f64>,
        #[arg(long)]
        aspect_max: Option<f64>,
        #[arg(long)]
        score_threshold: Option<f64>,
        #[command(flatten)]
        scorer: ScorerArgs,
        #[command(flatten)]
        video: VideoArgs,
    },
    /// Merge in-group faces with back-of-head detections.
    Fuse {
        faces: PathBuf,
        backheads: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long)]
        iou_dedup: Option<f64>,
        #[command(flatten)]
        video: VideoArgs,
    },
    /// Match detections to ground truth and report TP/FP/FN/F1. Records
    /// labeled out-of-group are not counted as detections.
    Evaluate {
        detections: PathBuf,
        ground_truth: PathBuf,
        #[arg(long)]
        iou_min: Option<f64>,
        /// Also write the report as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
        /// Format of the report on stdout.
        #[arg(long, value_enum, default_value_t = ReportFormat::Table)]
        format: ReportFormat,
        #[command(flatten)]
        video: VideoArgs,
    },
    /// Draw detections on frames: green TP, red FP, yellow FN.
    Overlay {
        frames: PathBuf,
        detections: PathBuf,
        out_dir: PathBuf,
        #[arg(long)]
        ground_truth: Option<PathBuf>,
        #[arg(long)]
        iou_min: Option<f64>,
    },
    /// Write a synthetic video (frames, face detections, ground truth).
    Synth {
        out_dir: PathBuf,
        #[arg(long, default_value_t = 10)]
        frames: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

#[derive(Debug, Args)]
struct BankArgs {
    /// TOML file with num_scales, num_orientations, min_center_freq,
    /// max_center_freq.
    #[arg(long)]
    filterbank_config: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ScorerArgs {
    #[arg(long, value_enum, default_value_t = ScorerKind::Baseline)]
    scorer: ScorerKind,
    /// JSONL of {frame, x, y, w, h, score}; required with --scorer external.
    #[arg(long)]
    scores_file: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct VideoArgs {
    /// Video id carried into reports.
    #[arg(long, default_value = "video")]
    video_id: String,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ScorerKind {
    Baseline,
    External,
}

#[derive(Debug, Clone, Copy, PartialEq, ValueEnum)]
enum ReportFormat {
    Table,
    Json,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        if e.is_config() {
            CliError::Usage(name_flag(&e))
        } else {
            CliError::Data(e.to_string())
        }
    }
}

/// Config errors name the flag a user would change.
fn name_flag(e: &Error) -> String {
    let field = match e {
        Error::InvalidConfig { field, .. } => *field,
        Error::AtFrame { source, .. } => return name_flag(source),
        _ => return e.to_string(),
    };
    let flag = match field {
        "texture_if_band" => "--if-band-low/--if-band-high",
        "min_am" | "min_am_peak_fraction" => "--min-am-factor",
        "min_region_area" => "--min-region-area/--max-region-area",
        "aspect_bounds" => "--aspect-min/--aspect-max",
        "score_threshold" => "--score-threshold",
        "if_threshold" => "--if-threshold",
        "quantile" => "--quantile",
        "iou_dedup" => "--iou-dedup",
        "iou_min" => "--iou-min",
        _ => return format!("{e} (see --filterbank-config)"),
    };
    format!("{flag}: {e}")
}

fn scorer(args: &ScorerArgs) -> Result<Scorer, CliError> {
    match (args.scorer, &args.scores_file) {
        (ScorerKind::Baseline, _) => Ok(Scorer::BaselineFrequency),
        (ScorerKind::External, Some(p)) => Ok(Scorer::External(read_scores(p)?)),
        (ScorerKind::External, None) => Err(CliError::Usage("--scorer external needs --scores-file".into())),
    }
}

/// One filterbank per frame size, rebuilt only when the size changes.
struct BankCache {
    spec: FilterbankSpec,
    bank: Option<FilterBank>,
}

impl BankCache {
    fn decompose(&mut self, frame: &RasterF32) -> amfm_groupdet::error::Result<AmFmField> {
        let dims = frame.dims();
        if self.bank.as_ref().map(|b| b.frame_dims()) != Some(dims) {
            self.bank = Some(FilterBank::build(dims.0, dims.1, &self.spec)?);
        }
        dca_decompose(frame, self.bank.as_ref().expect("built above"))
    }
}

fn stem(path: &Path) -> String {
    path.file_stem().map_or_else(|| "frame".into(), |s| s.to_string_lossy().into_owned())
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Data(format!("{}: {e}", dir.display())))
}

fn run(cli: Cli) -> Result<(), CliError> {
    let file = FileConfig::load(cli.config.as_deref())?;
    match cli.command {
        Command::Decompose { frames, out_dir, bank } => {
            let list = list_frames(&frames)?;
            if list.is_empty() {
                eprintln!("warning: no frames found in {}", frames.display());
                return Ok(());
            }
            create_dir(&out_dir)?;
            let mut banks = BankCache {
                spec: file.filterbank(bank.filterbank_config.as_deref())?,
                bank: None,
            };
            for (index, path) in list {
                let frame = read_frame(&path)?;
                let field = banks.decompose(&frame).map_err(|e| e.at_frame(index))?;
                let (_, peak) = field.am.min_max();
                let name = stem(&path);
                write_atomic(out_dir.join(format!("{name}_am.png")), &encode_png_gray(&field.am, 0.0, peak)?)?;
                write_atomic(out_dir.join(format!("{name}_fm.png")), &encode_png_gray(&fm_image(&field), 0.0, 1.0)?)?;
            }
        }
        Command::Filter {
            frames,
            detections,
            output,
            bank,
            if_threshold,
            quantile,
            score_threshold,
            scorer: scorer_args,
            drop_out_of_group,
            video,
        } => {
            let base = file.group_filter();
            let cfg = GroupFilterConfig {
                if_threshold: if_threshold.unwrap_or(base.if_threshold),
                decision_quantile: quantile.unwrap_or(base.decision_quantile),
                score_threshold: score_threshold.unwrap_or(base.score_threshold),
                scorer: scorer(&scorer_args)?,
            };
            cfg.validate()?;
            let paths: BTreeMap<u64, PathBuf> = list_frames(&frames)?.into_iter().collect();
            let dets = read_detections(&detections, &video.video_id)?;
            let mut banks = BankCache {
                spec: file.filterbank(bank.filterbank_config.as_deref())?,
                bank: None,
            };
            let mut labeled = filter_detections(
                &dets,
                |i| {
                    let path = paths.get(&i).ok_or(Error::MissingFrame(i))?;
                    banks.decompose(&read_frame(path)?)
                },
                &cfg,
            )?;
            if drop_out_of_group {
                labeled.retain(|d| d.in_group != GroupLabel::OutOfGroup);
            }
            write_detections(&output, &labeled)?;
        }
        Command::Backhead {
            frames,
            output,
            bank,
            if_band_low,
            if_band_high,
            min_am_factor,
            min_region_area,
            max_region_area,
            aspect_min,
            aspect_max,
            score_threshold,
            scorer: scorer_args,
            video,
        } => {
            let b = file.backhead();
            let cfg = BackHeadConfig {
                texture_if_band: (if_band_low.unwrap_or(b.texture_if_band.0), if_band_high.unwrap_or(b.texture_if_band.1)),
                min_am_median_factor: min_am_factor.unwrap_or(b.min_am_median_factor),
                min_region_area: min_region_area.unwrap_or(b.min_region_area),
                max_region_area: max_region_area.unwrap_or(b.max_region_area),
                aspect_bounds: (aspect_min.unwrap_or(b.aspect_bounds.0), aspect_max.unwrap_or(b.aspect_bounds.1)),
                score_threshold: score_threshold.unwrap_or(b.score_threshold),
                scorer: scorer(&scorer_args)?,
                ..b
            };
            cfg.validate()?;
            let mut banks = BankCache {
                spec: file.filterbank(bank.filterbank_config.as_deref())?,
                bank: None,
            };
            let mut out = DetectionSet::new(video.video_id);
            for (index, path) in list_frames(&frames)? {
                let field = banks.decompose(&read_frame(&path)?).map_err(|e| e.at_frame(index))?;
                for d in detect_backheads(&field, index, &cfg).map_err(|e| e.at_frame(index))? {
                    out.push(d);
                }
            }
            write_detections(&output, &out)?;
        }
        Command::Fuse {
            faces,
            backheads,
            output,
            iou_dedup,
            video,
        } => {
            let iou_dedup = iou_dedup.or(file.fusion.iou_dedup).unwrap_or(DEFAULT_IOU_DEDUP);
            let mut faces = read_detections(&faces, &video.video_id)?;
            let before = faces.len();
            faces.retain(|d| d.kind() == DetectionKind::Face && d.in_group != GroupLabel::OutOfGroup);
            if faces.len() < before {
                eprintln!("note: skipped {} out-of-group or non-face records from the faces file", before - faces.len());
            }
            let mut heads = read_detections(&backheads, &video.video_id)?;
            heads.retain(|d| d.kind() == DetectionKind::BackOfHead);
            write_detections(&output, &fuse(&faces, &heads, iou_dedup)?)?;
        }
        Command::Evaluate {
            detections,
            ground_truth,
            iou_min,
            json,
            format,
            video,
        } => {
            let iou_min = iou_min.or(file.evaluate.iou_min).unwrap_or(DEFAULT_IOU_MIN);
            let mut dets = read_detections(&detections, &video.video_id)?;
            dets.retain(|d| d.in_group != GroupLabel::OutOfGroup);
            let gt = read_ground_truth(&ground_truth)?;
            let report = evaluate_video(&dets, &gt, iou_min)?;
            let json_text = serde_json::to_string_pretty(&report).expect("report serializes");
            if let Some(path) = json {
                write_atomic(path, format!("{json_text}\n").as_bytes())?;
            }
            match format {
                ReportFormat::Table => print!("{}", render_table(std::slice::from_ref(&report))),
                ReportFormat::Json => println!("{json_text}"),
            }
        }
        Command::Overlay {
            frames,
            detections,
            out_dir,
            ground_truth,
            iou_min,
        } => {
            let iou_min = iou_min.or(file.evaluate.iou_min).unwrap_or(DEFAULT_IOU_MIN);
            let mut dets = read_detections(&detections, "video")?;
            dets.retain(|d| d.in_group != GroupLabel::OutOfGroup);
            let gt: Option<GroundTruth> = ground_truth.map(read_ground_truth).transpose()?;
            create_dir(&out_dir)?;
            for (index, path) in list_frames(&frames)? {
                let frame = read_frame(&path)?;
                let boxes: Vec<_> = dets.iter().filter(|d| d.frame_index == index).map(|d| (d.bbox, d.score())).collect();
                let gts: Option<Vec<_>> = gt
                    .as_ref()
                    .and_then(|g| g.frames.get(&index))
                    .map(|anns| anns.iter().map(|a| a.bbox).collect());
                let img = render_overlay(&frame, &boxes, gts.as_deref(), iou_min).map_err(|e| e.at_frame(index))?;
                let png = encode_png_rgb(&img.data, img.width, img.height)?;
                write_atomic(out_dir.join(format!("{}.png", stem(&path))), &png)?;
            }
        }
        Command::Synth { out_dir, frames, seed } => {
            let video = synthetic_video(frames, seed)?;
            let frame_dir = out_dir.join("frames");
            create_dir(&frame_dir)?;
            for (index, frame) in &video.frames {
                write_atomic(frame_dir.join(format!("{index:04}.png")), &encode_png_gray(frame, 0.0, 1.0)?)?;
            }
            write_detections(out_dir.join("faces.jsonl"), &video.face_detections)?;
            write_atomic(out_dir.join("groundtruth.jsonl"), ground_truth_to_jsonl(&video.ground_truth).as_bytes())?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(1);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("internal error: {e}");
            return ExitCode::from(3);
        }
    }
    match std::panic::catch_unwind(|| run(cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(CliError::Usage(msg))) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Ok(Err(CliError::Data(msg))) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(_) => {
            eprintln!("internal error: see the panic message above");
            ExitCode::from(3)
        }
    }
}
