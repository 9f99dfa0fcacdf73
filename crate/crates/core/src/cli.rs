//! The `elz` command-line tool.
//!
//! Dataset layout under `paths.dataset_dir`:
//!
//! * `labels/<id>.png`: native-resolution ground-truth label maps
//! * `segmentations/<perturbation>/<id>.*`: optional precomputed segmenter outputs
//!
//! Per-image outputs go to `<output_dir>/<id>/`, dataset-level outputs to
//! `<output_dir>/`. Every command writes a manifest with the run seed and the
//! hashes of what it read and wrote.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::candidates::generate_candidates;
use crate::config::{RunConfig, SegmenterSource};
use crate::error::{Error, Result};
use crate::evaluation::{
    aggregate_report, evaluate_dataset, evaluate_image, precomputed_dir, report_table, synthetic_segmenter,
    write_report, Readout,
};
use crate::hazard::rank_candidates;
use crate::io::{
    read_candidates, read_jsonl, read_label_map, read_rgb_png, render_overlay, write_candidates, write_jsonl,
    write_label_map, write_rgb_png, CandidateRecord, FileDigest, Manifest, OverlayMark, OverlayStatus,
    PrecomputedSegmenter, RgbImage,
};
use crate::labels::{Rect, SemanticMap};
use crate::monitors::MonitorKind;
use crate::perturbation::{apply_raster, PerturbationSpec, Raster};
use crate::segmentation::{Resolution, Segmenter};
use crate::selection::default_region;
use crate::synth;

/// Environment variable holding the log filter (e.g. `info`, `elz=debug`).
pub const LOG_ENV: &str = "ELZ_LOG";

/// Exit code when a run finished but some images failed.
pub const EXIT_PARTIAL: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "elz",
    version,
    about = "Emergency landing zone selection and monitor evaluation"
)]
pub struct Cli {
    /// Run configuration (TOML). Defaults apply when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Overrides the configuration's seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Worker threads for per-image work; 0 uses every core.
    #[arg(long, global = true, default_value_t = 0)]
    pub jobs: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic dataset of ground-truth label maps.
    Synth {
        /// Number of maps; defaults to `synth.count`.
        #[arg(long)]
        count: Option<usize>,
    },
    /// Apply a perturbation to an RGB image.
    Perturb {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// Perturbation name from `evaluation.perturbations` (e.g. `fog`, `motion_blur`).
        #[arg(long)]
        perturbation: String,
    },
    /// Write the core model's landing candidates for one image.
    Candidates(ImageArgs),
    /// Rank candidates of one image by estimated hazard.
    Rank {
        #[command(flatten)]
        image: ImageArgs,
        /// Rank this candidate records file instead of regenerating candidates.
        #[arg(long)]
        candidates: Option<PathBuf>,
    },
    /// Run one monitor over the ranked candidates of one image.
    Monitor {
        #[command(flatten)]
        image: ImageArgs,
        /// Monitor name: LHD, LHD+CH, LHD+MCD or LHD+CH+MCD; defaults to `monitor.kind`.
        #[arg(long)]
        monitor: Option<String>,
    },
    /// Run the perturbation x monitor grid over the dataset and report.
    Evaluate {
        /// Rebuild the report from an existing readouts file.
        #[arg(long)]
        report_only: bool,
    },
    /// Rebuild and print the report from an existing readouts file.
    Report,
}

#[derive(Debug, Args)]
pub struct ImageArgs {
    /// Image id (file stem under `labels/`).
    #[arg(long)]
    pub image: String,
    /// Perturbation name from `evaluation.perturbations`; none by default.
    #[arg(long)]
    pub perturbation: Option<String>,
    /// Also render a diagnostic overlay PNG.
    #[arg(long)]
    pub overlay: bool,
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::new().filter_or(LOG_ENV, "warn")).try_init();
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 64 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

/// Loads the config, applies command-line overrides and runs the command.
pub fn execute(cli: &Cli) -> Result<i32> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs)
        .build()
        .map_err(|e| Error::config(format!("cannot start {} worker threads: {e}", cli.jobs)))?;
    pool.install(|| match &cli.command {
        Command::Synth { count } => cmd_synth(&cfg, *count),
        Command::Perturb {
            input,
            output,
            perturbation,
        } => cmd_perturb(&cfg, input, output, perturbation),
        Command::Candidates(a) => cmd_candidates(&cfg, a),
        Command::Rank { image, candidates } => cmd_rank(&cfg, image, candidates.as_deref()),
        Command::Monitor { image, monitor } => cmd_monitor(&cfg, image, monitor.as_deref()),
        Command::Evaluate { report_only } => cmd_evaluate(&cfg, *report_only),
        Command::Report => cmd_report(&cfg),
    })
}

fn labels_dir(cfg: &RunConfig) -> PathBuf {
    cfg.paths.dataset_dir.join("labels")
}

/// Image ids of the dataset, sorted.
pub fn dataset_images(cfg: &RunConfig) -> Result<Vec<String>> {
    cfg.require_dataset()?;
    let dir = labels_dir(cfg);
    let entries = std::fs::read_dir(&dir).map_err(|e| Error::io(&dir, e))?;
    let mut ids = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(&dir, e))?.path();
        if path.extension().is_some_and(|e| e == "png") {
            if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                ids.push(stem.to_string());
            }
        }
    }
    ids.sort();
    Ok(ids)
}

fn perturbation_named(cfg: &RunConfig, name: Option<&str>) -> Result<PerturbationSpec> {
    let Some(name) = name else {
        return Ok(PerturbationSpec::none());
    };
    let wanted = name.trim().to_ascii_lowercase().replace([' ', '-'], "_");
    if wanted == "none" {
        return Ok(PerturbationSpec::none());
    }
    let grid = cfg.perturbation_grid();
    grid.iter()
        .find(|p| p.perturbation.slug() == wanted)
        .copied()
        .ok_or_else(|| {
            let known: Vec<String> = grid.iter().map(|p| p.perturbation.slug()).collect();
            Error::config(format!(
                "unknown perturbation {name:?}; configured: {}",
                known.join(", ")
            ))
        })
}

fn manifest(cfg: &RunConfig, command: &str) -> Manifest {
    Manifest::new(command, cfg.seed, &cfg.to_toml_string())
}

fn digests(paths: &[PathBuf]) -> Result<Vec<FileDigest>> {
    paths.iter().map(|p| FileDigest::of(p)).collect()
}

fn cmd_synth(cfg: &RunConfig, count: Option<usize>) -> Result<i32> {
    let count = count.unwrap_or(cfg.synth.count);
    if count == 0 {
        return Err(Error::config("synth count must be >= 1"));
    }
    cfg.synth.validate()?;
    let dir = labels_dir(cfg);
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let outputs: Vec<PathBuf> = (0..count as u64)
        .map(|i| dir.join(format!("synth_{i:05}.png")))
        .collect();
    use rayon::prelude::*;
    outputs
        .par_iter()
        .enumerate()
        .try_for_each(|(i, path)| write_label_map(path, &synth::generate(&cfg.synth, cfg.seed, i as u64)?))?;
    let mut m = manifest(cfg, "synth");
    m.outputs = digests(&outputs)?;
    m.details = serde_json::json!({ "count": count, "width": cfg.synth.width * cfg.synth.hd_scale,
        "height": cfg.synth.height * cfg.synth.hd_scale });
    m.write(&cfg.paths.dataset_dir.join("manifest.synth.json"))?;
    println!("wrote {count} label maps to {}", dir.display());
    Ok(0)
}

fn to_raster(img: &RgbImage) -> Raster {
    let data = img.data.iter().map(|&v| v as f32 / 255.0).collect();
    Raster::new(img.width, img.height, data).expect("rgb image has three channels")
}

fn from_raster(r: &Raster) -> RgbImage {
    RgbImage {
        width: r.width(),
        height: r.height(),
        data: r
            .data()
            .iter()
            .map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
            .collect(),
    }
}

fn cmd_perturb(cfg: &RunConfig, input: &Path, output: &Path, name: &str) -> Result<i32> {
    let spec = perturbation_named(cfg, Some(name))?;
    let id = input.file_stem().and_then(|s| s.to_str()).unwrap_or("image");
    let spec = cfg.perturbation_for(&spec, id);
    let out = apply_raster(&to_raster(&read_rgb_png(input)?), &spec)?;
    write_rgb_png(output, &from_raster(&out))?;
    let mut m = manifest(cfg, "perturb");
    m.inputs = digests(&[input.to_path_buf()])?;
    m.outputs = digests(&[output.to_path_buf()])?;
    m.details = serde_json::json!({ "perturbation": spec });
    m.write(&output.with_extension("manifest.json"))?;
    Ok(0)
}

/// The segmenter used by per-image commands.
enum ImageSegmenter<'a> {
    Synthetic(Box<crate::segmentation::SyntheticSegmenter<'a>>),
    Precomputed(PrecomputedSegmenter),
}

impl ImageSegmenter<'_> {
    fn as_dyn(&self) -> &dyn Segmenter {
        match self {
            ImageSegmenter::Synthetic(s) => s.as_ref(),
            ImageSegmenter::Precomputed(s) => s,
        }
    }
}

struct ImageRun {
    id: String,
    gt_path: PathBuf,
    gt: SemanticMap,
    pert: PerturbationSpec,
    out_dir: PathBuf,
}

fn image_run(cfg: &RunConfig, a: &ImageArgs) -> Result<ImageRun> {
    cfg.require_dataset()?;
    let gt_path = labels_dir(cfg).join(format!("{}.png", a.image));
    let gt = read_label_map(&gt_path)?;
    Ok(ImageRun {
        id: a.image.clone(),
        gt_path,
        gt,
        pert: perturbation_named(cfg, a.perturbation.as_deref())?,
        out_dir: cfg.paths.output_dir.join(&a.image),
    })
}

fn segmenter<'a>(cfg: &RunConfig, run: &'a ImageRun) -> Result<ImageSegmenter<'a>> {
    Ok(match cfg.segmenter_source {
        SegmenterSource::Synthetic => {
            ImageSegmenter::Synthetic(Box::new(synthetic_segmenter(cfg, &run.id, &run.gt, &run.pert)?))
        }
        SegmenterSource::Precomputed => ImageSegmenter::Precomputed(PrecomputedSegmenter::load(
            &precomputed_dir(cfg, &run.pert),
            &run.id,
            cfg.segmenter.hd_scale,
        )?),
    })
}

fn low_labels(seg: &dyn Segmenter) -> Result<SemanticMap> {
    let (w, h) = seg.frame_size(Resolution::Low);
    seg.segment_labels(Rect::full(w, h), Resolution::Low)
}

fn write_overlay(cfg: &RunConfig, path: &Path, labels: &SemanticMap, marks: &[OverlayMark]) -> Result<()> {
    let def = default_region(&cfg.camera, cfg.selection.default_frac)?.region;
    write_rgb_png(path, &render_overlay(labels, marks, Some(def)))
}

fn finish_image_command(
    cfg: &RunConfig,
    run: &ImageRun,
    command: &str,
    mut outputs: Vec<PathBuf>,
    overlay: Option<PathBuf>,
) -> Result<()> {
    outputs.extend(overlay);
    let mut m = manifest(cfg, command);
    m.inputs = digests(std::slice::from_ref(&run.gt_path))?;
    m.outputs = digests(&outputs)?;
    m.details = serde_json::json!({ "image": run.id, "perturbation": run.pert.name() });
    m.write(&run.out_dir.join(format!("manifest.{command}.json")))
}

fn cmd_candidates(cfg: &RunConfig, a: &ImageArgs) -> Result<i32> {
    let run = image_run(cfg, a)?;
    let seg = segmenter(cfg, &run)?;
    let low = low_labels(seg.as_dyn())?;
    let set = generate_candidates(&low, &cfg.camera, &cfg.safety, &cfg.candidates_for(&run.id))?;
    let records: Vec<CandidateRecord> = set.candidates.iter().map(CandidateRecord::from).collect();
    let path = run.out_dir.join("candidates.csv");
    write_candidates(&path, &records)?;
    let overlay = if a.overlay {
        let marks: Vec<OverlayMark> = set
            .candidates
            .iter()
            .map(|c| OverlayMark {
                x: c.x,
                y: c.y,
                radius_px: c.radius_px,
                rank: None,
                status: OverlayStatus::Unmonitored,
            })
            .collect();
        let p = run.out_dir.join("candidates.overlay.png");
        write_overlay(cfg, &p, &low, &marks)?;
        Some(p)
    } else {
        None
    };
    finish_image_command(cfg, &run, "candidates", vec![path.clone()], overlay)?;
    println!("{} candidates -> {}", records.len(), path.display());
    Ok(0)
}

fn cmd_rank(cfg: &RunConfig, a: &ImageArgs, from: Option<&Path>) -> Result<i32> {
    let run = image_run(cfg, a)?;
    let seg = segmenter(cfg, &run)?;
    let low = low_labels(seg.as_dyn())?;
    let set = generate_candidates(&low, &cfg.camera, &cfg.safety, &cfg.candidates_for(&run.id))?;
    let cands = match from {
        Some(p) => read_candidates(p)?.iter().map(CandidateRecord::candidate).collect(),
        None => set.candidates.clone(),
    };
    let ranked = rank_candidates(
        &cands,
        &low,
        &set.forbidden,
        &cfg.camera,
        &cfg.safety,
        &cfg.effective_hazard(),
    )?;
    let records: Vec<CandidateRecord> = ranked.iter().map(CandidateRecord::from).collect();
    let path = run.out_dir.join("ranked.csv");
    write_candidates(&path, &records)?;
    let overlay = if a.overlay {
        let marks: Vec<OverlayMark> = ranked
            .iter()
            .map(|s| OverlayMark {
                x: s.candidate.x,
                y: s.candidate.y,
                radius_px: s.candidate.radius_px,
                rank: Some(s.rank),
                status: OverlayStatus::Unmonitored,
            })
            .collect();
        let p = run.out_dir.join("ranked.overlay.png");
        write_overlay(cfg, &p, &low, &marks)?;
        Some(p)
    } else {
        None
    };
    finish_image_command(cfg, &run, "rank", vec![path.clone()], overlay)?;
    println!("{} ranked candidates -> {}", records.len(), path.display());
    Ok(0)
}

fn monitor_slug(k: MonitorKind) -> String {
    k.name().to_ascii_lowercase().replace('+', "_")
}

fn cmd_monitor(cfg: &RunConfig, a: &ImageArgs, name: Option<&str>) -> Result<i32> {
    let kind = match name {
        Some(n) => MonitorKind::parse(n).ok_or_else(|| Error::config(format!("unknown monitor {n:?}")))?,
        None => cfg.monitor.kind,
    };
    let run = image_run(cfg, a)?;
    let seg = segmenter(cfg, &run)?;
    let readouts = evaluate_image(cfg, &run.id, &run.gt, &run.pert, seg.as_dyn(), &[kind])?;
    let path = run.out_dir.join(format!("monitor.{}.jsonl", monitor_slug(kind)));
    write_jsonl(&path, &readouts)?;
    let overlay = if a.overlay {
        let low = low_labels(seg.as_dyn())?;
        let marks: Vec<OverlayMark> = readouts
            .iter()
            .filter_map(|r| match r {
                Readout::Candidate(c) => Some(OverlayMark {
                    x: c.x,
                    y: c.y,
                    radius_px: c.radius_px,
                    rank: Some(c.rank),
                    status: if c.accepted {
                        OverlayStatus::Accepted
                    } else {
                        OverlayStatus::Rejected
                    },
                }),
                _ => None,
            })
            .collect();
        let p = run.out_dir.join(format!("monitor.{}.overlay.png", monitor_slug(kind)));
        write_overlay(cfg, &p, &low, &marks)?;
        Some(p)
    } else {
        None
    };
    finish_image_command(cfg, &run, "monitor", vec![path.clone()], overlay)?;
    for r in &readouts {
        if let Readout::Image(im) = r {
            println!(
                "{} {}: chosen {:?}, G_CM {:.3}, G_RM {:.3}, G* {:.3}",
                im.image, kind, im.chosen, im.g_cm, im.g_rm, im.g_star
            );
        }
    }
    Ok(0)
}

fn readouts_path(cfg: &RunConfig) -> PathBuf {
    cfg.paths.output_dir.join("readouts.jsonl")
}

fn rebuild_report(cfg: &RunConfig) -> Result<(Vec<Readout>, String)> {
    let path = readouts_path(cfg);
    let readouts: Vec<Readout> = read_jsonl(&path)?;
    let rows = aggregate_report(&readouts, cfg.evaluation.aggregation);
    write_report(&cfg.paths.output_dir, &rows, cfg.evaluation.aggregation)?;
    Ok((readouts, report_table(&rows, cfg.evaluation.aggregation)))
}

fn error_summary(readouts: &[Readout]) -> i32 {
    let errors: Vec<_> = readouts
        .iter()
        .filter_map(|r| match r {
            Readout::Error(e) => Some(e),
            _ => None,
        })
        .collect();
    if errors.is_empty() {
        return 0;
    }
    eprintln!("{} evaluation unit(s) failed:", errors.len());
    for e in &errors {
        eprintln!(
            "  {} [{}]: {}",
            e.image,
            e.perturbation.as_deref().unwrap_or("all"),
            e.message
        );
    }
    EXIT_PARTIAL
}

fn cmd_evaluate(cfg: &RunConfig, report_only: bool) -> Result<i32> {
    if report_only {
        return cmd_report(cfg);
    }
    let images = dataset_images(cfg)?;
    if images.is_empty() {
        return Err(Error::config(format!(
            "no label maps under {}",
            labels_dir(cfg).display()
        )));
    }
    let dir = labels_dir(cfg);
    let readouts = evaluate_dataset(cfg, &images, |id| read_label_map(&dir.join(format!("{id}.png"))));
    let path = readouts_path(cfg);
    write_jsonl(&path, &readouts)?;
    let (_, table) = rebuild_report(cfg)?;
    print!("{table}");

    let inputs: Vec<PathBuf> = images.iter().map(|id| dir.join(format!("{id}.png"))).collect();
    let out = &cfg.paths.output_dir;
    let mut m = manifest(cfg, "evaluate");
    m.inputs = inputs
        .iter()
        .filter(|p| p.is_file())
        .map(|p| FileDigest::of(p))
        .collect::<Result<_>>()?;
    m.outputs = digests(&[path, out.join("report.csv"), out.join("report.txt")])?;
    m.details = serde_json::json!({ "images": images.len() });
    m.write(&out.join("manifest.evaluate.json"))?;
    Ok(error_summary(&readouts))
}

fn cmd_report(cfg: &RunConfig) -> Result<i32> {
    let (readouts, table) = rebuild_report(cfg)?;
    print!("{table}");
    let out = &cfg.paths.output_dir;
    let mut m = manifest(cfg, "report");
    m.inputs = digests(&[readouts_path(cfg)])?;
    m.outputs = digests(&[out.join("report.csv"), out.join("report.txt")])?;
    m.write(&out.join("manifest.report.json"))?;
    Ok(error_summary(&readouts))
}
