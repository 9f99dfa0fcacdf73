//! System-level evaluation: ground-truth hazard, monitor confusion counts and
//! metrics, safety gains, per-image readouts and their aggregation.
//!
//! Safety gains are reported so that positive means safer: the gain of a
//! stage is the hazard before it minus the hazard after it.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::candidates::generate_candidates;
use crate::config::{Aggregation, RunConfig, SegmenterSource, TrueHazardConfig};
use crate::error::{Error, Result};
use crate::hazard::{rank_candidates, HazardWeights, ScoredCandidate};
use crate::io::{self, PrecomputedSegmenter};
use crate::labels::{CategoryId, Rect, SemanticMap, NUM_CATEGORIES};
use crate::monitors::{monitor_composed, MonitorConfig, MonitorKind, VerdictReason};
use crate::perturbation::{degradation, PerturbationSpec};
use crate::segmentation::{Resolution, Segmenter, SyntheticSegmenter};
use crate::selection::{default_region, run_selection, Attempt, Choice};

/// Ground-truth hazard of a low-resolution region: 1 when the matching
/// native region holds any unsafe pixel, else `(1 - kappa)` times its
/// normalized semantic hazard. `scale` maps low-resolution to native pixels.
pub fn true_hazard(
    region: Rect,
    gt: &SemanticMap,
    scale: usize,
    w: &HazardWeights,
    k: &TrueHazardConfig,
) -> Result<f64> {
    let r = region.scaled(scale);
    if r.is_empty() || !r.fits_in(gt.width(), gt.height()) {
        return Err(Error::domain(format!(
            "region {region:?} (x{scale}) is outside the {}x{} ground truth",
            gt.width(),
            gt.height()
        )));
    }
    let hist = gt.histogram(r);
    let mut weighted = 0.0;
    for (i, &n) in hist.iter().enumerate().take(NUM_CATEGORIES) {
        if n == 0 {
            continue;
        }
        match w.scores.get(CategoryId::ALL[i]) {
            Some(s) => weighted += n as f64 * s,
            None => return Ok(1.0),
        }
    }
    let h_s = weighted / r.area() as f64 / w.scores.max();
    Ok((1.0 - k.kappa) * h_s)
}

/// Whether a low-resolution region covers unsafe ground truth.
pub fn truly_unsafe(region: Rect, gt: &SemanticMap, scale: usize) -> bool {
    gt.any_unsafe(region.scaled(scale))
}

/// Monitor outcomes against ground truth. A positive is a rejection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionCounts {
    /// Rejected unsafe candidates.
    pub tp: u64,
    /// Rejected safe candidates.
    pub fp: u64,
    /// Accepted safe candidates.
    pub tn: u64,
    /// Accepted unsafe candidates.
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionCounts {
    pub fn record(&mut self, accepted: bool, unsafe_truth: bool) {
        match (accepted, unsafe_truth) {
            (false, true) => self.tp += 1,
            (false, false) => self.fp += 1,
            (true, false) => self.tn += 1,
            (true, true) => self.fn_ += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }
}

impl std::ops::Add for ConfusionCounts {
    type Output = ConfusionCounts;

    fn add(self, o: ConfusionCounts) -> ConfusionCounts {
        ConfusionCounts {
            tp: self.tp + o.tp,
            fp: self.fp + o.fp,
            tn: self.tn + o.tn,
            fn_: self.fn_ + o.fn_,
        }
    }
}

/// Counts over the candidates actually submitted to the monitor.
/// `ranked` supplies each attempt's clearance square.
pub fn classify_verdicts(
    attempts: &[Attempt],
    ranked: &[ScoredCandidate],
    gt: &SemanticMap,
    scale: usize,
) -> Result<ConfusionCounts> {
    let mut cc = ConfusionCounts::default();
    for a in attempts {
        let s = ranked
            .iter()
            .find(|s| s.candidate.id == a.candidate_id)
            .ok_or_else(|| Error::inconsistent(format!("attempted candidate {} was never ranked", a.candidate_id)))?;
        cc.record(a.verdict.accepted, truly_unsafe(s.candidate.square(), gt, scale));
    }
    Ok(cc)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassificationMetrics {
    pub precision: f64,
    pub recall: f64,
    pub fp_rate: f64,
    pub f1: f64,
    pub mcc: f64,
}

/// Precision, recall, false-positive rate, F1 and Matthews correlation.
///
/// Zero denominators: precision is 1 when nothing was rejected and nothing
/// unsafe was accepted, else 0; recall is 1 when nothing was unsafe and
/// nothing safe was rejected, else 0; the false-positive rate and MCC are 0;
/// F1 is 0 when precision and recall are both 0.
pub fn classification_metrics(cc: &ConfusionCounts) -> ClassificationMetrics {
    let (tp, fp, tn, fn_) = (cc.tp as f64, cc.fp as f64, cc.tn as f64, cc.fn_ as f64);
    let precision = if cc.tp + cc.fp == 0 {
        if cc.fn_ == 0 {
            1.0
        } else {
            0.0
        }
    } else {
        tp / (tp + fp)
    };
    let recall = if cc.tp + cc.fn_ == 0 {
        if cc.fp == 0 {
            1.0
        } else {
            0.0
        }
    } else {
        tp / (tp + fn_)
    };
    let fp_rate = if cc.fp + cc.tn == 0 { 0.0 } else { fp / (fp + tn) };
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    let denom = (tp + fp) * (tp + fn_) * (tn + fp) * (tn + fn_);
    let mcc = if denom == 0.0 {
        0.0
    } else {
        (tp * tn - fp * fn_) / denom.sqrt()
    };
    ClassificationMetrics {
        precision,
        recall,
        fp_rate,
        f1,
        mcc,
    }
}

/// Reported safety gains (positive = safer).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SafetyGains {
    /// Core model over the default action.
    pub g_cm: f64,
    /// Runtime monitor over the core model.
    pub g_rm: f64,
    /// Whole pipeline over the default action; always `g_cm + g_rm`.
    pub g_star: f64,
}

impl SafetyGains {
    /// The unreported hazard differences, later stage minus earlier stage,
    /// which are negative when a stage lowers the hazard.
    pub fn hazard_differences(&self) -> SafetyGains {
        SafetyGains {
            g_cm: -self.g_cm,
            g_rm: -self.g_rm,
            g_star: -self.g_star,
        }
    }
}

/// Gains from the ground-truth hazards of the default action, the core
/// model's first choice and the monitored final choice.
pub fn safety_gains(h_default: f64, h_cm_choice: f64, h_final: f64) -> SafetyGains {
    let g_cm = h_default - h_cm_choice;
    let g_rm = h_cm_choice - h_final;
    SafetyGains {
        g_cm,
        g_rm,
        g_star: g_cm + g_rm,
    }
}

/// One monitored candidate of one image under one perturbation and monitor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateReadout {
    pub image: String,
    pub perturbation: String,
    pub monitor: MonitorKind,
    pub candidate_id: usize,
    pub rank: usize,
    pub x: usize,
    pub y: usize,
    pub radius_px: usize,
    pub h: f64,
    pub true_hazard: f64,
    pub truly_unsafe: bool,
    pub accepted: bool,
    pub reason: VerdictReason,
    pub elapsed_s: f64,
}

/// Landing outcome of one image under one perturbation and monitor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageReadout {
    pub image: String,
    pub perturbation: String,
    pub monitor: MonitorKind,
    /// Ground-truth hazard of the default action.
    pub h_default: f64,
    /// Ground-truth hazard of the core model's first choice.
    pub h_cm: f64,
    /// Ground-truth hazard of the final choice.
    pub h_final: f64,
    pub chosen: Choice,
    pub cm_choice: Option<usize>,
    pub g_cm: f64,
    pub g_rm: f64,
    pub g_star: f64,
    pub monitor_time_s: f64,
    pub n_candidates: usize,
}

/// An image (or image and perturbation) that could not be evaluated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReadout {
    pub image: String,
    pub perturbation: Option<String>,
    pub message: String,
}

/// One line of a readouts file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
pub enum Readout {
    Candidate(CandidateReadout),
    Image(ImageReadout),
    Error(ErrorReadout),
}

/// The seeded synthetic segmenter for one image under one perturbation.
pub fn synthetic_segmenter<'a>(
    cfg: &RunConfig,
    image: &str,
    gt: &'a SemanticMap,
    pert: &PerturbationSpec,
) -> Result<SyntheticSegmenter<'a>> {
    let pert = cfg.perturbation_for(pert, image);
    let d = degradation(&pert, cfg.camera.image_width_px, cfg.camera.image_height_px);
    Ok(SyntheticSegmenter::new(cfg.segmenter_for(image), gt)?.with_degradation(d))
}

/// Directory of precomputed segmentations for one perturbation.
pub fn precomputed_dir(cfg: &RunConfig, pert: &PerturbationSpec) -> std::path::PathBuf {
    cfg.paths
        .dataset_dir
        .join("segmentations")
        .join(pert.perturbation.slug())
}

/// Runs the core model once and every monitor in `monitors` on one image.
pub fn evaluate_image(
    cfg: &RunConfig,
    image: &str,
    gt: &SemanticMap,
    pert: &PerturbationSpec,
    seg: &dyn Segmenter,
    monitors: &[MonitorKind],
) -> Result<Vec<Readout>> {
    if seg.native_size() != (gt.width(), gt.height()) {
        return Err(Error::config(format!(
            "segmenter frame {:?} does not match the {}x{} ground truth",
            seg.native_size(),
            gt.width(),
            gt.height()
        )));
    }
    let s = seg.hd_scale();
    let (lw, lh) = seg.frame_size(Resolution::Low);
    let low = seg.segment_labels(Rect::full(lw, lh), Resolution::Low)?;
    let cset = generate_candidates(&low, &cfg.camera, &cfg.safety, &cfg.candidates_for(image))?;
    let ranked = rank_candidates(
        &cset.candidates,
        &low,
        &cset.forbidden,
        &cfg.camera,
        &cfg.safety,
        &cfg.effective_hazard(),
    )?;

    let th = |r: Rect| true_hazard(r, gt, s, &cfg.hazard, &cfg.true_hazard);
    let truth: BTreeMap<usize, (f64, bool)> = ranked
        .iter()
        .map(|sc| {
            let sq = sc.candidate.square();
            Ok((sc.candidate.id, (th(sq)?, truly_unsafe(sq, gt, s))))
        })
        .collect::<Result<_>>()?;
    let hazard_of = |choice: Option<usize>, fallback: f64| match choice {
        Some(id) => truth[&id].0,
        None => fallback,
    };
    let h_default = th(default_region(&cfg.camera, cfg.selection.default_frac)?.region)?;
    let first = ranked.iter().min_by_key(|sc| sc.rank).map(|sc| sc.candidate.id);
    let h_cm = hazard_of(first, h_default);

    let pname = pert.name().to_string();
    let mut out = Vec::new();
    for &kind in monitors {
        let mcfg = MonitorConfig { kind, ..cfg.monitor };
        let outcome = run_selection(
            &ranked,
            |sc| monitor_composed(&sc.candidate, seg, &mcfg),
            cfg.selection.limits(),
        )?;
        for a in &outcome.attempts {
            let sc = ranked
                .iter()
                .find(|sc| sc.candidate.id == a.candidate_id)
                .expect("attempts come from the ranked list");
            let (true_hazard, truly_unsafe) = truth[&a.candidate_id];
            out.push(Readout::Candidate(CandidateReadout {
                image: image.to_string(),
                perturbation: pname.clone(),
                monitor: kind,
                candidate_id: a.candidate_id,
                rank: a.rank,
                x: sc.candidate.x,
                y: sc.candidate.y,
                radius_px: sc.candidate.radius_px,
                h: sc.h,
                true_hazard,
                truly_unsafe,
                accepted: a.verdict.accepted,
                reason: a.verdict.reason,
                elapsed_s: a.verdict.elapsed_s,
            }));
        }
        let chosen_id = match outcome.chosen {
            Choice::Candidate(id) => Some(id),
            Choice::DefaultAction => None,
        };
        let h_final = hazard_of(chosen_id, h_default);
        let g = safety_gains(h_default, h_cm, h_final);
        out.push(Readout::Image(ImageReadout {
            image: image.to_string(),
            perturbation: pname.clone(),
            monitor: kind,
            h_default,
            h_cm,
            h_final,
            chosen: outcome.chosen,
            cm_choice: outcome.cm_choice,
            g_cm: g.g_cm,
            g_rm: g.g_rm,
            g_star: g.g_star,
            monitor_time_s: outcome.total_monitor_time_s,
            n_candidates: ranked.len(),
        }));
    }
    Ok(out)
}

/// Every perturbation and monitor of the config on one image. Failures
/// become error records instead of aborting the image's other perturbations.
pub fn evaluate_image_grid(cfg: &RunConfig, image: &str, gt: &SemanticMap) -> Vec<Readout> {
    let mut out = Vec::new();
    for pert in &cfg.perturbation_grid() {
        let result = match cfg.segmenter_source {
            SegmenterSource::Synthetic => synthetic_segmenter(cfg, image, gt, pert)
                .and_then(|seg| evaluate_image(cfg, image, gt, pert, &seg, &cfg.evaluation.monitors)),
            SegmenterSource::Precomputed => {
                PrecomputedSegmenter::load(&precomputed_dir(cfg, pert), image, cfg.segmenter.hd_scale)
                    .and_then(|seg| evaluate_image(cfg, image, gt, pert, &seg, &cfg.evaluation.monitors))
            }
        };
        match result {
            Ok(records) => out.extend(records),
            Err(e) => {
                log::warn!("{image} / {}: {e}", pert.name());
                out.push(Readout::Error(ErrorReadout {
                    image: image.to_string(),
                    perturbation: Some(pert.name().to_string()),
                    message: e.to_string(),
                }));
            }
        }
    }
    out
}

/// Evaluates images in parallel on the current rayon pool. Readouts keep
/// the order of `images`, so the output does not depend on thread count.
pub fn evaluate_dataset<F>(cfg: &RunConfig, images: &[String], load: F) -> Vec<Readout>
where
    F: Fn(&str) -> Result<SemanticMap> + Sync,
{
    images
        .par_iter()
        .map(|id| match load(id) {
            Ok(gt) => evaluate_image_grid(cfg, id, &gt),
            Err(e) => {
                log::warn!("{id}: {e}");
                vec![Readout::Error(ErrorReadout {
                    image: id.clone(),
                    perturbation: None,
                    message: e.to_string(),
                })]
            }
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect()
}

/// One (perturbation, monitor) cell of the report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub perturbation: String,
    pub monitor: MonitorKind,
    pub n_images: usize,
    /// Pooled over the cell's images.
    pub counts: ConfusionCounts,
    pub metrics: ClassificationMetrics,
    pub g_cm: f64,
    pub g_rm: f64,
    pub g_star: f64,
    /// Mean monitoring time per image, in seconds.
    pub overhead_s: f64,
}

fn mean(v: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Groups readouts by (perturbation, monitor) in order of first appearance.
/// Cells without image records do not appear.
pub fn aggregate_report(readouts: &[Readout], aggregation: Aggregation) -> Vec<ReportRow> {
    type Key = (String, MonitorKind);
    let mut order: Vec<Key> = Vec::new();
    let mut images: BTreeMap<Key, Vec<&ImageReadout>> = BTreeMap::new();
    let mut counts: BTreeMap<(Key, &str), ConfusionCounts> = BTreeMap::new();
    for r in readouts {
        match r {
            Readout::Image(im) => {
                let key = (im.perturbation.clone(), im.monitor);
                if !images.contains_key(&key) {
                    order.push(key.clone());
                }
                images.entry(key).or_default().push(im);
            }
            Readout::Candidate(c) => {
                let key = (c.perturbation.clone(), c.monitor);
                counts
                    .entry((key, c.image.as_str()))
                    .or_default()
                    .record(c.accepted, c.truly_unsafe);
            }
            Readout::Error(_) => {}
        }
    }
    order
        .into_iter()
        .map(|key| {
            let ims = &images[&key];
            let per_image: Vec<ConfusionCounts> = ims
                .iter()
                .map(|im| {
                    counts
                        .get(&(key.clone(), im.image.as_str()))
                        .copied()
                        .unwrap_or_default()
                })
                .collect();
            let pooled = per_image.iter().fold(ConfusionCounts::default(), |a, &b| a + b);
            let metrics = match aggregation {
                Aggregation::Micro => classification_metrics(&pooled),
                Aggregation::Macro => {
                    let ms: Vec<ClassificationMetrics> = per_image.iter().map(classification_metrics).collect();
                    ClassificationMetrics {
                        precision: mean(ms.iter().map(|m| m.precision)),
                        recall: mean(ms.iter().map(|m| m.recall)),
                        fp_rate: mean(ms.iter().map(|m| m.fp_rate)),
                        f1: mean(ms.iter().map(|m| m.f1)),
                        mcc: mean(ms.iter().map(|m| m.mcc)),
                    }
                }
            };
            ReportRow {
                perturbation: key.0.clone(),
                monitor: key.1,
                n_images: ims.len(),
                counts: pooled,
                metrics,
                g_cm: mean(ims.iter().map(|im| im.g_cm)),
                g_rm: mean(ims.iter().map(|im| im.g_rm)),
                g_star: mean(ims.iter().map(|im| im.g_star)),
                overhead_s: mean(ims.iter().map(|im| im.monitor_time_s)),
            }
        })
        .collect()
}

pub const REPORT_COLUMNS: [&str; 16] = [
    "perturbation",
    "monitor",
    "n_images",
    "MCC",
    "F1",
    "Precision",
    "Recall",
    "FP rate",
    "G_CM",
    "G_RM",
    "Overhead",
    "G*",
    "tp",
    "fp",
    "tn",
    "fn",
];

pub fn report_csv(rows: &[ReportRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(REPORT_COLUMNS)?;
    for r in rows {
        let m = &r.metrics;
        w.write_record([
            r.perturbation.clone(),
            r.monitor.name().to_string(),
            r.n_images.to_string(),
            m.mcc.to_string(),
            m.f1.to_string(),
            m.precision.to_string(),
            m.recall.to_string(),
            m.fp_rate.to_string(),
            r.g_cm.to_string(),
            r.g_rm.to_string(),
            r.overhead_s.to_string(),
            r.g_star.to_string(),
            r.counts.tp.to_string(),
            r.counts.fp.to_string(),
            r.counts.tn.to_string(),
            r.counts.fn_.to_string(),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Csv(e.into_error().into()))?;
    Ok(String::from_utf8(bytes).expect("csv of utf-8 fields"))
}

/// Fixed-width table for terminals, with the gain sign convention stated.
pub fn report_table(rows: &[ReportRow], aggregation: Aggregation) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "Safety gains: positive = safer (hazard before the stage minus hazard after it). \
         Classification metrics: {} over images. Overhead: mean monitor seconds per image.",
        match aggregation {
            Aggregation::Micro => "counts pooled",
            Aggregation::Macro => "per-image metrics averaged",
        }
    );
    let _ = writeln!(
        s,
        "{:<16} {:<11} {:>5} {:>7} {:>6} {:>6} {:>6} {:>7} {:>7} {:>7} {:>9} {:>7}",
        "Perturbation", "Monitor", "N", "MCC", "F1", "P", "R", "FPR", "G_CM", "G_RM", "Overhead", "G*"
    );
    for r in rows {
        let m = &r.metrics;
        let _ = writeln!(
            s,
            "{:<16} {:<11} {:>5} {:>7.3} {:>6.3} {:>6.3} {:>6.3} {:>7.3} {:>7.3} {:>7.3} {:>9.4} {:>7.3}",
            r.perturbation,
            r.monitor.name(),
            r.n_images,
            m.mcc,
            m.f1,
            m.precision,
            m.recall,
            m.fp_rate,
            r.g_cm,
            r.g_rm,
            r.overhead_s,
            r.g_star
        );
    }
    s
}

/// Writes `report.csv` and `report.txt` into `dir`.
pub fn write_report(dir: &Path, rows: &[ReportRow], aggregation: Aggregation) -> Result<()> {
    io::write_bytes(&dir.join("report.csv"), report_csv(rows)?.as_bytes())?;
    io::write_bytes(&dir.join("report.txt"), report_table(rows, aggregation).as_bytes())
}
