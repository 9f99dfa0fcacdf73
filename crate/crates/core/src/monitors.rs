//! Runtime monitors that re-check a candidate at high resolution before it is
//! accepted.
//!
//! Every monitor re-segments a high-resolution patch around the candidate's
//! clearance square. LHD rejects on any unsafe label. CH classifies each pixel
//! up the safe/unsafe hierarchy when several categories clear `tau`. MCD
//! replaces the softmax with the bound `S = mean + 3·std` over stochastic passes.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::candidates::Candidate;
use crate::error::{Error, Result, Violations};
use crate::labels::{argmax, CategoryId, Rect, SoftmaxMap, NUM_CATEGORIES};
use crate::segmentation::{Resolution, Segmenter};

/// Node of the landing classification tree: the eight leaves sit under
/// `Safe` or `Unsafe`, both under `Any`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HierarchyNode {
    Leaf(CategoryId),
    Safe,
    Unsafe,
    Any,
}

impl HierarchyNode {
    pub fn parent(self) -> Option<HierarchyNode> {
        match self {
            HierarchyNode::Leaf(c) if c.is_unsafe() => Some(HierarchyNode::Unsafe),
            HierarchyNode::Leaf(_) => Some(HierarchyNode::Safe),
            HierarchyNode::Safe | HierarchyNode::Unsafe => Some(HierarchyNode::Any),
            HierarchyNode::Any => None,
        }
    }

    /// Path from this node up to the root, inclusive.
    pub fn ancestors(self) -> Vec<HierarchyNode> {
        let mut out = vec![self];
        while let Some(p) = out.last().and_then(|n| n.parent()) {
            out.push(p);
        }
        out
    }

    /// True when a pixel classified to this node must not be landed on.
    pub fn is_rejecting(self) -> bool {
        match self {
            HierarchyNode::Leaf(c) => c.is_unsafe(),
            HierarchyNode::Safe => false,
            HierarchyNode::Unsafe | HierarchyNode::Any => true,
        }
    }
}

/// Closest common ancestor of a non-empty set of nodes.
pub fn common_ancestor(nodes: &[HierarchyNode]) -> HierarchyNode {
    let Some(first) = nodes.first() else {
        return HierarchyNode::Any;
    };
    first
        .ancestors()
        .into_iter()
        .find(|a| nodes.iter().all(|n| n.ancestors().contains(a)))
        .unwrap_or(HierarchyNode::Any)
}

/// Leaf of the argmax when at most one category exceeds `tau` (strictly),
/// otherwise the closest common ancestor of all categories that do.
pub fn underclassify<T: Into<f64> + Copy>(probs: &[T], tau: f64) -> HierarchyNode {
    let over: Vec<HierarchyNode> = probs
        .iter()
        .enumerate()
        .filter(|(_, &p)| p.into() > tau)
        .map(|(i, _)| HierarchyNode::Leaf(CategoryId::ALL[i]))
        .collect();
    if over.len() <= 1 {
        let p: Vec<f64> = probs.iter().map(|&p| p.into()).collect();
        return HierarchyNode::Leaf(CategoryId::ALL[argmax(&p)]);
    }
    common_ancestor(&over)
}

/// Per-pixel `S = mean + 3·std` over stochastic passes (population std).
#[derive(Debug, Clone, PartialEq)]
pub struct McdScores {
    width: usize,
    height: usize,
    scores: Vec<f64>,
}

impl McdScores {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixel(&self, x: usize, y: usize) -> &[f64] {
        let i = (y * self.width + x) * NUM_CATEGORIES;
        &self.scores[i..i + NUM_CATEGORIES]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.scores
    }
}

pub fn mcd_scores(passes: &[SoftmaxMap]) -> Result<McdScores> {
    if passes.len() < 2 {
        return Err(Error::domain(format!(
            "MCD scores need at least 2 passes (got {})",
            passes.len()
        )));
    }
    let (w, h) = (passes[0].width(), passes[0].height());
    if passes.iter().any(|p| p.width() != w || p.height() != h) {
        return Err(Error::domain("MCD passes differ in dimensions"));
    }
    let len = w * h * NUM_CATEGORIES;
    let mut mean = vec![0.0f64; len];
    let mut m2 = vec![0.0f64; len];
    for (n, pass) in passes.iter().enumerate() {
        let n = (n + 1) as f64;
        for ((m, s), &v) in mean.iter_mut().zip(m2.iter_mut()).zip(pass.as_slice()) {
            let v = v as f64;
            let delta = v - *m;
            *m += delta / n;
            *s += delta * (v - *m);
        }
    }
    let n = passes.len() as f64;
    let scores = mean
        .iter()
        .zip(&m2)
        .map(|(&m, &s)| m + 3.0 * (s / n).max(0.0).sqrt())
        .collect();
    Ok(McdScores {
        width: w,
        height: h,
        scores,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MonitorKind {
    #[serde(rename = "LHD")]
    Lhd,
    #[serde(rename = "LHD+CH")]
    LhdCh,
    #[serde(rename = "LHD+MCD")]
    LhdMcd,
    #[serde(rename = "LHD+CH+MCD")]
    LhdChMcd,
}

impl MonitorKind {
    pub const ALL: [MonitorKind; 4] = [
        MonitorKind::Lhd,
        MonitorKind::LhdCh,
        MonitorKind::LhdMcd,
        MonitorKind::LhdChMcd,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MonitorKind::Lhd => "LHD",
            MonitorKind::LhdCh => "LHD+CH",
            MonitorKind::LhdMcd => "LHD+MCD",
            MonitorKind::LhdChMcd => "LHD+CH+MCD",
        }
    }

    pub fn parse(s: &str) -> Option<MonitorKind> {
        MonitorKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s.trim()))
    }

    pub fn uses_hierarchy(self) -> bool {
        matches!(self, MonitorKind::LhdCh | MonitorKind::LhdChMcd)
    }

    pub fn uses_mcd(self) -> bool {
        matches!(self, MonitorKind::LhdMcd | MonitorKind::LhdChMcd)
    }
}

impl std::fmt::Display for MonitorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// How verdict times are measured.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum Timing {
    /// Real elapsed time. Not reproducible across runs.
    Wall,
    /// Segmented pixels times a fixed cost, so identical runs give identical readouts.
    Modeled { seconds_per_pixel: f64 },
}

impl Default for Timing {
    fn default() -> Self {
        Timing::Modeled {
            seconds_per_pixel: 1e-7,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MonitorConfig {
    pub kind: MonitorKind,
    pub tau: f64,
    pub n_mcd: usize,
    /// Dropout-rate analog; scales the segmenter's stochastic-pass jitter.
    pub rho: f64,
    /// High-resolution context on each side of the square, as a fraction of its side.
    pub patch_margin_frac: f64,
    pub timing: Timing,
}

impl Default for MonitorConfig {
    fn default() -> Self {
        MonitorConfig {
            kind: MonitorKind::Lhd,
            tau: 0.25,
            n_mcd: 10,
            rho: 0.9,
            patch_margin_frac: 0.25,
            timing: Timing::default(),
        }
    }
}

impl MonitorConfig {
    pub fn with_kind(kind: MonitorKind) -> Self {
        MonitorConfig {
            kind,
            ..MonitorConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut v = Violations::default();
        v.check(self.tau > 0.0 && self.tau <= 0.5, || {
            format!("monitor.tau must be in (0, 0.5] (got {})", self.tau)
        });
        v.check(self.n_mcd >= 2, || {
            format!("monitor.n_mcd must be >= 2 (got {})", self.n_mcd)
        });
        v.check(self.rho > 0.0 && self.rho < 1.0, || {
            format!("monitor.rho must be in (0, 1) (got {})", self.rho)
        });
        v.check(self.patch_margin_frac >= 0.0, || {
            "monitor.patch_margin_frac must be >= 0".into()
        });
        if let Timing::Modeled { seconds_per_pixel } = self.timing {
            v.check(seconds_per_pixel >= 0.0, || {
                "monitor.timing.seconds_per_pixel must be >= 0".into()
            });
        }
        v.into_result()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictReason {
    Clean,
    UnsafePixels,
    UnderclassifiedAny,
    UnderclassifiedUnsafe,
}

impl VerdictReason {
    /// Higher wins when several pixels give different reasons.
    fn severity(self) -> u8 {
        match self {
            VerdictReason::Clean => 0,
            VerdictReason::UnsafePixels => 1,
            VerdictReason::UnderclassifiedUnsafe => 2,
            VerdictReason::UnderclassifiedAny => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            VerdictReason::Clean => "clean",
            VerdictReason::UnsafePixels => "unsafe_pixels",
            VerdictReason::UnderclassifiedAny => "underclassified_any",
            VerdictReason::UnderclassifiedUnsafe => "underclassified_unsafe",
        }
    }

    fn of_node(node: HierarchyNode) -> VerdictReason {
        match node {
            HierarchyNode::Any => VerdictReason::UnderclassifiedAny,
            HierarchyNode::Unsafe => VerdictReason::UnderclassifiedUnsafe,
            HierarchyNode::Leaf(c) if c.is_unsafe() => VerdictReason::UnsafePixels,
            _ => VerdictReason::Clean,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonitorVerdict {
    pub accepted: bool,
    pub reason: VerdictReason,
    pub elapsed_s: f64,
}

/// High-resolution patch segmented for a candidate and the square inside it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MonitorPatch {
    /// Patch in high-resolution frame coordinates.
    pub patch: Rect,
    /// Clearance square in high-resolution frame coordinates.
    pub square: Rect,
}

pub fn monitor_patch(c: &Candidate, seg: &dyn Segmenter, cfg: &MonitorConfig) -> Result<MonitorPatch> {
    let (w, h) = seg.frame_size(Resolution::High);
    let s = seg.hd_scale();
    if c.x < c.half() || c.y < c.half() {
        return Err(Error::domain(format!("candidate {} square leaves the frame", c.id)));
    }
    let square = c.square().scaled(s);
    if !square.fits_in(w, h) || square.is_empty() {
        return Err(Error::domain(format!(
            "candidate {} square {square:?} leaves the {w}x{h} high-resolution frame",
            c.id
        )));
    }
    let margin = (cfg.patch_margin_frac * square.width as f64).ceil() as usize;
    let patch = square.expanded_clipped(margin, w, h);
    if patch.is_empty() {
        return Err(Error::domain(format!(
            "candidate {} patch is empty after clipping",
            c.id
        )));
    }
    Ok(MonitorPatch { patch, square })
}

/// Runs the monitor selected by `cfg.kind` on one candidate.
pub fn monitor_composed(c: &Candidate, seg: &dyn Segmenter, cfg: &MonitorConfig) -> Result<MonitorVerdict> {
    cfg.validate()?;
    let start = Instant::now();
    let MonitorPatch { patch, square } = monitor_patch(c, seg, cfg)?;
    let inner = Rect::new(square.x - patch.x, square.y - patch.y, square.width, square.height);

    let mut reason = VerdictReason::Clean;
    let mut note = |node: HierarchyNode| {
        let r = VerdictReason::of_node(node);
        if r.severity() > reason.severity() {
            reason = r;
        }
    };
    let passes_run;
    if cfg.kind.uses_mcd() {
        let passes = seg.mcd_passes(patch, cfg.n_mcd, cfg.rho)?;
        passes_run = passes.len();
        let scores = mcd_scores(&passes)?;
        for y in inner.y..inner.bottom() {
            for x in inner.x..inner.right() {
                let s = scores.pixel(x, y);
                note(if cfg.kind.uses_hierarchy() {
                    underclassify(s, cfg.tau)
                } else {
                    HierarchyNode::Leaf(CategoryId::ALL[argmax(s)])
                });
            }
        }
    } else {
        let out = seg.segment(patch, Resolution::High, None)?;
        passes_run = 1;
        for y in inner.y..inner.bottom() {
            for x in inner.x..inner.right() {
                note(if cfg.kind.uses_hierarchy() {
                    underclassify(out.softmax.pixel(x, y), cfg.tau)
                } else {
                    HierarchyNode::Leaf(out.labels.get(x, y))
                });
            }
        }
    }

    let elapsed_s = match cfg.timing {
        Timing::Wall => start.elapsed().as_secs_f64(),
        Timing::Modeled { seconds_per_pixel } => (patch.area() * passes_run) as f64 * seconds_per_pixel,
    };
    Ok(MonitorVerdict {
        accepted: reason == VerdictReason::Clean,
        reason,
        elapsed_s,
    })
}

/// Low-resolution-to-high-resolution re-segmentation check.
pub fn monitor_lhd(c: &Candidate, seg: &dyn Segmenter, cfg: &MonitorConfig) -> Result<MonitorVerdict> {
    monitor_composed(
        c,
        seg,
        &MonitorConfig {
            kind: MonitorKind::Lhd,
            ..*cfg
        },
    )
}

/// Class-hierarchy check built on the LHD patch.
pub fn monitor_ch(c: &Candidate, seg: &dyn Segmenter, cfg: &MonitorConfig) -> Result<MonitorVerdict> {
    monitor_composed(
        c,
        seg,
        &MonitorConfig {
            kind: MonitorKind::LhdCh,
            ..*cfg
        },
    )
}
