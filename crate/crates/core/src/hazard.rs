//! Hazard scoring and ranking of landing candidates.
//!
//! `h = α·h_s + (1 − α)·h_d`, where `h_s` is the score-weighted category mix
//! inside the clearance square and `h_d` grows linearly as the nearest
//! forbidden pixel approaches the safety radius.

use serde::{Deserialize, Serialize};

use crate::camera::{CameraModel, SafetyRadiusConfig};
use crate::candidates::{Candidate, ForbiddenMap};
use crate::error::{Error, Result, Violations};
use crate::labels::{CategoryId, SemanticMap, NUM_CATEGORIES};

/// Per-category landing hazard scores for the authorized categories.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CategoryScores {
    pub tree: f64,
    pub background: f64,
    pub human: f64,
    pub low_vegetation: f64,
}

impl Default for CategoryScores {
    fn default() -> Self {
        CategoryScores {
            tree: 3.0,
            background: 2.0,
            human: 1.0,
            low_vegetation: 0.0,
        }
    }
}

impl CategoryScores {
    /// Score of an authorized category; `None` for unsafe categories.
    pub fn get(&self, c: CategoryId) -> Option<f64> {
        match c {
            CategoryId::Tree => Some(self.tree),
            CategoryId::Background => Some(self.background),
            CategoryId::Human => Some(self.human),
            CategoryId::LowVegetation => Some(self.low_vegetation),
            _ => None,
        }
    }

    pub fn max(&self) -> f64 {
        self.tree.max(self.background).max(self.human).max(self.low_vegetation)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HazardWeights {
    pub alpha: f64,
    pub scores: CategoryScores,
    /// Distance (meters) beyond which the distance hazard is 0; `None` means 3R.
    pub d_max_m: Option<f64>,
    /// Clamp `h_d` to 1 when the nearest forbidden pixel is closer than R
    /// instead of failing. Needed when clearance squares are narrower than 2R.
    pub clamp_inside_radius: bool,
}

impl Default for HazardWeights {
    fn default() -> Self {
        HazardWeights {
            alpha: 0.5,
            scores: CategoryScores::default(),
            d_max_m: None,
            clamp_inside_radius: false,
        }
    }
}

impl HazardWeights {
    pub fn d_max(&self, radius_m: f64) -> f64 {
        self.d_max_m.unwrap_or(3.0 * radius_m)
    }

    pub fn validate(&self, safety: &SafetyRadiusConfig) -> Result<()> {
        let mut v = Violations::default();
        v.check((0.0..=1.0).contains(&self.alpha), || {
            format!("hazard.alpha must be in [0, 1] (got {})", self.alpha)
        });
        let s = self.scores;
        v.check(
            [s.tree, s.background, s.human, s.low_vegetation]
                .iter()
                .all(|&x| x >= 0.0),
            || "hazard.scores must all be >= 0".into(),
        );
        v.check(s.max() > 0.0, || "hazard.scores must have a positive maximum".into());
        let d_max = self.d_max(safety.radius_m);
        v.check(d_max > safety.radius_m, || {
            format!(
                "hazard.d_max_m ({d_max}) must exceed the safety radius ({})",
                safety.radius_m
            )
        });
        v.into_result()
    }
}

/// A candidate with its hazard terms and 1-based rank.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoredCandidate {
    pub candidate: Candidate,
    pub h_s: f64,
    pub h_d: f64,
    pub h: f64,
    pub rank: usize,
}

/// Score-weighted category fractions inside the clearance square, normalized to [0, 1].
pub fn semantic_hazard(c: &Candidate, seg: &SemanticMap, w: &HazardWeights) -> Result<f64> {
    let sq = c.square();
    if c.x < c.half() || c.y < c.half() || !sq.fits_in(seg.width(), seg.height()) {
        return Err(Error::inconsistent(format!(
            "candidate {} square {sq:?} is outside the {}x{} map",
            c.id,
            seg.width(),
            seg.height()
        )));
    }
    let hist = seg.histogram(sq);
    let mut weighted = 0.0;
    for (i, &n) in hist.iter().enumerate().take(NUM_CATEGORIES) {
        if n == 0 {
            continue;
        }
        let cat = CategoryId::ALL[i];
        let s = w
            .scores
            .get(cat)
            .ok_or_else(|| Error::inconsistent(format!("candidate {} square holds {n} {} pixels", c.id, cat.name())))?;
        weighted += n as f64 * s;
    }
    Ok((weighted / sq.area() as f64 / w.scores.max()).clamp(0.0, 1.0))
}

/// Ground distance (meters) from the candidate center to the nearest forbidden
/// pixel, searching no farther than `limit_m`. Pixel distances are converted
/// with the ground size of the candidate's row. Returns `None` when nothing
/// forbidden lies within the limit.
pub fn forbidden_distance(c: &Candidate, fmap: &ForbiddenMap, delta_m: f64, limit_m: f64) -> Option<f64> {
    let reach = (limit_m / delta_m).ceil() as usize;
    let (w, h) = (fmap.width(), fmap.height());
    let x0 = c.x.saturating_sub(reach);
    let x1 = (c.x + reach).min(w - 1);
    let y0 = c.y.saturating_sub(reach);
    let y1 = (c.y + reach).min(h - 1);
    let mut best: Option<usize> = None;
    for y in y0..=y1 {
        let dy = y.abs_diff(c.y);
        for x in x0..=x1 {
            if fmap.get(x, y) {
                let dx = x.abs_diff(c.x);
                let d2 = dx * dx + dy * dy;
                if best.is_none_or(|b| d2 < b) {
                    best = Some(d2);
                }
            }
        }
    }
    best.map(|d2| (d2 as f64).sqrt() * delta_m).filter(|&d| d < limit_m)
}

/// Linear distance hazard: 1 at `d = R`, 0 from `d = d_max` on.
pub fn distance_hazard_from(d: Option<f64>, radius_m: f64, d_max: f64) -> f64 {
    match d {
        Some(d) if d < d_max => ((d - d_max) / (radius_m - d_max)).clamp(0.0, 1.0),
        _ => 0.0,
    }
}

pub fn distance_hazard(
    c: &Candidate,
    fmap: &ForbiddenMap,
    cam: &CameraModel,
    safety: &SafetyRadiusConfig,
    w: &HazardWeights,
) -> Result<f64> {
    let d_max = w.d_max(safety.radius_m);
    let delta = cam.ground_size_at_row(c.y);
    let d = forbidden_distance(c, fmap, delta, d_max);
    if let Some(d) = d {
        // Tolerate float noise right at the boundary.
        if d < safety.radius_m * (1.0 - 1e-9) {
            if w.clamp_inside_radius {
                return Ok(1.0);
            }
            return Err(Error::inconsistent(format!(
                "candidate {} at ({}, {}) is {d:.3} m from a forbidden pixel, inside R = {} m",
                c.id, c.x, c.y, safety.radius_m
            )));
        }
    }
    Ok(distance_hazard_from(d, safety.radius_m, d_max))
}

/// Ascending-hazard order. Ties fall back to `h_s`, then row, then column.
pub fn rank_order(a: &ScoredCandidate, b: &ScoredCandidate) -> std::cmp::Ordering {
    a.h.total_cmp(&b.h)
        .then(a.h_s.total_cmp(&b.h_s))
        .then(a.candidate.y.cmp(&b.candidate.y))
        .then(a.candidate.x.cmp(&b.candidate.x))
}

pub fn rank_candidates(
    cands: &[Candidate],
    seg: &SemanticMap,
    fmap: &ForbiddenMap,
    cam: &CameraModel,
    safety: &SafetyRadiusConfig,
    w: &HazardWeights,
) -> Result<Vec<ScoredCandidate>> {
    w.validate(safety)?;
    let mut scored = cands
        .iter()
        .map(|c| {
            let h_s = semantic_hazard(c, seg, w)?;
            let h_d = distance_hazard(c, fmap, cam, safety, w)?;
            Ok(ScoredCandidate {
                candidate: *c,
                h_s,
                h_d,
                h: w.alpha * h_s + (1.0 - w.alpha) * h_d,
                rank: 0,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    scored.sort_by(rank_order);
    for (i, s) in scored.iter_mut().enumerate() {
        s.rank = i + 1;
    }
    Ok(scored)
}
